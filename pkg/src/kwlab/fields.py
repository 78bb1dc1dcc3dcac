"""Site-based field storage and discrete gauge calculus on rectangular grids.

Layout conventions
------------------
* A matrix-valued function on a grid is an array ``(*grid.shape, N, N)``.
* ``A`` holds connection components ``(ndim, *shape, N, N)``; ``A[i]`` is ``A_i``.
* ``phi`` holds adjoint one-form components ``(n_phi, *shape, N, N)``.  In the
  Bogomolny setting ``n_phi == 1`` and ``phi[0]`` is the scalar Higgs field.
* Partial derivative arrays put the derivative index first: ``dA[i, j] = d_i A_j``.
* Two-forms are full antisymmetric arrays ``F[i, j]`` with ``F[j, i] = -F[i, j]``.

Derivatives are second-order central differences.  Periodic axes may instead
use the Fourier-spectral derivative (``Grid(scheme="spectral")``), which obeys
the product rule exactly on band-limited fields the grid resolves.  Clamped
axes always use central differences and lose one site per side; the lost
layer is reported through :func:`interior_mask`.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .liealg import anti_hermitian_part, commutator

PERIODIC = "periodic"
CLAMPED = "clamped"
SCHEMES = ("central", "spectral")


@dataclass(frozen=True)
class Grid:
    shape: tuple[int, ...]
    spacing: tuple[float, ...] | float
    origin: tuple[float, ...] | None = None
    boundary: tuple[str, ...] | str = PERIODIC
    scheme: str = "central"
    orientation: int = 1

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        ndim = len(shape)
        if ndim not in (3, 4):
            raise ValueError(f"grids are 3- or 4-dimensional, got ndim={ndim}")
        if min(shape) < 4:
            raise ValueError(f"every axis needs at least 4 sites, got {shape}")
        spacing = self.spacing
        if np.ndim(spacing) == 0:
            spacing = (float(spacing),) * ndim
        spacing = tuple(float(h) for h in spacing)
        if len(spacing) != ndim or min(spacing) <= 0:
            raise ValueError(f"spacing must be positive per axis, got {spacing}")
        origin = (0.0,) * ndim if self.origin is None else tuple(float(o) for o in self.origin)
        boundary = self.boundary
        if isinstance(boundary, str):
            boundary = (boundary,) * ndim
        boundary = tuple(boundary)
        if len(origin) != ndim or len(boundary) != ndim:
            raise ValueError("origin and boundary need one entry per axis")
        if any(b not in (PERIODIC, CLAMPED) for b in boundary):
            raise ValueError(f"boundary modes must be '{PERIODIC}' or '{CLAMPED}'")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown derivative scheme {self.scheme!r}")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "boundary", boundary)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def is_closed(self) -> bool:
        return all(b == PERIODIC for b in self.boundary)

    def coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing[axis] * np.arange(self.shape[axis])

    def points(self) -> np.ndarray:
        """Site coordinates, shape ``(*shape, ndim)``."""
        return np.stack(np.meshgrid(*[self.coords(a) for a in range(self.ndim)], indexing="ij"), axis=-1)

    def period(self, axis: int) -> float:
        return self.shape[axis] * self.spacing[axis]

    def refine(self, factor: int = 2) -> "Grid":
        """Same physical box with ``factor`` times more sites per clamped span."""
        shape = []
        for n, b in zip(self.shape, self.boundary):
            shape.append(n * factor if b == PERIODIC else (n - 1) * factor + 1)
        return Grid(tuple(shape), tuple(h / factor for h in self.spacing), self.origin,
                    self.boundary, self.scheme, self.orientation)

    def to_dict(self) -> dict:
        return {"shape": list(self.shape), "spacing": list(self.spacing), "origin": list(self.origin),
                "boundary": list(self.boundary), "scheme": self.scheme, "orientation": self.orientation}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(tuple(d["shape"]), tuple(d["spacing"]), tuple(d["origin"]), tuple(d["boundary"]),
                   d.get("scheme", "central"), d.get("orientation", 1))


def interior_mask(grid: Grid, layer: int = 1) -> np.ndarray:
    """Sites where the stencil fits: ``layer`` sites dropped per side of clamped axes."""
    mask = np.ones(grid.shape, dtype=bool)
    for axis, b in enumerate(grid.boundary):
        if b == CLAMPED:
            idx = [slice(None)] * grid.ndim
            idx[axis] = slice(0, layer)
            mask[tuple(idx)] = False
            idx[axis] = slice(grid.shape[axis] - layer, None)
            mask[tuple(idx)] = False
    return mask


def site_integral(density: np.ndarray, grid: Grid, mask: np.ndarray | None = None) -> float:
    """Midpoint-rule quadrature of a real site density (site sum times cell volume)."""
    density = np.asarray(density)
    if mask is not None:
        density = density[mask]
    return float(np.sum(density) * grid.cell_volume)


# --- derivatives -------------------------------------------------------------

def _spatial_axis(f: np.ndarray, grid: Grid, axis: int) -> int:
    return f.ndim - 2 - grid.ndim + axis


def _wavenumbers(n: int, h: float) -> np.ndarray:
    k = 2 * np.pi * np.fft.fftfreq(n, d=h)
    if n % 2 == 0:
        k[n // 2] = 0.0
    return k


def partial(f: np.ndarray, axis: int, grid: Grid) -> np.ndarray:
    """Derivative of a matrix field along ``axis``; leading axes are carried along."""
    ax = _spatial_axis(f, grid, axis)
    h = grid.spacing[axis]
    if grid.scheme == "spectral" and grid.boundary[axis] == PERIODIC:
        k = _wavenumbers(grid.shape[axis], h)
        shape = [1] * f.ndim
        shape[ax] = -1
        return np.fft.ifft(np.fft.fft(f, axis=ax) * (1j * k.reshape(shape)), axis=ax)
    return (np.roll(f, -1, axis=ax) - np.roll(f, 1, axis=ax)) / (2.0 * h)


def gradient(f: np.ndarray, grid: Grid) -> np.ndarray:
    """All partials, derivative index first: ``out[i] = d_i f``."""
    out = np.empty((grid.ndim,) + np.shape(f), dtype=complex)
    for i in range(grid.ndim):
        out[i] = partial(f, i, grid)
    return out


def _frozen(x) -> np.ndarray:
    """Read-only complex array; already-frozen complex arrays are shared, not copied."""
    if isinstance(x, np.ndarray) and x.dtype == complex and not x.flags.writeable:
        return x
    arr = np.array(x, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FieldConfiguration:
    """Sampled connection ``A`` and adjoint one-form ``phi`` on a grid.

    ``dA``/``dphi`` optionally carry exact partial derivatives (for example
    from an analytic solution); when present they replace finite differences.
    """

    grid: Grid
    A: np.ndarray
    phi: np.ndarray
    dA: np.ndarray | None = None
    dphi: np.ndarray | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        g = self.grid
        A = _frozen(self.A)
        phi = _frozen(self.phi)
        if A.ndim != g.ndim + 3 or A.shape[0] != g.ndim or A.shape[1:-2] != g.shape:
            raise ValueError(f"A must have shape (ndim, *shape, N, N); got {A.shape} on {g.shape}")
        N = A.shape[-1]
        if A.shape[-2] != N:
            raise ValueError("A components must be square matrices")
        if phi.ndim != g.ndim + 3 or phi.shape[1:] != A.shape[1:]:
            raise ValueError(f"phi must have shape (n_phi, *shape, {N}, {N}); got {phi.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "phi", phi)
        for name, ncomp in (("dA", g.ndim), ("dphi", phi.shape[0])):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = _frozen(arr)
            if arr.shape != (g.ndim, ncomp) + A.shape[1:]:
                raise ValueError(f"{name} has shape {arr.shape}, expected {(g.ndim, ncomp) + A.shape[1:]}")
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.A.shape[-1]

    @property
    def n_phi(self) -> int:
        return self.phi.shape[0]

    def replace(self, **changes) -> "FieldConfiguration":
        kw = dict(grid=self.grid, A=self.A, phi=self.phi, dA=self.dA, dphi=self.dphi, meta=dict(self.meta))
        kw.update(changes)
        return FieldConfiguration(**kw)

    def __add__(self, other: "FieldConfiguration") -> "FieldConfiguration":
        """Sum of two configurations; exact partials survive only where both sides carry them."""
        if other.grid != self.grid or other.phi.shape != self.phi.shape:
            raise ValueError("configurations live on different grids or layouts")
        def summed(a, b, da, db):
            if da is None and db is None:
                return None
            if da is not None and db is not None:
                return da + db
            out = np.array(da if da is not None else db)
            f = b if da is not None else a
            for i in range(self.grid.ndim):
                out[i] += partial(f, i, self.grid)
            return out

        dA = summed(self.A, other.A, self.dA, other.dA)
        dphi = summed(self.phi, other.phi, self.dphi, other.dphi)
        return FieldConfiguration(self.grid, self.A + other.A, self.phi + other.phi, dA, dphi)


def zeros(grid: Grid, dim: int = 2, n_phi: int | None = None) -> FieldConfiguration:
    n_phi = grid.ndim if n_phi is None else n_phi
    shape = grid.shape + (dim, dim)
    return FieldConfiguration(grid, np.zeros((grid.ndim,) + shape, complex), np.zeros((n_phi,) + shape, complex))


def connection_partials(cfg: FieldConfiguration) -> np.ndarray:
    return cfg.dA if cfg.dA is not None else gradient(cfg.A, cfg.grid)


def higgs_partials(cfg: FieldConfiguration) -> np.ndarray:
    return cfg.dphi if cfg.dphi is not None else gradient(cfg.phi, cfg.grid)


def curvature(cfg: FieldConfiguration) -> np.ndarray:
    """``F_ij = d_i A_j - d_j A_i + [A_i, A_j]``, full antisymmetric array."""
    n = cfg.grid.ndim
    dA = connection_partials(cfg)
    A = cfg.A
    F = np.zeros((n, n) + A.shape[1:], dtype=complex)
    for i, j in itertools.combinations(range(n), 2):
        Fij = dA[i, j] - dA[j, i] + commutator(A[i], A[j])
        F[i, j] = Fij
        F[j, i] = -Fij
    return F


def covariant_derivative(cfg: FieldConfiguration, target: np.ndarray | None = None,
                         dtarget: np.ndarray | None = None) -> np.ndarray:
    """``D_i t_a = d_i t_a + [A_i, t_a]`` for adjoint components ``t`` (default ``cfg.phi``).

    Returns shape ``(ndim, n_target, *shape, N, N)``.
    """
    if target is None:
        target = cfg.phi
        dtarget = higgs_partials(cfg)
    elif dtarget is None:
        dtarget = gradient(target, cfg.grid)
    A = cfg.A
    return dtarget + commutator(A[:, None], target[None, :])


def wedge_square_components(phi: np.ndarray) -> np.ndarray:
    """Components of ``phi ^ phi``: ``(phi ^ phi)_ij = [phi_i, phi_j]``."""
    return commutator(phi[:, None], phi[None, :])


def exterior_covariant(D: np.ndarray) -> np.ndarray:
    """Two-form ``(d_A phi)_ij = D_i phi_j - D_j phi_i`` from ``D[i, j] = D_i phi_j``."""
    return D - np.swapaxes(D, 0, 1)


# --- Hodge star ----------------------------------------------------------------

def levi_civita(n: int) -> np.ndarray:
    eps = np.zeros((n,) * n)
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
        eps[perm] = -1.0 if inversions % 2 else 1.0
    return eps


def hodge_star(components: np.ndarray, ndim: int, degree: int, orientation: int = 1) -> np.ndarray:
    """Euclidean Hodge star on full antisymmetric component arrays.

    ``(*a)_{j...} = (1/k!) eps_{i... j...} a_{i...}`` with ``eps_{12...n} = orientation``.
    The first ``degree`` axes of ``components`` are form indices.
    """
    if ndim not in (3, 4):
        raise ValueError("hodge_star supports ndim 3 or 4")
    if not 0 <= degree <= ndim:
        raise ValueError(f"unsupported degree {degree} in dimension {ndim}")
    components = np.asarray(components)
    eps = levi_civita(ndim) * orientation
    if degree == 0:
        out = np.multiply.outer(eps, components)
    else:
        out = np.tensordot(eps, components, axes=(list(range(degree)), list(range(degree))))
    return out / math.factorial(degree)


def self_dual_part(F: np.ndarray, orientation: int = 1) -> np.ndarray:
    return 0.5 * (F + hodge_star(F, 4, 2, orientation))


def anti_self_dual_part(F: np.ndarray, orientation: int = 1) -> np.ndarray:
    return 0.5 * (F - hodge_star(F, 4, 2, orientation))


# --- gauge transformations --------------------------------------------------

def expm_anti_hermitian(X: np.ndarray) -> np.ndarray:
    """Matrix exponential of anti-hermitian matrices via the eigensystem of ``iX``."""
    w, V = np.linalg.eigh(1j * X)
    return (V * np.exp(-1j * w)[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def gauge_transform(cfg: FieldConfiguration, g: np.ndarray, dg: np.ndarray | None = None,
                    atol: float = 1e-10) -> FieldConfiguration:
    """``A -> g A g^-1 - (dg) g^-1``, ``phi -> g phi g^-1`` for unitary ``g``.

    ``dg`` (shape ``(ndim, *shape, N, N)``) may supply exact derivatives of
    ``g``; otherwise the grid's difference scheme is used.  Stored exact
    partials of ``cfg`` are dropped.
    """
    g = np.asarray(g, dtype=complex)
    if g.shape != cfg.A.shape[1:]:
        raise ValueError(f"gauge field shape {g.shape} does not match {cfg.A.shape[1:]}")
    ginv = np.conj(np.swapaxes(g, -1, -2))
    defect = np.max(np.abs(g @ ginv - np.eye(cfg.dim)))
    if defect > atol:
        raise ValueError(f"gauge transformation is not unitary (defect {defect:.2e})")
    if dg is None:
        dg = gradient(g, cfg.grid)
    A = g @ cfg.A @ ginv - dg @ ginv
    phi = g @ cfg.phi @ ginv
    return FieldConfiguration(cfg.grid, A, phi, meta=dict(cfg.meta))


# --- random test fields -----------------------------------------------------

def _band_limited(rng: np.random.Generator, grid: Grid, lead: tuple[int, ...], dim: int,
                  mode_cutoff: int, traceless: bool):
    """Random trigonometric polynomial and its entry RMS per leading component.

    Coefficients depend only on the seed and cutoff, so the same seed gives
    the same continuum field on every refinement of a periodic box.
    """
    shape = grid.shape
    spec = np.zeros(lead + shape + (dim, dim), dtype=complex)
    modes = [np.r_[0:mode_cutoff + 1, -mode_cutoff:0] % n for n in shape]
    sel = np.ix_(*modes)
    n_modes = tuple(len(m) for m in modes)
    coeff = rng.standard_normal(lead + n_modes + (dim, dim)) + 1j * rng.standard_normal(lead + n_modes + (dim, dim))
    nlead = len(lead)
    axes = tuple(range(nlead, nlead + grid.ndim))
    view = np.moveaxis(spec, axes, tuple(range(grid.ndim)))
    cview = np.moveaxis(coeff, axes, tuple(range(grid.ndim)))
    view[sel] = cview
    field_ = anti_hermitian_part(np.fft.ifftn(spec, axes=axes) * np.prod(shape), traceless=traceless)
    # entry RMS over the box; grid independent whenever the modes are resolved (Parseval)
    rms = np.sqrt(np.mean(np.abs(field_) ** 2, axis=tuple(range(nlead, field_.ndim))))
    return field_, rms


def boundary_envelope(grid: Grid) -> np.ndarray:
    """Smooth bump equal to zero on the outer layer of every clamped axis."""
    env = np.ones(grid.shape)
    for axis, b in enumerate(grid.boundary):
        if b != CLAMPED:
            continue
        n = grid.shape[axis]
        s = (np.arange(n) - 1.0) / (n - 3.0)
        e = np.zeros(n)
        inside = (s > 0) & (s < 1)
        e[inside] = np.exp(-1.0 / (s[inside] * (1 - s[inside]))) * np.exp(4.0)
        shape = [1] * grid.ndim
        shape[axis] = n
        env = env * e.reshape(shape)
    return env


def compact_bump(grid: Grid, center, radius: float, power: int | None = None) -> np.ndarray:
    """Bump supported in a ball, peak value 1.

    ``power=None`` gives the smooth ``exp(1 - 1/(1 - r^2/radius^2))``; an
    integer gives the polynomial ``(1 - r^2/radius^2)^power`` (of class
    ``C^(power-1)``), whose milder high derivatives reach the asymptotic
    convergence regime on coarser grids.
    """
    x = grid.points() - np.asarray(center, dtype=float)
    r2 = np.sum(x ** 2, axis=-1) / radius ** 2
    out = np.zeros(grid.shape)
    inside = r2 < 1
    if power is None:
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    else:
        out[inside] = (1.0 - r2[inside]) ** int(power)
    return out


def random_smooth_field(grid: Grid, seed: int, mode_cutoff: int = 2, amplitude: float = 0.1, dim: int = 2,
                        n_phi: int | None = None, traceless: bool = True,
                        envelope: np.ndarray | None = None) -> FieldConfiguration:
    """Deterministic band-limited su(N) test configuration.

    Each component is a trigonometric polynomial with ``|mode| <= mode_cutoff``
    per axis, scaled so the RMS of its matrix entries over the box equals
    ``amplitude`` (the same scaling on every refinement of a periodic box).  Clamped
    axes are multiplied by :func:`boundary_envelope`; an extra ``envelope``
    array (e.g. :func:`compact_bump`) multiplies everything.
    """
    n_phi = grid.ndim if n_phi is None else n_phi
    rng = np.random.default_rng(seed)
    A, rmsA = _band_limited(rng, grid, (grid.ndim,), dim, mode_cutoff, traceless)
    phi, rmsphi = _band_limited(rng, grid, (n_phi,), dim, mode_cutoff, traceless)
    env = boundary_envelope(grid)
    if envelope is not None:
        env = env * envelope
    parts = []
    for comp, rms in ((A, rmsA), (phi, rmsphi)):
        scale = np.where(rms == 0, 1.0, rms).reshape((-1,) + (1,) * (comp.ndim - 1))
        parts.append(amplitude * comp / scale * env[..., None, None])
    return FieldConfiguration(grid, parts[0], parts[1], meta={"seed": seed, "mode_cutoff": mode_cutoff,
                                                              "amplitude": amplitude})


def bump_perturbation(grid: Grid, seed: int, center, radius: float, amplitude: float = 0.05, dim: int = 2,
                      n_phi: int | None = None, which: str = "both", power: int | None = 4,
                      wave_number: float = 0.5) -> FieldConfiguration:
    """Compactly supported perturbation ``amplitude * bump(x) * (X + sin(w pi x.k / radius) Y)``.

    ``X``, ``Y`` are fixed random su(N) matrices per component (entries of
    modulus <= 1) and ``k`` a fixed random unit vector, all drawn from ``seed``,
    so the perturbation is the same continuum field on every grid.  ``w`` is
    ``wave_number``; ``w = 0`` leaves the constant profile ``X`` only.
    ``which`` selects the perturbed fields: ``"A"``, ``"phi"`` or ``"both"``.
    """
    if which not in ("A", "phi", "both"):
        raise ValueError("which must be 'A', 'phi' or 'both'")
    n_phi = grid.ndim if n_phi is None else n_phi
    rng = np.random.default_rng(seed)

    def mats(k):
        M = anti_hermitian_part(rng.standard_normal((k, dim, dim)) + 1j * rng.standard_normal((k, dim, dim)), True)
        return M / np.max(np.abs(M), axis=(-2, -1), keepdims=True)

    XA, YA, Xp, Yp = mats(grid.ndim), mats(grid.ndim), mats(n_phi), mats(n_phi)
    kvec = rng.standard_normal(grid.ndim)
    kvec /= np.linalg.norm(kvec)
    x = grid.points() - np.asarray(center, dtype=float)
    wave = np.sin(wave_number * np.pi * (x @ kvec) / radius)
    bump = amplitude * compact_bump(grid, center, radius, power)

    def build(X, Y):
        lift = lambda M: M.reshape((len(M),) + (1,) * grid.ndim + (dim, dim))
        return bump[None, ..., None, None] * (lift(X) + wave[None, ..., None, None] * lift(Y))

    A = build(XA, YA) if which in ("A", "both") else np.zeros((grid.ndim,) + grid.shape + (dim, dim), complex)
    phi = build(Xp, Yp) if which in ("phi", "both") else np.zeros((n_phi,) + grid.shape + (dim, dim), complex)
    return FieldConfiguration(grid, A, phi, meta={"seed": seed, "bump_radius": radius, "amplitude": amplitude})


def random_gauge(grid: Grid, seed: int, mode_cutoff: int = 1, amplitude: float = 0.5, dim: int = 2) -> np.ndarray:
    """Smooth ``SU(N)``-valued field ``exp(X)`` with ``X`` a band-limited su(N) field."""
    rng = np.random.default_rng(seed)
    X, rms = _band_limited(rng, grid, (), dim, mode_cutoff, True)
    X = amplitude * X / max(float(rms), 1e-300)
    X = X * boundary_envelope(grid)[..., None, None]
    return expm_anti_hermitian(X)


# --- JSON snapshots -----------------------------------------------------------

def _encode(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape), "real": arr.real.ravel().tolist(), "imag": arr.imag.ravel().tolist()}


def _decode(d: dict) -> np.ndarray:
    return (np.asarray(d["real"]) + 1j * np.asarray(d["imag"])).reshape(d["shape"])


def to_json(cfg: FieldConfiguration) -> str:
    """Text snapshot: grid metadata plus flattened real/imag component arrays (C order)."""
    return json.dumps({"format": "kwlab.field/1", "grid": cfg.grid.to_dict(), "dim": cfg.dim,
                       "A": _encode(cfg.A), "phi": _encode(cfg.phi)})


def from_json(text: str) -> FieldConfiguration:
    d = json.loads(text)
    return FieldConfiguration(Grid.from_dict(d["grid"]), _decode(d["A"]), _decode(d["phi"]))
