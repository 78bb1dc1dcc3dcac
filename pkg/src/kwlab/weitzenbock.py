"""Energy functionals, instanton charge and Weitzenbock identity checks.

Norms are the Frobenius norm ``|X|^2 = -Tr X^2`` (anti-hermitian X), sums run
over all ordered index pairs, and integrals use the midpoint rule of
:func:`kwlab.fields.site_integral`.

The t-family identity checked here reads

    int [ c/t |V+(t)|^2 + c t |V-(t)|^2 + |W|^2 ]
        = I + (t - 1/t) / (4 (t + 1/t)) * int eps_ijkl Re Tr F_ij F_kl,

with ``c = 1/(t + 1/t)``, ``I = int (1/2 |V|^2 + |W|^2)`` and ``|V+|^2`` summed
over all ``(i, j)``.  It holds after integration by parts, so it is exact on
a closed grid only when the derivative obeys a discrete product rule; the
Fourier-spectral scheme does on band-limited fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fields as fl
from . import residuals as rs
from .liealg import commutator, norm_sq

T_POLE_GUARD = 1e-6
CHERN_NORMALIZATION = 1.0 / (32.0 * np.pi ** 2)


@dataclass
class EnergyBreakdown:
    terms: dict[str, float]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.terms.items():
            if v < 0:
                raise ValueError(f"energy term {k} is negative ({v})")

    @property
    def total(self) -> float:
        return float(sum(self.terms.values()))

    def to_dict(self) -> dict:
        return {"terms": dict(self.terms), "total": self.total, "meta": self.meta}


@dataclass(frozen=True)
class ChernCharge:
    value: float
    reference: str
    density_integral: float = 0.0

    def __float__(self) -> float:
        return self.value

    def to_dict(self) -> dict:
        return {"value": self.value, "reference": self.reference, "eps_tr_ff": self.density_integral}


@dataclass(frozen=True)
class IdentityCheck:
    """Both sides of an identity and the relative discrepancy ``|lhs - rhs| / max(1, |scale|)``."""

    lhs: float
    rhs: float
    discrepancy: float
    details: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.discrepancy

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "discrepancy": self.discrepancy, "details": self.details}


def _require_closed(cfg: fl.FieldConfiguration, what: str) -> None:
    if not cfg.grid.is_closed:
        raise ValueError(f"{what} needs a closed (fully periodic) grid; use the half-space variants otherwise")


def _integrate(density, cfg, mask=None) -> float:
    return fl.site_integral(density, cfg.grid, mask)


# --- closed grids -------------------------------------------------------------------

def energy_from_residuals(cfg: fl.FieldConfiguration) -> float:
    """``I = int (1/2 sum_ij |V_ij|^2 + |W|^2)`` from :func:`kwlab.residuals.kw_residual`."""
    _require_closed(cfg, "energy_from_residuals")
    return rs.kw_residual(cfg).squared_integral()


def energy_expanded(cfg: fl.FieldConfiguration) -> EnergyBreakdown:
    """Sum-of-squares form of ``I`` on a flat closed grid (the Ricci term vanishes)."""
    _require_closed(cfg, "energy_expanded")
    F = fl.curvature(cfg)
    D = fl.covariant_derivative(cfg)
    comm = fl.wedge_square_components(cfg.phi)
    terms = {
        "F2": 0.5 * _integrate(np.sum(norm_sq(F), axis=(0, 1)), cfg),
        "Dphi2": _integrate(np.sum(norm_sq(D), axis=(0, 1)), cfg),
        "ricci": 0.0,
        "comm2": 0.5 * _integrate(np.sum(norm_sq(comm), axis=(0, 1)), cfg),
    }
    return EnergyBreakdown(terms, {"scheme": cfg.grid.scheme, "grid": cfg.grid.to_dict()})


def chern_density(F: np.ndarray, orientation: int = 1) -> np.ndarray:
    """``eps_ijkl Re Tr F_ij F_kl`` per site (4d)."""
    eps = fl.levi_civita(4) * orientation
    return np.real(np.einsum("ijkl,ij...ab,kl...ba->...", eps, F, F))


def chern_charge(cfg: fl.FieldConfiguration, reference: fl.FieldConfiguration | None = None,
                 mask: np.ndarray | None = None) -> ChernCharge:
    """``P = (1/32 pi^2) int eps_ijkl Tr F_ij F_kl``.

    On a half-space (non-closed) grid only differences are meaningful, so a
    ``reference`` configuration on the same grid is required and the result is
    ``P(cfg) - P(reference)`` over the interior sites.
    """
    if cfg.grid.ndim != 4:
        raise ValueError("chern_charge needs a 4d configuration")
    o = cfg.grid.orientation
    if cfg.grid.is_closed and reference is None:
        q = _integrate(chern_density(fl.curvature(cfg), o), cfg, mask)
        return ChernCharge(CHERN_NORMALIZATION * q, "closed grid: trivial bundle", q)
    if reference is None:
        raise ValueError("chern_charge on a grid with boundary needs a reference configuration")
    if reference.grid != cfg.grid:
        raise ValueError("reference configuration lives on a different grid")
    m = fl.interior_mask(cfg.grid) if mask is None else fl.interior_mask(cfg.grid) & mask
    q = _integrate(chern_density(fl.curvature(cfg), o) - chern_density(fl.curvature(reference), o), cfg, m)
    label = str(reference.meta.get("solution", reference.meta.get("label", "declared reference")))
    return ChernCharge(CHERN_NORMALIZATION * q, f"relative to {label}", q)


def t_coefficients(t: float) -> tuple[float, float, float]:
    """``(c/t, c t, J)`` with ``c = 1/(t + 1/t)`` and ``J = (t - 1/t) / (4 (t + 1/t))``."""
    t = float(t)
    if t == 0 or not np.isfinite(t):
        raise ValueError("t must be a finite nonzero real number")
    s = t + 1.0 / t
    if abs(s) < T_POLE_GUARD:
        raise ValueError("t too close to a pole of the identity coefficients")
    return 1.0 / (t * s), t / s, (t - 1.0 / t) / (4.0 * s)


def t_identity_check(cfg: fl.FieldConfiguration, t: float) -> IdentityCheck:
    """Relative discrepancy of the t-family Weitzenbock identity on a closed grid."""
    _require_closed(cfg, "t_identity_check")
    a, b, J = t_coefficients(t)
    F, G, H, W = rs.kw_parts(cfg)
    o = cfg.grid.orientation
    plus, minus = rs.t_family_parts(G, H, t, o)
    w2 = _integrate(norm_sq(W), cfg)
    lhs = a * _integrate(np.sum(norm_sq(plus), axis=(0, 1)), cfg) \
        + b * _integrate(np.sum(norm_sq(minus), axis=(0, 1)), cfg) + w2
    V = G - fl.hodge_star(H, 4, 2, o)
    I = 0.5 * _integrate(np.sum(norm_sq(V), axis=(0, 1)), cfg) + w2
    q = _integrate(chern_density(F, o), cfg)
    rhs = I + J * q
    return IdentityCheck(lhs, rhs, abs(lhs - rhs) / max(1.0, abs(I)),
                         {"t": float(t), "I": I, "J": J, "P": CHERN_NORMALIZATION * q,
                          "scheme": cfg.grid.scheme})


def expanded_identity_check(cfg: fl.FieldConfiguration) -> IdentityCheck:
    """``energy_from_residuals`` versus ``energy_expanded.total`` (no topological term at t0)."""
    I = energy_from_residuals(cfg)
    Iexp = energy_expanded(cfg).total
    return IdentityCheck(I, Iexp, abs(I - Iexp) / max(1.0, abs(I)), {"scheme": cfg.grid.scheme})


@dataclass(frozen=True)
class VanishingReport:
    t1: float
    t2: float
    residual_t1: float
    chern: float
    residual_t2: float
    predicted_bound: float
    tol_chern: float
    tol_t2: float

    @property
    def passed(self) -> bool:
        return abs(self.chern) <= self.tol_chern and self.residual_t2 <= self.tol_t2

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def vanishing_consequence_check(cfg: fl.FieldConfiguration, t1: float, t2: float, tol: float = 1e-8,
                                tol_chern: float = 1e-6, tol_t2: float = 1e-6) -> VanishingReport:
    """Closed-grid consequence chain: solving at ``t1`` forces ``P = 0`` and solving at ``t2``.

    From the identity at ``t1``, ``I + J(t1) q`` is bounded by the weighted
    squared ``t1``-residuals, and both ``I`` and ``J(t1) q`` are sign-definite
    on a trivial bundle, so each is bounded.  ``predicted_bound`` is the
    resulting bound on the ``t2`` left-hand side, ``|I| + |J(t2) q|``.
    """
    _require_closed(cfg, "vanishing_consequence_check")
    r1 = rs.kw_t_residual(cfg, t1)
    if r1.max_norm > tol:
        raise ValueError(f"configuration does not solve the t1={t1} equations (residual {r1.max_norm:.3e} > {tol})")
    P = chern_charge(cfg)
    r2 = rs.kw_t_residual(cfg, t2)
    I = energy_from_residuals(cfg)
    _, _, J2 = t_coefficients(t2) if np.isfinite(t2) else (0.0, 0.0, 0.25)
    bound = abs(I) + abs(J2 * P.density_integral)
    return VanishingReport(float(t1), float(t2), r1.max_norm, P.value, r2.max_norm, bound, tol_chern, tol_t2)


def closed_solution_corpus(grid: fl.Grid, dim: int = 2) -> dict[str, fl.FieldConfiguration]:
    """Exact t-independent KW solutions on a closed 4d grid, plus one near miss.

    ``zero``; ``abelian_pure_gauge`` (``A = d theta * t3``, flat);
    ``commuting_constant`` (``A = 0``, constant ``phi`` along ``t3``) and its
    image under ``g = exp(theta t1)`` with exact ``dg``.  ``rough_gauge_image``
    uses a large ``theta`` whose transform is not resolved by the grid, so it
    fails the solving precondition.
    """
    from .liealg import principal_su2

    if grid.ndim != 4 or not grid.is_closed:
        raise ValueError("the corpus lives on a closed 4d grid")
    t = principal_su2(dim)
    x = grid.points()
    z = fl.zeros(grid, dim)

    def theta(amp):
        s = np.sin(x[..., 1] - x[..., 2])
        th = amp * (np.sin(x[..., 0]) + np.cos(x[..., 1] - x[..., 2]))
        dth = amp * np.stack([np.cos(x[..., 0]), -s, s, np.zeros_like(s)])
        return th, dth

    th, dth = theta(0.5)
    pure = z.replace(A=np.einsum("i...,ab->i...ab", dth, t.t3))
    phi = np.einsum("a,ij->aij", [0.3, -0.2, 0.5, 0.1], t.t3)
    const = z.replace(phi=np.broadcast_to(phi[:, None, None, None, None], z.phi.shape))
    out = {"zero": z, "abelian_pure_gauge": pure, "commuting_constant": const}
    for name, amp in (("gauge_image", 0.3), ("rough_gauge_image", 1.0)):
        th, dth = theta(amp)
        g = fl.expm_anti_hermitian(th[..., None, None] * t.t1)
        dg = np.einsum("i...,ab,...bc->i...ac", dth, t.t1, g)
        out[name] = fl.gauge_transform(const, g, dg)
    return out


# --- half-space ---------------------------------------------------------------------

def _halfspace_mask(cfg: fl.FieldConfiguration, mask: np.ndarray | None, r_min: float | None) -> np.ndarray:
    g = cfg.grid
    if g.ndim != 4 or cfg.n_phi != 4:
        raise ValueError("half-space energies need a 4d (x1, x2, x3, y) grid with four one-form components")
    m = fl.interior_mask(g)
    if mask is not None:
        m = m & mask
    if r_min is not None:
        m = m & (g.coords(3) >= r_min)[None, None, None, :]
    return m


def _y_slabs(cfg: fl.FieldConfiguration, mask: np.ndarray, slab: int):
    """Split along the clamped y axis into sub-configurations with a one-site halo.

    Central differences at a slab's own sites only touch the halo, so every
    density evaluated on the slab equals the full-grid value; the halo sites
    themselves are masked out.
    """
    g = cfg.grid
    ny = g.shape[3]
    if g.boundary[3] != fl.CLAMPED or ny <= slab + 2:
        yield cfg, mask
        return
    for k0 in range(0, ny, slab):
        k1 = min(ny, k0 + slab)
        lo, hi = max(0, k0 - 1), min(ny, k1 + 1)
        if hi - lo < 4:  # grids need four sites per axis
            lo = max(0, hi - 4)
            hi = min(ny, lo + 4)
        sl = (slice(None),) * 4 + (slice(lo, hi),)
        sub_grid = fl.Grid(g.shape[:3] + (hi - lo,), g.spacing, g.origin[:3] + (g.origin[3] + lo * g.spacing[3],),
                           g.boundary, g.scheme, g.orientation)
        sub = fl.FieldConfiguration(sub_grid, cfg.A[sl], cfg.phi[sl],
                                    None if cfg.dA is None else cfg.dA[(slice(None),) + sl],
                                    None if cfg.dphi is None else cfg.dphi[(slice(None),) + sl])
        m = np.zeros(sub_grid.shape, dtype=bool)
        m[..., k0 - lo:k1 - lo] = mask[..., k0:k1]
        yield sub, m


def _halfspace_densities(cfg: fl.FieldConfiguration, m: np.ndarray) -> dict[str, float]:
    """Integrated ``I'`` terms and the KW energy ``1/2 |V|^2 + |W|^2`` over ``m``."""
    F, G, H, W = rs.kw_parts(cfg)
    o = cfg.grid.orientation
    out = {"kw": 0.5 * _integrate(np.sum(norm_sq(G - fl.hodge_star(H, 4, 2, o)), axis=(0, 1)), cfg, m)
           + _integrate(norm_sq(W), cfg, m)}
    del G, H, W
    D = fl.covariant_derivative(cfg)
    phi = cfg.phi
    Wa = np.stack([D[3, a] + commutator(phi[(a + 1) % 3], phi[(a + 2) % 3]) for a in range(3)])
    comm_y = commutator(phi[3][None], phi[:3])
    out.update({
        "F2": 0.5 * _integrate(np.sum(norm_sq(F), axis=(0, 1)), cfg, m),
        "Dphi_ab": _integrate(np.sum(norm_sq(D[:3, :3]), axis=(0, 1)), cfg, m),
        "Dphi_y": _integrate(np.sum(norm_sq(D[:, 3]), axis=0), cfg, m),
        "comm_y": _integrate(np.sum(norm_sq(comm_y), axis=0), cfg, m),
        "W_a": _integrate(np.sum(norm_sq(Wa), axis=0), cfg, m),
    })
    return out


def _accumulate(cfg, m, slab: int) -> dict[str, float]:
    total: dict[str, float] = {}
    for sub, sm in _y_slabs(cfg, m, slab):
        if not sm.any():
            continue
        for k, v in _halfspace_densities(sub, sm).items():
            total[k] = total.get(k, 0.0) + v
    return total or {k: 0.0 for k in ("kw", "F2", "Dphi_ab", "Dphi_y", "comm_y", "W_a")}


def halfspace_energy_Iprime(cfg: fl.FieldConfiguration, mask: np.ndarray | None = None,
                            r_min: float | None = None, slab: int = 8) -> EnergyBreakdown:
    """Sum of squares ``I'`` on ``(x1, x2, x3, y)``, indices a, b in {1, 2, 3}.

    Terms: ``1/2 |F_ij|^2``, ``|D_a phi_b|^2``, ``|D_i phi_y|^2``,
    ``|[phi_y, phi_a]|^2`` and ``|W_a|^2`` with
    ``W_a = D_y phi_a + 1/2 eps_abc [phi_b, phi_c]``.  Evaluated in y-slabs of
    ``slab`` sites to bound memory.
    """
    m = _halfspace_mask(cfg, mask, r_min)
    terms = _accumulate(cfg, m, slab)
    terms.pop("kw")
    return EnergyBreakdown(terms, {"sites": int(np.count_nonzero(m)), "r_min": r_min})


def halfspace_identity_check(cfg: fl.FieldConfiguration, background: fl.FieldConfiguration | None = None,
                             mask: np.ndarray | None = None, r_min: float | None = None,
                             atol: float = 1e-14, slab: int = 8) -> IdentityCheck:
    """``int (1/2 |V|^2 + |W|^2)`` against ``I'`` over the excised interior.

    The two differ by a total derivative, so the check is meaningful when
    ``cfg`` deviates from ``background`` (a model solution) only on a compact
    set well inside the evaluated region; that is enforced when
    ``background`` is given.
    """
    m = _halfspace_mask(cfg, mask, r_min)
    if background is not None:
        dev = np.max(np.abs(cfg.A - background.A), axis=(0, -2, -1)) + \
            np.max(np.abs(cfg.phi - background.phi), axis=(0, -2, -1))
        inner = m.copy()
        for axis in range(4):
            for shift in (1, -1):
                inner &= np.roll(m, shift, axis=axis)
        if np.any(dev[~inner] > atol):
            raise ValueError("deviation from the background reaches the excision layer or grid boundary")
    terms = _accumulate(cfg, m, slab)
    lhs = terms.pop("kw")
    ip = float(sum(terms.values()))
    return IdentityCheck(lhs, ip, abs(lhs - ip) / max(1.0, abs(ip)),
                         {"terms": terms, "orientation": cfg.grid.orientation})


def perturbed_nahm_pole_check(h: float, seed: int = 11, radius: float = 0.25, amplitude: float = 0.05,
                              dim: int = 2, center_y: float = 1.0, slab: int = 2) -> IdentityCheck:
    """Half-space identity for the Nahm pole plus a compact bump of ``radius`` centred at ``y = center_y``.

    The grid (spacing ``h``) covers the bump's support plus a two-site
    margin in x and y, so the deviation from the pole stays inside the
    evaluated interior; ``radius / h`` should be an integer so refinements
    nest.  Uses numerical partials of the sampled fields.
    """
    from .liealg import principal_su2
    from .solutions import halfspace_grid, nahm_pole

    span = int(round(2 * radius / h))
    nx, ny = span + 2, span + 5
    g = halfspace_grid(nx, ny, h, center_y - radius - 2 * h, (-(nx // 2) * h,) * 3)
    bg, _ = nahm_pole(principal_su2(dim)).sample(g, r_min=max(1.5 * h, center_y - radius - 2 * h))
    cfg = bg + fl.bump_perturbation(g, seed, (0.0, 0.0, 0.0, center_y), radius, amplitude)
    out = halfspace_identity_check(cfg, bg, slab=slab)
    out.details.update({"h": h, "seed": seed, "radius": radius, "amplitude": amplitude, "dim": dim,
                        "grid": g.to_dict()})
    return out
