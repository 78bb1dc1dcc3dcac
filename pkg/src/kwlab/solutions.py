"""Exact model solutions with analytic field, derivative and curvature evaluators.

Abelian fields use the u(1) generator ``i``: a real function ``f`` is stored as
the 1x1 matrix ``i f``.  With this choice a Dirac monopole of charge ``n`` has
first Chern number ``(i/2pi) \\oint F = n``.

Monopole connections are written in the chart whose Dirac string runs from
each site along ``-z``: ``A = i (n/2) (y, -x, 0) / (r (r + z))`` in coordinates
centred on the site.  Everything downstream consumes ``F`` or ``phi``, which do
not depend on the chart.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fields as fl
from .liealg import Cocharacter, Su2Triple, cocharacter_element, commutator

R3 = "R3 minus sites"
HALF_SPACE = "open half-space y > 0"


@dataclass(frozen=True)
class AnalyticSolution:
    """Closed-form configuration.

    ``evaluator(points)`` returns ``(A, phi, dA, dphi)`` with component axes
    first, e.g. ``A.shape == (ndim, *points.shape[:-1], N, N)`` and
    ``dA[i, j] = d_i A_j``.
    """

    evaluator: Callable
    ndim: int
    dim: int
    n_phi: int
    domain: str
    sites: tuple = ()
    curvature_fn: Callable | None = None
    abelian: Callable | None = None
    label: str = ""

    def _check_domain(self, points: np.ndarray, r_min: float) -> None:
        if self.domain == HALF_SPACE:
            if np.any(points[..., -1] <= r_min):
                raise ValueError(f"evaluation at y <= {r_min} (half-space wall excision)")
        elif self.sites:
            if np.any(~self.regular_mask(points, r_min)):
                raise ValueError(f"evaluation within {r_min} of a singular site")

    def regular_mask(self, points: np.ndarray, r_min: float, include_strings: bool = False) -> np.ndarray:
        """True where ``points`` are at least ``r_min`` from every singularity."""
        points = np.asarray(points, dtype=float)
        ok = np.ones(points.shape[:-1], dtype=bool)
        if self.domain == HALF_SPACE:
            return ok & (points[..., -1] >= r_min)
        for pos in self.sites:
            d = points - np.asarray(pos)
            ok &= np.sqrt(np.sum(d ** 2, axis=-1)) >= r_min
            if include_strings:
                rho = np.sqrt(d[..., 0] ** 2 + d[..., 1] ** 2)
                ok &= ~((rho < r_min) & (d[..., 2] < 0))
        return ok

    def evaluate(self, points, r_min: float = 1e-9):
        points = np.asarray(points, dtype=float)
        self._check_domain(points, r_min)
        return self.evaluator(points)

    def __call__(self, points, r_min: float = 1e-9):
        """``(A, phi, F)`` at ``points``."""
        A, phi, _, _ = self.evaluate(points, r_min)
        return A, phi, self.curvature(points, r_min)

    def curvature(self, points, r_min: float = 1e-9) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        self._check_domain(points, r_min)
        if self.curvature_fn is not None:
            return self.curvature_fn(points)
        A, _, dA, _ = self.evaluator(points)
        n = self.ndim
        F = np.zeros((n, n) + A.shape[1:], dtype=complex)
        for i in range(n):
            for j in range(i + 1, n):
                F[i, j] = dA[i, j] - dA[j, i] + commutator(A[i], A[j])
                F[j, i] = -F[i, j]
        return F

    def sample(self, grid: fl.Grid, r_min: float | None = None, exact_derivatives: bool = False):
        """Sample on ``grid``; returns ``(cfg, mask)``.

        ``mask`` marks sites at least ``r_min`` (default ``2 h``) from every
        site, Dirac string and wall.  Sites within ``h/2`` of a singularity
        hold zeros; every other site holds the exact values.
        """
        if grid.ndim != self.ndim:
            raise ValueError(f"solution is {self.ndim}-dimensional, grid is {grid.ndim}-dimensional")
        if r_min is None:
            r_min = 2.0 * max(grid.spacing)
        if r_min < 1.5 * max(grid.spacing):
            raise ValueError("r_min must be at least 1.5 h so stencils stay clear of singular sites")
        pts = grid.points()
        mask = self.regular_mask(pts, r_min, include_strings=True)
        # only sites essentially on a singularity are zeroed; they lie outside
        # every stencil of the masked region because r_min >= 1.5 h
        regular = self.regular_mask(pts, 0.5 * min(grid.spacing), include_strings=True)
        if self.domain == HALF_SPACE:
            regular &= pts[..., -1] > 0
        safe = np.where(regular[..., None], pts, _far_point(self, pts))
        with np.errstate(all="ignore"):
            A, phi, dA, dphi = self.evaluator(safe)
        zero = ~regular[..., None, None]

        def clean(x):
            x = np.where(zero, 0.0, x)
            x.setflags(write=False)  # handed to FieldConfiguration without a copy
            return x

        A, phi = clean(A), clean(phi)
        dA = clean(dA) if exact_derivatives else None
        dphi = clean(dphi) if exact_derivatives else None
        cfg = fl.FieldConfiguration(grid, A, phi, dA, dphi, meta={"solution": self.label, "r_min": r_min})
        return cfg, mask


def _far_point(sol: AnalyticSolution, pts: np.ndarray) -> np.ndarray:
    if sol.domain == HALF_SPACE:
        p = np.zeros(sol.ndim)
        p[-1] = 1.0
        return p
    return np.max(np.abs(pts)) * 10.0 + 10.0 + np.zeros(sol.ndim)


# --- singularity data -------------------------------------------------------------

@dataclass(frozen=True)
class SingularityData:
    """Singular sites ``(position, charge)`` with integer or cocharacter charges."""

    sites: tuple = ()

    def __post_init__(self):
        norm = []
        for pos, charge in self.sites:
            pos = tuple(float(v) for v in pos)
            if len(pos) != 3:
                raise ValueError("site positions are 3-vectors")
            if not isinstance(charge, Cocharacter):
                if int(charge) != charge:
                    raise ValueError("abelian charges must be integers")
                charge = int(charge)
            norm.append((pos, charge))
        positions = [p for p, _ in norm]
        if len(set(positions)) != len(positions):
            raise ValueError("singular sites must be pairwise distinct")
        kinds = {isinstance(c, Cocharacter) for _, c in norm}
        if len(kinds) > 1:
            raise ValueError("mixing integer and cocharacter charges is not supported")
        object.__setattr__(self, "sites", tuple(norm))

    @property
    def is_abelian(self) -> bool:
        return all(not isinstance(c, Cocharacter) for _, c in self.sites)

    @property
    def total_charge(self):
        if self.is_abelian:
            return sum(c for _, c in self.sites)
        return tuple(int(v) for v in np.sum([c.weights for _, c in self.sites], axis=0))

    @property
    def decays_at_infinity(self) -> bool:
        """Abelian criterion: total charge zero, so fields fall off faster than 1/r."""
        total = self.total_charge
        return total == 0 if self.is_abelian else not any(total)

    def flags(self) -> list[str]:
        return [] if self.decays_at_infinity else ["nonzero total charge: no decay faster than 1/r"]

    @classmethod
    def from_dict(cls, d: dict) -> "SingularityData":
        sites = []
        for s in d.get("sites", []):
            if "rho" in s:
                sites.append((s["pos"], Cocharacter(tuple(s["rho"]))))
            else:
                sites.append((s["pos"], s["n"]))
        return cls(tuple(sites))

    @classmethod
    def from_json(cls, text: str) -> "SingularityData":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        out = []
        for pos, c in self.sites:
            out.append({"pos": list(pos), "rho": list(c.weights)} if isinstance(c, Cocharacter)
                       else {"pos": list(pos), "n": c})
        return {"sites": out}


# --- abelian monopoles ------------------------------------------------------------

def _monopole_parts(points: np.ndarray, x0, n: float):
    """Real parts ``(a, phi, da, dphi)`` of a charge-``n`` monopole at ``x0``."""
    d = points - np.asarray(x0, dtype=float)
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    r = np.sqrt(x * x + y * y + z * z)
    c = 0.5 * n
    u = 1.0 / (r * (r + z))
    a = np.stack([c * y * u, -c * x * u, np.zeros_like(r)])
    phi = c / r
    comps = (x, y, z)
    du = np.stack([-(u * u) * (xk * (r + z) / r + xk + (r if k == 2 else 0.0)) for k, xk in enumerate(comps)])
    da = np.zeros((3, 3) + r.shape)
    for k in range(3):
        da[k, 0] = c * ((1.0 if k == 1 else 0.0) * u + y * du[k])
        da[k, 1] = -c * ((1.0 if k == 0 else 0.0) * u + x * du[k])
    dphi = np.stack([-c * xk / r ** 3 for xk in comps])
    return a, phi, da, dphi


def _monopole_curvature(points: np.ndarray, x0, n: float) -> np.ndarray:
    """Real two-form ``f_ij = eps_kij d_k phi`` (so that ``F = i f = *d phi``)."""
    _, _, _, dphi = _monopole_parts_phi_only(points, x0, n)
    f = np.zeros((3, 3) + dphi.shape[1:])
    for k, i, j in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        f[i, j] = dphi[k]
        f[j, i] = -dphi[k]
    return f


def _monopole_parts_phi_only(points, x0, n):
    d = points - np.asarray(x0, dtype=float)
    r = np.sqrt(np.sum(d ** 2, axis=-1))
    dphi = np.stack([-0.5 * n * d[..., k] / r ** 3 for k in range(3)])
    return None, 0.5 * n / r, None, dphi


def _u1(x: np.ndarray) -> np.ndarray:
    return (1j * np.asarray(x))[..., None, None]


def _lift(parts, lift):
    a, phi, da, dphi = parts
    f = _u1 if lift is None else (lambda x: cocharacter_element(lift, x))
    return f(a), f(phi)[None], f(da), f(dphi)[:, None]


def _abelian_solution(terms, label: str, lift: Cocharacter | None = None) -> AnalyticSolution:
    """Build from ``terms = [(x0, n), ...]`` of real monopole pieces."""

    def real_parts(points):
        shape = points.shape[:-1]
        a = np.zeros((3,) + shape)
        phi = np.zeros(shape)
        da = np.zeros((3, 3) + shape)
        dphi = np.zeros((3,) + shape)
        for x0, n in terms:
            pa, pphi, pda, pdphi = _monopole_parts(points, x0, n)
            a, phi, da, dphi = a + pa, phi + pphi, da + pda, dphi + pdphi
        return a, phi, da, dphi

    def real_curv(points):
        f = np.zeros((3, 3) + points.shape[:-1])
        for x0, n in terms:
            f = f + _monopole_curvature(points, x0, n)
        return f

    dim = 1 if lift is None else lift.dim

    def evaluator(points):
        return _lift(real_parts(points), lift)

    def curvature_fn(points):
        f = real_curv(points)
        return _u1(f) if lift is None else cocharacter_element(lift, f)

    return AnalyticSolution(evaluator, 3, dim, 1, R3, tuple(tuple(map(float, x0)) for x0, _ in terms),
                            curvature_fn, abelian=(real_parts, real_curv, tuple(terms)) if lift is None else None,
                            label=label)


def dirac_monopole(x0=(0.0, 0.0, 0.0), n: int = 1) -> AnalyticSolution:
    """U(1) solution ``phi = i n / (2|x - x0|)``, ``F = *d phi``."""
    if int(n) != n:
        raise ValueError("monopole charge must be an integer")
    terms = [(tuple(x0), int(n))] if n != 0 else []
    sol = _abelian_solution(terms, f"dirac_monopole(n={int(n)})")
    if n == 0:
        return AnalyticSolution(sol.evaluator, 3, 1, 1, R3, (), sol.curvature_fn, sol.abelian, sol.label)
    return sol


def multi_monopole(data: SingularityData) -> AnalyticSolution:
    """Linear superposition of monopoles; cocharacter sites use the charge-one embedding."""
    if data.is_abelian:
        return _abelian_solution([(pos, n) for pos, n in data.sites if n != 0],
                                 f"multi_monopole({len(data.sites)} sites)")
    parts = [embed_solution(rho, dirac_monopole(pos, 1)) for pos, rho in data.sites]
    dims = {p.dim for p in parts}
    if len(dims) != 1:
        raise ValueError("all cocharacters must have the same dimension")

    def evaluator(points):
        outs = [p.evaluator(points) for p in parts]
        return tuple(sum(o[k] for o in outs) for k in range(4))

    def curvature_fn(points):
        return sum(p.curvature_fn(points) for p in parts)

    return AnalyticSolution(evaluator, 3, dims.pop(), 1, R3, tuple(pos for pos, _ in data.sites), curvature_fn,
                            label=f"multi_monopole({len(data.sites)} nonabelian sites)")


def embed_solution(rho: Cocharacter, sol: AnalyticSolution) -> AnalyticSolution:
    """Push an abelian solution forward along ``rho``: ``(A, phi) -> (rho(A), rho(phi))``."""
    if sol.abelian is None:
        raise ValueError("embed_solution needs an abelian solution")
    real_parts, real_curv, terms = sol.abelian
    return _abelian_solution(list(terms), f"embed({rho.weights}, {sol.label})", lift=rho)


def sphere_flux(sol: AnalyticSolution, center, radius: float, n_theta: int = 64, n_phi: int = 64) -> np.ndarray:
    """``(i / 2pi) \\oint F`` over a sphere, midpoint rule in both angles.

    Returns the real diagonal (an array of length ``dim``; a float for U(1)).
    """
    th = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    ph = (np.arange(n_phi) + 0.5) * 2 * np.pi / n_phi
    T, P = np.meshgrid(th, ph, indexing="ij")
    st, ct, sp, cp = np.sin(T), np.cos(T), np.sin(P), np.cos(P)
    pts = np.asarray(center, float) + radius * np.stack([st * cp, st * sp, ct], axis=-1)
    dth = radius * np.stack([ct * cp, ct * sp, -st])
    dph = radius * np.stack([-st * sp, st * cp, np.zeros_like(st)])
    F = sol.curvature(pts)
    integrand = np.einsum("ij...ab,i...,j...->...ab", F, dth, dph)
    total = integrand.sum(axis=(0, 1)) * (np.pi / n_theta) * (2 * np.pi / n_phi)
    flux = np.real(1j * np.diagonal(total) / (2 * np.pi))
    return float(flux[0]) if sol.dim == 1 else flux


# --- Nahm pole ----------------------------------------------------------------------

def nahm_pole(triple: Su2Triple) -> AnalyticSolution:
    """``A = 0``, ``phi = sum_a t_a dx_a / y`` on ``(x1, x2, x3, y)`` with ``y > 0``."""
    triple.check()
    t = triple.as_array()
    N = triple.dim

    def evaluator(points):
        shape = points.shape[:-1]
        y = points[..., 3]
        A = np.zeros((4,) + shape + (N, N), dtype=complex)
        phi = np.zeros((4,) + shape + (N, N), dtype=complex)
        phi[:3] = np.einsum("a...,aij->a...ij", np.broadcast_to(1.0 / y, (3,) + shape), t)
        dA = np.zeros((4, 4) + shape + (N, N), dtype=complex)
        dphi = np.zeros((4, 4) + shape + (N, N), dtype=complex)
        dphi[3, :3] = np.einsum("a...,aij->a...ij", np.broadcast_to(-1.0 / y ** 2, (3,) + shape), t)
        return A, phi, dA, dphi

    def curvature_fn(points):
        shape = points.shape[:-1]
        return np.zeros((4, 4) + shape + (N, N), dtype=complex)

    return AnalyticSolution(evaluator, 4, N, 4, HALF_SPACE, (), curvature_fn, label=f"nahm_pole(dim={N})")


def nahm_pole_extended(triple: Su2Triple) -> AnalyticSolution:
    """The Nahm pole as extended-Bogomolny data on ``(x2, x3, y)``: ``A = 0``, ``phi_a = t_a / y``."""
    triple.check()
    t = triple.as_array()
    N = triple.dim

    def evaluator(points):
        shape = points.shape[:-1]
        y = points[..., 2]
        A = np.zeros((3,) + shape + (N, N), dtype=complex)
        phi = np.einsum("a...,aij->a...ij", np.broadcast_to(1.0 / y, (3,) + shape), t).astype(complex)
        dA = np.zeros((3, 3) + shape + (N, N), dtype=complex)
        dphi = np.zeros((3, 3) + shape + (N, N), dtype=complex)
        dphi[2] = np.einsum("a...,aij->a...ij", np.broadcast_to(-1.0 / y ** 2, (3,) + shape), t)
        return A, phi, dA, dphi

    return AnalyticSolution(evaluator, 3, N, 3, HALF_SPACE, (), lambda p: np.zeros((3, 3) + p.shape[:-1] + (N, N), complex),
                            label=f"nahm_pole_extended(dim={N})")


def extended_grid(n_y: int, h: float, y0: float, n_x: int = 4, scheme: str = "central") -> fl.Grid:
    """Grid on ``(x2, x3, y)``: periodic x axes, clamped y starting at ``y0``."""
    return fl.Grid((n_x, n_x, n_y), h, (0.0, 0.0, y0), (fl.PERIODIC, fl.PERIODIC, fl.CLAMPED), scheme)


def halfspace_grid(n_x: int, n_y: int, h: float, y0: float, x_origin=None, scheme: str = "central") -> fl.Grid:
    """Grid on ``(x1, x2, x3, y)``: periodic x axes, clamped y starting at ``y0``.

    Orientation is ``-1`` relative to ``dx1^dx2^dx3^dy`` (i.e. ``dy^dx1^dx2^dx3``
    positive), the orientation in which the Nahm pole solves ``F - phi^phi = *d_A phi``.
    """
    x_origin = (-0.5 * n_x * h,) * 3 if x_origin is None else tuple(x_origin)
    return fl.Grid((n_x, n_x, n_x, n_y), h, x_origin + (y0,),
                   (fl.PERIODIC,) * 3 + (fl.CLAMPED,), scheme, orientation=-1)


def kw_pullback(cfg: fl.FieldConfiguration, mask: np.ndarray | None = None, n_extra: int = 4):
    """Lift a 3d Bogomolny configuration to 4d: fields independent of ``x4``,
    ``A_4 = 0`` and ``phi = phi_scalar dx4``.  The ``x4`` axis is periodic with
    ``n_extra`` sites; with orientation ``+1`` the KW system reduces to the
    Bogomolny equations on these fields.
    """
    g = cfg.grid
    if g.ndim != 3 or cfg.n_phi != 1:
        raise ValueError("kw_pullback expects a 3d configuration with one scalar Higgs component")
    h4 = min(g.spacing)
    g4 = fl.Grid(g.shape + (n_extra,), g.spacing + (h4,), g.origin + (0.0,), g.boundary + (fl.PERIODIC,),
                 g.scheme, orientation=1)
    N = cfg.dim
    rep = lambda x: np.repeat(x[..., None, :, :], n_extra, axis=-3)
    A = np.concatenate([rep(cfg.A), np.zeros((1,) + g4.shape + (N, N), complex)])
    phi = np.concatenate([np.zeros((3,) + g4.shape + (N, N), complex), rep(cfg.phi)])
    dA = dphi = None
    if cfg.dA is not None and cfg.dphi is not None:
        dA = np.zeros((4, 4) + g4.shape + (N, N), complex)
        dA[:3, :3] = rep(cfg.dA)
        dphi = np.zeros((4, 4) + g4.shape + (N, N), complex)
        dphi[:3, 3] = rep(cfg.dphi[:, 0])
    out = fl.FieldConfiguration(g4, A, phi, dA, dphi, meta=dict(cfg.meta, pullback=True))
    if mask is None:
        return out
    return out, np.repeat(mask[..., None], n_extra, axis=-1)
