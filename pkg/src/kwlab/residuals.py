"""Pointwise residuals of the gauge-theory equation systems.

Every evaluator returns a :class:`ResidualReport` holding the raw
matrix-valued residual of each equation component (never pre-summed), the
mask of sites where the stencil is valid, and max / L2 summaries.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from . import fields as fl
from .liealg import LEVI_CIVITA_3, commutator, norm_sq

# Value of t at which the t-family reproduces V = F - phi^phi - *d_A phi with
# orientation +1: V^+(t0) + V^-(t0) == V identically.  Guarded by
# tests/test_residuals.py::test_distinguished_t0.
KW_T0 = -1.0

# Sign s in [D/Dy + s*i*phi, dbar_A]; the value vanishing on Bogomolny
# solutions with (x1, x2, y) positively oriented.  Guarded by
# tests/test_residuals.py::test_dbar_sign_frozen.
DBAR_SIGN = -1


@dataclass
class ResidualReport:
    fields: dict[str, np.ndarray]
    mask: np.ndarray
    cell_volume: float
    excision: dict = field(default_factory=dict)
    grid: fl.Grid | None = None

    def site_norms(self, name: str) -> np.ndarray:
        out = np.sqrt(norm_sq(self.fields[name]))
        return np.where(self.mask, out, 0.0)

    def total_site_norm(self) -> np.ndarray:
        acc = np.zeros(self.mask.shape)
        for f in self.fields.values():
            acc = acc + norm_sq(f)
        return np.where(self.mask, np.sqrt(acc), 0.0)

    @property
    def max_norm(self) -> float:
        return float(np.max(self.total_site_norm(), initial=0.0))

    @property
    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.total_site_norm() ** 2) * self.cell_volume))

    @property
    def volume(self) -> float:
        return float(np.count_nonzero(self.mask) * self.cell_volume)

    def component_max(self) -> dict[str, float]:
        return {k: float(np.max(self.site_norms(k), initial=0.0)) for k in self.fields}

    def component_l2(self) -> dict[str, float]:
        return {k: float(np.sqrt(np.sum(self.site_norms(k) ** 2) * self.cell_volume)) for k in self.fields}

    def squared_integral(self, names=None, weights=None) -> float:
        """``sum_k w_k * integral |R_k|^2`` over the valid sites."""
        names = list(self.fields) if names is None else list(names)
        weights = [1.0] * len(names) if weights is None else list(weights)
        total = 0.0
        for name, w in zip(names, weights):
            total += w * float(np.sum(np.where(self.mask, norm_sq(self.fields[name]), 0.0)))
        return total * self.cell_volume

    def to_dict(self) -> dict:
        out = {
            "max_norm": self.max_norm,
            "l2_norm": self.l2_norm,
            "components": {k: {"max": m, "l2": l2} for (k, m), l2
                           in zip(self.component_max().items(), self.component_l2().values())},
            "sites_evaluated": int(np.count_nonzero(self.mask)),
            "excision": self.excision,
        }
        if self.grid is not None:
            out["grid"] = self.grid.to_dict()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _mask(cfg: fl.FieldConfiguration, mask: np.ndarray | None) -> np.ndarray:
    m = fl.interior_mask(cfg.grid)
    if mask is not None:
        m = m & mask
    return m


def _excision(cfg: fl.FieldConfiguration, mask: np.ndarray | None) -> dict:
    clamped = [a for a, b in enumerate(cfg.grid.boundary) if b == fl.CLAMPED]
    return {"boundary_layer": 1 if clamped else 0, "clamped_axes": clamped,
            "user_mask": mask is not None}


def _pair_name(prefix: str, i: int, j: int) -> str:
    return f"{prefix}{i + 1}{j + 1}"


def bogomolny_residual(cfg: fl.FieldConfiguration, mask: np.ndarray | None = None) -> ResidualReport:
    """``F - *d_A phi`` for a 3d configuration with a single scalar Higgs component."""
    if cfg.grid.ndim != 3 or cfg.n_phi != 1:
        raise ValueError("bogomolny_residual needs a 3d grid and one scalar Higgs component")
    F = fl.curvature(cfg)
    Dphi = fl.covariant_derivative(cfg)[:, 0]
    star = fl.hodge_star(Dphi, 3, 1, cfg.grid.orientation)
    comps = {_pair_name("R", i, j): F[i, j] - star[i, j] for i, j in itertools.combinations(range(3), 2)}
    return ResidualReport(comps, _mask(cfg, mask), cfg.grid.cell_volume, _excision(cfg, mask), cfg.grid)


def _complex_axes(y_axis: int) -> tuple[int, int]:
    # (p, q, y) positively oriented
    return {2: (0, 1), 0: (1, 2), 1: (2, 0)}[y_axis]


def dbar_conjugation_residual(cfg: fl.FieldConfiguration, y_range: tuple[float, float] | None = None,
                              y_axis: int = 2, sign: int = DBAR_SIGN,
                              mask: np.ndarray | None = None) -> ResidualReport:
    """Commutator ``[D/Dy + sign*i*phi, dbar_A]`` between the slices in ``y_range``.

    The commutator acts on sections as multiplication by
    ``d_y a_wbar - d_wbar a_y + [a_y, a_wbar]`` with ``a_y = A_y + sign*i*phi``,
    ``a_wbar = (A_p + i A_q)/2`` and ``w = x_p + i x_q``; that matrix applied
    to the standard basis of sections is what gets reported.
    """
    g = cfg.grid
    if g.ndim != 3 or cfg.n_phi != 1:
        raise ValueError("dbar_conjugation_residual needs a 3d Bogomolny configuration")
    p, q = _complex_axes(y_axis)
    dA = fl.connection_partials(cfg)
    dphi = fl.higgs_partials(cfg)[:, 0]
    phi = cfg.phi[0]
    a_y = cfg.A[y_axis] + sign * 1j * phi
    a_w = 0.5 * (cfg.A[p] + 1j * cfg.A[q])
    d_y_aw = 0.5 * (dA[y_axis, p] + 1j * dA[y_axis, q])
    d_wbar_ay = 0.5 * ((dA[p, y_axis] + sign * 1j * dphi[p]) + 1j * (dA[q, y_axis] + sign * 1j * dphi[q]))
    R = d_y_aw - d_wbar_ay + commutator(a_y, a_w)
    sections = np.eye(cfg.dim)
    applied = R @ sections
    m = _mask(cfg, mask)
    if y_range is not None:
        y = g.coords(y_axis)
        lo, hi = y_range
        if hi <= lo or hi < y[0] or lo > y[-1]:
            raise ValueError(f"slice range {y_range} outside grid span [{y[0]}, {y[-1]}]")
        shape = [1, 1, 1]
        shape[y_axis] = -1
        m = m & ((y >= lo) & (y <= hi)).reshape(shape)
    exc = _excision(cfg, mask)
    exc["y_range"] = list(y_range) if y_range is not None else None
    return ResidualReport({"dbar": applied}, m, g.cell_volume, exc, g)


def kw_parts(cfg: fl.FieldConfiguration):
    """Shared building blocks ``(F, G, H, W)``.

    ``G = F - phi^phi``, ``H = d_A phi`` (two-forms) and ``W = sum_i D_i phi_i``.
    """
    if cfg.grid.ndim != 4 or cfg.n_phi != 4:
        raise ValueError("KW residuals need a 4d grid and four one-form components")
    F = fl.curvature(cfg)
    G = F - fl.wedge_square_components(cfg.phi)
    D = fl.covariant_derivative(cfg)
    H = fl.exterior_covariant(D)
    W = np.einsum("ii...->...", D)
    return F, G, H, W


def _two_form_components(prefix: str, X: np.ndarray) -> dict[str, np.ndarray]:
    return {_pair_name(prefix, i, j): X[i, j] for i, j in itertools.combinations(range(X.shape[0]), 2)}


def kw_residual(cfg: fl.FieldConfiguration, mask: np.ndarray | None = None) -> ResidualReport:
    """``V = F - phi^phi - *d_A phi`` (components ``V_ij``, i<j) and ``W = d_A * phi``."""
    _, G, H, W = kw_parts(cfg)
    V = G - fl.hodge_star(H, 4, 2, cfg.grid.orientation)
    comps = _two_form_components("V", V)
    comps["W"] = W
    return ResidualReport(comps, _mask(cfg, mask), cfg.grid.cell_volume, _excision(cfg, mask), cfg.grid)


def t_family_parts(G: np.ndarray, H: np.ndarray, t: float, orientation: int = 1):
    """``V^+(t) = (G + tH)^+`` and ``V^-(t) = (G - H/t)^-``; ``t = inf`` gives ``(H^+, G^-)``."""
    t = float(t)
    if t == 0.0 or np.isnan(t):
        raise ValueError("t must be a nonzero real number or inf")
    if np.isinf(t):
        plus = fl.self_dual_part(H, orientation)
        minus = fl.anti_self_dual_part(G, orientation)
    else:
        plus = fl.self_dual_part(G + t * H, orientation)
        minus = fl.anti_self_dual_part(G - H / t, orientation)
    return plus, minus


def kw_t_residual(cfg: fl.FieldConfiguration, t: float, mask: np.ndarray | None = None) -> ResidualReport:
    """Residuals ``(V^+(t), V^-(t), W)`` of the t-family of KW equations."""
    _, G, H, W = kw_parts(cfg)
    plus, minus = t_family_parts(G, H, t, cfg.grid.orientation)
    comps = _two_form_components("P", plus)
    comps.update(_two_form_components("M", minus))
    comps["W"] = W
    exc = _excision(cfg, mask)
    exc["t"] = float(t)
    return ResidualReport(comps, _mask(cfg, mask), cfg.grid.cell_volume, exc, cfg.grid)


def nahm_residual(y, phi, dphi=None, A_y=None) -> ResidualReport:
    """Residuals ``D_y phi_a + (1/2) eps_abc [phi_b, phi_c]`` of Nahm's equation.

    ``phi`` is an array ``(3, ny, N, N)`` sampled at ``y`` or a callable
    returning it; ``dphi`` likewise supplies exact y-derivatives.  Without
    ``dphi`` central differences are used on a uniform ``y`` and the two end
    points are dropped.  ``A_y`` (``(ny, N, N)``) covariantizes the derivative.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("Nahm data lives on y > 0")
    if callable(phi):
        phi = phi(y)
    if callable(dphi):
        dphi = dphi(y)
    phi = np.asarray(phi)
    if phi.shape[0] != 3 or phi.shape[1] != y.size:
        raise ValueError(f"phi must have shape (3, {y.size}, N, N), got {phi.shape}")
    mask = np.ones(y.size, dtype=bool)
    if dphi is None:
        h = np.diff(y)
        if y.size < 3 or not np.allclose(h, h[0], rtol=1e-12, atol=0):
            raise ValueError("finite-difference Nahm residual needs a uniform y grid with >= 3 points")
        h = h[0]
        dphi = (np.roll(phi, -1, axis=1) - np.roll(phi, 1, axis=1)) / (2.0 * h)
        mask[[0, -1]] = False
        cell = h
    else:
        dphi = np.asarray(dphi)
        cell = float(np.mean(np.diff(y))) if y.size > 1 else 1.0
    Dphi = dphi if A_y is None else dphi + commutator(np.asarray(A_y)[None], phi)
    comps = {}
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        # (1/2) eps_abc [phi_b, phi_c] = [phi_b, phi_c] for cyclic (a, b, c)
        comps[f"N{a + 1}"] = Dphi[a] + LEVI_CIVITA_3[a, b, c] * commutator(phi[b], phi[c])
    return ResidualReport(comps, mask, cell, {"ends_dropped": dphi is None})


def extended_bogomolny_parts(cfg: fl.FieldConfiguration) -> dict[str, np.ndarray]:
    """Curvatures ``[D_i, D_j]`` (as adjoint multipliers) and the moment map.

    Grid axes are ``(x2, x3, y)``; ``cfg.A = (A2, A3, Ay)`` and
    ``cfg.phi = (phi1, phi2, phi3)``, with ``A1 = phi_y = 0``.  The operators
    are ``D1 = d2 + i d3 + [A2 + iA3, .]``, ``D2 = d_y + [Ay - i phi1, .]`` and
    ``D3 = [phi2 - i phi3, .]``.
    """
    g = cfg.grid
    if g.ndim != 3 or cfg.n_phi != 3:
        raise ValueError("extended Bogomolny fields need a 3d (x2, x3, y) grid and (phi1, phi2, phi3)")
    A2, A3, Ay = cfg.A
    p1, p2, p3 = cfg.phi
    dA = fl.connection_partials(cfg)
    dp = fl.higgs_partials(cfg)
    a1 = A2 + 1j * A3
    a2 = Ay - 1j * p1
    a3 = p2 - 1j * p3
    # derivative operators: del_1 = d2 + i d3, del_2 = d_y, del_3 = 0
    del1_a2 = (dA[0, 2] - 1j * dp[0, 0]) + 1j * (dA[1, 2] - 1j * dp[1, 0])
    del2_a1 = dA[2, 0] + 1j * dA[2, 1]
    del1_a3 = (dp[0, 1] - 1j * dp[0, 2]) + 1j * (dp[1, 1] - 1j * dp[1, 2])
    del2_a3 = dp[2, 1] - 1j * dp[2, 2]
    E12 = del1_a2 - del2_a1 + commutator(a1, a2)
    E13 = del1_a3 + commutator(a1, a3)
    E23 = del2_a3 + commutator(a2, a3)
    F23 = dA[0, 1] - dA[1, 0] + commutator(A2, A3)
    Dy_p1 = dp[2, 0] + commutator(Ay, p1)
    mu = F23 - commutator(p2, p3) - Dy_p1
    return {"E12": E12, "E13": E13, "E23": E23, "mu": mu}


def extended_bogomolny_residual(cfg: fl.FieldConfiguration, mask: np.ndarray | None = None) -> ResidualReport:
    """Residual of the extended Bogomolny system ``[D_i, D_j] = 0``, ``mu = 0``."""
    return ResidualReport(extended_bogomolny_parts(cfg), _mask(cfg, mask), cfg.grid.cell_volume,
                          _excision(cfg, mask), cfg.grid)


def convergence_slopes(hs, errors) -> list[float]:
    """Observed orders ``log(e_k/e_{k+1}) / log(h_k/h_{k+1})`` between refinements."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    return [float(np.log(errors[k] / errors[k + 1]) / np.log(hs[k] / hs[k + 1])) for k in range(len(hs) - 1)]


def common_point_errors(reports) -> list[float]:
    """Max residual norm of each report restricted to the sites of the coarsest grid.

    ``reports`` are ordered coarse to fine, each grid refining the previous
    one by a factor 2 along every axis whose site count changes (axes with a
    fixed count, e.g. directions the fields do not depend on, are kept whole).
    Only sites valid on every level are compared, so the error is measured at
    the same physical points throughout.
    """
    base = reports[0].mask.shape
    norms, masks = [], []
    for k, r in enumerate(reports):
        sl = tuple(slice(None) if n == n0 else slice(None, None, 2 ** k) for n, n0 in zip(r.mask.shape, base))
        norms.append(r.total_site_norm()[sl])
        masks.append(r.mask[sl])
        if masks[-1].shape != base:
            raise ValueError(f"grid {k} does not refine the coarsest grid by factors of 2")
    common = np.logical_and.reduce(masks)
    if not common.any():
        raise ValueError("no site is valid on every refinement level")
    return [float(np.max(n[common])) for n in norms]
