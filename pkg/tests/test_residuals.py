from __future__ import annotations

import itertools

import numpy as np
import pytest

from kwlab import fields as fl
from kwlab import liealg as la
from kwlab import residuals as rs
from kwlab import solutions as so


def _box(n: int, lo=-0.5, hi=0.5, scheme="central") -> fl.Grid:
    return fl.Grid((n + 1,) * 3, (hi - lo) / n, (lo,) * 3, fl.CLAMPED, scheme)


def _random4(orientation=1, seed=3):
    g = fl.Grid((6,) * 4, 2 * np.pi / 6, scheme="spectral", orientation=orientation)
    return fl.random_smooth_field(g, seed, mode_cutoff=1, amplitude=0.3)


def _with_orientation(cfg, orientation):
    g = cfg.grid
    g2 = fl.Grid(g.shape, g.spacing, g.origin, g.boundary, g.scheme, orientation)
    return cfg.replace(grid=g2)


def test_zero_fields_have_zero_residuals():
    g3 = _box(8)
    assert rs.bogomolny_residual(fl.zeros(g3, n_phi=1)).max_norm == 0
    assert rs.dbar_conjugation_residual(fl.zeros(g3, n_phi=1)).max_norm == 0
    assert rs.extended_bogomolny_residual(fl.zeros(g3, n_phi=3)).max_norm == 0
    g4 = fl.Grid((5,) * 4, 0.25)
    assert rs.kw_residual(fl.zeros(g4)).max_norm == 0
    assert rs.kw_t_residual(fl.zeros(g4), 0.7).max_norm == 0


def test_residual_input_validation():
    with pytest.raises(ValueError):
        rs.bogomolny_residual(fl.zeros(_box(8), n_phi=3))
    with pytest.raises(ValueError):
        rs.kw_residual(fl.zeros(_box(8), n_phi=4))
    with pytest.raises(ValueError):
        rs.kw_t_residual(fl.zeros(fl.Grid((5,) * 4, 0.25)), 0.0)
    with pytest.raises(ValueError):
        rs.dbar_conjugation_residual(fl.zeros(_box(8), n_phi=1), y_range=(2.0, 3.0))
    with pytest.raises(ValueError):
        rs.nahm_residual(np.array([0.0, 1.0, 2.0]), np.zeros((3, 3, 2, 2)))


def test_bogomolny_matches_independent_stencil():
    # independent oracle: numpy's gradient (second-order central in the interior)
    g = _box(10)
    cfg = fl.random_smooth_field(g, 5, dim=3, n_phi=1, amplitude=0.4)
    rep = rs.bogomolny_residual(cfg)
    h = g.spacing[0]
    dA = np.stack([np.stack([np.gradient(cfg.A[j], h, axis=i) for j in range(3)]) for i in range(3)])
    dphi = np.stack([np.gradient(cfg.phi[0], h, axis=i) for i in range(3)])
    A, phi = cfg.A, cfg.phi[0]
    m = fl.interior_mask(g)
    for (i, j), k in (((0, 1), 2), ((0, 2), 1), ((1, 2), 0)):
        F = dA[i, j] - dA[j, i] + A[i] @ A[j] - A[j] @ A[i]
        Dk = dphi[k] + A[k] @ phi - phi @ A[k]
        sign = la.LEVI_CIVITA_3[i, j, k]
        expected = F - sign * Dk
        got = rep.fields[f"R{i + 1}{j + 1}"]
        assert np.max(np.abs(got - expected)[m]) <= 1e-12
    assert not rep.mask[0].any() and rep.mask[1:-1, 1:-1, 1:-1].all()


def test_monopole_bogomolny_exact_and_second_order():
    sol = so.dirac_monopole((0.05, -0.03, 0.02), 1)
    cfg, mask = sol.sample(_box(8), r_min=0.2, exact_derivatives=True)
    assert rs.bogomolny_residual(cfg, mask).max_norm <= 1e-12
    reps, hs = [], []
    for n in (8, 16, 32):
        cfg, mask = sol.sample(_box(n), r_min=0.2)
        reps.append(rs.bogomolny_residual(cfg, mask))
        hs.append(1.0 / n)
    assert min(rs.convergence_slopes(hs, rs.common_point_errors(reps))) >= 1.9


def test_dbar_sign_frozen():
    cfg, mask = so.dirac_monopole((0.05, 0.05, 0.05), 2).sample(_box(8), exact_derivatives=True)
    assert rs.DBAR_SIGN == -1
    assert rs.dbar_conjugation_residual(cfg, mask=mask).max_norm <= 1e-12
    assert rs.dbar_conjugation_residual(cfg, mask=mask, sign=-rs.DBAR_SIGN).max_norm > 0.1
    # every choice of y axis with the complementary pair positively oriented
    for y_axis in (0, 1):
        assert rs.dbar_conjugation_residual(cfg, y_axis=y_axis, mask=mask).max_norm <= 1e-12


def test_dbar_residual_monopole_second_order_and_random_nonzero():
    sol = so.dirac_monopole((0.05, 0.05, 0.05), 1)
    reps, hs = [], []
    for n in (8, 16, 32):
        cfg, mask = sol.sample(_box(n), r_min=0.2)
        reps.append(rs.dbar_conjugation_residual(cfg, mask=mask))
        hs.append(1.0 / n)
    assert min(rs.convergence_slopes(hs, rs.common_point_errors(reps))) >= 1.9
    rand = fl.random_smooth_field(_box(8), 2, n_phi=1, amplitude=0.5)
    assert rs.dbar_conjugation_residual(rand).max_norm > 1e-2
    sliced = rs.dbar_conjugation_residual(rand, y_range=(-0.1, 0.1))
    z = _box(8).coords(2)
    assert not sliced.mask[..., np.abs(z) > 0.1].any()


def test_distinguished_t0():
    for orientation in (1, -1):
        cfg = _random4(orientation)
        V = rs.kw_residual(cfg)
        _, G, H, _ = rs.kw_parts(cfg)
        plus, minus = rs.t_family_parts(G, H, rs.KW_T0, orientation)
        for i, j in itertools.combinations(range(4), 2):
            assert np.max(np.abs(plus[i, j] + minus[i, j] - V.fields[f"V{i + 1}{j + 1}"])) <= 1e-12
    assert rs.KW_T0 == -1.0
    # no other sampled t reproduces V
    cfg = _random4()
    _, G, H, _ = rs.kw_parts(cfg)
    V = G - fl.hodge_star(H, 4, 2)
    for t in (1.0, 0.5, -2.0):
        plus, minus = rs.t_family_parts(G, H, t)
        assert np.max(np.abs(plus + minus - V)) > 1e-3


def test_t_infinity_limit():
    cfg = _random4()
    _, G, H, W = rs.kw_parts(cfg)
    rep = rs.kw_t_residual(cfg, np.inf)
    Hp = fl.self_dual_part(H)
    Gm = fl.anti_self_dual_part(G)
    near = rs.kw_t_residual(cfg, 1e8)
    for i, j in itertools.combinations(range(4), 2):
        assert np.allclose(rep.fields[f"P{i + 1}{j + 1}"], Hp[i, j], atol=1e-14)
        assert np.allclose(rep.fields[f"M{i + 1}{j + 1}"], Gm[i, j], atol=1e-14)
        # (G + tH)^+ / t -> H^+ as t grows
        assert np.allclose(near.fields[f"P{i + 1}{j + 1}"] / 1e8, Hp[i, j], atol=1e-7)
        assert np.allclose(near.fields[f"M{i + 1}{j + 1}"], Gm[i, j], atol=1e-7)


@pytest.mark.parametrize("t", [0.5, 1.0, -3.0])
def test_orientation_reversal_exchanges_t_and_minus_inverse(t):
    cfg = _random4(1)
    rev = _with_orientation(cfg, -1)
    a = rs.kw_t_residual(rev, t)
    b = rs.kw_t_residual(cfg, -1.0 / t)
    for i, j in itertools.combinations(range(4), 2):
        k = f"{i + 1}{j + 1}"
        assert np.allclose(a.fields["P" + k], b.fields["M" + k], atol=1e-13)
        assert np.allclose(a.fields["M" + k], b.fields["P" + k], atol=1e-13)


def test_nahm_residual_of_scaled_triple():
    t = la.principal_su2(3)
    y = np.linspace(0.5, 3.0, 11)
    f = np.sin(y) + 2.0
    df = np.cos(y)
    phi = np.einsum("y,aij->ayij", f, t.as_array())
    dphi = np.einsum("y,aij->ayij", df, t.as_array())
    rep = rs.nahm_residual(y, phi, dphi)
    for a, m in enumerate(t.as_array()):
        assert np.allclose(rep.fields[f"N{a + 1}"], np.einsum("y,ij->yij", df + f ** 2, m), atol=1e-13)
    # finite differences drop the end points and converge at second order
    errs = []
    for n in (41, 81, 161):
        yy = np.linspace(0.5, 3.0, n)
        pole = np.einsum("y,aij->ayij", 1.0 / yy, t.as_array())
        r = rs.nahm_residual(yy, pole)
        assert not r.mask[0] and not r.mask[-1]
        errs.append(r.fields["N1"][n // 2].__abs__().max())
    assert min(rs.convergence_slopes([1, 0.5, 0.25], errs)) >= 1.9


def test_nahm_residual_with_gauge_field():
    # constant gauge A_y = X acts on phi = exp(-yX) phi0 exp(yX) trivially covariantly
    t = la.principal_su2(2)
    X = t.t3 * 0.7
    y = np.linspace(0.5, 2.0, 7)
    U = np.stack([fl.expm_anti_hermitian(-yy * X) for yy in y])
    phi = np.einsum("yij,ajk,ykl->ayil", U, t.as_array() / 1.0, np.conj(np.swapaxes(U, -1, -2)))
    phi = phi / y[None, :, None, None]
    # d/dy(U t U^-1 / y) = -[X, phi] - phi / y
    dphi = -la.commutator(X, phi) - phi / y[None, :, None, None]
    rep = rs.nahm_residual(y, phi, dphi, A_y=np.broadcast_to(X, (y.size, 2, 2)))
    assert rep.max_norm <= 1e-13


def _extended_cfg(seed, nahm_like=False, hitchin=False):
    g = fl.Grid((6, 6, 6), 2 * np.pi / 6, scheme="spectral")
    cfg = fl.random_smooth_field(g, seed, mode_cutoff=1, amplitude=0.4, n_phi=3)
    A, phi = np.array(cfg.A), np.array(cfg.phi)
    if nahm_like:
        A[:] = 0
        phi[:] = phi[:, :1, :1, :, :, :]  # depends on y only
    if hitchin:
        A[2] = 0
        phi[0] = 0
        A[:] = A[:, :, :, :1]
        phi[:] = phi[:, :, :, :1]
    return cfg.replace(A=A, phi=phi)


def test_extended_specializes_to_nahm():
    cfg = _extended_cfg(1, nahm_like=True)
    parts = rs.extended_bogomolny_parts(cfg)
    dphi = fl.higgs_partials(cfg)[2]
    line = (slice(None), 0, 0)
    nahm = rs.nahm_residual(cfg.grid.coords(2) + 1.0, cfg.phi[line], dphi[line])
    N = nahm.fields
    assert np.allclose(parts["E23"][0, 0], N["N2"] - 1j * N["N3"], atol=1e-12)
    assert np.allclose(parts["mu"][0, 0], -N["N1"], atol=1e-12)
    assert np.max(np.abs(parts["E12"])) <= 1e-12 and np.max(np.abs(parts["E13"])) <= 1e-12


def test_extended_specializes_to_hitchin():
    cfg = _extended_cfg(2, hitchin=True)
    parts = rs.extended_bogomolny_parts(cfg)
    A2, A3 = cfg.A[0], cfg.A[1]
    Phi = cfg.phi[1] - 1j * cfg.phi[2]
    dPhi = fl.gradient(Phi, cfg.grid)
    F = fl.curvature(cfg)
    Phid = np.conj(np.swapaxes(Phi, -1, -2))
    mu = F[0, 1] - 0.5j * la.commutator(Phi, Phid)
    E13 = dPhi[0] + 1j * dPhi[1] + la.commutator(A2 + 1j * A3, Phi)
    assert np.allclose(parts["mu"], mu, atol=1e-12)
    assert np.allclose(parts["E13"], E13, atol=1e-12)
    assert np.max(np.abs(parts["E12"])) <= 1e-12 and np.max(np.abs(parts["E23"])) <= 1e-12


def test_extended_specializes_to_bogomolny():
    g = _box(8)
    base = fl.random_smooth_field(g, 4, dim=2, n_phi=3, amplitude=0.4)
    phi = np.array(base.phi)
    phi[1:] = 0
    cfg = base.replace(phi=phi)
    parts = rs.extended_bogomolny_parts(cfg)
    bog = rs.bogomolny_residual(base.replace(phi=phi[:1])).fields
    E = parts["E12"]
    Ed = np.conj(np.swapaxes(E, -1, -2))
    re, im = 0.5 * (E - Ed), -0.5j * (E + Ed)
    m = fl.interior_mask(g)
    assert np.max(np.abs(parts["mu"] - bog["R12"])[m]) <= 1e-12
    assert np.max(np.abs(re - bog["R13"])[m]) <= 1e-12
    assert np.max(np.abs(im - bog["R23"])[m]) <= 1e-12


def test_extended_nahm_pole_exact_and_convergent():
    sol = so.nahm_pole_extended(la.principal_su2(2))
    cfg, mask = sol.sample(so.extended_grid(16, 0.125, 0.5), exact_derivatives=True)
    assert rs.extended_bogomolny_residual(cfg, mask).max_norm <= 1e-13
    reps, hs = [], []
    for k in range(3):
        h = 0.125 / 2 ** k
        cfg, mask = sol.sample(so.extended_grid(16 * 2 ** k + 1, h, 0.5))
        reps.append(rs.extended_bogomolny_residual(cfg, mask))
        hs.append(h)
    assert min(rs.convergence_slopes(hs, rs.common_point_errors(reps))) >= 1.9


def test_convergence_slopes_and_common_points():
    assert rs.convergence_slopes([1, 0.5, 0.25], [4.0, 1.0, 0.25]) == pytest.approx([2.0, 2.0])

    def report(n, scale):
        g = fl.Grid((n, 4, 4), 1.0 / (n - 1), boundary=(fl.CLAMPED, fl.PERIODIC, fl.PERIODIC))
        x = g.coords(0)
        vals = np.zeros((n, 4, 4, 1, 1), complex)
        vals[..., 0, 0] = (scale * (1 + x))[:, None, None]
        return rs.ResidualReport({"R": vals}, fl.interior_mask(g), g.cell_volume)

    errs = rs.common_point_errors([report(9, 1.0), report(17, 0.25), report(33, 1 / 16)])
    # same physical points on every level; the interior max sits at the last coarse interior site
    x_last = 7 / 8
    assert errs == pytest.approx([1 + x_last, 0.25 * (1 + x_last), (1 + x_last) / 16])
    with pytest.raises(ValueError):
        rs.common_point_errors([report(9, 1.0), report(16, 1.0)])


def test_report_summaries_and_json():
    cfg = fl.random_smooth_field(_box(6), 1, n_phi=1)
    rep = rs.bogomolny_residual(cfg)
    d = rep.to_dict()
    assert set(d["components"]) == {"R12", "R13", "R23"}
    assert d["sites_evaluated"] == 5 ** 3
    assert rep.max_norm >= max(rep.component_max().values())
    assert rep.squared_integral() == pytest.approx(rep.l2_norm ** 2)
    assert rep.volume == pytest.approx(125 * rep.cell_volume)
    assert rep.to_json() == rs.bogomolny_residual(cfg).to_json()
