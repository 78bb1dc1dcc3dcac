from __future__ import annotations

from fractions import Fraction

import pytest

from kwlab import jones as jn

LP = jn.LaurentPolynomial


def q(*pairs, var="q") -> LP:
    """``sum c * q^e`` from ``(e, c)`` pairs with rational exponents."""
    out = LP.constant(0, var)
    for e, c in pairs:
        out = out + LP.monomial(Fraction(e), c, var)
    return out


ROOT = q((Fraction(1, 2), 1), (Fraction(-1, 2), 1))  # q^(1/2) + q^(-1/2)
C = jn.corpus()

KNOWN = {
    "empty": LP.constant(1),
    "unknot": ROOT,
    "unlink2": q((1, 1), (0, 2), (-1, 1)),
    "hopf_braid": q((3, 1), (2, 1), (1, 1), (0, 1)),
    "trefoil_right": q((Fraction(9, 2), -1), (Fraction(5, 2), 1), (Fraction(3, 2), 1), (Fraction(1, 2), 1)),
    "trefoil_left": q((Fraction(-1, 2), 1), (Fraction(-3, 2), 1), (Fraction(-5, 2), 1), (Fraction(-9, 2), -1)),
    "figure_eight": q((Fraction(5, 2), 1), (Fraction(-5, 2), 1)),
}


def test_frozen_substitution():
    assert jn.A_TO_Q_EXPONENT == Fraction(-1, 4)
    assert jn.jones_polynomial(jn.empty_link()) == 1
    assert jn.jones_polynomial(jn.unknot()) == ROOT
    # the opposite substitution would mirror every chiral answer
    d = C["trefoil_right"]
    shift = -d.writhe
    unit = LP(((3 * shift, (-1) ** (shift % 2)),), 1, "A")
    flipped = (unit * jn.bracket_state_sum(d) * (-1) ** d.components).substitute(Fraction(1, 4))
    assert flipped != jn.jones_from_skein(d)
    assert flipped == jn.jones_from_skein(C["trefoil_left"])


@pytest.mark.parametrize("name", sorted(KNOWN))
def test_known_values(name):
    assert jn.jones_polynomial(C[name]) == KNOWN[name]


@pytest.mark.parametrize("name", sorted(C))
def test_state_sum_matches_skein_oracle(name):
    assert jn.jones_polynomial(C[name]) == jn.jones_from_skein(C[name])


@pytest.mark.parametrize("name", sorted(C))
def test_mirror_inverts_q(name):
    d = C[name]
    assert jn.jones_polynomial(jn.mirror(d)) == jn.jones_polynomial(d).invert_variable()
    assert jn.mirror(jn.mirror(d)).crossings == d.crossings


def test_skein_standard_values():
    t = lambda *p: q(*p, var="t")
    assert jn.skein_jones(C["trefoil_right_braid"]) == t((1, 1), (3, 1), (4, -1))
    assert jn.skein_jones(C["figure_eight"]) == t((2, 1), (1, -1), (0, 1), (-1, -1), (-2, 1))
    assert jn.skein_jones(C["cinquefoil"]) == t((2, 1), (4, 1), (5, -1), (6, 1), (7, -1))
    with pytest.raises(ValueError):
        jn.skein_jones(jn.empty_link())


def test_reidemeister_invariance():
    for name in ("unknot_kink_pos", "unknot_kink_neg", "unknot_r2"):
        assert jn.jones_polynomial(C[name]) == KNOWN["unknot"], name
    assert jn.jones_polynomial(C["r3_left"]) == jn.jones_polynomial(C["r3_right"])
    assert jn.jones_polynomial(C["trefoil_right_braid"]) == KNOWN["trefoil_right"]
    assert jn.jones_polynomial(C["trefoil_right_stabilized"]) == KNOWN["trefoil_right"]
    assert jn.jones_polynomial(C["trefoil_left_braid"]) == KNOWN["trefoil_left"]
    assert jn.jones_polynomial(C["figure_eight_braid"]) == KNOWN["figure_eight"]
    # the reference PD code is the negative Hopf link
    assert jn.jones_polynomial(C["hopf"]) == jn.jones_polynomial(jn.mirror(C["hopf_braid"]))
    assert jn.jones_polynomial(C["hopf"]) == q((0, 1), (-1, 1), (-2, 1), (-3, 1))


def test_bracket_changes_under_r1_but_not_r2():
    k = jn.bracket_state_sum(C["unknot_kink_pos"])
    assert k != jn.bracket_state_sum(jn.unknot())
    assert jn.bracket_state_sum(C["unknot_r2"]) == jn.bracket_state_sum(jn.unknot())


def test_trefoil_bracket_regression():
    # 8 states of the left trefoil diagram
    A = lambda e, c=1: LP(((e, c),), 1, "A")
    assert jn.bracket_state_sum(C["trefoil_left"]) == A(9, -1) + A(1) + A(-3) + A(-7)
    assert C["trefoil_left"].writhe == -3 and C["trefoil_right"].writhe == 3
    assert C["figure_eight"].writhe == 0


def test_disjoint_union_is_multiplicative():
    a, b = C["trefoil_right"], C["figure_eight"]
    u = jn.disjoint_union(a, b)
    assert u.components == 2
    assert jn.jones_polynomial(u) == jn.jones_polynomial(a) * jn.jones_polynomial(b)
    assert jn.jones_polynomial(u) == jn.jones_from_skein(u)


def test_framing_multiplies_by_phase():
    phase = LP.monomial(Fraction(-3, 4), -1)
    for name in ("unknot", "trefoil_left", "hopf"):
        d = C[name]
        assert jn.jones_polynomial(d, framing=1) == phase * jn.jones_polynomial(d)
        assert jn.jones_polynomial(d, framing=2) == phase * phase * jn.jones_polynomial(d)
    with pytest.raises(ValueError):
        jn.jones_polynomial(jn.unknot(), framing=0.5)


def test_parse_pd_formats():
    text = jn.parse_pd(jn.TREFOIL_LEFT)
    assert jn.parse_pd("PD[X(1,4,2,5), X(3,6,4,1), X(5,2,6,3)]").crossings == text.crossings
    assert jn.parse_pd('{"pd": [[1,4,2,5],[3,6,4,1],[5,2,6,3]]}').crossings == text.crossings
    assert jn.parse_pd("[[1,4,2,5],[3,6,4,1],[5,2,6,3]]").crossings == text.crossings
    assert jn.parse_pd("") == jn.empty_link()
    assert jn.parse_pd("unknot").components == 1
    assert jn.parse_pd("O * 3").components == 3
    assert jn.parse_pd(str(text)).crossings == text.crossings
    with pytest.raises(ValueError):
        jn.parse_pd("X[1,2,3,4]")
    with pytest.raises(ValueError):
        jn.parse_pd("X[1,2,3]")
    with pytest.raises(ValueError):
        jn.parse_pd("trefoil")
    with pytest.raises(ValueError):
        jn.parse_pd("{not json")


def test_braid_closure_validation_and_components():
    assert C["hopf_braid"].components == 2
    assert jn.braid_closure(3, []).components == 3
    with pytest.raises(ValueError):
        jn.braid_closure(2, [2])
    with pytest.raises(ValueError):
        jn.braid_closure(0, [])


def test_laurent_polynomial_arithmetic():
    x = LP.monomial(Fraction(1, 2))
    assert x * x == LP.monomial(1)
    assert (x + 1) ** 2 == LP.monomial(1) + 2 * x + 1
    assert x - x == 0 and (x ** 0) == 1
    assert LP.monomial(Fraction(1, 3)) * LP.monomial(Fraction(1, 6)) == x
    assert hash(LP(((2, 1),), 4)) == hash(x)
    assert str(q((2, -1), (0, 3), (Fraction(-1, 2), 1))) == "-q^(2) + 3 + q^(-1/2)"
    assert jn.coefficients(KNOWN["figure_eight"]) == {Fraction(5, 2): 1, Fraction(-5, 2): 1}
    assert KNOWN["trefoil_left"].to_dict()["terms"]["-9/2"] == -1
    with pytest.raises(ValueError):
        LP(((1, 0.5),))
    with pytest.raises(ValueError):
        LP((), 0)
