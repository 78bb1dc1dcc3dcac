"""Jones polynomial from planar-diagram (PD) codes.

PD convention: a crossing ``X[i, j, k, l]`` lists its four edge labels
counterclockwise starting from the incoming under-strand, so the under-strand
runs ``i -> k``.  The crossing is positive when the over-strand runs
``l -> j``.

Two independent evaluators:

* :func:`bracket_state_sum` -- the planar bracket state sum over all
  ``2^n`` smoothings, in the auxiliary variable ``A``;
* :func:`skein_jones` -- the oriented skein recursion driven by the
  descending-diagram algorithm, in the variable ``t``.

:func:`jones_polynomial` normalizes the bracket so that the empty link gives
``1`` and the zero-framed unknot ``q^(1/2) + q^(-1/2)``; see
:data:`A_TO_Q_EXPONENT`.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm

# Frozen substitution A = q^(A_TO_Q_EXPONENT).  Together with the sign
# (-1)^components it reproduces J(empty) = 1 and J(unknot) = q^(1/2) + q^(-1/2);
# guarded by tests/test_jones.py::test_frozen_substitution.
A_TO_Q_EXPONENT = Fraction(-1, 4)


# --- Laurent polynomials ----------------------------------------------------------

@dataclass(frozen=True)
class LaurentPolynomial:
    """Integer Laurent polynomial in ``var`` with exponents in ``(1/scale) Z``.

    ``terms`` maps the integer ``scale * exponent`` to its coefficient; the
    default ``scale = 2`` stores exponents in units of ``q^(1/2)``.
    """

    terms: tuple = ()
    scale: int = 2
    var: str = "q"

    def __post_init__(self):
        acc: dict[int, int] = {}
        items = self.terms.items() if isinstance(self.terms, dict) else self.terms
        for e, c in items:
            if int(e) != e or int(c) != c:
                raise ValueError("exponent keys and coefficients must be integers")
            acc[int(e)] = acc.get(int(e), 0) + int(c)
        if int(self.scale) != self.scale or self.scale < 1:
            raise ValueError("scale must be a positive integer")
        object.__setattr__(self, "terms", tuple(sorted((e, c) for e, c in acc.items() if c != 0)))
        object.__setattr__(self, "scale", int(self.scale))

    @classmethod
    def monomial(cls, exponent, coeff: int = 1, var: str = "q") -> "LaurentPolynomial":
        e = Fraction(exponent)
        return cls(((e.numerator, coeff),), e.denominator, var)

    @classmethod
    def constant(cls, c: int, var: str = "q") -> "LaurentPolynomial":
        return cls(((0, c),), 1, var)

    def as_dict(self) -> dict[int, int]:
        return dict(self.terms)

    def rescaled(self, scale: int) -> "LaurentPolynomial":
        if scale % self.scale:
            raise ValueError(f"cannot express scale {self.scale} exponents at scale {scale}")
        f = scale // self.scale
        return LaurentPolynomial(tuple((e * f, c) for e, c in self.terms), scale, self.var)

    def normalized(self) -> "LaurentPolynomial":
        """Smallest scale holding every exponent (at least 2 for ``q``: units of q^(1/2))."""
        g = gcd(self.scale, *(e for e, _ in self.terms))
        new = lcm(self.scale // g, 2 if self.var == "q" else 1)
        return LaurentPolynomial(tuple((e * new // self.scale, c) for e, c in self.terms), new, self.var)

    def _common(self, other: "LaurentPolynomial"):
        if other.var != self.var:
            raise ValueError(f"variables differ: {self.var} vs {other.var}")
        s = self.scale * other.scale // gcd(self.scale, other.scale)
        return self.rescaled(s), other.rescaled(s), s

    def _coerce(self, other):
        if isinstance(other, int):
            return LaurentPolynomial.constant(other, self.var)
        return other

    def __add__(self, other):
        other = self._coerce(other)
        a, b, s = self._common(other)
        d = a.as_dict()
        for e, c in b.terms:
            d[e] = d.get(e, 0) + c
        return LaurentPolynomial(d, s, self.var)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPolynomial(tuple((e, -c) for e, c in self.terms), self.scale, self.var)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        a, b, s = self._common(other)
        d: dict[int, int] = {}
        for e1, c1 in a.terms:
            for e2, c2 in b.terms:
                d[e1 + e2] = d.get(e1 + e2, 0) + c1 * c2
        return LaurentPolynomial(d, s, self.var)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            if len(self.terms) != 1 or abs(self.terms[0][1]) != 1:
                raise ValueError("only monomials with unit coefficient can be inverted")
            e, c = self.terms[0]
            return LaurentPolynomial(((-e, c),), self.scale, self.var) ** (-n)
        out = LaurentPolynomial.constant(1, self.var)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, int):
            other = LaurentPolynomial.constant(other, self.var)
        if not isinstance(other, LaurentPolynomial) or other.var != self.var:
            return NotImplemented
        a, b, _ = self._common(other)
        return a.terms == b.terms

    def __hash__(self):
        n = self.normalized()
        return hash((n.terms, n.scale, n.var))

    def substitute(self, exponent: Fraction, var: str = "q") -> "LaurentPolynomial":
        """Substitute ``self.var = var^exponent``."""
        exponent = Fraction(exponent)
        out = {}
        scale = self.scale * exponent.denominator
        for e, c in self.terms:
            # e/self.scale * exponent = e * num / (self.scale * den)
            out[e * exponent.numerator] = out.get(e * exponent.numerator, 0) + c
        return LaurentPolynomial(out, scale, var).normalized()

    def invert_variable(self) -> "LaurentPolynomial":
        """``P(q) -> P(q^-1)``."""
        return LaurentPolynomial(tuple((-e, c) for e, c in self.terms), self.scale, self.var)

    def coefficients(self) -> dict[Fraction, int]:
        return {Fraction(e, self.scale): c for e, c in self.terms}

    def to_dict(self) -> dict:
        return {"variable": self.var,
                "terms": {_fmt_exp(Fraction(e, self.scale)): c for e, c in self.terms}}

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms, key=lambda ec: -ec[0]):
            x = Fraction(e, self.scale)
            mono = "" if x == 0 else (self.var if x == 1 else f"{self.var}^({_fmt_exp(x)})")
            mag = abs(c)
            body = (str(mag) if mono == "" else (mono if mag == 1 else f"{mag}*{mono}"))
            parts.append(("- " if c < 0 else "+ ") + body)
        s = " ".join(parts)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]

    __repr__ = __str__


def _fmt_exp(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def coefficients(J: LaurentPolynomial) -> dict[Fraction, int]:
    """Exponent -> coefficient map ``n -> a_n`` of ``J = sum a_n q^n``."""
    return J.coefficients()


# --- diagrams ------------------------------------------------------------------------

_STRAND = {0: 2, 2: 0, 1: 3, 3: 1}


@dataclass(frozen=True)
class KnotDiagram:
    """PD code plus the number of crossingless unknotted components.

    ``orientation`` optionally fixes, per crossing, whether the over-strand
    runs ``l -> j`` (True) or ``j -> l``; when omitted it is derived from the
    under-strands and, for components that never pass under, from consecutive
    edge numbering.
    """

    crossings: tuple = ()
    free_loops: int = 0
    orientation: tuple | None = None

    def __post_init__(self):
        xs = tuple(tuple(int(v) for v in x) for x in self.crossings)
        if any(len(x) != 4 for x in xs):
            raise ValueError("each crossing needs exactly four edge labels")
        counts: dict[int, int] = {}
        for x in xs:
            for e in x:
                counts[e] = counts.get(e, 0) + 1
        bad = sorted(e for e, n in counts.items() if n != 2)
        if bad:
            raise ValueError(f"malformed PD code: edges {bad} do not appear exactly twice")
        if self.free_loops < 0:
            raise ValueError("free_loops must be nonnegative")
        object.__setattr__(self, "crossings", xs)
        if self.orientation is None:
            object.__setattr__(self, "orientation", _derive_orientation(xs))
        else:
            o = tuple(bool(v) for v in self.orientation)
            if len(o) != len(xs):
                raise ValueError("orientation needs one flag per crossing")
            object.__setattr__(self, "orientation", o)

    @property
    def n_crossings(self) -> int:
        return len(self.crossings)

    @property
    def components(self) -> int:
        return _count_components(self.crossings) + self.free_loops

    def signs(self) -> list[int]:
        return [1 if o else -1 for o in self.orientation]

    @property
    def writhe(self) -> int:
        return sum(self.signs())

    def to_dict(self) -> dict:
        return {"pd": [list(x) for x in self.crossings], "free_loops": self.free_loops}

    def __str__(self) -> str:
        body = ", ".join(f"X[{','.join(map(str, x))}]" for x in self.crossings)
        return f"PD[{body}]" + (f" + {self.free_loops} loop(s)" if self.free_loops else "")


def _count_components(xs) -> int:
    parent: dict[int, int] = {}

    def find(a):
        while parent.setdefault(a, a) != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j, k, l in xs:
        for a, b in ((i, k), (j, l)):
            parent[find(a)] = find(b)
    return len({find(e) for x in xs for e in x})


def _slots(xs):
    where: dict[int, list] = {}
    for c, x in enumerate(xs):
        for s, e in enumerate(x):
            where.setdefault(e, []).append((c, s))
    return where


def _walk(xs, where, edge, head):
    """Yield ``(edge, head_slot)`` around the component, starting at ``edge`` with head ``head``."""
    e, h = edge, head
    while True:
        yield e, h
        c, s = h
        tail = (c, _STRAND[s])
        nxt = xs[c][tail[1]]
        slots = where[nxt]
        h = slots[0] if slots[1] == tail else slots[1]
        e = nxt
        if (e, h) == (edge, head):
            return


def _derive_orientation(xs) -> tuple:
    where = _slots(xs)
    heads: dict[int, tuple] = {}
    # under-strands fix orientation: edge i ends at slot 0
    seeds = [(x[0], (c, 0)) for c, x in enumerate(xs)]
    for e, h in seeds:
        if e in heads:
            continue
        for ee, hh in _walk(xs, where, e, h):
            heads[ee] = hh
    for e in sorted(where):
        if e in heads:
            continue
        # component without under-passages: follow increasing edge labels
        a, b = where[e]
        comp_a = list(_walk(xs, where, e, a))
        labels = [x for x, _ in comp_a]
        nxt = labels[1] if len(labels) > 1 else e
        choice = comp_a if (nxt == e + 1 or nxt == min(labels)) else list(_walk(xs, where, e, b))
        for ee, hh in choice:
            heads[ee] = hh
    out = []
    for c, (i, j, k, l) in enumerate(xs):
        out.append(heads[l] == (c, 3))
    return tuple(out)


def parse_pd(text: str) -> KnotDiagram:
    """Parse ``X[a,b,c,d]`` / ``X(a,b,c,d)`` text or JSON (``{"pd": [...], "free_loops": n}`` or a list)."""
    text = text.strip()
    if text.startswith("{") or text.startswith("[["):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"invalid PD JSON: {exc}") from exc
        if isinstance(d, list):
            return KnotDiagram(tuple(tuple(x) for x in d))
        return KnotDiagram(tuple(tuple(x) for x in d.get("pd", [])), int(d.get("free_loops", 0)))
    if text in ("", "[]", "PD[]"):
        return KnotDiagram()
    found = re.findall(r"X\s*[\[(]\s*([-\d\s,]+?)\s*[\])]", text)
    if not found:
        m = re.fullmatch(r"(?:unknot|O)(?:\s*\*\s*(\d+))?", text)
        if m:
            return KnotDiagram((), int(m.group(1) or 1))
        raise ValueError(f"could not parse PD code: {text[:60]!r}")
    return KnotDiagram(tuple(tuple(int(v) for v in f.split(",")) for f in found))


def unknot() -> KnotDiagram:
    return KnotDiagram((), 1)


def empty_link() -> KnotDiagram:
    return KnotDiagram()


def mirror(d: KnotDiagram) -> KnotDiagram:
    """Switch every crossing (keeps the orientation of each strand)."""
    xs, orient = [], []
    for (i, j, k, l), o in zip(d.crossings, d.orientation):
        xs.append((l, i, j, k) if o else (j, k, l, i))
        orient.append(not o)
    return KnotDiagram(tuple(xs), d.free_loops, tuple(orient))


def disjoint_union(d1: KnotDiagram, d2: KnotDiagram) -> KnotDiagram:
    shift = max((e for x in d1.crossings for e in x), default=0)
    xs = d1.crossings + tuple(tuple(e + shift for e in x) for x in d2.crossings)
    return KnotDiagram(xs, d1.free_loops + d2.free_loops, d1.orientation + d2.orientation)


def braid_closure(n_strands: int, word) -> KnotDiagram:
    """PD code of the closure of a braid word (``+i`` / ``-i`` for sigma_i^(+-1)).

    Strands run upward; ``sigma_i^+`` has the strand from position ``i``
    passing over the one from ``i + 1`` (a positive crossing).
    """
    if n_strands < 1:
        raise ValueError("need at least one strand")
    labels = list(range(1, n_strands + 1))
    bottom = list(labels)
    nxt = n_strands + 1
    xs, orient = [], []
    for g in word:
        i = abs(int(g)) - 1
        if not 0 <= i < n_strands - 1 or g == 0:
            raise ValueError(f"generator {g} out of range for {n_strands} strands")
        a, b = labels[i], labels[i + 1]
        c, d = nxt, nxt + 1
        nxt += 2
        if g > 0:
            xs.append([b, d, c, a])
            orient.append(True)
        else:
            xs.append([a, b, d, c])
            orient.append(False)
        labels[i], labels[i + 1] = c, d
    ren = {top: bot for top, bot in zip(labels, bottom)}
    # closing arcs identify each top label with the bottom label of its position
    def resolve(e):
        seen = set()
        while e in ren and ren[e] != e and e not in seen:
            seen.add(e)
            e = ren[e]
        return e
    xs = [tuple(resolve(e) for e in x) for x in xs]
    used = {e for x in xs for e in x}
    free = sum(1 for p in range(n_strands) if bottom[p] not in used)
    return KnotDiagram(tuple(xs), free, tuple(orient))


# --- bracket state sum -----------------------------------------------------------------

def _A(e: int) -> LaurentPolynomial:
    return LaurentPolynomial(((e, 1),), 1, "A")


DELTA = LaurentPolynomial(((2, -1), (-2, -1)), 1, "A")  # -A^2 - A^-2


def _loops(xs, state) -> int:
    parent: dict[int, int] = {}

    def find(a):
        while parent.setdefault(a, a) != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for (a, b, c, d), s in zip(xs, state):
        pairs = ((a, b), (c, d)) if s == 0 else ((a, d), (b, c))
        for u, v in pairs:
            parent[find(u)] = find(v)
    return len({find(e) for x in xs for e in x})


def bracket_state_sum(d: KnotDiagram) -> LaurentPolynomial:
    """``<D> = sum_states A^(#A - #B) delta^(loops)`` with ``delta = -A^2 - A^-2``.

    The A-smoothing at ``X[a,b,c,d]`` joins ``(a, b)`` and ``(c, d)``; the
    B-smoothing joins ``(a, d)`` and ``(b, c)``.  The empty diagram gives 1.
    """
    n = d.n_crossings
    acc: dict[int, int] = {}
    powers = {}
    for state in itertools.product((0, 1), repeat=n):
        loops = _loops(d.crossings, state) + d.free_loops
        if loops not in powers:
            powers[loops] = DELTA ** loops
        shift = n - 2 * sum(state)
        for e, c in powers[loops].terms:
            acc[e + shift] = acc.get(e + shift, 0) + c
    return LaurentPolynomial(acc, 1, "A")


def jones_polynomial(d: KnotDiagram, framing: int = 0) -> LaurentPolynomial:
    """``J = (-1)^c (-A^3)^(framing - w) <D>`` at ``A = q^(-1/4)``.

    ``c`` is the number of components and ``w`` the writhe.  Zero framing
    gives the ambient-isotopy invariant with ``J(empty) = 1`` and
    ``J(unknot) = q^(1/2) + q^(-1/2)``; each unit of framing multiplies by
    ``-q^(-3/4)`` (exponents then leave the half-integers).
    """
    if int(framing) != framing:
        raise ValueError("framing must be an integer")
    shift = int(framing) - d.writhe
    unit = LaurentPolynomial(((3 * shift, (-1) ** (shift % 2)),), 1, "A")
    val = unit * bracket_state_sum(d) * ((-1) ** d.components)
    return val.substitute(A_TO_Q_EXPONENT, "q")


# --- skein oracle ------------------------------------------------------------------------

def _t(e) -> LaurentPolynomial:
    return LaurentPolynomial.monomial(Fraction(e), 1, "t")


def _relabel(xs, mapping):
    def f(e):
        while e in mapping:
            e = mapping[e]
        return e
    return [tuple(f(e) for e in x) for x in xs]


def _successors(xs, orient):
    nxt, head_at = {}, {}
    for c, ((i, j, k, l), o) in enumerate(zip(xs, orient)):
        nxt[i] = k
        head_at[i] = (c, "under")
        if o:
            nxt[l] = j
            head_at[l] = (c, "over")
        else:
            nxt[j] = l
            head_at[j] = (c, "over")
    return nxt, head_at


def _first_bad_crossing(xs, orient):
    """First crossing met from below in the ordered traversal, or None if descending."""
    nxt, head_at = _successors(xs, orient)
    seen_edges, met = set(), set()
    for start in sorted({e for x in xs for e in x}):
        if start in seen_edges:
            continue
        e = start
        while e not in seen_edges:
            seen_edges.add(e)
            c, kind = head_at[e]
            if c not in met:
                met.add(c)
                if kind == "under":
                    return c
            e = nxt[e]
    return None


def _skein(xs, orient, free) -> LaurentPolynomial:
    c = _first_bad_crossing(xs, orient)
    if c is None:
        comps = _count_components(xs) + free
        return (_t(Fraction(1, 2)) * -1 - _t(Fraction(-1, 2))) ** (comps - 1)
    i, j, k, l = xs[c]
    o = orient[c]
    rest = xs[:c] + xs[c + 1:]
    rest_o = orient[:c] + orient[c + 1:]
    switched = xs[:c] + [(l, i, j, k) if o else (j, k, l, i)] + xs[c + 1:]
    switched_o = orient[:c] + [not o] + orient[c + 1:]
    pairs = ((i, j), (l, k)) if o else ((i, l), (j, k))
    mapping: dict[int, int] = {}

    def find(a):
        while a in mapping:
            a = mapping[a]
        return a

    for u, v in pairs:
        ru, rv = find(u), find(v)
        if ru != rv:
            mapping[max(ru, rv)] = min(ru, rv)
    smoothed = _relabel(rest, mapping)
    present = {e for x in smoothed for e in x}
    new_free = len({find(e) for e in (i, j, k, l)} - present)
    v_switch = _skein(switched, switched_o, free)
    v_zero = _skein(smoothed, rest_o, free + new_free)
    z = _t(Fraction(1, 2)) - _t(Fraction(-1, 2))
    if o:   # L+ = t^2 L- + t z L0
        return _t(2) * v_switch + _t(1) * z * v_zero
    return _t(-2) * v_switch - _t(-1) * z * v_zero


def skein_jones(d: KnotDiagram) -> LaurentPolynomial:
    """Standard Jones polynomial ``V(t)`` via the skein relation
    ``t^-1 V(L+) - t V(L-) = (t^(1/2) - t^(-1/2)) V(L0)``, unknot = 1.

    The empty link is assigned ``(-t^(1/2) - t^(-1/2))^(-1)`` only through
    :func:`jones_from_skein`; here it raises.
    """
    if d.components == 0:
        raise ValueError("the standard normalization is undefined on the empty link")
    return _skein(list(d.crossings), list(d.orientation), d.free_loops).normalized()


def jones_from_skein(d: KnotDiagram) -> LaurentPolynomial:
    """Skein oracle in the module normalization: ``(-1)^(c-1) (q^(1/2) + q^(-1/2)) V(q)``."""
    if d.components == 0:
        return LaurentPolynomial.constant(1)
    V = skein_jones(d)
    q = LaurentPolynomial(tuple(V.terms), V.scale, "q")
    return (LaurentPolynomial.monomial(Fraction(1, 2)) + LaurentPolynomial.monomial(Fraction(-1, 2))) \
        * q * ((-1) ** (d.components - 1))


# --- reference diagrams -------------------------------------------------------------------

TREFOIL_LEFT = "X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]"
FIGURE_EIGHT = "X[4,2,5,1] X[8,6,1,5] X[6,3,7,4] X[2,7,3,8]"
HOPF = "X[4,1,3,2] X[2,3,1,4]"


def corpus() -> dict[str, KnotDiagram]:
    """Named test diagrams (several of them different diagrams of the same link)."""
    left = parse_pd(TREFOIL_LEFT)
    return {
        "empty": empty_link(),
        "unknot": unknot(),
        "unknot_kink_pos": braid_closure(2, [1]),
        "unknot_kink_neg": braid_closure(2, [-1]),
        "unknot_r2": braid_closure(3, [1, 2, -1, -2, 1, -1]),
        "hopf": parse_pd(HOPF),
        "hopf_braid": braid_closure(2, [1, 1]),
        "trefoil_left": left,
        "trefoil_right": mirror(left),
        "trefoil_right_braid": braid_closure(2, [1, 1, 1]),
        "trefoil_left_braid": braid_closure(2, [-1, -1, -1]),
        "trefoil_right_stabilized": braid_closure(3, [1, 1, 1, 2]),
        "figure_eight": parse_pd(FIGURE_EIGHT),
        "figure_eight_braid": braid_closure(3, [1, -2, 1, -2]),
        "r3_left": braid_closure(3, [1, 2, 1]),
        "r3_right": braid_closure(3, [2, 1, 2]),
        "cinquefoil": braid_closure(2, [1] * 5),
        "unlink2": KnotDiagram((), 2),
        "three_twist_8": braid_closure(3, [1, 1, -2, 1, 1, -2, 1, -2]),
    }
