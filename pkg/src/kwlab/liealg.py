"""Matrix Lie algebra helpers.

Lie-algebra values are plain ``numpy`` arrays of shape ``(..., N, N)`` holding
anti-hermitian matrices (compact real form).  Every function here broadcasts
over leading axes, so a whole grid of matrices can be passed at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ATOL = 1e-12


def is_anti_hermitian(X: np.ndarray, atol: float = ATOL) -> bool:
    X = np.asarray(X)
    return bool(np.max(np.abs(X + np.conj(np.swapaxes(X, -1, -2))), initial=0.0) <= atol)


def is_traceless(X: np.ndarray, atol: float = ATOL) -> bool:
    return bool(np.max(np.abs(np.trace(np.asarray(X), axis1=-2, axis2=-1)), initial=0.0) <= atol)


def lie_element(entries, traceless: bool = False, atol: float = ATOL) -> np.ndarray:
    """Validate and return ``entries`` as a complex anti-hermitian matrix array."""
    X = np.asarray(entries, dtype=complex)
    if X.ndim < 2 or X.shape[-1] != X.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {X.shape}")
    if not is_anti_hermitian(X, atol):
        raise ValueError("matrix is not anti-hermitian")
    if traceless and not is_traceless(X, atol):
        raise ValueError("matrix is not traceless")
    return X


def anti_hermitian_part(M: np.ndarray, traceless: bool = False) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    X = 0.5 * (M - np.conj(np.swapaxes(M, -1, -2)))
    if traceless:
        n = X.shape[-1]
        tr = np.trace(X, axis1=-2, axis2=-1) / n
        X = X - tr[..., None, None] * np.eye(n)
    return X


def _check_dims(X: np.ndarray, Y: np.ndarray) -> None:
    if X.shape[-2:] != Y.shape[-2:]:
        raise ValueError(f"dimension mismatch: {X.shape[-2:]} vs {Y.shape[-2:]}")


def commutator(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Return ``XY - YX`` (broadcast over leading axes)."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    _check_dims(X, Y)
    return X @ Y - Y @ X


def trace_form(X: np.ndarray, Y: np.ndarray) -> np.ndarray | float:
    """Invariant inner product ``-Re Tr(XY)``; positive definite on u(N)."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    _check_dims(X, Y)
    val = -np.real(np.einsum("...ij,...ji->...", X, Y))
    return float(val) if np.ndim(val) == 0 else val


def norm_sq(X: np.ndarray) -> np.ndarray:
    """Squared Frobenius norm of the trailing matrix axes.

    Equals ``trace_form(X, X)`` for anti-hermitian input, and stays meaningful
    for the complex combinations used by the extended Bogomolny operators.
    """
    X = np.asarray(X)
    return np.sum(np.abs(X) ** 2, axis=(-2, -1))


LEVI_CIVITA_3 = np.zeros((3, 3, 3))
for _a, _b, _c in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
    LEVI_CIVITA_3[_a, _b, _c] = 1.0
    LEVI_CIVITA_3[_a, _c, _b] = -1.0


@dataclass(frozen=True)
class Su2Triple:
    """Three matrices with ``[t1, t2] = t3`` and cyclic permutations."""

    t1: np.ndarray
    t2: np.ndarray
    t3: np.ndarray

    def __post_init__(self):
        shape = np.shape(self.t1)
        for name in ("t1", "t2", "t3"):
            t = np.array(getattr(self, name), dtype=complex)
            if t.shape != shape or t.ndim != 2 or shape[0] != shape[1]:
                raise ValueError("triple members must be square matrices of a common size")
            t.setflags(write=False)
            object.__setattr__(self, name, t)

    @property
    def dim(self) -> int:
        return self.t1.shape[0]

    def as_array(self) -> np.ndarray:
        return np.stack([self.t1, self.t2, self.t3])

    def bracket_defect(self) -> float:
        """Max-norm of ``[t_a, t_b] - eps_abc t_c`` over all pairs."""
        t = self.as_array()
        worst = 0.0
        for a in range(3):
            for b in range(3):
                expected = np.einsum("c,cij->ij", LEVI_CIVITA_3[a, b], t)
                worst = max(worst, float(np.max(np.abs(commutator(t[a], t[b]) - expected))))
        return worst

    def check(self, atol: float = ATOL) -> "Su2Triple":
        defect = self.bracket_defect()
        if defect > atol:
            raise ValueError(f"su(2) relations violated by {defect:.3e}")
        return self

    def casimir(self) -> np.ndarray:
        t = self.as_array()
        return np.einsum("aij,ajk->ik", t, t)


def principal_su2(dim: int) -> Su2Triple:
    """Irreducible ``dim``-dimensional representation of su(2).

    Built from the spin ``s = (dim-1)/2`` angular momentum matrices
    ``J_a`` (hermitian, ``[J_1, J_2] = i J_3``) as ``t_a = -i J_a``, so that
    ``t3 = -i diag(s, s-1, ..., -s)`` and ``t1^2 + t2^2 + t3^2 = -s(s+1)``.
    For ``dim == 2`` this is ``t_a = -(i/2) sigma_a``.
    """
    if int(dim) != dim or dim < 2:
        raise ValueError("principal_su2 needs dim >= 2")
    dim = int(dim)
    s = (dim - 1) / 2.0
    m = s - np.arange(dim)
    # <m+1|J+|m> = sqrt(s(s+1) - m(m+1)); basis ordered m = s, s-1, ..., -s
    jplus = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        mk = m[k]
        jplus[k - 1, k] = np.sqrt(s * (s + 1) - mk * (mk + 1))
    jminus = jplus.conj().T
    j1 = 0.5 * (jplus + jminus)
    j2 = -0.5j * (jplus - jminus)
    j3 = np.diag(m).astype(complex)
    return Su2Triple(-1j * j1, -1j * j2, -1j * j3).check()


@dataclass(frozen=True)
class Cocharacter:
    """Integer weight vector of a homomorphism u(1) -> diagonal torus."""

    weights: tuple[int, ...]

    def __post_init__(self):
        if any(int(x) != x for x in self.weights):
            raise ValueError("cocharacter weights must be integers")
        w = tuple(int(x) for x in self.weights)
        if not w:
            raise ValueError("cocharacter needs at least one weight")
        if any(w[k] < w[k + 1] for k in range(len(w) - 1)):
            raise ValueError(f"weights must be sorted nonincreasing (dominant), got {w}")
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return len(self.weights)

    @property
    def is_special(self) -> bool:
        """True when the weights sum to zero (image lies in su(N))."""
        return sum(self.weights) == 0


def cocharacter_element(rho: Cocharacter, x) -> np.ndarray:
    """``diag(i n_1 x, ..., i n_N x)``; broadcasts over real array ``x``."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(rho.weights, dtype=float)
    out = np.zeros(x.shape + (rho.dim, rho.dim), dtype=complex)
    idx = np.arange(rho.dim)
    out[..., idx, idx] = 1j * x[..., None] * w
    return out
