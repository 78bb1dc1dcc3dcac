"""Finite-dimensional Morse complexes with mod-2 coefficients.

A :class:`MorseProblem` is a function ``h`` on a surface (round S^2 in R^3,
the flat torus, or the plane with confining ``h``).  Critical points give the
generators, graded by Morse index; the differential raises the index by one
and counts gradient flow lines mod 2.

Flow lines between critical points of adjacent index on a surface are shot
from the endpoint whose unstable manifold is one-dimensional: from ``q``
under ``-grad h`` when ``index(q) = 1``, or from ``p`` under ``+grad h`` when
``index(p) = 1`` (``= dim - 1``).  The unstable "sphere" is then the pair of
points ``+-eps v`` along the unstable eigenvector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import RK45
from scipy.optimize import root

DEGENERACY_THRESHOLD = 1e-8
ARRIVAL_TOL = 1e-6
SHOOT_EPS = 1e-4


class MorseError(RuntimeError):
    """Degenerate critical point, exhausted trajectory budget or ambiguous arrival."""


class TransversalityError(MorseError):
    """``d o d != 0``: the metric is not Morse-Smale for this ``h``."""


@dataclass(frozen=True)
class MorseProblem:
    """Function ``h`` with gradient and Hessian on one of the supported surfaces.

    ``manifold`` is ``"sphere"`` (unit sphere in R^3, induced metric; ``h``
    and its derivatives are ambient), ``"torus"`` (coordinates ``(u, v)`` mod
    ``2 pi``) or ``"box"`` (the square ``[-half_width, half_width]^2``; ``h``
    must grow towards its edge).  ``metric`` is a constant SPD 2x2 matrix for
    the flat cases (identity by default).
    """

    manifold: str
    h: Callable
    grad: Callable
    hess: Callable
    metric: np.ndarray | None = None
    half_width: float = 2.0
    label: str = ""

    def __post_init__(self):
        if self.manifold not in ("sphere", "torus", "box"):
            raise ValueError(f"unknown manifold {self.manifold!r}")
        if self.metric is not None:
            if self.manifold == "sphere":
                raise ValueError("the sphere uses the induced metric")
            g = np.asarray(self.metric, dtype=float)
            if g.shape != (2, 2) or not np.allclose(g, g.T) or np.linalg.eigvalsh(g).min() <= 0:
                raise ValueError("metric must be a symmetric positive-definite 2x2 matrix")
            object.__setattr__(self, "metric", g)

    @property
    def dim(self) -> int:
        return 2

    @property
    def euler_characteristic(self) -> int:
        return {"sphere": 2, "torus": 0, "box": 1}[self.manifold]

    # geometry -----------------------------------------------------------------
    def retract(self, x):
        x = np.asarray(x, dtype=float)
        if self.manifold == "sphere":
            return x / np.linalg.norm(x)
        if self.manifold == "torus":
            return np.mod(x, 2 * np.pi)
        return x

    def distance(self, x, y) -> float:
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        if self.manifold == "torus":
            d = (d + np.pi) % (2 * np.pi) - np.pi
        return float(np.linalg.norm(d))

    def tangent_basis(self, x) -> np.ndarray:
        """Columns: an orthonormal basis of the tangent space (ambient coordinates)."""
        if self.manifold != "sphere":
            return np.eye(2)
        x = self.retract(x)
        a = np.eye(3)[int(np.argmin(np.abs(x)))]
        e1 = np.cross(x, a)
        e1 /= np.linalg.norm(e1)
        return np.stack([e1, np.cross(x, e1)], axis=1)

    def metric_matrix(self) -> np.ndarray:
        return np.eye(2) if self.metric is None else self.metric

    def gradient(self, x) -> np.ndarray:
        """Riemannian gradient in ambient coordinates."""
        g = np.asarray(self.grad(x), dtype=float)
        if self.manifold == "sphere":
            x = np.asarray(x, dtype=float)
            return g - np.dot(g, x) * x
        return np.linalg.solve(self.metric_matrix(), g)

    def hessian_tangent(self, x) -> np.ndarray:
        """Covariant Hessian in the tangent basis (valid at critical points)."""
        H = np.asarray(self.hess(x), dtype=float)
        if self.manifold == "sphere":
            x = np.asarray(x, dtype=float)
            B = self.tangent_basis(x)
            lam = float(np.dot(self.grad(x), x))
            return B.T @ (H - lam * np.eye(3)) @ B
        return H

    def sample_chart(self, n_cells: int, seeds_per_cell: int, rng) -> np.ndarray:
        """Seed points, ``seeds_per_cell`` uniform draws in each of ``n_cells^2`` chart cells."""
        i, j = np.meshgrid(np.arange(n_cells), np.arange(n_cells), indexing="ij")
        cells = np.stack([i.ravel(), j.ravel()], axis=-1)
        uv = (cells[:, None, :] + rng.random((len(cells), seeds_per_cell, 2))).reshape(-1, 2) / n_cells
        if self.manifold == "sphere":
            z = 2 * uv[:, 0] - 1
            ph = 2 * np.pi * uv[:, 1]
            s = np.sqrt(1 - z * z)
            return np.stack([s * np.cos(ph), s * np.sin(ph), z], axis=-1)
        if self.manifold == "torus":
            return 2 * np.pi * uv
        return self.half_width * (2 * uv - 1)

    def contains(self, x) -> bool:
        return self.manifold != "box" or bool(np.all(np.abs(x) <= self.half_width))


# --- problem library -------------------------------------------------------------------

def sphere_height(axis=(0.0, 0.0, 1.0)) -> MorseProblem:
    """Height ``h = <axis, x>`` on the unit sphere: minimum and maximum at the poles."""
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    return MorseProblem("sphere", lambda x: float(np.dot(a, x)), lambda x: a.copy(),
                        lambda x: np.zeros((3, 3)), label="sphere height")


def _torus_bump(center, width):
    """Periodic bump ``exp(k (cos(u-u0) + cos(v-v0) - 2))`` with ``k = 1/width^2``."""
    u0, v0 = center
    k = 1.0 / width ** 2

    def b(x):
        return np.exp(k * (np.cos(x[0] - u0) + np.cos(x[1] - v0) - 2))

    def db(x):
        return b(x) * k * np.array([-np.sin(x[0] - u0), -np.sin(x[1] - v0)])

    def ddb(x):
        s = k * np.array([-np.sin(x[0] - u0), -np.sin(x[1] - v0)])
        c = -k * np.diag([np.cos(x[0] - u0), np.cos(x[1] - v0)])
        return b(x) * (np.outer(s, s) + c)

    return b, db, ddb


def torus_height(R: float = 2.0, r: float = 1.0, tilt: float = 0.3, bump: float = 0.0,
                 bump_center=(2.9, 2.6), bump_width: float = 0.4, metric=None) -> MorseProblem:
    """Height of the torus of revolution standing on its side and tilted out of the vertical.

    Embedding ``((R + r cos v) cos u, (R + r cos v) sin u, r sin v)`` with
    height ``cos(tilt) x + sin(tilt) z``; the flow uses the flat metric on
    ``(u, v)`` (or ``metric``).  ``tilt = 0`` is the classical vertical
    position, whose two saddles are joined by a flow line; any small tilt
    breaks that connection.  ``bump`` adds ``bump * b(u, v)``.
    """
    ca, sa = np.cos(tilt), np.sin(tilt)
    b, db, ddb = _torus_bump(bump_center, bump_width)

    def h(x):
        u, v = x
        return ca * (R + r * np.cos(v)) * np.cos(u) + sa * r * np.sin(v) + bump * b(x)

    def grad(x):
        u, v = x
        return np.array([-ca * (R + r * np.cos(v)) * np.sin(u),
                         -ca * r * np.sin(v) * np.cos(u) + sa * r * np.cos(v)]) + bump * db(x)

    def hess(x):
        u, v = x
        huu = -ca * (R + r * np.cos(v)) * np.cos(u)
        huv = ca * r * np.sin(v) * np.sin(u)
        hvv = -ca * r * np.cos(v) * np.cos(u) - sa * r * np.sin(v)
        return np.array([[huu, huv], [huv, hvv]]) + bump * ddb(x)

    return MorseProblem("torus", h, grad, hess, metric=metric,
                        label=f"torus height (tilt {tilt}, bump {bump})")


def box_paraboloid(half_width: float = 2.0, metric=None) -> MorseProblem:
    """``h = x^2 + y^2`` on the plane, seeded over the box of ``half_width``."""
    return MorseProblem("box", lambda x: float(x[0] ** 2 + x[1] ** 2), lambda x: 2 * np.asarray(x, dtype=float),
                        lambda x: 2 * np.eye(2), metric=metric, half_width=half_width, label="box paraboloid")


PROBLEMS = {"sphere": sphere_height, "torus": torus_height, "box": box_paraboloid}


# --- critical points ---------------------------------------------------------------

@dataclass(frozen=True)
class CriticalPoint:
    point: tuple
    index: int
    value: float
    hessian_eigenvalues: tuple = ()

    def to_dict(self) -> dict:
        return {"point": list(self.point), "index": self.index, "value": self.value,
                "hessian_eigenvalues": list(self.hessian_eigenvalues)}


def _solve(problem: MorseProblem, x0):
    if problem.manifold == "sphere":
        def eq(z):
            x, lam = z[:3], z[3]
            return np.concatenate([problem.grad(x) - lam * x, [np.dot(x, x) - 1.0]])
        sol = root(eq, np.concatenate([x0, [np.dot(problem.grad(x0), x0)]]), method="hybr", tol=1e-14)
        return problem.retract(sol.x[:3])
    sol = root(lambda x: problem.grad(x), x0, jac=lambda x: problem.hess(x), method="hybr", tol=1e-14)
    return problem.retract(sol.x)


def classify(problem: MorseProblem, x) -> CriticalPoint:
    """Morse index of a critical point (raises on a degenerate Hessian)."""
    ev = np.linalg.eigvalsh(problem.hessian_tangent(x))
    if np.min(np.abs(ev)) < DEGENERACY_THRESHOLD:
        raise MorseError(f"degenerate critical point at {np.round(x, 8).tolist()}: Hessian eigenvalues {ev.tolist()}")
    return CriticalPoint(tuple(float(c) for c in x), int(np.sum(ev < 0)), float(problem.h(x)),
                         tuple(float(e) for e in ev))


def find_critical_points(problem: MorseProblem, seeds_per_cell: int = 2, tol: float = 1e-10,
                         n_cells: int = 8, seed: int = 0) -> list[CriticalPoint]:
    """All critical points reached by root-finding from chart seeds, deduplicated within ``10 tol``.

    Returned sorted by (index, value, coordinates).
    """
    rng = np.random.default_rng(seed)
    found: list[np.ndarray] = []
    for x0 in problem.sample_chart(n_cells, seeds_per_cell, rng):
        x = _solve(problem, x0)
        if not np.all(np.isfinite(x)) or not problem.contains(x):
            continue
        if np.linalg.norm(problem.gradient(x)) >= tol:
            continue
        if any(problem.distance(x, y) < 10 * tol for y in found):
            continue
        found.append(x)
    pts = [classify(problem, x) for x in found]
    return sorted(pts, key=lambda c: (c.index, c.value, c.point))


# --- flow lines ---------------------------------------------------------------------

def _unstable_direction(problem: MorseProblem, c: CriticalPoint, sign: float) -> np.ndarray:
    """Ambient unstable direction of ``dx/dt = sign * grad h`` at ``c`` (must be one-dimensional)."""
    x = np.asarray(c.point)
    B = problem.tangent_basis(x)
    G = np.eye(2) if problem.manifold == "sphere" else problem.metric_matrix()
    lam, vec = np.linalg.eig(sign * np.linalg.solve(G, problem.hessian_tangent(x)))
    lam, vec = lam.real, vec.real
    unstable = np.flatnonzero(lam > 0)
    if len(unstable) != 1:
        raise MorseError(f"unstable manifold of dimension {len(unstable)}; only 1 is supported")
    v = B @ vec[:, unstable[0]]
    return v / np.linalg.norm(v)


def _shoot(problem: MorseProblem, start, sign: float, critical: list[CriticalPoint], source: int,
           arrive_tol: float, max_steps: int) -> int | None:
    """Follow ``dx/dt = sign * grad h``; index into ``critical`` of the arrival point, or None if it escapes."""
    def rhs(_t, x):
        return sign * problem.gradient(problem.retract(x))

    solver = RK45(rhs, 0.0, np.asarray(start, dtype=float), t_bound=np.inf, rtol=1e-10, atol=1e-12)
    pts = [np.asarray(c.point) for c in critical]
    for _ in range(max_steps):
        solver.step()
        if solver.status == "failed":
            raise MorseError("flow integration failed")
        x = problem.retract(solver.y)
        if not problem.contains(x):
            return None
        d = np.array([problem.distance(x, p) for p in pts])
        near = np.flatnonzero(d < arrive_tol)
        near = near[near != source]
        if len(near) > 1:
            raise MorseError("ambiguous arrival: several critical points within the arrival tolerance")
        if len(near) == 1:
            return int(near[0])
    raise MorseError(f"trajectory budget of {max_steps} steps exhausted")


def flow_line_count(problem: MorseProblem, p: CriticalPoint, q: CriticalPoint,
                    critical: list[CriticalPoint] | None = None, eps: float = SHOOT_EPS,
                    arrive_tol: float = ARRIVAL_TOL, max_steps: int = 20000) -> int:
    """Number of flow lines of ``-grad h`` from ``q`` down to ``p`` (``index(q) = index(p) + 1``)."""
    if q.index != p.index + 1:
        raise ValueError("flow lines are counted between critical points of adjacent index")
    critical = find_critical_points(problem) if critical is None else list(critical)
    ip = critical.index(p)
    iq = critical.index(q)
    if q.index == 1:
        src, dst, sign = iq, ip, -1.0
    elif p.index == problem.dim - 1:
        src, dst, sign = ip, iq, +1.0
    else:
        raise MorseError("neither endpoint has a one-dimensional unstable manifold")
    v = _unstable_direction(problem, critical[src], sign)
    x0 = np.asarray(critical[src].point)
    count = 0
    for s in (1.0, -1.0):
        start = problem.retract(x0 + s * eps * v)
        hit = _shoot(problem, start, sign, critical, src, arrive_tol, max_steps)
        if hit is not None and critical[hit].index != critical[dst].index:
            raise TransversalityError(f"flow line joins critical points of indices {critical[src].index} "
                                      f"and {critical[hit].index}: not Morse-Smale")
        count += hit == dst
    return count


def count_flow_lines(problem: MorseProblem, p: CriticalPoint, q: CriticalPoint,
                     critical: list[CriticalPoint] | None = None, **kw) -> int:
    """Flow-line count from ``q`` to ``p`` mod 2."""
    return flow_line_count(problem, p, q, critical, **kw) % 2


# --- complex and homology --------------------------------------------------------------

def gf2_rank(M) -> int:
    """Rank over GF(2) by Gaussian elimination."""
    A = (np.asarray(M, dtype=np.int64) % 2).astype(np.uint8)
    if A.size == 0:
        return 0
    A = A.copy()
    rank = 0
    rows, cols = A.shape
    for c in range(cols):
        piv = np.flatnonzero(A[rank:, c])
        if len(piv) == 0:
            continue
        r = rank + piv[0]
        A[[rank, r]] = A[[r, rank]]
        others = np.flatnonzero(A[:, c])
        others = others[others != rank]
        A[others] ^= A[rank]
        rank += 1
        if rank == rows:
            break
    return rank


@dataclass
class MorseComplex:
    """Generators graded by index and the mod-2 differential ``d_k: C_k -> C_{k+1}``.

    ``differential[k]`` has shape ``(n_{k+1}, n_k)`` with entry ``[q, p]`` the
    flow-line parity ``n_pq``.
    """

    critical_points: list
    differential: dict
    flow_counts: dict = field(default_factory=dict)
    label: str = ""
    dim: int = 2

    def generators(self, k: int) -> list[CriticalPoint]:
        return [c for c in self.critical_points if c.index == k]

    @property
    def top(self) -> int:
        return max((c.index for c in self.critical_points), default=0)

    def d_squared(self) -> dict[int, np.ndarray]:
        return {k: (self.differential[k + 1] @ self.differential[k]) % 2
                for k in self.differential if k + 1 in self.differential}

    def d_squared_zero(self) -> bool:
        return all(not m.any() for m in self.d_squared().values())

    def betti(self, top: int | None = None) -> tuple[int, ...]:
        top = self.dim if top is None else top
        out = []
        for k in range(top + 1):
            n = len(self.generators(k))
            r_out = gf2_rank(self.differential[k]) if k in self.differential else 0
            r_in = gf2_rank(self.differential[k - 1]) if k - 1 in self.differential else 0
            out.append(n - r_out - r_in)
        return tuple(out)

    @property
    def euler_characteristic(self) -> int:
        """Signed count ``sum_p (-1)^index(p)``."""
        return sum((-1) ** c.index for c in self.critical_points)

    def to_dict(self) -> dict:
        return {"label": self.label,
                "critical_points": [c.to_dict() for c in self.critical_points],
                "differential": {str(k): m.tolist() for k, m in sorted(self.differential.items())},
                "flow_counts": {f"{a}->{b}": n for (a, b), n in sorted(self.flow_counts.items())},
                "d_squared_zero": self.d_squared_zero(),
                "betti": list(self.betti()),
                "dim": self.dim,
                "euler_characteristic": self.euler_characteristic}


def build_complex(problem: MorseProblem, seeds_per_cell: int = 2, tol: float = 1e-10, **kw) -> MorseComplex:
    """Morse complex of ``problem``; raises :class:`TransversalityError` when ``d o d != 0``."""
    crit = find_critical_points(problem, seeds_per_cell, tol)
    top = max((c.index for c in crit), default=0)
    by_index = {k: [c for c in crit if c.index == k] for k in range(top + 1)}
    diff = {}
    counts = {}
    for k in range(top):
        M = np.zeros((len(by_index[k + 1]), len(by_index[k])), dtype=np.int64)
        for j, p in enumerate(by_index[k]):
            for i, q in enumerate(by_index[k + 1]):
                n = flow_line_count(problem, p, q, crit, **kw)
                counts[(crit.index(q), crit.index(p))] = n
                M[i, j] = n % 2
        diff[k] = M
    cx = MorseComplex(crit, diff, counts, problem.label, problem.dim)
    if not cx.d_squared_zero():
        raise TransversalityError("d o d != 0 mod 2: the flow is not Morse-Smale for this metric; "
                                  "perturb h or the metric")
    return cx
