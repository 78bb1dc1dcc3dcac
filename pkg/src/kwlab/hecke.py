"""Abelian Hecke modifications along y and the flux read-off from monopoles.

Coordinates on R^3 are ``(x1, x2, y)`` with the complex coordinate
``p = x1 + i x2`` on each slice.  A charge-``n`` monopole at ``(p_i, y_i)``
changes the degree of the slice line bundle by ``n`` as ``y`` crosses ``y_i``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .solutions import SingularityData, dirac_monopole

HEIGHT_ATOL = 1e-12


def _as_complex(p) -> complex:
    if isinstance(p, (list, tuple, np.ndarray)):
        if len(p) != 2:
            raise ValueError("points in C are given as [x1, x2]")
        return complex(float(p[0]), float(p[1]))
    return complex(p)


@dataclass(frozen=True)
class LineBundleState:
    """Line bundle on CP^1 recorded as a base degree plus a divisor."""

    base_degree: int = 0
    divisor: tuple = ()

    def __post_init__(self):
        merged: dict[complex, int] = {}
        for p, m in self.divisor:
            if int(m) != m:
                raise ValueError("divisor multiplicities are integers")
            p = _as_complex(p)
            merged[p] = merged.get(p, 0) + int(m)
        div = tuple(sorted(((p, m) for p, m in merged.items() if m != 0), key=lambda pm: (pm[0].real, pm[0].imag)))
        object.__setattr__(self, "divisor", div)
        object.__setattr__(self, "base_degree", int(self.base_degree))

    @property
    def degree(self) -> int:
        return self.base_degree + sum(m for _, m in self.divisor)

    @property
    def is_trivial(self) -> bool:
        return self.degree == 0


def apply_hecke(L: LineBundleState, p, n: int) -> LineBundleState:
    """``L -> L (x) O(p)^n``."""
    if int(n) != n:
        raise ValueError("Hecke modification order must be an integer")
    return LineBundleState(L.base_degree, L.divisor + ((_as_complex(p), int(n)),))


@dataclass(frozen=True)
class HeckeSequence:
    """Events ``(y_i, p_i, n_i)``, stored sorted by height; heights must be distinct."""

    events: tuple = ()

    def __post_init__(self):
        ev = []
        for y, p, n in self.events:
            if int(n) != n:
                raise ValueError("event charges must be integers")
            ev.append((float(y), _as_complex(p), int(n)))
        ev.sort(key=lambda e: e[0])
        for a, b in zip(ev, ev[1:]):
            if abs(a[0] - b[0]) <= HEIGHT_ATOL:
                raise ValueError(f"two events share the height y = {a[0]}")
        object.__setattr__(self, "events", tuple(ev))

    @property
    def total_charge(self) -> int:
        return sum(n for _, _, n in self.events)

    @property
    def heights(self) -> list[float]:
        return [y for y, _, _ in self.events]

    def concat(self, other: "HeckeSequence") -> "HeckeSequence":
        return HeckeSequence(self.events + other.events)

    def to_singularity_data(self) -> SingularityData:
        return SingularityData(tuple(((p.real, p.imag, y), n) for y, p, n in self.events))

    def states(self, start: LineBundleState | None = None) -> list[LineBundleState]:
        """Bundle after each event, starting from ``start`` (trivial by default)."""
        L = LineBundleState() if start is None else start
        out = []
        for _, p, n in self.events:
            L = apply_hecke(L, p, n)
            out.append(L)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "HeckeSequence":
        return cls(tuple((e["y"], e.get("p", [0.0, 0.0]), e["n"]) for e in d.get("events", [])))

    @classmethod
    def from_json(cls, text: str) -> "HeckeSequence":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {"events": [{"y": y, "p": [p.real, p.imag], "n": n} for y, p, n in self.events]}


@dataclass(frozen=True)
class DegreeProfile:
    """Step function ``y -> sum_{y_i < y} n_i``."""

    steps: tuple = ()

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape, dtype=int)
        for yi, n in self.steps:
            out = out + np.where(y > yi, n, 0)
        return int(out) if out.ndim == 0 else out

    @property
    def final_degree(self) -> int:
        return sum(n for _, n in self.steps)

    @property
    def returns_to_trivial(self) -> bool:
        return self.final_degree == 0

    def flags(self) -> list[str]:
        return [] if self.returns_to_trivial else [f"profile ends at degree {self.final_degree}, not 0"]

    def breakpoints(self) -> list[float]:
        return sorted({y for y, _ in self.steps})

    def __add__(self, other: "DegreeProfile") -> "DegreeProfile":
        return DegreeProfile(tuple(sorted(self.steps + other.steps)))

    def to_dict(self) -> dict:
        """Breakpoints and the degree on each interval (first entry: below all events)."""
        pts = self.breakpoints()
        vals = [0] + [sum(n for yi, n in self.steps if yi <= b) for b in pts]
        return {"breakpoints": pts, "values": vals, "returns_to_trivial": self.returns_to_trivial}


def degree_profile(seq: HeckeSequence) -> DegreeProfile:
    return DegreeProfile(tuple((y, n) for y, _, n in seq.events))


# --- flux read-off -----------------------------------------------------------------

def _disk_reach(center: complex, p: complex, radius: float, theta: np.ndarray) -> np.ndarray:
    """Distance from ``p`` to the circle ``|z - center| = radius`` along direction ``theta``."""
    c = p - center
    u = np.exp(1j * theta)
    b = np.real(np.conj(c) * u)
    disc = b * b - (abs(c) ** 2 - radius ** 2)
    return -b + np.sqrt(np.maximum(disc, 0.0))


def disk_flux(data: SingularityData, y: float, disk_radius: float, resolution: int = 256,
              center=(0.0, 0.0)) -> float:
    """``(i/2pi) int F_12 dx1 dx2`` over the disk of ``disk_radius`` in the slice at height ``y``.

    By superposition the flux splits over the sites.  Each site's share is
    integrated in polar coordinates centred on its projection, with the
    radial stretching ``rho = |d| tan(s)`` (``d = y - y_i``) and
    Gauss-Legendre nodes in ``s`` and ``theta``; the integrand is the
    sampled analytic curvature of the monopole.
    """
    c = _as_complex(center)
    if any(np.hypot(pos[0] - c.real, pos[1] - c.imag) >= disk_radius for pos, _ in data.sites):
        raise ValueError("every site must project inside the disk")
    gs, ws = np.polynomial.legendre.leggauss(resolution)
    theta = np.pi * (gs + 1.0)
    wth = np.pi * ws
    total = 0.0
    for pos, n in data.sites:
        d = y - pos[2]
        p = complex(pos[0], pos[1])
        sol = dirac_monopole(pos, n)
        reach = _disk_reach(c, p, disk_radius, theta)
        smax = np.arctan(reach / abs(d))
        s = 0.5 * (gs[None, :] + 1.0) * smax[:, None]
        ws_ = 0.5 * ws[None, :] * smax[:, None]
        rho = abs(d) * np.tan(s)
        drho = abs(d) / np.cos(s) ** 2
        pts = np.stack([pos[0] + rho * np.cos(theta)[:, None], pos[1] + rho * np.sin(theta)[:, None],
                        np.full_like(rho, y)], axis=-1)
        F12 = sol.curvature(pts)[0, 1][..., 0, 0]
        f = np.real(1j * F12) / (2 * np.pi)
        total += float(np.sum(wth[:, None] * ws_ * f * rho * drho))
    return total


def flux_degree_check(data: SingularityData, y: float, disk_radius: float = 50.0, resolution: int = 256) -> float:
    """Degree of the slice bundle at height ``y`` read from the monopole flux through a large disk."""
    if not data.is_abelian:
        raise ValueError("flux_degree_check is abelian only")
    if data.total_charge != 0:
        raise ValueError("flux read-off needs total charge zero (fields decaying at infinity)")
    for pos, _ in data.sites:
        if abs(pos[2] - y) <= HEIGHT_ATOL:
            raise ValueError(f"slice height y = {y} collides with a singular height")
    return disk_flux(data, y, disk_radius, resolution)
