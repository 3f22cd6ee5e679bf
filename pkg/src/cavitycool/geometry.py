"""Atomic positions along the cavity axis.

Positions are stored as phases ``theta_i = 2 k_c x_i``; the coupling and
trap-shift coefficients are ``s_i = sin(theta_i)`` and ``c_i = cos(theta_i)``.
Quantities depending on the single-wavelength phase ``k_c x_i`` (the
spontaneous-emission coefficients) use ``theta_i / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidStep

__all__ = [
    "ArrayGeometry",
    "base_lattice",
    "optimized_lattice",
    "explicit_lattice",
    "spacing_ratio",
]


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    phases: np.ndarray
    winding: int | None = None
    step: int | None = None
    n_steps: int | None = None
    s: np.ndarray = field(init=False, repr=False)
    c: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        phases = np.asarray(self.phases, dtype=float).copy()
        if phases.ndim != 1 or phases.size == 0:
            raise ValueError("phases must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(phases)):
            raise ValueError("phases must be finite")
        phases.setflags(write=False)
        s = np.sin(phases)
        c = np.cos(phases)
        s.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "c", c)

    @property
    def n_atoms(self) -> int:
        return self.phases.size

    @property
    def half_sin(self) -> np.ndarray:
        """sin(k_c x_i)."""
        return np.sin(0.5 * self.phases)

    @property
    def half_cos(self) -> np.ndarray:
        """cos(k_c x_i)."""
        return np.cos(0.5 * self.phases)

    @property
    def is_base_lattice(self) -> bool:
        """True when built by :func:`base_lattice` (or the l=0 optimized one)."""
        return self.winding is not None and self.step == 0

    @property
    def provenance(self) -> dict:
        if self.winding is None:
            return {"kind": "explicit"}
        return {"kind": "lattice", "n": self.winding, "l": self.step, "L": self.n_steps}

    def spacing_ratio(self) -> float | None:
        """Inter-atomic distance over cavity wavelength, d/lambda."""
        if self.winding is None:
            return None
        return spacing_ratio(self.n_atoms, self.winding, self.step, self.n_steps)


def spacing_ratio(n_atoms: int, n: int = 0, l: int = 0, L: int = 1) -> float:
    return n / 2 + (L - l) / L / (4 * (n_atoms + 1))


def _lattice_phases(n_atoms, n, l, L):
    i = np.arange(1, n_atoms + 1)
    return (l / L) * (np.pi / 2) + i * ((L - l) / L * np.pi / (n_atoms + 1) + 2 * n * np.pi)


def base_lattice(n_atoms: int, n: int = 0) -> ArrayGeometry:
    """Trap frequencies spread over the full cosine interval.

    ``theta_i = i (pi/(N+1) + 2 n pi)`` for ``i = 1..N``.
    """
    return optimized_lattice(n_atoms, n=n, l=0, L=1)


def optimized_lattice(n_atoms: int, n: int = 0, l: int = 0, L: int = 10) -> ArrayGeometry:
    """Compressed and shifted lattice used for the periodicity optimization.

    ``theta_i = (l/L)(pi/2) + i((L-l)/L * pi/(N+1) + 2 n pi)``. Step ``l = 0``
    reproduces :func:`base_lattice` exactly; larger ``l`` narrows the spread
    of trap frequencies and raises the weakest cavity coupling.
    """
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    if L < 1 or not 0 <= l < L:
        raise InvalidStep(f"optimization step l={l} outside [0, {L})")
    return ArrayGeometry(_lattice_phases(n_atoms, n, l, L), winding=n, step=l, n_steps=L)


def explicit_lattice(phases) -> ArrayGeometry:
    return ArrayGeometry(np.atleast_1d(np.asarray(phases, dtype=float)))
