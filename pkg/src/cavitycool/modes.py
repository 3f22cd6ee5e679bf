"""Bright and dark collective modes of the base lattice.

The bright mode ``X`` carries the normalized coupling profile
``sqrt(2/(N+1)) sin(pi i/(N+1))``. The dark modes ``X_j`` diagonalize the
trap-frequency shifts inside the orthogonal complement, so in the mode
basis the cavity talks only to ``X`` and each ``X_j`` talks only to ``X``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StructureViolation, WrongGeometry
from .geometry import ArrayGeometry
from .model import DerivedModel

__all__ = [
    "ModeTransform",
    "CouplingAudit",
    "build_transform",
    "transformed_coupling_structure",
    "extended_transform",
    "is_symplectic",
]


@dataclass(frozen=True, eq=False)
class ModeTransform:
    """Rows are mode weights: row 0 is ``X``, row ``j`` is ``X_j``."""

    t: np.ndarray

    @property
    def n_atoms(self) -> int:
        return self.t.shape[0]

    @property
    def bright(self) -> np.ndarray:
        return self.t[0]

    @property
    def dark(self) -> np.ndarray:
        return self.t[1:]

    def orthonormality_error(self) -> float:
        return float(np.max(np.abs(self.t @ self.t.T - np.eye(self.n_atoms))))


def build_transform(n_atoms: int) -> ModeTransform:
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    n = n_atoms
    i = np.arange(1, n + 1)
    bright = math.sqrt(2 / (n + 1)) * np.sin(np.pi * i / (n + 1))
    if n == 1:
        return ModeTransform(np.ones((1, 1)))
    k = np.arange(1, n)
    # dark modes: sine basis on the modes 2..N of the chain, then the sine
    # transform of order N-1 that diagonalizes their nearest-neighbour mixing
    chain = math.sqrt(2 / (n + 1)) * np.sin(np.pi * np.outer(k + 1, i) / (n + 1))
    dst = math.sqrt(2 / n) * np.sin(np.pi * np.outer(k, k) / n)
    t = np.vstack([bright, dst @ chain])
    t.setflags(write=False)
    return ModeTransform(t)


def extended_transform(transform: ModeTransform) -> np.ndarray:
    """Same rotation on positions and momenta, ``diag(T, T)``."""
    z = np.zeros_like(transform.t)
    return np.block([[transform.t, z], [z, transform.t]])


def is_symplectic(s: np.ndarray, tol: float = 1e-12) -> bool:
    n = s.shape[0] // 2
    j = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
    return bool(np.max(np.abs(s.T @ j @ s - j)) <= tol)


@dataclass(frozen=True, eq=False)
class CouplingAudit:
    cavity_row: np.ndarray
    epsilon: float
    epsilon_closed: float
    omega: np.ndarray
    omega_closed: np.ndarray
    beta: np.ndarray
    beta_closed: np.ndarray
    bright_frequency: float
    dark_residual: float

    @property
    def offaxis_ratio(self) -> float:
        """Largest cavity coupling to a dark mode relative to ``epsilon``."""
        rest = np.abs(self.cavity_row[1:])
        if rest.size == 0 or not np.any(rest):
            return 0.0
        return float(np.max(rest) / abs(self.epsilon)) if self.epsilon else math.inf

    @property
    def beta_rel_error(self) -> float:
        if self.beta.size == 0:
            return 0.0
        diff = np.abs(self.beta - self.beta_closed)
        scale = np.abs(self.beta_closed)
        rel = np.where(scale > 0, diff / np.where(scale > 0, scale, 1.0), diff)
        return float(np.max(rel))


def transformed_coupling_structure(model: DerivedModel, geom: ArrayGeometry,
                                   transform: ModeTransform | None = None,
                                   cavity_tol: float = 1e-10, beta_tol: float = 1e-8,
                                   check: bool = True) -> CouplingAudit:
    """Rotate the quadratic form of the fluctuation Hamiltonian into mode space.

    Works on the position block: stiffness ``diag(nu_i^2)`` and the cavity
    coupling vector ``U_0 eta alpha s_i`` (positions in units of the bare
    ground-state width). The extracted ``epsilon``, ``omega_j`` and
    ``beta_j`` are compared with their closed forms; with ``check`` a
    failed structural assertion raises :class:`StructureViolation`.
    """
    if not geom.is_base_lattice:
        raise WrongGeometry("mode structure audit requires the base lattice")
    n = model.n_atoms
    if transform is None:
        transform = build_transform(n)
    t = transform.t
    ea = model.eta * model.alpha
    nu = model.nu

    cav = t @ (model.u0 * ea * geom.s)
    stiff = t @ np.diag(model.nu_i**2) @ t.T
    epsilon = 2 * float(cav[0])
    eps_closed = model.u0 * ea * math.sqrt(2 * (n + 1))

    j = np.arange(1, n)
    omega = np.sqrt(np.diag(stiff)[1:])
    omega_closed = np.sqrt(nu * (nu - 4 * model.u0 * ea**2 * np.cos(np.pi * j / n)))
    bright_freq = math.sqrt(stiff[0, 0])
    # -(beta_j/2)(B+B^+)(B_j+B_j^+) from W_0j X X_j with X ~ (B+B^+)/sqrt(2 nu)
    beta = -stiff[0, 1:] / np.sqrt(bright_freq * omega)
    beta_closed = (2 * model.u0 * ea**2 * math.sqrt(2 / n) * np.sqrt(nu / omega_closed)
                   * np.sin(np.pi * j / n))
    dark = stiff[1:, 1:] - np.diag(np.diag(stiff)[1:])
    dark_res = float(np.max(np.abs(dark), initial=0.0))

    audit = CouplingAudit(cavity_row=cav, epsilon=epsilon, epsilon_closed=eps_closed,
                          omega=omega, omega_closed=omega_closed, beta=beta,
                          beta_closed=beta_closed, bright_frequency=bright_freq,
                          dark_residual=dark_res)
    if check:
        if audit.offaxis_ratio > cavity_tol:
            k = int(np.argmax(np.abs(cav[1:]))) + 1
            raise StructureViolation(
                f"cavity couples to dark mode {k}: ratio {audit.offaxis_ratio:.3e}",
                entry=("cavity", k), value=float(cav[k]))
        if audit.beta_rel_error > beta_tol:
            k = int(np.argmax(np.abs(beta - beta_closed))) + 1
            raise StructureViolation(
                f"beta_{k} = {beta[k - 1]:.12g} vs closed form {beta_closed[k - 1]:.12g}",
                entry=("beta", k), value=float(beta[k - 1]))
    return audit
