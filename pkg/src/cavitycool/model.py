"""Physical parameters, derived mean-field quantities and validity checks.

All rates and frequencies are in units of the cavity field decay rate
``kappa`` (``kappa = 1`` by default). The pump phase is rotated so that the
zero-order cavity amplitude ``alpha`` is real and positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import (
    ApproximationBreakdown,
    DimensionMismatch,
    NoConvergence,
    NonPositiveRate,
    TrapDestabilized,
)
from .geometry import ArrayGeometry

__all__ = [
    "SystemParams",
    "DerivedModel",
    "Margin",
    "ValidityReport",
    "derive_model",
    "check_validity",
    "solve_mean_field",
    "DEFAULT_THRESHOLD",
    "MAX_KAPPA_EFF_SHIFT",
]

DEFAULT_THRESHOLD = 0.1
# kappa_eff may exceed kappa by at most this fraction
MAX_KAPPA_EFF_SHIFT = 0.5

Detuning = Union[str, float]


@dataclass(frozen=True)
class SystemParams:
    """Inputs of one cooling configuration.

    ``detuning`` is either the string ``"sideband"`` (pump adjusted so that
    the dressed detuning equals ``-nu``) or an explicit bare pump-cavity
    detuning ``Delta_c``.
    """

    n_atoms: int
    kappa: float = 1.0
    gamma: float = 0.0
    g: float = 0.0
    delta_a: float = math.inf
    nu: float = 10.0
    eta: float = 0.02
    eta_p: complex = 150.0
    detuning: Detuning = "sideband"
    spont_emission: bool = False
    c_x: float = 0.4

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ValueError(f"n_atoms must be a positive integer, got {self.n_atoms!r}")
        for name in ("kappa", "nu", "eta"):
            if not getattr(self, name) > 0:
                raise NonPositiveRate(f"{name} must be > 0, got {getattr(self, name)!r}")
        if not self.gamma >= 0:
            raise NonPositiveRate(f"gamma must be >= 0, got {self.gamma!r}")
        if self.delta_a == 0:
            raise NonPositiveRate("delta_a must be non-zero")
        if not 0.0 <= self.c_x <= 1.0:
            raise ValueError(f"c_x must lie in [0, 1], got {self.c_x!r}")
        if isinstance(self.detuning, str) and self.detuning != "sideband":
            raise ValueError(f"unknown detuning policy {self.detuning!r}")

    @classmethod
    def from_cooperativities(cls, n_atoms, c_d, c_r=math.inf, delta_a=5000.0, kappa=1.0, **kw):
        """Build parameters from ``c_d = U_0/kappa`` and ``c_r = g^2/(kappa gamma)``.

        Only ``U_0 = g^2/Delta_a`` and ``gamma g^2/Delta_a^2`` enter the
        dynamics, so ``delta_a`` merely fixes the overall scale. Its default
        mirrors a Rb-87 set-up (``Delta_a / kappa = 1.2 GHz / 240 kHz``).
        """
        g2 = c_d * kappa * delta_a
        if g2 < 0:
            raise ValueError("c_d and delta_a must have the same sign")
        gamma = 0.0 if math.isinf(c_r) else g2 / (kappa * c_r)
        return cls(n_atoms=n_atoms, kappa=kappa, gamma=gamma, g=math.sqrt(g2),
                   delta_a=delta_a, **kw)

    @property
    def u0(self) -> float:
        return 0.0 if math.isinf(self.delta_a) else self.g**2 / self.delta_a

    @property
    def scatter_rate(self) -> float:
        """gamma g^2 / Delta_a^2, the free-space scattering prefactor."""
        return 0.0 if math.isinf(self.delta_a) else self.gamma * self.g**2 / self.delta_a**2

    @property
    def c_d(self) -> float:
        return self.u0 / self.kappa

    @property
    def c_r(self) -> float:
        if self.gamma == 0:
            return math.inf
        return self.g**2 / (self.kappa * self.gamma)


def _frozen(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DerivedModel:
    n_atoms: int
    kappa: float
    nu: float
    eta: float
    u0: float
    c_d: float
    c_r: float
    kappa_eff: float
    alpha: float
    pump_phase: float
    delta_c: float
    delta_c_prime: float
    spont_emission: bool
    d_ai: np.ndarray
    d_bi: np.ndarray
    k_i: np.ndarray
    nu_i: np.ndarray
    eta_i: np.ndarray
    eps_i: np.ndarray

    @property
    def coupling_scale(self) -> float:
        """Dimensionless trap shift U_0 (eta alpha)^2 / kappa."""
        return self.u0 * (self.eta * self.alpha) ** 2 / self.kappa


def _resolve_detuning(params, u0, half_cos):
    shift = u0 * np.sum(half_cos**2)
    if isinstance(params.detuning, str):
        delta_c_prime = -params.nu
        return delta_c_prime + shift, delta_c_prime
    return float(params.detuning), float(params.detuning) - shift


def derive_model(params: SystemParams, geom: ArrayGeometry) -> DerivedModel:
    """Zero-order mean field, modified trap frequencies and noise rates."""
    if geom.n_atoms != params.n_atoms:
        raise DimensionMismatch(
            f"geometry has {geom.n_atoms} atoms, parameters ask for {params.n_atoms}")
    u0 = params.u0
    s_half, c_half = geom.half_sin, geom.half_cos

    if params.spont_emission:
        d_ai = params.scatter_rate * c_half**2
    else:
        d_ai = np.zeros(params.n_atoms)
    kappa_eff = params.kappa + 0.5 * float(np.sum(d_ai))
    if kappa_eff / params.kappa - 1 >= MAX_KAPPA_EFF_SHIFT:
        raise ApproximationBreakdown(
            f"kappa_eff/kappa = {kappa_eff / params.kappa:.3g}: free-space loss dominates")

    delta_c, delta_c_prime = _resolve_detuning(params, u0, c_half)
    raw = complex(params.eta_p) / complex(kappa_eff, -delta_c_prime)
    alpha = abs(raw)
    pump_phase = -math.atan2(raw.imag, raw.real) if alpha > 0 else 0.0

    nu = params.nu
    nu_sq = nu * (nu - 4 * u0 * (params.eta * alpha) ** 2 * geom.c)
    if np.any(nu_sq <= 0):
        bad = int(np.argmin(nu_sq))
        raise TrapDestabilized(f"nu_i^2 = {nu_sq[bad]:.6g} <= 0 for atom {bad + 1}")
    nu_i = np.sqrt(nu_sq)
    eta_i = params.eta * np.sqrt(nu / nu_i)
    eps_i = 2 * u0 * eta_i * alpha * geom.s
    k_i = s_half**2 + params.c_x * c_half**2
    if params.spont_emission:
        d_bi = params.scatter_rate * (params.eta * alpha) ** 2 * k_i
    else:
        d_bi = np.zeros(params.n_atoms)

    return DerivedModel(
        n_atoms=params.n_atoms, kappa=params.kappa, nu=nu, eta=params.eta,
        u0=u0, c_d=params.c_d, c_r=params.c_r, kappa_eff=kappa_eff, alpha=alpha,
        pump_phase=pump_phase, delta_c=delta_c, delta_c_prime=delta_c_prime,
        spont_emission=params.spont_emission,
        d_ai=_frozen(d_ai), d_bi=_frozen(d_bi), k_i=_frozen(k_i),
        nu_i=_frozen(nu_i), eta_i=_frozen(eta_i), eps_i=_frozen(eps_i),
    )


@dataclass(frozen=True)
class Margin:
    """One ``lhs << rhs`` inequality; passes when ``lhs/rhs <= threshold``."""

    lhs: float
    rhs: float
    ratio: float
    ok: bool

    @classmethod
    def of(cls, lhs, rhs, threshold):
        lhs, rhs = float(lhs), float(rhs)
        if lhs == 0:
            ratio = 0.0
        elif rhs == 0 or math.isinf(lhs):
            ratio = math.inf
        else:
            ratio = abs(lhs / rhs)
        return cls(lhs, rhs, ratio, ratio <= threshold)


@dataclass(frozen=True)
class ValidityReport:
    lamb_dicke: Margin
    decay_hierarchy: Margin
    coop_collective: Margin
    coop_suppression: Margin
    weak_coupling: Margin
    eta_spread: Margin
    threshold: float = DEFAULT_THRESHOLD

    NAMES = ("lamb_dicke", "decay_hierarchy", "coop_collective",
             "coop_suppression", "weak_coupling", "eta_spread")

    @property
    def all_ok(self) -> bool:
        return all(getattr(self, n).ok for n in self.NAMES)

    def ratios(self) -> dict:
        return {n: getattr(self, n).ratio for n in self.NAMES}

    def worst(self):
        return max(((n, getattr(self, n).ratio) for n in self.NAMES), key=lambda t: t[1])


def check_validity(model: DerivedModel, params: SystemParams, geom: ArrayGeometry | None = None,
                   threshold: float = DEFAULT_THRESHOLD) -> ValidityReport:
    """Evaluate every approximation inequality as a numeric margin.

    Never raises; a violated inequality only shows up as ``ok=False``.
    ``geom`` is needed for the geometry-dependent bounds; without it the
    couplings are recovered from ``model.eps_i``.
    """
    n = model.n_atoms
    ea2 = (model.eta * model.alpha) ** 2
    if geom is not None:
        s, c_half = geom.s, geom.half_cos
    else:
        denom = 2 * model.u0 * model.eta_i * model.alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(denom != 0, model.eps_i / denom, 0.0)
        c_half = np.ones(n)

    lamb_dicke = Margin.of(6 * abs(model.u0) * ea2, model.nu, threshold)
    decay = Margin.of(0.5 * params.scatter_rate * np.sum(c_half**2), params.kappa, threshold)

    s2_min = float(np.min(s**2))
    if params.gamma == 0:
        coop_lhs = 0.0
    elif s2_min == 0:
        coop_lhs = math.inf
    else:
        coop_lhs = params.c_d**2 * n**2 / (8 * s2_min)
    coop = Margin.of(coop_lhs, params.c_r, threshold)
    suppression = Margin.of(params.scatter_rate * n**2, params.kappa, threshold)

    # bright-mode coupling 2 U0 eta alpha |s|; reduces to U0 alpha eta sqrt(2(N+1)) on the base lattice
    eps = 2 * abs(model.u0) * model.eta * model.alpha * float(np.sqrt(np.sum(s**2)))
    weak = Margin.of(eps, model.kappa_eff, threshold)
    spread = Margin.of(float(np.max(np.abs(model.eta_i / model.eta - 1))), 1.0, threshold)
    return ValidityReport(lamb_dicke, decay, coop, suppression, weak, spread, threshold)


def solve_mean_field(params: SystemParams, geom: ArrayGeometry, damping: float = 0.5,
                     max_iter: int = 10_000, tol: float = 1e-12):
    """Self-consistent cavity amplitude and atomic displacements.

    Damped fixed-point iteration of the coupled steady-state equations,
    seeded with the zero-order amplitude. The pump is rotated by the same
    phase that makes the zero-order amplitude real. The displacement
    uses ``2 U_0 eta |A|^2 s_i / (nu - 4 U_0 eta |A|^2 c_i)``, with a
    single power of ``eta``.

    Returns ``(amplitude, k_c * <x_i>)``.
    """
    model = derive_model(params, geom)
    eta_p = complex(params.eta_p) * np.exp(1j * model.pump_phase)
    u0, eta, nu = model.u0, params.eta, params.nu
    s, c = geom.s, geom.c
    base = complex(model.kappa_eff, -model.delta_c_prime)

    def displacements(amp):
        p = u0 * eta * abs(amp) ** 2
        den = nu - 4 * p * c
        if np.any(den <= 0):
            raise TrapDestabilized("mean-field displacement denominator is not positive")
        return 2 * p * s / den

    def amplitude(x):
        return eta_p / (base - 1j * u0 * np.sum(s * x + c * x**2))

    amp = complex(model.alpha)
    x = displacements(amp)
    for _ in range(max_iter):
        new_amp = (1 - damping) * amp + damping * amplitude(x)
        new_x = displacements(new_amp)
        done = (abs(new_amp - amp) <= tol * abs(new_amp)
                and float(np.max(np.abs(new_x - x), initial=0.0)) <= tol)
        amp, x = new_amp, new_x
        if done:
            return amp, x
    raise NoConvergence(f"mean field did not converge in {max_iter} iterations")


def mean_field_residual(params: SystemParams, geom: ArrayGeometry, amp, x) -> float:
    """Largest residual of both steady-state equations at ``(amp, x)``."""
    model = derive_model(params, geom)
    p = model.u0 * params.eta * abs(amp) ** 2
    r_x = x - 2 * p * geom.s / (params.nu - 4 * p * geom.c)
    den = complex(model.kappa_eff, -model.delta_c_prime) - 1j * model.u0 * np.sum(
        geom.s * x + geom.c * x**2)
    r_a = amp * den - complex(params.eta_p) * np.exp(1j * model.pump_phase)
    return float(max(abs(r_a), np.max(np.abs(r_x), initial=0.0)))
