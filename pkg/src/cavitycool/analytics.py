"""Closed-form cooling predictions.

Sideband weights, bright/dark collective-mode rates on the base lattice,
independent single-atom rates, steady occupations with free-space
scattering, the independent/collective regime split and the Rb-87
feasibility arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import WrongGeometry
from .geometry import ArrayGeometry
from .model import DerivedModel, SystemParams

__all__ = [
    "SidebandSpectra",
    "CollectiveModel",
    "PhononPrediction",
    "FeasibilityReport",
    "sideband_spectra",
    "collective_predictions",
    "independent_rates",
    "regime_classify",
    "phonon_predictions",
    "feasibility_report",
    "CROSSOVER_CONST",
]

# c_d * N at the independent/collective crossover of the base lattice
CROSSOVER_CONST = 2.0


@dataclass(frozen=True)
class SidebandSpectra:
    """Cooling (``s_minus``) and heating (``s_plus``) sideband weights."""

    s_plus: np.ndarray
    s_minus: np.ndarray

    @property
    def net(self):
        return self.s_minus - self.s_plus

    @property
    def occupation(self):
        """Sideband-limited occupation ``S+ / (S- - S+)``."""
        return self.s_plus / self.net


def sideband_spectra(omega, delta_c_prime: float, kappa: float = 1.0) -> SidebandSpectra:
    """``S_pm(w) = 1 / (1 + (Delta_c' -+ w)^2 / kappa^2)``."""
    omega = np.asarray(omega, dtype=float)
    s_plus = 1.0 / (1.0 + ((delta_c_prime - omega) / kappa) ** 2)
    s_minus = 1.0 / (1.0 + ((delta_c_prime + omega) / kappa) ** 2)
    return SidebandSpectra(s_plus=s_plus, s_minus=s_minus)


@dataclass(frozen=True, eq=False)
class CollectiveModel:
    epsilon: float
    beta: np.ndarray
    omega: np.ndarray
    gamma_x: float
    n_x_inf: float
    gamma_xi: np.ndarray
    gamma_xi_resolved: np.ndarray

    @property
    def gamma_x1(self) -> float:
        """Slowest dark-mode rate (``nan`` for a single atom)."""
        return float(self.gamma_xi[0]) if self.gamma_xi.size else math.nan


def collective_predictions(model: DerivedModel, params: SystemParams | None = None,
                           geom: ArrayGeometry | None = None) -> CollectiveModel:
    """Bright-mode coupling, dark-mode couplings/frequencies and their rates.

    Valid on the base lattice only. ``gamma_xi`` is ``beta_j^2 / gamma_X``;
    ``gamma_xi_resolved`` is the resolved-sideband closed form
    ``8 kappa (alpha eta)^2 sin^2(pi j/N) (nu/omega_j) / (N (N+1))``, which
    equals ``gamma_xi`` up to the factor ``S-(nu) - S+(nu)``.
    """
    if geom is not None and not geom.is_base_lattice:
        raise WrongGeometry("collective closed forms hold for the base lattice only; use numerics")
    n = model.n_atoms
    kappa = model.kappa_eff
    ea = model.eta * model.alpha
    nu = model.nu
    eps = model.u0 * ea * math.sqrt(2 * (n + 1))
    spec = sideband_spectra(nu, model.delta_c_prime, kappa)
    gamma_x = eps**2 / (2 * kappa) * float(spec.net)
    n_x_inf = float(spec.occupation)

    j = np.arange(1, n)
    omega_sq = nu * (nu - 4 * model.u0 * ea**2 * np.cos(np.pi * j / n))
    omega = np.sqrt(omega_sq)
    beta = 2 * model.u0 * ea**2 * math.sqrt(2 / n) * np.sqrt(nu / omega) * np.sin(np.pi * j / n)
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma_xi = beta**2 / gamma_x if gamma_x != 0 else np.full(j.shape, np.nan)
    resolved = (model.kappa * 8 * ea**2 / ((n + 1) * n)
                * np.sin(np.pi * j / n) ** 2 * nu / omega)
    return CollectiveModel(epsilon=eps, beta=beta, omega=omega, gamma_x=gamma_x,
                           n_x_inf=n_x_inf, gamma_xi=gamma_xi, gamma_xi_resolved=resolved)


def independent_rates(model: DerivedModel, geom: ArrayGeometry | None = None,
                      params: SystemParams | None = None) -> np.ndarray:
    """Single-atom cooling rates ``eps_i^2/(2 kappa) [S-(nu_i) - S+(nu_i)]``.

    Negative entries mean the atom is heated (blue-detuned pump).
    """
    spec = sideband_spectra(model.nu_i, model.delta_c_prime, model.kappa_eff)
    return model.eps_i**2 / (2 * model.kappa_eff) * spec.net


def regime_classify(model: DerivedModel, params: SystemParams | None = None):
    """Return ``(label, crossover_n, suppression)``.

    ``label`` is ``"independent"`` when ``c_d N < 2`` and ``"collective"``
    otherwise; ``suppression = (c_d N / 2)^2`` is the slow-down of the
    weakest atom in the collective regime.
    """
    c_d = abs(model.c_d)
    n = model.n_atoms
    label = "independent" if c_d * n < CROSSOVER_CONST else "collective"
    crossover = CROSSOVER_CONST / c_d if c_d > 0 else math.inf
    return label, crossover, (c_d * n / CROSSOVER_CONST) ** 2


@dataclass(frozen=True, eq=False)
class PhononPrediction:
    independent: np.ndarray
    collective: np.ndarray
    regime: str
    decoupled: np.ndarray

    @property
    def selected(self) -> np.ndarray:
        return self.independent if self.regime == "independent" else self.collective


def phonon_predictions(model: DerivedModel, geom: ArrayGeometry,
                       params: SystemParams | None = None) -> PhononPrediction:
    """Per-atom steady occupations with free-space scattering.

    ``independent``: ``S+/(S- - S+) (1 + K_i/(2 c_r s_i^2 S+))``.
    ``collective``: ``k^2/(4 nu_i^2) + (c_d N/2)^2/(2 c_r) K_i/s_i^2 (1 + k^2/(4 nu_i^2))``.
    Atoms with ``s_i = 0`` get ``inf`` and are flagged in ``decoupled``.
    """
    spec = sideband_spectra(model.nu_i, model.delta_c_prime, model.kappa_eff)
    s2 = geom.s**2
    decoupled = s2 == 0
    inv_cr = 0.0 if math.isinf(model.c_r) else 1.0 / model.c_r
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(decoupled, np.inf, model.k_i / np.where(decoupled, 1.0, s2))
        indep = spec.occupation * (1 + 0.5 * inv_cr * ratio / spec.s_plus)
        floor = model.kappa_eff**2 / (4 * model.nu_i**2)
        _, _, suppression = regime_classify(model)
        coll = floor + suppression * 0.5 * inv_cr * ratio * (1 + floor)
    indep = np.where(decoupled, np.inf, indep)
    coll = np.where(decoupled, np.inf, coll)
    label, _, _ = regime_classify(model)
    return PhononPrediction(independent=indep, collective=coll, regime=label,
                            decoupled=decoupled)


@dataclass(frozen=True)
class FeasibilityReport:
    """Physical numbers in Hz (angular frequencies divided by 2 pi) and seconds."""

    nu_hz: float
    kappa_hz: float
    cooling_time_s: float
    c_r: float
    c_d: float
    n_max: float
    n_at_threshold: float
    threshold: float

    def lines(self):
        return [
            f"trap frequency      nu = 2pi x {self.nu_hz / 1e6:.3f} MHz",
            f"cavity bandwidth kappa = 2pi x {self.kappa_hz / 1e3:.1f} kHz",
            f"cooling time           = {self.cooling_time_s * 1e3:.2f} ms",
            f"cooperativity      c_r = {self.c_r:.2f}",
            f"off-resonant coop. c_d = {self.c_d:.4f}",
            f"atom number bound N_max = {self.n_max:.1f} "
            f"(N <= {self.n_at_threshold:.1f} at ratio {self.threshold:g})",
        ]


def feasibility_report(recoil_hz: float, eta: float, gamma_hz: float, g_hz: float,
                       delta_a_hz: float, min_rate: float, kappa_hz: float | None = None,
                       kappa_divisor: float = 10.0,
                       threshold: float = 0.1) -> FeasibilityReport:
    """Experimental estimate from physical inputs (all frequencies as ``f = omega/2pi``).

    ``nu = omega_R / eta^2``; ``kappa = nu / kappa_divisor`` unless given;
    cooling time ``1/(min_rate * kappa)`` with angular ``kappa``;
    ``N_max = sqrt(kappa Delta_a^2 / (gamma g^2))``.
    """
    for name, val in (("recoil_hz", recoil_hz), ("eta", eta), ("gamma_hz", gamma_hz),
                      ("g_hz", g_hz), ("delta_a_hz", delta_a_hz), ("min_rate", min_rate)):
        if not val > 0:
            raise ValueError(f"{name} must be positive")
    nu = recoil_hz / eta**2
    kappa = nu / kappa_divisor if kappa_hz is None else kappa_hz
    time = 1.0 / (min_rate * 2 * math.pi * kappa)
    c_r = g_hz**2 / (kappa * gamma_hz)
    c_d = g_hz**2 / (delta_a_hz * kappa)
    n_sq = kappa * delta_a_hz**2 / (gamma_hz * g_hz**2)
    return FeasibilityReport(nu_hz=nu, kappa_hz=kappa, cooling_time_s=time, c_r=c_r, c_d=c_d,
                             n_max=math.sqrt(n_sq), n_at_threshold=math.sqrt(threshold * n_sq),
                             threshold=threshold)
