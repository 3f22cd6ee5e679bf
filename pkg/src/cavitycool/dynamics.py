"""Linearized fluctuation dynamics ``Y' = M Y + S``.

The fluctuation vector is ordered ``(a, b_1..b_N, a^+, b_1^+..b_N^+)`` so the
conjugate blocks are contiguous. ``D`` holds the delta-correlated noise
moments, ``<S_j(t) S_k(t')> = D_jk delta(t - t')``; the second-moment matrix
``V_jk = <Y_j Y_k>`` then obeys ``V' = M V + V M^T + D``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.integrate import solve_ivp

from .errors import (
    DimensionMismatch,
    EigenFailure,
    NegativeOccupation,
    NotHurwitz,
    SolverSingular,
    StepSizeUnderflow,
)
from .geometry import ArrayGeometry
from .model import DerivedModel, SystemParams, derive_model

__all__ = [
    "LinearSystem",
    "SteadyReport",
    "MomentTrajectory",
    "build_linear_system",
    "eigen_rates",
    "steady_covariance",
    "phonon_numbers",
    "integrate_moments",
    "thermal_covariance",
    "lyapunov_residual",
    "steady_report",
    "HURWITZ_TOL",
    "NEGATIVE_TOL",
]

HURWITZ_TOL = 1e-12
NEGATIVE_TOL = 1e-10
RESIDUAL_TOL = 1e-10
IMPLICIT_METHODS = ("Radau", "BDF", "LSODA")


@dataclass(frozen=True, eq=False)
class LinearSystem:
    n_atoms: int
    m: np.ndarray
    d: np.ndarray
    kappa: float = 1.0
    basis_labels: tuple = field(default=())

    def __post_init__(self):
        dim = 2 * self.n_atoms + 2
        if self.m.shape != (dim, dim) or self.d.shape != (dim, dim):
            raise DimensionMismatch(f"expected {dim}x{dim} matrices for N={self.n_atoms}")
        if not self.basis_labels:
            object.__setattr__(self, "basis_labels", basis_labels(self.n_atoms))
        self.m.setflags(write=False)
        self.d.setflags(write=False)

    @property
    def dim(self) -> int:
        return 2 * self.n_atoms + 2

    def conjugate_index(self, j: int) -> int:
        half = self.n_atoms + 1
        return j + half if j < half else j - half

    def atom_index(self, i: int) -> int:
        """Row of ``b_i`` for the 0-based atom ``i``."""
        return 1 + i

    def atom_dag_index(self, i: int) -> int:
        return self.n_atoms + 2 + i


def basis_labels(n_atoms: int) -> tuple:
    b = [f"b{i}" for i in range(1, n_atoms + 1)]
    return tuple(["a"] + b + ["a+"] + [x + "+" for x in b])


def build_linear_system(model: DerivedModel, geom: ArrayGeometry,
                        params: SystemParams | None = None) -> LinearSystem:
    """Assemble the drift and diffusion matrices.

    Couplings use the per-atom Lamb-Dicke parameter ``eta_i``. With
    spontaneous emission on, the cavity damping is ``kappa_eff`` and the
    free-space noise (extra cavity loss, momentum kicks and their
    cross-correlation) enters ``D``.
    """
    n = model.n_atoms
    if geom.n_atoms != n:
        raise DimensionMismatch(f"geometry has {geom.n_atoms} atoms, model has {n}")
    dim = 2 * n + 2
    a, ad = 0, n + 1
    b = np.arange(1, n + 1)
    bd = b + n + 1

    m = np.zeros((dim, dim), dtype=complex)
    m[a, a] = complex(-model.kappa_eff, model.delta_c_prime)
    m[ad, ad] = np.conj(m[a, a])
    m[b, b] = -1j * model.nu_i
    m[bd, bd] = 1j * model.nu_i
    g = 1j * model.u0 * model.eta_i * model.alpha * geom.s
    for rows, cols, val in (
        (a, b, g), (a, bd, g), (ad, b, -g), (ad, bd, -g),
        (b, a, g), (b, ad, g), (bd, a, -g), (bd, ad, -g),
    ):
        m[rows, cols] = val

    d = np.zeros((dim, dim), dtype=complex)
    d[a, ad] = 2 * model.kappa + np.sum(model.d_ai)
    if model.spont_emission:
        # momentum noise enters b_i with -i (dp/dp_i) sqrt(D_bi), dp/dp_i = eta_i/eta
        r = model.eta_i / model.eta
        heat = r**2 * model.d_bi
        d[b, b] = -heat
        d[b, bd] = heat
        d[bd, b] = heat
        d[bd, bd] = -heat
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = np.where(model.k_i > 0,
                            np.sqrt(model.d_ai * model.d_bi / model.k_i), 0.0)
        cross = r * corr * geom.half_sin
        d[a, b] = cross
        d[a, bd] = -cross
        d[b, ad] = -cross
        d[bd, ad] = cross
    return LinearSystem(n_atoms=n, m=m, d=d, kappa=model.kappa)


def eigen_rates(sys: LinearSystem):
    """Eigenvalues of ``M`` and the polaritonic population decay rates.

    Returns ``(eigenvalues, rates)`` where ``rates`` are ``-2 Re(mu)`` with
    each conjugate pair counted once, sorted ascending (``N + 1`` values).
    """
    if not np.all(np.isfinite(sys.m)):
        raise EigenFailure("drift matrix has non-finite entries")
    try:
        mu = np.linalg.eigvals(sys.m)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    mu = mu[np.lexsort((mu.imag, mu.real))]
    scale = max(1.0, float(np.max(np.abs(mu))))
    tol = 1e-9 * scale
    upper = mu[mu.imag > tol]
    real = np.sort(mu[np.abs(mu.imag) <= tol].real)
    picked = np.concatenate([upper.real, real[::2]])
    rates = np.sort(-2 * picked)
    return mu, rates


def _check_hurwitz(sys: LinearSystem, mu=None):
    if mu is None:
        mu = np.linalg.eigvals(sys.m)
    worst = float(np.max(mu.real))
    if worst >= -HURWITZ_TOL * sys.kappa:
        raise NotHurwitz(f"max Re(mu) = {worst:.3e}: an undamped or unstable mode is present")
    return mu


def steady_covariance(sys: LinearSystem) -> np.ndarray:
    """Solve ``M V + V M^T + D = 0`` for the stationary second moments."""
    _check_hurwitz(sys)
    if not np.any(sys.d):
        return np.zeros_like(sys.d)
    m = sys.m
    dnorm = np.linalg.norm(sys.d, np.inf)
    try:
        # Bartels-Stewart on one shared Schur form, plus refinement sweeps
        # because slow modes make V large compared to D
        tri, z = linalg.schur(m, output="complex")
        zh = z.conj().T

        def solve(rhs):
            f = zh @ rhs @ zh.T
            y = linalg.solve_sylvester(tri, tri.T, f)
            return z @ y @ z.T

        v = solve(-sys.d)
        res = lyapunov_residual(sys, v)
        for _ in range(3):
            if res < 0.01 * RESIDUAL_TOL * dnorm:
                break
            v = v + solve(-(m @ v + v @ m.T + sys.d))
            res = lyapunov_residual(sys, v)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SolverSingular(str(exc)) from exc
    # the exact solution obeys <Y_j Y_k>^* = <Y_k^+ Y_j^+>; project onto it
    perm = np.array([sys.conjugate_index(j) for j in range(sys.dim)])
    v = 0.5 * (v + v[np.ix_(perm, perm)].T.conj())
    res = lyapunov_residual(sys, v)
    if not res < RESIDUAL_TOL * dnorm:
        raise SolverSingular(f"Lyapunov residual {res:.3e} exceeds {RESIDUAL_TOL:g} * |D|")
    return v


def lyapunov_residual(sys: LinearSystem, v: np.ndarray) -> float:
    return float(np.linalg.norm(sys.m @ v + v @ sys.m.T + sys.d, np.inf))


def phonon_numbers(cov: np.ndarray, sys: LinearSystem):
    """Per-atom ``<b_i^+ b_i>`` and their mean."""
    n = sys.n_atoms
    idx = np.arange(n)
    occ = cov[sys.atom_dag_index(idx), sys.atom_index(idx)].real.copy()
    if np.any(occ < -NEGATIVE_TOL):
        i = int(np.argmin(occ))
        raise NegativeOccupation(f"atom {i + 1} has occupation {occ[i]:.3e}")
    return occ, float(np.mean(occ))


def thermal_covariance(sys: LinearSystem, n_thermal=0.0, cavity_vacuum=True) -> np.ndarray:
    """Second moments of uncorrelated thermal atoms and a vacuum cavity."""
    n = sys.n_atoms
    occ = np.broadcast_to(np.asarray(n_thermal, dtype=float), (n,))
    v = np.zeros((sys.dim, sys.dim), dtype=complex)
    if cavity_vacuum:
        v[0, n + 1] = 1.0
    for i in range(n):
        b, bd = sys.atom_index(i), sys.atom_dag_index(i)
        v[bd, b] = occ[i]
        v[b, bd] = occ[i] + 1.0
    return v


@dataclass(frozen=True, eq=False)
class MomentTrajectory:
    t: np.ndarray
    v: np.ndarray
    nfev: int

    @property
    def final(self) -> np.ndarray:
        return self.v[-1]

    def phonons(self, sys: LinearSystem) -> np.ndarray:
        """``<b_i^+ b_i>(t)`` with shape ``(len(t), N)``."""
        idx = np.arange(sys.n_atoms)
        return self.v[:, sys.atom_dag_index(idx), sys.atom_index(idx)].real


def integrate_moments(sys: LinearSystem, t_final: float, n_samples: int = 201,
                      v0: np.ndarray | None = None, rtol: float = 1e-10,
                      atol: float = 1e-14, method: str = "DOP853") -> MomentTrajectory:
    """Integrate ``V' = M V + V M^T + D`` in time from ``V(0)`` (zero by default).

    Independent of the Lyapunov solve; used as its cross-check. Any
    ``scipy.integrate.solve_ivp`` method works; the implicit ones
    (``"Radau"``, ``"BDF"``, ``"LSODA"``) receive the exact Jacobian.
    """
    if not t_final > 0:
        raise ValueError("t_final must be positive")
    dim = sys.dim
    size = dim * dim
    m, mt, d = sys.m, sys.m.T, sys.d
    v_init = np.zeros(size, dtype=complex) if v0 is None else np.array(v0, dtype=complex).ravel()
    t_eval = np.linspace(0.0, t_final, n_samples)

    if method in IMPLICIT_METHODS:
        # implicit solvers work on real states: split and pass the exact Jacobian
        eye = np.eye(dim)
        jac = np.kron(m, eye) + np.kron(eye, m)
        jac_real = np.block([[jac.real, -jac.imag], [jac.imag, jac.real]])

        def rhs(_t, y):
            v = (y[:size] + 1j * y[size:]).reshape(dim, dim)
            dv = (m @ v + v @ mt + d).ravel()
            return np.concatenate([dv.real, dv.imag])

        y0 = np.concatenate([v_init.real, v_init.imag])
        sol = solve_ivp(rhs, (0.0, t_final), y0, method=method, t_eval=t_eval,
                        rtol=rtol, atol=atol, jac=lambda _t, _y: jac_real)
        ys = sol.y[:size] + 1j * sol.y[size:]
    else:
        def rhs(_t, y):
            v = y.reshape(dim, dim)
            return (m @ v + v @ mt + d).ravel()

        sol = solve_ivp(rhs, (0.0, t_final), v_init, method=method, t_eval=t_eval,
                        rtol=rtol, atol=atol)
        ys = sol.y
    if sol.status != 0:
        raise StepSizeUnderflow(sol.message)
    v = ys.T.reshape(-1, dim, dim)
    return MomentTrajectory(t=sol.t, v=v, nfev=sol.nfev)


@dataclass(frozen=True, eq=False)
class SteadyReport:
    eigenvalues: np.ndarray
    decay_rates: np.ndarray
    phonons: np.ndarray
    covariance: np.ndarray
    regime_label: str

    @property
    def min_rate(self) -> float:
        return float(self.decay_rates[0])

    @property
    def max_rate(self) -> float:
        return float(self.decay_rates[-1])

    @property
    def mean_phonon(self) -> float:
        return float(np.mean(self.phonons))


def steady_report(params: SystemParams, geom: ArrayGeometry,
                  model: DerivedModel | None = None) -> SteadyReport:
    """Full numerical pipeline for one configuration."""
    from .analytics import regime_classify

    if model is None:
        model = derive_model(params, geom)
    sys = build_linear_system(model, geom, params)
    mu, rates = eigen_rates(sys)
    _check_hurwitz(sys, mu)
    cov = steady_covariance(sys)
    occ, _ = phonon_numbers(cov, sys)
    label, _, _ = regime_classify(model, params)
    return SteadyReport(eigenvalues=mu, decay_rates=rates, phonons=occ,
                        covariance=cov, regime_label=label)
