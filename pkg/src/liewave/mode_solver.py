"""Scalar mode equations ``v'' + a(t) nu^2 v = 0`` and their energy estimates.

The first-order state is ``V = (i nu v, v')`` and solves ``V' = i nu A(t) V``
with ``A = [[0, 1], [a, 0]]``.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _rk4
from .speeds import MollifiedRoots, SpeedProfile, mollified_roots

STABILITY_LIMIT = 0.5
ACCURACY_TARGET = 0.01
DT_MAX = 1e-2


class StabilityError(ValueError):
    """Time step violates ``dt * nu * sqrt(sup a) <= 0.5``."""


def check_stability(p: SpeedProfile, nu: float, dt: float) -> None:
    speed = nu * math.sqrt(p.sup)
    if dt * speed > STABILITY_LIMIT:
        raise StabilityError(
            f"dt = {dt:.3e} violates dt * nu * sqrt(sup a) <= {STABILITY_LIMIT} at nu = {nu:.6g}; "
            f"use dt <= {STABILITY_LIMIT / speed:.3e}"
        )


def default_dt(p: SpeedProfile, nu_max: float) -> float:
    speed = nu_max * math.sqrt(p.sup)
    return DT_MAX if speed == 0 else min(DT_MAX, ACCURACY_TARGET / speed)


def time_grid(T: float, dt: float, multiple: int = 1) -> tuple[int, float]:
    """Number of steps (a multiple of ``multiple``) and the step ``T / N <= dt``."""
    n = max(1, math.ceil(T / dt - 1e-9))
    n = multiple * math.ceil(n / multiple)
    return n, T / n


def _a_half(p: SpeedProfile, n: int, h: float) -> np.ndarray:
    return p(np.arange(2 * n + 1) * (h / 2))


def propagators(
    p: SpeedProfile,
    nus,
    T: float,
    dt: float,
    store_steps,
    *,
    workers: int = 1,
) -> np.ndarray:
    """Fundamental matrices ``[[y1, y2], [y1', y2']]`` at ``store_steps`` for every ``nu``.

    ``dt`` must divide ``T``. ``nu = 0`` rows are replaced by the exact ``[[1, t], [0, 1]]``.
    """
    nus = np.ascontiguousarray(nus, dtype=float)
    store = np.ascontiguousarray(store_steps, dtype=np.int64)
    n = int(round(T / dt))
    a_half = _a_half(p, n, dt)
    if workers <= 1 or nus.size < 2 * workers:
        out = _rk4.fundamental_solutions(a_half, dt, nus, store)
    else:
        chunks = np.array_split(np.arange(nus.size), workers)
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda idx: _rk4.fundamental_solutions(a_half, dt, nus[idx], store), chunks))
        out = np.concatenate(parts, axis=1)
    zero = nus == 0
    if np.any(zero):
        t = store * dt
        out[:, zero] = 0.0
        out[:, zero, 0, 0] = 1.0
        out[:, zero, 1, 1] = 1.0
        out[:, zero, 0, 1] = t[:, None]
    return out


@dataclass(frozen=True)
class ModeTrajectory:
    """Time series of one mode: ``v``, ``v'`` and ``a(t)`` on a uniform grid."""

    times: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    nu: float
    a: np.ndarray
    dt: float
    profile: str = ""

    @property
    def V(self) -> np.ndarray:
        return np.stack([1j * self.nu * self.v, self.dv], axis=-1)

    @property
    def norm(self) -> np.ndarray:
        return np.sqrt(self.nu**2 * np.abs(self.v) ** 2 + np.abs(self.dv) ** 2)

    @property
    def energy(self) -> np.ndarray:
        """Symmetriser energy ``(S V, V) = 2 a |V1|^2 + 2 |V2|^2``."""
        return 2 * self.a * self.nu**2 * np.abs(self.v) ** 2 + 2 * np.abs(self.dv) ** 2

    def _ratio(self, values) -> float:
        start = self.norm[0]
        return 1.0 if start == 0 else float(values / start)

    @property
    def amplification(self) -> float:
        """``|V(T)| / |V(0)|`` (1 for zero data)."""
        return self._ratio(self.norm[-1])

    @property
    def max_amplification(self) -> float:
        return self._ratio(self.norm.max())

    def to_csv(self, path) -> None:
        """Columns ``t, Re V1, Im V1, Re V2, Im V2, E`` with 17 significant digits."""
        V = self.V
        cols = [self.times, V[:, 0].real, V[:, 0].imag, V[:, 1].real, V[:, 1].imag, self.energy]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "Re V1", "Im V1", "Re V2", "Im V2", "E"])
            for row in zip(*cols):
                writer.writerow([f"{x:.17g}" for x in row])


def integrate_mode(
    p: SpeedProfile,
    nu: float,
    v0: complex,
    v1: complex,
    T: float | None = None,
    dt: float | None = None,
) -> ModeTrajectory:
    """Solve ``v'' + a(t) nu^2 v = 0``, ``v(0) = v0``, ``v'(0) = v1`` by RK4.

    The step is ``dt`` rounded down so that it divides ``T``; by default it is
    chosen so that ``dt * nu * sqrt(sup a) = 0.01``.

    Raises
    ------
    StabilityError
        If ``dt * nu * sqrt(sup a) > 0.5``.
    """
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    T = p.T if T is None else float(T)
    dt = default_dt(p, nu) if dt is None else float(dt)
    check_stability(p, nu, dt)
    n, h = time_grid(T, dt)
    steps = np.arange(n + 1)
    prop = propagators(p, [nu], T, h, steps)[:, 0]
    v = prop[:, 0, 0] * v0 + prop[:, 0, 1] * v1
    dv = prop[:, 1, 0] * v0 + prop[:, 1, 1] * v1
    times = steps * h
    return ModeTrajectory(times, v.astype(complex), dv.astype(complex), float(nu), p(times), h, p.name)


def system_matrix(p: SpeedProfile, t: float) -> np.ndarray:
    return np.array([[0.0, 1.0], [float(p(t)), 0.0]])


def symmetriser(p: SpeedProfile, t: float) -> np.ndarray:
    return np.diag([2 * float(p(t)), 2.0])


def quasi_symmetriser(p: SpeedProfile, t: float, epsilon: float) -> np.ndarray:
    return np.diag([2 * float(p(t)) + 2 * epsilon**2, 2.0])


def symmetriser_residual(p: SpeedProfile, t: float) -> float:
    """``||S A - A^* S||``, zero by construction."""
    S, A = symmetriser(p, t), system_matrix(p, t)
    return float(np.abs(S @ A - A.conj().T @ S).max())


@dataclass(frozen=True)
class EnergyReport:
    energy: np.ndarray
    c_prime: float
    growth_bound: float
    max_ratio: float
    sandwich_ok: bool
    log_derivative_max: float
    log_derivative_ok: bool

    @property
    def passed(self) -> bool:
        return self.sandwich_ok and self.log_derivative_ok and self.max_ratio <= self.growth_bound * (1 + 1e-9)


def _require_case(p: SpeedProfile, tags, what: str) -> None:
    if p.case_tag not in tags:
        raise ValueError(f"{what} needs a Case {'/'.join(map(str, tags))} profile, got Case {p.case_tag}")


def case1_c_prime(p: SpeedProfile) -> float:
    """``sup |a'| / min(a0, 1)``."""
    return p.sup_abs_derivative() / min(p.a0, 1.0)


def symmetriser_energy(traj: ModeTrajectory, p: SpeedProfile) -> EnergyReport:
    """Energy ``E = (S V, V)`` with the sandwich and ``E' <= c' E`` checks."""
    _require_case(p, (1,), "symmetriser_energy")
    E = traj.energy
    V2 = traj.norm**2
    lo = 2 * min(p.a0, 1.0) * V2
    hi = 2 * max(p.sup, 1.0) * V2
    scale = max(float(E.max()), 1e-300)
    sandwich = bool(np.all(lo <= E + 1e-12 * scale) and np.all(E <= hi + 1e-12 * scale))
    c_prime = case1_c_prime(p)
    T = traj.times[-1]
    if E.size >= 3 and E[0] > 0:
        dlog = (E[2:] - E[:-2]) / (2 * traj.dt) / E[1:-1]
        dlog_max = float(dlog.max())
    else:
        dlog_max = 0.0
    tol = 10 * traj.dt**2
    ratio = float(E.max() / E[0]) if E[0] > 0 else 1.0
    return EnergyReport(E, c_prime, math.exp(c_prime * T), ratio, sandwich, dlog_max, dlog_max <= c_prime + tol)


def case1_constant(trajectories) -> float:
    """Empirical ``C_1 = max_{t, nu} |V(t)| / |V(0)|``."""
    return max((tr.max_amplification for tr in trajectories), default=1.0)


def case1_bound(p: SpeedProfile, T: float | None = None) -> float:
    """``e^{c' T / 2} (c1 / c0)^(1/2)`` with ``c0 = 2 min(a0, 1)``, ``c1 = 2 max(sup a, 1)``."""
    T = p.T if T is None else T
    c0, c1 = 2 * min(p.a0, 1.0), 2 * max(p.sup, 1.0)
    return math.exp(case1_c_prime(p) * T / 2) * math.sqrt(c1 / c0)


# Case 3 --------------------------------------------------------------------

def quasi_epsilon(nu: float, ell: int) -> float:
    """``eps`` solving ``eps^(-2/ell) = eps nu``, i.e. ``nu^(-ell/(ell+2))`` (1/2 for ``nu <= 1``)."""
    if nu <= 1:
        return 0.5
    return nu ** (-ell / (ell + 2))


def quasi_constant(p: SpeedProfile) -> float:
    """``C_2 = 2 max(sup a + 1, 1) + 1``."""
    return 2 * max(p.sup + 1, 1.0) + 1


@dataclass(frozen=True)
class QuasiEnergyReport:
    epsilon: float
    energy: np.ndarray
    C2: float
    sandwich_ok: bool
    exponent: float
    c_fit: float
    sigma: float

    @property
    def passed(self) -> bool:
        return self.sandwich_ok and math.isfinite(self.c_fit)


def quasi_energy_bound(p: SpeedProfile, nu: float, epsilon: float, traj: ModeTrajectory) -> QuasiEnergyReport:
    """``E_eps = (Q_eps V, V)`` against ``E_eps(0) exp(c (eps^(-2/ell) + eps nu))``.

    ``c_fit`` is the smallest ``c`` making the bound hold on the trajectory.
    """
    _require_case(p, (3,), "quasi_energy_bound")
    if not (0 < epsilon < 1):
        raise ValueError("epsilon must lie in (0, 1)")
    ell = p.smoothness
    E = 2 * (traj.a + epsilon**2) * traj.nu**2 * np.abs(traj.v) ** 2 + 2 * np.abs(traj.dv) ** 2
    V2 = traj.norm**2
    C2 = quasi_constant(p)
    scale = max(float(V2.max()), 1e-300)
    sandwich = bool(np.all(epsilon**2 * V2 / C2 <= E + 1e-12 * scale) and np.all(E <= C2 * V2 + 1e-12 * scale))
    exponent = epsilon ** (-2 / ell) + epsilon * nu
    growth = float(np.log(E.max() / E[0])) if E[0] > 0 else 0.0
    return QuasiEnergyReport(epsilon, E, C2, sandwich, exponent, max(growth, 0.0) / exponent, 1 + ell / 2)


@dataclass(frozen=True)
class GrowthFit:
    nus: np.ndarray
    amplification: np.ndarray
    exponent: float

    def as_dict(self) -> dict:
        return {"nus": self.nus.tolist(), "amplification": self.amplification.tolist(), "exponent": self.exponent}


def propagator_norm(p: SpeedProfile, nu: float, *, T: float | None = None, dt: float | None = None) -> np.ndarray:
    """Spectral norm of the propagator ``V(0) -> V(t)`` on the time grid (worst case over data)."""
    T = p.T if T is None else float(T)
    dt = default_dt(p, nu) if dt is None else float(dt)
    check_stability(p, nu, dt)
    n, h = time_grid(T, dt)
    prop = propagators(p, [nu], T, h, np.arange(n + 1))[:, 0]
    if nu == 0:
        return np.linalg.norm(prop, ord=2, axis=(1, 2))
    # conjugate by diag(i nu, 1); the phase i drops out of the norm
    pv = prop.copy()
    pv[:, 0, 1] *= nu
    pv[:, 1, 0] /= nu
    return np.linalg.norm(pv, ord=2, axis=(1, 2))


def growth_exponent(p: SpeedProfile, nus, *, T: float | None = None) -> GrowthFit:
    """Slope of ``log log A(nu)`` against ``log nu`` with ``A = max_t ||V(0) -> V(t)||``.

    A bound ``A <= C exp(c nu^(1/sigma))`` caps the slope by ``1/sigma`` asymptotically.
    """
    nus = np.asarray(nus, dtype=float)
    amp = np.array([float(propagator_norm(p, nu, T=T).max()) for nu in nus])
    loglog = np.log(np.maximum(np.log(amp), 1e-300))
    slope = float(np.polyfit(np.log(nus), loglog, 1)[0])
    return GrowthFit(nus, amp, slope)


# Cases 2 and 4 -------------------------------------------------------------

def transform_epsilon(p: SpeedProfile, nu: float) -> float:
    """``eps = nu^-1`` (Case 2) or ``nu^-gamma`` with ``gamma = 1/(1+alpha)`` (Case 4)."""
    if p.case_tag == 4:
        return nu ** (-1.0 / (1.0 + p.root_alpha))
    return 1.0 / nu


def bound_exponents(p: SpeedProfile) -> tuple[float, float, float]:
    """Powers of ``eps`` in the three matrix bounds."""
    alpha = p.root_alpha if p.root_alpha is not None else 1.0
    if p.case_tag == 4:
        return -1.0, -1.0, alpha
    return alpha - 1.0, alpha - 1.0, alpha


def gevrey_interval(p: SpeedProfile) -> tuple[float, float]:
    """Admissible Gevrey orders ``[1, s_max)`` for the profile's case."""
    if p.case_tag == 1:
        return 1.0, math.inf
    if p.case_tag == 2:
        return 1.0, 1.0 + p.alpha / (1.0 - p.alpha)
    if p.case_tag == 3:
        return 1.0, 1.0 + p.smoothness / 2
    return 1.0, 1.0 + p.alpha / 2


def _root_coefficients(roots: MollifiedRoots, t: np.ndarray):
    l1, l2, d1, d2 = roots.evaluate(t)
    a = roots.profile(t)
    det = l2 - l1
    ddet = d2 - d1
    # H^{-1} A H and H^{-1} H'
    B = np.empty(t.shape + (2, 2))
    B[:, 0, 0] = l1 * l2 - a
    B[:, 0, 1] = l2**2 - a
    B[:, 1, 0] = a - l1**2
    B[:, 1, 1] = a - l1 * l2
    B /= det[:, None, None]
    D = np.empty(t.shape + (2, 2))
    D[:, 0, 0] = -d1
    D[:, 0, 1] = -d2
    D[:, 1, 0] = d1
    D[:, 1, 1] = d2
    D /= det[:, None, None]
    return l1, l2, det, ddet, B, D


@dataclass(frozen=True)
class TransformedTrajectory:
    """Evolution of ``W`` with ``V = e^{-rho(t) nu^(1/s)} (det H)^-1 H W``, ``rho = rho0 - kappa t``.

    ``W`` is stored as a unit direction and ``log |W|``; ``rate`` is the exact
    ``d/dt |W|^2 / |W|^2`` and ``q`` holds the three bound quantities
    ``|det H'/det H|``, ``||H^-1 H'||``, ``||H^-1 A H - (H^-1 A H)^*||``.
    """

    times: np.ndarray
    direction: np.ndarray
    log_norm: np.ndarray
    rate: np.ndarray
    q: np.ndarray
    det_h: np.ndarray
    nu: float
    s: float
    kappa: float
    epsilon: float
    rho0: float
    log_norm_v: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)

    @property
    def max_rate(self) -> float:
        return float(self.rate.max())

    def monotone(self, tol: float = 1e-10) -> bool:
        """``d/dt |W|^2 <= 0`` at every step."""
        return self.max_rate <= tol * max(1.0, self.kappa * self.nu ** (1 / self.s))


def transformed_evolution(
    p: SpeedProfile,
    roots: MollifiedRoots | None,
    nu: float,
    s: float,
    kappa: float,
    V0,
    *,
    T: float | None = None,
    dt: float | None = None,
    rho0: float = 0.0,
) -> TransformedTrajectory:
    """Evolve ``W' = (rho' nu^(1/s) + det H'/det H) W - H^-1 H' W + i nu H^-1 A H W``.

    ``roots`` defaults to the mollified roots at ``eps = transform_epsilon(p, nu)``.
    """
    if s < 1:
        raise ValueError(f"Gevrey order s must be >= 1, got {s}")
    if nu < 1:
        raise ValueError("nu < 1 belongs to the analytic regime and is excluded")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if roots is None:
        roots = mollified_roots(p, transform_epsilon(p, nu))
    T = p.T if T is None else float(T)
    damping = kappa * nu ** (1.0 / s)
    if dt is None:
        speed = nu * (math.sqrt(p.sup) + 2 * roots.shifts[1]) + damping
        dt = min(DT_MAX, 0.02 / speed)
    n, h = time_grid(T, dt)
    t_half = np.arange(2 * n + 1) * (h / 2)
    l1, l2, det, ddet, B, D = _root_coefficients(roots, t_half)
    M = 1j * nu * B - D
    M = M.astype(complex)
    diag = -damping + ddet / det
    M[:, 0, 0] += diag
    M[:, 1, 1] += diag
    V0 = np.asarray(V0, dtype=complex)
    H0inv = np.array([[l2[0], -1.0], [-l1[0], 1.0]]) / det[0]
    W0 = det[0] * (H0inv @ V0)
    direction, log_norm, rate = _rk4.linear_system(np.ascontiguousarray(M), h, np.ascontiguousarray(W0))
    log_norm = log_norm + rho0 * nu ** (1.0 / s)
    idx = slice(0, 2 * n + 1, 2)
    times = t_half[idx]
    q = np.stack(
        [
            np.abs(ddet[idx] / det[idx]),
            np.linalg.norm(D[idx], ord=2, axis=(1, 2)),
            np.abs(B[idx, 0, 1] - B[idx, 1, 0]),
        ],
        axis=1,
    )
    # back to V: V = e^{-rho(t) nu^(1/s)} det^-1 H W
    HW = np.stack([direction[:, 0] + direction[:, 1], l1[idx] * direction[:, 0] + l2[idx] * direction[:, 1]], axis=1)
    rho = rho0 - kappa * times
    log_scale = log_norm - rho * nu ** (1.0 / s) - np.log(det[idx])
    V = HW * np.exp(log_scale)[:, None]
    log_norm_v = log_scale + np.log(np.linalg.norm(HW, axis=1))
    return TransformedTrajectory(
        times, direction, log_norm, rate, q, det[idx], float(nu), float(s), float(kappa),
        roots.epsilon, rho0, log_norm_v, V,
    )


@dataclass(frozen=True)
class ThresholdReport:
    case_tag: int
    s: float
    kappa: float
    nus: np.ndarray
    epsilons: np.ndarray
    constants: tuple[float, float, float]
    exponents: tuple[float, float, float]
    beta: float
    nu0: float
    nu0_empirical: float
    max_rates: np.ndarray
    q_max: np.ndarray
    reconstruction_error: float
    amplification_constant: float

    @property
    def monotone_above_threshold(self) -> bool:
        above = self.nus >= self.nu0
        return bool(np.any(above) and np.all(self.max_rates[above] <= 0))

    def q_slopes(self) -> tuple[float, float, float]:
        """Fitted power of ``eps`` in ``max_t q_j``."""
        le = np.log(self.epsilons)
        return tuple(float(np.polyfit(le, np.log(np.maximum(self.q_max[:, j], 1e-300)), 1)[0]) for j in range(3))

    def as_dict(self) -> dict:
        return {
            "case": self.case_tag,
            "s": self.s,
            "kappa": self.kappa,
            "nus": self.nus.tolist(),
            "epsilons": self.epsilons.tolist(),
            "c1": self.constants[0],
            "c2": self.constants[1],
            "c3": self.constants[2],
            "eps_powers": list(self.exponents),
            "fitted_eps_powers": list(self.q_slopes()),
            "beta": self.beta,
            "nu0": self.nu0,
            "nu0_empirical": self.nu0_empirical,
            "max_rates": self.max_rates.tolist(),
            "monotone_above_threshold": self.monotone_above_threshold,
            "reconstruction_error": self.reconstruction_error,
            "amplification_constant": self.amplification_constant,
        }


def threshold_study(
    p: SpeedProfile,
    nus,
    s: float,
    kappa: float,
    V0=(1.0, 1.0j),
) -> ThresholdReport:
    """Fit ``c1, c2, c3`` over ``nus`` and derive the monotonicity threshold ``nu0``.

    With ``C = 2 c1 + 2 c2 + c3`` the sufficient condition is
    ``C nu^beta <= 2 kappa nu^(1/s)`` where ``beta = 1 - alpha`` (Case 2) or
    ``1/(1+alpha)`` (Case 4, root exponent ``alpha``), so
    ``nu0 = (C / (2 kappa))^(1 / (1/s - beta))``.
    """
    _require_case(p, (1, 2, 4), "threshold_study")
    lo, hi = gevrey_interval(p)
    if not (lo <= s < hi):
        raise ValueError(f"s = {s} outside the admissible interval [{lo}, {hi:.6g})")
    nus = np.asarray(sorted(nus), dtype=float)
    V0 = np.asarray(V0, dtype=complex) / np.linalg.norm(V0)
    exps = bound_exponents(p)
    alpha = p.root_alpha if p.root_alpha is not None else 1.0
    beta = 1.0 / (1.0 + alpha) if p.case_tag == 4 else 1.0 - alpha
    q_max, eps, rates, recon, amp = [], [], [], 0.0, 0.0
    for nu in nus:
        tr = transformed_evolution(p, None, nu, s, kappa, V0)
        eps.append(tr.epsilon)
        q_max.append(tr.q.max(axis=0))
        rates.append(tr.max_rate)
        ref = integrate_mode(p, nu, V0[0] / (1j * nu), V0[1], dt=tr.times[1] / 4)
        err = np.abs(tr.V - ref.V[::4]).max() / np.abs(ref.V).max()
        recon = max(recon, float(err))
        growth = ref.norm / (np.exp(kappa * ref.times * nu ** (1 / s)) * (nu ** (alpha / (1 + alpha)) if p.case_tag == 4 else 1.0))
        amp = max(amp, float(growth.max()))
    q_max = np.array(q_max)
    eps = np.array(eps)
    consts = tuple(float(np.max(q_max[:, j] / eps ** exps[j])) for j in range(3))
    C = 2 * consts[0] + 2 * consts[1] + consts[2]
    gap = 1.0 / s - beta
    nu0 = max(1.0, (C / (2 * kappa)) ** (1.0 / gap))
    rates = np.array(rates)
    bad = np.nonzero(rates > 0)[0]
    nu0_emp = float(nus[0]) if bad.size == 0 else (float(nus[bad[-1] + 1]) if bad[-1] + 1 < nus.size else math.inf)
    return ThresholdReport(
        p.case_tag, s, kappa, nus, eps, consts, exps, beta, nu0, nu0_emp, rates, q_max, recon, amp,
    )
