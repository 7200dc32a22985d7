"""Cauchy problem ``u_tt - a(t) L u = 0``: mode decoupling, assembly and verification reports."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fourier import FourierCoefficients, random_coefficients
from .group_harmonics import SU2, RepIndex
from .mode_solver import check_stability, default_dt, gevrey_interval, propagators, time_grid
from .spaces import GevreyFit, classical_sobolev_norm, fit_gevrey_decay, sobolev_L_norm
from .speeds import SpeedProfile
from .symbols import DiagonalSymbol

DEFAULT_SNAPSHOTS = 16
_NU_DIGITS = 12


@dataclass(frozen=True)
class CauchyProblem:
    symbol: DiagonalSymbol
    speed: SpeedProfile
    u0: FourierCoefficients
    u1: FourierCoefficients
    T: float

    def __post_init__(self):
        for name, c in (("u0", self.u0), ("u1", self.u1)):
            if c.group != self.symbol.group:
                raise ValueError(f"{name} lives on {c.group}, the symbol on {self.symbol.group}")
            missing = [r.label() for r in c if r not in self.symbol]
            if missing:
                raise ValueError(f"{name} has coefficients beyond the symbol's band limit: {missing[:3]}")
        if self.T > self.speed.T + 1e-12:
            raise ValueError(f"horizon T = {self.T} exceeds the speed profile horizon {self.speed.T}")

    @property
    def reps(self) -> list[RepIndex]:
        return sorted(set(self.u0) | set(self.u1))

    @property
    def lmax(self) -> float:
        return self.symbol.band_limit


@dataclass(frozen=True)
class SolutionField:
    """Snapshots of ``u^`` and ``d_t u^`` plus the per-``nu`` propagators that produced them."""

    times: np.ndarray
    u: list[FourierCoefficients]
    ut: list[FourierCoefficients]
    nus: np.ndarray = field(repr=False)
    propagators: np.ndarray = field(repr=False)
    dt: float = 0.0

    def to_dict(self) -> dict:
        """Snapshots with every matrix stored as separate ``re`` / ``im`` row lists."""
        return {
            "times": self.times.tolist(),
            "dt": self.dt,
            "snapshots": [
                {"t": float(t), "u": _compact(u), "ut": _compact(v)}
                for t, u, v in zip(self.times, self.u, self.ut)
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _compact(c: FourierCoefficients) -> dict:
    records = []
    for rep, mat in c.items():
        rec = {"two_ell": rep.two_ell} if rep.group == SU2 else {"k": list(rep.k)}
        rec["re"] = mat.real.tolist()
        rec["im"] = mat.imag.tolist()
        records.append(rec)
    return {"group": c.group, "band_limit": c.band_limit, "ndim": c.ndim, "coefficients": records}


def _nu_index(nus_rows: np.ndarray, distinct: np.ndarray) -> np.ndarray:
    return np.searchsorted(distinct, np.round(nus_rows, _NU_DIGITS))


def solve(
    problem: CauchyProblem,
    dt: float | None = None,
    snapshots: int | np.ndarray = DEFAULT_SNAPSHOTS,
    *,
    workers: int = 1,
) -> SolutionField:
    """Evolve every entry ``(m, k)`` with ``nu = nu_m(xi)`` and assemble snapshots.

    ``snapshots`` is a count of uniform times on ``[0, T]``. Each distinct
    ``nu`` of the symbol's band is integrated once, from the two fundamental
    data, so the stored propagators cover every mode and not only the data's.
    """
    sym, p = problem.symbol, problem.speed
    reps = problem.reps
    distinct = np.unique(np.round(np.concatenate([sym.nu(r) for r in sym.reps]), _NU_DIGITS))
    nu_max = float(distinct.max())
    dt = default_dt(p, nu_max) if dt is None else float(dt)
    check_stability(p, nu_max, dt)
    count = int(snapshots)
    if count < 2:
        raise ValueError("at least two snapshots (t = 0 and t = T) are required")
    n, h = time_grid(problem.T, dt, multiple=count - 1)
    store = np.arange(count) * (n // (count - 1))
    P = propagators(p, distinct, problem.T, h, store, workers=workers)
    times = store * h
    u_snaps = [dict() for _ in range(count)]
    ut_snaps = [dict() for _ in range(count)]
    for rep in reps:
        idx = _nu_index(sym.nu(rep), distinct)
        Pr = P[:, idx]  # (time, row, 2, 2)
        a0, a1 = problem.u0[rep], problem.u1[rep]
        u = Pr[:, :, 0, 0, None] * a0 + Pr[:, :, 0, 1, None] * a1
        ut = Pr[:, :, 1, 0, None] * a0 + Pr[:, :, 1, 1, None] * a1
        for k in range(count):
            u_snaps[k][rep] = u[k]
            ut_snaps[k][rep] = ut[k]
    group, band, ndim = problem.u0.group, problem.lmax, problem.u0.ndim
    return SolutionField(
        times,
        [FourierCoefficients(group, e, band, ndim) for e in u_snaps],
        [FourierCoefficients(group, e, band, ndim) for e in ut_snaps],
        distinct,
        P,
        h,
    )


def solve_matrix_system(problem: CauchyProblem, dt: float, snapshots: int = DEFAULT_SNAPSHOTS) -> SolutionField:
    """Reference solver: RK4 on the full matrices ``U'' = -a(t) sigma U`` without decoupling."""
    sym, p = problem.symbol, problem.speed
    reps = problem.reps
    count = int(snapshots)
    n, h = time_grid(problem.T, dt, multiple=count - 1)
    every = n // (count - 1)
    sig = {rep: np.diag(sym.nu_squared[rep]) for rep in reps}
    U = {rep: problem.u0[rep].copy() for rep in reps}
    Ut = {rep: problem.u1[rep].copy() for rep in reps}
    u_snaps, ut_snaps = [], []
    a_half = p(np.arange(2 * n + 1) * (h / 2))
    for step in range(n + 1):
        if step % every == 0:
            u_snaps.append({r: m.copy() for r, m in U.items()})
            ut_snaps.append({r: m.copy() for r, m in Ut.items()})
        if step == n:
            break
        ca, cb, cc = a_half[2 * step], a_half[2 * step + 1], a_half[2 * step + 2]
        for rep in reps:
            S, x, w = sig[rep], U[rep], Ut[rep]
            k1x, k1w = w, -ca * (S @ x)
            k2x, k2w = w + 0.5 * h * k1w, -cb * (S @ (x + 0.5 * h * k1x))
            k3x, k3w = w + 0.5 * h * k2w, -cb * (S @ (x + 0.5 * h * k2x))
            k4x, k4w = w + h * k3w, -cc * (S @ (x + h * k3x))
            U[rep] = x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
            Ut[rep] = w + h / 6 * (k1w + 2 * k2w + 2 * k3w + k4w)
    group, band, ndim = problem.u0.group, problem.lmax, problem.u0.ndim
    return SolutionField(
        np.arange(count) * every * h,
        [FourierCoefficients(group, e, band, ndim) for e in u_snaps],
        [FourierCoefficients(group, e, band, ndim) for e in ut_snaps],
        np.zeros(0),
        np.zeros((0,)),
        h,
    )


# Regularity ----------------------------------------------------------------

def _drop_trivial(c: FourierCoefficients, sym: DiagonalSymbol) -> FourierCoefficients:
    out = {}
    for rep, mat in c.items():
        keep = sym.nu(rep) > 0
        if np.any(keep):
            out[rep] = np.where(keep[:, None], mat, 0)
    return FourierCoefficients(c.group, out, c.band_limit, c.ndim)


def _homogeneous_energy(c: FourierCoefficients, ct: FourierCoefficients, sym: DiagonalSymbol, s: float) -> float:
    terms = []
    for rep in sorted(set(c) | set(ct)):
        nu = sym.nu(rep)
        keep = nu > 0
        w = np.where(keep, nu, 1.0)
        rows_u = np.sum(np.abs(c[rep]) ** 2, axis=1)
        rows_t = np.sum(np.abs(ct[rep]) ** 2, axis=1)
        terms.extend((rep.dim * keep * (w ** (2 + 2 * s) * rows_u + w ** (2 * s) * rows_t)).tolist())
    return math.fsum(terms)


def _weighted_propagator_max(P: np.ndarray, left: np.ndarray, right: np.ndarray) -> float:
    """``max ||diag(left) P diag(right)^-1||_2^2`` over time and modes; weights are ``(n_mode, 2)``."""
    M = P * left[None, :, :, None] / right[None, :, None, :]
    return float(np.max(np.linalg.norm(M, ord=2, axis=(2, 3)) ** 2)) if M.size else 1.0


@dataclass(frozen=True)
class RegularityReport:
    s: float
    r: int
    band_limit: float
    C_est: float
    C_est_homogeneous: float
    C_sob: float
    worst_est: float
    worst_est_homogeneous: float
    worst_sob: float
    snapshot_ratio: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def regularity_report(sol: SolutionField, problem: CauchyProblem, s: float, r: int | None = None) -> RegularityReport:
    """Constants of the Case 1 estimates in ``H^s_L`` and in classical Sobolev spaces.

    ``C_*`` are the empirical ratios ``LHS(t) / RHS`` for the problem's data,
    maximised over snapshots. ``worst_*`` are the same constants maximised also
    over all data, i.e. weighted propagator norms over every mode in the band.
    Modes with ``nu = 0`` (trivial representation) are excluded.
    """
    if problem.speed.case_tag != 1:
        raise ValueError("regularity_report applies to Case 1 speeds")
    sym = problem.symbol
    r = sym.hormander_order if r is None else int(r)
    u0, u1 = _drop_trivial(problem.u0, sym), _drop_trivial(problem.u1, sym)
    us = [_drop_trivial(u, sym) for u in sol.u]
    uts = [_drop_trivial(u, sym) for u in sol.ut]

    rhs_est = sobolev_L_norm(u0, 1 + s, sym) ** 2 + sobolev_L_norm(u1, s, sym) ** 2
    lhs_est = [sobolev_L_norm(u, 1 + s, sym) ** 2 + sobolev_L_norm(v, s, sym) ** 2 for u, v in zip(us, uts)]
    rhs_hom = _homogeneous_energy(u0, u1, sym, s)
    lhs_hom = [_homogeneous_energy(u, v, sym, s) for u, v in zip(us, uts)]
    rhs_sob = classical_sobolev_norm(u0, 1 + s) ** 2 + classical_sobolev_norm(u1, s) ** 2
    lhs_sob = [classical_sobolev_norm(u, (1 + s) / r) ** 2 + classical_sobolev_norm(v, s / r) ** 2 for u, v in zip(us, uts)]

    def ratio(lhs, rhs):
        return max(lhs) / rhs if rhs > 0 else 1.0

    # worst case over data: every (row nu, rep) pair present in the band
    pairs = sorted({(round(float(nu), _NU_DIGITS), 1.0 + rep.casimir)
                    for rep in sym.reps for nu in sym.nu(rep) if nu > 0})
    if pairs:
        nu_arr = np.array([q[0] for q in pairs])
        jap2 = np.array([q[1] for q in pairs])
        P = sol.propagators[:, _nu_index(nu_arr, sol.nus)]
        one = np.ones_like(nu_arr)
        w_est = np.stack([np.sqrt(1 + nu_arr**2), one], axis=1)
        w_hom = np.stack([nu_arr, one], axis=1)
        left_sob = np.stack([jap2 ** ((1 + s) / (2 * r)), jap2 ** (s / (2 * r))], axis=1)
        right_sob = np.stack([jap2 ** ((1 + s) / 2), jap2 ** (s / 2)], axis=1)
        worst_est = _weighted_propagator_max(P, w_est, w_est)
        worst_hom = _weighted_propagator_max(P, w_hom, w_hom)
        worst_sob = _weighted_propagator_max(P, left_sob, right_sob)
    else:
        worst_est = worst_hom = worst_sob = 1.0
    snap = max(lhs_est) / min(lhs_est) if min(lhs_est) > 0 else 1.0
    return RegularityReport(
        s, r, sym.band_limit,
        ratio(lhs_est, rhs_est), ratio(lhs_hom, rhs_hom), ratio(lhs_sob, rhs_sob),
        worst_est, worst_hom, worst_sob, snap,
    )


@dataclass(frozen=True)
class LadderReport:
    band_limits: list[float]
    reports: list[RegularityReport]
    tolerance: float = 0.05

    def _stable(self, key: str) -> bool:
        vals = [getattr(r, key) for r in self.reports]
        return all(abs(b / a - 1) <= self.tolerance for a, b in zip(vals, vals[1:]))

    @property
    def est_stable(self) -> bool:
        return self._stable("worst_est") and self._stable("worst_est_homogeneous")

    @property
    def sob_stable(self) -> bool:
        return self._stable("worst_sob")

    def as_dict(self) -> dict:
        return {
            "band_limits": self.band_limits,
            "reports": [r.as_dict() for r in self.reports],
            "est_stable": self.est_stable,
            "sob_stable": self.sob_stable,
        }


def regularity_ladder(
    make_problem: Callable[[float], CauchyProblem],
    band_limits,
    s: float,
    r: int | None = None,
    *,
    dt: float | None = None,
    snapshots: int = 64,
) -> LadderReport:
    """Regularity reports for a sequence of band limits; stable means within 5% between rungs."""
    reports = []
    for L in band_limits:
        problem = make_problem(L)
        sol = solve(problem, dt, snapshots)
        reports.append(regularity_report(sol, problem, s, r))
    return LadderReport(list(band_limits), reports)


# Data ----------------------------------------------------------------------

def gevrey_data(sym: DiagonalSymbol, A: float, s: float, rng: np.random.Generator) -> tuple[FourierCoefficients, FourierCoefficients]:
    """``u0_jk = e^{-A nu_j^(1/s)} z``, ``u1_jk = nu_j e^{-A nu_j^(1/s)} z'`` with random unit phases ``z``.

    Scaling ``u1`` by ``nu`` balances the two components of ``V(0)``.
    """
    u0, u1 = {}, {}
    for rep in sym.reps:
        nu = sym.nu(rep)
        amp = np.exp(-A * nu ** (1.0 / s))[:, None]
        ph0 = np.exp(2j * np.pi * rng.random((rep.dim, rep.dim)))
        ph1 = np.exp(2j * np.pi * rng.random((rep.dim, rep.dim)))
        u0[rep] = amp * ph0
        u1[rep] = nu[:, None] * amp * ph1
    return (FourierCoefficients(sym.group, u0, sym.band_limit, sym.ndim),
            FourierCoefficients(sym.group, u1, sym.band_limit, sym.ndim))


def extremal_data(sym: DiagonalSymbol) -> tuple[FourierCoefficients, FourierCoefficients]:
    """``u0 = 0`` and ``u1`` equal to 1 on the rows of least ``nu`` in the top shell."""
    top = max(sym.reps)
    nu2 = sym.nu_squared[top]
    mat = np.zeros((top.dim, top.dim), dtype=complex)
    rows = np.isclose(nu2, nu2.min())
    mat[rows, :] = 1.0
    zero = FourierCoefficients(sym.group, {}, sym.band_limit, sym.ndim)
    return zero, FourierCoefficients(sym.group, {top: mat}, sym.band_limit, sym.ndim)


def make_data(spec: dict, sym: DiagonalSymbol, rng: np.random.Generator) -> tuple[FourierCoefficients, FourierCoefficients]:
    """Initial data from a config record ``{"kind": ...}``.

    Kinds: ``trivial`` (``u0 = value``), ``mode`` (one entry of one representation,
    ``two_ell`` or ``k``, ``row``, ``col``, ``value``, ``velocity``), ``random``
    (``decay``), ``gevrey`` (``A``, ``s``) and ``extremal``.
    """
    kind = spec.get("kind", "random")
    empty = FourierCoefficients(sym.group, {}, sym.band_limit, sym.ndim)
    if kind == "trivial":
        rep = RepIndex.su2(0) if sym.group == SU2 else RepIndex.torus(*([0] * sym.ndim))
        return FourierCoefficients(sym.group, {rep: np.full((1, 1), complex(spec.get("value", 1.0)))},
                                   sym.band_limit, sym.ndim), empty
    if kind == "mode":
        rep = RepIndex(SU2, int(spec["two_ell"])) if sym.group == SU2 else RepIndex.torus(*spec["k"])
        mat = np.zeros((rep.dim, rep.dim), dtype=complex)
        mat[spec.get("row", 0), spec.get("col", 0)] = complex(spec.get("value", 1.0))
        target = FourierCoefficients(sym.group, {rep: mat}, sym.band_limit, sym.ndim)
        return (empty, target) if spec.get("velocity", False) else (target, empty)
    if kind == "random":
        decay = float(spec.get("decay", 2.0))
        u0 = random_coefficients(sym.group, sym.band_limit, rng, decay=decay, ndim=sym.ndim,
                                 integer_only=spec.get("integer_only", False))
        u1 = random_coefficients(sym.group, sym.band_limit, rng, decay=decay, ndim=sym.ndim,
                                 integer_only=spec.get("integer_only", False))
        return u0.restrict(sym.band_limit), u1.restrict(sym.band_limit)
    if kind == "gevrey":
        return gevrey_data(sym, float(spec["A"]), float(spec["s"]), rng)
    if kind == "extremal":
        return extremal_data(sym)
    raise ValueError(f"unknown data kind {kind!r}")


# Gevrey propagation --------------------------------------------------------

class InadmissibleOrderError(ValueError):
    """Gevrey order outside the well-posedness interval of the case."""


@dataclass(frozen=True)
class GevreyExperimentReport:
    case_tag: int
    s: float
    A: float
    interval: tuple[float, float]
    data_fit: GevreyFit
    solution_fit: GevreyFit
    T: float

    @property
    def passed(self) -> bool:
        return self.solution_fit.s_hat <= self.s * 1.1 and self.solution_fit.A_hat > 0

    def as_dict(self) -> dict:
        return {
            "case": self.case_tag,
            "s": self.s,
            "A": self.A,
            "interval": [self.interval[0], self.interval[1]],
            "data_fit": self.data_fit.as_dict(),
            "solution_fit": self.solution_fit.as_dict(),
            "T": self.T,
            "pass": self.passed,
        }


_INTERVAL_FORMULA = {
    1: "1 <= s",
    2: "1 <= s < 1 + alpha/(1 - alpha)",
    3: "1 <= s < 1 + ell/2",
    4: "1 <= s < 1 + alpha/2",
}


def check_gevrey_order(profile: SpeedProfile, s: float) -> tuple[float, float]:
    lo, hi = gevrey_interval(profile)
    if not (lo <= s < hi):
        raise InadmissibleOrderError(
            f"s = {s} is outside the well-posedness interval {_INTERVAL_FORMULA[profile.case_tag]}"
            f" = [{lo:g}, {hi:.6g}) for Case {profile.case_tag} ({profile.name})"
        )
    return lo, hi


def gevrey_experiment(
    case_tag: int,
    s: float,
    profile: SpeedProfile,
    data_gevrey_A: float = 1.0,
    *,
    symbol: DiagonalSymbol | None = None,
    lmax: float = 32,
    seed: int = 0,
    T: float | None = None,
    dt: float | None = None,
    workers: int = 1,
) -> GevreyExperimentReport:
    """Propagate Gevrey-``s`` data to ``T`` and fit the Gevrey order of ``u(T)``.

    Raises
    ------
    InadmissibleOrderError
        If ``s`` lies outside the case's interval.
    """
    if profile.case_tag != case_tag:
        raise ValueError(f"profile {profile.name!r} is Case {profile.case_tag}, not Case {case_tag}")
    interval = check_gevrey_order(profile, s)
    if symbol is None:
        from .symbols import sublaplacian_symbol

        symbol = sublaplacian_symbol(lmax, verify_lmax=None)
    rng = np.random.default_rng(seed)
    u0, u1 = gevrey_data(symbol, data_gevrey_A, s, rng)
    T = profile.T if T is None else T
    problem = CauchyProblem(symbol, profile, u0, u1, T)
    sol = solve(problem, dt, 2, workers=workers)
    return GevreyExperimentReport(
        case_tag, s, data_gevrey_A, interval,
        fit_gevrey_decay(u0, symbol), fit_gevrey_decay(sol.u[-1], symbol), T,
    )
