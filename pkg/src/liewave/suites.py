"""Canonical per-case experiment batteries used by ``liewave cases``."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cauchy import CauchyProblem, extremal_data, gevrey_experiment, make_data, regularity_ladder
from .mode_solver import (
    growth_exponent,
    integrate_mode,
    propagator_norm,
    quasi_energy_bound,
    quasi_epsilon,
    threshold_study,
)
from .speeds import make_profile
from .symbols import check_hormander_bounds, sublaplacian_symbol

CASE1_NUS = (1.0, 10.0, 100.0, 1000.0)
CASE3_NUS = tuple(float(2**k) for k in range(2, 11))
THRESHOLD_NUS = tuple(float(2**k) for k in range(0, 9))


@dataclass
class Check:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  ({self.seconds:.1f} s)"

    def as_dict(self) -> dict:
        return {"name": self.name, "pass": self.passed, "seconds": round(self.seconds, 3), "detail": self.detail}


def _timed(name, fn) -> Check:
    t0 = time.perf_counter()
    passed, detail = fn()
    return Check(name, bool(passed), detail, time.perf_counter() - t0)


def _variation(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(values.max() / values.min() - 1)


def case1_battery(seed: int = 0) -> list[Check]:
    def energy_constant():
        p = make_profile("constant", value=1.0)
        tr = integrate_mode(p, 100.0, 1.0 / 100.0, 1.0)
        drift = float(np.abs(tr.energy / tr.energy[0] - 1).max())
        return drift <= 1e-8, {"nu": 100.0, "max_relative_drift": drift}

    def nu_sweep():
        p = make_profile("two_plus_sin")
        C = [float(propagator_norm(p, nu).max() ** 2) for nu in CASE1_NUS]
        var = _variation(C)
        return var <= 0.05, {"nus": list(CASE1_NUS), "C": C, "variation": var}

    def ladders():
        p = make_profile("two_plus_sin")

        def factory(kind):
            def make(L):
                sym = sublaplacian_symbol(L, verify_lmax=None)
                if kind == "extremal":
                    u0, u1 = extremal_data(sym)
                else:
                    u0, u1 = make_data({"kind": "random"}, sym, np.random.default_rng(seed))
                return CauchyProblem(sym, p, u0, u1, p.T)
            return make

        est = regularity_ladder(factory("random"), (8, 16), 0.0)
        sob2 = regularity_ladder(factory("extremal"), (8, 16), 0.0, 2)
        sob1 = regularity_ladder(factory("extremal"), (8, 16), 0.0, 1)
        ok = est.est_stable and sob2.sob_stable and not sob1.sob_stable
        return ok, {
            "est": [r.worst_est for r in est.reports],
            "est_homogeneous": [r.worst_est_homogeneous for r in est.reports],
            "sob_r2": [r.worst_sob for r in sob2.reports],
            "sob_r1": [r.worst_sob for r in sob1.reports],
        }

    return [
        _timed("case1: a = 1 energy conserved at nu = 100", energy_constant),
        _timed("case1: C stable over nu in {1, 10, 100, 1000}", nu_sweep),
        _timed("case1: C stable for L 8 -> 16; Sobolev loss r = 2 stable, r = 1 unstable", ladders),
    ]


def case2_battery(seed: int = 0) -> list[Check]:
    p = make_profile("holder_bump")

    def threshold():
        rep = threshold_study(p, THRESHOLD_NUS, 1.8, 1.0)
        return rep.monotone_above_threshold, {"nu0": rep.nu0, "max_rates": rep.max_rates.tolist()}

    def gevrey():
        rep = gevrey_experiment(2, 1.8, p, 1.0, seed=seed)
        return rep.passed, rep.as_dict()

    return [
        _timed("case2: |W|^2 nonincreasing above nu0 (s = 1.8)", threshold),
        _timed("case2: Gevrey propagation s = 1.8", gevrey),
    ]


def case3_battery(seed: int = 0) -> list[Check]:
    p = make_profile("t_squared")

    def growth():
        fit = growth_exponent(p, CASE3_NUS)
        return fit.exponent <= 0.6, fit.as_dict()

    def sandwich():
        ok = True
        for nu in CASE3_NUS:
            tr = integrate_mode(p, nu, 1.0 / nu, 1.0)
            rep = quasi_energy_bound(p, nu, quasi_epsilon(nu, p.smoothness), tr)
            ok &= rep.sandwich_ok
        return ok, {"nus": list(CASE3_NUS)}

    def gevrey():
        rep = gevrey_experiment(3, 1.5, p, 1.0, seed=seed)
        return rep.passed, rep.as_dict()

    return [
        _timed("case3: growth exponent <= 0.6", growth),
        _timed("case3: quasi-symmetriser sandwich at every sample", sandwich),
        _timed("case3: Gevrey propagation s = 1.5", gevrey),
    ]


def case4_battery(seed: int = 0) -> list[Check]:
    p = make_profile("holder_zero")

    def threshold():
        rep = threshold_study(p, THRESHOLD_NUS, 1.2, 2.0)
        return rep.monotone_above_threshold, {"nu0": rep.nu0, "max_rates": rep.max_rates.tolist()}

    def gevrey():
        rep = gevrey_experiment(4, 1.2, p, 1.0, seed=seed)
        return rep.passed, rep.as_dict()

    return [
        _timed("case4: |W|^2 nonincreasing above nu0 (s = 1.2, kappa = 2)", threshold),
        _timed("case4: Gevrey propagation s = 1.2", gevrey),
    ]


def symbol_battery(lmax: float = 5) -> list[Check]:
    def hormander():
        rep = check_hormander_bounds(sublaplacian_symbol(lmax))
        return rep.passed, rep.as_dict()

    return [_timed(f"symbol: sub-Laplacian oracle and Hormander bounds (lmax = {lmax:g})", hormander)]


BATTERIES = {1: case1_battery, 2: case2_battery, 3: case3_battery, 4: case4_battery}
