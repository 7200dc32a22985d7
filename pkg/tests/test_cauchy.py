import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from liewave.cauchy import (
    CauchyProblem,
    InadmissibleOrderError,
    extremal_data,
    gevrey_experiment,
    make_data,
    regularity_ladder,
    regularity_report,
    solve,
    solve_matrix_system,
)
from liewave.fourier import FourierCoefficients, random_coefficients
from liewave.group_harmonics import SU2, TORUS, RepIndex
from liewave.mode_solver import StabilityError
from liewave.speeds import make_profile
from liewave.symbols import laplacian_symbol, sublaplacian_symbol


def _problem(sym, key, u0, u1, **params):
    p = make_profile(key, **params)
    return CauchyProblem(sym, p, u0, u1, p.T)


def test_trivial_mode_stays_constant():
    sym = sublaplacian_symbol(3, verify_lmax=None)
    u0, u1 = make_data({"kind": "trivial", "value": 1.0}, sym, np.random.default_rng(0))
    sol = solve(_problem(sym, "t_squared", u0, u1))
    for u in sol.u:
        assert_allclose(u[RepIndex.su2(0)], [[1.0]], atol=1e-15)


def test_torus_dalembert():
    sym = laplacian_symbol(32, TORUS)
    u0 = FourierCoefficients(TORUS, {RepIndex.torus(k): np.ones((1, 1)) for k in range(-32, 33)}, 32)
    empty = FourierCoefficients(TORUS, {}, 32)
    sol = solve(_problem(sym, "constant", u0, empty), dt=1e-4)
    err = max(abs(u[RepIndex.torus(k)][0, 0] - math.cos(k * t))
              for t, u in zip(sol.times, sol.u) for k in range(-32, 33))
    assert err <= 1e-8


def test_sublaplacian_entries_oscillate_with_row_frequency():
    sym = sublaplacian_symbol(2, verify_lmax=None)
    rep = RepIndex.su2(2)
    u0 = FourierCoefficients(SU2, {rep: np.ones((5, 5))}, 2)
    sol = solve(_problem(sym, "constant", u0, FourierCoefficients(SU2, {}, 2)))
    nu = np.sqrt([2.0, 5.0, 6.0, 5.0, 2.0])
    for t, u in zip(sol.times, sol.u):
        assert_allclose(u[rep], np.cos(nu * t)[:, None] * np.ones((1, 5)), atol=1e-8)


def test_mode_decoupling_matches_matrix_system():
    sym = sublaplacian_symbol(3, verify_lmax=None)
    rng = np.random.default_rng(1)
    u0, u1 = make_data({"kind": "random"}, sym, rng)
    pr = _problem(sym, "t_squared", u0, u1)
    a, b = solve(pr, dt=1e-3, snapshots=5), solve_matrix_system(pr, 1e-3, 5)
    assert max(x.max_abs_difference(y) for x, y in zip(a.u + a.ut, b.u + b.ut)) <= 1e-12


def test_linearity():
    sym = sublaplacian_symbol(4, verify_lmax=None)
    rng = np.random.default_rng(2)
    a0, a1 = make_data({"kind": "random"}, sym, rng)
    b0, b1 = make_data({"kind": "random"}, sym, rng)
    sa = solve(_problem(sym, "two_plus_sin", a0, a1))
    sb = solve(_problem(sym, "two_plus_sin", b0, b1))
    sc = solve(_problem(sym, "two_plus_sin", a0 * 2.0 + b0, a1 * 2.0 + b1))
    for x, y, z in zip(sa.u, sb.u, sc.u):
        assert z.max_abs_difference(x * 2.0 + y) <= 1e-12


def test_time_reversal():
    sym = sublaplacian_symbol(4, verify_lmax=None)
    u0, u1 = make_data({"kind": "random"}, sym, np.random.default_rng(3))
    fwd = solve(_problem(sym, "constant", u0, u1, value=2.0))
    back = solve(_problem(sym, "constant", fwd.u[-1], fwd.ut[-1] * -1.0, value=2.0))
    assert back.u[-1].max_abs_difference(u0) <= 1e-8
    assert (back.ut[-1] * -1.0).max_abs_difference(u1) <= 1e-8


def test_real_torus_data_stays_real():
    sym = laplacian_symbol(8, TORUS)
    rng = np.random.default_rng(4)
    u0 = random_coefficients(TORUS, 8, rng, real=True)
    u1 = random_coefficients(TORUS, 8, rng, real=True)
    sol = solve(_problem(sym, "two_plus_sin", u0, u1))
    for u in sol.u:
        for rep in u:
            partner = RepIndex.torus(*(-v for v in rep.k))
            assert_allclose(u[partner], u[rep].conj(), atol=1e-14)


def test_problem_validation():
    sym = sublaplacian_symbol(2, verify_lmax=None)
    big = random_coefficients(SU2, 3, np.random.default_rng(5))
    empty = FourierCoefficients(SU2, {}, 2)
    with pytest.raises(ValueError):
        _problem(sym, "constant", big, empty)
    p = make_profile("t_squared")
    with pytest.raises(ValueError):
        CauchyProblem(sym, p, empty, empty, 2 * p.T)
    u0, u1 = make_data({"kind": "random"}, sym, np.random.default_rng(6))
    with pytest.raises(StabilityError):
        solve(_problem(sym, "constant", u0, u1, value=100.0), dt=0.5)


def test_constant_speed_regularity_constant_is_one():
    sym = sublaplacian_symbol(6, verify_lmax=None)
    u0, u1 = make_data({"kind": "random"}, sym, np.random.default_rng(7))
    pr = _problem(sym, "constant", u0, u1)
    rep = regularity_report(solve(pr, snapshots=32), pr, 0.5)
    assert rep.worst_est_homogeneous == pytest.approx(1.0, abs=1e-8)
    assert rep.C_est_homogeneous == pytest.approx(1.0, abs=1e-8)


def test_snapshot_norms_bounded_by_constant():
    sym = sublaplacian_symbol(8, verify_lmax=None)
    u0, u1 = make_data({"kind": "random"}, sym, np.random.default_rng(8))
    pr = _problem(sym, "two_plus_sin", u0, u1)
    rep = regularity_report(solve(pr), pr, 0.0)
    assert rep.snapshot_ratio <= rep.worst_est
    assert rep.C_est <= rep.worst_est


def test_regularity_ladder_and_negative_control():
    p = make_profile("two_plus_sin")

    def make(L):
        sym = sublaplacian_symbol(L, verify_lmax=None)
        u0, u1 = extremal_data(sym)
        return CauchyProblem(sym, p, u0, u1, p.T)

    good = regularity_ladder(make, (8, 16, 32), 0.0)
    assert good.est_stable and good.sob_stable
    bad = regularity_ladder(make, (8, 16, 32), 0.0, r=1)
    vals = [r.worst_sob for r in bad.reports]
    assert not bad.sob_stable and vals[0] < vals[1] < vals[2]


def test_regularity_needs_case1():
    sym = sublaplacian_symbol(2, verify_lmax=None)
    u0, u1 = make_data({"kind": "random"}, sym, np.random.default_rng(9))
    pr = _problem(sym, "t_squared", u0, u1)
    with pytest.raises(ValueError):
        regularity_report(solve(pr), pr, 0.0)


@pytest.mark.parametrize("case, key, s", [(3, "t_squared", 1.5), (2, "holder_bump", 1.8), (4, "holder_zero", 1.2)])
def test_gevrey_experiments_pass(case, key, s):
    rep = gevrey_experiment(case, s, make_profile(key), 1.0)
    assert rep.passed
    assert rep.solution_fit.s_hat <= 1.1 * s and rep.solution_fit.A_hat > 0


def test_gevrey_experiment_refuses_inadmissible_order():
    with pytest.raises(InadmissibleOrderError, match=r"1 \+ ell/2"):
        gevrey_experiment(3, 3.0, make_profile("t_squared"))
    with pytest.raises(InadmissibleOrderError):
        gevrey_experiment(4, 1.25, make_profile("holder_zero"))
    with pytest.raises(ValueError):
        gevrey_experiment(2, 1.5, make_profile("t_squared"))


def test_solution_json_round_trip():
    sym = sublaplacian_symbol(1, verify_lmax=None)
    u0, u1 = make_data({"kind": "random"}, sym, np.random.default_rng(10))
    sol = solve(_problem(sym, "constant", u0, u1), snapshots=3)
    text = sol.to_json()
    assert text == solve(_problem(sym, "constant", u0, u1), snapshots=3).to_json()
    assert '"snapshots"' in text
