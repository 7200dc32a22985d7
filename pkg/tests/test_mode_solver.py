import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from liewave.mode_solver import (
    StabilityError,
    case1_bound,
    case1_constant,
    gevrey_interval,
    growth_exponent,
    integrate_mode,
    quasi_energy_bound,
    quasi_epsilon,
    symmetriser_energy,
    symmetriser_residual,
    threshold_study,
    transformed_evolution,
)
from liewave.speeds import make_profile


def test_harmonic_oscillator():
    p = make_profile("constant", value=1.0)
    tr = integrate_mode(p, 1.0, 1.0, 0.0)
    assert_allclose(tr.v.real, np.cos(tr.times), atol=1e-9)
    assert_allclose(tr.norm, 1.0, atol=1e-9)


def test_zero_mode_is_linear():
    tr = integrate_mode(make_profile("t_squared"), 0.0, 0.0, 1.0)
    assert_allclose(tr.v.real, tr.times, atol=1e-14)


def test_self_convergence_t_squared():
    p = make_profile("t_squared")
    coarse = integrate_mode(p, 10.0, 1.0, 0.0, dt=1e-3)
    fine = integrate_mode(p, 10.0, 1.0, 0.0, dt=1e-3 / 16)
    assert np.abs(coarse.v - fine.v[::16]).max() <= 1e-6


def test_fourth_order_convergence():
    p = make_profile("two_plus_sin")
    ref = integrate_mode(p, 5.0, 1.0, 0.0, dt=1e-4)
    errs = []
    for dt in (0.02, 0.01):
        tr = integrate_mode(p, 5.0, 1.0, 0.0, dt=dt)
        errs.append(abs(tr.v[-1] - ref.v[-1]))
    assert errs[0] / errs[1] >= 12


def test_stability_guard():
    with pytest.raises(StabilityError):
        integrate_mode(make_profile("constant", value=1.0), 100.0, 1.0, 0.0, dt=0.01)


def test_first_order_reduction_consistency():
    # v'' = -a nu^2 v  versus  V' = i nu A V
    p = make_profile("two_plus_sin")
    nu = 3.0
    tr = integrate_mode(p, nu, 0.4, -0.2, T=1.0, dt=1e-3)
    V = tr.V
    dV = np.gradient(V, tr.dt, axis=0, edge_order=2)
    a = tr.a
    rhs = np.stack([1j * nu * V[:, 1], 1j * nu * a * V[:, 0]], axis=1)
    assert np.abs(dV[5:-5] - rhs[5:-5]).max() <= 1e-4 * np.abs(V).max() * nu


def test_symmetriser_identity():
    p = make_profile("two_plus_sin")
    for t in np.linspace(0, p.T, 7):
        assert symmetriser_residual(p, t) == 0.0


def test_case1_energy():
    p = make_profile("constant", value=1.0)
    tr = integrate_mode(p, 100.0, 0.01, 1.0)
    rep = symmetriser_energy(tr, p)
    assert np.abs(rep.energy / rep.energy[0] - 1).max() <= 1e-8
    assert rep.passed
    q = make_profile("two_plus_sin")
    rep = symmetriser_energy(integrate_mode(q, 20.0, 0.05, 1.0), q)
    assert rep.c_prime == pytest.approx(1.0, abs=1e-6)
    assert rep.passed


def test_case1_constant_flat_in_nu():
    p = make_profile("two_plus_sin")
    trs = [integrate_mode(p, nu, 1.0 / nu, 1.0) for nu in (1.0, 10.0, 100.0)]
    C = case1_constant(trs)
    assert 1.0 <= C <= case1_bound(p)
    assert case1_constant([integrate_mode(p, 5.0, 0.0, 0.0)]) == 1.0
    assert case1_constant([integrate_mode(make_profile("constant"), 3.0, 1.0, 0.0)]) == pytest.approx(1.0, abs=1e-9)


def test_quasi_symmetriser_sandwich():
    for key in ("t_squared", "sin4"):
        p = make_profile(key)
        for nu in (4.0, 64.0, 1024.0):
            tr = integrate_mode(p, nu, 1.0 / nu, 1.0)
            rep = quasi_energy_bound(p, nu, quasi_epsilon(nu, p.smoothness), tr)
            assert rep.sandwich_ok and rep.passed


@pytest.mark.parametrize("key", ["t_squared", "sin4"])
def test_case3_growth_exponent(key):
    fit = growth_exponent(make_profile(key), [4.0, 16.0, 64.0, 256.0, 1024.0])
    assert fit.exponent <= 0.6


def test_gevrey_intervals():
    assert gevrey_interval(make_profile("holder_bump")) == pytest.approx((1.0, 2.0))
    assert gevrey_interval(make_profile("t_squared")) == pytest.approx((1.0, 2.0))
    assert gevrey_interval(make_profile("holder_zero")) == pytest.approx((1.0, 1.25))
    assert gevrey_interval(make_profile("constant"))[1] == math.inf


def test_transformed_constant_speed_is_damped_rotation():
    p = make_profile("constant", value=1.0)
    tr = transformed_evolution(p, None, 10.0, 1.5, 1.0, (1.0, 1j))
    assert_allclose(tr.q[:, :2], 0.0, atol=1e-12)
    assert tr.monotone()


def test_transformed_reconstruction_matches_direct():
    p = make_profile("holder_bump")
    nu = 16.0
    tr = transformed_evolution(p, None, nu, 1.5, 1.0, (1.0, 1j))
    ref = integrate_mode(p, nu, 1.0 / (1j * nu), 1j, dt=tr.times[1] / 4)
    assert np.abs(tr.V - ref.V[::4]).max() <= 1e-4 * np.abs(ref.V).max()


def test_case2_threshold():
    rep = threshold_study(make_profile("holder_bump"), [1.0, 4.0, 16.0, 64.0], 1.5, 1.0)
    assert rep.monotone_above_threshold
    assert rep.nu0 >= 1.0


def test_case4_threshold_and_eps_power():
    rep = threshold_study(make_profile("holder_zero"), [2.0**k for k in range(0, 8)], 1.2, 2.0)
    assert rep.monotone_above_threshold
    assert math.isfinite(rep.amplification_constant)
    assert abs(rep.q_slopes()[0] + 1) <= 0.15


def test_threshold_refuses_inadmissible_order():
    with pytest.raises(ValueError):
        threshold_study(make_profile("holder_bump"), [1.0, 2.0], 2.5, 1.0)


def test_trajectory_csv(tmp_path):
    tr = integrate_mode(make_profile("constant"), 1.0, 1.0, 0.0, T=0.1)
    path = tmp_path / "mode.csv"
    tr.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,Re V1,Im V1,Re V2,Im V2,E"
    assert len(lines) == tr.times.size + 1
