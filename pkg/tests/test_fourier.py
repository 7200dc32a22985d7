import numpy as np
import pytest
from numpy.testing import assert_allclose

from liewave.fourier import (
    FourierCoefficients,
    forward_transform,
    inverse_transform,
    plancherel_norm,
    random_coefficients,
    sample,
    single_mode,
)
from liewave.group_harmonics import SU2, TORUS, RepIndex, haar_quadrature, torus_grid, wigner_matrix


def test_round_trip_on_grid():
    rng = np.random.default_rng(1)
    c = random_coefficients(SU2, 4, rng)
    grid = haar_quadrature(4)
    back = forward_transform(sample(lambda *_: inverse_transform(c, grid), grid), 4)
    assert back.max_abs_difference(c) <= 1e-11


def test_fast_and_pointwise_synthesis_agree():
    rng = np.random.default_rng(2)
    c = random_coefficients(SU2, 3, rng)
    grid = haar_quadrature(3)
    fast = inverse_transform(c, grid)
    slow = inverse_transform(c, (grid.phi, grid.theta, grid.psi))
    assert_allclose(fast, slow, atol=1e-11)


def test_single_entry_coefficient_placement():
    # f = xi_{jk} has f^(xi) = E_{kj} / d
    rep = RepIndex.su2(1)
    grid = haar_quadrature(1)
    f = lambda p, t, q: np.array([wigner_matrix(rep, (a, b, c))[0, 2] for a, b, c in zip(p, t, q)])
    c = forward_transform(sample(f, grid), 1)
    expect = np.zeros((3, 3))
    expect[2, 0] = 1 / 3
    assert_allclose(c[rep], expect, atol=1e-13)


def test_plancherel_identity():
    rng = np.random.default_rng(3)
    c = random_coefficients(SU2, 5, rng)
    samples = sample(lambda *_: inverse_transform(c, haar_quadrature(5)), haar_quadrature(5))
    assert_allclose(samples.l2_norm(), plancherel_norm(c), rtol=1e-12)


def test_torus_transform_of_character():
    grid = torus_grid(8)
    s = sample(lambda x: np.exp(3j * x[..., 0]), grid)
    c = forward_transform(s, 8)
    assert_allclose(c[RepIndex.torus(3)], [[1.0]], atol=1e-14)
    assert c.max_abs_difference(single_mode(RepIndex.torus(3), [[1.0]])) <= 1e-14


def test_coefficient_algebra_and_json():
    rng = np.random.default_rng(4)
    a, b = random_coefficients(SU2, 2, rng), random_coefficients(SU2, 2, rng)
    assert (a + b - b).max_abs_difference(a) <= 1e-15
    assert (a * 2.0).max_abs_difference(a + a) == 0.0
    back = FourierCoefficients.from_json(a.to_json())
    assert back.max_abs_difference(a) == 0.0
    assert len(a.restrict(1)) == 3


def test_real_torus_data_is_conjugate_symmetric():
    c = random_coefficients(TORUS, 4, np.random.default_rng(5), real=True)
    for rep in c:
        partner = RepIndex.torus(*(-v for v in rep.k))
        assert_allclose(c[partner], c[rep].conj())


def test_rejects_wrong_shapes_and_bands():
    with pytest.raises(ValueError):
        FourierCoefficients(SU2, {RepIndex.su2(1): np.zeros((2, 2))})
    with pytest.raises(ValueError):
        forward_transform(sample(lambda p, t, q: 0 * p, haar_quadrature(2)), 3)
