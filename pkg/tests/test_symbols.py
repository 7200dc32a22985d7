import numpy as np
import pytest
from numpy.testing import assert_allclose

from liewave.group_harmonics import FIELD_Z, TORUS, EulerAngles, RepIndex, su2_dual
from liewave.symbols import (
    DiagonalSymbol,
    check_hormander_bounds,
    extract_symbol,
    identity_operator,
    laplacian_operator,
    laplacian_symbol,
    sublaplacian_operator,
    sublaplacian_symbol,
)


def test_small_ell_values():
    sym = sublaplacian_symbol(5)
    assert_allclose(sym.nu_squared[RepIndex.su2(0)], [0.0])
    assert_allclose(sym.nu_squared[RepIndex.su2(1)], [1.0, 2.0, 1.0])
    assert_allclose(sym.nu_squared[RepIndex.su2(2)], [2.0, 5.0, 6.0, 5.0, 2.0])
    assert_allclose(sym.nu_squared[RepIndex.su2(5)][[0, -1]], [5.0, 5.0])


def test_laplacian_table():
    sym = laplacian_symbol(3)
    assert_allclose(sym.nu_squared[RepIndex.su2(1)], [2.0, 2.0, 2.0])
    tor = laplacian_symbol(4, TORUS)
    assert_allclose(tor.nu_squared[RepIndex.torus(3)], [9.0])


def test_extracted_symbol_is_invariant():
    rng = np.random.default_rng(0)
    rep = RepIndex.su2(1.5)
    expect = -np.diag(rep.casimir - rep.m_values() ** 2)
    for _ in range(10):
        m = extract_symbol(sublaplacian_operator, rep, EulerAngles.random(rng))
        assert_allclose(m, expect, atol=1e-8)


def test_identity_and_laplacian_symbols():
    g = EulerAngles.random(np.random.default_rng(1))
    rep = RepIndex.su2(1)
    assert_allclose(extract_symbol(identity_operator, rep, g), np.eye(3), atol=1e-12)
    assert_allclose(extract_symbol(laplacian_operator, rep, g), -2 * np.eye(3), atol=1e-8)


def test_first_order_field_symbol_is_skew_hermitian():
    g = EulerAngles.random(np.random.default_rng(2))
    rep = RepIndex.su2(2)
    m = extract_symbol(lambda jet, p, t, q: FIELD_Z.apply(jet, p, t, q), rep, g)
    assert_allclose(m, -m.conj().T, atol=1e-10)


def test_sublaplacian_below_laplacian():
    sym = sublaplacian_symbol(10, verify_lmax=None)
    for rep in sym.reps:
        assert np.all(sym.nu_squared[rep] <= rep.casimir + 1e-12)


def test_hormander_bounds():
    assert check_hormander_bounds(laplacian_symbol(20)).passed
    rep = check_hormander_bounds(sublaplacian_symbol(50, verify_lmax=None))
    assert rep.passed and rep.r == 2
    assert rep.c_lower >= 0.9 and rep.c_upper <= np.sqrt(2)
    assert not check_hormander_bounds(sublaplacian_symbol(50, verify_lmax=None), r=1).passed


def test_symbol_json_round_trip():
    sym = sublaplacian_symbol(3, verify_lmax=None)
    back = DiagonalSymbol.from_json(sym.to_json())
    assert back.reps == sym.reps and back.hormander_order == 2
    for rep in sym.reps:
        assert_allclose(back.nu_squared[rep], sym.nu_squared[rep])


def test_rejects_negative_eigenvalues():
    with pytest.raises(ValueError):
        DiagonalSymbol("SU2", "bad", {RepIndex.su2(0): np.array([-1.0])}, 1, 0)


def test_integer_only_table():
    sym = sublaplacian_symbol(3, integer_only=True, verify_lmax=None)
    assert [r.two_ell for r in sym.reps] == [r.two_ell for r in su2_dual(3, integer_only=True)]
