import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from absmor.pencil import (ComplexShift, DipoleBlock, PencilError, apply_full_shifted, apply_mk,
                           assemble_h, assemble_s, build_pencil, k_inner, pencil_from_mk)

from conftest import random_problem


def test_build_scalar():
    p = build_pencil([[2.0]], [[1.0]])
    assert p.M.tolist() == [[3.0]]
    assert p.K.tolist() == [[1.0]]
    assert p.n == 1


def test_build_b_zero_gives_equal_m_k():
    p = build_pencil(np.diag([2.0, 3.0]), np.zeros((2, 2)))
    np.testing.assert_array_equal(p.M, np.diag([2.0, 3.0]))
    np.testing.assert_array_equal(p.K, np.diag([2.0, 3.0]))


def test_build_spd_check_passes_for_dominant_pair():
    A = np.array([[2.0, 0.1], [0.1, 3.0]])
    B = np.array([[0.05, 0.0], [0.0, 0.05]])
    p = build_pencil(A, B, check_spd=True)
    assert p.spd_checked
    assert np.linalg.eigvalsh(p.M).min() > 0
    assert np.linalg.eigvalsh(p.K).min() > 0


def test_m_k_exact_sums():
    p, _ = random_problem(10, 1)
    assert np.array_equal(p.M, p.A + p.B)
    assert np.array_equal(p.K, p.A - p.B)


@pytest.mark.parametrize("A,B", [
    (np.eye(2), np.eye(3)),
    (np.ones((2, 3)), np.ones((2, 3))),
    (np.array([[1.0, 0.5], [0.4, 1.0]]), np.zeros((2, 2))),
])
def test_build_rejects_bad_shapes_and_asymmetry(A, B):
    with pytest.raises(PencilError):
        build_pencil(A, B)


def test_build_rejects_tiny_asymmetry_above_tolerance():
    A = np.array([[1.0, 0.5], [0.5 + 1e-10, 1.0]])
    with pytest.raises(PencilError):
        build_pencil(A, np.zeros((2, 2)))
    A[1, 0] = 0.5 + 1e-14
    build_pencil(A, np.zeros((2, 2)))


def test_build_rejects_indefinite_when_checked():
    with pytest.raises(PencilError, match="K"):
        build_pencil([[1.0]], [[2.0]], check_spd=True)
    p = build_pencil([[1.0]], [[2.0]], check_spd=False)
    assert not p.spd_checked


def test_pencil_is_read_only():
    p = build_pencil([[2.0]], [[1.0]])
    with pytest.raises(ValueError):
        p.M[0, 0] = 5.0


def test_pencil_from_mk_roundtrip():
    p, _ = random_problem(6, 2)
    q = pencil_from_mk(p.M, p.K)
    assert np.array_equal(q.M, p.M) and np.array_equal(q.K, p.K)
    np.testing.assert_allclose(q.A, p.A, atol=1e-15)


def test_dipole_block_validation():
    with pytest.raises(PencilError):
        DipoleBlock(np.ones((4, 2)))
    with pytest.raises(PencilError):
        DipoleBlock(np.array([[1.0, np.nan, 0.0]]))
    d = DipoleBlock([[1.0, 2.0, 3.0]])
    assert d.stacked().tolist() == [[1, 2, 3], [1, 2, 3]]


def test_complex_shift_value():
    s = ComplexShift(1.5, 0.25)
    assert s.value == 1.5 + 0.25j
    assert not s.is_real
    with pytest.raises(ValueError):
        ComplexShift(1.0, -0.1)


def test_apply_mk_scalar_and_identity():
    p = build_pencil([[2.0]], [[1.0]])
    assert apply_mk(p, np.array([[1.0]])).tolist() == [[3.0]]
    q = build_pencil(np.eye(4), np.zeros((4, 4)))
    X = np.arange(8.0).reshape(4, 2) + 1j
    np.testing.assert_array_equal(apply_mk(q, X), X)


def test_apply_mk_matches_explicit_product():
    p, _ = random_problem(8, 8)
    e1 = np.zeros((8, 1))
    e1[0] = 1
    np.testing.assert_allclose(apply_mk(p, e1), p.M @ p.K @ e1, rtol=1e-13, atol=1e-14)


def test_apply_mk_counts_two_gemms_per_call():
    p, _ = random_problem(5, 3)
    p.gemms.reset()
    apply_mk(p, np.ones((5, 7)))
    apply_mk(p, np.ones((5, 1)) * 1j)
    assert p.gemms.count == 4


def test_apply_mk_rejects_wrong_rows():
    p, _ = random_problem(5, 3)
    with pytest.raises(PencilError):
        apply_mk(p, np.ones((4, 2)))


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (12, 3), elements=st.floats(-1e3, 1e3)),
       arrays(np.float64, (12, 3), elements=st.floats(-1e3, 1e3)))
def test_apply_mk_property_frobenius(Xr, Xi):
    p, _ = random_problem(12, 5)
    X = Xr + 1j * Xi
    ref = (p.M @ p.K) @ X
    err = np.linalg.norm(apply_mk(p, X) - ref)
    assert err <= 1e-13 * max(np.linalg.norm(ref), 1e-300) or np.linalg.norm(ref) == 0


def test_k_inner_examples():
    q = build_pencil(np.eye(3), np.zeros((3, 3)))
    u, v = np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0, 6.0])
    assert k_inner(q, u, v) == 32.0
    p = build_pencil([[2.0]], [[0.0]])
    assert k_inner(p, np.array([1.0]), np.array([1.0])) == 2.0


def test_k_inner_conjugate_linear_first_argument():
    p, _ = random_problem(6, 4)
    rng = np.random.default_rng(0)
    u = rng.normal(size=6) + 1j * rng.normal(size=6)
    v = rng.normal(size=6)
    assert np.isclose(k_inner(p, 1j * u, v), -1j * k_inner(p, u, v))


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 8, elements=st.floats(-10, 10)), arrays(np.float64, 8, elements=st.floats(-10, 10)))
def test_k_inner_symmetric_and_positive(u, v):
    # keep u^T K u clear of underflow
    u = np.where(np.abs(u) < 1e-100, 0.0, u)
    p, _ = random_problem(8, 9)
    assert np.isclose(k_inner(p, u, v), k_inner(p, v, u), rtol=1e-12, atol=1e-10)
    if np.any(u != 0):
        assert k_inner(p, u, u) > 0


def test_apply_full_shifted_examples():
    p = build_pencil([[2.0]], [[1.0]])
    np.testing.assert_array_equal(apply_full_shifted(p, 0.0, np.eye(2)), [[2, 1], [1, 2]])
    np.testing.assert_array_equal(apply_full_shifted(p, ComplexShift(1.0), np.eye(2)), [[1, 1], [1, 3]])


def test_apply_full_shifted_identity_reproduces_h_exactly():
    p, _ = random_problem(5, 11)
    assert np.array_equal(apply_full_shifted(p, 0.0, np.eye(10)), assemble_h(p))


def test_apply_full_shifted_matches_dense_assembly():
    p, _ = random_problem(4, 4)
    rng = np.random.default_rng(1)
    X = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
    tau = 1.3 + 0.2j
    ref = (assemble_h(p) - tau * assemble_s(4)) @ X
    np.testing.assert_allclose(apply_full_shifted(p, tau, X), ref, rtol=1e-13, atol=1e-13)
    per_col = np.array([0.5, 1.0 + 0.1j, 2.0])
    ref = np.column_stack([(assemble_h(p) - t * assemble_s(4)) @ X[:, j] for j, t in enumerate(per_col)])
    np.testing.assert_allclose(apply_full_shifted(p, per_col, X), ref, rtol=1e-13, atol=1e-13)
