import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from kbiq.errors import ParameterError, SingularMatrixError
from kbiq.linalg import condition_estimate, lu_factor, lu_solve, quad_form, solve


def cofactor_det(a):
    a = np.asarray(a, dtype=float)
    if a.shape[0] == 1:
        return a[0, 0]
    return sum((-1) ** j * a[0, j] * cofactor_det(np.delete(a[1:], j, axis=1)) for j in range(a.shape[0]))


def hilbert(n):
    i = np.arange(n)
    return 1.0 / (i[:, None] + i[None, :] + 1.0)


def test_identity_factor():
    f = lu_factor(np.eye(3))
    assert np.array_equal(f.lower, np.eye(3))
    assert np.array_equal(f.upper, np.eye(3))
    assert f.sign == 1
    assert f.det() == 1.0


def test_swap_matrix():
    f = lu_factor([[0.0, 1.0], [1.0, 0.0]])
    assert list(f.perm) == [1, 0]
    assert f.det() == -1.0


def test_det_2x2():
    a = [[2.0, 1.0], [1.0, 2.0]]
    assert lu_factor(a).det() == pytest.approx(cofactor_det(a))
    assert lu_factor(a).det() == pytest.approx(3.0)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_det_against_cofactors(n, rng):
    a = rng.uniform(-1, 1, (n, n))
    assert lu_factor(a).det() == pytest.approx(cofactor_det(a), rel=1e-12)


def test_reconstruction(rng):
    for _ in range(20):
        a = rng.uniform(-1, 1, (10, 10)) + 4 * np.eye(10)
        f = lu_factor(a)
        assert np.allclose(f.permutation_matrix() @ a, f.lower @ f.upper, rtol=1e-12, atol=1e-12)


def test_parity_matches_swaps(rng):
    for _ in range(50):
        a = rng.standard_normal((6, 6))
        f = lu_factor(a)
        assert f.sign == round(np.linalg.det(f.permutation_matrix()))
        assert np.sign(f.det()) == np.sign(np.linalg.det(a))


def test_singular_raises_with_pivot():
    a = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [1.0, 0.0, 1.0]])
    with pytest.raises(SingularMatrixError) as err:
        lu_factor(a)
    assert err.value.pivot_index == 2
    f = lu_factor(a, strict=False)
    assert f.singular and f.det() == 0.0
    assert condition_estimate(f) == np.inf
    with pytest.raises(SingularMatrixError):
        lu_solve(f, np.ones(3))


def test_rejects_bad_input():
    with pytest.raises(ParameterError):
        lu_factor(np.ones((2, 3)))
    with pytest.raises(ParameterError):
        lu_factor([[1.0, np.nan], [0.0, 1.0]])


@pytest.mark.parametrize(
    "a, b, x",
    [
        (np.eye(3), [1.0, -2.0, 3.0], [1.0, -2.0, 3.0]),
        ([[2.0, 0.0], [0.0, 4.0]], [2.0, 4.0], [1.0, 1.0]),
        ([[1.0, 1.0], [1.0, 2.0]], [3.0, 5.0], [1.0, 2.0]),
    ],
)
def test_solve_examples(a, b, x):
    assert np.allclose(lu_solve(lu_factor(a), b), x, rtol=1e-14)


def test_random_systems(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 12))
        a = rng.uniform(-1, 1, (n, n)) + 4 * np.eye(n)
        x = rng.uniform(-1, 1, n)
        got = lu_solve(lu_factor(a), a @ x)
        assert np.abs(got - x).max() <= 1e-9 * max(np.abs(x).max(), 1e-300)


def test_transpose_and_matrix_rhs(rng):
    a = rng.standard_normal((7, 7))
    b = rng.standard_normal((7, 3))
    f = lu_factor(a)
    assert np.allclose(a @ lu_solve(f, b), b, atol=1e-10)
    assert np.allclose(a.T @ lu_solve(f, b, transpose=True), b, atol=1e-10)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (6, 6), elements=st.floats(-1, 1)), arrays(np.float64, 6, elements=st.floats(-1, 1)))
def test_residual_bound(a, b):
    a = a + 8 * np.eye(6)
    y = lu_solve(lu_factor(a), b)
    assert np.abs(a @ y - b).max() <= 1e-10 * max(np.abs(b).max(), 1e-300) + 1e-300


def test_condition_examples():
    assert condition_estimate(lu_factor(np.eye(4))) == pytest.approx(1.0)
    assert condition_estimate(lu_factor(np.diag([1.0, 1e-6]))) == pytest.approx(1e6, rel=1e-9)
    h = hilbert(4)
    true = np.abs(h).sum(0).max() * np.abs(np.linalg.inv(h)).sum(0).max()
    est = condition_estimate(lu_factor(h))
    assert 1.5e3 <= est <= 1.6e5
    assert true / 10 <= est <= true * (1 + 1e-9)


def test_condition_within_factor_ten(rng):
    for _ in range(200):
        a = rng.standard_normal((10, 10))
        true = np.abs(a).sum(0).max() * np.abs(np.linalg.inv(a)).sum(0).max()
        est = condition_estimate(lu_factor(a))
        assert true / 10 <= est <= true * (1 + 1e-8)


def test_jitter_and_quad_form():
    a = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert np.allclose(solve(a, [2.0, 2.0], jitter=1.0), [1.0, 1.0])
    assert quad_form([[2.0, 1.0], [1.0, 2.0]], [1.0, -1.0]) == pytest.approx(2.0)
