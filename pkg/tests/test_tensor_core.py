import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from confsub.errors import DegenerateFrameError, PreconditionError
from confsub.tensor_core import (Frame, SymBilinear, TensorValue, contract, gram_schmidt, kulkarni_nomizu,
                                 null_basis)


def _spd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + n * np.eye(n)


def test_symbilinear_is_symmetrized_and_readonly():
    s = SymBilinear(2, [[1.0, 2.0], [5.0, 3.0]])
    assert np.array_equal(s.matrix, [[1.0, 2.0], [2.0, 3.0]])
    with pytest.raises(ValueError):
        s.matrix[0, 0] = 7.0


def test_tensor_value_validation():
    with pytest.raises(PreconditionError):
        TensorValue(3, 2, np.zeros((3, 2)))
    with pytest.raises(PreconditionError):
        TensorValue(1, 1, [np.nan])
    t = TensorValue.from_array(np.arange(4.0).reshape(2, 2))
    assert t(np.array([1, 0]), np.array([0, 1])) == 1.0
    assert (t + t - 2 * t).max_abs() == 0.0


def test_kulkarni_nomizu_of_metric_with_itself_is_constant_curvature_form():
    # (g o g)/2 has R(X,Y,X,Y) = 1 on orthonormal pairs
    g = SymBilinear.identity(3)
    gg = kulkarni_nomizu(g, g).components / 2
    assert gg[0, 1, 0, 1] == pytest.approx(1.0)
    assert gg[0, 1, 1, 0] == pytest.approx(-1.0)
    # algebraic curvature symmetries
    assert np.allclose(gg, -np.swapaxes(gg, 0, 1))
    assert np.allclose(gg, np.transpose(gg, (2, 3, 0, 1)))
    bianchi = gg + np.transpose(gg, (0, 2, 3, 1)) + np.transpose(gg, (0, 3, 1, 2))
    assert np.allclose(bianchi, 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=2, max_value=5), st.integers(min_value=0, max_value=10_000))
def test_gram_schmidt_orthonormal_for_random_metrics(n, seed):
    rng = np.random.default_rng(seed)
    g = SymBilinear.from_array(_spd(rng, n))
    fr = gram_schmidt(Frame(n, rng.normal(size=(n, n))), g)
    assert fr.orthonormality_residual(g) < 1e-12


def test_gram_schmidt_rejects_dependent_vectors():
    with pytest.raises(DegenerateFrameError):
        gram_schmidt(Frame(3, [[1.0, 0, 0], [2.0, 0, 0]]), SymBilinear.identity(3))


def test_contract_metric_trace():
    rng = np.random.default_rng(1)
    g = _spd(rng, 3)
    gi = SymBilinear.from_array(np.linalg.inv(g))
    assert contract(TensorValue(3, 2, g), (0, 1), gi).components == pytest.approx(3.0)
    with pytest.raises(PreconditionError):
        contract(TensorValue(3, 2, g), (0, 0), gi)


def test_null_basis_is_deterministic_kernel():
    jac = np.array([[1.0, 2.0, 0.0, -1.0], [0.0, 1.0, 1.0, 0.0]])
    nb = null_basis(jac)
    assert nb.shape == (2, 4)
    assert np.allclose(jac @ nb.T, 0.0)
    assert np.array_equal(nb, null_basis(jac.copy()))
    with pytest.raises(PreconditionError):
        null_basis(np.array([[1.0, 1.0], [2.0, 2.0]]))
