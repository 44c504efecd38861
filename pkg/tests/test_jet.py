import numpy as np
import pytest

from confsub import jet as J


def _fd_grad_hess(f, x, h=1e-4):
    n = len(x)
    g = np.zeros(n)
    H = np.zeros((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
        for j in range(n):
            d = np.zeros(n)
            d[j] = h
            H[i, j] = (f(x + e + d) - f(x + e - d) - f(x - e + d) + f(x - e - d)) / (4 * h * h)
    return g, H


def expr(x):
    return J.sin(x[0]) * J.exp(x[1] * 0.5) + J.power(x[0] * x[0] + 1.0, 1.5) / (x[1] + 3.0) + J.log(J.sqrt(x[1] + 2.0))


def test_scalar_jet_matches_finite_differences():
    p = np.array([0.7, -0.3])
    jt = expr(J.variables(list(p)))
    g, H = _fd_grad_hess(lambda y: float(J.value(expr(list(y)))), p)
    assert np.allclose(jt.d1, g, atol=1e-7)
    assert np.allclose(jt.d2, H, atol=1e-5)
    assert np.allclose(jt.d2, jt.d2.T)


def test_batched_jets_agree_with_single_points():
    pts = np.array([[0.1, 0.2], [1.3, -0.4], [2.0, 0.9]])
    batch = expr(J.variables([pts[:, 0], pts[:, 1]]))
    for i, p in enumerate(pts):
        one = expr(J.variables(list(p)))
        assert np.allclose(batch.val[i], one.val)
        assert np.allclose(batch.d1[i], one.d1)
        assert np.allclose(batch.d2[i], one.d2)


def test_matrix_inverse_jet():
    x = J.variables([0.4, 1.1])
    m = J.array([[2.0 + x[0] * x[0], x[0] * x[1]], [x[0] * x[1], 1.0 + J.exp(x[1])]])
    mi = J.inv(m)
    prod = J.einsum("ab,bc->ac", m, mi)
    assert np.allclose(prod.val, np.eye(2))
    assert np.allclose(prod.d1, 0.0, atol=1e-12)
    assert np.allclose(prod.d2, 0.0, atol=1e-12)


def test_derivative_lowers_order():
    x = J.variables([0.3])
    jt = J.tanh(x[0])
    d = jt.derivative()
    assert d.order == 1
    assert np.isclose(d.val[0], 1 - np.tanh(0.3) ** 2)
    with pytest.raises(ValueError):
        J.Jet(1.0, None, np.zeros((1, 1)))


def test_plain_numbers_pass_through():
    assert J.sin(0.5) == pytest.approx(np.sin(0.5))
    assert np.allclose(J.value(J.exp(np.array([0.0, 1.0]))), [1.0, np.e])
