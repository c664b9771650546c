import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from specialcone.numerics import Jet, JetError, Tolerances, coordinate_jet, fd_partial, jet_combine, jinv, \
    seed_jets


def x_jet(x, order=2):
    return coordinate_jet([x], 0, order)


def test_coordinate_jet_seed():
    j = coordinate_jet([2.0, 5.0], 1, 2)
    assert j.value == 5.0
    assert np.array_equal(j.grad, [0.0, 1.0])
    assert not j.hess.any()


def test_coordinate_jet_origin_order1():
    j = coordinate_jet([0.0, 0.0, 0.0], 0, 1)
    assert j.value == 0.0
    assert np.array_equal(j.grad, [1.0, 0.0, 0.0])


def test_coordinate_jet_order3_parts():
    j = coordinate_jet([1.0], 0, 3)
    assert j.value == 1.0 and j.grad[0] == 1.0
    assert not j.hess.any() and not j.third.any()


def test_coordinate_jet_bad_index():
    with pytest.raises((JetError, IndexError, ValueError)):
        coordinate_jet([1.0, 2.0], 2, 1)


def test_mul_square():
    x = x_jet(3.0)
    j = jet_combine("mul", [x, x])
    assert (j.value, j.grad[0], j.hess[0, 0]) == (9.0, 6.0, 2.0)


def test_sin_at_zero():
    j = jet_combine("sin", [x_jet(0.0)])
    assert j.value == 0.0 and j.grad[0] == 1.0 and j.hess[0, 0] == 0.0


def test_reciprocal_of_one_plus_square():
    x = x_jet(1.0)
    one = Jet.constant(1.0, 1, 2)
    j = jet_combine("div", [one, jet_combine("add", [one, jet_combine("mul", [x, x])])])
    f = lambda p: 1.0 / (1.0 + p[0] ** 2)  # noqa: E731
    assert j.value == pytest.approx(0.5)
    assert j.grad[0] == pytest.approx(-0.5)
    # the second derivative of 1/(1+x^2) at 1 is 1/2 (its Taylor coefficient is 1/4)
    assert j.hess[0, 0] == pytest.approx(0.5, abs=1e-14)
    assert j.hess[0, 0] == pytest.approx(fd_partial(f, [1.0], [0, 0], 1e-4), abs=1e-6)


def test_combine_errors():
    x = x_jet(0.0)
    with pytest.raises(JetError):
        jet_combine("div", [x, x])
    with pytest.raises(JetError):
        jet_combine("sqrt", [x - 1.0])
    with pytest.raises(JetError):
        jet_combine("add", [x, coordinate_jet([0.0], 0, 1)])
    with pytest.raises(JetError):
        jet_combine("tan", [x])


def test_fd_partial_examples():
    assert fd_partial(lambda p: p[0] * p[1], [1.0, 2.0], [0, 1]) == pytest.approx(1.0, abs=1e-6)
    assert fd_partial(lambda p: math.exp(p[0]), [0.0], [0, 0], 1e-4) == pytest.approx(1.0, abs=1e-6)
    fs = lambda p: math.log(1 + p[0] ** 2 + p[1] ** 2)  # noqa: E731
    assert fd_partial(fs, [0.0, 0.0], [0, 0], 1e-4) == pytest.approx(2.0, abs=1e-6)


def test_tolerances_validate():
    assert Tolerances().residual_tol == 1e-8
    with pytest.raises(ValueError):
        Tolerances(residual_tol=0.0)
    with pytest.raises(ValueError):
        Tolerances(fd_step=-1.0)


def test_third_order_exp():
    j = x_jet(0.0, 3).exp()
    assert j.value == 1.0 and j.grad[0] == 1.0 and j.hess[0, 0] == 1.0 and j.third[0, 0, 0] == 1.0


def test_atan2_branch_and_derivative():
    p = np.array([[-1.0, 1e-3], [-1.0, -1e-3]])
    x = seed_jets(p, 1)
    ang = jet_combine("atan2", [x[1], x[0]])
    assert ang.value[0] == pytest.approx(np.arctan2(1e-3, -1.0))
    # d atan2(y, x) = (x dy - y dx)/(x^2 + y^2)
    r2 = 1.0 + 1e-6
    assert np.allclose(ang.grad[0], [-1e-3 / r2, -1.0 / r2])


def test_jinv_derivative():
    p = np.array([0.3, -0.7])
    x = seed_jets(p, 1)
    M = Jet.constant(np.eye(2), 2, 1) + x[0] * np.array([[1.0, 2.0], [0.0, 1.0]]) \
        + x[1] * np.array([[0.0, 0.0], [1.0, 0.5]])
    Minv = jinv(M)
    prod = np.einsum("...ab,...bc->...ac", M.value, Minv.value)
    assert np.allclose(prod, np.eye(2))
    num = lambda q: np.linalg.inv(np.eye(2) + q[0] * np.array([[1, 2], [0, 1.0]])  # noqa: E731
                                  + q[1] * np.array([[0, 0], [1, 0.5]]))
    for i in range(2):
        e = np.zeros(2)
        e[i] = 1e-6
        fd = (num(p + e) - num(p - e)) / 2e-6
        assert np.allclose(Minv.grad[..., i], fd, atol=1e-8)


def _poly(coeffs, x):
    """sum c * x0^a x1^b x2^c for (c, (a, b, c)) in coeffs, for jets or floats."""
    out = 0.0
    for c, (a, b, d) in coeffs:
        out = out + c * (x[0] ** a) * (x[1] ** b) * (x[2] ** d)
    return out


monomials = st.lists(st.tuples(st.floats(-2, 2), st.tuples(*[st.integers(0, 2)] * 3)).filter(
    lambda t: sum(t[1]) <= 4), min_size=1, max_size=6)


@given(monomials, st.lists(st.floats(-1, 1), min_size=3, max_size=3),
       st.sampled_from([(0,), (1,), (0, 1), (2, 2), (0, 1, 2), (1, 1, 1)]))
def test_polynomial_jets_match_finite_differences(coeffs, point, multi):
    step = 1e-3
    x = [coordinate_jet(point, i, 3) for i in range(3)]
    j = _poly(coeffs, x)
    if not isinstance(j, Jet):
        return
    part = [j.value, j.grad, j.hess, j.third][len(multi)]
    fd = fd_partial(lambda p: _poly(coeffs, p), point, multi, step)
    scale = 1 + sum(abs(c) for c, _ in coeffs) * 10
    assert abs(part[tuple(multi)] - fd) <= 10 * step ** 2 * scale


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=2), st.sampled_from(["sin", "cos", "exp"]))
def test_unary_ops_match_finite_differences(point, op):
    x = coordinate_jet(point, 0, 2) * 0.7 + coordinate_jet(point, 1, 2) * 0.3
    j = jet_combine(op, [x])
    f = lambda p: getattr(math, op)(0.7 * p[0] + 0.3 * p[1])  # noqa: E731
    step = 1e-3
    for multi in [(0,), (1,), (0, 1)]:
        part = [j.value, j.grad, j.hess][len(multi)]
        fd = fd_partial(f, point, multi, step)
        assert abs(part[multi] - fd) <= 10 * step ** 2 * (1 + abs(f(point)) * 30)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_addition_commutes_bitwise(vals):
    a, b, c = (coordinate_jet(vals, i, 2) * (i + 1.5) for i in range(3))
    s1, s2 = a + b, b + a
    for p, q in zip(s1.parts, s2.parts):
        assert np.array_equal(p, q)


@given(st.lists(st.floats(0.5, 1.5), min_size=8, max_size=8))
def test_long_products_reassociate(vals):
    jets = [coordinate_jet([v], 0, 2) * v for v in vals]
    left = jets[0]
    for j in jets[1:]:
        left = left * j
    right = jets[-1]
    for j in reversed(jets[:-1]):
        right = j * right
    for p, q in zip(left.parts, right.parts):
        assert np.allclose(p, q, rtol=1e-14, atol=0)


@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_hessian_and_third_are_symmetric(point):
    x = [coordinate_jet(point, i, 3) for i in range(3)]
    j = (x[0] * x[1] * x[1] + x[2]).sin() * (x[0] - x[2]).exp()
    H, T = j.hess, j.third
    assert np.allclose(H, H.T, atol=1e-14)
    for perm in [(1, 0, 2), (0, 2, 1), (2, 1, 0)]:
        assert np.allclose(T, np.transpose(T, perm), atol=1e-13)
