import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from conftest import SEED
from specialcone import gallery
from specialcone.fields import (Chart, Connection, Field, constant_field, coordinate_vector_field, covariant_derivative,
                                curvature, exterior_derivative, levi_civita, lie_derivative, nijenhuis, ricci, torsion)
from specialcone.numerics import jinv, jstack, seed_jets
from specialcone.tensor import ein, standard_J


def fs_points(n, count=8):
    return np.random.default_rng(SEED).uniform(-1, 1, (count, 2 * n))


@pytest.mark.parametrize("n", [1, 2])
def test_fs_metric_matches_complex_oracle(n):
    g = gallery.fs_metric(n).at(fs_points(n))
    for p, gv in zip(fs_points(n), g):
        assert np.allclose(gv, oracles.fs_real_metric(p), atol=1e-15)


@pytest.mark.parametrize("n", [1, 2])
def test_fs_levi_civita_matches_finite_differences(n):
    D = levi_civita(gallery.fs_metric(n))
    for p in fs_points(n, 3):
        assert np.allclose(D.at(p), oracles.fd_levi_civita(oracles.fs_real_metric, p), atol=1e-8)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_fs_is_einstein(n):
    g = gallery.fs_metric(n)
    pts = fs_points(n)
    assert np.allclose(ricci(levi_civita(g)).at(pts), 2 * (n + 1) * g.at(pts), atol=1e-12)


def test_fs_curvature_matches_finite_differences():
    D = levi_civita(gallery.fs_metric(2))
    G = lambda x: D.at(x)  # noqa: E731
    for p in fs_points(2, 3):
        assert np.allclose(curvature(D).at(p), oracles.fd_curvature(G, p), atol=1e-7)


@pytest.mark.parametrize("K", [4.0, -4.0, 1.0])
def test_surface_gaussian_curvature(K):
    S = gallery.surface_for_curvature(K)
    pts = S.chart.sample(10, SEED)
    R = curvature(S.D).at(pts)
    g = S.g.at(pts)
    # R(d1,d2,d2,d1) = K (g11 g22 - g12^2)
    r1221 = np.einsum("...l,...l->...", g[..., 0, :], R[..., :, 0, 1, 1])
    assert np.allclose(r1221, K * (g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2), atol=1e-12)


def test_flat_connection_has_zero_curvature():
    D = Connection.of(constant_field(np.zeros((3, 3, 3)), 3, 1))
    assert np.abs(curvature(D).at(np.zeros((2, 3)))).max() == 0.0


def test_covariant_derivative_of_coordinate_vector():
    # D_i (x^j d_j) = d_i + G^k_ij x^j for a constant connection
    G = np.zeros((2, 2, 2))
    G[0, 1, 1] = 3.0
    D = Connection.of(constant_field(G, 2, 1))
    X = coordinate_vector_field(2)
    p = np.array([0.5, 2.0])
    DX = covariant_derivative(D, X).at(p)  # [k, i]
    assert np.allclose(DX, np.eye(2) + np.einsum("kij,j->ki", G, p))


def test_torsion_example():
    G = np.zeros((2, 2, 2))
    G[0, 0, 1] = 1.0
    T = torsion(Connection.of(constant_field(G, 2, 1))).at(np.zeros(2))
    assert T[0, 0, 1] == 1.0 and T[0, 1, 0] == -1.0


def test_exterior_derivative_example():
    # d(x dy) = dx ^ dy
    def th(p, k):
        x = seed_jets(p, k)
        return jstack([x[0] * 0.0, x[0]], axis=0)

    d = exterior_derivative(Field(th, 2, (2,))).at(np.array([0.3, 0.1]))
    assert np.allclose(d, [[0.0, 1.0], [-1.0, 0.0]])


def test_lie_derivative_of_euler_field():
    # L_x g = 2 g for the constant Euclidean metric
    g = constant_field(np.eye(3), 3)
    L = lie_derivative(coordinate_vector_field(3), g).at(np.array([0.1, 0.2, 0.3]))
    assert np.allclose(L, 2 * np.eye(3))


def _warped_J(p, k):
    # J = P J0 P^{-1} with P = [[1, x2], [0, 1]]
    x = seed_jets(p, k)
    a = x[1]
    one = x[0] * 0.0 + 1.0
    rows = [[a * -1.0, (one + a * a) * -1.0], [one, a]]
    return jstack([jstack(r, axis=0) for r in rows], axis=0)


def test_nijenhuis_matches_finite_differences():
    # a non-integrable almost complex structure on R^4
    def Jnum(p):
        s = np.sin(p[2])
        P = np.eye(4) + s * np.eye(4, k=2) + p[0] * np.eye(4, k=-1)
        return P @ standard_J(4) @ np.linalg.inv(P)

    def Jjet(p, k):
        x = seed_jets(p, k)
        z = x[0] * 0.0
        P = [[z + (1.0 if i == j else 0.0) for j in range(4)] for i in range(4)]
        for i in range(2):
            P[i][i + 2] = x[2].sin()
        for i in range(3):
            P[i + 1][i] = x[0]
        Pj = jstack([jstack(r, axis=0) for r in P], axis=0)
        return ein("ab,bc,cd->ad", Pj, standard_J(4), jinv(Pj))

    J = Field(Jjet, 4, (4, 4), 1)
    pts = np.random.default_rng(3).uniform(-0.5, 0.5, (3, 4))
    for p in pts:
        assert np.allclose(J.at(p), Jnum(p), atol=1e-14)
        N = nijenhuis(J).at(p)
        assert np.allclose(N, oracles.fd_nijenhuis(Jnum, p), atol=1e-7)
    assert np.abs(nijenhuis(J).at(pts)).max() > 1e-3


def test_nijenhuis_vanishes_for_integrable_two_dim():
    J = Field(_warped_J, 2, (2, 2), 1)
    p = np.array([[0.2, 0.7]])
    assert np.allclose(np.einsum("...ab,...bc->...ac", J.at(p), J.at(p)), -np.eye(2))
    assert np.abs(nijenhuis(J).at(p)).max() < 1e-13


def test_chart_sampling_is_reproducible_and_respects_predicate():
    c = Chart(("x", "y"), -1, 1, lambda p: p[..., 0] ** 2 + p[..., 1] ** 2 < 0.5)
    a, b = c.sample(20, SEED), c.sample(20, SEED)
    assert np.array_equal(a, b)
    assert c.contains(a).all()
    with pytest.raises(ValueError):
        Chart(("x",), 1, 0)


@given(st.lists(st.floats(-0.9, 0.9), min_size=4, max_size=4))
def test_fs_bianchi_identity(p):
    R = curvature(levi_civita(gallery.fs_metric(2))).at(np.asarray(p))
    first = R + np.transpose(R, (0, 2, 3, 1)) + np.transpose(R, (0, 3, 1, 2))
    assert np.abs(first).max() < 1e-12
    assert np.abs(R + np.swapaxes(R, 1, 2)).max() < 1e-12


@given(st.lists(st.floats(-0.9, 0.9), min_size=4, max_size=4))
def test_levi_civita_is_metric_and_torsion_free(p):
    g = gallery.fs_metric(2)
    D = levi_civita(g)
    p = np.asarray(p)
    assert np.abs(torsion(D).at(p)).max() < 1e-14
    assert np.abs(covariant_derivative(D, g).at(p)).max() < 1e-13
