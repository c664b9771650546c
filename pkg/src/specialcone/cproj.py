"""c-projective operators: Rho tensor, Weyl curvature, change of connection, Cotton-York."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Chart, Connection, Field, covariant_derivative, curvature, exterior_derivative, \
    ext_cov_derivative, fmap, ricci, torsion
from .tensor import alt2, ein, pull_J, sym2, tensor_product_id, twist_J, wedge_lk

__all__ = ["CProjData", "CProjError", "rho_tensor", "cweyl", "weyl_from_rho", "cproj_change", "cotton_york",
           "rho_class_residual", "rho_class_field", "cproj_invariants", "relating_form"]


class CProjError(ValueError):
    pass


@dataclass
class CProjData:
    """Complex manifold chart with a torsion-free complex connection."""

    chart: Chart
    J: Field
    D: Connection
    n: int

    def __post_init__(self):
        if self.chart.dim != 2 * self.n:
            raise CProjError("chart dimension must be 2n")


def _twist(k, J):
    return twist_J(k, J, tol=None)


def rho_tensor(d: CProjData) -> Field:
    """P = (Ric + (Ric^s - J*Ric^s)/(n-1)) / (n+1); requires 2n >= 4."""
    if d.n < 2:
        raise CProjError("the Rho tensor needs real dimension at least 4")
    n = d.n
    Ric = ricci(d.D)

    def p_of(ric, J):
        s = sym2(ric)
        return (ric + (s - pull_J(s, J)) * (1.0 / (n - 1))) * (1.0 / (n + 1))

    return fmap(p_of, [Ric, d.J], (2 * n,) * 2, 0, "P")


def weyl_from_rho(R, P, J):
    """W = R + P^a (x) Id - (P_J)^a (x) J + 1/2 P ^ Id - 1/2 P_J ^ J."""
    m = J.shape[-1]
    I = np.eye(m)
    PJ = _twist(P, J)
    w = R + tensor_product_id(alt2(P), I) - tensor_product_id(alt2(PJ), J)
    return w + wedge_lk(P, I) * 0.5 - wedge_lk(PJ, J) * 0.5


def cweyl(d: CProjData) -> Field:
    R = curvature(d.D)
    P = rho_tensor(d)
    m = 2 * d.n
    return fmap(weyl_from_rho, [R, P, d.J], (m,) * 4, 1, "W")


def cproj_change(d: CProjData, theta: Field) -> CProjData:
    """D' = D + th(X)Y + th(Y)X - th(JX)JY - th(JY)JX."""
    m = 2 * d.n
    I = np.eye(m)

    def gamma(G, th, J):
        thJ = ein("m,mi->i", th, J)
        out = G + ein("i,kj->kij", th, I) + ein("j,ki->kij", th, I)
        return out - ein("i,kj->kij", thJ, J) - ein("j,ki->kij", thJ, J)

    D2 = Connection(fmap(gamma, [d.D, theta, d.J], (m, m, m), 1), m, f"{d.D.name}+theta")
    return CProjData(d.chart, d.J, D2, d.n)


def cotton_york(d: CProjData) -> Field:
    """d^D P, antisymmetric in its first two slots."""
    return ext_cov_derivative(d.D, rho_tensor(d), p=1)


def rho_class_field(d1: CProjData, d2: CProjData, theta: Field) -> Field:
    """(P1_J)^a - (P2_J)^a + d(J* theta)."""
    P1, P2 = rho_tensor(d1), rho_tensor(d2)
    m = 2 * d1.n
    jtheta = fmap(lambda th, J: ein("m,mi->i", th, J), [theta, d1.J], (m,), 0, "J*theta")
    djt = exterior_derivative(jtheta)

    def res(p1, p2, J, dj):
        return alt2(_twist(p1, J)) - alt2(_twist(p2, J)) + dj

    return fmap(res, [P1, P2, d1.J, djt], (m, m), 0, "rho-class")


def rho_class_residual(d1: CProjData, d2: CProjData, theta: Field, points) -> float:
    return float(np.abs(rho_class_field(d1, d2, theta).at(points)).max())


def cproj_invariants(d: CProjData, points) -> dict:
    """Residuals of J^2 = -Id, DJ = 0 and torsion-freeness at the points."""
    m = 2 * d.n
    J = d.J.at(points)
    DJ = covariant_derivative(d.D, d.J).at(points)
    T = torsion(d.D).at(points)
    return {
        "J^2+Id": float(np.abs(np.einsum("...ij,...jk->...ik", J, J) + np.eye(m)).max()),
        "DJ": float(np.abs(DJ).max()),
        "torsion": float(np.abs(T).max()),
    }


def _change_matrix(J):
    """Linear map theta -> th(X)Y + th(Y)X - th(JX)JY - th(JY)JX as an (m^3, m) matrix per point."""
    m = J.shape[-1]
    I = np.eye(m)
    M = np.einsum("ai,kj->kija", I, I) + np.einsum("aj,ki->kija", I, I)
    M = M - np.einsum("...ai,...kj->...kija", J, J) - np.einsum("...aj,...ki->...kija", J, J)
    return M.reshape(M.shape[:-4] + (m ** 3, m))


def relating_form(G1, G2, J):
    """Least-squares one-form theta with G2 - G1 = change(theta), and the pointwise residual.

    Inputs are Christoffel arrays [..., k, i, j] and J arrays [..., a, b].
    """
    m = J.shape[-1]
    M = np.broadcast_to(_change_matrix(J), G1.shape[:-3] + (m ** 3, m))
    rhs = (G2 - G1).reshape(G1.shape[:-3] + (m ** 3,))
    theta = np.einsum("...ab,...b->...a", np.linalg.pinv(M), rhs)
    res = np.einsum("...ab,...b->...a", M, theta) - rhs
    return theta, np.abs(res).max(axis=-1) if res.size else res
