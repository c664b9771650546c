"""Special complex and conical special complex structures."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .fields import Chart, Connection, Field, covariant_derivative, curvature, ext_cov_derivative, fmap, \
    lie_derivative, lie_derivative_connection, torsion
from .report import VerificationReport
from .tensor import bracket_AA, compose_J, ein

__all__ = ["SpecialComplexData", "ConicalData", "special_check", "pair_bijection", "from_pair", "conical_check",
           "radial_identities", "d_from_nabla", "DEFAULT_TOL"]

DEFAULT_TOL = 1e-8


def d_from_nabla(nabla: Connection, J: Field, A: Field) -> Connection:
    """D = nabla - 1/2 J A."""
    m = nabla.dim
    f = fmap(lambda G, j, a: G - compose_J(j, a) * 0.5, [nabla, J, A], (m, m, m), 1)
    return Connection(f, m, "D")


@dataclass
class SpecialComplexData:
    chart: Chart
    J: Field
    nabla: Connection

    @cached_property
    def A(self) -> Field:
        """A = nabla J, stored as A[k, X, j] = ((nabla_X J) d_j)^k."""
        return covariant_derivative(self.nabla, self.J)

    @cached_property
    def D(self) -> Connection:
        return d_from_nabla(self.nabla, self.J, self.A)

    @property
    def dim(self) -> int:
        return self.chart.dim


@dataclass
class ConicalData:
    special: SpecialComplexData
    xi: Field

    @cached_property
    def Jxi(self) -> Field:
        m = self.special.dim
        return fmap(lambda j, x: ein("ab,b->a", j, x), [self.special.J, self.xi], (m,), 1, "Jxi")


def special_check(s: SpecialComplexData, points, tol: float = DEFAULT_TOL, stage: str = "special") -> VerificationReport:
    rep = VerificationReport()
    m = s.dim
    J = s.J.at(points)
    A = s.A.at(points)
    rep.add(stage, "torsion(nabla)", "nabla torsion-free", torsion(s.nabla).at(points), tol)
    rep.add(stage, "R^nabla", "nabla flat", curvature(s.nabla).at(points), tol)
    rep.add(stage, "A symmetric", "nabla J symmetric", A - np.swapaxes(A, -1, -2), tol)
    rep.add(stage, "J^2+Id", "J almost complex", np.einsum("...ij,...jk->...ik", J, J) + np.eye(m), tol)
    AJ = np.einsum("...kim,...mj->...kij", A, J)
    JA = np.einsum("...km,...mij->...kij", J, A)
    rep.add(stage, "A_X J + J A_X", "A anti-commutes with J", AJ + JA, tol)
    return rep


def pair_bijection(s: SpecialComplexData):
    """Forward map nabla -> (D, S) with S = -1/2 J A."""
    m = s.dim
    S = fmap(lambda j, a: compose_J(j, a) * -0.5, [s.J, s.A], (m, m, m), 1, "S")
    return s.D, S


def from_pair(D: Connection, S: Field) -> Connection:
    """Inverse map: nabla = D - S."""
    m = D.dim
    return Connection(fmap(lambda d, sv: d - sv, [D, S], (m, m, m), 1), m, "nabla")


def pair_check(D: Connection, S: Field, points, tol: float = DEFAULT_TOL, stage: str = "pair") -> VerificationReport:
    rep = VerificationReport()
    RD = curvature(D).at(points)
    Sv = S.at(points)
    rep.add(stage, "R^D + [S,S]", "curvature of D from S", RD + bracket_AA(Sv), tol)
    rep.add(stage, "d^D S", "S closed for D", ext_cov_derivative(D, S).at(points), tol)
    return rep


def conical_check(c: ConicalData, points, tol: float = DEFAULT_TOL, stage: str = "conical") -> VerificationReport:
    s = c.special
    m = s.dim
    rep = VerificationReport()
    dxi = covariant_derivative(s.nabla, c.xi).at(points)  # [a, X] = (nabla_X xi)^a
    rep.add(stage, "nabla xi - Id", "nabla xi = Id", dxi - np.eye(m), tol)
    rep.add(stage, "L_xi J", "xi holomorphic", lie_derivative(c.xi, s.J).at(points), tol)
    rep.add(stage, "L_Jxi J", "J xi holomorphic", lie_derivative(c.Jxi, s.J).at(points), tol)
    A = s.A.at(points)
    xi = c.xi.at(points)
    jxi = c.Jxi.at(points)
    rep.add(stage, "A_xi", "A_xi = 0", np.einsum("...kij,...i->...kj", A, xi), tol)
    rep.add(stage, "A_Jxi", "A_Jxi = 0", np.einsum("...kij,...i->...kj", A, jxi), tol)
    xi_norm = float(np.linalg.norm(xi, axis=-1).min()) if len(xi) else 0.0
    rep.add_bool(stage, "xi nowhere zero", "xi nonvanishing", xi_norm > 0, xi_norm, 0.0)
    return rep


def radial_identities(c: ConicalData, points, tol: float = DEFAULT_TOL, stage: str = "radial") -> VerificationReport:
    s = c.special
    m = s.dim
    rep = VerificationReport()
    A = s.A
    JA = fmap(lambda j, a: compose_J(j, a), [s.J, A], (m, m, m), 1, "JA")
    Av = A.at(points)
    JAv = JA.at(points)
    rep.add(stage, "L_Jxi nabla - A", "L_Jxi nabla = A", lie_derivative_connection(c.Jxi, s.nabla).at(points) - Av, tol)
    rep.add(stage, "L_Jxi A + 2JA", "L_Jxi A = -2JA", lie_derivative(c.Jxi, A).at(points) + 2 * JAv, tol)
    rep.add(stage, "L_Jxi(JA) - 2A", "L_Jxi JA = 2A", lie_derivative(c.Jxi, JA).at(points) - 2 * Av, tol)
    rep.add(stage, "L_xi A", "L_xi A = 0", lie_derivative(c.xi, A).at(points), tol)
    return rep
