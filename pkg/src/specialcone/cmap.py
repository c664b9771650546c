"""The rigid c-map on the tangent bundle and the rotated family of special connections.

Points of TM are (x, u) with u the fibre coordinates.  The horizontal lift
of X is X^i d_i - X^i u^j G^k_ij d_{u^k} and the vertical lift is X^i d_{u^i}.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cproj import cweyl
from .fields import Chart, Connection, Field, fmap, nijenhuis, pullback_field
from .numerics import Jet, jstack, seed_jets
from .report import VerificationReport
from .scm import SpecialComplexData, conical_check, ConicalData, special_check
from .tensor import bracket_AA, ein, gram_trace, triple_bracket

__all__ = ["TangentLift", "HypercomplexTriple", "lift_hypercomplex", "quaternion_residuals", "rotate_connection",
           "rotation_angle", "wq_horizontal", "triple_bracket_norm", "flatness_implication", "witness",
           "cmap_report", "rotation_rows", "rotated_formula", "tm_points", "FIBRE_BOX"]

FIBRE_BOX = 1.0


def rotation_angle(t) -> float:
    """Angle in radians; a Fraction is read as a multiple of pi and reduced modulo pi first."""
    if isinstance(t, Fraction):
        return float(t % 1) * np.pi
    return float(t)


@dataclass
class TangentLift:
    base: SpecialComplexData

    @property
    def m(self) -> int:
        return self.base.dim

    @property
    def dim(self) -> int:
        return 2 * self.m

    def chart(self) -> Chart:
        c = self.base.chart
        m = self.m
        names = c.names + tuple(f"u{i + 1}" for i in range(m))
        lo = np.concatenate([c.lo, -FIBRE_BOX * np.ones(m)])
        hi = np.concatenate([c.hi, FIBRE_BOX * np.ones(m)])
        pred = None
        if c.predicate is not None:
            bp = c.predicate
            pred = lambda p: bp(p[..., :m])  # noqa: E731
        return Chart(names, lo, hi, pred, f"T{c.name}")

    def frame(self, p, k) -> tuple:
        """(P, P^{-1}) whose first m columns are horizontal lifts and last m vertical lifts."""
        m = self.m
        G = pullback_field(self.base.nabla, range(m), 2 * m)(p, k)
        u = seed_jets(p, k)
        uv = jstack([u[m + i] for i in range(m)])
        GU = ein("kij,j->ki", G, uv)
        one = u[0] * 0.0 + np.eye(m)
        zero = u[0] * 0.0 + np.zeros((m, m))
        P = _blocks(one, zero, GU * -1.0, one)
        Pinv = _blocks(one, zero, GU, one)
        return P, Pinv

    def horizontal(self, X, point) -> np.ndarray:
        """Horizontal lift of a base vector at a point (x, u) of TM."""
        P, _ = self.frame(np.asarray(point, dtype=float), 0)
        m = self.m
        return np.einsum("...ai,...i->...a", P.value[..., :, :m], X)

    def vertical(self, X) -> np.ndarray:
        return np.concatenate([np.zeros_like(X), X], axis=-1)


def _blocks(a, b, c, d) -> Jet:
    """2x2 block matrix of m x m jets."""
    rows = []
    m = a.shape[0]
    for i in range(m):
        rows.append(jstack([a[i, j] for j in range(m)] + [b[i, j] for j in range(m)]))
    for i in range(m):
        rows.append(jstack([c[i, j] for j in range(m)] + [d[i, j] for j in range(m)]))
    return jstack(rows)


@dataclass
class HypercomplexTriple:
    lift: TangentLift
    I1: Field
    I2: Field
    I3: Field

    def fields(self) -> tuple:
        return self.I1, self.I2, self.I3


def lift_hypercomplex(s: SpecialComplexData) -> HypercomplexTriple:
    """I1 = (J, -J), I2(X^h + Y^v) = Y^h - X^v, I3 = I1 I2 in the horizontal/vertical frame."""
    T = TangentLift(s)
    m = T.m
    M = 2 * m
    Jp = pullback_field(s.J, range(m), M)

    def make(which):
        def ev(p, k):
            P, Pinv = T.frame(p, k)
            j = Jp(p, k)
            z = j * 0.0
            one = z + np.eye(m)
            if which == 1:
                F = _blocks(j, z, z, j * -1.0)
            elif which == 2:
                F = _blocks(z, one, one * -1.0, z)
            else:
                F = _blocks(z, j, j, z)
            return ein("ab,bc->ac", ein("ab,bc->ac", P, F), Pinv)
        return Field(ev, M, (M, M), 1, f"I{which}")

    return HypercomplexTriple(T, make(1), make(2), make(3))


def tm_points(lift: TangentLift, count: int, seed: int) -> np.ndarray:
    return lift.chart().sample(count, seed)


def quaternion_residuals(h: HypercomplexTriple, points) -> dict:
    I1, I2, I3 = (f.at(points) for f in h.fields())
    M = I1.shape[-1]
    Id = np.eye(M)
    mm = lambda a, b: np.einsum("...ij,...jk->...ik", a, b)  # noqa: E731
    return {
        "I1^2+Id": float(np.abs(mm(I1, I1) + Id).max()),
        "I2^2+Id": float(np.abs(mm(I2, I2) + Id).max()),
        "I3^2+Id": float(np.abs(mm(I3, I3) + Id).max()),
        "I1I2-I3": float(np.abs(mm(I1, I2) - I3).max()),
        "I1I2+I2I1": float(np.abs(mm(I1, I2) + mm(I2, I1)).max()),
        "I1I2I3+Id": float(np.abs(mm(mm(I1, I2), I3) + Id).max()),
    }


def rotate_connection(s: SpecialComplexData, t) -> SpecialComplexData:
    """nabla^t = e^{tJ} nabla e^{-tJ}; a Fraction t is a multiple of pi."""
    m = s.dim
    th = rotation_angle(t)
    c, sn = np.cos(th), np.sin(th)

    def ev(p, k):
        j1 = s.J(p, k + 1)
        j = j1.trunc(k)
        R = j * sn + c * np.eye(m)
        Rinv = j * (-sn) + c * np.eye(m)
        dRinv = j1.deriv() * (-sn)  # [a, b, i] = d_i (e^{-tJ})^a_b
        G = s.nabla(p, k)
        inner = dRinv.transpose(0, 2, 1) + ein("aib,bj->aij", G, Rinv)
        return ein("ka,aij->kij", R, inner)

    name = f"nabla^{t}"
    return SpecialComplexData(s.chart, s.J, Connection(ev, m, name))


def rotated_formula(s: SpecialComplexData, t) -> Connection:
    """nabla - sin(t) e^{tJ} A, the closed form of the rotated connection."""
    m = s.dim
    th = rotation_angle(t)
    c, sn = np.cos(th), np.sin(th)

    def fn(G, j, a):
        R = j * sn + c * np.eye(m)
        return G - ein("km,mij->kij", R, a) * sn

    return Connection(fmap(fn, [s.nabla, s.J, s.A], (m, m, m), 1), m, f"formula^{t}")


def _A_field(s) -> Field:
    return s.A


def wq_horizontal(s, X, Y, Z, point, u=None) -> np.ndarray:
    """-1/4 [A_X, A_Y] Z at a base point, the quaternionic Weyl tensor on horizontal lifts.

    With fibre coordinates u the result is lifted horizontally to (point, u);
    otherwise the base vector is returned.
    """
    point = np.asarray(point, dtype=float)
    A = _A_field(s).at(point)
    AX = np.einsum("...kij,...i->...kj", A, X)
    AY = np.einsum("...kij,...i->...kj", A, Y)
    br = np.einsum("...ab,...bc->...ac", AX, AY) - np.einsum("...ab,...bc->...ac", AY, AX)
    v = -0.25 * np.einsum("...ab,...b->...a", br, Z)
    if u is None:
        return v
    base = s.special if hasattr(s, "special") else s
    return TangentLift(base).horizontal(v, np.concatenate([point, np.asarray(u, dtype=float)], axis=-1))


def triple_bracket_norm(s, points) -> float:
    """Max component of [A_X, [A_Y, A_Z]] over the points."""
    T = triple_bracket(_A_field(s).at(points))
    return float(np.abs(T).max()) if T.size else 0.0


def witness(s, t, t2, points) -> float:
    """|sin(t - t')| * max |e^{(t - t')J} [A_X, [A_Y, A_Z]]|."""
    d = rotation_angle(t) - rotation_angle(t2)
    Jv = s.J.at(points)
    R = np.cos(d) * np.eye(Jv.shape[-1]) + np.sin(d) * Jv
    T = triple_bracket(_A_field(s).at(points))
    rotated = np.einsum("...ka,...axyzb->...kxyzb", R, T)
    return float(abs(np.sin(d)) * np.abs(rotated).max())


def flatness_implication(source, points, tol: float = 1e-10, tol_out: float = 1e-8,
                         stage: str = "cmap") -> VerificationReport:
    """Rows r1 = max|[A_X, A_Y]Z|, r2 = max|W|, r3 = max|Bgram| and the implication r1 < tol => r2, r3 < tol_out.

    ``source`` is a constructed cone (its certificate supplies W and Bgram) or
    any object with an A field, for which only r1 is available.
    """
    rep = VerificationReport()
    r1 = float(np.abs(bracket_AA(_A_field(source).at(points))).max())
    rep.add(stage, "W^Q horizontal proxy", "W^Q on horizontal lifts = -1/4[A_X,A_Y]Z", r1, tol, expect="info")
    cert = getattr(source, "cert", None)
    if cert is None:
        rep.add_bool(stage, "flatness implication", "W^Q = 0 implies W = 0 and Bgram = 0 (no certificate)",
                     r1 >= tol, r1, tol)
        return rep
    bp = np.asarray(points)[..., :cert.m]
    # the c-projective Weyl tensor vanishes identically in complex dimension one
    r2 = float(np.abs(cweyl(cert.base).at(bp)).max()) if cert.n >= 2 else 0.0
    r3 = max(float(np.abs(gram_trace(p.B.at(bp))).max()) for p in cert.patches)
    rep.add(stage, "Weyl residual", "c-projective Weyl curvature of the base", r2, tol_out, expect="info")
    rep.add(stage, "Bgram residual", "Bgram = Tr(B_X B_Y) of the certificate", r3, tol_out, expect="info")
    ok = r1 >= tol or (r2 < tol_out and r3 < tol_out)
    rep.add_bool(stage, "flatness implication", "W^Q = 0 implies W = 0 and Bgram = 0", ok,
                 max(r2, r3) if r1 < tol else r1, tol_out)
    return rep


def rotation_rows(special: SpecialComplexData, xi: Field | None, points, t_grid: int = 8, tol: float = 1e-8,
                  stage: str = "cmap") -> VerificationReport:
    """nabla^t on the grid t = q pi / t_grid: special and conical laws, D^t = D, closed form and period pi."""
    rep = VerificationReport()
    D0 = special.D.at(points)
    for q in range(t_grid):
        t = Fraction(q, t_grid)
        st = rotate_connection(special, t)
        tag = f"t={t}pi"
        sub = special_check(st, points, tol, stage)
        if xi is not None:
            sub.extend(conical_check(ConicalData(st, xi), points, tol, stage))
        bad = sub.failures()
        worst = max(r.residual for r in (bad or [r for r in sub.rows if r.expect == "zero"]))
        rep.add_bool(stage, f"nabla^t special/conical [{tag}]", "nabla^t is conical special complex", not bad,
                     worst, tol)
        rep.add(stage, f"D^t - D [{tag}]", "D^t = D", st.D.at(points) - D0, 1e-12)
        rep.add(stage, f"nabla^t closed form [{tag}]", "nabla^t = nabla - sin t e^{tJ} A",
                st.nabla.at(points) - rotated_formula(special, t).at(points), 1e-12)
        same = np.array_equal(st.nabla.at(points), rotate_connection(special, t + 1).nabla.at(points))
        rep.add_bool(stage, f"pi-periodicity [{tag}]", "nabla^{t+pi} = nabla^t", same)
    return rep


def cmap_report(source, points, tm_pts=None, t_grid: int = 8, tol: float = 1e-8,
                stage: str = "cmap") -> VerificationReport:
    """All c-map rows.  ``source`` is a constructed cone or an object carrying only J and A."""
    rep = VerificationReport()
    special = getattr(source, "special", None)
    if special is not None:
        h = lift_hypercomplex(special)
        if tm_pts is None:
            base = np.asarray(points)
            rng = np.random.default_rng(len(base))
            tm_pts = np.concatenate([base, rng.uniform(-FIBRE_BOX, FIBRE_BOX, base.shape)], axis=-1)
        for key, v in quaternion_residuals(h, tm_pts).items():
            rep.add(stage, key, "quaternion relations of (I1, I2, I3)", v, 1e-12)
        for i, I in enumerate(h.fields(), 1):
            rep.add(stage, f"Nijenhuis(I{i})", "I_a integrable", nijenhuis(I).at(tm_pts), 1e-7)
        rep.extend(rotation_rows(special, getattr(source, "xi", None), points, t_grid, tol, stage))
    tb = triple_bracket_norm(source, points)
    rep.add(stage, "triple_bracket", "max |[A_X,[A_Y,A_Z]]|", tb, tol, expect="info")
    if tb > tol:
        rep.add(stage, "family non-trivial", "[A,[A,A]] != 0: the hypercomplex structures vary with t", tb, tol,
                expect="nonzero")
        rep.add(stage, "witness t=pi/4 vs 0", "sin(t-t')|e^{(t-t')J}[A,[A,A]]| != 0",
                witness(source, Fraction(1, 4), Fraction(0), points), tol, expect="nonzero")
    rep.extend(flatness_implication(source, points, stage=stage))
    return rep
