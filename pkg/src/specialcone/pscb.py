"""Certificates on a complex base, and the cone built over them.

A certificate lives on a base chart with complex structure ``J`` and a
torsion-free complex connection ``D``.  Each patch carries a symmetric
(1,2) tensor ``B`` anticommuting with ``J``, a symmetric (0,2) tensor
``c`` with J*c = -c, and the local connection one-form ``gamma2`` of the
circle bundle.  Overlaps carry the transition phase ``f`` (the fibre
coordinate changes by theta_beta = theta_alpha - f).

The cone lives on the total chart (x, theta, r).  Its frame is the
horizontal lift of the coordinate fields together with xi = r d_r and
Z = d_theta.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .cproj import CProjData, cweyl, relating_form, rho_tensor
from .fields import Chart, Connection, Field, constant_field, covariant_derivative, curvature, \
    exterior_derivative, ext_cov_derivative, fmap, lie_derivative, nijenhuis, partial, pullback_field, \
    section_field, torsion
from .numerics import Jet, jstack, seed_jets
from .report import VerificationReport
from .scm import ConicalData, SpecialComplexData, conical_check, radial_identities, special_check
from .tensor import alt2, bracket_AA, compose_J, ein, gram_trace, tensor_product_id, twist_J, wedge_lk, wedge_one

__all__ = ["Patch", "Overlap", "PSCBCertificate", "ConstructedCone", "CertificateError", "fundamental_a",
           "check_certificate", "volume_connection", "construct_total_space", "verify_construction",
           "weyl_target", "cone_chart", "R_RANGE", "THETA_RANGE", "frame_coefficients",
           "projected_connection", "recover_a", "overlap_agreement", "curvature_form_target"]

R_RANGE = (0.5, 2.0)
THETA_RANGE = (0.0, 2 * np.pi)


class CertificateError(ValueError):
    pass


@dataclass
class Patch:
    B: Field
    c: Field
    gamma2: Field
    name: str = ""


@dataclass
class Overlap:
    alpha: int
    beta: int
    f: Field  # scalar transition phase


@dataclass
class PSCBCertificate:
    base: CProjData
    patches: list
    overlaps: list = field(default_factory=list)
    mode: str = "dim>=4"  # or "dim=2"
    a: Field | None = None  # fundamental tensor, required in dim=2 mode
    density: Field | None = None  # volume density rho (Omega = rho dx^1..dx^2n); default 1
    name: str = ""
    params: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("dim>=4", "dim=2"):
            raise CertificateError(f"unknown mode {self.mode!r}")
        if self.mode == "dim=2" and self.a is None:
            raise CertificateError("dim=2 certificates must supply the fundamental tensor")
        if self.mode == "dim>=4" and self.base.n < 2:
            raise CertificateError("real dimension 2 needs the dim=2 certificate mode")
        if not self.patches:
            raise CertificateError("certificate needs at least one patch")

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def m(self) -> int:
        return 2 * self.base.n

    @property
    def chart(self) -> Chart:
        return self.base.chart

    @cached_property
    def bgram(self) -> Field:
        m = self.m
        return fmap(gram_trace, [self.patches[0].B], (m, m), 0, "Bgram")

    @cached_property
    def abar(self) -> Field:
        return fundamental_a(self)

    @cached_property
    def rho(self) -> Field:
        if self.density is not None:
            return self.density
        return constant_field(1.0, self.m, 0, "rho")


def fundamental_a(cert: PSCBCertificate) -> Field:
    """a = Bgram/(8(n+1)) - P/2 in dim >= 4; certificate input in dim 2."""
    if cert.mode == "dim=2":
        return cert.a
    n, m = cert.n, cert.m
    P = rho_tensor(cert.base)
    return fmap(lambda bg, p: bg * (1.0 / (8 * (n + 1))) - p * 0.5, [cert.bgram, P], (m, m), 0, "a")


def _twist(k, J):
    return twist_J(k, J, tol=None)


def weyl_target(B, J, n):
    """-1/4[B,B] - Bgram_J (x) J/(4(n+1)) + Bgram ^ Id/(8(n+1)) - Bgram_J ^ J/(8(n+1))."""
    m = 2 * n
    bg = gram_trace(B)
    bgJ = _twist(bg, J)
    out = bracket_AA(B) * -0.25 - tensor_product_id(bgJ, J) * (1.0 / (4 * (n + 1)))
    return out + wedge_lk(bg, np.eye(m)) * (1.0 / (8 * (n + 1))) - wedge_lk(bgJ, J) * (1.0 / (8 * (n + 1)))


def curvature_form_target(B, a, J):
    """-1/4[B,B] + 2a^a (x) Id - 2(a_J)^a (x) J + a ^ Id - a_J ^ J."""
    m = J.shape[-1]
    aJ = _twist(a, J)
    out = bracket_AA(B) * -0.25 + tensor_product_id(alt2(a), np.eye(m)) * 2.0 - tensor_product_id(alt2(aJ), J) * 2.0
    return out + wedge_lk(a, np.eye(m)) - wedge_lk(aJ, J)


def check_certificate(cert: PSCBCertificate, points, tol: float = 1e-8, stage: str = "check") -> VerificationReport:
    """One residual row per defining condition, for every patch and overlap."""
    rep = VerificationReport()
    m, n = cert.m, cert.n
    D, Jf = cert.base.D, cert.base.J
    J = Jf.at(points)
    I = np.eye(m)
    a = cert.abar
    av = a.at(points)
    aJ = np.einsum("...im,...mj->...ij", av, J)
    RD = curvature(D).at(points)
    bgrams = []
    many = len(cert.patches) > 1
    for idx, patch in enumerate(cert.patches):
        sfx = f"[{idx}]" if many else ""
        B = patch.B.at(points)
        c = patch.c.at(points)
        g2 = patch.gamma2
        rep.add(stage, f"(1) B sym{sfx}", "B symmetric", B - np.swapaxes(B, -1, -2), tol)
        BJ = np.einsum("...kim,...mj->...kij", B, J)
        JB = np.einsum("...km,...mij->...kij", J, B)
        rep.add(stage, f"(1) BJ+JB{sfx}", "B anti-commutes with J", BJ + JB, tol)
        rep.add(stage, f"(3) c sym{sfx}", "c symmetric", c - np.swapaxes(c, -1, -2), tol)
        Jc = np.einsum("...ai,...bj,...ab->...ij", J, J, c)
        rep.add(stage, f"(3) J*c+c{sfx}", "J*c = -c", Jc + c, tol)
        bgrams.append(gram_trace(B))
        if cert.mode == "dim>=4":
            W = cweyl(cert.base).at(points)
            rep.add(stage, f"(5) Weyl{sfx}", "W = -1/4[B,B] - Bgram_J(x)J/4(n+1) + ...", W - weyl_target(B, J, n), tol)
            label61 = "(6-1)"
        else:
            rep.add(stage, f"(6-1) R^D{sfx}", "R^D = -1/4[B,B] + 2a^a(x)Id - 2(a_J)^a(x)J + a^Id - a_J^J",
                    RD - curvature_form_target(B, av, J), tol)
            label61 = "(5)"
        dg2 = exterior_derivative(g2).at(points)
        rep.add(stage, f"{label61} dgamma2{sfx}", "d gamma2 = 2 (a_J)^a", dg2 - 2 * alt2(aJ), tol)
        da = ext_cov_derivative(D, a).at(points)
        cB = np.einsum("...xm,...myz->...xyz", c, B)  # c(X, B_Y Z)
        rep.add(stage, f"(6-2) d^D a{sfx}", "d^D a = -1/4(c(X,B_Y Z) - c(Y,B_X Z))",
                da + 0.25 * (cB - np.swapaxes(cB, -2, -3)), tol)
        dB = ext_cov_derivative(D, patch.B).at(points)
        g2v = g2.at(points)
        JBv = JB
        cJ = np.einsum("...im,...mj->...ij", c, J)
        rhs3 = -2 * wedge_one(g2v, JBv, 1, 3) + wedge_lk(c, I) + wedge_lk(cJ, J)
        rep.add(stage, f"(6-3) d^D B{sfx}", "d^D B = -2 gamma2^JB + c^Id + c_J^J", dB - rhs3, tol)
        aB = np.einsum("...xm,...myz->...xyz", av, B)
        dc = ext_cov_derivative(D, patch.c).at(points)
        lhs4 = aB - np.swapaxes(aB, -2, -3) + dc
        rep.add(stage, f"(6-4) a,B,c{sfx}", "a(X,B_Y Z) - a(Y,B_X Z) + d^D c = 2 gamma2^c_J",
                lhs4 - 2 * wedge_one(g2v, cJ, 0, 2), tol)
        target = cert.meta.get("curvature_form")
        if target is not None:
            rep.add(stage, f"curvature form{sfx}", target[0], dg2 - target[1].at(points), tol)
    for ov in cert.overlaps:
        pa, pb = cert.patches[ov.alpha], cert.patches[ov.beta]
        f = ov.f.at(points)[..., None, None]
        Ba, Bb = pa.B.at(points), pb.B.at(points)
        rot = np.cos(2 * f) * I - np.sin(2 * f) * J
        tag = f"[{ov.alpha}->{ov.beta}]"
        rep.add(stage, f"(2) overlap B{tag}", "B^b = e^{-2fJ} B^a", Bb - np.einsum("...km,...mij->...kij", rot, Ba), tol)
        ca, cb = pa.c.at(points), pb.c.at(points)
        caJ = np.einsum("...im,...mj->...ij", ca, J)
        cbJ = np.einsum("...im,...mj->...ij", cb, J)
        c2, s2 = np.cos(2 * f), np.sin(2 * f)
        res = np.stack([cb - (c2 * ca + s2 * caJ), cbJ - (c2 * caJ - s2 * ca)])
        rep.add(stage, f"(4) overlap c{tag}", "c^b + i c^b_J = e^{-2if}(c^a + i c^a_J)", res, tol)
        dgb = pb.gamma2.at(points) - pa.gamma2.at(points) - partial(ov.f).at(points)
        rep.add(stage, f"overlap gamma2{tag}", "gamma2^b = gamma2^a + df", dgb, tol)
    for idx in range(1, len(bgrams)):
        rep.add(stage, f"Bgram patch-independent[{idx}]", "Tr(B_Y B_Z) global", bgrams[idx] - bgrams[0], tol)
    return rep


def volume_connection(D: Connection, rho: Field, n: int):
    """For Omega = rho dx^1..dx^m: D Omega = l (x) Omega and gamma1 = -l/(2(n+1))."""
    m = D.dim

    def l_of(p, k):
        r1 = rho(p, k + 1)
        if np.any(r1.value == 0):
            raise CertificateError("volume form vanishes at a sample point")
        dlog = r1.deriv() * r1.trunc(k).recip()
        return dlog - ein("kki->i", D(p, k))

    l = Field(l_of, m, (m,), 0, "l")
    g1 = fmap(lambda v: v * (-1.0 / (2 * (n + 1))), [l], (m,), 0, "gamma1")
    return l, g1


def cone_chart(base: Chart) -> Chart:
    lo = np.concatenate([base.lo, [THETA_RANGE[0], R_RANGE[0]]])
    hi = np.concatenate([base.hi, [THETA_RANGE[1], R_RANGE[1]]])
    pred = None
    if base.predicate is not None:
        bp = base.predicate
        pred = lambda p: bp(p[..., :-2])  # noqa: E731
    return Chart(base.names + ("theta", "r"), lo, hi, pred, f"cone({base.name})")


@dataclass
class ConstructedCone:
    cert: PSCBCertificate
    patch: int
    chart: Chart
    J: Field
    D: Connection
    B: Field
    A: Field
    nabla: Connection
    xi: Field
    Z: Field
    E: Field  # frame: columns are the lifts of d_i, then xi, then Z
    F: Field  # inverse frame
    gamma1: Field
    gamma2: Field
    l: Field

    @cached_property
    def special(self) -> SpecialComplexData:
        return SpecialComplexData(self.chart, self.J, self.nabla)

    @cached_property
    def conical(self) -> ConicalData:
        return ConicalData(self.special, self.xi)

    @property
    def m(self) -> int:
        return self.cert.m

    def sample(self, count: int, seed: int) -> np.ndarray:
        return self.chart.sample(count, seed)


def _frame_jets(g1: Jet, g2: Jet, pts: np.ndarray, k: int, m: int):
    """E and F = E^{-1} as jets on the total chart."""
    M = m + 2
    x = seed_jets(pts, k)
    r = x[m + 1]
    zero = r * 0.0
    one = zero + 1.0
    cols = []
    for i in range(m):
        col = [one if a == i else zero for a in range(m)] + [-g2[i], -g1[i] * r]
        cols.append(jstack(col))
    cols.append(jstack([zero] * m + [zero, r]))  # xi = r d_r
    cols.append(jstack([zero] * m + [one, zero]))  # Z = d_theta
    E = jstack(cols, axis=1)
    rinv = r.recip()
    rows = []
    for i in range(m):
        rows.append(jstack([one if a == i else zero for a in range(M)]))
    rows.append(jstack([g1[i] for i in range(m)] + [zero, rinv]))  # xi coefficient
    rows.append(jstack([g2[i] for i in range(m)] + [one, zero]))  # Z coefficient
    F = jstack(rows, axis=0)
    return E, F


def construct_total_space(cert: PSCBCertificate, patch: int = 0) -> ConstructedCone:
    """Build J, D, B, A and nabla = D + 1/2 J A on the total chart of one patch."""
    m, n = cert.m, cert.n
    M = m + 2
    base_idx = list(range(m))
    chart = cone_chart(cert.chart)
    pt = cert.patches[patch]
    l, g1 = volume_connection(cert.base.D, cert.rho, n)
    up = lambda f: pullback_field(f, base_idx, M)  # noqa: E731
    G1, G2 = up(g1), up(pt.gamma2)
    Gbar, Jbar, Abar = up(cert.base.D), up(cert.base.J), up(cert.abar)
    Bbar, Cbar = up(pt.B), up(pt.c)

    def frames(p, k):
        return _frame_jets(G1(p, k), G2(p, k), p, k, m)

    Ef = Field(lambda p, k: frames(p, k)[0], M, (M, M), 1, "E")
    Ff = Field(lambda p, k: frames(p, k)[1], M, (M, M), 1, "F")
    H, XI, ZZ = slice(0, m), m, m + 1  # frame slots

    def frame_connection(p, k):
        G = Gbar(p, k)
        a = Abar(p, k)
        j = Jbar(p, k)
        aJ = ein("im,mj->ij", a, j)
        C = np.zeros((M, M, M))
        for i in range(m):
            C[i, i, XI] = 1.0
            C[i, XI, i] = 1.0
        C[XI, XI, XI] = 1.0
        C[XI, ZZ, ZZ] = -1.0
        C[ZZ, ZZ, XI] = 1.0
        C[ZZ, XI, ZZ] = 1.0
        out = Jet.constant(np.broadcast_to(C, p.shape[:-1] + C.shape).copy(), M, k, p.ndim - 1)
        parts = []
        for q in range(k + 1):
            arr = out.parts[q].copy()
            lead = (slice(None),) * (q + p.ndim - 1)
            arr[lead + (H, H, H)] += G.parts[q]
            arr[lead + (XI, H, H)] += a.parts[q]
            arr[lead + (ZZ, H, H)] -= aJ.parts[q]
            # D_X Z = D_Z X = J X on horizontal lifts
            arr[lead + (H, H, ZZ)] += j.parts[q]
            arr[lead + (H, ZZ, H)] += j.parts[q]
            parts.append(arr)
        return Jet(parts, M, p.ndim - 1)

    def gamma_D(p, k):
        F1 = Ff(p, k + 1)
        dF = F1.deriv()  # [g, b, a] = d_a F^g_b
        F0 = F1.trunc(k)
        E0 = Ef(p, k)
        C = frame_connection(p, k)
        inner = dF.transpose(0, 2, 1) + ein("au,bv,gab->guv", F0, F0, C)
        return ein("cg,gab->cab", E0, inner)

    D = Connection(gamma_D, M, "D")
    J_total = Field(lambda p, k: _to_coords_11(Ef(p, k), Ff(p, k), _jframe(Jbar(p, k), M, m)), M, (M, M), 1, "J")

    def B_frame(p, k):
        b = Bbar(p, k)
        c = Cbar(p, k)
        j = Jbar(p, k)
        cJ = ein("im,mj->ij", c, j)
        return _assemble_B(b, c, cJ, M, m)

    def B_coords(p, k):
        return _to_coords_12(Ef(p, k), Ff(p, k), B_frame(p, k))

    Bf = Field(B_coords, M, (M, M, M), 1, "B")

    def A_coords(p, k):
        th = seed_jets(p, k)[m]
        c2, s2 = (th * 2.0).cos(), (th * 2.0).sin()
        b = Bf(p, k)
        j = J_total(p, k)
        return b * c2 - compose_J(j, b) * s2

    Af = Field(A_coords, M, (M, M, M), 1, "A")
    nabla = Connection(fmap(lambda g, j, a: g + compose_J(j, a) * 0.5, [D, J_total, Af], (M, M, M), 1), M, "nabla")

    def xi_f(p, k):
        x = seed_jets(p, k)
        zero = x[0] * 0.0
        return jstack([zero] * (M - 1) + [x[m + 1]])

    def z_f(p, k):
        x = seed_jets(p, k)
        zero = x[0] * 0.0
        return jstack([zero] * m + [zero + 1.0, zero])

    return ConstructedCone(cert, patch, chart, J_total, D, Bf, Af, nabla, Field(xi_f, M, (M,), 1, "xi"),
                           Field(z_f, M, (M,), 1, "Z"), Ef, Ff, up(g1), G2, up(l))


def _jframe(jbar: Jet, M: int, m: int) -> Jet:
    parts = []
    lead0 = jbar.nb
    for q, jp in enumerate(jbar.parts):
        arr = np.zeros(jp.shape[:q + lead0] + (M, M))
        lead = (slice(None),) * (q + lead0)
        arr[lead + (slice(0, m), slice(0, m))] = jp
        if q == 0:
            arr[lead + (m + 1, m)] = 1.0  # J xi = Z
            arr[lead + (m, m + 1)] = -1.0  # J Z = -xi
        parts.append(arr)
    return Jet(parts, jbar.dim, jbar.nb)


def _assemble_B(b: Jet, c: Jet, cJ: Jet, M: int, m: int) -> Jet:
    parts = []
    for q in range(b.order + 1):
        bp = b.parts[q]
        lead = bp.shape[:bp.ndim - 3]
        arr = np.zeros(lead + (M, M, M))
        sl = (slice(None),) * len(lead)
        arr[sl + (slice(0, m), slice(0, m), slice(0, m))] = bp
        arr[sl + (m, slice(0, m), slice(0, m))] = c.parts[q]
        arr[sl + (m + 1, slice(0, m), slice(0, m))] = cJ.parts[q]
        parts.append(arr)
    return Jet(parts, b.dim, b.nb)


def _to_coords_11(E: Jet, F: Jet, T: Jet) -> Jet:
    return ein("ag,gb->ab", ein("ag,gd->ad", E, T), F)


def _to_coords_12(E: Jet, F: Jet, T: Jet) -> Jet:
    t = ein("cg,gab->cab", E, T)
    t = ein("cab,au->cub", t, F)
    return ein("cub,bv->cuv", t, F)



def frame_coefficients(cone: ConstructedCone) -> Field:
    """C[c, a, b]: component c of D_{e_a} e_b in the frame e = (lifts of d_i, xi, Z)."""
    M = cone.m + 2

    def ev(p, k):
        E1 = cone.E(p, k + 1)
        dE = E1.deriv()  # [mu, b, nu] = d_nu E^mu_b
        E = E1.trunc(k)
        t = ein("mbn,na->mab", dE, E) + ein("mnl,na,lb->mab", cone.D(p, k), E, E)
        return ein("cm,mab->cab", cone.F(p, k), t)

    return Field(ev, M, (M, M, M), 1, "C")


def projected_connection(cone: ConstructedCone, theta: float = 0.3, r: float = 1.0) -> Connection:
    """Base connection D^(omega): horizontal part of D on horizontal lifts, on the slice (theta, r)."""
    m = cone.m
    C = frame_coefficients(cone)
    Ch = Field(lambda p, k: C(p, k)[:m, :m, :m], m + 2, (m, m, m), 1, "C_hhh")
    return Connection.of(section_field(Ch, m, [theta, r]), "D^(omega)")


def recover_a(cone: ConstructedCone, points) -> tuple:
    """(xi part, Z part) of D_{X~} Y~ on coordinate lifts: expected (a, -a_J)."""
    m = cone.m
    C = frame_coefficients(cone).at(points)
    return C[..., m, :m, :m], C[..., m + 1, :m, :m]


def _slice_points(cone: ConstructedCone, points) -> np.ndarray:
    return np.asarray(points)[..., :cone.m]


def verify_construction(cone: ConstructedCone, points, tol: float = 1e-8, stage: str = "verify",
                        overlap_cones: Sequence[ConstructedCone] = ()) -> VerificationReport:
    """Post-construction identities on the total chart, one row each."""
    cert = cone.cert
    m, n = cert.m, cert.n
    M = m + 2
    pts = np.asarray(points, dtype=float)
    base_pts = _slice_points(cone, pts)
    rep = VerificationReport()
    Jb = cert.base.J.at(base_pts)
    a = cert.abar.at(base_pts)
    aJ = np.einsum("...im,...mj->...ij", a, Jb)
    patch = cert.patches[cone.patch]

    # recovery of the fundamental tensor and vanishing of the vertical-vertical parts
    C = frame_coefficients(cone).at(pts)
    H, V = slice(0, m), slice(m, M)
    rep.add(stage, "recovered a", "A^D_X~ Y~ = a(X,Y) xi - a_J(X,Y) J xi (xi part)", C[..., m, H, H] - a, tol)
    rep.add(stage, "recovered a_J", "A^D_X~ Y~ = a(X,Y) xi - a_J(X,Y) J xi (J xi part)", C[..., m + 1, H, H] + aJ, tol)
    rep.add(stage, "T^D", "horizontal part of D on vertical pairs vanishes", C[..., H, V, V], tol)
    rep.add(stage, "vertical part of D_V X~", "D_xi X~ and D_Z X~ are horizontal", C[..., V, V, H], tol)

    # projected connection, trace identity, canonical class
    Dw = projected_connection(cone)
    Gw = Dw.at(base_pts)
    Gbar = cert.base.D.at(base_pts)
    Rw = curvature(Dw).at(base_pts)
    B = patch.B.at(base_pts)
    bg = gram_trace(B)
    trace = np.einsum("...lijk,...kl->...ij", Rw, Jb)
    target = -0.5 * _twist(bg, Jb) + 4 * (n + 1) * alt2(aJ)
    rep.add(stage, "Tr R^(omega) J", "Tr R_{X,Y} o J = -1/2 Bgram_J + 4(n+1)(a_J)^a", trace - target, tol)
    c = patch.c.at(base_pts)
    da = ext_cov_derivative(Dw, cert.abar).at(base_pts)
    cB = np.einsum("...xm,...myz->...xyz", c, B)
    rep.add(stage, "d^(omega) a", "d^D a = -1/4(c(X,B_Y Z) - c(Y,B_X Z)) for the projected connection",
            da + 0.25 * (cB - np.swapaxes(cB, -2, -3)), tol)
    theta, res = relating_form(Gbar, Gw, Jb)
    rep.add(stage, "canonical class", "projected D is c-projectively related to the base connection", res, tol)
    rep.add(stage, "relating form", "least-squares theta (informational)", theta, tol, expect="info")
    dg2 = exterior_derivative(patch.gamma2).at(base_pts)
    rep.add(stage, "dgamma2 - 2(a_J)^a", "curvature of the circle connection", dg2 - 2 * alt2(aJ), tol)

    # the cone connection D and the tensor A
    D, A, J = cone.D, cone.A, cone.J
    Av = A.at(pts)
    rep.add(stage, "R^D + 1/4[A,A]", "R^D = -1/4[A,A]", curvature(D).at(pts) + 0.25 * bracket_AA(Av), tol)
    rep.add(stage, "d^D A", "A closed for D", ext_cov_derivative(D, A).at(pts), tol)
    rep.add(stage, "torsion(D)", "D torsion-free", torsion(D).at(pts), tol)
    rep.add(stage, "DJ", "D complex", covariant_derivative(D, J).at(pts), tol)
    rep.add(stage, "Nijenhuis(J)", "J integrable", nijenhuis(J).at(pts), tol)
    Jv = J.at(pts)
    rep.add(stage, "D xi - Id", "D xi = Id", covariant_derivative(D, cone.xi).at(pts) - np.eye(M), tol)
    rep.add(stage, "D Z - J", "D Z = J", covariant_derivative(D, cone.Z).at(pts) - Jv, tol)
    rep.add(stage, "L_xi J", "xi holomorphic", lie_derivative(cone.xi, J).at(pts), tol)
    rep.add(stage, "L_Z J", "Z holomorphic", lie_derivative(cone.Z, J).at(pts), tol)

    # B is projectable
    Bv = cone.B.at(pts)
    xi, Z = cone.xi.at(pts), cone.Z.at(pts)
    rep.add(stage, "L_xi B", "B projectable", lie_derivative(cone.xi, cone.B).at(pts), tol)
    rep.add(stage, "L_Z B", "B projectable", lie_derivative(cone.Z, cone.B).at(pts), tol)
    rep.add(stage, "B_xi", "B_xi = 0", np.einsum("...kij,...i->...kj", Bv, xi), tol)
    rep.add(stage, "B_Z", "B_Z = 0", np.einsum("...kij,...i->...kj", Bv, Z), tol)
    F = cone.F.at(pts)
    vert = np.einsum("...cm,...mij->...cij", F, Av)[..., V, :, :]
    horizontal = float(np.abs(c).max()) if c.size else 0.0
    rep.add(stage, "horizontal type", "A takes only horizontal values when c = 0", vert, tol,
            expect="zero" if horizontal <= tol else "info")

    rep.extend(special_check(cone.special, pts, tol, stage + ":special"))
    rep.extend(conical_check(cone.conical, pts, tol, stage + ":conical"))
    rep.extend(radial_identities(cone.conical, pts, tol, stage + ":radial"))

    for other in overlap_cones:
        rep.extend(overlap_agreement(cone, other, pts, tol, stage))
    return rep


def overlap_agreement(cone_a: ConstructedCone, cone_b: ConstructedCone, points, tol: float = 1e-8,
                      stage: str = "verify") -> VerificationReport:
    """A^alpha = A^beta under theta_beta = theta_alpha - f."""
    cert = cone_a.cert
    m = cert.m
    rep = VerificationReport()
    ov = next((o for o in cert.overlaps if o.alpha == cone_a.patch and o.beta == cone_b.patch), None)
    if ov is None:
        raise CertificateError("no overlap between the two patches")
    pts = np.asarray(points, dtype=float)
    base_pts = pts[..., :m]
    fj = ov.f(base_pts, 1)
    qb = pts.copy()
    qb[..., m] = pts[..., m] - fj.value
    Phi = np.broadcast_to(np.eye(m + 2), pts.shape[:-1] + (m + 2, m + 2)).copy()
    Phi[..., m, :m] = -fj.grad
    Phi_inv = np.linalg.inv(Phi)
    Ab = cone_b.A.at(qb)
    pulled = np.einsum("...ka,...abc,...bi,...cj->...kij", Phi_inv, Ab, Phi, Phi)
    rep.add(stage, f"A overlap[{cone_a.patch}->{cone_b.patch}]", "A^alpha = A^beta on overlaps",
            cone_a.A.at(pts) - pulled, tol)
    return rep
