"""The Kahler specialisation: base metric, cone metric, parallel Kahler form and the scalar curvature bound."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .fields import Field, covariant_derivative, curvature, exterior_derivative, ext_cov_derivative, fmap, \
    levi_civita, pullback_field, ricci
from .numerics import Jet, seed_jets
from .pscb import ConstructedCone, PSCBCertificate, curvature_form_target
from .report import VerificationReport
from .tensor import alt2, ein, gram_trace, wedge_one

__all__ = ["PSKCertificate", "build_cone_metric", "check_psk_certificate", "check_parallel_omega", "scalar_bound",
           "ScalarBound", "eta_form"]


@dataclass
class PSKCertificate:
    """A certificate together with a base metric g; the Kahler case has a = g and c = 0."""

    cert: PSCBCertificate
    g: Field | None = None

    def __post_init__(self):
        if self.g is None:
            self.g = self.cert.abar

    @property
    def n(self) -> int:
        return self.cert.n

    @property
    def J(self) -> Field:
        return self.cert.base.J

    @property
    def D(self):
        return self.cert.base.D

    def omega(self) -> Field:
        """Kahler form g_J(X, Y) = g(X, JY)."""
        m = self.cert.m
        return fmap(lambda g, j: ein("im,mj->ij", g, j), [self.g, self.J], (m, m), 0, "omega")


def _sym_residual(t):
    """Max deviation of a 3-index array from total symmetry."""
    perms = [(0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    ax = t.ndim - 3
    lead = tuple(range(ax))
    return max(float(np.abs(t - np.transpose(t, lead + tuple(ax + q for q in p))).max()) for p in perms)


def check_psk_certificate(psk: PSKCertificate, points, tol: float = 1e-8, stage: str = "psk",
                          seed: int = 0) -> VerificationReport:
    cert = psk.cert
    m = cert.m
    rep = VerificationReport()
    g = psk.g.at(points)
    J = psk.J.at(points)
    eig = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))
    lam = float(eig.min())
    rep.add_bool(stage, "g positive definite", "Kahler metric is definite (a = g)", lam > tol, lam, tol)
    rep.add(stage, "D g", "D is metric", covariant_derivative(psk.D, psk.g).at(points), tol)
    rep.add(stage, "J*g - g", "g is J-invariant", np.einsum("...ai,...bj,...ab->...ij", J, J, g) - g, tol)
    rep.add(stage, "d omega", "Kahler form closed", exterior_derivative(psk.omega(), 2).at(points), tol)
    rep.add(stage, "a - g", "fundamental tensor equals the metric", cert.abar.at(points) - g, tol)
    rng = np.random.default_rng(seed)
    R = curvature(psk.D).at(points)
    for idx, patch in enumerate(cert.patches):
        sfx = f"[{idx}]" if len(cert.patches) > 1 else ""
        B = patch.B.at(points)
        c = patch.c.at(points)
        rep.add(stage, f"c = 0{sfx}", "c vanishes in the Kahler case", c, tol)
        rep.add(stage, f"(1)' B sym{sfx}", "B symmetric", B - np.swapaxes(B, -1, -2), tol)
        BJ = np.einsum("...kim,...mj->...kij", B, J)
        JB = np.einsum("...km,...mij->...kij", J, B)
        rep.add(stage, f"(1)' BJ+JB{sfx}", "B anti-commutes with J", BJ + JB, tol)
        gB = np.einsum("...zk,...kxy->...xyz", g, B)  # g(B_X Y, Z)
        vec = rng.standard_normal((3, 8, m))
        trip = [np.einsum("...xyz,x,y,z->...", gB, *(vec[q[0], i], vec[q[1], i], vec[q[2], i]))
                for i in range(8) for q in [(0, 1, 2), (1, 2, 0), (2, 0, 1), (1, 0, 2)]]
        trip = np.asarray(trip).reshape(8, 4, -1)
        rep.add(stage, f"(1)' g(B_X Y,Z) symmetric{sfx}", "g(B_X Y, Z) totally symmetric",
                max(_sym_residual(gB), float(np.abs(trip - trip[:, :1]).max())), tol)
        rep.add(stage, f"(5)' R^D{sfx}", "R^D = -1/4[B,B] - 2 g_J (x) J + g ^ Id - g_J ^ J",
                R - curvature_form_target(B, g, J), tol)
        dg2 = exterior_derivative(patch.gamma2).at(points)
        gJ = np.einsum("...im,...mj->...ij", g, J)
        rep.add(stage, f"(6-1)' d gamma2 - 2 omega{sfx}", "d eta = 2 omega", dg2 - 2 * alt2(gJ), tol)
        dB = ext_cov_derivative(psk.D, patch.B).at(points)
        rep.add(stage, f"(6-3)' d^D B{sfx}", "d^D B = -2 gamma2 ^ JB",
                dB + 2 * wedge_one(patch.gamma2.at(points), JB, 1, 3), tol)
    for ov in cert.overlaps:
        pa, pb = cert.patches[ov.alpha], cert.patches[ov.beta]
        f = ov.f.at(points)[..., None, None]
        rot = np.cos(2 * f) * np.eye(m) - np.sin(2 * f) * J
        rep.add(stage, f"(2)' overlap B[{ov.alpha}->{ov.beta}]", "B^b = e^{-2fJ} B^a",
                pb.B.at(points) - np.einsum("...km,...mij->...kij", rot, pa.B.at(points)), tol)
    return rep


def eta_form(cone: ConstructedCone) -> Field:
    """Circle connection form eta = d theta + gamma2 on the total chart."""
    m = cone.m
    M = m + 2

    def ev(p, k):
        g2 = cone.gamma2(p, k)
        return _pad_vec(g2, M, m) + _unit(M, m, g2[0])

    return Field(ev, M, (M,), 0, "eta")


def build_cone_metric(cone: ConstructedCone, g: Field) -> Field:
    """g_cone = r^2 pi*g - r^2 eta (x) eta - r^2 omega1 (x) omega1 with omega1 = dr/r + gamma1.

    For a Riemannian volume density gamma1 vanishes and the last term is dr (x) dr.
    """
    m = cone.m
    M = m + 2
    gp = pullback_field(g, list(range(m)), M)
    eta = eta_form(cone)

    def ev(p, k):
        r = seed_jets(p, k)[m + 1]
        r2 = r * r
        base = gp(p, k)
        full = _pad_base(base, M, m)
        e = eta(p, k)
        w1 = _pad_vec(cone.gamma1(p, k), M, m) * r + _unit(M, m + 1, r)
        return full * r2 - ein("i,j->ij", e, e) * r2 - ein("i,j->ij", w1, w1)

    return Field(ev, M, (M, M), 0, "g_cone")


def _unit(M, idx, like):
    e = np.zeros(M)
    e[idx] = 1.0
    return like * 0.0 + e


def _pad_vec(v, M, m):
    parts = []
    for k, p in enumerate(v.parts):
        lead = p.shape[:k + v.nb]
        arr = np.zeros(lead + (M,))
        arr[(slice(None),) * len(lead) + (slice(0, m),)] = p
        parts.append(arr)
    return Jet(parts, v.dim, v.nb)


def _pad_base(base, M, m):
    parts = []
    for k, p in enumerate(base.parts):
        lead = p.shape[:k + base.nb]
        arr = np.zeros(lead + (M, M))
        arr[(slice(None),) * len(lead) + (slice(0, m), slice(0, m))] = p
        parts.append(arr)
    return Jet(parts, base.dim, base.nb)


def check_parallel_omega(cone: ConstructedCone, g: Field, points, tol: float = 1e-8,
                         stage: str = "psk:cone") -> VerificationReport:
    """Dg = 0, D = Levi-Civita(g), nabla omega = 0, D^g xi = Id and g-symmetry of A."""
    rep = VerificationReport()
    M = cone.m + 2
    G = build_cone_metric(cone, g)
    Gv = G.at(points)
    LC = levi_civita(G)
    rep.add(stage, "D g", "cone connection is metric", covariant_derivative(cone.D, G).at(points), tol)
    rep.add(stage, "D - LC(g)", "cone connection is the Levi-Civita connection", cone.D.at(points) - LC.at(points), tol)
    omega = fmap(lambda gg, j: ein("am,mb->ab", gg, j), [G, cone.J], (M, M), 0, "omega")
    rep.add(stage, "nabla omega", "Kahler form parallel for nabla", covariant_derivative(cone.nabla, omega).at(points),
            tol)
    rep.add(stage, "D^g xi - Id", "D^g xi = Id", covariant_derivative(LC, cone.xi).at(points) - np.eye(M), tol)
    A = cone.A.at(points)
    gA = np.einsum("...zk,...kxy->...xzy", Gv, A)  # g(A_X Y, Z) with slots (X, Z, Y)
    rep.add(stage, "A g-symmetric", "g(A_X Y, Z) = g(Y, A_X Z)", gA - np.swapaxes(gA, -1, -2), tol)
    xi = cone.xi.at(points)
    r = np.asarray(points)[..., -1]
    rep.add(stage, "g(xi,xi) + r^2", "g(xi, xi) = -r^2", np.einsum("...i,...ij,...j->...", xi, Gv, xi) + r ** 2, tol)
    sig = np.linalg.eigvalsh(Gv)
    neg = (sig < 0).sum(axis=-1)
    ok = bool(np.all(neg == 2))
    rep.add_bool(stage, "signature (2n,2)", "cone metric signature", ok, float(neg.max()) if neg.size else 0.0, 0.0)
    return rep


class ScalarBound(NamedTuple):
    value: float  # 1/4 Tr_g Bgram, minimised over the points
    residual: float  # max |1/4 Tr_g Bgram - (4n(n+1) + scal)|

    @property
    def sign(self) -> int:
        return int(np.sign(self.value))


def scalar_bound(psk: PSKCertificate, points) -> ScalarBound:
    """The identity 4n(n+1) + scal(g) = 1/4 Tr_g Bgram, evaluated at the points."""
    n = psk.n
    g = psk.g.at(points)
    ginv = np.linalg.inv(g)
    scal = np.einsum("...ij,...ij->...", ginv, ricci(psk.D).at(points))
    B = psk.cert.patches[0].B.at(points)
    tr = 0.25 * np.einsum("...ij,...ij->...", ginv, gram_trace(B))
    res = tr - (4 * n * (n + 1) + scal)
    return ScalarBound(float(tr.min()), float(np.abs(res).max()))
