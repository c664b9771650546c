"""Built-in examples: Hopf fibrations, flat and curved surface products,
single surfaces, and a holomorphic one-form family on C^{n+1}.

Complex coordinates are split as (x1, y1, x2, y2, ...) with the standard
complex structure J d_x = d_y.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cproj import CProjData
from .dsl import compile_scalar
from .fields import (Chart, Connection, Field, constant_field, covariant_derivative, exterior_derivative, fmap,
                     levi_civita, partial, ricci)
from .numerics import Jet, jinv, jstack, seed_jets
from .pscb import CertificateError, Overlap, Patch, PSCBCertificate
from .tensor import antisym_slots, ein, standard_J, twist_J

__all__ = ["SurfaceData", "surface_frame", "flat_plane", "hyperbolic_disk", "round_sphere", "surface_for_curvature",
           "fs_metric", "fs_potential", "make_hopf", "make_flat_c2", "make_surface_product", "make_surface_dim2",
           "OneFormFamily", "make_oneform_family", "gauge_patch", "GALLERY", "GalleryEntry", "build", "scalar_field",
           "tensor_field"]

SQRT_16_3 = 4.0 / np.sqrt(3.0)


# ---------------------------------------------------------------- helpers

def scalar_field(spec, dim: int, coords: Sequence[str], name: str = "") -> Field:
    """A scalar field from a number or a DSL expression string."""
    if isinstance(spec, (int, float, np.floating, np.integer)):
        return constant_field(float(spec), dim, 0, name)
    fn = compile_scalar(str(spec), coords)
    return Field(lambda p, k: fn(p, k), dim, (), 0, name or str(spec))


def tensor_field(components: dict, dim: int, shape, coords: Sequence[str], up: int = 0, name: str = "") -> Field:
    """Field whose components are given by {index tuple: number or DSL string}; missing entries are 0."""
    compiled = {}
    for idx, spec in components.items():
        idx = tuple(idx)
        if len(idx) != len(shape) or any(not 0 <= i < s for i, s in zip(idx, shape)):
            raise IndexError(f"component index {idx} out of range for shape {tuple(shape)}")
        if isinstance(spec, (int, float, np.floating, np.integer)):
            compiled[idx] = float(spec)
        else:
            compiled[idx] = compile_scalar(str(spec), coords)

    def ev(p, k):
        like = seed_jets(p, k)[0]

        def fill(prefix):
            if len(prefix) == len(shape):
                v = compiled.get(prefix, 0.0)
                return v(p, k) if callable(v) else v
            return [fill(prefix + (i,)) for i in range(shape[len(prefix)])]

        if not shape:
            v = fill(())
            return v if isinstance(v, Jet) else like * 0.0 + v
        return _stack_nested(fill(()), like, tuple(shape))

    return Field(ev, dim, tuple(shape), up, name)


def _stack_nested(rows, like: Jet, shape) -> Jet:
    """Assemble a jet tensor from nested lists whose leaves are scalar jets or 0."""
    if len(shape) == 1:
        return jstack([r if isinstance(r, Jet) else like * 0.0 + float(r) for r in rows])
    return jstack([_stack_nested(r, like, shape[1:]) for r in rows])


def _block(jet: Jet, shape, where) -> Jet:
    """Zero tensor of ``shape`` with ``jet`` written into the block ``where``."""
    parts = []
    for k, p in enumerate(jet.parts):
        lead = p.shape[:k + jet.nb]
        arr = np.zeros(lead + tuple(shape))
        arr[(slice(None),) * len(lead) + tuple(where)] = p
        parts.append(arr)
    return Jet(parts, jet.dim, jet.nb)


def _frame_to_coords(E: Jet, Bf: Jet) -> Jet:
    """(1,2) tensor with frame components Bf in the frame whose columns are E."""
    F = _inv_small(E)
    t = ein("cg,gab->cab", E, Bf)
    t = ein("cab,ai->cib", t, F)
    return ein("cib,bj->cij", t, F)


def _inv_small(E: Jet) -> Jet:
    return jinv(E)


def _minus_J_frame(v: Jet) -> Jet:
    """-J v in a frame (e0, Je0, e2, Je2, ...)."""
    m = v.shape[-1]
    comps = []
    for i in range(0, m, 2):
        comps += [v[..., i + 1], -v[..., i]]
    return jstack(comps, axis=-1)


def _b_from_generators(gens: dict, m: int, like: Jet) -> Jet:
    """Frame tensor B[c, a, b] from B_{e_a} for even a; odd slots by B_{Je} = -J B_e."""
    zero = like * 0.0
    slots = []
    for a in range(m):
        if a % 2 == 0:
            cols = gens.get(a)
            if cols is None:
                cols = [[zero] * m for _ in range(m)]
            mat = jstack([jstack(list(col)) for col in cols], axis=1)  # [c, b]
        else:
            prev = slots[a - 1]
            mat = jstack([_minus_J_frame(prev[:, b]) for b in range(m)], axis=1)
        slots.append(mat)
    return jstack(slots, axis=1)  # [c, a, b]


def _rot_form(x: Jet, y: Jet) -> Jet:
    """(x dy - y dx)/(x^2 + y^2) as a jet of a one-form (order one lower)."""
    k = x.order - 1
    num = x.trunc(k) * y.deriv() - y.trunc(k) * x.deriv()
    return num * (x.trunc(k) * x.trunc(k) + y.trunc(k) * y.trunc(k)).recip()


# ---------------------------------------------------------------- surfaces

@dataclass
class SurfaceData:
    """A complex surface with torsion-free complex connection and frame data.

    ``rho`` is the density of the parallel area form Omega = rho dx^dy;
    ``u`` is the unit frame vector (Omega(u, Ju) = 1) and ``theta`` the
    connection form with D u = theta (x) Ju.
    """

    chart: Chart
    J: Field
    D: Connection
    rho: Field
    g: Field
    u: Field
    theta: Field
    curvature: float
    seed: str = "d_x"
    name: str = ""

    @property
    def ric_uu(self) -> float:
        return self.curvature

    def Ju(self) -> Field:
        return fmap(lambda j, v: ein("ab,b->a", j, v), [self.J, self.u], (2,), 1, "Ju")

    def omega(self) -> Field:
        eps = np.array([[0.0, 1.0], [-1.0, 0.0]])
        return fmap(lambda r: r * eps, [self.rho], (2, 2), 0, "Omega")

    def residuals(self, points) -> dict:
        """Frame and structure-equation residuals at the points."""
        Ric = ricci(self.D)
        J = self.J.at(points)
        ric = Ric.at(points)
        u = self.u.at(points)
        ju = np.einsum("...ab,...b->...a", J, u)
        om = self.omega().at(points)
        ric_uu = np.einsum("...a,...ab,...b->...", u, ric, u)
        dth = exterior_derivative(self.theta).at(points)
        return {
            "Omega(u,Ju)-1": float(np.abs(np.einsum("...a,...ab,...b->...", u, om, ju) - 1).max()),
            "Ric(u,Ju)": float(np.abs(np.einsum("...a,...ab,...b->...", u, ric, ju)).max()),
            "Ric(u,u)-Ric(Ju,Ju)": float(np.abs(ric_uu - np.einsum("...a,...ab,...b->...", ju, ric, ju)).max()),
            "dtheta+Ric(u,u)Omega": float(np.abs(dth + ric_uu[..., None, None] * om).max()),
            "D Ric": float(np.abs(covariant_derivative(self.D, Ric).at(points)).max()),
            "D Omega": float(np.abs(covariant_derivative(self.D, self.omega()).at(points)).max()),
        }


def surface_frame(chart: Chart, J: Field, D: Connection, rho: Field, seed: Field, curvature: float,
                  name: str = "", seed_name: str = "d_x", check_points: int = 8, tol: float = 1e-8) -> SurfaceData:
    """Unit frame u = seed/|seed| for g(X, Y) = Omega(X, JY), and theta(X) = g(D_X u, Ju)."""

    def g_of(r, j):
        eps = np.array([[0.0, 1.0], [-1.0, 0.0]])
        return ein("am,mb->ab", r * eps, j)  # Omega(X, J Y)

    g = fmap(g_of, [rho, J], (2, 2), 0, "g_Omega")

    def u_of(p, k):
        s = seed(p, k)
        gv = g(p, k)
        nrm = ein("a,ab,b->", s, gv, s)
        return s * nrm.sqrt().recip()

    u = Field(u_of, 2, (2,), 1, "u")
    Du = covariant_derivative(D, u)  # [a, X]

    def theta_of(p, k):
        du = Du(p, k)
        uv = u(p, k)
        jv = ein("ab,b->a", J(p, k), uv)
        return ein("ax,ab,b->x", du, g(p, k), jv)

    theta = Field(theta_of, 2, (2,), 0, "theta")
    out = SurfaceData(chart, J, D, rho, g, u, theta, float(curvature), seed_name, name)
    pts = chart.sample(check_points, 7)
    res = out.residuals(pts)
    if res["D Omega"] > tol:
        raise CertificateError(f"area form is not parallel on {name!r} (residual {res['D Omega']:.2e})")
    if res["D Ric"] > tol:
        raise CertificateError(f"Ricci tensor is not parallel on {name!r} (residual {res['D Ric']:.2e})")
    return out


def _conformal_surface(phi: Callable[[Jet, Jet], Jet], chart: Chart, curvature: float, name: str) -> SurfaceData:
    """Metric e^{2 phi}(dx^2 + dy^2) with its Levi-Civita connection."""
    J = constant_field(standard_J(2), 2, 1, "J")

    def gamma(p, k):
        x = seed_jets(p, k + 1)
        f = phi(x[0], x[1])
        d = f.deriv()  # [i]
        I = np.eye(2)
        return ein("ki,j->kij", I, d) + ein("kj,i->kij", I, d) - ein("ij,k->kij", I, d)

    D = Connection(gamma, 2, f"LC[{name}]")
    rho = Field(lambda p, k: (phi(*_xy(p, k)) * 2.0).exp(), 2, (), 0, "rho")
    seed = constant_field([1.0, 0.0], 2, 1, "d_x")
    return surface_frame(chart, J, D, rho, seed, curvature, name)


def _xy(p, k):
    x = seed_jets(p, k)
    return x[0], x[1]


def flat_plane(half: float = 1.0) -> SurfaceData:
    chart = Chart(("x", "y"), [-half, -half], [half, half], name="C")
    return _conformal_surface(lambda x, y: x * 0.0, chart, 0.0, "C")


def hyperbolic_disk(K: float = -4.0, radius: float = 0.5) -> SurfaceData:
    """Unit disk with metric 4|dz|^2/(|K|(1-|z|^2)^2), Gaussian curvature K < 0."""
    if K >= 0:
        raise ValueError("hyperbolic disk needs negative curvature")
    c = 0.5 * np.log(4.0 / abs(K))
    chart = Chart(("x", "y"), [-radius, -radius], [radius, radius], name=f"CH1({K:g})")
    return _conformal_surface(lambda x, y: (1.0 - x * x - y * y).log() * -1.0 + c, chart, K, f"CH1({K:g})")


def round_sphere(K: float = 4.0, half: float = 1.0) -> SurfaceData:
    """Affine chart of the sphere with metric 4|dz|^2/(K(1+|z|^2)^2), curvature K > 0."""
    if K <= 0:
        raise ValueError("sphere needs positive curvature")
    c = 0.5 * np.log(4.0 / K)
    chart = Chart(("x", "y"), [-half, -half], [half, half], name=f"CP1({K:g})")
    return _conformal_surface(lambda x, y: (1.0 + x * x + y * y).log() * -1.0 + c, chart, K, f"CP1({K:g})")


def surface_for_curvature(K: float) -> SurfaceData:
    if K < 0:
        return hyperbolic_disk(K)
    if K > 0:
        return round_sphere(K)
    return flat_plane()


# ---------------------------------------------------------------- Fubini-Study

def _fs_q(x: Jet, n: int) -> Jet:
    q = x[0] * 0.0 + 1.0
    for a in range(2 * n):
        q = q + x[a] * x[a]
    return q


def fs_metric(n: int) -> Field:
    """Fubini-Study metric on the affine chart C^n (holomorphic sectional curvature 4)."""
    m = 2 * n

    def ev(p, k):
        x = seed_jets(p, k)
        inv = _fs_q(x, n).recip()
        inv2 = inv * inv
        rows = [[None] * m for _ in range(m)]
        for j in range(n):
            xj, yj = x[2 * j], x[2 * j + 1]
            for l in range(n):
                xl, yl = x[2 * l], x[2 * l + 1]
                # h_{j lbar} = delta/q - conj(z_j) z_l / q^2
                re = (xj * xl + yj * yl) * inv2 * -1.0
                im = (xj * yl - yj * xl) * inv2 * -1.0
                if j == l:
                    re = re + inv
                rows[2 * j][2 * l] = re
                rows[2 * j][2 * l + 1] = im
                rows[2 * j + 1][2 * l] = im * -1.0
                rows[2 * j + 1][2 * l + 1] = re
        return _stack_nested(rows, x[0], (m, m))

    return Field(ev, m, (m, m), 0, f"g_FS{n}")


def fs_potential(n: int) -> Field:
    """Kahler potential log(1 + |z|^2)."""
    return Field(lambda p, k: _fs_q(seed_jets(p, k), n).log(), 2 * n, (), 0, "K_FS")


def _fs_density(n: int) -> Field:
    # sqrt det g_FS = (1 + |z|^2)^{-(n+1)}
    return Field(lambda p, k: _fs_q(seed_jets(p, k), n) ** (-(n + 1)), 2 * n, (), 0, "rho_FS")


def _complex_names(n: int, first: int = 1) -> tuple:
    out = []
    for j in range(first, first + n):
        out += [f"x{j}", f"y{j}"]
    return tuple(out)


def gauge_patch(patch: Patch, f: Field, J: Field, name: str = "") -> Patch:
    """Patch data after the fibre coordinate change theta' = theta - f."""
    m = J.dim

    def B_of(p, k):
        fv = f(p, k)
        j = J(p, k)
        b = patch.B(p, k)
        c2, s2 = (fv * 2.0).cos(), (fv * 2.0).sin()
        return b * c2 - ein("km,mij->kij", j, b) * s2

    def c_of(p, k):
        fv = f(p, k)
        j = J(p, k)
        c = patch.c(p, k)
        c2, s2 = (fv * 2.0).cos(), (fv * 2.0).sin()
        return c * c2 + ein("im,mj->ij", c, j) * s2

    df = partial(f)
    g2 = fmap(lambda g, d: g + d, [patch.gamma2, df], (m,), 0, "gamma2'")
    return Patch(Field(B_of, m, (m, m, m), 1, "B'"), Field(c_of, m, (m, m), 0, "c'"), g2, name)


# ---------------------------------------------------------------- certificates

def make_hopf(n: int = 2, gauge: str | None = "x1*y1/2 + sin(x1)/3") -> PSCBCertificate:
    """CP^n with the Fubini-Study metric: B = 0, c = 0, a = -g, gamma2 = -1/2 dK o J.

    n = 1 yields a dim-2 certificate with the fundamental tensor supplied.
    A second patch related by the gauge phase ``gauge`` exercises the overlap rows.
    """
    if n < 1:
        raise CertificateError("n must be at least 1")
    m = 2 * n
    names = _complex_names(n)
    chart = Chart(names, -np.ones(m), np.ones(m), name=f"CP{n}")
    J = constant_field(standard_J(m), m, 1, "J")
    g = fs_metric(n)
    D = levi_civita(g)
    base = CProjData(chart, J, D, n)
    pot = fs_potential(n)
    Jm = standard_J(m)

    def g2_of(p, k):
        dK = pot(p, k + 1).deriv()
        return ein("b,ba->a", dK, Jm) * -0.5

    gamma2 = Field(g2_of, m, (m,), 0, "gamma2")
    zero_B = constant_field(np.zeros((m, m, m)), m, 1, "B")
    zero_c = constant_field(np.zeros((m, m)), m, 0, "c")
    patches = [Patch(zero_B, zero_c, gamma2, "U0")]
    overlaps = []
    if gauge:
        f = scalar_field(gauge, m, names, "f01")
        patches.append(gauge_patch(patches[0], f, J, "U1"))
        overlaps.append(Overlap(0, 1, f))
    a = g.scale(-1.0) if n == 1 else None
    mode = "dim=2" if n == 1 else "dim>=4"
    meta = {"metric": g}
    return PSCBCertificate(base, patches, overlaps, mode, a, _fs_density(n), f"hopf(n={n})", {"n": n}, meta)


def _product_base(S1: SurfaceData, S2: SurfaceData):
    chart = S1.chart.product(S2.chart, f"{S1.name}x{S2.name}")
    chart = Chart(("x1", "y1", "x2", "y2"), chart.lo, chart.hi, chart.predicate, chart.name)
    J = constant_field(standard_J(4), 4, 1, "J")

    def gamma(p, k):
        g1 = S1.D(p[..., :2], k).embed(4, [0, 1])
        g2 = S2.D(p[..., 2:], k).embed(4, [2, 3])
        return _block(g1, (4, 4, 4), (slice(0, 2),) * 3) + _block(g2, (4, 4, 4), (slice(2, 4),) * 3)

    D = Connection(gamma, 4, "D1+D2")
    rho = Field(lambda p, k: S1.rho(p[..., :2], k).embed(4, [0, 1]) * S2.rho(p[..., 2:], k).embed(4, [2, 3]),
                4, (), 0, "rho")
    return chart, J, D, rho


def _lift(S: SurfaceData, F: Field, pos: Sequence[int]):
    """Evaluate a surface field inside the product at the coordinates ``pos``."""
    def ev(p, k):
        return F(p[..., list(pos)], k).embed(4, pos)
    return ev


def _product_certificate(S1: SurfaceData, S2: SurfaceData, a_f: Field, b_f: Field, s_f: Field, t_f: Field,
                         name: str, params: dict, target_curv: bool = True) -> PSCBCertificate:
    chart, J, D, rho = _product_base(S1, S2)
    base = CProjData(chart, J, D, 2)
    u1, u2 = _lift(S1, S1.u, [0, 1]), _lift(S2, S2.u, [2, 3])
    th1, th2 = _lift(S1, S1.theta, [0, 1]), _lift(S2, S2.theta, [2, 3])
    J2 = standard_J(2)

    def frame(p, k):
        a, b = u1(p, k), u2(p, k)
        ja, jb = ein("ab,b->a", J2, a), ein("ab,b->a", J2, b)
        cols = [_block(a, (4,), (slice(0, 2),)), _block(ja, (4,), (slice(0, 2),)),
                _block(b, (4,), (slice(2, 4),)), _block(jb, (4,), (slice(2, 4),))]
        return jstack(cols, axis=1)

    def B_of(p, k):
        av, bv, sv, tv = a_f(p, k), b_f(p, k), s_f(p, k), t_f(p, k)
        z = av * 0.0
        gens = {
            0: [[z, z, av, bv], [z, z, bv, -av], [sv, tv, z, z], [tv, -sv, z, z]],
            2: [[sv, tv, z, z], [tv, -sv, z, z], [z, z, z, z], [z, z, z, z]],
        }
        Bf = _b_from_generators(gens, 4, av)
        return _frame_to_coords(frame(p, k), Bf)

    def g2_of(p, k):
        out = _block(th1(p, k), (4,), (slice(0, 2),)) * -1.0 - _block(th2(p, k), (4,), (slice(2, 4),)) * 0.5
        sv, tv = s_f(p, k + 1), t_f(p, k + 1)
        if float(np.abs(sv.value).max() + np.abs(tv.value).max()) > 0:
            return out - _rot_form(sv, tv) * 0.5
        av, bv = a_f(p, k + 1), b_f(p, k + 1)
        if float(np.abs(av.value).max() + np.abs(bv.value).max()) > 0:
            return out - _rot_form(av, bv) * 0.5
        return out

    B = Field(B_of, 4, (4, 4, 4), 1, "B")
    c = constant_field(np.zeros((4, 4)), 4, 0, "c")
    gamma2 = Field(g2_of, 4, (4,), 0, "gamma2")
    meta = {"factors": (S1, S2)}
    if target_curv:
        K1, K2 = S1.curvature, S2.curvature

        def curv(p, k):
            r1 = S1.rho(p[..., :2], k).embed(4, [0, 1])
            r2 = S2.rho(p[..., 2:], k).embed(4, [2, 3])
            eps = np.array([[0.0, 1.0], [-1.0, 0.0]])
            return _block(r1 * (K1 * eps), (4, 4), (slice(0, 2), slice(0, 2))) + \
                _block(r2 * (0.5 * K2 * eps), (4, 4), (slice(2, 4), slice(2, 4)))

        meta["curvature_form"] = ("d gamma = Ric(u,u) Omega + 1/2 Ric'(u',u') Omega'", Field(curv, 4, (4, 4), 0))
    return PSCBCertificate(base, [Patch(B, c, gamma2, "U0")], [], "dim>=4", None, rho, name, params, meta)


def make_flat_c2(a="cos(x1)", b="sin(x1)", check_points: int = 16, gauge: str | None = "x1*y2/2") -> PSCBCertificate:
    """C x C with B_u u = a u' + b J'u' (s = t = 0), a^2 + b^2 a nonzero constant."""
    names = ("x1", "y1", "x2", "y2")
    a_f, b_f = scalar_field(a, 4, names, "a"), scalar_field(b, 4, names, "b")
    S1, S2 = flat_plane(), flat_plane()
    pts = S1.chart.product(S2.chart).sample(check_points, 11)
    nrm = a_f(pts, 1) * a_f(pts, 1) + b_f(pts, 1) * b_f(pts, 1)
    if float(np.abs(nrm.value).min()) < 1e-12:
        raise CertificateError("a^2 + b^2 must be nonzero")
    if float(np.abs(nrm.value - nrm.value.mean()).max()) > 1e-10 or float(np.abs(nrm.grad).max()) > 1e-10:
        raise CertificateError("a^2 + b^2 must be constant")
    zero = constant_field(0.0, 4, 0, "0")
    cert = _product_certificate(S1, S2, a_f, b_f, zero, zero, "flat_c2", {"a": str(a), "b": str(b)})
    cert.meta["curvature_form"] = ("d gamma = 0", constant_field(np.zeros((4, 4)), 4, 0))
    if gauge:
        f = scalar_field(gauge, 4, names, "f01")
        cert.patches.append(gauge_patch(cert.patches[0], f, cert.base.J, "U1"))
        cert.overlaps.append(Overlap(0, 1, f))
    return cert


def make_surface_product(k: float = 1.0, factors: tuple | None = None, phase="0") -> PSCBCertificate:
    """N x N' with s^2 + t^2 = -Ric'(u',u'), a = k s, b = k t and k = 2 Ric(u,u)/Ric'(u',u').

    Without explicit factors the representative pair is K' = -4 and K = -2k.
    ``phase`` is a DSL function phi with (s, t) = sigma (cos phi, sin phi).
    """
    if factors is None:
        S2 = hyperbolic_disk(-4.0)
        S1 = surface_for_curvature(-2.0 * k)
    else:
        S1, S2 = factors
    K1, K2 = S1.curvature, S2.curvature
    if not K2 < 0:
        raise CertificateError("the second factor needs negative curvature")
    if abs(2.0 * K1 / K2 - k) > 1e-12:
        raise CertificateError(f"k = {k} does not match the factor curvatures (2K/K' = {2 * K1 / K2})")
    names = ("x1", "y1", "x2", "y2")
    sigma = float(np.sqrt(-K2))
    ph = scalar_field(phase, 4, names, "phi")
    s_f = fmap(lambda v: v.cos() * sigma, [ph], (), 0, "s")
    t_f = fmap(lambda v: v.sin() * sigma, [ph], (), 0, "t")
    a_f, b_f = s_f.scale(k), t_f.scale(k)
    return _product_certificate(S1, S2, a_f, b_f, s_f, t_f, f"product(k={k:g})", {"k": k, "phase": str(phase)})


def make_surface_dim2(delta: int = 1, s=SQRT_16_3, t=0.0, check_points: int = 16) -> PSCBCertificate:
    """Surface certificate with a = delta Omega(., J.) and B_u u = s u + t Ju.

    Admissible cases: delta = 0 with s = t = 0 (flat plane); delta = +-1 with
    s = t = 0 (curvature -4 delta); delta = 1 with s^2 + t^2 = 16/3 (curvature -4/3).
    """
    if delta not in (-1, 0, 1):
        raise CertificateError("delta must be -1, 0 or 1")
    names = ("x1", "y1")
    s_f, t_f = scalar_field(s, 2, names, "s"), scalar_field(t, 2, names, "t")
    probe = Chart(names, [-0.5, -0.5], [0.5, 0.5]).sample(check_points, 13)
    sv, tv = s_f(probe, 1), t_f(probe, 1)
    nrm = sv * sv + tv * tv
    ss = float(nrm.value.max())
    if float(np.abs(nrm.value - nrm.value.mean()).max()) > 1e-12 or float(np.abs(nrm.grad).max()) > 1e-12:
        raise CertificateError("s^2 + t^2 must be constant")
    if delta == 0:
        if ss != 0.0:
            raise CertificateError("delta = 0 forces s = t = 0: a nonzero B would need a flat connection, "
                                   "which in turn forces B = 0, so this case does not occur")
        S = flat_plane(0.5)
        kind = "flat"
    elif ss == 0.0:
        S = surface_for_curvature(-4.0 * delta)
        kind = "B=0"
    else:
        if delta != 1:
            raise CertificateError("a nonzero B requires delta = 1 (s^2 + t^2 = 16 delta/3 > 0)")
        if abs(ss - 16.0 / 3.0) >= 1e-12:
            raise CertificateError(f"s^2 + t^2 must equal 16/3 (got {ss!r})")
        S = hyperbolic_disk(-4.0 / 3.0)
        kind = "16/3"
    chart = Chart(names, S.chart.lo, S.chart.hi, S.chart.predicate, S.name)
    J, D = S.J, S.D
    base = CProjData(chart, J, D, 1)
    J2 = standard_J(2)

    def B_of(p, k):
        sv, tv = s_f(p, k), t_f(p, k)
        u = S.u(p, k)
        frame = jstack([u, ein("ab,b->a", J2, u)], axis=1)
        Bf = _b_from_generators({0: [[sv, tv], [tv, -sv]]}, 2, sv)
        return _frame_to_coords(frame, Bf)

    def g2_of(p, k):
        th = S.theta(p, k)
        if kind == "16/3":
            return th * -1.5 - _rot_form(s_f(p, k + 1), t_f(p, k + 1)) * 0.5
        if kind == "B=0":
            return th * -0.5
        return th * 0.0

    B = Field(B_of, 2, (2, 2, 2), 1, "B")
    c = constant_field(np.zeros((2, 2)), 2, 0, "c")
    gamma2 = Field(g2_of, 2, (2,), 0, "gamma2")
    a = S.g.scale(float(delta))
    Ric = ricci(D)
    factor = {"flat": 0.0, "B=0": -0.5, "16/3": -1.5}[kind]
    label = {"flat": "d gamma = 0", "B=0": "d gamma = -1/2 Ric_J", "16/3": "d gamma = -3/2 Ric_J"}[kind]
    target = fmap(lambda r, j: twist_J(r, j, tol=None) * factor, [Ric, J], (2, 2), 0, "curvature form")
    meta = {"curvature_form": (label, target), "surface": S, "case": kind}
    return PSCBCertificate(base, [Patch(B, c, gamma2, "U0")], [], "dim=2", a, S.rho, f"surface2(delta={delta})",
                           {"delta": delta, "s": str(s), "t": str(t)}, meta)


# ---------------------------------------------------------------- one-form family

def _cmul(a, b):
    return a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]


def _cdiv(a, b):
    d = (b[0] * b[0] + b[1] * b[1]).recip()
    return (a[0] * b[0] + a[1] * b[1]) * d, (a[1] * b[0] - a[0] * b[1]) * d


def _cpow_multi(ws, exps, like):
    out = (like * 0.0 + 1.0, like * 0.0)
    for w, e in zip(ws, exps):
        if e < 0:
            raise ValueError("negative exponent")
        for _ in range(e):
            out = _cmul(out, w)
    return out


@dataclass
class OneFormFamily:
    """Conical special complex structure on C^{n+1} from g = -i z_1^{l_1}..z_n^{l_n}/z_0^{l-1}.

    Coordinates are (u0, v0, ..., un, vn) with z_i = u_i + i v_i.  Only the
    tensor A = nabla J is provided, in the block form with rows (u0, v0).
    """

    l: tuple
    chart: Chart
    J: Field
    A: Field
    name: str = ""

    @property
    def n(self) -> int:
        return len(self.l)

    @property
    def dim(self) -> int:
        return 2 * self.n + 2

    def g_parts(self, points, order: int = 0):
        """Lists (Re g_i, Im g_i), i = 0..n, as scalar jets."""
        return _g_parts(self.l, np.asarray(points, dtype=float), order)

    def block_triple(self, i: int, points) -> np.ndarray:
        """The 2x2 matrix of three-forms A_0 ^ A_i ^ A_i (unnormalised wedge), shape batch + (2, 2, m, m, m)."""
        re, im = self.g_parts(points, 1)
        blocks = []
        for q in (0, i):
            dr, di = re[q].grad, im[q].grad
            blocks.append(np.stack([np.stack([-dr, di], -2), np.stack([di, dr], -2)], -3))
        A0, Ai = blocks
        t = np.einsum("...abx,...bcy,...cdz->...adxyz", A0, Ai, Ai)
        m = self.dim
        flat = t.reshape(t.shape[:-5] + (4, m, m, m))
        out = np.zeros_like(flat)
        for e in range(4):
            out[..., e, :, :, :] = antisym_slots(flat[..., e, :, :, :], [0, 1, 2], 3) * 6.0
        return out.reshape(t.shape)

    def im_g0(self, points) -> np.ndarray:
        return self.g_parts(points, 0)[1][0].value


def _g_parts(l, p, k):
    n = len(l)
    L = sum(l)
    x = seed_jets(p, k)
    z0 = (x[0], x[1])
    ws = [_cdiv((x[2 * i + 2], x[2 * i + 3]), z0) for i in range(n)]
    wL = _cpow_multi(ws, list(l), x[0])
    re = [wL[1] * -(L - 1.0)]  # g_0 = i (l-1) w^L
    im = [wL[0] * (L - 1.0)]
    for i in range(n):
        if l[i] == 0:
            re.append(x[0] * 0.0)
            im.append(x[0] * 0.0)
            continue
        e = list(l)
        e[i] -= 1
        wi = _cpow_multi(ws, e, x[0])  # g_i = -i l_i w^{L - e_i}
        re.append(wi[1] * float(l[i]))
        im.append(wi[0] * -float(l[i]))
    return re, im


def make_oneform_family(l: Sequence[int] = (2, 1)) -> OneFormFamily:
    l = tuple(int(v) for v in l)
    if any(v < 0 for v in l) or sum(l) <= 1:
        raise ValueError("exponents must be non-negative with sum l > 1")
    n = len(l)
    m = 2 * n + 2
    names = []
    for i in range(n + 1):
        names += [f"u{i}", f"v{i}"]
    L = sum(l)

    def valid(p):
        z = p[..., 0::2] + 1j * p[..., 1::2]
        w = z[..., 1:] / z[..., :1]
        img0 = (L - 1) * np.real(np.prod(w ** np.asarray(l), axis=-1))
        return (np.abs(z[..., 0]) > 0.3) & (np.abs(img0) > 0.1)

    lo = [0.7, -0.3] + [0.5, -0.3] * n
    hi = [1.3, 0.3] + [1.5, 0.3] * n
    chart = Chart(names, lo, hi, valid, f"oneform{l}")
    J = constant_field(standard_J(m), m, 1, "J")

    def A_of(p, k):
        re, im = _g_parts(l, p, k + 1)
        inv = im[0].trunc(k).recip()
        forms = []
        for i in range(n + 1):
            dr, di = re[i].deriv(), im[i].deriv()
            forms.append((dr, di))
        row_u, row_v = [], []
        for i in range(n + 1):
            dr, di = forms[i]
            row_u += [dr * -1.0, di]  # columns u_i, v_i
            row_v += [di, dr]
        rows = [jstack(row_u, axis=1), jstack(row_v, axis=1)] + [inv.zeros_like((m, m))] * (m - 2)
        return jstack(rows, axis=0) * inv

    A = Field(A_of, m, (m, m, m), 1, "A")
    return OneFormFamily(l, chart, J, A, f"oneform(l={','.join(map(str, l))})")


# ---------------------------------------------------------------- registry

@dataclass(frozen=True)
class GalleryEntry:
    name: str
    params: dict
    anchor: str
    factory: Callable = field(compare=False, repr=False)


def _parse_l(v):
    if isinstance(v, str):
        return tuple(int(s) for s in v.split(","))
    return tuple(v)


GALLERY = {
    "hopf": GalleryEntry("hopf", {"n": "int >= 1 (default 2)"}, "Hopf fibration over CP^n, a = -g, B = 0",
                         lambda n=2, **_: make_hopf(int(n))),
    "flat_c2": GalleryEntry("flat_c2", {"a": "DSL (default cos(x1))", "b": "DSL (default sin(x1))"},
                            "flat C^2 with B != 0 and Bgram = 0",
                            lambda a="cos(x1)", b="sin(x1)", **_: make_flat_c2(a, b)),
    "product": GalleryEntry("product", {"k": "real (default 1)", "phase": "DSL (default 0)"},
                            "surface product N x N' with k = 2Ric(u,u)/Ric'(u',u')",
                            lambda k=1.0, phase="0", **_: make_surface_product(float(k), None, phase)),
    "surface2": GalleryEntry("surface2", {"delta": "-1, 0 or 1 (default 1)", "s": "DSL", "t": "DSL"},
                             "surface with a = delta Omega(., J.) and B_u u = s u + t Ju",
                             lambda delta=1, s=None, t=None, **_: _surface2(int(delta), s, t)),
    "oneform": GalleryEntry("oneform", {"l": "comma separated exponents (default 2,1)"},
                            "conical special complex structure from g = -i z^l / z_0^(l-1)",
                            lambda l="2,1", **_: make_oneform_family(_parse_l(l))),
}


def _surface2(delta, s, t):
    if s is None and t is None:
        s, t = (SQRT_16_3, 0.0) if delta == 1 else (0.0, 0.0)
    return make_surface_dim2(delta, 0.0 if s is None else s, 0.0 if t is None else t)


def build(name: str, **params):
    if name not in GALLERY:
        raise KeyError(f"unknown gallery example {name!r}")
    return GALLERY[name].factory(**params)
