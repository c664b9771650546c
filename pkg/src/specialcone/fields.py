"""Charts, tensor fields, connections and the coordinate calculus.

A field is a callable ``F(points, order) -> Jet`` where ``points`` has
shape ``batch + (dim,)``.  Derived fields (covariant derivatives,
curvature, Lie derivatives, ...) are again fields, built lazily: asking
for a derivative of order k evaluates the inputs at order k+1.
"""

from __future__ import annotations

from collections import OrderedDict
from typing import Callable, Sequence

import numpy as np

from .numerics import Jet, JetError, jinv, jstack, seed_jets
from .tensor import antisym_slots, ein

__all__ = [
    "Chart", "Field", "Connection", "constant_field", "coordinate_vector_field", "fmap", "partial",
    "covariant_derivative", "torsion", "curvature", "ricci", "lie_derivative", "lie_derivative_connection",
    "ext_cov_derivative", "exterior_derivative", "levi_civita", "pullback_field", "section_field",
    "max_norm", "stack_field", "nijenhuis",
]

_LETTERS = "abcdefghijklmnopqrstuvw"


class Chart:
    """Coordinate chart with a box (and optional predicate) as valid region."""

    def __init__(self, names: Sequence[str], lo, hi, predicate: Callable | None = None, name: str = ""):
        self.names = tuple(names)
        self.lo = np.broadcast_to(np.asarray(lo, dtype=float), (len(self.names),)).copy()
        self.hi = np.broadcast_to(np.asarray(hi, dtype=float), (len(self.names),)).copy()
        if len(self.names) < 1:
            raise ValueError("chart needs at least one coordinate")
        if np.any(self.hi <= self.lo):
            raise ValueError("empty sampling box")
        self.predicate = predicate
        self.name = name

    @property
    def dim(self) -> int:
        return len(self.names)

    def contains(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        ok = np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)
        if self.predicate is not None:
            ok &= self.predicate(pts)
        return ok

    def sample(self, n: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        out = np.empty((0, self.dim))
        for _ in range(1000):
            cand = rng.uniform(self.lo, self.hi, size=(max(n, 16), self.dim))
            if self.predicate is not None:
                cand = cand[self.predicate(cand)]
            out = np.concatenate([out, cand])
            if len(out) >= n:
                return out[:n]
        raise ValueError(f"could not sample {n} valid points on chart {self.name!r}")

    def product(self, other: "Chart", name: str = "") -> "Chart":
        m = self.dim
        p1, p2 = self.predicate, other.predicate

        def pred(p):
            ok = np.ones(p.shape[:-1], dtype=bool)
            if p1 is not None:
                ok &= p1(p[..., :m])
            if p2 is not None:
                ok &= p2(p[..., m:])
            return ok

        return Chart(self.names + other.names, np.concatenate([self.lo, other.lo]),
                     np.concatenate([self.hi, other.hi]), pred if (p1 or p2) else None, name)


class Field:
    """A tensor field given by a jet-valued callable.

    ``up`` records how many leading component slots are contravariant.
    Evaluations are memoised per point array and order.
    """

    _CACHE = 6

    def __init__(self, fn: Callable[[np.ndarray, int], Jet], dim: int, shape: Sequence[int], up: int = 0,
                 name: str = ""):
        self.fn = fn
        self.dim = int(dim)
        self.shape = tuple(shape)
        self.up = int(up)
        self.name = name
        self._memo: OrderedDict = OrderedDict()

    @property
    def rank(self) -> int:
        return len(self.shape)

    def __call__(self, points, order: int = 0) -> Jet:
        p = np.asarray(points, dtype=float)
        key = (p.shape, p.tobytes())
        hit = self._memo.get(key)
        if hit is not None and hit.order >= order:
            self._memo.move_to_end(key)
            return hit.trunc(order) if hit.order > order else hit
        out = self.fn(p, order)
        if not isinstance(out, Jet):
            raise TypeError(f"field {self.name!r} did not return a Jet")
        if out.order < order:
            raise JetError(f"field {self.name!r} returned order {out.order} < {order}")
        if out.shape != self.shape:
            raise ValueError(f"field {self.name!r} returned shape {out.shape}, expected {self.shape}")
        self._memo[key] = out
        if len(self._memo) > self._CACHE:
            self._memo.popitem(last=False)
        return out.trunc(order) if out.order > order else out

    def at(self, points) -> np.ndarray:
        return self(points, 0).value

    def __repr__(self) -> str:
        return f"Field({self.name!r}, dim={self.dim}, shape={self.shape}, up={self.up})"

    # lightweight algebra
    def __add__(self, other: "Field") -> "Field":
        return fmap(lambda a, b: a + b, [self, other], self.shape, self.up, f"({self.name}+{other.name})")

    def __sub__(self, other: "Field") -> "Field":
        return fmap(lambda a, b: a - b, [self, other], self.shape, self.up, f"({self.name}-{other.name})")

    def scale(self, c: float) -> "Field":
        return fmap(lambda a: a * c, [self], self.shape, self.up, f"{c}*{self.name}")


class Connection(Field):
    """Christoffel symbols G[k,i,j] with nabla_{d_i} d_j = G[k,i,j] d_k."""

    def __init__(self, fn, dim: int, name: str = ""):
        super().__init__(fn, dim, (dim, dim, dim), 1, name)

    @classmethod
    def of(cls, field: Field, name: str | None = None) -> "Connection":
        if field.shape != (field.dim,) * 3:
            raise ValueError("Christoffel field must have shape (dim, dim, dim)")
        return cls(field, field.dim, name or field.name)


def _const_jet(value: np.ndarray, p: np.ndarray, order: int) -> Jet:
    dim = p.shape[-1]
    batch = p.shape[:-1]
    v = np.broadcast_to(np.asarray(value, dtype=float), batch + np.shape(value))
    return Jet.constant(np.array(v), dim, order, len(batch))


def constant_field(value, dim: int, up: int = 0, name: str = "") -> Field:
    value = np.asarray(value, dtype=float)
    return Field(lambda p, k: _const_jet(value, p, k), dim, value.shape, up, name)


def coordinate_vector_field(dim: int) -> Field:
    """Position vector x^i d_i (useful for Euler fields on flat charts)."""
    return Field(lambda p, k: seed_jets(p, k), dim, (dim,), 1, "x")


def fmap(fn: Callable, fields: Sequence[Field], shape, up: int = 0, name: str = "") -> Field:
    """Pointwise jet combination of fields evaluated at the same order."""
    fields = list(fields)
    dim = fields[0].dim

    def ev(p, k):
        return fn(*[f(p, k) for f in fields])

    return Field(ev, dim, shape, up, name)


def partial(F: Field) -> Field:
    """Coordinate derivative; the derivative index is appended last."""
    return Field(lambda p, k: F(p, k + 1).deriv(), F.dim, F.shape + (F.dim,), F.up, f"d{F.name}")


def _move_last_to(j: Jet, pos: int) -> Jet:
    n = len(j.shape)
    axes = list(range(n - 1))
    axes.insert(pos, n - 1)
    return j.transpose(tuple(axes))


def _slot_corrections(G: Jet, T: Jet, up: int, sign_up: float, sign_down: float, deriv_pos: int) -> Jet:
    # Sum of G-corrections for covariant derivative (deriv slot inserted at deriv_pos).
    n = len(T.shape)
    letters = _LETTERS[:n]
    out = list(letters)
    out.insert(deriv_pos, "x")
    out = "".join(out)
    acc = None
    for s in range(n):
        if s < up:
            src = letters[:s] + "y" + letters[s + 1:]
            term = ein(f"{letters[s]}xy,{src}->{out}", G, T) * sign_up
        else:
            src = letters[:s] + "y" + letters[s + 1:]
            term = ein(f"yx{letters[s]},{src}->{out}", G, T) * sign_down
        acc = term if acc is None else acc + term
    return acc


def covariant_derivative(conn: Connection, T: Field) -> Field:
    """nabla T, with the derivative slot as the first covariant slot."""

    def ev(p, k):
        t = T(p, k + 1)
        dt = _move_last_to(t.deriv(), T.up)
        if T.rank == 0:
            return dt
        return dt + _slot_corrections(conn(p, k), t.trunc(k), T.up, 1.0, -1.0, T.up)

    shape = T.shape[:T.up] + (T.dim,) + T.shape[T.up:]
    return Field(ev, T.dim, shape, T.up, f"D{T.name}")


def torsion(conn: Connection) -> Field:
    def ev(p, k):
        g = conn(p, k)
        return g - g.transpose(0, 2, 1)

    return Field(ev, conn.dim, conn.shape, 1, f"T[{conn.name}]")


def curvature(conn: Connection) -> Field:
    """R[l,i,j,k] = (R(d_i, d_j) d_k)^l."""

    def ev(p, k):
        g1 = conn(p, k + 1)
        dg = g1.deriv()  # dg[l,j,k,i] = d_i G[l,j,k]
        g = g1.trunc(k)
        r = dg.transpose(0, 3, 1, 2) - dg.transpose(0, 1, 3, 2)
        return r + ein("lim,mjk->lijk", g, g) - ein("ljm,mik->lijk", g, g)

    m = conn.dim
    return Field(ev, m, (m, m, m, m), 1, f"R[{conn.name}]")


def ricci(conn: Connection) -> Field:
    R = curvature(conn)
    return Field(lambda p, k: ein("iijk->jk", R(p, k)), conn.dim, (conn.dim,) * 2, 0, f"Ric[{conn.name}]")


def lie_derivative(X: Field, T: Field) -> Field:
    """Coordinate Lie derivative of a tensor field along a vector field."""

    def ev(p, k):
        x1 = X(p, k + 1)
        t1 = T(p, k + 1)
        dx = x1.deriv()  # dx[a,m] = d_m X^a
        dt = t1.deriv()  # dt[..., m] = d_m T
        n = T.rank
        letters = _LETTERS[:n]
        out = ein(f"{letters}y,y->{letters}", dt, x1.trunc(k))
        t = t1.trunc(k)
        for s in range(n):
            src = letters[:s] + "y" + letters[s + 1:]
            if s < T.up:
                out = out - ein(f"{letters[s]}y,{src}->{letters}", dx, t)
            else:
                out = out + ein(f"y{letters[s]},{src}->{letters}", dx, t)
        return out

    return Field(ev, T.dim, T.shape, T.up, f"L_{X.name}{T.name}")


def lie_derivative_connection(X: Field, conn: Connection) -> Field:
    """(L_X nabla)(Y,Z) = L_X(nabla_Y Z) - nabla_{L_X Y} Z - nabla_Y L_X Z, in coordinates."""

    def ev(p, k):
        x2 = X(p, k + 2)
        dx1 = x2.deriv()  # [k, i]
        ddx = dx1.deriv()  # [k, i, j]
        dx = dx1.trunc(k)
        g1 = conn(p, k + 1)
        dg = g1.deriv()  # [k,i,j,m]
        g = g1.trunc(k)
        xv = x2.trunc(k)
        out = ddx + ein("kijm,m->kij", dg, xv)
        out = out - ein("mij,km->kij", g, dx)
        out = out + ein("kmj,mi->kij", g, dx)
        out = out + ein("kim,mj->kij", g, dx)
        return out

    m = conn.dim
    return Field(ev, m, (m, m, m), 1, f"L_{X.name}[{conn.name}]")


def ext_cov_derivative(conn: Connection, T: Field, p: int = 1) -> Field:
    """Exterior covariant derivative of a form with values in a tensor bundle.

    The form slots are the ``p`` slots right after the ``up`` leading
    contravariant slots.  Uses the torsion-free formula
    d^D T(X0..Xp) = sum_i (-1)^i (D_{Xi} T)(..., no Xi, ...),
    i.e. (p+1) times the alternation of D T over its first p+1 covariant slots.
    """
    DT = covariant_derivative(conn, T)

    def ev(pts, k):
        t = DT(pts, k)
        return antisym_slots(t, range(T.up, T.up + p + 1), len(DT.shape)) * float(p + 1)

    return Field(ev, T.dim, DT.shape, T.up, f"d^D{T.name}")


def exterior_derivative(F: Field, p: int = 1) -> Field:
    """d of a scalar p-form; d theta(X,Y) = X theta(Y) - Y theta(X) for p=1."""
    dF = partial(F)

    def ev(pts, k):
        t = _move_last_to(dF(pts, k), 0)
        return antisym_slots(t, range(p + 1), p + 1) * float(p + 1)

    return Field(ev, F.dim, (F.dim,) * (p + 1), 0, f"d{F.name}")


def levi_civita(g: Field) -> Connection:
    """Koszul formula: G[k,i,j] = 1/2 g^{kl} (d_i g_lj + d_j g_li - d_l g_ij)."""

    def ev(p, k):
        g1 = g(p, k + 1)
        dg = g1.deriv()  # [a,b,c] = d_c g_ab
        ginv = jinv(g1.trunc(k))
        # d_i g_lj -> dg[l,j,i]; d_j g_li -> dg[l,i,j]; d_l g_ij -> dg[i,j,l]
        t = dg.transpose(0, 2, 1) + dg - dg.transpose(2, 0, 1)
        return ein("kl,lij->kij", ginv, t) * 0.5

    return Connection(ev, g.dim, f"LC[{g.name}]")


def nijenhuis(J: Field) -> Field:
    """N(X,Y) = [JX,JY] - J[JX,Y] - J[X,JY] - [X,Y], stored as N[k,i,j]."""

    def ev(p, k):
        j1 = J(p, k + 1)
        dj = j1.deriv()  # [a, b, c] = d_c J^a_b
        j = j1.trunc(k)
        t = ein("mi,kjm->kij", j, dj) - ein("mj,kim->kij", j, dj)
        u = ein("km,mji->kij", j, dj) - ein("km,mij->kij", j, dj)
        return t - u

    m = J.dim
    return Field(ev, m, (m, m, m), 1, f"N[{J.name}]")


def pullback_field(F: Field, idx: Sequence[int], dim: int) -> Field:
    """Field on a larger chart depending only on the coordinates ``idx``."""
    idx = list(idx)

    def ev(p, k):
        return F(p[..., idx], k).embed(dim, idx)

    return Field(ev, dim, F.shape, F.up, F.name)


def section_field(F: Field, base_dim: int, fixed: Sequence[float]) -> Field:
    """Restrict a field on (x, y) coordinates to the slice y = fixed."""
    fixed = np.asarray(fixed, dtype=float)

    def ev(p, k):
        q = np.concatenate([p, np.broadcast_to(fixed, p.shape[:-1] + fixed.shape)], axis=-1)
        return F(q, k).restrict(range(base_dim))

    return Field(ev, base_dim, F.shape, F.up, F.name)


def stack_field(fields: Sequence[Field], up: int = 0, name: str = "") -> Field:
    fields = list(fields)

    def ev(p, k):
        return jstack([f(p, k) for f in fields], axis=0)

    return Field(ev, fields[0].dim, (len(fields),) + fields[0].shape, up, name)


def max_norm(F: Field, points) -> float:
    v = F.at(points)
    return float(np.abs(v).max()) if v.size else 0.0
