"""Truncated Taylor jets (orders 0-3) and a finite-difference oracle.

A :class:`Jet` carries the value of a function together with its first,
second and third partial derivatives with respect to the chart
coordinates.  The storage is vectorised: ``parts[k]`` has shape
``(dim,)*k + batch + comp`` where ``batch`` indexes sample points and
``comp`` is the component shape of a tensor.  A plain scalar jet at a
single point has ``batch = comp = ()``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

MAX_ORDER = 3

__all__ = [
    "Jet",
    "JetError",
    "Tolerances",
    "coordinate_jet",
    "seed_jets",
    "jet_combine",
    "jeinsum",
    "jstack",
    "jwhere",
    "jinv",
    "fd_partial",
]


class JetError(ValueError):
    """Raised for order/dim mismatches and domain errors in jet arithmetic."""


@dataclass(frozen=True)
class Tolerances:
    residual_tol: float = 1e-8
    fd_step: float = 1e-5
    sample_count: int = 64

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")
        if self.sample_count < 1:
            raise ValueError("sample_count must be at least 1")


def _shuffle_sum(t: np.ndarray, i: int, j: int) -> np.ndarray:
    # t has i+j leading derivative axes, the first i from one factor and the
    # next j from the other.  Sum over all ways of interleaving the two groups.
    if i == 0 or j == 0:
        return t
    k = i + j
    out = None
    for pos in itertools.combinations(range(k), i):
        rest = [q for q in range(k) if q not in pos]
        perm = list(pos) + rest
        # axis perm[q] of the result comes from axis q of t
        src = np.moveaxis(t, list(range(k)), perm)
        out = src if out is None else out + src
    return out


def _pad_comp(a: np.ndarray, lead: int, ncomp: int) -> np.ndarray:
    # insert singleton axes right after the leading (deriv + batch) axes so that
    # the component block has exactly ncomp axes
    have = a.ndim - lead
    if have == ncomp:
        return a
    shape = a.shape[:lead] + (1,) * (ncomp - have) + a.shape[lead:]
    return a.reshape(shape)


class Jet:
    """Truncated Taylor expansion of a (possibly tensor valued) function."""

    __slots__ = ("parts", "dim", "nb")
    __array_priority__ = 1000

    def __init__(self, parts: Sequence[np.ndarray], dim: int, nb: int = 0):
        if not 1 <= len(parts) <= MAX_ORDER + 1:
            raise JetError(f"jet order must be in 0..{MAX_ORDER}")
        self.parts = tuple(np.asarray(p, dtype=float) for p in parts)
        self.dim = int(dim)
        self.nb = int(nb)
        for k, p in enumerate(self.parts):
            if p.shape[:k] != (self.dim,) * k:
                raise JetError("derivative axes do not match dim")

    # basic shape information
    @property
    def order(self) -> int:
        return len(self.parts) - 1

    @property
    def batch(self) -> tuple:
        return self.parts[0].shape[: self.nb]

    @property
    def shape(self) -> tuple:
        return self.parts[0].shape[self.nb:]

    @property
    def value(self) -> np.ndarray:
        return self.parts[0]

    def _deriv_last(self, k: int) -> np.ndarray:
        if self.order < k:
            raise JetError(f"jet of order {self.order} has no order-{k} part")
        return np.moveaxis(self.parts[k], list(range(k)), list(range(-k, 0)))

    @property
    def grad(self) -> np.ndarray:
        """First derivatives with the derivative axis last."""
        return self._deriv_last(1)

    @property
    def hess(self) -> np.ndarray:
        return self._deriv_last(2)

    @property
    def third(self) -> np.ndarray:
        return self._deriv_last(3)

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, dim={self.dim}, batch={self.batch}, shape={self.shape})"

    # constructors
    @classmethod
    def constant(cls, value, dim: int, order: int, nb: int = 0) -> "Jet":
        v = np.asarray(value, dtype=float)
        parts = [v] + [np.zeros((dim,) * k + v.shape) for k in range(1, order + 1)]
        return cls(parts, dim, nb)

    def zeros_like(self, shape=None) -> "Jet":
        shape = self.shape if shape is None else tuple(shape)
        parts = [np.zeros((self.dim,) * k + self.batch + shape) for k in range(self.order + 1)]
        return Jet(parts, self.dim, self.nb)

    # structural operations
    def trunc(self, order: int) -> "Jet":
        if order > self.order:
            raise JetError(f"cannot raise jet order {self.order} to {order}")
        return Jet(self.parts[: order + 1], self.dim, self.nb)

    def deriv(self) -> "Jet":
        """Jet of the gradient, one order lower, derivative index appended last."""
        if self.order < 1:
            raise JetError("jet order insufficient for differentiation")
        parts = [np.moveaxis(self.parts[k + 1], k, -1) for k in range(self.order)]
        return Jet(parts, self.dim, self.nb)

    def embed(self, dim: int, idx: Sequence[int]) -> "Jet":
        """Re-express derivatives in a larger chart where our coordinates sit at ``idx``."""
        idx = np.asarray(idx, dtype=int)
        parts = [self.parts[0]]
        for k in range(1, self.order + 1):
            p = self.parts[k]
            out = np.zeros((dim,) * k + p.shape[k:])
            out[np.ix_(*([idx] * k))] = p
            parts.append(out)
        return Jet(parts, dim, self.nb)

    def restrict(self, idx: Sequence[int]) -> "Jet":
        """Keep only the derivatives along coordinates ``idx`` (pullback by a slice)."""
        idx = np.asarray(idx, dtype=int)
        parts = [self.parts[0]]
        for k in range(1, self.order + 1):
            parts.append(self.parts[k][np.ix_(*([idx] * k))])
        return Jet(parts, len(idx), self.nb)

    def map_parts(self, fn: Callable[[np.ndarray, int], np.ndarray]) -> "Jet":
        """Apply a linear map to the component block of every part."""
        return Jet([fn(p, k + self.nb) for k, p in enumerate(self.parts)], self.dim, self.nb)

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        return self.map_parts(lambda p, lead: p[(slice(None),) * lead + key])

    def transpose(self, *axes) -> "Jet":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        n = len(self.shape)
        if not axes:
            axes = tuple(range(n))[::-1]
        return self.map_parts(lambda p, lead: np.transpose(p, tuple(range(lead)) + tuple(lead + a for a in axes)))

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return self.map_parts(lambda p, lead: p.reshape(p.shape[:lead] + tuple(shape)))

    def sum(self, axis=None) -> "Jet":
        n = len(self.shape)
        if axis is None:
            axes = tuple(range(n))
        elif isinstance(axis, int):
            axes = (axis % n,)
        else:
            axes = tuple(a % n for a in axis)
        return self.map_parts(lambda p, lead: p.sum(axis=tuple(lead + a for a in axes)))

    # arithmetic
    def _padded(self, ncomp: int) -> "Jet":
        if len(self.shape) >= ncomp:
            return self
        return Jet([_pad_comp(p, k + self.nb, ncomp) for k, p in enumerate(self.parts)], self.dim, self.nb)

    def _linear(self, other, sign: float) -> "Jet":
        if not isinstance(other, Jet):
            c = sign * np.asarray(other, dtype=float)
            f = self._padded(c.ndim)
            v = f.parts[0] + c
            rest = [np.broadcast_to(p, p.shape[:k + 1] + v.shape) if p.shape[k + 1:] != v.shape else p
                    for k, p in enumerate(f.parts[1:])]
            return Jet([v] + rest, self.dim, self.nb)
        if other.dim != self.dim:
            raise JetError("jet dim mismatch")
        if other.nb != self.nb:
            raise JetError("batch mismatch between jets")
        n = max(len(self.shape), len(other.shape))
        f, g = self._padded(n), other._padded(n)
        k = min(f.order, g.order)
        return Jet([f.parts[q] + sign * g.parts[q] for q in range(k + 1)], self.dim, self.nb)

    def __add__(self, other):
        return self._linear(other, 1.0)

    def __radd__(self, other):
        return self._linear(other, 1.0)

    def __sub__(self, other):
        return self._linear(other, -1.0)

    def __rsub__(self, other):
        return (-self)._linear(other, 1.0)

    def __neg__(self):
        return Jet([-p for p in self.parts], self.dim, self.nb)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            f = self._padded(c.ndim)
            return Jet([p * c for p in f.parts], self.dim, self.nb)
        if other.nb != self.nb:
            raise JetError("batch mismatch between jets")
        n = max(len(self.shape), len(other.shape))
        return _leibniz(self._padded(n), other._padded(n), _outer)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            if np.any(c == 0):
                raise JetError("division by zero value")
            return self * (1.0 / c)
        return self * other.recip()

    def __rtruediv__(self, other):
        return self.recip() * other

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)):
            raise JetError("only integer powers are supported")
        n = int(n)
        if n < 0:
            return (self ** (-n)).recip()
        result = None
        base = self
        while True:
            if n & 1:
                result = base if result is None else result * base
            n >>= 1
            if not n:
                break
            base = base * base
        if result is None:
            return Jet.constant(np.ones(self.parts[0].shape), self.dim, self.order, self.nb)
        return result

    # elementary functions
    def _unary(self, phis: Sequence[np.ndarray]) -> "Jet":
        f = self.parts
        parts = [phis[0]]
        if self.order >= 1:
            parts.append(phis[1] * f[1])
        if self.order >= 2:
            f1 = f[1]
            f11 = f1[:, None] * f1[None, :]
            parts.append(phis[1] * f[2] + phis[2] * f11)
        if self.order >= 3:
            f21 = _shuffle_sum(f[2][:, :, None] * f1[None, None, :], 2, 1)
            f111 = f11[:, :, None] * f1[None, None, :]
            parts.append(phis[1] * f[3] + phis[2] * f21 + phis[3] * f111)
        return Jet(parts, self.dim, self.nb)

    def recip(self) -> "Jet":
        x = self.parts[0]
        if np.any(x == 0):
            raise JetError("division by zero value")
        r = 1.0 / x
        return self._unary([r, -r * r, 2 * r**3, -6 * r**4])

    def sin(self):
        x = self.parts[0]
        s, c = np.sin(x), np.cos(x)
        return self._unary([s, c, -s, -c])

    def cos(self):
        x = self.parts[0]
        s, c = np.sin(x), np.cos(x)
        return self._unary([c, -s, -c, s])

    def exp(self):
        e = np.exp(self.parts[0])
        return self._unary([e, e, e, e])

    def log(self):
        x = self.parts[0]
        if np.any(x <= 0):
            raise JetError("log of non-positive value")
        r = 1.0 / x
        return self._unary([np.log(x), r, -r * r, 2 * r**3])

    def sqrt(self):
        x = self.parts[0]
        if np.any(x < 0) or (self.order > 0 and np.any(x == 0)):
            raise JetError("sqrt requires a positive value")
        s = np.sqrt(x)
        if self.order == 0:
            return Jet([s], self.dim, self.nb)
        return self._unary([s, 0.5 / s, -0.25 / s**3, 0.375 / s**5])

    def atan(self):
        x = self.parts[0]
        q = 1.0 / (1.0 + x * x)
        return self._unary([np.arctan(x), q, -2 * x * q * q, (6 * x * x - 2) * q**3])


def _outer(a: np.ndarray, b: np.ndarray, i: int, j: int) -> np.ndarray:
    # componentwise product with the derivative axes of a placed before those of b
    a = a.reshape(a.shape[:i] + (1,) * j + a.shape[i:])
    b = b.reshape((1,) * i + b.shape)
    return a * b


def _leibniz(f: Jet, g: Jet, op) -> Jet:
    if f.dim != g.dim:
        raise JetError("jet dim mismatch")
    order = min(f.order, g.order)
    parts = []
    for k in range(order + 1):
        acc = None
        for i in range(k + 1):
            t = _shuffle_sum(op(f.parts[i], g.parts[k - i], i, k - i), i, k - i)
            acc = t if acc is None else acc + t
        parts.append(acc)
    return Jet(parts, f.dim, max(f.nb, g.nb))


_DERIV_LETTERS = "ABCDEF"


def jeinsum(spec: str, *ops) -> Jet:
    """Einstein summation over the component axes of one or two jets.

    ``spec`` uses lower-case letters for component axes only, e.g.
    ``"kij,jl->kil"``.  Batch axes are carried automatically.  Plain
    arrays are treated as constants without batch axes.
    """
    lhs, rhs = spec.replace(" ", "").split("->")
    terms = lhs.split(",")
    if len(terms) != len(ops):
        raise JetError("operand count does not match subscripts")
    jets = [o for o in ops if isinstance(o, Jet)]
    if not jets:
        raise JetError("jeinsum needs at least one jet operand")
    if len(ops) == 1:
        (f,) = ops
        return f.map_parts(lambda p, lead: np.einsum(f"...{terms[0]}->...{rhs}", p))
    if len(ops) != 2:
        # fold left to right
        acc_spec_terms = terms[:2]
        letters_out = "".join(dict.fromkeys(c for c in "".join(terms[:2]) if c in "".join(terms[2:]) + rhs))
        first = jeinsum(f"{acc_spec_terms[0]},{acc_spec_terms[1]}->{letters_out}", ops[0], ops[1])
        rest = ",".join([letters_out] + terms[2:])
        return jeinsum(f"{rest}->{rhs}", first, *ops[2:])
    a, b = ops
    ta, tb = terms
    if not isinstance(a, Jet):
        c = np.asarray(a, dtype=float)
        return b.map_parts(lambda p, lead: np.einsum(f"{ta},...{tb}->...{rhs}", c, p))
    if not isinstance(b, Jet):
        c = np.asarray(b, dtype=float)
        return a.map_parts(lambda p, lead: np.einsum(f"...{ta},{tb}->...{rhs}", p, c))

    def op(x, y, i, j):
        da, db = _DERIV_LETTERS[:i], _DERIV_LETTERS[i:i + j]
        return np.einsum(f"{da}...{ta},{db}...{tb}->{da}{db}...{rhs}", x, y)

    if a.nb != b.nb:
        raise JetError("batch mismatch between jets")
    return _leibniz(a, b, op)


def jstack(jets: Sequence[Jet], axis: int = 0) -> Jet:
    """Stack jets along a new component axis."""
    jets = list(jets)
    order = min(j.order for j in jets)
    dim, nb = jets[0].dim, jets[0].nb
    ncomp = len(jets[0].shape)
    if axis < 0:
        axis += ncomp + 1
    parts = []
    for k in range(order + 1):
        arrs = [np.broadcast_to(j.parts[k], jets[0].parts[k].shape) if j.parts[k].shape != jets[0].parts[k].shape else j.parts[k] for j in jets]
        parts.append(np.stack(arrs, axis=k + nb + axis))
    return Jet(parts, dim, nb)


def jwhere(mask: np.ndarray, a: Jet, b: Jet) -> Jet:
    """Select per batch entry between two jets of equal layout."""
    order = min(a.order, b.order)
    parts = []
    for k in range(order + 1):
        pa, pb = a.parts[k], b.parts[k]
        m = np.asarray(mask).reshape(mask.shape + (1,) * (pa.ndim - k - mask.ndim))
        parts.append(np.where(m, pa, pb))
    return Jet(parts, a.dim, a.nb)


def _lift(value: np.ndarray, like: Jet) -> Jet:
    return Jet.constant(value, like.dim, like.order, like.nb)


def _matmul(a: Jet, b: Jet) -> Jet:
    def op(x, y, i, j):
        da, db = _DERIV_LETTERS[:i], _DERIV_LETTERS[i:i + j]
        return np.einsum(f"{da}...ab,{db}...bc->{da}{db}...ac", x, y)

    return _leibniz(a, b, op)


def jinv(m: Jet) -> Jet:
    """Inverse of a jet of square matrices (last two component axes)."""
    n0 = np.linalg.inv(m.parts[0])
    # M = M0 (I + E) with E = N (M - M0); E has zero value so the series stops
    e = _matmul(_lift(n0, m), Jet([np.zeros_like(m.parts[0])] + list(m.parts[1:]), m.dim, m.nb))
    term, acc = e, -e
    for q in range(2, m.order + 1):
        term = _matmul(term, e)
        acc = acc + term if q % 2 == 0 else acc - term
    parts = list(acc.parts)
    parts[0] = parts[0] + np.broadcast_to(np.eye(n0.shape[-1]), n0.shape)
    return _matmul(Jet(parts, m.dim, m.nb), _lift(n0, m))


def atan2(y: Jet, x: Jet) -> Jet:
    """Branch-aware atan2 on jets; the value part is numpy's arctan2."""
    x0, y0 = x.parts[0], y.parts[0]
    if np.any((x0 == 0) & (y0 == 0)):
        raise JetError("atan2 undefined at the origin")
    use_x = np.abs(x0) >= np.abs(y0)
    safe_x = Jet([np.where(use_x, x.parts[0], 1.0)] + list(x.parts[1:]), x.dim, x.nb)
    safe_y = Jet([np.where(use_x, 1.0, y.parts[0])] + list(y.parts[1:]), y.dim, y.nb)
    a = (y / safe_x).atan()
    b = -(x / safe_y).atan()
    out = jwhere(use_x, a, b)
    parts = list(out.parts)
    parts[0] = np.arctan2(y0, x0)
    return Jet(parts, out.dim, out.nb)


def coordinate_jet(point: Sequence[float], index: int, order: int) -> Jet:
    """Seed jet of the coordinate function x^index at a point."""
    p = np.asarray(point, dtype=float)
    dim = p.shape[-1]
    if not 0 <= index < dim:
        raise JetError(f"coordinate index {index} out of range for dim {dim}")
    if not 0 <= order <= MAX_ORDER:
        raise JetError(f"order must be in 0..{MAX_ORDER}")
    nb = p.ndim - 1
    parts = [p[..., index].copy()]
    if order >= 1:
        g = np.zeros((dim,) + p.shape[:-1])
        g[index] = 1.0
        parts.append(g)
    for k in range(2, order + 1):
        parts.append(np.zeros((dim,) * k + p.shape[:-1]))
    return Jet(parts, dim, nb)


def seed_jets(points: np.ndarray, order: int) -> Jet:
    """Vector jet of all coordinates at a batch of points (component axis last)."""
    p = np.asarray(points, dtype=float)
    dim = p.shape[-1]
    nb = p.ndim - 1
    parts = [p.copy()]
    if order >= 1:
        g = np.zeros((dim,) + p.shape[:-1] + (dim,))
        for i in range(dim):
            g[i, ..., i] = 1.0
        parts.append(g)
    for k in range(2, order + 1):
        parts.append(np.zeros((dim,) * k + p.shape))
    return Jet(parts, dim, nb)


_COMBINE_ARITY = {"add": 2, "sub": 2, "mul": 2, "div": 2, "pow_int": 2, "sin": 1, "cos": 1,
                  "exp": 1, "sqrt": 1, "atan2": 2, "log": 1}


def jet_combine(op: str, args: Sequence) -> Jet:
    """Apply a named operation to jets sharing dim and order."""
    if op not in _COMBINE_ARITY:
        raise JetError(f"unknown jet operation {op!r}")
    if len(args) != _COMBINE_ARITY[op]:
        raise JetError(f"{op} takes {_COMBINE_ARITY[op]} arguments")
    jets = [a for a in args if isinstance(a, Jet)]
    if op == "pow_int":
        base, n = args
        return base ** int(n)
    if len({(j.dim, j.order) for j in jets}) > 1:
        raise JetError("order/dim mismatch between jet arguments")
    if op == "add":
        return args[0] + args[1]
    if op == "sub":
        return args[0] - args[1]
    if op == "mul":
        return args[0] * args[1]
    if op == "div":
        return args[0] / args[1]
    if op == "atan2":
        return atan2(args[0], args[1])
    return getattr(args[0], op)()


def fd_partial(f: Callable[[np.ndarray], float], point: Sequence[float], multi_index: Sequence[int],
               step: float = 1e-5) -> float:
    """Nested central-difference estimate of a mixed partial derivative."""
    idx = list(multi_index)
    if len(idx) > MAX_ORDER:
        raise JetError("finite differences support at most third derivatives")
    p = np.asarray(point, dtype=float)

    def nested(q: np.ndarray, rest: list) -> float:
        if not rest:
            try:
                val = float(f(q))
            except Exception as exc:  # pragma: no cover - reported to caller
                raise JetError(f"evaluation failed inside stencil at {q}: {exc}") from exc
            if not math.isfinite(val):
                raise JetError(f"non-finite value inside stencil at {q}")
            return val
        i = rest[0]
        e = np.zeros_like(q)
        e[i] = step
        return (nested(q + e, rest[1:]) - nested(q - e, rest[1:])) / (2 * step)

    return nested(p, idx)
