"""Pointwise multilinear algebra on a real tangent space.

Component layout: contravariant slots first, then covariant slots in
argument order.  Every function accepts plain arrays (leading axes are
treated as batch axes) or :class:`~specialcone.numerics.Jet` objects, so
the same code serves both pointwise checks and field calculus.

An endomorphism valued p-form ``P`` is stored as ``P[out, x1..xp, in]``,
so that ``P(X1..Xp) Z = P[:, X1..Xp, Z]``.  A (1,2) tensor ``A[k,i,j]``
is read as the endomorphism valued one-form ``X -> A_X``.  Curvature
``R[l,i,j,k] = (R(d_i,d_j) d_k)^l`` follows the same layout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .numerics import Jet, jeinsum

__all__ = [
    "Tensor", "TensorError", "ein", "contract", "wedge_lk", "twist_J", "pull_J", "alt_sym", "alt2", "sym2",
    "end_wedge", "end_bracket", "bracket_AA", "triple_bracket", "gram_trace", "wedge_one", "tensor_id",
    "compose_J", "standard_J", "is_almost_complex", "antisym_slots", "tensor_product_id",
]


class TensorError(ValueError):
    pass


def ein(spec: str, *ops):
    """einsum over component axes; batch axes ride along."""
    if any(isinstance(o, Jet) for o in ops):
        return jeinsum(spec, *ops)
    lhs, rhs = spec.replace(" ", "").split("->")
    terms = lhs.split(",")
    return np.einsum(",".join("..." + t for t in terms) + "->..." + rhs, *ops)


@dataclass(frozen=True)
class Tensor:
    """Dense tensor with explicit valence; components may carry batch axes."""

    components: np.ndarray
    up: int
    down: int

    def __post_init__(self):
        c = np.asarray(self.components, dtype=float)
        object.__setattr__(self, "components", c)
        n = self.up + self.down
        if n and len(set(c.shape[c.ndim - n:])) > 1:
            raise TensorError("all slots must share the tangent dimension")
        if c.ndim < n:
            raise TensorError("component array has too few axes for the valence")

    @property
    def dim(self) -> int:
        n = self.up + self.down
        return self.components.shape[-1] if n else 0

    @property
    def rank(self) -> int:
        return self.up + self.down


_LETTERS = "abcdefghijklmnopqrstuvw"


def contract(T: Tensor, up_slot: int, down_slot: int) -> Tensor:
    """Trace of an upper slot against a lower slot."""
    if not 0 <= up_slot < T.up:
        raise TensorError("up_slot must index a contravariant slot")
    if not T.up <= down_slot < T.rank:
        raise TensorError("down_slot must index a covariant slot")
    idx = list(_LETTERS[: T.rank])
    idx[down_slot] = idx[up_slot]
    out = "".join(c for k, c in enumerate(idx) if k not in (up_slot, down_slot))
    comps = np.einsum("..." + "".join(idx) + "->..." + out, T.components)
    return Tensor(comps, T.up - 1, T.down - 1)


def alt_sym(T: Tensor, slots, mode: str) -> Tensor:
    """(Anti)symmetrisation over the given slots with 1/k! normalisation."""
    slots = list(slots)
    if mode not in ("sym", "antisym"):
        raise TensorError("mode must be 'sym' or 'antisym'")
    if len(set(s < T.up for s in slots)) > 1:
        raise TensorError("slots must share variance")
    c = T.components
    n = T.rank
    base = c.ndim - n
    acc = np.zeros_like(c)
    for perm in itertools.permutations(range(len(slots))):
        axes = list(range(c.ndim))
        for k, p in enumerate(perm):
            axes[base + slots[k]] = base + slots[p]
        sign = _perm_sign(perm) if mode == "antisym" else 1
        acc = acc + sign * np.transpose(c, axes)
    return Tensor(acc / math.factorial(len(slots)), T.up, T.down)


def _perm_sign(perm) -> int:
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def _swap_last2(k):
    if isinstance(k, Jet):
        n = len(k.shape)
        return k.transpose(tuple(range(n - 2)) + (n - 1, n - 2))
    return np.swapaxes(k, -1, -2)


def alt2(k):
    """Antisymmetric part of a (0,2) tensor, with the 1/2."""
    return (k - _swap_last2(k)) * 0.5


def sym2(k):
    """Symmetric part of a (0,2) tensor, with the 1/2."""
    return (k + _swap_last2(k)) * 0.5


def tensor_id(dim: int) -> np.ndarray:
    return np.eye(dim)


def standard_J(dim: int) -> np.ndarray:
    """Complex structure on real coordinates (x1, y1, x2, y2, ...): J dx = dy."""
    if dim % 2:
        raise TensorError("complex structure needs even dimension")
    J = np.zeros((dim, dim))
    for a in range(0, dim, 2):
        J[a + 1, a] = 1.0
        J[a, a + 1] = -1.0
    return J


def is_almost_complex(J, tol: float = 1e-8) -> bool:
    J = np.asarray(J.value if isinstance(J, Jet) else J)
    n = J.shape[-1]
    return bool(np.abs(np.einsum("...ij,...jk->...ik", J, J) + np.eye(n)).max() <= tol)


def wedge_lk(l, K):
    """(l ^ K)(X,Y)Z = l(X,Z) K Y - l(Y,Z) K X, stored as [out, X, Y, Z]."""
    t = ein("ik,mj->mijk", l, K)
    return t - ein("jk,mi->mijk", l, K)


def twist_J(k, J, tol: float | None = 1e-8):
    """k_J(X,Y) = k(X, JY)."""
    if tol is not None and not is_almost_complex(J, tol):
        raise TensorError("J does not square to -Id")
    return ein("im,mj->ij", k, J)


def pull_J(k, J):
    """(J*k)(X,Y) = k(JX, JY)."""
    return ein("ai,bj,ab->ij", J, J, k)


def _transpose_comp(T, axes, rank):
    """Permute the last ``rank`` (component) axes of an array or jet."""
    if isinstance(T, Jet):
        return T.transpose(tuple(axes))
    base = T.ndim - rank
    return np.transpose(T, tuple(range(base)) + tuple(base + a for a in axes))


def antisym_slots(T, slots, rank):
    """Antisymmetrise over component slots with 1/k! normalisation."""
    slots = list(slots)
    acc = None
    for perm in itertools.permutations(range(len(slots))):
        axes = list(range(rank))
        for k, q in enumerate(perm):
            axes[slots[k]] = slots[q]
        term = _transpose_comp(T, axes, rank) * float(_perm_sign(perm))
        acc = term if acc is None else acc + term
    return acc * (1.0 / math.factorial(len(slots)))


def compose_J(J, P, rank: int = 3):
    """Post-compose the first (output) slot with J: (J P)[m,...] = J[m,a] P[a,...]."""
    rest = _LETTERS[1:rank]
    return ein(f"za,a{rest}->z{rest}", J, P)


def end_wedge(P, p: int, Q, q: int):
    """Alt(P o Q) for endomorphism valued forms of degrees p and q.

    Normalised as an alternation (1/(p+q)! over all permutations), so that
    for one-forms (A ^ A)(X,Y) = (A_X A_Y - A_Y A_X)/2.
    """
    xs = _LETTERS[1:1 + p]
    ys = _LETTERS[1 + p:1 + p + q]
    raw = ein(f"z{xs}x,x{ys}y->z{xs}{ys}y", P, Q)
    return antisym_slots(raw, range(1, 1 + p + q), p + q + 2)


def end_bracket(P, p: int, Q, q: int):
    """Graded commutator P^Q - (-1)^{pq} Q^P of endomorphism valued forms.

    With the alternation normalisation of :func:`end_wedge` this gives
    [A,A](X,Y) = [A_X, A_Y] for a one-form A.
    """
    return end_wedge(P, p, Q, q) - end_wedge(Q, q, P, p) * float((-1) ** (p * q))


def bracket_AA(A):
    """[A,A](X,Y) = A_X A_Y - A_Y A_X, stored as [out, X, Y, in]."""
    t = ein("kim,mjl->kijl", A, A)
    return t - ein("kjm,mil->kijl", A, A)


def triple_bracket(A):
    """Nested commutator [A_X, [A_Y, A_Z]], stored as [out, X, Y, Z, in].

    The graded bracket of [A,A] with A vanishes identically for any
    endomorphism valued one-form (graded Jacobi identity), so the
    non-triviality witness is the nested commutator of the endomorphisms.
    """
    c = bracket_AA(A)  # [m, Y, Z, l]
    t = ein("kxm,myzl->kxyzl", A, c)
    return t - ein("myzl,lxn->mxyzn", c, A)


def gram_trace(B):
    """(Y,Z) -> Tr(B_Y B_Z)."""
    return ein("aib,bja->ij", B, B)


def wedge_one(gamma, T, up: int = 1, rank: int | None = None):
    """(gamma ^ T)(X,Y,...) = gamma(X) T(Y,...) - gamma(Y) T(X,...).

    ``T`` has ``up`` leading contravariant slots followed by the form slot
    that is wedged; the result gets one more form slot right after them.
    """
    if rank is None:
        if not isinstance(T, Jet):
            raise TensorError("rank is required for array input")
        rank = len(T.shape)
    ups = _LETTERS[:up]
    rest = _LETTERS[up + 1:rank]
    t = ein(f"z,{ups}y{rest}->{ups}zy{rest}", gamma, T)
    return t - _transpose_comp(t, _swap_list(rank + 1, up, up + 1), rank + 1)


def _swap_list(n, a, b):
    axes = list(range(n))
    axes[a], axes[b] = axes[b], axes[a]
    return axes


def tensor_product_id(k, K):
    """(k (x) K)(X,Y)Z = k(X,Y) K Z, stored as [out, X, Y, Z]."""
    return ein("ij,mk->mijk", k, K)
