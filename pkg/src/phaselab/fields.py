"""Differentiable scalar expression fields.

An :class:`ExpressionField` wraps a small expression tree over named real
variables and evaluates value, gradient and Hessian in one forward pass
(second-order forward-mode propagation).  Evaluation is vectorised over a
batch of points; gradients/Hessians are exact up to rounding, so finite
differences are needed only as a test oracle.

Nodes: constants, variables, +, -, *, /, integer powers, sin, cos, exp,
and a digamma intrinsic (with trigamma / tetragamma as its derivatives).
Hessians come out exactly symmetric because every product rule is written
as ``outer(a, b) + outer(b, a)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from math import factorial  # noqa: F401  (re-exported convenience for callers)

import numpy as np

from . import special
from .errors import ArityMismatch, DomainViolation, NonFinite

__all__ = [
    "Box", "ExpressionField", "evaluate_with_derivatives",
    "Const", "Var", "Add", "Sub", "Neg", "Mul", "Div", "Pow",
    "Sin", "Cos", "Exp", "Digamma",
    "add_all", "square", "is_sum_of_squares",
]


# ---------------------------------------------------------------------------
# derivative bookkeeping helpers (None stands for an identically-zero array)
# ---------------------------------------------------------------------------

def _madd(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _scale(factor, arr):
    if arr is None:
        return None
    return factor * arr


def _sym_outer(a, b):
    """outer(a,b) + outer(b,a), exactly symmetric."""
    if a is None or b is None:
        return None
    s = a[:, :, None] * b[:, None, :]
    return s + s.transpose(0, 2, 1)


def _outer_self(a):
    if a is None:
        return None
    return a[:, :, None] * a[:, None, :]


# ---------------------------------------------------------------------------
# expression nodes
# ---------------------------------------------------------------------------

class Node:
    __slots__ = ()

    def forward(self, pts, order):
        """Evaluate at pts (B, n). Returns (val (B,), grad (B,n)|None, hess (B,n,n)|None)."""
        raise NotImplementedError

    def children(self):
        return ()


class Const(Node):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = float(value)

    def forward(self, pts, order):
        return np.full(pts.shape[0], self.value), None, None


class Var(Node):
    __slots__ = ("index",)

    def __init__(self, index):
        self.index = int(index)

    def forward(self, pts, order):
        val = pts[:, self.index].copy()
        grad = None
        if order >= 1:
            grad = np.zeros_like(pts)
            grad[:, self.index] = 1.0
        return val, grad, None


class Add(Node):
    __slots__ = ("terms",)

    def __init__(self, *terms):
        if len(terms) < 2:
            raise ValueError("Add needs at least two terms")
        self.terms = tuple(terms)

    def children(self):
        return self.terms

    def forward(self, pts, order):
        val, grad, hess = self.terms[0].forward(pts, order)
        for t in self.terms[1:]:
            v, g, h = t.forward(pts, order)
            val = val + v
            grad = _madd(grad, g)
            hess = _madd(hess, h)
        return val, grad, hess


class Sub(Node):
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a, self.b = a, b

    def children(self):
        return (self.a, self.b)

    def forward(self, pts, order):
        va, ga, ha = self.a.forward(pts, order)
        vb, gb, hb = self.b.forward(pts, order)
        return va - vb, _madd(ga, _scale(-1.0, gb)), _madd(ha, _scale(-1.0, hb))


class Neg(Node):
    __slots__ = ("a",)

    def __init__(self, a):
        self.a = a

    def children(self):
        return (self.a,)

    def forward(self, pts, order):
        v, g, h = self.a.forward(pts, order)
        return -v, _scale(-1.0, g), _scale(-1.0, h)


class Mul(Node):
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a, self.b = a, b

    def children(self):
        return (self.a, self.b)

    def forward(self, pts, order):
        va, ga, ha = self.a.forward(pts, order)
        vb, gb, hb = self.b.forward(pts, order)
        val = va * vb
        grad = hess = None
        if order >= 1:
            grad = _madd(_scale(vb[:, None], ga), _scale(va[:, None], gb))
        if order >= 2:
            hess = _madd(_scale(vb[:, None, None], ha), _scale(va[:, None, None], hb))
            hess = _madd(hess, _sym_outer(ga, gb))
        return val, grad, hess


class Div(Node):
    """Quotient with a guarded denominator.

    ``guard`` declares an exclusion radius around zero: evaluating with
    |denominator| <= guard raises DomainViolation instead of returning
    inf/nan.  Builders set it from their domain cuts.
    """

    __slots__ = ("a", "b", "guard")

    def __init__(self, a, b, guard=1e-300):
        self.a, self.b = a, b
        self.guard = float(guard)

    def children(self):
        return (self.a, self.b)

    def forward(self, pts, order):
        va, ga, ha = self.a.forward(pts, order)
        vb, gb, hb = self.b.forward(pts, order)
        if np.any(np.abs(vb) <= self.guard):
            raise DomainViolation(
                f"division guard hit: |denominator| <= {self.guard:g}")
        val = va / vb
        grad = hess = None
        if order >= 1:
            grad = _scale(1.0 / vb[:, None],
                          _madd(ga, _scale(-val[:, None], gb)))
        if order >= 2:
            hess = _madd(ha, _scale(-val[:, None, None], hb))
            hess = _madd(hess, _scale(-1.0, _sym_outer(grad, gb)))
            hess = _scale(1.0 / vb[:, None, None], hess)
        return val, grad, hess


class Pow(Node):
    """Integer power with exponent >= 0."""

    __slots__ = ("a", "exponent")

    def __init__(self, a, exponent):
        k = int(exponent)
        if k != exponent or k < 0:
            raise ValueError("Pow exponent must be a nonnegative integer")
        self.a = a
        self.exponent = k

    def children(self):
        return (self.a,)

    def forward(self, pts, order):
        k = self.exponent
        if k == 0:
            return np.ones(pts.shape[0]), None, None
        v, g, h = self.a.forward(pts, order)
        val = v ** k
        fp = k * v ** (k - 1) if k >= 1 else None
        fpp = float(k * (k - 1)) * v ** (k - 2) if k >= 2 else None
        return _chain(v, g, h, val, fp, fpp, order)


class Sin(Node):
    __slots__ = ("a",)

    def __init__(self, a):
        self.a = a

    def children(self):
        return (self.a,)

    def forward(self, pts, order):
        v, g, h = self.a.forward(pts, order)
        return _chain(v, g, h, np.sin(v), np.cos(v), -np.sin(v), order)


class Cos(Node):
    __slots__ = ("a",)

    def __init__(self, a):
        self.a = a

    def children(self):
        return (self.a,)

    def forward(self, pts, order):
        v, g, h = self.a.forward(pts, order)
        return _chain(v, g, h, np.cos(v), -np.sin(v), -np.cos(v), order)


class Exp(Node):
    __slots__ = ("a",)

    def __init__(self, a):
        self.a = a

    def children(self):
        return (self.a,)

    def forward(self, pts, order):
        v, g, h = self.a.forward(pts, order)
        e = np.exp(v)
        return _chain(v, g, h, e, e, e, order)


class Digamma(Node):
    __slots__ = ("a",)

    def __init__(self, a):
        self.a = a

    def children(self):
        return (self.a,)

    def forward(self, pts, order):
        v, g, h = self.a.forward(pts, order)
        val = special.digamma(v)
        fp = special.trigamma(v) if order >= 1 else None
        fpp = special.tetragamma(v) if order >= 2 else None
        return _chain(v, g, h, val, fp, fpp, order)


def _chain(v, g, h, fval, fp, fpp, order):
    """Compose f(u) given u's value/grad/hess and f, f', f'' at u."""
    grad = hess = None
    if order >= 1:
        grad = _scale(fp[:, None], g) if g is not None else None
    if order >= 2:
        hess = _scale(fp[:, None, None], h) if h is not None else None
        if g is not None:
            hess = _madd(hess, _scale(fpp[:, None, None], _outer_self(g)))
    return fval, grad, hess


# ---------------------------------------------------------------------------
# convenience constructors and structural checks
# ---------------------------------------------------------------------------

def add_all(terms):
    """Sum a list of nodes (returns the single node unchanged for length 1)."""
    terms = list(terms)
    if not terms:
        return Const(0.0)
    if len(terms) == 1:
        return terms[0]
    return Add(*terms)


def square(node):
    return Pow(node, 2)


def is_sum_of_squares(node):
    """True if the tree is structurally a nonnegative combination of even powers."""
    if isinstance(node, Add):
        return all(is_sum_of_squares(t) for t in node.terms)
    if isinstance(node, Pow):
        return node.exponent >= 2 and node.exponent % 2 == 0
    if isinstance(node, Mul):
        a, b = node.a, node.b
        if isinstance(a, Const) and a.value >= 0.0:
            return is_sum_of_squares(b)
        if isinstance(b, Const) and b.value >= 0.0:
            return is_sum_of_squares(a)
        return False
    if isinstance(node, Const):
        return node.value >= 0.0
    return False


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Axis-aligned product of closed intervals.

    ``exclude_zero[i]`` documents that the i-th interval was cut away from
    the origin (as the m, n denominators always are); construction rejects
    a flagged interval that still straddles zero.
    """

    lows: tuple
    highs: tuple
    exclude_zero: tuple = ()

    def __post_init__(self):
        lows = tuple(float(v) for v in self.lows)
        highs = tuple(float(v) for v in self.highs)
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)
        if len(lows) != len(highs):
            raise ValueError("lows/highs length mismatch")
        ez = self.exclude_zero or tuple(False for _ in lows)
        object.__setattr__(self, "exclude_zero", tuple(bool(b) for b in ez))
        if len(self.exclude_zero) != len(lows):
            raise ValueError("exclude_zero length mismatch")
        for i, (lo, hi) in enumerate(zip(lows, highs)):
            if not lo < hi:
                raise ValueError(f"interval {i} empty: [{lo}, {hi}]")
            if self.exclude_zero[i] and lo <= 0.0 <= hi:
                raise ValueError(f"interval {i} flagged zero-free but contains 0")

    @property
    def dim(self):
        return len(self.lows)

    @property
    def lows_array(self):
        return np.asarray(self.lows)

    @property
    def highs_array(self):
        return np.asarray(self.highs)

    def widths(self):
        return self.highs_array - self.lows_array

    def diameter(self):
        return float(np.linalg.norm(self.widths()))

    def volume(self):
        return float(np.prod(self.widths()))

    def contains(self, pts, margin=0.0):
        """Boolean mask; margin > 0 demands strict interiority by that amount."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        lo = self.lows_array + margin
        hi = self.highs_array - margin
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def grid(self, density):
        """Cell-centre tensor grid with `density` points per dimension."""
        axes = [lo + (np.arange(density) + 0.5) * (hi - lo) / density
                for lo, hi in zip(self.lows, self.highs)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def sample(self, rng, count, inset=0.0):
        """Uniform interior sample; inset is a fraction of each width kept clear."""
        lo = self.lows_array + inset * self.widths()
        hi = self.highs_array - inset * self.widths()
        return rng.uniform(lo, hi, size=(count, self.dim))


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

_CHUNK_FLOAT_BUDGET = 4_000_000


class ExpressionField:
    """Immutable differentiable scalar function of `arity` named variables."""

    def __init__(self, root, names, box=None):
        self.root = root
        self.names = tuple(str(n) for n in names)
        self.box = box
        if box is not None and box.dim != self.arity:
            raise ArityMismatch(
                f"box dimension {box.dim} != field arity {self.arity}")

    @property
    def arity(self):
        return len(self.names)

    def evaluate(self, points, order=0, check=False):
        """Batched evaluation.

        points: (B, arity) array (a bare (arity,) vector is promoted).
        Returns (val (B,), grad (B,n)|None, hess (B,n,n)|None); with
        check=True enforces the declared box and finiteness.
        """
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.arity:
            raise ArityMismatch(
                f"point dimension {pts.shape[1]} != arity {self.arity}")
        if check and self.box is not None:
            ok = self.box.contains(pts)
            if not np.all(ok):
                bad = pts[~ok][0]
                raise DomainViolation(f"point {bad.tolist()} outside declared box")
        n = self.arity
        per_point = 1 + (n if order >= 1 else 0) + (n * n if order >= 2 else 0)
        chunk = max(256, _CHUNK_FLOAT_BUDGET // (per_point * 8))
        if pts.shape[0] <= chunk:
            val, grad, hess = self._forward_dense(pts, order)
        else:
            vals, grads, hesss = [], [], []
            for start in range(0, pts.shape[0], chunk):
                v, g, h = self._forward_dense(pts[start:start + chunk], order)
                vals.append(v)
                grads.append(g)
                hesss.append(h)
            val = np.concatenate(vals)
            grad = np.concatenate(grads) if order >= 1 else None
            hess = np.concatenate(hesss) if order >= 2 else None
        if check:
            for arr in (val, grad, hess):
                if arr is not None and not np.all(np.isfinite(arr)):
                    raise NonFinite("evaluation produced non-finite values")
        if single:
            return (val[0],
                    grad[0] if grad is not None else None,
                    hess[0] if hess is not None else None)
        return val, grad, hess

    def _forward_dense(self, pts, order):
        val, grad, hess = self.root.forward(pts, order)
        B, n = pts.shape
        if order >= 1 and grad is None:
            grad = np.zeros((B, n))
        if order >= 2 and hess is None:
            hess = np.zeros((B, n, n))
        return val, grad, hess

    def value(self, points):
        return self.evaluate(points, order=0)[0]

    def rename(self, names):
        return ExpressionField(self.root, names, self.box)

    def with_box(self, box):
        return ExpressionField(self.root, self.names, box)


def evaluate_with_derivatives(field, point, order=0):
    """Value / exact gradient / exact symmetric Hessian at a single point.

    order 0 -> (value, None, None); order 1 adds the gradient; order 2 adds
    the Hessian.  Enforces the field's declared box and finiteness.
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    val, grad, hess = field.evaluate(np.asarray(point, dtype=float),
                                     order=order, check=True)
    return val, grad, hess


def remap_variables(node, index_map):
    """Copy a tree with every Var index translated through index_map."""
    if isinstance(node, Var):
        return Var(index_map[node.index])
    if isinstance(node, Const):
        return Const(node.value)
    kids = [remap_variables(c, index_map) for c in node.children()]
    if isinstance(node, Add):
        return Add(*kids)
    if isinstance(node, Sub):
        return Sub(*kids)
    if isinstance(node, Neg):
        return Neg(*kids)
    if isinstance(node, Mul):
        return Mul(*kids)
    if isinstance(node, Div):
        return Div(kids[0], kids[1], node.guard)
    if isinstance(node, Pow):
        return Pow(kids[0], node.exponent)
    if isinstance(node, Sin):
        return Sin(*kids)
    if isinstance(node, Cos):
        return Cos(*kids)
    if isinstance(node, Exp):
        return Exp(*kids)
    if isinstance(node, Digamma):
        return Digamma(*kids)
    raise TypeError(f"unknown node type {type(node).__name__}")
