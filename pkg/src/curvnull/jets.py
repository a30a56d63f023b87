"""Truncated multivariate Taylor (jet) arithmetic.

A jet stores the Taylor coefficients of a smooth function at a point, for
all monomials of total degree <= order, in dense graded-lexicographic
layout.  Grading first means the coefficients of a lower-order jet are a
prefix of the higher-order layout, so truncation is a slice.

Arithmetic is exact truncation: for polynomial inputs of degree <= order
every coefficient is exact up to machine rounding.  Univariate functions
(exp, log, sin, cos, 1/x) are applied by composing their Taylor series
with the nilpotent part of the jet.
"""

import math
from functools import lru_cache

import numpy as np


class JetShapeError(ValueError):
    """Operands live in different jet spaces (order/nvars mismatch)."""


class JetDomainError(ValueError):
    """Constant term outside the domain of the requested function."""


class DegenerateFieldError(ValueError):
    """Field parameters make the field identically degenerate."""


def _monomials(nvars, order):
    """All exponent tuples with total degree <= order, graded-lex order."""
    out = []
    for deg in range(order + 1):
        def rec(prefix, remaining, slots):
            if slots == 1:
                out.append(tuple(prefix) + (remaining,))
                return
            for k in range(remaining, -1, -1):
                rec(prefix + [k], remaining - k, slots - 1)
        rec([], deg, nvars)
    return out


class JetSpace:
    """Shared tables for jets with a fixed (nvars, order)."""

    def __init__(self, nvars, order):
        if nvars < 1 or order < 0:
            raise ValueError(f"invalid jet space ({nvars}, {order})")
        self.nvars = nvars
        self.order = order
        self.monomials = _monomials(nvars, order)
        self.ncoeff = len(self.monomials)
        self.index = {m: i for i, m in enumerate(self.monomials)}
        self.degree = np.array([sum(m) for m in self.monomials])
        # sizes of the order-<=k prefixes, used for truncation slices
        self.prefix_size = [int(np.sum(self.degree <= k)) for k in range(order + 1)]
        self._build_mul_table()
        self._build_diff_maps()

    def _build_mul_table(self):
        ii, jj, kk = [], [], []
        for i, a in enumerate(self.monomials):
            da = sum(a)
            for j, b in enumerate(self.monomials):
                if da + sum(b) > self.order:
                    continue
                ii.append(i)
                jj.append(j)
                kk.append(self.index[tuple(x + y for x, y in zip(a, b))])
        self.mul_i = np.array(ii, dtype=np.intp)
        self.mul_j = np.array(jj, dtype=np.intp)
        self.mul_k = np.array(kk, dtype=np.intp)

    def _build_diff_maps(self):
        # d/dx_a maps coeff(alpha) -> alpha_a * coeff at alpha - e_a, one order down
        self.diff_src = []
        self.diff_dst = []
        self.diff_fac = []
        for a in range(self.nvars):
            src, dst, fac = [], [], []
            for i, m in enumerate(self.monomials):
                if m[a] == 0:
                    continue
                lower = tuple(x - (1 if b == a else 0) for b, x in enumerate(m))
                src.append(i)
                dst.append(self.index[lower])
                fac.append(float(m[a]))
            self.diff_src.append(np.array(src, dtype=np.intp))
            self.diff_dst.append(np.array(dst, dtype=np.intp))
            self.diff_fac.append(np.array(fac))

    def mul_coeffs(self, a, b):
        """Coefficient arrays (..., ncoeff) -> truncated product."""
        lead = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
        prod = a[..., self.mul_i] * b[..., self.mul_j]
        out = np.zeros(lead + (self.ncoeff,))
        if lead:
            flat = out.reshape(-1, self.ncoeff)
            np.add.at(flat, (slice(None), self.mul_k), prod.reshape(-1, len(self.mul_k)))
            return flat.reshape(lead + (self.ncoeff,))
        np.add.at(out, self.mul_k, prod)
        return out

    def diff_coeffs(self, c, var):
        """Derivative along chart variable `var`; result lives one order down."""
        lower = jet_space(self.nvars, self.order - 1)
        out = np.zeros(c.shape[:-1] + (lower.ncoeff,))
        out[..., self.diff_dst[var]] = self.diff_fac[var] * c[..., self.diff_src[var]]
        return out


@lru_cache(maxsize=None)
def jet_space(nvars, order):
    return JetSpace(nvars, order)


class Jet:
    """Taylor expansion of a scalar function at a point, truncated at `order`."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space, coeffs):
        self.space = space
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.coeffs.shape != (space.ncoeff,):
            raise JetShapeError(
                f"coefficient array of length {self.coeffs.shape} does not match "
                f"space with {space.ncoeff} monomials")

    # ---- constructors -------------------------------------------------
    @classmethod
    def constant(cls, value, nvars, order):
        sp = jet_space(nvars, order)
        c = np.zeros(sp.ncoeff)
        c[0] = value
        return cls(sp, c)

    @classmethod
    def variable(cls, var, value, nvars, order):
        """Jet of the coordinate function x_var at a point where x_var = value."""
        sp = jet_space(nvars, order)
        c = np.zeros(sp.ncoeff)
        c[0] = value
        if order >= 1:
            e = tuple(1 if a == var else 0 for a in range(nvars))
            c[sp.index[e]] = 1.0
        return cls(sp, c)

    # ---- basic accessors ----------------------------------------------
    @property
    def order(self):
        return self.space.order

    @property
    def nvars(self):
        return self.space.nvars

    @property
    def value(self):
        return float(self.coeffs[0])

    def derivative_value(self, alpha):
        """Value of the mixed partial d^alpha f, i.e. coeff(alpha) * alpha!."""
        alpha = tuple(alpha)
        if sum(alpha) > self.order:
            raise JetShapeError(f"derivative {alpha} exceeds jet order {self.order}")
        fac = 1.0
        for k in alpha:
            fac *= math.factorial(k)
        return float(self.coeffs[self.space.index[alpha]]) * fac

    def truncate(self, order):
        if order > self.order:
            raise JetShapeError(f"cannot extend order {self.order} jet to {order}")
        if order == self.order:
            return self
        sp = jet_space(self.nvars, order)
        return Jet(sp, self.coeffs[: sp.ncoeff].copy())

    def diff(self, var):
        if self.order == 0:
            raise JetShapeError("cannot differentiate an order-0 jet")
        lower = jet_space(self.nvars, self.order - 1)
        return Jet(lower, self.space.diff_coeffs(self.coeffs, var))

    # ---- arithmetic ----------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise JetShapeError(
                    f"jet spaces differ: ({self.nvars},{self.order}) vs "
                    f"({other.nvars},{other.order})")
            return other
        return Jet.constant(float(other), self.nvars, self.order)

    def __add__(self, other):
        other = self._coerce(other)
        return Jet(self.space, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return Jet(self.space, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.coeffs * float(other))
        other = self._coerce(other)
        return Jet(self.space, self.space.mul_coeffs(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.coeffs / float(other))
        return self * jet_reciprocal(other)

    def __rtruediv__(self, other):
        return jet_reciprocal(self) * float(other)

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, order={self.order}, value={self.value:.6g})"


def apply_univariate(jet, taylor_coeffs):
    """Compose a univariate series with a jet.

    taylor_coeffs[r] must be f^(r)(c)/r! where c is the jet's constant term.
    Evaluated by Horner's rule in the nilpotent part of the jet.
    """
    h = Jet(jet.space, jet.coeffs.copy())
    h.coeffs[0] = 0.0
    out = Jet.constant(taylor_coeffs[jet.order], jet.nvars, jet.order)
    for r in range(jet.order - 1, -1, -1):
        out = out * h + taylor_coeffs[r]
    return out


def jet_exp(jet):
    e = math.exp(jet.value)
    coeffs = [e / math.factorial(r) for r in range(jet.order + 1)]
    return apply_univariate(jet, coeffs)


def jet_log(jet):
    c = jet.value
    if c <= 0.0:
        raise JetDomainError(f"log of jet with nonpositive constant term {c}")
    coeffs = [math.log(c)]
    for r in range(1, jet.order + 1):
        coeffs.append((-1.0) ** (r - 1) / (r * c ** r))
    return apply_univariate(jet, coeffs)


def jet_reciprocal(jet):
    c = jet.value
    if abs(c) < 1e-300:
        raise JetDomainError("reciprocal of jet with zero constant term")
    coeffs = [(-1.0) ** r / c ** (r + 1) for r in range(jet.order + 1)]
    return apply_univariate(jet, coeffs)


def jet_sin(jet):
    c = jet.value
    cyc = [math.sin(c), math.cos(c), -math.sin(c), -math.cos(c)]
    coeffs = [cyc[r % 4] / math.factorial(r) for r in range(jet.order + 1)]
    return apply_univariate(jet, coeffs)


def jet_cos(jet):
    c = jet.value
    cyc = [math.cos(c), -math.sin(c), -math.cos(c), math.sin(c)]
    coeffs = [cyc[r % 4] / math.factorial(r) for r in range(jet.order + 1)]
    return apply_univariate(jet, coeffs)


_JET_OPS = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "scale": lambda a, s: a * float(s),
    "reciprocal": lambda a, _: jet_reciprocal(a),
    "exp": lambda a, _: jet_exp(a),
    "log": lambda a, _: jet_log(a),
    "sin": lambda a, _: jet_sin(a),
    "cos": lambda a, _: jet_cos(a),
}


def jet_arith(a, op, b=None):
    """Dispatch pointwise jet operations by name.

    Binary ops (add/sub/mul) take two jets; scale takes a jet and a float;
    the unary ops ignore `b`.
    """
    if op not in _JET_OPS:
        raise ValueError(f"unknown jet operation {op!r}")
    return _JET_OPS[op](a, b)


def eval_f_jet(c1, c2, a, t0, order):
    """Jet of f(t) = c1*e^(a t) + c2*e^(-a t) at t0, univariate.

    All derivatives are closed-form: f^(r) = c1 a^r e^(a t) + c2 (-a)^r e^(-a t).
    Requires c1, c2 >= 0, a > 0 and c1 + c2 > 0 (otherwise log f is undefined
    downstream).
    """
    if c1 < 0 or c2 < 0:
        raise ValueError("c1 and c2 must be nonnegative")
    if a <= 0:
        raise ValueError("a must be positive")
    if c1 + c2 == 0:
        raise DegenerateFieldError("c1 = c2 = 0 makes f identically zero")
    ep = c1 * math.exp(a * t0)
    em = c2 * math.exp(-a * t0)
    sp = jet_space(1, order)
    coeffs = np.array([(ep * a ** r + em * (-a) ** r) / math.factorial(r)
                       for r in range(order + 1)])
    return Jet(sp, coeffs)


def coordinate_jets(point, order):
    """Jets of all chart coordinate functions at `point`."""
    point = np.asarray(point, dtype=float)
    n = point.shape[0]
    return [Jet.variable(a, point[a], n, order) for a in range(n)]


class ScalarField:
    """Scalar field on a chart with exact jets at every point.

    `fn` maps the list of coordinate jets at a point to the jet of the field
    there; evaluation at order k restricted to order k-1 agrees with the
    order-(k-1) evaluation because all operations are exact truncations.
    """

    def __init__(self, nvars, fn):
        self.nvars = nvars
        self._fn = fn

    def jet(self, point, order):
        point = np.asarray(point, dtype=float)
        if point.shape != (self.nvars,):
            raise JetShapeError(f"point of shape {point.shape} on a {self.nvars}-var chart")
        return self._fn(coordinate_jets(point, order))

    def __call__(self, coord_jets):
        return self._fn(coord_jets)

    def value(self, point):
        return self.jet(point, 0).value

    @classmethod
    def constant(cls, value, nvars):
        return cls(nvars, lambda xs: Jet.constant(value, nvars, xs[0].order))

    @classmethod
    def coordinate(cls, var, nvars):
        return cls(nvars, lambda xs: xs[var])

    # field algebra: closures over the jet operations
    def _binary(self, other, op):
        if isinstance(other, ScalarField):
            return ScalarField(self.nvars, lambda xs: op(self._fn(xs), other._fn(xs)))
        return ScalarField(self.nvars, lambda xs: op(self._fn(xs), other))

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.nvars, lambda xs: -self._fn(xs))

    def reciprocal(self):
        return ScalarField(self.nvars, lambda xs: jet_reciprocal(self._fn(xs)))


class JetArr:
    """Array of jets sharing one space; coefficients on the trailing axis."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space, coeffs):
        self.space = space
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.coeffs.shape[-1] != space.ncoeff:
            raise JetShapeError("trailing axis does not match the jet space")

    @classmethod
    def zeros(cls, shape, nvars, order):
        sp = jet_space(nvars, order)
        return cls(sp, np.zeros(tuple(shape) + (sp.ncoeff,)))

    @classmethod
    def from_jets(cls, jets):
        """Stack a nested list structure of same-space jets."""
        flat = []

        def walk(obj):
            if isinstance(obj, Jet):
                flat.append(obj)
                return None
            return [walk(x) for x in obj]

        walk(jets)
        sp = flat[0].space
        for j in flat:
            if j.space is not sp:
                raise JetShapeError("jets in a JetArr must share one space")

        def shape_of(obj):
            if isinstance(obj, Jet):
                return ()
            return (len(obj),) + shape_of(obj[0])

        shape = shape_of(jets)
        coeffs = np.stack([j.coeffs for j in flat]).reshape(shape + (sp.ncoeff,))
        return cls(sp, coeffs)

    @property
    def shape(self):
        return self.coeffs.shape[:-1]

    @property
    def order(self):
        return self.space.order

    @property
    def values(self):
        return self.coeffs[..., 0]

    def jet(self, idx):
        return Jet(self.space, self.coeffs[idx].copy())

    def truncate(self, order):
        if order == self.order:
            return self
        sp = jet_space(self.space.nvars, order)
        return JetArr(sp, self.coeffs[..., : sp.ncoeff].copy())

    def diff(self, var):
        lower = jet_space(self.space.nvars, self.order - 1)
        return JetArr(lower, self.space.diff_coeffs(self.coeffs, var))

    def _coerce(self, other):
        if isinstance(other, Jet):
            other = JetArr(other.space, other.coeffs)
        if isinstance(other, JetArr):
            if other.space is not self.space:
                raise JetShapeError("jet spaces differ")
            return other
        c = np.zeros(self.space.ncoeff)
        c[0] = float(other)
        return JetArr(self.space, c)

    def __add__(self, other):
        other = self._coerce(other)
        return JetArr(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        other = self._coerce(other)
        return JetArr(self.space, self.coeffs - other.coeffs)

    def __neg__(self):
        return JetArr(self.space, -self.coeffs)

    def __mul__(self, other):
        other = self._coerce(other)
        return JetArr(self.space, self.space.mul_coeffs(self.coeffs, other.coeffs))
