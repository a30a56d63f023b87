"""Infinitesimal holonomy of the deformed almost-abelian metrics.

The holonomy algebra at the basepoint is generated by the curvature
2-forms and their iterated covariant differentials, identified with skew
endomorphisms through u ^ v -> <u,.> v - <v,.> u.  Differentials are
computed over the chart with multivariate jets rather than by symbolic
recursion, so the check stays independent of the inductive argument it is
meant to verify.

Two derivative towers are kept:

* the full covariant differential (one extra argument slot per order),
  whose slices over all arguments generate the infinitesimal holonomy;
* the directional iterate along the deformed unit vertical field, which is
  what the leading-term claims quantify over.
"""

from dataclasses import dataclass, field

import numpy as np

from .frames import FrameEval
from .jets import JetArr


class OrderExhaustedError(RuntimeError):
    """The jet budget of the evaluation context cannot support another
    covariant differential."""


def wedge(u, v):
    """u ^ v as a skew matrix: (u ^ v) z = <u,z> v - <v,z> u."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.outer(v, u) - np.outer(u, v)


# --------------------------------------------------------------------------
# cyclicity of the deformation direction
# --------------------------------------------------------------------------

@dataclass
class CyclicityReport:
    cyclic: bool
    krylov_rank: int
    multiplicity_free: bool
    repeated_weights: list
    zero_blocks: list
    block_projections: list

    def __bool__(self):
        return self.cyclic


def is_cyclic(spec, tol=1e-12):
    """Whether Z is a cyclic vector for the infinitesimal rotation action.

    Algebraic test: the weights are pairwise different in absolute value
    and Z has a nonzero component in every rotation block.  The Krylov rank
    of {Z, AZ, ..., A^{m-1} Z} is reported as an independent cross-check
    (it equals m exactly when the algebraic test passes).
    """
    absw = [abs(w) for w in spec.weights]
    repeated = sorted({w for w in absw if absw.count(w) > 1})
    projections = [float(np.linalg.norm(spec.z[2 * b: 2 * b + 2]))
                   for b in range(len(spec.weights))]
    zero_blocks = [b for b, p in enumerate(projections) if p <= tol]
    cols = []
    v = spec.z.copy()
    for _ in range(spec.m):
        cols.append(v.copy())
        v = spec.drho @ v
    svals = np.linalg.svd(np.column_stack(cols), compute_uv=False)
    rank = int(np.sum(svals > 1e-9 * svals[0]))
    mult_free = not repeated
    return CyclicityReport(
        cyclic=mult_free and not zero_blocks,
        krylov_rank=rank,
        multiplicity_free=mult_free,
        repeated_weights=repeated,
        zero_blocks=zero_blocks,
        block_projections=projections,
    )


# --------------------------------------------------------------------------
# covariant differentials at the basepoint
# --------------------------------------------------------------------------

@dataclass
class CovDerivTensorJet:
    """Components of the k-th covariant differential of the curvature at the
    basepoint, as a (k+4)-argument array in the deformed orthonormal frame.
    The leading k slots are the derivative directions."""

    order: int
    values: np.ndarray
    jets: JetArr = field(repr=False)

    def end_slice(self, i, j):
        """Skew matrix of the 2-form in curvature slots (i, j), derivative
        slots fixed by leading indices of `values` already taken."""
        return self.values[..., i, j, :, :]


class DeformedContext:
    """Jet evaluation context of a deformed model at its basepoint.

    `max_order` covariant differentials of the curvature are supported;
    going further raises OrderExhaustedError naming the needed budget.
    """

    def __init__(self, model, max_order):
        self.model = model
        self.max_order = max_order
        self.ev = FrameEval(model.frame, model.basepoint, max_order + 2)

    def curvature(self):
        rj = self.ev.curvature_jets()
        return CovDerivTensorJet(0, rj.values.copy(), rj)

    def gamma_values(self):
        return self.ev.gammajets.values


def covariant_differential(s, ctx):
    """One more covariant differential (full, one extra argument slot)."""
    if s.jets.order == 0:
        raise OrderExhaustedError(
            f"jet budget exhausted at differential order {s.order}; rebuild the "
            f"context with max_order >= {s.order + 1}")
    nj = ctx.ev.covariant_differential(s.jets)
    return CovDerivTensorJet(s.order + 1, nj.values.copy(), nj)


def directional_tower(ctx, kmax):
    """Iterated derivatives along the deformed unit vertical field
    (frame index 0): D_0 = R, D_{k+1} = nabla_vertical D_k, all valence 4."""
    if kmax > ctx.max_order:
        raise OrderExhaustedError(
            f"directional tower to order {kmax} needs a context with "
            f"max_order >= {kmax}")
    d = [ctx.ev.curvature_jets()]
    for _ in range(kmax):
        d.append(ctx.ev.directional_derivative(d[-1], ctx.model.v_index))
    return d


# --------------------------------------------------------------------------
# Lie closure
# --------------------------------------------------------------------------

def _orthonormal_span(mats, tol):
    stack = np.array([m.reshape(-1) for m in mats])
    if stack.size == 0:
        return np.zeros((0,) + mats[0].shape if mats else (0, 0, 0))
    _, svals, vt = np.linalg.svd(stack, full_matrices=False)
    if svals.size == 0 or svals[0] == 0.0:
        return np.zeros((0,) + mats[0].shape)
    keep = svals > tol * svals[0]
    n = mats[0].shape[0]
    return vt[keep].reshape(-1, n, n)


def lie_closure(generators, tol=1e-9):
    """Smallest Lie algebra of skew matrices containing the generators.

    Iterated bracketing with rank-revealing orthonormalisation; terminates
    when one full pass adds no dimension.  Deterministic for a fixed
    generator order.
    """
    gens = [np.asarray(g, dtype=float) for g in generators]
    basis = _orthonormal_span(gens, tol)
    while True:
        dim = basis.shape[0]
        brackets = [basis[i] @ basis[j] - basis[j] @ basis[i]
                    for i in range(dim) for j in range(i + 1, dim)]
        basis = _orthonormal_span(list(basis) + brackets, tol)
        if basis.shape[0] == dim:
            return basis


@dataclass
class HolonomyAlgebra:
    """Basis of the computed infinitesimal holonomy algebra at the basepoint."""

    generators: list
    basis: np.ndarray          # (dim, n, n) orthonormal skew matrices
    dim: int
    dims_by_order: list        # closure dimension using generators up to each order
    xi_tower_dim: int          # same, restricted to the directional (xi~, Z) tower

    def skew_residual(self):
        return max((float(np.max(np.abs(b + b.T))) for b in self.basis), default=0.0)

    def bracket_closure_residual(self):
        """Max component of any basis bracket outside the span."""
        if self.dim == 0:
            return 0.0
        flat = self.basis.reshape(self.dim, -1)
        worst = 0.0
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                br = (self.basis[i] @ self.basis[j] - self.basis[j] @ self.basis[i]).reshape(-1)
                rem = br - flat.T @ (flat @ br)
                worst = max(worst, float(np.max(np.abs(rem))))
        return worst


def _slices_to_generators(values, n):
    """All 2-form slices of a differential tensor as skew matrices."""
    lead = values.shape[:-4]
    flat = values.reshape((-1,) + values.shape[-4:])
    out = []
    for block in flat:
        for i in range(n):
            for j in range(i + 1, n):
                out.append(block[i, j].T.copy())
    return out


def infinitesimal_holonomy(model, max_order=None, tol=1e-9, ctx=None):
    """Lie algebra generated by curvature and its covariant differentials.

    Collects every 2-form slice of nabla^k R for k <= max_order (default
    m - 1) and closes under brackets until the dimension is stable.  The
    dimension reached by the directional (xi~, Z) tower alone is reported
    alongside, since the two generator sets could a priori grow at
    different speeds.
    """
    m = model.spec.m
    if max_order is None:
        max_order = m - 1
    if max_order < m - 1:
        raise ValueError(f"max_order must be at least m - 1 = {m - 1}")
    n = m + 1
    if ctx is None or ctx.max_order < max_order:
        ctx = DeformedContext(model, max_order)
    gens_by_order = []
    tensor = ctx.curvature()
    gens_by_order.append(_slices_to_generators(tensor.values, n))
    for _ in range(max_order):
        tensor = covariant_differential(tensor, ctx)
        gens_by_order.append(_slices_to_generators(tensor.values, n))

    dims_by_order = []
    acc = []
    basis = None
    for gens in gens_by_order:
        acc.extend(gens)
        basis = lie_closure(acc, tol)
        dims_by_order.append(basis.shape[0])

    zvec = model.z_frame_vector()
    dtow = directional_tower(ctx, max_order)
    xi_gens = [np.einsum("c,cpq->qp", zvec, d.values[model.v_index]) for d in dtow]
    xi_dim = lie_closure(xi_gens, tol).shape[0]

    return HolonomyAlgebra(
        generators=acc,
        basis=basis,
        dim=int(basis.shape[0]),
        dims_by_order=dims_by_order,
        xi_tower_dim=int(xi_dim),
    )


# --------------------------------------------------------------------------
# leading-term claims for the directional tower
# --------------------------------------------------------------------------

@dataclass
class ClaimsReport:
    order: int
    vertical_leading: float    # (xi~, Z) slice minus a^2 xi~ ^ T^k Z, outside order < k
    vertical_zperp: float      # (xi~, X) slices, X in Z-perp, outside order < k
    horizontal: float          # (X, Y) slices, outside order < k

    @property
    def max_residual(self):
        return max(self.vertical_leading, self.vertical_zperp, self.horizontal)


def claims_leading_term(model, k, ctx=None):
    """Check the leading-term structure of the k-th vertical derivative.

    nabla^k R(xi~, Z) must equal a^2 (xi~ ^ T^k Z) up to decomposable terms
    of order < k, i.e. terms inside Lambda^2 span{xi~, Z, ..., T^{k-1} Z};
    the (xi~, X) slices for X orth. to Z and the (X, Y) slices must consist
    of such terms only.  T is the infinitesimal rotation of the deformed
    unit vertical at the basepoint.
    """
    spec = model.spec
    m = spec.m
    if k > m - 1:
        raise ValueError(f"claims are checked for k <= m - 1 = {m - 1}")
    if ctx is None or ctx.max_order < k:
        ctx = DeformedContext(model, k)
    vals = directional_tower(ctx, k)[k].values
    n = m + 1
    f0 = spec.c1 + spec.c2   # f at the basepoint (t = 0)
    tmat = spec.drho / f0

    def embed(v):
        out = np.zeros(n)
        out[1:] = v
        return out

    flag = [np.eye(n)[0]]
    w = spec.z.copy()
    for _ in range(k):
        flag.append(embed(w))
        w = tmat @ w
    top = embed(w)            # T^k Z
    q = np.linalg.qr(np.column_stack(flag))[0]
    proj = q @ q.T            # projector onto span{xi~, Z, ..., T^{k-1} Z}

    def outside(mat):
        return mat - proj @ mat @ proj

    zvec = model.z_frame_vector()
    om = np.einsum("c,cpq->qp", zvec, vals[0])
    target = spec.a ** 2 * wedge(np.eye(n)[0], top)
    res1 = float(np.max(np.abs(outside(om - target))))

    res2 = 0.0
    for x in model.zperp_basis():
        omx = np.einsum("c,cpq->qp", x, vals[0])
        res2 = max(res2, float(np.max(np.abs(outside(omx)))))

    res3 = 0.0
    for i in range(1, n):
        for j in range(i + 1, n):
            res3 = max(res3, float(np.max(np.abs(outside(vals[i, j].T)))))
    return ClaimsReport(k, res1, res2, res3)


def recursion_residual(model, k, ctx=None):
    """Residual of the displayed recursion for the directional tower:

        D_{k+1}(xi~, Z) = nabla_xi~ (D_k(xi~, Z)) - D_k(nabla_xi~ xi~, Z)
                          - D_k(xi~, nabla_xi~ Z)

    with the first term the covariant derivative of the skew-endomorphism
    field D_k(xi~, Z).  Ties the directional tower to an independently
    computed right-hand side.
    """
    if ctx is None or ctx.max_order < k + 1:
        ctx = DeformedContext(model, k + 1)
    dtow = directional_tower(ctx, k + 1)
    zvec = model.z_frame_vector()
    vi = model.v_index
    lhs = np.einsum("c,cpq->pq", zvec, dtow[k + 1].values[vi])

    omega = JetArr(dtow[k].space, np.einsum("c,cpqt->pqt", zvec, dtow[k].coeffs[vi]))
    term1 = ctx.ev.directional_derivative(omega, vi).values
    gam = ctx.gamma_values()
    w0 = gam[vi, vi]                       # nabla_xi~ xi~
    wz = np.einsum("c,cl->l", zvec, gam[vi])   # nabla_xi~ Z
    vals_k = dtow[k].values
    term2 = np.einsum("c,d,cdpq->pq", w0, zvec, vals_k)
    term3 = np.einsum("d,dpq->pq", wz, vals_k[vi])
    return float(np.max(np.abs(lhs - (term1 - term2 - term3))))
