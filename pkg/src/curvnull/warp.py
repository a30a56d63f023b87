"""Closed-form tables for vertically rescaled submersion metrics (path A).

Given an integrable Riemannian submersion with metric <,> and a function
phi, the deformed metric

    <u,v>_phi = <u^h, v^h> + e^{2 phi} <u^v, v^v>

has Levi-Civita connection and curvature expressible pointwise through the
ambient connection, the fiber shape data (S, sigma) and the 2-jet of phi.
This module evaluates those tables from plain per-point numbers.  It never
touches the jet machinery: independence from computation path B is the
whole point.

The ambient frame is assumed to have a position-independent connection
table (true for the left-invariant frames used by the model constructors),
so the ambient curvature is algebraic in the table when not supplied.
"""

from dataclasses import dataclass, field

import numpy as np

from .frames import CurvatureTensor
from .nullity import nullity_defect


class ClassificationError(ValueError):
    """A frame vector was not tagged horizontal or vertical."""


class UnsupportedAssemblyError(ValueError):
    """Full-tensor assembly is only determined for 1-dimensional fibers."""


@dataclass
class WarpPointData:
    """Everything the deformed-metric tables consume at one point.

    Indices refer to an ambient orthonormal frame; `h_idx` / `v_idx` say
    which frame slots are horizontal / vertical.  S[a] is the shape
    operator of the fiber along the a-th horizontal direction and sigma the
    second fundamental form with horizontal values; they are metrically
    adjoint.  `hess` is the full ambient frame Hessian of phi.
    """

    h_idx: tuple
    v_idx: tuple
    conn: np.ndarray          # (n,n,n), Gamma[i,j,k] = <nabla_{E_i}E_j, E_k>
    S: np.ndarray             # (h, v, v)
    sigma: np.ndarray         # (v, v, h)
    phi_value: float
    grad_h: np.ndarray        # (h,)  horizontal frame derivatives of phi
    grad_v: np.ndarray        # (v,)
    hess: np.ndarray          # (n,n) symmetric
    ambient_R: np.ndarray = field(default=None, repr=False)

    @property
    def n(self):
        return len(self.h_idx) + len(self.v_idx)

    @property
    def h_dim(self):
        return len(self.h_idx)

    @property
    def v_dim(self):
        return len(self.v_idx)

    def validate(self, tol=1e-12):
        adj = np.max(np.abs(np.transpose(self.sigma, (2, 0, 1)) - self.S)) if self.S.size else 0.0
        sym = np.max(np.abs(self.hess - self.hess.T))
        if adj > tol:
            raise ValueError(f"sigma and S not metrically adjoint: residual {adj}")
        if sym > tol:
            raise ValueError(f"Hessian not symmetric: residual {sym}")
        return {"adjoint": float(adj), "hess_symmetry": float(sym)}

    def ambient_curvature(self):
        """Ambient R from the (constant) connection table.

        R[i,j,k,l] = sum_m Gamma[j,k,m]Gamma[i,m,l] - Gamma[i,k,m]Gamma[j,m,l]
                     - c[i,j,m]Gamma[m,k,l],  c[i,j,k] = Gamma[i,j,k]-Gamma[j,i,k].
        """
        if self.ambient_R is not None:
            return self.ambient_R
        g = self.conn
        c = g - np.transpose(g, (1, 0, 2))
        r = (np.einsum("jkm,iml->ijkl", g, g)
             - np.einsum("ikm,jml->ijkl", g, g)
             - np.einsum("ijm,mkl->ijkl", c, g))
        return r

    def grad_full(self):
        out = np.zeros(self.n)
        out[list(self.h_idx)] = self.grad_h
        out[list(self.v_idx)] = self.grad_v
        return out

    def frame_phi_derivative(self, i):
        if i in self.h_idx:
            return float(self.grad_h[self.h_idx.index(i)])
        return float(self.grad_v[self.v_idx.index(i)])


def _tagged_components(d, vec, tag):
    vec = np.asarray(vec, dtype=float)
    if tag not in ("h", "v"):
        raise ClassificationError(f"vector tag must be 'h' or 'v', got {tag!r}")
    allowed = d.h_idx if tag == "h" else d.v_idx
    outside = [i for i in range(d.n) if i not in allowed and abs(vec[i]) > 0]
    if outside:
        raise ClassificationError(
            f"vector tagged {tag!r} has components outside its subspace at {outside}")
    return vec


def _nabla(d, avec, bvec):
    """Ambient nabla_a b for constant frame coefficient vectors."""
    return np.einsum("i,j,ijk->k", avec, bvec, d.conn)


def _project(d, vec, part):
    out = np.zeros_like(vec)
    idx = list(d.h_idx if part == "h" else d.v_idx)
    out[idx] = vec[idx]
    return out


def _shape_apply(d, xvec, uvec):
    """S_X U as a full ambient vector (vertical valued)."""
    out = np.zeros(d.n)
    for apos, a in enumerate(d.h_idx):
        for alpha, va in enumerate(d.v_idx):
            for beta, vb in enumerate(d.v_idx):
                out[vb] += xvec[a] * uvec[va] * d.S[apos, alpha, beta]
    return out


def _sigma_eval(d, uvec, vvec):
    """sigma(U, V) as a full ambient vector (horizontal valued)."""
    out = np.zeros(d.n)
    for alpha, va in enumerate(d.v_idx):
        for beta, vb in enumerate(d.v_idx):
            for apos, a in enumerate(d.h_idx):
                out[a] += uvec[va] * vvec[vb] * d.sigma[alpha, beta, apos]
    return out


def deformed_connection(d, avec, atag, bvec, btag):
    """nabla-tilde_a b by the seven-case deformation table.

    a and b are constant coefficient vectors over the ambient orthonormal
    frame, tagged 'h' or 'v'; the result is returned in ambient frame
    components (undeformed lengths).
    """
    a = _tagged_components(d, avec, atag)
    b = _tagged_components(d, bvec, btag)
    grad = d.grad_full()
    aphi = float(a @ grad)
    bphi = float(b @ grad)
    if atag == "h" and btag == "h":
        return _nabla(d, a, b)
    if atag == "v" and btag == "h":
        nab_vx = _nabla(d, a, b)
        nab_xv = _nabla(d, b, a)
        out = _project(d, nab_vx, "v") + bphi * a
        out += _project(d, nab_vx, "h") - _project(d, nab_xv, "h")
        return out
    if atag == "h" and btag == "v":
        return _project(d, _nabla(d, a, b), "v") + aphi * b
    # vertical, vertical
    nab = _nabla(d, a, b)
    uv = float(a @ b)
    e2 = np.exp(2.0 * d.phi_value)
    out = e2 * (_project(d, nab, "h") - uv * _project(d, grad, "h"))
    out += _project(d, nab, "v") + aphi * b + bphi * a - uv * _project(d, grad, "v")
    return out


def deformed_connection_table(d):
    """Gamma-tilde in the deformed orthonormal frame (verticals scaled by e^-phi).

    Directly comparable with the path B connection of the deformed frame.
    """
    n = d.n
    is_v = np.zeros(n, dtype=bool)
    is_v[list(d.v_idx)] = True
    tags = ["v" if is_v[i] else "h" for i in range(n)]
    ephi = np.exp(d.phi_value)
    out = np.zeros((n, n, n))
    for i in range(n):
        ei = np.eye(n)[i]
        for j in range(n):
            ej = np.eye(n)[j]
            w = deformed_connection(d, ei, tags[i], ej, tags[j])
            if is_v[j]:
                w = w - d.frame_phi_derivative(i) * ej
            scale = (1.0 / ephi if is_v[i] else 1.0) * (1.0 / ephi if is_v[j] else 1.0)
            w = scale * w
            for k in range(n):
                out[i, j, k] = w[k] * (ephi if is_v[k] else 1.0)
    return out


def curvature_family_horizontal(d, a, b):
    """R-tilde(X, Y) for horizontal X, Y: equal to the ambient operator."""
    r0 = d.ambient_curvature()
    return np.einsum("i,j,ijkl->kl", a, b, r0)


def curvature_family_mixed(d, xvec, uvec, yvec):
    """R-tilde(X, U)Y for X, Y horizontal and U vertical (full vector)."""
    r0 = d.ambient_curvature()
    grad = d.grad_full()
    xphi = float(xvec @ grad)
    yphi = float(yvec @ grad)
    base = np.einsum("i,j,k,ijkl->l", xvec, uvec, yvec, r0)
    hx = list(d.h_idx)
    hess_xy = float(xvec[hx] @ d.hess[np.ix_(hx, hx)] @ yvec[hx])
    out = base - xphi * _shape_apply(d, yvec, uvec) - yphi * _shape_apply(d, xvec, uvec)
    out += (hess_xy + xphi * yphi) * uvec
    return out


def curvature_family_two_vertical(d, xvec, uvec, vvec):
    """e^{-2 phi} (R-tilde(X, U)V)^h for X horizontal and U, V vertical."""
    r0 = d.ambient_curvature()
    grad_h = _project(d, d.grad_full(), "h")
    xphi = float(xvec @ d.grad_full())
    uv = float(uvec @ vvec)
    base = _project(d, np.einsum("i,j,k,ijkl->l", xvec, uvec, vvec, r0), "h")
    sig = _sigma_eval(d, uvec, vvec)
    # (nabla_X grad phi)^h has components Hess(X, E_b) over horizontal b
    nabla_grad = np.zeros(d.n)
    for b in d.h_idx:
        nabla_grad[b] = float(xvec @ d.hess[:, b])
    out = base + xphi * sig + float(xvec @ sig) * grad_h
    out -= uv * (nabla_grad + xphi * grad_h)
    return out


def curvature_family_vertical(d, uvec, vvec, xvec):
    """(R-tilde(U, V)X)^v for U, V vertical and X horizontal."""
    r0 = d.ambient_curvature()
    grad = d.grad_full()
    uphi = float(uvec @ grad)
    vphi = float(vvec @ grad)
    base = _project(d, np.einsum("i,j,k,ijkl->l", uvec, vvec, xvec, r0), "v")
    hess_ux = float(uvec @ d.hess @ xvec)
    hess_vx = float(vvec @ d.hess @ xvec)
    out = base - uphi * _shape_apply(d, xvec, vvec) + vphi * _shape_apply(d, xvec, uvec)
    out += hess_ux * vvec - hess_vx * uvec
    return out


def deformed_curvature(d, point=None):
    """Full (0,4) deformed curvature in the deformed orthonormal frame.

    Only guaranteed for 1-dimensional fibers, where the listed component
    families plus the curvature symmetries determine the tensor; for higher
    fiber dimension use the family functions directly.
    """
    if d.v_dim != 1:
        raise UnsupportedAssemblyError(
            f"full assembly needs v_dim = 1, got {d.v_dim}; use the family functions")
    d.validate()
    n = d.n
    u = d.v_idx[0]
    hs = list(d.h_idx)
    r0 = d.ambient_curvature()
    eu = np.eye(n)[u]
    emph = np.exp(-d.phi_value)

    rt = np.zeros((n, n, n, n))
    # all-horizontal block from the horizontal family
    for a in hs:
        for b in hs:
            for c in hs:
                for e in hs:
                    rt[a, b, c, e] = r0[a, b, c, e]

    bvec = {}
    for p in hs:
        for y in hs:
            bvec[(p, y)] = curvature_family_mixed(d, np.eye(n)[p], eu, np.eye(n)[y])

    for p in hs:
        for y in hs:
            vec = bvec[(p, y)]
            # two verticals, one per index pair
            val = vec[u]
            rt[p, u, y, u] = val
            rt[u, p, y, u] = -val
            rt[p, u, u, y] = -val
            rt[u, p, u, y] = val
            # single vertical in the first pair
            for q in hs:
                w = emph * vec[q]
                rt[p, u, y, q] = w
                rt[u, p, y, q] = -w
                # pair-symmetric images: vertical in the second pair
                rt[y, q, p, u] = w
                rt[y, q, u, p] = -w
                rt[q, y, p, u] = -w
                rt[q, y, u, p] = w
    tensor = CurvatureTensor(rt, np.asarray(point, dtype=float) if point is not None else np.zeros(0))
    tensor.validate(1e-9)
    return tensor


def mixed_family_consistency(d):
    """Discrepancy between the two-vertical family and the mixed family.

    (R-tilde(X,u)u)^h is determined both by `curvature_family_two_vertical`
    and, through the curvature symmetries, by `curvature_family_mixed`;
    both routes must agree for the assembly to be well defined.
    """
    if d.v_dim != 1:
        raise UnsupportedAssemblyError("consistency check assumes v_dim = 1")
    n = d.n
    u = d.v_idx[0]
    eu = np.eye(n)[u]
    worst = 0.0
    for a in d.h_idx:
        via_c = curvature_family_two_vertical(d, np.eye(n)[a], eu, eu)
        for q in d.h_idx:
            via_b = -curvature_family_mixed(d, np.eye(n)[a], eu, np.eye(n)[q])[u]
            worst = max(worst, abs(via_c[q] - via_b))
    return worst


@dataclass
class WarpCheckReport:
    """Outcome of a nullity-of-warping check.

    Failed hypotheses are reported, not raised: they are part of what the
    theorem statement asks to verify.
    """

    residual: float
    preconditions: dict
    hypotheses_ok: bool

    def __bool__(self):
        return self.hypotheses_ok


def _deformed_defect(model, z, kappa, points):
    worst = 0.0
    for p in points:
        d = model.warp_point_data(p)
        rt = deformed_curvature(d, p)
        worst = max(worst, nullity_defect(rt.components, z, kappa))
    return worst


def check_nullity_warp_i(model, z, kappa, points, pre_tol=1e-9):
    """Horizontal nullity vectors survive vertical warping (umbilic fibers,
    vertical gradient).  Returns the worst deformed-nullity defect over the
    sample points plus the verified hypotheses."""
    z = np.asarray(z, dtype=float)
    pre = {}
    worst_umb = worst_grad = worst_null = 0.0
    for p in points:
        d = model.warp_point_data(p)
        if d.v_dim >= 1 and d.sigma.size:
            mean = np.trace(d.sigma, axis1=0, axis2=1) / d.v_dim  # (h,)
            umb = d.sigma - np.einsum("ab,c->abc", np.eye(d.v_dim), mean)
            worst_umb = max(worst_umb, float(np.max(np.abs(umb))))
        worst_grad = max(worst_grad, float(np.max(np.abs(d.grad_h))) if d.grad_h.size else 0.0)
        worst_null = max(worst_null, nullity_defect(d.ambient_curvature(), z, kappa))
    zvert = float(np.max(np.abs(z[list(model.warp_point_data(points[0]).v_idx)])))
    pre["umbilic"] = worst_umb
    pre["gradient_vertical"] = worst_grad
    pre["z_horizontal"] = zvert
    pre["z_in_undeformed_nullity"] = worst_null
    ok = all(v <= pre_tol for v in pre.values())
    return WarpCheckReport(_deformed_defect(model, z, kappa, points), pre, ok)


def check_nullity_warp_ii(model, z, points, pre_tol=1e-10):
    """Horizontal lifts of base 0-nullity vectors inside ker dphi and
    ker (Hess phi)^h land in the 0-nullity of the deformed metric."""
    z = np.asarray(z, dtype=float)
    pre = {}
    worst_s = worst_base = worst_dphi = worst_hess = 0.0
    for p in points:
        d = model.warp_point_data(p)
        worst_s = max(worst_s, float(np.max(np.abs(d.S))) if d.S.size else 0.0)
        hs = list(d.h_idx)
        r0 = d.ambient_curvature()
        base_block = r0[np.ix_(hs, hs, hs, hs)]
        worst_base = max(worst_base, nullity_defect(base_block, z[hs], 0.0))
        worst_dphi = max(worst_dphi, abs(float(d.grad_h @ z[hs])))
        worst_hess = max(worst_hess, float(np.max(np.abs(d.hess[np.ix_(hs, hs)] @ z[hs]))))
    d0 = model.warp_point_data(points[0])
    pre["shape_operator_zero"] = worst_s
    pre["z_horizontal"] = float(np.max(np.abs(z[list(d0.v_idx)])))
    pre["z_in_base_nullity"] = worst_base
    pre["z_in_ker_dphi"] = worst_dphi
    pre["z_in_ker_hess_h"] = worst_hess
    ok = all(v <= pre_tol for v in pre.values())
    return WarpCheckReport(_deformed_defect(model, z, 0.0, points), pre, ok)
