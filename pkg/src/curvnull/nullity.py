"""kappa-nullity spaces of a curvature tensor.

At a point, z lies in the kappa-nullity iff

    R(x, y) z = -kappa (<x,z> y - <y,z> x)   for all x, y,

so the nullity space is the kernel of the linear map stacking
R(e_i,e_j) z + kappa (z_i e_j - z_j e_i) over all frame pairs i < j.
The kernel is computed by singular value decomposition with a relative
threshold, and the full singular spectrum is reported so borderline rank
decisions stay auditable.
"""

from dataclasses import dataclass

import numpy as np

# singular values below this are treated as an identically vanishing
# operator (flat tensor, kappa = 0): the threshold then falls back to
# tol * 1 instead of tol * sigma_max
_VANISHING_SCALE = 1e-12


def _stacked_operator(r, kappa):
    n = r.shape[0]
    blocks = []
    for i in range(n):
        for j in range(i + 1, n):
            # row d, column c: coefficient of z_c in the d-component
            block = r[i, j].T.copy()
            block[:, i] += kappa * np.eye(n)[j]
            block[:, j] -= kappa * np.eye(n)[i]
            blocks.append(block)
    return np.vstack(blocks)


@dataclass
class NullityResult:
    kappa: float
    basis: np.ndarray          # rows are unit kernel vectors (frame components)
    index: int                 # nu_kappa = dim of the nullity space
    singular_values: np.ndarray

    def defect(self, r):
        """Max residual of the defining equation over the returned basis."""
        if self.index == 0:
            return 0.0
        return max(nullity_defect(r, z, self.kappa) for z in self.basis)


def nullity_defect(r, z, kappa):
    """max over pairs i<j of |R(e_i,e_j)z + kappa(z_i e_j - z_j e_i)|_2."""
    z = np.asarray(z, dtype=float)
    op = _stacked_operator(r, kappa)
    n = r.shape[0]
    res = (op @ z).reshape(-1, n)
    return float(np.max(np.linalg.norm(res, axis=1))) if res.size else 0.0


def nullity_space(rt, kappa, tol=1e-8):
    """Kernel basis, index and singular spectrum of the kappa-nullity map."""
    r = rt.components if hasattr(rt, "components") else np.asarray(rt)
    op = _stacked_operator(r, kappa)
    _, svals, vt = np.linalg.svd(op)
    smax = float(svals[0]) if svals.size else 0.0
    scale = smax if smax > _VANISHING_SCALE else 1.0
    n = r.shape[0]
    svals_full = np.concatenate([svals, np.zeros(n - len(svals))])
    kernel_mask = svals_full < tol * scale
    basis = vt[kernel_mask] if vt.shape[0] == n else np.eye(n)[kernel_mask]
    return NullityResult(
        kappa=float(kappa),
        basis=basis,
        index=int(np.count_nonzero(kernel_mask)),
        singular_values=svals_full,
    )


def kappa_scan(rt, grid, tol=1e-8):
    """One NullityResult per kappa in the grid."""
    if len(grid) == 0:
        raise ValueError("kappa grid must be nonempty")
    return [nullity_space(rt, k, tol) for k in grid]


def positive_kappas(results):
    """The set of scanned kappa values with nonzero index."""
    return [res.kappa for res in results if res.index > 0]


def subspace_angle(basis_a, basis_b):
    """Largest principal angle (radians) between two subspaces, given row bases."""
    qa = np.linalg.qr(np.asarray(basis_a, dtype=float).T)[0]
    qb = np.linalg.qr(np.asarray(basis_b, dtype=float).T)[0]
    if qa.shape[1] != qb.shape[1]:
        return float(np.pi / 2)
    s = np.linalg.svd(qa.T @ qb, compute_uv=False)
    return float(np.arccos(np.clip(s.min(), -1.0, 1.0)))
