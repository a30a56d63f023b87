"""Curvature-homogeneity and modelled-on checks via orthogonal invariants.

Two curvature tensors can only be orthogonally equivalent if their scalar
curvature, Ricci spectrum, curvature-operator spectrum and semi-symmetry
defect agree.  Matching invariants is not sufficient in general, but for
the model tensors produced here (a rank-one curvature operator plus zeros,
or the fixed left-invariant reference) invariant equality does pin the
orthogonal equivalence class, so the checker stays exact and
deterministic instead of solving a general orthogonal-conjugacy problem.
"""

from dataclasses import dataclass

import numpy as np

from .frames import (
    CurvatureTensor,
    curvature_operator_spectrum,
    ricci_spectrum,
    scalar_curvature,
    semi_symmetry_frobenius,
)
from .models import _fill_entry


@dataclass
class CurvatureInvariants:
    """Orthogonal invariants of a curvature tensor at a point.

    The semi-symmetry entry is the Frobenius norm of R . R (the max-abs
    variant is frame dependent for nonzero tensors, so it would not be an
    invariant)."""

    scalar: float
    ricci_spectrum: np.ndarray
    operator_spectrum: np.ndarray
    semi_symmetry_residual: float

    @property
    def dim(self):
        return len(self.ricci_spectrum)

    def as_dict(self):
        return {
            "scalar": self.scalar,
            "ricci_spectrum": list(self.ricci_spectrum),
            "operator_spectrum": list(self.operator_spectrum),
            "semi_symmetry_residual": self.semi_symmetry_residual,
        }


def invariants_of(rt):
    ric = ricci_spectrum(rt)
    scal = scalar_curvature(rt)
    if abs(scal - float(np.sum(ric))) > 1e-10 * max(1.0, abs(scal)):
        raise ValueError("scalar curvature does not match the Ricci trace")
    return CurvatureInvariants(
        scalar=scal,
        ricci_spectrum=ric,
        operator_spectrum=curvature_operator_spectrum(rt),
        semi_symmetry_residual=semi_symmetry_frobenius(rt),
    )


def space_form_product_curvature(curv, flat_dim):
    """Algebraic curvature tensor of M^2(curv) x R^flat_dim.

    With curv = -a^2 this is the real hyperbolic plane times a flat factor,
    the model tensor of the deformed almost-abelian family."""
    n = 2 + flat_dim
    r = np.zeros((n, n, n, n))
    # K(e0, e1) = curv, i.e. <R(e0,e1)e0, e1> = -curv... sign: R_0110 = K
    _fill_entry(r, 0, 1, 0, 1, -curv)
    return CurvatureTensor(r)


def matches_model(inv, reference, tol=1e-8):
    """Whether the invariants agree with those of a reference tensor.

    `reference` may be a CurvatureTensor or precomputed CurvatureInvariants.
    Raises on dimension mismatch; returns (bool, per-invariant deviations).
    """
    if isinstance(reference, CurvatureTensor):
        reference = invariants_of(reference)
    if reference.dim != inv.dim:
        raise ValueError(f"dimension mismatch: {inv.dim} vs {reference.dim}")
    diffs = {
        "scalar": abs(inv.scalar - reference.scalar),
        "ricci_spectrum": float(np.max(np.abs(inv.ricci_spectrum - reference.ricci_spectrum))),
        "operator_spectrum": float(np.max(np.abs(inv.operator_spectrum - reference.operator_spectrum))),
        "semi_symmetry_residual": abs(inv.semi_symmetry_residual - reference.semi_symmetry_residual),
    }
    return all(v <= tol for v in diffs.values()), diffs


def conjugate_tensor(rt, orth):
    """Components of the tensor after an orthogonal change of frame."""
    r = np.einsum("ia,jb,kc,ld,abcd->ijkl", orth, orth, orth, orth, rt.components)
    return CurvatureTensor(r, rt.point)


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))
