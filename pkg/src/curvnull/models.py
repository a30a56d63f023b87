"""Constructors for the two example families.

* Deformed SL(2,R): the left-invariant metric making the frame X, Y, T
  orthonormal, with bracket relations [X,Y] = 2T, [T,X] = -X + 2Y,
  [T,Y] = Y, vertically rescaled along the flow of X by e^{2 phi}.
  Chart: (theta, v, u) -> k(theta) a(v) n(u) with k a rotation,
  a = diag(e^{v/2}, e^{-v/2}) and n upper unitriangular.  The rotation
  factor comes first so that theta labels the horizontal leaves: any
  function of theta alone then has vertical gradient.

* Deformed almost-abelian: G = S^1 x_rho R^m with rho acting by integer-
  weight rotation blocks.  The flat left-invariant metric is rescaled along
  the S^1 fibers by f(t)^2 where f = c1 e^{a t} + c2 e^{-a t} and t is the
  height function of a unit vector Z.  Chart: (theta, y^1..y^m).

Both models expose the same surface: orthonormal frames for the curvature
engine (path B), per-point warp data for the closed-form tables (path A),
and chart metric evaluators for the finite-difference oracle (path C).
"""

from dataclasses import dataclass, field

import numpy as np

from .frames import CurvatureTensor, OrthoFrame, frame_iterate
from .jets import (
    Jet,
    JetDomainError,
    ScalarField,
    eval_f_jet,
    jet_cos,
    jet_exp,
    jet_log,
    jet_reciprocal,
    jet_sin,
)
from .warp import WarpPointData


def _fill_entry(r, i, j, k, l, val):
    """Set one component and all its images under the curvature symmetries."""
    for (a, b, sgn1) in ((i, j, 1.0), (j, i, -1.0)):
        for (c, d, sgn2) in ((k, l, 1.0), (l, k, -1.0)):
            r[a, b, c, d] = sgn1 * sgn2 * val
            r[c, d, a, b] = sgn1 * sgn2 * val


# --------------------------------------------------------------------------
# deformed SL(2,R)
# --------------------------------------------------------------------------

class ThetaFunction:
    """A smooth 2 pi periodic function of the chart angle with exact jets."""

    def __init__(self, jet_fn, label="phi"):
        self._jet_fn = jet_fn
        self.label = label

    def jet_of(self, theta_jet):
        return self._jet_fn(theta_jet)

    def derivatives(self, theta, upto):
        j = self.jet_of(Jet.variable(0, theta, 1, upto))
        return tuple(j.derivative_value((r,)) for r in range(upto + 1))

    @classmethod
    def zero(cls):
        return cls(lambda t: t * 0.0, "0")

    @classmethod
    def cosine(cls, eps):
        return cls(lambda t: eps * jet_cos(t), f"{eps}*cos(theta)")


# constant ambient connection table of the frame (X, Y, T), from the
# left-invariant bracket relations via the Koszul formula
def _sl2r_connection_constants():
    g = np.zeros((3, 3, 3))
    g[0, 0, 2] = -1.0   # nabla_X X = -T
    g[0, 1, 2] = 2.0    # nabla_X Y = 2T
    g[0, 2, 0] = 1.0    # nabla_X T = X - 2Y
    g[0, 2, 1] = -2.0
    g[1, 1, 2] = 1.0    # nabla_Y Y = T
    g[1, 2, 1] = -1.0   # nabla_Y T = -Y
    return g


def sl2r_reference_curvature():
    """Curvature of the undeformed metric, constant in the frame (X, Y, T)."""
    r = np.zeros((3, 3, 3, 3))
    _fill_entry(r, 0, 1, 0, 1, -1.0)   # K(X,Y) = +1
    _fill_entry(r, 0, 2, 0, 2, 1.0)    # K(X,T) = -1
    _fill_entry(r, 1, 2, 1, 2, 1.0)    # K(Y,T) = -1
    return CurvatureTensor(r)


@dataclass
class Sl2rModel:
    """Deformed SL(2,R) model on the global chart (theta, v, u).

    Frame order is (X, Y, T) with the deformation along X, so the deformed
    orthonormal frame is (e^{-phi} X, Y, T); index 0 is vertical.
    """

    phi: ThetaFunction
    frame: OrthoFrame = field(init=False, repr=False)
    undeformed_frame: OrthoFrame = field(init=False, repr=False)

    chart_dim = 3
    v_index = 0
    frame_names = ("X", "Y", "T")

    def __post_init__(self):
        comps = _sl2r_field_components()
        self.undeformed_frame = OrthoFrame(3, comps, self.frame_names)
        phi = self.phi
        factor = ScalarField(3, lambda xs: jet_exp(-phi.jet_of(xs[0])))
        deformed = [[factor * c for c in comps[0]], comps[1], comps[2]]
        self.frame = OrthoFrame(3, deformed, ("X~", "Y", "T"))

    # ---- scalar fields -----------------------------------------------
    def phi_field(self):
        return ScalarField(3, lambda xs: self.phi.jet_of(xs[0]))

    # ---- chart data ----------------------------------------------------
    def frame_matrix(self, point):
        """Deformed frame vectors as columns in chart components."""
        th, v, u = point
        f = _sl2r_frame_matrix_values(v, u)
        f[:, 0] *= np.exp(-self.phi.derivatives(th, 0)[0])
        return f

    def chart_metric(self, point):
        """Deformed metric components, F^{-T} diag(e^{2 phi},1,1) F^{-1}."""
        th, v, u = point
        f = _sl2r_frame_matrix_values(v, u)
        finv = np.linalg.inv(f)
        d = np.diag([np.exp(2.0 * self.phi.derivatives(th, 0)[0]), 1.0, 1.0])
        return finv.T @ d @ finv

    def group_matrix(self, point):
        """The chart map (theta, v, u) -> k(theta) a(v) n(u) in SL(2,R)."""
        th, v, u = point
        k = np.array([[np.cos(th), np.sin(th)], [-np.sin(th), np.cos(th)]])
        a = np.diag([np.exp(v / 2.0), np.exp(-v / 2.0)])
        n = np.array([[1.0, u], [0.0, 1.0]])
        return k @ a @ n

    # ---- warp data (path A inputs, closed form) ------------------------
    def warp_point_data(self, point):
        th, v, u = point
        ph, dph, d2ph = self.phi.derivatives(th, 2)
        ev = np.exp(-v)
        psi = ev * dph                      # X(phi)
        xpsi = 2.0 * u * ev * dph + ev * ev * d2ph   # X(X(phi))
        hess = np.array([
            [xpsi, 0.0, -psi],
            [0.0, 0.0, 0.0],
            [-psi, 0.0, 0.0],
        ])
        return WarpPointData(
            h_idx=(1, 2),
            v_idx=(0,),
            conn=_sl2r_connection_constants(),
            S=np.array([[[0.0]], [[-1.0]]]),       # S_Y = 0, S_T = -1
            sigma=np.array([[[0.0, -1.0]]]),       # sigma(X,X) = -T
            phi_value=ph,
            grad_h=np.zeros(2),
            grad_v=np.array([psi]),
            hess=hess,
        )

    def undeformed_curvature(self):
        return sl2r_reference_curvature()

    def nullity_direction(self):
        """Frame components of the generator of the (-1)-nullity."""
        return np.array([0.0, 0.0, 1.0])   # T

    def sample_points(self, rng, count):
        # |v|, |u| <= 0.8 keeps the e^{-2v} frame growth mild enough for the
        # finite-difference oracle to stay comfortably inside its tolerance
        th = rng.uniform(0.0, 2.0 * np.pi, size=count)
        vu = rng.uniform(-0.8, 0.8, size=(count, 2))
        return np.column_stack([th, vu])

    def vertical_gradient_residual(self, points):
        """max |Y(phi)|, |T(phi)| over the sample: the deformation must have
        vertical gradient for the warping theorem to apply."""
        phi = self.phi_field()
        worst = 0.0
        for p in points:
            for direction in (1, 2):
                worst = max(worst, abs(frame_iterate(self.undeformed_frame, (direction,), phi, p)))
        return worst


def _sl2r_frame_matrix_values(v, u):
    ev = np.exp(-v)
    return np.array([
        [ev, 0.0, 0.0],
        [-2.0 * u, 0.0, 1.0],
        [1.0 + u * u - ev * ev, 1.0, -u],
    ])


def _sl2r_field_components():
    """Chart components of the left-invariant frame on (theta, v, u)."""
    x_comp = [
        ScalarField(3, lambda xs: jet_exp(-xs[1])),
        ScalarField(3, lambda xs: -2.0 * xs[2]),
        ScalarField(3, lambda xs: 1.0 + xs[2] * xs[2] - jet_exp(-2.0 * xs[1])),
    ]
    y_comp = [ScalarField.constant(0.0, 3), ScalarField.constant(0.0, 3), ScalarField.constant(1.0, 3)]
    t_comp = [ScalarField.constant(0.0, 3), ScalarField.constant(1.0, 3),
              ScalarField(3, lambda xs: -xs[2])]
    return [x_comp, y_comp, t_comp]


def build_sl2r(phi_spec=None):
    """Deformed SL(2,R) model; phi_spec is a ThetaFunction (None = undeformed)."""
    if phi_spec is None:
        phi_spec = ThetaFunction.zero()
    if not isinstance(phi_spec, ThetaFunction):
        raise TypeError("phi_spec must be a ThetaFunction with exact jets")
    return Sl2rModel(phi_spec)


# --------------------------------------------------------------------------
# deformed almost-abelian
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AlmostAbelianSpec:
    """Parameters of the almost-abelian family.

    rho acts on R^m by 2x2 rotation blocks with the given integer weights;
    Z is the unit vector whose height function drives the deformation, and
    f = c1 e^{a t} + c2 e^{-a t}.
    """

    m: int
    weights: tuple
    a: float
    c1: float
    c2: float
    z: np.ndarray

    def __post_init__(self):
        if self.m <= 0 or self.m % 2 != 0:
            raise ValueError("m must be even")
        if len(self.weights) != self.m // 2:
            raise ValueError(f"need {self.m // 2} weights for m = {self.m}")
        if any(int(w) != w or w == 0 for w in self.weights):
            raise ValueError("weights must be nonzero integers")
        if self.a <= 0:
            raise ValueError("a must be positive")
        if self.c1 < 0 or self.c2 < 0 or self.c1 + self.c2 == 0:
            raise ValueError("need c1, c2 >= 0 with c1 + c2 > 0")
        z = np.asarray(self.z, dtype=float)
        if z.shape != (self.m,):
            raise ValueError(f"Z must have {self.m} components")
        nz = np.linalg.norm(z)
        if nz < 1e-12:
            raise ValueError("Z must be a nonzero vector")
        object.__setattr__(self, "z", z / nz)
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))

    def rho(self, theta):
        out = np.zeros((self.m, self.m))
        for b, w in enumerate(self.weights):
            c, s = np.cos(w * theta), np.sin(w * theta)
            out[2 * b: 2 * b + 2, 2 * b: 2 * b + 2] = [[c, -s], [s, c]]
        return out

    @property
    def drho(self):
        """A = d rho(xi): block-diagonal skew matrix of the weights."""
        out = np.zeros((self.m, self.m))
        for b, w in enumerate(self.weights):
            out[2 * b, 2 * b + 1] = -w
            out[2 * b + 1, 2 * b] = w
        return out


def ktv_reference_curvature(spec):
    """The closed-form deformed curvature, constant in the frame (xi~, V).

    Nonzero components all live on the (xi~, Z) plane:
    <R(xi~, X) Y, xi~> = -a^2 <X,Z><Y,Z> and <R(xi~, X) xi~, .> = a^2 <X,Z> Z.
    """
    n = spec.m + 1
    r = np.zeros((n, n, n, n))
    a2 = spec.a ** 2
    for i in range(spec.m):
        for l in range(spec.m):
            _fill_entry(r, 0, i + 1, 0, l + 1, a2 * spec.z[i] * spec.z[l])
    return CurvatureTensor(r)


@dataclass
class AlmostAbelianModel:
    """Deformed almost-abelian model on the chart (theta, y^1..y^m).

    Frame order is (xi, E_1..E_m) with the S^1 direction vertical at
    index 0; the deformed unit vertical is xi~ = xi / f(t).
    """

    spec: AlmostAbelianSpec
    deformed: bool = True
    frame: OrthoFrame = field(init=False, repr=False)
    undeformed_frame: OrthoFrame = field(init=False, repr=False)

    v_index = 0

    def __post_init__(self):
        m = self.spec.m
        n = m + 1
        comps = [[ScalarField.constant(1.0 if a == 0 else 0.0, n) for a in range(n)]]
        for i in range(m):
            row = [ScalarField.constant(0.0, n)]
            for a in range(m):
                row.append(self._rho_entry_field(a, i))
            comps.append(row)
        names = ("xi",) + tuple(f"E{i + 1}" for i in range(m))
        self.undeformed_frame = OrthoFrame(n, comps, names)
        if self.deformed:
            ffield = self.f_field()
            first = [ScalarField(n, lambda xs: jet_reciprocal(ffield(xs)))] + \
                    [ScalarField.constant(0.0, n) for _ in range(m)]
            dcomps = [first] + comps[1:]
            self.frame = OrthoFrame(n, dcomps, ("xi~",) + names[1:])
        else:
            self.frame = self.undeformed_frame

    # ---- scalar fields -------------------------------------------------
    def _rho_entry_field(self, row, col):
        # rho is block diagonal: entry (row, col) vanishes off the block of col
        b = col // 2
        w = self.spec.weights[b]
        if row not in (2 * b, 2 * b + 1):
            return ScalarField.constant(0.0, self.spec.m + 1)
        top = row == 2 * b
        if col % 2 == 0:
            fn = (lambda xs: jet_cos(w * xs[0])) if top else (lambda xs: jet_sin(w * xs[0]))
        else:
            fn = (lambda xs: -1.0 * jet_sin(w * xs[0])) if top else (lambda xs: jet_cos(w * xs[0]))
        return ScalarField(self.spec.m + 1, fn)

    def t_field(self):
        """t(theta, y) = <rho(-theta) y, Z> as a chart scalar field."""
        spec = self.spec

        def fn(xs):
            th = xs[0]
            acc = xs[0] * 0.0
            for b, w in enumerate(spec.weights):
                c, s = jet_cos(w * th), jet_sin(w * th)
                y0, y1 = xs[1 + 2 * b], xs[2 + 2 * b]
                r0 = c * y0 + s * y1
                r1 = -1.0 * s * y0 + c * y1
                acc = acc + spec.z[2 * b] * r0 + spec.z[2 * b + 1] * r1
            return acc

        return ScalarField(spec.m + 1, fn)

    def f_field(self):
        spec = self.spec
        tf = self.t_field()

        def fn(xs):
            t = tf(xs)
            return spec.c1 * jet_exp(spec.a * t) + spec.c2 * jet_exp(-spec.a * t)

        return ScalarField(spec.m + 1, fn)

    def phi_field(self):
        ff = self.f_field()
        return ScalarField(self.spec.m + 1, lambda xs: jet_log(ff(xs)))

    # ---- point data ------------------------------------------------------
    def t_value(self, point):
        th = point[0]
        return float(self.spec.rho(-th) @ point[1:] @ self.spec.z)

    def frame_matrix(self, point):
        n = self.spec.m + 1
        out = np.zeros((n, n))
        out[1:, 1:] = self.spec.rho(point[0])
        if self.deformed:
            fj = eval_f_jet(self.spec.c1, self.spec.c2, self.spec.a, self.t_value(point), 0)
            out[0, 0] = 1.0 / fj.value
        else:
            out[0, 0] = 1.0
        return out

    def chart_metric(self, point):
        n = self.spec.m + 1
        g = np.eye(n)
        if self.deformed:
            fj = eval_f_jet(self.spec.c1, self.spec.c2, self.spec.a, self.t_value(point), 0)
            g[0, 0] = fj.value ** 2
        return g

    def warp_point_data(self, point):
        spec = self.spec
        m = spec.m
        n = m + 1
        amat = spec.drho
        conn = np.zeros((n, n, n))
        conn[0, 1:, 1:] = amat.T          # nabla_xi E_i = A E_i
        if not self.deformed:
            zerophi = dict(phi_value=0.0, grad_h=np.zeros(m), grad_v=np.zeros(1),
                           hess=np.zeros((n, n)))
            return WarpPointData(h_idx=tuple(range(1, n)), v_idx=(0,), conn=conn,
                                 S=np.zeros((m, 1, 1)), sigma=np.zeros((1, 1, m)), **zerophi)
        t = self.t_value(point)
        fj = eval_f_jet(spec.c1, spec.c2, spec.a, t, 2)
        fv = fj.value
        ft = fj.derivative_value((1,))
        ftt = fj.derivative_value((2,))
        phi_t = ft / fv
        phi_tt = ftt / fv - phi_t ** 2
        rw = spec.rho(-point[0]) @ point[1:]
        xi_t = float(rw @ (amat @ spec.z))          # xi(t)
        xi_xi_t = float(rw @ (amat @ amat @ spec.z))
        az = amat @ spec.z
        hess = np.zeros((n, n))
        hess[np.ix_(range(1, n), range(1, n))] = phi_tt * np.outer(spec.z, spec.z)
        hess[0, 1:] = phi_tt * spec.z * xi_t + phi_t * az
        hess[1:, 0] = hess[0, 1:]
        hess[0, 0] = phi_tt * xi_t ** 2 + phi_t * xi_xi_t
        return WarpPointData(
            h_idx=tuple(range(1, n)),
            v_idx=(0,),
            conn=conn,
            S=np.zeros((m, 1, 1)),
            sigma=np.zeros((1, 1, m)),
            phi_value=float(np.log(fv)),
            grad_h=phi_t * spec.z,
            grad_v=np.array([phi_t * xi_t]),
            hess=hess,
        )

    def reference_curvature(self):
        if not self.deformed:
            return CurvatureTensor(np.zeros((self.spec.m + 1,) * 4))
        return ktv_reference_curvature(self.spec)

    def zperp_basis(self):
        """Orthonormal rows spanning Z-perp inside V, as frame vectors."""
        m = self.spec.m
        _, _, vt = np.linalg.svd(self.spec.z.reshape(1, m))
        rows = vt[1:]
        out = np.zeros((m - 1, m + 1))
        out[:, 1:] = rows
        return out

    def z_frame_vector(self):
        out = np.zeros(self.spec.m + 1)
        out[1:] = self.spec.z
        return out

    def krylov_matrix(self):
        cols = []
        v = self.spec.z.copy()
        for _ in range(self.spec.m):
            cols.append(v.copy())
            v = self.spec.drho @ v
        return np.column_stack(cols)

    @property
    def basepoint(self):
        return np.zeros(self.spec.m + 1)

    def sample_points(self, rng, count):
        th = rng.uniform(0.0, 2.0 * np.pi, size=count)
        y = rng.uniform(-1.5, 1.5, size=(count, self.spec.m))
        return np.column_stack([th, y])


def build_almost_abelian(spec, deformed=True):
    """Model for an AlmostAbelianSpec; the undeformed variant is flat."""
    return AlmostAbelianModel(spec, deformed=deformed)


# --------------------------------------------------------------------------
# frame-equation residuals and frame rescaling
# --------------------------------------------------------------------------

@dataclass
class FrameFunctions:
    """Locally defined functions (alpha, beta, F) of an adapted frame, with
    k the sectional curvature of span(X, Y).

    The supplied frame is expected to realise the adapted connection table
    with these functions; `eqns_residual` measures the compatibility system.
    """

    frame: OrthoFrame
    alpha: ScalarField
    beta: ScalarField
    F: ScalarField
    k: float


def eqns_residual(ff, point):
    """Residuals of the four structure equations at a chart point:

        alpha + beta F,   T(beta) - beta,
        Y(F) + beta (1 + F^2),   X(beta) - F Y(beta) - (k - 1).

    Frame directions are taken in the order (X, Y, T) = (0, 1, 2).
    """
    point = np.asarray(point, dtype=float)
    alpha = ff.alpha.value(point)
    beta = ff.beta.value(point)
    fval = ff.F.value(point)
    t_beta = frame_iterate(ff.frame, (2,), ff.beta, point)
    y_f = frame_iterate(ff.frame, (1,), ff.F, point)
    x_beta = frame_iterate(ff.frame, (0,), ff.beta, point)
    y_beta = frame_iterate(ff.frame, (1,), ff.beta, point)
    return np.array([
        alpha + beta * fval,
        t_beta - beta,
        y_f + beta * (1.0 + fval ** 2),
        x_beta - fval * y_beta - (ff.k - 1.0),
    ])


def rescale_frame(ff, frame):
    """The adapted rescaling X~ = F^{-1} X, Y~ = Y, T~ = T on {F != 0}."""
    fld = ff.F

    def checked_inv(xs):
        j = fld(xs)
        if abs(j.value) < 1e-12:
            raise JetDomainError("F vanishes at the requested point; rescaling undefined")
        return jet_reciprocal(j)

    n = frame.n
    new_x = [ScalarField(n, lambda xs, c=c: checked_inv(xs) * c(xs)) for c in frame.fields[0]]
    return OrthoFrame(n, [new_x, frame.fields[1], frame.fields[2]],
                      ("X~",) + tuple(frame.names[1:]))


def sl2r_expected_structure():
    """Structure constants of the standard bracket relations, c[i,j,k]."""
    c = np.zeros((3, 3, 3))
    c[0, 1, 2] = 2.0     # [X,Y] = 2T
    c[2, 0, 0] = -1.0    # [T,X] = -X + 2Y
    c[2, 0, 1] = 2.0
    c[2, 1, 1] = 1.0     # [T,Y] = Y
    return c - np.transpose(c, (1, 0, 2))


def sl2r_bracket_residual(frame, point):
    """max |c_ijk(point) - standard SL(2,R) structure constants|."""
    from .frames import FrameEval
    ev = FrameEval(frame, point, 1)
    return float(np.max(np.abs(ev.cjets.values - sl2r_expected_structure())))
