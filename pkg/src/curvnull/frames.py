"""Orthonormal-frame curvature engine (computation path B).

All metric data is carried by the frame: the metric is the one that makes
the frame orthonormal, so the Levi-Civita connection is algebraic in the
structure functions c_ijk = <[E_i,E_j], E_k>,

    Gamma_ijk = (c_ijk - c_jki + c_kij) / 2,

and the curvature tensor follows from frame derivatives of Gamma.  Frame
derivatives are exact chart jets, never finite differences (those live in
the independent oracle module).

Sign convention: R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z
- nabla_[X,Y] Z, with components R[i,j,k,l] = <R(E_i,E_j)E_k, E_l>.
"""

from dataclasses import dataclass, field

import numpy as np

from .jets import JetArr, jet_space


class GeometryError(RuntimeError):
    """Geometric precondition failed at a chart point (singular frame, ...)."""


class DegeneratePlaneError(ValueError):
    """Sectional curvature requested for linearly dependent vectors."""


@dataclass
class OrthoFrame:
    """A global orthonormal frame on a chart.

    fields[i][a] is the a-th chart component of the i-th frame vector, as a
    ScalarField.  The metric under study is the one declaring this frame
    orthonormal; all of it is encoded in these component functions.
    """

    n: int
    fields: list
    names: tuple = ()

    def __post_init__(self):
        if not self.names:
            self.names = tuple(f"E{i}" for i in range(self.n))

    def component_jets(self, point, order):
        """JetArr of shape (n_frame, n_chart) with all component jets."""
        jets = [[self.fields[i][a].jet(point, order) for a in range(self.n)]
                for i in range(self.n)]
        return JetArr.from_jets(jets)

    def matrix(self, point):
        """Chart-components matrix with frame vectors as columns."""
        m = np.array([[self.fields[i][a].value(point) for i in range(self.n)]
                      for a in range(self.n)])
        return m

    def condition_number(self, point):
        return float(np.linalg.cond(self.matrix(point)))


def _jet_solve(space, acoef, bcoef):
    """Solve A X = B where A is (n,n) and B (n,m) arrays of jet coefficients.

    Gauss-Jordan with partial pivoting on the constant terms; raises
    GeometryError when the frame matrix is singular at the point.
    """
    a = acoef.copy()
    b = bcoef.copy()
    n = a.shape[0]
    from .jets import Jet, jet_reciprocal

    for k in range(n):
        piv = k + int(np.argmax(np.abs(a[k:, k, 0])))
        if abs(a[piv, k, 0]) < 1e-12:
            raise GeometryError("singular frame matrix at the requested point")
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            b[[k, piv]] = b[[piv, k]]
        inv = jet_reciprocal(Jet(space, a[k, k].copy())).coeffs
        a[k] = space.mul_coeffs(a[k], inv)
        b[k] = space.mul_coeffs(b[k], inv)
        for r in range(n):
            if r == k:
                continue
            fac = a[r, k].copy()
            a[r] = a[r] - space.mul_coeffs(fac, a[k])
            b[r] = b[r] - space.mul_coeffs(fac, b[k])
    return b


class FrameEval:
    """All frame-geometry jets of one frame at one chart point.

    Evaluating at jet `order` supports `order - 1` frame derivatives of the
    connection, i.e. curvature plus (order - 2) covariant differentials.
    """

    def __init__(self, frame, point, order):
        if order < 1:
            raise ValueError("frame evaluation needs jet order >= 1")
        self.frame = frame
        self.point = np.asarray(point, dtype=float)
        self.order = order
        self.n = frame.n
        self.comps = frame.component_jets(self.point, order)  # (i, a)
        self._structure()

    def _structure(self):
        n, comps = self.n, self.comps
        lowsp = jet_space(n, self.order - 1)
        comps_low = comps.truncate(self.order - 1)
        # bracket chart components: [E_i,E_j]^c = E_i^a d_a E_j^c - (i<->j)
        br = np.zeros((n, n, n, lowsp.ncoeff))
        for a in range(n):
            d = comps.diff(a)  # (j, c) at order-1
            ea = comps_low.coeffs[:, a]  # (i, nc)
            br += lowsp.mul_coeffs(ea[:, None, None, :], d.coeffs[None, :, :, :])
        br -= np.transpose(br, (1, 0, 2, 3))
        # frame components of the brackets: solve F w = bracket per pair
        fmat = np.transpose(comps_low.coeffs, (1, 0, 2))  # F[a, i]
        rhs = np.transpose(br, (2, 0, 1, 3)).reshape(n, n * n, lowsp.ncoeff)
        sol = _jet_solve(lowsp, fmat, rhs)
        cc = np.transpose(sol.reshape(n, n, n, lowsp.ncoeff), (1, 2, 0, 3))
        self.cjets = JetArr(lowsp, cc)  # c[i,j,k] = <[E_i,E_j],E_k>
        gc = 0.5 * (cc - np.transpose(cc, (2, 0, 1, 3)) + np.transpose(cc, (1, 2, 0, 3)))
        self.gammajets = JetArr(lowsp, gc)  # Gamma[i,j,k] = <nabla_{E_i}E_j, E_k>
        self._curv = None

    def frame_apply(self, s):
        """E_w applied to every entry of a jet tensor: one extra leading slot."""
        n = self.n
        out_order = s.order - 1
        sp = jet_space(n, out_order)
        comps = self.comps.truncate(out_order)
        out = np.zeros((n,) + s.shape + (sp.ncoeff,))
        for a in range(n):
            d = s.diff(a)
            ea = comps.coeffs[:, a]
            ea = ea.reshape((n,) + (1,) * len(s.shape) + (sp.ncoeff,))
            out += sp.mul_coeffs(ea, d.coeffs[None])
        return JetArr(sp, out)

    def covariant_differential(self, s):
        """nabla S: adds one argument slot in front, drops one jet order.

        (nabla S)(E_w; args) = E_w(S(args)) - sum over slots of
        S(..., nabla_{E_w} E_i, ...).
        """
        n = self.n
        out = self.frame_apply(s)
        sp = out.space
        gam = self.gammajets.truncate(sp.order).coeffs  # (w, i, l, nc)
        r = len(s.shape)
        scoef = s.truncate(sp.order).coeffs
        corr = np.zeros_like(out.coeffs)
        for t in range(r):
            moved = np.moveaxis(scoef, t, 0)  # (l, rest..., nc)
            acc = np.zeros((n, n) + moved.shape[1:])
            for l in range(n):
                g = gam[:, :, l].reshape(n, n, *(1,) * (r - 1), sp.ncoeff)
                acc += sp.mul_coeffs(g, moved[l][None, None])
            # acc[w, it, rest...] -> place it back at slot t (after leading w)
            corr += np.moveaxis(acc, 1, t + 1)
        return JetArr(sp, out.coeffs - corr)

    def directional_derivative(self, s, w):
        """nabla_{E_w} S with the derivative direction fixed: same valence."""
        n = self.n
        out_order = s.order - 1
        sp = jet_space(n, out_order)
        comps = self.comps.truncate(out_order)
        acc = np.zeros(s.shape + (sp.ncoeff,))
        for a in range(n):
            d = s.diff(a)
            ea = comps.coeffs[w, a].reshape((1,) * len(s.shape) + (sp.ncoeff,))
            acc += sp.mul_coeffs(ea, d.coeffs)
        gam = self.gammajets.truncate(out_order).coeffs
        scoef = s.truncate(out_order).coeffs
        r = len(s.shape)
        for t in range(r):
            moved = np.moveaxis(scoef, t, 0)
            csum = np.zeros((n,) + moved.shape[1:])
            for l in range(n):
                g = gam[w, :, l].reshape(n, *(1,) * (r - 1), sp.ncoeff)
                csum += sp.mul_coeffs(g, moved[l][None])
            acc -= np.moveaxis(csum, 0, t)
        return JetArr(sp, acc)

    def curvature_jets(self):
        """R[i,j,k,l] as jets at order self.order - 2."""
        if self._curv is not None:
            return self._curv
        n = self.n
        sp = jet_space(n, self.order - 2)
        eg = self.frame_apply(self.gammajets)  # (i, j, k, l)
        egc = eg.coeffs
        gam = self.gammajets.truncate(sp.order).coeffs
        cjk = self.cjets.truncate(sp.order).coeffs
        quad = np.zeros((n, n, n, n, sp.ncoeff))
        for m in range(n):
            # Gamma[j,k,m] Gamma[i,m,l] - Gamma[i,k,m] Gamma[j,m,l] - c[i,j,m] Gamma[m,k,l]
            t1 = sp.mul_coeffs(gam[None, :, :, m, None, :], gam[:, None, None, m, :, :])
            t3 = sp.mul_coeffs(cjk[:, :, m, None, None, :], gam[None, None, m, :, :, :])
            quad += t1 - np.transpose(t1, (1, 0, 2, 3, 4)) - t3
        rc = egc - np.transpose(egc, (1, 0, 2, 3, 4)) + quad
        self._curv = JetArr(sp, rc)
        return self._curv


@dataclass
class ConnectionTable:
    """Levi-Civita connection of an orthonormal frame, Gamma_ijk = <nabla_{E_i}E_j, E_k>."""

    frame: OrthoFrame

    def evaluator(self, point, order=1):
        return FrameEval(self.frame, point, order)

    def values(self, point):
        return FrameEval(self.frame, point, 1).gammajets.values.copy()

    def structure_values(self, point):
        return FrameEval(self.frame, point, 1).cjets.values.copy()

    def compatibility_residual(self, point):
        """max |Gamma_ijk + Gamma_ikj|: zero for a metric connection in an orthonormal frame."""
        g = self.values(point)
        return float(np.max(np.abs(g + np.transpose(g, (0, 2, 1)))))

    def torsion_residual(self, point):
        """max |Gamma_ijk - Gamma_jik - c_ijk|: zero for a torsion-free connection."""
        ev = FrameEval(self.frame, point, 1)
        g = ev.gammajets.values
        c = ev.cjets.values
        return float(np.max(np.abs(g - np.transpose(g, (1, 0, 2)) - c)))


def levi_civita(frame):
    return ConnectionTable(frame)


@dataclass
class CurvatureTensor:
    """(0,4) curvature components at a point in an orthonormal frame."""

    components: np.ndarray
    point: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n(self):
        return self.components.shape[0]

    @property
    def max_abs(self):
        return float(np.max(np.abs(self.components)))

    def symmetry_residuals(self):
        """Max-abs residuals of the algebraic curvature symmetries, relative to max |R|."""
        r = self.components
        scale = max(float(np.max(np.abs(r))), 1e-12)
        anti_ij = np.max(np.abs(r + np.transpose(r, (1, 0, 2, 3))))
        anti_kl = np.max(np.abs(r + np.transpose(r, (0, 1, 3, 2))))
        pair = np.max(np.abs(r - np.transpose(r, (2, 3, 0, 1))))
        bianchi = np.max(np.abs(r + np.transpose(r, (1, 2, 0, 3)) + np.transpose(r, (2, 0, 1, 3))))
        return {
            "antisym_ij": float(anti_ij) / scale,
            "antisym_kl": float(anti_kl) / scale,
            "pair": float(pair) / scale,
            "bianchi": float(bianchi) / scale,
        }

    def validate(self, tol=1e-9):
        res = self.symmetry_residuals()
        bad = {k: v for k, v in res.items() if v > tol}
        if bad:
            raise GeometryError(f"curvature symmetry residuals above {tol}: {bad}")
        return res


def curvature(frame, conn, point, order=2):
    """Assemble the curvature tensor at `point` from the connection jets."""
    if conn.frame is not frame:
        raise ValueError("connection table belongs to a different frame")
    ev = FrameEval(frame, point, order)
    rj = ev.curvature_jets()
    return CurvatureTensor(rj.values.copy(), np.asarray(point, dtype=float))


def scalar_curvature(rt):
    return float(np.einsum("ijji->", rt.components))


def ricci_matrix(rt):
    """Ric[j,k] = sum_i <R(E_i, E_j)E_k, E_i>."""
    return np.einsum("ijki->jk", rt.components)


def ricci_spectrum(rt):
    return np.sort(np.linalg.eigvalsh(ricci_matrix(rt)))


def sectional(rt, u, v):
    """Sectional curvature of span(u, v); depends only on the 2-plane."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    num = float(np.einsum("ijkl,i,j,k,l->", rt.components, u, v, v, u))
    gram = (u @ u) * (v @ v) - (u @ v) ** 2
    if gram < 1e-12 * max((u @ u) * (v @ v), 1e-300):
        raise DegeneratePlaneError("u and v are linearly dependent")
    return num / gram


def _pair_index(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def curvature_operator_matrix(rt):
    """Symmetric operator on Lambda^2 in the orthonormal basis {E_i ^ E_j}_{i<j}.

    Normalised so that diagonal entries are sectional curvatures:
    M[(ij),(kl)] = <R(E_i,E_j)E_l, E_k>.
    """
    pairs = _pair_index(rt.n)
    r = rt.components
    m = np.array([[r[i, j, l, k] for (k, l) in pairs] for (i, j) in pairs])
    return m


def curvature_operator_spectrum(rt):
    return np.sort(np.linalg.eigvalsh(curvature_operator_matrix(rt)))


def _derivation_action(rt):
    """D[i,j,a,b,c,d] = (R(E_i,E_j) . R)(a,b,c,d), the curvature acting on itself
    as a derivation of tensors."""
    r = rt.components
    s = np.transpose(r, (0, 1, 3, 2))  # S[i,j,p,q] = R[i,j,q,p] = matrix of R(E_i,E_j)
    t1 = np.einsum("ijpa,pbcd->ijabcd", s, r)
    t2 = np.einsum("ijpb,apcd->ijabcd", s, r)
    t3 = np.einsum("ijpc,abpd->ijabcd", s, r)
    t4 = np.einsum("ijpd,abcp->ijabcd", s, r)
    return -(t1 + t2 + t3 + t4)


def semi_symmetry_residual(rt):
    """max |(R(E_i,E_j) . R)(a,b,c,d)| over i<j; zero characterises pointwise
    semi-symmetry."""
    return float(np.max(np.abs(_derivation_action(rt))))


def semi_symmetry_frobenius(rt):
    """Frobenius norm of R . R over i<j, an orthogonally invariant variant of
    the max-abs residual (the max is frame dependent for nonzero tensors)."""
    d = _derivation_action(rt)
    return float(np.sqrt(0.5 * np.sum(d * d)))


def random_algebraic_curvature(rng, n):
    """Random tensor with all algebraic curvature symmetries (incl. Bianchi)."""
    pairs = _pair_index(n)
    npairs = len(pairs)
    m = rng.normal(size=(npairs, npairs))
    m = 0.5 * (m + m.T)
    s = np.zeros((n, n, n, n))
    for p, (i, j) in enumerate(pairs):
        for q, (k, l) in enumerate(pairs):
            val = m[p, q]
            s[i, j, k, l] = val
            s[j, i, k, l] = -val
            s[i, j, l, k] = -val
            s[j, i, l, k] = val
    s = 0.5 * (s + np.transpose(s, (2, 3, 0, 1)))
    # subtract the totally antisymmetric (Bianchi) part
    b = (s + np.transpose(s, (1, 2, 0, 3)) + np.transpose(s, (2, 0, 1, 3))) / 3.0
    return s - b


def frame_iterate(frame, dirs, sfield, point):
    """Value of E_{dirs[0]}(E_{dirs[1]}(... (f))) at `point`.

    Outermost direction first; no commutation is assumed, the iterate is
    evaluated literally by pushing frame fields into chart jets.
    """
    k = len(dirs)
    if k == 0:
        return sfield.value(point)
    point = np.asarray(point, dtype=float)
    comps = frame.component_jets(point, k)
    g = sfield.jet(point, k)
    n = frame.n
    for d in reversed(dirs):
        sp = jet_space(n, g.order - 1)
        acc = np.zeros(sp.ncoeff)
        for a in range(n):
            acc += sp.mul_coeffs(comps.truncate(g.order - 1).coeffs[d, a], g.diff(a).coeffs)
        from .jets import Jet
        g = Jet(sp, acc)
    return g.value
