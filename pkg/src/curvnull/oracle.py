"""Finite-difference curvature oracle and geodesic probes (path C).

This path works exclusively from chart metric components: Christoffel
symbols by Richardson-extrapolated central differences of the metric,
curvature by a further central difference of the Christoffels, then a
change to an orthonormal frame for comparison with paths A and B.  It
shares no code with those paths beyond the metric evaluator itself; the
independence is its entire value.

The outer differentiation is a plain second-order stencil, so the final
curvature error scales like h^2 (halving h shrinks the disagreement with
the closed-form paths about fourfold in the truncation-dominated regime).
"""

from dataclasses import dataclass

import numpy as np

from .frames import CurvatureTensor, GeometryError


@dataclass
class Chart:
    """A coordinate chart carrying only a metric evaluator."""

    dim: int
    metric: callable   # point -> (dim, dim) SPD matrix

    def metric_at(self, point):
        g = np.asarray(self.metric(np.asarray(point, dtype=float)), dtype=float)
        if g.shape != (self.dim, self.dim):
            raise GeometryError(f"metric evaluator returned shape {g.shape}")
        if np.max(np.abs(g - g.T)) > 1e-14 * max(1.0, np.max(np.abs(g))):
            raise GeometryError("metric not symmetric at the requested point")
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise GeometryError("metric not positive definite at the requested point")
        return g


def _metric_derivatives(chart, point, h, richardson=True):
    """dg[a, i, j] = d_a g_ij by central differences, one Richardson level."""
    point = np.asarray(point, dtype=float)
    n = chart.dim

    def central(step):
        out = np.zeros((n, n, n))
        for a in range(n):
            e = np.zeros(n)
            e[a] = step
            out[a] = (chart.metric_at(point + e) - chart.metric_at(point - e)) / (2 * step)
        return out

    if not richardson:
        return central(h)
    d1 = central(h)
    d2 = central(h / 2)
    return (4.0 * d2 - d1) / 3.0


def christoffel_fd(chart, point, h=1e-3, richardson=True):
    """Coordinate Christoffel symbols Gamma^c_{ab} from metric differences.

    With one Richardson level the truncation is O(h^4), so the default
    step sits near the float64 optimum (error ~ 1e-12 relative)."""
    point = np.asarray(point, dtype=float)
    g = chart.metric_at(point)
    ginv = np.linalg.inv(g)
    dg = _metric_derivatives(chart, point, h, richardson)
    # Gamma^c_ab = 1/2 g^{cd} (d_a g_db + d_b g_da - d_d g_ab)
    bracket = np.einsum("adb->abd", dg) + np.einsum("bda->abd", dg) - dg.transpose(1, 2, 0)
    return 0.5 * np.einsum("cd,abd->cab", ginv, bracket)


def _gram_schmidt(columns, g):
    """g-orthonormalise the columns (modified Gram-Schmidt)."""
    q = np.array(columns, dtype=float)
    n = q.shape[1]
    for i in range(n):
        for j in range(i):
            q[:, i] -= (q[:, j] @ g @ q[:, i]) * q[:, j]
        nrm = float(np.sqrt(q[:, i] @ g @ q[:, i]))
        if nrm < 1e-12:
            raise GeometryError("degenerate frame hint for orthonormalisation")
        q[:, i] /= nrm
    return q


def curvature_fd(chart, point, h=1e-4, frame_hint=None, christoffel_h=1e-3):
    """Curvature tensor from nested finite differences, in an orthonormal frame.

    The Christoffel evaluations keep their own (near-optimal) inner step,
    so the outer differentiation at `h` dominates the error with a clean
    O(h^2) signature.  `frame_hint` (columns = chart components of the
    model frame) is orthonormalised against the exact metric and used for
    the comparison frame; without it the coordinate basis is used.
    """
    point = np.asarray(point, dtype=float)
    n = chart.dim
    gamma0 = christoffel_fd(chart, point, christoffel_h)
    dgamma = np.zeros((n, n, n, n))   # dgamma[a, c, d, e] = d_a Gamma^c_{de}
    for a in range(n):
        e = np.zeros(n)
        e[a] = h
        dgamma[a] = (christoffel_fd(chart, point + e, christoffel_h)
                     - christoffel_fd(chart, point - e, christoffel_h)) / (2 * h)
    # R(d_a, d_b) d_c = (d_a Gamma^d_bc - d_b Gamma^d_ac
    #                    + Gamma^e_bc Gamma^d_ae - Gamma^e_ac Gamma^d_be) d_d
    rup = (np.einsum("adbc->abcd", dgamma) - np.einsum("bdac->abcd", dgamma)
           + np.einsum("ebc,dae->abcd", gamma0, gamma0)
           - np.einsum("eac,dbe->abcd", gamma0, gamma0))
    g = chart.metric_at(point)
    rdown = np.einsum("abcd,dl->abcl", rup, g)
    basis = frame_hint if frame_hint is not None else np.eye(n)
    q = _gram_schmidt(basis, g)
    rframe = np.einsum("ai,bj,ck,dl,abcd->ijkl", q, q, q, q, rdown)
    return CurvatureTensor(rframe, point)


def fd_convergence_ratio(chart, point, reference, h, frame_hint=None):
    """|R_fd(h) - R_ref|_max / |R_fd(h/2) - R_ref|_max, about 4 for an
    h^2-accurate oracle in the truncation-dominated regime."""
    e1 = np.max(np.abs(curvature_fd(chart, point, h, frame_hint).components - reference))
    e2 = np.max(np.abs(curvature_fd(chart, point, h / 2, frame_hint).components - reference))
    return float(e1 / max(e2, 1e-300))


def curvature_fd_error_curve(chart, point, reference, steps, frame_hint=None):
    """Max-abs disagreement with a reference tensor for each outer step."""
    return [float(np.max(np.abs(curvature_fd(chart, point, h, frame_hint).components
                                - reference))) for h in steps]


@dataclass
class GeodesicResult:
    trajectory: np.ndarray     # (steps + 1, dim)
    velocities: np.ndarray
    arc_length: float
    energy_drift: float        # max relative change of <v, v>
    completed: bool            # False if the metric stopped being evaluable


def geodesic_shoot(chart, point, velocity, length, step, fd_h=1e-5):
    """Classical RK4 integration of the geodesic equation.

    The initial velocity is normalised to unit speed, so `length` equals
    integration time; energy <v,v> should be conserved to ~1e-6 relative.
    Christoffels use single-level central differences here: at fd_h = 1e-5
    their error (~1e-10) is far below the integrator truncation.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(point, dtype=float).copy()
    v = np.asarray(velocity, dtype=float).copy()
    g0 = chart.metric_at(x)
    speed = np.sqrt(v @ g0 @ v)
    if speed < 1e-14:
        raise ValueError("zero initial velocity")
    v /= speed

    def acc(xx, vv):
        gam = christoffel_fd(chart, xx, fd_h, richardson=False)
        return -np.einsum("cab,a,b->c", gam, vv, vv)

    nsteps = int(round(length / step))
    xs = [x.copy()]
    vs = [v.copy()]
    energies = [float(v @ chart.metric_at(x) @ v)]
    completed = True
    for _ in range(nsteps):
        try:
            k1x, k1v = v, acc(x, v)
            k2x, k2v = v + 0.5 * step * k1v, acc(x + 0.5 * step * k1x, v + 0.5 * step * k1v)
            k3x, k3v = v + 0.5 * step * k2v, acc(x + 0.5 * step * k2x, v + 0.5 * step * k2v)
            k4x, k4v = v + step * k3v, acc(x + step * k3x, v + step * k3v)
            x = x + (step / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
            v = v + (step / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
            energies.append(float(v @ chart.metric_at(x) @ v))
        except GeometryError:
            completed = False
            break
        xs.append(x.copy())
        vs.append(v.copy())
    energies = np.array(energies)
    drift = float(np.max(np.abs(energies - energies[0])) / energies[0])
    traj = np.array(xs)
    seg = np.diff(traj, axis=0)
    arc = float(sum(np.sqrt(s @ chart.metric_at(xx) @ s)
                    for s, xx in zip(seg, traj[:-1])))
    return GeodesicResult(traj, np.array(vs), arc, drift, completed)
