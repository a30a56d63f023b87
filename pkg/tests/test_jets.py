"""Jet arithmetic against analytic and finite-difference oracles."""

import math

import numpy as np
import pytest

from curvnull.jets import (
    DegenerateFieldError,
    Jet,
    JetDomainError,
    JetShapeError,
    ScalarField,
    coordinate_jets,
    eval_f_jet,
    jet_arith,
    jet_cos,
    jet_exp,
    jet_log,
    jet_reciprocal,
    jet_sin,
)


def fd_derivative(f, x, order, h):
    """Central finite difference for d^order f / dx^order, Richardson once.

    Step is widened with the order: float64 roundoff makes 1e-3 steps
    noise-dominated for 3rd/4th derivatives, so higher orders use a larger
    h and rely on the h^2 -> h^4 Richardson cancellation instead.
    """
    def stencil(step):
        ks = np.arange(-order, order + 1, 2)
        vals = np.array([f(x + k * step) for k in ks])
        coef = np.array([math.comb(order, i) * (-1) ** (order - i)
                         for i in range(order + 1)])
        return float(coef @ vals) / (2 * step) ** order

    d1, d2 = stencil(h), stencil(h / 2)
    return (4 * d2 - d1) / 3


class TestBasicArithmetic:
    def test_constant_and_variable(self):
        j = Jet.variable(1, 2.5, nvars=3, order=2)
        assert j.value == 2.5
        assert j.derivative_value((0, 1, 0)) == 1.0
        assert j.derivative_value((0, 0, 1)) == 0.0

    def test_coefficient_count(self):
        # number of monomials of degree <= order in nvars variables
        for nvars, order in [(1, 4), (3, 2), (5, 6), (8, 3)]:
            j = Jet.constant(1.0, nvars, order)
            assert len(j.coeffs) == math.comb(nvars + order, order)

    def test_polynomial_product_exact(self):
        x, y = coordinate_jets([1.0, -2.0], order=3)
        p = (x + 2 * y) * (x * x - y)  # degree 3, exact
        val = lambda a, b: (a + 2 * b) * (a * a - b)
        assert p.value == pytest.approx(val(1.0, -2.0), abs=1e-14)
        assert p.derivative_value((1, 0)) == pytest.approx(3 * 1.0 ** 2 + 4 * 1.0 * -2.0 - -2.0, abs=1e-12)

    def test_mul_commutative_associative(self):
        rng = np.random.default_rng(7)
        sp_args = dict(nvars=3, order=4)
        xs = coordinate_jets(rng.normal(size=3), 4)
        a = jet_exp(xs[0] * 0.3) * xs[1] + 1.0
        b = jet_sin(xs[2]) + xs[0]
        c = xs[1] * xs[2] - 2.0
        assert np.allclose((a * b).coeffs, (b * a).coeffs, atol=1e-14)
        assert np.allclose(((a * b) * c).coeffs, (a * (b * c)).coeffs, atol=1e-13)

    def test_shape_error(self):
        a = Jet.constant(1.0, 2, 3)
        b = Jet.constant(1.0, 2, 2)
        with pytest.raises(JetShapeError):
            _ = a + b

    def test_truncation_is_prefix(self):
        xs = coordinate_jets([0.3, 0.7], 4)
        j = jet_exp(xs[0] * xs[1])
        j3 = j.truncate(3)
        assert np.allclose(j.coeffs[: len(j3.coeffs)], j3.coeffs)


class TestUnivariateComposition:
    def test_exp_log_identity(self):
        # exp(log(j)) for a jet with constant term 2.0 recovers j
        xs = coordinate_jets([0.5], 3)
        j = 2.0 + xs[0] + 0.25 * xs[0] * xs[0]
        back = jet_exp(jet_log(j))
        assert np.allclose(back.coeffs, j.coeffs, atol=1e-14)

    def test_reciprocal(self):
        xs = coordinate_jets([0.2], 4)
        j = 1.5 + xs[0]
        r = jet_reciprocal(j)
        assert np.allclose((j * r).coeffs, Jet.constant(1.0, 1, 4).coeffs, atol=1e-14)

    def test_domain_errors(self):
        bad = Jet.constant(0.0, 1, 2)
        with pytest.raises(JetDomainError):
            jet_reciprocal(bad)
        with pytest.raises(JetDomainError):
            jet_log(Jet.constant(-1.0, 1, 2))

    def test_sin_cos_pythagoras(self):
        xs = coordinate_jets([0.9], 5)
        s, c = jet_sin(xs[0]), jet_cos(xs[0])
        one = s * s + c * c
        assert np.allclose(one.coeffs, Jet.constant(1.0, 1, 5).coeffs, atol=1e-14)

    def test_exp_against_finite_differences(self):
        # e^t at t = 0.5, order 4: each derivative within relative 1e-6 of FD
        t0 = 0.5
        j = jet_exp(coordinate_jets([t0], 4)[0])
        steps = {1: 1e-3, 2: 1e-3, 3: 1e-2, 4: 2e-2}
        for order, h in steps.items():
            fd = fd_derivative(math.exp, t0, order, h)
            exact = j.derivative_value((order,))
            assert abs(fd - exact) / abs(exact) < 1e-6


class TestJetArithDispatch:
    def test_ops(self):
        a = Jet.constant(3.0, 1, 2)
        b = Jet.constant(2.0, 1, 2)
        assert jet_arith(a, "add", b).value == 5.0
        assert jet_arith(a, "sub", b).value == 1.0
        assert jet_arith(a, "mul", b).value == 6.0
        assert jet_arith(a, "scale", 2.0).value == 6.0
        assert jet_arith(b, "reciprocal").value == 0.5
        assert jet_arith(b, "log").value == pytest.approx(math.log(2.0))
        assert jet_arith(b, "exp").value == pytest.approx(math.exp(2.0))
        with pytest.raises(ValueError):
            jet_arith(a, "frobnicate")

    def test_product_of_exponentials_is_constant(self):
        # f = e^t and g = e^-t multiply to the constant jet 1
        f = eval_f_jet(1.0, 0.0, 1.0, 0.0, 2)
        g = eval_f_jet(0.0, 1.0, 1.0, 0.0, 2)
        prod = jet_arith(f, "mul", g)
        assert np.allclose(prod.coeffs, [1.0, 0.0, 0.0], atol=1e-15)


class TestEvalFJet:
    def test_cosh_values(self):
        j = eval_f_jet(1.0, 1.0, 1.0, 0.0, 2)
        assert j.value == pytest.approx(2.0)
        assert j.derivative_value((1,)) == pytest.approx(0.0, abs=1e-15)
        assert j.derivative_value((2,)) == pytest.approx(2.0)

    def test_pure_exponential(self):
        j = eval_f_jet(1.0, 0.0, 2.0, 0.0, 1)
        assert j.value == pytest.approx(1.0)
        assert j.derivative_value((1,)) == pytest.approx(2.0)

    @pytest.mark.parametrize("c1,c2,a,t0", [(1, 1, 1, 0.0), (2, 0.5, 1.7, -0.4), (0, 3, 0.8, 1.1)])
    def test_ode_identity(self, c1, c2, a, t0):
        # f solves u'' = a^2 u by construction
        j = eval_f_jet(c1, c2, a, t0, 4)
        assert j.derivative_value((2,)) - a ** 2 * j.value == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("c1,c2,a,t0", [(1, 1, 1, 0.0), (1, 0, 2, 0.3), (0.5, 2, 1.3, -0.7)])
    def test_log_f_riccati_identity(self, c1, c2, a, t0):
        # (log f)'' + ((log f)')^2 = a^2, the identity that makes the deformed
        # curvature components constant
        phi = jet_log(eval_f_jet(c1, c2, a, t0, 3))
        lhs = phi.derivative_value((2,)) + phi.derivative_value((1,)) ** 2
        assert lhs == pytest.approx(a ** 2, abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateFieldError):
            eval_f_jet(0.0, 0.0, 1.0, 0.0, 2)
        with pytest.raises(ValueError):
            eval_f_jet(1.0, 1.0, -1.0, 0.0, 2)


class TestScalarField:
    def test_order_restriction_consistency(self):
        from curvnull.jets import jet_exp as je
        f = ScalarField(2, lambda xs: je(xs[0] * xs[1]) + xs[0])
        p = np.array([0.4, -1.1])
        j3 = f.jet(p, 3)
        j2 = f.jet(p, 2)
        assert np.allclose(j3.coeffs[: len(j2.coeffs)], j2.coeffs, atol=1e-15)
        assert f.value(p) == pytest.approx(j3.value)

    def test_field_algebra(self):
        x = ScalarField.coordinate(0, 2)
        y = ScalarField.coordinate(1, 2)
        g = (x * y + 1.0).reciprocal()
        p = np.array([0.5, 0.5])
        assert g.value(p) == pytest.approx(1 / 1.25)

    def test_mixed_derivatives_against_fd(self):
        # mixed partials up to total order 4 vs nested central differences
        from curvnull.jets import jet_exp as je, jet_sin as js
        f = ScalarField(2, lambda xs: je(0.5 * xs[0]) * js(xs[1]))
        fval = lambda p: math.exp(0.5 * p[0]) * math.sin(p[1])
        p = np.array([0.3, 0.8])
        jet = f.jet(p, 4)
        steps = {1: 1e-3, 2: 1e-3, 3: 1e-2, 4: 2e-2}
        for a in range(5):
            for b in range(5 - a):
                if a + b == 0:
                    continue
                h = steps[a + b]

                def partial_a(y, a=a):
                    return fd_derivative(lambda x: fval((x, y)), p[0], a, h) if a else fval((p[0], y))

                fd = fd_derivative(partial_a, p[1], b, h) if b else partial_a(p[1])
                exact = jet.derivative_value((a, b))
                scale = max(abs(exact), 1.0)
                assert abs(fd - exact) / scale < 1e-6, (a, b, fd, exact)
