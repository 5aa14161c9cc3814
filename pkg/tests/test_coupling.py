import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaseosc.coupling import (
    TWO_PI, HarmonicCoupling, TwoHarmonicParams, antiderivative, canonicalize, even_odd_parts,
    max_abs_difference, param_symmetry, wrap_angle,
)

GRID = np.linspace(0.0, TWO_PI, 1000, endpoint=False)

angles = st.floats(-10.0, 10.0, allow_nan=False)
amps = st.floats(-3.0, 3.0, allow_nan=False)


@st.composite
def couplings(draw, max_j=4):
    js = draw(st.lists(st.integers(1, max_j), min_size=1, max_size=max_j, unique=True))
    terms = tuple((j, draw(amps), draw(angles)) for j in js)
    return HarmonicCoupling(terms, c0=draw(amps))


two_params = st.builds(TwoHarmonicParams, amps, amps, angles, angles)


class TestEval:
    def test_minus_sine(self):
        g = HarmonicCoupling.two_harmonic(-1, 0, 0, 0)
        assert g.eval(math.pi / 2, 0) == pytest.approx(-1.0, abs=1e-15)
        assert g.eval(0.0, 1) == pytest.approx(-1.0, abs=1e-15)

    def test_sync_threshold_derivative(self):
        # g'(0) = -cos α + 2 r cos β vanishes at r = 1/2, α = β = 0
        g = HarmonicCoupling.two_harmonic(-1, 0.5, 0, 0)
        assert abs(g.eval(0.0, 1)) < 1e-15

    def test_even_cosine_at_zero(self):
        g = HarmonicCoupling.even_cosine([0, 1, 1])
        assert g(0.0) == pytest.approx(2.0, abs=1e-15)

    def test_rejects_order_three(self):
        with pytest.raises(ValueError):
            HarmonicCoupling.two_harmonic(-1, 0, 0, 0).eval(0.0, 3)

    def test_duplicate_harmonic_rejected(self):
        with pytest.raises(ValueError):
            HarmonicCoupling(((1, 1.0, 0.0), (1, 2.0, 0.0)))

    def test_max_index(self):
        assert HarmonicCoupling(((3, 0.0, 0.0), (2, 1.0, 0.0))).L == 2
        assert HarmonicCoupling().L == 0

    def test_vectorised_matches_scalar(self):
        g = HarmonicCoupling.two_harmonic(-1, 0.3, 0.2, 1.1)
        vec = g(GRID[:10])
        assert np.allclose(vec, [g(float(x)) for x in GRID[:10]], atol=0, rtol=0)

    @given(couplings(), st.floats(-20, 20))
    def test_periodic(self, g, phi):
        assert abs(g(phi + TWO_PI) - g(phi)) < 1e-13 * max(1.0, abs(phi))

    @settings(max_examples=100)
    @given(couplings(), st.floats(-4, 4))
    def test_derivative_matches_finite_difference(self, g, phi):
        h = 1e-5
        for order in (1, 2):
            fd = (g.eval(phi + h, order - 1) - g.eval(phi - h, order - 1)) / (2 * h)
            assert abs(g.eval(phi, order) - fd) < 1e-6 * max(1.0, abs(fd))

    @given(couplings())
    def test_fourier_round_trip(self, g):
        c0, a, b = g.fourier()
        h = HarmonicCoupling.from_fourier(c0, a, b)
        assert max_abs_difference(g, h) < 1e-12


class TestJson:
    def test_three_forms(self):
        a = HarmonicCoupling.from_json({"two_harmonic": {"q": -1, "r": 0.3, "alpha": 0.1, "beta": 0.2}})
        b = HarmonicCoupling.from_json({"harmonics": [[1, -1, 0.1], [2, 0.3, 0.2]], "c0": 0})
        c = HarmonicCoupling.from_json({"even_cosine": [0.5, 1.0]})
        assert max_abs_difference(a, b) < 1e-15
        assert max_abs_difference(c, lambda x: 0.5 + np.cos(x)) < 1e-15

    def test_round_trip(self):
        g = HarmonicCoupling(((1, -1.0, 0.3), (3, 0.2, 1.0)), c0=0.1)
        assert HarmonicCoupling.from_json(g.to_json()) == g

    @pytest.mark.parametrize("bad", [{}, {"two_harmonic": {"q": 1}}, {"sines": [1]}, [1, 2]])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            HarmonicCoupling.from_json(bad)


class TestAntiderivative:
    def test_minus_sine(self):
        G = antiderivative(HarmonicCoupling.two_harmonic(-1, 0, 0, 0))
        assert max_abs_difference(G, lambda x: np.cos(x) - 1) < 1e-15
        assert not G.multivalued

    def test_cosine(self):
        G = antiderivative(HarmonicCoupling.even_cosine([0, 1]))
        assert max_abs_difference(G, np.sin) < 1e-15

    def test_mean_recorded(self):
        G = antiderivative(HarmonicCoupling.even_cosine([1, 1]))
        assert G.subtracted_mean == 1.0 and G.multivalued
        assert max_abs_difference(G, np.sin) < 1e-15

    @given(couplings())
    def test_primitive_property(self, g):
        G = antiderivative(g)
        assert abs(G(0.0)) < 1e-13 and abs(G(TWO_PI)) < 1e-12
        assert max_abs_difference(lambda x: G.G.eval(x, 1) + G.subtracted_mean, g) < 1e-12


class TestEvenOdd:
    def test_odd_input(self):
        g = HarmonicCoupling.two_harmonic(-1, 0, 0, 0)
        ev, od = even_odd_parts(g)
        assert max_abs_difference(ev, lambda x: 0 * x) < 1e-15
        assert max_abs_difference(od, lambda x: -np.sin(x)) < 1e-15

    def test_two_harmonic_even_case(self):
        g = HarmonicCoupling.two_harmonic(-1, 1, math.pi / 2, math.pi / 2)
        ev, od = even_odd_parts(g)
        assert max_abs_difference(ev, lambda x: np.cos(x) - np.cos(2 * x)) < 1e-14
        assert max_abs_difference(od, lambda x: 0 * x) < 1e-14

    def test_two_harmonic_formula(self):
        q, r, a, b = -0.7, 0.4, 0.3, 1.2
        ev, od = even_odd_parts(HarmonicCoupling.two_harmonic(q, r, a, b))
        assert max_abs_difference(ev, lambda x: -q * np.cos(x) * np.sin(a) - r * np.cos(2 * x) * np.sin(b)) < 1e-14
        assert max_abs_difference(od, lambda x: q * np.sin(x) * np.cos(a) + r * np.sin(2 * x) * np.cos(b)) < 1e-14

    @given(couplings())
    def test_parity_and_reconstruction(self, g):
        ev, od = even_odd_parts(g)
        assert max_abs_difference(ev, lambda x: ev(-x)) < 1e-13
        assert max_abs_difference(od, lambda x: -od(-x)) < 1e-13
        assert max_abs_difference(lambda x: ev(x) + od(x), g) < 1e-14 * max(1.0, max(abs(g(GRID))))
        assert ev.is_even() and od.is_odd()


class TestSymmetries:
    def test_flip_q(self):
        p = TwoHarmonicParams(1, 0.3, 0.2, 0.1)
        f = param_symmetry("flip_q", p)
        assert f.q == -1 and f.r == 0.3
        assert f.alpha == pytest.approx(0.2 + math.pi) and f.beta == pytest.approx(0.1)
        assert max_abs_difference(p.coupling(), f.coupling()) < 1e-14

    def test_time_reversal_negates(self):
        p = TwoHarmonicParams(-1, 0.5, 0, 0)
        f = param_symmetry("time_reversal", p)
        assert (f.alpha, f.beta) == pytest.approx((math.pi, math.pi))
        assert max_abs_difference(f.coupling(), lambda x: -p.coupling()(x)) < 1e-14

    @given(two_params)
    def test_relations(self, p):
        g = p.coupling()
        assert max_abs_difference(param_symmetry("flip_q", p).coupling(), g) < 1e-13
        assert max_abs_difference(param_symmetry("flip_r", p).coupling(), g) < 1e-13

    @given(amps, angles, angles)
    def test_reversal_kinds(self, r, a, b):
        p = TwoHarmonicParams(-1.0, r, a, b)
        g = p.coupling()
        tr = param_symmetry("time_reversal", p).coupling()
        ph = param_symmetry("phase_reversal", p).coupling()
        assert max_abs_difference(tr, lambda x: -g(x)) < 1e-13
        assert max_abs_difference(ph, lambda x: -g(-x)) < 1e-13
        twice = param_symmetry("phase_reversal", param_symmetry("phase_reversal", p))
        assert twice.r == r
        for x, y in ((twice.alpha, a), (twice.beta, b)):
            d = wrap_angle(x - y)
            assert min(d, TWO_PI - d) < 1e-12

    def test_reversal_needs_unit_q(self):
        with pytest.raises(ValueError):
            param_symmetry("time_reversal", TwoHarmonicParams(2, 0, 0, 0))
        with pytest.raises(ValueError):
            param_symmetry("phase_reversal", TwoHarmonicParams(1, 0, 0, 0))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            param_symmetry("mirror", TwoHarmonicParams(-1, 0, 0, 0))


class TestCanonicalize:
    def test_rescaled_example(self):
        p = TwoHarmonicParams(2, -0.5, 0.1, 0.2)
        c = canonicalize(p)
        assert c.params.q == -1 and c.time_scale == 2
        assert c.params.r == pytest.approx(0.25)
        assert c.params.alpha == pytest.approx(0.1 + math.pi)
        assert c.params.beta == pytest.approx(0.2 + math.pi)
        assert max_abs_difference(p.coupling(), lambda x: c.time_scale * c.params.coupling()(x)) < 1e-14
        assert c.needs_time_reversal

    def test_already_canonical(self):
        c = canonicalize(TwoHarmonicParams(-1, 0.5, 0.1, 0.2))
        assert c.params == TwoHarmonicParams(-1, 0.5, 0.1, 0.2) and c.time_scale == 1
        assert not c.needs_time_reversal

    def test_flip_r(self):
        c = canonicalize(TwoHarmonicParams(-1, -0.5, 0, 0))
        assert c.params.as_tuple() == pytest.approx((-1, 0.5, 0, math.pi))

    def test_zero_q(self):
        with pytest.raises(ValueError):
            canonicalize(TwoHarmonicParams(0, 1, 0, 0))

    def test_overflow_rejected(self):
        with pytest.raises(ValueError):
            canonicalize(TwoHarmonicParams(1e-320, 1.0, 0, 0))

    @given(two_params.filter(lambda p: abs(p.q) > 1e-6))
    def test_pointwise(self, p):
        c = canonicalize(p)
        assert c.params.q == -1 and c.params.r >= 0 and c.time_scale > 0
        assert 0 <= c.params.alpha < TWO_PI and 0 <= c.params.beta < TWO_PI
        assert max_abs_difference(p.coupling(), lambda x: c.time_scale * c.params.coupling()(x)) < 1e-12


def test_wrap_angle():
    assert wrap_angle(-1e-20) == 0.0
    assert wrap_angle(TWO_PI) == 0.0
    assert wrap_angle(np.array([-0.5, 7.0])) == pytest.approx([TWO_PI - 0.5, 7.0 - TWO_PI])
