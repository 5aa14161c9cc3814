import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaseosc.coupling import TWO_PI, HarmonicCoupling, antiderivative
from phaseosc.system import (
    SystemParams, divergence, integrate, jacobian, lift, potential, reduce, reduced_field,
    reduced_jacobian, vector_field,
)


def random_coupling(rng, L=3, c0=True):
    terms = tuple((j, rng.uniform(-1.5, 1.5), rng.uniform(0, TWO_PI)) for j in range(1, L + 1))
    return HarmonicCoupling(terms, c0=rng.uniform(-1, 1) if c0 else 0.0)


def double_loop_field(p, theta):
    N = len(theta)
    return np.array([p.omega + sum(p.g(theta[k] - theta[j]) for j in range(N)) / N for k in range(N)])


def fd_jacobian(p, theta, h=1e-6):
    N = len(theta)
    J = np.empty((N, N))
    for m in range(N):
        e = np.zeros(N)
        e[m] = h
        J[:, m] = (vector_field(p, theta + e) - vector_field(p, theta - e)) / (2 * h)
    return J


seeds = st.integers(0, 2**32 - 1)
sizes = st.integers(2, 6)


class TestVectorField:
    def test_sync(self):
        g = HarmonicCoupling.two_harmonic(-1, 0.4, 0.3, 1.0)
        p = SystemParams(5, 0.3, g)
        assert np.allclose(vector_field(p, np.full(5, 1.7)), 0.3 + g(0.0), atol=1e-15)

    def test_splay_odd(self):
        p = SystemParams(3, 0.7, HarmonicCoupling.two_harmonic(-1, 0, 0, 0))
        assert np.allclose(vector_field(p, [0, TWO_PI / 3, 2 * TWO_PI / 3]), 0.7, atol=1e-15)

    @given(seeds, sizes)
    def test_double_loop_oracle(self, seed, N):
        rng = np.random.default_rng(seed)
        p = SystemParams(N, rng.normal(), random_coupling(rng))
        th = rng.uniform(0, TWO_PI, N)
        assert np.max(np.abs(vector_field(p, th) - double_loop_field(p, th))) < 1e-14 * 10

    @given(seeds, sizes, st.floats(-10, 10))
    def test_translation_and_permutation(self, seed, N, s):
        rng = np.random.default_rng(seed)
        p = SystemParams(N, rng.normal(), random_coupling(rng))
        th = rng.uniform(0, TWO_PI, N)
        F = vector_field(p, th)
        assert np.max(np.abs(vector_field(p, th + s) - F)) < 1e-13 * max(1, abs(s))
        perm = rng.permutation(N)
        assert np.max(np.abs(vector_field(p, th[perm]) - F[perm])) < 1e-13

    def test_batch_shape(self):
        p = SystemParams(3, 0.0, HarmonicCoupling.two_harmonic(-1, 0.2, 0, 0))
        assert vector_field(p, np.zeros((4, 2, 3))).shape == (4, 2, 3)

    def test_dimension_checked(self):
        with pytest.raises(ValueError):
            vector_field(SystemParams(3, 0.0, HarmonicCoupling()), np.zeros(4))

    def test_needs_two_oscillators(self):
        with pytest.raises(ValueError):
            SystemParams(1, 0.0, HarmonicCoupling())


class TestReduced:
    def test_splay_is_equilibrium(self):
        p = SystemParams(3, 0.0, HarmonicCoupling.two_harmonic(-1, 0, 0, 0))
        psi = np.array([TWO_PI / 3, 2 * TWO_PI / 3])
        assert np.max(np.abs(reduced_field(p, psi))) < 1e-15

    @given(seeds, sizes, st.floats(-5, 5))
    def test_lift_and_omega_independence(self, seed, N, shift):
        rng = np.random.default_rng(seed)
        g = random_coupling(rng)
        th = rng.uniform(0, TWO_PI, N)
        p0, p5 = SystemParams(N, 0.0, g), SystemParams(N, 5.0, g)
        psi = reduce(th)
        F = vector_field(p5, th + shift)
        assert np.max(np.abs(reduced_field(p0, psi) - reduced_field(p5, psi))) < 1e-13
        assert np.max(np.abs(reduced_field(p0, psi) - (F[1:] - F[0]))) < 1e-13

    def test_lift_reduce(self):
        psi = np.array([0.3, 1.2])
        assert np.array_equal(reduce(lift(psi)), psi)


class TestJacobian:
    @given(seeds, sizes)
    def test_row_sums_and_finite_difference(self, seed, N):
        rng = np.random.default_rng(seed)
        p = SystemParams(N, 0.2, random_coupling(rng))
        th = rng.uniform(0, TWO_PI, N)
        J = jacobian(p, th)
        assert np.max(np.abs(J.sum(axis=1))) < 1e-14 * 10
        assert np.max(np.abs(J - fd_jacobian(p, th))) < 1e-6

    def test_splay_spectrum(self):
        p = SystemParams(3, 0.0, HarmonicCoupling.two_harmonic(-1, 0, 0, 0))
        ev = np.sort(np.linalg.eigvals(jacobian(p, [0, TWO_PI / 3, 2 * TWO_PI / 3])).real)
        assert np.allclose(ev, [0, 0.5, 0.5], atol=1e-12)

    @settings(max_examples=30)
    @given(seeds, st.integers(2, 5))
    def test_reduced_jacobian_finite_difference(self, seed, N):
        rng = np.random.default_rng(seed)
        p = SystemParams(N, 0.0, random_coupling(rng))
        psi = rng.uniform(0, TWO_PI, N - 1)
        h = 1e-6
        fd = np.column_stack([(reduced_field(p, psi + h * e) - reduced_field(p, psi - h * e)) / (2 * h)
                              for e in np.eye(N - 1)])
        assert np.max(np.abs(reduced_jacobian(p, psi) - fd)) < 1e-6


class TestDivergence:
    @given(seeds, sizes)
    def test_trace(self, seed, N):
        rng = np.random.default_rng(seed)
        p = SystemParams(N, 0.0, random_coupling(rng))
        th = rng.uniform(0, TWO_PI, N)
        assert abs(divergence(p, th) - np.trace(jacobian(p, th))) < 1e-13

    def test_even_is_divergence_free(self):
        rng = np.random.default_rng(3)
        p = SystemParams(4, 0.0, HarmonicCoupling.even_cosine([0, 1, 1]))
        assert np.max(np.abs(divergence(p, rng.uniform(0, TWO_PI, (50, 4))))) < 1e-13

    def test_odd_double_loop(self):
        p = SystemParams(3, 0.0, HarmonicCoupling.two_harmonic(-1, 0, 0, 0))
        th = np.array([0, math.pi / 2, math.pi])
        ref = sum(p.g.eval(th[k] - th[j], 1) for k in range(3) for j in range(3) if j != k) / 3
        assert divergence(p, th) == pytest.approx(ref, abs=1e-15)
        assert abs(ref) > 0.1

    def test_sync(self):
        g = HarmonicCoupling.two_harmonic(-1, 0.3, 0.5, 0.2)
        p = SystemParams(5, 0.0, g)
        assert divergence(p, np.zeros(5)) == pytest.approx(4 * g.eval(0.0, 1), abs=1e-14)


class TestPotential:
    def test_two_oscillators(self):
        p = SystemParams(2, 0.0, HarmonicCoupling.two_harmonic(-1, 0, 0, 0))
        assert potential(p, [0, math.pi / 2]) == pytest.approx(0.5, abs=1e-15)

    def test_rejects_non_odd(self):
        with pytest.raises(ValueError):
            potential(SystemParams(3, 0.0, HarmonicCoupling.even_cosine([0, 1])), np.zeros(3))

    @given(seeds, sizes, st.floats(-5, 5))
    def test_gradient_identity_and_shift(self, seed, N, s):
        rng = np.random.default_rng(seed)
        odd = HarmonicCoupling(tuple((j, rng.uniform(-1, 1), 0.0) for j in (1, 2, 3)))
        p = SystemParams(N, 0.4, odd)
        th = rng.uniform(0, TWO_PI, N)
        h = 1e-6
        grad = np.array([(potential(p, th + h * e) - potential(p, th - h * e)) / (2 * h) for e in np.eye(N)])
        assert np.max(np.abs(vector_field(p, th) - p.omega + grad)) < 1e-6
        assert abs(potential(p, th + s) - potential(p, th)) < 1e-13

    def test_non_increasing_along_flow(self):
        p = SystemParams(4, 0.0, HarmonicCoupling(((1, -1.0, 0.0), (2, 0.4, 0.0))))
        tr = integrate(p, [0.1, 1.0, 2.5, 4.0], 10.0)
        V = potential(p, tr.states)
        assert np.all(np.diff(V) <= 1e-9)


class TestIntegrate:
    def test_sync_rotation(self):
        g = HarmonicCoupling.two_harmonic(-1, 0.3, 0.4, 0.1)
        p = SystemParams(3, 0.8, g)
        tr = integrate(p, np.full(3, 0.2), 10.0)
        expected = 0.2 + (0.8 + g(0.0)) * 10.0
        assert np.max(np.abs(tr.states[-1] - expected)) < 1e-8

    def test_splay_relative_equilibrium(self):
        p = SystemParams(3, 0.5, HarmonicCoupling.two_harmonic(-1, 0.7, 0.3, 1.1))
        th0 = np.array([0, TWO_PI / 3, 2 * TWO_PI / 3])
        tr = integrate(p, th0, 10.0)
        d = reduce(tr.states) - reduce(th0)
        assert np.max(np.abs(d)) < 1e-8

    def test_reversibility_even(self):
        rng = np.random.default_rng(11)
        p = SystemParams(4, 0.0, HarmonicCoupling.even_cosine([0, 1.0, 0.5, -0.3]))
        th0 = rng.uniform(0, TWO_PI, 4)
        fwd = integrate(p, -th0, 20.0).states[-1]
        bwd = integrate(p, th0, -20.0).states[-1]
        assert np.max(np.abs(fwd + bwd)) < 1e-6

    def test_t_eval_and_csv(self, tmp_path):
        p = SystemParams(3, 0.0, HarmonicCoupling.two_harmonic(-1, 0, 0, 0))
        tr = integrate(p, [0, 0.1, 0.2], 1.0, t_eval=[0.0, 0.5, 1.0])
        path = tmp_path / "tr.csv"
        tr.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,theta_1,theta_2,theta_3" and len(lines) == 4
        assert float(lines[2].split(",")[0]) == 0.5

    def test_zero_time_rejected(self):
        with pytest.raises(ValueError):
            integrate(SystemParams(2, 0.0, HarmonicCoupling()), [0, 1], 0.0)
