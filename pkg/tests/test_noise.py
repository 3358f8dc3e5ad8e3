"""Stochastic convolution tests.

Independent oracles: Euler-Maruyama integration for the Gaussian laws,
numerical quadrature of the variance-of-parts integral for the wave
covariance, and moment identities for the compound-Poisson sampler.
"""
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import expm

from spdecutoff import (
    EigenSystem,
    JumpMark,
    NoiseSpec,
    build_box_eigensystem,
    heat_gaussian_convolution_law,
    heat_levy_second_moment,
    log_moment_check,
    sample_heat_gaussian_convolution,
    sample_heat_levy_convolution,
    sample_wave_gaussian_convolution,
    wave_gaussian_convolution_law,
    wave_spectrum,
    stream,
)
from spdecutoff.errors import DegenerateNoiseError, InvalidTimeError
from spdecutoff.noise_sim import levy_compensator_heat, sample_jump_realization


def make_heat_spec(lams=(1.0, 4.0), q=(2.0, 8.0)):
    system = EigenSystem.from_lambdas(lams)
    return NoiseSpec(system=system, gaussian_q=np.asarray(q, dtype=float))


class TestHeatGaussianLaw:
    def test_zero_time(self):
        spec = make_heat_spec()
        assert np.array_equal(heat_gaussian_convolution_law(0.0, spec), [0.0, 0.0])

    def test_equilibrium_unit_variance(self):
        # q = 2 lambda gives unit equilibrium variance
        spec = make_heat_spec(lams=(1.0, 4.0), q=(2.0, 8.0))
        assert np.allclose(heat_gaussian_convolution_law(math.inf, spec), [1.0, 1.0])

    def test_explicit_finite_time(self):
        spec = make_heat_spec(lams=(1.0,), q=(2.0,))
        v = heat_gaussian_convolution_law(0.5, spec)
        assert v[0] == pytest.approx(1.0 - math.exp(-1.0), rel=1e-14)

    def test_monotone_in_time(self):
        spec = make_heat_spec()
        prev = np.zeros(2)
        for t in np.linspace(0.1, 5, 20):
            v = heat_gaussian_convolution_law(float(t), spec)
            assert np.all(v >= prev - 1e-15)
            prev = v

    def test_euler_maruyama_oracle(self):
        spec = make_heat_spec(lams=(1.0, 4.0), q=(2.0, 1.0))
        t, dt, n = 0.7, 1e-3, 60_000
        rng = np.random.default_rng(100)
        steps = int(round(t / dt))
        x = np.zeros((n, 2))
        lam = spec.system.lambdas
        sq = np.sqrt(spec.gaussian_q * dt)
        for _ in range(steps):
            x += -lam * x * dt + sq * rng.standard_normal((n, 2))
        var_mc = x.var(axis=0)
        se = var_mc * math.sqrt(2.0 / (n - 1))  # SE of a normal variance estimate
        v = heat_gaussian_convolution_law(t, spec)
        # EM has O(dt) bias on the variance: var * (1 - lam * dt) scale
        assert np.all(np.abs(var_mc - v) <= 4.0 * se + 2.0 * lam * dt * v)


class TestWaveGaussianLaw:
    def make(self, gamma=1.0, lams=(1.0,), q=(1.0,)):
        system = EigenSystem.from_lambdas(lams)
        spec = NoiseSpec(system=system, gaussian_q=np.asarray(q, dtype=float))
        return spec, wave_spectrum(gamma, system)

    def test_zero_time(self):
        spec, wsp = self.make()
        assert np.allclose(wave_gaussian_convolution_law(0.0, spec, wsp), 0.0, atol=1e-15)

    def test_equilibrium_closed_form(self):
        spec, wsp = self.make(gamma=1.0, lams=(1.0,), q=(1.0,))
        s = wave_gaussian_convolution_law(math.inf, spec, wsp)[0]
        assert np.allclose(s, [[0.5, 0.0], [0.0, 0.5]], atol=1e-14)

    def test_equilibrium_solves_lyapunov(self):
        spec, wsp = self.make(gamma=2.5, lams=(3.0,), q=(0.7,))
        s = wave_gaussian_convolution_law(math.inf, spec, wsp)[0]
        A = np.array([[0.0, 1.0], [-3.0, -2.5]])
        res = A @ s + s @ A.T + 0.7 * np.outer([0, 1], [0, 1])
        assert np.allclose(res, 0.0, atol=1e-13)

    def test_quadrature_oracle_finite_time(self):
        spec, wsp = self.make(gamma=1.0, lams=(2.0,), q=(1.3,))
        A = np.array([[0.0, 1.0], [-2.0, -1.0]])
        t = 1.4
        s = wave_gaussian_convolution_law(t, spec, wsp)[0]
        for i in range(2):
            for j in range(2):
                val, _ = quad(
                    lambda u: 1.3 * (expm(u * A) @ np.array([0.0, 1.0]))[i]
                    * (expm(u * A) @ np.array([0.0, 1.0]))[j],
                    0.0,
                    t,
                    limit=200,
                )
                assert s[i, j] == pytest.approx(val, abs=1e-9)

    def test_trace_monotone(self):
        spec, wsp = self.make(gamma=3.0, lams=(2.0,), q=(1.0,))
        traces = [np.trace(wave_gaussian_convolution_law(float(t), spec, wsp)[0])
                  for t in np.linspace(0.05, 12, 40)]
        assert all(b >= a - 1e-12 for a, b in zip(traces, traces[1:]))


class TestGaussianSamplers:
    def test_heat_sampler_moments(self):
        spec = make_heat_spec(lams=(1.0, 4.0), q=(2.0, 1.0))
        rng = stream(7, 0)
        x = sample_heat_gaussian_convolution(0.9, spec, rng, size=80_000)
        v = heat_gaussian_convolution_law(0.9, spec)
        se = v * math.sqrt(2.0 / 80_000)
        assert np.all(np.abs(x.var(axis=0) - v) <= 4.0 * se)
        assert np.all(np.abs(x.mean(axis=0)) <= 4.0 * np.sqrt(v / 80_000))

    def test_zero_intensity_mode_is_exactly_zero(self):
        system = EigenSystem.from_lambdas([1.0, 2.0])
        spec = NoiseSpec(system=system, gaussian_q=np.array([0.0, 1.0]))
        x = sample_heat_gaussian_convolution(1.0, spec, stream(7, 1), size=100)
        assert np.all(x[:, 0] == 0.0)

    def test_reproducible_streams(self):
        spec = make_heat_spec()
        a = sample_heat_gaussian_convolution(1.0, spec, stream(42, 3), size=5)
        b = sample_heat_gaussian_convolution(1.0, spec, stream(42, 3), size=5)
        c = sample_heat_gaussian_convolution(1.0, spec, stream(42, 4), size=5)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_wave_sampler_covariance(self):
        system = EigenSystem.from_lambdas([2.0])
        spec = NoiseSpec(system=system, gaussian_q=np.array([1.0]))
        wsp = wave_spectrum(1.0, system)
        n = 40_000
        rng = stream(9, 0)
        draws = np.array([sample_wave_gaussian_convolution(1.2, spec, wsp, rng)[0]
                          for _ in range(n)])
        cov = np.cov(draws.T)
        target = wave_gaussian_convolution_law(1.2, spec, wsp)[0]
        scale = math.sqrt(2.0 / n) * np.sqrt(np.outer(np.diag(target), np.diag(target)))
        assert np.all(np.abs(cov - target) <= 5.0 * scale)


class TestLevyConvolution:
    def make(self, lams=(1.0, 4.0), mark=(1.0, -0.5), rate=3.0, compensated=True):
        system = EigenSystem.from_lambdas(lams)
        return NoiseSpec(
            system=system,
            jumps=(JumpMark(np.asarray(mark, dtype=float), rate),),
            compensated=compensated,
        )

    def test_no_jumps_gives_minus_compensator(self):
        spec = self.make()
        rng = stream(1, 0)
        # force an empty realization by conditioning on zero jumps
        from spdecutoff.noise_sim import JumpRealization

        empty = JumpRealization(t=1.0, times=np.array([]), mark_indices=np.array([], dtype=int))
        x = sample_heat_levy_convolution(1.0, spec, rng, realization=empty)
        assert np.allclose(x.values, -levy_compensator_heat(1.0, spec), rtol=1e-14)

    def test_compensator_explicit(self):
        spec = self.make(lams=(2.0,), mark=(1.0,), rate=3.0)
        comp = levy_compensator_heat(0.5, spec)
        assert comp[0] == pytest.approx(3.0 * (1 - math.exp(-1.0)) / 2.0, rel=1e-13)

    def test_mean_zero_when_compensated(self):
        spec = self.make()
        n = 30_000
        acc = np.zeros((n, 2))
        for r in range(n):
            acc[r] = sample_heat_levy_convolution(0.8, spec, stream(11, r)).values
        m2 = heat_levy_second_moment(0.8, spec)
        se = np.sqrt(m2 / n)
        assert np.all(np.abs(acc.mean(axis=0)) <= 4.0 * se)

    def test_second_moment_campbell(self):
        spec = self.make(lams=(1.5,), mark=(0.8,), rate=2.0)
        n = 40_000
        sq = np.zeros(n)
        for r in range(n):
            sq[r] = sample_heat_levy_convolution(0.6, spec, stream(13, r)).values[0] ** 2
        target = heat_levy_second_moment(0.6, spec)[0]
        se = sq.std(ddof=1) / math.sqrt(n)
        assert abs(sq.mean() - target) <= 4.0 * se

    def test_jump_realization_statistics(self):
        spec = self.make(rate=5.0)
        counts = [sample_jump_realization(2.0, spec, stream(17, r)).times.size
                  for r in range(4000)]
        mean = np.mean(counts)
        assert abs(mean - 10.0) <= 4.0 * math.sqrt(10.0 / 4000)

    def test_log_moment(self):
        spec = self.make(mark=(3.0, 4.0), rate=2.0)  # |mark| = 5 > 1
        ok, val = log_moment_check(spec)
        assert ok and val == pytest.approx(2.0 * math.log(5.0), rel=1e-13)
        small = self.make(mark=(0.1, 0.1), rate=2.0)
        ok, val = log_moment_check(small)
        assert ok and val == 0.0


class TestSpecValidation:
    def test_empty_spec_rejected(self):
        system = EigenSystem.from_lambdas([1.0])
        with pytest.raises(DegenerateNoiseError):
            NoiseSpec(system=system)

    def test_negative_intensity_rejected(self):
        system = EigenSystem.from_lambdas([1.0])
        with pytest.raises(DegenerateNoiseError):
            NoiseSpec(system=system, gaussian_q=np.array([-1.0]))

    def test_negative_time_rejected(self):
        spec = make_heat_spec()
        with pytest.raises(InvalidTimeError):
            heat_gaussian_convolution_law(-1.0, spec)

    def test_mismatched_mark_length(self):
        system = EigenSystem.from_lambdas([1.0, 2.0])
        with pytest.raises(DegenerateNoiseError):
            NoiseSpec(system=system, jumps=(JumpMark(np.array([1.0]), 1.0),))
