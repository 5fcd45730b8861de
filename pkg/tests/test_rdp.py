"""Tests for the relative distance process."""

import math

import numpy as np
import pytest

from src.analytic import ps_ppp_rayleigh
from src.models import (
    DistanceSet,
    FadingModel,
    NetworkKind,
    NetworkModel,
    RelativeDistanceProcess,
    SimConfig,
)
from src.montecarlo import sample_rdps
from src.pointprocess import sample_distances, truncation_radius
from src.rdp import (
    DivergenceError,
    empirical_beta1,
    empirical_factorial_moment2,
    empirical_mean_measure,
    empirical_pair_correlation_rdp_ppp,
    empirical_pgfl,
    isr,
    pgfl_rdp_ppp,
    poisson_approx_ps,
    rdp_isr_residual,
    sample_poisson_surrogate,
    to_rdp,
)
from src.specialfn import DomainError

FLOOR = 0.25


@pytest.fixture(scope="module")
def ppp_rdps():
    """PPP relative distance processes complete down to FLOOR."""
    return sample_rdps(SimConfig(samples=100_000, seed=11), floor=FLOOR)


@pytest.fixture(scope="module")
def square_rdps():
    """Square lattice relative distance processes complete down to FLOOR."""
    cfg = SimConfig(model=NetworkModel(NetworkKind.SQUARE), samples=20_000, seed=5)
    return sample_rdps(cfg, floor=FLOOR)


class TestToRdp:
    """Tests for to_rdp."""

    def test_ratios(self):
        """Nearest distance over every other distance."""
        r = to_rdp(DistanceSet([1.0, 2.0, 4.0]))
        assert r.values.tolist() == [0.5, 0.25]
        assert r.floor == 0.0

    def test_near_tie(self):
        """A near tie maps close to 1."""
        r = to_rdp(DistanceSet([3.0, 3.000001, 7.0]))
        assert r.values[0] == pytest.approx(1.0, abs=1e-6)

    def test_floor_from_truncation(self):
        """Ratios below r0/r_max cannot be observed."""
        r = to_rdp(DistanceSet([1.0, 2.0], truncation_radius=10.0))
        assert r.floor == pytest.approx(0.1)

    def test_scale_from_intensity(self):
        """lambda pi R^2 feeds the ISR residual compensation."""
        d = DistanceSet([0.5, 1.0, 2.0], truncation_radius=2.5)
        r = to_rdp(d, intensity=2.0)
        assert r.scale == pytest.approx(2.0 * math.pi * 0.25)
        assert math.isnan(to_rdp(d).scale)
        residual = rdp_isr_residual(0.2, 4.0, r.scale)
        assert isr(r, 4.0, None, compensate=True) == pytest.approx(
            isr(r, 4.0, None) + residual
        )
        assert residual > 0

    def test_needs_two_points(self):
        """A single distance has no relative distances."""
        with pytest.raises(DomainError):
            to_rdp(DistanceSet([1.0]))


class TestIsr:
    """Tests for the interference-to-signal ratio."""

    def test_empty(self):
        """Empty process gives 0."""
        assert isr(RelativeDistanceProcess([]), 4.0, None) == 0.0

    def test_no_fading_sum(self):
        """Direct sum of y^alpha."""
        r = RelativeDistanceProcess([0.5, 0.25])
        assert isr(r, 4.0, None) == 0.06640625

    def test_fading_needs_stream(self):
        """Drawing fading without a stream is an error."""
        with pytest.raises(DomainError):
            isr(RelativeDistanceProcess([0.5]), 4.0, FadingModel())

    def test_ppp_mean_is_misr(self, ppp_rdps):
        """With the residual compensation the PPP mean ISR is 2/(alpha-2)."""
        rng = np.random.default_rng(8)
        values = np.array([isr(r, 4.0, FadingModel(), rng, compensate=True) for r in ppp_rdps])
        se = values.std(ddof=1) / math.sqrt(values.size)
        assert abs(values.mean() - 1.0) < 4 * se

    def test_residual(self):
        """2 scale floor^(alpha-2)/(alpha-2), zero without a floor."""
        assert rdp_isr_residual(0.5, 4.0, 2.0) == pytest.approx(0.5)
        assert rdp_isr_residual(0.0, 4.0, 2.0) == 0.0
        assert rdp_isr_residual(0.5, 4.0, math.nan) == 0.0


class TestPgfl:
    """Tests for the PPP relative distance PGFL."""

    def test_constant_one(self):
        """f = 1 gives 1."""
        assert pgfl_rdp_ppp(lambda x: 1.0) == 1.0

    @pytest.mark.parametrize(("theta", "delta"), [(1.0, 0.5), (3.0, 0.4), (0.2, 0.75), (5.0, 0.9)])
    def test_success_probability(self, theta, delta):
        """f(x) = 1/(1 + theta x^alpha) with its exact complement recovers p_s."""
        alpha = 2 / delta
        value = pgfl_rdp_ppp(
            lambda x: 1.0 / (1.0 + theta * x**alpha),
            complement=lambda x: theta * x**alpha / (1.0 + theta * x**alpha),
        )
        assert value == pytest.approx(ps_ppp_rayleigh(theta, delta), rel=1e-9)

    @pytest.mark.parametrize(("theta", "delta"), [(1.0, 0.5), (3.0, 0.4), (0.2, 0.75)])
    def test_success_probability_without_complement(self, theta, delta):
        """Plain f stays accurate up to the rounding of 1 - f."""
        alpha = 2 / delta
        value = pgfl_rdp_ppp(lambda x: 1.0 / (1.0 + theta * x**alpha))
        assert value == pytest.approx(ps_ppp_rayleigh(theta, delta), rel=1e-3)

    def test_step_function(self):
        """1 - s 1{x > t} gives 1/(1 + s (t^-2 - 1))."""
        value = pgfl_rdp_ppp(lambda x: 0.7 if x > 0.5 else 1.0, breakpoints=[0.5])
        assert value == pytest.approx(1 / 1.9, rel=1e-9)

    def test_divergence(self):
        """A function bounded away from 1 near 0 is rejected."""
        with pytest.raises(DivergenceError):
            pgfl_rdp_ppp(lambda x: 0.5)

    def test_matches_monte_carlo(self, ppp_rdps):
        """Empirical PGFL over sampled processes agrees with the formula."""

        def f(x):
            return np.where(x >= FLOOR, 1.0 / (1.0 + x**4), 1.0)

        mean, se = empirical_pgfl(ppp_rdps, f)
        exact = pgfl_rdp_ppp(lambda x: float(f(np.float64(x))), breakpoints=[FLOOR])
        assert abs(mean - exact) < 4 * se


class TestPoissonApprox:
    """Tests for the Poisson approximation of the relative distances."""

    def test_zero(self):
        """theta = 0 gives 1."""
        assert poisson_approx_ps(0.0, 0.5) == 1.0

    def test_alpha_four(self):
        """exp(-pi/4) at theta = 1, delta = 1/2."""
        assert poisson_approx_ps(1.0, 0.5) == pytest.approx(math.exp(-math.pi / 4), rel=1e-9)

    @pytest.mark.parametrize("delta", [0.3, 0.7])
    @pytest.mark.parametrize("theta", [0.1, 3.0])
    def test_identity(self, theta, delta):
        """Equals exp(1 - 1/p_s)."""
        expected = math.exp(1 - 1 / ps_ppp_rayleigh(theta, delta))
        assert poisson_approx_ps(theta, delta) == pytest.approx(expected, rel=1e-8)

    def test_domain(self):
        """Bad arguments raise DomainError."""
        with pytest.raises(DomainError):
            poisson_approx_ps(1.0, 1.0)
        with pytest.raises(DomainError):
            poisson_approx_ps(-1.0, 0.5)


class TestEstimators:
    """Tests for empirical relative distance statistics."""

    def test_mean_measure(self, ppp_rdps):
        """Lambda([r, 1)) = r^-2 - 1 for the PPP."""
        assert empirical_mean_measure(ppp_rdps, 0.5, FLOOR) == pytest.approx(3.0, abs=0.05)
        assert empirical_mean_measure(ppp_rdps, 0.9, FLOOR) == pytest.approx(
            1 / 0.81 - 1, abs=0.01
        )
        assert empirical_mean_measure(ppp_rdps, 1 - 1e-12, FLOOR) == pytest.approx(0.0, abs=1e-3)

    def test_beta1_ppp(self, ppp_rdps):
        """Normalized intensity is 1 for the PPP."""
        for t in (0.4, 0.6, 0.9):
            assert empirical_beta1(ppp_rdps, t, 0.02, FLOOR) == pytest.approx(1.0, abs=0.05)

    def test_beta1_square_lattice(self, square_rdps):
        """Lattice relative distances are thinner near 1."""
        value = empirical_beta1(square_rdps, 0.95, 0.02, FLOOR)
        assert 0.0 < value < 1.0

    def test_below_floor_rejected(self, ppp_rdps):
        """Estimates below the floor are truncation biased."""
        with pytest.raises(DomainError):
            empirical_mean_measure(ppp_rdps, 0.1, FLOOR)

    def test_sample_floors_respected(self):
        """A sample floor above the requested floor also rejects the estimate."""
        samples = [
            RelativeDistanceProcess([0.9, 0.5], floor=0.3),
            RelativeDistanceProcess([0.7], floor=0.1),
        ]
        with pytest.raises(DomainError):
            empirical_mean_measure(samples, 0.2, floor=0.05)
        with pytest.raises(DomainError):
            empirical_factorial_moment2(samples, 0.2, 0.6, floor=0.05)
        assert empirical_mean_measure(samples, 0.4, floor=0.05) == 1.5

    def test_truncated_distance_sets_rejected(self):
        """Processes built from truncated distance sets carry their floors."""
        model = NetworkModel()
        r_max = truncation_radius(model, 4.0)
        rng = np.random.default_rng(17)
        samples = [to_rdp(sample_distances(model, r_max, rng)) for _ in range(2000)]
        assert max(s.floor for s in samples) > 0.1
        with pytest.raises(DomainError):
            empirical_mean_measure(samples, 0.06)
        with pytest.raises(DomainError):
            empirical_beta1(samples, 0.1, 0.02)

    @pytest.mark.parametrize(("t1", "t2"), [(0.5, 0.8), (0.3, 0.6)])
    def test_pair_correlation_ppp(self, ppp_rdps, t1, t2):
        """g = 2 for the PPP's relative distances."""
        g = empirical_pair_correlation_rdp_ppp(ppp_rdps, t1, t2, (0.05, 0.05), FLOOR)
        assert g == pytest.approx(2.0, abs=0.1)

    def test_pair_correlation_poisson_surrogate(self):
        """g = 1 for a Poisson process with the same intensity."""
        rng = np.random.default_rng(4)
        samples = [sample_poisson_surrogate(rng, FLOOR) for _ in range(50_000)]
        g = empirical_pair_correlation_rdp_ppp(samples, 0.5, 0.8, (0.05, 0.05), FLOOR)
        assert g == pytest.approx(1.0, abs=0.1)

    def test_overlapping_bins(self, ppp_rdps):
        """Overlapping bins are rejected."""
        with pytest.raises(DomainError):
            empirical_pair_correlation_rdp_ppp(ppp_rdps, 0.5, 0.52, (0.05, 0.05), FLOOR)

    @pytest.mark.parametrize(("t1", "t2", "expected"), [(0.5, 0.5, 18.0), (0.5, 0.8, 3.375)])
    def test_factorial_moment(self, ppp_rdps, t1, t2, expected):
        """2 (t1^-2 - 1)(t2^-2 - 1) for the PPP."""
        mean, se = empirical_factorial_moment2(ppp_rdps, t1, t2, FLOOR)
        assert abs(mean - expected) < 4 * se
