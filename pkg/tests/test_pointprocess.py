"""Tests for base station distance samplers."""

import math

import numpy as np
import pytest
from scipy import stats

from src.models import DistanceSet, FadingModel, NetworkKind, NetworkModel
from src.pointprocess import (
    EmptyDistanceSetError,
    TruncationError,
    batch_width,
    check_truncation,
    ginibre_shapes,
    lattice_points,
    nearest_distance_bound,
    nearest_split,
    residual_interference,
    sample_distance_batch,
    sample_distances,
    sample_palm_distance_batch,
    sample_palm_distances,
    truncation_radius,
)
from src.specialfn import DomainError

PPP = NetworkModel(NetworkKind.PPP, 1.0)
SQUARE = NetworkModel(NetworkKind.SQUARE, 1.0)
TRIANGULAR = NetworkModel(NetworkKind.TRIANGULAR, 1.0)
GINIBRE = NetworkModel(NetworkKind.GINIBRE, 1.0)


@pytest.fixture
def rng():
    """Seeded random stream."""
    return np.random.default_rng(2024)


class TestTruncation:
    """Tests for the truncation rule."""

    def test_radius_passes_its_own_check(self):
        """The derived radius satisfies check_truncation."""
        for alpha in (3.0, 4.0, 5.0):
            r = truncation_radius(PPP, alpha, 1e-3, FadingModel())
            check_truncation(PPP, alpha, r, 1e-3, FadingModel())

    def test_small_radius_rejected(self):
        """Half the derived radius fails the check."""
        r = truncation_radius(PPP, 3.0, 1e-3)
        with pytest.raises(TruncationError):
            check_truncation(PPP, 3.0, r / 2, 1e-3)

    def test_minimum_radius(self):
        """At least three spacings even for loose tolerances."""
        assert truncation_radius(SQUARE, 6.0, 0.5) == pytest.approx(3.0)

    def test_radius_grows_as_alpha_drops(self):
        """Slower decay needs a larger disk."""
        assert truncation_radius(PPP, 3.0) > truncation_radius(PPP, 4.0)

    def test_residual_interference(self):
        """lambda 2 pi r^(2-alpha)/(alpha-2)."""
        assert residual_interference(PPP, 4.0, 10.0) == pytest.approx(2 * math.pi / 200)
        assert residual_interference(PPP, 4.0, math.inf) == 0.0

    def test_sampler_checks_budget(self, rng):
        """A too small budget is rejected when alpha is given."""
        with pytest.raises(TruncationError):
            sample_distances(PPP, 2.0, rng, alpha=3.0)

    def test_invalid_alpha(self):
        """alpha <= 2 raises DomainError."""
        with pytest.raises(DomainError):
            truncation_radius(PPP, 2.0)


class TestNearestSplit:
    """Tests for nearest_split."""

    def test_split(self):
        """Nearest distance and the rest."""
        r0, rest = nearest_split(DistanceSet([1.0, 2.0, 3.0]))
        assert r0 == 1.0
        assert rest.values.tolist() == [2.0, 3.0]

    def test_single_element(self):
        """A single point leaves an empty rest."""
        r0, rest = nearest_split(DistanceSet([5.0]))
        assert r0 == 5.0
        assert rest.is_empty

    def test_empty(self):
        """Empty sets raise EmptyDistanceSetError, a DomainError."""
        with pytest.raises(EmptyDistanceSetError):
            nearest_split(DistanceSet([]))
        assert issubclass(EmptyDistanceSetError, DomainError)


class TestLatticePoints:
    """Tests for lattice point enumeration."""

    @pytest.mark.parametrize("model", [SQUARE, TRIANGULAR])
    def test_count_matches_area(self, model):
        """About lambda pi R^2 points within R, origin included."""
        pts = lattice_points(model, 20.0)
        assert len(pts) == pytest.approx(math.pi * 400, rel=0.02)
        assert np.any(np.all(pts == 0.0, axis=1))

    def test_read_only(self):
        """Cached arrays cannot be modified."""
        pts = lattice_points(SQUARE, 5.0)
        with pytest.raises(ValueError):
            pts[0, 0] = 1.0

    def test_triangular_neighbors(self):
        """Six nearest neighbors at the spacing."""
        pts = lattice_points(TRIANGULAR, 1.5 * TRIANGULAR.lattice_spacing)
        d = np.sort(np.hypot(*pts.T))
        assert d[0] == 0.0
        assert np.allclose(d[1:7], TRIANGULAR.lattice_spacing)


class TestStationarySamplers:
    """Tests for the typical-user samplers."""

    def test_ppp_nearest_distance_law(self, rng):
        """Nearest PPP distance satisfies P(R > r) = exp(-lambda pi r^2)."""
        d = sample_distance_batch(PPP, 5.0, rng, 20_000)
        result = stats.kstest(d[:, 0], lambda r: 1 - np.exp(-math.pi * r**2))
        assert result.pvalue > 1e-3

    @pytest.mark.parametrize("model", [PPP, SQUARE, TRIANGULAR, GINIBRE])
    def test_mean_count(self, model, rng):
        """E N(r) = lambda pi r^2 for every stationary model."""
        r = 4.0
        d = sample_distance_batch(model, r, rng, 4000)
        counts = np.isfinite(d).sum(axis=1)
        se = counts.std(ddof=1) / math.sqrt(counts.size)
        assert abs(counts.mean() - math.pi * r**2) < 4 * se + 0.05

    def test_rows_sorted_and_padded(self, rng):
        """Rows ascend and end with +inf padding."""
        d = sample_distance_batch(GINIBRE, 3.0, rng, 50)
        assert np.array_equal(d, np.sort(d, axis=1))
        assert np.all(np.isinf(d[:, -1]))
        assert d.shape[1] == batch_width(GINIBRE, 3.0)

    @pytest.mark.parametrize("model", [SQUARE, TRIANGULAR])
    def test_lattice_nearest_bound(self, model, rng):
        """Lattice nearest distances never exceed the covering radius."""
        d = sample_distance_batch(model, 4.0, rng, 5000)
        assert d[:, 0].max() <= nearest_distance_bound(model) + 1e-12

    def test_ginibre_nearest_tail_lighter(self, rng):
        """Ginibre voids are rarer than Poisson ones."""
        r = math.sqrt(math.log(5) / math.pi)
        d = sample_distance_batch(GINIBRE, 4.0, rng, 20_000)
        assert np.mean(d[:, 0] > r) < 0.2 - 0.02

    def test_set_sampler(self, rng):
        """Single realizations carry their truncation radius."""
        for model in (PPP, SQUARE, GINIBRE):
            d = sample_distances(model, 6.0, rng)
            assert d.truncation_radius == 6.0
            assert np.all(d.values < 6.0)
        assert sample_distances(GINIBRE, 6.0, rng).point_cap is not None

    def test_reproducible(self):
        """Equal seeds give equal samples."""
        a = sample_distance_batch(TRIANGULAR, 5.0, np.random.default_rng(1), 10)
        b = sample_distance_batch(TRIANGULAR, 5.0, np.random.default_rng(1), 10)
        assert np.array_equal(a, b)


class TestPalmSamplers:
    """Tests for the reduced Palm samplers."""

    def test_square_lattice_neighbors(self, rng):
        """The origin is removed and four neighbors sit at distance 1."""
        d = sample_palm_distances(SQUARE, 3.0, rng)
        assert d.values[:4].tolist() == pytest.approx([1.0] * 4)
        assert d.values[4] == pytest.approx(math.sqrt(2))

    def test_lattice_batch_is_deterministic(self, rng):
        """Every Palm lattice row is identical."""
        d = sample_palm_distance_batch(TRIANGULAR, 4.0, rng, 3)
        assert np.array_equal(d[0], d[2])
        assert d[0, 0] == pytest.approx(TRIANGULAR.lattice_spacing)

    def test_ginibre_repulsion(self, rng):
        """Palm nearest neighbors are farther than Poisson ones."""
        r = 1.0 / math.sqrt(math.pi)
        d = sample_palm_distance_batch(GINIBRE, 4.0, rng, 20_000)
        assert np.mean(d[:, 0] < r) < (1 - math.exp(-1)) - 0.1

    def test_ginibre_first_shape(self):
        """Palm shapes start at the requested Gamma shape."""
        assert ginibre_shapes(GINIBRE, 3.0, first_shape=2)[0] == 2
        assert ginibre_shapes(GINIBRE, 3.0)[0] == 1

    def test_ginibre_cap_tail(self):
        """Beyond the cap the radii fall inside r_max with negligible probability."""
        shapes = ginibre_shapes(GINIBRE, 3.0, tail=1e-6)
        cap = shapes[-1]
        assert stats.gamma.cdf(9.0, cap, scale=1 / math.pi) < 1e-6
        assert stats.gamma.cdf(9.0, cap - 1, scale=1 / math.pi) >= 1e-6

    def test_ppp_palm_is_stationary(self):
        """Slivnyak: the PPP Palm sampler is the stationary one."""
        a = sample_palm_distances(PPP, 5.0, np.random.default_rng(3))
        b = sample_distances(PPP, 5.0, np.random.default_rng(3))
        assert np.array_equal(a.values, b.values)
