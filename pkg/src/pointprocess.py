"""Base station distance samplers for the typical user and the reduced Palm view."""

import logging
import math
from functools import lru_cache

import numpy as np
from scipy import stats

from .models import DistanceSet, FadingModel, NetworkKind, NetworkModel
from .specialfn import DomainError

logger = logging.getLogger(__name__)

GINIBRE_TAIL = 1e-6
NEAREST_TAIL = 1e-6
MIN_RADIUS_SPACINGS = 3.0
PPP_WIDTH_TAIL = 1e-12


class TruncationError(Exception):
    """Truncation budget too small for the requested accuracy."""

    pass


class EmptyDistanceSetError(DomainError):
    """Operation needs at least one distance."""

    pass


def _residual_std(model: NetworkModel, alpha: float, r_max: float, fading: FadingModel | None):
    second = 1.0 if fading is None else fading.second_moment
    return math.sqrt(
        model.intensity * math.pi * second * r_max ** (2 - 2 * alpha) / (alpha - 1)
    )


def reference_signal(model: NetworkModel, alpha: float) -> float:
    """Path loss at the PPP median nearest distance sqrt(ln 2 / (lambda pi))."""
    rho = math.sqrt(math.log(2.0) / (model.intensity * math.pi))
    return rho**-alpha


def residual_interference(model: NetworkModel, alpha: float, r_max: float) -> float:
    """Mean unit-fading interference from beyond r_max, lambda 2 pi r^(2-alpha)/(alpha-2)."""
    if math.isinf(r_max):
        return 0.0
    return model.intensity * 2.0 * math.pi * r_max ** (2 - alpha) / (alpha - 2)


def truncation_radius(
    model: NetworkModel,
    alpha: float,
    eps: float = 1e-3,
    fading: FadingModel | None = None,
) -> float:
    """Smallest radius whose residual fluctuation stays below eps times the reference signal.

    The residual mean is added back by the samplers' callers, so only the
    standard deviation of the omitted interference has to be controlled.
    """
    if not alpha > 2:
        raise DomainError(f"Path loss exponent must exceed 2, got {alpha}")
    second = 1.0 if fading is None else fading.second_moment
    target = eps * reference_signal(model, alpha)
    radius = (
        model.intensity * math.pi * second / ((alpha - 1) * target**2)
    ) ** (1.0 / (2 * alpha - 2))
    floor = MIN_RADIUS_SPACINGS / math.sqrt(model.intensity)
    return max(radius, floor)


def check_truncation(
    model: NetworkModel,
    alpha: float,
    r_max: float,
    eps: float = 1e-3,
    fading: FadingModel | None = None,
) -> None:
    """Raise TruncationError if r_max leaves too much interference unaccounted for."""
    bound = _residual_std(model, alpha, r_max, fading) / reference_signal(model, alpha)
    if bound > eps:
        raise TruncationError(
            f"Truncation radius {r_max:g} leaves relative residual {bound:.3g} > {eps:g}"
        )


def nearest_distance_bound(model: NetworkModel, tail: float = NEAREST_TAIL) -> float:
    """Radius the stationary nearest distance exceeds with probability at most ``tail``."""
    if model.kind == NetworkKind.SQUARE:
        return model.lattice_spacing / math.sqrt(2.0)
    if model.kind == NetworkKind.TRIANGULAR:
        return model.lattice_spacing / math.sqrt(3.0)
    # Ginibre voids are no more likely than Poisson ones
    return math.sqrt(-math.log(tail) / (model.intensity * math.pi))


@lru_cache(maxsize=64)
def _lattice_points_cached(kind: NetworkKind, spacing: float, radius: float) -> np.ndarray:
    if kind == NetworkKind.SQUARE:
        b1, b2 = np.array([spacing, 0.0]), np.array([0.0, spacing])
    else:
        b1 = np.array([spacing, 0.0])
        b2 = np.array([spacing / 2.0, spacing * math.sqrt(3.0) / 2.0])
    reach = int(math.ceil(2.0 * radius / spacing)) + 2
    i, j = np.meshgrid(np.arange(-reach, reach + 1), np.arange(-reach, reach + 1))
    pts = i.reshape(-1, 1) * b1 + j.reshape(-1, 1) * b2
    keep = np.hypot(pts[:, 0], pts[:, 1]) <= radius
    pts = pts[keep]
    pts.setflags(write=False)
    return pts


def lattice_points(model: NetworkModel, radius: float) -> np.ndarray:
    """Unshifted lattice points (including the origin) within ``radius``, shape (P, 2)."""
    return _lattice_points_cached(model.kind, model.lattice_spacing, float(radius))


def lattice_basis(model: NetworkModel) -> np.ndarray:
    """Rows are the two generators of the lattice; a uniform shift is u @ basis, u in [0, 1)^2."""
    s = model.lattice_spacing
    if model.kind == NetworkKind.SQUARE:
        return np.array([[s, 0.0], [0.0, s]])
    return np.array([[s, 0.0], [s / 2.0, s * math.sqrt(3.0) / 2.0]])


def ginibre_shapes(
    model: NetworkModel,
    r_max: float,
    tail: float = GINIBRE_TAIL,
    first_shape: int = 1,
) -> np.ndarray:
    """Gamma shapes first_shape..K with K the smallest shape for which P(Q_K < r_max^2) < tail."""
    c = model.ginibre_c
    mean = c * r_max**2
    upper = int(math.ceil(mean + 12.0 * math.sqrt(mean + 1.0) + 20.0))
    ks = np.arange(1, upper + 1)
    inside = stats.gamma.cdf(r_max**2, ks, scale=1.0 / c)
    below = np.flatnonzero(inside < tail)
    cap = int(ks[below[0]]) if below.size else upper
    return np.arange(first_shape, cap + 1)


def _as_distance_set(d: np.ndarray, r_max: float, cap: int | None = None) -> DistanceSet:
    d = np.sort(d[d < r_max])
    return DistanceSet(d, truncation_radius=r_max, point_cap=cap)


def sample_distances(
    model: NetworkModel,
    budget: float,
    rng: np.random.Generator,
    *,
    alpha: float | None = None,
    eps: float = 1e-3,
    fading: FadingModel | None = None,
) -> DistanceSet:
    """Distances from the typical user (not a point of the process) to all points within ``budget``.

    Args:
        model: Point process and intensity.
        budget: Truncation radius r_max.
        rng: Exclusive random stream.
        alpha: When given, the radius is checked against the truncation rule.
        eps: Relative residual tolerance for that check.
        fading: Fading used in the check (Rayleigh if None).

    Raises:
        TruncationError: If ``alpha`` is given and the budget is too small.
    """
    if alpha is not None:
        check_truncation(model, alpha, budget, eps, fading)
    if model.kind == NetworkKind.PPP:
        count = rng.poisson(model.intensity * math.pi * budget**2)
        return _as_distance_set(budget * np.sqrt(rng.random(count)), budget)
    if model.kind.is_lattice:
        pts = lattice_points(model, budget + 2 * model.lattice_spacing)
        shift = rng.random(2) @ lattice_basis(model)
        return _as_distance_set(np.hypot(*(pts + shift).T), budget)
    shapes = ginibre_shapes(model, budget)
    q = rng.gamma(shapes, 1.0 / model.ginibre_c)
    return _as_distance_set(np.sqrt(q), budget, int(shapes[-1]))


def sample_palm_distances(
    model: NetworkModel,
    budget: float,
    rng: np.random.Generator,
    *,
    alpha: float | None = None,
    eps: float = 1e-3,
    fading: FadingModel | None = None,
    first_shape: int = 2,
) -> DistanceSet:
    """Distances under the reduced Palm distribution (point at the origin removed).

    The PPP reuses the stationary sampler; lattices are anchored at the
    origin without a shift; Ginibre radii use Gamma shapes from ``first_shape``.
    """
    if alpha is not None:
        check_truncation(model, alpha, budget, eps, fading)
    if model.kind == NetworkKind.PPP:
        return sample_distances(model, budget, rng)
    if model.kind.is_lattice:
        pts = lattice_points(model, budget)
        d = np.hypot(*pts.T)
        return _as_distance_set(d[d > 1e-9 * model.lattice_spacing], budget)
    shapes = ginibre_shapes(model, budget, first_shape=first_shape)
    q = rng.gamma(shapes, 1.0 / model.ginibre_c)
    return _as_distance_set(np.sqrt(q), budget, int(shapes[-1]))


def nearest_split(d: DistanceSet) -> tuple[float, DistanceSet]:
    """Split off the nearest distance."""
    if d.is_empty:
        raise EmptyDistanceSetError("Cannot take the nearest point of an empty distance set")
    rest = DistanceSet(d.values[1:], d.truncation_radius, d.point_cap)
    return float(d.values[0]), rest


def batch_width(model: NetworkModel, r_max: float, palm: bool = False, first_shape: int = 2) -> int:
    """Number of columns produced by the batch samplers."""
    if model.kind == NetworkKind.PPP:
        mean = model.intensity * math.pi * r_max**2
        return int(stats.poisson.isf(PPP_WIDTH_TAIL, mean)) + 1
    if model.kind.is_lattice:
        reach = r_max if palm else r_max + 2 * model.lattice_spacing
        return len(lattice_points(model, reach))
    return len(ginibre_shapes(model, r_max, first_shape=first_shape if palm else 1))


def sample_distance_batch(
    model: NetworkModel,
    r_max: float,
    rng: np.random.Generator,
    rows: int,
    palm: bool = False,
    first_shape: int = 2,
) -> np.ndarray:
    """Distances for ``rows`` independent realizations, shape (rows, width).

    Each row is sorted ascending; points beyond r_max are set to +inf.
    """
    if model.kind == NetworkKind.PPP:
        # Squared radii of a planar PPP are cumulative Exp(1) arrivals / (lambda pi)
        width = batch_width(model, r_max)
        arrivals = np.cumsum(rng.exponential(size=(rows, width)), axis=1)
        d = np.sqrt(arrivals / (model.intensity * math.pi))
        d[d >= r_max] = np.inf
        return d
    if model.kind.is_lattice:
        if palm:
            pts = lattice_points(model, r_max)
            base = np.sort(np.hypot(*pts.T))[1:]
            base = base[base < r_max]
            return np.broadcast_to(base, (rows, base.size)).copy()
        pts = lattice_points(model, r_max + 2 * model.lattice_spacing)
        shift = rng.random((rows, 2)) @ lattice_basis(model)
        d = np.hypot(
            pts[None, :, 0] + shift[:, 0, None],
            pts[None, :, 1] + shift[:, 1, None],
        )
    else:
        shapes = ginibre_shapes(model, r_max, first_shape=first_shape if palm else 1)
        d = np.sqrt(rng.gamma(shapes, 1.0 / model.ginibre_c, size=(rows, shapes.size)))
    d[d >= r_max] = np.inf
    d.sort(axis=1)
    return d


def sample_palm_distance_batch(
    model: NetworkModel,
    r_max: float,
    rng: np.random.Generator,
    rows: int,
    first_shape: int = 2,
) -> np.ndarray:
    return sample_distance_batch(model, r_max, rng, rows, palm=True, first_shape=first_shape)
