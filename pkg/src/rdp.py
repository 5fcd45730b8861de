"""Relative distance process: ISR, PPP functionals and empirical measure estimators.

The relative distance process of a realization is the set of ratios R/|x| of
the nearest distance R to the distance of every other base station. It lives
on (0, 1] and determines the SIR once fading is added.
"""

import logging
import math
from collections.abc import Callable, Sequence

import numpy as np
from scipy import integrate

from . import fading as fading_ops
from .models import DistanceSet, FadingModel, RelativeDistanceProcess
from .specialfn import DomainError

logger = logging.getLogger(__name__)

DEFAULT_FLOOR = 0.05
DEFAULT_BIN_WIDTH = 0.01
_SPLIT = math.log(64.0)


class DivergenceError(DomainError):
    """Integrand does not decay fast enough for the functional to exist."""

    pass


def to_rdp(d: DistanceSet, intensity: float | None = None) -> RelativeDistanceProcess:
    """Divide the nearest distance by every other distance.

    The scale lambda*pi*R^2 needed by the ISR residual compensation is only
    known when ``intensity`` is given; otherwise it is NaN and
    ``isr(..., compensate=True)`` adds nothing.
    """
    if len(d) < 2:
        raise DomainError(f"Relative distances need at least 2 points, got {len(d)}")
    if intensity is not None and not intensity > 0:
        raise DomainError(f"Intensity must be positive, got {intensity}")
    r0 = d.values[0]
    floor = 0.0 if math.isinf(d.truncation_radius) else r0 / d.truncation_radius
    scale = math.nan if intensity is None else intensity * math.pi * r0**2
    return RelativeDistanceProcess(r0 / d.values[1:], floor=floor, scale=scale)


def rdp_isr_residual(floor: float, alpha: float, scale: float) -> float:
    """Mean ISR contributed by the missing ratios below ``floor``.

    With scale = lambda*pi*R^2 this is 2 scale floor^(alpha-2)/(alpha-2).
    """
    if floor <= 0 or math.isnan(scale):
        return 0.0
    return 2.0 * scale * floor ** (alpha - 2) / (alpha - 2)


def isr(
    r: RelativeDistanceProcess,
    alpha: float,
    fading: FadingModel | None,
    rng: np.random.Generator | None = None,
    compensate: bool = False,
) -> float:
    """Sum of h_y * y^alpha over the process, h iid fading (h = 1 when fading is None)."""
    if not alpha > 2:
        raise DomainError(f"Path loss exponent must exceed 2, got {alpha}")
    powers = r.values**alpha
    if fading is not None and powers.size:
        if rng is None:
            raise DomainError("A random stream is required when fading is drawn")
        powers = powers * fading_ops.sample(fading, rng, powers.size)
    total = math.fsum(powers)
    if compensate:
        total += rdp_isr_residual(r.floor, alpha, r.scale)
    return total


def _check_decay(one_minus_f: Callable[[float], float]) -> None:
    near, nearer = 1e-3, 1e-6
    g_near = one_minus_f(near) / near**2
    g_nearer = one_minus_f(nearer) / nearer**2
    if g_nearer > 0 and g_nearer >= 0.9 * g_near:
        raise DivergenceError(
            "1 - f(x) does not vanish faster than x^2 at 0; the PGFL integral diverges"
        )


def pgfl_rdp_ppp(
    f: Callable[[float], float],
    tol: float = 1e-10,
    breakpoints: Sequence[float] | None = None,
    complement: Callable[[float], float] | None = None,
) -> float:
    """PGFL of the PPP's relative distance process, 1/(1 + 2 int_0^1 (1-f(x)) x^-3 dx).

    The integral is evaluated after substituting x = exp(-u), i.e. as
    int_0^inf (1 - f(exp(-u))) exp(2u) du, whose integrand decays
    exponentially whenever 1 - f(x) = O(x^alpha) with alpha > 2.

    Args:
        f: Function on (0, 1] with values in [0, 1].
        tol: Absolute and relative quadrature tolerance.
        breakpoints: Known discontinuities of f in (0, 1).
        complement: 1 - f computed directly. Without it, 1 - f(x) cancels to
            rounding noise once f(x) is within 1e-16 of 1, which limits the
            accuracy to about 1e-4 as alpha approaches 2.

    Raises:
        DivergenceError: If 1 - f(x) fails the decay check near 0.
    """
    one_minus_f = complement or (lambda x: 1.0 - f(x))
    _check_decay(one_minus_f)

    def integrand(u: float) -> float:
        value = one_minus_f(math.exp(-u))
        # combined in log space so that exp(2u) cannot overflow
        return math.exp(2.0 * u + math.log(value)) if value > 0 else 0.0

    points = sorted(-math.log(p) for p in (breakpoints or ()) if 0 < p < 1)
    inner = [p for p in points if p < _SPLIT]
    near, _ = integrate.quad(
        integrand, 0.0, _SPLIT, epsabs=tol, epsrel=tol, limit=200, points=inner or None
    )
    far, _ = integrate.quad(integrand, _SPLIT, np.inf, epsabs=tol, epsrel=tol, limit=200)
    return 1.0 / (1.0 + 2.0 * (near + far))


def poisson_approx_ps(theta: float, delta: float) -> float:
    """Success probability if the relative distances formed a PPP of intensity 2 r^-3.

    exp(-int_0^1 theta r^alpha / (1 + theta r^alpha) 2 r^-3 dr), alpha = 2/delta.
    """
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if theta < 0:
        raise DomainError(f"theta must be non-negative, got {theta}")
    if theta == 0:
        return 1.0
    alpha = 2.0 / delta
    # r^(alpha-3) is carried by the algebraic weight
    value, _ = integrate.quad(
        lambda r: 2.0 * theta / (1.0 + theta * r**alpha),
        0.0,
        1.0,
        weight="alg",
        wvar=(alpha - 3.0, 0.0),
        epsabs=1e-14,
        epsrel=1e-13,
        limit=200,
    )
    return math.exp(-value)


def _flatten(samples: Sequence[RelativeDistanceProcess]) -> tuple[np.ndarray, np.ndarray, int]:
    if not samples:
        raise DomainError("At least one relative distance sample is required")
    lengths = np.array([len(s) for s in samples])
    values = np.concatenate([s.values for s in samples]) if lengths.sum() else np.empty(0)
    owner = np.repeat(np.arange(len(samples)), lengths)
    return values, owner, len(samples)


def _check_floor(t: float, samples: Sequence[RelativeDistanceProcess], floor: float) -> None:
    # each sample is only complete down to its own floor
    floor = max(floor, max((s.floor for s in samples), default=0.0))
    if t < floor:
        raise DomainError(f"Estimates below the floor {floor:.4g} are truncation biased (t={t})")


def _counts(values: np.ndarray, owner: np.ndarray, n: int, lo: float, hi: float) -> np.ndarray:
    mask = (values >= lo) & (values < hi)
    return np.bincount(owner[mask], minlength=n)


def empirical_mean_measure(
    samples: Sequence[RelativeDistanceProcess],
    r: float,
    floor: float = DEFAULT_FLOOR,
) -> float:
    """Average number of relative distances in [r, 1)."""
    if not 0 < r < 1:
        raise DomainError(f"r must lie in (0, 1), got {r}")
    _check_floor(r, samples, floor)
    values, _, n = _flatten(samples)
    return np.count_nonzero((values >= r) & (values < 1.0)) / n


def empirical_beta1(
    samples: Sequence[RelativeDistanceProcess],
    t: float,
    bin_width: float = DEFAULT_BIN_WIDTH,
    floor: float = DEFAULT_FLOOR,
) -> float:
    """Histogram intensity at t scaled by t^3/2 (identically 1 for the PPP)."""
    lo, hi = t - bin_width / 2, t + bin_width / 2
    if not (0 < lo and hi < 1):
        raise DomainError(f"Bin [{lo}, {hi}) must lie inside (0, 1)")
    _check_floor(lo, samples, floor)
    values, _, n = _flatten(samples)
    density = np.count_nonzero((values >= lo) & (values < hi)) / (n * bin_width)
    return density * t**3 / 2.0


def empirical_pair_correlation_rdp_ppp(
    samples: Sequence[RelativeDistanceProcess],
    t1: float,
    t2: float,
    bin_widths: tuple[float, float] = (DEFAULT_BIN_WIDTH, DEFAULT_BIN_WIDTH),
    floor: float = DEFAULT_FLOOR,
) -> float:
    """Second factorial moment density over the product of intensities, from disjoint bins."""
    (lo1, hi1), (lo2, hi2) = (
        (t - w / 2, t + w / 2) for t, w in zip((t1, t2), bin_widths, strict=True)
    )
    if not (0 < lo1 and 0 < lo2 and hi1 < 1 and hi2 < 1):
        raise DomainError("Bins must lie inside (0, 1)")
    if lo1 < hi2 and lo2 < hi1:
        raise DomainError(f"Bins around {t1} and {t2} overlap")
    _check_floor(min(lo1, lo2), samples, floor)
    values, owner, n = _flatten(samples)
    n1 = _counts(values, owner, n, lo1, hi1)
    n2 = _counts(values, owner, n, lo2, hi2)
    first = n1.mean() * n2.mean()
    if first == 0:
        raise DomainError("No relative distances fell into the bins")
    return float(np.mean(n1 * n2) / first)


def empirical_factorial_moment2(
    samples: Sequence[RelativeDistanceProcess],
    t1: float,
    t2: float,
    floor: float = DEFAULT_FLOOR,
) -> tuple[float, float]:
    """Second factorial moment measure of (t1, 1) x (t2, 1) with its standard error."""
    _check_floor(min(t1, t2), samples, floor)
    values, owner, n = _flatten(samples)
    n1 = _counts(values, owner, n, t1, 1.0)
    n2 = _counts(values, owner, n, t2, 1.0)
    both = _counts(values, owner, n, max(t1, t2), 1.0)
    x = (n1 * n2 - both).astype(float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan


def empirical_pgfl(
    samples: Sequence[RelativeDistanceProcess],
    f: Callable[[np.ndarray], np.ndarray],
) -> tuple[float, float]:
    """Monte Carlo E(prod f(y)) with its standard error; f must accept arrays."""
    if not samples:
        raise DomainError("At least one relative distance sample is required")
    x = np.array([np.prod(f(s.values)) if len(s) else 1.0 for s in samples])
    err = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan
    return float(x.mean()), err


def sample_poisson_surrogate(
    rng: np.random.Generator, floor: float = DEFAULT_FLOOR
) -> RelativeDistanceProcess:
    """Poisson process with intensity 2 r^-3 on [floor, 1), sorted descending."""
    if not 0 < floor < 1:
        raise DomainError(f"floor must lie in (0, 1), got {floor}")
    mass = floor**-2 - 1.0
    count = rng.poisson(mass)
    values = (1.0 + rng.random(count) * mass) ** -0.5
    return RelativeDistanceProcess(np.sort(values)[::-1], floor=floor)
