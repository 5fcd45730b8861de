"""Reproducible Monte Carlo engine for SIR, ISR and EFIR statistics.

Samples are processed in fixed-size chunks. Chunk j always draws from the
stream SeedSequence(seed, spawn_key=(j,)), whichever worker runs it, and
per-chunk results are combined in chunk order, so the worker count never
changes a result.
"""

import logging
import math
import time
from collections.abc import Callable, Iterator
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import numpy as np
from scipy import stats

from . import fading as fading_ops
from .analytic import ps_ppp_rayleigh
from .models import (
    CcdfEstimate,
    EfirMethod,
    EfirResult,
    MomentEstimate,
    NetworkKind,
    RelativeDistanceProcess,
    SimConfig,
)
from .pointprocess import (
    batch_width,
    check_truncation,
    nearest_distance_bound,
    residual_interference,
    sample_distance_batch,
    truncation_radius,
)
from .rdp import DEFAULT_FLOOR
from .specialfn import DomainError

logger = logging.getLogger(__name__)

T = TypeVar("T")

# Upper bound on array elements per sampled batch
MAX_BATCH_ELEMENTS = 1 << 21
Z_95 = 1.959963984540054
WILSON_THRESHOLD = 10


class InversionRangeError(DomainError):
    """Requested probability level is not attained by the estimate."""

    pass


def chunk_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream of chunk ``index``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _chunks(samples: int, chunk_size: int) -> list[tuple[int, int]]:
    full, rest = divmod(samples, chunk_size)
    sizes = [chunk_size] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def _run_chunks(cfg: SimConfig, work: Callable[[np.random.Generator, int], T]) -> list[T]:
    """Apply ``work(rng, rows)`` to every chunk and return the results in chunk order."""
    chunks = _chunks(cfg.samples, cfg.chunk_size)
    started = time.perf_counter()

    def run(chunk: tuple[int, int]) -> T:
        index, rows = chunk
        logger.debug(f"Chunk {index}: {rows} samples")
        return work(chunk_rng(cfg.seed, index), rows)

    if cfg.workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(chunk) for chunk in chunks]
    logger.info(
        f"{cfg.model.label}: {cfg.samples} samples in {len(chunks)} chunks "
        f"({cfg.workers} workers) took {time.perf_counter() - started:.2f}s"
    )
    return results


def resolve_radius(cfg: SimConfig) -> float:
    """Truncation radius of a configuration, checked when given explicitly.

    Raises:
        TruncationError: If the explicit radius violates the truncation rule.
    """
    if cfg.truncation_radius is not None:
        check_truncation(
            cfg.model, cfg.alpha, cfg.truncation_radius, cfg.truncation_eps, cfg.fading
        )
        return cfg.truncation_radius
    radius = truncation_radius(cfg.model, cfg.alpha, cfg.truncation_eps, cfg.fading)
    logger.debug(f"Truncation radius {radius:.4g} for {cfg.model.label}, alpha={cfg.alpha}")
    return radius


def _fading(cfg: SimConfig, rng: np.random.Generator, shape):
    if cfg.fading is None:
        return np.ones(shape)
    return fading_ops.sample(cfg.fading, rng, shape)


def _distance_batches(
    cfg: SimConfig,
    rng: np.random.Generator,
    rows: int,
    r_max: float,
    palm: bool = False,
) -> Iterator[np.ndarray]:
    width = batch_width(cfg.model, r_max, palm, cfg.palm_first_shape)
    per_batch = max(1, MAX_BATCH_ELEMENTS // max(width, 1))
    done = 0
    while done < rows:
        size = min(per_batch, rows - done)
        yield sample_distance_batch(cfg.model, r_max, rng, size, palm, cfg.palm_first_shape)
        done += size


def _power_batches(
    cfg: SimConfig,
    rng: np.random.Generator,
    rows: int,
    r_max: float,
    palm: bool = False,
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (distances, received powers h |x|^-alpha), nearest point in column 0."""
    for d in _distance_batches(cfg, rng, rows, r_max, palm):
        yield d, _fading(cfg, rng, d.shape) * d**-cfg.alpha


def _half_widths(exceed: np.ndarray, n: int) -> np.ndarray:
    """95% normal half-widths, Wilson intervals where the expected count is small."""
    p = exceed / n
    half = Z_95 * np.sqrt(p * (1 - p) / n)
    for j in np.flatnonzero(p * n < WILSON_THRESHOLD):
        ci = stats.binomtest(int(exceed[j]), n).proportion_ci(0.95, method="wilson")
        half[j] = (ci.high - ci.low) / 2
    return half


def _ccdf_from_counts(grid: np.ndarray, counts: np.ndarray, samples: int) -> CcdfEstimate:
    exceed = np.cumsum(counts[::-1])[::-1][1:]
    est = CcdfEstimate(
        theta_grid=grid.copy(),
        p_hat=exceed / samples,
        half_width=_half_widths(exceed, samples),
        samples_used=samples,
        exceedances=exceed,
    )
    flagged = int(np.count_nonzero(~est.reliable))
    if flagged:
        logger.warning(f"{flagged} of {grid.size} grid points have fewer than 100 exceedances")
    return est


def _exceedance_counts(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    # value > theta_j exactly when j < searchsorted(grid, value, 'left')
    return np.bincount(np.searchsorted(grid, values, side="left"), minlength=grid.size + 1)


def estimate_sir_ccdf(cfg: SimConfig) -> CcdfEstimate:
    """P(SIR > theta) on the configured grid, all thresholds sharing the same samples.

    Raises:
        TruncationError: If an explicit truncation radius is too small.
    """
    r_max = resolve_radius(cfg)
    residual = residual_interference(cfg.model, cfg.alpha, r_max)
    grid = cfg.theta_grid

    def work(rng: np.random.Generator, rows: int) -> np.ndarray:
        counts = np.zeros(grid.size + 1, dtype=np.int64)
        for _, p in _power_batches(cfg, rng, rows, r_max):
            sir = p[:, 0] / (p[:, 1:].sum(axis=1) + residual)
            counts += _exceedance_counts(sir, grid)
        return counts

    counts = np.sum(_run_chunks(cfg, work), axis=0)
    return _ccdf_from_counts(grid, counts, cfg.samples)


def _mean_and_error(sums: list[np.ndarray], samples: int) -> tuple[float, float]:
    s1 = math.fsum(float(s[0]) for s in sums)
    s2 = math.fsum(float(s[1]) for s in sums)
    mean = s1 / samples
    var = max(s2 / samples - mean**2, 0.0)
    return mean, math.sqrt(var / samples)


def estimate_misr_n(cfg: SimConfig, n: int) -> MomentEstimate:
    """Sample mean of ISR^n, the interference divided by the fading-averaged signal R^-alpha."""
    if n < 1:
        raise DomainError(f"Moment order must be positive, got {n}")
    r_max = resolve_radius(cfg)
    residual = residual_interference(cfg.model, cfg.alpha, r_max)

    def work(rng: np.random.Generator, rows: int) -> np.ndarray:
        s1, s2 = [], []
        for d, p in _power_batches(cfg, rng, rows, r_max):
            x = ((p[:, 1:].sum(axis=1) + residual) * d[:, 0] ** cfg.alpha) ** n
            s1.append(math.fsum(x))
            s2.append(math.fsum(x * x))
        return np.array([math.fsum(s1), math.fsum(s2)])

    mean, err = _mean_and_error(_run_chunks(cfg, work), cfg.samples)
    return MomentEstimate(n=n, mean_power_n=mean, std_err=err)


def estimate_efir(cfg: SimConfig) -> EfirResult:
    """(lambda pi E[(h/I)^delta])^(1/delta) over reduced Palm samples.

    I is the total power received from all points of the Palm realization
    and h the fading of the removed point at the origin.
    """
    r_max = resolve_radius(cfg)
    residual = residual_interference(cfg.model, cfg.alpha, r_max)
    delta = cfg.delta

    def work(rng: np.random.Generator, rows: int) -> np.ndarray:
        s1, s2 = [], []
        for _, p in _power_batches(cfg, rng, rows, r_max, palm=True):
            h = _fading(cfg, rng, p.shape[0])
            x = (h / (p.sum(axis=1) + residual)) ** delta
            s1.append(math.fsum(x))
            s2.append(math.fsum(x * x))
        return np.array([math.fsum(s1), math.fsum(s2)])

    mean, err = _mean_and_error(_run_chunks(cfg, work), cfg.samples)
    lp = cfg.model.intensity * math.pi
    value = (lp * mean) ** (1.0 / delta)
    return EfirResult(
        value, EfirMethod.MONTE_CARLO, std_err=value / delta * err / mean if mean else math.nan
    )


def _reliable_view(est: CcdfEstimate) -> CcdfEstimate:
    mask = est.reliable
    return CcdfEstimate(
        theta_grid=est.theta_grid[mask],
        p_hat=est.p_hat[mask],
        half_width=est.half_width[mask],
        samples_used=est.samples_used,
        exceedances=est.exceedances[mask],
    )


def inverse_ccdf(est: CcdfEstimate, p: float) -> float:
    """Threshold at which p_hat crosses p, interpolating linearly in (log theta, p).

    Raises:
        InversionRangeError: If p lies outside [min p_hat, max p_hat].
    """
    p_hat = est.p_hat
    if p_hat.size == 0 or not p_hat[-1] <= p <= p_hat[0]:
        raise InversionRangeError(f"Level {p} is not attained by the estimate")
    j = int(np.argmax(p_hat <= p))
    if p_hat[j] == p or j == 0:
        return float(est.theta_grid[j])
    upper, lower = p_hat[j - 1], p_hat[j]
    t = (upper - p) / (upper - lower)
    log_theta = np.log(est.theta_grid[j - 1 : j + 1])
    return float(np.exp(log_theta[0] + t * (log_theta[1] - log_theta[0])))


def gain_curve(
    target: CcdfEstimate,
    delta: float,
    reference_grid: np.ndarray | None = None,
    reliable_only: bool = True,
) -> list[tuple[float, float]]:
    """Horizontal gap G(theta) of ``target`` over the analytic PPP ccdf.

    G(theta) = F_target^-1(p_PPP(theta)) / theta. Thresholds whose reference
    probability is not attained by the target are skipped and reported.
    """
    est = _reliable_view(target) if reliable_only else target
    grid = target.theta_grid if reference_grid is None else np.asarray(reference_grid, dtype=float)
    curve, skipped = [], []
    for theta in grid:
        try:
            curve.append((float(theta), inverse_ccdf(est, ps_ppp_rayleigh(theta, delta)) / theta))
        except InversionRangeError:
            skipped.append(float(theta))
    if skipped:
        logger.warning(
            f"Gain curve skipped {len(skipped)} thresholds outside the estimated range "
            f"({10 * math.log10(skipped[0]):.1f} dB ... {10 * math.log10(skipped[-1]):.1f} dB)"
        )
    return curve


def gain_extremes(curve: list[tuple[float, float]]) -> tuple[float, float]:
    """Smallest and largest gain along a curve."""
    if not curve:
        raise DomainError("Empty gain curve")
    gains = [g for _, g in curve]
    low, high = min(gains), max(gains)
    logger.info(f"Gain curve ranges from {low:.4g} to {high:.4g}")
    return low, high


def asappp(theta, g: float, delta: float):
    """PPP success probability at theta/G, the shifted-ccdf approximation."""
    if not g > 0:
        raise DomainError(f"Gain must be positive, got {g}")
    return ps_ppp_rayleigh(np.asarray(theta, dtype=float) / g, delta)


def estimate_signal_tail(cfg: SimConfig, theta: float) -> float:
    """Empirical P(h R^-alpha > theta) for the nearest base station."""
    r_max = nearest_distance_bound(cfg.model) * 1.001

    def work(rng: np.random.Generator, rows: int) -> np.ndarray:
        counts = np.zeros(2, dtype=np.int64)
        for d in _distance_batches(cfg, rng, rows, r_max):
            signal = _fading(cfg, rng, d.shape[0]) * d[:, 0] ** -cfg.alpha
            counts += _exceedance_counts(signal, np.array([theta]))
        return counts

    counts = np.sum(_run_chunks(cfg, work), axis=0)
    return float(counts[1] / cfg.samples)


def estimate_max_sir_tail(cfg: SimConfig, theta: float) -> float:
    """Empirical P(max_x SIR(x) > theta) over base stations within the truncation radius.

    Raises:
        DomainError: If theta <= 1 (several stations could then qualify).
    """
    if not theta > 1:
        raise DomainError(f"Max-SIR tail needs theta > 1, got {theta}")
    r_max = resolve_radius(cfg)
    residual = residual_interference(cfg.model, cfg.alpha, r_max)

    def work(rng: np.random.Generator, rows: int) -> np.ndarray:
        counts = np.zeros(2, dtype=np.int64)
        for _, p in _power_batches(cfg, rng, rows, r_max):
            total = p.sum(axis=1) + residual
            strongest = p.max(axis=1)
            counts += _exceedance_counts(strongest / (total - strongest), np.array([theta]))
        return counts

    counts = np.sum(_run_chunks(cfg, work), axis=0)
    return float(counts[1] / cfg.samples)


def estimate_scaled_ccdf(est: CcdfEstimate, delta: float) -> np.ndarray:
    """theta^delta p_hat, flat at EFIR^delta in the tail."""
    return est.theta_grid**delta * est.p_hat


def fit_tail_exponent(est: CcdfEstimate, decades: float = 1.0) -> float:
    """Least-squares slope of log p_hat against log theta over the top reliable decades."""
    view = _reliable_view(est)
    keep = view.p_hat > 0
    theta, p = view.theta_grid[keep], view.p_hat[keep]
    if theta.size == 0:
        raise DomainError("No reliable grid points to fit")
    sel = theta >= theta[-1] / 10.0**decades
    if np.count_nonzero(sel) < 2:
        raise DomainError("Need at least two reliable points in the fitted range")
    slope, _ = np.polyfit(np.log(theta[sel]), np.log(p[sel]), 1)
    return float(slope)


def _ppp_rdp_chunk(
    rng: np.random.Generator, rows: int, floor: float
) -> list[RelativeDistanceProcess]:
    # Given R, the other points form a PPP outside the disk of radius R; on the
    # annulus up to R/floor the squared radii are uniform and their count is
    # Poisson(lambda pi R^2 (floor^-2 - 1)). lambda pi R^2 is Exp(1).
    scale = rng.exponential(size=rows)
    mass = floor**-2 - 1.0
    counts = rng.poisson(scale * mass)
    ratios = (1.0 + rng.random(int(counts.sum())) * mass) ** -0.5
    return [
        RelativeDistanceProcess(np.sort(v)[::-1], floor=floor, scale=s)
        for v, s in zip(np.split(ratios, np.cumsum(counts)[:-1]), scale, strict=True)
    ]


def sample_rdps(cfg: SimConfig, floor: float = DEFAULT_FLOOR) -> list[RelativeDistanceProcess]:
    """Relative distance processes of cfg.samples realizations, complete down to ``floor``."""
    if not 0 < floor < 1:
        raise DomainError(f"floor must lie in (0, 1), got {floor}")
    if cfg.model.kind == NetworkKind.PPP:
        chunks = _run_chunks(cfg, lambda rng, rows: _ppp_rdp_chunk(rng, rows, floor))
        return [r for chunk in chunks for r in chunk]

    r_max = nearest_distance_bound(cfg.model) / floor
    lp = cfg.model.intensity * math.pi

    def work(rng: np.random.Generator, rows: int) -> list[RelativeDistanceProcess]:
        out = []
        for d in _distance_batches(cfg, rng, rows, r_max):
            ratios = d[:, :1] / d[:, 1:]
            for r0, row in zip(d[:, 0], ratios, strict=True):
                out.append(
                    RelativeDistanceProcess(row[row >= floor], floor=floor, scale=lp * r0**2)
                )
        return out

    chunks = _run_chunks(cfg, work)
    return [r for chunk in chunks for r in chunk]
