"""Closed forms, bounds and asymptotes for the SIR distribution and its gains."""

import logging
import math
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special

from . import fading as fading_ops
from .models import EfirMethod, EfirResult, FadingModel, GainReport, NetworkKind, NetworkModel
from .pointprocess import (
    TruncationError,
    lattice_basis,
    lattice_points,
    residual_interference,
)
from .specialfn import (
    MAX_BELL_ORDER,
    DomainError,
    epstein_z,
    gauss2f1_interference_kernel,
    gauss2f1_ps_kernel,
    incomplete_bell,
    sincd,
)

logger = logging.getLogger(__name__)

RAYLEIGH = FadingModel()

GINIBRE_START_SHAPES = 32
GINIBRE_MAX_SHAPES = 4096
GINIBRE_QUANTILE_NODES = 128
LATTICE_SHIFT_NODES = 128
LATTICE_RADIUS_SPACINGS = 16.0


def _check_delta(delta: float) -> None:
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")


def _check_positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise DomainError(f"{name} must be positive, got {value}")


def db(x):
    return 10.0 * np.log10(x)


def from_db(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def ps_ppp_rayleigh(theta, delta: float):
    """PPP success probability with Rayleigh fading, 1/2F1(1,-delta;1-delta;-theta).

    At delta = 1/2 the closed form 1/(1 + sqrt(theta) arctan(sqrt(theta))) is used.
    """
    _check_delta(delta)
    arr = np.asarray(theta, dtype=float)
    if np.any(arr < 0):
        raise DomainError(f"theta must be non-negative, got {theta}")
    if delta == 0.5:
        root = np.sqrt(arr)
        out = 1.0 / (1.0 + root * np.arctan(root))
        return float(out) if out.ndim == 0 else out
    return 1.0 / gauss2f1_ps_kernel(delta, theta)


def ps_ppp_rayleigh_alt(theta, delta: float):
    """Same probability through 1/(1 + delta theta 2F1(1,1-delta;2-delta;-theta)/(1-delta))."""
    arr = np.asarray(theta, dtype=float)
    return 1.0 / (1.0 + delta * arr * gauss2f1_interference_kernel(delta, theta) / (1 - delta))


def jensen_bound(theta, misr: float):
    """exp(-theta MISR), the lower bound on p_s from Jensen's inequality."""
    return np.exp(-np.asarray(theta, dtype=float) * misr)


def misr_ppp(alpha: float) -> float:
    """Mean interference-to-signal ratio of the PPP, 2/(alpha-2)."""
    if not alpha > 2:
        raise DomainError(f"MISR of the PPP needs alpha > 2, got {alpha}")
    return 2.0 / (alpha - 2.0)


def lattice_misr(
    kind: NetworkKind,
    alpha: float,
    nodes: int = LATTICE_SHIFT_NODES,
    radius_spacings: float = LATTICE_RADIUS_SPACINGS,
) -> float:
    """MISR of a shifted lattice by midpoint quadrature over the uniform shift.

    The shift runs over a nodes x nodes grid of the fundamental cell. Points
    beyond radius_spacings lattice spacings contribute their mean
    interference, as in the samplers. The result does not depend on the
    intensity.
    """
    kind = NetworkKind(kind)
    if not kind.is_lattice:
        raise DomainError(f"{kind.value} is not a lattice")
    if not alpha > 2:
        raise DomainError(f"Path loss exponent must exceed 2, got {alpha}")
    if nodes < 1 or not radius_spacings >= 3:
        raise DomainError("Need at least one node and a radius of 3 spacings")
    model = NetworkModel(kind)
    r_max = radius_spacings * model.lattice_spacing
    pts = lattice_points(model, r_max + 2 * model.lattice_spacing)
    residual = residual_interference(model, alpha, r_max)
    u = (np.arange(nodes) + 0.5) / nodes
    rows = []
    for a in u:
        shift = np.column_stack([np.full(nodes, a), u]) @ lattice_basis(model)
        d = np.hypot(pts[None, :, 0] + shift[:, 0, None], pts[None, :, 1] + shift[:, 1, None])
        d.sort(axis=1)
        far = d[:, 1:]
        power = np.where(far < r_max, far, np.inf) ** -alpha
        rows.append(math.fsum((power.sum(axis=1) + residual) * d[:, 0] ** alpha))
    value = math.fsum(rows) / nodes**2
    logger.debug(f"Lattice MISR of {kind.value} at alpha={alpha}: {value:.6g} ({nodes}^2 shifts)")
    return value


def _isr_arguments(n: int, delta: float, fading: FadingModel) -> list[float]:
    return [delta * fading_ops.moment(fading, j) / (j - delta) for j in range(1, n + 1)]


def isr_moment_ppp(n: int, delta: float, fading: FadingModel = RAYLEIGH) -> float:
    """E(ISR^n) for the PPP, sum_k k! B_{n,k}(x_1, ...) with x_j = delta E(h^j)/(j-delta)."""
    _check_delta(delta)
    if n < 1:
        raise DomainError(f"Moment order must be positive, got {n}")
    if n > MAX_BELL_ORDER:
        raise DomainError(f"Moment order {n} exceeds {MAX_BELL_ORDER}")
    x = _isr_arguments(n, delta, fading)
    return math.fsum(
        math.factorial(k) * incomplete_bell(n, k, x[: n - k + 1]) for k in range(1, n + 1)
    )


def gen_misr_ppp(n: int, delta: float, fading: FadingModel = RAYLEIGH) -> float:
    """Generalized MISR of the PPP, (E ISR^n)^(1/n)."""
    return isr_moment_ppp(n, delta, fading) ** (1.0 / n)


def gen_misr_bounds(
    n: int, delta: float, fading: FadingModel = RAYLEIGH
) -> tuple[float, float, float]:
    """Lower bound on MISR_n and its small- and large-delta asymptotes.

    Returns:
        (lower, asymptotic_small_delta, asymptotic_large_delta), where
        lower = [(delta/(1-delta))^n n! + delta E(h^n)/(n-delta)]^(1/n),
        the small-delta asymptote is (delta E(h^n)/n)^(1/n) and the
        large-delta one is MISR_1 (n!)^(1/n).
    """
    _check_delta(delta)
    if n < 2:
        raise DomainError(f"Bounds are stated for n >= 2, got {n}")
    misr1 = delta / (1 - delta)
    hn = fading_ops.moment(fading, n)
    lower = (misr1**n * math.factorial(n) + delta * hn / (n - delta)) ** (1.0 / n)
    small = (delta * hn / n) ** (1.0 / n)
    large = misr1 * math.factorial(n) ** (1.0 / n)
    return lower, small, large


def misr_n_large_n_asymptote(n: float, delta: float) -> float:
    """(n/e) MISR_1, stated for Rayleigh fading and delta >= 1/2."""
    if not 0.5 <= delta < 1:
        raise DomainError(f"Large-n asymptote holds for delta in [1/2, 1), got {delta}")
    return n / math.e * delta / (1 - delta)


def _isr_generating(s: float, delta: float, fading: FadingModel) -> float:
    """sum_j delta E(h^j)/(j-delta) s^j/j!, the series whose reciprocal gap generates E ISR^n/n!."""
    m = fading.m
    terms = max(64, int(math.ceil(40.0 / max(-math.log(s / m), 1e-7))))
    j = np.arange(1, min(terms, 2_000_000) + 1, dtype=float)
    # log(E(h^j)/j!) = lgamma(m+j) - lgamma(m) - j log m - lgamma(j+1)
    log_coef = (
        special.gammaln(m + j) - special.gammaln(m) - j * math.log(m) - special.gammaln(j + 1)
    )
    return float(np.sum(delta / (j - delta) * np.exp(log_coef + j * math.log(s))))


def misr_n_limit_slope(delta: float, fading: FadingModel = RAYLEIGH) -> float:
    """lim MISR_n / n for the PPP, equal to 1/(e s*) where the generating series reaches 1 at s*."""
    _check_delta(delta)
    radius = float(fading.m)
    hi = radius / 2
    while _isr_generating(hi, delta, fading) < 1.0:
        hi = (hi + radius) / 2
        if radius - hi < 1e-9 * radius:
            raise DomainError(f"Generating series stays below 1 for delta={delta}")
    root = optimize.brentq(lambda s: _isr_generating(s, delta, fading) - 1.0, 1e-12, hi, xtol=1e-14)
    return 1.0 / (math.e * root)


def g0(m: int, misr_m_model: float, misr_m_ppp: float) -> float:
    """Asymptotic gain at theta -> 0 for diversity order m, MISR_{m,PPP} / MISR_m."""
    _check_positive(m=m, misr_m_model=misr_m_model, misr_m_ppp=misr_m_ppp)
    return misr_m_ppp / misr_m_model


def efir_ppp(delta: float) -> EfirResult:
    """EFIR of the PPP, (sinc delta)^(1/delta), for any fading and intensity."""
    return EfirResult(sincd(delta) ** (1.0 / delta), EfirMethod.CLOSED_FORM)


def lattice_efir_bounds(delta: float) -> EfirResult:
    """Square lattice EFIR bounds under Rayleigh fading; value is the lower bound."""
    _check_delta(delta)
    z = epstein_z(2.0 / delta)
    lower = (math.pi * math.gamma(1 + delta)) ** (1.0 / delta) / z
    upper = (math.pi / sincd(delta)) ** (1.0 / delta) / z
    return EfirResult(lower, EfirMethod.BOUNDS, lower=lower, upper=upper)


@lru_cache(maxsize=16)
def _gamma_quantile_nodes(first: int, last: int, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gamma(k) quantiles at Gauss-Legendre nodes in probability, k in [first, last]."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    p = (x + 1.0) / 2.0
    ks = np.arange(first, last + 1, dtype=float)
    v = special.gammaincinv(ks[:, None], p[None, :])
    return v, w / 2.0


def ginibre_palm_factors(
    s: float,
    delta: float,
    fading: FadingModel,
    c: float,
    shapes: tuple[int, int],
    nodes: int = GINIBRE_QUANTILE_NODES,
) -> np.ndarray:
    """Factors E[L_h(s Q_k^(-alpha/2))], Q_k ~ Gamma(k, rate c), k in the inclusive ``shapes``.

    With u = c Q_k the factor only depends on s c^(alpha/2).
    """
    v, w = _gamma_quantile_nodes(shapes[0], shapes[1], nodes)
    a = 1.0 / delta
    scaled = s * c**a
    if scaled == 0:
        return np.ones(v.shape[0])
    return fading_ops.laplace(fading, scaled * v**-a) @ w


def _ginibre_tail_sum(start: int, a: float) -> float:
    """sum_{k >= start} Gamma(k-a)/Gamma(k) = Gamma(start-a) / ((a-1) Gamma(start-1))."""
    return math.exp(special.gammaln(start - a) - special.gammaln(start - 1)) / (a - 1)


def _ginibre_second_order(cap: int, a: float, fading: FadingModel) -> float:
    """Second-order remainder at s c^a = 1 of the factors beyond ``cap``."""
    if cap + 1 <= 2 * a:
        return math.inf
    return 0.5 * fading.second_moment * _ginibre_tail_sum(cap + 1, 2 * a)


def efir_ginibre(
    delta: float,
    fading: FadingModel = RAYLEIGH,
    c: float = 1.0,
    trunc: int | None = None,
    tol: float = 1e-8,
    truncation_tol: float = 1e-6,
    first_shape: int = 2,
) -> EfirResult:
    """EFIR of the Ginibre process from its radial Palm product.

    The Laplace transform of the Palm interference is the product over k of
    E[L_h(s Q_k^(-alpha/2))]. Factors up to K are integrated numerically,
    the rest enter through their first-order expansion. Then
    E(I^-delta) = int_0^inf L(s) s^(delta-1) ds / Gamma(delta) and
    EFIR = (c E(I^-delta) E(h^delta))^(1/delta).

    Args:
        delta: 2/alpha.
        fading: Fading model.
        c: Ginibre parameter (intensity c/pi); the result does not depend on it.
        trunc: Number of exact factors K. None doubles K from 32 until the
            second-order remainder drops below ``truncation_tol``.
        tol: Quadrature tolerance of the outer integral.
        truncation_tol: Admissible second-order remainder.
        first_shape: First Gamma shape of the reduced Palm radii.

    Raises:
        TruncationError: If K (given or capped at 4096) is insufficient.
    """
    _check_delta(delta)
    _check_positive(c=c)
    a = 1.0 / delta
    if trunc is None:
        cap = GINIBRE_START_SHAPES
        while _ginibre_second_order(cap, a, fading) > truncation_tol:
            cap *= 2
            if cap > GINIBRE_MAX_SHAPES:
                raise TruncationError(
                    f"Ginibre product needs more than {GINIBRE_MAX_SHAPES} factors at delta={delta}"
                )
    else:
        cap = int(trunc)
        remainder = _ginibre_second_order(cap, a, fading)
        if cap < first_shape or remainder > truncation_tol:
            raise TruncationError(
                f"K={cap} leaves a second-order remainder {remainder:.3g} > {truncation_tol:g}"
            )
    tail = _ginibre_tail_sum(cap + 1, a)
    logger.debug(f"Ginibre EFIR: delta={delta}, {cap - first_shape + 1} exact factors")

    def laplace_palm(s: float) -> float:
        factors = ginibre_palm_factors(s, delta, fading, c, (first_shape, cap))
        log_l = np.sum(np.log(factors)) - s * c**a * tail
        return math.exp(log_l)

    # s = t^(1/delta) turns s^(delta-1) ds into dt/delta
    def integrand(t: float) -> float:
        return laplace_palm(t**a)

    head, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=tol, epsrel=tol, limit=200)
    rest, _ = integrate.quad(integrand, 1.0, np.inf, epsabs=tol, epsrel=tol, limit=200)
    inv_moment = (head + rest) / (delta * math.gamma(delta))
    value = (c * inv_moment * fading_ops.moment(fading, delta)) ** a
    return EfirResult(value, EfirMethod.PRODUCT_QUADRATURE)


def g_infty(efir_model: float, delta: float) -> float:
    """Asymptotic gain at theta -> infinity, EFIR / EFIR_PPP."""
    _check_positive(efir_model=efir_model)
    return efir_model / efir_ppp(delta).value


def gain_report(g0_value: float, g_inf_value: float, m: int = 1) -> GainReport:
    return GainReport(g0_value, g_inf_value, diversity_m=m)


def tail_asymptote(theta, efir: float, delta: float):
    """(theta/EFIR)^-delta, the high-threshold behavior of any stationary model."""
    _check_positive(efir=efir)
    return (np.asarray(theta, dtype=float) / efir) ** -delta


def signal_tail(
    theta,
    intensity: float,
    fading: FadingModel,
    delta: float,
    lower: bool = False,
):
    """Asymptotes of the desired signal S = h R^-alpha.

    Upper tail: P(S > theta) ~ lambda pi E(h^delta) theta^-delta.
    With ``lower`` set, the PPP lower tail P(S < theta) ~
    c_m Gamma(1 + m alpha/2) (lambda pi)^(-m alpha/2) theta^m.
    """
    _check_delta(delta)
    _check_positive(intensity=intensity)
    theta = np.asarray(theta, dtype=float)
    lp = intensity * math.pi
    if not lower:
        return lp * fading_ops.moment(fading, delta) * theta**-delta
    m, c_m = fading_ops.small_x_params(fading)
    alpha = 2.0 / delta
    return c_m * math.gamma(1 + m * alpha / 2) * lp ** (-m * alpha / 2) * theta**m


def nakagami_ps_small_theta(theta, m: int, delta: float):
    """Upper asymptote 1 - theta^m [(m delta/(1-delta))^m + delta/(m-delta) E(h^m)]."""
    _check_delta(delta)
    if m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    bracket = (m * delta / (1 - delta)) ** m + delta / (m - delta) * fading_ops.moment(
        FadingModel(m), m
    )
    return 1.0 - np.asarray(theta, dtype=float) ** m * bracket


def ps_ppp_small_theta(theta, delta: float, fading: FadingModel = RAYLEIGH):
    """Leading behavior 1 - c_m theta^m E(ISR^m) of the PPP success probability."""
    m, c_m = fading_ops.small_x_params(fading)
    return 1.0 - c_m * np.asarray(theta, dtype=float) ** m * isr_moment_ppp(m, delta, fading)


def misr_high_alpha_asymptote(alpha: float, beta1_at_1: float) -> float:
    """MISR ~ delta beta_1(1) as delta -> 0."""
    if not alpha > 2:
        raise DomainError(f"alpha must exceed 2, got {alpha}")
    return 2.0 / alpha * beta1_at_1
