"""Scalar special functions behind the analytic SIR formulas."""

import logging
import math
from functools import lru_cache

import numpy as np
from scipy import special

logger = logging.getLogger(__name__)

MAX_SERIES_TERMS = 2000
SERIES_TOL = 1e-16
MAX_BELL_ORDER = 32


class DomainError(ValueError):
    """Argument outside the domain of an operation."""

    pass


def _check_delta(delta: float) -> None:
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")


def _sum_series(term, start: float = 0.0) -> float:
    """Add term(0), term(1), ... until the terms stop contributing."""
    total = start
    for n in range(MAX_SERIES_TERMS):
        t = term(n)
        total += t
        if abs(t) <= SERIES_TOL * abs(total) and n > 2:
            return total
    logger.warning(f"Series did not converge within {MAX_SERIES_TERMS} terms")
    return total


def _ps_kernel_scalar(delta: float, theta: float) -> float:
    if theta < 0.5:
        # 2F1(1,-d;1-d;-t) = sum_n -d/(n-d) (-t)^n
        return _sum_series(lambda n: -delta / (n - delta) * (-theta) ** n)
    if theta <= 2.0:
        # Pfaff: (1+t)^-1 2F1(1,1;1-d;w), w = t/(1+t)
        w = theta / (1.0 + theta)
        term = 1.0
        total = 1.0
        for n in range(MAX_SERIES_TERMS):
            term *= (n + 1) / (n + 1 - delta) * w
            total += term
            if term <= SERIES_TOL * total:
                break
        return total / (1.0 + theta)
    # Expansion in 1/theta around the theta^delta / sinc(delta) growth
    inv = 1.0 / theta
    tail = _sum_series(lambda n: delta / (n + 1 + delta) * inv * (-inv) ** n)
    return theta**delta / sincd(delta) + tail


def _interference_kernel_scalar(delta: float, theta: float) -> float:
    if theta < 0.5:
        return _sum_series(lambda n: (1 - delta) / (n + 1 - delta) * (-theta) ** n)
    if theta <= 2.0:
        w = theta / (1.0 + theta)
        term = 1.0
        total = 1.0
        for n in range(MAX_SERIES_TERMS):
            term *= (n + 1) / (n + 2 - delta) * w
            total += term
            if term <= SERIES_TOL * total:
                break
        return total / (1.0 + theta)
    inv = 1.0 / theta
    series = _sum_series(lambda n: (-inv) ** n / (n + delta))
    return (1 - delta) * (math.pi / math.sin(math.pi * delta) * theta ** (delta - 1) - inv * series)


def _apply(kernel, delta: float, theta):
    _check_delta(delta)
    arr = np.asarray(theta, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError(f"theta must be non-negative, got {theta}")
    if arr.ndim == 0:
        return kernel(delta, float(arr))
    return np.array([kernel(delta, float(t)) for t in arr.ravel()]).reshape(arr.shape)


def gauss2f1_ps_kernel(delta: float, theta):
    """Evaluate 2F1(1, -delta; 1-delta; -theta).

    The reciprocal is the PPP success probability under Rayleigh fading. A
    direct power series is used for theta < 1/2, a Pfaff transformation on
    [1/2, 2] and an expansion in 1/theta beyond.

    Args:
        delta: 2/alpha, in (0, 1).
        theta: SIR threshold(s), non-negative. Scalars and arrays are accepted.

    Returns:
        Value(s) >= 1, float for scalar input, ndarray otherwise.

    Raises:
        DomainError: If delta is outside (0, 1) or theta is negative.
    """
    return _apply(_ps_kernel_scalar, delta, theta)


def gauss2f1_interference_kernel(delta: float, theta):
    """Evaluate 2F1(1, 1-delta; 2-delta; -theta).

    Linked to the PPP kernel by delta*theta*F/(1-delta) = 2F1(1,-delta;1-delta;-theta) - 1.
    """
    return _apply(_interference_kernel_scalar, delta, theta)


@lru_cache(maxsize=4096)
def _bell(n: int, k: int, xs: tuple) -> float:
    if n == 0 and k == 0:
        return 1
    if n == 0 or k == 0:
        return 0
    return sum(
        math.comb(n - 1, i - 1) * xs[i - 1] * _bell(n - i, k - 1, xs)
        for i in range(1, n - k + 2)
    )


def incomplete_bell(n: int, k: int, x) -> float:
    """Partial Bell polynomial B_{n,k}(x_1, ..., x_{n-k+1}).

    Uses B_{n,k} = sum_i C(n-1, i-1) x_i B_{n-i,k-1}. Integer inputs stay exact.

    Raises:
        DomainError: If 1 <= k <= n fails, n exceeds 32 or len(x) != n-k+1.
    """
    if not 1 <= k <= n:
        raise DomainError(f"Need 1 <= k <= n, got n={n}, k={k}")
    if n > MAX_BELL_ORDER:
        raise DomainError(f"Bell polynomial order {n} exceeds {MAX_BELL_ORDER}")
    xs = tuple(x)
    if len(xs) != n - k + 1:
        raise DomainError(f"B_{{{n},{k}}} takes {n - k + 1} arguments, got {len(xs)}")
    return _bell(n, k, xs)


def riemann_zeta(s: float) -> float:
    if not s > 1:
        raise DomainError(f"zeta(s) needs s > 1, got {s}")
    return float(special.zeta(s))


def dirichlet_beta(s: float) -> float:
    """beta(s) = 4^-s (zeta(s, 1/4) - zeta(s, 3/4)) for s > 1."""
    if not s > 1:
        raise DomainError(f"beta(s) needs s > 1 here, got {s}")
    return float(4.0**-s * (special.zeta(s, 0.25) - special.zeta(s, 0.75)))


def epstein_z(x: float) -> float:
    """Square lattice sum over (i, j) != (0, 0) of (i^2 + j^2)^(-x/2)."""
    if not x > 2:
        raise DomainError(f"Epstein zeta diverges for x <= 2, got {x}")
    s = x / 2.0
    return 4.0 * riemann_zeta(s) * dirichlet_beta(s)


def sincd(delta: float) -> float:
    """sin(pi*delta)/(pi*delta)."""
    _check_delta(delta)
    return float(np.sinc(delta))
