"""Unit-mean Gamma (Nakagami-m) power fading."""

import math

import numpy as np
from scipy import special

from .models import FadingModel
from .specialfn import DomainError


def sample(model: FadingModel, rng: np.random.Generator, size=None):
    """Draw fading gains from Gamma(shape m, rate m); exponential for Rayleigh."""
    return rng.gamma(model.m, 1.0 / model.m, size)


def ccdf(model: FadingModel, x):
    """P(h > x), the regularized upper incomplete gamma Q(m, m*x)."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise DomainError(f"Fading ccdf needs x >= 0, got {x}")
    out = special.gammaincc(model.m, model.m * arr)
    return float(out) if out.ndim == 0 else out


def cdf(model: FadingModel, x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise DomainError(f"Fading cdf needs x >= 0, got {x}")
    out = special.gammainc(model.m, model.m * arr)
    return float(out) if out.ndim == 0 else out


def moment(model: FadingModel, t: float) -> float:
    """E(h^t) = Gamma(m+t) / (Gamma(m) m^t), finite for t > -m.

    Non-negative integer orders are evaluated as an exact product so that
    E(h) is exactly 1.
    """
    m = model.m
    if not t > -m:
        raise DomainError(f"E(h^t) diverges for t <= -{m}, got t={t}")
    if float(t).is_integer() and t >= 0:
        order = int(t)
        return math.prod(m + j for j in range(order)) / m**order
    return math.exp(special.gammaln(m + t) - special.gammaln(m) - t * math.log(m))


def laplace(model: FadingModel, s):
    """E(exp(-s h)) = (1 + s/m)^-m."""
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0):
        raise DomainError(f"Laplace transform argument must be >= 0, got {s}")
    out = (1.0 + arr / model.m) ** (-model.m)
    return float(out) if out.ndim == 0 else out


def small_x_params(model: FadingModel) -> tuple[int, float]:
    """(m, c_m) with P(h < x) ~ c_m x^m as x -> 0, c_m = m^(m-1)/Gamma(m)."""
    m = model.m
    return m, m ** (m - 1) / math.factorial(m - 1)
