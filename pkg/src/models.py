"""Data models for SIR distribution analysis and simulation."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .specialfn import DomainError

# Grid points with fewer exceedances than this are flagged as unreliable
MIN_EXCEEDANCES = 100


class NetworkKind(str, Enum):
    """Stationary point process generating the base stations."""

    PPP = "ppp"
    SQUARE = "square"
    TRIANGULAR = "triangular"
    GINIBRE = "ginibre"

    @property
    def is_lattice(self) -> bool:
        """Check if this is one of the shifted lattices."""
        return self in (NetworkKind.SQUARE, NetworkKind.TRIANGULAR)


@dataclass(frozen=True)
class NetworkModel:
    """Base station process and its intensity (points per unit area)."""

    kind: NetworkKind = NetworkKind.PPP
    intensity: float = 1.0

    def __post_init__(self):
        if not self.intensity > 0 or not math.isfinite(self.intensity):
            raise DomainError(f"Intensity must be positive and finite, got {self.intensity}")
        object.__setattr__(self, "kind", NetworkKind(self.kind))

    @property
    def ginibre_c(self) -> float:
        """Ginibre parameter c, linked to the intensity by lambda = c / pi."""
        return self.intensity * math.pi

    @property
    def lattice_spacing(self) -> float:
        """Distance between nearest lattice neighbors at this intensity."""
        if self.kind == NetworkKind.SQUARE:
            return 1.0 / math.sqrt(self.intensity)
        if self.kind == NetworkKind.TRIANGULAR:
            return math.sqrt(2.0 / (math.sqrt(3.0) * self.intensity))
        raise DomainError(f"{self.kind.value} is not a lattice")

    @property
    def label(self) -> str:
        """Short name used in logs and metadata."""
        return f"{self.kind.value}(lambda={self.intensity:g})"


@dataclass(frozen=True)
class FadingModel:
    """Unit-mean Gamma power fading with integer shape m (m=1 is Rayleigh)."""

    m: int = 1

    def __post_init__(self):
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
            raise DomainError(f"Nakagami parameter must be a positive integer, got {self.m}")
        object.__setattr__(self, "m", int(self.m))

    @classmethod
    def rayleigh(cls) -> "FadingModel":
        return cls(1)

    @classmethod
    def nakagami(cls, m: int) -> "FadingModel":
        return cls(m)

    @property
    def is_rayleigh(self) -> bool:
        return self.m == 1

    @property
    def label(self) -> str:
        return "rayleigh" if self.is_rayleigh else f"nakagami-{self.m}"

    @property
    def second_moment(self) -> float:
        """E(h^2) = 1 + 1/m."""
        return 1.0 + 1.0 / self.m


@dataclass(frozen=True, eq=False)
class DistanceSet:
    """Ascending distances from the origin to the points of one realization.

    Points beyond ``truncation_radius`` are omitted. For the Ginibre process
    ``point_cap`` records how many radial shapes were drawn.
    """

    values: np.ndarray
    truncation_radius: float = math.inf
    point_cap: int | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.size and (values[0] <= 0 or np.any(np.diff(values) < 0)):
            raise DomainError("Distances must be strictly positive and sorted ascending")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def is_empty(self) -> bool:
        return self.values.size == 0


@dataclass(frozen=True, eq=False)
class RelativeDistanceProcess:
    """Ratios of the nearest distance to every other distance, all in (0, 1].

    ``floor`` is the smallest ratio that could have been observed given the
    truncation of the parent distances (values below it are missing).
    ``scale`` is lambda*pi*R^2 of the parent realization when known.
    """

    values: np.ndarray
    floor: float = 0.0
    scale: float = math.nan

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.size and (values.min() <= 0 or values.max() > 1):
            raise DomainError("Relative distances must lie in (0, 1]")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass
class GainReport:
    """Asymptotic SIR gains over the PPP, linear and in dB."""

    g0: float
    g_inf: float
    diversity_m: int = 1
    g0_db: float = field(init=False)
    g_inf_db: float = field(init=False)

    def __post_init__(self):
        if not (self.g0 > 0 and self.g_inf > 0):
            raise DomainError(f"Gains must be positive, got g0={self.g0}, g_inf={self.g_inf}")
        self.g0_db = 10.0 * math.log10(self.g0)
        self.g_inf_db = 10.0 * math.log10(self.g_inf)


class EfirMethod(str, Enum):
    """How an EFIR value was obtained."""

    CLOSED_FORM = "closed_form"
    BOUNDS = "bounds"
    PRODUCT_QUADRATURE = "product_quadrature"
    MONTE_CARLO = "monte_carlo"


@dataclass
class EfirResult:
    """Expected fading-to-interference ratio."""

    value: float
    method: EfirMethod
    lower: float | None = None
    upper: float | None = None
    std_err: float | None = None

    def __post_init__(self):
        if not self.value > 0:
            raise DomainError(f"EFIR must be positive, got {self.value}")
        if self.lower is not None and self.upper is not None:
            slack = 1e-12 * self.upper
            if not (self.lower - slack <= self.value <= self.upper + slack):
                raise DomainError(
                    f"EFIR {self.value} outside its bounds [{self.lower}, {self.upper}]"
                )

    def power(self, delta: float) -> float:
        """EFIR^delta, the constant of the theta^-delta tail."""
        return self.value**delta


@dataclass
class SimConfig:
    """Reproducible Monte Carlo experiment description."""

    model: NetworkModel = field(default_factory=NetworkModel)
    fading: FadingModel | None = field(default_factory=FadingModel)
    alpha: float = 4.0
    samples: int = 1_000_000
    seed: int = 0
    theta_grid: np.ndarray = field(default_factory=lambda: np.array([1.0]))
    truncation_eps: float = 1e-3
    workers: int = 1
    chunk_size: int = 4096
    truncation_radius: float | None = None  # None: derived from truncation_eps
    palm_first_shape: int = 2  # first Gamma shape of the Ginibre reduced Palm radii

    def __post_init__(self):
        self.theta_grid = np.atleast_1d(np.asarray(self.theta_grid, dtype=float))
        if not self.alpha > 2:
            raise DomainError(f"Path loss exponent must exceed 2, got {self.alpha}")
        if int(self.samples) != self.samples or self.samples < 1:
            raise DomainError(f"Sample count must be a positive integer, got {self.samples}")
        self.samples = int(self.samples)
        if self.workers < 1 or self.chunk_size < 1:
            raise DomainError("Workers and chunk size must be positive")
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.theta_grid.size == 0 or np.any(self.theta_grid <= 0):
            raise DomainError("Theta grid must be non-empty and positive")
        if np.any(np.diff(self.theta_grid) <= 0):
            raise DomainError("Theta grid must be strictly ascending")
        if not 0 < self.truncation_eps < 1:
            raise DomainError(f"Truncation epsilon must lie in (0, 1), got {self.truncation_eps}")
        if self.palm_first_shape not in (1, 2):
            raise DomainError("Ginibre Palm radii start at Gamma shape 1 or 2")

    @property
    def delta(self) -> float:
        return 2.0 / self.alpha

    def to_dict(self) -> dict[str, Any]:
        """Plain representation used in result metadata."""
        return {
            "model": self.model.kind.value,
            "intensity": self.model.intensity,
            "fading": None if self.fading is None else self.fading.m,
            "alpha": self.alpha,
            "samples": self.samples,
            "seed": self.seed,
            "truncation_eps": self.truncation_eps,
            "truncation_radius": self.truncation_radius,
            "workers": self.workers,
            "chunk_size": self.chunk_size,
            "palm_first_shape": self.palm_first_shape,
        }


@dataclass
class CcdfEstimate:
    """Estimated success probabilities P(SIR > theta) on a shared-sample grid."""

    theta_grid: np.ndarray
    p_hat: np.ndarray
    half_width: np.ndarray
    samples_used: int
    exceedances: np.ndarray

    @property
    def theta_db(self) -> np.ndarray:
        return 10.0 * np.log10(self.theta_grid)

    @property
    def reliable(self) -> np.ndarray:
        """Mask of grid points backed by at least MIN_EXCEEDANCES exceedances."""
        return self.exceedances >= MIN_EXCEEDANCES

    def clipped_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Confidence band clipped to [0, 1] for reporting."""
        lower = np.clip(self.p_hat - self.half_width, 0.0, 1.0)
        upper = np.clip(self.p_hat + self.half_width, 0.0, 1.0)
        return lower, upper


@dataclass
class MomentEstimate:
    """Monte Carlo estimate of E(ISR^n) and the generalized MISR."""

    n: int
    mean_power_n: float
    std_err: float
    misr_n: float = field(init=False)

    def __post_init__(self):
        self.misr_n = self.mean_power_n ** (1.0 / self.n)


class Command(str, Enum):
    """CLI commands."""

    PS_PPP = "ps-ppp"
    MISR = "misr"
    GEN_MISR = "gen-misr"
    EFIR = "efir"
    SIMULATE = "simulate"
    GAINS = "gains"
    ASAPPP = "asappp"
    FIGURES = "figures"


@dataclass
class ExperimentSpec:
    """A command plus its flat parameter map."""

    command: Command
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.command = Command(self.command)


@dataclass
class ResultTable:
    """Rectangular numeric table with its metadata block."""

    columns: list[str]
    rows: list[list[float]]
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise DomainError(f"Row {i} has {len(row)} values, expected {width}")

    def column(self, name: str) -> np.ndarray:
        """Get one column as an array."""
        j = self.columns.index(name)
        return np.array([row[j] for row in self.rows], dtype=float)


FIGURE_PANELS = (1, 4, 5, 6, 7, 8)


@dataclass
class FigureSettings:
    """Sample budgets and sweeps shared by all figure data sets."""

    samples: int = 1_000_000
    efir_samples: int = 100_000
    seed: int = 0
    workers: int = 1
    alphas: tuple[float, ...] = (3.0, 3.5, 4.0, 4.5, 5.0)
    panels: tuple[int, ...] = FIGURE_PANELS

    def __post_init__(self):
        self.alphas = tuple(float(a) for a in self.alphas)
        self.panels = tuple(int(p) for p in self.panels)
        if self.samples < 1 or self.efir_samples < 1:
            raise DomainError("Figure sample budgets must be positive")
        if any(not a > 2 for a in self.alphas):
            raise DomainError(f"Path loss exponents must exceed 2, got {self.alphas}")
        unknown = sorted(set(self.panels) - set(FIGURE_PANELS))
        if unknown:
            raise DomainError(f"Unknown figure panels {unknown}; choose from {FIGURE_PANELS}")
