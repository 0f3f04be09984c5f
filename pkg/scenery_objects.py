import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from errors import ParameterError


class Family(str, Enum):
    BROWNIAN = "brownian"
    STABLE_LEVY = "stable_levy"
    FRACTIONAL_BM = "fbm"
    ITERATED_BM = "ibm"


@dataclass(frozen=True)
class ProcessSpec:
    """Driving process Y and its parameters.

    delta/zeta are only read for stable Levy processes, hurst only for fBm.
    """

    family: Family
    delta: Optional[float] = None
    zeta: float = 0.0
    hurst: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.family == Family.STABLE_LEVY:
            if self.delta is None or not (1.0 < self.delta <= 2.0):
                raise ParameterError(f"stability index delta must lie in (1, 2], got {self.delta}")
            if not (-1.0 <= self.zeta <= 1.0):
                raise ParameterError(f"skewness zeta must lie in [-1, 1], got {self.zeta}")
        if self.family == Family.FRACTIONAL_BM:
            if self.hurst is None or not (0.0 < self.hurst < 1.0):
                raise ParameterError(f"Hurst index must lie in (0, 1), got {self.hurst}")

    @classmethod
    def brownian(cls):
        return cls(Family.BROWNIAN)

    @classmethod
    def stable(cls, delta, zeta=0.0):
        return cls(Family.STABLE_LEVY, delta=delta, zeta=zeta)

    @classmethod
    def fbm(cls, hurst):
        return cls(Family.FRACTIONAL_BM, hurst=hurst)

    @classmethod
    def ibm(cls):
        return cls(Family.ITERATED_BM)

    def gamma(self):
        """Self-similarity index of Y."""
        if self.family == Family.STABLE_LEVY:
            return 1.0 / self.delta
        if self.family == Family.FRACTIONAL_BM:
            return self.hurst
        if self.family == Family.ITERATED_BM:
            return 0.25
        return 0.5

    def alpha(self):
        """Upper-tail exponent of V_1."""
        if self.family == Family.STABLE_LEVY:
            return self.delta
        if self.family == Family.FRACTIONAL_BM:
            return 1.0 / self.hurst
        if self.family == Family.ITERATED_BM:
            return 4.0 / 3.0
        # Brownian motion is the stable case delta = 2
        return 2.0

    def beta(self):
        """Lower-tail exponent of V_1."""
        if self.family == Family.STABLE_LEVY:
            return self.delta / (2.0 * self.delta - 1.0)
        if self.family == Family.FRACTIONAL_BM:
            return 2.0
        if self.family == Family.ITERATED_BM:
            return 4.0 / 3.0
        return 2.0 / 3.0

    def h(self):
        """Self-similarity index of Delta."""
        return 1.0 - self.gamma() / 2.0

    @property
    def experimental(self):
        return self.family == Family.STABLE_LEVY and self.zeta != 0.0

    def label(self):
        if self.family == Family.STABLE_LEVY:
            return f"stable(delta={self.delta:g}, zeta={self.zeta:g})"
        if self.family == Family.FRACTIONAL_BM:
            return f"fbm(H={self.hurst:g})"
        return self.family.value

    def to_dict(self):
        return {"family": self.family.value, "delta": self.delta, "zeta": self.zeta, "hurst": self.hurst}


@dataclass(eq=False)
class PathSample:
    spec: ProcessSpec
    dt: float
    values: np.ndarray = field(repr=False)
    seed: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.dt <= 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if self.values.ndim != 1 or self.values.size < 2:
            raise ParameterError("a path needs at least two grid values")
        if self.values[0] != 0.0:
            raise ParameterError("paths start at the origin")

    @property
    def n(self):
        return self.values.size - 1

    @property
    def horizon(self):
        return self.n * self.dt

    def times(self):
        return np.arange(self.n + 1) * self.dt

    def step_of(self, t):
        """Index k with k*dt == t, or ParameterError when t is off the grid."""
        k = int(round(t / self.dt))
        if k < 0 or k > self.n or abs(k * self.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise ParameterError(f"time {t} is not on the path grid (dt={self.dt}, n={self.n})")
        return k

    def max_abs(self, t=None):
        k = self.n if t is None else self.step_of(t)
        return float(np.max(np.abs(self.values[: k + 1])))

    def __repr__(self):
        return f"PathSample({self.spec.label()}, n={self.n}, dt={self.dt:g}, seed={self.seed})"


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    dx: float
    bins: int

    def __post_init__(self):
        if self.dx <= 0:
            raise ParameterError(f"dx must be positive, got {self.dx}")
        if not self.x_min < self.x_max:
            raise ParameterError("grid needs x_min < x_max")
        if self.bins != math.ceil((self.x_max - self.x_min) / self.dx - 1e-9):
            raise ParameterError("bins does not match the grid bounds")

    @classmethod
    def around(cls, radius, dx):
        """Grid symmetric about 0 covering [-radius - dx, radius + dx], centre bin on 0."""
        k = int(math.ceil(radius / dx)) + 1
        bins = 2 * k + 1
        x_min = -(k + 0.5) * dx
        return cls(x_min, x_min + bins * dx, dx, bins)

    def edges(self):
        return self.x_min + self.dx * np.arange(self.bins + 1)

    def centers(self):
        return self.x_min + self.dx * (np.arange(self.bins) + 0.5)

    def index_of(self, x):
        idx = np.floor((np.asarray(x, dtype=float) - self.x_min) / self.dx).astype(np.int64)
        return np.clip(idx, 0, self.bins - 1)


@dataclass(eq=False)
class LocalTimeField:
    grid: GridSpec
    checkpoints: np.ndarray
    L: np.ndarray = field(repr=False)
    V: np.ndarray

    def index_of(self, t):
        hits = np.flatnonzero(np.isclose(self.checkpoints, t, rtol=1e-9, atol=1e-12))
        if hits.size == 0:
            raise ParameterError(f"time {t} is not a checkpoint of this field")
        return int(hits[0])

    def mass(self):
        return self.L.sum(axis=1) * self.grid.dx


@dataclass(eq=False)
class SceneryField:
    grid: GridSpec
    dW: np.ndarray = field(repr=False)
    seed: int


@dataclass(eq=False)
class DeltaPath:
    checkpoints: np.ndarray
    delta: np.ndarray
    running_sup: np.ndarray
    cond_var: np.ndarray


@dataclass(eq=False)
class PersistenceEstimate:
    spec: ProcessSpec
    barrier: float
    T_grid: np.ndarray
    n_replicas: int
    survivors: np.ndarray
    F_hat: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    fitted_slope: Optional[float] = None
    slope_se: Optional[float] = None
    flags: list = field(default_factory=list)
    shards: int = 1

    @property
    def expected_exponent(self):
        return -self.spec.gamma() / 2.0


@dataclass(eq=False)
class MolchanEstimate:
    spec: ProcessSpec
    T_grid: np.ndarray
    I_hat: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    normalized: np.ndarray
    norm_ci_lo: np.ndarray
    norm_ci_hi: np.ndarray
    excluded: np.ndarray
    max_delta_01: float
    max_delta_01_se: float
    shards: int = 1
