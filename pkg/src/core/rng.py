"""
DLA-1D Random Streams

Seeded, splittable randomness and the exact samplers the dynamics use.
One stream per run: streams are derived from (master_seed, run_id) with
numpy's SeedSequence feeding a counter-based Philox generator, so any
run can be reproduced without replaying the others.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Tuple

import numpy as np

from .errors import ConfigError, ParameterError
from ..logging_config import get_logger

logger = get_logger("rng")

SEED_MASK = (1 << 64) - 1
BLOCK_SIZE = 4096

G_FAMILIES = ("constant", "geometric", "zeta-truncated")
ZETA_MAX_SUPPORT = 10_000_000


class RandomStream:
    """Single-owner random stream with buffered uniforms and exponentials"""

    def __init__(self, master_seed: int, stream_id: int = 0):
        self.master_seed = int(master_seed) & SEED_MASK
        self.stream_id = int(stream_id) & SEED_MASK
        seed_seq = np.random.SeedSequence([self.master_seed, self.stream_id])
        self.generator = np.random.Generator(np.random.Philox(seed_seq))

        # Block buffers keep the per-event cost of a draw to a list index
        self._uniforms: list = []
        self._uniform_pos = 0
        self._exponentials: list = []
        self._exponential_pos = 0

    def uniform(self) -> float:
        """Uniform draw on [0, 1)"""
        if self._uniform_pos >= len(self._uniforms):
            self._uniforms = self.generator.random(BLOCK_SIZE).tolist()
            self._uniform_pos = 0
        value = self._uniforms[self._uniform_pos]
        self._uniform_pos += 1
        return value

    def standard_exponential(self) -> float:
        """Exponential(1) draw, strictly positive"""
        while True:
            if self._exponential_pos >= len(self._exponentials):
                self._exponentials = self.generator.standard_exponential(BLOCK_SIZE).tolist()
                self._exponential_pos = 0
            value = self._exponentials[self._exponential_pos]
            self._exponential_pos += 1
            if value > 0.0:
                return value

    def index(self, n: int) -> int:
        """Uniform index in range(n)"""
        i = int(self.uniform() * n)
        return i if i < n else n - 1

    def to_state(self) -> Dict[str, Any]:
        """Serializable snapshot; restoring it continues the sequence exactly"""
        return {
            "master_seed": self.master_seed,
            "stream_id": self.stream_id,
            "bit_generator": self.generator.bit_generator.state,
            "uniforms": list(self._uniforms),
            "uniform_pos": self._uniform_pos,
            "exponentials": list(self._exponentials),
            "exponential_pos": self._exponential_pos,
        }

    @classmethod
    def from_state(cls, state: Dict[str, Any]) -> "RandomStream":
        stream = cls(state["master_seed"], state["stream_id"])
        stream.generator.bit_generator.state = state["bit_generator"]
        stream._uniforms = list(state["uniforms"])
        stream._uniform_pos = int(state["uniform_pos"])
        stream._exponentials = list(state["exponentials"])
        stream._exponential_pos = int(state["exponential_pos"])
        return stream

    def __repr__(self) -> str:
        return f"RandomStream(master_seed={self.master_seed}, stream_id={self.stream_id})"


def substream(master_seed: int, run_id: int) -> RandomStream:
    """Independent stream for one run of an ensemble"""
    return RandomStream(master_seed, run_id)


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value}", module="rng")
    return value


def exp_sample(stream: RandomStream, rate: float) -> float:
    """Exponential waiting time with the given rate (mean 1/rate)"""
    rate = _require_finite("rate", rate)
    if rate <= 0.0:
        raise ParameterError(f"rate must be positive, got {rate}", module="rng")
    return stream.standard_exponential() / rate


def poisson_sample(stream: RandomStream, mean: float) -> int:
    """Poisson count; numpy inverts below mean 10 and uses PTRS above"""
    mean = _require_finite("mean", mean)
    if mean < 0.0:
        raise ParameterError(f"mean must be non-negative, got {mean}", module="rng")
    if mean == 0.0:
        return 0
    return int(stream.generator.poisson(mean))


def displacement_sample(stream: RandomStream, D: float, delta: float, p_plus: float = 0.5) -> int:
    """
    Net displacement of a rate-D walk over an interval of length delta.

    The jump count is Poisson(D*delta) and each jump is +1 with
    probability p_plus, so the number of up-jumps is binomial.
    """
    D = _require_finite("D", D)
    delta = _require_finite("delta", delta)
    if D <= 0.0:
        raise ParameterError(f"D must be positive, got {D}", module="rng")
    if delta < 0.0:
        raise ParameterError(f"delta must be non-negative, got {delta}", module="rng")
    if not 0.0 <= p_plus <= 1.0:
        raise ParameterError(f"p_plus must lie in [0, 1], got {p_plus}", module="rng")
    if delta == 0.0:
        return 0
    jumps = int(stream.generator.poisson(D * delta))
    if jumps == 0:
        return 0
    ups = int(stream.generator.binomial(jumps, p_plus))
    return 2 * ups - jumps


@lru_cache(maxsize=64)
def _stirling2(n: int, k: int) -> int:
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return k * _stirling2(n - 1, k) + _stirling2(n - 1, k - 1)


@lru_cache(maxsize=32)
def _zeta_cdf(s: float, n_max: int) -> np.ndarray:
    support = np.arange(1, n_max + 1, dtype=float)
    weights = support ** (-s)
    cdf = np.cumsum(weights)
    return cdf / cdf[-1]


@dataclass(frozen=True)
class GSpec:
    """
    Law G of the Caricature II re-entry offsets, supported on {1, 2, ...}.

    constant       params = (value,)
    geometric      params = (p,)          P(Y = n) = p (1 - p)^(n - 1)
    zeta-truncated params = (s, n_max)    P(Y = n) proportional to n^-s, n <= n_max
    """
    family: str
    params: Tuple[float, ...]

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.family not in G_FAMILIES:
            raise ConfigError(
                f"unknown family '{self.family}', expected one of {', '.join(G_FAMILIES)}",
                key="g_family", module="rng"
            )
        if self.family == "constant":
            if len(self.params) != 1 or int(self.params[0]) != self.params[0] or self.params[0] < 1:
                raise ConfigError("constant needs one integer value >= 1", key="g_params", module="rng")
        elif self.family == "geometric":
            if len(self.params) != 1 or not 0.0 < self.params[0] <= 1.0:
                raise ConfigError("geometric needs one p in (0, 1]", key="g_params", module="rng")
        else:
            if len(self.params) != 2:
                raise ConfigError("zeta-truncated needs (s, n_max)", key="g_params", module="rng")
            s, n_max = self.params
            if s <= 0 or int(n_max) != n_max or not 1 <= n_max <= ZETA_MAX_SUPPORT:
                raise ConfigError(
                    f"zeta-truncated needs s > 0 and integer 1 <= n_max <= {ZETA_MAX_SUPPORT}",
                    key="g_params", module="rng"
                )
        # every configured family must have a finite 10th moment
        if not math.isfinite(self.moment(10)):
            raise ConfigError("G must have a finite 10th moment", key="g_params", module="rng")

    @classmethod
    def parse(cls, family: str, params: str) -> "GSpec":
        """Build from config strings such as ('geometric', '0.5')"""
        try:
            values = tuple(float(p) for p in str(params).replace(";", ",").split(",") if p.strip())
        except ValueError:
            raise ConfigError(f"cannot parse '{params}' as numbers", key="g_params", module="rng")
        return cls(family=family.strip(), params=values)

    def moment(self, k: int) -> float:
        """k-th moment sum n^k G({n})"""
        if self.family == "constant":
            return float(self.params[0]) ** k
        if self.family == "geometric":
            p = self.params[0]
            if p == 1.0:
                return 1.0
            # E[Y^k] = (p/q) Li_{-k}(q), with the polylog as a Stirling sum
            q = 1.0 - p
            ratio = q / p
            total = sum(
                math.factorial(j) * _stirling2(k + 1, j + 1) * ratio ** (j + 1)
                for j in range(k + 1)
            )
            return p / q * total
        s, n_max = self.params
        n = np.arange(1, int(n_max) + 1, dtype=float)
        weights = n ** (-s)
        return float(np.sum(n ** k * weights) / np.sum(weights))

    def mean(self) -> float:
        return self.moment(1)

    def describe(self) -> str:
        return f"{self.family}:{','.join(repr(p) for p in self.params)}"


def g_sample(stream: RandomStream, spec: GSpec) -> int:
    """Positive integer offset Y drawn from G"""
    if spec.family == "constant":
        return int(spec.params[0])
    if spec.family == "geometric":
        return int(stream.generator.geometric(spec.params[0]))
    if spec.family == "zeta-truncated":
        cdf = _zeta_cdf(float(spec.params[0]), int(spec.params[1]))
        return int(np.searchsorted(cdf, stream.uniform(), side="right")) + 1
    raise ConfigError(f"unknown family '{spec.family}'", key="g_family", module="rng")
