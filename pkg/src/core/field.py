"""
DLA-1D Initial Field

The frozen initial condition: i.i.d. Poisson(mu) occupancies N(i, 0) on
sites 1..W, and the choice of the truncation window W.
"""

import hashlib
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import ParameterError
from .rng import RandomStream
from ..logging_config import get_logger

logger = get_logger("field")

WINDOW_MODES = ("auto", "safe", "diffusive")

# Window margin defaults: margin = a_w * sqrt(2 D T ln((mu T + e) / eps)) + b_w
DEFAULT_A_W = 2.0
DEFAULT_B_W = 10.0
DEFAULT_C_W = 8.0


@dataclass(frozen=True, eq=False)
class PoissonField:
    """Initial occupancies on sites 1..W; sites beyond W hold nothing"""
    mu: float
    W: int
    counts: np.ndarray
    window_mode: str = "diffusive"

    def __post_init__(self):
        self.counts.setflags(write=False)

    def count(self, site: int) -> int:
        """Initial occupancy at a 1-indexed site"""
        if 1 <= site <= self.W:
            return int(self.counts[site - 1])
        return 0

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def positions(self) -> np.ndarray:
        """One entry per particle, ordered by site"""
        return np.repeat(np.arange(1, self.W + 1, dtype=np.int64), self.counts)

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.counts, dtype=np.int64).tobytes()).hexdigest()


def init_field(mu: float, W: int, stream: RandomStream, window_mode: str = "diffusive") -> PoissonField:
    """Draw N(i, 0) ~ Poisson(mu) for i = 1..W"""
    if not math.isfinite(mu) or mu < 0:
        raise ParameterError(f"mu must be finite and >= 0, got {mu}", module="field")
    if int(W) != W or W <= 0:
        raise ParameterError(f"W must be a positive integer, got {W}", module="field")
    W = int(W)
    if mu == 0:
        counts = np.zeros(W, dtype=np.int64)
    else:
        counts = stream.generator.poisson(mu, size=W).astype(np.int64)
    field = PoissonField(mu=float(mu), W=W, counts=counts, window_mode=window_mode)
    logger.debug(f"[INIT] Field mu={mu} W={W} particles={field.total}")
    return field


def field_from_counts(counts: Iterable[int], mu: Optional[float] = None) -> PoissonField:
    """Wrap a user-supplied occupancy sequence for sites 1..len(counts)"""
    array = np.asarray(list(counts), dtype=np.int64)
    if array.ndim != 1 or array.size == 0:
        raise ParameterError("counts must be a non-empty sequence", module="field")
    if (array < 0).any():
        raise ParameterError("counts must be non-negative", module="field")
    if mu is None:
        mu = float(array.mean())
    return PoissonField(mu=float(mu), W=int(array.size), counts=array.copy(), window_mode="supplied")


def resolve_window_mode(mu: float, p_plus: float, mode: str) -> str:
    """'auto' means diffusive for mu < 1 with no leftward drift, safe otherwise"""
    if mode not in WINDOW_MODES:
        raise ParameterError(f"window mode must be one of {WINDOW_MODES}, got '{mode}'", module="field")
    if mode != "auto":
        return mode
    if mu < 1.0 and p_plus >= 0.5:
        return "diffusive"
    return "safe"


def front_bound(mu: float, D: float, T: float, mode: str, c_w: float = DEFAULT_C_W) -> float:
    """Front position the window has to accommodate by time T"""
    if mode == "safe":
        return D * math.e * mu * T
    return c_w * math.sqrt(D * T) * math.log(math.e + T)


def required_window(
    mu: float,
    D: float,
    T: float,
    p_plus: float = 0.5,
    eps_trunc: float = 1e-4,
    mode: str = "auto",
    a_w: float = DEFAULT_A_W,
    b_w: float = DEFAULT_B_W,
    c_w: float = DEFAULT_C_W,
) -> int:
    """
    Window edge W such that particles beyond W are unlikely to matter by time T.

    W = ceil(front_bound(T) + margin); the margin is a Gaussian-tail run-in
    distance for a walk started beyond W, plus the drift run-in
    D * (p_minus - p_plus) * T when walks drift toward the front.
    """
    if not T > 0:
        raise ParameterError(f"T must be positive, got {T}", module="field")
    if not 0.0 < eps_trunc < 1.0:
        raise ParameterError(f"eps_trunc must lie in (0, 1), got {eps_trunc}", module="field")
    if not D > 0:
        raise ParameterError(f"D must be positive, got {D}", module="field")
    if mu < 0:
        raise ParameterError(f"mu must be >= 0, got {mu}", module="field")
    if not 0.0 <= p_plus <= 1.0:
        raise ParameterError(f"p_plus must lie in [0, 1], got {p_plus}", module="field")

    resolved = resolve_window_mode(mu, p_plus, mode)
    bound = front_bound(mu, D, T, resolved, c_w)
    margin = math.ceil(a_w * math.sqrt(2.0 * D * T * math.log((mu * T + math.e) / eps_trunc)) + b_w)
    drift = D * max(0.0, (1.0 - p_plus) - p_plus) * T
    return int(math.ceil(bound + margin + drift))
