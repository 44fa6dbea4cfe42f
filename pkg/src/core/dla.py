"""
DLA-1D True Model

Event-driven simulation of white walkers over the Poisson field. The
front R advances by one whenever a white particle jumps from R+1 onto R,
and every white particle sitting at the new R is removed at that moment.

Two modes share one engine:
- exact: every white particle is awake and moves.
- fast: particles far ahead of the front are put to sleep and later
  fast-forwarded with an exactly sampled net displacement; each sleep
  episode spends at most eps_sleep of probability budget.
"""

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from scipy import optimize

from .errors import ConfigError, InvariantViolation, Starvation, WindowExhausted
from .field import PoissonField, field_from_counts, init_field, required_window, resolve_window_mode
from .rng import RandomStream, displacement_sample
from ..logging_config import get_logger

logger = get_logger("dla")

MODES = ("exact", "fast")
SWEEP_INTERVAL = 4096


@dataclass(frozen=True)
class RunConfig:
    """Parameters of a single true-model run"""
    mu: float
    T: float
    D: float = 1.0
    p_plus: float = 0.5
    grid_t0: float = 1.0
    grid_ratio: float = 10 ** 0.1
    mode: str = "exact"
    zone_width: int = 64
    gap_min: int = 32
    eps_sleep: float = 1e-6
    eps_trunc: float = 1e-4
    window_mode: str = "auto"
    window_override: Optional[int] = None
    debug_invariants: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not (math.isfinite(self.mu) and self.mu >= 0):
            raise ConfigError(f"must be finite and >= 0, got {self.mu}", key="mu", module="dla")
        if not (math.isfinite(self.T) and self.T > 0):
            raise ConfigError(f"must be positive, got {self.T}", key="t_max", module="dla")
        if not (math.isfinite(self.D) and self.D > 0):
            raise ConfigError(f"must be positive, got {self.D}", key="D", module="dla")
        if not 0.0 < self.p_plus < 1.0:
            raise ConfigError(f"must lie in (0, 1), got {self.p_plus}", key="p_plus", module="dla")
        if self.mode not in MODES:
            raise ConfigError(f"must be one of {MODES}, got '{self.mode}'", key="mode", module="dla")
        if self.mode == "fast" and not 0.0 < self.eps_sleep < 1.0:
            raise ConfigError("fast mode needs 0 < eps_sleep < 1", key="eps_sleep", module="dla")
        if not self.grid_t0 > 0:
            raise ConfigError(f"must be positive, got {self.grid_t0}", key="grid_t0", module="dla")
        if not self.grid_ratio > 1:
            raise ConfigError(f"must exceed 1, got {self.grid_ratio}", key="grid_ratio", module="dla")
        if self.zone_width < 1 or self.gap_min < 1:
            raise ConfigError("zone_width and gap_min must be >= 1", key="zone_width", module="dla")
        if not 0.0 < self.eps_trunc < 1.0:
            raise ConfigError(f"must lie in (0, 1), got {self.eps_trunc}", key="eps_trunc", module="dla")
        if self.window_override is not None and self.window_override < 1:
            raise ConfigError("must be a positive site index", key="window_override", module="dla")

    @property
    def resolved_window_mode(self) -> str:
        return resolve_window_mode(self.mu, self.p_plus, self.window_mode)

    def window(self) -> int:
        """Window edge W used by this run"""
        if self.window_override is not None:
            return int(self.window_override)
        return required_window(self.mu, self.D, self.T, self.p_plus, self.eps_trunc, self.window_mode)


def checkpoint_grid(t0: float, ratio: float, T: float) -> List[float]:
    """Geometric grid t0 * ratio^j up to T, closed with T itself"""
    times: List[float] = []
    j = 0
    while True:
        t = t0 * ratio ** j
        if t > T * (1.0 + 1e-12):
            break
        times.append(T if math.isclose(t, T, rel_tol=1e-9) else t)
        j += 1
    if not times or times[-1] < T:
        times.append(T)
    return times


@dataclass
class AggregateState:
    """Front position, clock and advance times; R(t) = k on [tau_k, tau_k+1)"""
    R: int = 0
    t: float = 0.0
    tau_log: List[float] = field(default_factory=list)
    n_events: int = 0

    @property
    def k(self) -> int:
        return self.R


@dataclass
class DormantEntry:
    position: int
    slept_at: float
    wake_at: float
    guard: int          # forced wake once R >= guard
    entry_id: int


class WhiteSet:
    """Awake walkers plus a dormant pool ordered by wake time"""

    def __init__(self, awake: Optional[List[int]] = None):
        self.awake: List[int] = list(awake or [])
        self.dormant: Dict[int, DormantEntry] = {}
        self._by_wake: List[Tuple[float, int]] = []
        self._by_guard: List[Tuple[int, int]] = []
        self._ids = itertools.count()

    def __len__(self) -> int:
        return len(self.awake) + len(self.dormant)

    def sleep(self, position: int, now: float, wake_at: float, guard: int) -> DormantEntry:
        entry = DormantEntry(position, now, wake_at, guard, next(self._ids))
        self.dormant[entry.entry_id] = entry
        heapq.heappush(self._by_wake, (wake_at, entry.entry_id))
        heapq.heappush(self._by_guard, (guard, entry.entry_id))
        return entry

    def next_wake(self) -> Optional[DormantEntry]:
        while self._by_wake:
            _, entry_id = self._by_wake[0]
            entry = self.dormant.get(entry_id)
            if entry is not None:
                return entry
            heapq.heappop(self._by_wake)
        return None

    def take(self, entry: DormantEntry) -> DormantEntry:
        return self.dormant.pop(entry.entry_id)

    def guarded_upto(self, R: int) -> List[DormantEntry]:
        """Remove and return the dormant entries whose guard the front has reached"""
        due: List[DormantEntry] = []
        while self._by_guard and self._by_guard[0][0] <= R:
            _, entry_id = heapq.heappop(self._by_guard)
            entry = self.dormant.pop(entry_id, None)
            if entry is not None:
                due.append(entry)
        due.sort(key=lambda e: e.entry_id)
        return due

    def all_positions(self) -> List[int]:
        return self.awake + [entry.position for entry in self.dormant.values()]


@dataclass(frozen=True)
class EventOutcome:
    """What a single step did"""
    kind: str                       # moved | front_advanced | woke
    t: float
    R: int
    removed_count: int = 0

    MOVED = "moved"
    FRONT_ADVANCED = "front_advanced"
    WOKE = "woke"


@dataclass
class Trajectory:
    """Checkpointed front samples of one run plus its end-of-run summary"""
    times: List[float]
    values: List[int]
    tau_log: List[float] = field(default_factory=list)
    t_end: float = 0.0
    R_end: int = 0
    n_events: int = 0
    starved: bool = False
    sleep_episodes: int = 0
    sleep_budget: float = 0.0
    sleep_violations: int = 0
    run_id: int = 0
    seed: int = 0
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def checkpoints(self) -> List[Tuple[float, int]]:
        return list(zip(self.times, self.values))


def inter_advance_times(tau_log: Sequence[float]) -> List[float]:
    """delta_k = tau_{k+1} - tau_k"""
    return [b - a for a, b in zip(tau_log, tau_log[1:])]


def sleep_policy(
    position: int,
    R: int,
    D: float,
    eps_sleep: float,
    zone_width: int = 64,
    gap_min: int = 32,
    p_plus: float = 0.5,
    now: float = 0.0,
) -> Optional[float]:
    """
    Wake time for a walker that may sleep, or None to keep it awake.

    With gap = position - (R + zone_width), the sleep length Delta is the
    largest value with 2 exp(-g^2 / (8 (D Delta + g))) <= eps_sleep, where
    g is the gap reduced by twice the drift distance over Delta.
    """
    gap = position - (R + zone_width)
    if gap < gap_min:
        return None
    log_term = math.log(2.0 / eps_sleep)
    drift = D * abs(2.0 * p_plus - 1.0)
    if drift == 0.0:
        delta = (gap * gap / (8.0 * log_term) - gap) / D
    else:
        def slack(d: float) -> float:
            effective = gap - 2.0 * drift * d
            return effective * effective / (8.0 * (D * d + effective)) - log_term

        if slack(0.0) <= 0.0:
            return None
        upper = gap / (2.0 * drift) * (1.0 - 1e-12)
        delta = optimize.brentq(slack, 0.0, upper, xtol=1e-9)
    if delta <= 0.0:
        return None
    return now + delta


def init_run(
    config: RunConfig,
    stream: RandomStream,
    positions: Optional[Sequence[int]] = None,
) -> Tuple[PoissonField, WhiteSet, AggregateState]:
    """
    Draw the field and place every particle, all white, with R = 0 at t = 0.

    `positions` replaces the random field with explicit starting sites.
    """
    W = config.window()
    if config.window_override is not None and positions is None:
        needed = required_window(config.mu, config.D, config.T, config.p_plus,
                                 config.eps_trunc, config.window_mode)
        if W < needed:
            raise ConfigError(
                f"window {W} is too small for horizon {config.T}; need at least {needed}",
                key="window_override", module="dla"
            )

    if positions is None:
        pfield = init_field(config.mu, W, stream, window_mode=config.resolved_window_mode)
        starting = pfield.positions().tolist()
    else:
        starting = sorted(int(p) for p in positions)
        if starting and starting[0] < 1:
            raise ConfigError("explicit positions must be >= 1", key="x_init", module="dla")
        W = max(W, max(starting, default=0))
        counts = [0] * W
        for p in starting:
            counts[p - 1] += 1
        pfield = field_from_counts(counts, mu=config.mu)

    whites = WhiteSet()
    state = AggregateState()
    for p in starting:
        wake_at = None
        if config.mode == "fast":
            wake_at = sleep_policy(p, 0, config.D, config.eps_sleep, config.zone_width,
                                   config.gap_min, config.p_plus, 0.0)
        if wake_at is None:
            whites.awake.append(p)
        else:
            gap = p - config.zone_width
            whites.sleep(p, 0.0, wake_at, p - gap // 2)

    logger.debug(
        f"[INIT] Run W={pfield.W} particles={pfield.total} awake={len(whites.awake)} "
        f"dormant={len(whites.dormant)} mode={config.mode}"
    )
    return pfield, whites, state


class DLASimulation:
    """One run of the true model"""

    def __init__(
        self,
        config: RunConfig,
        stream: RandomStream,
        positions: Optional[Sequence[int]] = None,
    ):
        self.config = config
        self.stream = stream
        self.field, self.whites, self.state = init_run(config, stream, positions)
        self.W = self.field.W
        self.sleep_episodes = len(self.whites.dormant)
        self.sleep_violations = 0
        self._pending: Optional[Tuple[str, float]] = None
        self._since_sweep = 0

    @property
    def sleep_budget(self) -> float:
        return self.sleep_episodes * self.config.eps_sleep if self.config.mode == "fast" else 0.0

    def peek(self) -> Tuple[str, float]:
        """Kind and time of the next event without applying it"""
        if self._pending is not None:
            return self._pending
        awake = len(self.whites.awake)
        jump_at = math.inf
        if awake:
            jump_at = self.state.t + self.stream.standard_exponential() / (self.config.D * awake)
        entry = self.whites.next_wake()
        if entry is not None and entry.wake_at <= jump_at:
            self._pending = (EventOutcome.WOKE, entry.wake_at)
        elif awake:
            self._pending = (EventOutcome.MOVED, jump_at)
        else:
            self._pending = ("starved", math.inf)
        return self._pending

    def step(self) -> Union[EventOutcome, Starvation]:
        """Apply the next event"""
        kind, when = self.peek()
        self._pending = None
        if kind == "starved":
            return Starvation(t=self.state.t, R=self.state.R)
        self.state.t = when
        self.state.n_events += 1
        if kind == EventOutcome.WOKE:
            entry = self.whites.take(self.whites.next_wake())
            self._wake(entry)
            outcome = EventOutcome(EventOutcome.WOKE, when, self.state.R)
        else:
            outcome = self._jump()
        if self.config.mode == "fast":
            self._since_sweep += 1
            if self._since_sweep >= SWEEP_INTERVAL:
                self._sweep()
        if self.config.debug_invariants:
            self.check_invariants()
        return outcome

    def _jump(self) -> EventOutcome:
        awake = self.whites.awake
        i = self.stream.index(len(awake))
        position = awake[i]
        target = position + 1 if self.stream.uniform() < self.config.p_plus else position - 1
        R = self.state.R
        if target > R:
            awake[i] = target
            return EventOutcome(EventOutcome.MOVED, self.state.t, R)

        # jump from R+1 onto R: the front advances
        awake[i] = awake[-1]
        awake.pop()
        R += 1
        self.state.R = R
        self.state.tau_log.append(self.state.t)
        before = len(awake)
        self.whites.awake = [p for p in awake if p != R]
        removed = 1 + before - len(self.whites.awake)
        for entry in self.whites.guarded_upto(R):
            if self._wake(entry, at_advance=True):
                removed += 1
        if R >= self.W / 2:
            raise WindowExhausted(
                f"front reached {R} >= W/2 with W={self.W} at t={self.state.t:.6g}; enlarge the window",
                module="dla", R=R, W=self.W, t=self.state.t
            )
        return EventOutcome(EventOutcome.FRONT_ADVANCED, self.state.t, R, removed_count=removed)

    def _wake(self, entry: DormantEntry, at_advance: bool = False) -> bool:
        """Fast-forward a dormant walker; True if an advance just brought the front onto it"""
        cfg = self.config
        now = self.state.t
        position = entry.position + displacement_sample(self.stream, cfg.D, now - entry.slept_at, cfg.p_plus)
        R = self.state.R
        if position == R and at_advance:
            return True
        if position <= R:
            # a scheduled wake at or behind the front means the walk crossed it while asleep
            self.sleep_violations += 1
            logger.debug(f"[SLEEP] Walker woke at {position} with the front at R={R}")
            return False
        self._place(position)
        return False

    def _place(self, position: int) -> None:
        cfg = self.config
        now = self.state.t
        wake_at = None
        if cfg.mode == "fast":
            wake_at = sleep_policy(position, self.state.R, cfg.D, cfg.eps_sleep, cfg.zone_width,
                                   cfg.gap_min, cfg.p_plus, now)
        if wake_at is None:
            self.whites.awake.append(position)
        else:
            gap = position - (self.state.R + cfg.zone_width)
            self.whites.sleep(position, now, wake_at, position - gap // 2)
            self.sleep_episodes += 1

    def _sweep(self) -> None:
        """Put awake walkers that wandered far ahead of the front to sleep"""
        self._since_sweep = 0
        edge = self.state.R + self.config.zone_width + self.config.gap_min
        keep: List[int] = []
        far: List[int] = []
        for p in self.whites.awake:
            (far if p >= edge else keep).append(p)
        if not far:
            return
        self.whites.awake = keep
        for p in far:
            self._place(p)

    def check_invariants(self) -> None:
        """No white particle, awake or dormant, at a site <= R"""
        R = self.state.R
        low = min(self.whites.all_positions(), default=R + 1)
        if low <= R:
            raise InvariantViolation(
                f"white particle at {low} with front at {R} (t={self.state.t:.9g})",
                module="dla", R=R, position=low
            )

    def run(self, run_id: int = 0) -> Trajectory:
        """Simulate up to the horizon, sampling R on the checkpoint grid"""
        cfg = self.config
        grid = checkpoint_grid(cfg.grid_t0, cfg.grid_ratio, cfg.T)
        values: List[int] = []
        starved = False
        j = 0
        while j < len(grid):
            kind, when = self.peek()
            if kind == "starved":
                starved = True
            while j < len(grid) and grid[j] < when:
                values.append(self.state.R)
                j += 1
            if j >= len(grid):
                break
            self.step()
        if starved:
            logger.debug(f"[RUN] Run {run_id} starved at t={self.state.t:.6g} R={self.state.R}")
        return Trajectory(
            times=grid,
            values=values,
            tau_log=list(self.state.tau_log),
            t_end=self.state.t if starved else cfg.T,
            R_end=self.state.R,
            n_events=self.state.n_events,
            starved=starved,
            sleep_episodes=self.sleep_episodes if cfg.mode == "fast" else 0,
            sleep_budget=self.sleep_budget,
            sleep_violations=self.sleep_violations,
            run_id=run_id,
            seed=self.stream.master_seed,
            extra={"W": self.W, "particles": self.field.total},
        )


def step(simulation: DLASimulation) -> Union[EventOutcome, Starvation]:
    return simulation.step()


def run(config: RunConfig, stream: RandomStream, run_id: int = 0,
        positions: Optional[Sequence[int]] = None) -> Trajectory:
    """One checkpointed trajectory of the true model"""
    simulation = DLASimulation(config, stream, positions)
    trajectory = simulation.run(run_id)
    logger.debug(
        f"[RUN] Run {run_id} finished R={trajectory.R_end} events={trajectory.n_events} "
        f"sleep_budget={trajectory.sleep_budget:.3g}"
    )
    return trajectory
