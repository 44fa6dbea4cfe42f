"""
DLA-1D Caricatures

Caricature I keeps exactly J white walkers. When a front advance blackens
m of them, m red (frozen) particles nearest the front are turned white.

Caricature II tracks only the J positions relative to the front. At each
advance the walker that hit the front and every walker sitting at 1 are
re-placed at fresh offsets Y ~ G; all others shift down by one.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .dla import Trajectory, checkpoint_grid
from .errors import ConfigError, InvariantViolation, RedExhausted
from .field import PoissonField, init_field, required_window
from .lyapunov import MAX_Q, fkg_check, l_tilde, q_tilde
from .rng import GSpec, RandomStream, g_sample
from ..logging_config import get_logger

logger = get_logger("caricature")


def _validate_common(J: int, T: float, D: float, p_plus: float, x_init: Sequence[int], module: str) -> None:
    if J < 1:
        raise ConfigError(f"must be >= 1, got {J}", key="J", module=module)
    if not (math.isfinite(T) and T > 0):
        raise ConfigError(f"must be positive, got {T}", key="t_max", module=module)
    if not D > 0:
        raise ConfigError(f"must be positive, got {D}", key="D", module=module)
    if not 0.0 < p_plus < 1.0:
        raise ConfigError(f"must lie in (0, 1), got {p_plus}", key="p_plus", module=module)
    if len(x_init) != J:
        raise ConfigError(f"needs exactly J={J} positions, got {len(x_init)}", key="x_init", module=module)
    if any(int(x) < 1 for x in x_init):
        raise ConfigError("positions must be >= 1", key="x_init", module=module)


# ---------------------------------------------------------------------------
# Caricature I
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Car1Config:
    mu: float
    T: float
    J: int
    x_init: Tuple[int, ...] = ()
    D: float = 1.0
    p_plus: float = 0.5
    grid_t0: float = 1.0
    grid_ratio: float = 10 ** 0.1
    eps_trunc: float = 1e-4
    window_override: Optional[int] = None
    debug_invariants: bool = False

    def __post_init__(self):
        if not self.x_init:
            object.__setattr__(self, "x_init", tuple([1] * self.J))
        if not (math.isfinite(self.mu) and self.mu >= 0):
            raise ConfigError(f"must be finite and >= 0, got {self.mu}", key="mu", module="caricature")
        _validate_common(self.J, self.T, self.D, self.p_plus, self.x_init, "caricature")

    def window(self) -> int:
        """Red window: the front moves at most at rate JD/2, plus the run-in margin"""
        if self.window_override is not None:
            return int(self.window_override)
        margin = required_window(self.mu, self.D, self.T, self.p_plus, self.eps_trunc, mode="diffusive", c_w=0.0)
        return int(math.ceil(self.J * self.D * self.T / 2.0)) + margin + max(self.x_init)


class RedField:
    """Remaining red counts per site, consumed greedily from the front outward"""

    def __init__(self, counts: Sequence[int]):
        self.counts: List[int] = [int(c) for c in counts]
        self.W = len(self.counts)
        self._hint = 1

    @classmethod
    def from_field(cls, pfield: PoissonField) -> "RedField":
        return cls(pfield.counts.tolist())

    @classmethod
    def from_mapping(cls, reds: Mapping[int, int], W: Optional[int] = None) -> "RedField":
        W = W or max(reds, default=0)
        counts = [0] * W
        for site, n in reds.items():
            counts[site - 1] = int(n)
        return cls(counts)

    def remaining(self, site: int) -> int:
        return self.counts[site - 1] if 1 <= site <= self.W else 0

    def clear(self, site: int) -> int:
        """Blacken every red at a site; returns how many there were"""
        if not 1 <= site <= self.W:
            return 0
        n = self.counts[site - 1]
        self.counts[site - 1] = 0
        return n

    @property
    def total(self) -> int:
        return sum(self.counts)


def car1_recruit(red_field: RedField, front_k: int, m: int) -> List[int]:
    """Positions of the m reds nearest the front, scanning k+1, k+2, ..."""
    if m < 0:
        raise ConfigError(f"m must be >= 0, got {m}", key="m", module="caricature")
    recruited: List[int] = []
    if m == 0:
        return recruited
    site = max(front_k + 1, red_field._hint)
    counts = red_field.counts
    while len(recruited) < m:
        if site > red_field.W:
            red_field._hint = site
            raise RedExhausted(
                f"needed {m} reds beyond site {front_k}, found {len(recruited)} inside W={red_field.W}",
                module="caricature", front=front_k, needed=m, found=len(recruited)
            )
        available = counts[site - 1]
        if available:
            take = min(available, m - len(recruited))
            counts[site - 1] = available - take
            recruited.extend([site] * take)
            if counts[site - 1]:
                break
        site += 1
    red_field._hint = site
    return recruited


@dataclass
class Car1State:
    whites: List[int]
    red_field: RedField
    R: int = 0
    t: float = 0.0
    tau_log: List[float] = field(default_factory=list)
    n_events: int = 0
    recruited: int = 0
    blackened: int = 0
    red_blackened: int = 0

    @property
    def k(self) -> int:
        return self.R


class Car1Simulation:
    """One run of Caricature I"""

    def __init__(self, config: Car1Config, stream: RandomStream, red_field: Optional[RedField] = None):
        self.config = config
        self.stream = stream
        if red_field is None:
            pfield = init_field(config.mu, config.window(), stream)
            red_field = RedField.from_field(pfield)
        self.state = Car1State(whites=[int(x) for x in config.x_init], red_field=red_field)

    def next_time(self) -> float:
        return self.state.t + self.stream.standard_exponential() / (self.config.D * self.config.J)

    def apply_jump(self, when: float) -> bool:
        """Move one uniformly chosen white; True if the front advanced"""
        state = self.state
        state.t = when
        state.n_events += 1
        whites = state.whites
        i = self.stream.index(len(whites))
        target = whites[i] + 1 if self.stream.uniform() < self.config.p_plus else whites[i] - 1
        if target > state.R:
            whites[i] = target
            return False

        state.R += 1
        state.tau_log.append(state.t)
        R = state.R
        hit = [j for j, p in enumerate(whites) if p == R or j == i]
        state.red_blackened += state.red_field.clear(R)
        state.blackened += len(hit)
        replacements = car1_recruit(state.red_field, R, len(hit))
        for j, position in zip(hit, replacements):
            whites[j] = position
        state.recruited += len(replacements)
        if self.config.debug_invariants:
            self.check_invariants()
        return True

    def check_invariants(self) -> None:
        state = self.state
        if len(state.whites) != self.config.J:
            raise InvariantViolation(f"{len(state.whites)} whites, expected {self.config.J}", module="caricature")
        low = min(state.whites)
        if low <= state.R:
            raise InvariantViolation(f"white at {low} with front at {state.R}", module="caricature")
        if state.recruited != state.blackened:
            raise InvariantViolation(
                f"recruited {state.recruited} != blackened {state.blackened}", module="caricature"
            )

    def run(self, run_id: int = 0) -> Trajectory:
        cfg = self.config
        grid = checkpoint_grid(cfg.grid_t0, cfg.grid_ratio, cfg.T)
        values: List[int] = []
        state = self.state
        j = 0
        try:
            while j < len(grid):
                when = self.next_time()
                while j < len(grid) and grid[j] < when:
                    values.append(state.R)
                    j += 1
                if j >= len(grid):
                    break
                self.apply_jump(when)
        except RedExhausted as error:
            error.details.update(R=state.R, t=state.t, tau_log=list(state.tau_log), run_id=run_id)
            raise
        return Trajectory(
            times=grid,
            values=values,
            tau_log=list(state.tau_log),
            t_end=cfg.T,
            R_end=state.R,
            n_events=state.n_events,
            run_id=run_id,
            seed=self.stream.master_seed,
            extra={
                "recruited": state.recruited,
                "blackened": state.blackened,
                "red_blackened": state.red_blackened,
                "advance_rate": len(state.tau_log) / cfg.T,
                "rate_bound": cfg.J * cfg.D / 2.0,
                "W": state.red_field.W,
            },
        )


def car1_run(config: Car1Config, stream: RandomStream, run_id: int = 0,
             red_field: Optional[RedField] = None) -> Trajectory:
    """Checkpointed trajectory of Caricature I; RedExhausted propagates"""
    return Car1Simulation(config, stream, red_field).run(run_id)


# ---------------------------------------------------------------------------
# Caricature II
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Car2Config:
    J: int
    G: GSpec
    T: float
    x_init: Tuple[int, ...] = ()
    D: float = 1.0
    p_plus: float = 0.5
    grid_t0: float = 1.0
    grid_ratio: float = 10 ** 0.1
    q_list: Tuple[int, ...] = (2,)
    alpha: Optional[float] = None
    debug_invariants: bool = False

    def __post_init__(self):
        if not self.x_init:
            object.__setattr__(self, "x_init", tuple([1] * self.J))
        if self.alpha is None:
            object.__setattr__(self, "alpha", float(self.J))
        _validate_common(self.J, self.T, self.D, self.p_plus, self.x_init, "caricature")
        if not self.q_list or any(not 1 <= q <= MAX_Q for q in self.q_list):
            raise ConfigError(f"q values must lie in 1..{MAX_Q}", key="q_list", module="caricature")


@dataclass(frozen=True)
class EventRecord:
    """Snapshot of the k-th advance of Caricature II"""
    k: int
    tau: float
    U: Tuple[int, ...]
    r: int
    L_tilde: int
    Q_tilde: Dict[int, int] = field(default_factory=dict)
    in_lambda: bool = False
    adjustments: Tuple[int, ...] = ()
    L_post: int = 0


@dataclass
class Car2State:
    """Relative positions X_1..X_J plus the ledger X_j = S_j + sum_k A_{j,k}"""
    X: List[int]
    config: Car2Config
    k: int = 0
    t: float = 0.0
    tau_log: List[float] = field(default_factory=list)
    walk: List[int] = field(default_factory=list)
    adjustment_sums: List[int] = field(default_factory=list)
    n_events: int = 0
    last_record: Optional[EventRecord] = None

    @classmethod
    def initial(cls, config: Car2Config) -> "Car2State":
        # no adjustment at time 0 beyond the starting offsets A_{j,0}
        X = [int(x) for x in config.x_init]
        return cls(X=X, config=config, walk=[0] * config.J, adjustment_sums=list(X))

    @property
    def R(self) -> int:
        return self.k

    def ledger_holds(self) -> bool:
        return all(x == s + a for x, s, a in zip(self.X, self.walk, self.adjustment_sums))


def car2_step(state: Car2State, stream: RandomStream) -> Car2State:
    """
    One walker jump. If it reaches 0 this is the next advance: adjustments
    are applied and state.last_record holds the EventRecord, else None.
    """
    cfg = state.config
    state.t += stream.standard_exponential() / (cfg.D * cfg.J)
    state.n_events += 1
    j = stream.index(cfg.J)
    delta = 1 if stream.uniform() < cfg.p_plus else -1
    state.walk[j] += delta
    state.X[j] += delta
    if state.X[j] > 0:
        state.last_record = None
        return state

    state.k += 1
    state.tau_log.append(state.t)
    r = j
    U = list(state.X)
    U[r] = 1
    adjustments = [0] * cfg.J
    for i, u in enumerate(U):
        if i == r:
            adjustments[i] = g_sample(stream, cfg.G)
        elif u == 1:
            adjustments[i] = g_sample(stream, cfg.G) - 1
        else:
            adjustments[i] = -1
    for i in range(cfg.J):
        state.X[i] += adjustments[i]
        state.adjustment_sums[i] += adjustments[i]

    L = l_tilde(U)
    record = EventRecord(
        k=state.k,
        tau=state.t,
        U=tuple(U),
        r=r + 1,
        L_tilde=L,
        Q_tilde={q: q_tilde(U, r + 1, q) for q in cfg.q_list},
        in_lambda=L <= cfg.alpha,
        adjustments=tuple(adjustments),
        L_post=L + sum(adjustments),
    )
    state.last_record = record
    if cfg.debug_invariants:
        _check_car2(state, record)
    return state


def _check_car2(state: Car2State, record: EventRecord) -> None:
    if not state.ledger_holds():
        raise InvariantViolation(f"ledger identity broken at event {record.k}", module="caricature")
    if min(state.X) < 1 or min(record.U) != 1:
        raise InvariantViolation(f"state left the lattice at event {record.k}: U={record.U}", module="caricature")
    if record.L_tilde < state.config.J - 1:
        raise InvariantViolation(f"L~={record.L_tilde} below J-1 at event {record.k}", module="caricature")
    for q in range(1, MAX_Q + 1):
        for u in range(1, q + 1):
            if not fkg_check(record.U, record.r, q, u):
                raise InvariantViolation(
                    f"FKG inequality fails at event {record.k} for q={q}, u={u}", module="caricature"
                )


def car2_run(config: Car2Config, stream: RandomStream, run_id: int = 0) -> Tuple[Trajectory, List[EventRecord]]:
    """Full event trace of Caricature II up to the horizon"""
    state = Car2State.initial(config)
    grid = checkpoint_grid(config.grid_t0, config.grid_ratio, config.T)
    values: List[int] = []
    records: List[EventRecord] = []
    j = 0
    while j < len(grid):
        k_before = state.k
        car2_step(state, stream)
        while j < len(grid) and grid[j] < state.t:
            values.append(k_before)
            j += 1
        if j >= len(grid):
            break
        if state.last_record is not None:
            records.append(state.last_record)
    logger.debug(f"[RUN] Car2 run {run_id} events={len(records)} R={state.k}")
    return Trajectory(
        times=grid,
        values=values,
        tau_log=[tau for tau in state.tau_log if tau <= config.T],
        t_end=config.T,
        R_end=values[-1] if values else 0,
        n_events=state.n_events,
        run_id=run_id,
        seed=stream.master_seed,
        extra={"J": config.J, "G": config.G.describe(), "ledger_ok": state.ledger_holds()},
    ), records
