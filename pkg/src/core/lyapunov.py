"""
DLA-1D Lyapunov Observables

Observables over Caricature II event traces: the pre-adjustment sums
L~_k and power sums Q~_{q,k}, visits to the finite set Lambda(alpha),
the regenerative speed estimator, the empirical drift of Q~ outside
Lambda(alpha), and the per-state correlation (FKG) inequality.

Coordinate indices r are 1-based, as in r(k) in {1, ..., J}.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import EmptyDrift, InsufficientCycles, InvariantViolation, ParameterError
from ..logging_config import get_logger

logger = get_logger("lyapunov")

DEFAULT_BOOTSTRAP = 1000
MAX_Q = 5


def l_tilde(U: Sequence[int]) -> int:
    """Sum of the pre-adjustment positions minus one"""
    if any(x < 1 for x in U):
        raise InvariantViolation(f"state {tuple(U)} has a coordinate below 1", module="lyapunov")
    return int(sum(U)) - 1


def _shifted(U: Sequence[int], r: int) -> List[int]:
    if not 1 <= r <= len(U):
        raise InvariantViolation(f"index r={r} outside 1..{len(U)}", module="lyapunov")
    if U[r - 1] != 1:
        raise InvariantViolation(
            f"jumping coordinate r={r} has value {U[r - 1]}, expected 1", module="lyapunov"
        )
    return [int(x) - (1 if j == r - 1 else 0) for j, x in enumerate(U)]


def q_tilde(U: Sequence[int], r: int, q: int) -> int:
    """Sum over j of (U_j - 1{j = r})^q"""
    if q < 1:
        raise ParameterError(f"q must be >= 1, got {q}", module="lyapunov")
    return sum(v ** q for v in _shifted(U, r))


def fkg_check(U: Sequence[int], r: int, q: int, u: int) -> bool:
    """
    (1/J) Q_{u-1} * (1/J) Q_{q-u} <= (1/J) Q_{q-1} on v_j = U_j - 1{j = r}.

    Evaluated in integers as Q_{u-1} * Q_{q-u} <= J * Q_{q-1}, with 0^0 = 1.
    """
    if not 1 <= u <= q:
        raise ParameterError(f"need 1 <= u <= q, got u={u}, q={q}", module="lyapunov")
    values = _shifted(U, r)
    J = len(values)

    def power_sum(m: int) -> int:
        return sum(v ** m for v in values)

    return power_sum(u - 1) * power_sum(q - u) <= J * power_sum(q - 1)


def fkg_violations(records: Sequence[Any], q_max: int = MAX_Q) -> int:
    """Number of (record, q, u) triples violating the FKG inequality"""
    violations = 0
    for record in records:
        for q in range(1, q_max + 1):
            for u in range(1, q + 1):
                if not fkg_check(record.U, record.r, q, u):
                    violations += 1
    return violations


@dataclass
class RegenSummary:
    """Visits of the pre-adjustment chain to Lambda(alpha)"""
    alpha: float
    nu: Tuple[int, ...]
    tau_nu: Tuple[float, ...]
    n_events: int
    cycle_lengths: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))
    cycle_durations: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))

    @property
    def n_cycles(self) -> int:
        return max(len(self.nu) - 1, 0)

    def cycle_stats(self) -> Dict[str, float]:
        if self.n_cycles == 0:
            return {}
        ddof = 1 if self.n_cycles > 1 else 0
        return {
            "mean_length": float(self.cycle_lengths.mean()),
            "var_length": float(self.cycle_lengths.var(ddof=ddof)),
            "mean_duration": float(self.cycle_durations.mean()),
            "var_duration": float(self.cycle_durations.var(ddof=ddof)),
        }


@dataclass(frozen=True)
class SpeedEstimate:
    speed: float
    ci_lo: float
    ci_hi: float
    n_cycles: int


@dataclass(frozen=True)
class DriftEstimate:
    mean: float
    ci_lo: float
    ci_hi: float
    n_events: int
    alpha: float
    q: int


def detect_regenerations(records: Sequence[Any], alpha: float) -> Union[RegenSummary, InsufficientCycles]:
    """nu_i = successive event indices k with L~_k <= alpha"""
    hits = [(rec.k, rec.tau) for rec in records if rec.L_tilde <= alpha]
    if len(hits) < 2:
        return InsufficientCycles(n_regenerations=len(hits), needed=2, alpha=alpha)
    nu = tuple(int(k) for k, _ in hits)
    tau_nu = tuple(float(t) for _, t in hits)
    return RegenSummary(
        alpha=alpha,
        nu=nu,
        tau_nu=tau_nu,
        n_events=len(records),
        cycle_lengths=np.diff(np.asarray(nu, dtype=float)),
        cycle_durations=np.diff(np.asarray(tau_nu, dtype=float)),
    )


def _bootstrap_ratio(
    numerators: np.ndarray,
    denominators: np.ndarray,
    n_boot: int,
    seed: int,
    confidence: float,
) -> Tuple[float, float]:
    rng = np.random.default_rng(seed)
    n = numerators.size
    picks = rng.integers(0, n, size=(n_boot, n))
    num = numerators[picks].sum(axis=1)
    den = denominators[picks].sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = num / den
    tail = (1.0 - confidence) / 2.0 * 100.0
    lo, hi = np.nanpercentile(ratios, [tail, 100.0 - tail])
    return float(lo), float(hi)


def speed_estimate(
    summary: Union[RegenSummary, InsufficientCycles],
    n_boot: int = DEFAULT_BOOTSTRAP,
    seed: int = 0,
    confidence: float = 0.95,
) -> Union[SpeedEstimate, InsufficientCycles]:
    """mean(nu_{i+1} - nu_i) / mean(tau_{nu_{i+1}} - tau_{nu_i}) with a cycle bootstrap"""
    if isinstance(summary, InsufficientCycles):
        return summary
    if summary.n_cycles < 2:
        return InsufficientCycles(n_regenerations=len(summary.nu), needed=3, alpha=summary.alpha)
    lengths = summary.cycle_lengths
    durations = summary.cycle_durations
    speed = float(lengths.sum() / durations.sum())
    lo, hi = _bootstrap_ratio(lengths, durations, n_boot, seed, confidence)
    lo, hi = min(lo, speed), max(hi, speed)
    return SpeedEstimate(speed=speed, ci_lo=lo, ci_hi=hi, n_cycles=summary.n_cycles)


def _q_value(record: Any, q: int) -> int:
    cached = getattr(record, "Q_tilde", None) or {}
    if q in cached:
        return cached[q]
    return q_tilde(record.U, record.r, q)


def drift_estimate(
    records: Sequence[Any],
    alpha: float,
    q: int = 2,
    n_boot: int = DEFAULT_BOOTSTRAP,
    seed: int = 0,
    confidence: float = 0.95,
) -> Union[DriftEstimate, EmptyDrift]:
    """
    Mean of Q~_{q,k+1} - Q~_{q,k} over events k with L~_k > alpha.

    The interval resamples whole excursions outside Lambda(alpha); with a
    single excursion the increments themselves are resampled.
    """
    increments: List[float] = []
    excursion_ids: List[int] = []
    excursion = 0
    for current, following in zip(records, records[1:]):
        if current.L_tilde <= alpha:
            excursion += 1
            continue
        increments.append(float(_q_value(following, q) - _q_value(current, q)))
        excursion_ids.append(excursion)
    if not increments:
        return EmptyDrift(alpha=alpha, q=q)

    values = np.asarray(increments)
    mean = float(values.mean())
    groups = np.asarray(excursion_ids)
    labels = np.unique(groups)
    if labels.size > 1:
        sums = np.array([values[groups == g].sum() for g in labels])
        counts = np.array([(groups == g).sum() for g in labels], dtype=float)
    else:
        sums = values
        counts = np.ones_like(values)
    lo, hi = _bootstrap_ratio(sums, counts, n_boot, seed, confidence)
    lo, hi = min(lo, mean), max(hi, mean)
    return DriftEstimate(mean=mean, ci_lo=lo, ci_hi=hi, n_events=len(increments), alpha=alpha, q=q)


def default_alphas(J: int) -> List[float]:
    return [float(J), float(2 * J), float(4 * J), float(8 * J)]


def diagnostics(
    records: Sequence[Any],
    alpha: float,
    q: int,
    n_boot: int = DEFAULT_BOOTSTRAP,
    seed: int = 0,
    fkg_q_max: int = MAX_Q,
) -> Dict[str, Any]:
    """Diagnostics object for one (alpha, q) pair"""
    summary = detect_regenerations(records, alpha)
    speed = speed_estimate(summary, n_boot=n_boot, seed=seed)
    drift = drift_estimate(records, alpha, q, n_boot=n_boot, seed=seed)
    report: Dict[str, Any] = {
        "alpha": alpha,
        "q": q,
        "n_events": len(records),
        "n_cycles": summary.n_cycles if isinstance(summary, RegenSummary) else 0,
        "speed": None,
        "speed_ci": None,
        "drift_mean": None,
        "drift_ci": None,
        "fkg_violations": fkg_violations(records, fkg_q_max),
    }
    if isinstance(speed, SpeedEstimate):
        report["speed"] = speed.speed
        report["speed_ci"] = [speed.ci_lo, speed.ci_hi]
    else:
        report["speed_status"] = speed.reason
    if isinstance(drift, DriftEstimate):
        report["drift_mean"] = drift.mean
        report["drift_ci"] = [drift.ci_lo, drift.ci_hi]
        report["drift_events"] = drift.n_events
    else:
        report["drift_status"] = drift.reason
    return report
