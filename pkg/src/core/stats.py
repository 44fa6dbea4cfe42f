"""
DLA-1D Ensemble Statistics

Cross-run summaries and the estimators that read growth laws off them:
log-log growth exponents, tail probabilities of R(t)/sqrt(t), the linear
bound R(t) <= C1 t, and a two-sample KS distance for mode comparisons.
All estimators are pure functions of an EnsembleSummary.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats as sps

from .dla import Trajectory
from .errors import AbortRecord, FitDomainError, ParameterError
from ..logging_config import get_logger

logger = get_logger("stats")

DEFAULT_BOOTSTRAP = 1000


@dataclass
class EnsembleSummary:
    """Per-checkpoint statistics of R over the completed runs of an ensemble"""
    times: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    counts: np.ndarray
    values: np.ndarray = field(repr=False)
    run_ids: Tuple[int, ...] = ()
    terminal: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))
    aborts: List[AbortRecord] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    @property
    def n_runs(self) -> int:
        return int(self.values.shape[0])

    @classmethod
    def from_trajectories(
        cls,
        trajectories: Sequence[Trajectory],
        aborts: Sequence[AbortRecord] = (),
        config: Optional[Dict[str, Any]] = None,
        seed: int = 0,
    ) -> "EnsembleSummary":
        """Aggregate in run_id order so the summary does not depend on completion order"""
        if not trajectories:
            raise ParameterError("need at least one completed run", module="stats")
        ordered = sorted(trajectories, key=lambda tr: tr.run_id)
        times = np.asarray(ordered[0].times, dtype=float)
        for tr in ordered:
            if len(tr.values) != times.size:
                raise ParameterError(
                    f"run {tr.run_id} has {len(tr.values)} checkpoints, expected {times.size}", module="stats"
                )
        values = np.array([tr.values for tr in ordered], dtype=np.int64)
        n = values.shape[0]
        return cls(
            times=times,
            means=values.mean(axis=0),
            variances=values.var(axis=0, ddof=1) if n > 1 else np.zeros(times.size),
            counts=np.full(times.size, n, dtype=np.int64),
            values=values,
            run_ids=tuple(tr.run_id for tr in ordered),
            terminal=np.array([tr.R_end for tr in ordered], dtype=np.int64),
            aborts=sorted(aborts, key=lambda a: a.run_id),
            config=dict(config or {}),
            seed=seed,
        )

    @classmethod
    def from_values(cls, times: Sequence[float], values: Sequence[Sequence[float]], seed: int = 0) -> "EnsembleSummary":
        """Summary over a raw (runs x checkpoints) matrix"""
        matrix = np.atleast_2d(np.asarray(values, dtype=float))
        n = matrix.shape[0]
        return cls(
            times=np.asarray(times, dtype=float),
            means=matrix.mean(axis=0),
            variances=matrix.var(axis=0, ddof=1) if n > 1 else np.zeros(matrix.shape[1]),
            counts=np.full(matrix.shape[1], n, dtype=np.int64),
            values=matrix,
            run_ids=tuple(range(n)),
            terminal=matrix[:, -1].copy(),
            seed=seed,
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.times, "mean_R": self.means, "var_R": self.variances, "n": self.counts})


@dataclass(frozen=True)
class SlopeEstimate:
    slope: float
    intercept: float
    ci_lo: float
    ci_hi: float
    t_lo: float
    t_hi: float
    n_points: int
    n_runs: int = 0

    def to_dict(self, seed: int = 0) -> Dict[str, Any]:
        return {
            "slope": self.slope,
            "ci_lo": self.ci_lo,
            "ci_hi": self.ci_hi,
            "t_lo": self.t_lo,
            "t_hi": self.t_hi,
            "n_runs": self.n_runs,
            "seed": seed,
        }


@dataclass(frozen=True)
class TailPoint:
    t: float
    prob: float
    ci_lo: float
    ci_hi: float
    n: int


@dataclass
class BoundReport:
    fraction: float
    n_pairs: int
    exceedances: List[Tuple[int, float, float]] = field(default_factory=list)


class KSResult(NamedTuple):
    statistic: float
    crit5: float
    crit1: float


def _fit_line(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def loglog_slope(
    summary: EnsembleSummary,
    t_lo: float,
    t_hi: float,
    n_boot: int = DEFAULT_BOOTSTRAP,
    seed: int = 0,
    confidence: float = 0.95,
) -> SlopeEstimate:
    """
    Least-squares slope of ln(mean R) against ln t over [t_lo, t_hi].

    The interval resamples whole runs, keeping each run's checkpoints together.
    """
    if not t_lo < t_hi:
        raise ParameterError(f"need t_lo < t_hi, got [{t_lo}, {t_hi}]", module="stats")
    mask = (summary.times >= t_lo) & (summary.times <= t_hi)
    n_points = int(mask.sum())
    if n_points < 3:
        raise ParameterError(f"only {n_points} checkpoints in [{t_lo}, {t_hi}], need 3", module="stats")
    means = summary.means[mask]
    if (means <= 0).any():
        zero_at = summary.times[mask][means <= 0]
        raise FitDomainError(
            f"zero mean at t={zero_at[0]:g} inside the fit window", module="stats", t=float(zero_at[0])
        )
    x = np.log(summary.times[mask])
    slope, intercept = _fit_line(x, np.log(means))

    window = summary.values[:, mask].astype(float)
    n = window.shape[0]
    rng = np.random.default_rng(seed)
    slopes = np.empty(n_boot)
    for b in range(n_boot):
        boot_means = window[rng.integers(0, n, size=n)].mean(axis=0)
        if (boot_means <= 0).any():
            slopes[b] = np.nan
            continue
        slopes[b] = _fit_line(x, np.log(boot_means))[0]
    tail = (1.0 - confidence) / 2.0 * 100.0
    if np.isnan(slopes).all():
        lo = hi = slope
    else:
        lo, hi = np.nanpercentile(slopes, [tail, 100.0 - tail])
    estimate = SlopeEstimate(
        slope=slope,
        intercept=intercept,
        ci_lo=float(min(lo, slope)),
        ci_hi=float(max(hi, slope)),
        t_lo=float(t_lo),
        t_hi=float(t_hi),
        n_points=n_points,
        n_runs=n,
    )
    logger.debug(f"[FIT] slope={slope:.4f} CI=[{estimate.ci_lo:.4f}, {estimate.ci_hi:.4f}] over {n} runs")
    return estimate


def clopper_pearson(successes: int, n: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Exact binomial interval from beta quantiles"""
    alpha = 1.0 - confidence
    lo = 0.0 if successes == 0 else float(sps.beta.ppf(alpha / 2, successes, n - successes + 1))
    hi = 1.0 if successes == n else float(sps.beta.ppf(1 - alpha / 2, successes + 1, n - successes))
    return lo, hi


def tail_prob(summary: EnsembleSummary, x: float, confidence: float = 0.95) -> List[TailPoint]:
    """Fraction of runs with R(t) >= x sqrt(t) at each checkpoint"""
    points: List[TailPoint] = []
    n = summary.n_runs
    for j, t in enumerate(summary.times):
        hits = int((summary.values[:, j] >= x * math.sqrt(t)).sum())
        lo, hi = clopper_pearson(hits, n, confidence)
        points.append(TailPoint(t=float(t), prob=hits / n, ci_lo=lo, ci_hi=hi, n=n))
    return points


def eta_scan(
    summary: EnsembleSummary,
    times: Sequence[float],
    eps: float = 0.1,
    etas: Optional[Sequence[float]] = None,
) -> Optional[float]:
    """Largest eta on the grid with P{R(t) >= eta sqrt(t)} >= 1 - eps at every requested t"""
    if etas is None:
        etas = np.linspace(0.01, 2.0, 200)
    columns = [int(np.argmin(np.abs(summary.times - t))) for t in times]
    for eta in sorted(etas, reverse=True):
        probs = [
            float((summary.values[:, j] >= eta * math.sqrt(summary.times[j])).mean()) for j in columns
        ]
        if min(probs) >= 1.0 - eps:
            return float(eta)
    return None


def bound_check(summary: EnsembleSummary, C1: float, t_min: float = 0.0) -> BoundReport:
    """Every (run, checkpoint) pair with R > C1 t among checkpoints t >= t_min"""
    if not C1 > 0:
        raise ParameterError(f"C1 must be positive, got {C1}", module="stats")
    mask = summary.times >= t_min
    columns = np.flatnonzero(mask)
    exceed = summary.values[:, columns] > C1 * summary.times[columns]
    pairs = [
        (summary.run_ids[i], float(summary.times[columns[j]]), float(summary.values[i, columns[j]]))
        for i, j in zip(*np.nonzero(exceed))
    ]
    n_pairs = int(summary.n_runs * columns.size)
    fraction = len(pairs) / n_pairs if n_pairs else 0.0
    return BoundReport(fraction=fraction, n_pairs=n_pairs, exceedances=pairs)


def ks_critical(n: int, m: int, alpha: float) -> float:
    """Asymptotic two-sample critical value c(alpha) sqrt((n + m) / (n m))"""
    return math.sqrt(-math.log(alpha / 2.0) / 2.0) * math.sqrt((n + m) / (n * m))


def ks_distance(sample_a: Sequence[float], sample_b: Sequence[float]) -> KSResult:
    """Two-sample Kolmogorov-Smirnov statistic with 5% and 1% thresholds"""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ParameterError("both samples must be non-empty", module="stats")
    statistic = float(sps.ks_2samp(a, b).statistic)
    return KSResult(statistic, ks_critical(a.size, b.size, 0.05), ks_critical(a.size, b.size, 0.01))


def growth_ratios(summary: EnsembleSummary) -> pd.DataFrame:
    """Run-averaged R/sqrt(t), R/t and R/((ln t)^2 sqrt(t)) per checkpoint"""
    t = summary.times
    values = summary.values.astype(float)
    log_sq = np.log(t) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.where(log_sq > 0, (values / (log_sq * np.sqrt(t))).mean(axis=0), np.nan)
    return pd.DataFrame({
        "t": t,
        "R_over_sqrt_t": (values / np.sqrt(t)).mean(axis=0),
        "R_over_t": (values / t).mean(axis=0),
        "R_over_log2_sqrt_t": log_ratio,
    })


def terminal_speed(summary: EnsembleSummary) -> float:
    """Mean of R(T)/T over completed runs"""
    return float(summary.terminal.mean() / summary.times[-1])
