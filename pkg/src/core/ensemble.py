"""
DLA-1D Ensemble Runner

Runs n independent replicas of one model, each on its own substream
(master_seed, run_id), optionally across worker processes, and folds the
completed trajectories into an EnsembleSummary. Runs that exhaust their
window are excluded and reported.
"""

import concurrent.futures
from typing import Any, Dict, List, Optional, Tuple, Union

from .caricature import Car1Config, Car2Config, car1_run, car2_run
from .dla import RunConfig, Trajectory
from .dla import run as dla_run
from .errors import AbortRecord, EnsembleError, RedExhausted, WindowExhausted, describe_causes
from .rng import substream
from .stats import EnsembleSummary
from ..logging_config import get_logger

logger = get_logger("ensemble")

ModelConfig = Union[RunConfig, Car1Config, Car2Config]
MODELS = ("dla", "car1", "car2")


def model_of(config: ModelConfig) -> str:
    if isinstance(config, RunConfig):
        return "dla"
    if isinstance(config, Car1Config):
        return "car1"
    if isinstance(config, Car2Config):
        return "car2"
    raise TypeError(f"unsupported config type {type(config).__name__}")


def run_single(config: ModelConfig, master_seed: int, run_id: int) -> Trajectory:
    """One replica on substream (master_seed, run_id)"""
    stream = substream(master_seed, run_id)
    model = model_of(config)
    if model == "dla":
        return dla_run(config, stream, run_id)
    if model == "car1":
        return car1_run(config, stream, run_id)
    trajectory, _records = car2_run(config, stream, run_id)
    return trajectory


def _ensemble_worker(args: Tuple[ModelConfig, int, int]) -> Tuple[int, Union[Trajectory, AbortRecord]]:
    """Module-level so process pools can pickle it"""
    config, master_seed, run_id = args
    try:
        return run_id, run_single(config, master_seed, run_id)
    except (WindowExhausted, RedExhausted) as error:
        return run_id, AbortRecord.from_error(run_id, error)


def ensemble_run(
    config: ModelConfig,
    n_runs: int,
    master_seed: int,
    threads: int = 1,
    config_echo: Optional[Dict[str, Any]] = None,
) -> EnsembleSummary:
    """
    n_runs independent replicas folded into an EnsembleSummary.

    Results are collected in any order and aggregated by run_id, so the
    summary is the same for every worker count.
    """
    if n_runs < 1:
        raise EnsembleError(f"n_runs must be >= 1, got {n_runs}", module="stats")
    tasks = [(config, master_seed, run_id) for run_id in range(n_runs)]
    completed: List[Trajectory] = []
    aborts: List[AbortRecord] = []

    logger.info(f"[ENSEMBLE] {model_of(config)} runs={n_runs} seed={master_seed} workers={threads}")
    if threads <= 1 or n_runs == 1:
        results = map(_ensemble_worker, tasks)
        for run_id, outcome in results:
            _collect(outcome, completed, aborts)
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as executor:
            futures = [executor.submit(_ensemble_worker, task) for task in tasks]
            for future in concurrent.futures.as_completed(futures):
                run_id, outcome = future.result()
                _collect(outcome, completed, aborts)

    for record in aborts:
        logger.warning(f"[WARNING] Run {record.run_id} aborted in {record.module}: {record.cause}")
    if not completed:
        raise EnsembleError(
            f"all {n_runs} runs aborted", causes=describe_causes(sorted(aborts, key=lambda a: a.run_id))
        )
    summary = EnsembleSummary.from_trajectories(completed, aborts, config=config_echo, seed=master_seed)
    logger.info(
        f"[ENSEMBLE] completed={summary.n_runs} aborted={len(aborts)} mean_R(T)={summary.means[-1]:.4g}"
    )
    return summary


def _collect(outcome: Union[Trajectory, AbortRecord], completed: List[Trajectory], aborts: List[AbortRecord]) -> None:
    if isinstance(outcome, AbortRecord):
        aborts.append(outcome)
    else:
        completed.append(outcome)
