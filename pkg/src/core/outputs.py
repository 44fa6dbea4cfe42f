"""
DLA-1D Output Files

CSV tables (pandas) and JSON reports. Every CSV starts with a
'# seed=<s> config_hash=<h>' line so a file plus the recorded effective
config is enough to regenerate it. All paths are confined to output_dir.
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import pandas as pd

from .dla import Trajectory
from .errors import ConfigError
from .stats import EnsembleSummary, SlopeEstimate
from ..logging_config import get_logger

logger = get_logger("outputs")

FLOAT_FORMAT = "%.9g"


def read_table(path: Path) -> Tuple[Dict[str, str], pd.DataFrame]:
    """Header metadata and table of a CSV written by OutputWriter"""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline().strip()
    meta: Dict[str, str] = {}
    if first.startswith("#"):
        for token in first.lstrip("#").split():
            if "=" in token:
                key, value = token.split("=", 1)
                meta[key] = value
    return meta, pd.read_csv(path, comment="#")


class OutputWriter:
    """Writes result files for one command invocation"""

    def __init__(self, output_dir: str, seed: int, config_hash: str):
        self.output_dir = Path(output_dir).resolve()
        self.seed = seed
        self.config_hash = config_hash
        self.written: List[Path] = []

    def path(self, name: str) -> Path:
        """Resolve a file name inside output_dir, refusing anything that escapes it"""
        target = (self.output_dir / name).resolve()
        if target != self.output_dir and self.output_dir not in target.parents:
            raise ConfigError(f"refusing to write '{name}' outside {self.output_dir}", key="output_dir")
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    @property
    def header(self) -> str:
        return f"# seed={self.seed} config_hash={self.config_hash}\n"

    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        target = self.path(name)
        with open(target, "w", encoding="utf-8", newline="") as f:
            f.write(self.header)
            frame.to_csv(f, index=False, float_format=FLOAT_FORMAT)
        self.written.append(target)
        logger.info(f"[WRITE] {target.name} rows={len(frame)}")
        return target

    def write_json(self, name: str, payload: Any) -> Path:
        target = self.path(name)
        with open(target, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, default=_json_default)
            f.write("\n")
        self.written.append(target)
        logger.info(f"[WRITE] {target.name}")
        return target

    # -- tables ------------------------------------------------------------

    def write_trajectories(self, trajectories: Iterable[Trajectory], name: str = "trajectory.csv") -> Path:
        rows = [
            (tr.run_id, t, R)
            for tr in sorted(trajectories, key=lambda tr: tr.run_id)
            for t, R in tr.checkpoints
        ]
        return self.write_frame(name, pd.DataFrame(rows, columns=["run_id", "t", "R"]))

    def write_tau_log(self, tau_log: Sequence[float], name: str = "tau.csv") -> Path:
        frame = pd.DataFrame({"k": range(1, len(tau_log) + 1), "tau": list(tau_log)})
        return self.write_frame(name, frame)

    def write_summary(self, summary: EnsembleSummary, name: str = "summary.csv") -> Path:
        return self.write_frame(name, summary.to_frame())

    def write_terminal(self, summary: EnsembleSummary, name: str = "terminal.csv") -> Path:
        frame = pd.DataFrame({"run_id": list(summary.run_ids), "R_T": summary.terminal})
        return self.write_frame(name, frame)

    def write_events(self, records: Sequence[Any], q_list: Sequence[int], name: str = "events.csv") -> Path:
        rows: List[Dict[str, Any]] = []
        for record in records:
            row: Dict[str, Any] = {"k": record.k, "tau": record.tau, "r": record.r, "Ltilde": record.L_tilde}
            for q in q_list:
                row[f"Qtilde_q{q}"] = record.Q_tilde.get(q)
            row["in_lambda"] = int(record.in_lambda)
            row["L_post"] = record.L_post
            rows.append(row)
        columns = ["k", "tau", "r", "Ltilde"] + [f"Qtilde_q{q}" for q in q_list] + ["in_lambda", "L_post"]
        return self.write_frame(name, pd.DataFrame(rows, columns=columns))

    def write_sweep(self, rows: Sequence[Dict[str, Any]], name: str = "sweep.csv") -> Path:
        columns = ["mu", "slope", "ci_lo", "ci_hi", "speed", "n_runs"]
        return self.write_frame(name, pd.DataFrame(list(rows), columns=columns))

    # -- reports -------------------------------------------------------------

    def write_slope(self, estimate: SlopeEstimate, name: str = "slope.json") -> Path:
        payload = estimate.to_dict(seed=self.seed)
        payload["config_hash"] = self.config_hash
        return self.write_json(name, payload)

    def write_report(self, name: str, payload: Dict[str, Any]) -> Path:
        return self.write_json(name, {"seed": self.seed, "config_hash": self.config_hash, **payload})

    def write_config(self, lines: Sequence[str], name: str = "config.txt") -> Path:
        target = self.path(name)
        target.write_text("\n".join(lines) + "\n", encoding="utf-8")
        self.written.append(target)
        return target


def _json_default(value: Any) -> Any:
    # numpy scalars and arrays
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "__dict__"):
        return dict(value.__dict__)
    raise TypeError(f"cannot serialize {type(value).__name__}")
