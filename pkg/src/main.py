#!/usr/bin/env python3
"""
DLA-1D: simulate one-dimensional diffusion-limited aggregation and check its growth laws

Subcommands: run, ensemble, exponent, car2diag, validate, sweep, presets.
Exit codes: 0 success, 2 configuration error, 3 invariant violation,
4 validation failure, 5 resource exhaustion (window or red particles).
"""

import functools
import math
from pathlib import Path
from typing import Annotated, Any, Callable, Dict, List, Optional

import typer
from rich.console import Console
from rich.table import Table

from src.config import PresetManager, SimConfig
from src.core.caricature import car1_run, car2_run
from src.core.dla import run as dla_run
from src.core.ensemble import ensemble_run
from src.core.errors import DLAError, ExitCode, ValidationFailure
from src.core.lyapunov import diagnostics
from src.core.outputs import OutputWriter
from src.core.rng import substream
from src.core.stats import (
    EnsembleSummary, bound_check, eta_scan, growth_ratios, ks_distance, loglog_slope, tail_prob, terminal_speed,
)
from src.logging_config import get_logger, setup_logging

app = typer.Typer(
    name="dla1d",
    help="One-dimensional diffusion-limited aggregation: simulation and growth-law checks",
    add_completion=False,
)
console = Console()
logger = get_logger("cli")

ConfigOpt = Annotated[Optional[Path], typer.Option("--config", "-c", help="key=value config file")]
PresetOpt = Annotated[Optional[str], typer.Option("--preset", "-p", help="Named preset from presets/")]
SeedOpt = Annotated[Optional[int], typer.Option("--seed", help="Master seed (else DLA1D_SEED, else file)")]
ThreadsOpt = Annotated[Optional[int], typer.Option("--threads", help="Worker processes for ensembles")]
LogLevelOpt = Annotated[Optional[str], typer.Option("--log-level", help="DEBUG, INFO, WARNING, ERROR")]
OutputOpt = Annotated[Optional[str], typer.Option("--output-dir", "-o", help="Directory for result files")]
ModelOpt = Annotated[Optional[str], typer.Option("--model", help="dla, car1 or car2")]
MuOpt = Annotated[Optional[float], typer.Option("--mu", help="Initial Poisson density")]
TMaxOpt = Annotated[Optional[float], typer.Option("--t-max", help="Time horizon T")]
NRunsOpt = Annotated[Optional[int], typer.Option("--n-runs", help="Ensemble size")]
ModeOpt = Annotated[Optional[str], typer.Option("--mode", help="exact or fast")]
SetOpt = Annotated[Optional[List[str]], typer.Option("--set", "-s", help="Any key=value override, repeatable")]

ETA_TIMES = (1e3, 1e4)


def _load(
    config_file: Optional[Path],
    preset: Optional[str],
    sets: Optional[List[str]],
    **flags: Any,
) -> SimConfig:
    """Effective configuration; named flags win over --set pairs"""
    overrides: Dict[str, Any] = {}
    for pair in sets or []:
        if "=" not in pair:
            raise typer.BadParameter(f"expected key=value, got '{pair}'", param_hint="--set")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value.strip()
    overrides.update({key: value for key, value in flags.items() if value is not None})
    config = SimConfig.load(config_file=str(config_file) if config_file else None, preset=preset, overrides=overrides)
    setup_logging(
        config.logging.log_level,
        log_file=Path(config.output.output_dir) / "logs" / "dla1d.log",
        json_format=config.logging.log_json,
    )
    logger.info(f"[INIT] model={config.model.model} seed={config.seed} config_hash={config.config_hash()}")
    return config


def _writer(config: SimConfig) -> OutputWriter:
    writer = OutputWriter(config.output.output_dir, config.seed, config.config_hash())
    writer.write_config(config.to_lines())
    return writer


def handle_errors(command: Callable) -> Callable:
    """Map simulator errors onto the exit-code contract"""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except DLAError as error:
            logger.error(f"[ERROR] {error}")
            console.print(f"[bold red]Error:[/bold red] {error}")
            raise typer.Exit(code=error.exit_code)

    return wrapper


def _fmt(value: Optional[float], digits: int = 4) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "-"
    return f"{value:.{digits}g}"


def _grid_times(times, targets, t_lo: float, t_hi: float) -> List[float]:
    """Nearest checkpoint to each target, clamped to [t_lo, t_hi], without repeats"""
    window = [float(t) for t in times if t_lo <= t <= t_hi]
    picked: List[float] = []
    for target in targets:
        if not window:
            break
        clamped = min(max(target, window[0]), window[-1])
        nearest = min(window, key=lambda t: abs(t - clamped))
        if nearest not in picked:
            picked.append(nearest)
    return picked


def _summary_table(title: str, rows: Dict[str, Any]) -> Table:
    table = Table(title=title)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", justify="right")
    for key, value in rows.items():
        table.add_row(key, value if isinstance(value, str) else _fmt(value, 6))
    return table


def _ensemble(config: SimConfig, model_config=None) -> EnsembleSummary:
    return ensemble_run(
        model_config or config.model_config(),
        config.ensemble.n_runs,
        config.seed,
        threads=config.ensemble.threads,
        config_echo=config.as_dict(),
    )


def _write_aborts(writer: OutputWriter, summary: EnsembleSummary) -> None:
    if summary.aborts:
        writer.write_report("aborts.json", {
            "aborted": [
                {"run_id": a.run_id, "cause": a.cause, "module": a.module, "exit_code": a.exit_code}
                for a in summary.aborts
            ],
        })
        console.print(f"[yellow]{len(summary.aborts)} run(s) aborted and were excluded[/yellow]")


@app.command()
@handle_errors
def run(
    config_file: ConfigOpt = None,
    preset: PresetOpt = None,
    seed: SeedOpt = None,
    log_level: LogLevelOpt = None,
    output_dir: OutputOpt = None,
    model: ModelOpt = None,
    mu: MuOpt = None,
    t_max: TMaxOpt = None,
    mode: ModeOpt = None,
    sets: SetOpt = None,
    run_id: Annotated[int, typer.Option("--run-id", help="Substream index")] = 0,
):
    """Single run of the configured model: trajectory and advance times"""
    config = _load(config_file, preset, sets, seed=seed, log_level=log_level, output_dir=output_dir,
                   model=model, mu=mu, t_max=t_max, mode=mode)
    writer = _writer(config)
    stream = substream(config.seed, run_id)
    name = config.model.model

    if name == "car1":
        trajectory = car1_run(config.car1_config(), stream, run_id)
        writer.write_report("car1.json", dict(trajectory.extra))
    elif name == "car2":
        trajectory, records = car2_run(config.car2_config(), stream, run_id)
        writer.write_events(records, config.diagnostics.q_list)
    else:
        trajectory = dla_run(config.run_config(), stream, run_id)

    writer.write_trajectories([trajectory])
    writer.write_tau_log(trajectory.tau_log)
    rows: Dict[str, Any] = {
        "R(T)": float(trajectory.R_end),
        "events": float(trajectory.n_events),
        "t_end": trajectory.t_end,
    }
    if trajectory.starved:
        rows["starved"] = "yes"
    if config.model.mode == "fast" and name == "dla":
        rows["sleep episodes"] = float(trajectory.sleep_episodes)
        rows["sleep budget"] = trajectory.sleep_budget
    console.print(_summary_table(f"{name} run {run_id}", rows))


@app.command()
@handle_errors
def ensemble(
    config_file: ConfigOpt = None,
    preset: PresetOpt = None,
    seed: SeedOpt = None,
    threads: ThreadsOpt = None,
    log_level: LogLevelOpt = None,
    output_dir: OutputOpt = None,
    model: ModelOpt = None,
    mu: MuOpt = None,
    t_max: TMaxOpt = None,
    n_runs: NRunsOpt = None,
    mode: ModeOpt = None,
    sets: SetOpt = None,
):
    """Independent replicas folded into a per-checkpoint summary"""
    config = _load(config_file, preset, sets, seed=seed, threads=threads, log_level=log_level,
                   output_dir=output_dir, model=model, mu=mu, t_max=t_max, n_runs=n_runs, mode=mode)
    writer = _writer(config)
    summary = _ensemble(config)
    writer.write_summary(summary)
    writer.write_terminal(summary)
    writer.write_frame("growth.csv", growth_ratios(summary))
    _write_aborts(writer, summary)

    table = Table(title=f"Ensemble of {summary.n_runs} runs")
    table.add_column("t", justify="right")
    table.add_column("mean R", justify="right")
    table.add_column("var R", justify="right")
    for t, mean, var in zip(summary.times, summary.means, summary.variances):
        table.add_row(_fmt(t), _fmt(mean), _fmt(var))
    console.print(table)


@app.command()
@handle_errors
def exponent(
    config_file: ConfigOpt = None,
    preset: PresetOpt = None,
    seed: SeedOpt = None,
    threads: ThreadsOpt = None,
    log_level: LogLevelOpt = None,
    output_dir: OutputOpt = None,
    mu: MuOpt = None,
    t_max: TMaxOpt = None,
    n_runs: NRunsOpt = None,
    mode: ModeOpt = None,
    sets: SetOpt = None,
):
    """Log-log growth exponent of the mean front with a run bootstrap"""
    config = _load(config_file, preset, sets, seed=seed, threads=threads, log_level=log_level,
                   output_dir=output_dir, mu=mu, t_max=t_max, n_runs=n_runs, mode=mode)
    writer = _writer(config)
    summary = _ensemble(config)
    estimate = loglog_slope(
        summary, config.diagnostics.fit_t_lo, config.t_hi, n_boot=config.diagnostics.n_boot, seed=config.seed
    )
    writer.write_summary(summary)
    writer.write_terminal(summary)
    writer.write_frame("growth.csv", growth_ratios(summary))
    writer.write_slope(estimate)
    _write_aborts(writer, summary)

    m = config.model
    checks: Dict[str, Any] = {}
    if m.model == "dla" and m.mu > 0:
        C1 = m.D * math.e * m.mu
        bound = bound_check(summary, C1, t_min=config.diagnostics.fit_t_lo)
        checks["linear_bound"] = {"C1": C1, "fraction": bound.fraction, "exceedances": bound.exceedances[:100]}
    checks["tail_x20"] = [
        {"t": p.t, "prob": p.prob, "ci": [p.ci_lo, p.ci_hi]}
        for p in tail_prob(summary, 20.0) if p.t >= config.diagnostics.fit_t_lo
    ]
    eta_times = _grid_times(summary.times, ETA_TIMES, config.diagnostics.fit_t_lo, config.t_hi)
    checks["eta_eps0.1"] = {"times": eta_times, "eta": eta_scan(summary, eta_times, eps=0.1) if eta_times else None}
    writer.write_report("checks.json", checks)

    console.print(_summary_table("Growth exponent", {
        "slope": estimate.slope,
        "95% CI": f"[{estimate.ci_lo:.4f}, {estimate.ci_hi:.4f}]",
        "window": f"[{estimate.t_lo:g}, {estimate.t_hi:g}]",
        "runs": float(estimate.n_runs),
    }))


@app.command()
@handle_errors
def car2diag(
    config_file: ConfigOpt = None,
    preset: PresetOpt = None,
    seed: SeedOpt = None,
    log_level: LogLevelOpt = None,
    output_dir: OutputOpt = None,
    t_max: TMaxOpt = None,
    sets: SetOpt = None,
    J: Annotated[Optional[int], typer.Option("--J", help="Number of walkers")] = None,
):
    """Regeneration speed, Lyapunov drift and FKG checks on a Caricature II trace"""
    config = _load(config_file, preset, sets, seed=seed, log_level=log_level, output_dir=output_dir,
                   t_max=t_max, J=J, model="car2")
    writer = _writer(config)
    car2 = config.car2_config()
    trajectory, records = car2_run(car2, substream(config.seed, 0), 0)
    writer.write_events(records, config.diagnostics.q_list)
    writer.write_trajectories([trajectory])

    reports: List[Dict[str, Any]] = []
    for alpha in config.alphas:
        for q in config.diagnostics.q_list:
            report = diagnostics(records, alpha, q, n_boot=config.diagnostics.n_boot, seed=config.seed)
            if alpha < car2.J - 1:
                report["speed_status"] = "no-regenerations"
            reports.append(report)
    direct = trajectory.R_end / car2.T
    writer.write_report("diagnostics.json", {
        "J": car2.J,
        "G": car2.G.describe(),
        "T": car2.T,
        "direct_speed": direct,
        "ledger_ok": trajectory.extra["ledger_ok"],
        "reports": reports,
    })

    table = Table(title=f"Caricature II J={car2.J} G={car2.G.describe()} events={len(records)}")
    for column in ("alpha", "q", "cycles", "speed", "drift", "FKG fails"):
        table.add_column(column, justify="right")
    for report in reports:
        table.add_row(
            _fmt(report["alpha"]), str(report["q"]), str(report["n_cycles"]),
            _fmt(report["speed"]), _fmt(report["drift_mean"]), str(report["fkg_violations"]),
        )
    console.print(table)
    console.print(f"direct speed R(T)/T = {direct:.6g}")

    if all(report["speed"] is None for report in reports):
        console.print("[yellow]No alpha produced enough regenerations for a speed estimate[/yellow]")
        raise typer.Exit(code=ExitCode.VALIDATION)


@app.command()
@handle_errors
def validate(
    config_file: ConfigOpt = None,
    preset: PresetOpt = None,
    seed: SeedOpt = None,
    threads: ThreadsOpt = None,
    log_level: LogLevelOpt = None,
    output_dir: OutputOpt = None,
    mu: MuOpt = None,
    t_max: TMaxOpt = None,
    sets: SetOpt = None,
    oracle: Annotated[str, typer.Option("--oracle", help="modes, window or all")] = "all",
):
    """Exact-vs-fast KS oracle and window-doubling oracle"""
    config = _load(config_file, preset, sets, seed=seed, threads=threads, log_level=log_level,
                   output_dir=output_dir, mu=mu, t_max=t_max, model="dla")
    if oracle not in ("modes", "window", "all"):
        raise typer.BadParameter("expected modes, window or all", param_hint="--oracle")
    writer = _writer(config)
    n = config.diagnostics.validate_runs
    results: Dict[str, Any] = {}
    failures: List[str] = []

    if oracle in ("modes", "all"):
        exact = ensemble_run(config.run_config(mode="exact"), n, config.seed, threads=config.ensemble.threads)
        fast = ensemble_run(config.run_config(mode="fast"), n, config.seed + 1, threads=config.ensemble.threads)
        ks = ks_distance(exact.terminal, fast.terminal)
        passed = ks.statistic < ks.crit1
        results["modes"] = {"statistic": ks.statistic, "crit5": ks.crit5, "crit1": ks.crit1,
                            "n_runs": n, "passed": passed}
        if not passed:
            failures.append(f"exact-vs-fast KS {ks.statistic:.4f} >= {ks.crit1:.4f}")

    if oracle in ("window", "all"):
        base = config.run_config()
        W = base.window()
        t_lo, t_hi = config.diagnostics.fit_t_lo, config.t_hi
        slopes = {}
        for label, width in (("W", W), ("2W", 2 * W)):
            summary = ensemble_run(config.run_config(window_override=width), n, config.seed,
                                   threads=config.ensemble.threads)
            slopes[label] = loglog_slope(summary, t_lo, t_hi, n_boot=config.diagnostics.n_boot, seed=config.seed)
        width = slopes["W"].ci_hi - slopes["W"].ci_lo
        change = abs(slopes["2W"].slope - slopes["W"].slope)
        passed = change < width
        results["window"] = {"W": W, "slope_W": slopes["W"].slope, "slope_2W": slopes["2W"].slope,
                             "ci_width": width, "passed": passed}
        if not passed:
            failures.append(f"window doubling moved the slope by {change:.4f} >= CI width {width:.4f}")

    writer.write_report("validation.json", results)
    table = Table(title="Validation")
    table.add_column("Oracle", style="cyan")
    table.add_column("Result")
    for key, value in results.items():
        table.add_row(key, "[green]pass[/green]" if value["passed"] else "[red]fail[/red]")
    console.print(table)
    if failures:
        raise ValidationFailure("; ".join(failures), module="cli")


@app.command()
@handle_errors
def sweep(
    config_file: ConfigOpt = None,
    preset: PresetOpt = None,
    seed: SeedOpt = None,
    threads: ThreadsOpt = None,
    log_level: LogLevelOpt = None,
    output_dir: OutputOpt = None,
    t_max: TMaxOpt = None,
    n_runs: NRunsOpt = None,
    mode: ModeOpt = None,
    sets: SetOpt = None,
):
    """Late-window slope and R(T)/T across a grid of densities"""
    config = _load(config_file, preset, sets, seed=seed, threads=threads, log_level=log_level,
                   output_dir=output_dir, t_max=t_max, n_runs=n_runs, mode=mode, model="dla")
    writer = _writer(config)
    t_hi = config.t_hi
    t_lo = max(config.grid.grid_t0, t_hi / 10.0)
    rows: List[Dict[str, Any]] = []
    for mu in config.diagnostics.mu_list:
        summary = _ensemble(config, config.run_config(mu=mu))
        try:
            estimate = loglog_slope(summary, t_lo, t_hi, n_boot=config.diagnostics.n_boot, seed=config.seed)
            slope, lo, hi = estimate.slope, estimate.ci_lo, estimate.ci_hi
        except DLAError as error:
            logger.warning(f"[WARNING] mu={mu}: {error}")
            slope = lo = hi = float("nan")
        rows.append({"mu": mu, "slope": slope, "ci_lo": lo, "ci_hi": hi,
                     "speed": terminal_speed(summary), "n_runs": summary.n_runs})
    writer.write_sweep(rows)
    threshold = config.diagnostics.slope_threshold
    crossing = next((row["mu"] for row in rows if row["slope"] > threshold), None)
    writer.write_report("sweep.json", {"threshold": threshold, "t_lo": t_lo, "t_hi": t_hi, "mu_c_estimate": crossing})

    table = Table(title=f"Density sweep, slope over [{t_lo:g}, {t_hi:g}]")
    for column in ("mu", "slope", "CI", "R(T)/T"):
        table.add_column(column, justify="right")
    for row in rows:
        table.add_row(_fmt(row["mu"]), _fmt(row["slope"]), f"[{_fmt(row['ci_lo'])}, {_fmt(row['ci_hi'])}]",
                      _fmt(row["speed"]))
    console.print(table)
    console.print(f"smallest mu with slope > {threshold}: {crossing if crossing is not None else 'none'}")


@app.command()
def presets():
    """List the bundled presets"""
    manager = PresetManager()
    table = Table(title="Presets")
    table.add_column("Name", style="cyan")
    table.add_column("Settings")
    for name in manager.names():
        table.add_row(name, " ".join(f"{k}={v}" for k, v in manager.get(name).items()))
    console.print(table)


def main():
    app()


if __name__ == "__main__":
    main()
