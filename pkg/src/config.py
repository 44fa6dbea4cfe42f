#!/usr/bin/env python3
"""
DLA-1D Configuration Management
Loads configuration from presets, key=value config files, environment
variables and command-line flags, in that order of precedence
"""

import hashlib
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

from dotenv import load_dotenv

from src.core.caricature import Car1Config, Car2Config
from src.core.dla import MODES, RunConfig
from src.core.errors import ConfigError
from src.core.field import WINDOW_MODES
from src.core.lyapunov import MAX_Q, default_alphas
from src.core.rng import G_FAMILIES, GSpec
from src.logging_config import get_logger

logger = get_logger("config")

MODELS = ("dla", "car1", "car2")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
DEFAULT_PRESETS_PATH = Path(__file__).resolve().parent.parent / "presets"

# Keys that never change simulation output
NON_SEMANTIC_KEYS = {"seed", "output_dir", "threads", "log_level", "log_json"}


@dataclass
class ModelConfig:
    """Which model runs and its dynamics"""
    model: str = "dla"
    mu: float = 0.5
    D: float = 1.0
    p_plus: float = 0.5
    t_max: float = 1000.0
    mode: str = "exact"
    debug_invariants: bool = False


@dataclass
class GridConfig:
    """Geometric checkpoint grid t0 * ratio^j"""
    grid_t0: float = 1.0
    grid_ratio: float = 10 ** 0.1


@dataclass
class FastModeConfig:
    """Sleep/wake fast-forwarding"""
    zone_width: int = 64
    gap_min: int = 32
    eps_sleep: float = 1e-6


@dataclass
class WindowConfig:
    """Initial-field truncation"""
    eps_trunc: float = 1e-4
    window_mode: str = "auto"
    window_override: Optional[int] = None


@dataclass
class CaricatureConfig:
    """Caricature I and II settings"""
    J: int = 24
    x_init: List[int] = field(default_factory=list)
    g_family: str = "geometric"
    g_params: str = "0.5"


@dataclass
class DiagnosticsConfig:
    """Estimator settings"""
    alpha_list: List[float] = field(default_factory=list)
    q_list: List[int] = field(default_factory=lambda: [2])
    n_boot: int = 1000
    fit_t_lo: float = 100.0
    fit_t_hi: Optional[float] = None
    mu_list: List[float] = field(default_factory=lambda: [0.5, 0.8, 1.0, 1.1, 1.3])
    slope_threshold: float = 0.85
    validate_runs: int = 500


@dataclass
class EnsembleConfig:
    """Replication and seeding"""
    n_runs: int = 1
    seed: int = 0
    threads: int = 1


@dataclass
class OutputConfig:
    """Where result files go"""
    output_dir: str = "output"


@dataclass
class LoggingConfig:
    """Logging Configuration"""
    log_level: str = "INFO"
    log_json: bool = False


def _parse_bool(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: '{text}'")


def _parse_optional_int(text: str) -> Optional[int]:
    if str(text).strip().lower() in ("", "none", "auto"):
        return None
    return int(text)


def _parse_optional_float(text: str) -> Optional[float]:
    if str(text).strip().lower() in ("", "none", "auto"):
        return None
    return float(text)


def _parse_list(item: Callable[[str], Any]) -> Callable[[str], List[Any]]:
    def parse(text: str) -> List[Any]:
        return [item(part) for part in str(text).replace(";", ",").split(",") if part.strip()]
    return parse


def _strict_int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"not an integer: '{text}'")
    return int(value)


# key -> (section attribute, parser)
KEYS: Dict[str, Tuple[str, Callable[[str], Any]]] = {
    "model": ("model", str),
    "mu": ("model", float),
    "D": ("model", float),
    "p_plus": ("model", float),
    "t_max": ("model", float),
    "mode": ("model", str),
    "debug_invariants": ("model", _parse_bool),
    "grid_t0": ("grid", float),
    "grid_ratio": ("grid", float),
    "zone_width": ("fast", _strict_int),
    "gap_min": ("fast", _strict_int),
    "eps_sleep": ("fast", float),
    "eps_trunc": ("window", float),
    "window_mode": ("window", str),
    "window_override": ("window", _parse_optional_int),
    "J": ("caricature", _strict_int),
    "x_init": ("caricature", _parse_list(_strict_int)),
    "g_family": ("caricature", str),
    "g_params": ("caricature", str),
    "alpha_list": ("diagnostics", _parse_list(float)),
    "q_list": ("diagnostics", _parse_list(_strict_int)),
    "n_boot": ("diagnostics", _strict_int),
    "fit_t_lo": ("diagnostics", float),
    "fit_t_hi": ("diagnostics", _parse_optional_float),
    "mu_list": ("diagnostics", _parse_list(float)),
    "slope_threshold": ("diagnostics", float),
    "validate_runs": ("diagnostics", _strict_int),
    "n_runs": ("ensemble", _strict_int),
    "seed": ("ensemble", _strict_int),
    "threads": ("ensemble", _strict_int),
    "output_dir": ("output", str),
    "log_level": ("logging", lambda text: str(text).strip().upper()),
    "log_json": ("logging", _parse_bool),
}

ENVIRONMENT_KEYS = {
    "DLA1D_SEED": "seed",
    "DLA1D_OUTPUT_DIR": "output_dir",
    "DLA1D_LOG_LEVEL": "log_level",
}


def render_value(value: Any) -> str:
    """Canonical text form used by config echoes and the hash"""
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(render_value(v) for v in value)
    return str(value)


def parse_lines(lines: List[str], source: str = "<text>") -> Dict[str, str]:
    """key=value lines with '#' comments; several pairs may share a line"""
    pairs: Dict[str, str] = {}
    for number, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for token in line.split():
            if "=" not in token:
                raise ConfigError(f"expected key=value at {source}:{number}, got '{token}'", key=token)
            key, value = token.split("=", 1)
            pairs[key.strip()] = value.strip()
    return pairs


class SimConfig:
    """Effective configuration of one command invocation"""

    def __init__(self):
        self.model = ModelConfig()
        self.grid = GridConfig()
        self.fast = FastModeConfig()
        self.window = WindowConfig()
        self.caricature = CaricatureConfig()
        self.diagnostics = DiagnosticsConfig()
        self.ensemble = EnsembleConfig()
        self.output = OutputConfig()
        self.logging = LoggingConfig()

    # -- layering ------------------------------------------------------

    def set(self, key: str, value: Any) -> None:
        """Set one key, parsing text values; unknown keys are rejected"""
        if key not in KEYS:
            raise ConfigError("unknown configuration key", key=key)
        section_name, parser = KEYS[key]
        if isinstance(value, str):
            try:
                value = parser(value)
            except (TypeError, ValueError) as error:
                raise ConfigError(f"cannot parse '{value}': {error}", key=key)
        setattr(getattr(self, section_name), key, value)

    def update(self, values: Mapping[str, Any]) -> "SimConfig":
        for key, value in values.items():
            self.set(key, value)
        return self

    def load_file(self, config_file: str) -> "SimConfig":
        """Apply a key=value config file"""
        path = Path(config_file)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as error:
            raise ConfigError(f"cannot read config file {path}: {error}", key="config")
        self.update(parse_lines(text.splitlines(), source=str(path)))
        logger.info(f"[CONFIG] Loaded configuration from {path}")
        return self

    def load_environment_vars(self, environ: Optional[Mapping[str, str]] = None) -> "SimConfig":
        """Environment overrides; a .env file in the working directory is read first"""
        if environ is None:
            load_dotenv(override=False)
            environ = os.environ
        for variable, key in ENVIRONMENT_KEYS.items():
            value = environ.get(variable)
            if value:
                self.set(key, value)
        return self

    @classmethod
    def load(
        cls,
        config_file: Optional[str] = None,
        preset: Optional[str] = None,
        overrides: Optional[Mapping[str, Any]] = None,
        environ: Optional[Mapping[str, str]] = None,
        preset_manager: Optional["PresetManager"] = None,
    ) -> "SimConfig":
        """defaults < preset < config file < environment < overrides"""
        config = cls()
        if preset:
            manager = preset_manager or PresetManager()
            config.update(manager.get(preset))
        if config_file:
            config.load_file(config_file)
        config.load_environment_vars(environ)
        if overrides:
            config.update({k: v for k, v in overrides.items() if v is not None})
        config.validate()
        return config

    # -- access ----------------------------------------------------------

    def get(self, key: str) -> Any:
        if key not in KEYS:
            raise ConfigError("unknown configuration key", key=key)
        return getattr(getattr(self, KEYS[key][0]), key)

    def as_dict(self) -> Dict[str, Any]:
        return {key: self.get(key) for key in sorted(KEYS)}

    def to_lines(self) -> List[str]:
        return [f"{key}={render_value(value)}" for key, value in self.as_dict().items()]

    def config_hash(self) -> str:
        """First 16 hex digits of SHA-256 over the semantic key=value lines"""
        lines = [
            f"{key}={render_value(value)}"
            for key, value in self.as_dict().items()
            if key not in NON_SEMANTIC_KEYS
        ]
        return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()[:16]

    def save(self, config_file: str) -> Path:
        path = Path(config_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(self.to_lines()) + "\n", encoding="utf-8")
        logger.debug(f"[CONFIG] Configuration saved to {path}")
        return path

    @property
    def seed(self) -> int:
        return self.ensemble.seed

    @property
    def t_hi(self) -> float:
        return self.diagnostics.fit_t_hi if self.diagnostics.fit_t_hi is not None else self.model.t_max

    @property
    def alphas(self) -> List[float]:
        return list(self.diagnostics.alpha_list) or default_alphas(self.caricature.J)

    # -- validation and model configs ------------------------------------

    def validate(self) -> None:
        m = self.model
        if m.model not in MODELS:
            raise ConfigError(f"must be one of {', '.join(MODELS)}, got '{m.model}'", key="model")
        if m.mode not in MODES:
            raise ConfigError(f"must be one of {', '.join(MODES)}, got '{m.mode}'", key="mode")
        if self.window.window_mode not in WINDOW_MODES:
            raise ConfigError(f"must be one of {', '.join(WINDOW_MODES)}", key="window_mode")
        if self.caricature.g_family not in G_FAMILIES:
            raise ConfigError(f"must be one of {', '.join(G_FAMILIES)}", key="g_family")
        if self.ensemble.n_runs < 1:
            raise ConfigError(f"must be >= 1, got {self.ensemble.n_runs}", key="n_runs")
        if self.ensemble.seed < 0:
            raise ConfigError(f"must be >= 0, got {self.ensemble.seed}", key="seed")
        if self.ensemble.threads < 1:
            raise ConfigError(f"must be >= 1, got {self.ensemble.threads}", key="threads")
        if self.diagnostics.n_boot < 1:
            raise ConfigError(f"must be >= 1, got {self.diagnostics.n_boot}", key="n_boot")
        if any(not (math.isfinite(a) and a > 0) for a in self.diagnostics.alpha_list):
            raise ConfigError("alpha values must be positive", key="alpha_list")
        if not self.diagnostics.q_list or any(not 1 <= q <= MAX_Q for q in self.diagnostics.q_list):
            raise ConfigError(f"q values must lie in 1..{MAX_Q}", key="q_list")
        if self.logging.log_level not in LOG_LEVELS:
            raise ConfigError(f"must be one of {', '.join(LOG_LEVELS)}", key="log_level")
        if not self.output.output_dir:
            raise ConfigError("must not be empty", key="output_dir")
        # the model's own config object carries the remaining constraints
        self.model_config()

    def g_spec(self) -> GSpec:
        return GSpec.parse(self.caricature.g_family, self.caricature.g_params)

    def run_config(self, **changes: Any) -> RunConfig:
        m, g, f, w = self.model, self.grid, self.fast, self.window
        params = dict(
            mu=m.mu, T=m.t_max, D=m.D, p_plus=m.p_plus,
            grid_t0=g.grid_t0, grid_ratio=g.grid_ratio,
            mode=m.mode, zone_width=f.zone_width, gap_min=f.gap_min, eps_sleep=f.eps_sleep,
            eps_trunc=w.eps_trunc, window_mode=w.window_mode, window_override=w.window_override,
            debug_invariants=m.debug_invariants,
        )
        params.update(changes)
        return RunConfig(**params)

    def car1_config(self) -> Car1Config:
        m, c = self.model, self.caricature
        return Car1Config(
            mu=m.mu, T=m.t_max, J=c.J, x_init=tuple(c.x_init), D=m.D, p_plus=m.p_plus,
            grid_t0=self.grid.grid_t0, grid_ratio=self.grid.grid_ratio,
            eps_trunc=self.window.eps_trunc, window_override=self.window.window_override,
            debug_invariants=m.debug_invariants,
        )

    def car2_config(self, T: Optional[float] = None) -> Car2Config:
        m, c = self.model, self.caricature
        alpha = self.diagnostics.alpha_list[0] if self.diagnostics.alpha_list else None
        return Car2Config(
            J=c.J, G=self.g_spec(), T=T if T is not None else m.t_max, x_init=tuple(c.x_init),
            D=m.D, p_plus=m.p_plus, grid_t0=self.grid.grid_t0, grid_ratio=self.grid.grid_ratio,
            q_list=tuple(self.diagnostics.q_list), alpha=alpha, debug_invariants=m.debug_invariants,
        )

    def model_config(self):
        """RunConfig, Car1Config or Car2Config for the configured model"""
        model = self.model.model
        if model == "car1":
            return self.car1_config()
        if model == "car2":
            return self.car2_config()
        return self.run_config()


def parse_config(
    path: Optional[str] = None,
    flags: Optional[Mapping[str, Any]] = None,
    preset: Optional[str] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> SimConfig:
    """Validated configuration; flags override the file"""
    return SimConfig.load(config_file=path, preset=preset, overrides=flags, environ=environ)


class PresetManager:
    """Loads named parameter bundles from presets/*.conf"""

    def __init__(self, presets_path: Optional[str] = None):
        self.presets_path = Path(presets_path) if presets_path else DEFAULT_PRESETS_PATH
        self.presets: Dict[str, Dict[str, str]] = {}
        self.logger = get_logger("presets")
        self.load_all_presets()

    def load_all_presets(self) -> None:
        if not self.presets_path.exists():
            self.logger.warning(f"[WARNING] Presets directory not found: {self.presets_path}")
            return
        for file_path in sorted(self.presets_path.glob("*.conf")):
            try:
                values = parse_lines(file_path.read_text(encoding="utf-8").splitlines(), source=file_path.name)
                if self.validate_preset(values):
                    self.presets[file_path.stem] = values
                    self.logger.debug(f"[CONFIG] Loaded preset: {file_path.stem}")
                else:
                    self.logger.warning(f"[WARNING] Invalid preset file: {file_path.name}")
            except (OSError, ConfigError) as error:
                self.logger.error(f"[ERROR] Error loading preset {file_path.name}: {error}")

    @staticmethod
    def validate_preset(values: Mapping[str, str]) -> bool:
        return all(key in KEYS for key in values)

    def names(self) -> List[str]:
        return sorted(self.presets)

    def get(self, name: str) -> Dict[str, str]:
        if name not in self.presets:
            available = ", ".join(self.names()) or "none"
            raise ConfigError(f"unknown preset '{name}' (available: {available})", key="preset")
        return dict(self.presets[name])
