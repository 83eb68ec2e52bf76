# settings.py
"""
Configurazione centralizzata dello scenario
(geometria, canale, mobilità, parametri della barriera, Monte-Carlo, …)

I documenti YAML hanno una chiave per ogni campo di SceneConfig più le sezioni
opzionali `solver:` ed `experiment:`. Le chiavi sconosciute sono un errore.
"""

import logging
import math
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml
from dotenv import load_dotenv

from iosuav.core.error_handling import ConfigError

logger = logging.getLogger(__name__)

load_dotenv('.env.local')

DEFAULT_CONFIG_FILE = "config.yaml"
LOG_LEVEL_ENV = "IOSUAV_LOG_LEVEL"


def dbm_to_watts(value_dbm: float) -> float:
    """Converte una potenza da dBm a watt (-80 dBm -> 1e-11 W)."""
    return 10.0 ** (value_dbm / 10.0) / 1000.0


def watts_to_dbm(value_w: float) -> float:
    """Converte una potenza da watt a dBm."""
    return 10.0 * math.log10(value_w * 1000.0)


@dataclass(frozen=True)
class SceneConfig:
    """Parametri fisici e di missione. Immutabile: usare `with_()` per varianti."""
    uav_altitude: float = 50.0
    uav_start: Tuple[float, float] = (-400.0, 20.0)
    uav_end: Tuple[float, float] = (400.0, 20.0)
    v_max: float = 25.0
    slot_len: float = 1.0
    n_slots: int = 50
    ground_node: Tuple[float, float] = (-100.0, -20.0)
    ios_center: Tuple[float, float, float] = (0.0, 0.0, 40.0)
    n_elements: int = 64
    elem_dy: float = 0.025
    elem_dz: float = 0.025
    elem_gain: float = 1.0
    power_ratio: float = 1.0        # |gamma|^2
    epsilon: float = 3.55           # rapporto riflesso/trasmesso
    tx_gain: float = 1.0
    rx_gain: float = 1.0
    tx_power: float = 0.1           # W
    noise_power: float = 1e-11      # W (-80 dBm)
    rician_k: float = 3.0
    path_loss_exp: float = 5.0
    wavelength: float = 0.05
    sca_tol: float = 1e-4
    sca_max_iters: int = 30
    x_guard: float = 1e-3
    reflective_sign: int = 1        # lato riflessivo: segno di (x_G - x_m)
    sca_tiles: int = 0              # 0 = ottimizzatore esatto per elemento

    @property
    def step_max(self) -> float:
        """Spostamento massimo per slot D = v_max * delta_t"""
        return self.v_max * self.slot_len

    @property
    def eta(self) -> float:
        """SNR di trasmissione P / sigma^2"""
        return self.tx_power / self.noise_power

    @property
    def mission_time(self) -> float:
        return self.n_slots * self.slot_len

    def with_(self, **changes: Any) -> "SceneConfig":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out


@dataclass(frozen=True)
class SolverSettings:
    """Parametri del metodo a barriera logaritmica"""
    t_init: float = 1.0
    t_growth: float = 10.0
    tol: float = 1e-8               # gap di dualità m/t
    newton_tol: float = 1e-10       # lambda^2 / 2 per la centratura
    max_newton_per_stage: int = 200
    max_newton_total: int = 5000
    line_alpha: float = 0.25
    line_beta: float = 0.5
    interior_margin: float = 1e-6
    feas_tol: float = 1e-8
    weight_floor: float = 1e-12


NLOS_MODES = ("split", "shared")
WARM_STARTS = ("straight", "fixed_hover", "direct_link", "reflect_only")


@dataclass(frozen=True)
class ExperimentSettings:
    """Impostazioni degli esperimenti (Monte-Carlo, inizializzazioni, solutore)"""
    mc_draws: int = 1000
    nlos_mode: str = "split"
    warm_starts: Tuple[str, ...] = WARM_STARTS
    max_alternations: int = 30
    solver: SolverSettings = field(default_factory=SolverSettings)

    def with_(self, **changes: Any) -> "ExperimentSettings":
        return replace(self, **changes)


# Profili: il file di configurazione sovrascrive campo per campo
PROFILES: Dict[str, Dict[str, Any]] = {
    "desk": {"n_slots": 50, "n_elements": 64, "sca_tiles": 0},
    "full": {"n_slots": 150, "n_elements": 6000, "sca_tiles": 64},
}

_SCENE_FIELDS = {f.name: f for f in fields(SceneConfig)}
_DBM_FIELDS = {"noise_power_dbm": "noise_power", "tx_power_dbm": "tx_power"}
_VECTOR_LEN = {"uav_start": 2, "uav_end": 2, "ground_node": 2, "ios_center": 3}
_INT_FIELDS = {"n_slots", "n_elements", "sca_max_iters", "reflective_sign", "sca_tiles"}


def load_yaml_config(config_file: Optional[str] = None) -> Dict[str, Any]:
    """Carica la configurazione dal file YAML.

    Senza percorso esplicito un `config.yaml` mancante equivale a un documento
    vuoto; un percorso esplicito mancante è un errore.
    """
    explicit = config_file is not None
    config_path = Path(config_file or DEFAULT_CONFIG_FILE)
    if not config_path.exists():
        if explicit:
            raise ConfigError(f"Config file not found: {config_path}")
        return {}

    try:
        with open(config_path, 'r', encoding='utf-8') as f:
            config = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Malformed YAML in {config_path}: {e}") from e

    if config is None:
        return {}
    if not isinstance(config, dict):
        raise ConfigError(f"Config root must be a mapping, got {type(config).__name__}")
    return config


def _as_float(key: str, value: Any) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"Field '{key}' must be numeric, got a boolean", key)
    if isinstance(value, str) and value.strip().lower() in ("inf", ".inf", "+inf", "infinity"):
        return math.inf
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Field '{key}' must be numeric, got {value!r}", key) from e


def _coerce(key: str, value: Any) -> Any:
    if key in _VECTOR_LEN:
        if not isinstance(value, (list, tuple)) or len(value) != _VECTOR_LEN[key]:
            raise ConfigError(f"Field '{key}' must be a list of {_VECTOR_LEN[key]} numbers", key)
        return tuple(_as_float(key, v) for v in value)
    number = _as_float(key, value)
    if key in _INT_FIELDS:
        if not math.isfinite(number) or number != int(number):
            raise ConfigError(f"Field '{key}' must be an integer, got {value!r}", key)
        return int(number)
    return number


def scene_from_dict(data: Dict[str, Any], base: Optional[SceneConfig] = None) -> SceneConfig:
    """Costruisce una SceneConfig da un dizionario (chiavi YAML).

    I campi `*_dbm` sono convertiti in watt; specificare lo stesso campo in
    entrambe le forme è un errore.
    """
    changes: Dict[str, Any] = {}
    for key, value in data.items():
        if key in _DBM_FIELDS:
            target = _DBM_FIELDS[key]
            if target in data:
                raise ConfigError(f"Both '{key}' and '{target}' given", key)
            changes[target] = dbm_to_watts(_as_float(key, value))
        elif key in _SCENE_FIELDS:
            changes[key] = _coerce(key, value)
        else:
            raise ConfigError(f"Unknown config key '{key}'", key)
    return replace(base or SceneConfig(), **changes)


def _section(data: Dict[str, Any], name: str, cls: type) -> Dict[str, Any]:
    section = data.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigError(f"Section '{name}' must be a mapping", name)
    allowed = {f.name for f in fields(cls)}
    for key in section:
        if key not in allowed:
            raise ConfigError(f"Unknown key '{name}.{key}'", f"{name}.{key}")
    return dict(section)


def settings_from_dict(data: Dict[str, Any]) -> ExperimentSettings:
    """Legge le sezioni opzionali `solver:` ed `experiment:`."""
    solver_kw = _section(data, "solver", SolverSettings)
    exp_kw = _section(data, "experiment", ExperimentSettings)
    exp_kw.pop("solver", None)
    if "warm_starts" in exp_kw:
        starts = tuple(str(s) for s in exp_kw["warm_starts"])
        unknown = [s for s in starts if s not in WARM_STARTS]
        if unknown:
            raise ConfigError(f"Unknown warm start(s): {', '.join(unknown)}", "experiment.warm_starts")
        exp_kw["warm_starts"] = starts
    if exp_kw.get("nlos_mode", "split") not in NLOS_MODES:
        raise ConfigError(f"nlos_mode must be one of {NLOS_MODES}", "experiment.nlos_mode")
    try:
        solver = SolverSettings(**{k: float(v) if k not in ("max_newton_per_stage", "max_newton_total")
                                   else int(v) for k, v in solver_kw.items()})
        return ExperimentSettings(solver=solver, **exp_kw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid solver/experiment settings: {e}") from e


def get_scene_config(profile: str = "desk") -> SceneConfig:
    """SceneConfig di default per un profilo"""
    if profile not in PROFILES:
        raise ConfigError(f"Unknown profile '{profile}' (choose from {', '.join(PROFILES)})", "profile")
    return replace(SceneConfig(), **PROFILES[profile])


def load_config(config_file: Optional[str] = None,
                profile: str = "desk") -> Tuple[SceneConfig, ExperimentSettings]:
    """Carica scenario e impostazioni: profilo, poi file YAML campo per campo."""
    data = load_yaml_config(config_file)
    scene_part = {k: v for k, v in data.items() if k not in ("solver", "experiment")}
    cfg = scene_from_dict(scene_part, base=get_scene_config(profile))
    settings = settings_from_dict(data)
    logger.debug(f"Loaded config (profile={profile}, file={config_file or DEFAULT_CONFIG_FILE})")
    return cfg, settings


def get_log_level(default: str = "INFO") -> int:
    """Livello di logging da IOSUAV_LOG_LEVEL (anche via .env.local)"""
    name = os.getenv(LOG_LEVEL_ENV, default).upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.INFO


CONFIG_TEMPLATE = """\
# iosuav scene configuration
# Units: metres, seconds, watts (fields ending in _dbm are converted to watts).

# --- mission -----------------------------------------------------------
uav_altitude: {uav_altitude}        # z_U, m
uav_start: [{uav_start[0]}, {uav_start[1]}]   # q_0, m
uav_end: [{uav_end[0]}, {uav_end[1]}]       # q_F, m
v_max: {v_max}                # m/s
slot_len: {slot_len}              # delta_t, s
n_slots: {n_slots}                # N (mission time T = N * delta_t)

# --- ground node and surface -------------------------------------------
ground_node: [{ground_node[0]}, {ground_node[1]}]
ios_center: [{ios_center[0]}, {ios_center[1]}, {ios_center[2]}]
n_elements: {n_elements}             # M
elem_dy: {elem_dy}
elem_dz: {elem_dz}
elem_gain: {elem_gain}
power_ratio: {power_ratio}            # |gamma|^2
epsilon: {epsilon}               # reflected/transmitted power ratio
reflective_sign: {reflective_sign}          # +1: reflective side where x_G > x_c

# --- radio ---------------------------------------------------------------
tx_gain: {tx_gain}
rx_gain: {rx_gain}
tx_power: {tx_power}              # W
noise_power_dbm: {noise_dbm}      # sigma^2
rician_k: {rician_k}              # .inf for pure LoS
path_loss_exp: {path_loss_exp}
wavelength: {wavelength}

# --- optimizer -------------------------------------------------------------
sca_tol: {sca_tol}
sca_max_iters: {sca_max_iters}
x_guard: {x_guard}
sca_tiles: {sca_tiles}                # 0 = exact per-element optimizer

solver:
  tol: {solver.tol}
  t_init: {solver.t_init}
  t_growth: {solver.t_growth}

experiment:
  mc_draws: {mc_draws}
  nlos_mode: {nlos_mode}
"""


def render_config_template(cfg: Optional[SceneConfig] = None,
                           settings: Optional[ExperimentSettings] = None) -> str:
    """Template YAML commentato con i valori di riferimento"""
    cfg = cfg or get_scene_config("desk")
    settings = settings or ExperimentSettings()
    values = cfg.to_dict()
    values.pop("noise_power")
    return CONFIG_TEMPLATE.format(
        noise_dbm=round(watts_to_dbm(cfg.noise_power), 6),
        solver=settings.solver,
        mc_draws=settings.mc_draws,
        nlos_mode=settings.nlos_mode,
        **values,
    )
