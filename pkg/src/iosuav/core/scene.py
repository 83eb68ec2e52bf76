# core/scene.py
"""
Scenario fisico: validazione dei parametri, layout della griglia di elementi
della superficie e distanze UAV / elementi / nodo a terra.

Convenzioni: SI ovunque; la superficie giace nel piano y-z alla coordinata x
del suo centro; il nodo a terra G ha quota 0; l'UAV vola a quota fissa z_U.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple, Union

import numpy as np

from iosuav.config.settings import SceneConfig
from iosuav.core.error_handling import InfeasibleMission, NonPositiveParam
from iosuav.models.trajectory import Trajectory, as_waypoints

logger = logging.getLogger(__name__)

ArrayLike = Union[Trajectory, np.ndarray, list, tuple]

_STRICTLY_POSITIVE = (
    "uav_altitude", "v_max", "slot_len", "elem_dy", "elem_dz", "elem_gain",
    "power_ratio", "tx_gain", "rx_gain", "tx_power", "noise_power",
    "wavelength", "sca_tol", "x_guard",
)

# Tolleranza relativa sulla raggiungibilità (arrotondamenti nei dati YAML)
_REACH_RTOL = 1e-9


@dataclass(frozen=True)
class ElementLayout:
    """
    Griglia rettangolare di elementi nel piano y-z.

    Attributes:
        positions: array (M, 3) con [x_m, y_m, z_m]
        rows: numero di righe (lungo z)
        cols: numero di colonne (lungo y)
    """
    positions: np.ndarray
    rows: int
    cols: int

    @property
    def n_elements(self) -> int:
        return self.positions.shape[0]

    @property
    def horizontal(self) -> np.ndarray:
        """Coordinate orizzontali w_m = [x_m, y_m], shape (M, 2)"""
        return self.positions[:, :2]

    @property
    def heights(self) -> np.ndarray:
        return self.positions[:, 2]

    @property
    def extent(self) -> Tuple[float, float]:
        """Estensione (lungo y, lungo z) in metri"""
        if self.n_elements == 0:
            return (0.0, 0.0)
        span = self.positions.max(axis=0) - self.positions.min(axis=0)
        return (float(span[1]), float(span[2]))


def most_square_factors(count: int) -> Tuple[int, int]:
    """Coppia di fattori (a, b), a <= b, a * b = count, con a massimo."""
    if count <= 0:
        return (0, 0)
    a = int(math.isqrt(count))
    while count % a:
        a -= 1
    return (a, count // a)


def validate(cfg: SceneConfig) -> SceneConfig:
    """Verifica gli invarianti dello scenario; restituisce cfg invariata.

    Solleva NonPositiveParam (con il nome del campo) o InfeasibleMission.
    """
    for name, value in cfg.to_dict().items():
        if name in ("rician_k", "sca_tol"):
            continue
        values = value if isinstance(value, list) else [value]
        if not all(math.isfinite(v) for v in values):
            raise NonPositiveParam(name, value, "finite")

    for name in _STRICTLY_POSITIVE:
        if not getattr(cfg, name) > 0:
            raise NonPositiveParam(name, getattr(cfg, name))
    if not cfg.rician_k >= 0:
        raise NonPositiveParam("rician_k", cfg.rician_k, ">= 0")
    if not cfg.epsilon >= 0:
        raise NonPositiveParam("epsilon", cfg.epsilon, ">= 0")
    if not cfg.path_loss_exp >= 2:
        raise NonPositiveParam("path_loss_exp", cfg.path_loss_exp, ">= 2")
    if cfg.n_slots < 2:
        raise NonPositiveParam("n_slots", cfg.n_slots, ">= 2")
    if cfg.n_elements < 0:
        raise NonPositiveParam("n_elements", cfg.n_elements, ">= 0")
    if cfg.sca_max_iters < 1:
        raise NonPositiveParam("sca_max_iters", cfg.sca_max_iters, ">= 1")
    if cfg.sca_tiles < 0:
        raise NonPositiveParam("sca_tiles", cfg.sca_tiles, ">= 0")
    if cfg.reflective_sign not in (-1, 1):
        raise NonPositiveParam("reflective_sign", cfg.reflective_sign, "either -1 or +1")

    height = cfg.ios_center[2]
    if not 0 < height < cfg.uav_altitude:
        raise NonPositiveParam("ios_center", cfg.ios_center, "at a height in (0, uav_altitude)")
    rows, _ = most_square_factors(cfg.n_elements)
    if rows and height - 0.5 * (rows - 1) * cfg.elem_dz <= 0:
        raise NonPositiveParam("elem_dz", cfg.elem_dz, "small enough to keep every element above ground")

    distance = float(np.hypot(cfg.uav_end[0] - cfg.uav_start[0], cfg.uav_end[1] - cfg.uav_start[1]))
    # N waypoint con estremi fissati: N-1 spostamenti
    reach = (cfg.n_slots - 1) * cfg.step_max
    if distance > reach * (1.0 + _REACH_RTOL):
        raise InfeasibleMission(distance, reach, f"N={cfg.n_slots}, D={cfg.step_max:g}")
    return cfg


@lru_cache(maxsize=64)
def _grid(n_elements: int, dy: float, dz: float,
          center: Tuple[float, float, float]) -> Tuple[np.ndarray, int, int]:
    rows, cols = most_square_factors(n_elements)
    if n_elements == 0:
        positions = np.zeros((0, 3))
    else:
        y = center[1] + (np.arange(cols) - 0.5 * (cols - 1)) * dy
        z = center[2] + (np.arange(rows) - 0.5 * (rows - 1)) * dz
        zz, yy = np.meshgrid(z, y, indexing="ij")
        positions = np.column_stack([
            np.full(n_elements, float(center[0])), yy.ravel(), zz.ravel()])
    positions.setflags(write=False)
    return positions, rows, cols


def layout_elements(cfg: SceneConfig) -> ElementLayout:
    """Griglia di M elementi centrata su ios_center (righe lungo z, colonne lungo y)."""
    positions, rows, cols = _grid(cfg.n_elements, cfg.elem_dy, cfg.elem_dz, tuple(cfg.ios_center))
    return ElementLayout(positions, rows, cols)


# ════════════════════════ DISTANZE SCALARI ════════════════════════

def dist_uav_elem(q, cfg: SceneConfig, m: int) -> float:
    """d_{U,m} = sqrt(||q - w_m||^2 + (z_U - z_m)^2)"""
    p = layout_elements(cfg).positions[m]
    return float(math.sqrt((q[0] - p[0]) ** 2 + (q[1] - p[1]) ** 2 + (cfg.uav_altitude - p[2]) ** 2))


def dist_elem_gn(cfg: SceneConfig, m: int) -> float:
    """d_{m,G} = sqrt(||w_G - w_m||^2 + z_m^2)"""
    p = layout_elements(cfg).positions[m]
    g = cfg.ground_node
    return float(math.sqrt((g[0] - p[0]) ** 2 + (g[1] - p[1]) ** 2 + p[2] ** 2))


def dist_uav_gn(q, cfg: SceneConfig) -> float:
    """d_{U,G} = sqrt(||q - w_G||^2 + z_U^2)"""
    g = cfg.ground_node
    return float(math.sqrt((q[0] - g[0]) ** 2 + (q[1] - g[1]) ** 2 + cfg.uav_altitude ** 2))


# ════════════════════════ DISTANZE VETTORIALI ════════════════════════

def uav_element_distances(Q: ArrayLike, cfg: SceneConfig) -> np.ndarray:
    """Matrice (N, M) delle distanze d_{U,m}[n]"""
    q = as_waypoints(Q)
    pos = layout_elements(cfg).positions
    dxy = q[:, None, :] - pos[None, :, :2]
    dz = cfg.uav_altitude - pos[None, :, 2]
    return np.sqrt(np.sum(dxy ** 2, axis=2) + dz ** 2)


def element_node_distances(cfg: SceneConfig) -> np.ndarray:
    """Vettore (M,) delle distanze d_{m,G}"""
    pos = layout_elements(cfg).positions
    g = np.asarray(cfg.ground_node, dtype=float)
    return np.sqrt(np.sum((pos[:, :2] - g) ** 2, axis=1) + pos[:, 2] ** 2)


def uav_node_distances(Q: ArrayLike, cfg: SceneConfig) -> np.ndarray:
    """Vettore (N,) delle distanze d_{U,G}[n]"""
    q = as_waypoints(Q)
    g = np.asarray(cfg.ground_node, dtype=float)
    return np.sqrt(np.sum((q - g) ** 2, axis=1) + cfg.uav_altitude ** 2)
