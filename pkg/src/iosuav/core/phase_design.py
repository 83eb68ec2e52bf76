# core/phase_design.py
"""
Progetto delle fasi della superficie.

Per una traiettoria fissata la fase ottima di ogni elemento allinea il cammino
via superficie al cammino diretto:

    psi_m[n] = wrap_2pi( 2*pi/lambda * (d_UG[n] - d_Um[n] - d_mG) )

così che |h^LoS| = sum_m |h_m^LoS| + |h_D^LoS|. Un oracolo esaustivo su griglia
verifica l'ottimalità su istanze piccole.
"""

import itertools
import logging
from typing import Tuple

import numpy as np

from iosuav.config.settings import SceneConfig
from iosuav.core import channel, scene
from iosuav.core.error_handling import InstanceTooLarge
from iosuav.models.trajectory import TWO_PI, PhaseSchedule, as_waypoints

logger = logging.getLogger(__name__)

ORACLE_MAX_ELEMENTS = 4
ORACLE_MAX_GRID = 64


def wrap_2pi(angle):
    """Riduce in [0, 2*pi); gestisce l'arrotondamento di np.mod a 2*pi."""
    wrapped = np.mod(angle, TWO_PI)
    return np.where(wrapped >= TWO_PI, 0.0, wrapped)


def path_difference_phase(d_ug, d_um, d_mg, wavelength: float):
    """Fase che compensa la differenza di cammino (d_UG - d_Um - d_mG)."""
    diff = np.asarray(d_ug, dtype=float) - np.asarray(d_um, dtype=float) - np.asarray(d_mg, dtype=float)
    cycles = np.mod(diff, wavelength) / wavelength
    result = wrap_2pi(TWO_PI * cycles)
    return float(result) if np.ndim(result) == 0 else result


def optimal_phases(Q, cfg: SceneConfig) -> PhaseSchedule:
    """Schedule ottima (N, M) in forma chiusa."""
    q = as_waypoints(Q)
    if cfg.n_elements == 0:
        return PhaseSchedule(np.zeros((q.shape[0], 0)))
    d_ug = scene.uav_node_distances(q, cfg)[:, None]
    d_um = scene.uav_element_distances(q, cfg)
    d_mg = scene.element_node_distances(cfg)[None, :]
    return PhaseSchedule(path_difference_phase(d_ug, d_um, d_mg, cfg.wavelength))


def los_power(q, psi_slot, cfg: SceneConfig, include_direct: bool = True) -> float:
    """|sum_m h_m^LoS (+ h_D^LoS)|^2 per uno slot, senza pesi di Rice"""
    q_arr = np.asarray(q, dtype=float).reshape(1, 2)
    total = complex(channel.direct_los_components(q_arr, cfg)[0]) if include_direct else 0j
    if cfg.n_elements:
        psi = np.asarray(psi_slot, dtype=float).reshape(1, cfg.n_elements)
        total += complex(channel.ios_los_components(q_arr, psi, cfg).sum())
    return abs(total) ** 2


def brute_force_phase_oracle(q, cfg: SceneConfig, grid_size: int) -> Tuple[np.ndarray, float]:
    """Ricerca esaustiva su {2*pi*k/grid_size}^M della potenza LoS.

    Restituisce (fasi migliori, potenza). Limiti: M <= 4, grid_size <= 64.
    """
    if cfg.n_elements > ORACLE_MAX_ELEMENTS:
        raise InstanceTooLarge("n_elements", cfg.n_elements, ORACLE_MAX_ELEMENTS)
    if grid_size > ORACLE_MAX_GRID or grid_size < 1:
        raise InstanceTooLarge("grid_size", grid_size, ORACLE_MAX_GRID)

    q_arr = np.asarray(q, dtype=float).reshape(1, 2)
    direct = complex(channel.direct_los_components(q_arr, cfg)[0])
    if cfg.n_elements == 0:
        return np.zeros(0), abs(direct) ** 2

    # Coefficienti a fase nulla: h_m(psi) = base_m * exp(-j psi)
    base = channel.ios_los_components(q_arr, np.zeros((1, cfg.n_elements)), cfg)[0]
    grid = TWO_PI * np.arange(grid_size) / grid_size
    rotations = np.exp(-1j * grid)

    best_power, best_combo = -1.0, None
    # Ciclo sul primo elemento, vettorizzato sugli altri
    rest = cfg.n_elements - 1
    if rest:
        tail = np.array(list(itertools.product(range(grid_size), repeat=rest)))
        tail_sum = (base[1:][None, :] * rotations[tail]).sum(axis=1)
    else:
        tail = np.zeros((1, 0), dtype=int)
        tail_sum = np.zeros(1, dtype=complex)
    for k in range(grid_size):
        power = np.abs(direct + base[0] * rotations[k] + tail_sum) ** 2
        idx = int(np.argmax(power))
        if power[idx] > best_power:
            best_power = float(power[idx])
            best_combo = np.concatenate([[k], tail[idx]])
    return grid[best_combo], best_power
