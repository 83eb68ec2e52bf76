"""
Modelli dati per traiettoria e schedule delle fasi.

Traiettoria: N waypoint orizzontali q[n] = (x[n], y[n]) alla quota fissa z_U.
PhaseSchedule: fasi psi_m[n] in [0, 2*pi), una riga per slot.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Union

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass
class Trajectory:
    """
    Sequenza di N waypoint orizzontali.

    Attributes:
        waypoints: array (N, 2) di coordinate [x, y] in metri
    """
    waypoints: np.ndarray

    def __post_init__(self):
        arr = np.array(self.waypoints, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"waypoints must have shape (N, 2), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("waypoints must be finite")
        self.waypoints = arr

    @property
    def n_slots(self) -> int:
        return self.waypoints.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.waypoints[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.waypoints[:, 1]

    def step_lengths(self) -> np.ndarray:
        """Lunghezze ||q[n] - q[n-1]||, n = 1..N-1"""
        return np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)

    def max_step(self) -> float:
        steps = self.step_lengths()
        return float(steps.max()) if steps.size else 0.0

    def distance_to(self, other: "Trajectory") -> float:
        """Norma di Frobenius della differenza tra due traiettorie"""
        return float(np.linalg.norm(self.waypoints - as_waypoints(other)))

    def copy(self) -> "Trajectory":
        return Trajectory(self.waypoints.copy())

    def to_list(self) -> List[List[float]]:
        return self.waypoints.tolist()


@dataclass
class PhaseSchedule:
    """
    Fasi degli elementi per slot.

    Attributes:
        phases: array (N, M) in radianti, ogni voce in [0, 2*pi)
    """
    phases: np.ndarray

    def __post_init__(self):
        arr = np.array(self.phases, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"phases must have shape (N, M), got {arr.shape}")
        if arr.size and (np.any(arr < 0.0) or np.any(arr >= TWO_PI) or not np.all(np.isfinite(arr))):
            raise ValueError("every phase must lie in [0, 2*pi)")
        self.phases = arr

    @property
    def n_slots(self) -> int:
        return self.phases.shape[0]

    @property
    def n_elements(self) -> int:
        return self.phases.shape[1]

    def slot(self, n: int) -> np.ndarray:
        return self.phases[n]

    def to_dict(self) -> Dict[str, Any]:
        return {"n_slots": self.n_slots, "n_elements": self.n_elements}


def as_waypoints(Q: Union[Trajectory, np.ndarray, List]) -> np.ndarray:
    """Array (N, 2) da Trajectory o array-like"""
    if isinstance(Q, Trajectory):
        return Q.waypoints
    arr = np.asarray(Q, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, 2)
    return arr
