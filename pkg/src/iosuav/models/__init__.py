"""
Modelli di dati dell'ottimizzatore.

Traiettorie, schedule delle fasi, tracce di convergenza e risultati degli schemi.
"""

from .trajectory import PhaseSchedule, Trajectory, as_waypoints
from .optimization_result import (
    ConvergenceRecord,
    ConvergenceReport,
    RateEstimate,
    SchemeResult,
)

__all__ = [
    "Trajectory",
    "PhaseSchedule",
    "as_waypoints",
    "ConvergenceRecord",
    "ConvergenceReport",
    "RateEstimate",
    "SchemeResult",
]
