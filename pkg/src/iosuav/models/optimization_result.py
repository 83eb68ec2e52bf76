"""
Modelli dati per i risultati dell'ottimizzazione.

Contiene le tracce di convergenza dell'SCA, le stime Monte-Carlo del rate e il
risultato completo di uno schema (traiettoria, fasi, rate, traccia).
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .trajectory import PhaseSchedule, Trajectory


@dataclass
class ConvergenceRecord:
    """Una riga della traccia di convergenza"""
    iteration: int
    objective: float
    step_norm: float
    solver_iters: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "iteration": self.iteration,
            "objective": self.objective,
            "step_norm": self.step_norm,
            "solver_iters": self.solver_iters,
        }


@dataclass
class ConvergenceReport:
    """
    Traccia di convergenza di un ciclo iterativo (SCA o alternanza).

    Attributes:
        records: righe (iterazione, obiettivo, norma del passo, iterazioni del solutore)
        converged: True se la variazione relativa è scesa sotto la tolleranza
        stop_reason: "tolerance", "max_iters" o "no_ascent"
    """
    records: List[ConvergenceRecord] = field(default_factory=list)
    converged: bool = False
    stop_reason: str = ""

    @property
    def iterations(self) -> int:
        """Numero di iterazioni eseguite (la riga 0 è il punto iniziale)"""
        return max(len(self.records) - 1, 0)

    @property
    def objectives(self) -> List[float]:
        return [r.objective for r in self.records]

    @property
    def final_objective(self) -> Optional[float]:
        return self.records[-1].objective if self.records else None

    def add(self, iteration: int, objective: float, step_norm: float, solver_iters: int):
        self.records.append(ConvergenceRecord(iteration, objective, step_norm, solver_iters))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "iterations": self.iterations,
            "records": [r.to_dict() for r in self.records],
        }


@dataclass
class RateEstimate:
    """Stima Monte-Carlo del rate medio con semi-ampiezza al 95%"""
    mean: float
    half_width: float
    n_draws: int


@dataclass
class SchemeResult:
    """
    Risultato di uno schema (IA, RA, IA-FT, CUC) per una cella dello sweep.

    Attributes:
        scheme: nome dello schema
        trajectory: traiettoria finale
        phases: schedule delle fasi (N x M, vuota per CUC)
        det_rate: rate deterministico (obiettivo dell'ottimizzatore)
        mc_rate: rate medio Monte-Carlo
        mc_half_width: semi-ampiezza dell'intervallo al 95%
        trace: traccia di convergenza (None per gli schemi non iterativi)
        seed: seme del Monte-Carlo
        warm_start: inizializzazione che ha prodotto il risultato
        params: parametri salienti dello scenario
    """
    scheme: str
    trajectory: Trajectory
    phases: PhaseSchedule
    det_rate: float
    mc_rate: float
    mc_half_width: float
    trace: Optional[ConvergenceReport] = None
    seed: int = 0
    warm_start: str = ""
    params: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scheme": self.scheme,
            "det_rate": self.det_rate,
            "mc_rate": self.mc_rate,
            "mc_half_width": self.mc_half_width,
            "seed": self.seed,
            "warm_start": self.warm_start,
            "params": dict(self.params),
            "trajectory": self.trajectory.to_list(),
            "trace": self.trace.to_dict() if self.trace else None,
        }

    def get_summary(self) -> str:
        return (f"{self.scheme}: det={self.det_rate:.4f} bps/Hz, "
                f"mc={self.mc_rate:.4f} ± {self.mc_half_width:.4f} bps/Hz")
