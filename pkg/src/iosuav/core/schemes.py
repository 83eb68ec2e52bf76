# core/schemes.py
"""
Schemi di valutazione con un contratto comune (SchemeResult):

    IA     superficie riflettente-trasmissiva, fasi e traiettoria ottimizzate
    RA     superficie solo riflettente (epsilon = 0) orientata verso G
    IA-FT  traiettoria fissa: volo verso G, hovering, volo verso q_F
    CUC    nessuna superficie (solo collegamento diretto)

Gli schemi iterativi partono da più inizializzazioni e tengono la migliore;
tutti condividono i campioni NLoS (stesso seme) nella stima Monte-Carlo.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from iosuav.config.settings import ExperimentSettings, SceneConfig
from iosuav.core import scene
from iosuav.core.channel import average_rate_estimate, deterministic_rate
from iosuav.core.error_handling import InfeasibleMission
from iosuav.core.phase_design import optimal_phases
from iosuav.core.sca_trajectory import init_trajectory, optimize_trajectory
from iosuav.models.optimization_result import ConvergenceReport, SchemeResult
from iosuav.models.trajectory import PhaseSchedule, Trajectory

logger = logging.getLogger(__name__)

SCHEMES = ("IA", "RA", "IA-FT", "CUC")


# ════════════════════════ VARIANTI DELLO SCENARIO ════════════════════════

def reflect_only_config(cfg: SceneConfig) -> SceneConfig:
    """Superficie solo riflettente con il lato riflessivo rivolto verso G."""
    toward_g = 1 if cfg.ground_node[0] >= cfg.ios_center[0] else -1
    return cfg.with_(epsilon=0.0, reflective_sign=toward_g)


def no_surface_config(cfg: SceneConfig) -> SceneConfig:
    return cfg.with_(n_elements=0)


def fixed_hover_trajectory(cfg: SceneConfig) -> Trajectory:
    """q_0 -> w_G a v_max, hovering su w_G, w_G -> q_F a v_max arrivando allo slot N.

    Le durate dei tratti sono arrotondate per eccesso a slot interi.
    """
    start = np.asarray(cfg.uav_start, dtype=float)
    end = np.asarray(cfg.uav_end, dtype=float)
    node = np.asarray(cfg.ground_node, dtype=float)
    step = cfg.step_max
    out_len = float(np.linalg.norm(node - start))
    back_len = float(np.linalg.norm(end - node))
    k_out = math.ceil(out_len / step - 1e-9) if out_len > 0 else 0
    k_back = math.ceil(back_len / step - 1e-9) if back_len > 0 else 0
    moves = cfg.n_slots - 1
    if k_out + k_back > moves:
        raise InfeasibleMission(out_len + back_len, moves * step, "fly-hover-fly legs exceed the mission time")

    waypoints = np.repeat(node[None, :], cfg.n_slots, axis=0)
    for n in range(k_out + 1):
        frac = min(n * step, out_len) / out_len if out_len > 0 else 1.0
        waypoints[n] = start + frac * (node - start)
    first_back = cfg.n_slots - 1 - k_back
    for j in range(k_back + 1):
        frac = min(j * step, back_len) / back_len if back_len > 0 else 0.0
        waypoints[first_back + j] = node + frac * (end - node)
    waypoints[0], waypoints[-1] = start, end
    return Trajectory(waypoints)


def hover_slots(cfg: SceneConfig) -> int:
    """Numero di waypoint di hovering su w_G nella traiettoria fissa."""
    traj = fixed_hover_trajectory(cfg)
    at_node = np.all(np.isclose(traj.waypoints, np.asarray(cfg.ground_node)), axis=1)
    return int(at_node.sum())


# ════════════════════════ ALTERNANZA FASI / TRAIETTORIA ════════════════════════

@dataclass
class AlternationOutcome:
    trajectory: Trajectory
    phases: PhaseSchedule
    rate: float
    report: ConvergenceReport
    start: str


def alternate(Q0: Trajectory, cfg: SceneConfig, settings: ExperimentSettings,
              start: str = "straight") -> AlternationOutcome:
    """Alterna fasi ottime e SCA finché la variazione relativa del rate è < sca_tol."""
    Q = Q0
    phases = optimal_phases(Q, cfg)
    rate = deterministic_rate(Q, cfg)
    report = ConvergenceReport()
    report.add(0, rate, 0.0, 0)
    for k in range(1, settings.max_alternations + 1):
        Q_new, sca_report = optimize_trajectory(Q, cfg, settings.solver)
        phases = optimal_phases(Q_new, cfg)
        rate_new = deterministic_rate(Q_new, cfg)
        solver_iters = sum(r.solver_iters for r in sca_report.records)
        report.add(k, rate_new, Q_new.distance_to(Q), solver_iters)
        change = abs(rate_new - rate) / abs(rate) if rate != 0 else abs(rate_new - rate)
        Q, rate = Q_new, rate_new
        if change < cfg.sca_tol:
            report.converged, report.stop_reason = True, "tolerance"
            break
    else:
        report.stop_reason = "max_iters"
    logger.info(f"🔁 Alternation from '{start}': rate={rate:.6f} bps/Hz after {report.iterations} round(s)")
    return AlternationOutcome(Q, phases, rate, report, start)


def best_of(starts: Dict[str, Trajectory], cfg: SceneConfig,
            settings: ExperimentSettings) -> AlternationOutcome:
    """Esegue l'alternanza da ogni inizializzazione e restituisce la migliore."""
    if not starts:
        starts = {"straight": init_trajectory(cfg)}
    best: Optional[AlternationOutcome] = None
    for name, Q0 in starts.items():
        outcome = alternate(Q0, cfg, settings, name)
        if best is None or outcome.rate > best.rate:
            best = outcome
    assert best is not None
    return best


def _base_starts(cfg: SceneConfig, settings: ExperimentSettings) -> Dict[str, Trajectory]:
    starts: Dict[str, Trajectory] = {}
    if "straight" in settings.warm_starts:
        starts["straight"] = init_trajectory(cfg)
    if "fixed_hover" in settings.warm_starts:
        try:
            starts["fixed_hover"] = fixed_hover_trajectory(cfg)
        except InfeasibleMission:
            logger.debug("fixed_hover warm start skipped: legs exceed mission time")
    return starts


# ════════════════════════ SCHEMI ════════════════════════

class SchemeRunner:
    """
    Esegue gli schemi su uno scenario condividendo i risultati intermedi
    (CUC e RA servono anche come inizializzazioni per IA).
    """

    def __init__(self, cfg: SceneConfig, seed: int = 0, settings: Optional[ExperimentSettings] = None):
        self.cfg = scene.validate(cfg)
        self.seed = seed
        self.settings = settings or ExperimentSettings()
        self._outcomes: Dict[str, AlternationOutcome] = {}
        self._results: Dict[str, SchemeResult] = {}

    def run(self, schemes: Iterable[str] = SCHEMES) -> Dict[str, SchemeResult]:
        out: Dict[str, SchemeResult] = {}
        for name in schemes:
            out[name] = self.result(name)
        return out

    def result(self, name: str) -> SchemeResult:
        if name not in SCHEMES:
            raise ValueError(f"Unknown scheme '{name}' (choose from {', '.join(SCHEMES)})")
        if name not in self._results:
            self._results[name] = self._build(name)
        return self._results[name]

    # ─────────────── percorsi ottimizzati ───────────────

    def _outcome(self, name: str) -> AlternationOutcome:
        if name in self._outcomes:
            return self._outcomes[name]
        cfg, settings = self.cfg, self.settings
        if name == "CUC":
            outcome = best_of(_base_starts(no_surface_config(cfg), settings), no_surface_config(cfg), settings)
        elif name == "RA":
            ra_cfg = reflect_only_config(cfg)
            starts = _base_starts(ra_cfg, settings)
            if cfg.n_elements and "direct_link" in settings.warm_starts:
                starts["direct_link"] = self._outcome("CUC").trajectory
            outcome = best_of(starts, ra_cfg, settings)
        elif name == "IA":
            starts = _base_starts(cfg, settings)
            if cfg.n_elements and "direct_link" in settings.warm_starts:
                starts["direct_link"] = self._outcome("CUC").trajectory
            if cfg.n_elements and "reflect_only" in settings.warm_starts:
                starts["reflect_only"] = self._outcome("RA").trajectory
            outcome = best_of(starts, cfg, settings)
        else:
            raise ValueError(f"Scheme '{name}' is not iterative")
        self._outcomes[name] = outcome
        return outcome

    def _build(self, name: str) -> SchemeResult:
        cfg = self.cfg
        if name == "IA-FT":
            scheme_cfg = cfg
            trajectory = fixed_hover_trajectory(cfg)
            phases = optimal_phases(trajectory, cfg)
            trace = ConvergenceReport(converged=True, stop_reason="fixed")
            trace.add(0, deterministic_rate(trajectory, cfg), 0.0, 0)
            start = "fixed_hover"
        else:
            scheme_cfg = {"IA": cfg, "RA": reflect_only_config(cfg), "CUC": no_surface_config(cfg)}[name]
            outcome = self._outcome(name)
            trajectory, phases, trace, start = outcome.trajectory, outcome.phases, outcome.report, outcome.start

        det = deterministic_rate(trajectory, scheme_cfg)
        mc = average_rate_estimate(trajectory, phases, scheme_cfg, self.settings.mc_draws,
                                   self.seed, self.settings.nlos_mode)
        result = SchemeResult(
            scheme=name, trajectory=trajectory, phases=phases,
            det_rate=det, mc_rate=mc.mean, mc_half_width=mc.half_width,
            trace=trace, seed=self.seed, warm_start=start,
            params=scheme_params(scheme_cfg),
        )
        logger.info(f"✅ {result.get_summary()} (start: {start})")
        return result


def scheme_params(cfg: SceneConfig) -> Dict[str, float]:
    return {
        "n_slots": cfg.n_slots,
        "mission_time": cfg.mission_time,
        "n_elements": cfg.n_elements,
        "epsilon": cfg.epsilon,
        "reflective_sign": cfg.reflective_sign,
        "rician_k": cfg.rician_k,
        "eta": cfg.eta,
    }


def run_schemes(cfg: SceneConfig, schemes: Iterable[str] = SCHEMES, seed: int = 0,
                settings: Optional[ExperimentSettings] = None) -> Dict[str, SchemeResult]:
    return SchemeRunner(cfg, seed, settings).run(schemes)


def run_ia(cfg: SceneConfig, seed: int = 0, settings: Optional[ExperimentSettings] = None) -> SchemeResult:
    return SchemeRunner(cfg, seed, settings).result("IA")


def run_ra(cfg: SceneConfig, seed: int = 0, settings: Optional[ExperimentSettings] = None) -> SchemeResult:
    return SchemeRunner(cfg, seed, settings).result("RA")


def run_ia_ft(cfg: SceneConfig, seed: int = 0, settings: Optional[ExperimentSettings] = None) -> SchemeResult:
    return SchemeRunner(cfg, seed, settings).result("IA-FT")


def run_cuc(cfg: SceneConfig, seed: int = 0, settings: Optional[ExperimentSettings] = None) -> SchemeResult:
    return SchemeRunner(cfg, seed, settings).result("CUC")


def closest_approach(result: SchemeResult, cfg: SceneConfig) -> float:
    """min_n ||q[n] - ios_center_xy||"""
    center = np.asarray(cfg.ios_center[:2], dtype=float)
    return float(np.min(np.linalg.norm(result.trajectory.waypoints - center, axis=1)))


def dominance_violations(results: Dict[str, SchemeResult], tol: float = 1e-8) -> List[Tuple[str, str, float]]:
    """Coppie (IA, altro) in cui IA ha rate deterministico inferiore."""
    if "IA" not in results:
        return []
    ia = results["IA"].det_rate
    return [("IA", name, res.det_rate - ia) for name, res in results.items()
            if name != "IA" and res.det_rate > ia + tol]
