# core/sca_trajectory.py
"""
Ottimizzazione della traiettoria a fasi fissate (ottime) tramite SCA.

Ogni iterazione:
    1. sostituzione e^{s} = |x - x_c|^3, e^{u_t} = d_{U,t}^4, e^{v} = d_{U,G}^(-alpha/2)
    2. coefficienti A, B, C_t, D dell'espansione al primo ordine dell'obiettivo
    3. assemblaggio del sottoproblema convesso (vincoli linearizzati + mobilità)
    4. soluzione con il metodo a barriera e aggiornamento della traiettoria

L'obiettivo (media di log2(1 + eta zeta^2)) è convesso in (s, u, v): la sua
linearizzazione è un minorante globale. Il minorante della tangente di |x - x_c|^3
vale solo dal lato del punto di espansione, quindi il lato è vincolato dove
domina la superficie; altrove il waypoint è libero di attraversare il piano.
Se questo passo non migliora il rate si prende il passo che vincola il lato
ovunque, e il ciclo resta monotono.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from iosuav.config.settings import SceneConfig, SolverSettings
from iosuav.core import scene
from iosuav.core.channel import LN2, SurfaceModel, model_rate, surface_model
from iosuav.core.error_handling import (
    DegenerateX,
    InfeasibleMission,
    MaxIterations,
    NumericalOverflow,
    SolverFailure,
)
from iosuav.core.subproblem_solver import ConvexProgram, solve
from iosuav.models.optimization_result import ConvergenceReport
from iosuav.models.trajectory import Trajectory, as_waypoints

logger = logging.getLogger(__name__)

# Tolleranza sulla salita monotona (in bps/Hz)
ASCENT_TOL = 1e-8
_EXP_LIMIT = 700.0


@dataclass
class SCAIterate:
    """
    Traiettoria con le variabili sostituite al punto di tangenza.

    Attributes:
        trajectory: waypoint (dopo l'eventuale spostamento dal piano)
        s: 3 ln|x - x_c|, shape (N,)
        u: 4 ln d_{U,t}, shape (N, T)
        v: -(alpha/2) ln d_{U,G}, shape (N,)
        obj: valore dell'obiettivo surrogato al punto
    """
    trajectory: Trajectory
    s: np.ndarray
    u: np.ndarray
    v: np.ndarray
    obj: float


@dataclass
class SubproblemSpec:
    """Dati di un sottoproblema linearizzato."""
    iterate: SCAIterate
    model: SurfaceModel
    A: np.ndarray           # (N,)
    B: np.ndarray           # (N,)
    C: np.ndarray           # (N, T)
    D: np.ndarray           # (N,)
    weights_s: np.ndarray   # B / (A ln2)
    weights_u: np.ndarray   # C / (A ln2)
    weights_v: np.ndarray   # D / (A ln2)
    q_start: np.ndarray
    q_end: np.ndarray
    step_max: float
    uav_altitude: float
    node_xy: np.ndarray
    alpha: float
    weights_v_direct: np.ndarray  # 2 eta V^2 / ((1 + eta V^2) ln2), solo cammino diretto
    dominant: np.ndarray          # (N,) bool, B >= D: il termine IOS domina

    @property
    def released(self) -> np.ndarray:
        """Slot in cui il waypoint può attraversare il piano della superficie"""
        return ~self.dominant


def init_trajectory(cfg: SceneConfig) -> Trajectory:
    """Interpolazione rettilinea uniforme q_0 -> q_F."""
    start = np.asarray(cfg.uav_start, dtype=float)
    end = np.asarray(cfg.uav_end, dtype=float)
    frac = np.linspace(0.0, 1.0, cfg.n_slots)[:, None]
    return Trajectory(start + frac * (end - start))


def log_objective(s, u, v, model: SurfaceModel, eta: float) -> np.ndarray:
    """log2(1 + eta (S + V)^2) per slot, con S = sum_t a_t e^{s - u_t}, V = K e^v."""
    s = np.asarray(s, dtype=float)
    ios = _ios_terms(s, np.asarray(u, dtype=float), model)
    total = ios.sum(axis=1) + model.los_gain * np.exp(np.asarray(v, dtype=float))
    return np.log1p(eta * total ** 2) / LN2


def _ios_terms(s: np.ndarray, u: np.ndarray, model: SurfaceModel) -> np.ndarray:
    if model.n_terms == 0:
        return np.zeros((s.shape[0], 0))
    with np.errstate(divide="ignore"):
        log_a = np.log(model.weights)
    exponent = log_a[None, :] + s[:, None] - u
    if np.any(exponent > _EXP_LIMIT):
        raise NumericalOverflow("surface terms", f"max exponent {float(exponent.max()):.1f}")
    return np.exp(exponent)


def _nudge(q: np.ndarray, cfg: SceneConfig, model: SurfaceModel) -> np.ndarray:
    """Sposta dal piano della superficie i waypoint liberi con |x - x_c| < x_guard."""
    offset = q[:, 0] - model.plane_x
    close = np.abs(offset) < cfg.x_guard
    if model.n_terms == 0 or not close.any():
        return q
    for n in (0, q.shape[0] - 1):
        if close[n]:
            raise DegenerateX(n, float(abs(offset[n])), cfg.x_guard)
    side = 1.0 if cfg.ground_node[0] >= model.plane_x else -1.0
    q = q.copy()
    q[close, 0] = model.plane_x + side * cfg.x_guard
    logger.debug(f"Nudged {int(close.sum())} waypoint(s) off the surface plane")
    return q


def substitute(Q, cfg: SceneConfig, model: Optional[SurfaceModel] = None) -> SCAIterate:
    """Variabili sostituite al punto di tangenza."""
    model = model or surface_model(cfg)
    q = _nudge(as_waypoints(Q).astype(float), cfg, model)
    offset = np.abs(q[:, 0] - model.plane_x)
    # senza superficie s non entra nel problema: basta che sia finito
    floor = cfg.x_guard if model.n_terms == 0 else 0.0
    s = 3.0 * np.log(np.maximum(offset, floor))
    if model.n_terms:
        diff = q[:, None, :] - model.positions[None, :, :2]
        d2 = np.sum(diff ** 2, axis=2) + (cfg.uav_altitude - model.positions[None, :, 2]) ** 2
        u = 2.0 * np.log(d2)
    else:
        u = np.zeros((q.shape[0], 0))
    d2_g = scene.uav_node_distances(q, cfg) ** 2
    v = -0.25 * cfg.path_loss_exp * np.log(d2_g)
    obj = float(np.mean(log_objective(s, u, v, model, cfg.eta)))
    return SCAIterate(Trajectory(q), s, u, v, obj)


def taylor_coefficients(it: SCAIterate, cfg: SceneConfig,
                        model: Optional[SurfaceModel] = None) -> SubproblemSpec:
    """Coefficienti A, B, C_t, D e pesi lineari del sottoproblema."""
    model = model or surface_model(cfg)
    eta = cfg.eta
    ios = _ios_terms(it.s, it.u, model)
    S = ios.sum(axis=1)
    with np.errstate(over="ignore"):
        V = model.los_gain * np.exp(it.v)
        total = S + V
        A = 1.0 + eta * total ** 2
        B = 2.0 * eta * S * total
        C = -2.0 * eta * total[:, None] * ios
        D = 2.0 * eta * V * total
        A_direct = 1.0 + eta * V ** 2
    for name, arr in (("A", A), ("B", B), ("C", C), ("D", D), ("A_direct", A_direct)):
        if not np.all(np.isfinite(arr)):
            raise NumericalOverflow(f"coefficient {name}")
    denom = A * LN2
    return SubproblemSpec(
        iterate=it, model=model, A=A, B=B, C=C, D=D,
        weights_s=B / denom, weights_u=C / denom[:, None], weights_v=D / denom,
        q_start=np.asarray(cfg.uav_start, dtype=float), q_end=np.asarray(cfg.uav_end, dtype=float),
        step_max=cfg.step_max, uav_altitude=cfg.uav_altitude,
        node_xy=np.asarray(cfg.ground_node, dtype=float), alpha=cfg.path_loss_exp,
        weights_v_direct=2.0 * eta * V ** 2 / (A_direct * LN2),
        dominant=(B >= D) & (S > 0),
    )


def assemble_subproblem(spec: SubproblemSpec, weight_floor: float = 1e-12,
                        release: bool = True) -> ConvexProgram:
    """Programma convesso del passo SCA corrente.

    I blocchi ausiliari con peso sotto weight_floor * (peso massimo) sono esclusi.
    Con release=True il vincolo sul lato della superficie resta solo negli slot
    dove domina il termine IOS; negli altri l'obiettivo usa il minorante del
    solo cammino diretto (log2(1 + eta V^2) <= log2(1 + eta (S + V)^2)) e il
    waypoint può attraversare il piano.
    """
    it, model = spec.iterate, spec.model
    q = it.trajectory.waypoints
    wmax = max(float(np.max(np.abs(w))) if np.size(w) else 0.0
               for w in (spec.weights_s, spec.weights_u, spec.weights_v))
    floor = weight_floor * wmax
    released = spec.released if release else np.zeros(q.shape[0], dtype=bool)
    weights_s = np.where(released, 0.0, spec.weights_s)
    weights_u = np.where(released[:, None], 0.0, spec.weights_u)
    weights_v = np.where(released, spec.weights_v_direct, spec.weights_v)
    active_s = weights_s > floor if model.n_terms else np.zeros(q.shape[0], dtype=bool)
    active_u = -weights_u > floor
    active_v = weights_v > floor
    return ConvexProgram(
        q_ref=q.copy(),
        q_start=spec.q_start, q_end=spec.q_end,
        step_max=spec.step_max,
        plane_x=model.plane_x,
        weights_s=weights_s, weights_u=weights_u, weights_v=weights_v,
        x_ref=q[:, 0] - model.plane_x,
        term_xy=model.positions[:, :2], term_dz2=(spec.uav_altitude - model.positions[:, 2]) ** 2,
        u_ref=it.u,
        node_xy=spec.node_xy, node_dz2=spec.uav_altitude ** 2,
        v_ref=it.v,
        alpha=spec.alpha,
        active_s=active_s, active_u=active_u, active_v=active_v,
        scale=1.0 / q.shape[0],
    )


def check_trajectory(Q, cfg: SceneConfig, rtol: float = 1e-9) -> Trajectory:
    """Verifica estremi e passo massimo di una traiettoria."""
    traj = Q if isinstance(Q, Trajectory) else Trajectory(as_waypoints(Q))
    if traj.n_slots != cfg.n_slots:
        raise ValueError(f"trajectory has {traj.n_slots} waypoints, scene expects {cfg.n_slots}")
    pins = max(np.linalg.norm(traj.waypoints[0] - cfg.uav_start),
               np.linalg.norm(traj.waypoints[-1] - cfg.uav_end))
    if pins > rtol * max(1.0, cfg.step_max):
        raise InfeasibleMission(float(pins), 0.0, "trajectory endpoints differ from q_0 / q_F")
    if traj.max_step() > cfg.step_max * (1.0 + rtol):
        raise InfeasibleMission(traj.max_step(), cfg.step_max, "trajectory step exceeds v_max * slot_len")
    return traj


def _sca_step(spec: SubproblemSpec, settings: SolverSettings, iteration: int,
              release: bool) -> Tuple[np.ndarray, int]:
    prog = assemble_subproblem(spec, settings.weight_floor, release=release)
    try:
        point, status = solve(prog, settings=settings)
        return point.q, status.newton_steps
    except MaxIterations as e:
        logger.warning(f"⚠️ SCA iteration {iteration}: {e}; using best feasible point")
        return e.best.q, settings.max_newton_total


def optimize_trajectory(Q_init, cfg: SceneConfig,
                        settings: Optional[SolverSettings] = None) -> Tuple[Trajectory, ConvergenceReport]:
    """Ciclo SCA fino a variazione relativa del rate < sca_tol o sca_max_iters.

    La traccia registra (iterazione, rate, norma del passo, passi di Newton);
    la riga 0 è il punto iniziale.
    """
    settings = settings or SolverSettings()
    scene.validate(cfg)
    model = surface_model(cfg)
    Q = check_trajectory(Q_init, cfg).waypoints.copy()
    rate = model_rate(Q, model, cfg)
    report = ConvergenceReport()
    report.add(0, rate, 0.0, 0)

    for iteration in range(1, cfg.sca_max_iters + 1):
        try:
            spec = taylor_coefficients(substitute(Q, cfg, model), cfg, model)
            q_new, solver_iters = _sca_step(spec, settings, iteration, release=True)
            rate_new = model_rate(q_new, model, cfg)
            # il passo con attraversamento non garantisce la salita: confronto
            # con il passo che mantiene il lato in ogni slot
            if model.n_terms and spec.released.any() and rate_new - rate < cfg.sca_tol * abs(rate):
                q_keep, keep_iters = _sca_step(spec, settings, iteration, release=False)
                rate_keep = model_rate(q_keep, model, cfg)
                solver_iters += keep_iters
                if rate_keep > rate_new:
                    q_new, rate_new = q_keep, rate_keep
        except SolverFailure as e:
            e.last_feasible = Trajectory(Q)
            raise

        if rate_new < rate - ASCENT_TOL:
            logger.warning(f"⚠️ SCA iteration {iteration}: rate dropped {rate:.6g} -> {rate_new:.6g}, step rejected")
            report.stop_reason = "no_ascent"
            break

        step_norm = float(np.linalg.norm(q_new - Q))
        report.add(iteration, rate_new, step_norm, solver_iters)
        change = abs(rate_new - rate) / abs(rate) if rate != 0 else abs(rate_new - rate)
        logger.info(f"📈 SCA {iteration}: rate={rate_new:.6f} bps/Hz, step={step_norm:.3g} m, "
                    f"newton={solver_iters}")
        Q, rate = q_new, rate_new
        if change < cfg.sca_tol:
            report.converged = True
            report.stop_reason = "tolerance"
            break
    else:
        report.stop_reason = "max_iters"

    return Trajectory(Q), report
