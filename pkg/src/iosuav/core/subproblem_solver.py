# core/subproblem_solver.py
"""
Solutore a barriera logaritmica per il sottoproblema convesso della traiettoria.

Variabili: waypoint q[n] in R^2, ausiliarie s[n], u_t[n], v[n].
Obiettivo lineare da massimizzare: scale * sum(w_s s + w_u u + w_v v).
Famiglie di vincoli:
    exp17   e^{s[n]} <= |X^l|^3 + 3 X^l |X^l| (X[n] - X^l)       (X = x - x_c)
    quad18  d_{U,t}^2[n] <= c18 (1 + (u_t[n] - u_ref)/2),   c18 = e^{u_ref/2}
    quad19  d_{U,G}^2[n] <= c19 (1 - 4 (v[n] - v_ref)/alpha),  c19 = e^{-4 v_ref/alpha}
    ball    ||q[n] - q[n-1]||^2 <= D^2
    pin     q[0] = q_start, q[N-1] = q_end

Ogni variabile ausiliaria compare in un solo vincolo: il passo di Newton le
elimina in forma chiusa e fattorizza solo il sistema 2F x 2F nei waypoint liberi.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from iosuav.config.settings import SolverSettings
from iosuav.core.error_handling import (
    IllConditioned,
    MaxIterations,
    NumericalOverflow,
    SolverFailure,
)

logger = logging.getLogger(__name__)

FAMILIES = ("exp17", "quad18", "quad19", "ball", "pin")
BLEND_STEPS = (1e-6, 1e-4, 1e-2, 0.1, 0.5, 1.0)
_MAX_BACKTRACKS = 60
_MIN_STEP = 1e-14
_LOG_FLOOR = 1e-300


@dataclass
class ProgramPoint:
    """Punto del sottoproblema: q (N, 2), s (N,), u (N, T), v (N,)"""
    q: np.ndarray
    s: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def copy(self) -> "ProgramPoint":
        return ProgramPoint(self.q.copy(), self.s.copy(), self.u.copy(), self.v.copy())


@dataclass
class ConvexProgram:
    """
    Sottoproblema convesso: obiettivo lineare e vincoli per famiglia.

    I pesi dell'obiettivo sono per slot; `scale` (tipicamente 1/N) li
    trasforma nella media sugli slot.
    """
    q_ref: np.ndarray           # (N, 2) punto di espansione
    q_start: np.ndarray         # (2,)
    q_end: np.ndarray           # (2,)
    step_max: float
    plane_x: float
    weights_s: np.ndarray       # (N,)
    weights_u: np.ndarray       # (N, T)
    weights_v: np.ndarray       # (N,)
    x_ref: np.ndarray           # (N,) X^l = x^l - x_c
    term_xy: np.ndarray         # (T, 2)
    term_dz2: np.ndarray        # (T,) (z_U - z_t)^2
    u_ref: np.ndarray           # (N, T)
    node_xy: np.ndarray         # (2,)
    node_dz2: float             # z_U^2
    v_ref: np.ndarray           # (N,)
    alpha: float
    active_s: np.ndarray        # (N,) bool
    active_u: np.ndarray        # (N, T) bool
    active_v: Optional[np.ndarray] = None  # (N,) bool, default tutti attivi
    scale: float = 1.0
    tangent_base: np.ndarray = field(init=False, repr=False)
    tangent_slope: np.ndarray = field(init=False, repr=False)
    c18: np.ndarray = field(init=False, repr=False)
    c19: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.active_v is None:
            self.active_v = np.ones(self.n_slots, dtype=bool)
        self.tangent_base = np.abs(self.x_ref) ** 3
        self.tangent_slope = 3.0 * self.x_ref * np.abs(self.x_ref)
        with np.errstate(over="ignore"):
            self.c18 = np.exp(0.5 * self.u_ref)
            self.c19 = np.exp(-4.0 * self.v_ref / self.alpha)
        if not (np.all(np.isfinite(self.c18)) and np.all(np.isfinite(self.c19))):
            raise NumericalOverflow("linearization constants", "e^{u/2} or e^{-4v/alpha}")

    @property
    def n_slots(self) -> int:
        return self.q_ref.shape[0]

    @property
    def n_terms(self) -> int:
        return self.term_xy.shape[0]

    @property
    def free(self) -> np.ndarray:
        mask = np.ones(self.n_slots, dtype=bool)
        mask[0] = False
        mask[-1] = False
        return mask

    @property
    def ball_mask(self) -> np.ndarray:
        free = self.free
        return free[1:] | free[:-1]

    @property
    def n_barrier_terms(self) -> int:
        return int(self.active_s.sum() + self.active_u.sum() + self.active_v.sum() + self.ball_mask.sum())

    # ─────────────── valutazioni ───────────────

    def tangent(self, q: np.ndarray) -> np.ndarray:
        """Lato destro di exp17 in X = x - x_c"""
        return self.tangent_base + self.tangent_slope * (q[:, 0] - self.plane_x - self.x_ref)

    def term_sq_distances(self, q: np.ndarray) -> np.ndarray:
        diff = q[:, None, :] - self.term_xy[None, :, :]
        return np.sum(diff ** 2, axis=2) + self.term_dz2[None, :]

    def node_sq_distances(self, q: np.ndarray) -> np.ndarray:
        return np.sum((q - self.node_xy) ** 2, axis=1) + self.node_dz2

    def slacks(self, z: ProgramPoint) -> Dict[str, np.ndarray]:
        """Slack (>= 0 ammissibile) di tutti i vincoli, non normalizzati"""
        steps = np.diff(z.q, axis=0)
        return {
            "exp17": self.tangent(z.q) - np.exp(z.s),
            "quad18": self.c18 * (1.0 + 0.5 * (z.u - self.u_ref)) - self.term_sq_distances(z.q),
            "quad19": self.c19 * (1.0 - 4.0 * (z.v - self.v_ref) / self.alpha) - self.node_sq_distances(z.q),
            "ball": self.step_max ** 2 - np.sum(steps ** 2, axis=1),
        }

    def active_aux(self, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Valori (s, u, v) che rendono attivi exp17, quad18, quad19 in q"""
        tangent = self.tangent(q)
        s = np.log(np.maximum(tangent, _LOG_FLOOR))
        u = self.u_ref + 2.0 * (self.term_sq_distances(q) / self.c18 - 1.0)
        v = self.v_ref + 0.25 * self.alpha * (1.0 - self.node_sq_distances(q) / self.c19)
        return s, u, v

    def objective(self, z: ProgramPoint) -> float:
        total = np.sum(self.weights_s * z.s) + np.sum(self.weights_u * z.u) + np.sum(self.weights_v * z.v)
        return float(self.scale * total)

    def expansion_point(self) -> ProgramPoint:
        """Punto di espansione con vincoli curvi attivi"""
        s, u, v = self.active_aux(self.q_ref)
        return ProgramPoint(self.q_ref.copy(), s, u, v)


@dataclass
class SolveStatus:
    """Esito di una risoluzione a barriera"""
    converged: bool
    outer_iterations: int
    newton_steps: int
    gap: float
    max_violation: float
    kkt_residual: float = 0.0
    objective: float = 0.0

    def to_dict(self) -> Dict[str, Union[bool, int, float]]:
        return {
            "converged": self.converged,
            "outer_iterations": self.outer_iterations,
            "newton_steps": self.newton_steps,
            "gap": self.gap,
            "max_violation": self.max_violation,
            "kkt_residual": self.kkt_residual,
            "objective": self.objective,
        }


# ════════════════════════ FEASIBILITY ════════════════════════

def check_feasibility(prog: ConvexProgram, point: ProgramPoint) -> Dict[str, float]:
    """Massima violazione per famiglia (<= 0 se ammissibile).

    exp17/quad18/quad19 sono relative alla scala del punto di espansione
    (|X^l|^3, c18, c19); ball e pin sono assolute.
    """
    slack = prog.slacks(point)
    scale17 = np.maximum(prog.tangent_base, _LOG_FLOOR)

    def _max(values: np.ndarray) -> float:
        return float(values.max()) if values.size else 0.0

    pins = np.array([np.linalg.norm(point.q[0] - prog.q_start), np.linalg.norm(point.q[-1] - prog.q_end)])
    return {
        "exp17": _max((-slack["exp17"] / scale17)[prog.active_s]),
        "quad18": _max((-slack["quad18"] / prog.c18)[prog.active_u]),
        "quad19": _max((-slack["quad19"] / prog.c19)[prog.active_v]),
        "ball": _max(-slack["ball"]),
        "pin": float(pins.max()),
    }


def max_violation(prog: ConvexProgram, point: ProgramPoint) -> float:
    return max(0.0, max(check_feasibility(prog, point).values()))


# ════════════════════════ BARRIERA ════════════════════════

class _Barrier:
    """Valutazioni di barriera e passo di Newton ridotto per un valore di t."""

    def __init__(self, prog: ConvexProgram):
        self.prog = prog
        self.free = prog.free
        self.free_idx = np.flatnonzero(self.free)
        self.ball = prog.ball_mask
        self.cs = prog.scale * np.where(prog.active_s, prog.weights_s, 0.0)
        self.cu = prog.scale * np.where(prog.active_u, prog.weights_u, 0.0)
        self.cv = prog.scale * np.where(prog.active_v, prog.weights_v, 0.0)
        self.gamma18 = 0.5 * prog.c18
        self.gamma19 = -4.0 * prog.c19 / prog.alpha

    def barrier_slacks(self, z: ProgramPoint) -> np.ndarray:
        """Slack dei soli vincoli nella barriera, concatenati"""
        sl = self.prog.slacks(z)
        return np.concatenate([
            sl["exp17"][self.prog.active_s],
            sl["quad18"][self.prog.active_u],
            sl["quad19"][self.prog.active_v],
            sl["ball"][self.ball],
        ])

    def linear_value(self, dz: ProgramPoint) -> float:
        return float(np.sum(self.cs * dz.s) + np.sum(self.cu * dz.u) + np.sum(self.cv * dz.v))

    def newton_step(self, z: ProgramPoint, t: float) -> Tuple[ProgramPoint, float]:
        """Direzione di Newton completa e decremento lambda^2."""
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return self._newton_step(z, t)

    def _newton_step(self, z: ProgramPoint, t: float) -> Tuple[ProgramPoint, float]:
        prog = self.prog
        n = prog.n_slots
        sl = prog.slacks(z)
        act_s, act_u, act_v = prog.active_s, prog.active_u, prog.active_v

        tangent = prog.tangent(z.q)
        es = np.exp(z.s)
        r17 = np.where(act_s, sl["exp17"], 1.0)
        r18 = np.where(act_u, sl["quad18"], 1.0)
        r19 = np.where(act_v, sl["quad19"], 1.0)
        rb = sl["ball"]
        slope = prog.tangent_slope
        diff_t = z.q[:, None, :] - prog.term_xy[None, :, :]        # (N, T, 2)
        diff_g = z.q - prog.node_xy                                 # (N, 2)
        steps = np.diff(z.q, axis=0)                                # (N-1, 2)

        # Gradiente completo della barriera
        g_s = np.where(act_s, -t * self.cs + es / r17, 0.0)
        g_u = np.where(act_u, -t * self.cu - self.gamma18 / r18, 0.0)
        g_v = np.where(act_v, -t * self.cv - self.gamma19 / r19, 0.0)
        g_q = np.zeros((n, 2))
        g_q[:, 0] += np.where(act_s, -slope / r17, 0.0)
        g_q += np.sum(np.where(act_u, 2.0 / r18, 0.0)[:, :, None] * diff_t, axis=1)
        g_q += np.where(act_v, 2.0 / r19, 0.0)[:, None] * diff_g
        ball_grad = np.where(self.ball, 2.0 / np.where(self.ball, rb, 1.0), 0.0)[:, None] * steps
        g_q[1:] += ball_grad
        g_q[:-1] -= ball_grad

        # Sistema ridotto sui waypoint liberi (ausiliarie eliminate)
        hd = np.zeros((n, 2, 2))
        rhs = np.zeros((n, 2))
        hd[:, 0, 0] += np.where(act_s, slope ** 2 / (r17 * tangent), 0.0)
        rhs[:, 0] += np.where(act_s, slope * (1.0 + t * self.cs) / tangent, 0.0)
        inv18 = np.where(act_u, 2.0 / r18, 0.0).sum(axis=1)
        coef18 = np.where(act_u, 2.0 * t * self.cu / self.gamma18, 0.0)
        rhs += np.sum(coef18[:, :, None] * diff_t, axis=1)
        inv19 = np.where(act_v, 2.0 / r19, 0.0)
        rhs += np.where(act_v, 2.0 * t * self.cv / self.gamma19, 0.0)[:, None] * diff_g
        eye = np.eye(2)
        hd += (inv18 + inv19)[:, None, None] * eye

        rb_safe = np.where(self.ball, rb, 1.0)
        hb = (4.0 * steps[:, :, None] * steps[:, None, :] / rb_safe[:, None, None] ** 2
              + (2.0 / rb_safe)[:, None, None] * eye)
        hb[~self.ball] = 0.0
        hd[1:] += hb
        hd[:-1] += hb
        rhs[1:] -= ball_grad
        rhs[:-1] += ball_grad

        dq = np.zeros((n, 2))
        free_idx = self.free_idx
        if free_idx.size:
            f = free_idx.size
            pos = {slot: k for k, slot in enumerate(free_idx)}
            H = np.zeros((2 * f, 2 * f))
            for k, slot in enumerate(free_idx):
                H[2 * k:2 * k + 2, 2 * k:2 * k + 2] = hd[slot]
                nxt = pos.get(slot + 1)
                if nxt is not None:
                    # segmento slot -> slot+1
                    H[2 * k:2 * k + 2, 2 * nxt:2 * nxt + 2] = -hb[slot]
                    H[2 * nxt:2 * nxt + 2, 2 * k:2 * k + 2] = -hb[slot]
            b = rhs[free_idx].ravel()
            diag = np.diag(H)
            if not np.all(np.isfinite(H)) or np.any(diag <= 0):
                raise IllConditioned("non-finite or non-positive diagonal")
            d = 1.0 / np.sqrt(diag)
            try:
                factor = cho_factor(H * d[:, None] * d[None, :], lower=False, check_finite=True)
                sol = cho_solve(factor, b * d) * d
            except (LinAlgError, ValueError) as e:
                raise IllConditioned(str(e)) from e
            dq[free_idx] = sol.reshape(f, 2)

        dx = dq[:, 0]
        ds = np.where(act_s, (t * self.cs * r17 ** 2 / es - r17 + slope * dx) / tangent, 0.0)
        proj_t = np.sum(diff_t * dq[:, None, :], axis=2)
        du = np.where(act_u, t * self.cu * r18 ** 2 / self.gamma18 ** 2 + r18 / self.gamma18
                      + 2.0 * proj_t / self.gamma18, 0.0)
        proj_g = np.sum(diff_g * dq, axis=1)
        dv = np.where(act_v, t * self.cv * r19 ** 2 / self.gamma19 ** 2 + r19 / self.gamma19
                      + 2.0 * proj_g / self.gamma19, 0.0)

        step = ProgramPoint(dq, ds, du, dv)
        decrement = -(np.sum(g_q[self.free] * dq[self.free]) + np.sum(g_s * ds)
                      + np.sum(g_u * du) + np.sum(g_v * dv))
        return step, abs(float(decrement))


def _advance(z: ProgramPoint, dz: ProgramPoint, step: float) -> ProgramPoint:
    return ProgramPoint(z.q + step * dz.q, z.s + step * dz.s, z.u + step * dz.u, z.v + step * dz.v)


def _line_search(barrier: _Barrier, z: ProgramPoint, dz: ProgramPoint, t: float,
                 decrement: float, settings: SolverSettings) -> float:
    """Backtracking: prima ammissibilità stretta, poi condizione di Armijo."""
    r_old = barrier.barrier_slacks(z)
    lin = barrier.linear_value(dz)
    step = 1.0
    for _ in range(_MAX_BACKTRACKS):
        trial = _advance(z, dz, step)
        with np.errstate(over="ignore", invalid="ignore"):
            r_new = barrier.barrier_slacks(trial)
        if np.all(r_new > 0) and np.all(np.isfinite(r_new)):
            change = -t * step * lin - np.sum(np.log(r_new / r_old))
            if change <= -settings.line_alpha * step * decrement:
                return step
        step *= settings.line_beta
        if step < _MIN_STEP:
            break
    return 0.0


def _polish(prog: ConvexProgram, z: ProgramPoint) -> ProgramPoint:
    s, u, v = prog.active_aux(z.q)
    q = z.q.copy()
    q[0] = prog.q_start
    q[-1] = prog.q_end
    return ProgramPoint(q, s, u, v)


def _interior_start(prog: ConvexProgram, warm_start: Optional[ProgramPoint],
                    settings: SolverSettings) -> ProgramPoint:
    """Punto strettamente interno a partire dal warm start."""
    n = prog.n_slots
    q_warm = (warm_start.q if warm_start is not None else prog.q_ref).astype(float).copy()
    q_warm[0] = prog.q_start
    q_warm[-1] = prog.q_end
    line = prog.q_start + np.linspace(0.0, 1.0, n)[:, None] * (prog.q_end - prog.q_start) if n > 1 \
        else prog.q_start.reshape(1, 2).copy()
    ball = prog.ball_mask

    def _strict(q: np.ndarray) -> bool:
        steps = np.diff(q, axis=0)
        rb = prog.step_max ** 2 - np.sum(steps ** 2, axis=1)
        return bool(np.all(rb[ball] > 0) and np.all(prog.tangent(q)[prog.active_s] > 0))

    candidates = [q_warm] + [(1.0 - th) * q_warm + th * line for th in BLEND_STEPS]
    for q in candidates:
        if _strict(q):
            break
    else:
        raise SolverFailure("no strictly feasible start: warm start and straight line both infeasible",
                            last_feasible=warm_start)

    s, u, v = prog.active_aux(q)
    margin = settings.interior_margin
    return ProgramPoint(q, np.where(prog.active_s, s - margin, s), np.where(prog.active_u, u + margin, u),
                        np.where(prog.active_v, v - margin, v))


def solve(prog: ConvexProgram, warm_start: Optional[ProgramPoint] = None,
          tol: Optional[float] = None,
          settings: Optional[SolverSettings] = None) -> Tuple[ProgramPoint, SolveStatus]:
    """Massimizza l'obiettivo lineare con il metodo a barriera.

    Restituisce il punto (ausiliarie rese attive nei waypoint finali) e lo stato.
    Solleva MaxIterations (con il miglior punto) o IllConditioned.
    """
    settings = settings or SolverSettings()
    if tol is not None:
        settings = replace(settings, tol=tol)
    if settings.tol <= 0:
        raise ValueError("tol must be > 0")

    # Nessun waypoint libero: le ausiliarie sono in forma chiusa
    if not prog.free.any():
        q = prog.q_ref if warm_start is None else warm_start.q
        point = _polish(prog, ProgramPoint(q.copy(), np.zeros(prog.n_slots), prog.u_ref.copy(), prog.v_ref.copy()))
        violation = max_violation(prog, point)
        return point, SolveStatus(True, 0, 0, 0.0, violation, 0.0, prog.objective(point))

    barrier = _Barrier(prog)
    z = _interior_start(prog, warm_start, settings)
    m = prog.n_barrier_terms
    t = settings.t_init
    newton_total = 0
    outer = 0
    decrement = 0.0
    converged = False

    while True:
        outer += 1
        for _ in range(settings.max_newton_per_stage):
            try:
                dz, decrement = barrier.newton_step(z, t)
            except IllConditioned as e:
                e.last_feasible = _polish(prog, z)
                raise
            if decrement / 2.0 <= settings.newton_tol:
                break
            step = _line_search(barrier, z, dz, t, decrement, settings)
            if step == 0.0:
                logger.debug(f"Line search stalled at t={t:.3g} (lambda^2={decrement:.3g})")
                break
            z = _advance(z, dz, step)
            newton_total += 1
            if newton_total >= settings.max_newton_total:
                raise MaxIterations("barrier solve", settings.max_newton_total, best=_polish(prog, z))
        gap = m / t
        logger.debug(f"Barrier stage {outer}: t={t:.3g}, gap={gap:.3g}, newton={newton_total}")
        if gap < settings.tol:
            converged = True
            break
        t *= settings.t_growth

    point = _polish(prog, z)
    violation = max_violation(prog, point)
    status = SolveStatus(
        converged=converged and violation <= settings.feas_tol,
        outer_iterations=outer,
        newton_steps=newton_total,
        gap=m / t,
        max_violation=violation,
        kkt_residual=math.sqrt(decrement) / t,
        objective=prog.objective(point),
    )
    return point, status


# ════════════════════════ DEBUG DUMP ════════════════════════

def dump_program(prog: ConvexProgram, path: Union[str, Path]) -> Path:
    """Scrive il programma in testo: un record per vincolo (più obiettivo)."""
    path = Path(path)
    fmt = lambda x: format(float(x), ".17g")  # noqa: E731
    lines = [f"# convex program slots={prog.n_slots} terms={prog.n_terms} scale={fmt(prog.scale)}"]
    for n in range(prog.n_slots):
        if prog.active_s[n]:
            lines.append(f"obj s {n} {fmt(prog.weights_s[n])}")
        for k in np.flatnonzero(prog.active_u[n]):
            lines.append(f"obj u {n} {k} {fmt(prog.weights_u[n, k])}")
        lines.append(f"obj v {n} {fmt(prog.weights_v[n])}")
    for n in np.flatnonzero(prog.active_s):
        lines.append(f"exp17 {n} plane={fmt(prog.plane_x)} base={fmt(prog.tangent_base[n])} "
                     f"slope={fmt(prog.tangent_slope[n])} x_ref={fmt(prog.x_ref[n])}")
    for n, k in zip(*np.nonzero(prog.active_u)):
        lines.append(f"quad18 {n} {k} w=({fmt(prog.term_xy[k, 0])},{fmt(prog.term_xy[k, 1])}) "
                     f"dz2={fmt(prog.term_dz2[k])} c={fmt(prog.c18[n, k])} u_ref={fmt(prog.u_ref[n, k])}")
    for n in range(prog.n_slots):
        lines.append(f"quad19 {n} w=({fmt(prog.node_xy[0])},{fmt(prog.node_xy[1])}) "
                     f"dz2={fmt(prog.node_dz2)} c={fmt(prog.c19[n])} v_ref={fmt(prog.v_ref[n])} "
                     f"alpha={fmt(prog.alpha)}")
    for n in range(1, prog.n_slots):
        lines.append(f"ball {n - 1} {n} D={fmt(prog.step_max)}")
    lines.append(f"pin 0 {fmt(prog.q_start[0])} {fmt(prog.q_start[1])}")
    lines.append(f"pin {prog.n_slots - 1} {fmt(prog.q_end[0])} {fmt(prog.q_end[1])}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
