# reports.py
"""
Scrive i file di risultato di un esperimento:
  • rates.csv        – rate deterministico e Monte-Carlo per schema e cella
  • trajectory.csv   – waypoint (scheme, n, x, y, sweep_value)
  • convergence.csv  – tracce di convergenza
  • result_<schema>_<sweep>.json – documento completo di una cella
  • phases_<schema>_<sweep>.csv  – fasi (opzionale)

Ogni CSV inizia con una riga di commento con seme e profilo; i numeri sono
formattati con format(x, ".12g") (punto decimale indipendente dal locale).
"""

from __future__ import annotations

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple

from iosuav.models.optimization_result import SchemeResult

logger = logging.getLogger(__name__)

RATES_COLUMNS = ("scheme", "sweep_value", "det_rate", "mc_rate", "mc_halfwidth")
TRAJECTORY_COLUMNS = ("scheme", "n", "x", "y", "sweep_value")
CONVERGENCE_COLUMNS = ("scheme", "sweep_value", "iteration", "objective", "step_norm", "solver_iters")
PHASES_COLUMNS = ("n", "m", "psi")

# (valore dello sweep, risultato) nell'ordine delle celle
Cell = Tuple[float, SchemeResult]


# ---------- helpers ---------------------------------------------------
def fmt(value: Any) -> str:
    """Formattazione stabile: interi come tali, float con 12 cifre significative."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def header_comment(seed: int, profile: str) -> str:
    return f"# iosuav seed={seed} profile={profile}"


def _write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]],
               seed: int, profile: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(header_comment(seed, profile) + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    logger.debug(f"Wrote {path}")
    return path


def sweep_tag(value: float) -> str:
    """Etichetta dello sweep per i nomi dei file (60.0 -> '60')."""
    return fmt(float(value)).replace(".", "p").replace("-", "m")


# ---------- CSV --------------------------------------------------------
def write_rates_csv(path: Path, cells: Sequence[Cell], seed: int, profile: str) -> Path:
    rows = ((r.scheme, float(v), r.det_rate, r.mc_rate, r.mc_half_width) for v, r in cells)
    return _write_csv(path, RATES_COLUMNS, rows, seed, profile)


def write_trajectory_csv(path: Path, cells: Sequence[Cell], seed: int, profile: str) -> Path:
    def rows():
        for v, r in cells:
            for n, (x, y) in enumerate(r.trajectory.waypoints):
                yield (r.scheme, n, float(x), float(y), float(v))
    return _write_csv(path, TRAJECTORY_COLUMNS, rows(), seed, profile)


def write_convergence_csv(path: Path, cells: Sequence[Cell], seed: int, profile: str) -> Path:
    def rows():
        for v, r in cells:
            if r.trace is None:
                continue
            for rec in r.trace.records:
                yield (r.scheme, float(v), rec.iteration, float(rec.objective),
                       float(rec.step_norm), rec.solver_iters)
    return _write_csv(path, CONVERGENCE_COLUMNS, rows(), seed, profile)


def write_phases_csv(path: Path, result: SchemeResult, seed: int, profile: str) -> Path:
    phases = result.phases.phases
    rows = ((n, m, float(phases[n, m])) for n in range(phases.shape[0]) for m in range(phases.shape[1]))
    return _write_csv(path, PHASES_COLUMNS, rows, seed, profile)


# ---------- JSON -------------------------------------------------------
def _strict_json(value: Any) -> Any:
    """Valori non finiti -> None, ricorsivamente (JSON senza NaN/Infinity)."""
    if isinstance(value, dict):
        return {k: _strict_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_strict_json(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_result_json(out_dir: Path, sweep_value: float, result: SchemeResult,
                      profile: str) -> Path:
    path = out_dir / f"result_{result.scheme}_{sweep_tag(sweep_value)}.json"
    document: Dict[str, Any] = _strict_json(
        {"profile": profile, "sweep_value": float(sweep_value), **result.to_dict()})
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2, sort_keys=True, allow_nan=False)
        f.write("\n")
    return path


def write_experiment(out_dir: Path, cells: Sequence[Cell], seed: int, profile: str,
                     export_phases: bool = False) -> List[Path]:
    """Scrive tutti i file di un esperimento; restituisce i percorsi scritti."""
    out_dir = Path(out_dir)
    written = [
        write_rates_csv(out_dir / "rates.csv", cells, seed, profile),
        write_trajectory_csv(out_dir / "trajectory.csv", cells, seed, profile),
        write_convergence_csv(out_dir / "convergence.csv", cells, seed, profile),
    ]
    for value, result in cells:
        written.append(write_result_json(out_dir, value, result, profile))
        if export_phases and result.phases.n_elements:
            tag = sweep_tag(value)
            written.append(write_phases_csv(out_dir / f"phases_{result.scheme}_{tag}.csv",
                                            result, seed, profile))
    logger.info(f"📄 Wrote {len(written)} result file(s) to {out_dir}")
    return written
