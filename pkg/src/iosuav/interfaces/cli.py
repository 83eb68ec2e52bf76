#!/usr/bin/env python3
"""
CLI dell'ottimizzatore di traiettoria UAV assistito da superficie IOS

Comandi:
- run          esegue gli schemi (IA, RA, IA-FT, CUC), opzionalmente con sweep su T o M
- validate     esegue la suite di oracoli (fast / full)
- init-config  scrive un template YAML commentato con i valori di riferimento
"""

import argparse
import logging
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from iosuav import __version__
from iosuav.config.settings import (
    NLOS_MODES,
    PROFILES,
    ExperimentSettings,
    SceneConfig,
    get_log_level,
    get_scene_config,
    load_config,
    render_config_template,
)
from iosuav.core import scene
from iosuav.core.error_handling import ConfigError, IosUavError, get_error_handler
from iosuav.core.schemes import SCHEMES, SchemeRunner
from iosuav.models.optimization_result import SchemeResult
from iosuav.services.parallel_processor import ProcessingTask, WorkerPool
from iosuav.utils.reports import write_experiment

logger = logging.getLogger(__name__)

SWEEP_AXES = ("none", "T", "M")
_U64 = 2 ** 64


@dataclass
class ExperimentPlan:
    """
    Piano di un esperimento `run`.

    Attributes:
        config_path: file YAML (None = config.yaml se presente, altrimenti solo profilo)
        schemes: schemi da eseguire, nell'ordine di output
        sweep_axis: "none", "T" (tempo di missione) o "M" (numero di elementi)
        sweep_values: valori dello sweep, positivi e crescenti
        seed: seme dei campioni NLoS comuni
        mc_draws: estrazioni Monte-Carlo (None = da configurazione)
        out_dir: directory dei risultati
    """
    config_path: Optional[Path] = None
    profile: str = "desk"
    schemes: Tuple[str, ...] = SCHEMES
    sweep_axis: str = "none"
    sweep_values: Tuple[float, ...] = ()
    seed: int = 0
    mc_draws: Optional[int] = None
    out_dir: Path = Path("results")
    workers: int = 1
    nlos_mode: Optional[str] = None
    export_phases: bool = False
    show_progress: bool = True

    def __post_init__(self):
        if not self.schemes:
            raise ConfigError("At least one scheme is required", "schemes")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise ConfigError(f"Unknown scheme(s): {', '.join(unknown)} (choose from {', '.join(SCHEMES)})",
                              "schemes")
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigError("Duplicate scheme in plan", "schemes")
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"Unknown sweep axis '{self.sweep_axis}'", "sweep")
        if self.sweep_axis != "none":
            values = self.sweep_values
            if not values:
                raise ConfigError("Sweep requires at least one value", "sweep")
            if any(not (v > 0 and math.isfinite(v)) for v in values):
                raise ConfigError("Sweep values must be positive", "sweep")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ConfigError("Sweep values must be strictly increasing", "sweep")
        if not 0 <= self.seed < _U64:
            raise ConfigError(f"Seed must be an unsigned 64-bit integer, got {self.seed}", "seed")
        if self.mc_draws is not None and self.mc_draws < 1:
            raise ConfigError(f"mc_draws must be >= 1, got {self.mc_draws}", "mc_draws")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}", "workers")
        if self.nlos_mode is not None and self.nlos_mode not in NLOS_MODES:
            raise ConfigError(f"nlos mode must be one of {NLOS_MODES}", "nlos")


def sweep_cells(plan: ExperimentPlan, cfg: SceneConfig) -> List[Tuple[float, SceneConfig]]:
    """Celle dello sweep: (valore, scenario) nell'ordine del piano."""
    if plan.sweep_axis == "none":
        return [(cfg.mission_time, cfg)]
    cells = []
    for value in plan.sweep_values:
        if plan.sweep_axis == "T":
            slots = value / cfg.slot_len
            if abs(slots - round(slots)) > 1e-9 * max(1.0, slots):
                raise ConfigError(f"Mission time {value:g} s is not a multiple of slot_len={cfg.slot_len:g} s",
                                  "sweep_t")
            variant = cfg.with_(n_slots=int(round(slots)))
        else:
            if value != int(value):
                raise ConfigError(f"Element count must be an integer, got {value:g}", "sweep_m")
            variant = cfg.with_(n_elements=int(value))
        cells.append((float(value), variant))
    return cells


def cmd_run(plan: ExperimentPlan) -> int:
    """Esegue il piano e scrive i file di risultato; 0 se ogni schema è riuscito."""
    start_time = time.time()
    config_path = str(plan.config_path) if plan.config_path else None
    cfg, settings = load_config(config_path, plan.profile)
    if plan.mc_draws is not None:
        settings = settings.with_(mc_draws=plan.mc_draws)
    if plan.nlos_mode is not None:
        settings = settings.with_(nlos_mode=plan.nlos_mode)

    cells = sweep_cells(plan, cfg)
    for _, variant in cells:
        scene.validate(variant)
    logger.info(f"🚀 Running {', '.join(plan.schemes)} on {len(cells)} cell(s) "
                f"(profile={plan.profile}, seed={plan.seed}, draws={settings.mc_draws})")

    def run_cell(task: ProcessingTask) -> Dict[str, SchemeResult]:
        variant: SceneConfig = task.payload
        return SchemeRunner(variant, plan.seed, settings).run(plan.schemes)

    tasks = [ProcessingTask(task_id=f"{plan.sweep_axis}={value:g}", index=i, payload=variant,
                            metadata={"sweep_value": value})
             for i, (value, variant) in enumerate(cells)]
    with WorkerPool(max_workers=min(plan.workers, len(tasks)), error_handler=get_error_handler()) as pool:
        outcomes = pool.map_tasks(run_cell, tasks, show_progress=plan.show_progress and len(tasks) > 1)

    rows: List[Tuple[float, SchemeResult]] = []
    failed = 0
    for (value, _), outcome in zip(cells, outcomes):
        if not outcome.success:
            failed += 1
            print(f"error: cell {outcome.task_id} failed: {outcome.error}", file=sys.stderr)
            continue
        for name in plan.schemes:
            rows.append((value, outcome.result[name]))

    if rows:
        write_experiment(plan.out_dir, rows, plan.seed, plan.profile, plan.export_phases)
        _print_summary(rows)
    elapsed = time.time() - start_time
    if failed:
        logger.error(f"❌ {failed}/{len(cells)} cell(s) failed ({elapsed:.1f}s)")
        return 1
    logger.info(f"✅ Completed {len(rows)} result row(s) in {elapsed:.1f}s")
    return 0


def _print_summary(rows: Sequence[Tuple[float, SchemeResult]]):
    print(f"{'scheme':<7} {'sweep':>8} {'det_rate':>10} {'mc_rate':>10} {'±95%':>8}")
    for value, r in rows:
        print(f"{r.scheme:<7} {value:>8g} {r.det_rate:>10.4f} {r.mc_rate:>10.4f} {r.mc_half_width:>8.4f}")


def cmd_validate(level: str = "fast", seed: Optional[int] = None) -> int:
    """Esegue la suite di oracoli; 0 se tutti i controlli passano."""
    from iosuav.core.validation import OracleSuite

    suite = OracleSuite(level) if seed is None else OracleSuite(level, seed)
    results = suite.run()
    for result in results:
        print(result.format())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def cmd_init_config(path: Path, force: bool = False, profile: str = "desk") -> int:
    """Scrive il template di configurazione; rifiuta di sovrascrivere senza force."""
    path = Path(path)
    if path.exists() and not force:
        print(f"error: {path} already exists (use --force to overwrite)", file=sys.stderr)
        return 1
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_config_template(get_scene_config(profile), ExperimentSettings()), encoding="utf-8")
    logger.info(f"📝 Config template written to {path}")
    return 0


# ════════════════════════ PARSING ════════════════════════

def _float_list(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.replace(" ", "").split(",") if part)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got '{text}'") from e


def _scheme_list(text: str) -> Tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


class IosUavCLI:
    """Interfaccia a riga di comando"""

    def setup_logging(self, verbose: bool = False, quiet: bool = False):
        """Configura logging: -v DEBUG, -q ERROR, altrimenti IOSUAV_LOG_LEVEL"""
        if quiet:
            level = logging.ERROR
        elif verbose:
            level = logging.DEBUG
        else:
            level = get_log_level()

        logging.basicConfig(
            level=level,
            format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
            datefmt="%H:%M:%S",
        )
        logging.getLogger().setLevel(level)

    def _add_common_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument('--verbose', '-v', action='store_true', help='Output verboso')
        parser.add_argument('--quiet', '-q', action='store_true', help='Output minimo')

    def create_parser(self) -> argparse.ArgumentParser:
        """Crea il parser degli argomenti CLI"""
        parser = argparse.ArgumentParser(
            prog="iosuav",
            description="Ottimizzazione congiunta di fasi IOS e traiettoria UAV",
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog="""
Esempi di utilizzo:

  # Tutti gli schemi sullo scenario desk
  iosuav run --out results/

  # Sweep sul tempo di missione con seme fissato
  iosuav run --sweep-t 60,100,150 --schemes IA,RA,IA-FT,CUC --seed 7 --out results_t/

  # Suite di oracoli rapida
  iosuav validate --level fast

  # Template di configurazione
  iosuav init-config config.yaml
""",
        )
        parser.add_argument("--version", action="version", version=f"iosuav {__version__}")
        subparsers = parser.add_subparsers(dest='command', help='Comandi disponibili')
        subparsers.required = True

        # ============================================================
        # Comando: RUN
        # ============================================================
        run_parser = subparsers.add_parser('run', help='Esegue gli schemi e scrive i risultati')
        run_parser.add_argument('--config', type=Path, help='File di configurazione YAML')
        run_parser.add_argument('--profile', choices=sorted(PROFILES), default='desk',
                                help='Profilo di base (default: desk)')
        run_parser.add_argument('--out', type=Path, default=Path('results'), help='Directory dei risultati')
        run_parser.add_argument('--seed', type=int, default=0, help='Seme dei campioni NLoS (U64)')
        sweep = run_parser.add_mutually_exclusive_group()
        sweep.add_argument('--sweep-t', type=_float_list, help='Tempi di missione T (s), es. 60,100,150')
        sweep.add_argument('--sweep-m', type=_float_list, help='Numero di elementi M, es. 16,64,256')
        run_parser.add_argument('--schemes', type=_scheme_list, default=SCHEMES,
                                help=f"Schemi separati da virgola (default: {','.join(SCHEMES)})")
        run_parser.add_argument('--mc-draws', type=int, help='Estrazioni Monte-Carlo')
        run_parser.add_argument('--workers', type=int, default=1, help='Worker paralleli per le celle')
        run_parser.add_argument('--nlos', choices=NLOS_MODES, help='Modello dei campioni NLoS')
        run_parser.add_argument('--export-phases', action='store_true', help='Scrive anche le fasi per schema')
        self._add_common_arguments(run_parser)

        # ============================================================
        # Comando: VALIDATE
        # ============================================================
        validate_parser = subparsers.add_parser('validate', help='Esegue la suite di oracoli')
        validate_parser.add_argument('--level', choices=('fast', 'full'), default='fast')
        validate_parser.add_argument('--seed', type=int, help='Seme della suite')
        self._add_common_arguments(validate_parser)

        # ============================================================
        # Comando: INIT-CONFIG
        # ============================================================
        init_parser = subparsers.add_parser('init-config', help='Scrive un template di configurazione')
        init_parser.add_argument('path', type=Path, help='File da creare')
        init_parser.add_argument('--force', action='store_true', help='Sovrascrive un file esistente')
        init_parser.add_argument('--profile', choices=sorted(PROFILES), default='desk')
        self._add_common_arguments(init_parser)

        return parser

    def create_plan_from_args(self, args) -> ExperimentPlan:
        """Converte argparse namespace in ExperimentPlan"""
        if args.sweep_t:
            axis, values = "T", args.sweep_t
        elif args.sweep_m:
            axis, values = "M", args.sweep_m
        else:
            axis, values = "none", ()
        return ExperimentPlan(
            config_path=args.config,
            profile=args.profile,
            schemes=tuple(args.schemes),
            sweep_axis=axis,
            sweep_values=tuple(values),
            seed=args.seed,
            mc_draws=args.mc_draws,
            out_dir=args.out,
            workers=args.workers,
            nlos_mode=args.nlos,
            export_phases=args.export_phases,
            show_progress=not args.quiet,
        )

    def run(self, args: List[str]) -> int:
        """Punto di ingresso principale CLI"""
        parser = self.create_parser()
        parsed_args = parser.parse_args(args)
        self.setup_logging(parsed_args.verbose, parsed_args.quiet)

        try:
            if parsed_args.command == 'run':
                return cmd_run(self.create_plan_from_args(parsed_args))
            if parsed_args.command == 'validate':
                return cmd_validate(parsed_args.level, parsed_args.seed)
            if parsed_args.command == 'init-config':
                return cmd_init_config(parsed_args.path, parsed_args.force, parsed_args.profile)
            parser.error(f"unknown command {parsed_args.command}")
        except KeyboardInterrupt:
            logger.info("❌ Interrupted by user")
            return 130
        except IosUavError as e:
            get_error_handler().log_error(e, {"command": parsed_args.command})
            print(f"error: {e}", file=sys.stderr)
            return 1
        except Exception as e:
            logger.error(f"❌ Unexpected error: {e}")
            logger.debug("Traceback", exc_info=True)
            print(f"error: {e}", file=sys.stderr)
            return 1
        return 1


def main():
    """Punto di ingresso principale"""
    cli = IosUavCLI()
    return cli.run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
