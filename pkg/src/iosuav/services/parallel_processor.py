"""
Processamento parallelo delle celle di uno sweep.

Ogni valore dello sweep (T o M) è un task indipendente; i risultati vengono
riordinati per indice così che l'output non dipenda dal numero di worker.
"""

import logging
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

from tqdm import tqdm

from iosuav.core.error_handling import ErrorHandler

logger = logging.getLogger(__name__)


@dataclass
class ProcessingTask:
    """Task di processamento per il pool (una cella dello sweep)"""
    task_id: str
    index: int
    payload: Any = None
    metadata: Dict[str, Any] = field(default_factory=dict)


@dataclass
class ProcessingResult:
    """Risultato di processamento"""
    task_id: str
    index: int
    success: bool
    result: Any = None
    error: Optional[BaseException] = None
    processing_time: float = 0.0


class WorkerPool:
    """Pool di worker a thread con monitoraggio dei task"""

    def __init__(self, max_workers: int = 1, error_handler: Optional[ErrorHandler] = None):
        """
        Inizializza pool worker

        Args:
            max_workers: Numero massimo worker concorrenti (>= 1)
            error_handler: dove registrare i task falliti
        """
        if max_workers < 1:
            raise ValueError(f"max_workers must be >= 1, got {max_workers}")
        self.max_workers = max_workers
        self.executor = ThreadPoolExecutor(max_workers=max_workers)
        self.error_handler = error_handler or ErrorHandler()

        self._lock = threading.Lock()
        self.completed_tasks = 0
        self.failed_tasks = 0
        self.start_time = time.time()

        logger.debug(f"Worker pool initialized: {max_workers} workers")

    def __enter__(self) -> "WorkerPool":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()

    def submit_task(self, func: Callable[[ProcessingTask], Any], task: ProcessingTask) -> Future:
        return self.executor.submit(self._execute_with_monitoring, func, task)

    def _execute_with_monitoring(self, func: Callable[[ProcessingTask], Any],
                                 task: ProcessingTask) -> ProcessingResult:
        start_time = time.time()
        try:
            result = func(task)
        except Exception as e:
            with self._lock:
                self.failed_tasks += 1
            self.error_handler.log_error(e, {"task_id": task.task_id, **task.metadata})
            return ProcessingResult(task.task_id, task.index, False, error=e,
                                    processing_time=time.time() - start_time)

        with self._lock:
            self.completed_tasks += 1
        return ProcessingResult(task.task_id, task.index, True, result=result,
                                processing_time=time.time() - start_time)

    def map_tasks(self, func: Callable[[ProcessingTask], Any], tasks: Sequence[ProcessingTask],
                  show_progress: bool = True, desc: str = "Sweep") -> List[ProcessingResult]:
        """Esegue tutti i task e restituisce i risultati ordinati per indice."""
        futures = [self.submit_task(func, task) for task in tasks]
        results: List[ProcessingResult] = []
        with tqdm(total=len(futures), desc=desc, unit="cell", disable=not show_progress) as bar:
            for future in as_completed(futures):
                results.append(future.result())
                bar.update(1)
        results.sort(key=lambda r: r.index)
        return results

    def get_stats(self) -> Dict[str, Any]:
        """Restituisce statistiche pool"""
        runtime = time.time() - self.start_time
        total = self.completed_tasks + self.failed_tasks
        return {
            "max_workers": self.max_workers,
            "completed_tasks": self.completed_tasks,
            "failed_tasks": self.failed_tasks,
            "success_rate": self.completed_tasks / total if total else 0.0,
            "runtime_seconds": runtime,
        }

    def shutdown(self, wait: bool = True):
        """Chiude pool worker"""
        self.executor.shutdown(wait=wait)
