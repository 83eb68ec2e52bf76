"""iosuav - servizi di esecuzione"""

from .parallel_processor import ProcessingResult, ProcessingTask, WorkerPool

__all__ = [
    "ProcessingTask",
    "ProcessingResult",
    "WorkerPool",
]
