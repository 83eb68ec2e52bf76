"""iosuav - scrittura dei risultati"""

from .reports import write_experiment, write_result_json

__all__ = [
    "write_experiment",
    "write_result_json",
]
