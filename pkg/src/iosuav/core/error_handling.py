# core/error_handling.py
"""
Gestione errori dell'ottimizzatore.
Ogni errore porta una gravità e un contesto (parametri, iterata, ecc.) che
l'ErrorHandler usa per il logging centralizzato e per le statistiche.
"""

import logging
from enum import Enum
from typing import Any, Dict, Optional, Type

logger = logging.getLogger(__name__)


class ErrorSeverity(Enum):
    """Livelli di gravità degli errori"""
    LOW = "low"           # Warning, procedere
    MEDIUM = "medium"     # Errore recuperabile (es. punto migliore disponibile)
    HIGH = "high"         # Errore di input o di modello, stop necessario
    CRITICAL = "critical" # Stato numerico non più affidabile


# ════════════════════════ ERRORI SPECIFICI ════════════════════════

class IosUavError(Exception):
    """Errore base del pacchetto"""
    def __init__(self, message: str, severity: ErrorSeverity = ErrorSeverity.MEDIUM,
                 context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.severity = severity
        self.context = context or {}


class ConfigError(IosUavError):
    """Documento di configurazione non valido (chiave sconosciuta, valore malformato)"""
    def __init__(self, message: str, key: Optional[str] = None):
        context = {"key": key} if key else {}
        super().__init__(message, ErrorSeverity.HIGH, context)
        self.key = key


class NonPositiveParam(IosUavError):
    """Parametro fisico fuori dominio; il nome del campo è in `field_name`"""
    def __init__(self, field_name: str, value: Any, requirement: str = "> 0"):
        message = f"Parameter '{field_name}' must be {requirement} (got {value!r})"
        super().__init__(message, ErrorSeverity.HIGH, {"field": field_name, "value": value})
        self.field_name = field_name
        self.value = value


class InfeasibleMission(IosUavError):
    """Gli estremi non sono collegabili con il passo massimo disponibile"""
    def __init__(self, distance: float, reach: float, detail: str = ""):
        message = f"Mission infeasible: endpoint distance {distance:.6g} m exceeds reach {reach:.6g} m"
        if detail:
            message += f" ({detail})"
        super().__init__(message, ErrorSeverity.HIGH, {"distance": distance, "reach": reach})
        self.distance = distance
        self.reach = reach


class InstanceTooLarge(IosUavError):
    """Istanza oltre i limiti di un oracolo esaustivo"""
    def __init__(self, what: str, value: int, limit: int):
        message = f"Instance too large: {what}={value} exceeds limit {limit}"
        super().__init__(message, ErrorSeverity.HIGH, {what: value, "limit": limit})


class DegenerateX(IosUavError):
    """Waypoint sul piano della superficie: la tangente di |x|^3 degenera"""
    def __init__(self, slot: int, offset: float, guard: float):
        message = f"Waypoint {slot} lies on the surface plane (|x - x_c| = {offset:.3g} < {guard:.3g})"
        super().__init__(message, ErrorSeverity.HIGH, {"slot": slot, "offset": offset})
        self.slot = slot


class NumericalOverflow(IosUavError):
    """Coefficienti o esponenziali non finiti"""
    def __init__(self, quantity: str, detail: str = ""):
        message = f"Non-finite value while computing {quantity}"
        if detail:
            message += f": {detail}"
        super().__init__(message, ErrorSeverity.CRITICAL, {"quantity": quantity})


class SolverFailure(IosUavError):
    """Il solutore del sottoproblema non ha raggiunto una soluzione affidabile.

    `last_feasible` contiene l'ultimo punto ammissibile noto (o None).
    """
    def __init__(self, message: str, last_feasible: Any = None,
                 context: Optional[Dict[str, Any]] = None,
                 severity: ErrorSeverity = ErrorSeverity.HIGH):
        super().__init__(message, severity, context)
        self.last_feasible = last_feasible


class MaxIterations(SolverFailure):
    """Limite di iterazioni raggiunto; `best` è il miglior punto ammissibile"""
    def __init__(self, what: str, limit: int, best: Any = None):
        super().__init__(f"{what}: iteration limit {limit} reached", best,
                         {"limit": limit}, ErrorSeverity.MEDIUM)
        self.best = best


class IllConditioned(SolverFailure):
    """Sistema di Newton non fattorizzabile"""
    def __init__(self, detail: str, last_feasible: Any = None):
        super().__init__(f"Ill-conditioned Newton system: {detail}", last_feasible,
                         {"detail": detail}, ErrorSeverity.CRITICAL)


# ════════════════════════ GESTORE CENTRALE ════════════════════════

class ErrorHandler:
    """Logging centralizzato degli errori con conteggi per tipo."""

    def __init__(self):
        self.error_counts: Dict[Type[Exception], int] = {}

    def log_error(self, error: Exception, context: Optional[Dict[str, Any]] = None):
        """Log centralizzato degli errori con context"""
        error_type = type(error)
        self.error_counts[error_type] = self.error_counts.get(error_type, 0) + 1

        merged: Dict[str, Any] = {}
        if isinstance(error, IosUavError):
            merged.update(error.context)
        if context:
            merged.update(context)
        context_str = ""
        if merged:
            context_str = f" [{', '.join(f'{k}={v}' for k, v in merged.items())}]"

        if isinstance(error, IosUavError):
            level = {
                ErrorSeverity.LOW: logger.info,
                ErrorSeverity.MEDIUM: logger.warning,
                ErrorSeverity.HIGH: logger.error,
                ErrorSeverity.CRITICAL: logger.critical,
            }.get(error.severity, logger.error)
            level(f"❌ {error.severity.value.upper()}: {error}{context_str}")
        else:
            logger.error(f"❌ UNEXPECTED: {error.__class__.__name__}: {error}{context_str}")

    def get_error_stats(self) -> Dict[str, Any]:
        """Statistiche degli errori registrati"""
        return {
            "total_errors": sum(self.error_counts.values()),
            "error_counts": {cls.__name__: count for cls, count in self.error_counts.items()},
        }


_error_handler: Optional[ErrorHandler] = None


def get_error_handler() -> ErrorHandler:
    """Gestore errori condiviso (singleton di processo)"""
    global _error_handler
    if _error_handler is None:
        _error_handler = ErrorHandler()
    return _error_handler
