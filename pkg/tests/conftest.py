"""
Configurazione comune per tutti i test pytest.

Questo file viene automaticamente caricato da pytest e fornisce:
- Fixtures comuni (scenari piccoli, impostazioni rapide)
- Hook per personalizzare l'header del report
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Aggiungi src al path per gli import
_project_root = Path(__file__).parent.parent
sys.path.insert(0, str(_project_root / "src"))

from iosuav.config.settings import ExperimentSettings, SceneConfig, get_scene_config  # noqa: E402


# =============================================================================
# FIXTURES COMUNI
# =============================================================================

@pytest.fixture
def project_root():
    """Ritorna il path root del progetto."""
    return _project_root


@pytest.fixture
def desk_config() -> SceneConfig:
    """Scenario desk (N=50, M=64)."""
    return get_scene_config("desk")


@pytest.fixture
def small_config() -> SceneConfig:
    """Scenario ridotto: 12 slot, 4 elementi, missione corta."""
    return SceneConfig(
        uav_start=(-120.0, 20.0), uav_end=(120.0, 20.0),
        n_slots=12, n_elements=4,
        ground_node=(-40.0, -10.0),
    )


@pytest.fixture
def fast_settings() -> ExperimentSettings:
    """Impostazioni rapide: poche estrazioni, poche alternanze."""
    return ExperimentSettings(mc_draws=64, max_alternations=4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def temp_output_dir(tmp_path):
    """Crea una directory temporanea per output di test."""
    output_dir = tmp_path / "test_output"
    output_dir.mkdir(exist_ok=True)
    return output_dir


# =============================================================================
# HOOK: REPORT PERSONALIZZATO
# =============================================================================

def pytest_report_header(config):
    """Aggiunge informazioni all'header del report."""
    return [
        "Project: iosuav",
        f"Test Root: {_project_root}",
        f"Python: {sys.version.split()[0]}",
    ]
