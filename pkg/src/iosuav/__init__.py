"""
iosuav - IOS-assisted UAV downlink optimizer
============================================

Ottimizzazione congiunta delle fasi di una superficie riflettente-trasmissiva
(IOS) e della traiettoria di un UAV che serve un nodo a terra:
- fasi ottime in forma chiusa per slot
- traiettoria con approssimazione convessa successiva (SCA) e metodo a barriera
- schemi di confronto IA, RA, IA-FT, CUC con Monte-Carlo a numeri comuni

Usage:
    from iosuav import get_scene_config, run_schemes

    cfg = get_scene_config("desk")
    results = run_schemes(cfg, seed=7)
"""

__version__ = '0.3.0'

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from iosuav.config.settings import SceneConfig, get_scene_config, load_config
    from iosuav.core.schemes import SchemeRunner, run_schemes
    from iosuav.interfaces.cli import IosUavCLI

__all__ = [
    'SceneConfig',
    'get_scene_config',
    'load_config',
    'SchemeRunner',
    'run_schemes',
    'IosUavCLI',
    '__version__',
]


def __getattr__(name):
    """Lazy loading dei moduli pesanti"""
    if name in ('SceneConfig', 'get_scene_config', 'load_config'):
        from iosuav.config import settings
        return getattr(settings, name)
    elif name in ('SchemeRunner', 'run_schemes'):
        from iosuav.core import schemes
        return getattr(schemes, name)
    elif name == 'IosUavCLI':
        from iosuav.interfaces.cli import IosUavCLI
        return IosUavCLI
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
