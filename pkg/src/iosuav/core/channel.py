# core/channel.py
"""
Modello di canale UAV -> G con superficie riflettente-trasmissiva.

Contiene i pattern di radiazione (arrivo/partenza), il guadagno per elemento,
i canali di Rice diretto e via superficie, il rate medio Monte-Carlo e il
surrogato deterministico zeta[n] usato dall'ottimizzatore.

Convenzione di fase: il cammino via elemento m ha fase
-(2*pi*(d_Um + d_mG)/lambda + psi_m), il cammino diretto -2*pi*d_UG/lambda.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from iosuav.config.settings import SceneConfig
from iosuav.core import scene
from iosuav.models.optimization_result import RateEstimate
from iosuav.models.trajectory import PhaseSchedule, as_waypoints

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
CONFIDENCE_Z = 1.96
DRAW_BLOCK = 1024
# Sotto questa soglia il modello dell'ottimizzatore è sempre per elemento
EXACT_ELEMENT_LIMIT = 256


# ════════════════════════ COSTANTI ════════════════════════

def element_constant(cfg: SceneConfig) -> float:
    """J = lambda * sqrt(Gtx Grx G_m dy dz |gamma|^2) / (4 pi)^(3/2)"""
    return cfg.wavelength * math.sqrt(
        cfg.tx_gain * cfg.rx_gain * cfg.elem_gain * cfg.elem_dy * cfg.elem_dz * cfg.power_ratio
    ) / (4.0 * math.pi) ** 1.5


def los_gain(cfg: SceneConfig) -> float:
    """K = sqrt(Gtx Grx)"""
    return math.sqrt(cfg.tx_gain * cfg.rx_gain)


def rician_weights(kappa: float) -> Tuple[float, float]:
    """Pesi (LoS, NLoS) = (sqrt(k/(1+k)), sqrt(1/(1+k))); k = inf -> (1, 0)"""
    if math.isinf(kappa):
        return 1.0, 0.0
    return math.sqrt(kappa / (1.0 + kappa)), math.sqrt(1.0 / (1.0 + kappa))


def _path_phase(length, wavelength: float):
    """2*pi*length/lambda ridotta modulo 2*pi prima della moltiplicazione"""
    return (2.0 * np.pi / wavelength) * np.mod(length, wavelength)


# ════════════════════════ PATTERN DI RADIAZIONE ════════════════════════

def departure_patterns(cfg: SceneConfig) -> np.ndarray:
    """K^D_m per tutti gli elementi, shape (M,)"""
    pos = scene.layout_elements(cfg).positions
    d_mg = scene.element_node_distances(cfg)
    cos = (cfg.ground_node[0] - pos[:, 0]) / d_mg
    cube = np.abs(cos) ** 3
    reflective = cfg.reflective_sign * cos > 0
    return np.where(reflective, cube, cfg.epsilon * cube)


def arrival_patterns(Q, cfg: SceneConfig) -> np.ndarray:
    """K^A_m[n] per tutti gli slot e gli elementi, shape (N, M)"""
    q = as_waypoints(Q)
    pos = scene.layout_elements(cfg).positions
    d_um = scene.uav_element_distances(q, cfg)
    return np.abs((q[:, 0:1] - pos[None, :, 0]) / d_um) ** 3


def arrival_pattern(q, cfg: SceneConfig, m: int) -> float:
    """K^A_m = |(x - x_m) / d_{U,m}|^3"""
    x_m = scene.layout_elements(cfg).positions[m, 0]
    return abs((q[0] - x_m) / scene.dist_uav_elem(q, cfg, m)) ** 3


def departure_pattern(cfg: SceneConfig, m: int) -> float:
    """K^D_m: |cos^3| sul lato riflessivo, epsilon * |cos^3| sul lato trasmissivo"""
    return float(departure_patterns(cfg)[m])


def element_gain(q, psi: float, cfg: SceneConfig, m: int) -> complex:
    """g_m = sqrt(G_m K^A K^D dy dz |gamma|^2) * exp(-j psi)"""
    magnitude = math.sqrt(cfg.elem_gain * arrival_pattern(q, cfg, m) * departure_pattern(cfg, m)
                          * cfg.elem_dy * cfg.elem_dz * cfg.power_ratio)
    return magnitude * complex(math.cos(psi), -math.sin(psi))


# ════════════════════════ AMPIEZZE LoS ════════════════════════

def ios_los_amplitudes(Q, cfg: SceneConfig) -> np.ndarray:
    """|h_m^LoS[n]| = J K^A K^D / (d_Um d_mG), shape (N, M)"""
    d_um = scene.uav_element_distances(Q, cfg)
    beta = departure_patterns(cfg) / scene.element_node_distances(cfg)
    return element_constant(cfg) * arrival_patterns(Q, cfg) * beta[None, :] / d_um


def direct_los_amplitudes(Q, cfg: SceneConfig) -> np.ndarray:
    """|h_D^LoS[n]| = K d_UG^(-alpha/2), shape (N,)"""
    return los_gain(cfg) * scene.uav_node_distances(Q, cfg) ** (-0.5 * cfg.path_loss_exp)


def ios_los_components(Q, Psi: np.ndarray, cfg: SceneConfig) -> np.ndarray:
    """Coefficienti LoS complessi per elemento, shape (N, M)"""
    q = as_waypoints(Q)
    psi = np.asarray(Psi, dtype=float).reshape(q.shape[0], cfg.n_elements)
    path = scene.uav_element_distances(q, cfg) + scene.element_node_distances(cfg)[None, :]
    phase = _path_phase(path, cfg.wavelength) + psi
    return ios_los_amplitudes(q, cfg) * np.exp(-1j * phase)


def direct_los_components(Q, cfg: SceneConfig) -> np.ndarray:
    """Coefficienti LoS complessi del cammino diretto, shape (N,)"""
    phase = _path_phase(scene.uav_node_distances(Q, cfg), cfg.wavelength)
    return direct_los_amplitudes(Q, cfg) * np.exp(-1j * phase)


# ════════════════════════ CAMPIONI NLoS ════════════════════════

@dataclass(frozen=True)
class NlosSample:
    """Campioni h_SS di un singolo slot (cammino diretto, superficie)"""
    direct: complex
    ios: complex


@dataclass(frozen=True)
class NlosDraw:
    """
    Campioni h_SS ~ CN(0, 1) per estrazione e per slot.

    Attributes:
        direct: array complesso (n_draws, N) per il cammino diretto
        ios: array complesso (n_draws, N) condiviso da tutti gli elementi
        seed: seme di origine
        shared: True se un solo campione per slot serve entrambi i cammini
    """
    direct: np.ndarray
    ios: np.ndarray
    seed: int
    shared: bool = False

    @property
    def n_draws(self) -> int:
        return self.direct.shape[0]

    @property
    def n_slots(self) -> int:
        return self.direct.shape[1]

    def at(self, k: int, n: int) -> NlosSample:
        return NlosSample(complex(self.direct[k, n]), complex(self.ios[k, n]))


def _block(child: np.random.SeedSequence, n_slots: int) -> np.ndarray:
    rng = np.random.default_rng(child)
    raw = rng.standard_normal((DRAW_BLOCK, n_slots, 2, 2))
    return (raw[..., 0] + 1j * raw[..., 1]) / math.sqrt(2.0)


def draw_nlos(n_slots: int, n_draws: int, seed: int, shared: bool = False) -> NlosDraw:
    """Estrae campioni NLoS a blocchi fissi da flussi figli di SeedSequence(seed).

    Il risultato dipende solo da (n_slots, seed): i primi k campioni coincidono
    per qualunque n_draws >= k.
    """
    if n_draws < 1:
        raise ValueError(f"n_draws must be >= 1, got {n_draws}")
    n_blocks = -(-n_draws // DRAW_BLOCK)
    children = np.random.SeedSequence(seed).spawn(n_blocks)
    samples = np.concatenate([_block(c, n_slots) for c in children], axis=0)[:n_draws]
    direct = samples[:, :, 0]
    ios = direct if shared else samples[:, :, 1]
    return NlosDraw(direct=direct, ios=ios, seed=seed, shared=shared)


# ════════════════════════ CANALI PER SLOT ════════════════════════

def direct_channel(q, cfg: SceneConfig, draw: Optional[NlosSample] = None) -> complex:
    """h_D = sqrt(k/(1+k)) h_D^LoS + sqrt(1/(1+k)) |h_D^LoS| h_SS"""
    w_los, w_nlos = rician_weights(cfg.rician_k)
    q_arr = np.asarray(q, dtype=float).reshape(1, 2)
    amp = float(direct_los_amplitudes(q_arr, cfg)[0])
    h = w_los * complex(direct_los_components(q_arr, cfg)[0])
    if draw is not None:
        h += w_nlos * amp * draw.direct
    return h


def ios_element_channel(q, psi_m: float, cfg: SceneConfig, m: int,
                        draw: Optional[NlosSample] = None) -> complex:
    """h_m = sqrt(k/(1+k)) h_m^LoS + sqrt(1/(1+k)) |h_m^LoS| h_SS"""
    w_los, w_nlos = rician_weights(cfg.rician_k)
    q_arr = np.asarray(q, dtype=float).reshape(1, 2)
    amp = float(ios_los_amplitudes(q_arr, cfg)[0, m])
    path = scene.dist_uav_elem(q, cfg, m) + scene.dist_elem_gn(cfg, m)
    phase = float(_path_phase(path, cfg.wavelength)) + psi_m
    h = w_los * amp * complex(math.cos(phase), -math.sin(phase))
    if draw is not None:
        h += w_nlos * amp * draw.ios
    return h


def composite_channel(q, psi_slot, cfg: SceneConfig, draw: Optional[NlosSample] = None) -> complex:
    """h = sum_m h_m + h_D per uno slot"""
    w_los, w_nlos = rician_weights(cfg.rician_k)
    q_arr = np.asarray(q, dtype=float).reshape(1, 2)
    psi = np.asarray(psi_slot, dtype=float).reshape(1, cfg.n_elements)
    los = complex(ios_los_components(q_arr, psi, cfg).sum() + direct_los_components(q_arr, cfg)[0])
    h = w_los * los
    if draw is not None:
        s_ios = float(ios_los_amplitudes(q_arr, cfg).sum())
        a_d = float(direct_los_amplitudes(q_arr, cfg)[0])
        h += w_nlos * (s_ios * draw.ios + a_d * draw.direct)
    return h


def composite_channels(Q, Psi, cfg: SceneConfig, draws: NlosDraw) -> np.ndarray:
    """Canali compositi per tutte le estrazioni, shape (n_draws, N)"""
    q = as_waypoints(Q)
    psi = Psi.phases if isinstance(Psi, PhaseSchedule) else np.asarray(Psi, dtype=float)
    w_los, w_nlos = rician_weights(cfg.rician_k)
    los = direct_los_components(q, cfg)
    s_ios = np.zeros(q.shape[0])
    if cfg.n_elements:
        los = los + ios_los_components(q, psi, cfg).sum(axis=1)
        s_ios = ios_los_amplitudes(q, cfg).sum(axis=1)
    a_d = direct_los_amplitudes(q, cfg)
    nlos = s_ios[None, :] * draws.ios + a_d[None, :] * draws.direct
    return w_los * los[None, :] + w_nlos * nlos


# ════════════════════════ RATE ════════════════════════

def average_rate_estimate(Q, Psi, cfg: SceneConfig, n_draws: int, seed: int,
                          nlos_mode: str = "split") -> RateEstimate:
    """Rate medio (1/N) sum_n E[log2(1 + eta |h[n]|^2)] con semi-ampiezza al 95%."""
    q = as_waypoints(Q)
    draws = draw_nlos(q.shape[0], n_draws, seed, shared=(nlos_mode == "shared"))
    h = composite_channels(q, Psi, cfg, draws)
    per_draw = np.mean(np.log1p(cfg.eta * np.abs(h) ** 2), axis=1) / LN2
    mean = float(per_draw.mean())
    if n_draws > 1:
        half = CONFIDENCE_Z * float(per_draw.std(ddof=1)) / math.sqrt(n_draws)
    else:
        half = 0.0 if math.isinf(cfg.rician_k) else math.inf
    return RateEstimate(mean=mean, half_width=half, n_draws=n_draws)


def average_rate(Q, Psi, cfg: SceneConfig, n_draws: int, seed: int, nlos_mode: str = "split") -> float:
    """Rate medio Monte-Carlo in bps/Hz; deterministico dato il seme"""
    return average_rate_estimate(Q, Psi, cfg, n_draws, seed, nlos_mode).mean


# ════════════════════════ MODELLO DETERMINISTICO ════════════════════════

@dataclass(frozen=True)
class SurfaceModel:
    """
    Termini efficaci della superficie visti dall'ottimizzatore.

    zeta[n] = sum_t a_t |x[n] - x_c|^3 / d_{U,t}^4 + K d_UG^(-alpha/2)

    In modalità esatta i termini sono gli elementi; in modalità a tile sono i
    centroidi dei blocchi con peso pari alla somma dei pesi.
    """
    positions: np.ndarray   # (T, 3)
    weights: np.ndarray     # (T,) a_t = J * beta_t
    plane_x: float
    los_gain: float
    tiled: bool = False

    @property
    def n_terms(self) -> int:
        return self.positions.shape[0]


def _tile_indices(count: int, parts: int):
    return np.array_split(np.arange(count), max(1, min(parts, count)))


def surface_model(cfg: SceneConfig, tiles: Optional[int] = None) -> SurfaceModel:
    """Modello della superficie per l'ottimizzatore (esatto o a tile)."""
    layout = scene.layout_elements(cfg)
    weights = element_constant(cfg) * departure_patterns(cfg) / scene.element_node_distances(cfg)
    plane_x = float(cfg.ios_center[0])
    tiles = cfg.sca_tiles if tiles is None else tiles
    if not tiles or cfg.n_elements <= max(tiles, EXACT_ELEMENT_LIMIT):
        return SurfaceModel(np.array(layout.positions), weights, plane_x, los_gain(cfg))

    tile_rows, tile_cols = scene.most_square_factors(tiles)
    grid_w = weights.reshape(layout.rows, layout.cols)
    grid_p = layout.positions.reshape(layout.rows, layout.cols, 3)
    centers, sums = [], []
    for r_idx in _tile_indices(layout.rows, tile_rows):
        for c_idx in _tile_indices(layout.cols, tile_cols):
            block_w = grid_w[np.ix_(r_idx, c_idx)]
            block_p = grid_p[np.ix_(r_idx, c_idx)]
            centers.append(block_p.reshape(-1, 3).mean(axis=0))
            sums.append(block_w.sum())
    logger.debug(f"Surface model tiled: {cfg.n_elements} elements -> {len(sums)} tiles")
    return SurfaceModel(np.array(centers), np.array(sums), plane_x, los_gain(cfg), tiled=True)


def model_ios_terms(Q, model: SurfaceModel, cfg: SceneConfig) -> np.ndarray:
    """a_t |x - x_c|^3 / d_{U,t}^4, shape (N, T)"""
    q = as_waypoints(Q)
    if model.n_terms == 0:
        return np.zeros((q.shape[0], 0))
    dxy = q[:, None, :] - model.positions[None, :, :2]
    d2 = np.sum(dxy ** 2, axis=2) + (cfg.uav_altitude - model.positions[None, :, 2]) ** 2
    offset = np.abs(q[:, 0] - model.plane_x)
    return model.weights[None, :] * offset[:, None] ** 3 / d2 ** 2


def model_zeta(Q, model: SurfaceModel, cfg: SceneConfig) -> np.ndarray:
    direct = model.los_gain * scene.uav_node_distances(Q, cfg) ** (-0.5 * cfg.path_loss_exp)
    return model_ios_terms(Q, model, cfg).sum(axis=1) + direct


def model_rate(Q, model: SurfaceModel, cfg: SceneConfig) -> float:
    return float(np.mean(np.log1p(cfg.eta * model_zeta(Q, model, cfg) ** 2)) / LN2)


def zetas(Q, cfg: SceneConfig) -> np.ndarray:
    """zeta[n] per tutti gli slot con il modello esatto"""
    return model_zeta(Q, surface_model(cfg, tiles=0), cfg)


def zeta(q, cfg: SceneConfig) -> float:
    """zeta = sum_m J beta_m |x - x_m|^3 / d_Um^4 + K / d_UG^(alpha/2)"""
    return float(zetas(np.asarray(q, dtype=float).reshape(1, 2), cfg)[0])


def deterministic_rate(Q, cfg: SceneConfig) -> float:
    """(1/N) sum_n log2(1 + eta zeta[n]^2): obiettivo dell'ottimizzatore"""
    return model_rate(Q, surface_model(cfg, tiles=0), cfg)


def expected_channel_power(q, cfg: SceneConfig, shared: bool = True) -> float:
    """E[|h|^2] con fasi ottime.

    shared: zeta^2; split: zeta^2 - 2 S_I a_D / (1 + k).
    """
    q_arr = np.asarray(q, dtype=float).reshape(1, 2)
    z = zeta(q, cfg)
    if shared or math.isinf(cfg.rician_k):
        return z * z
    s_ios = float(ios_los_amplitudes(q_arr, cfg).sum()) if cfg.n_elements else 0.0
    a_d = float(direct_los_amplitudes(q_arr, cfg)[0])
    return z * z - 2.0 * s_ios * a_d / (1.0 + cfg.rician_k)
