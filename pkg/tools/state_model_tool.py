# state_model_tool.py
"""Two-level clustering of a home: device modes, then domain states.

Level one trains one GNG per device on that device's own readings, so a
device never sees another device's usage. Level two maps every frame to its
mode vector (one mode id per registered device) and clusters those vectors
into domain states, each of which carries a total power in watts.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from config import ClusteringConfig, GngSettings
from tools.gng_tool import GngGraph, gng_train, knn_assign_many
from tools.trace_tool import HOUR, MONTH, POWER, YEAR, FrameSet, NormStats, feature_matrix, norm_stats_from_arrays
from utils.errors import DataError, DeviceNeverSeen, DimensionMismatch, InvalidState
from utils.logger import log_debug
from utils.seeding import derive_seed

_TIME_COLUMNS = [HOUR, MONTH, YEAR]


@dataclass
class ModeModel:
    device_id: str
    graph: GngGraph
    stats: NormStats
    mode_powers: np.ndarray
    time_weight: float = 0.1
    k: int = 3

    @property
    def mode_count(self) -> int:
        return self.graph.component_count

    def features(self, timestamps: np.ndarray, powers: np.ndarray) -> np.ndarray:
        """Normalized (hour, month, year, power) with the calendar columns down-weighted."""
        feats = feature_matrix(timestamps, powers, self.stats)
        feats[:, _TIME_COLUMNS] *= self.time_weight
        return feats


def _subsample(count: int, cap: Optional[int], seed: int) -> np.ndarray:
    if cap is None or count <= cap:
        return np.arange(count)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(count, size=cap, replace=False))


def _mode_powers(graph: GngGraph, stats: NormStats) -> np.ndarray:
    watts = stats.denormalize_power(graph.positions[:, POWER])
    powers = np.zeros(graph.component_count)
    for mode in range(graph.component_count):
        powers[mode] = watts[graph.labels == mode].mean()
    return np.clip(powers, 0.0, None)


def fit_device_modes(frames: FrameSet, registry: Sequence[str], params: GngSettings, *,
                     time_weight: float = 0.1, k: int = 3, max_train_samples: Optional[int] = None,
                     seed: int = 0) -> List[ModeModel]:
    """One independent ModeModel per registered device."""
    models = []
    for device_id in registry:
        powers = frames.device_column(device_id)
        rows = _subsample(len(frames), max_train_samples, derive_seed(seed, "device_sample", device_id))
        timestamps, powers = frames.timestamps[rows], powers[rows]
        try:
            stats = norm_stats_from_arrays(timestamps, powers)
            model = ModeModel(device_id, None, stats, np.zeros(0), time_weight, k)
            device_params = params.seeded(derive_seed(seed, "device_modes", device_id))
            model.graph = gng_train(model.features(timestamps, powers), device_params)
        except DataError as e:
            e.args = (f"Device {device_id!r}: {e}",)
            raise
        model.mode_powers = _mode_powers(model.graph, stats)
        log_debug(f"Device {device_id}: {model.mode_count} modes, mean powers {np.round(model.mode_powers, 1).tolist()}")
        models.append(model)
    return models


def assign_modes(model: ModeModel, timestamps: np.ndarray, powers: np.ndarray) -> np.ndarray:
    labels, _ = knn_assign_many(model.graph, model.features(timestamps, powers), model.k)
    return labels


def assign_mode(model: ModeModel, power: float, timestamp: float) -> int:
    return int(assign_modes(model, np.array([timestamp], dtype=float), np.array([power], dtype=float))[0])


def mode_vectors(frames: FrameSet, mode_models: Sequence[ModeModel]) -> np.ndarray:
    """N x k matrix of mode ids, columns in registry order."""
    if len(frames) == 0:
        return np.zeros((0, len(mode_models)), dtype=int)
    return np.column_stack([
        assign_modes(model, frames.timestamps, frames.device_column(model.device_id))
        for model in mode_models
    ]).astype(int)


# ============================ DOMAIN STATES ============================

@dataclass
class DomainStateModel:
    graph: GngGraph
    mode_powers: List[np.ndarray]
    representatives: np.ndarray
    state_powers: np.ndarray
    encoding: str = "power"
    k: int = 3

    @property
    def state_count(self) -> int:
        return self.graph.component_count

    @property
    def device_count(self) -> int:
        return len(self.mode_powers)

    def encode(self, vectors: np.ndarray) -> np.ndarray:
        vectors = np.atleast_2d(np.asarray(vectors, dtype=int))
        if vectors.shape[1] != self.device_count:
            raise DimensionMismatch(f"Mode vector length {vectors.shape[1]} != device count {self.device_count}")
        return encode_mode_vectors(vectors, self.mode_powers, self.encoding)


def encode_mode_vectors(vectors: np.ndarray, mode_powers: Sequence[np.ndarray], encoding: str) -> np.ndarray:
    """Feature form of mode vectors: per-device normalized mode power, or one-hot modes."""
    columns = []
    for j, powers in enumerate(mode_powers):
        ids = np.clip(vectors[:, j], 0, len(powers) - 1)
        if encoding == "onehot":
            columns.append(np.eye(len(powers))[ids])
        else:
            scale = powers.max() if len(powers) and powers.max() > 0 else 1.0
            columns.append((powers[ids] / scale)[:, None])
    return np.hstack(columns)


def _representatives(graph: GngGraph, unique: np.ndarray, unique_features: np.ndarray,
                     unique_states: np.ndarray) -> np.ndarray:
    reps = np.zeros((graph.component_count, unique.shape[1]), dtype=int)
    for state in range(graph.component_count):
        centroid = graph.positions[graph.labels == state].mean(axis=0)
        members = np.flatnonzero(unique_states == state)
        if len(members) == 0:
            members = np.arange(len(unique))
        dist = np.linalg.norm(unique_features[members] - centroid, axis=1)
        reps[state] = unique[members[int(np.argmin(dist))]]
    return reps


def fit_domain_states(frames: FrameSet, mode_models: Sequence[ModeModel], params: GngSettings, *,
                      encoding: str = "power", k: int = 3, max_train_samples: Optional[int] = None,
                      seed: int = 0) -> DomainStateModel:
    vectors = mode_vectors(frames, mode_models)
    rows = _subsample(len(vectors), max_train_samples, derive_seed(seed, "domain_sample"))
    mode_powers = [model.mode_powers for model in mode_models]
    features = encode_mode_vectors(vectors[rows], mode_powers, encoding)

    domain_params = params.seeded(derive_seed(seed, "domain_states"))
    graph = gng_train(features, domain_params)

    unique = np.unique(vectors, axis=0)
    unique_features = encode_mode_vectors(unique, mode_powers, encoding)
    unique_states, _ = knn_assign_many(graph, unique_features, k)
    reps = _representatives(graph, unique, unique_features, unique_states)
    state_powers = np.array([
        sum(float(mode_powers[j][reps[s, j]]) for j in range(len(mode_powers)))
        for s in range(graph.component_count)
    ])
    log_debug(f"Domain states: {graph.component_count} from {len(unique)} distinct mode vectors")
    return DomainStateModel(graph, mode_powers, reps, state_powers, encoding, k)


def assign_domain_states(model: DomainStateModel, vectors: np.ndarray) -> np.ndarray:
    labels, _ = knn_assign_many(model.graph, model.encode(vectors), model.k)
    return labels


def assign_domain_state(model: DomainStateModel, vector: Sequence[int]) -> int:
    vector = np.asarray(vector, dtype=int)
    if vector.ndim != 1 or len(vector) != model.device_count:
        raise DimensionMismatch(f"Mode vector length {vector.size} != device count {model.device_count}")
    return int(assign_domain_states(model, vector[None, :])[0])


def state_power(model: DomainStateModel, state_id: int) -> float:
    if not 0 <= int(state_id) < model.state_count:
        raise InvalidState(f"State id {state_id} outside 0..{model.state_count - 1}")
    return float(model.state_powers[int(state_id)])


# ============================ HOME ============================

@dataclass
class HomeModel:
    registry: tuple
    mode_models: List[ModeModel]
    domain: DomainStateModel

    @property
    def state_powers(self) -> np.ndarray:
        return self.domain.state_powers

    @property
    def state_count(self) -> int:
        return self.domain.state_count

    def assign_states(self, frames: FrameSet) -> np.ndarray:
        missing = [d for d in self.registry if d not in frames.devices]
        if missing:
            raise DeviceNeverSeen(missing[0])
        return assign_domain_states(self.domain, mode_vectors(frames, self.mode_models))


def fit_home_model(frames: FrameSet, registry: Sequence[str], clustering: ClusteringConfig, seed: int = 0) -> HomeModel:
    mode_models = fit_device_modes(
        frames, registry, clustering.device_modes,
        time_weight=clustering.time_weight, k=clustering.k,
        max_train_samples=clustering.max_train_samples, seed=seed,
    )
    domain = fit_domain_states(
        frames, mode_models, clustering.domain_states,
        encoding=clustering.domain_encoding, k=clustering.k,
        max_train_samples=clustering.max_train_samples, seed=seed,
    )
    return HomeModel(tuple(registry), mode_models, domain)
