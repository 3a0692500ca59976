# gng_tool.py
"""Growing Neural Gas clustering.

Neurons move by Kohonen-style updates and are wired by competitive Hebbian
learning; clusters are the connected components of the resulting graph and
points are assigned by a k-nearest-neuron vote.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import GngParams
from utils.errors import BundleError, DimensionMismatch, InsufficientData
from utils.logger import log_debug

GRAPH_FORMAT = "gng-graph"
GRAPH_VERSION = 1


@dataclass
class GngGraph:
    """Trained neuron graph. `edges` maps (i, j) with i < j to the edge age."""

    positions: np.ndarray
    errors: np.ndarray
    edges: Dict[Tuple[int, int], int] = field(default_factory=dict)
    labels: Optional[np.ndarray] = None
    params: Optional[GngParams] = None

    @property
    def n_neurons(self) -> int:
        return len(self.positions)

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    @property
    def component_count(self) -> int:
        return 0 if self.labels is None or len(self.labels) == 0 else int(self.labels.max()) + 1

    @property
    def metric(self) -> str:
        return self.params.metric if self.params is not None else "euclidean"

    def neighbors(self, i: int) -> List[int]:
        return sorted(b if a == i else a for a, b in self.edges if i in (a, b))


@dataclass(frozen=True)
class ClusterAssignment:
    cluster_id: int
    distance: float


def _distances(positions: np.ndarray, point: np.ndarray, metric: str) -> np.ndarray:
    diff = positions - point
    if metric == "cityblock":
        return np.abs(diff).sum(axis=1)
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _initial_positions(data: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Distinct data positions in random order, reused round-robin when scarce."""
    distinct = np.unique(data, axis=0)
    order = rng.permutation(len(distinct))
    if count <= len(distinct):
        return distinct[order[:count]].copy()
    reps = -(-count // len(distinct))
    return distinct[np.tile(order, reps)[:count]].copy()


def _distance_block(block: np.ndarray, positions: np.ndarray, metric: str) -> np.ndarray:
    diff = block[:, None, :] - positions[None, :, :]
    if metric == "cityblock":
        return np.abs(diff).sum(axis=2)
    return np.sqrt((diff ** 2).sum(axis=2))


def _link_nearest(positions: np.ndarray, adjacency: List[Dict[int, int]]):
    n = len(positions)
    if n < 2:
        return
    chunk = max(1, 2_000_000 // max(n, 1))
    for start in range(0, n, chunk):
        block = positions[start:start + chunk]
        d2 = ((block[:, None, :] - positions[None, :, :]) ** 2).sum(axis=2)
        rows = np.arange(len(block))
        d2[rows, rows + start] = np.inf
        nearest = d2.argmin(axis=1)
        for offset, j in enumerate(nearest):
            i, j = start + offset, int(j)
            adjacency[i][j] = 0
            adjacency[j][i] = 0


class _GngTrainer:
    """Mutable training state; indices stay compact under neuron removal."""

    def __init__(self, data: np.ndarray, params: GngParams):
        self.data = data
        self.params = params
        self.rng = np.random.default_rng(params.seed)
        self.positions = _initial_positions(data, params.start_nodes, self.rng)
        self.errors = np.zeros(len(self.positions))
        self.adjacency: List[Dict[int, int]] = [dict() for _ in range(len(self.positions))]
        self.active = np.zeros(len(self.positions), dtype=bool)
        self.won = np.zeros(len(self.positions), dtype=bool)
        _link_nearest(self.positions, self.adjacency)

    @property
    def n(self) -> int:
        return len(self.positions)

    def _remove(self, index: int):
        self.positions = np.delete(self.positions, index, axis=0)
        self.errors = np.delete(self.errors, index)
        self.active = np.delete(self.active, index)
        self.won = np.delete(self.won, index)
        for j in self.adjacency.pop(index):
            del self.adjacency[j - (j > index)][index]
        self.adjacency = [
            {(j - 1 if j > index else j): age for j, age in nbrs.items()}
            for nbrs in self.adjacency
        ]

    def _insert(self):
        q = int(np.argmax(self.errors))
        nbrs = self.adjacency[q]
        if nbrs:
            f = max(nbrs, key=lambda j: (self.errors[j], -j))
        else:
            if self.n < 2:
                return
            # Neighbourless winner: split toward the second-highest-error neuron.
            ranked = np.argsort(-self.errors, kind="stable")
            f = int(ranked[1] if ranked[0] == q else ranked[0])
        r = self.n
        self.positions = np.vstack([self.positions, 0.5 * (self.positions[q] + self.positions[f])])
        self.errors[q] *= self.params.alpha
        self.errors[f] *= self.params.alpha
        self.errors = np.append(self.errors, self.errors[q])
        self.active = np.append(self.active, False)
        self.won = np.append(self.won, False)
        nbrs.pop(f, None)
        self.adjacency[f].pop(q, None)
        self.adjacency.append({q: 0, f: 0})
        nbrs[r] = 0
        self.adjacency[f][r] = 0

    def present(self, x: np.ndarray, step: int, track: bool):
        p = self.params
        dist = _distances(self.positions, x, p.metric)
        if self.n < 2:
            s1, s2 = 0, None
        else:
            # Lowest index wins ties, so repeated points keep a stable pair.
            s1 = int(np.argmin(dist))
            nearest = dist[s1]
            dist[s1] = np.inf
            s2 = int(np.argmin(dist))
            dist[s1] = nearest
        if track:
            self.won[s1] = True
            self.active[s1] = True
            if s2 is not None:
                self.active[s2] = True

        nbrs = self.adjacency[s1]
        for j in nbrs:
            nbrs[j] += 1
            self.adjacency[j][s1] += 1
        self.errors[s1] += dist[s1] ** 2
        self.positions[s1] += p.eps_winner * (x - self.positions[s1])
        if nbrs:
            idx = np.fromiter(nbrs.keys(), dtype=int, count=len(nbrs))
            self.positions[idx] += p.eps_neighbor * (x - self.positions[idx])

        if s2 is not None:
            nbrs[s2] = 0
            self.adjacency[s2][s1] = 0

        stale = [j for j, age in nbrs.items() if age > p.max_edge_age]
        for j in stale:
            del nbrs[j]
            del self.adjacency[j][s1]
        for j in sorted((j for j in stale if not self.adjacency[j]), reverse=True):
            self._remove(j)

        if step % p.insertion_interval == 0 and self.n < p.max_nodes:
            self._insert()
        self.errors *= p.error_decay

    def prune_dead_units(self):
        dead = np.flatnonzero(~self.active)
        if len(dead) >= self.n:
            dead = dead[1:]
        for j in sorted(dead.tolist(), reverse=True):
            self._remove(j)
        self.relink()
        # Last-epoch winners stay even when the relink leaves them unpaired.
        for j in reversed(range(self.n)):
            if self.n > 1 and not self.adjacency[j] and not self.won[j]:
                self._remove(j)

    def relink(self):
        """Rebuild edges by one Hebbian pass: each point links its two nearest neurons."""
        self.adjacency = [dict() for _ in range(self.n)]
        if self.n < 2:
            return
        chunk = max(1, 2_000_000 // self.n)
        for start in range(0, len(self.data), chunk):
            dist = _distance_block(self.data[start:start + chunk], self.positions, self.params.metric)
            pairs = np.sort(np.argsort(dist, axis=1, kind="stable")[:, :2], axis=1)
            for a, b in np.unique(pairs, axis=0).tolist():
                self.adjacency[a][b] = 0
                self.adjacency[b][a] = 0

    def to_graph(self) -> GngGraph:
        edges = {}
        for i, nbrs in enumerate(self.adjacency):
            for j, age in nbrs.items():
                if i < j:
                    edges[(i, j)] = int(age)
        graph = GngGraph(self.positions.copy(), self.errors.copy(), edges, params=self.params)
        graph.labels, _ = connected_components(graph)
        return graph


def gng_train(data: Sequence, params: GngParams) -> GngGraph:
    """Train a GNG graph over `data` (rows are feature vectors)."""
    try:
        data = np.asarray(data, dtype=float)
    except ValueError as e:
        raise DimensionMismatch(f"GNG data rows have inconsistent dimensions: {e}") from e
    if data.size == 0:
        raise InsufficientData("Cannot train GNG on empty data")
    if data.ndim != 2:
        raise DimensionMismatch(f"GNG data must be a 2-D array of equal-length vectors, got shape {data.shape}")
    if params.start_nodes > len(data):
        raise InsufficientData(f"start_nodes={params.start_nodes} exceeds the {len(data)} available data points")

    trainer = _GngTrainer(data, params)
    step = 0
    for epoch in range(params.epochs):
        last_epoch = epoch == params.epochs - 1
        for index in trainer.rng.permutation(len(data)):
            step += 1
            trainer.present(data[index], step, track=last_epoch)
    if params.prune_dead_units:
        trainer.prune_dead_units()

    graph = trainer.to_graph()
    log_debug(f"GNG trained: {graph.n_neurons} neurons, {len(graph.edges)} edges, {graph.component_count} components")
    return graph


def connected_components(graph: GngGraph) -> Tuple[np.ndarray, int]:
    """Label components 0..C-1 in order of each component's lowest neuron index."""
    n = graph.n_neurons
    adjacency: List[List[int]] = [[] for _ in range(n)]
    for a, b in graph.edges:
        adjacency[a].append(b)
        adjacency[b].append(a)

    labels = np.full(n, -1, dtype=int)
    component = 0
    for root in range(n):
        if labels[root] >= 0:
            continue
        labels[root] = component
        stack = [root]
        while stack:
            node = stack.pop()
            for child in adjacency[node]:
                if labels[child] < 0:
                    labels[child] = component
                    stack.append(child)
        component += 1
    return labels, component


def _vote(neighbor_labels: np.ndarray) -> np.ndarray:
    """Majority label per row; ties go to the label met first (nearest)."""
    counts = (neighbor_labels[:, :, None] == neighbor_labels[:, None, :]).sum(axis=2)
    winner = counts.argmax(axis=1)
    return neighbor_labels[np.arange(len(neighbor_labels)), winner]


def knn_assign_many(graph: GngGraph, points: Sequence, k: int) -> Tuple[np.ndarray, np.ndarray]:
    if graph.n_neurons == 0:
        raise InsufficientData("Cannot assign points against an empty GNG graph")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != graph.dimension:
        raise DimensionMismatch(f"Point dimension {points.shape[1]} != graph dimension {graph.dimension}")
    k = max(1, min(int(k), graph.n_neurons))
    labels = graph.labels if graph.labels is not None else connected_components(graph)[0]

    out_labels = np.empty(len(points), dtype=int)
    out_dist = np.empty(len(points))
    chunk = max(1, 2_000_000 // graph.n_neurons)
    for start in range(0, len(points), chunk):
        block = points[start:start + chunk]
        dist = _distance_block(block, graph.positions, graph.metric)
        order = np.argsort(dist, axis=1, kind="stable")[:, :k]
        out_labels[start:start + len(block)] = _vote(labels[order])
        out_dist[start:start + len(block)] = dist[np.arange(len(block)), order[:, 0]]
    return out_labels, out_dist


def knn_assign(graph: GngGraph, point: Sequence, k: int) -> ClusterAssignment:
    labels, distances = knn_assign_many(graph, [point], k)
    return ClusterAssignment(int(labels[0]), float(distances[0]))


# ============================ PERSISTENCE ============================

def graph_to_dict(graph: GngGraph) -> dict:
    return {
        "format": GRAPH_FORMAT,
        "version": GRAPH_VERSION,
        "params": graph.params.model_dump(mode="json") if graph.params is not None else None,
        "positions": graph.positions.tolist(),
        "errors": graph.errors.tolist(),
        "edges": [[a, b, age] for (a, b), age in sorted(graph.edges.items())],
        "labels": graph.labels.tolist() if graph.labels is not None else None,
    }


def graph_from_dict(data: dict, source: Union[str, Path] = "<memory>") -> GngGraph:
    if not isinstance(data, dict) or data.get("format") != GRAPH_FORMAT:
        raise BundleError(source, f"not a {GRAPH_FORMAT} document")
    version = data.get("version")
    if not isinstance(version, int) or version > GRAPH_VERSION:
        raise BundleError(source, f"unsupported graph format version {version!r} (max {GRAPH_VERSION})")
    try:
        positions = np.asarray(data["positions"], dtype=float)
        if positions.ndim != 2:
            positions = positions.reshape(len(positions), -1)
        graph = GngGraph(
            positions=positions,
            errors=np.asarray(data["errors"], dtype=float),
            edges={(int(a), int(b)): int(age) for a, b, age in data["edges"]},
            params=GngParams.model_validate(data["params"]) if data.get("params") else None,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise BundleError(source, f"corrupted graph document: {e}") from e
    labels = data.get("labels")
    graph.labels = np.asarray(labels, dtype=int) if labels is not None else connected_components(graph)[0]
    return graph


def save_graph(graph: GngGraph, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(graph_to_dict(graph), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_graph(path: Union[str, Path]) -> GngGraph:
    path = Path(path)
    if not path.exists():
        raise BundleError(path, "graph file is missing")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise BundleError(path, f"invalid JSON: {e}") from e
    return graph_from_dict(data, path)
