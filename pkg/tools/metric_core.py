"""
metric_core.py
Finite geodesic metric spaces carried by weighted undirected graphs.

Provides:
  - MetricSpace       graph + shortest-path metric, memoised per-source fields
  - Domain            connected nonempty vertex set with a spanning-tree certificate
  - distance queries  geodesic_distance, multi_source_distance, boundary_distance, local_distances
  - sets              ball, neighborhood, connected_component
  - paths             shortest_path, geodesic_to_set (smallest-id predecessor tie-break)
  - doubling          estimate_doubling (greedy cover), exact_cover_count (oracle)
  - persistence       load_space / save_space / load_mask / save_mask / grid_shape

Space file format:
    {"n": int, "edges": [[u, v, w], ...], "coords": optional [[x, y], ...]}
"""

import sys
import math
import heapq
import threading
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import networkx as nx

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import FIELD_CACHE_LIMIT, LENGTH_RTOL, DOUBLING_SAMPLE_CENTERS

sys.path.insert(0, str(Path(__file__).resolve().parent))
from utils import save_json, load_json

# A Mask is an immutable set of vertex ids of one MetricSpace.
Mask = frozenset
# A DistanceField is a float64 array of length n; +inf marks unreachable.
DistanceField = np.ndarray

INF = math.inf


class MetricSpace:
    """
    Connected weighted graph with its shortest-path metric.

    Immutable after construction. The per-source field cache is guarded by a
    lock so one instance can serve concurrent readers; it is not pickled.
    """

    def __init__(self, n: int, edges, coords=None):
        if n < 1:
            raise ValueError(f"A metric space needs at least one vertex (got n={n})")
        best: dict[tuple[int, int], float] = {}
        for edge in edges:
            u, v, w = int(edge[0]), int(edge[1]), float(edge[2])
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"Edge ({u}, {v}) has a vertex outside 0..{n - 1}")
            if u == v:
                raise ValueError(f"Self-loop at vertex {u} is not allowed")
            if not (w > 0 and math.isfinite(w)):
                raise ValueError(f"Edge ({u}, {v}) has non-positive or non-finite weight {w}")
            key = (min(u, v), max(u, v))
            if key not in best or w < best[key]:
                best[key] = w

        self.n = n
        self.edges = tuple((u, v, w) for (u, v), w in sorted(best.items()))
        self.graph = nx.Graph()
        self.graph.add_nodes_from(range(n))
        self.graph.add_weighted_edges_from(self.edges)
        if n > 1 and not nx.is_connected(self.graph):
            raise ValueError("The graph must be connected to carry a metric")

        adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for u, v, w in self.edges:
            adj[u].append((v, w))
            adj[v].append((u, w))
        for row in adj:
            row.sort()
        self.adj = tuple(tuple(row) for row in adj)

        weights = [w for _, _, w in self.edges]
        self.min_edge = min(weights) if weights else 0.0
        self.resolution = max(weights) if weights else 0.0
        self.quasiconvexity = 1.0
        self.integral = all(float(w).is_integer() for w in weights)
        if coords is not None and len(coords) != n:
            raise ValueError(f"coords has {len(coords)} entries for {n} vertices")
        self.coords = None if coords is None else tuple(tuple(float(c) for c in p) for p in coords)

        self._cache: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return self.n

    def __getstate__(self):
        state = self.__dict__.copy()
        state.pop("_cache", None)
        state.pop("_lock", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._cache = {}
        self._lock = threading.Lock()

    def check_vertex(self, v) -> int:
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or not 0 <= v < self.n:
            raise ValueError(f"Invalid vertex id {v!r} (space has {self.n} vertices)")
        return int(v)

    def distances_from(self, v: int) -> DistanceField:
        """Read-only single-source field, memoised."""
        v = self.check_vertex(v)
        with self._lock:
            cached = self._cache.get(v)
        if cached is not None:
            return cached
        arr = np.asarray(dijkstra(self, {v: 0.0}), dtype=float)
        arr.flags.writeable = False
        with self._lock:
            if len(self._cache) >= FIELD_CACHE_LIMIT:
                self._cache.pop(next(iter(self._cache)))
            self._cache[v] = arr
        return arr

    def scaled(self, factor: float) -> "MetricSpace":
        """Same graph with every edge weight multiplied by `factor`."""
        if not factor > 0:
            raise ValueError(f"Scale factor must be positive (got {factor})")
        return MetricSpace(self.n, [(u, v, w * factor) for u, v, w in self.edges], self.coords)

    def to_dict(self) -> dict:
        data = {"n": self.n, "edges": [[u, v, w] for u, v, w in self.edges]}
        if self.coords is not None:
            data["coords"] = [list(p) for p in self.coords]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "MetricSpace":
        try:
            return cls(int(data["n"]), data["edges"], data.get("coords"))
        except (KeyError, TypeError, IndexError) as e:
            raise ValueError(f"Malformed space description: {e}") from e


def dijkstra(space: MetricSpace, seeds: dict[int, float], within=None, cutoff: float | None = None) -> list[float]:
    """
    Heap-based multi-source Dijkstra over the adjacency lists.

    seeds maps start vertices to initial labels (offsets may be negative).
    within, when given, is a set of allowed vertices; cutoff drops labels
    above it. Returns a plain list of labels, +inf where unreached.
    """
    dist = [INF] * space.n
    heap = []
    for v, d0 in seeds.items():
        if within is not None and v not in within:
            continue
        if d0 < dist[v]:
            dist[v] = d0
            heap.append((d0, v))
    heapq.heapify(heap)
    adj = space.adj
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in adj[u]:
            nd = d + w
            if nd >= dist[v]:
                continue
            if cutoff is not None and nd > cutoff:
                continue
            if within is not None and v not in within:
                continue
            dist[v] = nd
            heapq.heappush(heap, (nd, v))
    return dist


def local_distances(space: MetricSpace, source: int, cutoff: float, within=None) -> dict[int, float]:
    """Sparse single-source labels for the vertices within `cutoff` of `source`."""
    source = space.check_vertex(source)
    if within is not None and source not in within:
        return {}
    dist = {source: 0.0}
    heap = [(0.0, source)]
    adj = space.adj
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in adj[u]:
            nd = d + w
            if nd > cutoff or nd >= dist.get(v, INF):
                continue
            if within is not None and v not in within:
                continue
            dist[v] = nd
            heapq.heappush(heap, (nd, v))
    return dist


def as_mask(space: MetricSpace, ids) -> Mask:
    return frozenset(space.check_vertex(v) for v in ids)


def mask_of(field: DistanceField, radius: float) -> Mask:
    return frozenset(int(v) for v in np.flatnonzero(field <= radius))


# ── Distances ────────────────────────────────────────────────────────────────

def geodesic_distance(space: MetricSpace, a: int, b: int) -> float:
    space.check_vertex(b)
    return float(space.distances_from(a)[b])


def multi_source_distance(space: MetricSpace, sources, within=None, offsets: dict | None = None,
                          cutoff: float | None = None) -> DistanceField:
    """
    f(v) = min over sources s of d(v, s) (+ offsets[s] when given).

    Empty sources give f ≡ +inf. With `within`, paths are restricted to that
    vertex set and vertices outside it stay at +inf.
    """
    seeds = {space.check_vertex(s): (offsets[s] if offsets else 0.0) for s in sources}
    if not seeds:
        return np.full(space.n, INF)
    if within is None and offsets is None and cutoff is None and len(seeds) == 1:
        return np.array(space.distances_from(next(iter(seeds))))
    return np.asarray(dijkstra(space, seeds, within=within, cutoff=cutoff), dtype=float)


def boundary_distance(space: MetricSpace, mask) -> DistanceField:
    """dist(v, X \\ mask); +inf everywhere when the mask is the whole space."""
    mask = getattr(mask, "mask", mask)
    complement = [v for v in range(space.n) if v not in mask]
    return multi_source_distance(space, complement)


def ball(space: MetricSpace, center: int, radius: float) -> Mask:
    """Closed ball {v : d(center, v) <= radius}."""
    if radius < 0:
        raise ValueError(f"Ball radius must be nonnegative (got {radius})")
    return mask_of(space.distances_from(center), radius)


def neighborhood(space: MetricSpace, mask, radius: float) -> Mask:
    """Closed neighbourhood {v : dist(v, mask) <= radius}; empty for an empty mask."""
    if radius < 0:
        raise ValueError(f"Neighbourhood radius must be nonnegative (got {radius})")
    if not mask:
        return frozenset()
    field = multi_source_distance(space, mask, cutoff=radius)
    return mask_of(field, radius)


def connected_component(space: MetricSpace, mask, seed: int) -> Mask:
    seed = space.check_vertex(seed)
    if seed not in mask:
        raise ValueError(f"Seed vertex {seed} is not in the mask")
    return frozenset(nx.node_connected_component(space.graph.subgraph(mask), seed))


# ── Paths ────────────────────────────────────────────────────────────────────

def _close(a: float, b: float) -> bool:
    return abs(a - b) <= LENGTH_RTOL * max(1.0, abs(a), abs(b))


def _descend(space: MetricSpace, start: int, field, within=None) -> list[int]:
    """Follow strictly decreasing field values to a zero, smallest id first."""
    if not math.isfinite(field[start]):
        raise ValueError(f"Vertex {start} cannot reach the target inside the allowed set")
    path = [start]
    u = start
    while field[u] > 0:
        nxt = None
        for v, w in space.adj[u]:
            if within is not None and v not in within:
                continue
            if field[v] < field[u] and _close(field[v] + w, field[u]):
                nxt = v
                break
        if nxt is None:
            raise RuntimeError(f"No predecessor found at vertex {u}; field is not a distance field")
        path.append(nxt)
        u = nxt
    return path


def shortest_path(space: MetricSpace, a: int, b: int, within=None) -> list[int]:
    """Deterministic geodesic a → b, optionally inside the induced subgraph of `within`."""
    a, b = space.check_vertex(a), space.check_vertex(b)
    if within is not None and (a not in within or b not in within):
        raise ValueError(f"Endpoints {a}, {b} must lie in the restricting set")
    if a == b:
        return [a]
    if within is None:
        field = space.distances_from(b)
    else:
        field = dijkstra(space, {b: 0.0}, within=within)
    return _descend(space, a, field, within)


def geodesic_to_set(space: MetricSpace, start: int, targets, within=None) -> list[int]:
    """Deterministic shortest path from `start` to its nearest vertex of `targets`."""
    field = dijkstra(space, {t: 0.0 for t in targets}, within=within)
    return _descend(space, space.check_vertex(start), field, within)


def path_length(space: MetricSpace, path: list[int]) -> float:
    total = 0.0
    for u, v in zip(path, path[1:]):
        total += space.graph[u][v]["weight"]
    return total


# ── Domains ──────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class Domain:
    """Nonempty vertex set, connected in its induced subgraph."""
    space: MetricSpace
    mask: Mask
    tree: tuple = field(repr=False)

    @classmethod
    def from_mask(cls, space: MetricSpace, ids) -> "Domain":
        mask = as_mask(space, ids)
        if not mask:
            raise ValueError("A domain must be nonempty")
        root = min(mask)
        sub = space.graph.subgraph(mask)
        tree = tuple(sorted((child, parent) for child, parent in nx.bfs_predecessors(sub, root)))
        if len(tree) + 1 != len(mask):
            raise ValueError(f"Mask of {len(mask)} vertices is not connected "
                             f"({len(tree) + 1} reachable from vertex {root})")
        return cls(space, mask, tree)

    def __len__(self) -> int:
        return len(self.mask)

    def __contains__(self, v) -> bool:
        return v in self.mask

    @property
    def vertices(self) -> list[int]:
        return sorted(self.mask)

    @property
    def is_whole_space(self) -> bool:
        return len(self.mask) == self.space.n

    def complement(self) -> Mask:
        return frozenset(range(self.space.n)) - self.mask


# ── Doubling ─────────────────────────────────────────────────────────────────

@dataclass
class DoublingSample:
    centers: int | None = DOUBLING_SAMPLE_CENTERS
    seed: int = 0


@dataclass
class DoublingEstimate:
    constant: int
    scales: list[float]
    per_scale: list[int]
    centers_sampled: int
    gap_note: str = ("Greedy cover counts of the discrete space, an upper bound on its exact "
                     "cover counts. Nothing is claimed for a continuum the graph samples.")

    def to_dict(self) -> dict:
        return {"C_d": self.constant, "scales": self.scales, "per_scale": self.per_scale,
                "centers_sampled": self.centers_sampled, "note": self.gap_note}


def _greedy_cover(space: MetricSpace, members: np.ndarray, half: float) -> int:
    covers = np.stack([space.distances_from(int(p))[members] <= half for p in members])
    uncovered = np.ones(len(members), dtype=bool)
    count = 0
    while uncovered.any():
        gains = covers[:, uncovered].sum(axis=1)
        best = int(np.argmax(gains))
        uncovered &= ~covers[best]
        count += 1
    return count


def estimate_doubling(space: MetricSpace, scales: list[float], sample: DoublingSample | None = None) -> DoublingEstimate:
    """
    Cover each sampled ball B(x, r) greedily by balls of radius r/2 centred at
    its own points; C_d is the largest count seen. Deterministic for a seed.
    """
    if not scales:
        raise ValueError("estimate_doubling needs at least one scale")
    if any(not r > 0 for r in scales):
        raise ValueError(f"Scales must be positive (got {scales})")
    sample = sample or DoublingSample()
    if sample.centers is None or sample.centers >= space.n:
        centers = list(range(space.n))
    else:
        rng = np.random.default_rng(sample.seed)
        centers = sorted(int(c) for c in rng.choice(space.n, size=sample.centers, replace=False))

    per_scale = []
    for r in scales:
        worst = 1
        for x in centers:
            members = np.flatnonzero(space.distances_from(x) <= r)
            worst = max(worst, _greedy_cover(space, members, r / 2))
        per_scale.append(worst)
    return DoublingEstimate(max(per_scale + [1]), list(scales), per_scale, len(centers))


def exact_cover_count(space: MetricSpace, center: int, r: float) -> int:
    """Minimal number of r/2-balls centred in B(center, r) covering it (exhaustive)."""
    members = [int(v) for v in np.flatnonzero(space.distances_from(center) <= r)]
    if len(members) > 30:
        raise ValueError(f"Exhaustive cover limited to 30 vertices (ball has {len(members)})")
    target = frozenset(members)
    halves = {p: ball(space, p, r / 2) & target for p in members}
    for k in range(1, len(members) + 1):
        for combo in itertools.combinations(members, k):
            if frozenset().union(*(halves[p] for p in combo)) == target:
                return k
    return len(members)


# ── Persistence ──────────────────────────────────────────────────────────────

def grid_shape(space: MetricSpace) -> tuple[int, int] | None:
    """(width, height) when coords are the integer cells of a full grid, else None."""
    if space.coords is None:
        return None
    if not all(float(c).is_integer() for p in space.coords for c in p[:2]):
        return None
    xs = [int(p[0]) for p in space.coords]
    ys = [int(p[1]) for p in space.coords]
    w, h = max(xs) + 1, max(ys) + 1
    if min(xs) != 0 or min(ys) != 0 or w * h != space.n:
        return None
    if len(set(zip(xs, ys))) != space.n:
        return None
    return w, h


def save_space(space: MetricSpace, path: Path) -> Path:
    return save_json(space.to_dict(), path)


def load_space(path: Path) -> MetricSpace:
    return MetricSpace.from_dict(load_json(path))


def save_mask(mask, n: int, path: Path) -> Path:
    return save_json({"n": n, "mask": sorted(int(v) for v in mask)}, path)


def load_mask(path: Path, space: MetricSpace) -> Mask:
    data = load_json(path)
    try:
        n, ids = int(data["n"]), data["mask"]
    except (KeyError, TypeError) as e:
        raise ValueError(f"Malformed mask file {path}: {e}") from e
    if n != space.n:
        raise ValueError(f"Mask file {path} is for {n} vertices, space has {space.n}")
    return as_mask(space, ids)
