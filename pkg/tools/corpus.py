"""
corpus.py
Deterministic test spaces and domains.

Families:
  - grid    unit 4-neighbour grid, domain shaped as a disk, square, slit or spiral
  - rooms   square rooms in a row joined by one-cell corridors of growing length
  - halls   two deep halls joined by a wide door, then shallow closets behind one-cell passages
  - random  random geometric graph in the unit square, ball-shaped domain

Every generator is a pure function of its arguments; vertex (x, y) of a
w×h grid has id y·w + x and coords [x, y].
"""

import sys
import math
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
import networkx as nx
from scipy.spatial import cKDTree

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import (
    CORPUS_FAMILIES, GRID_SHAPES, DEFAULT_ROOM_SIDE, HALL_SIDE, CLOSET_SIDE, DEFAULT_RANDOM_DOMAIN_RADIUS,
)

sys.path.insert(0, str(Path(__file__).resolve().parent))
from metric_core import MetricSpace, Domain, ball


def grid_space(w: int, h: int, weight: float = 1.0) -> MetricSpace:
    edges = []
    for y in range(h):
        for x in range(w):
            v = y * w + x
            if x + 1 < w:
                edges.append((v, v + 1, weight))
            if y + 1 < h:
                edges.append((v, v + w, weight))
    coords = [(x, y) for y in range(h) for x in range(w)]
    return MetricSpace(w * h, edges, coords)


def _disk(w, h, radius):
    cx, cy = (w - 1) / 2, (h - 1) / 2
    return {(x, y) for y in range(h) for x in range(w) if (x - cx) ** 2 + (y - cy) ** 2 <= radius ** 2}


def _square(w, h):
    return {(x, y) for y in range(1, h - 1) for x in range(1, w - 1)}


def _slit(w, h):
    cut_x, cut_depth = w // 2, h // 2
    return {(x, y) for x, y in _square(w, h) if not (x == cut_x and y <= cut_depth)}


def _spiral(w, h):
    cells = {(1, 1)}
    x, y = 1, 1
    horizontal, vertical = w - 3, h - 3
    directions = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    arms = [horizontal, vertical, horizontal]
    turn = 0
    while True:
        if turn < len(arms):
            length = arms[turn]
        else:
            # after the first three arms each arm is two shorter than the last of its axis
            length = arms[turn - 2] - 2
            arms.append(length)
        if length <= 0:
            break
        dx, dy = directions[turn % 4]
        for _ in range(length):
            x, y = x + dx, y + dy
            cells.add((x, y))
        turn += 1
    return cells


def grid_domain(w: int, h: int, shape: str = "disk", radius: float | None = None,
                weight: float = 1.0) -> tuple[MetricSpace, Domain]:
    if w < 3 or h < 3:
        raise ValueError(f"Grid must be at least 3×3 (got {w}×{h})")
    if shape not in GRID_SHAPES:
        raise ValueError(f"Unknown grid shape {shape!r}; expected one of {GRID_SHAPES}")
    if shape == "disk":
        cells = _disk(w, h, radius if radius is not None else (min(w, h) - 1) / 2 - 1)
    elif shape == "square":
        cells = _square(w, h)
    elif shape == "slit":
        cells = _slit(w, h)
    else:
        cells = _spiral(w, h)
    if not cells:
        raise ValueError(f"{shape} domain is empty on a {w}×{h} grid")
    if len(cells) == w * h:
        raise ValueError(f"{shape} domain fills the whole {w}×{h} grid; complement must be nonempty")
    space = grid_space(w, h, weight)
    return space, Domain.from_mask(space, [y * w + x for x, y in cells])


def default_passage_length(i: int) -> int:
    """Corridor after room i (1-based)."""
    return 2 ** (i + 1)


def _room_sides(levels: int, room) -> list[int]:
    return [int(room(i)) if callable(room) else int(room) for i in range(1, levels + 1)]


def rooms_layout(levels: int, room=DEFAULT_ROOM_SIDE, passage_length=None) -> tuple[int, int, list[int]]:
    """(width, height, corridor lengths) of the bounding grid. `room` is a side or a function of the room index."""
    passage_length = passage_length or default_passage_length
    sides = _room_sides(levels, room)
    lengths = [int(passage_length(i)) for i in range(1, levels)]
    return 2 + sum(sides) + sum(lengths), max(sides) + 2, lengths


def rooms_and_passages(levels: int, room=DEFAULT_ROOM_SIDE, passage_length=None, passage_width=None,
                       weight: float = 1.0) -> tuple[MetricSpace, Domain]:
    """
    `levels` square rooms left to right inside a one-cell wall, each centred on
    the middle row and joined to the next by a corridor along that row.
    Room sides, corridor lengths and corridor widths may each be given as a
    function of the 1-based room index; corridors are one cell wide by default.
    """
    if levels < 1:
        raise ValueError(f"rooms_and_passages needs levels >= 1 (got {levels})")
    sides = _room_sides(levels, room)
    if any(side < 1 for side in sides):
        raise ValueError(f"Room sides must be positive (got {sides})")
    w, h, lengths = rooms_layout(levels, room, passage_length)
    if any(length < 1 for length in lengths):
        raise ValueError(f"Corridor lengths must be positive (got {lengths})")
    widths = [int(passage_width(i)) if passage_width else 1 for i in range(1, levels)]

    middle = 1 + (h - 2) // 2
    tops = [1 + (h - 2 - side) // 2 for side in sides]
    for i, width in enumerate(widths):
        first = middle - (width - 1) // 2
        if width < 1 or first < max(tops[i], tops[i + 1]) or \
                first + width > min(tops[i] + sides[i], tops[i + 1] + sides[i + 1]):
            raise ValueError(f"Corridor {i + 1} of width {width} does not fit between rooms "
                             f"of side {sides[i]} and {sides[i + 1]}")

    cells = set()
    x = 1
    for i, side in enumerate(sides):
        cells.update((x + dx, tops[i] + dy) for dx in range(side) for dy in range(side))
        x += side
        if i < len(lengths):
            first = middle - (widths[i] - 1) // 2
            cells.update((x + t, first + dy) for t in range(lengths[i]) for dy in range(widths[i]))
            x += lengths[i]
    space = grid_space(w, h, weight)
    return space, Domain.from_mask(space, [y * w + cx for cx, y in cells])


def halls_and_closets(levels: int, hall: int = HALL_SIDE, closet: int = CLOSET_SIDE,
                      weight: float = 1.0) -> tuple[MetricSpace, Domain]:
    """
    Two hall×hall rooms joined by a door four cells narrower than a hall,
    then levels − 1 closets strung one after another behind one-cell passages
    of lengths 3, 5, 8, 12, ... Every new level adds the longest passage.
    """
    if levels < 1:
        raise ValueError(f"halls_and_closets needs levels >= 1 (got {levels})")
    if hall < 5:
        raise ValueError(f"Hall side must be at least 5 (got {hall})")
    return rooms_and_passages(
        levels + 1,
        room=lambda i: hall if i <= 2 else closet,
        passage_length=lambda i: 1 if i == 1 else round(3 * 1.6 ** (i - 2)),
        passage_width=lambda i: hall - 4 if i == 1 else 1,
        weight=weight,
    )


def random_geometric(n: int, radius: float, seed: int = 0) -> MetricSpace:
    """
    n seeded points in the unit square, Euclidean-weighted edges between pairs
    within `radius`; the largest component is kept and relabelled in point order.
    """
    if n < 1:
        raise ValueError(f"random_geometric needs n >= 1 (got {n})")
    if not radius > 0:
        raise ValueError(f"Connection radius must be positive (got {radius})")
    points = np.random.default_rng(seed).random((n, 2))
    pairs = cKDTree(points).query_pairs(radius, output_type="ndarray")
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from(map(tuple, pairs))
    keep = sorted(max(nx.connected_components(graph), key=lambda comp: (len(comp), -min(comp))))
    relabel = {old: new for new, old in enumerate(keep)}
    edges = []
    for u, v in sorted((min(a, b), max(a, b)) for a, b in pairs.tolist()):
        if u in relabel and v in relabel:
            edges.append((relabel[u], relabel[v], float(np.linalg.norm(points[u] - points[v]))))
    return MetricSpace(len(keep), edges, points[keep].tolist())


def random_geometric_domain(n: int, radius: float, seed: int = 0,
                            domain_radius: float = DEFAULT_RANDOM_DOMAIN_RADIUS) -> tuple[MetricSpace, Domain]:
    """Geodesic ball around the vertex nearest the square's centre."""
    space = random_geometric(n, radius, seed)
    _, centre = cKDTree(np.asarray(space.coords)).query([0.5, 0.5])
    return space, Domain.from_mask(space, ball(space, int(centre), domain_radius))


@dataclass(frozen=True)
class CorpusSpec:
    family: str = "grid"
    width: int = 21
    height: int = 21
    shape: str = "disk"
    radius: float | None = None
    levels: int = 3
    room: int = DEFAULT_ROOM_SIDE
    n: int = 400
    seed: int = 0
    weight: float = 1.0
    domain_radius: float = DEFAULT_RANDOM_DOMAIN_RADIUS

    def build(self) -> tuple[MetricSpace, Domain]:
        if self.family not in CORPUS_FAMILIES:
            raise ValueError(f"Unknown corpus family {self.family!r}; expected one of {sorted(CORPUS_FAMILIES)}")
        if not self.weight > 0:
            raise ValueError(f"Edge weight must be positive (got {self.weight})")
        if self.family == "grid":
            return grid_domain(self.width, self.height, self.shape, self.radius, self.weight)
        if self.family == "rooms":
            return rooms_and_passages(self.levels, self.room, weight=self.weight)
        if self.family == "halls":
            return halls_and_closets(self.levels, weight=self.weight)
        connect = self.radius if self.radius is not None else 1.5 * math.sqrt(math.log(max(self.n, 2)) / self.n)
        return random_geometric_domain(self.n, connect, self.seed, self.domain_radius)

    def to_dict(self) -> dict:
        return asdict(self)
