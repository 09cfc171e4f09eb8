"""
separated_nets.py
Maximal r-separated nets whose balls either touch or stay a fixed fraction
of r apart.

Pipeline for one scale r:
    1. maximal_separated_net()  greedy scan by vertex id → centres x_i
    2. assign_radii()           inductive choice of r_i ∈ [r, 2r] so that
                                d(x_i, x_j) − r_i − r_j ∉ (0, c·r), c = 1/N
    3. verify_net()             independent pairwise re-check → NetReport

Net file format:
    {"r": w, "c": w, "N": k, "centers": [...], "radii": [...], "margin": w}
"""

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import NET_FLOAT_MARGIN

sys.path.insert(0, str(Path(__file__).resolve().parent))
from metric_core import MetricSpace, local_distances, multi_source_distance, INF
from utils import parallel_map, worker_context, save_json, load_json


class NetConstructionError(RuntimeError):
    """No radius in [r, 2r] avoids every forbidden interval."""


@dataclass(frozen=True)
class Net:
    r: float
    centers: tuple
    radii: tuple
    N: int
    c: float
    margin: float = 0.0

    def __len__(self) -> int:
        return len(self.centers)

    def to_dict(self) -> dict:
        return {
            "r": self.r, "c": self.c, "N": self.N, "margin": self.margin,
            "centers": list(self.centers), "radii": list(self.radii),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Net":
        try:
            return cls(float(data["r"]), tuple(int(v) for v in data["centers"]),
                       tuple(float(v) for v in data["radii"]), int(data["N"]),
                       float(data["c"]), float(data.get("margin", 0.0)))
        except (KeyError, TypeError, ValueError) as e:
            raise ValueError(f"Malformed net description: {e}") from e


@dataclass
class NetReport:
    passed: bool
    checks: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    near_boundary: int = 0
    pairs_checked: int = 0
    local_N: int = 1

    def to_dict(self) -> dict:
        return {
            "passed": self.passed, "checks": self.checks, "witnesses": self.witnesses,
            "near_boundary": self.near_boundary, "pairs_checked": self.pairs_checked,
            "local_N": self.local_N,
        }


def net_margin(space: MetricSpace, r: float) -> float:
    """0 when every comparison is exact (integer weights and scale), else 1e-9·r."""
    if space.integral and float(r).is_integer():
        return 0.0
    return NET_FLOAT_MARGIN * r


def maximal_separated_net(space: MetricSpace, r: float) -> list[int]:
    """
    Scan vertices in ascending id order and accept each one at distance ≥ r
    from every centre accepted so far.
    """
    if not r > 0:
        raise ValueError(f"Net scale must be positive (got {r})")
    tol = net_margin(space, r)
    nearest = np.full(space.n, INF)
    centers = []
    for v in range(space.n):
        if nearest[v] < r - tol:
            continue
        centers.append(v)
        for u, d in local_distances(space, v, r).items():
            if d < nearest[u]:
                nearest[u] = d
    return centers


def center_neighbours(space: MetricSpace, centers: list[int], reach: float) -> list[dict[int, float]]:
    """For each centre, {index of other centre: distance} within `reach`."""
    position = {v: i for i, v in enumerate(centers)}
    rows = []
    for x in centers:
        near = local_distances(space, x, reach)
        rows.append({position[v]: d for v, d in near.items() if v in position and v != x})
    return rows


def local_count(rows: list[dict[int, float]], r: float) -> int:
    """Largest number of other centres within 4r of a centre, floored at 1."""
    counts = [sum(1 for d in row.values() if d <= 4 * r) for row in rows]
    return max([1] + counts)


def _smallest_allowed(r: float, intervals: list[tuple[float, float]]) -> float | None:
    for cand in sorted({r, *(hi for _, hi in intervals)}):
        if cand < r or cand > 2 * r:
            continue
        if all(not (lo < cand < hi) for lo, hi in intervals):
            return cand
    return None


def assign_radii(space: MetricSpace, centers: list[int], r: float, N: int | None = None) -> Net:
    """
    Choose r_1 = r, then for each later centre the smallest radius in [r, 2r]
    outside every open interval (g − r/N, g) with g = d(x_i, x_k) − r_i, i < k.

    N defaults to the local 4r-neighbour count. A larger N (a cross-scale
    constant) may be supplied; a smaller one is rejected.
    """
    if not r > 0:
        raise ValueError(f"Net scale must be positive (got {r})")
    if not centers:
        raise ValueError("assign_radii needs at least one centre")
    centers = [space.check_vertex(v) for v in centers]
    margin = net_margin(space, r)

    rows = center_neighbours(space, centers, 5 * r + 2 * margin)
    for i, row in enumerate(rows):
        for j, d in row.items():
            if d < r - margin:
                raise ValueError(f"Centres {centers[i]} and {centers[j]} are {d} apart, "
                                 f"closer than r = {r}")

    needed = local_count(rows, r)
    if N is None:
        N = needed
    elif N < needed:
        raise ValueError(f"N = {N} is below the 4r-neighbour count {needed} of this net")
    step = r / N

    radii = [float(r)]
    for k in range(1, len(centers)):
        intervals = []
        pigeon = 0
        for i, d in rows[k].items():
            if i >= k:
                continue
            g = d - radii[i]
            if r <= g <= 2 * r:
                pigeon += 1
            lo, hi = g - step - margin, g + margin
            if lo < 2 * r and hi > r:
                intervals.append((lo, hi))
        if pigeon > N:
            raise NetConstructionError(f"Centre {centers[k]} sees {pigeon} constraining centres, "
                                       f"more than N = {N}")
        chosen = _smallest_allowed(r, intervals)
        if chosen is None:
            raise NetConstructionError(f"No radius in [{r}, {2 * r}] is admissible for centre "
                                       f"{centers[k]} ({len(intervals)} forbidden intervals)")
        radii.append(float(chosen))

    return Net(float(r), tuple(centers), tuple(radii), int(N), 1.0 / N, margin)


def build_net(space: MetricSpace, r: float, N: int | None = None) -> Net:
    return assign_radii(space, maximal_separated_net(space, r), r, N)


# ── Verification ─────────────────────────────────────────────────────────────

def _pair_chunk(indices: list[int]) -> dict:
    """Separation and gap checks for the pairs (i, j), i in `indices`, j > i."""
    space, net, tol = worker_context()
    r, c = net.r, net.c
    position = {v: i for i, v in enumerate(net.centers)}
    result = {"separation": None, "gap": None, "near": 0, "pairs": 0, "counts": []}
    for i in indices:
        x = net.centers[i]
        near = local_distances(space, x, 4 * r + c * r + tol)
        result["counts"].append(sum(1 for v, d in near.items() if v in position and v != x and d <= 4 * r))
        for v, d in sorted(near.items()):
            j = position.get(v)
            if j is None or j <= i:
                continue
            result["pairs"] += 1
            if d < r - tol and result["separation"] is None:
                result["separation"] = [x, v, d]
            gap = d - net.radii[i] - net.radii[j]
            if tol < gap < c * r - tol:
                if result["gap"] is None:
                    result["gap"] = [x, v, gap]
            elif tol > 0 and (abs(gap) <= tol or abs(gap - c * r) <= tol):
                result["near"] += 1
    return result


def verify_net(space: MetricSpace, net: Net, workers: int = 1) -> NetReport:
    """
    Re-check a net by direct computation: separation, radius range, coverage
    and the gap condition for every centre pair. Failures are report content.
    """
    r = net.r
    tol = net_margin(space, r)
    checks, witnesses = {}, {}

    bad_radius = next(((x, ri) for x, ri in zip(net.centers, net.radii)
                       if not (r - tol <= ri <= 2 * r + tol)), None)
    checks["radius_range"] = bad_radius is None
    witnesses["radius_range"] = None if bad_radius is None else list(bad_radius)

    offsets = {x: -ri for x, ri in zip(net.centers, net.radii)}
    field_ = multi_source_distance(space, net.centers, offsets=offsets)
    uncovered = np.flatnonzero(field_ > tol)
    checks["coverage"] = len(uncovered) == 0
    witnesses["coverage"] = int(uncovered[0]) if len(uncovered) else None

    indices = list(range(len(net.centers)))
    chunk = max(1, len(indices) // max(1, workers * 4))
    chunks = [indices[i:i + chunk] for i in range(0, len(indices), chunk)]
    parts = parallel_map(_pair_chunk, chunks, context=(space, net, tol), workers=workers, chunksize=1)

    separation = next((p["separation"] for p in parts if p["separation"] is not None), None)
    gap = next((p["gap"] for p in parts if p["gap"] is not None), None)
    local_N = max([1] + [n for p in parts for n in p["counts"]])
    checks["separation"] = separation is None
    witnesses["separation"] = separation
    checks["gap"] = gap is None
    witnesses["gap"] = gap
    checks["gap_constant"] = net.N >= local_N and abs(net.c - 1.0 / net.N) <= 1e-12
    witnesses["gap_constant"] = None if checks["gap_constant"] else [net.N, local_N, net.c]

    return NetReport(
        passed=all(checks.values()),
        checks=checks,
        witnesses=witnesses,
        near_boundary=sum(p["near"] for p in parts),
        pairs_checked=sum(p["pairs"] for p in parts),
        local_N=local_N,
    )


def save_net(net: Net, path: Path) -> Path:
    return save_json(net.to_dict(), path)


def load_net(path: Path) -> Net:
    return Net.from_dict(load_json(path))
