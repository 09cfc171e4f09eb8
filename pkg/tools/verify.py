"""
verify.py
Uniformity measurement, proof-following curves and closeness checks.

A domain Ω is C-uniform for a pair (x, y) when some vertex path γ ⊂ Ω from x
to y has ℓ(γ) ≤ C·d(x, y) and, at every vertex z of γ,
    min(ℓ(γ_{x,z}), ℓ(γ_{z,y})) ≤ C·dist(z, X∖Ω).

Provides:
  - feasible_cigar_path()           exact decision for one C (constrained labels)
  - min_uniformity_constant_pair()  bisection on C
  - brute_force_uniformity()        simple-path enumeration oracle (≤ 12 vertices)
  - empirical_uniformity()          stratified pair sample → UniformityReport
  - proof_curve() / certify_pairs() curves built level by level from a faithful trace
  - closeness_check()               one-sided ε-closeness and containment
"""

import sys
import math
import heapq
import itertools
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import networkx as nx

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import (
    UNIFORMITY_REL_TOL, MAX_BISECTION_STEPS, ALL_PAIRS_THRESHOLD, DEFAULT_PAIR_SAMPLE,
    DISTANCE_STRATA, BRUTE_FORCE_VERTEX_LIMIT, PAIR_SOURCE_SAMPLE, CERTIFICATE_RTOL,
    LENGTH_RTOL, DISCRETISATION_NOTE,
)

sys.path.insert(0, str(Path(__file__).resolve().parent))
from metric_core import (
    MetricSpace, Domain, INF, boundary_distance, multi_source_distance, geodesic_distance,
    shortest_path, geodesic_to_set, path_length, neighborhood,
)
from approximate import ScaleTrace
from utils import parallel_map, worker_context


class CertificateViolation(RuntimeError):
    """A proof-curve measurement broke one of the construction's bounds."""

    def __init__(self, certificate: "Certificate", pair: tuple):
        failed = [b for b in certificate.bounds if not b["ok"]]
        first = failed[0] if failed else {}
        super().__init__(f"Pair {pair}: bound {first.get('name')} violated "
                         f"(measured {first.get('measured')}, bound {first.get('bound')})")
        self.certificate = certificate
        self.pair = pair


# ── Curves ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Curve:
    vertices: tuple
    prefix: tuple

    @classmethod
    def along(cls, space: MetricSpace, vertices) -> "Curve":
        vertices = tuple(int(v) for v in vertices)
        if not vertices:
            raise ValueError("A curve needs at least one vertex")
        prefix = [0.0]
        for u, v in zip(vertices, vertices[1:]):
            if not space.graph.has_edge(u, v):
                raise ValueError(f"Curve step {u} → {v} is not an edge")
            prefix.append(prefix[-1] + space.graph[u][v]["weight"])
        return cls(vertices, tuple(prefix))

    @property
    def length(self) -> float:
        return self.prefix[-1]

    def __len__(self) -> int:
        return len(self.vertices)

    def cigar_ratios(self, b) -> np.ndarray:
        """Per-vertex min(prefix, suffix) / b; 0 where b is infinite."""
        prefix = np.asarray(self.prefix)
        near = np.minimum(prefix, self.length - prefix)
        depth = np.asarray(b, dtype=float)[list(self.vertices)]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(np.isinf(depth), 0.0, near / depth)
        return np.nan_to_num(ratio, nan=0.0, posinf=INF)

    def satisfies(self, b, C: float, d: float) -> bool:
        """Direct scan of the length and cigar constraints at constant C."""
        slack = 1 + LENGTH_RTOL
        if self.length > C * d * slack:
            return False
        prefix = np.asarray(self.prefix)
        near = np.minimum(prefix, self.length - prefix)
        depth = np.asarray(b, dtype=float)[list(self.vertices)]
        return bool(np.all(near <= C * depth * slack))

    def to_dict(self) -> dict:
        return {"vertices": list(self.vertices), "length": self.length}


def _simplify(walk: list[int]) -> list[int]:
    """Cut every loop out of a walk, keeping the first visit of each vertex."""
    out, seen = [], {}
    for v in walk:
        if v in seen:
            for u in out[seen[v] + 1:]:
                del seen[u]
            del out[seen[v] + 1:]
            continue
        seen[v] = len(out)
        out.append(v)
    return out


# ── Exact decision for one constant ──────────────────────────────────────────

def _constrained_labels(space: MetricSpace, mask, b: list, source: int, C: float):
    """Shortest lengths from `source` over paths whose running length stays ≤ C·b."""
    slack = 1 + LENGTH_RTOL
    dist = {source: 0.0}
    pred = {source: None}
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in space.adj[u]:
            if v not in mask:
                continue
            nd = d + w
            if nd >= dist.get(v, INF) or nd > C * b[v] * slack:
                continue
            dist[v] = nd
            pred[v] = u
            heapq.heappush(heap, (nd, v))
    return dist, pred


def _chain(pred: dict, v: int) -> list[int]:
    out = [v]
    while pred[out[-1]] is not None:
        out.append(pred[out[-1]])
    return out


def _check_pair(space: MetricSpace, domain: Domain, x: int, y: int):
    x, y = space.check_vertex(x), space.check_vertex(y)
    for v in (x, y):
        if v not in domain:
            raise ValueError(f"Vertex {v} is not in the domain")
    return x, y


def feasible_cigar_path(space: MetricSpace, domain: Domain, x: int, y: int, C: float,
                        b=None) -> Curve | None:
    """
    A vertex path in the domain meeting the length and cigar constraints at
    constant C, or None. Vertices before the split satisfy prefix ≤ C·b,
    vertices after it suffix ≤ C·b; the split is a vertex or an edge.
    """
    x, y = _check_pair(space, domain, x, y)
    if x == y:
        return Curve((x,), (0.0,))
    if b is None:
        b = boundary_distance(space, domain)
    depth = b.tolist() if isinstance(b, np.ndarray) else b
    d = geodesic_distance(space, x, y)

    from_x, pred_x = _constrained_labels(space, domain.mask, depth, x, C)
    from_y, pred_y = _constrained_labels(space, domain.mask, depth, y, C)

    best, join = INF, None
    for u in sorted(from_x):
        lx = from_x[u]
        if u in from_y and lx + from_y[u] < best:
            best, join = lx + from_y[u], (u, u)
        for v, w in space.adj[u]:
            if v in from_y and v in domain.mask and lx + w + from_y[v] < best:
                best, join = lx + w + from_y[v], (u, v)
    if join is None or best > C * d * (1 + LENGTH_RTOL):
        return None

    u, v = join
    head = list(reversed(_chain(pred_x, u)))
    tail = _chain(pred_y, v)
    walk = head + (tail[1:] if u == v else tail)
    return Curve.along(space, _simplify(walk))


def _upper_bound_constant(space: MetricSpace, domain: Domain, x: int, y: int, b, d: float) -> float:
    path = shortest_path(space, x, y, within=domain.mask)
    ell = path_length(space, path)
    shallow = min(float(b[v]) for v in path)
    factor = 1.0 if math.isinf(shallow) else max(1.0, ell / shallow)
    return ell / d * factor


def solve_pair(space: MetricSpace, domain: Domain, x: int, y: int, rel_tol: float = UNIFORMITY_REL_TOL,
               b=None) -> tuple[float, Curve]:
    """Smallest feasible C (within rel_tol) and its witness curve."""
    x, y = _check_pair(space, domain, x, y)
    if x == y:
        return 1.0, Curve((x,), (0.0,))
    if b is None:
        b = boundary_distance(space, domain)
    witness = feasible_cigar_path(space, domain, x, y, 1.0, b)
    if witness is not None:
        return 1.0, witness

    d = geodesic_distance(space, x, y)
    hi = _upper_bound_constant(space, domain, x, y, b, d)
    witness = feasible_cigar_path(space, domain, x, y, hi, b)
    if witness is None:
        raise RuntimeError(f"Upper bound C = {hi} is infeasible for pair ({x}, {y})")
    lo = 1.0
    for _ in range(MAX_BISECTION_STEPS):
        if hi - lo <= rel_tol * lo:
            break
        mid = (lo + hi) / 2
        curve = feasible_cigar_path(space, domain, x, y, mid, b)
        if curve is None:
            # feasibility is monotone in C, so the witness for hi must fail at mid
            if witness.satisfies(b, mid, d):
                raise RuntimeError(f"Feasibility is not monotone in C for pair ({x}, {y}): "
                                   f"C = {mid} rejected but the witness for C = {hi} meets it")
            lo = mid
        elif not curve.satisfies(b, mid, d):
            raise RuntimeError(f"Witness for pair ({x}, {y}) fails a direct scan at C = {mid}")
        else:
            hi, witness = mid, curve
    return hi, witness


def min_uniformity_constant_pair(space: MetricSpace, domain: Domain, x: int, y: int,
                                 rel_tol: float = UNIFORMITY_REL_TOL) -> float:
    x, y = _check_pair(space, domain, x, y)
    if x == y:
        raise ValueError("min_uniformity_constant_pair needs two distinct vertices")
    return solve_pair(space, domain, x, y, rel_tol)[0]


def brute_force_uniformity(space: MetricSpace, domain: Domain, x: int, y: int) -> float:
    """min over simple paths of max(ℓ/d, max_z min(prefix, suffix)/b(z))."""
    x, y = _check_pair(space, domain, x, y)
    if len(domain) > BRUTE_FORCE_VERTEX_LIMIT:
        raise ValueError(f"Brute force limited to {BRUTE_FORCE_VERTEX_LIMIT} domain vertices "
                         f"(got {len(domain)})")
    if x == y:
        return 1.0
    b = boundary_distance(space, domain)
    d = geodesic_distance(space, x, y)
    best = INF
    for path in nx.all_simple_paths(space.graph.subgraph(domain.mask), x, y):
        curve = Curve.along(space, path)
        interior = curve.cigar_ratios(b)[1:-1]
        need = max(curve.length / d, float(interior.max()) if len(interior) else 0.0)
        best = min(best, need)
    return best


# ── Sampling and aggregation ─────────────────────────────────────────────────

@dataclass
class SamplingSpec:
    pairs: int = DEFAULT_PAIR_SAMPLE
    seed: int = 0
    strata: int = DISTANCE_STRATA
    all_pairs_threshold: int = ALL_PAIRS_THRESHOLD
    sources: int = PAIR_SOURCE_SAMPLE
    rel_tol: float = UNIFORMITY_REL_TOL


def _strata(ds: np.ndarray, count: int) -> np.ndarray:
    if len(ds) == 0:
        return np.zeros(0, dtype=int)
    edges = np.geomspace(ds.min(), ds.max(), count + 1)
    return np.clip(np.searchsorted(edges, ds, side="right") - 1, 0, count - 1)


def sample_pairs(space: MetricSpace, mask, spec: SamplingSpec) -> list[tuple[int, int, float, int]]:
    """
    (x, y, d, stratum) with x < y, sorted. All pairs for small domains,
    otherwise pairs from seeded sources spread over log-spaced distance bands.
    """
    verts = np.array(sorted(mask), dtype=int)
    if len(verts) < 2:
        return []
    if len(verts) <= spec.all_pairs_threshold:
        pairs = list(itertools.combinations(verts.tolist(), 2))
        ds = np.array([space.distances_from(x)[y] for x, y in pairs])
        bands = _strata(ds, spec.strata)
        return [(x, y, float(d), int(s)) for (x, y), d, s in zip(pairs, ds, bands)]

    rng = np.random.default_rng(spec.seed)
    sources = np.sort(rng.choice(verts, size=min(spec.sources, len(verts)), replace=False))
    xs, ys, ds = [], [], []
    for x in sources:
        others = verts[verts != x]
        xs.append(np.full(len(others), x))
        ys.append(others)
        ds.append(space.distances_from(int(x))[others])
    xs, ys, ds = np.concatenate(xs), np.concatenate(ys), np.concatenate(ds)
    bands = _strata(ds, spec.strata)

    quota = [spec.pairs // spec.strata + (1 if i < spec.pairs % spec.strata else 0)
             for i in range(spec.strata)]
    chosen, spare = {}, []

    def add(i):
        a, c = int(xs[i]), int(ys[i])
        chosen.setdefault((min(a, c), max(a, c)), (float(ds[i]), int(bands[i])))

    for band in range(spec.strata):
        idx = np.flatnonzero(bands == band)
        if len(idx) == 0:
            continue
        take = rng.choice(idx, size=min(quota[band], len(idx)), replace=False)
        for i in take:
            add(i)
        spare.append(np.setdiff1d(idx, take))

    # quota left by thin bands and mirrored duplicates goes to the other candidates
    if len(chosen) < spec.pairs and spare:
        for i in rng.permutation(np.concatenate(spare)):
            if len(chosen) >= spec.pairs:
                break
            add(i)
    return [(x, y, d, s) for (x, y), (d, s) in sorted(chosen.items())]


@dataclass
class UniformityReport:
    domain_id: str
    pairs: int
    per_pair: list = field(repr=False)
    cu_max: float
    cu_p95: float
    cu_median: float
    worst_pair: list | None
    worst_curve: list | None = field(default=None, repr=False)
    strata: dict = field(default_factory=dict)
    closeness: dict | None = None
    mode: str = "raw"
    certified: bool = False
    certification: dict | None = None
    trace_checks: dict | None = None
    note: str = DISCRETISATION_NOTE

    def to_dict(self) -> dict:
        return {
            "domain": self.domain_id,
            "pairs": self.pairs,
            "cu_max": self.cu_max,
            "cu_p95": self.cu_p95,
            "cu_median": self.cu_median,
            "worst_pair": self.worst_pair,
            "worst_curve": self.worst_curve,
            "strata": self.strata,
            "closeness": self.closeness,
            "mode": self.mode,
            "certified": self.certified,
            "certification": self.certification,
            "trace_checks": self.trace_checks,
            "note": self.note,
            "per_pair": self.per_pair,
        }


def _pair_job(pair):
    space, domain, b, rel_tol = worker_context()
    x, y, d, band = pair
    cu, curve = solve_pair(space, domain, x, y, rel_tol, b)
    return {"x": x, "y": y, "d": d, "stratum": band, "cu": cu, "curve": list(curve.vertices)}


def empirical_uniformity(space: MetricSpace, domain: Domain, spec: SamplingSpec | None = None,
                         workers: int = 1, domain_id: str = "omega", mode: str = "raw") -> UniformityReport:
    spec = spec or SamplingSpec()
    b = boundary_distance(space, domain)
    pairs = sample_pairs(space, domain.mask, spec)
    rows = parallel_map(_pair_job, pairs, context=(space, domain, b, spec.rel_tol), workers=workers)
    print(f"  [ok] {domain_id}: {len(rows)} pairs evaluated")

    if not rows:
        return UniformityReport(domain_id, 0, [], 1.0, 1.0, 1.0, None, None, {}, mode=mode)

    df = pd.DataFrame(rows).sort_values(["x", "y"], kind="stable").reset_index(drop=True)
    worst = df.loc[df["cu"].idxmax()]
    strata = {str(k): int(v) for k, v in df["stratum"].value_counts().sort_index().items()}
    per_pair = df[["x", "y", "d", "stratum", "cu"]].to_dict(orient="records")
    return UniformityReport(
        domain_id=domain_id,
        pairs=len(df),
        per_pair=[{k: (int(v) if k in ("x", "y", "stratum") else float(v)) for k, v in r.items()}
                  for r in per_pair],
        cu_max=float(df["cu"].max()),
        cu_p95=float(df["cu"].quantile(0.95)),
        cu_median=float(df["cu"].median()),
        worst_pair=[int(worst["x"]), int(worst["y"])],
        worst_curve=list(worst["curve"]),
        strata=strata,
        mode=mode,
    )


# ── Proof-following curves ───────────────────────────────────────────────────

@dataclass
class Certificate:
    regime: str
    n: int | None = None
    d: float = 0.0
    length: float = 0.0
    bounds: list = field(default_factory=list)
    measured: dict = field(default_factory=dict)
    strict_descent_ok: bool | None = None

    @property
    def ok(self) -> bool:
        return all(b["ok"] for b in self.bounds)

    @property
    def certified(self) -> bool:
        return self.regime in ("trivial", "geodesic", "small") and self.ok

    def upper(self, name: str, measured: float, bound: float):
        self.bounds.append({"name": name, "measured": float(measured), "bound": float(bound),
                            "relation": "<=", "ok": bool(measured <= bound * (1 + CERTIFICATE_RTOL))})

    def lower(self, name: str, measured: float, bound: float):
        self.bounds.append({"name": name, "measured": float(measured), "bound": float(bound),
                            "relation": ">", "ok": bool(measured > bound * (1 - CERTIFICATE_RTOL))})

    def to_dict(self) -> dict:
        return {"regime": self.regime, "n": self.n, "d": self.d, "length": self.length,
                "bounds": self.bounds, "measured": self.measured, "ok": self.ok,
                "certified": self.certified, "strict_descent_ok": self.strict_descent_ok}


def _first_ball(space: MetricSpace, level, v: int) -> int:
    """Smallest selected index of the level's net whose ball holds v."""
    field_ = space.distances_from(v)
    for i in level.selected:
        if field_[level.net.centers[i]] <= level.net.radii[i]:
            return i
    raise RuntimeError(f"Vertex {v} lies in no selected ball of level {level.k}")


def _descend(space: MetricSpace, trace: ScaleTrace, sets, start: int, k_start: int, k_stop: int,
             b, cert: Certificate, side: str) -> tuple[list[int], list[tuple[int, int, int]]]:
    """
    Walk from E_{k_start} down to E_{k_stop}: at level j, go to the centre of
    a level j−1 ball holding the point, then to the nearest vertex of E_{j−1}.
    Returns the vertices and (first index, last index, j) per leg.
    """
    path, legs = [start], []
    p = start
    for j in range(k_start, k_stop, -1):
        lower = sets[j - 2]
        if p in lower:
            continue
        level = trace.levels[j - 2]
        z = level.net.centers[_first_ball(space, level, p)]
        leg = shortest_path(space, p, z) + geodesic_to_set(space, z, lower)[1:]
        first = len(path) - 1
        path.extend(leg[1:])
        legs.append((first, len(path) - 1, j))
        cert.upper(f"{side}_leg_{j}_length", path_length(space, leg), 5 * trace.scale(j - 1))
        cert.lower(f"{side}_leg_{j}_depth", min(float(b[v]) for v in leg), trace.scale(j))
        p = leg[-1]
    return path, legs


def proof_curve(space: MetricSpace, trace: ScaleTrace, x: int, y: int, b=None) -> tuple[Curve, Certificate]:
    """
    Curve from x to y assembled from the trace's balls with every bound the
    construction guarantees, measured. Raises CertificateViolation on a miss.
    """
    if not trace.faithful:
        raise ValueError("proof_curve needs a trace built with the faithful delta")
    if trace.status == "budget_exhausted":
        raise ValueError("proof_curve needs a finished trace (level budget was exhausted)")
    result = trace.result
    x, y = _check_pair(space, result, x, y)
    if x == y:
        return Curve((x,), (0.0,)), Certificate("trivial")
    if b is None:
        b = boundary_distance(space, result)
    sets = trace.level_sets()
    c, delta, s = trace.c, trace.delta, trace.scale
    d = geodesic_distance(space, x, y)

    def entry(v):
        return next(j for j in range(1, len(sets) + 1) if v in sets[j - 1])

    kx, ky = entry(x), entry(y)
    swapped = kx > ky
    if swapped:
        x, y, kx, ky = y, x, ky, kx

    if d < c * s(1) / 4:
        n = 1
        while d < c * s(n + 1) / 4:
            n += 1
    else:
        n = None

    if n is not None and kx < n:
        cert = Certificate("geodesic", n=n, d=d)
        curve = Curve.along(space, shortest_path(space, x, y))
        cert.lower("geodesic_depth", float(b[x]), d)
        cert.upper("geodesic_cigar", float(curve.cigar_ratios(b).max()), 1.0)
        cert.length = curve.length
    else:
        bottom = n if n is not None else 1
        cert = Certificate("small" if n is not None and n >= 2 else ("first_level" if n == 1 else "far"),
                           n=n, d=d)
        down_x, legs_x = _descend(space, trace, sets, x, kx, bottom, b, cert, "x")
        down_y, legs_y = _descend(space, trace, sets, y, ky, bottom, b, cert, "y")
        xp, yp = down_x[-1], down_y[-1]
        descent_x = path_length(space, down_x)
        descent_y = path_length(space, down_y)

        if cert.regime == "small":
            level = trace.levels[n - 2]
            ix, iy = _first_ball(space, level, xp), _first_ball(space, level, yp)
            zx, zy = level.net.centers[ix], level.net.centers[iy]
            rx, ry = level.net.radii[ix], level.net.radii[iy]
            cert.upper("x_descent", descent_x, c * s(n - 1) / 4)
            cert.upper("y_descent", descent_y, c * s(n - 1) / 4)
            gap_pair = geodesic_distance(space, xp, yp)
            cert.bounds.append({"name": "join_separation", "measured": gap_pair, "bound": c * s(n - 1),
                                "relation": "<", "ok": bool(gap_pair < c * s(n - 1) * (1 + CERTIFICATE_RTOL))})
            cert.upper("centre_gap", geodesic_distance(space, zx, zy) - rx - ry, level.net.margin)
            join = (shortest_path(space, xp, zx) + shortest_path(space, zx, zy)[1:]
                    + shortest_path(space, zy, yp)[1:])
            cert.upper("join_length", path_length(space, join), 8 * s(n - 1))
            cert.lower("join_depth", min(float(b[v]) for v in join), s(n))
        else:
            inside = sets[1] if len(sets) > 1 else sets[0]
            join = shortest_path(space, xp, yp, within=inside)

        vertices = down_x + join[1:] + list(reversed(down_y))[1:]
        curve = Curve.along(space, vertices)
        cert.length = curve.length
        ratios = curve.cigar_ratios(b)
        join_start = len(down_x) - 1
        join_end = join_start + len(join) - 1
        leg_ratio = float(max([ratios[:join_start + 1].max(), ratios[join_end:].max()]))
        join_ratio = float(ratios[join_start:join_end + 1].max())
        cert.measured.update({"descent_x": descent_x, "descent_y": descent_y, "join_ratio": join_ratio,
                              "descent_ratio": leg_ratio, "levels": [kx, ky]})
        cert.strict_descent_ok = leg_ratio <= 10 * (1 + CERTIFICATE_RTOL)
        if cert.regime == "small":
            cert.upper("total_length", curve.length, 36 / (c * delta ** 2) * d)
            cert.upper("join_cigar", join_ratio, 9 / (2 * delta))
            cert.upper("descent_cigar", leg_ratio, 10 / delta)

    cert.measured.update({"length_ratio": curve.length / d, "cigar_ratio": float(curve.cigar_ratios(b).max())})
    if swapped:
        curve = Curve.along(space, list(reversed(curve.vertices)))
    if not cert.ok:
        raise CertificateViolation(cert, (x, y))
    return curve, cert


@dataclass
class CertificationSummary:
    pairs: int
    regimes: dict
    certified: int
    violations: int
    strict_descent_ok: int
    max_length_ratio: float
    max_cigar_ratio: float
    first_violation: dict | None = None

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {"pairs": self.pairs, "regimes": self.regimes, "certified": self.certified,
                "violations": self.violations, "strict_descent_ok": self.strict_descent_ok,
                "max_length_ratio": self.max_length_ratio, "max_cigar_ratio": self.max_cigar_ratio,
                "first_violation": self.first_violation, "passed": self.passed}


def _certify_job(pair):
    space, trace, b = worker_context()
    x, y = pair[0], pair[1]
    try:
        _, cert = proof_curve(space, trace, x, y, b)
        return {"pair": [x, y], "violation": False, "certificate": cert.to_dict()}
    except CertificateViolation as e:
        return {"pair": [x, y], "violation": True, "certificate": e.certificate.to_dict()}


def certify_pairs(space: MetricSpace, trace: ScaleTrace, spec: SamplingSpec | None = None,
                  workers: int = 1) -> CertificationSummary:
    spec = spec or SamplingSpec()
    b = boundary_distance(space, trace.result)
    pairs = sample_pairs(space, trace.result.mask, spec)
    rows = parallel_map(_certify_job, pairs, context=(space, trace, b), workers=workers)
    certs = [r["certificate"] for r in rows]
    violations = [r for r in rows if r["violation"]]
    summary = CertificationSummary(
        pairs=len(rows),
        regimes=dict(sorted(Counter(cert["regime"] for cert in certs).items())),
        certified=sum(1 for cert in certs if cert["certified"]),
        violations=len(violations),
        strict_descent_ok=sum(1 for cert in certs if cert["strict_descent_ok"] is not False),
        max_length_ratio=max([cert["measured"].get("length_ratio", 1.0) for cert in certs] + [1.0]),
        max_cigar_ratio=max([cert["measured"].get("cigar_ratio", 0.0) for cert in certs] + [0.0]),
        first_violation=violations[0] if violations else None,
    )
    tag = "[ok]" if summary.passed else "[err]"
    print(f"  {tag} certified {summary.certified}/{summary.pairs} pairs, {summary.violations} violations")
    return summary


# ── Closeness ────────────────────────────────────────────────────────────────

def closeness_check(space: MetricSpace, omega: Domain, result: Domain, mode: str, epsilon: float) -> dict:
    """
    inner: result ⊆ Ω and X∖result ⊆ B(X∖Ω, ε)
    outer: Ω ⊆ result ⊆ B(Ω, ε)
    """
    if mode not in ("inner", "outer"):
        raise ValueError(f"mode must be 'inner' or 'outer' (got {mode!r})")
    checks = {}
    if mode == "inner":
        stray = sorted(result.mask - omega.mask)
        checks["contained"] = {"passed": not stray, "witness": stray[0] if stray else None}
        f = multi_source_distance(space, omega.complement())
        far = [v for v in range(space.n) if v not in result.mask and f[v] > epsilon]
        checks["close"] = {"passed": not far, "witness": far[0] if far else None}
    else:
        lost = sorted(omega.mask - result.mask)
        checks["contains"] = {"passed": not lost, "witness": lost[0] if lost else None}
        far = sorted(result.mask - neighborhood(space, omega.mask, epsilon))
        checks["close"] = {"passed": not far, "witness": far[0] if far else None}
    return {"mode": mode, "epsilon": float(epsilon), "checks": checks,
            "passed": all(c["passed"] for c in checks.values())}
