"""
approximate.py
Inner and outer approximation of a domain by iterated net-ball dilation.

Construction:
    E_1      inner: component of {dist(·, X∖Ω) > τ} containing x_0
             outer: Ω itself (τ = ε)
    E_{k+1}  union of the balls of the scale-s_k net that meet the closed
             s_k-neighbourhood of E_k, with s_k = L·δ^k
    stop     fixpoint (only when δ ≤ 1/4), 5·s_k below the shortest edge,
             or the level budget

Usage (library):
    trace = approximate(space, omega, ApproxConfig(mode="inner", epsilon=2.0))
    trace.result.mask
"""

import sys
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import (
    DEFAULT_PRACTICAL_DELTA, DEFAULT_MAX_LEVELS, FIXPOINT_DELTA_LIMIT, GAP_CONSTANT_ROUNDS,
)

sys.path.insert(0, str(Path(__file__).resolve().parent))
from metric_core import (
    MetricSpace, Domain, Mask, boundary_distance, multi_source_distance, local_distances,
    connected_component, neighborhood,
)
from separated_nets import Net, build_net, maximal_separated_net, center_neighbours, local_count, save_net, load_net
from utils import save_json, load_json

MODES = ("inner", "outer")
DELTA_MODES = ("faithful", "practical")


class InfeasibleConstruction(ValueError):
    """A construction precondition fails (τ too deep for x_0, no convergent c)."""

    def __init__(self, message: str, depth: float | None = None):
        super().__init__(message)
        self.depth = depth


@dataclass(frozen=True)
class ApproxConfig:
    mode: str = "inner"
    epsilon: float = 1.0
    tau: float | None = None
    x0: int | None = None
    c: float | None = None
    delta_mode: str = "practical"
    delta: float | None = None
    max_levels: int = DEFAULT_MAX_LEVELS
    length_unit: float | None = None

    def validate(self) -> "ApproxConfig":
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES} (got {self.mode!r})")
        if self.delta_mode not in DELTA_MODES:
            raise ValueError(f"delta_mode must be one of {DELTA_MODES} (got {self.delta_mode!r})")
        if not (isinstance(self.epsilon, (int, float)) and self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be a positive length (got {self.epsilon})")
        if self.tau is not None and not self.tau > 0:
            raise ValueError(f"tau must be positive (got {self.tau})")
        if self.c is not None and not 0 < self.c <= 1:
            raise ValueError(f"c must lie in (0, 1] (got {self.c})")
        if self.delta is not None and not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1) (got {self.delta})")
        if self.length_unit is not None and not self.length_unit > 0:
            raise ValueError(f"length_unit must be positive (got {self.length_unit})")
        if self.max_levels < 1:
            raise ValueError(f"max_levels must be at least 1 (got {self.max_levels})")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ScaleLevel:
    k: int
    scale: float
    net: Net
    selected: tuple
    before: Mask = field(repr=False)
    after: Mask = field(repr=False)


@dataclass
class ScaleTrace:
    config: ApproxConfig
    tau: float
    x0: int | None
    c: float
    N: int
    delta: float
    length_unit: float
    initial: Domain
    levels: list[ScaleLevel]
    result: Domain
    status: str
    closeness: dict | None = None

    @property
    def faithful(self) -> bool:
        return self.config.delta_mode == "faithful"

    def scale(self, k: int) -> float:
        return self.length_unit * self.delta ** k

    def level_sets(self) -> list[Mask]:
        """E_1, E_2, ... as recorded."""
        return [self.initial.mask] + [lvl.after for lvl in self.levels]

    def summary_rows(self) -> list[dict]:
        return [
            {"k": lvl.k, "scale": lvl.scale, "centers": len(lvl.net), "N": lvl.net.N,
             "selected": len(lvl.selected), "size_before": len(lvl.before), "size_after": len(lvl.after)}
            for lvl in self.levels
        ]


# ── Parameters ───────────────────────────────────────────────────────────────

def compute_delta(c: float, tau: float) -> float:
    """δ = min{c/(20+c), τ/(5+τ)}."""
    if not c > 0 or not tau > 0:
        raise ValueError(f"compute_delta needs c > 0 and tau > 0 (got c={c}, tau={tau})")
    return min(c / (20 + c), tau / (5 + tau))


def resolve_scales(config: ApproxConfig, c: float, tau: float) -> tuple[float, float]:
    """(δ, L) for a gap constant c and depth τ."""
    if config.delta_mode == "faithful":
        base = c / (20 + c)
    else:
        base = config.delta if config.delta is not None else DEFAULT_PRACTICAL_DELTA
    unit = config.length_unit if config.length_unit is not None else tau * (1 - base) / (5 * base)
    t = tau / unit
    delta = compute_delta(c, t) if config.delta_mode == "faithful" else min(base, t / (5 + t))
    return delta, unit


def deepest_vertex(space: MetricSpace, omega: Domain) -> int:
    b = boundary_distance(space, omega)
    return max(omega.vertices, key=lambda v: (b[v], -v))


# ── Initial sets ─────────────────────────────────────────────────────────────

def initial_set_inner(space: MetricSpace, omega: Domain, tau: float, x0: int) -> Domain:
    """Component of {v : dist(v, X∖Ω) > τ} containing x_0."""
    x0 = space.check_vertex(x0)
    if x0 not in omega:
        raise ValueError(f"Base point {x0} is not in the domain")
    b = boundary_distance(space, omega)
    depth = float(b[x0])
    if not depth > tau:
        raise InfeasibleConstruction(
            f"tau = {tau} is not below the boundary depth {depth} of base point {x0}", depth=depth)
    superlevel = frozenset(int(v) for v in np.flatnonzero(b > tau))
    return Domain.from_mask(space, connected_component(space, superlevel, x0))


def initial_set_outer(omega: Domain) -> Domain:
    return omega


def choose_tau_inner(space: MetricSpace, omega: Domain, epsilon: float, x0: int) -> float:
    """
    Largest τ in {ε, ε/2, ε/4, ...} below the depth of x_0 whose E_1 contains
    every vertex deeper than ε.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive (got {epsilon})")
    x0 = space.check_vertex(x0)
    if x0 not in omega:
        raise ValueError(f"Base point {x0} is not in the domain")
    b = boundary_distance(space, omega)
    protected = frozenset(int(v) for v in np.flatnonzero(b > epsilon))
    depths = b[list(omega.mask)]
    floor = float(depths.min()) if np.isfinite(depths).all() else math.inf

    tau = float(epsilon)
    while True:
        if tau < b[x0]:
            e1 = initial_set_inner(space, omega, tau, x0)
            if protected <= e1.mask:
                return tau
        if tau < floor:
            raise InfeasibleConstruction(f"No tau accepted down to {tau}", depth=float(b[x0]))
        tau /= 2


# ── One level ────────────────────────────────────────────────────────────────

def ball_union(space: MetricSpace, net: Net, indices) -> Mask:
    members = set()
    for i in indices:
        members.update(local_distances(space, net.centers[i], net.radii[i]))
    return frozenset(members)


def select_balls(space: MetricSpace, net: Net, current: Mask, scale: float) -> tuple[int, ...]:
    """Indices of net balls meeting the closed `scale`-neighbourhood of `current`."""
    f = multi_source_distance(space, current)
    selected = []
    for i, (x, ri) in enumerate(zip(net.centers, net.radii)):
        if f[x] > ri + scale:
            continue
        if any(f[p] <= scale for p in local_distances(space, x, ri)):
            selected.append(i)
    return tuple(selected)


def dilate_step(space: MetricSpace, current: Domain, scale: float, N: int | None = None) -> tuple[Domain, Net, tuple]:
    """E_{k+1} = union of the scale-level net balls meeting B(E_k, scale)."""
    if not scale > 0:
        raise ValueError(f"Scale must be positive (got {scale})")
    net = build_net(space, scale, N)
    selected = select_balls(space, net, current.mask, scale)
    return Domain.from_mask(space, ball_union(space, net, selected)), net, selected


# ── Full construction ────────────────────────────────────────────────────────

def _level_scales(space: MetricSpace, unit: float, delta: float, max_levels: int) -> list[float]:
    scales = []
    for k in range(1, max_levels + 1):
        s = unit * delta ** k
        if 5 * s < space.min_edge:
            break
        scales.append(s)
    return scales


def _cross_scale_N(space: MetricSpace, config: ApproxConfig, tau: float) -> tuple[int, float, float]:
    """
    Dry pass: the 4r-neighbour count of a maximal net depends only on its
    scale, so c = 1/max_k N_k is found by iterating scales ↔ c until stable.
    """
    if config.c is not None:
        N = max(1, math.ceil(1 / config.c - 1e-12))
        delta, unit = resolve_scales(config, 1.0 / N, tau)
        return N, delta, unit
    N = 1
    for _ in range(GAP_CONSTANT_ROUNDS):
        delta, unit = resolve_scales(config, 1.0 / N, tau)
        seen = 1
        for s in _level_scales(space, unit, delta, config.max_levels):
            centers = maximal_separated_net(space, s)
            seen = max(seen, local_count(center_neighbours(space, centers, 4 * s), s))
        if seen <= N:
            return N, delta, unit
        N = seen
    raise InfeasibleConstruction(
        f"Cross-scale gap constant did not settle in {GAP_CONSTANT_ROUNDS} rounds (last N = {N})")


def approximate(space: MetricSpace, omega: Domain, config: ApproxConfig) -> ScaleTrace:
    config.validate()
    if config.mode == "inner":
        x0 = config.x0 if config.x0 is not None else deepest_vertex(space, omega)
        tau = config.tau if config.tau is not None else choose_tau_inner(space, omega, config.epsilon, x0)
        e1 = initial_set_inner(space, omega, tau, x0)
    else:
        x0 = None
        tau = float(config.epsilon)
        e1 = initial_set_outer(omega)

    N, delta, unit = _cross_scale_N(space, config, tau)
    print(f"  [ok] {config.mode} construction: tau={tau:g}, c=1/{N}, delta={delta:.6g}, L={unit:.6g}, "
          f"|E_1|={len(e1)}")

    levels = []
    current = e1
    status = "budget_exhausted"
    for k in range(1, config.max_levels + 1):
        s = unit * delta ** k
        if 5 * s < space.min_edge:
            status = "resolution"
            break
        nxt, net, selected = dilate_step(space, current, s, N)
        levels.append(ScaleLevel(k, s, net, selected, current.mask, nxt.mask))
        print(f"  [ok] level {k}: scale={s:.6g}, centres={len(net)}, selected={len(selected)}, "
              f"|E|={len(current)}→{len(nxt)}")
        stationary = nxt.mask == current.mask
        current = nxt
        if stationary and delta <= FIXPOINT_DELTA_LIMIT:
            status = "fixpoint"
            break
    else:
        print(f"  [warn] level budget of {config.max_levels} exhausted before a fixpoint")

    return ScaleTrace(config, tau, x0, 1.0 / N, N, delta, unit, e1, levels, current, status)


# ── Trace checks ─────────────────────────────────────────────────────────────

def _first(iterable):
    return next(iter(sorted(iterable)), None)


def check_trace(space: MetricSpace, trace: ScaleTrace, omega: Domain | None = None) -> dict:
    """
    Exact per-level checks: monotonicity, buffer N(E_k, s_k) ⊆ E_{k+1},
    depth dist(E_k, X∖result) > s_k, growth E_{k+1} ⊆ N(E_k, 5s_k),
    connectivity and, for inner traces with Ω given, result ⊆ N(E_1, τ) ⊆ Ω.
    Each entry is {"passed": bool, "witness": first offending [k, vertex] or None}.
    """
    checks = {name: {"passed": True, "witness": None}
              for name in ("monotone", "buffer", "depth", "growth", "connected")}
    outside = frozenset(range(space.n)) - trace.result.mask

    def fail(name, k, v):
        if checks[name]["passed"]:
            checks[name] = {"passed": False, "witness": [k, v]}

    for lvl in trace.levels:
        before, after = lvl.before, lvl.after
        if not before <= after:
            fail("monotone", lvl.k, _first(before - after))
        f = multi_source_distance(space, before)
        missing = [v for v in np.flatnonzero(f <= lvl.scale) if v not in after]
        if missing:
            fail("buffer", lvl.k, int(missing[0]))
        shallow = [v for v in sorted(outside) if f[v] <= lvl.scale]
        if shallow:
            fail("depth", lvl.k, shallow[0])
        far = [v for v in sorted(after) if f[v] > 5 * lvl.scale]
        if far:
            fail("growth", lvl.k, far[0])
        try:
            Domain.from_mask(space, after)
        except ValueError:
            fail("connected", lvl.k, None)

    if trace.config.mode == "inner" and omega is not None:
        hull = neighborhood(space, trace.initial.mask, trace.tau)
        checks["inner_containment"] = {"passed": True, "witness": None}
        extra = (trace.result.mask - hull) | (hull - omega.mask)
        if extra:
            checks["inner_containment"] = {"passed": False, "witness": [None, _first(extra)]}
    return checks


# ── Persistence ──────────────────────────────────────────────────────────────

def trace_to_dict(trace: ScaleTrace) -> dict:
    return {
        "config": trace.config.to_dict(),
        "mode": trace.config.mode,
        "delta_mode": trace.config.delta_mode,
        "tau": trace.tau,
        "x0": trace.x0,
        "c": trace.c,
        "N": trace.N,
        "delta": trace.delta,
        "length_unit": trace.length_unit,
        "status": trace.status,
        "initial": sorted(trace.initial.mask),
        "levels": [
            {"k": lvl.k, "scale": lvl.scale, "net": f"net_level_{lvl.k}.json",
             "selected": list(lvl.selected), "size": len(lvl.after)}
            for lvl in trace.levels
        ],
        "result": sorted(trace.result.mask),
        "closeness": trace.closeness,
    }


def save_trace(trace: ScaleTrace, out_dir: Path, name: str = "trace.json") -> Path:
    out_dir = Path(out_dir)
    for lvl in trace.levels:
        save_net(lvl.net, out_dir / f"net_level_{lvl.k}.json")
    return save_json(trace_to_dict(trace), out_dir / name)


def load_trace(path: Path, space: MetricSpace) -> ScaleTrace:
    """Rebuild a trace; level sets are replayed from the stored nets and selections."""
    path = Path(path)
    data = load_json(path)
    try:
        config = ApproxConfig(**data["config"]).validate()
        initial = Domain.from_mask(space, data["initial"])
        levels = []
        current = initial.mask
        for entry in data["levels"]:
            net = load_net(path.parent / entry["net"])
            selected = tuple(int(i) for i in entry["selected"])
            after = ball_union(space, net, selected)
            levels.append(ScaleLevel(int(entry["k"]), float(entry["scale"]), net, selected, current, after))
            current = after
        result = Domain.from_mask(space, data["result"])
        if levels and result.mask != current:
            raise ValueError(f"Trace {path} result does not match its replayed last level")
        return ScaleTrace(config, float(data["tau"]), data.get("x0"), float(data["c"]), int(data["N"]),
                          float(data["delta"]), float(data["length_unit"]), initial, levels, result,
                          data["status"], data.get("closeness"))
    except (KeyError, TypeError) as e:
        raise ValueError(f"Malformed trace file {path}: {e}") from e
