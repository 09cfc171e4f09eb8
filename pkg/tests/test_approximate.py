import pytest

from conftest import path_space
from metric_core import Domain, neighborhood, boundary_distance
from corpus import grid_space, grid_domain
from separated_nets import build_net
from approximate import (
    ApproxConfig, InfeasibleConstruction, compute_delta, resolve_scales, initial_set_inner,
    initial_set_outer, choose_tau_inner, dilate_step, select_balls, ball_union, approximate,
    check_trace, deepest_vertex, save_trace, load_trace,
)
from verify import closeness_check


def dumbbell():
    """Two 5×5 rooms joined on their middle row by a one-cell neck of length 5."""
    space = grid_space(17, 7)
    cells = {(x, y) for y in range(1, 6) for x in list(range(1, 6)) + list(range(11, 16))}
    cells |= {(x, 3) for x in range(6, 11)}
    return space, Domain.from_mask(space, [y * 17 + x for x, y in cells])


# ── parameters ───────────────────────────────────────────────────────────────

def test_compute_delta_examples():
    assert compute_delta(1, 1) == pytest.approx(1 / 21)
    assert compute_delta(0.5, 0.5) == pytest.approx(1 / 41)


@pytest.mark.parametrize("tau", [0.1, 1.0, 5.0])
def test_compute_delta_increases_with_c(tau):
    assert compute_delta(0.25, tau) <= compute_delta(0.5, tau) <= compute_delta(1.0, tau)


def test_compute_delta_rejects_nonpositive():
    with pytest.raises(ValueError):
        compute_delta(0, 1)


def test_unit_length_reproduces_literal_delta():
    config = ApproxConfig(delta_mode="faithful", length_unit=1.0)
    assert resolve_scales(config, 1.0, 1.0) == (pytest.approx(1 / 21), 1.0)


def test_automatic_unit_keeps_practical_delta():
    delta, unit = resolve_scales(ApproxConfig(delta=0.25), 1.0, 2.0)
    assert delta == pytest.approx(0.25)
    assert unit == pytest.approx(1.2)


@pytest.mark.parametrize("kwargs", [
    {"mode": "sideways"},
    {"epsilon": 0},
    {"epsilon": -1.0},
    {"delta": 1.0},
    {"c": 2.0},
    {"delta_mode": "exact"},
    {"max_levels": 0},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ApproxConfig(**kwargs).validate()


# ── initial sets ─────────────────────────────────────────────────────────────

def test_inner_initial_set_is_inner_block(inner5_of_7):
    space, omega = inner5_of_7
    e1 = initial_set_inner(space, omega, 1.1, 24)
    assert e1.mask == {y * 7 + x for y in range(2, 5) for x in range(2, 5)}


def test_shallow_tau_keeps_whole_domain(inner5_of_7):
    space, omega = inner5_of_7
    assert initial_set_inner(space, omega, 0.5, 24).mask == omega.mask


def test_tau_at_base_point_depth_is_infeasible(inner5_of_7):
    space, omega = inner5_of_7
    with pytest.raises(InfeasibleConstruction) as err:
        initial_set_inner(space, omega, 3, 24)
    assert err.value.depth == 3


def test_base_point_outside_domain_rejected(inner5_of_7):
    space, omega = inner5_of_7
    with pytest.raises(ValueError):
        initial_set_inner(space, omega, 1, 0)


def test_outer_initial_set_is_domain(disk21):
    _, omega = disk21
    assert initial_set_outer(omega) is omega


def test_deepest_vertex_prefers_smallest_id(inner5_of_7):
    space, omega = inner5_of_7
    assert deepest_vertex(space, omega) == 24


def test_tau_accepted_first_on_convex_disk(disk21):
    space, omega = disk21
    assert choose_tau_inner(space, omega, 2.0, deepest_vertex(space, omega)) == 2.0


def test_dumbbell_needs_tau_below_neck_width():
    space, omega = dumbbell()
    x0 = deepest_vertex(space, omega)
    assert x0 == 3 * 17 + 3
    tau = choose_tau_inner(space, omega, 2.0, x0)
    assert tau < 1
    assert tau == 0.5


def test_whole_space_accepts_epsilon(grid5):
    omega = Domain.from_mask(grid5, range(grid5.n))
    assert choose_tau_inner(grid5, omega, 3.0, 0) == 3.0


# ── one level ────────────────────────────────────────────────────────────────

def test_dilation_adds_neighbours(p5):
    nxt, net, selected = dilate_step(p5, Domain.from_mask(p5, [2]), 1)
    assert {1, 2, 3} <= nxt.mask
    assert nxt.mask == ball_union(p5, net, selected)


def test_dilating_whole_space_is_stationary(grid5):
    whole = Domain.from_mask(grid5, range(grid5.n))
    nxt, _, _ = dilate_step(grid5, whole, 1.5)
    assert nxt.mask == whole.mask


def test_empty_level_set_is_rejected(p5):
    with pytest.raises(ValueError):
        dilate_step(p5, Domain.from_mask(p5, []), 1)


def test_selected_balls_meet_the_neighbourhood(grid5):
    net = build_net(grid5, 2)
    current = frozenset({12})
    selected = select_balls(grid5, net, current, 1)
    near = neighborhood(grid5, current, 1)
    for i, (x, ri) in enumerate(zip(net.centers, net.radii)):
        meets = bool(neighborhood(grid5, {x}, ri) & near)
        assert meets == (i in selected)


# ── full construction ────────────────────────────────────────────────────────

def test_outer_on_whole_space_stops_after_one_level(grid5):
    whole = Domain.from_mask(grid5, range(grid5.n))
    trace = approximate(grid5, whole, ApproxConfig(mode="outer", epsilon=2.0))
    assert trace.result.mask == whole.mask
    assert len(trace.levels) == 1
    assert trace.status == "fixpoint"


def test_inner_disk_is_close_and_contained():
    space, omega = grid_domain(20, 20, "disk", radius=8)
    trace = approximate(space, omega, ApproxConfig(mode="inner", epsilon=2.0, delta=0.25))
    assert trace.delta == pytest.approx(0.25)
    assert trace.result.mask <= omega.mask
    outside = boundary_distance(space, omega)
    assert all(outside[v] <= 2.0 for v in range(space.n) if v not in trace.result)
    checks = check_trace(space, trace, omega)
    assert all(c["passed"] for c in checks.values()), checks
    assert closeness_check(space, omega, trace.result, "inner", 2.0)["passed"]


def test_outer_disk_is_close_and_contains(disk21):
    space, omega = disk21
    trace = approximate(space, omega, ApproxConfig(mode="outer", epsilon=2.0))
    assert omega.mask <= trace.result.mask <= neighborhood(space, omega.mask, 2.0)
    assert all(c["passed"] for c in check_trace(space, trace, omega).values())


@pytest.mark.parametrize("mode", ["inner", "outer"])
def test_faithful_levels_contain_buffers(disk21, mode):
    space, omega = disk21
    trace = approximate(space, omega, ApproxConfig(mode=mode, epsilon=2.0, delta_mode="faithful"))
    assert trace.faithful
    assert trace.delta == pytest.approx(compute_delta(trace.c, trace.tau / trace.length_unit))
    for lvl in trace.levels:
        assert neighborhood(space, lvl.before, lvl.scale) <= lvl.after
        assert lvl.after <= neighborhood(space, lvl.before, 5 * lvl.scale)
        assert lvl.net.N == trace.N
    assert trace.status in ("fixpoint", "resolution")


def test_large_delta_runs_to_resolution(disk21):
    space, omega = disk21
    trace = approximate(space, omega, ApproxConfig(mode="inner", epsilon=4.0, delta=0.5))
    assert trace.delta == pytest.approx(0.5)
    assert trace.status == "resolution"
    assert 5 * trace.scale(len(trace.levels) + 1) < space.min_edge


def test_level_budget_is_reported(disk21):
    space, omega = disk21
    trace = approximate(space, omega, ApproxConfig(mode="inner", epsilon=4.0, delta=0.5, max_levels=1))
    assert trace.status == "budget_exhausted"
    assert len(trace.levels) == 1


def test_fixed_gap_constant_is_used(disk21):
    space, omega = disk21
    trace = approximate(space, omega, ApproxConfig(mode="outer", epsilon=2.0, c=0.2))
    assert trace.N == 5 and trace.c == pytest.approx(0.2)


def test_construction_is_deterministic(disk21):
    space, omega = disk21
    config = ApproxConfig(mode="inner", epsilon=2.0)
    a, b = approximate(space, omega, config), approximate(space, omega, config)
    assert a.result.mask == b.result.mask
    assert a.summary_rows() == b.summary_rows()


def test_scaling_the_metric_keeps_inclusions(disk21):
    space, omega = disk21
    base = approximate(space, omega, ApproxConfig(mode="inner", epsilon=2.0, tau=2.0))
    for factor in (0.5, 3.0):
        scaled = space.scaled(factor)
        omega_s = Domain.from_mask(scaled, omega.mask)
        other = approximate(scaled, omega_s, ApproxConfig(mode="inner", epsilon=2.0 * factor, tau=2.0 * factor))
        assert base.result.mask <= omega.mask and other.result.mask <= omega.mask
        assert closeness_check(scaled, omega_s, other.result, "inner", 2.0 * factor)["passed"]


# ── trace checks and persistence ─────────────────────────────────────────────

def test_check_trace_flags_a_tampered_level(disk21):
    space, omega = disk21
    trace = approximate(space, omega, ApproxConfig(mode="inner", epsilon=2.0))
    lvl = trace.levels[0]
    shrunk = lvl.before - {min(lvl.before)}
    trace.levels[0] = type(lvl)(lvl.k, lvl.scale, lvl.net, lvl.selected, lvl.before, shrunk)
    checks = check_trace(space, trace, omega)
    assert not checks["buffer"]["passed"]
    assert checks["buffer"]["witness"][0] == 1


def test_trace_files_replay(tmp_path, disk21):
    space, omega = disk21
    trace = approximate(space, omega, ApproxConfig(mode="inner", epsilon=2.0))
    save_trace(trace, tmp_path / "inner")
    assert (tmp_path / "inner" / "net_level_1.json").exists()
    loaded = load_trace(tmp_path / "inner" / "trace.json", space)
    assert loaded.result.mask == trace.result.mask
    assert loaded.level_sets() == trace.level_sets()
    assert loaded.config == trace.config
    assert loaded.status == trace.status


def test_single_vertex_domain_inner():
    space = path_space(3)
    omega = Domain.from_mask(space, [1])
    trace = approximate(space, omega, ApproxConfig(mode="inner", epsilon=1.0))
    assert trace.result.mask == {1}
