import math

import pytest

from metric_core import ball
from corpus import (
    grid_space, grid_domain, rooms_layout, rooms_and_passages, halls_and_closets,
    random_geometric, random_geometric_domain,
    CorpusSpec,
)


# ── grids ────────────────────────────────────────────────────────────────────

def test_grid_ids_and_coords():
    space = grid_space(4, 3)
    assert space.n == 12
    assert len(space.edges) == 3 * 3 + 4 * 2
    assert space.coords[7] == (3.0, 1.0)


def test_square_domain_is_interior():
    space, omega = grid_domain(5, 5, "square")
    assert len(omega) == 9
    assert omega.mask == {y * 5 + x for y in range(1, 4) for x in range(1, 4)}


def test_disk_is_mirror_symmetric():
    space, omega = grid_domain(15, 15, "disk")
    cells = {(v % 15, v // 15) for v in omega.mask}
    assert cells == {(14 - x, y) for x, y in cells}
    assert cells == {(x, 14 - y) for x, y in cells}


def test_slit_cuts_the_square():
    space, omega = grid_domain(11, 11, "slit")
    square = grid_domain(11, 11, "square")[1]
    cut = square.mask - omega.mask
    assert cut == {y * 11 + 5 for y in range(1, 6)}


def test_spiral_stays_inside_wall():
    space, omega = grid_domain(9, 9, "spiral")
    assert all(1 <= v % 9 <= 7 and 1 <= v // 9 <= 7 for v in omega.mask)
    assert 1 * 9 + 1 in omega


@pytest.mark.parametrize("args", [
    (2, 5, "square"),
    (5, 5, "hexagon"),
    (4, 4, "disk", 0.1),
    (5, 5, "disk", 100.0),
])
def test_bad_grid_domains_rejected(args):
    with pytest.raises(ValueError):
        grid_domain(*args)


def test_grid_weight_scales_distances():
    space, _ = grid_domain(7, 7, "square", weight=0.5)
    assert space.distances_from(0)[48] == pytest.approx(6.0)


# ── rooms and passages ───────────────────────────────────────────────────────

@pytest.mark.parametrize("levels", [1, 2, 3, 4])
def test_rooms_vertex_count(levels):
    _, omega = rooms_and_passages(levels, room=5)
    assert len(omega) == levels * 25 + sum(2 ** (i + 1) for i in range(1, levels))


def test_rooms_layout():
    assert rooms_layout(3, 5) == (29, 7, [4, 8])
    assert rooms_layout(1, 5) == (7, 7, [])


def test_rooms_custom_corridors():
    space, omega = rooms_and_passages(3, room=3, passage_length=lambda i: 1)
    assert len(omega) == 3 * 9 + 2
    assert grid_space(13, 5).n == space.n


def test_rooms_rejects_bad_arguments():
    with pytest.raises(ValueError):
        rooms_and_passages(0)
    with pytest.raises(ValueError):
        rooms_and_passages(2, room=0)
    with pytest.raises(ValueError):
        rooms_and_passages(2, passage_length=lambda i: 0)


def test_rooms_of_different_sides_share_the_middle_row():
    space, omega = rooms_and_passages(2, room=lambda i: 5 if i == 1 else 3, passage_length=lambda i: 2)
    assert rooms_layout(2, lambda i: 5 if i == 1 else 3, lambda i: 2) == (12, 7, [2])
    assert len(omega) == 25 + 9 + 2
    w = 12
    assert {3 * w + 6, 3 * w + 7, 3 * w + 8} <= set(omega.vertices)
    assert 1 * w + 8 not in omega


def test_wide_corridor_must_fit_both_rooms():
    _, omega = rooms_and_passages(2, room=5, passage_length=lambda i: 1, passage_width=lambda i: 3)
    assert len(omega) == 2 * 25 + 3
    with pytest.raises(ValueError, match="does not fit"):
        rooms_and_passages(2, room=3, passage_width=lambda i: 4)


# ── halls and closets ────────────────────────────────────────────────────────

def test_halls_layout():
    space, omega = halls_and_closets(5)
    assert (space.n, len(omega)) == (93 * 27, 2 * 625 + 21 + 4 * 9 + (3 + 5 + 8 + 12))
    assert {13 * 93 + 13, 13 * 93 + 26, 3 * 93 + 26, 23 * 93 + 26, 13 * 93 + 90} <= set(omega.vertices)
    assert 2 * 93 + 26 not in omega and 12 * 93 + 52 not in omega


def test_each_halls_level_lengthens_the_chain():
    sizes = [len(halls_and_closets(levels)[1]) for levels in range(1, 5)]
    assert sizes == [1271, 1271 + 9 + 3, 1271 + 18 + 8, 1271 + 27 + 16]
    with pytest.raises(ValueError):
        halls_and_closets(0)


# ── random geometric ─────────────────────────────────────────────────────────

def test_random_geometric_is_seeded():
    a, b = random_geometric(120, 0.2, seed=5), random_geometric(120, 0.2, seed=5)
    assert a.edges == b.edges
    assert a.edges != random_geometric(120, 0.2, seed=6).edges


def test_random_geometric_weights_are_euclidean():
    space = random_geometric(60, 0.3, seed=1)
    for u, v, w in space.edges:
        assert w == pytest.approx(math.dist(space.coords[u], space.coords[v]))
        assert w <= 0.3


def test_large_radius_gives_complete_graph():
    space = random_geometric(10, math.sqrt(2), seed=0)
    assert space.n == 10
    assert len(space.edges) == 45


def test_single_point():
    space = random_geometric(1, 0.1)
    assert space.n == 1 and space.edges == ()


def test_random_domain_is_geodesic_ball():
    space, omega = random_geometric_domain(200, 0.15, seed=2, domain_radius=0.25)
    centre = min(range(space.n), key=lambda v: math.dist(space.coords[v], (0.5, 0.5)))
    assert omega.mask == ball(space, centre, 0.25)


@pytest.mark.parametrize("n, radius", [(0, 0.1), (10, 0.0)])
def test_random_geometric_rejects_bad_arguments(n, radius):
    with pytest.raises(ValueError):
        random_geometric(n, radius)


# ── CorpusSpec ───────────────────────────────────────────────────────────────

def test_corpus_spec_dispatches_by_family():
    _, grid = CorpusSpec(family="grid", width=5, height=5, shape="square").build()
    assert len(grid) == 9
    _, rooms = CorpusSpec(family="rooms", levels=2, room=3).build()
    assert len(rooms) == 2 * 9 + 4
    _, halls = CorpusSpec(family="halls", levels=1).build()
    assert len(halls) == 1271
    space, omega = CorpusSpec(family="random", n=150, seed=4).build()
    assert 0 < len(omega) < space.n


def test_corpus_spec_builds_are_deterministic():
    spec = CorpusSpec(family="random", n=150, seed=4)
    a, b = spec.build(), spec.build()
    assert a[0].edges == b[0].edges and a[1].mask == b[1].mask


@pytest.mark.parametrize("spec", [CorpusSpec(family="mesh"), CorpusSpec(weight=0.0)])
def test_corpus_spec_rejects_bad_input(spec):
    with pytest.raises(ValueError):
        spec.build()


def test_corpus_spec_to_dict():
    data = CorpusSpec(family="rooms", levels=4).to_dict()
    assert data["family"] == "rooms" and data["levels"] == 4
