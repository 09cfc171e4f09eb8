import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))
sys.path.insert(0, str(ROOT / "tools"))

from metric_core import MetricSpace, Domain  # noqa: E402
from corpus import grid_space, grid_domain  # noqa: E402
from utils import save_json, load_json  # noqa: E402


def path_space(n: int, weight: float = 1.0) -> MetricSpace:
    return MetricSpace(n, [(i, i + 1, weight) for i in range(n - 1)])


def disk_with_cluster(side: int = 21, radius: float | None = 8) -> tuple[MetricSpace, Domain]:
    """Grid disk plus a 12×12 grid of 1e-5 edges hung outside it off its first boundary vertex."""
    space, omega = grid_domain(side, side, "disk", radius=radius)
    anchor, base, step = min(omega.vertices), space.n, 1e-5
    edges = list(space.edges) + [(anchor, base, step)]
    for i in range(12):
        for j in range(12):
            v = base + 12 * i + j
            if j < 11:
                edges.append((v, v + 1, step))
            if i < 11:
                edges.append((v, v + 12, step))
    bigger = MetricSpace(space.n + 144, edges)
    return bigger, Domain.from_mask(bigger, omega.mask)


class PinnedValues:
    """
    Regression values kept in tests/pinned_values.json. A key seen for the
    first time is recorded and written back at the end of the session; later
    runs must reproduce it.
    """

    def __init__(self, path: Path):
        self.path = path
        self.values = load_json(path) if path.exists() else {}
        self.recorded = []

    def check(self, key: str, value: float, rel: float = 1e-6) -> None:
        if key not in self.values:
            self.values[key] = value
            self.recorded.append(key)
            return
        assert value == pytest.approx(self.values[key], rel=rel), f"{key} moved from its pinned value"

    def save(self) -> None:
        if self.recorded:
            save_json(dict(sorted(self.values.items())), self.path)


@pytest.fixture(scope="session")
def pinned():
    store = PinnedValues(ROOT / "tests" / "pinned_values.json")
    yield store
    store.save()


@pytest.fixture()
def p5():
    return path_space(5)


@pytest.fixture()
def grid5():
    return grid_space(5, 5)


@pytest.fixture()
def disk21():
    return grid_domain(21, 21, "disk", radius=8)


@pytest.fixture()
def inner5_of_7():
    """7×7 grid with Ω the inner 5×5 block."""
    space = grid_space(7, 7)
    omega = Domain.from_mask(space, [y * 7 + x for y in range(1, 6) for x in range(1, 6)])
    return space, omega


@pytest.fixture()
def out_dir(tmp_path, monkeypatch):
    monkeypatch.delenv("UNIFORMIZE_OUT", raising=False)
    monkeypatch.setenv("UNIFORMIZE_THREADS", "1")
    return tmp_path / "run"
