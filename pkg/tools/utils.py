"""
utils.py
Shared utilities for the uniform-domain pipeline: atomic file writes, JSON
persistence, worker-count resolution and an order-preserving parallel map.
"""

import os
import json
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

# Context installed once per worker process by parallel_map's initializer.
_WORKER_CONTEXT = None


def atomic_write_bytes(path: Path, payload: bytes) -> Path:
    """
    Write bytes to `path` through a temp file in the same directory and
    os.replace(), so readers never observe a half-written file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp_name, path)
    except Exception:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def atomic_write_text(path: Path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def dump_json(data) -> str:
    """Canonical JSON text: sorted keys, 2-space indent, trailing newline."""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def save_json(data, path: Path) -> Path:
    out = atomic_write_text(Path(path), dump_json(data))
    print(f"  Saved → {out}")
    return out


def load_json(path: Path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def worker_count(requested: int | None = None) -> int:
    """
    Resolve the number of worker processes.

    Explicit request wins; otherwise the CPU count. Either is capped by the
    UNIFORMIZE_THREADS environment variable when it is set.
    """
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.getenv("UNIFORMIZE_THREADS", "").strip()
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError:
            print(f"  [warn] UNIFORMIZE_THREADS={cap!r} is not an integer, ignored")
    return max(1, n)


def _install_context(context):
    global _WORKER_CONTEXT
    _WORKER_CONTEXT = context


def worker_context():
    """The context object handed to parallel_map, as seen inside a worker."""
    return _WORKER_CONTEXT


def parallel_map(fn, items: list, context=None, workers: int = 1, chunksize: int = 8) -> list:
    """
    Apply fn(item) to every item, in input order.

    With workers > 1 the items are spread over a process pool whose
    initializer installs `context` once per worker (read it back with
    worker_context()). Results are identical to the sequential run.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        _install_context(context)
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers, initializer=_install_context,
                             initargs=(context,)) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
