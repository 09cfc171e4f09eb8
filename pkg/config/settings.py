"""
config/settings.py
Central settings for the uniform-domain approximation toolkit.

This drives three things:
  1. tools/metric_core.py, separated_nets.py, approximate.py: numeric tolerances and caches
  2. tools/verify.py: sampling sizes and bisection limits for the uniformity solver
  3. tools/corpus.py and uniformize.py: corpus defaults and output locations
"""

# ── Metric kernels ────────────────────────────────────────────────────────────

# Per-source distance fields kept in memory per space (oldest evicted first).
FIELD_CACHE_LIMIT = 2048

# Relative slack for comparisons between sums of floating-point edge weights.
LENGTH_RTOL = 1e-12

# Default sample for the doubling estimate: number of ball centres (None = all).
DOUBLING_SAMPLE_CENTERS = 200

# The verify step reports the doubling estimate at this many of the smallest level scales.
DOUBLING_REPORT_SCALES = 3


# ── Nets ──────────────────────────────────────────────────────────────────────

# Safety margin (times r) shrinking every allowed radius region when the
# arithmetic is not exact.
NET_FLOAT_MARGIN = 1e-9


# ── Construction ──────────────────────────────────────────────────────────────

DEFAULT_PRACTICAL_DELTA = 0.25
DEFAULT_MAX_LEVELS = 40

# Fixpoint detection only stops the level loop when δ is at most this value;
# beyond it a stationary level does not imply stationary successors.
FIXPOINT_DELTA_LIMIT = 0.25

# Rounds of the dry-pass / rerun loop that fixes the cross-scale gap constant.
GAP_CONSTANT_ROUNDS = 8


# ── Verification ──────────────────────────────────────────────────────────────

UNIFORMITY_REL_TOL = 1e-6
MAX_BISECTION_STEPS = 60

# Domains up to this many vertices are evaluated on all pairs.
ALL_PAIRS_THRESHOLD = 40

DEFAULT_PAIR_SAMPLE = 500
DISTANCE_STRATA = 8

BRUTE_FORCE_VERTEX_LIMIT = 12

# Source vertices drawn when pairs are sampled from a large domain.
PAIR_SOURCE_SAMPLE = 64

# Relative slack when measured lengths are compared with certificate bounds.
CERTIFICATE_RTOL = 1e-9

DISCRETISATION_NOTE = (
    "Curves are vertex paths of the graph; points interior to edges are not "
    "considered. Constants are those of the discrete space."
)


# ── Corpus ────────────────────────────────────────────────────────────────────

CORPUS_FAMILIES = {
    "grid": "Unit 4-neighbour grid with a disk, square, slit or spiral domain",
    "rooms": "Chain of square rooms joined by one-cell corridors of growing length",
    "halls": "Two deep halls behind a wide door, then small closets behind one-cell passages",
    "random": "Random geometric graph in the unit square with a ball-shaped domain",
}

GRID_SHAPES = ("disk", "square", "slit", "spiral")

DEFAULT_ROOM_SIDE = 5
HALL_SIDE = 25
CLOSET_SIDE = 3
DEFAULT_RANDOM_DOMAIN_RADIUS = 0.3


# ── Output ────────────────────────────────────────────────────────────────────

DEFAULT_OUT_DIR = ".tmp"
RUN_LOG_KEEP = 30

# PGM grey levels: complement of Ω, Ω, approximating domain.
PGM_LEVELS = {"complement": 0, "domain": 128, "result": 255}
