"""
uniformize.py
Command-line front end for the uniform-approximation toolkit.

Pipeline:
    1. generate     corpus flags       → <out>/space.json, <out>/domain.json
    2. approximate  space + domain     → <out>/<mode>/trace.json (+ net_level_<k>.json),
                                         <out>/omega_<mode>.json
    3. verify       results            → <out>/report.json, <out>/summary.html, <out>/*.pgm

Exit codes: 0 success, 2 bad input, 3 construction infeasible, 4 a check failed.

Usage:
    python tools/uniformize.py generate --family rooms --levels 3
    python tools/uniformize.py approximate --mode both --epsilon 2
    python tools/uniformize.py verify --raw --pairs 200
    python tools/uniformize.py pipeline --family grid --shape disk --epsilon 2
"""

import os
import sys
import json
import argparse
import traceback
from datetime import datetime, timezone
from pathlib import Path

# Fix Windows terminal Unicode encoding
if sys.stdout.encoding and sys.stdout.encoding.lower() != 'utf-8':
    sys.stdout.reconfigure(encoding='utf-8')

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import (
    CORPUS_FAMILIES, GRID_SHAPES, DEFAULT_OUT_DIR, RUN_LOG_KEEP, DEFAULT_PAIR_SAMPLE,
    DEFAULT_MAX_LEVELS, DEFAULT_ROOM_SIDE, DEFAULT_RANDOM_DOMAIN_RADIUS, DOUBLING_REPORT_SCALES,
)

sys.path.insert(0, str(Path(__file__).resolve().parent))
from utils import save_json, load_json, worker_count
from metric_core import Domain, load_space, save_space, load_mask, save_mask, estimate_doubling
from corpus import CorpusSpec
from approximate import (
    ApproxConfig, InfeasibleConstruction, approximate, check_trace, save_trace, load_trace,
)
from separated_nets import NetConstructionError
from verify import SamplingSpec, empirical_uniformity, certify_pairs, closeness_check
from render_report import render_summary, save_summary, write_pgm

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_CHECK = 0, 2, 3, 4


class StepFailed(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def out_dir(args) -> Path:
    return Path(args.out or os.getenv("UNIFORMIZE_OUT", DEFAULT_OUT_DIR))


def log_run(out: Path, command: str, status: str, steps: list[dict], code: int, error: str = None):
    """Append a run record to <out>/run_log.json, keeping the most recent ones."""
    log_file = out / "run_log.json"
    existing = []
    if log_file.exists():
        try:
            existing = json.loads(log_file.read_text(encoding="utf-8"))
        except Exception:
            existing = []
    record = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "command": command,
        "status": status,
        "exit_code": code,
        "steps": steps,
    }
    if error:
        record["error"] = error
    existing.append(record)
    out.mkdir(parents=True, exist_ok=True)
    log_file.write_text(json.dumps(existing[-RUN_LOG_KEEP:], indent=2), encoding="utf-8")


def run_step(steps: list[dict], name: str, fn, *args, **kwargs):
    """Run one step, record it, and map its failure to an exit code."""
    print(f"\n[Step {len(steps) + 1}] {name}...")
    step = {"name": name, "status": "pending"}
    steps.append(step)
    try:
        result = fn(*args, **kwargs)
    except (InfeasibleConstruction, NetConstructionError) as e:
        step.update(status="error", error=str(e))
        print(f"[err] Step {len(steps)} failed: construction infeasible: {e}")
        raise StepFailed(EXIT_INFEASIBLE, str(e)) from e
    except (ValueError, FileNotFoundError) as e:
        step.update(status="error", error=str(e))
        print(f"[err] Step {len(steps)} failed: {e}")
        raise StepFailed(EXIT_INPUT, str(e)) from e
    except Exception as e:
        step.update(status="error", error=str(e))
        print(f"[err] Step {len(steps)} failed unexpectedly: {e}")
        traceback.print_exc()
        raise
    step["status"] = "ok"
    print(f"[ok] Step {len(steps)} complete: {name}")
    if isinstance(result, dict) and "step_info" in result:
        step.update(result.pop("step_info"))
    return result


def selected_modes(mode: str) -> list[str]:
    return ["inner", "outer"] if mode == "both" else [mode]


# ── Steps ────────────────────────────────────────────────────────────────────

def corpus_spec(args) -> CorpusSpec:
    return CorpusSpec(
        family=args.family, width=args.width, height=args.height, shape=args.shape,
        radius=args.radius, levels=args.levels, room=args.room, n=args.n, seed=args.seed,
        weight=args.weight, domain_radius=args.domain_radius,
    )


def step_generate(args) -> dict:
    spec = corpus_spec(args)
    space, domain = spec.build()
    out = out_dir(args)
    save_space(space, out / "space.json")
    save_mask(domain.mask, space.n, out / "domain.json")
    print(f"  [ok] Generated {spec.family}: {space.n} vertices, |Ω| = {len(domain)}")
    return {"step_info": {"vertices": space.n, "domain": len(domain)}}


def load_inputs(args):
    out = out_dir(args)
    space_path = Path(args.space) if args.space else out / "space.json"
    domain_path = Path(args.domain) if args.domain else out / "domain.json"
    space = load_space(space_path)
    omega = Domain.from_mask(space, load_mask(domain_path, space))
    return space, omega


def step_approximate(args) -> dict:
    if not args.epsilon > 0:
        raise ValueError(f"--epsilon must be positive (got {args.epsilon})")
    space, omega = load_inputs(args)
    out = out_dir(args)
    info = {}
    for mode in selected_modes(args.mode):
        config = ApproxConfig(
            mode=mode, epsilon=args.epsilon, tau=args.tau, x0=args.x0,
            delta_mode=args.delta_mode, delta=args.delta, max_levels=args.max_levels,
            length_unit=args.length_unit,
        ).validate()
        trace = approximate(space, omega, config)
        trace.closeness = closeness_check(space, omega, trace.result, mode, args.epsilon)
        save_trace(trace, out / mode)
        save_mask(trace.result.mask, space.n, out / f"omega_{mode}.json")
        tag = "[ok]" if trace.closeness["passed"] else "[warn]"
        print(f"  {tag} {mode}: |Ω_{mode[0].upper()}| = {len(trace.result)} after {len(trace.levels)} levels "
              f"({trace.status})")
        info[mode] = {"size": len(trace.result), "levels": len(trace.levels), "status": trace.status}
    return {"step_info": info}


def _epsilon_for(args, trace_data: dict | None) -> float:
    if args.epsilon is not None:
        return args.epsilon
    if trace_data is not None:
        return float(trace_data["config"]["epsilon"])
    raise ValueError("--epsilon is required when no trace.json is available")


def step_verify(args) -> dict:
    space, omega = load_inputs(args)
    out = out_dir(args)
    spec = SamplingSpec(pairs=args.pairs, seed=args.seed)
    workers = worker_count(args.workers)
    reports, traces, rasters = [], [], []
    scales = set()
    passed = True

    if args.raw:
        report = empirical_uniformity(space, omega, spec, workers, domain_id="omega", mode="raw")
        reports.append(report.to_dict())
        if write_pgm(space, omega.mask, None, out / "omega.pgm"):
            rasters.append("omega.pgm")

    for mode in selected_modes(args.mode or "both"):
        mask_path = out / f"omega_{mode}.json"
        trace_path = out / mode / "trace.json"
        if args.mode is None and not mask_path.exists():
            print(f"  [skip] {mode}: {mask_path} not found")
            continue
        result = Domain.from_mask(space, load_mask(mask_path, space))
        trace_data = load_json(trace_path) if trace_path.exists() else None
        epsilon = _epsilon_for(args, trace_data)

        report = empirical_uniformity(space, result, spec, workers, domain_id=f"omega_{mode}",
                                      mode=f"{mode}/{trace_data['delta_mode'] if trace_data else 'unknown'}")
        report.closeness = closeness_check(space, omega, result, mode, epsilon)
        passed &= report.closeness["passed"]

        if trace_data is not None:
            trace = load_trace(trace_path, space)
            report.trace_checks = check_trace(space, trace, omega)
            differ = sorted(trace.result.mask ^ result.mask)
            report.trace_checks["matches_mask"] = {"passed": not differ, "witness": differ[0] if differ else None}
            passed &= all(c["passed"] for c in report.trace_checks.values())
            if args.certify and trace.faithful and not differ:
                summary = certify_pairs(space, trace, spec, workers)
                report.certification = summary.to_dict()
                report.certified = summary.passed and summary.certified > 0
                passed &= summary.passed
            elif args.certify:
                print(f"  [skip] {mode}: certification needs a faithful trace")
            traces.append(dict(trace_data, rows=trace.summary_rows()))
            scales.update(lvl.scale for lvl in trace.levels)

        reports.append(report.to_dict())
        if write_pgm(space, omega.mask, result.mask, out / f"omega_{mode}.pgm"):
            rasters.append(f"omega_{mode}.pgm")

    if not reports:
        raise ValueError(f"Nothing to verify in {out}: run approximate first or pass --raw")

    cover_scales = sorted(s for s in scales if s >= space.min_edge)[:DOUBLING_REPORT_SCALES]
    doubling = estimate_doubling(space, cover_scales or [2 * space.min_edge or 1.0]).to_dict()
    print(f"  [ok] doubling estimate C_d = {doubling['C_d']} at scales {doubling['scales']}")

    save_json({"passed": bool(passed), "doubling": doubling, "reports": reports}, out / "report.json")
    inputs = {"space": str(args.space or out / "space.json"), "domain": str(args.domain or out / "domain.json"),
              "vertices": space.n, "domain size": len(omega), "pairs requested": args.pairs, "seed": args.seed}
    save_summary(render_summary(inputs, traces, reports, rasters), out)
    for r in reports:
        print(f"  [ok] {r['domain']}: max C_u = {r['cu_max']:.6g}, median = {r['cu_median']:.6g} "
              f"over {r['pairs']} pairs")
    return {"step_info": {"passed": bool(passed), "reports": len(reports)}, "passed": bool(passed)}


# ── Commands ─────────────────────────────────────────────────────────────────

def cmd_generate(args, steps) -> int:
    run_step(steps, "generate", step_generate, args)
    return EXIT_OK


def cmd_approximate(args, steps) -> int:
    run_step(steps, "approximate", step_approximate, args)
    return EXIT_OK


def cmd_verify(args, steps) -> int:
    result = run_step(steps, "verify", step_verify, args)
    if not result["passed"]:
        print("[err] One or more checks failed; see report.json")
        return EXIT_CHECK
    return EXIT_OK


def cmd_pipeline(args, steps) -> int:
    start_time = datetime.now(timezone.utc)
    print(f"\n{'='*60}")
    print("UNIFORM APPROXIMATION PIPELINE")
    print(f"{'='*60}")
    if args.space is None:
        cmd_generate(args, steps)
    cmd_approximate(args, steps)
    code = cmd_verify(args, steps)
    elapsed = (datetime.now(timezone.utc) - start_time).total_seconds()
    print(f"\n{'='*60}")
    print(f"PIPELINE {'COMPLETE [ok]' if code == EXIT_OK else 'FINISHED WITH FAILED CHECKS'}  ({elapsed:.1f}s)")
    print(f"{'='*60}\n")
    return code


COMMANDS = {
    "generate": cmd_generate,
    "approximate": cmd_approximate,
    "verify": cmd_verify,
    "pipeline": cmd_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Inner/outer uniform approximation of graph domains")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="Output directory (default: $UNIFORMIZE_OUT or .tmp)")
    common.add_argument("--seed", type=int, default=0, help="Seed for every random choice")
    common.add_argument("--workers", type=int, default=None, help="Worker processes (capped by UNIFORMIZE_THREADS)")

    corpus = argparse.ArgumentParser(add_help=False)
    corpus.add_argument("--family", choices=sorted(CORPUS_FAMILIES), default="grid")
    corpus.add_argument("--width", type=int, default=21)
    corpus.add_argument("--height", type=int, default=21)
    corpus.add_argument("--shape", choices=GRID_SHAPES, default="disk")
    corpus.add_argument("--radius", type=float, default=None,
                        help="Disk radius (grid) or connection radius (random)")
    corpus.add_argument("--levels", type=int, default=3,
                        help="Number of rooms (rooms family) or closets plus one (halls family)")
    corpus.add_argument("--room", type=int, default=DEFAULT_ROOM_SIDE)
    corpus.add_argument("--n", type=int, default=400, help="Point count (random family)")
    corpus.add_argument("--weight", type=float, default=1.0, help="Grid edge length")
    corpus.add_argument("--domain-radius", type=float, default=DEFAULT_RANDOM_DOMAIN_RADIUS)

    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument("--space", default=None, help="Space JSON (default: <out>/space.json)")
    inputs.add_argument("--domain", default=None, help="Domain mask JSON (default: <out>/domain.json)")

    construction = argparse.ArgumentParser(add_help=False)
    construction.add_argument("--delta-mode", choices=["faithful", "practical"], default="practical")
    construction.add_argument("--delta", type=float, default=None, help="Practical-mode scale ratio")
    construction.add_argument("--length-unit", type=float, default=None)
    construction.add_argument("--max-levels", type=int, default=DEFAULT_MAX_LEVELS)
    construction.add_argument("--tau", type=float, default=None)
    construction.add_argument("--x0", type=int, default=None)

    checks = argparse.ArgumentParser(add_help=False)
    checks.add_argument("--pairs", type=int, default=DEFAULT_PAIR_SAMPLE)
    checks.add_argument("--raw", action="store_true", help="Also measure the input domain itself")
    checks.add_argument("--certify", action="store_true", help="Certify proof curves of faithful traces")

    sub.add_parser("generate", parents=[common, corpus], help="Write a corpus space and domain")
    p = sub.add_parser("approximate", parents=[common, inputs, construction], help="Build Ω_I and/or Ω_O")
    p.add_argument("--mode", choices=["inner", "outer", "both"], default="both")
    p.add_argument("--epsilon", type=float, required=True)
    p = sub.add_parser("verify", parents=[common, inputs, checks], help="Measure and check results")
    p.add_argument("--mode", choices=["inner", "outer", "both"], default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p = sub.add_parser("pipeline", parents=[common, corpus, inputs, construction, checks],
                       help="generate → approximate → verify")
    p.add_argument("--mode", choices=["inner", "outer", "both"], default="both")
    p.add_argument("--epsilon", type=float, required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    out = out_dir(args)
    steps: list[dict] = []
    try:
        code = COMMANDS[args.command](args, steps)
    except StepFailed as e:
        log_run(out, args.command, "failed", steps, e.code, str(e))
        return e.code
    except Exception as e:
        log_run(out, args.command, "crashed", steps, 1, str(e))
        raise
    log_run(out, args.command, "success" if code == EXIT_OK else "checks_failed", steps, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
