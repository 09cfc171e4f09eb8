"""
test_run.py
Hands-on harness for the uniform-approximation pipeline.

Generates one corpus instance into .tmp/, runs both constructions, verifies
them and opens the HTML summary in your default browser.

Usage:
    python tools/test_run.py                      # grid disk, practical δ, open browser preview
    python tools/test_run.py --family rooms       # rooms and passages
    python tools/test_run.py --faithful --certify # faithful δ with proof-curve certificates
    python tools/test_run.py --step approximate   # run only one step on existing files
    python tools/test_run.py --no-browser
"""

import os
import sys
import argparse
import webbrowser
from pathlib import Path

# Fix Windows terminal Unicode encoding
if sys.stdout.encoding and sys.stdout.encoding.lower() != 'utf-8':
    sys.stdout.reconfigure(encoding='utf-8')

sys.path.insert(0, str(Path(__file__).parent))


def check_env():
    """Print the environment knobs the pipeline reads."""
    from dotenv import load_dotenv
    load_dotenv()

    print("\n-- Environment Check ------------------------------------------")
    for key, desc in {
        "UNIFORMIZE_THREADS": "Worker cap (default: CPU count)",
        "UNIFORMIZE_OUT": "Output directory (default: .tmp)",
    }.items():
        val = os.getenv(key, "")
        status = "[OK]  " if val else "[DEF] "
        print(f"  {status} {key:20s} {val or f'← {desc}'}")
    print()


def print_summary(out: Path):
    from utils import load_json

    print("\n-- Data Summary ------------------------------------------------")
    space = load_json(out / "space.json")
    domain = load_json(out / "domain.json")
    print(f"  Space:   {space['n']} vertices, {len(space['edges'])} edges")
    print(f"  Domain:  {len(domain['mask'])} vertices")
    for mode in ("inner", "outer"):
        trace_path = out / mode / "trace.json"
        if trace_path.exists():
            trace = load_json(trace_path)
            print(f"  {mode:6s}:  tau={trace['tau']:.4g}  delta={trace['delta']:.4g}  "
                  f"levels={len(trace['levels'])}  status={trace['status']}  |result|={len(trace['result'])}")
    report_path = out / "report.json"
    if report_path.exists():
        report = load_json(report_path)
        for r in report["reports"]:
            closeness = r["closeness"]["passed"] if r["closeness"] else "n/a"
            print(f"  {r['domain']:12s} max C_u={r['cu_max']:.4g}  median={r['cu_median']:.4g}  "
                  f"closeness={closeness}")
        print(f"  Overall: {'PASS' if report['passed'] else 'FAIL'}")
    print()


def main():
    parser = argparse.ArgumentParser(description="Test the uniform-approximation pipeline")
    parser.add_argument("--family", choices=["grid", "rooms", "halls", "random"], default="grid")
    parser.add_argument("--shape", default="disk")
    parser.add_argument("--epsilon", type=float, default=2.0)
    parser.add_argument("--pairs", type=int, default=200)
    parser.add_argument("--faithful", action="store_true", help="Use the faithful δ")
    parser.add_argument("--certify", action="store_true", help="Certify proof curves (needs --faithful)")
    parser.add_argument("--step", choices=["generate", "approximate", "verify"], help="Run only one step")
    parser.add_argument("--no-browser", action="store_true", help="Don't open the summary in a browser")
    args = parser.parse_args()

    check_env()

    from uniformize import main as uniformize

    out = Path(os.getenv("UNIFORMIZE_OUT", ".tmp"))
    generate = ["generate", "--family", args.family, "--shape", args.shape, "--out", str(out)]
    approximate = ["approximate", "--epsilon", str(args.epsilon), "--out", str(out),
                   "--delta-mode", "faithful" if args.faithful else "practical"]
    verify = ["verify", "--raw", "--pairs", str(args.pairs), "--out", str(out)]
    if args.certify:
        verify.append("--certify")

    plan = {"generate": generate, "approximate": approximate, "verify": verify}
    steps = [args.step] if args.step else list(plan)
    code = 0
    for name in steps:
        code = uniformize(plan[name])
        if code not in (0, 4):
            print(f"\n[err] {name} exited with code {code}")
            sys.exit(code)

    print_summary(out)

    preview = out / "summary.html"
    if preview.exists() and not args.no_browser:
        print(f"Opening preview in browser: {preview.resolve()}")
        webbrowser.open(preview.resolve().as_uri())

    sys.exit(code)


if __name__ == "__main__":
    main()
