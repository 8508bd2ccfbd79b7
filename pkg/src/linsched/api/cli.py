"""Command line entry point: ``linsched schedule|simulate|bench|serve``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from linsched.api.core import plan_document, simulate_document
from linsched.api.formats import FormatError, PlanDocument, load_requests, report_csv, report_json
from linsched.harness import ALGORITHM_NAMES, Scenario, ScenarioError, run_benchmark
from linsched.model import Models
from linsched.plan import UnschedulableError
from linsched.trace import TraceError, load_traces

log = logging.getLogger("linsched")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _fail(payload: dict, code: int = EXIT_FAIL) -> int:
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def cmd_schedule(args) -> int:
    try:
        requests = load_requests(args.requests)
        zones = sorted({z for r in requests for z in r.path.zones})
        traces = load_traces(args.traces, zones)
        doc = plan_document(requests, traces, args.limit, args.slot_minutes, args.algorithm, args.seed)
    except UnschedulableError as exc:
        return _fail(exc.to_dict())
    except (FormatError, TraceError, ValueError, OSError) as exc:
        return _fail({"error": type(exc).__name__, "message": str(exc)})
    overloads = doc.integer_overloads(Models.default(args.limit))
    if overloads:
        log.warning("rounded thread counts overload %d slot(s): %s", len(overloads), overloads[:10])
    Path(args.out).write_text(doc.dumps(), encoding="utf-8")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        doc = PlanDocument.loads(Path(args.plan).read_text(encoding="utf-8"))
        zones = sorted({z for r in doc.requests for z, _ in r.path})
        traces = load_traces(args.traces, zones)
        report = simulate_document(doc, traces, args.noise, args.seed)
    except (FormatError, TraceError, ValueError, OSError) as exc:
        return _fail({"error": type(exc).__name__, "message": str(exc)})
    out = Path(args.out)
    out.write_text(report_json(report), encoding="utf-8")
    out.with_suffix(".csv").write_text(report_csv(report), encoding="utf-8")
    return EXIT_OK if report.verified else EXIT_FAIL


def cmd_bench(args) -> int:
    try:
        scenario = Scenario.load(args.scenario)
    except (ScenarioError, OSError) as exc:
        print(f"linsched bench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.timing:
        scenario.record_runtime = True
    result = run_benchmark(scenario, args.out, jobs=args.jobs)
    failed = [r for r in result.runs if not r.feasible]
    if failed:
        return _fail(
            {
                "error": "infeasible",
                "runs": [
                    {"algorithm": r.algorithm, "limit_gbps": r.limit_gbps, "seed": r.seed, "message": r.error}
                    for r in failed
                    if r.noise == scenario.noise[0]
                ],
            }
        )
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from linsched.api.service import create_app

    host, _, port = args.listen.rpartition(":")
    uvicorn.run(create_app(trace_dir=args.trace_dir), host=host or "127.0.0.1", port=int(port))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="linsched", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule", help="build a transfer plan")
    p.add_argument("--requests", required=True)
    p.add_argument("--traces", required=True)
    p.add_argument("--limit", type=float, required=True, help="bandwidth limit in Gbps")
    p.add_argument("--slot-minutes", type=float, default=15.0)
    p.add_argument("--algorithm", choices=[*ALGORITHM_NAMES], default="lints")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", help="evaluate a plan's energy and emissions")
    p.add_argument("--plan", required=True)
    p.add_argument("--traces", required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="run a benchmark scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="record runtime_ms (makes output non-reproducible)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="run the HTTP scheduling service")
    p.add_argument("--listen", default=os.environ.get("LINTS_LISTEN", "127.0.0.1:8000"))
    p.add_argument("--trace-dir", default=os.environ.get("LINTS_TRACE_DIR"))
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
