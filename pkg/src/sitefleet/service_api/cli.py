"""Command line front end.

Exit codes: 0 clean run, 1 safety violation during the run, 2 bad scenario
or arguments, 3 log integrity failure (truncation, digest mismatch).
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from ..errors import ConfigInvalid, TruncatedLog
from .events import replay
from .runner import ScenarioRunner
from .scenario import load_scenario


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario, seed=args.seed)
    except ConfigInvalid as exc:
        print(f"scenario invalid: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read scenario: {exc}", file=sys.stderr)
        return 2

    runner = ScenarioRunner(scenario, log_path=args.log)
    if args.serve:
        from .server import serve

        print(f"serving ws://{args.host}:{args.port}/ws "
              f"(speed x{args.speed})", file=sys.stderr)
        serve(runner, host=args.host, port=args.port, speed=args.speed)
        code = runner.finalize()
    else:
        code = runner.run()

    if not args.quiet:
        counts: dict[str, int] = {}
        for rec in runner.log.records:
            counts[rec["kind"]] = counts.get(rec["kind"], 0) + 1
        summary = {
            "exit": code,
            "sim_time": round(runner.world.time, 3),
            "ticks": runner.world.tick,
            "events": len(runner.log.records),
            "goals": counts.get("GoalReached", 0),
            "violations": counts.get("SafetyViolation", 0),
            "digest": runner.log.digest,
        }
        print(json.dumps(summary))
    return code


def _cmd_replay(args: argparse.Namespace) -> int:
    try:
        state, digest = replay(args.log)
    except TruncatedLog as exc:
        print(f"log truncated: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"log invalid: {exc}", file=sys.stderr)
        return 3
    out = {"digest": digest, "sim_time": state["sim_time"],
           "events": state["events"],
           "agents": {aid: a["mode"] for aid, a in state["agents"].items()}}
    print(json.dumps(out))
    if args.dump_state:
        print(json.dumps(state, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sitefleet",
        description="Deterministic fleet simulation: run scenarios, "
                    "serve operators, verify logs.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario file")
    run.add_argument("scenario", help="scenario YAML path")
    run.add_argument("--log", default=None, help="event log output (ndjson)")
    run.add_argument("--seed", type=int, default=None,
                     help="override the scenario seed")
    run.add_argument("--serve", action="store_true",
                     help="pace in wall time and open the websocket console")
    run.add_argument("--host", default="127.0.0.1")
    run.add_argument("--port", type=int, default=8733)
    run.add_argument("--speed", type=float, default=1.0,
                     help="wall-clock multiplier for --serve")
    run.add_argument("--quiet", action="store_true",
                     help="suppress the summary line")
    run.set_defaults(func=_cmd_run)

    rep = sub.add_parser("replay", help="re-fold an event log and verify "
                                        "its digest")
    rep.add_argument("log", help="event log path (ndjson)")
    rep.add_argument("--dump-state", action="store_true",
                     help="print the full replayed state")
    rep.set_defaults(func=_cmd_replay)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
