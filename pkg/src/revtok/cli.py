"""Command-line front end.

    revtok replay SCENARIO [--out FILE]
    revtok oracle --trials N --seed S [--burns {none,mixed}] [--out FILE]
    revtok bench --nodes V --edges E [--seed S]

Exit codes: 0 success, 1 a check or trial failed, 2 usage or parse error.
Replay and oracle reports are byte-identical for identical inputs; timing is
never part of a replay or oracle report.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import bench_report_json, run_bench
from .errors import ParseError
from .oracle import oracle_check, oracle_report_json
from .scenario import ScenarioRunner, parse_scenario


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="revtok",
        description="Reversible-token ledger engine and scenario simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    replay = sub.add_parser("replay", help="run a scenario file and report")
    replay.add_argument("scenario", help="path to a scenario file")
    replay.add_argument("--out", help="write the JSON report here instead of stdout")

    oracle = sub.add_parser("oracle", help="randomized self-verification")
    oracle.add_argument("--trials", type=int, default=500)
    oracle.add_argument("--seed", type=int, default=0)
    oracle.add_argument("--burns", choices=["none", "mixed"], default="mixed")
    oracle.add_argument("--out", help="write the JSON report here instead of stdout")

    bench = sub.add_parser("bench", help="freeze-pass scaling measurement")
    bench.add_argument("--nodes", type=int, default=10_000)
    bench.add_argument("--edges", type=int, default=100_000)
    bench.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)

    if args.command == "replay":
        path = Path(args.scenario)
        if not path.is_file():
            print(f"revtok: no such scenario: {path}", file=sys.stderr)
            return 2
        try:
            ops = parse_scenario(path.read_text(encoding="utf-8"))
        except ParseError as err:
            print(f"revtok: {path}: {err}", file=sys.stderr)
            return 2
        result = ScenarioRunner(path.stem).run(ops)
        _emit(result.to_json(), args.out)
        return result.exit_code

    if args.command == "oracle":
        if args.trials <= 0:
            print("revtok: --trials must be positive", file=sys.stderr)
            return 2
        report = oracle_check(args.trials, args.seed, args.burns)
        _emit(oracle_report_json(report), args.out)
        return 0 if report["pass"] else 1

    report = run_bench(args.nodes, args.edges, args.seed)
    sys.stdout.write(bench_report_json(report))
    return 0 if report["withinBound"] else 1


if __name__ == "__main__":
    raise SystemExit(main())
