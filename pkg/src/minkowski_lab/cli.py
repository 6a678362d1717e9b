"""Command line driver: ``minkowski-lab run|sweep|list-checks|list-surfaces``."""

from __future__ import annotations

import argparse
import datetime
import os
import platform
import sys

import numpy as np
import scipy

from . import scenario as S


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(S.EXIT_SCHEMA)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="minkowski-lab", description="Integral identity and eigenvalue-bound checks on a surface zoo.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp):
        sp.add_argument("--config", required=True, help="scenario JSON file")
        sp.add_argument("--out", default=None, help="output directory (default: scenario output.dir or ./reports)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads across checks")
        sp.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance")

    common(sub.add_parser("run", help="run every check of a scenario"))
    sw = sub.add_parser("sweep", help="run a scenario over values of one numeric field")
    common(sw)
    sw.add_argument("--axis", required=True, help="dotted path, e.g. surface.params.eps or checks.0.k")
    sw.add_argument("--values", required=True, help="comma separated numbers")
    sub.add_parser("list-checks", help="print check ids with parameter schemas")
    sub.add_parser("list-surfaces", help="print built-in surfaces and their parameters")
    return p


def _metadata(args, doc) -> dict:
    return {
        "schema": S.SCHEMA_ID,
        "command": args.command,
        "config": os.path.abspath(args.config),
        "scenario": doc.get("name", ""),
        "threads": args.threads,
        "tol_scale": args.tol_scale,
        "started": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def _out_dir(args, doc) -> str:
    return args.out or doc.get("output", {}).get("dir") or "reports"


def _parse_values(text: str) -> list:
    vals = []
    for tok in text.split(","):
        tok = tok.strip()
        try:
            vals.append(int(tok) if tok.lstrip("-").isdigit() else float(tok))
        except ValueError:
            raise S.ScenarioError(f"sweep value {tok!r} is not a number", "--values") from None
    return vals


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-checks":
        sys.stdout.write(S.describe_checks())
        return S.EXIT_PASS
    if args.command == "list-surfaces":
        sys.stdout.write(S.describe_surfaces())
        return S.EXIT_PASS
    if args.threads < 1 or args.tol_scale <= 0:
        sys.stderr.write("error: --threads must be >= 1 and --tol-scale > 0\n")
        return S.EXIT_SCHEMA
    try:
        doc = S.load(args.config)
        out = _out_dir(args, doc)
        meta = _metadata(args, doc)
        if args.command == "run":
            results = S.run_scenario(doc, args.threads, args.tol_scale)
            S.write_outputs(doc, results, out, args.tol_scale, meta)
            code = S.exit_code(results)
            for r in results:
                print(f"[{r.index:02d}] {r.check['check_id']:<20s} {r.verdict}")
        else:
            rows, code = S.sweep(doc, args.axis, _parse_values(args.values), args.threads, args.tol_scale)
            os.makedirs(out, exist_ok=True)
            text = S.table_csv(rows)
            with open(os.path.join(out, "sweep.csv"), "w") as fh:
                fh.write(text)
            with open(os.path.join(out, "metadata.json"), "w") as fh:
                fh.write(S.dumps(dict(meta, axis=args.axis, values=_parse_values(args.values))))
            sys.stdout.write(text)
    except S.ScenarioError as exc:
        sys.stderr.write(f"schema error: {exc}\n")
        return S.EXIT_SCHEMA
    sys.stderr.write(f"exit {code}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
