"""Run a packaged experiment (thm47 or thm48) with config overrides and save the summary.

Usage: python3 scripts/run_experiment.py thm47 --set seed=3 --set measure_samples=20000
"""
import argparse
import dataclasses
from pathlib import Path

from revflow.cli import to_json
from revflow.experiments import EXPERIMENTS


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("experiment", choices=sorted(EXPERIMENTS))
    ap.add_argument("--set", action="append", default=[], metavar="FIELD=VALUE",
                    help="override a config field")
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    run, cfg_cls = EXPERIMENTS[args.experiment]
    types = {f.name: f.type for f in dataclasses.fields(cfg_cls)}
    overrides = {}
    for item in args.set:
        name, _, value = item.partition("=")
        if name not in types:
            ap.error(f"unknown config field {name!r}; choose from {sorted(types)}")
        overrides[name] = {"int": int, "float": float}.get(types[name], str)(value)
    summary = run(cfg_cls(**overrides))
    for c in summary.checks:
        print(c.line())
    out = Path(args.out or f"results/{args.experiment}.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(to_json(summary.to_dict()) + "\n")
    print(f"{args.experiment}: {'PASS' if summary.passed else 'FAIL'}; wrote {out}")
    raise SystemExit(0 if summary.passed else 1)


if __name__ == "__main__":
    main()
