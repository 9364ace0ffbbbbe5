"""Command line driver: ``tubelab <experiment> --config cfg.json [--out dir] [--seed N] [--jobs K]``.

Exit status: 0 when every row respects its bound, 1 on a bound violation,
2 on a configuration error (nothing is written in that case).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .experiments import EXPERIMENTS, GENERATOR, ConfigError, run_cells, validate
from .reports import SCHEMA, write_csv, write_json

HISTORY_COLUMNS = ["n", "eps", "iter", "residual", "step_norm", "damping"]


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tubelab", description=__doc__.splitlines()[0])
    p.add_argument("experiment", choices=sorted(EXPERIMENTS))
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", default=None, help="output directory (default: out/<experiment>)")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"tubelab {__version__}")
    return p


def load_config(name: str, path: str, seed: int | None) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if seed is not None:
        raw = {**raw, "seed": seed}
    return validate(name, raw), raw.get("out")


def run(name: str, cfg: dict, out: Path, jobs: int = 1) -> int:
    exp = EXPERIMENTS[name]
    rows, summary, elapsed = run_cells(name, cfg, jobs)
    bad = [r for r in rows if exp.violates and exp.violates(r)]
    extra_bad = int(summary.get("spread_violations", 0))
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / f"{name}.csv", rows, exp.columns)
    if name == "newton":
        hist = [{"n": r["n"], "eps": r["eps"], **h} for r in rows for h in r["history"]]
        write_csv(out / "newton_history.csv", hist, HISTORY_COLUMNS)
    write_json(out / f"{name}_summary.json", {
        "schema": SCHEMA, "experiment": name, "generator": GENERATOR, "seed": cfg["seed"],
        "config": cfg, "rows": len(rows), "violations": len(bad) + extra_bad,
        "runtime_seconds": elapsed, **summary})
    for r in bad[:10]:
        logging.getLogger("tubelab").error("bound violated: %s",
                                            {k: v for k, v in r.items() if k != "history"})
    return 1 if bad or extra_bad else 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg, cfg_out = load_config(args.experiment, args.config, args.seed)
    except ConfigError as e:
        print(f"tubelab: config error: {e}", file=sys.stderr)
        return 2
    out = Path(args.out or cfg_out or Path("out") / args.experiment)
    return run(args.experiment, cfg, out, args.jobs)


if __name__ == "__main__":
    sys.exit(main())
