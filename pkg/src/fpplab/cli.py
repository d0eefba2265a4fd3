"""Command line interface.

One subcommand per experiment, plus ``validate`` (config check only) and
``fit`` (power-law fit of a stored table). Examples:

    fpplab sigma-ladder --config cfg.json --workers 4 --out runs/sigma
    fpplab validate --config cfg.json
    fpplab fit --points table.json --out fit.json

On failure a machine-readable JSON error is printed to stderr and the
exit code is nonzero (2 for invalid configs, 1 otherwise).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .errors import ConfigInvalid, FppLabError

_SUBCOMMANDS = {
    "sigma-ladder": "SigmaLadder",
    "wandering-profile": "WanderingProfile",
    "transverse-increment": "TransverseIncrement",
    "increment-variance": "IncrementVariance",
    "long-range-correlation": "LongRangeCorrelation",
    "nonrandom-fluctuation": "NonrandomFluctuation",
    "conditional-decomposition": "ConditionalDecomposition",
    "exponent-report": "ExponentReport",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fpplab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name in _SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run a {_SUBCOMMANDS[name]} experiment")
        _add_run_args(p)

    v = sub.add_parser("validate", help="validate a config file without running it")
    v.add_argument("--config", required=True)

    f = sub.add_parser("fit", help="fit a power law to a JSON table of [x, y] pairs")
    f.add_argument("--points", required=True)
    f.add_argument("--out", default=None)
    return parser


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="path to the JSON experiment config")
    p.add_argument("--workers", type=int, default=None, help=f"worker processes (default ${harness.WORKERS_ENV} or 1)")
    p.add_argument("--out", default=None, help="output directory (overrides config output_dir)")
    p.add_argument("--resume", action="store_true", help="complete missing replicates of a prior run")


def _load_config(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise FppLabError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigInvalid("<file>", f"invalid JSON: {exc}")


def _fail(exc: Exception) -> int:
    payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    if isinstance(exc, ConfigInvalid):
        payload["error"]["field"] = exc.field
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return 2 if isinstance(exc, ConfigInvalid) else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            harness.validate_config(_load_config(args.config))
            print(json.dumps({"ok": True}))
            return 0
        if args.command == "fit":
            payload = harness.fit_table_file(args.points, args.out)
            print(json.dumps(payload, sort_keys=True))
            return 0
        cfg = _load_config(args.config)
        expected = _SUBCOMMANDS[args.command]
        if cfg.get("experiment") != expected:
            raise ConfigInvalid("experiment", f"subcommand {args.command} requires experiment {expected!r}")
        manifest = harness.run(cfg, workers=args.workers, out_dir=args.out, resume=args.resume)
        print(json.dumps({"ok": True, "config_hash": manifest["config_hash"]}))
        return 0
    except FppLabError as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
