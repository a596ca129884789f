"""``xferlab`` command line entry point.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 I/O error.
"""

import argparse
import json
import sys
from pathlib import Path

from ..errors import InvalidInput, TrainingDiverged
from .config import ConfigError, SweepConfig, load_config
from .sweep import cmd_gen, cmd_sweep, cmd_train
from .verify import SUITES, run_verify

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xferlab",
        description="Adversarial and knowledge transferability experiments on synthetic data.",
    )
    parser.add_argument("command", choices=("gen", "train", "sweep", "verify"))
    parser.add_argument("--config", help="JSON config file; every field is optional")
    parser.add_argument("--out", help="output directory (overrides out_dir)")
    parser.add_argument("--seed", type=int, help="master seed (overrides seed)")
    parser.add_argument("--only", action="append", choices=sorted(SUITES),
                        help="verify: run only this suite (repeatable)")
    parser.add_argument("--trials", type=int, help="verify: trials per suite")
    parser.add_argument("--appendix-a", action="store_true",
                        help="verify: run the one-dimensional worked example")
    return parser


def _config(args) -> SweepConfig:
    cfg = load_config(args.config) if args.config else SweepConfig()
    if args.out is not None:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg.validate()


def _verify(cfg: SweepConfig, args) -> int:
    only = list(args.only or [])
    if args.appendix_a and "appendix_a" not in only:
        only.append("appendix_a")
    if args.trials is not None and args.trials < 1:
        raise ConfigError("--trials must be at least 1")
    report = run_verify(seed=cfg.seed, only=only or None, trials=args.trials)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "verify.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    for name, res in report["suites"].items():
        status = "PASS" if res["passed"] else "FAIL"
        print(f"{status} {name}: {res['trials']} trials ({res['checks']} checks), worst {res['worst']:.3e} "
              f"(tol {res['tolerance']:.0e})")
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        if args.command == "verify":
            return _verify(cfg, args)
        if args.command == "gen":
            written = cmd_gen(cfg)
        elif args.command == "train":
            written = cmd_train(cfg)
        else:
            _, written = cmd_sweep(cfg)
        for path in written:
            print(f"wrote {path}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvalidInput, ValueError) as exc:
        # malformed data or model files found on disk
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TrainingDiverged as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
