"""Command-line entry point: ``mia <stage> ...`` and ``mia simulate``.

Exit codes: 0 success, 1 validation error, 2 dependency or transport
error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import PipelineConfig, load_config
from .errors import (
    DependencyError,
    MiaError,
    ProtocolError,
    TransportError,
    UnsupportedCapabilityError,
    ValidationError,
)
from .pipeline import STAGES, run_stage, simulate

log = logging.getLogger("mia")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mia",
        description="Membership-inference auditing for black-box code completion models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, help="pipeline config JSON")
        p.add_argument("--seed", type=int, help="override the config seed")

    for stage in STAGES:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        add_common(p)
        p.add_argument("--in", dest="inputs", action="append", type=Path, default=[],
                       help="input artifact (repeatable)")
        p.add_argument("--out", dest="out", type=Path, required=True, help="output artifact")
        p.add_argument("--force", action="store_true",
                       help="accept inputs whose config hash does not match")

    p = sub.add_parser("simulate", help="synthetic end-to-end run against the simulated victim")
    add_common(p)
    p.add_argument("--members", type=int, default=50, help="synthetic member count")
    p.add_argument("--nonmembers", type=int, default=50, help="synthetic nonmember count")
    p.add_argument("--workdir", type=Path, help="keep stage artifacts in this directory")
    p.add_argument("--out", dest="out", type=Path, help="also write the report JSON here")
    return parser


def _load_config(args) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        config.seed = args.seed
    config.validate()
    return config


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "simulate":
            report = simulate(config, args.members, args.nonmembers, workdir=args.workdir)
            doc = report.to_dict()
            print(json.dumps(doc, indent=2))
            if args.out:
                args.out.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
            return 0
        out = run_stage(args.command, config, args.inputs, args.out, force=args.force)
        log.info("%s wrote %s", args.command, out)
        return 0
    except (DependencyError, TransportError, ProtocolError, UnsupportedCapabilityError) as exc:
        log.error("%s", exc)
        return 2
    except (ValidationError, MiaError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
