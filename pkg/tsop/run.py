"""
CLI entry point for the typestate toolchain.

Usage:
    python -m tsop.run check specs/future.tsop
    python -m tsop.run automaton specs/future.tsop --format json -o future.json
    python -m tsop.run generate specs/future.tsop -o generated/
    python -m tsop.run simulate specs/future.tsop specs/scripts/pending_get.sim
    python -m tsop.run simulate specs/future.tsop specs/scripts/double_put.sim --threads 4
    python -m tsop.run --verbose --config /path/to/tsop.yaml check specs/lock.tsop

Environment variables:
    TSOP_CONFIG         path to tsop.yaml (default: repo root)
    TSOP_LOG_LEVEL      overrides logging.level from the config

Exit codes:
    0   success
    1   invalid spec, script or config (diagnostics on stderr)
    2   a simulation expectation failed (argparse usage errors also exit 2)
"""

import argparse
import logging
import sys

import yaml

from .automaton import build_automaton, firing_states, raw_state_count
from .codegen import write_source
from .config import load_config
from .errors import ExpectationFailed, TsopError
from .exporters.dot import export_dot
from .exporters.json_io import export_json
from .protocol import format_protocol
from .simulator import Simulator, load_script, run_threaded
from .spec import load_spec, validate_against_protocol

logger = logging.getLogger(__name__)

_RULE = "─" * 42


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsop",
        description="Check, compile and simulate typestate object specifications.",
    )
    parser.add_argument(
        "--verbose", "-v", action="store_true",
        help="Enable debug-level logging.",
    )
    parser.add_argument(
        "--config", metavar="PATH",
        help="Path to tsop.yaml (default: auto-detected).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="Validate a spec and summarise its automaton.")
    check.add_argument("spec", help="Path to a .tsop file.")

    automaton = sub.add_parser("automaton", help="Export the matching automaton.")
    automaton.add_argument("spec", help="Path to a .tsop file.")
    automaton.add_argument("--format", choices=("dot", "json"),
                           help="Output format (default: automaton.format from config).")
    automaton.add_argument("-o", "--out", metavar="FILE", help="Write here instead of stdout.")

    generate = sub.add_parser("generate", help="Emit the Python class for a spec.")
    generate.add_argument("spec", help="Path to a .tsop file.")
    generate.add_argument("-o", "--out", metavar="DIR",
                          help="Existing output directory (default: generate.out_dir from config).")

    sim = sub.add_parser("simulate", help="Replay a script of sends and calls.")
    sim.add_argument("spec", help="Path to a .tsop file.")
    sim.add_argument("script", help="Path to a simulation script.")
    sim.add_argument("--threads", type=int, metavar="N",
                     help="Stress mode: replay on N real threads (default: simulate.threads).")
    return parser


def _cmd_check(args, config) -> int:
    spec = load_spec(args.spec)
    a = build_automaton(spec)
    warnings = validate_against_protocol(spec, a)
    raw = raw_state_count(a)

    print("\n" + _RULE)
    print(f"  Object    : {spec.name}")
    print(f"  Protocol  : {format_protocol(spec.protocol)}")
    print(f"  Reactions : {len(spec.reactions)}")
    print(_RULE)
    for tag, limit in zip(a.signature, a.bounds):
        print(f"  {tag}: {limit}")
    print(f"  states: {len(a.states)} legal / {raw - len(a.states)} pruned")
    print(f"  firing: {', '.join(a.describe(s) for s in firing_states(a)) or 'none'}")
    print(_RULE)

    if warnings:
        print("\nWarnings:")
        for w in warnings:
            print(f"  • {w}")
    return 0


def _cmd_automaton(args, config) -> int:
    spec = load_spec(args.spec)
    a = build_automaton(spec)
    fmt = args.format or config["automaton"]["format"]
    if fmt not in ("dot", "json"):
        raise TsopError(f"unknown automaton format in config: {fmt}")
    text = export_dot(a) if fmt == "dot" else export_json(a)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info("Wrote %s automaton to %s", fmt, args.out)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_generate(args, config) -> int:
    spec = load_spec(args.spec)
    a = build_automaton(spec)
    path = write_source(spec, a, args.out or config["generate"]["out_dir"])
    print(path)
    return 0


def _cmd_simulate(args, config) -> int:
    spec = load_spec(args.spec)
    a = build_automaton(spec)
    script = load_script(args.script, spec)
    threads = args.threads if args.threads is not None else config["simulate"]["threads"]

    if threads:
        result = run_threaded(spec, a, script, threads, config["simulate"]["join_timeout"])
        print(f"{len(result.calls)} call(s), {result.violations} violation(s) on {threads} thread(s)")
        return 0

    sim = Simulator(spec, a)
    try:
        sim.run(script)
    finally:
        for line in sim.result.trace:
            print(line)
    return 0


_COMMANDS = {
    "check":     _cmd_check,
    "automaton": _cmd_automaton,
    "generate":  _cmd_generate,
    "simulate":  _cmd_simulate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    try:
        config = load_config(args.config)
    except FileNotFoundError as exc:
        logging.error("Config file not found: %s", exc)
        return 1
    except yaml.YAMLError as exc:
        logging.error("Invalid config file: %s", exc)
        return 1

    level = logging.DEBUG if args.verbose else config["logging"]["level"]
    try:
        logging.basicConfig(
            level=level,
            format="%(asctime)s  %(levelname)-7s  %(message)s",
            datefmt="%H:%M:%S",
        )
        logging.getLogger().setLevel(level)
    except (TypeError, ValueError) as exc:
        logging.error("Invalid logging.level in config: %s", exc)
        return 1

    try:
        return _COMMANDS[args.command](args, config)
    except ExpectationFailed as exc:
        logging.error("Expectation failed: %s", exc)
        return 2
    except FileNotFoundError as exc:
        logging.error("File not found: %s", exc)
        return 1
    except UnicodeDecodeError as exc:
        logging.error("Not UTF-8 text: %s", exc)
        return 1
    except TsopError as exc:
        logging.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
