# main.py
import argparse
import sys
from typing import Any, Dict, List, Optional, Sequence

import colorama

from config import RunConfig, load_config
from state import COMMAND_STAGES
from utils.errors import ConfigError, PipelineError
from utils.logger import log_error, set_verbose

COMMAND_HELP = {
    "cluster": "fit device modes and domain states, write the model bundle",
    "train": "label behaviour, classify states and solve the policy into the bundle",
    "simulate": "replay the test stream against the planner and write the report",
    "synth": "generate a synthetic trace (preference or savings scenario)",
    "report": "re-emit the report from saved metrics",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hitl-energy",
        description="Human-in-the-loop smart-home energy planner.",
        epilog="Any config key can be overridden as a dotted flag, e.g. --planner.gamma 0.9",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, text in COMMAND_HELP.items():
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", help="JSON config file (defaults to $HITL_CONFIG)")
        cmd.add_argument("--seed", type=int, help="master seed every module seed derives from")
        cmd.add_argument("--verbose", action="store_true", help="print [DEBUG] and [PIPELINE] lines")
    return parser


def parse_overrides(extra: Sequence[str]) -> Dict[str, str]:
    """Turn `--a.b value` / `--a.b=value` pairs into {"a.b": "value"}."""
    overrides: Dict[str, str] = {}
    items = list(extra)
    i = 0
    while i < len(items):
        token = items[i]
        if not token.startswith("--") or "." not in token:
            raise ConfigError(f"Unrecognized argument: {token}")
        key = token[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            if i + 1 >= len(items):
                raise ConfigError(f"Missing value for --{key}")
            i += 1
            value = items[i]
        overrides[key] = value
        i += 1
    return overrides


def run_pipeline(config: RunConfig, command: str) -> Dict[str, Any]:
    """Run one command through the pipeline graph and return the final state values."""
    from graph import create_pipeline_graph

    app = create_pipeline_graph()
    initial = {"config": config, "command": command, "stages": list(COMMAND_STAGES[command])}
    result = app.invoke(initial, config={"recursion_limit": 25})
    if not isinstance(result, dict):
        result = vars(result)
    return result


def main(argv: Optional[List[str]] = None) -> int:
    colorama.init()
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    if args.verbose:
        set_verbose(True)

    try:
        config = load_config(args.config, parse_overrides(extra), args.seed)
        run_pipeline(config, args.command)
    except PipelineError as e:
        log_error(str(e))
        return e.exit_code
    except KeyboardInterrupt:
        log_error("Interrupted")
        return 3
    except Exception as e:
        log_error(f"Internal error: {type(e).__name__}: {e}")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
