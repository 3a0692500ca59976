# logger.py
import os
import sys

from colorama import Fore, Style

_verbose = None


def set_verbose(enabled: bool):
    """Force [DEBUG] output on or off regardless of HITL_DEBUG."""
    global _verbose
    _verbose = enabled


def debug_enabled() -> bool:
    if _verbose is not None:
        return _verbose
    return os.getenv("HITL_DEBUG", "").strip().lower() in {"1", "true", "yes", "on"}


def log_debug(message: str):
    if debug_enabled():
        print(f"{Fore.BLUE}[DEBUG]{Style.RESET_ALL} {message}", file=sys.stderr)


def log_pipeline(message: str):
    if debug_enabled():
        print(f"{Fore.MAGENTA}[PIPELINE]{Style.RESET_ALL} {message}", file=sys.stderr)


def log_result(message: str):
    print(f"{Fore.GREEN}[RESULT]{Style.RESET_ALL} {message}")


def log_warn(message: str):
    print(f"{Fore.YELLOW}[WARN]{Style.RESET_ALL} {message}", file=sys.stderr)


def log_error(message: str):
    print(f"{Fore.RED}[ERROR]{Style.RESET_ALL} {message}", file=sys.stderr)
