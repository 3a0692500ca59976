# seeding.py
import hashlib
import math

_SEED_MASK = (1 << 63) - 1


def derive_seed(master: int, *names) -> int:
    """Deterministic 63-bit child seed for a named module under a master seed."""
    key = ":".join([str(master), *(str(n) for n in names)])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & _SEED_MASK


def round_half_up(value: float) -> int:
    # Python's round() is banker's rounding; set sizes use the school rule.
    return int(math.floor(value + 0.5))
