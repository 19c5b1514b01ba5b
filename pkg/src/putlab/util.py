"""Small shared helpers: deterministic seed derivation and exact ceilings."""

import hashlib
import math
from fractions import Fraction


def derive_seed(base: int, *parts) -> int:
    """Derive an independent 64-bit stream seed from a base seed and labels.

    Stable across processes and platforms, so parallel workers and resumed
    runs reproduce the exact per-task randomness of an uninterrupted run.
    """
    material = repr((int(base),) + tuple(parts)).encode("utf-8")
    digest = hashlib.sha256(material).digest()
    return int.from_bytes(digest[:8], "big")


def exact_ceil_mul(fraction: float, count: int) -> int:
    """ceil(fraction * count) without float rounding artifacts.

    Floats are dyadic rationals, so Fraction(fraction) * count is exact;
    e.g. 0.3 * 10 must give 3, not ceil(3.0000000000000004) == 4.
    """
    return math.ceil(Fraction(fraction) * count)
