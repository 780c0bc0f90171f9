"""Per-level-pair sample counts and the degrees-of-freedom cost proxy.

Interior pairs follow the enlarged formula (l+l')^a 2^{2(L-(l+l'))}; the
boundary rows (l'=0, l=0, and the base pair) use the published table for
a in {0, 2, 3, 4}.  Fractional counts are rounded up and never below one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["ScheduleEntry", "sample_count", "schedule", "dof_cost"]

TABLE_A_VALUES = (0, 2, 3, 4)


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ScheduleEntry:
    l: int
    l_prime: int
    samples: int
    enlargement: float

    def __post_init__(self):
        if self.samples < 1:
            raise ScheduleError("samples must be at least 1")


def _ceil1(x: float) -> int:
    return max(1, int(math.ceil(x - 1e-9)))


def sample_count(L: int, a: float, l: int, l_prime: int, generic: bool = False) -> int:
    """Chain length M_{l l'} for finest level L and enlargement a."""
    s = l + l_prime
    if generic:
        return _ceil1(max(s, 1) ** a * 2.0 ** (2 * (L - s)))
    if a not in TABLE_A_VALUES:
        raise ScheduleError(
            f"enlargement a={a} has no boundary rule; use a in {TABLE_A_VALUES} or generic mode"
        )
    a = int(a)
    if l >= 1 and l_prime >= 1:
        base = 2.0 ** (2 * (L - s))
        return _ceil1(base if a == 0 else s**a * base)
    if s == 0:
        top = 2.0 ** (2 * L)
        if a == 0:
            return _ceil1(top / max(1, L) ** 4)
        if a == 2:
            return _ceil1(top / max(1, L) ** 2)
        if a == 3:
            return _ceil1(top / max(1, L))
        return _ceil1(top / max(1.0, math.log(float(L) ** 2 if L > 1 else math.e)))
    lb = max(l, l_prime)  # boundary row, symmetric in (l,0) and (0,l)
    base = 2.0 ** (2 * (L - lb))
    if a == 0:
        return _ceil1(base / max(1, L) ** 2)
    if a == 2:
        return _ceil1(base)
    if a == 3:
        return _ceil1(lb * base)
    return _ceil1(lb**2 * base)


def schedule(L: int, a: float, generic: bool = False) -> list:
    """All (l, l') entries with l + l' <= L and their sample counts."""
    if L < 0:
        raise ScheduleError("L must be nonnegative")
    if a < 0:
        raise ScheduleError("enlargement must be nonnegative")
    entries = []
    for l in range(L + 1):
        for lp in range(L - l + 1):
            entries.append(ScheduleEntry(l, lp, sample_count(L, a, l, lp, generic), a))
    return entries


def dof_cost(L: int, a: float, generic: bool = False) -> int:
    """Total degrees-of-freedom proxy: sum of M_{ll'} (2^{3l} + 2^{3l'}).

    One level-l forward solve costs O(2^{3l}) dofs (2^{2l} unknowns over 2^l
    steps); the total scales like L^a 2^{3L}.
    """
    total = 0
    for e in schedule(L, a, generic):
        total += e.samples * (2 ** (3 * e.l) + 2 ** (3 * e.l_prime))
    return total
