"""Discrete path profiles: n bins holding m balls in total.

A profile assigns ``b[i]`` balls to path ``i``; the fraction of traffic
routed over path ``i`` is ``b[i] / m``.  Cumulative counts are kept next
to the per-bin counts so that mapping a selection point to a path is a
binary search.
"""

from __future__ import annotations

import bisect
from fractions import Fraction
from typing import Iterable, Sequence


class ProfileError(ValueError):
    pass


class PathProfile:
    """Ball counts per path plus their prefix sums.

    ``c`` has ``n + 1`` entries with ``c[0] == 0``, so path ``i`` owns the
    balls ``c[i] .. c[i+1] - 1``.
    """

    __slots__ = ("b", "c")

    def __init__(self, counts: Iterable[int]):
        b = [int(x) for x in counts]
        if not b:
            raise ProfileError("profile needs at least one path")
        if any(x < 0 for x in b):
            raise ProfileError(f"negative ball count in {b}")
        self.b = b
        self.c = _cumulative(b)
        if self.m == 0:
            raise ProfileError("profile has zero balls")

    @property
    def n(self) -> int:
        return len(self.b)

    @property
    def m(self) -> int:
        return self.c[-1]

    @property
    def ell(self) -> int | None:
        """log2(m) when m is a power of two, else None."""
        m = self.m
        if m & (m - 1):
            return None
        return m.bit_length() - 1

    def set_counts(self, counts: Sequence[int]) -> None:
        # only the update module should call this; it keeps m fixed
        if len(counts) != self.n:
            raise ProfileError("path count changed")
        if any(x < 0 for x in counts):
            raise ProfileError(f"negative ball count in {list(counts)}")
        c = _cumulative(counts)
        if c[-1] != self.m:
            raise ProfileError(f"ball total changed from {self.m} to {c[-1]}")
        self.b = list(counts)
        self.c = c

    def interval(self, i: int) -> tuple[int, int]:
        """Half-open ball range ``[lo, hi)`` owned by path ``i``."""
        return self.c[i], self.c[i + 1]

    def copy(self) -> PathProfile:
        return PathProfile(self.b)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PathProfile):
            return NotImplemented
        return self.b == other.b

    def __repr__(self) -> str:
        return f"PathProfile({self.b})"


def _cumulative(b: Sequence[int]) -> list[int]:
    c = [0]
    for x in b:
        c.append(c[-1] + x)
    return c


def profile_from_counts(b: Iterable[int]) -> PathProfile:
    return PathProfile(b)


def parse_profile(text: str) -> PathProfile:
    """Parse a comma-separated literal such as ``127,400,200,173,124``."""
    try:
        counts = [int(tok) for tok in text.split(",")]
    except ValueError as exc:
        raise ProfileError(f"bad profile literal {text!r}") from exc
    return PathProfile(counts)


def select_path(profile: PathProfile, k: int, search: str = "binary") -> int:
    """Return the path ``i`` with ``c(i-1) <= k < c(i)``.

    ``search`` picks the lookup over the cumulative array: ``binary``,
    ``linear`` or ``interpolation``.  All three give the same answer.
    """
    c = profile.c
    if not 0 <= k < c[-1]:
        raise ProfileError(f"selection point {k} outside [0, {c[-1]})")
    if search == "binary":
        return bisect.bisect_right(c, k) - 1
    if search == "linear":
        i = 0
        while c[i + 1] <= k:
            i += 1
        return i
    if search == "interpolation":
        return _interpolation_search(c, k)
    raise ValueError(f"unknown search {search!r}")


def _interpolation_search(c: list[int], k: int) -> int:
    # find largest i in [0, n-1] with c[i] <= k; c is non-decreasing
    lo, hi = 0, len(c) - 2
    while lo < hi:
        span = c[hi + 1] - c[lo]
        guess = lo + (k - c[lo]) * (hi - lo) // span if span else lo
        guess = min(max(guess, lo), hi)
        if c[guess + 1] <= k:
            lo = guess + 1
        elif c[guess] > k:
            hi = guess - 1
        else:
            return guess
    return lo


def fractions(profile: PathProfile) -> list[Fraction]:
    m = profile.m
    return [Fraction(x, m) for x in profile.b]
