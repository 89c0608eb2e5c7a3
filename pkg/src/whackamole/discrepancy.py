"""Measured spray discrepancy and the matching theoretical bounds.

For a block of consecutive balls ``A = {ia..ib}`` and counter window
``j..j'``, the discrepancy is the number of selections that land in ``A``
minus the expected ``|A|/m * (j' - j + 1)``.  From a start ``j`` the
largest excess (``maxdisc``) and largest shortfall (``mindisc``) are taken
over all forward windows, with 0 always included; their difference is the
span, and ``dev`` is the largest span over all starts.

All values are exact: walks are kept scaled by ``m`` as integers
(``m * hits - |A| * k``) and converted to ``Fraction`` at the end.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from whackamole.profile import PathProfile, ProfileError
from whackamole.spray import Method, SpraySeed, selection_point


@dataclass(frozen=True)
class BallInterval:
    ia: int
    ib: int  # inclusive
    ell: int

    def __post_init__(self) -> None:
        if not 0 <= self.ia <= self.ib < (1 << self.ell):
            raise ValueError(f"bad interval [{self.ia}, {self.ib}] for m={1 << self.ell}")

    @property
    def size(self) -> int:
        return self.ib - self.ia + 1

    def contains(self, k: int) -> bool:
        return self.ia <= k <= self.ib


@dataclass(frozen=True)
class DiscrepancyReport:
    start: int
    maxdisc: Fraction
    mindisc: Fraction

    @property
    def span(self) -> Fraction:
        return self.maxdisc - self.mindisc


@lru_cache(maxsize=32)
def _reverse_table(ell: int) -> np.ndarray:
    idx = np.arange(1 << ell, dtype=np.int64)
    out = np.zeros_like(idx)
    for bit in range(ell):
        out |= ((idx >> bit) & 1) << (ell - 1 - bit)
    out.flags.writeable = False
    return out


def points(method: Method, seed: SpraySeed, ell: int, start: int, count: int) -> np.ndarray:
    """Selection points for counter values ``start .. start+count-1``."""
    m = 1 << ell
    rev = _reverse_table(ell)
    j = (np.arange(count, dtype=np.int64) + start) % m
    if method is Method.PLAIN:
        return rev[j]
    if method is Method.SHUFFLE1:
        return rev[(seed.sa + j * seed.sb) % m]
    if method is Method.SHUFFLE2:
        return (seed.sa + seed.sb * rev[j]) % m
    raise ValueError(f"unknown method {method!r}")


def disc(method: Method, seed: SpraySeed, interval: BallInterval, j: int, j_prime: int) -> Fraction:
    if j_prime < j:
        raise ValueError("window end precedes start")
    ell = interval.ell
    hits = sum(
        interval.contains(selection_point(method, seed, ell, t)) for t in range(j, j_prime + 1)
    )
    return hits - Fraction(interval.size * (j_prime - j + 1), 1 << ell)


def scaled_walk(method: Method, seed: SpraySeed, interval: BallInterval, start: int, length: int) -> np.ndarray:
    """``m * disc(A, start, start+k-1)`` for ``k = 0..length`` (k=0 gives 0)."""
    pts = points(method, seed, interval.ell, start, length)
    hit = ((pts >= interval.ia) & (pts <= interval.ib)).astype(np.int64)
    walk = np.empty(length + 1, dtype=np.int64)
    walk[0] = 0
    k = np.arange(1, length + 1, dtype=np.int64)
    walk[1:] = (1 << interval.ell) * np.cumsum(hit) - interval.size * k
    return walk


def report_at(method: Method, seed: SpraySeed, interval: BallInterval, start: int) -> DiscrepancyReport:
    """maxdisc and mindisc from ``start``.

    Any window longer than m splits into whole periods, which contribute
    zero, plus a shorter window; so one period of windows covers every
    value the forward sup and inf can take.
    """
    m = 1 << interval.ell
    walk = scaled_walk(method, seed, interval, start, m)
    return DiscrepancyReport(start, Fraction(int(walk.max()), m), Fraction(int(walk.min()), m))


def dev(method: Method, seed: SpraySeed, interval: BallInterval) -> tuple[Fraction, int]:
    """Largest span over all starts, and the first start that attains it.

    The scaled walk is m-periodic, so the window ``[j, j+m]`` always sees
    the walk's global maximum and minimum; the span is the same for every
    start.  ``dev_bruteforce`` checks this by enumeration.
    """
    m = 1 << interval.ell
    walk = scaled_walk(method, seed, interval, 0, m)
    return Fraction(int(walk.max() - walk.min()), m), 0


def dev_bruteforce(method: Method, seed: SpraySeed, interval: BallInterval) -> tuple[Fraction, int]:
    m = 1 << interval.ell
    walk = scaled_walk(method, seed, interval, 0, 2 * m)
    best, arg = -1, 0
    for j in range(m):
        window = walk[j : j + m + 1]
        span = int(window.max() - window.min())
        if span > best:
            best, arg = span, j
    return Fraction(best, m), arg


def path_interval(profile: PathProfile, i: int) -> BallInterval | None:
    ell = profile.ell
    if ell is None or ell < 1:
        raise ProfileError(f"m={profile.m} is not a power of two >= 2")
    lo, hi = profile.interval(i)
    if lo == hi:
        return None
    return BallInterval(lo, hi - 1, ell)


def path_deviation(
    method: Method, seed: SpraySeed, profile: PathProfile, i: int, start: int | None = None
) -> Fraction:
    """Span of path ``i`` from ``start``, or its sup over starts when omitted.

    A path with no balls is never selected and has deviation 0.
    """
    interval = path_interval(profile, i)
    if interval is None:
        return Fraction(0)
    if start is None:
        return dev(method, seed, interval)[0]
    return report_at(method, seed, interval, start).span


def min_dyadic_cover(ia: int, ib: int, ell: int) -> list[tuple[int, int]]:
    """Fewest aligned dyadic blocks exactly covering ``ia..ib``.

    Blocks are ``(level, index)``: level ``e`` has blocks of ``2**(ell-e)``
    balls and block ``index`` starts at ``index * 2**(ell-e)``.
    """
    if not 0 <= ia <= ib < (1 << ell):
        raise ValueError(f"bad range [{ia}, {ib}] for ell={ell}")
    cover = []
    pos = ia
    while pos <= ib:
        size = (pos & -pos) if pos else 1 << ell
        while pos + size - 1 > ib:
            size >>= 1
        k = size.bit_length() - 1
        cover.append((ell - k, pos >> k))
        pos += size
    return cover


def dyadic_level(ia: int, ib: int, ell: int) -> int | None:
    size = ib - ia + 1
    if size & (size - 1) or ia % size:
        return None
    return ell - (size.bit_length() - 1)


def _factor(method: Method) -> int:
    return 2 if method is Method.SHUFFLE2 else 1


def generic_bounds(method: Method, ia: int, ib: int, ell: int) -> dict[str, Fraction]:
    """Both general bounds for ``ia..ib``: ``ell`` and ``ceil(log2(ib-ia)) + 2``.

    Plain spraying is shuffle method 1 with the identity seed and shares
    its bounds; shuffle method 2 doubles them.
    """
    f = _factor(method)
    out = {"ell": Fraction(f * ell)}
    if ib > ia:
        # (w - 1).bit_length() == ceil(log2(w)) for w >= 1
        out["log_width"] = Fraction(f * ((ib - ia - 1).bit_length() + 2))
    return out


def bound_for(method: Method, ia: int, ib: int, ell: int) -> Fraction:
    level = dyadic_level(ia, ib, ell)
    if level is not None:
        if level == 0:
            return Fraction(0)
        return _factor(method) * (1 - Fraction(1, 2**level))
    return min(generic_bounds(method, ia, ib, ell).values())
