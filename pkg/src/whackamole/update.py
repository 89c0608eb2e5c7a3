"""In-place profile updates that move balls between bins.

Every update keeps the ball total fixed.  Leftover balls that cannot be
split evenly are handed out one at a time starting from a shared residual
cursor, which persists across updates so no bin is favoured over time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from whackamole.profile import PathProfile


class InfeasibleUpdate(ValueError):
    pass


@dataclass
class ResidualCursor:
    r: int = 0


def _check_removal(profile: PathProfile, e: Sequence[int]) -> list[int]:
    e = [int(x) for x in e]
    if len(e) != profile.n:
        raise InfeasibleUpdate(f"removal profile has {len(e)} bins, profile has {profile.n}")
    for i, (ei, bi) in enumerate(zip(e, profile.b)):
        if not 0 <= ei <= bi:
            raise InfeasibleUpdate(f"cannot remove {ei} balls from bin {i} holding {bi}")
    return e


def _spread_residuals(b: list[int], cursor: ResidualCursor, y: int) -> None:
    n = len(b)
    for _ in range(y):
        b[cursor.r] += 1
        cursor.r = (cursor.r + 1) % n


def _spread_residuals_to(b: list[int], cursor: ResidualCursor, y: int, targets: set[int]) -> None:
    # cursor also steps over bins outside targets without filling them
    assert y < len(targets) or not targets, "residual exceeds one sweep"
    n = len(b)
    while y > 0:
        if cursor.r in targets:
            b[cursor.r] += 1
            y -= 1
        cursor.r = (cursor.r + 1) % n


def update_e1(profile: PathProfile, cursor: ResidualCursor, j: int, ej: int) -> None:
    """Take ``ej`` balls out of bin ``j`` and spread them over all bins."""
    if not 0 <= j < profile.n:
        raise InfeasibleUpdate(f"no bin {j}")
    if not 0 <= ej <= profile.b[j]:
        raise InfeasibleUpdate(f"cannot remove {ej} balls from bin {j} holding {profile.b[j]}")
    n = profile.n
    x, y = divmod(ej, n)
    b = [bi + x for bi in profile.b]
    b[j] -= ej
    _spread_residuals(b, cursor, y)
    profile.set_counts(b)


def update_e2(profile: PathProfile, cursor: ResidualCursor, e: Sequence[int]) -> None:
    """Take ``e[i]`` balls out of every bin and spread the total over all bins."""
    e = _check_removal(profile, e)
    x, y = divmod(sum(e), profile.n)
    b = [bi - ei + x for bi, ei in zip(profile.b, e)]
    _spread_residuals(b, cursor, y)
    profile.set_counts(b)


def _split(e: list[int]) -> tuple[list[int], list[int]]:
    removed = [i for i, ei in enumerate(e) if ei > 0]
    kept = [i for i, ei in enumerate(e) if ei == 0]
    return removed, kept


def update_e3(profile: PathProfile, cursor: ResidualCursor, e: Sequence[int]) -> None:
    """Take balls out of the bins with ``e[i] > 0``; spread them over the rest."""
    e = _check_removal(profile, e)
    removed, kept = _split(e)
    if not removed:
        raise InfeasibleUpdate("no balls removed")
    if not kept:
        raise InfeasibleUpdate("no bin left to receive balls")
    x, y = divmod(sum(e), len(kept))
    b = list(profile.b)
    for i in removed:
        b[i] -= e[i]
    for i in kept:
        b[i] += x
    _spread_residuals_to(b, cursor, y, set(kept))
    profile.set_counts(b)


def update_e4(profile: PathProfile, cursor: ResidualCursor, e: Sequence[int]) -> int:
    """Take balls out of the bins with ``e[i] > 0`` and rescale every bin.

    Each bin keeps ``floor((b[i] - e[i]) * m / (m - e))``.  The per-bin
    remainders add up to a whole multiple of ``m - e``; that multiple
    ``L`` is spread over the untouched bins.  Returns ``L``.
    """
    e = _check_removal(profile, e)
    removed, kept = _split(e)
    if not removed:
        raise InfeasibleUpdate("no balls removed")
    if not kept:
        raise InfeasibleUpdate("no bin left to receive balls")
    m = profile.m
    total = sum(e)
    denom = m - total
    if denom == 0:
        # only possible when every untouched bin is already empty
        raise InfeasibleUpdate("removal empties every bin")
    b = []
    rem_sum = 0
    for bi, ei in zip(profile.b, e):
        q, rem = divmod((bi - ei) * m, denom)
        b.append(q)
        rem_sum += rem
    L, leftover = divmod(rem_sum, denom)
    if leftover:
        raise AssertionError(f"remainder sum {rem_sum} not a multiple of {denom}")
    x, y = divmod(L, len(kept))
    for i in kept:
        b[i] += x
    _spread_residuals_to(b, cursor, y, set(kept))
    profile.set_counts(b)
    return L


UPDATES = {1: update_e1, 2: update_e2, 3: update_e3, 4: update_e4}
