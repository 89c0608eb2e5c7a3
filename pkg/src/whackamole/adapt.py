"""Feedback-driven profile adjustment.

A path that shows congestion (ECN marks), loss or inflated RTT gets a
fraction ``alpha`` of its balls taken away and spread over the other
paths.  Alternatively, per-path severity weights drive a rebalance that
moves balls from the worst paths to the rest.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from whackamole.profile import PathProfile
from whackamole.update import ResidualCursor, update_e1, update_e2, update_e3

SIGNALS = ("ecn_rate", "loss_count", "rtt_excess")


@dataclass
class PathFeedback:
    """Feedback accumulated for one path over one window."""

    packets: int = 0
    ecn_marks: int = 0
    losses: int = 0
    rtt_samples: list[int] = field(default_factory=list)

    @property
    def ecn_rate(self) -> Fraction:
        return Fraction(self.ecn_marks, self.packets) if self.packets else Fraction(0)

    def mean_rtt(self) -> Fraction | None:
        if not self.rtt_samples:
            return None
        return Fraction(sum(self.rtt_samples), len(self.rtt_samples))


@dataclass(frozen=True)
class AlphaRule:
    signal: str
    threshold: Fraction
    alpha: Fraction


@dataclass(frozen=True)
class AlphaPolicy:
    """Threshold table; the largest alpha among matching rules wins."""

    rules: tuple[AlphaRule, ...]

    def __post_init__(self) -> None:
        for rule in self.rules:
            if rule.signal not in SIGNALS:
                raise ValueError(f"unknown signal {rule.signal!r}")
            if rule.threshold <= 0:
                raise ValueError("thresholds must be positive")
            if not 0 <= rule.alpha <= 1:
                raise ValueError(f"alpha {rule.alpha} outside [0, 1]")

    @classmethod
    def from_json(cls, rules: Iterable[dict]) -> AlphaPolicy:
        return cls(
            tuple(
                AlphaRule(r["signal"], Fraction(str(r["threshold"])), Fraction(str(r["alpha"])))
                for r in rules
            )
        )

    def to_json(self) -> list[dict]:
        return [
            {"signal": r.signal, "threshold": str(r.threshold), "alpha": str(r.alpha)}
            for r in self.rules
        ]


DEFAULT_POLICY = AlphaPolicy(
    (
        AlphaRule("loss_count", Fraction(1), Fraction(1, 2)),
        AlphaRule("ecn_rate", Fraction(1, 2), Fraction(1, 4)),
        AlphaRule("ecn_rate", Fraction(1, 10), Fraction(1, 8)),
        AlphaRule("rtt_excess", Fraction(1), Fraction(1, 8)),
    )
)


def rtt_excess(feedback: Sequence[PathFeedback]) -> list[Fraction]:
    """Relative excess of each path's mean RTT over the median of means."""
    means = [fb.mean_rtt() for fb in feedback]
    known = [x for x in means if x is not None]
    if not known:
        return [Fraction(0)] * len(feedback)
    median = Fraction(statistics.median(known))
    if median <= 0:
        return [Fraction(0)] * len(feedback)
    return [max(Fraction(0), (x - median) / median) if x is not None else Fraction(0) for x in means]


def feedback_to_alpha(feedback: Sequence[PathFeedback], policy: AlphaPolicy = DEFAULT_POLICY) -> list[Fraction]:
    excess = rtt_excess(feedback)
    alphas = []
    for fb, ex in zip(feedback, excess):
        values = {"ecn_rate": fb.ecn_rate, "loss_count": Fraction(fb.losses), "rtt_excess": ex}
        alpha = Fraction(0)
        for rule in policy.rules:
            if values[rule.signal] >= rule.threshold:
                alpha = max(alpha, rule.alpha)
        alphas.append(alpha)
    return alphas


def whack(profile: PathProfile, cursor: ResidualCursor, i: int, alpha: Fraction) -> int:
    """Remove ``floor(alpha * b[i])`` balls from path ``i``; returns the count."""
    alpha = Fraction(alpha)
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha {alpha} outside [0, 1]")
    e = int(alpha * profile.b[i])  # floor, alpha is non-negative
    if e:
        update_e1(profile, cursor, i, e)
    return e


def whack_many(profile: PathProfile, cursor: ResidualCursor, alphas: Sequence[Fraction]) -> list[int]:
    """Whack every path at once, pooling the removed balls.

    With a single non-zero alpha this is exactly ``whack``; with several,
    paths degraded by the same factor are treated symmetrically instead of
    in index order.
    """
    if len(alphas) != profile.n:
        raise ValueError(f"{len(alphas)} alphas for {profile.n} paths")
    alphas = [Fraction(a) for a in alphas]
    if any(not 0 <= a <= 1 for a in alphas):
        raise ValueError("alpha outside [0, 1]")
    e = [int(a * bi) for a, bi in zip(alphas, profile.b)]
    if any(e):
        update_e2(profile, cursor, e)
    return e


def severity_objective(profile: PathProfile, w: Sequence[Fraction]) -> Fraction:
    if len(w) != profile.n:
        raise ValueError(f"{len(w)} weights for {profile.n} paths")
    return sum((Fraction(wi) * bi for wi, bi in zip(w, profile.b)), Fraction(0))


def _removal_for(profile: PathProfile, w: Sequence[Fraction], budget: int) -> list[int]:
    top = max(w)
    worst = [i for i, wi in enumerate(w) if wi == top]
    held = sum(profile.b[i] for i in worst)
    take = min(budget, held)
    e = [0] * profile.n
    if take == 0:
        return e
    # proportional to b(i) among the worst bins, remainders in index order
    for i in worst:
        e[i] = take * profile.b[i] // held
    short = take - sum(e)
    for i in worst:
        if short == 0:
            break
        if e[i] < profile.b[i]:
            e[i] += 1
            short -= 1
    return e


def rebalance_step(profile: PathProfile, cursor: ResidualCursor, w: Sequence[Fraction], budget: int) -> bool:
    """Move up to ``budget`` balls off the highest-weight paths.

    Returns False (and leaves the profile alone) when no move can lower
    the weighted load: all weights equal or the worst paths hold no balls.
    """
    if budget < 1:
        raise ValueError("budget must be positive")
    if len(w) != profile.n:
        raise ValueError(f"{len(w)} weights for {profile.n} paths")
    w = [Fraction(x) for x in w]
    if any(x < 0 for x in w):
        raise ValueError("severity weights must be non-negative")
    if min(w) == max(w):
        return False
    e = _removal_for(profile, w, budget)
    if not any(e):
        return False
    before = severity_objective(profile, w)
    update_e3(profile, cursor, e)
    after = severity_objective(profile, w)
    assert after <= before, f"objective rose from {before} to {after}"
    return True
