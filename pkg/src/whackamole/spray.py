"""Per-packet path selection from an l-bit spray counter.

The counter ``j`` is bit-reversed (optionally through a seeded affine map,
before or after the reversal) to give a selection point in ``[0, m)``,
which is then looked up in the path profile.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import NamedTuple

from whackamole.profile import PathProfile, ProfileError, select_path


class Method(enum.Enum):
    PLAIN = "plain"
    SHUFFLE1 = "shuffle1"
    SHUFFLE2 = "shuffle2"


class RotationPolicy(enum.Enum):
    NEVER = "never"
    EVERY_PERIOD = "every_period"


def bit_reverse(j: int, ell: int) -> int:
    """Reverse the ``ell`` least significant bits of ``j``."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    j &= (1 << ell) - 1
    out = 0
    for _ in range(ell):
        out = (out << 1) | (j & 1)
        j >>= 1
    return out


@dataclass(frozen=True)
class SpraySeed:
    sa: int
    sb: int

    def check(self, ell: int) -> None:
        m = 1 << ell
        if not 0 <= self.sa < m:
            raise ValueError(f"sa={self.sa} outside [0, {m})")
        if not (0 < self.sb < m and self.sb % 2 == 1):
            raise ValueError(f"sb={self.sb} must be odd and in (0, {m})")

    @classmethod
    def parse(cls, text: str) -> SpraySeed:
        sa, sb = (int(tok) for tok in text.split(","))
        return cls(sa, sb)


IDENTITY_SEED = SpraySeed(0, 1)


def selection_point(method: Method, seed: SpraySeed, ell: int, j: int) -> int:
    m = 1 << ell
    if method is Method.PLAIN:
        return bit_reverse(j, ell)
    if method is Method.SHUFFLE1:
        return bit_reverse((seed.sa + j * seed.sb) % m, ell)
    if method is Method.SHUFFLE2:
        return (seed.sa + seed.sb * bit_reverse(j % m, ell)) % m
    raise ValueError(f"unknown method {method!r}")


def random_seed(ell: int, entropy: random.Random) -> SpraySeed:
    m = 1 << ell
    return SpraySeed(entropy.randrange(m), 2 * entropy.randrange(max(m // 2, 1)) + 1)


class SprayDecision(NamedTuple):
    j: int
    point: int
    path: int
    path_seq: int
    seed: SpraySeed


@dataclass(frozen=True)
class SeedChange:
    j: int
    old: SpraySeed
    new: SpraySeed


@dataclass
class SprayState:
    """Spray counter for one source flow.

    ``j`` grows without bound and is reduced mod ``2**ell`` only when a
    selection point is computed.  With ``EVERY_PERIOD`` rotation a fresh
    seed is drawn from ``entropy`` whenever ``j`` crosses a multiple of m.
    """

    ell: int
    seed: SpraySeed = IDENTITY_SEED
    method: Method = Method.SHUFFLE1
    rotation: RotationPolicy = RotationPolicy.NEVER
    entropy: random.Random | None = None
    j: int = 0
    path_seq: dict[int, int] = field(default_factory=dict)
    seed_log: list[SeedChange] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.ell < 1:
            raise ValueError("ell must be >= 1")
        self.seed.check(self.ell)
        if self.rotation is RotationPolicy.EVERY_PERIOD and self.entropy is None:
            raise ValueError("seed rotation needs an entropy source")

    @property
    def m(self) -> int:
        return 1 << self.ell

    def point(self, j: int | None = None) -> int:
        return selection_point(self.method, self.seed, self.ell, self.j if j is None else j)

    def next_path(self, profile: PathProfile) -> SprayDecision:
        if profile.m != self.m:
            raise ProfileError(f"profile has m={profile.m}, counter expects {self.m}")
        j, seed = self.j, self.seed
        k = self.point(j)
        path = select_path(profile, k)
        seq = self.path_seq.get(path, 0)
        self.path_seq[path] = seq + 1
        self.j += 1
        if self.rotation is RotationPolicy.EVERY_PERIOD and self.j % self.m == 0:
            rotate_seed(self, self.entropy)
        return SprayDecision(j, k, path, seq, seed)


def rotate_seed(state: SprayState, entropy: random.Random) -> SpraySeed:
    new = random_seed(state.ell, entropy)
    state.seed_log.append(SeedChange(state.j, state.seed, new))
    state.seed = new
    return new
