"""Simulation inputs and their JSON form.

Times are integer microseconds, sizes integer bits, rates integer bits
per second.  A config round-trips through ``SimConfig.from_json`` /
``SimConfig.to_json``::

    {
      "paths": [{"latency_us": 100000, "bandwidth_bps": 100000000,
                 "queue_capacity": 100000, "ecn_threshold": 100000,
                 "loss": {"drop_seqs": [5]}}],
      "message": {"size_bits": 10000000, "packet_bits": 10000,
                  "completion": "all"},
      "schedule": [{"start_us": 0, "profile": [1024]}],
      "spray": {"method": "shuffle1", "seed": [0, 1], "rotation": "never"},
      "adapt": null,
      "send_rate": {"mode": "active_paths"}
    }
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from whackamole.adapt import DEFAULT_POLICY, AlphaPolicy
from whackamole.profile import PathProfile, ProfileError
from whackamole.spray import Method, RotationPolicy, SpraySeed, SprayState

UNBOUNDED = 10**9


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LossPattern:
    """Which packets a path loses in transit.

    Either an explicit set of per-path sequence numbers, or a seeded
    Bernoulli rate.  Both may be given; a packet is lost if either says so.
    """

    drop_seqs: frozenset[int] = frozenset()
    rate: Fraction = Fraction(0)
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.rate <= 1:
            raise ConfigError(f"loss rate {self.rate} outside [0, 1]")

    def dropper(self, path_index: int):
        rng = random.Random(self.seed * 1_000_003 + path_index)
        rate = self.rate

        def drop(seq: int) -> bool:
            # draw for every packet so the pattern does not depend on drop_seqs
            coin = rng.random() < rate if rate else False
            return seq in self.drop_seqs or coin

        return drop

    @classmethod
    def from_json(cls, d: dict | None) -> LossPattern:
        if not d:
            return cls()
        return cls(frozenset(d.get("drop_seqs", ())), Fraction(str(d.get("rate", 0))), int(d.get("seed", 0)))

    def to_json(self) -> dict:
        return {"drop_seqs": sorted(self.drop_seqs), "rate": str(self.rate), "seed": self.seed}


@dataclass(frozen=True)
class PathSpec:
    latency_us: int
    bandwidth_bps: int
    queue_capacity: int = UNBOUNDED
    ecn_threshold: int = UNBOUNDED
    loss: LossPattern = LossPattern()

    def __post_init__(self) -> None:
        if self.latency_us < 0:
            raise ConfigError("latency must be non-negative")
        if self.bandwidth_bps <= 0:
            raise ConfigError("bandwidth must be positive")
        if self.queue_capacity < 1:
            raise ConfigError("queue capacity must be at least one packet")
        if self.ecn_threshold > self.queue_capacity:
            raise ConfigError("ECN threshold above queue capacity")

    @classmethod
    def from_json(cls, d: dict) -> PathSpec:
        return cls(
            int(d["latency_us"]),
            int(d["bandwidth_bps"]),
            int(d.get("queue_capacity", UNBOUNDED)),
            int(d.get("ecn_threshold", d.get("queue_capacity", UNBOUNDED))),
            LossPattern.from_json(d.get("loss")),
        )

    def to_json(self) -> dict:
        return {
            "latency_us": self.latency_us,
            "bandwidth_bps": self.bandwidth_bps,
            "queue_capacity": self.queue_capacity,
            "ecn_threshold": self.ecn_threshold,
            "loss": self.loss.to_json(),
        }


@dataclass(frozen=True)
class MessageSpec:
    size_bits: int
    packet_bits: int = 10_000
    completion: str = "all"  # "all" or "fountain"
    required: int | None = None  # fountain: distinct packets needed
    budget: int | None = None  # fountain: most packets the source will send

    def __post_init__(self) -> None:
        if self.size_bits <= 0 or self.packet_bits <= 0:
            raise ConfigError("message and packet sizes must be positive")
        if self.completion not in ("all", "fountain"):
            raise ConfigError(f"unknown completion mode {self.completion!r}")
        if self.completion == "fountain" and self.required_count > self.send_budget:
            raise ConfigError("fountain needs more packets than the send budget")

    @property
    def packet_count(self) -> int:
        return -(-self.size_bits // self.packet_bits)

    @property
    def required_count(self) -> int:
        if self.completion == "fountain" and self.required is not None:
            return self.required
        return self.packet_count

    @property
    def send_budget(self) -> int:
        if self.completion == "all":
            return self.packet_count
        return self.budget if self.budget is not None else 2 * self.required_count

    @classmethod
    def from_json(cls, d: dict) -> MessageSpec:
        return cls(
            int(d["size_bits"]),
            int(d.get("packet_bits", 10_000)),
            d.get("completion", "all"),
            d.get("required"),
            d.get("budget"),
        )

    def to_json(self) -> dict:
        return {
            "size_bits": self.size_bits,
            "packet_bits": self.packet_bits,
            "completion": self.completion,
            "required": self.required,
            "budget": self.budget,
        }


@dataclass(frozen=True)
class ProfileSchedule:
    segments: tuple[tuple[int, tuple[int, ...]], ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ConfigError("schedule is empty")
        if self.segments[0][0] != 0:
            raise ConfigError("schedule must start at time 0")
        starts = [s for s, _ in self.segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ConfigError("schedule start times must strictly increase")
        shapes = {(len(b), sum(b)) for _, b in self.segments}
        if len(shapes) != 1:
            raise ConfigError("schedule profiles differ in path count or ball total")
        try:
            for _, b in self.segments:
                PathProfile(b)
        except ProfileError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def constant(cls, counts) -> ProfileSchedule:
        return cls(((0, tuple(counts)),))

    def profile(self, k: int) -> PathProfile:
        return PathProfile(self.segments[k][1])

    @classmethod
    def from_json(cls, segs: list[dict]) -> ProfileSchedule:
        return cls(tuple((int(s["start_us"]), tuple(int(x) for x in s["profile"])) for s in segs))

    def to_json(self) -> list[dict]:
        return [{"start_us": s, "profile": list(b)} for s, b in self.segments]


@dataclass(frozen=True)
class SprayConfig:
    method: Method = Method.SHUFFLE1
    seed: SpraySeed = SpraySeed(0, 1)
    rotation: RotationPolicy = RotationPolicy.NEVER
    rotation_seed: int = 0

    def build(self, ell: int) -> SprayState:
        entropy = random.Random(self.rotation_seed) if self.rotation is RotationPolicy.EVERY_PERIOD else None
        return SprayState(ell, self.seed, self.method, self.rotation, entropy)

    @classmethod
    def from_json(cls, d: dict | None) -> SprayConfig:
        d = d or {}
        sa, sb = d.get("seed", (0, 1))
        return cls(
            Method(d.get("method", "shuffle1")),
            SpraySeed(int(sa), int(sb)),
            RotationPolicy(d.get("rotation", "never")),
            int(d.get("rotation_seed", 0)),
        )

    def to_json(self) -> dict:
        return {
            "method": self.method.value,
            "seed": [self.seed.sa, self.seed.sb],
            "rotation": self.rotation.value,
            "rotation_seed": self.rotation_seed,
        }


@dataclass(frozen=True)
class AdaptConfig:
    window_us: int = 1000
    strategy: str = "whack"  # or "rebalance"
    budget: int = 64  # rebalance only
    policy: AlphaPolicy = DEFAULT_POLICY

    def __post_init__(self) -> None:
        if self.window_us <= 0:
            raise ConfigError("adapt window must be positive")
        if self.strategy not in ("whack", "rebalance"):
            raise ConfigError(f"unknown adapt strategy {self.strategy!r}")
        if self.budget < 1:
            raise ConfigError("rebalance budget must be positive")

    @classmethod
    def from_json(cls, d: dict | None) -> AdaptConfig | None:
        if d is None:
            return None
        policy = AlphaPolicy.from_json(d["policy"]) if "policy" in d else DEFAULT_POLICY
        return cls(int(d.get("window_us", 1000)), d.get("strategy", "whack"), int(d.get("budget", 64)), policy)

    def to_json(self) -> dict:
        return {
            "window_us": self.window_us,
            "strategy": self.strategy,
            "budget": self.budget,
            "policy": self.policy.to_json(),
        }


@dataclass(frozen=True)
class SendRate:
    """Aggregate pacing rate of the source.

    ``active_paths``: sum of bandwidths of the paths that currently hold
    balls.  ``fixed``: a constant ``bps``.
    """

    mode: str = "active_paths"
    bps: int | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("active_paths", "fixed"):
            raise ConfigError(f"unknown send rate mode {self.mode!r}")
        if self.mode == "fixed" and not (self.bps and self.bps > 0):
            raise ConfigError("fixed send rate needs positive bps")

    @classmethod
    def from_json(cls, d: dict | None) -> SendRate:
        d = d or {}
        return cls(d.get("mode", "active_paths"), d.get("bps"))

    def to_json(self) -> dict:
        return {"mode": self.mode, "bps": self.bps}


@dataclass(frozen=True)
class SimConfig:
    paths: tuple[PathSpec, ...]
    message: MessageSpec
    schedule: ProfileSchedule
    spray: SprayConfig = SprayConfig()
    adapt: AdaptConfig | None = None
    send_rate: SendRate = SendRate()
    feedback_delay_us: int | None = None  # None: reverse latency of the same path
    timeout_us: int = 60_000_000
    trace: bool = False

    def __post_init__(self) -> None:
        n = len(self.schedule.segments[0][1])
        if n != len(self.paths):
            raise ConfigError(f"schedule has {n} paths, config has {len(self.paths)}")
        m = sum(self.schedule.segments[0][1])
        if m < 2 or m & (m - 1):
            raise ConfigError(f"ball total {m} must be a power of two >= 2")

    @property
    def ell(self) -> int:
        return sum(self.schedule.segments[0][1]).bit_length() - 1

    @classmethod
    def from_json(cls, d: dict) -> SimConfig:
        try:
            return cls(
                tuple(PathSpec.from_json(p) for p in d["paths"]),
                MessageSpec.from_json(d["message"]),
                ProfileSchedule.from_json(d["schedule"]),
                SprayConfig.from_json(d.get("spray")),
                AdaptConfig.from_json(d.get("adapt")),
                SendRate.from_json(d.get("send_rate")),
                d.get("feedback_delay_us"),
                int(d.get("timeout_us", 60_000_000)),
                bool(d.get("trace", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad sim config: {exc}") from exc

    def to_json(self) -> dict:
        return {
            "paths": [p.to_json() for p in self.paths],
            "message": self.message.to_json(),
            "schedule": self.schedule.to_json(),
            "spray": self.spray.to_json(),
            "adapt": self.adapt.to_json() if self.adapt else None,
            "send_rate": self.send_rate.to_json(),
            "feedback_delay_us": self.feedback_delay_us,
            "timeout_us": self.timeout_us,
            "trace": self.trace,
        }
