"""Deterministic event loop for one sprayed message.

The source paces packets at an aggregate rate and hands each one to the
path picked by its spray counter.  Every path is a FIFO transmit queue
drained at the path's bandwidth, followed by a fixed propagation delay.
The destination answers each arrival with a feedback record (path, path
sequence number, ECN mark, detected gaps) that reaches the source after
the feedback delay; with adaptation enabled the source periodically turns
accumulated feedback into profile updates.

Events are ordered by (time, insertion order), so a config always yields
the same report.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

from whackamole.adapt import PathFeedback, feedback_to_alpha, rebalance_step, severity_objective, whack_many
from whackamole.profile import PathProfile
from whackamole.sim.config import PathSpec, SendRate, SimConfig
from whackamole.update import ResidualCursor

TRACE_COLUMNS = ("time", "event", "path", "path_seq", "flow_seq", "ecn")


@dataclass(frozen=True)
class PacketHeader:
    path_id: int
    path_seq: int
    flow_seq: int
    ecn: bool = False
    sent_at: int = 0


@dataclass(frozen=True)
class FeedbackRecord:
    path_id: int
    path_seq: int
    flow_seq: int
    ecn: bool
    sent_at: int
    arrived_at: int
    gaps: tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {
            "path": self.path_id,
            "path_seq": self.path_seq,
            "flow_seq": self.flow_seq,
            "ecn": self.ecn,
            "sent_at": self.sent_at,
            "arrived_at": self.arrived_at,
            "gaps": list(self.gaps),
        }


class Destination:
    """Tracks the highest path sequence number seen on each path.

    Paths are FIFO, so any skipped sequence number below the newest one
    is a loss.
    """

    def __init__(self) -> None:
        self.next_seq: dict[int, int] = {}

    def receive(self, header: PacketHeader, now: int) -> FeedbackRecord:
        expected = self.next_seq.get(header.path_id, 0)
        gaps = tuple(range(expected, header.path_seq))
        self.next_seq[header.path_id] = max(expected, header.path_seq + 1)
        return FeedbackRecord(
            header.path_id, header.path_seq, header.flow_seq, header.ecn, header.sent_at, now, gaps
        )


def destination_feedback(arrivals: Iterable[PacketHeader], arrival_times: Iterable[int] | None = None) -> list[FeedbackRecord]:
    dest = Destination()
    arrivals = list(arrivals)
    times = list(arrival_times) if arrival_times is not None else [h.sent_at for h in arrivals]
    return [dest.receive(h, t) for h, t in zip(arrivals, times)]


def serialization_us(bits: int, bps: int) -> int:
    return -(-bits * 10**6 // bps)


def sender_send_rate(paths: Sequence[PathSpec], profile: PathProfile, policy: SendRate = SendRate()) -> int:
    """Aggregate emission rate in bits per second."""
    if policy.mode == "fixed":
        return policy.bps
    return sum(p.bandwidth_bps for p, b in zip(paths, profile.b) if b > 0)


@dataclass
class PathStats:
    sent: int = 0
    delivered: int = 0
    dropped_queue: int = 0
    dropped_loss: int = 0
    ecn: int = 0
    in_flight: int = 0
    max_queue: int = 0

    @property
    def dropped(self) -> int:
        return self.dropped_queue + self.dropped_loss

    def to_json(self) -> dict:
        return {
            "sent": self.sent,
            "delivered": self.delivered,
            "dropped": self.dropped,
            "dropped_queue": self.dropped_queue,
            "dropped_loss": self.dropped_loss,
            "ecn": self.ecn,
            "in_flight": self.in_flight,
            "max_queue": self.max_queue,
        }


@dataclass
class CompletionReport:
    completion_time_us: int | None
    timed_out: bool
    packets_sent: int
    paths: list[PathStats]
    profile_history: list[dict]
    feedback: list[dict]
    adapt_log: list[dict]
    seed_changes: list[dict]
    trace: list[tuple] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "completion_time_us": self.completion_time_us,
            "timed_out": self.timed_out,
            "packets_sent": self.packets_sent,
            "paths": [p.to_json() for p in self.paths],
            "profile_history": self.profile_history,
            "adapt_log": self.adapt_log,
            "seed_changes": self.seed_changes,
            "feedback": self.feedback,
        }


class _Link:
    def __init__(self, index: int, spec: PathSpec) -> None:
        self.index = index
        self.spec = spec
        self.queue: deque[PacketHeader] = deque()
        self.busy = False
        self.propagating = 0
        self.drop = spec.loss.dropper(index)
        self.stats = PathStats()

    @property
    def depth(self) -> int:
        # the packet being serialized stays at the head of the queue
        return len(self.queue)


class _Run:
    def __init__(self, config: SimConfig) -> None:
        self.cfg = config
        self.now = 0
        self.events: list = []
        self.order = itertools.count()
        self.links = [_Link(i, spec) for i, spec in enumerate(config.paths)]
        self.segment = 0
        self.profile = config.schedule.profile(0)
        self.cursor = ResidualCursor()
        self.spray = config.spray.build(config.ell)
        self.dest = Destination()
        self.msg = config.message
        self.emitted = 0
        self.delivered = 0
        self.pending_feedback = 0
        self.completion: int | None = None
        self.rate = 0
        self.anchor = 0
        self.since_anchor = 0
        self.last_emit: int | None = None
        self.emit_gen = 0
        self.window = [PathFeedback() for _ in self.links]
        self.history: list[dict] = []
        self.feedback_log: list[dict] = []
        self.adapt_log: list[dict] = []
        self.trace: list[tuple] = []

    def push(self, time: int, kind: str, payload=None) -> None:
        heapq.heappush(self.events, (time, next(self.order), kind, payload))

    def record(self, event: str, h: PacketHeader) -> None:
        if self.cfg.trace:
            self.trace.append((self.now, event, h.path_id, h.path_seq, h.flow_seq, int(h.ecn)))

    def note_profile(self, reason: str) -> None:
        self.history.append(
            {"time_us": self.now, "reason": reason, "counts": list(self.profile.b), "cursor": self.cursor.r}
        )

    # pacing

    def retime(self) -> None:
        rate = sender_send_rate(self.cfg.paths, self.profile, self.cfg.send_rate)
        if rate == self.rate:
            return
        self.rate = rate
        if self.emitted >= self.msg.send_budget:
            return
        start = self.now
        if self.last_emit is not None:
            start = max(start, self.last_emit + serialization_us(self.msg.packet_bits, rate))
        self.anchor, self.since_anchor = start, 0
        self.emit_gen += 1
        self.push(start, "emit", self.emit_gen)

    def on_emit(self, gen: int) -> None:
        if gen != self.emit_gen or self.emitted >= self.msg.send_budget:
            return
        d = self.spray.next_path(self.profile)
        h = PacketHeader(d.path, d.path_seq, d.j, False, self.now)
        self.emitted += 1
        self.last_emit = self.now
        self.since_anchor += 1
        link = self.links[d.path]
        link.stats.sent += 1
        self.record("send", h)
        self.enqueue(link, h)
        if self.emitted < self.msg.send_budget:
            offset = -(-self.since_anchor * self.msg.packet_bits * 10**6 // self.rate)
            self.push(self.anchor + offset, "emit", gen)

    # links

    def enqueue(self, link: _Link, h: PacketHeader) -> None:
        depth = link.depth
        if depth >= link.spec.queue_capacity:
            link.stats.dropped_queue += 1
            self.record("drop_queue", h)
            return
        if depth >= link.spec.ecn_threshold:
            h = replace(h, ecn=True)
            link.stats.ecn += 1
        link.queue.append(h)
        link.stats.max_queue = max(link.stats.max_queue, link.depth)
        if not link.busy:
            self.start_service(link)

    def start_service(self, link: _Link) -> None:
        link.busy = True
        h = link.queue[0]
        self.push(self.now + serialization_us(self.msg.packet_bits, link.spec.bandwidth_bps), "depart", link.index)
        self.record("transmit", h)

    def on_depart(self, index: int) -> None:
        link = self.links[index]
        h = link.queue.popleft()
        link.busy = False
        if link.drop(h.path_seq):
            link.stats.dropped_loss += 1
            self.record("loss", h)
        else:
            link.propagating += 1
            self.push(self.now + link.spec.latency_us, "arrive", h)
        if link.queue:
            self.start_service(link)

    # destination and feedback

    def on_arrive(self, h: PacketHeader) -> None:
        link = self.links[h.path_id]
        link.propagating -= 1
        link.stats.delivered += 1
        self.delivered += 1
        self.record("arrive", h)
        fb = self.dest.receive(h, self.now)
        if self.delivered >= self.msg.required_count:
            self.completion = self.now
            return
        delay = self.cfg.feedback_delay_us
        if delay is None:
            delay = link.spec.latency_us
        self.pending_feedback += 1
        self.push(self.now + delay, "feedback", fb)

    def on_feedback(self, fb: FeedbackRecord) -> None:
        self.pending_feedback -= 1
        rtt = self.now - fb.sent_at
        entry = fb.to_json()
        entry["rtt_us"] = rtt
        entry["time_us"] = self.now
        self.feedback_log.append(entry)
        acc = self.window[fb.path_id]
        acc.packets += 1
        acc.ecn_marks += fb.ecn
        acc.losses += len(fb.gaps)
        acc.rtt_samples.append(rtt)

    # adaptation

    def busy(self) -> bool:
        if self.emitted < self.msg.send_budget or self.pending_feedback:
            return True
        return any(link.depth or link.propagating for link in self.links)

    def on_window(self) -> None:
        adapt = self.cfg.adapt
        alphas = feedback_to_alpha(self.window, adapt.policy)
        before = list(self.profile.b)
        entry = {"time_us": self.now, "alpha": [str(a) for a in alphas]}
        if adapt.strategy == "whack":
            entry["removed"] = whack_many(self.profile, self.cursor, alphas)
        else:
            entry["objective_before"] = str(severity_objective(self.profile, alphas))
            entry["applied"] = rebalance_step(self.profile, self.cursor, alphas, adapt.budget)
            entry["objective_after"] = str(severity_objective(self.profile, alphas))
        self.adapt_log.append(entry)
        if self.profile.b != before:
            self.note_profile("adapt")
            self.retime()
        self.window = [PathFeedback() for _ in self.links]
        if self.busy():
            self.push(self.now + adapt.window_us, "window")

    def on_segment(self, k: int) -> None:
        self.segment = k
        self.profile = self.cfg.schedule.profile(k)
        self.note_profile("schedule")
        self.retime()

    def run(self) -> CompletionReport:
        self.note_profile("schedule")
        for k, (start, _) in enumerate(self.cfg.schedule.segments[1:], start=1):
            self.push(start, "segment", k)
        if self.cfg.adapt:
            self.push(self.cfg.adapt.window_us, "window")
        self.retime()
        handlers = {
            "emit": self.on_emit,
            "depart": self.on_depart,
            "arrive": self.on_arrive,
            "feedback": self.on_feedback,
            "segment": self.on_segment,
            "window": lambda _: self.on_window(),
        }
        timed_out = True
        while self.events:
            time, _, kind, payload = heapq.heappop(self.events)
            if time > self.cfg.timeout_us:
                break
            self.now = time
            handlers[kind](payload)
            if self.completion is not None:
                timed_out = False
                break
        for link in self.links:
            link.stats.in_flight = link.depth + link.propagating
        return CompletionReport(
            self.completion,
            timed_out,
            self.emitted,
            [link.stats for link in self.links],
            self.history,
            self.feedback_log,
            self.adapt_log,
            [
                {"j": c.j, "old": [c.old.sa, c.old.sb], "new": [c.new.sa, c.new.sb]}
                for c in self.spray.seed_log
            ],
            self.trace,
        )


def run_sim(config: SimConfig) -> CompletionReport:
    return _Run(config).run()


def profile_for_fractions(fracs: Sequence[Fraction], m: int = 1024) -> list[int]:
    """Round a fractional profile to ``m`` balls by largest remainder."""
    raw = [Fraction(f) * m for f in fracs]
    b = [int(x) for x in raw]
    order = sorted(range(len(b)), key=lambda i: (-(raw[i] - b[i]), i))
    for i in order[: m - sum(b)]:
        b[i] += 1
    return b
