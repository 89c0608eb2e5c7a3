"""Event-driven simulation of one source spraying a message over several paths."""

from whackamole.sim.config import (
    AdaptConfig,
    ConfigError,
    LossPattern,
    MessageSpec,
    PathSpec,
    ProfileSchedule,
    SendRate,
    SimConfig,
    SprayConfig,
)
from whackamole.sim.engine import (
    CompletionReport,
    FeedbackRecord,
    PacketHeader,
    destination_feedback,
    run_sim,
    sender_send_rate,
    serialization_us,
)

__all__ = [
    "AdaptConfig",
    "CompletionReport",
    "ConfigError",
    "FeedbackRecord",
    "LossPattern",
    "MessageSpec",
    "PacketHeader",
    "PathSpec",
    "ProfileSchedule",
    "SendRate",
    "SimConfig",
    "SprayConfig",
    "destination_feedback",
    "run_sim",
    "sender_send_rate",
    "serialization_us",
]
