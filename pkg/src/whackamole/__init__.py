"""Deterministic multipath packet spraying with discrete path profiles."""

from whackamole.profile import PathProfile, fractions, profile_from_counts, select_path
from whackamole.spray import Method, RotationPolicy, SpraySeed, SprayState, bit_reverse, selection_point

__all__ = [
    "Method",
    "PathProfile",
    "RotationPolicy",
    "SpraySeed",
    "SprayState",
    "bit_reverse",
    "fractions",
    "profile_from_counts",
    "select_path",
    "selection_point",
]
