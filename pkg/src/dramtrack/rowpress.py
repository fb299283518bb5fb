"""Open-time weighted activation counting (Row-Press hardening).

Long row-open times disturb neighbors more than a plain activation, so the
slot tracker counts each open as a fixed-point weight instead of 1: an open
of t_on + t_pre nanoseconds weighs round(128 * (t_on + t_pre) / t_rc)
in 1/128 units (ties to even, computed on exact rationals). A minimal
open weighs exactly 128, one slot.

MintRowPressState keeps the slot sampler untouched but compares the weight
accumulator against the sampled slot boundary san * 128, capturing the open
that crosses it. With all-minimal opens the accumulator is always a
multiple of 128 and the state machine is bit-for-bit the plain tracker,
including the random stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .dram import DramTimings
from .errors import ContractViolationError
from .trackers import MintState

FIXED_POINT_ONE = 128
CAN_RAW_BITS = 14
CAN_RAW_MAX = (1 << CAN_RAW_BITS) - 1


def eact(t_on, t_pre, t_rc=DramTimings().t_rc) -> int:
    """Fixed-point activation weight of one open, in 1/128 units."""
    t_on, t_pre, t_rc = Fraction(t_on), Fraction(t_pre), Fraction(t_rc)
    if t_on <= 0 or t_pre <= 0 or t_rc <= 0:
        raise ValueError("open, precharge and cycle times must be positive")
    return round(FIXED_POINT_ONE * (t_on + t_pre) / t_rc)


@dataclass(frozen=True)
class OpenEvent:
    """One row open: address plus open and precharge durations in ns."""

    row: int
    t_on: int
    t_pre: int

    def weight(self, t_rc=DramTimings().t_rc) -> int:
        return eact(self.t_on, self.t_pre, t_rc)


class MintRowPressState(MintState):
    """Slot sampler with a 14-bit fixed-point activation accumulator.

    The slot draw is unchanged; a capture happens on the open whose weight
    crosses the sampled boundary. 14 bits suffice because the largest
    boundary is 127 * 128.
    """

    def __init__(self, max_act, transitive=False, *, rng=None, san=None):
        super().__init__(max_act, transitive=transitive, rng=rng, san=san)
        self.can_raw = 0

    def observe_open(self, row, weight, rng):
        if weight < 1:
            raise ValueError(f"weight must be >= 1, got {weight}")
        previous = self.can_raw
        # The register saturates; every reachable boundary is below the cap.
        self.can_raw = min(previous + weight, CAN_RAW_MAX)
        boundary = self.san * FIXED_POINT_ONE
        if self.san >= 1 and previous < boundary <= self.can_raw:
            self.sar = row
            self.distance = 1
        return None

    def observe_activation(self, row, rng):
        return self.observe_open(row, FIXED_POINT_ONE, rng)

    def on_refresh(self, rng):
        decision = super().on_refresh(rng)
        self.can_raw = 0
        return decision


def mint_rowpress_cycle(state: MintRowPressState, opens, rng, t_rc=DramTimings().t_rc):
    """One interval of opens followed by the refresh selection."""
    total = 0
    budget = state.max_act * FIXED_POINT_ONE
    for event in opens:
        weight = event.weight(t_rc)
        total += weight
        if total > budget:
            raise ContractViolationError(
                "interval open time exceeds the activation budget"
            )
        state.observe_open(event.row, weight, rng)
    return state.on_refresh(rng)
