"""DDR timing model and derived per-bank parameters.

All timings are integer nanoseconds. The derived quantity MaxACT (activation
slots per refresh interval) is computed with exact rational arithmetic and
rounded under an explicit policy, because downstream threshold results are
sensitive to off-by-one slot counts:

    MaxACT = (tREFI - tRFC) / tRC

With DDR5 defaults (3900 - 410) / 48 = 72.71, rounding to 73 slots. The
number of refresh intervals per refresh window is fixed at 8192 by design
(the 32 ms window is modeled as 8192 equal intervals rather than the raw
32ms/3.9us = 8205.1).

Refresh schedules are sequences of REF epochs at interval boundaries. The
timely schedule issues one REF per interval. The max-postponed schedule
defers up to `postpone_limit` REFs (DDR5 allows at most 4) and then issues
them back to back, so the gap pattern repeats as L+1 intervals followed by
L zero-gap REFs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

REFI_PER_WINDOW = 8192
ROW_ADDRESS_BITS = 18
MAX_POSTPONE = 4

ROUNDINGS = ("floor", "ceil", "nearest")
SCHEDULE_MODES = ("timely", "max_postponed")


@dataclass(frozen=True)
class DramTimings:
    """Integer-nanosecond bank timings. tRFC < tREFI < tREFW required."""

    t_refw: int = 32_000_000
    t_refi: int = 3900
    t_rfc: int = 410
    t_rc: int = 48

    def __post_init__(self):
        for name in ("t_refw", "t_refi", "t_rfc", "t_rc"):
            value = getattr(self, name)
            if not isinstance(value, int) or value <= 0:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if not self.t_rfc < self.t_refi < self.t_refw:
            raise ValueError(
                "timing order violated: need t_rfc < t_refi < t_refw, got "
                f"{self.t_rfc} / {self.t_refi} / {self.t_refw}"
            )


@dataclass(frozen=True)
class DerivedParams:
    """Slot counts derived from timings; max_act_real keeps the exact ratio."""

    max_act_real: Fraction
    max_act: int
    refi_per_window: int

    def __post_init__(self):
        if self.max_act < 1:
            raise ValueError(f"max_act must be >= 1, got {self.max_act}")
        if self.refi_per_window < 1:
            raise ValueError(f"refi_per_window must be >= 1, got {self.refi_per_window}")


def round_fraction(value: Fraction, rounding: str) -> int:
    if rounding == "floor":
        return value.numerator // value.denominator
    if rounding == "ceil":
        return -((-value.numerator) // value.denominator)
    if rounding == "nearest":
        # Half-up: floor(x + 1/2). Only matters at exact .5 boundaries.
        shifted = value + Fraction(1, 2)
        return shifted.numerator // shifted.denominator
    raise ValueError(f"rounding must be one of {ROUNDINGS}, got {rounding!r}")


def derive_params(
    timings: DramTimings,
    rounding: str = "nearest",
    refi_per_window: int = REFI_PER_WINDOW,
) -> DerivedParams:
    """Compute activation slots per refresh interval from timings.

    The exact value (tREFI - tRFC) / tRC is retained as a Fraction; the
    integer slot count follows the requested rounding policy. Raises
    ValueError if the budget is below one slot.
    """
    real = Fraction(timings.t_refi - timings.t_rfc, timings.t_rc)
    max_act = round_fraction(real, rounding)
    if max_act < 1:
        raise ValueError(f"activation budget below one slot: {real} -> {max_act}")
    return DerivedParams(max_act_real=real, max_act=max_act, refi_per_window=refi_per_window)


@dataclass(frozen=True)
class RefreshSchedule:
    """REF epoch pattern. postpone_limit defaults to the mode's natural value
    (0 for timely, the architectural maximum for max_postponed)."""

    mode: str = "timely"
    postpone_limit: int | None = None

    def __post_init__(self):
        if self.mode not in SCHEDULE_MODES:
            raise ValueError(f"mode must be one of {SCHEDULE_MODES}, got {self.mode!r}")
        if self.postpone_limit is None:
            object.__setattr__(
                self, "postpone_limit", 0 if self.mode == "timely" else MAX_POSTPONE
            )
        if self.mode == "timely":
            if self.postpone_limit != 0:
                raise ValueError("timely schedule cannot postpone refreshes")
        elif not 1 <= self.postpone_limit <= MAX_POSTPONE:
            raise ValueError(
                f"postpone_limit must be in 1..{MAX_POSTPONE}, got {self.postpone_limit}"
            )

    def refs_at(self, interval_index: int) -> int:
        """Number of REFs issued at the boundary closing `interval_index`."""
        if self.mode == "timely" or self.postpone_limit == 0:
            return 1
        batch = self.postpone_limit + 1
        # Gaps of `batch` intervals, then `batch` REFs back to back.
        return batch if interval_index % batch == batch - 1 else 0

    def gaps(self, n_refs: int) -> list[int]:
        """Intervals elapsed since the previous REF, for the first n_refs REFs."""
        if self.mode == "timely" or self.postpone_limit == 0:
            return [1] * n_refs
        batch = self.postpone_limit + 1
        out = []
        while len(out) < n_refs:
            out.append(batch)
            out.extend([0] * (batch - 1))
        return out[:n_refs]


def activation_budget(schedule: RefreshSchedule, max_act: int) -> int:
    """Worst-case activations between two consecutive executed REFs."""
    if max_act < 1:
        raise ValueError(f"max_act must be >= 1, got {max_act}")
    if schedule.mode == "timely":
        return max_act
    return (schedule.postpone_limit + 1) * max_act


def check_row(row: int) -> int:
    """Validate an 18-bit row address."""
    if not isinstance(row, int) or not 0 <= row < (1 << ROW_ADDRESS_BITS):
        raise ValueError(f"row address out of range: {row!r}")
    return row
