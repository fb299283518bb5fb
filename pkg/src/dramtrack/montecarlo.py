"""Seeded Monte Carlo simulation of tracker/pattern encounters.

run_trial plays one refresh window against a single bank: pattern
activations disturb both neighbors, tracker mitigations refresh the rows at
the decided distance (and those refreshes disturb their own neighbors,
which is what makes distance-two escalation possible), and failure means a
watched row's disturbance count reaches the threshold at a refresh
boundary. Mitigation within the same interval as the crossing counts as
in time, matching the closed-form run recurrence.

Damage bookkeeping scope is configurable: "victims" watches only the rows
adjacent to the pattern's aggressors (the quantity the analytics model),
"all" watches every row including aggressors, which accumulate disturbance
from the very mitigations that protect their neighbors.

estimate() aggregates trials into a window failure fraction and a mean
count of failing rows. Slot-sampling configurations with a timely schedule
and no auto-refresh use a vectorized path: the tracker's per-interval slot
draw is simulated directly and failures are detected as runs of
non-selecting draws. Both paths are deterministic in the seed; the
vectorized path works in fixed-size trial blocks each seeded from
seed XOR block_start so results are independent of scheduling.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from .attacks import PatternSpec, build_pattern
from .dram import REFI_PER_WINDOW, RefreshSchedule
from .trackers import DmqTracker, TrackerSpec, build_tracker

AUTO_REFRESH_MODES = ("off", "uniform")
WATCH_SCOPES = ("victims", "all")

_ENV_SEED_MIX = 0x9E3779B97F4A7C15  # decouples environment draws from tracker draws
_VECTOR_BLOCK = 16384


@dataclass(frozen=True)
class TrialConfig:
    tracker: TrackerSpec
    pattern: PatternSpec
    trh: int
    max_act: int = 73
    n_refi: int = REFI_PER_WINDOW
    schedule: str = "timely"
    auto_refresh: str = "off"
    watch: str = "victims"

    def __post_init__(self):
        if self.trh < 1:
            raise ValueError(f"trh must be >= 1, got {self.trh}")
        if self.max_act < 1:
            raise ValueError(f"max_act must be >= 1, got {self.max_act}")
        if self.n_refi < 1:
            raise ValueError(f"n_refi must be >= 1, got {self.n_refi}")
        if self.auto_refresh not in AUTO_REFRESH_MODES:
            raise ValueError(f"auto_refresh must be one of {AUTO_REFRESH_MODES}")
        if self.watch not in WATCH_SCOPES:
            raise ValueError(f"watch must be one of {WATCH_SCOPES}")
        RefreshSchedule(self.schedule)  # validates the mode name


@dataclass(frozen=True)
class FailureReport:
    failed: bool
    failed_rows: int
    first_failure_interval: int | None
    peak_damage: int
    mitigations: int
    max_queued_row_acts: int | None


def run_trial(config: TrialConfig, seed: int, early_exit: bool = False) -> FailureReport:
    """Simulate one window; deterministic in (config, seed)."""
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    rng = random.Random(seed)
    env = random.Random(seed ^ _ENV_SEED_MIX)
    tracker = build_tracker(config.tracker, config.max_act, rng)
    pattern = build_pattern(config.pattern, config.max_act, config.n_refi)
    schedule = RefreshSchedule(config.schedule)

    watch_set = None
    if config.watch == "victims":
        watch_set = set()
        for row in pattern.aggressors:
            watch_set.add(row - 1)
            watch_set.add(row + 1)

    damage = {}
    hot = set()
    auto_slots = {}  # interval -> rows auto-refreshed there
    auto_assigned = set()
    failed_rows = set()
    first_failure = None
    peak = 0
    mitigations = 0

    def bump(row):
        nonlocal peak
        value = damage.get(row, 0)
        if config.auto_refresh == "uniform" and row not in auto_assigned:
            # One auto-refresh per row per window, at a uniform position.
            auto_assigned.add(row)
            auto_slots.setdefault(env.randrange(config.n_refi), []).append(row)
        value += 1
        damage[row] = value
        if watch_set is None or row in watch_set:
            if value > peak:
                peak = value
            if value >= config.trh:
                hot.add(row)

    def reset(row):
        damage[row] = 0
        hot.discard(row)

    def mitigate(decision):
        nonlocal mitigations
        if decision is None:
            return
        mitigations += 1
        distance = decision.transitive_distance
        for victim in (decision.row - distance, decision.row + distance):
            reset(victim)
            tracker.observe_victim_refresh(victim)
            bump(victim - 1)
            bump(victim + 1)
        pattern.observe_mitigation(decision)

    for interval in range(config.n_refi):
        for row in pattern.acts(interval):
            bump(row - 1)
            bump(row + 1)
            mitigate(tracker.observe_activation(row, rng))
        for _ in range(schedule.refs_at(interval)):
            mitigate(tracker.on_refresh(rng))
        for row in auto_slots.pop(interval, ()):
            if damage.get(row, 0) > 0:
                reset(row)
        if hot:
            failed_rows |= hot
            if first_failure is None:
                first_failure = interval
            if early_exit:
                break

    queued = tracker.max_queued_row_acts if isinstance(tracker, DmqTracker) else None
    return FailureReport(
        failed=bool(failed_rows),
        failed_rows=len(failed_rows),
        first_failure_interval=first_failure,
        peak_damage=peak,
        mitigations=mitigations,
        max_queued_row_acts=queued,
    )


@dataclass(frozen=True)
class MCEstimate:
    trials: int
    p_fail: float
    p_fail_stderr: float
    mean_failed_rows: float
    rows_stderr: float
    method: str


def _vector_supported(config: TrialConfig) -> bool:
    t, p = config.tracker, config.pattern
    if t.kind != "mint" or t.rfm_th is not None or t.dmq:
        return False
    if config.schedule != "timely" or config.auto_refresh != "off":
        return False
    if config.watch != "victims":
        return False
    if p.kind == "p1":
        return True
    if p.kind == "p2":
        return p.k <= config.max_act
    if p.kind == "p3":
        return p.k * p.c <= config.max_act
    return False


def _slot_ranges(config: TrialConfig):
    """Occupied slot index range per row, 1-based, matching gen_static order."""
    p = config.pattern
    if p.kind == "p1":
        return [(1, 1)]
    if p.kind == "p2":
        return [(j, j) for j in range(1, p.k + 1)]
    return [((j - 1) * p.c + 1, j * p.c) for j in range(1, p.k + 1)]


def _vector_block_counts(config: TrialConfig, seed: int, block_start: int, n_trials: int):
    rng = np.random.default_rng(seed ^ block_start)
    low = 0 if config.tracker.transitive else 1
    san = rng.integers(low, config.max_act, size=(n_trials, config.n_refi),
                       dtype=np.int16, endpoint=True)
    copies = config.pattern.c if config.pattern.kind == "p3" else 1
    needed = -(-config.trh // copies)
    idx = np.arange(config.n_refi, dtype=np.int32)
    failed_rows = np.zeros(n_trials, dtype=np.int32)
    for lo_slot, hi_slot in _slot_ranges(config):
        selected = (san >= lo_slot) & (san <= hi_slot)
        last = np.where(selected, idx, np.int32(-1))
        np.maximum.accumulate(last, axis=1, out=last)
        run = idx - last  # consecutive non-selecting draws ending here
        failed_rows += (run >= needed).any(axis=1)
    return failed_rows


def resolve_method(config: TrialConfig, method: str = "auto") -> str:
    if method not in ("auto", "object", "vector"):
        raise ValueError(f"method must be auto, object or vector, got {method!r}")
    if method == "vector" and not _vector_supported(config):
        raise ValueError("vectorized path does not support this configuration")
    if method == "auto":
        return "vector" if _vector_supported(config) else "object"
    return method


def failed_row_counts(config: TrialConfig, seed: int, start: int, stop: int,
                      method: str) -> np.ndarray:
    """Per-trial failing-row counts for trial indices [start, stop).

    Trial i depends only on (config, seed, i), so disjoint ranges computed
    anywhere concatenate to the serial result. The vectorized path requires
    start to sit on a block boundary so block seeding is position-stable.
    """
    if not 0 <= start <= stop:
        raise ValueError(f"need 0 <= start <= stop, got {start}, {stop}")
    if method == "vector":
        if start % _VECTOR_BLOCK != 0:
            raise ValueError(f"vector ranges must start at multiples of {_VECTOR_BLOCK}")
        counts = np.empty(stop - start, dtype=np.int32)
        cursor = start
        while cursor < stop:
            n = min(_VECTOR_BLOCK, stop - cursor)
            counts[cursor - start:cursor - start + n] = _vector_block_counts(
                config, seed, cursor, n)
            cursor += n
        return counts
    return np.array(
        [run_trial(config, seed ^ i).failed_rows for i in range(start, stop)],
        dtype=np.int32,
    )


def summarize(counts: np.ndarray, method: str) -> MCEstimate:
    trials = int(counts.size)
    fails = counts > 0
    p_fail = float(fails.mean())
    p_stderr = math.sqrt(p_fail * (1.0 - p_fail) / trials)
    mean_rows = float(counts.mean())
    rows_stderr = float(counts.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return MCEstimate(trials, p_fail, p_stderr, mean_rows, rows_stderr, method)


def estimate(config: TrialConfig, trials: int, seed: int, method: str = "auto") -> MCEstimate:
    """Failure fraction and mean failing-row count over seeded trials."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    label = resolve_method(config, method)
    counts = failed_row_counts(config, seed, 0, trials, label)
    return summarize(counts, label)


def estimate_p_refw(config: TrialConfig, trials: int, seed: int,
                    method: str = "auto") -> MCEstimate:
    """Alias for estimate(); the failure fraction is the per-window rate."""
    return estimate(config, trials, seed, method)


def random_ref_schedule(rng: random.Random, n_refi: int, postpone_limit: int = 4):
    """Per-interval REF counts for a random valid postponement schedule.

    Each interval adds one owed REF; the scheduler issues between
    max(0, owed - postpone_limit) and owed of them, so the debt never
    exceeds the postponement limit.
    """
    counts = []
    owed = 0
    for _ in range(n_refi):
        owed += 1
        lo = max(0, owed - postpone_limit)
        issued = rng.randint(lo, owed)
        counts.append(issued)
        owed -= issued
    return counts
