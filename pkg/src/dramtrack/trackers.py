"""Per-bank activation-tracker state machines.

Every tracker follows one protocol:

    observe_activation(row, rng) -> MitigationDecision | None
    on_refresh(rng) -> MitigationDecision | None

observe_activation is called once per activation in slot order within a
refresh interval; on_refresh is called at each executed REF and returns at
most one mitigation decision, so a bank never mitigates more than one row
per REF. Plain trackers never return a decision from observe_activation;
only the RFM wrapper does (its mitigation opportunities fall mid-interval).

Tracker kinds:

- MintState: one future activation slot is selected uniformly per interval
  (register SAN), a 7-bit activation counter (CAN) walks the slots, and the
  row occupying the selected slot is latched (register SAR) and mitigated at
  the next REF. With the transitive slot enabled the draw includes slot 0,
  which keeps the previous SAR for one more interval and bumps the
  mitigation distance, refreshing victims-of-victims.
- InDramParaState: samples each activation with fixed probability. The
  overwrite variant keeps the last sample of the interval, the no-overwrite
  variant keeps the first.
- ParfmState: buffers every activation of the interval (up to the slot
  budget) and mitigates a uniformly random buffered entry at REF.
- PrctState: one counter per row; at REF mitigates the highest counter
  (ties: lowest address) and forgets it. Sees victim refreshes.
- MisraGriesState: bounded counter summary with the classic global decrement
  on overflow; at REF the largest entry is mitigated and reduced by the
  current minimum count. Sees victim refreshes.

Wrappers:

- DmqTracker: delayed-mitigation queue for postponed-refresh schedules. The
  activation that pushes the interval count past the slot budget triggers a
  pseudo-mitigation: the inner tracker runs its REF-time selection and the
  decision is queued (capacity 4) instead of executed. At a real REF the
  oldest queued entry is executed if one exists.
- RfmTracker: counts activations (RAA) and hands the inner tracker a
  mitigation opportunity every rfm_th activations. REF epochs do not
  mitigate; the inner tracker's interval is the RFM window.

MINT and PARFM are built for a fixed number of slots per interval, so under
postponed refresh any activation beyond the budget is invisible to them
(CAN saturates, the buffer is full). Samplers and counter trackers have no
slot structure and observe everything.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .dram import check_row
from .errors import ContractViolationError

TRACKER_KINDS = ("mint", "para", "para_no_overwrite", "parfm", "prct", "misra_gries")

CAN_BITS = 7
DMQ_CAPACITY = 4


@dataclass(frozen=True)
class MitigationDecision:
    """Row to mitigate and the neighbor distance its refresh targets."""

    row: int
    transitive_distance: int = 1

    def __post_init__(self):
        check_row(self.row)
        if self.transitive_distance < 1:
            raise ValueError(f"transitive_distance must be >= 1, got {self.transitive_distance}")


@dataclass(frozen=True)
class TrackerSpec:
    """Configuration bundle used by analytics, simulation, and the CLI."""

    kind: str = "mint"
    transitive: bool = True
    entries: int | None = None
    rfm_th: int | None = None
    dmq: bool = False

    def __post_init__(self):
        if self.kind not in TRACKER_KINDS:
            raise ValueError(f"tracker kind must be one of {TRACKER_KINDS}, got {self.kind!r}")
        if self.kind == "misra_gries" and (self.entries is None or self.entries < 1):
            raise ValueError("misra_gries requires entries >= 1")
        if self.rfm_th is not None and self.rfm_th < 1:
            raise ValueError(f"rfm_th must be >= 1, got {self.rfm_th}")
        if self.rfm_th is not None and self.dmq:
            raise ValueError("rfm and dmq wrappers cannot be combined")

    def label(self) -> str:
        parts = [self.kind]
        if self.kind == "mint" and not self.transitive:
            parts.append("no_transitive")
        if self.entries is not None:
            parts.append(f"e{self.entries}")
        if self.rfm_th is not None:
            parts.append(f"rfm{self.rfm_th}")
        if self.dmq:
            parts.append("dmq")
        return "-".join(parts)


class MintState:
    """Future-slot selecting tracker with a single mitigation register."""

    def __init__(self, max_act, transitive=False, *, rng=None, san=None):
        if not 1 <= max_act <= (1 << CAN_BITS) - 1:
            raise ValueError(f"max_act must fit the {CAN_BITS}-bit counter, got {max_act}")
        self.max_act = max_act
        self.transitive = bool(transitive)
        self.can = 0
        self.sar = None
        self.distance = 1
        if san is None:
            if rng is None:
                raise ValueError("provide rng (or an explicit san) for the initial slot draw")
            san = self._draw_san(rng)
        self._check_san(san)
        self.san = san

    def _check_san(self, san):
        lo = 0 if self.transitive else 1
        if not lo <= san <= self.max_act:
            raise ValueError(f"san must be in {lo}..{self.max_act}, got {san}")

    def _draw_san(self, rng):
        # randint rejection-samples getrandbits, so the draw is unbiased.
        return rng.randint(0 if self.transitive else 1, self.max_act)

    def observe_activation(self, row, rng):
        if self.can >= self.max_act:
            return None  # beyond the slot budget: invisible to the tracker
        self.can += 1
        if self.can == self.san:
            self.sar = row
            self.distance = 1
        return None

    def observe_victim_refresh(self, row):
        return None  # victim refreshes bypass the activation slots

    def on_refresh(self, rng):
        decision = None
        if self.sar is not None:
            decision = MitigationDecision(self.sar, self.distance)
        self.san = self._draw_san(rng)
        if self.san == 0:
            # Transitive slot: keep SAR for one more interval, aim one row
            # further out. Consecutive zero draws stack recursively.
            if self.sar is not None:
                self.distance += 1
        else:
            self.sar = None
            self.distance = 1
        self.can = 0
        return decision


class InDramParaState:
    """Per-activation sampling tracker holding one candidate row."""

    def __init__(self, p, overwrite=True):
        p = Fraction(p)
        if not 0 < p <= 1:
            raise ValueError(f"sampling probability must be in (0, 1], got {p}")
        self.p = p
        self.overwrite = bool(overwrite)
        self.sar = None

    def observe_activation(self, row, rng):
        # Exact rational Bernoulli draw, no float rounding.
        if rng.randrange(self.p.denominator) < self.p.numerator:
            if self.overwrite or self.sar is None:
                self.sar = row
        return None

    def observe_victim_refresh(self, row):
        return None

    def on_refresh(self, rng):
        decision = None
        if self.sar is not None:
            decision = MitigationDecision(self.sar)
        self.sar = None
        return decision


class ParfmState:
    """Buffers the interval's activations, mitigates a uniform random one."""

    def __init__(self, max_act):
        if max_act < 1:
            raise ValueError(f"max_act must be >= 1, got {max_act}")
        self.max_act = max_act
        self.buffer = []

    def observe_activation(self, row, rng):
        if len(self.buffer) < self.max_act:
            self.buffer.append(row)
        return None

    def observe_victim_refresh(self, row):
        return None

    def on_refresh(self, rng):
        decision = None
        if self.buffer:
            decision = MitigationDecision(self.buffer[rng.randrange(len(self.buffer))])
        self.buffer.clear()
        return decision


class PrctState:
    """Ideal per-row counter table; mitigates the maximum every REF."""

    def __init__(self):
        self.counters = {}

    def observe_activation(self, row, rng=None):
        self.counters[row] = self.counters.get(row, 0) + 1
        return None

    def observe_victim_refresh(self, row):
        # A refresh activates the row internally, so the counter sees it.
        self.observe_activation(row)
        return None

    def on_refresh(self, rng):
        if not self.counters:
            return None
        row, _ = min(self.counters.items(), key=lambda kv: (-kv[1], kv[0]))
        del self.counters[row]
        return MitigationDecision(row)


class MisraGriesState:
    """Bounded counter summary with global decrement on overflow."""

    def __init__(self, entries):
        if entries < 1:
            raise ValueError(f"entries must be >= 1, got {entries}")
        self.capacity = entries
        self.entries = {}

    def observe_activation(self, row, rng=None):
        if row in self.entries:
            self.entries[row] += 1
        elif len(self.entries) < self.capacity:
            self.entries[row] = 1
        else:
            # Summary full: decrement everyone, drop expired entries. The new
            # row is not inserted.
            for key in list(self.entries):
                self.entries[key] -= 1
                if self.entries[key] == 0:
                    del self.entries[key]
        return None

    def observe_victim_refresh(self, row):
        self.observe_activation(row)
        return None

    def on_refresh(self, rng):
        if not self.entries:
            return None
        row, count = min(self.entries.items(), key=lambda kv: (-kv[1], kv[0]))
        reduction = min(self.entries.values())
        self.entries[row] = count - reduction
        if self.entries[row] == 0:
            del self.entries[row]
        return MitigationDecision(row)


class _DmqEntry:
    __slots__ = ("decision", "wait_acts")

    def __init__(self, decision):
        self.decision = decision
        self.wait_acts = 0


class DmqTracker:
    """Delayed-mitigation queue around a slot-structured tracker.

    num_acts counts activations since the last REF. When it exceeds the slot
    budget the count restarts at 1 and the inner tracker performs its
    selection cycle; the decision waits in a 4-entry FIFO until a real REF
    executes it. max_queued_row_acts records the worst observed number of
    activations a queued row received before its mitigation ran (bounded by
    4 * max_act = 292 at DDR5 defaults).
    """

    def __init__(self, inner, max_act, capacity=DMQ_CAPACITY):
        if max_act < 1:
            raise ValueError(f"max_act must be >= 1, got {max_act}")
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.inner = inner
        self.max_act = max_act
        self.capacity = capacity
        self.queue = deque()
        self.num_acts = 0
        self.max_queued_row_acts = 0

    def observe_activation(self, row, rng):
        self.num_acts += 1
        if self.num_acts > self.max_act:
            self.num_acts = 1
            pseudo = self.inner.on_refresh(rng)
            if pseudo is not None:
                if len(self.queue) >= self.capacity:
                    raise ContractViolationError(
                        "delayed-mitigation queue overflow: schedule postponed too far"
                    )
                self.queue.append(_DmqEntry(pseudo))
        inner_decision = self.inner.observe_activation(row, rng)
        if inner_decision is not None:
            raise ContractViolationError("dmq cannot wrap a mid-interval mitigating tracker")
        for entry in self.queue:
            if entry.decision.row == row:
                entry.wait_acts += 1
        return None

    def observe_victim_refresh(self, row):
        self.inner.observe_victim_refresh(row)
        return None

    def on_refresh(self, rng):
        self.num_acts = 0
        fresh = self.inner.on_refresh(rng)
        if self.queue:
            entry = self.queue.popleft()
            if entry.wait_acts > self.max_queued_row_acts:
                self.max_queued_row_acts = entry.wait_acts
            return entry.decision
        return fresh


class RfmTracker:
    """Activation-count triggered mitigation (RAA counter, threshold rfm_th)."""

    def __init__(self, inner, rfm_th):
        if rfm_th < 1:
            raise ValueError(f"rfm_th must be >= 1, got {rfm_th}")
        self.inner = inner
        self.rfm_th = rfm_th
        self.raa = 0

    def observe_activation(self, row, rng):
        inner_decision = self.inner.observe_activation(row, rng)
        if inner_decision is not None:
            raise ContractViolationError("rfm cannot wrap a mid-interval mitigating tracker")
        self.raa += 1
        if self.raa >= self.rfm_th:
            self.raa = 0
            return self.inner.on_refresh(rng)
        return None

    def observe_victim_refresh(self, row):
        self.inner.observe_victim_refresh(row)
        return None

    def on_refresh(self, rng):
        # Mitigation opportunities come from the RAA counter, not REF epochs.
        return None


def build_tracker(spec: TrackerSpec, max_act: int, rng):
    """Instantiate the tracker described by spec, applying wrappers."""
    if spec.kind == "mint":
        # Under RFM the selection window is the RFM window, not the interval.
        window = spec.rfm_th if spec.rfm_th is not None else max_act
        base = MintState(window, transitive=spec.transitive, rng=rng)
    elif spec.kind == "para":
        base = InDramParaState(Fraction(1, max_act), overwrite=True)
    elif spec.kind == "para_no_overwrite":
        base = InDramParaState(Fraction(1, max_act), overwrite=False)
    elif spec.kind == "parfm":
        base = ParfmState(max_act)
    elif spec.kind == "prct":
        base = PrctState()
    elif spec.kind == "misra_gries":
        base = MisraGriesState(spec.entries)
    else:  # pragma: no cover - TrackerSpec already validates
        raise ValueError(f"unknown tracker kind {spec.kind!r}")
    if spec.rfm_th is not None:
        return RfmTracker(base, spec.rfm_th)
    if spec.dmq:
        return DmqTracker(base, max_act)
    return base


def _run_cycle(state, activations, rng, max_act):
    if max_act is not None and len(activations) > max_act:
        raise ContractViolationError(
            f"{len(activations)} activations exceed the interval budget of {max_act}"
        )
    for row in activations:
        state.observe_activation(row, rng)
    return state.on_refresh(rng)


def mint_cycle(state, activations, rng):
    """One full refresh interval: activations in slot order, then REF."""
    return _run_cycle(state, activations, rng, state.max_act)


def indram_para_cycle(state, activations, rng, max_act=None):
    return _run_cycle(state, activations, rng, max_act)


def parfm_cycle(state, activations, rng):
    return _run_cycle(state, activations, rng, state.max_act)


def prct_cycle(state, activations, rng, max_act=None):
    return _run_cycle(state, activations, rng, max_act)


def misra_gries_cycle(state, activations, rng, max_act=None):
    return _run_cycle(state, activations, rng, max_act)


def dmq_wrap(dmq: DmqTracker, events, rng):
    """Drive a DmqTracker over an event stream.

    events is a sequence whose items are either an int row address (one
    activation) or the string "ref" (one executed REF). Returns the list of
    (event_index, MitigationDecision) executed at REF epochs.
    """
    executed = []
    for index, event in enumerate(events):
        if event == "ref":
            decision = dmq.on_refresh(rng)
            if decision is not None:
                executed.append((index, decision))
        else:
            dmq.observe_activation(event, rng)
    return executed


def rfm_wrap(rfm: RfmTracker, events, rng):
    """Drive an RfmTracker over an event stream (same format as dmq_wrap).

    Mitigations fire on RAA threshold crossings, so they are reported at
    activation indices; "ref" events only mark epochs and never mitigate.
    """
    executed = []
    for index, event in enumerate(events):
        if event == "ref":
            rfm.on_refresh(rng)
        else:
            decision = rfm.observe_activation(event, rng)
            if decision is not None:
                executed.append((index, decision))
    return executed
