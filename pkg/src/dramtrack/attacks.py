"""Adversarial activation patterns.

A pattern produces, for each refresh interval of a window, the list of row
activations in slot order (at most max_act of them). Static patterns ignore
tracker behavior; adaptive ones (feinting) react to observed mitigations via
observe_mitigation. Aggressor rows live in a fixed address range and decoy
rows in a disjoint one so tests can tell them apart.

Kinds (configuration names in parentheses):

- single-sided repeat (single): one row occupies every slot.
- double-sided repeat (double): the two rows flanking one victim alternate.
- one-row drip (p1): one activation per interval, rest idle.
- k-row drip (p2): k rows once each per interval; for k > max_act the rows
  round-robin across intervals and each row gets floor(N*M/k) +- 1 per
  window.
- k-row with copies (p3): k rows, c consecutive activations each.
- transitive (transitive): same stream as single, but the rows of interest
  sit two away from the aggressor; the damage is delivered by the victim
  refreshes the tracker issues.
- postponement decoy (decoy): per refresh-postponement batch, the first
  interval carries max_act decoy activations and the remaining four carry
  the attack row, which slot-structured trackers never see.
- feinting (feinting): water-filling adversary against counter trackers.
- activation-count morphing (ada): k-row drip until the morphing point, then
  a burst of (postpone_limit+1)*max_act activations on one target, repeated
  every mp + ceil(burst/max_act) intervals.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .dram import MAX_POSTPONE, check_row

PATTERN_KINDS = (
    "single",
    "double",
    "p1",
    "p2",
    "p3",
    "transitive",
    "decoy",
    "feinting",
    "ada",
)

ATTACK_BASE = 1000
DECOY_BASE = 200_000
SIDES = ("single", "double")


@dataclass(frozen=True)
class PatternSpec:
    """Pattern descriptor shared by analytics, simulation, and the CLI."""

    kind: str = "p2"
    k: int = 1
    c: int = 1
    mp: int | None = None
    sided: str = "single"

    def __post_init__(self):
        if self.kind not in PATTERN_KINDS:
            raise ValueError(f"pattern kind must be one of {PATTERN_KINDS}, got {self.kind!r}")
        if self.k < 1 or self.c < 1:
            raise ValueError(f"k and c must be >= 1, got k={self.k} c={self.c}")
        if self.sided not in SIDES:
            raise ValueError(f"sided must be one of {SIDES}, got {self.sided!r}")
        if self.kind == "ada" and (self.mp is None or self.mp < 1):
            raise ValueError("ada pattern requires a positive morphing point mp")

    def label(self) -> str:
        parts = [self.kind]
        if self.kind in ("p2", "p3"):
            parts.append(f"k{self.k}")
        if self.kind == "p3":
            parts.append(f"c{self.c}")
        if self.kind == "ada":
            parts.append(f"mp{self.mp}")
            parts.append(self.sided)
        return "-".join(parts)


class StaticPattern:
    """Fixed per-interval slot assignment."""

    def __init__(self, kind, max_act, n_refi, aggressors, interval_fn):
        self.kind = kind
        self.max_act = max_act
        self.n_refi = n_refi
        self.aggressors = tuple(aggressors)
        self._interval_fn = interval_fn
        for row in self.aggressors:
            check_row(row)

    def acts(self, interval):
        rows = self._interval_fn(interval % self.n_refi)
        if len(rows) > self.max_act:
            raise AssertionError("pattern exceeded the interval slot budget")
        return rows

    def observe_mitigation(self, decision):
        return None


def _spread_rows(k, spacing=4, base=ATTACK_BASE):
    return [base + spacing * i for i in range(k)]


def gen_static(kind, spec: PatternSpec, max_act, n_refi):
    """Build one of the non-adaptive patterns."""
    if kind == "single":
        row = ATTACK_BASE
        return StaticPattern(kind, max_act, n_refi, [row], lambda i: [row] * max_act)

    if kind == "double":
        left, right = ATTACK_BASE, ATTACK_BASE + 2  # victim sits between
        rows = [left if s % 2 == 0 else right for s in range(max_act)]
        return StaticPattern(kind, max_act, n_refi, [left, right], lambda i: list(rows))

    if kind == "transitive":
        # Same stream as single-sided; the interesting rows are two away.
        row = ATTACK_BASE
        return StaticPattern(kind, max_act, n_refi, [row], lambda i: [row] * max_act)

    if kind == "p1":
        row = ATTACK_BASE
        return StaticPattern(kind, max_act, n_refi, [row], lambda i: [row])

    if kind == "p2":
        rows = _spread_rows(spec.k)
        if spec.k <= max_act:
            return StaticPattern(kind, max_act, n_refi, rows, lambda i: list(rows))

        def round_robin(i):
            start = (i * max_act) % spec.k
            return [rows[(start + s) % spec.k] for s in range(max_act)]

        return StaticPattern(kind, max_act, n_refi, rows, round_robin)

    if kind == "p3":
        if spec.k * spec.c > max_act:
            raise ValueError(
                f"p3 needs k*c <= max_act within one interval, got {spec.k}*{spec.c} > {max_act}"
            )
        rows = _spread_rows(spec.k)
        flat = [row for row in rows for _ in range(spec.c)]
        return StaticPattern(kind, max_act, n_refi, rows, lambda i: list(flat))

    if kind == "decoy":
        return _decoy_pattern(max_act, n_refi)

    raise ValueError(f"gen_static cannot build pattern kind {kind!r}")


def _decoy_pattern(max_act, n_refi, batch=MAX_POSTPONE + 1):
    # Hammer while refreshes are postponed, then fill the catch-up interval
    # with decoys so every batched mitigation captures a decoy. Aligned with
    # the max_postponed schedule, which issues its batch at i % 5 == 4.
    attack = ATTACK_BASE
    decoys = [DECOY_BASE + 4 * i for i in range(max_act)]

    def interval_fn(i):
        if i % batch == batch - 1:
            return list(decoys)
        return [attack] * max_act

    return StaticPattern("decoy", max_act, n_refi, [attack], interval_fn)


class AdaPattern:
    """k-row drip morphing into a one-target activation burst.

    Each cycle is mp drip intervals followed by ceil(burst/max_act) burst
    intervals, where burst = (postpone_limit+1) * max_act activations all
    aimed at one target (single) or split across one victim's two flanks
    (double). The target advances by one pattern row each cycle since the
    adversary cannot observe tracker counts. Slots left over in the last
    burst interval stay empty.
    """

    def __init__(self, mp, max_act, n_refi, k=None, sided="single"):
        if mp < 1:
            raise ValueError(f"mp must be >= 1, got {mp}")
        if sided not in SIDES:
            raise ValueError(f"sided must be one of {SIDES}, got {sided!r}")
        self.kind = "ada"
        self.mp = mp
        self.max_act = max_act
        self.n_refi = n_refi
        self.sided = sided
        self.k = max_act if k is None else k
        if self.k > max_act:
            raise ValueError("ada drip phase needs k <= max_act")
        spacing = 2 if sided == "double" else 4  # chain shares victims
        self.rows = _spread_rows(self.k, spacing=spacing)
        self.aggressors = tuple(self.rows)
        self.burst_acts = (MAX_POSTPONE + 1) * max_act
        self.burst_intervals = -(-self.burst_acts // max_act)
        self.cycle_len = mp + self.burst_intervals

    def acts(self, interval):
        cycle, offset = divmod(interval, self.cycle_len)
        if offset < self.mp:
            return list(self.rows)
        done = (offset - self.mp) * self.max_act
        remaining = self.burst_acts - done
        count = min(self.max_act, remaining)
        if count <= 0:
            return []
        if self.sided == "single":
            target = self.rows[cycle % self.k]
            return [target] * count
        # Double: hammer both flanks of the victim above the chosen row.
        left = self.rows[cycle % (self.k - 1)] if self.k > 1 else self.rows[0]
        right = left + 2
        return [left if s % 2 == 0 else right for s in range(count)]

    def observe_mitigation(self, decision):
        return None


def ada_pattern(mp, max_act, n_refi, k=None, sided="single"):
    return AdaPattern(mp, max_act, n_refi, k=k, sided=sided)


class FeintingAdversary:
    """Water-filling adversary against counter-based trackers.

    Keeps all surviving rows' activation counts within one of each other by
    dealing each of the max_act activations per interval to a currently
    minimum-count row (ties: lowest address). Rows the tracker mitigates are
    removed from candidacy. Once two rows remain, all activations focus on
    them; placed around a victim they define the achievable unmitigated
    exposure.
    """

    def __init__(self, n_rows, max_act, spacing=4, base=ATTACK_BASE):
        if n_rows < 2:
            raise ValueError(f"need at least 2 rows, got {n_rows}")
        if max_act < 1:
            raise ValueError(f"max_act must be >= 1, got {max_act}")
        self.kind = "feinting"
        self.max_act = max_act
        self.counts = {base + spacing * i: 0 for i in range(n_rows)}
        self.alive = set(self.counts)
        self.aggressors = tuple(sorted(self.counts))
        self._heap = [(0, row) for row in sorted(self.counts)]
        heapq.heapify(self._heap)

    @property
    def remaining(self):
        return len(self.alive)

    def acts(self, interval):
        # Adaptive: the schedule depends on mitigations seen, not the index.
        return self.next_acts()

    def next_acts(self):
        """Allocate the next interval's activations by water-filling."""
        picked = []
        for _ in range(self.max_act):
            while True:
                count, row = self._heap[0]
                if row in self.alive and count == self.counts[row]:
                    break
                heapq.heappop(self._heap)  # stale or mitigated entry
            heapq.heapreplace(self._heap, (count + 1, row))
            self.counts[row] = count + 1
            picked.append(row)
        return picked

    def observe_mitigation(self, decision):
        self.alive.discard(decision.row)

    def max_alive_count(self):
        return max(self.counts[row] for row in self.alive)


def feinting_step(adversary: FeintingAdversary, observed_mitigations):
    """One adversary round: digest mitigations, emit the next interval."""
    for decision in observed_mitigations:
        adversary.observe_mitigation(decision)
    return adversary.next_acts()


def build_pattern(spec: PatternSpec, max_act, n_refi):
    """Instantiate the pattern described by spec."""
    if spec.kind == "feinting":
        return FeintingAdversary(n_refi, max_act)
    if spec.kind == "ada":
        return AdaPattern(spec.mp, max_act, n_refi, k=min(spec.k, max_act), sided=spec.sided)
    return gen_static(spec.kind, spec, max_act, n_refi)
