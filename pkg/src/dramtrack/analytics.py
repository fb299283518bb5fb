"""Closed-form reliability analytics for the tracker models.

The core object is the failure recurrence: with per-chance mitigation
probability p, the probability that some run of at least T consecutive
unmitigated chances occurs within k trials is

    P_k = 0                                   for k < T
    P_T = (1-p)^T
    P_k = p * (1-p)^T * (1 - P_{k-T-1}) + P_{k-1}   for k > T

(P_j = 0 for j <= 0). This equals the probability that a row survives T
back-to-back activations without its tracker ever selecting it, which an
exhaustive-enumeration oracle confirms exactly (see failure_curve's exact
mode and the test suite).

A window failure probability multiplies the per-row recurrence value by the
number of attack rows (clamped to 1) and by the auto-refresh factor
(1 - N_seq/N): each row is refreshed once per window at an effectively
uniform position, which truncates sequences spanning N_seq of the window's
N intervals.

From there:

- min_trh searches the smallest threshold whose window failure probability
  meets the reliability target (default 10,000 bank-years mean time to
  failure, i.e. target probability per 32 ms window of 0.032 / (years *
  31,536,000 s)).
- Per-tracker headline thresholds, postponed-refresh variants, the
  delayed-mitigation-queue adjustment, activation-count-morphing (burst)
  attacks, and reduced-rate / activation-triggered (RFM) mitigations are
  derived on top.

Results carry min_trh (the threshold a device must tolerate single-sided)
and min_trh_d = ceil(min_trh / 2) (the per-row double-sided equivalent).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

from .attacks import PatternSpec
from .dram import MAX_POSTPONE, REFI_PER_WINDOW, DerivedParams
from .errors import UnreachableTargetError
from .trackers import TrackerSpec

YEAR_SECONDS = 365 * 24 * 3600
T_REFW_SECONDS = 0.032
DEFAULT_TARGET_BANK_YEARS = 10_000.0
CONCURRENT_BANKS = 22  # banks hammerable in parallel under tFAW out of 64

# Counter-summary sizing carried from the literature: 677 entries per bank
# bound the tolerated double-sided threshold at 1400.
MISRA_GRIES_REFERENCE_ENTRIES = 677
MISRA_GRIES_REFERENCE_MIN_TRH_D = 1400

RFM_RATE_LABELS = ("0.5x", "1x", "rfm32", "rfm16")

# Attacker strategy grid for copies-per-window sweeps. Dense where optima
# occur (small counts), coarse above.
_COPY_CANDIDATES = tuple(list(range(1, 17)) + [20, 24, 32, 40, 48, 64, 73, 96, 128, 146, 160, 182])


def target_failure_probability(target_bank_years: float) -> float:
    """Per-window failure probability matching a bank MTTF target."""
    if target_bank_years <= 0:
        raise ValueError(f"target_bank_years must be positive, got {target_bank_years}")
    return T_REFW_SECONDS / (target_bank_years * YEAR_SECONDS)


def mttf_bank_years(p_refw: float) -> float:
    """Bank mean time to failure implied by a per-window probability."""
    if p_refw < 0 or p_refw > 1:
        raise ValueError(f"p_refw must be a probability, got {p_refw}")
    if p_refw == 0.0:
        return math.inf
    return T_REFW_SECONDS / p_refw / YEAR_SECONDS


def mttf_system_years(bank_years: float, concurrent_banks: int = CONCURRENT_BANKS) -> float:
    return bank_years / concurrent_banks


def survival_probability(p, max_act: int, k: int):
    """Chance a sample taken at slot k survives overwrite to the interval end."""
    _check_probability(p)
    if not 1 <= k <= max_act:
        raise ValueError(f"slot k must be in 1..{max_act}, got {k}")
    return (1 - p) ** (max_act - k)


def nooverwrite_sampling(p, k: int):
    """Chance slot k wins under first-sample-kept: p * (1-p)^(k-1)."""
    _check_probability(p)
    if k < 1:
        raise ValueError(f"slot k must be >= 1, got {k}")
    return p * (1 - p) ** (k - 1)


def nonselection_probability(p, max_act: int):
    """Chance a full interval of max_act activations selects nothing."""
    _check_probability(p)
    return (1 - p) ** max_act


def para_effective_p(p, max_act: int, k: int):
    """Sampling probability times overwrite survival for slot k."""
    return p * survival_probability(p, max_act, k)


def _check_probability(p):
    if not 0 < p <= 1:
        raise ValueError(f"probability must be in (0, 1], got {p}")


def failure_curve(t: int, p, k_max: int, exact: bool = False):
    """Failure recurrence values P_1..P_k_max as a list.

    exact=True runs the recurrence in Fraction arithmetic (p must then be a
    Fraction or int-ratio convertible); otherwise double precision with the
    run term computed in log space so deep tails stay finite.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    if exact:
        p = Fraction(p)
        _check_probability(p)
        run = (1 - p) ** t
        zero = Fraction(0)
    else:
        p = float(p)
        _check_probability(p)
        run = math.exp(t * math.log1p(-p)) if p < 1 else 0.0
        zero = 0.0
    curve = [zero] * (k_max + 1)
    if t <= k_max:
        curve[t] = run
        step = p * run
        for k in range(t + 1, k_max + 1):
            prior = curve[k - t - 1] if k - t - 1 >= 1 else zero
            curve[k] = step * (1 - prior) + curve[k - 1]
    return curve[1:]


@lru_cache(maxsize=16384)
def _failure_tail(t: int, p: float, k_max: int) -> float:
    """Last value of the float recurrence, cached; O(t) memory."""
    if k_max < t:
        return 0.0
    run = math.exp(t * math.log1p(-p)) if p < 1 else 0.0
    step = p * run
    # history holds P_{k-t-1}..P_k left to right.
    history = deque([0.0] * t + [run], maxlen=t + 1)
    for _ in range(t + 1, k_max + 1):
        history.append(step * (1.0 - history[0]) + history[-1])
    return history[-1]


def _window_probability(t_chances, p_chance, chances, k_eff, n_seq, n_refi, auto_refresh):
    """k-row window failure probability with the auto-refresh factor."""
    tail = _failure_tail(t_chances, float(p_chance), chances)
    prob = min(1.0, k_eff * tail)
    if auto_refresh:
        prob *= max(0.0, 1.0 - min(n_seq, n_refi) / n_refi)
    return prob


@dataclass(frozen=True)
class ThresholdResult:
    """Threshold search outcome. min_trh_d is always ceil(min_trh / 2)."""

    tracker: str
    pattern: str
    min_trh: int
    min_trh_d: int
    p_refw: float
    mttf_bank_years: float
    target_bank_years: float
    model: str

    def __post_init__(self):
        if self.min_trh_d != -(-self.min_trh // 2):
            raise ValueError("min_trh_d must equal ceil(min_trh / 2)")


def _result(tracker, pattern, min_trh, p_at, target_years, model):
    return ThresholdResult(
        tracker=tracker,
        pattern=pattern,
        min_trh=min_trh,
        min_trh_d=-(-min_trh // 2),
        p_refw=p_at,
        mttf_bank_years=mttf_bank_years(p_at),
        target_bank_years=target_years,
        model=model,
    )


def _search_min_trh(prob_fn, hi, target_p, lo=1):
    """Smallest T with prob_fn(T) < target_p; asserts shape and bracketing."""
    if prob_fn(hi) >= target_p:
        raise UnreachableTargetError(
            f"target probability {target_p:g} unreachable within threshold {hi}"
        )
    low, high = lo, hi
    while low < high:
        mid = (low + high) // 2
        if prob_fn(mid) < target_p:
            high = mid
        else:
            low = mid + 1
    # Monotone shape and bracketing checks per the search contract.
    assert prob_fn(low) < target_p
    assert low == lo or prob_fn(low - 1) >= target_p
    assert low == lo or prob_fn(low - 1) >= prob_fn(low)
    return low


# ---------------------------------------------------------------------------
# Chance models: map (tracker, pattern, threshold) onto recurrence arguments.


def _slot_probability(tracker: TrackerSpec, params: DerivedParams) -> Fraction:
    m = params.max_act
    if tracker.kind == "mint" and tracker.transitive:
        return Fraction(1, m + 1)
    return Fraction(1, m)


def _supports_recurrence(tracker: TrackerSpec, pattern: PatternSpec) -> bool:
    if tracker.kind in ("mint", "parfm"):
        return pattern.kind in ("p1", "p2", "p3")
    if tracker.kind in ("para", "para_no_overwrite"):
        return pattern.kind in ("p1", "p2")
    return False


def _drip_probability(tracker, pattern, trh, params, auto_refresh=True):
    """Window failure probability for the drip/copies patterns."""
    m = params.max_act
    n = params.refi_per_window
    p_slot = _slot_probability(tracker, params)
    if pattern.kind == "p1":
        k_rows, copies = 1, 1
    elif pattern.kind == "p2":
        k_rows, copies = pattern.k, 1
    else:  # p3
        if pattern.k * pattern.c > m:
            raise ValueError("p3 needs k*c <= max_act")
        k_rows, copies = pattern.k, pattern.c
    if pattern.kind in ("p1", "p2") and k_rows <= m:
        chances = n
        refi_per_chance = 1.0
        p_chance = p_slot
    elif pattern.kind == "p2":
        # Round-robin over more rows than slots: fewer chances per row,
        # spread over proportionally more intervals.
        chances = (n * m) // k_rows
        refi_per_chance = k_rows / m
        p_chance = p_slot
    else:
        # Copies collapse the interval into one chance of weight c.
        chances = n
        refi_per_chance = 1.0
        p_chance = copies * p_slot
    t_chances = -(-trh // copies)
    n_seq = t_chances * refi_per_chance
    return _window_probability(t_chances, p_chance, chances, k_rows, n_seq, n, auto_refresh)


def _para_scale(params: DerivedParams) -> float:
    """Worst-position overwrite-survival penalty (1 - 1/M)^-(M-1)."""
    m = params.max_act
    return float((1 - Fraction(1, m)) ** (-(m - 1)))


def p_refw(tracker: TrackerSpec, pattern: PatternSpec, trh: int, params: DerivedParams,
           auto_refresh: bool = True) -> float:
    """Window failure probability for a tracker/pattern pair at threshold trh.

    Supported pairs: mint/parfm with p1/p2/p3 (drip recurrence), the
    sampler trackers with p1/p2 (worst-position scaled model), and the
    repeat patterns against slot trackers (guarantee bound). Other pairs
    have no closed form here and raise ValueError.
    """
    if trh < 1:
        raise ValueError(f"trh must be >= 1, got {trh}")
    mint_like = tracker.kind in ("mint", "parfm")
    if mint_like and pattern.kind in ("p1", "p2", "p3"):
        base = PatternSpec(kind=pattern.kind, k=pattern.k, c=pattern.c)
        return _drip_probability(tracker, base, trh, params, auto_refresh)
    if tracker.kind in ("para", "para_no_overwrite") and pattern.kind in ("p1", "p2"):
        # Scaled model: the drip search at p = 1/M, with the threshold
        # deflated by the worst-position survival penalty.
        scale = _para_scale(params)
        inner_t = max(1, round(trh / scale))
        inner_tracker = TrackerSpec(kind="mint", transitive=False)
        return _drip_probability(inner_tracker, pattern, inner_t, params, auto_refresh)
    if mint_like and pattern.kind in ("single", "double", "transitive"):
        if tracker.kind == "mint" and tracker.transitive:
            # Repeat rows are guaranteed selections except on zero draws.
            m = params.max_act
            q = Fraction(1, m + 1)
            per_interval = m if pattern.kind != "double" else m
            t_chances = -(-trh // per_interval)
            return _window_probability(
                t_chances, q, params.refi_per_window, 1, t_chances,
                params.refi_per_window, auto_refresh,
            )
        # Full-slot repeat against slot trackers is mitigated every REF.
        budget = params.max_act if pattern.kind != "double" else 2 * params.max_act
        return 1.0 if trh <= budget else 0.0
    raise ValueError(
        f"no closed-form window probability for {tracker.kind} vs {pattern.kind}"
    )


def min_trh(tracker: TrackerSpec, pattern: PatternSpec, params: DerivedParams,
            target_bank_years: float = DEFAULT_TARGET_BANK_YEARS) -> ThresholdResult:
    """Smallest threshold meeting the MTTF target for this tracker/pattern."""
    target_p = target_failure_probability(target_bank_years)
    n = params.refi_per_window
    m = params.max_act
    if not _supports_recurrence(tracker, pattern):
        raise ValueError(f"min_trh has no model for {tracker.kind} vs {pattern.kind}")
    if tracker.kind in ("para", "para_no_overwrite"):
        hi = int(math.ceil(n * _para_scale(params))) + 1
        model = "scaled-recurrence"
    else:
        copies = pattern.c if pattern.kind == "p3" else 1
        per_row_budget = (n * m) // pattern.k if pattern.kind == "p2" and pattern.k > m else n * copies
        hi = per_row_budget + 1
        model = "recurrence"
    fn = lambda t: p_refw(tracker, pattern, t, params)
    found = _search_min_trh(fn, hi, target_p)
    return _result(tracker.label(), pattern.label(), found, fn(found), target_bank_years, model)


# ---------------------------------------------------------------------------
# Derived headline values and table entries.


def feinting_limit(max_act: int, n_rows: int) -> int:
    """Per-row count the water-filling adversary reaches with two rows left.

    Exact integer recurrence over (level, remainder): survivors always stay
    within one activation of each other, the defender removes one maximal
    row per interval, and the final interval focuses all slots on the last
    two rows. Matches the full adversary-vs-tracker simulation exactly.
    """
    if max_act < 1 or n_rows < 2:
        raise ValueError(f"need max_act >= 1 and n_rows >= 2, got {max_act}, {n_rows}")
    level, extra, alive = 0, 0, n_rows
    while alive > 2:
        total = extra + max_act
        level += total // alive
        extra = total % alive
        if extra > 0:
            extra -= 1  # defender removes a row at level+1
        alive -= 1
    total = extra + max_act
    level += total // 2
    extra = total % 2
    return level + (1 if extra else 0)


def decoy_exposure(params: DerivedParams, postpone_limit: int = MAX_POSTPONE) -> int:
    """Unobserved activations a decoy-fronted attack lands per window."""
    batch = postpone_limit + 1
    per_batch = postpone_limit * params.max_act
    return (params.refi_per_window // batch) * per_batch


def transitive_exposure(tracker: TrackerSpec, params: DerivedParams,
                        target_bank_years: float = DEFAULT_TARGET_BANK_YEARS) -> ThresholdResult:
    """Worst distance-two exposure via victim refreshes.

    Trackers that cannot see victim refreshes and lack a distance-two
    mitigation path (plain-slot mint, parfm) let the indirect victim absorb
    one disturbance per REF, a full window's worth. The transitive slot
    bounds mint by its direct drip threshold; samplers mitigate the
    aggressor too rarely for the indirect path to beat the direct one; and
    counter trackers observe the victim refreshes themselves.
    """
    n = params.refi_per_window
    pat = "transitive"
    if tracker.kind == "parfm" or (tracker.kind == "mint" and not tracker.transitive):
        return _result(tracker.label(), pat, n, 0.0, target_bank_years, "exposure")
    if tracker.kind == "mint":
        direct = min_trh(tracker, PatternSpec(kind="p2", k=params.max_act), params,
                         target_bank_years)
        return replace(direct, pattern=pat, model="bounded-by-direct")
    if tracker.kind in ("para", "para_no_overwrite"):
        direct = min_trh(tracker, PatternSpec(kind="p2", k=params.max_act), params,
                         target_bank_years)
        return replace(direct, pattern=pat, model="immune-direct-bound")
    # Counter trackers count the victim refreshes like activations.
    base = tracker_min_trh(tracker, params, target_bank_years)
    return replace(base, pattern=pat, model="immune-direct-bound")


def tracker_min_trh(tracker: TrackerSpec, params: DerivedParams,
                    target_bank_years: float = DEFAULT_TARGET_BANK_YEARS) -> ThresholdResult:
    """Headline worst-case-attack threshold for a tracker."""
    m = params.max_act
    n = params.refi_per_window
    if tracker.kind == "mint":
        if not tracker.transitive:
            return _result(tracker.label(), "transitive", n, 0.0, target_bank_years, "exposure")
        return min_trh(tracker, PatternSpec(kind="p2", k=m), params, target_bank_years)
    if tracker.kind in ("para", "para_no_overwrite"):
        return min_trh(tracker, PatternSpec(kind="p2", k=m), params, target_bank_years)
    if tracker.kind == "parfm":
        return _result(tracker.label(), "transitive", n, 0.0, target_bank_years, "exposure")
    if tracker.kind == "prct":
        limit = feinting_limit(m, n)
        return _result(tracker.label(), "feinting", 2 * limit, 0.0, target_bank_years, "feinting")
    if tracker.kind == "misra_gries":
        if tracker.entries == MISRA_GRIES_REFERENCE_ENTRIES:
            d = MISRA_GRIES_REFERENCE_MIN_TRH_D
            return _result(tracker.label(), "feinting", 2 * d, 0.0, target_bank_years,
                           "literature-constant")
        if tracker.entries >= n:
            limit = feinting_limit(m, n)
            return _result(tracker.label(), "feinting", 2 * limit, 0.0, target_bank_years,
                           "feinting")
        raise ValueError(
            "misra_gries analytics only cover the 677-entry reference size or "
            "entries >= the row pool; simulate other sizes"
        )
    raise ValueError(f"no headline model for tracker {tracker.kind!r}")


def dmq_adjust(result: ThresholdResult, pattern_class: str = "generic",
               max_act: int = 73, postpone_limit: int = MAX_POSTPONE) -> ThresholdResult:
    """Postponed-refresh allowance on top of a timely-schedule result.

    generic: a selected row can absorb up to postpone_limit extra intervals
    of full-rate activations while queued (+292 on min_trh, +146 on
    min_trh_d at DDR5 defaults). drip: rows limited to one activation per
    interval gain at most postpone_limit per side (+8 / +4).
    """
    if pattern_class == "generic":
        add = postpone_limit * max_act
    elif pattern_class == "drip":
        add = 2 * postpone_limit
    else:
        raise ValueError(f"pattern_class must be generic or drip, got {pattern_class!r}")
    return replace(
        result,
        min_trh=result.min_trh + add,
        min_trh_d=-(-(result.min_trh + add) // 2),
        model=result.model + f"+dmq-{pattern_class}",
    )


def markov_distribution(p, t: int, exact: bool = False):
    """Distribution of a row's unmitigated count after t one-per-interval
    chances: mass p*(1-p)^a at a < t, remainder (1-p)^t at a = t."""
    _check_probability(p)
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if exact:
        p = Fraction(p)
    else:
        p = float(p)
    dist = [p * (1 - p) ** a for a in range(t)]
    dist.append((1 - p) ** t)
    return dist


# ---------------------------------------------------------------------------
# Activation-count morphing (drip phase, then a postponement burst).


def _ada_components(params: DerivedParams):
    m = params.max_act
    burst = (MAX_POSTPONE + 1) * m
    burst_intervals = -(-burst // m)
    p = 1.0 / m  # the burst analysis runs on the plain-slot drip baseline
    return m, params.refi_per_window, burst, burst_intervals, p


def ada_min_trh(mp: int, params: DerivedParams,
                target_bank_years: float = DEFAULT_TARGET_BANK_YEARS,
                sided: str = "single", dmq: bool = True) -> ThresholdResult:
    """Threshold needed against the morphing attack at morphing point mp.

    Per repeat cycle the adversary needs some drip row (single) or victim
    (double) to have accumulated threshold-minus-burst unmitigated
    activations by mp; the chance tail is (1-p)^needed, a union over all
    max_act drip rows, times the number of cycles per window. The non-burst
    path is the static drip threshold (with its postponement allowance when
    dmq is set), combined by max.
    """
    if mp < 1:
        raise ValueError(f"mp must be >= 1, got {mp}")
    if sided not in ("single", "double"):
        raise ValueError(f"sided must be single or double, got {sided!r}")
    m, n, burst, burst_intervals, p = _ada_components(params)
    target_p = target_failure_probability(target_bank_years)
    cycle = mp + burst_intervals
    repeats = n // cycle
    if repeats < 1:
        raise ValueError(f"mp {mp} leaves no complete cycle in the window")
    base = min_trh(TrackerSpec(kind="mint", transitive=False),
                   PatternSpec(kind="p2", k=m), params, target_bank_years)
    base_s = base.min_trh + (8 if dmq else 0)
    log_q = math.log1p(-p)

    if sided == "single":
        chance_cap = mp  # one activation chance per interval per row

        def burst_prob(t):
            needed = t - burst
            if needed > chance_cap:
                return 0.0
            needed = max(0, needed)
            tail = min(1.0, m * repeats * math.exp(needed * log_q))
            span = min(needed + burst_intervals, n)
            return tail * (1.0 - span / n)

        hi = max(base_s, mp + burst + 1)
        found = _search_min_trh(burst_prob, hi, target_p, lo=base_s)
        return _result("mint-dmq" if dmq else "mint", f"ada-mp{mp}-single", found,
                       burst_prob(found), target_bank_years, "ada")

    # Double-sided: per-row threshold t, victim threshold 2t, two chances
    # per interval, each flank activation a selection chance.
    chance_cap = 2 * mp
    base_d = base.min_trh_d + (4 if dmq else 0)

    def burst_prob_d(t):
        needed = 2 * t - burst
        if needed > chance_cap:
            return 0.0
        needed = max(0, needed)
        tail = min(1.0, m * repeats * math.exp(needed * log_q))
        span = min(-(-needed // 2) + burst_intervals, n)
        return tail * (1.0 - span / n)

    found = _search_min_trh(burst_prob_d, max(base_d, mp + burst + 1), target_p, lo=base_d)
    return _result("mint-dmq" if dmq else "mint", f"ada-mp{mp}-double", 2 * found,
                   burst_prob_d(found), target_bank_years, "ada")


def ada_worst_case(params: DerivedParams,
                   target_bank_years: float = DEFAULT_TARGET_BANK_YEARS,
                   sided: str = "double", dmq: bool = True,
                   mp_values=None) -> ThresholdResult:
    """Max threshold over the useful morphing-point range."""
    if mp_values is None:
        _, n, burst, burst_intervals, _ = _ada_components(params)
        mp_values = range(1, n - burst_intervals)
    worst = None
    for mp in mp_values:
        res = ada_min_trh(mp, params, target_bank_years, sided=sided, dmq=dmq)
        if worst is None or res.min_trh > worst.min_trh:
            worst = res
    return worst


# ---------------------------------------------------------------------------
# Reduced-rate and activation-triggered mitigation (RFM).


def _windowed_min_trh(window, windows_per_refw, refi_per_window_unit, params, target_p,
                      transitive_slot=True, copy_candidates=_COPY_CANDIDATES,
                      delay_per_copy=0, delay_flat=0):
    """Copies-sweep threshold search over an arbitrary mitigation window.

    The attacker fills a window of `window` activation slots with k rows of
    c copies each; per-window selection probability is c/(window+1) (or
    c/window without the transitive slot). Returns the max over c of the
    crossing plus the queue/delay allowance.
    """
    n = params.refi_per_window
    denom = window + 1 if transitive_slot else window
    best = None
    for c in copy_candidates:
        if c > window:
            break
        k_rows = window // c
        if k_rows < 1:
            break
        p_chance = c / denom

        def prob(t, c=c, k_rows=k_rows, p_chance=p_chance):
            t_w = -(-t // c)
            n_seq = t_w * refi_per_window_unit
            return _window_probability(t_w, p_chance, windows_per_refw, k_rows, n_seq, n, True)

        hi = c * windows_per_refw + 1
        try:
            found = _search_min_trh(prob, hi, target_p)
        except UnreachableTargetError:
            continue
        total = found + delay_per_copy * c + delay_flat
        if best is None or total > best[0]:
            best = (total, c, prob(found))
    if best is None:
        raise UnreachableTargetError("no copy strategy reaches the target")
    return best


def rfm_min_trh(rate: str, params: DerivedParams,
                target_bank_years: float = DEFAULT_TARGET_BANK_YEARS,
                with_dmq: bool = True, transitive_slot: bool = True) -> ThresholdResult:
    """Threshold under reduced-rate or activation-triggered mitigation.

    rate is one of 0.5x (one mitigation per two intervals), 1x (the
    baseline, reported from the worst-case morphing pipeline), rfm32 or
    rfm16 (mitigation every 32 / 16 activations, selection over the RFM
    window with the transitive slot retained). Delay allowances: +4
    activations per copy for the REF-based 0.5x queue, +4*rfm_th for the
    RFM command delay, applied when with_dmq is set.
    """
    if rate not in RFM_RATE_LABELS:
        raise ValueError(f"rate must be one of {RFM_RATE_LABELS}, got {rate!r}")
    m = params.max_act
    n = params.refi_per_window
    target_p = target_failure_probability(target_bank_years)
    if rate == "1x":
        res = ada_worst_case(params, target_bank_years, sided="double", dmq=with_dmq)
        return replace(res, tracker="mint-1x", model="ada-pipeline")
    if rate == "0.5x":
        window = 2 * m
        total, c, p_at = _windowed_min_trh(
            window, (n * m) // window, window / m, params, target_p,
            transitive_slot=transitive_slot,
            delay_per_copy=4 if with_dmq else 0,
        )
        return _result("mint-0.5x", f"window-drip-c{c}", total, p_at, target_bank_years,
                       "windowed-recurrence")
    th = 32 if rate == "rfm32" else 16
    total, c, p_at = _windowed_min_trh(
        th, (n * m) // th, th / m, params, target_p,
        transitive_slot=transitive_slot,
        delay_flat=4 * th if with_dmq else 0,
    )
    return _result(f"mint-rfm{th}", f"window-drip-c{c}", total, p_at, target_bank_years,
                   "windowed-recurrence")


# ---------------------------------------------------------------------------
# Postponed refresh without a delay queue (sampler tracker).


def para_postponed_min_trh(params: DerivedParams,
                           target_bank_years: float = DEFAULT_TARGET_BANK_YEARS,
                           postpone_limit: int = MAX_POSTPONE) -> ThresholdResult:
    """Sampler tracker under maximally postponed refresh, no delay queue.

    Mitigations execute only at batch boundaries (postpone_limit+1
    intervals), and only the final sample survives overwrite. The attacker
    places c copies of each flank first and decoys after, so the pair is
    mitigated only when one of its first 2c activations is the batch's last
    sample: probability (1 - q^2c) * q^(batch-2c). Failure is a run of
    enough unmitigated batches; the result takes the worst case over c.
    """
    m = params.max_act
    n = params.refi_per_window
    batch_intervals = postpone_limit + 1
    batch = batch_intervals * m
    batches = n // batch_intervals
    target_p = target_failure_probability(target_bank_years)
    q = 1.0 - 1.0 / m
    best = None
    for c in _COPY_CANDIDATES:
        if 2 * c > batch:
            break
        p_mit = (1.0 - q ** (2 * c)) * q ** (batch - 2 * c)

        def prob(t_d, c=c, p_mit=p_mit):
            b = -(-t_d // c)
            n_seq = b * batch_intervals
            return _window_probability(b, p_mit, batches, 1, n_seq, n, True)

        hi = c * batches + 1
        try:
            found = _search_min_trh(prob, hi, target_p)
        except UnreachableTargetError:
            continue
        if best is None or found > best[0]:
            best = (found, c, prob(found))
    found, c, p_at = best
    return _result("para", f"postponed-batch-c{c}", 2 * found, p_at, target_bank_years,
                   "postponed-batch")


# ---------------------------------------------------------------------------
# Tables and sweeps.


def pattern_sweep(variable: str, values, tracker: TrackerSpec, pattern: PatternSpec,
                  params: DerivedParams,
                  target_bank_years: float = DEFAULT_TARGET_BANK_YEARS):
    """min_trh across one swept variable: k, c, max_act, target_mttf, or mp."""
    results = []
    for value in values:
        if variable == "k":
            res = min_trh(tracker, replace(pattern, kind="p2", k=value), params,
                          target_bank_years)
        elif variable == "c":
            k_rows = max(1, params.max_act // value)
            res = min_trh(tracker, replace(pattern, kind="p3", k=k_rows, c=value), params,
                          target_bank_years)
        elif variable == "max_act":
            scaled = DerivedParams(max_act_real=Fraction(value), max_act=value,
                                   refi_per_window=params.refi_per_window)
            res = tracker_min_trh(tracker, scaled, target_bank_years)
        elif variable == "target_mttf":
            res = tracker_min_trh(tracker, params, value)
        elif variable == "mp":
            res = ada_min_trh(value, params, target_bank_years, sided=pattern.sided)
        else:
            raise ValueError(f"unknown sweep variable {variable!r}")
        results.append((value, res))
    return results


def comparison_table(params: DerivedParams,
                     target_bank_years: float = DEFAULT_TARGET_BANK_YEARS):
    """Headline per-tracker thresholds (one entry per tracker)."""
    rows = []
    for spec in (
        TrackerSpec(kind="prct"),
        TrackerSpec(kind="misra_gries", entries=MISRA_GRIES_REFERENCE_ENTRIES),
        TrackerSpec(kind="parfm"),
        TrackerSpec(kind="para"),
        TrackerSpec(kind="mint"),
    ):
        rows.append(tracker_min_trh(spec, params, target_bank_years))
    return rows


def postponement_table(params: DerivedParams,
                       target_bank_years: float = DEFAULT_TARGET_BANK_YEARS):
    """(tracker, no-queue value, queued value, adaptive value or None).

    Counter trackers pay the queue allowance either way. Slot trackers
    without the queue expose the decoy count deterministically (reported as
    the raw exposure); with the queue, slot trackers pay their allowance on
    the headline threshold and the morphing pipeline sets the adaptive
    entry.
    """
    m = params.max_act
    n = params.refi_per_window
    exposure = decoy_exposure(params)
    prct = dmq_adjust(tracker_min_trh(TrackerSpec(kind="prct"), params, target_bank_years))
    mg = dmq_adjust(tracker_min_trh(
        TrackerSpec(kind="misra_gries", entries=MISRA_GRIES_REFERENCE_ENTRIES),
        params, target_bank_years))
    parfm = dmq_adjust(tracker_min_trh(TrackerSpec(kind="parfm"), params, target_bank_years))
    para_no = para_postponed_min_trh(params, target_bank_years)
    para_with = dmq_adjust(
        tracker_min_trh(TrackerSpec(kind="para"), params, target_bank_years), "drip")
    mint_with = dmq_adjust(
        tracker_min_trh(TrackerSpec(kind="mint"), params, target_bank_years), "drip")
    mint_ada = ada_worst_case(params, target_bank_years, sided="double", dmq=True)
    return [
        ("prct", prct.min_trh_d, prct.min_trh_d, None),
        ("misra_gries", mg.min_trh_d, mg.min_trh_d, None),
        ("parfm", exposure, parfm.min_trh_d, None),
        ("para", para_no.min_trh_d, para_with.min_trh_d, None),
        ("mint", exposure, mint_with.min_trh_d, mint_ada.min_trh_d),
    ]


def target_ttf_table(params: DerivedParams, targets=(1e3, 1e4, 1e5, 1e6)):
    """Per-target thresholds for the queued slot tracker and RFM variants."""
    rows = []
    for years in targets:
        mint_d = ada_worst_case(params, years, sided="double", dmq=True).min_trh_d
        rfm32_d = rfm_min_trh("rfm32", params, years).min_trh_d
        rfm16_d = rfm_min_trh("rfm16", params, years).min_trh_d
        rows.append((years, mttf_system_years(years), mint_d, rfm32_d, rfm16_d))
    return rows


def maxact_ratio_sweep(lo: int = 65, hi: int = 80,
                       refi_per_window: int = REFI_PER_WINDOW,
                       target_bank_years: float = DEFAULT_TARGET_BANK_YEARS):
    """Sampler-vs-slot-tracker threshold ratio across the slot budget range."""
    rows = []
    for m in range(lo, hi + 1):
        scaled = DerivedParams(max_act_real=Fraction(m), max_act=m,
                               refi_per_window=refi_per_window)
        mint_d = tracker_min_trh(TrackerSpec(kind="mint"), scaled, target_bank_years).min_trh_d
        para_d = tracker_min_trh(TrackerSpec(kind="para"), scaled, target_bank_years).min_trh_d
        rows.append((m, mint_d, para_d, para_d / mint_d))
    return rows
