"""Parameter-region scanning: sweep the arc parameter, bracket outcome
flips, refine the bracket by step-decimation, and label the bifurcation
pattern at each (delta, beta) grid point.

The sweep walks s upward from one step above zero.  Every consecutive
pair of samples whose outcome identity (kind, side) differs becomes a
candidate interval.  Once the separatrix settles on its own side for
good (capture into the near equilibrium), nothing new happens at larger
s, so the sweep stops there.  Refinement re-scans the bracketing
interval at one tenth of the step until the width drops below the
threshold; when interleaved transitional states (e.g. thin chaotic
bands) appear inside the bracket, the refiner keeps tracking the onset
of the right-hand family and flags the interval.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

from .model import PathPoint
from .separatrix import (
    OutcomeKind,
    RunSettings,
    SeparatrixOutcome,
    run_separatrix,
)

__all__ = [
    "ScanSettings",
    "RegionLabel",
    "BifurcationInterval",
    "SweepResult",
    "RegionScanResult",
    "sweep_s",
    "refine_interval",
    "classify_region",
    "merge_split_signature",
    "region_scan",
    "scan_grid",
    "write_scan_csv",
    "scan_manifest",
]

Evaluator = Callable[[float], SeparatrixOutcome]


@dataclass(frozen=True)
class ScanSettings:
    """Sweep/refinement knobs on top of the per-run settings."""

    s_step: float = 1e-3
    eps_threshold: float = 1e-12
    max_depth: int = 12
    s_max: float = 0.999
    run: RunSettings = field(default_factory=RunSettings)

    def __post_init__(self):
        if not (math.isfinite(self.s_step) and 0 < self.s_step < 0.5):
            raise ValueError(f"s_step must be in (0, 0.5), got {self.s_step}")
        if not (math.isfinite(self.eps_threshold) and self.eps_threshold > 0):
            raise ValueError("eps_threshold must be positive and finite")
        if not (0 < self.s_max < 1):
            raise ValueError("s_max must lie in (0, 1): the arc excludes s=1")
        if not (isinstance(self.max_depth, int) and 1 <= self.max_depth <= 60):
            raise ValueError("max_depth must be an integer in [1, 60]")


class RegionLabel(str, Enum):
    SEPARATRIX_SWAP = "SeparatrixSwap"
    EIGHT_CYCLE_SPLIT = "EightCycleSplit"
    CYCLE_SWAP_NEAR_ATTRACTOR = "CycleSwapNearAttractor"
    ATTRACTOR_MERGE = "AttractorMerge"
    NON_DISSIPATIVE = "NonDissipative"
    UNCLASSIFIED = "Unclassified"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, eq=False)
class BifurcationInterval:
    """A bracket [s_lo, s_hi] across which the outcome identity flips."""

    s_lo: float
    s_hi: float
    outcome_before: SeparatrixOutcome
    outcome_after: SeparatrixOutcome
    depth: int = 0
    flags: tuple = ()

    def __post_init__(self):
        if not (self.s_lo < self.s_hi):
            raise ValueError("need s_lo < s_hi")
        if self.outcome_before.identity == self.outcome_after.identity:
            raise ValueError("interval endpoints must have differing outcomes")

    @property
    def width(self) -> float:
        return self.s_hi - self.s_lo

    def contains(self, other: "BifurcationInterval") -> bool:
        return self.s_lo <= other.s_lo and other.s_hi <= self.s_hi


@dataclass(frozen=True, eq=False)
class SweepResult:
    delta: float
    beta: float
    samples: tuple          # ((s, SeparatrixOutcome), ...) in ascending s
    intervals: tuple        # (BifurcationInterval, ...)
    early_exit_s: Optional[float]
    non_dissipative: bool


@dataclass(frozen=True, eq=False)
class RegionScanResult:
    delta: float
    beta: float
    label: RegionLabel
    sweep: SweepResult
    interval: Optional[BifurcationInterval]   # refined, when a flip existed


def _default_evaluator(delta: float, beta: float, run: RunSettings) -> Evaluator:
    def evaluate(s: float) -> SeparatrixOutcome:
        return run_separatrix(PathPoint(delta=delta, beta=beta, s=s), run).outcome

    return evaluate


def sweep_s(
    delta: float,
    beta: float,
    settings: ScanSettings = ScanSettings(),
    evaluate: Optional[Evaluator] = None,
) -> SweepResult:
    """Walk s = k*s_step upward, recording every outcome flip.

    Stops early at the first capture onto the separatrix's own side:
    past that point the branch stays with its nearest equilibrium, so
    larger s cannot contain the flip being hunted.
    """
    if evaluate is None:
        evaluate = _default_evaluator(delta, beta, settings.run)

    samples = []
    intervals = []
    early_exit_s = None
    prev_s: Optional[float] = None
    prev_out: Optional[SeparatrixOutcome] = None

    k = 1
    while True:
        s = k * settings.s_step
        if s >= settings.s_max:
            break
        out = evaluate(s)
        samples.append((s, out))
        if prev_out is not None and out.identity != prev_out.identity:
            intervals.append(
                BifurcationInterval(prev_s, s, prev_out, out, depth=0)
            )
        if out.kind is OutcomeKind.CAPTURE_SAME:
            early_exit_s = s
            break
        prev_s, prev_out = s, out
        k += 1

    non_dissipative = bool(samples) and all(
        o.kind is OutcomeKind.ESCAPE for _, o in samples
    )
    return SweepResult(
        delta=delta,
        beta=beta,
        samples=tuple(samples),
        intervals=tuple(intervals),
        early_exit_s=early_exit_s,
        non_dissipative=non_dissipative,
    )


def _choose_cell(outs: Sequence[SeparatrixOutcome]) -> int:
    """Index of the cell to keep at one refinement level.

    The bifurcation being bracketed is the onset of the family the
    right endpoint belongs to, so find the maximal contiguous run of
    samples sharing the right endpoint's side that ends the row; the
    flip into that run is the sharp edge.  Transitional bands (thin
    chaos, periodic windows) sit to the left and are skipped over.
    When every sample shares the side (a kind-only flip), fall back to
    the last change of full identity.
    """
    target_side = outs[-1].side
    j = len(outs) - 1
    while j > 0 and outs[j - 1].side == target_side:
        j -= 1
    if j == 0:
        target = outs[-1].identity
        j = len(outs) - 1
        while j > 0 and outs[j - 1].identity == target:
            j -= 1
    return j - 1


def refine_interval(
    interval: BifurcationInterval,
    delta: float,
    beta: float,
    settings: ScanSettings = ScanSettings(),
    evaluate: Optional[Evaluator] = None,
) -> BifurcationInterval:
    """Shrink the bracket by repeated ten-fold re-scanning.

    Each level subdivides [s_lo, s_hi] into ten cells and keeps the
    cell where the after-family begins (see _choose_cell).  New chaotic
    identities appearing strictly inside a level earn the
    ``chaotic_transient`` flag.  Stops at the width threshold, at the
    depth cap (``depth_cap`` flag), or when subdivision no longer
    shrinks the bracket in floating point (``resolution_limit`` flag).
    """
    if evaluate is None:
        evaluate = _default_evaluator(delta, beta, settings.run)

    lo, hi = interval.s_lo, interval.s_hi
    out_lo, out_hi = interval.outcome_before, interval.outcome_after
    parent_kinds = {out_lo.kind, out_hi.kind}
    depth = interval.depth
    flags = set(interval.flags)

    while hi - lo > settings.eps_threshold:
        if depth >= settings.max_depth:
            flags.add("depth_cap")
            break
        n_cells = 10
        grid = [lo + (hi - lo) * j / n_cells for j in range(n_cells + 1)]
        grid[0], grid[-1] = lo, hi
        outs = [out_lo] + [evaluate(s) for s in grid[1:-1]] + [out_hi]

        if (
            OutcomeKind.CHAOTIC not in parent_kinds
            and any(o.kind is OutcomeKind.CHAOTIC for o in outs[1:-1])
        ):
            flags.add("chaotic_transient")

        i = _choose_cell(outs)
        if not (grid[i] < grid[i + 1]) or (grid[i], grid[i + 1]) == (lo, hi):
            flags.add("resolution_limit")
            break
        lo, hi = grid[i], grid[i + 1]
        out_lo, out_hi = outs[i], outs[i + 1]
        depth += 1

    return BifurcationInterval(
        s_lo=lo,
        s_hi=hi,
        outcome_before=out_lo,
        outcome_after=out_hi,
        depth=depth,
        flags=tuple(sorted(flags)),
    )


def _match_pattern(
    before: SeparatrixOutcome, after: SeparatrixOutcome
) -> Optional[RegionLabel]:
    b_kind, b_side = before.kind, before.side
    a_kind, a_side = after.kind, after.side
    settles_same = a_side == after.launch_side and a_kind in (
        OutcomeKind.CAPTURE_SAME,
        OutcomeKind.CYCLE_ONE_SIDED,
    )
    if b_kind is OutcomeKind.CAPTURE_OPPOSITE and a_kind is OutcomeKind.CAPTURE_SAME:
        return RegionLabel.SEPARATRIX_SWAP
    if (
        b_kind is OutcomeKind.CYCLE_ONE_SIDED
        and b_side == -before.launch_side
        and settles_same
    ):
        return RegionLabel.CYCLE_SWAP_NEAR_ATTRACTOR
    if b_kind is OutcomeKind.CYCLE_EIGHT and b_side == 0 and settles_same:
        return RegionLabel.EIGHT_CYCLE_SPLIT
    if (
        b_kind is OutcomeKind.CHAOTIC
        and b_side == 0
        and a_kind is OutcomeKind.CHAOTIC
        and a_side != 0
    ):
        return RegionLabel.ATTRACTOR_MERGE
    return None


def classify_region(
    interval: BifurcationInterval,
    sweep: Optional[SweepResult] = None,
) -> RegionLabel:
    """Label the bifurcation pattern the interval brackets.

    The refined endpoints are tried first.  Near a flip the endpoints
    can sit inside transitional slivers (thin chaotic bands, long-period
    windows), so on no match the coarse sweep pair bracketing this
    interval is tried next, and finally a two-sided-to-one-sided chaos
    transition is accepted as an attractor merge even when one endpoint
    reads as a long-period eight: at the merging point the two families
    are numerically indistinguishable.
    """
    label = _match_pattern(interval.outcome_before, interval.outcome_after)
    if label is not None:
        return label

    if sweep is not None:
        bracket = _sweep_bracket(interval, sweep)
        if bracket is not None:
            label = _match_pattern(*bracket)
            if label is not None:
                return label

    before, after = interval.outcome_before, interval.outcome_after
    two_sided_before = before.side == 0 and before.kind in (
        OutcomeKind.CHAOTIC,
        OutcomeKind.CYCLE_EIGHT,
    )
    if (
        two_sided_before
        and after.kind is OutcomeKind.CHAOTIC
        and after.side != 0
    ):
        return RegionLabel.ATTRACTOR_MERGE
    return RegionLabel.UNCLASSIFIED


def _sweep_bracket(interval, sweep):
    lo_out = None
    hi_out = None
    for s, out in sweep.samples:
        if s <= interval.s_lo:
            lo_out = out
        if s >= interval.s_hi and hi_out is None:
            hi_out = out
    if lo_out is None or hi_out is None:
        return None
    if lo_out.identity == hi_out.identity:
        return None
    return lo_out, hi_out


def merge_split_signature(
    point: PathPoint, run: RunSettings = RunSettings()
) -> str:
    """'merged' / 'split' / 'undecided' for a chaotic limit set.

    Merged means the limit trajectory keeps visiting both half-spaces
    (recurrent sign changes of x); split means it stays confined to one
    side.  Sparse or absent recurrence with no confinement verdict is
    'undecided'.  Raises if the limit set is not chaotic-like.
    """
    outcome = run_separatrix(point, run).outcome
    if outcome.kind not in (OutcomeKind.CHAOTIC, OutcomeKind.CYCLE_EIGHT):
        raise ValueError(
            f"merge/split signature needs a chaotic or two-sided limit set, "
            f"got {outcome.kind.value}"
        )
    if outcome.kind is OutcomeKind.CYCLE_EIGHT:
        return "merged"
    if outcome.side == 0 and outcome.n_sign_changes >= 10:
        return "merged"
    if outcome.side != 0 and outcome.n_sign_changes == 0:
        return "split"
    return "undecided"


def _select_candidate(sweep: SweepResult) -> Optional[BifurcationInterval]:
    """Pick the interval worth refining: the onset of the terminal family.

    After the flip the branch stays on the side it settled on (possibly
    changing kind: cycle shrinking into a capture), so the flip is where
    the maximal trailing run of samples sharing the final side begins.
    Transitional windows earlier in the sweep break such runs and are
    skipped.  When every sample shares one side, fall back to the last
    recorded flip.
    """
    if not sweep.intervals:
        return None
    samples = sweep.samples
    target_side = samples[-1][1].side
    j = len(samples) - 1
    while j > 0 and samples[j - 1][1].side == target_side:
        j -= 1
    if j == 0:
        return sweep.intervals[-1]
    onset_lo = samples[j - 1][0]
    for iv in sweep.intervals:
        if iv.s_lo == onset_lo:
            return iv
    return sweep.intervals[-1]


def region_scan(
    delta: float,
    beta: float,
    settings: ScanSettings = ScanSettings(),
    evaluate: Optional[Evaluator] = None,
) -> RegionScanResult:
    # beyond the wedge beta < 2 + delta the volume balance cannot favor
    # contraction and there is nothing to sweep
    if beta >= 2.0 + delta:
        empty = SweepResult(
            delta=delta, beta=beta, samples=(), intervals=(),
            early_exit_s=None, non_dissipative=True,
        )
        return RegionScanResult(delta, beta, RegionLabel.NON_DISSIPATIVE, empty, None)
    if evaluate is None:
        evaluate = _default_evaluator(delta, beta, settings.run)
    sweep = sweep_s(delta, beta, settings, evaluate)
    if sweep.non_dissipative:
        return RegionScanResult(delta, beta, RegionLabel.NON_DISSIPATIVE, sweep, None)
    candidate = _select_candidate(sweep)
    if candidate is None:
        return RegionScanResult(delta, beta, RegionLabel.UNCLASSIFIED, sweep, None)
    refined = refine_interval(candidate, delta, beta, settings, evaluate)
    label = classify_region(refined, sweep)
    return RegionScanResult(delta, beta, label, sweep, refined)


def scan_grid(
    deltas: Sequence[float],
    betas: Sequence[float],
    settings: ScanSettings = ScanSettings(),
    n_threads: int = 1,
    evaluate_factory: Optional[Callable[[float, float], Evaluator]] = None,
) -> list:
    """Region-scan every (delta, beta) pair, row-major in the inputs.

    Grid points are independent; they may run on a thread pool.  The
    result order (and content) is independent of n_threads.
    ``evaluate_factory(delta, beta)`` may supply a replacement outcome
    evaluator per grid point.
    """
    if n_threads < 1:
        raise ValueError("n_threads must be >= 1")
    points = [(d, b) for d in deltas for b in betas]

    def one(d: float, b: float) -> RegionScanResult:
        ev = evaluate_factory(d, b) if evaluate_factory is not None else None
        return region_scan(d, b, settings, ev)

    if n_threads == 1:
        return [one(d, b) for d, b in points]
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        futures = [pool.submit(one, d, b) for d, b in points]
        return [f.result() for f in futures]


_CSV_COLUMNS = [
    "delta",
    "beta",
    "region_label",
    "s_lo",
    "s_hi",
    "outcome_before",
    "outcome_after",
    "refinement_depth",
    "flags",
]


def _fmt(x: float) -> str:
    return "%.17g" % x


def _outcome_token(o: Optional[SeparatrixOutcome]) -> str:
    if o is None:
        return ""
    return f"{o.kind.value}:{o.side:+d}"


def write_scan_csv(results: Sequence[RegionScanResult], stream: io.TextIOBase) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(_CSV_COLUMNS)
    for r in results:
        iv = r.interval
        w.writerow(
            [
                _fmt(r.delta),
                _fmt(r.beta),
                str(r.label),
                _fmt(iv.s_lo) if iv else "",
                _fmt(iv.s_hi) if iv else "",
                _outcome_token(iv.outcome_before if iv else None),
                _outcome_token(iv.outcome_after if iv else None),
                iv.depth if iv else "",
                "|".join(iv.flags) if iv else "",
            ]
        )


def scan_manifest(
    deltas: Sequence[float],
    betas: Sequence[float],
    settings: ScanSettings,
    n_threads: int = 1,
) -> str:
    """JSON echo of every knob that influenced a scan, for reproducibility."""
    scan_knobs = asdict(settings)
    run_knobs = scan_knobs.pop("run")
    doc = {
        "grid": {"deltas": list(deltas), "betas": list(betas)},
        "scan": scan_knobs,
        "run": run_knobs,
        "n_threads": n_threads,
    }
    return json.dumps(doc, indent=2, sort_keys=True)
