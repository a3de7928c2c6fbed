import io
import json
import math
from bisect import bisect_right

import numpy as np
import pytest

from lorenzkit.model import PathPoint
from lorenzkit.scan import (
    BifurcationInterval,
    RegionLabel,
    ScanSettings,
    SweepResult,
    classify_region,
    merge_split_signature,
    refine_interval,
    region_scan,
    scan_grid,
    scan_manifest,
    sweep_s,
    write_scan_csv,
)
from lorenzkit.separatrix import OutcomeKind, RunSettings, SeparatrixOutcome

# ---------------------------------------------------------------- synthetic

ESCAPE = OutcomeKind.ESCAPE
CAP_SAME = OutcomeKind.CAPTURE_SAME
CAP_OPP = OutcomeKind.CAPTURE_OPPOSITE
CYCLE1 = OutcomeKind.CYCLE_ONE_SIDED
EIGHT = OutcomeKind.CYCLE_EIGHT
CHAOS = OutcomeKind.CHAOTIC


def out(kind, side, launch=1):
    return SeparatrixOutcome(
        kind=kind, side=side, launch_side=launch, final_state=np.zeros(3)
    )


def step_evaluator(breaks, outcomes, calls=None):
    """Piecewise-constant outcome of s: outcomes[i] on [breaks[i-1], breaks[i])."""
    assert len(outcomes) == len(breaks) + 1

    def evaluate(s):
        if calls is not None:
            calls.append(s)
        return outcomes[bisect_right(breaks, s)]

    return evaluate


def test_sweep_records_every_flip():
    ev = step_evaluator(
        [0.25, 0.5, 0.75],
        [out(EIGHT, 0), out(CYCLE1, -1), out(CYCLE1, 1), out(CAP_SAME, 1)],
    )
    sw = sweep_s(0.5, 1.0, ScanSettings(s_step=0.1, s_max=0.95), ev)
    assert [iv.outcome_before.kind for iv in sw.intervals] == [EIGHT, CYCLE1, CYCLE1]
    assert [iv.outcome_after.kind for iv in sw.intervals] == [CYCLE1, CYCLE1, CAP_SAME]
    assert [(iv.s_lo, iv.s_hi) for iv in sw.intervals] == [
        (2 * 0.1, 3 * 0.1),
        (4 * 0.1, 5 * 0.1),   # s=0.5 lands exactly on the break, right side
        (7 * 0.1, 8 * 0.1),
    ]
    assert sw.early_exit_s == 8 * 0.1
    assert not sw.non_dissipative


def test_sweep_constant_outcome_has_no_intervals():
    sw = sweep_s(0.5, 1.0, ScanSettings(s_step=0.2, s_max=0.9),
                 step_evaluator([], [out(CYCLE1, -1)]))
    assert sw.intervals == ()
    assert sw.early_exit_s is None
    assert len(sw.samples) == 4


def test_sweep_all_escape_is_non_dissipative():
    sw = sweep_s(0.1, 2.05, ScanSettings(s_step=0.2, s_max=0.9),
                 step_evaluator([], [out(ESCAPE, 0)]))
    assert sw.non_dissipative
    assert sw.intervals == ()


def test_sweep_early_exit_stops_evaluating():
    calls = []
    ev = step_evaluator([0.25], [out(EIGHT, 0), out(CAP_SAME, 1)], calls)
    sw = sweep_s(0.5, 1.0, ScanSettings(s_step=0.1, s_max=0.95), ev)
    assert sw.early_exit_s == pytest.approx(0.3)
    assert calls == [0.1, 0.2, pytest.approx(0.30000000000000004)]
    assert len(sw.samples) == 3


def test_refine_converges_onto_break():
    brk = math.pi / 10  # 0.3141592...
    ev = step_evaluator([brk], [out(EIGHT, 0), out(CYCLE1, 1)])
    start = BifurcationInterval(0.3, 0.4, out(EIGHT, 0), out(CYCLE1, 1))
    iv = refine_interval(start, 0.5, 1.0, ScanSettings(eps_threshold=1e-9), ev)
    assert iv.width <= 1e-9
    assert iv.s_lo <= brk <= iv.s_hi
    assert start.contains(iv)
    assert iv.outcome_before.identity == (EIGHT, 0)
    assert iv.outcome_after.identity == (CYCLE1, 1)
    assert iv.flags == ()


def test_refine_intervals_nest_with_depth():
    brk = 1 / 3
    ev = step_evaluator([brk], [out(CAP_OPP, -1), out(CAP_SAME, 1)])
    start = BifurcationInterval(0.3, 0.4, out(CAP_OPP, -1), out(CAP_SAME, 1))
    prev = start
    for depth in range(1, 6):
        iv = refine_interval(
            start, 0.5, 1.0,
            ScanSettings(eps_threshold=1e-30, max_depth=depth), ev,
        )
        assert prev.contains(iv)
        assert iv.s_lo <= brk <= iv.s_hi
        prev = iv


def test_refine_depth_cap_flag():
    ev = step_evaluator([1 / 3], [out(EIGHT, 0), out(CYCLE1, 1)])
    start = BifurcationInterval(0.3, 0.4, out(EIGHT, 0), out(CYCLE1, 1))
    iv = refine_interval(
        start, 0.5, 1.0, ScanSettings(eps_threshold=1e-30, max_depth=3), ev
    )
    assert "depth_cap" in iv.flags
    assert iv.depth == 3
    assert iv.width == pytest.approx(0.1 * 1e-3)


def test_refine_resolution_limit_flag():
    # 60 decades below an O(0.1) interval is far past double spacing, so the
    # refiner must stop when subdivision no longer separates the endpoints
    ev = step_evaluator([1 / 3], [out(EIGHT, 0), out(CYCLE1, 1)])
    start = BifurcationInterval(0.3, 0.4, out(EIGHT, 0), out(CYCLE1, 1))
    iv = refine_interval(
        start, 0.5, 1.0, ScanSettings(eps_threshold=1e-300, max_depth=60), ev
    )
    assert "resolution_limit" in iv.flags
    assert iv.s_lo < 1 / 3 < iv.s_hi or iv.s_lo <= 1 / 3 <= iv.s_hi
    assert iv.width < 1e-14


def test_refine_flags_interior_chaotic_band():
    # a thin chaotic band between the eight and the one-sided cycle: the
    # refiner should keep homing in on the side flip and flag the band
    ev = step_evaluator(
        [0.31, 0.315],
        [out(EIGHT, 0), out(CHAOS, 0), out(CYCLE1, 1)],
    )
    start = BifurcationInterval(0.3, 0.4, out(EIGHT, 0), out(CYCLE1, 1))
    iv = refine_interval(start, 0.5, 1.0, ScanSettings(eps_threshold=1e-9), ev)
    assert "chaotic_transient" in iv.flags
    assert iv.s_lo <= 0.315 <= iv.s_hi
    assert iv.width <= 1e-9


def test_refine_tracks_side_onset_not_later_kind_change():
    # the cycle born at 0.31 shrinks into a capture at 0.35; the bracketed
    # bifurcation is the side flip at 0.31, not the same-side kind change
    ev = step_evaluator(
        [0.31, 0.35],
        [out(EIGHT, 0), out(CYCLE1, 1), out(CAP_SAME, 1)],
    )
    start = BifurcationInterval(0.3, 0.4, out(EIGHT, 0), out(CAP_SAME, 1))
    iv = refine_interval(start, 0.5, 1.0, ScanSettings(eps_threshold=1e-9), ev)
    assert iv.s_lo <= 0.31 <= iv.s_hi
    assert iv.width <= 1e-9
    assert iv.outcome_after.identity == (CYCLE1, 1)


def test_refine_kind_only_flip_uses_identity_change():
    ev = step_evaluator([0.35], [out(CYCLE1, 1), out(CAP_SAME, 1)])
    start = BifurcationInterval(0.3, 0.4, out(CYCLE1, 1), out(CAP_SAME, 1))
    iv = refine_interval(start, 0.5, 1.0, ScanSettings(eps_threshold=1e-9), ev)
    assert iv.s_lo <= 0.35 <= iv.s_hi
    assert iv.width <= 1e-9


def test_interval_validation():
    with pytest.raises(ValueError):
        BifurcationInterval(0.4, 0.3, out(EIGHT, 0), out(CYCLE1, 1))
    with pytest.raises(ValueError):
        BifurcationInterval(0.3, 0.4, out(EIGHT, 0), out(EIGHT, 0))
    a = BifurcationInterval(0.3, 0.4, out(EIGHT, 0), out(CYCLE1, 1))
    b = BifurcationInterval(0.32, 0.33, out(EIGHT, 0), out(CYCLE1, 1))
    assert a.contains(b) and not b.contains(a)
    assert a.width == pytest.approx(0.1)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"s_step": 0.0},
        {"s_step": 0.6},
        {"eps_threshold": 0.0},
        {"s_max": 1.0},
        {"max_depth": 0},
        {"max_depth": 2.5},
    ],
)
def test_scan_settings_validation(kwargs):
    with pytest.raises(ValueError):
        ScanSettings(**kwargs)


# ------------------------------------------------------------ classification


def classify(before, after, sweep=None):
    return classify_region(
        BifurcationInterval(0.4, 0.5, before, after), sweep
    )


def test_classify_capture_swap():
    assert classify(out(CAP_OPP, -1), out(CAP_SAME, 1)) is RegionLabel.SEPARATRIX_SWAP


def test_classify_eight_split():
    assert classify(out(EIGHT, 0), out(CYCLE1, 1)) is RegionLabel.EIGHT_CYCLE_SPLIT
    assert classify(out(EIGHT, 0), out(CAP_SAME, 1)) is RegionLabel.EIGHT_CYCLE_SPLIT


def test_classify_cycle_swap():
    assert (
        classify(out(CYCLE1, -1), out(CYCLE1, 1))
        is RegionLabel.CYCLE_SWAP_NEAR_ATTRACTOR
    )
    assert (
        classify(out(CYCLE1, -1), out(CAP_SAME, 1))
        is RegionLabel.CYCLE_SWAP_NEAR_ATTRACTOR
    )


def test_classify_attractor_merge():
    assert classify(out(CHAOS, 0), out(CHAOS, 1)) is RegionLabel.ATTRACTOR_MERGE
    assert classify(out(CHAOS, 0), out(CHAOS, -1)) is RegionLabel.ATTRACTOR_MERGE


def test_classify_falls_back_to_sweep_bracket():
    # refined endpoints sit inside a transitional chaotic sliver; the sweep
    # pair spanning the interval still identifies the eight-cycle split
    sweep = SweepResult(
        delta=0.9, beta=0.2,
        samples=(
            (0.3, out(EIGHT, 0)),
            (0.4, out(EIGHT, 0)),
            (0.5, out(CYCLE1, 1)),
            (0.6, out(CAP_SAME, 1)),
        ),
        intervals=(), early_exit_s=None, non_dissipative=False,
    )
    label = classify_region(
        BifurcationInterval(0.44, 0.45, out(CHAOS, 0), out(CYCLE1, 1)), sweep
    )
    assert label is RegionLabel.EIGHT_CYCLE_SPLIT


def test_classify_merge_with_eight_like_endpoint():
    # at a merge point the two-sided chaotic set can read as a very long
    # period eight on one endpoint
    assert classify(out(EIGHT, 0), out(CHAOS, 1)) is RegionLabel.ATTRACTOR_MERGE


def test_classify_unmatched_is_unclassified():
    assert classify(out(ESCAPE, 0), out(CAP_SAME, 1)) is RegionLabel.UNCLASSIFIED
    assert classify(out(CAP_SAME, 1), out(CYCLE1, -1)) is RegionLabel.UNCLASSIFIED


# ----------------------------------------------------------- region pipeline


def test_region_scan_red_pattern_pipeline():
    settings = ScanSettings(s_step=0.05, eps_threshold=1e-9, s_max=0.99)
    ev = step_evaluator(
        [0.3, 0.62, 0.71, 0.8],
        [
            out(ESCAPE, 0),
            out(CHAOS, 0),
            out(CYCLE1, -1),
            out(CYCLE1, 1),
            out(CAP_SAME, 1),
        ],
    )
    res = region_scan(0.5, 2.2, settings, ev)
    assert res.label is RegionLabel.CYCLE_SWAP_NEAR_ATTRACTOR
    assert res.interval.s_lo <= 0.71 <= res.interval.s_hi
    assert res.interval.width <= 1e-9
    assert res.sweep.early_exit_s == pytest.approx(0.8)


def test_region_scan_candidate_skips_transient_windows():
    # a one-sided-cycle window inside the chaos must not distract the
    # refiner from the terminal settling at 0.8
    ev = step_evaluator(
        [0.3, 0.5, 0.55, 0.8],
        [
            out(ESCAPE, 0),
            out(CHAOS, 0),
            out(CYCLE1, 1),   # transient window, breaks off again
            out(CHAOS, 0),
            out(CAP_SAME, 1),
        ],
    )
    res = region_scan(0.5, 2.2, ScanSettings(s_step=0.05, eps_threshold=1e-9), ev)
    assert res.interval.s_lo <= 0.8 <= res.interval.s_hi


def test_region_scan_non_dissipative_point():
    ev = step_evaluator([], [out(ESCAPE, 0)])
    res = region_scan(0.1, 2.05, ScanSettings(s_step=0.2), ev)
    assert res.label is RegionLabel.NON_DISSIPATIVE
    assert res.interval is None


def test_region_scan_outside_wedge_short_circuits():
    calls = []
    ev = step_evaluator([], [out(ESCAPE, 0)], calls)
    res = region_scan(0.5, 2.6, ScanSettings(), ev)
    assert res.label is RegionLabel.NON_DISSIPATIVE
    assert res.sweep.non_dissipative
    assert res.sweep.samples == ()
    assert calls == []


def test_region_scan_no_flip_is_unclassified():
    ev = step_evaluator([], [out(CYCLE1, -1)])
    res = region_scan(0.5, 1.0, ScanSettings(s_step=0.2), ev)
    assert res.label is RegionLabel.UNCLASSIFIED
    assert res.interval is None


# -------------------------------------------------------------- grid and IO


def synthetic_factory(delta, beta):
    # label depends on beta so the grid has distinguishable rows
    if beta < 1.0:
        return step_evaluator([0.4], [out(EIGHT, 0), out(CYCLE1, 1)])
    return step_evaluator([0.4], [out(CAP_OPP, -1), out(CAP_SAME, 1)])


def test_scan_grid_row_major_order_and_thread_equivalence():
    settings = ScanSettings(s_step=0.1, eps_threshold=1e-6, s_max=0.9)
    deltas, betas = [0.4, 0.9], [0.5, 1.5]
    seq = scan_grid(deltas, betas, settings, n_threads=1,
                    evaluate_factory=synthetic_factory)
    par = scan_grid(deltas, betas, settings, n_threads=3,
                    evaluate_factory=synthetic_factory)
    assert [(r.delta, r.beta) for r in seq] == [
        (0.4, 0.5), (0.4, 1.5), (0.9, 0.5), (0.9, 1.5)
    ]
    assert [r.label for r in seq] == [
        RegionLabel.EIGHT_CYCLE_SPLIT,
        RegionLabel.SEPARATRIX_SWAP,
        RegionLabel.EIGHT_CYCLE_SPLIT,
        RegionLabel.SEPARATRIX_SWAP,
    ]
    assert [(r.delta, r.beta, r.label) for r in par] == [
        (r.delta, r.beta, r.label) for r in seq
    ]
    for a, b in zip(seq, par):
        assert (a.interval.s_lo, a.interval.s_hi) == (b.interval.s_lo, b.interval.s_hi)


def test_scan_grid_rejects_bad_thread_count():
    with pytest.raises(ValueError):
        scan_grid([0.5], [1.0], n_threads=0)


def test_csv_round_trip():
    settings = ScanSettings(s_step=0.1, eps_threshold=1e-6, s_max=0.9)
    results = scan_grid([0.4], [0.5, 1.5], settings,
                        evaluate_factory=synthetic_factory)
    buf = io.StringIO()
    write_scan_csv(results, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == (
        "delta,beta,region_label,s_lo,s_hi,outcome_before,outcome_after,"
        "refinement_depth,flags"
    )
    assert len(lines) == 3
    row = lines[1].split(",")
    assert row[0] == "0.40000000000000002"
    assert row[2] == "EightCycleSplit"
    assert row[5] == "LimitCycleEight:+0"
    assert row[6] == "LimitCycleOneSided:+1"
    # endpoints parse back to floats bracketing the break
    assert float(row[3]) <= 0.4 <= float(row[4])


def test_csv_row_without_interval_has_empty_fields():
    res = region_scan(0.5, 2.6, ScanSettings())
    buf = io.StringIO()
    write_scan_csv([res], buf)
    row = buf.getvalue().splitlines()[1].split(",")
    assert row[2] == "NonDissipative"
    assert row[3] == row[4] == row[5] == row[6] == row[7] == row[8] == ""


def test_manifest_echoes_all_knobs():
    settings = ScanSettings(s_step=0.005, eps_threshold=1e-6,
                            run=RunSettings(t_trans=3000.0))
    doc = json.loads(scan_manifest([0.4, 0.9], [0.5], settings, n_threads=2))
    assert doc["grid"] == {"deltas": [0.4, 0.9], "betas": [0.5]}
    assert doc["scan"]["s_step"] == 0.005
    assert doc["scan"]["eps_threshold"] == 1e-6
    assert doc["run"]["t_trans"] == 3000.0
    assert doc["run"]["capture_dwell"] == 100.0
    assert doc["n_threads"] == 2


# ------------------------------------------------------------ real dynamics


def test_mini_scan_eight_split_real():
    # coarse end-to-end scan across the known split near s = 0.0601
    settings = ScanSettings(s_step=0.02, eps_threshold=1e-3, s_max=0.09)
    res = region_scan(0.9, 0.2, settings)
    assert res.label is RegionLabel.EIGHT_CYCLE_SPLIT
    assert res.interval.s_lo <= 0.0601315 <= res.interval.s_hi
    assert res.interval.width <= 1e-3


def test_mini_scan_capture_swap_real():
    settings = ScanSettings(s_step=0.05, eps_threshold=1e-3, s_max=0.7)
    res = region_scan(0.387, 1.7333, settings)
    assert res.label is RegionLabel.SEPARATRIX_SWAP
    assert res.interval.s_lo <= 0.606591 <= res.interval.s_hi
    assert res.interval.width <= 1e-3


def test_merge_split_signature_real():
    assert merge_split_signature(PathPoint(0.9, 2.899, 0.83)) == "merged"
    # the eight reads as merged recurrence too
    assert merge_split_signature(PathPoint(0.9, 0.2, 0.05)) == "merged"
    with pytest.raises(ValueError):
        merge_split_signature(PathPoint(0.5, 2.2, 0.80))
