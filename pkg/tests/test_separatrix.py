import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lorenzkit.integrate import integrate
from lorenzkit.model import (
    LorenzParams,
    PathPoint,
    lorenz_to_lorenzlike,
    path_params,
    rhs,
    saddle_data,
    symmetry_image,
)
from lorenzkit.separatrix import (
    _LIMIT_EXTRA_EVENTS,
    _standard_events,
    OutcomeKind,
    RunSettings,
    SeparatrixOutcome,
    classify_limit_set,
    focus_separatrix_seeds,
    run_separatrix,
    seed_separatrix,
)

SETTINGS = RunSettings()


def test_seed_matches_outgoing_eigenvector():
    # at s=0 the outgoing eigenvalue is 1, so the eigenvector is (1,1,0)/sqrt(2)
    seed = seed_separatrix(PathPoint(1.0, 0.5, 0.0), sign=1, offset=1e-6)
    assert_allclose(seed, [1e-6 / math.sqrt(2), 1e-6 / math.sqrt(2), 0.0], rtol=1e-15)


def test_seed_mirror_symmetry():
    pt = PathPoint(0.9, 0.2, 0.05)
    plus = seed_separatrix(pt, sign=1)
    minus = seed_separatrix(pt, sign=-1)
    assert np.array_equal(minus, symmetry_image(plus))


def test_seed_points_outward():
    # the flow at the seed must carry it away from the saddle along the
    # outgoing direction, for both branches
    pt = PathPoint(0.5, 2.2, 0.43)
    p = path_params(pt)
    sd = saddle_data(pt)
    for sign in (1, -1):
        seed = seed_separatrix(pt, sign=sign)
        assert float(rhs(p, seed) @ (sign * sd.v_u)) > 0


def test_seed_validation():
    pt = PathPoint(0.9, 0.2, 0.05)
    with pytest.raises(ValueError):
        seed_separatrix(pt, sign=0)
    with pytest.raises(ValueError):
        seed_separatrix(pt, offset=0.0)
    with pytest.raises(ValueError):
        seed_separatrix(pt, offset=float("nan"))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"t_trans": 0.0},
        {"t_lim": -1.0},
        {"eps_eq": 1.5},
        {"seed_offset": 0.2},  # must stay below eps_eq
        {"r_inf": 1.0},
        {"chaos_threshold": float("inf")},
        {"capture_dwell": 0.0},
    ],
)
def test_run_settings_validation(kwargs):
    with pytest.raises(ValueError):
        RunSettings(**kwargs)


def test_settings_integrator_mapping():
    s = RunSettings(rel_tol=1e-10, abs_tol=1e-11, max_step=0.2)
    cfg = s.integrator(500.0)
    assert cfg.max_time == 500.0
    assert cfg.rel_tol == 1e-10
    assert cfg.abs_tol == 1e-11
    assert cfg.max_step == 0.2


def test_escape_at_path_start():
    # with lam = 0 there is no dissipation along the orbit's fast direction
    # and the branch runs off to the escape sphere
    o = run_separatrix(PathPoint(0.9, 0.2, 0.0), SETTINGS).outcome
    assert o.kind is OutcomeKind.ESCAPE
    assert o.side == 0
    assert o.capture_time == pytest.approx(353.855, abs=1.0)


def test_figure_eight_cycle():
    o = run_separatrix(PathPoint(0.9, 0.2, 0.05), SETTINGS).outcome
    assert o.kind is OutcomeKind.CYCLE_EIGHT
    assert o.side == 0
    assert o.period == pytest.approx(11.4837, abs=0.05)
    assert o.n_sign_changes > 100
    assert abs(o.le1) < SETTINGS.chaos_threshold


def test_one_sided_cycle_after_flip():
    o = run_separatrix(PathPoint(0.9, 0.2, 0.0605), SETTINGS).outcome
    assert o.identity == (OutcomeKind.CYCLE_ONE_SIDED, 1)


def test_capture_near_weakly_attracting_focus():
    # the spiral-in is slow here, so this doubles as a check that the capture
    # ball does not fire on the long approach
    o = run_separatrix(PathPoint(0.9, 0.2, 0.065), SETTINGS).outcome
    assert o.identity == (OutcomeKind.CAPTURE_SAME, 1)
    assert o.capture_time == pytest.approx(2933.0, abs=2.0)


def test_cycle_swap_pair():
    lo = run_separatrix(PathPoint(0.5, 2.2, 0.80), SETTINGS).outcome
    hi = run_separatrix(PathPoint(0.5, 2.2, 0.81), SETTINGS).outcome
    assert lo.identity == (OutcomeKind.CYCLE_ONE_SIDED, -1)
    assert hi.identity == (OutcomeKind.CYCLE_ONE_SIDED, 1)


def test_chaotic_two_sided():
    o = run_separatrix(PathPoint(0.9, 2.899, 0.83), SETTINGS).outcome
    assert o.kind is OutcomeKind.CHAOTIC
    assert o.side == 0
    assert o.le1 > SETTINGS.chaos_threshold
    assert o.n_sign_changes >= 10


def test_mirror_run_is_exact_image():
    # the flow commutes with (x, v, u) -> (-x, -v, u) and every floating-point
    # operation involved respects negation exactly, so the two branches are
    # bit-for-bit mirror images
    pt = PathPoint(0.9, 2.899, 0.83)
    plus = run_separatrix(pt, SETTINGS, sign=1).outcome
    minus = run_separatrix(pt, SETTINGS, sign=-1).outcome
    assert minus.kind is plus.kind
    assert minus.side == -plus.side
    assert minus.le1 == plus.le1
    assert minus.n_sign_changes == plus.n_sign_changes
    assert np.array_equal(minus.final_state, symmetry_image(plus.final_state))


def test_transient_pass_is_not_capture():
    # here the nonzero equilibria are strongly unstable foci; a wandering
    # orbit still dips inside the capture ball, and only the dwell check
    # keeps that from reading as a capture
    o = run_separatrix(PathPoint(0.5, 2.2, 0.43), SETTINGS).outcome
    assert o.kind is OutcomeKind.CHAOTIC
    assert o.side == 0
    assert "transient_capture_rejected" in o.flags


def test_lorenz_corner_capture():
    p = lorenz_to_lorenzlike(LorenzParams(sigma=10.0, r=13.5, b=8.0 / 3.0))
    o = run_separatrix(p, SETTINGS).outcome
    assert o.identity == (OutcomeKind.CAPTURE_SAME, 1)
    assert o.capture_time == pytest.approx(98.34, abs=0.5)


def test_settled_inside_ball():
    # a state already inside the capture ball never produces a falling
    # crossing; the classifier must still call it captured
    pt = PathPoint(0.387, 1.7333, 0.61)
    p = path_params(pt)
    events = _standard_events(p, SETTINGS) + _LIMIT_EXTRA_EVENTS
    traj = integrate(p, [1.01, 0.0, 0.0], SETTINGS.integrator(50.0), events, store="last")
    assert traj.termination == "time"
    o = classify_limit_set(traj, pt, SETTINGS, launch_side=1)
    assert o.identity == (OutcomeKind.CAPTURE_SAME, 1)
    assert "settled_inside_ball" in o.flags


def test_outcome_identity_and_mirrored():
    o = SeparatrixOutcome(
        kind=OutcomeKind.CAPTURE_SAME, side=1, launch_side=1,
        final_state=np.array([1.0, 0.1, 0.2]), capture_time=5.0,
    )
    assert o.identity == (OutcomeKind.CAPTURE_SAME, 1)
    m = o.mirrored()
    assert m.kind is OutcomeKind.CAPTURE_SAME  # relative label is side-blind
    assert m.side == -1
    assert m.launch_side == -1
    assert np.array_equal(m.final_state, symmetry_image(o.final_state))


def test_focus_seeds_mirror_layout():
    seeds = focus_separatrix_seeds(PathPoint(0.5, 2.2, 0.43))
    assert len(seeds) == 4
    assert np.array_equal(seeds[2], symmetry_image(seeds[0]))
    assert np.array_equal(seeds[3], symmetry_image(seeds[1]))
    # opposite directions from the same equilibrium
    eq = np.array([1.0, 0.0, 0.0])
    assert_allclose(seeds[0] - eq, -(seeds[1] - eq), rtol=1e-12)


def test_focus_seeds_require_unstable_focus():
    with pytest.raises(ValueError):
        focus_separatrix_seeds(PathPoint(0.387, 1.7333, 0.61))


def test_describe_smoke():
    o = run_separatrix(PathPoint(0.5, 2.2, 0.80), SETTINGS).outcome
    text = o.describe()
    assert OutcomeKind.CYCLE_ONE_SIDED.value in text
    assert "period" in text


def test_run_deterministic():
    a = run_separatrix(PathPoint(0.5, 2.2, 0.80), SETTINGS).outcome
    b = run_separatrix(PathPoint(0.5, 2.2, 0.80), SETTINGS).outcome
    assert a.identity == b.identity
    assert a.le1 == b.le1
    assert np.array_equal(a.final_state, b.final_state)
