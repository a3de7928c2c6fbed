"""Seed and track the saddle's one-dimensional outgoing separatrices and
classify where they end up.

A run has two legs: a transient leg that watches only for capture into a
small ball around one of the nonzero equilibria or escape through a large
sphere, and (if neither fires) a limit leg over which the surviving set is
classified as a periodic cycle or a chaotic set using a finite-time Lyapunov
exponent plus the pattern of sign changes of x.

Entering a capture ball is not by itself proof of settling: a chaotic
excursion can pass within ``eps_eq`` of a strongly unstable focus and leave
again.  Capture hits are therefore validated by a short dwell — the orbit is
followed a little longer with the capture spheres disarmed, and the hit only
counts when it is still near the same equilibrium at two checkpoints.
Rejected hits resume the leg where the dwell ended.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Union

import numpy as np

from .integrate import EventSpec, IntegratorConfig, Trajectory, integrate
from .lyapunov import ftle
from .model import (
    PathPoint,
    SaddleData,
    SystemParams,
    equilibria,
    path_params,
    saddle_data,
    symmetry_image,
)

__all__ = [
    "OutcomeKind",
    "RunSettings",
    "SeparatrixOutcome",
    "SeparatrixRun",
    "seed_separatrix",
    "run_separatrix",
    "classify_limit_set",
    "focus_separatrix_seeds",
]

ParamsLike = Union[PathPoint, SystemParams]


class OutcomeKind(str, Enum):
    ESCAPE = "EscapeToInfinity"
    CAPTURE_SAME = "CaptureSameSide"
    CAPTURE_OPPOSITE = "CaptureOppositeSide"
    CYCLE_ONE_SIDED = "LimitCycleOneSided"
    CYCLE_EIGHT = "LimitCycleEight"
    CHAOTIC = "ChaoticOrUndecided"

    def __str__(self) -> str:  # CSV-friendly
        return self.value


_CAPTURE_KINDS = (OutcomeKind.CAPTURE_SAME, OutcomeKind.CAPTURE_OPPOSITE)


@dataclass(frozen=True)
class RunSettings:
    """Horizons, event radii, solver tolerances, and classification knobs."""

    t_trans: float = 4e3
    t_lim: float = 1e3
    r_inf: float = 100.0
    eps_eq: float = 0.1
    seed_offset: float = 1e-6
    chaos_threshold: float = 5e-3
    rel_tol: float = 1e-12
    abs_tol: float = 1e-12
    max_step: float = 0.1
    reorth_dt: float = 0.5
    capture_dwell: float = 100.0

    def __post_init__(self):
        for name in ("t_trans", "t_lim", "r_inf", "eps_eq", "seed_offset",
                     "chaos_threshold", "rel_tol", "abs_tol", "max_step", "reorth_dt",
                     "capture_dwell"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if self.eps_eq >= 1.0:
            raise ValueError("eps_eq must be < 1 (capture balls may not reach the saddle)")
        if self.seed_offset >= self.eps_eq:
            raise ValueError("seed_offset must be smaller than eps_eq")
        if self.r_inf <= 2.0:
            raise ValueError("r_inf must exceed the scale of the equilibria")

    def integrator(self, max_time: float) -> IntegratorConfig:
        return IntegratorConfig(
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
            max_step=self.max_step,
            max_time=max_time,
        )


@dataclass(frozen=True, eq=False)
class SeparatrixOutcome:
    """Classified fate of one separatrix branch.

    ``side`` locates the limit set: -1 / +1 for sets confined to one half
    of phase space (sign of x), 0 for sets visiting both halves, escapes,
    and undecided cases.  Capture kinds are relative to ``launch_side``.
    """

    kind: OutcomeKind
    side: int
    launch_side: int
    final_state: np.ndarray
    le1: Optional[float] = None
    period: Optional[float] = None
    capture_time: Optional[float] = None
    n_sign_changes: int = 0
    flags: tuple = ()

    @property
    def identity(self) -> tuple:
        """What outcome-flip detection compares: the kind plus the side."""
        return (self.kind, self.side)

    def mirrored(self) -> "SeparatrixOutcome":
        """The outcome of the mirror-image branch (sides negated, relative
        capture labels unchanged)."""
        return replace(
            self,
            side=-self.side,
            launch_side=-self.launch_side,
            final_state=symmetry_image(self.final_state),
        )

    def describe(self) -> str:
        bits = [self.kind.value]
        if self.kind in _CAPTURE_KINDS:
            bits.append(f"equilibrium x={'+1' if self.side > 0 else '-1'}")
            if self.capture_time is not None:
                bits.append(f"t={self.capture_time:.6g}")
        elif self.kind is OutcomeKind.CYCLE_ONE_SIDED:
            bits.append(f"side {'+' if self.side > 0 else '-'}")
            if self.period is not None:
                bits.append(f"period~{self.period:.6g}")
        elif self.kind is OutcomeKind.CYCLE_EIGHT and self.period is not None:
            bits.append(f"period~{self.period:.6g}")
        elif self.kind is OutcomeKind.CHAOTIC:
            where = {1: "x>0 side", -1: "x<0 side", 0: "both sides"}[self.side]
            bits.append(where)
            if self.le1 is not None:
                bits.append(f"le1={self.le1:.4g}")
        if self.flags:
            bits.append("flags=" + ",".join(self.flags))
        return " ".join(bits)


@dataclass(frozen=True, eq=False)
class SeparatrixRun:
    point: ParamsLike
    sign: int
    seed: np.ndarray
    seed_offset: float
    trans_traj: Trajectory
    limit_traj: Optional[Trajectory]
    outcome: SeparatrixOutcome


def _as_params(point: ParamsLike) -> SystemParams:
    if isinstance(point, PathPoint):
        return path_params(point)
    if isinstance(point, SystemParams):
        return point
    raise ValueError(f"expected PathPoint or SystemParams, got {type(point)}")


def seed_separatrix(point: ParamsLike, sign: int = 1, offset: float = 1e-6) -> np.ndarray:
    """Starting state ``sign * offset`` along the saddle's outgoing
    eigenvector."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    if not (math.isfinite(offset) and offset > 0):
        raise ValueError(f"offset must be positive, got {offset}")
    sd = saddle_data(point)
    return sign * offset * sd.v_u


def _standard_events(p: SystemParams, settings: RunSettings) -> list:
    return [
        EventSpec.sphere(
            np.zeros(3), settings.r_inf, direction="rising", terminal=True, label="escape"
        ),
        EventSpec.sphere(
            np.array([1.0, 0.0, 0.0]), settings.eps_eq,
            direction="falling", terminal=True, label="capture+",
        ),
        EventSpec.sphere(
            np.array([-1.0, 0.0, 0.0]), settings.eps_eq,
            direction="falling", terminal=True, label="capture-",
        ),
    ]


_LIMIT_EXTRA_EVENTS = [
    EventSpec.plane([1.0, 0.0, 0.0], 0.0, direction="any", label="x-zero"),
    EventSpec.plane([0.0, 1.0, 0.0], 0.0, direction="falling", label="x-max"),
]


def _validated_leg(
    p: SystemParams,
    settings: RunSettings,
    y0: np.ndarray,
    budget: float,
    extra_events=(),
    store: str = "last",
):
    """Integrate one leg of at most ``budget`` time units, treating capture
    hits as candidates that must survive a dwell check.

    On a capture-sphere hit the orbit is continued for two stretches of
    ``capture_dwell / 2`` with the capture spheres disarmed; the hit is
    accepted only if the state lies within twice the capture radius of the
    same equilibrium at both checkpoints.  Otherwise the hit was a transient
    pass (the equilibrium may be an unstable focus) and the leg resumes from
    the dwell endpoint.  Dwell time counts against the budget only for
    rejected hits.

    Returns ``(leg, n_rejected)`` where ``leg`` is a single Trajectory: the
    untouched segment when nothing was rejected, otherwise a stitched view
    (first/last state, merged event list on the leg clock, no dense data).
    """
    std = _standard_events(p, settings)
    markers = list(extra_events)
    escape_and_markers = [std[0]] + markers

    y = np.ascontiguousarray(y0, dtype=float)
    y_start = y.copy()
    merged: list = []
    t_used = 0.0
    n_rejected = 0
    n_acc = n_rej_steps = 0
    first_segment = None
    n_segments = 0
    term, term_label = "time", None

    while True:
        remaining = budget - t_used
        if remaining <= 0.0:
            term, term_label = "time", None
            break
        traj = integrate(p, y, settings.integrator(remaining), std + markers, store=store)
        n_segments += 1
        if first_segment is None:
            first_segment = traj
        n_acc += traj.n_accepted
        n_rej_steps += traj.n_rejected
        for h in traj.events:
            merged.append(h._replace(time=h.time + t_used))

        if traj.termination != "event":
            t_used += traj.t_final
            y = traj.y_final
            term, term_label = "time", None
            break

        hit = traj.events[-1]
        t_hit = t_used + hit.time
        if traj.termination_label == "escape":
            t_used, y = t_hit, hit.state
            term, term_label = "event", "escape"
            break

        # candidate capture: dwell with the capture spheres disarmed
        eq = np.array([1.0 if traj.termination_label == "capture+" else -1.0, 0.0, 0.0])
        dwell_hits: list = []
        y_dw, t_dw = hit.state, t_hit
        settled = True
        escaped = False
        for _ in range(2):
            dw = integrate(
                p, y_dw, settings.integrator(0.5 * settings.capture_dwell),
                escape_and_markers, store="last",
            )
            n_acc += dw.n_accepted
            n_rej_steps += dw.n_rejected
            for h in dw.events:
                dwell_hits.append(h._replace(time=h.time + t_dw))
            if dw.termination == "event":
                escaped = True
                break
            y_dw = dw.y_final
            t_dw += dw.t_final
            if np.linalg.norm(y_dw - eq) > 2.0 * settings.eps_eq:
                settled = False
                break

        if escaped:
            merged.extend(dwell_hits)
            t_used, y = dwell_hits[-1].time, dwell_hits[-1].state
            term, term_label = "event", "escape"
            break
        if settled:
            # dwell markers after the accepted hit are not part of the leg
            t_used, y = t_hit, hit.state
            term, term_label = "event", traj.termination_label
            break
        merged.extend(dwell_hits)
        n_rejected += 1
        t_used, y = t_dw, y_dw

    pristine = (
        n_segments == 1
        and n_rejected == 0
        and term == first_segment.termination
        and term_label == first_segment.termination_label
    )
    if pristine:
        return first_segment, 0
    leg = Trajectory(
        times=np.array([0.0, t_used]),
        states=np.vstack([y_start, y]),
        events=merged,
        termination=term,
        termination_label=term_label,
        n_accepted=n_acc,
        n_rejected=n_rej_steps,
    )
    return leg, n_rejected


def _terminal_outcome(label, t, state, launch_side, extra_flags=()) -> SeparatrixOutcome:
    if label == "escape":
        return SeparatrixOutcome(
            kind=OutcomeKind.ESCAPE, side=0, launch_side=launch_side,
            final_state=state, capture_time=float(t), flags=tuple(extra_flags),
        )
    side = 1 if label == "capture+" else -1
    kind = OutcomeKind.CAPTURE_SAME if side == launch_side else OutcomeKind.CAPTURE_OPPOSITE
    return SeparatrixOutcome(
        kind=kind, side=side, launch_side=launch_side, final_state=state,
        capture_time=float(t), flags=tuple(extra_flags),
    )


def classify_limit_set(
    limit_traj: Trajectory,
    point: ParamsLike,
    settings: RunSettings = RunSettings(),
    launch_side: int = 1,
    time_offset: float = 0.0,
) -> SeparatrixOutcome:
    """Classify the arc of a limit leg that finished without a terminal event.

    Expects the trajectory to carry the standard event set (capture/escape
    spheres plus the non-terminal x-sign-change and x-maximum markers).
    ``time_offset`` shifts reported capture times to the full-run clock.
    """
    p = _as_params(point)
    t_lim = limit_traj.t_final
    y_end = limit_traj.y_final

    if limit_traj.termination == "event":
        return _terminal_outcome(
            limit_traj.termination_label,
            time_offset + limit_traj.events[-1].time,
            limit_traj.events[-1].state,
            launch_side,
        )

    # a state that settled inside a capture ball without a crossing (e.g.
    # it started there) still counts as captured
    for eq_side in (1, -1):
        target = np.array([float(eq_side), 0.0, 0.0])
        if np.linalg.norm(y_end - target) < settings.eps_eq:
            kind = (
                OutcomeKind.CAPTURE_SAME
                if eq_side == launch_side
                else OutcomeKind.CAPTURE_OPPOSITE
            )
            return SeparatrixOutcome(
                kind=kind, side=eq_side, launch_side=launch_side,
                final_state=y_end, flags=("settled_inside_ball",),
            )

    # burn in half the arc so the tangent frame has aligned before growth is
    # measured: a cycle then reads ~1e-6 rather than the O(1/t) startup bias,
    # keeping the chaos threshold unambiguous
    res = ftle(
        p,
        limit_traj.states[0],
        t_lim,
        reorth_dt=settings.reorth_dt,
        rel_tol=settings.rel_tol,
        abs_tol=settings.abs_tol,
        max_step=settings.max_step,
        r_inf=settings.r_inf,
        burn_in=0.5 * t_lim,
    )
    le1 = float(res.exponents[0])

    # sign changes of x, ignoring the first tenth of the arc as transient
    cross_times = [h.time for h in limit_traj.events if h.label == "x-zero"]
    n_cross = sum(1 for t in cross_times if t > 0.1 * t_lim)
    peak_times = [
        h.time for h in limit_traj.events
        if h.label == "x-max" and h.time > 0.5 * t_lim
    ]
    period = None
    if len(peak_times) >= 3:
        spans = np.diff(peak_times[-21:])
        period = float(np.mean(spans))

    flags = []
    if le1 > settings.chaos_threshold:
        if n_cross >= 10:
            side = 0
        elif n_cross == 0:
            side = int(np.sign(y_end[0])) or launch_side
        else:
            side = 0
            flags.append("sparse_crossings")
        return SeparatrixOutcome(
            kind=OutcomeKind.CHAOTIC, side=side, launch_side=launch_side,
            final_state=y_end, le1=le1, n_sign_changes=n_cross, flags=tuple(flags),
        )

    if n_cross > 0:
        return SeparatrixOutcome(
            kind=OutcomeKind.CYCLE_EIGHT, side=0, launch_side=launch_side,
            final_state=y_end, le1=le1, period=period, n_sign_changes=n_cross,
        )
    side = int(np.sign(y_end[0])) or launch_side
    return SeparatrixOutcome(
        kind=OutcomeKind.CYCLE_ONE_SIDED, side=side, launch_side=launch_side,
        final_state=y_end, le1=le1, period=period,
    )


def run_separatrix(
    point: ParamsLike,
    settings: RunSettings = RunSettings(),
    sign: int = 1,
    store: str = "last",
) -> SeparatrixRun:
    """Track one outgoing separatrix branch and classify its fate.

    ``store`` controls how much of both legs is retained ("last", "nodes",
    or "dense"); classification itself only needs the event records.  A leg
    on which capture candidates were rejected comes back as a stitched
    endpoint view rather than a dense trajectory, and the outcome carries a
    ``transient_capture_rejected`` flag.
    """
    p = _as_params(point)
    seed = seed_separatrix(point, sign=sign, offset=settings.seed_offset)

    trans, n_rej_trans = _validated_leg(p, settings, seed, settings.t_trans, store=store)
    if trans.termination == "event":
        flags = ("transient_capture_rejected",) if n_rej_trans else ()
        outcome = _terminal_outcome(
            trans.termination_label, trans.events[-1].time, trans.events[-1].state,
            sign, flags,
        )
        return SeparatrixRun(
            point=point, sign=sign, seed=seed, seed_offset=settings.seed_offset,
            trans_traj=trans, limit_traj=None, outcome=outcome,
        )

    limit, n_rej_limit = _validated_leg(
        p, settings, trans.y_final, settings.t_lim,
        extra_events=_LIMIT_EXTRA_EVENTS, store=store,
    )
    outcome = classify_limit_set(
        limit, point, settings, launch_side=sign, time_offset=trans.t_final
    )
    if n_rej_trans or n_rej_limit:
        outcome = replace(
            outcome,
            flags=tuple(sorted(set(outcome.flags) | {"transient_capture_rejected"})),
        )
    return SeparatrixRun(
        point=point, sign=sign, seed=seed, seed_offset=settings.seed_offset,
        trans_traj=trans, limit_traj=limit, outcome=outcome,
    )


def focus_separatrix_seeds(point: ParamsLike, offset: float = 1e-6):
    """Seeds for the outgoing separatrices of the nonzero equilibria, used
    for visualizing their unwinding (not for classification).

    Returns four states: both directions from the x=+1 equilibrium along its
    outgoing direction, and their mirror images at x=-1.  The direction is
    the eigenvector of a real positive eigenvalue when one exists, otherwise
    the real part of the leading complex unstable pair.
    """
    if not (math.isfinite(offset) and offset > 0):
        raise ValueError(f"offset must be positive, got {offset}")
    p = _as_params(point)
    from .model import jacobian  # local import to keep module load light

    eq = np.array([1.0, 0.0, 0.0])
    vals, vecs = np.linalg.eig(jacobian(p, eq))
    unstable = [k for k in range(3) if vals[k].real > 0]
    if not unstable:
        raise ValueError("the nonzero equilibria are stable; no outgoing directions")
    real_pos = [k for k in unstable if abs(vals[k].imag) < 1e-12]
    k = real_pos[0] if real_pos else max(unstable, key=lambda i: vals[i].real)
    w = vecs[:, k].real
    norm = np.linalg.norm(w)
    if norm == 0.0:
        raise ValueError("degenerate outgoing direction")
    w = w / norm
    for comp in w:
        if comp != 0.0:
            if comp < 0.0:
                w = -w
            break
    plus = [eq + offset * w, eq - offset * w]
    return [plus[0], plus[1], symmetry_image(plus[0]), symmetry_image(plus[1])]
