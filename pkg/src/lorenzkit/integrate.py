"""Adaptive integration of the Lorenz-like flow with dense output and event
location.

The stepper is an embedded Dormand-Prince 5(4) pair (FSAL) with a PI step-size
controller and the standard free 4th-order interpolant.  Events are located on
the interpolant by a bracketed false-position/bisection search refined to
1e-12 in time.  Identical inputs produce bit-identical trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels as _k
from .model import SystemParams

__all__ = [
    "IntegratorConfig",
    "EventSpec",
    "EventHit",
    "Trajectory",
    "IntegrationError",
    "integrate",
    "eval_dense",
]

EVENT_TIME_TOL = 1e-12
_DEFAULT_MAX_STEPS = 200_000_000


class IntegrationError(RuntimeError):
    """Numerical failure during integration (step underflow or non-finite
    state).  Carries the last good time and state."""

    def __init__(self, message: str, time: float, state: np.ndarray):
        super().__init__(f"{message} (t={time}, state={state})")
        self.time = time
        self.state = state


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and step limits.

    ``initial_step = 0`` selects the automatic starting-step heuristic.
    ``max_time`` is the integration horizon of a single call.
    """

    rel_tol: float = 1e-12
    abs_tol: float = 1e-12
    max_step: float = 0.1
    initial_step: float = 0.0
    max_time: float = 1000.0

    def __post_init__(self):
        if not (math.isfinite(self.rel_tol) and self.rel_tol > 0):
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if not (math.isfinite(self.abs_tol) and self.abs_tol > 0):
            raise ValueError(f"abs_tol must be positive, got {self.abs_tol}")
        if not (math.isfinite(self.max_step) and self.max_step > 0):
            raise ValueError(f"max_step must be positive, got {self.max_step}")
        if self.initial_step < 0 or not math.isfinite(self.initial_step):
            raise ValueError(f"initial_step must be >= 0, got {self.initial_step}")
        if not (math.isfinite(self.max_time) and self.max_time > 0):
            raise ValueError(f"max_time must be positive, got {self.max_time}")


@dataclass(frozen=True, eq=False)
class EventSpec:
    """Scalar event function with a crossing direction and a terminal flag.

    ``direction`` is one of ``"any"``, ``"rising"``, ``"falling"``.  Events
    whose function is zero at the start of the integration are armed only once
    the function leaves zero, so trajectories seeded exactly on a surface do
    not trigger at t=0.  Prefer the :meth:`sphere` / :meth:`plane`
    constructors: those run inside the compiled fast path.
    """

    event_fn: Callable[[np.ndarray], float]
    direction: str = "any"
    terminal: bool = False
    label: str = "event"
    _kind: int = field(default=-1, repr=False)
    _par: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.direction not in ("any", "rising", "falling"):
            raise ValueError(f"direction must be any/rising/falling, got {self.direction!r}")

    @property
    def direction_code(self) -> int:
        return {"any": 0, "rising": 1, "falling": -1}[self.direction]

    @classmethod
    def sphere(
        cls,
        center,
        radius: float,
        direction: str = "any",
        terminal: bool = False,
        label: str = "sphere",
    ) -> "EventSpec":
        """Event g(y) = |y - center| - radius."""
        c = np.asarray(center, dtype=float)
        if c.shape != (3,) or not np.all(np.isfinite(c)):
            raise ValueError("center must be a finite 3-vector")
        if not (math.isfinite(radius) and radius > 0):
            raise ValueError(f"radius must be positive, got {radius}")
        cx, cy, cu = (float(c[0]), float(c[1]), float(c[2]))
        r = float(radius)

        def fn(y, _c=(cx, cy, cu), _r=r):
            return math.sqrt(
                (y[0] - _c[0]) ** 2 + (y[1] - _c[1]) ** 2 + (y[2] - _c[2]) ** 2
            ) - _r

        return cls(
            event_fn=fn,
            direction=direction,
            terminal=terminal,
            label=label,
            _kind=_k.EV_SPHERE,
            _par=(cx, cy, cu, r),
        )

    @classmethod
    def plane(
        cls,
        normal,
        offset: float,
        direction: str = "any",
        terminal: bool = False,
        label: str = "plane",
    ) -> "EventSpec":
        """Event g(y) = normal . y - offset."""
        n = np.asarray(normal, dtype=float)
        if n.shape != (3,) or not np.all(np.isfinite(n)) or not np.any(n != 0):
            raise ValueError("normal must be a finite nonzero 3-vector")
        nx, ny, nu = (float(n[0]), float(n[1]), float(n[2]))
        c = float(offset)

        def fn(y, _n=(nx, ny, nu), _c=c):
            return _n[0] * y[0] + _n[1] * y[1] + _n[2] * y[2] - _c

        return cls(
            event_fn=fn,
            direction=direction,
            terminal=terminal,
            label=label,
            _kind=_k.EV_PLANE,
            _par=(nx, ny, nu, c),
        )

    @property
    def is_parametric(self) -> bool:
        return self._kind >= 0


class EventHit(NamedTuple):
    time: float
    state: np.ndarray
    label: str


@dataclass(eq=False)
class Trajectory:
    """Integration result: node times/states, located events, and (optionally)
    the dense interpolant of every accepted step."""

    times: np.ndarray
    states: np.ndarray
    events: list
    termination: str  # "time" or "event"
    termination_label: Optional[str]
    n_accepted: int
    n_rejected: int
    _dense_t0: Optional[np.ndarray] = None
    _dense_h: Optional[np.ndarray] = None
    _dense_y0: Optional[np.ndarray] = None
    _dense_Q: Optional[np.ndarray] = None

    @property
    def t_final(self) -> float:
        return float(self.times[-1])

    @property
    def y_final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def has_dense(self) -> bool:
        return self._dense_t0 is not None and len(self._dense_t0) > 0


def eval_dense(traj: Trajectory, t) -> np.ndarray:
    """Evaluate the stored dense interpolant at time(s) ``t``.

    Continuous at step boundaries; valid on [times[0], times[-1]].
    """
    if not traj.has_dense:
        raise ValueError("trajectory was integrated without dense storage")
    tq = np.asarray(t, dtype=float)
    scalar = tq.ndim == 0
    tq = np.atleast_1d(tq)
    t0 = traj.times[0]
    t1 = traj.times[-1]
    if np.any(tq < t0 - 1e-12) or np.any(tq > t1 + 1e-12):
        raise ValueError(f"dense evaluation outside [{t0}, {t1}]")
    d_t0 = traj._dense_t0
    idx = np.searchsorted(d_t0, np.minimum(tq, t1), side="right") - 1
    idx = np.clip(idx, 0, len(d_t0) - 1)
    out = np.empty((len(tq), traj.states.shape[1]))
    for k, (ti, i) in enumerate(zip(tq, idx)):
        h = traj._dense_h[i]
        theta = (ti - d_t0[i]) / h
        theta = min(max(theta, 0.0), 1.0)
        out[k] = _k.dense_eval_single(traj._dense_y0[i], h, traj._dense_Q[i], theta)
    return out[0] if scalar else out


_STORE_CODES = {"last": 0, "nodes": 1, "dense": 2}


def _validate_y0(y0, dim: int) -> np.ndarray:
    y = np.ascontiguousarray(y0, dtype=float)
    if y.shape != (dim,):
        raise ValueError(f"initial state must have shape ({dim},), got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state must be finite")
    return y


def integrate(
    p: SystemParams,
    y0,
    cfg: IntegratorConfig,
    events: Sequence[EventSpec] = (),
    store: str = "dense",
    _rhs_code: int = _k.RHS_FLOW,
) -> Trajectory:
    """Integrate from ``y0`` over [0, cfg.max_time].

    Stops early at the first terminal event.  ``store`` selects how much is
    retained: ``"dense"`` (nodes + interpolant), ``"nodes"``, or ``"last"``
    (first/last node only).  Raises :class:`IntegrationError` on step
    underflow or a non-finite state.
    """
    if store not in _STORE_CODES:
        raise ValueError(f"store must be one of {sorted(_STORE_CODES)}, got {store!r}")
    y = _validate_y0(y0, 3)
    events = list(events)
    for ev in events:
        if not isinstance(ev, EventSpec):
            raise ValueError(f"events must be EventSpec instances, got {type(ev)}")

    if all(ev.is_parametric for ev in events):
        return _integrate_fast(p, y, cfg, events, store, _rhs_code)
    return _integrate_callable(p, y, cfg, events, store, _rhs_code)


def _integrate_fast(p, y, cfg, events, store, rhs_code) -> Trajectory:
    m = len(events)
    ev_kind = np.array([ev._kind for ev in events], dtype=np.int64).reshape(m)
    ev_dir = np.array([ev.direction_code for ev in events], dtype=np.int64).reshape(m)
    ev_term = np.array([1 if ev.terminal else 0 for ev in events], dtype=np.int64).reshape(m)
    ev_par = np.array([ev._par for ev in events], dtype=float).reshape(m, 4)

    (
        status,
        ts,
        ys,
        d_t0,
        d_h,
        d_y0,
        d_Q,
        ev_t,
        ev_y,
        ev_id,
        n_acc,
        n_rej,
        _h_last,
    ) = _k.drive(
        rhs_code,
        p.lam,
        p.alpha,
        p.beta,
        y,
        cfg.max_time,
        cfg.rel_tol,
        cfg.abs_tol,
        cfg.max_step,
        cfg.initial_step,
        ev_kind,
        ev_dir,
        ev_term,
        ev_par,
        _STORE_CODES[store],
        _DEFAULT_MAX_STEPS,
        EVENT_TIME_TOL,
    )
    return _finish(status, ts, ys, d_t0, d_h, d_y0, d_Q, ev_t, ev_y, ev_id, n_acc, n_rej, events, store)


def _finish(status, ts, ys, d_t0, d_h, d_y0, d_Q, ev_t, ev_y, ev_id, n_acc, n_rej, events, store):
    hits = [EventHit(float(t), s.copy(), events[int(i)].label) for t, s, i in zip(ev_t, ev_y, ev_id)]
    if status == _k.STATUS_UNDERFLOW:
        raise IntegrationError("step size underflow (stiffness?)", float(ts[-1]), ys[-1].copy())
    if status == _k.STATUS_NONFINITE:
        raise IntegrationError("non-finite state encountered", float(ts[-1]), ys[-1].copy())
    if status == _k.STATUS_MAXSTEPS:
        raise IntegrationError("step budget exhausted", float(ts[-1]), ys[-1].copy())
    if status == _k.STATUS_EVENT:
        termination = "event"
        label = hits[-1].label
    else:
        termination = "time"
        label = None
    traj = Trajectory(
        times=ts,
        states=ys,
        events=hits,
        termination=termination,
        termination_label=label,
        n_accepted=int(n_acc),
        n_rejected=int(n_rej),
    )
    if store == "dense":
        traj._dense_t0 = d_t0
        traj._dense_h = d_h
        traj._dense_y0 = d_y0
        traj._dense_Q = d_Q
    return traj


def _integrate_callable(p, y, cfg, events, store, rhs_code) -> Trajectory:
    """Reference stepping loop for events given as arbitrary Python callables.

    Same stepper and controller as the fast path (the step kernel is shared);
    only the loop and the event bookkeeping run in Python.
    """
    t_end = cfg.max_time
    rtol, atol = cfg.rel_tol, cfg.abs_tol
    code = rhs_code

    t = 0.0
    f0 = _k.rhs_eval(code, p.lam, p.alpha, p.beta, y)
    if cfg.initial_step > 0:
        h = min(cfg.initial_step, cfg.max_step, t_end)
    else:
        h = _k.initial_step(code, p.lam, p.alpha, p.beta, y, t_end, rtol, atol, cfg.max_step)

    times = [0.0]
    states = [y.copy()]
    dense = []
    hits: list = []
    g_prev = np.array([ev.event_fn(y) for ev in events], dtype=float)
    armed = g_prev != 0.0

    facold = 1e-4
    n_acc = 0
    n_rej = 0
    just_rejected = False
    status = _k.STATUS_TIME

    while t < t_end:
        hmin = 16.0 * np.finfo(float).eps * max(abs(t), 1.0)
        if h < hmin:
            status = _k.STATUS_UNDERFLOW
            break
        last = False
        h_step = h
        if t + h_step >= t_end:
            h_step = t_end - t
            last = True
        err, y_new, f_new, Q = _k.step_once(code, p.lam, p.alpha, p.beta, y, f0, h_step, rtol, atol)
        if not (np.all(np.isfinite(y_new)) and math.isfinite(err)):
            n_rej += 1
            just_rejected = True
            h = 0.5 * h_step
            if h < hmin:
                status = _k.STATUS_NONFINITE
                break
            continue
        if err > 1.0:
            n_rej += 1
            just_rejected = True
            h = h_step * min(1.0, max(0.1, 0.9 * err ** -0.2))
            continue

        n_acc += 1
        t_new = t_end if last else t + h_step

        candidates = []
        for i, ev in enumerate(events):
            g_new = ev.event_fn(y_new)
            crossing = False
            if armed[i]:
                d = ev.direction_code
                if d >= 0 and g_prev[i] < 0.0 and g_new >= 0.0:
                    crossing = True
                elif d <= 0 and g_prev[i] > 0.0 and g_new <= 0.0:
                    crossing = True
            if crossing:
                theta = 1.0 if g_new == 0.0 else _callable_root(
                    ev.event_fn, y, h_step, Q, g_prev[i], g_new
                )
                candidates.append((t + theta * h_step, i, theta))
            g_prev[i] = g_new
            armed[i] = g_new != 0.0

        terminal_hit = False
        for t_ev, i, theta in sorted(candidates, key=lambda c: (c[0], c[1])):
            y_ev = y_new.copy() if theta >= 1.0 else _k.dense_eval_single(y, h_step, Q, theta)
            hits.append(EventHit(float(t_ev), y_ev, events[i].label))
            if events[i].terminal:
                terminal_hit = True
                t_new = t_ev
                y_new = y_ev
                break

        if store == "dense":
            dense.append((t, h_step, y.copy(), Q))
        if store in ("nodes", "dense"):
            times.append(t_new)
            states.append(y_new.copy())
        else:
            if len(times) == 1:
                times.append(t_new)
                states.append(y_new.copy())
            else:
                times[-1] = t_new
                states[-1] = y_new.copy()

        if terminal_hit:
            status = _k.STATUS_EVENT
            break

        if not last:
            if err == 0.0:
                fac = 10.0
            else:
                fac = 0.9 * err ** -(0.2 - 0.75 * 0.04) * facold ** 0.04
                fac = min(10.0, max(0.2, fac))
            if just_rejected:
                fac = min(1.0, fac)
            facold = max(err, 1e-4)
            h = min(h_step * fac, cfg.max_step)
        just_rejected = False
        t = t_new
        y = y_new
        f0 = f_new

    ts = np.array(times)
    ys = np.array(states)
    if status == _k.STATUS_UNDERFLOW:
        raise IntegrationError("step size underflow (stiffness?)", float(ts[-1]), ys[-1].copy())
    if status == _k.STATUS_NONFINITE:
        raise IntegrationError("non-finite state encountered", float(ts[-1]), ys[-1].copy())
    termination = "event" if status == _k.STATUS_EVENT else "time"
    traj = Trajectory(
        times=ts,
        states=ys,
        events=hits,
        termination=termination,
        termination_label=hits[-1].label if termination == "event" else None,
        n_accepted=n_acc,
        n_rejected=n_rej,
    )
    if store == "dense" and dense:
        traj._dense_t0 = np.array([d[0] for d in dense])
        traj._dense_h = np.array([d[1] for d in dense])
        traj._dense_y0 = np.array([d[2] for d in dense])
        traj._dense_Q = np.array([d[3] for d in dense])
    return traj


def _callable_root(fn, y0, h, Q, ga, gb, tol_t=EVENT_TIME_TOL):
    a, b = 0.0, 1.0
    true_ga, true_gb = ga, gb
    tol_theta = tol_t / h if h > tol_t else 1e-15
    side = 0
    for _ in range(120):
        if (b - a) <= tol_theta:
            break
        denom = gb - ga
        c = (a * gb - b * ga) / denom if denom != 0.0 else 0.5 * (a + b)
        if not (a < c < b) or not math.isfinite(c):
            c = 0.5 * (a + b)
        gc = fn(_k.dense_eval_single(y0, h, Q, c))
        if gc == 0.0:
            return c
        if (gc > 0.0) == (true_gb > 0.0):
            b, gb, true_gb = c, gc, gc
            if side == -1:
                ga *= 0.5
            side = -1
        else:
            a, ga, true_ga = c, gc, gc
            if side == 1:
                gb *= 0.5
            side = 1
    return a if abs(true_ga) < abs(true_gb) else b
