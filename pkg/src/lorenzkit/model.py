"""Model layer for a damped Lorenz-like flow.

The vector field is

    x' = v
    v' = -lam*v - x*u + x - x**3
    u' = -alpha*u - beta*x*v

with coefficients ``lam >= 0``, ``alpha > 0``, ``beta > 0``.  This module
collects everything that can be written in closed form: equilibria, the saddle
eigen-structure, the energy-like balance function used in the dissipativity
argument, the absorbing-set constants, the one-parameter coefficient path used
by the bifurcation scans, and the change of variables from the classical
Lorenz system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

__all__ = [
    "State",
    "SystemParams",
    "PathPoint",
    "LorenzParams",
    "SaddleData",
    "ConditionReport",
    "path_params",
    "path_system",
    "invert_path",
    "rhs",
    "jacobian",
    "equilibria",
    "symmetry_image",
    "splus_stability_threshold",
    "splus_stable",
    "balance_V",
    "balance_V_rate",
    "saddle_data",
    "lorenz_to_lorenzlike",
    "check_conditions",
]

DELTA_MAX = 1.1


class State(NamedTuple):
    """Phase-space point: position ``x``, its rate ``v``, transverse component ``u``."""

    x: float
    v: float
    u: float

    @classmethod
    def from_array(cls, y) -> "State":
        y = np.asarray(y, dtype=float)
        if y.shape != (3,):
            raise ValueError(f"state must have shape (3,), got {y.shape}")
        return cls(float(y[0]), float(y[1]), float(y[2]))

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


def _as_state_array(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (3,):
        raise ValueError(f"state must have shape (3,), got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("state must be finite")
    return y


@dataclass(frozen=True)
class SystemParams:
    """Coefficients of the flow.

    ``lam`` is the velocity damping, ``alpha`` the transverse damping and
    ``beta`` the transverse coupling.  All must be finite with ``lam >= 0``,
    ``alpha > 0``, ``beta > 0``.
    """

    lam: float
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("lam", "alpha", "beta"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val)):
                raise ValueError(f"{name} must be a finite number, got {val!r}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")


@dataclass(frozen=True)
class PathPoint:
    """Point on the scan path: shape parameter ``delta``, coupling ``beta``, arc
    coordinate ``s`` in [0, 1).

    The admissible region is ``0 < delta <= 1.1`` and ``0 < beta < 2 + delta``.
    Points with ``delta > 1`` have a negative saddle value and are flagged via
    :attr:`negative_saddle_value`.
    """

    delta: float
    beta: float
    s: float

    def __post_init__(self):
        for name in ("delta", "beta", "s"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val)):
                raise ValueError(f"{name} must be a finite number, got {val!r}")
        if not 0.0 < self.delta <= DELTA_MAX:
            raise ValueError(f"delta must be in (0, {DELTA_MAX}], got {self.delta}")
        if not 0.0 < self.beta < 2.0 + self.delta:
            raise ValueError(
                f"beta must be in (0, 2 + delta) = (0, {2.0 + self.delta}), got {self.beta}"
            )
        if not 0.0 <= self.s < 1.0:
            raise ValueError(f"s must be in [0, 1), got {self.s}")

    @property
    def negative_saddle_value(self) -> bool:
        return self.delta > 1.0


def path_params(pp: PathPoint) -> SystemParams:
    """Map a path point to system coefficients.

    ``lam = s / sqrt(1 - s)``, ``alpha = delta * sqrt(1 - s)``, ``beta`` fixed.
    """
    root = math.sqrt(1.0 - pp.s)
    return SystemParams(lam=pp.s / root, alpha=pp.delta * root, beta=pp.beta)


def path_system(delta: float, beta: float, s: float) -> SystemParams:
    """Like :func:`path_params` but without the admissible-region check.

    Used where out-of-region points are deliberately evaluated (condition
    reports, non-dissipative sweep points).  Only positivity of ``delta``,
    ``beta`` and ``0 <= s < 1`` are enforced.
    """
    if not (math.isfinite(delta) and delta > 0):
        raise ValueError(f"delta must be positive and finite, got {delta}")
    if not (math.isfinite(beta) and beta > 0):
        raise ValueError(f"beta must be positive and finite, got {beta}")
    if not (math.isfinite(s) and 0.0 <= s < 1.0):
        raise ValueError(f"s must be in [0, 1), got {s}")
    root = math.sqrt(1.0 - s)
    return SystemParams(lam=s / root, alpha=delta * root, beta=beta)


def invert_path(p: SystemParams) -> PathPoint:
    """Recover the path point mapping to coefficients ``p``.

    Solves ``lam = s/sqrt(1-s)`` for ``s`` (the positive root of
    ``s**2 + lam**2 * s - lam**2 = 0``) and divides ``alpha`` by
    ``sqrt(1-s)``.  Raises ``ValueError`` when the result falls outside the
    admissible region.
    """
    lam = p.lam
    s = 0.5 * lam * (math.sqrt(lam * lam + 4.0) - lam)
    s = min(s, 1.0 - 1e-16)
    delta = p.alpha / math.sqrt(1.0 - s)
    return PathPoint(delta=delta, beta=p.beta, s=s)


def rhs(p: SystemParams, y) -> np.ndarray:
    """Vector field at state ``y`` (array-like of shape (3,))."""
    x, v, u = np.asarray(y, dtype=float)
    return np.array(
        [v, -p.lam * v - x * u + x - x ** 3, -p.alpha * u - p.beta * x * v]
    )


def jacobian(p: SystemParams, y) -> np.ndarray:
    """Jacobian matrix of the vector field at ``y``."""
    x, v, u = np.asarray(y, dtype=float)
    return np.array(
        [
            [0.0, 1.0, 0.0],
            [1.0 - u - 3.0 * x * x, -p.lam, -x],
            [-p.beta * v, -p.beta * x, -p.alpha],
        ]
    )


def equilibria(p: SystemParams) -> np.ndarray:
    """The three equilibria as rows: origin, (+1, 0, 0), (-1, 0, 0)."""
    return np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])


def symmetry_image(y) -> np.ndarray:
    """Image of ``y`` under the flow's symmetry (x, v, u) -> (-x, -v, u)."""
    y = np.asarray(y, dtype=float)
    out = y.copy()
    out[..., 0] = -out[..., 0]
    out[..., 1] = -out[..., 1]
    return out


def splus_stability_threshold(p: SystemParams) -> float:
    """Critical ``beta`` below which the nontrivial equilibria are stable."""
    return p.lam * (p.lam * p.alpha + p.alpha ** 2 + 2.0) / (p.lam + p.alpha)


def splus_stable(p: SystemParams) -> bool:
    """Whether the equilibria (+-1, 0, 0) are asymptotically stable."""
    return p.beta < splus_stability_threshold(p)


def balance_V(p: SystemParams, y) -> float:
    """Energy-like balance function ``v^2 - u^2/beta - x^2 + x^4/2``.

    Zero at the origin and -1/2 at the nontrivial equilibria.
    """
    x, v, u = np.asarray(y, dtype=float)
    return float(v * v - u * u / p.beta - x * x + 0.5 * x ** 4)


def balance_V_rate(p: SystemParams, y) -> float:
    """Time derivative of :func:`balance_V` along the flow:
    ``2 * (-lam*v^2 + (alpha/beta)*u^2)``."""
    _, v, u = np.asarray(y, dtype=float)
    return float(2.0 * (-p.lam * v * v + (p.alpha / p.beta) * u * u))


@dataclass(frozen=True, eq=False)
class SaddleData:
    """Eigen-structure of the saddle at the origin.

    Eigenvalues ``lam_u > 0 > lam_s, lam_ss`` with unit eigenvectors ``v_u``,
    ``v_s``, ``v_ss`` (positive first nonzero component).  ``saddle_value`` is
    ``lam_u + lam_s``, the sum of the unstable and the leading stable
    eigenvalue.
    """

    lam_u: float
    lam_s: float
    lam_ss: float
    v_u: np.ndarray
    v_s: np.ndarray
    v_ss: np.ndarray
    saddle_value: float


def _unit_pos(vec: np.ndarray) -> np.ndarray:
    vec = vec / math.sqrt(float(vec @ vec))
    for comp in vec:
        if comp != 0.0:
            if comp < 0.0:
                vec = -vec
            break
    return vec


def saddle_data(pp: Union[PathPoint, SystemParams]) -> SaddleData:
    """Saddle eigen-structure at the origin.

    For a :class:`PathPoint` the closed path forms are used:
    ``lam_u = sqrt(1-s)``, ``lam_ss = -1/sqrt(1-s)``, ``lam_s = -delta*sqrt(1-s)``.
    For raw :class:`SystemParams` the general formulas
    ``(+-sqrt(lam^2+4) - lam)/2`` and ``-alpha`` apply.  The three eigenvectors
    are mutually perpendicular: ``v_s`` is the transverse axis (0,0,1) and
    ``v_u``, ``v_ss`` lie in the (x, v)-plane.
    """
    if isinstance(pp, PathPoint):
        root = math.sqrt(1.0 - pp.s)
        lam_u = root
        lam_ss = -1.0 / root
        lam_s = -pp.delta * root
    else:
        disc = math.sqrt(pp.lam * pp.lam + 4.0)
        lam_u = 0.5 * (disc - pp.lam)
        lam_ss = -0.5 * (disc + pp.lam)
        lam_s = -pp.alpha
    v_u = _unit_pos(np.array([1.0, lam_u, 0.0]))
    v_ss = _unit_pos(np.array([1.0, lam_ss, 0.0]))
    v_s = np.array([0.0, 0.0, 1.0])
    return SaddleData(
        lam_u=lam_u,
        lam_s=lam_s,
        lam_ss=lam_ss,
        v_u=v_u,
        v_s=v_s,
        v_ss=v_ss,
        saddle_value=lam_u + lam_s,
    )


@dataclass(frozen=True)
class LorenzParams:
    """Classical Lorenz coefficients (sigma, r, b) plus the shift ``d``."""

    sigma: float
    r: float
    b: float
    d: float = 1.0

    def __post_init__(self):
        for name in ("sigma", "r", "b", "d"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val)):
                raise ValueError(f"{name} must be a finite number, got {val!r}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.b <= 0:
            raise ValueError(f"b must be > 0, got {self.b}")
        if self.r <= self.d:
            raise ValueError(
                f"r must exceed d (scaling undefined otherwise), got r={self.r}, d={self.d}"
            )


def lorenz_to_lorenzlike(lz: LorenzParams) -> SystemParams:
    """Coefficients of the rescaled flow equivalent to the Lorenz system.

    ``lam = (sigma + d)/sqrt(sigma*(r - d))``, ``alpha = b/sqrt(sigma*(r - d))``,
    ``beta = (2*sigma - b)/sigma``.
    """
    scale = math.sqrt(lz.sigma * (lz.r - lz.d))
    return SystemParams(
        lam=(lz.sigma + lz.d) / scale,
        alpha=lz.b / scale,
        beta=(2.0 * lz.sigma - lz.b) / lz.sigma,
    )


@dataclass(frozen=True)
class ConditionReport:
    """Checkable hypotheses of the dissipativity/attractor argument at one
    parameter point.

    ``absorbing_inequality_holds`` is ``alpha*(sqrt(lam^2+4)+lam) > 2*(beta-2)``; ``L`` the
    chosen absorbing-set constant just above its lower bound; ``K``, ``M`` the
    derived constants (``K < 1`` required); ``x0`` the positive root of
    ``theta0^2 + x^2 - (M/2)*x^4 = 0`` (NaN when ``M <= 0``); ``overdamped_in_band``
    is ``lam^2 > 4*((1 + beta/2)*x0^2 - 1)``; ``splus_stable`` the stability of
    the nontrivial equilibria.
    """

    params: SystemParams
    absorbing_inequality_holds: bool
    L: float
    K: float
    M: float
    theta0: float
    x0: float
    overdamped_in_band: bool
    splus_stable: bool

    @property
    def ok(self) -> bool:
        """Dissipativity hypotheses hold (inequality + valid constants)."""
        return self.absorbing_inequality_holds and self.K < 1.0


_L_MARGIN = 1e-6


def check_conditions(pp, beta: float | None = None, s: float | None = None) -> ConditionReport:
    """Evaluate the dissipativity and attractor-localization hypotheses.

    Accepts a :class:`PathPoint`, a :class:`SystemParams`, or raw
    ``(delta, beta, s)`` floats (the latter bypass the admissible-region check
    so failing configurations can be reported rather than rejected).
    """
    if isinstance(pp, PathPoint):
        p = path_params(pp)
    elif isinstance(pp, SystemParams):
        p = pp
    else:
        if beta is None or s is None:
            raise ValueError("pass a PathPoint, SystemParams, or (delta, beta, s) floats")
        p = path_system(float(pp), float(beta), float(s))

    disc = math.sqrt(p.lam * p.lam + 4.0)
    absorbing_ok = p.alpha * (disc + p.lam) > 2.0 * (p.beta - 2.0)
    L_lower = 0.5 * (disc - p.lam)
    L = L_lower * (1.0 + _L_MARGIN)
    K = p.beta * L / (p.alpha + 2.0 * L)
    M = 1.0 - K
    theta0 = 1.0
    if M > 0.0:
        x0 = math.sqrt((1.0 + math.sqrt(1.0 + 2.0 * M * theta0 * theta0)) / M)
        overdamped = p.lam * p.lam > 4.0 * ((1.0 + 0.5 * p.beta) * x0 * x0 - 1.0)
    else:
        x0 = math.nan
        overdamped = False
    return ConditionReport(
        params=p,
        absorbing_inequality_holds=bool(absorbing_ok),
        L=L,
        K=K,
        M=M,
        theta0=theta0,
        x0=x0,
        overdamped_in_band=bool(overdamped),
        splus_stable=splus_stable(p),
    )
