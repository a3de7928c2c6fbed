"""Poincaré sections flanking the saddle, grid transport under the section
maps, and the one-dimensional return-map (tent) test.

Two planar sections sit next to the origin: an entry plane perpendicular
to the transverse stable axis, and an exit plane perpendicular to the
outgoing axis.  Since trajectories leave the saddle neighborhood on either
side, the exit plane has a mirror branch; which branch a point uses is part
of its image.  Grids of colored points are carried through the local map
(entry to exit), the global map (exit back to entry), and their repeated
composition, with per-point misses (escape, timeout, integrator failure)
recorded rather than raised.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .integrate import EventSpec, IntegrationError, integrate
from .model import PathPoint, saddle_data, symmetry_image
from .separatrix import RunSettings, seed_separatrix

__all__ = [
    "SectionKind",
    "Section",
    "PointStatus",
    "ColoredGrid",
    "GridImage",
    "TentMapResult",
    "build_sections",
    "rectangle_grid",
    "half_frame",
    "separatrix_section_hit",
    "map_local",
    "map_global",
    "iterate_grid",
    "section_trace",
    "tent_map_test",
    "write_grid_csv",
    "write_return_map_csv",
]


class SectionKind(str, Enum):
    IN = "In"
    OUT = "Out"


@dataclass(frozen=True, eq=False)
class Section:
    """A plane near the saddle with an in-plane coordinate frame.

    ``coords`` projects a 3-space state onto the two basis directions
    relative to the origin; ``embed`` is its right inverse.
    """

    origin: np.ndarray
    normal: np.ndarray
    basis: tuple  # two orthonormal in-plane vectors
    kind: SectionKind

    def __post_init__(self):
        n, (e1, e2) = self.normal, self.basis
        for name, vec in (("normal", n), ("basis[0]", e1), ("basis[1]", e2)):
            if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
                raise ValueError(f"{name} must be a unit vector")
        if max(abs(n @ e1), abs(n @ e2), abs(e1 @ e2)) > 1e-12:
            raise ValueError("normal and basis must be mutually perpendicular")

    @property
    def offset(self) -> float:
        return float(self.normal @ self.origin)

    def coords(self, y) -> np.ndarray:
        d = np.asarray(y, dtype=float) - self.origin
        return np.array([d @ self.basis[0], d @ self.basis[1]])

    def embed(self, ab) -> np.ndarray:
        a, b = float(ab[0]), float(ab[1])
        return self.origin + a * self.basis[0] + b * self.basis[1]

    def residual(self, y) -> float:
        return abs(float(self.normal @ np.asarray(y, dtype=float)) - self.offset)


def build_sections(
    point: PathPoint, eps_in: float = 0.5, eps_out: float = 0.5
) -> tuple:
    """Entry and exit planes at the stated distances from the saddle.

    The entry plane is perpendicular to the transverse stable axis with
    in-plane frame (outgoing, strongly-stable); the exit plane is
    perpendicular to the outgoing axis with frame (strongly-stable,
    transverse-stable).
    """
    for name, v in (("eps_in", eps_in), ("eps_out", eps_out)):
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"{name} must be positive, got {v}")
    sd = saddle_data(point)
    sec_in = Section(
        origin=eps_in * sd.v_s,
        normal=sd.v_s,
        basis=(sd.v_u, sd.v_ss),
        kind=SectionKind.IN,
    )
    sec_out = Section(
        origin=eps_out * sd.v_u,
        normal=sd.v_u,
        basis=(sd.v_ss, sd.v_s),
        kind=SectionKind.OUT,
    )
    return sec_in, sec_out


class PointStatus(str, Enum):
    HIT = "hit"
    ESCAPE = "escape"
    TIMEOUT = "timeout"
    ERROR = "error"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, eq=False)
class ColoredGrid:
    """Points in section coordinates with one color per row.

    Rows run along the second basis direction (fixed first coordinate);
    the color scale starts at the row crossing the stable plane (first
    coordinate zero) and grows toward the rim.
    """

    section: Section
    points: np.ndarray        # (n, 2) in-plane coordinates
    colors: np.ndarray        # (n,) in [0, 1]
    shape: str                # "rectangle" or "half-frame"

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise ValueError("points must be an (n, 2) array")
        if len(self.colors) != len(self.points):
            raise ValueError("one color per point required")

    def __len__(self) -> int:
        return len(self.points)

    def states(self) -> np.ndarray:
        e1, e2 = self.section.basis
        return (
            self.section.origin
            + self.points[:, :1] * e1
            + self.points[:, 1:] * e2
        )


def rectangle_grid(
    section: Section,
    half_a: float,
    half_b: float,
    n_rows: int = 200,
    n_cols: int = 40,
) -> ColoredGrid:
    """Centered rectangle [-half_a, half_a] x [-half_b, half_b].

    A row holds the points sharing the first coordinate; its color is the
    normalized distance of that coordinate from zero, so the scale starts
    on the row lying in the stable plane.
    """
    if not (half_a > 0 and half_b > 0):
        raise ValueError("half-extents must be positive")
    if n_rows < 2 or n_cols < 2:
        raise ValueError("need at least 2 rows and 2 columns")
    a_vals = np.linspace(-half_a, half_a, n_rows)
    b_vals = np.linspace(-half_b, half_b, n_cols)
    aa, bb = np.meshgrid(a_vals, b_vals, indexing="ij")
    pts = np.column_stack([aa.ravel(), bb.ravel()])
    colors = np.repeat(np.abs(a_vals) / half_a, n_cols)
    return ColoredGrid(section=section, points=pts, colors=colors, shape="rectangle")


def separatrix_section_hit(
    point: PathPoint,
    section: Section,
    settings: RunSettings = RunSettings(),
    sign: int = 1,
) -> Optional[np.ndarray]:
    """In-plane coordinates of the separatrix's first falling hit on the
    entry plane, or None when it never arrives within the time budget."""
    seed = seed_separatrix(point, sign=sign, offset=settings.seed_offset)
    ev = [
        EventSpec.plane(
            section.normal, section.offset,
            direction="falling", terminal=True, label="section",
        ),
        EventSpec.sphere(np.zeros(3), settings.r_inf, direction="rising",
                         terminal=True, label="escape"),
    ]
    traj = integrate(
        _params(point), seed, settings.integrator(10.0 * settings.t_lim), ev,
        store="last",
    )
    if traj.termination == "event" and traj.termination_label == "section":
        return section.coords(traj.events[-1].state)
    return None


def half_frame(
    grid: ColoredGrid,
    keep_point: np.ndarray,
    inner_fraction: float = 0.6,
    margin_fraction: float = 0.05,
) -> ColoredGrid:
    """Cut the middle out of a rectangle and drop the rim farthest from
    ``keep_point``, so what remains is an open frame that still contains
    ``keep_point`` and a margin around it.

    The inner cut shrinks along one axis if it would otherwise swallow the
    kept neighborhood (margin relative to the full side length).
    """
    if grid.shape != "rectangle":
        raise ValueError("half_frame expects a rectangle grid")
    pts = grid.points
    half_a = float(np.max(np.abs(pts[:, 0])))
    half_b = float(np.max(np.abs(pts[:, 1])))
    ka, kb = float(keep_point[0]), float(keep_point[1])
    if abs(ka) > half_a or abs(kb) > half_b:
        raise ValueError("keep_point must lie inside the rectangle")

    inner_a = inner_fraction * half_a
    inner_b = inner_fraction * half_b
    margin_a = margin_fraction * 2.0 * half_a
    margin_b = margin_fraction * 2.0 * half_b
    # the kept neighborhood must poke out of the cut on at least one axis
    if abs(ka) - margin_a < inner_a and abs(kb) - margin_b < inner_b:
        if abs(ka) / half_a >= abs(kb) / half_b:
            inner_a = max(0.0, abs(ka) - margin_a)
        else:
            inner_b = max(0.0, abs(kb) - margin_b)

    inside_cut = (np.abs(pts[:, 0]) < inner_a) & (np.abs(pts[:, 1]) < inner_b)
    # open the frame on the side away from the kept point; when the kept
    # point sits near the center the removal threshold backs off so its
    # margin stays intact
    if abs(ka) / half_a >= abs(kb) / half_b:
        thr = max(inner_a, margin_a - abs(ka))
        far_side = pts[:, 0] * np.sign(ka) < -thr
    else:
        thr = max(inner_b, margin_b - abs(kb))
        far_side = pts[:, 1] * np.sign(kb) < -thr
    keep = ~(inside_cut | far_side)
    return ColoredGrid(
        section=grid.section,
        points=pts[keep],
        colors=grid.colors[keep],
        shape="half-frame",
    )


@dataclass(frozen=True, eq=False)
class GridImage:
    """Result of transporting a grid to a target section."""

    section: Section
    source: ColoredGrid
    points: np.ndarray        # (n, 2) target coords; NaN rows for misses
    status: np.ndarray        # (n,) PointStatus values
    times: np.ndarray         # (n,) hit times; NaN for misses
    exit_side: np.ndarray     # (n,) -1/+1 branch used; 0 for misses / entry plane
    colors: np.ndarray
    residuals: np.ndarray     # (n,) |plane defect| of the raw hit states

    @property
    def hits(self) -> np.ndarray:
        return self.status == PointStatus.HIT

    def hit_points(self) -> np.ndarray:
        return self.points[self.hits]


def _params(point: PathPoint):
    from .model import path_params

    return path_params(point)


def _transport(
    point: PathPoint,
    states: np.ndarray,
    events: list,
    settings: RunSettings,
    label_to_side,
    label_to_plane,
) -> tuple:
    """Integrate each state to the first terminal section event.

    Returns per-point (state, time, status, side, residual) arrays;
    non-section terminations and integrator failures become misses.
    ``label_to_plane`` maps a section event label to its (normal, offset)
    pair so the raw hit's plane defect can be reported.
    """
    p = _params(point)
    cfg = settings.integrator(10.0 * settings.t_lim)
    n = len(states)
    out_states = np.full((n, 3), np.nan)
    out_times = np.full(n, np.nan)
    status = np.empty(n, dtype=object)
    sides = np.zeros(n, dtype=int)
    residuals = np.full(n, np.nan)
    for i, y0 in enumerate(states):
        try:
            traj = integrate(p, y0, cfg, events, store="last")
        except IntegrationError:
            status[i] = PointStatus.ERROR
            continue
        if traj.termination != "event":
            status[i] = PointStatus.TIMEOUT
            continue
        label = traj.termination_label
        if label == "escape":
            status[i] = PointStatus.ESCAPE
            continue
        hit = traj.events[-1]
        out_states[i] = hit.state
        out_times[i] = hit.time
        status[i] = PointStatus.HIT
        sides[i] = label_to_side[label]
        normal, offset = label_to_plane[label]
        residuals[i] = abs(float(normal @ hit.state) - offset)
    return out_states, out_times, status, sides, residuals


def map_local(
    sec_in: Section,
    sec_out: Section,
    point: PathPoint,
    grid: ColoredGrid,
    settings: RunSettings = RunSettings(),
) -> GridImage:
    """Carry entry-plane points to their first crossing of the exit plane.

    The exit plane and its mirror image are both watched (outward crossing
    direction each); the branch taken is recorded as the image's exit side.
    Image coordinates are taken in the frame of the branch actually hit:
    the mirror branch uses the symmetry image of the exit frame.
    """
    events = [
        EventSpec.plane(sec_out.normal, sec_out.offset,
                        direction="rising", terminal=True, label="out+"),
        EventSpec.plane(sec_out.normal, -sec_out.offset,
                        direction="falling", terminal=True, label="out-"),
        EventSpec.sphere(np.zeros(3), settings.r_inf, direction="rising",
                         terminal=True, label="escape"),
    ]
    planes = {
        "out+": (sec_out.normal, sec_out.offset),
        "out-": (sec_out.normal, -sec_out.offset),
    }
    states, times, status, sides, res = _transport(
        point, grid.states(), events, settings, {"out+": 1, "out-": -1}, planes
    )
    pts = np.full((len(states), 2), np.nan)
    for i in range(len(states)):
        if status[i] is not PointStatus.HIT:
            continue
        y = states[i] if sides[i] > 0 else symmetry_image(states[i])
        pts[i] = sec_out.coords(y)
    return GridImage(
        section=sec_out, source=grid, points=pts, status=status,
        times=times, exit_side=sides, colors=grid.colors.copy(), residuals=res,
    )


def map_global(
    sec_out: Section,
    sec_in: Section,
    point: PathPoint,
    image: GridImage,
    settings: RunSettings = RunSettings(),
) -> GridImage:
    """Carry exit-plane hits back to the entry plane (falling crossing).

    Misses in the input stay misses; each hit is re-embedded on its own
    branch before integrating onward.
    """
    events = [
        EventSpec.plane(sec_in.normal, sec_in.offset,
                        direction="falling", terminal=True, label="in"),
        EventSpec.sphere(np.zeros(3), settings.r_inf, direction="rising",
                         terminal=True, label="escape"),
    ]
    planes = {"in": (sec_in.normal, sec_in.offset)}
    n = len(image.points)
    pts = np.full((n, 2), np.nan)
    times = np.full(n, np.nan)
    status = np.array([PointStatus.ERROR] * n, dtype=object)
    res = np.full(n, np.nan)
    for i in range(n):
        if image.status[i] is not PointStatus.HIT:
            status[i] = image.status[i]
            continue
        y0 = sec_out.embed(image.points[i])
        if image.exit_side[i] < 0:
            y0 = symmetry_image(y0)
        st, tm, stt, _, rr = _transport(
            point, y0[None, :], events, settings, {"in": 0}, planes
        )
        status[i] = stt[0]
        if stt[0] is PointStatus.HIT:
            pts[i] = sec_in.coords(st[0])
            times[i] = tm[0]
            res[i] = rr[0]
    return GridImage(
        section=sec_in, source=image.source, points=pts, status=status,
        times=times, exit_side=np.zeros(n, dtype=int), colors=image.colors.copy(),
        residuals=res,
    )


def iterate_grid(
    point: PathPoint,
    grid: ColoredGrid,
    n_iter: int,
    settings: RunSettings = RunSettings(),
) -> list:
    """Images of the grid under 0, 1, ..., n_iter applications of the full
    return map (entry plane to entry plane).

    Iteration uses the first falling return to the entry plane directly;
    on the orbits involved this is the local-global composition, since a
    returning orbit must first leave across the exit plane.  Points lost
    to a miss keep their miss status in all later images; colors ride
    along unchanged.
    """
    if n_iter < 0:
        raise ValueError("n_iter must be >= 0")
    sec_in = grid.section
    events = [
        EventSpec.plane(sec_in.normal, sec_in.offset,
                        direction="falling", terminal=True, label="in"),
        EventSpec.sphere(np.zeros(3), settings.r_inf, direction="rising",
                         terminal=True, label="escape"),
    ]
    planes = {"in": (sec_in.normal, sec_in.offset)}
    n = len(grid)
    current = grid.points.copy()
    alive = np.ones(n, dtype=bool)
    status = np.array([PointStatus.HIT] * n, dtype=object)
    images = [
        GridImage(
            section=sec_in, source=grid, points=current.copy(),
            status=status.copy(), times=np.zeros(n), exit_side=np.zeros(n, dtype=int),
            colors=grid.colors.copy(), residuals=np.zeros(n),
        )
    ]
    for _ in range(n_iter):
        pts = np.full((n, 2), np.nan)
        times = np.full(n, np.nan)
        res = np.full(n, np.nan)
        for i in range(n):
            if not alive[i]:
                continue
            st, tm, stt, _, rr = _transport(
                point, sec_in.embed(current[i])[None, :], events, settings,
                {"in": 0}, planes,
            )
            status[i] = stt[0]
            if stt[0] is PointStatus.HIT:
                pts[i] = sec_in.coords(st[0])
                times[i] = tm[0]
                res[i] = rr[0]
            else:
                alive[i] = False
        current = pts
        images.append(
            GridImage(
                section=sec_in, source=grid, points=pts, status=status.copy(),
                times=times, exit_side=np.zeros(n, dtype=int),
                colors=grid.colors.copy(), residuals=res,
            )
        )
    return images


def section_trace(
    point: PathPoint,
    section: Section,
    t_collect: float = 3000.0,
    settings: RunSettings = RunSettings(),
    y0: Optional[np.ndarray] = None,
) -> np.ndarray:
    """In-plane coordinates of an orbit's falling crossings of the section.

    Starting from ``y0`` (default: the separatrix seed run through the
    transient horizon), the orbit is followed for ``t_collect`` and every
    falling hit is projected into section coordinates.
    """
    p = _params(point)
    if y0 is None:
        seed = seed_separatrix(point, sign=1, offset=settings.seed_offset)
        warm = integrate(
            p, seed, settings.integrator(settings.t_trans),
            [EventSpec.sphere(np.zeros(3), settings.r_inf, direction="rising",
                              terminal=True, label="escape")],
            store="last",
        )
        if warm.termination == "event":
            raise ValueError("orbit escaped during the transient leg")
        y0 = warm.y_final
    ev = [
        EventSpec.plane(section.normal, section.offset,
                        direction="falling", terminal=False, label="section"),
        EventSpec.sphere(np.zeros(3), settings.r_inf, direction="rising",
                         terminal=True, label="escape"),
    ]
    traj = integrate(p, y0, settings.integrator(t_collect), ev, store="last")
    hits = [h.state for h in traj.events if h.label == "section"]
    if not hits:
        return np.empty((0, 2))
    return np.array([section.coords(y) for y in hits])


@dataclass(frozen=True, eq=False)
class TentMapResult:
    """One-dimensional return map along the section trace's principal axis."""

    table: np.ndarray         # (n, 2) sorted (coord, image_coord) pairs
    slope: float              # average branch slope magnitude
    branch_slopes: tuple      # (left, right) fitted slopes
    peak_coord: float
    aspect_ratio: float
    n_missed: int


def tent_map_test(
    point: PathPoint,
    section_points: np.ndarray,
    section: Optional[Section] = None,
    settings: RunSettings = RunSettings(),
) -> TentMapResult:
    """Reduce the return map on the attractor's section trace to one
    dimension and fit the two branch slopes.

    The point cloud is projected onto its principal axis (it must be
    segment-like: aspect ratio at least 5), each point is mapped once by
    the full return map, and the image's coordinate along the same axis
    makes the (coord, image) table.  Coordinates are folded about the
    section origin — the fixed point of the wing-swap symmetry — so that
    a trace visiting both wings overlays onto a single branch graph.
    The slope is the weighted average of the branch magnitudes on either
    side of the image maximum.
    """
    pts = np.asarray(section_points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 10:
        raise ValueError("need at least 10 section points of shape (n, 2)")
    if section is None:
        section, _ = build_sections(point)

    center = pts.mean(axis=0)
    cov = np.cov((pts - center).T)
    evals, evecs = np.linalg.eigh(cov)
    aspect = math.sqrt(evals[1] / max(evals[0], 1e-300))
    if aspect < 5.0:
        raise ValueError(
            f"section points do not form a segment (aspect ratio {aspect:.2f} < 5)"
        )
    axis = evecs[:, 1]

    events = [
        EventSpec.plane(section.normal, section.offset,
                        direction="falling", terminal=True, label="in"),
        EventSpec.sphere(np.zeros(3), settings.r_inf, direction="rising",
                         terminal=True, label="escape"),
    ]
    states = np.array([section.embed(ab) for ab in pts])
    imgs, _, status, _, _ = _transport(
        point, states, events, settings, {"in": 0},
        {"in": (section.normal, section.offset)},
    )

    rows = []
    n_missed = 0
    for i in range(len(pts)):
        if status[i] is not PointStatus.HIT:
            n_missed += 1
            continue
        c = abs(float(pts[i] @ axis))
        ci = abs(float(section.coords(imgs[i]) @ axis))
        rows.append((c, ci))
    if len(rows) < 10:
        raise ValueError(f"too few mapped points ({len(rows)}) for a slope fit")
    table = np.array(sorted(rows))
    slope, branch_slopes, peak = _fit_tent_slope(table)
    return TentMapResult(
        table=table,
        slope=slope,
        branch_slopes=branch_slopes,
        peak_coord=peak,
        aspect_ratio=float(aspect),
        n_missed=n_missed,
    )


def _fit_tent_slope(table: np.ndarray) -> tuple:
    """Piecewise-linear slope magnitude of a sorted (coord, image) table.

    The table splits at the image maximum; each side gets a least-squares
    line, and the result is the point-count-weighted average of the two
    slope magnitudes.  A side with fewer than 3 points contributes NaN
    and is left out of the average.
    """
    k_peak = int(np.argmax(table[:, 1]))
    peak = float(table[k_peak, 0])
    left = table[table[:, 0] <= peak]
    right = table[table[:, 0] >= peak]
    slopes = []
    for part in (left, right):
        if len(part) >= 3 and np.ptp(part[:, 0]) > 0:
            m = np.polyfit(part[:, 0], part[:, 1], 1)[0]
            slopes.append(float(m))
        else:
            slopes.append(float("nan"))
    weights = [max(len(left), 1), max(len(right), 1)]
    finite = [(abs(m), w) for m, w in zip(slopes, weights) if math.isfinite(m)]
    if not finite:
        raise ValueError("tent slope fit failed: both branches degenerate")
    slope = sum(m * w for m, w in finite) / sum(w for _, w in finite)
    return slope, tuple(slopes), peak


def write_grid_csv(
    images: Sequence[GridImage],
    stream: io.TextIOBase,
    iterations: Optional[Sequence[int]] = None,
) -> None:
    """point_id,iter,a,b,color,status rows for a sequence of images.

    ``iterations`` relabels the iter column when the sequence is a
    selection rather than a full 0..n run.
    """
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["point_id", "iter", "a", "b", "color", "status"])
    labels = range(len(images)) if iterations is None else iterations
    for it, img in zip(labels, images):
        for i in range(len(img.points)):
            a, b = img.points[i]
            w.writerow(
                [
                    i,
                    it,
                    "%.17g" % a if math.isfinite(a) else "",
                    "%.17g" % b if math.isfinite(b) else "",
                    "%.6g" % img.colors[i],
                    str(img.status[i]),
                ]
            )


def write_return_map_csv(result: TentMapResult, stream: io.TextIOBase) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["coord", "image_coord"])
    for c, ci in result.table:
        w.writerow(["%.17g" % c, "%.17g" % ci])
