"""Phase-portrait geometry for N = 3, 4 in projected coordinates of the canonical region."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from skimage.measure import find_contours

from .cir import project, sample_q_set
from .coupling import TWO_PI
from .invariant_states import EquilibriumReport, constant_of_motion_n3
from .svg import SvgCanvas
from .system import SystemParams, integrate

Q_COLOURS = ("#999999", "#bbbbbb", "#777777", "#aaaaaa")
REGION_COLOURS = ("#1f4e9a", "#3a78c8", "#6aa5e0", "#a3c9ef")


@dataclass
class ProjectedTrajectory:
    times: np.ndarray
    psi: np.ndarray  # θ_k − θ_1, k = 2..N, wrapped to [0, 2π)
    points: np.ndarray  # project() coordinates
    labels: Optional[np.ndarray] = None  # N = 4: region index 0..3 from the Q^{4,1}, Q^{4,3} sides
    crossings: list[tuple[float, int]] = field(default_factory=list)  # (t, q) with q in {1, 3}


@dataclass
class PortraitData:
    N: int
    equilibria: list[EquilibriumReport]
    trajectories: list[ProjectedTrajectory]
    q_overlays: dict[int, np.ndarray]
    boundary: list[np.ndarray]
    level_sets: list[tuple[float, list[np.ndarray]]] = field(default_factory=list)


def q_side_functions(psi) -> tuple[np.ndarray, np.ndarray]:
    """Signed functions vanishing on Q^{4,1} and Q^{4,3}: θ4 + θ3 − θ2 − 2π and θ4 − θ2 − θ3."""
    psi = np.asarray(psi, dtype=float)
    t2, t3, t4 = psi[..., 0], psi[..., 1], psi[..., 2]
    return t4 + t3 - t2 - TWO_PI, t4 - t2 - t3


def region_labels(psi) -> np.ndarray:
    s41, s43 = q_side_functions(psi)
    return 2 * (s41 > 0).astype(int) + (s43 > 0).astype(int)


def _crossings(times, psi) -> list[tuple[float, int]]:
    s41, s43 = q_side_functions(psi)
    out = []
    for q, s in ((1, s41), (3, s43)):
        for k in np.nonzero(np.sign(s[:-1]) * np.sign(s[1:]) < 0)[0]:
            w = s[k] / (s[k] - s[k + 1])
            out.append((float(times[k] + w * (times[k + 1] - times[k])), q))
    return sorted(out)


def boundary_edges(N: int) -> list[np.ndarray]:
    """Edges of the closure of the canonical region, projected."""
    verts = [np.concatenate([np.zeros(N - k), np.full(k, TWO_PI)]) for k in range(N)]
    edges = []
    for i in range(N):
        for j in range(i + 1, N):
            seg = np.linspace(0, 1, 2)[:, None] * (verts[j] - verts[i]) + verts[i]
            edges.append(project(seg))
    return edges


def level_set_contours(p: SystemParams, levels: Sequence[float], grid: int = 512) -> list[tuple[float, list[np.ndarray]]]:
    """Level curves of the N = 3 constant of motion inside the canonical region, projected.

    Traced by marching squares on a ``grid × grid`` lattice of (ψ2, ψ3).
    """
    ax = np.linspace(0.0, TWO_PI, grid)
    P2, P3 = np.meshgrid(ax, ax, indexing="ij")
    V = constant_of_motion_n3(p, np.stack([np.zeros_like(P2), P2, P3], axis=-1))
    h = ax[1] - ax[0]
    out = []
    for lev in levels:
        polys = []
        for c in find_contours(V, lev):
            psi = c * h
            inside = psi[:, 0] <= psi[:, 1] + 1e-12
            # split where the contour leaves the region
            start = None
            for k, ok in enumerate(list(inside) + [False]):
                if ok and start is None:
                    start = k
                elif not ok and start is not None:
                    if k - start >= 2:
                        seg = psi[start:k]
                        polys.append(project(np.column_stack([np.zeros(len(seg)), seg])))
                    start = None
        out.append((float(lev), polys))
    return out


def default_equilibria(p: SystemParams) -> list[EquilibriumReport]:
    """Scan-based equilibria; for N = 4 and even g, where equilibria form curves, the Q-set families."""
    from .bifurcation import find_equilibria
    from .invariant_states import even_q40_equilibria, even_q43_equilibria

    if p.N == 4 and p.g.is_even():
        return even_q40_equilibria(p.g) + even_q43_equilibria(p.g, n_grid=16).points
    return find_equilibria(p, 48 if p.N == 3 else 16)


def portrait(p: SystemParams, seeds: Sequence, T: float, n_samples: int = 400, backward: bool = False,
             equilibria: Optional[list[EquilibriumReport]] = None, n_q_samples: int = 60,
             n_levels: int = 8, level_grid: int = 512) -> PortraitData:
    """Trajectories, equilibria, Q-set overlays and (N = 3, even g) level sets.

    ``equilibria`` defaults to :func:`default_equilibria`.
    """
    if p.N not in (3, 4):
        raise ValueError(f"portraits are available for N = 3, 4, got N = {p.N}")
    if equilibria is None:
        equilibria = default_equilibria(p)
    seeds = np.asarray(seeds, dtype=float).reshape(-1, p.N)
    trajs: list[ProjectedTrajectory] = []
    spans = [T, -T] if backward else [T]
    for span in spans:
        if not len(seeds):
            break
        t_eval = np.linspace(0.0, span, n_samples)
        tr = integrate(p, seeds, span, t_eval=t_eval)
        for b in range(len(seeds)):
            th = tr.states[:, b, :]
            psi = np.mod(th[:, 1:] - th[:, :1], TWO_PI)
            pts = project(np.column_stack([np.zeros(len(psi)), psi]))
            if p.N == 4:
                trajs.append(ProjectedTrajectory(tr.times, psi, pts, region_labels(psi), _crossings(tr.times, psi)))
            else:
                trajs.append(ProjectedTrajectory(tr.times, psi, pts))
    overlays = {q: project(sample_q_set(p.N, q, n_q_samples)) for q in range(p.N)}
    levels: list[tuple[float, list[np.ndarray]]] = []
    if p.N == 3 and p.g.is_even():
        vals = [float(constant_of_motion_n3(p, s)) for s in seeds]
        ax = np.linspace(0, TWO_PI, 64)
        A, B = np.meshgrid(ax, ax, indexing="ij")
        pts = np.stack([np.zeros_like(A), A, B], axis=-1)[A <= B]
        vg = constant_of_motion_n3(p, pts)
        vals += list(np.linspace(vg.min(), vg.max(), n_levels + 2)[1:-1])
        levels = level_set_contours(p, vals, level_grid)
    return PortraitData(p.N, equilibria, trajs, overlays, boundary_edges(p.N), levels)


# -- export -------------------------------------------------------------------------


def to_plane(points: np.ndarray) -> np.ndarray:
    """2-D drawing coordinates: identity for N = 3, an oblique view for N = 4."""
    points = np.asarray(points, dtype=float)
    if points.shape[-1] == 2:
        return points
    c, s = math.cos(math.pi / 6), math.sin(math.pi / 6)
    return np.column_stack([points[:, 0] + 0.5 * c * points[:, 2], points[:, 1] + 0.5 * s * points[:, 2]])


def portrait_svg(data: PortraitData, title: str = "") -> SvgCanvas:
    planes = [to_plane(e) for e in data.boundary]
    allpts = np.vstack(planes)
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    pad = 0.05 * float(np.max(hi - lo))
    cv = SvgCanvas((lo[0] - pad, hi[0] + pad, lo[1] - pad, hi[1] + pad), title=title)
    for e in planes:
        cv.polyline(e, stroke="black", width=1.5)
    for q in sorted(data.q_overlays):
        pts = to_plane(data.q_overlays[q])
        if data.N == 3 or q in (0, 2):
            cv.polyline(pts, stroke=Q_COLOURS[q], width=2.0)
        else:
            for pt in pts:
                cv.circle(pt, r=1.0, fill=Q_COLOURS[q], stroke=Q_COLOURS[q])
    for _, polys in data.level_sets:
        for poly in polys:
            cv.polyline(to_plane(poly), stroke="#3a78c8", width=0.8)
    for tr in data.trajectories:
        pts = to_plane(tr.points)
        if tr.labels is None:
            cv.polyline(pts, stroke="#1f4e9a", width=1.0)
            continue
        # one polyline per run of constant region label
        start = 0
        for k in range(1, len(pts) + 1):
            if k == len(pts) or tr.labels[k] != tr.labels[start]:
                cv.polyline(pts[start:min(k + 1, len(pts))], stroke=REGION_COLOURS[tr.labels[start]], width=1.2)
                start = k
    for e in data.equilibria:
        cv.glyph(to_plane(project(e.theta)[None, :])[0], e.stability)
    return cv


def write_portrait_csv(path, data: PortraitData) -> None:
    """All geometry as rows ``kind, id, index, x, y[, z]`` in projected coordinates."""
    fmt = lambda v: format(float(v), ".17g")
    d = data.N - 1
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "id", "index"] + ["x", "y", "z"][:d] + ["extra"])
        for i, e in enumerate(data.boundary):
            for k, pt in enumerate(e):
                w.writerow(["boundary", i, k] + [fmt(v) for v in pt] + [""])
        for q in sorted(data.q_overlays):
            for k, pt in enumerate(data.q_overlays[q]):
                w.writerow(["q_set", q, k] + [fmt(v) for v in pt] + [""])
        for i, (lev, polys) in enumerate(data.level_sets):
            for j, poly in enumerate(polys):
                for k, pt in enumerate(poly):
                    w.writerow(["level_set", f"{i}:{j}", k] + [fmt(v) for v in pt] + [fmt(lev)])
        for i, tr in enumerate(data.trajectories):
            for k, pt in enumerate(tr.points):
                extra = "" if tr.labels is None else int(tr.labels[k])
                w.writerow(["trajectory", i, k] + [fmt(v) for v in pt] + [extra])
        for i, e in enumerate(data.equilibria):
            w.writerow(["equilibrium", i, 0] + [fmt(v) for v in project(e.theta)] + [e.stability])
