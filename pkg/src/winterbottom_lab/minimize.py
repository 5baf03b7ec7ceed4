"""Polygonal minimisation of the capillary energy and degenerate-regime witnesses.

The search is a derivative-free compass descent: each vertex in turn tries a
step along +-e1 and +-e2 and keeps the first move that lowers the
scale-free ratio ``energy / sqrt(area)``. Moves that would break simplicity
are rejected and moves below the substrate are projected onto it. The step
shrinks geometrically once a full sweep makes no progress.

The inner loop is compiled with numba; the anisotropy is passed as plain
arrays (``sqrt(n^T M n) + <s, n>`` for the smooth families, a vertex list for
crystalline ones).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import InvalidPolygonError, OptimizationFailureError, RegimeError
from .geometry import (
    HalfPlanePolygon,
    capillary_energy,
    diameter,
    hausdorff_mod_horizontal,
    random_polygon,
)
from .winterbottom import Regime, regime, require_winterbottom, winterbottom

THREADS_ENV = "WINTERBOTTOM_LAB_THREADS"


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class MinimizeConfig:
    vertex_count: int = 64
    restarts: int = 8
    max_iterations: int = 5000
    step_init: float | None = None  # default: 0.05 * diameter of each start
    step_shrink: float = 0.7
    seed: int = 0
    mode: str = "ratio"
    boundary_samples: int = 2048

    def __post_init__(self):
        if self.vertex_count < 8:
            raise ValueError("vertex_count must be >= 8")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not 0 < self.step_shrink < 1:
            raise ValueError("step_shrink must lie in (0, 1)")
        if self.mode not in ("ratio", "fixed_volume"):
            raise ValueError("mode must be 'ratio' or 'fixed_volume'")
        if self.step_init is not None and not self.step_init > 0:
            raise ValueError("step_init must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "MinimizeConfig":
        allowed = set(cls.__dataclass_fields__)
        unknown = set(data) - allowed
        if unknown:
            raise ValueError(f"unknown minimize fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class MinimizeReport:
    best_polygon: HalfPlanePolygon
    best_energy: float
    best_ratio: float
    winterbottom_energy: float
    winterbottom_ratio: float
    relative_gap: float
    hausdorff_mod_translation: float
    iterations_used: int
    per_restart_energies: list = field(default_factory=list)
    mode: str = "ratio"
    winterbottom_diameter: float = 0.0

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "best_polygon": self.best_polygon.to_dict(),
            "best_energy": self.best_energy,
            "best_ratio": self.best_ratio,
            "winterbottom_energy": self.winterbottom_energy,
            "winterbottom_ratio": self.winterbottom_ratio,
            "relative_gap": self.relative_gap,
            "hausdorff_mod_translation": self.hausdorff_mod_translation,
            "iterations_used": self.iterations_used,
            "per_restart_energies": list(self.per_restart_energies),
        }


# -- compiled kernel -----------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _edge_cost(x0, y0, x1, y1, kind, M, s, W, beta):
    dx = x1 - x0
    dy = y1 - y0
    if y0 == 0.0 and y1 == 0.0:
        return -beta * math.sqrt(dx * dx + dy * dy)
    nx = dy
    ny = -dx
    if kind == 0:
        q = M[0, 0] * nx * nx + 2.0 * M[0, 1] * nx * ny + M[1, 1] * ny * ny
        return math.sqrt(max(q, 0.0)) + s[0] * nx + s[1] * ny
    best = -np.inf
    for k in range(W.shape[0]):
        v = W[k, 0] * nx + W[k, 1] * ny
        if v > best:
            best = v
    return best


@numba.njit(cache=True, nogil=True)
def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


@numba.njit(cache=True, nogil=True)
def _within(ax, ay, bx, by, px, py):
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


@numba.njit(cache=True, nogil=True)
def _segments_meet(ax, ay, bx, by, cx, cy, dx, dy):
    d1 = _orient(cx, cy, dx, dy, ax, ay)
    d2 = _orient(cx, cy, dx, dy, bx, by)
    d3 = _orient(ax, ay, bx, by, cx, cy)
    d4 = _orient(ax, ay, bx, by, dx, dy)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    if d1 == 0 and _within(cx, cy, dx, dy, ax, ay):
        return True
    if d2 == 0 and _within(cx, cy, dx, dy, bx, by):
        return True
    if d3 == 0 and _within(ax, ay, bx, by, cx, cy):
        return True
    if d4 == 0 and _within(ax, ay, bx, by, dx, dy):
        return True
    return False


@numba.njit(cache=True, nogil=True)
def _folds(ax, ay, bx, by, cx, cy):
    """True when a->b->c doubles back on itself (collinear reversal)."""
    if _orient(ax, ay, bx, by, cx, cy) != 0.0:
        return False
    return (bx - ax) * (cx - bx) + (by - ay) * (cy - by) <= 0.0


@numba.njit(cache=True, nogil=True)
def _move_is_simple(V, i, px, py):
    m = V.shape[0]
    p = (i - 1) % m
    pp = (i - 2) % m
    q = (i + 1) % m
    qq = (i + 2) % m
    if _folds(V[pp, 0], V[pp, 1], V[p, 0], V[p, 1], px, py):
        return False
    if _folds(V[p, 0], V[p, 1], px, py, V[q, 0], V[q, 1]):
        return False
    if _folds(px, py, V[q, 0], V[q, 1], V[qq, 0], V[qq, 1]):
        return False
    for j in range(m):
        k = (j + 1) % m
        # new edge p -> i against edges not touching p or i
        if j != pp and j != p and j != i:
            if _segments_meet(V[p, 0], V[p, 1], px, py, V[j, 0], V[j, 1], V[k, 0], V[k, 1]):
                return False
        # new edge i -> q against edges not touching i or q
        if j != p and j != i and j != q:
            if _segments_meet(px, py, V[q, 0], V[q, 1], V[j, 0], V[j, 1], V[k, 0], V[k, 1]):
                return False
    return True


@numba.njit(cache=True, nogil=True)
def _totals(V, kind, M, s, W, beta, cost, tri):
    m = V.shape[0]
    E = 0.0
    A = 0.0
    for j in range(m):
        k = (j + 1) % m
        cost[j] = _edge_cost(V[j, 0], V[j, 1], V[k, 0], V[k, 1], kind, M, s, W, beta)
        tri[j] = 0.5 * (V[j, 0] * V[k, 1] - V[k, 0] * V[j, 1])
        E += cost[j]
        A += tri[j]
    return E, A


@numba.njit(cache=True, nogil=True)
def _diameter(V):
    m = V.shape[0]
    best = 0.0
    for a in range(m):
        for b in range(a + 1, m):
            d = (V[a, 0] - V[b, 0]) ** 2 + (V[a, 1] - V[b, 1]) ** 2
            if d > best:
                best = d
    return math.sqrt(best)


@numba.njit(cache=True, nogil=True)
def _rescale(V, area, target, prefer_contact_anchor):
    """Scale V to ``target`` area, keeping it in the closed upper half-plane."""
    m = V.shape[0]
    f = math.sqrt(target / area)
    low = 0
    contact = -1
    for j in range(m):
        if V[j, 1] < V[low, 1]:
            low = j
        if V[j, 1] == 0.0 and (contact < 0 or V[j, 0] < V[contact, 0]):
            contact = j
    if contact >= 0 or not prefer_contact_anchor:
        a = contact if contact >= 0 else low
        ax = V[a, 0]
        ay = V[a, 1]
    else:
        # area centroid
        cx = 0.0
        cy = 0.0
        for j in range(m):
            k = (j + 1) % m
            cr = V[j, 0] * V[k, 1] - V[k, 0] * V[j, 1]
            cx += (V[j, 0] + V[k, 0]) * cr
            cy += (V[j, 1] + V[k, 1]) * cr
        ax = cx / (6.0 * area)
        ay = cy / (6.0 * area)
        if ay + f * (V[low, 1] - ay) < 0.0:
            ax = V[low, 0]
            ay = V[low, 1]
    for j in range(m):
        y_on = V[j, 1] == 0.0
        V[j, 0] = ax + f * (V[j, 0] - ax)
        V[j, 1] = 0.0 if y_on else ay + f * (V[j, 1] - ay)


@numba.njit(cache=True, nogil=True)
def _descend(V, kind, M, s, W, beta, step, shrink, min_step_rel, max_sweeps, restore_each_move, target):
    m = V.shape[0]
    cost = np.empty(m)
    tri = np.empty(m)
    E, A = _totals(V, kind, M, s, W, beta, cost, tri)
    diam = _diameter(V)
    sweeps = 0
    dirs = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    while sweeps < max_sweeps and step >= min_step_rel * diam:
        improved = False
        for i in range(m):
            p = (i - 1) % m
            q = (i + 1) % m
            obj = E / math.sqrt(A)
            for d in range(4):
                px = V[i, 0] + step * dirs[d, 0]
                py = V[i, 1] + step * dirs[d, 1]
                if py < 0.0:
                    py = 0.0
                if px == V[i, 0] and py == V[i, 1]:
                    continue
                c1 = _edge_cost(V[p, 0], V[p, 1], px, py, kind, M, s, W, beta)
                c2 = _edge_cost(px, py, V[q, 0], V[q, 1], kind, M, s, W, beta)
                t1 = 0.5 * (V[p, 0] * py - px * V[p, 1])
                t2 = 0.5 * (px * V[q, 1] - V[q, 0] * py)
                A2 = A - tri[p] - tri[i] + t1 + t2
                if A2 <= 0.0:
                    continue
                E2 = E - cost[p] - cost[i] + c1 + c2
                if E2 / math.sqrt(A2) >= obj * (1.0 - 1e-14) - 1e-300:
                    continue
                if not _move_is_simple(V, i, px, py):
                    continue
                V[i, 0] = px
                V[i, 1] = py
                cost[p] = c1
                cost[i] = c2
                tri[p] = t1
                tri[i] = t2
                E = E2
                A = A2
                if restore_each_move:
                    _rescale(V, A, target, True)
                    E, A = _totals(V, kind, M, s, W, beta, cost, tri)
                improved = True
                break
        sweeps += 1
        if not restore_each_move:
            _rescale(V, A, target, False)
        E, A = _totals(V, kind, M, s, W, beta, cost, tri)
        if not improved:
            step *= shrink
            diam = _diameter(V)
    return sweeps


def _kernel_params(phi):
    kind = getattr(phi, "kind", None)
    W = np.zeros((1, 2))
    M = np.eye(2)
    s = np.zeros(2)
    if kind == "support_polytope":
        return 1, M, s, np.ascontiguousarray(phi.hull_vertices, dtype=float)
    if kind == "euclidean":
        return 0, M, s, W
    if kind == "quadratic":
        return 0, np.array(phi.matrix, dtype=float), s, W
    if kind == "shifted_euclidean":
        return 0, M, np.array(phi.shift, dtype=float), W
    raise ValueError(f"unsupported anisotropy kind for minimisation: {kind!r}")


# -- starts ----------------------------------------------------------------------


def resample_polygon(V, count: int, corner_angle: float = 0.2) -> np.ndarray:
    """Resample a closed polygon to ``count`` vertices.

    Corners (turning angle above ``corner_angle``) and the ends of substrate
    contact are kept; the remaining vertices are spread by arclength over the
    chains between them, wetted chains getting a quarter of their share.
    """
    V = np.asarray(V, dtype=float)
    n = len(V)
    prev = np.roll(V, 1, axis=0)
    nxt = np.roll(V, -1, axis=0)
    a = V - prev
    b = nxt - V
    turn = np.abs(np.arctan2(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0], (a * b).sum(1)))
    on = V[:, 1] == 0
    contact_end = on & (~np.roll(on, 1) | ~np.roll(on, -1))
    keep = np.flatnonzero((turn > corner_angle) | contact_end)
    if len(keep) > count:
        keep = keep[np.argsort(-turn[keep], kind="stable")[:count]]
        keep.sort()
    if len(keep) == 0:
        keep = np.array([0])
    seg = np.linalg.norm(nxt - V, axis=1)
    wet = on & np.roll(on, -1)
    chains = []
    for c in range(len(keep)):
        i0 = keep[c]
        i1 = keep[(c + 1) % len(keep)]
        idx = np.arange(i0, i1 if i1 > i0 else i1 + n) % n
        L = seg[idx].sum()
        weight = L * (0.25 if np.all(wet[idx]) else 1.0)
        chains.append((idx, L, weight))
    extra = count - len(keep)
    weights = np.array([w for _, _, w in chains])
    share = extra * weights / weights.sum() if weights.sum() > 0 else np.zeros(len(chains))
    alloc = np.floor(share).astype(int)
    order = np.argsort(-(share - alloc), kind="stable")
    alloc[order[: extra - alloc.sum()]] += 1
    out = []
    for (idx, L, _), k in zip(chains, alloc):
        out.append(V[idx[0]])
        if k == 0:
            continue
        cum = np.concatenate([[0.0], np.cumsum(seg[idx])])
        targets = L * np.arange(1, k + 1) / (k + 1)
        j = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, len(idx) - 1)
        t = (targets - cum[j]) / np.where(seg[idx][j] > 0, seg[idx][j], 1.0)
        A0 = V[idx[j]]
        A1 = V[(idx[j] + 1) % n]
        pts = A0 + t[:, None] * (A1 - A0)
        pts[(A0[:, 1] == 0) & (A1[:, 1] == 0), 1] = 0.0
        out.extend(pts)
    return np.array(out)


def _perturbed(V, rng, amount=0.05) -> np.ndarray:
    on = V[:, 1] == 0
    cx = V[on, 0].mean() if on.any() else V[:, 0].mean()
    anchor = np.array([cx, 0.0])
    f = 1.0 + amount * rng.uniform(-1.0, 1.0, len(V))
    f[on] = 1.0 + amount * rng.uniform(-1.0, 1.0)
    out = anchor + f[:, None] * (V - anchor)
    out[on, 1] = 0.0
    return out


def _scaled_to(V, target) -> np.ndarray:
    P = HalfPlanePolygon(V)
    anchor = P.substrate_anchor()
    out = anchor + math.sqrt(target / P.area) * (P.vertices - anchor)
    out[P.vertices[:, 1] == 0, 1] = 0.0
    return out


def starting_polygons(phi, beta, cfg: MinimizeConfig, target_area: float, wb) -> list[np.ndarray]:
    """Vertex arrays for each restart (all with ``cfg.vertex_count`` vertices)."""
    n = cfg.vertex_count
    starts = []
    for r in range(cfg.restarts):
        rng = np.random.default_rng(cfg.seed + r)
        kind = r if r < 3 else 3
        if kind == 0:
            base = resample_polygon(_scaled_to(wb.polygon.vertices, target_area), n)
            V = base
            for _ in range(50):
                cand = _perturbed(base, rng)
                try:
                    HalfPlanePolygon(cand)
                    V = cand
                    break
                except InvalidPolygonError:
                    continue
        elif kind == 1:
            h = math.sqrt(target_area / 2.0)
            rect = np.array([[-h, 0.0], [h, 0.0], [h, h], [-h, h]])
            V = resample_polygon(rect, n)
        elif kind == 2:
            rad = math.sqrt(2.0 * target_area / math.pi)
            t = np.linspace(0.0, math.pi, 512)
            half = np.c_[rad * np.cos(t), rad * np.sin(t)]
            half[0, 1] = half[-1, 1] = 0.0
            V = resample_polygon(half, n)
        else:
            P = random_polygon(cfg.seed + r, max(n // 2, 8), target_area, contact=(r % 2 == 1))
            V = resample_polygon(P.vertices, n)
        starts.append(np.ascontiguousarray(_scaled_to(V, target_area)))
    return starts


# -- drivers ---------------------------------------------------------------------


def _run_restart(args):
    V, params, beta, cfg, target = args
    kind, M, s, W = params
    V = V.copy()
    step = cfg.step_init if cfg.step_init is not None else 0.05 * diameter(V)
    sweeps = _descend(
        V, kind, M, s, W, float(beta), float(step), float(cfg.step_shrink), 1e-6,
        int(cfg.max_iterations), cfg.mode == "fixed_volume", float(target),
    )
    return V, int(sweeps)


def _search(phi, beta, cfg: MinimizeConfig, target_area: float, wb):
    params = _kernel_params(phi)
    starts = starting_polygons(phi, beta, cfg, target_area, wb)
    jobs = [(V, params, beta, cfg, target_area) for V in starts]
    workers = min(thread_cap(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_restart, jobs))
    else:
        results = [_run_restart(j) for j in jobs]
    polys, ratios, sweeps, failures = [], [], [], []
    for r, (V, n_sweeps) in enumerate(results):
        try:
            P = HalfPlanePolygon(V)
            e = capillary_energy(phi, beta, P)
            ratio = e.total / math.sqrt(P.area)
        except InvalidPolygonError as exc:
            failures.append((r, str(exc)))
            P, ratio = None, math.inf
        polys.append(P)
        ratios.append(ratio)
        sweeps.append(n_sweeps)
    if all(P is None for P in polys):
        raise OptimizationFailureError("every restart ended in an invalid polygon", {"failures": failures})
    best = min(range(len(ratios)), key=lambda k: (ratios[k], k))
    return polys, ratios, sweeps, best


def _report(phi, beta, cfg, polys, ratios, sweeps, best, wb, volume) -> MinimizeReport:
    P = polys[best]
    best_ratio = ratios[best]
    wb_ratio = wb.energy.total / math.sqrt(wb.polygon.area)
    # compare shapes at equal area
    P_cmp = P.scaled(math.sqrt(volume / P.area), P.substrate_anchor())
    W_cmp = wb.polygon.scaled(math.sqrt(volume / wb.polygon.area), np.zeros(2))
    dist = hausdorff_mod_horizontal(P_cmp, W_cmp)
    return MinimizeReport(
        best_polygon=P,
        best_energy=best_ratio * math.sqrt(volume),
        best_ratio=best_ratio,
        winterbottom_energy=wb_ratio * math.sqrt(volume),
        winterbottom_ratio=wb_ratio,
        relative_gap=(best_ratio - wb_ratio) / wb_ratio,
        hausdorff_mod_translation=dist,
        iterations_used=sweeps[best],
        per_restart_energies=[r * math.sqrt(volume) for r in ratios],
        mode=cfg.mode,
        winterbottom_diameter=W_cmp.diameter,
    )


def minimize_ratio(phi, beta: float, cfg: MinimizeConfig | None = None) -> MinimizeReport:
    """Minimise ``energy / sqrt(area)`` over simple polygons in the half-plane.

    Restarts begin from the perturbed Winterbottom polygon, a rectangle and a
    half-disk on the substrate, and random star polygons, all at the
    Winterbottom area. Energies in the report are at that area.
    """
    cfg = cfg or MinimizeConfig()
    if cfg.mode != "ratio":
        cfg = MinimizeConfig(**{**cfg.__dict__, "mode": "ratio"})
    require_winterbottom(phi, beta)
    wb = winterbottom(phi, beta, cfg.boundary_samples)
    volume = wb.polygon.area
    polys, ratios, sweeps, best = _search(phi, beta, cfg, volume, wb)
    return _report(phi, beta, cfg, polys, ratios, sweeps, best, wb, volume)


def minimize_fixed_volume(phi, beta: float, volume: float, cfg: MinimizeConfig | None = None) -> MinimizeReport:
    """Minimise the energy at fixed area ``volume``.

    Every accepted move is followed by a uniform rescaling back to
    ``volume`` about the lowest contact point (or the centroid when the
    polygon floats), so candidate moves are compared by their
    post-restoration energy.
    """
    cfg = cfg or MinimizeConfig(mode="fixed_volume")
    if cfg.mode != "fixed_volume":
        cfg = MinimizeConfig(**{**cfg.__dict__, "mode": "fixed_volume"})
    if not volume > 0:
        raise ValueError("volume must be positive")
    require_winterbottom(phi, beta)
    wb = winterbottom(phi, beta, cfg.boundary_samples)
    polys, ratios, sweeps, best = _search(phi, beta, cfg, float(volume), wb)
    rep = _report(phi, beta, cfg, polys, ratios, sweeps, best, wb, float(volume))
    P = rep.best_polygon
    # report the polygon's own energy (its area equals volume up to rounding)
    return MinimizeReport(**{**rep.__dict__, "best_energy": capillary_energy(phi, beta, P).total})


# -- inequality sampling and witnesses -------------------------------------------


def inequality_margin(phi, beta: float, P: HalfPlanePolygon, reference_energy: float) -> float:
    return capillary_energy(phi, beta, P).total - reference_energy


def verify_inequality_sample(phi, beta: float, samples: int = 200, seed: int = 0, extra=()):
    """Count random equal-area polygons beating the Winterbottom energy.

    Half of the polygons touch the substrate and half float above it; any
    polygons in ``extra`` are rescaled to the Winterbottom area and added.
    A violation is a margin below ``-1e-7 * (1 + |energy|)``.

    Returns ``(violations, worst_margin)``.
    """
    require_winterbottom(phi, beta)
    wb = winterbottom(phi, beta)
    ref = wb.energy.total
    target = wb.polygon.area
    slack = 1e-7 * (1.0 + abs(ref))
    margins = []
    for k in range(samples):
        P = random_polygon(seed * 100003 + k, 8 + (k % 17), target, contact=(k % 2 == 0))
        margins.append(inequality_margin(phi, beta, P, ref))
    for P in extra:
        Q = P.scaled(math.sqrt(target / P.area), P.substrate_anchor())
        margins.append(inequality_margin(phi, beta, Q, ref))
    margins = np.array(margins)
    return int(np.sum(margins < -slack)), float(margins.min())


def witness_sequence(phi, beta: float, k_max: int = 10) -> list[tuple[float, float]]:
    """Unit-area pancakes ``[0, 1/h] x [0, h]`` with ``h = 2^-k``, ``k = 1..k_max``.

    Their energy ``(phi(e2) - beta) / h + (phi(e1) + phi(-e1)) * h`` tends to
    ``-inf`` above critical wetting and decreases to 0 at it.
    """
    r = regime(phi, beta)
    if r not in (Regime.CRITICAL_WETTING, Regime.UNBOUNDED_BELOW):
        raise RegimeError(
            f"witness sequences exist only for critical_wetting or unbounded_below, not {r.value}",
            regime=r.value,
            required="critical_wetting|unbounded_below",
        )
    out = []
    for k in range(1, k_max + 1):
        h = 2.0 ** (-k)
        P = HalfPlanePolygon(np.array([[0.0, 0.0], [1.0 / h, 0.0], [1.0 / h, h], [0.0, h]]))
        out.append((h, capillary_energy(phi, beta, P).total))
    return out
