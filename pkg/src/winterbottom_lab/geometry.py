"""Polygonal sets in the closed upper half-plane.

Edges of a polygon realise its reduced boundary exactly, so the anisotropic
perimeter and the wetted length on the substrate ``{x2 = 0}`` are finite sums
with no quadrature error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import shapely
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import EmptyClipError, GeneratorFailureError, InvalidPolygonError

SNAP_TOLERANCE = 1e-9
# (dx, dy) @ _CW = (dy, -dx): the outward normal of a counterclockwise edge, unnormalised
_CW = np.array([[0.0, -1.0], [1.0, 0.0]])
MIN_CLIP_AREA = 1e-12


def signed_area(V: np.ndarray) -> float:
    # relative to the first vertex so that far-translated polygons keep their digits
    V = V - V[0]
    x, y = V[:, 0], V[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _dedupe(V: np.ndarray) -> np.ndarray:
    """Drop consecutive duplicates (cyclically)."""
    if len(V) == 0:
        return V
    keep = np.any(V != np.roll(V, -1, axis=0), axis=1)
    if not keep.any():
        return V[:1]
    return V[keep]


def diameter(V: np.ndarray) -> float:
    V = np.asarray(V, dtype=float)
    if len(V) > 64:
        try:
            V = V[ConvexHull(V).vertices]
        except QhullError:
            pass
    d = V[:, None, :] - V[None, :, :]
    return float(np.sqrt((d**2).sum(-1)).max())


@dataclass(frozen=True, eq=False)
class HalfPlanePolygon:
    """A simple polygon in ``{x2 >= 0}`` with counterclockwise vertices.

    Vertices with ``|x2| < snap_tolerance`` are snapped onto the substrate.
    Clockwise input is reoriented. Construction raises
    :class:`InvalidPolygonError` for self-intersecting, degenerate or
    below-substrate input.
    """

    vertices: np.ndarray
    snap_tolerance: float = SNAP_TOLERANCE

    def __post_init__(self):
        V = np.array(self.vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] != 2:
            raise InvalidPolygonError("vertices must be a list of 2-vectors")
        if not np.all(np.isfinite(V)):
            raise InvalidPolygonError("vertices must be finite")
        V[np.abs(V[:, 1]) < self.snap_tolerance, 1] = 0.0
        if np.any(V[:, 1] < 0):
            raise InvalidPolygonError("vertices must satisfy x2 >= 0")
        V = _dedupe(V)
        if len(V) < 3:
            raise InvalidPolygonError("a polygon needs at least 3 distinct vertices")
        a = signed_area(V)
        if a == 0:
            raise InvalidPolygonError("polygon has zero area")
        if a < 0:
            V = V[::-1].copy()
        if not shapely.LinearRing(V).is_simple:
            raise InvalidPolygonError("polygon is not simple")
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)

    @classmethod
    def from_dict(cls, data: dict) -> "HalfPlanePolygon":
        unknown = set(data) - {"vertices"}
        if unknown:
            raise InvalidPolygonError(f"unknown polygon fields: {sorted(unknown)}")
        return cls(np.asarray(data["vertices"], dtype=float))

    def to_dict(self) -> dict:
        return {"vertices": self.vertices.tolist()}

    def __len__(self):
        return len(self.vertices)

    @cached_property
    def edges(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.edges, axis=1)

    @property
    def normals(self) -> np.ndarray:
        """Outward unit normals, one per edge (edge i joins vertex i to i+1)."""
        e = self.edges
        return (e @ _CW) / np.linalg.norm(e, axis=1)[:, None]

    @cached_property
    def interior_edge_normals(self) -> np.ndarray:
        """Outward normals scaled by edge length, for edges off the substrate."""
        return self.edges[~self.wetted_mask] @ _CW

    @cached_property
    def wetted_mask(self) -> np.ndarray:
        y = self.vertices[:, 1]
        return (y == 0) & (np.roll(y, -1) == 0)

    @cached_property
    def area(self) -> float:
        return signed_area(self.vertices)

    @property
    def centroid(self) -> np.ndarray:
        return _area_centroid(self.vertices)

    @property
    def diameter(self) -> float:
        return diameter(self.vertices)

    @property
    def touches_substrate(self) -> bool:
        return bool(np.any(self.vertices[:, 1] == 0))

    def translated(self, t: float) -> "HalfPlanePolygon":
        """Horizontal translation by ``t * e1``."""
        return HalfPlanePolygon(self.vertices + np.array([t, 0.0]), self.snap_tolerance)

    def scaled(self, r: float, about=None) -> "HalfPlanePolygon":
        """Uniform scaling about a point (default: the origin)."""
        c = np.zeros(2) if about is None else np.asarray(about, dtype=float)
        return HalfPlanePolygon(c + r * (self.vertices - c), self.snap_tolerance)

    def substrate_anchor(self) -> np.ndarray:
        """A point on the substrate usable as a scaling centre.

        The lowest contact vertex (leftmost among ties) when the polygon
        touches the substrate, else the projection of the centroid.
        """
        V = self.vertices
        if self.touches_substrate:
            on = V[V[:, 1] == 0]
            return np.array([on[:, 0].min(), 0.0])
        return np.array([self.centroid[0], 0.0])


# -- operations ---------------------------------------------------------------


def area(P: HalfPlanePolygon) -> float:
    return P.area


def classify_edges(P: HalfPlanePolygon) -> list[str]:
    """``"wetted"`` for edges with both endpoints on the substrate, else ``"interior"``."""
    return ["wetted" if w else "interior" for w in P.wetted_mask]


@dataclass(frozen=True)
class EnergyBreakdown:
    relative_perimeter: float
    wetted_length: float
    beta: float
    total: float
    area: float

    def to_dict(self) -> dict:
        return {
            "relative_perimeter": self.relative_perimeter,
            "wetted_length": self.wetted_length,
            "beta": self.beta,
            "total": self.total,
            "area": self.area,
        }


def anisotropic_perimeter(phi, P: HalfPlanePolygon) -> float:
    """Sum of ``length * phi(normal)`` over the edges off the substrate."""
    # one-homogeneity: length * phi(nu) = phi(length * nu)
    return float(np.sum(phi(P.interior_edge_normals)))


def capillary_energy(phi, beta: float, P: HalfPlanePolygon) -> EnergyBreakdown:
    """Anisotropic relative perimeter minus ``beta`` times the wetted length."""
    per = anisotropic_perimeter(phi, P)
    wet = float(np.sum(P.edge_lengths[P.wetted_mask]))
    beta = float(beta)
    return EnergyBreakdown(per, wet, beta, per - beta * wet, P.area)


# -- clipping ----------------------------------------------------------------


def clip_upper(V) -> np.ndarray:
    """Sutherland-Hodgman clip of a closed polygon against ``{x2 >= 0}``.

    Returns the raw vertex array (possibly empty); crossing points are placed
    exactly on the substrate.
    """
    V = np.asarray(V, dtype=float)
    out = []
    n = len(V)
    for i in range(n):
        cur = V[i]
        nxt = V[(i + 1) % n]
        cin = cur[1] >= 0
        nin = nxt[1] >= 0
        if cin:
            out.append((cur[0], cur[1]))
        if cin != nin and cur[1] != 0 and nxt[1] != 0:
            t = cur[1] / (cur[1] - nxt[1])
            out.append((cur[0] + t * (nxt[0] - cur[0]), 0.0))
    return np.array(out, dtype=float).reshape(-1, 2)


def clip_to_halfplane(polygon, snap_tolerance: float = SNAP_TOLERANCE) -> HalfPlanePolygon:
    """Intersect a simple polygon with the closed upper half-plane."""
    V = np.asarray(getattr(polygon, "vertices", polygon), dtype=float)
    C = clip_upper(V)
    if len(C):
        C[np.abs(C[:, 1]) < snap_tolerance, 1] = 0.0
        C = _dedupe(C)
    if len(C) < 3 or abs(signed_area(C)) < MIN_CLIP_AREA:
        raise EmptyClipError("the polygon has no part of positive area in the upper half-plane")
    return HalfPlanePolygon(C, snap_tolerance)


# -- distances ---------------------------------------------------------------


def densify(V: np.ndarray, spacing: float) -> np.ndarray:
    """Closed-ring resampling: original vertices plus points at most ``spacing`` apart."""
    V = np.asarray(V, dtype=float)
    W = np.roll(V, -1, axis=0)
    L = np.linalg.norm(W - V, axis=1)
    counts = np.maximum(1, np.ceil(L / spacing).astype(int))
    idx = np.repeat(np.arange(len(V)), counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    t = (offs / np.repeat(counts, counts))[:, None]
    return V[idx] + t * (W[idx] - V[idx])


def _point_to_ring(points: np.ndarray, ring: np.ndarray, k: int = 6) -> np.ndarray:
    """Exact distance from points to the closed polyline through ``ring``.

    ``ring`` must be dense; the candidate segments are those incident to the
    ``k`` nearest ring points.
    """
    tree = cKDTree(ring)
    k = min(k, len(ring))
    _, nn = tree.query(points, k=k)
    nn = nn.reshape(len(points), k)
    m = len(ring)
    best = np.full(len(points), np.inf)
    for j0 in (nn, (nn - 1) % m):
        A = ring[j0]
        B = ring[(j0 + 1) % m]
        AB = B - A
        AP = points[:, None, :] - A
        den = np.einsum("ijk,ijk->ij", AB, AB)
        t = np.clip(np.einsum("ijk,ijk->ij", AP, AB) / np.where(den > 0, den, 1.0), 0.0, 1.0)
        d = np.linalg.norm(AP - t[..., None] * AB, axis=-1)
        best = np.minimum(best, d.min(axis=1))
    return best


class _RingDistance:
    """Symmetric boundary Hausdorff distance with reusable resampling."""

    def __init__(self, P: np.ndarray, Q: np.ndarray, spacing: float):
        self.P = densify(P, spacing)
        self.Q = densify(Q, spacing)

    def __call__(self, shift: float) -> float:
        s = np.array([shift, 0.0])
        Ps = self.P + s
        d1 = _point_to_ring(Ps, self.Q).max()
        d2 = _point_to_ring(self.Q, Ps).max()
        return float(max(d1, d2))


def _vertices(P) -> np.ndarray:
    return np.asarray(getattr(P, "vertices", P), dtype=float)


def hausdorff(P, Q, spacing: float | None = None) -> float:
    """Symmetric Hausdorff distance between the two boundary polylines."""
    A, B = _vertices(P), _vertices(Q)
    if spacing is None:
        spacing = 1e-3 * max(diameter(A), diameter(B))
    return _RingDistance(A, B, spacing)(0.0)


def hausdorff_mod_horizontal(P, Q, tol: float = 1e-6, return_shift: bool = False):
    """Hausdorff distance between boundaries, minimised over horizontal shifts of ``P``.

    The shift is searched on ``[-D, D]`` (``D`` the sum of the diameters)
    relative to the shift that aligns the horizontal centroids: a 64-cell
    grid pre-scan, then golden-section refinement to ``tol`` around the best
    cell.
    """
    A, B = _vertices(P), _vertices(Q)
    dA, dB = diameter(A), diameter(B)
    dist = _RingDistance(A, B, 1e-3 * max(dA, dB))
    base = float(_area_centroid(B)[0] - _area_centroid(A)[0])
    D = dA + dB
    grid = base + np.linspace(-D, D, 65)
    vals = np.array([dist(t) for t in grid])
    k = int(np.argmin(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, 64)]
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = dist(c), dist(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = dist(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = dist(d)
    cands = [(vals[k], grid[k]), (fc, c), (fd, d)]
    best, shift = min(cands)
    if return_shift:
        return float(best), float(shift)
    return float(best)


def _area_centroid(V: np.ndarray) -> np.ndarray:
    o = V[0]
    V = V - o
    W = np.roll(V, -1, axis=0)
    cr = V[:, 0] * W[:, 1] - W[:, 0] * V[:, 1]
    a = cr.sum() / 2.0
    return o + np.array([((V[:, 0] + W[:, 0]) * cr).sum(), ((V[:, 1] + W[:, 1]) * cr).sum()]) / (6.0 * a)


# -- generators ----------------------------------------------------------------


def random_polygon(seed: int, vertex_count: int, target_area: float, contact: bool) -> HalfPlanePolygon:
    """Seeded star-shaped test polygon with ``target_area``.

    Radii are log-normal around a random centre at sorted random angles. With
    ``contact`` the centre sits just above the substrate and the star is
    clipped to the half-plane, then scaled about a substrate point; otherwise
    it floats above the substrate and is scaled about its centroid.
    """
    if vertex_count < 4:
        raise ValueError("vertex_count must be >= 4")
    if not target_area > 0:
        raise ValueError("target_area must be positive")
    rng = np.random.default_rng(seed)
    last = None
    for _ in range(100):
        gaps = rng.uniform(0.3, 1.0, vertex_count)
        theta = np.cumsum(gaps)
        theta = 2.0 * np.pi * (theta - theta[0]) / theta[-1] * (vertex_count - 1) / vertex_count
        theta += rng.uniform(0, 2.0 * np.pi)
        r = rng.lognormal(0.0, 0.3, vertex_count)
        star = np.c_[r * np.cos(theta), r * np.sin(theta)]
        try:
            if contact:
                cy = rng.uniform(0.05, 0.6) * r.min()
                P = clip_to_halfplane(star + np.array([rng.uniform(-1, 1), cy]))
                if not P.touches_substrate:
                    continue
                anchor = P.substrate_anchor()
                s = math.sqrt(target_area / P.area)
                V = anchor + s * (P.vertices - anchor)
                V[P.vertices[:, 1] == 0, 1] = 0.0
            else:
                cy = 1.2 * r.max() + rng.uniform(0.05, 1.0)
                P = HalfPlanePolygon(star + np.array([rng.uniform(-1, 1), cy]))
                c = P.centroid
                s = math.sqrt(target_area / P.area)
                V = c + s * (P.vertices - c)
                low = V[:, 1].min()
                gap = 0.05 * s * r.min()
                if low < gap:
                    V[:, 1] += gap - low
            out = HalfPlanePolygon(V)
            if contact != out.touches_substrate:
                continue
            if abs(out.area - target_area) > 1e-12 * target_area:
                # one Newton-style correction absorbs rounding from the first scaling
                anchor = out.substrate_anchor() if contact else out.centroid
                V = anchor + math.sqrt(target_area / out.area) * (out.vertices - anchor)
                if contact:
                    V[out.vertices[:, 1] == 0, 1] = 0.0
                out = HalfPlanePolygon(V)
            if abs(out.area - target_area) <= 1e-12 * target_area:
                return out
            last = "area mismatch"
        except (InvalidPolygonError, EmptyClipError) as exc:
            last = str(exc)
    raise GeneratorFailureError(f"random_polygon(seed={seed}) failed after 100 attempts: {last}")
