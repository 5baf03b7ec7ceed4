"""Absorbed anisotropy, Wulff and Winterbottom shapes, structural residuals.

For an adhesion coefficient ``beta`` strictly inside
``(-phi(-e2), phi(e2))`` the wetting term can be absorbed into a tilted
anisotropy ``psi(x) = phi(x) + <x, s>`` with ``s = -/+ beta * eta / phi(+/-e2)``.
The checks here measure, as numerical residuals, that

* the capillary energy of any polygon equals its ``psi``-perimeter,
* the Wulff shape of ``psi`` is ``s + W(phi)``,
* ``s + beta * e2`` is horizontal,

which together make the truncated Wulff shape the volume-constrained
minimiser.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .anisotropy import (
    AnisotropySpec,
    SubdiffSet,
    generic_dual,
    pole,
    select_eta,
)
from .errors import InvalidArgumentError, RegimeError
from .geometry import (
    EnergyBreakdown,
    HalfPlanePolygon,
    capillary_energy,
    clip_to_halfplane,
    hausdorff,
    signed_area,
)

DEFAULT_BOUNDARY_SAMPLES = 2048
PSI_SAMPLES = 4096
# irrational phase keeps sample directions off axis-aligned kinks
_PHASE = 0.123456789


class Regime(str, enum.Enum):
    DETACHED_WULFF = "detached_wulff"
    WINTERBOTTOM = "winterbottom"
    CRITICAL_WETTING = "critical_wetting"
    UNBOUNDED_BELOW = "unbounded_below"


def _poles(phi) -> tuple[float, float]:
    n = phi.dimension
    return float(phi(pole(n, "+"))), float(phi(pole(n, "-")))


def regime(phi, beta: float) -> Regime:
    """Classify ``beta`` exactly against ``-phi(-e_n)`` and ``phi(e_n)``."""
    up, down = _poles(phi)
    beta = float(beta)
    if beta <= -down:
        return Regime.DETACHED_WULFF
    if beta < up:
        return Regime.WINTERBOTTOM
    if beta == up:
        return Regime.CRITICAL_WETTING
    return Regime.UNBOUNDED_BELOW


def require_winterbottom(phi, beta: float) -> None:
    r = regime(phi, beta)
    if r is not Regime.WINTERBOTTOM:
        up, down = _poles(phi)
        raise RegimeError(
            f"beta={beta!r} is in the {r.value} regime; this operation needs the "
            f"winterbottom regime beta in ({-down!r}, {up!r}) (see regime())",
            regime=r.value,
            required=Regime.WINTERBOTTOM.value,
        )


# -- absorbed anisotropy ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PsiBeta:
    """The anisotropy ``phi(x) + <x, shift_vector>``.

    Callable like an :class:`AnisotropySpec`; its dual is computed by the
    sampled generic path so that comparisons against ``phi``'s closed forms
    stay independent.
    """

    base: AnisotropySpec
    beta: float
    eta: np.ndarray
    shift_vector: np.ndarray
    paper_c: float
    paper_C: float
    safe_C: float
    sampled_c: float
    sampled_C: float

    @property
    def dimension(self) -> int:
        return self.base.dimension

    @property
    def kind(self) -> str:
        return "psi_beta"

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.base(x) + x @ self.shift_vector

    def dual(self, x):
        return generic_dual(self, x)

    def subdifferential(self, theta) -> SubdiffSet:
        from .anisotropy import subdifferential

        S = subdifferential(self.base, theta)
        return SubdiffSet(S.representation, S.points + self.shift_vector, S.base_direction)

    def constants(self) -> dict:
        return {
            "paper_c": self.paper_c,
            "paper_C": self.paper_C,
            "safe_C": self.safe_C,
            "sampled_c": self.sampled_c,
            "sampled_C": self.sampled_C,
        }


def _shift_vector(phi, beta: float, eta: np.ndarray) -> np.ndarray:
    up, down = _poles(phi)
    if beta >= 0:
        return -beta * eta / up
    return beta * eta / down


def build_psi(phi: AnisotropySpec, beta: float, eta_policy="barycenter") -> PsiBeta:
    """Absorb the wetting term into a tilted anisotropy.

    ``eta`` is a subgradient at ``e_n`` for ``beta >= 0`` and at ``-e_n``
    otherwise, picked by ``eta_policy`` (see :func:`select_eta`).
    ``paper_c = c * min((phi(e_n) - |beta|) / phi(e_n), (phi(-e_n) - |beta|) / phi(-e_n))``
    and ``paper_C = C + |beta| max(|eta+|, |eta-|) / phi(e_n)`` use the sharp
    constants ``c, C`` of ``phi``. ``safe_C`` divides each norm by its own pole
    value and is the one certified against sampling.
    """
    beta = float(beta)
    require_winterbottom(phi, beta)
    up, down = _poles(phi)
    eta = select_eta(phi, "+" if beta >= 0 else "-", eta_policy)
    eta_other = select_eta(phi, "-" if beta >= 0 else "+", eta_policy)
    eta_plus, eta_minus = (eta, eta_other) if beta >= 0 else (eta_other, eta)
    shift = _shift_vector(phi, beta, eta)
    c_phi, C_phi = phi.exact_bounds()
    ab = abs(beta)
    n_plus, n_minus = float(np.linalg.norm(eta_plus)), float(np.linalg.norm(eta_minus))
    paper_c = c_phi * min((up - ab) / up, (down - ab) / down)
    paper_C = C_phi + ab * max(n_plus, n_minus) / up
    safe_C = C_phi + ab * max(n_plus / up, n_minus / down)

    psi = PsiBeta(phi, beta, eta, shift, paper_c, paper_C, safe_C, 0.0, 0.0)
    t = 2.0 * np.pi * np.arange(PSI_SAMPLES) / PSI_SAMPLES
    U = np.c_[np.cos(t), np.sin(t)] if phi.dimension == 2 else _sphere(phi.dimension, PSI_SAMPLES)
    vals = psi(U)
    object.__setattr__(psi, "sampled_c", float(vals.min()))
    object.__setattr__(psi, "sampled_C", float(vals.max()))
    return psi


def _sphere(n, m):
    U = np.random.default_rng(0).standard_normal((m, n))
    return U / np.linalg.norm(U, axis=1, keepdims=True)


# -- Wulff shapes ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WulffShape:
    """Counterclockwise boundary polygon of ``{dual <= 1}`` and its Hausdorff error bound."""

    vertices: np.ndarray
    discretization_bound: float

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    def translated(self, v) -> "WulffShape":
        return WulffShape(self.vertices + np.asarray(v, dtype=float), self.discretization_bound)


def _sagitta_bound(vertices: np.ndarray, max_curvature: float) -> float:
    """Max distance from an inscribed polygon to a curve of bounded curvature."""
    chord = float(np.linalg.norm(np.roll(vertices, -1, axis=0) - vertices, axis=1).max())
    rho = 1.0 / max_curvature
    half = min(chord / 2.0, rho)
    return rho - math.sqrt(rho * rho - half * half)


def _radial_wulff(dual, n_samples: int) -> np.ndarray:
    t = 2.0 * np.pi * np.arange(n_samples) / n_samples
    U = np.c_[np.cos(t), np.sin(t)]
    return U / np.asarray(dual(U))[:, None]


def wulff(phi, boundary_samples: int = DEFAULT_BOUNDARY_SAMPLES) -> WulffShape:
    """Wulff shape of ``phi`` as a polygon.

    Exact (bound 0) for crystalline anisotropies, including tilted ones. For
    smooth ones, an inscribed polygon through ``boundary_samples`` boundary
    points at equispaced polar angles; the bound is the sagitta of the
    longest chord under the body's maximal curvature, which is O(N^-2).
    """
    if boundary_samples < 16:
        raise InvalidArgumentError("boundary_samples must be >= 16")
    if phi.dimension != 2:
        raise InvalidArgumentError("Wulff polygons are planar only")
    if isinstance(phi, PsiBeta):
        if phi.base.is_polytope:
            return WulffShape(_polytope_wulff_from_gauge(phi), 0.0)
        V = _radial_wulff(phi.dual, boundary_samples)
        return WulffShape(V, _sagitta_bound(V, phi.base.max_curvature()))
    if phi.is_polytope:
        return WulffShape(phi.hull_vertices.copy(), 0.0)
    V = _radial_wulff(phi.dual, boundary_samples)
    return WulffShape(V, _sagitta_bound(V, phi.max_curvature()))


def _solve_linear(u1, f1, u2, f2):
    return np.linalg.solve(np.array([u1, u2]), np.array([f1, f2]))


def _polytope_wulff_from_gauge(gauge, samples: int = PSI_SAMPLES, tol: float = 1e-9) -> np.ndarray:
    """Recover the vertices of a polygonal Wulff shape from gauge evaluations only.

    A crystalline gauge is linear on each normal cone, with the cone's Wulff
    vertex as gradient. Cones are located on an angular grid, each gradient
    is solved exactly from two well-separated directions inside its cone, and
    the gap between neighbouring cones is resampled recursively whenever the
    gauge at their common kink direction exceeds the linear prediction
    (a cone narrower than the grid spacing).
    """

    def u(a):
        return np.c_[np.cos(a), np.sin(a)]

    def solve(a1, a2):
        U = u(np.array([a1, a2]))
        return np.linalg.solve(U, gauge(U))

    probe = gauge(u(np.array([0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi])))
    scale = float(np.abs(probe).max())
    same = 1e-7 * scale

    def cones(a_lo, a_hi, count):
        """(first angle, last angle, vertex) of cones seen on a grid in (a_lo, a_hi)."""
        t = a_lo + (a_hi - a_lo) * (np.arange(count) + 0.5) / count
        delta = 1e-3 * (a_hi - a_lo) / count
        A, Am, Ap = u(t), u(t - delta), u(t + delta)
        f, fm, fp = gauge(A), gauge(Am), gauge(Ap)
        gm = np.linalg.solve(np.stack([A, Am], axis=1), np.stack([f, fm], axis=1)[..., None])[..., 0]
        gp = np.linalg.solve(np.stack([A, Ap], axis=1), np.stack([f, fp], axis=1)[..., None])[..., 0]
        out = []
        for k in np.flatnonzero(np.linalg.norm(gm - gp, axis=1) <= same):
            if out and out[-1][3] == k - 1 and np.linalg.norm(gm[k] - out[-1][2]) <= same:
                out[-1][1] = t[k]
                out[-1][3] = k
            else:
                out.append([t[k], t[k], gm[k], k])
        res = []
        for lo, hi, g, _ in out:
            v = solve(lo, hi) if hi - lo > 10 * delta else g
            res.append((lo, hi, v))
        return res

    def kink_ok(v_lo, v_hi, a_lo, a_hi):
        d = v_lo - v_hi
        if np.linalg.norm(d) <= same:
            return True
        base = math.atan2(d[1], d[0]) + 0.5 * math.pi
        a_star = base + math.ceil((a_lo - base) / math.pi) * math.pi
        if a_star > a_hi:
            return False
        us = u(np.array([a_star]))
        return float(gauge(us)[0]) <= float(us[0] @ v_lo) + tol * scale

    def between(lo_cone, hi_cone, depth=0):
        a_lo, v_lo = lo_cone[1], lo_cone[2]
        a_hi, v_hi = hi_cone[0], hi_cone[2]
        if kink_ok(v_lo, v_hi, a_lo, a_hi) or depth > 30:
            return []
        inner = [c for c in cones(a_lo, a_hi, 64)
                 if np.linalg.norm(c[2] - v_lo) > same and np.linalg.norm(c[2] - v_hi) > same]
        if not inner:
            return []
        chain = [lo_cone] + inner + [hi_cone]
        out = []
        for left, right in zip(chain[:-1], chain[1:]):
            out.extend(between(left, right, depth + 1))
            if right is not hi_cone:
                out.append(right[2])
        return out

    start = _PHASE
    found = cones(start, start + 2.0 * np.pi, samples)
    # merge a cone split by the wrap-around
    if len(found) > 1 and np.linalg.norm(found[0][2] - found[-1][2]) <= same:
        lo, hi, _ = found[-1]
        first = found.pop(0)
        found[-1] = (lo, first[1] + 2.0 * np.pi, solve(lo, first[1] + 2.0 * np.pi))
    verts = []
    for i, c in enumerate(found):
        nxt = found[(i + 1) % len(found)]
        if i == len(found) - 1:
            nxt = (nxt[0] + 2.0 * np.pi, nxt[1] + 2.0 * np.pi, nxt[2])
        verts.append(c[2])
        verts.extend(between(c, nxt))
    V = np.array(verts)
    if signed_area(V) < 0:
        V = V[::-1]
    return V


# -- Winterbottom shape ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WinterbottomShape:
    polygon: HalfPlanePolygon
    beta: float
    boundary_samples: int
    energy: EnergyBreakdown
    discretization_bound: float
    wulff: WulffShape

    @property
    def area(self) -> float:
        return self.polygon.area

    @property
    def ratio(self) -> float:
        return self.energy.total / math.sqrt(self.polygon.area)


def winterbottom(phi, beta: float, boundary_samples: int = DEFAULT_BOUNDARY_SAMPLES) -> WinterbottomShape:
    """The Wulff shape translated by ``-beta * e2`` and cut by the substrate."""
    beta = float(beta)
    require_winterbottom(phi, beta)
    W = wulff(phi, boundary_samples)
    P = clip_to_halfplane(W.vertices - np.array([0.0, beta]))
    return WinterbottomShape(P, beta, boundary_samples, capillary_energy(phi, beta, P), W.discretization_bound, W)


# -- residual checks -----------------------------------------------------------------


def energy_identity_check(phi, beta: float, P: HalfPlanePolygon, eta_policy="barycenter", psi=None) -> float:
    """``|capillary energy - psi-perimeter|`` on a polygon (wetted edges excluded).

    A prebuilt ``psi`` may be passed to skip its construction.
    """
    if psi is None:
        psi = build_psi(phi, beta, eta_policy)
    C = capillary_energy(phi, beta, P).total
    per_psi = float(np.sum(psi(P.interior_edge_normals)))
    return abs(C - per_psi)


@dataclass(frozen=True)
class TranslationCheck:
    residual: float
    discretization_bound: float
    exact: bool


def wulff_translation_check(
    phi, beta: float, eta_policy="barycenter", boundary_samples: int = DEFAULT_BOUNDARY_SAMPLES
) -> TranslationCheck:
    """Hausdorff distance between ``W(psi)`` and ``shift_vector + W(phi)``.

    ``W(psi)`` is built only from evaluations of ``psi`` (its sampled dual, or
    gradient recovery for crystalline ``phi``), never from ``phi``'s closed
    forms.
    """
    psi = build_psi(phi, beta, eta_policy)
    Wpsi = wulff(psi, boundary_samples)
    Wphi = wulff(phi, boundary_samples).translated(psi.shift_vector)
    bound = max(Wpsi.discretization_bound, Wphi.discretization_bound)
    res = hausdorff(Wpsi.vertices, Wphi.vertices)
    return TranslationCheck(res, bound, phi.is_polytope)


def horizontal_shift_vector(phi, beta: float, eta_policy="barycenter") -> tuple[np.ndarray, float]:
    """``b = shift_vector + beta * e2`` and the residual ``|<b, e2>|``."""
    beta = float(beta)
    require_winterbottom(phi, beta)
    if beta == 0:
        return np.zeros(phi.dimension), 0.0
    eta = select_eta(phi, "+" if beta >= 0 else "-", eta_policy)
    b = _shift_vector(phi, beta, eta) + beta * pole(phi.dimension, "+")
    return b, abs(float(b[-1]))
