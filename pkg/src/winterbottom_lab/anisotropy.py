"""Anisotropies: evaluation, duals, subdifferentials and subgradient selection.

An anisotropy is a positively one-homogeneous convex function that is
positive away from the origin. Four closed-form families are supported so
that the dual gauge and the subdifferential always have an exact reference
path:

* ``euclidean``          phi(x) = |x|
* ``support_polytope``   phi(x) = max_v <x, v>  (support function of conv(V))
* ``quadratic``          phi(x) = sqrt(x^T A x)
* ``shifted_euclidean``  phi(x) = |x| + <a, x>,  |a| < 1

A sampled, refinement-based dual (:func:`generic_dual`) is kept alongside the
closed forms purely as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import ConvexHull, HalfspaceIntersection
from scipy.optimize import minimize as _scipy_minimize

from .errors import DegenerateAnisotropyError, InvalidArgumentError, InvalidEtaError

KINDS = ("euclidean", "support_polytope", "quadratic", "shifted_euclidean")
ETA_POLICIES = ("barycenter", "min_lex", "max_lex")

ACTIVITY_RTOL = 1e-9
ETA_TOL = 1e-8

_INV_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class AnisotropySpec:
    """A closed-form anisotropy on R^n.

    Construct through the classmethods (:meth:`euclidean`, :meth:`polytope`,
    :meth:`quadratic`, :meth:`shifted`, :meth:`from_halfspaces`) or
    :meth:`from_dict`. Instances are immutable and callable:
    ``phi(x)`` evaluates on the last axis of ``x``.
    """

    kind: str
    vertices: np.ndarray | None = None
    matrix: np.ndarray | None = None
    shift: np.ndarray | None = None
    dimension: int = 2
    # derived data, filled by __post_init__
    _hull_vertices: np.ndarray | None = field(default=None, repr=False)
    _facet_normals: np.ndarray | None = field(default=None, repr=False)
    _facet_offsets: np.ndarray | None = field(default=None, repr=False)
    _inverse: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown anisotropy kind {self.kind!r}")
        n = int(self.dimension)
        if n < 2:
            raise InvalidArgumentError("dimension must be >= 2")
        object.__setattr__(self, "dimension", n)
        setter = object.__setattr__

        if self.kind == "support_polytope":
            if self.vertices is None:
                raise InvalidArgumentError("support_polytope needs vertices")
            V = np.array(self.vertices, dtype=float)
            if V.ndim != 2 or V.shape[1] != n or len(V) < n + 1:
                raise InvalidArgumentError(f"vertices must be a list of >= {n + 1} points in R^{n}")
            if not np.all(np.isfinite(V)):
                raise InvalidArgumentError("vertices must be finite")
            try:
                hull = ConvexHull(V)
            except Exception as exc:  # qhull raises on flat input
                raise DegenerateAnisotropyError(f"vertices span a degenerate hull: {exc}") from None
            # qhull: normal . x + offset <= 0 inside; normals are unit
            normals = hull.equations[:, :n]
            offsets = -hull.equations[:, n]
            scale = np.abs(V).max()
            if np.any(offsets <= 1e-12 * scale):
                raise DegenerateAnisotropyError(
                    "the convex hull of the vertices must contain the origin in its interior"
                )
            idx = hull.vertices  # counterclockwise in 2D
            setter(self, "vertices", V)
            setter(self, "_hull_vertices", V[idx].copy())
            setter(self, "_facet_normals", normals.copy())
            setter(self, "_facet_offsets", offsets.copy())
        elif self.kind == "quadratic":
            if self.matrix is None:
                raise InvalidArgumentError("quadratic needs a matrix")
            A = np.array(self.matrix, dtype=float)
            if A.shape != (n, n) or not np.all(np.isfinite(A)):
                raise InvalidArgumentError(f"matrix must be a finite {n}x{n} array")
            if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
                raise InvalidArgumentError("matrix must be symmetric")
            A = 0.5 * (A + A.T)
            if np.linalg.eigvalsh(A).min() <= 0:
                raise DegenerateAnisotropyError("matrix must be positive definite")
            setter(self, "matrix", A)
            setter(self, "_inverse", np.linalg.inv(A))
        elif self.kind == "shifted_euclidean":
            if self.shift is None:
                raise InvalidArgumentError("shifted_euclidean needs a shift")
            a = np.array(self.shift, dtype=float)
            if a.shape != (n,) or not np.all(np.isfinite(a)):
                raise InvalidArgumentError(f"shift must be a finite vector in R^{n}")
            if np.linalg.norm(a) >= 1.0:
                raise DegenerateAnisotropyError("shift must satisfy |a| < 1")
            setter(self, "shift", a)

    # -- constructors -----------------------------------------------------

    @classmethod
    def euclidean(cls, dimension: int = 2) -> "AnisotropySpec":
        return cls("euclidean", dimension=dimension)

    @classmethod
    def polytope(cls, vertices) -> "AnisotropySpec":
        V = np.asarray(vertices, dtype=float)
        return cls("support_polytope", vertices=V, dimension=V.shape[1])

    @classmethod
    def quadratic(cls, matrix) -> "AnisotropySpec":
        A = np.asarray(matrix, dtype=float)
        return cls("quadratic", matrix=A, dimension=A.shape[0])

    @classmethod
    def shifted(cls, shift) -> "AnisotropySpec":
        a = np.asarray(shift, dtype=float)
        return cls("shifted_euclidean", shift=a, dimension=a.shape[0])

    @classmethod
    def from_halfspaces(cls, normals, tensions) -> "AnisotropySpec":
        """Crystalline anisotropy from facet normals and surface tensions.

        The Wulff shape is ``{y : <y, n_i> <= gamma_i}``; it is converted to
        vertex form by half-space intersection.
        """
        N = np.asarray(normals, dtype=float)
        g = np.asarray(tensions, dtype=float)
        if N.ndim != 2 or g.shape != (len(N),):
            raise InvalidArgumentError("normals must be (k, n) and tensions (k,)")
        if np.any(g <= 0):
            raise DegenerateAnisotropyError("surface tensions must be positive")
        N = N / np.linalg.norm(N, axis=1, keepdims=True)
        try:
            hs = HalfspaceIntersection(np.c_[N, -g], np.zeros(N.shape[1]))
        except Exception as exc:
            raise DegenerateAnisotropyError(f"half-spaces do not bound a body: {exc}") from None
        pts = hs.intersections
        if not np.all(np.isfinite(pts)):
            raise DegenerateAnisotropyError("half-spaces do not bound a body")
        return cls.polytope(pts)

    @classmethod
    def from_dict(cls, data: dict) -> "AnisotropySpec":
        allowed = {"kind", "vertices", "matrix", "shift", "dimension", "halfspaces"}
        unknown = set(data) - allowed
        if unknown:
            raise InvalidArgumentError(f"unknown anisotropy fields: {sorted(unknown)}")
        if "kind" not in data:
            raise InvalidArgumentError("anisotropy object needs a 'kind'")
        kind = data["kind"]
        dim = int(data.get("dimension", 2))
        if kind == "support_polytope" and "halfspaces" in data:
            rows = np.asarray(data["halfspaces"], dtype=float)
            spec = cls.from_halfspaces(rows[:, :-1], rows[:, -1])
        elif "halfspaces" in data:
            raise InvalidArgumentError("'halfspaces' is only valid for support_polytope")
        else:
            spec = cls(
                kind,
                vertices=data.get("vertices"),
                matrix=data.get("matrix"),
                shift=data.get("shift"),
                dimension=dim,
            )
        if spec.dimension != dim:
            raise InvalidArgumentError(f"dimension {dim} does not match the data ({spec.dimension})")
        return spec

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "dimension": self.dimension}
        if self.kind == "support_polytope":
            out["vertices"] = self.vertices.tolist()
        elif self.kind == "quadratic":
            out["matrix"] = self.matrix.tolist()
        elif self.kind == "shifted_euclidean":
            out["shift"] = self.shift.tolist()
        return out

    # -- evaluation -------------------------------------------------------

    @property
    def is_polytope(self) -> bool:
        return self.kind == "support_polytope"

    @property
    def hull_vertices(self) -> np.ndarray | None:
        return self._hull_vertices

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "euclidean":
            return np.linalg.norm(x, axis=-1)
        if self.kind == "support_polytope":
            return np.max(x @ self._hull_vertices.T, axis=-1)
        if self.kind == "quadratic":
            q = np.einsum("...i,ij,...j->...", x, self.matrix, x)
            return np.sqrt(np.maximum(q, 0.0))
        return np.linalg.norm(x, axis=-1) + x @ self.shift

    def dual(self, x) -> np.ndarray:
        """Closed-form dual gauge; its unit ball is the Wulff shape."""
        x = np.asarray(x, dtype=float)
        if self.kind == "euclidean":
            return np.linalg.norm(x, axis=-1)
        if self.kind == "support_polytope":
            vals = (x @ self._facet_normals.T) / self._facet_offsets
            return np.maximum(np.max(vals, axis=-1), 0.0)
        if self.kind == "quadratic":
            q = np.einsum("...i,ij,...j->...", x, self._inverse, x)
            return np.sqrt(np.maximum(q, 0.0))
        # gauge of the unit ball centred at a: |x - t a| = t
        a = self.shift
        xa = x @ a
        xx = np.einsum("...i,...i->...", x, x)
        k = 1.0 - a @ a
        return (-xa + np.sqrt(xa * xa + k * xx)) / k

    def gradient(self, theta) -> np.ndarray:
        """Gradient for the smooth families (theta != 0)."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "euclidean":
            return theta / np.linalg.norm(theta, axis=-1, keepdims=True)
        if self.kind == "quadratic":
            At = theta @ self.matrix
            return At / self(theta)[..., None]
        if self.kind == "shifted_euclidean":
            return theta / np.linalg.norm(theta, axis=-1, keepdims=True) + self.shift
        raise InvalidArgumentError("support_polytope is not differentiable everywhere; use subdifferential()")

    def exact_bounds(self) -> tuple[float, float]:
        """The sharp constants (min, max) of phi on the unit sphere."""
        if self.kind == "euclidean":
            return 1.0, 1.0
        if self.kind == "quadratic":
            ev = np.linalg.eigvalsh(self.matrix)
            return float(np.sqrt(ev[0])), float(np.sqrt(ev[-1]))
        if self.kind == "shifted_euclidean":
            r = float(np.linalg.norm(self.shift))
            return 1.0 - r, 1.0 + r
        # min of a support function = distance from 0 to the boundary
        return float(self._facet_offsets.min()), float(np.linalg.norm(self._hull_vertices, axis=1).max())

    def max_curvature(self) -> float:
        """Largest boundary curvature of the Wulff shape (smooth kinds only)."""
        if self.kind in ("euclidean", "shifted_euclidean"):
            return 1.0
        if self.kind == "quadratic":
            # Wulff shape is the ellipse x^T A^{-1} x <= 1 with semi-axes sqrt(eig A)
            ev = np.linalg.eigvalsh(self.matrix)
            return float(np.sqrt(ev[-1]) / ev[0])
        return float("inf")


def _check_finite(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("input must be finite")
    return x


def evaluate(phi: AnisotropySpec, x) -> np.ndarray | float:
    """Evaluate ``phi`` at ``x`` (vectorised over leading axes)."""
    x = _check_finite(x)
    if x.shape[-1] != phi.dimension:
        raise InvalidArgumentError(f"expected vectors in R^{phi.dimension}")
    out = phi(x)
    return float(out) if np.ndim(out) == 0 else out


def dual_eval(phi, x) -> np.ndarray | float:
    """Dual anisotropy ``max_{phi(y) = 1} <x, y>``."""
    x = _check_finite(x)
    out = phi.dual(x)
    return float(out) if np.ndim(out) == 0 else out


# -- sampled dual ---------------------------------------------------------


def generic_dual(
    gauge: Callable[[np.ndarray], np.ndarray],
    x,
    samples: int = 720,
    rtol: float = 1e-8,
    phase: float = 0.0,
) -> np.ndarray | float:
    """Dual of an arbitrary positive gauge by sampling and refinement.

    Maximises ``<x, y> / gauge(y)`` over unit directions ``y``. In the plane
    the best of ``samples`` equispaced directions is refined by golden-section
    search on the angle; in higher dimension a Nelder-Mead polish is used.
    Only evaluations of ``gauge`` are needed, which makes this path
    independent of every closed form in this module.
    """
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    X = np.atleast_2d(x)
    n = X.shape[1]
    if n == 2:
        out = _generic_dual_2d(gauge, X, samples, rtol, phase)
    else:
        out = np.array([_generic_dual_nd(gauge, xi, samples) for xi in X])
    return float(out[0]) if squeeze else out


def _generic_dual_2d(gauge, X, samples, rtol, phase):
    t = phase + 2.0 * np.pi * np.arange(samples) / samples
    U = np.c_[np.cos(t), np.sin(t)]
    g = gauge(U)
    R = (X @ U.T) / g  # (m, samples)
    k = np.argmax(R, axis=1)
    spacing = 2.0 * np.pi / samples

    def ratio(theta):
        u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return np.einsum("ij,ij->i", X, u) / gauge(u)

    lo = t[k] - spacing
    hi = t[k] + spacing
    c = hi - _INV_GOLDEN * (hi - lo)
    d = lo + _INV_GOLDEN * (hi - lo)
    fc, fd = ratio(c), ratio(d)
    best = R[np.arange(len(X)), k]
    # angle tolerance well below the requested relative tolerance
    atol = max(rtol * 1e-2, 1e-12)
    while np.max(hi - lo) > atol:
        left = fc > fd
        lo, hi = np.where(left, lo, c), np.where(left, d, hi)
        c_new = np.where(left, hi - _INV_GOLDEN * (hi - lo), d)
        d_new = np.where(left, c, lo + _INV_GOLDEN * (hi - lo))
        fp = ratio(np.where(left, c_new, d_new))
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
        c, d = c_new, d_new
        best = np.maximum(best, np.maximum(fc, fd))
    return np.maximum(best, 0.0)


def _generic_dual_nd(gauge, x, samples):
    n = len(x)
    rng = np.random.default_rng(0)
    U = rng.standard_normal((max(samples, 64 * n), n))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    R = (U @ x) / gauge(U)
    y0 = U[np.argmax(R)]

    def neg(y):
        return -(y @ x) / gauge(y)

    res = _scipy_minimize(neg, y0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
    return max(float(-res.fun), float(R.max()), 0.0)


# -- validation ------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    c_lower: float
    C_upper: float
    homogeneity_residual: float
    convexity_residual: float
    sample_count: int

    def to_dict(self) -> dict:
        return {
            "c_lower": self.c_lower,
            "C_upper": self.C_upper,
            "homogeneity_residual": self.homogeneity_residual,
            "convexity_residual": self.convexity_residual,
            "sample_count": self.sample_count,
        }


def sample_directions(n: int, samples: int, seed: int) -> np.ndarray:
    """Signed coordinate axes followed by seeded random unit vectors."""
    rng = np.random.default_rng(seed)
    axes = np.vstack([np.eye(n), -np.eye(n)])
    extra = max(samples - len(axes), 0)
    U = rng.standard_normal((extra, n))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    return np.vstack([axes, U])[:samples] if samples >= len(axes) else np.vstack([axes, U])


def validate(phi, samples: int = 4096, seed: int = 0) -> ValidationReport:
    """Estimate the norm-equivalence constants and check the anisotropy axioms.

    ``c_lower``/``C_upper`` are the min/max of phi over the sampled unit
    directions; the residuals measure violations of one-homogeneity (for
    lambda in {0.5, 2, 17}) and of midpoint convexity.
    """
    if samples < 16:
        raise InvalidArgumentError("samples must be >= 16")
    n = phi.dimension
    rng = np.random.default_rng(seed + 1)
    U = sample_directions(n, samples, seed)
    vals = phi(U)
    c_lower, C_upper = float(vals.min()), float(vals.max())
    if not c_lower > 0:
        raise DegenerateAnisotropyError(f"anisotropy is not positive on the unit sphere (min {c_lower:g})")

    X = U * rng.lognormal(0.0, 1.0, size=(len(U), 1))
    fx = phi(X)
    hom = 0.0
    for lam in (0.5, 2.0, 17.0):
        hom = max(hom, float(np.max(np.abs(phi(lam * X) - lam * fx))))
    Y = rng.standard_normal(X.shape) * rng.lognormal(0.0, 1.0, size=(len(U), 1))
    conv = float(np.max(np.maximum(0.0, phi(0.5 * (X + Y)) - 0.5 * (fx + phi(Y)))))
    return ValidationReport(c_lower, C_upper, hom, conv, len(U))


# -- subdifferentials --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SubdiffSet:
    """Subdifferential of phi at a nonzero direction.

    ``points`` holds the single element (``singleton``), the two endpoints
    (``segment``) or the vertex list (``polytope``).
    """

    representation: str
    points: np.ndarray
    base_direction: np.ndarray

    def barycenter(self) -> np.ndarray:
        return self.points.mean(axis=0)

    def min_lex(self) -> np.ndarray:
        order = np.lexsort(self.points.T[::-1])
        return self.points[order[0]].copy()

    def max_lex(self) -> np.ndarray:
        order = np.lexsort(self.points.T[::-1])
        return self.points[order[-1]].copy()


def subdifferential(phi, theta) -> SubdiffSet:
    """The set of y with <theta, y> = phi(theta) and dual(y) = 1."""
    theta = _check_finite(theta)
    if not np.any(theta != 0):
        raise InvalidArgumentError("subdifferential at 0 is the whole Wulff shape; theta must be nonzero")
    if hasattr(phi, "subdifferential"):
        return phi.subdifferential(theta)
    if phi.kind != "support_polytope":
        g = phi.gradient(theta)
        return SubdiffSet("singleton", g[None, :], theta)
    V = phi.hull_vertices
    dots = V @ theta
    top = dots.max()
    active = V[dots >= top - ACTIVITY_RTOL * abs(top)]
    if len(active) == 1:
        return SubdiffSet("singleton", active.copy(), theta)
    if phi.dimension == 2 or len(active) == 2:
        # extreme pair along the face direction
        perp = np.array([-theta[1], theta[0]]) if phi.dimension == 2 else active[1] - active[0]
        proj = active @ perp
        seg = np.array([active[np.argmin(proj)], active[np.argmax(proj)]])
        return SubdiffSet("segment", seg, theta)
    return SubdiffSet("polytope", active.copy(), theta)


def pole(n: int, sign: str | int) -> np.ndarray:
    s = _sign_value(sign)
    e = np.zeros(n)
    e[-1] = s
    return e


def _sign_value(sign) -> float:
    if sign in ("+", 1, 1.0, "plus"):
        return 1.0
    if sign in ("-", -1, -1.0, "minus"):
        return -1.0
    raise InvalidArgumentError(f"sign must be '+' or '-', got {sign!r}")


def certify_eta(phi, eta, sign, tol: float = ETA_TOL) -> tuple[float, float]:
    """Residuals of the two subgradient conditions at the pole +-e_n."""
    e = pole(phi.dimension, sign)
    eta = np.asarray(eta, dtype=float)
    r1 = abs(float(eta @ e) - float(phi(e)))
    r2 = abs(float(phi.dual(eta)) - 1.0)
    return r1, r2


def select_eta(phi, sign, policy: str | Sequence[float] = "barycenter") -> np.ndarray:
    """Pick a subgradient of phi at ``sign * e_n``.

    ``policy`` is ``"barycenter"`` (default), ``"min_lex"``, ``"max_lex"`` or
    an explicit vector, which is accepted only if it passes
    :func:`certify_eta` at tolerance 1e-8.
    """
    e = pole(phi.dimension, sign)
    if isinstance(policy, str):
        if policy not in ETA_POLICIES:
            raise InvalidArgumentError(f"unknown eta policy {policy!r}")
        S = subdifferential(phi, e)
        return getattr(S, policy)()
    eta = _check_finite(policy)
    if eta.shape != (phi.dimension,):
        raise InvalidEtaError(f"eta must be a vector in R^{phi.dimension}")
    r1, r2 = certify_eta(phi, eta, sign)
    if r1 > ETA_TOL or r2 > ETA_TOL:
        raise InvalidEtaError(
            f"eta={eta.tolist()} is not in the subdifferential at {e.tolist()} "
            f"(|<eta,e>-phi(e)|={r1:.3g}, |dual(eta)-1|={r2:.3g})"
        )
    return eta.copy()
