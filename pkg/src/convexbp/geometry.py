"""Smooth convex planar domains and the line geometry used by the formulas.

Points are plain ``(..., 2)`` float arrays. A domain is immutable once built
and carries its boundary quadrature (nodes, outward normals, arc weights)
for a uniform parameter grid, so the trapezoid rule over ``arc_weight`` is
spectrally accurate for smooth periodic integrands.
"""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree

from .errors import DegeneratePair, FormatError, NonConvexBoundary, RootFindFailure

EPS_SEP = 1e-12
DEFAULT_NODES = 256
FD_STEP = 1e-6
ROOT_TOL = 1e-12


def as_points(p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 2:
        raise ValueError(f"expected trailing dimension 2, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("non-finite point coordinates")
    return p


def unit(angle):
    angle = np.asarray(angle, dtype=float)
    return np.stack([np.cos(angle), np.sin(angle)], axis=-1)


def nhat_ahat(x1, x0, eps_sep=EPS_SEP):
    """Normal and offset of the line of points equidistant from ``x1`` and ``x0``.

    Returns ``(n, a)`` with ``n = (x1 - x0)/|x1 - x0|`` and
    ``a = (|x1|^2 - |x0|^2) / (2 |x1 - x0|)``. Broadcasts over leading axes.
    """
    x1 = as_points(x1)
    x0 = as_points(x0)
    diff = x1 - x0
    dist = np.hypot(diff[..., 0], diff[..., 1])
    if np.any(dist <= eps_sep):
        raise DegeneratePair(f"points closer than eps_sep={eps_sep}")
    n = diff / dist[..., None]
    a = 0.5 * ((x1 * x1).sum(-1) - (x0 * x0).sum(-1)) / dist
    return n, a


@dataclass(frozen=True)
class BoundaryNodes:
    param: np.ndarray
    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return self.param.size


class ConvexDomain:
    """Common interface for smooth convex domains.

    Subclasses provide ``curve(s)`` and ``curve_derivative(s)`` on
    ``[0, 2*pi)``, traversed counter-clockwise. Disc and ellipse override the
    support function and chord length with closed forms.
    """

    kind = "convex"
    n_nodes = DEFAULT_NODES

    def curve(self, s):
        raise NotImplementedError

    def curve_derivative(self, s):
        raise NotImplementedError

    @property
    def nodes(self):
        return self._nodes

    def _build_nodes(self, n_nodes):
        if n_nodes < 8:
            raise ValueError("need at least 8 boundary nodes")
        s = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
        pts = self.curve(s)
        tan = self.curve_derivative(s)
        speed = np.hypot(tan[:, 0], tan[:, 1])
        normals = np.stack([tan[:, 1], -tan[:, 0]], axis=-1) / speed[:, None]
        weights = speed * (2.0 * np.pi / n_nodes)
        return BoundaryNodes(s, pts, normals, weights)

    def perimeter(self):
        return float(self.nodes.weights.sum())

    def area(self):
        # Green's theorem on the same trapezoid rule
        s = self.nodes.param
        pts = self.nodes.points
        tan = self.curve_derivative(s)
        integrand = pts[:, 0] * tan[:, 1] - pts[:, 1] * tan[:, 0]
        return float(0.5 * integrand.sum() * 2.0 * np.pi / s.size)

    # -- support function and chords ------------------------------------
    def _extreme_param(self, n, sign):
        """Parameter maximizing ``sign * n . curve(s)``, refined from the node grid."""
        key = (float(n[0]), float(n[1]), sign)
        memo = self.__dict__.setdefault("_extreme_memo", {})
        if key not in memo:
            if len(memo) >= 8192:
                memo.clear()
            memo[key] = self._find_extreme(n, sign)
        return memo[key]

    def _find_extreme(self, n, sign):
        s_nodes = self._dense_param
        vals = sign * (self._dense_points @ n)
        k = int(np.argmax(vals))
        ds = s_nodes[1] - s_nodes[0]
        res = minimize_scalar(lambda s: -sign * float(self.curve(np.array([s]))[0] @ n),
                              bounds=(s_nodes[k] - ds, s_nodes[k] + ds),
                              method="bounded", options={"xatol": 1e-13})
        return float(res.x)

    @property
    def _dense_param(self):
        return self._dense[0]

    @property
    def _dense_points(self):
        return self._dense[1]

    def support(self, n):
        """Support function ``h(n) = max_{x in domain} n . x``."""
        n = np.asarray(n, dtype=float)
        s = self._extreme_param(n, 1.0)
        return float(self.curve(np.array([s]))[0] @ n)

    def support_interval(self, n):
        """Offsets ``(a_min, a_max)`` of the two tangent lines with normal ``n``."""
        n = np.asarray(n, dtype=float)
        return -self.support(-n), self.support(n)

    def chord_lengths(self, n, a):
        """Radon transform of the indicator, ``R chi(n, a)``, for an array of offsets."""
        n = np.asarray(n, dtype=float)
        a = np.atleast_1d(np.asarray(a, dtype=float))
        s_lo = self._extreme_param(n, -1.0) % (2.0 * np.pi)
        s_hi = self._extreme_param(n, 1.0) % (2.0 * np.pi)
        lo_val = float(self.curve(np.array([s_lo]))[0] @ n)
        hi_val = float(self.curve(np.array([s_hi]))[0] @ n)
        out = np.zeros_like(a)
        inside = (a > lo_val) & (a < hi_val)
        if not np.any(inside):
            return out
        self._check_crossings(n, a[inside])
        ai = a[inside]
        # n . curve is monotone on each arc between the two extremes
        if s_hi < s_lo:
            s_hi += 2.0 * np.pi
        up = self._bisect(n, ai, s_lo, s_hi)
        down = self._bisect(n, ai, s_lo + 2.0 * np.pi, s_hi)
        p = self.curve(up) - self.curve(down)
        out[inside] = np.hypot(p[:, 0], p[:, 1])
        return out

    def chord_length(self, n, a):
        return float(self.chord_lengths(n, [a])[0])

    def _check_crossings(self, n, a):
        vals = self.nodes.points @ n
        above = vals[None, :] > a[:, None]
        changes = np.count_nonzero(above != np.roll(above, 1, axis=1), axis=1)
        if np.any(changes > 2):
            raise NonConvexBoundary("line crosses the boundary more than twice")

    def _bisect(self, n, a, s_from, s_to, max_iter=200):
        # g(s) = n . curve(s) - a goes from negative at s_from to positive at s_to
        lo = np.full_like(a, s_from)
        hi = np.full_like(a, s_to)
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            above = self.curve(mid) @ n > a
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
            if np.max(np.abs(hi - lo)) < ROOT_TOL:
                break
        else:
            raise RootFindFailure("bisection did not reach tolerance")
        return 0.5 * (lo + hi)

    # -- membership and distance ----------------------------------------
    def signed_distance(self, points):
        """Distance to the boundary, negative inside.

        Uses the nearest point of a dense boundary sample and the sign of the
        outward normal there; accurate to roughly the squared sample spacing.
        """
        pts = as_points(points)
        flat = pts.reshape(-1, 2)
        d, k = self._tree.query(flat)
        outward = ((flat - self._dense_points[k]) * self._dense_normals[k]).sum(-1)
        d = np.where(outward > 0, d, -d)
        return d.reshape(pts.shape[:-1])

    def contains(self, points):
        return self.signed_distance(points) < 0

    def diameter(self):
        angles = np.linspace(0.0, np.pi, 721)
        widths = [self.support(u) + self.support(-u) for u in unit(angles)]
        return float(max(widths))

    def bounding_box(self):
        xmin, xmax = self.support_interval(np.array([1.0, 0.0]))
        ymin, ymax = self.support_interval(np.array([0.0, 1.0]))
        return xmin, xmax, ymin, ymax

    def _init_common(self, n_nodes):
        self.n_nodes = int(n_nodes)
        self._nodes = self._build_nodes(self.n_nodes)
        dense_s = 2.0 * np.pi * np.arange(8192) / 8192
        dense_pts = self.curve(dense_s)
        tan = self.curve_derivative(dense_s)
        normals = np.stack([tan[:, 1], -tan[:, 0]], axis=-1)
        normals /= np.hypot(normals[:, 0], normals[:, 1])[:, None]
        self._dense = (dense_s, dense_pts)
        self._dense_normals = normals
        self._tree = cKDTree(dense_pts)


class Disc(ConvexDomain):
    kind = "disc"

    def __init__(self, center=(0.0, 0.0), radius=1.0, n_nodes=DEFAULT_NODES):
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.center = as_points(center).copy()
        self.radius = float(radius)
        self._init_common(n_nodes)

    def curve(self, s):
        return self.center + self.radius * unit(s)

    def curve_derivative(self, s):
        s = np.asarray(s, dtype=float)
        return self.radius * np.stack([-np.sin(s), np.cos(s)], axis=-1)

    def support(self, n):
        n = np.asarray(n, dtype=float)
        return float(self.center @ n + self.radius * np.hypot(*n))

    def chord_lengths(self, n, a):
        n = np.asarray(n, dtype=float)
        off = np.atleast_1d(np.asarray(a, dtype=float)) - self.center @ n
        return 2.0 * np.sqrt(np.clip(self.radius**2 - off**2, 0.0, None))

    def signed_distance(self, points):
        pts = as_points(points)
        r = np.hypot(*np.moveaxis(pts - self.center, -1, 0))
        return r - self.radius

    def diameter(self):
        return 2.0 * self.radius

    def as_parametric(self, n_nodes=None):
        return ParametricConvex(self.curve, self.curve_derivative,
                                n_nodes=n_nodes or self.n_nodes, label="disc")

    def spec_line(self):
        return _spec("disc", *self.center, self.radius)


class Ellipse(ConvexDomain):
    """Axis-aligned ellipse ``((x-cx)/A)^2 + ((y-cy)/B)^2 < 1``."""

    kind = "ellipse"

    def __init__(self, center=(0.0, 0.0), semi_axes=(1.0, 0.8), n_nodes=DEFAULT_NODES):
        A, B = map(float, semi_axes)
        if not (A > 0 and B > 0):
            raise ValueError("semi-axes must be positive")
        self.center = as_points(center).copy()
        self.semi_axes = (A, B)
        self._init_common(n_nodes)

    def curve(self, s):
        A, B = self.semi_axes
        s = np.asarray(s, dtype=float)
        return self.center + np.stack([A * np.cos(s), B * np.sin(s)], axis=-1)

    def curve_derivative(self, s):
        A, B = self.semi_axes
        s = np.asarray(s, dtype=float)
        return np.stack([-A * np.sin(s), B * np.cos(s)], axis=-1)

    def _stretch(self, n):
        A, B = self.semi_axes
        return np.sqrt((A * n[0]) ** 2 + (B * n[1]) ** 2)

    def support(self, n):
        n = np.asarray(n, dtype=float)
        return float(self.center @ n + self._stretch(n))

    def chord_lengths(self, n, a):
        # image of the unit disc under diag(A, B)
        n = np.asarray(n, dtype=float)
        A, B = self.semi_axes
        m = self._stretch(n)
        off = (np.atleast_1d(np.asarray(a, dtype=float)) - self.center @ n) / m
        return (A * B / m) * 2.0 * np.sqrt(np.clip(1.0 - off**2, 0.0, None))

    def contains(self, points):
        pts = as_points(points) - self.center
        A, B = self.semi_axes
        return (pts[..., 0] / A) ** 2 + (pts[..., 1] / B) ** 2 < 1.0

    def diameter(self):
        return 2.0 * max(self.semi_axes)

    def as_parametric(self, n_nodes=None):
        return ParametricConvex(self.curve, self.curve_derivative,
                                n_nodes=n_nodes or self.n_nodes, label="ellipse")

    def spec_line(self):
        A, B = self.semi_axes
        return _spec("ellipse", *self.center, A, B)


class ParametricConvex(ConvexDomain):
    """Convex domain bounded by a smooth closed curve ``gamma: [0, 2pi) -> R^2``.

    Without an analytic derivative, central differences with step 1e-6 are
    used. Convexity is checked on the node polygon at construction.
    """

    kind = "parametric"

    def __init__(self, gamma, derivative=None, n_nodes=DEFAULT_NODES, label="parametric",
                 implicit=None):
        self._gamma = gamma
        self._derivative = derivative
        self._implicit = implicit
        self.label = label
        self._init_common(n_nodes)
        self._check_convex()

    def curve(self, s):
        return np.asarray(self._gamma(np.asarray(s, dtype=float)), dtype=float)

    def curve_derivative(self, s):
        s = np.asarray(s, dtype=float)
        if self._derivative is not None:
            return np.asarray(self._derivative(s), dtype=float)
        return (self.curve(s + FD_STEP) - self.curve(s - FD_STEP)) / (2.0 * FD_STEP)

    def _check_convex(self):
        pts = self._dense_points
        edges = np.roll(pts, -1, axis=0) - pts
        turn = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
        scale = np.max(np.abs(turn))
        if np.min(turn) < -1e-9 * scale:
            if np.max(turn) <= 1e-9 * scale:
                raise NonConvexBoundary("curve must be traversed counter-clockwise")
            raise NonConvexBoundary("signed curvature changes sign")

    def contains(self, points):
        if self._implicit is not None:
            return self._implicit(as_points(points)) < 1.0
        return super().contains(points)

    def as_parametric(self, n_nodes=None):
        if n_nodes is None or n_nodes == self.n_nodes:
            return self
        return ParametricConvex(self._gamma, self._derivative, n_nodes, self.label, self._implicit)


class Superellipse(ParametricConvex):
    """``|(x-cx)/A|^p + |(y-cy)/B|^p < 1`` with ``p >= 2``, in polar parametrization.

    The polar form ``gamma(s) = rho(s) (cos s, sin s)`` keeps the
    parametrization smooth (analytic for even integer ``p``), unlike the
    usual ``|cos s|^(2/p)`` form.
    """

    kind = "superellipse"

    def __init__(self, center=(0.0, 0.0), semi_axes=(1.0, 0.8), p=4.0, n_nodes=DEFAULT_NODES):
        A, B = map(float, semi_axes)
        if not (A > 0 and B > 0):
            raise ValueError("semi-axes must be positive")
        if not p >= 2:
            raise ValueError("superellipse exponent must be >= 2")
        self.center = as_points(center).copy()
        self.semi_axes = (A, B)
        self.p = float(p)
        super().__init__(self._polar_curve, self._polar_derivative, n_nodes,
                         label="superellipse", implicit=self._level)

    def _level(self, pts):
        A, B = self.semi_axes
        rel = pts - self.center
        return np.abs(rel[..., 0] / A) ** self.p + np.abs(rel[..., 1] / B) ** self.p

    def _radius(self, s):
        A, B, p = self.semi_axes[0], self.semi_axes[1], self.p
        c, sn = np.cos(s), np.sin(s)
        F = np.abs(c / A) ** p + np.abs(sn / B) ** p
        dF = p * (np.abs(c / A) ** (p - 1) * np.sign(c) * (-sn) / A
                  + np.abs(sn / B) ** (p - 1) * np.sign(sn) * c / B)
        rho = F ** (-1.0 / p)
        drho = -rho * dF / (p * F)
        return rho, drho

    def _polar_curve(self, s):
        rho, _ = self._radius(s)
        return self.center + rho[..., None] * unit(s)

    def _polar_derivative(self, s):
        rho, drho = self._radius(s)
        c, sn = np.cos(s), np.sin(s)
        return np.stack([drho * c - rho * sn, drho * sn + rho * c], axis=-1)

    def diameter(self):
        if self.p == 2.0:
            return 2.0 * max(self.semi_axes)
        return super().diameter()

    def spec_line(self):
        A, B = self.semi_axes
        return _spec("superellipse", *self.center, A, B, self.p)


def _spec(kind, *numbers):
    return " ".join([kind, *(repr(float(v)) for v in numbers)])


def parse_domain(text, n_nodes=DEFAULT_NODES):
    """Parse a one-line domain specification (``disc``, ``ellipse`` or ``superellipse``)."""
    lines = [(k, ln.split("#", 1)[0].split()) for k, ln in enumerate(text.splitlines(), 1)]
    lines = [(k, toks) for k, toks in lines if toks]
    if len(lines) != 1:
        raise FormatError("expected exactly one domain line", line=lines[1][0] if lines else None)
    lineno, toks = lines[0]
    arity = {"disc": 3, "ellipse": 4, "superellipse": 5}
    kind = toks[0].lower()
    if kind not in arity:
        raise FormatError(f"unknown domain kind {toks[0]!r}", line=lineno)
    if len(toks) - 1 != arity[kind]:
        raise FormatError(f"{kind} takes {arity[kind]} numbers", line=lineno)
    try:
        vals = [float(t) for t in toks[1:]]
    except ValueError as exc:
        raise FormatError(str(exc), line=lineno) from None
    if not all(np.isfinite(vals)):
        raise FormatError("non-finite value", line=lineno)
    try:
        if kind == "disc":
            return Disc(vals[:2], vals[2], n_nodes=n_nodes)
        if kind == "ellipse":
            return Ellipse(vals[:2], vals[2:4], n_nodes=n_nodes)
        return Superellipse(vals[:2], vals[2:4], vals[4], n_nodes=n_nodes)
    except ValueError as exc:
        raise FormatError(str(exc), line=lineno) from None


def load_domain(path, n_nodes=DEFAULT_NODES):
    with open(path) as fh:
        return parse_domain(fh.read(), n_nodes=n_nodes)
