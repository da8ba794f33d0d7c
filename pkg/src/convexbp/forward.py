"""Boundary data of the 2D wave problem from circular means.

``M f(x, r)`` is the average of ``f`` over the circle of radius ``r``
about ``x``. The solutions with initial data ``(f, 0)`` and ``(0, f)`` are

    U f(x, t) = int_0^t  d_r M f(x, r) * t / sqrt(t^2 - r^2) dr
    V f(x, t) = int_0^t  r M f(x, r) / sqrt(t^2 - r^2) dr

and both are evaluated after the substitution ``r = t sin(psi)``, which
turns the inverse square root into a bounded integrand.
"""
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

from .errors import SupportViolation
from .phantoms import GridImage, Phantom
from .quadrature import cubic_weights, fd_derivative

DEFAULT_RADII = 1024
DEFAULT_TIMES = 2048
DEFAULT_ANGLES = 512
TMAX_FACTOR = 8.0

_GAUSS4 = np.polynomial.legendre.leggauss(4)


@dataclass
class BoundaryTable:
    """Samples ``values[i, j]`` at boundary center ``i`` and grid node ``(j+1)*step``."""

    centers: np.ndarray
    step: float
    values: np.ndarray
    kind = "table"

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.step = float(self.step)
        if self.values.shape[0] != self.centers.shape[0]:
            raise ValueError("one row of values per center required")
        if not self.step > 0:
            raise ValueError("grid step must be positive")

    @property
    def grid(self):
        return self.step * np.arange(1, self.values.shape[1] + 1)

    @property
    def extent(self):
        return self.step * self.values.shape[1]

    def like(self, values, cls=None):
        return (cls or type(self))(self.centers, self.step, values)


class MeansData(BoundaryTable):
    """Circular means on a radius grid ``(0, r_max]``."""

    kind = "means"


class WaveData(BoundaryTable):
    """Wave traces ``U f`` on a time grid ``(0, T_max]``."""

    kind = "wave"


class VWaveData(BoundaryTable):
    """Traces of ``V f`` (zero initial value, initial velocity ``f``)."""

    kind = "vwave"


def mean_values(f, centers, radii, n_ang=DEFAULT_ANGLES):
    """Circular means of ``f`` for every center/radius pair, shape ``(K, R)``.

    ``f`` is a :class:`Phantom` (exact evaluation) or a :class:`GridImage`
    (bilinear sampling). For a phantom each bump is integrated only over the
    arc that meets its support, with the trapezoid rule on ``n_ang`` nodes;
    the bump vanishes to all orders at the arc ends, so the rule keeps its
    spectral accuracy there.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    if isinstance(f, Phantom):
        return _phantom_means(f, centers, radii, n_ang)
    if isinstance(f, GridImage):
        return _grid_means(f, centers, radii, n_ang)
    raise TypeError(f"unsupported source {type(f).__name__}")


def _phantom_means(phantom, centers, radii, n_ang):
    out = np.zeros((centers.shape[0], radii.size))
    tau = np.linspace(-1.0, 1.0, n_ang)
    trap = np.full(n_ang, 1.0)
    trap[[0, -1]] = 0.5
    full = 2.0 * np.pi * np.arange(n_ang) / n_ang
    for b in phantom.bumps:
        rho2 = b.radius**2
        for i, x in enumerate(centers):
            d = float(np.hypot(*(np.asarray(b.center) - x)))
            hit = (radii > d - b.radius) & (radii < d + b.radius)
            if not np.any(hit):
                continue
            r = radii[hit, None]
            # circles lying inside the support use the full periodic rule
            whole = r[:, 0] < b.radius - d
            cosb = np.clip((r**2 + d * d - rho2) / (2.0 * r * max(d, 1e-300)), -1.0, 1.0)
            half = np.where(whole[:, None], np.pi, np.arccos(cosb))
            angle = np.where(whole[:, None], full, half * tau)
            # squared distance to the bump center along the arc
            s2 = (r**2 + d * d - 2.0 * r * d * np.cos(angle)) / rho2
            vals = np.zeros(s2.shape)
            inner = s2 < 1.0
            vals[inner] = np.exp(1.0 - 1.0 / (1.0 - s2[inner]))
            arc = (vals @ trap) * (2.0 * half[:, 0] / (n_ang - 1)) / (2.0 * np.pi)
            out[i, hit] += b.amplitude * np.where(whole, vals.mean(-1), arc)
    return out


def _grid_means(img, centers, radii, n_ang):
    theta = 2.0 * np.pi * np.arange(n_ang) / n_ang
    ring = np.stack([np.cos(theta), np.sin(theta)], -1)
    out = np.empty((centers.shape[0], radii.size))
    for i, x in enumerate(centers):
        pts = x + radii[:, None, None] * ring
        col = (pts[..., 0] - img.origin[0]) / img.spacing[0]
        row = (pts[..., 1] - img.origin[1]) / img.spacing[1]
        samples = map_coordinates(img.values, [row.ravel(), col.ravel()], order=1,
                                  mode="constant", cval=0.0)
        out[i] = samples.reshape(row.shape).mean(-1)
    return out


def check_grid_support(img, domain, band_pixels=2):
    """Raise if ``img`` is nonzero within ``band_pixels`` cells of the boundary."""
    band = band_pixels * max(img.spacing)
    near = domain.signed_distance(img.points()) > -band
    if np.any(img.values[near] != 0.0):
        raise SupportViolation(f"image is nonzero within {band_pixels} pixels of the boundary")


def circular_means(f, domain, n_r=DEFAULT_RADII, r_max=None, n_ang=DEFAULT_ANGLES):
    """Means of ``f`` on circles about the boundary nodes of ``domain``.

    The radius grid is ``r_j = j * r_max / n_r`` for ``j = 1..n_r`` with
    ``r_max`` defaulting to the domain diameter.
    """
    if isinstance(f, GridImage):
        check_grid_support(f, domain)
    elif isinstance(f, Phantom):
        f.check_support(domain)
    if r_max is None:
        r_max = domain.diameter()
    dr = r_max / n_r
    radii = dr * np.arange(1, n_r + 1)
    centers = domain.nodes.points
    return MeansData(centers, dr, mean_values(f, centers, radii, n_ang))


def abel_matrix(n_r, dr, times):
    """Quadrature for ``int_0^{psi_max} h(t sin psi) dpsi`` on a radial grid.

    ``h`` is known on ``r_k = k*dr, k = 0..n_r`` and vanishes beyond
    ``n_r*dr``. The ``psi`` range is split at ``arcsin(r_k / t)`` so that each
    panel sees a single cubic piece of ``h``; 4-point Gauss-Legendre per
    panel. Returns a dense ``(len(times), n_r + 1)`` matrix.
    """
    times = np.asarray(times, dtype=float)
    r_max = n_r * dr
    gx, gw = _GAUSS4
    out = np.zeros((times.size, n_r + 1))
    for j, t in enumerate(times):
        top = min(t, r_max)
        knots = dr * np.arange(0, int(np.floor(top / dr)) + 1)
        knots = knots[knots < top]
        psi = np.append(np.arcsin(knots / t), np.arcsin(top / t))
        lo, hi = psi[:-1, None], psi[1:, None]
        nodes = 0.5 * (hi - lo) * gx + 0.5 * (hi + lo)
        weights = 0.5 * (hi - lo) * gw
        idx, w = cubic_weights(t * np.sin(nodes) / dr, n_r + 1)
        w = w * weights[..., None]
        out[j] = np.bincount(idx.ravel(), weights=w.ravel(), minlength=n_r + 1)
    return out


def _time_grid(m, n_t, t_max):
    if t_max is None:
        t_max = TMAX_FACTOR * m.extent
    dt = t_max / n_t
    return dt, dt * np.arange(1, n_t + 1)


def _with_origin(values):
    # h(0) = 0 for both integrands (d_r M and r*M vanish at r = 0)
    return np.concatenate([np.zeros((values.shape[0], 1)), values], axis=1)


def radial_derivative(m):
    """``d_r M f`` on the radius grid, fourth order."""
    return fd_derivative(m.values, m.step, axis=1)


def wave_from_means(m, n_t=DEFAULT_TIMES, t_max=None):
    """``U f`` on ``t_j = j*T_max/n_t`` from circular means (default ``T_max = 8 r_max``)."""
    dt, t = _time_grid(m, n_t, t_max)
    n_r = m.values.shape[1]
    B = abel_matrix(n_r, m.step, t)
    vals = (_with_origin(radial_derivative(m)) @ B.T) * t
    return WaveData(m.centers, dt, vals)


def v_from_means(m, n_t=DEFAULT_TIMES, t_max=None):
    """``V f`` on the same time grid as :func:`wave_from_means`."""
    dt, t = _time_grid(m, n_t, t_max)
    n_r = m.values.shape[1]
    B = abel_matrix(n_r, m.step, t)
    vals = _with_origin(m.grid * m.values) @ B.T
    return VWaveData(m.centers, dt, vals)


def dt_over_t(w):
    """``d_t (U f / t)`` with fourth-order differences (one-sided at the ends)."""
    return fd_derivative(w.values / w.grid, w.step, axis=1)


def time_derivative(w):
    return fd_derivative(w.values, w.step, axis=1)
