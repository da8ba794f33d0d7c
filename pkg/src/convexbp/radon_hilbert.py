"""Hilbert-transformed Radon profiles of a domain indicator and the operator K.

For a convex domain the back-projection formulas reproduce ``f - K f``
with

    (K f)(x0) = 1/(8 pi) int f(x1) k(n, a) / |x1 - x0| dx1,
    k = d_a^2 H_a R chi,   (n, a) = nhat_ahat(x1, x0).

``k`` vanishes on the interior offsets of discs and ellipses; for other
domains it is tabulated per direction on a uniform offset grid.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import OutOfValidRange
from .geometry import nhat_ahat, unit
from .quadrature import cauchy_weights, cubic_interp, second_difference

REL_STEP = 1e-3
PAD = 0.1
MARGIN = 0.05
N_DIRECTIONS = 1024

# The Hilbert transform below follows the closed-form disc table
# (H 2sqrt(1-a^2) = -2a inside). K needs the opposite orientation,
# i.e. convolution with 1/(pi a); see tests/test_radon_hilbert.py.
KERNEL_SIGN = -1.0

CLOSED_FORM_KINDS = ("disc", "ellipse")


@dataclass
class RadonProfile:
    n: np.ndarray
    a0: float
    da: float
    values: np.ndarray

    @property
    def a_grid(self):
        return self.a0 + self.da * np.arange(self.values.size)


@dataclass
class KernelProfile:
    """Samples of ``d_a^2 H_a R chi(n, .)``; trusted only inside ``valid_range``."""

    n: np.ndarray
    a0: float
    da: float
    values: np.ndarray
    valid_range: tuple

    @property
    def a_grid(self):
        return self.a0 + self.da * np.arange(self.values.size)

    def __call__(self, a):
        a = np.asarray(a, dtype=float)
        lo, hi = self.valid_range
        if np.any((a < lo) | (a > hi)):
            raise OutOfValidRange(f"offset outside trusted range [{lo}, {hi}]")
        return cubic_interp(self.values, (a - self.a0) / self.da)


def _grid_layout(a_min, a_max, rel_step=REL_STEP, pad=PAD):
    width = a_max - a_min
    n_cells = int(round((1.0 + 2.0 * pad) / rel_step))
    da = (1.0 + 2.0 * pad) * width / n_cells
    return a_min - pad * width, da, n_cells + 1


def radon_profile(domain, n, rel_step=REL_STEP, pad=PAD):
    """Chord lengths along ``n`` on a grid padded by ``pad`` support widths each side."""
    n = np.asarray(n, dtype=float)
    a_min, a_max = domain.support_interval(n)
    a0, da, size = _grid_layout(a_min, a_max, rel_step, pad)
    a = a0 + da * np.arange(size)
    return RadonProfile(n, a0, da, domain.chord_lengths(n, a))


@lru_cache(maxsize=4)
def _hilbert_matrix(size):
    return cauchy_weights(size, np.arange(size, dtype=float)) / np.pi


def hilbert_pv(profile):
    """``(1/pi) PV int phi(s) / (s - a) ds`` at every grid node.

    This orientation reproduces the closed form for the unit disc,
    ``H[2 sqrt(1 - a^2)] = -2a`` for ``|a| < 1``. The profile must vanish at
    both grid ends.
    """
    values = profile.values if isinstance(profile, RadonProfile) else np.asarray(profile)
    return values @ _hilbert_matrix(values.shape[-1]).T


def second_deriv_table(values, a0, da, a, valid_range=None):
    """Second derivative of a uniformly sampled table at offsets ``a``.

    Five-point centered differences at the nodes, then cubic interpolation
    to ``a``. Raises :class:`OutOfValidRange` outside ``valid_range``.
    """
    a = np.asarray(a, dtype=float)
    if valid_range is not None:
        lo, hi = valid_range
        if np.any((a < lo) | (a > hi)):
            raise OutOfValidRange(f"offset outside trusted range [{lo}, {hi}]")
    d2 = second_difference(values, da)
    return cubic_interp(d2, (a - a0) / da)


def second_deriv(table, a, valid_range=None):
    """Convenience form taking ``(a_grid, values)``."""
    a_grid, values = table
    a_grid = np.asarray(a_grid, dtype=float)
    return second_deriv_table(values, a_grid[0], a_grid[1] - a_grid[0], a, valid_range)


def _valid_range(a_min, a_max, da, margin):
    width = a_max - a_min
    gap = max(margin * width, 3.0 * da)
    return a_min + gap, a_max - gap


def kernel_profile(domain, n, rel_step=REL_STEP, pad=PAD, margin=MARGIN):
    n = np.asarray(n, dtype=float)
    if domain.kind in CLOSED_FORM_KINDS:
        a_min, a_max = domain.support_interval(n)
        a0, da, size = _grid_layout(a_min, a_max, rel_step, pad)
        return KernelProfile(n, a0, da, np.zeros(size), _valid_range(a_min, a_max, da, margin))
    prof = radon_profile(domain, n, rel_step, pad)
    a_min, a_max = domain.support_interval(n)
    d2 = second_difference(hilbert_pv(prof), prof.da)
    return KernelProfile(n, prof.a0, prof.da, np.nan_to_num(d2), _valid_range(a_min, a_max, prof.da, margin))


class KernelCache:
    """Kernel profiles on ``n_dirs`` equally spaced directions.

    Values at an arbitrary direction blend the two neighbouring profiles
    linearly in angle. Profiles are built together on first use; the cache
    is read-only afterwards.
    """

    def __init__(self, domain, n_dirs=N_DIRECTIONS, rel_step=REL_STEP, pad=PAD, margin=MARGIN):
        self.domain = domain
        self.n_dirs = int(n_dirs)
        self.rel_step = rel_step
        self.pad = pad
        self.margin = margin
        self._tables = None

    @property
    def metadata(self):
        return {"n_directions": self.n_dirs, "rel_step": self.rel_step,
                "pad": self.pad, "margin": self.margin}

    def _build(self):
        dirs = unit(2.0 * np.pi * np.arange(self.n_dirs) / self.n_dirs)
        rows, a0, da, lo, hi = [], [], [], [], []
        for n in dirs:
            a_min, a_max = self.domain.support_interval(n)
            start, step, size = _grid_layout(a_min, a_max, self.rel_step, self.pad)
            rows.append(self.domain.chord_lengths(n, start + step * np.arange(size)))
            a0.append(start)
            da.append(step)
            vr = _valid_range(a_min, a_max, step, self.margin)
            lo.append(vr[0])
            hi.append(vr[1])
        da = np.array(da)
        d2 = second_difference(hilbert_pv(np.array(rows)), da[:, None])
        self._tables = (np.nan_to_num(d2), np.array(a0), da, np.array(lo), np.array(hi))

    def profile(self, k):
        if self._tables is None:
            self._build()
        d2, a0, da, lo, hi = self._tables
        return KernelProfile(unit(2.0 * np.pi * k / self.n_dirs), a0[k], da[k], d2[k], (lo[k], hi[k]))

    def __call__(self, n, a):
        """``d_a^2 H_a R chi(n, a)`` for arrays of unit normals and offsets."""
        if self._tables is None:
            self._build()
        d2, a0, da, lo, hi = self._tables
        n = np.asarray(n, dtype=float)
        a = np.asarray(a, dtype=float)
        pos = (np.arctan2(n[..., 1], n[..., 0]) % (2.0 * np.pi)) * self.n_dirs / (2.0 * np.pi)
        k0 = np.floor(pos).astype(np.int64) % self.n_dirs
        frac = pos - np.floor(pos)
        out = np.zeros(a.shape)
        for k, wgt in ((k0, 1.0 - frac), ((k0 + 1) % self.n_dirs, frac)):
            if np.any((a < lo[k]) | (a > hi[k])):
                raise OutOfValidRange("offset too close to a tangent line")
            x = (a - a0[k]) / da[k]
            i = np.clip(np.floor(x).astype(np.int64), 1, d2.shape[1] - 3)
            t = x - i
            w = (-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                 -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0)
            val = sum(wm * d2[k, i + m - 1] for m, wm in enumerate(w))
            out += wgt * val
        return out


def kernel_weight(domain, x1, x0, cache=None):
    """Integrand weight ``k(nhat, ahat) / |x1 - x0|`` of K (without the 1/(8 pi))."""
    x1 = np.asarray(x1, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    n, a = nhat_ahat(x1, x0)
    if domain.kind in CLOSED_FORM_KINDS:
        return np.zeros(a.shape) if a.ndim else 0.0
    if cache is None:
        cache = KernelCache(domain)
    dist = np.hypot(*np.moveaxis(x1 - x0, -1, 0))
    val = KERNEL_SIGN * cache(n, a) / dist
    return val if val.ndim else float(val)


def apply_K(domain, f, x0, cache=None, chunk=64):
    """``(K f)(x0)`` by the midpoint rule on the cells of ``f``.

    The cell containing ``x0`` is left out; the integrand is only
    ``O(1/|x1 - x0|)`` there, so the omitted mass is ``O(h)``.
    """
    x0 = np.asarray(x0, dtype=float)
    shape = x0.shape[:-1]
    targets = x0.reshape(-1, 2)
    if domain.kind in CLOSED_FORM_KINDS:
        return np.zeros(shape)
    if cache is None:
        cache = KernelCache(domain)
    support = f.values != 0.0
    x1 = f.points()[support]
    fv = f.values[support]
    hx, hy = 0.5 * f.spacing[0], 0.5 * f.spacing[1]
    out = np.zeros(targets.shape[0])
    for start in range(0, targets.shape[0], chunk):
        t = targets[start:start + chunk]
        diff = x1[None, :, :] - t[:, None, :]
        own = (np.abs(diff[..., 0]) < hx) & (np.abs(diff[..., 1]) < hy)
        dist = np.hypot(diff[..., 0], diff[..., 1])
        safe = ~own & (dist > 0)
        n = np.where(safe[..., None], diff / np.where(safe, dist, 1.0)[..., None], [1.0, 0.0])
        mid = 0.5 * (x1[None, :, :] + t[:, None, :])
        a = np.where(safe, (n * mid).sum(-1), 0.0)
        k = np.zeros(dist.shape)
        k[safe] = cache(n[safe], a[safe]) / dist[safe]
        out[start:start + chunk] = KERNEL_SIGN * (k @ fv) * f.cell_area / (8.0 * np.pi)
    return out.reshape(shape)
