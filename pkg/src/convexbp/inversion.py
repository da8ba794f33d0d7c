"""Back-projection reconstruction from wave traces or circular means.

All four formulas share one structure: a 1D filter applied to each boundary
trace, tabulated on a fine distance grid, then summed over the boundary
with the weight ``nu . (x0 - x)`` (dot form) or through a divergence in
``x0`` (divergence form):

    wave-a   f = 1/pi div int nu    int_d^inf  U / sqrt(t^2 - d^2) dt      ds
    wave-b   f = 1/pi     int nu.(x0-x) int_d^inf d_t(U/t) / sqrt(t^2-d^2) dt ds
    means-a  f = 1/pi div int nu    PV int_0^inf r M / (r^2 - d^2) dr      ds
    means-b  f = 1/pi     int nu.(x0-x) PV int_0^inf d_r M / (r^2 - d^2) dr ds

with ``d = |x - x0|``. On a general convex domain each returns ``f - K f``.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BadDistance
from .forward import (MeansData, WaveData, circular_means, dt_over_t, radial_derivative,
                      wave_from_means)
from .phantoms import GridImage, lattice_for, rasterize
from .quadrature import cauchy_weights, cubic_weights

FORMULAS = ("wave-a", "wave-b", "means-a", "means-b")
MARGIN_PIXELS = 2

_GAUSS4 = np.polynomial.legendre.leggauss(4)


def cosh_matrix(n_t, dt, d):
    """Rows of weights for ``int_d^T g(t) / sqrt(t^2 - d^2) dt`` on ``t_k = (k+1) dt``.

    With ``t = d cosh(u)`` the weight becomes ``du``. The ``u`` axis is split
    where ``t`` crosses the sampling nodes, so each panel integrates one
    cubic piece of ``g``, with 4-point Gauss-Legendre in ``u``.
    """
    d = np.atleast_1d(np.asarray(d, dtype=float))
    t_max = n_t * dt
    if np.any(d <= 0) or np.any(d >= t_max):
        raise BadDistance(f"distance must lie in (0, {t_max})")
    gx, gw = _GAUSS4
    nodes_t = dt * np.arange(1, n_t + 1)
    out = np.zeros((d.size, n_t))
    for row, dk in enumerate(d):
        brk = np.concatenate([[dk], nodes_t[nodes_t > dk]])
        u = np.arccosh(np.maximum(brk / dk, 1.0))
        lo, hi = u[:-1, None], u[1:, None]
        uu = 0.5 * (hi - lo) * gx + 0.5 * (hi + lo)
        ww = 0.5 * (hi - lo) * gw
        idx, w = cubic_weights(dk * np.cosh(uu) / dt - 1.0, n_t)
        out[row] = np.bincount(idx.ravel(), weights=(w * ww[..., None]).ravel(), minlength=n_t)
    return out


def singular_time_integral(trace, dt, d):
    """``int_d^{T_max} g(t) / sqrt(t^2 - d^2) dt`` for a trace sampled on ``(0, T_max]``."""
    trace = np.asarray(trace, dtype=float)
    res = cosh_matrix(trace.shape[-1], dt, d) @ trace.T
    return float(res[0]) if np.ndim(d) == 0 and trace.ndim == 1 else res


def pv_radius_matrix(n_r, dr, d):
    """Weights for ``PV int_0^{r_max} g(r) / (r^2 - d^2) dr`` on ``r_k = k dr, k = 0..n_r``.

    Partial fractions split the kernel into ``1/(r-d)`` (principal value,
    singularity subtraction) and the regular ``1/(r+d)``.
    """
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if np.any(d <= 0) or np.any(d >= n_r * dr):
        raise BadDistance(f"distance must lie in (0, {n_r * dr})")
    c = d / dr
    return (cauchy_weights(n_r + 1, c) - cauchy_weights(n_r + 1, -c)) / (2.0 * d[:, None])


def pv_radius_integral(profile, dr, d, g0=0.0):
    """PV radial integral of a profile sampled on ``(0, r_max]``; ``g0`` is its value at 0."""
    profile = np.asarray(profile, dtype=float)
    g = np.concatenate([[g0], profile])
    res = pv_radius_matrix(profile.size, dr, d) @ g
    return float(res[0]) if np.ndim(d) == 0 else res


@dataclass
class Reconstruction:
    image: GridImage
    mask: np.ndarray
    formula: str
    meta: dict = field(default_factory=dict)


def target_mask(domain, lattice, margin_pixels=MARGIN_PIXELS):
    """Cell centers at least ``margin_pixels`` pixels inside the domain."""
    margin = margin_pixels * max(lattice.spacing)
    return domain.signed_distance(lattice.points()) <= -margin


def _filtered_tables(data, formula, d_step, d_max):
    """Per-center filtered traces on the distance grid ``(k + 1/2) * d_step``."""
    n_d = int(np.ceil(d_max / d_step))
    dgrid = d_step * (np.arange(n_d) + 0.5)
    if formula.startswith("wave"):
        trace = data.values if formula == "wave-a" else dt_over_t(data)
        A = cosh_matrix(data.values.shape[1], data.step, dgrid)
        return trace @ A.T
    if formula == "means-a":
        g = data.grid * data.values
    else:
        g = radial_derivative(data)
    g = np.concatenate([np.zeros((g.shape[0], 1)), g], axis=1)
    A = pv_radius_matrix(data.values.shape[1], data.step, dgrid)
    return g @ A.T


def _lookup(tables, d_step, dist):
    # dist is (targets, centers); row i of tables belongs to center i
    idx, w = cubic_weights(dist / d_step - 0.5, tables.shape[1])
    rows = np.arange(tables.shape[0])[None, :, None]
    return (tables[rows, idx] * w).sum(-1)


def _backproject_chunk(nodes, tables, d_step, pts, formula, h):
    x, nu, wt = nodes.points, nodes.normals, nodes.weights
    if formula.endswith("-b"):
        rel = pts[:, None, :] - x[None, :, :]
        dist = np.hypot(rel[..., 0], rel[..., 1])
        proj = (rel * nu[None, :, :]).sum(-1)
        return (_lookup(tables, d_step, dist) * proj) @ wt / np.pi
    div = np.zeros(pts.shape[0])
    for axis in range(2):
        for sign in (1.0, -1.0):
            shifted = pts.copy()
            shifted[:, axis] += sign * h
            rel = shifted[:, None, :] - x[None, :, :]
            dist = np.hypot(rel[..., 0], rel[..., 1])
            field_comp = _lookup(tables, d_step, dist) @ (wt * nu[:, axis])
            div += sign * field_comp / (2.0 * h)
    return div / np.pi


def backproject(domain, data, formula, lattice, margin_pixels=MARGIN_PIXELS, threads=1,
                chunk=256, d_step=None):
    """Apply one of the four formulas at the masked cell centers of ``lattice``."""
    if formula not in FORMULAS:
        raise ValueError(f"unknown formula {formula!r}; choose from {FORMULAS}")
    want = WaveData if formula.startswith("wave") else MeansData
    if not isinstance(data, want):
        raise TypeError(f"{formula} needs {want.__name__}, got {type(data).__name__}")
    nodes = domain.nodes
    if data.centers.shape != nodes.points.shape or not np.allclose(data.centers, nodes.points,
                                                                    rtol=0, atol=1e-9):
        raise ValueError("data centers do not match the domain boundary nodes")
    mask = target_mask(domain, lattice, margin_pixels)
    pts = lattice.points()[mask]
    d_step = d_step or 0.5 * data.step
    d_max = min(domain.diameter(), data.extent - d_step)
    tables = _filtered_tables(data, formula, d_step, d_max)
    h = 0.5 * min(lattice.spacing)
    chunks = [pts[i:i + chunk] for i in range(0, pts.shape[0], chunk)]

    def work(p):
        return _backproject_chunk(nodes, tables, d_step, p, formula, h)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(p) for p in chunks]
    values = np.zeros(lattice.values.shape)
    if parts:
        values[mask] = np.concatenate(parts)
    meta = {"formula": formula, "n_boundary": len(nodes), "n_samples": int(data.values.shape[1]),
            "step": data.step, "extent": data.extent, "d_step": d_step,
            "margin_pixels": margin_pixels, "grid": [lattice.nx, lattice.ny]}
    return Reconstruction(lattice.with_values(values), mask, formula, meta)


def bp_wave_a(domain, wave, lattice, **kw):
    return backproject(domain, wave, "wave-a", lattice, **kw)


def bp_wave_b(domain, wave, lattice, **kw):
    return backproject(domain, wave, "wave-b", lattice, **kw)


def bp_means_a(domain, means, lattice, **kw):
    return backproject(domain, means, "means-a", lattice, **kw)


def bp_means_b(domain, means, lattice, **kw):
    return backproject(domain, means, "means-b", lattice, **kw)


def relative_difference(a, b, mask):
    """``||a - b|| / ||b||`` over ``mask``."""
    num = np.linalg.norm((a.values - b.values)[mask])
    den = np.linalg.norm(b.values[mask])
    return float(num / den) if den > 0 else float(num)


def residual_vs_kernel(domain, phantom, grid=64, n_r=1024, n_t=2048, t_max=None,
                       kernel_refine=2, cache=None, threads=1):
    """Compare ``f - BP f`` (wave-b) with ``K f`` on a ``grid x grid`` lattice.

    ``K f`` is integrated on a lattice ``kernel_refine`` times finer than the
    targets. Returns ``(residual, kernel_field, rel_gap, mask)`` with
    ``rel_gap = ||residual - K f|| / ||f||`` over the mask.
    """
    from .radon_hilbert import KernelCache, apply_K

    lattice = lattice_for(domain, grid)
    truth = rasterize(phantom, lattice, domain)
    means = circular_means(phantom, domain, n_r=n_r)
    wave = wave_from_means(means, n_t=n_t, t_max=t_max)
    rec = bp_wave_b(domain, wave, lattice, threads=threads)
    mask = rec.mask
    residual = truth.with_values(np.where(mask, truth.values - rec.image.values, 0.0))
    fine = rasterize(phantom, lattice_for(domain, grid, refine=kernel_refine))
    if cache is None and domain.kind not in ("disc", "ellipse"):
        cache = KernelCache(domain)
    kvals = np.zeros(lattice.values.shape)
    kvals[mask] = apply_K(domain, fine, lattice.points()[mask], cache=cache)
    kernel_field = truth.with_values(kvals)
    norm_f = np.linalg.norm(truth.values[mask])
    gap = np.linalg.norm((residual.values - kernel_field.values)[mask])
    return residual, kernel_field, float(gap / norm_f if norm_f > 0 else gap), mask
