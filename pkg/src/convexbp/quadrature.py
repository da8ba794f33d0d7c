"""Uniform-grid stencils shared by the forward and inverse operators.

Everything here works on grids in index units (node ``k`` sits at ``k``);
callers rescale by the physical step.
"""

import numpy as np

_D1_INTERIOR = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D1_LEFT = np.array([
    [-25.0, 48.0, -36.0, 16.0, -3.0],
    [-3.0, -10.0, 18.0, -6.0, 1.0],
]) / 12.0
_D2_INTERIOR = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0

_GAUSS8 = np.polynomial.legendre.leggauss(8)


def fd_derivative(values, step, axis=-1):
    """Fourth-order first derivative along ``axis``.

    Centered five-point stencil in the interior, one-sided five-point
    stencils on the two outermost nodes at each end.
    """
    f = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    n = f.shape[-1]
    if n < 5:
        raise ValueError("need at least 5 samples for a 4th-order derivative")
    out = np.empty_like(f)
    out[..., 2:-2] = (f[..., :-4] * _D1_INTERIOR[0] + f[..., 1:-3] * _D1_INTERIOR[1]
                      + f[..., 3:-1] * _D1_INTERIOR[3] + f[..., 4:] * _D1_INTERIOR[4])
    head = f[..., :5]
    tail = f[..., -5:][..., ::-1]
    for k in range(2):
        out[..., k] = head @ _D1_LEFT[k]
        out[..., n - 1 - k] = -(tail @ _D1_LEFT[k])
    return np.moveaxis(out / step, -1, axis)


def second_difference(values, step):
    """Centered five-point second derivative; the two nodes at each end are NaN."""
    f = np.asarray(values, dtype=float)
    out = np.full_like(f, np.nan)
    c = _D2_INTERIOR
    out[..., 2:-2] = (c[0] * f[..., :-4] + c[1] * f[..., 1:-3] + c[2] * f[..., 2:-2]
                      + c[3] * f[..., 3:-1] + c[4] * f[..., 4:])
    return out / step**2


def cubic_weights(x, n):
    """Local four-point Lagrange interpolation at fractional indices ``x``.

    Returns ``(idx, w)`` of shape ``x.shape + (4,)`` so that the interpolant
    is ``(values[idx] * w).sum(-1)``. Points outside ``[0, n-1]`` are
    extrapolated from the end stencils; callers mask them.
    """
    x = np.asarray(x, dtype=float)
    if n < 4:
        raise ValueError("cubic interpolation needs at least 4 nodes")
    i = np.clip(np.floor(x).astype(np.int64), 1, n - 3)
    t = x - i
    w = np.stack([
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ], axis=-1)
    idx = i[..., None] + np.arange(-1, 3)
    return idx, w


def cubic_interp(values, x):
    """Evaluate the local cubic interpolant of ``values`` (last axis) at indices ``x``."""
    values = np.asarray(values, dtype=float)
    idx, w = cubic_weights(x, values.shape[-1])
    return (values[..., idx] * w).sum(-1)


# Lagrange bases on a cell [0, 1] for the three stencil placements:
# interior (-1..2), first cell (0..3) and last cell (-2..1).
_CELL_COEF = {
    off: np.linalg.inv(np.arange(off, off + 4, dtype=float)[:, None] ** np.arange(4))
    for off in (-1, 0, -2)
}


def _cell_weights(e, coef):
    """Weights of ``PV int_0^1 p(tau)/(tau - e) dtau`` on the 4 stencil nodes."""
    e = np.asarray(e, dtype=float)
    near = np.abs(e - 0.5) <= 3.0
    w = np.empty(e.shape + (4,))
    en = e[near]
    if en.size:
        at_pole = (en[:, None] ** np.arange(4)) @ coef
        with np.errstate(divide="ignore"):
            logs = np.log(np.abs(1.0 - en)) - np.log(np.abs(en))
        # pole on a node: the infinite logs of the two adjacent cells carry
        # the same interpolated value with opposite signs and cancel
        logs[~np.isfinite(logs)] = 0.0
        q = np.stack([np.zeros_like(en), np.ones_like(en), en + 0.5,
                      en * en + en / 2.0 + 1.0 / 3.0], axis=-1)
        w[near] = at_pole * logs[:, None] + q @ coef
    ef = e[~near]
    if ef.size:
        gx, gw = _GAUSS8
        gt = 0.5 * (gx + 1.0)
        basis = (gt[:, None] ** np.arange(4)) @ coef
        w[~near] = (0.5 * gw / (gt - ef[:, None])) @ basis
    return w


def cauchy_weights(n, c):
    """Quadrature weights for ``PV int_0^{n-1} g(s) / (s - c) ds``.

    ``g`` is replaced on each cell by its local cubic interpolant and the
    pole is removed by subtraction, ``p(s)/(s-c) = p(c)/(s-c) + q(s)``, with
    the log term and the quadratic ``q`` integrated exactly. Cells far from
    the pole use 8-point Gauss-Legendre instead, which avoids the
    cancellation of the subtracted form. Returns an array of shape
    ``(len(c), n)``.

    Interior cells share one basis, so their weights depend on ``c - j``
    only; they are tabulated once per distinct fractional part of ``c``.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if n < 5:
        raise ValueError("need at least 5 nodes")
    out = np.zeros((c.size, n))
    # end cells with clipped stencils
    out[:, :4] += _cell_weights(c, _CELL_COEF[0])
    out[:, n - 4:] += _cell_weights(c - (n - 2), _CELL_COEF[-2])

    whole = np.floor(c)
    frac = np.round(c - whole, 12)
    whole = whole.astype(np.int64)
    nodes = np.arange(n)
    for phi in np.unique(frac):
        rows = np.nonzero(frac == phi)[0]
        base = whole[rows]
        # offsets base - j over interior cells j = 1 .. n-3
        omin = base.min() - (n - 2)
        table = _cell_weights(np.arange(omin, base.max()) + 1.0 + phi, _CELL_COEF[-1])
        acc = np.zeros((rows.size, n))
        for m in range(4):
            j = nodes - m + 1
            valid = (j >= 1) & (j <= n - 3)
            idx = base[:, None] - j[None, :] - omin - 1
            idx = np.where(valid, idx, 0)
            acc += np.where(valid, table[idx, m], 0.0)
        out[rows] += acc
    return out
