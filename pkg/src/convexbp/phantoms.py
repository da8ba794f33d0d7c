"""Smooth bump phantoms, image lattices and reconstruction error metrics."""
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, LatticeMismatch, SupportViolation


@dataclass
class GridImage:
    """Scalar field sampled at cell centers.

    ``values[iy, ix]`` sits at ``(origin[0] + ix*dx, origin[1] + iy*dy)``.
    """

    values: np.ndarray
    origin: tuple
    spacing: tuple

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.origin = (float(self.origin[0]), float(self.origin[1]))
        self.spacing = (float(self.spacing[0]), float(self.spacing[1]))
        if self.values.ndim != 2 or min(self.values.shape) < 2:
            raise ValueError("GridImage needs a 2D array with nx, ny >= 2")
        if not (self.spacing[0] > 0 and self.spacing[1] > 0):
            raise ValueError("spacing must be positive")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite image values")

    @property
    def ny(self):
        return self.values.shape[0]

    @property
    def nx(self):
        return self.values.shape[1]

    @property
    def cell_area(self):
        return self.spacing[0] * self.spacing[1]

    def axes(self):
        x = self.origin[0] + self.spacing[0] * np.arange(self.nx)
        y = self.origin[1] + self.spacing[1] * np.arange(self.ny)
        return x, y

    def points(self):
        x, y = self.axes()
        xx, yy = np.meshgrid(x, y)
        return np.stack([xx, yy], axis=-1)

    def same_lattice(self, other, rtol=1e-12):
        return (self.values.shape == other.values.shape
                and np.allclose(self.origin, other.origin, rtol=0, atol=rtol * max(self.spacing))
                and np.allclose(self.spacing, other.spacing, rtol=rtol, atol=0))

    def with_values(self, values):
        return GridImage(values, self.origin, self.spacing)


def lattice_for(domain, n, refine=1):
    """Square-pixel ``n x n`` lattice over the bounding square of ``domain``.

    With ``refine > 1`` each cell is split into ``refine**2`` sub-cells;
    the result then covers the same square at ``n*refine`` resolution.
    """
    xmin, xmax, ymin, ymax = domain.bounding_box()
    side = max(xmax - xmin, ymax - ymin)
    cx, cy = 0.5 * (xmin + xmax), 0.5 * (ymin + ymax)
    m = n * refine
    h = side / m
    origin = (cx - side / 2 + h / 2, cy - side / 2 + h / 2)
    return GridImage(np.zeros((m, m)), origin, (h, h))


@dataclass(frozen=True)
class Bump:
    center: tuple
    radius: float
    amplitude: float = 1.0

    def __call__(self, pts):
        rel = np.asarray(pts, dtype=float) - np.asarray(self.center)
        s2 = (rel * rel).sum(-1) / self.radius**2
        out = np.zeros(s2.shape)
        inside = s2 < 1.0
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
        return out


@dataclass
class Phantom:
    """Sum of mollifier bumps ``amp * exp(1 - 1/(1 - s^2))``, ``s = |x - c|/rho < 1``."""

    bumps: list = field(default_factory=list)

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[:-1])
        for b in self.bumps:
            out += b(pts)
        return out

    def check_support(self, domain, margin=0.0):
        for b in self.bumps:
            depth = -float(domain.signed_distance(np.asarray(b.center)))
            if depth - b.radius < margin:
                raise SupportViolation(
                    f"bump at {b.center} (rho={b.radius}) is within {margin} of the boundary")

    def to_text(self):
        return "".join(f"bump {b.center[0]!r} {b.center[1]!r} {b.radius!r} {b.amplitude!r}\n"
                       for b in self.bumps)


def parse_phantom(text):
    bumps = []
    for lineno, line in enumerate(text.splitlines(), 1):
        toks = line.split("#", 1)[0].split()
        if not toks:
            continue
        if toks[0] != "bump" or len(toks) != 5:
            raise FormatError("expected 'bump cx cy rho amp'", line=lineno)
        try:
            cx, cy, rho, amp = map(float, toks[1:])
        except ValueError as exc:
            raise FormatError(str(exc), line=lineno) from None
        if not (np.isfinite([cx, cy, rho, amp]).all() and rho > 0):
            raise FormatError("bump needs finite values and rho > 0", line=lineno)
        bumps.append(Bump((cx, cy), rho, amp))
    return Phantom(bumps)


def load_phantom(path):
    with open(path) as fh:
        return parse_phantom(fh.read())


def random_phantom(domain, n_bumps=3, seed=42, radius_range=(0.2, 0.35), margin=0.2,
                   max_tries=10000):
    """Non-overlapping bumps placed uniformly inside ``domain`` with ``margin`` to spare."""
    rng = np.random.default_rng(seed)
    xmin, xmax, ymin, ymax = domain.bounding_box()
    bumps = []
    for _ in range(max_tries):
        if len(bumps) == n_bumps:
            break
        rho = rng.uniform(*radius_range)
        c = np.array([rng.uniform(xmin, xmax), rng.uniform(ymin, ymax)])
        if -float(domain.signed_distance(c)) - rho < margin:
            continue
        if any(np.hypot(*(c - b.center)) < rho + b.radius for b in bumps):
            continue
        bumps.append(Bump((float(c[0]), float(c[1])), float(rho), float(rng.uniform(0.5, 1.0))))
    else:
        raise SupportViolation(f"could not place {n_bumps} bumps")
    return Phantom(bumps)


def figure_phantom():
    """Three bumps inside the ellipse ``x^2 + (y/0.8)^2 < 1`` used for round-trip runs."""
    return Phantom([
        Bump((-0.35, 0.2), 0.3, 1.0),
        Bump((0.3, 0.25), 0.22, 0.7),
        Bump((0.1, -0.3), 0.25, 0.85),
    ])


def rasterize(phantom, lattice, domain=None, margin=0.0):
    """Exact point evaluation of ``phantom`` at the cell centers of ``lattice``."""
    if domain is not None:
        phantom.check_support(domain, margin)
    return lattice.with_values(phantom(lattice.points()))


def error_metrics(recon, reference, mask=None):
    """Masked relative L2 and L-infinity errors of ``recon`` against ``reference``."""
    if not recon.same_lattice(reference):
        raise LatticeMismatch("reconstruction and reference lattices differ")
    if mask is None:
        mask = np.ones(recon.values.shape, dtype=bool)
    diff = (recon.values - reference.values)[mask]
    ref = reference.values[mask]
    ref_l2 = np.linalg.norm(ref)
    ref_inf = np.max(np.abs(ref)) if ref.size else 0.0
    if ref_l2 == 0.0:
        return {"rel_l2": float(np.linalg.norm(diff)), "rel_linf": float(np.max(np.abs(diff), initial=0.0))}
    return {"rel_l2": float(np.linalg.norm(diff) / ref_l2),
            "rel_linf": float(np.max(np.abs(diff)) / ref_inf)}
