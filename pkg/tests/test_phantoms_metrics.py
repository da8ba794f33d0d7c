import numpy as np
import pytest
from scipy.integrate import quad

from convexbp.errors import FormatError, LatticeMismatch, SupportViolation
from convexbp.phantoms import (Bump, GridImage, Phantom, error_metrics, lattice_for,
                               parse_phantom, random_phantom, rasterize)


def test_empty_phantom_raster(disc):
    img = rasterize(Phantom([]), lattice_for(disc, 16), disc)
    assert img.values.shape == (16, 16) and np.all(img.values == 0.0)


def test_bump_center_value():
    ph = Phantom([Bump((0.1, -0.2), 0.3, 0.7)])
    assert ph(np.array([0.1, -0.2])) == pytest.approx(0.7, abs=1e-15)
    assert ph(np.array([0.4, -0.2])) == 0.0


def test_bump_integral_refinement(disc):
    ph = Phantom([Bump((0.13, -0.07), 0.35, 1.0)])
    coarse = rasterize(ph, lattice_for(disc, 64), disc)
    fine = rasterize(ph, lattice_for(disc, 256), disc)
    ref = fine.values.sum() * fine.cell_area
    assert coarse.values.sum() * coarse.cell_area == pytest.approx(ref, rel=1e-4)
    radial = quad(lambda s: np.exp(1 - 1 / (1 - s * s)) * s, 0, 1, epsabs=1e-14)[0]
    assert ref == pytest.approx(2 * np.pi * 0.35**2 * radial, rel=1e-8)


def test_smoothness_across_support_edge():
    # a jump would make h^-2 second differences grow 4x per halving
    b = Bump((0.0, 0.0), 0.5)

    def peak(h):
        x = np.arange(0.3, 0.7, h)
        f = b(np.stack([x, np.zeros_like(x)], -1))
        return np.max(np.abs(f[:-2] - 2 * f[1:-1] + f[2:])) / h**2

    r = peak(1e-3) / peak(5e-4)
    assert abs(r - 1.0) <= 0.1


def test_rasterize_support_violation(disc):
    lat = lattice_for(disc, 32)
    with pytest.raises(SupportViolation):
        rasterize(Phantom([Bump((0.8, 0.0), 0.25)]), lat, disc)
    with pytest.raises(SupportViolation):
        rasterize(Phantom([Bump((0.6, 0.0), 0.3)]), lat, disc, margin=2 * lat.spacing[0])


def test_error_metrics_trivial(disc):
    ref = rasterize(Phantom([Bump((0, 0), 0.5)]), lattice_for(disc, 24), disc)
    assert error_metrics(ref, ref) == {"rel_l2": 0.0, "rel_linf": 0.0}
    m = error_metrics(ref.with_values(2 * ref.values), ref)
    assert m["rel_l2"] == pytest.approx(1.0) and m["rel_linf"] == pytest.approx(1.0)


def test_error_metrics_mask(disc):
    ref = rasterize(Phantom([Bump((0, 0), 0.5)]), lattice_for(disc, 24), disc)
    bad = ref.values.copy()
    bad[0, 0] = 5.0
    mask = np.ones(bad.shape, dtype=bool)
    mask[0, 0] = False
    assert error_metrics(ref.with_values(bad), ref, mask)["rel_l2"] == 0.0


def test_error_metrics_lattice_mismatch(disc):
    a = lattice_for(disc, 16)
    with pytest.raises(LatticeMismatch):
        error_metrics(a, lattice_for(disc, 17))
    shifted = GridImage(a.values, (a.origin[0] + 0.01, a.origin[1]), a.spacing)
    with pytest.raises(LatticeMismatch):
        error_metrics(a, shifted)


@pytest.mark.parametrize("values,spacing", [(np.zeros((1, 4)), (1, 1)), (np.zeros((3, 3)), (0, 1)),
                                            (np.full((3, 3), np.nan), (1, 1))])
def test_grid_image_invariants(values, spacing):
    with pytest.raises(ValueError):
        GridImage(values, (0, 0), spacing)


def test_random_phantom_reproducible(superellipse):
    a = random_phantom(superellipse, seed=42)
    b = random_phantom(superellipse, seed=42)
    c = random_phantom(superellipse, seed=7)
    assert a == b and a != c
    a.check_support(superellipse, margin=0.2)
    for i, p in enumerate(a.bumps):
        for q in a.bumps[i + 1:]:
            assert np.hypot(*np.subtract(p.center, q.center)) >= p.radius + q.radius


def test_phantom_text_round_trip(ellipse):
    ph = random_phantom(ellipse, seed=3)
    assert parse_phantom(ph.to_text()) == ph


@pytest.mark.parametrize("text,line", [("bump 0 0 1", 1), ("# c\n\nbump 0 0 x 1", 3),
                                       ("bump 0 0 0.2 1\nblob 0 0 1 1", 2), ("bump 0 0 -1 1", 1)])
def test_phantom_parse_errors(text, line):
    with pytest.raises(FormatError) as exc:
        parse_phantom(text)
    assert exc.value.line == line
