import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from convexbp.errors import DegeneratePair, FormatError, NonConvexBoundary
from convexbp.geometry import (Disc, Ellipse, ParametricConvex, Superellipse, nhat_ahat,
                               parse_domain, unit)

finite = st.floats(-5, 5, allow_nan=False)


def test_nhat_ahat_symmetric_pair():
    n, a = nhat_ahat([0.5, 0.0], [-0.5, 0.0])
    assert np.allclose(n, [1.0, 0.0]) and a == 0.0


def test_nhat_ahat_origin_pair():
    n, a = nhat_ahat([1.0, 0.0], [0.0, 0.0])
    assert np.allclose(n, [1.0, 0.0]) and a == pytest.approx(0.5, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(finite, finite, finite, finite)
def test_midpoint_on_equidistant_line(x1, y1, x0, y0):
    if np.hypot(x1 - x0, y1 - y0) <= 1e-6:
        return
    n, a = nhat_ahat([x1, y1], [x0, y0])
    mid = 0.5 * np.array([x1 + x0, y1 + y0])
    assert abs(np.hypot(*n) - 1.0) < 1e-12
    assert abs(n @ mid - a) <= 1e-12 * (1 + abs(a) + np.abs(mid).sum())


def test_nhat_ahat_degenerate():
    with pytest.raises(DegeneratePair):
        nhat_ahat([0.3, 0.3], [0.3, 0.3])


def test_nhat_ahat_broadcasts():
    x1 = np.array([[1.0, 0.0], [0.0, 2.0]])
    n, a = nhat_ahat(x1, [0.0, 0.0])
    assert n.shape == (2, 2) and np.allclose(a, [0.5, 1.0])


@pytest.mark.parametrize("angle", np.linspace(0, 2 * np.pi, 7))
def test_disc_support_interval(disc, angle):
    assert np.allclose(disc.support_interval(unit(angle)), (-1.0, 1.0), atol=1e-14)


def test_ellipse_support_axis(ellipse):
    assert np.allclose(ellipse.support_interval(np.array([1.0, 0.0])), (-1.0, 1.0))


@pytest.mark.parametrize("alpha", [0.1, 0.7, 1.3, 2.9])
def test_ellipse_support_general(ellipse, alpha):
    c = np.cos(alpha) ** 2 + 0.64 * np.sin(alpha) ** 2
    n = unit(alpha)
    lo, hi = ellipse.support_interval(n)
    assert lo == pytest.approx(-np.sqrt(c), abs=1e-13) and hi == pytest.approx(np.sqrt(c), abs=1e-13)
    s = np.linspace(0, 2 * np.pi, 200001)
    dense = np.stack([np.cos(s), 0.8 * np.sin(s)], -1) @ n
    assert hi == pytest.approx(dense.max(), abs=1e-9)
    assert ellipse.as_parametric().support(n) == pytest.approx(np.sqrt(c), abs=1e-12)


def test_chord_examples(disc, ellipse):
    e1 = np.array([1.0, 0.0])
    assert disc.chord_length(e1, 0.0) == pytest.approx(2.0)
    assert disc.chord_length(e1, 0.6) == pytest.approx(1.6)
    assert ellipse.chord_length(np.array([0.0, 1.0]), 0.0) == pytest.approx(2.0)
    p = disc.as_parametric()
    assert p.chord_length(e1, 0.6) == pytest.approx(1.6, abs=1e-11)


@pytest.mark.parametrize("domain_name", ["disc", "ellipse", "superellipse"])
def test_chord_zero_outside_positive_inside(request, domain_name):
    dom = request.getfixturevalue(domain_name)
    rng = np.random.default_rng(5)
    for ang in rng.uniform(0, 2 * np.pi, 8):
        n = unit(ang)
        lo, hi = dom.support_interval(n)
        outside = np.concatenate([lo - rng.uniform(0, 1, 5), hi + rng.uniform(0, 1, 5), [lo, hi]])
        inside = rng.uniform(lo, hi, 20)
        assert np.all(dom.chord_lengths(n, outside) == 0.0)
        assert np.all(dom.chord_lengths(n, inside) > 0.0)


@pytest.mark.parametrize("domain_name", ["ellipse", "superellipse"])
def test_even_symmetry(request, domain_name):
    dom = request.getfixturevalue(domain_name)
    if domain_name == "ellipse":
        dom = dom.as_parametric()
    rng = np.random.default_rng(11)
    for ang, frac in zip(rng.uniform(0, 2 * np.pi, 200), rng.uniform(0.01, 0.99, 200)):
        n = unit(ang)
        lo, hi = dom.support_interval(n)
        a = lo + frac * (hi - lo)
        assert abs(dom.chord_length(n, a) - dom.chord_length(-n, -a)) <= 1e-10


@pytest.mark.parametrize("alpha", np.linspace(0.05, 3.0, 6))
def test_ellipse_scaling_law_against_root_finding(ellipse, alpha):
    b = 0.8
    c = np.cos(alpha) ** 2 + b * b * np.sin(alpha) ** 2
    n = unit(alpha)
    a = np.linspace(-0.95, 0.95, 9) * np.sqrt(c)
    closed = (b / np.sqrt(c)) * 2 * np.sqrt(1 - a * a / c)
    numeric = ellipse.as_parametric().chord_lengths(n, a)
    assert np.allclose(numeric, closed, rtol=1e-8, atol=0)
    assert np.allclose(ellipse.chord_lengths(n, a), closed, rtol=1e-12, atol=0)


@pytest.mark.parametrize("domain_name", ["disc", "ellipse", "superellipse"])
def test_fubini_area(request, domain_name):
    dom = request.getfixturevalue(domain_name)
    exact = {"disc": np.pi, "ellipse": np.pi * 0.8}.get(domain_name)
    if exact is None:
        # |x|^4 + |y/0.8|^4 < 1: area = 4 * 0.8 * Gamma(1.25)^2 / Gamma(1.5)
        from math import gamma
        exact = 4 * 0.8 * gamma(1.25) ** 2 / gamma(1.5)
    for ang in np.linspace(0, np.pi, 8, endpoint=False):
        n = unit(ang)
        lo, hi = dom.support_interval(n)
        val, _ = quad(lambda a: dom.chord_length(n, a), lo, hi, epsabs=1e-12, epsrel=1e-11,
                      limit=200)
        assert val == pytest.approx(exact, rel=1e-6)
    assert dom.area() == pytest.approx(exact, rel=1e-10)


def test_normals_unit_and_outward(superellipse):
    nodes = superellipse.nodes
    assert np.allclose(np.hypot(*nodes.normals.T), 1.0, atol=1e-12)
    probe = nodes.points + 1e-3 * nodes.normals
    assert not np.any(superellipse.contains(probe))
    assert np.all(superellipse.contains(nodes.points - 1e-3 * nodes.normals))


def test_perimeter_against_richardson(ellipse, superellipse):
    for dom, build in ((ellipse, lambda k: Ellipse((0, 0), (1, 0.8), n_nodes=k)),
                       (superellipse, lambda k: Superellipse((0, 0), (1, 0.8), 4, n_nodes=k))):
        p1, p2 = build(1024).perimeter(), build(2048).perimeter()
        ref = p2 + (p2 - p1) / 3.0
        assert dom.perimeter() == pytest.approx(ref, rel=1e-8)


def test_disc_perimeter_exact(disc):
    assert disc.perimeter() == pytest.approx(2 * np.pi, rel=1e-13)


def test_numeric_derivative_fallback():
    gamma = lambda s: np.stack([np.cos(s), 0.5 * np.sin(s)], -1)
    dom = ParametricConvex(gamma, n_nodes=64)
    ref = Ellipse((0, 0), (1, 0.5), n_nodes=64)
    assert np.allclose(dom.nodes.normals, ref.nodes.normals, atol=1e-8)
    assert dom.perimeter() == pytest.approx(ref.perimeter(), rel=1e-9)


def test_nonconvex_rejected():
    kidney = lambda s: np.stack([(1 + 0.4 * np.cos(3 * s)) * np.cos(s),
                                 (1 + 0.4 * np.cos(3 * s)) * np.sin(s)], -1)
    with pytest.raises(NonConvexBoundary):
        ParametricConvex(kidney)


def test_clockwise_rejected():
    with pytest.raises(NonConvexBoundary):
        ParametricConvex(lambda s: np.stack([np.cos(-s), np.sin(-s)], -1))


def test_invalid_sizes():
    with pytest.raises(ValueError):
        Disc((0, 0), -1.0)
    with pytest.raises(ValueError):
        Ellipse((0, 0), (1.0, 0.0))
    with pytest.raises(ValueError):
        Superellipse((0, 0), (1.0, 1.0), 1.5)


def test_signed_distance(disc, ellipse):
    pts = np.array([[0.0, 0.0], [0.5, 0.0], [2.0, 0.0]])
    assert np.allclose(disc.signed_distance(pts), [-1.0, -0.5, 1.0])
    sd = ellipse.signed_distance(np.array([[0.0, 0.0], [0.0, 0.7]]))
    assert sd[0] == pytest.approx(-0.8, abs=1e-3) and sd[1] == pytest.approx(-0.1, abs=1e-3)


def test_diameter_bbox(superellipse):
    assert superellipse.bounding_box() == pytest.approx((-1.0, 1.0, -0.8, 0.8), abs=1e-9)
    d = superellipse.diameter()
    assert 2.0 < d < 2 * np.hypot(1.0, 0.8)


def test_parse_domain_kinds():
    assert parse_domain("disc 0 0 1").kind == "disc"
    assert parse_domain("# comment\nellipse 0 0 1 0.8\n").kind == "ellipse"
    se = parse_domain("superellipse 0.1 0 1 0.8 4")
    assert se.kind == "superellipse" and se.p == 4.0
    assert parse_domain(se.spec_line()).spec_line() == se.spec_line()


@pytest.mark.parametrize("text,line", [("square 0 0 1", 1), ("\n\ndisc 0 0", 3),
                                       ("disc 0 0 1\ndisc 0 0 2", 2), ("disc a 0 1", 1)])
def test_parse_domain_errors(text, line):
    with pytest.raises(FormatError) as exc:
        parse_domain(text)
    assert exc.value.line == line
    assert str(exc.value).startswith(f"line {line}:")
