import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffquad.errors import InvalidArgument
from diffquad.measures import (PointMeasure, ball_mass, ball_masses, dumps_stable, eta_regular_measure,
                               mesh_norm, min_separation, regularity_constant, total_variation)
from diffquad.spaces import circle_space, equispaced_circle, sphere2_space, torus2_space

C8 = equispaced_circle(8)
U8 = PointMeasure(C8, np.full(8, 1 / 8))


def test_total_variation_examples():
    assert total_variation(PointMeasure([[0.0], [1.0], [2.0]], [0.5, -0.25, 0.25])) == 1.0
    assert total_variation(PointMeasure(np.zeros((0, 1)), [])) == 0.0
    assert total_variation(U8) == 1.0


def test_ball_mass_examples(circle):
    assert ball_mass(U8, [0.3], 0.0, space=circle) == 0.0
    assert ball_mass(U8, C8[3], 2 * math.pi / 8, space=circle) == pytest.approx(3 / 8)
    assert ball_mass(U8, [1.0], circle.diameter, space=circle) == pytest.approx(1.0)


def test_ball_mass_signed(circle):
    nu = PointMeasure([[0.0], [0.1]], [1.0, -0.5], circle)
    assert ball_mass(nu, [0.0], 0.2, signed=True) == pytest.approx(0.5)
    assert ball_mass(nu, [0.0], 0.2) == pytest.approx(1.5)


def test_ball_mass_needs_space():
    with pytest.raises(InvalidArgument):
        ball_mass(U8, [0.0], 1.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=1, max_size=12), st.floats(0, 2 * math.pi))
def test_ball_mass_monotone(weights, x):
    space = circle_space(2)
    nu = PointMeasure(equispaced_circle(len(weights), 0.2), weights, space)
    masses = [ball_mass(nu, [x], r) for r in np.linspace(0, math.pi, 25)]
    assert np.all(np.diff(masses) >= -1e-15)
    assert masses[-1] == pytest.approx(nu.total_variation)


def test_regularity_examples(circle):
    rep = regularity_constant(U8, 2 * math.pi / 8, space=circle)
    assert rep.constant == pytest.approx(3 / (2 * math.pi))
    assert rep.center_set_size >= 8
    point = PointMeasure([[1.0]], [1.0], circle)
    assert regularity_constant(point, 0.01).constant == pytest.approx(100.0)


def test_regularity_report_bounds_per_center(circle):
    rep = regularity_constant(U8, 0.5, extra_centers=[[0.05]], space=circle)
    assert rep.constant >= rep.per_center.max() - 1e-15


@pytest.mark.parametrize("space", [circle_space(32), sphere2_space(16)], ids=["circle", "sphere"])
def test_reference_rule_regular(space):
    rule = space.reference_rule.bind(space)
    vals = [regularity_constant(rule, d, probe_resolution=256).constant for d in (0.1, 0.3, 0.6, 1.0)]
    assert max(vals) < 2.0


def test_regularity_rescaling(circle):
    rng = np.random.default_rng(5)
    fitted = []
    for _ in range(20):
        nu = PointMeasure(circle.random_points(rng, 30), rng.normal(size=30), circle)
        base = regularity_constant(nu, 0.2, probe_resolution=256).constant
        for a in (0.25, 0.5, 2, 4):
            scaled = regularity_constant(nu, a * 0.2, probe_resolution=256).constant
            fitted.append(scaled / ((1 + 1 / a) ** circle.q * base))
    assert max(fitted) <= 2.0


def test_ball_growth_form(circle):
    rng = np.random.default_rng(6)
    nu = PointMeasure(circle.random_points(rng, 40), rng.uniform(size=40), circle)
    d = 0.1
    const = regularity_constant(nu, d, probe_resolution=512).constant
    centers = circle.probe_grid(128)
    for r in (0.01, 0.1, 0.5, 2.0):
        assert np.all(ball_masses(circle, nu, centers, r) <= 2 ** circle.q * const * (r + d) ** circle.q + 1e-12)


def test_mesh_norm_examples(circle):
    assert mesh_norm(circle, C8, 4096) == pytest.approx(math.pi / 8, abs=2e-3)
    assert mesh_norm(circle, [[0.0]], 4096) == pytest.approx(math.pi, abs=2e-3)
    doubled = equispaced_circle(16)
    assert mesh_norm(circle, doubled, 4096) == pytest.approx(math.pi / 16, abs=2e-3)
    with pytest.raises(InvalidArgument):
        mesh_norm(circle, np.zeros((0, 1)))


def test_min_separation_examples(circle):
    assert min_separation(circle, C8) == pytest.approx(2 * math.pi / 8)
    assert min_separation(circle, [[1.0], [1.0], [2.0]]) == 0.0
    with pytest.raises(InvalidArgument):
        min_separation(circle, [[1.0]])


def test_min_separation_bruteforce():
    space = sphere2_space(2)
    pts = space.random_points(np.random.default_rng(3), 100)
    brute = min(float(np.arccos(np.clip(pts[i] @ pts[j], -1, 1)))
                for i in range(100) for j in range(i + 1, 100))
    assert min_separation(space, pts) == pytest.approx(brute, abs=1e-7)


def test_mesh_and_separation_invariants(circle):
    rng = np.random.default_rng(8)
    pts = circle.random_points(rng, 20)
    perm = pts[rng.permutation(20)]
    assert mesh_norm(circle, pts, 512) == mesh_norm(circle, perm, 512)
    assert min_separation(circle, pts) == min_separation(circle, perm)
    more = np.concatenate([pts, circle.random_points(rng, 5)])
    assert mesh_norm(circle, more, 512) <= mesh_norm(circle, pts, 512)
    assert min_separation(circle, more) <= min_separation(circle, pts)


def test_eta_regular_measure(circle):
    nu = eta_regular_measure(circle, C8)
    eta = 2 * math.pi / 8
    np.testing.assert_allclose(nu.weights, eta)
    assert nu.total_variation == pytest.approx(8 * eta)
    for space in (circle, torus2_space(8), sphere2_space(8)):
        pts = space.random_points(np.random.default_rng(4), 40)
        m = eta_regular_measure(space, pts)
        d = min_separation(space, pts)
        assert regularity_constant(m, d, space=space).constant <= 4.0


def test_measure_json_roundtrip():
    nu = PointMeasure([[0.1], [2.0 / 3.0]], [1 / 3, 2 / 3])
    back = PointMeasure.from_json(nu.to_json())
    np.testing.assert_array_equal(back.points, nu.points)
    np.testing.assert_array_equal(back.weights, nu.weights)
    with pytest.raises(InvalidArgument):
        PointMeasure.from_json('{"points": []}')


def test_measure_csv():
    text = PointMeasure([[0.5, 1.0]], [0.25]).to_csv()
    assert text.splitlines()[0] == "index,x0,x1,weight"
    assert text.splitlines()[1] == "0,0.5,1.0,0.25"


def test_dumps_stable_format():
    text = dumps_stable({"b": 0.1, "a": [1, np.float64(2.5)], "c": float("nan"), "d": float("inf")})
    assert text.index('"a"') < text.index('"b"')
    assert "0.10000000000000001" in text
    doc = json.loads(text)
    assert doc["c"] is None and doc["d"] == "inf"


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), max_size=8))
def test_dumps_stable_roundtrip(values):
    assert json.loads(dumps_stable({"v": values}))["v"] == values


def test_length_mismatch():
    with pytest.raises(InvalidArgument):
        PointMeasure([[0.0], [1.0]], [1.0])
