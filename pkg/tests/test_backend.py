import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from diffquad import _backend, _core_py

core = pytest.importorskip("diffquad._core")

finite = st.floats(-10, 10, allow_nan=False)
angles = st.floats(0, np.pi, allow_nan=False)


def coefficients(n):
    return arrays(np.float64, st.integers(1, n), elements=finite)


@settings(max_examples=60, deadline=None)
@given(coefficients(300), arrays(np.float64, st.integers(0, 40), elements=angles))
def test_cos_series_equivalence(a, delta):
    # the compiled rotation recurrence drifts like k * eps; reseeding bounds it
    scale = np.sum(np.abs(a)) + 1.0
    np.testing.assert_allclose(core.cos_series(a, delta), _core_py.cos_series(a, delta), atol=1e-12 * scale)


@settings(max_examples=60, deadline=None)
@given(coefficients(200), arrays(np.float64, st.integers(0, 40), elements=st.floats(-1, 1)))
def test_legendre_series_equivalence(c, t):
    scale = np.sum(np.abs(c) * np.sqrt(2 * np.arange(c.size) + 1)) + 1.0
    np.testing.assert_allclose(core.legendre_series(c, t), _core_py.legendre_series(c, t), atol=1e-12 * scale)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(0, 30), st.integers(0, 2 ** 32 - 1))
def test_cos_series_2d_equivalence(k1, k2, m, seed):
    rng = np.random.default_rng(seed)
    coef = rng.standard_normal((k1, k2))
    d1 = rng.uniform(0, np.pi, m)
    d2 = rng.uniform(0, np.pi, m)
    scale = np.sum(np.abs(coef)) + 1.0
    np.testing.assert_allclose(core.cos_series_2d(coef, d1, d2), _core_py.cos_series_2d(coef, d1, d2),
                               atol=1e-12 * scale)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.integers(1, 60), elements=st.floats(-1e3, 1e3)))
def test_project_simplex_equivalence(v):
    a = core.project_simplex(v)
    b = _core_py.project_simplex(v)
    np.testing.assert_allclose(a, b, atol=1e-12 * (1 + np.abs(v).max()))
    assert np.all(b >= 0)
    # the shift comes from a cumulative sum of v, so rounding scales with the length times ||v||_1
    assert b.sum() == pytest.approx(1.0, abs=4 * np.finfo(float).eps * v.size * (1 + np.abs(v).sum()))


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(-5, 5)))
def test_project_simplex_is_projection(v):
    x = _core_py.project_simplex(v)
    # optimality: (v - x) . (y - x) <= 0 for every vertex y of the simplex
    r = v - x
    assert np.max(r) - r @ x <= 1e-10 * (1 + np.abs(v).max())


def test_project_simplex_fixed_point():
    x = np.array([0.2, 0.3, 0.5])
    np.testing.assert_allclose(_core_py.project_simplex(x), x, atol=1e-15)
    np.testing.assert_allclose(core.project_simplex(x), x, atol=1e-15)


def test_default_backend_is_compiled():
    if os.environ.get("DIFFQUAD_PURE_PYTHON", "") in ("", "0"):
        assert _backend.BACKEND == "cython"


def backend_in_subprocess(value):
    env = dict(os.environ)
    env.pop("DIFFQUAD_PURE_PYTHON", None)
    if value is not None:
        env["DIFFQUAD_PURE_PYTHON"] = value
    code = ("from diffquad import _backend, quadrature, spaces;"
            "s = spaces.circle_space(32);"
            "print(_backend.BACKEND, repr(quadrature.discrepancy(s, quadrature.trapezoid_rule(8), 2.0)))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name, value = out.stdout.split()
    return name, float(value)


def test_pure_python_selection():
    py_name, py_val = backend_in_subprocess("1")
    c_name, c_val = backend_in_subprocess(None)
    assert py_name == "python"
    assert c_name == "cython"
    assert py_val == pytest.approx(c_val, abs=1e-13)
    assert backend_in_subprocess("0")[0] == "cython"
