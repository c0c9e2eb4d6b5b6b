"""Pick the compiled series kernels when available, else the numpy fallback."""

import os

if os.environ.get("DIFFQUAD_PURE_PYTHON", "") not in ("", "0"):
    from diffquad._core_py import cos_series, cos_series_2d, legendre_series, project_simplex

    BACKEND = "python"
else:
    try:
        from diffquad._core import cos_series, cos_series_2d, legendre_series, project_simplex

        BACKEND = "cython"
    except ImportError:  # extension not built
        from diffquad._core_py import cos_series, cos_series_2d, legendre_series, project_simplex

        BACKEND = "python"

__all__ = ["BACKEND", "cos_series", "cos_series_2d", "legendre_series", "project_simplex"]
