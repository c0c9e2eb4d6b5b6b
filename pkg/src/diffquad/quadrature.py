"""Exact and approximate quadrature weights, and the checks that certify them.

Exact weights solve the moment system ``sum_j w_j phi_k(x_j) = delta_k0`` for
``lambda_k < n``.  Approximate weights minimize the type-beta discrepancy

    M_2(nu)^2 = sum_{k>=1} b(lambda_k)^2 (sum_j w_j phi_k(x_j))^2 + (sum_j w_j - 1)^2

which on the simplex is the quadratic form ``w^T A w`` with
``A_jl = G*(x_j, x_l)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import optimize

from diffquad import _backend
from diffquad.errors import InvalidArgument, SpectrumExhausted
from diffquad.kernels import DEFAULT_TAIL_TOL, beta_handle, fit_loglog_slope, tail_bound
from diffquad.measures import PointMeasure, ball_masses, regularity_constant
from diffquad.operators import (SpectralFunction, _ref_basis, _norm_of_values, conjugate_exponent,
                                evaluate, parse_p, smoothness_norms_batch, _auto_dyadic_max)
from diffquad.spaces import Space, equispaced_circle

EXACT_TOL = 1e-10
CONSTRAINTS = ("free", "nonnegative", "simplex", "equal")


def trapezoid_rule(n: int, offset: float = 0.0) -> PointMeasure:
    """Equal weights ``1/n`` at ``n`` equispaced circle points."""
    return PointMeasure(equispaced_circle(n, offset), np.full(n, 1.0 / n))


def torus_product_rule(n: int) -> PointMeasure:
    """Tensor product of two ``n``-point trapezoid rules on the 2-torus."""
    circ = equispaced_circle(n)[:, 0]
    a, b = np.meshgrid(circ, circ, indexing="ij")
    return PointMeasure(np.column_stack([a.ravel(), b.ravel()]), np.full(n * n, 1.0 / n ** 2))


def default_beta(space: Space, p: float = 2.0) -> float:
    return space.q / p + 1.5


@dataclass
class QuadratureProblem:
    space: Space
    nodes: np.ndarray
    order: float
    constraint: str = "simplex"
    beta: Optional[float] = None
    max_iterations: int = 100_000
    tolerance: float = 1e-10
    tail_tolerance: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        self.nodes = self.space.as_points(self.nodes)
        if self.nodes.shape[0] < 1:
            raise InvalidArgument("at least one node is required")
        if self.constraint not in CONSTRAINTS:
            raise InvalidArgument(f"constraint must be one of {CONSTRAINTS}")
        if self.beta is None:
            self.beta = default_beta(self.space)


@dataclass
class WeightSolution:
    measure: PointMeasure
    status: str
    residual: float = math.nan
    objective: float = math.nan
    gap: float = math.nan
    iterations: int = 0
    method: str = ""
    history: list = field(default_factory=list, repr=False)

    @property
    def weights(self):
        return self.measure.weights

    def to_dict(self):
        return {"status": self.status, "residual": self.residual, "objective": self.objective,
                "gap": self.gap, "iterations": self.iterations, "method": self.method,
                "total_variation": self.measure.total_variation}


# ---------------------------------------------------------------------------
# exact weights


def moment_system(space: Space, nodes, n: float):
    """``(Phi, rhs)`` with ``Phi[k, j] = phi_k(x_j)`` for ``lambda_k < n``."""
    space.require_complete(n, "moment system")
    idx = space.indices_below(n)
    phi = space.basis(nodes)[:, idx].T
    rhs = np.zeros(idx.shape[0])
    rhs[0] = 1.0
    return phi, rhs


def exact_weights(problem: QuadratureProblem) -> WeightSolution:
    """Least-squares (free) or NNLS (nonnegative) solution of the moment system."""
    phi, rhs = moment_system(problem.space, problem.nodes, problem.order)
    if problem.constraint == "free":
        w = np.linalg.lstsq(phi, rhs, rcond=None)[0]
    elif problem.constraint == "nonnegative":
        w = optimize.nnls(phi, rhs, maxiter=50 * phi.shape[1])[0]
    else:
        raise InvalidArgument("exact weights support the 'free' and 'nonnegative' constraints")
    residual = float(np.max(np.abs(phi @ w - rhs)))
    if residual <= EXACT_TOL:
        status = "exact"
    else:
        status = "infeasible-at-tolerance" if problem.constraint == "nonnegative" else "least-squares"
    return WeightSolution(PointMeasure(problem.nodes, w, problem.space), status, residual=residual,
                          method=problem.constraint)


def moment_residuals(space: Space, nu: PointMeasure, n: float) -> np.ndarray:
    """``sum_j w_j phi_k(x_j) - delta_k0`` for every ``lambda_k < n``."""
    phi, rhs = moment_system(space, nu.points, n)
    return phi @ nu.weights - rhs


# ---------------------------------------------------------------------------
# discrepancy


def gram_star(space: Space, nodes, beta: float, tail_tolerance: float = DEFAULT_TAIL_TOL) -> np.ndarray:
    """``A_jl = G*(x_j, x_l)`` for ``b(t) = (1+t)^-beta``."""
    A = beta_handle(space, beta, tail_tolerance, star=True)(nodes, None)
    return 0.5 * (A + A.T)


def discrepancy(space: Space, nu: PointMeasure, beta: float, p=2, method: str = "auto",
                tail_tolerance: float = DEFAULT_TAIL_TOL) -> float:
    """``M_p(nu)``: the ``p'``-norm of the G-potential of ``nu - mu*``.

    ``method="coefficient"`` (``p = 2`` only) uses the Gram form above with a
    certified G*; ``method="reference"`` evaluates the potential at the
    reference nodes with G truncated to the stored spectrum and integrates it
    with the reference rule, refusing when the truncation bound exceeds
    ``tail_tolerance``.
    """
    p = parse_p(p)
    if beta <= space.q / p:
        raise InvalidArgument(f"beta must exceed q/p = {space.q / p:g}")
    if method == "auto":
        method = "coefficient" if p == 2 else "reference"
    w = nu.weights
    if method == "coefficient":
        if p != 2:
            raise InvalidArgument("the coefficient formula is the p = 2 path")
        A = gram_star(space, nu.points, beta, tail_tolerance)
        val = float(w @ A @ w) + (w.sum() - 1.0) ** 2
        return math.sqrt(max(val, 0.0))
    if method != "reference":
        raise InvalidArgument("method must be 'auto', 'coefficient' or 'reference'")
    tv = nu.total_variation
    if space.analytic:
        top = float(space.eigenvalues[-1])
        if p == 2:
            tail = tv ** 2 * tail_bound(space, lambda lam: (1.0 + lam) ** (-2 * beta), top)
        else:
            tail = tv * tail_bound(space, lambda lam: (1.0 + lam) ** (-beta), top)
        if tail > tail_tolerance:
            raise SpectrumExhausted(
                f"stored spectrum leaves a discrepancy tail of {tail:.3g} > {tail_tolerance:g}")
    b = (1.0 + space.eigenvalues) ** (-beta)
    coef = b * (space.basis(nu.points).T @ w)
    coef[0] -= 1.0
    pot = _ref_basis(space) @ coef
    return float(_norm_of_values(pot[:, None], space.reference_rule.weights, conjugate_exponent(p))[0])


# ---------------------------------------------------------------------------
# minimization


def _project_nonneg(v):
    return np.maximum(v, 0.0)


def _apg(Q, lin, project, x0, gap_fn, tol, max_iter, center=False):
    """Monotone accelerated projected gradient for ``x^T Q x + lin^T x`` with adaptive restarts.

    Iterates are compared through ``f(z) - f(x) = dz^T Q dz + grad f(x)^T dz``,
    which stays accurate after the objective values themselves stop resolving
    the difference.
    """
    x = project(x0)
    fx = float(x @ Q @ x + lin @ x)
    y = x.copy()
    t = 1.0
    history = [fx]
    step = 0.5 / max(float(np.linalg.eigvalsh(Q)[-1]), 1e-300)
    gap = gap_fn(x)
    it = 0
    while it < max_iter and gap > tol:
        it += 1
        z = project(y - step * (2.0 * (Q @ y) + lin))
        dz = z - x
        gx = 2.0 * (Q @ x) + lin
        if center:
            # on the simplex sum(dz) is zero up to rounding; drop that rounding
            gx = gx - gx.mean()
        change = float(dz @ (Q @ dz) + gx @ dz)
        x_prev = x
        if change <= 0:
            x = z
            fx += change
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev)
        # restart momentum when it points uphill
        if change > 0 or np.dot(y - x, 2.0 * (Q @ x) + lin) > 0:
            y = x.copy()
            t_next = 1.0
        t = t_next
        history.append(fx)
        if it % 10 == 0 or gap <= 10 * tol:
            gap = gap_fn(x)
    return x, float(x @ Q @ x + lin @ x), gap_fn(x), it, history


def _frank_wolfe(A, x0, tol, max_iter):
    """Away-step Frank-Wolfe for ``x^T A x`` on the simplex."""
    x = x0.copy()
    history = [float(x @ A @ x)]
    gap = math.inf
    it = 0
    while it < max_iter:
        g = 2.0 * (A @ x)
        s = int(np.argmin(g))
        gap = float(x @ g - g[s])
        if gap <= tol:
            break
        support = np.nonzero(x > 0)[0]
        v = support[int(np.argmax(g[support]))]
        d_fw = -x.copy()
        d_fw[s] += 1.0
        if gap >= float(g[v] - x @ g) or x[v] >= 1.0:
            d, gmax = d_fw, 1.0
        else:
            d = x.copy()
            d[v] -= 1.0
            gmax = x[v] / (1.0 - x[v])
        curv = float(d @ A @ d)
        slope = float(g @ d)
        gamma = gmax if curv <= 0 else min(gmax, max(0.0, -slope / (2.0 * curv)))
        x = x + gamma * d
        x = np.maximum(x, 0.0)
        x /= x.sum()
        history.append(float(x @ A @ x))
        it += 1
    return x, history[-1], gap, it, history


def minimize_discrepancy(problem: QuadratureProblem, init=None, method: str = "auto") -> WeightSolution:
    """Minimize ``M_2^2`` over the problem's weight constraint.

    ``simplex``: ``w >= 0``, ``sum w = 1`` (objective ``w^T A w``);
    ``nonnegative``: ``w >= 0`` (objective ``w^T A w + (sum w - 1)^2``);
    ``equal``: the single feasible point ``w = 1/M``.
    Stops when the Frank-Wolfe duality gap (simplex) or the projected-gradient
    residual (nonnegative) is at most ``tolerance``; otherwise the best iterate
    is returned with status ``suboptimal``.
    """
    space = problem.space
    M = problem.nodes.shape[0]
    A = gram_star(space, problem.nodes, problem.beta, problem.tail_tolerance)
    if problem.constraint == "free":
        raise InvalidArgument("use exact_weights for unconstrained weights")
    if problem.constraint == "equal" or M == 1:
        w = np.full(M, 1.0 / M)
        obj = float(w @ A @ w)
        return WeightSolution(PointMeasure(problem.nodes, w, space), "optimal", objective=obj, gap=0.0,
                              method="closed-form", history=[obj])
    x0 = np.full(M, 1.0 / M) if init is None else np.asarray(init, dtype=float)
    if problem.constraint == "simplex":
        Q = A
        lin = np.zeros(M)
        project = _backend.project_simplex

        def gap_fn(x):
            g = 2.0 * (Q @ x)
            return float(x @ g - g.min())
    else:
        ones = np.ones(M)
        Q = A + np.outer(ones, ones)
        lin = -2.0 * ones
        project = _project_nonneg

        def gap_fn(x):
            g = 2.0 * (Q @ x) - 2.0 * ones
            return float(np.linalg.norm(x - np.maximum(x - g, 0.0)))

    evals = np.linalg.eigvalsh(Q)
    if method == "auto":
        ill = evals[0] <= 0 or evals[-1] / max(evals[0], 1e-300) > 1e12
        method = "frank-wolfe" if ill and problem.constraint == "simplex" else "apg"
    if method == "frank-wolfe":
        if problem.constraint != "simplex":
            raise InvalidArgument("Frank-Wolfe runs on the simplex only")
        x, fx, gap, it, hist = _frank_wolfe(A, project(x0), problem.tolerance, problem.max_iterations)
    elif method == "apg":
        x, fx, gap, it, hist = _apg(Q, lin, project, x0, gap_fn, problem.tolerance, problem.max_iterations,
                                    center=problem.constraint == "simplex")
        if problem.constraint == "nonnegative":
            fx += 1.0
            hist = [h + 1.0 for h in hist]
    else:
        raise InvalidArgument("method must be 'auto', 'apg' or 'frank-wolfe'")
    status = "optimal" if gap <= problem.tolerance else "suboptimal"
    return WeightSolution(PointMeasure(problem.nodes, x, space), status, objective=fx, gap=gap,
                          iterations=it, method=method, history=hist)


# ---------------------------------------------------------------------------
# worst-case error and the approximate-quadrature class


def poly_quad_error(space: Space, nu: PointMeasure, P: SpectralFunction) -> float:
    """``|int P dmu* - int P dnu|`` from the coefficients of ``P``."""
    return abs(P.coefficients.get(0, 0.0) - float(nu.weights @ evaluate(space, P, nu.points)))


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream for one trial, independent of how trials are scheduled."""
    return np.random.Generator(np.random.Philox(key=[int(seed) & (2 ** 64 - 1), int(trial)]))


@dataclass
class WCEResult:
    value: float
    n: float
    gamma: float
    p: float
    trials: int
    degree: float
    samples: np.ndarray = field(repr=False)
    empty: bool = False
    note: str = "randomized lower estimate of the worst case"


def worst_case_error(space: Space, nu: PointMeasure, gamma: float, p, n: float, trials: int,
                     seed: int, degree_factor: float = 4.0) -> WCEResult:
    """Largest quadrature error over random diffusion polynomials of unit smoothness norm.

    Test polynomials live in ``Pi_{degree_factor * n}`` with standard normal
    coefficients, rescaled so ``||P||_{H_gamma^p} = 1``.  With
    ``degree_factor = 1`` this probes the approximate-quadrature condition on
    ``Pi_n`` itself; larger factors probe functions beyond the exactness
    range, where the ``n^-gamma`` decay of the error is visible.
    """
    p = parse_p(p)
    if gamma <= space.q / p:
        raise InvalidArgument(f"gamma must exceed q/p = {space.q / p:g}")
    degree = degree_factor * n
    if trials <= 0:
        return WCEResult(0.0, n, gamma, p, 0, degree, np.zeros(0), empty=True,
                         note="no trials: empty sample")
    space.require_complete(degree, "worst-case sampling")
    idx = space.indices_below(degree)
    K = space.dimension_count
    coef = np.zeros((K, trials))
    for t in range(trials):
        coef[idx, t] = trial_rng(seed, t).standard_normal(idx.shape[0])
    indicator = np.zeros(K)
    indicator[idx] = 1.0
    dyadic_max = _auto_dyadic_max(space, indicator)
    norms = smoothness_norms_batch(space, None, coef, gamma, p, dyadic_max)[0]
    node_vals = space.basis(nu.points)[:, idx] @ coef[idx]
    errors = np.abs(coef[0] - nu.weights @ node_vals) / norms
    return WCEResult(float(errors.max()), n, gamma, p, trials, degree, errors)


@dataclass
class QuadReport:
    """Verification record for a sequence of measures indexed by order ``n``."""

    orders: list
    gamma: float
    p: float
    total_variation: list
    regularity_constant: list
    wce: list
    A_values: list
    exactness_residuals: list
    fitted_decay: float
    sup_total_variation: float
    sup_regularity: float
    A: float
    growth: dict
    conditions: dict
    verdict: bool
    discrepancy: Optional[list] = None
    covering: Optional[dict] = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def verify_approx_class(space: Space, measures: Mapping[float, PointMeasure], gamma: float, p,
                        trials: int = 200, seed: int = 0, degree_factor: float = 4.0,
                        growth_tol: float = 0.5, beta: Optional[float] = None,
                        probe_resolution: Optional[int] = None) -> QuadReport:
    """Check bounded variation, uniform ``1/n``-regularity and the ``A n^-gamma`` error bound.

    Each condition is a supremum over the sequence; on a finite ladder it is
    judged bounded when its fitted log-log growth rate against ``n`` is at most
    ``growth_tol``.
    """
    p = parse_p(p)
    orders = sorted(float(n) for n in measures)
    if not orders:
        raise InvalidArgument("empty measure sequence")
    tv, reg, wce, A_vals, resid, disc = [], [], [], [], [], []
    for n in orders:
        nu = measures[n] if n in measures else measures[int(n)]
        tv.append(nu.total_variation)
        reg.append(regularity_constant(nu, 1.0 / n, space=space,
                                       probe_resolution=probe_resolution).constant)
        res = worst_case_error(space, nu, gamma, p, n, trials, seed, degree_factor)
        wce.append(res.value)
        A_vals.append(n ** gamma * res.value)
        if n <= space.complete_below:
            resid.append(float(np.max(np.abs(moment_residuals(space, nu, n)))))
        else:
            resid.append(math.nan)
        if beta is not None:
            disc.append(discrepancy(space, nu, beta, 2))
    ns = np.array(orders)
    growth = {"total_variation": _growth(ns, tv), "regularity": _growth(ns, reg), "A": _growth(ns, A_vals)}
    conditions = {
        "bounded_variation": bool(np.all(np.isfinite(tv)) and growth["total_variation"] <= growth_tol),
        "uniform_regularity": bool(np.all(np.isfinite(reg)) and growth["regularity"] <= growth_tol),
        "error_bound": bool(np.all(np.isfinite(A_vals)) and growth["A"] <= growth_tol),
    }
    notes = [f"sequence bounded when fitted growth exponent <= {growth_tol:g}",
             "worst-case errors are randomized lower estimates"]
    return QuadReport(orders=orders, gamma=float(gamma), p=p, total_variation=tv, regularity_constant=reg,
                      wce=wce, A_values=A_vals, exactness_residuals=resid,
                      fitted_decay=fit_loglog_slope(ns, wce), sup_total_variation=max(tv),
                      sup_regularity=max(reg), A=max(A_vals), growth=growth, conditions=conditions,
                      verdict=all(conditions.values()), discrepancy=disc or None, notes=notes)


def _growth(ns, vals) -> float:
    vals = np.asarray(vals, dtype=float)
    if len(ns) < 2:
        return 0.0
    if np.all(vals <= 0):
        return 0.0
    if np.any(vals <= 0):
        return math.inf
    return float(np.polyfit(np.log(ns), np.log(vals), 1)[0])


# ---------------------------------------------------------------------------
# covering, products, positivity


def p_tilde(q: float, gamma: float, p) -> float:
    """``1 + q / (gamma p')``."""
    pc = conjugate_exponent(parse_p(p))
    return 1.0 + (0.0 if pc == math.inf else q / (gamma * pc))


@dataclass
class CoveringReport:
    p_tilde: float
    ladder: list
    floor: float
    table: dict  # C1 -> list of min-ball-mass * n^{q/p~} per order
    C1: Optional[float]
    passed: bool
    orders: list
    probe_resolution: int

    def to_dict(self):
        return asdict(self)


def covering_check(space: Space, measures: Mapping[float, PointMeasure], gamma: float, p,
                   ladder: Sequence[float] = (1, 2, 4, 8), floor: float = 0.5,
                   probe_resolution: Optional[int] = None) -> CoveringReport:
    """Smallest ``C1`` with ``min_x |nu_n|(B(x, C1 / n^{1/p~})) n^{q/p~} >= floor`` for all ``n``."""
    if gamma <= 0:
        raise InvalidArgument("gamma must be positive")
    pt = p_tilde(space.q, gamma, p)
    orders = sorted(float(n) for n in measures)
    table = {}
    best = None
    for C1 in ladder:
        row = []
        for n in orders:
            nu = measures[n] if n in measures else measures[int(n)]
            res = probe_resolution or max(4 * space.dimension_count, 16 * len(nu))
            centers = space.probe_grid(res)
            mass = ball_masses(space, nu, centers, C1 / n ** (1.0 / pt))
            row.append(float(mass.min() * n ** (space.q / pt)))
        table[float(C1)] = row
        if best is None and min(row) >= floor:
            best = float(C1)
    res = probe_resolution or 0
    return CoveringReport(pt, [float(c) for c in ladder], floor, table, best, best is not None, orders, res)


def product_defect(space: Space, A: float, N: float) -> float:
    """``max_{lambda_j, lambda_k < N} ||phi_j phi_k - S_{AN}(phi_j phi_k)||_inf``.

    ``S_{AN}`` is the orthogonal projection onto ``Pi_{AN}``; the sup norm is
    taken over the reference nodes.
    """
    if A < 1:
        raise InvalidArgument("A must be >= 1")
    space.require_complete(A * N, "product defect")
    rule = space.reference_rule
    B = _ref_basis(space)
    low = space.indices_below(N)
    target = space.indices_below(A * N)
    V = B[:, low]
    Bt = B[:, target]
    w = rule.weights
    worst = 0.0
    for j in range(low.shape[0]):
        prods = V[:, j:j + 1] * V[:, j:]
        coef = Bt.T @ (w[:, None] * prods)
        worst = max(worst, float(np.max(np.abs(prods - Bt @ coef))))
    return worst


@dataclass
class PositivityReport:
    n: float
    p: float
    exponent: float
    max_ratio: float
    bound: float
    flagged: bool
    regularity_constant: Optional[float]
    total_variation: float

    def to_dict(self):
        return asdict(self)


def positivity_regularity_check(space: Space, nu: PointMeasure, n: float, p, bound: float = 4.0,
                                probe_resolution: Optional[int] = None) -> PositivityReport:
    """``max_x nu(B(x, 1/n)) n^{q/p}`` for a nonnegative measure, flagged above ``bound``."""
    p = parse_p(p)
    if np.any(nu.weights < 0):
        raise InvalidArgument("positivity check needs nonnegative weights")
    exponent = 0.0 if p == math.inf else space.q / p
    res = probe_resolution or max(4 * space.dimension_count, 16 * len(nu))
    centers = np.concatenate([nu.points, space.probe_grid(res)])
    ratio = float(ball_masses(space, nu, centers, 1.0 / n).max() * n ** exponent)
    reg = None
    if p == 1:
        reg = regularity_constant(nu, 1.0 / n, space=space, probe_resolution=res).constant
    return PositivityReport(float(n), p, exponent, ratio, bound, ratio > bound, reg, nu.total_variation)
