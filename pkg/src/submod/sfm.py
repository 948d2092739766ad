"""Submodular function minimization through the Lovász extension.

The default engine is projected subgradient descent on the Lovász extension
over the unit cube, rounding every iterate by scanning all ``n+1`` chain
prefixes. A Fujishige-Wolfe minimum-norm-point engine is also available; it
certifies minima of functions that are not integer valued, which the
matroid tight-set machinery needs.

Both engines maintain a certified lower bound: every greedy marginal
vector ``g`` lies in the base polytope of ``f - f(empty)``, so for any
convex combination ``h`` of them, ``f(S) >= f(empty) + sum(min(h_i, 0))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import ContractError, InputError
from .extensions import lovasz_terms
from .setfn import TOL, GroundSet, SetFunctionOracle, bits_matrix

METHODS = ("subgradient", "minnorm")


@dataclass
class SolveParams:
    max_iterations: int = 50000
    step_rule: str = "diminishing"
    tolerance: float = 1e-6
    seed: int = 0
    trace_level: int = 0
    method: str = "subgradient"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InputError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise InputError("tolerance must be positive")
        if self.step_rule not in ("diminishing", "constant"):
            raise InputError(f"unknown step rule {self.step_rule!r}")
        if self.method not in METHODS:
            raise InputError(f"unknown method {self.method!r}")


@dataclass
class SfmReport:
    minimizer: frozenset
    value: float
    x_final: np.ndarray
    iterations: int
    oracle_queries: int
    best_prefix_trace: list = field(default_factory=list)
    certified: bool = False
    lower_bound: float = -math.inf


def _certified(best: float, lower: float, integral: bool, tol: float) -> bool:
    if best - lower <= tol:
        return True
    # integer-valued f: the minimum is an integer no smaller than the bound
    return integral and best <= math.ceil(lower - TOL) + TOL


class _Tracker:
    def __init__(self):
        self.best = math.inf
        self.mask = 0
        self.trace = []

    def offer(self, prefixes, values, iteration):
        i = int(np.argmin(values))
        if values[i] < self.best:
            self.best = float(values[i])
            self.mask = int(prefixes[i])
            self.trace.append((iteration, self.best))


def _subgradient(oracle: SetFunctionOracle, params: SolveParams):
    n = oracle.n
    x = np.full(n, 0.5)
    radius = math.sqrt(n)
    g_max = 0.0
    g_sum = np.zeros(n)
    w_sum = 0.0
    lower = -math.inf
    track = _Tracker()
    g = np.empty(n)
    certified = False
    it = 0
    for it in range(1, params.max_iterations + 1):
        order, prefixes, values, _ = lovasz_terms(oracle, x)
        track.offer(prefixes, values, it)
        g[order] = np.diff(values)
        base = values[0]
        lower = max(lower, base + np.minimum(g, 0).sum())
        norm = float(np.linalg.norm(g))
        if norm == 0:
            certified = True
            lower = max(lower, base)
            break
        g_max = max(g_max, norm)
        t = it if params.step_rule == "diminishing" else params.max_iterations
        eta = radius / (g_max * math.sqrt(t))
        g_sum += eta * g
        w_sum += eta
        lower = max(lower, base + np.minimum(g_sum / w_sum, 0).sum())
        if _certified(track.best, lower, oracle.integral, params.tolerance):
            certified = True
            break
        if it < params.max_iterations:
            x = np.clip(x - eta * g, 0.0, 1.0)
    return track, x, it, certified, lower


def _affine_minimizer(points: np.ndarray):
    """Weights ``a`` (summing to 1) minimizing ``|a @ points|`` over the affine hull."""
    k = points.shape[0]
    gram = points @ points.T
    system = np.zeros((k + 1, k + 1))
    system[:k, :k] = gram
    system[:k, k] = 1.0
    system[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(system, rhs, rcond=None)[0]
    return sol[:k]


def _minnorm(oracle: SetFunctionOracle, params: SolveParams):
    """Fujishige-Wolfe minimum-norm point in the base polytope of ``f - f(empty)``."""
    n = oracle.n
    track = _Tracker()

    def vertex(w, it):
        order = np.argsort(w, kind="stable")
        values = oracle.chain_values(order)
        prefixes = np.zeros(n + 1, dtype=np.int64)
        prefixes[1:] = np.cumsum(np.left_shift(np.int64(1), order.astype(np.int64)))
        track.offer(prefixes, values, it)
        q = np.empty(n)
        q[order] = np.diff(values)
        return q, float(values[0])

    q, base = vertex(np.zeros(n), 0)
    points = q[None, :]
    lam = np.ones(1)
    x = q.copy()
    lower = base + np.minimum(x, 0).sum()
    certified = False
    it = 0
    for it in range(1, params.max_iterations + 1):
        q, _ = vertex(x, it)
        lower = max(lower, base + np.minimum(x, 0).sum())
        if _certified(track.best, lower, oracle.integral, params.tolerance):
            certified = True
            break
        scale = max(1.0, float(np.max(np.abs(points))) ** 2)
        if x @ x - x @ q <= 1e-12 * scale:
            # Wolfe optimality: x is the minimum-norm point up to rounding
            certified = track.best - lower <= max(params.tolerance, 1e-9 * scale)
            break
        if np.any(np.all(np.isclose(points, q[None, :], rtol=0, atol=1e-13), axis=1)):
            break
        points = np.vstack([points, q])
        lam = np.append(lam, 0.0)
        for _ in range(n + 2):
            alpha = _affine_minimizer(points)
            if np.all(alpha > 1e-12):
                lam = alpha
                break
            neg = alpha <= 1e-12
            denom = lam[neg] - alpha[neg]
            ok = denom > 0
            theta = float(np.min(lam[neg][ok] / denom[ok])) if np.any(ok) else 0.0
            theta = min(max(theta, 0.0), 1.0)
            lam = theta * alpha + (1 - theta) * lam
            keep = lam > 1e-12
            points, lam = points[keep], lam[keep] / lam[keep].sum()
        x = lam @ points
    return track, x, it, certified, lower


def minimize(oracle: SetFunctionOracle, params: SolveParams | None = None) -> SfmReport:
    """Minimize a submodular ``oracle`` over all subsets.

    With the subgradient engine, runs projected subgradient descent on the
    Lovász extension from ``x0 = 1/2``, step ``sqrt(n) / (G sqrt(t))`` with
    ``G`` the largest subgradient norm seen, clipping to the cube, and
    returns the best chain prefix seen over all iterates. Stops early once
    the best value is certified against the dual lower bound; otherwise
    runs ``max_iterations`` and reports ``certified=False``.
    """
    params = params or SolveParams()
    q0 = oracle.queries
    run = _minnorm if params.method == "minnorm" else _subgradient
    track, x, iterations, certified, lower = run(oracle, params)
    value = oracle.evaluate_mask(track.mask)
    x_final = np.clip(x, 0.0, 1.0) if params.method == "subgradient" else (x < 0).astype(float)
    return SfmReport(
        minimizer=oracle.ground.labels_of(track.mask),
        value=value,
        x_final=x_final,
        iterations=iterations,
        oracle_queries=oracle.queries - q0,
        best_prefix_trace=track.trace,
        certified=certified,
        lower_bound=float(lower),
    )


class ContractedOracle(SetFunctionOracle):
    """``g(S) = f(S | include)`` on the elements outside ``include | exclude``."""

    def __init__(self, parent: SetFunctionOracle, include: int, exclude: int):
        pg = parent.ground
        free = [i for i in range(pg.n) if not (include | exclude) >> i & 1]
        super().__init__(
            GroundSet(pg.labels[i] for i in free),
            properties=parent.properties & {"submodular"},
            integral=parent.integral,
        )
        self.parent = parent
        self.include = include
        self._lift = np.left_shift(np.int64(1), np.asarray(free, dtype=np.int64))

    def lift(self, mask: int) -> int:
        return self.include | int(bits_matrix([mask], self.n)[0] @ self._lift)

    def _value(self, mask):
        return self.parent.evaluate_mask(self.lift(mask))

    def _values(self, masks):
        lifted = (bits_matrix(masks, self.n).astype(np.int64) @ self._lift) | self.include
        return self.parent.evaluate_many(lifted)


def minimize_with_constraints(
    oracle: SetFunctionOracle, include=(), exclude=(), params: SolveParams | None = None
) -> SfmReport:
    """Minimize over sets containing ``include`` and disjoint from ``exclude``.

    Solved as unconstrained minimization of ``S -> f(S | include)`` on the
    remaining elements; the returned minimizer already contains ``include``.
    """
    params = params or SolveParams()
    g = oracle.ground
    inc, exc = g.mask(include), g.mask(exclude)
    if inc & exc:
        raise InputError("include and exclude overlap")
    q0 = oracle.queries
    if (inc | exc) == g.full:
        value = oracle.evaluate_mask(inc)
        x = np.array([1.0 if inc >> i & 1 else 0.0 for i in range(g.n)])
        return SfmReport(g.labels_of(inc), value, x, 0, oracle.queries - q0, [(0, value)], True, value)
    sub = ContractedOracle(oracle, inc, exc)
    rep = minimize(sub, params)
    mask = sub.lift(sub.ground.mask(rep.minimizer))
    x = np.array([1.0 if inc >> i & 1 else 0.0 for i in range(g.n)])
    for label, xi in zip(sub.ground.labels, rep.x_final):
        x[g.index[label]] = xi
    return SfmReport(
        minimizer=g.labels_of(mask),
        value=oracle.evaluate_mask(mask),
        x_final=x,
        iterations=rep.iterations,
        oracle_queries=oracle.queries - q0,
        best_prefix_trace=rep.best_prefix_trace,
        certified=rep.certified,
        lower_bound=rep.lower_bound,
    )


def _capped_shift(rest: np.ndarray, budget: float) -> float:
    """Smallest ``theta >= 0`` with ``sum(clip(rest - theta, 0, 1)) <= budget``.

    ``theta -> sum(clip(rest - theta, 0, 1))`` is piecewise linear and
    nonincreasing with breakpoints at ``rest`` and ``rest - 1``, so the root
    is found exactly by interpolating inside the bracketing segment.
    """
    knots = np.unique(np.concatenate([rest, rest - 1.0, [0.0]]))
    knots = knots[knots >= 0]
    h = np.clip(rest[None, :] - knots[:, None], 0.0, 1.0).sum(axis=1)
    j = int(np.argmax(h <= budget))
    if j == 0:
        return float(knots[0])
    t0, t1, h0, h1 = knots[j - 1], knots[j], h[j - 1], h[j]
    return float(t0 + (h0 - budget) * (t1 - t0) / (h0 - h1))


def project_budget_box(y, pinned: int, k: int) -> np.ndarray:
    """Euclidean projection onto ``{x in [0,1]^n : x[pinned] = 1, sum(x) <= k}``.

    The pinned coordinate is set to 1; the others are projected onto the
    capped simplex ``{z in [0,1]^(n-1) : sum(z) <= k-1}`` as
    ``clip(z - theta, 0, 1)`` with the smallest feasible shift ``theta >= 0``.
    """
    y = np.asarray(y, dtype=float)
    rest = np.delete(y, pinned)
    budget = k - 1
    z = np.clip(rest, 0.0, 1.0)
    if z.sum() > budget:
        z = np.clip(rest - _capped_shift(rest, budget), 0.0, 1.0)
        # interpolation rounding can overshoot the budget by an ulp or two
        excess = z.sum() - budget
        if excess > 0:
            z = np.clip(z - excess / max(np.count_nonzero(z), 1), 0.0, 1.0)
    return np.insert(z, pinned, 1.0)


def _min_linear_budget(w: np.ndarray, pinned: int, k: int) -> float:
    """``min w @ y`` over the budgeted box with ``y[pinned] = 1``."""
    rest = np.sort(np.delete(w, pinned))[: k - 1]
    return float(w[pinned] + np.minimum(rest, 0).sum())


def _budget_certified(value: float, lower: float, integral: bool, tol: float) -> bool:
    # an integer-valued f has integer optimum >= ceil(lower) among feasible sets,
    # which is the only comparison the cardinality algorithm relies on
    if integral:
        lower = max(lower, math.ceil(lower - TOL))
    return value - lower <= tol


@dataclass
class BudgetSolution:
    x: np.ndarray
    value: float
    lower_bound: float
    iterations: int
    certified: bool


BUDGET_ENGINES = ("subgradient", "cutting_plane")


def minimize_lovasz_over_budget(
    oracle: SetFunctionOracle, pinned, k: int, params: SolveParams | None = None, *, engine: str = "subgradient"
) -> BudgetSolution:
    """Minimize the Lovász extension over ``{x in [0,1]^X : x(pinned) = 1, sum(x) <= k}``.

    ``engine="subgradient"`` runs projected subgradient descent and returns
    whichever of the step-weighted average iterate and the best iterate has
    the smaller Lovász value. ``engine="cutting_plane"`` runs Kelley's
    method: the extension is the pointwise maximum of the affine functions
    given by greedy marginal vectors, so an LP over the collected cuts gives
    both the next iterate and an exact lower bound. Both stop once the best
    value is within ``params.tolerance`` of the lower bound.
    """
    params = params or SolveParams()
    n = oracle.n
    pin = oracle.ground.position(pinned) if isinstance(pinned, str) else int(pinned)
    if not 1 <= k < n:
        raise InputError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    if engine not in BUDGET_ENGINES:
        raise InputError(f"unknown budget engine {engine!r}")
    if engine == "cutting_plane":
        return _budget_cutting_plane(oracle, pin, k, params)
    x = project_budget_box(np.full(n, 0.5), pin, k)
    radius = math.sqrt(n)
    g_max, w_sum = 0.0, 0.0
    g_sum, x_sum = np.zeros(n), np.zeros(n)
    g = np.empty(n)
    best_val, best_x = math.inf, x
    lower = -math.inf
    certified = False
    it = 0
    for it in range(1, params.max_iterations + 1):
        order, _, values, lam = lovasz_terms(oracle, x)
        val = float(lam @ values)
        if val < best_val:
            best_val, best_x = val, x
        g[order] = np.diff(values)
        base = values[0]
        lower = max(lower, base + _min_linear_budget(g, pin, k))
        norm = float(np.linalg.norm(g))
        if norm == 0:
            certified = True
            break
        g_max = max(g_max, norm)
        t = it if params.step_rule == "diminishing" else params.max_iterations
        eta = radius / (g_max * math.sqrt(t))
        g_sum += eta * g
        x_sum += eta * x
        w_sum += eta
        lower = max(lower, base + _min_linear_budget(g_sum / w_sum, pin, k))
        if _budget_certified(best_val, lower, oracle.integral, params.tolerance):
            certified = True
            break
        x = project_budget_box(x - eta * g, pin, k)
    if w_sum > 0:
        avg = project_budget_box(x_sum / w_sum, pin, k)
        order, _, values, lam = lovasz_terms(oracle, avg)
        avg_val = float(lam @ values)
        if avg_val < best_val:
            best_val, best_x = avg_val, avg
    certified = certified or _budget_certified(best_val, lower, oracle.integral, params.tolerance)
    return BudgetSolution(best_x, best_val, float(lower), it, certified)


def _budget_cutting_plane(oracle: SetFunctionOracle, pin: int, k: int, params: SolveParams) -> BudgetSolution:
    n = oracle.n
    x = np.zeros(n)
    x[pin] = 1.0
    cost = np.zeros(n + 1)
    cost[-1] = 1.0
    bounds = [(0.0, 1.0)] * n + [(None, None)]
    bounds[pin] = (1.0, 1.0)
    rows = [np.append(np.ones(n), 0.0)]
    rhs = [float(k)]
    g = np.empty(n)
    best_val, best_x = math.inf, x
    lower = -math.inf
    certified = False
    it = 0
    for it in range(1, params.max_iterations + 1):
        order, _, values, lam = lovasz_terms(oracle, x)
        val = float(lam @ values)
        if val < best_val:
            best_val, best_x = val, x
        g[order] = np.diff(values)
        # cut: t >= f(empty) + g @ x
        rows.append(np.append(g, -1.0))
        rhs.append(-float(values[0]))
        res = linprog(cost, A_ub=np.vstack(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
        if res.status != 0:
            raise ContractError(f"cutting-plane LP failed: {res.message}")
        lower = max(lower, float(res.fun))
        if _budget_certified(best_val, lower, oracle.integral, params.tolerance):
            certified = True
            break
        x = project_budget_box(res.x[:n], pin, k)
    return BudgetSolution(best_x, best_val, float(lower), it, certified)
