"""Monotone submodular maximization over a matroid.

Discretized continuous greedy on the multilinear extension produces a
fractional point in the matroid polytope; pipage rounding then moves it to
an independent set without losing multilinear value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, InputError
from .extensions import EXACT_LIMIT, MultilinearTable, as_point, multilinear_eval_sampled, sampled_gradient
from .matroids import (
    TIGHT_TOL,
    Matroid,
    Solver,
    exact_solver,
    in_polytope,
    max_weight_independent_mask,
    min_slack,
    minimal_tight_set,
)
from .setfn import SetFunctionOracle

INTEGRAL_TOL = 1e-9
DEFAULT_SAMPLES = 2000


@dataclass(frozen=True)
class GreedyStep:
    t: float
    direction: frozenset
    x: np.ndarray
    value: float


@dataclass
class GreedyTrajectory:
    steps: list
    step_count: int
    gradient_mode: str


@dataclass(frozen=True)
class Trade:
    pair: tuple
    tight_set: frozenset
    epsilon: float
    interval: tuple
    value_before: float
    value_after: float


@dataclass(frozen=True)
class Saturation:
    element: str
    delta: float
    value_before: float
    value_after: float


@dataclass
class RoundingTrace:
    events: list = field(default_factory=list)
    certified: bool = True

    @property
    def trades(self):
        return [e for e in self.events if isinstance(e, Trade)]


@dataclass
class SolveReport:
    solution: frozenset
    value: float
    fractional_value: float
    x: np.ndarray
    trajectory: GreedyTrajectory
    rounding: RoundingTrace
    oracle_queries: int
    certified: bool


class _Objective:
    """``F`` evaluated exactly from a table, or sampled with a fixed seed.

    The sampled variant reuses one seed for every call, so comparisons
    between nearby points use common random numbers.
    """

    def __init__(self, oracle: SetFunctionOracle, mode: str, samples: int, seed: int):
        if mode == "auto":
            mode = "exact" if oracle.n <= EXACT_LIMIT else "sampled"
        if mode not in ("exact", "sampled"):
            raise InputError(f"unknown evaluation mode {mode!r}")
        self.mode = mode
        self.oracle = oracle
        self.samples = samples
        self.seed = seed
        self.table = MultilinearTable(oracle) if mode == "exact" else None

    def value(self, x) -> float:
        if self.table is not None:
            return self.table.value(x)
        return multilinear_eval_sampled(self.oracle, x, self.samples, self.seed)[0]

    def gradient(self, x, step: int) -> np.ndarray:
        if self.table is not None:
            return self.table.gradient(x)
        return sampled_gradient(self.oracle, np.asarray(x, dtype=float), self.samples, self.seed, stream=step + 1)


def _require_monotone(oracle: SetFunctionOracle):
    if not oracle.declares("monotone"):
        raise InputError("maximization needs an oracle declared monotone")


def continuous_greedy(
    oracle: SetFunctionOracle,
    m: Matroid,
    steps: int | None = None,
    *,
    mode: str = "auto",
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    objective: _Objective | None = None,
):
    """Run ``steps`` rounds of ``x += 1_z / steps`` with ``z`` the best independent set for ``grad F(x)``.

    Returns ``(x, trajectory)``. ``x`` is stored as integer counts divided
    by ``steps``, so coordinates are exact multiples of ``1/steps``.
    """
    _require_monotone(oracle)
    if m.ground != oracle.ground:
        raise InputError("matroid and oracle must share the ground set")
    steps = oracle.n**2 if steps is None else steps
    if steps < 1:
        raise InputError("step count must be >= 1")
    obj = objective or _Objective(oracle, mode, samples, seed)
    counts = np.zeros(oracle.n, dtype=np.int64)
    record = []
    for t in range(steps):
        x = counts / steps
        z = max_weight_independent_mask(m, obj.gradient(x, t))
        for i in range(oracle.n):
            if z >> i & 1:
                counts[i] += 1
        x = counts / steps
        record.append(GreedyStep((t + 1) / steps, m.ground.labels_of(z), x, obj.value(x)))
    return counts / steps, GreedyTrajectory(record, steps, obj.mode)


def _snap(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    x[x < INTEGRAL_TOL] = 0.0
    x[x > 1 - INTEGRAL_TOL] = 1.0
    return x


def _fractional(x: np.ndarray) -> list[int]:
    return [i for i in range(len(x)) if 0.0 < x[i] < 1.0]


def pipage_round(
    oracle: SetFunctionOracle,
    m: Matroid,
    x,
    *,
    mode: str = "auto",
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    solver: Solver = exact_solver,
    max_trades: int | None = None,
    objective: _Objective | None = None,
):
    """Round ``x`` in the matroid polytope to an independent set without lowering ``F``.

    Fractional coordinates in no tight set are first raised as far as the
    polytope allows (safe because ``F`` is monotone). Each trade then moves
    along ``e_i - e_j`` inside a smallest minimal tight set and keeps the
    better endpoint of the feasible segment; ``F`` is convex along that
    direction, so one endpoint is at least as good as the start.

    Returns ``(subset, trace)``.
    """
    g = m.ground
    x = _snap(as_point(g, x).astype(float))
    cert = in_polytope(m, x, solver)
    if cert.min_slack < -TIGHT_TOL:
        raise InputError(f"point is outside the matroid polytope (slack {cert.min_slack:.3g})")
    obj = objective or _Objective(oracle, mode, samples, seed)
    n = g.n
    max_trades = 2 * n * n + 2 * n if max_trades is None else max_trades
    trace = RoundingTrace()
    value = obj.value(x)
    trades = 0
    while True:
        frac = _fractional(x)
        if not frac:
            break
        if trades >= max_trades:
            trace.certified = False
            break
        tight = {}
        for i in frac:
            t_set = minimal_tight_set(m, x, g.labels[i], solver, check=False)
            if t_set is None:
                delta = min(1.0 - x[i], max(0.0, min_slack(m, x, [g.labels[i]], solver=solver).value))
                before = value
                x[i] += delta
                x = _snap(x)
                value = obj.value(x)
                trace.events.append(Saturation(g.labels[i], float(delta), before, value))
                break
            tight[i] = t_set
        else:
            anchor = min(frac, key=lambda i: (len(tight[i]), sorted(g.position(v) for v in tight[i])))
            t_set = tight[anchor]
            pair = [i for i in sorted(g.position(v) for v in t_set) if 0.0 < x[i] < 1.0][:2]
            if len(pair) < 2:
                raise ContractError("tight set holds a single fractional coordinate")
            i, j = pair
            li, lj = g.labels[i], g.labels[j]
            up = min(1.0 - x[i], x[j], max(0.0, min_slack(m, x, [li], [lj], solver).value))
            down = min(x[i], 1.0 - x[j], max(0.0, min_slack(m, x, [lj], [li], solver).value))
            if up <= 0.0 and down <= 0.0:
                raise ContractError(f"no room to trade {li} against {lj}")
            candidates = []
            for eps in (up, -down):
                y = x.copy()
                y[i] += eps
                y[j] -= eps
                y = _snap(y)
                candidates.append((obj.value(y), eps, y))
            best = max(candidates, key=lambda c: c[0])
            trace.events.append(Trade((li, lj), t_set, float(best[1]), (float(-down), float(up)), value, best[0]))
            value, x = best[0], best[2]
            trades += 1
        if len(trace.events) > 4 * max_trades:
            trace.certified = False
            break
    mask = sum(1 << i for i in range(n) if x[i] >= 1.0)
    if not m.independent_mask(mask):
        raise ContractError(f"rounded set {g.ordered(mask)} is not independent")
    return g.labels_of(mask), trace


def maximize_matroid(
    oracle: SetFunctionOracle,
    m: Matroid,
    steps: int | None = None,
    *,
    mode: str = "auto",
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    solver: Solver = exact_solver,
) -> SolveReport:
    """Continuous greedy followed by pipage rounding; aims for ``(1 - 1/e) * OPT``."""
    _require_monotone(oracle)
    q0 = oracle.queries
    obj = _Objective(oracle, mode, samples, seed)
    x, trajectory = continuous_greedy(oracle, m, steps, objective=obj)
    fractional = trajectory.steps[-1].value
    solution, trace = pipage_round(oracle, m, x, solver=solver, objective=obj)
    return SolveReport(
        solution=solution,
        value=oracle.evaluate(solution),
        fractional_value=fractional,
        x=x,
        trajectory=trajectory,
        rounding=trace,
        oracle_queries=oracle.queries - q0,
        certified=trace.certified,
    )


APPROX_RATIO = 1.0 - 1.0 / math.e
