"""Cardinality-constrained minimization of nonnegative symmetric submodular functions.

For every pinned element the Lovász extension is minimized over points
with the pinned coordinate at 1 and coordinate sum at most ``k``. The chain
distribution of the minimizer either holds a set of size at most ``k`` that
is already within a factor two, or a small set of size at most ``2k`` no
worse than the relaxation. In the second case the small set is split by
minimum sets that keep the pinned element and drop one other member. Every
candidate is kept and the best one is returned; the result is within a
factor two of the optimum, plus twice the relaxation tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ContractError, InputError
from .extensions import ChainDistribution, chain_distribution
from .setfn import TOL, SetFunctionOracle, popcount
from .sfm import SolveParams, minimize_lovasz_over_budget, minimize_with_constraints

BUDGET_TOLERANCE = 0.24
SYMMETRY_CHECK_LIMIT = 12


@dataclass(frozen=True)
class Candidates:
    """Outcome of the support scan: exactly one of ``early`` and ``small_set`` is set (bitmasks)."""

    early: int | None = None
    small_set: int | None = None


@dataclass(frozen=True)
class Split:
    excluded: str
    separator: frozenset
    separator_value: float
    candidate: frozenset
    candidate_value: float


@dataclass
class GuessTrace:
    pinned: str
    x: np.ndarray
    lovasz_value: float
    lower_bound: float
    certified: bool
    support: list
    branch: str
    early: frozenset | None = None
    early_value: float | None = None
    small_set: frozenset | None = None
    small_value: float | None = None
    splits: list = field(default_factory=list)

    def candidates(self):
        if self.early is not None:
            yield self.early, self.early_value
        for s in self.splits:
            yield s.candidate, s.candidate_value

    def replay(self, oracle: SetFunctionOracle, k: int) -> bool:
        """Recompute every recorded candidate from its trace and compare values."""
        g = oracle.ground
        if self.early is not None and oracle.evaluate(self.early) != self.early_value:
            return False
        for s in self.splits:
            q = split_by_separator(g.mask(self.small_set), g.mask(s.separator), k)
            if g.labels_of(q) != s.candidate or oracle.evaluate_mask(q) != s.candidate_value:
                return False
        return True


@dataclass
class CardMinReport:
    solution: frozenset
    value: float
    k: int
    guesses: list
    oracle_queries: int
    certified: bool


def _tiebreak(g, mask: int):
    return popcount(mask), g.indices(mask)


def select_candidates(chain: ChainDistribution, oracle: SetFunctionOracle, k: int, lovasz_value: float) -> Candidates:
    """Scan the chain support: a set of size at most ``k`` within ``2 * lovasz_value``, else a small set.

    Among qualifying early sets the one with smallest value wins, then
    smallest size. The small set minimizes ``f`` over nonempty support sets
    of size at most ``2k``; its value must not exceed ``lovasz_value``,
    otherwise the chain did not come from a feasible point and ContractError
    is raised.
    """
    g = oracle.ground
    sets = [s for s, _ in chain.support() if s]
    values = dict(zip(sets, oracle.evaluate_many(sets))) if sets else {}
    early = [s for s in sets if popcount(s) <= k and values[s] <= 2 * lovasz_value + TOL]
    if early:
        return Candidates(early=min(early, key=lambda s: (values[s], *_tiebreak(g, s))))
    small = [s for s in sets if popcount(s) <= 2 * k]
    if not small:
        raise ContractError(f"no support set of size <= {2 * k}; the point is not budget-feasible")
    best = min(small, key=lambda s: (values[s], *_tiebreak(g, s)))
    if values[best] > lovasz_value + TOL:
        raise ContractError(
            f"best small support set has value {values[best]} > relaxation value {lovasz_value}"
        )
    return Candidates(small_set=best)


def split_by_separator(small_set: int, separator: int, k: int) -> int:
    """Part of ``small_set`` inside ``separator`` if it has at most ``k`` elements, else the rest (bitmasks)."""
    inside, outside = separator & small_set, small_set & ~separator
    if not inside or not outside:
        raise InputError("the separator must split the small set into two nonempty parts")
    return inside if popcount(inside) <= k else outside


def check_symmetric(oracle: SetFunctionOracle, *, limit: int = SYMMETRY_CHECK_LIMIT):
    """Raise InputError unless ``f`` is nonnegative and ``f(S) = f(X - S)`` for all ``S``."""
    if oracle.n > limit:
        raise InputError(f"symmetry check refused for n={oracle.n} > {limit}")
    values = oracle.all_values()
    if values.min() < -TOL:
        s = int(values.argmin())
        raise InputError(f"f({oracle.ground.ordered(s)}) = {values[s]} is negative")
    gap = np.abs(values - values[::-1])
    if gap.max() > TOL:
        s = int(gap.argmax())
        raise InputError(f"f is not symmetric at {oracle.ground.ordered(s)}")


def _guess(oracle, pinned: int, k: int, params: SolveParams, budget_params: SolveParams, engine: str, cuts: dict):
    g = oracle.ground
    sol = minimize_lovasz_over_budget(oracle, pinned, k, budget_params, engine=engine)
    chain = chain_distribution(sol.x, g)
    support = [(g.labels_of(s), float(p), float(oracle.evaluate_mask(s))) for s, p in chain.support()]
    trace = GuessTrace(
        pinned=g.labels[pinned],
        x=sol.x,
        lovasz_value=sol.value,
        lower_bound=sol.lower_bound,
        certified=sol.certified,
        support=support,
        branch="early",
    )
    picked = select_candidates(chain, oracle, k, sol.value)
    if picked.early is not None:
        trace.early = g.labels_of(picked.early)
        trace.early_value = oracle.evaluate_mask(picked.early)
        return trace
    trace.branch = "split"
    sp = picked.small_set
    trace.small_set = g.labels_of(sp)
    trace.small_value = oracle.evaluate_mask(sp)
    for excluded in g.indices(sp):
        if excluded == pinned:
            continue
        key = (pinned, excluded)
        if key not in cuts:
            cuts[key] = minimize_with_constraints(oracle, [g.labels[pinned]], [g.labels[excluded]], params)
        rep = cuts[key]
        trace.certified &= rep.certified
        q = split_by_separator(sp, g.mask(rep.minimizer), k)
        trace.splits.append(Split(g.labels[excluded], rep.minimizer, rep.value, g.labels_of(q), oracle.evaluate_mask(q)))
    return trace


def cardmin_symmetric(
    oracle: SetFunctionOracle,
    k: int,
    params: SolveParams | None = None,
    *,
    check: bool = False,
    budget_tolerance: float | None = None,
    engine: str = "cutting_plane",
    cut_cache: dict | None = None,
    seeds=None,
) -> CardMinReport:
    """Approximately minimize ``f`` over nonempty sets of size at most ``k``.

    ``f`` must be nonnegative, symmetric and submodular; with ``check`` the
    first two are verified by enumeration (small ``n`` only). The
    relaxation is solved to ``budget_tolerance``, which defaults to 0.24
    for integer-valued oracles (so the factor-two bound is exact after
    rounding) and to ``params.tolerance`` otherwise. ``engine`` selects the
    relaxation solver (see ``minimize_lovasz_over_budget``).

    ``cut_cache`` may be shared between calls on the same oracle: the
    separating sets do not depend on ``k``. ``seeds`` restricts the pinned
    guesses (all elements by default); the factor-two bound then only holds
    if some optimal set contains one of them.
    """
    params = params or SolveParams()
    n = oracle.n
    if not 1 <= k < n:
        raise InputError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    if check:
        check_symmetric(oracle)
    if budget_tolerance is None:
        budget_tolerance = BUDGET_TOLERANCE if oracle.integral else params.tolerance
    budget_params = replace(params, tolerance=budget_tolerance)
    cuts = {} if cut_cache is None else cut_cache
    q0 = oracle.queries
    g = oracle.ground
    order = range(n) if seeds is None else sorted({g.mask([v]).bit_length() - 1 for v in seeds})
    guesses = [_guess(oracle, pinned, k, params, budget_params, engine, cuts) for pinned in order]
    pool = {}
    for tr in guesses:
        for q, val in tr.candidates():
            pool[g.mask(q)] = val
    best = min(pool, key=lambda s: (pool[s], *_tiebreak(g, s)))
    if not 1 <= popcount(best) <= k:
        raise ContractError(f"selected set {g.ordered(best)} violates 1 <= size <= {k}")
    return CardMinReport(
        solution=g.labels_of(best),
        value=oracle.evaluate_mask(best),
        k=k,
        guesses=guesses,
        oracle_queries=oracle.queries - q0,
        certified=all(tr.certified for tr in guesses),
    )
