"""Continuous extensions of set functions.

Lovász extension with explicit chain distributions, uncrossing of arbitrary
distributions into chains, the multilinear extension (exact and sampled)
with its derivatives, and LP-based convex/concave closures used as ground
truth on small ground sets.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from numbers import Real

import numpy as np
from scipy.optimize import linprog

from .errors import BudgetError, ContractError, InputError
from .setfn import TOL, GroundSet, SetFunctionOracle, bits_matrix, popcount

EXACT_LIMIT = 20
LP_LIMIT = 12
BOUND_TOL = 1e-12
SAMPLE_BLOCK = 4096


def as_point(ground: GroundSet, x) -> np.ndarray:
    """Validate ``x`` as a point of ``[0,1]^X`` and return it as a float array.

    ``x`` may be a sequence in ground order or a mapping label -> value
    covering exactly the ground set. Coordinates within 1e-12 of the bounds
    are clipped onto them.
    """
    if isinstance(x, Mapping):
        if set(x) != set(ground.labels):
            raise InputError("point must be defined on exactly the ground set")
        x = [x[v] for v in ground.labels]
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.size != ground.n:
        raise InputError(f"point has {arr.size} coordinates, ground set has {ground.n}")
    if not np.all(np.isfinite(arr)) or np.any(arr < -BOUND_TOL) or np.any(arr > 1 + BOUND_TOL):
        raise InputError("point lies outside the unit cube")
    return np.clip(arr, 0.0, 1.0)


def _coords(x, ground):
    """Coordinates as a list of exact Python numbers (Fractions preserved)."""
    if isinstance(x, Mapping):
        if ground is None:
            ground = GroundSet(x.keys())
        if set(x) != set(ground.labels):
            raise InputError("point must be defined on exactly the ground set")
        x = [x[v] for v in ground.labels]
    elif isinstance(x, np.ndarray):
        x = x.reshape(-1).tolist()
    x = list(x)
    for v in x:
        if not isinstance(v, Real) or not (-BOUND_TOL <= v <= 1 + BOUND_TOL):
            raise InputError(f"coordinate {v!r} outside [0, 1]")
    x = [0 if v < 0 else 1 if v > 1 else v for v in x]
    if ground is not None and len(x) != ground.n:
        raise InputError(f"point has {len(x)} coordinates, ground set has {ground.n}")
    return x, ground


@dataclass(frozen=True)
class ChainDistribution:
    """Distribution supported on nested prefixes of ``order``.

    ``sets[i]`` is a bitmask with probability ``probs[i]``; sets are listed
    by increasing size. Zero-probability prefixes are not stored.
    """

    order: tuple
    sets: tuple
    probs: tuple
    ground: GroundSet | None = field(default=None, compare=False)

    @property
    def n(self):
        return len(self.order)

    def support(self):
        return list(zip(self.sets, self.probs))

    def marginals(self):
        out = [0] * self.n
        for s, p in zip(self.sets, self.probs):
            for i in range(self.n):
                if s >> i & 1:
                    out[i] += p
        return out

    def expectation(self, oracle: SetFunctionOracle) -> float:
        vals = oracle.evaluate_many(list(self.sets))
        return float(np.dot(np.asarray(self.probs, dtype=float), vals))

    def to_distribution(self) -> DiscreteDistribution:
        return DiscreteDistribution(dict(zip(self.sets, self.probs)), n=self.n, ground=self.ground)


@dataclass
class DiscreteDistribution:
    """Finite distribution over subsets: ``probs`` maps bitmask -> probability."""

    probs: dict
    n: int
    ground: GroundSet | None = field(default=None, compare=False)

    def __post_init__(self):
        if any(p < 0 for p in self.probs.values()):
            raise InputError("probabilities must be nonnegative")
        if abs(float(sum(self.probs.values())) - 1.0) > TOL:
            raise InputError("probabilities must sum to 1")
        if any(m < 0 or m >> self.n for m in self.probs):
            raise InputError("subset outside the ground set")

    @classmethod
    def from_sets(cls, ground: GroundSet, pairs):
        probs = {}
        for subset, p in pairs:
            m = ground.mask(subset)
            if m in probs:
                raise InputError(f"duplicate subset {sorted(ground.labels_of(m))} in support")
            probs[m] = p
        return cls(probs, ground.n, ground)

    def support(self):
        return sorted((m, p) for m, p in self.probs.items() if p != 0)

    def marginals(self):
        out = [0] * self.n
        for m, p in self.probs.items():
            for i in range(self.n):
                if m >> i & 1:
                    out[i] += p
        return out

    def expectation(self, oracle: SetFunctionOracle) -> float:
        masks, probs = zip(*self.support())
        return float(np.dot(np.asarray(probs, dtype=float), oracle.evaluate_many(list(masks))))

    def second_moment(self):
        """E|S|^2, the potential that uncrossing strictly increases."""
        return sum(p * popcount(m) ** 2 for m, p in self.probs.items())

    def is_chain(self) -> bool:
        return _first_crossing(self) is None


@dataclass(frozen=True)
class ClosureResult:
    value: float
    distribution: DiscreteDistribution


def chain_distribution(x, ground: GroundSet | None = None) -> ChainDistribution:
    """The unique chain distribution with marginals ``x``.

    Elements are sorted by decreasing coordinate, ties by ground order;
    ``lambda_0 = 1 - x(v_1)``, ``lambda_i = x(v_i) - x(v_{i+1})`` and
    ``lambda_n = x(v_n)``. Exact arithmetic is kept for Fraction inputs.
    """
    coords, ground = _coords(x, ground)
    n = len(coords)
    order = sorted(range(n), key=lambda i: (-coords[i], i))
    sets, probs = [], []
    mask = 0
    for i in range(n + 1):
        if i:
            mask |= 1 << order[i - 1]
        hi = 1 if i == 0 else coords[order[i - 1]]
        lo = coords[order[i]] if i < n else 0
        lam = hi - lo
        if lam != 0:
            sets.append(mask)
            probs.append(lam)
    return ChainDistribution(tuple(order), tuple(sets), tuple(probs), ground)


def _sorted_order(x: np.ndarray) -> np.ndarray:
    # stable sort on -x keeps ground order among ties
    return np.argsort(-x, kind="stable")


def lovasz_terms(oracle: SetFunctionOracle, x: np.ndarray):
    """Order, all ``n+1`` prefix masks and values, and chain weights at ``x``.

    Shared by the evaluator, the subgradient and the minimizers, which all
    scan every prefix (``n+1`` queries).
    """
    order = _sorted_order(x)
    xs = x[order]
    lam = np.empty(len(x) + 1)
    lam[0] = 1.0 - xs[0] if len(x) else 1.0
    lam[1:-1] = xs[:-1] - xs[1:]
    lam[-1] = xs[-1]
    prefixes = np.zeros(len(x) + 1, dtype=np.int64)
    prefixes[1:] = np.cumsum(np.left_shift(np.int64(1), order.astype(np.int64)))
    values = oracle.evaluate_many(prefixes)
    return order, prefixes, values, lam


def lovasz_eval(oracle: SetFunctionOracle, x) -> float:
    """Lovász extension: expected ``f`` under the chain distribution of ``x``."""
    x = as_point(oracle.ground, x)
    chain = chain_distribution(x, oracle.ground)
    return chain.expectation(oracle)


def lovasz_subgradient(oracle: SetFunctionOracle, x) -> np.ndarray:
    """Greedy marginal vector ``g(v_i) = f(S_i) - f(S_{i-1})`` along the sort of ``x``."""
    x = as_point(oracle.ground, x)
    order, _, values, _ = lovasz_terms(oracle, x)
    g = np.empty(len(x))
    g[order] = np.diff(values)
    return g


def _check_exact(oracle, limit):
    if oracle.n > limit:
        raise BudgetError(f"exact multilinear evaluation refused for n={oracle.n} > {limit}; use sampling")


def independent_probs(x: np.ndarray) -> np.ndarray:
    """``Pr[S]`` under independent rounding of ``x``, indexed by bitmask."""
    p = np.ones(1)
    for xi in x:
        p = np.concatenate([p * (1.0 - xi), p * xi])
    return p


class MultilinearTable:
    """Exact multilinear extension backed by one tabulation of ``f`` (``2^n`` queries)."""

    def __init__(self, oracle: SetFunctionOracle, limit: int = EXACT_LIMIT):
        _check_exact(oracle, limit)
        self.ground = oracle.ground
        self.n = oracle.n
        self.table = oracle.all_values()

    def value(self, x) -> float:
        return float(independent_probs(np.asarray(x, dtype=float)) @ self.table)

    def _pinned(self, x, pins):
        y = np.array(x, dtype=float)
        for i, v in pins:
            y[i] = v
        return self.value(y)

    def partial(self, x, i: int) -> float:
        # F is affine in x_i, so the derivative is F(x_i=1) - F(x_i=0)
        return self._pinned(x, [(i, 1.0)]) - self._pinned(x, [(i, 0.0)])

    def gradient(self, x) -> np.ndarray:
        return np.array([self.partial(x, i) for i in range(self.n)])

    def second_partial(self, x, i: int, j: int) -> float:
        if i == j:
            return 0.0
        return (
            self._pinned(x, [(i, 1.0), (j, 1.0)])
            - self._pinned(x, [(i, 1.0), (j, 0.0)])
            - self._pinned(x, [(i, 0.0), (j, 1.0)])
            + self._pinned(x, [(i, 0.0), (j, 0.0)])
        )


def multilinear_eval_exact(oracle: SetFunctionOracle, x, *, limit: int = EXACT_LIMIT) -> float:
    """``sum_S f(S) prod_{i in S} x_i prod_{i not in S} (1 - x_i)`` over all ``2^n`` sets."""
    _check_exact(oracle, limit)
    x = as_point(oracle.ground, x)
    return MultilinearTable(oracle, limit).value(x)


def block_rng(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for sample block ``block`` of substream ``stream`` under ``seed``."""
    key = [int(seed) & (2**64 - 1), int(block)] + ([int(stream)] if stream else [])
    ss = np.random.SeedSequence(key)
    return np.random.Generator(np.random.Philox(ss))


def sample_masks(x: np.ndarray, samples: int, seed: int, stream: int = 0) -> np.ndarray:
    """``samples`` independent draws from the product distribution of ``x``, as bitmasks.

    Draws are generated in fixed blocks keyed by block index, so the result
    does not depend on how blocks are scheduled.
    """
    n = len(x)
    weights = np.left_shift(np.int64(1), np.arange(n, dtype=np.int64))
    out = np.empty(samples, dtype=np.int64)
    for b, start in enumerate(range(0, samples, SAMPLE_BLOCK)):
        m = min(SAMPLE_BLOCK, samples - start)
        u = block_rng(seed, b, stream).random((m, n))
        out[start : start + m] = (u < x[None, :]) @ weights
    return out


def _mean_and_se(values: np.ndarray):
    # shifting by the first sample makes degenerate samples exact
    base = values[0]
    d = values - base
    mean = float(base + d.mean())
    se = float(d.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return mean, se


def multilinear_eval_sampled(oracle: SetFunctionOracle, x, samples: int, seed: int):
    """Monte Carlo estimate of ``F(x)``.

    Returns
    -------
    (estimate, standard_error)
        ``standard_error`` is the sample standard deviation over ``sqrt(samples)``.
    """
    if samples < 1:
        raise InputError("samples must be >= 1")
    x = as_point(oracle.ground, x)
    masks = sample_masks(x, samples, seed)
    return _mean_and_se(oracle.evaluate_many(masks))


def sampled_gradient(oracle: SetFunctionOracle, x: np.ndarray, samples: int, seed: int, stream: int = 0) -> np.ndarray:
    """All partials from one shared batch of sample sets (common random numbers)."""
    masks = sample_masks(x, samples, seed, stream)
    g = np.empty(len(x))
    for i in range(len(x)):
        bit = np.int64(1) << i
        g[i] = (oracle.evaluate_many(masks | bit) - oracle.evaluate_many(masks & ~bit)).mean()
    return g


def multilinear_gradient(oracle: SetFunctionOracle, x, i, *, samples: int | None = None, seed: int = 0) -> float:
    """``dF/dx_i``; exact when ``samples`` is None, otherwise ``E[f(S+i) - f(S-i)]`` sampled."""
    x = as_point(oracle.ground, x)
    i = oracle.ground.position(i) if isinstance(i, str) else int(i)
    if samples is None:
        return MultilinearTable(oracle).partial(x, i)
    if samples < 1:
        raise InputError("samples must be >= 1")
    masks = sample_masks(x, samples, seed)
    bit = np.int64(1) << i
    return float((oracle.evaluate_many(masks | bit) - oracle.evaluate_many(masks & ~bit)).mean())


def second_partial(oracle: SetFunctionOracle, x, i, j) -> float:
    """``d^2F / dx_i dx_j`` computed exactly; 0 on the diagonal."""
    x = as_point(oracle.ground, x)
    g = oracle.ground
    i = g.position(i) if isinstance(i, str) else int(i)
    j = g.position(j) if isinstance(j, str) else int(j)
    if i == j:
        return 0.0
    return MultilinearTable(oracle).second_partial(x, i, j)


def _first_crossing(d: DiscreteDistribution):
    masks = [m for m, _ in d.support()]
    for a_idx, a in enumerate(masks):
        for b in masks[a_idx + 1 :]:
            common = a & b
            if common != a and common != b:
                return a, b
    return None


def uncross_step(d: DiscreteDistribution) -> DiscreteDistribution | None:
    """Replace one crossing pair ``A, B`` by ``A & B`` and ``A | B``.

    With ``Pr[B] >= Pr[A]``: ``A & B`` and ``A | B`` each gain ``Pr[A]``, ``B``
    loses it, ``A`` drops out. The first crossing pair in ascending mask
    order is used. Returns None if ``d`` is already a chain.
    """
    pair = _first_crossing(d)
    if pair is None:
        return None
    a, b = pair
    if d.probs[a] > d.probs[b]:
        a, b = b, a
    pa = d.probs[a]
    probs = dict(d.probs)
    probs[a & b] = probs.get(a & b, 0) + pa
    probs[a | b] = probs.get(a | b, 0) + pa
    probs[b] = probs[b] - pa
    probs[a] = 0
    probs = {m: p for m, p in probs.items() if p != 0}
    return DiscreteDistribution(probs, d.n, d.ground)


def uncross_to_chain(d: DiscreteDistribution, max_steps: int = 1_000_000) -> ChainDistribution:
    """Uncross until the support is a chain and return it as a :class:`ChainDistribution`."""
    for _ in range(max_steps):
        nxt = uncross_step(d)
        if nxt is None:
            break
        d = nxt
    else:
        raise ContractError("uncrossing did not terminate")
    support = sorted(d.support(), key=lambda mp: popcount(mp[0]))
    order, seen = [], 0
    for m, _ in support:
        new = m & ~seen
        order.extend(i for i in range(d.n) if new >> i & 1)
        seen |= m
    order.extend(i for i in range(d.n) if not seen >> i & 1)
    return ChainDistribution(
        tuple(order), tuple(m for m, _ in support), tuple(p for _, p in support), d.ground
    )


def _closure(oracle: SetFunctionOracle, x, sense: str, limit: int) -> ClosureResult:
    n = oracle.n
    if n > limit:
        raise BudgetError(f"LP closure refused for n={n} > {limit}")
    x = as_point(oracle.ground, x)
    f = oracle.all_values()
    masks = np.arange(1 << n, dtype=np.int64)
    a_eq = np.vstack([np.ones(1 << n), bits_matrix(masks, n).T.astype(float)])
    b_eq = np.concatenate([[1.0], x])
    c = f if sense == "min" else -f
    res = linprog(
        c,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise ContractError(f"closure LP failed: {res.message}")
    p = np.where(res.x > 1e-13, res.x, 0.0)
    p /= p.sum()
    keep = np.flatnonzero(p)
    dist = DiscreteDistribution({int(m): float(p[m]) for m in keep}, n, oracle.ground)
    return ClosureResult(float(p[keep] @ f[keep]), dist)


def convex_closure_bruteforce(oracle: SetFunctionOracle, x, *, limit: int = LP_LIMIT) -> ClosureResult:
    """``f^-(x)``: least expected ``f`` over distributions with marginals ``x`` (exact LP)."""
    return _closure(oracle, x, "min", limit)


def concave_closure_bruteforce(oracle: SetFunctionOracle, x, *, limit: int = LP_LIMIT) -> ClosureResult:
    """``f^+(x)``: greatest expected ``f`` over distributions with marginals ``x`` (exact LP)."""
    return _closure(oracle, x, "max", limit)


def find_convexity_witness(oracle: SetFunctionOracle, *, limit: int = LP_LIMIT):
    """Point where the Lovász extension exceeds the convex closure, or None if ``f`` is submodular.

    Scans ``A`` (ascending mask) and pairs ``i < j`` outside ``A`` for
    ``f(A+i+j) - f(A+i) > f(A+j) - f(A)``; the witness point is 1 on ``A``,
    1/2 on ``i, j`` and 0 elsewhere.

    Returns
    -------
    (np.ndarray, float) or None
        The point and the gap ``L_f(x) - f^-(x)``.
    """
    n = oracle.n
    if n > limit:
        raise BudgetError(f"witness search refused for n={n} > {limit}")
    f = oracle.all_values()
    for a in range(1 << n):
        free = [i for i in range(n) if not a >> i & 1]
        for pos, i in enumerate(free):
            for j in free[pos + 1 :]:
                bi, bj = 1 << i, 1 << j
                if f[a | bi | bj] - f[a | bi] > f[a | bj] - f[a] + TOL:
                    x = np.array([1.0 if a >> k & 1 else 0.0 for k in range(n)])
                    x[i] = x[j] = 0.5
                    gap = lovasz_eval(oracle, x) - convex_closure_bruteforce(oracle, x, limit=limit).value
                    return x, gap
    return None
