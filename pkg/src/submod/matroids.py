"""Matroids given by independence oracles, their rank functions and polytopes."""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .extensions import as_point
from .setfn import TOL, GroundSet, SetFunctionOracle, bits_matrix, popcount
from .sfm import SfmReport, SolveParams, minimize_with_constraints

TIGHT_TOL = 1e-7

EXACT_PARAMS = SolveParams(method="minnorm", tolerance=1e-10, max_iterations=5000)


class Matroid:
    """Independence-oracle matroid on a labelled ground set.

    ``independent`` is a predicate on bitmasks. ``family`` is one of
    ``uniform``, ``partition``, ``graphic`` or ``explicit`` and ``definition``
    keeps the constructor arguments for serialization.
    """

    def __init__(self, ground, independent: Callable[[int], bool], family: str, definition=None):
        self.ground = ground if isinstance(ground, GroundSet) else GroundSet(ground)
        self._independent = independent
        self.family = family
        self.definition = definition
        self._rank_cache = {}

    @property
    def n(self):
        return self.ground.n

    def __repr__(self):
        return f"Matroid({self.family}, n={self.n})"

    def is_independent(self, subset) -> bool:
        return bool(self._independent(self.ground.mask(subset)))

    def independent_mask(self, mask: int) -> bool:
        return bool(self._independent(int(mask)))

    def rank_mask(self, mask: int) -> int:
        mask = int(mask)
        r = self._rank_cache.get(mask)
        if r is None:
            basis = 0
            for i in range(self.n):
                if mask >> i & 1 and self._independent(basis | 1 << i):
                    basis |= 1 << i
            r = self._rank_cache[mask] = popcount(basis)
        return r

    def rank_oracle(self) -> RankOracle:
        return RankOracle(self)


class RankOracle(SetFunctionOracle):
    def __init__(self, matroid: Matroid):
        super().__init__(
            matroid.ground, properties={"nonnegative", "normalized", "monotone", "submodular"}, integral=True
        )
        self.matroid = matroid

    def _value(self, mask):
        return float(self.matroid.rank_mask(mask))


class SlackOracle(SetFunctionOracle):
    """``S -> r_M(S) - x(S)``; its minimum is nonnegative iff ``x`` lies in ``P(M)``."""

    def __init__(self, matroid: Matroid, x: np.ndarray):
        super().__init__(matroid.ground, properties={"submodular", "normalized"})
        self.matroid = matroid
        self.x = np.asarray(x, dtype=float)

    def _value(self, mask):
        return self.matroid.rank_mask(mask) - float(bits_matrix([mask], self.n)[0] @ self.x)

    def _values(self, masks):
        ranks = np.fromiter((self.matroid.rank_mask(int(m)) for m in masks), dtype=float, count=masks.size)
        return ranks - bits_matrix(masks, self.n) @ self.x


def uniform(labels, k: int) -> Matroid:
    """``U(n, k)``: sets of size at most ``k``."""
    if k < 0:
        raise InputError("uniform matroid rank must be nonnegative")
    return Matroid(labels, lambda m: popcount(m) <= k, "uniform", {"k": k})


def partition(labels, blocks, capacities) -> Matroid:
    """At most ``capacities[b]`` elements from each block ``blocks[b]``.

    Elements outside every block are free (a block of their own with no cap).
    """
    ground = labels if isinstance(labels, GroundSet) else GroundSet(labels)
    blocks = [list(b) for b in blocks]
    if len(blocks) != len(capacities):
        raise InputError("one capacity per block is required")
    masks = [ground.mask(b) for b in blocks]
    for a in range(len(masks)):
        for b in range(a + 1, len(masks)):
            if masks[a] & masks[b]:
                raise InputError("partition blocks must be disjoint")
    if any(c < 0 for c in capacities):
        raise InputError("capacities must be nonnegative")
    caps = list(capacities)
    return Matroid(
        ground,
        lambda m: all(popcount(m & bm) <= c for bm, c in zip(masks, caps)),
        "partition",
        {"blocks": blocks, "capacities": caps},
    )


def graphic(edges: Mapping) -> Matroid:
    """Graphic matroid: ``edges`` maps element label -> ``(u, v)``; forests are independent."""
    ground = GroundSet(edges.keys())
    ends = [tuple(map(str, edges[e])) for e in ground]
    vertices = {v: i for i, v in enumerate(dict.fromkeys(v for uv in ends for v in uv))}
    pairs = [(vertices[u], vertices[v]) for u, v in ends]

    def acyclic(mask):
        parent = list(range(len(vertices)))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for i, (u, v) in enumerate(pairs):
            if mask >> i & 1:
                ru, rv = find(u), find(v)
                if ru == rv:
                    return False
                parent[ru] = rv
        return True

    return Matroid(ground, acyclic, "graphic", {"edges": {e: ends[i] for i, e in enumerate(ground)}})


def explicit(labels, independent_sets) -> Matroid:
    """Independent sets are the listed sets and all their subsets."""
    ground = labels if isinstance(labels, GroundSet) else GroundSet(labels)
    tops = [ground.mask(s) for s in independent_sets]
    return Matroid(
        ground,
        lambda m: m == 0 or any(m & t == m for t in tops),
        "explicit",
        {"sets": [ground.ordered(t) for t in tops]},
    )


def check_axioms(m: Matroid, *, limit: int = 12):
    """Exhaustive check of the matroid axioms; returns None or a description of the failure."""
    if m.n > limit:
        raise InputError(f"axiom check refused for n={m.n} > {limit}")
    ind = [m.independent_mask(s) for s in range(1 << m.n)]
    if not ind[0]:
        return "empty set is dependent"
    for s in range(1 << m.n):
        if not ind[s]:
            continue
        for i in range(m.n):
            if s >> i & 1 and not ind[s & ~(1 << i)]:
                return f"downward closure fails at {m.ground.ordered(s)}"
    indep = [s for s in range(1 << m.n) if ind[s]]
    for s in indep:
        for t in indep:
            if popcount(t) > popcount(s):
                diff = t & ~s
                if not any(diff >> y & 1 and ind[s | 1 << y] for y in range(m.n)):
                    return f"exchange fails for {m.ground.ordered(s)}, {m.ground.ordered(t)}"
    return None


def rank(m: Matroid, subset) -> int:
    """Matroid rank by the greedy scan in ground order."""
    return m.rank_mask(m.ground.mask(subset))


def max_weight_independent(m: Matroid, weights) -> frozenset:
    """Greedy maximum-weight independent set; ignores elements of nonpositive weight."""
    return m.ground.labels_of(max_weight_independent_mask(m, weights))


def max_weight_independent_mask(m: Matroid, weights) -> int:
    if isinstance(weights, Mapping):
        weights = [weights[v] for v in m.ground.labels]
    w = np.asarray(weights, dtype=float)
    chosen = 0
    for i in np.argsort(-w, kind="stable"):
        if w[i] <= 0:
            break
        if m.independent_mask(chosen | 1 << int(i)):
            chosen |= 1 << int(i)
    return chosen


@dataclass(frozen=True)
class PolytopeCertificate:
    inside: bool
    violated_set: frozenset | None
    min_slack: float


Solver = Callable[..., SfmReport]


def exact_solver(oracle, include=(), exclude=()) -> SfmReport:
    """Constrained minimization certified to 1e-10 (minimum-norm-point engine)."""
    return minimize_with_constraints(oracle, include, exclude, EXACT_PARAMS)


def in_polytope(m: Matroid, x, solver: Solver = exact_solver) -> PolytopeCertificate:
    """Separation for ``P(M)``: minimize ``r_M(S) - x(S)`` and compare with 0."""
    x = as_point(m.ground, x)
    rep = solver(SlackOracle(m, x))
    if rep.value >= -TOL:
        return PolytopeCertificate(True, None, rep.value)
    return PolytopeCertificate(False, rep.minimizer, rep.value)


def min_slack(m: Matroid, x, include=(), exclude=(), solver: Solver = exact_solver) -> SfmReport:
    """``min { r_M(S) - x(S) : include in S, S disjoint from exclude }``."""
    return solver(SlackOracle(m, np.asarray(x, dtype=float)), include, exclude)


def minimal_tight_set(m: Matroid, x, anchor, solver: Solver = exact_solver, *, check: bool = True):
    """Inclusion-minimal tight set (``x`` sums to the rank) containing ``anchor``, or None.

    Tight sets containing the anchor are closed under intersection, so the
    minimal one is unique. It is found by excluding, in ground order, every
    element whose exclusion still admits a tight superset of the anchor.
    Elements with ``x_e = 0`` are excluded up front: dropping such an element
    from a tight set cannot raise its slack above zero.
    """
    x = as_point(m.ground, x)
    g = m.ground
    if check and not in_polytope(m, x, solver).inside:
        raise InputError("point is outside the matroid polytope")
    anc = g.mask(anchor)
    excluded = 0
    for i in range(g.n):
        if not anc >> i & 1 and x[i] == 0:
            excluded |= 1 << i
    oracle = SlackOracle(m, x)
    rep = solver(oracle, g.labels_of(anc), g.labels_of(excluded))
    if rep.value > TIGHT_TOL:
        return None
    current = g.mask(rep.minimizer)
    for i in range(g.n):
        bit = 1 << i
        if anc & bit or excluded & bit or not current & bit:
            continue
        trial = solver(oracle, g.labels_of(anc), g.labels_of(excluded | bit))
        if trial.value <= TIGHT_TOL:
            excluded |= bit
            current = g.mask(trial.minimizer)
    return g.labels_of(current)
