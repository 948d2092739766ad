"""Ground sets, value oracles, concrete submodular families and brute-force ground truth.

Subsets are handled in two forms. Public entry points accept any iterable of
labels (or a ``frozenset``); internally every subset is an ``int`` bitmask
whose bit ``i`` is the ``i``-th element of the ground set in declaration
order. All tie-breaking in the package follows that declaration order.
"""

from __future__ import annotations

import threading
import warnings
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, InputError

TOL = 1e-9
PROPERTIES = frozenset({"nonnegative", "normalized", "monotone", "symmetric", "submodular"})

CHECK_LIMIT = 16
BRUTE_LIMIT = 20
TABLE_LIMIT = 24


def popcount(mask: int) -> int:
    return int(mask).bit_count()


def bits_matrix(masks: np.ndarray, n: int) -> np.ndarray:
    """Boolean membership matrix of shape ``(len(masks), n)``."""
    masks = np.asarray(masks, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(bool)


class GroundSet:
    """An ordered collection of distinct string labels."""

    def __init__(self, labels: Iterable[str]):
        labels = tuple(str(x) for x in labels)
        if not labels:
            raise InputError("ground set must contain at least one element")
        index = {}
        for i, label in enumerate(labels):
            if label in index:
                raise InputError(f"duplicate ground element {label!r}")
            index[label] = i
        self.labels = labels
        self.index = index

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def full(self) -> int:
        return (1 << len(self.labels)) - 1

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label):
        return label in self.index

    def __eq__(self, other):
        return isinstance(other, GroundSet) and self.labels == other.labels

    def __hash__(self):
        return hash(self.labels)

    def __repr__(self):
        return f"GroundSet({list(self.labels)!r})"

    def mask(self, subset) -> int:
        """Bitmask of ``subset`` (an iterable of labels, or an int mask)."""
        if isinstance(subset, (int, np.integer)) and not isinstance(subset, bool):
            subset = int(subset)
            if subset < 0 or subset > self.full:
                raise InputError(f"mask {subset} outside ground set of size {self.n}")
            return subset
        if isinstance(subset, str):
            subset = (subset,)
        m = 0
        for label in subset:
            try:
                m |= 1 << self.index[label]
            except KeyError:
                raise InputError(f"element {label!r} is not in the ground set") from None
        return m

    def labels_of(self, mask: int) -> frozenset:
        return frozenset(self.labels[i] for i in self.indices(mask))

    def ordered(self, mask: int) -> list[str]:
        """Labels of ``mask`` in ground order."""
        return [self.labels[i] for i in self.indices(mask)]

    def indices(self, mask: int) -> list[int]:
        mask = int(mask)
        return [i for i in range(self.n) if mask >> i & 1]

    def position(self, label: str) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise InputError(f"element {label!r} is not in the ground set") from None


class SetFunctionOracle:
    """A value oracle ``f: 2^X -> R`` that counts its queries.

    Subclasses implement ``_value(mask)`` and may override ``_values(masks)``
    with a vectorized version. Every public evaluation path bumps the query
    counter by exactly the number of subsets evaluated.
    """

    def __init__(self, ground, *, properties=(), integral=False, value_ratio_bound=None):
        if not isinstance(ground, GroundSet):
            ground = GroundSet(ground)
        unknown = set(properties) - PROPERTIES
        if unknown:
            raise InputError(f"unknown properties {sorted(unknown)}")
        if value_ratio_bound is not None and value_ratio_bound <= 0:
            raise InputError("value_ratio_bound must be positive")
        self.ground = ground
        self.properties = frozenset(properties)
        self.integral = bool(integral)
        self.value_ratio_bound = value_ratio_bound
        self._queries = 0
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return self.ground.n

    @property
    def queries(self) -> int:
        return self._queries

    def declares(self, prop: str) -> bool:
        return prop in self.properties

    def _bump(self, k: int):
        with self._lock:
            self._queries += int(k)

    def evaluate(self, subset) -> float:
        return self.evaluate_mask(self.ground.mask(subset))

    __call__ = evaluate

    def evaluate_mask(self, mask: int) -> float:
        self._bump(1)
        return float(self._value(int(mask)))

    def evaluate_many(self, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64).reshape(-1)
        self._bump(masks.size)
        return np.asarray(self._values(masks), dtype=float)

    def chain_values(self, order) -> np.ndarray:
        """Values of the ``n+1`` prefixes ``S_0 = {}, S_1, ..., S_n`` of ``order``."""
        prefixes = np.zeros(len(order) + 1, dtype=np.int64)
        m = 0
        for i, idx in enumerate(order, 1):
            m |= 1 << int(idx)
            prefixes[i] = m
        return self.evaluate_many(prefixes)

    def all_values(self) -> np.ndarray:
        """Table of ``f`` over all ``2^n`` masks (costs ``2^n`` queries)."""
        if self.n > TABLE_LIMIT:
            raise BudgetError(f"cannot tabulate a function on {self.n} > {TABLE_LIMIT} elements")
        return self.evaluate_many(np.arange(1 << self.n, dtype=np.int64))

    def _value(self, mask: int) -> float:
        raise NotImplementedError

    def _values(self, masks: np.ndarray) -> np.ndarray:
        return np.fromiter((self._value(int(m)) for m in masks), dtype=float, count=masks.size)


class GraphCut(SetFunctionOracle):
    """Weighted cut function of an undirected multigraph."""

    def __init__(self, ground, tails, heads, weights):
        self.tails = np.asarray(tails, dtype=np.int64)
        self.heads = np.asarray(heads, dtype=np.int64)
        self.weights = np.asarray(weights, dtype=float)
        integral = bool(np.all(self.weights == np.round(self.weights)))
        super().__init__(
            ground,
            properties={"nonnegative", "normalized", "symmetric", "submodular"},
            integral=integral,
        )

    def _value(self, mask):
        if not self.weights.size:
            return 0.0
        bu = (mask >> self.tails) & 1
        bv = (mask >> self.heads) & 1
        return float(self.weights[bu != bv].sum())

    def _values(self, masks):
        if not self.weights.size:
            return np.zeros(masks.size)
        bu = (masks[:, None] >> self.tails[None, :]) & 1
        bv = (masks[:, None] >> self.heads[None, :]) & 1
        return (bu != bv) @ self.weights

    def edges(self):
        labels = self.ground.labels
        return [(labels[u], labels[v], float(w)) for u, v, w in zip(self.tails, self.heads, self.weights)]


class Coverage(SetFunctionOracle):
    """Weighted coverage: ``f(S)`` is the weight of the union of the sets in ``S``."""

    def __init__(self, ground, items, item_masks, item_weights):
        self.items = tuple(items)
        self.item_masks = np.asarray(item_masks, dtype=np.int64)
        self.item_weights = np.asarray(item_weights, dtype=float)
        integral = bool(np.all(self.item_weights == np.round(self.item_weights)))
        super().__init__(
            ground,
            properties={"nonnegative", "normalized", "monotone", "submodular"},
            integral=integral,
        )

    def _value(self, mask):
        return float(self.item_weights[(self.item_masks & mask) != 0].sum())

    def _values(self, masks):
        if not self.items:
            return np.zeros(masks.size)
        return ((masks[:, None] & self.item_masks[None, :]) != 0) @ self.item_weights

    def family(self):
        out = {}
        for i, label in enumerate(self.ground.labels):
            out[label] = [it for it, m in zip(self.items, self.item_masks) if m >> i & 1]
        return out


class Modular(SetFunctionOracle):
    """``f(S) = sum of w(v) for v in S``."""

    def __init__(self, ground, weights):
        self.weights = np.asarray(weights, dtype=float)
        props = {"normalized", "submodular"}
        if np.all(self.weights >= 0):
            props |= {"nonnegative", "monotone"}
        if not np.any(self.weights):
            props.add("symmetric")
        super().__init__(
            ground, properties=props, integral=bool(np.all(self.weights == np.round(self.weights)))
        )

    def _value(self, mask):
        return float(sum(self.weights[i] for i in range(self.n) if mask >> i & 1))

    def _values(self, masks):
        return bits_matrix(masks, self.n) @ self.weights


class FunctionOracle(SetFunctionOracle):
    """Wraps a Python callable taking a ``frozenset`` of labels."""

    def __init__(self, ground, func, **kwargs):
        super().__init__(ground, **kwargs)
        self.func = func

    def _value(self, mask):
        return float(self.func(self.ground.labels_of(mask)))


class SumOracle(SetFunctionOracle):
    """Pointwise sum of oracles on a common ground set; queries are forwarded."""

    def __init__(self, parts):
        parts = tuple(parts)
        ground = parts[0].ground
        if any(p.ground != ground for p in parts):
            raise InputError("summed oracles must share the ground set")
        props = set(PROPERTIES)
        for p in parts:
            props &= p.properties
        # a flag survives only if every part declares it
        super().__init__(ground, properties=props, integral=all(p.integral for p in parts))
        self.parts = parts

    def _value(self, mask):
        return sum(p.evaluate_mask(mask) for p in self.parts)

    def _values(self, masks):
        return sum(p.evaluate_many(masks) for p in self.parts)


def make_graph_cut(edges, nodes=None) -> GraphCut:
    """Cut function of an undirected weighted multigraph.

    ``edges`` holds ``(u, v)`` or ``(u, v, w)`` tuples. Vertices are ordered
    by ``nodes`` first (if given) and then by first appearance in ``edges``.
    Self-loops are dropped with a warning; parallel edges accumulate weight.
    """
    order = list(nodes) if nodes is not None else []
    seen = set(order)
    if len(seen) != len(order):
        raise InputError("duplicate vertex labels")
    parsed = []
    for e in edges:
        if len(e) == 2:
            u, v, w = e[0], e[1], 1.0
        elif len(e) == 3:
            u, v, w = e
        else:
            raise InputError(f"edge {e!r} must be (u, v) or (u, v, w)")
        u, v, w = str(u), str(v), float(w)
        if w < 0:
            raise InputError(f"negative weight {w} on edge ({u}, {v})")
        for x in (u, v):
            if x not in seen:
                seen.add(x)
                order.append(x)
        parsed.append((u, v, w))
    ground = GroundSet(order)
    acc = {}
    for u, v, w in parsed:
        if u == v:
            warnings.warn(f"self-loop on {u!r} ignored", stacklevel=2)
            continue
        key = tuple(sorted((ground.index[u], ground.index[v])))
        acc[key] = acc.get(key, 0.0) + w
    keys = sorted(acc)
    return GraphCut(ground, [k[0] for k in keys], [k[1] for k in keys], [acc[k] for k in keys])


def make_coverage(family: Mapping, item_weights: Mapping | None = None) -> Coverage:
    """Coverage function over ``family`` (set label -> items), default item weight 1."""
    ground = GroundSet(family.keys())
    items, index = [], {}
    for label in ground:
        for it in family[label]:
            it = str(it)
            if it not in index:
                index[it] = len(items)
                items.append(it)
    weights = [1.0] * len(items)
    for it, w in (item_weights or {}).items():
        it = str(it)
        if it not in index:
            raise InputError(f"weight given for unknown item {it!r}")
        if w < 0:
            raise InputError(f"negative weight {w} for item {it!r}")
        weights[index[it]] = float(w)
    masks = [0] * len(items)
    for i, label in enumerate(ground):
        for it in family[label]:
            masks[index[str(it)]] |= 1 << i
    return Coverage(ground, items, masks, weights)


def make_modular(weights: Mapping) -> Modular:
    ground = GroundSet(weights.keys())
    return Modular(ground, [float(weights[v]) for v in ground])


def make_function(labels, func: Callable[[frozenset], float], **kwargs) -> FunctionOracle:
    """Oracle from a callable on label sets; ``kwargs`` go to :class:`SetFunctionOracle`."""
    return FunctionOracle(labels if isinstance(labels, GroundSet) else GroundSet(labels), func, **kwargs)


def make_sum(*oracles) -> SumOracle:
    return SumOracle(oracles)


@dataclass(frozen=True)
class Witness:
    """A replayable counterexample to a set-function property.

    ``kind`` is one of:

    - ``submodularity-violation``: ``first`` is a subset of ``second``,
      ``lhs`` and ``rhs`` are the marginal gains of ``element`` on each,
      violated when ``lhs < rhs``;
    - ``monotonicity-violation``: ``second`` is ``first`` plus ``element``,
      ``lhs`` and ``rhs`` are their values, violated when ``lhs > rhs``;
    - ``symmetry-violation``: ``second`` is the complement of ``first``;
    - ``nonnegativity-violation``: ``lhs`` is the value of ``first``.
    """

    kind: str
    first: frozenset
    second: frozenset = frozenset()
    element: str | None = None
    lhs: float = 0.0
    rhs: float = 0.0

    def replay(self, oracle: SetFunctionOracle) -> bool:
        """Re-evaluate through ``oracle``; True iff the violation is reproduced."""
        f = oracle.evaluate
        if self.kind == "submodularity-violation":
            j = {self.element}
            lhs = f(self.first | j) - f(self.first)
            rhs = f(self.second | j) - f(self.second)
            return self.first <= self.second and lhs < rhs - TOL
        if self.kind == "monotonicity-violation":
            return self.first <= self.second and f(self.first) > f(self.second) + TOL
        if self.kind == "symmetry-violation":
            return abs(f(self.first) - f(self.second)) > TOL
        if self.kind == "nonnegativity-violation":
            return f(self.first) < -TOL
        raise InputError(f"unknown witness kind {self.kind!r}")


def _submask_min(values: np.ndarray, n: int) -> np.ndarray:
    """Each entry becomes the minimum of ``values`` over the submasks of its index."""
    out = values.copy()
    for i in range(n):
        view = out.reshape(-1, 2, 1 << i)
        np.minimum(view[:, 1, :], view[:, 0, :], out=view[:, 1, :])
    return out


def check_property_bruteforce(oracle: SetFunctionOracle, prop: str, *, limit: int = CHECK_LIMIT):
    """Exhaustively check ``prop``; return ``None`` on success or the first :class:`Witness`.

    Submodularity is checked in diminishing-returns form: for every
    ``A`` subset of ``B`` and ``j`` outside ``B``, ``f(A+j) - f(A) >= f(B+j) - f(B)``.
    Witnesses are the first violation in the scan order ``B`` ascending (by
    mask), then ``A`` ascending, then ``j`` ascending.
    """
    if prop not in {"submodular", "monotone", "symmetric", "nonnegative"}:
        raise InputError(f"unknown property {prop!r}")
    n = oracle.n
    if n > limit:
        raise BudgetError(f"exhaustive check refused for n={n} > {limit}")
    g = oracle.ground
    f = oracle.all_values()
    masks = np.arange(1 << n, dtype=np.int64)

    if prop == "nonnegative":
        bad = np.flatnonzero(f < -TOL)
        if bad.size:
            s = int(bad[0])
            return Witness("nonnegativity-violation", g.labels_of(s), lhs=f[s], rhs=0.0)
        return None

    if prop == "symmetric":
        comp = g.full ^ masks
        bad = np.flatnonzero(np.abs(f - f[comp]) > TOL)
        if bad.size:
            s = int(bad[0])
            return Witness("symmetry-violation", g.labels_of(s), g.labels_of(g.full ^ s), lhs=f[s], rhs=f[g.full ^ s])
        return None

    if prop == "monotone":
        first = None
        for j in range(n):
            bit = 1 << j
            outside = masks[(masks & bit) == 0]
            bad = outside[f[outside] > f[outside | bit] + TOL]
            if bad.size and (first is None or (int(bad[0]), j) < first):
                first = (int(bad[0]), j)
        if first is None:
            return None
        s, j = first
        return Witness(
            "monotonicity-violation", g.labels_of(s), g.labels_of(s | 1 << j), g.labels[j], f[s], f[s | 1 << j]
        )

    # submodular: a margin on a set must not exceed the smallest margin on its subsets
    first_b = None
    margins = {}
    for j in range(n):
        bit = 1 << j
        m = np.full(1 << n, np.inf)
        outside = (masks & bit) == 0
        m[outside] = f[masks[outside] | bit] - f[masks[outside]]
        margins[j] = m
        low = _submask_min(m, n)
        bad = np.flatnonzero(outside & (low < m - TOL))
        if bad.size and (first_b is None or bad[0] < first_b):
            first_b = int(bad[0])
    if first_b is None:
        return None
    b = first_b
    a = 0
    while True:
        # ascending enumeration of submasks of b
        if a & ~b == 0:
            for j in range(n):
                if b >> j & 1:
                    continue
                m = margins[j]
                if m[a] < m[b] - TOL:
                    return Witness(
                        "submodularity-violation", g.labels_of(a), g.labels_of(b), g.labels[j], m[a], m[b]
                    )
        a += 1


def brute_optimize(
    oracle: SetFunctionOracle,
    sense: str = "min",
    *,
    min_card: int = 0,
    max_card: int | None = None,
    include=(),
    exclude=(),
    limit: int = BRUTE_LIMIT,
):
    """Exact optimum of ``oracle`` over all subsets meeting the constraints.

    Ties (within 1e-9) go to the smallest cardinality, then to the
    lexicographically smallest sorted index tuple in ground order.

    Returns
    -------
    (frozenset, float)
    """
    if sense not in ("min", "max"):
        raise InputError(f"sense must be 'min' or 'max', not {sense!r}")
    n = oracle.n
    if n > limit:
        raise BudgetError(f"brute force refused for n={n} > {limit}")
    g = oracle.ground
    inc, exc = g.mask(include), g.mask(exclude)
    max_card = n if max_card is None else max_card
    if inc & exc:
        raise InputError("include and exclude overlap")
    if min_card > n - popcount(exc) or max_card < popcount(inc) or min_card > max_card:
        raise InputError("constraint set is infeasible")
    f = oracle.all_values()
    masks = np.arange(1 << n, dtype=np.int64)
    card = np.bitwise_count(masks)
    ok = ((masks & inc) == inc) & ((masks & exc) == 0) & (card >= min_card) & (card <= max_card)
    vals = f[ok] if sense == "min" else -f[ok]
    cand = masks[ok]
    best = vals.min()
    tied = cand[vals <= best + TOL]
    winner = min((int(m) for m in tied), key=lambda m: (popcount(m), g.indices(m)))
    return g.labels_of(winner), float(f[winner])
