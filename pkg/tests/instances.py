"""Seeded random instance generators shared by the test modules."""

import random

from submod import make_coverage, make_function, make_graph_cut
from submod import matroids as mt

from refimpl import is_submodular


def labels(n, prefix="v"):
    return [f"{prefix}{i}" for i in range(n)]


def random_graph(rng: random.Random, n: int, *, wmax: int = 5, extra: int | None = None):
    """Connected graph: a random spanning tree plus ``extra`` random edges, integer weights."""
    nodes = labels(n)
    edges = {}
    for i in range(1, n):
        edges[(nodes[rng.randrange(i)], nodes[i])] = rng.randint(1, wmax)
    for _ in range(rng.randint(0, n) if extra is None else extra):
        a, b = rng.sample(nodes, 2)
        if (a, b) not in edges and (b, a) not in edges:
            edges[(a, b)] = rng.randint(1, wmax)
    return nodes, [(a, b, w) for (a, b), w in edges.items()]


def random_cut(rng, n, **kw):
    nodes, edges = random_graph(rng, n, **kw)
    return make_graph_cut(edges, nodes), edges


def random_coverage(rng: random.Random, n: int, *, items: int | None = None, wmax: int = 5):
    pool = [f"u{j}" for j in range(items or rng.randint(3, 2 * n))]
    family = {lab: rng.sample(pool, rng.randint(0, min(4, len(pool)))) for lab in labels(n)}
    used = sorted({it for members in family.values() for it in members})
    weights = {it: rng.randint(1, wmax) for it in used}
    return make_coverage(family, weights), family, weights


def random_nonsubmodular(rng: random.Random, n: int):
    """Random integer table on ``n`` elements that fails submodularity."""
    labs = labels(n)
    while True:
        table = {}
        for m in range(1 << n):
            s = frozenset(labs[i] for i in range(n) if m >> i & 1)
            table[s] = 0 if m == 0 else rng.randint(0, 3 * n)
        if not is_submodular(table.__getitem__, labs):
            return make_function(labs, table.__getitem__, integral=True), table


def random_symmetric(rng: random.Random, n: int):
    """Nonnegative symmetric submodular function that is not a graph cut.

    Sum of terms ``c * g(|S & A|)`` over random blocks ``A`` of size >= 3,
    with ``g`` either ``min(t, |A| - t)`` or the hyperedge indicator
    ``0 < t < |A|``; both are concave in ``t`` and symmetric under
    complement.
    """
    labs = labels(n)
    terms = []
    for _ in range(rng.randint(2, 5)):
        block = frozenset(rng.sample(labs, rng.randint(3, n)))
        terms.append((block, rng.randint(1, 4), rng.choice(("balanced", "hyperedge"))))

    def f(s):
        total = 0
        for block, c, shape in terms:
            t = len(s & block)
            a = len(block)
            total += c * (min(t, a - t) if shape == "balanced" else int(0 < t < a))
        return total

    return (
        make_function(labs, f, properties={"nonnegative", "normalized", "symmetric", "submodular"}, integral=True),
        f,
    )


def random_matroid(rng: random.Random, ground, family: str):
    labs = list(ground.labels) if hasattr(ground, "labels") else list(ground)
    n = len(labs)
    if family == "uniform":
        return mt.uniform(ground, rng.randint(1, max(1, n - 1)))
    if family == "partition":
        cuts = sorted(rng.sample(range(1, n), min(2, n - 1)))
        bounds = [0, *cuts, n]
        blocks = [labs[a:b] for a, b in zip(bounds, bounds[1:])]
        return mt.partition(ground, blocks, [rng.randint(1, 2) for _ in blocks])
    if family == "graphic":
        verts = [str(i) for i in range(rng.randint(3, 6))]
        return mt.graphic({lab: tuple(rng.sample(verts, 2)) for lab in labs})
    raise ValueError(family)
