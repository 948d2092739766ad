"""Plain-text instance formats: parsers, serializers and oracle builders.

All formats are line based. ``#`` starts a comment and blank lines are
ignored. Ground-set order is the order in which labels first appear.

graph::

    node <u>            # declares a vertex (isolated vertices need this)
    <u> <v> [<w>]       # undirected edge, weight defaults to 1

coverage::

    <set> : <item> <item> ...
    weight <item> <w>   # item weight, default 1

modular::

    <label> <w>

graphic matroid::

    <element> <u> <v>   # element is the edge u-v
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ParseError
from .setfn import SetFunctionOracle, make_coverage, make_graph_cut, make_modular

KINDS = ("graph", "coverage", "modular")


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def _weight(token: str, no: int) -> float:
    try:
        w = float(token)
    except ValueError:
        raise ParseError(f"bad weight {token!r}", no) from None
    if not math.isfinite(w):
        raise ParseError(f"weight must be finite, got {token!r}", no)
    return w


def _nonneg(token: str, no: int) -> float:
    w = _weight(token, no)
    if w < 0:
        raise ParseError(f"negative weight {token}", no)
    return w


def _fmt(w: float) -> str:
    return str(int(w)) if float(w).is_integer() and abs(w) < 2**53 else repr(float(w))


@dataclass
class GraphInstance:
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)

    def oracle(self) -> SetFunctionOracle:
        return make_graph_cut(self.edges, self.nodes)

    @property
    def labels(self):
        return list(self.nodes)


@dataclass
class CoverageInstance:
    family: dict = field(default_factory=dict)
    weights: dict = field(default_factory=dict)

    def oracle(self) -> SetFunctionOracle:
        return make_coverage(self.family, self.weights)

    @property
    def labels(self):
        return list(self.family)


@dataclass
class ModularInstance:
    weights: dict = field(default_factory=dict)

    def oracle(self) -> SetFunctionOracle:
        return make_modular(self.weights)

    @property
    def labels(self):
        return list(self.weights)


def parse_graph(text: str) -> GraphInstance:
    inst = GraphInstance()
    seen = set()

    def add(u):
        if u not in seen:
            seen.add(u)
            inst.nodes.append(u)

    for no, line in _lines(text):
        tok = line.split()
        if tok[0] == "node":
            if len(tok) != 2:
                raise ParseError("expected 'node <label>'", no)
            add(tok[1])
        elif len(tok) in (2, 3):
            w = _nonneg(tok[2], no) if len(tok) == 3 else 1.0
            add(tok[0])
            add(tok[1])
            inst.edges.append((tok[0], tok[1], w))
        else:
            raise ParseError(f"expected '<u> <v> [<w>]', got {len(tok)} fields", no)
    if not inst.nodes:
        raise ParseError("graph has no vertices")
    return inst


def serialize_graph(inst: GraphInstance) -> str:
    out = [f"node {u}" for u in inst.nodes]
    out += [f"{u} {v} {_fmt(w)}" for u, v, w in inst.edges]
    return "\n".join(out) + "\n"


def parse_coverage(text: str) -> CoverageInstance:
    inst = CoverageInstance()
    weight_lines = {}
    for no, line in _lines(text):
        if ":" in line:
            head, _, tail = line.partition(":")
            label = head.strip()
            if not label or len(label.split()) != 1:
                raise ParseError("set label must be a single token", no)
            if label in inst.family:
                raise ParseError(f"duplicate set label {label!r}", no)
            inst.family[label] = tail.split()
            continue
        tok = line.split()
        if tok[0] != "weight" or len(tok) != 3:
            raise ParseError("expected '<set> : <items>' or 'weight <item> <w>'", no)
        if tok[1] in inst.weights:
            raise ParseError(f"duplicate weight for item {tok[1]!r}", no)
        inst.weights[tok[1]] = _nonneg(tok[2], no)
        weight_lines[tok[1]] = no
    if not inst.family:
        raise ParseError("coverage family has no sets")
    items = {it for members in inst.family.values() for it in members}
    for it, no in weight_lines.items():
        if it not in items:
            raise ParseError(f"weight given for unknown item {it!r}", no)
    return inst


def serialize_coverage(inst: CoverageInstance) -> str:
    out = [f"{label} : {' '.join(items)}".rstrip() for label, items in inst.family.items()]
    out += [f"weight {it} {_fmt(w)}" for it, w in inst.weights.items()]
    return "\n".join(out) + "\n"


def parse_modular(text: str) -> ModularInstance:
    inst = ModularInstance()
    for no, line in _lines(text):
        tok = line.split()
        if len(tok) != 2:
            raise ParseError("expected '<label> <weight>'", no)
        if tok[0] in inst.weights:
            raise ParseError(f"duplicate label {tok[0]!r}", no)
        inst.weights[tok[0]] = _weight(tok[1], no)
    if not inst.weights:
        raise ParseError("modular instance has no elements")
    return inst


def serialize_modular(inst: ModularInstance) -> str:
    return "".join(f"{label} {_fmt(w)}\n" for label, w in inst.weights.items())


def parse_graphic(text: str) -> dict:
    """Element label -> ``(u, v)``, in file order."""
    edges = {}
    for no, line in _lines(text):
        tok = line.split()
        if len(tok) != 3:
            raise ParseError("expected '<element> <u> <v>'", no)
        if tok[0] in edges:
            raise ParseError(f"duplicate element {tok[0]!r}", no)
        edges[tok[0]] = (tok[1], tok[2])
    return edges


def serialize_graphic(edges: dict) -> str:
    return "".join(f"{e} {u} {v}\n" for e, (u, v) in edges.items())


PARSERS = {"graph": parse_graph, "coverage": parse_coverage, "modular": parse_modular}
SERIALIZERS = {"graph": serialize_graph, "coverage": serialize_coverage, "modular": serialize_modular}


def parse_instance(kind: str, text: str):
    if kind not in PARSERS:
        raise ParseError(f"unknown instance kind {kind!r}; expected one of {', '.join(KINDS)}")
    return PARSERS[kind](text)


def serialize_instance(kind: str, inst) -> str:
    return SERIALIZERS[kind](inst)
