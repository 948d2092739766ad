from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from submod import InputError, ParseError
from submod.formats import (
    CoverageInstance,
    GraphInstance,
    ModularInstance,
    parse_coverage,
    parse_graph,
    parse_graphic,
    parse_instance,
    parse_modular,
    serialize_graphic,
    serialize_instance,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


class TestGraph:
    def test_k3(self):
        inst = parse_graph("a b\nb c\nc a")
        assert inst.nodes == ["a", "b", "c"]
        assert inst.edges == [("a", "b", 1.0), ("b", "c", 1.0), ("c", "a", 1.0)]
        assert inst.oracle().evaluate({"a"}) == 2

    def test_weight_comment_and_isolated_node(self):
        inst = parse_graph("a b 2\n# comment\nnode z")
        assert inst.edges == [("a", "b", 2.0)] and inst.nodes == ["a", "b", "z"]
        assert inst.oracle().evaluate({"z"}) == 0

    def test_trailing_comment(self):
        assert parse_graph("a b 3  # heavy\n").edges == [("a", "b", 3.0)]

    def test_negative_weight(self):
        with pytest.raises(ParseError) as err:
            parse_graph("a b -1")
        assert err.value.line == 1
        assert isinstance(err.value, InputError)

    @pytest.mark.parametrize(
        "text, line",
        [("a b\nlonely", 2), ("a b c d", 1), ("a b x", 1), ("node", 1), ("\n\na b inf", 3)],
    )
    def test_malformed(self, text, line):
        with pytest.raises(ParseError) as err:
            parse_graph(text)
        assert err.value.line == line

    def test_empty(self):
        with pytest.raises(ParseError):
            parse_graph("# nothing\n")


class TestCoverage:
    def test_cov1(self):
        inst = parse_coverage("s1 : y1 y2\ns2 : y2 y3")
        assert inst.family == {"s1": ["y1", "y2"], "s2": ["y2", "y3"]}
        assert inst.oracle().evaluate({"s1", "s2"}) == 3

    def test_weighted(self):
        inst = parse_coverage("s1 : y1 y2\ns2 : y2 y3\nweight y2 5")
        assert inst.oracle().evaluate({"s1", "s2"}) == 7

    def test_empty_set(self):
        inst = parse_coverage("s1 : \ns2 : y1")
        assert inst.oracle().evaluate({"s1"}) == 0

    def test_no_space_around_colon(self):
        assert parse_coverage("s1:y1 y2").family == {"s1": ["y1", "y2"]}

    def test_duplicate_label(self):
        with pytest.raises(ParseError) as err:
            parse_coverage("s1 : y1\ns1 : y2")
        assert err.value.line == 2

    def test_negative_weight(self):
        with pytest.raises(InputError):
            parse_coverage("s1 : y1\nweight y1 -2")

    @pytest.mark.parametrize("text", ["s1 y1", ": y1", "weight y1", "s1 : y1\nweight y9 2"])
    def test_malformed(self, text):
        with pytest.raises(ParseError):
            parse_coverage(text)


class TestModularAndGraphic:
    def test_modular(self):
        inst = parse_modular("a 1\nb -2\nc 3")
        assert inst.oracle().evaluate({"a", "c"}) == 4

    def test_modular_errors(self):
        with pytest.raises(ParseError):
            parse_modular("a")
        with pytest.raises(ParseError):
            parse_modular("a 1\na 2")

    def test_graphic(self):
        edges = parse_graphic("e1 p q\ne2 q r")
        assert edges == {"e1": ("p", "q"), "e2": ("q", "r")}
        assert parse_graphic(serialize_graphic(edges)) == edges
        with pytest.raises(ParseError):
            parse_graphic("e1 p")

    def test_unknown_kind(self):
        with pytest.raises(ParseError):
            parse_instance("matrix", "a 1")


@pytest.mark.parametrize("path", sorted(FIXTURES.iterdir()), ids=lambda p: p.name)
def test_fixtures_round_trip(path):
    kind = {".graph": "graph", ".cov": "coverage", ".mod": "modular"}.get(path.suffix)
    if kind is None:
        edges = parse_graphic(path.read_text())
        assert parse_graphic(serialize_graphic(edges)) == edges
        return
    inst = parse_instance(kind, path.read_text())
    again = parse_instance(kind, serialize_instance(kind, inst))
    assert again == inst
    assert again.labels == inst.labels


label = st.from_regex(r"[a-z][a-z0-9_]{0,4}", fullmatch=True).filter(lambda s: s not in ("node", "weight"))
weight = st.one_of(st.integers(0, 50).map(float), st.floats(0, 100, allow_nan=False, allow_infinity=False))


@settings(max_examples=150)
@given(st.lists(st.tuples(label, label, weight), max_size=12), st.lists(label, max_size=4))
def test_graph_round_trip(edges, isolated):
    nodes = []
    for u, v, _ in edges:
        for x in (u, v):
            if x not in nodes:
                nodes.append(x)
    nodes += [x for x in dict.fromkeys(isolated) if x not in nodes]
    if not nodes:
        return
    inst = GraphInstance(nodes, list(edges))
    assert parse_graph(serialize_instance("graph", inst)) == inst


@settings(max_examples=150)
@given(st.dictionaries(label, st.lists(label, max_size=5, unique=True), min_size=1, max_size=6), st.data())
def test_coverage_round_trip(family, data):
    items = sorted({i for members in family.values() for i in members})
    weights = {i: data.draw(weight) for i in items if data.draw(st.booleans())}
    inst = CoverageInstance(family, weights)
    assert parse_coverage(serialize_instance("coverage", inst)) == inst


@settings(max_examples=150)
@given(st.dictionaries(label, st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=8))
def test_modular_round_trip(weights):
    inst = ModularInstance(weights)
    assert parse_modular(serialize_instance("modular", inst)) == inst
