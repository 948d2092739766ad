import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from submod import InputError, brute_optimize, make_graph_cut, make_modular, make_sum
from submod import sfm
from submod.extensions import lovasz_eval

from instances import random_cut
from refimpl import project_bisect

K3 = make_graph_cut([("a", "b"), ("b", "c"), ("c", "a")])
P4 = make_graph_cut([("a", "b"), ("b", "c"), ("c", "d")])
ENGINES = ["subgradient", "minnorm"]


def cut_plus_modular(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 10)
    f, _ = random_cut(rng, n)
    mod = make_modular({v: rng.randint(-6, 3) for v in f.ground.labels})
    return make_sum(f, mod)


@pytest.mark.parametrize("method", ENGINES)
def test_minimize_examples(method):
    p = sfm.SolveParams(method=method)
    rep = sfm.minimize(K3, p)
    assert (rep.minimizer, rep.value) == (frozenset(), 0)
    shifted = make_sum(K3, make_modular({"a": -3, "b": 0, "c": 0}))
    rep = sfm.minimize(shifted, p)
    assert (rep.minimizer, rep.value) == (frozenset("abc"), -3)
    rep = sfm.minimize(make_modular({"a": 1, "b": -2, "c": 3}), p)
    assert (rep.minimizer, rep.value) == (frozenset("b"), -2)


def test_report_invariants():
    f = cut_plus_modular(3)
    rep = sfm.minimize(f)
    assert rep.value == f.evaluate(rep.minimizer)
    assert rep.value <= lovasz_eval(f, rep.x_final) + 1e-9
    assert rep.certified and rep.lower_bound <= rep.value + 1e-9
    values = [v for _, v in rep.best_prefix_trace]
    assert values == sorted(values, reverse=True)


@pytest.mark.parametrize("method", ENGINES)
@pytest.mark.parametrize("seed", range(25))
def test_matches_brute_force(seed, method):
    f = cut_plus_modular(seed)
    rep = sfm.minimize(f, sfm.SolveParams(method=method))
    assert rep.value == brute_optimize(f)[1]


@pytest.mark.parametrize("seed", range(25))
def test_constrained_matches_brute_force(seed):
    f = cut_plus_modular(seed)
    rng = random.Random(seed)
    labs = list(f.ground.labels)
    inc, exc = rng.sample(labs, 2)
    rep = sfm.minimize_with_constraints(f, [inc], [exc])
    assert inc in rep.minimizer and exc not in rep.minimizer
    assert rep.value == brute_optimize(f, include=[inc], exclude=[exc])[1]


def test_constrained_examples():
    assert sfm.minimize_with_constraints(K3, ["a"], ["c"]).value == 2
    rep = sfm.minimize_with_constraints(K3, list("abc"), [])
    assert (rep.minimizer, rep.value) == (frozenset("abc"), 0)
    rep = sfm.minimize_with_constraints(P4, ["a"], ["d"])
    assert rep.value == 1 and rep.minimizer in (frozenset("a"), frozenset("ab"), frozenset("abc"))


def test_constrained_overlap_rejected():
    with pytest.raises(InputError):
        sfm.minimize_with_constraints(K3, ["a"], ["a"])


def test_budget_exhaustion_flagged():
    f, _ = random_cut(random.Random(11), 10)
    f = make_sum(f, make_modular({v: -4 for v in f.ground.labels}))
    rep = sfm.minimize(f, sfm.SolveParams(max_iterations=1))
    assert rep.iterations == 1
    assert rep.value == f.evaluate(rep.minimizer)


def test_params_validation():
    with pytest.raises(InputError):
        sfm.SolveParams(max_iterations=0)
    with pytest.raises(InputError):
        sfm.SolveParams(tolerance=0)
    with pytest.raises(InputError):
        sfm.SolveParams(step_rule="random")
    with pytest.raises(InputError):
        sfm.SolveParams(method="ellipsoid")


def test_constant_step_rule_also_exact():
    f = cut_plus_modular(5)
    rep = sfm.minimize(f, sfm.SolveParams(step_rule="constant", max_iterations=5000))
    assert rep.value == brute_optimize(f)[1]


class TestProjection:
    def test_examples(self):
        assert np.allclose(sfm.project_budget_box([1, 0.9, 0.9], 0, 2), [1, 0.5, 0.5])
        assert np.allclose(sfm.project_budget_box([1, 2, -1], 0, 2), [1, 1, 0])
        assert list(sfm.project_budget_box([1, 0.2, 0.3], 0, 2)) == [1, 0.2, 0.3]

    @settings(max_examples=300, deadline=None)
    @given(
        st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=9),
        st.data(),
    )
    def test_against_bisection(self, y, data):
        n = len(y)
        pinned = data.draw(st.integers(0, n - 1))
        k = data.draw(st.integers(1, n - 1))
        x = sfm.project_budget_box(y, pinned, k)
        assert x[pinned] == 1
        assert np.all(x >= -1e-9) and np.all(x <= 1 + 1e-9)
        assert x.sum() <= k + 1e-9
        assert np.allclose(x, project_bisect(y, pinned, k), atol=1e-8)
        assert np.allclose(sfm.project_budget_box(x, pinned, k), x, atol=1e-12)


class TestBudget:
    @pytest.mark.parametrize("engine", sfm.BUDGET_ENGINES)
    def test_examples(self, engine):
        sol = sfm.minimize_lovasz_over_budget(P4, "a", 2, engine=engine)
        assert sol.value <= 1 + 1e-6
        sol = sfm.minimize_lovasz_over_budget(K3, "a", 1, engine=engine)
        assert np.allclose(sol.x, [1, 0, 0]) and sol.value == pytest.approx(2)
        mod = make_modular({"a": 2, "b": 1, "c": 3, "d": 0.5})
        sol = sfm.minimize_lovasz_over_budget(mod, "b", 3, sfm.SolveParams(tolerance=1e-9), engine=engine)
        assert np.allclose(sol.x, [0, 1, 0, 0], atol=1e-6) and sol.value == pytest.approx(1, abs=1e-6)

    def test_k_out_of_range(self):
        for k in (0, 3):
            with pytest.raises(InputError):
                sfm.minimize_lovasz_over_budget(K3, "a", k)
        with pytest.raises(InputError):
            sfm.minimize_lovasz_over_budget(K3, "a", 1, engine="simplex")

    @pytest.mark.parametrize("seed", range(10))
    def test_sandwich_and_engines_agree(self, seed):
        rng = random.Random(seed)
        n = rng.randint(4, 8)
        f, _ = random_cut(rng, n)
        pinned = rng.randrange(n)
        k = rng.randint(1, n - 1)
        sub = sfm.minimize_lovasz_over_budget(f, pinned, k, sfm.SolveParams(tolerance=1e-3))
        cp = sfm.minimize_lovasz_over_budget(f, pinned, k, sfm.SolveParams(tolerance=1e-6), engine="cutting_plane")
        for sol in (sub, cp):
            assert sol.x[pinned] == 1 and sol.x.sum() <= k + 1e-9
            assert np.all(sol.x >= 0) and np.all(sol.x <= 1)
            assert sol.value == pytest.approx(lovasz_eval(f, sol.x), abs=1e-9)
            assert sol.lower_bound <= sol.value + 1e-9
            assert sol.certified
        # cutting planes solve the relaxation exactly; subgradient may stop
        # early once it is within tolerance of the best integer point
        assert cp.value <= sub.value + 1e-6
        label = f.ground.labels[pinned]
        best_int = brute_optimize(f, include=[label], max_card=k)[1]
        assert cp.value <= best_int + 1e-6
        assert sub.value <= best_int + 1e-3
