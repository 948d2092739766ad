import random
from fractions import Fraction

import pytest

from submod import ContractError, InputError, brute_optimize, make_coverage, make_graph_cut
from submod.cardmin import (
    cardmin_symmetric,
    check_symmetric,
    split_by_separator,
    select_candidates,
)
from submod.extensions import ChainDistribution, chain_distribution, lovasz_eval
from submod.setfn import GroundSet

from instances import random_cut, random_symmetric

K3 = make_graph_cut([("a", "b"), ("b", "c"), ("c", "a")])
P4 = make_graph_cut([("a", "b"), ("b", "c"), ("c", "d")])
STAR = make_graph_cut([("c0", "l1"), ("c0", "l2"), ("c0", "l3")])


def brute_card_opt(f, k):
    return brute_optimize(f, "min", min_card=1, max_card=k)[1]


class TestExamples:
    def test_p4(self):
        rep = cardmin_symmetric(P4, 2)
        assert 1 <= len(rep.solution) <= 2 and rep.value <= 2
        assert rep.value == P4.evaluate(rep.solution)

    def test_k3_singletons_tie(self):
        rep = cardmin_symmetric(K3, 1)
        assert len(rep.solution) == 1 and rep.value == 2

    def test_star(self):
        rep = cardmin_symmetric(STAR, 1)
        assert rep.value <= 2 * brute_card_opt(STAR, 1)


class TestSelectCandidates:
    def test_half_mass_on_seed(self):
        chain = chain_distribution([0.5, 0, 0], K3.ground)
        got = select_candidates(chain, K3, 1, lovasz_eval(K3, [0.5, 0, 0]))
        assert got.early == K3.ground.mask(["a"]) and got.small_set is None

    def test_p4_hand_trace(self):
        x = [1, 1, 0, 0]
        chain = chain_distribution(x, P4.ground)
        assert [s for s, _ in chain.support()] == [P4.ground.mask(["a", "b"])]
        got = select_candidates(chain, P4, 2, lovasz_eval(P4, x))
        assert got.early == P4.ground.mask(["a", "b"])

    def test_corrupted_chain_is_loud(self):
        # all mass on X: |X| = 3 > 2k and the point violates the budget
        chain = chain_distribution([1, 1, 1], K3.ground)
        with pytest.raises(ContractError):
            select_candidates(chain, K3, 1, 0.0)

    def test_small_set_above_relaxation_is_loud(self):
        g = GroundSet("abcd")
        chain = ChainDistribution(tuple(range(4)), (0b0011, 0b1111), (0.5, 0.5), g)
        with pytest.raises(ContractError):
            select_candidates(chain, P4, 1, 0.1)

    def test_split_branch(self):
        # chain {a}: 1/3, X: 2/3 gives L = 1/3, and f({a}) = 1 > 2L
        x = [Fraction(1), Fraction(2, 3), Fraction(2, 3), Fraction(2, 3)]
        chain = chain_distribution(x, P4.ground)
        value = lovasz_eval(P4, x)
        assert value == pytest.approx(1 / 3)
        got = select_candidates(chain, P4, 3, value)
        assert got.early is None
        assert got.small_set == P4.ground.mask(list("abcd"))


class TestPartition:
    def test_examples(self):
        g = GroundSet("abcd")
        sp = g.mask(list("abcd"))
        assert split_by_separator(sp, g.mask(["a", "b"]), 2) == g.mask(["a", "b"])
        assert split_by_separator(sp, g.mask(["a", "b", "c"]), 2) == g.mask(["d"])
        assert split_by_separator(sp, g.mask(["a"]), 3) == g.mask(["a"])

    def test_precondition(self):
        g = GroundSet("abcd")
        with pytest.raises(InputError):
            split_by_separator(g.mask(["a", "b"]), g.mask(["a", "b", "c"]), 1)
        with pytest.raises(InputError):
            split_by_separator(g.mask(["a", "b"]), g.mask(["c"]), 1)


class TestErrors:
    @pytest.mark.parametrize("k", [0, 3, -1])
    def test_k_range(self, k):
        with pytest.raises(InputError):
            cardmin_symmetric(K3, k)

    def test_asymmetric_rejected(self):
        cov = make_coverage({"s1": ["y1", "y2"], "s2": ["y2", "y3"]})
        with pytest.raises(InputError, match="symmetric"):
            cardmin_symmetric(cov, 1, check=True)

    def test_check_symmetric_accepts_cuts(self):
        check_symmetric(P4)

    def test_unknown_engine(self):
        with pytest.raises(InputError):
            cardmin_symmetric(K3, 1, engine="bogus")


class TestTrace:
    @pytest.mark.parametrize("seed", range(8))
    def test_replay_and_consistency(self, seed):
        rng = random.Random(seed)
        f, _ = random_cut(rng, rng.randint(4, 9))
        k = rng.randint(1, f.n - 1)
        rep = cardmin_symmetric(f, k)
        assert len(rep.guesses) == f.n and rep.certified
        assert rep.value == f.evaluate(rep.solution)
        pool = []
        for tr in rep.guesses:
            assert tr.replay(f, k)
            assert tr.x[f.ground.index[tr.pinned]] == 1 and tr.x.sum() <= k + 1e-9
            for q, val in tr.candidates():
                assert 1 <= len(q) <= k
                pool.append(val)
            if tr.branch == "split":
                assert len(tr.small_set) <= 2 * k
                assert tr.small_value <= tr.lovasz_value + 1e-9
        assert rep.value == min(pool)

    def test_seeds_restrict_guesses(self):
        rep = cardmin_symmetric(P4, 2, seeds=["b"])
        assert [tr.pinned for tr in rep.guesses] == ["b"]


class TestBound:
    @pytest.mark.parametrize("seed", range(15))
    def test_cuts(self, seed):
        rng = random.Random(1000 + seed)
        f, _ = random_cut(rng, rng.randint(3, 9))
        cache = {}
        for k in range(1, f.n):
            rep = cardmin_symmetric(f, k, cut_cache=cache)
            assert 1 <= len(rep.solution) <= k
            assert rep.value <= 2 * brute_card_opt(f, k)

    @pytest.mark.parametrize("seed", range(6))
    def test_subgradient_engine(self, seed):
        rng = random.Random(2000 + seed)
        f, _ = random_cut(rng, rng.randint(3, 8))
        k = rng.randint(1, f.n - 1)
        rep = cardmin_symmetric(f, k, engine="subgradient")
        assert rep.value <= 2 * brute_card_opt(f, k)

    @pytest.mark.parametrize("seed", range(8))
    def test_symmetric_non_cut(self, seed):
        rng = random.Random(3000 + seed)
        f, _ = random_symmetric(rng, rng.randint(4, 9))
        check_symmetric(f)
        for k in range(1, f.n):
            rep = cardmin_symmetric(f, k)
            assert rep.value <= 2 * brute_card_opt(f, k)
