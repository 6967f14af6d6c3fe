import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crquery.errors import ResourceError, ValidationError
from crquery.queries import (
    QueryStrategy,
    rank_tail_to_posterior,
    lemma2_converse_check,
    posterior_to_rank_tail,
    lemma2_forward_check,
    optimal_ranks,
    optimal_strategy,
    posterior_from_joint,
    query_count,
)


class TestStrategy:
    def test_descending(self):
        q = optimal_strategy({0: {"a": 0.2, "b": 0.5, "c": 0.3}})
        assert q.order(0) == ["b", "c", "a"]

    def test_uniform_is_lexicographic(self):
        q = optimal_strategy({0: {v: 0.25 for v in (3, 1, 2, 0)}})
        assert q.order(0) == [0, 1, 2, 3]
        for v in range(4):
            assert query_count(q, v, 0) == v + 1

    def test_locality(self):
        q = optimal_strategy({0: {"x": 0.7, "y": 0.3}, 1: {"x": 0.3, "y": 0.7}})
        assert q.order(0) == ["x", "y"] and q.order(1) == ["y", "x"]

    def test_top_and_last(self):
        q = optimal_strategy({0: {"x": 0.1, "y": 0.6, "z": 0.3}})
        assert query_count(q, "y", 0) == 1
        assert query_count(q, "x", 0) == 3

    def test_unknown_value(self):
        q = optimal_strategy({0: {"x": 1.0}})
        with pytest.raises(ValidationError):
            query_count(q, "nope", 0)

    def test_unnormalized_posterior(self):
        with pytest.raises(ValidationError):
            optimal_strategy({0: {"x": 0.5}})

    def test_bijection_enforced(self):
        with pytest.raises(ValidationError):
            QueryStrategy({0: {"x": 1, "y": 1}})

    @given(st.integers(1, 30), st.integers(0, 2**31))
    def test_shortlist_count_at_most_gamma(self, n, seed):
        rng = np.random.default_rng(seed)
        ranks = {0: {u: int(r) + 1 for u, r in enumerate(rng.permutation(n))}}
        q = QueryStrategy(ranks)
        for gamma in (0.5, 1, 2.5, n / 2, n, n + 3):
            assert q.within(0, gamma) <= gamma

    @given(st.integers(1, 6), st.integers(1, 5), st.integers(0, 2**31))
    def test_optimal_ranks_agree(self, nu, nv, seed):
        joint = np.random.default_rng(seed).dirichlet(np.ones(nu * nv)).reshape(nu, nv)
        q = optimal_strategy(posterior_from_joint(joint))
        R = optimal_ranks(joint / joint.sum(axis=0))
        for v in range(nv):
            for u in range(nu):
                assert R[u, v] == q.ranks[v][u]

    @settings(max_examples=30)
    @given(st.integers(1, 5), st.integers(1, 3), st.integers(0, 2**31))
    def test_optimal_dominates_every_strategy(self, nu, nv, seed):
        joint = np.random.default_rng(seed).dirichlet(np.ones(nu * nv)).reshape(nu, nv)
        best = optimal_ranks(joint / joint.sum(axis=0))
        perms = list(itertools.permutations(range(1, nu + 1)))
        for gamma in range(1, nu + 1):
            opt = joint[best >= gamma].sum()
            rng = np.random.default_rng(seed + gamma)
            for _ in range(20):
                R = np.stack([np.array(perms[rng.integers(len(perms))]) for _ in range(nv)], axis=1)
                assert opt <= joint[R >= gamma].sum() + 1e-12


class TestRankTail:
    def test_uniform_independent(self):
        joint = np.full((256, 4), 1 / 1024)
        rep = posterior_to_rank_tail(joint, 25.6, 0.1)
        assert rep.hypothesis
        assert rep.query_tail >= 0.8
        assert rep.holds

    def test_identity_is_vacuous(self):
        joint = np.eye(8) / 8
        rep = posterior_to_rank_tail(joint, 4.0, 0.1)
        assert not rep.hypothesis and rep.holds

    def test_delta_range(self):
        with pytest.raises(ValidationError):
            posterior_to_rank_tail(np.eye(2) / 2, 2, 0.5)

    def test_size_guard(self):
        with pytest.raises(ResourceError):
            posterior_to_rank_tail(np.full((300, 300), 1 / 90000), 2, 0.1)

    def test_random_sixteen(self, rng):
        for _ in range(500):
            joint = rng.dirichlet(np.ones(256) * rng.choice([0.1, 1.0, 10.0])).reshape(16, 16)
            gamma = float(2 ** rng.uniform(0, 5))
            delta = float(rng.uniform(0.01, 0.49))
            assert lemma2_forward_check(joint, gamma, delta)
            assert lemma2_converse_check(joint, gamma, delta)

    def test_converse_active_case(self):
        joint = np.full((64, 2), 1 / 128)
        rep = rank_tail_to_posterior(joint, 16, 0.25)
        assert rep.hypothesis and rep.conclusion
