"""Cache-allocation solver: exact water-filling against first-order
oracles, KKT certificates, threshold structure, and rounding."""

import math

import numpy as np
import pytest

from ccnscale import alloc
from ccnscale.alloc import AllocationProblem, solve
from ccnscale.errors import InfeasibleError, UnsupportedRegimeError
from ccnscale.popularity import from_weights, zipf

from oracles import objective as oracle_objective
from oracles import random_instances, solve_spg

# Frozen output of the spectral-projected-gradient oracle (Barzilai-
# Borwein steps, nonmonotone line search, run to first-order tolerance
# 1e-12) for the instance zipf(M=12, alpha=1.2), n=40, K=1, a=1/25, f=0.
_SPG_FROZEN_X = [
    10.392445131120361,
    5.968892313278175,
    4.315396812710656,
    3.4282283907063413,
    2.867752960510853,
    2.478544609959314,
    2.190984515413065,
    1.9690001564786708,
    1.791941108769597,
    1.64709155413742,
    1.5261723887868066,
    1.4235500581287486,
]
_SPG_FROZEN_OBJECTIVE = 2.3186165202842313


def _spg(prob):
    return solve_spg(
        prob.pop.p, prob.a, prob.f, prob.lower, prob.upper, prob.budget
    )


class TestSolveExamples:
    def test_uniform_popularity_splits_budget_evenly(self):
        prob = AllocationProblem(pop=zipf(4, 0.0), n=8, K=1.0, a=1 / 16)
        res = solve(prob)
        np.testing.assert_allclose(res.X, [2.0, 2.0, 2.0, 2.0], rtol=1e-12)
        assert (res.m1, res.m2) == (1, 5)
        assert res.Kprime == pytest.approx(1.0)
        assert res.multiplier > 0

    def test_single_content_saturates_upper(self):
        prob = AllocationProblem(pop=zipf(1, 2.0), n=10, K=1.0, a=0.25)
        res = solve(prob)
        assert res.X.tolist() == [4.0]
        assert (res.m1, res.m2) == (2, 2)
        assert res.multiplier == 0.0
        assert alloc.optimized_delay(res, prob) == pytest.approx(1.0)

    def test_zipf_instance_matches_frozen_oracle(self):
        prob = AllocationProblem(pop=zipf(12, 1.2), n=40, K=1.0, a=1 / 25)
        res = solve(prob)
        assert np.max(np.abs(res.X - np.array(_SPG_FROZEN_X))) < 1e-6
        assert res.objective == pytest.approx(_SPG_FROZEN_OBJECTIVE, rel=1e-9)
        assert (res.m1, res.m2) == (1, 13)

    def test_infeasible_ad_hoc_budget(self):
        with pytest.raises(InfeasibleError):
            solve(AllocationProblem(pop=zipf(30, 1.0), n=20, K=1.0, a=1 / 16))

    def test_over_provisioned_budget_all_upper(self):
        prob = AllocationProblem(pop=zipf(3, 1.0), n=1000, K=1.0, a=1 / 9)
        res = solve(prob)
        np.testing.assert_allclose(res.X, [9.0, 9.0, 9.0], rtol=1e-12)
        assert (res.m1, res.m2) == (4, 4)
        assert res.multiplier == 0.0
        assert alloc.optimized_delay(res, prob) == pytest.approx(1.0)

    def test_degenerate_heterogeneous_box(self):
        # f = 1/a: base stations alone exceed one per cell, no room for
        # cached copies; all X at the floor, flagged.
        prob = AllocationProblem.heterogeneous(
            pop=zipf(5, 1.0), n=100, K=1.0, a=1 / 16, f=16.0
        )
        assert prob.degenerate
        res = solve(prob)
        assert res.degenerate
        np.testing.assert_array_equal(res.X, np.zeros(5))
        assert (res.m1, res.m2) == (1, 1)
        assert res.multiplier == 0.0
        want = 1.0 / math.sqrt((1 / 16) * 16.0)
        assert alloc.optimized_delay(res, prob) == pytest.approx(want)

    def test_rejects_non_monotone_popularity(self):
        model = zipf(3, 1.0)
        object.__setattr__(model, "p", np.array([0.2, 0.3, 0.5]))
        with pytest.raises(ValueError):
            solve(AllocationProblem(pop=model, n=10, K=2.0, a=1 / 9))


class TestOracleParity:
    def test_matches_spectral_projected_gradient(self):
        checked = 0
        for prob in random_instances(seed=2718, count=150):
            res = solve(prob)
            x_spg = _spg(prob)
            obj_spg = oracle_objective(x_spg, prob.pop.p, prob.a, prob.f)
            assert res.objective <= obj_spg + 1e-9 * abs(obj_spg)
            assert np.max(np.abs(res.X - x_spg)) < 1e-6
            checked += 1
        assert checked == 150

    def test_objective_is_never_above_feasible_points(self):
        rng = np.random.default_rng(7)
        for prob in random_instances(seed=42, count=40):
            res = solve(prob)
            span = prob.upper - prob.lower
            for _ in range(10):
                x = prob.lower + rng.random(prob.pop.m_count) * span
                excess = x.sum() - prob.budget
                if excess > 0:  # pull back into the budget
                    x = np.maximum(prob.lower, x - excess / len(x))
                    if x.sum() > prob.budget:
                        continue
                assert res.objective <= oracle_objective(
                    x, prob.pop.p, prob.a, prob.f
                ) + 1e-12


class TestKkt:
    def test_residual_small_on_random_instances(self):
        for prob in random_instances(seed=1618, count=200):
            res = solve(prob)
            if res.degenerate:
                continue
            assert alloc.kkt_residual(res, prob) <= 1e-8

    def test_interior_gradient_equals_multiplier(self):
        prob = AllocationProblem(pop=zipf(12, 1.2), n=40, K=1.0, a=1 / 25)
        res = solve(prob)
        p = prob.pop.p
        grad = p / (2.0 * math.sqrt(prob.a) * (res.X + prob.f) ** 1.5)
        interior = slice(res.m1 - 1, res.m2 - 1)
        np.testing.assert_allclose(grad[interior], res.multiplier, rtol=1e-10)


class TestStructure:
    def test_three_regime_shape_and_bounds(self):
        for prob in random_instances(seed=31415, count=150):
            res = solve(prob)
            X = res.X
            tol = 1e-9 * max(1.0, prob.upper)
            assert np.all(X >= prob.lower - tol)
            assert np.all(X <= prob.upper + tol)
            assert X.sum() <= prob.budget * (1 + 1e-9)
            assert np.all(np.diff(X) <= tol)  # non-increasing
            m1, m2 = res.m1, res.m2
            assert 1 <= m1 <= m2 <= prob.pop.m_count + 1
            np.testing.assert_allclose(X[: m1 - 1], prob.upper, rtol=1e-9)
            if m2 <= prob.pop.m_count:
                np.testing.assert_allclose(
                    X[m2 - 1 :], prob.lower, atol=1e-9 * max(1.0, prob.upper)
                )
            interior = X[m1 - 1 : m2 - 1]
            if interior.size:
                assert np.all(interior > prob.lower - tol)
                assert np.all(interior < prob.upper + tol)

    def test_budget_exact_when_multiplier_positive(self):
        for prob in random_instances(seed=999, count=80):
            res = solve(prob)
            if res.multiplier > 0:
                assert res.X.sum() == pytest.approx(prob.budget, rel=1e-9)

    def test_objective_monotone_in_cache_size(self):
        pop = zipf(20, 1.1)
        objs = [
            solve(AllocationProblem(pop=pop, n=100, K=k, a=1 / 36)).objective
            for k in (0.5, 1.0, 2.0, 4.0)
        ]
        assert all(a >= b - 1e-12 for a, b in zip(objs, objs[1:]))

    def test_objective_monotone_in_base_stations(self):
        pop = zipf(20, 1.1)
        objs = [
            solve(
                AllocationProblem(pop=pop, n=100, K=1.0, a=1 / 36, f=f, lower=0.0)
            ).objective
            for f in (1.0, 2.0, 5.0, 10.0)
        ]
        assert all(a >= b - 1e-12 for a, b in zip(objs, objs[1:]))

    def test_weight_scale_invariance(self):
        w = [5.0, 3.0, 2.0, 1.5, 0.5]
        prob1 = AllocationProblem(pop=from_weights(w), n=30, K=1.0, a=1 / 16)
        prob2 = AllocationProblem(
            pop=from_weights([173.0 * v for v in w]), n=30, K=1.0, a=1 / 16
        )
        np.testing.assert_allclose(solve(prob1).X, solve(prob2).X, rtol=1e-12)


class TestInteriorRatio:
    def test_alpha_three_matches_predicted_order(self):
        # Order prediction: m1/m2 ~ a^{3/(2 alpha)} = (1/64)^{0.5} = 1/8.
        prob = AllocationProblem(pop=zipf(100, 3.0), n=8000, K=0.1, a=1 / 64)
        res = solve(prob)
        assert 1 < res.m1 <= res.m2 <= 100
        ratio = alloc.interior_ratio(prob)
        assert 0.5 <= ratio <= 2.0

    def test_band_is_stable_across_n(self):
        # Catalog grows with n so the three-regime structure persists.
        ratios = [
            alloc.interior_ratio(
                AllocationProblem(
                    pop=zipf(n // 16, 2.0), n=n, K=0.2, a=1 / 100
                )
            )
            for n in (4000, 8000, 16000, 32000)
        ]
        assert max(ratios) / min(ratios) < 2.0

    def test_degenerate_rejected(self):
        prob = AllocationProblem.heterogeneous(
            pop=zipf(5, 1.5), n=100, K=1.0, a=1 / 16, f=16.0
        )
        with pytest.raises(UnsupportedRegimeError):
            alloc.interior_ratio(prob)

    def test_non_zipf_rejected(self):
        prob = AllocationProblem(
            pop=from_weights([3.0, 2.0, 1.0]), n=30, K=1.0, a=1 / 16
        )
        with pytest.raises(UnsupportedRegimeError):
            alloc.interior_ratio(prob)

    def test_missing_structure_rejected(self):
        # Abundant budget saturates everything: no interior region.
        prob = AllocationProblem(pop=zipf(3, 1.5), n=1000, K=1.0, a=1 / 9)
        with pytest.raises(UnsupportedRegimeError):
            alloc.interior_ratio(prob)


class TestOptimizedDelay:
    def test_equals_direct_sum_on_spec_instance(self):
        n = 10**4
        a = 2 * math.log(n) / n
        prob = AllocationProblem(pop=zipf(100, 0.8), n=n, K=1.0, a=a)
        res = solve(prob)
        direct = float(
            np.sum(prob.pop.p * np.maximum(1.0, 1.0 / np.sqrt(a * res.X)))
        )
        assert alloc.optimized_delay(res, prob) == pytest.approx(direct, rel=1e-6)

    def test_equals_direct_sum_on_random_instances(self):
        for prob in random_instances(seed=5150, count=100):
            res = solve(prob)
            direct = float(
                np.sum(
                    prob.pop.p
                    * np.maximum(1.0, 1.0 / np.sqrt(prob.a * (res.X + prob.f)))
                )
            )
            assert alloc.optimized_delay(res, prob) == pytest.approx(
                direct, rel=1e-6
            )

    def test_size_mismatch_rejected(self):
        prob_a = AllocationProblem(pop=zipf(4, 0.0), n=8, K=1.0, a=1 / 16)
        prob_b = AllocationProblem(pop=zipf(5, 0.0), n=10, K=1.0, a=1 / 16)
        res = solve(prob_a)
        with pytest.raises(ValueError):
            alloc.optimized_delay(res, prob_b)


class TestRounding:
    def test_integer_allocation_unchanged(self):
        prob = AllocationProblem(pop=zipf(4, 0.0), n=8, K=1.0, a=1 / 16)
        res = solve(prob)
        assert alloc.round_to_integers(res, prob).tolist() == [2, 2, 2, 2]

    def test_equal_remainders_tie_by_index(self):
        prob = AllocationProblem(pop=zipf(4, 0.0), n=10, K=1.0, a=1 / 16)
        res = solve(prob)
        np.testing.assert_allclose(res.X, [2.5] * 4, rtol=1e-12)
        assert alloc.round_to_integers(res, prob).tolist() == [3, 3, 2, 2]

    def test_fuzz_rounding_preserves_feasibility(self):
        for prob in random_instances(seed=8080, count=300):
            res = solve(prob)
            xi = alloc.round_to_integers(res, prob)
            assert xi.dtype == np.int64
            assert np.all(np.abs(xi - res.X) <= 1.0 + 1e-12)
            assert xi.sum() <= math.floor(prob.budget) + 1e-9
            assert np.all(xi >= math.floor(prob.lower))
            assert np.all(xi <= prob.upper + 1e-12)


class TestProblemValidation:
    def test_ad_hoc_factory(self):
        prob = AllocationProblem.ad_hoc(zipf(3, 1.0), n=10, K=1.0, a=1 / 9)
        assert prob.f == 0.0
        assert prob.lower == 1.0
        assert prob.upper == 9.0
        assert prob.budget == 10.0

    def test_heterogeneous_factory_requires_f_at_least_one(self):
        with pytest.raises(ValueError):
            AllocationProblem.heterogeneous(zipf(3, 1.0), n=10, K=1.0, a=1 / 9, f=0.5)

    def test_field_validation(self):
        pop = zipf(3, 1.0)
        with pytest.raises(ValueError):
            AllocationProblem(pop=pop, n=0, K=1.0, a=1 / 9)
        with pytest.raises(ValueError):
            AllocationProblem(pop=pop, n=10, K=0.0, a=1 / 9)
        with pytest.raises(ValueError):
            AllocationProblem(pop=pop, n=10, K=1.0, a=1.5)
        with pytest.raises(ValueError):
            AllocationProblem(pop=pop, n=10, K=1.0, a=1 / 9, f=-1.0)
        with pytest.raises(ValueError):
            # ad hoc mode must keep at least one copy available
            AllocationProblem(pop=pop, n=10, K=1.0, a=1 / 9, lower=0.5)
