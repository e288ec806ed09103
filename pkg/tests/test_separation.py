import dataclasses

import numpy as np
import pytest

from fwcuts.errors import DimensionMismatchError, UndefinedBoundError
from fwcuts.lp import membership_test
from fwcuts.oracles import EnumerationOracle, KnapsackOracle, KnapsackSubproblem
from fwcuts.separation import (
    ActiveSet,
    ConvergenceBound,
    FwConfig,
    Membership,
    Separated,
    early_stop_check,
    fw_gap,
    iteration_bound,
    separate_lazy_afw,
    separate_vanilla,
)

from conftest import (
    brute_force_min,
    feasible_points,
    hull_projection,
    random_knapsack,
    squared_diameter,
)


def make_oracle(weights, capacity):
    return KnapsackOracle(KnapsackSubproblem.plain(weights, capacity))


def cut_is_valid(cut, weights, capacity, tol=1e-9):
    V = feasible_points(weights, capacity)
    return float(np.max(V @ cut.alpha)) <= cut.beta + tol


class TestFwGap:
    def test_zero_at_a_matched_vertex(self):
        v = np.array([1.0, 0.0])
        assert fw_gap(v, v, v) == 0.0

    def test_unit_square_value(self):
        # over the 4 square vertices, (0,1) minimizes <(0.5,-0.5), .>
        square = feasible_points([0, 0], 0)
        _, argmin = brute_force_min(square, np.array([0.5, -0.5]))
        assert np.array_equal(argmin, [0, 1])
        assert fw_gap([1.0, 0.0], [0.5, 0.5], argmin) == 1.0

    def test_constrained_square(self):
        pts = feasible_points([1, 1], 1)
        assert len(pts) == 3
        _, argmin = brute_force_min(pts, np.array([-0.25, 0.0]))
        assert np.array_equal(argmin, [1, 0]) or np.array_equal(argmin, [0, 0])
        # gradient at iterate (0,0) is (-0.25, 0); its oracle answer is (1,0)
        _, v = brute_force_min(pts, np.array([0.0, 0.0]) - np.array([0.25, 0.0]))
        assert fw_gap([0.0, 0.0], [0.25, 0.0], [0.0, 0.0]) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            fw_gap([0.0, 1.0], [0.0], [0.0, 1.0])


class TestEarlyStopCheck:
    def test_unit_interval_example(self):
        fires, cut = early_stop_check(np.array([1.0]), np.array([1.5]), np.array([1.0]))
        assert fires
        assert np.allclose(cut.alpha, [0.5]) and cut.beta == pytest.approx(0.5)
        for v in (0.0, 1.0):  # valid on both vertices of {0,1}
            assert cut.alpha[0] * v <= cut.beta + 1e-12
        assert cut.violation_at_target == pytest.approx(0.25)
        assert cut.violation_at_target >= 0.5 * 0.25 - 1e-12

    def test_does_not_fire_without_margin(self):
        # gap equals the half squared distance exactly: must not fire
        assert fw_gap([0.0], [1.0], [0.5]) == 0.5 * 1.0
        fires, cut = early_stop_check(np.array([0.0]), np.array([1.0]), np.array([0.5]))
        assert not fires and cut is None

    def test_interior_target_never_separates(self, rng):
        for _ in range(20):
            w, cap = random_knapsack(rng, k_max=8)
            V = feasible_points(w, cap)
            lam = rng.dirichlet(np.ones(min(len(V), 4)))
            picks = rng.choice(len(V), size=len(lam), replace=False)
            target = lam @ V[picks]
            out = separate_lazy_afw(target, make_oracle(w, cap))
            assert isinstance(out.result, Membership)

    def test_knapsack_run_until_fires(self):
        w, cap = [2, 3, 4], 5
        out = separate_lazy_afw(np.array([1.0, 1.0, 1.0]), make_oracle(w, cap))
        assert isinstance(out.result, Separated)
        assert out.stats.stop_reason == "early-criterion"
        cut = out.result.cut
        assert cut_is_valid(cut, w, cap)
        assert cut.violation_at_target >= out.stats.final_f - 1e-9


class TestIterationBound:
    def test_unit_case(self):
        assert iteration_bound(1.0, 1.0) == 5

    def test_arithmetic(self):
        assert iteration_bound(2.0, 0.5) == 29

    def test_zero_distance_is_undefined(self):
        with pytest.raises(UndefinedBoundError):
            iteration_bound(1.0, 0.0)

    def test_floor_at_one(self):
        assert iteration_bound(1.0, 100.0) == 1

    def test_bound_dataclass(self):
        assert ConvergenceBound(diameter_sq=2.0, dist_sq=0.5).T == 29


class TestVanilla:
    def test_feasible_vertex_is_membership(self):
        w, cap = [2, 3, 4], 5
        out = separate_vanilla(np.array([1.0, 1.0, 0.0]), make_oracle(w, cap))
        assert isinstance(out.result, Membership)
        assert out.stats.stop_reason == "zero-gradient"
        assert out.stats.iterations == 0

    def test_one_dimensional_bound(self):
        # hull of {0, 1}: diameter^2 = 1; target 2 has distance^2 = 1
        config = FwConfig(step_rule="agnostic")
        out = separate_vanilla(np.array([2.0]), make_oracle([1], 1), config)
        assert isinstance(out.result, Separated)
        assert out.stats.iterations <= iteration_bound(1.0, 1.0) == 5

    def test_midpoint_of_two_vertices_is_membership(self):
        out = separate_vanilla(np.array([0.5, 0.5]), make_oracle([1, 1], 2))
        assert isinstance(out.result, Membership)

    def test_gap_tolerance_mode(self):
        config = FwConfig(early_termination=False)
        out = separate_vanilla(np.array([1.0, 1.0, 1.0]), make_oracle([2, 3, 4], 5), config)
        assert isinstance(out.result, Separated)
        assert out.stats.stop_reason == "gap-tolerance"
        assert cut_is_valid(out.result.cut, [2, 3, 4], 5)


class TestLazyAfw:
    def test_inside_target_from_convex_combination(self, rng):
        w = rng.integers(1, 15, size=8)
        cap = int(0.5 * w.sum())
        V = feasible_points(w, cap)
        picks = rng.choice(len(V), size=5, replace=False)
        target = rng.dirichlet(np.ones(5)) @ V[picks]
        out = separate_lazy_afw(target, make_oracle(w, cap))
        assert isinstance(out.result, Membership)
        assert out.result.final_f < 1e-9

    def test_all_ones_outside(self, rng):
        for _ in range(10):
            w = rng.integers(1, 12, size=int(rng.integers(3, 13)))
            cap = int(0.6 * w.sum())
            target = np.ones(len(w))
            out = separate_lazy_afw(target, make_oracle(w, cap))
            assert isinstance(out.result, Separated)
            assert cut_is_valid(out.result.cut, w, cap)

    def test_bit_identical_reruns(self):
        target = np.array([0.9, 0.8, 0.7, 0.4])
        oracle = make_oracle([3, 5, 4, 2], 8)
        a = separate_lazy_afw(target, oracle)
        b = separate_lazy_afw(target, oracle)
        assert a.stats == b.stats
        assert type(a.result) is type(b.result)
        if isinstance(a.result, Separated):
            assert np.array_equal(a.result.cut.alpha, b.result.cut.alpha)
            assert a.result.cut.beta == b.result.cut.beta
            assert a.result.cut.violation_at_target == b.result.cut.violation_at_target

    def test_no_lazy_variant_agrees_on_verdict(self, rng):
        for _ in range(10):
            w, cap = random_knapsack(rng, k_max=9)
            target = rng.uniform(-0.2, 1.2, size=len(w))
            lazy = separate_lazy_afw(target, make_oracle(w, cap))
            plain = separate_lazy_afw(target, make_oracle(w, cap), FwConfig(use_lazy=False))
            assert lazy.is_membership == plain.is_membership
            if plain.is_separated:
                assert cut_is_valid(plain.result.cut, w, cap)

    def test_monotone_progress_on_non_dual_steps(self, rng):
        config = FwConfig(record_trace=True)
        for _ in range(15):
            w, cap = random_knapsack(rng, k_max=10)
            target = rng.uniform(-0.3, 1.3, size=len(w))
            out = separate_lazy_afw(target, make_oracle(w, cap), config)
            trace = out.stats.trace
            for (f_now, kind), (f_next, _) in zip(trace, trace[1:]):
                if kind != "dual":
                    assert f_next <= f_now + 1e-12

    def test_validity_and_violation_margin(self, rng):
        separated = 0
        for _ in range(60):
            w, cap = random_knapsack(rng, k_max=10)
            target = rng.uniform(-0.3, 1.3, size=len(w))
            out = separate_lazy_afw(target, make_oracle(w, cap))
            if not isinstance(out.result, Separated):
                continue
            separated += 1
            cut = out.result.cut
            assert cut_is_valid(cut, w, cap)
            if out.stats.stop_reason == "early-criterion":
                assert cut.violation_at_target >= out.stats.final_f - 1e-9
        assert separated > 10

    def test_membership_soundness_against_exact_lp(self, rng):
        for _ in range(25):
            w, cap = random_knapsack(rng, k_max=9)
            target = rng.uniform(0.0, 1.0, size=len(w))
            out = separate_lazy_afw(target, make_oracle(w, cap))
            V = feasible_points(w, cap)
            exact = membership_test(target, V)
            if isinstance(out.result, Membership):
                # distance can be at most sqrt(2 eps)
                assert exact.distance_lb <= np.sqrt(2e-9) + 1e-9
            elif exact.inside:
                pytest.fail("separator cut off a point inside the hull")

    def test_target_dimension_validated(self):
        with pytest.raises(DimensionMismatchError):
            separate_lazy_afw(np.ones(4), make_oracle([1, 2], 2))


class TestActiveSetInvariants:
    def test_random_update_sequences_stay_consistent(self, rng):
        for _ in range(30):
            k = int(rng.integers(2, 8))
            aset = ActiveSet(rng.integers(0, 2, size=k).astype(float))
            reference = {tuple(v): lam for lam, v in [(1.0, tuple(aset.vertex(0)))]}
            for _ in range(60):
                if rng.random() < 0.6 or len(aset) == 1:
                    gamma = float(rng.uniform(0.0, 1.0))
                    aset.fw_update(gamma, rng.integers(0, 2, size=k).astype(float))
                else:
                    i = int(rng.integers(0, len(aset)))
                    lam = aset.weight(i)
                    gamma_max = lam / (1.0 - lam) if lam < 1.0 else 0.0
                    aset.away_update(float(rng.uniform(0.0, gamma_max)), i)
                weights = [wt for wt, _ in aset.entries]
                assert abs(sum(weights) - 1.0) <= 1e-9
                recombined = sum(wt * v for wt, v in aset.entries)
                assert np.allclose(recombined, aset.iterate, atol=1e-9)
                vertices = [tuple(v) for _, v in aset.entries]
                assert len(set(vertices)) == len(vertices)  # pairwise distinct


def test_gradient_matches_central_differences(rng):
    # f(y) = 0.5 ||y - x||^2 and its gradient y - x, checked by finite differences
    h = 1e-6
    for _ in range(100):
        k = int(rng.integers(1, 12))
        x = rng.normal(size=k)
        y = rng.normal(size=k)

        def f(z):
            return 0.5 * float((z - x) @ (z - x))

        grad = y - x
        for i in rng.choice(k, size=min(3, k), replace=False):
            e = np.zeros(k)
            e[i] = h
            fd = (f(y + e) - f(y - e)) / (2 * h)
            denom = max(1.0, abs(grad[i]))
            assert abs(fd - grad[i]) / denom < 1e-6


def test_vanilla_bound_smoke(rng):
    # small version of the worst-case certification bound check
    config = FwConfig(step_rule="agnostic")
    checked = 0
    while checked < 15:
        w, cap = random_knapsack(rng, k_min=2, k_max=8)
        V = feasible_points(w, cap)
        if len(V) < 2:
            continue
        target = rng.uniform(-0.4, 1.4, size=len(w))
        _, dist = hull_projection(target, V)
        if dist < 0.2:
            continue
        checked += 1
        out = separate_vanilla(target, make_oracle(w, cap), config)
        assert isinstance(out.result, Separated)
        assert out.stats.stop_reason == "early-criterion"
        T = iteration_bound(squared_diameter(V), dist * dist)
        assert out.stats.iterations <= T
