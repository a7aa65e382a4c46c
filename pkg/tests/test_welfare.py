"""Golden values and algebraic properties of the welfare functions."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leximax.welfare import (
    TransferSpec,
    alpha_fairness,
    class_transfer,
    convex_combination,
    fair_count,
    gini,
    group_residual_welfare,
    group_welfare,
    residual_welfare,
    stage_welfare,
)

U1 = [1.0, 2.0, 8.0, 9.0]
U2 = [2.0, 3.0, 7.0, 8.0]
U3 = [1.0, 2.0, 3.0, 12.0]

utilities = st.lists(
    st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False),
    min_size=1, max_size=8,
).map(np.array)


class TestFairCount:
    def test_worked_example(self):
        assert fair_count(U1, 5.0) == 2
        assert fair_count(U3, 5.0) == 3

    def test_all_equal(self):
        for delta in (0.0, 1.0, 100.0):
            assert fair_count([4.0] * 5, delta) == 5

    def test_bounds(self):
        assert fair_count([0.0, 100.0], 0.0) == 1


class TestStageWelfare:
    @pytest.mark.parametrize("u,expected", [
        (U1, (24.0, 15.0, 27.0, 35.0)),
        (U2, (24.0, 18.0, 32.0, 39.0)),
        (U3, (25.0, 16.0, 22.0, 28.0)),
    ])
    def test_worked_example_table(self, u, expected):
        got = tuple(stage_welfare(u, 5.0, k) for k in range(1, 5))
        assert got == expected

    def test_delta_zero_is_total(self):
        assert stage_welfare([3.0, 1.0, 2.0], 0.0) == 6.0

    def test_constant_vector(self):
        # Hinges vanish. Stage 1 keeps its continuity constant (n-1)*delta;
        # stages k >= 2 sum weights n..n-k+1 times c.
        n, c, delta = 5, 3.0, 2.0
        assert stage_welfare([c] * n, delta, 1) == pytest.approx((n - 1) * delta + n * c)
        for k in range(2, n + 1):
            expected = c * sum(n - i + 1 for i in range(1, k + 1))
            assert stage_welfare([c] * n, delta, k) == pytest.approx(expected)

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            stage_welfare(U1, 5.0, 5)
        with pytest.raises(ValueError):
            stage_welfare(U1, 5.0, 0)

    @given(utilities, st.floats(min_value=0, max_value=30))
    @settings(max_examples=60, deadline=None)
    def test_permutation_symmetry(self, u, delta):
        rng = np.random.default_rng(0)
        perm = rng.permutation(u.size)
        for k in range(1, u.size + 1):
            assert stage_welfare(u, delta, k) == pytest.approx(
                stage_welfare(u[perm], delta, k), abs=1e-9
            )

    @given(utilities, st.floats(min_value=0, max_value=30),
           st.floats(min_value=-20, max_value=20))
    @settings(max_examples=60, deadline=None)
    def test_translation_covariance(self, u, delta, shift):
        n = u.size
        assert stage_welfare(u + shift, delta, 1) == pytest.approx(
            stage_welfare(u, delta, 1) + n * shift, abs=1e-7
        )

    @given(utilities, st.floats(min_value=0, max_value=30), st.data())
    @settings(max_examples=60, deadline=None)
    def test_lipschitz_3n(self, u, delta, data):
        n = u.size
        noise = np.array(data.draw(st.lists(
            st.floats(min_value=-5, max_value=5), min_size=n, max_size=n)))
        for k in range(1, n + 1):
            diff = abs(stage_welfare(u + noise, delta, k) - stage_welfare(u, delta, k))
            assert diff <= 3 * n * (np.abs(noise).max() + 1e-12) + 1e-7

    @given(utilities, st.floats(min_value=0, max_value=30), st.data())
    @settings(max_examples=60, deadline=None)
    def test_monotone_per_coordinate(self, u, delta, data):
        i = data.draw(st.integers(min_value=0, max_value=u.size - 1))
        bump = data.draw(st.floats(min_value=0, max_value=10))
        v = u.copy()
        v[i] += bump
        assert stage_welfare(v, delta, 1) >= stage_welfare(u, delta, 1) - 1e-9

    def test_pigou_dalton_violation_witness(self):
        # Single-pair rich-to-poor transfer that strictly lowers stage-1
        # welfare: (0,2,6) -> (0,4,4) with delta=3 drops 9 -> 8.
        before = stage_welfare([0.0, 2.0, 6.0], 3.0)
        after = stage_welfare([0.0, 4.0, 4.0], 3.0)
        assert before == 9.0 and after == 8.0
        assert after < before


class TestResidualWelfare:
    def test_worked_example_derived(self):
        # Constant-shift identity against the published stage values.
        assert residual_welfare([2.0, 8.0, 9.0], [1.0], 5.0) == pytest.approx(11.0)
        assert residual_welfare([8.0, 9.0], [1.0, 2.0], 5.0) == pytest.approx(17.0)

    def test_all_equal_within_fair_region(self):
        # Unfixed all c inside the fair region: value is (n-k+1)*c.
        assert residual_welfare([4.0, 4.0, 4.0], [3.0], 2.0) == pytest.approx(12.0)

    def test_constant_shift_identity_random(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            n = rng.integers(2, 8)
            u = np.round(rng.uniform(0, 20, n), 3)
            delta = float(rng.uniform(0, 25))
            order = np.argsort(u, kind="stable")
            for k in range(2, n + 1):
                fixed = [float(u[i]) for i in order[: k - 1]]
                rest = u[order[k - 1:]]
                lead = sum((n - j + 1) * fixed[j - 1] for j in range(1, k))
                assert stage_welfare(u, delta, k) == pytest.approx(
                    residual_welfare(rest, fixed, delta) + lead, abs=1e-8
                )

    def test_precondition_violations(self):
        with pytest.raises(ValueError):
            residual_welfare([1.0], [2.0], 1.0)  # unfixed below last fixed
        with pytest.raises(ValueError):
            residual_welfare([5.0], [3.0, 2.0], 1.0)  # fixed not sorted

    def test_monotone_in_unfixed(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            rest = np.sort(rng.uniform(2, 10, 4))
            fixed = [1.0, 2.0]
            delta = float(rng.uniform(0, 8))
            bumped = rest.copy()
            bumped[rng.integers(0, 4)] += rng.uniform(0, 3)
            assert group_residual_welfare(bumped, [1, 1, 1, 1], fixed, delta) >= \
                group_residual_welfare(rest, [1, 1, 1, 1], fixed, delta) - 1e-9


class TestGroupWelfare:
    def test_unit_sizes_reduce(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            u = rng.uniform(0, 10, 5)
            delta = float(rng.uniform(0, 10))
            assert group_welfare(u, np.ones(5, int), delta) == pytest.approx(
                stage_welfare(u, delta, 1)
            )

    def test_zero_vector(self):
        # Every hinge vanishes: (N-1)*delta remains.
        assert group_welfare([0.0, 0.0, 0.0], [2, 3, 4], 1.5) == pytest.approx(8 * 1.5)

    def test_direct_example(self):
        assert group_welfare([0.0, 1.0, 2.0], [1, 2, 3], 3.0) == pytest.approx(15.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            group_welfare([1.0, 2.0], [1, 2, 3], 1.0)

    def test_group_residual_example(self):
        got = group_residual_welfare([1.0, 2.0], [2, 3], [0.0], 3.0)
        assert got == pytest.approx(5.0)

    def test_group_residual_unit_reduction(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            rest = np.sort(rng.uniform(3, 12, 4))
            fixed = [1.0, 2.5]
            delta = float(rng.uniform(0, 10))
            assert group_residual_welfare(rest, [1] * 4, fixed, delta) == \
                pytest.approx(residual_welfare(rest, fixed, delta))

    def test_group_translation_covariance(self):
        rest = np.array([4.0, 6.0, 9.0])
        sizes = np.array([2, 1, 3])
        fixed = [2.0, 3.0]
        c = 1.75
        base = group_residual_welfare(rest, sizes, fixed, 2.0)
        shifted = group_residual_welfare(rest + c, sizes, [f + c for f in fixed], 2.0)
        assert shifted == pytest.approx(base + sizes.sum() * c)


class TestGini:
    def test_perfect_equality(self):
        assert gini([1.0, 1.0, 1.0]) == 0.0

    def test_two_party(self):
        assert gini([0.0, 1.0]) == pytest.approx(0.5)

    def test_one_party_takes_all(self):
        # Verbatim pairwise-difference formula gives (n-1)/n, not 1.
        assert gini([0.0, 0.0, 1.0]) == pytest.approx(2.0 / 3.0)

    def test_requires_positive_total(self):
        with pytest.raises(ValueError):
            gini([0.0, 0.0])

    @given(st.lists(st.floats(min_value=0.01, max_value=50), min_size=2, max_size=8))
    @settings(max_examples=50, deadline=None)
    def test_range(self, u):
        g = gini(u)
        n = len(u)
        assert -1e-12 <= g <= (n - 1) / n + 1e-12


class TestAlphaFairness:
    def test_utilitarian_at_zero(self):
        assert alpha_fairness([2.0, 3.0], 0.0) == pytest.approx(5.0)

    def test_log_at_one(self):
        assert alpha_fairness([1.0, 1.0], 1.0) == 0.0

    def test_alpha_two(self):
        assert alpha_fairness([1.0, 2.0], 2.0) == pytest.approx(-1.5)

    def test_domain_violation(self):
        with pytest.raises(ValueError):
            alpha_fairness([0.0, 1.0], 1.0)


class TestConvexCombination:
    def test_pure_utilitarian(self):
        assert convex_combination([1.0, 4.0], 0.0) == pytest.approx(5.0)

    def test_pure_maximin(self):
        assert convex_combination([1.0, 4.0], 1.0, "maximin") == pytest.approx(1.0)

    def test_half(self):
        assert convex_combination([2.0, 6.0], 0.5, "maximin") == pytest.approx(5.0)

    def test_gini_kind_domain(self):
        with pytest.raises(ValueError):
            convex_combination([0.0, 0.0], 0.5, "one_minus_gini")


class TestClassTransfer:
    def test_worked_example(self):
        out = class_transfer(U1, TransferSpec(2, 3, 2.0))
        assert np.allclose(out, [2.0, 3.0, 7.0, 8.0])

    def test_two_party(self):
        out = class_transfer([0.0, 10.0], TransferSpec(1, 2, 4.0))
        assert np.allclose(out, [4.0, 6.0])

    def test_total_preserved(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            u = np.sort(rng.uniform(0, 10, 6))
            gaps = np.diff(u)
            if not np.any(gaps > 0):
                continue
            # One tenth of the smallest positive gap always keeps the sort.
            spec = TransferSpec(1, 6, 0.1 * float(gaps[gaps > 0].min()))
            out = class_transfer(u, spec)
            assert out.sum() == pytest.approx(u.sum())
            assert np.all(np.diff(out) >= 0)

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            class_transfer([2.0, 1.0], TransferSpec(1, 2, 0.1))

    def test_rejects_equal_classes(self):
        with pytest.raises(ValueError):
            class_transfer([1.0, 1.0, 5.0], TransferSpec(1, 2, 0.1))

    def test_rejects_sort_breaking_amount(self):
        with pytest.raises(ValueError):
            class_transfer([1.0, 2.0, 8.0, 9.0], TransferSpec(2, 3, 50.0))

    def test_welfare_never_drops_on_transfer(self):
        # The published example transfer: stage values 24,15,27,35 -> 24,18,32,39.
        before = [stage_welfare(U1, 5.0, k) for k in range(1, 5)]
        after = [stage_welfare(U2, 5.0, k) for k in range(1, 5)]
        assert before == [24.0, 15.0, 27.0, 35.0]
        assert after == [24.0, 18.0, 32.0, 39.0]
        assert all(a >= b for a, b in zip(after, before))
