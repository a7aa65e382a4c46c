"""Model builders: structure, fidelity spot checks, cuts, tie-breaking."""

import numpy as np
import pytest

from leximax.encodings import (
    TradeoffParams,
    add_tiebreak,
    add_valid_cuts,
    compute_big_m,
    stage_k_model,
    stage_one_model,
)
from leximax.sequence import AllocationInstance, SequentialState
from leximax.model import FeasibleSetSpec, SymRow
from leximax.solver import SolverConfig, solve, solve_relaxation
from leximax.welfare import group_residual_welfare, residual_welfare


def pin_all(model, u):
    for i, val in enumerate(u):
        model.pin(f"u_{i + 1}", float(val))
    return model


def prefix_state(u, delta, big_m, k):
    order = np.argsort(u, kind="stable")
    fixed = [int(i) for i in order[: k - 1]]
    return SequentialState(
        k=k, fixed_idx=fixed, fixed_val=[float(u[i]) for i in fixed],
        remaining=[int(i) for i in order[k - 1:]], delta=delta, big_m=big_m,
    )


class TestParams:
    def test_big_m_must_exceed_delta(self):
        with pytest.raises(ValueError):
            TradeoffParams(delta=5.0, big_m=5.0)

    def test_negative_delta_rejected(self):
        with pytest.raises(ValueError):
            TradeoffParams(delta=-1.0)

    def test_bad_tiebreak(self):
        with pytest.raises(ValueError):
            TradeoffParams(delta=1.0, tie_break="both")


class TestStageOne:
    def test_structure_n2(self):
        model = stage_one_model(2, None, TradeoffParams(delta=3.0, big_m=100.0))
        names = {v.name for v in model.variables}
        assert names == {"z", "u_1", "u_2", "v_1", "v_2", "w", "out_1", "out_2"}
        assert len(model.rows) == 9  # 1 + 4n
        assert len(model.binary_indices) == 2

    def test_row_count_scales(self):
        for n in (1, 3, 6):
            model = stage_one_model(n, None, TradeoffParams(delta=1.0, big_m=10.0))
            assert len(model.rows) == 1 + 4 * n

    def test_boxed_optimum(self):
        # Brute-force reference over the box grid picks the top corner.
        from leximax.welfare import stage_welfare

        best = max(
            stage_welfare([a, b], 3.0)
            for a in np.linspace(0, 10, 21) for b in np.linspace(0, 10, 21)
        )
        assert best == pytest.approx(23.0)
        model = stage_one_model(2, None, TradeoffParams(delta=3.0, big_m=100.0))
        model.add_row({"u_1": 1.0}, "<=", 10.0)
        model.add_row({"u_2": 1.0}, "<=", 10.0)
        sol = solve(model)
        assert sol.status == "Optimal"
        assert sol.objective == pytest.approx(23.0, abs=1e-7)
        assert sol.values["u_1"] == pytest.approx(10.0, abs=1e-7)
        assert sol.values["u_2"] == pytest.approx(10.0, abs=1e-7)

    def test_pinned_worked_example(self):
        model = stage_one_model(4, None, TradeoffParams(delta=5.0, big_m=100.0))
        pin_all(model, [1.0, 2.0, 8.0, 9.0])
        assert solve(model).objective == pytest.approx(24.0, abs=1e-8)


class TestStageK:
    def test_pinned_worked_example(self):
        params = TradeoffParams(delta=5.0, big_m=100.0)
        u = np.array([1.0, 2.0, 8.0, 9.0])
        for k, expected in ((2, 11.0), (3, 17.0)):
            state = prefix_state(u, 5.0, 100.0, k)
            model = pin_all(stage_k_model(state, None, params), u)
            assert solve(model).objective == pytest.approx(expected, abs=1e-8)

    def test_single_remaining_party(self):
        # |I_k| = 1: the one min-pick binary is forced to 1.
        params = TradeoffParams(delta=5.0, big_m=100.0)
        u = np.array([1.0, 2.0, 8.0, 9.0])
        state = prefix_state(u, 5.0, 100.0, 4)
        model = pin_all(stage_k_model(state, None, params), u)
        sol = solve(model)
        assert sol.status == "Optimal"
        assert sol.values["min_4"] == pytest.approx(1.0)

    def test_requires_k_at_least_two(self):
        state = SequentialState(1, [], [], [0, 1], 1.0, 10.0)
        with pytest.raises(ValueError):
            stage_k_model(state, None, TradeoffParams(delta=1.0, big_m=10.0))

    def test_unit_group_equivalence(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            n = int(rng.integers(2, 6))
            u = np.round(rng.uniform(0, 15, n), 2)
            delta = float(rng.uniform(0, 10))
            big_m = 40.0
            params = TradeoffParams(delta=delta, big_m=big_m)
            m_unit = pin_all(stage_one_model(n, None, params), u)
            m_ones = pin_all(stage_one_model(n, np.ones(n, int), params), u)
            assert solve(m_unit).objective == pytest.approx(
                solve(m_ones).objective, abs=1e-8
            )
            for k in range(2, n + 1):
                state = prefix_state(u, delta, big_m, k)
                a = pin_all(stage_k_model(state, None, params), u)
                b = pin_all(stage_k_model(state, np.ones(n, int), params), u)
                assert solve(a).objective == pytest.approx(
                    solve(b).objective, abs=1e-8
                )

    def test_group_fidelity_spot(self):
        params = TradeoffParams(delta=3.0, big_m=50.0)
        u = np.array([0.0, 1.0, 2.0])
        sizes = np.array([1, 2, 3])
        state = prefix_state(u, 3.0, 50.0, 2)
        model = pin_all(stage_k_model(state, sizes, params), u)
        expected = group_residual_welfare(u[state.remaining], sizes[state.remaining],
                                          state.fixed_val, 3.0)
        assert expected == pytest.approx(5.0)
        assert solve(model).objective == pytest.approx(5.0, abs=1e-8)


class TestValidCuts:
    def test_beta_equal_prefix(self):
        # With one fixed value the coefficient reduces to 1 - delta/M.
        params = TradeoffParams(delta=5.0, big_m=100.0)
        state = SequentialState(2, [0], [1.0], [1, 2, 3], 5.0, 100.0)
        model = stage_k_model(state, None, params)
        cut = add_valid_cuts(model, state, None, params)
        row = next(r for r in cut.rows if r.name == "cut_2")
        u3 = cut.index_of("u_3")
        beta = -row.coeffs[u3]
        assert beta == pytest.approx(1 - 5.0 / 100.0)

    def test_feasible_point_satisfies_cuts(self):
        params = TradeoffParams(delta=5.0, big_m=100.0)
        u = np.array([1.0, 2.0, 8.0, 9.0])
        state = prefix_state(u, 5.0, 100.0, 2)
        model = add_valid_cuts(stage_k_model(state, None, params), state, None, params)
        values = {f"u_{i + 1}": float(u[i]) for i in range(4)}
        values["z"] = residual_welfare(u[state.remaining], state.fixed_val, 5.0)
        assert values["z"] == pytest.approx(11.0)
        for row in model.rows:
            if row.name.startswith("cut"):
                lhs = sum(c * values[model.variables[i].name]
                          for i, c in row.coeffs.items())
                assert lhs <= row.rhs + 1e-9

    def test_lp_bound_never_loosened(self):
        rng = np.random.default_rng(77)
        for _ in range(50):
            n = int(rng.integers(2, 6))
            u = np.round(rng.uniform(0, 20, n), 2)
            delta = float(rng.uniform(0, 8))
            params = TradeoffParams(delta=delta, big_m=60.0)
            k = int(rng.integers(2, n + 1))
            state = prefix_state(u, delta, 60.0, k)
            plain = pin_all(stage_k_model(state, None, params), u)
            cut = add_valid_cuts(plain, state, None, params)
            assert solve_relaxation(cut).objective <= \
                solve_relaxation(plain).objective + 1e-9

    def test_denominator_guard(self):
        params = TradeoffParams(delta=1.0, big_m=3.0)
        state = SequentialState(2, [0], [0.0], [1, 2], 1.0, 3.0)
        bad = SequentialState(3, [0, 1], [0.0, 5.0], [2], 1.0, 3.0)
        model = stage_k_model(state, None, params)
        with pytest.raises(ValueError):
            add_valid_cuts(model, bad, None, params)


class TestTiebreak:
    def test_hierarchical_prefers_higher_total(self):
        # Two stage-1 optima (welfare 10 each) with totals 10 vs 6.
        from leximax.reference import ExplicitSet, explicit_instance
        from leximax.sequence import run_sequence

        exset = ExplicitSet(np.array([[0.0, 10.0], [3.0, 3.0]]))
        inst = explicit_instance(exset)
        out = run_sequence(inst, TradeoffParams(delta=4.0, tie_break="hierarchical"))
        assert out.iterations[0].z == pytest.approx(10.0)
        assert np.allclose(np.sort(out.iterations[0].utilities), [0.0, 10.0])

    def test_hierarchical_keeps_unique_optimum(self):
        params = TradeoffParams(delta=3.0, big_m=100.0)
        model = stage_one_model(2, None, params)
        model.add_row({"u_1": 1.0}, "<=", 4.0)
        model.add_row({"u_2": 1.0}, "<=", 9.0)
        base = solve(model)
        refined = solve(add_tiebreak(model, base.objective, None, params))
        assert refined.values["u_1"] == pytest.approx(base.values["u_1"], abs=1e-6)
        assert refined.values["u_2"] == pytest.approx(base.values["u_2"], abs=1e-6)

    def test_epsilon_zero_matches_plain_optimum(self):
        params = TradeoffParams(delta=3.0, big_m=100.0, tie_break="epsilon",
                                epsilon=0.0)
        model = stage_one_model(2, None, params)
        model.add_row({"u_1": 1.0}, "<=", 10.0)
        model.add_row({"u_2": 1.0}, "<=", 10.0)
        plain = solve(model)
        eps = solve(add_tiebreak(model, None, None, params))
        assert eps.objective == pytest.approx(plain.objective, abs=1e-9)

    def test_hierarchical_requires_zstar(self):
        params = TradeoffParams(delta=3.0, big_m=100.0)
        model = stage_one_model(2, None, params)
        with pytest.raises(ValueError):
            add_tiebreak(model, None, None, params)


class TestBigM:
    def make_instance(self, lo, hi):
        spec = FeasibleSetSpec(1, rows=(SymRow({"u_1": 1.0}, "<=", hi, "box"),))
        return AllocationInstance("explicit", spec, np.ones(1, int), lo, hi)

    def test_policy_formula(self):
        inst = self.make_instance(0.0, 10.0)
        assert compute_big_m(inst, TradeoffParams(delta=3.0)) == pytest.approx(11.01)

    def test_delta_dominates(self):
        inst = self.make_instance(0.0, 0.0)
        assert compute_big_m(inst, TradeoffParams(delta=5.0)) == pytest.approx(6.005)

    def test_exceeds_delta_and_range(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            lo, width = rng.uniform(0, 5), rng.uniform(0, 30)
            delta = float(rng.uniform(0, 40))
            inst = self.make_instance(lo, lo + width)
            m = compute_big_m(inst, TradeoffParams(delta=delta))
            assert m > delta and m > width
