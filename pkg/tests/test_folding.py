import numpy as np
import pytest

from nlhide import (
    DegenerateClassError,
    Ensemble,
    FoldSpec,
    MultiPartyOperator,
    PartySet,
    SlotStructure,
    all_bipartitions,
    coarse_ensemble,
    exact_two_state_curve,
    fold_bound,
    fold_probs,
    is_orthogonal,
    mod_sum,
    q_upper,
    uniform_coarse_ensemble,
)

from oracles import brute_force_fold_probs, dft_fold_probs


def computational_pair(probs=(0.5, 0.5)):
    slots = SlotStructure((2, 1), ("A1", "A2"))
    states = tuple(
        MultiPartyOperator(np.diag([1.0 - b, float(b)]).astype(complex), slots)
        for b in (0, 1)
    )
    return Ensemble(PartySet.of_size(2), probs, states)


class TestModSum:
    def test_examples(self):
        assert mod_sum((1, 1, 1), 2) == 1
        assert mod_sum((1, 2, 2), 3) == 2
        assert mod_sum((), 4) == 0

    def test_entry_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            mod_sum((0, 3), 3)


class TestFoldProbs:
    def test_two_folds(self):
        np.testing.assert_allclose(fold_probs((0.75, 0.25), 2, 2), [0.625, 0.375])

    def test_three_folds(self):
        got = fold_probs((0.75, 0.25), 2, 3)
        np.testing.assert_allclose(got, [0.5625, 0.4375])
        # agrees with the closed-form dominant-class value
        assert got[0] == pytest.approx(0.5 + 0.5 * 0.5**3)

    def test_uniform_fixed_point(self):
        for n in (2, 3, 5):
            got = fold_probs((1.0 / n,) * n, n, 7)
            np.testing.assert_allclose(got, [1.0 / n] * n, atol=1e-14)

    @pytest.mark.parametrize("n,L", [(2, 6), (3, 4), (4, 5)])
    def test_matches_enumeration_oracle(self, n, L):
        rng = np.random.default_rng(n * 10 + L)
        probs = rng.random(n)
        probs /= probs.sum()
        got = fold_probs(probs, n, L)
        np.testing.assert_allclose(got, brute_force_fold_probs(probs, n, L), atol=1e-13)
        assert got.sum() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n,L", [(2, 9), (3, 7), (5, 11)])
    def test_matches_character_sum_oracle(self, n, L):
        rng = np.random.default_rng(n + L)
        probs = rng.random(n)
        probs /= probs.sum()
        np.testing.assert_allclose(
            fold_probs(probs, n, L), dft_fold_probs(probs, n, L), atol=1e-12
        )

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="expected 3"):
            fold_probs((0.5, 0.5), 3, 2)


class TestCoarseEnsemble:
    def test_single_fold_is_identity(self, ghz22):
        coarse = coarse_ensemble(FoldSpec(ghz22, 1))
        assert coarse.probs == ghz22.probs
        for a, b in zip(coarse.states, ghz22.states):
            # weight-in, weight-out normalization costs at most an ulp
            assert float(np.max(np.abs(a.matrix - b.matrix))) <= 1e-15

    def test_two_folds_of_ghz22(self, ghz22):
        coarse = coarse_ensemble(FoldSpec(ghz22, 2))
        assert coarse.dim == 16
        np.testing.assert_allclose(coarse.probs, [0.625, 0.375], atol=1e-14)
        assert is_orthogonal(coarse)
        np.testing.assert_allclose(
            coarse.probs, fold_probs(ghz22.probs, 2, 2), atol=1e-12
        )
        # party bookkeeping: both parties own one slot per fold
        assert coarse.slots.party_of_slot == ("A1", "A2", "A1", "A2")

    def test_degenerate_class_is_an_error(self):
        base = computational_pair(probs=(1.0, 0.0))
        with pytest.raises(DegenerateClassError, match="class 1"):
            coarse_ensemble(FoldSpec(base, 2))

    @pytest.mark.parametrize("L", [1, 2, 3])
    def test_average_state_is_fold_of_average(self, ghz22, L):
        coarse = coarse_ensemble(FoldSpec(ghz22, L))
        avg = sum(p * s.matrix for p, s in zip(coarse.probs, coarse.states))
        base_avg = sum(p * s.matrix for p, s in zip(ghz22.probs, ghz22.states))
        want = np.array([[1.0]], dtype=complex)
        for _ in range(L):
            want = np.kron(want, base_avg)
        assert float(np.max(np.abs(avg - want))) <= 1e-10

    def test_dimension_guard(self, ghz22):
        with pytest.raises(Exception, match="dimension cap"):
            coarse_ensemble(FoldSpec(ghz22, 7))


class TestCurves:
    def test_exact_curve_values(self):
        curve = exact_two_state_curve(0.75, 4)
        np.testing.assert_allclose(curve, [0.75, 0.625, 0.5625, 0.53125])

    def test_exact_curve_degenerate_ends(self):
        assert exact_two_state_curve(0.5, 5) == [0.5] * 5
        assert exact_two_state_curve(1.0, 5) == [1.0] * 5

    def test_exact_curve_domain(self):
        with pytest.raises(ValueError):
            exact_two_state_curve(0.4, 3)
        with pytest.raises(ValueError):
            exact_two_state_curve(0.75, 0)

    def test_fold_bound_values(self):
        assert fold_bound(2, 0.75, 4) == pytest.approx(0.53125)
        assert fold_bound(2, 0.5, 1) == pytest.approx(0.5)
        assert fold_bound(4, 25 / 64, 2) == pytest.approx(0.4873046875)

    def test_fold_bound_floor_rejection(self):
        with pytest.raises(ValueError, match="guessing floor"):
            fold_bound(4, 0.2, 1)

    def test_fold_bound_matches_exact_curve_for_two_states(self):
        # With the base bound equal to the heavy weight the two formulas agree.
        curve = exact_two_state_curve(0.75, 6)
        for L in range(1, 7):
            assert fold_bound(2, 0.75, L) == pytest.approx(curve[L - 1], abs=1e-15)


class TestFoldedSolverAgreement:
    @pytest.mark.parametrize("L", [1, 2, 3])
    def test_solver_matches_exact_curve(self, ghz22, L):
        coarse = coarse_ensemble(FoldSpec(ghz22, L))
        (bp,) = all_bipartitions(coarse.parties)
        result = q_upper(coarse, bp)
        want = exact_two_state_curve(0.75, L)[L - 1]
        assert result.dual_value == pytest.approx(want, abs=1e-6)
        assert result.dual_value <= fold_bound(2, 0.75, L) + 1e-6

    def test_uniform_reweighting(self, ghz22):
        uniform = uniform_coarse_ensemble(FoldSpec(ghz22, 2))
        assert uniform.probs == (0.5, 0.5)
        assert is_orthogonal(uniform)

    def test_uniform_bound_decreases_with_folds(self, ghz22):
        values = []
        for L in (1, 2):
            uniform = uniform_coarse_ensemble(FoldSpec(ghz22, L))
            (bp,) = all_bipartitions(uniform.parties)
            values.append(q_upper(uniform, bp).dual_value)
        assert values[1] < values[0]
