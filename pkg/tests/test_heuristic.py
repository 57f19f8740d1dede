import pickle

import numpy as np
import pytest

from ratecraft.core import QuestionBank, QuestionDistribution, StepBeta
from ratecraft.heuristic import (
    FitError,
    MixtureBeta,
    fit_h,
    induced_beta,
    l1_gap,
    naive_uniform_h,
)
from ratecraft.responses import PsiInterpolator


def simplex_grid_minimum(bank, beta, resolution=100):
    """Brute-force minimum of the fit objective over a simplex grid."""
    target = np.asarray(beta(np.asarray(bank.thetas)))
    n = bank.n_questions
    assert n == 4, "oracle written for four questions"
    idx = np.indices((resolution + 1,) * 3).reshape(3, -1)
    keep = idx.sum(axis=0) <= resolution
    idx = idx[:, keep]
    h = np.vstack([idx, resolution - idx.sum(axis=0)]) / resolution
    mixes = h.T @ bank.psi.T
    return float(np.abs(mixes - target).sum(axis=1).min())


class TestFitH:
    def test_threshold_case_exact_uniform(self, threshold_bank, quartile_beta):
        h = fit_h(quartile_beta, threshold_bank)
        assert h.objective == pytest.approx(0.0, abs=1e-9)
        assert h.probabilities == pytest.approx((1 / 3,) * 3, abs=1e-9)

    def test_single_question_bank(self):
        bank = QuestionBank((0.2, 0.8), ("only",), np.array([[0.3], [0.7]]))
        beta = StepBeta((0.0, 0.5, 1.0), (0.1, 0.9))
        h = fit_h(beta, bank)
        assert h.probabilities == (1.0,)
        assert h.objective == pytest.approx(
            abs(0.1 - 0.3) + abs(0.9 - 0.7), abs=1e-12
        )

    def test_lp_beats_simplex_grid_within_slack(self, random_bank):
        beta = StepBeta((0.0, 0.3, 0.6, 1.0), (0.1, 0.5, 0.9))
        h = fit_h(beta, random_bank)
        grid_min = simplex_grid_minimum(random_bank, beta)
        assert h.objective <= grid_min + 1e-12
        assert h.objective >= grid_min - 0.02

    def test_lp_dominates_every_vertex(self, random_bank):
        beta = StepBeta((0.0, 0.5, 1.0), (0.2, 0.8))
        h = fit_h(beta, random_bank)
        target = np.asarray(beta(np.asarray(random_bank.thetas)))
        for col in range(random_bank.n_questions):
            vertex = np.abs(target - random_bank.psi[:, col]).sum()
            assert h.objective <= vertex + 1e-12

    def test_single_question_is_best_vertex(self, random_bank):
        beta = StepBeta((0.0, 0.5, 1.0), (0.2, 0.8))
        h = fit_h(beta, random_bank, constraint="single_question")
        target = np.asarray(beta(np.asarray(random_bank.thetas)))
        gaps = np.abs(target[:, None] - random_bank.psi).sum(axis=0)
        best = int(np.argmin(gaps))
        assert h.probabilities[best] == 1.0
        assert h.objective == pytest.approx(float(gaps[best]), abs=1e-12)

    def test_single_question_tie_takes_lowest_index(self):
        psi = np.array([[0.2, 0.2], [0.9, 0.9]])
        bank = QuestionBank((0.3, 0.7), ("first", "second"), psi)
        beta = StepBeta((0.0, 0.5, 1.0), (0.1, 0.8))
        h = fit_h(beta, bank, constraint="single_question")
        assert h.probabilities == (1.0, 0.0)

    def test_restricting_never_helps(self, random_bank):
        beta = StepBeta((0.0, 0.4, 1.0), (0.15, 0.85))
        free = fit_h(beta, random_bank)
        single = fit_h(beta, random_bank, constraint="single_question")
        assert single.objective >= free.objective - 1e-12

    def test_simplex_constraints_exact(self, random_bank):
        beta = StepBeta((0.0, 0.5, 1.0), (0.0, 1.0))
        h = fit_h(beta, random_bank)
        assert abs(sum(h.probabilities) - 1.0) <= 1e-12
        assert all(p >= 0.0 for p in h.probabilities)

    def test_objective_matches_l1_gap_of_own_output(self, random_bank):
        beta = StepBeta((0.0, 0.3, 1.0), (0.2, 0.9))
        h = fit_h(beta, random_bank)
        assert l1_gap(beta, h, random_bank) == pytest.approx(
            h.objective, abs=1e-10
        )

    def test_theta_weights_change_the_tradeoff(self, random_bank):
        beta = StepBeta((0.0, 0.3, 0.6, 1.0), (0.05, 0.5, 0.95))
        plain = fit_h(beta, random_bank)
        weights = (100.0, 1.0, 1.0, 1.0, 1.0)
        skewed = fit_h(beta, random_bank, theta_weights=weights)
        assert l1_gap(beta, skewed, random_bank, theta_weights=weights) == (
            pytest.approx(skewed.objective, abs=1e-10)
        )
        # the weighted fit cannot beat the plain one on the plain objective
        assert l1_gap(beta, skewed, random_bank) >= plain.objective - 1e-12

    def test_unknown_constraint(self, random_bank):
        beta = StepBeta((0.0, 0.5, 1.0), (0.0, 1.0))
        with pytest.raises(ValueError):
            fit_h(beta, random_bank, constraint="pair")

    def test_weight_validation(self, random_bank):
        beta = StepBeta((0.0, 0.5, 1.0), (0.0, 1.0))
        with pytest.raises(ValueError):
            fit_h(beta, random_bank, theta_weights=(1.0, 2.0))


class TestNaiveUniform:
    def test_equal_mass(self, random_bank):
        h = naive_uniform_h(random_bank)
        assert h.probabilities == (0.25,) * 4
        assert h.questions == random_bank.questions


class TestInducedBeta:
    def test_point_mass_recovers_column(self, random_bank):
        h = QuestionDistribution(random_bank.questions, (0.0, 1.0, 0.0, 0.0), None)
        curve = induced_beta(h, random_bank)
        thetas = np.asarray(random_bank.thetas)
        assert np.allclose(curve(thetas), random_bank.psi[:, 1])

    def test_uniform_over_thresholds_at_anchor(self):
        # theta=0.6 clears two of three cut points; with 0.6 an anchor the
        # mixture value is exactly 2/3
        thetas = (0.2, 0.4, 0.6, 0.8)
        cuts = (0.25, 0.5, 0.75)
        psi = np.array([[1.0 if th >= c else 0.0 for c in cuts] for th in thetas])
        bank = QuestionBank(thetas, ("c25", "c50", "c75"), psi)
        h = QuestionDistribution(bank.questions, (1 / 3, 1 / 3, 1 / 3), None)
        curve = induced_beta(h, bank)
        assert curve(0.6) == pytest.approx(2 / 3, abs=1e-12)

    def test_range_and_monotonicity(self, random_bank):
        h = naive_uniform_h(random_bank)
        curve = induced_beta(h, random_bank)
        grid = np.linspace(0, 1, 101)
        vals = curve(grid)
        assert np.all(vals >= 0.0) and np.all(vals <= 1.0)
        assert np.all(np.diff(vals) >= -1e-12)

    def test_question_mismatch(self, random_bank):
        h = QuestionDistribution(("x", "y"), (0.5, 0.5), None)
        with pytest.raises(ValueError):
            induced_beta(h, random_bank)

    def test_scalar_and_vector_agree(self, random_bank):
        curve = induced_beta(naive_uniform_h(random_bank), random_bank)
        assert curve(0.37) == pytest.approx(curve(np.array([0.37]))[0], abs=0)

    def test_picklable_for_worker_processes(self, random_bank):
        curve = induced_beta(naive_uniform_h(random_bank), random_bank)
        clone = pickle.loads(pickle.dumps(curve))
        assert isinstance(clone, MixtureBeta)
        grid = np.linspace(0, 1, 17)
        assert np.array_equal(clone(grid), curve(grid))


class TestL1Gap:
    def test_zero_on_exact_instance(self, threshold_bank, quartile_beta):
        h = QuestionDistribution(threshold_bank.questions, (1 / 3,) * 3, None)
        assert l1_gap(quartile_beta, h, threshold_bank) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_optimal_output_dominates_alternatives(self, random_bank):
        beta = StepBeta((0.0, 0.5, 1.0), (0.1, 0.9))
        best = fit_h(beta, random_bank)
        rng = np.random.default_rng(5)
        for _ in range(25):
            raw = rng.random(4)
            other = QuestionDistribution(
                random_bank.questions, tuple(raw / raw.sum()), None
            )
            assert l1_gap(beta, best, random_bank) <= (
                l1_gap(beta, other, random_bank) + 1e-12
            )
