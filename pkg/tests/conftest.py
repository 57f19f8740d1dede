import numpy as np
import pytest

from ratecraft.core import QuestionBank, StepBeta


@pytest.fixture
def threshold_bank():
    """Indicator questions at three cut points, anchored on quartile
    midpoints; the exactly-solvable fitting instance."""
    thetas = (0.125, 0.375, 0.625, 0.875)
    questions = ("cut25", "cut50", "cut75")
    cuts = (0.25, 0.5, 0.75)
    psi = np.array([[1.0 if th >= c else 0.0 for c in cuts] for th in thetas])
    return QuestionBank(thetas, questions, psi)


@pytest.fixture
def quartile_beta():
    """Step target matching the threshold bank exactly under uniform H."""
    return StepBeta((0.0, 0.25, 0.5, 0.75, 1.0), (0.0, 1 / 3, 2 / 3, 1.0))


@pytest.fixture
def random_bank():
    """A 5x4 bank of sorted response rates, fixed seed."""
    rng = np.random.default_rng(314)
    thetas = tuple(sorted(rng.uniform(0.05, 0.95, 5)))
    psi = np.sort(rng.random((5, 4)), axis=0)
    return QuestionBank(thetas, ("a", "b", "c", "d"), psi)
