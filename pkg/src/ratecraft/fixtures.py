"""Bundled synthetic response data for demos and end-to-end tests.

The packaged question bank mimics a plausible survey: nine escalating
yes/no quality bars asked about items at five known quality levels, 200
responses per cell.  Positive-answer frequencies increase with item
quality for every question and decrease as the bar rises, and the two
lowest quality levels answer almost identically, so a fitted question
mix visibly struggles to separate the low end.  The numbers are
synthetic; no human data ships with the package.
"""

from __future__ import annotations

from importlib import resources

from .core import QuestionBank
from .responses import PsiInterpolator

__all__ = ["fixture_bank", "fixture_interpolator"]


def fixture_bank() -> QuestionBank:
    """The bundled question bank, counts included."""
    text = (
        resources.files("ratecraft.data")
        .joinpath("synthetic_psi.csv")
        .read_text(encoding="utf-8")
    )
    return QuestionBank.from_csv_text(text)


def fixture_interpolator() -> PsiInterpolator:
    """Response curves extended to all of [0,1] by interpolation."""
    return PsiInterpolator.from_bank(fixture_bank())
