"""Ranking-error exponents for step rating functions.

When two items with distinct rating levels accumulate binomial scores, the
probability that their observed ranking is wrong decays exponentially in
the number of ratings.  This module computes that decay rate: in closed
form, by direct numeric minimization (used as an independent check), and
for whole designs as the minimum over adjacent level pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import MatchProfile, StepBeta

__all__ = [
    "kl_bernoulli",
    "inf_point",
    "pairwise_rate",
    "numeric_pairwise_rate",
    "adjacent_rates",
    "overall_rate",
    "PairRate",
    "pair_report",
]


def _check_prob(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie within [0, 1], got {value}")
    return value


def _check_weight(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0.0):
        raise ValueError(f"{name} must be positive and finite, got {value}")
    return value


def kl_bernoulli(a: float, t: float) -> float:
    """Kullback-Leibler divergence between Bernoulli(a) and Bernoulli(t).

    Computes ``a log(a/t) + (1-a) log((1-a)/(1-t))`` with the usual
    conventions: ``0 log 0 = 0``, and a degenerate reference ``t`` in
    {0, 1} gives infinity unless ``a`` equals it.
    """
    a = _check_prob("a", a)
    t = _check_prob("t", t)
    if a == t:
        return 0.0
    if t == 0.0 or t == 1.0:
        return math.inf
    out = 0.0
    if a > 0.0:
        out += a * math.log(a / t)
    if a < 1.0:
        out += (1.0 - a) * math.log((1.0 - a) / (1.0 - t))
    return out


def inf_point(t_lo: float, t_hi: float, g_lo: float, g_hi: float) -> float:
    """Score value at which the weighted KL objective is smallest.

    This is the common score both items are likeliest to drift to when
    their ranking inverts: the minimizer over ``a`` of
    ``g_lo * KL(a, t_lo) + g_hi * KL(a, t_hi)``.  Closed form
    ``c / (1 + c)`` with ``c`` the geometric mean of the odds, weighted by
    the matching intensities.
    """
    t_lo = _check_prob("t_lo", t_lo)
    t_hi = _check_prob("t_hi", t_hi)
    g_lo = _check_weight("g_lo", g_lo)
    g_hi = _check_weight("g_hi", g_hi)
    if t_lo > t_hi:
        raise ValueError("t_lo must not exceed t_hi")
    if t_lo == 0.0 and t_hi == 1.0:
        raise ValueError("objective is infinite everywhere for levels 0 and 1")
    if t_lo == 0.0:
        return 0.0
    if t_hi == 1.0:
        return 1.0
    log_c = (
        g_lo * (math.log(t_lo) - math.log1p(-t_lo))
        + g_hi * (math.log(t_hi) - math.log1p(-t_hi))
    ) / (g_lo + g_hi)
    # c/(1+c) computed stably on the log scale
    if log_c > 0:
        return 1.0 / (1.0 + math.exp(-log_c))
    c = math.exp(log_c)
    return c / (1.0 + c)


def pairwise_rate(t_lo: float, t_hi: float, g_lo: float, g_hi: float) -> float:
    """Error exponent for an adjacent pair of rating levels.

    Parameters
    ----------
    t_lo, t_hi : float
        Rating levels of the lower- and higher-quality item, with
        ``0 <= t_lo <= t_hi <= 1``.
    g_lo, g_hi : float
        Matching intensities of the two items (positive).

    Returns
    -------
    float
        The decay rate of the misranking probability per matching round.
        Zero when the levels coincide, infinite when they are 0 and 1.

    Notes
    -----
    The closed form is ``-(g_lo + g_hi) * log(B)`` where ``B`` is the sum
    of the weighted geometric means of the failure and success
    probabilities.  Levels on the boundary reduce to one-sided forms:
    ``-g_hi log(1 - t_hi)`` when ``t_lo == 0`` and ``-g_lo log(t_lo)``
    when ``t_hi == 1``.
    """
    t_lo = _check_prob("t_lo", t_lo)
    t_hi = _check_prob("t_hi", t_hi)
    g_lo = _check_weight("g_lo", g_lo)
    g_hi = _check_weight("g_hi", g_hi)
    if t_lo > t_hi:
        raise ValueError("t_lo must not exceed t_hi")
    if t_lo == t_hi:
        return 0.0
    if t_lo == 0.0 and t_hi == 1.0:
        return math.inf
    total = g_lo + g_hi
    if t_lo == 0.0:
        return -g_hi * math.log1p(-t_hi)
    if t_hi == 1.0:
        return -g_lo * math.log(t_lo)
    w_lo = g_lo / total
    w_hi = g_hi / total
    bracket = (1.0 - t_lo) ** w_lo * (1.0 - t_hi) ** w_hi + t_lo**w_lo * t_hi**w_hi
    return -total * math.log(bracket)


def numeric_pairwise_rate(
    t_lo: float,
    t_hi: float,
    g_lo: float,
    g_hi: float,
    grid: int = 10_000,
) -> float:
    """Pair exponent by direct minimization of the weighted KL objective.

    Scans ``grid + 1`` equally spaced score values, then refines around the
    best one by ternary search (the objective is strictly convex).  Serves
    as an independent check on :func:`pairwise_rate`; it never calls the
    closed form.
    """
    t_lo = _check_prob("t_lo", t_lo)
    t_hi = _check_prob("t_hi", t_hi)
    g_lo = _check_weight("g_lo", g_lo)
    g_hi = _check_weight("g_hi", g_hi)
    if t_lo > t_hi:
        raise ValueError("t_lo must not exceed t_hi")
    if grid < 2:
        raise ValueError("grid must be at least 2")

    def objective(a: float) -> float:
        lo = kl_bernoulli(a, t_lo)
        if math.isinf(lo):
            return math.inf
        hi = kl_bernoulli(a, t_hi)
        if math.isinf(hi):
            return math.inf
        return g_lo * lo + g_hi * hi

    points = np.linspace(0.0, 1.0, grid + 1)
    values = [objective(float(a)) for a in points]
    best = int(np.argmin(values))
    if math.isinf(values[best]):
        return math.inf
    lo_edge = points[max(best - 1, 0)]
    hi_edge = points[min(best + 1, grid)]
    # degenerate reference levels pin the minimizer to an endpoint, where
    # the grid value is already exact
    if t_lo in (0.0, 1.0) or t_hi in (0.0, 1.0):
        return float(values[best])
    lo_edge = max(lo_edge, 1e-300)
    hi_edge = min(hi_edge, 1.0 - 1e-16)
    for _ in range(120):
        third = (hi_edge - lo_edge) / 3.0
        m1 = lo_edge + third
        m2 = hi_edge - third
        if objective(m1) <= objective(m2):
            hi_edge = m2
        else:
            lo_edge = m1
        if hi_edge - lo_edge < 1e-14:
            break
    return float(objective(0.5 * (lo_edge + hi_edge)))


def _levels_and_g(
    beta: StepBeta | Sequence[float], g: MatchProfile | Sequence[float]
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    levels = beta.t if isinstance(beta, StepBeta) else tuple(float(x) for x in beta)
    weights = g.values if isinstance(g, MatchProfile) else tuple(float(x) for x in g)
    if len(weights) != len(levels):
        raise ValueError(
            f"matching profile has {len(weights)} entries for {len(levels)} levels"
        )
    if len(levels) < 2:
        raise ValueError("need at least two levels")
    return levels, weights


def adjacent_rates(
    beta: StepBeta | Sequence[float], g: MatchProfile | Sequence[float]
) -> list[float]:
    """Exponent of every adjacent level pair, bottom to top."""
    levels, weights = _levels_and_g(beta, g)
    return [
        pairwise_rate(levels[i], levels[i + 1], weights[i], weights[i + 1])
        for i in range(len(levels) - 1)
    ]


def overall_rate(
    beta: StepBeta | Sequence[float], g: MatchProfile | Sequence[float]
) -> float:
    """Design-level error exponent: the worst adjacent pair governs.

    Non-adjacent pairs are separated by at least one adjacent gap, so the
    minimum over adjacent pairs is the binding one.
    """
    return min(adjacent_rates(beta, g))


@dataclass(frozen=True)
class PairRate:
    """One adjacent pair's exponent and its most likely crossing score."""

    index: int
    t_lo: float
    t_hi: float
    g_lo: float
    g_hi: float
    rate: float
    a_star: float | None


def pair_report(
    beta: StepBeta | Sequence[float], g: MatchProfile | Sequence[float]
) -> list[PairRate]:
    """Per-pair breakdown used by diagnostics and the command line."""
    levels, weights = _levels_and_g(beta, g)
    out = []
    for i in range(len(levels) - 1):
        t_lo, t_hi = levels[i], levels[i + 1]
        g_lo, g_hi = weights[i], weights[i + 1]
        rate = pairwise_rate(t_lo, t_hi, g_lo, g_hi)
        if t_lo == 0.0 and t_hi == 1.0:
            a_star = None
        else:
            a_star = inf_point(t_lo, t_hi, g_lo, g_hi)
        out.append(PairRate(i, t_lo, t_hi, g_lo, g_hi, rate, a_star))
    return out
