"""Level solver: choose rating levels that equalize adjacent pair exponents.

The overall error exponent of a design is the minimum over adjacent level
pairs, so at the optimum every adjacent pair decays at the same rate.  The
solver pins the outer levels at 0 and 1, bisects on the topmost interior
level, and for each candidate chains downward: the top pair fixes a target
rate, and each next-lower level is found by a one-dimensional bisection
against that target.  The sign of the mismatch at the bottom pair then
steers the outer bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .core import MatchProfile, StepBeta, make_step_beta
from .partition import Partition, equispaced_partition
from .rates import adjacent_rates, overall_rate

__all__ = [
    "SolverConfig",
    "SolverResult",
    "ConvergenceError",
    "equalize_chain",
    "nested_bisection",
    "double_levels",
    "EqualizationReport",
    "verify_equalization",
]


class ConvergenceError(RuntimeError):
    """Raised when an iteration cap is hit before the tolerance is met."""


@dataclass(frozen=True)
class SolverConfig:
    """Solver tolerances.

    tol is the bisection width target on level values.  residual_tol is
    the allowed spread among adjacent pair rates in a solved design,
    measured relative to max(1, achieved rate).
    """

    tol: float = 1e-13
    residual_tol: float = 1e-9
    max_outer: int = 200
    max_inner: int = 200
    use_last_level_bound: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.tol < 1e-2:
            raise ValueError("tol must lie in (0, 1e-2)")
        if self.residual_tol <= 0.0:
            raise ValueError("residual_tol must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be positive")


def _pair_rate(a: float, b: float, ga: float, gb: float) -> float:
    # closed-form pair exponent without validation; hot path of the solver
    if a == b:
        return 0.0
    if a == 0.0:
        if b == 1.0:
            return math.inf
        return -gb * math.log1p(-b)
    if b == 1.0:
        return -ga * math.log(a)
    tot = ga + gb
    wa = ga / tot
    wb = gb / tot
    return -tot * math.log((1.0 - a) ** wa * (1.0 - b) ** wb + a**wa * b**wb)


def _bisect_next_level(
    upper: float,
    target: float,
    g_lo: float,
    g_hi: float,
    floor: float,
    cfg: SolverConfig,
) -> float:
    """Largest level below ``upper`` whose pair rate meets ``target``.

    The pair rate decreases as the lower level rises toward ``upper``, so
    bisection keeps the invariant rate(right) <= target <= rate(left) and
    returns the right endpoint.  When even the floor cannot reach the
    target the result collapses to the floor, which the outer loop reads
    as a too-small bottom rate.
    """
    lo = floor
    hi = upper - cfg.tol
    if hi <= lo:
        return lo
    for _ in range(cfg.max_inner):
        if hi - lo <= cfg.tol / 2.0:
            return hi
        mid = 0.5 * (lo + hi)
        if _pair_rate(mid, upper, g_lo, g_hi) <= target:
            hi = mid
        else:
            lo = mid
    raise ConvergenceError("inner level bisection hit its iteration cap")


def _chain_down(
    top: float,
    count: int,
    g: Sequence[float],
    floor: float,
    target: float,
    cfg: SolverConfig,
) -> list[float]:
    """Levels t_1..t_count (bottom to top) with t_count = top and every
    pair (t_m, t_{m+1}) bisected to the target rate."""
    levels = [0.0] * count
    levels[count - 1] = top
    for m in range(count - 1, 0, -1):
        levels[m - 1] = _bisect_next_level(
            levels[m], target, g[m], g[m + 1], floor, cfg
        )
    return levels


def equalize_chain(
    lo: float,
    hi: float,
    count: int,
    g: Sequence[float] | MatchProfile,
    cfg: SolverConfig | None = None,
    lower_start: float | None = None,
) -> list[float]:
    """Interior levels between two pinned ones with all pair rates equal.

    Parameters
    ----------
    lo, hi : float
        The fixed bottom and top levels, ``0 <= lo < hi <= 1``.
    count : int
        Number of interior levels to place.
    g : sequence of float
        Matching intensity per level, bottom to top; ``count + 2``
        entries aligned with ``[lo, t_1, ..., t_count, hi]``.
    lower_start : float, optional
        Known lower bound for the topmost interior level, used to shrink
        the outer bisection bracket.

    Returns
    -------
    list of float
        ``[t_1, ..., t_count]``, strictly between lo and hi, with all
        ``count + 1`` adjacent pair rates equal up to the tolerance the
        bisection width implies.
    """
    cfg = cfg or SolverConfig()
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError("need 0 <= lo < hi <= 1")
    if count < 1:
        raise ValueError("count must be at least 1")
    gv = g.values if isinstance(g, MatchProfile) else tuple(float(x) for x in g)
    if len(gv) != count + 2:
        raise ValueError(f"need {count + 2} matching entries, got {len(gv)}")
    if any(x <= 0.0 for x in gv):
        raise ValueError("matching intensities must be positive")

    outer_lo = lo + cfg.tol if lower_start is None else max(lower_start, lo + cfg.tol)
    outer_hi = hi - cfg.tol
    if outer_lo >= outer_hi:
        raise ValueError("interval too narrow for the requested tolerance")

    def chain_at(x: float) -> tuple[list[float], float]:
        target = _pair_rate(x, hi, gv[count], gv[count + 1])
        levels = _chain_down(x, count, gv, lo, target, cfg)
        return levels, target

    u, ell = outer_hi, outer_lo
    for _ in range(cfg.max_outer):
        if u - ell <= cfg.tol / 2.0:
            break
        x = 0.5 * (u + ell)
        levels, target = chain_at(x)
        bottom = _pair_rate(lo, levels[0], gv[0], gv[1]) if levels[0] > lo else 0.0
        if bottom < target:
            ell = x
        else:
            u = x
    else:
        raise ConvergenceError("outer level bisection hit its iteration cap")

    levels, _ = chain_at(u)
    if levels[0] <= lo:
        raise ConvergenceError("chain collapsed onto its lower bound")
    return levels


@dataclass(frozen=True)
class SolverResult:
    """A solved design: step function, matching, achieved exponent."""

    beta: StepBeta
    g: MatchProfile
    rate: float
    residual: float
    degenerate: bool = False


def nested_bisection(
    M: int,
    g: MatchProfile | Sequence[float] | None = None,
    cfg: SolverConfig | None = None,
    breakpoints: Partition | Sequence[float] | None = None,
) -> SolverResult:
    """Optimal rating levels for M intervals.

    The outer levels are 0 and 1; the M - 2 interior levels are solved by
    :func:`equalize_chain`.  For a nondecreasing matching profile the
    topmost interior level is known to lie above 1 - 1/(M - 1), which
    shrinks the outer bracket (disable via ``cfg.use_last_level_bound``).

    ``breakpoints`` only decorate the returned step function; they do not
    enter the level computation.  M = 2 is degenerate: the two levels are
    0 and 1, a single never-confusable pair, and the exponent is infinite.
    """
    cfg = cfg or SolverConfig()
    if M < 2:
        raise ValueError("need at least two intervals")
    if g is None:
        g = MatchProfile.uniform(M)
    elif not isinstance(g, MatchProfile):
        g = MatchProfile.from_table(g)
    if g.M != M:
        raise ValueError(f"matching profile has {g.M} entries for M={M}")
    if breakpoints is None:
        s = equispaced_partition(M).s
    elif isinstance(breakpoints, Partition):
        s = breakpoints.s
    else:
        s = Partition(tuple(breakpoints)).s
    if len(s) != M + 1:
        raise ValueError("breakpoints do not match M")

    if M == 2:
        beta = make_step_beta(s, (0.0, 1.0))
        return SolverResult(beta, g, math.inf, 0.0, degenerate=True)

    lower = 1.0 - 1.0 / (M - 1)
    use_bound = cfg.use_last_level_bound and g.is_nondecreasing
    interior = equalize_chain(
        0.0, 1.0, M - 2, g.values, cfg, lower_start=lower if use_bound else None
    )
    levels = (0.0, *interior, 1.0)
    rates = adjacent_rates(levels, g)
    rate = min(rates)
    residual = max(rates) - rate
    beta = make_step_beta(s, levels)
    return SolverResult(beta, g, rate, residual)


def double_levels(
    beta: StepBeta | Sequence[float], g: MatchProfile | None = None
) -> StepBeta:
    """Map an M-level solved design to the 2M - 1 level one, closed form.

    Under constant matching intensity the optimal levels for 2M - 1
    intervals interleave the M-interval ones exactly: even positions copy
    the old levels, the outermost new levels are square-root reflections
    of their neighbors, and every other interior level is the equal-rate
    point of its two (already known) neighbors.  Valid only for constant
    matching; the interleaving fails otherwise.

    The returned step function sits on equispaced breakpoints.
    """
    if g is not None and not g.is_constant:
        raise ValueError("level doubling requires constant matching intensity")
    t = beta.t if isinstance(beta, StepBeta) else tuple(float(x) for x in beta)
    M = len(t)
    if M < 2:
        raise ValueError("need at least two levels")
    if t[0] != 0.0 or t[-1] != 1.0:
        raise ValueError("levels must run from 0 to 1")
    if any(b <= a for a, b in zip(t, t[1:])):
        raise ValueError("levels must be strictly increasing")

    out = [0.0] * (2 * M - 1)
    for i, v in enumerate(t):
        out[2 * i] = v
    out[1] = 0.5 * (1.0 - math.sqrt(1.0 - t[1]))
    out[2 * M - 3] = 0.5 * (1.0 + math.sqrt(t[M - 2]))
    for k in range(3, 2 * M - 4, 2):
        t_lo = out[k - 1]
        t_hi = out[k + 1]
        ratio = (math.sqrt(1.0 - t_lo) - math.sqrt(1.0 - t_hi)) / (
            math.sqrt(t_hi) - math.sqrt(t_lo)
        )
        c = ratio * ratio
        out[k] = c / (1.0 + c)
    return make_step_beta(equispaced_partition(2 * M - 1).s, out)


@dataclass(frozen=True)
class EqualizationReport:
    """Adjacent pair rates of a design and whether they are equalized."""

    rates: tuple[float, ...]
    rate: float
    spread: float
    passed: bool


def verify_equalization(
    beta: StepBeta | Sequence[float],
    g: MatchProfile | Sequence[float],
    cfg: SolverConfig | None = None,
) -> EqualizationReport:
    """Check that all adjacent pair rates agree.

    The spread is compared against ``cfg.residual_tol`` scaled by
    max(1, largest rate), so the bar is absolute for ordinary rates and
    relative for large ones.  A single-pair design passes trivially.
    """
    cfg = cfg or SolverConfig()
    rates = tuple(adjacent_rates(beta, g))
    if len(rates) == 1:
        return EqualizationReport(rates, rates[0], 0.0, True)
    top = max(rates)
    spread = top - min(rates)
    passed = spread <= cfg.residual_tol * max(1.0, top)
    return EqualizationReport(rates, min(rates), spread, passed)
