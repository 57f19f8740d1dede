"""Monte Carlo marketplace: ranked matching, binary ratings, churn.

Each step, buyers match to items with probability driven by the item's
current rank, matched items collect Bernoulli ratings according to the
deployed design, scores update, and (optionally) items die and are
replaced by fresh ones.  The recorded output is the weighted pairwise
rank-agreement objective over time, per replicate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import StepBeta, WeightSpec, normalize_weight

__all__ = [
    "SimConfig",
    "MarketState",
    "init_market",
    "step_market",
    "run_simulation",
    "empirical_objective",
    "estimate_pk_rate",
    "RateEstimate",
    "SimResult",
]

_METRIC_KINDS = ("kendall", "spearman", "top", "bottom", "extremes")
_MATCHING_KINDS = ("uniform", "linear")


def _match_intensity(kind: str, quantiles: np.ndarray) -> np.ndarray:
    if kind == "uniform":
        return np.ones_like(quantiles)
    if kind == "linear":
        return (1.0 + 10.0 * quantiles) / 11.0
    raise ValueError(f"unknown matching kind {kind!r}")


@dataclass(frozen=True)
class SimConfig:
    """Marketplace simulation parameters.

    ``design`` maps item quality to the probability of a positive rating:
    either a step function deployed directly, or the mixture curve a
    question distribution induces.  Asking a sampled question and then a
    Bernoulli response is, per match, one Bernoulli draw with the mixture
    probability, so the design callable is all the simulator needs.
    """

    design: StepBeta | Callable
    steps: int
    n_items: int = 500
    n_buyers: int = 100
    death_prob: float = 0.0
    matching: str = "uniform"
    metrics: tuple[str, ...] = ("kendall",)
    seed: int = 0
    replicates: int = 1
    record_at: tuple[int, ...] | None = None
    design_label: str = "design"

    def __post_init__(self) -> None:
        if self.n_items < 2:
            raise ValueError("need at least two items")
        if self.n_buyers < 1:
            raise ValueError("need at least one buyer")
        if self.steps < 1:
            raise ValueError("need at least one step")
        if not 0.0 <= self.death_prob < 1.0:
            raise ValueError("death_prob must lie in [0, 1)")
        if self.matching not in _MATCHING_KINDS:
            raise ValueError(f"unknown matching kind {self.matching!r}")
        metrics = tuple(self.metrics)
        object.__setattr__(self, "metrics", metrics)
        if not metrics:
            raise ValueError("at least one metric required")
        for m in metrics:
            if m not in _METRIC_KINDS:
                raise ValueError(f"unknown metric {m!r}")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        if self.record_at is not None:
            rec = tuple(sorted(set(int(k) for k in self.record_at)))
            if not rec or rec[0] < 1 or rec[-1] > self.steps:
                raise ValueError("record steps must lie within [1, steps]")
            object.__setattr__(self, "record_at", rec)

    def record_schedule(self) -> tuple[int, ...]:
        """Recording steps: explicit if given, else every step to 100 and
        every tenth step after, always including the last."""
        if self.record_at is not None:
            return self.record_at
        ks = list(range(1, min(self.steps, 100) + 1))
        ks.extend(range(110, self.steps + 1, 10))
        if ks[-1] != self.steps:
            ks.append(self.steps)
        return tuple(ks)

    def design_probability(self, thetas: np.ndarray) -> np.ndarray:
        p = np.asarray(self.design(thetas), dtype=float)
        if p.shape != np.shape(thetas):
            raise ValueError("design must return one probability per quality")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("design probabilities must lie within [0, 1]")
        return p


@dataclass
class MarketState:
    """Live items: quality, deployed rating probability, score counts."""

    theta: np.ndarray
    prob: np.ndarray
    positives: np.ndarray
    totals: np.ndarray
    ids: np.ndarray
    next_id: int
    births: int = 0

    def scores(self) -> np.ndarray:
        """Fraction of positive ratings; zero before the first rating."""
        return np.where(
            self.totals > 0, self.positives / np.maximum(self.totals, 1), 0.0
        )


def init_market(cfg: SimConfig, seed) -> MarketState:
    """Fresh market: i.i.d. uniform qualities, no ratings yet.

    ``seed`` may be anything ``numpy.random.default_rng`` accepts,
    including an existing generator (which the simulation loop reuses so
    the whole replicate consumes one stream).
    """
    rng = np.random.default_rng(seed)
    theta = rng.random(cfg.n_items)
    return MarketState(
        theta=theta,
        prob=cfg.design_probability(theta),
        positives=np.zeros(cfg.n_items, dtype=np.int64),
        totals=np.zeros(cfg.n_items, dtype=np.int64),
        ids=np.arange(cfg.n_items, dtype=np.int64),
        next_id=cfg.n_items,
    )


def step_market(state: MarketState, cfg: SimConfig, rng: np.random.Generator) -> MarketState:
    """One matching round: rank, match, rate, and churn.

    Ranks order by score ascending with ties broken by newest-first id,
    so unrated entrants sit at the bottom until their first rating.  Each
    buyer picks an item with probability proportional to the matching
    intensity at the item's rank quantile; an item can take several
    matches in one round.
    """
    n = state.theta.size
    order = np.lexsort((-state.ids, state.scores()))
    quantiles = (np.arange(n) + 0.5) / n
    intensity = _match_intensity(cfg.matching, quantiles)
    matches_by_rank = rng.multinomial(cfg.n_buyers, intensity / intensity.sum())
    matches = np.zeros(n, dtype=np.int64)
    matches[order] = matches_by_rank
    state.positives += rng.binomial(matches, state.prob)
    state.totals += matches
    if cfg.death_prob > 0.0:
        dead = rng.random(n) < cfg.death_prob
        k = int(dead.sum())
        if k:
            fresh = rng.random(k)
            state.theta[dead] = fresh
            state.prob[dead] = cfg.design_probability(fresh)
            state.positives[dead] = 0
            state.totals[dead] = 0
            state.ids[dead] = state.next_id + np.arange(k, dtype=np.int64)
            state.next_id += k
            state.births += k
    return state


class _PairWeights:
    """Pair weight matrix for the current item qualities, reused across
    recording steps until churn invalidates it."""

    def __init__(self, w: WeightSpec):
        self.w = w
        self.matrix: np.ndarray | None = None
        self.denominator = 0.0

    def rebuild(self, theta: np.ndarray) -> None:
        t1 = theta[:, None]
        t2 = theta[None, :]
        raw = np.asarray(self.w.raw(t1, t2), dtype=float) * self.w.constant
        self.matrix = np.where(t1 > t2, raw, 0.0)
        self.denominator = float(self.matrix.sum())

    def value(self, scores: np.ndarray) -> float:
        sign = np.sign(scores[:, None] - scores[None, :])
        return float((self.matrix * sign).sum() / self.denominator)


def empirical_objective(state: MarketState, w: WeightSpec) -> float:
    """Weighted fraction of correctly ordered pairs minus incorrectly
    ordered ones; score ties contribute zero."""
    if state.theta.size < 2:
        raise ValueError("need at least two items")
    pair = _PairWeights(w)
    pair.rebuild(state.theta)
    return pair.value(state.scores())


@dataclass(frozen=True)
class SimResult:
    """Recorded objective series: one row per (replicate, step, metric)."""

    metrics: tuple[str, ...]
    record_steps: tuple[int, ...]
    replicates: int
    rows: tuple[tuple[int, int, str, float], ...]

    def values(self, metric: str, k: int) -> np.ndarray:
        """Per-replicate values of one metric at one recorded step."""
        out = [r[3] for r in self.rows if r[2] == metric and r[1] == k]
        if not out:
            raise KeyError(f"nothing recorded for {metric!r} at step {k}")
        return np.asarray(out)

    def mean_se(self, metric: str, k: int) -> tuple[float, float]:
        vals = self.values(metric, k)
        mean = float(vals.mean())
        if len(vals) < 2:
            return mean, math.nan
        return mean, float(vals.std(ddof=1) / math.sqrt(len(vals)))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["replicate", "k", "metric", "value"])
            for rep, k, metric, value in self.rows:
                writer.writerow([rep, k, metric, repr(value)])

    def summary_to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["k", "metric", "mean", "se", "replicates"])
            for k in self.record_steps:
                for metric in self.metrics:
                    mean, se = self.mean_se(metric, k)
                    writer.writerow([k, metric, repr(mean), repr(se), self.replicates])


def _run_replicate(cfg: SimConfig, rep: int) -> list[tuple[int, int, str, float]]:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(rep,)))
    state = init_market(cfg, rng)
    weights = {name: _PairWeights(normalize_weight(name)) for name in cfg.metrics}
    record = set(cfg.record_schedule())
    rows: list[tuple[int, int, str, float]] = []
    seen_births = -1
    for k in range(1, cfg.steps + 1):
        step_market(state, cfg, rng)
        if k in record:
            if state.births != seen_births:
                for pair in weights.values():
                    pair.rebuild(state.theta)
                seen_births = state.births
            scores = state.scores()
            for name in cfg.metrics:
                rows.append((rep, k, name, weights[name].value(scores)))
    return rows


def run_simulation(cfg: SimConfig, jobs: int = 1) -> SimResult:
    """All replicates of the configured simulation.

    Replicate ``i`` draws from a child stream of the master seed indexed
    by ``i``, so results do not depend on scheduling; with ``jobs > 1``
    replicates run in worker processes and are merged by index.
    """
    if jobs < 1:
        raise ValueError("jobs must be positive")
    if jobs == 1 or cfg.replicates == 1:
        chunks = [_run_replicate(cfg, rep) for rep in range(cfg.replicates)]
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_replicate, [cfg] * cfg.replicates, range(cfg.replicates)))
    rows = tuple(row for chunk in chunks for row in chunk)
    return SimResult(cfg.metrics, cfg.record_schedule(), cfg.replicates, rows)


@dataclass(frozen=True)
class RateEstimate:
    """Fitted decay rate of the pairwise misranking mass."""

    slope: float
    stderr: float
    k_lo: int
    k_hi: int
    n_points: int
    series: tuple[tuple[int, float], ...]


def estimate_pk_rate(
    t1: float,
    t2: float,
    g1: float,
    g2: float,
    k_max: int = 150,
    reps: int = 1_000_000,
    seed: int = 0,
) -> RateEstimate:
    """Monte Carlo estimate of the pair error exponent.

    Simulates ``reps`` paired binomial score trajectories for a better
    item (level ``t1``, intensity ``g1``) and a worse one (``t2``,
    ``g2``), where by time k an item holds floor(g * k) ratings.  The
    error mass at k is ``2 Pr(x1 < x2) + Pr(x1 = x2)``, one minus the
    expected pairwise order agreement.  The decay slope is fit by least
    squares on log error mass over the k-range where the mass lies in
    [10/reps, 0.1]; with no decay (equal levels) the fit runs over the
    whole resolvable range and comes out near zero.
    """
    if not 0.0 <= t2 <= t1 <= 1.0:
        raise ValueError("need 0 <= t2 <= t1 <= 1")
    if g1 <= 0.0 or g2 <= 0.0:
        raise ValueError("matching intensities must be positive")
    if k_max < 2:
        raise ValueError("k_max must be at least 2")
    if reps < 1000:
        raise ValueError("too few replicates to estimate tail mass")
    rng = np.random.default_rng(seed)
    pos1 = np.zeros(reps, dtype=np.int64)
    pos2 = np.zeros(reps, dtype=np.int64)
    n1 = n2 = 0
    series: list[tuple[int, float]] = []
    for k in range(1, k_max + 1):
        new1 = int(math.floor(g1 * k)) - n1
        new2 = int(math.floor(g2 * k)) - n2
        if new1 > 0:
            pos1 += rng.binomial(new1, t1, reps)
            n1 += new1
        if new2 > 0:
            pos2 += rng.binomial(new2, t2, reps)
            n2 += new2
        if n1 == 0 or n2 == 0:
            continue
        x1 = pos1 / n1
        x2 = pos2 / n2
        less = float(np.count_nonzero(x1 < x2)) / reps
        equal = float(np.count_nonzero(x1 == x2)) / reps
        series.append((k, 2.0 * less + equal))
    floor_mass = 10.0 / reps
    window = [(k, p) for k, p in series if floor_mass <= p <= 0.1]
    if not window:
        window = [(k, p) for k, p in series if p >= floor_mass]
    if len(window) < 3:
        raise ValueError(
            "error mass left the resolvable range too quickly; "
            "more replicates or a smaller k_max needed"
        )
    ks = np.asarray([k for k, _ in window], dtype=float)
    logs = np.log(np.asarray([p for _, p in window]))
    k_mean = ks.mean()
    denom = float(((ks - k_mean) ** 2).sum())
    slope = -float(((ks - k_mean) * (logs - logs.mean())).sum() / denom)
    fitted = logs.mean() - slope * (ks - k_mean)
    rss = float(((logs - fitted) ** 2).sum())
    stderr = math.sqrt(rss / (len(ks) - 2) / denom) if len(ks) > 2 else math.nan
    return RateEstimate(
        slope, stderr, int(ks[0]), int(ks[-1]), len(ks), tuple(series)
    )
