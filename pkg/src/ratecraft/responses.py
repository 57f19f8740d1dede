"""Estimating response probabilities from ratings data.

A question bank holds, per anchor quality, the probability that each
question is answered positively.  Two estimation procedures build such a
bank from raw binary ratings: one for items of known quality, one that
first ranks items by their overall rating and assigns rank quantiles as
quality anchors.  A small interpolator extends the anchored probabilities
to all of [0, 1].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import QuestionBank

__all__ = [
    "PsiInterpolator",
    "estimate_known",
    "estimate_unknown",
    "interpolate",
    "read_ratings_csv",
    "read_qualities_csv",
    "write_ratings_csv",
    "write_qualities_csv",
]

Rating = tuple[str, str, int]


@dataclass(frozen=True)
class PsiInterpolator:
    """Piecewise-linear extension of anchored response probabilities.

    Between neighboring anchor qualities the rows blend linearly; outside
    the anchor range the nearest row extends as a constant, which keeps
    every value a probability.
    """

    anchors: tuple[float, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        anchors = tuple(float(a) for a in self.anchors)
        values = np.array(self.values, dtype=float)
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[0] != len(anchors):
            raise ValueError("one value row per anchor required")
        if len(anchors) == 0:
            raise ValueError("need at least one anchor")
        if any(b <= a for a, b in zip(anchors, anchors[1:])):
            raise ValueError("anchors must be strictly increasing")
        if np.any(values < 0.0) or np.any(values > 1.0):
            raise ValueError("anchored values must lie within [0, 1]")

    @staticmethod
    def from_bank(bank: QuestionBank) -> "PsiInterpolator":
        return PsiInterpolator(bank.thetas, bank.psi)

    def row(self, theta: float) -> np.ndarray:
        """Interpolated probability vector at one quality."""
        return self.rows(np.asarray([theta]))[0]

    def rows(self, thetas) -> np.ndarray:
        """Interpolated probability rows for an array of qualities."""
        th = np.asarray(thetas, dtype=float)
        if np.any(th < 0.0) or np.any(th > 1.0):
            raise ValueError("quality must lie within [0, 1]")
        anchors = np.asarray(self.anchors)
        clipped = np.clip(th, anchors[0], anchors[-1])
        if len(anchors) == 1:
            return np.repeat(self.values, len(th), axis=0)
        hi = np.clip(np.searchsorted(anchors, clipped, side="left"), 1, len(anchors) - 1)
        lo = hi - 1
        span = anchors[hi] - anchors[lo]
        alpha = (clipped - anchors[lo]) / span
        return (1.0 - alpha)[:, None] * self.values[lo] + alpha[:, None] * self.values[hi]


def interpolate(bank: QuestionBank, theta: float) -> np.ndarray:
    """Response probability vector at ``theta`` for the bank's questions."""
    return PsiInterpolator.from_bank(bank).row(theta)


def _collect_counts(
    ratings: Iterable[Rating],
) -> tuple[list[str], list[str], dict[tuple[str, str], list[int]]]:
    """Group ratings into per-(item, question) positive/total counts.

    Items and questions keep first-appearance order; response values must
    be 0 or 1.
    """
    items: list[str] = []
    questions: list[str] = []
    seen_items: set[str] = set()
    seen_questions: set[str] = set()
    counts: dict[tuple[str, str], list[int]] = {}
    for row in ratings:
        item, question, response = str(row[0]), str(row[1]), row[2]
        response = int(response)
        if response not in (0, 1):
            raise ValueError(f"response must be 0 or 1, got {row[2]!r}")
        if item not in seen_items:
            seen_items.add(item)
            items.append(item)
        if question not in seen_questions:
            seen_questions.add(question)
            questions.append(question)
        cell = counts.setdefault((item, question), [0, 0])
        cell[0] += response
        cell[1] += 1
    if not counts:
        raise ValueError("no ratings given")
    return items, questions, counts


def estimate_known(
    ratings: Iterable[Rating], qualities: Mapping[str, float]
) -> QuestionBank:
    """Bank of empirical response rates for items of known quality.

    Every rated item must appear in ``qualities``; items sharing a quality
    pool their counts.  Each (quality, question) cell needs at least one
    observation.
    """
    items, questions, counts = _collect_counts(ratings)
    unknown = [i for i in items if i not in qualities]
    if unknown:
        raise ValueError(f"no quality given for item {unknown[0]!r}")
    thetas = sorted({float(qualities[i]) for i in items})
    pos = np.zeros((len(thetas), len(questions)), dtype=np.int64)
    tot = np.zeros_like(pos)
    index = {th: k for k, th in enumerate(thetas)}
    for item in items:
        row = index[float(qualities[item])]
        for col, question in enumerate(questions):
            cell = counts.get((item, question))
            if cell is None:
                raise ValueError(
                    f"no responses for item {item!r}, question {question!r}"
                )
            pos[row, col] += cell[0]
            tot[row, col] += cell[1]
    psi = pos / tot
    return QuestionBank(tuple(thetas), tuple(questions), psi, pos, tot)


def estimate_unknown(ratings: Iterable[Rating], L: int, N: int) -> QuestionBank:
    """Bank built by ranking items on their overall positive fraction.

    The L items are ranked ascending (ties by item id); the item at rank i
    covers the quantile interval ((i-1)/L, i/L] and is anchored at its
    midpoint.  Every item must carry exactly N responses, as the ranking
    construction assumes.
    """
    items, questions, counts = _collect_counts(ratings)
    if len(items) != L:
        raise ValueError(f"expected {L} items, found {len(items)}")
    totals = dict.fromkeys(items, 0)
    positives = dict.fromkeys(items, 0)
    for (item, _), (p, n) in counts.items():
        positives[item] += p
        totals[item] += n
    for item in items:
        if totals[item] != N:
            raise ValueError(
                f"item {item!r} has {totals[item]} responses, expected {N}"
            )
    ranked = sorted(items, key=lambda i: (positives[i] / totals[i], i))
    pos = np.zeros((L, len(questions)), dtype=np.int64)
    tot = np.zeros_like(pos)
    for rank, item in enumerate(ranked):
        for col, question in enumerate(questions):
            cell = counts.get((item, question))
            if cell is None:
                raise ValueError(
                    f"no responses for item {item!r}, question {question!r}"
                )
            pos[rank, col] = cell[0]
            tot[rank, col] = cell[1]
    anchors = tuple((rank + 0.5) / L for rank in range(L))
    psi = pos / tot
    return QuestionBank(anchors, tuple(questions), psi, pos, tot)


def read_ratings_csv(path: str | Path) -> list[Rating]:
    """Rows of ``item_id,question,response`` with response in {0, 1}."""
    out: list[Rating] = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != [
            "item_id",
            "question",
            "response",
        ]:
            raise ValueError(f"expected header item_id,question,response in {path}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            if row[2] not in ("0", "1"):
                raise ValueError(f"{path}:{lineno}: response must be 0 or 1")
            out.append((row[0], row[1], int(row[2])))
    return out


def write_ratings_csv(path: str | Path, ratings: Iterable[Rating]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["item_id", "question", "response"])
        for item, question, response in ratings:
            writer.writerow([item, question, int(response)])


def read_qualities_csv(path: str | Path) -> dict[str, float]:
    """Rows of ``item_id,theta``."""
    out: dict[str, float] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["item_id", "theta"]:
            raise ValueError(f"expected header item_id,theta in {path}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            if row[0] in out:
                raise ValueError(f"{path}:{lineno}: duplicate item id {row[0]!r}")
            try:
                out[row[0]] = float(row[1])
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: theta must be a number, got {row[1]!r}"
                ) from None
    return out


def write_qualities_csv(path: str | Path, qualities: Mapping[str, float]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["item_id", "theta"])
        for item, theta in qualities.items():
            writer.writerow([item, repr(float(theta))])
