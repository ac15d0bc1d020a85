"""Decomposable log2-BIC scoring with a shared local-score cache."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

import numpy as np

from mahc.dataset import DiscreteDataset, family_counts
from mahc.errors import CycleError

if TYPE_CHECKING:
    from mahc.graph import Dag


@dataclass(frozen=True)
class ScoredParentSet:
    child: int
    parents: tuple[int, ...]
    score: float


def local_free_parameters(child: int, parents: Iterable[int], cardinalities: Iterable[int]) -> int:
    """(|V_i| - 1) times the product of the parents' state counts."""
    card = list(cardinalities)
    parents = set(parents)
    if child in parents:
        raise ValueError(f"child {child} is listed among its own parents")
    p = card[child] - 1
    for k in parents:
        p *= card[k]
    return p


def graph_free_parameters(g: "Dag", cardinalities: Iterable[int]) -> int:
    card = list(cardinalities)
    return sum(local_free_parameters(i, g.parents(i), card) for i in range(g.n))


def _log_likelihood(counts: np.ndarray) -> float:
    counts = counts.astype(np.float64)
    totals = counts.sum(axis=1, keepdims=True)
    nz = counts > 0
    ratio = np.divide(counts, totals, out=np.ones_like(counts), where=nz)
    return float(np.sum(counts[nz] * np.log2(ratio[nz])))


def compute_local_bic(d: DiscreteDataset, child: int, parents: tuple[int, ...]) -> float:
    ll = _log_likelihood(family_counts(d, child, parents))
    penalty = 0.5 * math.log2(d.n) * local_free_parameters(child, parents, d.cardinalities)
    return ll - penalty


class ScoreCache:
    """Memoized local BIC scores for one dataset, keyed by (child, sorted parents).

    Insertion is insert-if-absent, so concurrent evaluators may duplicate work
    but never store diverging values.
    """

    def __init__(self, d: DiscreteDataset):
        self.dataset = d
        self._scores: dict[tuple[int, tuple[int, ...]], float] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._scores)

    def __contains__(self, key: tuple[int, Iterable[int]]) -> bool:
        child, parents = key
        return (child, tuple(sorted(parents))) in self._scores

    def get(self, child: int, parents: Iterable[int]) -> float | None:
        return self._scores.get((child, tuple(sorted(parents))))

    def score(self, child: int, parents: Iterable[int]) -> float:
        key = (child, tuple(sorted(parents)))
        value = self._scores.get(key)
        if value is not None:
            self.hits += 1
            return value
        self.misses += 1
        value = compute_local_bic(self.dataset, child, key[1])
        with self._lock:
            return self._scores.setdefault(key, value)

    def entries(self) -> list[ScoredParentSet]:
        return [ScoredParentSet(c, p, s) for (c, p), s in sorted(self._scores.items())]


def local_bic(
    d: DiscreteDataset, child: int, parents: Iterable[int], cache: ScoreCache | None = None
) -> float:
    """Local log2-BIC of ``child`` given ``parents``.

    Zero counts and unobserved parent configurations contribute nothing to
    the log-likelihood; the penalty uses full state-space cardinalities.
    """
    if cache is not None:
        if cache.dataset is not d:
            raise ValueError("score cache belongs to a different dataset")
        return cache.score(child, parents)
    parents = tuple(sorted(set(parents)))
    if child in parents:
        raise ValueError(f"child {child} is listed among its own parents")
    return compute_local_bic(d, child, parents)


def graph_bic(d: DiscreteDataset, g: "Dag", cache: ScoreCache | None = None) -> float:
    from mahc.graph import is_acyclic

    if g.n != d.num_vars:
        raise ValueError(f"graph has {g.n} nodes but dataset has {d.num_vars} variables")
    if not is_acyclic(g.arcs, g.n):
        raise CycleError("graph contains a directed cycle")
    return sum(local_bic(d, i, g.parents(i), cache) for i in range(g.n))
