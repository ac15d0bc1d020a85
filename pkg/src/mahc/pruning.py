"""Level-wise pre-processing of candidate parent sets with dynamic arc pruning.

At every in-degree level all parent sets that avoid already-forbidden arcs
are scored into the shared cache.  The pruning rule itself only looks at
the constrained sets: the empty set, every single parent, and at level
``m >= 2`` the sets made of the child's top ``m - 1`` ranked valid parents
plus one more candidate.  Whenever such a set scores no better than one of
its constrained subsets, every parent in the set difference loses its arc
into the child.  From level 2 on, only subsets that keep the child's top
parent are used for that comparison.  Pruning is applied once, at the end of each level.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

from mahc.dataset import DiscreteDataset
from mahc.scoring import ScoreCache

Arc = tuple[int, int]
ParentSet = tuple[int, ...]


def enumerate_cps_count(num_vars: int, mid: int, per_level: bool = False) -> int | list[int]:
    """Number of candidate parent sets up to in-degree ``mid`` without pruning.

    Sums C(|V|, m) * (|V| - m) for m = 0..mid.
    """
    if not 0 <= mid < num_vars:
        raise ValueError(f"max in-degree {mid} must lie in [0, {num_vars})")
    levels = [comb(num_vars, m) * (num_vars - m) for m in range(mid + 1)]
    return levels if per_level else sum(levels)


@dataclass(frozen=True)
class Witness:
    """The pair of parent sets whose scores triggered a prune."""

    subset: ParentSet
    superset: ParentSet
    subset_score: float
    superset_score: float
    level: int


@dataclass
class ForbiddenArcSet:
    arcs: set[Arc] = field(default_factory=set)
    witnesses: dict[Arc, Witness] = field(default_factory=dict)

    def __contains__(self, arc: object) -> bool:
        return arc in self.arcs

    def __iter__(self):
        return iter(sorted(self.arcs))

    def __len__(self) -> int:
        return len(self.arcs)

    def add(self, arc: Arc, witness: Witness) -> bool:
        if arc in self.arcs:
            return False
        self.arcs.add(arc)
        self.witnesses[arc] = witness
        return True


@dataclass
class LevelStats:
    level: int
    unpruned: int  # parent sets at this level without any pruning
    visited: int  # sets avoiding F at the start of the level (all scored)
    constrained: int  # sets the pruning rule was applied to
    pruned_arcs: int

    @property
    def skipped(self) -> int:
        return self.unpruned - self.visited


@dataclass
class PruneResult:
    forbidden: ForbiddenArcSet
    scores: ScoreCache
    levels: list[LevelStats]
    num_vars: int
    max_in_degree: int
    constrained_sets: dict[int, set[ParentSet]]
    timed_out: bool = False
    runtime_s: float = 0.0

    @property
    def visited(self) -> int:
        return sum(s.visited for s in self.levels)

    @property
    def skipped(self) -> int:
        """PR for this run: sets never scored because they held a forbidden arc."""
        return sum(s.skipped for s in self.levels)

    def report(self) -> str:
        lines = [
            f"num_vars={self.num_vars}",
            f"max_in_degree={self.max_in_degree}",
        ]
        for s in self.levels:
            lines += [
                f"level{s.level}_unpruned={s.unpruned}",
                f"level{s.level}_visited={s.visited}",
                f"level{s.level}_constrained={s.constrained}",
                f"level{s.level}_pruned={s.pruned_arcs}",
            ]
        lines += [
            f"cps_visited={self.visited}",
            f"cps_unpruned={sum(s.unpruned for s in self.levels)}",
            f"pr={self.skipped}",
            f"forbidden_arcs={len(self.forbidden)}",
            f"surviving_arcs={self.num_vars * (self.num_vars - 1) - len(self.forbidden)}",
            f"timed_out={str(self.timed_out).lower()}",
        ]
        return "\n".join(lines) + "\n"


def ranked_parents(
    child: int, num_vars: int, cache: ScoreCache, forbidden: ForbiddenArcSet
) -> list[int]:
    """Valid parents of ``child`` by descending single-parent score.

    A parent is valid when its arc is not forbidden and it beats the empty
    set on its own. Ties go to the lower index.
    """
    empty = cache.score(child, ())
    ranked = []
    for p in range(num_vars):
        if p == child or (p, child) in forbidden:
            continue
        s = cache.get(child, (p,))
        if s is not None and s > empty:
            ranked.append((-s, p))
    ranked.sort()
    return [p for _, p in ranked]


def _violates(child: int, parents: ParentSet, forbidden: ForbiddenArcSet) -> bool:
    return any((p, child) in forbidden for p in parents)


def preprocess_and_prune(
    d: DiscreteDataset,
    m_p: int = 3,
    cache: ScoreCache | None = None,
    deadline: float | None = None,
) -> PruneResult:
    """Score parent sets level by level up to ``m_p`` parents and prune arcs.

    ``deadline`` is a ``time.monotonic()`` value checked between levels; on
    expiry the result so far is returned with ``timed_out`` set.
    """
    n = d.num_vars
    if not 1 <= m_p < n:
        raise ValueError(f"m_p={m_p} must lie in [1, {n})")
    start = time.perf_counter()
    cache = cache if cache is not None else ScoreCache(d)
    forbidden = ForbiddenArcSet()
    constrained: dict[int, set[ParentSet]] = {i: set() for i in range(n)}
    levels: list[LevelStats] = []
    timed_out = False
    unpruned = enumerate_cps_count(n, m_p, per_level=True)

    for m in range(m_p + 1):
        if deadline is not None and time.monotonic() > deadline:
            timed_out = True
            break
        visited = 0
        fresh: dict[int, list[ParentSet]] = {i: [] for i in range(n)}
        for child in range(n):
            others = [p for p in range(n) if p != child and (p, child) not in forbidden]
            for parents in combinations(others, m):
                cache.score(child, parents)
                visited += 1
            if m <= 1:
                fresh[child] = [tuple(ps) for ps in combinations(others, m)]
                continue
            top = ranked_parents(child, n, cache, forbidden)
            if len(top) < m - 1:
                continue
            base = tuple(top[: m - 1])
            for k in others:
                if k in base:
                    continue
                fresh[child].append(tuple(sorted(base + (k,))))

        pruned_here = 0
        n_constrained = 0
        # Decide all prunes against the level-start F so order within a level is irrelevant.
        decisions: list[tuple[Arc, Witness]] = []
        for child in range(n):
            for sup in fresh[child]:
                constrained[child].add(sup)
                n_constrained += 1
            if m == 0:
                continue
            # Above level 1 only subsets holding the child's top parent take part.
            anchor = ranked_parents(child, n, cache, forbidden)[:1] if m >= 2 else []
            for sup in fresh[child]:
                s_sup = cache.score(child, sup)
                sup_set = set(sup)
                for sub in sorted(constrained[child], key=lambda ps: (len(ps), ps)):
                    if len(sub) >= len(sup) or not set(sub) < sup_set:
                        continue
                    if anchor and anchor[0] not in sub:
                        continue
                    s_sub = cache.score(child, sub)
                    if s_sub >= s_sup:
                        w = Witness(sub, sup, s_sub, s_sup, m)
                        for p in sorted(sup_set - set(sub)):
                            decisions.append(((p, child), w))
        for arc, w in decisions:
            if forbidden.add(arc, w):
                pruned_here += 1
        levels.append(LevelStats(m, unpruned[m], visited, n_constrained, pruned_here))

    return PruneResult(
        forbidden=forbidden,
        scores=cache,
        levels=levels,
        num_vars=n,
        max_in_degree=m_p,
        constrained_sets=constrained,
        timed_out=timed_out,
        runtime_s=time.perf_counter() - start,
    )


def surviving_arcs(p: PruneResult | ForbiddenArcSet, num_vars: int) -> set[Arc]:
    forbidden = p.forbidden if isinstance(p, PruneResult) else p
    return {
        (a, b) for a in range(num_vars) for b in range(num_vars) if a != b and (a, b) not in forbidden
    }
