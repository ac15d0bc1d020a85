"""Slow, independent reference implementations for auditing the fast paths.

Nothing here reuses the counting, scoring, cycle checking or neighbour
enumeration code of the main modules.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from itertools import combinations, product
from typing import Collection, Iterable

from mahc.dataset import DiscreteDataset

Arc = tuple[int, int]


@dataclass(frozen=True)
class OracleReport:
    case: str
    fast: float
    oracle: float

    @property
    def abs_diff(self) -> float:
        return abs(self.fast - self.oracle)

    @property
    def rel_diff(self) -> float:
        return self.abs_diff / max(abs(self.oracle), 1e-300)

    def __str__(self) -> str:
        return (
            f"{self.case}: fast={self.fast!r} oracle={self.oracle!r} "
            f"abs={self.abs_diff:.3g} rel={self.rel_diff:.3g}"
        )


def _rows(d: DiscreteDataset) -> list[tuple[int, ...]]:
    return [tuple(int(x) for x in row) for row in d.codes.tolist()]


def oracle_family_score(rows: list[tuple[int, ...]], cards: list[int], child: int, parents: Iterable[int]) -> float:
    parents = sorted(parents)
    joint: Counter = Counter()
    marg: Counter = Counter()
    for row in rows:
        cfg = tuple(row[p] for p in parents)
        joint[cfg, row[child]] += 1
        marg[cfg] += 1
    ll = 0.0
    for (cfg, _), cnt in joint.items():
        ll += cnt * math.log(cnt / marg[cfg], 2)
    q = 1
    for p in parents:
        q *= cards[p]
    return ll - math.log(len(rows), 2) / 2 * (cards[child] - 1) * q


def oracle_bic(d: DiscreteDataset, arcs: Iterable[Arc]) -> float:
    """BIC by scanning every row for every node; no caching."""
    arcs = list(getattr(arcs, "arcs", arcs))
    rows = _rows(d)
    cards = [v.cardinality for v in d.variables]
    return sum(
        oracle_family_score(rows, cards, i, [a for a, b in arcs if b == i]) for i in range(d.num_vars)
    )


def dfs_acyclic(arcs: Iterable[Arc], n: int) -> bool:
    """Three-colour depth-first search."""
    adj = {v: [] for v in range(n)}
    for a, b in arcs:
        adj[a].append(b)
    colour = [0] * n

    def visit(v: int) -> bool:
        colour[v] = 1
        for c in adj[v]:
            if colour[c] == 1:
                return False
            if colour[c] == 0 and not visit(c):
                return False
        colour[v] = 2
        return True

    return all(colour[v] != 0 or visit(v) for v in range(n))


def all_dags(n: int) -> list[frozenset[Arc]]:
    """Every labelled DAG on ``n`` nodes (1, 1, 3, 25, 543, ...)."""
    if n > 5:
        raise ValueError("exhaustive DAG enumeration is limited to 5 nodes")
    pairs = list(combinations(range(n), 2))
    out = []
    for choice in product((0, 1, 2), repeat=len(pairs)):
        arcs = []
        for (a, b), c in zip(pairs, choice):
            if c == 1:
                arcs.append((a, b))
            elif c == 2:
                arcs.append((b, a))
        if dfs_acyclic(arcs, n):
            out.append(frozenset(arcs))
    return out


def equivalence_key(arcs: Collection[Arc]) -> tuple[frozenset, frozenset]:
    """(skeleton, v-structures): equal keys exactly characterise Markov equivalence."""
    skeleton = frozenset(frozenset(a) for a in arcs)
    parents: dict[int, set[int]] = {}
    for a, b in arcs:
        parents.setdefault(b, set()).add(a)
    vs = set()
    for c, ps in parents.items():
        for a, b in combinations(sorted(ps), 2):
            if frozenset((a, b)) not in skeleton:
                vs.add((a, c, b))
    return skeleton, frozenset(vs)


def oracle_exhaustive_best(d: DiscreteDataset, max_nodes: int = 4) -> tuple[frozenset[Arc], float]:
    """Highest-BIC DAG by brute force; the first found wins ties."""
    if d.num_vars > max_nodes or max_nodes > 4:
        raise ValueError(f"exhaustive search refused for {d.num_vars} nodes (limit {min(max_nodes, 4)})")
    rows = _rows(d)
    cards = [v.cardinality for v in d.variables]
    memo: dict[tuple[int, tuple[int, ...]], float] = {}

    def fam(i: int, ps: tuple[int, ...]) -> float:
        if (i, ps) not in memo:
            memo[i, ps] = oracle_family_score(rows, cards, i, ps)
        return memo[i, ps]

    best, best_score = None, -math.inf
    for arcs in sorted(all_dags(d.num_vars), key=lambda s: (len(s), sorted(s))):
        score = sum(fam(i, tuple(sorted(a for a, b in arcs if b == i))) for i in range(d.num_vars))
        if score > best_score:
            best, best_score = arcs, score
    return best, best_score


def oracle_neighbors(
    arcs: Collection[Arc], n: int, forbidden: Collection[Arc] = (), max_in_degree: int | None = None
) -> list[frozenset[Arc]]:
    """Valid single-edit neighbours by trying every ordered pair and filtering."""
    cap = n if max_in_degree is None else max_in_degree
    arcs = frozenset(arcs)
    out = []
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            if (a, b) in arcs:
                edits = [arcs - {(a, b)}, (arcs - {(a, b)}) | {(b, a)}]
            elif (b, a) not in arcs:
                edits = [arcs | {(a, b)}]
            else:
                continue
            for cand in edits:
                if any(x in forbidden for x in cand - arcs):
                    continue
                indeg = Counter(y for _, y in cand)
                if any(k > cap for k in indeg.values()):
                    continue
                if dfs_acyclic(cand, n):
                    out.append(cand)
    return out


def oracle_average(
    d: DiscreteDataset,
    arcs: Collection[Arc],
    forbidden: Collection[Arc] = (),
    max_in_degree: int | None = None,
) -> float:
    """Flat mean of the BIC of ``arcs`` and of every valid neighbour of it."""
    if d.num_vars > 5:
        raise ValueError("oracle_average is limited to 5 nodes")
    arcs = frozenset(getattr(arcs, "arcs", arcs))
    graphs = [arcs, *oracle_neighbors(arcs, d.num_vars, forbidden, max_in_degree)]
    rows = _rows(d)
    cards = [v.cardinality for v in d.variables]
    memo: dict[tuple[int, frozenset[int]], float] = {}
    total = 0.0
    for g in graphs:
        for i in range(d.num_vars):
            key = (i, frozenset(a for a, b in g if b == i))
            if key not in memo:
                memo[key] = oracle_family_score(rows, cards, i, key[1])
            total += memo[key]
    return total / len(graphs)
