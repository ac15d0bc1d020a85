"""Hill-climbing, tabu search and model-averaging hill-climbing over DAGs."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Collection, Iterable, Sequence

import numpy as np

from mahc.dataset import DiscreteDataset
from mahc.errors import ConfigurationError
from mahc.graph import Arc, Dag, Move, MoveKind, _edit
from mahc.pruning import ForbiddenArcSet, PruneResult, preprocess_and_prune
from mahc.scoring import ScoreCache, graph_bic, graph_free_parameters

log = logging.getLogger(__name__)

ALGORITHMS = ("hc", "tabu", "mahc", "mahc_only_pruning", "mahc_only_averaging")
ALGORITHM_ALIASES = {
    "mahc-prune-only": "mahc_only_pruning",
    "mahc-avg-only": "mahc_only_averaging",
}

# Relative slack for "strictly better": keeps float noise from score-equivalent
# moves (e.g. covered-arc reversals) from counting as progress.
_REL_TOL = 1e-10


@dataclass
class SearchConfig:
    algorithm: str = "mahc"
    m_p: int = 3
    m_s: int = 8
    tabu_escapes: int | None = None
    tabu_tenure: int = 10
    aggregate: str = "mean"

    def __post_init__(self) -> None:
        self.algorithm = ALGORITHM_ALIASES.get(self.algorithm, self.algorithm)
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(
                f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}"
            )
        if self.m_p < 1 or self.m_s < 1:
            raise ConfigurationError("maximum in-degrees must be at least 1")
        if self.uses_pruning and self.m_s < self.m_p:
            raise ConfigurationError(f"m_s={self.m_s} must be >= m_p={self.m_p}")
        if self.aggregate not in ("mean", "self"):
            raise ConfigurationError(f"unknown aggregate {self.aggregate!r}")
        if self.tabu_escapes is not None and self.tabu_escapes < 0:
            raise ConfigurationError("tabu_escapes must be nonnegative")

    @property
    def uses_pruning(self) -> bool:
        return self.algorithm in ("mahc", "mahc_only_pruning")

    @property
    def uses_averaging(self) -> bool:
        return self.algorithm in ("mahc", "mahc_only_averaging")


@dataclass(frozen=True)
class TraceStep:
    iteration: int
    move: Move | None
    objective: float


@dataclass
class SearchResult:
    graph: Dag
    final_objective: float
    plain_bic: float
    iterations: int
    trace: list[TraceStep] = field(default_factory=list)
    algorithm: str = ""
    forbidden: ForbiddenArcSet | None = None
    prune: PruneResult | None = None
    free_parameters: int = 0
    runtime_s: float = 0.0
    timed_out: bool = False

    @property
    def edges(self) -> int:
        return len(self.graph.arcs)

    def write_trace(self, path: str | Path, names: Sequence[str] | None = None) -> None:
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            fh.write("iteration,move_kind,parent,child,objective\n")
            for step in self.trace:
                if step.move is None:
                    fh.write(f"{step.iteration},start,,,{step.objective!r}\n")
                    continue
                p, c = step.move.parent, step.move.child
                if names is not None:
                    p, c = names[p], names[c]
                kind = step.move.kind.name.lower()
                fh.write(f"{step.iteration},{kind},{p},{c},{step.objective!r}\n")


def _better(new: float, old: float) -> bool:
    return new - old > _REL_TOL * max(1.0, abs(old))


def _first_best(values) -> int:
    """Index of the first value within the improvement tolerance of the maximum.

    Score-equivalent edits differ only by float noise, so a plain argmax
    would break their ties arbitrarily.
    """
    values = np.asarray(values, dtype=float)
    top = float(values.max())
    return int(np.flatnonzero(values >= top - _REL_TOL * max(1.0, abs(top)))[0])


def _closure(adj: np.ndarray) -> np.ndarray:
    """Reachability over paths of length >= 1, by repeated squaring."""
    reach = adj.copy()
    m = adj.astype(np.float32)
    while True:
        r = reach.astype(np.float32)
        nxt = reach | ((r @ m) > 0)
        if np.array_equal(nxt, reach):
            return reach
        reach = nxt


class _State:
    """Parent sets plus the matrices needed to validate and score every move."""

    __slots__ = ("parents", "adj", "reach", "indeg", "score", "delta")

    def __init__(self, parents, adj, reach, indeg, score, delta):
        self.parents: list[frozenset[int]] = parents
        self.adj: np.ndarray = adj
        self.reach: np.ndarray = reach
        self.indeg: np.ndarray = indeg
        self.score: float = score
        self.delta: np.ndarray = delta

    def dag(self) -> Dag:
        n = len(self.parents)
        return Dag(n, [(p, c) for c in range(n) for p in self.parents[c]])


class MoveEvaluator:
    """Scores all single-arc edits of a graph from cached local-score deltas.

    ``delta[a, b]`` holds the change in ``b``'s local score from toggling
    the arc a->b (delete when present, add otherwise) and is NaN where the
    addition is not allowed. A column depends only on ``b``'s parent set,
    so neighbours share all columns except those of the edited children.
    """

    def __init__(
        self,
        cache: ScoreCache,
        forbidden: Collection[Arc] = (),
        max_in_degree: int | None = None,
    ):
        d = cache.dataset
        self.cache = cache
        self.n = n = d.num_vars
        self.m_s = n if max_in_degree is None else max_in_degree
        allowed = ~np.eye(n, dtype=bool)
        for a, b in forbidden:
            allowed[a, b] = False
        self.allowed = allowed
        self._columns: dict[tuple[int, frozenset[int]], np.ndarray] = {}
        self._local: dict[tuple[int, frozenset[int]], float] = {}

    def local(self, b: int, pa: frozenset[int]) -> float:
        key = (b, pa)
        v = self._local.get(key)
        if v is None:
            v = self._local[key] = self.cache.score(b, pa)
        return v

    def column(self, b: int, pa: frozenset[int]) -> np.ndarray:
        key = (b, pa)
        col = self._columns.get(key)
        if col is not None:
            return col
        base = self.local(b, pa)
        col = np.full(self.n, np.nan)
        can_add = len(pa) < self.m_s
        for a in range(self.n):
            if a == b:
                continue
            if a in pa:
                col[a] = self.local(b, pa - {a}) - base
            elif can_add and self.allowed[a, b]:
                col[a] = self.local(b, pa | {a}) - base
        self._columns[key] = col
        return col

    def state(self, g: Dag) -> _State:
        n = self.n
        parents = [g.parents(i) for i in range(n)]
        adj = np.zeros((n, n), dtype=bool)
        for a, b in g.arcs:
            adj[a, b] = True
        delta = np.empty((n, n))
        for b in range(n):
            delta[:, b] = self.column(b, parents[b])
        score = sum(self.local(b, parents[b]) for b in range(n))
        return _State(parents, adj, _closure(adj), adj.sum(axis=0), score, delta)

    def step(self, s: _State, m: Move, move_delta: float | None = None) -> _State:
        a, b = m.parent, m.child
        parents = list(s.parents)
        adj = s.adj.copy()
        delta = s.delta.copy()
        indeg = s.indeg.copy()
        if m.kind is MoveKind.ADD:
            parents[b] = parents[b] | {a}
            adj[a, b] = True
            indeg[b] += 1
            src = s.reach[:, a].copy()
            src[a] = True
            dst = s.reach[b, :].copy()
            dst[b] = True
            reach = s.reach | np.outer(src, dst)
            touched = (b,)
        else:
            parents[b] = parents[b] - {a}
            adj[a, b] = False
            indeg[b] -= 1
            touched = (b,)
            if m.kind is MoveKind.REVERSE:
                parents[a] = parents[a] | {b}
                adj[b, a] = True
                indeg[a] += 1
                touched = (b, a)
            reach = _closure(adj)
        score = s.score
        if move_delta is None:
            score += sum(self.local(t, parents[t]) - self.local(t, s.parents[t]) for t in touched)
        else:
            score += move_delta
        for t in touched:
            delta[:, t] = self.column(t, parents[t])
        return _State(parents, adj, reach, indeg, score, delta)

    def moves(self, s: _State) -> tuple[list[Move], np.ndarray]:
        """Valid moves of ``s`` in (kind, parent, child) order with their score deltas."""
        add_mask, rev_mask = self._masks(s)
        moves: list[Move] = []
        deltas: list[np.ndarray] = []
        for kind, mask, values in (
            (MoveKind.ADD, add_mask, s.delta),
            (MoveKind.DELETE, s.adj, s.delta),
            (MoveKind.REVERSE, rev_mask, s.delta + s.delta.T),
        ):
            idx = np.argwhere(mask)
            moves.extend(Move(kind, int(a), int(b)) for a, b in idx)
            deltas.append(values[mask])
        return moves, np.concatenate(deltas) if deltas else np.empty(0)

    def neighborhood_sum(self, s: _State) -> tuple[float, int]:
        """Sum of score deltas over all valid moves, and their count."""
        add_mask, rev_mask = self._masks(s)
        d = s.delta
        total = d[add_mask].sum() + d[s.adj].sum() + (d + d.T)[rev_mask].sum()
        count = int(add_mask.sum() + s.adj.sum() + rev_mask.sum())
        return float(total), count

    def _masks(self, s: _State) -> tuple[np.ndarray, np.ndarray]:
        room = s.indeg < self.m_s
        add_mask = self.allowed & ~s.adj & ~s.adj.T & ~s.reach.T & room[None, :]
        # a->b can flip only if no other directed path a ~> b exists
        other_path = (s.adj.astype(np.float32) @ s.reach.astype(np.float32)) > 0
        rev_mask = s.adj & self.allowed.T & room[:, None] & ~other_path
        return add_mask, rev_mask


def candidate_averages(
    evaluator: MoveEvaluator, s: _State, aggregate: str = "mean"
) -> tuple[list[Move], np.ndarray, list[float]]:
    """For every valid neighbour of ``s``: its move, plain score delta and averaged score."""
    moves, deltas = evaluator.moves(s)
    averages = []
    for m, dlt in zip(moves, deltas):
        nxt = evaluator.step(s, m, float(dlt))
        if aggregate == "self":
            averages.append(nxt.score)
            continue
        total, count = evaluator.neighborhood_sum(nxt)
        averages.append(nxt.score + total / (count + 1))
    return moves, deltas, averages


def neighborhood_average(evaluator: MoveEvaluator, g: Dag) -> float:
    """Mean score of ``g`` and all of its valid neighbours."""
    s = evaluator.state(g)
    total, count = evaluator.neighborhood_sum(s)
    return s.score + total / (count + 1)


def _forbidden_arcs(forbidden) -> Collection[Arc]:
    if forbidden is None:
        return ()
    if isinstance(forbidden, PruneResult):
        return forbidden.forbidden.arcs
    if isinstance(forbidden, ForbiddenArcSet):
        return forbidden.arcs
    return set(forbidden)


def _expired(deadline: float | None) -> bool:
    return deadline is not None and time.monotonic() > deadline


def _finish(d, cache, s: _State, objective, iterations, trace, cfg, start, timed_out, forbidden=None, prune=None):
    g = s.dag()
    return SearchResult(
        graph=g,
        final_objective=objective,
        plain_bic=graph_bic(d, g),
        iterations=iterations,
        trace=trace,
        algorithm=cfg.algorithm,
        forbidden=forbidden,
        prune=prune,
        free_parameters=graph_free_parameters(g, d.cardinalities),
        runtime_s=time.perf_counter() - start,
        timed_out=timed_out,
    )


def hill_climb(
    d: DiscreteDataset,
    cfg: SearchConfig | None = None,
    forbidden=None,
    cache: ScoreCache | None = None,
    deadline: float | None = None,
) -> SearchResult:
    """Greedy best-improvement search from the empty DAG.

    Ties between equally good moves go to the first in (kind, parent,
    child) order, with additions before deletions before reversals.
    """
    cfg = cfg or SearchConfig(algorithm="hc")
    start = time.perf_counter()
    cache = cache if cache is not None else ScoreCache(d)
    ev = MoveEvaluator(cache, _forbidden_arcs(forbidden), cfg.m_s)
    s = ev.state(Dag.empty(d.num_vars))
    trace = [TraceStep(0, None, s.score)]
    it = 0
    timed_out = False
    while True:
        if _expired(deadline):
            timed_out = True
            break
        moves, deltas = ev.moves(s)
        if not moves:
            break
        best = _first_best(s.score + deltas)
        if not _better(s.score + deltas[best], s.score):
            break
        s = ev.step(s, moves[best], float(deltas[best]))
        it += 1
        trace.append(TraceStep(it, moves[best], s.score))
    fb = forbidden if isinstance(forbidden, ForbiddenArcSet) else None
    return _finish(d, cache, s, s.score, it, trace, cfg, start, timed_out, forbidden=fb)


def tabu_search(
    d: DiscreteDataset,
    cfg: SearchConfig | None = None,
    cache: ScoreCache | None = None,
    deadline: float | None = None,
    forbidden=None,
) -> SearchResult:
    """Hill-climbing that escapes local optima through the least-bad non-tabu move.

    The inverse of every executed move stays tabu for ``cfg.tabu_tenure``
    iterations and at most ``cfg.tabu_escapes`` non-improving moves are
    made. The best graph visited is returned.
    """
    cfg = cfg or SearchConfig(algorithm="tabu")
    start = time.perf_counter()
    cache = cache if cache is not None else ScoreCache(d)
    n = d.num_vars
    budget = n * (n - 1) if cfg.tabu_escapes is None else cfg.tabu_escapes
    ev = MoveEvaluator(cache, _forbidden_arcs(forbidden), cfg.m_s)
    s = ev.state(Dag.empty(n))
    best_state = s
    trace = [TraceStep(0, None, s.score)]
    tabu: dict[Move, int] = {}
    escapes = 0
    it = 0
    timed_out = False
    while True:
        if _expired(deadline):
            timed_out = True
            break
        moves, deltas = ev.moves(s)
        # aspiration: a tabu move is allowed when it beats the best graph so far
        order = [
            i for i, m in enumerate(moves)
            if tabu.get(m, -1) < it or _better(s.score + deltas[i], best_state.score)
        ]
        if not order:
            break
        best = order[_first_best(s.score + deltas[order])]
        improving = _better(s.score + deltas[best], s.score)
        if not improving:
            if escapes >= budget:
                break
            escapes += 1
        m = moves[best]
        s = ev.step(s, m, float(deltas[best]))
        it += 1
        tabu[m.inverse()] = it + cfg.tabu_tenure - 1
        trace.append(TraceStep(it, m, s.score))
        if _better(s.score, best_state.score):
            best_state = s
    fb = forbidden if isinstance(forbidden, ForbiddenArcSet) else None
    return _finish(d, cache, best_state, best_state.score, it, trace, cfg, start, timed_out, forbidden=fb)


def mahc(
    d: DiscreteDataset,
    cfg: SearchConfig | None = None,
    cache: ScoreCache | None = None,
    prune: PruneResult | None = None,
    deadline: float | None = None,
) -> SearchResult:
    """Model-averaging hill-climbing.

    Each valid neighbour G_n of the current graph is rated by the mean BIC
    of G_n and every valid neighbour of G_n; the search moves to the best
    rated neighbour while that rating keeps rising.  With
    ``cfg.algorithm == "mahc"`` arcs are first pruned by
    ``preprocess_and_prune`` and the same cache is reused.
    """
    cfg = cfg or SearchConfig(algorithm="mahc")
    if not cfg.uses_averaging:
        raise ConfigurationError(f"mahc() cannot run algorithm {cfg.algorithm!r}")
    start = time.perf_counter()
    cache = cache if cache is not None else ScoreCache(d)
    forbidden = None
    if cfg.uses_pruning:
        if prune is None:
            prune = preprocess_and_prune(d, cfg.m_p, cache, deadline=deadline)
        forbidden = prune.forbidden
    ev = MoveEvaluator(cache, _forbidden_arcs(forbidden), cfg.m_s)
    s = ev.state(Dag.empty(d.num_vars))
    if cfg.aggregate == "self":
        s_max = s.score
    else:
        total, count = ev.neighborhood_sum(s)
        s_max = s.score + total / (count + 1)
    trace = [TraceStep(0, None, s_max)]
    it = 0
    timed_out = prune is not None and prune.timed_out
    while not timed_out:
        if _expired(deadline):
            timed_out = True
            break
        moves, deltas, averages = candidate_averages(ev, s, cfg.aggregate)
        if not moves:
            break
        best = _first_best(averages)
        if not _better(averages[best], s_max):
            break
        s = ev.step(s, moves[best], float(deltas[best]))
        s_max = averages[best]
        it += 1
        trace.append(TraceStep(it, moves[best], s_max))
        log.debug("mahc iteration %d: %s avg=%.4f bic=%.4f", it, moves[best], s_max, s.score)
    return _finish(d, cache, s, s_max, it, trace, cfg, start, timed_out, forbidden=forbidden, prune=prune)


def run_algorithm(
    d: DiscreteDataset,
    cfg: SearchConfig,
    cache: ScoreCache | None = None,
    deadline: float | None = None,
) -> SearchResult:
    """Dispatch one of the five supported algorithms on ``d``."""
    if not isinstance(cfg, SearchConfig):
        raise ConfigurationError("expected a SearchConfig")
    start = time.perf_counter()
    cache = cache if cache is not None else ScoreCache(d)
    if cfg.algorithm == "hc":
        result = hill_climb(d, cfg, None, cache, deadline)
    elif cfg.algorithm == "tabu":
        result = tabu_search(d, cfg, cache, deadline)
    elif cfg.algorithm == "mahc_only_pruning":
        prune = preprocess_and_prune(d, cfg.m_p, cache, deadline=deadline)
        result = hill_climb(d, cfg, prune.forbidden, cache, deadline)
        result.prune = prune
        result.timed_out = result.timed_out or prune.timed_out
    else:
        result = mahc(d, cfg, cache, deadline=deadline)
    result.runtime_s = time.perf_counter() - start
    return result
