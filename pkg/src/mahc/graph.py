"""DAGs, mixed graphs, single-arc moves and CPDAG conversion."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from itertools import combinations
from pathlib import Path
from typing import Collection, Iterable, Sequence

from mahc.errors import CycleError, DataFormatError, SchemaError

Arc = tuple[int, int]


def is_acyclic(arcs: Iterable[Arc], n: int | None = None) -> bool:
    """Kahn's algorithm over an arbitrary arc set."""
    arcs = list(arcs)
    nodes = set(range(n)) if n is not None else set()
    for a, b in arcs:
        nodes.update((a, b))
    indeg = {v: 0 for v in nodes}
    children: dict[int, list[int]] = {v: [] for v in nodes}
    for a, b in set(arcs):
        if a == b:
            return False
        indeg[b] += 1
        children[a].append(b)
    stack = [v for v, k in indeg.items() if k == 0]
    seen = 0
    while stack:
        v = stack.pop()
        seen += 1
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                stack.append(c)
    return seen == len(nodes)


class Dag:
    """Immutable directed acyclic graph over nodes ``0..n-1``."""

    __slots__ = ("n", "arcs", "_parents", "_children", "_hash")

    def __init__(self, n: int, arcs: Iterable[Arc] = ()):
        arcs = frozenset((int(a), int(b)) for a, b in arcs)
        parents: list[set[int]] = [set() for _ in range(n)]
        children: list[set[int]] = [set() for _ in range(n)]
        for a, b in arcs:
            if a == b:
                raise CycleError(f"self-loop on node {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise IndexError(f"arc {(a, b)} out of range for {n} nodes")
            parents[b].add(a)
            children[a].add(b)
        self.n = n
        self.arcs = arcs
        self._parents = tuple(frozenset(p) for p in parents)
        self._children = tuple(frozenset(c) for c in children)
        self._hash = None
        if not is_acyclic(arcs, n):
            raise CycleError("arc set contains a directed cycle")

    @classmethod
    def _trusted(cls, n: int, arcs: frozenset, parents: tuple, children: tuple) -> "Dag":
        g = object.__new__(cls)
        g.n, g.arcs, g._parents, g._children, g._hash = n, arcs, parents, children, None
        return g

    @classmethod
    def empty(cls, n: int) -> "Dag":
        return cls(n)

    def parents(self, v: int) -> frozenset[int]:
        return self._parents[v]

    def children(self, v: int) -> frozenset[int]:
        return self._children[v]

    def in_degree(self, v: int) -> int:
        return len(self._parents[v])

    def has_arc(self, a: int, b: int) -> bool:
        return b in self._children[a]

    def adjacent(self, a: int, b: int) -> bool:
        return b in self._children[a] or a in self._children[b]

    def reaches(self, src: int, dst: int, skip: Arc | None = None) -> bool:
        """True if a directed path src ~> dst exists, optionally ignoring one arc."""
        stack, seen = [src], {src}
        while stack:
            v = stack.pop()
            for c in self._children[v]:
                if skip is not None and (v, c) == skip:
                    continue
                if c == dst:
                    return True
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return False

    def topological_order(self) -> list[int]:
        indeg = [len(p) for p in self._parents]
        stack = [v for v in range(self.n - 1, -1, -1) if indeg[v] == 0]
        order = []
        while stack:
            v = stack.pop()
            order.append(v)
            for c in sorted(self._children[v], reverse=True):
                indeg[c] -= 1
                if indeg[c] == 0:
                    stack.append(c)
        return order

    def skeleton(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(a) for a in self.arcs)

    def v_structures(self) -> frozenset[tuple[int, int, int]]:
        """Triples (a, c, b) with a < b, a -> c <- b and a, b non-adjacent."""
        out = set()
        for c in range(self.n):
            for a, b in combinations(sorted(self._parents[c]), 2):
                if not self.adjacent(a, b):
                    out.add((a, c, b))
        return frozenset(out)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return self.n == other.n and self.arcs == other.arcs

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n, self.arcs))
        return self._hash

    def __repr__(self) -> str:
        return f"Dag(n={self.n}, arcs={sorted(self.arcs)})"


class MoveKind(IntEnum):
    ADD = 0
    DELETE = 1
    REVERSE = 2


@dataclass(frozen=True, order=True)
class Move:
    kind: MoveKind
    parent: int
    child: int

    @property
    def arc(self) -> Arc:
        return (self.parent, self.child)

    def inverse(self) -> "Move":
        if self.kind is MoveKind.ADD:
            return Move(MoveKind.DELETE, self.parent, self.child)
        if self.kind is MoveKind.DELETE:
            return Move(MoveKind.ADD, self.parent, self.child)
        return Move(MoveKind.REVERSE, self.child, self.parent)

    def __str__(self) -> str:
        return f"{self.kind.name.lower()}({self.parent}->{self.child})"


def _edit(g: Dag, m: Move) -> Dag:
    a, b = m.arc
    parents = list(g._parents)
    children = list(g._children)
    arcs = set(g.arcs)
    if m.kind is MoveKind.ADD:
        arcs.add((a, b))
        parents[b] = parents[b] | {a}
        children[a] = children[a] | {b}
    elif m.kind is MoveKind.DELETE:
        arcs.discard((a, b))
        parents[b] = parents[b] - {a}
        children[a] = children[a] - {b}
    else:
        arcs.discard((a, b))
        arcs.add((b, a))
        parents[b] = parents[b] - {a}
        children[a] = children[a] - {b}
        parents[a] = parents[a] | {b}
        children[b] = children[b] | {a}
    return Dag._trusted(g.n, frozenset(arcs), tuple(parents), tuple(children))


def apply_move(g: Dag, m: Move) -> Dag:
    """Return the neighbour of ``g`` produced by ``m``.

    Raises ``CycleError`` when an addition or reversal closes a cycle and
    ``ValueError`` when the move does not fit the graph.
    """
    a, b = m.arc
    if a == b:
        raise ValueError("moves cannot involve a self-loop")
    if m.kind is MoveKind.ADD:
        if g.has_arc(a, b):
            raise ValueError(f"arc {a}->{b} already present")
        if g.has_arc(b, a) or g.reaches(b, a):
            raise CycleError(f"adding {a}->{b} creates a cycle")
    elif m.kind is MoveKind.DELETE:
        if not g.has_arc(a, b):
            raise ValueError(f"arc {a}->{b} not present")
    else:
        if not g.has_arc(a, b):
            raise ValueError(f"arc {a}->{b} not present")
        if g.reaches(a, b, skip=(a, b)):
            raise CycleError(f"reversing {a}->{b} creates a cycle")
    return _edit(g, m)


def candidate_moves(
    g: Dag, forbidden: Collection[Arc] = (), max_in_degree: int | None = None
) -> list[Move]:
    """Every valid single-arc edit of ``g``, in (kind, parent, child) order."""
    n = g.n
    cap = n if max_in_degree is None else max_in_degree
    adds, deletes, reverses = [], [], []
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            if g.has_arc(a, b):
                deletes.append(Move(MoveKind.DELETE, a, b))
                if (b, a) not in forbidden and g.in_degree(a) < cap and not g.reaches(a, b, skip=(a, b)):
                    reverses.append(Move(MoveKind.REVERSE, a, b))
            elif not g.has_arc(b, a):
                if (a, b) not in forbidden and g.in_degree(b) < cap and not g.reaches(b, a):
                    adds.append(Move(MoveKind.ADD, a, b))
    return adds + deletes + reverses


def valid_neighbors(
    g: Dag, forbidden: Collection[Arc] = (), max_in_degree: int | None = None
) -> list[tuple[Move, Dag]]:
    """Acyclic single-edit neighbours that avoid ``forbidden`` and respect the in-degree cap."""
    return [(m, _edit(g, m)) for m in candidate_moves(g, forbidden, max_in_degree)]


# Mixed graphs ---------------------------------------------------------------

DIRECTED = "->"
UNDIRECTED = "--"
BIDIRECTED = "<->"
_REVERSED = "<-"
MARK_TOKENS = (DIRECTED, UNDIRECTED, BIDIRECTED)


class MixedGraph:
    """At most one edge per unordered pair, marked ->, -- or <->.

    Internally each pair is keyed ``(i, j)`` with ``i < j``; a directed
    edge j->i is stored with the mark ``"<-"``.
    """

    def __init__(self, n: int, edges: Iterable[tuple[int, int, str]] = ()):
        self.n = n
        self._marks: dict[tuple[int, int], str] = {}
        for a, b, mark in edges:
            self.add_edge(a, b, mark)

    def add_edge(self, a: int, b: int, mark: str) -> None:
        if a == b:
            raise ValueError(f"self-loop on node {a}")
        if not (0 <= a < self.n and 0 <= b < self.n):
            raise IndexError(f"edge {(a, b)} out of range for {self.n} nodes")
        if mark not in MARK_TOKENS:
            raise ValueError(f"unknown edge mark {mark!r}")
        key = (min(a, b), max(a, b))
        if key in self._marks:
            raise ValueError(f"pair {key} already has an edge")
        if mark == DIRECTED and a > b:
            mark = _REVERSED
        self._marks[key] = mark

    def mark(self, a: int, b: int) -> str | None:
        """Mark of the pair as seen from ``a`` to ``b`` ("->" means a->b)."""
        m = self._marks.get((min(a, b), max(a, b)))
        if m is None or a < b or m in (UNDIRECTED, BIDIRECTED):
            return m
        return _REVERSED if m == DIRECTED else DIRECTED

    def edges(self) -> list[tuple[int, int, str]]:
        out = []
        for (i, j), m in sorted(self._marks.items()):
            out.append((j, i, DIRECTED) if m == _REVERSED else (i, j, m))
        return out

    def pairs(self) -> dict[tuple[int, int], str]:
        return dict(self._marks)

    def __len__(self) -> int:
        return len(self._marks)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MixedGraph):
            return NotImplemented
        return self.n == other.n and self._marks == other._marks

    def __hash__(self) -> int:
        return hash((self.n, frozenset(self._marks.items())))

    def __repr__(self) -> str:
        return f"MixedGraph(n={self.n}, edges={self.edges()})"

    @classmethod
    def from_dag(cls, g: Dag) -> "MixedGraph":
        return cls(g.n, ((a, b, DIRECTED) for a, b in g.arcs))


def to_cpdag(g: Dag) -> MixedGraph:
    """Essential graph of ``g``'s Markov equivalence class.

    Arcs in v-structures are fixed, then Meek's rules 1-3 propagate
    orientations to a fixpoint; rule 4 never fires when starting from a
    DAG's own v-structures.
    """
    n = g.n
    directed: set[Arc] = set()
    for a, c, b in g.v_structures():
        directed.add((a, c))
        directed.add((b, c))
    undirected = {frozenset(arc) for arc in g.arcs if arc not in directed}

    def adjacent(x: int, y: int) -> bool:
        return g.adjacent(x, y)

    def orient(x: int, y: int) -> None:
        undirected.discard(frozenset((x, y)))
        directed.add((x, y))

    changed = True
    while changed:
        changed = False
        for edge in sorted(undirected, key=sorted):
            if edge not in undirected:
                continue
            x, y = sorted(edge)
            for u, v in ((x, y), (y, x)):
                # Rule 1: w -> u - v with w, v non-adjacent  =>  u -> v
                if any((w, u) in directed and not adjacent(w, v) for w in range(n) if w != v):
                    orient(u, v)
                    changed = True
                    break
                # Rule 2: u -> w -> v and u - v  =>  u -> v
                if any((u, w) in directed and (w, v) in directed for w in range(n)):
                    orient(u, v)
                    changed = True
                    break
                # Rule 3: u - w1 -> v, u - w2 -> v, w1, w2 non-adjacent  =>  u -> v
                ws = [
                    w for w in range(n)
                    if frozenset((u, w)) in undirected and (w, v) in directed
                ]
                if any(not adjacent(w1, w2) for w1, w2 in combinations(ws, 2)):
                    orient(u, v)
                    changed = True
                    break
    edges = [(a, b, DIRECTED) for a, b in directed]
    edges += [(*sorted(e), UNDIRECTED) for e in undirected]
    return MixedGraph(n, edges)


# Graph files ----------------------------------------------------------------


def _read_rows(path: Path, header: Sequence[str]) -> list[list[str]]:
    with path.open(encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise DataFormatError(f"{path}: empty graph file")
    got = [t.strip() for t in lines[0].split(",")]
    if got != list(header):
        raise DataFormatError(f"{path}: expected header {','.join(header)}, got {lines[0]!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        toks = [t.strip() for t in line.split(",")]
        if len(toks) != len(header) or not all(toks):
            raise DataFormatError(f"{path}: malformed row {lineno}: {line!r}")
        rows.append(toks)
    return rows


def _lookup(names: Sequence[str], name: str, path: Path) -> int:
    try:
        return list(names).index(name)
    except ValueError:
        raise SchemaError(f"{path}: unknown node {name!r}") from None


def graph_file_nodes(path: str | Path) -> list[str]:
    """Node names mentioned in a Graph-CSV or Mixed-graph-CSV file, in order of appearance."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    seen: dict[str, None] = {}
    mixed = lines and lines[0].replace(" ", "") == "node1,mark,node2"
    for line in lines[1:]:
        toks = [t.strip() for t in line.split(",")]
        for t in (toks[0], toks[2]) if mixed and len(toks) == 3 else toks[:2]:
            seen.setdefault(t, None)
    return list(seen)


def read_dag(path: str | Path, names: Sequence[str]) -> Dag:
    path = Path(path)
    rows = _read_rows(path, ("parent", "child"))
    return Dag(len(names), [(_lookup(names, a, path), _lookup(names, b, path)) for a, b in rows])


def write_dag(g: Dag, names: Sequence[str], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("parent,child\n")
        for a, b in sorted(g.arcs):
            fh.write(f"{names[a]},{names[b]}\n")


def read_mixed(path: str | Path, names: Sequence[str]) -> MixedGraph:
    path = Path(path)
    rows = _read_rows(path, ("node1", "mark", "node2"))
    g = MixedGraph(len(names))
    for a, mark, b in rows:
        if mark not in MARK_TOKENS:
            raise DataFormatError(f"{path}: unknown edge mark {mark!r}")
        g.add_edge(_lookup(names, a, path), _lookup(names, b, path), mark)
    return g


def write_mixed(g: MixedGraph, names: Sequence[str], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("node1,mark,node2\n")
        for a, b, mark in g.edges():
            fh.write(f"{names[a]},{mark},{names[b]}\n")
