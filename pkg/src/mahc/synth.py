"""Bayesian network models, forward sampling and noise injection.

Randomness comes from numpy's ``Generator`` with the PCG64 bit generator,
seeded explicitly; the same seed reproduces the same dataset bytes with a
given numpy release.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Sequence

import numpy as np

from mahc.dataset import MISSING, DiscreteDataset, Variable
from mahc.errors import DataFormatError, DegenerateColumnError, SchemaError
from mahc.graph import Dag

NOISE_KINDS = ("missing", "latent", "measurement_error", "state_merge")
NOISE_ALIASES = {"error": "measurement_error", "merge": "state_merge"}


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass
class BayesNet:
    """A DAG with one CPT per node.

    ``cpts[i]`` has shape ``(prod of parent cardinalities, |states_i|)``;
    rows follow parents in ascending index order, first parent slowest.
    """

    names: list[str]
    states: list[tuple[str, ...]]
    dag: Dag
    cpts: list[np.ndarray]

    def __post_init__(self) -> None:
        n = len(self.names)
        if len(set(self.names)) != n:
            raise SchemaError("duplicate node names")
        if self.dag.n != n or len(self.states) != n or len(self.cpts) != n:
            raise SchemaError("names, states, dag and cpts disagree on the node count")
        for i in range(n):
            rows = int(np.prod([len(self.states[p]) for p in self.parents(i)], dtype=np.int64))
            cpt = np.asarray(self.cpts[i], dtype=np.float64)
            if cpt.shape != (rows, len(self.states[i])):
                raise DataFormatError(
                    f"CPT of {self.names[i]!r} has shape {cpt.shape}, expected {(rows, len(self.states[i]))}"
                )
            if (cpt < 0).any() or not np.allclose(cpt.sum(axis=1), 1.0, atol=1e-9, rtol=0):
                raise DataFormatError(f"CPT rows of {self.names[i]!r} must be nonnegative and sum to 1")
            self.cpts[i] = cpt

    def parents(self, i: int) -> list[int]:
        return sorted(self.dag.parents(i))

    @property
    def cardinalities(self) -> list[int]:
        return [len(s) for s in self.states]

    def variables(self) -> list[Variable]:
        return [Variable(nm, st, i) for i, (nm, st) in enumerate(zip(self.names, self.states))]


def _config_rows(bn: BayesNet, i: int) -> list[tuple[int, ...]]:
    return list(product(*(range(len(bn.states[p])) for p in bn.parents(i))))


def read_network(path: str | Path) -> BayesNet:
    """Parse a network file with ``[nodes]``, ``[arcs]`` and ``[cpt name]`` sections.

    CPT lines list parent values in ``[arcs]`` declaration order.
    """
    path = Path(path)
    section = None
    node_states: dict[str, tuple[str, ...]] = {}
    arcs: list[tuple[str, str]] = []
    cpt_lines: dict[str, list[tuple[int, str]]] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                head = line[1:-1].strip()
                if head in ("nodes", "arcs"):
                    section = head
                elif head.startswith("cpt "):
                    section = ("cpt", head[4:].strip())
                    cpt_lines.setdefault(section[1], [])
                else:
                    raise DataFormatError(f"{path}:{lineno}: unknown section [{head}]")
                continue
            if section == "nodes":
                name, sep, states = line.partition(":")
                if not sep:
                    raise DataFormatError(f"{path}:{lineno}: expected 'name: s1|s2|...'")
                labels = tuple(s.strip() for s in states.split("|") if s.strip())
                if name.strip() in node_states:
                    raise SchemaError(f"{path}:{lineno}: node {name.strip()!r} declared twice")
                node_states[name.strip()] = labels
            elif section == "arcs":
                parent, sep, child = line.partition("->")
                if not sep:
                    raise DataFormatError(f"{path}:{lineno}: expected 'parent -> child'")
                arcs.append((parent.strip(), child.strip()))
            elif isinstance(section, tuple):
                cpt_lines[section[1]].append((lineno, line))
            else:
                raise DataFormatError(f"{path}:{lineno}: content outside any section")

    names = list(node_states)
    index = {nm: i for i, nm in enumerate(names)}
    for p, c in arcs:
        if p not in index or c not in index:
            raise SchemaError(f"{path}: arc {p} -> {c} names an undeclared node")
    dag = Dag(len(names), [(index[p], index[c]) for p, c in arcs])
    states = [node_states[nm] for nm in names]
    cpts = []
    for i, nm in enumerate(names):
        declared = [index[p] for p, c in arcs if c == nm]
        card = len(states[i])
        table = {}
        for lineno, line in cpt_lines.get(nm, []):
            lhs, sep, rhs = line.partition(":")
            if not sep:
                raise DataFormatError(f"{path}:{lineno}: expected 'values : probabilities'")
            vals = [v.strip() for v in lhs.split(",")] if lhs.strip() else []
            if len(vals) != len(declared):
                raise DataFormatError(f"{path}:{lineno}: {nm} needs {len(declared)} parent values")
            try:
                key = tuple(states[p].index(v) for p, v in zip(declared, vals))
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: unknown parent state in {lhs!r}") from None
            probs = [float(x) for x in rhs.split(",")]
            if len(probs) != card:
                raise DataFormatError(f"{path}:{lineno}: {nm} needs {card} probabilities")
            if abs(sum(probs) - 1.0) > 1e-6:
                raise DataFormatError(f"{path}:{lineno}: probabilities sum to {sum(probs)}")
            table[key] = probs
        # reorder from declaration order to ascending parent index
        order = sorted(range(len(declared)), key=lambda k: declared[k])
        rows = []
        for cfg in product(*(range(len(states[declared[k]])) for k in order)):
            decl_cfg = [0] * len(declared)
            for pos, k in enumerate(order):
                decl_cfg[k] = cfg[pos]
            if tuple(decl_cfg) not in table:
                raise DataFormatError(f"{path}: CPT of {nm} misses configuration {decl_cfg}")
            rows.append(table[tuple(decl_cfg)])
        cpt = np.array(rows, dtype=np.float64)
        cpts.append(cpt / cpt.sum(axis=1, keepdims=True))
    return BayesNet(names, states, dag, cpts)


def write_network(bn: BayesNet, path: str | Path) -> None:
    lines = ["[nodes]"]
    lines += [f"{nm}: {'|'.join(st)}" for nm, st in zip(bn.names, bn.states)]
    lines.append("")
    lines.append("[arcs]")
    for c in range(len(bn.names)):
        lines += [f"{bn.names[p]} -> {bn.names[c]}" for p in bn.parents(c)]
    for i, nm in enumerate(bn.names):
        lines.append("")
        lines.append(f"[cpt {nm}]")
        pa = bn.parents(i)
        for cfg, row in zip(_config_rows(bn, i), bn.cpts[i]):
            lhs = ",".join(bn.states[p][v] for p, v in zip(pa, cfg))
            lines.append(f"{lhs} : {','.join(repr(float(x)) for x in row)}".lstrip())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def random_network(
    n_nodes: int,
    n_arcs: int,
    seed: int,
    max_in_degree: int = 4,
    states: tuple[int, int] = (2, 4),
    concentration: float = 0.5,
) -> BayesNet:
    """A random DAG (arcs respect a random node order) with Dirichlet CPT rows."""
    rng = make_rng(seed)
    order = rng.permutation(n_nodes)
    arcs: set[tuple[int, int]] = set()
    indeg = np.zeros(n_nodes, dtype=int)
    attempts = 0
    while len(arcs) < n_arcs and attempts < 100 * n_arcs + 1000:
        attempts += 1
        i, j = sorted(rng.choice(n_nodes, size=2, replace=False))
        a, b = int(order[i]), int(order[j])
        if (a, b) in arcs or indeg[b] >= max_in_degree:
            continue
        arcs.add((a, b))
        indeg[b] += 1
    dag = Dag(n_nodes, arcs)
    cards = rng.integers(states[0], states[1] + 1, size=n_nodes)
    node_states = [tuple(f"s{k}" for k in range(c)) for c in cards]
    cpts = []
    for i in range(n_nodes):
        rows = int(np.prod([cards[p] for p in sorted(dag.parents(i))], dtype=np.int64))
        cpts.append(rng.dirichlet(np.full(cards[i], concentration), size=rows))
    names = [f"X{i}" for i in range(n_nodes)]
    return BayesNet(names, node_states, dag, cpts)


def forward_sample(bn: BayesNet, n: int, seed: int) -> DiscreteDataset:
    """Draw ``n`` rows by ancestral sampling in topological order."""
    if n < 1:
        raise ValueError("sample size must be at least 1")
    rng = make_rng(seed)
    codes = np.zeros((n, len(bn.names)), dtype=np.int64)
    for i in bn.dag.topological_order():
        pa = bn.parents(i)
        cfg = np.zeros(n, dtype=np.int64)
        for p in pa:
            cfg = cfg * len(bn.states[p]) + codes[:, p]
        cum = np.cumsum(bn.cpts[i], axis=1)
        cum[:, -1] = 1.0
        u = rng.random(n)
        codes[:, i] = (u[:, None] >= cum[cfg]).sum(axis=1)
    return DiscreteDataset(bn.variables(), codes)


@dataclass
class NoiseSpec:
    rate: float = 0.05
    kinds: tuple[str, ...] = NOISE_KINDS
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"noise rate {self.rate} outside [0, 1]")
        kinds = tuple(NOISE_ALIASES.get(k, k) for k in self.kinds)
        unknown = set(kinds) - set(NOISE_KINDS)
        if unknown:
            raise ValueError(f"unknown noise kinds: {sorted(unknown)}")
        self.kinds = kinds


@dataclass
class NoiseLog:
    missing_cells: int = 0
    removed: list[str] = field(default_factory=list)
    flipped_cells: int = 0
    flip_candidates: int = 0
    merged: dict[str, tuple[str, str]] = field(default_factory=dict)


def inject_noise(d: DiscreteDataset, spec: NoiseSpec, log: NoiseLog | None = None) -> DiscreteDataset:
    """Apply missing values, latent variables, measurement error and state merging, in that order."""
    if spec.rate == 0:
        return d
    rng = make_rng(spec.seed)
    log = log if log is not None else NoiseLog()
    states = [list(v.states) for v in d.variables]
    codes = d.codes.copy()
    names = d.names
    n, nv = codes.shape

    if "missing" in spec.kinds:
        hit = rng.random((n, nv)) < spec.rate
        for j in range(nv):
            if not hit[:, j].any():
                continue
            if MISSING not in states[j]:
                states[j].append(MISSING)
            codes[hit[:, j], j] = states[j].index(MISSING)
        log.missing_cells = int(hit.sum())

    keep = list(range(nv))
    if "latent" in spec.kinds:
        drop = rng.random(nv) < spec.rate
        keep = [j for j in range(nv) if not drop[j]]
        if not keep:
            raise DegenerateColumnError("latent-variable noise removed every variable")
        log.removed = [names[j] for j in range(nv) if drop[j]]

    if "measurement_error" in spec.kinds:
        hit = rng.random((n, nv)) < spec.rate
        offsets = rng.random((n, nv))
        for j in keep:
            real = [k for k, s in enumerate(states[j]) if s != MISSING]
            if len(real) < 2:
                continue
            col = codes[:, j]
            eligible = np.isin(col, real)
            flip = hit[:, j] & eligible
            log.flip_candidates += int(eligible.sum())
            log.flipped_cells += int(flip.sum())
            real_arr = np.array(real)
            pos = np.searchsorted(real_arr, col[flip])
            # uniform over the other len(real) - 1 states
            step = 1 + (offsets[flip, j] * (len(real) - 1)).astype(np.int64)
            col[flip] = real_arr[(pos + step) % len(real)]

    if "state_merge" in spec.kinds:
        draw = rng.random(nv) < spec.rate
        for j in keep:
            real = [k for k, s in enumerate(states[j]) if s != MISSING]
            if not draw[j] or len(real) < 3:
                continue
            freq = np.bincount(codes[:, j], minlength=len(states[j]))
            lo, hi = sorted(sorted(real, key=lambda k: (freq[k], k))[:2])
            label = f"{states[j][lo]}+{states[j][hi]}"
            log.merged[names[j]] = (states[j][lo], states[j][hi])
            col = codes[:, j]
            col[col == hi] = lo
            col[col > hi] -= 1
            states[j][lo] = label
            del states[j][hi]

    variables = []
    out_codes = np.empty((n, len(keep)), dtype=np.int64)
    for new_j, j in enumerate(keep):
        # re-sort labels so state dictionaries stay lexicographic
        labels = states[j]
        order = sorted(range(len(labels)), key=lambda k: labels[k])
        remap = np.empty(len(labels), dtype=np.int64)
        remap[order] = np.arange(len(labels))
        out_codes[:, new_j] = remap[codes[:, j]]
        variables.append(Variable(names[j], tuple(labels[k] for k in order), new_j))
    return DiscreteDataset(variables, out_codes)
