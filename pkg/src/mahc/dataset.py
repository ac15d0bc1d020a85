"""Categorical datasets and the frequency counts that scoring is built on."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from mahc.errors import DataFormatError, DegenerateColumnError, SchemaError

MISSING = "missing"


@dataclass(frozen=True)
class Variable:
    name: str
    states: tuple[str, ...]
    index: int

    def __post_init__(self) -> None:
        if len(self.states) < 2:
            raise DegenerateColumnError(
                f"variable {self.name!r} has {len(self.states)} state(s); at least 2 are required"
            )
        if len(set(self.states)) != len(self.states):
            raise SchemaError(f"variable {self.name!r} has duplicate state labels")

    @property
    def cardinality(self) -> int:
        return len(self.states)


class DiscreteDataset:
    """Column-oriented categorical data.

    ``codes`` is an ``(n, |V|)`` integer array of state indices into each
    variable's ``states``. The object is treated as immutable once built.
    """

    def __init__(self, variables: Sequence[Variable], codes: np.ndarray):
        codes = np.asarray(codes)
        if codes.ndim != 2 or codes.shape[1] != len(variables):
            raise DataFormatError(
                f"code matrix shape {codes.shape} does not match {len(variables)} variables"
            )
        if codes.shape[0] < 1:
            raise DataFormatError("a dataset needs at least one row")
        for j, var in enumerate(variables):
            if var.index != j:
                raise SchemaError(f"variable {var.name!r} has index {var.index}, expected {j}")
            col = codes[:, j]
            if col.min() < 0 or col.max() >= var.cardinality:
                raise DataFormatError(f"column {var.name!r} holds an out-of-range state index")
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate variable names")
        self.variables: tuple[Variable, ...] = tuple(variables)
        self.codes = np.ascontiguousarray(codes, dtype=np.int64)
        self.codes.setflags(write=False)
        self.cardinalities = np.array([v.cardinality for v in self.variables], dtype=np.int64)
        self._name_to_index = {v.name: v.index for v in self.variables}

    @property
    def n(self) -> int:
        return int(self.codes.shape[0])

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def index_of(self, name: str) -> int:
        try:
            return self._name_to_index[name]
        except KeyError:
            raise SchemaError(f"unknown variable {name!r}") from None

    def column_labels(self, j: int) -> list[str]:
        states = self.variables[j].states
        return [states[c] for c in self.codes[:, j]]

    @classmethod
    def from_labels(
        cls,
        names: Sequence[str],
        rows: Iterable[Sequence[str]],
        states: dict[str, Sequence[str]] | None = None,
    ) -> "DiscreteDataset":
        """Build a dataset from label rows.

        State dictionaries are the lexicographically sorted observed labels
        unless ``states`` declares them explicitly for a column.
        """
        rows = [tuple(r) for r in rows]
        if not rows:
            raise DataFormatError("a dataset needs at least one row")
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if list(names).count(n) > 1})
            raise SchemaError(f"duplicate header names: {', '.join(dupes)}")
        columns = list(zip(*rows))
        variables = []
        codes = np.empty((len(rows), len(names)), dtype=np.int64)
        for j, name in enumerate(names):
            col = columns[j]
            if states is not None and name in states:
                labels = tuple(states[name])
                unknown = set(col) - set(labels)
                if unknown:
                    raise DataFormatError(f"column {name!r} has undeclared states {sorted(unknown)}")
            else:
                labels = tuple(sorted(set(col)))
            if len(labels) < 2:
                raise DegenerateColumnError(
                    f"column {name!r} is degenerate: only state {labels[0]!r} is observed"
                    if labels
                    else f"column {name!r} has no states"
                )
            lookup = {s: i for i, s in enumerate(labels)}
            codes[:, j] = [lookup[c] for c in col]
            variables.append(Variable(name, labels, j))
        return cls(variables, codes)

    def select_columns(self, keep: Sequence[int]) -> "DiscreteDataset":
        variables = [
            Variable(self.variables[j].name, self.variables[j].states, k) for k, j in enumerate(keep)
        ]
        return DiscreteDataset(variables, self.codes[:, list(keep)])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiscreteDataset):
            return NotImplemented
        return self.variables == other.variables and np.array_equal(self.codes, other.codes)

    def __repr__(self) -> str:
        return f"DiscreteDataset(n={self.n}, variables={self.names})"


def load_dataset(path: str | Path) -> DiscreteDataset:
    """Read a headered, comma-separated categorical file.

    Tokens are whitespace-trimmed and case-sensitive; there is no quoting.
    """
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        lines = [line.rstrip("\r\n") for line in fh]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise DataFormatError(f"{path}: empty file")
    header = [tok.strip() for tok in lines[0].split(",")]
    if any(not h for h in header):
        raise SchemaError(f"{path}: empty column name in header")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = [tok.strip() for tok in line.split(",")]
        if len(tokens) != len(header):
            raise DataFormatError(
                f"{path}: row {lineno} has {len(tokens)} fields, expected {len(header)}"
            )
        if any(not t for t in tokens):
            raise DataFormatError(f"{path}: row {lineno} has an empty field")
        rows.append(tokens)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return DiscreteDataset.from_labels(header, rows)


def write_dataset(d: DiscreteDataset, path: str | Path) -> None:
    labels = [np.array(v.states, dtype=object)[d.codes[:, v.index]] for v in d.variables]
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(d.names) + "\n")
        for row in zip(*labels):
            fh.write(",".join(row) + "\n")


def _check_family(d: DiscreteDataset, child: int, parents: Iterable[int]) -> tuple[int, ...]:
    parents = tuple(sorted(set(parents)))
    if child in parents:
        raise ValueError(f"child {child} is listed among its own parents")
    for k in (child, *parents):
        if not 0 <= k < d.num_vars:
            raise IndexError(f"variable index {k} out of range")
    return parents


def family_counts(d: DiscreteDataset, child: int, parents: Iterable[int]) -> np.ndarray:
    """Counts as an ``(observed configurations, child states)`` array.

    Only parent configurations present in the data get a row; row order
    follows the mixed-radix configuration code.
    """
    parents = _check_family(d, child, parents)
    r = int(d.cardinalities[child])
    if not parents:
        return np.bincount(d.codes[:, child], minlength=r)[None, :]
    code = np.zeros(d.n, dtype=np.int64)
    space = 1
    for p in parents:
        code = code * d.cardinalities[p] + d.codes[:, p]
        space *= int(d.cardinalities[p])
    if space * r <= max(4 * d.n, 1 << 16):
        table = np.bincount(code * r + d.codes[:, child], minlength=space * r).reshape(space, r)
        return table[table.sum(axis=1) > 0]
    _, inverse = np.unique(code, return_inverse=True)
    inverse = inverse.reshape(-1)
    return np.bincount(inverse * r + d.codes[:, child], minlength=(inverse.max() + 1) * r).reshape(-1, r)


def count_configurations(
    d: DiscreteDataset, child: int, parents: Iterable[int]
) -> dict[tuple[int, ...], list[int]]:
    """Map each observed parent configuration to its per-state child counts.

    Keys are tuples of parent state indices in ascending parent-index order.
    """
    parents = _check_family(d, child, parents)
    r = int(d.cardinalities[child])
    out: dict[tuple[int, ...], list[int]] = {}
    if not parents:
        return {(): np.bincount(d.codes[:, child], minlength=r).tolist()}
    configs, inverse = np.unique(d.codes[:, list(parents)], axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    table = np.bincount(inverse * r + d.codes[:, child], minlength=len(configs) * r).reshape(-1, r)
    for cfg, row in zip(configs, table):
        out[tuple(int(x) for x in cfg)] = row.tolist()
    return out
