"""Graph comparison: per-pair penalties, confusion counts and the five graphical metrics.

A learnt edge whose mark differs from the true edge on the same pair is a
partial match: it earns half a true positive and costs 0.5 SHD, but is not
counted as a false positive in the balanced scoring function.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from itertools import combinations

from mahc.graph import Dag, MixedGraph, to_cpdag


def pair_penalty(true_mark: str | None, learnt_mark: str | None) -> float:
    """Penalty for one node pair; marks are oriented the same way for both graphs."""
    if true_mark is None and learnt_mark is None:
        return 0.0
    if true_mark is None or learnt_mark is None:
        return 1.0
    return 0.0 if true_mark == learnt_mark else 0.5


@dataclass(frozen=True)
class ConfusionCounts:
    tp: float
    fn_: float
    fp_full: float
    fp_prec: float
    tn: float
    e_p: int
    e_a: int
    shd: float
    learnt_edges: int


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    bsf: float
    shd: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def report(self) -> str:
        return "".join(f"{k}={v:.6g}\n" for k, v in self.as_dict().items())


def pair_penalties(true_g: MixedGraph, learnt_g: MixedGraph) -> list[tuple[int, int, str | None, str | None, float]]:
    if true_g.n != learnt_g.n:
        raise ValueError(f"node sets differ: {true_g.n} vs {learnt_g.n} nodes")
    out = []
    for a, b in combinations(range(true_g.n), 2):
        t, l = true_g.mark(a, b), learnt_g.mark(a, b)
        out.append((a, b, t, l, pair_penalty(t, l)))
    return out


def confusion(true_g: MixedGraph, learnt_g: MixedGraph) -> ConfusionCounts:
    tp = fp_full = shd = 0.0
    for _, _, t, l, pen in pair_penalties(true_g, learnt_g):
        shd += pen
        if t is not None and l is not None:
            tp += 1.0 - pen
        elif l is not None:
            fp_full += 1
    e_p = len(true_g)
    n = true_g.n
    e_a = n * (n - 1) // 2 - e_p
    learnt = len(learnt_g)
    return ConfusionCounts(
        tp=tp,
        fn_=e_p - tp,
        fp_full=fp_full,
        fp_prec=learnt - tp,
        tn=e_a - fp_full,
        e_p=e_p,
        e_a=e_a,
        shd=shd,
        learnt_edges=learnt,
    )


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def compute_metrics(c: ConfusionCounts) -> MetricsReport:
    precision = _ratio(c.tp, c.tp + c.fp_prec)
    recall = _ratio(c.tp, c.e_p)
    f1 = _ratio(2 * precision * recall, precision + recall)
    bsf = 0.5 * (
        _ratio(c.tp, c.e_p) + _ratio(c.tn, c.e_a) - _ratio(c.fp_full, c.e_a) - _ratio(c.fn_, c.e_p)
    )
    return MetricsReport(precision=precision, recall=recall, f1=f1, bsf=bsf, shd=c.shd)


def evaluate(true_g: MixedGraph | Dag, learnt_g: MixedGraph | Dag) -> MetricsReport:
    """Compare two graphs; DAG inputs are converted to their CPDAGs first."""
    if isinstance(true_g, Dag):
        true_g = to_cpdag(true_g)
    if isinstance(learnt_g, Dag):
        learnt_g = to_cpdag(learnt_g)
    return compute_metrics(confusion(true_g, learnt_g))


def shd_relative(shd_a: float, shd_b: float) -> float:
    """Score of ``a`` relative to reference ``b`` as a percentage, after adding one to both."""
    if shd_a < 0 or shd_b < 0:
        raise ValueError("SHD values must be nonnegative")
    return 100.0 * (shd_b + 1.0) / (shd_a + 1.0)
