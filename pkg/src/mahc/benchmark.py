"""Batch experiments: generate data, learn, evaluate, write one result row each."""

from __future__ import annotations

import csv
import json
import logging
import time
import traceback
from dataclasses import dataclass, field
from importlib.resources import files
from itertools import product
from pathlib import Path
from typing import Any

from mahc.errors import ConfigurationError
from mahc.graph import Dag, MixedGraph, read_mixed, to_cpdag
from mahc.metrics import evaluate
from mahc.search import ALGORITHM_ALIASES, ALGORITHMS, SearchConfig, run_algorithm
from mahc.synth import NOISE_KINDS, NoiseLog, NoiseSpec, BayesNet, forward_sample, inject_noise, read_network

log = logging.getLogger(__name__)

RESULT_FIELDS = (
    "algorithm",
    "case",
    "sample_size",
    "data",
    "bic_log2",
    "bsf",
    "shd",
    "f1",
    "recall",
    "precision",
    "runtime_s",
    "status",
)
DEFAULT_TIME_LIMIT = 6 * 3600.0


@dataclass
class Experiment:
    network: str
    sample_size: int
    data: str
    algorithm: str
    seed: int
    case: str = ""
    m_p: int = 3
    m_s: int = 8
    noise_rate: float = 0.05
    noise_kinds: tuple[str, ...] = NOISE_KINDS
    true_graph: str | None = None

    def __post_init__(self) -> None:
        if self.sample_size < 1:
            raise ConfigurationError(f"sample size {self.sample_size} must be >= 1")
        self.algorithm = ALGORITHM_ALIASES.get(self.algorithm, self.algorithm)
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")
        if self.data not in ("clean", "noisy"):
            raise ConfigurationError(f"data kind must be clean or noisy, got {self.data!r}")
        if not self.case:
            self.case = Path(self.network).stem.replace("builtin:", "")


@dataclass
class BenchmarkConfig:
    experiments: list[Experiment]
    output: Path
    time_limit: float = DEFAULT_TIME_LIMIT
    base_dir: Path = field(default_factory=Path.cwd)


def _resolve(base: Path, ref: str) -> Path | str:
    if ref.startswith("builtin:"):
        return ref
    p = Path(ref)
    return p if p.is_absolute() else base / p


def load_network(ref: str | Path) -> BayesNet:
    ref = str(ref)
    if ref.startswith("builtin:"):
        return read_network(files("mahc") / "data" / f"{ref[len('builtin:'):]}.net")
    return read_network(ref)


def load_config(path: str | Path) -> BenchmarkConfig:
    """Read a JSON config with an ``experiments`` list and/or a ``grid`` to expand.

    A grid takes lists ``networks``, ``sample_sizes``, ``data``,
    ``algorithms`` and ``seeds`` and yields their product.
    """
    path = Path(path)
    raw: dict[str, Any] = json.loads(path.read_text(encoding="utf-8"))
    base = path.parent
    common = {k: raw[k] for k in ("m_p", "m_s", "noise_rate") if k in raw}
    if "noise_kinds" in raw:
        common["noise_kinds"] = tuple(raw["noise_kinds"])
    exps = []
    for e in raw.get("experiments", []):
        e = {**common, **e}
        if "noise_kinds" in e:
            e["noise_kinds"] = tuple(e["noise_kinds"])
        e["network"] = str(_resolve(base, e["network"]))
        if e.get("true_graph"):
            e["true_graph"] = str(_resolve(base, e["true_graph"]))
        exps.append(Experiment(**e))
    grid = raw.get("grid")
    if grid:
        for net, n, kind, algo, seed in product(
            grid["networks"], grid["sample_sizes"], grid.get("data", ["clean"]), grid["algorithms"], grid.get("seeds", [0])
        ):
            exps.append(Experiment(network=str(_resolve(base, net)), sample_size=int(n), data=kind,
                                   algorithm=algo, seed=int(seed), **common))
    if not exps:
        raise ConfigurationError(f"{path}: no experiments configured")
    output = Path(raw.get("output", "results.csv"))
    if not output.is_absolute():
        output = base / output
    limit = float(raw.get("time_limit", DEFAULT_TIME_LIMIT))
    if limit <= 0:
        raise ConfigurationError("time_limit must be positive")
    return BenchmarkConfig(exps, output, limit, base)


def _true_graph(bn: BayesNet, kept: list[str], exp: Experiment) -> MixedGraph:
    if exp.true_graph:
        return read_mixed(exp.true_graph, kept)
    # latent variables are marginalised crudely: CPDAG of the induced subgraph
    idx = {nm: i for i, nm in enumerate(kept)}
    arcs = [
        (idx[bn.names[a]], idx[bn.names[b]])
        for a, b in bn.dag.arcs
        if bn.names[a] in idx and bn.names[b] in idx
    ]
    return to_cpdag(Dag(len(kept), arcs))


def run_experiment(exp: Experiment, time_limit: float) -> dict[str, Any]:
    row: dict[str, Any] = {k: "" for k in RESULT_FIELDS}
    row.update(algorithm=exp.algorithm, case=exp.case, sample_size=exp.sample_size, data=exp.data)
    start = time.perf_counter()
    try:
        bn = load_network(exp.network)
        d = forward_sample(bn, exp.sample_size, exp.seed)
        if exp.data == "noisy":
            d = inject_noise(d, NoiseSpec(exp.noise_rate, exp.noise_kinds, seed=exp.seed + 1), NoiseLog())
        cfg = SearchConfig(algorithm=exp.algorithm, m_p=exp.m_p, m_s=max(exp.m_s, exp.m_p))
        learn_start = time.perf_counter()
        result = run_algorithm(d, cfg, deadline=time.monotonic() + time_limit)
        row["runtime_s"] = f"{time.perf_counter() - learn_start:.3f}"
        if result.timed_out:
            row["status"] = "timeout"
            return row
        report = evaluate(_true_graph(bn, d.names, exp), to_cpdag(result.graph))
        row.update(
            bic_log2=f"{result.plain_bic:.1f}",
            bsf=f"{report.bsf:.3f}",
            shd=f"{report.shd:g}",
            f1=f"{report.f1:.3f}",
            recall=f"{report.recall:.3f}",
            precision=f"{report.precision:.3f}",
            status="ok",
        )
    except Exception:  # one broken experiment must not abort the batch
        log.error("experiment %s failed:\n%s", exp, traceback.format_exc())
        row = {k: "" for k in RESULT_FIELDS} | {
            "algorithm": exp.algorithm,
            "case": exp.case,
            "sample_size": exp.sample_size,
            "data": exp.data,
            "runtime_s": f"{time.perf_counter() - start:.3f}",
            "status": "error",
        }
    return row


def run_benchmark(cfg: BenchmarkConfig) -> list[dict[str, Any]]:
    rows = []
    cfg.output.parent.mkdir(parents=True, exist_ok=True)
    fresh = not cfg.output.exists() or cfg.output.stat().st_size == 0
    with cfg.output.open("a", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_FIELDS, lineterminator="\n")
        if fresh:
            writer.writeheader()
        for exp in cfg.experiments:
            row = run_experiment(exp, cfg.time_limit)
            writer.writerow(row)
            fh.flush()
            rows.append(row)
            log.info("%s %s n=%s %s: %s", exp.algorithm, exp.case, exp.sample_size, exp.data, row["status"])
    return rows
