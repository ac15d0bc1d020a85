from importlib.resources import files

import numpy as np
import pytest

from mahc.dataset import DiscreteDataset, Variable
from mahc.synth import forward_sample, read_network

ASIA = ["asia", "tub", "smoke", "lung", "bronc", "either", "xray", "dysp"]


def random_dataset(rng: np.random.Generator, n_vars: int, n_rows: int, max_states: int = 3) -> DiscreteDataset:
    """Random categorical data with some dependence so scores are not all alike."""
    cards = rng.integers(2, max_states + 1, size=n_vars)
    codes = np.empty((n_rows, n_vars), dtype=np.int64)
    for j in range(n_vars):
        noise = rng.integers(0, cards[j], size=n_rows)
        if j > 0 and rng.random() < 0.6:
            src = codes[:, rng.integers(0, j)]
            keep = rng.random(n_rows) < 0.7
            codes[:, j] = np.where(keep, src % cards[j], noise)
        else:
            codes[:, j] = noise
    for j in range(n_vars):
        codes[:2, j] = [0, 1]  # every variable observes at least two states
    variables = [Variable(f"V{j}", tuple(str(s) for s in range(cards[j])), j) for j in range(n_vars)]
    return DiscreteDataset(variables, codes)


@pytest.fixture(scope="session")
def asia_net():
    return read_network(files("mahc") / "data" / "asia.net")


@pytest.fixture(scope="session")
def asia1000(asia_net):
    return forward_sample(asia_net, 1000, seed=0)


@pytest.fixture(scope="session")
def independent_binary():
    rng = np.random.Generator(np.random.PCG64(11))
    codes = rng.integers(0, 2, size=(2000, 5))
    variables = [Variable(f"U{j}", ("0", "1"), j) for j in range(5)]
    return DiscreteDataset(variables, codes)


@pytest.fixture(scope="session")
def strong_pair():
    rng = np.random.Generator(np.random.PCG64(5))
    a = rng.integers(0, 2, size=1000)
    b = np.where(rng.random(1000) < 0.9, a, 1 - a)
    variables = [Variable("A", ("0", "1"), 0), Variable("B", ("0", "1"), 1)]
    return DiscreteDataset(variables, np.column_stack([a, b]))


_CRITERIA: dict[int, list[tuple[str, str, str]]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        reason = ""
        if rep.skipped and isinstance(rep.longrepr, tuple):
            reason = rep.longrepr[2].removeprefix("Skipped: ")
        _CRITERIA.setdefault(marker.args[0], []).append((item.name, rep.outcome, reason))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        results = _CRITERIA[num]
        outcomes = {o for _, o, _ in results}
        if "failed" in outcomes:
            verdict = "FAIL"
        elif outcomes == {"skipped"}:
            verdict = "SKIP"
        elif "skipped" in outcomes:
            verdict = "PARTIAL"
        else:
            verdict = "PASS"
        detail = "; ".join(
            f"{name} {o}" + (f" ({why})" if why else "") for name, o, why in results if o != "passed"
        )
        passed = sum(o == "passed" for _, o, _ in results)
        line = f"criterion {num}: {verdict} ({passed}/{len(results)} checks passed)"
        terminalreporter.write_line(line + (f"; {detail}" if detail else ""))
