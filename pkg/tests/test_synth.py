import numpy as np
import pytest

from mahc.dataset import MISSING, DiscreteDataset, write_dataset, load_dataset
from mahc.errors import DataFormatError, DegenerateColumnError
from mahc.graph import Dag
from mahc.synth import (
    BayesNet,
    NoiseLog,
    NoiseSpec,
    forward_sample,
    inject_noise,
    random_network,
    read_network,
    write_network,
)


def pair_net(agree=0.9):
    return BayesNet(
        ["A", "B"],
        [("0", "1"), ("0", "1")],
        Dag(2, [(0, 1)]),
        [np.array([[0.5, 0.5]]), np.array([[agree, 1 - agree], [1 - agree, agree]])],
    )


def test_deterministic_cpt():
    bn = BayesNet(["A"], [("x", "y")], Dag(1), [np.array([[0.0, 1.0]])])
    d = forward_sample(bn, 50, 0)
    assert set(d.codes[:, 0]) == {1}


def test_cpt_validation():
    with pytest.raises(DataFormatError):
        BayesNet(["A"], [("x", "y")], Dag(1), [np.array([[0.4, 0.4]])])
    with pytest.raises(DataFormatError):
        BayesNet(["A", "B"], [("x", "y")] * 2, Dag(2, [(0, 1)]), [np.array([[0.5, 0.5]])] * 2)


def test_sampled_conditional_frequency():
    d = forward_sample(pair_net(), 100_000, 1)
    agree = float(np.mean(d.codes[:, 0] == d.codes[:, 1]))
    assert agree == pytest.approx(0.9, abs=0.01)
    corr = np.corrcoef(d.codes[:, 0], d.codes[:, 1])[0, 1]
    assert corr == pytest.approx(0.8, abs=0.03)


def test_asia_marginals(asia_net):
    d = forward_sample(asia_net, 100_000, 2)
    smoke = d.variables[d.index_of("smoke")]
    assert np.mean(d.codes[:, d.index_of("smoke")] == smoke.states.index("yes")) == pytest.approx(0.5, abs=0.01)


def test_same_seed_same_data(asia_net):
    a, b = forward_sample(asia_net, 500, 9), forward_sample(asia_net, 500, 9)
    assert np.array_equal(a.codes, b.codes)
    assert not np.array_equal(a.codes, forward_sample(asia_net, 500, 10).codes)


def test_zero_rate_is_identity(asia1000):
    assert inject_noise(asia1000, NoiseSpec(rate=0.0)) is asia1000


def test_missing_fraction(asia_net):
    d = forward_sample(asia_net, 20_000, 3)
    log = NoiseLog()
    noisy = inject_noise(d, NoiseSpec(rate=0.05, kinds=("missing",), seed=4), log)
    cells = 0
    for j, v in enumerate(noisy.variables):
        if MISSING in v.states:
            cells += int((noisy.codes[:, j] == v.states.index(MISSING)).sum())
    assert cells == log.missing_cells
    assert cells / d.codes.size == pytest.approx(0.05, abs=0.005)
    assert noisy.n == d.n


def test_full_missing_rate(asia1000):
    noisy = inject_noise(asia1000, NoiseSpec(rate=1.0, kinds=("missing",)))
    for j, v in enumerate(noisy.variables):
        assert set(noisy.codes[:, j]) == {v.states.index(MISSING)}


def test_measurement_error_fraction(asia_net):
    d = forward_sample(asia_net, 20_000, 5)
    log = NoiseLog()
    noisy = inject_noise(d, NoiseSpec(rate=0.05, kinds=("error",), seed=6), log)
    assert noisy.names == d.names
    changed = 0
    for j in range(d.num_vars):
        before = np.array(d.variables[j].states)[d.codes[:, j]]
        after = np.array(noisy.variables[j].states)[noisy.codes[:, j]]
        changed += int((before != after).sum())
    assert changed == log.flipped_cells
    assert changed / log.flip_candidates == pytest.approx(0.05, abs=0.005)


def test_latent_and_merge():
    bn = random_network(12, 14, seed=3, states=(3, 4))
    d = forward_sample(bn, 2000, 0)
    log = NoiseLog()
    noisy = inject_noise(d, NoiseSpec(rate=0.5, kinds=("latent", "merge"), seed=1), log)
    assert noisy.num_vars == d.num_vars - len(log.removed)
    assert noisy.n == d.n
    for name, (lo, hi) in log.merged.items():
        v = noisy.variables[noisy.index_of(name)]
        assert f"{lo}+{hi}" in v.states
        assert len(v.states) == d.variables[d.index_of(name)].cardinality - 1


def test_latent_removing_all_raises(asia1000):
    with pytest.raises(DegenerateColumnError):
        inject_noise(asia1000, NoiseSpec(rate=1.0, kinds=("latent",)))


def test_bad_noise_spec():
    with pytest.raises(ValueError):
        NoiseSpec(rate=1.5)
    with pytest.raises(ValueError):
        NoiseSpec(kinds=("gremlins",))


def test_noisy_data_survives_csv(tmp_path, asia1000):
    noisy = inject_noise(asia1000, NoiseSpec(rate=0.1, seed=2))
    write_dataset(noisy, tmp_path / "n.csv")
    back = load_dataset(tmp_path / "n.csv")
    assert back.names == noisy.names and back.n == noisy.n


def test_network_round_trip(tmp_path, asia_net):
    write_network(asia_net, tmp_path / "a.net")
    back = read_network(tmp_path / "a.net")
    assert back.names == asia_net.names and back.dag == asia_net.dag
    for x, y in zip(back.cpts, asia_net.cpts):
        assert np.allclose(x, y)


def test_network_parent_order_is_declaration_order(tmp_path):
    text = """[nodes]
a: 0|1
b: 0|1
c: 0|1
[arcs]
b -> c
a -> c
[cpt a]
: 0.5,0.5
[cpt b]
: 0.5,0.5
[cpt c]
0,0 : 1,0
0,1 : 0.9,0.1
1,0 : 0.2,0.8
1,1 : 0,1
"""
    (tmp_path / "n.net").write_text(text)
    bn = read_network(tmp_path / "n.net")
    # rows are re-keyed by ascending parent index: (a, b)
    assert np.allclose(bn.cpts[2], [[1, 0], [0.2, 0.8], [0.9, 0.1], [0, 1]])


def test_random_network_shape():
    bn = random_network(37, 46, seed=7)
    assert len(bn.dag.arcs) == 46
    assert max(bn.dag.in_degree(v) for v in range(37)) <= 4
    assert all(2 <= c <= 4 for c in bn.cardinalities)
