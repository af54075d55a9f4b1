import json
from pathlib import Path

import numpy as np
import pytest

import specid

SCENARIOS = Path(__file__).resolve().parents[2] / "scenarios"

A = np.array([[-1.0, -2.0], [1.0, -1.0]])
B = np.array([1.0, 2.0])
C = np.array([1.0, 1.0])


def small_run():
    g = specid.erdos_renyi(4, 0.8, (0.5, 1.5), True, 5)
    measured = [(node, 0) for node in range(4)]
    samples, inputs = specid.simulate(g, A, B, C, [(0, 1, 0), (2, 0, 1)], measured, 0.05, 10.0,
                                      (0.5, 1.0), (0.1, 0.5), 6)
    return g, samples, inputs


def test_graph_and_spectrum():
    g = specid.Graph(np.ones((3, 3)) - np.eye(3), True)
    assert g.n == 3
    assert g.edge_count == 6
    spec = np.sort(g.spectrum().real)
    np.testing.assert_allclose(spec, [0.0, 3.0, 3.0], atol=1e-12)
    np.testing.assert_allclose(g.laplacian().sum(axis=1), 0.0, atol=1e-12)


def test_generators_are_seeded():
    a = specid.planted_partition(3, 10, 0.5, 0.1, (0.0, 1.0), 4)
    b = specid.planted_partition(3, 10, 0.5, 0.1, (0.0, 1.0), 4)
    np.testing.assert_array_equal(a.weights, b.weights)
    assert sorted(set(a.labels)) == [0, 1, 2]
    assert specid.hub_graph(50, 4, 20, 1).n == 50
    assert specid.degree_targeted(30, 5, 2, (0.0, 1.0), 2).n == 30


def test_identify_recovers_small_network():
    g, samples, inputs = small_run()
    assert samples.shape[1] == 4 and inputs.shape[1] == 2
    fit = specid.fit_dmdc(samples, inputs, 0.05, 2, 0.05)
    assert fit["residual"] < 1e-6
    est = specid.identify_laplacian(samples, inputs, 0.05, A, B, C, 2, 0.05)
    exact = g.spectrum()
    assert len(est) == len(exact)
    for lam in exact:
        assert np.min(np.abs(est - lam)) < 1e-6 * max(1.0, abs(lam))


def test_mu_to_lambda_inverts_the_network_mode():
    lam = 1.5 + 0.5j
    K = A - lam * np.outer(B, C)
    for mu in np.linalg.eigvals(K):
        assert abs(specid.mu_to_lambda(mu, A, B, C) - lam) < 1e-10


def test_summary_of_k3():
    s = specid.summarize(np.array([0, 3, 3], dtype=complex), 3)
    assert s["M1"] == pytest.approx(2.0)
    assert s["M2"] == pytest.approx(6.0)


def test_clustering_separates_two_groups():
    pts = np.array([[0.0], [0.1], [0.05], [5.0], [5.1], [4.9]])
    labels, scatter = specid.cluster_by_ratios(pts, 2, 1)
    assert labels[0] == labels[1] == labels[2]
    assert labels[3] == labels[4] == labels[5]
    assert labels[0] != labels[3]
    assert scatter < 0.1


def test_bad_parameters_raise():
    with pytest.raises(ValueError):
        specid.erdos_renyi(3, 1.5)


def test_run_trivial_scenario(tmp_path):
    report = specid.run_scenario(str(SCENARIOS / "trivial.json"), str(tmp_path))
    assert report["trivial_graph"] is True
    assert "trivial graph" in report["text"]
    assert json.loads((tmp_path / "report.json").read_text())["n"] == 1
