import numpy as np
import pytest

from hexsyn.analysis import define_detectors
from hexsyn.circuit import InputState, build_cycle_circuit, build_gauge_circuit, build_ghz_circuit
from hexsyn.dense import (
    ResourceLimitError,
    detector_probabilities,
    distribution_csv,
    exact_distribution,
    pauli_matrix,
    run_trajectories,
)
from hexsyn.engine import exact_detector_rates, fault_sensitivity
from hexsyn.noise import NoiseModel, attach_noise


def test_pauli_matrices():
    y = pauli_matrix("Y")
    assert np.allclose(y @ y, np.eye(2))
    assert np.allclose(pauli_matrix("XZ"), np.kron(pauli_matrix("X"), pauli_matrix("Z")))


def test_noiseless_ghz():
    d = exact_distribution(build_ghz_circuit(3), NoiseModel.noiseless())
    nz = {k: v for k, v in d.items() if v > 1e-12}
    assert nz.keys() == {"000", "111"}
    assert all(abs(v - 0.5) < 1e-12 for v in nz.values())


def test_inhomogeneous_ghz_is_asymmetric():
    d = exact_distribution(build_ghz_circuit(3), NoiseModel.inhomogeneous({0: 0.05, 1: 0.05, 2: 0.2}))
    marg = [sum(v for k, v in d.items() if k[i] != k[(i + 1) % 3]) for i in range(3)]
    assert abs(sum(d.values()) - 1) < 1e-10
    assert len({round(x, 6) for x in marg}) > 1


@pytest.mark.parametrize("name", ["Z0", "X0", "X1"])
def test_dense_matches_pauli_analysis(layout, name):
    g = layout.operator(name)
    c = build_gauge_circuit(layout, g, InputState(g.kind, (1,) + (0,) * (g.weight - 1)))
    m = NoiseModel.depolarizing(0.03)
    dets = [d for d in define_detectors(c) if d.defined]
    dense = detector_probabilities(exact_distribution(c, m), [(d.bits, d.expected) for d in dets])
    pauli = exact_detector_rates(fault_sensitivity(attach_noise(c, m), [d.bits for d in dets]))
    assert np.allclose(dense, pauli, atol=1e-12)


def test_trajectories_match_exact(layout):
    c = build_gauge_circuit(layout, layout.operator("Z0"), InputState("Z", (1, 1)))
    m = NoiseModel.depolarizing(0.03, gamma=0.02, delta=0.03)
    dets = [d for d in define_detectors(c) if d.defined]
    exact = detector_probabilities(exact_distribution(c, m), [(d.bits, d.expected) for d in dets])
    ds = run_trajectories(attach_noise(c, m), 40000, seed=9)
    for (d, r) in zip(dets, exact):
        col = np.bitwise_xor.reduce(ds.shots[:, list(d.bits)], axis=1) ^ d.expected
        assert abs(col.mean() - r) < 4 * np.sqrt(r * (1 - r) / 40000)


def test_resource_limit(layout):
    with pytest.raises(ResourceLimitError):
        exact_distribution(build_cycle_circuit(layout, "z", 1), NoiseModel.noiseless())


def test_distribution_csv():
    text = distribution_csv({"00": 0.25, "11": 0.75})
    assert text.splitlines()[0] == "bitstring,probability"
