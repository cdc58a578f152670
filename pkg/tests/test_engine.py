from fractions import Fraction

import numpy as np
import pytest

from hexsyn.analysis import change_rates, define_detectors
from hexsyn.circuit import InputState, build_cycle_circuit, build_gauge_circuit, build_ghz_circuit
from hexsyn.engine import (
    NotAnalyzableError,
    UnsupportedCircuitError,
    analyze,
    change_rate_polynomial,
    exact_detector_rates,
    fault_sensitivity,
    noiseless_frame_check,
    polynomial_for_m,
    predict_correlations,
    sample_bits,
    sample_shots,
)
from hexsyn.noise import NoiseModel, attach_noise


def test_noiseless_sampling_has_no_detection_events(layout):
    for mode in ("z", "x", "full"):
        c = build_cycle_circuit(layout, mode, 3)
        ds = sample_shots(attach_noise(c, NoiseModel.noiseless()), 500, seed=3)
        t = change_rates(ds)
        assert all(e.rate == 0 for e in t.defined())


def test_seed_determinism_and_worker_independence(layout):
    c = build_cycle_circuit(layout, "z", 2)
    m = NoiseModel.depolarizing(0.05)
    a = sample_bits(c, m, 20000, seed=11, workers=1)
    b = sample_bits(c, m, 20000, seed=11, workers=4)
    d = sample_bits(c, m, 20000, seed=12)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, d)


def test_frame_check_flags_random_bits():
    c = build_ghz_circuit(3)
    det = noiseless_frame_check(c, [(0,), (0, 1), (1, 2)])
    assert det.tolist() == [False, True, True]


def test_polynomial_expansion():
    poly = polynomial_for_m(6)
    assert poly.coefficients[1] == 3
    assert poly(Fraction(1, 10)) == (1 - Fraction(9, 10) ** 6) / 2
    assert str(poly).startswith("3*p - 15/2*p^2")


@pytest.mark.parametrize("name,m", [("Z0", 6), ("X0", 10), ("X1", 15)])
def test_gauge_sensitivity_counts(layout, name, m):
    g = layout.operator(name)
    c = build_gauge_circuit(layout, g, InputState(g.kind, (0,) * g.weight))
    sens = analyze(c, NoiseModel.depolarizing(0.01))
    assert sens.m[0] == m
    assert change_rate_polynomial(sens, 0, p=0.01).m == m


def test_exact_rate_matches_sampling(layout):
    c = build_gauge_circuit(layout, layout.operator("X1"), InputState("X", (0, 1, 1, 0)))
    m = NoiseModel.depolarizing(0.04)
    rates = exact_detector_rates(fault_sensitivity(attach_noise(c, m)))
    t = change_rates(sample_shots(attach_noise(c, m), 100000, seed=5))
    for r, e in zip(rates, t.defined()):
        assert abs(e.rate - r) < 4 * np.sqrt(r * (1 - r) / 1e5)


def test_non_pauli_rejected(layout):
    c = build_gauge_circuit(layout, layout.operator("Z0"), InputState("Z", (0, 0)))
    noisy = attach_noise(c, NoiseModel.depolarizing(0.01, gamma=0.01))
    with pytest.raises(UnsupportedCircuitError):
        sample_shots(noisy, 10, 0)
    with pytest.raises(UnsupportedCircuitError):
        fault_sensitivity(noisy)


def test_random_detector_rejected():
    c = build_ghz_circuit(3)
    with pytest.raises(NotAnalyzableError):
        fault_sensitivity(attach_noise(c, NoiseModel.depolarizing(0.01)), [(0,)])


def test_predicted_correlations_match_sampling(layout):
    c = build_cycle_circuit(layout, "z", 3)
    m = NoiseModel.depolarizing(0.04)
    dets = define_detectors(c)
    bits = [d.bits for d in dets if d.defined]
    p, mean = predict_correlations(attach_noise(c, m), bits)
    x = sample_bits(c, m, 100000, 2)
    ev = np.stack([np.bitwise_xor.reduce(x[:, list(b)], axis=1) for b in bits], axis=1).astype(float)
    assert np.allclose(ev.mean(axis=0), mean, atol=0.006)
    mu = ev.mean(axis=0)
    second = ev.T @ ev / len(ev)
    meas = (second - np.outer(mu, mu)) / np.outer(1 - 2 * mu, 1 - 2 * mu)
    np.fill_diagonal(meas, 0)
    assert np.nanmax(np.abs(meas - p)) < 0.02


def test_sampler_unbiased_across_seeds(layout):
    # pooled over many seeds, every detector's z-score should stay small
    c = build_cycle_circuit(layout, "z", 16)
    noisy = attach_noise(c, NoiseModel.depolarizing(0.03))
    exact = exact_detector_rates(fault_sensitivity(noisy))
    seeds = range(100, 112)
    total = np.zeros_like(exact)
    for s in seeds:
        total += change_rates(sample_shots(noisy, 50000, s)).rates()
    n = 50000 * len(seeds)
    z = (total / len(seeds) - exact) / np.sqrt(exact * (1 - exact) / n)
    assert np.abs(z).max() < 4
