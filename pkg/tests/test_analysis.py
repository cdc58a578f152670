from fractions import Fraction

import numpy as np
import pytest

from hexsyn.analysis import (
    OTHER,
    SELF,
    SPACE,
    SPACE_TIME,
    TIME,
    ChangeRateTable,
    binomial_interval,
    change_rates,
    class_means,
    classify_pair,
    correlation_from_moments,
    define_detectors,
    detection_events,
    xor_combine,
)
from hexsyn.circuit import InputState, build_cycle_circuit, build_gauge_circuit
from hexsyn.dataset import MalformedDatasetError, SyndromeDataset
from hexsyn.engine import sample_shots
from hexsyn.noise import NoiseModel, attach_noise


def test_wilson_interval_reference_values():
    # textbook value for 10 successes out of 100 at 95 %
    lo, hi = binomial_interval(10, 100)
    assert lo == pytest.approx(0.05522, abs=1e-4)
    assert hi == pytest.approx(0.17437, abs=1e-4)
    assert binomial_interval(0, 20)[0] == 0.0
    assert binomial_interval(20, 20)[1] == 1.0
    with pytest.raises(ValueError):
        binomial_interval(5, 0)


def test_xor_combine_exact():
    assert xor_combine(Fraction(1, 2), Fraction(1, 3)) == Fraction(1, 2)
    assert xor_combine(0.0, 0.2) == pytest.approx(0.2)


def test_detector_definitions(layout):
    c = build_cycle_circuit(layout, "z", 3)
    dets = define_detectors(c)
    assert len(dets) == 4 * 4
    assert all(d.defined for d in dets)
    full = define_detectors(build_cycle_circuit(layout, "full", 3))
    # X stabilizers are random on |0...0> and invisible to a Z-basis data readout
    undefined = {(d.operator, d.cycle) for d in full if not d.defined}
    assert undefined == {("SX0", 0), ("SX1", 0), ("SX0", 3), ("SX1", 3)}


def test_change_rate_table_round_trip(layout):
    c = build_cycle_circuit(layout, "x", 2)
    ds = sample_shots(attach_noise(c, NoiseModel.depolarizing(0.03)), 2000, 4)
    t = change_rates(ds)
    back = ChangeRateTable.from_csv(t.to_csv())
    assert back.entries == t.entries
    assert t.to_csv().splitlines()[0] == "operator_id,cycle,changes,shots,rate,ci_low,ci_high"


def test_empty_dataset_rejected(layout):
    c = build_gauge_circuit(layout, layout.operator("Z0"), InputState("Z", (0, 0)))
    with pytest.raises(MalformedDatasetError):
        change_rates(SyndromeDataset(c, np.zeros((0, c.num_bits), np.uint8)))
    with pytest.raises(MalformedDatasetError):
        SyndromeDataset(c, np.zeros((3, c.num_bits + 1), np.uint8))


def test_classify_pairs(layout):
    assert classify_pair(layout, "SZ0", 2, "SZ0", 2) == SELF
    assert classify_pair(layout, "SZ0", 2, "SZ0", 3) == TIME
    assert classify_pair(layout, "SZ0", 2, "SZ2", 2) == SPACE
    assert classify_pair(layout, "SZ0", 2, "SZ2", 3) == SPACE_TIME
    assert classify_pair(layout, "SZ1", 2, "SZ2", 2) == OTHER
    assert classify_pair(layout, "SZ0", 2, "SZ0", 4) == OTHER


def test_correlation_single_shared_location():
    p, _ = correlation_from_moments(np.array([0.1, 0.1]), np.array([[0.1, 0.1], [0.1, 0.1]]))
    assert p[0, 1] == pytest.approx(0.140625, abs=1e-15)
    assert p[0, 0] == 0


def test_correlation_formula_on_planted_edge():
    # x0 = a^c, x1 = b^c, with c the shared cause
    rng = np.random.default_rng(0)
    n = 400000
    a, b, c = (rng.random((3, n)) < np.array([[0.1], [0.2], [0.05]])).astype(float)
    x = np.stack([np.logical_xor(a, c), np.logical_xor(b, c)], axis=1).astype(float)
    p, flagged = correlation_from_moments(x.mean(0), x.T @ x / n)
    mu0, mu1 = 0.1 * 0.95 + 0.9 * 0.05, 0.2 * 0.95 + 0.8 * 0.05
    cov = 0.05 * 0.95 * 0.8 * 0.6
    assert p[0, 1] == pytest.approx(cov / ((1 - 2 * mu0) * (1 - 2 * mu1)), abs=0.002)
    assert not flagged.any()


def test_correlation_flags_half_rates():
    p, flagged = correlation_from_moments(np.array([0.5, 0.1]), np.array([[0.5, 0.05], [0.05, 0.1]]))
    assert flagged[0, 1] and np.isnan(p[0, 1])


def test_class_means_upper_triangle():
    vals = np.array([[0, 1.0, 3.0], [1.0, 0, 5.0], [3.0, 5.0, 0]])
    labels = np.array([[SELF, TIME, OTHER], [TIME, SELF, TIME], [OTHER, TIME, SELF]], dtype=object)
    means = class_means(vals, labels)
    assert means[TIME] == 3.0 and means[OTHER] == 3.0 and np.isnan(means[SPACE])


def test_event_stream_shape(layout):
    c = build_cycle_circuit(layout, "z", 4)
    ds = sample_shots(attach_noise(c, NoiseModel.depolarizing(0.02)), 100, 1)
    s = detection_events(ds)
    assert s.events.shape == (100, 4, 5)
    assert s.index("SZ1", 2) == 7
