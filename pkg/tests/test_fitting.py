import numpy as np
import pytest

from hexsyn.circuit import build_cycle_circuit
from hexsyn.fitting import (
    ExactPredictor,
    FitResult,
    NonInvertibleError,
    SampledPredictor,
    fit_global,
    fit_inhomogeneous,
    invert_rate,
    noise_floor,
    rate_for,
    synthetic_tables,
)
from hexsyn.noise import NoiseModel


@pytest.fixture(scope="module")
def circuits(layout):
    return [build_cycle_circuit(layout, m, 3) for m in ("z", "x")]


@pytest.mark.parametrize("m", [1, 6, 15, 40])
def test_invert_round_trip(m):
    for p in (0.0, 0.01, 0.2, 0.5):
        assert invert_rate(rate_for(p, m), m) == pytest.approx(p, abs=1e-12)


def test_invert_out_of_range():
    with pytest.raises(NonInvertibleError):
        invert_rate(0.5, 6)
    with pytest.raises(ValueError):
        invert_rate(0.1, 0)


def test_uniform_fit_exact(circuits):
    tables = synthetic_tables(circuits, NoiseModel.depolarizing(0.021))
    res = fit_global(tables, "uniform", ExactPredictor(circuits))
    assert res.params["p"] == pytest.approx(0.021, abs=1e-5)
    assert res.cost < 1e-12


def test_zero_rates_fit_zero(circuits):
    tables = synthetic_tables(circuits, NoiseModel.noiseless())
    res = fit_global(tables, "uniform", ExactPredictor(circuits))
    assert res.params["p"] == 0.0


def test_sampled_predictor_is_deterministic(circuits):
    pr = SampledPredictor(circuits, 512, seed=3)
    m = NoiseModel.depolarizing(0.03)
    a, b = pr.predict(m), pr.predict(m)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_budget_is_respected(layout, circuits):
    truth = {q: 0.02 + 0.001 * q for q in range(layout.num_qubits)}
    tables = synthetic_tables(circuits, NoiseModel.inhomogeneous(truth))
    res = fit_inhomogeneous(tables, layout, ExactPredictor(circuits), 0.03, budget=30)
    assert res.evaluations <= 31
    assert not res.converged
    assert res.per_qubit is not None and res.cost <= res.params["start_cost"]


def test_fit_result_round_trip():
    r = FitResult("inhomogeneous", {"start_cost": 1.0}, 0.5, 12, 3, False, {0: 0.1, 4: 0.2}, ["x"])
    assert FitResult.from_dict(r.to_dict()) == r
    assert r.to_dict()["mean_p"] == pytest.approx(0.15)


def test_noise_floor(circuits):
    tables = synthetic_tables(circuits, NoiseModel.depolarizing(0.03), shots=1000)
    rates = np.concatenate([t.rates() for t in tables])
    assert noise_floor(tables) == pytest.approx(np.mean(rates * (1 - rates) / 1000))
