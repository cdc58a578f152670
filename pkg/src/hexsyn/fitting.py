"""Noise-parameter inference from change-rate tables.

Predictors map a noise model to the expected rate of every defined
detector of a list of circuits.  Fits minimise the mean squared error
between predicted and observed rates over all circuits jointly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .analysis import ChangeRateTable, define_detectors
from .circuit import Circuit
from .code import CodeLayout
from .engine import _propagation, program_for, rates_from_flips, sample_bits
from .noise import DEPOL_PARAMETER, NoiseModel


class NonInvertibleError(ValueError):
    pass


def rate_for(p, m: int):
    """Change rate of a detector with ``m`` locations each flipping it with ``p/2``."""
    return (1 - (1 - p) ** m) / 2


def invert_rate(rate: float, m: int) -> float:
    """Noise parameter ``p`` in ``[0, 1)`` with ``rate_for(p, m) == rate``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if not 0 <= rate < 0.5:
        raise NonInvertibleError(f"rate {rate} is outside [0, 1/2)")
    if rate == 0:
        return 0.0
    return optimize.brentq(lambda p: rate_for(p, m) - rate, 0.0, 1.0, xtol=1e-15, rtol=1e-15)


class ExactPredictor:
    """Rates from exact fault propagation (Pauli models only)."""

    seed = None

    def __init__(self, circuits: list[Circuit]):
        self.circuits = list(circuits)
        self._props = []
        for c in self.circuits:
            dets = [d.bits for d in define_detectors(c) if d.defined]
            self._props.append(_propagation(c, dets))

    def predict(self, model: NoiseModel) -> list[np.ndarray]:
        out = []
        for prop in self._props:
            q = prop.location_flips(prop.program.bind(model))
            out.append(rates_from_flips(q))
        return out


class SampledPredictor:
    """Monte Carlo rates with a fixed seed (common random numbers)."""

    def __init__(self, circuits: list[Circuit], shots: int = 2048, seed: int = 0):
        self.circuits = list(circuits)
        self.shots = shots
        self.seed = seed
        self._dets = [[d for d in define_detectors(c) if d.defined] for c in self.circuits]

    def predict(self, model: NoiseModel) -> list[np.ndarray]:
        out = []
        for c, dets in zip(self.circuits, self._dets):
            bits = sample_bits(c, model, self.shots, self.seed)
            rates = []
            for d in dets:
                col = np.bitwise_xor.reduce(bits[:, list(d.bits)], axis=1) ^ d.expected
                rates.append(col.mean())
            out.append(np.array(rates))
        return out


def observed_rates(tables: list[ChangeRateTable]) -> list[np.ndarray]:
    if not tables:
        raise ValueError("no change-rate tables to fit")
    return [t.rates() for t in tables]


def mse(predicted: list[np.ndarray], observed: list[np.ndarray]) -> float:
    diff = np.concatenate([p - o for p, o in zip(predicted, observed)])
    return float(np.mean(diff**2)) if diff.size else 0.0


def noise_floor(tables: list[ChangeRateTable], shots: int | None = None) -> float:
    """Expected MSE of perfect predictions against binomially sampled rates."""
    vals = []
    for t in tables:
        for e in t.defined():
            n = shots or e.shots
            vals.append(e.rate * (1 - e.rate) / n)
    return float(np.mean(vals)) if vals else 0.0


@dataclass
class FitResult:
    variant: str
    params: dict
    cost: float
    evaluations: int
    seed: int | None = None
    converged: bool = True
    per_qubit: dict[int, float] | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def mean_p(self) -> float:
        if self.per_qubit:
            return float(np.mean(list(self.per_qubit.values())))
        return float(self.params.get("p", float("nan")))

    def model(self, convention=DEPOL_PARAMETER) -> NoiseModel:
        if self.per_qubit is not None:
            return NoiseModel.inhomogeneous(self.per_qubit, convention)
        if self.variant == "biased":
            return NoiseModel.biased(self.params["p"], self.params["eta"])
        return NoiseModel.depolarizing(self.params["p"], self.params.get("convention", convention))

    def to_dict(self) -> dict:
        out = {
            "format_version": 1,
            "variant": self.variant,
            "params": self.params,
            "cost": self.cost,
            "evaluations": self.evaluations,
            "seed": self.seed,
            "converged": self.converged,
            "mean_p": self.mean_p,
            "notes": list(self.notes),
        }
        if self.per_qubit is not None:
            out["per_qubit"] = {str(q): v for q, v in sorted(self.per_qubit.items())}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "FitResult":
        pq = data.get("per_qubit")
        return cls(
            variant=data["variant"],
            params=dict(data["params"]),
            cost=float(data["cost"]),
            evaluations=int(data["evaluations"]),
            seed=data.get("seed"),
            converged=bool(data.get("converged", True)),
            per_qubit=None if pq is None else {int(q): float(v) for q, v in pq.items()},
            notes=list(data.get("notes", [])),
        )


class _Counter:
    def __init__(self, fn):
        self.fn = fn
        self.calls = 0
        self.best = (math.inf, None)

    def __call__(self, x):
        self.calls += 1
        val = self.fn(x)
        if val < self.best[0]:
            self.best = (val, np.array(x, dtype=float))
        return val


def fit_global(
    tables: list[ChangeRateTable],
    variant: str,
    predictor,
    convention: str = DEPOL_PARAMETER,
    p_max: float = 0.2,
    grid: int = 41,
    eta_range: tuple[float, float] = (0.5, 100.0),
) -> FitResult:
    """Direct search for a single ``p`` (uniform) or ``(p, eta)`` (biased)."""
    observed = observed_rates(tables)
    if variant == "uniform":
        cost = _Counter(
            lambda x: mse(predictor.predict(NoiseModel.depolarizing(float(x[0]), convention)), observed)
        )
        ps = np.linspace(0.0, p_max, grid)
        values = [cost([p]) for p in ps]
        k = int(np.argmin(values))
        lo, hi = ps[max(k - 1, 0)], ps[min(k + 1, grid - 1)]
        if hi > lo:
            optimize.minimize_scalar(
                lambda p: cost([p]), bounds=(lo, hi), method="bounded", options={"xatol": 1e-7}
            )
        best, x = cost.best
        return FitResult(
            "uniform",
            {"p": float(x[0]), "convention": convention},
            float(best),
            cost.calls,
            predictor.seed,
        )

    if variant == "biased":

        def f(x):
            p, log_eta = x
            if not 0 <= p <= 1:
                return 1.0 + abs(p)
            return mse(predictor.predict(NoiseModel.biased(float(p), float(np.exp(log_eta)))), observed)

        cost = _Counter(f)
        ps = np.linspace(0.0, p_max, grid // 2 + 1)
        etas = np.linspace(np.log(eta_range[0]), np.log(eta_range[1]), 15)
        start = min(((cost([p, e]), (p, e)) for p in ps for e in etas))[1]
        optimize.minimize(
            cost,
            np.array(start),
            method="Nelder-Mead",
            options={"xatol": 1e-6, "fatol": 1e-14, "maxfev": 400},
        )
        best, x = cost.best
        return FitResult(
            "biased",
            {"p": float(x[0]), "eta": float(np.exp(x[1]))},
            float(best),
            cost.calls,
            predictor.seed,
        )

    raise ValueError(f"unknown variant {variant!r}")


def fit_inhomogeneous(
    tables: list[ChangeRateTable],
    layout: CodeLayout,
    predictor,
    initial: dict[int, float] | float,
    budget: int = 500,
    convention: str = DEPOL_PARAMETER,
    rhobeg: float = 0.01,
) -> FitResult:
    """COBYLA over per-qubit parameters bounded to ``[0, 0.5]``.

    Qubits no circuit touches are pinned to 0.  The best point seen is
    returned even when the evaluation budget runs out.
    """
    observed = observed_rates(tables)
    used = sorted({q for c in predictor.circuits for q in c.active_qubits()})
    if isinstance(initial, dict):
        x0 = np.array([initial.get(q, 0.0) for q in used], dtype=float)
    else:
        x0 = np.full(len(used), float(initial))

    def model_of(x):
        return NoiseModel.inhomogeneous(
            {q: float(np.clip(v, 0.0, 0.5)) for q, v in zip(used, x)}, convention
        )

    cost = _Counter(lambda x: mse(predictor.predict(model_of(x)), observed))
    start_cost = cost(x0)
    res = optimize.minimize(
        cost,
        x0,
        method="COBYLA",
        bounds=[(0.0, 0.5)] * len(used),
        options={"maxiter": max(budget - 1, 1), "rhobeg": rhobeg, "tol": 1e-10},
    )
    best, x = cost.best
    converged = bool(res.success) and cost.calls < budget
    notes = []
    if not converged:
        notes.append("evaluation budget exhausted; best point so far returned")
    notes.append("local optimiser: the cost landscape can have several minima")
    table = {q: float(np.clip(v, 0.0, 0.5)) for q, v in zip(used, x)}
    return FitResult(
        "inhomogeneous",
        {"start_cost": float(start_cost), "pinned_zero": [q for q in range(layout.num_qubits) if q not in table]},
        float(best),
        cost.calls,
        predictor.seed,
        converged,
        table,
        notes,
    )


def evaluate(model: NoiseModel, tables: list[ChangeRateTable], predictor) -> float:
    return mse(predictor.predict(model), observed_rates(tables))


def synthetic_tables(circuits: list[Circuit], model: NoiseModel, shots: int = 2048) -> list[ChangeRateTable]:
    """Change-rate tables holding exact rates (counts rounded, rates exact)."""
    from .analysis import ChangeRate

    pred = ExactPredictor(circuits).predict(model)
    out = []
    for c, rates in zip(circuits, pred):
        it = iter(rates)
        entries = []
        for d in define_detectors(c):
            if d.defined:
                r = float(next(it))
                entries.append(ChangeRate(d.operator, d.cycle, round(r * shots), shots, r, r, r))
            else:
                entries.append(ChangeRate(d.operator, d.cycle, None, shots, None, None, None))
        out.append(ChangeRateTable(entries))
    return out


__all__ = [
    "ExactPredictor",
    "FitResult",
    "NonInvertibleError",
    "SampledPredictor",
    "evaluate",
    "fit_global",
    "fit_inhomogeneous",
    "invert_rate",
    "mse",
    "noise_floor",
    "program_for",
    "rate_for",
    "synthetic_tables",
]
