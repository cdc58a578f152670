"""Change rates, detection events and correlation matrices from shot data.

An operator's value in a cycle is the parity of the gauge outcomes that
make it up.  Its detection event at cycle ``c`` compares

* ``c = 0``: the value against the parity implied by the prepared input,
* ``0 < c < cycles``: the value against the previous cycle,
* ``c = cycles``: the data-qubit readout parity against the last value.

The first and last comparisons are undefined when the operator's Pauli type
differs from the preparation or readout basis.  Events are indexed
``i = n * S + c`` with ``S`` the operator position and ``n = cycles + 1``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache
from statistics import NormalDist

import numpy as np

from .circuit import Circuit
from .code import CodeLayout, GaugeOp, build_layout
from .dataset import MalformedDatasetError, SyndromeDataset

SPACE = "space"
TIME = "time"
SPACE_TIME = "space-time"
OTHER = "other"
SELF = "self"
CLASSES = (TIME, SPACE, SPACE_TIME, OTHER)


@lru_cache(maxsize=16)
def _cached_layout(distance: int) -> CodeLayout:
    return build_layout(distance)


def layout_for(circuit: Circuit) -> CodeLayout:
    d = circuit.metadata.get("distance")
    if d is None:
        raise MalformedDatasetError("circuit metadata has no code distance")
    return _cached_layout(int(d))


@dataclass(frozen=True)
class Detector:
    """A parity of measured bits compared against a known value.

    ``bits`` is ``None`` when the comparison is undefined.
    """

    operator: str
    cycle: int
    bits: tuple[int, ...] | None
    expected: int = 0

    @property
    def defined(self) -> bool:
        return self.bits is not None


@dataclass(frozen=True)
class OperatorInfo:
    name: str
    pauli_type: str
    support: tuple[int, ...]
    gauges: tuple[str, ...]


def analysed_operators(circuit: Circuit, layout: CodeLayout | None = None) -> list[OperatorInfo]:
    """Operators whose change rates the circuit is meant to expose."""
    meta = circuit.metadata
    names = meta.get("analysed")
    if names is None:
        raise MalformedDatasetError("circuit metadata lacks the analysed operator list")
    if not names:
        return []
    layout = layout or layout_for(circuit)
    out = []
    for name in names:
        op = layout.operator(name)
        if isinstance(op, GaugeOp):
            kind = meta.get("form", op.kind) if meta.get("family") == "gauge" else op.kind
            out.append(OperatorInfo(name, kind, tuple(op.data_support), (name,)))
        else:
            out.append(OperatorInfo(name, op.pauli_type, op.pauli.qubits, tuple(op.factors)))
    return out


def define_detectors(circuit: Circuit, layout: CodeLayout | None = None) -> list[Detector]:
    """Detectors ordered by operator then cycle (the ``n*S + c`` order)."""
    meta = circuit.metadata
    cycles = int(meta.get("cycles", 1))
    basis = meta.get("basis")
    inputs = dict(zip(meta.get("input_qubits", []), _input_bits(meta)))
    gauge_bits: dict[tuple[str, int], int] = {}
    data_bits: dict[int, int] = {}
    for b in circuit.bits:
        if b.kind == "gauge":
            gauge_bits[(b.operator, b.cycle)] = b.index
        elif b.kind == "data":
            data_bits[b.qubit] = b.index

    out = []
    for op in analysed_operators(circuit, layout):
        def value_bits(c):
            try:
                return [gauge_bits[(g, c)] for g in op.gauges]
            except KeyError:
                raise MalformedDatasetError(f"no outcome for {op.name} in cycle {c}") from None

        for c in range(cycles + 1):
            if c == 0:
                if op.pauli_type != basis or not all(q in inputs for q in op.support):
                    out.append(Detector(op.name, c, None))
                    continue
                parity = sum(inputs[q] for q in op.support) % 2
                out.append(Detector(op.name, c, tuple(value_bits(0)), parity))
            elif c < cycles:
                out.append(Detector(op.name, c, tuple(value_bits(c - 1) + value_bits(c))))
            else:
                if op.pauli_type != basis or not all(q in data_bits for q in op.support):
                    out.append(Detector(op.name, c, None))
                    continue
                bits = value_bits(c - 1) + [data_bits[q] for q in op.support]
                out.append(Detector(op.name, c, tuple(bits)))
    return out


def _input_bits(meta) -> list[int]:
    label = meta.get("input", "")
    return [1 if ch in "1-" else 0 for ch in label]


@dataclass
class DetectionEventStream:
    """Per-shot events, shape ``(shots, operators, cycles + 1)``.

    Entries of undefined detectors are zero and masked out by ``defined``.
    """

    events: np.ndarray
    defined: np.ndarray
    operators: tuple[str, ...]
    cycles: int
    detectors: tuple[Detector, ...]

    @property
    def rounds(self) -> int:
        return self.cycles + 1

    def flat(self) -> np.ndarray:
        """Events as ``(shots, n_ops * rounds)`` in index order."""
        return self.events.reshape(self.events.shape[0], -1)

    def index(self, operator: str, cycle: int) -> int:
        return self.operators.index(operator) * self.rounds + cycle


def detection_events(dataset: SyndromeDataset, layout: CodeLayout | None = None) -> DetectionEventStream:
    circuit = dataset.circuit
    detectors = define_detectors(circuit, layout)
    ops = tuple(dict.fromkeys(d.operator for d in detectors))
    rounds = int(circuit.metadata.get("cycles", 1)) + 1
    shots = dataset.shots
    events = np.zeros((shots.shape[0], len(ops), rounds), dtype=np.uint8)
    defined = np.zeros((len(ops), rounds), dtype=bool)
    for k, det in enumerate(detectors):
        s, c = divmod(k, rounds)
        if not det.defined:
            continue
        defined[s, c] = True
        col = np.bitwise_xor.reduce(shots[:, list(det.bits)], axis=1)
        events[:, s, c] = col ^ det.expected
    return DetectionEventStream(events, defined, ops, rounds - 1, tuple(detectors))


def binomial_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials and trials >= 1")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    n, k = trials, successes
    centre = (k + z * z / 2) / (n + z * z)
    half = z / (n + z * z) * np.sqrt(k * (n - k) / n + z * z / 4)
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return float(lo), float(hi)


@dataclass(frozen=True)
class ChangeRate:
    operator: str
    cycle: int
    changes: int | None
    shots: int
    rate: float | None
    ci_low: float | None
    ci_high: float | None

    @property
    def defined(self) -> bool:
        return self.rate is not None


@dataclass
class ChangeRateTable:
    entries: list[ChangeRate]
    confidence: float = 0.95

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def get(self, operator: str, cycle: int) -> ChangeRate:
        for e in self.entries:
            if e.operator == operator and e.cycle == cycle:
                return e
        raise KeyError((operator, cycle))

    def defined(self) -> list[ChangeRate]:
        return [e for e in self.entries if e.defined]

    def operators(self) -> list[str]:
        return list(dict.fromkeys(e.operator for e in self.entries))

    def rates(self) -> np.ndarray:
        return np.array([e.rate for e in self.defined()], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["operator_id", "cycle", "changes", "shots", "rate", "ci_low", "ci_high"])
        for e in self.entries:
            if e.defined:
                w.writerow(
                    [e.operator, e.cycle, e.changes, e.shots, repr(e.rate), repr(e.ci_low), repr(e.ci_high)]
                )
            else:
                w.writerow([e.operator, e.cycle, "", e.shots, "undefined", "", ""])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, confidence: float = 0.95) -> "ChangeRateTable":
        entries = []
        for row in csv.DictReader(io.StringIO(text)):
            if row["rate"] == "undefined":
                entries.append(
                    ChangeRate(row["operator_id"], int(row["cycle"]), None, int(row["shots"]), None, None, None)
                )
            else:
                entries.append(
                    ChangeRate(
                        row["operator_id"],
                        int(row["cycle"]),
                        int(row["changes"]),
                        int(row["shots"]),
                        float(row["rate"]),
                        float(row["ci_low"]),
                        float(row["ci_high"]),
                    )
                )
        return cls(entries, confidence)


def change_rates(
    dataset: SyndromeDataset, confidence: float = 0.95, layout: CodeLayout | None = None
) -> ChangeRateTable:
    stream = detection_events(dataset, layout)
    n = dataset.num_shots
    if n < 1:
        raise MalformedDatasetError("dataset has no shots")
    counts = stream.events.sum(axis=0, dtype=np.int64)
    entries = []
    for s, op in enumerate(stream.operators):
        for c in range(stream.rounds):
            if not stream.defined[s, c]:
                entries.append(ChangeRate(op, c, None, n, None, None, None))
                continue
            k = int(counts[s, c])
            lo, hi = binomial_interval(k, n, confidence)
            entries.append(ChangeRate(op, c, k, n, k / n, lo, hi))
    return ChangeRateTable(entries, confidence)


def xor_combine(pa, pb):
    """Probability that exactly one of two independent events happens."""
    return pa * (1 - pb) + pb * (1 - pa)


@dataclass
class CorrelationMatrix:
    """Detection-event correlations ``p_ij`` with undefined entries as NaN."""

    values: np.ndarray
    operators: tuple[str, ...]
    cycles: int
    flagged: np.ndarray
    means: np.ndarray | None = None

    @property
    def rounds(self) -> int:
        return self.cycles + 1

    def label(self, i: int) -> tuple[str, int]:
        s, c = divmod(i, self.rounds)
        return self.operators[s], c


def correlation_from_moments(mean: np.ndarray, second: np.ndarray, eps: float = 1e-3):
    """``p_ij`` from first moments and the matrix of ``<x_i x_j>``."""
    mean = np.asarray(mean, dtype=float)
    denom = np.outer(1 - 2 * mean, 1 - 2 * mean)
    bad = np.abs(mean - 0.5) < eps
    flagged = bad[:, None] | bad[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        p = (second - np.outer(mean, mean)) / denom
    p[flagged] = np.nan
    np.fill_diagonal(p, 0.0)
    np.fill_diagonal(flagged, False)
    return p, flagged


def correlation_matrix(stream: DetectionEventStream, eps: float = 1e-3) -> CorrelationMatrix:
    x = stream.flat().astype(np.float64)
    n = x.shape[0]
    mean = x.mean(axis=0)
    second = x.T @ x / n
    p, flagged = correlation_from_moments(mean, second, eps)
    undefined = ~stream.defined.reshape(-1)
    p[undefined, :] = np.nan
    p[:, undefined] = np.nan
    np.fill_diagonal(p, 0.0)
    return CorrelationMatrix(p, stream.operators, stream.cycles, flagged, mean)


def _share_data(layout: CodeLayout, a: str, b: str) -> bool:
    return bool(set(layout.support(a)) & set(layout.support(b)))


def classify_pair(layout: CodeLayout, op_a: str, c_a: int, op_b: str, c_b: int) -> str:
    dc = abs(c_a - c_b)
    if op_a == op_b:
        if dc == 0:
            return SELF
        return TIME if dc == 1 else OTHER
    if not _share_data(layout, op_a, op_b):
        return OTHER
    if dc == 0:
        return SPACE
    return SPACE_TIME if dc == 1 else OTHER


def classify_entries(matrix: CorrelationMatrix, layout: CodeLayout) -> np.ndarray:
    """Class label for every ``(i, j)`` entry."""
    n = matrix.values.shape[0]
    labels = np.empty((n, n), dtype=object)
    for i in range(n):
        oi, ci = matrix.label(i)
        for j in range(n):
            oj, cj = matrix.label(j)
            labels[i, j] = classify_pair(layout, oi, ci, oj, cj)
    return labels


def class_means(values: np.ndarray, labels: np.ndarray) -> dict[str, float]:
    """Mean of defined off-diagonal entries per class (upper triangle)."""
    iu = np.triu_indices(values.shape[0], k=1)
    v = values[iu]
    lab = labels[iu]
    out = {}
    for cls in CLASSES:
        sel = (lab == cls) & np.isfinite(v)
        out[cls] = float(v[sel].mean()) if sel.any() else float("nan")
    return out


def bootstrap_class_means(
    stream: DetectionEventStream,
    layout: CodeLayout,
    resamples: int = 200,
    seed: int = 0,
    eps: float = 1e-3,
) -> dict[str, float]:
    """Bootstrap standard error of each class mean (shots resampled)."""
    rng = np.random.default_rng(seed)
    n = stream.events.shape[0]
    labels = classify_entries(correlation_matrix(stream, eps), layout)
    draws = {cls: [] for cls in CLASSES}
    for _ in range(resamples):
        idx = rng.integers(0, n, n)
        sub = DetectionEventStream(
            stream.events[idx], stream.defined, stream.operators, stream.cycles, stream.detectors
        )
        means = class_means(correlation_matrix(sub, eps).values, labels)
        for cls in CLASSES:
            draws[cls].append(means[cls])
    return {cls: float(np.std(v, ddof=1)) for cls, v in draws.items()}


def correlation_csv(matrix: CorrelationMatrix, labels: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "p_ij", "class"])
    n = matrix.values.shape[0]
    for i in range(n):
        for j in range(n):
            v = matrix.values[i, j]
            w.writerow([i, j, "undefined" if not np.isfinite(v) else repr(float(v)), labels[i, j]])
    return buf.getvalue()
