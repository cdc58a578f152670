"""Dense simulation for small circuits and non-Pauli noise.

``exact_distribution`` evolves a density matrix per distinct classical
record (records are merged by summing their unnormalised states, which is
exact because later evolution is linear and only the record is output).
``run_trajectories`` unravels every channel stochastically on batches of
state vectors.  Only qubits touched by a non-idle instruction are
simulated; the others stay in ``|0>`` and never influence a record.
"""

from __future__ import annotations

import csv
import io
import math

import numpy as np

from .circuit import Circuit, Instruction
from .dataset import SyndromeDataset
from .engine import CHUNK, _chunk_rng
from .noise import ChannelSpec, NoiseModel, NoisyCircuit, attach_noise

MAX_DENSITY_QUBITS = 12
MAX_STATEVECTOR_QUBITS = 20
TOL = 1e-10

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_PAULI = {"I": _I2, "X": _X, "Y": _Y, "Z": _Z}


class ResourceLimitError(RuntimeError):
    pass


def _basis_vectors(basis: str) -> tuple[np.ndarray, np.ndarray]:
    if basis == "Z":
        return np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
    s = 1 / math.sqrt(2)
    return np.array([s, s], dtype=complex), np.array([s, -s], dtype=complex)


def _projectors(basis: str) -> tuple[np.ndarray, np.ndarray]:
    v0, v1 = _basis_vectors(basis)
    return np.outer(v0, v0.conj()), np.outer(v1, v1.conj())


def _reset_kraus(basis: str, value: int) -> list[np.ndarray]:
    vecs = _basis_vectors(basis)
    target = vecs[value]
    return [np.outer(target, v.conj()) for v in vecs]


def pauli_matrix(label: str) -> np.ndarray:
    out = np.array([[1]], dtype=complex)
    for letter in label:
        out = np.kron(out, _PAULI[letter])
    return out


def _gate(ins: Instruction) -> np.ndarray | None:
    return {"h": _H, "x": _X, "cx": _CX}.get(ins.kind)


class _Local:
    """Map from circuit qubits to the simulated register."""

    def __init__(self, circuit: Circuit, limit: int):
        self.qubits = circuit.active_qubits()
        if len(self.qubits) > limit:
            raise ResourceLimitError(
                f"{len(self.qubits)} active qubits exceed the dense limit of {limit}"
            )
        self.index = {q: i for i, q in enumerate(self.qubits)}
        self.n = len(self.qubits)

    def __call__(self, qubits) -> list[int]:
        return [self.index[q] for q in qubits]


def _locations_by_instruction(noisy: NoisyCircuit) -> dict:
    out: dict = {}
    for loc in noisy.locations:
        out.setdefault((loc.timestep, loc.instruction.qubits), []).append(loc)
    return out


# density matrices, stored as tensors with 2n axes (row axes first)


def _apply_left(rho, op, axes, n):
    k = len(axes)
    t = op.reshape((2,) * (2 * k))
    out = np.tensordot(t, rho, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def _conjugate(rho, op, axes, n):
    """``op rho op^dagger`` on the given qubits."""
    rho = _apply_left(rho, op, axes, n)
    k = len(axes)
    t = op.conj().reshape((2,) * (2 * k))
    cols = [n + a for a in axes]
    out = np.tensordot(rho, t, axes=(cols, list(range(k, 2 * k))))
    return np.moveaxis(out, list(range(2 * n - k, 2 * n)), cols)


def _kraus_channel(rho, ops, axes, n):
    return sum(_conjugate(rho, k, axes, n) for k in ops)


def _pauli_channel(rho, spec: ChannelSpec, axes, n):
    out = (1 - spec.total) * rho
    for lab, p in zip(spec.paulis, spec.probs):
        out = out + p * _conjugate(rho, pauli_matrix(lab), axes, n)
    return out


def _trace(rho, n) -> float:
    d = 2**n
    return float(np.real(np.trace(rho.reshape(d, d))))


def exact_distribution(circuit: Circuit, model: NoiseModel) -> dict[str, float]:
    """Exact probability of every classical record (bit 0 first)."""
    local = _Local(circuit, MAX_DENSITY_QUBITS)
    n = local.n
    after = _locations_by_instruction(attach_noise(circuit, model))

    rho0 = np.zeros((2,) * (2 * n), dtype=complex)
    rho0[(0,) * (2 * n)] = 1.0
    nbits = circuit.num_bits
    branches: dict[tuple, np.ndarray] = {(): rho0}
    record_of = []  # classical bit written at each record position
    for t, ins in circuit.instructions():
        if ins.kind == "idle" and ins.qubits[0] not in local.index:
            continue
        axes = local(ins.qubits)
        locs = after.get((t, ins.qubits), [])
        if ins.kind == "measure":
            p0, p1 = _projectors(ins.basis)
            conf = locs[0].channel.confusion if locs else ((1.0, 0.0), (0.0, 1.0))
            new: dict[tuple, np.ndarray] = {}
            for rec, rho in branches.items():
                for true, proj in ((0, p0), (1, p1)):
                    part = _conjugate(rho, proj, axes, n)
                    if _trace(part, n) <= 0:
                        continue
                    for read in (0, 1):
                        w = conf[true][read]
                        if w <= 0:
                            continue
                        key = rec + (read,)
                        new[key] = new[key] + w * part if key in new else w * part
            branches = new
            record_of.append(ins.bit)
            continue
        for rec in list(branches):
            rho = branches[rec]
            if ins.kind == "reset":
                rho = _kraus_channel(rho, _reset_kraus(ins.basis, ins.value), axes, n)
            elif ins.kind != "idle":
                rho = _conjugate(rho, _gate(ins), axes, n)
            for loc in locs:
                lax = local(loc.qubits)
                if loc.channel.kraus:
                    rho = _kraus_channel(rho, loc.channel.kraus, lax, n)
                else:
                    rho = _pauli_channel(rho, loc.channel, lax, n)
            branches[rec] = rho

    out: dict[str, float] = {}
    for rec, rho in branches.items():
        bits = ["0"] * nbits
        for pos, b in enumerate(rec):
            bits[record_of[pos]] = str(b)
        key = "".join(bits)
        out[key] = out.get(key, 0.0) + _trace(rho, n)
    total = sum(out.values())
    if abs(total - 1) > TOL:
        raise RuntimeError(f"probabilities sum to {total}")
    return dict(sorted(out.items()))


def detector_probabilities(distribution: dict[str, float], detectors) -> np.ndarray:
    """Probability that each ``(bits, expected)`` parity check fails."""
    out = np.zeros(len(detectors))
    for key, p in distribution.items():
        for k, (bits, expected) in enumerate(detectors):
            if (sum(int(key[b]) for b in bits) + expected) % 2:
                out[k] += p
    return out


def distribution_csv(distribution: dict[str, float]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bitstring", "probability"])
    for key, p in distribution.items():
        w.writerow([key, repr(float(p))])
    return buf.getvalue()


# trajectories: state batches of shape (shots, 2, ..., 2)


def _apply_batch(psi, op, axes):
    k = len(axes)
    t = op.reshape((2,) * (2 * k))
    ax = [a + 1 for a in axes]
    out = np.tensordot(psi, t, axes=(ax, list(range(k, 2 * k))))
    return np.moveaxis(out, list(range(psi.ndim - k, psi.ndim)), ax)


def _born(psi, proj, axes) -> np.ndarray:
    part = _apply_batch(psi, proj, axes)
    return np.sum(np.abs(part.reshape(psi.shape[0], -1)) ** 2, axis=1), part


def _normalise(psi):
    norms = np.sqrt(np.sum(np.abs(psi.reshape(psi.shape[0], -1)) ** 2, axis=1))
    return psi / norms.reshape((-1,) + (1,) * (psi.ndim - 1))


def _project_sample(psi, basis, axes, u):
    """Sample a basis outcome per shot and collapse; returns (psi, outcomes)."""
    p0_op, p1_op = _projectors(basis)
    prob0, part0 = _born(psi, p0_op, axes)
    _, part1 = _born(psi, p1_op, axes)
    outcome = u >= prob0
    sel = outcome.reshape((-1,) + (1,) * (psi.ndim - 1))
    return _normalise(np.where(sel, part1, part0)), outcome


def _pauli_batch(psi, spec: ChannelSpec, axes, u):
    cum = np.cumsum(spec.probs)
    hit = u < (cum[-1] if cum.size else 0.0)
    if not hit.any():
        return psi
    which = np.searchsorted(cum, u, side="right")
    for k, lab in enumerate(spec.paulis):
        sel = hit & (which == k)
        if sel.any():
            psi[sel] = _apply_batch(psi[sel], pauli_matrix(lab), axes)
    return psi


def _kraus_batch(psi, ops, axes, u):
    parts = [_apply_batch(psi, k, axes) for k in ops]
    weights = np.stack([np.sum(np.abs(p.reshape(psi.shape[0], -1)) ** 2, axis=1) for p in parts])
    cum = np.cumsum(weights, axis=0)
    choice = (u[None, :] >= cum[:-1]).sum(axis=0) if len(ops) > 1 else np.zeros(psi.shape[0], int)
    out = parts[0].copy()
    for k in range(1, len(ops)):
        sel = choice == k
        out[sel] = parts[k][sel]
    return _normalise(out)


def _trajectory_chunk(noisy: NoisyCircuit, local: _Local, seed: int, chunk: int, shots: int):
    rng = _chunk_rng(seed, chunk)
    circuit = noisy.circuit
    n = local.n
    after = _locations_by_instruction(noisy)
    psi = np.zeros((shots,) + (2,) * n, dtype=complex)
    psi[(slice(None),) + (0,) * n] = 1.0
    record = np.zeros((shots, circuit.num_bits), dtype=np.uint8)
    for t, ins in circuit.instructions():
        if ins.kind == "idle" and ins.qubits[0] not in local.index:
            continue
        axes = local(ins.qubits)
        if ins.kind == "reset":
            psi, outcome = _project_sample(psi, ins.basis, axes, rng.random(shots))
            flip = outcome != bool(ins.value)
            if flip.any():
                op = _X if ins.basis == "Z" else _Z
                psi[flip] = _apply_batch(psi[flip], op, axes)
        elif ins.kind == "measure":
            psi, outcome = _project_sample(psi, ins.basis, axes, rng.random(shots))
            record[:, ins.bit] = outcome
        elif ins.kind != "idle":
            psi = _apply_batch(psi, _gate(ins), axes)
        for loc in after.get((t, ins.qubits), []):
            ch = loc.channel
            u = rng.random(shots)
            lax = local(loc.qubits)
            if ch.confusion is not None:
                true = record[:, ins.bit].astype(bool)
                thr = np.where(true, ch.confusion[1][0], ch.confusion[0][1])
                record[:, ins.bit] ^= (u < thr).astype(np.uint8)
            elif ch.kraus:
                psi = _kraus_batch(psi, ch.kraus, lax, u)
            else:
                psi = _pauli_batch(psi, ch, lax, u)
    return record


def run_trajectories(noisy: NoisyCircuit, shots: int, seed: int) -> SyndromeDataset:
    """Stochastic Kraus unravelling, deterministic for a given seed."""
    local = _Local(noisy.circuit, MAX_STATEVECTOR_QUBITS)
    per_chunk = max(1, min(CHUNK, (1 << 22) >> local.n))
    parts = []
    for c in range(math.ceil(shots / per_chunk)):
        m = min(per_chunk, shots - c * per_chunk)
        parts.append(_trajectory_chunk(noisy, local, seed, c, m))
    info = {"engine": "dense", "seed": seed, "noise": noisy.model.to_dict()}
    return SyndromeDataset(noisy.circuit, np.concatenate(parts), "simulated", info)
