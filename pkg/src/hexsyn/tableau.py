"""Stabilizer tableau simulation, used for noiseless reference samples."""

from __future__ import annotations

import numpy as np


class Tableau:
    """Destabilizer/stabilizer tableau on ``n`` qubits, starting in ``|0...0>``.

    Rows ``0..n-1`` are destabilizers, ``n..2n-1`` stabilizers.  Random
    measurement outcomes are drawn from ``rng`` or, when it is ``None``,
    fixed to 0.
    """

    def __init__(self, n: int, rng: np.random.Generator | None = None):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        self.r = np.zeros(2 * n, dtype=bool)
        idx = np.arange(n)
        self.x[idx, idx] = True
        self.z[n + idx, idx] = True
        self.rng = rng

    def h(self, a: int):
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def cx(self, a: int, b: int):
        x, z = self.x, self.z
        self.r ^= x[:, a] & z[:, b] & ~(x[:, b] ^ z[:, a])
        x[:, b] ^= x[:, a]
        z[:, a] ^= z[:, b]

    def x_gate(self, a: int):
        self.r ^= self.z[:, a]

    def z_gate(self, a: int):
        self.r ^= self.x[:, a]

    def _rowsum_into(self, rows: np.ndarray, src_x, src_z, src_r):
        """Multiply each row in ``rows`` by the Pauli (src_x, src_z, src_r)."""
        g = _g(src_x[None, :], src_z[None, :], self.x[rows], self.z[rows])
        total = 2 * self.r[rows].astype(int) + 2 * int(src_r) + g.sum(axis=1)
        self.r[rows] = (total % 4) == 2
        self.x[rows] ^= src_x
        self.z[rows] ^= src_z

    def measure_z(self, a: int) -> tuple[int, bool]:
        """Measure Z on ``a``; returns ``(outcome, was_random)``."""
        n = self.n
        hits = np.flatnonzero(self.x[n:, a])
        if hits.size:
            p = n + hits[0]
            others = np.flatnonzero(self.x[:, a])
            others = others[others != p]
            if others.size:
                self._rowsum_into(others, self.x[p].copy(), self.z[p].copy(), self.r[p])
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            self.x[p] = False
            self.z[p] = False
            self.z[p, a] = True
            outcome = 0 if self.rng is None else int(self.rng.integers(2))
            self.r[p] = bool(outcome)
            return outcome, True
        # deterministic: accumulate stabilizers selected by destabilizer hits
        sx = np.zeros(n, dtype=bool)
        sz = np.zeros(n, dtype=bool)
        sr = False
        for i in np.flatnonzero(self.x[:n, a]):
            row = n + i
            g = int(_g(self.x[row], self.z[row], sx, sz).sum())
            sr = ((2 * int(sr) + 2 * int(self.r[row]) + g) % 4) == 2
            sx ^= self.x[row]
            sz ^= self.z[row]
        return int(sr), False

    def measure_x(self, a: int) -> tuple[int, bool]:
        self.h(a)
        out = self.measure_z(a)
        self.h(a)
        return out

    def reset(self, a: int, basis: str = "Z", value: int = 0):
        if basis == "X":
            self.h(a)
        outcome, _ = self.measure_z(a)
        if outcome != value:
            self.x_gate(a)
        if basis == "X":
            self.h(a)


def _g(x1, z1, x2, z2):
    """Per-qubit exponent of i picked up when multiplying (x1,z1) into (x2,z2)."""
    x2 = x2.astype(int)
    z2 = z2.astype(int)
    return np.where(
        x1 & z1,
        z2 - x2,
        np.where(x1, z2 * (2 * x2 - 1), np.where(z1, x2 * (1 - 2 * z2), 0)),
    )


def reference_sample(circuit, rng=None) -> tuple[np.ndarray, np.ndarray]:
    """Run ``circuit`` noiselessly.

    Returns:
        bits: uint8 array of measurement outcomes, random ones fixed to 0
            unless ``rng`` is given.
        random: bool array marking outcomes that were random.
    """
    tab = Tableau(circuit.num_qubits, rng)
    bits = np.zeros(circuit.num_bits, dtype=np.uint8)
    random = np.zeros(circuit.num_bits, dtype=bool)
    for _, ins in circuit.instructions():
        k = ins.kind
        if k == "idle":
            continue
        q = ins.qubits
        if k == "reset":
            tab.reset(q[0], ins.basis, ins.value)
        elif k == "h":
            tab.h(q[0])
        elif k == "x":
            tab.x_gate(q[0])
        elif k == "cx":
            tab.cx(q[0], q[1])
        elif k == "measure":
            op = tab.measure_z if ins.basis == "Z" else tab.measure_x
            bits[ins.bit], random[ins.bit] = op(q[0])
        else:  # pragma: no cover - guarded by Instruction
            raise ValueError(k)
    return bits, random
