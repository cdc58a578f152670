"""Pauli-frame sampling and exact fault-propagation analysis.

Sampling tracks, for every shot, the Pauli difference ("frame") between the
noisy run and one noiseless reference run from the tableau simulator.
Resets and measurements randomise the component their eigenstate does not
fix, which reproduces the statistics of nondeterministic outcomes.

Exact analysis propagates the X and Z generators of every fault location
through the circuit at once (one frame column per generator).  The parity a
detector picks up from each single-location Pauli then follows by linearity,
and independent locations combine as
``P(flip) = (1 - prod(1 - 2 q_l)) / 2``.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .circuit import Circuit
from .dataset import SyndromeDataset
from .noise import ChannelSpec, NoiseModel, NoisyCircuit, attach_noise
from .tableau import reference_sample

CHUNK = 8192  # shots per RNG stream; fixed so results ignore worker count

_LETTER = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}


class UnsupportedCircuitError(ValueError):
    """The Pauli engine cannot handle this circuit/model; use the dense engine."""


class NotAnalyzableError(ValueError):
    """A requested detector is not deterministic in the noiseless circuit."""


class HeterogeneousRatesError(ValueError):
    pass


def slot_of(label: str) -> int:
    """Generator-bit index of a Pauli label: bit 2k is X, bit 2k+1 is Z on qubit k."""
    s = 0
    for k, letter in enumerate(label):
        x, z = _LETTER[letter]
        s |= x << (2 * k) | z << (2 * k + 1)
    return s


def _slot_vector(spec: ChannelSpec) -> np.ndarray:
    vec = np.zeros(4**spec.n)
    for lab, p in zip(spec.paulis, spec.probs):
        vec[slot_of(lab)] += p
    return vec


# compiled program


@dataclass
class _Step:
    reset_z: np.ndarray
    reset_x: np.ndarray
    h: np.ndarray
    cx_c: np.ndarray
    cx_t: np.ndarray
    mz_q: np.ndarray
    mz_bit: np.ndarray
    mx_q: np.ndarray
    mx_bit: np.ndarray
    loc1: np.ndarray  # location ids of single-qubit Pauli locations
    loc2: np.ndarray
    locm: np.ndarray  # readout locations, ordered like mz_bit then mx_bit
    q1: np.ndarray
    qa2: np.ndarray
    qb2: np.ndarray


class Program:
    """Model-independent compiled form of a circuit.

    Fault locations are numbered in ``attach_noise`` order; only those after
    a qubit's first use and before its last measurement are sampled (noise
    elsewhere cannot reach a recorded bit).
    """

    def __init__(self, circuit: Circuit):
        self.circuit = circuit
        nq = circuit.num_qubits
        # idles before an opening reset or after the last operation are inert
        first = np.zeros(nq, dtype=np.int64)
        last = np.full(nq, -1)
        seen = np.zeros(nq, dtype=bool)
        for t, ins in circuit.instructions():
            if ins.kind == "idle":
                continue
            for q in ins.qubits:
                if not seen[q]:
                    seen[q] = True
                    first[q] = t if ins.kind == "reset" else 0
                last[q] = t

        self.instructions = []  # location id -> instruction
        self.loc_qubits = []
        self.loc_type = []  # 1, 2 or "m"
        self.live = []
        steps = []
        for t, step in enumerate(circuit.timesteps):
            acc = {
                k: []
                for k in ("rz", "rx", "h", "cc", "ct", "mzq", "mzb", "mxq", "mxb", "l1", "l2", "lmz", "lmx")
            }
            for ins in step:
                lid = len(self.instructions)
                self.instructions.append(ins)
                self.loc_qubits.append(ins.qubits)
                k = ins.kind
                q = ins.qubits
                live = all(first[qq] <= t < last[qq] for qq in q) or k in ("reset", "measure")
                if k == "measure":
                    self.loc_type.append("m")
                    b = ins.basis.lower()
                    acc[f"m{b}q"].append(q[0])
                    acc[f"m{b}b"].append(ins.bit)
                    acc[f"lm{b}"].append(lid)
                elif k == "cx":
                    self.loc_type.append(2)
                    acc["cc"].append(q[0])
                    acc["ct"].append(q[1])
                    acc["l2"].append(lid)
                else:
                    self.loc_type.append(1)
                    if k == "reset":
                        acc["rz" if ins.basis == "Z" else "rx"].append(q[0])
                    elif k == "h":
                        acc["h"].append(q[0])
                    if live:
                        acc["l1"].append(lid)
                self.live.append(live)
            a = {k: np.array(v, dtype=np.int64) for k, v in acc.items()}
            q2 = np.array([self.loc_qubits[l] for l in a["l2"]], dtype=np.int64).reshape(-1, 2)
            steps.append(
                _Step(
                    a["rz"], a["rx"], a["h"], a["cc"], a["ct"],
                    a["mzq"], a["mzb"], a["mxq"], a["mxb"],
                    a["l1"], a["l2"], np.concatenate([a["lmz"], a["lmx"]]),
                    np.array([self.loc_qubits[l][0] for l in a["l1"]], dtype=np.int64),
                    q2[:, 0], q2[:, 1],
                )
            )
        self.steps = steps
        self.num_locations = len(self.instructions)
        self._ref = None

    @property
    def reference(self) -> np.ndarray:
        if self._ref is None:
            self._ref = reference_sample(self.circuit)[0]
        return self._ref

    def bind(self, model: NoiseModel) -> "BoundProbabilities":
        return BoundProbabilities.build(self, model)


class BoundProbabilities:
    """Per-location Pauli slot probabilities and readout flip probabilities."""

    def __init__(self, slots: list, p_flip0: np.ndarray, p_flip1: np.ndarray):
        self.slots = slots  # location id -> slot vector (None for measurements)
        self.p_flip0 = p_flip0  # P(read 1 | true 0), indexed by location id
        self.p_flip1 = p_flip1

    @classmethod
    def build(cls, program: Program, model: NoiseModel) -> "BoundProbabilities":
        n = program.num_locations
        slots: list = [None] * n
        p0 = np.zeros(n)
        p1 = np.zeros(n)
        cache: dict = {}
        for lid, ins in enumerate(program.instructions):
            key = (ins.kind, ins.basis, tuple(model.param(q) for q in ins.qubits))
            hit = cache.get(key)
            if hit is None:
                chans = model.channels_for(ins)
                if len(chans) != 1:
                    raise UnsupportedCircuitError(
                        "amplitude damping is not a Pauli channel; use the dense engine"
                    )
                spec = chans[0][1]
                if spec.kraus:
                    raise UnsupportedCircuitError("non-Pauli channel; use the dense engine")
                if spec.confusion is not None:
                    hit = ("m", spec.confusion[0][1], spec.confusion[1][0])
                else:
                    hit = ("p", _slot_vector(spec))
                cache[key] = hit
            if hit[0] == "m":
                p0[lid], p1[lid] = hit[1], hit[2]
            else:
                slots[lid] = hit[1]
        return cls(slots, p0, p1)

    @property
    def symmetric_readout(self) -> bool:
        return bool(np.all(self.p_flip0 == self.p_flip1))


# sampling


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk])))


def _tables(bound: BoundProbabilities, lids: np.ndarray, size: int):
    probs = np.array([bound.slots[l] for l in lids]).reshape(len(lids), size)
    cum = np.cumsum(probs[:, 1:], axis=1)
    return cum


def _apply_pauli(x, z, rng, qubits: list, cum: np.ndarray, shots: int):
    """Draw one uniform per (location, shot) and apply the selected Pauli."""
    k = cum.shape[0]
    u = rng.random((k, shots))
    rows, cols = np.nonzero(u < cum[:, -1:])
    if rows.size == 0:
        return
    slot = 1 + (u[rows, cols][:, None] >= cum[rows]).sum(axis=1)
    for j, qs in enumerate(qubits):
        q = qs[rows]
        xb = (slot >> (2 * j)) & 1
        zb = (slot >> (2 * j + 1)) & 1
        sel = xb.astype(bool)
        x[q[sel], cols[sel]] ^= True
        sel = zb.astype(bool)
        z[q[sel], cols[sel]] ^= True


def _run_chunk(program: Program, bound: BoundProbabilities, tabs, seed: int, chunk: int, shots: int):
    rng = _chunk_rng(seed, chunk)
    nq = program.circuit.num_qubits
    x = np.zeros((nq, shots), dtype=bool)
    z = np.zeros((nq, shots), dtype=bool)
    flips = np.zeros((program.circuit.num_bits, shots), dtype=bool)
    ref_bool = program.reference.astype(bool)
    for st, (cum1, cum2, pm0, pm1) in zip(program.steps, tabs):
        # ideal operations
        if st.reset_z.size:
            x[st.reset_z] = False
            z[st.reset_z] = rng.random((st.reset_z.size, shots)) < 0.5
        if st.reset_x.size:
            z[st.reset_x] = False
            x[st.reset_x] = rng.random((st.reset_x.size, shots)) < 0.5
        if st.h.size:
            x[st.h], z[st.h] = z[st.h], x[st.h].copy()
        if st.cx_c.size:
            x[st.cx_t] ^= x[st.cx_c]
            z[st.cx_c] ^= z[st.cx_t]
        if st.mz_q.size:
            flips[st.mz_bit] = x[st.mz_q]
            z[st.mz_q] = rng.random((st.mz_q.size, shots)) < 0.5
        if st.mx_q.size:
            flips[st.mx_bit] = z[st.mx_q]
            x[st.mx_q] = rng.random((st.mx_q.size, shots)) < 0.5
        # noise after each operation
        if cum1 is not None:
            _apply_pauli(x, z, rng, [st.q1], cum1, shots)
        if cum2 is not None:
            _apply_pauli(x, z, rng, [st.qa2, st.qb2], cum2, shots)
        if pm0 is not None:
            bits = np.concatenate([st.mz_bit, st.mx_bit])
            u = rng.random((bits.size, shots))
            actual = flips[bits] ^ ref_bool[bits][:, None]
            thr = np.where(actual, pm1[:, None], pm0[:, None])
            flips[bits] ^= u < thr
    return (flips ^ ref_bool[:, None]).T.astype(np.uint8)


def _step_tables(program: Program, bound: BoundProbabilities):
    tabs = []
    for st in program.steps:
        cum1 = _tables(bound, st.loc1, 4) if st.loc1.size else None
        cum2 = _tables(bound, st.loc2, 16) if st.loc2.size else None
        if st.locm.size:
            pm0 = bound.p_flip0[st.locm]
            pm1 = bound.p_flip1[st.locm]
        else:
            pm0 = pm1 = None
        tabs.append((cum1, cum2, pm0, pm1))
    return tabs


_PROGRAMS: "OrderedDict[int, tuple[Circuit, Program]]" = OrderedDict()


def program_for(circuit: Circuit) -> Program:
    """Compiled program, cached per circuit object."""
    key = id(circuit)
    hit = _PROGRAMS.get(key)
    if hit is not None and hit[0] is circuit:
        _PROGRAMS.move_to_end(key)
        return hit[1]
    prog = Program(circuit)
    _PROGRAMS[key] = (circuit, prog)
    while len(_PROGRAMS) > 64:
        _PROGRAMS.popitem(last=False)
    return prog


def sample_bits(
    circuit: Circuit, model: NoiseModel, shots: int, seed: int, workers: int = 1
) -> np.ndarray:
    """Raw shot records, shape ``(shots, num_bits)``."""
    if shots < 1:
        raise ValueError("shots must be positive")
    program = program_for(circuit)
    bound = program.bind(model)
    tabs = _step_tables(program, bound)
    chunks = [(c, min(CHUNK, shots - c * CHUNK)) for c in range(math.ceil(shots / CHUNK))]

    def run(job):
        c, n = job
        return _run_chunk(program, bound, tabs, seed, c, n)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(j) for j in chunks]
    return np.concatenate(parts, axis=0)


def sample_shots(noisy: NoisyCircuit, shots: int, seed: int, workers: int = 1) -> SyndromeDataset:
    """Monte Carlo shots of a noisy Clifford circuit."""
    if any(loc.channel.kraus for loc in noisy.locations):
        raise UnsupportedCircuitError("non-Pauli channel present; use the dense engine")
    bits = sample_bits(noisy.circuit, noisy.model, shots, seed, workers)
    info = {"engine": "pauli", "seed": seed, "noise": noisy.model.to_dict()}
    return SyndromeDataset(noisy.circuit, bits, "simulated", info)


def noiseless_frame_check(circuit: Circuit, bit_sets, shots: int = 256, seed: int = 0) -> np.ndarray:
    """Which parities of bits are deterministic under frame randomisation."""
    bits = sample_bits(circuit, NoiseModel.noiseless(), shots, seed)
    out = []
    for s in bit_sets:
        col = np.bitwise_xor.reduce(bits[:, list(s)], axis=1)
        out.append(bool(np.all(col == col[0])))
    return np.array(out)


# exact analysis


class Propagation:
    """Generator columns propagated through a circuit for a set of detectors.

    ``par1``/``par2``/``parm`` hold, per detector and location, the parity
    flip caused by each Pauli slot (single-qubit: 4 slots, two-qubit: 16,
    readout: flip or not).
    """

    def __init__(self, circuit: Circuit, detectors: list[tuple[int, ...]]):
        self.circuit = circuit
        self.program = program_for(circuit)
        prog = self.program
        nq = circuit.num_qubits
        ndet = len(detectors)
        # detector membership per bit
        member = np.zeros((circuit.num_bits, ndet), dtype=bool)
        for k, bits in enumerate(detectors):
            for b in bits:
                member[b, k] ^= True

        loc1 = [l for l in range(prog.num_locations) if prog.loc_type[l] == 1 and prog.live[l]]
        loc2 = [l for l in range(prog.num_locations) if prog.loc_type[l] == 2]
        locm = [l for l in range(prog.num_locations) if prog.loc_type[l] == "m"]
        n_gauge = sum(
            st.reset_z.size + st.reset_x.size + st.mz_q.size + st.mx_q.size for st in prog.steps
        )
        col1 = {l: 2 * i for i, l in enumerate(loc1)}
        base2 = 2 * len(loc1)
        col2 = {l: base2 + 4 * i for i, l in enumerate(loc2)}
        base_g = base2 + 4 * len(loc2)
        ncols = base_g + n_gauge

        x = np.zeros((nq, ncols), dtype=bool)
        z = np.zeros((nq, ncols), dtype=bool)
        e = np.zeros((ndet, ncols), dtype=bool)
        g = base_g
        for st in prog.steps:
            for qs, clear_x in ((st.reset_z, True), (st.reset_x, False)):
                for q in qs:
                    x[q] = False
                    z[q] = False
                    # gauge freedom of the fresh eigenstate
                    (z if clear_x else x)[q, g] = True
                    g += 1
            for q in st.h:
                x[q], z[q] = z[q].copy(), x[q].copy()
            if st.cx_c.size:
                x[st.cx_t] ^= x[st.cx_c]
                z[st.cx_c] ^= z[st.cx_t]
            for q, b in zip(st.mz_q, st.mz_bit):
                rows = np.flatnonzero(member[b])
                if rows.size:
                    e[rows] ^= x[q]
                z[q] = False
                z[q, g] = True
                g += 1
            for q, b in zip(st.mx_q, st.mx_bit):
                rows = np.flatnonzero(member[b])
                if rows.size:
                    e[rows] ^= z[q]
                x[q] = False
                x[q, g] = True
                g += 1
            for l in st.loc1:
                q = prog.loc_qubits[l][0]
                c = col1[l]
                x[q, c] = True
                z[q, c + 1] = True
            for l in st.loc2:
                qa, qb = prog.loc_qubits[l]
                c = col2[l]
                x[qa, c] = True
                z[qa, c + 1] = True
                x[qb, c + 2] = True
                z[qb, c + 3] = True

        self.deterministic = ~e[:, base_g:].any(axis=1)
        self.loc1 = np.array(loc1, dtype=np.int64)
        self.loc2 = np.array(loc2, dtype=np.int64)
        self.locm = np.array(locm, dtype=np.int64)
        self.num_detectors = ndet

        slots1 = np.arange(4)
        bits1 = np.stack([(slots1 >> j) & 1 for j in range(2)]).astype(bool)  # (2, 4)
        e1 = e[:, :base2].reshape(ndet, len(loc1), 2)
        self.par1 = _parity(e1, bits1)
        slots2 = np.arange(16)
        bits2 = np.stack([(slots2 >> j) & 1 for j in range(4)]).astype(bool)  # (4, 16)
        e2 = e[:, base2:base_g].reshape(ndet, len(loc2), 4)
        self.par2 = _parity(e2, bits2)
        bit_of = np.array([prog.instructions[l].bit for l in locm], dtype=np.int64)
        self.parm = member[bit_of].T if len(locm) else np.zeros((ndet, 0), dtype=bool)

    def location_flips(self, bound: BoundProbabilities) -> np.ndarray:
        """``q[k, l]``: probability location ``l`` flips detector ``k``."""
        if not bound.symmetric_readout:
            raise UnsupportedCircuitError(
                "asymmetric readout makes flips state dependent; use the dense engine"
            )
        q = np.zeros((self.num_detectors, self.program.num_locations))
        if self.loc1.size:
            p1 = np.array([bound.slots[l] for l in self.loc1])
            q[:, self.loc1] = np.einsum("dls,ls->dl", self.par1, p1)
        if self.loc2.size:
            p2 = np.array([bound.slots[l] for l in self.loc2])
            q[:, self.loc2] = np.einsum("dls,ls->dl", self.par2, p2)
        if self.locm.size:
            q[:, self.locm] = self.parm * bound.p_flip0[self.locm][None, :]
        return q

    def pair_flips(self, bound: BoundProbabilities) -> np.ndarray:
        """``r[i, j, l]``: probability location ``l`` flips exactly one of ``i, j``."""
        q = self.location_flips(bound)
        both = np.zeros((self.num_detectors, self.num_detectors, q.shape[1]))
        if self.loc1.size:
            p1 = np.array([bound.slots[l] for l in self.loc1])
            both[:, :, self.loc1] = np.einsum("ils,jls,ls->ijl", self.par1, self.par1, p1)
        if self.loc2.size:
            p2 = np.array([bound.slots[l] for l in self.loc2])
            both[:, :, self.loc2] = np.einsum("ils,jls,ls->ijl", self.par2, self.par2, p2)
        if self.locm.size:
            pm = bound.p_flip0[self.locm]
            both[:, :, self.locm] = np.einsum("il,jl,l->ijl", self.parm, self.parm, pm)
        return q[:, None, :] + q[None, :, :] - 2 * both


def _parity(e_loc: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """XOR of generator effects selected by each slot: (d, l, g) x (g, s) -> (d, l, s)."""
    out = np.zeros(e_loc.shape[:2] + (bits.shape[1],), dtype=bool)
    for j in range(bits.shape[0]):
        out ^= e_loc[:, :, j : j + 1] & bits[j][None, None, :]
    return out


@dataclass
class DetectorSensitivity:
    """Flip probability ``q[k, l]`` of detector ``k`` from location ``l``."""

    q: np.ndarray
    detectors: list[tuple[int, ...]]
    locations: tuple

    @property
    def m(self) -> np.ndarray:
        return (self.q > 0).sum(axis=1)

    def sensitive(self, k: int) -> list[tuple[int, float]]:
        return [(int(l), float(self.q[k, l])) for l in np.flatnonzero(self.q[k] > 0)]


def _propagation(circuit, detectors) -> Propagation:
    key = ("prop", tuple(tuple(d) for d in detectors))
    prog = program_for(circuit)
    cache = prog.__dict__.setdefault("_prop_cache", {})
    if key not in cache:
        cache[key] = Propagation(circuit, detectors)
    return cache[key]


def _default_detectors(circuit):
    from .analysis import define_detectors

    return [d.bits for d in define_detectors(circuit) if d.defined]


def fault_sensitivity(noisy: NoisyCircuit, detectors=None) -> DetectorSensitivity:
    """Per-detector, per-location flip probabilities.

    ``detectors`` is a list of bit-index tuples; by default every defined
    detector of the circuit's analysed operators.
    """
    if noisy.model.gamma > 0:
        raise UnsupportedCircuitError("amplitude damping needs the dense engine")
    detectors = _default_detectors(noisy.circuit) if detectors is None else [tuple(d) for d in detectors]
    prop = _propagation(noisy.circuit, detectors)
    if not prop.deterministic.all():
        bad = [detectors[k] for k in np.flatnonzero(~prop.deterministic)]
        raise NotAnalyzableError(f"detectors are random without noise: {bad[:3]}")
    bound = prop.program.bind(noisy.model)
    q = prop.location_flips(bound)
    return DetectorSensitivity(q, detectors, noisy.locations)


def rates_from_flips(q: np.ndarray) -> np.ndarray:
    return (1 - np.prod(1 - 2 * q, axis=-1)) / 2


def exact_detector_rates(sens: DetectorSensitivity) -> np.ndarray:
    """Exact flip probability of each detector under independent faults."""
    return rates_from_flips(sens.q)


@dataclass(frozen=True)
class RatePolynomial:
    """``R(p)`` with exact rational coefficients, lowest degree first."""

    coefficients: tuple[Fraction, ...]
    m: int

    def __call__(self, p):
        return sum(c * p**k for k, c in enumerate(self.coefficients))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def linear(self) -> Fraction:
        return self.coefficients[1] if len(self.coefficients) > 1 else Fraction(0)

    def as_pairs(self) -> list[tuple[int, int]]:
        return [(c.numerator, c.denominator) for c in self.coefficients]

    def __str__(self) -> str:
        out = ""
        for k, c in enumerate(self.coefficients):
            if not c:
                continue
            term = f"{abs(c)}" + ("" if k == 0 else "*p" if k == 1 else f"*p^{k}")
            if not out:
                out = term if c > 0 else "-" + term
            else:
                out += (" + " if c > 0 else " - ") + term
        return out or "0"


def polynomial_for_m(m: int) -> RatePolynomial:
    """Expansion of ``(1 - (1 - p)**m) / 2``."""
    coeffs = [Fraction(0)] + [
        Fraction(-((-1) ** k) * math.comb(m, k), 2) for k in range(1, m + 1)
    ]
    return RatePolynomial(tuple(coeffs), m)


def change_rate_polynomial(sens: DetectorSensitivity, detector: int = 0, p: float | None = None) -> RatePolynomial:
    """Rate polynomial in the noise parameter for one detector.

    Every sensitive location must flip the detector with the same
    probability ``p/2``; ``p`` defaults to twice the common flip probability.
    """
    q = sens.q[detector]
    nz = q[q > 0]
    if nz.size == 0:
        return RatePolynomial((Fraction(0),), 0)
    if not np.allclose(nz, nz[0], rtol=1e-9, atol=0):
        raise HeterogeneousRatesError(
            "locations flip this detector with different probabilities; "
            "use exact_detector_rates instead"
        )
    if p is not None and not math.isclose(2 * nz[0], p, rel_tol=1e-9):
        raise HeterogeneousRatesError(f"flip probability {nz[0]} is not p/2 for p={p}")
    return polynomial_for_m(int(nz.size))


def predict_correlations(noisy: NoisyCircuit, detectors=None):
    """Exact ``p_ij`` matrix and means for the given detectors."""
    from .analysis import correlation_from_moments

    detectors = _default_detectors(noisy.circuit) if detectors is None else [tuple(d) for d in detectors]
    prop = _propagation(noisy.circuit, detectors)
    if not prop.deterministic.all():
        raise NotAnalyzableError("detectors are random without noise")
    bound = prop.program.bind(noisy.model)
    q = prop.location_flips(bound)
    mean = rates_from_flips(q)
    r = prop.pair_flips(bound)
    parity = (1 - np.prod(1 - 2 * r, axis=-1)) / 2  # P(x_i xor x_j = 1)
    second = (mean[:, None] + mean[None, :] - parity) / 2
    return correlation_from_moments(mean, second)[0], mean


def analyze(circuit: Circuit, model: NoiseModel, detectors=None) -> DetectorSensitivity:
    return fault_sensitivity(attach_noise(circuit, model), detectors)
