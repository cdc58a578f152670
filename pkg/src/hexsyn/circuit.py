"""Uniform-timestep circuits and builders for gauge, stabilizer and cycle runs.

Every instruction takes one timestep.  Each timestep touches every qubit
exactly once, with explicit ``idle`` instructions filling the gaps, so noise
can be attached per instruction without further scheduling.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from itertools import product

from .code import CodeLayout, GaugeOp, StabilizerOp

KINDS = ("reset", "h", "x", "cx", "measure", "idle")

GAUGE_BIT = "gauge"
FLAG_BIT = "flag"
DATA_BIT = "data"


class InvalidInputError(ValueError):
    """Raised when an input state does not suit the requested circuit."""


@dataclass(frozen=True)
class Instruction:
    """One operation occupying one timestep.

    ``basis`` applies to resets and measurements, ``value`` to resets
    (prepare the -1 eigenstate when 1), ``bit`` to measurements.
    """

    kind: str
    qubits: tuple[int, ...]
    basis: str = "Z"
    value: int = 0
    bit: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown instruction kind {self.kind!r}")
        n = 2 if self.kind == "cx" else 1
        if len(self.qubits) != n or len(set(self.qubits)) != n:
            raise ValueError(f"{self.kind} needs {n} distinct qubits, got {self.qubits}")
        if self.basis not in ("Z", "X"):
            raise ValueError(f"bad basis {self.basis!r}")
        if self.kind == "measure" and self.bit is None:
            raise ValueError("measure needs a classical bit")

    @property
    def noise_class(self) -> str:
        if self.kind in ("h", "x", "idle"):
            return "single"
        return {"cx": "two", "reset": "reset", "measure": "measure"}[self.kind]

    def token(self) -> str:
        q = self.qubits
        if self.kind == "reset":
            return f"R{self.basis}({q[0]},{self.value})"
        if self.kind == "measure":
            return f"M{self.basis}({q[0]},{self.bit})"
        if self.kind == "cx":
            return f"CX({q[0]},{q[1]})"
        return {"h": "H", "x": "X", "idle": "I"}[self.kind] + f"({q[0]})"


def reset(q, basis="Z", value=0):
    return Instruction("reset", (q,), basis=basis, value=value)


def measure(q, bit, basis="Z"):
    return Instruction("measure", (q,), basis=basis, bit=bit)


def cx(c, t):
    return Instruction("cx", (c, t))


def hadamard(q):
    return Instruction("h", (q,))


def idle(q):
    return Instruction("idle", (q,))


@dataclass(frozen=True)
class BitLabel:
    index: int
    kind: str
    qubit: int
    operator: str | None = None
    cycle: int | None = None


@dataclass(frozen=True)
class InputState:
    """Product input over ``qubits``: bit 1 means |1> (Z basis) or |-> (X basis)."""

    basis: str
    bits: tuple[int, ...]
    qubits: tuple[int, ...] = ()

    def __post_init__(self):
        if self.basis not in ("Z", "X"):
            raise InvalidInputError(f"bad basis {self.basis!r}")
        if any(b not in (0, 1) for b in self.bits):
            raise InvalidInputError("input bits must be 0 or 1")
        if self.qubits and len(self.qubits) != len(self.bits):
            raise InvalidInputError("one input bit per qubit required")

    @classmethod
    def uniform(cls, basis: str, qubits, bit: int = 0) -> "InputState":
        qubits = tuple(qubits)
        return cls(basis, (bit,) * len(qubits), qubits)

    def bound(self, qubits) -> "InputState":
        """Attach to ``qubits`` (kept if already attached and equal)."""
        qubits = tuple(qubits)
        if len(qubits) != len(self.bits):
            raise InvalidInputError(
                f"input has {len(self.bits)} bits, operator support has {len(qubits)}"
            )
        if self.qubits and tuple(sorted(self.qubits)) != tuple(sorted(qubits)):
            raise InvalidInputError("input state is bound to different qubits")
        if self.qubits:
            return self
        return InputState(self.basis, self.bits, qubits)

    def value_of(self, q: int) -> int:
        return self.bits[self.qubits.index(q)]

    def parity(self, qubits) -> int:
        return sum(self.value_of(q) for q in qubits) % 2

    def label(self) -> str:
        sym = {("Z", 0): "0", ("Z", 1): "1", ("X", 0): "+", ("X", 1): "-"}
        return "".join(sym[(self.basis, b)] for b in self.bits)


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    timesteps: tuple[tuple[Instruction, ...], ...]
    bits: tuple[BitLabel, ...]
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        for t, step in enumerate(self.timesteps):
            seen = []
            for ins in step:
                seen.extend(ins.qubits)
            if len(seen) != len(set(seen)):
                raise ValueError(f"timestep {t}: overlapping instructions")
            if sorted(seen) != list(range(self.num_qubits)):
                raise ValueError(f"timestep {t}: every qubit must appear exactly once")
        if [b.index for b in self.bits] != list(range(len(self.bits))):
            raise ValueError("classical bits must be indexed 0..n-1 in order")
        measured = sorted(
            ins.bit for step in self.timesteps for ins in step if ins.kind == "measure"
        )
        if measured != list(range(len(self.bits))):
            raise ValueError("every classical bit must be written exactly once")

    @property
    def depth(self) -> int:
        return len(self.timesteps)

    @property
    def num_bits(self) -> int:
        return len(self.bits)

    def instructions(self):
        """Yield ``(timestep, instruction)`` in deterministic order."""
        for t, step in enumerate(self.timesteps):
            for ins in step:
                yield t, ins

    def active_qubits(self) -> tuple[int, ...]:
        """Qubits touched by anything other than idle."""
        return tuple(
            sorted({q for _, ins in self.instructions() if ins.kind != "idle" for q in ins.qubits})
        )

    def bits_where(self, kind=None, operator=None, cycle=None) -> list[BitLabel]:
        out = []
        for b in self.bits:
            if kind is not None and b.kind != kind:
                continue
            if operator is not None and b.operator != operator:
                continue
            if cycle is not None and b.cycle != cycle:
                continue
            out.append(b)
        return out

    def to_text(self) -> str:
        from .io import circuit_to_text

        return circuit_to_text(self)


class _Grid:
    """Sparse timestep grid that refuses overlapping placements."""

    def __init__(self):
        self.slots: dict[int, list[Instruction]] = defaultdict(list)
        self.busy: set[tuple[int, int]] = set()
        self.bits: list[BitLabel] = []

    def put(self, t: int, ins: Instruction):
        for q in ins.qubits:
            if (t, q) in self.busy:
                raise ValueError(f"qubit {q} double-booked at timestep {t}")
            self.busy.add((t, q))
        self.slots[t].append(ins)

    def first_use(self, q: int) -> int | None:
        times = [t for t, qq in self.busy if qq == q]
        return min(times) if times else None

    def measure(self, t, q, basis, kind, operator=None, cycle=None):
        bit = len(self.bits)
        self.bits.append(BitLabel(bit, kind, q, operator, cycle))
        self.put(t, measure(q, bit, basis))

    def build(self, num_qubits: int, metadata: dict) -> Circuit:
        depth = max(self.slots) + 1 if self.slots else 0
        steps = []
        for t in range(depth):
            used = {q for ins in self.slots[t] for q in ins.qubits}
            step = sorted(self.slots[t], key=lambda ins: ins.qubits[0])
            step += [idle(q) for q in range(num_qubits) if q not in used]
            steps.append(tuple(sorted(step, key=lambda ins: ins.qubits[0])))
        return Circuit(num_qubits, tuple(steps), tuple(self.bits), metadata)


# Template offsets.  Z gauges: reset, two CNOTs, measure.
Z_SLOTS = 4
# X gauges: the measure qubit entangles each flag twice; flags fan out to the
# data between.  Left flag visits its upper data qubit first, right flag its
# lower one first, which keeps neighbouring gauges conflict-free in a cycle.
X_SLOTS = 7


def _place_z_gauge(grid: _Grid, g: GaugeOp, t0: int, cycle=None):
    a = g.measure_qubit
    up, lo = g.data_support
    grid.put(t0, reset(a))
    grid.put(t0 + 1, cx(up, a))
    grid.put(t0 + 2, cx(lo, a))
    grid.measure(t0 + 3, a, "Z", GAUGE_BIT, g.name, cycle)


def _place_x_gauge(grid: _Grid, g: GaugeOp, t0: int, cycle=None):
    m = g.measure_qubit
    fl, fr = g.flag_qubits
    (l_up, l_lo), (r_up, r_lo) = g.flag_links
    grid.put(t0, reset(m, "X"))
    grid.put(t0, reset(fl))
    grid.put(t0 + 1, cx(m, fl))
    grid.put(t0 + 1, reset(fr))
    grid.put(t0 + 2, cx(m, fr))
    # a flag's data CNOTs sit in slots 2/3 (left) or 3/4 (right); boundary
    # flags with a single partner keep the later slot of the pair
    if l_up is not None:
        grid.put(t0 + 2, cx(fl, l_up))
    if l_lo is not None:
        grid.put(t0 + 3, cx(fl, l_lo))
    if r_lo is not None:
        grid.put(t0 + 3, cx(fr, r_lo))
    if r_up is not None:
        grid.put(t0 + 4, cx(fr, r_up))
    grid.put(t0 + 4, cx(m, fl))
    grid.put(t0 + 5, cx(m, fr))
    grid.measure(t0 + 6, m, "X", GAUGE_BIT, g.name, cycle)
    grid.measure(t0 + 6, fl, "Z", FLAG_BIT, g.name, cycle)
    grid.measure(t0 + 6, fr, "Z", FLAG_BIT, g.name, cycle)


def _place_x_pair(grid: _Grid, g: GaugeOp, t0: int, cycle=None):
    """Six-step flagged XX template for a boundary gauge measured on its own."""
    m = g.measure_qubit
    fl, fr = g.flag_qubits
    a = next(q for q in g.flag_links[0] if q is not None)
    b = next(q for q in g.flag_links[1] if q is not None)
    grid.put(t0, reset(m, "X"))
    grid.put(t0, reset(fl))
    grid.put(t0 + 1, cx(m, fl))
    grid.put(t0 + 1, reset(fr))
    grid.put(t0 + 2, cx(m, fr))
    grid.put(t0 + 2, cx(fl, a))
    grid.put(t0 + 3, cx(m, fl))
    grid.put(t0 + 3, cx(fr, b))
    grid.put(t0 + 4, cx(m, fr))
    grid.measure(t0 + 5, m, "X", GAUGE_BIT, g.name, cycle)
    grid.measure(t0 + 5, fl, "Z", FLAG_BIT, g.name, cycle)
    grid.measure(t0 + 5, fr, "Z", FLAG_BIT, g.name, cycle)


def _template_len(g: GaugeOp, compact: bool = False) -> int:
    if g.kind == "Z":
        return Z_SLOTS
    return X_SLOTS - 1 if compact and g.weight == 2 else X_SLOTS


def _place_gauge(grid, g, t0, cycle=None, compact=False) -> int:
    if g.kind == "Z":
        _place_z_gauge(grid, g, t0, cycle)
    elif compact and g.weight == 2:
        _place_x_pair(grid, g, t0, cycle)
    else:
        _place_x_gauge(grid, g, t0, cycle)
    return _template_len(g, compact)


def _prepare_and_read_data(grid: _Grid, state: InputState, final_t: int):
    """Reset each input qubit just before its first use; read all at the end."""
    for q in state.qubits:
        first = grid.first_use(q)
        t = final_t if first is None else first
        grid.put(t - 1, reset(q, state.basis, state.value_of(q)))
    for q in state.qubits:
        grid.measure(final_t, q, state.basis, DATA_BIT)


def _shift(grid: _Grid, offset: int) -> _Grid:
    out = _Grid()
    for t, items in grid.slots.items():
        for ins in items:
            out.put(t + offset, ins)
    out.bits = list(grid.bits)
    return out


def _check_basis(state: InputState, kind: str):
    if state.basis != kind:
        raise InvalidInputError(
            f"{kind}-type operator needs a {kind}-basis input, got {state.basis}"
        )


def _circuit_for_gauges(layout, gauges, state, metadata) -> Circuit:
    depth = max(_template_len(g, compact=True) for g in gauges)
    grid = _Grid()
    # align templates so every gauge is read out in the same final timestep,
    # leaving one spare leading step for data resets
    for g in gauges:
        _place_gauge(grid, g, 1 + depth - _template_len(g, True), cycle=0, compact=True)
    _prepare_and_read_data(grid, state, depth)
    if min(grid.slots) > 0:
        grid = _shift(grid, -min(grid.slots))
    return grid.build(layout.num_qubits, metadata)


def build_gauge_circuit(
    layout: CodeLayout, gauge: GaugeOp, state: InputState, form: str | None = None
) -> Circuit:
    """Prepare ``state`` on the gauge's support, measure the gauge, read the data.

    ``form`` selects the Pauli type actually measured.  The opposite form of
    a gauge is its Hadamard-conjugated circuit: reset and measurement bases
    swap and every CNOT reverses direction.
    """
    form = form or gauge.kind
    _check_basis(state, form)
    state = state.bound(gauge.data_support)
    meta = {
        "family": "gauge",
        "operator": gauge.name,
        "form": form,
        "basis": state.basis,
        "input": state.label(),
        "input_qubits": list(state.qubits),
        "cycles": 1,
        "distance": layout.distance,
        "analysed": [gauge.name],
    }
    if form == gauge.kind:
        return _circuit_for_gauges(layout, [gauge], state, meta)
    native = InputState(gauge.kind, state.bits, state.qubits)
    return dual_circuit(_circuit_for_gauges(layout, [gauge], native, meta), meta)


def dual_circuit(circuit: Circuit, metadata: dict | None = None) -> Circuit:
    """Conjugate every qubit by a Hadamard at both ends of ``circuit``."""
    flip = {"Z": "X", "X": "Z"}
    steps = []
    for step in circuit.timesteps:
        out = []
        for ins in step:
            if ins.kind in ("reset", "measure"):
                ins = Instruction(ins.kind, ins.qubits, flip[ins.basis], ins.value, ins.bit)
            elif ins.kind == "cx":
                ins = cx(ins.qubits[1], ins.qubits[0])
            elif ins.kind == "x":
                raise ValueError("dual of a Pauli X gate is not an instruction")
            out.append(ins)
        steps.append(tuple(sorted(out, key=lambda ins: ins.qubits[0])))
    meta = dict(metadata if metadata is not None else circuit.metadata)
    if "basis" in meta:
        meta["basis"] = flip[meta["basis"]] if metadata is None else meta["basis"]
    return Circuit(circuit.num_qubits, tuple(steps), circuit.bits, meta)


def build_stabilizer_circuit(
    layout: CodeLayout, stab: StabilizerOp, state: InputState
) -> Circuit:
    """Measure all gauge factors of ``stab`` simultaneously."""
    _check_basis(state, stab.pauli_type)
    gauges = [layout.operator(n) for n in stab.factors]
    seen: set[int] = set()
    for g in gauges:
        qubits = {g.measure_qubit, *g.flag_qubits, *g.data_support}
        if seen & qubits:
            raise ValueError(f"{stab.name}: gauge factors share qubits")
        seen |= qubits
    state = state.bound(stab.pauli.qubits)
    meta = {
        "family": "stabilizer",
        "operator": stab.name,
        "basis": state.basis,
        "input": state.label(),
        "input_qubits": list(state.qubits),
        "cycles": 1,
        "distance": layout.distance,
        "analysed": [stab.name],
    }
    return _circuit_for_gauges(layout, gauges, state, meta)


MODES = ("Z-only", "X-only", "full")
_MODE_ALIASES = {"z": "Z-only", "x": "X-only", "full": "full"}


def normalize_mode(mode: str) -> str:
    mode = _MODE_ALIASES.get(str(mode).lower(), mode)
    if mode not in MODES:
        raise InvalidInputError(f"unknown mode {mode!r}; expected one of {MODES}")
    return mode


def build_cycle_circuit(
    layout: CodeLayout, mode: str, cycles: int, state: InputState | None = None
) -> Circuit:
    """Repeated syndrome extraction followed by a data readout.

    Z-only and full modes expect all data in ``|0>``, X-only in ``|+>``.
    In full mode each cycle measures every X gauge, then every Z gauge.
    """
    mode = normalize_mode(mode)
    if not isinstance(cycles, int) or cycles < 1:
        raise InvalidInputError(f"cycles must be a positive integer, got {cycles!r}")
    basis = "X" if mode == "X-only" else "Z"
    if state is None:
        state = InputState.uniform(basis, layout.data_qubits)
    if state.basis != basis or any(state.bits):
        raise InvalidInputError(
            f"{mode} cycles need all data in the +1 {basis} eigenstate"
        )
    state = state.bound(layout.data_qubits)

    phases = {"Z-only": ["Z"], "X-only": ["X"], "full": ["X", "Z"]}[mode]
    grid = _Grid()
    t = 1  # leading step kept free for data resets, trimmed if unused
    for c in range(cycles):
        for kind in phases:
            for g in layout.gauges_of_kind(kind):
                _place_gauge(grid, g, t, cycle=c)
            t += Z_SLOTS if kind == "Z" else X_SLOTS
    _prepare_and_read_data(grid, state, t - 1)
    if min(grid.slots) > 0:
        grid = _shift(grid, -min(grid.slots))

    if mode == "Z-only":
        analysed = [s.name for s in layout.stabilizers_of_type("Z")]
    elif mode == "X-only":
        analysed = [g.name for g in layout.gauges_of_kind("X")]
    else:
        analysed = [s.name for s in layout.stabilizers]
    meta = {
        "family": "cycle",
        "mode": mode,
        "basis": basis,
        "input": state.label(),
        "input_qubits": list(state.qubits),
        "cycles": cycles,
        "distance": layout.distance,
        "analysed": analysed,
    }
    return grid.build(layout.num_qubits, meta)


def build_ghz_circuit(n: int = 3) -> Circuit:
    """n-qubit GHZ preparation followed by a Z readout of every qubit."""
    if n < 2:
        raise InvalidInputError("GHZ needs at least two qubits")
    grid = _Grid()
    for q in range(n):
        grid.put(0, reset(q))
    grid.put(1, hadamard(0))
    for q in range(1, n):
        grid.put(1 + q, cx(q - 1, q))
    for q in range(n):
        grid.measure(n + 1, q, "Z", DATA_BIT)
    return grid.build(n, {"family": "ghz", "basis": "Z", "cycles": 1, "analysed": []})


def enumerate_input_states(n: int, basis: str) -> list[InputState]:
    """All ``2**n`` product inputs in lexicographic order."""
    if n < 1:
        raise InvalidInputError("support size must be at least 1")
    if basis not in ("Z", "X"):
        raise InvalidInputError(f"bad basis {basis!r}")
    return [InputState(basis, bits) for bits in product((0, 1), repeat=n)]


def characterization_circuits(layout: CodeLayout) -> list[Circuit]:
    """Every gauge, in both Pauli forms, on every product input of its support."""
    out = []
    for g in layout.gauges:
        for form in ("Z", "X"):
            for s in enumerate_input_states(g.weight, form):
                out.append(build_gauge_circuit(layout, g, s, form=form))
    return out


def characterization_count(distance: int) -> int:
    d = distance
    return 16 * (d - 1) + 24 * (d - 1) ** 2
