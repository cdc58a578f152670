import numpy as np
import pytest

from hexsyn.circuit import (
    Circuit,
    InputState,
    InvalidInputError,
    build_cycle_circuit,
    build_gauge_circuit,
    build_ghz_circuit,
    build_stabilizer_circuit,
    characterization_circuits,
    characterization_count,
    cx,
    enumerate_input_states,
    idle,
)
from hexsyn.tableau import reference_sample


def test_enumerate_inputs():
    states = enumerate_input_states(2, "Z")
    assert [s.label() for s in states] == ["00", "01", "10", "11"]
    assert [s.label() for s in enumerate_input_states(1, "X")] == ["+", "-"]
    with pytest.raises(InvalidInputError):
        enumerate_input_states(0, "Z")


def test_characterization_count(layout):
    circuits = characterization_circuits(layout)
    assert len(circuits) == characterization_count(3) == 128
    forms = {(c.metadata["operator"], c.metadata["form"]) for c in circuits}
    assert len(forms) == 20


@pytest.mark.parametrize(
    "mode,depth,nbits", [("z", 8, 21), ("x", 14, 33), ("full", 22, 45)]
)
def test_cycle_depth_and_bits(layout, mode, depth, nbits):
    c = build_cycle_circuit(layout, mode, 2)
    assert c.depth == depth
    assert c.num_bits == nbits


def test_z_gauge_template(layout):
    c = build_gauge_circuit(layout, layout.operator("Z0"), InputState("Z", (0, 0)))
    ops = [ins.kind for _, ins in c.instructions() if ins.kind != "idle" and 6 in ins.qubits]
    assert ops == ["reset", "cx", "cx", "measure"]


def test_noiseless_gauge_outcome_is_input_eigenvalue(layout):
    for c in characterization_circuits(layout):
        bits, random = reference_sample(c, np.random.default_rng(0))
        gauge = c.bits_where(kind="gauge")[0]
        qubits = c.metadata["input_qubits"]
        parity = sum(int(ch in "1-") for ch in c.metadata["input"]) % 2
        assert not random[gauge.index]
        assert bits[gauge.index] == parity, (c.metadata, qubits)


def test_basis_mismatch_rejected(layout):
    with pytest.raises(InvalidInputError):
        build_gauge_circuit(layout, layout.operator("Z0"), InputState("X", (0, 0)))
    with pytest.raises(InvalidInputError):
        build_cycle_circuit(layout, "z", 0)
    with pytest.raises(InvalidInputError):
        build_cycle_circuit(layout, "sideways", 2)


def test_stabilizer_circuit(layout):
    c = build_stabilizer_circuit(layout, layout.operator("SZ0"), InputState("Z", (0,) * 4))
    assert len(c.bits_where(kind="gauge")) == 2
    assert c.metadata["analysed"] == ["SZ0"]


def test_validation_rejects_overlap():
    with pytest.raises(ValueError):
        Circuit(2, ((cx(0, 1), idle(1)),), ())
    with pytest.raises(ValueError):
        Circuit(3, ((cx(0, 1),),), ())


def test_ghz_reference():
    c = build_ghz_circuit(3)
    bits, random = reference_sample(c, np.random.default_rng(1))
    assert random[0] and not random[1:].any()
    assert len(set(bits.tolist())) == 1
