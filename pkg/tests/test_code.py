import pytest

from hexsyn.code import (
    InvalidDistanceError,
    PauliOperator,
    build_layout,
    expected_counts,
    stabilizer_decomposition,
    verify_layout,
)


@pytest.mark.parametrize("d", [3, 5, 7])
def test_counts_and_checks(d):
    lay = build_layout(d)
    counts = expected_counts(d)
    assert len(lay.qubits_with_role("data")) == counts["data"] == d * d
    assert len(lay.qubits_with_role("measure")) == counts["measure"]
    assert len(lay.qubits_with_role("flag")) == counts["flag"]
    report = verify_layout(lay)
    assert report.ok, report.details


def test_distance_three_shape(layout):
    assert layout.num_qubits == 23
    assert layout.data_qubits == (3, 4, 5, 10, 11, 12, 17, 18, 19)
    assert max(len(layout.neighbors(q)) for q in range(23)) <= 3
    names = [g.name for g in layout.gauges]
    assert names == ["X0", "X1", "X2", "X3", "Z0", "Z1", "Z2", "Z3", "Z4", "Z5"]
    assert layout.operator("Z0").measure_qubit == 6


def _indices(layout, name):
    return sorted(layout.data_index(q) for q in layout.support(name))


def test_stabilizer_supports(layout):
    assert _indices(layout, "SX0") == [0, 1, 3, 4, 6, 7]
    assert _indices(layout, "SZ0") == [0, 1, 3, 4]
    assert _indices(layout, "SZ1") == [2, 5]
    assert _indices(layout, "SZ2") == [3, 6]
    assert _indices(layout, "SZ3") == [4, 5, 7, 8]
    assert layout.operator("SX1").factors == ("X1", "X3")
    assert _indices(layout, "Z0") == [0, 3]


def test_stabilizers_are_gauge_products(layout):
    for s in stabilizer_decomposition(layout):
        prod = None
        for f in s.factors:
            g = layout.operator(f).pauli
            prod = g if prod is None else prod * g
        assert prod.support == s.pauli.support


def test_pauli_algebra():
    x = PauliOperator.uniform("X", [0, 1])
    z = PauliOperator.uniform("Z", [1, 2])
    zz = PauliOperator.uniform("Z", [0, 1])
    assert not x.commutes_with(z)
    assert x.commutes_with(zz)
    assert (x * x).weight == 0


def test_logicals(layout):
    assert not layout.logical_x.commutes_with(layout.logical_z)
    for s in layout.stabilizers:
        assert layout.logical_x.commutes_with(s.pauli)
        assert layout.logical_z.commutes_with(s.pauli)


@pytest.mark.parametrize("d", [1, 2, 4, 0, -3])
def test_invalid_distance(d):
    with pytest.raises(InvalidDistanceError):
        build_layout(d)
