import numpy as np
import pytest

from hexsyn.circuit import cx, hadamard, measure, reset
from hexsyn.noise import (
    DEPOL_PARAMETER,
    ERROR_RATE,
    InvalidParameterError,
    NoiseModel,
    attach_noise,
    confusion_matrix,
    convert_convention,
    make_channel,
    spam_flip,
)


@pytest.mark.parametrize("n", [1, 2])
def test_depolarizing_conventions(n):
    p = 0.06
    a = make_channel("depolarizing", n=n, value=p, convention=ERROR_RATE)
    assert a.total == pytest.approx(p)
    assert sum(a.table().values()) == pytest.approx(1.0)
    assert 1 - a.table()["I" * n] == pytest.approx(p)
    b = make_channel("depolarizing", n=n, value=convert_convention(p, n, ERROR_RATE), convention=DEPOL_PARAMETER)
    for k, v in a.table().items():
        assert b.table()[k] == pytest.approx(v)


def test_convention_ratio():
    assert convert_convention(0.75, 1, DEPOL_PARAMETER) == pytest.approx(0.5625)
    assert convert_convention(15 / 16, 2, DEPOL_PARAMETER) == pytest.approx(225 / 256)


def test_biased_prefers_z():
    ch = make_channel("biased", n=1, p=0.1, eta=10).table()
    assert ch["Z"] > ch["X"] == pytest.approx(ch["Y"])
    assert sum(ch.values()) == pytest.approx(1.0)


def test_confusion():
    m = confusion_matrix(0.04, 0.02)
    assert np.allclose(m.sum(axis=1), 1)
    assert m[1, 0] > m[0, 1]
    with pytest.raises(InvalidParameterError):
        confusion_matrix(0.04, -0.1)


def test_spam_flip_values():
    assert spam_flip(0.06, "depolarizing", ERROR_RATE) == pytest.approx(0.04)
    assert spam_flip(0.06, "depolarizing", DEPOL_PARAMETER) == pytest.approx(0.03)


def test_invalid_parameters():
    with pytest.raises(InvalidParameterError):
        make_channel("bit-flip", p=1.5)
    with pytest.raises(InvalidParameterError):
        make_channel("wobble")


def test_channels_for_instruction_classes():
    m = NoiseModel.depolarizing(0.02, gamma=0.01)
    assert m.channels_for(reset(0))[0][1].variant == "bit-flip"
    assert m.channels_for(reset(0, "X"))[0][1].variant == "phase-flip"
    two = [spec.variant for _, spec in m.channels_for(cx(0, 1))]
    assert "depolarizing" in two and "amplitude-damping" in two
    assert m.channels_for(measure(0, 0))[0][1].variant == "measurement-confusion"
    assert not m.is_pauli
    assert NoiseModel.depolarizing(0.02).channels_for(hadamard(0))[0][1].n == 1


def test_per_qubit_and_round_trip():
    m = NoiseModel.inhomogeneous({0: 0.1, 1: 0.02})
    assert m.param(0) == 0.1 and m.param(5) == 0.0
    assert NoiseModel.from_dict(m.to_dict()) == m
    b = NoiseModel.biased(0.05, 8.0, delta=0.01)
    assert NoiseModel.from_dict(b.to_dict()) == b


def test_attach_noise(layout):
    from hexsyn.circuit import build_cycle_circuit

    c = build_cycle_circuit(layout, "z", 1)
    noisy = attach_noise(c, NoiseModel.depolarizing(0.01))
    assert noisy.is_pauli
    assert len(noisy.locations) >= sum(1 for _ in c.instructions())
