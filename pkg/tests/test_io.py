import numpy as np
import pytest

from hexsyn import io as hio
from hexsyn.circuit import build_cycle_circuit, characterization_circuits
from hexsyn.dataset import MalformedDatasetError
from hexsyn.engine import sample_shots
from hexsyn.noise import NoiseModel, attach_noise


def test_circuit_text_round_trip(layout):
    for c in characterization_circuits(layout)[::17] + [build_cycle_circuit(layout, "full", 2)]:
        back = hio.circuit_from_text(hio.circuit_to_text(c))
        assert back == c and back.metadata == c.metadata


def test_circuit_text_errors(layout):
    text = hio.circuit_to_text(build_cycle_circuit(layout, "z", 1))
    with pytest.raises(hio.FormatError, match="line 1"):
        hio.circuit_from_text("nonsense\n")
    broken = text.replace("CX(", "CZ(", 1)
    with pytest.raises(hio.FormatError, match="line"):
        hio.circuit_from_text(broken)


def test_layout_and_noise_json(layout, tmp_path):
    d = hio.layout_to_dict(layout)
    assert d["format_version"] == 1
    assert hio.layout_from_dict(d) == layout
    m = NoiseModel.biased(0.05, 8, delta=0.01)
    hio.write_json(tmp_path / "n.json", hio.noise_to_dict(m))
    assert hio.noise_from_dict(hio.read_json(tmp_path / "n.json")) == m
    with pytest.raises(hio.FormatError):
        hio.noise_from_dict({"format_version": 99, "model": {}})


@pytest.mark.parametrize("suffix", [".txt", ".bin"])
def test_dataset_round_trip(layout, tmp_path, suffix):
    c = build_cycle_circuit(layout, "full", 2)
    ds = sample_shots(attach_noise(c, NoiseModel.depolarizing(0.03)), 257, 2)
    path = tmp_path / f"shots{suffix}"
    hio.save_dataset(ds, path)
    back = hio.load_dataset(path)
    assert np.array_equal(back.shots, ds.shots)
    assert back.circuit == c


def test_truncated_archive(layout, tmp_path):
    c = build_cycle_circuit(layout, "z", 1)
    ds = sample_shots(attach_noise(c, NoiseModel.depolarizing(0.03)), 10, 2)
    path = tmp_path / "s.bin"
    hio.save_dataset(ds, path)
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(MalformedDatasetError):
        hio.load_dataset(path)


def test_ingest_orders_and_errors(layout, tmp_path):
    c = build_cycle_circuit(layout, "z", 1)
    n = c.num_bits
    row = "1" + "0" * (n - 1)
    f = tmp_path / "raw.txt"
    f.write_text(f"# header\n{row}\n{row}\n")
    assert hio.ingest(f, c, "bit").shots[:, 0].tolist() == [1, 1]
    assert hio.ingest(f, c, "reversed").shots[:, -1].tolist() == [1, 1]
    perm = list(range(n))[::-1]
    assert np.array_equal(hio.ingest(f, c, perm).shots, hio.ingest(f, c, "reversed").shots)
    f.write_text(f"{row} 3\n{'0' * n} 2\n")
    assert hio.ingest(f, c, "bit", counts=True).num_shots == 5
    f.write_text(f"{row}\n{'2' * n}\n")
    with pytest.raises(MalformedDatasetError, match="line 2"):
        hio.ingest(f, c, "bit")
    f.write_text("0101\n")
    with pytest.raises(MalformedDatasetError, match="line 1"):
        hio.ingest(f, c, "bit")
    with pytest.raises(hio.FormatError):
        hio.column_map(c, [0] * n)


def test_device_relabel(layout):
    c = build_cycle_circuit(layout, "z", 1)
    dev = hio.on_device(c)
    assert dev.num_qubits == 27
    assert {b.qubit for b in dev.bits} <= set(hio.DEVICE_MAP_27)
    assert hio.layout_qubit(hio.device_qubit(5)) == 5
    back = hio.circuit_from_text(hio.circuit_to_text(dev))
    assert back == dev
