"""File formats: circuit text, JSON documents and shot archives.

Circuit text::

    # hexsyn circuit 1
    qubits 23
    meta {"family": "gauge", ...}
    bit 0 gauge 6 Z0 -
    RZ(0,0) I(1) ...;
    ...

One line per timestep, instructions separated by spaces, ``;`` closing the
line.  Bit lines give index, kind, qubit, operator and cycle (``-`` for none).

Shot archives start with a one-line JSON header followed either by one 0/1
string per shot (text) or by ``numpy.packbits`` rows (``.bin``).
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .circuit import BitLabel, Circuit, Instruction
from .code import CodeLayout, build_layout
from .dataset import MalformedDatasetError, SyndromeDataset
from .noise import NoiseModel

FORMAT_VERSION = 1
CIRCUIT_MAGIC = "# hexsyn circuit 1"

# Physical index on the 27-qubit device for each layout qubit of distance 3.
DEVICE_MAP_27 = (1, 4, 7, 2, 10, 17, 3, 12, 15, 18, 5, 13, 21, 8, 11, 14, 23, 9, 16, 24, 19, 22, 25)

_TOKEN = re.compile(r"^(RZ|RX|MZ|MX|CX|H|X|I)\((\d+)(?:,(\d+))?\)$")


class FormatError(ValueError):
    pass


def circuit_to_text(circuit: Circuit) -> str:
    lines = [CIRCUIT_MAGIC, f"qubits {circuit.num_qubits}"]
    lines.append("meta " + json.dumps(circuit.metadata, sort_keys=True))
    for b in circuit.bits:
        op = b.operator if b.operator is not None else "-"
        cyc = b.cycle if b.cycle is not None else "-"
        lines.append(f"bit {b.index} {b.kind} {b.qubit} {op} {cyc}")
    for step in circuit.timesteps:
        lines.append(" ".join(ins.token() for ins in step) + ";")
    return "\n".join(lines) + "\n"


def _parse_token(tok: str, lineno: int) -> Instruction:
    m = _TOKEN.match(tok)
    if not m:
        raise FormatError(f"line {lineno}: bad instruction {tok!r}")
    name, a, b = m.group(1), int(m.group(2)), m.group(3)
    b = None if b is None else int(b)
    try:
        if name in ("RZ", "RX"):
            return Instruction("reset", (a,), basis=name[1], value=b or 0)
        if name in ("MZ", "MX"):
            if b is None:
                raise FormatError(f"line {lineno}: measurement without a bit")
            return Instruction("measure", (a,), basis=name[1], bit=b)
        if name == "CX":
            if b is None:
                raise FormatError(f"line {lineno}: CX needs two qubits")
            return Instruction("cx", (a, b))
        if b is not None:
            raise FormatError(f"line {lineno}: {name} takes one qubit")
        return Instruction({"H": "h", "X": "x", "I": "idle"}[name], (a,))
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(f"line {lineno}: {exc}") from None


def circuit_from_text(text: str) -> Circuit:
    lines = text.splitlines()
    if not lines or lines[0].strip() != CIRCUIT_MAGIC:
        raise FormatError("line 1: missing circuit header")
    num_qubits = None
    meta: dict = {}
    bits: list[BitLabel] = []
    steps = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("qubits "):
            num_qubits = int(line.split()[1])
        elif line.startswith("meta "):
            try:
                meta = json.loads(line[5:])
            except json.JSONDecodeError as exc:
                raise FormatError(f"line {lineno}: bad metadata ({exc.msg})") from None
        elif line.startswith("bit "):
            parts = line.split()
            if len(parts) != 6:
                raise FormatError(f"line {lineno}: bit lines have five fields")
            _, idx, kind, q, op, cyc = parts
            bits.append(
                BitLabel(int(idx), kind, int(q), None if op == "-" else op, None if cyc == "-" else int(cyc))
            )
        else:
            if not line.endswith(";"):
                raise FormatError(f"line {lineno}: timestep must end with ';'")
            steps.append(tuple(_parse_token(t, lineno) for t in line[:-1].split()))
    if num_qubits is None:
        raise FormatError("missing 'qubits' line")
    try:
        return Circuit(num_qubits, tuple(steps), tuple(bits), meta)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def layout_to_dict(layout: CodeLayout) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "distance": layout.distance,
        "num_qubits": layout.num_qubits,
        "roles": list(layout.roles),
        "coords": [list(c) for c in layout.coords],
        "edges": [list(e) for e in layout.edges],
        "data_qubits": list(layout.data_qubits),
        "gauges": [
            {
                "name": g.name,
                "kind": g.kind,
                "data": list(g.data_support),
                "measure": g.measure_qubit,
                "flags": list(g.flag_qubits),
            }
            for g in layout.gauges
        ],
        "stabilizers": [
            {
                "name": s.name,
                "kind": s.kind,
                "support": [[q, p] for q, p in s.pauli.support],
                "factors": list(s.factors),
            }
            for s in layout.stabilizers
        ],
        "logical_x": str(layout.logical_x),
        "logical_z": str(layout.logical_z),
    }


def layout_from_dict(data: dict) -> CodeLayout:
    """Rebuild the layout and check it matches the stored description."""
    _check_version(data)
    layout = build_layout(int(data["distance"]))
    if layout_to_dict(layout) != data:
        raise FormatError("stored layout differs from the one this version builds")
    return layout


def _check_version(data: dict):
    v = data.get("format_version")
    if v != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {v!r}")


def noise_to_dict(model: NoiseModel) -> dict:
    return {"format_version": FORMAT_VERSION, "model": model.to_dict()}


def noise_from_dict(data: dict) -> NoiseModel:
    _check_version(data)
    return NoiseModel.from_dict(data["model"])


def write_json(path, data: dict):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {exc.lineno}: {exc.msg}") from None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return str(obj)


def save_dataset(dataset: SyndromeDataset, path):
    """Write a shot archive; ``.bin`` paths get a packed binary body."""
    path = Path(path)
    binary = path.suffix == ".bin"
    header = {
        "format_version": FORMAT_VERSION,
        "encoding": "packbits" if binary else "text",
        "num_shots": dataset.num_shots,
        "num_bits": dataset.circuit.num_bits,
        "source": dataset.source,
        "info": _jsonable(dataset.info),
        "circuit": circuit_to_text(dataset.circuit),
    }
    head = (json.dumps(header, sort_keys=True) + "\n").encode()
    if binary:
        body = np.packbits(dataset.shots, axis=1).tobytes()
    else:
        body = "".join("".join(map(str, row)) + "\n" for row in dataset.shots.tolist()).encode()
    path.write_bytes(head + body)


def load_dataset(path) -> SyndromeDataset:
    raw = Path(path).read_bytes()
    cut = raw.find(b"\n")
    if cut < 0:
        raise MalformedDatasetError(f"{path}: line 1: missing header")
    try:
        header = json.loads(raw[:cut])
    except (json.JSONDecodeError, UnicodeDecodeError):
        raise MalformedDatasetError(f"{path}: line 1: header is not JSON") from None
    _check_version(header)
    circuit = circuit_from_text(header["circuit"])
    n, nbits = int(header["num_shots"]), int(header["num_bits"])
    if nbits != circuit.num_bits:
        raise MalformedDatasetError(f"{path}: header bit count disagrees with the circuit")
    body = raw[cut + 1 :]
    if header["encoding"] == "packbits":
        width = (nbits + 7) // 8
        if len(body) != n * width:
            raise MalformedDatasetError(f"{path}: expected {n * width} payload bytes, found {len(body)}")
        packed = np.frombuffer(body, dtype=np.uint8).reshape(n, width)
        shots = np.unpackbits(packed, axis=1, count=nbits)
    else:
        shots = _parse_bitstrings(body.decode().splitlines(), nbits, str(path), first_line=2)
        if shots.shape[0] != n:
            raise MalformedDatasetError(f"{path}: header promises {n} shots, found {shots.shape[0]}")
    return SyndromeDataset(circuit, shots, header.get("source", "simulated"), header.get("info", {}))


def _parse_bitstrings(lines, nbits: int, name: str, first_line: int = 1) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(lines, start=first_line):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        s = s.replace(" ", "")
        if len(s) != nbits:
            raise MalformedDatasetError(f"{name}: line {lineno}: expected {nbits} bits, found {len(s)}")
        if set(s) - {"0", "1"}:
            raise MalformedDatasetError(f"{name}: line {lineno}: non-binary character")
        rows.append(s)
    if not rows:
        return np.zeros((0, nbits), dtype=np.uint8)
    return (np.frombuffer("".join(rows).encode(), dtype=np.uint8) - ord("0")).reshape(len(rows), nbits)


def column_map(circuit: Circuit, order) -> list[int]:
    """Raw-string position of every circuit bit.

    ``order`` is ``"bit"`` (first character is bit 0), ``"reversed"`` (last
    character is bit 0) or an explicit list of positions.
    """
    n = circuit.num_bits
    if order == "bit":
        return list(range(n))
    if order == "reversed":
        return list(range(n - 1, -1, -1))
    cols = [int(c) for c in order]
    if sorted(cols) != list(range(n)):
        raise FormatError(f"column map must be a permutation of 0..{n - 1}")
    return cols


def read_column_map(path) -> list[int]:
    data = read_json(path)
    _check_version(data)
    return list(data["columns"])


def ingest(path, circuit: Circuit, order, counts: bool = False) -> SyndromeDataset:
    """Read externally recorded shots for ``circuit``.

    There is no default bit ordering: the caller states how raw characters
    map to circuit bits.

    Args:
        path: text file, one bitstring per shot.  With ``counts=True`` each
            line is ``bitstring count`` instead.
        circuit: circuit whose bit labels the columns follow.
        order: see :func:`column_map`.
    """
    cols = column_map(circuit, order)
    text = Path(path).read_text()
    nb = circuit.num_bits
    if not counts:
        raw = _parse_bitstrings(text.splitlines(), nb, str(path))
    else:
        blocks = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) != 2 or not parts[1].isdigit():
                raise MalformedDatasetError(f"{path}: line {lineno}: expected 'bitstring count'")
            row = _parse_bitstrings([parts[0]], nb, str(path), lineno)
            blocks.append(np.repeat(row, int(parts[1]), axis=0))
        raw = np.concatenate(blocks) if blocks else np.zeros((0, nb), np.uint8)
    if raw.shape[0] == 0:
        raise MalformedDatasetError(f"{path}: no shots found")
    shots = raw[:, cols]
    info = {"file": str(path), "order": order if isinstance(order, str) else "explicit"}
    return SyndromeDataset(circuit, shots, "ingested", info)


def device_qubit(q: int) -> int:
    return DEVICE_MAP_27[q]


def layout_qubit(device: int) -> int:
    try:
        return DEVICE_MAP_27.index(device)
    except ValueError:
        raise KeyError(f"device qubit {device} is not part of the layout") from None


def on_device(circuit: Circuit, mapping=DEVICE_MAP_27, num_device_qubits: int = 27) -> Circuit:
    """Relabel layout qubits as device qubits, idling the unused ones."""
    mapping = tuple(mapping)
    if len(mapping) < circuit.num_qubits or len(set(mapping)) != len(mapping):
        raise FormatError("device map must assign a distinct device qubit to every layout qubit")
    if max(mapping) >= num_device_qubits:
        raise FormatError("device map points outside the device")
    steps = []
    for step in circuit.timesteps:
        out = [
            Instruction(ins.kind, tuple(mapping[q] for q in ins.qubits), ins.basis, ins.value, ins.bit)
            for ins in step
        ]
        used = set(mapping[: circuit.num_qubits])
        out += [Instruction("idle", (q,)) for q in range(num_device_qubits) if q not in used]
        steps.append(tuple(sorted(out, key=lambda ins: ins.qubits[0])))
    bits = tuple(BitLabel(b.index, b.kind, mapping[b.qubit], b.operator, b.cycle) for b in circuit.bits)
    meta = dict(circuit.metadata, device_map=list(mapping[: circuit.num_qubits]))
    return Circuit(num_device_qubits, tuple(steps), bits, meta)
