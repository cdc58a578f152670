"""Heavy-hexagon subsystem code layouts.

Qubits live on a heavy-hexagon lattice: data qubits on a ``d x d`` grid,
flag qubits on the vertical edges between data rows (plus two per boundary
X gauge), and one measure qubit per X gauge.  Qubit ids are assigned
row-major over lattice rows, top to bottom and left to right.

Data qubit ``k`` (0-based, row-major over the data grid) is the qubit at
``layout.data_qubits[k]``; the helpers ``data_index``/``data_qubit`` convert
between the two numberings.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations

QubitId = int

DATA = "data"
MEASURE = "measure"
FLAG = "flag"


class InvalidDistanceError(ValueError):
    """Raised for even distances or distances below 3."""


@dataclass(frozen=True)
class PauliOperator:
    """A signed Pauli string with sparse support.

    ``support`` is a sorted tuple of ``(qubit, letter)`` pairs with letters in
    ``"XYZ"``.
    """

    support: tuple[tuple[QubitId, str], ...]
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        seen = set()
        for q, letter in self.support:
            if letter not in "XYZ" or len(letter) != 1:
                raise ValueError(f"bad Pauli letter {letter!r}")
            if q in seen:
                raise ValueError(f"qubit {q} repeated in support")
            seen.add(q)
        object.__setattr__(self, "support", tuple(sorted(self.support)))

    @classmethod
    def uniform(cls, letter: str, qubits, sign: int = 1) -> "PauliOperator":
        return cls(tuple((int(q), letter) for q in qubits), sign)

    @property
    def qubits(self) -> tuple[QubitId, ...]:
        return tuple(q for q, _ in self.support)

    @property
    def weight(self) -> int:
        return len(self.support)

    def as_dict(self) -> dict[QubitId, str]:
        return dict(self.support)

    def commutes_with(self, other: "PauliOperator") -> bool:
        mine = self.as_dict()
        clashes = sum(
            1 for q, letter in other.support if q in mine and mine[q] != letter
        )
        return clashes % 2 == 0

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        # single-qubit products: XY = iZ, YZ = iX, ZX = iY
        cyclic = {("X", "Y"): "Z", ("Y", "Z"): "X", ("Z", "X"): "Y"}
        phase = 0  # power of i
        out = self.as_dict()
        for q, b in other.support:
            a = out.get(q)
            if a is None:
                out[q] = b
            elif a == b:
                del out[q]
            elif (a, b) in cyclic:
                out[q] = cyclic[(a, b)]
                phase += 1
            else:
                out[q] = cyclic[(b, a)]
                phase += 3
        phase %= 4
        if phase % 2:
            raise ValueError("product of these Paulis is not Hermitian")
        sign = self.sign * other.sign * (-1 if phase == 2 else 1)
        return PauliOperator(tuple(out.items()), sign)

    def __str__(self) -> str:
        body = "".join(f"{letter}{q}" for q, letter in self.support) or "I"
        return ("-" if self.sign < 0 else "+") + body


@dataclass(frozen=True)
class GaugeOp:
    """A directly measured gauge operator.

    For X gauges ``flag_qubits`` holds the (left, right) flags and
    ``flag_links`` the (upper, lower) data qubit each flag touches, with
    ``None`` where a boundary flag has no partner.  Z gauges are read out
    through the edge qubit between their two data qubits, ordered
    (upper, lower) in ``data_support``.
    """

    name: str
    kind: str
    data_support: tuple[QubitId, ...]
    measure_qubit: QubitId
    flag_qubits: tuple[QubitId, ...] = ()
    flag_links: tuple[tuple[QubitId | None, QubitId | None], ...] = ()
    sign: int = 1

    @property
    def pauli(self) -> PauliOperator:
        return PauliOperator.uniform(self.kind, self.data_support, self.sign)

    @property
    def weight(self) -> int:
        return len(self.data_support)


@dataclass(frozen=True)
class StabilizerOp:
    name: str
    kind: str  # "bacon-shor-X" or "surface-code-Z"
    pauli: PauliOperator
    factors: tuple[str, ...]

    @property
    def pauli_type(self) -> str:
        return self.kind[-1]


@dataclass(frozen=True)
class CodeLayout:
    distance: int
    roles: tuple[str, ...]
    coords: tuple[tuple[int, int], ...]
    edges: tuple[tuple[QubitId, QubitId], ...]
    data_qubits: tuple[QubitId, ...]
    gauges: tuple[GaugeOp, ...]
    stabilizers: tuple[StabilizerOp, ...]
    logical_x: PauliOperator
    logical_z: PauliOperator
    _by_name: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        index = {g.name: g for g in self.gauges}
        index.update({s.name: s for s in self.stabilizers})
        object.__setattr__(self, "_by_name", index)

    @property
    def num_qubits(self) -> int:
        return len(self.roles)

    def qubits_with_role(self, role: str) -> tuple[QubitId, ...]:
        return tuple(q for q, r in enumerate(self.roles) if r == role)

    def neighbors(self, q: QubitId) -> tuple[QubitId, ...]:
        out = [b for a, b in self.edges if a == q] + [a for a, b in self.edges if b == q]
        return tuple(sorted(out))

    def operator(self, name: str) -> GaugeOp | StabilizerOp:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"no gauge or stabilizer named {name!r}") from None

    def gauges_of_kind(self, kind: str) -> tuple[GaugeOp, ...]:
        return tuple(g for g in self.gauges if g.kind == kind)

    def stabilizers_of_type(self, pauli_type: str) -> tuple[StabilizerOp, ...]:
        return tuple(s for s in self.stabilizers if s.pauli_type == pauli_type)

    def data_index(self, q: QubitId) -> int:
        return self.data_qubits.index(q)

    def data_qubit(self, k: int) -> QubitId:
        return self.data_qubits[k]

    def support(self, name: str) -> tuple[QubitId, ...]:
        op = self.operator(name)
        return op.data_support if isinstance(op, GaugeOp) else op.pauli.qubits


def expected_counts(distance: int) -> dict[str, int]:
    """Closed-form qubit counts for a distance-``d`` code."""
    d = distance
    return {
        DATA: d * d,
        MEASURE: (d + 1) * (d - 1) // 2,
        FLAG: d * (d + 1) - 2,
    }


def build_layout(distance: int) -> CodeLayout:
    """Construct the distance-``distance`` heavy-hexagon code.

    X gauges are weight four in the bulk (two columns by two rows) and
    weight two on the top and bottom boundaries; Z gauges are vertical
    weight-two pairs.  Bacon-Shor X stabilizers cover two adjacent data
    columns, surface-code Z stabilizers follow a checkerboard between
    adjacent data rows.
    """
    d = distance
    if not isinstance(d, int) or d < 3 or d % 2 == 0:
        raise InvalidDistanceError(f"distance must be an odd integer >= 3, got {d!r}")

    sites: dict[tuple[int, int], str] = {}

    def data_at(r, c):
        return (4 * c, 2 * r + 1)

    def vflag_at(r, c):
        return (4 * c, 2 * r + 2)

    for r in range(d):
        for c in range(d):
            sites[data_at(r, c)] = DATA
    for r in range(d - 1):
        for c in range(d):
            sites[vflag_at(r, c)] = FLAG

    # X gauge descriptions in lattice coordinates:
    # (col pair, measure site, [(flag site, upper data site, lower data site)] * 2)
    x_specs = []
    for c in range(d - 1):
        if c % 2 == 0:
            top = (4 * c + 2, 0)
            flags = [
                ((4 * c, 0), None, data_at(0, c)),
                ((4 * c + 4, 0), None, data_at(0, c + 1)),
            ]
            x_specs.append((c, -1, top, flags))
            rows = range(1, d - 1, 2)
        else:
            rows = range(0, d - 1, 2)
        for r in rows:
            flags = [
                (vflag_at(r, c), data_at(r, c), data_at(r + 1, c)),
                (vflag_at(r, c + 1), data_at(r, c + 1), data_at(r + 1, c + 1)),
            ]
            x_specs.append((c, r, (4 * c + 2, 2 * r + 2), flags))
        if c % 2 == 1:
            bottom = (4 * c + 2, 2 * d)
            flags = [
                ((4 * c, 2 * d), data_at(d - 1, c), None),
                ((4 * c + 4, 2 * d), data_at(d - 1, c + 1), None),
            ]
            x_specs.append((c, d - 1, bottom, flags))

    for _, _, msite, flags in x_specs:
        sites[msite] = MEASURE
        for fsite, _, _ in flags:
            sites.setdefault(fsite, FLAG)

    order = sorted(sites, key=lambda xy: (xy[1], xy[0]))
    qid = {site: i for i, site in enumerate(order)}
    roles = tuple(sites[s] for s in order)
    coords = tuple(order)
    data_qubits = tuple(qid[data_at(r, c)] for r in range(d) for c in range(d))

    def dq(r, c):
        return qid[data_at(r, c)]

    edges = set()

    def link(a, b):
        edges.add((min(a, b), max(a, b)))

    x_gauges = []
    for c, r, msite, flags in sorted(x_specs, key=lambda s: qid[s[2]]):
        m = qid[msite]
        fqs, links, support = [], [], []
        for fsite, up, lo in flags:
            f = qid[fsite]
            fqs.append(f)
            link(m, f)
            pair = tuple(None if s is None else qid[s] for s in (up, lo))
            links.append(pair)
            for q in pair:
                if q is not None:
                    link(f, q)
                    support.append(q)
        x_gauges.append(
            dict(
                kind="X",
                data_support=tuple(sorted(support)),
                measure_qubit=m,
                flag_qubits=tuple(fqs),
                flag_links=tuple(links),
                cols=c,
                row=r,
            )
        )

    z_gauges = []
    for r in range(d - 1):
        for c in range(d):
            a = qid[vflag_at(r, c)]
            up, lo = dq(r, c), dq(r + 1, c)
            link(a, up)
            link(a, lo)
            z_gauges.append(
                dict(kind="Z", data_support=(up, lo), measure_qubit=a, row=r, col=c)
            )
    z_gauges.sort(key=lambda g: g["measure_qubit"])

    gauges = []
    for i, g in enumerate(x_gauges):
        gauges.append(
            GaugeOp(
                name=f"X{i}",
                kind="X",
                data_support=g["data_support"],
                measure_qubit=g["measure_qubit"],
                flag_qubits=g["flag_qubits"],
                flag_links=g["flag_links"],
            )
        )
    for i, g in enumerate(z_gauges):
        gauges.append(
            GaugeOp(
                name=f"Z{i}",
                kind="Z",
                data_support=g["data_support"],
                measure_qubit=g["measure_qubit"],
            )
        )

    x_by_cols: dict[int, list[str]] = {}
    for g, spec in zip(gauges, x_gauges):
        x_by_cols.setdefault(spec["cols"], []).append((spec["row"], g.name))
    z_by_site = {(g["row"], g["col"]): f"Z{i}" for i, g in enumerate(z_gauges)}

    stabilizers = []
    for c in range(d - 1):
        names = tuple(name for _, name in sorted(x_by_cols[c]))
        support = [dq(r, cc) for r in range(d) for cc in (c, c + 1)]
        stabilizers.append(
            StabilizerOp(
                name=f"SX{c}",
                kind="bacon-shor-X",
                pauli=PauliOperator.uniform("X", support),
                factors=names,
            )
        )
    k = 0
    for r in range(d - 1):
        if r % 2 == 0:
            groups = [(c, c + 1) for c in range(0, d - 2, 2)] + [(d - 1,)]
        else:
            groups = [(0,)] + [(c, c + 1) for c in range(1, d - 1, 2)]
        for cols in groups:
            support = [dq(rr, c) for rr in (r, r + 1) for c in cols]
            stabilizers.append(
                StabilizerOp(
                    name=f"SZ{k}",
                    kind="surface-code-Z",
                    pauli=PauliOperator.uniform("Z", support),
                    factors=tuple(z_by_site[(r, c)] for c in cols),
                )
            )
            k += 1

    return CodeLayout(
        distance=d,
        roles=roles,
        coords=coords,
        edges=tuple(sorted(edges)),
        data_qubits=data_qubits,
        gauges=tuple(gauges),
        stabilizers=tuple(stabilizers),
        logical_x=PauliOperator.uniform("X", [dq(r, 0) for r in range(d)]),
        logical_z=PauliOperator.uniform("Z", [dq(0, c) for c in range(d)]),
    )


def stabilizer_decomposition(layout: CodeLayout) -> list[StabilizerOp]:
    """Stabilizers with their gauge factors; factor supports are disjoint."""
    out = []
    for stab in layout.stabilizers:
        seen: set[QubitId] = set()
        for name in stab.factors:
            support = set(layout.operator(name).data_support)
            if seen & support:
                raise ValueError(f"{stab.name}: overlapping gauge factors")
            seen |= support
        out.append(stab)
    return out


def with_gauge(layout: CodeLayout, gauge: GaugeOp) -> CodeLayout:
    """Copy of ``layout`` with the same-named gauge replaced."""
    gauges = tuple(gauge if g.name == gauge.name else g for g in layout.gauges)
    return replace(layout, gauges=gauges)


@dataclass
class LayoutReport:
    checks: dict[str, bool]
    details: dict[str, str]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def verify_layout(layout: CodeLayout) -> LayoutReport:
    """Check counts, connectivity and operator algebra; never raises."""
    checks: dict[str, bool] = {}
    details: dict[str, str] = {}

    def record(name, passed, detail=""):
        checks[name] = bool(passed)
        if not passed and detail:
            details[name] = detail

    try:
        want = expected_counts(layout.distance)
    except Exception as exc:  # noqa: BLE001 - report, don't raise
        record("counts", False, str(exc))
        want = {}
    for role, n in want.items():
        got = len(layout.qubits_with_role(role))
        record(f"count_{role}", got == n, f"{got} != {n}")

    degree = [0] * layout.num_qubits
    for a, b in layout.edges:
        degree[a] += 1
        degree[b] += 1
    worst = max(degree, default=0)
    record("max_degree", worst <= 3, f"max degree {worst}")

    stabs = [s.pauli for s in layout.stabilizers]
    bad = [
        (a.name, b.name)
        for a, b in combinations(layout.stabilizers, 2)
        if not a.pauli.commutes_with(b.pauli)
    ]
    record("stabilizers_commute", not bad, f"{bad[:3]}")

    bad = [
        (s.name, g.name)
        for s in layout.stabilizers
        for g in layout.gauges
        if not s.pauli.commutes_with(g.pauli)
    ]
    record("gauges_commute_with_stabilizers", not bad, f"{bad[:3]}")

    bad = [
        (a.name, b.name)
        for a, b in combinations(layout.gauges, 2)
        if a.kind == b.kind and not a.pauli.commutes_with(b.pauli)
    ]
    record("same_type_gauges_commute", not bad, f"{bad[:3]}")

    bad = []
    for s in layout.stabilizers:
        try:
            product = PauliOperator(())
            for name in s.factors:
                product = product * layout.operator(name).pauli
            if product != s.pauli:
                bad.append(s.name)
        except (KeyError, ValueError):
            bad.append(s.name)
    record("stabilizer_decomposition", not bad, f"{bad}")

    lx, lz = layout.logical_x, layout.logical_z
    record("logicals_anticommute", not lx.commutes_with(lz))
    record(
        "logicals_commute_with_stabilizers",
        all(lx.commutes_with(s) and lz.commutes_with(s) for s in stabs),
    )
    return LayoutReport(checks, details)
