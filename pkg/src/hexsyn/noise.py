"""Noise channels, parameter conventions and per-instruction noise binding.

Two conventions describe depolarizing noise.  The *error rate* ``p`` is the
probability of any nontrivial Pauli; the *depolarizing parameter* ``p'`` is
the probability of replacing the state by the maximally mixed one, so each
of the ``4**n`` Paulis (identity included) gets ``p'/4**n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .circuit import Circuit, Instruction

ERROR_RATE = "error-rate"
DEPOL_PARAMETER = "depol-parameter"
CONVENTIONS = (ERROR_RATE, DEPOL_PARAMETER)

NOISE_CLASSES = ("reset", "single", "two", "measure")


class InvalidParameterError(ValueError):
    pass


class IncompleteModelError(ValueError):
    pass


def pauli_labels(n: int) -> tuple[str, ...]:
    """Nontrivial n-qubit Pauli labels, first letter acting on the first qubit."""
    return tuple("".join(t) for t in product("IXYZ", repeat=n))[1:]


def _check_prob(name, value, upper=1.0):
    if not (0.0 <= float(value) <= upper):
        raise InvalidParameterError(f"{name} must lie in [0, {upper}], got {value}")


@dataclass(frozen=True)
class ChannelSpec:
    """A single noise channel.

    Pauli channels carry ``paulis``/``probs`` (nontrivial terms only),
    amplitude damping carries ``kraus`` and measurement confusion carries
    ``confusion`` with ``confusion[j][i] = P(read i | true j)``.
    """

    variant: str
    n: int = 1
    params: tuple[tuple[str, float], ...] = ()
    paulis: tuple[str, ...] = ()
    probs: tuple[float, ...] = ()
    kraus: tuple = field(default=(), compare=False)
    confusion: tuple[tuple[float, float], tuple[float, float]] | None = None

    @property
    def is_pauli(self) -> bool:
        return not self.kraus and self.confusion is None

    @property
    def total(self) -> float:
        return float(sum(self.probs))

    def table(self) -> dict[str, float]:
        """Full probability table including the identity."""
        out = {"I" * self.n: 1.0 - self.total}
        out.update(zip(self.paulis, self.probs))
        return out

    def param(self, name, default=None):
        return dict(self.params).get(name, default)


def _pauli_channel(variant, n, params, table: dict[str, float]) -> ChannelSpec:
    labels = pauli_labels(n)
    unknown = set(table) - set(labels)
    if unknown:
        raise InvalidParameterError(f"unknown Pauli labels {sorted(unknown)}")
    probs = tuple(float(table.get(lab, 0.0)) for lab in labels)
    if any(v < 0 for v in probs):
        raise InvalidParameterError("Pauli probabilities must be non-negative")
    if sum(probs) > 1.0 + 1e-12:
        raise InvalidParameterError("Pauli probabilities sum to more than 1")
    keep = [(lab, v) for lab, v in zip(labels, probs) if v > 0]
    return ChannelSpec(
        variant,
        n,
        tuple(params),
        tuple(lab for lab, _ in keep),
        tuple(v for _, v in keep),
    )


def biased_weights(n: int, eta: float) -> tuple[float, float]:
    """Relative weights ``(r_H, r_L)`` of Z-only and other nontrivial Paulis."""
    if eta <= 0:
        raise InvalidParameterError(f"bias must be positive, got {eta}")
    k = 2**n - 1
    half = 2 ** (n - 1)
    return eta / (k * (eta + half)), 1.0 / (2 * k * (eta + half))


def confusion_matrix(p: float, delta: float = 0.0) -> np.ndarray:
    """Readout matrix ``M[j, i] = P(i | j)``; ``delta`` penalises ``|1>``."""
    _check_prob("p", p)
    if delta < 0 or p / 2 + delta > 1:
        raise InvalidParameterError(f"delta out of range: {delta}")
    return np.array([[1 - p / 2, p / 2], [p / 2 + delta, 1 - p / 2 - delta]])


def make_channel(variant: str, **params) -> ChannelSpec:
    """Build a channel from its variant name and parameters.

    Examples of variants: ``bit-flip(p)``, ``phase-flip(p)``,
    ``depolarizing(n, value, convention)``, ``pauli-table(n, table)``,
    ``biased(n, p, eta)``, ``amplitude-damping(gamma)`` and
    ``measurement-confusion(p, delta)``.
    """
    if variant in ("bit-flip", "phase-flip"):
        p = params["p"]
        _check_prob("p", p)
        letter = "X" if variant == "bit-flip" else "Z"
        return _pauli_channel(variant, 1, [("p", p)], {letter: p})

    if variant == "depolarizing":
        n = params.get("n", 1)
        value = params["value"]
        convention = params.get("convention", DEPOL_PARAMETER)
        if n not in (1, 2):
            raise InvalidParameterError(f"n must be 1 or 2, got {n}")
        if convention not in CONVENTIONS:
            raise InvalidParameterError(f"unknown convention {convention!r}")
        _check_prob("value", value)
        k = 4**n - 1
        each = value / k if convention == ERROR_RATE else value / 4**n
        return _pauli_channel(
            variant,
            n,
            [("value", value), ("convention", convention)],
            {lab: each for lab in pauli_labels(n)},
        )

    if variant == "pauli-table":
        n = params.get("n", 1)
        if n not in (1, 2):
            raise InvalidParameterError(f"n must be 1 or 2, got {n}")
        return _pauli_channel(variant, n, [], dict(params["table"]))

    if variant == "biased":
        n = params.get("n", 1)
        p, eta = params["p"], params["eta"]
        if n not in (1, 2):
            raise InvalidParameterError(f"n must be 1 or 2, got {n}")
        _check_prob("p", p)
        r_high, r_low = biased_weights(n, eta)
        table = {
            lab: p * (r_high if set(lab) <= {"I", "Z"} else r_low)
            for lab in pauli_labels(n)
        }
        return _pauli_channel(variant, n, [("p", p), ("eta", eta)], table)

    if variant == "amplitude-damping":
        gamma = params["gamma"]
        _check_prob("gamma", gamma)
        k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
        k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
        return ChannelSpec(variant, 1, (("gamma", gamma),), kraus=(k0, k1))

    if variant == "measurement-confusion":
        p, delta = params["p"], params.get("delta", 0.0)
        m = confusion_matrix(p, delta)
        return ChannelSpec(
            variant,
            1,
            (("p", p), ("delta", delta)),
            confusion=tuple(tuple(float(v) for v in row) for row in m),
        )

    raise InvalidParameterError(f"unknown channel variant {variant!r}")


def convert_convention(value: float, n: int, from_convention: str) -> float:
    """Map between the error rate and the depolarizing parameter for ``n`` qubits."""
    if n not in (1, 2):
        raise InvalidParameterError(f"n must be 1 or 2, got {n}")
    ratio = (4**n - 1) / 4**n  # p = ratio * p'
    if from_convention == ERROR_RATE:
        return value / ratio
    if from_convention == DEPOL_PARAMETER:
        return value * ratio
    raise InvalidParameterError(f"unknown convention {from_convention!r}")


def spam_flip(p: float, variant: str, convention: str = DEPOL_PARAMETER, eta=None) -> float:
    """Preparation/readout flip probability implied by a channel parameter."""
    if variant == "biased":
        return p * (1 + 2 * eta) / (2 * (eta + 1))
    if convention == ERROR_RATE:
        return 2 * p / 3
    return p / 2


@dataclass(frozen=True)
class NoiseModel:
    """Channel parameters bound to instruction classes.

    ``variant`` is ``"depolarizing"``, ``"biased"`` or ``"custom"``.  A
    per-qubit table makes the model inhomogeneous; qubits missing from the
    table use ``p``, and a two-qubit gate uses the mean of its qubits.
    ``gamma`` adds amplitude damping after every gate and idle step, and
    ``delta`` skews readout against ``|1>``.  Custom models take explicit
    ``overrides`` per noise class and must cover every class they meet.
    """

    variant: str = "depolarizing"
    p: float = 0.0
    convention: str = DEPOL_PARAMETER
    eta: float | None = None
    per_qubit: tuple[tuple[int, float], ...] | None = None
    gamma: float = 0.0
    delta: float = 0.0
    overrides: tuple[tuple[str, ChannelSpec], ...] = ()

    def __post_init__(self):
        if self.variant not in ("depolarizing", "biased", "custom"):
            raise InvalidParameterError(f"unknown noise variant {self.variant!r}")
        if self.convention not in CONVENTIONS:
            raise InvalidParameterError(f"unknown convention {self.convention!r}")
        _check_prob("p", self.p)
        _check_prob("gamma", self.gamma)
        if self.variant == "biased" and (self.eta is None or self.eta <= 0):
            raise InvalidParameterError("biased noise needs a positive eta")
        if self.per_qubit is not None:
            table = tuple(sorted((int(q), float(v)) for q, v in dict(self.per_qubit).items()))
            for q, v in table:
                _check_prob(f"p[{q}]", v)
            object.__setattr__(self, "per_qubit", table)
        for cls, _ in self.overrides:
            if cls not in NOISE_CLASSES:
                raise InvalidParameterError(f"unknown noise class {cls!r}")
        confusion_matrix(2 * self.spam_rate(), self.delta)

    # constructors

    @classmethod
    def depolarizing(cls, p: float, convention: str = DEPOL_PARAMETER, **kw) -> "NoiseModel":
        return cls("depolarizing", p, convention, **kw)

    @classmethod
    def biased(cls, p: float, eta: float, **kw) -> "NoiseModel":
        return cls("biased", p, ERROR_RATE, eta=eta, **kw)

    @classmethod
    def inhomogeneous(cls, table: dict, convention=DEPOL_PARAMETER, default=0.0, **kw):
        return cls("depolarizing", default, convention, per_qubit=tuple(dict(table).items()), **kw)

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls("depolarizing", 0.0)

    @classmethod
    def custom(cls, **channels: ChannelSpec) -> "NoiseModel":
        return cls("custom", overrides=tuple(sorted(channels.items())))

    # parameter lookup

    def param(self, q: int) -> float:
        if self.per_qubit is None:
            return self.p
        return dict(self.per_qubit).get(q, self.p)

    def with_params(self, **changes) -> "NoiseModel":
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return NoiseModel(**values)

    @property
    def is_pauli(self) -> bool:
        return self.gamma == 0 and self.delta == 0

    def spam_rate(self, q: int | None = None) -> float:
        if self.variant == "custom":
            spec = dict(self.overrides).get("measure")
            if spec is None or spec.confusion is None:
                return 0.0
            return spec.confusion[0][1]
        p = self.p if q is None else self.param(q)
        return spam_flip(p, self.variant, self.convention, self.eta)

    def _gate_channel(self, n: int, value: float) -> ChannelSpec:
        if self.variant == "biased":
            return make_channel("biased", n=n, p=value, eta=self.eta)
        return make_channel("depolarizing", n=n, value=value, convention=self.convention)

    def channels_for(self, ins: Instruction) -> list[tuple[tuple[int, ...], ChannelSpec]]:
        """Channels applied right after ``ins``, each with the qubits it acts on."""
        cls = ins.noise_class
        if self.variant == "custom":
            spec = dict(self.overrides).get(cls)
            if spec is None:
                raise IncompleteModelError(f"noise model has no channel for {cls!r}")
            if cls == "reset" and spec.is_pauli and ins.basis == "X":
                spec = _to_x_basis(spec)
            return [(ins.qubits, spec)]

        q = ins.qubits
        out = []
        if cls == "reset":
            flip = "bit-flip" if ins.basis == "Z" else "phase-flip"
            out.append((q, make_channel(flip, p=self.spam_rate(q[0]))))
        elif cls == "measure":
            out.append(
                (
                    q,
                    make_channel(
                        "measurement-confusion", p=2 * self.spam_rate(q[0]), delta=self.delta
                    ),
                )
            )
        elif cls == "single":
            out.append((q, self._gate_channel(1, self.param(q[0]))))
        else:
            mean = 0.5 * (self.param(q[0]) + self.param(q[1]))
            out.append((q, self._gate_channel(2, mean)))
        if self.gamma > 0 and cls in ("single", "two"):
            damp = make_channel("amplitude-damping", gamma=self.gamma)
            out.extend(((qq,), damp) for qq in q)
        return out

    def to_dict(self) -> dict:
        out = {
            "variant": self.variant,
            "p": self.p,
            "convention": self.convention,
            "eta": self.eta,
            "gamma": self.gamma,
            "delta": self.delta,
        }
        if self.per_qubit is not None:
            out["per_qubit"] = {str(q): v for q, v in self.per_qubit}
        if self.overrides:
            out["overrides"] = {cls: _channel_to_dict(spec) for cls, spec in self.overrides}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseModel":
        per_qubit = data.get("per_qubit")
        overrides = data.get("overrides") or {}
        return cls(
            variant=data.get("variant", "depolarizing"),
            p=float(data.get("p", 0.0)),
            convention=data.get("convention", DEPOL_PARAMETER),
            eta=data.get("eta"),
            per_qubit=None
            if per_qubit is None
            else tuple((int(q), float(v)) for q, v in per_qubit.items()),
            gamma=float(data.get("gamma", 0.0)),
            delta=float(data.get("delta", 0.0)),
            overrides=tuple(
                sorted((c, _channel_from_dict(spec)) for c, spec in overrides.items())
            ),
        )


def _to_x_basis(spec: ChannelSpec) -> ChannelSpec:
    swap = {"X": "Z", "Z": "X", "Y": "Y"}
    table = {swap[lab]: v for lab, v in zip(spec.paulis, spec.probs)}
    return _pauli_channel(spec.variant, 1, spec.params, table)


def _channel_to_dict(spec: ChannelSpec) -> dict:
    if spec.variant == "amplitude-damping":
        return {"variant": spec.variant, "gamma": spec.param("gamma")}
    if spec.confusion is not None:
        return {"variant": spec.variant, "p": spec.param("p"), "delta": spec.param("delta")}
    return {"variant": "pauli-table", "n": spec.n, "table": dict(zip(spec.paulis, spec.probs))}


def _channel_from_dict(data: dict) -> ChannelSpec:
    data = dict(data)
    variant = data.pop("variant")
    if variant == "pauli-table":
        return make_channel("pauli-table", n=data.get("n", 1), table=data["table"])
    return make_channel(variant, **data)


@dataclass(frozen=True)
class FaultLocation:
    lid: int
    timestep: int
    instruction: Instruction
    qubits: tuple[int, ...]
    channel: ChannelSpec


@dataclass(frozen=True)
class NoisyCircuit:
    circuit: Circuit
    model: NoiseModel
    locations: tuple[FaultLocation, ...]

    @property
    def is_pauli(self) -> bool:
        """True when every fault is a Pauli or a symmetric readout flip."""
        for loc in self.locations:
            ch = loc.channel
            if ch.kraus:
                return False
            if ch.confusion is not None and ch.confusion[0][1] != ch.confusion[1][0]:
                return False
        return True


def attach_noise(circuit: Circuit, model: NoiseModel) -> NoisyCircuit:
    """One fault location per channel after every instruction, in circuit order."""
    locations = []
    for t, ins in circuit.instructions():
        for qubits, spec in model.channels_for(ins):
            locations.append(FaultLocation(len(locations), t, ins, qubits, spec))
    return NoisyCircuit(circuit, model, tuple(locations))
