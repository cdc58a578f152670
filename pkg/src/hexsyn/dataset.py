"""Shot data container shared by the engines, analysis and file I/O."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit


class MalformedDatasetError(ValueError):
    pass


@dataclass
class SyndromeDataset:
    """Per-shot measurement records aligned with ``circuit.bits``.

    Attributes:
        circuit: the circuit whose classical bits label the columns.
        shots: uint8 array of shape ``(num_shots, circuit.num_bits)``.
        source: ``"simulated"`` or ``"ingested"``.
        info: free-form provenance (seed, engine, noise model, header).
    """

    circuit: Circuit
    shots: np.ndarray
    source: str = "simulated"
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.shots = np.ascontiguousarray(self.shots, dtype=np.uint8)
        if self.shots.ndim != 2 or self.shots.shape[1] != self.circuit.num_bits:
            raise MalformedDatasetError(
                f"shots have shape {self.shots.shape}, circuit has {self.circuit.num_bits} bits"
            )
        if self.shots.size and self.shots.max() > 1:
            raise MalformedDatasetError("shot records must be 0/1")

    @property
    def num_shots(self) -> int:
        return self.shots.shape[0]

    @property
    def metadata(self) -> dict:
        return self.circuit.metadata

    def column(self, bit: int) -> np.ndarray:
        return self.shots[:, bit]

    def counts(self) -> dict[str, int]:
        """Histogram of full bitstrings (bit 0 first)."""
        keys, freq = np.unique(self.shots, axis=0, return_counts=True)
        return {"".join(map(str, k)): int(n) for k, n in zip(keys, freq)}
