"""Circuit-level and bit-flip noise models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# The 15 nontrivial two-qubit Paulis as (x_a, z_a, x_b, z_b), indexed 1..15
# by the 4-bit integer x_a + 2 z_a + 4 x_b + 8 z_b.
TWO_QUBIT_PAULIS = np.array(
    [[(i >> 0) & 1, (i >> 1) & 1, (i >> 2) & 1, (i >> 3) & 1] for i in range(1, 16)], dtype=np.uint8
)
_LETTER = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}


def pauli_name(index: int) -> str:
    """Two-letter name of two-qubit Pauli ``index`` in 1..15, e.g. ``"XZ"``."""
    xa, za, xb, zb = TWO_QUBIT_PAULIS[index - 1]
    return _LETTER[(xa, za)] + _LETTER[(xb, zb)]


@dataclass(frozen=True)
class NoiseModel:
    """Error injection rules applied at explicit ``NOISE`` sites.

    ``prep`` and ``meas`` sites flip the bit with probability ``p_circ``.
    ``cnot`` sites apply one of the 15 nontrivial two-qubit Paulis with total
    probability ``p_circ``.  ``flip`` sites apply X with probability ``p_flip``.
    With ``swap`` set, SWAP gates are followed by the same two-qubit channel.
    """

    p_circ: float = 0.0
    prep: bool = True
    meas: bool = True
    cnot: bool = True
    swap: bool = False
    p_flip: float = 0.0

    def __post_init__(self):
        for name in ("p_circ", "p_flip"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")

    def rate(self, kind: str) -> float:
        if kind == "flip":
            return self.p_flip
        if kind in ("prep", "meas", "cnot"):
            return self.p_circ if getattr(self, kind) else 0.0
        raise ValueError(f"unknown noise kind {kind}")

    @property
    def silent(self) -> bool:
        return self.p_circ == 0.0 and self.p_flip == 0.0


NOISELESS = NoiseModel()
