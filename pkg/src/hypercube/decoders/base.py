from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_N_TH = {3: 100_000, 4: 100_000}
DEFAULT_M_TH = {2: 6, 3: 12}


@dataclass(frozen=True)
class DecoderConfig:
    """Settings shared by the three decoders.

    ``n_th`` caps the candidate product N1*...*N5 when building candidates of
    a block at the given level; ``m_th`` caps the candidate sum M1+...+M6 used
    when scoring a block of the given level.  Levels missing from a map are
    uncapped.
    """

    mode: str = "correct"
    detect_level: int = 1
    n_th: dict = field(default_factory=lambda: dict(DEFAULT_N_TH))
    m_th: dict = field(default_factory=lambda: dict(DEFAULT_M_TH))
    p_e: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("correct", "detect"):
            raise ValueError(f"mode must be 'correct' or 'detect', got {self.mode!r}")
        if self.detect_level < 1:
            raise ValueError("detect_level must be >= 1")
        for name in ("n_th", "m_th"):
            for lvl, cap in getattr(self, name).items():
                if cap < 1:
                    raise ValueError(f"{name}[{lvl}] must be positive")

    def with_(self, **changes) -> "DecoderConfig":
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return DecoderConfig(**values)


@dataclass
class DecodeResult:
    """Decoder output for one shot; ``logical`` is None when detected."""

    logical: np.ndarray | None
    detected: bool = False
    distance: int | None = None

    def to_text(self) -> str:
        if self.detected:
            return "F"
        return "".join(map(str, self.logical.astype(int)))


def check_outcomes(outcomes, level: int) -> np.ndarray:
    arr = np.asarray(outcomes, dtype=np.uint8)
    if arr.shape[-1] != 6**level:
        raise ValueError(f"expected {6**level} outcome bits for level {level}, got {arr.shape[-1]}")
    if arr.size and arr.max() > 1:
        raise ValueError("outcomes must be 0/1")
    return arr


def parse_bits(text: str) -> np.ndarray:
    text = text.strip()
    if not text or set(text) - {"0", "1"}:
        raise ValueError(f"not a bit string: {text!r}")
    return np.frombuffer(text.encode(), dtype=np.uint8) - ord("0")
