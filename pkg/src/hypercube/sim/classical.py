"""Classical side of circuits: predicate evaluation and feed-forward decoding.

Both simulation engines hand measured slot values here as a ``(shots, slots)``
uint8 array, so acceptance rules and corrections are defined in one place.
"""

from __future__ import annotations

import numpy as np

from ..code import build_code
from ..decoders import DecoderConfig, hard_decode_batch, md_decode_batch, soft_decode_batch
from .circuit import AllOf, AllZero, Binding, DecodeCheck, FeedForward, PairCheck


def decode_slots(bits: np.ndarray, level: int, binding: Binding, rng: np.random.Generator,
                 mode: str | None = None):
    """Decode a ``(shots, 6**level)`` outcome array; returns ``(logical, detected)``."""
    mode = mode or binding.mode
    if binding.decoder == "hard":
        return hard_decode_batch(bits, level, mode=mode, rng=rng)
    if binding.decoder == "md":
        cfg = DecoderConfig(mode=mode, detect_level=binding.detect_level if mode == "detect" else 1)
        logical, _, detected, _ = md_decode_batch(bits, level, cfg, rng=rng)
        return logical, detected
    if binding.decoder == "soft":
        if mode == "detect":
            raise ValueError("the soft decoder has no detection mode")
        return soft_decode_batch(bits, level, 0.01), np.zeros(len(bits), dtype=bool)
    raise ValueError(f"unknown decoder {binding.decoder}")


def evaluate(pred, slots: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Boolean acceptance per shot."""
    shots = slots.shape[0]
    if pred is None:
        return np.ones(shots, dtype=bool)
    if isinstance(pred, AllZero):
        return ~slots[:, list(pred.slots)].any(axis=1)
    if isinstance(pred, DecodeCheck):
        logical, detected = decode_slots(slots[:, list(pred.slots)], pred.level, pred.binding, rng, "detect")
        ok = ~detected
        if pred.require_zero:
            ok &= ~logical.any(axis=1)
        return ok
    if isinstance(pred, PairCheck):
        la, da = decode_slots(slots[:, list(pred.slots_a)], pred.level, pred.binding, rng, "detect")
        lb, db = decode_slots(slots[:, list(pred.slots_b)], pred.level, pred.binding, rng, "detect")
        return ~da & ~db & (la == lb).all(axis=1)
    if isinstance(pred, AllOf):
        ok = np.ones(shots, dtype=bool)
        for part in pred.parts:
            ok &= evaluate(part, slots, rng)
        return ok
    raise ValueError(f"unknown predicate {pred!r}")


def feedforward_bits(ff: FeedForward, slots: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Logical correction bits ``(shots, 4**level)`` indexed by target logical qubit."""
    decoded = [decode_slots(slots[:, list(src)], ff.level, ff.binding, rng, "correct")[0] for src in ff.sources]
    bits = decoded[0] if ff.combine == "single" else decoded[0] & decoded[1]
    if ff.label_map is not None:
        out = np.zeros_like(bits)
        out[:, list(ff.label_map)] = bits
        bits = out
    return bits


def physical_correction(ff: FeedForward, bits: np.ndarray) -> np.ndarray:
    """Physical Pauli support ``(shots, 6**level)`` realising logical ``bits``."""
    table = build_code(ff.level)
    ops = table.lx if ff.pauli == "X" else table.lz
    return (bits.astype(np.int64) @ ops.astype(np.int64) & 1).astype(np.uint8)
