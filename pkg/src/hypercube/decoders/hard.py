"""Hard-decision decoding: bit values or an erasure flag passed level to level."""

from __future__ import annotations

import numpy as np

from .base import DecodeResult, check_outcomes


def _extract(v):
    """Logical bits of [[6,4,2]] words along axis -2 (length 6) -> axis of length 4."""
    y = [v[..., j, :] for j in range(6)]
    return np.stack([y[0] ^ y[1], y[1] ^ y[2], y[3] ^ y[4], y[4] ^ y[5]], axis=-2)


def hard_levels(outcomes: np.ndarray, level: int):
    """Run the level-by-level hard decision on a batch.

    Returns ``(values, flags, any_flag)`` where ``values``/``flags`` have shape
    ``(shots, 4**level)`` and ``any_flag`` marks shots in which a flag was
    raised at any level.
    """
    shots = outcomes.shape[0]
    v = outcomes.reshape(shots, 6 ** (level - 1), 6, 1).astype(np.uint8)
    f = np.zeros(v.shape, dtype=bool)
    any_flag = np.zeros(shots, dtype=bool)
    for m in range(1, level + 1):
        nflags = f.sum(axis=2)
        v = np.where(f, 0, v).astype(np.uint8)
        parity = np.bitwise_xor.reduce(v, axis=2)
        # a single located flag is filled in from the parity of the other five
        v = v ^ (f & parity[:, :, None, :]).astype(np.uint8)
        bad = (nflags >= 2) | ((nflags == 0) & (parity == 1))
        x = _extract(v)
        fx = np.broadcast_to(bad[:, :, None, :], x.shape)
        any_flag |= fx.reshape(shots, -1).any(axis=1)
        width = 4**m
        if m < level:
            v = x.reshape(shots, 6 ** (level - m - 1), 6, width)
            f = fx.reshape(shots, 6 ** (level - m - 1), 6, width)
        else:
            v = x.reshape(shots, width)
            f = fx.reshape(shots, width)
    return v, f, any_flag


def hard_decode_batch(outcomes, level: int, mode: str = "correct", rng=None):
    """Decode a ``(shots, 6**level)`` array.

    Returns ``(logical, detected)``.  In correct mode flagged logical bits are
    replaced by uniform random bits drawn from ``rng``; in detect mode a shot is
    detected whenever any flag appeared during decoding.
    """
    outcomes = check_outcomes(outcomes, level)
    if outcomes.ndim == 1:
        outcomes = outcomes[None, :]
    values, flags, any_flag = hard_levels(outcomes, level)
    if mode == "detect":
        return values, any_flag.copy()
    if mode != "correct":
        raise ValueError(f"unknown mode {mode!r}")
    if flags.any():
        rng = np.random.default_rng() if rng is None else rng
        coins = rng.integers(0, 2, size=values.shape, dtype=np.uint8)
        values = np.where(flags, coins, values).astype(np.uint8)
    return values, np.zeros(len(values), dtype=bool)


def hard_decode(outcomes, level: int, mode: str = "correct", rng=None) -> DecodeResult:
    logical, detected = hard_decode_batch(np.asarray(outcomes)[None, :], level, mode, rng)
    if detected[0]:
        return DecodeResult(None, True)
    return DecodeResult(logical[0])
