"""Symbol-MAP soft-decision decoding via per-level marginal posteriors."""

from __future__ import annotations

import itertools

import numpy as np

from .base import DecodeResult, check_outcomes

# The 32 even-weight six-bit words, and the 4-bit logical value of each.
_EVEN = np.array([w for w in itertools.product((0, 1), repeat=6) if sum(w) % 2 == 0], dtype=np.uint8)
_VALUE = (
    (_EVEN[:, 0] ^ _EVEN[:, 1])
    | (_EVEN[:, 1] ^ _EVEN[:, 2]) << 1
    | (_EVEN[:, 3] ^ _EVEN[:, 4]) << 2
    | (_EVEN[:, 4] ^ _EVEN[:, 5]) << 3
).astype(np.int64)
# _GROUP[v] lists the two even words carrying logical value v
_GROUP = np.array([np.flatnonzero(_VALUE == v) for v in range(16)])
_VALUE_BITS = np.array([[(v >> j) & 1 for j in range(4)] for v in range(16)], dtype=bool)


def block_marginals(p0: np.ndarray) -> np.ndarray:
    """One [[6,4,2]] step on probabilities of 0 along axis -2 (length 6).

    Returns the four logical marginals ``p(x_j = 0)`` along axis -2.
    """
    q = np.moveaxis(p0, -2, -1)[..., None, :]  # (..., W, 1, 6)
    factors = np.where(_EVEN.astype(bool), 1.0 - q, q)  # (..., W, 32, 6)
    weights = factors.prod(axis=-1)  # (..., W, 32)
    joint = weights[..., _GROUP].sum(axis=-1)  # (..., W, 16)
    joint /= joint.sum(axis=-1, keepdims=True)
    zeros = np.stack([joint[..., ~_VALUE_BITS[:, j]].sum(axis=-1) for j in range(4)], axis=-2)
    return zeros  # (..., 4, W)


def soft_marginals(outcomes, level: int, p_e: float, all_levels: bool = False):
    """Marginal posteriors ``p(x=0)`` for every logical qubit of a batch.

    With ``all_levels`` a list of the per-level arrays is returned, entry
    ``m-1`` having shape ``(shots, 6**(level-m) * 4**m)``.
    """
    if not 0.0 < p_e < 1.0:
        raise ValueError(f"p_e must lie strictly between 0 and 1, got {p_e}")
    outcomes = check_outcomes(outcomes, level)
    if outcomes.ndim == 1:
        outcomes = outcomes[None, :]
    shots = outcomes.shape[0]
    p = np.where(outcomes == 0, 1.0 - p_e, p_e)
    p = p.reshape(shots, 6 ** (level - 1), 6, 1)
    per_level = []
    for m in range(1, level + 1):
        x = block_marginals(p)  # (shots, blocks, 4, W)
        per_level.append(x.reshape(shots, -1))
        if m < level:
            p = x.reshape(shots, 6 ** (level - m - 1), 6, 4**m)
    return per_level if all_levels else per_level[-1]


def soft_decode_batch(outcomes, level: int, p_e: float) -> np.ndarray:
    marg = soft_marginals(outcomes, level, p_e)
    # ties at exactly 0.5 go to 1
    return (marg <= 0.5).astype(np.uint8)


def soft_decode(outcomes, level: int, p_e: float) -> DecodeResult:
    return DecodeResult(soft_decode_batch(np.asarray(outcomes)[None, :], level, p_e)[0])
