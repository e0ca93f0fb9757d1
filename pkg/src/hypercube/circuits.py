"""Builders for encoders, detection gadgets, teleportation and the CNOT benchmark.

Register conventions: a level-m register is ``6**m`` consecutive qubit
indices in flat-address order, so transversal gates pair registers index by
index.  Fault-tolerant encoders are :class:`Repeat` blocks whose body resets
every qubit it touches; ``ft_width(level)`` gives the body width, with the
first ``6**level`` body qubits holding the output register and the rest used
as scratch.

Gadget layout (levels 2 and 3 of the zero-state encoder):

1. prepare six data blocks and one check block with the next-lower encoder;
2. transversal H on block 1 and the GHZ network 1->4, 1->2, 4->5, 2->3, 5->6;
3. copy blocks 3 and 6 onto the check block, measure it, and require the
   decoded check values to be all zero without any detection flag;
4. run Z- and X-error detection on every data block.

Step 4 comes last because a single fault in a transversal CNOT leaves one
error in each of two blocks, which detection before the network cannot see.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .code import _from_flat, _to_flat, build_code
from .sim.circuit import AllOf, AllZero, Binding, Circuit, DecodeCheck, FeedForward, PairCheck

MAX_FT_LEVEL = 4
NETWORK = ((0, 3), (0, 1), (3, 4), (1, 2), (4, 5))
HARD_DETECT = Binding("hard", "detect", 1)
MD_CORRECT = Binding("md", "correct", 1)


def md_detect(detect_level: int) -> Binding:
    return Binding("md", "detect", detect_level)


def _blocks(reg, size):
    reg = np.asarray(reg)
    return [reg[i * size:(i + 1) * size] for i in range(6)]


# --- [[6,4,2]] encoders ------------------------------------------------------

ARBITRARY_INPUTS = (1, 2, 4, 5)


def build_zero_encoder_642(arbitrary: bool = False, noisy: bool = False) -> Circuit:
    """Six-qubit GHZ encoder; with ``arbitrary`` the logical inputs sit on
    qubits ``ARBITRARY_INPUTS`` and two extra CNOTs fold them into qubit 3."""
    c = Circuit(6)
    c.reset(range(6), noisy=noisy)
    if arbitrary:
        c.cnot([2], [3], noisy=noisy)
        c.cnot([5], [3], noisy=noisy)
    c.h([0])
    for a, b in NETWORK:
        c.cnot([a], [b], noisy=noisy)
    return c


def _append_ghz(c: Circuit, reg, level: int, noisy: bool):
    """Transversal GHZ network over the six level-(level-1) blocks of ``reg``."""
    blocks = _blocks(reg, 6 ** (level - 1))
    c.h(blocks[0])
    for a, b in NETWORK:
        c.cnot(blocks[a], blocks[b], noisy=noisy)


def build_zero_encoder(level: int, noisy: bool = False) -> Circuit:
    """Recursive (not fault-tolerant) all-zero encoder of the level-L code."""
    n = 6**level
    c = Circuit(n)
    c.reset(range(n), noisy=noisy)
    for m in range(1, level + 1):
        size = 6**m
        for start in range(0, n, size):
            _append_ghz(c, np.arange(start, start + size), m, noisy)
    return c


# --- error-detection gadgets ---------------------------------------------------

def _ed_l1(c: Circuit, kind: str, data, s: int, f: int) -> tuple[int, ...]:
    """Flag-based level-1 detection on one block; returns the two slots."""
    data = list(data)
    c.reset([s, f])
    if kind == "edx":
        # s collects the Z-parity; f in |+> catches Z on s between its CNOTs
        c.h([f])
        c.cnot([data[0]], [s])
        c.cnot([f], [s])
        for q in data[1:5]:
            c.cnot([q], [s])
        c.cnot([f], [s])
        c.cnot([data[5]], [s])
        c.h([f])
    else:
        # s in |+> kicks back the X-parity; f catches X on s between its CNOTs
        c.h([s])
        c.cnot([s], [data[0]])
        c.cnot([s], [f])
        for q in data[1:5]:
            c.cnot([s], [q])
        c.cnot([s], [f])
        c.cnot([s], [data[5]])
        c.h([s])
    return c.measure([s, f])


def _ed_l2(c: Circuit, kind: str, data, anc, scratch) -> tuple[int, ...]:
    """Steane-style level-2 detection; returns the ancilla slots."""
    anc = np.asarray(anc)
    _prepare(c, 2, anc, scratch)
    if kind == "edx":
        c.h(anc)
        c.cnot(data, anc)
    else:
        c.cnot(anc, data)
        c.h(anc)
    return c.measure(anc)


def build_ed_gadget(kind: str, level: int) -> Circuit:
    """Stand-alone detection gadget acting on qubits ``0..6**level-1``.

    Its acceptance test is ``ed_gadget_predicate(level)``.
    """
    if kind not in ("edz", "edx"):
        raise ValueError(f"unknown gadget kind {kind}")
    if level == 1:
        c = Circuit(8)
        _ed_l1(c, kind, range(6), 6, 7)
        return c
    if level == 2:
        extra = ft_width(2) - 36
        c = Circuit(36 + 36 + extra)
        _ed_l2(c, kind, np.arange(36), np.arange(36, 72), range(72, 72 + extra))
        return c
    raise ValueError("detection gadgets exist for levels 1 and 2")


def ed_gadget_predicate(level: int):
    """Acceptance test of ``build_ed_gadget(kind, level)`` over its slots."""
    if level == 1:
        return AllZero((0, 1))
    return DecodeCheck(tuple(range(36)), 2, md_detect(1))


# --- fault-tolerant zero-state encoders -----------------------------------------

def ft_width(level: int) -> int:
    """Body width of the level-L fault-tolerant encoder."""
    if level == 1:
        return 7
    n = 6**level
    if level == 2:
        return n + 6 + 1 + 2
    if level == 3:
        return n + 36 + 36 + (ft_width(2) - 36)
    if level == 4:
        return n + 2 * 216 + 2 * 216 + (ft_width(3) - 216)
    raise ValueError(f"unsupported level {level}")


@dataclass(frozen=True)
class _Body:
    circuit: Circuit
    predicate: object


def ft_zero_body(level: int) -> Circuit:
    """Repeat body of the level-L encoder (shared, do not mutate)."""
    return _ft_body(level).circuit


def ft_zero_predicate(level: int):
    return _ft_body(level).predicate


@lru_cache(maxsize=None)
def _ft_body(level: int) -> _Body:
    if level == 1:
        c = Circuit(7)
        c.reset(range(7))
        c.h([0])
        for a, b in NETWORK:
            c.cnot([a], [b])
        c.cnot([2], [6])
        c.cnot([5], [6])
        slot = c.measure([6])
        body = _Body(c, AllZero(tuple(slot)))
    elif level in (2, 3):
        body = _ft_body_23(level)
    elif level == 4:
        body = _ft_body_4()
    else:
        raise ValueError(f"fault-tolerant encoders exist for levels 1..{MAX_FT_LEVEL}")
    return body


def _prepare(c: Circuit, level: int, register, scratch, max_attempts: int = 1000):
    c.repeat(ft_zero_body(level), list(register) + list(scratch), ft_zero_predicate(level),
             max_attempts, label=f"ft{level}")


def _ft_body_23(level: int) -> _Body:
    n = 6**level
    sub = 6 ** (level - 1)
    width = ft_width(level)
    c = Circuit(width)
    data = np.arange(n)
    check = np.arange(n, n + sub)
    if level == 2:
        scratch = [n + sub]
        s, f = n + sub + 1, n + sub + 2
    else:
        ed_anc = np.arange(n + sub, n + 2 * sub)
        scratch = list(range(n + 2 * sub, width))
    blocks = _blocks(data, sub)
    for blk in blocks + [check]:
        _prepare(c, level - 1, blk, scratch)
    _append_ghz(c, data, level, noisy=True)
    c.cnot(blocks[2], check)
    c.cnot(blocks[5], check)
    check_slots = c.measure(check)
    if level == 2:
        parts = [DecodeCheck(tuple(check_slots), 1, HARD_DETECT, require_zero=True)]
        ed_slots = []
        for blk in blocks:
            ed_slots += _ed_l1(c, "edz", blk, s, f)
            ed_slots += _ed_l1(c, "edx", blk, s, f)
        parts.append(AllZero(tuple(ed_slots)))
    else:
        parts = [DecodeCheck(tuple(check_slots), 2, HARD_DETECT, require_zero=True)]
        for blk in blocks:
            for kind in ("edz", "edx"):
                parts.append(DecodeCheck(_ed_l2(c, kind, blk, ed_anc, scratch), 2, md_detect(1)))
    return _Body(c, AllOf(tuple(parts)))


def _teleport(c: Circuit, data, a1, a2, level: int, binding: Binding, scratch, max_attempts: int = 1000):
    """Teleport ``data`` through a Bell pair on (a1, a2) and swap it back.

    Returns the (data, a1) measurement slots.  The swap is noiseless.
    """
    _prepare(c, level, a1, scratch, max_attempts)
    _prepare(c, level, a2, scratch, max_attempts)
    c.h(a1)
    c.cnot(a1, a2)
    c.cnot(data, a1)
    c.h(data)
    d_slots = c.measure(data)
    a_slots = c.measure(a1)
    perm = tuple(int(v) for v in build_code(level).hadamard_label_map())
    c.ops.append(FeedForward((a_slots,), level, binding, "X", (tuple(int(q) for q in a2),)))
    c.ops.append(FeedForward((d_slots,), level, binding, "Z", (tuple(int(q) for q in a2),), perm))
    c.swap(data, a2)
    return d_slots, a_slots


def _ft_body_4() -> _Body:
    n, sub = 6**4, 216
    width = ft_width(4)
    c = Circuit(width)
    blocks = _blocks(np.arange(n), sub)
    a = np.arange(n, n + sub)
    b = np.arange(n + sub, n + 2 * sub)
    t1 = np.arange(n + 2 * sub, n + 3 * sub)
    t2 = np.arange(n + 3 * sub, n + 4 * sub)
    scratch = list(range(n + 4 * sub, width))
    for blk in blocks + [a, b]:
        _prepare(c, 3, blk, scratch)
    c.h(blocks[0])
    c.h(blocks[3])
    for src, dst in ((0, 1), (0, 2), (3, 4), (3, 5)):
        c.cnot(blocks[src], blocks[dst])
    c.cnot(blocks[0], a)
    c.cnot(blocks[3], b)
    # cross links: both ancillas end up holding the parity of the two halves
    c.cnot(blocks[3], a)
    c.cnot(blocks[0], b)
    a_slots = c.measure(a)
    b_slots = c.measure(b)
    detect = md_detect(2)
    parts = [PairCheck(tuple(a_slots), tuple(b_slots), 3, detect)]
    # both outcomes 1: flip the first half to merge the two GHZ states
    c.ops.append(FeedForward((a_slots, b_slots), 3, Binding("md", "correct", 1), "X",
                             tuple(tuple(int(q) for q in blk) for blk in blocks[:3]), None, "and"))
    for blk in blocks:
        d_slots, t_slots = _teleport(c, blk, t1, t2, 3, Binding("md", "correct", 1), scratch)
        parts.append(DecodeCheck(tuple(d_slots), 3, detect))
        parts.append(DecodeCheck(tuple(t_slots), 3, detect))
    return _Body(c, AllOf(tuple(parts)))


def build_ft_zero_encoder(level: int, max_attempts: int = 1000) -> Circuit:
    """Top-level circuit preparing one register with the level-L FT encoder.

    The output register occupies qubits ``0..6**level-1``.
    """
    if not 1 <= level <= MAX_FT_LEVEL:
        raise ValueError(f"fault-tolerant encoders exist for levels 1..{MAX_FT_LEVEL}")
    body = ft_zero_body(level)
    c = Circuit(body.num_qubits)
    c.repeat(body, range(body.num_qubits), ft_zero_predicate(level), max_attempts, label=f"ft{level}")
    return c


# --- teleportation and the CNOT benchmark ------------------------------------

def build_ect(level: int, binding: Binding = MD_CORRECT, max_attempts: int = 1000) -> Circuit:
    """Error-correcting teleportation of the register on qubits ``0..6**L-1``.

    Two ancilla registers follow the data, then encoder scratch.  The data
    register is returned to its original qubits by a noiseless swap.
    """
    n = 6**level
    extra = ft_width(level) - n
    c = Circuit(3 * n + extra)
    _teleport(c, np.arange(n), np.arange(n, 2 * n), np.arange(2 * n, 3 * n), level, binding,
              list(range(3 * n, 3 * n + extra)), max_attempts)
    return c


@dataclass(frozen=True)
class CnotLayout:
    level: int
    registers: tuple  # four data registers
    slots: tuple  # final measurement slots per register


def build_cnot_experiment(level: int, rounds: int = 10, binding: Binding = MD_CORRECT,
                          max_attempts: int = 1000):
    """Logical-CNOT benchmark; returns ``(circuit, layout)``.

    Noiseless Bell pairs on (R1, R2) and (R3, R4), ``rounds`` noisy
    transversal CNOTs R1 -> R3 each followed by teleportation of R1 and R3,
    then noiseless disentangling and ideal measurement of all four registers.
    ``max_attempts`` caps every top-level encoder block inside the gadgets.
    ``rounds`` must be even so that the ideal circuit is the identity.
    """
    if rounds < 0 or rounds % 2:
        raise ValueError("rounds must be a non-negative even number")
    n = 6**level
    extra = ft_width(level) - n
    c = Circuit(6 * n + extra)
    regs = [np.arange(i * n, (i + 1) * n) for i in range(4)]
    a1, a2 = np.arange(4 * n, 5 * n), np.arange(5 * n, 6 * n)
    scratch = list(range(6 * n, 6 * n + extra))
    zero = build_zero_encoder(level)
    for reg in regs:
        _inline(c, zero, reg)
    for x, y in ((0, 1), (2, 3)):
        c.h(regs[x])
        c.cnot(regs[x], regs[y], noisy=False)
    for _ in range(rounds):
        c.cnot(regs[0], regs[2])
        for r in (0, 2):
            _teleport(c, regs[r], a1, a2, level, binding, scratch, max_attempts)
    for x, y in ((0, 1), (2, 3)):
        c.cnot(regs[x], regs[y], noisy=False)
        c.h(regs[x])
    slots = tuple(c.measure(reg, noisy=False) for reg in regs)
    return c, CnotLayout(level, tuple(tuple(int(q) for q in r) for r in regs), slots)


def _inline(c: Circuit, sub: Circuit, qubits) -> None:
    """Append a flat circuit with its qubit ``i`` mapped to ``qubits[i]``."""
    qubits = np.asarray(qubits)
    for op in sub.ops:
        if op.slots:
            raise ValueError("only measurement-free circuits can be inlined")
        c.append(op.name, qubits[list(op.targets)], kind=op.kind)


# --- logical SWAP permutations -----------------------------------------------

def swap_permutation(level: int, position: int, values_a, values_b) -> np.ndarray:
    """Physical permutation exchanging digit values ``values_a`` and ``values_b``
    at digit ``position`` (1 = outermost) of every physical address.

    ``values_a``/``values_b`` are equal-length tuples of digits in 1..6, e.g.
    ``(1,)``/``(3,)`` or ``(1, 2, 3)``/``(4, 5, 6)``.
    """
    values_a = tuple(np.atleast_1d(values_a).tolist())
    values_b = tuple(np.atleast_1d(values_b).tolist())
    if not 1 <= position <= level:
        raise ValueError("digit position out of range")
    if len(values_a) != len(values_b) or set(values_a) & set(values_b):
        raise ValueError("swap needs two disjoint value tuples of equal length")
    if any(not 1 <= v <= 6 for v in values_a + values_b):
        raise ValueError("digit values must lie in 1..6")
    mapping = {a: b for a, b in zip(values_a, values_b)}
    mapping.update({b: a for a, b in zip(values_a, values_b)})
    n = 6**level
    perm = np.arange(n)
    for i in range(n):
        digits = list(_from_flat(i, level, 6))
        d = digits[position - 1]
        if d in mapping:
            digits[position - 1] = mapping[d]
            perm[i] = _to_flat(digits, level, 6)
    return perm


def induced_logical_permutation(level: int, perm: np.ndarray) -> np.ndarray:
    """Logical relabelling induced by a physical permutation.

    Returns ``lperm`` with the permuted logical Z_m (and X_m) equal to logical
    Z/X of ``lperm[m]``; raises if the permutation is not a logical one.
    """
    table = build_code(level)
    out = []
    for basis in ("lz", "lx"):
        ops = getattr(table, basis)
        keys = {row.tobytes(): i for i, row in enumerate(ops)}
        moved = np.zeros_like(ops)
        moved[:, perm] = ops
        try:
            out.append(np.array([keys[row.tobytes()] for row in moved]))
        except KeyError:
            raise ValueError("permutation does not map logical operators onto logical operators") from None
    if not np.array_equal(out[0], out[1]):
        raise ValueError("Z and X logicals are relabelled differently")
    return out[0]
