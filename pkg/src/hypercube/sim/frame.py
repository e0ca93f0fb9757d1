"""Batched Pauli-frame sampler.

Each shot carries a Pauli frame: the difference between its noisy run and a
noiseless reference run in which every random measurement returned 0.
Frames of 64 shots are packed into one uint64 word per qubit, so Clifford
gates cost a handful of word operations per qubit regardless of shot count.

Because the reference run of the circuits built in this package measures all
zeros, a shot's measurement record equals its frame's X component.  Every
predicate and decoder used by those circuits commutes with adding a
codeword, so classical control can act on the frame record directly.  Pass
``reference`` to ``sample`` for flat circuits whose reference is not zero.

Repeat blocks must reset every body qubit before using it.  A body then
starts from a fresh local frame, and only the shots it rejects are rerun,
compacted into a smaller batch in which every pending shot gets several
independent replicas.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, FeedForward, Gate, Repeat
from .classical import evaluate, feedforward_bits, physical_correction
from .noise import NOISELESS, TWO_QUBIT_PAULIS, NoiseModel
from .tableau import simulate

_ALL = np.uint64(0xFFFFFFFFFFFFFFFF)


def words(shots: int) -> int:
    return (shots + 63) // 64


def unpack(rows: np.ndarray, shots: int) -> np.ndarray:
    """Packed ``(k, W)`` uint64 rows to a ``(shots, k)`` uint8 array."""
    rows = np.ascontiguousarray(rows)
    bits = np.unpackbits(rows.view(np.uint8), axis=1, bitorder="little")
    return np.ascontiguousarray(bits[:, :shots].T)


def pack(bits: np.ndarray) -> np.ndarray:
    """``(shots, k)`` bits to packed ``(k, W)`` uint64 rows."""
    bits = np.asarray(bits, dtype=np.uint8)
    shots, k = bits.shape
    w = words(shots)
    buf = np.zeros((k, w * 64), dtype=np.uint8)
    buf[:, :shots] = bits.T
    return np.packbits(buf, axis=1, bitorder="little").view(np.uint64).reshape(k, w)


def _scatter_bits(arr: np.ndarray, rows: np.ndarray, shots: np.ndarray) -> None:
    """Flip bit ``shots[i]`` of packed row ``rows[i]`` in ``arr`` (pairs distinct)."""
    if len(rows) == 0:
        return
    masks = np.left_shift(np.uint64(1), (shots % 64).astype(np.uint64))
    np.bitwise_xor.at(arr, (rows, shots // 64), masks)


def count_sites(circuit: Circuit) -> list[tuple[str, tuple[int, ...]]]:
    """Noise sites in execution order of a single-attempt run.

    Each entry is ``(kind, qubits)`` with qubits in the circuit's own
    coordinates (one qubit, or a pair for ``cnot`` sites).
    """
    out: list = []
    _collect_sites(circuit, np.arange(circuit.num_qubits), out)
    return out


def _collect_sites(circuit, qmap, out):
    for op in circuit.ops:
        if isinstance(op, Gate) and op.name == "NOISE":
            qs = qmap[list(op.targets)]
            if op.kind == "cnot":
                out.extend(("cnot", (int(a), int(b))) for a, b in qs.reshape(-1, 2))
            else:
                out.extend((op.kind, (int(q),)) for q in qs)
        elif isinstance(op, Repeat):
            _collect_sites(op.body, qmap[list(op.qubits)], out)


@dataclass
class FrameRecord:
    """Per-shot results of a batched run."""

    slots: np.ndarray
    exhausted: np.ndarray
    rejected: np.ndarray
    attempts: dict = field(default_factory=dict)
    x: np.ndarray | None = None
    z: np.ndarray | None = None

    @property
    def shots(self) -> int:
        return len(self.exhausted)


class _State:
    def __init__(self, n: int, shots: int, rng: np.random.Generator):
        self.shots = shots
        w = words(shots)
        self.x = np.zeros((n, w), dtype=np.uint64)
        self.z = rng.integers(0, _ALL, size=(n, w), dtype=np.uint64, endpoint=True)


def _check_resets_first(body: Circuit) -> None:
    touched = np.zeros(body.num_qubits, dtype=bool)
    for op in body.ops:
        if isinstance(op, Gate):
            if op.name == "R":
                touched[list(op.targets)] = True
            elif not touched[list(op.targets)].all():
                raise ValueError("repeat body uses a qubit before resetting it")
        elif isinstance(op, Repeat):
            touched[list(op.qubits)] = True
        elif isinstance(op, FeedForward):
            for t in op.targets:
                if not touched[list(t)].all():
                    raise ValueError("repeat body corrects a qubit before resetting it")


class _Engine:
    def __init__(self, noise, rng, forced, single_attempt):
        self.noise = noise
        self.rng = rng
        self.forced = forced
        self.single_attempt = single_attempt
        self.site = 0
        self.attempts: dict = {}
        self._checked: set = set()
        self.retry_budget = 4096

    def run(self, circuit: Circuit, state: _State, qmap: np.ndarray, slots: np.ndarray, ids: np.ndarray):
        """Run ``circuit`` on ``state`` (body qubit i at row ``qmap[i]``).

        Returns ``(exhausted, rejected)`` boolean arrays over the batch.
        """
        shots = state.shots
        exhausted = np.zeros(shots, dtype=bool)
        rejected = np.zeros(shots, dtype=bool)
        x, z = state.x, state.z
        for op in circuit.ops:
            if isinstance(op, Gate):
                qs = qmap[list(op.targets)]
                name = op.name
                if name == "CNOT" or name == "SWAP":
                    a, b = qs[0::2], qs[1::2]
                    if name == "CNOT":
                        x[b] ^= x[a]
                        z[a] ^= z[b]
                    else:
                        x[a], x[b] = x[b], x[a].copy()
                        z[a], z[b] = z[b], z[a].copy()
                        if self.noise.swap:
                            self._noise("cnot", qs, state, ids)
                elif name == "H":
                    x[qs], z[qs] = z[qs], x[qs]
                elif name == "S":
                    z[qs] ^= x[qs]
                elif name == "R":
                    x[qs] = 0
                    z[qs] = self._random_words(len(qs), x.shape[1])
                elif name == "MEASZ":
                    slots[list(op.slots)] = x[qs]
                    z[qs] = self._random_words(len(qs), x.shape[1])
                elif name == "NOISE":
                    self._noise(op.kind, qs, state, ids)
                elif name in ("X", "Y", "Z"):
                    # deterministic Paulis are carried by the frame, not the reference
                    if name != "Z":
                        x[qs] ^= _ALL
                    if name != "X":
                        z[qs] ^= _ALL
            elif isinstance(op, Repeat):
                ex, rej = self._repeat(op, state, qmap, ids)
                exhausted |= ex
                rejected |= rej
            elif isinstance(op, FeedForward):
                bits = feedforward_bits(op, unpack(slots, shots), self.rng)
                corr = pack(physical_correction(op, bits))
                target = x if op.pauli == "X" else z
                for reg in op.targets:
                    target[qmap[list(reg)]] ^= corr
        return exhausted, rejected

    def _random_words(self, k, w):
        return self.rng.integers(0, _ALL, size=(k, w), dtype=np.uint64, endpoint=True)

    def _run_body(self, op: Repeat, ids: np.ndarray):
        body = op.body
        if id(body) not in self._checked:
            _check_resets_first(body)
            self._checked.add(id(body))
        local = _State(body.num_qubits, len(ids), self.rng)
        slots = np.zeros((body.num_classical, words(len(ids))), dtype=np.uint64)
        ex, rej = self.run(body, local, np.arange(body.num_qubits), slots, ids)
        ok = evaluate(op.predicate, unpack(slots, len(ids)), self.rng) & ~rej
        return local, ok, ex

    def _repeat(self, op: Repeat, state: _State, qmap: np.ndarray, ids: np.ndarray):
        shots = state.shots
        rows = qmap[list(op.qubits)]
        local, ok, exhausted = self._run_body(op, ids)
        attempts = np.ones(shots, dtype=np.int64)
        rejected = np.zeros(shots, dtype=bool)
        if self.single_attempt:
            rejected = ~ok & ~exhausted
        elif not (ok | exhausted).all():
            fx = unpack(local.x, shots)
            fz = unpack(local.z, shots)
            pending = np.flatnonzero(~ok & ~exhausted)
            saved_site, saved_forced = self.site, self.forced
            self.forced = None
            accept = max(ok.mean(), 1.0 / max(shots, 1))
            while len(pending) and attempts[pending[0]] < op.max_attempts:
                # later attempts are i.i.d., so each pending shot runs r replicas
                # at once and keeps the first accepted one in replica order
                room = op.max_attempts - attempts[pending[0]]
                r = int(min(room, max(1, self.retry_budget // len(pending)), np.ceil(3.0 / accept)))
                sub, ok2, ex2 = self._run_body(op, np.repeat(ids[pending], r))
                done = (ok2 | ex2).reshape(len(pending), r)
                accept = max(ok2.mean(), 0.5 * accept)
                hit = done.any(axis=1)
                first = done.argmax(axis=1)
                attempts[pending] += np.where(hit, first + 1, r)
                rows_ok = np.flatnonzero(hit)
                pick = rows_ok * r + first[rows_ok]
                fx[pending[rows_ok]] = unpack(sub.x, len(pending) * r)[pick]
                fz[pending[rows_ok]] = unpack(sub.z, len(pending) * r)[pick]
                exhausted[pending[rows_ok]] = ex2[pick]
                pending = pending[~hit]
            exhausted[pending] = True
            self.site, self.forced = saved_site, saved_forced
            local.x, local.z = pack(fx), pack(fz)
        state.x[rows] = local.x
        state.z[rows] = local.z
        self.attempts.setdefault(op.label, []).append(attempts)
        return exhausted, rejected

    def _noise(self, kind: str, qs: np.ndarray, state: _State, ids: np.ndarray):
        shots = state.shots
        pairs = kind == "cnot"
        sites = len(qs) // 2 if pairs else len(qs)
        first = self.site
        self.site += sites
        rate = self.noise.rate(kind)
        if rate > 0.0:
            total = sites * shots
            count = self.rng.binomial(total, rate)
            if count:
                pos = self.rng.choice(total, size=count, replace=False)
                self._apply(kind, qs, pos // shots, pos % shots, self.rng.integers(1, 16 if pairs else 2, count), state)
        if self.forced is not None:
            fsite, fcode = self.forced
            local = fsite[ids] - first
            hit = np.flatnonzero((local >= 0) & (local < sites))
            if len(hit):
                self._apply(kind, qs, local[hit], hit, fcode[ids[hit]], state)

    def _apply(self, kind, qs, site_idx, shot_idx, codes, state):
        """Apply Pauli ``codes`` at sites ``site_idx`` for shots ``shot_idx``.

        Two-qubit codes index ``TWO_QUBIT_PAULIS`` (1..15); single-qubit codes
        are ``x + 2 z`` (1..3).
        """
        if kind == "cnot":
            pq = TWO_QUBIT_PAULIS[codes - 1].astype(bool)
            a = qs[0::2][site_idx]
            b = qs[1::2][site_idx]
            _scatter_bits(state.x, a[pq[:, 0]], shot_idx[pq[:, 0]])
            _scatter_bits(state.z, a[pq[:, 1]], shot_idx[pq[:, 1]])
            _scatter_bits(state.x, b[pq[:, 2]], shot_idx[pq[:, 2]])
            _scatter_bits(state.z, b[pq[:, 3]], shot_idx[pq[:, 3]])
        else:
            q = qs[site_idx]
            xm = (codes & 1).astype(bool)
            zm = (codes & 2).astype(bool)
            _scatter_bits(state.x, q[xm], shot_idx[xm])
            _scatter_bits(state.z, q[zm], shot_idx[zm])


def reference_slots(circuit: Circuit) -> np.ndarray:
    """Noiseless reference record of a flat circuit for ``sample(reference=...)``.

    Pauli gates are dropped because the sampler applies them to the frames.
    """
    stripped = Circuit(circuit.num_qubits, circuit.num_classical,
                       [op for op in circuit.ops if not (isinstance(op, Gate) and op.name in ("X", "Y", "Z"))])
    return simulate(stripped, forced_zero=True).slots


def sample(circuit: Circuit, noise: NoiseModel = NOISELESS, shots: int = 1, seed=None, *,
           reference: np.ndarray | None = None, forced=None, single_attempt: bool = False,
           keep=None) -> FrameRecord:
    """Sample ``shots`` runs of ``circuit``.

    ``forced`` is a pair ``(site, code)`` of per-shot arrays injecting one
    extra Pauli at noise site ``site`` (numbered as in ``count_sites``; -1 for
    none).  ``single_attempt`` runs each repeat body once and marks rejected
    shots instead of retrying.  ``keep`` lists qubits whose final frames are
    returned as ``(shots, len(keep))`` arrays.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if forced is not None:
        forced = (np.asarray(forced[0], dtype=np.int64), np.asarray(forced[1], dtype=np.int64))
        if len(forced[0]) != shots or len(forced[1]) != shots:
            raise ValueError("forced faults need one entry per shot")
    engine = _Engine(noise, rng, forced, single_attempt)
    state = _State(circuit.num_qubits, shots, rng)
    slots = np.zeros((circuit.num_classical, words(shots)), dtype=np.uint64)
    exhausted, rejected = engine.run(circuit, state, np.arange(circuit.num_qubits), slots, np.arange(shots))
    bits = unpack(slots, shots)
    if reference is not None:
        bits ^= np.asarray(reference, dtype=np.uint8)[None, :]
    attempts = {k: np.concatenate(v) for k, v in engine.attempts.items()}
    rec = FrameRecord(bits, exhausted, rejected, attempts)
    if keep is not None:
        keep = list(keep)
        rec.x = unpack(state.x[keep], shots)
        rec.z = unpack(state.z[keep], shots)
    return rec
