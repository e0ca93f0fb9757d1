"""Stabilizer tableau simulator (Aaronson-Gottesman CHP) and the per-trial runner.

Rows ``0..n-1`` are destabilizers and rows ``n..2n-1`` stabilizers; ``r``
holds the sign bit of each row.  Row products are evaluated with a
vectorized per-qubit phase accumulation, so deterministic measurements and
expectation values cost one pass over the selected rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, FeedForward, Gate, Repeat
from .classical import evaluate, feedforward_bits, physical_correction
from .noise import NOISELESS, TWO_QUBIT_PAULIS, NoiseModel


def _phase_exponent(x1, z1, x2, z2):
    """Exponent of i in P(x1,z1) P(x2,z2), elementwise, as int64."""
    x1 = x1.astype(np.int64)
    z1 = z1.astype(np.int64)
    x2 = x2.astype(np.int64)
    z2 = z2.astype(np.int64)
    return np.where(
        x1 & z1, z2 - x2,
        np.where(x1 & ~z1 & 1, z2 * (2 * x2 - 1), np.where(~x1 & z1 & 1, x2 * (1 - 2 * z2), 0)),
    )


def product_sign(xs: np.ndarray, zs: np.ndarray, rs: np.ndarray):
    """Multiply Hermitian Pauli rows in order; return ``(x, z, sign_bit)``.

    The product must be Hermitian (true for commuting rows).
    """
    if len(xs) == 0:
        n = xs.shape[1]
        return np.zeros(n, dtype=bool), np.zeros(n, dtype=bool), 0
    px = np.bitwise_xor.accumulate(xs, axis=0)
    pz = np.bitwise_xor.accumulate(zs, axis=0)
    exps = _phase_exponent(px[:-1], pz[:-1], xs[1:], zs[1:]).sum()
    total = (exps + 2 * int(rs.sum())) % 4
    if total % 2:
        raise ValueError("product of rows is not Hermitian")
    return px[-1], pz[-1], total // 2


class Tableau:
    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        idx = np.arange(n)
        self.x[idx, idx] = True
        self.z[n + idx, idx] = True

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n = self.n
        t.x, t.z, t.r = self.x.copy(), self.z.copy(), self.r.copy()
        return t

    # gates -----------------------------------------------------------------
    def h(self, q):
        self.r ^= (self.x[:, q] & self.z[:, q]).astype(np.uint8)
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()

    def s(self, q):
        self.r ^= (self.x[:, q] & self.z[:, q]).astype(np.uint8)
        self.z[:, q] ^= self.x[:, q]

    def cnot(self, c, t):
        xc, zc, xt, zt = self.x[:, c], self.z[:, c], self.x[:, t], self.z[:, t]
        self.r ^= (xc & zt & ~(xt ^ zc)).astype(np.uint8)
        self.x[:, t] = xt ^ xc
        self.z[:, c] = zc ^ zt

    def swap(self, a, b):
        self.x[:, [a, b]] = self.x[:, [b, a]]
        self.z[:, [a, b]] = self.z[:, [b, a]]

    def pauli(self, q, px: bool, pz: bool):
        """Apply X^px Z^pz on qubit ``q`` (global phase ignored)."""
        flip = np.zeros(2 * self.n, dtype=bool)
        if px:
            flip ^= self.z[:, q]
        if pz:
            flip ^= self.x[:, q]
        self.r ^= flip.astype(np.uint8)

    def apply_gate(self, name: str, targets) -> None:
        targets = list(targets)
        if name == "H":
            for q in targets:
                self.h(q)
        elif name == "S":
            for q in targets:
                self.s(q)
        elif name in ("X", "Y", "Z"):
            for q in targets:
                self.pauli(q, name in "XY", name in "YZ")
        elif name == "CNOT":
            for c, t in zip(targets[::2], targets[1::2]):
                self.cnot(c, t)
        elif name == "SWAP":
            for a, b in zip(targets[::2], targets[1::2]):
                self.swap(a, b)
        else:
            raise ValueError(f"unsupported gate {name}")

    # measurement -----------------------------------------------------------
    def is_deterministic(self, q) -> bool:
        return not self.x[self.n:, q].any()

    def measure_z(self, q, rng=None, forced: int | None = None) -> int:
        """Measure qubit ``q`` in Z.  Random outcomes use ``rng`` or ``forced``."""
        n = self.n
        hits = np.flatnonzero(self.x[n:, q])
        if len(hits) == 0:
            rows = np.flatnonzero(self.x[:n, q]) + n
            return int(product_sign(self.x[rows], self.z[rows], self.r[rows])[2])
        p = n + hits[0]
        others = np.flatnonzero(self.x[:, q])
        others = others[others != p]
        if len(others):
            xp, zp, rp = self.x[p], self.z[p], int(self.r[p])
            exps = _phase_exponent(xp[None, :], zp[None, :], self.x[others], self.z[others]).sum(axis=1)
            self.r[others] = ((2 * self.r[others].astype(np.int64) + 2 * rp + exps) % 4 // 2).astype(np.uint8)
            self.x[others] ^= xp
            self.z[others] ^= zp
        self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
        self.x[p] = False
        self.z[p] = False
        self.z[p, q] = True
        if forced is None:
            forced = int(rng.integers(0, 2))
        self.r[p] = forced
        return int(forced)

    def reset(self, q, rng=None, forced: int | None = None) -> None:
        if self.measure_z(q, rng, forced):
            self.pauli(q, True, False)

    def expectation(self, px: np.ndarray, pz: np.ndarray) -> int:
        """<P> for the Pauli with supports ``px``, ``pz``: +1, -1, or 0 if not fixed."""
        n = self.n
        px = np.asarray(px, dtype=bool)
        pz = np.asarray(pz, dtype=bool)
        sx, sz = self.x[n:], self.z[n:]
        if (((sx & pz).sum(axis=1) + (sz & px).sum(axis=1)) % 2).any():
            return 0
        anti = ((self.x[:n] & pz).sum(axis=1) + (self.z[:n] & px).sum(axis=1)) % 2 == 1
        rows = np.flatnonzero(anti) + n
        gx, gz, sign = product_sign(self.x[rows], self.z[rows], self.r[rows])
        if not (np.array_equal(gx, px) and np.array_equal(gz, pz)):
            raise AssertionError("commuting Pauli is not in the stabilizer group")
        return -1 if sign else 1

    def check(self) -> None:
        """Assert the symplectic structure of destabilizers and stabilizers."""
        n = self.n
        x = self.x.astype(np.int64)
        z = self.z.astype(np.int64)
        omega = (x @ z.T + z @ x.T) % 2
        expected = np.zeros((2 * n, 2 * n), dtype=np.int64)
        expected[np.arange(n), n + np.arange(n)] = 1
        expected[n + np.arange(n), np.arange(n)] = 1
        if not np.array_equal(omega, expected):
            raise AssertionError("tableau lost its symplectic structure")


# --- per-trial runner ----------------------------------------------------

@dataclass
class RunRecord:
    """Outcome of one tableau trial."""

    slots: np.ndarray
    attempts: dict = field(default_factory=dict)
    exhausted: bool = False
    errors: list = field(default_factory=list)
    tableau: Tableau | None = None

    def attempt_counts(self, label: str) -> list[int]:
        return self.attempts.get(label, [])


class _Runner:
    def __init__(self, noise: NoiseModel, rng: np.random.Generator, forced_zero: bool, log_errors: bool):
        self.noise = noise
        self.rng = rng
        self.forced_zero = forced_zero
        self.log_errors = log_errors
        self.record = None

    def run(self, circuit: Circuit, tab: Tableau, qmap: np.ndarray, slots: np.ndarray) -> bool:
        """Execute ``circuit`` on ``tab`` with body qubit ``i`` at ``qmap[i]``.

        Returns ``False`` when some nested repeat block exhausted its attempts.
        """
        for op in circuit.ops:
            if isinstance(op, Gate):
                qs = qmap[list(op.targets)]
                if op.name == "MEASZ":
                    for q, s in zip(qs, op.slots):
                        slots[s] = tab.measure_z(q, self.rng, 0 if self.forced_zero else None)
                elif op.name == "NOISE":
                    self._noise(tab, op.kind, qs)
                elif op.name == "R":
                    for q in qs:
                        tab.reset(q, self.rng, 0 if self.forced_zero else None)
                else:
                    tab.apply_gate(op.name, qs)
                    if op.name == "SWAP" and self.noise.swap:
                        self._noise(tab, "cnot", qs)
            elif isinstance(op, Repeat):
                if not self._repeat(op, tab, qmap):
                    return False
            elif isinstance(op, FeedForward):
                bits = feedforward_bits(op, slots[None, :], self.rng)
                corr = physical_correction(op, bits)[0]
                for target in op.targets:
                    for q in qmap[np.asarray(target)][corr.astype(bool)]:
                        tab.pauli(q, op.pauli == "X", op.pauli == "Z")
        return True

    def _repeat(self, op: Repeat, tab: Tableau, qmap: np.ndarray) -> bool:
        sub = qmap[list(op.qubits)]
        for attempt in range(1, op.max_attempts + 1):
            body_slots = np.zeros(op.body.num_classical, dtype=np.uint8)
            ok = self.run(op.body, tab, sub, body_slots)
            if ok and evaluate(op.predicate, body_slots[None, :], self.rng)[0]:
                self.record.attempts.setdefault(op.label, []).append(attempt)
                return True
        self.record.attempts.setdefault(op.label, []).append(op.max_attempts)
        return False

    def _noise(self, tab: Tableau, kind: str, qs: np.ndarray) -> None:
        p = self.noise.rate(kind)
        if p == 0.0:
            return
        if kind == "cnot":
            pairs = qs.reshape(-1, 2)
            hit = self.rng.random(len(pairs)) < p
            for (a, b), which in zip(pairs[hit], self.rng.integers(0, 15, hit.sum())):
                xa, za, xb, zb = TWO_QUBIT_PAULIS[which]
                tab.pauli(a, xa, za)
                tab.pauli(b, xb, zb)
                if self.log_errors:
                    self.record.errors.append((kind, int(a), int(b), int(which) + 1))
        else:
            for q in qs[self.rng.random(len(qs)) < p]:
                tab.pauli(q, True, False)
                if self.log_errors:
                    self.record.errors.append((kind, int(q)))


def simulate(circuit: Circuit, noise: NoiseModel = NOISELESS, seed=None, *, forced_zero: bool = False,
             log_errors: bool = False, keep_tableau: bool = False) -> RunRecord:
    """Run one trial of ``circuit`` on a fresh tableau.

    With ``forced_zero`` every random measurement returns 0, which yields the
    reference branch used by the Pauli-frame engine.  A repeat block that
    runs out of attempts ends the trial with ``exhausted`` set.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    tab = Tableau(circuit.num_qubits)
    slots = np.zeros(circuit.num_classical, dtype=np.uint8)
    runner = _Runner(noise, rng, forced_zero, log_errors)
    runner.record = RunRecord(slots)
    ok = runner.run(circuit, tab, np.arange(circuit.num_qubits), slots)
    runner.record.exhausted = not ok
    if keep_tableau:
        runner.record.tableau = tab
    return runner.record


def outcome_distribution(circuit: Circuit) -> dict[tuple[int, ...], float]:
    """Exact distribution of the slot record of a noiseless, flat circuit.

    Every random measurement or reset splits the branch in two with weight
    1/2, so the cost grows as 2**(random events); meant for small circuits.
    """
    branches = [(1.0, Tableau(circuit.num_qubits), np.zeros(circuit.num_classical, dtype=np.uint8))]
    for op in circuit.ops:
        if not isinstance(op, Gate):
            raise ValueError("outcome_distribution takes flat circuits only")
        if op.name == "NOISE":
            continue
        if op.name not in ("MEASZ", "R"):
            for _, tab, _ in branches:
                tab.apply_gate(op.name, op.targets)
            continue
        for i, q in enumerate(op.targets):
            nxt = []
            for w, tab, slots in branches:
                outcomes = [None] if tab.is_deterministic(q) else [0, 1]
                for o in outcomes:
                    t = tab.copy() if len(outcomes) == 2 else tab
                    s = slots.copy() if len(outcomes) == 2 else slots
                    bit = t.measure_z(q, forced=o)
                    if op.name == "MEASZ":
                        s[op.slots[i]] = bit
                    elif bit:
                        t.pauli(q, True, False)
                    nxt.append((w / len(outcomes), t, s))
            branches = nxt
    dist: dict = {}
    for w, _, slots in branches:
        key = tuple(int(b) for b in slots)
        dist[key] = dist.get(key, 0.0) + w
    return dist
