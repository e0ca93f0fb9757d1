"""Level-L many-hypercube code: the (L-1)-fold concatenation of [[6,4,2]].

Addresses are tuples of 1-based digits written outermost first, so the
physical qubit ``(i, j, k)`` of a level-3 code is ``Q_{i,j,k}``.  The flat
index is mixed radix in that order (base 6 for physical qubits, base 4 for
logical qubits).  A level-m block is therefore a run of ``6**m`` consecutive
physical qubits, and the logical qubits of a level-m block are the
``4**m`` consecutive logical indices sharing its outer digits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_LEVEL = 6

# Pairs of [[6,4,2]] positions (1-based) carrying each logical operator.
Z_PAIRS = {1: (1, 2), 2: (2, 3), 3: (4, 5), 4: (5, 6)}
X_PAIRS = {1: (2, 3), 2: (1, 2), 3: (5, 6), 4: (4, 5)}


@dataclass(frozen=True)
class CodeParams:
    level: int
    n: int
    k: int
    d: int

    @property
    def rate(self) -> float:
        return self.k / self.n

    def __str__(self) -> str:
        return f"[[{self.n},{self.k},{self.d}]] rate={self.rate:.4f}"


def code_params(level: int) -> CodeParams:
    _check_level(level)
    return CodeParams(level, 6**level, 4**level, 2**level)


def _check_level(level: int) -> None:
    if not isinstance(level, (int, np.integer)) or level < 1:
        raise ValueError(f"level must be a positive integer, got {level!r}")
    if level > MAX_LEVEL:
        raise ValueError(f"level {level} exceeds the supported cap {MAX_LEVEL}")


def _to_flat(digits, level: int, radix: int) -> int:
    digits = tuple(int(d) for d in digits)
    if len(digits) != level:
        raise ValueError(f"expected {level} digits, got {len(digits)}")
    index = 0
    for d in digits:
        if not 1 <= d <= radix:
            raise ValueError(f"digit {d} out of range 1..{radix}")
        index = index * radix + (d - 1)
    return index


def _from_flat(index: int, level: int, radix: int) -> tuple[int, ...]:
    if not 0 <= index < radix**level:
        raise ValueError(f"index {index} out of range for level {level}")
    digits = []
    for _ in range(level):
        index, r = divmod(index, radix)
        digits.append(r + 1)
    return tuple(reversed(digits))


def flat_index(addr, level: int) -> int:
    """Flat index of a physical qubit address, e.g. ``(2, 3)`` -> 8 at level 2."""
    _check_level(level)
    return _to_flat(addr, level, 6)


def address(index: int, level: int) -> tuple[int, ...]:
    """Inverse of :func:`flat_index`."""
    _check_level(level)
    return _from_flat(index, level, 6)


def logical_flat_index(addr, level: int) -> int:
    _check_level(level)
    return _to_flat(addr, level, 4)


def logical_address(index: int, level: int) -> tuple[int, ...]:
    _check_level(level)
    return _from_flat(index, level, 4)


@dataclass(frozen=True, eq=False)
class PauliOperator:
    """Unsigned Pauli operator as a pair of boolean support vectors."""

    x: np.ndarray
    z: np.ndarray

    @classmethod
    def from_support(cls, n: int, support, basis: str) -> "PauliOperator":
        x = np.zeros(n, dtype=bool)
        z = np.zeros(n, dtype=bool)
        target = {"X": x, "Z": z}[basis]
        target[list(support)] = True
        x.flags.writeable = False
        z.flags.writeable = False
        return cls(x, z)

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    def symplectic(self, other: "PauliOperator") -> int:
        return int((np.count_nonzero(self.x & other.z) + np.count_nonzero(self.z & other.x)) % 2)

    def commutes(self, other: "PauliOperator") -> bool:
        return self.symplectic(other) == 0

    def support(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.x | self.z).tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliOperator):
            return NotImplemented
        return bool(np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z))

    def __hash__(self) -> int:
        return hash((self.x.tobytes(), self.z.tobytes()))

    def __str__(self) -> str:
        chars = np.array(["I", "X", "Z", "Y"])
        return "".join(chars[self.x.astype(int) + 2 * self.z.astype(int)])


def _support(pairs: dict, outer: tuple[int, ...], inner: tuple[int, ...], level: int, full_digit: bool):
    """Flat indices of ``outer x [1..6]? x prod(pairs[d] for d in inner)``."""
    choices = [(d,) for d in outer]
    if full_digit:
        choices.append(tuple(range(1, 7)))
    choices.extend(pairs[d] for d in inner)
    return [_to_flat(a, level, 6) for a in itertools.product(*choices)]


@dataclass(frozen=True, eq=False)
class OperatorTable:
    """Stabilizer generators and logical operators of the level-L code.

    ``hz``/``hx`` hold the supports of the Z-type/X-type generators and
    ``lz``/``lx`` the supports of the logical operators, row ``m`` for the
    logical qubit with flat index ``m``.
    """

    params: CodeParams
    hz: np.ndarray
    hx: np.ndarray
    lz: np.ndarray
    lx: np.ndarray
    generator_levels: np.ndarray

    @property
    def level(self) -> int:
        return self.params.level

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def k(self) -> int:
        return self.params.k

    @property
    def stabilizer_generators(self) -> list[PauliOperator]:
        zero = np.zeros(self.n, dtype=bool)
        ops = [PauliOperator(zero, row) for row in self.hz]
        ops += [PauliOperator(row, zero) for row in self.hx]
        return ops

    @property
    def logical_z(self) -> list[PauliOperator]:
        zero = np.zeros(self.n, dtype=bool)
        return [PauliOperator(zero, row) for row in self.lz]

    @property
    def logical_x(self) -> list[PauliOperator]:
        zero = np.zeros(self.n, dtype=bool)
        return [PauliOperator(row, zero) for row in self.lx]

    def hadamard_label_map(self) -> np.ndarray:
        """``perm[m]`` is the X-logical whose support equals that of Z-logical ``m``.

        Transversal H turns logical Z_m into logical X_{perm[m]}.
        """
        keys = {row.tobytes(): i for i, row in enumerate(self.lx)}
        return np.array([keys[row.tobytes()] for row in self.lz], dtype=np.int64)


@lru_cache(maxsize=None)
def build_code(level: int) -> OperatorTable:
    params = code_params(level)
    n, k = params.n, params.k
    hz_rows, hx_rows, levels = [], [], []
    for m in range(1, level + 1):
        for outer in itertools.product(range(1, 7), repeat=level - m):
            for inner in itertools.product(range(1, 5), repeat=m - 1):
                zrow = np.zeros(n, dtype=bool)
                xrow = np.zeros(n, dtype=bool)
                zrow[_support(Z_PAIRS, outer, inner, level, True)] = True
                xrow[_support(X_PAIRS, outer, inner, level, True)] = True
                hz_rows.append(zrow)
                hx_rows.append(xrow)
                levels.append(m)
    lz = np.zeros((k, n), dtype=bool)
    lx = np.zeros((k, n), dtype=bool)
    for idx, digits in enumerate(itertools.product(range(1, 5), repeat=level)):
        lz[idx, _support(Z_PAIRS, (), digits, level, False)] = True
        lx[idx, _support(X_PAIRS, (), digits, level, False)] = True
    arrays = [np.array(hz_rows), np.array(hx_rows), lz, lx, np.array(levels)]
    for a in arrays:
        a.flags.writeable = False
    return OperatorTable(params, *arrays)


def logical_support(table: OperatorTable, logical_index, basis: str) -> frozenset[int]:
    """Physical flat indices carrying logical Z or X of one logical qubit.

    ``logical_index`` is either a flat logical index or a digit tuple.
    """
    if basis not in ("Z", "X"):
        raise ValueError(f"basis must be 'Z' or 'X', got {basis!r}")
    if isinstance(logical_index, (tuple, list)):
        idx = logical_flat_index(logical_index, table.level)
    else:
        idx = int(logical_index)
        if not 0 <= idx < table.k:
            raise ValueError(f"logical index {idx} out of range")
    rows = table.lz if basis == "Z" else table.lx
    return frozenset(np.flatnonzero(rows[idx]).tolist())
