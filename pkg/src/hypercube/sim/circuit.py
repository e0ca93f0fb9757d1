"""Gate-level circuit IR shared by the tableau and Pauli-frame engines.

A :class:`Circuit` is a flat list of operations over ``num_qubits`` qubits and
``num_classical`` measurement slots.  Gate operations act on several targets
at once (pairs for two-qubit gates), which is how transversal gates are
written.  Two compound operations carry the control flow the encoders need:

* :class:`Repeat` runs a self-contained body circuit until its predicate
  accepts, at most ``max_attempts`` times.  Body qubits are mapped onto the
  parent's qubits; body slots are private to the body.
* :class:`FeedForward` decodes measured slots and applies logical Pauli
  corrections to code registers.

Noise is explicit: ``NOISE`` operations mark where the noise model may
inject errors, so noiseless segments simply carry none.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

GATES = ("R", "H", "S", "CNOT", "SWAP", "X", "Y", "Z", "MEASZ", "NOISE")
NOISE_KINDS = ("prep", "meas", "cnot", "flip")
_PAIRED = ("CNOT", "SWAP")


@dataclass(frozen=True)
class Gate:
    name: str
    targets: tuple[int, ...]
    slots: tuple[int, ...] = ()
    kind: str = ""

    @property
    def pairs(self):
        return list(zip(self.targets[::2], self.targets[1::2]))


@dataclass(frozen=True)
class Binding:
    """Which decoder a classical step uses."""

    decoder: str = "md"
    mode: str = "correct"
    detect_level: int = 1

    def to_text(self) -> str:
        return f"{self.decoder}:{self.mode}:{self.detect_level}"

    @classmethod
    def from_text(cls, text: str) -> "Binding":
        dec, mode, ld = text.split(":")
        return cls(dec, mode, int(ld))


# --- predicates ----------------------------------------------------------

@dataclass(frozen=True)
class AllZero:
    slots: tuple[int, ...]

    def to_text(self):
        return f"zero({_ranges(self.slots)})"


@dataclass(frozen=True)
class DecodeCheck:
    """Decode slots in detection mode; accept when nothing is flagged.

    With ``require_zero`` the decoded logical bits must also all be 0.
    """

    slots: tuple[int, ...]
    level: int
    binding: Binding
    require_zero: bool = False

    def to_text(self):
        return (f"decode({self.binding.to_text()},L={self.level},zero={int(self.require_zero)},"
                f"{_ranges(self.slots)})")


@dataclass(frozen=True)
class PairCheck:
    """Decode two registers in detection mode; accept when nothing is flagged
    and the two logical outcomes agree on every logical qubit."""

    slots_a: tuple[int, ...]
    slots_b: tuple[int, ...]
    level: int
    binding: Binding

    def to_text(self):
        return (f"pair({self.binding.to_text()},L={self.level},"
                f"{_ranges(self.slots_a)};{_ranges(self.slots_b)})")


@dataclass(frozen=True)
class AllOf:
    parts: tuple

    def to_text(self):
        return " & ".join(p.to_text() for p in self.parts) or "true"


# --- compound operations -------------------------------------------------

@dataclass(frozen=True)
class Repeat:
    body: "Circuit"
    qubits: tuple[int, ...]
    predicate: object
    max_attempts: int = 1000
    label: str = ""


@dataclass(frozen=True)
class FeedForward:
    """Decode ``sources`` (slot lists, correct mode) and apply logical ``pauli``.

    ``combine`` is ``"single"`` for one source or ``"and"`` to correct only
    where both sources decode to 1.  Logical qubit ``m`` of each target
    register is driven by decoded bit ``m`` after relabelling: decoded bit
    ``m`` corrects logical qubit ``label_map[m]``.
    """

    sources: tuple[tuple[int, ...], ...]
    level: int
    binding: Binding
    pauli: str
    targets: tuple[tuple[int, ...], ...]
    label_map: tuple[int, ...] | None = None
    combine: str = "single"

    def __post_init__(self):
        if self.pauli not in ("X", "Z"):
            raise ValueError("feed-forward pauli must be X or Z")
        if self.combine not in ("single", "and"):
            raise ValueError("combine must be 'single' or 'and'")
        if self.combine == "single" and len(self.sources) != 1:
            raise ValueError("single combine takes one source")
        if self.combine == "and" and len(self.sources) != 2:
            raise ValueError("'and' combine takes two sources")


@dataclass
class Circuit:
    num_qubits: int
    num_classical: int = 0
    ops: list = field(default_factory=list)

    # builders --------------------------------------------------------------
    def append(self, name: str, targets, slots=(), kind: str = "") -> "Circuit":
        targets = tuple(int(t) for t in np.atleast_1d(targets)) if len(np.atleast_1d(targets)) else ()
        if not targets:
            return self
        self.ops.append(Gate(name, targets, tuple(int(s) for s in slots), kind))
        return self

    def reset(self, qubits, noisy=True):
        self.append("R", qubits)
        if noisy:
            self.append("NOISE", qubits, kind="prep")
        return self

    def h(self, qubits):
        return self.append("H", qubits)

    def x(self, qubits):
        return self.append("X", qubits)

    def z(self, qubits):
        return self.append("Z", qubits)

    def noise(self, kind: str, qubits):
        return self.append("NOISE", qubits, kind=kind)

    def cnot(self, controls, targets, noisy=True):
        controls = np.atleast_1d(controls)
        targets = np.atleast_1d(targets)
        if len(controls) != len(targets):
            raise ValueError("controls and targets differ in length")
        flat = np.empty(2 * len(controls), dtype=np.int64)
        flat[0::2] = controls
        flat[1::2] = targets
        self.append("CNOT", flat)
        if noisy:
            self.append("NOISE", flat, kind="cnot")
        return self

    def swap(self, a, b):
        a, b = np.atleast_1d(a), np.atleast_1d(b)
        flat = np.empty(2 * len(a), dtype=np.int64)
        flat[0::2] = a
        flat[1::2] = b
        return self.append("SWAP", flat)

    def measure(self, qubits, noisy=True) -> tuple[int, ...]:
        qubits = tuple(int(q) for q in np.atleast_1d(qubits))
        slots = tuple(range(self.num_classical, self.num_classical + len(qubits)))
        self.num_classical += len(qubits)
        if noisy:
            self.append("NOISE", qubits, kind="meas")
        self.ops.append(Gate("MEASZ", qubits, slots))
        return slots

    def repeat(self, body: "Circuit", qubits, predicate, max_attempts=1000, label=""):
        qubits = tuple(int(q) for q in qubits)
        if len(qubits) != body.num_qubits:
            raise ValueError("qubit map size differs from the body width")
        self.ops.append(Repeat(body, qubits, predicate, max_attempts, label))
        return self

    # inspection ----------------------------------------------------------
    def validate(self) -> None:
        seen_slots = set()
        for op in self.ops:
            if isinstance(op, Gate):
                if op.name not in GATES:
                    raise ValueError(f"unknown gate {op.name}")
                if any(not 0 <= q < self.num_qubits for q in op.targets):
                    raise ValueError(f"qubit out of range in {op}")
                if op.name in _PAIRED or op.kind == "cnot":
                    if len(op.targets) % 2 or len(set(op.targets)) != len(op.targets):
                        raise ValueError(f"{op.name} needs disjoint pairs: {op}")
                if op.name == "NOISE" and op.kind not in NOISE_KINDS:
                    raise ValueError(f"unknown noise kind {op.kind}")
                if op.name == "MEASZ":
                    if len(op.slots) != len(op.targets):
                        raise ValueError("MEASZ needs one slot per qubit")
                    for s in op.slots:
                        if not 0 <= s < self.num_classical or s in seen_slots:
                            raise ValueError(f"bad or reused slot {s}")
                        seen_slots.add(s)
            elif isinstance(op, Repeat):
                op.body.validate()
                if any(not 0 <= q < self.num_qubits for q in op.qubits):
                    raise ValueError("repeat maps onto missing qubits")
            elif isinstance(op, FeedForward):
                for t in op.targets:
                    if any(not 0 <= q < self.num_qubits for q in t):
                        raise ValueError("feed-forward target out of range")
            else:
                raise ValueError(f"unknown operation {op!r}")

    def count(self, deep: bool = True) -> dict:
        """Operation and noise-site counts, descending into repeat bodies once."""
        out: dict = {}
        for op in self.ops:
            if isinstance(op, Gate):
                key = op.name if op.name != "NOISE" else f"NOISE {op.kind}"
                size = len(op.targets) // (2 if op.name in _PAIRED or op.kind == "cnot" else 1)
                out[key] = out.get(key, 0) + size
            elif isinstance(op, Repeat) and deep:
                for key, v in op.body.count().items():
                    out[key] = out.get(key, 0) + v
                out["REPEAT"] = out.get("REPEAT", 0) + 1
            else:
                key = type(op).__name__.upper()
                out[key] = out.get(key, 0) + 1
        return out

    def to_text(self) -> str:
        return "\n".join(_dump(self, 0)) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
        circuit, rest = _parse(lines, 0)
        if rest != len(lines):
            raise ValueError(f"unexpected line: {lines[rest]}")
        return circuit


# --- text format ---------------------------------------------------------

def _ranges(values) -> str:
    values = list(values)
    parts = []
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[j + 1] == values[j] + 1:
            j += 1
        parts.append(str(values[i]) if i == j else f"{values[i]}-{values[j]}")
        i = j + 1
    return ",".join(parts)


def _unranges(text: str) -> tuple[int, ...]:
    out = []
    for part in text.split(","):
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _dump(c: Circuit, depth: int) -> list[str]:
    pad = "  " * depth
    lines = [] if depth else [f"CIRCUIT qubits={c.num_qubits} slots={c.num_classical}"]
    for op in c.ops:
        if isinstance(op, Gate):
            if op.name == "NOISE":
                lines.append(f"{pad}NOISE {op.kind} " + " ".join(map(str, op.targets)))
            elif op.name == "MEASZ":
                lines.append(f"{pad}MEASZ " + " ".join(map(str, op.targets)) + " -> " + " ".join(map(str, op.slots)))
            else:
                lines.append(f"{pad}{op.name} " + " ".join(map(str, op.targets)))
        elif isinstance(op, Repeat):
            lines.append(f"{pad}REPEAT max={op.max_attempts} label={op.label or '-'} "
                         f"qubits={op.body.num_qubits}:{_ranges(op.qubits)} slots={op.body.num_classical} {{")
            lines.extend(_dump(op.body, depth + 1))
            lines.append(f"{pad}}} UNTIL {op.predicate.to_text()}")
        elif isinstance(op, FeedForward):
            perm = _ranges(op.label_map) if op.label_map is not None else "-"
            src = ";".join(_ranges(s) for s in op.sources)
            dst = ";".join(_ranges(t) for t in op.targets)
            lines.append(f"{pad}FEEDFORWARD {op.pauli} {op.binding.to_text()} L={op.level} "
                         f"combine={op.combine} perm={perm} {src} -> {dst}")
    return lines


_PRED = re.compile(r"(zero|decode|pair)\(([^)]*)\)")


def _parse_predicate(text: str):
    parts = []
    for name, args in _PRED.findall(text):
        if name == "zero":
            parts.append(AllZero(_unranges(args)))
        elif name == "decode":
            b, lvl, zero, slots = args.split(",", 3)
            parts.append(DecodeCheck(_unranges(slots), int(lvl[2:]), Binding.from_text(b), zero == "zero=1"))
        else:
            b, lvl, rest = args.split(",", 2)
            a, c = rest.split(";")
            parts.append(PairCheck(_unranges(a), _unranges(c), int(lvl[2:]), Binding.from_text(b)))
    return parts[0] if len(parts) == 1 else AllOf(tuple(parts))


def _parse(lines: list[str], i: int, header: tuple[int, int] | None = None):
    if header is None:
        m = re.fullmatch(r"CIRCUIT qubits=(\d+) slots=(\d+)", lines[i])
        if not m:
            raise ValueError("missing CIRCUIT header")
        header = (int(m.group(1)), int(m.group(2)))
        i += 1
    c = Circuit(*header)
    while i < len(lines):
        line = lines[i]
        if line.startswith("}"):
            return c, i
        word, _, rest = line.partition(" ")
        if word == "REPEAT":
            m = re.fullmatch(r"max=(\d+) label=(\S+) qubits=(\d+):(\S*) slots=(\d+) \{", rest)
            if not m:
                raise ValueError(f"bad REPEAT line: {line}")
            body, i = _parse(lines, i + 1, (int(m.group(3)), int(m.group(5))))
            end = re.fullmatch(r"\} UNTIL (.*)", lines[i])
            if not end:
                raise ValueError(f"bad REPEAT end: {lines[i]}")
            label = "" if m.group(2) == "-" else m.group(2)
            c.ops.append(Repeat(body, _unranges(m.group(4)), _parse_predicate(end.group(1)), int(m.group(1)), label))
        elif word == "FEEDFORWARD":
            m = re.fullmatch(r"([XZ]) (\S+) L=(\d+) combine=(\w+) perm=(\S+) (\S+) -> (\S+)", rest)
            if not m:
                raise ValueError(f"bad FEEDFORWARD line: {line}")
            perm = None if m.group(5) == "-" else _unranges(m.group(5))
            c.ops.append(FeedForward(
                tuple(_unranges(s) for s in m.group(6).split(";")), int(m.group(3)),
                Binding.from_text(m.group(2)), m.group(1),
                tuple(_unranges(t) for t in m.group(7).split(";")), perm, m.group(4)))
        elif word == "NOISE":
            kind, _, targets = rest.partition(" ")
            c.ops.append(Gate("NOISE", tuple(map(int, targets.split())), (), kind))
        elif word == "MEASZ":
            qs, _, ss = rest.partition("->")
            c.ops.append(Gate("MEASZ", tuple(map(int, qs.split())), tuple(map(int, ss.split()))))
        elif word in GATES:
            c.ops.append(Gate(word, tuple(map(int, rest.split()))))
        else:
            raise ValueError(f"unknown operation line: {line}")
        i += 1
    return c, i
