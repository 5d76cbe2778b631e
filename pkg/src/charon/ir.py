"""CharonIR: instructions, data section, programs and their text format.

Text format::

    .data
    <addr> <len>        one line per variable, ascending addresses
    .text
    <label>:            on its own line, before the labelled instruction
    <OPCODE> <operands> registers r<N>/zero/arg/ret/addr, decimal immediates
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from .errors import IRError

PREDEFINED = ("zero", "arg", "ret", "addr")

# operand shapes: R register, I immediate, L label
_RRR = "RRR"
_RR = "RR"
ARITY: dict[str, str] = {
    **{op: _RRR for op in (
        "ADD", "SUB", "MULT", "DIV", "MOD", "EQ", "NEQ", "LT", "GT", "AND", "OR",
        "BITAND", "BITOR", "LSHIFT", "RSHIFT",
        "ADDF", "SUBF", "MULTF", "DIVF", "MODF", "EQF", "NEQF", "LTF", "GTF",
    )},
    **{op: _RR for op in (
        "NOT", "NOTF", "LOAD", "LOADF", "STORE", "STOREF", "MOV",
        "FPTOSI", "SIGNEXT", "SITOFP", "TRUNC",
    )},
    "CONSTANT": "RI",
    "JZ": "RI",
    "JAL": "L",
    "JR": "R",
    "HALT": "",
}
OPCODES = frozenset(ARITY)

# opcodes whose first operand is written
DEFINES = frozenset(
    op for op, shape in ARITY.items() if shape in (_RRR, _RR, "RI") and op not in ("STORE", "STOREF", "JZ")
)

_REG_RE = re.compile(r"^(r(0|[1-9]\d*)|zero|arg|ret|addr)$")
_LABEL_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_IMM_RE = re.compile(r"^-?\d+$")


@dataclass(frozen=True)
class Reg:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Label:
    name: str

    def __str__(self) -> str:
        return self.name


Operand = Union[Reg, int, Label]

ZERO, ARG, RET, ADDR = (Reg(n) for n in PREDEFINED)


def temp(n: int) -> Reg:
    return Reg(f"r{n}")


def is_temp(r: Reg) -> bool:
    return r.name not in PREDEFINED


@dataclass(frozen=True)
class Instruction:
    op: str
    args: tuple[Operand, ...] = ()

    def __post_init__(self) -> None:
        shape = ARITY.get(self.op)
        if shape is None:
            raise IRError(f"unknown opcode {self.op!r}")
        if len(shape) != len(self.args):
            raise IRError(f"{self.op} takes {len(shape)} operands, got {len(self.args)}")
        for kind, a in zip(shape, self.args):
            ok = (
                isinstance(a, Reg) if kind == "R"
                else isinstance(a, Label) if kind == "L"
                else isinstance(a, int) and not isinstance(a, bool)
            )
            if not ok:
                raise IRError(f"{self.op}: bad operand {a!r}")

    @property
    def dest(self) -> Reg | None:
        return self.args[0] if self.op in DEFINES else None  # type: ignore[return-value]

    @property
    def sources(self) -> tuple[Reg, ...]:
        regs = tuple(a for a in self.args if isinstance(a, Reg))
        return regs[1:] if self.op in DEFINES else regs

    def __str__(self) -> str:
        return " ".join([self.op, *(str(a) for a in self.args)])


def I(op: str, *args: Operand) -> Instruction:  # noqa: E743
    return Instruction(op, tuple(args))


@dataclass(frozen=True)
class DataSection:
    entries: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(tuple(e) for e in self.entries))

    @property
    def size(self) -> int:
        return sum(n for _, n in self.entries)


@dataclass
class IRProgram:
    instructions: list[Instruction]
    labels: dict[str, int] = field(default_factory=dict)
    data: DataSection = field(default_factory=DataSection)

    def __len__(self) -> int:
        return len(self.instructions)

    def labels_at(self) -> dict[int, list[str]]:
        at: dict[int, list[str]] = {}
        for name, idx in self.labels.items():
            at.setdefault(idx, []).append(name)
        return at


def serialize(p: IRProgram) -> str:
    out = [".data"]
    out += [f"{a} {n}" for a, n in p.data.entries]
    out.append(".text")
    at = p.labels_at()
    for i, ins in enumerate(p.instructions):
        out += [f"{name}:" for name in at.get(i, [])]
        out.append(str(ins))
    out += [f"{name}:" for name in at.get(len(p.instructions), [])]
    return "\n".join(out) + "\n"


def _operand(kind: str, tok: str, line: int) -> Operand:
    if kind == "R":
        if not _REG_RE.match(tok):
            raise IRError(f"expected register, got {tok!r}", line)
        return Reg(tok)
    if kind == "I":
        if not _IMM_RE.match(tok):
            raise IRError(f"expected integer immediate, got {tok!r}", line)
        return int(tok)
    if not _LABEL_RE.match(tok) or tok in OPCODES:
        raise IRError(f"expected label, got {tok!r}", line)
    return Label(tok)


def parse_ir(text: str) -> IRProgram:
    """Inverse of ``serialize``; raises IRError with a 1-based line number."""
    instrs: list[Instruction] = []
    labels: dict[str, int] = {}
    entries: list[tuple[int, int]] = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line in (".data", ".text"):
            if (section, line) not in ((None, ".data"), (".data", ".text")):
                raise IRError(f"unexpected section {line}", lineno)
            section = line
            continue
        if section == ".data":
            parts = line.split()
            if len(parts) != 2 or not all(_IMM_RE.match(x) for x in parts):
                raise IRError("data entry must be '<addr> <len>'", lineno)
            entries.append((int(parts[0]), int(parts[1])))
            continue
        if section != ".text":
            raise IRError("content before .data", lineno)
        if line.endswith(":"):
            name = line[:-1]
            if not _LABEL_RE.match(name) or name in OPCODES:
                raise IRError(f"bad label {name!r}", lineno)
            if name in labels:
                raise IRError(f"duplicate label {name!r}", lineno)
            labels[name] = len(instrs)
            continue
        op, *toks = line.split()
        shape = ARITY.get(op)
        if shape is None:
            raise IRError(f"unknown opcode {op!r}", lineno)
        if len(toks) != len(shape):
            raise IRError(f"{op} takes {len(shape)} operands, got {len(toks)}", lineno)
        instrs.append(Instruction(op, tuple(_operand(k, t, lineno) for k, t in zip(shape, toks))))
    if section != ".text":
        raise IRError("missing .text section")
    return IRProgram(instrs, labels, DataSection(tuple(entries)))


def validate(p: IRProgram) -> None:
    """Check structural invariants; raises IRError naming the instruction index."""
    nxt = 0
    for addr, n in p.data.entries:
        if addr != nxt or n <= 0:
            raise IRError(f"data entry ({addr}, {n}) is not contiguous from 0")
        nxt = addr + n
    size = len(p.instructions)
    for name, idx in p.labels.items():
        if not 0 <= idx < size:
            raise IRError(f"label {name!r} points outside the program")
    defined = set(PREDEFINED)
    for i, ins in enumerate(p.instructions):
        for r in ins.sources:
            if r.name not in defined:
                raise IRError(f"instruction {i}: register {r} read before any definition")
        if ins.dest is not None:
            defined.add(ins.dest.name)
        if ins.op == "JAL" and ins.args[0].name not in p.labels:
            raise IRError(f"instruction {i}: unknown label {ins.args[0]}")
        if ins.op == "JZ" and not 0 <= i + 1 + ins.args[1] <= size:
            raise IRError(f"instruction {i}: jump target out of range")
