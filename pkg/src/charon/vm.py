"""Interpreter for CharonIR.

Registers are dynamically typed 32-bit cells holding either an int32 or an
f32; an op that needs the other kind reinterprets the bit pattern.  Memory
is a zero-filled byte array sized from the data section.

Calls: ``JAL`` pushes ``addr`` on a link stack and jumps; ``JR`` jumps, pops,
and restores ``addr`` to the new stack top (the HALT index when empty).
Execution starts at ``main`` with ``addr`` pointing at the final HALT.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

from .errors import VMError
from .ir import IRProgram, Label, Reg

DEFAULT_STEPS = 1_000_000
INT_MIN = -(1 << 31)


def wrap32(v: int) -> int:
    v &= 0xFFFFFFFF
    return v - (1 << 32) if v & 0x80000000 else v


def sext16(v: int) -> int:
    v &= 0xFFFF
    return v - (1 << 16) if v & 0x8000 else v


def f32(v: float) -> float:
    try:
        return struct.unpack("<f", struct.pack("<f", v))[0]
    except OverflowError:
        return math.copysign(math.inf, v)


def _bits_to_float(v: int) -> float:
    return struct.unpack("<f", struct.pack("<i", wrap32(v)))[0]


def _float_to_bits(v: float) -> int:
    return struct.unpack("<i", struct.pack("<f", f32(v)))[0]


def as_int(v) -> int:
    return _float_to_bits(v) if isinstance(v, float) else v


def as_float(v) -> float:
    return v if isinstance(v, float) else _bits_to_float(v)


def fptosi(v: float) -> int:
    if math.isnan(v) or math.isinf(v):
        return INT_MIN
    t = int(v)
    return t if INT_MIN <= t < -INT_MIN else INT_MIN


def _div(a: int, b: int) -> int:
    if b == 0:
        raise VMError("integer division by zero")
    q = abs(a) // abs(b)
    return wrap32(q if (a < 0) == (b < 0) else -q)


def _mod(a: int, b: int) -> int:
    if b == 0:
        raise VMError("integer modulo by zero")
    r = abs(a) % abs(b)
    return r if a >= 0 else -r


def _fdiv(a: float, b: float) -> float:
    if b == 0.0:
        if a == 0.0 or math.isnan(a):
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)
    return f32(a / b)


def _fmod(a: float, b: float) -> float:
    try:
        return f32(math.fmod(a, b))
    except ValueError:
        return math.nan


INT_BINOPS = {
    "ADD": lambda a, b: wrap32(a + b),
    "SUB": lambda a, b: wrap32(a - b),
    "MULT": lambda a, b: wrap32(a * b),
    "DIV": _div,
    "MOD": _mod,
    "EQ": lambda a, b: int(a == b),
    "NEQ": lambda a, b: int(a != b),
    "LT": lambda a, b: int(a < b),
    "GT": lambda a, b: int(a > b),
    "AND": lambda a, b: int(a != 0 and b != 0),
    "OR": lambda a, b: int(a != 0 or b != 0),
    "BITAND": lambda a, b: wrap32(a & b),
    "BITOR": lambda a, b: wrap32(a | b),
    "LSHIFT": lambda a, b: wrap32(a << (b & 31)),
    "RSHIFT": lambda a, b: a >> (b & 31),
}
FLOAT_BINOPS = {
    "ADDF": lambda a, b: f32(a + b),
    "SUBF": lambda a, b: f32(a - b),
    "MULTF": lambda a, b: f32(a * b),
    "DIVF": _fdiv,
    "MODF": _fmod,
    "EQF": lambda a, b: int(a == b),
    "NEQF": lambda a, b: int(a != b),
    "LTF": lambda a, b: int(a < b),
    "GTF": lambda a, b: int(a > b),
}
UNOPS = {
    "NOT": lambda v: int(as_int(v) == 0),
    "NOTF": lambda v: int(as_float(v) == 0.0),
    "FPTOSI": lambda v: fptosi(as_float(v)),
    "SITOFP": lambda v: f32(float(as_int(v))),
    "SIGNEXT": lambda v: sext16(as_int(v)),
    "TRUNC": lambda v: sext16(as_int(v)),
    "MOV": lambda v: v,
}


@dataclass
class RunResult:
    value: int | float
    memory: bytes
    steps: int


def run(program: IRProgram, arg: int | float | None = None, step_budget: int = DEFAULT_STEPS) -> RunResult:
    """Execute from ``main`` until HALT; returns ``ret``, final memory and step count."""
    code = program.instructions
    if "main" not in program.labels:
        raise VMError("no main label")
    halt = len(code) - 1
    if not code or code[halt].op != "HALT":
        raise VMError("program must end with HALT")
    mem = bytearray(program.data.size)
    regs: dict[str, int | float] = {"zero": 0, "arg": 0 if arg is None else arg, "ret": 0, "addr": halt}
    links: list[int] = []
    pc = program.labels["main"]
    steps = 0

    def read(r: Reg):
        try:
            return regs[r.name]
        except KeyError:
            raise VMError(f"pc {pc}: register {r} read before write") from None

    def write(r: Reg, v) -> None:
        if r.name != "zero":
            regs[r.name] = v

    def span(a: int) -> slice:
        a = as_int(a)
        if not 0 <= a <= len(mem) - 4:
            raise VMError(f"pc {pc}: memory access at {a} out of bounds")
        return slice(a, a + 4)

    while True:
        if not 0 <= pc < len(code):
            raise VMError(f"pc {pc} outside program")
        steps += 1
        if steps > step_budget:
            raise VMError(f"step budget of {step_budget} exhausted")
        ins = code[pc]
        op, a = ins.op, ins.args
        nxt = pc + 1
        if op in INT_BINOPS:
            write(a[0], INT_BINOPS[op](as_int(read(a[1])), as_int(read(a[2]))))
        elif op in FLOAT_BINOPS:
            write(a[0], FLOAT_BINOPS[op](as_float(read(a[1])), as_float(read(a[2]))))
        elif op in UNOPS:
            write(a[0], UNOPS[op](read(a[1])))
        elif op == "CONSTANT":
            write(a[0], wrap32(a[1]))
        elif op == "LOAD":
            write(a[0], struct.unpack("<i", mem[span(read(a[1]))])[0])
        elif op == "LOADF":
            write(a[0], struct.unpack("<f", mem[span(read(a[1]))])[0])
        elif op == "STORE":
            mem[span(read(a[0]))] = struct.pack("<i", as_int(read(a[1])))
        elif op == "STOREF":
            mem[span(read(a[0]))] = struct.pack("<f", as_float(read(a[1])))
        elif op == "JZ":
            v = read(a[0])
            if v == 0:
                nxt = pc + 1 + a[1]
        elif op == "JAL":
            target: Label = a[0]
            if target.name not in program.labels:
                raise VMError(f"pc {pc}: unknown label {target}")
            links.append(as_int(regs["addr"]))
            nxt = program.labels[target.name]
        elif op == "JR":
            nxt = as_int(read(a[0]))
            if links:
                links.pop()
            regs["addr"] = links[-1] if links else halt
        elif op == "HALT":
            return RunResult(regs["ret"], bytes(mem), steps)
        else:  # pragma: no cover - Instruction rejects unknown opcodes
            raise VMError(f"unknown opcode {op}")
        pc = nxt


def same_value(a, b) -> bool:
    """Bitwise equality for return values (NaN equals NaN)."""
    if isinstance(a, float) or isinstance(b, float):
        return as_int(a) == as_int(b)
    return a == b


def semantic_equiv_check(program, inputs, step_budget: int = DEFAULT_STEPS) -> bool:
    """Does ``program`` return the same values as its canonical form on every input?"""
    from .canon import canonical_program
    from .compiler import compile_program

    original, _, _ = compile_program(program)
    canonical, _, _ = compile_program(canonical_program(program))
    for x in inputs:
        a = run(original, x, step_budget).value
        b = run(canonical, x, step_budget).value
        if not same_value(a, b):
            return False
    return True
