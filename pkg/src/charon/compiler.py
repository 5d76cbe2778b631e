"""Syntax-directed translation of CharonLang to CharonIR.

Layout: every function in source order under its own label, ``main`` last,
then a single ``HALT``.  Every variable (globals, locals and parameters) is
statically allocated in 4-byte slots in declaration order.  Fresh registers
are numbered ``r0, r1, ...`` in the order their defining instructions are
emitted; no register is written twice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .certnum import first_primes
from .errors import CompileError
from .frontend import ast as A
from .ir import ADDR, ARG, DEFINES, RET, ZERO, DataSection, Instruction, IRProgram, Label, Reg, temp
from .symbols import SLOT, Symbols, VarInfo, resolve

SIZES = {"short": 2, "int": 4, "float": 4}

ARITH = {"+": "ADD", "-": "SUB", "*": "MULT", "/": "DIV", "%": "MOD"}
COMPARE = {"<": "LT", ">": "GT", "==": "EQ", "!=": "NEQ"}
INT_ONLY = {"&&": "AND", "||": "OR", "&": "BITAND", "|": "BITOR", "<<": "LSHIFT", ">>": "RSHIFT"}

# cast chains, keyed by (from, to); "operand" targets only widen
OPERAND_CASTS = {
    ("short", "int"): ("SIGNEXT",),
    ("int", "float"): ("SITOFP",),
    ("short", "float"): ("SIGNEXT", "SITOFP"),
}
STORE_CASTS = {
    ("short", "int"): ("SIGNEXT",),
    ("float", "int"): ("FPTOSI",),
    ("int", "float"): ("SITOFP",),
    ("short", "float"): ("SIGNEXT", "SITOFP"),
    ("int", "short"): ("TRUNC",),
    ("short", "short"): ("SIGNEXT", "TRUNC"),
    ("float", "short"): ("FPTOSI", "TRUNC"),
}


def sizeof(t: A.Type) -> int:
    """Byte size: short 2, int/float 4; aggregate members are padded to 4."""
    if isinstance(t, A.BuiltinType):
        if t.name not in SIZES:
            raise CompileError(f"type {t.name} has no size")
        return SIZES[t.name]
    return SLOT * len(A.slot_types(t))


def storage_size(t: A.Type) -> int:
    """Bytes reserved in the data section: every variable is slot-aligned."""
    return SLOT * len(A.slot_types(t))


def float_free(v) -> int:
    if isinstance(v, float):
        raise CompileError(f"float literal {v} has no certificate encoding")
    return v


@dataclass
class AddrEnv:
    vars: dict[str, int] = field(default_factory=dict)
    next_free: int = 0
    funcs: dict[str, str] = field(default_factory=dict)


@dataclass
class CertEnv:
    c_h_vars: dict[str, int] = field(default_factory=dict)
    c_h_funcs: dict[str, int] = field(default_factory=dict)
    c_l_vars: dict[int, int] = field(default_factory=dict)
    c_l_funcs: dict[str, int] = field(default_factory=dict)


def value_type(e: A.Expr, sym: Symbols) -> str:
    """Static type of an expression: 'short', 'int' or 'float'."""
    if isinstance(e, A.NumLit):
        return "float" if isinstance(e.value, float) else "int"
    if isinstance(e, A.VarRef):
        return sym.of(e).type.name
    if isinstance(e, A.ArrayAccess):
        return sym.of(e).type.elem.name
    if isinstance(e, A.StructAccess):
        t = sym.of(e).type
        return t.fields[t.index_of(e.field)].type.name
    if isinstance(e, A.Call):
        return sym.funcs[e.callee].ret_type.name
    if isinstance(e, A.UnaryOp):
        return "int"
    if e.op in ARITH:
        return "float" if "float" in (value_type(e.lhs, sym), value_type(e.rhs, sym)) else "int"
    return "int"


def static_index(e: A.ArrayAccess, info: VarInfo, sym: Symbols) -> int | VarInfo:
    """Literal slot index, or the scalar variable used as a dynamic index."""
    idx = e.index
    if isinstance(idx, A.NumLit) and isinstance(idx.value, int):
        if not 0 <= idx.value < info.type.length:
            raise CompileError(f"index {idx.value} out of bounds for {e.base}")
        return idx.value
    if isinstance(idx, A.VarRef):
        iv = sym.of(idx)
        if iv.type.name in ("int", "short"):
            return iv
        raise CompileError(f"array index {idx.name} must be int or short")
    raise CompileError("array index must be an integer literal or a scalar variable")


class _Compiler:
    def __init__(self, program: A.Program):
        self.sym = resolve(program)
        self.code: list[Instruction] = []
        self.labels: dict[str, int] = {}
        self.nreg = 0
        self.env = AddrEnv()
        self.used: dict[str, set[int]] = {v.key: set() for v in self.sym.vars}
        self.ret_type = "int"
        for v in self.sym.vars:
            self.env.vars[v.key] = self.env.next_free
            self.env.next_free += storage_size(v.type)

    def emit(self, op: str, *args) -> Reg | None:
        dest = None
        if op in DEFINES:
            dest = temp(self.nreg)
            self.nreg += 1
            args = (dest, *args)
        self.code.append(Instruction(op, tuple(args)))
        return dest

    def cast(self, r: Reg, chain: tuple[str, ...]) -> Reg:
        for op in chain:
            r = self.emit(op, r)
        return r

    # -- addresses ---------------------------------------------------------

    def address(self, e: A.LValue) -> tuple[Reg, str]:
        """Emit the address pattern for ``e``; returns (address reg, slot type)."""
        info = self.sym.of(e)
        base = self.env.vars[info.key]
        if isinstance(e, A.VarRef):
            slot, ty = 0, info.type.name
        elif isinstance(e, A.StructAccess):
            slot = info.type.index_of(e.field)
            ty = info.type.fields[slot].type.name
        else:
            ty = info.type.elem.name
            idx = static_index(e, info, self.sym)
            if isinstance(idx, VarInfo):
                return self.dynamic_address(info, base, idx), ty
            slot = idx
        self.used[info.key].add(slot)
        ra = self.emit("CONSTANT", base)
        rb = self.emit("ADD", ra, ZERO)
        ro = self.emit("CONSTANT", SLOT * slot)
        return self.emit("ADD", rb, ro), ty

    def dynamic_address(self, info: VarInfo, base: int, idx: VarInfo) -> Reg:
        self.used[info.key].update(range(info.nslots))
        self.used[idx.key].add(0)
        ra = self.emit("CONSTANT", base)
        rb = self.emit("ADD", ra, ZERO)
        ya = self.emit("CONSTANT", self.env.vars[idx.key])
        yb = self.emit("ADD", ya, ZERO)
        yo = self.emit("CONSTANT", 0)
        yv = self.emit("ADD", yb, yo)
        y = self.emit("LOAD", yv)
        if idx.type.name == "short":
            y = self.emit("SIGNEXT", self.emit("TRUNC", y))
        rs = self.emit("CONSTANT", SLOT)
        ro = self.emit("MULT", y, rs)
        return self.emit("ADD", rb, ro)

    # -- expressions -------------------------------------------------------

    def expr(self, e: A.Expr) -> tuple[Reg, str]:
        if isinstance(e, A.NumLit):
            return self.emit("CONSTANT", float_free(e.value)), "int"
        if isinstance(e, (A.VarRef, A.ArrayAccess, A.StructAccess)):
            ra, ty = self.address(e)
            if ty == "float":
                return self.emit("LOADF", ra), ty
            r = self.emit("LOAD", ra)
            if ty == "short":
                r = self.emit("TRUNC", r)
            return r, ty
        if isinstance(e, A.Call):
            return self.call(e)
        if isinstance(e, A.UnaryOp):
            r, ty = self.expr(e.operand)
            if ty == "float":
                return self.emit("NOTF", r), "int"
            return self.emit("NOT", self.cast(r, OPERAND_CASTS.get((ty, "int"), ()))), "int"
        return self.binary(e)

    def binary(self, e: A.BinaryOp) -> tuple[Reg, str]:
        lt, rt = value_type(e.lhs, self.sym), value_type(e.rhs, self.sym)
        if e.op in INT_ONLY:
            if "float" in (lt, rt):
                raise CompileError(f"operator {e.op} needs integer operands")
            common, opcode = "int", INT_ONLY[e.op]
        else:
            common = "float" if "float" in (lt, rt) else "int"
            opcode = {**ARITH, **COMPARE}[e.op] + ("F" if common == "float" else "")
        rl, _ = self.expr(e.lhs)
        rl = self.cast(rl, OPERAND_CASTS.get((lt, common), ()))
        rr, _ = self.expr(e.rhs)
        rr = self.cast(rr, OPERAND_CASTS.get((rt, common), ()))
        out = self.emit(opcode, rl, rr)
        return out, ("float" if common == "float" and e.op in ARITH else "int")

    def call(self, e: A.Call) -> tuple[Reg, str]:
        callee = self.sym.funcs[e.callee]
        r, ty = self.expr(e.arg)
        ptype = callee.param.type.name
        r = self.cast(r, STORE_CASTS.get((ty, "int" if ptype == "short" else ptype), ()))
        self.code.append(Instruction("MOV", (ARG, r)))
        self.code.append(Instruction("CONSTANT", (ADDR, len(self.code) + 2)))
        self.code.append(Instruction("JAL", (Label(e.callee),)))
        return self.emit("MOV", RET), callee.ret_type.name

    # -- statements --------------------------------------------------------

    def block(self, stmts) -> None:
        for s in stmts:
            self.stmt(s)

    def cond(self, e: A.Expr) -> Reg:
        r, ty = self.expr(e)
        return self.cast(r, OPERAND_CASTS.get((ty, "int"), ())) if ty == "short" else r

    def jz(self, r: Reg) -> int:
        self.code.append(Instruction("JZ", (r, 0)))
        return len(self.code) - 1

    def patch(self, at: int, imm: int) -> None:
        self.code[at] = Instruction("JZ", (self.code[at].args[0], imm))

    def stmt(self, s: A.Stmt) -> None:
        if isinstance(s, A.VarDecl):
            return
        if isinstance(s, A.Assign):
            ra, ty = self.address(s.lhs)
            r, rt = self.expr(s.rhs)
            r = self.cast(r, STORE_CASTS.get((rt, ty), ()))
            self.code.append(Instruction("STOREF" if ty == "float" else "STORE", (ra, r)))
        elif isinstance(s, A.Return):
            r, rt = self.expr(s.value)
            r = self.cast(r, STORE_CASTS.get((rt, self.ret_type), ()))
            self.code.append(Instruction("MOV", (RET, r)))
            self.code.append(Instruction("JR", (ADDR,)))
        elif isinstance(s, A.ExprStmt):
            self.call(s.call)
        elif isinstance(s, A.If):
            j = self.jz(self.cond(s.cond))
            self.block(s.then)
            self.patch(j, len(self.code) - j - 1)
        elif isinstance(s, A.IfElse):
            j = self.jz(self.cond(s.cond))
            self.block(s.then)
            k = self.jz(ZERO)
            self.patch(j, k - j)
            self.block(s.orelse)
            self.patch(k, len(self.code) - k - 1)
        elif isinstance(s, A.While):
            start = len(self.code)
            j = self.jz(self.cond(s.cond))
            self.block(s.body)
            k = self.jz(ZERO)
            self.patch(j, k - j)
            self.patch(k, start - k - 1)

    def function(self, f: A.FuncDef) -> None:
        self.labels[f.name] = len(self.code)
        self.env.funcs[f.name] = f.name
        self.ret_type = f.ret_type.name
        if f.param is not None:
            info = self.sym.decls[id(f.param)]
            rc = self.emit("CONSTANT", self.env.vars[info.key])
            if info.type.name == "float":
                self.code.append(Instruction("STOREF", (rc, ARG)))
            elif info.type.name == "short":
                rt = self.emit("TRUNC", ARG)
                self.code.append(Instruction("STORE", (rc, rt)))
            else:
                self.code.append(Instruction("STORE", (rc, ARG)))
        self.block(f.body)

    def run(self) -> tuple[IRProgram, AddrEnv, CertEnv]:
        for f in self.sym.funcs.values():
            self.function(f)
        self.code.append(Instruction("HALT"))
        data = DataSection(tuple(
            (self.env.vars[v.key], storage_size(v.type)) for v in self.sym.vars
        ))
        return IRProgram(self.code, self.labels, data), self.env, self.cert_env()

    def cert_env(self) -> CertEnv:
        active = [v for v in self.sym.head_order() if v.is_param or self.used[v.key]]
        env = CertEnv()
        for v, p in zip(active, first_primes(len(active))):
            env.c_h_vars[v.key] = p
            env.c_l_vars[self.env.vars[v.key]] = p
        for name, p in self.sym.fp().items():
            env.c_h_funcs[name] = p
            env.c_l_funcs[self.env.funcs[name]] = p
        return env


def compile_program(program: A.Program) -> tuple[IRProgram, AddrEnv, CertEnv]:
    """Translate a checked AST; returns the IR, address map and prime maps."""
    return _Compiler(program).run()


compile = compile_program  # noqa: A001
