"""Certificate of a CharonIR program.

Four analysis passes feed a single left-to-right pattern matcher:

1. ``map_dependencies``: transitive temporary-register dependencies;
2. ``infer_slot_types`` / ``infer_types``: variable types from load/store evidence;
3. ``analyze_functions``: label scopes, parameter patterns and return types;
4. ``analyze_cond_jumps``: first instruction of every conditional guard.

The matcher accepts only instruction streams of the exact shape the compiler
emits (register numbering, cast chains, jump offsets, call return addresses)
and raises CertificationError at the first instruction that does not fit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .certnum import (
    ARG, COND, ELSE_END, FUNC_END, HALT, IF_END, IF_START, RETURN, TYPE_SYMBOL,
    WHILE_END, WHILE_START, Certificate, Leaf, Tower, call_exp, constant_exp,
    first_primes, func_start_exp, operator_exp, param_exp, var_def_exp,
    var_use_dynamic_exp, var_use_static_exp,
)
from .compiler import ARITH, COMPARE, INT_ONLY, OPERAND_CASTS, STORE_CASTS, CertEnv
from .errors import CertificationError, IRError
from .frontend import ast as A
from .ir import ADDR, ARG as R_ARG, RET, ZERO, Instruction, IRProgram, Label, Reg, is_temp, validate
from .symbols import SLOT

UNKNOWN = "__unknown_type__"

_OPCODE_SYMBOL = {v: k for k, v in {**ARITH, **COMPARE, **INT_ONLY}.items()}
_FLOAT_OPCODE_SYMBOL = {v + "F": k for k, v in {**ARITH, **COMPARE}.items()}
_CASTS = ("SIGNEXT", "TRUNC", "SITOFP", "FPTOSI")

# --------------------------------------------------------------------------
# pass 1


def _arg_sources(code: list[Instruction]) -> dict[int, int]:
    """For every ``MOV R ret`` after a JAL, the index of the ``MOV arg X`` feeding that call."""
    out: dict[int, int] = {}
    last_arg = None
    for i, ins in enumerate(code):
        if ins.op == "MOV" and ins.args[0] == R_ARG:
            last_arg = i
        elif ins.op == "MOV" and ins.args[1] == RET and i >= 2 and code[i - 1].op == "JAL":
            if last_arg is not None:
                out[i] = last_arg
    return out


def _def_sites(code: list[Instruction]) -> list[tuple[int, ...]]:
    """Per instruction, the indices of the most recent definitions of its temporary sources."""
    arg_src = _arg_sources(code)
    latest: dict[Reg, int] = {}
    sites: list[tuple[int, ...]] = []
    for i, ins in enumerate(code):
        srcs = [r for r in ins.sources if is_temp(r)]
        if i in arg_src:
            srcs += [r for r in code[arg_src[i]].sources if is_temp(r)]
        sites.append(tuple(latest[r] for r in srcs if r in latest))
        if ins.dest is not None and is_temp(ins.dest):
            latest[ins.dest] = i
    return sites


def _closures(code: list[Instruction]) -> list[frozenset[int]]:
    sites = _def_sites(code)
    memo: list[frozenset[int]] = []
    for s in sites:
        acc: set[int] = set(s)
        for j in s:
            acc |= memo[j]
        memo.append(frozenset(acc))
    return memo


def map_dependencies(program: IRProgram) -> dict[int, frozenset[Reg]]:
    """Instruction index -> every temporary register it transitively depends on."""
    code = program.instructions
    return {
        i: frozenset(code[j].dest for j in clo if code[j].dest is not None and is_temp(code[j].dest))
        for i, clo in enumerate(_closures(code))
    }


# --------------------------------------------------------------------------
# pass 2


@dataclass
class SlotInfo:
    base: int
    length: int
    slots: list[str]
    dynamic: bool = False


def _entry_for(entries: dict[int, SlotInfo], addr: int) -> SlotInfo | None:
    for e in entries.values():
        if e.base <= addr < e.base + e.length:
            return e
    return None


def _abstract_addresses(code: list[Instruction]) -> dict[int, tuple[str, int]]:
    """Instruction index of each LOAD/STORE -> ('const', addr) or ('based', base)."""
    val: dict[Reg, tuple[str, int]] = {ZERO: ("const", 0)}
    out: dict[int, tuple[str, int]] = {}
    for i, ins in enumerate(code):
        op, a = ins.op, ins.args
        if op in ("LOAD", "LOADF"):
            out[i] = val.get(a[1], ("unknown", 0))
        elif op in ("STORE", "STOREF"):
            out[i] = val.get(a[0], ("unknown", 0))
        d = ins.dest
        if d is None:
            continue
        if op == "CONSTANT":
            val[d] = ("const", a[1])
        elif op == "ADD":
            x, y = val.get(a[1], ("unknown", 0)), val.get(a[2], ("unknown", 0))
            if x[0] == "const" and y[0] == "const":
                val[d] = ("const", x[1] + y[1])
            elif x[0] == "const" and y[0] == "unknown":
                val[d] = ("based", x[1])
            else:
                val[d] = ("unknown", 0)
        else:
            val[d] = ("unknown", 0)
    return out


def infer_slot_types(program: IRProgram) -> dict[int, SlotInfo]:
    """Per data entry, the type of every 4-byte slot ('__unknown_type__' when untouched)."""
    entries = {b: SlotInfo(b, n, [UNKNOWN] * max(1, n // SLOT)) for b, n in program.data.entries}
    for b, n in program.data.entries:
        if n <= 0 or n % SLOT:
            raise CertificationError(f"data entry at {b} has length {n}, not a positive multiple of {SLOT}")
    code = program.instructions
    for i, (kind, v) in _abstract_addresses(code).items():
        ins = code[i]
        if ins.op in ("LOADF", "STOREF"):
            ty = "float"
        elif ins.op == "LOAD":
            nxt, nxt2 = code[i + 1] if i + 1 < len(code) else None, code[i + 2] if i + 2 < len(code) else None
            short = (
                nxt is not None and nxt.op == "TRUNC" and nxt.args[1] == ins.args[0]
                and nxt2 is not None and nxt2.op == "SIGNEXT" and nxt2.args[1] == nxt.args[0]
            )
            ty = "short" if short else "int"
        else:
            prev = code[i - 1] if i > 0 else None
            short = prev is not None and prev.op == "TRUNC" and prev.args[0] == ins.args[1]
            ty = "short" if short else "int"
        if kind == "unknown":
            raise CertificationError("memory access through an untracked address", i)
        entry = entries.get(v) if kind == "based" else _entry_for(entries, v)
        if entry is None:
            raise CertificationError(f"address {v} is outside the data section", i)
        if kind == "based":
            targets = range(len(entry.slots))
            entry.dynamic = True
        else:
            off = v - entry.base
            if off % SLOT:
                raise CertificationError(f"misaligned access at offset {off}", i)
            targets = [off // SLOT]
        for s in targets:
            if entry.slots[s] not in (UNKNOWN, ty):
                raise CertificationError(
                    f"conflicting type evidence for address {entry.base + SLOT * s}: {entry.slots[s]} vs {ty}", i
                )
            entry.slots[s] = ty
    return entries


def type_of_slots(info: SlotInfo) -> A.Type:
    slots = [A.BuiltinType(s) for s in info.slots]
    if info.dynamic:
        return A.ArrayType(slots[0], len(slots))
    if len(slots) == 1:
        return slots[0]
    return A.StructType(tuple(A.StructField(f"field_{k}", t) for k, t in enumerate(slots, start=1)))


def infer_types(program: IRProgram) -> dict[int, A.Type]:
    """Base address -> inferred type (scalar, struct of slots, or array when dynamically indexed)."""
    return {b: type_of_slots(info) for b, info in infer_slot_types(program).items()}


# --------------------------------------------------------------------------
# pass 3


@dataclass
class FuncInfo:
    label: str
    start: int
    end: int  # exclusive
    ret_type: str
    nparams: int
    param_type: str | None = None
    param_addr: int | None = None


def function_scopes(program: IRProgram) -> list[tuple[str, int, int]]:
    code = program.instructions
    if not code or code[-1].op != "HALT":
        raise CertificationError("program must end with HALT", len(code) - 1 if code else None)
    halt = len(code) - 1
    if any(ins.op == "HALT" for ins in code[:halt]):
        raise CertificationError("HALT before the end of the program")
    starts = sorted((idx, name) for name, idx in program.labels.items())
    if not starts and halt == 0:
        return []
    if not starts or starts[0][0] != 0:
        raise CertificationError("instructions outside any function", 0)
    out = []
    for k, (idx, name) in enumerate(starts):
        end = starts[k + 1][0] if k + 1 < len(starts) else halt
        if end <= idx:
            raise CertificationError(f"empty scope for label {name!r}", idx)
        out.append((name, idx, end))
    return out


def _prologue_at(code: list[Instruction], i: int) -> tuple[str, int, int] | None:
    """(param type, address, pattern length) if a parameter-store pattern starts at ``i``."""
    c = code[i]
    if c.op != "CONSTANT" or not is_temp(c.args[0]) or i + 1 >= len(code):
        return None
    rc, nxt = c.args[0], code[i + 1]
    if nxt.op in ("STORE", "STOREF") and nxt.args == (rc, R_ARG):
        return ("float" if nxt.op == "STOREF" else "int"), c.args[1], 2
    if nxt.op == "TRUNC" and nxt.args[1] == R_ARG and i + 2 < len(code):
        st = code[i + 2]
        if st.op == "STORE" and st.args == (rc, nxt.args[0]):
            return "short", c.args[1], 3
    return None


def register_types(code: list[Instruction], rets: dict[str, str], lo: int, hi: int) -> dict[Reg, str]:
    """Forward type of every temporary defined in ``code[lo:hi]``."""
    ty: dict[Reg, str] = {}
    for i in range(lo, hi):
        ins = code[i]
        d, op = ins.dest, ins.op
        if d is None or not is_temp(d):
            continue
        if op == "MOV":
            src = ins.args[1]
            if src == RET:
                prev = code[i - 1] if i > 0 else None
                callee = prev.args[0].name if prev is not None and prev.op == "JAL" else None
                if callee not in rets:
                    raise CertificationError("call result from an unknown or later function", i)
                ty[d] = rets[callee]
            else:
                ty[d] = ty.get(src, "int")
        elif op in ("ADDF", "SUBF", "MULTF", "DIVF", "MODF", "LOADF", "SITOFP"):
            ty[d] = "float"
        elif op == "TRUNC":
            ty[d] = "short"
        else:
            ty[d] = "int"
    return ty


def analyze_functions(program: IRProgram) -> dict[str, FuncInfo]:
    """Per label: scope, parameter count/type/address and inferred return type."""
    code = program.instructions
    out: dict[str, FuncInfo] = {}
    rets: dict[str, str] = {}
    for name, lo, hi in function_scopes(program):
        params = [(i, p) for i in range(lo, hi) if (p := _prologue_at(code, i)) is not None]
        if len(params) > 1:
            raise CertificationError(f"function {name!r} has more than one parameter pattern", params[1][0])
        regty = register_types(code, rets, lo, hi)
        returned: set[str] = set()
        has_jr = False
        for i in range(lo, hi):
            ins = code[i]
            if ins.op == "JR":
                has_jr = True
            if ins.op == "MOV" and ins.args[0] == RET:
                src = ins.args[1]
                if src not in regty:
                    raise CertificationError("return value from an undefined register", i)
                returned.add(regty[src])
        if not has_jr:
            raise CertificationError(f"function {name!r} has no JR terminator", lo)
        if len(returned) != 1:
            raise CertificationError(f"function {name!r} has inconsistent return types {sorted(returned)}", lo)
        info = FuncInfo(name, lo, hi, returned.pop(), len(params))
        if params:
            info.param_type, info.param_addr, _ = params[0][1]
        rets[name] = info.ret_type
        out[name] = info
    return out


# --------------------------------------------------------------------------
# pass 4


def analyze_cond_jumps(program: IRProgram, deps: dict[int, frozenset[Reg]] | None = None) -> dict[int, int]:
    """Guard start index -> index of its conditional JZ."""
    code = program.instructions
    closures = _closures(code)
    out: dict[int, int] = {}
    defined: set[Reg] = set()
    for i, ins in enumerate(code):
        if ins.op == "JZ" and ins.args[0] != ZERO:
            r = ins.args[0]
            if not is_temp(r) or r not in defined:
                raise CertificationError(f"JZ on undefined register {r}", i)
            sites = closures[i]
            start = min(sites) if sites else i
            if start in out:
                raise CertificationError("two conditions share a first instruction", i)
            out[start] = i
        if ins.dest is not None:
            defined.add(ins.dest)
    return out


# --------------------------------------------------------------------------
# C_L derivation


def derive_c_l(program: IRProgram) -> CertEnv:
    """Variable primes by head order over active entries; function primes by label order."""
    slots = infer_slot_types(program)
    funcs = analyze_functions(program)
    param_addrs = {f.param_addr for f in funcs.values() if f.nparams}
    order = sorted(a for a in slots if a in param_addrs) + sorted(a for a in slots if a not in param_addrs)
    active = [a for a in order if a in param_addrs or any(s != UNKNOWN for s in slots[a].slots)]
    env = CertEnv()
    env.c_l_vars = dict(zip(active, first_primes(len(active))))
    labels = [name for name, _, _ in function_scopes(program)]
    env.c_l_funcs = dict(zip(labels, first_primes(len(labels))))
    return env


# --------------------------------------------------------------------------
# matcher


@dataclass
class _Val:
    reg: Reg
    type: str
    casts: list[str] = field(default_factory=list)
    lvalue: bool = False


class _NoMatch(Exception):
    pass


class _Matcher:
    def __init__(self, program: IRProgram, env: CertEnv | None):
        try:
            validate(program)
        except IRError as e:
            raise CertificationError(str(e)) from None
        self.p = program
        self.code = program.instructions
        self.slots = infer_slot_types(program)
        self.funcs = analyze_functions(program)
        self.conds = analyze_cond_jumps(program)
        self.env = env if env is not None else derive_c_l(program)
        self.read_regs = {r for ins in self.code for r in ins.sources}
        self.out: list[Tower] = []
        self.i = 0
        self.nreg = 0
        self.fn: FuncInfo | None = None
        self.func_order = {f.label: k for k, f in enumerate(self.funcs.values())}

    # -- helpers -----------------------------------------------------------

    def fail(self, msg: str, at: int | None = None):
        raise CertificationError(msg, self.i if at is None else at)

    def at(self, k: int = 0) -> Instruction:
        j = self.i + k
        if j >= self.end_limit:
            self.fail("pattern runs past the end of its block", j)
        return self.code[j]

    def take(self, op: str, k: int = 0) -> Instruction:
        ins = self.at(k)
        if ins.op != op:
            self.fail(f"expected {op}, found {ins}", self.i + k)
        return ins

    def fresh(self, ins: Instruction, at: int) -> Reg:
        d = ins.args[0]
        if d.name != f"r{self.nreg}":
            self.fail(f"expected destination r{self.nreg}, found {d}", at)
        self.nreg += 1
        return d

    def vp(self, base: int, at: int) -> int:
        try:
            return self.env.c_l_vars[base]
        except KeyError:
            self.fail(f"no variable prime for address {base}", at)

    # -- head --------------------------------------------------------------

    def head(self) -> list[Tower]:
        params = {f.param_addr: f for f in self.funcs.values() if f.nparams}
        factors_p, factors_v = [], []
        for base in sorted(self.slots):
            info = self.slots[base]
            if base in params:
                f = params[base]
                if len(info.slots) != 1 or info.slots[0] != f.param_type:
                    self.fail(f"parameter at {base} does not match its storage evidence", f.start)
                factors_p.append(param_exp([TYPE_SYMBOL[f.param_type]]))
            else:
                factors_v.append(var_def_exp([TYPE_SYMBOL[s] for s in info.slots]))
        missing = set(params) - set(self.slots)
        if missing:
            self.fail(f"parameter address {sorted(missing)[0]} has no data entry", 0)
        return factors_p + factors_v

    # -- addresses ---------------------------------------------------------

    def _base_pair(self) -> tuple[int, Reg]:
        c = self.take("CONSTANT")
        ra = self.fresh(c, self.i)
        add = self.take("ADD", 1)
        if add.args[1:] != (ra, ZERO):
            self.fail("malformed base materialization", self.i + 1)
        self.i += 1
        rb = self.fresh(add, self.i)
        self.i += 1
        base = c.args[1]
        if base not in self.slots:
            self.fail(f"base address {base} is not a data entry", self.i - 2)
        return base, rb

    def address(self) -> tuple[Reg, int, str, Tower]:
        """Match a static or dynamic address pattern; returns (reg, base, slot type, factor)."""
        start = self.i
        base, rb = self._base_pair()
        info = self.slots[base]
        ins = self.at()
        if ins.op == "CONSTANT" and self.at(1).op == "ADD" and self.at(1).args[1] == rb:
            ro = self.fresh(ins, self.i)
            off = ins.args[1]
            self.i += 1
            add = self.at()
            if add.args[2] != ro:
                self.fail("malformed offset addition")
            rv = self.fresh(add, self.i)
            self.i += 1
            if off < 0 or off % SLOT or off >= info.length:
                self.fail(f"offset {off} invalid for entry at {base}", start + 2)
            return rv, base, info.slots[off // SLOT], var_use_static_exp(self.vp(base, start), off)
        # dynamic: index variable address, load, scale, add
        ybase, yb = self._base_pair()
        yinfo = self.slots[ybase]
        c0 = self.take("CONSTANT")
        if c0.args[1] != 0 or len(yinfo.slots) != 1:
            self.fail("dynamic index must be a scalar variable")
        r0 = self.fresh(c0, self.i)
        self.i += 1
        add = self.take("ADD")
        if add.args[1:] != (yb, r0):
            self.fail("malformed index address")
        yv = self.fresh(add, self.i)
        self.i += 1
        ld = self.take("LOAD")
        if ld.args[1] != yv:
            self.fail("index load from the wrong address")
        y = self.fresh(ld, self.i)
        self.i += 1
        ytype = yinfo.slots[0]
        if ytype == "short":
            for op in ("TRUNC", "SIGNEXT"):
                cast = self.take(op)
                if cast.args[1] != y:
                    self.fail("malformed short index")
                y = self.fresh(cast, self.i)
                self.i += 1
        elif ytype != "int":
            self.fail("index variable must be int or short")
        cs = self.take("CONSTANT")
        if cs.args[1] != SLOT:
            self.fail(f"element size must be {SLOT}")
        rs = self.fresh(cs, self.i)
        self.i += 1
        mul = self.take("MULT")
        if mul.args[1:] != (y, rs):
            self.fail("malformed index scaling")
        ro = self.fresh(mul, self.i)
        self.i += 1
        add = self.take("ADD")
        if add.args[1:] != (rb, ro):
            self.fail("malformed element address")
        rv = self.fresh(add, self.i)
        self.i += 1
        if not info.dynamic or len(set(info.slots)) != 1:
            self.fail(f"array at {base} has inconsistent element types", start)
        return rv, base, info.slots[0], var_use_dynamic_exp(self.vp(base, start), self.vp(ybase, start))

    # -- expressions -------------------------------------------------------

    def check_chain(self, v: _Val, want: tuple[str, ...], at: int) -> None:
        if tuple(v.casts) != want:
            self.fail(f"cast chain {v.casts} does not match expected {list(want)}", at)

    def unit(self, stack: list[_Val]) -> str | None:
        """Consume one pattern; returns a terminator kind or None."""
        ins = self.at()
        op = ins.op
        if op == "CONSTANT" and ins.args[0] != ADDR:
            nxt = self.code[self.i + 1] if self.i + 1 < self.end_limit else None
            if nxt is not None and nxt.op == "ADD" and nxt.args[1:] == (ins.args[0], ZERO):
                rv, base, slot_ty, factor = self.address()
                self.out.append(factor)
                ld = self.code[self.i] if self.i < self.end_limit else None
                if ld is not None and ld.op in ("LOAD", "LOADF") and ld.args[1] == rv:
                    if (ld.op == "LOADF") != (slot_ty == "float"):
                        self.fail("load kind does not match the slot type")
                    r = self.fresh(ld, self.i)
                    self.i += 1
                    if slot_ty == "short":
                        tr = self.take("TRUNC")
                        if tr.args[1] != r:
                            self.fail("short read must truncate the loaded value")
                        r = self.fresh(tr, self.i)
                        self.i += 1
                    stack.append(_Val(r, slot_ty))
                else:
                    if stack:
                        self.fail("assignment target inside an expression")
                    stack.append(_Val(rv, slot_ty, lvalue=True))
                return None
            r = self.fresh(ins, self.i)
            self.out.append(constant_exp(ins.args[1]))
            stack.append(_Val(r, "int"))
            self.i += 1
            return None
        if op in _CASTS:
            if not stack or stack[-1].lvalue or ins.args[1] != stack[-1].reg:
                self.fail(f"{op} does not apply to the current value")
            stack[-1].reg = self.fresh(ins, self.i)
            stack[-1].casts.append(op)
            self.i += 1
            return None
        if op in _OPCODE_SYMBOL or op in _FLOAT_OPCODE_SYMBOL:
            self.binary(stack, ins)
            return None
        if op in ("NOT", "NOTF"):
            if not stack or stack[-1].lvalue or ins.args[1] != stack[-1].reg:
                self.fail(f"{op} operand mismatch")
            v = stack.pop()
            if op == "NOTF":
                if v.type != "float":
                    self.fail("NOTF on a non-float value")
                self.check_chain(v, (), self.i)
            else:
                if v.type == "float":
                    self.fail("NOT on a float value")
                self.check_chain(v, OPERAND_CASTS.get((v.type, "int"), ()), self.i)
            stack.append(_Val(self.fresh(ins, self.i), "int"))
            self.out.append(operator_exp("!"))
            self.i += 1
            return None
        if op == "MOV" and ins.args[0] == R_ARG:
            return self.call(stack)
        if op in ("STORE", "STOREF"):
            if len(stack) != 2 or not stack[0].lvalue or stack[1].lvalue:
                self.fail("store without a matching target and value")
            target, v = stack
            if ins.args != (target.reg, v.reg):
                self.fail("store operands do not match")
            if (op == "STOREF") != (target.type == "float"):
                self.fail("store kind does not match the slot type")
            self.check_chain(v, STORE_CASTS.get((v.type, target.type), ()), self.i)
            self.out.append(operator_exp("="))
            self.i += 1
            return "stmt"
        if op == "MOV" and ins.args[0] == RET:
            if len(stack) != 1 or stack[0].lvalue or ins.args[1] != stack[0].reg:
                self.fail("return of an unexpected value")
            self.check_chain(stack[0], STORE_CASTS.get((stack[0].type, self.fn.ret_type), ()), self.i)
            jr = self.take("JR", 1)
            if jr.args[0] != ADDR:
                self.fail("return must jump to addr", self.i + 1)
            self.out.append(Leaf(RETURN))
            self.i += 2
            return "stmt"
        if op == "JZ":
            return "jz"
        self.fail(f"unexpected {ins}")

    def binary(self, stack: list[_Val], ins: Instruction) -> None:
        if len(stack) < 2 or stack[-1].lvalue or stack[-2].lvalue:
            self.fail(f"{ins.op} needs two operands")
        lhs, rhs = stack[-2], stack[-1]
        if ins.args[1:] != (lhs.reg, rhs.reg):
            self.fail(f"{ins.op} operands do not match")
        is_float = ins.op in _FLOAT_OPCODE_SYMBOL
        sym = _FLOAT_OPCODE_SYMBOL[ins.op] if is_float else _OPCODE_SYMBOL[ins.op]
        types = (lhs.type, rhs.type)
        if sym in INT_ONLY:
            if "float" in types:
                self.fail(f"{ins.op} on a float operand")
            common = "int"
        else:
            common = "float" if "float" in types else "int"
            if is_float != (common == "float"):
                self.fail(f"{ins.op} does not match operand types {types}")
        self.check_chain(lhs, OPERAND_CASTS.get((lhs.type, common), ()), self.i)
        self.check_chain(rhs, OPERAND_CASTS.get((rhs.type, common), ()), self.i)
        del stack[-2:]
        rtype = "float" if common == "float" and sym in ARITH else "int"
        stack.append(_Val(self.fresh(ins, self.i), rtype))
        self.out.append(operator_exp(sym))
        self.i += 1

    def call(self, stack: list[_Val]) -> str | None:
        mv = self.at()
        if not stack or stack[-1].lvalue or mv.args[1] != stack[-1].reg:
            self.fail("argument move of an unexpected value")
        v = stack.pop()
        ca, jal, res = self.at(1), self.at(2), self.at(3)
        if ca.op != "CONSTANT" or ca.args[0] != ADDR or ca.args[1] != self.i + 3:
            self.fail("call must set addr to the instruction after JAL", self.i + 1)
        if jal.op != "JAL":
            self.fail("expected JAL", self.i + 2)
        callee = self.funcs.get(jal.args[0].name)
        if callee is None:
            self.fail(f"call to unknown label {jal.args[0]}", self.i + 2)
        if self.func_order[callee.label] >= self.func_order[self.fn.label]:
            self.fail("call to a function that is not defined earlier", self.i + 2)
        if callee.nparams != 1:
            self.fail("call to a function without a parameter", self.i + 2)
        target = "int" if callee.param_type == "short" else callee.param_type
        self.check_chain(v, STORE_CASTS.get((v.type, target), ()), self.i)
        if res.op != "MOV" or res.args[1] != RET:
            self.fail("call result must be moved out of ret", self.i + 3)
        self.out.append(Leaf(ARG))
        try:
            self.out.append(call_exp(self.env.c_l_funcs[callee.label]))
        except KeyError:
            self.fail(f"no function prime for label {callee.label}")
        self.i += 3
        r = self.fresh(res, self.i)
        self.i += 1
        if not stack and r not in self.read_regs:
            return "stmt"
        stack.append(_Val(r, callee.ret_type))
        return None

    # -- statements --------------------------------------------------------

    def simple(self) -> None:
        stack: list[_Val] = []
        while True:
            kind = self.unit(stack)
            if kind == "stmt":
                return
            if kind == "jz":
                self.fail("conditional jump outside a recognised guard")

    def guard(self, jz_at: int) -> Reg:
        stack: list[_Val] = []
        while self.i < jz_at:
            if self.unit(stack) is not None:
                self.fail("statement terminator inside a guard")
        if self.i != jz_at or len(stack) != 1 or stack[0].lvalue:
            self.fail("guard does not end at its conditional jump")
        v = stack[0]
        self.check_chain(v, ("SIGNEXT",) if v.type == "short" else (), jz_at)
        if self.code[jz_at].args[0] != v.reg:
            self.fail("conditional jump tests the wrong register", jz_at)
        return v.reg

    def block(self, end: int) -> None:
        saved = self.end_limit
        if end > saved:
            self.fail("block extends past its enclosing scope")
        self.end_limit = end
        while self.i < end:
            self.statement()
        if self.i != end:
            self.fail("block boundary mismatch")
        self.end_limit = saved

    def statement(self) -> None:
        s = self.i
        if s not in self.conds:
            self.simple()
            return
        j = self.conds[s]
        if j >= self.end_limit:
            self.fail("guard jump lies outside the block")
        self.out.append(Leaf(COND))
        self.guard(j)
        imm = self.code[j].args[1]
        if imm < 0:
            self.fail("conditional jump must go forward", j)
        k = j + imm
        tail = self.code[k] if imm >= 1 and k < self.end_limit else None
        if tail is not None and tail.op == "JZ" and tail.args[0] == ZERO:
            m = tail.args[1]
            if m < 0 and k + 1 + m == s:
                self.out.append(Leaf(WHILE_START))
                self.i = j + 1
                self.block(k)
                self.out.append(Leaf(WHILE_END))
                self.i = k + 1
                return
            if m >= 0:
                snap = (len(self.out), self.nreg, self.end_limit)
                try:
                    self.out.append(Leaf(IF_START))
                    self.i = j + 1
                    self.block(k)
                    self.out.append(Leaf(IF_END))
                    self.i = k + 1
                    self.block(k + 1 + m)
                    self.out.append(Leaf(ELSE_END))
                    return
                except CertificationError:
                    del self.out[snap[0]:]
                    self.nreg, self.end_limit = snap[1], snap[2]
        self.out.append(Leaf(IF_START))
        self.i = j + 1
        self.block(j + 1 + imm)
        self.out.append(Leaf(IF_END))

    def function(self, f: FuncInfo) -> None:
        self.fn = f
        if self.i != f.start:
            self.fail("function does not start at its label")
        t = TYPE_SYMBOL[f.ret_type]
        self.out.append(func_start_exp(t, f.nparams))
        self.end_limit = f.end
        if f.nparams:
            pro = _prologue_at(self.code, self.i)
            if pro is None:
                self.fail("parameter pattern must open the function")
            self.fresh(self.code[self.i], self.i)
            if pro[0] == "short":
                self.fresh(self.code[self.i + 1], self.i + 1)
            self.i += pro[2]
        self.block(f.end)
        self.out.append(Leaf(FUNC_END))

    def run(self) -> Certificate:
        head = self.head()
        self.end_limit = len(self.code)
        for f in self.funcs.values():
            self.function(f)
        if self.i != len(self.code) - 1:
            self.fail("trailing instructions after the last function")
        self.out.append(Leaf(HALT))
        return Certificate.from_exponents(head + self.out)


def cert_low(program: IRProgram, env: CertEnv | None = None) -> Certificate:
    """Certificate of an IR program; C_L is derived from the IR when ``env`` is None."""
    return _Matcher(program, env).run()
