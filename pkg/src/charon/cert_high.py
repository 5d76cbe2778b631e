"""Certificate of a CharonLang AST.

Factors are produced in post-order over expressions, then every definition
factor (parameters first, then variables, each in source order) is moved to
the head and positions are renumbered.
"""

from __future__ import annotations

from .certnum import (
    ARG, COND, ELSE_END, FUNC_END, HALT, IF_END, IF_START, RETURN, TYPE_SYMBOL,
    WHILE_END, WHILE_START, Certificate, Leaf, Tower, call_exp, constant_exp,
    first_primes, func_start_exp, operator_exp, param_exp, var_def_exp,
    var_use_dynamic_exp, var_use_static_exp,
)
from .compiler import CertEnv
from .errors import CertificationError, CompileError
from .frontend import ast as A
from .symbols import SLOT, Symbols, VarInfo, resolve


def _index_of(e: A.ArrayAccess, sym: Symbols) -> int | VarInfo:
    idx = e.index
    if isinstance(idx, A.NumLit) and isinstance(idx.value, int):
        return idx.value
    if isinstance(idx, A.VarRef):
        return sym.of(idx)
    raise CompileError("array index must be an integer literal or a scalar variable")


def slot_usage(sym: Symbols) -> dict[str, set[int]]:
    """Slots touched by any read or write, per variable key."""
    used: dict[str, set[int]] = {v.key: set() for v in sym.vars}

    def expr(e: A.Expr) -> None:
        if isinstance(e, A.VarRef):
            used[sym.of(e).key].add(0)
        elif isinstance(e, A.StructAccess):
            info = sym.of(e)
            used[info.key].add(info.type.index_of(e.field))
        elif isinstance(e, A.ArrayAccess):
            info = sym.of(e)
            idx = _index_of(e, sym)
            if isinstance(idx, VarInfo):
                used[info.key].update(range(info.nslots))
                used[idx.key].add(0)
            else:
                used[info.key].add(idx)
        elif isinstance(e, A.UnaryOp):
            expr(e.operand)
        elif isinstance(e, A.BinaryOp):
            expr(e.lhs)
            expr(e.rhs)
        elif isinstance(e, A.Call):
            expr(e.arg)

    def block(stmts) -> None:
        for s in stmts:
            if isinstance(s, A.Assign):
                expr(s.lhs)
                expr(s.rhs)
            elif isinstance(s, A.Return):
                expr(s.value)
            elif isinstance(s, A.ExprStmt):
                expr(s.call)
            elif isinstance(s, A.While):
                expr(s.cond)
                block(s.body)
            elif isinstance(s, (A.If, A.IfElse)):
                expr(s.cond)
                block(s.then)
                if isinstance(s, A.IfElse):
                    block(s.orelse)

    for f in sym.funcs.values():
        block(f.body)
    return used


def derive_c_h(program: A.Program) -> CertEnv:
    """Variable and function primes computed from the AST alone (no C_L part)."""
    sym = resolve(program)
    used = slot_usage(sym)
    active = [v for v in sym.head_order() if v.is_param or used[v.key]]
    env = CertEnv()
    env.c_h_vars = {v.key: p for v, p in zip(active, first_primes(len(active)))}
    env.c_h_funcs = sym.fp()
    return env


def def_symbols(info: VarInfo, used: set[int]) -> list[int]:
    slots = A.slot_types(info.type)
    return [TYPE_SYMBOL[t.name] if i in used else TYPE_SYMBOL["__unknown_type__"] for i, t in enumerate(slots)]


class _Certifier:
    def __init__(self, program: A.Program, env: CertEnv):
        self.sym = resolve(program)
        self.used = slot_usage(self.sym)
        self.env = env
        self.out: list[Tower] = []
        self.params: list[Tower] = []
        self.defs: list[Tower] = []

    def vp(self, info: VarInfo) -> int:
        try:
            return self.env.c_h_vars[info.key]
        except KeyError:
            raise CertificationError(f"no variable prime for {info.key!r}") from None

    def expr(self, e: A.Expr) -> None:
        out = self.out
        if isinstance(e, A.NumLit):
            if isinstance(e.value, float):
                raise CompileError(f"float literal {e.value} has no certificate encoding")
            out.append(constant_exp(e.value))
        elif isinstance(e, A.VarRef):
            out.append(var_use_static_exp(self.vp(self.sym.of(e)), 0))
        elif isinstance(e, A.StructAccess):
            info = self.sym.of(e)
            out.append(var_use_static_exp(self.vp(info), SLOT * info.type.index_of(e.field)))
        elif isinstance(e, A.ArrayAccess):
            info = self.sym.of(e)
            idx = _index_of(e, self.sym)
            if isinstance(idx, VarInfo):
                out.append(var_use_dynamic_exp(self.vp(info), self.vp(idx)))
            else:
                out.append(var_use_static_exp(self.vp(info), SLOT * idx))
        elif isinstance(e, A.UnaryOp):
            self.expr(e.operand)
            out.append(operator_exp(e.op))
        elif isinstance(e, A.BinaryOp):
            self.expr(e.lhs)
            self.expr(e.rhs)
            out.append(operator_exp(e.op))
        else:
            self.expr(e.arg)
            out.append(Leaf(ARG))
            try:
                out.append(call_exp(self.env.c_h_funcs[e.callee]))
            except KeyError:
                raise CertificationError(f"no function prime for {e.callee!r}") from None

    def block(self, stmts) -> None:
        out = self.out
        for s in stmts:
            if isinstance(s, A.VarDecl):
                info = self.sym.decls[id(s)]
                self.defs.append(var_def_exp(def_symbols(info, self.used[info.key])))
            elif isinstance(s, A.Assign):
                self.expr(s.lhs)
                self.expr(s.rhs)
                out.append(operator_exp("="))
            elif isinstance(s, A.Return):
                self.expr(s.value)
                out.append(Leaf(RETURN))
            elif isinstance(s, A.ExprStmt):
                self.expr(s.call)
            elif isinstance(s, A.While):
                out.append(Leaf(COND))
                self.expr(s.cond)
                out.append(Leaf(WHILE_START))
                self.block(s.body)
                out.append(Leaf(WHILE_END))
            else:
                out.append(Leaf(COND))
                self.expr(s.cond)
                out.append(Leaf(IF_START))
                self.block(s.then)
                out.append(Leaf(IF_END))
                if isinstance(s, A.IfElse):
                    self.block(s.orelse)
                    out.append(Leaf(ELSE_END))

    def run(self) -> Certificate:
        for item in self.sym.program.items:
            if isinstance(item, A.VarDecl):
                info = self.sym.decls[id(item)]
                self.defs.append(var_def_exp(def_symbols(info, self.used[info.key])))
                continue
            nparams = 0 if item.param is None else 1
            self.out.append(func_start_exp(TYPE_SYMBOL[item.ret_type.name], nparams))
            if item.param is not None:
                self.params.append(param_exp([TYPE_SYMBOL[item.param.type.name]]))
            self.block(item.body)
            self.out.append(Leaf(FUNC_END))
        self.out.append(Leaf(HALT))
        return Certificate.from_exponents(self.params + self.defs + self.out)


def cert_high(program: A.Program, env: CertEnv | None = None) -> Certificate:
    """Certificate of ``program``; prime maps are derived from the AST when ``env`` is None."""
    return _Certifier(program, env if env is not None else derive_c_h(program)).run()
