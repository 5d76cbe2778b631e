"""Reconstruct the canonical CharonLang program encoded by a certificate.

Stages: classify every factor from its symbolic exponent, decide the shape of
each variable (scalar, struct, or array when any dynamic index is used),
rebuild statements from the reverse-Polish factor stream with a scope stack,
and rename the last function to ``main``.

Else attachment: a 59 factor closes the innermost ``if`` whose 53 factor is
still open in the current block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .certnum import (
    ARG, CALL, COND, CONSTANT, ELSE_END, FUNC_END, FUNC_START, HALT, IF_END,
    IF_START, PARAM, RETURN, SYMBOL_OPERATOR, SYMBOL_TYPE, VAR_DEF, VAR_USE,
    WHILE_END, WHILE_START, Certificate, Leaf, Tower, cert_equal, first_primes,
    normalize, split_power,
)
from .errors import CanonError
from .frontend import ast as A
from .frontend.parser import parse_source
from .frontend.printer import print_program
from .symbols import SLOT

_PLAIN = {ARG, FUNC_END, RETURN, COND, IF_START, IF_END, ELSE_END, WHILE_START, WHILE_END, HALT}


def _as_pow(t: Tower) -> tuple[int, Tower]:
    sp = split_power(t)
    if sp is not None:
        return sp
    if isinstance(t, Leaf) and t.value >= 2:
        return t.value, Leaf(1)
    raise ValueError("not a power")


def _chain(t: Tower) -> list[int]:
    out = []
    while True:
        sp = split_power(t)
        if sp is None:
            if not isinstance(t, Leaf):
                raise ValueError("tower level is not a prime power")
            out.append(t.value)
            return out
        out.append(sp[0])
        t = sp[1]


def _leaf(t: Tower) -> int:
    if not isinstance(t, Leaf):
        raise ValueError("expected a plain integer")
    return t.value


@dataclass(frozen=True)
class Sym:
    kind: str
    args: tuple = ()


def classify(t: Tower) -> Sym:
    """Map one exponent to a numbering-table row with its parameters."""
    t = normalize(t)
    if isinstance(t, Leaf):
        if t.value in _PLAIN:
            return Sym("plain", (t.value,))
        if t.value in SYMBOL_OPERATOR:
            return Sym("op", (SYMBOL_OPERATOR[t.value],))
    base, exp = _as_pow(t)
    if base == CONSTANT:
        e = _leaf(exp)
        return Sym("const", (e - 1 if e > 0 else e,))
    if base in (VAR_DEF, PARAM):
        types = _chain(exp)
        if any(s not in SYMBOL_TYPE for s in types):
            raise ValueError(f"unknown type symbol in {types}")
        if base == PARAM and (len(types) != 1 or types[0] == 7):
            raise ValueError("parameter must have one concrete type")
        return Sym("def" if base == VAR_DEF else "param", tuple(SYMBOL_TYPE[s] for s in types))
    if base == VAR_USE:
        vp, rest = _as_pow(exp)
        kind, n = _as_pow(rest)
        n = _leaf(n)
        if kind == 2:
            return Sym("use", (vp, n - 1))
        if kind == 3:
            return Sym("dyn", (vp, n))
        raise ValueError("variable usage must be static (2) or dynamic (3)")
    if base == CALL:
        return Sym("call", (_leaf(exp),))
    if base == FUNC_START:
        levels = _chain(exp)
        if len(levels) == 1 and levels[0] in SYMBOL_TYPE:
            return Sym("func", (SYMBOL_TYPE[levels[0]], 0))
        if len(levels) == 2 and levels[0] in SYMBOL_TYPE:
            return Sym("func", (SYMBOL_TYPE[levels[0]], levels[1] - 1))
        raise ValueError("malformed function start")
    raise ValueError(f"unknown exponent base {base}")


@dataclass
class _Var:
    name: str
    types: tuple[str, ...]
    is_param: bool
    dynamic: bool = False

    @property
    def active(self) -> bool:
        return self.is_param or any(t != "__unknown_type__" for t in self.types)

    def decl_type(self) -> A.Type:
        ts = [A.BuiltinType(t) for t in self.types]
        if self.dynamic:
            return A.ArrayType(ts[0], len(ts))
        if len(ts) == 1:
            return ts[0]
        return A.StructType(tuple(A.StructField(f"field_{k}", t) for k, t in enumerate(ts, start=1)))


@dataclass
class _Frame:
    kind: str  # func, then, while, else
    stmts: list = field(default_factory=list)
    cond: A.Expr | None = None
    owner: int = -1  # else frame: index of its If in the parent block


@dataclass
class _Arg:
    expr: A.Expr


class _Canon:
    def __init__(self, cert: Certificate):
        self.cert = cert
        self.syms: list[Sym] = []
        for k, e in enumerate(cert.exponents, start=1):
            try:
                self.syms.append(classify(e))
            except ValueError as err:
                raise CanonError(str(err), k) from None

    def fail(self, msg: str, k: int):
        raise CanonError(msg, k + 1)

    # -- stages 1-2 --------------------------------------------------------

    def head(self) -> int:
        params, defs = [], []
        k = 0
        while k < len(self.syms) and self.syms[k].kind in ("param", "def"):
            s = self.syms[k]
            if s.kind == "param" and defs:
                self.fail("parameter definitions must precede variable definitions", k)
            (params if s.kind == "param" else defs).append(s)
            k += 1
        for j in range(k, len(self.syms)):
            if self.syms[j].kind in ("param", "def"):
                self.fail("definition outside the certificate head", j)
        ordered = [(s, True) for s in params] + [(s, False) for s in defs]
        self.vars = [_Var(f"var_{n}", s.args, p) for n, (s, p) in enumerate(ordered, start=1)]
        active = [v for v in self.vars if v.active]
        self.by_vp = dict(zip(first_primes(len(active)), active))
        for j in range(k, len(self.syms)):
            s = self.syms[j]
            if s.kind == "dyn":
                self.var(s.args[0], j).dynamic = True
        for v in self.vars:
            if v.dynamic and len(set(v.types)) != 1:
                raise CanonError(f"{v.name} is indexed dynamically but has mixed slot types")
        return k

    def var(self, vp: int, k: int) -> _Var:
        v = self.by_vp.get(vp)
        if v is None:
            self.fail(f"no active variable has prime {vp}", k)
        return v

    def use(self, s: Sym, k: int) -> A.Expr:
        if s.kind == "dyn":
            v, idx = self.var(s.args[0], k), self.var(s.args[1], k)
            if len(idx.types) != 1 or idx.types[0] not in ("int", "short"):
                self.fail(f"{idx.name} cannot index an array", k)
            return A.ArrayAccess(v.name, A.VarRef(idx.name))
        v, off = self.var(s.args[0], k), s.args[1]
        if off < 0 or off % SLOT or off // SLOT >= len(v.types):
            self.fail(f"offset {off} out of range for {v.name}", k)
        slot = off // SLOT
        if v.types[slot] == "__unknown_type__":
            self.fail(f"use of an untyped slot of {v.name}", k)
        if v.dynamic:
            return A.ArrayAccess(v.name, A.NumLit(slot))
        if len(v.types) == 1:
            return A.VarRef(v.name)
        return A.StructAccess(v.name, f"field_{slot + 1}")

    # -- stage 3 -----------------------------------------------------------

    def flush(self, stack: list, k: int, keep: int = 0) -> None:
        """Emit every leftover call below the top ``keep`` entries as a call statement."""
        rest = stack[: len(stack) - keep]
        for e in rest:
            if not isinstance(e, A.Call):
                self.fail("expression left without a consuming statement", k)
            self.frames[-1].stmts.append(A.ExprStmt(e))
        del stack[: len(stack) - keep]

    def dissolve(self, until: str, k: int) -> _Frame:
        while self.frames and self.frames[-1].kind == "else":
            f = self.frames.pop()
            self.frames[-1].stmts.extend(f.stmts)
        if not self.frames or self.frames[-1].kind != until:
            self.fail(f"unbalanced scope: expected to close {until}", k)
        return self.frames.pop()

    def pop(self, stack: list, n: int, k: int) -> list:
        if len(stack) < n or any(isinstance(e, _Arg) for e in stack[-n:]):
            self.fail("stack underflow", k)
        out = stack[-n:]
        del stack[-n:]
        return out

    def body(self, start: int) -> list[A.FuncDef]:
        funcs: list[A.FuncDef] = []
        params = [v for v in self.vars if v.is_param]
        stack: list = []
        self.frames: list[_Frame] = []
        fn: tuple | None = None
        cond_open = False
        syms = self.syms
        for k in range(start, len(syms)):
            s = syms[k]
            if fn is None and s.kind not in ("func", "op") and not (s.kind == "plain" and s.args[0] == HALT):
                self.fail("factor outside any function", k)
            if s.kind == "const":
                stack.append(A.NumLit(s.args[0]))
            elif s.kind in ("use", "dyn"):
                stack.append(self.use(s, k))
            elif s.kind == "op":
                op = s.args[0]
                if op == "=":
                    lhs, rhs = self.pop(stack, 2, k)
                    if not isinstance(lhs, (A.VarRef, A.ArrayAccess, A.StructAccess)):
                        self.fail("assignment target is not a variable", k)
                    self.flush(stack, k)
                    self.frames[-1].stmts.append(A.Assign(lhs, rhs))
                elif op == "!":
                    (x,) = self.pop(stack, 1, k)
                    stack.append(A.UnaryOp("!", x))
                else:
                    a, b = self.pop(stack, 2, k)
                    stack.append(A.BinaryOp(op, a, b))
            elif s.kind == "call":
                if not stack or not isinstance(stack[-1], _Arg):
                    self.fail("call without an argument", k)
                fp = s.args[0]
                if fp not in self.func_by_fp or self.func_by_fp[fp] >= len(funcs):
                    self.fail(f"call to undefined function prime {fp}", k)
                stack.append(A.Call(funcs[self.func_by_fp[fp]].name, stack.pop().expr))
            elif s.kind == "func":
                if self.frames:
                    self.fail("function starts inside another function", k)
                ret, nparams = s.args
                if nparams not in (0, 1) or ret == "__unknown_type__":
                    self.fail("unsupported function signature", k)
                param = None
                if nparams:
                    if not params:
                        self.fail("more parameterized functions than parameters", k)
                    pv = params.pop(0)
                    param = A.Param(A.BuiltinType(pv.types[0]), pv.name)
                fn = (A.BuiltinType(ret), f"func_{len(funcs) + 1}", param)
                self.frames.append(_Frame("func"))
            else:
                code = s.args[0]
                if code == ARG:
                    (x,) = self.pop(stack, 1, k)
                    stack.append(_Arg(x))
                elif code == RETURN:
                    (x,) = self.pop(stack, 1, k)
                    self.flush(stack, k)
                    self.frames[-1].stmts.append(A.Return(x))
                elif code == COND:
                    self.flush(stack, k)
                    cond_open = True
                elif code in (IF_START, WHILE_START):
                    if not cond_open or len(stack) != 1 or isinstance(stack[0], _Arg):
                        self.fail("guard must be exactly one expression after a 43 factor", k)
                    cond_open = False
                    self.frames.append(_Frame("then" if code == IF_START else "while", cond=stack.pop()))
                elif code == IF_END:
                    self.flush(stack, k)
                    f = self.dissolve("then", k)
                    parent = self.frames[-1]
                    parent.stmts.append(A.If(f.cond, tuple(f.stmts)))
                    self.frames.append(_Frame("else", owner=len(parent.stmts) - 1))
                elif code == ELSE_END:
                    self.flush(stack, k)
                    if not self.frames or self.frames[-1].kind != "else":
                        self.fail("else end without an open if", k)
                    f = self.frames.pop()
                    parent = self.frames[-1]
                    head = parent.stmts[f.owner]
                    parent.stmts[f.owner] = A.IfElse(head.cond, head.then, tuple(f.stmts))
                elif code == WHILE_END:
                    self.flush(stack, k)
                    f = self.dissolve("while", k)
                    self.frames[-1].stmts.append(A.While(f.cond, tuple(f.stmts)))
                elif code == FUNC_END:
                    self.flush(stack, k)
                    f = self.dissolve("func", k)
                    if self.frames:
                        self.fail("unbalanced scope at function end", k)
                    funcs.append(A.FuncDef(fn[0], fn[1], fn[2], tuple(f.stmts)))
                    fn = None
                elif code == HALT:
                    if k != len(syms) - 1:
                        self.fail("HALT must be the last factor", k)
                    if fn is not None or stack or self.frames:
                        self.fail("program ends inside a function", k)
            if cond_open and (s.kind == "plain" and s.args[0] not in (COND, ARG) or s.args == ("=",)):
                self.fail("guard interrupted by a statement", k)
        if not syms or syms[-1] != Sym("plain", (HALT,)):
            raise CanonError("certificate must end with HALT", len(syms))
        if params:
            raise CanonError("parameter definitions left without a function")
        return funcs

    def run(self) -> A.Program:
        start = self.head()
        nfuncs = sum(1 for s in self.syms if s.kind == "func")
        self.func_by_fp = dict(zip(first_primes(nfuncs), range(nfuncs)))
        funcs = self.body(start)
        if not funcs:
            raise CanonError("certificate defines no function")
        old = funcs[-1].name
        funcs = [_rename(f, old, "main") for f in funcs]
        decls = [A.VarDecl(v.decl_type(), v.name) for v in self.vars if not v.is_param]
        return A.Program(tuple(decls) + tuple(funcs))


def _rename(f: A.FuncDef, old: str, new: str) -> A.FuncDef:
    return A.FuncDef(f.ret_type, new if f.name == old else f.name, f.param, f.body)


def canon_ast(cert: Certificate) -> A.Program:
    return _Canon(cert).run()


def canon(cert: Certificate) -> str:
    """Canonical source text for ``cert``; raises CanonError on malformed input."""
    return print_program(canon_ast(cert))


def canonical_program(program: A.Program) -> A.Program:
    from .cert_high import cert_high

    return parse_source(canon(cert_high(program)), allow_unknown=True)


def canon_roundtrip_check(program: A.Program) -> bool:
    """Does the canonical form of ``program`` certify to the same certificate?"""
    from .cert_high import cert_high

    c = cert_high(program)
    return cert_equal(cert_high(parse_source(canon(c), allow_unknown=True)), c)
