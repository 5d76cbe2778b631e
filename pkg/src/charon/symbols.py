"""Name resolution shared by the compiler and the high-level certifier.

Every declaration (global, local or parameter) becomes a ``VarInfo`` with a
unique key; every variable reference node is mapped to its ``VarInfo`` by
object identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .frontend import ast as A

SLOT = 4


@dataclass(frozen=True)
class VarInfo:
    key: str
    name: str
    type: A.Type
    is_param: bool
    func: str | None

    @property
    def nslots(self) -> int:
        return len(A.slot_types(self.type))


@dataclass
class Symbols:
    program: A.Program
    vars: list[VarInfo] = field(default_factory=list)  # source order
    funcs: dict[str, A.FuncDef] = field(default_factory=dict)
    refs: dict[int, VarInfo] = field(default_factory=dict)
    decls: dict[int, VarInfo] = field(default_factory=dict)

    def head_order(self) -> list[VarInfo]:
        """Parameters first, then variables, each in source order."""
        return [v for v in self.vars if v.is_param] + [v for v in self.vars if not v.is_param]

    def of(self, node) -> VarInfo:
        return self.refs[id(node)]

    def fp(self) -> dict[str, int]:
        from .certnum import first_primes

        names = list(self.funcs)
        return dict(zip(names, first_primes(len(names))))


def resolve(program: A.Program) -> Symbols:
    sym = Symbols(program)
    taken: dict[str, int] = {}

    def new_info(name: str, t: A.Type, is_param: bool, func: str | None) -> VarInfo:
        base = name if func is None else f"{func}.{name}"
        n = taken.get(base, 0) + 1
        taken[base] = n
        info = VarInfo(base if n == 1 else f"{base}@{n}", name, t, is_param, func)
        sym.vars.append(info)
        return info

    scopes: list[dict[str, VarInfo]] = [{}]

    def lookup(name: str) -> VarInfo:
        for s in reversed(scopes):
            if name in s:
                return s[name]
        raise KeyError(name)

    def expr(e: A.Expr) -> None:
        if isinstance(e, (A.VarRef, A.StructAccess)):
            sym.refs[id(e)] = lookup(e.name if isinstance(e, A.VarRef) else e.base)
        elif isinstance(e, A.ArrayAccess):
            sym.refs[id(e)] = lookup(e.base)
            expr(e.index)
        elif isinstance(e, A.UnaryOp):
            expr(e.operand)
        elif isinstance(e, A.BinaryOp):
            expr(e.lhs)
            expr(e.rhs)
        elif isinstance(e, A.Call):
            expr(e.arg)

    def block(stmts, func: str) -> None:
        scopes.append({})
        for s in stmts:
            stmt(s, func)
        scopes.pop()

    def stmt(s: A.Stmt, func: str) -> None:
        if isinstance(s, A.VarDecl):
            info = new_info(s.name, s.type, False, func)
            sym.decls[id(s)] = info
            scopes[-1][s.name] = info
        elif isinstance(s, A.Assign):
            expr(s.lhs)
            expr(s.rhs)
        elif isinstance(s, (A.Return,)):
            expr(s.value)
        elif isinstance(s, A.ExprStmt):
            expr(s.call)
        elif isinstance(s, A.While):
            expr(s.cond)
            block(s.body, func)
        else:
            expr(s.cond)
            block(s.then, func)
            if isinstance(s, A.IfElse):
                block(s.orelse, func)

    for item in program.items:
        if isinstance(item, A.VarDecl):
            info = new_info(item.name, item.type, False, None)
            sym.decls[id(item)] = info
            scopes[0][item.name] = info
            continue
        sym.funcs[item.name] = item
        scopes.append({})
        if item.param is not None:
            info = new_info(item.param.name, item.param.type, True, item.name)
            sym.decls[id(item.param)] = info
            scopes[-1][item.param.name] = info
        for s in item.body:
            stmt(s, item.name)
        scopes.pop()
    return sym
