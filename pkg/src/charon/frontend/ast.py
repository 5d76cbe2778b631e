"""AST for CharonLang.

Nodes are frozen dataclasses.  Source positions are carried for diagnostics
but excluded from equality, so ``parse(print(ast)) == ast`` holds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

BUILTINS = ("short", "int", "float", "__unknown_type__")


@dataclass(frozen=True)
class BuiltinType:
    name: str


@dataclass(frozen=True)
class ArrayType:
    elem: BuiltinType
    length: int


@dataclass(frozen=True)
class StructField:
    name: str
    type: BuiltinType


@dataclass(frozen=True)
class StructType:
    fields: tuple[StructField, ...]

    def index_of(self, name: str) -> int:
        for i, f in enumerate(self.fields):
            if f.name == name:
                return i
        raise KeyError(name)


Type = Union[BuiltinType, ArrayType, StructType]

SHORT = BuiltinType("short")
INT = BuiltinType("int")
FLOAT = BuiltinType("float")
UNKNOWN = BuiltinType("__unknown_type__")


def slot_types(t: Type) -> list[BuiltinType]:
    """Built-in type of every 4-byte slot of a variable of type ``t``."""
    if isinstance(t, BuiltinType):
        return [t]
    if isinstance(t, ArrayType):
        return [t.elem] * t.length
    return [f.type for f in t.fields]


# --------------------------------------------------------------------------
# expressions

_pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class NumLit:
    value: int | float
    pos: tuple[int, int] | None = _pos


@dataclass(frozen=True)
class VarRef:
    name: str
    pos: tuple[int, int] | None = _pos


@dataclass(frozen=True)
class UnaryOp:
    op: str
    operand: "Expr"
    pos: tuple[int, int] | None = _pos


@dataclass(frozen=True)
class BinaryOp:
    op: str
    lhs: "Expr"
    rhs: "Expr"
    pos: tuple[int, int] | None = _pos


@dataclass(frozen=True)
class ArrayAccess:
    base: str
    index: "Expr"
    pos: tuple[int, int] | None = _pos


@dataclass(frozen=True)
class StructAccess:
    base: str
    field: str
    pos: tuple[int, int] | None = _pos


@dataclass(frozen=True)
class Call:
    callee: str
    arg: "Expr"
    pos: tuple[int, int] | None = _pos


Expr = Union[NumLit, VarRef, UnaryOp, BinaryOp, ArrayAccess, StructAccess, Call]
LValue = Union[VarRef, ArrayAccess, StructAccess]

# --------------------------------------------------------------------------
# statements


@dataclass(frozen=True)
class VarDecl:
    type: Type
    name: str
    pos: tuple[int, int] | None = _pos


@dataclass(frozen=True)
class Assign:
    lhs: LValue
    rhs: Expr
    pos: tuple[int, int] | None = _pos


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple["Stmt", ...]
    pos: tuple[int, int] | None = _pos


@dataclass(frozen=True)
class IfElse:
    cond: Expr
    then: tuple["Stmt", ...]
    orelse: tuple["Stmt", ...]
    pos: tuple[int, int] | None = _pos


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple["Stmt", ...]
    pos: tuple[int, int] | None = _pos


@dataclass(frozen=True)
class Return:
    value: Expr
    pos: tuple[int, int] | None = _pos


@dataclass(frozen=True)
class ExprStmt:
    call: Call
    pos: tuple[int, int] | None = _pos


Stmt = Union[VarDecl, Assign, If, IfElse, While, Return, ExprStmt]


@dataclass(frozen=True)
class Param:
    type: BuiltinType
    name: str


@dataclass(frozen=True)
class FuncDef:
    ret_type: BuiltinType
    name: str
    param: Param | None
    body: tuple[Stmt, ...]
    pos: tuple[int, int] | None = _pos


@dataclass(frozen=True)
class Program:
    """Top-level items in source order: global VarDecls and FuncDefs."""

    items: tuple[Union[VarDecl, FuncDef], ...]

    @property
    def functions(self) -> list[FuncDef]:
        return [i for i in self.items if isinstance(i, FuncDef)]


# --------------------------------------------------------------------------


def _type_nodes(t: Type) -> int:
    if isinstance(t, BuiltinType):
        return 1
    if isinstance(t, ArrayType):
        return 2
    return 1 + len(t.fields)


def _expr_nodes(e: Expr) -> int:
    if isinstance(e, (NumLit, VarRef, StructAccess)):
        return 1
    if isinstance(e, UnaryOp):
        return 1 + _expr_nodes(e.operand)
    if isinstance(e, BinaryOp):
        return 1 + _expr_nodes(e.lhs) + _expr_nodes(e.rhs)
    if isinstance(e, (ArrayAccess,)):
        return 1 + _expr_nodes(e.index)
    if isinstance(e, Call):
        return 1 + _expr_nodes(e.arg)
    raise TypeError(e)


def _block_nodes(stmts) -> int:
    return sum(_stmt_nodes(s) for s in stmts)


def _stmt_nodes(s: Stmt) -> int:
    if isinstance(s, VarDecl):
        return 1 + _type_nodes(s.type)
    if isinstance(s, Assign):
        return 1 + _expr_nodes(s.lhs) + _expr_nodes(s.rhs)
    if isinstance(s, If):
        return 1 + _expr_nodes(s.cond) + _block_nodes(s.then)
    if isinstance(s, IfElse):
        return 1 + _expr_nodes(s.cond) + _block_nodes(s.then) + _block_nodes(s.orelse)
    if isinstance(s, While):
        return 1 + _expr_nodes(s.cond) + _block_nodes(s.body)
    if isinstance(s, Return):
        return 1 + _expr_nodes(s.value)
    if isinstance(s, ExprStmt):
        return 1 + _expr_nodes(s.call)
    raise TypeError(s)


def ast_node_count(node) -> int:
    """Count Type, Expr, Stmt, Param and FuncDef nodes; the Program root is not counted."""
    if isinstance(node, Program):
        return sum(ast_node_count(i) for i in node.items)
    if isinstance(node, FuncDef):
        n = 1 + 1 + _block_nodes(node.body)
        if node.param is not None:
            n += 2
        return n
    if isinstance(node, (BuiltinType, ArrayType, StructType)):
        return _type_nodes(node)
    if isinstance(node, (VarDecl, Assign, If, IfElse, While, Return, ExprStmt)):
        return _stmt_nodes(node)
    return _expr_nodes(node)
