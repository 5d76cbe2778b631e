"""Recursive-descent parser and scope checker for CharonLang."""

from __future__ import annotations

import struct as _struct

from ..errors import ParseError, SemanticError
from . import ast as A
from .lexer import Token, tokenize

INT_MIN, INT_MAX = -(1 << 31), (1 << 31) - 1

# lowest precedence first
_BINARY_LEVELS = (
    ("||",),
    ("&&",),
    ("|",),
    ("&",),
    ("==", "!="),
    ("<", ">"),
    ("<<", ">>"),
    ("+", "-"),
    ("*", "/", "%"),
)

_TYPE_KWS = ("int", "short", "float", "__unknown_type__")


def to_f32(v: float) -> float:
    return _struct.unpack("<f", _struct.pack("<f", v))[0]


class _Scope:
    def __init__(self, parent: "_Scope | None" = None):
        self.parent = parent
        self.names: dict[str, object] = {}

    def lookup(self, name: str):
        s = self
        while s is not None:
            if name in s.names:
                return s.names[name]
            s = s.parent
        return None


class Parser:
    def __init__(self, tokens: list[Token], allow_unknown: bool = False):
        self.toks = tokens
        self.i = 0
        self.allow_unknown = allow_unknown
        self.globals = _Scope()
        self.scope = self.globals
        self.current_fn: str | None = None

    # -- token helpers -----------------------------------------------------

    def peek(self, k: int = 0) -> Token | None:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def _where(self) -> tuple[int, int]:
        t = self.peek()
        if t is not None:
            return t.line, t.col
        if self.toks:
            last = self.toks[-1]
            return last.line, last.col + len(last.text)
        return 1, 1

    def error(self, msg: str) -> ParseError:
        return ParseError(msg, *self._where())

    def at(self, text: str) -> bool:
        t = self.peek()
        return t is not None and t.text == text and t.kind in ("op", "punct", "kw")

    def accept(self, text: str) -> Token | None:
        if self.at(text):
            self.i += 1
            return self.toks[self.i - 1]
        return None

    def expect(self, text: str) -> Token:
        tok = self.accept(text)
        if tok is None:
            t = self.peek()
            got = "end of input" if t is None else repr(t.text)
            raise self.error(f"expected {text!r}, got {got}")
        return tok

    def ident(self) -> Token:
        t = self.peek()
        if t is None or t.kind != "ident":
            raise self.error("expected identifier")
        self.i += 1
        return t

    # -- declarations ------------------------------------------------------

    def builtin(self) -> A.BuiltinType:
        t = self.peek()
        if t is None or t.kind != "kw" or t.text not in _TYPE_KWS:
            raise self.error("expected a type")
        if t.text == "__unknown_type__" and not self.allow_unknown:
            raise SemanticError("__unknown_type__ is only valid in canonical programs", t.line, t.col)
        self.i += 1
        self._no_pointer()
        return A.BuiltinType(t.text)

    def _no_pointer(self) -> None:
        if self.at("*"):
            t = self.peek()
            raise SemanticError("pointers are not supported", t.line, t.col)

    def type_(self) -> A.Type:
        if self.at("struct"):
            start = self.expect("struct")
            self.expect("{")
            fields: list[A.StructField] = []
            seen: set[str] = set()
            while not self.at("}"):
                ft = self.builtin()
                fname = self.ident()
                if fname.text in seen:
                    raise SemanticError(f"duplicate field {fname.text!r}", fname.line, fname.col)
                seen.add(fname.text)
                fields.append(A.StructField(fname.text, ft))
                self.expect(";")
            self.expect("}")
            if not fields:
                raise SemanticError("struct needs at least one field", start.line, start.col)
            self._no_pointer()
            return A.StructType(tuple(fields))
        return self.builtin()

    def _at_type(self) -> bool:
        t = self.peek()
        return t is not None and t.kind == "kw" and (t.text in _TYPE_KWS or t.text == "struct")

    def declare(self, name: Token, what: object) -> None:
        if self.scope.lookup(name.text) is not None:
            raise SemanticError(f"redeclaration of {name.text!r}", name.line, name.col)
        self.scope.names[name.text] = what

    def var_decl_rest(self, ty: A.Type, name: Token) -> A.VarDecl:
        if self.accept("["):
            n = self.peek()
            if n is None or n.kind != "int":
                raise self.error("array length must be an integer literal")
            self.i += 1
            if not isinstance(ty, A.BuiltinType):
                raise SemanticError("array elements must have a built-in type", n.line, n.col)
            if n.value < 1:
                raise SemanticError("array length must be positive", n.line, n.col)
            ty = A.ArrayType(ty, n.value)
            self.expect("]")
        self.expect(";")
        decl = A.VarDecl(ty, name.text, pos=(name.line, name.col))
        self.declare(name, decl)
        return decl

    def program(self) -> A.Program:
        items: list[A.VarDecl | A.FuncDef] = []
        while self.peek() is not None:
            ty = self.type_()
            name = self.ident()
            if self.at("("):
                if not isinstance(ty, A.BuiltinType):
                    raise SemanticError("function return type must be built-in", name.line, name.col)
                items.append(self.func_def(ty, name))
            else:
                items.append(self.var_decl_rest(ty, name))
        funcs = [f for f in items if isinstance(f, A.FuncDef)]
        if not funcs or funcs[-1].name != "main":
            line, col = self._where()
            raise SemanticError("the last function must be main", line, col)
        return A.Program(tuple(items))

    def func_def(self, ret: A.BuiltinType, name: Token) -> A.FuncDef:
        self.expect("(")
        param = None
        if not self.at(")"):
            ptype = self.builtin()
            pname = self.ident()
            param = A.Param(ptype, pname.text)
            if self.at(","):
                raise self.error("functions take at most one parameter")
        self.expect(")")
        fn = A.FuncDef(ret, name.text, param, (), pos=(name.line, name.col))
        self.declare(name, fn)
        self.current_fn = name.text
        self.scope = _Scope(self.globals)
        if param is not None:
            self.scope.names[param.name] = param
            if self.globals.lookup(param.name) is not None:
                raise SemanticError(f"parameter {param.name!r} shadows a global", name.line, name.col)
        body = self.block(new_scope=False)
        self.scope = self.globals
        self.current_fn = None
        if not _returns(body):
            raise SemanticError(f"function {name.text!r} may end without return", name.line, name.col)
        fn = A.FuncDef(ret, name.text, param, body, pos=(name.line, name.col))
        self.globals.names[name.text] = fn
        return fn

    # -- statements --------------------------------------------------------

    def block(self, new_scope: bool = True) -> tuple[A.Stmt, ...]:
        self.expect("{")
        if new_scope:
            self.scope = _Scope(self.scope)
        stmts = []
        while not self.at("}"):
            if self.peek() is None:
                raise self.error("unterminated block")
            stmts.append(self.statement())
        self.expect("}")
        if new_scope:
            self.scope = self.scope.parent
        return tuple(stmts)

    def statement(self) -> A.Stmt:
        t = self.peek()
        pos = (t.line, t.col)
        if self._at_type():
            ty = self.type_()
            return self.var_decl_rest(ty, self.ident())
        if self.accept("if"):
            cond = self.paren_cond()
            then = self.block()
            if self.accept("else"):
                return A.IfElse(cond, then, self.block(), pos=pos)
            return A.If(cond, then, pos=pos)
        if self.accept("while"):
            cond = self.paren_cond()
            return A.While(cond, self.block(), pos=pos)
        if self.accept("return"):
            e = self.expr()
            self.expect(";")
            return A.Return(e, pos=pos)
        if t.kind == "ident":
            if self.peek(1) is not None and self.peek(1).text == "(":
                call = self.primary()
                self.expect(";")
                return A.ExprStmt(call, pos=pos)
            lhs = self.lvalue()
            self.expect("=")
            rhs = self.expr()
            self.expect(";")
            return A.Assign(lhs, rhs, pos=pos)
        if t.text == "*":
            raise SemanticError("pointers are not supported", t.line, t.col)
        raise self.error(f"unexpected {t.text!r}")

    def paren_cond(self) -> A.Expr:
        self.expect("(")
        e = self.expr()
        self.expect(")")
        return e

    def lvalue(self) -> A.LValue:
        e = self.primary()
        if isinstance(e, (A.VarRef, A.ArrayAccess, A.StructAccess)):
            return e
        raise self.error("invalid assignment target")

    # -- expressions -------------------------------------------------------

    def expr(self, level: int = 0) -> A.Expr:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        lhs = self.expr(level + 1)
        while True:
            t = self.peek()
            if t is None or t.kind != "op" or t.text not in _BINARY_LEVELS[level]:
                return lhs
            self.i += 1
            rhs = self.expr(level + 1)
            lhs = A.BinaryOp(t.text, lhs, rhs, pos=(t.line, t.col))

    def unary(self) -> A.Expr:
        t = self.peek()
        if t is None:
            raise self.error("expected expression")
        if t.text == "!" and t.kind == "op":
            self.i += 1
            return A.UnaryOp("!", self.unary(), pos=(t.line, t.col))
        if t.text == "-" and t.kind == "op":
            self.i += 1
            n = self.peek()
            if n is None or n.kind not in ("int", "float"):
                raise self.error("unary minus applies only to numeric literals")
            self.i += 1
            return self._literal(n, negate=True)
        if t.text in ("&", "*") and t.kind == "op":
            raise SemanticError("pointers are not supported", t.line, t.col)
        return self.primary()

    def _literal(self, tok: Token, negate: bool = False) -> A.NumLit:
        v = tok.value
        if negate:
            v = -v
        if tok.kind == "int":
            if not INT_MIN <= v <= INT_MAX:
                raise SemanticError(f"integer literal {v} out of 32-bit range", tok.line, tok.col)
        else:
            v = to_f32(v)
        return A.NumLit(v, pos=(tok.line, tok.col))

    def primary(self) -> A.Expr:
        t = self.peek()
        if t is None:
            raise self.error("expected expression")
        if t.kind in ("int", "float"):
            self.i += 1
            return self._literal(t)
        if t.text == "(" and t.kind == "punct":
            nxt = self.peek(1)
            if nxt is not None and nxt.kind == "kw" and (nxt.text in _TYPE_KWS or nxt.text == "struct"):
                raise SemanticError("explicit casts are not supported", t.line, t.col)
            self.i += 1
            e = self.expr()
            self.expect(")")
            return e
        if t.kind != "ident":
            raise self.error(f"unexpected {t.text!r}")
        self.i += 1
        pos = (t.line, t.col)
        target = self.scope.lookup(t.text)
        if t.text == self.current_fn:
            raise SemanticError(f"recursive call to {t.text!r}", *pos)
        if target is None:
            raise SemanticError(f"use of undeclared name {t.text!r}", *pos)
        if self.accept("("):
            if not isinstance(target, A.FuncDef):
                raise SemanticError(f"{t.text!r} is not a function", *pos)
            arg = self.expr()
            if self.at(","):
                raise self.error("functions take exactly one argument")
            self.expect(")")
            if target.param is None:
                raise SemanticError(f"{t.text!r} takes no parameter and cannot be called", *pos)
            return A.Call(t.text, arg, pos=pos)
        if isinstance(target, A.FuncDef):
            raise SemanticError(f"function {t.text!r} used as a value", *pos)
        vtype = target.type
        if self.accept("["):
            if not isinstance(vtype, A.ArrayType):
                raise SemanticError(f"{t.text!r} is not an array", *pos)
            idx = self.expr()
            self.expect("]")
            return A.ArrayAccess(t.text, idx, pos=pos)
        if self.accept("."):
            f = self.ident()
            if not isinstance(vtype, A.StructType):
                raise SemanticError(f"{t.text!r} is not a struct", *pos)
            try:
                vtype.index_of(f.text)
            except KeyError:
                raise SemanticError(f"struct {t.text!r} has no field {f.text!r}", f.line, f.col) from None
            return A.StructAccess(t.text, f.text, pos=pos)
        if not isinstance(vtype, A.BuiltinType):
            raise SemanticError(f"aggregate {t.text!r} must be indexed", *pos)
        return A.VarRef(t.text, pos=pos)


def _returns(block) -> bool:
    for s in block:
        if isinstance(s, A.Return):
            return True
        if isinstance(s, A.IfElse) and _returns(s.then) and _returns(s.orelse):
            return True
    return False


def parse(tokens: list[Token], allow_unknown: bool = False) -> A.Program:
    """Build a checked AST. ``allow_unknown`` admits ``__unknown_type__`` declarations."""
    return Parser(list(tokens), allow_unknown).program()


def parse_source(source: str, allow_unknown: bool = False) -> A.Program:
    return parse(tokenize(source), allow_unknown)
