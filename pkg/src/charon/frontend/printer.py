from __future__ import annotations

from decimal import Decimal

from . import ast as A

INDENT = "    "


def type_prefix(t: A.Type) -> str:
    if isinstance(t, A.BuiltinType):
        return t.name
    if isinstance(t, A.ArrayType):
        return t.elem.name
    inner = " ".join(f"{f.type.name} {f.name};" for f in t.fields)
    return f"struct {{ {inner} }}"


def decl_text(t: A.Type, name: str) -> str:
    if isinstance(t, A.ArrayType):
        return f"{type_prefix(t)} {name}[{t.length}]"
    return f"{type_prefix(t)} {name}"


def literal_text(v: int | float) -> str:
    if isinstance(v, int):
        return str(v)
    text = format(Decimal(repr(v)), "f")
    return text if "." in text else text + ".0"


def expr_text(e: A.Expr) -> str:
    """Render ``e``; nested binary operands are always parenthesized."""
    if isinstance(e, A.NumLit):
        return literal_text(e.value)
    if isinstance(e, A.VarRef):
        return e.name
    if isinstance(e, A.ArrayAccess):
        return f"{e.base}[{expr_text(e.index)}]"
    if isinstance(e, A.StructAccess):
        return f"{e.base}.{e.field}"
    if isinstance(e, A.Call):
        return f"{e.callee}({expr_text(e.arg)})"
    if isinstance(e, A.UnaryOp):
        return f"{e.op}{_operand(e.operand)}"
    return f"{_operand(e.lhs)} {e.op} {_operand(e.rhs)}"


def _operand(e: A.Expr) -> str:
    s = expr_text(e)
    return f"({s})" if isinstance(e, A.BinaryOp) else s


def _block(stmts, depth: int, out: list[str]) -> None:
    for s in stmts:
        _stmt(s, depth, out)


def _stmt(s: A.Stmt, depth: int, out: list[str]) -> None:
    pad = INDENT * depth
    if isinstance(s, A.VarDecl):
        out.append(f"{pad}{decl_text(s.type, s.name)};")
    elif isinstance(s, A.Assign):
        out.append(f"{pad}{expr_text(s.lhs)} = {expr_text(s.rhs)};")
    elif isinstance(s, A.Return):
        out.append(f"{pad}return {expr_text(s.value)};")
    elif isinstance(s, A.ExprStmt):
        out.append(f"{pad}{expr_text(s.call)};")
    elif isinstance(s, A.While):
        out.append(f"{pad}while ({expr_text(s.cond)}) {{")
        _block(s.body, depth + 1, out)
        out.append(f"{pad}}}")
    else:
        out.append(f"{pad}if ({expr_text(s.cond)}) {{")
        _block(s.then, depth + 1, out)
        if isinstance(s, A.IfElse):
            out.append(f"{pad}}} else {{")
            _block(s.orelse, depth + 1, out)
        out.append(f"{pad}}}")


def print_program(p: A.Program) -> str:
    out: list[str] = []
    prev_func = False
    for item in p.items:
        if isinstance(item, A.VarDecl):
            if prev_func:
                out.append("")
            out.append(f"{decl_text(item.type, item.name)};")
            prev_func = False
            continue
        if out:
            out.append("")
        param = "" if item.param is None else f"{item.param.type.name} {item.param.name}"
        out.append(f"{item.ret_type.name} {item.name}({param}) {{")
        _block(item.body, 1, out)
        out.append("}")
        prev_func = True
    return "\n".join(out) + "\n"
