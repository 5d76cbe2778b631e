"""Random corpus generation and the scaling benchmark.

Generated programs stay inside the subset every stage handles and always
terminate: loops use dedicated counters bounded by 4, divisors are nonzero
literals, shift amounts are literals in 0..7, dynamic indices only ever hold
in-range literals, and no plain ``if`` sits at the top level of an ``else``.
"""

from __future__ import annotations

import csv
import gc
import io
import os
import random
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

from .cert_high import cert_high
from .cert_low import cert_low
from .certnum import cert_to_string
from .compiler import compile_program
from .errors import BenchError, VMError
from .frontend import ast as A
from .frontend.parser import parse_source
from .frontend.printer import print_program
from .vm import run

CSV_HEADER = ("name", "ast_nodes", "ir_instructions", "cert_len_chars", "t_cert_high_ns", "t_cert_low_ns")
DEFAULT_SEED = 1
MAX_DEPTH = 4
LOOP_BOUND = 4
TIMING_RUNS = 21


def env_seed(default: int = DEFAULT_SEED) -> int:
    raw = os.environ.get("CHARON_SEED")
    return int(raw) if raw not in (None, "") else default


# --------------------------------------------------------------------------
# generator


@dataclass
class _Var:
    name: str
    type: A.Type
    role: str = "data"  # data, counter, index


@dataclass
class _Func:
    name: str
    ret: str
    param: A.Param | None


@dataclass
class _Ctx:
    vars: list[_Var]
    funcs: list[_Func]
    depth: int = 0


_INT_OPS = ("&&", "||", "&", "|", "<<", ">>")
_NUM_OPS = ("+", "-", "*", "/", "%", "<", ">", "==", "!=")


class _Generator:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.n = 0
        self.index_len = 2

    def fresh(self, prefix: str) -> str:
        self.n += 1
        return f"{prefix}{self.n}"

    def new_var(self) -> _Var:
        r = self.rng.random()
        if r < 0.45:
            t: A.Type = A.INT
        elif r < 0.6:
            t = A.SHORT
        elif r < 0.72:
            t = A.FLOAT
        elif r < 0.86:
            t = A.ArrayType(self.rng.choice((A.INT, A.INT, A.SHORT, A.FLOAT)), self.rng.randint(2, 5))
        else:
            k = self.rng.randint(2, 4)
            t = A.StructType(tuple(
                A.StructField(f"m{j}", self.rng.choice((A.INT, A.INT, A.SHORT, A.FLOAT))) for j in range(k)
            ))
        return _Var(self.fresh("v"), t)

    # -- expressions -------------------------------------------------------

    def reads(self, ctx: _Ctx, int_only: bool) -> list:
        out = []
        for v in ctx.vars:
            t = v.type
            if isinstance(t, A.BuiltinType):
                if not (int_only and t.name == "float"):
                    out.append(A.VarRef(v.name))
            elif isinstance(t, A.ArrayType):
                if int_only and t.elem.name == "float":
                    continue
                out.append(A.ArrayAccess(v.name, A.NumLit(self.rng.randrange(t.length))))
                idx = self.index_var(ctx)
                if idx is not None:
                    out.append(A.ArrayAccess(v.name, A.VarRef(idx.name)))
            else:
                for f in t.fields:
                    if not (int_only and f.type.name == "float"):
                        out.append(A.StructAccess(v.name, f.name))
        return out

    def index_var(self, ctx: _Ctx) -> _Var | None:
        for v in ctx.vars:
            if v.role == "index":
                return v
        return None

    def literal(self) -> A.NumLit:
        return A.NumLit(self.rng.choice((0, 1, 2, 3, 5, 7, 10, 42, -3, 100)))

    def exact_expr(self, name: str | None, size: int) -> A.Expr:
        """An int expression over ``name`` (literals if None) with exactly ``size`` nodes."""
        leaf = A.VarRef(name) if name else self.literal()
        if size <= 1:
            return leaf
        if size == 2:
            return A.UnaryOp("!", leaf)
        return A.BinaryOp(self.rng.choice(_NUM_OPS[:3]), self.exact_expr(name, size - 2), self.literal())

    def expr(self, ctx: _Ctx, budget: int, int_only: bool = False) -> A.Expr:
        rng = self.rng
        if budget <= 1:
            pool = self.reads(ctx, int_only)
            if pool and rng.random() < 0.6:
                return rng.choice(pool)
            return self.literal()
        choice = rng.random()
        callable_ = [f for f in ctx.funcs if f.param is not None and not (int_only and f.ret == "float")]
        if callable_ and choice < 0.12:
            f = rng.choice(callable_)
            return A.Call(f.name, self.expr(ctx, budget - 1, int_only=f.param.type.name != "float"))
        if choice < 0.2:
            return A.UnaryOp("!", self.expr(ctx, budget - 1, int_only))
        left = rng.randint(1, budget - 1)
        if int_only or rng.random() < 0.3:
            op = rng.choice(_INT_OPS + _NUM_OPS)
        else:
            op = rng.choice(_NUM_OPS)
        sub_int = int_only or op in _INT_OPS
        lhs = self.expr(ctx, left, sub_int)
        if op in ("/", "%"):
            return A.BinaryOp(op, lhs, A.NumLit(rng.choice((1, 2, 3, 7, -5))))
        if op in ("<<", ">>"):
            return A.BinaryOp(op, lhs, A.NumLit(rng.randint(0, 7)))
        return A.BinaryOp(op, lhs, self.expr(ctx, budget - left, sub_int))

    # -- statements --------------------------------------------------------

    def lvalues(self, ctx: _Ctx) -> list:
        out = []
        for v in ctx.vars:
            if v.role != "data":
                continue
            t = v.type
            if isinstance(t, A.BuiltinType):
                out.append(A.VarRef(v.name))
            elif isinstance(t, A.ArrayType):
                out.append(A.ArrayAccess(v.name, A.NumLit(self.rng.randrange(t.length))))
                idx = self.index_var(ctx)
                if idx is not None:
                    out.append(A.ArrayAccess(v.name, A.VarRef(idx.name)))
            else:
                out.extend(A.StructAccess(v.name, f.name) for f in t.fields)
        return out

    def stmt(self, ctx: _Ctx, in_else_top: bool, counters: list[_Var]) -> list[A.Stmt]:
        rng = self.rng
        r = rng.random()
        lvs = self.lvalues(ctx)
        idx = self.index_var(ctx)
        if idx is not None and r < 0.06:
            return [A.Assign(A.VarRef(idx.name), A.NumLit(rng.randrange(self.index_len)))]
        if ctx.depth < MAX_DEPTH and r < 0.3:
            cond = self.expr(ctx, rng.randint(1, 4))
            inner = _Ctx(ctx.vars, ctx.funcs, ctx.depth + 1)
            then = tuple(self.block(inner, rng.randint(1, 2), False, counters))
            if in_else_top or rng.random() < 0.5:
                orelse = tuple(self.block(inner, rng.randint(0, 2), True, counters))
                return [A.IfElse(cond, then, orelse)]
            return [A.If(cond, then)]
        if ctx.depth < MAX_DEPTH and r < 0.42:
            c = _Var(self.fresh("c"), A.INT, "counter")
            counters.append(c)
            inner = _Ctx(ctx.vars + [c], ctx.funcs, ctx.depth + 1)
            body = list(self.block(inner, rng.randint(1, 2), False, counters))
            body.append(A.Assign(A.VarRef(c.name), A.BinaryOp("+", A.VarRef(c.name), A.NumLit(1))))
            cond = A.BinaryOp("<", A.VarRef(c.name), A.NumLit(rng.randint(1, LOOP_BOUND)))
            return [A.Assign(A.VarRef(c.name), A.NumLit(0)), A.While(cond, tuple(body))]
        callable_ = [f for f in ctx.funcs if f.param is not None]
        if callable_ and r < 0.5:
            f = rng.choice(callable_)
            return [A.ExprStmt(A.Call(f.name, self.expr(ctx, 2, f.param.type.name != "float")))]
        if not lvs:
            return [A.ExprStmt(A.Call(callable_[0].name, self.literal()))] if callable_ else []
        lhs = rng.choice(lvs)
        return [A.Assign(lhs, self.expr(ctx, rng.randint(1, 5)))]

    def block(self, ctx: _Ctx, n: int, in_else: bool, counters: list[_Var]) -> list[A.Stmt]:
        out: list[A.Stmt] = []
        for _ in range(n):
            out += self.stmt(ctx, in_else, counters)
        return out

    # -- programs ----------------------------------------------------------

    def program(self, target: int) -> A.Program:
        rng = self.rng
        if target <= 14:
            if target < 8:
                body = (A.Return(self.exact_expr(None, target - 3)),)
                return A.Program((A.FuncDef(A.INT, "main", None, body),))
            # decl 2 + main 2 + assign 3 + return 1 leaves target - 8 nodes for the result
            glob = _Var(self.fresh("v"), A.INT)
            body = (A.Assign(A.VarRef(glob.name), self.literal()), A.Return(self.exact_expr(glob.name, target - 8)))
            return A.Program((A.VarDecl(glob.type, glob.name), A.FuncDef(A.INT, "main", None, body)))
        globals_ = [self.new_var() for _ in range(rng.randint(1, 3))]
        arrays = [v for v in globals_ if isinstance(v.type, A.ArrayType)]
        if arrays and rng.random() < 0.7:
            self.index_len = min(v.type.length for v in arrays)
            globals_.append(_Var(self.fresh("ix"), rng.choice((A.INT, A.SHORT)), "index"))
        funcs: list[_Func] = []
        items: list = []
        counters: list[_Var] = []
        nfuncs = rng.randint(0, min(3, target // 45))
        for _ in range(nfuncs):
            ret = rng.choice(("int", "int", "short", "float"))
            p = A.Param(rng.choice((A.INT, A.SHORT, A.FLOAT)), self.fresh("p"))
            local = self.new_var()
            vars_ = globals_ + [_Var(p.name, p.type), local]
            ctx = _Ctx(vars_, list(funcs), 1)
            body = self.block(ctx, rng.randint(1, 2), False, counters)
            body.append(A.Return(self.expr(ctx, rng.randint(1, 3))))
            name = self.fresh("f")
            decls = [A.VarDecl(local.type, local.name)] + [A.VarDecl(c.type, c.name) for c in counters]
            counters.clear()
            items.append(A.FuncDef(A.BuiltinType(ret), name, p, tuple(decls + body)))
            funcs.append(_Func(name, ret, p))
        mparam = A.Param(A.INT, "x") if rng.random() < 0.7 else None
        mvars = globals_ + ([_Var("x", A.INT)] if mparam else [])
        ctx = _Ctx(mvars, funcs, 0)
        body: list[A.Stmt] = []
        ret = A.Return(self.expr(ctx, rng.randint(1, 3)))

        def assemble() -> A.Program:
            decls = [A.VarDecl(c.type, c.name) for c in counters]
            main = A.FuncDef(A.INT, "main", mparam, tuple(decls + body + [ret]))
            gdecls = [A.VarDecl(v.type, v.name) for v in globals_]
            return A.Program(tuple(gdecls + items + [main]))

        prog = assemble()
        while A.ast_node_count(prog) < target:
            snapshot = (len(body), len(counters))
            body.extend(self.stmt(ctx, False, counters))
            candidate = assemble()
            if A.ast_node_count(candidate) > target * 1.15 + 5 and len(body) > snapshot[0]:
                del body[snapshot[0]:]
                del counters[snapshot[1]:]
                break
            prog = candidate
        return prog


def _terminates(program: A.Program) -> bool:
    ir, _, _ = compile_program(program)
    try:
        for x in (0, 1, -7, 12345):
            run(ir, x)
    except VMError:
        return False
    return True


def gen_corpus(
    seed: int = DEFAULT_SEED,
    count: int = 20,
    size_range: tuple[int, int] = (10, 200),
    out_dir: str | Path | None = None,
    attempts: int = 200,
) -> list[tuple[str, str]]:
    """Reproducible random programs with AST sizes spread across ``size_range``."""
    lo, hi = size_range
    if count < 1 or lo < 4 or hi < lo:
        raise BenchError("invalid corpus parameters")
    rng = random.Random(seed)
    targets = [lo] if count == 1 else [round(lo + (hi - lo) * k / (count - 1)) for k in range(count)]
    out: list[tuple[str, str]] = []
    for k, target in enumerate(targets):
        for _ in range(attempts):
            prog = _Generator(random.Random(rng.getrandbits(64))).program(target)
            size = A.ast_node_count(prog)
            if not lo <= size <= hi or abs(size - target) > max(4, target // 5):
                continue
            text = print_program(prog)
            if parse_source(text) != prog or not _terminates(prog):
                continue
            out.append((f"gen_{seed}_{k:02d}.ch", text))
            break
        else:
            raise BenchError(f"could not generate a program of about {target} nodes")
    if out_dir is not None:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        for name, text in out:
            (d / name).write_text(text)
    return out


# --------------------------------------------------------------------------
# benchmark


@dataclass
class Fit:
    slope: float
    intercept: float
    r2: float


@dataclass
class BenchResult:
    rows: list[dict] = field(default_factory=list)
    fits: dict[str, Fit] = field(default_factory=dict)

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
        w.writeheader()
        w.writerows(self.rows)
        return buf.getvalue()

    def summary(self) -> str:
        return "\n".join(
            f"{pair}: slope={f.slope:.6g} intercept={f.intercept:.6g} R2={f.r2:.4f}" for pair, f in self.fits.items()
        )


def fit(xs: list[float], ys: list[float]) -> Fit:
    """Least-squares line and R^2 (squared Pearson correlation)."""
    slope, intercept = statistics.linear_regression(xs, ys)
    r = statistics.correlation(xs, ys)
    return Fit(slope, intercept, r * r)


def _interleaved_medians(fns: list, runs: int) -> list[int]:
    # Round-robin so a burst of machine load lands on every program alike.
    for fn in fns:
        fn()  # warm caches (prime table) outside the measurement
    samples: list[list[int]] = [[] for _ in fns]
    enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(runs):
            for fn, out in zip(fns, samples):
                t0 = time.perf_counter_ns()
                fn()
                out.append(time.perf_counter_ns() - t0)
    finally:
        if enabled:
            gc.enable()
    return [int(statistics.median(s)) for s in samples]


def bench_sources(sources: list[tuple[str, str]], runs: int = TIMING_RUNS) -> BenchResult:
    if len(sources) < 10:
        raise BenchError(f"benchmark needs at least 10 programs, got {len(sources)}")
    if runs < 20:
        raise BenchError("timings need at least 20 runs")
    res = BenchResult()
    highs, lows = [], []
    for name, text in sources:
        prog = parse_source(text)
        ir, _, env = compile_program(prog)
        cert = cert_high(prog, env)
        res.rows.append({
            "name": name,
            "ast_nodes": A.ast_node_count(prog),
            "ir_instructions": len(ir.instructions),
            "cert_len_chars": len(cert_to_string(cert)),
        })
        highs.append(lambda p=prog, e=env: cert_high(p, e))
        lows.append(lambda i=ir: cert_low(i))
    for row, th, tl in zip(res.rows, _interleaved_medians(highs, runs), _interleaved_medians(lows, runs)):
        row["t_cert_high_ns"] = th
        row["t_cert_low_ns"] = tl
    col = {k: [float(r[k]) for r in res.rows] for k in CSV_HEADER[1:]}
    res.fits = {
        "ast_nodes~cert_len_chars": fit(col["ast_nodes"], col["cert_len_chars"]),
        "ir_instructions~cert_len_chars": fit(col["ir_instructions"], col["cert_len_chars"]),
        "ast_nodes~t_cert_high_ns": fit(col["ast_nodes"], col["t_cert_high_ns"]),
        "ir_instructions~t_cert_low_ns": fit(col["ir_instructions"], col["t_cert_low_ns"]),
    }
    return res


def bench(corpus_dir: str | Path, runs: int = TIMING_RUNS) -> BenchResult:
    """Benchmark every ``.ch`` file in ``corpus_dir`` (sorted by name)."""
    files = sorted(Path(corpus_dir).glob("*.ch"))
    return bench_sources([(f.name, f.read_text()) for f in files], runs)
