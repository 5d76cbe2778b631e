import math
import random

import pytest

from charon.compiler import compile_program
from charon.errors import VMError
from charon.frontend import parse_source
from charon.ir import ARG, RET, ZERO, DataSection, I, IRProgram, temp
from charon.vm import run, same_value, semantic_equiv_check


def run_src(src, arg=None, **kw):
    ir, _, _ = compile_program(parse_source(src))
    return run(ir, arg, **kw).value


def hand_gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def test_gcd(gcd_source):
    assert hand_gcd(48, 18) == 6
    assert run_src(gcd_source) == 6


def test_return_zero():
    assert run_src("int main(){return 0;}") == 0


def test_infinite_loop_hits_budget():
    with pytest.raises(VMError, match="budget"):
        run_src("int main(){ while (1) { } return 0; }", step_budget=10_000)


def test_main_parameter():
    assert run_src("int main(int x) { return x * 2 + 1; }", 20) == 41


@pytest.mark.parametrize(
    "expr,expected",
    [
        ("-7 / 2", -3),
        ("-7 % 2", -1),
        ("7 % -2", 1),
        ("2147483647 + 1", -2147483648),
        ("1 << 31", -2147483648),
        ("-8 >> 1", -4),
        ("5 && 0", 0),
        ("0 || 3", 1),
        ("!0", 1),
        ("6 & 3", 2),
        ("6 | 3", 7),
        ("3 < 4 == 1", 1),
    ],
)
def test_integer_semantics(expr, expected):
    assert run_src(f"int main() {{ return {expr}; }}") == expected


def test_division_by_zero():
    with pytest.raises(VMError):
        run_src("int main(int x) { return 1 / x; }", 0)


def test_short_wraps():
    assert run_src("short s; int main(int x) { s = x; return s; }", 70000) == 70000 - 65536
    assert run_src("short s; int main(int x) { s = x; return s; }", 40000) == 40000 - 65536


def test_float_roundtrip_through_memory():
    src = "float f; int main(int x) { f = x; f = f / 4; return f * 100; }"
    assert run_src(src, 3) == 75
    assert run_src(src, -5) == -125


def test_float_to_int_of_nan_is_int_min():
    src = "float f; float z; int main() { f = z / z; return f; }"
    assert run_src(src) == -(1 << 31)


def test_float_return_value():
    v = run_src("float f; float main(int x) { f = x; return f / 3; }", 1)
    assert isinstance(v, float) and math.isclose(v, 1 / 3, rel_tol=1e-6)


def test_memory_out_of_bounds():
    prog = IRProgram([I("CONSTANT", temp(0), 64), I("LOAD", temp(1), temp(0)), I("HALT")], {"main": 0}, DataSection([(0, 4)]))
    with pytest.raises(VMError, match="out of bounds"):
        run(prog)


def test_requires_main():
    with pytest.raises(VMError):
        run(IRProgram([I("HALT")], {}, DataSection()))


def test_jz_semantics():
    # JZ r k: when r == 0 jump to pc + 1 + k
    code = [
        I("CONSTANT", temp(0), 0),
        I("JZ", temp(0), 1),
        I("CONSTANT", temp(1), 111),
        I("CONSTANT", temp(1), 222),
        I("MOV", RET, temp(1)),
        I("HALT"),
    ]
    assert run(IRProgram(code, {"main": 0})).value == 222
    code[0] = I("CONSTANT", temp(0), 5)
    code[3] = I("ADD", temp(2), temp(1), ZERO)
    code[4] = I("MOV", RET, temp(2))
    assert run(IRProgram(code, {"main": 0})).value == 111


def test_calls_and_link_stack():
    src = """
    int g(int y) { return y + 1; }
    int f(int x) { return g(x) * 2; }
    int main(int x) { f(1); return f(x) + g(x); }
    """
    assert run_src(src, 5) == 18


def test_control_flow():
    src = """
    int n;
    int main(int x) {
        int c;
        c = 0;
        while (c < 4) {
            if (c % 2 == 0) { n = n + x; } else { n = n - 1; }
            c = c + 1;
        }
        return n;
    }
    """
    assert run_src(src, 10) == 18


def test_deterministic(gcd_source):
    ir, _, _ = compile_program(parse_source(gcd_source))
    a, b = run(ir), run(ir)
    assert a == b


def test_same_value_nan():
    assert same_value(math.nan, math.nan)
    assert not same_value(0.0, -0.0)
    assert same_value(3, 3)


def test_semantic_equivalence_with_dead_variable():
    p = parse_source("int dead; int a[4]; int main(int x) { a[2] = x; return a[2] * 3; }")
    assert semantic_equiv_check(p, [0, 1, -9, 123456])


def test_corpus_equivalent_to_canonical(corpus_programs):
    rng = random.Random(3)
    inputs = [rng.randint(-1000, 1000) for _ in range(10)]
    for name, p in corpus_programs:
        assert semantic_equiv_check(p, inputs), name
