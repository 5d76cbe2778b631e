import random
from collections import deque

import pytest

from charon.cert_high import cert_high
from charon.cert_low import analyze_cond_jumps, analyze_functions, cert_low, infer_types, map_dependencies
from charon.certnum import cert_equal, cert_to_string
from charon.compiler import compile_program
from charon.errors import CertificationError
from charon.frontend import ast as A
from charon.frontend import parse_source
from charon.ir import DataSection, I, IRProgram, is_temp, parse_ir, serialize, temp

from _mutate import mutate, renumber
from conftest import CORPUS


def ir_of(src):
    return compile_program(parse_source(src))[0]


def reachable_deps(code):
    """Independent oracle: BFS over the register def-use graph."""
    defs = {}
    for ins in code:
        if ins.dest is not None and is_temp(ins.dest):
            defs[ins.dest] = ins
    last_arg = None
    call_result = {}
    for i, ins in enumerate(code):
        if ins.op == "MOV" and ins.args[0].name == "arg":
            last_arg = ins.args[1]
        if ins.op == "MOV" and ins.args[1].name == "ret" and i and code[i - 1].op == "JAL":
            call_result[i] = last_arg

    out = {}
    for i, ins in enumerate(code):
        start = [r for r in ins.sources if is_temp(r)]
        if i in call_result and is_temp(call_result[i]):
            start.append(call_result[i])
        seen, todo = set(), deque(start)
        while todo:
            r = todo.popleft()
            if r in seen:
                continue
            seen.add(r)
            d = defs[r]
            todo.extend(s for s in d.sources if is_temp(s))
            j = code.index(d)
            if j in call_result and is_temp(call_result[j]):
                todo.append(call_result[j])
        out[i] = frozenset(seen)
    return out


def test_dependencies_trivial():
    p = IRProgram([I("CONSTANT", temp(1), 5), I("CONSTANT", temp(2), 6), I("ADD", temp(3), temp(1), temp(2)), I("HALT")])
    deps = map_dependencies(p)
    assert deps[0] == frozenset()
    assert deps[2] == {temp(1), temp(2)}


def test_dependencies_match_reachability(corpus):
    for _, text in corpus:
        ir = compile_program(parse_source(text))[0]
        assert map_dependencies(ir) == reachable_deps(ir.instructions)


def test_types_from_access_evidence():
    ir = ir_of("float f; short s; int i; struct { int a; int b; } u; int main() { f = 1; s = 2; i = s; u.b = 3; return 0; }")
    assert infer_types(ir) == {
        0: A.FLOAT,
        4: A.SHORT,
        8: A.INT,
        12: A.StructType((A.StructField("field_1", A.UNKNOWN), A.StructField("field_2", A.INT))),
    }


def test_never_accessed_is_unknown():
    assert infer_types(ir_of("int d; int main() { return 0; }")) == {0: A.UNKNOWN}


def test_conflicting_evidence_is_rejected():
    ir = ir_of("int i; int main() { i = 1; return i; }")
    tampered = serialize(ir).replace("LOAD ", "LOADF ", 1)
    with pytest.raises(CertificationError):
        cert_low(parse_ir(tampered))


def test_function_analysis(gcd_source):
    funcs = analyze_functions(ir_of(gcd_source))
    assert (funcs["gcd"].ret_type, funcs["gcd"].nparams) == ("int", 1)
    assert (funcs["main"].ret_type, funcs["main"].nparams) == ("int", 0)
    assert funcs["gcd"].end == funcs["main"].start


def test_return_type_inference():
    funcs = analyze_functions(ir_of("short h(short q) { return q; } float g(float z) { return z; } int main() { return 0; }"))
    assert funcs["h"].ret_type == "short" and funcs["h"].param_type == "short"
    assert funcs["g"].ret_type == "float"


def test_scope_without_jr():
    bad = IRProgram([I("CONSTANT", temp(0), 0), I("HALT")], {"main": 0})
    with pytest.raises(CertificationError):
        cert_low(bad)


def test_cond_points():
    ir = ir_of("int x; int main() { while (x < 3) { x = x + 1; } if (1) { x = 0; } return x; }")
    conds = analyze_cond_jumps(ir)
    code = ir.instructions
    assert len(conds) == 2
    for start, jz in conds.items():
        assert code[start].op == "CONSTANT"
        assert code[jz].op == "JZ" and code[jz].args[0].name != "zero"
    assert min(conds) == 0


def test_jz_on_undefined_register():
    with pytest.raises(CertificationError):
        analyze_cond_jumps(IRProgram([I("JZ", temp(4), 0), I("HALT")], {"main": 0}))


def test_halt_only():
    assert cert_to_string(cert_low(IRProgram([I("HALT")], {}, DataSection()))) == "2^(157)"


def test_fig13_p1():
    p = parse_source((CORPUS / "fig13_p1.ch").read_text())
    assert cert_equal(cert_low(compile_program(p)[0]), cert_high(p))


def test_preservation_on_corpus(corpus_programs):
    for name, p in corpus_programs:
        ir = compile_program(p)[0]
        assert cert_equal(cert_high(p), cert_low(ir)), name
        assert cert_low(ir) == cert_low(ir)


def test_extra_constant_is_detected(gcd_source):
    ir = compile_program(parse_source(gcd_source))[0]
    code = list(ir.instructions)
    code.insert(5, I("CONSTANT", temp(999), 7))
    labels = {k: v + (v > 5) for k, v in ir.labels.items()}
    mutated = renumber(IRProgram(code, labels, ir.data))
    with pytest.raises(CertificationError):
        cert_low(mutated)


@pytest.mark.parametrize("cast", ["SIGNEXT", "TRUNC", "SITOFP", "FPTOSI"])
def test_redundant_cast_is_rejected(cast):
    text = serialize(ir_of("int a; int main(int x) { a = x + 1; return a; }"))
    text = text.replace("LOAD r9 r8\nCONSTANT r10 1\nADD r11 r9 r10",
                        f"LOAD r9 r8\n{cast} r90 r9\nCONSTANT r10 1\nADD r11 r90 r10")
    with pytest.raises(CertificationError):
        cert_low(renumber(parse_ir(text)))


def test_mutations_never_silently_match(corpus):
    rng = random.Random(11)
    programs = [compile_program(parse_source(t))[0] for _, t in corpus[:8]]
    originals = [cert_low(p) for p in programs]
    for _ in range(150):
        k = rng.randrange(len(programs))
        _, m = mutate(programs[k], rng)
        try:
            assert not cert_equal(cert_low(m), originals[k])
        except CertificationError:
            pass
