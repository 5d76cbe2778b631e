"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (lines appear even when
output capture is on).
"""

from __future__ import annotations

import random
import time

import pytest

from charon.bench import bench_sources
from charon.canon import canon
from charon.cert_high import cert_high
from charon.cert_low import cert_low
from charon.certnum import Certificate, Leaf, cert_equal, cert_evaluate, cert_factorize, cert_to_string, normalize_cert
from charon.cli import main as cli
from charon.compiler import compile_program
from charon.errors import CharonError
from charon.frontend import ast_node_count, parse_source
from charon.vm import run, same_value

from _mutate import mutate
from conftest import CORPUS, corpus_files

# pinned tolerances
PRESERVATION_BUDGET_S = 5.0
MUTATIONS = 1000
MUTATION_SEED = 20240601
MUTATION_BUDGET_S = 60.0
R2_CERT_LEN = 0.95
R2_TIME_HIGH = 0.90
CERT_TIME_LIMIT_NS = 100_000_000
SIZE_SPAN = (10, 200)
MIN_GENERATED = 20


@pytest.fixture
def report(capsys):
    def emit(n: int, title: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'} {title}: {detail}")
        assert ok, detail
    return emit


def test_1_preservation(report, capsys):
    files = corpus_files()
    t0 = time.perf_counter()
    codes = {f.name: cli(["verify", str(f)]) for f in files}
    elapsed = time.perf_counter() - t0
    capsys.readouterr()
    bad = [n for n, c in codes.items() if c != 0]
    required = {"gcd.ch", "fig13_p1.ch", "fig13_p2.ch"}
    ok = not bad and required <= set(codes) and len(codes) >= 23 and elapsed < PRESERVATION_BUDGET_S
    report(1, "preservation", ok, f"{len(codes) - len(bad)}/{len(codes)} verify exit 0 in {elapsed:.2f}s "
           f"(limit {PRESERVATION_BUDGET_S}s){'; failing ' + ', '.join(bad) if bad else ''}")


def test_2_canonical_equivalence(report):
    p1 = parse_source((CORPUS / "fig13_p1.ch").read_text())
    p2 = parse_source((CORPUS / "fig13_p2.ch").read_text())
    c1, c2 = cert_to_string(cert_high(p1)), cert_to_string(cert_high(p2))
    k1, k2 = canon(cert_high(p1)), canon(cert_high(p2))
    ir1, ir2 = compile_program(p1)[0], compile_program(p2)[0]
    rng = random.Random(13)
    inputs = [rng.randint(-(1 << 31), (1 << 31) - 1) for _ in range(10)]
    outs = [(run(ir1, x).value, run(ir2, x).value) for x in inputs]
    same_out = all(same_value(a, b) for a, b in outs)
    ok = c1 == c2 and k1 == k2 and same_out
    report(2, "canonical equivalence", ok, f"certificates identical={c1 == c2}, canonical text identical={k1 == k2}, "
           f"outputs equal on 10 inputs={same_out} (value {outs[0][0]})")


def test_3_roundtrip(report):
    failures = []
    files = corpus_files()
    for f in files:
        c = cert_high(parse_source(f.read_text()))
        text = canon(c)
        again = cert_high(parse_source(text, allow_unknown=True))
        if cert_to_string(again) != cert_to_string(c) or canon(again) != text:
            failures.append(f.name)
    report(3, "round-trip", not failures,
           f"{len(files) - len(failures)}/{len(files)} programs re-certify identically and canon is idempotent")


def test_4_low_level_uniqueness(report):
    programs = [compile_program(parse_source(f.read_text()))[0] for f in corpus_files()]
    originals = [cert_low(p) for p in programs]
    rng = random.Random(MUTATION_SEED)
    silent, errors, differs = [], 0, 0
    t0 = time.perf_counter()
    for n in range(MUTATIONS):
        k = rng.randrange(len(programs))
        kind, m = mutate(programs[k], rng)
        try:
            c = cert_low(m)
        except CharonError:
            errors += 1
            continue
        if cert_equal(c, originals[k]):
            silent.append((n, kind))
        else:
            differs += 1
    elapsed = time.perf_counter() - t0
    ok = not silent and elapsed < MUTATION_BUDGET_S
    report(4, "low-level uniqueness", ok, f"{MUTATIONS} mutations: {errors} rejected, {differs} differing, "
           f"{len(silent)} silent matches in {elapsed:.1f}s (limit {MUTATION_BUDGET_S}s)")


def test_5_goedel_oracle(report):
    n = 16 * 27 * 78_125
    c = cert_factorize(n)
    exact = n == 33_750_000 and cert_evaluate(c) == n and c == Certificate.from_exponents([Leaf(4), Leaf(3), Leaf(7)])
    rng = random.Random(5)
    bad = 0
    for _ in range(100):
        small = Certificate.from_exponents([Leaf(rng.randint(1, 12)) for _ in range(rng.randint(1, 8))])
        v = cert_evaluate(small)
        if cert_factorize(v) != normalize_cert(small) or cert_evaluate(cert_factorize(v)) != v:
            bad += 1
    report(5, "Goedel oracle", exact and bad == 0,
           f"33750000 = 2^4*3^3*5^7 round-trip={exact}; {100 - bad}/100 random certificates round-trip")


@pytest.fixture(scope="module")
def generated_bench():
    files = sorted(CORPUS.glob("gen_*.ch"))
    return bench_sources([(f.name, f.read_text()) for f in files])


def test_6_scaling(report, generated_bench):
    rows = generated_bench.rows
    sizes = [r["ast_nodes"] for r in rows]
    r_ast = generated_bench.fits["ast_nodes~cert_len_chars"].r2
    r_ir = generated_bench.fits["ir_instructions~cert_len_chars"].r2
    spans = min(sizes) <= SIZE_SPAN[0] + 5 and max(sizes) >= SIZE_SPAN[1] - 20 and max(sizes) <= SIZE_SPAN[1]
    ok = len(rows) >= MIN_GENERATED and spans and r_ast >= R2_CERT_LEN and r_ir >= R2_CERT_LEN
    report(6, "scaling", ok, f"{len(rows)} programs, {min(sizes)}-{max(sizes)} nodes; R2(ast, cert_len)={r_ast:.4f}, "
           f"R2(ir, cert_len)={r_ir:.4f} (need >= {R2_CERT_LEN})")


def test_7_performance_shape(report, generated_bench):
    r_high = generated_bench.fits["ast_nodes~t_cert_high_ns"].r2
    small = [r for r in generated_bench.rows if r["ast_nodes"] <= SIZE_SPAN[1]]
    worst = max(max(r["t_cert_high_ns"], r["t_cert_low_ns"]) for r in small)
    ok = r_high >= R2_TIME_HIGH and worst < CERT_TIME_LIMIT_NS
    report(7, "performance shape", ok, f"R2(ast, t_cert_high)={r_high:.4f} (need >= {R2_TIME_HIGH}); "
           f"slowest certification {worst / 1e6:.2f} ms (limit 100 ms)")


def test_8_semantic_spot_check(report):
    gcd = parse_source((CORPUS / "gcd.ch").read_text())
    g = run(compile_program(gcd)[0]).value
    z = run(compile_program(parse_source("int main() { return 0; }"))[0]).value
    report(8, "semantic spot-check", g == 6 and z == 0,
           f"gcd(48, 18) -> {g} (expect 6), return-0 program -> {z} (expect 0), gcd has {ast_node_count(gcd)} AST nodes")
