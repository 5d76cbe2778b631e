import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from charon.certnum import (
    Certificate, Leaf, Pow, cert_equal, cert_evaluate, cert_factorize, cert_parse, cert_to_string,
    first_divergence, first_primes, normalize, normalize_cert, nth_prime, schema_exponent, tower,
    split_power, tower_to_str,
)
from charon.errors import CertificateFormatError, EvaluationError


def trial_division_primes(n):
    out, k = [], 2
    while len(out) < n:
        if all(k % p for p in out if p * p <= k):
            out.append(k)
        k += 1
    return out


def test_nth_prime_small():
    assert nth_prime(1) == 2
    assert nth_prime(5) == 11
    assert nth_prime(1000) == 7919


def test_first_primes_match_trial_division():
    assert first_primes(2000) == trial_division_primes(2000)


def test_split_power_on_prime_squares():
    # 41 is also a Miller-Rabin witness; it once tested composite against itself
    for p in trial_division_primes(60):
        assert split_power(Leaf(p * p)) == (p, Leaf(2))
        assert split_power(Leaf(p)) is None


def test_nth_prime_large_index():
    assert nth_prime(100_000) == 1_299_709
    with pytest.raises(ValueError):
        nth_prime(0)


@pytest.mark.parametrize(
    "kind,params,text",
    [
        ("var_use", (11, 0), "17^(11^(2^(1)))"),
        ("call", (3,), "29^(3)"),
        ("constant", (0,), "11^(1)"),
        ("constant", (-3,), "11^(-3)"),
        ("var_def", (("int", "__unknown_type__", "int"),), "13^(3^(7^(3)))"),
        ("param", (("short",),), "19^(2)"),
        ("func_start", ("int", 0), "31^(3)"),
        ("func_start", ("float", 1), "31^(5^(2))"),
        ("var_use_dynamic", (5, 2), "17^(5^(3^(2)))"),
    ],
)
def test_schema_rows(kind, params, text):
    assert tower_to_str(schema_exponent(kind, *params)) == text


def test_scalar_usage_value():
    # vp = 11 at offset 0 evaluates to 17^121
    assert normalize(schema_exponent("var_use", 11, 0)) == Pow(17, Leaf(121))


def test_schema_is_injective_across_classes():
    seen = {}
    samples = [("constant", (c,)) for c in range(-3, 4)]
    samples += [("var_use", (vp, off)) for vp in (2, 3, 5) for off in (0, 4, 8)]
    samples += [("var_use_dynamic", (vp, ix)) for vp in (2, 3) for ix in (2, 3)]
    samples += [("call", (fp,)) for fp in (2, 3, 5)]
    samples += [("func_start", (t, n)) for t in ("short", "int", "float") for n in (0, 1)]
    samples += [("var_def", (ts,)) for ts in (("int",), ("short", "int"), ("float",))]
    samples += [("param", (ts,)) for ts in (("int",), ("short",))]
    samples += [(k, ()) for k in ("arg", "return", "cond", "if_start", "if_end", "else_end",
                                  "while_start", "while_end", "func_end", "halt")]
    samples += [("operator", (op,)) for op in ("=", "!", "+", "-", "*", "/", "%", "<", ">", "==",
                                               "!=", "&&", "||", "<<", ">>", "&", "|")]
    for kind, params in samples:
        key = normalize(schema_exponent(kind, *params))
        assert key not in seen, (kind, params, seen.get(key))
        seen[key] = (kind, params)


def test_unknown_schema_row():
    with pytest.raises(ValueError):
        schema_exponent("nope")


def test_normalize_collapses_small_towers():
    assert cert_equal(Certificate.from_exponents([Pow(17, Pow(2, Leaf(2)))]),
                      Certificate.from_exponents([Pow(17, Leaf(4))]))
    huge = tower(13, 3, 343)
    assert normalize(huge) == huge  # 3^343 does not fit 64 bits, stays symbolic


def test_position_sensitivity():
    a = Certificate.from_exponents([Leaf(43), Leaf(47)])
    b = Certificate.from_exponents([Leaf(47), Leaf(43)])
    assert not cert_equal(a, b)
    assert first_divergence(a, b) == 1
    assert first_divergence(a, Certificate.from_exponents([Leaf(43)])) == 2


def test_string_format():
    assert cert_to_string(Certificate.from_exponents([Leaf(43)])) == "2^(43)"
    first = Certificate.from_exponents([schema_exponent("var_def", ("int", "__unknown_type__", "int"))])
    assert cert_to_string(first) == "2^(13^(3^(7^(3))))"


@pytest.mark.parametrize("bad", ["", "2^43", "3^(43)", "2^(43) * 2^(47)", "2^(43)*3^(47)", "2^(4 3)", "2^(-)"])
def test_parse_rejects(bad):
    with pytest.raises(CertificateFormatError):
        cert_parse(bad)


def test_example_product():
    n = 16 * 27 * 78_125
    assert n == 33_750_000
    c = cert_factorize(n)
    assert [tower_to_str(e) for e in c.exponents] == ["4", "3", "7"]
    assert cert_evaluate(c) == n


def test_evaluate_examples():
    assert cert_evaluate(Certificate.from_exponents([Leaf(2)])) == 4
    c = Certificate.from_exponents([Leaf(3), Leaf(3), Leaf(103)])
    assert cert_evaluate(c, 1 << 20) == 2**3 * 3**3 * 5**103
    with pytest.raises(EvaluationError):
        cert_evaluate(Certificate.from_exponents([tower(13, 3, 343)]))
    with pytest.raises(EvaluationError):
        cert_evaluate(Certificate.from_exponents([Leaf(-3)]))


def test_factorize_rejects():
    assert cert_factorize(4) == Certificate.from_exponents([Leaf(2)])
    with pytest.raises(EvaluationError):
        cert_factorize(2 * 5)  # 3 missing
    with pytest.raises(EvaluationError):
        cert_factorize(1)


towers = st.recursive(
    st.integers(1, 40).map(Leaf),
    lambda inner: st.tuples(st.sampled_from([2, 3, 5, 7, 11, 13, 17]), inner).map(lambda t: Pow(*t)),
    max_leaves=3,
)


@given(st.lists(towers, min_size=1, max_size=12))
def test_string_roundtrip(exps):
    c = Certificate.from_exponents(exps)
    text = cert_to_string(c)
    assert cert_parse(text) == c
    assert cert_to_string(cert_parse(text)) == text


@settings(max_examples=60)
@given(st.lists(st.integers(1, 30), min_size=1, max_size=8))
def test_evaluate_factorize_roundtrip(exps):
    c = Certificate.from_exponents([Leaf(e) for e in exps])
    assert cert_factorize(cert_evaluate(c)) == normalize_cert(c)


def test_distinct_certificates_have_distinct_values():
    rng = random.Random(5)
    seen = {}
    for _ in range(300):
        exps = tuple(rng.randint(1, 6) for _ in range(rng.randint(1, 4)))
        v = cert_evaluate(Certificate.from_exponents([Leaf(e) for e in exps]))
        assert seen.setdefault(v, exps) == exps


def test_all_small_exponent_vectors_are_distinct():
    values = {cert_evaluate(Certificate.from_exponents([Leaf(e) for e in v]))
              for v in itertools.product(range(1, 4), repeat=3)}
    assert len(values) == 27
