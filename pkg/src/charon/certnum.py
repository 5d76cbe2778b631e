"""Prime utilities, the numbering table, and symbolic certificates.

A certificate is the product ``p_1^e_1 * p_2^e_2 * ...`` of consecutive
primes.  The exponents are right-nested power towers (``17^(11^(2^(1)))``)
that are kept symbolic; the integer value is only computed for tiny
certificates.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

from .errors import CertificateFormatError, EvaluationError

# --------------------------------------------------------------------------
# primes

_primes: list[int] = [2, 3, 5, 7, 11, 13]


def _sieve(limit: int) -> list[int]:
    flags = bytearray([1]) * (limit + 1)
    flags[0:2] = b"\x00\x00"
    for i in range(2, math.isqrt(limit) + 1):
        if flags[i]:
            flags[i * i :: i] = bytearray(len(range(i * i, limit + 1, i)))
    return [i for i, f in enumerate(flags) if f]


def _bound(n: int) -> int:
    # Rosser's upper bound for the n-th prime, valid for n >= 6.
    if n < 6:
        return 15
    ln = math.log(n)
    return int(n * (ln + math.log(ln))) + 1


def nth_prime(n: int) -> int:
    """Return the n-th prime, 1-based (``nth_prime(1) == 2``)."""
    global _primes
    if n < 1:
        raise ValueError(f"prime index must be >= 1, got {n}")
    if n > len(_primes):
        _primes = _sieve(max(_bound(n), 2 * _bound(len(_primes))))
    return _primes[n - 1]


def first_primes(n: int) -> list[int]:
    if n == 0:
        return []
    nth_prime(n)
    return _primes[:n]


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    # deterministic Miller-Rabin for n < 3.3e24
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        if a % n == 0:
            continue
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


# --------------------------------------------------------------------------
# power towers


@dataclass(frozen=True)
class Leaf:
    value: int

    def __post_init__(self) -> None:
        if self.value == 0:
            raise ValueError("Leaf(0) is not a valid exponent")


@dataclass(frozen=True)
class Pow:
    base: int
    exp: "Tower"

    def __post_init__(self) -> None:
        if self.base < 2:
            raise ValueError(f"tower base must be >= 2, got {self.base}")


Tower = Union[Leaf, Pow]

_U64 = 1 << 64


def tower(*levels: int) -> Tower:
    """Build a right-nested tower: ``tower(17, 11, 2, 1)`` is 17^(11^(2^(1)))."""
    if not levels:
        raise ValueError("empty tower")
    t: Tower = Leaf(levels[-1])
    for base in reversed(levels[:-1]):
        t = Pow(base, t)
    return t


def normalize(t: Tower) -> Tower:
    """Collapse every Pow whose value fits in 64 bits into a Leaf."""
    if isinstance(t, Leaf):
        return t
    exp = normalize(t.exp)
    if isinstance(exp, Leaf) and exp.value > 0:
        k = exp.value
        if k * (t.base.bit_length() - 1) < 64:
            v = t.base**k
            if v < _U64:
                return Leaf(v)
    return Pow(t.base, exp)


def tower_to_str(t: Tower) -> str:
    parts = []
    while isinstance(t, Pow):
        parts.append(f"{t.base}^(")
        t = t.exp
    return "".join(parts) + str(t.value) + ")" * len(parts)


def tower_value(t: Tower, max_bits: int) -> int:
    """Exact value of ``t``; raises EvaluationError past ``max_bits`` bits."""
    if isinstance(t, Leaf):
        if t.value < 0:
            raise EvaluationError(f"negative exponent {t.value} has no integer value")
        if t.value.bit_length() > max_bits:
            raise EvaluationError("tower exceeds evaluation budget")
        return t.value
    # base^e needs at least e * floor(log2 base) bits
    e = tower_value(t.exp, max(1, max_bits.bit_length() + 1))
    if e * (t.base.bit_length() - 1) > max_bits:
        raise EvaluationError("tower exceeds evaluation budget")
    v = t.base**e
    if v.bit_length() > max_bits:
        raise EvaluationError("tower exceeds evaluation budget")
    return v


def _iroot(v: int, k: int) -> int:
    """Largest r with r**k <= v."""
    r = int(round(v ** (1.0 / k))) if v.bit_length() < 1000 else 1 << (v.bit_length() // k)
    while r**k > v:
        r -= 1
    while (r + 1) ** k <= v:
        r += 1
    return r


def split_power(t: Tower) -> tuple[int, Tower] | None:
    """View ``t`` as ``base^exp`` with a prime base.

    Pow nodes split directly; a Leaf is split when it is a prime power
    ``p^k`` with k >= 2.  Returns None for primes and non-prime-powers.
    """
    if isinstance(t, Pow):
        return t.base, t.exp
    v = t.value
    if v < 4:
        return None
    for k in range(v.bit_length(), 1, -1):
        r = _iroot(v, k)
        if r >= 2 and r**k == v:
            return (r, Leaf(k)) if _is_prime(r) else None
    return None


# --------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class Factor:
    position: int
    prime: int
    exponent: Tower


@dataclass(frozen=True)
class Certificate:
    factors: tuple[Factor, ...]

    def __post_init__(self) -> None:
        for i, f in enumerate(self.factors, start=1):
            if f.position != i:
                raise ValueError(f"factor positions must be 1..n, found {f.position} at {i}")
            if f.prime != nth_prime(i):
                raise ValueError(f"factor {i} has prime {f.prime}, expected {nth_prime(i)}")

    @classmethod
    def from_exponents(cls, exponents: Sequence[Tower]) -> "Certificate":
        primes = first_primes(len(exponents))
        return cls(tuple(Factor(i + 1, p, e) for i, (p, e) in enumerate(zip(primes, exponents))))

    @property
    def exponents(self) -> list[Tower]:
        return [f.exponent for f in self.factors]

    def __len__(self) -> int:
        return len(self.factors)

    def __str__(self) -> str:
        return cert_to_string(self)


def normalize_cert(c: Certificate) -> Certificate:
    return Certificate.from_exponents([normalize(e) for e in c.exponents])


def first_divergence(a: Certificate, b: Certificate) -> int | None:
    """1-based position of the first differing factor, or None if equal."""
    for i, (x, y) in enumerate(zip(a.exponents, b.exponents), start=1):
        if normalize(x) != normalize(y):
            return i
    if len(a) != len(b):
        return min(len(a), len(b)) + 1
    return None


def cert_equal(a: Certificate, b: Certificate) -> bool:
    return first_divergence(a, b) is None


def cert_to_string(c: Certificate) -> str:
    return " * ".join(f"{f.prime}^({tower_to_str(f.exponent)})" for f in c.factors)


_INT = re.compile(r"-?\d+")


class _TowerReader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str) -> CertificateFormatError:
        return CertificateFormatError(f"offset {self.pos}: {msg}")

    def integer(self, signed: bool) -> int:
        m = _INT.match(self.text, self.pos)
        if not m or (not signed and m.group().startswith("-")):
            raise self.error("expected integer")
        self.pos = m.end()
        return int(m.group())

    def expect(self, s: str) -> None:
        if not self.text.startswith(s, self.pos):
            raise self.error(f"expected {s!r}")
        self.pos += len(s)

    def tower(self) -> Tower:
        start = self.pos
        v = self.integer(signed=True)
        if self.text.startswith("^(", self.pos):
            if v < 2:
                self.pos = start
                raise self.error("tower base must be >= 2")
            self.pos += 2
            inner = self.tower()
            self.expect(")")
            return Pow(v, inner)
        if v == 0:
            self.pos = start
            raise self.error("zero exponent")
        return Leaf(v)


def cert_parse(text: str) -> Certificate:
    """Inverse of cert_to_string; trailing newlines are ignored."""
    r = _TowerReader(text.rstrip("\n"))
    exps: list[Tower] = []
    while True:
        p = r.integer(signed=False)
        if p != nth_prime(len(exps) + 1):
            raise r.error(f"factor {len(exps) + 1} has prime {p}, expected {nth_prime(len(exps) + 1)}")
        r.expect("^(")
        exps.append(r.tower())
        r.expect(")")
        if r.pos == len(r.text):
            break
        r.expect(" * ")
    return Certificate.from_exponents(exps)


def cert_evaluate(c: Certificate, bit_budget: int = 1 << 20) -> int:
    """The certificate as one integer, if it fits in ``bit_budget`` bits."""
    spent = 0.0
    values = []
    for f in c.factors:
        e = tower_value(f.exponent, bit_budget)
        spent += e * math.log2(f.prime)
        if spent > bit_budget:
            raise EvaluationError(f"certificate exceeds {bit_budget}-bit budget at factor {f.position}")
        values.append((f.prime, e))
    n = 1
    for p, e in values:
        n *= p**e
    return n


def cert_factorize(n: int, max_primes: int = 100_000) -> Certificate:
    """Split ``n`` over consecutive primes 2, 3, 5, ... with positive exponents."""
    if n < 2:
        raise EvaluationError(f"cannot factorize {n}: certificates are >= 2")
    exps: list[Tower] = []
    i = 1
    while n > 1:
        if i > max_primes:
            raise EvaluationError(f"not fully factorable within the first {max_primes} primes")
        p = nth_prime(i)
        k = 0
        while n % p == 0:
            n //= p
            k += 1
        if k == 0:
            raise EvaluationError(f"prime {p} (position {i}) is missing: support is not consecutive")
        exps.append(Leaf(k))
        i += 1
    return Certificate.from_exponents(exps)


# --------------------------------------------------------------------------
# numbering table

TYPE_SYMBOL = {"short": 2, "int": 3, "float": 5, "__unknown_type__": 7}
SYMBOL_TYPE = {v: k for k, v in TYPE_SYMBOL.items()}

CONSTANT = 11
VAR_DEF = 13
VAR_USE = 17
PARAM = 19
ARG = 23
CALL = 29
FUNC_START = 31
FUNC_END = 37
RETURN = 41
COND = 43
IF_START = 47
IF_END = 53
ELSE_END = 59
WHILE_START = 61
WHILE_END = 67
HALT = 157

OPERATOR_SYMBOL = {
    "=": 71,
    "!": 73,
    "+": 79,
    "-": 83,
    "*": 89,
    "/": 97,
    "%": 101,
    "<": 103,
    ">": 107,
    "==": 109,
    "!=": 113,
    "&&": 127,
    "||": 131,
    "<<": 137,
    ">>": 139,
    "&": 149,
    "|": 151,
}
SYMBOL_OPERATOR = {v: k for k, v in OPERATOR_SYMBOL.items()}
ASSIGN = OPERATOR_SYMBOL["="]

PLAIN_SYMBOLS = {
    "arg": ARG,
    "func_end": FUNC_END,
    "return": RETURN,
    "cond": COND,
    "if_start": IF_START,
    "if_end": IF_END,
    "else_end": ELSE_END,
    "while_start": WHILE_START,
    "while_end": WHILE_END,
    "halt": HALT,
}


def constant_exp(c: int) -> Tower:
    return Pow(CONSTANT, Leaf(c + 1 if c >= 0 else c))


def type_tower(symbols: Sequence[int]) -> Tower:
    return tower(*symbols)


def var_def_exp(symbols: Sequence[int]) -> Tower:
    return Pow(VAR_DEF, type_tower(symbols))


def param_exp(symbols: Sequence[int]) -> Tower:
    return Pow(PARAM, type_tower(symbols))


def var_use_static_exp(vp: int, offset: int) -> Tower:
    return Pow(VAR_USE, Pow(vp, Pow(2, Leaf(offset + 1))))


def var_use_dynamic_exp(vp: int, index_vp: int) -> Tower:
    return Pow(VAR_USE, Pow(vp, Pow(3, Leaf(index_vp))))


def call_exp(fp: int) -> Tower:
    return Pow(CALL, Leaf(fp))


def func_start_exp(type_symbol: int, nparams: int) -> Tower:
    if nparams == 0:
        return Pow(FUNC_START, Leaf(type_symbol))
    return Pow(FUNC_START, Pow(type_symbol, Leaf(nparams + 1)))


def operator_exp(op: str) -> Tower:
    return Leaf(OPERATOR_SYMBOL[op])


def schema_exponent(kind: str, *params) -> Tower:
    """Exponent for one numbering-table row.

    ``kind`` names the row; ``params`` are its parameters, e.g.
    ``schema_exponent("var_use", 11, 0)`` or ``schema_exponent("call", 3)``.
    """
    if kind == "type":
        return Leaf(TYPE_SYMBOL[params[0]])
    if kind == "constant":
        return constant_exp(params[0])
    if kind == "var_def":
        return var_def_exp([TYPE_SYMBOL[t] for t in params[0]])
    if kind == "param":
        return param_exp([TYPE_SYMBOL[t] for t in params[0]])
    if kind == "var_use":
        return var_use_static_exp(params[0], params[1])
    if kind == "var_use_dynamic":
        return var_use_dynamic_exp(params[0], params[1])
    if kind == "call":
        return call_exp(params[0])
    if kind == "func_start":
        return func_start_exp(TYPE_SYMBOL[params[0]], params[1])
    if kind == "operator":
        return operator_exp(params[0])
    if kind in PLAIN_SYMBOLS:
        if params:
            raise ValueError(f"{kind} takes no parameters")
        return Leaf(PLAIN_SYMBOLS[kind])
    raise ValueError(f"unknown numbering-table row: {kind!r}")
