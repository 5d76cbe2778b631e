"""Single-instruction IR mutations for the uniqueness tests."""

from __future__ import annotations

import random

from charon.ir import ARITY, PREDEFINED, Instruction, IRProgram, Label, Reg, is_temp, serialize, temp

BY_SHAPE: dict[str, list[str]] = {}
for _op, _shape in ARITY.items():
    BY_SHAPE.setdefault(_shape, []).append(_op)

KINDS = ("swap", "perturb", "delete", "insert")


def renumber(p: IRProgram) -> IRProgram:
    """Rename temporaries r0, r1, ... by first appearance, so a mutation cannot
    be rejected merely for breaking the compiler's naming convention."""
    names: dict[str, Reg] = {}
    out = []
    for ins in p.instructions:
        args = []
        for a in ins.args:
            if isinstance(a, Reg) and is_temp(a):
                if a.name not in names:
                    names[a.name] = temp(len(names))
                a = names[a.name]
            args.append(a)
        out.append(Instruction(ins.op, tuple(args)))
    return IRProgram(out, dict(p.labels), p.data)


def _registers(p: IRProgram) -> list[Reg]:
    seen = {Reg(n) for n in PREDEFINED}
    for ins in p.instructions:
        seen.update(a for a in ins.args if isinstance(a, Reg))
    return sorted(seen, key=lambda r: r.name)


def _random_operand(kind: str, rng: random.Random, regs: list[Reg], labels: list[str], fresh: Reg):
    if kind == "R":
        return rng.choice(regs + [fresh])
    if kind == "I":
        return rng.choice((0, 1, 2, 4, 8, -1, -4, rng.randint(-50, 50)))
    return Label(rng.choice(labels))


def _perturb(arg, kind: str, rng: random.Random, regs: list[Reg], labels: list[str], fresh: Reg):
    if kind == "I":
        return arg + rng.choice((-8, -4, -2, -1, 1, 2, 4, 8))
    while True:
        new = _random_operand(kind, rng, regs, labels, fresh)
        if new != arg or (kind == "L" and len(labels) < 2):
            return new


def mutate(p: IRProgram, rng: random.Random, kind: str | None = None) -> tuple[str, IRProgram]:
    """One random mutation that changes the program even after renumbering."""
    original = serialize(renumber(p))
    regs = _registers(p)
    labels = sorted(p.labels)
    fresh = temp(10_000)
    code = p.instructions
    for _ in range(1000):
        k = kind or rng.choice(KINDS)
        new = list(code)
        lab = dict(p.labels)
        i = rng.randrange(len(code))
        ins = code[i]
        if k == "swap":
            alts = [op for op in BY_SHAPE[ARITY[ins.op]] if op != ins.op]
            if not alts:
                continue
            new[i] = Instruction(rng.choice(alts), ins.args)
        elif k == "perturb":
            if not ins.args:
                continue
            j = rng.randrange(len(ins.args))
            args = list(ins.args)
            args[j] = _perturb(args[j], ARITY[ins.op][j], rng, regs, labels, fresh)
            new[i] = Instruction(ins.op, tuple(args))
        elif k == "delete":
            del new[i]
            lab = {n: (x - 1 if x > i else x) for n, x in lab.items()}
            if not new or any(x >= len(new) for x in lab.values()):
                continue
        else:
            op = rng.choice(sorted(ARITY))
            args = tuple(_random_operand(s, rng, regs, labels, fresh) for s in ARITY[op])
            if ARITY[op][:1] == "R" and op not in ("STORE", "STOREF", "JZ", "JR"):
                args = (fresh,) + args[1:]
            new.insert(i, Instruction(op, args))
            lab = {n: (x + 1 if x > i else x) for n, x in lab.items()}
        candidate = renumber(IRProgram(new, lab, p.data))
        if serialize(candidate) != original:
            return k, candidate
    raise RuntimeError("no effective mutation found")
