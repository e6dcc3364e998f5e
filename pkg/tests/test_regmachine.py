import pytest
from hypothesis import given, strategies as st

from introimmune.regmachine import Program, ProgramSyntaxError

LOOP3 = "set 1 3; L: inc 0; djnz 1 L; halt"
SQUARES = "L: mov 2 1; mul 2 1; emit 2; inc 1; jmp L"


def single_step(text, x, budget):
    """Hand stepper for the straight-line subset used above (set/inc/djnz/halt)."""
    lines = [s.strip() for s in text.split(";")]
    labels = {}
    code = []
    for s in lines:
        if ":" in s:
            name, s = s.split(":")
            labels[name.strip()] = len(code)
            s = s.strip()
        code.append(s.split())
    regs, pc, steps = {0: x}, 0, 0
    while steps < budget:
        steps += 1
        op, *args = code[pc]
        pc += 1
        if op == "halt":
            return "halted", regs[0], steps
        if op == "set":
            regs[int(args[0])] = int(args[1])
        elif op == "inc":
            regs[int(args[0])] = regs.get(int(args[0]), 0) + 1
        elif op == "djnz":
            r = int(args[0])
            regs[r] = max(regs.get(r, 0) - 1, 0)
            if regs[r]:
                pc = labels[args[1]]
    return "running", None, steps


def test_loop_budget():
    prog = Program.parse(LOOP3)
    assert prog.run(0, 2).status == "running"
    res = prog.run(0, 10)
    assert (res.status, res.value) == ("halted", 3)
    assert (res.status, res.value, res.steps) == single_step(LOOP3, 0, 10)


@pytest.mark.parametrize("budget", range(12))
def test_loop_agrees_with_hand_stepper(budget):
    res = Program.parse(LOOP3).run(4, budget)
    status, value, _ = single_step(LOOP3, 4, budget)
    assert (res.status, res.value) == (status, value)


def test_squares_enumerator_rate():
    out = []
    Program.parse(SQUARES).run(0, 12, on_emit=lambda v, step: out.append((v, step)))
    assert out == [(0, 3), (1, 8)]


def test_godel_round_trip_for_parsed_program():
    prog = Program.parse(LOOP3)
    assert Program.from_godel(prog.godel_number()) == prog


def test_syntax_errors():
    with pytest.raises(ProgramSyntaxError):
        Program.parse("frob 1")
    with pytest.raises(ProgramSyntaxError):
        Program.parse("inc")
    with pytest.raises(ProgramSyntaxError):
        Program.parse("L: inc 0; L: halt")


def test_query_needs_oracle():
    with pytest.raises(ValueError):
        Program.parse("query 0 0").run(0, 5)


def test_query_reads_oracle():
    res = Program.parse("set 1 7; query 0 1; halt").run(0, 10, ask=lambda q: int(q == 7))
    assert res.value == 1


godels = st.integers(min_value=0, max_value=10**9)


@given(godels, st.integers(min_value=0, max_value=20), st.integers(min_value=0, max_value=60))
def test_budget_monotone(number, x, budget):
    """A halt within budget s is the same halt at every larger budget."""
    prog = Program.from_godel(number)
    ask = lambda q: q % 2
    small = prog.run(x, budget, ask=ask)
    big = prog.run(x, budget + 25, ask=ask)
    if small.status == "halted":
        assert (big.status, big.value, big.steps) == (small.status, small.value, small.steps)
    else:
        assert small.steps == budget


@given(godels)
def test_every_natural_decodes(number):
    Program.from_godel(number)
