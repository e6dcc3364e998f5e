"""A small register machine with oracle queries, and its Goedel numbering.

Registers are naturals indexed by naturals; register 0 holds the input on
entry and the output on ``halt``. Every executed instruction costs one step,
an oracle query included. Running past the last instruction behaves as
``halt``.

    halt            stop, output r0
    inc r           r += 1
    dec r           r -= 1 (floored at 0)
    set r k         r = k
    mov d s         d = s
    add d s         d += s
    mul d s         d *= s
    jmp L           goto L
    jz r L          goto L if r == 0
    jnz r L         goto L if r != 0
    djnz r L        r -= 1 (floored); goto L if r != 0
    query d s       d = oracle(s)
    emit r          enumerate the value of r

Jump targets are instruction numbers or labels written ``name:`` in front of
an instruction.
"""

from dataclasses import dataclass
import re

from .pairing import decode_list, encode_list, pair, unpair

OPCODES = ("halt", "inc", "dec", "set", "mov", "add", "mul",
           "jmp", "jz", "jnz", "djnz", "query", "emit")
ARITY = {"halt": 0, "inc": 1, "dec": 1, "set": 2, "mov": 2, "add": 2, "mul": 2,
         "jmp": 1, "jz": 2, "jnz": 2, "djnz": 2, "query": 2, "emit": 1}
_JUMP_ARG = {"jmp": 0, "jz": 1, "jnz": 1, "djnz": 1}
_LABEL = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.*)$")


class ProgramSyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class Instruction:
    op: str
    a: int = 0
    b: int = 0

    def code(self) -> int:
        return pair(OPCODES.index(self.op), pair(self.a, self.b))

    @classmethod
    def from_code(cls, code: int) -> "Instruction":
        op, args = unpair(code)
        a, b = unpair(args)
        return cls(OPCODES[op % len(OPCODES)], a, b)

    def __str__(self):
        args = (self.a, self.b)[: ARITY[self.op]]
        return " ".join([self.op, *map(str, args)])


@dataclass(frozen=True)
class MachineResult:
    status: str          # "halted" or "running"
    value: int | None
    steps: int


@dataclass(frozen=True)
class Program:
    code: tuple[Instruction, ...]

    @classmethod
    def parse(cls, text: str) -> "Program":
        statements = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0]
            for stmt in line.split(";"):
                stmt = stmt.strip()
                if stmt:
                    statements.append((lineno, stmt))

        labels: dict[str, int] = {}
        pending = []
        for lineno, stmt in statements:
            while (m := _LABEL.match(stmt)):
                name, stmt = m.group(1), m.group(2).strip()
                if name in labels or name in OPCODES:
                    raise ProgramSyntaxError(f"line {lineno}: bad or duplicate label {name!r}")
                labels[name] = len(pending)
            if stmt:
                pending.append((lineno, stmt.split()))

        code = []
        for lineno, (op, *args) in pending:
            op = op.lower()
            if op not in ARITY:
                raise ProgramSyntaxError(f"line {lineno}: unknown instruction {op!r}")
            if len(args) != ARITY[op]:
                raise ProgramSyntaxError(
                    f"line {lineno}: {op} takes {ARITY[op]} operand(s), got {len(args)}")
            values = []
            for pos, arg in enumerate(args):
                if pos == _JUMP_ARG.get(op) and arg in labels:
                    values.append(labels[arg])
                    continue
                try:
                    value = int(arg)
                except ValueError:
                    raise ProgramSyntaxError(f"line {lineno}: bad operand {arg!r}") from None
                if value < 0:
                    raise ProgramSyntaxError(f"line {lineno}: negative operand {arg!r}")
                values.append(value)
            code.append(Instruction(op, *values))
        return cls(tuple(code))

    def godel_number(self) -> int:
        return encode_list(ins.code() for ins in self.code)

    @classmethod
    def from_godel(cls, number: int) -> "Program":
        # every natural decodes to some program
        return cls(tuple(Instruction.from_code(c) for c in decode_list(number)))

    @property
    def uses_oracle(self) -> bool:
        return any(ins.op == "query" for ins in self.code)

    def __str__(self):
        return "\n".join(str(ins) for ins in self.code)

    def run(self, x: int, budget: int, ask=None, on_emit=None) -> MachineResult:
        """Execute on input ``x`` for at most ``budget`` steps.

        ``ask(position)`` answers oracle queries; ``on_emit(value, step)`` is
        called for each ``emit``. Exceptions raised by either propagate.
        """
        if budget is None:
            raise ValueError("interpreted programs need an explicit step budget")
        regs = {0: x}
        code = self.code
        pc = 0
        steps = 0
        while True:
            if steps >= budget:
                return MachineResult("running", None, steps)
            steps += 1
            if pc >= len(code):
                return MachineResult("halted", regs.get(0, 0), steps)
            ins = code[pc]
            op, a, b = ins.op, ins.a, ins.b
            pc += 1
            if op == "halt":
                return MachineResult("halted", regs.get(0, 0), steps)
            elif op == "inc":
                regs[a] = regs.get(a, 0) + 1
            elif op == "dec":
                regs[a] = max(regs.get(a, 0) - 1, 0)
            elif op == "set":
                regs[a] = b
            elif op == "mov":
                regs[a] = regs.get(b, 0)
            elif op == "add":
                regs[a] = regs.get(a, 0) + regs.get(b, 0)
            elif op == "mul":
                regs[a] = regs.get(a, 0) * regs.get(b, 0)
            elif op == "jmp":
                pc = a
            elif op == "jz":
                if regs.get(a, 0) == 0:
                    pc = b
            elif op == "jnz":
                if regs.get(a, 0) != 0:
                    pc = b
            elif op == "djnz":
                regs[a] = max(regs.get(a, 0) - 1, 0)
                if regs[a] != 0:
                    pc = b
            elif op == "query":
                if ask is None:
                    raise ValueError("program queries an oracle but none was supplied")
                regs[a] = ask(regs.get(b, 0))
            elif op == "emit":
                if on_emit is not None:
                    on_emit(regs.get(a, 0), steps)
