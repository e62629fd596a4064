"""Random (operation, input) cases for the per-operator oracle comparison."""

import random

from compsynth.robustfill import dsl

OPERATORS = [cls.NAME for cls in dsl.SUBSTRING_OPS + dsl.MODIFICATION_OPS] + ["ConstStr"]

_WORDS = ["Alpha", "beta", "GAMMA", "x", "Yz", "q1", "2024", "7", "aB", "Cd9", "HELLO", "ok"]


def random_input(rng: random.Random) -> str:
    """Inputs that mix every token type, delimiters and runs of spaces."""
    pieces = []
    for _ in range(rng.randint(1, 6)):
        r = rng.random()
        if r < 0.5:
            pieces.append(rng.choice(_WORDS))
        elif r < 0.8:
            pieces.append("".join(rng.choice(dsl.CHARACTERS) for _ in range(rng.randint(1, 5))))
        else:
            pieces.append(rng.choice(dsl.DELIMITERS))
        pieces.append(rng.choice([" ", " ", "  ", "", rng.choice(dsl.DELIMITERS)]))
    s = "".join(pieces)
    if rng.random() < 0.2:
        s = "  " + s + " "
    return s or "a"


def random_args(name: str, rng: random.Random) -> tuple:
    pos = lambda: rng.choice([k for k in range(-12, 13) if k != 0])  # noqa: E731
    idx = lambda: rng.choice(dsl.INDICES)  # noqa: E731
    regex = lambda: rng.choice(dsl.REGEXES)  # noqa: E731
    typ = lambda: rng.choice(dsl.TOKEN_TYPES)  # noqa: E731
    bound = lambda: rng.choice(dsl.BOUNDARIES)  # noqa: E731
    char = lambda: rng.choice(dsl.CHARACTERS)  # noqa: E731
    table = {
        "SubStr": lambda: (pos(), pos()),
        "GetSpan": lambda: (regex(), idx(), bound(), regex(), idx(), bound()),
        "GetToken": lambda: (typ(), idx()),
        "GetUpto": lambda: (regex(),),
        "GetFrom": lambda: (regex(),),
        "ToCase": lambda: (rng.choice(dsl.CASES),),
        "Replace": lambda: (rng.choice(dsl.DELIMITERS), rng.choice(dsl.DELIMITERS)),
        "Trim": lambda: (),
        "GetFirst": lambda: (typ(), rng.randint(1, 5)),
        "GetAll": lambda: (typ(),),
        "Substitute": lambda: (typ(), idx(), char()),
        "SubstituteAll": lambda: (typ(), char()),
        "Remove": lambda: (typ(), idx()),
        "RemoveAll": lambda: (typ(),),
        "ConstStr": lambda: (char(),),
    }
    return table[name]()


def build(name: str, args: tuple):
    return dsl.OPS_BY_NAME[name](*args)
