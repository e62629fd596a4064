"""RobustFill string-transformation DSL."""

from compsynth.robustfill.dsl import *  # noqa: F401,F403
from compsynth.robustfill.interpreter import (  # noqa: F401
    ExecutionError,
    eval_expression,
    eval_program,
    execute_expression,
    execute_program,
    find_matches,
    satisfies,
)
