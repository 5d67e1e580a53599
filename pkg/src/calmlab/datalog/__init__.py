from .engine import (NotSemiPositiveError, NotStratifiedError, ProgramClass,
                     classify_program, complement, complement_name, evaluate,
                     evaluate_model, positivize, stratify)
from .queries import (BUILTINS, SEMIPOSITIVE_CORPUS, Query, SchemaMismatchError,
                      builtin_query, corpus_program, corpus_query, corpus_text,
                      eval_query, winmove)
from .syntax import (ArityError, Atom, DatalogError, HeadOnEdbError, Literal,
                     ParseError, Program, RangeRestrictionError, ReservedNameError,
                     Rule, Term, build_program, const, parse_program, var)
