"""depcore: dependency analysis for a JavaScript-like core language.

A concrete mark-propagating interpreter, a sound abstract interpreter over a
base-type value lattice, and executable oracles for context dependency,
noninterference, concrete/abstract consistency, and analysis termination.
"""

from .abstract import AnalysisReport, Analyzer, analyze_program
from .concrete import (
    Interp, Location, Storable, TaintedValue, Verdict, check_noninterference,
    evaluate, op_apply, proto_lookup,
)
from .consistency import (
    ConsistencyVerdict, consistent_heap, consistent_value, differential_check,
)
from .errors import (
    DepcoreError, EvalTypeError, ParseError, ResourceError, UnboundVariableError,
)
from .generator import ProgramGenerator
from .lattice import (
    AbstractObject, AbstractStorable, AbstractValue, BaseLattice, Flat,
    FunctionStore, Scope, State, abstract_op, alpha,
)
from .report import Report, RunConfig, analyze_file, analyze_source
from .syntax import (
    Expr, Label, Mark, Span, UNDEFINED, parse, pretty_print, relabel,
    substitute_trace,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport", "Analyzer", "analyze_program",
    "Interp", "Location", "Storable", "TaintedValue", "Verdict",
    "check_noninterference", "evaluate", "op_apply", "proto_lookup",
    "ConsistencyVerdict", "consistent_heap", "consistent_value",
    "differential_check",
    "DepcoreError", "EvalTypeError", "ParseError", "ResourceError",
    "UnboundVariableError",
    "ProgramGenerator",
    "AbstractObject", "AbstractStorable", "AbstractValue", "BaseLattice",
    "Flat", "FunctionStore", "Scope", "State", "abstract_op", "alpha",
    "Report", "RunConfig", "analyze_file", "analyze_source",
    "Expr", "Label", "Mark", "Span", "UNDEFINED", "parse", "pretty_print",
    "relabel", "substitute_trace",
    "__version__",
]
