"""Causal-consistent reversible debugger for a message-passing Erlang subset."""

from .syntax import ParseError, parse_expr, parse_program
from .pretty import pretty_print
from .expressions import (
    BifError, StuckError, eval_bif, eval_guard, match_clauses, match_pattern,
    step_expr,
)
from .systems import (
    Derivation, NotEnabledError, Pid, Scheduler, StepLimitError, StdSystem,
    UnknownEntryError, enabled_actions, init_system, run_trace, step_system,
)
from .reversible import (
    MalformedLogError, RevSystem, bwd_enabled, bwd_step, fwd_enabled, fwd_step,
    to_reversible,
)
from .controller import (
    ControlledState, Request, RequestError, controlled_step, parent_of,
    parse_requests, run_controlled, satisfies, sender_of,
)
from .causality import (
    IllegalDerivationError, NotCoinitialError, causally_equivalent, decode_log,
    encode_log, happened_before, independent,
)
from .session import CommandError, SessionManager, UnknownSessionError

__version__ = "0.1.0"
