"""Population protocols as threshold games.

Derive protocols from symmetric games with a win-stay/lose-shift threshold
rule, decide whether a protocol arises that way by synthesizing an integer
payoff-matrix witness, simulate protocols under uniform random scheduling,
and verify stable computation exactly on bounded populations.
"""

from ._kernels import NUMBA_ENABLED, backend
from .core import (
    Config,
    Protocol,
    ProtocolError,
    complete,
    config_of,
    config_to_dict,
    initial_config,
    is_deterministic,
    is_symmetric,
    make_protocol,
    output_of_config,
    successors,
    symmetry_violation,
)
from .formats import (
    FormatError,
    parse_game,
    parse_protocol,
    print_game,
    print_protocol,
)
from .games import (
    ALL_TIES,
    LOWEST_INDEX,
    Game,
    PrisonerParams,
    best_response,
    best_response_excluding,
    derive_protocol,
    is_nash,
    is_win,
    make_game,
    prisoners_dilemma,
)
from .library import LEADERS, builtin, builtin_keys, symmetrize
from .pavcheck import (
    EXACT,
    SUBSET,
    ConstraintSystem,
    NotPavlovian,
    UnsatCertificate,
    Witness,
    build_constraints,
    check_pavlovian,
    default_mode,
    format_certificate,
    solve_order_constraints,
    witness_reproduces,
)
from .sim import (
    InteractionGraph,
    RunResult,
    StatsReport,
    monte_carlo,
    run,
    stop_output_window,
    stop_silent,
)
from .verify import (
    BudgetExceeded,
    ConfigGraph,
    Counterexample,
    PredicateError,
    Verdict,
    bottom_sccs,
    candidate_count,
    eval_predicate,
    full_multiset_graph,
    full_vertex_graph,
    leader_count,
    parse_predicate,
    predicate_symbols,
    reachable,
    search_pavlovian,
    stable_leader,
    stably_computes,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_TIES",
    "BudgetExceeded",
    "Config",
    "ConfigGraph",
    "ConstraintSystem",
    "Counterexample",
    "EXACT",
    "FormatError",
    "Game",
    "InteractionGraph",
    "LEADERS",
    "LOWEST_INDEX",
    "NUMBA_ENABLED",
    "NotPavlovian",
    "PredicateError",
    "PrisonerParams",
    "Protocol",
    "ProtocolError",
    "RunResult",
    "StatsReport",
    "SUBSET",
    "UnsatCertificate",
    "Verdict",
    "Witness",
    "backend",
    "best_response",
    "best_response_excluding",
    "bottom_sccs",
    "builtin",
    "candidate_count",
    "builtin_keys",
    "check_pavlovian",
    "complete",
    "config_of",
    "config_to_dict",
    "default_mode",
    "derive_protocol",
    "eval_predicate",
    "format_certificate",
    "full_multiset_graph",
    "full_vertex_graph",
    "initial_config",
    "is_deterministic",
    "is_nash",
    "is_symmetric",
    "is_win",
    "leader_count",
    "make_game",
    "make_protocol",
    "monte_carlo",
    "output_of_config",
    "parse_game",
    "parse_predicate",
    "predicate_symbols",
    "parse_protocol",
    "print_game",
    "print_protocol",
    "prisoners_dilemma",
    "reachable",
    "run",
    "search_pavlovian",
    "stable_leader",
    "stably_computes",
    "stop_output_window",
    "stop_silent",
    "successors",
    "symmetrize",
    "symmetry_violation",
    "build_constraints",
    "solve_order_constraints",
    "witness_reproduces",
]
