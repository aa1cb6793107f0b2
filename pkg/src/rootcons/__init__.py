"""Consensus on directed dynamic networks under stabilizing message adversaries.

Deterministic round-based simulation of a full-information consensus
protocol driven by root-component detection, together with checkers and
generators for the adversary classes it is designed for, and the named
counterexample executions that pin down its termination-time bounds.
"""

from .adversary import (
    AdversaryCertificate,
    AdversaryParams,
    check_alt_estable,
    check_alt_liveness,
    check_alt_safety,
    check_estable,
    check_liveness,
    check_mad,
    check_safety,
    check_vsrc,
    generate_alt_estable,
    generate_estable,
)
from .approximation import (
    Message,
    NodeState,
    detected_roots,
    has_late_outgoing_edge,
    init_state,
    make_message,
    prune,
    receive_and_merge,
)
from .consensus import CoreStepOutcome, core_step
from .graphs import (
    CommGraph,
    LassoSequence,
    RoundWindow,
    causal_past,
    causal_past_forward,
    check_dynamic_diameter,
    common_root_intervals,
    find_ecs_common_root,
    influences,
    is_weakly_connected,
    lasso,
    lasso_from_json,
    lasso_to_json,
    root_components,
    single_root,
    validate_graph,
)
from .harness import (
    OracleReport,
    RunConfig,
    Trace,
    fuzz_campaign,
    indistinguishable,
    oracle_check,
    run_execution,
    scenario_eps_pair,
    scenario_hop_fallacy,
    scenario_stab_not_enough,
)

__all__ = [name for name in dir() if not name.startswith("_")]
