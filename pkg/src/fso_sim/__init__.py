"""Deterministic simulator of fractal service-oriented communities.

Communities of actors nest into a holarchy; published events trigger
guarded response activities; staffing requests escalate community by
community until a temporary overlay network can form; recurring successful
overlays become permanent communities and failing ones are pruned.
"""

from .activation import (
    ActivationState,
    enroll,
    enumerate_activation_space,
    initial_state,
    partition,
    release,
)
from .canon import (
    ActivityTable,
    ResponseActivity,
    Son,
    SonPlan,
    Unresolved,
    dissolve_son,
    evaluate_guard,
    form_son,
    publish,
    raise_exception,
    resolve_request,
)
from .engine import (
    Metrics,
    Scenario,
    Simulation,
    TraceRecord,
    load_scenario,
    load_scenario_file,
    parse_trace,
    report,
    run_scenario,
    scenario_from_dict,
    scenario_to_dict,
    write_trace,
)
from .environment import (
    EnvironmentSpec,
    EventSource,
    PeriodicProcess,
    PoissonProcess,
    Rng,
    ScriptedProcess,
    next_event_time,
    sample_arrivals,
)
from .evolution import (
    EvolutionPolicy,
    ExperienceLedger,
    FailureWindow,
    Outcome,
    connection_strength,
    maybe_permanentify,
    maybe_prune,
    record_outcome,
)
from .holarchy import (
    Holarchy,
    HolarchySpec,
    Holon,
    HolonKind,
    HolonSpec,
    build_holarchy,
    higher_up_of,
    register_initial_services,
    validate,
    visible_community_of,
)

__version__ = "0.1.0"

__all__ = [
    "ActivationState",
    "ActivityTable",
    "EnvironmentSpec",
    "EventSource",
    "EvolutionPolicy",
    "ExperienceLedger",
    "FailureWindow",
    "Holarchy",
    "HolarchySpec",
    "Holon",
    "HolonKind",
    "HolonSpec",
    "Metrics",
    "Outcome",
    "PeriodicProcess",
    "PoissonProcess",
    "ResponseActivity",
    "Rng",
    "Scenario",
    "ScriptedProcess",
    "Simulation",
    "Son",
    "SonPlan",
    "TraceRecord",
    "Unresolved",
    "build_holarchy",
    "connection_strength",
    "dissolve_son",
    "enroll",
    "enumerate_activation_space",
    "evaluate_guard",
    "form_son",
    "higher_up_of",
    "initial_state",
    "load_scenario",
    "load_scenario_file",
    "maybe_permanentify",
    "maybe_prune",
    "next_event_time",
    "parse_trace",
    "partition",
    "publish",
    "raise_exception",
    "record_outcome",
    "register_initial_services",
    "release",
    "report",
    "resolve_request",
    "run_scenario",
    "sample_arrivals",
    "scenario_from_dict",
    "scenario_to_dict",
    "validate",
    "visible_community_of",
    "write_trace",
]
