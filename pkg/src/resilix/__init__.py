"""resilix: survivability-rate planning for islanded microgrids.

The pipeline samples inverter failure scenarios, builds a stochastic MILP that
maximizes the probability-weighted share of scenarios in which critical load
is served, solves it (bundled branch-and-bound, HiGHS, or any LP-file solver)
and compares the result with a cost-minimizing baseline schedule.
"""

from .errors import InputError, ModelError, ResilixError, SolverError, SpecValidationError
from .io import dump_spec, load_inputs, spec_from_dict, spec_to_dict
from .mem import MemSchedule, build_mem_schedule, evaluate_schedule_sr
from .model import (
    EventProfile,
    GeneratorSpec,
    InverterSpec,
    LoadProfile,
    MicrogridSpec,
    PortableDgTemplate,
    Stage,
    expand_event,
    validate_spec,
)
from .oracle import OracleLimits, brute_force_sr
from .problem import MilpProblem
from .rop import (
    CASE_TABLE,
    RopConfig,
    SurvivabilityReport,
    alpha_sweep,
    build_staged_event,
    enhance_with_dg,
    named_event,
    run_rop,
    solve_rop,
)
from .rop_model import RopPlan, build_rop_model, compute_big_m, extract_plan, validate_plan
from .scenarios import ScenarioSet, failure_count_histogram, generate_scenario_set
from .solve import MilpSolution, SolveBudget, solve, solve_bundled, solve_external, solve_highs
from .lpformat import read_lp_text, write_lp_text

__version__ = "0.1.0"

__all__ = [
    "CASE_TABLE", "EventProfile", "GeneratorSpec", "InputError", "InverterSpec", "LoadProfile",
    "MemSchedule", "MicrogridSpec", "MilpProblem", "MilpSolution", "ModelError", "OracleLimits",
    "PortableDgTemplate", "ResilixError", "RopConfig", "RopPlan", "ScenarioSet", "SolveBudget",
    "SolverError", "SpecValidationError", "Stage", "SurvivabilityReport", "alpha_sweep",
    "brute_force_sr", "build_mem_schedule", "build_rop_model", "build_staged_event", "compute_big_m",
    "dump_spec", "enhance_with_dg", "evaluate_schedule_sr", "expand_event", "extract_plan",
    "failure_count_histogram", "generate_scenario_set", "load_inputs", "named_event", "read_lp_text",
    "run_rop", "solve", "solve_bundled", "solve_external", "solve_highs", "solve_rop", "spec_from_dict",
    "spec_to_dict", "validate_plan", "validate_spec", "write_lp_text",
]
