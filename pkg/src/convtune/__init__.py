"""Simulation and metaheuristic weight tuning for weighted voltage-mode
control of a three-output forward DC-DC converter."""

from .fuzzy import (
    FuzzyConfig,
    FuzzyController,
    FuzzyRuleBase,
    MembershipSet,
    PIDGains,
    PidController,
    TriangularMF,
    defuzzify_centroid,
    flc_step,
    fuzzify,
    infer,
    pid_step,
)
from .loop import LoopConfig, SimTrace, WeightVector, run_closed_loop, weighted_error
from .optimizers import (
    AcorConfig,
    IcaConfig,
    OptResult,
    PsoConfig,
    SearchSpace,
    acor_run,
    ica_run,
    pso_run,
)
from .power_stage import (
    ConverterParams,
    ConverterState,
    DivergenceError,
    InputStep,
    LoadScale,
    OutputSpec,
    apply_event,
    derive_default_params,
    integrate_step,
    output_voltages,
    state_derivative,
)
from .scenarios import (
    Scenario,
    TimeResponseMetrics,
    builtin_scenarios,
    compare_methods,
    regulation_percent,
    run_scenario,
    time_response,
)
from .tuning import total_error_fitness, tune_weights

__version__ = "0.1.0"
