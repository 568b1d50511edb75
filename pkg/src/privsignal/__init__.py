"""Privacy-preserving adaptive signal control for an isolated intersection.

Connected vehicles pool queue statistics through additive secret sharing with
distributed Laplace noise; the controller estimates arrival rates from the
noisy sums and re-optimizes a NEMA dual-ring cycle by linear programming
(deterministic or sample-average stochastic).  A point-queue simulator and an
experiment runner close the loop.
"""

from .aggregation import (
    AggregateResult, CvState, Mode, PrivateRecord, RoundTranscript, coalition_view,
    plaintext_sums, prepare_record, run_round,
)
from .control import (
    ControllerConfig, PhaseCase, ScenarioSet, SignalTimingPlan, build_p1, build_p2,
    extract_plan, point_scenario, sample_scenarios,
)
from .errors import PrivSignalError
from .estimation import (
    ArrivalEstimate, CycleHistory, estimate, gamma_from_history, update_history,
)
from .experiment import (
    ExperimentConfig, RunResult, run_experiment, run_replication, sweep, write_outputs,
)
from .field import MODULUS, FixedPointCodec, split, sum_shares
from .lp import LinearProgram, LpBuilder, LpSolution, Sense, Status, solve
from .privacy import (
    LaplaceSpec, PrivacyBudget, Sensitivity, classify_vast_majority, epsilon_bound,
    laplace_scale, sample_beta_1, sample_laplace,
)
from .sim import ActuatedController, Intersection, build_demand, generate_arrivals, simulate

__version__ = "0.1.0"

__all__ = [
    "ActuatedController", "AggregateResult", "ArrivalEstimate", "ControllerConfig", "CvState",
    "CycleHistory", "ExperimentConfig", "FixedPointCodec", "Intersection", "LaplaceSpec",
    "LinearProgram", "LpBuilder", "LpSolution", "MODULUS", "Mode", "PhaseCase", "PrivSignalError",
    "PrivacyBudget", "PrivateRecord", "RoundTranscript", "RunResult", "ScenarioSet", "Sense",
    "Sensitivity", "SignalTimingPlan", "Status", "build_demand", "build_p1", "build_p2",
    "classify_vast_majority", "coalition_view", "epsilon_bound", "estimate", "extract_plan",
    "gamma_from_history", "generate_arrivals", "laplace_scale", "plaintext_sums",
    "point_scenario", "prepare_record", "run_experiment", "run_replication", "run_round",
    "sample_beta_1", "sample_laplace", "sample_scenarios", "simulate", "solve", "split",
    "sum_shares", "sweep", "update_history", "write_outputs",
]
