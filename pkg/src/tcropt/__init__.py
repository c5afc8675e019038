"""Trust-cost-ratio optimization for blockchain-backed edge offloading."""

from .scenario import (Allocation, ChannelGains, Metrics, ResourcePlan,
                       Scenario, ScenarioConfig, ServerNode, SystemParams,
                       UserNode, Violation, assemble_allocation,
                       channel_gain, check_feasibility, compute_metrics,
                       equal_split_plan, generate_scenario, initial_plan,
                       pattern_assoc, path_gain, plan_rates, rescale_plan,
                       tcr, total_trust, trust_matrix, uplink_rate)
from .config import (ConfigError, load_scenario_config, parse_quantity,
                     scenario_config_from_mapping)
from .assignment import Matching, hungarian_max, round_connection
from .sdp import SDPProblem, SDPSolution, solve_sdp
from .qcqp import (Coefficients, DelayConstants, LiftedProblem, QCQPForm,
                   build_qcqp, compute_coefficients, delay_constants,
                   extract_solution, gamma_star, lift_to_sdp)
from .part1 import Part1Result, refine_phi, solve_part1
from .part2 import (FPAuxiliaries, InnerSolution, Part2Result,
                    ResourceTraceRow, fp_auxiliaries, fp_gradient, fp_value,
                    priced_value, solve_part2, solve_part2_inner)
from .dashf import OuterTraceRow, RunTrace, dinkelbach_update, run_dashf
from .baselines import (aauco, aauco_run, gucaa, gucro, gucro_run,
                        rucaa)
from .harness import (ALGORITHMS, SWEEPS, ExperimentConfig, ResultRow,
                      emit_plot_data, experiment_config_from_mapping,
                      load_experiment_config, run_experiment, run_one,
                      summarize)

__version__ = "0.1.0"

__all__ = [
    "Allocation", "ChannelGains", "Metrics", "ResourcePlan", "Scenario",
    "ScenarioConfig", "ServerNode", "SystemParams", "UserNode", "Violation",
    "assemble_allocation", "channel_gain", "check_feasibility",
    "compute_metrics", "equal_split_plan", "generate_scenario",
    "initial_plan", "pattern_assoc", "path_gain", "plan_rates",
    "rescale_plan", "tcr", "total_trust", "trust_matrix", "uplink_rate",
    "ConfigError", "load_scenario_config", "parse_quantity",
    "scenario_config_from_mapping",
    "Matching", "hungarian_max", "round_connection",
    "SDPProblem", "SDPSolution", "solve_sdp",
    "Coefficients", "DelayConstants", "LiftedProblem", "QCQPForm",
    "build_qcqp", "compute_coefficients", "delay_constants",
    "extract_solution", "gamma_star", "lift_to_sdp",
    "Part1Result", "refine_phi", "solve_part1",
    "FPAuxiliaries", "InnerSolution", "Part2Result", "ResourceTraceRow",
    "fp_auxiliaries", "fp_gradient", "fp_value", "priced_value",
    "solve_part2", "solve_part2_inner",
    "OuterTraceRow", "RunTrace", "dinkelbach_update", "run_dashf",
    "aauco", "aauco_run", "gucaa", "gucro", "gucro_run", "rucaa",
    "ALGORITHMS", "SWEEPS", "ExperimentConfig", "ResultRow",
    "emit_plot_data", "experiment_config_from_mapping",
    "load_experiment_config", "run_experiment", "run_one", "summarize",
    "__version__",
]
