"""Double-spend robustness toolkit for Nakamoto-consensus chains.

Computes provably-safe transaction-acceptance policies under pre-mining
attacks, solves for optimal attack strategies with a ratio-objective MDP, and
cross-validates every analytic result with a seeded Monte Carlo simulator.
"""
from .core import (
    AcceptancePolicy,
    AttackAction,
    AttackerParams,
    ConfigurationError,
    ConstantPolicy,
    LogarithmicPolicy,
    MajorityAttackerError,
    NoThresholdError,
    NumericalError,
    ParameterError,
    RobustnessKind,
    policy_required_confs,
    validate_params,
)
from .analytic import (
    GapDistribution,
    RobustBound,
    TotalPolicyConstants,
    arb_attack_prob,
    catchup_prob,
    premined_gap_tail,
    sigma_arb,
    sigma_spv,
    sigma_total,
    spv_attack_bound,
    total_policy_constants,
)
from .mdp import (
    ForkStatus,
    MdpModel,
    MdpState,
    PolicyTable,
    SolveResult,
    build_attack_mdp,
    extract_policy_table,
    mark_reachability,
    scalarized_action_values,
    solve_ratio,
)
from .profit import ProfitModel, build_profit_mdp, solve_profit
from .sim import (
    SimConfig,
    SimReport,
    TotalPolicySimResult,
    WalkSummary,
    simulate_finney_premine,
    simulate_total_policy,
    simulate_vector76,
    walk_oracle,
)

__version__ = "0.1.0"

__all__ = [
    # core
    "AcceptancePolicy",
    "AttackAction",
    "AttackerParams",
    "ConfigurationError",
    "ConstantPolicy",
    "LogarithmicPolicy",
    "MajorityAttackerError",
    "NoThresholdError",
    "NumericalError",
    "ParameterError",
    "RobustnessKind",
    "policy_required_confs",
    "validate_params",
    # analytic
    "GapDistribution",
    "RobustBound",
    "TotalPolicyConstants",
    "arb_attack_prob",
    "catchup_prob",
    "premined_gap_tail",
    "sigma_arb",
    "sigma_spv",
    "sigma_total",
    "spv_attack_bound",
    "total_policy_constants",
    # mdp
    "ForkStatus",
    "MdpModel",
    "MdpState",
    "PolicyTable",
    "SolveResult",
    "build_attack_mdp",
    "extract_policy_table",
    "mark_reachability",
    "scalarized_action_values",
    "solve_ratio",
    # profit
    "ProfitModel",
    "build_profit_mdp",
    "solve_profit",
    # sim
    "SimConfig",
    "SimReport",
    "TotalPolicySimResult",
    "WalkSummary",
    "simulate_finney_premine",
    "simulate_total_policy",
    "simulate_vector76",
    "walk_oracle",
]
