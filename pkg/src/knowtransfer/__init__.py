"""Optimal relational contracts for gradual knowledge transfer."""

from .baseline import (ContractPath, FrontierPoint, OptimalContract, be_step, delta_thresholds,
                       frontload_payments, generate_sequence, knowledge_gift,
                       pareto_frontier, patience_limit_gift, smallest_maximizer, solve_optimal)
from .config import SolverConfig
from .errors import (AssumptionViolated, BadDelta, BadParams, CapExceeded, ConfigError,
                     ContractError, NoContract, NoRoot, NoSolution, OutOfRange, ParseError,
                     SchemaError, TrivialContract)
from .oracle import GridSpec, enumerate_envelope, oracle_retirement
from .payoff_env import (Affine, Composite, PayoffEnv, Polynomial, Table, ValidationReport,
                         inverse_pi, make_apprenticeship_env, make_bertrand_env,
                         make_cournot_env, make_polynomial_env, validate_assumption_one)
from .retirement import (RetirementContract, RetirementEnv, cost_scaling_sweep, rbe_step,
                         shoot, solve_retirement)
from .verifier import (DeviationResult, ICReport, check_contract, check_retirement_contract,
                       check_sic, simulate_deviation)
