"""Barrier-embedded approximate-optimal safe control with a relaxed
CLF-CBF quadratic-program baseline and a simulation harness."""

from .config import DEFAULTS, Scenario, build_scenario, parse_config
from .cost import (BarrierSpec, CostSpec, barrier_B, barrier_Bbar, grad_Bbar,
                   input_penalty_Ru, instantaneous_cost, scheduling_s)
from .critic import (BellmanSample, LearnerGains, actor_rhs, bellman_at,
                     critic_rhs, excitation_metrics, gamma_rhs,
                     regressor_sum, sample_extrapolation_points,
                     weak_excitation)
from .errors import (BoundaryViolation, ConfigError, InputOutOfBox,
                     QpInfeasible, SafeAdpError, SingularGradient,
                     StepSizeUnderflow)
from .model import (CircularSafeSet, ClassKScale, SystemModel, cbf_margin,
                    clf_margin, eval_h, grad_h, linear_system,
                    single_integrator)
from .qpsolve import (QpParams, QpProblem, QpSolution, build_qp,
                      kkt_residuals, qp_controller, solve_qp)
from .sim import (SimConfig, SummaryReport, TrajectoryRecord,
                  prop1_diagnostics, run_adp_episode, run_episode,
                  run_qp_episode, summarize)
from .staf import (StaFConfig, centers, grad_sigma, kernel_sigma, policy_hat,
                   policy_star, value_hat)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
