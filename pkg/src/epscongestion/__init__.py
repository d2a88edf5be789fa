"""Approximate equilibria in atomic and non-atomic linear congestion games."""

from .atomic import (
    AtomicGame,
    EpsilonReport,
    Facility,
    Profile,
    ValidationError,
    is_epsilon_nash,
    potential,
    potential_delta,
    profile_epsilon,
    social_cost,
)
from .atomic_solvers import (
    DynamicsTrace,
    EquilibriumSet,
    brute_force,
    epsilon_best_response,
    potential_descent,
)
from .bounds import (
    atomic_poa_bound,
    atomic_pos_bounds,
    bound_report,
    lemma_check,
    nonatomic_poa_bound,
    nonatomic_poa_lower_large,
    nonatomic_pos_bound,
    z_of_epsilon,
)
from .instances import InstanceBundle
from .network import CommoditySpec, Edge, Graph, enumerate_paths, expand
from .nonatomic import Commodity, Flow, NonatomicGame, WardropReport, flow_epsilon
from .nonatomic_solvers import SolveResult, minimize, pos_certificate

__version__ = "0.1.0"
