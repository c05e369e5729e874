"""Numerical laboratory for a modified two-body action-at-a-distance theory.

Worldlines, lightcone sums, the action and its gradient, the generalized
canonical structure, Dirac bi-spinor operators and proper-time propagators.
"""
from .action import ActionBreakdown, fokker_action, modified_action, w_functionals
from .canonical import (
    CanonicalState, canonical_action, constraints, epsilon_velocities,
    generalized_hamiltonian, invert_momenta_first_order, momenta_from_velocities,
)
from .errors import (
    FoldOverError, FokkerError, GrazingRoot, MaxIterations, NoContraction,
    NoShellReturn, ScenarioError, SingularA, SpacelikeMomentum,
)
from .lightcone import find_crossings, lightcone_sum
from .minkowski import dot, four_vector, interval_sq
from .propagator import (
    PropagatorResult, first_order_propagator, free_propagator_lattice,
    gaussian_matrix_integral, proper_time_fixing, zeroth_order_propagator,
)
from .solver import StationaryReport, action_gradient, find_stationary
from .spinor import evolution_operator, gamma_matrices, slash, two_particle_gammas
from .worldline import (
    ShiftField, SwitchingProfile, Worldline, proper_time, reparametrize, velocity,
)

__version__ = "0.1.0"
