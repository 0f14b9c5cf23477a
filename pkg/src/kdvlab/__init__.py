"""kdvlab: a numerical laboratory for near-linear KdV dynamics on the circle."""

from .spectral import (GridFunction, ModeLattice, NormSpec, SpectralSequence,
                       l2s_norm, linear_phase, norm, physical_from_weighted,
                       sequence_from_modes, weighted_from_physical, zero_sequence)
from .hamiltonians import (F1, F2, H3, LAMBDA2, QUARTIC_RESONANT, HamiltonianSpec,
                           Kind, ResonanceWitness, eval_hamiltonian, f1_apply,
                           f1_coeff, f2_apply, f2_coeff, fd_gradient, gradient,
                           poisson_bracket, resonance_witness)
from .flows import (FlowConfig, FlowDivergenceError, TransformReport, flow,
                    near_identity_report, q_of_u, taylor_check, u_of_q)
from .solver import (Diagnostics, SolverConfig, SolverDivergenceError,
                     diagnostics_of, envelope_evolve, evolve, kdv_step,
                     nonlinear_term, soliton_mean, soliton_reference)
from .data import DataSpec, Family, MembershipReport, make_data, membership
from .experiments import (ScanConfig, ScanReport, SlopeFit, check_identities,
                          config_from_dict, config_from_json, random_state,
                          scan_error_term, scan_linear_proximity,
                          scan_near_identity, slope_fit)

__version__ = "0.1.0"
