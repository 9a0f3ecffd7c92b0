"""Two qubits coupled through chiral edge states of a quarter-flux Hofstadter lattice."""
from .errors import (AnalysisError, CalibrationError, DegeneracyError, DomainError,
                     EdgeLinkError, GeometryError, IntegrityError, PoleError, SolverError,
                     SpecError, SymmetryUnavailableError)
from .lattice import (HamiltonianMatrix, Qubit, SystemSpec, build_rect_system,
                      build_square_system, plaquette_flux)
from .spectral import (EdgeCalibration, Spectrum, bulk_dispersion, classify_states, diagonalize,
                       edge_dispersion, edge_window)
from .symmetry import build_symmetry_operator, classify_parity
from .perturb import (CotTanFunctions, CouplingFunctions, coupling_sums, f_pm_approx,
                      omega_perturbative, resonance_dynamics, s0_distance_kernel)
from .npsolver import (eigenvalues_boundary, fidelity_closed_form, fidelity_exact, g_bounds,
                       qubit_weight, scale_coupling, scaled_pair)
from .asym import AsymConfig, asym_metrics, asym_pair_solution
from .dynamics import DynamicsTrace, analyze_trace, evolve

__version__ = "0.1.0"
