"""Lattice fermions, constructive bosonization checks, and mean-field tools.

The package is organized bottom-up:

* :mod:`nodal_bosonize.lattice` / :mod:`nodal_bosonize.ed` — bit-encoded
  Fock bases, sparse t-V and Hubbard Hamiltonians, Lanczos/dense exact
  diagonalization.
* :mod:`nodal_bosonize.continuum` — square-lattice momentum partition into
  nodal/antinodal/corner regions and every derived constant of the
  effective low-energy theories.
* :mod:`nodal_bosonize.bosonalg` — truncated chiral Fock spaces on which
  the anomalous density commutator, the kinetic-energy (Kronig) identity,
  and the boson canonical commutators are verified in exact arithmetic.
* :mod:`nodal_bosonize.bogoliubov` — symplectic diagonalization of
  quadratic boson Hamiltonians, the 1D and 2D coupled blocks, and momentum
  grids for spectral densities.
* :mod:`nodal_bosonize.meanfield` — Hartree solver for the t-V charge
  density wave, Maxwell construction, phase diagrams, and the antinodal
  excitonic gap equation.
* :mod:`nodal_bosonize.correlators` — the 1D two-point function from the
  boson representation and its algebraic-decay exponent.
* :mod:`nodal_bosonize.cli` — the ``nodal-bosonize`` command-line tool.
"""

from .bogoliubov import (
    BogoliubovResult,
    InstabilityError,
    QuadraticBosonForm,
    diagonalize,
    ground_and_free_energy,
    luttinger_block_1d,
    mattis_blocks_2d,
    nodal_boson_grid,
    nodal_spectrum,
    symplectic_defect,
    truncated_oscillator_levels,
)
from .bosonalg import (
    ChiralSectorSpec,
    IdentityReport,
    build_sector,
    build_sector_pair,
    check_anomaly_1d,
    check_anomaly_2d,
    check_boson_ccr,
    check_kronig_1d,
    check_kronig_2d,
)
from .continuum import (
    DerivedConstants,
    PartitionParams,
    classify_momentum,
    derive_constants,
    momentum_grid,
    rotated_components,
)
from .correlators import (
    CorrelatorRequest,
    CorrelatorResult,
    fit_power_law,
    free_two_point_1d,
    luttinger_exponent,
    luttinger_parameter,
    two_point_1d,
)
from .ed import EDConvergenceError, EDResult, ground_state
from .lattice import (
    FockBasis,
    LatticeSpec,
    ModelParams,
    build_basis,
    build_hamiltonian,
    free_fermion_ground_energy,
    particle_hole_mu,
)
from .meanfield import (
    AntinodalState,
    ConvergenceError,
    EnergyCurve,
    MeanFieldState,
    PhaseDiagramGrid,
    antinodal_mf,
    energy_curve,
    maxwell_construction,
    mf_energy_tV,
    minimize_delta,
    phase_diagram,
)

__version__ = "0.1.0"

__all__ = [
    "AntinodalState",
    "BogoliubovResult",
    "ChiralSectorSpec",
    "ConvergenceError",
    "CorrelatorRequest",
    "CorrelatorResult",
    "DerivedConstants",
    "EDConvergenceError",
    "EDResult",
    "EnergyCurve",
    "FockBasis",
    "IdentityReport",
    "InstabilityError",
    "LatticeSpec",
    "MeanFieldState",
    "ModelParams",
    "PartitionParams",
    "PhaseDiagramGrid",
    "QuadraticBosonForm",
    "antinodal_mf",
    "build_basis",
    "build_hamiltonian",
    "build_sector",
    "build_sector_pair",
    "check_anomaly_1d",
    "check_anomaly_2d",
    "check_boson_ccr",
    "check_kronig_1d",
    "check_kronig_2d",
    "classify_momentum",
    "derive_constants",
    "diagonalize",
    "energy_curve",
    "fit_power_law",
    "free_fermion_ground_energy",
    "free_two_point_1d",
    "ground_and_free_energy",
    "ground_state",
    "luttinger_block_1d",
    "luttinger_exponent",
    "luttinger_parameter",
    "mattis_blocks_2d",
    "maxwell_construction",
    "mf_energy_tV",
    "minimize_delta",
    "momentum_grid",
    "nodal_boson_grid",
    "nodal_spectrum",
    "particle_hole_mu",
    "phase_diagram",
    "rotated_components",
    "symplectic_defect",
    "truncated_oscillator_levels",
    "two_point_1d",
    "__version__",
]
