"""Polaron master-equation model of a four-level quantum dot in a two-mode cavity.

Energies and rates are in units of the cavity coupling g (hbar = 1).
"""
from .config import PRESETS, ConfigError, RunConfig, SweepSpec, parse_config, preset_runs
from .model import (
    CoherentPump, IncoherentPump, LiouvillianBundle, SystemParams, build_bare_liouvillian,
    build_effective_liouvillian_coherent, build_effective_liouvillian_incoherent, build_full_liouvillian,
    build_liouvillian, hamiltonian_coherent, hamiltonian_incoherent, lindblad_channels, polaron_dissipator,
)
from .observables import (
    EmissionRates, EntanglementWitness, ObservableSet, compute_observables, dgcz_phase_scan, dgcz_variance,
    emission_rate_decomposition, photon_number_distribution,
)
from .operators import (
    DensityMatrix, Operator, SpaceLayout, Superoperator, annihilator, dissipator, expectation,
    hamiltonian_commutator, hermitian_eigendecomposition, number, qd_projector,
)
from .phonons import (
    EffectiveRates, EffectiveRatesCoherent, PhononBathParams, PhononKernels, calibrate_absolute_scale,
    correlation_phi, displacement_average, effective_rates_coherent, effective_rates_incoherent, get_kernels,
    half_fourier, spectral_density,
)
from .steady import SteadySolution, solve_steady, steady_state, time_evolve, truncation_convergence
from .sweep import ResultRow, emit_results, load_results, run_sweep

__version__ = "0.1.0"
