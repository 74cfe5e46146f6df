"""Energies of periodic charge distributions on Bravais lattices and their optimal charges."""
from .charges import (ChargeConfiguration, alternating, autocorrelation, canonicalize, cosine_config,
                      dft, honeycomb_triangular, idft, random_configuration, reconstruct_from_spectrum,
                      spectral_density)
from .energy import (EnergyReport, energy_convergence_factor, energy_direct, energy_epstein, energy_ewald,
                     energy_spectral, interaction_matrix, mode_energy_ewald, mode_energy_summable,
                     mode_table)
from .lattice import (BravaisLattice, cubic, dual, from_generator, normalize_density, orthorhombic,
                      points_in_ball, triangular)
from .optimize import (ThetaMinimum, VerificationReport, brute_force_min, minimize_translated_theta,
                       neutrality_check, optimal_charges, verify_born)
from .potentials import Gaussian, Potential, Riesz, from_config
from .special_functions import epstein_zeta, translated_theta, upper_incomplete_gamma

__version__ = "0.1.0"

__all__ = [
    "BravaisLattice", "cubic", "dual", "from_generator", "normalize_density", "orthorhombic",
    "points_in_ball", "triangular",
    "translated_theta", "epstein_zeta", "upper_incomplete_gamma",
    "Potential", "Riesz", "Gaussian", "from_config",
    "ChargeConfiguration", "alternating", "autocorrelation", "canonicalize", "cosine_config", "dft",
    "honeycomb_triangular", "idft", "random_configuration", "reconstruct_from_spectrum",
    "spectral_density",
    "EnergyReport", "energy_convergence_factor", "energy_direct", "energy_epstein", "energy_ewald",
    "energy_spectral", "interaction_matrix", "mode_energy_ewald", "mode_energy_summable", "mode_table",
    "ThetaMinimum", "VerificationReport", "brute_force_min", "minimize_translated_theta",
    "neutrality_check", "optimal_charges", "verify_born",
]
