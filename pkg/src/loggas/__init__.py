"""Numerical laboratory for the one-dimensional log-gas and its renormalized energy."""

__version__ = "0.1.0"

from .energy import (W_LATTICE, EnergyReport, Normalization, defect_functional, energy_gradient, energy_periodic,
                     energy_report, lattice_energy, minimize_energy, qlb_ratio, scale_energy)
from .errors import LogGasError
from .field import QuadratureSpec, energy_via_definition, field_at
from .gibbs import (FeketeResult, Potential, SampleSet, empirical_pair_correlation, equilibrium_oracle,
                    fekete_optimize, hamiltonian, hamiltonian_gradient, mcmc_sample)
from .process import (CountStats, PairingResult, correlation_gap, count_statistics, pair_sum, pairing_lattice,
                      pairing_periodic, pairing_periodic_mc, theorem1_check)
from .testfunctions import TestFunction2D, diagonal_bump, product_bump
from .torus import DefectTable, TorusConfiguration, defect_table, lattice, new_config, perturb_lattice
