"""Discrete spectra of one-dimensional open quantum systems.

Continuum route: transfer matrices -> certified complex-k poles ->
surface-term and expanding-window diagnostics.  Lattice route: analytic
lead self-energies -> energy-dependent effective Hamiltonians -> the same
pole zoo, cross-checked, plus survival-probability dynamics.
"""

__version__ = "0.1.0"

from .model import (LatticeModel, PendulumPair, Potential1D, TimeSeries, UNITS,
                    UnitSystem, dimer_dot, load_model, pendulum_evolve,
                    pendulum_modes, potential_at, single_impurity, square_barrier,
                    square_well)
from .transfer import (ScatteringResult, TransferMatrix, landauer_conductance,
                       scattering_amplitudes, transfer_matrix)
from .poles import (ComplexPole, SearchWindow, classify, find_poles,
                    siegert_function, winding_count)
from .hermiticity import (SiegertWavefunction, build_wavefunction, conservation_report,
                          expanding_norm, surface_term)
from .feshbach import (ADVANCED, RETARDED, BiorthogonalSystem, EffectiveHamiltonian,
                       SelfEnergy, biorthogonal_expand, biorthogonalize,
                       effective_hamiltonian, lattice_siegert_poles, lead_self_energy,
                       solve_nonlinear_eig)
from .dynamics import evolve_survival, fit_decay_rate, pole_decomposition

__all__ = [name for name in dir() if not name.startswith("_")]
