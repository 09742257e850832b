"""Coherent-scattering cavity optomechanics toolkit.

Models the coupling of a levitated nanoparticle to a high-finesse cavity
via coherent scattering, predicts and synthesizes normal-mode-splitting
spectra, cross-validates against Langevin time-domain simulation, and
extracts physical parameters from spectra by damped least squares.
"""

from .config import (CavitySpec, EnvironmentSpec, ExperimentSpec,
                     MechanicalModes, ParticlePosition, ParticleSpec,
                     TrapSpec, apply_overrides, load_spec,
                     paper_baseline_path, serialize, validate)
from .constants import CONST, PhysConstants
from .coupling import DerivedParams, cooperativity, coupling_cs, derive_all
from .fitting import (BranchTrack, CrossingFit, FitResult, SinusoidFit,
                      extract_peaks, fit_avoided_crossing,
                      fit_position_sinusoid, fit_psd, fit_uncertainties)
from .langevin import SimConfig, SimState, oracle_compare, simulate, welch_psd
from .spectrum import (HybridModes, PsdSeries, SpectrumModelParams,
                       hybrid_frequencies, optical_damping, params_from_spec,
                       psd_model, spring_shift, susceptibility_sq,
                       sweep_detuning, sweep_position, synthesize_spectrum)

__version__ = "0.1.0"
