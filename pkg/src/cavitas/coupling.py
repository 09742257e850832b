"""Derived physical quantities for the coherent-scattering configuration.

Everything here is a pure function of the experiment configuration:
polarizability, trap field, cavity geometry, zero-point fluctuations, the
cavity frequency-shift scale G_perp, the coherent-scattering and
drive couplings, gas damping, thermal occupation and the quantum
cooperativity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import EnvironmentSpec, ExperimentSpec, ParticleSpec, TrapSpec, CavitySpec
from .constants import CONST
from .errors import UnsupportedPolarization


@dataclass(frozen=True)
class DerivedParams:
    alpha: float         # C m^2 / V
    e0: float            # V/m
    cavity_length: float  # m
    mode_volume: float   # m^3
    g_perp: float        # rad/s
    kappa: float         # rad/s
    x_zpf: float         # m
    y_zpf: float         # m
    z_zpf: float         # m
    g_y: float           # rad/s, signed
    g_z_mag: float       # rad/s, magnitude (quadrature-phase coupling)
    g_dr_single: float   # rad/s
    gamma_m: float       # rad/s
    n_th: float          # dimensionless
    phi: float           # rad
    envelope: float      # dimensionless, in (0, 1]


def polarizability(particle: ParticleSpec) -> float:
    """Rayleigh polarizability 4 pi eps0 R^3 (n^2-1)/(n^2+2)."""
    n2 = particle.refractive_index**2
    return 4.0 * math.pi * CONST.eps0 * particle.radius**3 * (n2 - 1.0) / (n2 + 2.0)


def trap_field(trap: TrapSpec) -> float:
    """Focal electric field sqrt(4 P / (pi eps0 c w_x w_y))."""
    return math.sqrt(4.0 * trap.power /
                     (math.pi * CONST.eps0 * CONST.c * trap.waist_x * trap.waist_y))


def cavity_geometry(cavity: CavitySpec) -> tuple[float, float, float]:
    """(length, mode volume, linewidth) from FSR, finesse and waist."""
    length = math.pi * CONST.c / cavity.fsr
    volume = math.pi * cavity.waist**2 * length / 4.0
    kappa = cavity.fsr / cavity.finesse
    return length, volume, kappa


def zpf(mass: float, omega: float) -> float:
    """Zero-point fluctuation sqrt(hbar / (2 m Omega))."""
    return math.sqrt(CONST.hbar / (2.0 * mass * omega))


def coupling_g_perp(spec: ExperimentSpec) -> float:
    """Cavity resonance shift for a particle at an intensity antinode."""
    alpha = polarizability(spec.particle)
    e0 = trap_field(spec.trap)
    _, volume, _ = cavity_geometry(spec.cavity)
    omega_c = 2.0 * math.pi * CONST.c / spec.cavity.wavelength
    return alpha * e0 * math.sqrt(omega_c / (2.0 * CONST.hbar * CONST.eps0 * volume))


def standing_wave_phase(spec: ExperimentSpec) -> float:
    """Phase 2 pi y0 / lambda_c; pi/2 at the intensity minimum."""
    return 2.0 * math.pi * spec.position.y0 / spec.cavity.wavelength


def transverse_envelope(spec: ExperimentSpec) -> float:
    """Gaussian cavity-mode amplitude factor exp(-(dx^2+dz^2)/w_c^2)."""
    pos = spec.position
    return math.exp(-(pos.dx**2 + pos.dz**2) / spec.cavity.waist**2)


def coupling_cs(spec: ExperimentSpec) -> tuple[float, float]:
    """Coherent-scattering couplings (g_y signed, |g_z|).

    g_y couples the amplitude quadrature through sin(phi), g_z the phase
    quadrature through cos(phi); both carry the transverse Gaussian
    envelope.  Requires x-polarized trap light.
    """
    if spec.trap.polarization_angle != 0.0:
        raise UnsupportedPolarization(
            "coupling formulas require polarization_angle = 0")
    g_perp = coupling_g_perp(spec)
    phi = standing_wave_phase(spec)
    env = transverse_envelope(spec)
    k_c = 2.0 * math.pi / spec.cavity.wavelength
    k_t = 2.0 * math.pi / spec.trap.wavelength
    y_zpf = zpf(spec.particle.mass, spec.modes.omega_y)
    z_zpf = zpf(spec.particle.mass, spec.modes.omega_z)
    g_y = 0.5 * g_perp * k_c * y_zpf * math.sin(phi) * env
    g_z = abs(0.5 * g_perp * k_t * z_zpf * math.cos(phi) * env)
    return g_y, g_z


def coupling_drive(spec: ExperimentSpec, n_cav: float) -> tuple[float, float]:
    """Active-drive coupling: single photon value and sqrt(n_cav) enhanced."""
    alpha = polarizability(spec.particle)
    _, volume, _ = cavity_geometry(spec.cavity)
    omega_c = 2.0 * math.pi * CONST.c / spec.cavity.wavelength
    k_c = 2.0 * math.pi / spec.cavity.wavelength
    y_zpf = zpf(spec.particle.mass, spec.modes.omega_y)
    phi = standing_wave_phase(spec)
    single = (alpha * omega_c / (2.0 * CONST.eps0 * volume)
              * k_c * y_zpf * math.sin(2.0 * phi))
    return single, single * math.sqrt(n_cav)


def gas_damping(particle: ParticleSpec, env: EnvironmentSpec) -> float:
    """Kinetic gas damping 15.8 r^2 p / (m v_gas), linear in pressure."""
    v_gas = math.sqrt(3.0 * CONST.kB * env.temperature / env.gas_molecular_mass)
    return 15.8 * particle.radius**2 * env.pressure / (particle.mass * v_gas)


def thermal_occupation(temperature: float, omega: float) -> float:
    """High-temperature occupation kB T / (hbar Omega)."""
    return CONST.kB * temperature / (CONST.hbar * omega)


def cooperativity(g_max: float, kappa: float, gamma_m: float,
                  n_th: float, recoil_rate: float = 0.0) -> float:
    """Quantum cooperativity (2g)^2 / (kappa (Gamma_m (n_th+1) + Gamma_rec))."""
    return (2.0 * g_max)**2 / (kappa * (gamma_m * (n_th + 1.0) + recoil_rate))


def derive_all(spec: ExperimentSpec) -> DerivedParams:
    """Populate every derived quantity; pure and deterministic."""
    alpha = polarizability(spec.particle)
    e0 = trap_field(spec.trap)
    length, volume, kappa = cavity_geometry(spec.cavity)
    g_perp = coupling_g_perp(spec)
    mass = spec.particle.mass
    g_y, g_z = coupling_cs(spec)
    single, _ = coupling_drive(spec, 0.0)
    return DerivedParams(
        alpha=alpha,
        e0=e0,
        cavity_length=length,
        mode_volume=volume,
        g_perp=g_perp,
        kappa=kappa,
        x_zpf=zpf(mass, spec.modes.omega_x),
        y_zpf=zpf(mass, spec.modes.omega_y),
        z_zpf=zpf(mass, spec.modes.omega_z),
        g_y=g_y,
        g_z_mag=g_z,
        g_dr_single=single,
        gamma_m=gas_damping(spec.particle, spec.env),
        n_th=thermal_occupation(spec.env.temperature, spec.modes.omega_y),
        phi=standing_wave_phase(spec),
        envelope=transverse_envelope(spec),
    )
