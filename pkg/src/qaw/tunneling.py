"""Rectangular-barrier transmission probabilities.

The escape-acceptance rule of the adiabatic optimizer and the dye-electron
worked cases both reduce to the same arithmetic: a particle of energy E
meets a barrier of height U and width L, and crosses with probability

    T = exp(-2 k2 L),   k2 = sqrt(2 m (U - E)) / hbar.

Everything here is a stateless pure function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import AboveBarrierError

#: J per eV (CODATA exact).
EV_J = 1.602176634e-19
#: Reduced Planck constant, J*s (CODATA).
HBAR = 1.054571817e-34
#: Electron mass, kg (CODATA).
ELECTRON_MASS = 9.1093837015e-31
#: Hydrogen ground-state binding energy, eV.
RYDBERG_EV = 13.6


@dataclass(frozen=True)
class TunnelBarrier:
    """Rectangular barrier seen by a particle, SI units throughout."""

    barrier_height: float  # U, J
    particle_energy: float  # E, J
    width: float  # L, m
    mass: float = ELECTRON_MASS  # kg
    hbar: float = HBAR  # J*s

    def __post_init__(self):
        if self.barrier_height <= 0:
            raise ValueError("barrier height must be > 0")
        if self.width < 0:
            raise ValueError("barrier width must be >= 0")
        if self.mass <= 0 or self.hbar <= 0:
            raise ValueError("mass and hbar must be > 0")
        if self.particle_energy < 0:
            raise ValueError("particle energy must be >= 0")

    @classmethod
    def from_ev(cls, barrier_height_ev: float, particle_energy_ev: float,
                width: float, mass: float = ELECTRON_MASS,
                hbar: float = HBAR) -> "TunnelBarrier":
        return cls(barrier_height_ev * EV_J, particle_energy_ev * EV_J,
                   width, mass, hbar)

    @property
    def barrier_height_ev(self) -> float:
        return self.barrier_height / EV_J

    @property
    def particle_energy_ev(self) -> float:
        return self.particle_energy / EV_J


@dataclass(frozen=True)
class TunnelResult:
    k2: float  # decay wavenumber inside the barrier, 1/m
    exponent: float  # 2 * k2 * L, dimensionless
    transmission: float  # T = exp(-exponent), in (0, 1]


def barrier_height_bohr(z_eff: float, n1: int, n2: int) -> float:
    """Hydrogenic level spacing 13.6 * z_eff * (1/n1^2 - 1/n2^2), in eV.

    The worked barrier height 10.2 eV is the pure hydrogenic 1->2 value;
    z_eff scales it for screened cores.
    """
    if z_eff <= 0:
        raise ValueError("z_eff must be > 0")
    if n1 < 1:
        raise ValueError("n1 must be >= 1")
    if n2 <= n1:
        raise ValueError(f"levels must satisfy n2 > n1, got n1={n1}, n2={n2}")
    return RYDBERG_EV * z_eff * (1.0 / n1**2 - 1.0 / n2**2)


def transmission(barrier: TunnelBarrier) -> TunnelResult:
    """Transmission through a rectangular barrier in the forbidden regime E < U."""
    u, e = barrier.barrier_height, barrier.particle_energy
    if e >= u:
        raise AboveBarrierError(
            f"particle energy {e / EV_J:g} eV is not below the barrier "
            f"{u / EV_J:g} eV; treat explicitly as T=1 if that is intended")
    k2 = math.sqrt(2.0 * barrier.mass * (u - e)) / barrier.hbar
    exponent = 2.0 * k2 * barrier.width
    return TunnelResult(k2=k2, exponent=exponent, transmission=math.exp(-exponent))


def average_electron_energy(total_energy: float, electron_count: float) -> float:
    """Total energy (J) shared over a number of electrons, as eV per electron."""
    if electron_count < 0:
        raise ValueError("electron count must be positive")
    return (total_energy / EV_J) / electron_count
