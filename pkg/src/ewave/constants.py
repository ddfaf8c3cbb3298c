"""Physical constants and the unit systems used throughout the package.

All internal computation uses electron natural units (hbar = m_e = c = 1):
lengths in reduced Compton wavelengths hbar/(m_e c), times in hbar/(m_e c^2),
momenta in m_e c, energies in m_e c^2.  Electric fields are measured in
Schwinger units m_e^2 c^3 / (e hbar), which makes the stored elementary-charge
magnitude equal to one and keeps every force expression free of an
electromagnetic-unit convention.  SI values enter only at the I/O boundary
(config parsing / result emission).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["PhysicalConstants", "UnitScales", "NATURAL", "SI", "SCALES"]


@dataclass(frozen=True)
class PhysicalConstants:
    """Fundamental constants in a single consistent unit system.

    Attributes
    ----------
    hbar : float
        Reduced Planck constant (action).
    c : float
        Speed of light.
    m_e : float
        Electron rest mass.
    e_charge : float
        Elementary charge magnitude (always positive; the electron's
        negative sign is applied explicitly where forces/potentials are
        formed).
    lambda_c : float
        Compton wavelength h/(m_e c).
    """

    hbar: float
    c: float
    m_e: float
    e_charge: float
    lambda_c: float

    def __post_init__(self) -> None:
        for name in ("hbar", "c", "m_e", "e_charge", "lambda_c"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"constant {name!r} must be strictly positive")
        consistent = 2.0 * math.pi * self.hbar / (self.m_e * self.c)
        if abs(self.lambda_c - consistent) > 1e-12 * consistent:
            raise ValueError(
                "lambda_c inconsistent with 2*pi*hbar/(m_e*c): "
                f"{self.lambda_c!r} vs {consistent!r}"
            )


#: CODATA-2018 values, full double precision.
SI = PhysicalConstants(
    hbar=1.054571817e-34,       # J s (exact, from h = 6.62607015e-34)
    c=299792458.0,              # m/s (exact)
    m_e=9.1093837015e-31,       # kg
    e_charge=1.602176634e-19,   # C (exact)
    lambda_c=2.0 * math.pi * 1.054571817e-34 / (9.1093837015e-31 * 299792458.0),
)

#: Electron natural units: hbar = m_e = c = 1, fields in Schwinger units.
NATURAL = PhysicalConstants(
    hbar=1.0,
    c=1.0,
    m_e=1.0,
    e_charge=1.0,
    lambda_c=2.0 * math.pi,
)


@dataclass(frozen=True)
class UnitScales:
    """Multiplicative factors: (value in natural units) * scale = SI value."""

    length: float        # m per natural length
    time: float          # s per natural time
    momentum: float      # kg m/s per natural momentum
    energy: float        # J per natural energy
    velocity: float      # m/s per natural velocity
    frequency: float     # rad/s per natural angular frequency
    e_field: float       # V/m per natural (Schwinger-unit) field
    rate: float          # 1/s per natural rate

    @staticmethod
    def from_si(si: PhysicalConstants) -> "UnitScales":
        length = si.hbar / (si.m_e * si.c)            # reduced Compton wavelength
        time = si.hbar / (si.m_e * si.c**2)
        momentum = si.m_e * si.c
        energy = si.m_e * si.c**2
        e_field = si.m_e**2 * si.c**3 / (si.e_charge * si.hbar)  # Schwinger field
        return UnitScales(
            length=length,
            time=time,
            momentum=momentum,
            energy=energy,
            velocity=si.c,
            frequency=1.0 / time,
            e_field=e_field,
            rate=1.0 / time,
        )


SCALES = UnitScales.from_si(SI)
