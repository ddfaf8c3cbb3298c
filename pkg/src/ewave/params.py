"""Beam kinematics, drive-field description, wavepacket source parameters and
all derived dimensionless interaction numbers.

Everything here is a pure function of its inputs; all types are frozen
dataclasses, safe to share across threads.  Quantities are in electron
natural units (see :mod:`ewave.constants`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import NATURAL, PhysicalConstants

__all__ = [
    "BeamState",
    "FieldDrive",
    "SourceWavepacket",
    "InteractionParams",
    "QEDLink",
    "beam_from_gamma",
    "make_drive",
    "make_source",
    "interaction_params",
    "wavepacket_size_at",
    "critical_drift_length",
    "cutoff_wavelength",
    "qed_coupling",
    "gamma_sp_from_upsilon",
    "sinc",
]

_REL_TOL = 1e-12


def sinc(x):
    """sin(x)/x with sinc(0) = 1 (unnormalized convention).

    Works on scalars and numpy arrays.
    """
    x = np.asarray(x, dtype=float)
    out = np.sinc(x / np.pi)  # numpy's sinc is sin(pi t)/(pi t)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class BeamState:
    """Relativistic kinematics of the electron beam center.

    Attributes
    ----------
    gamma0 : float
        Lorentz factor of the carrier momentum.
    beta0 : float
        v0/c.
    v0 : float
        Carrier group velocity.
    p0 : float
        Carrier momentum gamma0 * m_e * beta0 * c.
    m_star : float
        Longitudinal effective mass gamma0**3 * m_e governing dispersion
        of momentum deviations around p0.
    lambda_c_star : float
        Compton wavelength divided by gamma0**3 (the length scale in the
        free-expansion law).
    constants : PhysicalConstants
        Unit system the values are expressed in.
    """

    gamma0: float
    beta0: float
    v0: float
    p0: float
    m_star: float
    lambda_c_star: float
    constants: PhysicalConstants = field(default=NATURAL, repr=False)

    def __post_init__(self) -> None:
        if self.gamma0 < 1.0:
            raise ValueError(f"gamma0 must be >= 1, got {self.gamma0}")
        k = self.constants
        if self.beta0 > 0:
            gamma_chk = 1.0 / math.sqrt(1.0 - self.beta0**2)
            if abs(gamma_chk - self.gamma0) > _REL_TOL * self.gamma0:
                raise ValueError("gamma0 and beta0 are inconsistent")
        expected_p0 = self.gamma0 * k.m_e * self.beta0 * k.c
        if abs(self.p0 - expected_p0) > _REL_TOL * max(expected_p0, 1e-300):
            raise ValueError("p0 != gamma0 * m_e * beta0 * c")
        if abs(self.m_star - self.gamma0**3 * k.m_e) > _REL_TOL * self.m_star:
            raise ValueError("m_star != gamma0**3 * m_e")
        expected_lcs = k.lambda_c / self.gamma0**3
        if abs(self.lambda_c_star - expected_lcs) > _REL_TOL * expected_lcs:
            raise ValueError("lambda_c_star != lambda_c / gamma0**3")


def beam_from_gamma(
    gamma0: float, constants: PhysicalConstants = NATURAL
) -> BeamState:
    """Build a :class:`BeamState` from the Lorentz factor alone."""
    if gamma0 < 1.0:
        raise ValueError(f"gamma0 must be >= 1, got {gamma0}")
    beta0 = math.sqrt(max(0.0, 1.0 - 1.0 / gamma0**2))
    k = constants
    return BeamState(
        gamma0=gamma0,
        beta0=beta0,
        v0=beta0 * k.c,
        p0=gamma0 * k.m_e * beta0 * k.c,
        m_star=gamma0**3 * k.m_e,
        lambda_c_star=k.lambda_c / gamma0**3,
        constants=constants,
    )


@dataclass(frozen=True)
class FieldDrive:
    """The driving radiation wave inside the interaction window.

    Attributes
    ----------
    E0 : float
        Field amplitude of the synchronous harmonic.
    omega : float
        Angular frequency.
    lambda_ : float
        Free-space wavelength 2*pi*c/omega.
    phi0 : float
        Phase of the wave at the arrival of the wavepacket center at the
        window entrance (phi0 = 0 accelerates at synchronism).
    harmonics : tuple of (float, float)
        (E_m, q_zm) amplitude/wavenumber pairs of the longitudinal Floquet
        components; at least one entry.
    L_I : float
        Interaction window length.
    window_start : float
        Lab position of the window entrance (default 0).
    synchronous_index : int
        Index into ``harmonics`` of the component closest to synchronism
        with a given beam (set by :func:`make_drive`).
    """

    E0: float
    omega: float
    lambda_: float
    phi0: float
    harmonics: tuple
    L_I: float
    window_start: float = 0.0
    synchronous_index: int = 0
    constants: PhysicalConstants = field(default=NATURAL, repr=False)

    def __post_init__(self) -> None:
        k = self.constants
        if not self.harmonics:
            raise ValueError("harmonics must be non-empty")
        if self.L_I <= 0:
            raise ValueError("L_I must be positive")
        expected = 2.0 * math.pi * k.c / self.omega
        if abs(self.lambda_ - expected) > _REL_TOL * expected:
            raise ValueError("lambda * omega != 2*pi*c")
        if not (0 <= self.synchronous_index < len(self.harmonics)):
            raise ValueError("synchronous_index out of range")

    @property
    def q_z(self) -> float:
        """Wavenumber of the synchronous harmonic."""
        return self.harmonics[self.synchronous_index][1]

    @property
    def E_sync(self) -> float:
        """Amplitude of the synchronous harmonic."""
        return self.harmonics[self.synchronous_index][0]


def make_drive(
    E0: float,
    omega: float,
    beam: BeamState,
    phi0: float = 0.0,
    L_I: float = 1.0,
    q_z: float | None = None,
    harmonics: tuple | None = None,
    window_start: float = 0.0,
) -> FieldDrive:
    """Assemble a :class:`FieldDrive`, flagging the synchronous harmonic.

    If neither ``q_z`` nor ``harmonics`` is given the single harmonic is
    placed exactly at synchronism q_z = omega/v0.
    """
    k = beam.constants
    if harmonics is None:
        if q_z is None:
            q_z = omega / beam.v0
        harmonics = ((E0, q_z),)
    sync = min(
        range(len(harmonics)),
        key=lambda i: abs(omega / beam.v0 - harmonics[i][1]),
    )
    return FieldDrive(
        E0=E0,
        omega=omega,
        lambda_=2.0 * math.pi * k.c / omega,
        phi0=phi0,
        harmonics=tuple(harmonics),
        L_I=L_I,
        window_start=window_start,
        synchronous_index=sync,
        constants=k,
    )


def drive_from_upsilon(
    upsilon: float,
    omega: float,
    beam: BeamState,
    phi0: float = 0.0,
    L_I: float = 1.0,
    q_z: float | None = None,
    window_start: float = 0.0,
) -> FieldDrive:
    """Assemble a drive whose amplitude realizes a target coupling strength:
    E0 = 2 hbar omega Upsilon / (e L_I)."""
    k = beam.constants
    e0 = 2.0 * k.hbar * omega * upsilon / (k.e_charge * L_I)
    return make_drive(
        E0=e0, omega=omega, beam=beam, phi0=phi0, L_I=L_I, q_z=q_z,
        window_start=window_start,
    )


@dataclass(frozen=True)
class SourceWavepacket:
    """Gaussian wavepacket source and its free-drift history.

    Attributes
    ----------
    sigma_z0 : float
        Spatial standard deviation at the waist (virtual cathode).
    sigma_p0 : float
        Momentum standard deviation, hbar/(2 sigma_z0) at the waist.
    L_D : float
        Effective drift length from the waist to the window entrance.
    t_D : float
        Drift time L_D / v0.
    t_R_par : float
        Longitudinal Rayleigh time 4*pi*sigma_z0^2/(lambda_c_star * c)
        = 2 m_star sigma_z0^2 / hbar; the waist grows by sqrt(2) after t_R_par.
    sigma_z_tD : float
        Spatial width at the window entrance.
    sigma_p_complex_tD : complex
        Complex momentum-width-squared at the entrance,
        sigma_p0^2 / (1 + i t_D/t_R_par); its phase carries the quadratic
        drift phase of the spectrum.
    """

    sigma_z0: float
    sigma_p0: float
    L_D: float
    t_D: float
    t_R_par: float
    sigma_z_tD: float
    sigma_p_complex_tD: complex
    constants: PhysicalConstants = field(default=NATURAL, repr=False)

    def __post_init__(self) -> None:
        k = self.constants
        if self.sigma_z0 <= 0:
            raise ValueError("sigma_z0 must be positive")
        if self.t_D < 0:
            raise ValueError("t_D must be >= 0")
        if abs(self.sigma_p0 * self.sigma_z0 - k.hbar / 2.0) > _REL_TOL * k.hbar:
            raise ValueError("sigma_p0 * sigma_z0 != hbar/2 (waist condition)")
        if self.sigma_z_tD < self.sigma_z0 * (1.0 - _REL_TOL):
            raise ValueError("sigma_z(t_D) cannot be below the waist size")
        # lower bound of the drift-expansion law
        bound = math.sqrt(self.lambda_c_star_c_tD() / (2.0 * math.pi))
        if self.sigma_z_tD < bound * (1.0 - 1e-9):
            raise ValueError("sigma_z(t_D) below the free-expansion lower bound")
        mag = self.sigma_p0**2 / math.sqrt(1.0 + (self.t_D / self.t_R_par) ** 2)
        if abs(abs(self.sigma_p_complex_tD) - mag) > 1e-9 * mag:
            raise ValueError("|sigma_p_complex_tD| inconsistent with t_D/t_R")

    def lambda_c_star_c_tD(self) -> float:
        """lambda_c_star * c * t_D, the scale in the minimum-size bound."""
        k = self.constants
        # t_R_par = 4*pi*sigma_z0^2/(lambda_c_star c)  =>  lambda_c_star*c = 4*pi*sigma_z0^2/t_R_par
        return 4.0 * math.pi * self.sigma_z0**2 * self.t_D / self.t_R_par

    @property
    def tau(self) -> float:
        """Dimensionless drift age t_D / t_R_par."""
        return self.t_D / self.t_R_par


def make_source(
    sigma_z0: float,
    beam: BeamState,
    L_D: float = 0.0,
    t_D: float | None = None,
) -> SourceWavepacket:
    """Assemble a :class:`SourceWavepacket` from the waist size and drift.

    Provide either the drift length ``L_D`` (converted with v0) or the
    drift time ``t_D`` directly.
    """
    if sigma_z0 <= 0:
        raise ValueError("sigma_z0 must be positive")
    k = beam.constants
    if t_D is None:
        t_D = L_D / beam.v0 if beam.v0 > 0 else 0.0
    else:
        L_D = t_D * beam.v0
    sigma_p0 = k.hbar / (2.0 * sigma_z0)
    t_r = 4.0 * math.pi * sigma_z0**2 / (beam.lambda_c_star * k.c)
    tau = t_D / t_r
    sigma_z_td = sigma_z0 * math.sqrt(1.0 + tau**2)
    sigma_p_c = sigma_p0**2 / (1.0 + 1j * tau)
    return SourceWavepacket(
        sigma_z0=sigma_z0,
        sigma_p0=sigma_p0,
        L_D=L_D,
        t_D=t_D,
        t_R_par=t_r,
        sigma_z_tD=sigma_z_td,
        sigma_p_complex_tD=sigma_p_c,
        constants=k,
    )


@dataclass(frozen=True)
class InteractionParams:
    """All dimensionless numbers of a single interaction configuration.

    Attributes
    ----------
    upsilon : float
        Interaction strength e E0 L_I / (2 hbar omega); upsilon^2 is the
        first-order sideband weight.
    theta_bar : float
        Detuning (omega/v0 - q_z) L_I, the phase slip over the window.
    delta_small : float
        Single-photon recoil parameter hbar omega / (2 m_star v0^2).
    epsilon : float
        Interaction-length recoil parameter delta_small * (omega/v0) * L_I;
        splits the emission/absorption detunings.
    theta_e, theta_a : float
        Emission/absorption detunings theta_bar +/- epsilon/2.
    p_rec_e, p_rec_a : float
        Emission/absorption recoil momenta (hbar omega/v0)(1 +/- delta).
    p_rec0 : float
        Degenerate recoil hbar omega / v0.
    Gamma : float
        Wavepacket size in wave units, (omega/v0) * sigma_z(t_D)
        = 2*pi*sigma_z(t_D)/(beta0 lambda).
    """

    upsilon: float
    theta_bar: float
    delta_small: float
    epsilon: float
    theta_e: float
    theta_a: float
    p_rec_e: float
    p_rec_a: float
    p_rec0: float
    Gamma: float

    def __post_init__(self) -> None:
        if abs((self.theta_e - self.theta_a) - self.epsilon) > 1e-12 * max(
            1.0, abs(self.epsilon)
        ):
            raise ValueError("theta_e - theta_a != epsilon")
        s = self.p_rec_e + self.p_rec_a
        if abs(s - 2.0 * self.p_rec0) > 1e-12 * max(s, 1e-300):
            raise ValueError("p_rec_e + p_rec_a != 2 p_rec0")
        if self.Gamma < 0:
            raise ValueError("Gamma must be >= 0")


def interaction_params(
    beam: BeamState, drive: FieldDrive, src: SourceWavepacket
) -> InteractionParams:
    """Derive the full set of dimensionless interaction numbers."""
    k = beam.constants
    if drive.L_I <= 0:
        raise ValueError("L_I must be positive")
    omega = drive.omega
    v0 = beam.v0
    q_z = drive.q_z
    upsilon = k.e_charge * drive.E_sync * drive.L_I / (2.0 * k.hbar * omega)
    theta_bar = (omega / v0 - q_z) * drive.L_I
    delta = k.hbar * omega / (2.0 * beam.m_star * v0**2)
    epsilon = delta * (omega / v0) * drive.L_I
    p_rec0 = k.hbar * omega / v0
    pars = InteractionParams(
        upsilon=upsilon,
        theta_bar=theta_bar,
        delta_small=delta,
        epsilon=epsilon,
        theta_e=theta_bar + epsilon / 2.0,
        theta_a=theta_bar - epsilon / 2.0,
        p_rec_e=p_rec0 * (1.0 + delta),
        p_rec_a=p_rec0 * (1.0 - delta),
        p_rec0=p_rec0,
        Gamma=(omega / v0) * src.sigma_z_tD,
    )
    # both forms of the size parameter must agree
    gamma_alt = 2.0 * math.pi * src.sigma_z_tD / (beam.beta0 * drive.lambda_)
    if abs(pars.Gamma - gamma_alt) > _REL_TOL * max(pars.Gamma, 1e-300):
        raise ValueError("Gamma forms disagree (unit inconsistency)")
    return pars


def wavepacket_size_at(sigma_z0: float, t: float, beam: BeamState) -> float:
    """Free-drift wavepacket size sqrt(sigma_z0^2 + (lambda_c_star c t / (4 pi sigma_z0))^2).

    Equals sigma_z0 * sqrt(1 + (t/t_R_par)^2).
    """
    if sigma_z0 <= 0:
        raise ValueError("sigma_z0 must be positive")
    if t < 0:
        raise ValueError("t must be >= 0")
    k = beam.constants
    spread = beam.lambda_c_star * k.c * t / (4.0 * math.pi * sigma_z0)
    return math.sqrt(sigma_z0**2 + spread**2)


def critical_drift_length(beam: BeamState, lambda_: float) -> float:
    """Drift length beyond which the minimum achievable size parameter exceeds sqrt(2).

    z_G = beta0^3 gamma0^3 lambda^2 / (pi lambda_c).
    """
    if lambda_ <= 0:
        raise ValueError("lambda must be positive")
    k = beam.constants
    return beam.beta0**3 * beam.gamma0**3 * lambda_**2 / (math.pi * k.lambda_c)


def cutoff_wavelength(beam: BeamState) -> float:
    """Short-wavelength limit (pi lambda_c / (beta^3 gamma^3))**0.5.

    Natural-unit expression (the literal form is the square root of a
    length): it is the wavelength at which the critical drift length
    equals one natural length unit.
    """
    k = beam.constants
    if beam.beta0 == 0:
        raise ValueError("cutoff undefined for a beam at rest")
    return math.sqrt(math.pi * k.lambda_c / (beam.beta0**3 * beam.gamma0**3))


@dataclass(frozen=True)
class QEDLink:
    """Spontaneous-rate / photon-flux pair linking the field strength to QED rates."""

    gamma_sp: float
    nu_q: float

    def __post_init__(self) -> None:
        if self.gamma_sp < 0:
            raise ValueError("gamma_sp must be >= 0")
        if self.nu_q < 0:
            raise ValueError("nu_q must be >= 0")


def qed_coupling(link: QEDLink, beam: BeamState, L_I: float) -> float:
    """Upsilon^2 = (L_I / v0) * gamma_sp * nu_q."""
    if L_I <= 0:
        raise ValueError("L_I must be positive")
    return (L_I / beam.v0) * link.gamma_sp * link.nu_q


def gamma_sp_from_upsilon(
    upsilon: float, nu_q: float, beam: BeamState, L_I: float
) -> float:
    """Invert the coupling relation: gamma_sp = upsilon^2 v0 / (L_I nu_q)."""
    if L_I <= 0:
        raise ValueError("L_I must be positive")
    if nu_q == 0:
        raise ZeroDivisionError(
            "cannot infer gamma_sp from upsilon with nu_q = 0 stimulating photons"
        )
    return upsilon**2 * beam.v0 / (L_I * nu_q)
