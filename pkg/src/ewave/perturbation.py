"""Closed-form momentum spectra and momentum transfers of the stimulated
interaction, to first order in the field.

The ground truth for the cross term is assembled directly from the
zeroth-order spectrum ``c0`` and the first-order transition amplitude
``c1`` (emission + absorption), rather than from any pre-expanded
expression: the published small-recoil forms are recovered as verified
limits.  Sign convention: ``phi0 = 0`` at synchronism accelerates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .constants import NATURAL, PhysicalConstants
from .params import (
    BeamState,
    FieldDrive,
    InteractionParams,
    QEDLink,
    SourceWavepacket,
    sinc,
)

__all__ = [
    "MomentumGrid",
    "SpectrumResult",
    "EnsembleSpec",
    "RegimeWarning",
    "make_momentum_grid",
    "rho0",
    "dp_point",
    "rho1_general",
    "rho1_simplified",
    "rho2",
    "dp1",
    "dp2",
    "dp2_classical_limit",
    "stimulated_rate",
    "pinem_spectrum",
    "ensemble_average",
    "resolution_bound",
    "normalization_denominator",
    "compute_spectrum",
]


class RegimeWarning(UserWarning):
    """A requested evaluation is outside its regime of validity."""


def _trapz(y: np.ndarray, dx: float) -> float:
    # uniform-grid trapezoid
    return float(np.trapezoid(y, dx=dx)) if hasattr(np, "trapezoid") else float(
        np.trapz(y, dx=dx)
    )


@dataclass(frozen=True)
class MomentumGrid:
    """Uniform grid of final-momentum values p'.

    Stored as exact offsets from the carrier momentum p0 so the spacing
    stays uniform at machine precision even when p0 dwarfs the span
    (absolute samples near p0 ~ 1 cannot represent nm-scale spacing
    uniformly in float64).
    """

    p0: float
    offsets: np.ndarray

    def __post_init__(self) -> None:
        xi = np.asarray(self.offsets, dtype=float)
        if xi.ndim != 1 or xi.size < 2:
            raise ValueError("offsets must be a 1-D array with >= 2 points")
        d = np.diff(xi)
        if not np.all(d > 0):
            raise ValueError("offsets must be strictly increasing")
        tol = max(1e-12 * d.mean(), 4.0 * np.finfo(float).eps * np.abs(xi).max())
        if (d.max() - d.min()) > tol:
            raise ValueError("grid spacing not uniform to 1e-12 relative")
        object.__setattr__(self, "offsets", xi)

    @property
    def samples(self) -> np.ndarray:
        return self.p0 + self.offsets

    @property
    def dp(self) -> float:
        return float(self.offsets[1] - self.offsets[0])

    def require_coverage(self, halfspan: float) -> None:
        """Raise if the grid does not reach p0 +/- halfspan."""
        if self.offsets[0] > -halfspan or self.offsets[-1] < halfspan:
            raise ValueError(
                f"momentum grid covers p0 + [{self.offsets[0]!r}, "
                f"{self.offsets[-1]!r}], needs p0 +/- {halfspan!r}"
            )

    def recentered(self, new_p0: float) -> "MomentumGrid":
        """Same physical sample positions, expressed around a new carrier."""
        return MomentumGrid(p0=new_p0, offsets=self.offsets + (self.p0 - new_p0))


def make_momentum_grid(
    src: SourceWavepacket,
    params: Optional[InteractionParams] = None,
    p0: float = 0.0,
    n: int = 2**14,
    halfspan: Optional[float] = None,
) -> MomentumGrid:
    """Default grid: ``n`` points spanning p0 +/- max(10 sigma_p0, 6 p_rec0).

    FFT-style layout (p0 itself is a sample; the last point stops one step
    short of +halfspan).
    """
    if halfspan is None:
        halfspan = 10.0 * src.sigma_p0
        if params is not None:
            halfspan = max(halfspan, 6.0 * params.p_rec0)
    step = 2.0 * halfspan / n
    return MomentumGrid(p0=p0, offsets=(np.arange(n) - n // 2) * step)


@dataclass(frozen=True)
class EnsembleSpec:
    """Thermal spread of the carrier momentum across an electron ensemble."""

    sigma_p_th: float
    distribution: str = "gaussian"

    def __post_init__(self) -> None:
        if self.sigma_p_th < 0:
            raise ValueError("sigma_p_th must be >= 0")
        if self.distribution != "gaussian":
            raise ValueError(f"unknown ensemble kernel {self.distribution!r}")


@dataclass(frozen=True)
class SpectrumResult:
    """Decomposed momentum density on a grid, with its closed-form moments.

    ``total = rho0 + rho1 + rho2`` integrates to one; ``rho1``/``rho2`` are
    pure redistributions with vanishing zeroth moments.
    """

    grid: MomentumGrid
    rho0: np.ndarray
    rho1: np.ndarray
    rho2: np.ndarray
    total: np.ndarray
    dp1: float
    dp2: float
    dp_point: float
    normalization_denominator: float

    def validate(self, tol: float = 1e-9) -> None:
        dx = self.grid.dp
        if abs(_trapz(self.total, dx) - 1.0) > tol:
            raise ValueError("total density does not integrate to 1")
        if abs(_trapz(self.rho1, dx)) > tol:
            raise ValueError("rho1 zeroth moment does not vanish")
        if abs(_trapz(self.rho2, dx)) > tol:
            raise ValueError("rho2 zeroth moment does not vanish")
        if self.total.min() < -tol * max(1.0, self.total.max()):
            warnings.warn(
                "total density has negative regions; first-order theory is "
                "not self-consistent at this field strength",
                RegimeWarning,
                stacklevel=2,
            )


# ---------------------------------------------------------------------------
# zeroth order


def _c0_centered(xi: np.ndarray, src: SourceWavepacket) -> np.ndarray:
    """Zeroth-order momentum amplitude at offset xi = p - p0 from the carrier.

    Real normalization prefactor; the complex width carries the exact
    quadratic drift phase, so |c0|^2 is the drift-invariant Gaussian.
    """
    s2 = src.sigma_p_complex_tD  # sigma_p0^2 / (1 + i tau)
    norm = (2.0 * math.pi * src.sigma_p0**2) ** (-0.25)
    return norm * np.exp(-(xi**2) / (4.0 * s2))


def rho0(grid: MomentumGrid, src: SourceWavepacket) -> np.ndarray:
    """Initial Gaussian momentum density (unit integral, width sigma_p0)."""
    grid.require_coverage(8.0 * src.sigma_p0)
    s = src.sigma_p0
    x = grid.offsets
    return np.exp(-(x**2) / (2.0 * s**2)) / math.sqrt(2.0 * math.pi * s**2)


# ---------------------------------------------------------------------------
# first order


def dp_point(params: InteractionParams, drive: FieldDrive, beam: BeamState) -> float:
    """Point-particle momentum transfer.

    2 Upsilon (hbar omega / v0) sinc(theta/2) cos(phi0 + theta/2); positive
    (accelerating) at phi0 = 0 and synchronism.
    """
    th = params.theta_bar
    return (
        2.0
        * params.upsilon
        * params.p_rec0
        * sinc(th / 2.0)
        * math.cos(drive.phi0 + th / 2.0)
    )


def normalization_denominator(params: InteractionParams) -> float:
    """1 + Upsilon^2 [sinc^2(theta_e/2) + sinc^2(theta_a/2)]."""
    u2 = params.upsilon**2
    return 1.0 + u2 * (sinc(params.theta_e / 2.0) ** 2 + sinc(params.theta_a / 2.0) ** 2)


def _first_order_amplitude(
    xi: np.ndarray,
    p0: float,
    params: InteractionParams,
    src: SourceWavepacket,
    phi0: float,
) -> np.ndarray:
    """c1 = emission + absorption amplitudes at final momentum p0 + xi."""
    u = params.upsilon
    the, tha = params.theta_e, params.theta_a
    pre, pra = params.p_rec_e, params.p_rec_a
    x_e = 1.0 + (xi + pre / 2.0) / p0
    x_a = 1.0 + (xi - pra / 2.0) / p0
    em = (
        -u
        * x_e
        * sinc(the / 2.0)
        * np.exp(1j * (the / 2.0 + phi0))
        * _c0_centered(xi + pre, src)
    )
    ab = (
        u
        * x_a
        * sinc(tha / 2.0)
        * np.exp(-1j * (tha / 2.0 + phi0))
        * _c0_centered(xi - pra, src)
    )
    return em + ab


def rho1_general(
    grid: MomentumGrid,
    params: InteractionParams,
    src: SourceWavepacket,
    beam: BeamState,
    phi0: float,
) -> np.ndarray:
    """Phase-dependent cross-term density with distinct emission/absorption
    recoils and the full complex drift phase.

    The first-order amplitude is projected onto the orthogonal complement
    of c0 (first-order re-unitarization) so the cross term is a pure
    redistribution; this changes nothing at the degenerate-recoil level and
    leaves the first moment untouched.
    """
    if params.upsilon > 1.0:
        warnings.warn(
            f"upsilon = {params.upsilon:g} is outside the perturbative regime",
            RegimeWarning,
            stacklevel=2,
        )
    grid.require_coverage(max(8.0 * src.sigma_p0, 4.0 * params.p_rec0))
    p0 = grid.p0
    if abs(beam.p0 - p0) > 1e-9 * max(abs(p0), 1e-300):
        raise ValueError("grid.p0 and beam.p0 disagree")
    xi = grid.offsets
    c0g = _c0_centered(xi, src)
    c1 = _first_order_amplitude(xi, p0, params, src, phi0)
    dx = grid.dp
    overlap = _trapz((np.conj(c1) * c0g).real, dx)
    norm0 = _trapz(np.abs(c0g) ** 2, dx)
    c1 = c1 - (overlap / norm0) * c0g
    return 2.0 * (np.conj(c1) * c0g).real / normalization_denominator(params)


def rho1_simplified(
    grid: MomentumGrid,
    params: InteractionParams,
    src: SourceWavepacket,
    beam: BeamState,
    phi0: float,
    drift_phase_slope: Optional[float] = None,
) -> np.ndarray:
    """Degenerate-recoil cross-term density (single recoil p_rec0, single
    detuning theta_bar), assembled exactly from the Gaussian product.

    ``drift_phase_slope`` overrides the phase accumulated per unit momentum
    offset during the pre-window drift; the default is the value implied by
    the complex spectral width (tau * p_rec0 / (2 sigma_p0^2), i.e.
    omega t_D / (m_star v0)), which is the value consistent with
    :func:`rho1_general`.
    """
    if params.epsilon >= 0.1:
        warnings.warn(
            f"epsilon = {params.epsilon:g} is not small; the degenerate-recoil "
            "form is unreliable here",
            RegimeWarning,
            stacklevel=2,
        )
    grid.require_coverage(max(8.0 * src.sigma_p0, 4.0 * params.p_rec0))
    p0 = grid.p0
    if abs(beam.p0 - p0) > 1e-9 * max(abs(p0), 1e-300):
        raise ValueError("grid.p0 and beam.p0 disagree")
    s = src.sigma_p0
    pr = params.p_rec0
    tau = src.tau
    gamma0_sq = (pr / (2.0 * s)) ** 2  # waist-size parameter squared
    chi = (
        drift_phase_slope
        if drift_phase_slope is not None
        else tau * pr / (2.0 * s**2)
    )
    th = params.theta_bar
    u = params.upsilon
    d0 = 1.0 + 2.0 * u**2 * sinc(th / 2.0) ** 2
    xi = grid.offsets
    a = th / 2.0 + phi0

    def w(x):
        return np.exp(-(x**2) / (2.0 * s**2)) / math.sqrt(2.0 * math.pi * s**2)

    upper = (p0 + (xi - pr / 2.0)) * w(xi - pr / 2.0) * np.cos(a - chi * (xi - pr / 2.0))
    lower = (p0 + (xi + pr / 2.0)) * w(xi + pr / 2.0) * np.cos(a - chi * (xi + pr / 2.0))
    pref = 2.0 * u * sinc(th / 2.0) * math.exp(-gamma0_sq / 2.0) / (d0 * p0)
    return pref * (upper - lower)


def dp1(params: InteractionParams, drive: FieldDrive, beam: BeamState) -> float:
    """First-order net momentum transfer dp_point * exp(-Gamma^2/2)."""
    return dp_point(params, drive, beam) * math.exp(-params.Gamma**2 / 2.0)


# ---------------------------------------------------------------------------
# second order (incoherent sidebands)


def rho2(
    grid: MomentumGrid, params: InteractionParams, src: SourceWavepacket
) -> np.ndarray:
    """Emission/absorption sideband densities with their exact norm-subtraction
    counterparts; integrates to zero analytically.

    Interference between the emission and absorption channels is excluded
    (distinct final field states).
    """
    grid.require_coverage(max(8.0 * src.sigma_p0, 4.0 * params.p_rec0))
    xi = grid.offsets
    p0 = grid.p0
    s2 = src.sigma_p0**2
    u2 = params.upsilon**2
    pre, pra = params.p_rec_e, params.p_rec_a
    se2 = sinc(params.theta_e / 2.0) ** 2
    sa2 = sinc(params.theta_a / 2.0) ** 2

    def gauss(x):
        return np.exp(-(x**2) / (2.0 * s2)) / math.sqrt(2.0 * math.pi * s2)

    base = gauss(xi)
    # exact Gaussian expectations of the shifted, momentum-weighted terms:
    # subtracting them makes each channel integrate to zero identically.
    c_e = ((p0 - pre / 2.0) ** 2 + s2) / p0**2
    c_a = ((p0 + pra / 2.0) ** 2 + s2) / p0**2
    x_e = 1.0 + (xi + pre / 2.0) / p0
    x_a = 1.0 + (xi - pra / 2.0) / p0
    em = se2 * (x_e**2 * gauss(xi + pre) - c_e * base)
    ab = sa2 * (x_a**2 * gauss(xi - pra) - c_a * base)
    return u2 * (em + ab) / normalization_denominator(params)


def dp2(params: InteractionParams, beam: BeamState) -> float:
    """Second-order (recoil) net momentum transfer, distribution independent:

    Upsilon^2 (hbar omega/v0) [sinc^2(theta_a/2) - sinc^2(theta_e/2)].
    """
    if params.p_rec0 >= 0.1 * beam.p0:
        raise ValueError("recoil is not small compared to the carrier momentum")
    u2 = params.upsilon**2
    return u2 * params.p_rec0 * (
        sinc(params.theta_a / 2.0) ** 2 - sinc(params.theta_e / 2.0) ** 2
    )


def dp2_classical_limit(params: InteractionParams, beam: BeamState) -> float:
    """Small-recoil approximation of :func:`dp2`: the classical low-gain
    detuning curve -Upsilon^2 (hbar omega/v0) epsilon d/dtheta[sinc^2(theta/2)].
    """
    th = params.theta_bar
    x = th / 2.0
    s = sinc(x)
    ds = 0.0 if x == 0 else (math.cos(x) - s) / x  # d sinc / dx
    g_prime = s * ds  # d/dtheta sinc^2(theta/2)
    return -params.upsilon**2 * params.p_rec0 * params.epsilon * g_prime


def stimulated_rate(
    params: InteractionParams,
    link: QEDLink,
    beam: BeamState,
    gamma_e_v_e: Optional[float] = None,
    gamma_a_v_a: Optional[float] = None,
) -> float:
    """Photon emission rate dnu/dt: spontaneous + stimulated emission minus
    absorption, each on its own detuning curve.

    The post-emission/post-absorption (gamma v) factors default to the
    carrier value gamma0 v0.
    """
    g0v0 = beam.gamma0 * beam.v0
    ge = g0v0 if gamma_e_v_e is None else gamma_e_v_e
    ga = g0v0 if gamma_a_v_a is None else gamma_a_v_a
    se2 = sinc(params.theta_e / 2.0) ** 2
    sa2 = sinc(params.theta_a / 2.0) ** 2
    return link.gamma_sp * (
        (link.nu_q + 1.0) * (g0v0 / ge) * se2 - link.nu_q * (g0v0 / ga) * sa2
    )


# ---------------------------------------------------------------------------
# limiting forms and ensemble averaging


def pinem_spectrum(
    grid: MomentumGrid, params: InteractionParams, src: SourceWavepacket
) -> np.ndarray:
    """Short-window / resolved-recoil limit: central line depleted by
    2 Upsilon^2 with symmetric sidebands of weight Upsilon^2 at +/- p_rec0."""
    if params.epsilon >= 1.0 or params.p_rec0 < 4.0 * src.sigma_p0:
        warnings.warn(
            "outside the resolved-sideband regime (need epsilon << pi and "
            "p_rec0 >> sigma_p0)",
            RegimeWarning,
            stacklevel=2,
        )
    grid.require_coverage(max(8.0 * src.sigma_p0, 4.0 * params.p_rec0))
    u2 = params.upsilon**2
    s = src.sigma_p0
    pr = params.p_rec0

    def gauss(x):
        return np.exp(-(x**2) / (2.0 * s**2)) / math.sqrt(2.0 * math.pi * s**2)

    x = grid.offsets
    return (1.0 - 2.0 * u2) * gauss(x) + u2 * (gauss(x + pr) + gauss(x - pr))


def ensemble_average(
    spectrum_family: Callable[[float], object],
    ens: EnsembleSpec,
    grid: MomentumGrid,
    feature_scale: Optional[float] = None,
) -> np.ndarray:
    """Average single-electron spectra over a Gaussian spread of the carrier
    momentum.

    ``spectrum_family(p0)`` returns either a density array on ``grid`` or a
    :class:`SpectrumResult` (its ``total`` is used).  ``feature_scale`` sets
    the quadrature step over the thermal distribution (default: fine enough
    to resolve sigma_p_th/8, which keeps resolved sidebands smooth).
    """
    def density(p0c: float) -> np.ndarray:
        out = spectrum_family(p0c)
        return np.asarray(getattr(out, "total", out), dtype=float)

    s = ens.sigma_p_th
    if s == 0.0:
        return density(grid.p0)
    halfspan = float(grid.offsets[-1])
    if halfspan < 7.0 * s:
        raise ValueError("grid does not cover the ensemble tails (need >= 7 sigma_p_th)")
    h = s / 8.0 if feature_scale is None else min(s / 8.0, feature_scale / 2.0)
    m = int(math.ceil(6.0 * s / h))
    offsets = np.linspace(-6.0 * s, 6.0 * s, 2 * m + 1)
    weights = np.exp(-(offsets**2) / (2.0 * s**2))
    weights /= weights.sum()
    out = np.zeros_like(grid.samples, dtype=float)
    for off, wgt in zip(offsets, weights):
        out += wgt * density(grid.p0 + off)
    return out


@dataclass(frozen=True)
class ResolutionCheck:
    """Shift-to-spread ratio and its size-parameter bound."""

    ratio: float
    bound: float
    requested_resolvable: Optional[bool] = None


def resolution_bound(
    params: InteractionParams,
    src: SourceWavepacket,
    requested_dp: Optional[float] = None,
) -> ResolutionCheck:
    """dp_point/sigma_p0 = 8 pi Upsilon sigma_z0/(lambda beta) (= 4 Upsilon Gamma0)
    together with the loose bound 8 pi Upsilon Gamma.

    If ``requested_dp`` is given, flags whether that shift stays resolvable
    (|requested_dp|/sigma_p0 <= bound).
    """
    gamma0_waist = params.p_rec0 / (2.0 * src.sigma_p0)
    ratio = 4.0 * params.upsilon * gamma0_waist
    bound = 8.0 * math.pi * params.upsilon * params.Gamma
    flag = None
    if requested_dp is not None:
        flag = abs(requested_dp) / src.sigma_p0 <= bound
    return ResolutionCheck(ratio=ratio, bound=bound, requested_resolvable=flag)


# ---------------------------------------------------------------------------
# assembled result


def compute_spectrum(
    grid: MomentumGrid,
    beam: BeamState,
    drive: FieldDrive,
    src: SourceWavepacket,
    params: Optional[InteractionParams] = None,
    use_simplified: bool = False,
    validate: bool = True,
) -> SpectrumResult:
    """Full decomposition rho0 + rho1 + rho2 with its closed-form moments."""
    from .params import interaction_params

    if params is None:
        params = interaction_params(beam, drive, src)
    r0 = rho0(grid, src)
    if use_simplified:
        r1 = rho1_simplified(grid, params, src, beam, drive.phi0)
    else:
        r1 = rho1_general(grid, params, src, beam, drive.phi0)
    r2 = rho2(grid, params, src)
    result = SpectrumResult(
        grid=grid,
        rho0=r0,
        rho1=r1,
        rho2=r2,
        total=r0 + r1 + r2,
        dp1=dp1(params, drive, beam),
        dp2=dp2(params, beam),
        dp_point=dp_point(params, drive, beam),
        normalization_denominator=normalization_denominator(params),
    )
    if validate:
        result.validate()
    return result
