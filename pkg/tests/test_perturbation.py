"""Closed-form spectra: quadrature oracles, limit chains, regime checks."""

import dataclasses
import math
import warnings

import numpy as np
import pytest

from ewave import (
    SCALES,
    EnsembleSpec,
    MomentumGrid,
    QEDLink,
    RegimeWarning,
    beam_from_gamma,
    compute_spectrum,
    dp1,
    dp2,
    dp2_classical_limit,
    dp_point,
    drive_from_upsilon,
    ensemble_average,
    interaction_params,
    make_momentum_grid,
    make_source,
    normalization_denominator,
    pinem_spectrum,
    resolution_bound,
    rho0,
    rho1_general,
    rho1_simplified,
    rho2,
    sinc,
    stimulated_rate,
)

GAMMA0 = 1.4
BETA0 = math.sqrt(1.0 - 1.0 / GAMMA0**2)
LAM = 2.0e-6 / BETA0 / SCALES.length
L_I = 8.0e-6 / SCALES.length
OMEGA = 2.0 * math.pi / LAM


def trapz(y, dx):
    return float(np.trapezoid(y, dx=dx))


def make_case(upsilon=0.2, gamma_waist=1.0, tau=0.0, theta_bar=0.0, phi0=0.0, n=2**14):
    """Standard 2 um / 8 um configuration with a waist-realized size
    parameter drifted for tau Rayleigh times."""
    beam = beam_from_gamma(GAMMA0)
    qz = OMEGA / beam.v0 - theta_bar / L_I
    drive = drive_from_upsilon(upsilon, OMEGA, beam, phi0=phi0, L_I=L_I, q_z=qz)
    sigma_z0 = gamma_waist * BETA0 * LAM / (2.0 * math.pi)
    t_r = 4.0 * math.pi * sigma_z0**2 / beam.lambda_c_star
    src = make_source(sigma_z0=sigma_z0, beam=beam, t_D=tau * t_r)
    par = interaction_params(beam, drive, src)
    grid = make_momentum_grid(src, par, p0=beam.p0, n=n)
    return beam, drive, src, par, grid


def degenerate(par):
    """Same coupling with the recoil split switched off exactly."""
    return dataclasses.replace(
        par,
        delta_small=0.0,
        epsilon=0.0,
        theta_e=par.theta_bar,
        theta_a=par.theta_bar,
        p_rec_e=par.p_rec0,
        p_rec_a=par.p_rec0,
    )


# ---------------------------------------------------------------------------
# rho0


def test_rho0_peak_integral_moments():
    _, _, src, par, grid = make_case()
    r0 = rho0(grid, src)
    peak = 1.0 / math.sqrt(2.0 * math.pi * src.sigma_p0**2)
    assert r0.max() == pytest.approx(peak, rel=1e-9)
    dx = grid.dp
    assert trapz(r0, dx) == pytest.approx(1.0, abs=1e-9)
    # quadrature oracle for the moments
    mean = trapz(grid.offsets * r0, dx)
    var = trapz(grid.offsets**2 * r0, dx)
    assert abs(mean) < 1e-9 * src.sigma_p0
    assert var == pytest.approx(src.sigma_p0**2, rel=1e-9)


def test_rho0_coverage_error():
    _, _, src, _, _ = make_case()
    small = MomentumGrid(p0=1.0, offsets=np.linspace(-4, 4, 256) * src.sigma_p0)
    with pytest.raises(ValueError):
        rho0(small, src)


# ---------------------------------------------------------------------------
# point-particle transfer


@pytest.mark.parametrize(
    "theta_bar, phi0",
    [(0.0, math.pi / 2), (2.0 * math.pi, 0.0), (2.0 * math.pi, 1.0)],
)
def test_dp_point_zeros(theta_bar, phi0):
    beam, drive, src, par, _ = make_case(theta_bar=theta_bar, phi0=phi0)
    assert abs(dp_point(par, drive, beam)) < 1e-12 * par.p_rec0


def test_dp_point_synchronous_magnitude_and_sign():
    beam, drive, _, par, _ = make_case(upsilon=0.2, phi0=0.0)
    value = dp_point(par, drive, beam)
    # accelerating at phi0 = 0, magnitude 2 Upsilon hbar omega / v0
    assert value == pytest.approx(2.0 * 0.2 * par.p_rec0, rel=1e-9)
    beam, drive, _, par, _ = make_case(upsilon=0.2, phi0=math.pi)
    assert dp_point(par, drive, beam) == pytest.approx(-value, rel=1e-9)


# ---------------------------------------------------------------------------
# first order


def test_rho1_zero_field_is_zero():
    beam, drive, src, par, grid = make_case(upsilon=0.0)
    assert np.all(rho1_general(grid, par, src, beam, 0.0) == 0.0)


def test_rho1_large_size_parameter_suppression():
    beam, drive, src, par, grid = make_case(upsilon=0.2, gamma_waist=10.0)
    r0 = rho0(grid, src)
    r1 = rho1_general(grid, par, src, beam, 0.0)
    # overlap of momentum components separated by >> their width
    assert np.abs(r1).max() <= 1e-20 * r0.max()


def test_rho1_general_matches_simplified_at_zero_split():
    for tau in (0.0, 1.0):
        beam, drive, src, par, grid = make_case(upsilon=0.01, tau=tau, phi0=0.3)
        par0 = degenerate(par)
        a = rho1_general(grid, par0, src, beam, 0.3)
        b = rho1_simplified(grid, par0, src, beam, 0.3)
        assert np.abs(a - b).max() <= 1e-6 * np.abs(a).max()


def test_rho1_small_split_still_close():
    # physical (nonzero) epsilon of the 2 um / 8 um geometry is ~8e-6
    beam, drive, src, par, grid = make_case(upsilon=0.01, tau=1.0)
    a = rho1_general(grid, par, src, beam, 0.0)
    b = rho1_simplified(grid, par, src, beam, 0.0)
    assert np.abs(a - b).max() <= 1e-4 * np.abs(a).max()


def test_rho1_simplified_integral_vanishes():
    beam, drive, src, par, grid = make_case(upsilon=0.2, tau=1.0, phi0=0.7)
    r1 = rho1_simplified(grid, par, src, beam, 0.7)
    assert abs(trapz(r1, grid.dp)) < 1e-9


def test_rho1_first_moment_at_sqrt2_size_parameter():
    # net shift (2 Upsilon / e) hbar omega / v0 at Gamma = sqrt(2)
    ups = 0.01
    beam, drive, src, par, grid = make_case(upsilon=ups, gamma_waist=1.0, tau=1.0)
    assert par.Gamma == pytest.approx(math.sqrt(2.0), rel=1e-12)
    expected = 2.0 * ups * par.p_rec0 / math.e
    for fn in (rho1_general, rho1_simplified):
        r1 = fn(grid, par, src, beam, 0.0)
        m1 = trapz(grid.offsets * r1, grid.dp)
        assert m1 == pytest.approx(expected, rel=1e-3)
    assert dp1(par, drive, beam) == pytest.approx(expected, rel=1e-9)


def test_rho1_phase_shift_by_pi_flips_sign_pointwise():
    beam, drive, src, par, grid = make_case(upsilon=0.2, tau=0.5, theta_bar=0.4)
    for fn in (rho1_general, rho1_simplified):
        a = fn(grid, par, src, beam, 0.2)
        b = fn(grid, par, src, beam, 0.2 + math.pi)
        assert np.allclose(a, -b, atol=1e-13 * np.abs(a).max())


def test_rho1_quadrature_moment_matches_dp1():
    # moment consistency with the normalization denominator restored
    for ups, tau, theta in [(0.1, 0.0, 0.0), (0.3, 1.0, 1.0), (0.2, 2.0, -0.8)]:
        beam, drive, src, par, grid = make_case(upsilon=ups, tau=tau, theta_bar=theta)
        r1 = rho1_general(grid, par, src, beam, drive.phi0)
        m1 = trapz(grid.offsets * r1, grid.dp) * normalization_denominator(par)
        scale = 2.0 * ups * par.p_rec0 * math.exp(-par.Gamma**2 / 2.0)
        assert abs(m1 - dp1(par, drive, beam)) <= 0.02 * scale


def test_rho1_upsilon_warning():
    beam, drive, src, par, grid = make_case(upsilon=1.5)
    with pytest.warns(RegimeWarning):
        rho1_general(grid, par, src, beam, 0.0)


# ---------------------------------------------------------------------------
# second order


def test_rho2_integral_vanishes():
    for theta in (0.0, 1.3):
        beam, drive, src, par, grid = make_case(upsilon=0.3, theta_bar=theta)
        r2 = rho2(grid, par, src)
        assert abs(trapz(r2, grid.dp)) < 1e-9


def test_rho2_moment_matches_dp2_closed_form():
    # lattice-style row: tiny recoil/carrier ratio keeps the finite-sigma
    # corrections far below the tolerance
    p0 = 1.0
    pr = 1e-7 * p0
    sigma = 0.5 * pr
    beam = beam_from_gamma(GAMMA0)
    src = make_source(sigma_z0=0.5 / sigma, beam=beam, t_D=0.0)
    delta = 1e-7
    for theta, eps in [(0.5, 0.01), (2.0, 1.0), (-4.0, 40.0)]:
        par = _lattice_params(0.01, theta, eps, delta, pr, sigma)
        grid = MomentumGrid(p0=p0, offsets=np.linspace(-12 * pr, 12 * pr, 2**14))
        r2 = rho2(grid, par, src)
        m2 = trapz(grid.offsets * r2, grid.dp) * normalization_denominator(par)
        assert abs(m2 - dp2(par, beam)) <= 1e-6 * pr


def _lattice_params(ups, theta, eps, delta, pr, sigma):
    from ewave import InteractionParams

    return InteractionParams(
        upsilon=ups,
        theta_bar=theta,
        delta_small=delta,
        epsilon=eps,
        theta_e=theta + eps / 2.0,
        theta_a=theta - eps / 2.0,
        p_rec_e=pr * (1.0 + delta),
        p_rec_a=pr * (1.0 - delta),
        p_rec0=pr,
        Gamma=pr / (2.0 * sigma),
    )


def test_rho2_sideband_peak_positions():
    beam, drive, src, par, grid = make_case(upsilon=0.2, gamma_waist=3.0)
    # Gamma0 = 3 puts the recoil at 6 sigma_p0: fully resolved
    r2 = rho2(grid, degenerate(par), src)
    xi = grid.offsets
    pr = par.p_rec0
    up = np.where(xi > pr / 2.0, r2, -np.inf)
    lo = np.where(xi < -pr / 2.0, r2, -np.inf)
    assert abs(xi[np.argmax(up)] - pr) <= 2.0 * grid.dp + 0.02 * pr
    assert abs(xi[np.argmax(lo)] + pr) <= 2.0 * grid.dp + 0.02 * pr


def test_rho2_limit_chain_reaches_short_window_form():
    # degenerate recoil, resolved sidebands, tiny recoil/carrier ratio:
    # rho2 must approach the short-window spectrum minus the base Gaussian
    p0 = 1.0
    pr = 1e-7 * p0
    sigma = pr / 6.0
    beam = beam_from_gamma(GAMMA0)
    src = make_source(sigma_z0=0.5 / sigma, beam=beam, t_D=0.0)
    par = _lattice_params(0.01, 0.0, 0.0, 0.0, pr, sigma)
    grid = MomentumGrid(p0=p0, offsets=np.linspace(-8 * pr, 8 * pr, 2**14))
    r2 = rho2(grid, par, src)
    target = pinem_spectrum(grid, par, src) - rho0(grid, src)
    assert np.abs(r2 - target).max() <= 1e-6 * rho0(grid, src).max()


def test_dp2_zero_at_symmetric_detuning():
    beam, drive, src, par, grid = make_case(upsilon=0.3, theta_bar=0.0)
    assert dp2(par, beam) == pytest.approx(0.0, abs=1e-16 * par.p_rec0)


def test_dp2_antisymmetric_in_detuning():
    beam = beam_from_gamma(GAMMA0)
    for theta in (0.3, 1.0, 5.0):
        pa = _lattice_params(0.1, theta, 0.5, 0.0, 1e-7, 5e-8)
        pb = _lattice_params(0.1, -theta, 0.5, 0.0, 1e-7, 5e-8)
        assert dp2(pa, beam) == pytest.approx(-dp2(pb, beam), rel=1e-12)


def test_dp2_classical_limit_finite_difference_oracle():
    # oracle: central finite difference of sinc^2(theta/2) in theta
    beam = beam_from_gamma(GAMMA0)
    pr, sigma, eps = 1e-7, 5e-8, 0.01
    theta = math.pi / 2.0
    h = 1e-6
    g = lambda t: sinc(t / 2.0) ** 2
    dg = (g(theta + h) - g(theta - h)) / (2.0 * h)
    par = _lattice_params(0.1, theta, eps, 0.0, pr, sigma)
    expected = -(0.1**2) * pr * eps * dg
    assert dp2_classical_limit(par, beam) == pytest.approx(expected, rel=1e-6)
    # and the exact second-order transfer follows it at small split
    assert dp2(par, beam) == pytest.approx(expected, rel=0.01)


def test_dp2_extrema_at_large_split():
    # epsilon = 40: extrema sit at theta_bar = +/- eps/2 with values
    # +/- Upsilon^2 hbar omega / v0
    beam = beam_from_gamma(GAMMA0)
    ups, eps, pr = 0.1, 40.0, 1e-7
    thetas = np.linspace(-30.0, 30.0, 120001)
    vals = np.array(
        [dp2(_lattice_params(ups, t, eps, 0.0, pr, 5e-8), beam) for t in thetas]
    )
    i_max, i_min = np.argmax(vals), np.argmin(vals)
    assert thetas[i_max] == pytest.approx(eps / 2.0, rel=0.01)
    assert thetas[i_min] == pytest.approx(-eps / 2.0, rel=0.01)
    assert vals[i_max] == pytest.approx(ups**2 * pr, rel=0.01)
    assert vals[i_min] == pytest.approx(-(ups**2) * pr, rel=0.01)


def test_dp2_rejects_large_recoil():
    beam = beam_from_gamma(GAMMA0)
    par = _lattice_params(0.1, 0.5, 0.1, 0.0, 0.5 * beam.p0, 0.1)
    with pytest.raises(ValueError):
        dp2(par, beam)


# ---------------------------------------------------------------------------
# QED link


def test_stimulated_rate_spontaneous_only():
    beam = beam_from_gamma(GAMMA0)
    par = _lattice_params(0.1, 0.0, 0.0, 0.0, 1e-7, 5e-8)
    rate = stimulated_rate(par, QEDLink(gamma_sp=2e-12, nu_q=0.0), beam)
    assert rate == pytest.approx(2e-12, rel=1e-12)


def test_stimulated_rate_sinc_zeros():
    beam = beam_from_gamma(GAMMA0)
    # both detunings at sinc roots
    par = _lattice_params(0.1, 0.0, 8.0 * math.pi, 0.0, 1e-7, 5e-8)
    rate = stimulated_rate(par, QEDLink(gamma_sp=2e-12, nu_q=3.0), beam)
    assert abs(rate) < 1e-24


def test_rate_round_trip_reproduces_dp2():
    # -(L_I/v0) (hbar omega/v0) (dnu/dt)_stimulated == dp2 when
    # Upsilon^2 = (L_I/v0) Gamma_sp nu_q
    beam = beam_from_gamma(GAMMA0)
    gamma_sp, nu_q = 3e-17, 1e8
    ups = math.sqrt((L_I / beam.v0) * gamma_sp * nu_q)
    pr = 1.21316e-6
    for theta in (0.7, -2.0):
        par = _lattice_params(ups, theta, 1.0, 0.0, pr, 5e-7)
        link = QEDLink(gamma_sp=gamma_sp, nu_q=nu_q)
        stim = stimulated_rate(par, link, beam) - stimulated_rate(
            par, QEDLink(gamma_sp=gamma_sp, nu_q=0.0), beam
        )
        lhs = -(L_I / beam.v0) * pr * stim
        assert lhs == pytest.approx(dp2(par, beam), rel=1e-9)


# ---------------------------------------------------------------------------
# short-window limit and ensembles


def test_pinem_weights_and_mean():
    # recoil at 12 sigma_p0 so the +/- p_rec0/2 neighborhoods hold the full
    # Gaussian mass to well below the tolerance
    beam, drive, src, par, grid = make_case(upsilon=0.2, gamma_waist=6.0)
    par0 = degenerate(par)
    rho = pinem_spectrum(grid, par0, src)
    dx = grid.dp
    xi = grid.offsets
    pr = par.p_rec0
    center = trapz(np.where(np.abs(xi) < pr / 2.0, rho, 0.0), dx)
    upper = trapz(np.where(np.abs(xi - pr) < pr / 2.0, rho, 0.0), dx)
    lower = trapz(np.where(np.abs(xi + pr) < pr / 2.0, rho, 0.0), dx)
    assert center == pytest.approx(0.92, abs=1e-6)
    assert upper == pytest.approx(0.04, abs=1e-6)
    assert lower == pytest.approx(0.04, abs=1e-6)
    assert abs(trapz(xi * rho, dx)) < 1e-9  # no net shift


def test_pinem_zero_coupling_is_rho0():
    beam, drive, src, par, grid = make_case(upsilon=0.0, gamma_waist=3.0)
    assert np.allclose(
        pinem_spectrum(grid, degenerate(par), src), rho0(grid, src), rtol=0, atol=1e-18
    )


def test_pinem_regime_warning_on_unresolved_recoil():
    beam, drive, src, par, grid = make_case(upsilon=0.2, gamma_waist=0.5)
    # p_rec0 = sigma_p0: sidebands buried in the envelope
    with pytest.warns(RegimeWarning):
        pinem_spectrum(grid, par, src)


def test_pinem_no_warning_when_resolved():
    beam, drive, src, par, grid = make_case(upsilon=0.2, gamma_waist=3.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        pinem_spectrum(grid, par, src)


def test_ensemble_zero_spread_is_identity():
    beam, drive, src, par, grid = make_case(upsilon=0.2, gamma_waist=3.0)
    base = pinem_spectrum(grid, par, src)
    fam = lambda c: pinem_spectrum(grid.recentered(c), par, src)
    out = ensemble_average(fam, EnsembleSpec(sigma_p_th=0.0), grid)
    assert np.array_equal(out, base)


def test_ensemble_variance_composition():
    beam, drive, src, par, grid0 = make_case(upsilon=0.2)
    s = src.sigma_p0
    grid = make_momentum_grid(src, par, p0=beam.p0, n=2**15, halfspan=40.0 * s)
    sth = 3.0 * s
    fam = lambda c: rho0(grid.recentered(c), src)
    out = ensemble_average(fam, EnsembleSpec(sigma_p_th=sth), grid)
    dx = grid.dp
    mass = trapz(out, dx)
    mean = trapz(grid.offsets * out, dx) / mass
    var = trapz((grid.offsets - mean) ** 2 * out, dx) / mass
    assert mass == pytest.approx(1.0, abs=1e-9)
    assert var == pytest.approx(sth**2 + s**2, rel=1e-6)


def _count_peaks(y, frac=0.02):
    thresh = frac * y.max()
    idx = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] > y[2:]) & (y[1:-1] > thresh))
    return len(idx)


def test_ensemble_peak_survival():
    # narrow single-electron lines (recoil = 12 sigma_p0) so the ensemble
    # spread alone decides whether the sidebands survive
    beam, drive, src, par, _ = make_case(upsilon=0.2, gamma_waist=6.0)
    par0 = degenerate(par)
    s = src.sigma_p0
    pr = par.p_rec0  # = 12 sigma_p0 here
    for sth, expected in [(2.0 * pr, 1), (pr / 4.0, 3)]:
        halfspan = 6.0 * pr + 7.0 * sth + 10.0 * s
        grid = MomentumGrid(
            p0=beam.p0, offsets=np.linspace(-halfspan, halfspan, 2**15)
        )
        fam = lambda c: pinem_spectrum(grid.recentered(c), par0, src)
        out = ensemble_average(
            fam, EnsembleSpec(sigma_p_th=sth), grid, feature_scale=s
        )
        assert _count_peaks(out) == expected


def test_ensemble_coverage_error():
    beam, drive, src, par, grid = make_case()
    fam = lambda c: rho0(grid.recentered(c), src)
    with pytest.raises(ValueError):
        ensemble_average(fam, EnsembleSpec(sigma_p_th=100.0 * src.sigma_p0), grid)


# ---------------------------------------------------------------------------
# resolution bound


def test_resolution_bound_zero_coupling():
    beam, drive, src, par, _ = make_case(upsilon=0.0)
    check = resolution_bound(par, src)
    assert check.ratio == 0.0
    assert check.bound == 0.0


def test_resolution_bound_fig_regime_value():
    beam, drive, src, par, _ = make_case(upsilon=0.2, gamma_waist=1.0, tau=1.0)
    check = resolution_bound(par, src)
    # arithmetic oracle: 8 pi * 0.2 * sqrt(2)
    assert check.bound == pytest.approx(8.0 * math.pi * 0.2 * math.sqrt(2.0), rel=1e-9)
    assert check.ratio == pytest.approx(4.0 * 0.2 * 1.0, rel=1e-9)
    assert check.ratio <= check.bound
    assert resolution_bound(par, src, requested_dp=0.1 * src.sigma_p0).requested_resolvable
    assert not resolution_bound(
        par, src, requested_dp=100.0 * check.bound * src.sigma_p0
    ).requested_resolvable


def test_resolution_ratio_below_bound_random_draws():
    rng = np.random.default_rng(11)
    beam = beam_from_gamma(GAMMA0)
    for _ in range(1000):
        ups = float(10.0 ** rng.uniform(-3, 0.5))
        gw = float(10.0 ** rng.uniform(-1, 1))
        tau = float(10.0 ** rng.uniform(-2, 2))
        _, _, src, par, _ = make_case(upsilon=ups, gamma_waist=gw, tau=tau, n=4)
        check = resolution_bound(par, src)
        assert check.ratio <= check.bound * (1.0 + 1e-12)


# ---------------------------------------------------------------------------
# assembled spectrum


def test_compute_spectrum_invariants_hold():
    beam, drive, src, par, grid = make_case(upsilon=0.3, tau=1.0, phi0=0.4)
    res = compute_spectrum(grid, beam, drive, src)
    dx = grid.dp
    assert trapz(res.total, dx) == pytest.approx(1.0, abs=1e-9)
    assert abs(trapz(res.rho1, dx)) < 1e-9
    assert abs(trapz(res.rho2, dx)) < 1e-9
    assert res.normalization_denominator == pytest.approx(
        normalization_denominator(par), rel=1e-12
    )
    assert res.dp_point == pytest.approx(dp_point(par, drive, beam), rel=1e-12)


def test_compute_spectrum_total_stays_nonnegative_even_when_strong():
    # the denominator-normalized assembly is positivity-protected: even at
    # Upsilon = 0.8 the total only touches zero, it does not cross it
    beam, drive, src, par, grid = make_case(upsilon=0.8, gamma_waist=0.3)
    res = compute_spectrum(grid, beam, drive, src)
    assert res.total.min() >= -1e-12 * res.total.max()


def test_validate_warns_on_negative_density_without_clamping():
    from ewave.perturbation import SpectrumResult

    beam, drive, src, par, grid = make_case(upsilon=0.1)
    r0 = rho0(grid, src)
    dip = -1.5 * r0  # redistribution that drives the total negative
    dip -= trapz(dip, grid.dp) / trapz(np.ones_like(dip), grid.dp)
    res = SpectrumResult(
        grid=grid,
        rho0=r0,
        rho1=dip,
        rho2=np.zeros_like(r0),
        total=r0 + dip,
        dp1=0.0,
        dp2=0.0,
        dp_point=0.0,
        normalization_denominator=1.0,
    )
    before = res.total.copy()
    with pytest.warns(RegimeWarning):
        res.validate()
    assert np.array_equal(res.total, before)  # warn only, never clamp


def test_validate_rejects_unbalanced_redistribution():
    from ewave.perturbation import SpectrumResult

    beam, drive, src, par, grid = make_case(upsilon=0.1)
    r0 = rho0(grid, src)
    bad = 1e-6 * r0  # nonzero integral: not a redistribution
    res = SpectrumResult(
        grid=grid,
        rho0=r0,
        rho1=bad,
        rho2=np.zeros_like(r0),
        total=r0 + bad,
        dp1=0.0,
        dp2=0.0,
        dp_point=0.0,
        normalization_denominator=1.0,
    )
    with pytest.raises(ValueError):
        res.validate()
