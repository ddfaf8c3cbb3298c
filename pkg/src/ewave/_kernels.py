"""Hot numerical kernels for the split-operator stepper.

Each kernel exists twice: a loop implementation compiled with numba when
available, and a vectorized numpy fallback.  Set ``EWAVE_NO_NUMBA=1`` to
force the numpy path (the benchmark in ``benchmarks/`` compares the two).

The central kernel accumulates, per comoving grid point, the exact
time-integrated interaction phase over one step, clipping the integration
interval to the lab-frame field window.  Doing the time integral in closed
form (the field is piecewise sinusoidal along each trajectory) removes any
field-sampling constraint on the step size.
"""

from __future__ import annotations

import math
import os

import numpy as np

JIT_OPTIONS = {"nogil": True, "fastmath": True, "cache": True}

if os.environ.get("EWAVE_NO_NUMBA"):
    _HAVE_NUMBA = False
else:
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:
        _HAVE_NUMBA = False

NUMBA_ENABLED = _HAVE_NUMBA


def _sinc_half(x: float) -> float:
    # sin(x)/x with a series guard near 0
    if abs(x) < 1e-8:
        return 1.0 - x * x / 6.0
    return math.sin(x) / x


def _window_phase_loop(z, t0, dt, v_frame, w0, w1, amps, qzs, omega, phi0, coef, out):
    """Exact integrated interaction phase Phi(z') for the step [t0, t0+dt].

    z are comoving coordinates (lab position z' + v_frame * s at time s);
    coef = e * v0_beam / (hbar * omega).  The integrand is the scalar
    potential V/hbar = -coef * sum_m E_m sin(q_m z_lab - omega s - phi0);
    out receives Phi = integral of V/hbar, and the stepper applies the
    unitary factor exp(-i * Phi).
    """
    for i in range(z.shape[0]):
        zi = z[i]
        s_in = (w0 - zi) / v_frame
        s_out = (w1 - zi) / v_frame
        s0 = t0 if t0 > s_in else s_in
        s1 = t0 + dt if t0 + dt < s_out else s_out
        acc = 0.0
        if s1 > s0:
            ds = s1 - s0
            sm = 0.5 * (s0 + s1)
            for m in range(amps.shape[0]):
                om = qzs[m] * v_frame - omega
                x = 0.5 * om * ds
                if abs(x) < 1e-8:
                    snc = 1.0 - x * x / 6.0
                else:
                    snc = math.sin(x) / x
                acc += -coef * amps[m] * ds * snc * math.sin(qzs[m] * zi + om * sm - phi0)
        out[i] = acc


def _sinc_half_arr(x):
    # sin(x)/x elementwise (np.sinc uses the normalized convention)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)


def _window_phase_numpy(z, t0, dt, v_frame, w0, w1, amps, qzs, omega, phi0, coef, out):
    s0 = np.maximum(t0, (w0 - z) / v_frame)
    s1 = np.minimum(t0 + dt, (w1 - z) / v_frame)
    ds = np.clip(s1 - s0, 0.0, None)
    sm = 0.5 * (s0 + s1)
    acc = np.zeros_like(z)
    for amp, qz in zip(amps, qzs):
        om = qz * v_frame - omega
        snc = _sinc_half_arr(0.5 * om * ds)
        acc += -coef * amp * ds * snc * np.sin(qz * z + om * sm - phi0)
    out[:] = np.where(ds > 0.0, acc, 0.0)


def _window_gradient_loop(z, t0, dt, v_frame, w0, w1, amps, qzs, omega, phi0, coef, out):
    """Exact integrated gradient-term exponent G(z'); the amplitude factor
    is exp(+G).  coef = e / (2 * gamma0 * m_e * omega)."""
    for i in range(z.shape[0]):
        zi = z[i]
        s_in = (w0 - zi) / v_frame
        s_out = (w1 - zi) / v_frame
        s0 = t0 if t0 > s_in else s_in
        s1 = t0 + dt if t0 + dt < s_out else s_out
        acc = 0.0
        if s1 > s0:
            ds = s1 - s0
            sm = 0.5 * (s0 + s1)
            for m in range(amps.shape[0]):
                om = qzs[m] * v_frame - omega
                x = 0.5 * om * ds
                if abs(x) < 1e-8:
                    snc = 1.0 - x * x / 6.0
                else:
                    snc = math.sin(x) / x
                acc += -coef * amps[m] * qzs[m] * ds * snc * math.cos(
                    qzs[m] * zi + om * sm - phi0
                )
        out[i] = acc


def _window_gradient_numpy(z, t0, dt, v_frame, w0, w1, amps, qzs, omega, phi0, coef, out):
    s0 = np.maximum(t0, (w0 - z) / v_frame)
    s1 = np.minimum(t0 + dt, (w1 - z) / v_frame)
    ds = np.clip(s1 - s0, 0.0, None)
    sm = 0.5 * (s0 + s1)
    acc = np.zeros_like(z)
    for amp, qz in zip(amps, qzs):
        om = qz * v_frame - omega
        snc = _sinc_half_arr(0.5 * om * ds)
        acc += -coef * amp * qz * ds * snc * np.cos(qz * z + om * sm - phi0)
    out[:] = np.where(ds > 0.0, acc, 0.0)


if NUMBA_ENABLED:
    window_phase = njit(**JIT_OPTIONS)(_window_phase_loop)
    window_gradient = njit(**JIT_OPTIONS)(_window_gradient_loop)
else:
    window_phase = _window_phase_numpy
    window_gradient = _window_gradient_numpy
