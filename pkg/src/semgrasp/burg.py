"""Burg lattice estimation of autoregressive models and their power spectra.

The fit proceeds stage by stage. With f_i / b_i the forward and backward
prediction errors after stage i (f_0 = b_0 = x), each stage picks the
reflection coefficient

    r_i = -2 * sum(f_{i-1}[n] * b_{i-1}[n-1]) / sum(f_{i-1}[n]^2 + b_{i-1}[n-1]^2)

(sums over the valid index range n = i..N-1), which is the unique minimizer
of the summed squared forward+backward errors after the lattice update

    f_i[n] = f_{i-1}[n] + r_i * b_{i-1}[n-1]
    b_i[n] = b_{i-1}[n-1] + r_i * f_{i-1}[n]

and |r_i| <= 1 always (Cauchy-Schwarz). AR filter coefficients follow the
Levinson step a_i[j] = a_{i-1}[j] + r_i * a_{i-1}[i-j], a_i[i] = r_i, so the
whitening filter is 1 + a[1] z^-1 + ... + a[p] z^-p and is minimum-phase
whenever every |r_i| < 1. Signals are real; no complex support.

State arrays hold only the currently valid error range [stage, N-1], which
shrinks by one sample per stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSignalError

# Denominators at or below this are treated as annihilated residuals.
_DEN_FLOOR = np.finfo(np.float64).tiny


@dataclass
class BurgState:
    """Lattice recursion state after `stage` stages.

    forward_errors[j] and backward_errors[j] hold the errors at sample
    index stage + j; both arrays have length signal_length - stage.
    """

    forward_errors: np.ndarray
    backward_errors: np.ndarray
    reflection_coeffs: list[float]
    ar_coeffs: list[float]
    error_power: float
    stage: int
    signal_length: int


def init_state(x: np.ndarray) -> BurgState:
    """Stage-0 state: both error series equal the input signal."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("input signal must be a non-empty 1-D array")
    f = x.copy()
    b = x.copy()
    return BurgState(
        forward_errors=f,
        backward_errors=b,
        reflection_coeffs=[],
        ar_coeffs=[],
        error_power=float(np.dot(f, f) + np.dot(b, b)),
        stage=0,
        signal_length=len(x),
    )


def compute_reflection(state: BurgState) -> float:
    """Reflection coefficient for the next stage, from the current errors.

    Raises DegenerateSignalError when the denominator has collapsed to zero
    (constant input already whitened, or a perfectly predictable signal whose
    previous stage annihilated the residual).
    """
    f = state.forward_errors
    b = state.backward_errors
    if len(f) < 2:
        raise DegenerateSignalError(
            f"no samples left for stage {state.stage + 1} (signal too short)"
        )
    num = -2.0 * float(np.dot(f[1:], b[:-1]))
    den = float(np.dot(f[1:], f[1:]) + np.dot(b[:-1], b[:-1]))
    if den <= _DEN_FLOOR:
        raise DegenerateSignalError(
            f"zero prediction-error denominator at stage {state.stage + 1}; "
            "signal is constant or perfectly predictable"
        )
    return num / den


def update_ar_coefficients(prev: list[float], r: float) -> list[float]:
    """Levinson step: extend stage-(i-1) AR coefficients with reflection r.

    new[j] = prev[j] + r * prev[i-j] for j < i (1-based j), new[i] = r.
    """
    i = len(prev) + 1
    out = [prev[j - 1] + r * prev[i - j - 1] for j in range(1, i)]
    out.append(r)
    return out


def update_prediction_errors(state: BurgState, r: float) -> BurgState:
    """Advance the lattice one stage with reflection coefficient r.

    Returns a complete new state: updated error series (valid range one
    sample shorter), appended reflection coefficient, AR coefficients moved
    through the Levinson step, and the new summed error power.
    """
    if not abs(r) <= 1.0:
        raise ValueError(f"|r| must be <= 1, got {r}")
    f = state.forward_errors
    b = state.backward_errors
    if len(f) < 2:
        raise DegenerateSignalError(
            f"no samples left for stage {state.stage + 1} (signal too short)"
        )
    new_f = f[1:] + r * b[:-1]
    new_b = b[:-1] + r * f[1:]
    return BurgState(
        forward_errors=new_f,
        backward_errors=new_b,
        reflection_coeffs=state.reflection_coeffs + [r],
        ar_coeffs=update_ar_coefficients(state.ar_coeffs, r),
        error_power=float(np.dot(new_f, new_f) + np.dot(new_b, new_b)),
        stage=state.stage + 1,
        signal_length=state.signal_length,
    )


def stage_error(state: BurgState) -> float:
    """Summed squared forward plus backward errors over the valid range."""
    f = state.forward_errors
    b = state.backward_errors
    return float(np.dot(f, f) + np.dot(b, b))


@dataclass
class BurgModel:
    """Fitted AR model: whitening filter 1 + sum_j ar_coeffs[j-1] z^-j."""

    order: int
    ar_coeffs: list[float]
    reflection_coeffs: list[float]
    noise_variance: float
    sample_rate: float


@dataclass
class PsdEstimate:
    """One-sided frequency grid (Hz) with two-sided power density values."""

    frequencies: np.ndarray
    power: np.ndarray
    nbins: int


def burg_fit(x: np.ndarray, order: int, sample_rate: float) -> BurgModel:
    """Fit an AR(order) model to a single-channel series.

    noise_variance is the final error power divided by the number of summed
    terms (2 * (N - order)), i.e. the mean squared residual per sample; with
    that normalization the two-sided spectral density returned by
    psd_from_model integrates to the signal variance.
    """
    x = np.asarray(x, dtype=np.float64)
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if x.ndim != 1:
        raise ValueError("input signal must be 1-D")
    n = len(x)
    if n <= order + 1:
        raise ValueError(f"signal length {n} too short for order {order} (need > order + 1)")
    if not np.isfinite(x).all():
        raise DegenerateSignalError("signal holds non-finite values")
    if np.min(x) == np.max(x):
        raise DegenerateSignalError("signal is constant")

    state = init_state(x)
    for _ in range(order):
        r = compute_reflection(state)
        state = update_prediction_errors(state, r)

    n_terms = 2 * (n - order)
    noise_variance = state.error_power / n_terms
    if noise_variance <= 0.0:
        raise DegenerateSignalError(f"signal is perfectly predictable at order {order}")
    return BurgModel(
        order=order,
        ar_coeffs=state.ar_coeffs,
        reflection_coeffs=state.reflection_coeffs,
        noise_variance=noise_variance,
        sample_rate=sample_rate,
    )


def psd_from_model(model: BurgModel, nbins: int) -> PsdEstimate:
    """Evaluate the AR spectral density on nbins points spanning [0, rate/2].

    power[k] = noise_variance / (rate * |1 + sum_j a_j exp(-i 2 pi f_k j / rate)|^2)

    These are two-sided density values sampled on the non-negative frequency
    axis; by symmetry the full two-sided integral is twice the integral over
    this grid, and it recovers the signal variance.
    """
    if nbins < 8:
        raise ValueError(f"nbins must be >= 8, got {nbins}")
    rate = model.sample_rate
    freqs = np.linspace(0.0, rate / 2.0, nbins)
    a = np.asarray(model.ar_coeffs, dtype=np.float64)
    omega = 2.0 * math.pi * freqs / rate
    j = np.arange(1, model.order + 1)
    resp = 1.0 + np.exp(-1j * np.outer(omega, j)) @ a.astype(np.complex128)
    denom = np.abs(resp) ** 2
    power = model.noise_variance / (rate * denom)
    return PsdEstimate(frequencies=freqs, power=power, nbins=nbins)
