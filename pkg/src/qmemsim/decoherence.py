"""Phenomenological Gaussian decay of the stored atomic state.

The stored state relaxes toward an isotropic fixed point: means shrink by
``beta = exp(-t / tau)`` while each variance mixes toward the vacuum
value plus an optional excess, ``var -> beta^2 var + (1 - beta^2) (1/2 +
excess)``.  This is the simplest Gaussian semigroup with a monotone
fidelity curve; its single calibration anchor is the time at which the
set-averaged fidelity crosses the classical benchmark.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .fidelity import average_fidelity, optimize_classical_gain
from .gaussian import GaussianState
from .protocol import store_channel

__all__ = [
    "DecayParams",
    "apply_decay",
    "decay_channel",
    "fidelity_vs_time",
    "calibrate_tau",
    "crossing_time",
]


@dataclass(frozen=True)
class DecayParams:
    """Coherence time (s) and excess steady-state variance (canonical)."""

    tau: float
    excess_noise_rate: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ValueError("tau must be finite and positive")
        if self.excess_noise_rate < 0:
            raise ValueError("excess noise must be nonnegative")


def _mixed(var, beta2, params):
    return beta2 * var + (1.0 - beta2) * (0.5 + params.excess_noise_rate)


def apply_decay(atomic_state, t, params):
    """Stored state after a storage delay of ``t`` seconds."""
    if t < 0:
        raise ValueError("storage time must be nonnegative")
    beta = np.exp(-t / params.tau)
    floor = (1.0 - beta**2) * (0.5 + params.excess_noise_rate)
    cov = beta**2 * atomic_state.cov + floor * np.eye(atomic_state.mean.size)
    return GaussianState(atomic_state.modes, beta * atomic_state.mean, cov)


def decay_channel(channel, t, params):
    """Channel summary after storage delay: gains scale uniformly by beta."""
    if t < 0:
        raise ValueError("storage time must be nonnegative")
    beta = np.exp(-t / params.tau)
    beta2 = beta**2
    return replace(
        channel,
        gain_x=beta * channel.gain_x,
        gain_p=beta * channel.gain_p,
        var_x=_mixed(channel.var_x, beta2, params),
        var_p=_mixed(channel.var_p, beta2, params),
    )


def fidelity_vs_time(cset, storage_params, decay, times, quad=None):
    """Set-averaged fidelity at each storage time (same order as input).

    The curve is monotone non-increasing whenever the relaxation fixed
    point ``1/2 + excess_noise_rate`` is at least as noisy as the stored
    variances; a fixed point purer than the memory would transiently
    raise the fidelity (relaxation would scrub stored noise faster than
    it damps the signal).
    """
    times = np.asarray(times, dtype=float)
    if times.size and (np.any(np.diff(times) < 0) or times[0] < 0):
        raise ValueError("times must be sorted and nonnegative")
    base = store_channel(storage_params)
    return np.array(
        [
            average_fidelity(cset, decay_channel(base, t, decay), quad)
            for t in times
        ]
    )


def calibrate_tau(
    cset,
    storage_params,
    crossing,
    excess_noise_rate=0.0,
    tau_bracket=(1e-5, 1.0),
    quad=None,
):
    """Coherence time for which the fidelity meets the classical optimum.

    Root-finds ``tau`` such that the decayed channel's fidelity at
    ``crossing`` seconds equals the best classical fidelity for the set.
    """
    _, f_class = optimize_classical_gain(cset.n_min, cset.n_max)
    base = store_channel(storage_params)

    def gap(tau):
        params = DecayParams(tau, excess_noise_rate)
        return average_fidelity(cset, decay_channel(base, crossing, params), quad) - f_class

    lo, hi = tau_bracket
    if gap(hi) <= 0:
        raise RuntimeError(
            "channel never beats the classical benchmark; cannot calibrate"
        )
    tau = brentq(gap, lo, hi, xtol=1e-12, rtol=1e-12)
    return DecayParams(tau, excess_noise_rate)


def crossing_time(times, fidelities, threshold):
    """Linear-interpolated time where the curve falls through a threshold.

    Returns None if the curve never crosses within the grid.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(fidelities, dtype=float)
    below = np.nonzero(values < threshold)[0]
    if below.size == 0 or below[0] == 0:
        return None
    i = below[0]
    t0, t1 = times[i - 1], times[i]
    f0, f1 = values[i - 1], values[i]
    return float(t0 + (f0 - threshold) * (t1 - t0) / (f0 - f1))
