"""Stochastic simulation of full storage-and-verification series.

A series repeats the storage sequence with fresh atoms and fresh light:
store the input, optionally rotate the atomic quadratures by a quarter
cycle, send a verification pulse through, and record its homodyne X.
Two arms exist because the two atomic quadratures cannot be verified in
the same run: the "p" arm reads the stored P directly, the "x" arm
applies the rotation first so the stored X lands on the readable
quadrature (with a sign flip from the rotation convention).

Trial randomness is counter-based (see :mod:`qmemsim.rng`): records for
a given seed are bit-identical under any chunking or parallel schedule.
The per-trial sampler exploits that the conditional means are affine in
earlier outcomes; the coefficients are extracted once per series from
the exact conditional-Gaussian pipeline, and a literal per-trial
replay of that pipeline is kept as `_run_series_reference` for tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .gaussian import apply_symplectic, coherent_state, homodyne_measure, tensor
from .protocol import (
    VERIFY,
    initial_atoms,
    interaction_map,
    pi_half_pulse,
    readout_map,
    reconstruct_atomic_variance,
    store_conditional,
)
from .rng import BlockRandomSource, stream_key, trial_normals

__all__ = [
    "ARM_P",
    "ARM_X",
    "TrialRecord",
    "HistogramSeries",
    "ReconstructedState",
    "run_series",
    "estimate_channel",
    "make_histogram",
    "ideal_reference",
]

ARM_P = "p"  # verify the stored P (no rotation)
ARM_X = "x"  # verify the stored X (quarter-cycle rotation first)
_ARM_TAGS = {ARM_P: 0, ARM_X: 1}

_MIN_TRIALS_FOR_ESTIMATE = 100


@dataclass(frozen=True, slots=True)
class TrialRecord:
    """One storage sequence: feedback record and verification record."""

    trial_id: int
    arm: str
    feedback_outcome: float
    verification_outcome: float


@dataclass(frozen=True)
class HistogramSeries:
    """Binned verification outcomes plus the ideal-memory reference curve."""

    bin_edges: np.ndarray
    counts: np.ndarray
    n_trials: int
    scaled_by: float
    ref_mean: float
    ref_sd: float


@dataclass(frozen=True)
class ReconstructedState:
    """Atomic memory moments estimated from the two verification arms."""

    mean_x: float
    mean_p: float
    var_x: float
    var_p: float
    se_mean_x: float
    se_mean_p: float
    se_var_x: float
    se_var_p: float
    n_trials_x: int
    n_trials_p: int


def _series_coefficients(input_mean, params, arm):
    """Affine sampling coefficients of one series, from the exact pipeline.

    Returns ``(mean1, sd1, offset2, slope2, sd2)``: the transmitted-light
    X marginal is N(mean1, sd1^2); given feedback outcome t, the
    verification X marginal is N(offset2 + slope2 * t, sd2^2).  The
    conditional-Gaussian update is linear in the outcome, so probing the
    pipeline at t = 0 and t = 1 determines it exactly.
    """
    light = coherent_state(*input_mean, mode="light")
    joint = tensor(light, initial_atoms(params))
    joint = apply_symplectic(joint, interaction_map(params.coupling))
    mean1 = joint.quad_mean("light", "x")
    sd1 = np.sqrt(joint.quad_var("light", "x"))

    probes = []
    sd2 = None
    for t in (0.0, 1.0):
        _, atoms = store_conditional(light, params, fixed_outcome=t)
        if arm == ARM_X:
            atoms = pi_half_pulse(atoms)
        verified = readout_map(atoms, params.readout_coupling)
        probes.append(verified.quad_mean(VERIFY, "x"))
        sd2 = np.sqrt(verified.quad_var(VERIFY, "x"))
    offset2, slope2 = probes[0], probes[1] - probes[0]
    return mean1, sd1, offset2, slope2, sd2


def run_series(input_mean, params, arm, n_trials, seed, chunk_size=1 << 16):
    """Simulate a verification series; returns one record per trial.

    ``input_mean`` is the (x, p) mean of the coherent input, ``arm`` is
    :data:`ARM_P` or :data:`ARM_X`.  For a fixed seed the records are
    deterministic and independent of ``chunk_size``.
    """
    if arm not in _ARM_TAGS:
        raise ValueError(f"arm must be {ARM_P!r} or {ARM_X!r}")
    if n_trials < 1:
        raise ValueError("need at least one trial")
    mean1, sd1, offset2, slope2, sd2 = _series_coefficients(
        input_mean, params, arm
    )
    key = stream_key(seed, _ARM_TAGS[arm])

    records = []
    for start in range(0, n_trials, chunk_size):
        count = min(chunk_size, n_trials - start)
        z = trial_normals(key, start, count, width=2)
        z1 = np.ascontiguousarray(z[:, 0])
        z2 = np.ascontiguousarray(z[:, 1])
        out1 = np.empty(count)
        out2 = np.empty(count)
        kernels.two_stage_outcomes(
            z1, z2, mean1, sd1, offset2, slope2, sd2, out1, out2
        )
        records.extend(
            TrialRecord(start + i, arm, out1[i], out2[i])
            for i in range(count)
        )
    return records


def _run_series_reference(input_mean, params, arm, n_trials, seed):
    """Per-trial replay through the full Gaussian pipeline (slow path).

    Consumes the same counter-based normals as :func:`run_series`; used
    to verify that the affine sampler reproduces the literal sequence of
    operations.
    """
    key = stream_key(seed, _ARM_TAGS[arm])
    z = trial_normals(key, 0, n_trials, width=2)
    light = coherent_state(*input_mean, mode="light")
    records = []
    for i in range(n_trials):
        rng = BlockRandomSource(z[i])
        outcome, atoms = store_conditional(light, params, rng=rng)
        if arm == ARM_X:
            atoms = pi_half_pulse(atoms)
        verified = readout_map(atoms, params.readout_coupling)
        verification, _ = homodyne_measure(verified, VERIFY, "x", rng=rng)
        records.append(TrialRecord(i, arm, outcome, verification))
    return records


def _outcomes(records, arm):
    if not records:
        raise ValueError("no records")
    bad = [r.arm for r in records if r.arm != arm]
    if bad:
        raise ValueError(f"expected arm {arm!r}, found {bad[0]!r}")
    return np.fromiter(
        (r.verification_outcome for r in records), dtype=float, count=len(records)
    )


def estimate_channel(records_p, records_x, readout_coupling):
    """Reconstruct the memory moments from the two verification arms.

    Means are scaled by the readout coupling (the x arm additionally
    carries the rotation's sign flip); variances pass through
    :func:`~qmemsim.protocol.reconstruct_atomic_variance`.  Standard
    errors are the usual sample-moment errors, the variance one from the
    chi-squared width ``sigma^2 sqrt(2 / (N - 1))``.
    """
    v_p = _outcomes(records_p, ARM_P)
    v_x = _outcomes(records_x, ARM_X)
    if min(v_p.size, v_x.size) < _MIN_TRIALS_FOR_ESTIMATE:
        raise ValueError(
            f"need at least {_MIN_TRIALS_FOR_ESTIMATE} trials per arm"
        )
    k_r = readout_coupling

    def moments(values, sign):
        n = values.size
        s2 = float(np.var(values, ddof=1))
        mean = sign * float(np.mean(values)) / k_r
        se_mean = np.sqrt(s2 / n) / abs(k_r)
        var = reconstruct_atomic_variance(s2, k_r)
        se_var = s2 * np.sqrt(2.0 / (n - 1)) / k_r**2
        return mean, se_mean, var, se_var, n

    mean_p, se_mean_p, var_p, se_var_p, n_p = moments(v_p, +1.0)
    mean_x, se_mean_x, var_x, se_var_x, n_x = moments(v_x, -1.0)
    return ReconstructedState(
        mean_x=mean_x,
        mean_p=mean_p,
        var_x=var_x,
        var_p=var_p,
        se_mean_x=se_mean_x,
        se_mean_p=se_mean_p,
        se_var_x=se_var_x,
        se_var_p=se_var_p,
        n_trials_x=n_x,
        n_trials_p=n_p,
    )


def ideal_reference(params, arm, input_mean):
    """Mean and spread of the scaled readout for a perfect memory.

    The overlay curve for histograms: a lossless memory stores the input
    state itself, so the scaled verification outcome is Gaussian around
    the stored quadrature with the shot-noise floor on top.
    """
    x_in, p_in = input_mean
    k_r = params.readout_coupling
    ref_mean = -x_in if arm == ARM_P else p_in
    ref_sd = np.sqrt(0.5 + 0.5 / k_r**2)
    return ref_mean, ref_sd


def make_histogram(records, bins=50, scale=1.0, ref_mean=0.0, ref_sd=1.0):
    """Equal-width histogram of scaled verification outcomes."""
    if bins < 5:
        raise ValueError("at least 5 bins required")
    if not records:
        raise ValueError("no records to bin")
    samples = scale * np.fromiter(
        (r.verification_outcome for r in records), dtype=float, count=len(records)
    )
    lo, hi = float(samples.min()), float(samples.max())
    if lo == hi:  # degenerate data still gets a well-formed histogram
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(samples, bins=bins, range=(lo, hi))
    return HistogramSeries(
        bin_edges=edges,
        counts=counts,
        n_trials=len(records),
        scaled_by=scale,
        ref_mean=ref_mean,
        ref_sd=ref_sd,
    )
