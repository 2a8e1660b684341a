"""Pure numpy implementations of the hot kernels.

These are the reference semantics; the compiled extension in
``_kernels.pyx`` must produce identical output (same operations in the
same order, compiled without FMA contraction).
"""

from __future__ import annotations

import numpy as np


def bin_sweep(kappa_cos, kappa_sin, vectors):
    """Propagate stacked phase-space vectors through the per-bin kicks.

    ``vectors`` has one row per variable: light quadratures
    ``(x_0, p_0, ..., x_{N-1}, p_{N-1})`` in rows ``0 .. 2N-1`` followed by
    the four atomic rows ``(X_A, P_A, X_B, P_B)``.  Bin ``i`` applies, in
    the documented order (light kick from pre-bin atomic values, atomic
    kick from pre-bin light values)::

        x_i  += kc[i] * P_A - ks[i] * X_B
        X_A  += kc[i] * p_i
        P_B  += ks[i] * p_i

    The array is modified in place and also returned.
    """
    n_bins = kappa_cos.shape[0]
    base = 2 * n_bins
    xa, pa, xb, pb = base, base + 1, base + 2, base + 3
    for i in range(n_bins):
        kc = kappa_cos[i]
        ks = kappa_sin[i]
        xi = 2 * i
        pi = xi + 1
        vectors[xi] += kc * vectors[pa] - ks * vectors[xb]
        vectors[xa] += kc * vectors[pi]
        vectors[pb] += ks * vectors[pi]
    return vectors


def two_stage_outcomes(z1, z2, mean1, sd1, offset2, slope2, sd2, out1, out2):
    """Sample the storage and verification records of a batch of trials.

    Stage one draws the feedback outcome; stage two draws the verification
    outcome whose conditional mean is affine in the first::

        out1 = mean1 + sd1 * z1
        out2 = offset2 + slope2 * out1 + sd2 * z2
    """
    np.multiply(z1, sd1, out=out1)
    out1 += mean1
    np.multiply(out1, slope2, out=out2)
    out2 += offset2
    out2 += sd2 * z2
    return out1, out2
