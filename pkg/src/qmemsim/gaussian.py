"""Gaussian states over labeled canonical modes and their linear dynamics.

Conventions used throughout the package:

* canonical commutator ``[X, P] = i`` (hbar = 1), so vacuum and coherent
  states have quadrature variance 1/2;
* quadratures are ordered ``(X1, P1, X2, P2, ...)`` in means and covariances;
* the symplectic form is block diagonal with ``[[0, 1], [-1, 0]]`` per mode.

States are immutable value objects; every operation returns a new state.
Measurement sampling takes the random source explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModeLabel",
    "GaussianState",
    "SymplecticMap",
    "symplectic_form",
    "symplectic_eigenvalues",
    "assert_physical",
    "vacuum_state",
    "coherent_state",
    "single_mode",
    "mean_photon_number",
    "apply_symplectic",
    "displace",
    "homodyne_measure",
    "partial_trace",
    "tensor",
]

#: elementwise tolerance for S^T Omega S = Omega
SYMPLECTIC_TOL = 1e-10
#: relative tolerance for covariance symmetry
SYMMETRY_TOL = 1e-12
#: slack allowed below the Heisenberg floor of 1/2
UNCERTAINTY_TOL = 1e-9

VACUUM_VAR = 0.5


@dataclass(frozen=True)
class ModeLabel:
    """A named canonical mode and its position in a state's mode list."""

    name: str
    index: int


def symplectic_form(n_modes):
    """The 2n x 2n symplectic form in XP ordering."""
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for i in range(n_modes):
        omega[2 * i, 2 * i + 1] = 1.0
        omega[2 * i + 1, 2 * i] = -1.0
    return omega


def symplectic_eigenvalues(cov):
    """Symplectic spectrum of a covariance matrix (one value per mode).

    The eigenvalues of ``Omega @ cov`` come in pairs ``+/- i nu``; the
    returned ``nu`` values are >= 1/2 for any physical state.
    """
    cov = np.asarray(cov, dtype=float)
    n_modes = cov.shape[0] // 2
    ev = np.linalg.eigvals(symplectic_form(n_modes) @ cov)
    return np.sort(np.abs(ev))[::2][:n_modes] if n_modes else np.array([])


class GaussianState:
    """Mean vector and covariance matrix over an ordered list of modes."""

    __slots__ = ("modes", "mean", "cov")

    def __init__(self, modes, mean, cov, copy=True):
        labels = []
        seen = set()
        for i, m in enumerate(modes):
            name = m.name if isinstance(m, ModeLabel) else str(m)
            if name in seen:
                raise ValueError(f"duplicate mode name {name!r}")
            seen.add(name)
            labels.append(ModeLabel(name, i))
        if not labels:
            raise ValueError("a state needs at least one mode")

        mean = np.array(mean, dtype=float, copy=copy).reshape(-1)
        cov = np.array(cov, dtype=float, copy=copy)
        dim = 2 * len(labels)
        if mean.shape != (dim,) or cov.shape != (dim, dim):
            raise ValueError(
                f"moments of shape {mean.shape}/{cov.shape} do not match "
                f"{len(labels)} modes"
            )
        scale = max(1.0, np.abs(cov).max())
        if np.abs(cov - cov.T).max() > SYMMETRY_TOL * scale:
            raise ValueError("covariance matrix is not symmetric")

        object.__setattr__(self, "modes", tuple(labels))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        mean.flags.writeable = False
        cov.flags.writeable = False

    def __setattr__(self, name, value):
        raise AttributeError("GaussianState is immutable")

    # -- mode bookkeeping ---------------------------------------------------

    @property
    def n_modes(self):
        return len(self.modes)

    @property
    def mode_names(self):
        return tuple(m.name for m in self.modes)

    def mode_index(self, mode):
        name = mode.name if isinstance(mode, ModeLabel) else str(mode)
        for m in self.modes:
            if m.name == name:
                return m.index
        raise ValueError(f"unknown mode {name!r}")

    def quad_indices(self, mode):
        """(index of X, index of P) for a mode."""
        i = self.mode_index(mode)
        return 2 * i, 2 * i + 1

    def quad_index(self, mode, quadrature):
        ix, ip = self.quad_indices(mode)
        q = str(quadrature).lower()
        if q == "x":
            return ix
        if q == "p":
            return ip
        raise ValueError(f"quadrature must be 'x' or 'p', got {quadrature!r}")

    # -- moment accessors ---------------------------------------------------

    def quad_mean(self, mode, quadrature):
        return float(self.mean[self.quad_index(mode, quadrature)])

    def quad_var(self, mode, quadrature):
        i = self.quad_index(mode, quadrature)
        return float(self.cov[i, i])

    def mode_mean(self, mode):
        ix, ip = self.quad_indices(mode)
        return float(self.mean[ix]), float(self.mean[ip])

    def mode_cov(self, mode):
        ix, ip = self.quad_indices(mode)
        idx = np.ix_([ix, ip], [ix, ip])
        return self.cov[idx].copy()

    def __repr__(self):
        names = ", ".join(self.mode_names)
        return f"GaussianState([{names}], mean={self.mean!r})"


def assert_physical(state, tol=UNCERTAINTY_TOL):
    """Raise if the covariance violates the uncertainty relation."""
    nu_min = symplectic_eigenvalues(state.cov).min()
    if nu_min < VACUUM_VAR - tol:
        raise ValueError(
            f"state violates the uncertainty relation: min symplectic "
            f"eigenvalue {nu_min} < 1/2"
        )
    return nu_min


@dataclass(frozen=True)
class SymplecticMap:
    """Affine phase-space map ``v -> S v + d`` with symplectic ``S``."""

    matrix: np.ndarray
    displacement: np.ndarray = None

    def __post_init__(self):
        s = np.array(self.matrix, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
            raise ValueError(f"matrix shape {s.shape} is not 2M x 2M")
        d = self.displacement
        d = np.zeros(s.shape[0]) if d is None else np.array(d, dtype=float)
        if d.shape != (s.shape[0],):
            raise ValueError("displacement length does not match matrix")
        omega = symplectic_form(s.shape[0] // 2)
        defect = np.abs(s.T @ omega @ s - omega).max()
        if defect > SYMPLECTIC_TOL:
            raise ValueError(
                f"matrix is not symplectic (defect {defect:.3e} > "
                f"{SYMPLECTIC_TOL})"
            )
        object.__setattr__(self, "matrix", s)
        object.__setattr__(self, "displacement", d)
        s.flags.writeable = False
        d.flags.writeable = False

    @property
    def n_modes(self):
        return self.matrix.shape[0] // 2

    @classmethod
    def identity(cls, n_modes):
        return cls(np.eye(2 * n_modes))

    @classmethod
    def rotation(cls, theta):
        """Single-mode phase rotation ``X -> X cos + P sin, P -> -X sin + P cos``."""
        c, s = np.cos(theta), np.sin(theta)
        return cls(np.array([[c, s], [-s, c]]))

    def embed(self, positions, n_modes):
        """Lift this map to ``n_modes`` modes, acting on the given positions.

        ``positions[i]`` is the mode slot (in the larger state) played by
        mode ``i`` of this map; all other modes are untouched.
        """
        if len(positions) != self.n_modes:
            raise ValueError("one position per map mode required")
        big = np.eye(2 * n_modes)
        disp = np.zeros(2 * n_modes)
        for i, pi in enumerate(positions):
            disp[2 * pi : 2 * pi + 2] = self.displacement[2 * i : 2 * i + 2]
            for j, pj in enumerate(positions):
                big[2 * pi : 2 * pi + 2, 2 * pj : 2 * pj + 2] = self.matrix[
                    2 * i : 2 * i + 2, 2 * j : 2 * j + 2
                ]
        return SymplecticMap(big, disp)


# -- state constructors -----------------------------------------------------


def vacuum_state(mode_labels):
    """Vacuum over the given modes: zero mean, covariance diag(1/2)."""
    labels = list(mode_labels)
    if not labels:
        raise ValueError("at least one mode label required")
    dim = 2 * len(labels)
    return GaussianState(labels, np.zeros(dim), VACUUM_VAR * np.eye(dim), copy=False)


def coherent_state(x, p, mode="light"):
    """Single-mode coherent state with mean (x, p) and vacuum covariance."""
    return GaussianState(
        [mode], np.array([x, p], dtype=float), VACUUM_VAR * np.eye(2), copy=False
    )


def single_mode(name, x=0.0, p=0.0, var_x=VACUUM_VAR, var_p=VACUUM_VAR, cov_xp=0.0):
    """General single-mode Gaussian state from its four moments."""
    cov = np.array([[var_x, cov_xp], [cov_xp, var_p]], dtype=float)
    return GaussianState([name], np.array([x, p], dtype=float), cov, copy=False)


# -- operations ---------------------------------------------------------------


def mean_photon_number(state, mode):
    """Mean of ``(X^2 + P^2 - 1) / 2`` in the given mode."""
    mx, mp = state.mode_mean(mode)
    vx = state.quad_var(mode, "x")
    vp = state.quad_var(mode, "p")
    return 0.5 * (mx**2 + mp**2 + vx + vp - 1.0)


def apply_symplectic(state, smap):
    """Evolve the state: mean -> S mean + d, cov -> S cov S^T."""
    if smap.n_modes != state.n_modes:
        raise ValueError(
            f"map acts on {smap.n_modes} modes, state has {state.n_modes}"
        )
    s = smap.matrix
    return GaussianState(
        state.modes,
        s @ state.mean + smap.displacement,
        s @ state.cov @ s.T,
        copy=False,
    )


def displace(state, mode, dx, dp):
    """Shift one mode's mean by (dx, dp); the covariance is untouched."""
    ix, ip = state.quad_indices(mode)
    mean = state.mean.copy()
    mean[ix] += dx
    mean[ip] += dp
    return GaussianState(state.modes, mean, state.cov, copy=False)


def partial_trace(state, keep):
    """Restrict the state to the listed modes (in the order given)."""
    keep = list(keep)
    if not keep:
        raise ValueError("must keep at least one mode")
    indices = [state.mode_index(m) for m in keep]
    quads = []
    for i in indices:
        quads.extend((2 * i, 2 * i + 1))
    names = [state.modes[i].name for i in indices]
    return GaussianState(
        names, state.mean[quads], state.cov[np.ix_(quads, quads)], copy=False
    )


def tensor(a, b):
    """Product state of two independent states (modes of ``a`` first)."""
    overlap = set(a.mode_names) & set(b.mode_names)
    if overlap:
        raise ValueError(f"mode names appear on both sides: {sorted(overlap)}")
    mean = np.concatenate([a.mean, b.mean])
    cov = np.zeros((mean.size, mean.size))
    na = a.mean.size
    cov[:na, :na] = a.cov
    cov[na:, na:] = b.cov
    return GaussianState(a.mode_names + b.mode_names, mean, cov, copy=False)


def homodyne_measure(state, mode, quadrature="x", rng=None, fixed_outcome=None):
    """Measure one quadrature; return (outcome, conditional state).

    The outcome is drawn from the Gaussian marginal of the measured
    quadrature (consuming exactly one standard normal from ``rng``), or
    taken as ``fixed_outcome``. The conditional state of the remaining
    modes follows the Schur-complement update and the measured mode is
    removed.

    A zero-variance quadrature can only be "measured" with a fixed
    outcome; sampling from it is rejected.
    """
    if state.n_modes < 2:
        raise ValueError("measuring the only mode would leave an empty state")
    q = state.quad_index(mode, quadrature)
    mu_q = state.mean[q]
    var_q = state.cov[q, q]

    degenerate = var_q <= 0.0
    if fixed_outcome is not None:
        outcome = float(fixed_outcome)
    else:
        if degenerate:
            raise ValueError(
                "cannot sample a zero-variance quadrature; pass fixed_outcome"
            )
        if rng is None:
            raise ValueError("provide rng to sample or fixed_outcome")
        outcome = mu_q + np.sqrt(var_q) * rng.standard_normal()

    drop = state.mode_index(mode)
    rest = [i for i in range(state.n_modes) if i != drop]
    quads = []
    for i in rest:
        quads.extend((2 * i, 2 * i + 1))
    mean_r = state.mean[quads]
    cov_rr = state.cov[np.ix_(quads, quads)]
    cov_rq = state.cov[quads, q]

    if degenerate:
        mean_c, cov_c = mean_r, cov_rr
    else:
        mean_c = mean_r + cov_rq * ((outcome - mu_q) / var_q)
        cov_c = cov_rr - np.outer(cov_rq, cov_rq) / var_q

    names = [state.modes[i].name for i in rest]
    return outcome, GaussianState(names, mean_c, cov_c, copy=False)
