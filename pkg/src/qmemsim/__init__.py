"""Gaussian simulation of a measurement-feedback quantum memory for light.

Subpackages by task:

* :mod:`qmemsim.gaussian` - Gaussian states, symplectic maps, homodyne
  conditioning;
* :mod:`qmemsim.protocol` - the store / verify / retrieve protocol maps;
* :mod:`qmemsim.microscopic` - time-binned two-cell dynamics and its
  reduction to the single-mode interaction;
* :mod:`qmemsim.fidelity` - set-averaged fidelities and classical
  benchmarks;
* :mod:`qmemsim.montecarlo` - reproducible trial series, histograms,
  moment reconstruction;
* :mod:`qmemsim.calibration` - projection-noise calibration fits;
* :mod:`qmemsim.decoherence` - storage-time decay and lifetime curves;
* :mod:`qmemsim.cli` - batch front end (``qmemsim --help``).
"""

from .fidelity import (
    CoherentSet,
    QuadratureSpec,
    average_fidelity,
    classical_fidelity,
    classical_variance_bound,
    optimize_classical_gain,
    overlap,
)
from .gaussian import (
    GaussianState,
    ModeLabel,
    SymplecticMap,
    apply_symplectic,
    coherent_state,
    displace,
    homodyne_measure,
    mean_photon_number,
    partial_trace,
    tensor,
    vacuum_state,
)
from .protocol import (
    ChannelSummary,
    StorageParams,
    interaction_map,
    pi_half_pulse,
    readout_map,
    reconstruct_atomic_variance,
    reverse_readout,
    store_channel,
    store_conditional,
)

__version__ = "0.1.0"
