"""Pseudospectral numerics for a coupled quadratic-derivative NLS system on the torus.

Modules: :mod:`~qdnls.spectral` (lattices, transforms, operators),
:mod:`~qdnls.projections` (Littlewood-Paley, regions, modulation),
:mod:`~qdnls.norms`, :mod:`~qdnls.dynamics` (Duhamel, Picard, stepper),
:mod:`~qdnls.resonance`, :mod:`~qdnls.estimates` and :mod:`~qdnls.cli`.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BlowUpError,
    ConfigError,
    CostGuardError,
    IrrationalRatioError,
    NonConvergenceError,
    QDNLSError,
)
from .spectral import FieldTriple, FrequencyLattice, SpectralField, build_lattice  # noqa: E402

__all__ = [
    "__version__",
    "BlowUpError",
    "ConfigError",
    "CostGuardError",
    "IrrationalRatioError",
    "NonConvergenceError",
    "QDNLSError",
    "FieldTriple",
    "FrequencyLattice",
    "SpectralField",
    "build_lattice",
]
