"""Entanglement-assisted simultaneous quadrature measurement: simulation and analysis.

Modules by layer:

- :mod:`eprtrack.gaussian` Gaussian states and symplectic/loss operations
- :mod:`eprtrack.bench` the two-detector bench compiled to a readout model
- :mod:`eprtrack.trajectory` time-dependent displacements
- :mod:`eprtrack.synth` baseband and RF record synthesis
- :mod:`eprtrack.dsp` demodulation, filtering, calibration
- :mod:`eprtrack.analysis` variances, uncertainty products, bound checks
- :mod:`eprtrack.scenario` / :mod:`eprtrack.cli` scenario files and the command line
"""

__version__ = "0.1.0"

from .bench import BenchConfig, ConfigError, ReadoutModel, build_bench, predicted_uncertainty_product
from .gaussian import QuadratureState, UnphysicalStateError, vacuum
from .records import Records, RfTrace, SampleRecord
from .trajectory import fig4_bottom_preset, fig4_top_preset

__all__ = [
    "BenchConfig",
    "ConfigError",
    "QuadratureState",
    "ReadoutModel",
    "Records",
    "RfTrace",
    "SampleRecord",
    "UnphysicalStateError",
    "__version__",
    "build_bench",
    "fig4_bottom_preset",
    "fig4_top_preset",
    "predicted_uncertainty_product",
    "vacuum",
]
