"""qbounce: revival times of wave packets in a driven gravitational cavity.

Predicts the quantum revival time of an atom bouncing on a modulated
mirror -- both from secular (Mathieu) theory and from direct split-operator
integration of the driven Schroedinger equation -- and compares the two.
"""

from . import analysis, errors, mathieu, resonance, scaling, spectrum, tdse
from .analysis import (RevivalEstimate, SimConfig, SweepRow, extract_classical_period,
                       extract_revival, quadratic_fit, run_single, sweep)
from .errors import QbounceError
from .mathieu import char_value_matrix, char_value_series
from .resonance import (ResonanceContext, RevivalPrediction, build_context,
                        classical_period, quasi_energy, quasi_energy_series,
                        revival_time_bouncer, revival_time_bouncer_simple,
                        revival_time_general, t_zero)
from .scaling import ScaledUnits, cesium_units, derive_units
from .spectrum import SpectrumModel, numeric_action, triangular_well
from .tdse import (AutocorrelationSeries, DriveSpec, Grid, WavePacket,
                   evolve_and_record, init_gaussian, step)

__version__ = "0.1.0"

__all__ = [
    "AutocorrelationSeries", "DriveSpec", "Grid", "QbounceError",
    "ResonanceContext", "RevivalEstimate", "RevivalPrediction", "ScaledUnits",
    "SimConfig", "SpectrumModel", "SweepRow", "WavePacket", "analysis",
    "build_context", "cesium_units", "char_value_matrix", "char_value_series",
    "classical_period", "derive_units", "errors", "evolve_and_record",
    "extract_classical_period", "extract_revival", "init_gaussian", "mathieu",
    "numeric_action", "quadratic_fit", "quasi_energy", "quasi_energy_series",
    "resonance", "revival_time_bouncer", "revival_time_bouncer_simple",
    "revival_time_general", "run_single", "scaling", "spectrum", "step",
    "sweep", "t_zero", "tdse", "triangular_well", "__version__",
]
