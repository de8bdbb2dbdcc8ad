"""Simulator for biphoton generation by four-wave mixing in warm atomic vapor.

From steady-state density-matrix equations for a diamond-type four-level
scheme, the package computes velocity-averaged susceptibilities, the joint
biphoton spectrum, etalon-filtered two-photon correlation wave packets, and
the analysis quantities used to characterize heralded single photons
(temporal/spectral widths, signal-to-background, nonclassicality metrics),
plus parameter-sweep tooling and a CLI.
"""

__version__ = "0.1.0"

from .doppler import GridSpec, QuadratureSpec, QuadratureError, averaged_response
from .fitting import (
    CorrelationMetrics,
    EtalonFitResult,
    FitResult,
    cauchy_schwarz,
    fit_etalon_spectrum,
    fit_wavepacket,
    sbr_to_peak_g2,
    spectral_fwhm,
)
from .obe import (
    SingularSystemError,
    SusceptibilityTriple,
    ZerothOrderSolution,
    solve_first_order,
    solve_zeroth_order,
)
from .params import (
    FrameParams,
    ParameterError,
    PhysicalParams,
    detunings_from_frame,
    effective_rabi,
    frame_from_detunings,
)
from .spectrum import (
    ComplexSpectrum,
    EtalonModel,
    WavePacket,
    apply_etalon,
    assemble_spectrum,
    etalon_attenuation,
    rate_proxy,
    synthesize_wavepacket,
)
from .selfcheck import run_selfcheck
from .sweep import OdModel, SweepRow, SweepSpec, od_at, rabi_split_equivalence, run_sweep

__all__ = [
    "__version__",
    "GridSpec",
    "QuadratureSpec",
    "QuadratureError",
    "averaged_response",
    "CorrelationMetrics",
    "EtalonFitResult",
    "FitResult",
    "cauchy_schwarz",
    "fit_etalon_spectrum",
    "fit_wavepacket",
    "sbr_to_peak_g2",
    "spectral_fwhm",
    "SingularSystemError",
    "SusceptibilityTriple",
    "ZerothOrderSolution",
    "solve_first_order",
    "solve_zeroth_order",
    "FrameParams",
    "ParameterError",
    "PhysicalParams",
    "detunings_from_frame",
    "effective_rabi",
    "frame_from_detunings",
    "ComplexSpectrum",
    "EtalonModel",
    "WavePacket",
    "apply_etalon",
    "assemble_spectrum",
    "etalon_attenuation",
    "rate_proxy",
    "synthesize_wavepacket",
    "run_selfcheck",
    "OdModel",
    "SweepRow",
    "SweepSpec",
    "od_at",
    "rabi_split_equivalence",
    "run_sweep",
]
