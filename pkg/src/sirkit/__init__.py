"""Design, simulation and Q analysis of stepped-impedance CPW resonators."""

from sirkit.cpw import (
    SAPPHIRE,
    CpwCrossSection,
    LineParams,
    SubstrateSpec,
    cpw_params,
    ellipk,
    solve_center_width,
)
from sirkit.errors import SirkitError, ValidationError
from sirkit.fitting import FitResult, fit_notch, remove_background, synthetic_notch_trace
from sirkit.kernels import BACKEND
from sirkit.loss import LossModelParams, qi_of_photon_number, synthesize_power_sweep
from sirkit.manifest import DesignManifest, load_manifest, read_manifest, write_manifest
from sirkit.network import (
    ResonatorSpec,
    S21Trace,
    fundamental_frequency,
    resonance_frequencies,
    s21_sweep,
    simulate_notch,
)
from sirkit.photons import photon_number, power_sweep, single_photon_power
from sirkit.sir import (
    CorrectionCap,
    DesignTarget,
    SirDesign,
    length_correction,
    minimal_total_theta,
    scan_resonances,
    spurious_ratios,
    synthesize_design,
)
from sirkit.traceio import export_touchstone, read_touchstone, read_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CorrectionCap",
    "CpwCrossSection",
    "DesignManifest",
    "DesignTarget",
    "FitResult",
    "LineParams",
    "LossModelParams",
    "ResonatorSpec",
    "S21Trace",
    "SAPPHIRE",
    "SirDesign",
    "SirkitError",
    "SubstrateSpec",
    "ValidationError",
    "cpw_params",
    "ellipk",
    "export_touchstone",
    "fit_notch",
    "fundamental_frequency",
    "length_correction",
    "load_manifest",
    "minimal_total_theta",
    "photon_number",
    "power_sweep",
    "qi_of_photon_number",
    "read_manifest",
    "read_touchstone",
    "read_trace",
    "remove_background",
    "resonance_frequencies",
    "s21_sweep",
    "scan_resonances",
    "simulate_notch",
    "single_photon_power",
    "solve_center_width",
    "spurious_ratios",
    "synthesize_design",
    "synthesize_power_sweep",
    "synthetic_notch_trace",
    "write_manifest",
    "write_trace",
]
