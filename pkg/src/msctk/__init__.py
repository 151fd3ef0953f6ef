"""msctk: statistical-mechanics toolkit for Majorana surface codes.

Maps independent noise on a honeycomb-torus Majorana code onto disordered
Ising models (three-spin, two-spin, combined, and space-time gauge
variants), samples them with parallel-tempering Monte Carlo, checks small
systems against exact enumeration, and locates error thresholds along the
disorder-temperature line fixed by the noise strength.
"""

__version__ = "0.1.0"

from .lattice import CodeLattice, LatticeSizeError, build_lattice, cells_for_linear_size
from .algebra import (
    MajoranaOperator,
    commutes,
    edge_bilinear,
    from_sites,
    ground_space_degeneracy,
    plaquette_operator,
    same_error_class,
    stabilizer_rank,
    syndrome_of,
)
from .models import (
    DisorderSpec,
    SpinModel,
    bilinear_disorder_from_chain,
    build_bilinear_models,
    build_combined_model,
    build_gauge_model,
    build_qp_model,
    delta_energy,
    energy,
    gauge_disorder_from_history,
    gauge_symmetry_generator,
    nishimori_beta,
    qp_disorder_from_chain,
    temporal_tube_loop,
)
from .noise import ErrorChain, ErrorHistory, ErrorRates, sample_chain, sample_history
from .mc import (
    EnsembleResult,
    McConfig,
    SampleRun,
    run_disorder_ensemble,
    run_single_model,
)
from .oracle import (
    ExactResult,
    enumerate_class_probabilities,
    exact_nishimori_bond_average,
    exact_partition,
    mapping_consistency_check,
)
from .threshold import (
    PhaseBoundary,
    ScanResult,
    ThresholdEstimate,
    estimate_crossing,
    nishimori_scan,
    phase_boundary,
    scan_to_csv,
)

__all__ = [
    "CodeLattice",
    "LatticeSizeError",
    "build_lattice",
    "cells_for_linear_size",
    "MajoranaOperator",
    "commutes",
    "edge_bilinear",
    "from_sites",
    "ground_space_degeneracy",
    "plaquette_operator",
    "same_error_class",
    "stabilizer_rank",
    "syndrome_of",
    "DisorderSpec",
    "SpinModel",
    "bilinear_disorder_from_chain",
    "build_bilinear_models",
    "build_combined_model",
    "build_gauge_model",
    "build_qp_model",
    "delta_energy",
    "energy",
    "gauge_disorder_from_history",
    "gauge_symmetry_generator",
    "nishimori_beta",
    "qp_disorder_from_chain",
    "temporal_tube_loop",
    "ErrorChain",
    "ErrorHistory",
    "ErrorRates",
    "sample_chain",
    "sample_history",
    "EnsembleResult",
    "McConfig",
    "SampleRun",
    "run_disorder_ensemble",
    "run_single_model",
    "ExactResult",
    "enumerate_class_probabilities",
    "exact_nishimori_bond_average",
    "exact_partition",
    "mapping_consistency_check",
    "PhaseBoundary",
    "ScanResult",
    "ThresholdEstimate",
    "estimate_crossing",
    "nishimori_scan",
    "phase_boundary",
    "scan_to_csv",
    "__version__",
]
