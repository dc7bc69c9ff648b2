"""Numerical laboratory for sublevel-set geometry, semigroup inequalities,
and compactness diagnostics of discretized Schrodinger operators."""

__version__ = "0.1.0"

from .inequalities import (
    InequalityReport,
    batch_summary,
    compactness_proxy,
    golden_thompson,
    half_product_bound,
    inequality_batch,
    product_spectrum_match,
    segal,
    trotter_sequence,
    wedge_norm_identity,
    wedge_segal_chain,
)
from .kernels import (
    BoundCheck,
    CompactnessDiagnostics,
    KernelMatrix,
    adjoint,
    apply_kernel,
    compose,
    compose_C,
    d_kernel,
    domination_check,
    gaussian_squared_mass,
    heat_matrix,
    hs_diagnostics,
    hs_norm,
    kernel_power_bound,
    kernel_singular_values,
    multiply_function,
    operator_norm,
    split_tail,
    truncated_convolution,
)
from .linalg import lanczos_extremal
from .operators import (
    Grid,
    SparseOperator,
    SpectrumReport,
    TruncationTable,
    discrete_laplacian,
    hamiltonian,
    potential_on_grid,
    spectrum_study,
    truncation_monotonicity,
)
from .potentials import PotentialExpr, evaluate, parse_potential
from .reports import RunManifest, emit_plot_data, file_digest, to_jsonable, write_json
from .sublevel import (
    DecayFit,
    GrowthReport,
    MeasureEstimate,
    Region,
    ThinnessReport,
    ball_volume,
    decay_fit,
    derived_rng,
    growth_check,
    indicator,
    local_measure,
    measure,
    thinness,
)

__all__ = [
    "__version__",
    "BoundCheck",
    "CompactnessDiagnostics",
    "DecayFit",
    "Grid",
    "GrowthReport",
    "InequalityReport",
    "KernelMatrix",
    "MeasureEstimate",
    "PotentialExpr",
    "Region",
    "RunManifest",
    "SparseOperator",
    "SpectrumReport",
    "ThinnessReport",
    "TruncationTable",
    "adjoint",
    "apply_kernel",
    "ball_volume",
    "batch_summary",
    "compactness_proxy",
    "compose",
    "compose_C",
    "d_kernel",
    "decay_fit",
    "derived_rng",
    "discrete_laplacian",
    "domination_check",
    "emit_plot_data",
    "evaluate",
    "file_digest",
    "gaussian_squared_mass",
    "golden_thompson",
    "growth_check",
    "half_product_bound",
    "hamiltonian",
    "heat_matrix",
    "hs_diagnostics",
    "hs_norm",
    "indicator",
    "inequality_batch",
    "kernel_power_bound",
    "kernel_singular_values",
    "lanczos_extremal",
    "local_measure",
    "measure",
    "multiply_function",
    "operator_norm",
    "parse_potential",
    "potential_on_grid",
    "product_spectrum_match",
    "segal",
    "split_tail",
    "spectrum_study",
    "thinness",
    "to_jsonable",
    "trotter_sequence",
    "truncated_convolution",
    "truncation_monotonicity",
    "wedge_norm_identity",
    "wedge_segal_chain",
    "write_json",
]
