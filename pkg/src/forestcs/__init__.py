"""Structured-sparsity compressive sensing with forest (joint + tree) models."""

from .operators import (
    BlockDiagonalOperator,
    DenseOperator,
    MeasurementOperator,
    PartialFrequencyOperator,
    SamplingMask,
    estimate_spectral_norm,
    make_dense_subgaussian,
    make_variable_density_mask,
)
from .wavelet import IdentityBasis, TreeLayout, WaveletBasis
from .groups import (
    DuplicationMap,
    GroupLayout,
    build_duplication_map,
    build_group_layout,
    collapse,
    expand,
    group_l21_norm,
    shrinkgroup,
)
from .solvers import (
    DivergenceError,
    SolverConfig,
    SolverResult,
    evaluate_objective,
    fcsa_structured,
    fista,
    fista_structured,
    prox_l1,
    prox_l21_joint,
    prox_tv,
    smooth_gradient,
    tv_norm,
)
from .synth import (
    SparseSupport,
    SynthesisSpec,
    enumerate_rooted_subtrees,
    generate_instance,
    is_connected_support,
    measure,
    sample_rooted_subtree,
    shape_energy,
)
from .theory import (
    BoundParams,
    EnergyFactors,
    blockdiag_bound,
    catalan,
    energy_factors,
    measurement_bound,
    rip_concentration_experiment,
    subtree_count_bound,
)
from .bench import (
    ResultRow,
    median_snr_by_model,
    read_image,
    run_compare,
    run_image,
    run_phase,
    run_sweep,
    snr,
    support_f1,
    write_csv,
    write_image,
    write_svg_chart,
)

__version__ = "0.1.0"
