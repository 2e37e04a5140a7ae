"""semperf: spectral-element work kernel plus the Gamma speedup model."""

from .basis import PressureBasis, SpectralBasis, build_gll_basis, build_pressure_basis
from .errors import (
    CalibrationDegenerateError,
    DivergenceError,
    OverDecompositionError,
    SemperfError,
)
from .gamma import (
    CalibrationInput,
    GammaFit,
    MachineProfile,
    TimeDecomposition,
    analyze_usage_histogram,
    calibrate,
    efficiency,
    gamma_from_efficiency,
    gamma_from_times,
    normalize_node_usage,
    predict_speedup,
    predict_time,
)
from .harness import (
    CampaignSpec,
    RunRecord,
    run_campaign,
    run_degree_sweep,
    run_strong_scaling,
    run_time_budget,
    run_weak_scaling,
)
from .kernel import (
    CaseConfig,
    ElementField,
    FlopCounter,
    apply_element_laplacian,
    dof_count,
    memory_estimate,
    tensor_derivative,
)
from .partition import (
    AppProfile,
    PartitionPlan,
    compute_gamma_a,
    partition_elements,
    words_per_step,
)
from .profiles import REFERENCE_STRONG_CASE, builtin_profiles
from .solver import run_work_unit, step_flops
from .transport import loopback_transport

__version__ = "0.1.0"
