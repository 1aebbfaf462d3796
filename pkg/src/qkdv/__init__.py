"""qkdv: a 1-D periodic laboratory for the quantum ion-acoustic long-wave limit."""

from .grid import (
    Field,
    GridSpec,
    TripleNorm,
    antiderivative_zero_mean,
    dealiased_product,
    make_grid,
    sobolev_norm,
    spectral_derivative,
    triple_norm,
)
from .qep import (
    ClosureResult,
    EPState,
    Frame,
    LAB,
    PhysicalParams,
    dispersion_oracle,
    electron_closure,
    ep_rhs,
    measure_dispersion,
    nondimensionalize,
    scaled_frame,
    solve_ep,
)
from .convergence import (
    ConvergenceReport,
    EpsilonRunRecord,
    RemainderTrace,
    fit_order,
    norm_trace,
    run_sweep,
    scaled_discrepancy,
)
from .kdv import (
    CorrectorSet,
    KdVState,
    SourceTerm,
    assemble_G1,
    build_approximation,
    dispersion_coefficient,
    hierarchy_source,
    kdv_invariants,
    prepare_initial_data,
    second_corrector,
    soliton_profile,
    solve_kdv,
    solve_linearized_kdv,
)

__version__ = "0.1.0"
