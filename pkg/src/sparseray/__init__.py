"""sparseray: sparse spectrum recovery solvers and an FMCW radar imaging pipeline."""

from .model import (
    ArrayGeometry,
    ArrayKind,
    Dictionary,
    Measurement,
    Ray,
    build_fourier_dictionary,
    make_coprime_array,
    make_full_array,
    make_sparse_array,
    rays_to_spectrum,
    six_ray_benchmark,
    synth_ray_signal,
)
from .solvers import (
    IllConditionedError,
    IterTrace,
    PosteriorState,
    SolveResult,
    SolverConfig,
    Termination,
    blrc_gamma_update,
    cpa_config,
    posterior_update,
    prune,
    sbl_hyper_update,
    solve,
    solve_blrc,
    solve_cg,
    solve_omp,
    solve_sbl,
    spa_config,
)
from .analysis import (
    LandscapeCurve,
    count_local_minima,
    expectation_identity_check,
    landscape_scan,
    normalized_mse,
    quadratic_min_identity_check,
    reference_landscape_instance,
    residue_db,
    taylor_expectation_check,
)
from .radar import (
    PointScatterer,
    RadarParams,
    RangeAzimuthImage,
    angle_recover,
    corner_reflector_scene,
    demo_scene,
    range_transform,
    score_image,
    select_range_bins,
    simulate_adc,
    to_physical,
)

__version__ = "0.1.0"
