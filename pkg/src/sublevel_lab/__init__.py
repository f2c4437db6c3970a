"""Numerical laboratory for sublevel-set bounds on oscillatory integrals.

Modules:

- :mod:`.phase_catalog` - phases, amplitudes and the named catalog
- :mod:`.sublevel_geometry` - sublevel measures, coarea density, assumption checks
- :mod:`.symmetrization` - radial rearrangement and the ``T`` function
- :mod:`.oscillatory_quadrature` - coarea and spatial evaluations of ``I(lambda)``
- :mod:`.bound_verifier` - main bound, inequality ledger, decay fits
- :mod:`.cli_runner` - command line and report files
"""
from .bound_verifier import (
    BoundReport,
    Prop1Report,
    band_measure,
    fit_decay_exponent,
    proof_ledger,
    proposition1_check,
    solve_alpha,
    theorem_rhs,
    verify_bound_sweep,
)
from .errors import (
    ConfigError,
    GeometryError,
    MonotonicityError,
    OutOfRangeError,
    PhaseValidationError,
    QuadratureError,
    RootFindingError,
    SublevelLabError,
)
from .oscillatory_quadrature import OscResult, effective_amplitude, oscint_coarea, oscint_direct, verify_remark3_identity
from .phase_catalog import (
    CATALOG,
    AmplitudeProfile,
    GridPhase2D,
    RadialProfile,
    ball_volume,
    build_phase,
    constant_amplitude,
    linear_taper,
    make_flat_profile,
    make_grid_quadratic,
    make_power_profile,
    make_staircase_profile,
    validate_phase,
)
from .sublevel_geometry import (
    SublevelTable,
    band_measure_monotonicity,
    build_sublevel_table,
    check_geometric_assumption,
    choose_l,
    coarea_density,
    coarea_density_derivative,
)
from .symmetrization import RearrangedPhase, TFunction, build_rearrangement, build_T, gradient_sublevel_inclusion

__version__ = "0.1.0"
