"""Numerical laboratory for utility duality on random-walk market lattices."""

from .bsm import (
    ValueCurve,
    Z_of,
    log_phi,
    log_v_bsm_power,
    phi,
    u_bsm_power,
    v_bsm,
    v_bsm_power,
    z_density,
)
from .conjugate import (
    CRRA,
    MajorantBound,
    NumericU,
    PowerConjugate,
    SeriesConjugate,
    UtilitySpec,
    asymptotic_elasticity,
    conjugate_U,
    conjugate_V,
    fit_majorant,
    power_utility,
    utility_from_json,
)
from .divergence import (
    DensityReciprocalV,
    DivergenceScan,
    V0,
    divergence_scan,
    doubling_series_v,
    doubling_series_vprime,
    shift_V,
)
from .dp import DPResult, binomial_complete_u, crra_dp, general_dp, verify_relaxation
from .duals import (
    DualEvalReport,
    mgf_convergence,
    tail_report,
    u_n_relaxed,
    v_n_Z,
    v_n_Zn,
)
from .errors import (
    BracketError,
    DualwalkError,
    EvaluationError,
    LatticeSizeError,
    NoMarginError,
    NormalizationError,
    SearchFailure,
)
from .esscher import EsscherParams, Z_n_of, asymptotic_a, ratio_bound_C, solve_esscher
from .growth import (
    CounterexampleCertificate,
    build_certificate,
    find_lambda0,
    find_nk,
    growth_certificate,
    log2_M,
    series_from_certificate,
)
from .lattice import (
    FiniteRV,
    LatticeDistribution,
    asymmetric_binomial,
    gaussian_laplace,
    laplace,
    lattice_expect,
    lattice_log_expect,
    log_laplace,
    moments,
    standardize,
    symmetric_binomial,
    terminal_distribution,
    trinomial,
)

__all__ = [name for name in dir() if not name.startswith("_")]
