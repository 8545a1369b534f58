"""Spin-vibronic level structure of dual Jahn-Teller color-center excited states.

The package builds truncated two-mode oscillator bases, assembles the
electron-phonon plus correlation plus longitudinal spin-orbit Hamiltonian
per spin projection, diagonalizes the sparse sectors, labels the vibronic
eigenstates by point-group irrep, and derives the reported observables:
singlet-doublet splittings, spin-orbit quenching factors, m_s-resolved level
shifts and transition-energy changes.
"""

from .analysis import (
    AnalysisError,
    SectorSolution,
    SolverOptions,
    calibrate_soc,
    converge_observable,
    gamma_splitting,
    reduction_factors,
    second_order_shift,
    soc_levels,
    solve_sector,
)
from .config import RunConfig, parse_config, parse_config_text, serialize_config
from .defaults import DEFECTS, LAMBDA_EFF_TARGETS_MEV, get_defect
from .eigensolver import (
    ConvergenceError,
    EigResult,
    SolverError,
    cluster_degeneracies,
    converge_cutoff,
    solve_lowest,
)
from .hamiltonian import (
    PRESET_A_SPLIT,
    PRESET_E_RAISED,
    SectorSpec,
    SparseHermitian,
    assemble,
    build_correlation,
    build_pjt,
    build_soc,
    op_on_g,
    op_on_u,
)
from .oscillator import OscBasis, build_basis, build_operators
from .params import (
    Couplings,
    DefectParams,
    ParameterError,
    SocParams,
    couplings_for_order,
    couplings_to_pes,
    dimensionless_length_scale,
    first_order_couplings,
    pes_to_couplings,
)
from .pes import (
    IdentifiabilityError,
    PesCurve,
    PesFitError,
    adiabatic_surfaces,
    fit_pes,
    read_pes_csv,
    write_pes_csv,
)
from .reports import SpectrumReport, run_report

__version__ = "0.1.0"
