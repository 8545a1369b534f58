"""Headline observables of the coupled spin-vibronic problem.

Everything here reduces to solves of single m_s sectors: the splitting gamma
between the dark A2u singlet and the bright Eu doublet (at first or second
electron-phonon order), the quenching factors p_u / p_g of electronic
operators inside the Eu doublet, the effective spin-orbit splittings of the
m_s-resolved levels, and the inverse problem of calibrating bare spin-orbit
constants to a target Eu splitting.

Spin-orbit eigenstates are matched to their zero-coupling parents by maximum
overlap; an overlap below 0.5 aborts the analysis rather than reporting a
mislabeled level.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .eigensolver import (
    ConvergenceResult,
    EigResult,
    cluster_degeneracies,
    converge_cutoff,
    solve_lowest,
)
from .hamiltonian import (
    PRESET_E_RAISED,
    SIGMA_Y,
    SectorSpec,
    SparseHermitian,
    assemble,
    op_on_g,
    op_on_u,
)
from .oscillator import build_basis
from .params import (
    Couplings,
    DefectParams,
    SocParams,
    couplings_for_order,
    depth_preserving_linear_couplings,
    pes_to_couplings,
)
from .symmetry import (
    LABEL_A2U,
    LABEL_EU,
    SymmetryOperators,
    VibronicState,
    analyze_states,
)

MEV_PER_EV = 1000.0


class AnalysisError(RuntimeError):
    """A solve produced a state structure the analysis cannot interpret."""


@dataclass(frozen=True)
class SolverOptions:
    k: int = 10
    tol: float = 1e-10
    seed: int = 0
    dense_threshold: int = 4000
    method: str = "auto"
    max_basis: int | None = None
    cluster_tol: float = 1e-6

    def solve(self, h: SparseHermitian, k: int | None = None) -> EigResult:
        return solve_lowest(
            h,
            k=self.k if k is None else k,
            tol=self.tol,
            seed=self.seed,
            dense_threshold=self.dense_threshold,
            method=self.method,
            max_basis=self.max_basis,
        )


@dataclass
class SectorSolution:
    """One labeled zero-spin-orbit sector solve."""

    spec: SectorSpec
    result: EigResult
    clusters: list[list[int]]
    states: list[VibronicState]
    ops: SymmetryOperators

    @property
    def energies(self) -> np.ndarray:
        return self.result.eigenvalues

    def lowest(self, label: str) -> VibronicState:
        for s in self.states:
            if s.irrep == label:
                return s
        raise AnalysisError(f"no state labeled {label} among the lowest {len(self.states)}")

    def eu_doublet(self) -> tuple[np.ndarray, float]:
        """Eigenvector pair and energy of the lowest Eu cluster."""
        for ci, cluster in enumerate(self.clusters):
            members = [s for s in self.states if s.cluster_index == ci]
            if len(cluster) == 2 and all(s.irrep == LABEL_EU for s in members):
                return self.result.eigenvectors[:, cluster], float(
                    self.result.eigenvalues[cluster[0]]
                )
        raise AnalysisError("lowest Eu doublet not found (not twofold degenerate?)")


def solve_sector(
    couplings: Couplings,
    lambda_corr: float,
    cutoff: int,
    preset: str = PRESET_E_RAISED,
    opts: SolverOptions = SolverOptions(),
) -> SectorSolution:
    """Solve and label the spin-orbit-free sector at the given cutoff."""
    spec = SectorSpec(couplings=couplings, lambda_corr=lambda_corr, cutoff=cutoff, preset=preset)
    basis = build_basis(cutoff)
    h = assemble(spec, basis)
    result = opts.solve(h)
    result.cutoff_used = cutoff
    ops = SymmetryOperators(basis)
    clusters = cluster_degeneracies(result, opts.cluster_tol)
    states = analyze_states(result, clusters, ops)
    return SectorSolution(
        spec=spec, result=result, clusters=clusters.clusters, states=states, ops=ops
    )


def gamma_splitting(
    defect: DefectParams,
    order: int,
    cutoff: int,
    preset: str = PRESET_E_RAISED,
    opts: SolverOptions = SolverOptions(),
) -> float:
    """Energy of the lowest Eu doublet above the lowest A2u singlet (meV).

    order = 1 solves the position-preserving linear model, order = 2 the full
    quadratic one.  Fails loudly if the lowest state is not A-type.
    """
    couplings = couplings_for_order(defect, order)
    sol = solve_sector(couplings, defect.lambda_corr, cutoff, preset, opts)
    lowest = sol.states[0]
    if lowest.irrep not in ("A1u", "A2u"):
        raise AnalysisError(
            f"lowest state is {lowest.irrep}, not an A-type singlet; "
            f"characters are outside tolerance or the model is misconfigured"
        )
    e_a2u = sol.lowest(LABEL_A2U).energy
    e_eu = sol.lowest(LABEL_EU).energy
    return e_eu - e_a2u


def _soc_unit_operators(basis_dim: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Spin-orbit operators at unit coupling for the u and g doublets."""
    eye = sp.identity(basis_dim)
    su = sp.kron(eye, sp.csr_matrix(0.5 * op_on_u(SIGMA_Y)), format="csr")
    sg = sp.kron(eye, sp.csr_matrix(0.5 * op_on_g(SIGMA_Y)), format="csr")
    return su, sg


def reduction_factors(
    sol: SectorSolution, opts: SolverOptions = SolverOptions()
) -> tuple[float, float]:
    """Quenching factors p_u, p_g of the orbital operators in the Eu doublet.

    The doublet-projected operators are traceless Hermitian 2x2 matrices with
    eigenvalues +/- p; the bare electronic doublet gives p = 1 and strong
    coupling drives p toward zero.
    """
    doublet, _ = sol.eu_doublet()
    su, sg = _soc_unit_operators(sol.ops.basis.dim)
    u = doublet.conj().T @ (su @ doublet)
    v = doublet.conj().T @ (sg @ doublet)
    p_u = float(np.max(np.linalg.eigvalsh(2.0 * u)))
    p_g = float(np.max(np.linalg.eigvalsh(2.0 * v)))
    return p_u, p_g


@dataclass
class SocLevels:
    """Spin-orbit-resolved observables of one defect."""

    lambda_u0: float
    lambda_g0: float
    lambda_eff: float
    gamma2_soc: float
    gamma2_soc_ms0: float
    a2u_ms_split: float
    zpl_shift_ev: float
    e_a2u_soc: float
    e_eu_lower_soc: float
    e_eu_upper_soc: float
    sector_energies: dict[int, np.ndarray] = field(default_factory=dict)
    tracking_overlaps: dict[str, float] = field(default_factory=dict)


def _soc_hamiltonian(
    sol: SectorSolution, lambda_u0: float, lambda_g0: float, m_s: int
) -> SparseHermitian:
    spec = replace(
        sol.spec, soc=SocParams(lambda_u0=lambda_u0, lambda_g0=lambda_g0, m_s=m_s)
    )
    return assemble(spec, sol.ops.basis)


def _tracked_soc_levels(
    sol: SectorSolution,
    result: EigResult,
    min_overlap: float = 0.5,
) -> tuple[float, np.ndarray, dict[str, float]]:
    """(A2u-derived energy, sorted Eu-derived pair energies, overlaps)."""
    a2u_vec = sol.lowest(LABEL_A2U).coefficients[:, None]
    doublet, _ = sol.eu_doublet()
    w_a2u = (np.abs(a2u_vec.conj().T @ result.eigenvectors) ** 2).sum(axis=0)
    w_eu = (np.abs(doublet.conj().T @ result.eigenvectors) ** 2).sum(axis=0)
    i_a2u = int(np.argmax(w_a2u))
    idx_eu = np.argsort(-w_eu)[:2]
    overlaps = {
        "a2u": float(w_a2u[i_a2u]),
        "eu_lower": float(w_eu[idx_eu].min()),
    }
    if overlaps["a2u"] < min_overlap or overlaps["eu_lower"] < min_overlap:
        raise AnalysisError(
            f"state tracking across spin-orbit switch-on failed: overlaps {overlaps} "
            f"below {min_overlap}; increase k or reduce the coupling"
        )
    return float(result.eigenvalues[i_a2u]), np.sort(result.eigenvalues[idx_eu]), overlaps


def soc_levels(
    sol: SectorSolution,
    lambda_u0: float,
    lambda_g0: float,
    opts: SolverOptions = SolverOptions(),
    solve_both_sectors: bool = False,
) -> SocLevels:
    """Spin-orbit observables from non-perturbative m_s = +/-1 solves.

    The m_s = 0 sector is unaffected by the longitudinal spin-orbit term (its
    Hamiltonian is identical to the zero-coupling one), so the m_s = 0 levels
    are taken from the reference solve.  m_s = -1 duplicates +1 by complex
    conjugation; solve_both_sectors forces the explicit computation.
    """
    e_a2u_0 = sol.lowest(LABEL_A2U).energy
    _, e_eu_0 = sol.eu_doublet()

    h_plus = _soc_hamiltonian(sol, lambda_u0, lambda_g0, +1)
    r_plus = opts.solve(h_plus)
    e_a2u_soc, e_eu_pair, overlaps = _tracked_soc_levels(sol, r_plus)

    sectors = {0: sol.result.eigenvalues.copy(), +1: r_plus.eigenvalues.copy()}
    if solve_both_sectors:
        h_minus = _soc_hamiltonian(sol, lambda_u0, lambda_g0, -1)
        sectors[-1] = opts.solve(h_minus).eigenvalues.copy()
    else:
        sectors[-1] = sectors[+1].copy()

    lambda_eff = float(e_eu_pair[1] - e_eu_pair[0])
    e_eu_lowest_soc = min(float(e_eu_pair[0]), e_eu_0)  # m_s = 0 Eu stays at e_eu_0
    e_a2u_lowest_soc = min(e_a2u_soc, e_a2u_0)
    return SocLevels(
        lambda_u0=lambda_u0,
        lambda_g0=lambda_g0,
        lambda_eff=lambda_eff,
        gamma2_soc=float(e_eu_lowest_soc - e_a2u_lowest_soc),
        gamma2_soc_ms0=float(e_eu_lowest_soc - e_a2u_0),
        a2u_ms_split=float(e_a2u_soc - e_a2u_0),
        zpl_shift_ev=float(e_eu_lowest_soc - e_eu_0) / MEV_PER_EV,
        e_a2u_soc=e_a2u_soc,
        e_eu_lower_soc=float(e_eu_pair[0]),
        e_eu_upper_soc=float(e_eu_pair[1]),
        sector_energies=sectors,
        tracking_overlaps=overlaps,
    )


class CalibrationError(RuntimeError):
    """Root bracketing or monotonicity of the calibration response failed."""

    def __init__(self, message: str, scan: list[tuple[float, float]]):
        super().__init__(message + f"; scan: {scan}")
        self.scan = scan


def calibrate_soc(
    sol: SectorSolution,
    target_lambda_eff: float,
    ratio: float = 1.0,
    opts: SolverOptions = SolverOptions(),
    p_guess: tuple[float, float] | None = None,
) -> tuple[float, float]:
    """Bare couplings (lambda_u0, lambda_g0) reproducing a target Eu splitting.

    Scalar root-find in s with (lambda_u0, lambda_g0) = (ratio * s, s).  The
    response is scanned for monotonicity over the bracket before the solve;
    failures carry the scan for diagnosis.
    """
    if target_lambda_eff == 0.0:
        return 0.0, 0.0
    if target_lambda_eff < 0.0:
        raise ValueError("target splitting must be nonnegative")
    from scipy.optimize import brentq

    if p_guess is None:
        p_guess = reduction_factors(sol, opts)
    p_u, p_g = p_guess
    s0 = target_lambda_eff / max(p_u * ratio + p_g, 1e-12)

    def response(s: float) -> float:
        h = _soc_hamiltonian(sol, ratio * s, s, +1)
        r = opts.solve(h)
        _, e_pair, _ = _tracked_soc_levels(sol, r)
        return float(e_pair[1] - e_pair[0])

    # geometric march upward from a quarter of the first-order guess until
    # the target is bracketed; state-tracking breakdown marks the usable
    # ceiling of the response curve
    scan: list[tuple[float, float]] = []
    s = 0.25 * s0
    for _ in range(24):
        try:
            v = response(s)
        except AnalysisError as exc:
            raise CalibrationError(
                f"state tracking broke down at s={s:g} meV before the target "
                f"{target_lambda_eff:g} meV was bracketed ({exc})",
                scan,
            )
        scan.append((s, v))
        if v >= target_lambda_eff:
            break
        s *= 1.7
    else:
        raise CalibrationError(f"could not bracket target {target_lambda_eff:g} meV", scan)

    values = [v for _, v in scan]
    if any(b <= a for a, b in zip(values, values[1:])):
        raise CalibrationError("spin-orbit response is not monotonic over the bracket", scan)

    if len(scan) == 1:
        lo_b, hi_b = scan[0][0] / 4.0, scan[0][0]
        if response(lo_b) > target_lambda_eff:
            raise CalibrationError(
                f"target {target_lambda_eff:g} meV lies below the scanned range", scan
            )
    else:
        lo_b, hi_b = scan[-2][0], scan[-1][0]
    s_star = brentq(
        lambda x: response(x) - target_lambda_eff,
        lo_b,
        hi_b,
        xtol=max(1e-9, 1e-8 * s0),
        rtol=1e-12,
    )
    return ratio * s_star, float(s_star)


def second_order_shift(
    defect: DefectParams,
    cutoff: int,
    preset: str = PRESET_E_RAISED,
    opts: SolverOptions = SolverOptions(),
) -> float:
    """Level shift caused by the quadratic coupling terms at fixed well depth.

    Compares the lowest eigenstate of the full quadratic model against the
    linear reference that reproduces the same stabilization energies; the
    warping stiffens the wells and pushes the low vibronic levels up by
    roughly 25 meV for the tabulated defects.
    """
    c2 = pes_to_couplings(defect)
    c1 = depth_preserving_linear_couplings(defect)
    e2 = solve_sector(c2, defect.lambda_corr, cutoff, preset, opts).energies[0]
    e1 = solve_sector(c1, defect.lambda_corr, cutoff, preset, opts).energies[0]
    return float(e2 - e1)


# registered report quantities for the cutoff-convergence driver
def _obs_gamma(order: int):
    def f(defect, cutoff, preset, opts):
        return gamma_splitting(defect, order, cutoff, preset, opts)

    return f


def _obs_p(index: int):
    def f(defect, cutoff, preset, opts):
        sol = solve_sector(pes_to_couplings(defect), defect.lambda_corr, cutoff, preset, opts)
        return reduction_factors(sol, opts)[index]

    return f


def _obs_e0(defect, cutoff, preset, opts):
    return float(
        solve_sector(pes_to_couplings(defect), defect.lambda_corr, cutoff, preset, opts)
        .energies[0]
    )


OBSERVABLES = {
    "gamma1": _obs_gamma(1),
    "gamma2": _obs_gamma(2),
    "p_u": _obs_p(0),
    "p_g": _obs_p(1),
    "e0": _obs_e0,
}


def converge_observable(
    defect: DefectParams,
    name: str,
    rel_tol: float = 0.01,
    n_start: int = 16,
    n_step: int = 8,
    n_max: int = 56,
    preset: str = PRESET_E_RAISED,
    opts: SolverOptions = SolverOptions(),
) -> ConvergenceResult:
    """Run the cutoff-convergence driver on a registered observable."""
    if name not in OBSERVABLES:
        raise KeyError(f"unknown observable {name!r}; registered: {sorted(OBSERVABLES)}")
    fn = OBSERVABLES[name]
    return converge_cutoff(
        lambda n: fn(defect, n, preset, opts),
        rel_tol=rel_tol,
        n_start=n_start,
        n_step=n_step,
        n_max=n_max,
    )
