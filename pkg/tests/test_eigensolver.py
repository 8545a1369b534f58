import numpy as np
import pytest
import scipy.sparse as sp

from spinvibronic import (
    ConvergenceError,
    SocParams,
    SolverError,
    assemble,
    cluster_degeneracies,
    converge_cutoff,
    pes_to_couplings,
    solve_lowest,
)
from spinvibronic.defaults import DEFECTS
from spinvibronic.hamiltonian import SectorSpec, SparseHermitian
from spinvibronic.params import Couplings


def wrap(matrix, real_only=True):
    return SparseHermitian.from_sparse(sp.csr_matrix(matrix), real_only=real_only)


def snv0_h(cutoff, m_s=0, lam=0.0):
    p = DEFECTS["SnV0"]
    spec = SectorSpec(
        couplings=pes_to_couplings(p),
        lambda_corr=p.lambda_corr,
        soc=SocParams(lambda_u0=lam, lambda_g0=lam, m_s=m_s),
        cutoff=cutoff,
    )
    return assemble(spec)


def test_diagonal_matrix():
    h = wrap(np.diag(np.arange(1.0, 101.0)))
    res = solve_lowest(h, k=3, method="lanczos", dense_threshold=0)
    assert np.allclose(res.eigenvalues, [1.0, 2.0, 3.0], atol=1e-9)
    assert res.residual_norms.max() < 1e-8


def test_uncoupled_ground_state_fourfold():
    p = DEFECTS["SnV0"]
    spec = SectorSpec(
        couplings=Couplings(0.0, 0.0, 0.0, 0.0, p.hbar_omega_e), lambda_corr=0.0, cutoff=6
    )
    res = solve_lowest(assemble(spec), k=4)
    assert np.allclose(res.eigenvalues, p.hbar_omega_e, atol=1e-10)


def test_iterative_matches_dense_oracle():
    h = snv0_h(12)
    dense = solve_lowest(h, k=8, method="dense")
    lanczos = solve_lowest(h, k=8, method="lanczos", dense_threshold=0)
    assert np.abs(dense.eigenvalues - lanczos.eigenvalues).max() < 1e-8


def test_deterministic_given_seed():
    h = snv0_h(8)
    a = solve_lowest(h, k=5, method="lanczos", dense_threshold=0, seed=3)
    b = solve_lowest(h, k=5, method="lanczos", dense_threshold=0, seed=3)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


def test_eigenvector_orthonormality_and_residuals():
    h = snv0_h(10)
    res = solve_lowest(h, k=6, method="lanczos", dense_threshold=0)
    gram = res.eigenvectors.conj().T @ res.eigenvectors
    assert np.abs(gram - np.eye(6)).max() < 1e-10
    assert res.residual_norms.max() < 1e-10 * h.norm_bound()


def test_nonconvergence_raises():
    h = snv0_h(10)
    with pytest.raises(SolverError) as err:
        solve_lowest(h, k=6, method="lanczos", dense_threshold=0, max_basis=12)
    assert err.value.residuals is not None


def test_k_larger_than_dim_rejected():
    h = wrap(np.eye(4))
    with pytest.raises(ValueError):
        solve_lowest(h, k=5)


def test_complex_hermitian_path():
    h = snv0_h(8, m_s=1, lam=40.0)
    dense = solve_lowest(h, k=6, method="dense")
    lanczos = solve_lowest(h, k=6, method="lanczos", dense_threshold=0)
    assert np.abs(dense.eigenvalues - lanczos.eigenvalues).max() < 1e-8


def test_variational_monotonicity_in_cutoff():
    lowest = [solve_lowest(snv0_h(n), k=1).eigenvalues[0] for n in (8, 12, 16, 20)]
    assert all(b <= a + 1e-12 for a, b in zip(lowest, lowest[1:]))


def test_cluster_examples():
    cl = cluster_degeneracies([0.0, 1e-7, 5.0], cluster_tol=1e-3)
    assert cl.clusters == [[0, 1], [2]]
    cl = cluster_degeneracies([1.0, 2.0, 3.0], cluster_tol=0.0)
    assert cl.clusters == [[0], [1], [2]]


def test_snv0_cluster_structure():
    res = solve_lowest(snv0_h(16), k=6)
    cl = cluster_degeneracies(res, cluster_tol=1e-3)
    assert [len(c) for c in cl.clusters[:2]] == [1, 2]


def test_converge_cutoff_trivial_case():
    # cutoff-independent observable converges at the starting cutoff
    res = converge_cutoff(lambda n: 87.7, rel_tol=0.01, n_start=4, n_step=2, n_max=12)
    assert res.cutoff == 4
    assert res.value == 87.7
    assert len(res.history) == 2


def test_converge_cutoff_failure_carries_history():
    with pytest.raises(ConvergenceError) as err:
        converge_cutoff(lambda n: float(n), rel_tol=1e-6, n_start=2, n_step=2, n_max=8)
    assert len(err.value.history) == 4


def test_comparative_convergence_histories():
    # stronger dimensionless coupling needs more basis: the truncation error
    # at a small cutoff is larger for SiV0 (branch-1 coupling 2.96) than for
    # PbV0 (2.20), and both settle within the sweep
    from spinvibronic import SolverOptions
    from spinvibronic.analysis import converge_observable
    from spinvibronic.defaults import DEFECTS

    opts = SolverOptions(k=4, dense_threshold=1500)
    errors = {}
    for name in ("SiV0", "PbV0"):
        res = converge_observable(
            DEFECTS[name], "e0", rel_tol=1e-7, n_start=8, n_step=4, n_max=44, opts=opts
        )
        history = dict(res.history)
        errors[name] = abs(history[8] - res.value)
        print(f"{name}: converged at N={res.cutoff}; history {res.history}")
    assert DEFECTS["SiV0"].coupling_strength > DEFECTS["PbV0"].coupling_strength
    assert errors["SiV0"] > errors["PbV0"]
