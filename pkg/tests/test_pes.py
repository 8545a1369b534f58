import numpy as np
import pytest

from spinvibronic import (
    IdentifiabilityError,
    adiabatic_surfaces,
    fit_pes,
    pes_to_couplings,
    read_pes_csv,
    write_pes_csv,
)
from spinvibronic.defaults import DEFECTS
from spinvibronic.params import Couplings, DefectParams, branch_minima_dimensionless
from spinvibronic.pes import PesCurve, classical_matrix, lowest_surface_minimum


def sorted_curve(p, grid):
    curve = adiabatic_surfaces(pes_to_couplings(p), p.lambda_corr, "e-raised", grid)
    curve.energies = np.sort(curve.energies, axis=1)
    return curve


def test_zero_coupling_parabolas():
    c = Couplings(0.0, 0.0, 0.0, 0.0, 80.0)
    grid = np.linspace(-2.0, 2.0, 41)
    curve = adiabatic_surfaces(c, 60.0, "e-raised", grid)
    harm = 0.5 * 80.0 * grid**2
    expected = np.column_stack([harm, harm, harm + 60.0, harm + 60.0])
    assert np.abs(np.sort(curve.energies, axis=1) - expected).max() < 1e-10


def test_q0_levels_are_two_pairs():
    p = DEFECTS["SnV0"]
    curve = adiabatic_surfaces(pes_to_couplings(p), p.lambda_corr, "e-raised", np.array([0.0]))
    assert np.allclose(np.sort(curve.energies[0]), [0.0, 0.0, 98.2, 98.2], atol=1e-10)


def test_snv0_minima_depths_match_inputs_at_zero_correlation():
    # closed-form relations and numerical minima agree to high precision
    p = DEFECTS["SnV0"]
    c = pes_to_couplings(p)
    rho = branch_minima_dimensionless(c)
    q1, d1 = lowest_surface_minimum(c, 0.0, "e-raised", +1, sheet=0)
    assert q1 == pytest.approx(rho[0], rel=1e-10)
    assert d1 == pytest.approx(p.e_jt[0], rel=1e-10)
    q2, d2 = lowest_surface_minimum(c, 0.0, "e-raised", -1, sheet=1)
    assert q2 == pytest.approx(rho[1], rel=1e-8)
    assert d2 == pytest.approx(p.e_jt[1], rel=1e-10)


def test_threefold_symmetry_of_lowest_surface():
    # three equivalent wells at 120 degree separation, warping barrier between
    p = DEFECTS["SnV0"]
    c = pes_to_couplings(p)
    rho = np.linspace(0.1, 4.0, 600)
    depths = {}
    for phi_deg in (0, 120, 240, 60, 180, 300):
        phi = np.radians(phi_deg)
        qx, qy = rho * np.cos(phi), rho * np.sin(phi)
        e = np.linalg.eigvalsh(classical_matrix(c, 0.0, "e-raised", qx, qy))[:, 0]
        depths[phi_deg] = e.min()
    wells = [depths[a] for a in (0, 120, 240)]
    saddles = [depths[a] for a in (60, 180, 300)]
    assert np.ptp(wells) < 1e-8
    assert np.ptp(saddles) < 1e-8
    assert saddles[0] - wells[0] == pytest.approx(p.delta_jt[0], rel=1e-3)


def test_tracked_surfaces_are_smooth():
    p = DEFECTS["SnV0"]
    grid = np.linspace(-2.5, 3.2, 229)
    curve = adiabatic_surfaces(pes_to_couplings(p), p.lambda_corr, "e-raised", grid)
    # second differences stay bounded: no sorting swaps between neighbors
    d2 = np.abs(np.diff(curve.energies, n=2, axis=0)).max()
    assert d2 < 1.0


def test_csv_round_trip(tmp_path):
    p = DEFECTS["GeV0"]
    curve = sorted_curve(p, np.linspace(-2.0, 3.0, 26))
    curve.energies[3, 2] = np.nan
    path = tmp_path / "surfaces.csv"
    write_pes_csv(curve, path)
    back = read_pes_csv(path)
    assert back.qx_unit == curve.qx_unit
    assert np.allclose(back.qx, curve.qx)
    mask = np.isfinite(curve.energies)
    assert np.array_equal(mask, np.isfinite(back.energies))
    assert np.allclose(back.energies[mask], curve.energies[mask])


def test_csv_requires_unit_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("qx,e1_mev,e2_mev,e3_mev,e4_mev\n0.0,1,2,3,4\n")
    with pytest.raises(ValueError, match="qx_unit"):
        read_pes_csv(path)


GUESS = DefectParams(name="SnV0", hbar_omega_e=80.0, lambda_corr=90.0,
                     e_jt=(200.0, 12.0), delta_jt=(55.0, 0.2),
                     rho0_angstrom=(0.15, -0.03))


def test_fit_noiseless_round_trip():
    p = DEFECTS["SnV0"]
    samples = sorted_curve(p, np.linspace(-2.0, 3.2, 53))
    fit = fit_pes(samples, GUESS)
    assert fit.params.hbar_omega_e == pytest.approx(p.hbar_omega_e, rel=1e-6)
    assert fit.lambda_corr == pytest.approx(p.lambda_corr, rel=1e-6)
    for i in range(2):
        assert fit.params.e_jt[i] == pytest.approx(p.e_jt[i], rel=1e-6)
        assert fit.params.delta_jt[i] == pytest.approx(p.delta_jt[i], rel=1e-6)
    assert np.nanmax(fit.rms_per_surface) < 1e-8


def test_fit_cost_offset_invariance():
    p = DEFECTS["SnV0"]
    samples = sorted_curve(p, np.linspace(-2.0, 3.2, 53))
    shifted = PesCurve(qx=samples.qx, energies=samples.energies + 500.0,
                       qx_unit=samples.qx_unit)
    fit = fit_pes(shifted, GUESS)
    assert fit.offset == pytest.approx(500.0, abs=1e-6)
    assert fit.params.e_jt[0] == pytest.approx(p.e_jt[0], rel=1e-6)


def test_fit_angstrom_units():
    p = DEFECTS["SnV0"]
    length = p.length_scale_angstrom()
    grid = np.linspace(-2.0, 3.2, 53)
    samples = sorted_curve(p, grid)
    ang = PesCurve(qx=grid * length, energies=samples.energies, qx_unit="angstrom")
    fit = fit_pes(ang, GUESS)
    assert fit.params.e_jt[0] == pytest.approx(p.e_jt[0], rel=1e-5)
    assert fit.params.hbar_omega_e == pytest.approx(p.hbar_omega_e, rel=1e-5)


def test_fit_masked_upper_surfaces():
    p = DEFECTS["SnV0"]
    samples = sorted_curve(p, np.linspace(-2.2, 3.2, 61))
    samples.energies[:, 3] = np.nan
    fit = fit_pes(samples, GUESS)
    assert fit.params.e_jt[0] == pytest.approx(p.e_jt[0], rel=1e-5)


def test_fit_one_sided_identifiability_failure():
    p = DEFECTS["SnV0"]
    samples = sorted_curve(p, np.linspace(0.05, 3.2, 40))
    with pytest.raises(IdentifiabilityError, match="branch-2"):
        fit_pes(samples, GUESS)


def test_fit_too_few_points():
    p = DEFECTS["SnV0"]
    samples = sorted_curve(p, np.linspace(-1.0, 1.0, 10))
    with pytest.raises(IdentifiabilityError, match="20"):
        fit_pes(samples, GUESS)


def test_fit_monotone_cost_contract():
    p = DEFECTS["SiV0"]
    samples = sorted_curve(p, np.linspace(-2.0, 3.4, 53))
    fit = fit_pes(samples, GUESS)
    assert all(b <= a + 1e-12 for a, b in zip(fit.cost_history, fit.cost_history[1:]))


def test_fit_noisy_recovery_monte_carlo():
    # 0.5 meV Gaussian noise: branch-1 depth recovered within 2 percent
    p = DEFECTS["SnV0"]
    clean = sorted_curve(p, np.linspace(-2.0, 3.2, 41))
    rng = np.random.default_rng(42)
    errors = []
    rms_values = []
    for _ in range(100):
        noisy = PesCurve(
            qx=clean.qx,
            energies=clean.energies + rng.normal(0.0, 0.5, clean.energies.shape),
            qx_unit=clean.qx_unit,
        )
        fit = fit_pes(noisy, GUESS)
        errors.append(abs(fit.params.e_jt[0] - p.e_jt[0]) / p.e_jt[0])
        rms_values.append(np.nanmean(fit.rms_per_surface))
    errors = np.array(errors)
    assert np.max(errors) < 0.02
    # residual report reflects the injected noise level
    assert np.mean(rms_values) == pytest.approx(0.5, rel=0.2)
