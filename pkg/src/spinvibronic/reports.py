"""Report assembly: one defect in, one structured result set out.

run_report drives the whole pipeline for a RunConfig: optional cutoff
convergence, the first- and second-order splittings, quenching factors,
spin-orbit observables (explicit couplings or calibrated to a target), state
tables and level-diagram data.  Writers emit deterministic JSON and CSV
(fixed float formatting, no timestamps), so identical configurations produce
byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import (
    SectorSolution,
    SocLevels,
    SolverOptions,
    calibrate_soc,
    converge_observable,
    gamma_splitting,
    reduction_factors,
    soc_levels,
    solve_sector,
)
from .config import RunConfig, SOC_CALIBRATE, SOC_EXPLICIT, SOC_OFF
from .params import couplings_for_order
from .symmetry import composition_table_rows

MEV_PER_EV = 1000.0


@dataclass
class SpectrumReport:
    """Headline numbers plus the level tables backing them."""

    defect: str
    preset: str
    order: int
    cutoff: int
    coupling_strength: float
    gamma1: float
    gamma2: float
    p_u: float
    p_g: float
    lambda_u0: float | None = None
    lambda_g0: float | None = None
    lambda_eff: float | None = None
    gamma2_soc: float | None = None
    gamma2_soc_ms0: float | None = None
    a2u_ms_split: float | None = None
    zpl_shift_ev: float | None = None
    zpl_baseline_ev: float | None = None
    zpl_with_soc_ev: float | None = None
    convergence_history: list[tuple[int, float]] = field(default_factory=list)
    levels: list[dict] = field(default_factory=list)
    composition: list[dict] = field(default_factory=list)
    level_diagram: list[dict] = field(default_factory=list)

    @property
    def soc_enabled(self) -> bool:
        return self.lambda_eff is not None

    def validate(self) -> None:
        """Sanity bounds that hold for any physical parameter set."""
        if not (0.0 <= self.p_u <= 1.0 and 0.0 <= self.p_g <= 1.0):
            raise ValueError(f"quenching factors outside [0, 1]: {self.p_u}, {self.p_g}")
        if self.coupling_strength <= 0:
            raise ValueError("coupling strength must be positive")
        if self.soc_enabled and self.gamma2_soc > self.gamma2 + self.lambda_eff + 1e-9:
            raise ValueError("gamma2 with spin-orbit exceeds the triangle bound")

    def to_dict(self) -> dict:
        out = {
            "defect": self.defect,
            "preset": self.preset,
            "order": self.order,
            "cutoff": self.cutoff,
            "coupling_strength": _r(self.coupling_strength),
            "gamma1_mev": _r(self.gamma1),
            "gamma2_mev": _r(self.gamma2),
            "p_u": _r(self.p_u),
            "p_g": _r(self.p_g),
        }
        if self.convergence_history:
            out["convergence_history"] = [[n, _r(v)] for n, v in self.convergence_history]
        if self.soc_enabled:
            out.update(
                {
                    "lambda_u0_mev": _r(self.lambda_u0),
                    "lambda_g0_mev": _r(self.lambda_g0),
                    "lambda_eff_mev": _r(self.lambda_eff),
                    "gamma2_soc_mev": _r(self.gamma2_soc),
                    "gamma2_soc_ms0_mev": _r(self.gamma2_soc_ms0),
                    "a2u_ms_split_mev": _r(self.a2u_ms_split),
                    "zpl_shift_ev": _r(self.zpl_shift_ev),
                }
            )
            if self.zpl_baseline_ev is not None:
                out["zpl_baseline_ev"] = _r(self.zpl_baseline_ev)
                out["zpl_with_soc_ev"] = _r(self.zpl_with_soc_ev)
        return out


def _r(x: float | None, digits: int = 10) -> float | None:
    """Round for stable serialization at the reported precision."""
    return None if x is None else float(f"{x:.{digits}g}")


def solver_options(cfg: RunConfig) -> SolverOptions:
    s = cfg.solver
    return SolverOptions(
        k=s.k,
        tol=s.residual_tol,
        seed=s.seed,
        dense_threshold=s.dense_threshold,
        cluster_tol=s.cluster_tol_mev,
    )


def _resolve_cutoff(cfg: RunConfig, opts: SolverOptions):
    s = cfg.solver
    if not s.converge:
        return s.cutoff, []
    res = converge_observable(
        cfg.defect,
        s.converge_observable,
        rel_tol=s.converge_rel_tol,
        n_start=s.converge_n_start,
        n_step=s.converge_n_step,
        n_max=s.converge_n_max,
        preset=cfg.model.preset,
        opts=opts,
    )
    return res.cutoff, res.history


def _level_rows(sol: SectorSolution, soc: SocLevels | None) -> list[dict]:
    rows = []
    e0_global = float(sol.energies[0])
    if soc is not None:
        e0_global = min(e0_global, min(float(v[0]) for v in soc.sector_energies.values()))
    sectors = {0: sol.energies} if soc is None else soc.sector_energies
    for m_s in sorted(sectors):
        energies = sectors[m_s]
        for i, e in enumerate(energies):
            label = ""
            if m_s == 0 and i < len(sol.states):
                label = sol.states[i].irrep
            rows.append(
                {
                    "m_s": m_s,
                    "index": i,
                    "energy_mev": _r(float(e)),
                    "energy_rel_mev": _r(float(e) - e0_global),
                    "label": label,
                }
            )
    return rows


def _diagram_rows(report: SpectrumReport, sol: SectorSolution, soc: SocLevels | None) -> list[dict]:
    """Level-diagram data: the lowest A2u singlet and Eu doublet per stage."""
    rows = []
    e_a2u = sol.lowest("A2u").energy
    e_eu = sol.lowest("Eu").energy
    stage = f"order{report.order}"
    rows.append({"stage": stage, "label": "A2u", "m_s": "", "energy_mev": _r(e_a2u)})
    rows.append({"stage": stage, "label": "Eu", "m_s": "", "energy_mev": _r(e_eu)})
    if soc is not None:
        rows.extend(
            [
                {"stage": "soc", "label": "A2u", "m_s": 0, "energy_mev": _r(e_a2u)},
                {"stage": "soc", "label": "Eu", "m_s": 0, "energy_mev": _r(e_eu)},
                {"stage": "soc", "label": "A2u", "m_s": 1, "energy_mev": _r(soc.e_a2u_soc)},
                {"stage": "soc", "label": "A2u", "m_s": -1, "energy_mev": _r(soc.e_a2u_soc)},
                {"stage": "soc", "label": "Eu-", "m_s": 1, "energy_mev": _r(soc.e_eu_lower_soc)},
                {"stage": "soc", "label": "Eu-", "m_s": -1, "energy_mev": _r(soc.e_eu_lower_soc)},
                {"stage": "soc", "label": "Eu+", "m_s": 1, "energy_mev": _r(soc.e_eu_upper_soc)},
                {"stage": "soc", "label": "Eu+", "m_s": -1, "energy_mev": _r(soc.e_eu_upper_soc)},
            ]
        )
    return rows


def run_report(cfg: RunConfig, solve_both_sectors: bool = True) -> SpectrumReport:
    """Execute the full analysis pipeline for one configuration."""
    opts = solver_options(cfg)
    cutoff, history = _resolve_cutoff(cfg, opts)
    defect = cfg.defect
    preset = cfg.model.preset

    gamma1 = gamma_splitting(defect, 1, cutoff, preset, opts)
    gamma2 = gamma_splitting(defect, 2, cutoff, preset, opts)

    couplings = couplings_for_order(defect, cfg.model.order)
    sol = solve_sector(couplings, defect.lambda_corr, cutoff, preset, opts)
    p_u, p_g = reduction_factors(sol, opts)

    report = SpectrumReport(
        defect=defect.name,
        preset=preset,
        order=cfg.model.order,
        cutoff=cutoff,
        coupling_strength=defect.coupling_strength,
        gamma1=gamma1,
        gamma2=gamma2,
        p_u=p_u,
        p_g=p_g,
        zpl_baseline_ev=defect.zpl_baseline_ev,
        convergence_history=history,
    )

    soc = None
    if cfg.soc.mode != SOC_OFF:
        if cfg.soc.mode == SOC_EXPLICIT:
            lu, lg = cfg.soc.lambda_u0_mev, cfg.soc.lambda_g0_mev
        elif cfg.soc.mode == SOC_CALIBRATE:
            lu, lg = calibrate_soc(
                sol,
                cfg.soc.target_lambda_eff_mev,
                ratio=cfg.soc.ratio,
                opts=opts,
                p_guess=(p_u, p_g),
            )
        soc = soc_levels(sol, lu, lg, opts, solve_both_sectors=solve_both_sectors)
        report.lambda_u0 = lu
        report.lambda_g0 = lg
        report.lambda_eff = soc.lambda_eff
        report.gamma2_soc = soc.gamma2_soc
        report.gamma2_soc_ms0 = soc.gamma2_soc_ms0
        report.a2u_ms_split = soc.a2u_ms_split
        report.zpl_shift_ev = soc.zpl_shift_ev
        if defect.zpl_baseline_ev is not None:
            report.zpl_with_soc_ev = defect.zpl_baseline_ev + soc.zpl_shift_ev

    report.levels = _level_rows(sol, soc)
    report.composition = composition_table_rows(sol.states, defect.length_scale_angstrom())
    report.level_diagram = _diagram_rows(report, sol, soc)
    report.validate()
    return report


# --- writers ----------------------------------------------------------------


def write_report_json(report: SpectrumReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: str | Path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            cells = []
            for col in columns:
                v = row.get(col, "")
                if isinstance(v, float):
                    cells.append(f"{v:.10g}")
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")


def write_levels_csv(report: SpectrumReport, path: str | Path) -> None:
    _write_csv(path, report.levels, ["m_s", "index", "energy_mev", "energy_rel_mev", "label"])


def write_composition_csv(report: SpectrumReport, path: str | Path) -> None:
    _write_csv(
        path,
        report.composition,
        [
            "energy_mev",
            "energy_rel_mev",
            "irrep",
            "displacement",
            "displacement_raw",
            "displacement_angstrom",
            "p_a1u",
            "p_a2u",
            "p_eu",
        ],
    )


def write_level_diagram_csv(report: SpectrumReport, path: str | Path) -> None:
    _write_csv(path, report.level_diagram, ["stage", "label", "m_s", "energy_mev"])


def write_all(report: SpectrumReport, outdir: str | Path, formats=("json", "csv")) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        p = outdir / "report.json"
        write_report_json(report, p)
        written.append(p)
    if "csv" in formats:
        for name, writer in (
            ("levels.csv", write_levels_csv),
            ("composition.csv", write_composition_csv),
            ("level_diagram.csv", write_level_diagram_csv),
        ):
            p = outdir / name
            writer(report, p)
            written.append(p)
    return written
