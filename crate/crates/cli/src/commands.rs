//! Subcommand pipelines. Each validates its parameters, computes everything
//! in memory and returns the files to write.

use rayon::prelude::*;
use serde::Serialize;

use sohkit::gci::{
    extract_soh_coefficients_with, extract_sohb_coefficients_with, solve_gci_body, solve_gci_sphere,
    ExtractionResolution,
};
use sohkit::kinetic::{integrate, KineticOptions, KineticState, Representation};
use sohkit::particles::{run_and_snapshot, write_snapshot, Model, ObservableSeries, SimConfig};
use sohkit::phase::{equilibrium_branches, phase_diagram, RatioCurve, Stability};
use sohkit::vmf::{order_parameter_c1, vmf_normalization};
use sohkit::NumericPolicy;

use crate::config::{
    CoefficientParams, CoefficientTable, GciModel, GciParams, KineticInitial, KineticParams, PhaseParams, VicsekParams,
};
use crate::emit::{Cell, Outputs, Table, Warnings, SCHEMA};
use crate::error::CliError;

pub type RunResult = Result<(Outputs, Warnings), CliError>;

/// Root scan resolution: log-spaced points on [1e-4, 1], then linear points up to kappa_max.
const SCAN_LOG_POINTS: usize = 3000;
const SCAN_LINEAR_POINTS: usize = 7000;

fn series_table(s: &ObservableSeries) -> Table {
    let dirs = ["dir_x", "dir_y", "dir_z"];
    let mut header = vec!["t", "order"];
    header.extend(&dirs[..s.d]);
    header.push("j_zero_events");
    let mut t = Table::new(&header);
    for k in 0..s.t.len() {
        let mut row = vec![Cell::F(s.t[k]), Cell::F(s.global_order[k])];
        row.extend(s.mean_direction[k].iter().map(|x| Cell::F(*x)));
        row.push(Cell::I(s.j_zero_events[k]));
        t.push(row);
    }
    t
}

fn step_count(t_end: f64, dt: f64) -> Result<u64, CliError> {
    if !(t_end > 0.0) || !(dt > 0.0) {
        return Err(CliError::config("t_end and dt must be positive"));
    }
    let steps = (t_end / dt).round();
    if (steps * dt - t_end).abs() > 1e-9 * t_end || steps < 1.0 {
        return Err(CliError::config(format!("t_end = {t_end} is not a whole number of steps dt = {dt}")));
    }
    Ok(steps as u64)
}

pub fn simulate(model: Model, p: &VicsekParams, seed: u64) -> RunResult {
    if model == Model::Body && p.d != 3 {
        return Err(CliError::config("the body-attitude model requires d = 3"));
    }
    let cfg = SimConfig { n: p.n, l: p.l, r: p.r, nu: p.nu, tau: p.tau, dt: p.dt, d: p.d, seed, initial: p.initial };
    cfg.validate()?;
    let steps = step_count(p.t_end, p.dt)?;
    if p.stride == 0 {
        return Err(CliError::config("stride must be >= 1"));
    }
    let (series, snap) = run_and_snapshot(model, &cfg, steps, p.stride)?;
    let mut out = Outputs::default();
    out.csv("series.csv", &series_table(&series));
    if p.snapshot {
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &snap).map_err(|e| CliError::Io(e.to_string()))?;
        out.raw("final_state.bin", bytes);
    }
    let mut w = Warnings::default();
    w.count("j_zero_events", series.j_zero_events.last().copied().unwrap_or(0));
    Ok((out, w))
}

fn initial_state(p: &KineticParams, repr: Representation) -> Result<KineticState, CliError> {
    let rho = p.rho;
    let f = match &p.initial {
        KineticInitial::Perturbed { mode, amplitude } => {
            if *mode == 0 || *mode > p.modes {
                return Err(CliError::config(format!("perturbation mode must lie in 1..={}, got {mode}", p.modes)));
            }
            let mut s = KineticState::uniform(repr, p.modes, rho)?;
            match repr {
                Representation::Legendre => s.coeffs[*mode] += rho * amplitude,
                Representation::Fourier => s.coeffs[2 * mode - 1] += rho * amplitude,
            }
            s
        }
        KineticInitial::Vmf { kappa, angle } => KineticState::vmf(repr, p.modes, rho, *kappa, *angle)?,
        KineticInitial::Nodes { values } => {
            let s = KineticState::from_node_values(repr, p.modes, values)?;
            let m = s.mass();
            if !(m > 0.0) {
                return Err(CliError::config("node values must have positive mass"));
            }
            KineticState { coeffs: s.coeffs.iter().map(|c| c * rho / m).collect(), ..s }
        }
    };
    if !(f.min_node_value() > 0.0) {
        return Err(CliError::config("initial density is not positive at every quadrature node"));
    }
    Ok(f)
}

pub fn solve_kinetic(p: &KineticParams) -> RunResult {
    let repr = Representation::for_dim(p.d)?;
    let law = p.law.build(p.d)?;
    if !(p.rho > 0.0) || p.modes < 2 {
        return Err(CliError::config("need rho > 0 and modes >= 2"));
    }
    let f0 = initial_state(p, repr)?;
    let opts = KineticOptions {
        t_end: p.t_end,
        dt0: p.dt0,
        dt_max: p.dt_max,
        record_every: p.record_every,
        keep_states: false,
        ..Default::default()
    };
    let tr = integrate(&f0, &law, &opts)?;
    let dg = &tr.diagnostics;
    let mut t = Table::new(&["t", "mass", "j_norm", "F", "D"]);
    for k in 0..dg.len() {
        t.push(vec![
            dg.t[k].into(),
            dg.mass[k].into(),
            dg.j_norm[k].into(),
            dg.free_energy[k].into(),
            dg.dissipation[k].into(),
        ]);
    }
    let mut fin = Table::new(&["index", "coefficient"]);
    for (i, c) in tr.final_state.coeffs.iter().enumerate() {
        fin.push(vec![i.into(), (*c).into()]);
    }
    let mut out = Outputs::default();
    out.csv("diagnostics.csv", &t);
    out.csv("final_state.csv", &fin);
    let mut w = Warnings::default();
    w.count("drift_off", tr.events.drift_off);
    w.count("entropy_clips", tr.events.entropy_clips);
    w.count("rejected_steps", tr.rejected as u64);
    w.flag("dissipation is evaluated with grad(log f - k v . u_f)");
    Ok((out, w))
}

pub fn compute_gci(p: &GciParams) -> RunResult {
    let kappas = p.kappa.values()?;
    if kappas.iter().any(|k| !(*k > 0.0)) {
        return Err(CliError::config("every kappa must be > 0"));
    }
    if p.model == GciModel::Sphere && p.d != 2 && p.d != 3 {
        return Err(CliError::config("sphere collision invariants need d = 2 or 3"));
    }
    if p.model == GciModel::Body && p.d != 3 {
        return Err(CliError::config("body collision invariants need d = 3"));
    }
    if p.n < 16 {
        return Err(CliError::config("n must be >= 16"));
    }
    let res = ExtractionResolution { gci_nodes: p.n, ..Default::default() };
    let policy = NumericPolicy::DEFAULT;
    struct Row {
        kappa: f64,
        grid: Vec<(f64, f64, f64)>,
        c: sohkit::gci::SohCoefficients,
        weak: f64,
        ratio: f64,
    }
    let rows: Vec<Row> = kappas
        .par_iter()
        .map(|&kappa| -> Result<Row, CliError> {
            Ok(match p.model {
                GciModel::Sphere => {
                    let s = solve_gci_sphere(kappa, p.d, p.n)?;
                    let c = extract_soh_coefficients_with(kappa, p.d, res, &policy)?;
                    let grid = (0..s.theta_grid.len()).map(|i| (s.theta_grid[i], s.g[i], s.h[i])).collect();
                    Row { kappa, grid, c, weak: s.weak_residual, ratio: s.convergence_ratio }
                }
                GciModel::Body => {
                    let s = solve_gci_body(kappa, p.n)?;
                    let c = extract_sohb_coefficients_with(kappa, res, &policy)?;
                    let grid = (0..s.theta_grid.len()).map(|i| (s.theta_grid[i], s.p[i], s.h[i])).collect();
                    Row { kappa, grid, c, weak: s.weak_residual, ratio: s.convergence_ratio }
                }
            })
        })
        .collect::<Result<_, _>>()?;
    let unknown = if p.model == GciModel::Sphere { "g" } else { "p" };
    let mut grid = Table::new(&["kappa", "theta", unknown, "h"]);
    let body = p.model == GciModel::Body;
    let mut coef = if body {
        Table::new(&["kappa", "c1", "c2", "c3", "c4", "weak_residual", "convergence_ratio", "fit_residual"])
    } else {
        Table::new(&["kappa", "c1", "c2", "weak_residual", "convergence_ratio", "fit_residual"])
    };
    for r in &rows {
        for &(th, g, h) in &r.grid {
            grid.push(vec![r.kappa.into(), th.into(), g.into(), h.into()]);
        }
        let mut row = vec![r.kappa.into(), r.c.c1.into(), r.c.c2.into()];
        if body {
            row.push(r.c.c3.into());
            row.push(r.c.c4.into());
        }
        row.extend([r.weak.into(), r.ratio.into(), r.c.provenance.fit_residual.into()]);
        coef.push(row);
    }
    let mut out = Outputs::default();
    out.csv("grid.csv", &grid);
    out.csv("coefficients.csv", &coef);
    Ok((out, Warnings::default()))
}

#[derive(Serialize)]
struct BranchRow {
    rho: f64,
    /// 0 (isotropic) first, then the positive roots.
    roots: Vec<f64>,
    stability: Vec<Stability>,
    lambda: Vec<Option<f64>>,
    lambda_kappa: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct PhaseReport {
    schema: &'static str,
    kind: &'static str,
    law: sohkit::kinetic::LawSpec,
    d: usize,
    kappa_max: f64,
    rho_c: Option<f64>,
    rho_star: f64,
    kappa_star: Option<f64>,
    parity: Option<sohkit::phase::ParityReport>,
    marginal_roots: usize,
    branches: Vec<BranchRow>,
}

fn isotropic_stability(rho: f64, rho_c: Option<f64>) -> Stability {
    match rho_c {
        None => Stability::Stable,
        Some(rc) if rho < rc => Stability::Stable,
        Some(rc) if rho > rc => Stability::Unstable,
        Some(_) => Stability::Marginal,
    }
}

fn stability_name(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "stable",
        Stability::Unstable => "unstable",
        Stability::Marginal => "marginal",
    }
}

pub fn phase(p: &PhaseParams) -> RunResult {
    let rho = p.rho.values()?;
    if rho.iter().any(|r| !(*r > 0.0)) {
        return Err(CliError::config("every rho must be > 0"));
    }
    if !(p.kappa_max > 1.0 && p.kappa_max <= 700.0) {
        return Err(CliError::config("kappa_max must lie in (1, 700]"));
    }
    let law = p.law.build(p.d)?;
    let policy = NumericPolicy { kappa_max: p.kappa_max, ..NumericPolicy::DEFAULT };
    let curve = RatioCurve::with_points(&law, p.d, SCAN_LOG_POINTS, SCAN_LINEAR_POINTS, &policy)?;
    let pd = phase_diagram(&curve)?;
    let br = equilibrium_branches(&curve, &law, p.d, &rho)?;
    let isotropic_rate = |r: f64| match pd.rho_c {
        Some(rc) if r < rc => Some((p.d - 1) as f64 * law.tau(0.0) * (1.0 - r / rc)),
        Some(_) => None,
        None => Some((p.d - 1) as f64 * law.tau(0.0)),
    };
    let mut rows = Vec::with_capacity(rho.len());
    for (i, &r) in rho.iter().enumerate() {
        let mut roots = vec![0.0];
        roots.extend(&br.roots_per_rho[i]);
        let mut stability = vec![isotropic_stability(r, pd.rho_c)];
        stability.extend(&br.stability[i]);
        let mut lambda = vec![isotropic_rate(r)];
        lambda.extend(&br.lambda[i]);
        let mut lambda_kappa = vec![(p.d == 3).then_some(2.0)];
        lambda_kappa.extend(&br.lambda_kappa[i]);
        rows.push(BranchRow { rho: r, roots, stability, lambda, lambda_kappa });
    }
    let k = rows.iter().map(|r| r.roots.len()).max().unwrap_or(1);
    let mut header = vec!["rho".to_string()];
    header.extend((1..=k).map(|i| format!("root_{i}")));
    header.extend((1..=k).map(|i| format!("stability_{i}")));
    let mut t = Table::new(&header);
    for r in &rows {
        let mut row: Vec<Cell> = vec![r.rho.into()];
        row.extend((0..k).map(|i| r.roots.get(i).copied().into()));
        row.extend((0..k).map(|i| r.stability.get(i).map_or(Cell::Empty, |s| stability_name(*s).into())));
        t.push(row);
    }
    let marginal = br.marginal_count + rows.iter().filter(|r| r.stability[0] == Stability::Marginal).count();
    let report = PhaseReport {
        schema: SCHEMA,
        kind: "phase_report",
        law: p.law.clone(),
        d: p.d,
        kappa_max: p.kappa_max,
        rho_c: pd.rho_c,
        rho_star: pd.rho_star,
        kappa_star: pd.kappa_star,
        parity: pd.parity,
        marginal_roots: marginal,
        branches: rows,
    };
    let mut out = Outputs::default();
    out.csv("phase.csv", &t);
    out.json("report.json", &report);
    let mut w = Warnings::default();
    w.count("marginal_roots", marginal as u64);
    w.flag("isotropic decay rate uses tau(0), the diffusion rate at |j| = 0");
    w.flag("root_1 is the isotropic state kappa = 0; its Lambda_kappa is the S^2 gap 2 in d = 3");
    Ok((out, w))
}

pub fn coefficients(p: &CoefficientParams) -> RunResult {
    let kappas = p.kappa.values()?;
    if kappas.iter().any(|k| !(*k >= 0.0)) {
        return Err(CliError::config("every kappa must be >= 0"));
    }
    if p.d != 2 && p.d != 3 {
        return Err(CliError::config("d must be 2 or 3"));
    }
    let mut out = Outputs::default();
    match p.table {
        CoefficientTable::Vmf => {
            let rows: Vec<(f64, f64, f64)> = kappas
                .iter()
                .map(|&k| Ok((k, vmf_normalization(k, p.d)?, order_parameter_c1(k, p.d)?)))
                .collect::<Result<_, sohkit::Error>>()?;
            let mut t = Table::new(&["kappa", "Z", "c1"]);
            for (k, z, c) in rows {
                t.push(vec![k.into(), z.into(), c.into()]);
            }
            out.csv("coefficients.csv", &t);
        }
        CoefficientTable::Soh | CoefficientTable::Sohb => {
            if kappas.contains(&0.0) {
                return Err(CliError::config("coefficient extraction needs kappa > 0"));
            }
            let body = p.table == CoefficientTable::Sohb;
            if body && p.d != 3 {
                return Err(CliError::config("SOHB coefficients need d = 3"));
            }
            let res = ExtractionResolution::default();
            let policy = NumericPolicy::DEFAULT;
            let rows: Vec<sohkit::gci::SohCoefficients> = kappas
                .par_iter()
                .map(|&k| {
                    if body {
                        extract_sohb_coefficients_with(k, res, &policy)
                    } else {
                        extract_soh_coefficients_with(k, p.d, res, &policy)
                    }
                })
                .collect::<Result<_, _>>()?;
            let mut t = if body {
                Table::new(&["kappa", "c1", "c2", "c3", "c4", "fit_residual", "gci_weak_residual"])
            } else {
                Table::new(&["kappa", "c1", "c2", "fit_residual", "gci_weak_residual"])
            };
            for c in rows {
                let mut row = vec![c.kappa.into(), c.c1.into(), c.c2.into()];
                if body {
                    row.push(c.c3.into());
                    row.push(c.c4.into());
                }
                row.push(c.provenance.fit_residual.into());
                row.push(c.provenance.gci_weak_residual.into());
                t.push(row);
            }
            out.csv("coefficients.csv", &t);
        }
    }
    Ok((out, Warnings::default()))
}
