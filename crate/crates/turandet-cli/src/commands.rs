//! Pipeline subcommands.
//!
//! Each command reads one [`RunConfig`], fans the grid out to the rayon
//! pool, assembles results in grid order and writes CSV/JSON artifacts.
//! Per-point failures become status strings; a command fails as a whole
//! (exit 3) only when more than half of the grid is unusable.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde_json::json;

use turandet::asym::{
    estimate_limit_matrix, fit_sine_law, phase_limit_gap, phase_sequence,
};
use turandet::density::{
    density_point, estimate_h, geometric_ladder, DensityPoint, DensityProfile,
};
use turandet::diag::{build_chain, reconstruct_check, ChainParams};
use turandet::families::make_family;
use turandet::model::CoefficientModel;
use turandet::stolz::{carleman_check, stolz_diagnose_scalar, StolzReport, StolzVerdict};
use turandet::turan::{estimate_g, ScanOptions};

use crate::config::RunConfig;
use crate::output::{fmt_f64, ArtifactWriter};

#[derive(Debug)]
pub enum CmdError {
    Config(String),
    Majority { failed: usize, total: usize },
    Internal(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Config(_) => 2,
            CmdError::Majority { .. } => 3,
            CmdError::Internal(_) => 4,
        }
    }

    /// Structured one-line report for stderr.
    pub fn report(&self) -> String {
        let (kind, detail) = match self {
            CmdError::Config(m) => ("config", json!(m)),
            CmdError::Majority { failed, total } => (
                "majority-failure",
                json!({ "failed": failed, "total": total }),
            ),
            CmdError::Internal(m) => ("internal", json!(m)),
        };
        serde_json::json!({ "error": kind, "detail": detail }).to_string()
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Config(m) => write!(f, "config error: {m}"),
            CmdError::Majority { failed, total } => {
                write!(f, "{failed} of {total} grid points failed")
            }
            CmdError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Internal(e.to_string())
    }
}

fn model_of(cfg: &RunConfig) -> Result<CoefficientModel, CmdError> {
    make_family(&cfg.family).map_err(|e| CmdError::Config(e.to_string()))
}

fn scan_options(cfg: &RunConfig) -> ScanOptions {
    ScanOptions {
        tol: cfg.tol,
        window: cfg.window,
        k_max: cfg.n_max,
        delta_min: cfg.delta_min,
    }
}

fn chain_params(cfg: &RunConfig) -> ChainParams {
    ChainParams {
        depth: cfg.depth,
        delta_min: cfg.delta_min,
        delta_guard: cfg.delta_guard,
        m_hint: 1,
        lookahead: 64,
    }
}

fn majority_gate(failed: usize, total: usize) -> Result<(), CmdError> {
    if 2 * failed > total {
        Err(CmdError::Majority { failed, total })
    } else {
        Ok(())
    }
}

/// `density`: per-point `g`, `h`, `nu'` plus the periodized truncation
/// ladder; artifacts `density.csv` / `density.json`.
pub fn cmd_density(cfg: &RunConfig, out_dir: &Path) -> Result<DensityProfile, CmdError> {
    let model = model_of(cfg)?;
    let grid = cfg.grid();
    let opts = scan_options(cfg);
    let ladder = geometric_ladder(cfg.block, cfg.residue, cfg.ladder_lo_pow, cfg.ladder_hi_pow);
    let points: Vec<DensityPoint> = grid
        .par_iter()
        .map(|&x| density_point(&model, cfg.block, cfg.residue, x, &opts, &ladder))
        .collect();
    let profile = DensityProfile {
        block: cfg.block,
        residue: cfg.residue,
        grid: grid.clone(),
        ladder: ladder.clone(),
        points,
    };

    let mut w = ArtifactWriter::new(out_dir, cfg, "density")?;
    let mut header: Vec<String> = ["x", "g", "h", "nu_prime", "converged"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(ladder.iter().map(|l| format!("mu_L_{l}")));
    let rows: Vec<Vec<String>> = profile
        .points
        .iter()
        .map(|p| {
            let mut row = vec![
                fmt_f64(p.x),
                fmt_f64(p.g),
                fmt_f64(p.h),
                fmt_f64(p.nu_prime),
                (p.converged as u8).to_string(),
            ];
            row.extend(p.mu_ladder.iter().map(|&v| fmt_f64(v)));
            row
        })
        .collect();
    w.write_csv("density.csv", &header, &rows)?;
    let results: Vec<serde_json::Value> = profile
        .points
        .iter()
        .map(|p| {
            json!({
                "x": p.x,
                "g": p.g,
                "h": p.h,
                "nu_prime": p.nu_prime,
                "converged": p.converged,
                "in_lambda": p.in_lambda,
                "mu_ladder": p.mu_ladder,
                "status": p.error,
            })
        })
        .collect();
    w.write_json("density.json", json!({ "ladder": ladder, "points": results }))?;

    let failed = (profile.failed_fraction() * profile.points.len() as f64).round() as usize;
    majority_gate(failed, profile.points.len())?;
    Ok(profile)
}

/// One sine-law row; errors collapse to a status string.
struct SineRow {
    x: f64,
    amplitude: f64,
    eta: f64,
    tail_rms: f64,
    theta_gap: f64,
    ok: bool,
    status: String,
}

fn sine_point(model: &CoefficientModel, cfg: &RunConfig, x: f64) -> SineRow {
    let fail = |status: String| SineRow {
        x,
        amplitude: f64::NAN,
        eta: f64::NAN,
        tail_rms: f64::NAN,
        theta_gap: f64::NAN,
        ok: false,
        status,
    };
    let opts = scan_options(cfg);
    let chain = match build_chain(model, cfg.block, cfg.residue, x, cfg.n_max, &chain_params(cfg)) {
        Ok(c) => c,
        Err(e) => return fail(e.to_string()),
    };
    let hest = estimate_h(model, cfg.block, cfg.residue, x, cfg.tol, cfg.n_max, cfg.window);
    if !hest.in_lambda {
        return fail(format!("outside elliptic set: h = {:.6e}", hest.h));
    }
    let alpha = (1.0, (x - model.b(0)) / model.a(0));
    let gest = match estimate_g(model, cfg.block, cfg.residue, x, alpha, &opts) {
        Ok(g) => g,
        Err(e) => return fail(e.to_string()),
    };
    let nu = (-hest.h).sqrt() / (2.0 * std::f64::consts::PI * gest.g);
    let probe_window = cfg.window.min(chain.last() - chain.start).max(2);
    let limit = match estimate_limit_matrix(
        model,
        cfg.block,
        cfg.residue,
        x,
        chain.last(),
        probe_window,
        cfg.limit_tol,
    ) {
        Ok(l) => l,
        Err(e) => return fail(e.to_string()),
    };
    let n_lo = (cfg.n_max / 10).max(chain.start + 1);
    if n_lo + 8 >= chain.last() {
        return fail("chain too short for a fit".into());
    }
    let fit = match fit_sine_law(
        model,
        cfg.block,
        cfg.residue,
        x,
        &chain,
        nu,
        hest.h,
        &limit,
        (n_lo, chain.last()),
    ) {
        Ok(f) => f,
        Err(e) => return fail(e.to_string()),
    };
    let gap = phase_limit_gap(&phase_sequence(&chain), &limit, 0.1);
    SineRow {
        x,
        amplitude: fit.amplitude,
        eta: fit.eta,
        tail_rms: fit.tail_rms,
        theta_gap: gap,
        ok: fit.ok,
        status: if fit.ok { "ok".into() } else { "tail-rms-above-threshold".into() },
    }
}

/// `asymptotics`: per-point amplitude, fitted phase offset, tail residual
/// and phase-limit gap; artifacts `sinefit.csv` / `sinefit.json`.
pub fn cmd_asymptotics(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<(f64, bool)>, CmdError> {
    let model = model_of(cfg)?;
    let grid = cfg.grid();
    let rows: Vec<SineRow> = grid
        .par_iter()
        .map(|&x| sine_point(&model, cfg, x))
        .collect();

    let mut w = ArtifactWriter::new(out_dir, cfg, "asymptotics")?;
    let header: Vec<String> = ["x", "amplitude", "eta", "tail_rms", "theta_gap", "ok", "status"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.x),
                fmt_f64(r.amplitude),
                fmt_f64(r.eta),
                fmt_f64(r.tail_rms),
                fmt_f64(r.theta_gap),
                (r.ok as u8).to_string(),
                r.status.clone(),
            ]
        })
        .collect();
    w.write_csv("sinefit.csv", &header, &csv_rows)?;
    let results: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            json!({
                "x": r.x,
                "amplitude": r.amplitude,
                "eta": r.eta,
                "tail_rms": r.tail_rms,
                "theta_gap": r.theta_gap,
                "ok": r.ok,
                "status": r.status,
            })
        })
        .collect();
    w.write_json("sinefit.json", json!(results))?;

    let failed = rows.iter().filter(|r| !r.ok).count();
    majority_gate(failed, rows.len())?;
    Ok(rows.iter().map(|r| (r.x, r.ok)).collect())
}

fn verdict_str(v: StolzVerdict) -> &'static str {
    match v {
        StolzVerdict::Consistent => "consistent",
        StolzVerdict::Inconsistent => "inconsistent",
        StolzVerdict::Inconclusive => "inconclusive",
    }
}

fn stolz_json(name: &str, rep: &StolzReport) -> serde_json::Value {
    json!({
        "sequence": name,
        "r": rep.r,
        "s": rep.s,
        "verdict": verdict_str(rep.verdict),
        "partial_sums": rep.partial_sums,
        "tail_slopes": rep.tail_slopes,
        "fit_quality": rep.fit_quality,
    })
}

/// Outcome of `diagnose`, also returned for programmatic use.
pub struct DiagnoseReport {
    pub overall: StolzVerdict,
    pub sequence_verdicts: Vec<(String, StolzVerdict)>,
    pub carleman_divergent: bool,
    pub worst_reconstruction: f64,
}

/// `diagnose`: slow-oscillation scores of the block entries through the
/// scalar reductions `a_{n-1}/a_n`, `b_n/a_n`, `1/a_n`, the Carleman
/// divergence flag, and the worst chain-reconstruction deviation over the
/// grid; artifacts `stolz.json`, `carleman.json`, `reconstruction.json`.
pub fn cmd_diagnose(cfg: &RunConfig, out_dir: &Path) -> Result<DiagnoseReport, CmdError> {
    let model = model_of(cfg)?;
    let n_samples = cfg.n_max.max(64);
    let mut seqs: Vec<(String, Vec<f64>)> = vec![
        ("a_ratio".into(), Vec::with_capacity(n_samples)),
        ("b_over_a".into(), Vec::with_capacity(n_samples)),
        ("inv_a".into(), Vec::with_capacity(n_samples)),
    ];
    for n in 1..=n_samples {
        let idx = n * cfg.block + cfg.residue;
        let a = model.a(idx);
        seqs[0].1.push(model.a(idx - 1) / a);
        seqs[1].1.push(model.b(idx) / a);
        seqs[2].1.push(1.0 / a);
    }
    let mut reports = Vec::new();
    for (name, values) in &seqs {
        let rep = stolz_diagnose_scalar(values, cfg.depth, 0)
            .map_err(|e| CmdError::Config(e.to_string()))?;
        reports.push((name.clone(), rep));
    }
    let overall = reports
        .iter()
        .map(|(_, r)| r.verdict)
        .fold(StolzVerdict::Consistent, |acc, v| match (acc, v) {
            (StolzVerdict::Inconsistent, _) | (_, StolzVerdict::Inconsistent) => {
                StolzVerdict::Inconsistent
            }
            (StolzVerdict::Inconclusive, _) | (_, StolzVerdict::Inconclusive) => {
                StolzVerdict::Inconclusive
            }
            _ => StolzVerdict::Consistent,
        });

    let carleman = carleman_check(&model, n_samples * cfg.block + cfg.residue);

    // Reconstruction sweep over the grid.
    let grid = cfg.grid();
    let n_last = cfg.n_max.min(4_000).max(cfg.depth + 32);
    let recon: Vec<(f64, Result<f64, String>)> = grid
        .par_iter()
        .map(|&x| {
            let r = build_chain(&model, cfg.block, cfg.residue, x, n_last, &chain_params(cfg))
                .map(|chain| {
                    reconstruct_check(&chain, &model, chain.start + 1, chain.last()).relative()
                })
                .map_err(|e| e.to_string());
            (x, r)
        })
        .collect();
    let worst = recon
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok().copied())
        .fold(0.0f64, f64::max);
    let failed = recon.iter().filter(|(_, r)| r.is_err()).count();

    let mut w = ArtifactWriter::new(out_dir, cfg, "diagnose")?;
    w.write_json(
        "stolz.json",
        json!({
            "overall": verdict_str(overall),
            "sequences": reports
                .iter()
                .map(|(n, r)| stolz_json(n, r))
                .collect::<Vec<_>>(),
        }),
    )?;
    w.write_json(
        "carleman.json",
        json!({
            "partial_sum": carleman.partial_sum,
            "tail_slope": carleman.tail_slope,
            "divergent": carleman.divergent,
            "terms": n_samples * cfg.block + cfg.residue + 1,
        }),
    )?;
    w.write_json(
        "reconstruction.json",
        json!({
            "worst_relative_deviation": worst,
            "points": recon
                .iter()
                .map(|(x, r)| match r {
                    Ok(v) => json!({ "x": x, "relative_deviation": v }),
                    Err(e) => json!({ "x": x, "status": e }),
                })
                .collect::<Vec<_>>(),
        }),
    )?;

    majority_gate(failed, recon.len())?;
    Ok(DiagnoseReport {
        overall,
        sequence_verdicts: reports.iter().map(|(n, r)| (n.clone(), r.verdict)).collect(),
        carleman_divergent: carleman.divergent,
        worst_reconstruction: worst,
    })
}

/// `turan`: per-point Turán limit `g`; artifacts `turan.csv` / `turan.json`.
/// The JSON carries a per-point soft warning when the limits disagree
/// across residues (expected to coincide under the Carleman condition).
pub fn cmd_turan(cfg: &RunConfig, out_dir: &Path) -> Result<(), CmdError> {
    let model = model_of(cfg)?;
    let grid = cfg.grid();
    let opts = scan_options(cfg);
    let rows: Vec<(f64, Result<turandet::turan::GEstimate, String>, f64)> = grid
        .par_iter()
        .map(|&x| {
            let alpha = (1.0, (x - model.b(0)) / model.a(0));
            let spread = turandet::turan::g_by_residue(&model, cfg.block, x, &opts)
                .map(|gs| turandet::turan::residue_spread(&gs))
                .unwrap_or(f64::NAN);
            (
                x,
                estimate_g(&model, cfg.block, cfg.residue, x, alpha, &opts)
                    .map_err(|e| e.to_string()),
                spread,
            )
        })
        .collect();

    let mut w = ArtifactWriter::new(out_dir, cfg, "turan")?;
    let header: Vec<String> = ["x", "g", "converged", "k_stop", "final_spread", "status"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|(x, r, _)| match r {
            Ok(g) => vec![
                fmt_f64(*x),
                fmt_f64(g.g),
                (g.converged as u8).to_string(),
                g.k_stop.to_string(),
                fmt_f64(g.final_spread),
                "ok".into(),
            ],
            Err(e) => vec![
                fmt_f64(*x),
                "nan".into(),
                "0".into(),
                "0".into(),
                "nan".into(),
                e.clone(),
            ],
        })
        .collect();
    w.write_csv("turan.csv", &header, &csv_rows)?;
    let results: Vec<serde_json::Value> = rows
        .iter()
        .map(|(x, r, spread)| match r {
            Ok(g) => json!({
                "x": x, "g": g.g, "converged": g.converged,
                "k_stop": g.k_stop, "final_spread": g.final_spread,
                "cauchy_profile": g.trace.cauchy_profile,
                "residue_spread": spread,
                "residue_warning": *spread > 1e-2,
            }),
            Err(e) => json!({ "x": x, "status": e }),
        })
        .collect();
    w.write_json("turan.json", json!(results))?;

    let failed = rows
        .iter()
        .filter(|(_, r, _)| !matches!(r, Ok(g) if g.converged))
        .count();
    majority_gate(failed, rows.len())
}

/// `bounds`: measured two-sided eigenvector bounds over eight initial
/// angles; artifacts `bounds.csv` / `bounds.json`.
pub fn cmd_bounds(cfg: &RunConfig, out_dir: &Path) -> Result<(), CmdError> {
    let model = model_of(cfg)?;
    let grid = cfg.grid();
    let opts = scan_options(cfg);
    let angles: Vec<f64> = (0..8)
        .map(|j| j as f64 * std::f64::consts::PI / 8.0)
        .collect();
    let mut tasks = Vec::new();
    for &x in &grid {
        for &phi in &angles {
            tasks.push((x, phi));
        }
    }
    let rows: Vec<((f64, f64), Result<turandet::turan::BoundsReport, String>)> = tasks
        .par_iter()
        .map(|&(x, phi)| {
            let alpha = (phi.cos(), phi.sin());
            (
                (x, phi),
                turandet::turan::eigenvector_bounds(
                    &model, cfg.block, cfg.residue, x, alpha, &opts,
                )
                .map_err(|e| e.to_string()),
            )
        })
        .collect();

    let mut w = ArtifactWriter::new(out_dir, cfg, "bounds")?;
    let header: Vec<String> = ["x", "alpha_angle", "c_low", "c_high", "status"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|((x, phi), r)| match r {
            Ok(b) => vec![
                fmt_f64(*x),
                fmt_f64(*phi),
                fmt_f64(b.c_low),
                fmt_f64(b.c_high),
                "ok".into(),
            ],
            Err(e) => vec![fmt_f64(*x), fmt_f64(*phi), "nan".into(), "nan".into(), e.clone()],
        })
        .collect();
    w.write_csv("bounds.csv", &header, &csv_rows)?;
    let results: Vec<serde_json::Value> = rows
        .iter()
        .map(|((x, phi), r)| match r {
            Ok(b) => json!({ "x": x, "alpha_angle": phi, "c_low": b.c_low, "c_high": b.c_high }),
            Err(e) => json!({ "x": x, "alpha_angle": phi, "status": e }),
        })
        .collect();
    w.write_json("bounds.json", json!(results))?;

    let failed = rows.iter().filter(|(_, r)| r.is_err()).count();
    majority_gate(failed, rows.len())
}

