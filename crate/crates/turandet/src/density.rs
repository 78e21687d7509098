//! Spectral density on the elliptic bands.
//!
//! The limit `h(x)` of the block discriminants is negative exactly on the
//! bands, and together with the Turán limit `g` it yields the density
//! `nu'(x) = sqrt(-h(x)) / (2 pi g(x))`. An independent cross-check comes
//! from truncating the coefficients at `L` and continuing them `N`-
//! periodically: the resulting operator is exactly solvable with density
//! `mu'_L(x) = sqrt(-discr X^L_{L+N}(x)) / (2 pi |S^L_{L+N}(x)|)`, and
//! `mu'_L -> nu'` as `L` grows along `L = kN + i`.

use crate::error::{Error, Result};
use crate::model::{CoefficientModel, TruncatedModel};
use crate::transfer::{eval_polynomials, n_step};
use crate::turan::{estimate_g, ScanOptions};

/// Trailing-window limit of `discr X_{nN+i}(x)`.
#[derive(Debug, Clone, Copy)]
pub struct HEstimate {
    pub h: f64,
    pub converged: bool,
    /// Whether the point looks like it belongs to the elliptic set.
    pub in_lambda: bool,
    pub n_stop: usize,
}

/// Scans block discriminants until a trailing window of `window` values has
/// spread below `tol * max(1, |h|)`. Non-elliptic points simply report
/// `h >= 0` with `in_lambda = false`.
pub fn estimate_h(
    model: &CoefficientModel,
    block: usize,
    residue: usize,
    x: f64,
    tol: f64,
    n_max: usize,
    window: usize,
) -> HEstimate {
    let n_first = if residue == 0 { 1 } else { 0 };
    let mut ring: Vec<f64> = Vec::with_capacity(window);
    let mut h = f64::NAN;
    let mut converged = false;
    let mut n_stop = n_first;
    for n in n_first..=n_max {
        let d = n_step(model, (n * block + residue).max(1), block, x).discr();
        h = d;
        n_stop = n;
        if ring.len() == window {
            ring.remove(0);
        }
        ring.push(d);
        if ring.len() == window {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &v in &ring {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo < tol * h.abs().max(1.0) {
                converged = true;
                break;
            }
        }
    }
    HEstimate {
        h,
        converged,
        in_lambda: converged && h < 0.0,
        n_stop,
    }
}

/// Density of the exactly solvable comparison operator obtained by freezing
/// the coefficients `N`-periodically past index `L`: evaluates the truncated
/// polynomials through `L + 2N`, forms `S^L_{L+N}`, and returns
/// `sqrt(-discr X^L_{L+N}) / (2 pi |S^L_{L+N}|)`.
pub fn periodized_density(
    model: &CoefficientModel,
    block: usize,
    truncation: usize,
    x: f64,
) -> Result<f64> {
    let tm = TruncatedModel::new(model.clone(), truncation, block).to_model();
    let head = n_step(&tm, truncation + block, block, x);
    let d = head.discr();
    if d >= 0.0 {
        return Err(Error::NonElliptic {
            index: truncation + block,
            discr: d,
            floor: 0.0,
        });
    }
    let p = eval_polynomials(&tm, x, truncation + 2 * block);
    let n = truncation + block;
    let det = p[n]
        .mul(p[n + block - 1])
        .sub(p[n - 1].mul(p[n + block]));
    let s = det.scale_f64(tm.a(n + block - 1));
    let g = s.value().abs();
    if !g.is_finite() || g == 0.0 {
        return Err(Error::ScalingMismatch { gap: s.log_scale });
    }
    Ok((-d).sqrt() / (2.0 * std::f64::consts::PI * g))
}

/// Per-point density data.
#[derive(Debug, Clone)]
pub struct DensityPoint {
    pub x: f64,
    pub g: f64,
    pub h: f64,
    pub nu_prime: f64,
    pub converged: bool,
    pub in_lambda: bool,
    /// Periodized densities along the truncation ladder (`NaN` where the
    /// evaluation failed).
    pub mu_ladder: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct DensityProfile {
    pub block: usize,
    pub residue: usize,
    pub grid: Vec<f64>,
    /// Truncation indices `L = kN + i` of the ladder columns.
    pub ladder: Vec<usize>,
    pub points: Vec<DensityPoint>,
}

impl DensityProfile {
    pub fn failed_fraction(&self) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        let failed = self.points.iter().filter(|p| !p.converged).count();
        failed as f64 / self.points.len() as f64
    }
}

/// Geometric ladder `L = kN + i` with `k = 2^lo_pow .. 2^hi_pow`.
pub fn geometric_ladder(block: usize, residue: usize, lo_pow: u32, hi_pow: u32) -> Vec<usize> {
    (lo_pow..=hi_pow)
        .map(|p| (1usize << p) * block + residue)
        .collect()
}

/// Per-point `nu' = sqrt(-h) / (2 pi g)` over a grid, plus the periodized
/// ladder columns. Per-point failures are recorded, not fatal.
pub fn density_profile(
    model: &CoefficientModel,
    block: usize,
    residue: usize,
    grid: &[f64],
    opts: &ScanOptions,
    ladder: &[usize],
) -> DensityProfile {
    let points = grid
        .iter()
        .map(|&x| density_point(model, block, residue, x, opts, ladder))
        .collect();
    DensityProfile {
        block,
        residue,
        grid: grid.to_vec(),
        ladder: ladder.to_vec(),
        points,
    }
}

pub fn density_point(
    model: &CoefficientModel,
    block: usize,
    residue: usize,
    x: f64,
    opts: &ScanOptions,
    ladder: &[usize],
) -> DensityPoint {
    let hest = estimate_h(model, block, residue, x, opts.tol, opts.k_max, opts.window);
    let mu_ladder: Vec<f64> = ladder
        .iter()
        .map(|&l| periodized_density(model, block, l, x).unwrap_or(f64::NAN))
        .collect();
    if !hest.in_lambda {
        return DensityPoint {
            x,
            g: f64::NAN,
            h: hest.h,
            nu_prime: f64::NAN,
            converged: false,
            in_lambda: false,
            mu_ladder,
            error: Some(format!("outside elliptic set: h = {:.6e}", hest.h)),
        };
    }
    let alpha = (1.0, (x - model.b(0)) / model.a(0));
    match estimate_g(model, block, residue, x, alpha, opts) {
        Ok(gest) => {
            let nu = (-hest.h).sqrt() / (2.0 * std::f64::consts::PI * gest.g);
            DensityPoint {
                x,
                g: gest.g,
                h: hest.h,
                nu_prime: nu,
                converged: hest.converged && gest.converged,
                in_lambda: true,
                mu_ladder,
                error: if gest.converged {
                    None
                } else {
                    Some(format!(
                        "Turan trace not settled: spread {:.3e}",
                        gest.final_spread
                    ))
                },
            }
        }
        Err(e) => DensityPoint {
            x,
            g: f64::NAN,
            h: hest.h,
            nu_prime: f64::NAN,
            converged: false,
            in_lambda: true,
            mu_ladder,
            error: Some(e.to_string()),
        },
    }
}

/// Gram matrix of the polynomials against a computed density.
#[derive(Debug, Clone)]
pub struct GramReport {
    pub gram: Vec<Vec<f64>>,
    /// `max |G_jk - delta_jk|`.
    pub max_identity_dev: f64,
    /// `G_00`, the measured total mass over the grid interval.
    pub mass: f64,
    /// Empirical convergence order of the quadrature, probed on the interior
    /// half of the grid where the integrand is smooth; the band-edge square
    /// root caps the observable full-range order regardless of the rule.
    pub order_estimate: f64,
    /// Richardson error estimate `|I_h - I_2h| / 15` maximized over entries.
    pub richardson_error: f64,
}

fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    debug_assert!(n >= 2 && n % 2 == 0);
    let mut odd = 0.0;
    let mut even = 0.0;
    for (k, v) in values.iter().enumerate().skip(1).take(n - 1) {
        if k % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (values[0] + values[n] + 4.0 * odd + 2.0 * even)
}

/// Composite-Simpson Gram matrix `G_jk = int p_j p_k nu' dx` over the
/// profile grid. Fails when the grid is unusable or the Richardson error
/// estimate exceeds `tol`.
pub fn orthonormality_quadrature(
    profile: &DensityProfile,
    model: &CoefficientModel,
    j_max: usize,
    tol: f64,
) -> Result<GramReport> {
    let grid = &profile.grid;
    let count = grid.len();
    if count < 5 || (count - 1) % 2 != 0 {
        return Err(Error::GridTooCoarse {
            reason: format!("Simpson needs an odd grid of at least 5 points, got {count}"),
        });
    }
    let h = grid[1] - grid[0];
    for w in grid.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs() {
            return Err(Error::GridTooCoarse {
                reason: "grid is not uniform".into(),
            });
        }
    }
    let mut weights: Vec<f64> = Vec::with_capacity(count);
    let mut nu: Vec<f64> = Vec::with_capacity(count);
    for p in &profile.points {
        if !p.in_lambda || !p.nu_prime.is_finite() {
            return Err(Error::GridTooCoarse {
                reason: format!("density missing at grid point x = {}", p.x),
            });
        }
        nu.push(p.nu_prime);
    }
    for k in 0..count {
        let w = if k == 0 || k == count - 1 {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        weights.push(w * h / 3.0);
    }

    // Polynomial values per grid point.
    let pvals: Vec<Vec<f64>> = grid
        .iter()
        .map(|&x| {
            eval_polynomials(model, x, j_max)
                .iter()
                .map(|s| s.value())
                .collect()
        })
        .collect();

    let dim = j_max + 1;
    let mut gram = vec![vec![0.0; dim]; dim];
    let mut richardson = 0.0f64;
    for j in 0..dim {
        for k in j..dim {
            let f: Vec<f64> = (0..count).map(|g| pvals[g][j] * pvals[g][k] * nu[g]).collect();
            let fine: f64 = f.iter().zip(&weights).map(|(v, w)| v * w).sum();
            gram[j][k] = fine;
            gram[k][j] = fine;
            if (count - 1) % 4 == 0 {
                let coarse: Vec<f64> = f.iter().step_by(2).copied().collect();
                let est = (fine - simpson(&coarse, 2.0 * h)).abs() / 15.0;
                richardson = richardson.max(est);
            }
        }
    }
    if richardson > tol {
        return Err(Error::GridTooCoarse {
            reason: format!("Richardson error estimate {richardson:e} above tolerance {tol:e}"),
        });
    }

    // Order probe on the interior half, trimmed so strides 1, 2, 4 share
    // their endpoints.
    let order_estimate = if count >= 17 {
        let q = count / 4;
        let mut lo = q;
        let mut len = count - 2 * q;
        len -= (len - 1) % 4;
        lo = lo.min(count - len);
        let f: Vec<f64> = (lo..lo + len).map(|g| nu[g]).collect();
        let i1 = simpson(&f, h);
        let f2: Vec<f64> = f.iter().step_by(2).copied().collect();
        let i2 = simpson(&f2, 2.0 * h);
        let f4: Vec<f64> = f.iter().step_by(4).copied().collect();
        let i4 = simpson(&f4, 4.0 * h);
        let denom = (i2 - i1).abs();
        if denom < 1e-18 {
            f64::INFINITY
        } else {
            ((i4 - i2).abs() / denom).log2()
        }
    } else {
        f64::NAN
    };

    let mut max_dev = 0.0f64;
    for (j, row) in gram.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            let target = if j == k { 1.0 } else { 0.0 };
            max_dev = max_dev.max((v - target).abs());
        }
    }
    Ok(GramReport {
        mass: gram[0][0],
        gram,
        max_identity_dev: max_dev,
        order_estimate,
        richardson_error: richardson,
    })
}
