//! Exact sine-law asymptotics of the orthonormal polynomials.
//!
//! On the elliptic bands `sqrt(a_{nN+i-1}) p_{nN+i}(x)` oscillates like
//! `A(x) sin(sum_j theta_j(x) + eta(x))` with phases `theta_j = arg gamma_j`
//! read off the diagonalization chain and the amplitude
//! `A = sqrt(2 |X21| / (pi nu' sqrt(-h)))` given by the limit matrix and the
//! density. The offset `eta` exists but has no constructive formula, so it
//! is fitted on early indices and validated out of sample.

use crate::diag::DiagChain;
use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::model::CoefficientModel;
use crate::transfer::{eval_polynomials, n_step};

/// Phases `theta_j = arg gamma_j` in `(0, pi)` for `j > m_index`; indices up
/// to `m_index` carry trivial factors `t_j = 1` and contribute zero phase.
#[derive(Debug, Clone)]
pub struct PhaseSequence {
    /// Last index with trivial phase (the chain start).
    pub m_index: usize,
    /// `thetas[k]` is `theta_{m_index + 1 + k}`.
    pub thetas: Vec<f64>,
}

impl PhaseSequence {
    /// Cumulative phase `sum_{j = m_index+1}^{n} theta_j` (zero for
    /// `n <= m_index`).
    pub fn cumulative(&self, n: usize) -> f64 {
        if n <= self.m_index {
            return 0.0;
        }
        self.thetas[..n - self.m_index].iter().sum()
    }

    pub fn last_index(&self) -> usize {
        self.m_index + self.thetas.len()
    }
}

pub fn phase_sequence(chain: &DiagChain) -> PhaseSequence {
    let m_index = chain.start;
    let thetas = (m_index + 1..=chain.last())
        .map(|n| {
            let g = chain.gamma(n);
            debug_assert!(g.im > 0.0, "chain gammas live in the upper half plane");
            g.arg()
        })
        .collect();
    PhaseSequence { m_index, thetas }
}

/// Max over the late fraction of the chain of
/// `|theta_j - arccos(tr X / 2)|`, the phase-limit gap.
pub fn phase_limit_gap(phases: &PhaseSequence, limit: &Mat2, tail_fraction: f64) -> f64 {
    let target = (limit.trace() / 2.0).acos();
    let len = phases.thetas.len();
    let start = ((len as f64) * (1.0 - tail_fraction)).floor() as usize;
    phases.thetas[start.min(len.saturating_sub(1))..]
        .iter()
        .fold(0.0f64, |m, th| m.max((th - target).abs()))
}

const ZERO_ENTRY_FLOOR: f64 = 1e-12;

/// Amplitude `A = sqrt(2 |X21| / (pi nu' sqrt(-h)))` of the sine law.
pub fn amplitude(nu_prime: f64, h: f64, limit_entry_21: f64) -> Result<f64> {
    assert!(nu_prime > 0.0 && h < 0.0, "amplitude needs a band point");
    if limit_entry_21.abs() < ZERO_ENTRY_FLOOR {
        return Err(Error::ZeroEntry {
            value: limit_entry_21,
            floor: ZERO_ENTRY_FLOOR,
        });
    }
    Ok((2.0 * limit_entry_21.abs() / (std::f64::consts::PI * nu_prime * (-h).sqrt())).sqrt())
}

/// Takes the block `X_{nN+i}(x)` at the largest probed index as the limit
/// matrix, guarding against staleness by requiring the trailing `window`
/// blocks to vary by less than `tol`.
pub fn estimate_limit_matrix(
    model: &CoefficientModel,
    block: usize,
    residue: usize,
    x: f64,
    n_probe: usize,
    window: usize,
    tol: f64,
) -> Result<Mat2> {
    assert!(n_probe > window && window >= 2);
    let mut prev: Option<Mat2> = None;
    let mut variation = 0.0f64;
    let mut last = Mat2::IDENTITY;
    for n in n_probe + 1 - window..=n_probe {
        let xn = n_step(model, n * block + residue, block, x);
        if let Some(p) = prev {
            variation = variation.max((xn - p).norm());
        }
        prev = Some(xn);
        last = xn;
    }
    if variation > tol {
        return Err(Error::StaleLimit {
            index: n_probe,
            variation,
            tol,
        });
    }
    Ok(last)
}

/// Result of the sine-law fit at one grid point.
#[derive(Debug, Clone)]
pub struct SineLawFit {
    pub x: f64,
    pub amplitude: f64,
    /// Phase offset in `[0, 2 pi)`.
    pub eta: f64,
    /// First fitted index and the end of the fit range (exclusive); the
    /// residuals cover `fit_end..=n_hi`.
    pub fit_start: usize,
    pub fit_end: usize,
    /// Out-of-sample residuals `sqrt(a) p - A sin(sum theta + eta)` for
    /// `n = fit_end..=n_hi`.
    pub residuals: Vec<f64>,
    pub tail_rms: f64,
    /// Whether the tail RMS is below `0.05 A`.
    pub ok: bool,
}

/// Tail residual threshold relative to the amplitude.
pub const TAIL_RMS_FACTOR: f64 = 0.05;

/// Fits the phase offset `eta` by least squares of
/// `sqrt(a_{nN+i-1}) p_{nN+i}(x)` against `A sin(S_n + eta)` over the first
/// quarter of `n_range`, then scores the remainder out of sample.
pub fn fit_sine_law(
    model: &CoefficientModel,
    block: usize,
    residue: usize,
    x: f64,
    chain: &DiagChain,
    nu_prime: f64,
    h: f64,
    limit: &Mat2,
    n_range: (usize, usize),
) -> Result<SineLawFit> {
    let (n_lo, n_hi) = n_range;
    assert!(n_lo > chain.start, "fit range must start after the chain start");
    assert!(n_hi <= chain.last(), "fit range exceeds the chain");
    assert!(n_hi > n_lo + 8, "fit range too short");
    let phases = phase_sequence(chain);
    let a = amplitude(nu_prime, h, limit.m21)?;

    // Observations y_n = sqrt(a_{nN+i-1}) p_{nN+i}; bounded on the bands.
    let pvals = eval_polynomials(model, x, n_hi * block + residue);
    let y: Vec<f64> = (n_lo..=n_hi)
        .map(|n| {
            let idx = n * block + residue;
            let p = pvals[idx];
            p.mantissa * (p.log_scale + 0.5 * model.a(idx - 1).ln()).exp()
        })
        .collect();
    let cum: Vec<f64> = {
        let mut acc = phases.cumulative(n_lo);
        let mut v = Vec::with_capacity(n_hi - n_lo + 1);
        v.push(acc);
        for n in n_lo + 1..=n_hi {
            acc += phases.thetas[n - phases.m_index - 1];
            v.push(acc);
        }
        v
    };

    let fit_len = ((n_hi - n_lo + 1) / 4).max(8);
    let fit_end = n_lo + fit_len;
    // Normal equations for y ~ c1 (A sin S) + c2 (A cos S).
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..fit_len {
        let (sn, cn) = cum[k].sin_cos();
        let (d1, d2) = (a * sn, a * cn);
        s11 += d1 * d1;
        s12 += d1 * d2;
        s22 += d2 * d2;
        r1 += d1 * y[k];
        r2 += d2 * y[k];
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() <= 1e-12 * (s11 + s22).powi(2).max(1e-300) {
        return Err(Error::FitDegenerate { det });
    }
    let c1 = (s22 * r1 - s12 * r2) / det;
    let c2 = (s11 * r2 - s12 * r1) / det;
    let eta = c2.atan2(c1).rem_euclid(2.0 * std::f64::consts::PI);

    let mut residuals = Vec::with_capacity(n_hi + 1 - fit_end);
    let mut sq = 0.0;
    for n in fit_end..=n_hi {
        let k = n - n_lo;
        let r = y[k] - a * (cum[k] + eta).sin();
        residuals.push(r);
        sq += r * r;
    }
    let tail_rms = (sq / residuals.len() as f64).sqrt();
    Ok(SineLawFit {
        x,
        amplitude: a,
        eta,
        fit_start: n_lo,
        fit_end,
        residuals,
        tail_rms,
        ok: tail_rms < TAIL_RMS_FACTOR * a,
    })
}
