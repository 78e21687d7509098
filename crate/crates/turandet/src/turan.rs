//! Generalized `N`-shifted Turán determinants.
//!
//! For a generalized eigenvector `u` the quantity
//! `S_n = a_{n+N-1} (u_n u_{n+N-1} - u_{n-1} u_{n+N})` converges along
//! `n = kN + i` on the elliptic bands, and its limit `g` is the denominator
//! of the density formula `nu' = sqrt(-h) / (2 pi g)`.

use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::model::CoefficientModel;
use crate::transfer::n_step;

/// Window of eigenvector values `u_{n-1}, u_n, u_{n+N-1}, u_{n+N}` on a
/// shared scale: true values are `exp(log_scale)` times the stored ones.
#[derive(Debug, Clone, Copy)]
pub struct EigenWindow {
    pub n: usize,
    pub u_before: f64,
    pub u_start: f64,
    pub u_end_prev: f64,
    pub u_end: f64,
    pub log_scale: f64,
}

/// Streams consecutive windows of a generalized eigenvector. The buffer
/// holds `N + 2` consecutive values under one common scale so window entries
/// can never disagree about their exponent.
#[derive(Debug, Clone)]
pub struct WindowCursor<'a> {
    model: &'a CoefficientModel,
    x: f64,
    block: usize,
    /// `buf[k]` holds `u_{front + k}` for `k < block + 2`.
    buf: Vec<f64>,
    front: usize,
    log_scale: f64,
}

const RENORM_HIGH: f64 = 1.3407807929942597e154; // 2^512
const RENORM_LOW: f64 = 7.458340731200207e-155; // 2^-512

impl<'a> WindowCursor<'a> {
    /// Positions the cursor at `n = n_start >= 1`, starting the recurrence
    /// from `alpha = (u_0, u_1)`.
    pub fn new(
        model: &'a CoefficientModel,
        block: usize,
        x: f64,
        alpha: (f64, f64),
        n_start: usize,
    ) -> Self {
        assert!(n_start >= 1, "windows need n >= 1");
        assert!(
            alpha.0 != 0.0 || alpha.1 != 0.0,
            "generalized eigenvectors are nonzero"
        );
        let mut c = WindowCursor {
            model,
            x,
            block,
            buf: vec![alpha.0, alpha.1],
            front: 0,
            log_scale: 0.0,
        };
        // Fill up to u_{block + 1}, then slide to the requested start.
        while c.buf.len() < block + 2 {
            c.extend_one();
        }
        for _ in 1..n_start {
            c.slide_one();
        }
        c
    }

    fn extend_one(&mut self) {
        let k = self.front + self.buf.len() - 1; // index of the last value
        let (um1, u) = (self.buf[self.buf.len() - 2], self.buf[self.buf.len() - 1]);
        let next = ((self.x - self.model.b(k)) * u - self.model.a(k - 1) * um1) / self.model.a(k);
        self.buf.push(next);
        self.renormalize();
    }

    fn slide_one(&mut self) {
        self.extend_one();
        self.buf.remove(0);
        self.front += 1;
    }

    fn renormalize(&mut self) {
        let tail = self.buf.len() - 2;
        let norm = self.buf[tail].hypot(self.buf[tail + 1]);
        if norm > RENORM_HIGH || norm < RENORM_LOW {
            for v in &mut self.buf {
                *v /= norm;
            }
            self.log_scale += norm.ln();
        }
    }

    /// Current window at `n = front + 1`.
    pub fn window(&self) -> EigenWindow {
        let n = self.front + 1;
        EigenWindow {
            n,
            u_before: self.buf[0],
            u_start: self.buf[1],
            u_end_prev: self.buf[self.block],
            u_end: self.buf[self.block + 1],
            log_scale: self.log_scale,
        }
    }

    /// Advances by `steps` indices.
    pub fn advance(&mut self, steps: usize) {
        for _ in 0..steps {
            self.slide_one();
        }
    }
}

/// Largest exponent magnitude we are willing to fold back into a plain f64.
const FOLD_LIMIT: f64 = 700.0;

fn fold(value: f64, log_scale: f64) -> Result<f64> {
    if log_scale.abs() > FOLD_LIMIT {
        return Err(Error::ScalingMismatch { gap: log_scale });
    }
    Ok(value * log_scale.exp())
}

/// `S_n = a_{n+N-1} (u_n u_{n+N-1} - u_{n-1} u_{n+N})` from a window.
pub fn shifted_turan(model: &CoefficientModel, block: usize, w: &EigenWindow) -> Result<f64> {
    let raw = w.u_start * w.u_end_prev - w.u_before * w.u_end;
    fold(model.a(w.n + block - 1) * raw, 2.0 * w.log_scale)
}

/// The same quantity through the quadratic form
/// `a_{n+N-1} <E X_n w, w>` with `w = (u_{n-1}, u_n)` and
/// `E = [[0,-1],[1,0]]`; a cross-check route for [`shifted_turan`].
pub fn shifted_turan_quadratic(
    model: &CoefficientModel,
    block: usize,
    x: f64,
    w: &EigenWindow,
) -> Result<f64> {
    let xn = n_step(model, w.n, block, x);
    let v = (w.u_before, w.u_start);
    let img = Mat2::E * xn;
    let quad = img.m11 * v.0 * v.0 + (img.m12 + img.m21) * v.0 * v.1 + img.m22 * v.1 * v.1;
    fold(model.a(w.n + block - 1) * quad, 2.0 * w.log_scale)
}

/// Trace of `S_{kN+i}` along `k` with convergence bookkeeping.
#[derive(Debug, Clone)]
pub struct TuranTrace {
    pub residue: usize,
    pub alpha: (f64, f64),
    /// `values[j]` is `S` at `k = k_first + j`.
    pub k_first: usize,
    pub values: Vec<f64>,
    /// Max-min gap over consecutive non-overlapping windows.
    pub cauchy_profile: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GEstimate {
    pub g: f64,
    pub converged: bool,
    /// `k` at which the trailing window first met the tolerance (the last
    /// sampled `k` otherwise).
    pub k_stop: usize,
    /// Relative spread of the final trailing window.
    pub final_spread: f64,
    pub trace: TuranTrace,
}

/// Options shared by the scanning estimators.
#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub tol: f64,
    pub window: usize,
    pub k_max: usize,
    pub delta_min: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            tol: 1e-6,
            window: 32,
            k_max: 100_000,
            delta_min: crate::diag::DEFAULT_DELTA_MIN,
        }
    }
}

fn check_elliptic(
    model: &CoefficientModel,
    block: usize,
    residue: usize,
    x: f64,
    k: usize,
    delta_min: f64,
) -> Result<()> {
    let n = k * block + residue;
    let d = n_step(model, n, block, x).discr();
    if d >= -delta_min {
        return Err(Error::NonElliptic {
            index: n,
            discr: d,
            floor: delta_min,
        });
    }
    Ok(())
}

/// Scans `|S_{kN+i}(alpha, x)|` until a trailing window of values has
/// relative spread below `tol`; `g` is the absolute value at that point.
pub fn estimate_g(
    model: &CoefficientModel,
    block: usize,
    residue: usize,
    x: f64,
    alpha: (f64, f64),
    opts: &ScanOptions,
) -> Result<GEstimate> {
    let k_first = if residue == 0 { 1 } else { 0 };
    // Ellipticity spot checks: the onset and geometrically spaced indices.
    check_elliptic(model, block, residue, x, k_first.max(1), opts.delta_min)?;
    let mut probe = 16;
    let n_start = k_first * block + residue;
    let mut cursor = WindowCursor::new(model, block, x, alpha, n_start.max(1));
    let mut values = Vec::new();
    let mut cauchy = Vec::new();
    let mut converged = false;
    let mut k_stop = k_first;
    let mut final_spread = f64::INFINITY;
    for k in k_first..=opts.k_max {
        if k == probe {
            check_elliptic(model, block, residue, x, k, opts.delta_min)?;
            probe *= 2;
        }
        let w = cursor.window();
        debug_assert_eq!(w.n, k * block + residue);
        let s = shifted_turan(model, block, &w)?;
        values.push(s);
        let len = values.len();
        if len % opts.window == 0 {
            let chunk = &values[len - opts.window..];
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &v in chunk {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            cauchy.push(hi - lo);
        }
        if len >= opts.window {
            let chunk = &values[len - opts.window..];
            let (mut lo, mut hi, mut amax) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
            for &v in chunk {
                lo = lo.min(v);
                hi = hi.max(v);
                amax = amax.max(v.abs());
            }
            let spread = if amax > 0.0 {
                (hi - lo) / amax
            } else {
                f64::INFINITY
            };
            final_spread = spread;
            if spread < opts.tol {
                converged = true;
                k_stop = k;
                break;
            }
        }
        k_stop = k;
        cursor.advance(block);
    }
    let g = values.last().copied().unwrap_or(f64::NAN).abs();
    Ok(GEstimate {
        g,
        converged,
        k_stop,
        final_spread,
        trace: TuranTrace {
            residue,
            alpha,
            k_first,
            values,
            cauchy_profile: cauchy,
        },
    })
}

/// Turán limits for every residue of the block, with the
/// orthonormal-polynomial initial data. Under the Carleman condition the
/// limits agree across residues; a large spread is a warning sign about the
/// model, not an error.
pub fn g_by_residue(
    model: &CoefficientModel,
    block: usize,
    x: f64,
    opts: &ScanOptions,
) -> Result<Vec<GEstimate>> {
    let alpha = (1.0, (x - model.b(0)) / model.a(0));
    (0..block)
        .map(|i| estimate_g(model, block, i, x, alpha, opts))
        .collect()
}

/// Relative spread `(max g_i - min g_i) / min g_i` across residues.
pub fn residue_spread(estimates: &[GEstimate]) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for e in estimates {
        lo = lo.min(e.g);
        hi = hi.max(e.g);
    }
    if lo > 0.0 {
        (hi - lo) / lo
    } else {
        f64::INFINITY
    }
}

/// Measured extremes of the normalized pair energy
/// `a_{nN+i-1} (u_{nN+i-1}^2 + u_{nN+i}^2) / (u_0^2 + u_1^2)`.
#[derive(Debug, Clone, Copy)]
pub struct BoundsReport {
    pub c_low: f64,
    pub c_high: f64,
    pub k_samples: usize,
}

pub fn eigenvector_bounds(
    model: &CoefficientModel,
    block: usize,
    residue: usize,
    x: f64,
    alpha: (f64, f64),
    opts: &ScanOptions,
) -> Result<BoundsReport> {
    let k_first = if residue == 0 { 1 } else { 0 };
    check_elliptic(model, block, residue, x, k_first.max(1), opts.delta_min)?;
    let denom = alpha.0 * alpha.0 + alpha.1 * alpha.1;
    let n_start = (k_first * block + residue).max(1);
    let mut cursor = WindowCursor::new(model, block, x, alpha, n_start);
    let (mut c_low, mut c_high) = (f64::INFINITY, 0.0f64);
    let mut samples = 0usize;
    let mut probe = 16usize;
    for k in k_first..=opts.k_max {
        if k == probe {
            check_elliptic(model, block, residue, x, k, opts.delta_min)?;
            probe *= 2;
        }
        let w = cursor.window();
        let m = w.n; // = kN + i
        let energy = w.u_before * w.u_before + w.u_start * w.u_start;
        let ratio = fold(model.a(m - 1) * energy / denom, 2.0 * w.log_scale)?;
        c_low = c_low.min(ratio);
        c_high = c_high.max(ratio);
        samples += 1;
        cursor.advance(block);
    }
    Ok(BoundsReport {
        c_low,
        c_high,
        k_samples: samples,
    })
}
