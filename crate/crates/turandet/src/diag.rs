//! Iterated uniform diagonalization of transfer-matrix products.
//!
//! On the elliptic set the blocks `X_n = X_{nN+i}(x)` have eigenvalues
//! `lambda_n` and `conj(lambda_n)` with positive imaginary part, and the
//! ordered product factorizes exactly as
//!
//! ```text
//! X_n ... X_m = Q_n (D_n C_n^-1 C_{n-1}) ... (D_m C_m^-1 C_{m-1}) Q_{m-1}^-1
//! ```
//!
//! after `r - 1` refinement rounds. Each round diagonalizes the "rotation
//! residue" `W_n = D_n C_n^-1 C_{n-1}` of the previous one; the conjugators
//! shrink toward the identity one smoothness order per round, which is what
//! turns slowly oscillating coefficients into convergent products.

use crate::error::{Error, Result};
use crate::mat2::{CMat2, Mat2};
use crate::model::CoefficientModel;
use crate::transfer::n_step;
use num_complex::Complex64;

/// Discriminants above `-DEFAULT_DELTA_MIN` are treated as non-elliptic.
pub const DEFAULT_DELTA_MIN: f64 = 1e-9;
/// Guard for the eigenvector denominator in the refinement step.
pub const DEFAULT_DELTA_GUARD: f64 = 1e-6;
/// How far ahead ellipticity is verified when picking the chain start.
pub const DEFAULT_LOOKAHEAD: usize = 64;

/// Principal eigenvalue `lambda = tr X / 2 + (i/2) sqrt(|discr X|)` and the
/// eigenvector conjugator `C0 = [[1, 1], [v, conj v]]` with
/// `v = (lambda - X11) / X12`, so that
/// `X = C0 diag(lambda, conj lambda) C0^-1` exactly.
///
/// For companion blocks (`X11 = 0`, `X12 = 1`, the single-step case) this is
/// the familiar `[[1, 1], [lambda, conj lambda]]`. A negative discriminant
/// forces `X12 != 0`, and the column swap symmetry `C0 sigma = conj(C0)`
/// needed by the refinement holds for any real `X`.
pub fn principal_eigen(x: &Mat2, delta_min: f64) -> Result<(Complex64, CMat2)> {
    let d = x.discr();
    if d >= -delta_min {
        return Err(Error::NonElliptic {
            index: 0,
            discr: d,
            floor: delta_min,
        });
    }
    let lambda = Complex64::new(x.trace() / 2.0, 0.5 * (-d).sqrt());
    let v = (lambda - x.m11) / x.m12;
    let one = Complex64::new(1.0, 0.0);
    let c0 = CMat2::new(one, one, v, v.conj());
    Ok((lambda, c0))
}

/// One refinement round: diagonalizes `W = D C_cur^-1 C_prev` as
/// `Y diag(gamma, conj gamma) Y^-1` with `Y = [[1, conj v], [v, 1]]`.
///
/// The input `d` must be `diag(gamma_prev, conj gamma_prev)` from the round
/// before, and both conjugators must carry the swap symmetry that keeps
/// `tr W` and `det W` real. Close to the elliptic onset the residue can
/// still have real eigenvalues (its discriminant is nonnegative while the
/// conjugators move fast); that case is reported as degenerate so the
/// caller can start the chain later.
pub fn refine_step(
    d: &CMat2,
    c_cur: &CMat2,
    c_prev: &CMat2,
    delta_guard: f64,
) -> Result<(Complex64, CMat2)> {
    let w = *d * c_cur.inverse() * *c_prev;
    let (w11, w12, w21, w22) = (w.m11, w.m12, w.m21, w.m22);
    // discr W is real by symmetry up to rounding.
    let disc = (w11 - w22) * (w11 - w22) + 4.0 * w12 * w21;
    if disc.re >= 0.0 {
        return Err(Error::DegenerateRefinement {
            level: 0,
            index: 0,
            reason: format!("residue discriminant {:e} is nonnegative", disc.re),
        });
    }
    let gamma = (w11 + w22) / 2.0 + Complex64::new(0.0, 0.5) * disc.norm().sqrt();
    let denom = (w11 + gamma).im;
    if denom.abs() < delta_guard {
        return Err(Error::DegenerateRefinement {
            level: 0,
            index: 0,
            reason: format!("|Im(w11 + gamma)| = {:e} below guard {delta_guard:e}", denom.abs()),
        });
    }
    let v = Complex64::new(0.0, -1.0) * w21 / denom;
    let one = Complex64::new(1.0, 0.0);
    let y = CMat2::new(one, v.conj(), v, one);
    Ok((gamma, y))
}

/// Knobs for [`build_chain`].
#[derive(Debug, Clone, Copy)]
pub struct ChainParams {
    /// Refinement depth `r`; the chain performs `r - 1` rounds.
    pub depth: usize,
    pub delta_min: f64,
    pub delta_guard: f64,
    /// Lowest chain index considered when searching for the elliptic onset.
    pub m_hint: usize,
    pub lookahead: usize,
}

impl ChainParams {
    pub fn with_depth(depth: usize) -> Self {
        assert!(depth >= 1);
        ChainParams {
            depth,
            delta_min: DEFAULT_DELTA_MIN,
            delta_guard: DEFAULT_DELTA_GUARD,
            m_hint: 1,
            lookahead: DEFAULT_LOOKAHEAD,
        }
    }
}

/// Per-index data of the iterated diagonalization at one grid point.
///
/// Outer-level quantities (`gamma`, `conjugator`, `q`) exist for chain
/// indices `start..=last`, where `start = M + depth - 1`; each refinement
/// round consumes one index at the front.
#[derive(Debug, Clone)]
pub struct DiagChain {
    pub x: f64,
    pub block: usize,
    pub residue: usize,
    pub depth: usize,
    /// Elliptic onset `M`: all sampled indices from here on are elliptic.
    pub m_index: usize,
    /// First index with outer-level data (`M + depth - 1`).
    pub start: usize,
    last: usize,
    /// `gammas[k]` holds the level-`k` eigenvalues for `n >= m_index + k`.
    gammas: Vec<Vec<Complex64>>,
    /// `levels[k]` holds the level-`k` conjugators for `n >= m_index + k`.
    levels: Vec<Vec<CMat2>>,
    /// `q[n - start] = C_{n,0} C_{n,1} ... C_{n,depth-1}`.
    q: Vec<CMat2>,
}

impl DiagChain {
    pub fn last(&self) -> usize {
        self.last
    }

    /// Level-0 eigenvalue `lambda_n` of `X_{nN+i}(x)`, `n >= m_index`.
    pub fn lambda(&self, n: usize) -> Complex64 {
        self.level_gamma(0, n)
    }

    /// Outer-level eigenvalue `gamma_n`, `n >= start`.
    pub fn gamma(&self, n: usize) -> Complex64 {
        self.level_gamma(self.depth - 1, n)
    }

    pub fn level_gamma(&self, k: usize, n: usize) -> Complex64 {
        assert!(k < self.depth && n >= self.m_index + k && n <= self.last);
        self.gammas[k][n - self.m_index - k]
    }

    /// Outer-level conjugator `C_n`, `n >= start`.
    pub fn conjugator(&self, n: usize) -> CMat2 {
        self.level_conjugator(self.depth - 1, n)
    }

    pub fn level_conjugator(&self, k: usize, n: usize) -> CMat2 {
        assert!(k < self.depth && n >= self.m_index + k && n <= self.last);
        self.levels[k][n - self.m_index - k]
    }

    /// Outer-level diagonal `D_n = diag(gamma_n, conj gamma_n)`.
    pub fn d(&self, n: usize) -> CMat2 {
        let g = self.gamma(n);
        CMat2::diag(g, g.conj())
    }

    /// Accumulated conjugator `Q_n`, `n >= start`.
    pub fn q(&self, n: usize) -> CMat2 {
        assert!(n >= self.start && n <= self.last);
        self.q[n - self.start]
    }
}

#[allow(clippy::type_complexity)]
fn build_levels(
    blocks: &[Mat2],
    n_first: usize,
    m_index: usize,
    n_last: usize,
    block: usize,
    residue: usize,
    params: &ChainParams,
) -> Result<(Vec<Vec<Complex64>>, Vec<Vec<CMat2>>)> {
    // Level 0: eigenvalues and eigenvector conjugators of the blocks.
    let mut gammas: Vec<Vec<Complex64>> = Vec::with_capacity(params.depth);
    let mut levels: Vec<Vec<CMat2>> = Vec::with_capacity(params.depth);
    let mut lam = Vec::with_capacity(n_last - m_index + 1);
    let mut c0 = Vec::with_capacity(n_last - m_index + 1);
    for n in m_index..=n_last {
        let (l, c) =
            principal_eigen(&blocks[n - n_first], params.delta_min).map_err(|e| match e {
                Error::NonElliptic { discr, floor, .. } => Error::NonElliptic {
                    index: n * block + residue,
                    discr,
                    floor,
                },
                other => other,
            })?;
        lam.push(l);
        c0.push(c);
    }
    gammas.push(lam);
    levels.push(c0);

    // Refinement rounds: each diagonalizes the rotation residue of the
    // previous level and starts one index later.
    for k in 1..params.depth {
        let prev_g = &gammas[k - 1];
        let prev_c = &levels[k - 1];
        let base = m_index + k; // first n of this level
        let mut g_row = Vec::with_capacity(n_last - base + 1);
        let mut c_row = Vec::with_capacity(n_last - base + 1);
        for n in base..=n_last {
            let off = n - (m_index + k - 1);
            let gp = prev_g[off];
            let d = CMat2::diag(gp, gp.conj());
            let (g, y) = refine_step(&d, &prev_c[off], &prev_c[off - 1], params.delta_guard)
                .map_err(|e| match e {
                    Error::DegenerateRefinement { reason, .. } => Error::DegenerateRefinement {
                        level: k,
                        index: n,
                        reason,
                    },
                    other => other,
                })?;
            g_row.push(g);
            c_row.push(y);
        }
        gammas.push(g_row);
        levels.push(c_row);
    }
    Ok((gammas, levels))
}

/// Builds the refinement chain for the blocks `X_{nN+i}(x)` with
/// `n <= n_last`. The onset `M` is the smallest sampled index from which
/// ellipticity holds over the lookahead window and every refinement round
/// stays elliptic; the build fails with [`Error::NonElliptic`] if no such
/// index exists or ellipticity breaks later, and with
/// [`Error::DegenerateRefinement`] if a refinement collapses beyond the
/// onset window.
pub fn build_chain(
    model: &CoefficientModel,
    block: usize,
    residue: usize,
    x: f64,
    n_last: usize,
    params: &ChainParams,
) -> Result<DiagChain> {
    assert!(params.depth >= 1);
    let n_first = params.m_hint.max(1);
    assert!(
        n_last >= n_first + params.depth,
        "chain too short for the requested depth"
    );

    let blocks: Vec<Mat2> = (n_first..=n_last)
        .map(|n| n_step(model, n * block + residue, block, x))
        .collect();
    let discrs: Vec<f64> = blocks.iter().map(Mat2::discr).collect();

    // Elliptic onset: first index whose lookahead window stays below the floor.
    let mut m_index = None;
    'outer: for (k, d) in discrs.iter().enumerate() {
        if *d >= -params.delta_min {
            continue;
        }
        let end = (k + params.lookahead).min(discrs.len() - 1);
        for j in k..=end {
            if discrs[j] >= -params.delta_min {
                continue 'outer;
            }
        }
        m_index = Some(n_first + k);
        break;
    }
    let mut m_index = m_index.ok_or_else(|| {
        let (worst_k, worst) = discrs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        Error::NonElliptic {
            index: (n_first + worst_k) * block + residue,
            discr: *worst,
            floor: params.delta_min,
        }
    })?;

    // All per-index data is a pointwise function of the nearby blocks, so a
    // degenerate refinement close to the onset is handled exactly by
    // starting the chain later. Theorem-style hypotheses only hold from
    // "some index on"; this finds it.
    let m_limit = (m_index + params.lookahead).min(n_last.saturating_sub(params.depth + 8));
    let (gammas, levels) = loop {
        match build_levels(&blocks, n_first, m_index, n_last, block, residue, params) {
            Ok(rows) => break rows,
            Err(Error::DegenerateRefinement { level, index, reason })
                if index < m_limit && index + params.depth + 8 < n_last =>
            {
                let _ = (level, &reason);
                m_index = index + 1;
            }
            Err(e) => return Err(e),
        }
    };

    let start = m_index + params.depth - 1;
    let mut q = Vec::with_capacity(n_last - start + 1);
    for n in start..=n_last {
        let mut acc = levels[0][n - m_index];
        for (k, level) in levels.iter().enumerate().skip(1) {
            acc = acc * level[n - m_index - k];
        }
        q.push(acc);
    }

    Ok(DiagChain {
        x,
        block,
        residue,
        depth: params.depth,
        m_index,
        start,
        last: n_last,
        gammas,
        levels,
        q,
    })
}

/// A 2x2 matrix with an exponent ledger, for long ordered products.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ScaledCMat2 {
    pub m: CMat2,
    pub log_scale: f64,
}

impl ScaledCMat2 {
    pub fn identity() -> Self {
        ScaledCMat2 {
            m: CMat2::identity(),
            log_scale: 0.0,
        }
    }

    pub fn push_left(&mut self, factor: &CMat2) {
        self.m = *factor * self.m;
        let norm = self.m.norm();
        if !(1e-150..=1e150).contains(&norm) && norm > 0.0 {
            self.m = self.m.scale(Complex64::new(1.0 / norm, 0.0));
            self.log_scale += norm.ln();
        }
    }

    pub fn push_right(&mut self, factor: &CMat2) {
        self.m = self.m * *factor;
        let norm = self.m.norm();
        if !(1e-150..=1e150).contains(&norm) && norm > 0.0 {
            self.m = self.m.scale(Complex64::new(1.0 / norm, 0.0));
            self.log_scale += norm.ln();
        }
    }
}

/// Deviation of the factorized product from the direct one over a span.
#[derive(Debug, Clone, Copy)]
pub struct ReconstructionError {
    pub span: (usize, usize),
    /// `|| X_n ... X_m - Q_n (prod D_j C_j^-1 C_{j-1}) Q_{m-1}^-1 ||`.
    pub max_norm_deviation: f64,
    /// Norm of the direct product, for relative scoring.
    pub reference_norm: f64,
}

impl ReconstructionError {
    pub fn relative(&self) -> f64 {
        if self.reference_norm > 0.0 {
            self.max_norm_deviation / self.reference_norm
        } else {
            self.max_norm_deviation
        }
    }
}

/// Compares the direct ordered product of blocks over `m..=n` against the
/// chain factorization. The empty span `m = n + 1` compares two identities.
/// Requires `m >= chain.start + 1` so that `Q_{m-1}` exists.
pub fn reconstruct_check(
    chain: &DiagChain,
    model: &CoefficientModel,
    m: usize,
    n: usize,
) -> ReconstructionError {
    assert!(m >= chain.start + 1, "span must start after the chain start");
    assert!(n <= chain.last() && m <= n + 1, "span out of chain range");

    // Direct side, scaled.
    let mut direct = ScaledCMat2::identity();
    for j in m..=n {
        let xj = n_step(model, j * chain.block + chain.residue, chain.block, chain.x);
        direct.push_left(&xj.to_complex());
    }

    // Factorized side.
    let mut mid = ScaledCMat2::identity();
    for j in m..=n {
        let factor = chain.d(j) * chain.conjugator(j).inverse() * chain.conjugator(j - 1);
        mid.push_left(&factor);
    }
    let mut fact = mid;
    fact.push_left(&chain.q(n));
    fact.push_right(&chain.q(m - 1).inverse());

    let common = direct.log_scale.max(fact.log_scale);
    let a = direct.m.scale(Complex64::new((direct.log_scale - common).exp(), 0.0));
    let b = fact.m.scale(Complex64::new((fact.log_scale - common).exp(), 0.0));
    let deviation = (a - b).norm() * common.exp();
    let reference = direct.m.norm() * direct.log_scale.exp();
    ReconstructionError {
        span: (m, n),
        max_norm_deviation: deviation,
        reference_norm: reference,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_family, FamilySpec};

    fn free() -> CoefficientModel {
        CoefficientModel::free()
    }

    fn oscillating() -> CoefficientModel {
        make_family(&FamilySpec::Oscillating { gamma: 0.5 }).unwrap()
    }

    #[test]
    fn principal_eigen_rotation() {
        let (l, c) = principal_eigen(&Mat2::new(0.0, 1.0, -1.0, 0.0), DEFAULT_DELTA_MIN).unwrap();
        assert!((l - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((c.m21 - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((c.m22 - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn principal_eigen_shifted_rotation() {
        let x = Mat2::new(0.0, 1.0, -1.0, 1.0);
        let (l, c) = principal_eigen(&x, DEFAULT_DELTA_MIN).unwrap();
        assert!((l - Complex64::new(0.5, 3.0f64.sqrt() / 2.0)).norm() < 1e-15);
        // X = C0 D C0^-1.
        let d = CMat2::diag(l, l.conj());
        let back = c * d * c.inverse();
        assert!((back - x.to_complex()).norm() < 1e-14);
    }

    #[test]
    fn principal_eigen_rejects_zero_discriminant() {
        let err = principal_eigen(&Mat2::new(2.0, 0.0, 0.0, 2.0), DEFAULT_DELTA_MIN).unwrap_err();
        assert!(matches!(err, Error::NonElliptic { .. }));
    }

    #[test]
    fn principal_eigen_non_companion_block() {
        // A two-step product has a nonzero top-left entry; the conjugator
        // must still diagonalize it exactly.
        let m = CoefficientModel::new("half", 2, |_| 0.5, |_| 0.0);
        let x = n_step(&m, 4, 2, 0.15);
        assert!(x.m11 != 0.0);
        let (l, c) = principal_eigen(&x, DEFAULT_DELTA_MIN).unwrap();
        let back = c * CMat2::diag(l, l.conj()) * c.inverse();
        assert!((back - x.to_complex()).norm() < 1e-14);
        // Column swap symmetry C sigma = conj(C).
        let swapped = CMat2::new(c.m12, c.m11, c.m22, c.m21);
        assert!((swapped - c.conj()).norm() < 1e-15);
    }

    #[test]
    fn refine_step_constant_sequence_is_trivial() {
        // Identical consecutive conjugators give W = D, so gamma = lambda
        // and Y = Id.
        let x = Mat2::new(0.0, 1.0, -1.0, 0.3);
        let (l, c) = principal_eigen(&x, DEFAULT_DELTA_MIN).unwrap();
        let d = CMat2::diag(l, l.conj());
        let (g, y) = refine_step(&d, &c, &c, DEFAULT_DELTA_GUARD).unwrap();
        assert!((g - l).norm() < 1e-14);
        assert!((y - CMat2::identity()).norm() < 1e-14);
    }

    #[test]
    fn refine_step_diagonal_rotation() {
        let i = Complex64::new(0.0, 1.0);
        let d = CMat2::diag(i, -i);
        let x = Mat2::new(0.0, 1.0, -1.0, 0.0).to_complex();
        let (g, y) = refine_step(&d, &x, &x, DEFAULT_DELTA_GUARD).unwrap();
        assert!((g - i).norm() < 1e-15);
        assert!((y - CMat2::identity()).norm() < 1e-15);
    }

    #[test]
    fn refine_step_reproduces_w() {
        // W = Y diag(gamma, conj gamma) Y^-1 must hold to rounding.
        let m = CoefficientModel::new("decay", 1, |_| 1.0, |n| 1.0 / (n + 1) as f64);
        let x = 0.0;
        let b10 = n_step(&m, 10, 1, x);
        let b9 = n_step(&m, 9, 1, x);
        let (l10, c10) = principal_eigen(&b10, DEFAULT_DELTA_MIN).unwrap();
        let (_, c9) = principal_eigen(&b9, DEFAULT_DELTA_MIN).unwrap();
        let d = CMat2::diag(l10, l10.conj());
        let (g, y) = refine_step(&d, &c10, &c9, DEFAULT_DELTA_GUARD).unwrap();
        let w = d * c10.inverse() * c9;
        let back = y * CMat2::diag(g, g.conj()) * y.inverse();
        assert!((w - back).norm() < 1e-13);
        // The refined eigenvalue stays near lambda, and the gap shrinks as n
        // grows (the coefficients settle down).
        let gap10 = (g - l10).norm();
        assert!(gap10 < 0.1);
        let b100 = n_step(&m, 100, 1, x);
        let b99 = n_step(&m, 99, 1, x);
        let (l100, c100) = principal_eigen(&b100, DEFAULT_DELTA_MIN).unwrap();
        let (_, c99) = principal_eigen(&b99, DEFAULT_DELTA_MIN).unwrap();
        let d100 = CMat2::diag(l100, l100.conj());
        let (g100, _) = refine_step(&d100, &c100, &c99, DEFAULT_DELTA_GUARD).unwrap();
        assert!((g100 - l100).norm() < gap10 / 5.0);
    }

    #[test]
    fn chain_constant_free_model() {
        let params = ChainParams::with_depth(1);
        let x = 0.7;
        let chain = build_chain(&free(), 1, 0, x, 64, &params).unwrap();
        let expect = Complex64::new(x / 2.0, (4.0 - x * x).sqrt() / 2.0);
        for n in chain.start..=chain.last() {
            assert!((chain.gamma(n) - expect).norm() < 1e-14);
        }
        // Depth 1 is exactly the principal eigendecomposition.
        let (l, c) = principal_eigen(&n_step(&free(), 5, 1, x), DEFAULT_DELTA_MIN).unwrap();
        assert!((chain.gamma(5) - l).norm() < 1e-15);
        assert!((chain.conjugator(5) - c).norm() < 1e-15);
    }

    #[test]
    fn chain_rejects_non_elliptic_points() {
        let params = ChainParams::with_depth(2);
        let err = build_chain(&free(), 1, 0, 3.0, 64, &params).unwrap_err();
        assert!(matches!(err, Error::NonElliptic { .. }));
    }

    #[test]
    fn refine_step_rejects_hyperbolic_residue() {
        // Conjugators moving fast enough give the residue real eigenvalues;
        // the step must refuse instead of fabricating a complex pair.
        let m = CoefficientModel::new("edge", 1, |_| 0.5, |n| 0.3346 / (n + 1) as f64);
        let x = -0.95;
        let b7 = n_step(&m, 7, 1, x);
        let b6 = n_step(&m, 6, 1, x);
        let (l7, c7) = principal_eigen(&b7, DEFAULT_DELTA_MIN).unwrap();
        let (_, c6) = principal_eigen(&b6, DEFAULT_DELTA_MIN).unwrap();
        let d = CMat2::diag(l7, l7.conj());
        let err = refine_step(&d, &c7, &c6, DEFAULT_DELTA_GUARD).unwrap_err();
        assert!(matches!(err, Error::DegenerateRefinement { .. }));
    }

    #[test]
    fn chain_onset_retreats_past_degenerate_refinements() {
        // Same model: the blocks are elliptic from n = 6, but the first
        // refinement residue is hyperbolic there, so the chain must start
        // later and still factorize exactly.
        let m = CoefficientModel::new("edge", 1, |_| 0.5, |n| 0.3346 / (n + 1) as f64);
        let params = ChainParams::with_depth(3);
        let chain = build_chain(&m, 1, 0, -0.95, 64, &params).unwrap();
        assert!(chain.m_index > 6, "onset {}", chain.m_index);
        let err = reconstruct_check(&chain, &m, chain.start + 1, 64);
        assert!(err.relative() < 1e-10, "{err:?}");
    }

    #[test]
    fn chain_conjugators_have_swap_symmetry() {
        let params = ChainParams::with_depth(3);
        let chain = build_chain(&oscillating(), 1, 0, 0.4, 400, &params).unwrap();
        for k in 1..chain.depth {
            for n in (chain.m_index + k..=chain.last()).step_by(37) {
                let y = chain.level_conjugator(k, n);
                // sigma Y sigma == conj(Y) with sigma the swap matrix.
                let swapped = CMat2::new(y.m22, y.m21, y.m12, y.m11);
                assert!((swapped - y.conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn chain_gamma_approaches_free_rotation_on_intro_family() {
        let params = ChainParams::with_depth(3);
        let chain = build_chain(&oscillating(), 1, 0, 0.0, 10_000, &params).unwrap();
        let i = Complex64::new(0.0, 1.0);
        let max_gap = |lo: usize, hi: usize| {
            (lo..=hi)
                .map(|n| (chain.gamma(n) - i).norm())
                .fold(0.0f64, f64::max)
        };
        let early = max_gap(chain.start, chain.start + 100);
        let late = max_gap(9_000, 10_000);
        assert!(late < early, "late {late} vs early {early}");
        assert!(late < 0.1);
    }

    #[test]
    fn gamma_tracks_lambda_along_chain() {
        let params = ChainParams::with_depth(3);
        let chain = build_chain(&oscillating(), 1, 0, 0.3, 8_000, &params).unwrap();
        let gap = |n: usize| (chain.gamma(n) - chain.lambda(n)).norm();
        let early: f64 = (chain.start..chain.start + 64).map(gap).fold(0.0, f64::max);
        let late: f64 = (7_900..8_000).map(gap).fold(0.0, f64::max);
        assert!(late < early);
        assert!(late < 1e-2);
    }

    #[test]
    fn reconstruct_empty_span() {
        let params = ChainParams::with_depth(2);
        let chain = build_chain(&free(), 1, 0, 0.5, 64, &params).unwrap();
        let err = reconstruct_check(&chain, &free(), 21, 20);
        assert!(err.max_norm_deviation < 1e-12);
    }

    #[test]
    fn reconstruct_constant_model_is_exact() {
        let params = ChainParams::with_depth(2);
        let chain = build_chain(&free(), 1, 0, 1.2, 256, &params).unwrap();
        for &(m, n) in &[(4usize, 9usize), (5, 200), (100, 256)] {
            let err = reconstruct_check(&chain, &free(), m, n);
            assert!(err.relative() < 1e-10, "span {m}..{n}: {err:?}");
        }
    }

    #[test]
    fn reconstruct_intro_family_span() {
        let params = ChainParams::with_depth(3);
        let model = oscillating();
        let chain = build_chain(&model, 1, 0, 0.0, 300, &params).unwrap();
        let err = reconstruct_check(&chain, &model, 20, 200);
        assert!(err.relative() < 1e-8, "{err:?}");
    }

    #[test]
    fn determinant_telescoping() {
        // prod det D_j over prod det X_j approaches 1 on late windows. The
        // deviation tracks how far the conjugators still move over the
        // window, so a polynomially settling family reaches 1e-3 at desk
        // scale while the 1/log oscillating family only shows the trend.
        let params = ChainParams::with_depth(3);
        let model = make_family(&FamilySpec::AsymptoticallyPeriodic {
            alpha: vec![1.0],
            beta: vec![0.0],
            pert_a: 0.4,
            pert_b: 0.3,
        })
        .unwrap();
        let ratio_over = |model: &CoefficientModel, chain: &DiagChain, m: usize, n: usize| {
            let mut num = Complex64::new(1.0, 0.0);
            let mut den = 1.0f64;
            for j in m..=n {
                num *= chain.d(j).det();
                den *= n_step(model, j, 1, chain.x).det();
            }
            num.norm() / den
        };
        let chain = build_chain(&model, 1, 0, 0.2, 4_000, &params).unwrap();
        let ratio = ratio_over(&model, &chain, 3_000, 4_000);
        assert!((ratio - 1.0).abs() < 1e-3, "ratio {ratio}");

        // The ratio telescopes down to the endpoint conjugators, so score a
        // window by the worst span inside it rather than a single pair.
        let slow = oscillating();
        let chain = build_chain(&slow, 1, 0, 0.2, 8_000, &params).unwrap();
        let worst = |lo: usize, hi: usize| {
            (0..8)
                .map(|k| {
                    let m = lo + k * (hi - lo) / 16;
                    (ratio_over(&slow, &chain, m, hi) - 1.0).abs()
                })
                .fold(0.0f64, f64::max)
        };
        let early = worst(30, 1_000);
        let late = worst(7_000, 8_000);
        assert!(late < early, "late {late} vs early {early}");
        assert!(late < 0.05, "late {late}");
    }
}
