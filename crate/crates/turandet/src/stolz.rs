//! Forward-difference calculus and slow-oscillation diagnostics.
//!
//! A bounded sequence is "slowly oscillating" of order `(r, s)` when for each
//! `j` in `1..=r-s` the sums `sum_n sup_K |Δ^j x_n|^{r/(j+s)}` are finite.
//! Membership is a property of the infinite tail, so finite data can only be
//! scored, never certified: the diagnostics below report partial sums plus a
//! fitted log-log tail exponent and a three-valued verdict.

use crate::error::{Error, Result};
use crate::model::CoefficientModel;

/// Values of a scalar function sampled on a finite grid (a singleton for
/// plain scalar sequences). The norm is the sup over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction(pub Vec<f64>);

impl GridFunction {
    pub fn scalar(v: f64) -> Self {
        GridFunction(vec![v])
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        assert_eq!(self.0.len(), other.0.len(), "grid length mismatch");
        GridFunction(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn hadamard(&self, other: &GridFunction) -> GridFunction {
        assert_eq!(self.0.len(), other.0.len(), "grid length mismatch");
        GridFunction(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a * b)
                .collect(),
        )
    }
}

/// Triangular table of forward differences
/// `Δ^0 x_n = x_n`, `Δ^j x_n = Δ^{j-1} x_{n+1} - Δ^{j-1} x_n`.
///
/// Sequences are 1-based to match the usual convention: `xs[k]` holds
/// `x_{k+1}` and `diff(j, n)` is valid for `1 <= n <= len - j`.
#[derive(Debug, Clone)]
pub struct DiffTable {
    len: usize,
    max_order: usize,
    rows: Vec<Vec<GridFunction>>,
}

pub fn build_diff_table(xs: &[GridFunction], j_max: usize) -> Result<DiffTable> {
    if xs.len() <= j_max {
        return Err(Error::InsufficientLength {
            needed: j_max + 1,
            got: xs.len(),
        });
    }
    let mut rows = Vec::with_capacity(j_max + 1);
    rows.push(xs.to_vec());
    for j in 1..=j_max {
        let prev = &rows[j - 1];
        let row: Vec<GridFunction> = prev.windows(2).map(|w| w[1].sub(&w[0])).collect();
        rows.push(row);
    }
    Ok(DiffTable {
        len: xs.len(),
        max_order: j_max,
        rows,
    })
}

impl DiffTable {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// `Δ^j x_n` for `1 <= n <= len - j`.
    pub fn diff(&self, j: usize, n: usize) -> &GridFunction {
        assert!(j <= self.max_order && n >= 1 && n <= self.len - j);
        &self.rows[j][n - 1]
    }

    pub fn row(&self, j: usize) -> &[GridFunction] {
        &self.rows[j]
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Checks the discrete Leibniz rule
/// `Δ^j (x y)_n = sum_k C(j,k) Δ^{j-k} x_n * Δ^k y_{n+j-k}`
/// and returns the sup deviation over all valid `n` and grid points.
pub fn leibniz_check(xs: &[GridFunction], ys: &[GridFunction], j: usize) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InsufficientLength {
            needed: xs.len(),
            got: ys.len(),
        });
    }
    let zs: Vec<GridFunction> = xs.iter().zip(ys).map(|(x, y)| x.hadamard(y)).collect();
    let tx = build_diff_table(xs, j)?;
    let ty = build_diff_table(ys, j)?;
    let tz = build_diff_table(&zs, j)?;
    let mut worst = 0.0f64;
    for n in 1..=xs.len() - j {
        let lhs = tz.diff(j, n);
        let mut rhs = vec![0.0; lhs.0.len()];
        for k in 0..=j {
            let c = binomial(j, k);
            let dx = tx.diff(j - k, n);
            let dy = ty.diff(k, n + j - k);
            for (acc, (a, b)) in rhs.iter_mut().zip(dx.0.iter().zip(&dy.0)) {
                *acc += c * a * b;
            }
        }
        for (l, r) in lhs.0.iter().zip(&rhs) {
            worst = worst.max((l - r).abs());
        }
    }
    Ok(worst)
}

/// Outcome of the tail diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StolzVerdict {
    /// Every fitted tail exponent is below -1: the summands decay fast
    /// enough to be summable.
    Consistent,
    /// Some summand demonstrably fails to decay (exponent >= -1 with a good
    /// fit).
    Inconsistent,
    /// The data does not support either call.
    Inconclusive,
}

/// Per-order partial sums and tail fits for the membership diagnostic.
#[derive(Debug, Clone)]
pub struct StolzReport {
    pub r: usize,
    pub s: usize,
    /// `partial_sums[j-1]` is `sum_n sup_K |Δ^j x_n|^{r/(j+s)}` over the data.
    pub partial_sums: Vec<f64>,
    /// Fitted log-log slope of the summand per order (`-inf` when the
    /// summands vanish identically).
    pub tail_slopes: Vec<f64>,
    /// R^2 of each tail fit.
    pub fit_quality: Vec<f64>,
    pub verdict: StolzVerdict,
}

pub(crate) struct TailFit {
    pub slope: f64,
    pub r2: f64,
    pub all_zero: bool,
}

/// Least-squares slope of `ln summand` against `ln n` over the last half of
/// the data. Within each logarithmically spaced bin the summand is reduced
/// to its maximum: the envelope of a sign-changing oscillation has the same
/// decay exponent as the sequence and is stable once a bin spans a full
/// oscillation, where per-bin means would still fluctuate.
pub(crate) fn tail_slope_fit(summands: &[f64]) -> Result<TailFit> {
    let len = summands.len();
    let start = len / 2;
    if len - start < 16 {
        return Err(Error::InsufficientLength {
            needed: 32,
            got: len,
        });
    }
    let lo = (start + 1) as f64;
    let hi = len as f64;
    let bins = 12usize;
    let ratio = (hi / lo).powf(1.0 / bins as f64);
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut edge = lo;
    let mut idx = start;
    for _ in 0..bins {
        let next = (edge * ratio).min(hi);
        let mut peak = 0.0f64;
        let mut count = 0usize;
        let mut nsum = 0.0;
        while idx < len && ((idx + 1) as f64) <= next + 1e-9 {
            peak = peak.max(summands[idx]);
            nsum += (idx + 1) as f64;
            count += 1;
            idx += 1;
        }
        if count > 0 && peak > 0.0 {
            pts.push(((nsum / count as f64).ln(), peak.ln()));
        }
        edge = next;
    }
    if pts.len() < 4 {
        // Nothing measurable in the tail: identically zero summands.
        return Ok(TailFit {
            slope: f64::NEG_INFINITY,
            r2: 1.0,
            all_zero: true,
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let pred = my + slope * (p.0 - mx);
            (p.1 - pred) * (p.1 - pred)
        })
        .sum();
    let r2 = if syy < 1e-18 {
        // Constant data: a flat line fits perfectly.
        if ss_res < 1e-12 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / syy
    };
    Ok(TailFit {
        slope,
        r2,
        all_zero: false,
    })
}

const DECAY_THRESHOLD: f64 = -1.0;
const FIT_QUALITY_FLOOR: f64 = 0.5;

/// Scores the order-(r, s) membership sums of a sequence of grid functions.
/// This is a heuristic diagnostic, not a proof.
pub fn stolz_diagnose(xs: &[GridFunction], r: usize, s: usize) -> Result<StolzReport> {
    assert!(r >= 1 && s < r, "need 0 <= s <= r - 1");
    let j_max = r - s;
    let table = build_diff_table(xs, j_max)?;
    let mut partial_sums = Vec::with_capacity(j_max);
    let mut tail_slopes = Vec::with_capacity(j_max);
    let mut fit_quality = Vec::with_capacity(j_max);
    let mut any_bad = false;
    let mut all_good = true;
    for j in 1..=j_max {
        let exponent = r as f64 / (j + s) as f64;
        let summands: Vec<f64> = table
            .row(j)
            .iter()
            .map(|g| g.sup_norm().powf(exponent))
            .collect();
        partial_sums.push(summands.iter().sum());
        let fit = tail_slope_fit(&summands)?;
        tail_slopes.push(fit.slope);
        fit_quality.push(fit.r2);
        if fit.all_zero {
            continue;
        }
        if fit.slope >= DECAY_THRESHOLD {
            all_good = false;
            if fit.r2 >= FIT_QUALITY_FLOOR {
                any_bad = true;
            }
        }
    }
    let verdict = if any_bad {
        StolzVerdict::Inconsistent
    } else if all_good {
        StolzVerdict::Consistent
    } else {
        StolzVerdict::Inconclusive
    };
    Ok(StolzReport {
        r,
        s,
        partial_sums,
        tail_slopes,
        fit_quality,
        verdict,
    })
}

/// Convenience wrapper for scalar sequences.
pub fn stolz_diagnose_scalar(xs: &[f64], r: usize, s: usize) -> Result<StolzReport> {
    let gf: Vec<GridFunction> = xs.iter().map(|&v| GridFunction::scalar(v)).collect();
    stolz_diagnose(&gf, r, s)
}

/// Partial sum of `sum 1/a_n` with a tail-slope divergence heuristic.
#[derive(Debug, Clone)]
pub struct CarlemanReport {
    pub partial_sum: f64,
    pub tail_slope: f64,
    pub divergent: bool,
}

// Slight slack so the exactly-harmonic boundary lands on the divergent side.
const CARLEMAN_SLOPE_TOL: f64 = 0.02;

pub fn carleman_check(model: &CoefficientModel, n_max: usize) -> CarlemanReport {
    assert!(n_max >= 1);
    let recips: Vec<f64> = (0..=n_max).map(|n| 1.0 / model.a(n)).collect();
    let partial_sum = recips.iter().sum();
    let fit = tail_slope_fit(&recips).expect("n_max >= 31 gives enough tail points");
    CarlemanReport {
        partial_sum,
        tail_slope: fit.slope,
        divergent: fit.slope >= -(1.0 + CARLEMAN_SLOPE_TOL),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(values: impl IntoIterator<Item = f64>) -> Vec<GridFunction> {
        values.into_iter().map(GridFunction::scalar).collect()
    }

    #[test]
    fn differences_of_constant_vanish() {
        let xs = seq((1..=40).map(|_| 3.25));
        let t = build_diff_table(&xs, 2).unwrap();
        for n in 1..=39 {
            assert_eq!(t.diff(1, n).sup_norm(), 0.0);
        }
    }

    #[test]
    fn differences_of_linear_and_quadratic() {
        let xs = seq((1..=50).map(|n| n as f64));
        let t = build_diff_table(&xs, 2).unwrap();
        for n in 1..=49 {
            assert_eq!(t.diff(1, n).0[0], 1.0);
        }
        for n in 1..=48 {
            assert_eq!(t.diff(2, n).0[0], 0.0);
        }
        // Oracle for Δ^2 n^2: (n+2)^2 - 2(n+1)^2 + n^2 expanded by hand is 2.
        let ys = seq((1..=50).map(|n| (n * n) as f64));
        let t2 = build_diff_table(&ys, 2).unwrap();
        for n in 1..=48 {
            assert_eq!(t2.diff(2, n).0[0], 2.0);
        }
    }

    #[test]
    fn diff_table_rejects_short_input() {
        let xs = seq([1.0, 2.0]);
        assert!(matches!(
            build_diff_table(&xs, 2),
            Err(Error::InsufficientLength { .. })
        ));
    }

    #[test]
    fn leibniz_order_zero_and_product_rule() {
        let xs = seq((1..=30).map(|n| (n as f64).sqrt()));
        let ys = seq((1..=30).map(|n| 1.0 / n as f64));
        assert_eq!(leibniz_check(&xs, &ys, 0).unwrap(), 0.0);
        // j = 1 is the product rule Δ(xy)_n = Δx_n y_{n+1} + x_n Δy_n.
        assert!(leibniz_check(&xs, &ys, 1).unwrap() < 1e-14);
    }

    #[test]
    fn leibniz_second_order_linear_sequences() {
        let xs = seq((1..=30).map(|n| n as f64));
        let dev = leibniz_check(&xs, &xs, 2).unwrap();
        assert!(dev < 1e-10);
    }

    #[test]
    fn constant_sequence_is_consistent() {
        let xs = seq((1..=200).map(|_| 2.0));
        let rep = stolz_diagnose(&xs, 2, 0).unwrap();
        assert_eq!(rep.verdict, StolzVerdict::Consistent);
        assert!(rep.partial_sums.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn alternating_sequence_is_inconsistent() {
        let xs = seq((1..=200).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 }));
        let rep = stolz_diagnose(&xs, 2, 0).unwrap();
        assert_eq!(rep.verdict, StolzVerdict::Inconsistent);
        // |Δ x_n| == 2 throughout.
        assert!((rep.tail_slopes[0]).abs() < 0.05);
    }

    #[test]
    fn oscillating_membership_gate() {
        // b_n = cos(n^{1/2}) / log(n+2) should look summable at r = 3 and
        // non-summable at r = 1.
        let bs: Vec<GridFunction> = (1..=30000)
            .map(|n| {
                let nf = n as f64;
                GridFunction::scalar(nf.sqrt().cos() / (nf + 2.0).ln())
            })
            .collect();
        let at3 = stolz_diagnose(&bs, 3, 0).unwrap();
        assert_eq!(at3.verdict, StolzVerdict::Consistent, "{at3:?}");
        let at1 = stolz_diagnose(&bs, 1, 0).unwrap();
        assert_eq!(at1.verdict, StolzVerdict::Inconsistent, "{at1:?}");
    }

    #[test]
    fn shifted_order_tracks_differenced_sequence() {
        // If x is consistent at (r, s), its first difference should be
        // consistent at (r, s+1).
        let xs: Vec<GridFunction> = (1..=20000)
            .map(|n| GridFunction::scalar(1.0 / (n as f64).powf(0.6)))
            .collect();
        let base = stolz_diagnose(&xs, 3, 0).unwrap();
        assert_eq!(base.verdict, StolzVerdict::Consistent);
        let diffs: Vec<GridFunction> = xs.windows(2).map(|w| w[1].sub(&w[0])).collect();
        let shifted = stolz_diagnose(&diffs, 3, 1).unwrap();
        assert_eq!(shifted.verdict, StolzVerdict::Consistent);
    }

    #[test]
    fn diff_table_is_linear() {
        let xs = seq((1..=40).map(|n| (n as f64).sin()));
        let ys = seq((1..=40).map(|n| (n as f64 * 0.3).cos()));
        let combo: Vec<GridFunction> = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| GridFunction(vec![2.0 * x.0[0] - 0.5 * y.0[0]]))
            .collect();
        let tx = build_diff_table(&xs, 3).unwrap();
        let ty = build_diff_table(&ys, 3).unwrap();
        let tc = build_diff_table(&combo, 3).unwrap();
        for j in 0..=3 {
            for n in 1..=40 - j {
                let expect = 2.0 * tx.diff(j, n).0[0] - 0.5 * ty.diff(j, n).0[0];
                assert!((tc.diff(j, n).0[0] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_sums_grow_with_data_length() {
        let xs: Vec<GridFunction> = (1..=4000)
            .map(|n| GridFunction::scalar((n as f64).sqrt().cos()))
            .collect();
        let short = stolz_diagnose(&xs[..1000], 3, 0).unwrap();
        let long = stolz_diagnose(&xs, 3, 0).unwrap();
        for (s, l) in short.partial_sums.iter().zip(&long.partial_sums) {
            assert!(*s >= 0.0 && s <= l);
        }
    }

    #[test]
    fn carleman_flags() {
        let ones = CoefficientModel::free();
        let rep = carleman_check(&ones, 1000);
        assert_eq!(rep.partial_sum, 1001.0);
        assert!(rep.divergent);

        let squares = CoefficientModel::new("sq", 1, |n| ((n + 1) * (n + 1)) as f64, |_| 0.0);
        let rep = carleman_check(&squares, 4000);
        assert!(!rep.divergent);
        assert!(rep.partial_sum < std::f64::consts::PI.powi(2) / 6.0);
        assert!((rep.tail_slope - (-2.0)).abs() < 0.05);

        let linear = CoefficientModel::new("lin", 1, |n| (n + 1) as f64, |_| 0.0);
        assert!(carleman_check(&linear, 4000).divergent);
    }
}
