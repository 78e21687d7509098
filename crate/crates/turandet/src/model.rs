//! Coefficient models.
//!
//! A Jacobi matrix is described by its off-diagonal `a_n > 0` and diagonal
//! `b_n`. Models are pure functions of the index, so indices up to 10^6 cost
//! constant memory; finite arrays are accepted through an adapter that
//! extends them periodically.

use std::fmt;
use std::sync::Arc;

type CoeffFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

/// Generator of the recurrence coefficients `(a_n, b_n)` for `n >= 0`.
#[derive(Clone)]
pub struct CoefficientModel {
    a: CoeffFn,
    b: CoeffFn,
    period: usize,
    label: String,
}

impl CoefficientModel {
    /// `period` is the declared block length `N` used by the `N`-step
    /// machinery downstream; it is metadata, not a constraint on the
    /// generators.
    pub fn new<A, B>(label: impl Into<String>, period: usize, a: A, b: B) -> Self
    where
        A: Fn(usize) -> f64 + Send + Sync + 'static,
        B: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        assert!(period >= 1, "period must be positive");
        CoefficientModel {
            a: Arc::new(a),
            b: Arc::new(b),
            period,
            label: label.into(),
        }
    }

    /// Array adapter: past the stored range the final `period` entries repeat.
    pub fn from_slices(label: impl Into<String>, period: usize, a: &[f64], b: &[f64]) -> Self {
        assert!(
            a.len() >= period && b.len() >= period,
            "need at least one full period of coefficients"
        );
        let a_vec: Vec<f64> = a.to_vec();
        let b_vec: Vec<f64> = b.to_vec();
        let (pa, pb) = (period, period);
        CoefficientModel::new(
            label,
            period,
            move |n| {
                if n < a_vec.len() {
                    a_vec[n]
                } else {
                    let base = a_vec.len() - pa;
                    a_vec[base + (n - base) % pa]
                }
            },
            move |n| {
                if n < b_vec.len() {
                    b_vec[n]
                } else {
                    let base = b_vec.len() - pb;
                    b_vec[base + (n - base) % pb]
                }
            },
        )
    }

    /// The free Jacobi matrix: `a == 1`, `b == 0`.
    pub fn free() -> Self {
        CoefficientModel::new("free", 1, |_| 1.0, |_| 0.0)
    }

    pub fn a(&self, n: usize) -> f64 {
        let v = (self.a)(n);
        assert!(v > 0.0, "model {:?}: a({n}) = {v} is not positive", self.label);
        v
    }

    pub fn b(&self, n: usize) -> f64 {
        (self.b)(n)
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for CoefficientModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientModel")
            .field("label", &self.label)
            .field("period", &self.period)
            .finish()
    }
}

/// Coefficients truncated at `L` and continued `N`-periodically: for
/// `n >= L + N` the block `a_L, ..., a_{L+N-1}` repeats. The resulting
/// operator is eventually periodic and exactly solvable, which is what makes
/// the periodization cross-check possible.
#[derive(Clone, Debug)]
pub struct TruncatedModel {
    base: CoefficientModel,
    truncation: usize,
    period: usize,
}

impl TruncatedModel {
    pub fn new(base: CoefficientModel, truncation: usize, period: usize) -> Self {
        assert!(period >= 1, "period must be positive");
        TruncatedModel {
            base,
            truncation,
            period,
        }
    }

    pub fn a(&self, n: usize) -> f64 {
        self.base.a(self.map_index(n))
    }

    pub fn b(&self, n: usize) -> f64 {
        self.base.b(self.map_index(n))
    }

    fn map_index(&self, n: usize) -> usize {
        if n < self.truncation + self.period {
            n
        } else {
            self.truncation + (n - self.truncation) % self.period
        }
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// View as a plain model so the recurrence helpers apply unchanged.
    pub fn to_model(&self) -> CoefficientModel {
        let m = self.clone();
        let m2 = self.clone();
        CoefficientModel::new(
            format!("{}[truncated at {}]", self.base.label(), self.truncation),
            self.period,
            move |n| m.a(n),
            move |n| m2.b(n),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_adapter_repeats_last_period() {
        let m = CoefficientModel::from_slices("two", 2, &[2.0, 1.0, 2.0, 1.0], &[0.0; 4]);
        for n in 0..20 {
            assert_eq!(m.a(n), if n % 2 == 0 { 2.0 } else { 1.0 });
        }
    }

    #[test]
    fn truncation_freezes_tail_block() {
        // a_n = n + 1 truncated at L = 3 with N = 2 gives
        // 1 2 3 4 5 | 4 5 4 5 ...
        let base = CoefficientModel::new("linear", 1, |n| (n + 1) as f64, |_| 0.0);
        let t = TruncatedModel::new(base, 3, 2);
        let expect = [1.0, 2.0, 3.0, 4.0, 5.0, 4.0, 5.0, 4.0, 5.0];
        for (n, e) in expect.iter().enumerate() {
            assert_eq!(t.a(n), *e);
        }
    }

    #[test]
    fn truncation_is_identity_for_periodic_models() {
        let base = CoefficientModel::from_slices("per", 2, &[2.0, 1.0], &[0.5, -0.5]);
        let t = TruncatedModel::new(base.clone(), 10, 2);
        for n in 0..64 {
            assert_eq!(t.a(n), base.a(n));
            assert_eq!(t.b(n), base.b(n));
        }
    }
}
