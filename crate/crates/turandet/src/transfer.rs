//! Transfer matrices and the three-term recurrence.
//!
//! A generalized eigenvector `u` associated with `x` satisfies
//! `a_{n-1} u_{n-1} + b_n u_n + a_n u_{n+1} = x u_n`, advanced one index at a
//! time by
//!
//! ```text
//! B_n(x) = |      0            1      |
//!          | -a_{n-1}/a_n  (x-b_n)/a_n|
//! ```
//!
//! and `N` indices at a time by the ordered product
//! `X_n = B_{n+N-1} ... B_n` (larger index on the left; products here always
//! descend from left to right).

use crate::mat2::Mat2;
use crate::model::CoefficientModel;
use crate::scaled::Scaled;

/// One-step transfer matrix `B_n(x)`; requires `n >= 1` since it reads
/// `a_{n-1}`.
pub fn transfer(model: &CoefficientModel, n: usize, x: f64) -> Mat2 {
    assert!(n >= 1, "transfer matrix needs n >= 1");
    let an = model.a(n);
    Mat2::new(0.0, 1.0, -model.a(n - 1) / an, (x - model.b(n)) / an)
}

/// `N`-step product `X_n = B_{n+N-1} ... B_n`.
pub fn n_step(model: &CoefficientModel, n: usize, block: usize, x: f64) -> Mat2 {
    assert!(n >= 1, "n_step needs n >= 1");
    let mut acc = Mat2::IDENTITY;
    for j in n..n + block {
        acc = transfer(model, j, x) * acc;
    }
    acc
}

/// Pair `(u_{n-1}, u_n)` of a generalized eigenvector with a scaling ledger:
/// the unscaled pair is `exp(log_scale) * (u_prev, u_cur)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenvectorState {
    pub n: usize,
    pub u_prev: f64,
    pub u_cur: f64,
    pub log_scale: f64,
}

const RENORM_HIGH: f64 = 1.3407807929942597e154; // 2^512
const RENORM_LOW: f64 = 7.458340731200207e-155; // 2^-512

impl EigenvectorState {
    /// Starts from the initial data `alpha = (u_0, u_1)`.
    pub fn from_initial(alpha: (f64, f64)) -> Self {
        assert!(
            alpha.0 != 0.0 || alpha.1 != 0.0,
            "generalized eigenvectors are nonzero"
        );
        EigenvectorState {
            n: 1,
            u_prev: alpha.0,
            u_cur: alpha.1,
            log_scale: 0.0,
        }
    }

    /// The pair as scaled values.
    pub fn pair(&self) -> (Scaled, Scaled) {
        (
            Scaled::new(self.u_prev, self.log_scale),
            Scaled::new(self.u_cur, self.log_scale),
        )
    }

    fn renormalize(&mut self) {
        // hypot keeps the check overflow-safe near the rescale bound.
        let norm = self.u_prev.hypot(self.u_cur);
        if norm > RENORM_HIGH || norm < RENORM_LOW {
            self.u_prev /= norm;
            self.u_cur /= norm;
            self.log_scale += norm.ln();
        }
    }
}

/// Applies `steps` transfer matrices, rescaling the pair to unit norm
/// whenever it leaves `[2^-512, 2^512]`.
pub fn propagate(
    model: &CoefficientModel,
    state: EigenvectorState,
    x: f64,
    steps: usize,
) -> EigenvectorState {
    let mut s = state;
    for _ in 0..steps {
        let b = transfer(model, s.n, x);
        let (p, c) = (s.u_prev, s.u_cur);
        s.u_prev = c;
        s.u_cur = b.m21 * p + b.m22 * c;
        s.n += 1;
        s.renormalize();
    }
    s
}

/// Orthonormal polynomials `p_0(x) .. p_{n_max}(x)` with the scaling ledger:
/// `p_0 = 1`, `p_1 = (x - b_0)/a_0`, then
/// `a_n p_{n+1} + b_n p_n + a_{n-1} p_{n-1} = x p_n`.
pub fn eval_polynomials(model: &CoefficientModel, x: f64, n_max: usize) -> Vec<Scaled> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(Scaled::from_f64(1.0));
    if n_max == 0 {
        return out;
    }
    let mut state = EigenvectorState::from_initial((1.0, (x - model.b(0)) / model.a(0)));
    out.push(Scaled::new(state.u_cur, state.log_scale));
    for _ in 1..n_max {
        state = propagate(model, state, x, 1);
        out.push(Scaled::new(state.u_cur, state.log_scale));
    }
    out
}

/// Wronskian `a_n (u_n v_{n+1} - u_{n+1} v_n)` of two states at the same
/// index, as a scaled value. Constant in `n` for solutions of the same
/// recurrence.
pub fn wronskian(model: &CoefficientModel, u: &EigenvectorState, v: &EigenvectorState) -> Scaled {
    assert_eq!(u.n, v.n, "states must sit at the same index");
    // state holds (u_{n-1}, u_n); the Wronskian at n-1 uses exactly these.
    let raw = u.u_prev * v.u_cur - u.u_cur * v.u_prev;
    Scaled::new(raw * model.a(u.n - 1), u.log_scale + v.log_scale).normalized()
}
