//! Bundled coefficient families with known limit behavior.
//!
//! Each constructor produces a [`CoefficientModel`] whose `N`-step transfer
//! blocks converge to a closed-form limit matrix on the relevant bands, so
//! the numerical pipeline can be checked against exact targets.

use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::model::CoefficientModel;

/// Specification of a bundled family.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    /// Exactly `N`-periodic coefficients `a_n = alpha_{n mod N}`,
    /// `b_n = beta_{n mod N}`.
    Constant { alpha: Vec<f64>, beta: Vec<f64> },
    /// `a_n = alpha_{n mod N} + pert_a/(n+1)`, likewise for `b`: a compact
    /// perturbation decaying fast enough for every smoothness order.
    AsymptoticallyPeriodic {
        alpha: Vec<f64>,
        beta: Vec<f64>,
        pert_a: f64,
        pert_b: f64,
    },
    /// Periodically modulated unbounded entries
    /// `a_n = alpha_{n mod N} (n+1)^tau`, `b_n = beta_{n mod N} (n+1)^tau`.
    PeriodicModulation {
        alpha: Vec<f64>,
        beta: Vec<f64>,
        tau: f64,
    },
    /// Interleaving of a bounded `N`-periodic part with two unbounded slots
    /// per block of `N + 2`:
    /// `a_{k(N+2)+i} = alpha_{(kN+i) mod N}` for `i < N` and
    /// `a_{k(N+2)+i} = c_{2k+i-N}` with `c_m = (m+1)^growth` for
    /// `i in {N, N+1}`; `b` vanishes on the unbounded slots.
    Blend {
        alpha: Vec<f64>,
        beta: Vec<f64>,
        growth: f64,
    },
    /// `a == 1`, `b_n = cos(n^gamma) / log(n+2)`: slowly oscillating but
    /// neither of bounded variation nor in any `l^p`.
    Oscillating { gamma: f64 },
    /// Finite arrays, extended periodically past their end.
    Custom {
        a: Vec<f64>,
        b: Vec<f64>,
        period: usize,
    },
}

impl FamilySpec {
    /// Effective period of the generated coefficients (`N + 2` for blends).
    pub fn effective_period(&self) -> usize {
        match self {
            FamilySpec::Constant { alpha, .. }
            | FamilySpec::AsymptoticallyPeriodic { alpha, .. }
            | FamilySpec::PeriodicModulation { alpha, .. } => alpha.len(),
            FamilySpec::Blend { alpha, .. } => alpha.len() + 2,
            FamilySpec::Oscillating { .. } => 1,
            FamilySpec::Custom { period, .. } => *period,
        }
    }
}

fn validate_periodic(alpha: &[f64], beta: &[f64]) -> Result<()> {
    if alpha.is_empty() || alpha.len() != beta.len() {
        return Err(Error::InvalidFamily {
            reason: format!(
                "alpha and beta must be nonempty and equally long, got {} and {}",
                alpha.len(),
                beta.len()
            ),
        });
    }
    if let Some(bad) = alpha.iter().find(|&&v| v <= 0.0) {
        return Err(Error::InvalidFamily {
            reason: format!("alpha entries must be positive, got {bad}"),
        });
    }
    Ok(())
}

/// Builds the coefficient model for a family specification.
pub fn make_family(spec: &FamilySpec) -> Result<CoefficientModel> {
    match spec {
        FamilySpec::Constant { alpha, beta } => {
            validate_periodic(alpha, beta)?;
            let (a, b) = (alpha.clone(), beta.clone());
            let n = a.len();
            Ok(CoefficientModel::new(
                "constant",
                n,
                move |m| a[m % n],
                move |m| b[m % n],
            ))
        }
        FamilySpec::AsymptoticallyPeriodic {
            alpha,
            beta,
            pert_a,
            pert_b,
        } => {
            validate_periodic(alpha, beta)?;
            let amin = alpha.iter().cloned().fold(f64::INFINITY, f64::min);
            if *pert_a < 0.0 && -*pert_a >= amin {
                return Err(Error::InvalidFamily {
                    reason: format!("perturbation {pert_a} would make some a_n nonpositive"),
                });
            }
            let (a, b) = (alpha.clone(), beta.clone());
            let n = a.len();
            let (pa, pb) = (*pert_a, *pert_b);
            Ok(CoefficientModel::new(
                "asymptotically-periodic",
                n,
                move |m| a[m % n] + pa / (m + 1) as f64,
                move |m| b[m % n] + pb / (m + 1) as f64,
            ))
        }
        FamilySpec::PeriodicModulation { alpha, beta, tau } => {
            validate_periodic(alpha, beta)?;
            if !(*tau > 0.0 && *tau <= 1.0) {
                return Err(Error::InvalidFamily {
                    reason: format!("modulation exponent tau = {tau} must lie in (0, 1]"),
                });
            }
            let (a, b) = (alpha.clone(), beta.clone());
            let n = a.len();
            let t = *tau;
            Ok(CoefficientModel::new(
                "periodic-modulation",
                n,
                move |m| a[m % n] * ((m + 1) as f64).powf(t),
                move |m| b[m % n] * ((m + 1) as f64).powf(t),
            ))
        }
        FamilySpec::Blend { alpha, beta, growth } => {
            validate_periodic(alpha, beta)?;
            if !(*growth > 0.0 && *growth <= 1.0) {
                return Err(Error::InvalidFamily {
                    reason: format!("blend growth exponent {growth} must lie in (0, 1]"),
                });
            }
            let (a, b) = (alpha.clone(), beta.clone());
            let n = a.len();
            let tau = *growth;
            Ok(CoefficientModel::new(
                "blend",
                n + 2,
                move |m| {
                    let (k, i) = (m / (n + 2), m % (n + 2));
                    if i < n {
                        a[i]
                    } else {
                        let slot = 2 * k + (i - n);
                        ((slot + 1) as f64).powf(tau)
                    }
                },
                move |m| {
                    let i = m % (n + 2);
                    if i < n {
                        b[i]
                    } else {
                        0.0
                    }
                },
            ))
        }
        FamilySpec::Oscillating { gamma } => {
            if !(*gamma > 0.0 && *gamma < 1.0) {
                return Err(Error::InvalidFamily {
                    reason: format!("oscillation exponent gamma = {gamma} must lie in (0, 1)"),
                });
            }
            let g = *gamma;
            Ok(CoefficientModel::new(
                "oscillating",
                1,
                |_| 1.0,
                move |m| (m as f64).powf(g).cos() / ((m + 2) as f64).ln(),
            ))
        }
        FamilySpec::Custom { a, b, period } => {
            if *period == 0 || a.len() < *period || b.len() < *period {
                return Err(Error::InvalidFamily {
                    reason: "custom arrays must cover at least one period".into(),
                });
            }
            if let Some(bad) = a.iter().find(|&&v| v <= 0.0) {
                return Err(Error::InvalidFamily {
                    reason: format!("custom a entries must be positive, got {bad}"),
                });
            }
            Ok(CoefficientModel::from_slices("custom", *period, a, b))
        }
    }
}

/// Periodic block matrix with wrapped indices:
/// `[[0, 1], [-alpha_{j-1}/alpha_j, (x - beta_j)/alpha_j]]`.
fn periodic_block(alpha: &[f64], beta: &[f64], j: i64, x: f64) -> Mat2 {
    let n = alpha.len() as i64;
    let aj = alpha[j.rem_euclid(n) as usize];
    let ajm1 = alpha[(j - 1).rem_euclid(n) as usize];
    let bj = beta[j.rem_euclid(n) as usize];
    Mat2::new(0.0, 1.0, -ajm1 / aj, (x - bj) / aj)
}

/// Descending product of periodic blocks over `j = lo..=hi`.
fn block_product(alpha: &[f64], beta: &[f64], lo: i64, hi: i64, x: f64) -> Mat2 {
    let mut acc = Mat2::IDENTITY;
    for j in lo..=hi {
        acc = periodic_block(alpha, beta, j, x) * acc;
    }
    acc
}

/// Closed-form limit of the transfer blocks `X_{nN'+i}(x)` where a closed
/// form exists. For periodic modulations the limit is `x`-independent; for
/// blends only residues `1..=N` of the `(N+2)`-block converge.
pub fn limit_matrix(spec: &FamilySpec, residue: usize, x: f64) -> Result<Mat2> {
    match spec {
        FamilySpec::Constant { alpha, beta }
        | FamilySpec::AsymptoticallyPeriodic { alpha, beta, .. } => {
            let n = alpha.len() as i64;
            let i = residue as i64;
            Ok(block_product(alpha, beta, i, n + i - 1, x))
        }
        FamilySpec::PeriodicModulation { alpha, beta, .. } => {
            let n = alpha.len() as i64;
            let i = residue as i64;
            Ok(block_product(alpha, beta, i, n + i - 1, 0.0))
        }
        FamilySpec::Blend { alpha, beta, .. } => {
            let n = alpha.len();
            if residue < 1 || residue > n {
                return Err(Error::InvalidFamily {
                    reason: format!(
                        "blend limit exists for residues 1..={n}, got {residue}"
                    ),
                });
            }
            let i = residue as i64;
            let c = Mat2::new(
                0.0,
                -1.0,
                alpha[n - 1] / alpha[0],
                -(2.0 * x - beta[0]) / alpha[0],
            );
            let left = block_product(alpha, beta, 1, i - 1, x);
            let right = block_product(alpha, beta, i, n as i64 - 1, x);
            Ok(left * c * right)
        }
        FamilySpec::Oscillating { .. } => Ok(Mat2::new(0.0, 1.0, -1.0, x)),
        FamilySpec::Custom { .. } => Err(Error::InvalidFamily {
            reason: "custom families expose no closed-form limit".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::n_step;

    #[test]
    fn constant_unit_family_is_free() {
        let m = make_family(&FamilySpec::Constant {
            alpha: vec![1.0],
            beta: vec![0.0],
        })
        .unwrap();
        for n in 0..10 {
            assert_eq!(m.a(n), 1.0);
            assert_eq!(m.b(n), 0.0);
        }
    }

    #[test]
    fn intro_values_by_direct_substitution() {
        let m = make_family(&FamilySpec::Oscillating { gamma: 0.5 }).unwrap();
        assert_eq!(m.a(17), 1.0);
        let expect = 3.0f64.sqrt().cos() / 5.0f64.ln();
        assert!((m.b(3) - expect).abs() < 1e-15);
    }

    #[test]
    fn blend_layout_matches_interleaving() {
        // N = 1, alpha = 1, beta = 0, c_m = m + 1: the first twelve entries
        // enumerate as (a~_0, c_0, c_1, a~_1, c_2, c_3, ...).
        let m = make_family(&FamilySpec::Blend {
            alpha: vec![1.0],
            beta: vec![0.0],
            growth: 1.0,
        })
        .unwrap();
        let expect = [1., 1., 2., 1., 3., 4., 1., 5., 6., 1., 7., 8.];
        for (n, e) in expect.iter().enumerate() {
            assert_eq!(m.a(n), *e, "a({n})");
            assert_eq!(m.b(n), 0.0);
        }
        assert_eq!(m.period(), 3);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(make_family(&FamilySpec::Oscillating { gamma: 1.0 }).is_err());
        assert!(make_family(&FamilySpec::Oscillating { gamma: 0.0 }).is_err());
        assert!(make_family(&FamilySpec::PeriodicModulation {
            alpha: vec![1.0],
            beta: vec![0.0],
            tau: 1.5,
        })
        .is_err());
        assert!(make_family(&FamilySpec::Constant {
            alpha: vec![-1.0],
            beta: vec![0.0],
        })
        .is_err());
        assert!(make_family(&FamilySpec::Constant {
            alpha: vec![1.0, 2.0],
            beta: vec![0.0],
        })
        .is_err());
    }

    #[test]
    fn limit_constant_single_period() {
        let spec = FamilySpec::Constant {
            alpha: vec![1.0],
            beta: vec![0.0],
        };
        let x = 0.8;
        let l = limit_matrix(&spec, 0, x).unwrap();
        assert_eq!(l, Mat2::new(0.0, 1.0, -1.0, x));
    }

    #[test]
    fn limit_blend_single_period() {
        let spec = FamilySpec::Blend {
            alpha: vec![1.0],
            beta: vec![0.0],
            growth: 0.5,
        };
        for &x in &[-0.7, 0.0, 0.4] {
            let l = limit_matrix(&spec, 1, x).unwrap();
            assert_eq!(l, Mat2::new(0.0, -1.0, 1.0, -2.0 * x));
        }
        assert!(limit_matrix(&spec, 0, 0.0).is_err());
        assert!(limit_matrix(&spec, 2, 0.0).is_err());
    }

    #[test]
    fn limit_modulation_is_x_independent() {
        let spec = FamilySpec::PeriodicModulation {
            alpha: vec![2.0, 1.0],
            beta: vec![0.3, -0.2],
            tau: 0.5,
        };
        let l0 = limit_matrix(&spec, 0, 0.0).unwrap();
        let l1 = limit_matrix(&spec, 0, 5.0).unwrap();
        assert!((l0 - l1).norm() < 1e-15);
    }

    #[test]
    fn blocks_converge_to_limit_matrix() {
        // Last element is a per-family cap on the late deviation; the oscillating
        // family only decays like 1/log(n).
        let checks: Vec<(FamilySpec, usize, f64, f64)> = vec![
            (
                FamilySpec::AsymptoticallyPeriodic {
                    alpha: vec![2.0, 1.0],
                    beta: vec![0.0, 0.1],
                    pert_a: 0.5,
                    pert_b: -0.3,
                },
                1,
                1.6,
                1e-3,
            ),
            (
                FamilySpec::PeriodicModulation {
                    alpha: vec![1.0],
                    beta: vec![0.0],
                    tau: 0.5,
                },
                0,
                0.4,
                0.02,
            ),
            (
                FamilySpec::Blend {
                    alpha: vec![1.0],
                    beta: vec![0.0],
                    growth: 0.5,
                },
                1,
                0.3,
                0.02,
            ),
            (FamilySpec::Oscillating { gamma: 0.5 }, 0, 0.2, 0.15),
        ];
        for (spec, i, x, cap) in checks {
            let model = make_family(&spec).unwrap();
            let block = spec.effective_period();
            let target = limit_matrix(&spec, i, x).unwrap();
            let at = |n: usize| (n_step(&model, n * block + i, block, x) - target).norm();
            let early = at(4);
            let late = at(4000);
            assert!(
                late < early.max(1e-12) && late < cap,
                "{spec:?}: early {early}, late {late}"
            );
        }
    }

    #[test]
    fn blend_discriminants_agree_across_residues() {
        let spec = FamilySpec::Blend {
            alpha: vec![1.0, 1.5],
            beta: vec![0.2, -0.1],
            growth: 0.5,
        };
        let x = 0.25;
        let d1 = limit_matrix(&spec, 1, x).unwrap().discr();
        let d2 = limit_matrix(&spec, 2, x).unwrap().discr();
        assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn modulation_block_ratio_tends_to_one() {
        let spec = FamilySpec::PeriodicModulation {
            alpha: vec![2.0, 1.0],
            beta: vec![0.0, 0.0],
            tau: 0.5,
        };
        let m = make_family(&spec).unwrap();
        let block = 2;
        let i = 1;
        let ratio = |n: usize| m.a((n + 1) * block + i - 1) / m.a(n * block + i - 1);
        assert!((ratio(10_000) - 1.0).abs() < 1e-4);
        assert!((ratio(10_000) - 1.0).abs() < (ratio(100) - 1.0).abs());
    }
}
