//! Scaled floating-point values.
//!
//! Polynomial and eigenvector sequences of Jacobi matrices grow or decay
//! geometrically outside the spectrum and like powers of `n` for unbounded
//! coefficient families, so every value produced by the recurrences is kept
//! as a pair `(mantissa, log_scale)` representing `mantissa * exp(log_scale)`.

/// A real number stored as `mantissa * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: f64,
    pub log_scale: f64,
}

/// Mantissas are folded into the exponent once they leave `[2^-512, 2^512]`.
pub const RESCALE_LIMIT: f64 = 1.3407807929942597e154; // 2^512

impl Scaled {
    pub fn new(mantissa: f64, log_scale: f64) -> Self {
        Scaled {
            mantissa,
            log_scale,
        }
    }

    pub fn from_f64(value: f64) -> Self {
        Scaled {
            mantissa: value,
            log_scale: 0.0,
        }
    }

    pub const ZERO: Scaled = Scaled {
        mantissa: 0.0,
        log_scale: 0.0,
    };

    /// The plain value; overflows to infinity when the exponent is too large.
    pub fn value(self) -> f64 {
        self.mantissa * self.log_scale.exp()
    }

    /// Natural log of the absolute value (`-inf` for zero).
    pub fn log_abs(self) -> f64 {
        self.mantissa.abs().ln() + self.log_scale
    }

    pub fn is_zero(self) -> bool {
        self.mantissa == 0.0
    }

    /// Renormalizes the mantissa into `[1/RESCALE_LIMIT, RESCALE_LIMIT]`.
    pub fn normalized(self) -> Self {
        let a = self.mantissa.abs();
        if a == 0.0 {
            return Scaled::ZERO;
        }
        if a > RESCALE_LIMIT || a < 1.0 / RESCALE_LIMIT {
            let shift = a.ln();
            Scaled {
                mantissa: self.mantissa / shift.exp(),
                log_scale: self.log_scale + shift,
            }
        } else {
            self
        }
    }

    pub fn mul(self, other: Scaled) -> Scaled {
        Scaled {
            mantissa: self.mantissa * other.mantissa,
            log_scale: self.log_scale + other.log_scale,
        }
        .normalized()
    }

    pub fn scale_f64(self, factor: f64) -> Scaled {
        Scaled {
            mantissa: self.mantissa * factor,
            log_scale: self.log_scale,
        }
        .normalized()
    }

    /// Difference computed after aligning both terms to the larger exponent.
    pub fn sub(self, other: Scaled) -> Scaled {
        if self.is_zero() {
            return Scaled::new(-other.mantissa, other.log_scale).normalized();
        }
        if other.is_zero() {
            return self.normalized();
        }
        let common = self.log_scale.max(other.log_scale);
        let a = self.mantissa * (self.log_scale - common).exp();
        let b = other.mantissa * (other.log_scale - common).exp();
        Scaled {
            mantissa: a - b,
            log_scale: common,
        }
        .normalized()
    }
}
