//! Real and complex 2x2 matrices.
//!
//! Everything in this crate happens in `GL(2)`, so the matrices are plain
//! structs with unrolled arithmetic instead of a linear-algebra dependency.
//! The discriminant `discr X = (tr X)^2 - 4 det X` decides ellipticity: a
//! negative discriminant means a complex-conjugate pair of eigenvalues.

use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    /// The symplectic rotation `E = [[0, -1], [1, 0]]` entering the
    /// quadratic form of the shifted Turán determinants.
    pub const E: Mat2 = Mat2::new(0.0, -1.0, 1.0, 0.0);

    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Mat2 { m11, m12, m21, m22 }
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn discr(&self) -> f64 {
        let t = self.trace();
        t * t - 4.0 * self.det()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.m11 * self.m11 + self.m12 * self.m12 + self.m21 * self.m21 + self.m22 * self.m22)
            .sqrt()
    }

    pub fn inverse(&self) -> Mat2 {
        let d = self.det();
        assert!(d != 0.0, "singular 2x2 matrix");
        Mat2::new(self.m22 / d, -self.m12 / d, -self.m21 / d, self.m11 / d)
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }

    pub fn apply(&self, v: (f64, f64)) -> (f64, f64) {
        (
            self.m11 * v.0 + self.m12 * v.1,
            self.m21 * v.0 + self.m22 * v.1,
        )
    }

    pub fn to_complex(&self) -> CMat2 {
        CMat2::new(
            Complex64::new(self.m11, 0.0),
            Complex64::new(self.m12, 0.0),
            Complex64::new(self.m21, 0.0),
            Complex64::new(self.m22, 0.0),
        )
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 * rhs.m11 + self.m12 * rhs.m21,
            self.m11 * rhs.m12 + self.m12 * rhs.m22,
            self.m21 * rhs.m11 + self.m22 * rhs.m21,
            self.m21 * rhs.m12 + self.m22 * rhs.m22,
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, rhs: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 + rhs.m11,
            self.m12 + rhs.m12,
            self.m21 + rhs.m21,
            self.m22 + rhs.m22,
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;

    fn sub(self, rhs: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 - rhs.m11,
            self.m12 - rhs.m12,
            self.m21 - rhs.m21,
            self.m22 - rhs.m22,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat2 {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl CMat2 {
    pub const fn new(m11: Complex64, m12: Complex64, m21: Complex64, m22: Complex64) -> Self {
        CMat2 { m11, m12, m21, m22 }
    }

    pub fn identity() -> CMat2 {
        Mat2::IDENTITY.to_complex()
    }

    pub fn diag(a: Complex64, b: Complex64) -> CMat2 {
        CMat2::new(a, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), b)
    }

    pub fn trace(&self) -> Complex64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn norm(&self) -> f64 {
        (self.m11.norm_sqr() + self.m12.norm_sqr() + self.m21.norm_sqr() + self.m22.norm_sqr())
            .sqrt()
    }

    pub fn inverse(&self) -> CMat2 {
        let d = self.det();
        assert!(d.norm() != 0.0, "singular complex 2x2 matrix");
        CMat2::new(self.m22 / d, -self.m12 / d, -self.m21 / d, self.m11 / d)
    }

    pub fn conj(&self) -> CMat2 {
        CMat2::new(
            self.m11.conj(),
            self.m12.conj(),
            self.m21.conj(),
            self.m22.conj(),
        )
    }

    pub fn scale(&self, s: Complex64) -> CMat2 {
        CMat2::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }
}

impl Mul for CMat2 {
    type Output = CMat2;

    fn mul(self, rhs: CMat2) -> CMat2 {
        CMat2::new(
            self.m11 * rhs.m11 + self.m12 * rhs.m21,
            self.m11 * rhs.m12 + self.m12 * rhs.m22,
            self.m21 * rhs.m11 + self.m22 * rhs.m21,
            self.m21 * rhs.m12 + self.m22 * rhs.m22,
        )
    }
}

impl Add for CMat2 {
    type Output = CMat2;

    fn add(self, rhs: CMat2) -> CMat2 {
        CMat2::new(
            self.m11 + rhs.m11,
            self.m12 + rhs.m12,
            self.m21 + rhs.m21,
            self.m22 + rhs.m22,
        )
    }
}

impl Sub for CMat2 {
    type Output = CMat2;

    fn sub(self, rhs: CMat2) -> CMat2 {
        CMat2::new(
            self.m11 - rhs.m11,
            self.m12 - rhs.m12,
            self.m21 - rhs.m21,
            self.m22 - rhs.m22,
        )
    }
}
