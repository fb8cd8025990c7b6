//! Truncated power series with scalar or square-matrix coefficients.

use nalgebra::DVector;

use crate::coin::{c, CMatrix, C64};
use crate::error::{Error, Result};

/// `Σ_{n ≤ T} c_n z^n`; every operation is exact through order `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    coeffs: Vec<C64>,
}

impl Series {
    pub fn zero(order: usize) -> Self {
        Self {
            coeffs: vec![c(0.0); order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        Self::monomial(c(1.0), 0, order)
    }

    /// `a z^n`, truncated at `order`.
    pub fn monomial(a: C64, n: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if n <= order {
            s.coeffs[n] = a;
        }
        s
    }

    /// Pads with zeros or truncates to `order`.
    pub fn from_coeffs(mut coeffs: Vec<C64>, order: usize) -> Self {
        coeffs.resize(order + 1, c(0.0));
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> C64 {
        self.coeffs.get(n).copied().unwrap_or(c(0.0))
    }

    fn check(&self, other: &Series) -> Result<()> {
        if self.order() != other.order() {
            return Err(Error::Series(format!(
                "order mismatch: {} vs {}",
                self.order(),
                other.order()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Series) -> Result<Series> {
        self.check(other)?;
        Ok(Series {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Series) -> Result<Series> {
        self.check(other)?;
        Ok(Series {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, a: C64) -> Series {
        Series {
            coeffs: self.coeffs.iter().map(|z| z * a).collect(),
        }
    }

    pub fn mul(&self, other: &Series) -> Result<Series> {
        self.check(other)?;
        let t = self.order();
        let mut out = vec![c(0.0); t + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == c(0.0) {
                continue;
            }
            for (j, b) in other.coeffs[..=t - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(Series { coeffs: out })
    }

    /// Multiplicative inverse; needs a nonzero constant term.
    pub fn inv(&self) -> Result<Series> {
        let a0 = self.coeffs[0];
        if a0.norm() == 0.0 {
            return Err(Error::Series("inverse needs a nonzero constant term".into()));
        }
        let t = self.order();
        let mut out = vec![c(0.0); t + 1];
        out[0] = a0.inv();
        for n in 1..=t {
            let mut acc = c(0.0);
            for i in 1..=n {
                acc += self.coeffs[i] * out[n - i];
            }
            out[n] = -acc * out[0];
        }
        Ok(Series { coeffs: out })
    }

    pub fn div(&self, other: &Series) -> Result<Series> {
        self.mul(&other.inv()?)
    }

    /// Square root with constant term `√c_0` (principal branch); needs
    /// `c_0 ≠ 0`.
    pub fn sqrt(&self) -> Result<Series> {
        let a0 = self.coeffs[0];
        if a0.norm() == 0.0 {
            return Err(Error::Series("square root needs a nonzero constant term".into()));
        }
        let t = self.order();
        let mut s = vec![c(0.0); t + 1];
        s[0] = a0.sqrt();
        let two_s0 = s[0] * 2.0;
        for n in 1..=t {
            let mut acc = self.coeffs[n];
            for i in 1..n {
                acc -= s[i] * s[n - i];
            }
            s[n] = acc / two_s0;
        }
        Ok(Series { coeffs: s })
    }

    /// Square root by Newton iteration `s ← (s + a/s)/2`, doubling the
    /// number of correct coefficients per round.
    pub fn sqrt_newton(&self) -> Result<Series> {
        let a0 = self.coeffs[0];
        if a0.norm() == 0.0 {
            return Err(Error::Series("square root needs a nonzero constant term".into()));
        }
        let t = self.order();
        let mut s = Series::monomial(a0.sqrt(), 0, t);
        let mut correct = 1usize;
        while correct <= t {
            let q = self.div(&s)?;
            s = s.add(&q)?.scale(c(0.5));
            correct *= 2;
        }
        Ok(s)
    }

    /// Drops the constant term and divides by `z`; the result is padded at
    /// the top, so it is exact through order `T − 1`.
    pub fn shift_down(&self) -> Result<Series> {
        if self.coeffs[0].norm() != 0.0 {
            return Err(Error::Series("constant term is not zero".into()));
        }
        let mut v = self.coeffs[1..].to_vec();
        v.push(c(0.0));
        Ok(Series { coeffs: v })
    }

    /// Horner evaluation of the truncated sum.
    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(c(0.0), |acc, a| acc * z + a)
    }

    pub fn max_abs_diff(&self, other: &Series) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Power series with `dim × dim` complex matrix coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSeries {
    dim: usize,
    coeffs: Vec<CMatrix>,
}

impl MatrixSeries {
    pub fn zero(dim: usize, order: usize) -> Self {
        Self {
            dim,
            coeffs: vec![CMatrix::zeros(dim, dim); order + 1],
        }
    }

    pub fn identity(dim: usize, order: usize) -> Self {
        Self::monomial(CMatrix::identity(dim, dim), 0, order)
    }

    pub fn monomial(m: CMatrix, n: usize, order: usize) -> Self {
        let mut s = Self::zero(m.nrows(), order);
        if n <= order {
            s.coeffs[n] = m;
        }
        s
    }

    pub fn from_coeffs(mut coeffs: Vec<CMatrix>, dim: usize, order: usize) -> Self {
        coeffs.resize(order + 1, CMatrix::zeros(dim, dim));
        Self { dim, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &CMatrix {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    fn check(&self, other: &MatrixSeries) -> Result<()> {
        if self.order() != other.order() || self.dim != other.dim {
            return Err(Error::Series("matrix series shape mismatch".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &MatrixSeries) -> Result<MatrixSeries> {
        self.check(other)?;
        Ok(MatrixSeries {
            dim: self.dim,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &MatrixSeries) -> Result<MatrixSeries> {
        self.check(other)?;
        Ok(MatrixSeries {
            dim: self.dim,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn mul(&self, other: &MatrixSeries) -> Result<MatrixSeries> {
        self.check(other)?;
        let t = self.order();
        let mut out = vec![CMatrix::zeros(self.dim, self.dim); t + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.iter().all(|z| *z == c(0.0)) {
                continue;
            }
            for (j, b) in other.coeffs[..=t - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(MatrixSeries {
            dim: self.dim,
            coeffs: out,
        })
    }

    /// Left multiplication by a constant matrix.
    pub fn premul(&self, m: &CMatrix) -> MatrixSeries {
        MatrixSeries {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|a| m * a).collect(),
        }
    }

    /// Right multiplication by a constant matrix.
    pub fn postmul(&self, m: &CMatrix) -> MatrixSeries {
        MatrixSeries {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|a| a * m).collect(),
        }
    }

    /// Multiplication by `z^n`.
    pub fn shift_up(&self, n: usize) -> MatrixSeries {
        let t = self.order();
        let mut out = vec![CMatrix::zeros(self.dim, self.dim); t + 1];
        for i in 0..=t.saturating_sub(n) {
            if i + n <= t {
                out[i + n] = self.coeffs[i].clone();
            }
        }
        MatrixSeries {
            dim: self.dim,
            coeffs: out,
        }
    }

    /// Inverse; needs an invertible constant term.
    pub fn inv(&self) -> Result<MatrixSeries> {
        let a0inv = self.coeffs[0]
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Series("constant term is singular".into()))?;
        let t = self.order();
        let mut out = vec![CMatrix::zeros(self.dim, self.dim); t + 1];
        out[0] = a0inv.clone();
        for n in 1..=t {
            let mut acc = CMatrix::zeros(self.dim, self.dim);
            for i in 1..=n {
                acc += &self.coeffs[i] * &out[n - i];
            }
            out[n] = -(&a0inv * acc);
        }
        Ok(MatrixSeries {
            dim: self.dim,
            coeffs: out,
        })
    }

    /// Coefficient series of `M(z) v`.
    pub fn apply(&self, v: &DVector<C64>) -> Vec<DVector<C64>> {
        self.coeffs.iter().map(|m| m * v).collect()
    }

    pub fn eval(&self, z: C64) -> CMatrix {
        self.coeffs
            .iter()
            .rev()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, a| acc * z + a)
    }
}
