//! Generating functions of the Own/Other walk.
//!
//! [`series`] is the truncated power-series engine. This module holds the
//! scalar functions `λ, μ, v, w_±², Δ_±, φ`, the closed-form `B` functions
//! and the closed-form origin return. [`transfer`] holds the exact
//! weight-matrix path sum and the first-return (renewal) series.

pub mod series;
pub mod transfer;

use serde::{Deserialize, Serialize};

use crate::coin::{c, direction_weights, CMatrix, CoinParams, ReducedCoinParams, C64};
use crate::error::{Error, Result};

pub use series::{MatrixSeries, Series};
pub use transfer::{
    compare_with_simulator, first_return_series, state_genfunc_coeff, transfer_path_sum, ComparisonRow,
    GenfuncReport, RenewalSeries, TransferPathSum,
};

/// Default truncation order of generating-function series.
pub const DEFAULT_ORDER: usize = 64;

/// Which form of `μ(z)` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum MuVariant {
    /// `μ(z) = (d² λ(z) − Δ² z) / c²`
    #[default]
    DeltaSquared,
    /// `μ(z) = (d² λ(z) − Δ z) / c²`
    SingleDelta,
}

/// Both roots of `Δ c̄ z λ² − (Δ z² + 1) λ + c z = 0`, small root first.
///
/// The small root is formed as `2cz / q` with `q` the larger of
/// `Δz² + 1 ± √(…)`, which avoids cancellation near `z = 0`.
pub fn lambda_roots(z: C64, p: &CoinParams) -> [C64; 2] {
    let delta = p.delta();
    let cc = p.c;
    let disc = delta * delta * z.powi(4) + delta * 2.0 * (1.0 - 2.0 * cc.norm_sqr()) * z * z + 1.0;
    let s = disc.sqrt();
    let base = delta * z * z + 1.0;
    let q = if (base + s).norm() >= (base - s).norm() {
        base + s
    } else {
        base - s
    };
    let small = cc * z * 2.0 / q;
    let large = q / (delta * cc.conj() * z * 2.0);
    [small, large]
}

/// `λ(z)`, the root of the characteristic quadratic that vanishes at
/// `z = 0` (so `λ(z)/z → c`).
pub fn lambda_eval(z: C64, p: &CoinParams) -> Result<C64> {
    if z.norm() == 0.0 {
        return Ok(c(0.0));
    }
    let [small, large] = lambda_roots(z, p);
    if small.norm() >= 1.0 && large.norm() >= 1.0 {
        return Err(Error::BranchAmbiguity(format!("{z}")));
    }
    Ok(small)
}

/// Residual of the characteristic quadratic at `(z, λ)`.
pub fn lambda_residual(z: C64, lambda: C64, p: &CoinParams) -> f64 {
    let delta = p.delta();
    (delta * p.c.conj() * z * lambda * lambda - (delta * z * z + 1.0) * lambda + p.c * z).norm()
}

/// Series of `λ(z)` by the fixed point `λ = (cz + Δc̄zλ²)/(1 + Δz²)`; each
/// round fixes at least one more coefficient.
pub fn lambda_series_fixed_point(p: &CoinParams, order: usize) -> Result<Series> {
    let delta = p.delta();
    let cz = Series::monomial(p.c, 1, order);
    let a = Series::monomial(delta * p.c.conj(), 1, order);
    let denom = Series::one(order).add(&Series::monomial(delta, 2, order))?.inv()?;
    let mut lam = Series::zero(order);
    for _ in 0..=order {
        lam = cz.add(&a.mul(&lam.mul(&lam)?)?)?.mul(&denom)?;
    }
    Ok(lam)
}

/// Series of `λ(z)` from the closed form with a series square root.
/// Exact through order `T − 1`.
pub fn lambda_series_closed(p: &CoinParams, order: usize) -> Result<Series> {
    let delta = p.delta();
    let t = order + 1;
    let disc = Series::one(t)
        .add(&Series::monomial(delta * 2.0 * (1.0 - 2.0 * p.c.norm_sqr()), 2, t))?
        .add(&Series::monomial(delta * delta, 4, t))?;
    let num = Series::one(t).add(&Series::monomial(delta, 2, t))?.sub(&disc.sqrt()?)?;
    let lam = num.shift_down()?.scale((delta * p.c.conj() * 2.0).inv());
    Ok(Series::from_coeffs(lam.coeffs()[..=order].to_vec(), order))
}

fn max_lambda_on_circle(p: &CoinParams, r: f64, samples: usize) -> f64 {
    (0..samples)
        .map(|i| {
            let z = C64::from_polar(r, std::f64::consts::TAU * i as f64 / samples as f64);
            lambda_roots(z, p)[0].norm()
        })
        .fold(0.0, f64::max)
}

/// Largest `r < 1` with `max_{|z| = r} |λ(z)| < 1`, by bisection.
pub fn radius_r0(p: &CoinParams) -> f64 {
    const SAMPLES: usize = 512;
    let cap = 1.0 - 1e-9;
    if max_lambda_on_circle(p, cap, SAMPLES) < 1.0 {
        return cap;
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if max_lambda_on_circle(p, mid, SAMPLES) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Scalar functions of a coin with the radii `r0` and `r1 = min(|c²|, r0)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GenfuncScalars {
    pub coin: CoinParams,
    pub r0: f64,
    pub r1: f64,
    pub mu_variant: MuVariant,
}

impl GenfuncScalars {
    pub fn new(coin: CoinParams) -> Self {
        let r0 = radius_r0(&coin);
        Self {
            coin,
            r0,
            r1: coin.c.norm_sqr().min(r0),
            mu_variant: MuVariant::default(),
        }
    }

    pub fn with_mu_variant(mut self, v: MuVariant) -> Self {
        self.mu_variant = v;
        self
    }

    pub fn lambda(&self, z: C64) -> Result<C64> {
        lambda_eval(z, &self.coin)
    }

    pub fn mu(&self, z: C64) -> Result<C64> {
        let p = &self.coin;
        let delta = p.delta();
        let dz = match self.mu_variant {
            MuVariant::DeltaSquared => delta * delta * z,
            MuVariant::SingleDelta => delta * z,
        };
        Ok((p.d * p.d * self.lambda(z)? - dz) / (p.c * p.c))
    }

    /// `v(z) = (1 + Δz²)² − 4Δ|a²|² z²`
    pub fn v(&self, z: C64) -> C64 {
        let delta = self.coin.delta();
        let a2 = self.coin.a.norm_sqr();
        (delta * z * z + 1.0).powi(2) - delta * 4.0 * a2 * a2 * z * z
    }

    /// `w_±² = ∓ c²(c̃² ± c²) / (c̃² Δ (c̃²|a²|² − c̃² ∓ c²))`
    pub fn w_sq(&self, plus: bool) -> C64 {
        let p = &self.coin;
        let c2 = p.c * p.c;
        let ct2 = p.ctilde * p.ctilde;
        let a2 = p.a.norm_sqr();
        let sg = if plus { 1.0 } else { -1.0 };
        -(c2 * (ct2 + c2 * sg)) * sg / (ct2 * p.delta() * (ct2 * a2 * a2 - ct2 - c2 * sg))
    }

    /// `Δ_±(z) = 2c²/c̃² ± 1 ∓ Δz²`
    pub fn delta_pm(&self, z: C64, plus: bool) -> C64 {
        let p = &self.coin;
        let sg = if plus { 1.0 } else { -1.0 };
        p.c * p.c * 2.0 / (p.ctilde * p.ctilde) + sg - p.delta() * z * z * sg
    }

    /// `φ(x, y; z)` with the undefined `η_±(z)` replaced by `Δ_±(z)`.
    pub fn phi(&self, x: i64, y: i64, z: C64) -> Result<C64> {
        let p = &self.coin;
        let ratio = p.d * p.d * self.lambda(z)? / (p.a * p.a);
        let sv = self.v(z).sqrt();
        let (wp, wm) = (self.w_sq(true), self.w_sq(false));
        let ct2 = p.ctilde * p.ctilde;
        let c2 = p.c * p.c;
        let num = ratio.powi((x + y - 2) as i32)
            * ct2.powi(3)
            * wp
            * wm
            * (self.delta_pm(z, true) + sv)
            * (self.delta_pm(z, false) - sv);
        let den = (ct2 * ct2 - c2 * c2) * 4.0 * (z * z - wp) * (z * z - wm);
        Ok(num / den)
    }

    /// Assumption labels attached to every output that uses `φ` or `μ`.
    pub fn assumption_flags(&self) -> Vec<String> {
        let mut f = vec!["eta_pm:=Delta_pm".to_string()];
        if self.mu_variant == MuVariant::SingleDelta {
            f.push("mu:Delta*z".into());
        }
        f
    }
}

/// The four `B` functions with closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BTag {
    PR,
    QU,
    PRPrime,
    QUPrime,
}

impl BTag {
    pub const ALL: [BTag; 4] = [BTag::PR, BTag::QU, BTag::PRPrime, BTag::QUPrime];

    pub fn name(self) -> &'static str {
        match self {
            BTag::PR => "p_R",
            BTag::QU => "q_U",
            BTag::PRPrime => "p'_R",
            BTag::QUPrime => "q'_U",
        }
    }
}

/// Closed-form `B^j((0,0) → (x,y); z)`; zero outside its support.
pub fn closed_form_b(tag: BTag, x: i64, y: i64, z: C64, p: &CoinParams) -> Result<C64> {
    let supported = match tag {
        BTag::PR => x >= 1 && y >= 0,
        BTag::QU => x >= 0 && y >= 1,
        BTag::PRPrime | BTag::QUPrime => x >= 0 && y >= 0,
    };
    if !supported {
        return Ok(c(0.0));
    }
    let lam = lambda_eval(z, p)?;
    let pow = (p.d * p.d * lam / (p.a * p.a)).powi((x + y) as i32);
    Ok(match tag {
        BTag::PR | BTag::QU => pow / (p.d * p.d),
        BTag::PRPrime | BTag::QUPrime => {
            let a2 = p.a * p.a;
            pow * (lam - a2 * z * z) / (a2 * p.c * p.c * z * z)
        }
    })
}

/// Closed-form origin return with its convergence diagnostics.
#[derive(Debug, Clone)]
pub struct OriginReturn {
    pub z: C64,
    pub matrix: CMatrix,
    /// estimates of the spectral radii of the two squared ratio matrices
    pub spectral_radius: [f64; 2],
    /// `‖P_L P′_R P̃_R B z² − Δz‖₂` and `‖P_D Q′_U Q̃_U B z² − Δz‖₂`
    pub bounds: [f64; 2],
}

fn spectral_radius_estimate(m: &CMatrix) -> f64 {
    // Gelfand: ‖M^(2^j)‖^(1/2^j) with rescaling at each squaring
    let mut a = m.clone();
    let mut log_scale = 0.0f64;
    let mut power = 1.0f64;
    for _ in 0..12 {
        let n = a.norm();
        if n == 0.0 {
            return 0.0;
        }
        a /= C64::new(n, 0.0);
        log_scale += n.ln() / power;
        a = &a * &a;
        power *= 2.0;
    }
    (log_scale + a.norm().max(f64::MIN_POSITIVE).ln() / power).exp()
}

fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// `Σ_τ Ξ̃((0,0) → (0,0); τ) z^τ` summed over returns in geometric form.
pub fn origin_return_genfunc(z: C64, p: &CoinParams, r: &ReducedCoinParams) -> Result<OriginReturn> {
    let w = direction_weights(p, r);
    let n = w.p_l.nrows();
    let id = CMatrix::identity(n, n);
    let ct2 = p.ctilde * p.ctilde;
    let beta_z2 = if z.norm() == 0.0 {
        c(0.0)
    } else {
        closed_form_b(BTag::PRPrime, 0, 0, z, p)? * z * z
    };
    let xp = &w.p_l * &w.p_r_prime * &w.p_r_tilde * beta_z2;
    let xq = &w.p_d * &w.q_u_prime * &w.q_u_tilde * beta_z2;
    let delta_z = id.clone() * (p.delta() * z);
    let bounds = [spectral_norm(&(&xp - &delta_z)), spectral_norm(&(&xq - &delta_z))];
    let mut radii = [0.0; 2];
    let mut sums = Vec::new();
    for (i, x) in [xp, xq].into_iter().enumerate() {
        let y = x * ct2;
        let y2 = &y * &y;
        radii[i] = spectral_radius_estimate(&y2);
        if radii[i] >= 1.0 {
            return Err(Error::NonConvergent(radii[i]));
        }
        let inv = (&id - &y2)
            .try_inverse()
            .ok_or(Error::NonConvergent(radii[i]))?;
        sums.push(y * inv / ct2);
    }
    let matrix = &sums[0] * &w.p_r_tilde + &sums[1] * &w.q_u_tilde + id;
    Ok(OriginReturn {
        z,
        matrix,
        spectral_radius: radii,
        bounds,
    })
}
