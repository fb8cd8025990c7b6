//! Coin and weight matrices: the tensor-square plane coin, Grover operators,
//! the reduced coins of the Own/Other walk and the direction weights used by
//! the generating-function machinery.
//!
//! Chirality order everywhere is `Left, Right, Down, Up`. Sixteen-dimensional
//! objects are ordered sector-major, `index = 4 * sector + chirality`, so that
//! `I_4 ⊗ X` acts on the chirality factor only.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

const PARAM_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Base 2×2 coin `[[a, b], [c, d]]` together with the origin phase `c̃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoinParams {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
    pub ctilde: C64,
    delta: C64,
}

impl CoinParams {
    pub fn new(a: C64, b: C64, c: C64, d: C64, ctilde: C64) -> Result<Self> {
        let m = CMatrix::from_row_slice(2, 2, &[a, b, c, d]);
        let report = is_unitary(&m, PARAM_TOL);
        if !report.pass {
            return Err(Error::InvalidCoin(format!(
                "base coin is not unitary (residual {:.3e})",
                report.residual
            )));
        }
        if (a * b * c * d).norm() < PARAM_TOL {
            return Err(Error::InvalidCoin("abcd = 0".into()));
        }
        if (ctilde.norm() - 1.0).abs() > PARAM_TOL {
            return Err(Error::InvalidCoin(format!(
                "|ctilde| = {} is not 1",
                ctilde.norm()
            )));
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            ctilde,
            delta: a * d - b * c,
        })
    }

    /// Hadamard base coin `(1/√2)[[1, 1], [1, -1]]`.
    pub fn hadamard(ctilde: C64) -> Result<Self> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(c(s), c(s), c(s), c(-s), ctilde)
    }

    /// General element of U(2):
    /// `e^{iα} [[e^{iβ} cos θ, e^{iγ} sin θ], [-e^{-iγ} sin θ, e^{-iβ} cos θ]]`.
    pub fn from_angles(alpha: f64, beta: f64, gamma: f64, theta: f64, ctilde: C64) -> Result<Self> {
        let g = C64::from_polar(1.0, alpha);
        let (s, co) = theta.sin_cos();
        Self::new(
            g * C64::from_polar(co, beta),
            g * C64::from_polar(s, gamma),
            -g * C64::from_polar(s, -gamma),
            g * C64::from_polar(co, -beta),
            ctilde,
        )
    }

    /// Determinant `Δ = ad − bc`.
    pub fn delta(&self) -> C64 {
        self.delta
    }

    pub fn with_ctilde(&self, ctilde: C64) -> Result<Self> {
        Self::new(self.a, self.b, self.c, self.d, ctilde)
    }

    pub fn base_matrix(&self) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[self.a, self.b, self.c, self.d])
    }
}

/// The pair `(a_k, b_k)` of the reduced coin for `k` quarter planes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedCoinParams {
    pub k: usize,
    pub a_k: f64,
    pub b_k: f64,
}

impl ReducedCoinParams {
    pub fn new(k: usize, a_k: f64, b_k: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let norm = a_k * a_k + (k as f64 - 1.0) * b_k * b_k;
        if (norm - 1.0).abs() > PARAM_TOL {
            return Err(Error::InvalidParameter(format!(
                "a_k^2 + (k-1) b_k^2 = {norm}, expected 1"
            )));
        }
        Ok(Self { k, a_k, b_k })
    }

    /// `a_k = (2 − k)/k`, `b_k = 2/k`: the Grover coin `G_k` restricted to the
    /// span of "own coordinate" and "uniform over the others".
    pub fn grover_default(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let kf = k as f64;
        Self::new(k, (2.0 - kf) / kf, 2.0 / kf)
    }

    /// The 2×2 matrix `[[a_k, (k−1) b_k], [b_k, −a_k]]` whose tensor square is
    /// the origin coin of the Own/Other walk. Squares to the identity.
    pub fn sector_matrix(&self) -> CMatrix {
        let km1 = self.k as f64 - 1.0;
        CMatrix::from_row_slice(
            2,
            2,
            &[c(self.a_k), c(km1 * self.b_k), c(self.b_k), c(-self.a_k)],
        )
    }

    /// Same map as [`sector_matrix`](Self::sector_matrix) in the orthonormal
    /// own/other coordinates: `[[a_k, √(k−1) b_k], [√(k−1) b_k, −a_k]]`.
    pub fn sector_matrix_normalized(&self) -> CMatrix {
        let s = (self.k as f64 - 1.0).sqrt() * self.b_k;
        CMatrix::from_row_slice(2, 2, &[c(self.a_k), c(s), c(s), c(-self.a_k)])
    }

    /// Unit vector `n` with `N n = n` for the normalized sector matrix `N`.
    pub fn sector_fixed_vector(&self) -> [f64; 2] {
        let s = (self.k as f64 - 1.0).sqrt() * self.b_k;
        let (u, v) = (s, 1.0 - self.a_k);
        let norm = u.hypot(v);
        if norm < PARAM_TOL {
            [1.0, 0.0]
        } else {
            [u / norm, v / norm]
        }
    }

    /// Covector `w` with `wᵀ M = wᵀ` for the unnormalized sector matrix `M`,
    /// scaled so that its first nonzero entry is 1. Equals `(1, k − 1)` for
    /// the Grover defaults.
    pub fn sector_fixed_covector(&self) -> [f64; 2] {
        let (u, v) = (self.b_k, 1.0 - self.a_k);
        if u.abs() > PARAM_TOL {
            [1.0, v / u]
        } else if v.abs() > PARAM_TOL {
            [0.0, 1.0]
        } else {
            [1.0, 0.0]
        }
    }
}

/// Dense complex matrix produced by one of the coin constructors.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinMatrix(pub CMatrix);

impl CoinMatrix {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn unitarity(&self) -> UnitarityReport {
        is_unitary(&self.0, PARAM_TOL)
    }

    /// Row-major `[re, im]` pairs.
    pub fn to_rows(&self) -> Vec<Vec<[f64; 2]>> {
        matrix_rows(&self.0)
    }
}

pub fn matrix_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitarityReport {
    /// `max |M†M − I|` over all entries.
    pub residual: f64,
    pub pass: bool,
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> UnitarityReport {
    let residual = if m.is_square() {
        let g = m.adjoint() * m;
        let n = m.nrows();
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                };
                r = r.max((g[(i, j)] - target).norm());
            }
        }
        r
    } else {
        f64::INFINITY
    };
    UnitarityReport {
        residual,
        pass: residual <= tol,
    }
}

/// `C_{Z×Z}`, the Kronecker square of the base coin.
pub fn plane_coin(p: &CoinParams) -> CoinMatrix {
    let (a, b, cc, d) = (p.a, p.b, p.c, p.d);
    CoinMatrix(CMatrix::from_row_slice(
        4,
        4,
        &[
            a * a,
            a * b,
            a * b,
            b * b,
            a * cc,
            a * d,
            b * cc,
            b * d,
            a * cc,
            b * cc,
            a * d,
            b * d,
            cc * cc,
            cc * d,
            cc * d,
            d * d,
        ],
    ))
}

/// Grover operator with entries `2/k − δ_ij`.
pub fn grover(k: usize) -> Result<CoinMatrix> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "Grover dimension must be at least 1".into(),
        ));
    }
    let w = 2.0 / k as f64;
    Ok(CoinMatrix(CMatrix::from_fn(k, k, |i, j| {
        c(if i == j { w - 1.0 } else { w })
    })))
}

/// `C_k`, the coin of the reduced walk away from the origin.
pub fn reduced_coin(r: &ReducedCoinParams) -> CoinMatrix {
    let s = c((r.k as f64 - 1.0) * r.b_k * r.b_k);
    let p = c(r.a_k * r.b_k * (r.k as f64 - 1.0).sqrt());
    let q = c(r.a_k * r.a_k);
    CoinMatrix(CMatrix::from_row_slice(
        4,
        4,
        &[s, p, p, q, -p, s, -q, p, -p, -q, s, p, q, -p, -p, s],
    ))
}

/// `C_H*`, the origin coin of the sixteen-component Own/Other walk. Not
/// unitary in general; check with [`CoinMatrix::unitarity`].
pub fn origin_coin_star(r: &ReducedCoinParams) -> CoinMatrix {
    let (a, b) = (r.a_k, r.b_k);
    let km1 = r.k as f64 - 1.0;
    CoinMatrix(CMatrix::from_row_slice(
        4,
        4,
        &[
            c(a * a),
            c(a * b * km1),
            c(a * b * km1),
            c(b * b * km1 * km1),
            c(a * b),
            c(-a * a),
            c(b * b * km1),
            c(-a * b * km1),
            c(a * b),
            c(km1 * b * b),
            c(-a * a),
            c(-a * b * km1),
            c(b * b),
            c(-a * b),
            c(-a * b),
            c(a * a),
        ],
    ))
}

/// `max |C_H* − C_kᵀ|`; zero would mean the two matrices are transposes.
pub fn transpose_relation_residual(r: &ReducedCoinParams) -> f64 {
    let diff = origin_coin_star(r).0 - reduced_coin(r).0.transpose();
    diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// 4×4 matrix with a single row `row` filled from `values`.
pub(crate) fn single_row(row: usize, values: [C64; 4]) -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for (j, v) in values.into_iter().enumerate() {
        m[(row, j)] = v;
    }
    m
}

fn unit(row: usize, col: usize, v: C64) -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(row, col)] = v;
    m
}

/// Direction weights of the sixteen-component walk.
///
/// `p_l, p_r, q_d, q_u` are the one-step weights for moving left, right, down
/// and up; `p_d` carries a downward move into the origin, whose single label
/// sits in the `Left` slot (the `Right` slot at the origin is a dummy).
/// `p_r_tilde` and `q_u_tilde` leave the origin towards `(1, 0)` and `(0, 1)`.
#[derive(Debug, Clone)]
pub struct WeightSet {
    pub p_l: CMatrix,
    pub p_r: CMatrix,
    pub q_d: CMatrix,
    pub q_u: CMatrix,
    pub p_d: CMatrix,
    pub q_tilde: CMatrix,
    pub p_r_prime: CMatrix,
    pub q_u_prime: CMatrix,
    pub p_r_tilde: CMatrix,
    pub q_u_tilde: CMatrix,
}

pub fn direction_weights(p: &CoinParams, r: &ReducedCoinParams) -> WeightSet {
    let (a, b, cc, d) = (p.a, p.b, p.c, p.d);
    let id4 = CMatrix::identity(4, 4);
    let star = origin_coin_star(r).0;
    let row_l = [a * a, a * b, a * b, b * b];
    let row_r = [a * cc, a * d, b * cc, b * d];
    let row_d = [a * cc, b * cc, a * d, b * d];
    let row_u = [cc * cc, cc * d, cc * d, d * d];
    let ct = p.ctilde;
    WeightSet {
        p_l: id4.kronecker(&single_row(0, row_l)),
        p_r: id4.kronecker(&single_row(1, row_r)),
        q_d: id4.kronecker(&single_row(2, row_d)),
        q_u: id4.kronecker(&single_row(3, row_u)),
        p_d: id4.kronecker(&single_row(0, row_d)),
        q_tilde: star.kronecker(&unit(3, 0, ct * ct)),
        p_r_prime: id4.kronecker(&single_row(2, row_r)),
        q_u_prime: id4.kronecker(&single_row(0, [cc * cc, cc * d, cc * d, cc * d])),
        p_r_tilde: star.kronecker(&unit(1, 0, ct)),
        q_u_tilde: star.kronecker(&unit(3, 0, ct)),
    }
}
