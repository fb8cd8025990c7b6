//! Long-time behaviour: closed-form localization and weak-limit predictions,
//! and the matching empirical statistics from the simulator.

use serde::{Deserialize, Serialize};

use crate::coin::{c, CoinParams, ReducedCoinParams, C64};
use crate::error::{Error, Result};
use crate::genfunc::{GenfuncScalars, MuVariant};
use crate::reduction::{direct_event_probability, InitialPsi};
use crate::walk::{step, StateVector, WalkSpec};

const EDGE_TOL: f64 = 1e-12;

/// Reading of the undefined angle `θ` in `Γ_2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ThetaChoice {
    #[default]
    Phi,
    Zero,
}

/// Choices for the symbols the formulas leave undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct AssumptionFlags {
    pub theta: ThetaChoice,
    pub mu_variant: MuVariant,
}

impl AssumptionFlags {
    pub fn labels(&self) -> Vec<String> {
        let mut v = vec![
            "eta_pm:=Delta_pm".to_string(),
            "K_pm:=|1±|c²|e^{-iφ}|²".to_string(),
            "Gamma_x_ratio:=K_x/conj(K_x)".to_string(),
        ];
        v.push(match self.theta {
            ThetaChoice::Phi => "theta:=phi".into(),
            ThetaChoice::Zero => "theta:=0".into(),
        });
        if self.mu_variant == MuVariant::SingleDelta {
            v.push("mu:Delta*z".into());
        }
        v
    }
}

/// `I_A(x)` for an interval with open or closed ends.
fn indicator(x: f64, lo: f64, lo_closed: bool, hi: f64, hi_closed: bool) -> bool {
    let above = if lo_closed { x >= lo } else { x > lo };
    let below = if hi_closed { x <= hi } else { x < hi };
    above && below
}

/// Coin and initial-state quantities shared by both limit theorems.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem1Params {
    pub phi: f64,
    pub c2_abs: f64,
    pub a_abs: f64,
    pub k_plus: f64,
    pub k_minus: f64,
    pub k_cross: C64,
    pub theta1: Vec<f64>,
    pub theta2: Vec<C64>,
    pub theta3: Vec<C64>,
    pub h_values: [f64; 2],
    pub q_values: [f64; 2],
    pub sum_psi_sq: f64,
    /// `|Σ_j (ψ_j − ψ_r)|²` per `r`
    pub sum_diff_sq: Vec<f64>,
    pub flags: AssumptionFlags,
}

impl Theorem1Params {
    pub fn new(coin: &CoinParams, reduced: &ReducedCoinParams, psi: &InitialPsi, flags: AssumptionFlags) -> Result<Self> {
        let k = psi.k();
        if reduced.k != k {
            return Err(Error::InvalidParameter(format!("ψ has {k} entries, reduced coin has k = {}", reduced.k)));
        }
        let c2 = coin.c * coin.c;
        let phi = (c2 / (coin.ctilde * coin.ctilde)).arg();
        let c2_abs = c2.norm();
        let e = C64::from_polar(c2_abs, -phi);
        let k_plus = (c(1.0) + e).norm_sqr();
        let k_minus = (c(1.0) - e).norm_sqr();
        let k_cross = (c(1.0) - C64::from_polar(c2_abs, phi)) * (c(1.0) + e);
        let pp = psi.psi_prime();
        let theta1 = pp.iter().map(|z| z.norm_sqr()).collect();
        let mut theta2 = Vec::with_capacity(k);
        let mut theta3 = Vec::with_capacity(k);
        for r in 0..k {
            let mut t2 = c(0.0);
            let mut t3 = c(0.0);
            for j in (0..k).filter(|&j| j != r) {
                t2 += pp[r].conj() * pp[j];
                t3 += pp[j].norm_sqr();
                for l in (0..k).filter(|&l| l != r && l != j) {
                    t3 += pp[l].conj() * pp[j] + pp[j].conj() * pp[l];
                }
            }
            theta2.push(t2);
            theta3.push(t3);
        }
        let total: C64 = psi.psi().iter().sum();
        let sum_diff_sq = (0..k)
            .map(|r| (total - psi.psi()[r] * k as f64).norm_sqr())
            .collect();
        let (ak, bk) = (reduced.a_k, reduced.b_k);
        Ok(Self {
            phi,
            c2_abs,
            a_abs: coin.a.norm(),
            k_plus,
            k_minus,
            k_cross,
            theta1,
            theta2,
            theta3,
            h_values: [ak * ak, ak * bk],
            q_values: [ak * bk, bk * bk],
            sum_psi_sq: total.norm_sqr(),
            sum_diff_sq,
            flags,
        })
    }

    fn sum_q_sq(&self) -> f64 {
        self.q_values.iter().map(|q| q * q).sum()
    }

    /// `Γ_±(x, y)`.
    pub fn gamma_pm(&self, x: i64, y: i64, plus: bool) -> f64 {
        let (kk, sg) = if plus { (self.k_plus, 1.0) } else { (self.k_minus, -1.0) };
        let cos = self.phi.cos();
        let pre = self.sum_q_sq() * self.c2_abs * self.c2_abs * (cos + sg * self.c2_abs).powi(2) / (kk * kk);
        if x == 0 && y == 0 {
            return pre;
        }
        let ratio = self.a_abs.powi(4) / kk;
        pre * ratio.powi((x + y - 2) as i32) * (1.0 + ratio)
    }

    /// `Γ_×(x, y, t)`; the closed form has no `t` dependence.
    pub fn gamma_cross(&self, x: i64, y: i64, _t: u64) -> C64 {
        let kx = self.k_cross;
        let ratio = (kx / kx.conj()).sqrt();
        let cos = self.phi.cos();
        let pre = ratio * self.c2_abs * self.c2_abs * (cos * cos - self.c2_abs * self.c2_abs) / (kx * kx);
        let bracket = if x == 0 && y == 0 {
            -ratio
        } else {
            let g = self.a_abs.powi(4) / (self.k_plus * self.k_minus).sqrt();
            (c(1.0) - self.a_abs.powi(4) / kx) * g.powi((x + y - 2) as i32)
        };
        pre * bracket
    }
}

/// Evaluation of the localization formula at one site and time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem1Record {
    pub t: u64,
    pub r: usize,
    pub x: i64,
    pub y: i64,
    pub value: f64,
    pub parity_gate: f64,
    pub l_m: f64,
    pub l_p: f64,
    pub l_c: f64,
    pub indicators: [bool; 3],
    /// `cos φ` sits on an edge `±|c²|` of the indicator intervals
    pub boundary: bool,
    pub assumption_flags: Vec<String>,
}

pub fn theorem1_asymptotic(t: u64, r: usize, x: i64, y: i64, p: &Theorem1Params) -> Result<Theorem1Record> {
    if r >= p.theta1.len() {
        return Err(Error::InvalidParameter(format!("r = {r} out of range")));
    }
    if x < 0 || y < 0 {
        return Err(Error::InvalidParameter(format!("({x}, {y}) is outside the quarter plane")));
    }
    let cos = p.phi.cos();
    let cc = p.c2_abs;
    let ind = [
        indicator(cos, -1.0, true, cc, false),
        indicator(cos, -cc, false, 1.0, true),
        indicator(cos, -cc, false, cc, false),
    ];
    let boundary = (cos - cc).abs() < EDGE_TOL || (cos + cc).abs() < EDGE_TOL;
    let l_m = p.gamma_pm(x, y, false) * p.sum_psi_sq;
    let l_p = p.gamma_pm(x, y, true) * p.sum_diff_sq[r];
    let g = p.gamma_cross(x, y, t);
    let (t1, t2, t3) = (p.theta1[r], p.theta2[r], p.theta3[r]);
    let mut l_c = 0.0;
    for h in p.h_values {
        l_c += 2.0 * -(1.0 - h * h) * t1 * g.re;
    }
    for h in p.h_values {
        for q in p.q_values {
            l_c += 2.0 * q * (1.0 + h) * (t2 * g).re;
            l_c -= 2.0 * -q * (1.0 - h) * (t2 * g.conj()).re;
        }
    }
    for q in p.q_values {
        l_c += 2.0 * q * q * (t3 * g).re;
    }
    let parity_gate = if (x + y).rem_euclid(2) == 0 { 1.0 } else { 0.0 };
    let mut value = 0.0;
    if ind[0] {
        value += l_m;
    }
    if ind[1] {
        value += l_p;
    }
    if ind[2] {
        value += l_c;
    }
    let mut flags = p.flags.labels();
    if boundary {
        flags.push("indicator_boundary".into());
    }
    Ok(Theorem1Record {
        t,
        r,
        x,
        y,
        value: parity_gate * value,
        parity_gate,
        l_m,
        l_p,
        l_c,
        indicators: ind,
        boundary,
        assumption_flags: flags,
    })
}

/// `f_H(x) = I_[0,|a|)(x) √(1−|a|²) / (π (1−x²) √(|a|²−x²))`.
pub fn f_h_density(x: f64, a_abs: f64) -> Result<f64> {
    if !(a_abs > 0.0 && a_abs < 1.0) {
        return Err(Error::InvalidParameter(format!("|a| = {a_abs} must lie in (0, 1)")));
    }
    if !(0.0..a_abs).contains(&x) {
        return Ok(0.0);
    }
    Ok((1.0 - a_abs * a_abs).sqrt() / (std::f64::consts::PI * (1.0 - x * x) * (a_abs * a_abs - x * x).sqrt()))
}

/// `∫_0^x f_H`, in closed form `(1/π) arctan(√(1−|a|²) x / √(|a|²−x²))`.
pub fn f_h_cdf(x: f64, a_abs: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= a_abs {
        return 0.5;
    }
    ((1.0 - a_abs * a_abs).sqrt() * x / (a_abs * a_abs - x * x).sqrt()).atan() / std::f64::consts::PI
}

/// Adaptive Simpson quadrature on `[lo, hi]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64, m: f64, fm: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1) + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(lo), f(hi));
    let (m, fm, whole) = simpson(f, lo, fa, hi, fb);
    recurse(f, lo, fa, hi, fb, m, fm, whole, tol, 48)
}

/// `∫_0^{|a|} g(x) f_H(x) dx` through `x = |a| sin u`, which removes the
/// endpoint singularity.
pub fn integrate_against_f_h<G: Fn(f64) -> f64>(g: G, a_abs: f64, tol: f64) -> Result<f64> {
    f_h_density(0.0, a_abs)?;
    let s = (1.0 - a_abs * a_abs).sqrt();
    let integrand = |u: f64| {
        let x = a_abs * u.sin();
        g(x) * s / (std::f64::consts::PI * (1.0 - x * x))
    };
    Ok(adaptive_simpson(&integrand, 0.0, std::f64::consts::FRAC_PI_2, tol))
}

/// Point masses and density weights of the weak limit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem2Params {
    pub base: Theorem1Params,
    pub c_m: f64,
    pub c_p: Vec<f64>,
    pub a_k: f64,
    pub b_k: f64,
    pub c_abs: f64,
}

impl Theorem2Params {
    pub fn new(base: Theorem1Params, reduced: &ReducedCoinParams, coin: &CoinParams) -> Self {
        let cos = base.phi.cos();
        let cc = base.c2_abs;
        let pre = base.sum_q_sq() * cc * cc * (cos + cc) / (2.0 * base.k_plus);
        let c_m = if indicator(cos, -1.0, true, cc, false) { pre * base.sum_psi_sq } else { 0.0 };
        let c_p = base
            .sum_diff_sq
            .iter()
            .map(|s| if indicator(cos, -cc, false, 1.0, true) { pre * s } else { 0.0 })
            .collect();
        Self {
            base,
            c_m,
            c_p,
            a_k: reduced.a_k,
            b_k: reduced.b_k,
            c_abs: coin.c.norm(),
        }
    }

    fn common(&self, x: f64) -> f64 {
        let (cos, sin) = (self.base.phi.cos(), self.base.phi.sin());
        let c = self.c_abs;
        1.0 + c * c - 2.0 * c * c * cos * cos - sin * sin * (1.0 - x * x)
    }

    pub fn gamma1(&self, x: f64) -> f64 {
        let (cos, sin) = (self.base.phi.cos(), self.base.phi.sin());
        let (ak, c, a) = (self.a_k, self.c_abs, self.base.a_abs);
        4.0 * ak * c * (a * a - x * x) * cos * sin * sin + (ak * ak + 2.0 * ak * c * cos + 1.0) * self.common(x)
    }

    pub fn gamma2(&self, x: f64) -> C64 {
        let (cos, sin) = (self.base.phi.cos(), self.base.phi.sin());
        let (ak, bk, cabs, a) = (self.a_k, self.b_k, self.c_abs, self.base.a_abs);
        let e = match self.base.flags.theta {
            ThetaChoice::Phi => C64::from_polar(1.0, self.base.phi),
            ThetaChoice::Zero => c(1.0),
        };
        -e * (2.0 * bk * cabs * (a * a - x * x) * cos * sin) + (e * cabs + ak) * bk * self.common(x)
    }

    pub fn gamma3(&self, x: f64) -> f64 {
        self.b_k * self.b_k * self.common(x)
    }

    /// `C_d^r(x)`.
    pub fn c_d(&self, x: f64, r: usize) -> f64 {
        let b = &self.base;
        let s2 = b.phi.sin().powi(2) * (1.0 - x * x);
        let num = self.gamma1(x) * b.theta1[r] + 2.0 * (self.gamma2(x) * b.theta2[r]).re + self.gamma3(x) * b.theta3[r].re;
        num / ((b.k_plus - s2) * (b.k_minus - s2))
    }

    pub fn point_mass(&self, r: usize) -> f64 {
        self.c_m + self.c_p[r]
    }

    /// Point mass plus `(∫ C_d^r f_H)²`; the statement does not claim this is 1.
    pub fn total_mass(&self, r: usize) -> Result<f64> {
        let one_d = integrate_against_f_h(|x| self.c_d(x, r), self.base.a_abs, 1e-10)?;
        Ok(self.point_mass(r) + one_d * one_d)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem2Record {
    pub x: f64,
    pub y: f64,
    pub r: usize,
    pub continuous: f64,
    pub point_mass: f64,
    pub assumption_flags: Vec<String>,
}

pub fn theorem2_density(x: f64, y: f64, r: usize, p: &Theorem2Params) -> Result<Theorem2Record> {
    if r >= p.c_p.len() {
        return Err(Error::InvalidParameter(format!("r = {r} out of range")));
    }
    let a = p.base.a_abs;
    let continuous = p.c_d(x, r) * p.c_d(y, r) * f_h_density(x, a)? * f_h_density(y, a)?;
    Ok(Theorem2Record {
        x,
        y,
        r,
        continuous,
        point_mass: p.point_mass(r),
        assumption_flags: p.base.flags.labels(),
    })
}

/// Mean of a site-set probability over a window, with even-`t` and odd-`t`
/// sub-means.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TimeAverage {
    pub t0: u64,
    pub t1: u64,
    pub mean: f64,
    pub even_mean: f64,
    pub odd_mean: f64,
}

/// A site of the joined walk as `(copy, x, y)`; the origin is `(r, 0, 0)` and
/// counts the origin labels of copy `r`.
pub type EventSite = (usize, i64, i64);

/// Time averages of `Σ_{sites} P(X_{t,r} = x, Y_{t,r} = y)` over each window,
/// from one evolution of a joined walk.
pub fn time_averaged_probability(spec: &WalkSpec, sites: &[EventSite], windows: &[(u64, u64)]) -> Result<Vec<TimeAverage>> {
    let mut out = time_averaged_sets(spec, &[sites.to_vec()], windows)?;
    Ok(out.remove(0))
}

/// [`time_averaged_probability`] for several site sets sharing one evolution;
/// `out[i][j]` is set `i` over window `j`.
pub fn time_averaged_sets(spec: &WalkSpec, sets: &[Vec<EventSite>], windows: &[(u64, u64)]) -> Result<Vec<Vec<TimeAverage>>> {
    for &(t0, t1) in windows {
        if t0 < 1 || t1 < t0 {
            return Err(Error::InvalidParameter(format!("window [{t0}, {t1}] needs 1 <= t0 <= t1")));
        }
    }
    let horizon = windows.iter().map(|w| w.1).max().unwrap_or(0);
    let mut acc = vec![vec![[0.0f64; 2]; windows.len()]; sets.len()];
    let mut cnt = vec![[0usize; 2]; windows.len()];
    let mut s = spec.initial.clone();
    while s.time() < horizon {
        s = step(spec, &s)?;
        let t = s.time();
        let par = (t % 2) as usize;
        let active: Vec<usize> = (0..windows.len()).filter(|&i| (windows[i].0..=windows[i].1).contains(&t)).collect();
        if active.is_empty() {
            continue;
        }
        for &i in &active {
            cnt[i][par] += 1;
        }
        for (set, a) in sets.iter().zip(acc.iter_mut()) {
            let p: f64 = set.iter().map(|&(r, x, y)| direct_event_probability(&s, r, x, y)).sum();
            for &i in &active {
                a[i][par] += p;
            }
        }
    }
    Ok(acc
        .iter()
        .map(|a| {
            windows
                .iter()
                .enumerate()
                .map(|(i, &(t0, t1))| {
                    let mean_of = |j: usize| if cnt[i][j] > 0 { a[i][j] / cnt[i][j] as f64 } else { 0.0 };
                    TimeAverage {
                        t0,
                        t1,
                        mean: (a[i][0] + a[i][1]) / (cnt[i][0] + cnt[i][1]) as f64,
                        even_mean: mean_of(0),
                        odd_mean: mean_of(1),
                    }
                })
                .collect()
        })
        .collect())
}

/// Rescaled position statistics of a joined-walk state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalStats {
    pub t: u64,
    pub copy: Option<usize>,
    pub origin_mass: f64,
    pub off_origin_mass: f64,
    /// off-origin mass with both rescaled coordinates `<= edge`, as a fraction
    pub inside_fraction: f64,
    pub edge: f64,
    /// smallest `u` with 99% of off-origin mass in `[0, u]²`
    pub quantile_99: f64,
    /// `(x/t, probability)` for the off-origin marginal of `X`
    pub marginal_x: Vec<(f64, f64)>,
    pub marginal_y: Vec<(f64, f64)>,
    pub kolmogorov_x: f64,
    pub kolmogorov_y: f64,
}

fn kolmogorov(marginal: &[(f64, f64)], total: f64, a_abs: f64) -> f64 {
    let mut cdf = 0.0;
    let mut worst: f64 = 0.0;
    for &(u, p) in marginal {
        let g = 2.0 * f_h_cdf(u, a_abs);
        worst = worst.max((cdf - g).abs());
        cdf += p / total;
        worst = worst.max((cdf - g).abs());
    }
    worst
}

/// Empirical statistics at the state's time; `copy = None` pools all copies.
pub fn empirical_rescaled_stats(s: &StateVector, copy: Option<usize>, a_abs: f64, edge: f64) -> Result<EmpiricalStats> {
    let t = s.time();
    if t == 0 {
        return Err(Error::InvalidParameter("rescaling needs t >= 1".into()));
    }
    f_h_density(0.0, a_abs)?;
    let copies: Vec<usize> = match copy {
        Some(r) => vec![r],
        None => (0..s.layout().copies()).collect(),
    };
    let n = t as usize;
    let mut mx = vec![0.0; n + 1];
    let mut my = vec![0.0; n + 1];
    let mut by_max = vec![0.0; n + 1];
    let mut origin = 0.0;
    let mut off = 0.0;
    let mut inside = 0.0;
    let tf = t as f64;
    for &r in &copies {
        origin += direct_event_probability(s, r, 0, 0);
        for x in 0..=t as i64 {
            for y in 0..=(t as i64 - x) {
                if x == 0 && y == 0 {
                    continue;
                }
                let p = direct_event_probability(s, r, x, y);
                if p == 0.0 {
                    continue;
                }
                off += p;
                mx[x as usize] += p;
                my[y as usize] += p;
                by_max[x.max(y) as usize] += p;
                if x as f64 / tf <= edge && y as f64 / tf <= edge {
                    inside += p;
                }
            }
        }
    }
    let mut quantile_99 = f64::NAN;
    let mut acc = 0.0;
    for (i, p) in by_max.iter().enumerate() {
        acc += p;
        if off > 0.0 && acc >= 0.99 * off {
            quantile_99 = i as f64 / tf;
            break;
        }
    }
    let to_pairs = |m: &[f64]| m.iter().enumerate().map(|(i, p)| (i as f64 / tf, *p)).collect::<Vec<_>>();
    let marginal_x = to_pairs(&mx);
    let marginal_y = to_pairs(&my);
    let (kx, ky) = if off > 0.0 {
        (kolmogorov(&marginal_x, off, a_abs), kolmogorov(&marginal_y, off, a_abs))
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(EmpiricalStats {
        t,
        copy,
        origin_mass: origin,
        off_origin_mass: off,
        inside_fraction: if off > 0.0 { inside / off } else { f64::NAN },
        edge,
        quantile_99,
        marginal_x,
        marginal_y,
        kolmogorov_x: kx,
        kolmogorov_y: ky,
    })
}

/// `v_±(s)`: `(a²e^{−iσ} + ā²Δe^{iσ} ± √((a²e^{−iσ} + ā²e^{iσ})² − 4Δ)) / (2Δ)`
/// with `σ = s_x + s_y`.
pub fn v_pm(sx: f64, sy: f64, p: &CoinParams) -> [C64; 2] {
    let delta = p.delta();
    let a2 = p.a * p.a;
    let em = C64::from_polar(1.0, -(sx + sy));
    let ep = em.conj();
    let lead = a2 * em + a2.conj() * delta * ep;
    let root = ((a2 * em + a2.conj() * ep).powi(2) - delta * 4.0).sqrt();
    [(lead + root) / (delta * 2.0), (lead - root) / (delta * 2.0)]
}

/// Fourier-domain amplitudes `α̂*(m, l, s_x, s_y; z)` in chirality order
/// `Left, Right, Down, Up`, for the sector weight `s`. The phase `e^{ik_x+ik_y}`
/// of `Φ_2` is read as `e^{i s_x + i s_y}`.
pub fn fourier_hat_alpha(sx: f64, sy: f64, z: C64, s: f64, scalars: &GenfuncScalars) -> Result<[C64; 4]> {
    let p = &scalars.coin;
    let delta = p.delta();
    let (wp, wm) = (scalars.w_sq(true), scalars.w_sq(false));
    let ct2 = p.ctilde * p.ctilde;
    let c2 = p.c * p.c;
    let sv = scalars.v(z).sqrt();
    let phi1_den = (ct2 * ct2 - c2 * c2) * 4.0 * (z * z - wp) * (z * z - wm);
    let [vp, vm] = v_pm(sx, sy, p);
    let phi2_den = delta * 4.0 * (z - vp) * (z - vm);
    if phi1_den.norm() < 1e-300 || phi2_den.norm() < 1e-300 {
        return Err(Error::InvalidParameter(format!("z = {z} is a pole of Φ_1 or Φ_2")));
    }
    let phi1 = ct2.powi(3) * wp * wm * (scalars.delta_pm(z, true) + sv) * (scalars.delta_pm(z, false) - sv) / phi1_den;
    let gamma = p.a * p.a * C64::from_polar(1.0, -(sx + sy)) * z * 4.0 - 1.0 - delta * z * z;
    let phi2 = C64::from_polar(1.0, sx + sy) * (gamma - sv) / phi2_den;
    let lam = scalars.lambda(z)?;
    let mu = scalars.mu(z)?;
    let weight = ct2 * s * mu + 1.0;
    let (a2, b2, d2) = (p.a * p.a, p.b * p.b, p.d * p.d);
    let left = (-mu + d2 / (a2 * c2) * (lam - a2 * z)) * weight * phi1;
    let down = (mu + c2 / (b2 * d2) * (lam - p.b * z)) * weight * phi1;
    let up = z * (ct2 * mu + 1.0) * phi1 * phi2;
    Ok([left, up, down, up])
}

/// One predicted-versus-simulated comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Finding {
    pub quantity: String,
    pub printed_formula_value: f64,
    pub simulated_value: Option<f64>,
    pub assumption_flags: Vec<String>,
    pub tolerance_class: String,
}

/// Rows `(x, f_H, C_d, ρ_w)` on a uniform grid of `[0, 1)` for `y = x`.
pub fn density_rows(p: &Theorem2Params, r: usize, n: usize) -> Result<Vec<[f64; 4]>> {
    let a = p.base.a_abs;
    (0..n)
        .map(|i| {
            let x = i as f64 / n as f64;
            let f = f_h_density(x, a)?;
            let cd = p.c_d(x, r);
            Ok([x, f, cd, cd * cd * f * f])
        })
        .collect()
}

pub fn write_density_csv<W: std::io::Write>(rows: &[[f64; 4]], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "f_H", "C_d", "rho_w"])?;
    for row in rows {
        out.write_record(row.iter().map(|v| v.to_string()))?;
    }
    out.flush()?;
    Ok(())
}
