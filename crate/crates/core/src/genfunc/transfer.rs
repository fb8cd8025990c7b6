//! Exact path sums of the literal Own/Other walk in weight-matrix form, and
//! the generating function assembled from first returns to the origin.
//!
//! Both start from `Ψ_1*(1,0) = Q̃ Ψ_0*(0,0)` at `t = 1`. The origin value at
//! `t = 0` is reported as `Ψ_0*` and takes no part in the dynamics.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::series::MatrixSeries;
use super::{closed_form_b, lambda_eval, BTag};
use crate::coin::{c, direction_weights, single_row, CMatrix, CoinParams, ReducedCoinParams, WeightSet, C64};
use crate::error::{Error, Result};
use crate::reduction::reduced_star_initial;
use crate::walk::{step, BasisLabel, BouncePolicy, Chirality, Mode, Model, Sector, Site, StateVector, WalkSpec};
use crate::walk::Layout;

type V16 = [C64; 16];

const ZERO16: V16 = [C64 { re: 0.0, im: 0.0 }; 16];

const L: usize = 0;
const R: usize = 1;
const D: usize = 2;
const U: usize = 3;

/// `I_4 ⊗ (row vector placed in row `to`)`, applied without forming the matrix.
#[derive(Debug, Clone, Copy)]
struct LatticeWeight {
    to: usize,
    row: [C64; 4],
}

impl LatticeWeight {
    fn apply_add(&self, v: &V16, out: &mut V16) {
        for s in 0..4 {
            let o = 4 * s;
            out[o + self.to] += self.row[0] * v[o] + self.row[1] * v[o + 1] + self.row[2] * v[o + 2] + self.row[3] * v[o + 3];
        }
    }
}

#[derive(Debug, Clone)]
struct Weights {
    left: LatticeWeight,
    right: LatticeWeight,
    down: LatticeWeight,
    up: LatticeWeight,
    left_reflect: LatticeWeight,
    down_reflect: LatticeWeight,
    set: WeightSet,
    partner: fn(i64) -> i64,
}

fn paired(v: i64) -> i64 {
    if v % 2 == 1 {
        v + 1
    } else {
        v - 1
    }
}

fn identity(v: i64) -> i64 {
    v
}

impl Weights {
    fn new(p: &CoinParams, r: &ReducedCoinParams, policy: BouncePolicy) -> Result<Self> {
        let (a, b, cc, d) = (p.a, p.b, p.c, p.d);
        let row_l = [a * a, a * b, a * b, b * b];
        let row_r = [a * cc, a * d, b * cc, b * d];
        let row_d = [a * cc, b * cc, a * d, b * d];
        let row_u = [cc * cc, cc * d, cc * d, d * d];
        let partner: fn(i64) -> i64 = match policy {
            BouncePolicy::Paired => paired,
            BouncePolicy::Bounce => identity,
            BouncePolicy::Strict => {
                return Err(Error::InvalidParameter(
                    "path sums need a reflecting boundary policy".into(),
                ))
            }
        };
        Ok(Self {
            left: LatticeWeight { to: L, row: row_l },
            right: LatticeWeight { to: R, row: row_r },
            down: LatticeWeight { to: D, row: row_d },
            up: LatticeWeight { to: U, row: row_u },
            left_reflect: LatticeWeight { to: R, row: row_l },
            down_reflect: LatticeWeight { to: U, row: row_d },
            set: direction_weights(p, r),
            partner,
        })
    }
}

/// Square grid of sixteen-component vectors on `0 <= x, y < side`; the cell
/// `(0, 0)` is unused.
#[derive(Debug, Clone)]
struct Field {
    side: usize,
    data: Vec<V16>,
}

impl Field {
    fn new(side: usize) -> Self {
        Self {
            side,
            data: vec![ZERO16; side * side],
        }
    }

    fn get(&self, x: i64, y: i64) -> Option<&V16> {
        if x < 0 || y < 0 || x as usize >= self.side || y as usize >= self.side {
            return None;
        }
        Some(&self.data[x as usize * self.side + y as usize])
    }

    fn get_mut(&mut self, x: i64, y: i64) -> &mut V16 {
        &mut self.data[x as usize * self.side + y as usize]
    }
}

/// One lattice step without any flow through the origin.
fn lattice_step(w: &Weights, src: &Field) -> Field {
    let side = src.side;
    let mut dst = Field::new(side);
    dst.data.par_chunks_mut(side).enumerate().for_each(|(xi, col)| {
        let x = xi as i64;
        for (yi, out) in col.iter_mut().enumerate() {
            let y = yi as i64;
            if x == 0 && y == 0 {
                continue;
            }
            if let Some(v) = src.get(x + 1, y) {
                w.left.apply_add(v, out);
            }
            if x >= 1 && !(x == 1 && y == 0) {
                w.right.apply_add(src.get(x - 1, y).unwrap(), out);
            }
            if let Some(v) = src.get(x, y + 1) {
                w.down.apply_add(v, out);
            }
            if y >= 1 && !(y == 1 && x == 0) {
                w.up.apply_add(src.get(x, y - 1).unwrap(), out);
            }
            if x == 0 {
                if let Some(v) = src.get(0, (w.partner)(y)) {
                    w.left_reflect.apply_add(v, out);
                }
            }
            if y == 0 {
                if let Some(v) = src.get((w.partner)(x), 0) {
                    w.down_reflect.apply_add(v, out);
                }
            }
        }
    });
    dst
}

fn to_dvec(v: &V16) -> DVector<C64> {
    DVector::from_column_slice(v)
}

fn from_dvec(v: &DVector<C64>) -> V16 {
    let mut out = ZERO16;
    out.copy_from_slice(v.as_slice());
    out
}

/// Amplitudes `Ψ_t*(x, y)` for `t <= horizon` by direct application of the
/// weight matrices.
#[derive(Debug, Clone)]
pub struct TransferPathSum {
    horizon: usize,
    psi0: DVector<C64>,
    origin: Vec<DVector<C64>>,
    fields: Vec<Field>,
}

impl TransferPathSum {
    pub fn run(p: &CoinParams, r: &ReducedCoinParams, policy: BouncePolicy, horizon: usize) -> Result<Self> {
        let w = Weights::new(p, r, policy)?;
        let side = horizon + 2;
        let init = reduced_star_initial(p, r);
        let mut fields = vec![Field::new(side)];
        let mut origin = vec![init.psi0.clone()];
        if horizon >= 1 {
            let mut f1 = Field::new(side);
            *f1.get_mut(1, 0) = from_dvec(&(&w.set.q_tilde * &init.psi0));
            fields.push(f1);
            origin.push(DVector::from_element(16, c(0.0)));
        }
        for t in 1..horizon {
            let src = &fields[t];
            let ot = &origin[t];
            let mut next = lattice_step(&w, src);
            let emit_h = &w.set.p_r_tilde * ot;
            let emit_v = &w.set.q_u_tilde * ot;
            for (o, e) in next.get_mut(1, 0).iter_mut().zip(emit_h.iter()) {
                *o += e;
            }
            for (o, e) in next.get_mut(0, 1).iter_mut().zip(emit_v.iter()) {
                *o += e;
            }
            let inflow = &w.set.p_l * to_dvec(src.get(1, 0).unwrap()) + &w.set.p_d * to_dvec(src.get(0, 1).unwrap());
            fields.push(next);
            origin.push(inflow);
        }
        Ok(Self {
            horizon,
            psi0: init.psi0,
            origin,
            fields,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn psi0(&self) -> &DVector<C64> {
        &self.psi0
    }

    /// `Ψ_t*(x, y)`; the origin value sits in the `Left` slots.
    pub fn amplitude(&self, x: i64, y: i64, t: usize) -> Result<DVector<C64>> {
        if t > self.horizon {
            return Err(Error::Horizon {
                requested: t,
                horizon: self.horizon,
            });
        }
        if x < 0 || y < 0 {
            return Err(Error::UndefinedBasis(format!("({x}, {y}) is outside the quarter plane")));
        }
        if x == 0 && y == 0 {
            return Ok(self.origin[t].clone());
        }
        Ok(self.fields[t]
            .get(x, y)
            .map(to_dvec)
            .unwrap_or_else(|| DVector::from_element(16, c(0.0))))
    }
}

/// Single-target convenience wrapper around [`TransferPathSum`].
pub fn transfer_path_sum(p: &CoinParams, r: &ReducedCoinParams, x: i64, y: i64, t: usize) -> Result<DVector<C64>> {
    TransferPathSum::run(p, r, BouncePolicy::default(), t)?.amplitude(x, y, t)
}

/// Per-site coefficient vectors, indexed by time.
type SiteSeries = ((i64, i64), Vec<DVector<C64>>);

/// Generating functions assembled from origin-avoiding propagators
/// `K_{a→s}(z)` and first returns:
///
/// `O(z) = (I − E(z))⁻¹ z² [P_L K_{10→10} + P_D K_{10→01}] Ψ_1*`,
/// `E(z) = z² [P_L (K_{10→10} P̃_R + K_{01→10} Q̃_U) + P_D (K_{10→01} P̃_R + K_{01→01} Q̃_U)]`,
/// `Ψ̃*(s; z) = z K_{10→s} Ψ_1* + z (K_{10→s} P̃_R + K_{01→s} Q̃_U) O(z)`.
#[derive(Debug, Clone)]
pub struct RenewalSeries {
    order: usize,
    max_sum: i64,
    psi0: DVector<C64>,
    first_return: MatrixSeries,
    origin: Vec<DVector<C64>>,
    sites: Vec<SiteSeries>,
}

fn propagators(
    w: &Weights,
    seed: (i64, i64),
    targets: &[(i64, i64)],
    order: usize,
) -> Vec<MatrixSeries> {
    let side = order + 3;
    let cols: Vec<Vec<Vec<V16>>> = (0..16)
        .into_par_iter()
        .map(|col| {
            let mut f = Field::new(side);
            f.get_mut(seed.0, seed.1)[col] = c(1.0);
            let mut rec = vec![Vec::with_capacity(order + 1); targets.len()];
            for tau in 0..=order {
                for (i, &(x, y)) in targets.iter().enumerate() {
                    rec[i].push(*f.get(x, y).unwrap_or(&ZERO16));
                }
                if tau < order {
                    f = lattice_step(w, &f);
                }
            }
            rec
        })
        .collect();
    (0..targets.len())
        .map(|i| {
            let coeffs = (0..=order)
                .map(|tau| CMatrix::from_fn(16, 16, |row, col| cols[col][i][tau][row]))
                .collect();
            MatrixSeries::from_coeffs(coeffs, 16, order)
        })
        .collect()
}

impl RenewalSeries {
    /// Series through `order` for every lattice site with `x + y <= max_sum`.
    pub fn build(p: &CoinParams, r: &ReducedCoinParams, policy: BouncePolicy, order: usize, max_sum: i64) -> Result<Self> {
        let w = Weights::new(p, r, policy)?;
        let max_sum = max_sum.max(1);
        let mut targets = Vec::new();
        for s in 1..=max_sum {
            for x in 0..=s {
                targets.push((x, s - x));
            }
        }
        let i10 = targets.iter().position(|&t| t == (1, 0)).unwrap();
        let i01 = targets.iter().position(|&t| t == (0, 1)).unwrap();
        let k10 = propagators(&w, (1, 0), &targets, order);
        let k01 = propagators(&w, (0, 1), &targets, order);
        let ws = &w.set;

        let e = k10[i10]
            .postmul(&ws.p_r_tilde)
            .add(&k01[i10].postmul(&ws.q_u_tilde))?
            .premul(&ws.p_l)
            .add(
                &k10[i01]
                    .postmul(&ws.p_r_tilde)
                    .add(&k01[i01].postmul(&ws.q_u_tilde))?
                    .premul(&ws.p_d),
            )?
            .shift_up(2);
        let f = k10[i10].premul(&ws.p_l).add(&k10[i01].premul(&ws.p_d))?.shift_up(2);
        let resolvent = MatrixSeries::identity(16, order).sub(&e)?.inv()?;
        let origin_op = resolvent.mul(&f)?;

        let init = reduced_star_initial(p, r);
        let psi1 = &ws.q_tilde * &init.psi0;
        let origin = origin_op.apply(&psi1);
        let mut sites = Vec::with_capacity(targets.len());
        for (i, &site) in targets.iter().enumerate() {
            let through = k10[i]
                .postmul(&ws.p_r_tilde)
                .add(&k01[i].postmul(&ws.q_u_tilde))?
                .mul(&origin_op)?;
            let g = k10[i].add(&through)?.shift_up(1);
            sites.push((site, g.apply(&psi1)));
        }
        Ok(Self {
            order,
            max_sum,
            psi0: init.psi0,
            first_return: e,
            origin,
            sites,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `E(z)`, the first-return series of the origin.
    pub fn first_return(&self) -> &MatrixSeries {
        &self.first_return
    }

    /// `[z^t] Ψ̃*(x, y; z)`.
    pub fn coeff(&self, x: i64, y: i64, t: usize) -> Result<DVector<C64>> {
        if t > self.order {
            return Err(Error::Horizon {
                requested: t,
                horizon: self.order,
            });
        }
        if x < 0 || y < 0 {
            return Err(Error::UndefinedBasis(format!("({x}, {y}) is outside the quarter plane")));
        }
        if x == 0 && y == 0 {
            return Ok(if t == 0 { self.psi0.clone() } else { self.origin[t].clone() });
        }
        if x + y > t as i64 {
            return Ok(DVector::from_element(16, c(0.0)));
        }
        self.sites
            .iter()
            .find(|(s, _)| *s == (x, y))
            .map(|(_, v)| v[t].clone())
            .ok_or_else(|| {
                Error::InvalidParameter(format!("site ({x}, {y}) beyond x + y <= {} was not assembled", self.max_sum))
            })
    }
}

/// `[z^t] Ψ̃*(x, y; z)` with the default boundary policy.
pub fn state_genfunc_coeff(p: &CoinParams, r: &ReducedCoinParams, x: i64, y: i64, t: usize) -> Result<DVector<C64>> {
    RenewalSeries::build(p, r, BouncePolicy::default(), t, (x + y).max(1))?.coeff(x, y, t)
}

/// `E(z)` through `order` with the default boundary policy.
pub fn first_return_series(p: &CoinParams, r: &ReducedCoinParams, order: usize) -> Result<MatrixSeries> {
    Ok(RenewalSeries::build(p, r, BouncePolicy::default(), order, 1)?
        .first_return()
        .clone())
}

/// Literal Own/Other simulator state at `t = 1` equal to `Ψ_1*(1, 0)`.
pub fn simulator_start(p: &CoinParams, r: &ReducedCoinParams) -> Result<StateVector> {
    let layout = Layout::new(Model::ReducedStar, Mode::Literal)?;
    let init = reduced_star_initial(p, r);
    let w = direction_weights(p, r);
    let psi1 = &w.q_tilde * &init.psi0;
    let mut s = StateVector::zeros(layout).with_time(1);
    for sector in Sector::ALL {
        for ch in Chirality::ALL {
            let z = psi1[4 * sector.index() + ch.index()];
            if z != c(0.0) {
                s.set(Site::lattice(0, 1, 0), BasisLabel::Sectored(sector, ch), z)?;
            }
        }
    }
    Ok(s)
}

fn simulator_vector(s: &StateVector, x: i64, y: i64) -> DVector<C64> {
    if x == 0 && y == 0 {
        let o = s.site_amplitudes(Site::Origin);
        let mut v = DVector::from_element(16, c(0.0));
        for (sector, z) in o.iter().enumerate() {
            v[4 * sector + L] = *z;
        }
        v
    } else {
        DVector::from_vec(s.site_amplitudes(Site::lattice(0, x, y)))
    }
}

/// One row of a generating-function comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub site: (i64, i64),
    pub t: usize,
    /// Euclidean norm of the simulator amplitude vector
    pub simulator: f64,
    /// Euclidean norm of the vector it is compared with
    pub closed_form: f64,
    /// largest componentwise difference
    pub abs_diff: f64,
    pub assumption_flags: Vec<String>,
}

/// Closed-form `B` value against the coefficients fitted from the sub-walk
/// path sum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BFinding {
    pub tag: String,
    pub site: (i64, i64),
    pub z: [f64; 2],
    pub closed_form: [f64; 2],
    pub path_sum: [f64; 2],
    pub abs_diff: f64,
    /// norm of the part of the path sum outside the span of the four weights
    pub fit_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenfuncReport {
    pub horizon: usize,
    pub max_sum: i64,
    pub boundary: BouncePolicy,
    pub transfer_vs_simulator: f64,
    pub renewal_vs_simulator: f64,
    pub first_return_z2_residual: f64,
    pub rows: Vec<ComparisonRow>,
    pub closed_form_b: Vec<BFinding>,
    pub origin_return: Option<OriginReturnFinding>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OriginReturnFinding {
    pub z: [f64; 2],
    pub spectral_radius: [f64; 2],
    pub bounds: [f64; 2],
    /// `max |closed form − (I − E(z))⁻¹|` over entries
    pub abs_diff: Option<f64>,
    pub error: Option<String>,
}

fn max_diff(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Path sums of the sub-walk started at the origin with `Ξ_0 = I`, chirality
/// part only, on `x, y >= 0` with no special origin.
fn sub_walk(p: &CoinParams, horizon: usize, sites: &[(i64, i64)]) -> Vec<Vec<CMatrix>> {
    let (a, b, cc, d) = (p.a, p.b, p.c, p.d);
    let wl = single_row(L, [a * a, a * b, a * b, b * b]);
    let wr = single_row(R, [a * cc, a * d, b * cc, b * d]);
    let wd = single_row(D, [a * cc, b * cc, a * d, b * d]);
    let wu = single_row(U, [cc * cc, cc * d, cc * d, d * d]);
    let side = horizon + 2;
    let idx = |x: i64, y: i64| x as usize * side + y as usize;
    let mut field = vec![CMatrix::zeros(4, 4); side * side];
    field[0] = CMatrix::identity(4, 4);
    let mut out = vec![Vec::with_capacity(horizon + 1); sites.len()];
    for tau in 0..=horizon {
        for (i, &(x, y)) in sites.iter().enumerate() {
            out[i].push(field[idx(x, y)].clone());
        }
        if tau == horizon {
            break;
        }
        let mut next = vec![CMatrix::zeros(4, 4); side * side];
        for x in 0..side as i64 {
            for y in 0..side as i64 {
                let mut acc = CMatrix::zeros(4, 4);
                if (x + 1) < side as i64 {
                    acc += &wl * &field[idx(x + 1, y)];
                }
                if x >= 1 {
                    acc += &wr * &field[idx(x - 1, y)];
                }
                if (y + 1) < side as i64 {
                    acc += &wd * &field[idx(x, y + 1)];
                }
                if y >= 1 {
                    acc += &wu * &field[idx(x, y - 1)];
                }
                next[idx(x, y)] = acc;
            }
        }
        field = next;
    }
    out
}

fn b_findings(p: &CoinParams, z: C64, horizon: usize, max_sum: i64) -> Result<Vec<BFinding>> {
    let (cc, d) = (p.c, p.d);
    let (a, b) = (p.a, p.b);
    let rows: [(BTag, usize, [C64; 4]); 4] = [
        (BTag::PR, R, [a * cc, a * d, b * cc, b * d]),
        (BTag::QU, U, [cc * cc, cc * d, cc * d, d * d]),
        (BTag::PRPrime, D, [a * cc, a * d, b * cc, b * d]),
        (BTag::QUPrime, L, [cc * cc, cc * d, cc * d, cc * d]),
    ];
    let mut sites = Vec::new();
    for s in 0..=max_sum {
        for x in 0..=s {
            sites.push((x, s - x));
        }
    }
    let paths = sub_walk(p, horizon, &sites);
    let mut out = Vec::new();
    for (i, &(x, y)) in sites.iter().enumerate() {
        let mut residual: f64 = 0.0;
        let mut sums = [c(0.0); 4];
        let mut zp = c(1.0);
        for xi in &paths[i] {
            let mut fitted = CMatrix::zeros(4, 4);
            for (j, (_, row, vals)) in rows.iter().enumerate() {
                let nrm: f64 = vals.iter().map(|v| v.norm_sqr()).sum();
                let coef: C64 = (0..4).map(|col| xi[(*row, col)] * vals[col].conj()).sum::<C64>() / nrm;
                for col in 0..4 {
                    fitted[(*row, col)] = coef * vals[col];
                }
                sums[j] += coef * zp;
            }
            residual = residual.max((xi - fitted).norm());
            zp *= z;
        }
        for (j, (tag, _, _)) in rows.iter().enumerate() {
            let cf = closed_form_b(*tag, x, y, z, p)?;
            out.push(BFinding {
                tag: tag.name().into(),
                site: (x, y),
                z: [z.re, z.im],
                closed_form: [cf.re, cf.im],
                path_sum: [sums[j].re, sums[j].im],
                abs_diff: (cf - sums[j]).norm(),
                fit_residual: residual,
            });
        }
    }
    Ok(out)
}

/// Transfer path sum and renewal series against the literal Own/Other
/// simulator, plus the closed-form findings.
pub fn compare_with_simulator(
    p: &CoinParams,
    r: &ReducedCoinParams,
    policy: BouncePolicy,
    horizon: usize,
    max_sum: i64,
) -> Result<GenfuncReport> {
    let transfer = TransferPathSum::run(p, r, policy, horizon)?;
    let renewal = RenewalSeries::build(p, r, policy, horizon, max_sum)?;
    let spec = WalkSpec::from_state(*p, *r, simulator_start(p, r)?)?.with_boundary(policy);
    let mut sim = spec.initial.clone();
    let mut rows = Vec::new();
    let mut worst_transfer: f64 = 0.0;
    let mut worst_renewal: f64 = 0.0;
    for t in 1..=horizon {
        if t > 1 {
            sim = step(&spec, &sim)?;
        }
        for s in 0..=max_sum {
            for x in 0..=s {
                let y = s - x;
                let sv = simulator_vector(&sim, x, y);
                let tv = transfer.amplitude(x, y, t)?;
                let rv = renewal.coeff(x, y, t)?;
                let dt = max_diff(&sv, &tv);
                let dr = max_diff(&sv, &rv);
                worst_transfer = worst_transfer.max(dt);
                worst_renewal = worst_renewal.max(dr);
                rows.push(ComparisonRow {
                    site: (x, y),
                    t,
                    simulator: sv.norm(),
                    closed_form: rv.norm(),
                    abs_diff: dr,
                    assumption_flags: Vec::new(),
                });
            }
        }
    }
    let w = direction_weights(p, r);
    let z2 = renewal.first_return().coeff(2.min(renewal.order())).clone();
    let want = &w.p_l * &w.p_r_tilde + &w.p_d * &w.q_u_tilde;
    let first_return_z2_residual = (z2 - want).iter().map(|z| z.norm()).fold(0.0, f64::max);

    let scalars_r0 = super::radius_r0(p);
    let z = C64::new(0.25 * scalars_r0.min(p.c.norm_sqr()), 0.0);
    lambda_eval(z, p)?;
    let closed_form_b = b_findings(p, z, horizon, max_sum.min(3))?;
    let origin_return = Some(match super::origin_return_genfunc(z, p, r) {
        Ok(o) => {
            let e = renewal.first_return().eval(z);
            let res = (CMatrix::identity(16, 16) - e).try_inverse();
            OriginReturnFinding {
                z: [z.re, z.im],
                spectral_radius: o.spectral_radius,
                bounds: o.bounds,
                abs_diff: res.map(|m| (o.matrix - m).iter().map(|v| v.norm()).fold(0.0, f64::max)),
                error: None,
            }
        }
        Err(e) => OriginReturnFinding {
            z: [z.re, z.im],
            spectral_radius: [f64::NAN; 2],
            bounds: [f64::NAN; 2],
            abs_diff: None,
            error: Some(e.to_string()),
        },
    });
    Ok(GenfuncReport {
        horizon,
        max_sum,
        boundary: policy,
        transfer_vs_simulator: worst_transfer,
        renewal_vs_simulator: worst_renewal,
        first_return_z2_residual,
        rows,
        closed_form_b,
        origin_return,
    })
}
