//! The enlarged walk, the `Λ(ψ)` contraction and the Own/Other reduction of
//! the joined walk to a single sixteen-component quarter-plane walk.
//!
//! A walk on `k` joined quarter planes started at the origin with coin state
//! `ψ` is, from `t = 1` on, the superposition `Σ_j ψ′_j Ψ^{(j)}_t` where
//! `Ψ^{(j)}` starts on copy `j` only and `ψ′ = c̃ G_k ψ`. Each `Ψ^{(j)}` is
//! symmetric under permutations of the other copies, so it is described by
//! the value on the own copy and the common value on the others. The
//! Own/Other walk carries this pair in the first factor of its sector label;
//! the second factor is redundant and is contracted with the fixed covector
//! of the sector matrix.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::coin::{c, direction_weights, CoinParams, ReducedCoinParams, C64};
use crate::error::{Error, Result};
use crate::walk::{
    evolve, step, Axis, BasisLabel, Chirality, Layout, Mode, Model, Sector, Site, StateVector, WalkSpec,
};

const PSI_TOL: f64 = 1e-12;

/// Origin coin state `ψ` of the joined walk and its image `ψ′ = c̃ G_k ψ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialPsi {
    psi: Vec<C64>,
    psi_prime: Vec<C64>,
}

impl InitialPsi {
    pub fn new(psi: Vec<C64>, ctilde: C64) -> Result<Self> {
        if psi.is_empty() {
            return Err(Error::InvalidParameter("ψ must have at least one entry".into()));
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > PSI_TOL {
            return Err(Error::NotNormalized(norm));
        }
        let k = psi.len() as f64;
        let total: C64 = psi.iter().sum();
        let psi_prime = psi.iter().map(|p| ctilde * (total * (2.0 / k) - p)).collect();
        Ok(Self { psi, psi_prime })
    }

    pub fn k(&self) -> usize {
        self.psi.len()
    }

    pub fn psi(&self) -> &[C64] {
        &self.psi
    }

    pub fn psi_prime(&self) -> &[C64] {
        &self.psi_prime
    }
}

/// Which first-step branch the enlarged walk starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LiftBranch {
    /// `|h_j(1,0), Right⟩`
    Horizontal,
    /// `|h_j(0,1), Up⟩`
    Vertical,
    /// both terms, which is what the origin shift produces
    Both,
}

/// The enlarged walk at `t = 1`: one joined-walk state per value of the
/// extra index `ε′_j`, together with the contraction vector `ψ′`.
#[derive(Debug, Clone)]
pub struct LiftedState {
    pub branch: LiftBranch,
    pub states: Vec<StateVector>,
    pub lambda: Vec<C64>,
}

impl LiftedState {
    pub fn norm_sqr(&self) -> f64 {
        self.states.iter().map(StateVector::norm_sqr).sum()
    }
}

fn branch_weight(mode: Mode, branch: LiftBranch) -> f64 {
    match (mode, branch) {
        (Mode::Unitarized, LiftBranch::Both) => std::f64::consts::FRAC_1_SQRT_2,
        _ => 1.0,
    }
}

/// Starting states of the enlarged walk.
///
/// In unitarized mode the `Both` branch carries `1/√2` on each term, matching
/// the even split of the origin state.
pub fn lift_initial(psi: &InitialPsi, mode: Mode, branch: LiftBranch) -> Result<LiftedState> {
    let k = psi.k();
    if psi.psi_prime.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::InvalidParameter("ψ′ vanishes".into()));
    }
    let layout = Layout::new(Model::Joined(k), mode)?;
    let w = c(branch_weight(mode, branch));
    let mut states = Vec::with_capacity(k);
    for j in 0..k {
        let mut s = StateVector::zeros(layout).with_time(1);
        if branch != LiftBranch::Vertical {
            s.set(Site::lattice(j, 1, 0), BasisLabel::Chirality(Chirality::Right), w)?;
        }
        if branch != LiftBranch::Horizontal {
            s.set(Site::lattice(j, 0, 1), BasisLabel::Chirality(Chirality::Up), w)?;
        }
        states.push(s);
    }
    Ok(LiftedState {
        branch,
        states,
        lambda: psi.psi_prime.clone(),
    })
}

/// `Λ(ψ)`: contracts the extra index against `ψ′`.
pub fn lambda_apply(lambda: &[C64], states: &[StateVector]) -> Result<StateVector> {
    if lambda.len() != states.len() || states.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "Λ has {} entries but the enlarged state has {} components",
            lambda.len(),
            states.len()
        )));
    }
    let mut out = StateVector::zeros(states[0].layout()).with_time(states[0].time());
    for (l, s) in lambda.iter().zip(states) {
        out.axpy(*l, s)?;
    }
    Ok(out)
}

/// Evolves each component of the enlarged walk for `steps` steps.
pub fn evolve_enlarged(spec: &WalkSpec, states: &[StateVector], steps: u64) -> Result<Vec<StateVector>> {
    states
        .iter()
        .map(|s| {
            let mut cur = s.clone();
            for _ in 0..steps {
                cur = step(spec, &cur)?;
            }
            Ok(cur)
        })
        .collect()
}

/// `max_site ‖a(site) − b(site)‖`.
pub fn max_site_deviation(a: &StateVector, b: &StateVector) -> Result<f64> {
    let mut d = a.clone();
    d.axpy(c(-1.0), b)?;
    Ok(d.site_probabilities().map(|(_, p)| p.sqrt()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviationReport {
    pub k: usize,
    pub steps: u64,
    /// maximum over `t` of the per-time maximum site deviation
    pub max_deviation: f64,
    /// largest squared norm seen along the direct evolution
    pub max_norm_sqr: f64,
    pub per_t: Vec<f64>,
}

fn joined_spec(coin: CoinParams, k: usize, mode: Mode, psi: &[C64]) -> Result<WalkSpec> {
    let r = ReducedCoinParams::grover_default(k)?;
    crate::walk::build_walk(Model::Joined(k), coin, r, mode, psi)
}

/// Compares the directly evolved joined walk with `Λ(ψ)` applied to the
/// enlarged walk, for `t = 1 ..= steps`.
pub fn lemma2_check(coin: CoinParams, psi: &InitialPsi, mode: Mode, steps: u64) -> Result<DeviationReport> {
    let spec = joined_spec(coin, psi.k(), mode, psi.psi())?;
    let lifted = lift_initial(psi, mode, LiftBranch::Both)?;
    let mut direct = step(&spec, &spec.initial)?;
    let mut enlarged = lifted.states.clone();
    let mut per_t = Vec::with_capacity(steps as usize);
    let mut max_norm_sqr = direct.norm_sqr();
    for t in 1..=steps {
        if t > 1 {
            direct = step(&spec, &direct)?;
            enlarged = evolve_enlarged(&spec, &enlarged, 1)?;
        }
        max_norm_sqr = max_norm_sqr.max(direct.norm_sqr());
        let contracted = lambda_apply(&lifted.lambda, &enlarged)?;
        per_t.push(max_site_deviation(&direct, &contracted)?);
    }
    Ok(DeviationReport {
        k: psi.k(),
        steps,
        max_deviation: per_t.iter().copied().fold(0.0, f64::max),
        max_norm_sqr,
        per_t,
    })
}

/// The Own/Other walk for `k` joined quarter planes.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub coin: CoinParams,
    pub reduced: ReducedCoinParams,
    pub mode: Mode,
}

impl Reduction {
    pub fn new(coin: CoinParams, reduced: ReducedCoinParams, mode: Mode) -> Self {
        Self { coin, reduced, mode }
    }

    pub fn k(&self) -> usize {
        self.reduced.k
    }

    pub fn layout(&self) -> Layout {
        Layout {
            model: Model::ReducedStar,
            mode: self.mode,
        }
    }

    /// Contraction weights on the second sector factor.
    pub fn contraction(&self) -> [f64; 2] {
        match self.mode {
            Mode::Literal => self.reduced.sector_fixed_covector(),
            Mode::Unitarized => self.reduced.sector_fixed_vector(),
        }
    }

    /// Factor converting the "other" value to the amplitude on each other copy.
    fn other_scale(&self) -> f64 {
        match self.mode {
            Mode::Literal => 1.0,
            Mode::Unitarized if self.k() > 1 => 1.0 / (self.k() as f64 - 1.0).sqrt(),
            Mode::Unitarized => 0.0,
        }
    }

    pub fn spec(&self, initial: StateVector) -> Result<WalkSpec> {
        WalkSpec::from_state(self.coin, self.reduced, initial)
    }

    /// State at `t = 1` of the walk started on the own copy: unit own value on
    /// `(1,0)` moving right and `(0,1)` moving up (`1/√2` each in unitarized
    /// mode).
    pub fn initial(&self) -> Result<StateVector> {
        let w = self.contraction();
        let u = match self.mode {
            Mode::Literal if w[0] != 0.0 => [1.0 / w[0], 0.0],
            Mode::Literal => [0.0, 1.0 / w[1]],
            Mode::Unitarized => w,
        };
        let amp = branch_weight(self.mode, LiftBranch::Both);
        let mut s = StateVector::zeros(self.layout()).with_time(1);
        for (s2, coef) in u.iter().enumerate() {
            if *coef == 0.0 {
                continue;
            }
            let sector = Sector::from_index(s2);
            s.set(Site::lattice(0, 1, 0), BasisLabel::Sectored(sector, Chirality::Right), c(amp * coef))?;
            s.set(Site::lattice(0, 0, 1), BasisLabel::Sectored(sector, Chirality::Up), c(amp * coef))?;
        }
        Ok(s)
    }

    /// Own and other values of a sixteen-component vector at one site.
    fn own_other(&self, v: &[C64], slot: impl Fn(usize) -> usize) -> (C64, C64) {
        let w = self.contraction();
        let own = v[slot(0)] * w[0] + v[slot(1)] * w[1];
        let other = v[slot(2)] * w[0] + v[slot(3)] * w[1];
        (own, other * self.other_scale())
    }

    /// Joined-walk amplitudes of copy `r` at lattice site `(x, y)`.
    fn copy_amplitudes(&self, star: &StateVector, lambda: &[C64], r: usize, x: i64, y: i64) -> [C64; 4] {
        let v = star.site_amplitudes(Site::lattice(0, x, y));
        let total: C64 = lambda.iter().sum();
        let mut out = [c(0.0); 4];
        for (l, o) in out.iter_mut().enumerate() {
            let (own, other) = self.own_other(&v, |s| 4 * s + l);
            *o = lambda[r] * own + (total - lambda[r]) * other;
        }
        out
    }

    /// Joined-walk origin amplitudes of copy `r` (one per axis in unitarized mode).
    fn copy_origin(&self, star: &StateVector, lambda: &[C64], r: usize) -> Vec<C64> {
        let v = &star.site_amplitudes(Site::Origin);
        let total: C64 = lambda.iter().sum();
        let axes = match self.mode {
            Mode::Literal => 1,
            Mode::Unitarized => 2,
        };
        (0..axes)
            .map(|ax| {
                let (own, other) = self.own_other(v, |s| axes * s + ax);
                lambda[r] * own + (total - lambda[r]) * other
            })
            .collect()
    }

    /// Maps an Own/Other state to the joined walk `Σ_j λ_j Ψ^{(j)}`.
    pub fn project(&self, star: &StateVector, lambda: &[C64]) -> Result<StateVector> {
        let k = self.k();
        if lambda.len() != k {
            return Err(Error::InvalidParameter(format!("Λ has {} entries, k = {k}", lambda.len())));
        }
        let layout = Layout::new(Model::Joined(k), self.mode)?;
        let mut out = StateVector::zeros(layout).with_time(star.time());
        let ext = star.extent() as i64;
        for r in 0..k {
            for x in 0..=ext {
                for y in 0..=ext {
                    if x == 0 && y == 0 {
                        continue;
                    }
                    let amps = self.copy_amplitudes(star, lambda, r, x, y);
                    if amps.iter().all(|z| z.norm() == 0.0) {
                        continue;
                    }
                    for (l, z) in amps.iter().enumerate() {
                        out.set(Site::lattice(r, x, y), BasisLabel::Chirality(Chirality::from_index(l)), *z)?;
                    }
                }
            }
            let origin = self.copy_origin(star, lambda, r);
            for (ax, z) in origin.iter().enumerate() {
                let label = match self.mode {
                    Mode::Literal => BasisLabel::Epsilon(r),
                    Mode::Unitarized => BasisLabel::EpsilonSplit(r, Axis::from_index(ax)),
                };
                out.set(Site::Origin, label, *z)?;
            }
        }
        Ok(out)
    }

    /// `P(X_{t,r} = x, Y_{t,r} = y) = ‖Λ_r Ψ*_t(x, y)‖²`; `(0, 0)` is the origin.
    pub fn event_probability(&self, star: &StateVector, lambda: &[C64], r: usize, x: i64, y: i64) -> f64 {
        if x == 0 && y == 0 {
            self.copy_origin(star, lambda, r).iter().map(|z| z.norm_sqr()).sum()
        } else {
            self.copy_amplitudes(star, lambda, r, x, y).iter().map(|z| z.norm_sqr()).sum()
        }
    }

    /// All nonzero event probabilities of the state.
    pub fn event_table(&self, star: &StateVector, lambda: &[C64]) -> EventTable {
        let t = star.time();
        let ext = star.extent() as i64;
        let mut rows = Vec::new();
        for r in 0..self.k() {
            for x in 0..=ext {
                for y in 0..=ext {
                    let p = self.event_probability(star, lambda, r, x, y);
                    if p > 0.0 {
                        rows.push(EventRow { t, r, x, y, p });
                    }
                }
            }
        }
        EventTable { rows }
    }

    /// `max |step_J(project(s)) − project(step(s))|` with `Λ = e_0`: the
    /// joined walk maps the image of the Own/Other space into itself.
    pub fn step_invariance_residual(&self, s: &StateVector) -> Result<f64> {
        let k = self.k();
        let mut e0 = vec![c(0.0); k];
        e0[0] = c(1.0);
        let spec = self.spec(s.clone())?;
        let joined = joined_spec_for(self, k)?;
        let a = step(&joined, &self.project(s, &e0)?)?;
        let b = self.project(&step(&spec, s)?, &e0)?;
        a.max_abs_diff(&b)
    }
}

fn joined_spec_for(red: &Reduction, k: usize) -> Result<WalkSpec> {
    let layout = Layout::new(Model::Joined(k), red.mode)?;
    WalkSpec::from_state(red.coin, ReducedCoinParams::grover_default(k)?, StateVector::zeros(layout))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub t: u64,
    pub r: usize,
    pub x: i64,
    pub y: i64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTable {
    pub rows: Vec<EventRow>,
}

impl EventTable {
    /// `Σ_j Σ_{x,y} P(X_{t,j} = x, Y_{t,j} = y)`.
    pub fn total(&self) -> f64 {
        self.rows.iter().map(|r| r.p).sum()
    }

    pub fn get(&self, r: usize, x: i64, y: i64) -> f64 {
        self.rows
            .iter()
            .find(|e| e.r == r && e.x == x && e.y == y)
            .map_or(0.0, |e| e.p)
    }

    /// CSV with header `t,r,x,y,p`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for row in &self.rows {
            wtr.serialize(row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Direct-route probability on the joined walk: `|α_t(0,0,ε_r)|²` at the
/// origin (summed over axes in unitarized mode), `‖Ψ_t(h_r(x,y))‖²` elsewhere.
pub fn direct_event_probability(joined: &StateVector, r: usize, x: i64, y: i64) -> f64 {
    if x == 0 && y == 0 {
        let layout = joined.layout();
        joined
            .site_amplitudes(Site::Origin)
            .iter()
            .enumerate()
            .filter(|(i, _)| layout.origin_slot(*i).copy == r)
            .map(|(_, z)| z.norm_sqr())
            .sum()
    } else {
        joined
            .site_amplitudes(Site::lattice(r, x, y))
            .iter()
            .map(|z| z.norm_sqr())
            .sum()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionReport {
    pub k: usize,
    pub steps: u64,
    /// max amplitude deviation between the joined walk and the projected
    /// Own/Other walk
    pub max_amplitude_deviation: f64,
    /// max deviation between the two event-probability routes
    pub max_event_deviation: f64,
    /// max over `t` of `|Σ P − 1|` (meaningful in unitarized mode)
    pub max_total_mass_deviation: f64,
    /// max deviation of `P(P_{t,k} = origin) − Σ_j P(X_{t,j} = 0, Y_{t,j} = 0)`
    pub max_origin_identity_deviation: f64,
}

/// Runs the joined walk from the origin and the Own/Other walk side by side.
pub fn reduction_check(coin: CoinParams, psi: &InitialPsi, mode: Mode, steps: u64) -> Result<ReductionReport> {
    let k = psi.k();
    let red = Reduction::new(coin, ReducedCoinParams::grover_default(k)?, mode);
    let spec = joined_spec(coin, k, mode, psi.psi())?;
    let star_spec = red.spec(red.initial()?)?;
    let lambda = psi.psi_prime();
    let mut direct = step(&spec, &spec.initial)?;
    let mut star = star_spec.initial.clone();
    let mut rep = ReductionReport {
        k,
        steps,
        max_amplitude_deviation: 0.0,
        max_event_deviation: 0.0,
        max_total_mass_deviation: 0.0,
        max_origin_identity_deviation: 0.0,
    };
    for t in 1..=steps {
        if t > 1 {
            direct = step(&spec, &direct)?;
            star = step(&star_spec, &star)?;
        }
        let projected = red.project(&star, lambda)?;
        rep.max_amplitude_deviation = rep.max_amplitude_deviation.max(direct.max_abs_diff(&projected)?);
        let table = red.event_table(&star, lambda);
        rep.max_total_mass_deviation = rep.max_total_mass_deviation.max((table.total() - 1.0).abs());
        let ext = direct.extent().max(star.extent()) as i64;
        for r in 0..k {
            for x in 0..=ext {
                for y in 0..=ext {
                    let d = direct_event_probability(&direct, r, x, y);
                    let e = red.event_probability(&star, lambda, r, x, y);
                    rep.max_event_deviation = rep.max_event_deviation.max((d - e).abs());
                }
            }
        }
        let origin_direct: f64 = direct.site_amplitudes(Site::Origin).iter().map(|z| z.norm_sqr()).sum();
        let origin_events: f64 = (0..k).map(|r| red.event_probability(&star, lambda, r, 0, 0)).sum();
        rep.max_origin_identity_deviation = rep.max_origin_identity_deviation.max((origin_direct - origin_events).abs());
    }
    Ok(rep)
}

/// Where the origin table places the outgoing `Right` component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OriginExit {
    /// `(1, 0)`, the convention used throughout this crate
    OneZero,
    /// `(0, 1)`, as the table is typeset
    ZeroOne,
}

/// The four origin rows `|m, 0, 0, ε⟩ ↦ Σ_{m′} coef |m′, ·, ·, Right⟩`,
/// transcribed independently of the coin constructors. Entry `[m][m′]`.
pub fn origin_table(r: &ReducedCoinParams, ctilde: C64) -> [[C64; 4]; 4] {
    let (a, b) = (r.a_k, r.b_k);
    let km1 = r.k as f64 - 1.0;
    let rows = [
        // Own_L: a², Own_D ab, Other_R ab, Other_U b²
        [a * a, a * b, a * b, b * b],
        [a * b * km1, -a * a, b * b * km1, -a * b],
        [a * b * km1, b * b * km1, -a * a, -a * b],
        [b * b * km1 * km1, -a * b * km1, -a * b * km1, a * a],
    ];
    rows.map(|row| row.map(|v| ctilde * v))
}

/// Max deviation between one literal Own/Other step from each `|m,0,0,ε⟩`
/// and the origin table, reading the `Right` amplitudes at the chosen exit.
pub fn origin_table_residual(coin: CoinParams, r: ReducedCoinParams, exit: OriginExit) -> Result<f64> {
    let red = Reduction::new(coin, r, Mode::Literal);
    let table = origin_table(&r, coin.ctilde);
    let (x, y) = match exit {
        OriginExit::OneZero => (1, 0),
        OriginExit::ZeroOne => (0, 1),
    };
    let mut worst: f64 = 0.0;
    for m in Sector::ALL {
        let mut s = StateVector::zeros(red.layout());
        s.set(Site::Origin, BasisLabel::SectorEpsilon(m), c(1.0))?;
        let spec = red.spec(s.clone())?;
        let out = step(&spec, &s)?;
        for m2 in Sector::ALL {
            let got = out.get(Site::lattice(0, x, y), BasisLabel::Sectored(m2, Chirality::Right))?;
            worst = worst.max((got - table[m.index()][m2.index()]).norm());
        }
    }
    Ok(worst)
}

/// `Ψ_0*(0,0)` and `Ψ_1*(1,0)` in the sixteen-dimensional sector-major
/// coordinates, with the residual `‖Q̃ Ψ_0* − Ψ_1*‖_∞`.
#[derive(Debug, Clone)]
pub struct StarInitial {
    pub psi0: DVector<C64>,
    pub psi1: DVector<C64>,
    pub residual: f64,
}

pub fn reduced_star_initial(coin: &CoinParams, r: &ReducedCoinParams) -> StarInitial {
    let (a, b) = (r.a_k, r.b_k);
    let ct2 = coin.ctilde * coin.ctilde;
    let sectors = [a * a, a * b, a * b, b * b];
    let mut psi0 = DVector::from_element(16, c(0.0));
    for (s, v) in sectors.iter().enumerate() {
        psi0[4 * s + Chirality::Left.index()] = c(*v) / ct2;
    }
    let mut psi1 = DVector::from_element(16, c(0.0));
    psi1[Chirality::Up.index()] = c(1.0);
    let w = direction_weights(coin, r);
    let residual = (&w.q_tilde * &psi0 - &psi1).iter().map(|z| z.norm()).fold(0.0, f64::max);
    StarInitial { psi0, psi1, residual }
}

/// Quarter-plane walk versus the `k = 1` Own/Other walk: maximum difference
/// of site probabilities over `t = 1 ..= steps`.
pub fn quarter_vs_star(coin: CoinParams, steps: u64) -> Result<f64> {
    let r1 = ReducedCoinParams::grover_default(1)?;
    let quarter = crate::walk::build_walk(Model::Quarter, coin, r1, Mode::Literal, &[c(1.0)])?;
    let red = Reduction::new(coin, r1, Mode::Literal);
    let star_spec = red.spec(red.initial()?)?;
    let lambda = [coin.ctilde];
    let mut q = evolve(&quarter, 1)?;
    let mut s = star_spec.initial.clone();
    let mut worst: f64 = 0.0;
    for t in 1..=steps {
        if t > 1 {
            q = step(&quarter, &q)?;
            s = step(&star_spec, &s)?;
        }
        let ext = q.extent().max(s.extent()) as i64;
        for x in 0..=ext {
            for y in 0..=ext {
                let pq = if x == 0 && y == 0 {
                    q.site_amplitudes(Site::Origin)[0].norm_sqr()
                } else {
                    q.site_amplitudes(Site::lattice(0, x, y)).iter().map(|z| z.norm_sqr()).sum()
                };
                let ps = red.event_probability(&s, &lambda, 0, x, y);
                worst = worst.max((pq - ps).abs());
            }
        }
    }
    Ok(worst)
}
