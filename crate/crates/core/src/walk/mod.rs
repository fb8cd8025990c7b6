//! Direct state-vector evolution `U = S·F` on the plane, a quarter plane,
//! `k` joined quarter planes and the sixteen-component Own/Other walk.

mod engine;
mod io;
mod state;

use serde::{Deserialize, Serialize};

use crate::coin::{
    c, grover, origin_coin_star, plane_coin, reduced_coin, CMatrix, CoinParams, ReducedCoinParams,
    C64,
};
use crate::error::{Error, Result};

pub use engine::{apply_coin, shift, NormAudit};
pub use io::{write_snapshot_jsonl, DistributionRow, DistributionTable, SnapshotRecord};
pub use state::{
    Axis, BasisLabel, Chirality, Layout, Mode, Model, OriginSlot, Sector, Site, StateVector,
};

const NORM_TOL: f64 = 1e-12;

/// What happens to a component whose shift target leaves the quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum BouncePolicy {
    /// reverse the chirality and move along the axis to the paired site:
    /// `(0, y)` with `y` odd pairs with `(0, y + 1)`, so `|0, 1, Left⟩ ↦
    /// |0, 2, Right⟩` and `|0, 2, Left⟩ ↦ |0, 1, Right⟩`; likewise on the
    /// `x` axis with `Down ↦ Up`. Keeps the parity law `x + y ≡ t`.
    #[default]
    Paired,
    /// stay on the site with the chirality reversed
    Bounce,
    /// report the amplitude as lying on an undefined basis element
    Strict,
}

/// Coin used on lattice sites away from the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum LatticeCoin {
    /// `C_{Z×Z}`
    #[default]
    Plane,
    /// `C_k` built from the reduced parameters
    Reduced,
}

#[derive(Debug, Clone)]
pub struct WalkSpec {
    pub model: Model,
    pub coin_params: CoinParams,
    pub reduced_params: ReducedCoinParams,
    pub mode: Mode,
    pub boundary: BouncePolicy,
    pub lattice_coin: LatticeCoin,
    pub initial: StateVector,
    pub(crate) lattice_matrix: [[C64; 4]; 4],
    pub(crate) origin_matrix: CMatrix,
}

impl WalkSpec {
    /// Walk started from an arbitrary state; the state must have a layout
    /// matching `model` and `mode`.
    pub fn from_state(
        coin_params: CoinParams,
        reduced_params: ReducedCoinParams,
        initial: StateVector,
    ) -> Result<Self> {
        let layout = initial.layout();
        let mut spec = Self {
            model: layout.model,
            coin_params,
            reduced_params,
            mode: layout.mode,
            boundary: BouncePolicy::default(),
            lattice_coin: LatticeCoin::Plane,
            initial,
            lattice_matrix: [[c(0.0); 4]; 4],
            origin_matrix: CMatrix::zeros(0, 0),
        };
        spec.rebuild()?;
        Ok(spec)
    }

    pub fn with_boundary(mut self, policy: BouncePolicy) -> Self {
        self.boundary = policy;
        self
    }

    pub fn with_lattice_coin(mut self, coin: LatticeCoin) -> Result<Self> {
        self.lattice_coin = coin;
        self.rebuild()?;
        Ok(self)
    }

    pub fn with_initial(mut self, initial: StateVector) -> Result<Self> {
        if initial.layout() != self.layout() {
            return Err(Error::InvalidParameter(
                "initial state layout does not match the walk".into(),
            ));
        }
        self.initial = initial;
        Ok(self)
    }

    pub fn layout(&self) -> Layout {
        Layout {
            model: self.model,
            mode: self.mode,
        }
    }

    pub fn lattice_matrix(&self) -> CMatrix {
        CMatrix::from_fn(4, 4, |i, j| self.lattice_matrix[i][j])
    }

    pub fn origin_matrix(&self) -> &CMatrix {
        &self.origin_matrix
    }

    fn rebuild(&mut self) -> Result<()> {
        let k = self.layout().copies();
        if self.model == Model::ReducedStar || self.lattice_coin == LatticeCoin::Reduced {
            let expected = match self.model {
                Model::Joined(k) => k,
                Model::Quarter => 1,
                _ => self.reduced_params.k,
            };
            if self.reduced_params.k != expected {
                return Err(Error::InvalidParameter(format!(
                    "reduced parameters are for k = {}, walk has k = {expected}",
                    self.reduced_params.k
                )));
            }
        }
        let lm = match self.lattice_coin {
            LatticeCoin::Plane => plane_coin(&self.coin_params).0,
            LatticeCoin::Reduced => reduced_coin(&self.reduced_params).0,
        };
        for i in 0..4 {
            for j in 0..4 {
                self.lattice_matrix[i][j] = lm[(i, j)];
            }
        }
        let ct = self.coin_params.ctilde;
        self.origin_matrix = match (self.model, self.mode) {
            (Model::Plane, _) => CMatrix::zeros(0, 0),
            (Model::Quarter | Model::Joined(_), Mode::Literal) => grover(k)?.0 * ct,
            (Model::Quarter | Model::Joined(_), Mode::Unitarized) => grover(2 * k)?.0 * ct,
            (Model::ReducedStar, Mode::Literal) => origin_coin_star(&self.reduced_params).0 * ct,
            (Model::ReducedStar, Mode::Unitarized) => {
                unitarized_star_coin(&self.reduced_params) * ct
            }
        };
        Ok(())
    }
}

/// Origin coin of the unitarized Own/Other walk on labels `(sector, axis)`,
/// index `2 * sector + axis`.
///
/// With `n` the fixed unit vector of the normalized sector matrix `N`, the
/// first sector factor and the axis are mixed by the reflection
/// `(n nᵀ) ⊗ J_2 − I_4` (the reduction of `G_2k`) while the second sector
/// factor is acted on by `N`.
pub fn unitarized_star_coin(r: &ReducedCoinParams) -> CMatrix {
    let n = r.sector_fixed_vector();
    let nm = r.sector_matrix_normalized();
    // A indexed by 2 * s1 + axis
    let a = CMatrix::from_fn(4, 4, |i, j| {
        let v = n[i / 2] * n[j / 2] - if i == j { 1.0 } else { 0.0 };
        c(v)
    });
    CMatrix::from_fn(8, 8, |i, j| {
        let (s_i, ax_i) = (i / 2, i % 2);
        let (s_j, ax_j) = (j / 2, j % 2);
        let (s1_i, s2_i) = (s_i / 2, s_i % 2);
        let (s1_j, s2_j) = (s_j / 2, s_j % 2);
        a[(2 * s1_i + ax_i, 2 * s1_j + ax_j)] * nm[(s2_i, s2_j)]
    })
}

/// Builds a walk from a coin-space initial vector placed at the origin.
///
/// `Quarter` and `Joined(k)` take `k` amplitudes `ψ_r` on `ε_r`; in
/// unitarized mode each is split evenly as `ψ_r/√2` over `ε_r^H, ε_r^V`.
/// `ReducedStar` takes four sector amplitudes on the same pattern. `Plane`
/// takes four chirality amplitudes at `(0, 0)`.
pub fn build_walk(
    model: Model,
    coin_params: CoinParams,
    reduced_params: ReducedCoinParams,
    mode: Mode,
    initial_psi: &[C64],
) -> Result<WalkSpec> {
    let layout = Layout::new(model, mode)?;
    let norm: f64 = initial_psi.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }
    let expected = match model {
        Model::Plane | Model::ReducedStar => 4,
        Model::Quarter => 1,
        Model::Joined(k) => k,
    };
    if initial_psi.len() != expected {
        return Err(Error::InvalidParameter(format!(
            "initial vector has {} entries, model needs {expected}",
            initial_psi.len()
        )));
    }
    let mut s = StateVector::zeros(layout);
    if model == Model::Plane {
        for (l, z) in initial_psi.iter().enumerate() {
            s.set(
                Site::lattice(0, 0, 0),
                BasisLabel::Chirality(Chirality::from_index(l)),
                *z,
            )?;
        }
    } else {
        match mode {
            Mode::Literal => s.origin.copy_from_slice(initial_psi),
            Mode::Unitarized => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                for (i, z) in initial_psi.iter().enumerate() {
                    s.origin[2 * i] = z * h;
                    s.origin[2 * i + 1] = z * h;
                }
            }
        }
    }
    WalkSpec::from_state(coin_params, reduced_params, s)
}

/// `t` steps from `spec.initial`.
pub fn evolve(spec: &WalkSpec, t: u64) -> Result<StateVector> {
    let mut s = spec.initial.clone();
    for _ in 0..t {
        s = step(spec, &s)?;
    }
    Ok(s)
}

/// Like [`evolve`], also returning one norm audit record per step.
pub fn evolve_with_audit(spec: &WalkSpec, t: u64) -> Result<(StateVector, Vec<NormAudit>)> {
    let mut s = spec.initial.clone();
    let mut audit = Vec::with_capacity(t as usize);
    for _ in 0..t {
        let (next, a) = step_audited(spec, &s)?;
        audit.push(a);
        s = next;
    }
    Ok((s, audit))
}

pub fn step(spec: &WalkSpec, s: &StateVector) -> Result<StateVector> {
    let coined = apply_coin(spec, s)?;
    shift(spec, &coined)
}

pub fn step_audited(spec: &WalkSpec, s: &StateVector) -> Result<(StateVector, NormAudit)> {
    let before = s.norm_sqr();
    let next = step(spec, s)?;
    let after = next.norm_sqr();
    Ok((
        next,
        NormAudit {
            time: s.time() + 1,
            norm_sqr_before: before,
            norm_sqr_after: after,
        },
    ))
}

/// Iterator over successive states, starting with the initial state.
pub struct Trajectory<'a> {
    spec: &'a WalkSpec,
    prev: Option<StateVector>,
    failed: bool,
}

impl<'a> Trajectory<'a> {
    pub fn new(spec: &'a WalkSpec) -> Self {
        Self {
            spec,
            prev: None,
            failed: false,
        }
    }
}

impl Iterator for Trajectory<'_> {
    type Item = Result<StateVector>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let cur = match &self.prev {
            None => self.spec.initial.clone(),
            Some(p) => match step(self.spec, p) {
                Ok(n) => n,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            },
        };
        self.prev = Some(cur.clone());
        Some(Ok(cur))
    }
}

/// Per-site probabilities `Σ_l |α(site, l)|²`.
pub fn distribution(s: &StateVector) -> DistributionTable {
    DistributionTable::from_state(s)
}
