use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use quadwalk_core::coin::{CoinParams, ReducedCoinParams};
use quadwalk_core::genfunc::MuVariant;
use quadwalk_core::limit::{AssumptionFlags, ThetaChoice};
use quadwalk_core::tree::{CopyKey, DEFAULT_AMPLITUDE_LIMIT};
use quadwalk_core::walk::{BouncePolicy, Mode, Model};
use quadwalk_core::C64;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CoinPreset {
    Hadamard,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Literal,
    Unitarized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Joined,
    Quarter,
    Plane,
    ReducedStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryArg {
    Paired,
    Bounce,
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EtaArg {
    DeltaPm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MuArg {
    DeltaSquared,
    SingleDelta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaArg {
    Phi,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CopyKeyArg {
    FirstApplied,
    Outermost,
}

/// Fully resolved run configuration; also the config-file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub k: usize,
    pub coin: CoinPreset,
    /// `[re, im]` entries, used when `coin = "explicit"`
    pub a: Option<[f64; 2]>,
    pub b: Option<[f64; 2]>,
    pub c: Option<[f64; 2]>,
    pub d: Option<[f64; 2]>,
    pub ctilde_phase: f64,
    /// `[re, im]` per copy; defaults to the first basis vector
    pub psi: Option<Vec<[f64; 2]>>,
    pub steps: u64,
    pub every: u64,
    pub mode: ModeArg,
    pub model: ModelArg,
    pub boundary: BoundaryArg,
    pub order: usize,
    pub tmax: usize,
    pub max_sum: i64,
    pub copy_key: CopyKeyArg,
    pub tree_limit: usize,
    pub windows: Vec<[u64; 2]>,
    pub times: Vec<u64>,
    pub site_radius: i64,
    pub grid: usize,
    pub format: FormatArg,
    pub output: Option<PathBuf>,
    pub eta_pm: EtaArg,
    pub mu_variant: MuArg,
    pub theta_choice: ThetaArg,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k: 2,
            coin: CoinPreset::Hadamard,
            a: None,
            b: None,
            c: None,
            d: None,
            ctilde_phase: 0.0,
            psi: None,
            steps: 100,
            every: 1,
            mode: ModeArg::Unitarized,
            model: ModelArg::Joined,
            boundary: BoundaryArg::Paired,
            order: 64,
            tmax: 30,
            max_sum: 6,
            copy_key: CopyKeyArg::FirstApplied,
            tree_limit: DEFAULT_AMPLITUDE_LIMIT,
            windows: vec![[100, 200], [200, 300]],
            times: vec![100, 500],
            site_radius: 1,
            grid: 200,
            format: FormatArg::Json,
            output: None,
            eta_pm: EtaArg::DeltaPm,
            mu_variant: MuArg::DeltaSquared,
            theta_choice: ThetaArg::Phi,
        }
    }
}

fn parse_complex(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    match parts.as_slice() {
        [re] => Ok([num(re)?, 0.0]),
        [re, im] => Ok([num(re)?, num(im)?]),
        _ => Err(format!("expected RE or RE,IM, got {s:?}")),
    }
}

fn parse_window(s: &str) -> Result<[u64; 2], String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected T0:T1, got {s:?}"))?;
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("{t:?}: {e}"));
    Ok([num(a)?, num(b)?])
}

/// Command-line overrides; every flag beats the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Number of joined quarter planes
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub coin: Option<CoinPreset>,
    /// Coin entry as RE or RE,IM (explicit coin)
    #[arg(long, global = true, value_parser = parse_complex, allow_hyphen_values = true)]
    pub a: Option<[f64; 2]>,
    #[arg(long, global = true, value_parser = parse_complex, allow_hyphen_values = true)]
    pub b: Option<[f64; 2]>,
    #[arg(long, global = true, value_parser = parse_complex, allow_hyphen_values = true)]
    pub c: Option<[f64; 2]>,
    #[arg(long, global = true, value_parser = parse_complex, allow_hyphen_values = true)]
    pub d: Option<[f64; 2]>,
    /// Phase angle of the origin factor c̃
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub ctilde_phase: Option<f64>,
    /// Initial ψ entry, repeated once per copy, as RE or RE,IM
    #[arg(long, global = true, value_parser = parse_complex, allow_hyphen_values = true)]
    pub psi: Vec<[f64; 2]>,
    #[arg(long, global = true)]
    pub steps: Option<u64>,
    /// Write a snapshot every this many steps
    #[arg(long, global = true)]
    pub every: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long, global = true, value_enum)]
    pub boundary: Option<BoundaryArg>,
    /// Truncation order of power series
    #[arg(long, global = true)]
    pub order: Option<usize>,
    /// Horizon of the generating-function comparison
    #[arg(long, global = true)]
    pub tmax: Option<usize>,
    /// Largest x + y compared
    #[arg(long, global = true)]
    pub max_sum: Option<i64>,
    #[arg(long, global = true, value_enum)]
    pub copy_key: Option<CopyKeyArg>,
    /// Largest tree state, in stored amplitudes
    #[arg(long, global = true)]
    pub tree_limit: Option<usize>,
    /// Averaging window T0:T1, repeatable
    #[arg(long = "window", global = true, value_parser = parse_window)]
    pub windows: Vec<[u64; 2]>,
    /// Snapshot time for rescaled statistics, repeatable
    #[arg(long = "time", global = true)]
    pub times: Vec<u64>,
    /// Sites with x + y up to this value are reported by theorem1
    #[arg(long, global = true)]
    pub site_radius: Option<i64>,
    /// Grid points of the density table
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Artifact path; standard output when absent
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub eta_pm: Option<EtaArg>,
    #[arg(long, global = true, value_enum)]
    pub mu_variant: Option<MuArg>,
    #[arg(long, global = true, value_enum)]
    pub theta_choice: Option<ThetaArg>,
}

macro_rules! apply {
    ($cfg:ident, $ov:ident; $($field:ident),*) => {
        $(if let Some(v) = $ov.$field.clone() { $cfg.$field = v; })*
    };
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn apply(&mut self, ov: &Overrides) {
        apply!(self, ov; k, coin, ctilde_phase, steps, every, mode, model, boundary, order, tmax, max_sum,
            copy_key, tree_limit, site_radius, grid, format, eta_pm, mu_variant, theta_choice);
        for (slot, v) in [(&mut self.a, ov.a), (&mut self.b, ov.b), (&mut self.c, ov.c), (&mut self.d, ov.d)] {
            if v.is_some() {
                *slot = v;
            }
        }
        if !ov.psi.is_empty() {
            self.psi = Some(ov.psi.clone());
        }
        if !ov.windows.is_empty() {
            self.windows = ov.windows.clone();
        }
        if !ov.times.is_empty() {
            self.times = ov.times.clone();
        }
        if ov.output.is_some() {
            self.output = ov.output.clone();
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn ctilde(&self) -> C64 {
        C64::from_polar(1.0, self.ctilde_phase)
    }

    pub fn coin_params(&self) -> Result<CoinParams, CliError> {
        let coin = match self.coin {
            CoinPreset::Hadamard => CoinParams::hadamard(self.ctilde()),
            CoinPreset::Explicit => {
                let get = |v: Option<[f64; 2]>, name: &str| {
                    v.map(|[re, im]| C64::new(re, im))
                        .ok_or_else(|| CliError::Usage(format!("explicit coin needs --{name}")))
                };
                CoinParams::new(get(self.a, "a")?, get(self.b, "b")?, get(self.c, "c")?, get(self.d, "d")?, self.ctilde())
            }
        };
        coin.map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn reduced(&self) -> Result<ReducedCoinParams, CliError> {
        ReducedCoinParams::grover_default(self.k).map_err(|e| CliError::Usage(e.to_string()))
    }

    /// The initial vector, defaulting to the first basis vector of length `n`.
    pub fn initial_vector(&self, n: usize) -> Result<Vec<C64>, CliError> {
        let v: Vec<C64> = match &self.psi {
            Some(v) => v.iter().map(|[re, im]| C64::new(*re, *im)).collect(),
            None => (0..n).map(|j| C64::new(if j == 0 { 1.0 } else { 0.0 }, 0.0)).collect(),
        };
        if v.len() != n {
            return Err(CliError::Usage(format!("initial vector has {} entries, expected {n}", v.len())));
        }
        Ok(v)
    }

    pub fn psi(&self) -> Result<Vec<C64>, CliError> {
        self.initial_vector(self.k)
    }

    pub fn mode(&self) -> Mode {
        match self.mode {
            ModeArg::Literal => Mode::Literal,
            ModeArg::Unitarized => Mode::Unitarized,
        }
    }

    pub fn model(&self) -> Model {
        match self.model {
            ModelArg::Joined => Model::Joined(self.k),
            ModelArg::Quarter => Model::Quarter,
            ModelArg::Plane => Model::Plane,
            ModelArg::ReducedStar => Model::ReducedStar,
        }
    }

    pub fn boundary(&self) -> BouncePolicy {
        match self.boundary {
            BoundaryArg::Paired => BouncePolicy::Paired,
            BoundaryArg::Bounce => BouncePolicy::Bounce,
            BoundaryArg::Strict => BouncePolicy::Strict,
        }
    }

    pub fn copy_key(&self) -> CopyKey {
        match self.copy_key {
            CopyKeyArg::FirstApplied => CopyKey::FirstApplied,
            CopyKeyArg::Outermost => CopyKey::Outermost,
        }
    }

    pub fn flags(&self) -> AssumptionFlags {
        AssumptionFlags {
            theta: match self.theta_choice {
                ThetaArg::Phi => ThetaChoice::Phi,
                ThetaArg::Zero => ThetaChoice::Zero,
            },
            mu_variant: match self.mu_variant {
                MuArg::DeltaSquared => MuVariant::DeltaSquared,
                MuArg::SingleDelta => MuVariant::SingleDelta,
            },
        }
    }
}
