//! Walk on the product of two `k`-regular trees whose vertices are reduced
//! words in involutive generators, and its projection onto the joined
//! quarter planes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coin::{c, grover, CoinParams, ReducedCoinParams, C64};
use crate::error::{Error, Result};
use crate::walk::{build_walk, distribution, step, LatticeCoin, Mode, Model, Site};

/// Default cap on the number of stored basis amplitudes.
pub const DEFAULT_AMPLITUDE_LIMIT: usize = 4_000_000;

/// Reduced word `σ_{i_n} … σ_{i_1}`; `letters[0]` is `i_1`, the letter
/// applied first, and the last entry is the outermost letter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub struct TreeWord {
    letters: Vec<u8>,
}

impl TreeWord {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Word from letters in application order; rejects adjacent repeats.
    pub fn from_letters(letters: Vec<u8>) -> Result<Self> {
        if letters.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!("{letters:?} is not a reduced word")));
        }
        Ok(Self { letters })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn is_reduced(&self) -> bool {
        !self.letters.windows(2).any(|w| w[0] == w[1])
    }

    /// `σ_i · self`, cancelling `σ_i² = e`.
    pub fn prepend(&self, i: u8) -> Self {
        let mut letters = self.letters.clone();
        if letters.last() == Some(&i) {
            letters.pop();
        } else {
            letters.push(i);
        }
        Self { letters }
    }

    pub fn first_applied(&self) -> Option<u8> {
        self.letters.first().copied()
    }

    pub fn outermost(&self) -> Option<u8> {
        self.letters.last().copied()
    }
}

/// How a pair of words is assigned to a quarter-plane copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CopyKey {
    /// the letter applied first, i.e. the branch left from the root
    #[default]
    FirstApplied,
    /// the most recently applied letter
    Outermost,
}

/// State of the tree walk: amplitudes over `(x-word, y-word)` with a
/// `k²`-dimensional coin `(σ_x index, σ_y index)`, index `k * i + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeState {
    pub k: usize,
    pub time: u64,
    pub amplitudes: BTreeMap<(TreeWord, TreeWord), Vec<C64>>,
}

impl TreeState {
    /// Coin state `coin` (length `k²`) at the root `(e, e)`.
    pub fn at_root(k: usize, coin: Vec<C64>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter("the tree walk needs k >= 2".into()));
        }
        if coin.len() != k * k {
            return Err(Error::InvalidParameter(format!("coin state needs {} entries", k * k)));
        }
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert((TreeWord::identity(), TreeWord::identity()), coin);
        Ok(Self {
            k,
            time: 0,
            amplitudes,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes
            .values()
            .flat_map(|v| v.iter())
            .map(|z| z.norm_sqr())
            .sum()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len() * self.k * self.k
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }
}

/// Number of reduced words of length at most `n` over `k` letters.
pub fn words_up_to(k: usize, n: usize) -> usize {
    let mut total = 1usize;
    let mut level = k;
    for _ in 0..n {
        total = total.saturating_add(level);
        level = level.saturating_mul(k.saturating_sub(1));
    }
    total
}

/// Refuses walks whose state could exceed `limit` amplitudes by time `t`.
pub fn check_tree_budget(k: usize, t: u64, limit: usize) -> Result<()> {
    let words = words_up_to(k, t as usize);
    let need = words.saturating_mul(words).saturating_mul(k * k);
    if need > limit {
        return Err(Error::ResourceGuard {
            what: "tree walk amplitudes",
            requested: need,
            limit,
        });
    }
    Ok(())
}

/// One step: `G_k ⊗ G_k` on the coin (times `c̃` at the root), then each
/// coin component `(i, j)` prepends `σ_{x_i}` and `σ_{y_j}`.
pub fn tree_step(s: &TreeState, ctilde: C64) -> Result<TreeState> {
    let k = s.k;
    let g = grover(k)?.0;
    let root = (TreeWord::identity(), TreeWord::identity());
    let mut out: BTreeMap<(TreeWord, TreeWord), Vec<C64>> = BTreeMap::new();
    for (pos, v) in &s.amplitudes {
        if !pos.0.is_reduced() || !pos.1.is_reduced() {
            return Err(Error::UndefinedBasis(format!("non-reduced word pair {pos:?}")));
        }
        let scale = if *pos == root { ctilde } else { c(1.0) };
        for i in 0..k {
            let u = pos.0.prepend(i as u8);
            for j in 0..k {
                let mut amp = c(0.0);
                for i2 in 0..k {
                    for j2 in 0..k {
                        amp += g[(i, i2)] * g[(j, j2)] * v[k * i2 + j2];
                    }
                }
                if amp == c(0.0) {
                    continue;
                }
                let w = pos.1.prepend(j as u8);
                let entry = out
                    .entry((u.clone(), w))
                    .or_insert_with(|| vec![c(0.0); k * k]);
                entry[k * i + j] += scale * amp;
            }
        }
    }
    Ok(TreeState {
        k,
        time: s.time + 1,
        amplitudes: out,
    })
}

/// Joined-plane site of a word pair.
pub fn project_site(u: &TreeWord, v: &TreeWord, key: CopyKey) -> Site {
    if u.is_empty() && v.is_empty() {
        return Site::Origin;
    }
    let pick = |w: &TreeWord| match key {
        CopyKey::FirstApplied => w.first_applied(),
        CopyKey::Outermost => w.outermost(),
    };
    let copy = pick(u).or_else(|| pick(v)).expect("nonempty word") as usize;
    Site::lattice(copy, u.len() as i64, v.len() as i64)
}

/// Probabilities of the tree state accumulated on joined-plane sites.
pub fn project_to_joined(s: &TreeState, key: CopyKey) -> BTreeMap<Site, f64> {
    let mut out = BTreeMap::new();
    for ((u, v), amps) in &s.amplitudes {
        let p: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        *out.entry(project_site(u, v, key)).or_insert(0.0) += p;
    }
    out
}

/// Comparison of the projected tree walk with one reading of the joined walk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReadingReport {
    pub reading: String,
    pub per_t: Vec<f64>,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub k: usize,
    pub steps: u64,
    pub copy_key: CopyKey,
    pub tree_norm_deviation: f64,
    pub readings: Vec<ReadingReport>,
}

impl Lemma1Report {
    /// Smallest deviation over the readings.
    pub fn best(&self) -> f64 {
        self.readings
            .iter()
            .map(|r| r.max_deviation)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Runs the tree walk from `ψ ⊗ ψ` at the root next to the literal joined
/// walk from `ψ` at the origin, with `C_k` and with `C_{Z×Z}` on the lattice.
pub fn lemma1_check(coin: CoinParams, psi: &[C64], steps: u64, key: CopyKey, limit: usize) -> Result<Lemma1Report> {
    let k = psi.len();
    check_tree_budget(k, steps, limit)?;
    let mut root = Vec::with_capacity(k * k);
    for a in psi {
        for b in psi {
            root.push(a * b);
        }
    }
    let mut tree = TreeState::at_root(k, root)?;
    let r = ReducedCoinParams::grover_default(k)?;
    let readings = [("C_k", LatticeCoin::Reduced), ("C_ZxZ", LatticeCoin::Plane)];
    let mut specs = Vec::new();
    for (_, lc) in readings {
        specs.push(build_walk(Model::Joined(k), coin, r, Mode::Literal, psi)?.with_lattice_coin(lc)?);
    }
    let mut joined: Vec<_> = specs.iter().map(|s| s.initial.clone()).collect();
    let mut per: Vec<Vec<f64>> = vec![Vec::new(); readings.len()];
    let mut norm_dev: f64 = 0.0;
    for _ in 1..=steps {
        tree = tree_step(&tree, coin.ctilde)?;
        norm_dev = norm_dev.max((tree.norm_sqr() - 1.0).abs());
        let projected = project_to_joined(&tree, key);
        for (idx, spec) in specs.iter().enumerate() {
            joined[idx] = step(spec, &joined[idx])?;
            let d = distribution(&joined[idx]);
            let mut worst: f64 = 0.0;
            for (site, p) in &d.entries {
                worst = worst.max((p - projected.get(site).copied().unwrap_or(0.0)).abs());
            }
            for (site, p) in &projected {
                worst = worst.max((p - d.get(*site)).abs());
            }
            per[idx].push(worst);
        }
    }
    Ok(Lemma1Report {
        k,
        steps,
        copy_key: key,
        tree_norm_deviation: norm_dev,
        readings: readings
            .iter()
            .zip(per)
            .map(|((name, _), per_t)| ReadingReport {
                reading: (*name).to_string(),
                max_deviation: per_t.iter().copied().fold(0.0, f64::max),
                per_t,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prepend_cancels_repeated_letters() {
        let w = TreeWord::identity().prepend(0);
        assert_eq!(w.len(), 1);
        assert!(w.prepend(0).is_empty());
        let w = w.prepend(1).prepend(2);
        assert_eq!(w.letters(), &[0, 1, 2]);
        assert_eq!(w.first_applied(), Some(0));
        assert_eq!(w.outermost(), Some(2));
        assert!(TreeWord::from_letters(vec![1, 1]).is_err());
    }

    #[test]
    fn word_counts() {
        assert_eq!(words_up_to(2, 3), 7);
        assert_eq!(words_up_to(3, 2), 1 + 3 + 6);
        assert!(check_tree_budget(4, 8, DEFAULT_AMPLITUDE_LIMIT).is_err());
        assert!(check_tree_budget(3, 6, DEFAULT_AMPLITUDE_LIMIT).is_ok());
    }
}
