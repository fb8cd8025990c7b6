use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coin::C64;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Chirality {
    Left,
    Right,
    Down,
    Up,
}

impl Chirality {
    pub const ALL: [Chirality; 4] = [
        Chirality::Left,
        Chirality::Right,
        Chirality::Down,
        Chirality::Up,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Chirality {
        Self::ALL[i]
    }

    pub fn opposite(self) -> Chirality {
        match self {
            Chirality::Left => Chirality::Right,
            Chirality::Right => Chirality::Left,
            Chirality::Down => Chirality::Up,
            Chirality::Up => Chirality::Down,
        }
    }
}

/// Which of the two origin exits a unitarized origin label feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    /// exits to `(1, 0)` moving right, entered from `(1, 0)` moving left
    H,
    /// exits to `(0, 1)` moving up, entered from `(0, 1)` moving down
    V,
}

impl Axis {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Axis {
        if i == 0 {
            Axis::H
        } else {
            Axis::V
        }
    }
}

/// Sector label of the sixteen-component Own/Other walk.
///
/// The four sectors factor as `(first, second)` with each factor in
/// `{own, other}`: `OwnL = (own, own)`, `OwnD = (own, other)`,
/// `OtherR = (other, own)`, `OtherU = (other, other)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sector {
    OwnL,
    OwnD,
    OtherR,
    OtherU,
}

impl Sector {
    pub const ALL: [Sector; 4] = [Sector::OwnL, Sector::OwnD, Sector::OtherR, Sector::OtherU];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Sector {
        Self::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            Sector::OwnL => "OwnL",
            Sector::OwnD => "OwnD",
            Sector::OtherR => "OtherR",
            Sector::OtherU => "OtherU",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Site {
    Origin,
    Lattice { copy: usize, x: i64, y: i64 },
}

impl Site {
    pub fn lattice(copy: usize, x: i64, y: i64) -> Site {
        Site::Lattice { copy, x, y }
    }

    /// `(copy, x, y)`; the origin reports `(None, 0, 0)`.
    pub fn coords(&self) -> (Option<usize>, i64, i64) {
        match *self {
            Site::Origin => (None, 0, 0),
            Site::Lattice { copy, x, y } => (Some(copy), x, y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasisLabel {
    Chirality(Chirality),
    Sectored(Sector, Chirality),
    /// literal origin label `ε_r`
    Epsilon(usize),
    /// unitarized origin label `ε_r^H` / `ε_r^V`
    EpsilonSplit(usize, Axis),
    SectorEpsilon(Sector),
    SectorEpsilonSplit(Sector, Axis),
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BasisLabel::Chirality(c) => write!(f, "{c:?}"),
            BasisLabel::Sectored(s, c) => write!(f, "{}:{c:?}", s.name()),
            BasisLabel::Epsilon(r) => write!(f, "eps{r}"),
            BasisLabel::EpsilonSplit(r, a) => write!(f, "eps{r}:{a:?}"),
            BasisLabel::SectorEpsilon(s) => write!(f, "{}:eps", s.name()),
            BasisLabel::SectorEpsilonSplit(s, a) => write!(f, "{}:eps:{a:?}", s.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    /// the full plane `Z × Z`
    Plane,
    /// a single quarter plane with scalar origin coin
    Quarter,
    /// `k` quarter planes joined at the origin
    Joined(usize),
    /// the sixteen-component Own/Other walk on one quarter plane
    ReducedStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// literal origin shift: merging in, fanning out
    Literal,
    /// origin labels split per exit axis so the shift is a permutation
    Unitarized,
}

/// Where an origin label lives relative to the lattice blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OriginSlot {
    pub copy: usize,
    pub block: usize,
    /// `None` in literal mode: the label feeds and is fed by both axes.
    pub axis: Option<Axis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layout {
    pub model: Model,
    pub mode: Mode,
}

impl Layout {
    pub fn new(model: Model, mode: Mode) -> Result<Self> {
        if model == Model::Joined(0) {
            return Err(Error::InvalidParameter("Joined(k) requires k >= 1".into()));
        }
        Ok(Self { model, mode })
    }

    /// Number of quarter planes (`k`) for the quadrant models.
    pub fn copies(&self) -> usize {
        match self.model {
            Model::Joined(k) => k,
            _ => 1,
        }
    }

    /// Number of four-chirality blocks per lattice site.
    pub fn blocks(&self) -> usize {
        match self.model {
            Model::ReducedStar => 4,
            _ => 1,
        }
    }

    pub fn signed(&self) -> bool {
        self.model == Model::Plane
    }

    pub fn has_origin(&self) -> bool {
        self.model != Model::Plane
    }

    pub fn origin_dim(&self) -> usize {
        let per_axis = match self.mode {
            Mode::Literal => 1,
            Mode::Unitarized => 2,
        };
        match self.model {
            Model::Plane => 0,
            Model::Quarter => per_axis,
            Model::Joined(k) => k * per_axis,
            Model::ReducedStar => 4 * per_axis,
        }
    }

    pub fn origin_slot(&self, idx: usize) -> OriginSlot {
        let (unit, axis) = match self.mode {
            Mode::Literal => (idx, None),
            Mode::Unitarized => (idx / 2, Some(Axis::from_index(idx % 2))),
        };
        match self.model {
            Model::ReducedStar => OriginSlot {
                copy: 0,
                block: unit,
                axis,
            },
            _ => OriginSlot {
                copy: unit,
                block: 0,
                axis,
            },
        }
    }

    pub fn origin_label(&self, idx: usize) -> BasisLabel {
        let slot = self.origin_slot(idx);
        match (self.model, slot.axis) {
            (Model::ReducedStar, None) => BasisLabel::SectorEpsilon(Sector::from_index(slot.block)),
            (Model::ReducedStar, Some(a)) => {
                BasisLabel::SectorEpsilonSplit(Sector::from_index(slot.block), a)
            }
            (_, None) => BasisLabel::Epsilon(slot.copy),
            (_, Some(a)) => BasisLabel::EpsilonSplit(slot.copy, a),
        }
    }

    pub fn origin_index(&self, label: BasisLabel) -> Option<usize> {
        (0..self.origin_dim()).find(|&i| self.origin_label(i) == label)
    }

    pub fn lattice_label(&self, block: usize, chirality: Chirality) -> BasisLabel {
        match self.model {
            Model::ReducedStar => BasisLabel::Sectored(Sector::from_index(block), chirality),
            _ => BasisLabel::Chirality(chirality),
        }
    }

    pub fn lattice_slot(&self, label: BasisLabel) -> Option<(usize, Chirality)> {
        match (self.model, label) {
            (Model::ReducedStar, BasisLabel::Sectored(s, c)) => Some((s.index(), c)),
            (Model::ReducedStar, _) => None,
            (_, BasisLabel::Chirality(c)) => Some((0, c)),
            _ => None,
        }
    }

    pub(crate) fn width(&self) -> usize {
        4 * self.blocks()
    }
}

/// Dense square of lattice cells for one quarter plane (or the whole plane).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Grid {
    pub(crate) extent: usize,
    pub(crate) side: usize,
    pub(crate) offset: i64,
    pub(crate) width: usize,
    pub(crate) data: Vec<C64>,
}

impl Grid {
    pub(crate) fn new(extent: usize, signed: bool, width: usize) -> Self {
        let (side, offset) = if signed {
            (2 * extent + 1, extent as i64)
        } else {
            (extent + 1, 0)
        };
        Self {
            extent,
            side,
            offset,
            width,
            data: vec![C64::new(0.0, 0.0); side * side * width],
        }
    }

    /// Cell offset of `(x, y)`, or `None` outside the stored square.
    #[inline]
    pub(crate) fn cell_index(&self, x: i64, y: i64) -> Option<usize> {
        let xi = x + self.offset;
        let yi = y + self.offset;
        if xi < 0 || yi < 0 || xi >= self.side as i64 || yi >= self.side as i64 {
            None
        } else {
            Some((xi as usize * self.side + yi as usize) * self.width)
        }
    }

    #[inline]
    pub(crate) fn get(&self, x: i64, y: i64, slot: usize) -> C64 {
        match self.cell_index(x, y) {
            Some(i) => self.data[i + slot],
            None => C64::new(0.0, 0.0),
        }
    }

    pub(crate) fn resized(&self, extent: usize, signed: bool) -> Grid {
        let mut g = Grid::new(extent, signed, self.width);
        let lo = -self.offset;
        let hi = self.side as i64 - self.offset;
        for x in lo..hi {
            for y in lo..hi {
                if let (Some(src), Some(dst)) = (self.cell_index(x, y), g.cell_index(x, y)) {
                    g.data[dst..dst + self.width]
                        .copy_from_slice(&self.data[src..src + self.width]);
                }
            }
        }
        g
    }

    /// Coordinates of stored cells in row-major order.
    pub(crate) fn coords(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let lo = -self.offset;
        let hi = self.side as i64 - self.offset;
        (lo..hi).flat_map(move |x| (lo..hi).map(move |y| (x, y)))
    }
}

/// Amplitudes of a walk state at a fixed time.
///
/// Lattice amplitudes are stored densely per quarter plane; the stored square
/// grows with the reachable region. Origin amplitudes are kept separately.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub(crate) layout: Layout,
    pub(crate) time: u64,
    pub(crate) origin: Vec<C64>,
    pub(crate) grids: Vec<Grid>,
}

impl StateVector {
    pub fn zeros(layout: Layout) -> Self {
        Self::with_extent(layout, 1)
    }

    pub(crate) fn with_extent(layout: Layout, extent: usize) -> Self {
        let grids = (0..layout.copies())
            .map(|_| Grid::new(extent, layout.signed(), layout.width()))
            .collect();
        Self {
            layout,
            time: 0,
            origin: vec![C64::new(0.0, 0.0); layout.origin_dim()],
            grids,
        }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn with_time(mut self, t: u64) -> Self {
        self.time = t;
        self
    }

    /// Largest coordinate magnitude the stored grids can hold.
    pub fn extent(&self) -> usize {
        self.grids.first().map_or(0, |g| g.extent)
    }

    pub(crate) fn ensure_extent(&mut self, extent: usize) {
        if extent > self.extent() {
            let signed = self.layout.signed();
            for g in &mut self.grids {
                *g = g.resized(extent, signed);
            }
        }
    }

    fn check_site(&self, site: Site) -> Result<()> {
        match site {
            Site::Origin if !self.layout.has_origin() => Err(Error::UndefinedBasis(
                "the plane has no distinguished origin site; use Lattice(0, 0, 0)".into(),
            )),
            Site::Origin => Ok(()),
            Site::Lattice { copy, x, y } => {
                if copy >= self.layout.copies() {
                    return Err(Error::UndefinedBasis(format!(
                        "copy {copy} out of range for {} quarter planes",
                        self.layout.copies()
                    )));
                }
                if !self.layout.signed() && (x < 0 || y < 0 || (x == 0 && y == 0)) {
                    return Err(Error::UndefinedBasis(format!(
                        "({x}, {y}) is not a lattice site of the quarter plane"
                    )));
                }
                Ok(())
            }
        }
    }

    fn slot(&self, site: Site, label: BasisLabel) -> Result<Option<usize>> {
        self.check_site(site)?;
        match site {
            Site::Origin => self
                .layout
                .origin_index(label)
                .map(Some)
                .ok_or_else(|| Error::UndefinedBasis(format!("{label} is not an origin label"))),
            Site::Lattice { .. } => self
                .layout
                .lattice_slot(label)
                .map(|(b, c)| Some(4 * b + c.index()))
                .ok_or_else(|| Error::UndefinedBasis(format!("{label} is not a lattice label"))),
        }
    }

    pub fn get(&self, site: Site, label: BasisLabel) -> Result<C64> {
        let slot = self.slot(site, label)?.expect("slot");
        Ok(match site {
            Site::Origin => self.origin[slot],
            Site::Lattice { copy, x, y } => self.grids[copy].get(x, y, slot),
        })
    }

    pub fn set(&mut self, site: Site, label: BasisLabel, amp: C64) -> Result<()> {
        let slot = self.slot(site, label)?.expect("slot");
        match site {
            Site::Origin => self.origin[slot] = amp,
            Site::Lattice { copy, x, y } => {
                let need = x.unsigned_abs().max(y.unsigned_abs()) as usize;
                self.ensure_extent(need);
                let g = &mut self.grids[copy];
                let i = g.cell_index(x, y).expect("in range after resize");
                g.data[i + slot] = amp;
            }
        }
        Ok(())
    }

    pub fn add(&mut self, site: Site, label: BasisLabel, amp: C64) -> Result<()> {
        let cur = self.get(site, label).unwrap_or(C64::new(0.0, 0.0));
        self.set(site, label, cur + amp)
    }

    /// Amplitude vector at a site: origin labels, or `4 * blocks` lattice slots.
    pub fn site_amplitudes(&self, site: Site) -> Vec<C64> {
        match site {
            Site::Origin => self.origin.clone(),
            Site::Lattice { copy, x, y } => {
                let g = &self.grids[copy];
                match g.cell_index(x, y) {
                    Some(i) => g.data[i..i + g.width].to_vec(),
                    None => vec![C64::new(0.0, 0.0); g.width],
                }
            }
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.origin.iter().map(|z| z.norm_sqr()).sum::<f64>()
            + self
                .grids
                .iter()
                .map(|g| g.data.iter().map(|z| z.norm_sqr()).sum::<f64>())
                .sum::<f64>()
    }

    /// Nonzero amplitudes in a fixed order: origin labels first, then each
    /// quarter plane by `x`, `y`, label.
    pub fn iter_nonzero(&self) -> impl Iterator<Item = (Site, BasisLabel, C64)> + '_ {
        let layout = self.layout;
        let origin = self
            .origin
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != C64::new(0.0, 0.0))
            .map(move |(i, z)| (Site::Origin, layout.origin_label(i), *z));
        let lattice = self.grids.iter().enumerate().flat_map(move |(copy, g)| {
            g.coords().flat_map(move |(x, y)| {
                let base = g.cell_index(x, y).unwrap();
                (0..g.width).filter_map(move |s| {
                    let z = g.data[base + s];
                    (z != C64::new(0.0, 0.0)).then(|| {
                        (
                            Site::Lattice { copy, x, y },
                            layout.lattice_label(s / 4, Chirality::from_index(s % 4)),
                            z,
                        )
                    })
                })
            })
        });
        origin.chain(lattice)
    }

    /// Occupied sites with their probabilities `Σ_l |α(site, l)|²`.
    pub fn site_probabilities(&self) -> impl Iterator<Item = (Site, f64)> + '_ {
        let origin_p: f64 = self.origin.iter().map(|z| z.norm_sqr()).sum();
        let origin =
            (self.layout.has_origin() && origin_p > 0.0).then_some((Site::Origin, origin_p));
        let lattice = self.grids.iter().enumerate().flat_map(move |(copy, g)| {
            g.coords().filter_map(move |(x, y)| {
                let i = g.cell_index(x, y).unwrap();
                let p: f64 = g.data[i..i + g.width].iter().map(|z| z.norm_sqr()).sum();
                (p > 0.0).then_some((Site::Lattice { copy, x, y }, p))
            })
        });
        origin.into_iter().chain(lattice)
    }

    pub fn scale(&mut self, factor: C64) {
        for z in self.origin.iter_mut() {
            *z *= factor;
        }
        for g in &mut self.grids {
            for z in g.data.iter_mut() {
                *z *= factor;
            }
        }
    }

    /// `self += factor * other`; layouts must match.
    pub fn axpy(&mut self, factor: C64, other: &StateVector) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::InvalidParameter(
                "layout mismatch in state combination".into(),
            ));
        }
        self.ensure_extent(other.extent());
        for (a, b) in self.origin.iter_mut().zip(&other.origin) {
            *a += factor * b;
        }
        for (ga, gb) in self.grids.iter_mut().zip(&other.grids) {
            for (x, y) in gb.coords() {
                let src = gb.cell_index(x, y).unwrap();
                let dst = ga.cell_index(x, y).unwrap();
                for s in 0..gb.width {
                    ga.data[dst + s] += factor * gb.data[src + s];
                }
            }
        }
        Ok(())
    }

    /// Largest `|self − other|` over all basis elements.
    pub fn max_abs_diff(&self, other: &StateVector) -> Result<f64> {
        let mut diff = self.clone();
        diff.axpy(C64::new(-1.0, 0.0), other)?;
        let o = diff.origin.iter().map(|z| z.norm()).fold(0.0, f64::max);
        Ok(diff
            .grids
            .iter()
            .flat_map(|g| g.data.iter())
            .map(|z| z.norm())
            .fold(o, f64::max))
    }
}
