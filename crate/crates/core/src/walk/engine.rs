use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::state::{Axis, Chirality, Grid, StateVector};
use super::{BouncePolicy, WalkSpec};
use crate::coin::C64;
use crate::error::{Error, Result};

const L: usize = Chirality::Left as usize;
const R: usize = Chirality::Right as usize;
const D: usize = Chirality::Down as usize;
const U: usize = Chirality::Up as usize;

/// Squared norm before and after one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormAudit {
    pub time: u64,
    pub norm_sqr_before: f64,
    pub norm_sqr_after: f64,
}

impl NormAudit {
    pub fn drift(&self) -> f64 {
        self.norm_sqr_after - self.norm_sqr_before
    }
}

fn check_layout(spec: &WalkSpec, s: &StateVector) -> Result<()> {
    if s.layout() != spec.layout() {
        return Err(Error::InvalidParameter(format!(
            "state layout {:?} does not match walk layout {:?}",
            s.layout(),
            spec.layout()
        )));
    }
    Ok(())
}

/// Coin operation `F`: the origin coin on the origin labels and the lattice
/// coin on every chirality block of every lattice site.
pub fn apply_coin(spec: &WalkSpec, s: &StateVector) -> Result<StateVector> {
    check_layout(spec, s)?;
    let mut out = s.clone();
    let cm = spec.lattice_matrix;
    for g in &mut out.grids {
        let row_len = g.side * g.width;
        g.data.par_chunks_mut(row_len).for_each(|row| {
            for block in row.chunks_exact_mut(4) {
                if block.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                    continue;
                }
                let v = [block[0], block[1], block[2], block[3]];
                for (i, out) in block.iter_mut().enumerate() {
                    *out = cm[i][0] * v[0] + cm[i][1] * v[1] + cm[i][2] * v[2] + cm[i][3] * v[3];
                }
            }
        });
    }
    if !out.origin.is_empty() {
        let om = &spec.origin_matrix;
        let v = s.origin.clone();
        for (i, o) in out.origin.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (j, z) in v.iter().enumerate() {
                acc += om[(i, j)] * z;
            }
            *o = acc;
        }
    }
    Ok(out)
}

/// Shift operation `S` alone.
///
/// On the quadrant models a component whose target leaves the quadrant
/// (`Left` at `x = 0`, `Down` at `y = 0`) is reflected according to the
/// walk's [`BouncePolicy`].
pub fn shift(spec: &WalkSpec, s: &StateVector) -> Result<StateVector> {
    check_layout(spec, s)?;
    let layout = s.layout();
    let extent = s.extent() + 1;
    let mut out = StateVector::with_extent(layout, extent);
    out.time = s.time + 1;
    if layout.signed() {
        for (src, dst) in s.grids.iter().zip(out.grids.iter_mut()) {
            shift_plane(src, dst);
        }
        return Ok(out);
    }
    if spec.boundary == BouncePolicy::Strict {
        check_strict(s)?;
    }
    for (src, dst) in s.grids.iter().zip(out.grids.iter_mut()) {
        shift_quadrant(src, dst, spec.boundary);
    }

    // origin inflow
    for idx in 0..layout.origin_dim() {
        let slot = layout.origin_slot(idx);
        let g = &s.grids[slot.copy];
        let from_h = g.get(1, 0, 4 * slot.block + L);
        let from_v = g.get(0, 1, 4 * slot.block + D);
        out.origin[idx] = match slot.axis {
            None => from_h + from_v,
            Some(Axis::H) => from_h,
            Some(Axis::V) => from_v,
        };
    }
    // origin outflow
    for idx in 0..layout.origin_dim() {
        let z = s.origin[idx];
        if z == C64::new(0.0, 0.0) {
            continue;
        }
        let slot = layout.origin_slot(idx);
        let g = &mut out.grids[slot.copy];
        if slot.axis != Some(Axis::V) {
            let i = g.cell_index(1, 0).expect("extent >= 1");
            g.data[i + 4 * slot.block + R] += z;
        }
        if slot.axis != Some(Axis::H) {
            let i = g.cell_index(0, 1).expect("extent >= 1");
            g.data[i + 4 * slot.block + U] += z;
        }
    }
    Ok(out)
}

fn check_strict(s: &StateVector) -> Result<()> {
    for (copy, g) in s.grids.iter().enumerate() {
        for (x, y) in g.coords() {
            let i = g.cell_index(x, y).unwrap();
            for b in 0..g.width / 4 {
                let off_left = x == 0 && y >= 1 && g.data[i + 4 * b + L] != C64::new(0.0, 0.0);
                let off_down = y == 0 && x >= 1 && g.data[i + 4 * b + D] != C64::new(0.0, 0.0);
                if off_left || off_down {
                    return Err(Error::UndefinedBasis(format!(
                        "copy {copy}, site ({x}, {y}): shift target leaves the quarter plane"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Gather-style shift on the quadrant `x, y >= 0` without the origin cell,
/// which never holds lattice amplitude.
fn shift_quadrant(src: &Grid, dst: &mut Grid, policy: BouncePolicy) {
    // axis coordinate whose reflected component lands on coordinate `v`
    let partner = move |v: i64| match policy {
        BouncePolicy::Paired if v % 2 == 1 => v + 1,
        BouncePolicy::Paired => v - 1,
        _ => v,
    };
    let side = dst.side;
    let width = dst.width;
    let blocks = width / 4;
    dst.data
        .par_chunks_mut(side * width)
        .enumerate()
        .for_each(|(xi, row)| {
            let x = xi as i64;
            for yi in 0..side {
                let y = yi as i64;
                if x == 0 && y == 0 {
                    continue;
                }
                let cell = &mut row[yi * width..(yi + 1) * width];
                for b in 0..blocks {
                    let o = 4 * b;
                    let mut right = if x >= 2 || (x == 1 && y >= 1) {
                        src.get(x - 1, y, o + R)
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    if x == 0 {
                        right += src.get(0, partner(y), o + L);
                    }
                    let left = src.get(x + 1, y, o + L);
                    let mut up = if y >= 2 || (y == 1 && x >= 1) {
                        src.get(x, y - 1, o + U)
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    if y == 0 {
                        up += src.get(partner(x), 0, o + D);
                    }
                    let down = src.get(x, y + 1, o + D);
                    cell[o + L] = left;
                    cell[o + R] = right;
                    cell[o + D] = down;
                    cell[o + U] = up;
                }
            }
        });
}

fn shift_plane(src: &Grid, dst: &mut Grid) {
    let side = dst.side;
    let width = dst.width;
    let offset = dst.offset;
    dst.data
        .par_chunks_mut(side * width)
        .enumerate()
        .for_each(|(xi, row)| {
            let x = xi as i64 - offset;
            for yi in 0..side {
                let y = yi as i64 - offset;
                let cell = &mut row[yi * width..(yi + 1) * width];
                cell[L] = src.get(x + 1, y, L);
                cell[R] = src.get(x - 1, y, R);
                cell[D] = src.get(x, y + 1, D);
                cell[U] = src.get(x, y - 1, U);
            }
        });
}

#[cfg(test)]
mod tests {
    use super::super::state::{BasisLabel, Layout, Mode, Model, Site};
    use super::*;

    #[test]
    fn origin_slots() {
        // literal origin labels feed both exits
        let l = Layout::new(Model::Joined(2), Mode::Literal).unwrap();
        assert_eq!(l.origin_slot(1).axis, None);
        let u = Layout::new(Model::Joined(2), Mode::Unitarized).unwrap();
        assert_eq!(u.origin_slot(3).axis, Some(Axis::V));
        assert_eq!(u.origin_label(3), BasisLabel::EpsilonSplit(1, Axis::V));
        assert_eq!(Site::Origin.coords(), (None, 0, 0));
    }
}
