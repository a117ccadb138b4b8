//! Interaction functional and s-perimeter on lattice configurations.
//!
//! A [`PerimeterModel`] holds everything that does not depend on the free
//! cells' memberships: the pair-weight table, the frozen exterior cells and
//! each free cell's far-field split. Evaluating a configuration then costs
//! one pass over free-free pairs.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CellSet, Coord, CylinderDomain, GridDescriptor};
use crate::kernel::{cell_far_field, Kernel, PairWeights, TailPolicy, TailSplit};
use crate::par;
use crate::quadrature::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyValue {
    pub value: f64,
    pub tail_part: f64,
    pub pair_count: u64,
}

/// `L(F, G)`: sum of cell-pair weights over `F × G`.
///
/// Pairs are put in canonical `(min, max)` order and summed in that order,
/// so the result does not depend on which argument comes first.
pub fn interaction(f: &[usize], g: &[usize], k: &Kernel, grid: &GridDescriptor) -> Result<EnergyValue> {
    let mut in_f = vec![false; grid.len()];
    for &a in f {
        if a >= grid.len() {
            return Err(Error::Domain(format!("cell {a} outside the window")));
        }
        in_f[a] = true;
    }
    let mut pairs = Vec::with_capacity(f.len() * g.len());
    for &b in g {
        if b >= grid.len() {
            return Err(Error::Domain(format!("cell {b} outside the window")));
        }
        if in_f[b] {
            return Err(Error::Precondition(format!("sets overlap at cell {b}")));
        }
    }
    for &a in f {
        for &b in g {
            pairs.push((a.min(b), a.max(b)));
        }
    }
    pairs.sort_unstable();
    let w = PairWeights::new(k, grid)?;
    let mut sum = NeumaierSum::new();
    for &(a, b) in &pairs {
        sum.add(w.between_coords(&grid.coords(a), &grid.coords(b)));
    }
    Ok(EnergyValue { value: sum.value(), tail_part: 0.0, pair_count: pairs.len() as u64 })
}

fn touches_side(set: &CellSet) -> bool {
    let g = set.grid();
    let hd = g.vertical_axis();
    (0..g.columns()).any(|col| {
        set.free_columns()[col] && {
            let c = g.column_coords(col);
            (0..hd).any(|d| c[d] == 0 || c[d] == g.counts()[d] as i64 - 1)
        }
    })
}

/// Membership-independent data for evaluating `Per_s` on one frame.
#[derive(Debug, Clone)]
pub struct PerimeterModel {
    kernel: Kernel,
    weights: PairWeights,
    grid: Arc<GridDescriptor>,
    free_columns: Arc<Vec<bool>>,
    below_member: bool,
    heights: Vec<f64>,
    coords: Vec<Coord>,
    free: Vec<usize>,
    /// Position of each cell in `free`, or `usize::MAX` for frozen cells.
    slot: Vec<usize>,
    /// Far-field split per free cell, already scaled by the cell volume.
    tails: Vec<TailSplit>,
    /// Weights to frozen members / non-members per free cell.
    frozen_member: Vec<f64>,
    frozen_nonmember: Vec<f64>,
    frozen_member_count: Vec<u64>,
    frozen_nonmember_count: Vec<u64>,
}

impl PerimeterModel {
    /// Builds the model for the frame of `set` (grid, free columns, closure).
    pub fn new(kernel: &Kernel, set: &CellSet) -> Result<Self> {
        let grid = set.grid_arc().clone();
        if grid.dim() != kernel.dim() {
            return Err(Error::Domain("kernel and grid dimensions disagree".into()));
        }
        if kernel.tail_policy() == TailPolicy::HalfspaceColumns && touches_side(set) {
            return Err(Error::Config(
                "window too small: column tails need exterior columns between Ω and the window sides".into(),
            ));
        }
        let weights = PairWeights::new(kernel, &grid)?;
        let coords: Vec<Coord> = (0..grid.len()).map(|c| grid.coords(c)).collect();
        let free = set.free_cells();
        let mut slot = vec![usize::MAX; grid.len()];
        for (i, &c) in free.iter().enumerate() {
            slot[c] = i;
        }
        let tails = par::map_slice(&free, |&c| cell_far_field(kernel, set, c));
        let frozen: Vec<usize> = (0..grid.len()).filter(|&c| slot[c] == usize::MAX).collect();
        let bits = set.bits();
        let sums = par::map_slice(&free, |&a| {
            let (mut m, mut n) = (NeumaierSum::new(), NeumaierSum::new());
            let (mut mc, mut nc) = (0u64, 0u64);
            for &b in &frozen {
                let w = weights.between_coords(&coords[a], &coords[b]);
                if bits[b] {
                    m.add(w);
                    mc += 1;
                } else {
                    n.add(w);
                    nc += 1;
                }
            }
            (m.value(), n.value(), mc, nc)
        });
        Ok(Self {
            kernel: *kernel,
            weights,
            free_columns: set.free_columns().clone(),
            below_member: set.closure().below_member,
            heights: set.closure().heights.clone(),
            coords,
            free,
            slot,
            tails,
            frozen_member: sums.iter().map(|t| t.0).collect(),
            frozen_nonmember: sums.iter().map(|t| t.1).collect(),
            frozen_member_count: sums.iter().map(|t| t.2).collect(),
            frozen_nonmember_count: sums.iter().map(|t| t.3).collect(),
            grid,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }
    pub fn weights(&self) -> &PairWeights {
        &self.weights
    }
    pub fn grid(&self) -> &GridDescriptor {
        &self.grid
    }
    pub fn free_cells(&self) -> &[usize] {
        &self.free
    }
    /// Index of `cell` among the free cells.
    pub fn slot(&self, cell: usize) -> Option<usize> {
        self.slot.get(cell).copied().filter(|&s| s != usize::MAX)
    }
    pub fn coords(&self, cell: usize) -> &Coord {
        &self.coords[cell]
    }

    #[inline]
    pub fn pair_weight(&self, a: usize, b: usize) -> f64 {
        self.weights.between_coords(&self.coords[a], &self.coords[b])
    }

    /// Far-field weights (member part, non-member part) for free slot `i`.
    pub fn tail(&self, i: usize) -> (f64, f64) {
        self.tails[i].oriented(self.below_member)
    }

    /// Cost of free slot `i` being a member (its disagreements with frozen
    /// non-members and the non-member far field) and of being a non-member.
    pub fn unary(&self, i: usize) -> (f64, f64) {
        let (tm, tn) = self.tail(i);
        (self.frozen_nonmember[i] + tn, self.frozen_member[i] + tm)
    }

    fn check(&self, set: &CellSet) -> Result<()> {
        if set.grid() != &*self.grid
            || set.free_columns() != &self.free_columns
            || set.closure().below_member != self.below_member
            || set.closure().heights != self.heights
        {
            return Err(Error::Precondition("configuration does not belong to this model's frame".into()));
        }
        Ok(())
    }

    /// `Per_s(E, Ω)` with frozen-frozen pairs dropped.
    pub fn energy(&self, set: &CellSet) -> Result<EnergyValue> {
        self.check(set)?;
        let bits = set.bits();
        let parts = par::map_range(self.free.len(), |i| {
            let a = self.free[i];
            let ea = bits[a];
            let mut sum = NeumaierSum::new();
            let mut count = 0u64;
            for &b in &self.free[i + 1..] {
                if bits[b] != ea {
                    sum.add(self.pair_weight(a, b));
                    count += 1;
                }
            }
            let (tm, tn) = self.tail(i);
            let (frozen, fcount, tail) = if ea {
                (self.frozen_nonmember[i], self.frozen_nonmember_count[i], tn)
            } else {
                (self.frozen_member[i], self.frozen_member_count[i], tm)
            };
            sum.add(frozen);
            sum.add(tail);
            (sum.value(), tail, count + fcount)
        });
        let mut value = NeumaierSum::new();
        let mut tail = NeumaierSum::new();
        let mut pairs = 0u64;
        for (v, t, c) in parts {
            value.add(v);
            tail.add(t);
            pairs += c;
        }
        Ok(EnergyValue { value: value.value(), tail_part: tail.value(), pair_count: pairs })
    }

    /// `Per_s(E with cell flipped) - Per_s(E)`.
    pub fn delta(&self, set: &CellSet, cell: usize) -> Result<f64> {
        let i = self
            .slot(cell)
            .ok_or_else(|| Error::Precondition(format!("cell {cell} lies outside Ω; the exterior is frozen")))?;
        let bits = set.bits();
        let ea = bits[cell];
        let (cm, cn) = self.unary(i);
        let mut sum = NeumaierSum::new();
        if ea {
            sum.add(cn - cm);
        } else {
            sum.add(cm - cn);
        }
        for &b in &self.free {
            if b == cell {
                continue;
            }
            let w = self.pair_weight(cell, b);
            sum.add(if bits[b] == ea { w } else { -w });
        }
        Ok(sum.value())
    }
}

/// `Per_s(E, Ω)` for a configuration whose free columns match `dom`.
pub fn s_perimeter(set: &CellSet, dom: &CylinderDomain, k: &Kernel) -> Result<EnergyValue> {
    if dom.free_columns(set.grid()) != **set.free_columns() {
        return Err(Error::Precondition("set's free columns do not match the domain".into()));
    }
    PerimeterModel::new(k, set)?.energy(set)
}

/// Single-flip energy difference; builds a throwaway model, so prefer
/// [`PerimeterModel::delta`] in loops.
pub fn energy_delta(set: &CellSet, cell: usize, k: &Kernel) -> Result<f64> {
    PerimeterModel::new(k, set)?.delta(set, cell)
}
