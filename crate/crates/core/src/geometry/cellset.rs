use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::domain::{CylinderDomain, ExteriorGraphData};
use super::grid::{Coord, GridDescriptor};
use crate::error::{Error, Result};

/// Rule classifying every point outside the window: the subgraph of the
/// column heights (nearest window column beyond the sides, everything below
/// the window is "below", everything above is "above"). `below_member`
/// selects whether the subgraph or its complement is the member region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Closure {
    pub heights: Vec<f64>,
    pub below_member: bool,
}

/// Binary configuration on the window cells plus the closure rule that
/// extends it to the whole space.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSet {
    grid: Arc<GridDescriptor>,
    free_columns: Arc<Vec<bool>>,
    bits: Vec<bool>,
    closure: Closure,
}

impl CellSet {
    /// Set with every free cell a non-member and every exterior cell
    /// classified by the subgraph of `u`.
    pub fn new(grid: Arc<GridDescriptor>, domain: &CylinderDomain, exterior: &ExteriorGraphData) -> Result<Self> {
        if domain.horizontal_dim() + 1 != grid.dim() {
            return Err(Error::Domain("domain and grid dimensions disagree".into()));
        }
        if exterior.heights().len() != grid.columns() {
            return Err(Error::Domain("exterior data does not match the grid".into()));
        }
        let free_columns = Arc::new(domain.free_columns(&grid));
        let closure = Closure { heights: exterior.heights().to_vec(), below_member: true };
        let v = grid.vertical_axis();
        let rows = grid.rows();
        let mut bits = vec![false; grid.len()];
        for col in 0..grid.columns() {
            if free_columns[col] {
                continue;
            }
            for r in 0..rows {
                bits[grid.cell_at(col, r)] = grid.center_coord(v, r as i64) < closure.heights[col];
            }
        }
        Ok(Self { grid, free_columns, bits, closure })
    }

    /// Free columns filled up to the height of the nearest exterior column.
    pub fn flat_extension(grid: Arc<GridDescriptor>, domain: &CylinderDomain, exterior: &ExteriorGraphData) -> Result<Self> {
        let mut set = Self::new(grid, domain, exterior)?;
        let g = set.grid.clone();
        let hd = g.vertical_axis();
        let exterior_cols: Vec<usize> = (0..g.columns()).filter(|&c| !set.free_columns[c]).collect();
        for col in 0..g.columns() {
            if !set.free_columns[col] {
                continue;
            }
            let x = g.column_center(col);
            let target = exterior_cols
                .iter()
                .map(|&e| {
                    let y = g.column_center(e);
                    let d2: f64 = (0..hd).map(|k| (x[k] - y[k]).powi(2)).sum();
                    (d2, e)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|(_, e)| exterior.heights()[e])
                .unwrap_or(exterior.heights()[col]);
            for r in 0..g.rows() {
                let cell = g.cell_at(col, r);
                set.bits[cell] = g.center_coord(hd, r as i64) < target;
            }
        }
        Ok(set)
    }

    /// Assemble a set from raw parts; used by deserialization and by
    /// derived sets (morphology, translation).
    pub fn from_parts(grid: Arc<GridDescriptor>, free_columns: Arc<Vec<bool>>, bits: Vec<bool>, closure: Closure) -> Result<Self> {
        if free_columns.len() != grid.columns() || bits.len() != grid.len() || closure.heights.len() != grid.columns() {
            return Err(Error::Domain("cell set parts do not match the grid".into()));
        }
        Ok(Self { grid, free_columns, bits, closure })
    }

    pub fn grid(&self) -> &GridDescriptor {
        &self.grid
    }
    pub fn grid_arc(&self) -> &Arc<GridDescriptor> {
        &self.grid
    }
    pub fn free_columns(&self) -> &Arc<Vec<bool>> {
        &self.free_columns
    }
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
    pub fn closure(&self) -> &Closure {
        &self.closure
    }

    pub fn is_free(&self, cell: usize) -> bool {
        self.free_columns[self.grid.column_of(cell)]
    }

    /// Cells whose column lies in `Ω_o`, in row-major order.
    pub fn free_cells(&self) -> Vec<usize> {
        (0..self.grid.len()).filter(|&c| self.is_free(c)).collect()
    }

    pub fn get(&self, cell: usize) -> bool {
        self.bits[cell]
    }

    /// Change membership of a free cell. Exterior cells are frozen.
    pub fn set(&mut self, cell: usize, member: bool) -> Result<()> {
        if cell >= self.bits.len() {
            return Err(Error::Precondition(format!("cell {cell} outside the window")));
        }
        if !self.is_free(cell) {
            return Err(Error::Precondition(format!("cell {cell} lies outside Ω and is frozen")));
        }
        self.bits[cell] = member;
        Ok(())
    }

    pub fn flip(&mut self, cell: usize) -> Result<()> {
        let b = self.bits[cell];
        self.set(cell, !b)
    }

    /// Whether the far-field point with lattice coordinates `c` lies in the
    /// subgraph part of the closure.
    pub(crate) fn far_below(&self, c: &Coord) -> bool {
        let g = &*self.grid;
        let v = g.vertical_axis();
        let inside_h = (0..v).all(|d| c[d] >= 0 && (c[d] as usize) < g.counts()[d]);
        if inside_h {
            if c[v] < 0 {
                return true;
            }
            if c[v] >= g.rows() as i64 {
                return false;
            }
        }
        g.center_coord(v, c[v]) < self.closure.heights[g.clamped_column(c)]
    }

    /// Membership of any lattice position, inside or outside the window.
    pub fn member_at(&self, c: &Coord) -> bool {
        match self.grid.index(c) {
            Some(i) => self.bits[i],
            None => self.far_below(c) == self.closure.below_member,
        }
    }

    /// Full complement: window bits and closure orientation flipped.
    pub fn complement(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            free_columns: self.free_columns.clone(),
            bits: self.bits.iter().map(|b| !b).collect(),
            closure: Closure { heights: self.closure.heights.clone(), below_member: !self.closure.below_member },
        }
    }

    /// Neighbors along the 2n coordinate directions, ordered
    /// `+e_n, -e_n, +e_1, -e_1, ...`.
    pub fn neighbor_directions(&self) -> Vec<Coord> {
        let dim = self.grid.dim();
        let v = dim - 1;
        let mut dirs = Vec::with_capacity(2 * dim);
        for axis in std::iter::once(v).chain(0..v) {
            for sign in [1i64, -1] {
                let mut d = [0i64; 3];
                d[axis] = sign;
                dirs.push(d);
            }
        }
        dirs
    }

    /// First direction (in `neighbor_directions` order) whose neighbor has
    /// opposite membership.
    pub fn opposite_direction(&self, cell: usize) -> Option<Coord> {
        let c = self.grid.coords(cell);
        let m = self.bits[cell];
        self.neighbor_directions().into_iter().find(|d| {
            let n = [c[0] + d[0], c[1] + d[1], c[2] + d[2]];
            self.member_at(&n) != m
        })
    }

    pub fn is_boundary(&self, cell: usize) -> bool {
        self.opposite_direction(cell).is_some()
    }

    pub fn boundary_cells(&self) -> Vec<usize> {
        (0..self.grid.len()).filter(|&c| self.is_boundary(c)).collect()
    }

    pub fn member_count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// `self ⊆ other` on the window cells.
    pub fn is_subset_of(&self, other: &CellSet) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }
}
