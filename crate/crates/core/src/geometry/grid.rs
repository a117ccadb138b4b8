use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer lattice coordinates. Only the first `dim` entries are used; the
/// last used axis is vertical.
pub type Coord = [i64; 3];

/// Axis-aligned window of congruent cubic cells of side `h`.
///
/// Cells are indexed row-major with the vertical axis fastest, so every
/// column occupies a contiguous index range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDescriptor {
    h: f64,
    counts: Vec<usize>,
    origin: Vec<f64>,
}

impl GridDescriptor {
    pub fn new(h: f64, counts: Vec<usize>, origin: Vec<f64>) -> Result<Self> {
        let dim = counts.len();
        if !(2..=3).contains(&dim) {
            return Err(Error::Domain(format!("dimension must be 2 or 3, got {dim}")));
        }
        if origin.len() != dim {
            return Err(Error::Domain("origin length must match the dimension".into()));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Domain(format!("cell side must be positive, got {h}")));
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::Domain("every axis needs at least one cell".into()));
        }
        Ok(Self { h, counts, origin })
    }

    /// Window centered at the origin: `[-counts_i h / 2, counts_i h / 2]` per axis.
    pub fn centered(h: f64, counts: Vec<usize>) -> Result<Self> {
        let origin = counts.iter().map(|&c| -(c as f64) * h / 2.0).collect();
        Self::new(h, counts, origin)
    }

    /// Same lattice with the lower corner moved by `shift` cells.
    pub fn shifted(&self, shift: Coord) -> Self {
        let origin = self.origin.iter().enumerate().map(|(d, o)| o + shift[d] as f64 * self.h).collect();
        Self { h: self.h, counts: self.counts.clone(), origin }
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
    pub fn origin(&self) -> &[f64] {
        &self.origin
    }
    pub fn vertical_axis(&self) -> usize {
        self.dim() - 1
    }
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Number of cells in one column.
    pub fn rows(&self) -> usize {
        self.counts[self.vertical_axis()]
    }
    /// Number of columns (horizontal cells).
    pub fn columns(&self) -> usize {
        self.len() / self.rows()
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.origin[axis]
    }
    pub fn upper(&self, axis: usize) -> f64 {
        self.origin[axis] + self.counts[axis] as f64 * self.h
    }

    pub fn column_of(&self, cell: usize) -> usize {
        cell / self.rows()
    }
    pub fn row_of(&self, cell: usize) -> usize {
        cell % self.rows()
    }
    pub fn cell_at(&self, column: usize, row: usize) -> usize {
        column * self.rows() + row
    }

    pub fn coords(&self, cell: usize) -> Coord {
        let mut c = [0i64; 3];
        let mut rest = cell;
        for d in (0..self.dim()).rev() {
            c[d] = (rest % self.counts[d]) as i64;
            rest /= self.counts[d];
        }
        c
    }

    pub fn contains(&self, c: &Coord) -> bool {
        (0..self.dim()).all(|d| c[d] >= 0 && (c[d] as usize) < self.counts[d])
    }

    pub fn index(&self, c: &Coord) -> Option<usize> {
        if !self.contains(c) {
            return None;
        }
        let mut idx = 0usize;
        for d in 0..self.dim() {
            idx = idx * self.counts[d] + c[d] as usize;
        }
        Some(idx)
    }

    /// Horizontal coordinates of a column, as a `Coord` with vertical entry 0.
    pub fn column_coords(&self, column: usize) -> Coord {
        self.coords(column * self.rows())
    }

    /// Column index for horizontal lattice coordinates, clamped into the window.
    pub fn clamped_column(&self, c: &Coord) -> usize {
        let mut col = 0usize;
        for d in 0..self.vertical_axis() {
            let v = c[d].clamp(0, self.counts[d] as i64 - 1) as usize;
            col = col * self.counts[d] + v;
        }
        col
    }

    /// Physical coordinate of the center of lattice position `k` on `axis`.
    pub fn center_coord(&self, axis: usize, k: i64) -> f64 {
        self.origin[axis] + (k as f64 + 0.5) * self.h
    }

    pub fn center_of(&self, c: &Coord) -> [f64; 3] {
        let mut x = [0.0; 3];
        for d in 0..self.dim() {
            x[d] = self.center_coord(d, c[d]);
        }
        x
    }

    pub fn center(&self, cell: usize) -> [f64; 3] {
        self.center_of(&self.coords(cell))
    }

    /// Horizontal part of a column's center.
    pub fn column_center(&self, column: usize) -> [f64; 3] {
        let mut x = self.center(column * self.rows());
        x[self.vertical_axis()] = 0.0;
        x
    }

    /// Lattice coordinate on `axis` whose cell contains physical `x`
    /// (unclamped).
    pub fn lattice_coord(&self, axis: usize, x: f64) -> i64 {
        ((x - self.origin[axis]) / self.h).floor() as i64
    }
}
