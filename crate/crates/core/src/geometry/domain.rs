use serde::{Deserialize, Serialize};

use super::grid::GridDescriptor;
use crate::error::{Error, Result};

/// Open axis-aligned box in the horizontal space (an interval when the
/// ambient dimension is 2, a rectangle when it is 3).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl HBox {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Self { lo: vec![lo], hi: vec![hi] }
    }

    pub fn rect(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Self { lo: lo.to_vec(), hi: hi.to_vec() }
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.lo.iter().zip(&self.hi).zip(x).all(|((l, h), v)| *l < *v && *v < *h)
    }

    /// Distance from an interior point to the box boundary.
    fn inner_distance(&self, x: &[f64]) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(x)
            .map(|((l, h), v)| (v - l).min(h - v))
            .fold(f64::INFINITY, f64::min)
    }

    fn closures_disjoint(&self, other: &HBox) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(other.lo.iter().zip(&other.hi))
            .any(|((l1, h1), (l2, h2))| h1 < l2 || h2 < l1)
    }
}

/// The cylinder `Ω = Ω_o × ℝ` with `Ω_o` a finite union of open boxes whose
/// closures are pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderDomain {
    boxes: Vec<HBox>,
    r_o: f64,
}

impl CylinderDomain {
    pub fn new(boxes: Vec<HBox>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::Domain("the cross-section needs at least one box".into()));
        }
        let hdim = boxes[0].lo.len();
        for b in &boxes {
            if b.lo.len() != hdim || b.hi.len() != hdim {
                return Err(Error::Domain("all boxes must share the horizontal dimension".into()));
            }
            if b.lo.iter().zip(&b.hi).any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite()) {
                return Err(Error::Domain(format!("degenerate or unbounded box {b:?}")));
            }
        }
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if !boxes[i].closures_disjoint(&boxes[j]) {
                    return Err(Error::Domain("box closures must be pairwise disjoint".into()));
                }
            }
        }
        let r_o = boxes
            .iter()
            .map(|b| {
                b.lo.iter().zip(&b.hi).map(|(l, h)| l.abs().max(h.abs()).powi(2)).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max);
        Ok(Self { boxes, r_o })
    }

    /// `Ω_o = (lo, hi)` in the plane.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![HBox::interval(lo, hi)])
    }

    pub fn boxes(&self) -> &[HBox] {
        &self.boxes
    }

    pub fn horizontal_dim(&self) -> usize {
        self.boxes[0].lo.len()
    }

    /// Radius of a ball centered at the origin containing `Ω_o`.
    pub fn r_o(&self) -> f64 {
        self.r_o
    }

    /// Membership of a horizontal point in `Ω_o`.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(x))
    }

    /// Distance from `x'` to the complement of `Ω_o` (0 outside).
    pub fn distance_to_complement(&self, x: &[f64]) -> f64 {
        self.boxes.iter().filter(|b| b.contains(x)).map(|b| b.inner_distance(x)).fold(0.0, f64::max)
    }

    /// Per-column flags: true where the column center lies in `Ω_o`.
    pub fn free_columns(&self, grid: &GridDescriptor) -> Vec<bool> {
        let hd = grid.vertical_axis();
        (0..grid.columns())
            .map(|c| {
                let x = grid.column_center(c);
                self.contains(&x[..hd])
            })
            .collect()
    }
}

/// Exterior graph datum `u`, sampled at every column center of the window.
/// Samples on columns inside `Ω_o` are only used to extend the datum beyond
/// the window (nearest-column rule).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExteriorGraphData {
    heights: Vec<f64>,
}

impl ExteriorGraphData {
    pub fn new(grid: &GridDescriptor, heights: Vec<f64>) -> Result<Self> {
        if heights.len() != grid.columns() {
            return Err(Error::Domain(format!(
                "expected {} column samples, got {}",
                grid.columns(),
                heights.len()
            )));
        }
        if heights.iter().any(|h| !h.is_finite()) {
            return Err(Error::Domain("exterior heights must be finite".into()));
        }
        Ok(Self { heights })
    }

    pub fn constant(grid: &GridDescriptor, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.columns()])
    }

    /// Samples a function of the horizontal column center.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: &GridDescriptor, f: F) -> Result<Self> {
        let hd = grid.vertical_axis();
        let heights = (0..grid.columns()).map(|c| f(&grid.column_center(c)[..hd])).collect();
        Self::new(grid, heights)
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    /// `M_R`: supremum of the samples over columns with `|x'| ≤ r`.
    pub fn sup_within(&self, grid: &GridDescriptor, r: f64) -> f64 {
        let hd = grid.vertical_axis();
        (0..grid.columns())
            .filter(|&c| {
                let x = grid.column_center(c);
                x[..hd].iter().map(|v| v * v).sum::<f64>().sqrt() <= r
            })
            .map(|c| self.heights[c])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
