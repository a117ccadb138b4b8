//! Verifiers for graph structure, stickiness, spike clearance, density
//! bounds, curvature continuity and overlap defects, plus the trapped-region
//! integrals in [`lemmas`].

pub mod lemmas;

use serde::{Deserialize, Serialize};

pub use lemmas::{
    fit_power_law, graph_trap_integral, graph_trap_reference, lemma_csv, trap_integral, LemmaRow, Resolution,
    LEMMA_CSV_HEADER,
};

use crate::curvature::{CurvatureEvaluator, CurvatureSample};
use crate::error::{Error, Result};
use crate::geometry::{CellSet, Coord, CylinderDomain, ExteriorGraphData};
use crate::kernel::{upper_column, Kernel, PointWeights};

/// Minimum spike clearance (cells) between the set and the window top.
pub const MIN_CLEARANCE: i64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnHeight {
    pub column: usize,
    pub height: f64,
}

/// A non-member run with members above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphViolation {
    pub column: usize,
    pub gap_lo: f64,
    pub gap_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub is_graph: bool,
    /// Bottom face of the first non-member cell per `Ω_o` column.
    pub v: Vec<ColumnHeight>,
    pub violations: Vec<GraphViolation>,
}

impl GraphReport {
    pub fn height(&self, column: usize) -> Option<f64> {
        self.v.iter().find(|c| c.column == column).map(|c| c.height)
    }
}

/// Scans each `Ω_o` column bottom to top for a member prefix.
pub fn graph_check(set: &CellSet, dom: &CylinderDomain) -> GraphReport {
    let g = set.grid();
    let va = g.vertical_axis();
    let face = |row: usize| g.lower(va) + row as f64 * g.h();
    let mut v = Vec::new();
    let mut violations = Vec::new();
    for (col, free) in dom.free_columns(g).into_iter().enumerate() {
        if !free {
            continue;
        }
        let bits: Vec<bool> = (0..g.rows()).map(|r| set.get(g.cell_at(col, r))).collect();
        let first_gap = bits.iter().position(|b| !b).unwrap_or(g.rows());
        v.push(ColumnHeight { column: col, height: face(first_gap) });
        let mut row = first_gap;
        while row < g.rows() {
            let start = row;
            while row < g.rows() && !bits[row] {
                row += 1;
            }
            if row == g.rows() {
                break;
            }
            violations.push(GraphViolation { column: col, gap_lo: face(start), gap_hi: face(row) });
            while row < g.rows() && bits[row] {
                row += 1;
            }
        }
    }
    GraphReport { is_graph: violations.is_empty(), v, violations }
}

/// Frame with every `Ω_o` column filled below `heights[column]`.
pub fn subgraph(frame: &CellSet, heights: &[f64]) -> Result<CellSet> {
    let g = frame.grid();
    if heights.len() != g.columns() {
        return Err(Error::Domain(format!("expected {} heights, got {}", g.columns(), heights.len())));
    }
    let mut out = frame.clone();
    let va = g.vertical_axis();
    for c in frame.free_cells() {
        let y = g.center(c)[va];
        out.set(c, y < heights[g.column_of(c)])?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StickinessColumn {
    pub column: usize,
    pub exterior_column: usize,
    pub v: f64,
    pub u: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StickinessReport {
    pub columns: Vec<StickinessColumn>,
    /// Largest gap, sign kept.
    pub max_gap: f64,
}

/// Gap `v − u` at every `Ω_o` column that touches an exterior column.
pub fn stickiness_check(set: &CellSet, dom: &CylinderDomain, ext: &ExteriorGraphData) -> Result<StickinessReport> {
    let report = graph_check(set, dom);
    if !report.is_graph {
        return Err(Error::Precondition(format!(
            "stickiness needs a graph; {} columns violate it",
            report.violations.len()
        )));
    }
    let g = set.grid();
    let free = dom.free_columns(g);
    let hd = g.vertical_axis();
    let mut columns = Vec::new();
    for cv in &report.v {
        let base = g.column_coords(cv.column);
        let neighbor = (0..hd).flat_map(|d| [(d, -1i64), (d, 1)]).find_map(|(d, s)| {
            let mut c = base;
            c[d] += s;
            if c[d] < 0 || c[d] >= g.counts()[d] as i64 {
                return None;
            }
            let col = g.clamped_column(&c);
            (!free[col]).then_some(col)
        });
        if let Some(col) = neighbor {
            let u = ext.heights()[col];
            columns.push(StickinessColumn { column: cv.column, exterior_column: col, v: cv.height, u, gap: cv.height - u });
        }
    }
    let max_gap = columns.iter().map(|c| c.gap).fold(f64::NEG_INFINITY, f64::max);
    Ok(StickinessReport { columns, max_gap })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeReport {
    /// Top face of the highest member cell over `Ω_o` columns.
    pub m: f64,
    pub clearance: i64,
    pub passed: bool,
}

pub fn spike_bound_check(set: &CellSet, dom: &CylinderDomain) -> SpikeReport {
    let g = set.grid();
    let va = g.vertical_axis();
    let mut top_row: Option<usize> = None;
    for (col, free) in dom.free_columns(g).into_iter().enumerate() {
        if !free {
            continue;
        }
        if let Some(r) = (0..g.rows()).rev().find(|&r| set.get(g.cell_at(col, r))) {
            top_row = Some(top_row.map_or(r, |t| t.max(r)));
        }
    }
    let filled = top_row.map_or(0, |r| r + 1);
    let m = g.lower(va) + filled as f64 * g.h();
    let clearance = (g.rows() - filled) as i64;
    SpikeReport { m, clearance, passed: clearance >= MIN_CLEARANCE }
}

/// Fraction of member cells among cells whose centers lie in the open ball
/// `B_r(center(x))`.
pub fn density_ratio(set: &CellSet, x: usize, r: f64) -> Result<f64> {
    let g = set.grid();
    if x >= g.len() {
        return Err(Error::Domain(format!("cell {x} outside the window")));
    }
    if !(r >= 2.0 * g.h()) {
        return Err(Error::Domain(format!("radius must be at least 2h, got {r}")));
    }
    let p = g.center(x);
    for d in 0..g.dim() {
        if p[d] - r < g.lower(d) || p[d] + r > g.upper(d) {
            return Err(Error::Domain("ball leaves the window".into()));
        }
    }
    let rc = r / g.h();
    let k = rc.ceil() as i64;
    let a = g.coords(x);
    let (mut inside, mut members) = (0u64, 0u64);
    let range = |d: usize| if d < g.dim() { -k..=k } else { 0..=0 };
    for i in range(0) {
        for j in range(1) {
            for l in range(2) {
                if ((i * i + j * j + l * l) as f64) >= rc * rc {
                    continue;
                }
                let c = [a[0] + i, a[1] + j, a[2] + l];
                inside += 1;
                if set.member_at(&c) {
                    members += 1;
                }
            }
        }
    }
    Ok(members as f64 / inside as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub min: f64,
    pub max: f64,
    /// `min(min, 1 − max)`.
    pub c_hat: f64,
    pub samples: usize,
}

/// Density ratios over cells; cells whose ball leaves the window are skipped.
pub fn density_fit(set: &CellSet, cells: &[usize], r: f64) -> Result<DensityReport> {
    let mut ratios = Vec::new();
    for &c in cells {
        match density_ratio(set, c, r) {
            Ok(v) => ratios.push(v),
            Err(Error::Domain(m)) if m.contains("leaves the window") => {}
            Err(e) => return Err(e),
        }
    }
    if ratios.is_empty() {
        return Err(Error::Precondition("no cell admits a ball inside the window".into()));
    }
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(DensityReport { min, max, c_hat: min.min(1.0 - max), samples: ratios.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub samples: Vec<CurvatureSample>,
    /// `|value_{i+1} − value_i|` along the sequence.
    pub discrepancies: Vec<f64>,
    /// Discrepancy between the last two samples.
    pub last_discrepancy: f64,
    /// When every sample before the last has value ≤ 0: whether the last
    /// one has value ≤ `tol`.
    pub terminal_sign_ok: Option<bool>,
}

pub fn curvature_continuity_probe(set: &CellSet, seq: &[usize], k: &Kernel, tol: f64) -> Result<ContinuityReport> {
    if seq.is_empty() {
        return Err(Error::Domain("empty sequence".into()));
    }
    let ev = CurvatureEvaluator::new(k, set.grid())?;
    let samples: Vec<CurvatureSample> = seq.iter().map(|&c| ev.nmc(set, c)).collect::<Result<_>>()?;
    let discrepancies: Vec<f64> = samples.windows(2).map(|w| (w[1].value - w[0].value).abs()).collect();
    let last_discrepancy = discrepancies.last().copied().unwrap_or(0.0);
    let n = samples.len();
    let terminal_sign_ok = samples[..n - 1].iter().all(|s| s.value <= 0.0).then(|| samples[n - 1].value <= tol);
    Ok(ContinuityReport { samples, discrepancies, last_discrepancy, terminal_sign_ok })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    /// `∫_region (χ_{B∖A} − χ_{A∖B})(y) |p − y|^{-(n+2s)} dy`.
    pub value: f64,
    /// `A ⊆ B` on the region.
    pub contained: bool,
}

/// Signed kernel-weighted measure of the two difference sets over `region`,
/// seen from the center of cell `p` (whose own cell is excluded).
pub fn overlap_defect_integral(a: &CellSet, b: &CellSet, region: &[usize], p: usize, k: &Kernel) -> Result<OverlapReport> {
    let g = a.grid();
    if g != b.grid() {
        return Err(Error::Domain("sets live on different grids".into()));
    }
    if p >= g.len() || region.iter().any(|&c| c >= g.len()) {
        return Err(Error::Domain("cell outside the window".into()));
    }
    let pw = PointWeights::new(k, g.h());
    let pc = g.coords(p);
    let mut value = 0.0;
    let mut contained = true;
    for &c in region {
        let (ia, ib) = (a.get(c), b.get(c));
        if ia == ib || c == p {
            contained &= !(ia && !ib);
            continue;
        }
        let cc = g.coords(c);
        let d: Coord = [2 * (cc[0] - pc[0]), 2 * (cc[1] - pc[1]), 2 * (cc[2] - pc[2])];
        let w = pw.weight(d)?;
        if ib {
            value += w;
        } else {
            contained = false;
            value -= w;
        }
    }
    Ok(OverlapReport { value, contained })
}

/// `2 ∫_{ℝⁿ ∖ C_R} |p − y|^{-(n+2s)} dy` for `p` inside the cylinder
/// `C_R = {|y'| < R}`: the part of the defect bound that depends on `R`.
pub fn cylinder_defect(k: &Kernel, p: &[f64], r: f64) -> Result<f64> {
    let hd = k.dim() - 1;
    let ph = &p[..hd];
    let rho0 = ph.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(rho0 < r) {
        return Err(Error::Domain("point must lie inside the cylinder".into()));
    }
    // Vertical lines integrate to c·d^{1-n-2s}; then ∫_{d0}^∞ c d^{-1-2s} dd.
    let c = 2.0 * upper_column(k, 1.0, 0.0);
    let two_s = 2.0 * k.s();
    let radial = |d0: f64| c * d0.powf(-two_s) / two_s;
    let total = if hd == 1 {
        radial(r - ph[0]) + radial(r + ph[0])
    } else {
        let (x, y) = (ph[0], ph[1]);
        crate::quadrature::integrate_adaptive(
            |phi| {
                let (cs, sn) = (phi.cos(), phi.sin());
                let b = x * cs + y * sn;
                let exit = -b + (b * b - rho0 * rho0 + r * r).sqrt();
                radial(exit)
            },
            0.0,
            2.0 * std::f64::consts::PI,
            0.0,
            1e-12,
            200,
        )
        .value
    };
    Ok(2.0 * total)
}
