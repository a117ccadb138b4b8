//! Principal-value evaluation of `I_E(p) = ∫ (χ_E − χ_{E^c})(y) |p − y|^{-(n+2s)} dy`
//! at boundary cells.
//!
//! The evaluation point is the midpoint of the face between the boundary
//! cell and its first neighbor of opposite membership, so a flat interface
//! gives exactly zero by reflection. Terms are summed without compensation
//! in a fixed order: rounding is then monotone in each term, which keeps
//! domination and antisymmetry exact.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{supconvolve, CellSet, Coord, GridDescriptor};
use crate::kernel::{far_field, Kernel, PointWeights, TailPolicy};
use crate::par;

/// Exclusion radii in cells, largest first.
pub const PV_RADII_CELLS: [i64; 3] = [8, 4, 2];
/// Relative agreement required between the two smallest radii.
pub const PV_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub cell: usize,
    pub point: [f64; 3],
    pub pv_radii: Vec<f64>,
    pub estimates: Vec<f64>,
    pub extrapolated: f64,
    pub converged: bool,
    /// Extrapolated value when converged, otherwise the last raw estimate.
    pub value: f64,
}

/// Reusable evaluator for one grid; holds point weights for every doubled
/// offset that fits in the window.
#[derive(Debug)]
pub struct CurvatureEvaluator {
    kernel: Kernel,
    h: f64,
    counts: Vec<usize>,
    extents: [usize; 3],
    table: Vec<f64>,
}

impl CurvatureEvaluator {
    pub fn new(kernel: &Kernel, grid: &GridDescriptor) -> Result<Self> {
        if grid.dim() != kernel.dim() {
            return Err(Error::Domain("kernel and grid dimensions disagree".into()));
        }
        let mut extents = [1usize; 3];
        for d in 0..grid.dim() {
            extents[d] = 2 * grid.counts()[d] + 2;
        }
        let pw = PointWeights::new(kernel, grid.h());
        let min2 = 4 * PV_RADII_CELLS[2] * PV_RADII_CELLS[2];
        let table = par::map_range(extents[0] * extents[1] * extents[2], |i| {
            let d = [(i / (extents[1] * extents[2])) as i64, ((i / extents[2]) % extents[1]) as i64, (i % extents[2]) as i64];
            if d[0] * d[0] + d[1] * d[1] + d[2] * d[2] < min2 {
                return Ok(f64::NAN);
            }
            pw.weight(d)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        Ok(Self { kernel: *kernel, h: grid.h(), counts: grid.counts().to_vec(), extents, table })
    }

    #[inline]
    fn weight(&self, d: [i64; 3]) -> f64 {
        let a = [d[0].unsigned_abs() as usize, d[1].unsigned_abs() as usize, d[2].unsigned_abs() as usize];
        self.table[(a[0] * self.extents[1] + a[1]) * self.extents[2] + a[2]]
    }

    /// Ring sums at point `center(anchor) + half·h/2`: entry `j` holds cells
    /// with distance in `[r_j, r_{j-1})`, entry 0 everything beyond `r_0`.
    fn rings(&self, set: &CellSet, anchor: usize, half: Coord, limit: Option<&(dyn Fn(&Coord) -> bool + Sync)>) -> Result<[f64; 3]> {
        let g = set.grid();
        if g.counts() != self.counts.as_slice() || g.h() != self.h {
            return Err(Error::Domain("set does not live on the evaluator's grid".into()));
        }
        let a = g.coords(anchor);
        let bits = set.bits();
        let rows = g.rows();
        let cols = par::map_range(g.columns(), |col| {
            let mut acc = [0.0; 3];
            for row in 0..rows {
                let c = g.cell_at(col, row);
                let cc = g.coords(c);
                let off = [cc[0] - a[0], cc[1] - a[1], cc[2] - a[2]];
                if let Some(f) = limit {
                    if !f(&off) {
                        continue;
                    }
                }
                let d = [2 * off[0] - half[0], 2 * off[1] - half[1], 2 * off[2] - half[2]];
                let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                let ring = PV_RADII_CELLS.iter().position(|&r| d2 >= 4 * r * r);
                let Some(j) = ring else { continue };
                let w = self.weight(d);
                acc[j] += if bits[c] { w } else { -w };
            }
            acc
        });
        let mut total = [0.0; 3];
        for c in cols {
            for j in 0..3 {
                total[j] += c[j];
            }
        }
        Ok(total)
    }

    fn point(&self, set: &CellSet, anchor: usize, half: Coord) -> [f64; 3] {
        let mut p = set.grid().center(anchor);
        for d in 0..set.grid().dim() {
            p[d] += half[d] as f64 * 0.5 * self.h;
        }
        p
    }

    /// Sample at `center(anchor) + half·h/2` (tails included).
    pub fn at(&self, set: &CellSet, anchor: usize, half: Coord) -> Result<CurvatureSample> {
        let p = self.point(set, anchor, half);
        let g = set.grid();
        if self.kernel.tail_policy() != TailPolicy::None && (0..g.dim()).any(|d| !(p[d] > g.lower(d) && p[d] < g.upper(d))) {
            return Err(Error::Precondition(format!("evaluation point {p:?} lies on the window boundary; the far field diverges there")));
        }
        let rings = self.rings(set, anchor, half, None)?;
        let t = far_field(&self.kernel, set, &p);
        let (tm, tn) = t.oriented(set.closure().below_member);
        let mut estimates = Vec::with_capacity(3);
        let mut acc = tm - tn;
        for r in rings {
            acc += r;
            estimates.push(acc);
        }
        Ok(self.finish(anchor, p, estimates))
    }

    fn finish(&self, cell: usize, point: [f64; 3], estimates: Vec<f64>) -> CurvatureSample {
        let c = 2f64.powf(1.0 - 2.0 * self.kernel.s());
        let (coarse, fine) = (estimates[1], estimates[2]);
        let extrapolated = (fine * c - coarse) / (c - 1.0);
        let converged = (fine - coarse).abs() < PV_TOL * fine.abs().max(1e-3);
        CurvatureSample {
            cell,
            point,
            pv_radii: PV_RADII_CELLS.iter().map(|&r| r as f64 * self.h).collect(),
            estimates,
            extrapolated,
            converged,
            value: if converged { extrapolated } else { fine },
        }
    }

    /// `I_E` at the boundary face of cell `x`.
    pub fn nmc(&self, set: &CellSet, x: usize) -> Result<CurvatureSample> {
        let dir = set
            .opposite_direction(x)
            .ok_or_else(|| Error::Precondition(format!("cell {x} is not on the discrete boundary")))?;
        self.at(set, x, dir)
    }
}

/// `I_E` at the boundary face of cell `x`.
pub fn nmc(set: &CellSet, x: usize, k: &Kernel) -> Result<CurvatureSample> {
    CurvatureEvaluator::new(k, set.grid())?.nmc(set, x)
}

/// `I_E` at an arbitrary physical point given as `center(anchor) + half·h/2`.
pub fn nmc_at_point(set: &CellSet, anchor: usize, half: Coord, k: &Kernel) -> Result<CurvatureSample> {
    CurvatureEvaluator::new(k, set.grid())?.at(set, anchor, half)
}

/// Samples at many boundary cells, in input order.
pub fn nmc_many(set: &CellSet, cells: &[usize], k: &Kernel) -> Result<Vec<CurvatureSample>> {
    let ev = CurvatureEvaluator::new(k, set.grid())?;
    par::map_slice(cells, |&c| ev.nmc(set, c)).into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupconvolutionCheck {
    pub holds: bool,
    /// `I_{E♯}(x_o + v) − I_E(x_o)`.
    pub margin: f64,
}

/// Compares `I_{E♯_δ}` at `x_o + v` with `I_E` at `x_o`.
///
/// Both sides are summed over the same offsets (those inside the window
/// from both points, outside the smallest exclusion radius, both points at
/// cell centers), so the containment `E♯_δ ⊇ E + v` makes the margin
/// nonnegative term by term.
pub fn supconvolution_inequality_check(set: &CellSet, delta: f64, x_o: usize, v: Coord, k: &Kernel) -> Result<SupconvolutionCheck> {
    let g = set.grid();
    let kc = crate::geometry::radius_cells(g.h(), delta)? as i64;
    if v[0] * v[0] + v[1] * v[1] + v[2] * v[2] > kc * kc {
        return Err(Error::Domain(format!("|v| exceeds the radius ({kc} cells)")));
    }
    if !set.is_boundary(x_o) {
        return Err(Error::Precondition(format!("cell {x_o} is not on the boundary of E")));
    }
    let a = g.coords(x_o);
    let moved = [a[0] + v[0], a[1] + v[1], a[2] + v[2]];
    let y = g.index(&moved).ok_or_else(|| Error::Precondition("x_o + v leaves the window".into()))?;
    let sharp = supconvolve(set, delta)?;
    if !sharp.is_boundary(y) {
        return Err(Error::Precondition("x_o + v is not on the boundary of the supconvolution".into()));
    }
    let ev = CurvatureEvaluator::new(k, g)?;
    let inside = |off: &Coord| {
        let p = [a[0] + off[0], a[1] + off[1], a[2] + off[2]];
        let q = [moved[0] + off[0], moved[1] + off[1], moved[2] + off[2]];
        g.contains(&p) && g.contains(&q)
    };
    let lhs: f64 = ev.rings(&sharp, y, [0; 3], Some(&inside))?.iter().sum();
    let rhs: f64 = ev.rings(set, x_o, [0; 3], Some(&inside))?.iter().sum();
    let margin = lhs - rhs;
    Ok(SupconvolutionCheck { holds: margin >= -1e-12, margin })
}

/// CSV table of curvature samples.
pub fn curvature_csv(set: &CellSet, samples: &[CurvatureSample]) -> String {
    let g = set.grid();
    let mut out = String::from("column,row,value,converged,estimate_8h,estimate_4h,estimate_2h,extrapolated\n");
    for s in samples {
        let e = &s.estimates;
        let _ = writeln!(
            out,
            "{},{},{:.12e},{},{:.12e},{:.12e},{:.12e},{:.12e}",
            g.column_of(s.cell),
            g.row_of(s.cell),
            s.value,
            s.converged,
            e[0],
            e[1],
            e[2],
            s.extrapolated
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CylinderDomain, ExteriorGraphData, GridDescriptor};
    use std::sync::Arc;

    fn half_space(n: usize, h: f64) -> CellSet {
        let g = Arc::new(GridDescriptor::centered(h, vec![n, n]).unwrap());
        let w = n as f64 * h / 2.0;
        let d = CylinderDomain::interval(-w / 2.0, w / 2.0).unwrap();
        let ext = ExteriorGraphData::constant(&g, 0.0).unwrap();
        CellSet::flat_extension(g, &d, &ext).unwrap()
    }

    #[test]
    fn half_space_is_flat() {
        let e = half_space(32, 1.0 / 8.0);
        let k = Kernel::new(2, 0.25, TailPolicy::HalfspaceColumns).unwrap();
        let x = e.grid().cell_at(16, 15);
        let s = nmc(&e, x, &k).unwrap();
        assert!(s.value.abs() < 1e-6, "{s:?}");
        assert!(s.converged);
    }

    #[test]
    fn interior_cell_is_rejected() {
        let e = half_space(16, 0.25);
        let k = Kernel::new(2, 0.25, TailPolicy::None).unwrap();
        assert!(nmc(&e, e.grid().cell_at(8, 2), &k).is_err());
    }

    #[test]
    fn complement_negates() {
        let mut e = half_space(16, 0.25);
        let c = e.grid().cell_at(7, 8);
        e.set(c, true).unwrap();
        let k = Kernel::new(2, 0.3, TailPolicy::HalfspaceColumns).unwrap();
        let a = nmc(&e, c, &k).unwrap();
        let b = nmc(&e.complement(), c, &k).unwrap();
        assert_eq!(a.estimates.iter().map(|v| -v).collect::<Vec<_>>(), b.estimates);
        assert_eq!(a.extrapolated, -b.extrapolated);
    }

    #[test]
    fn half_space_supconvolution_is_tight() {
        let e = half_space(32, 0.25);
        let k = Kernel::new(2, 0.25, TailPolicy::HalfspaceColumns).unwrap();
        let x = e.grid().cell_at(16, 15);
        let r = supconvolution_inequality_check(&e, 0.5, x, [0, 1, 0], &k);
        assert!(r.is_err(), "x_o + v is interior to the dilation unless v_n = 2");
        for v in [[0, 2, 0]] {
            let r = supconvolution_inequality_check(&e, 0.5, x, v, &k).unwrap();
            assert_eq!(r.margin, 0.0);
            assert!(r.holds);
        }
    }
}
