use serde::{Deserialize, Serialize};

use super::domain::CylinderDomain;
use super::grid::GridDescriptor;
use crate::error::{Error, Result};

/// Named subsets of space, all positioned relative to the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    /// `Ω = Ω_o × ℝ`.
    Omega,
    /// `Ω_η`: points whose open `η`-ball lies in `Ω`.
    OmegaEta(f64),
    /// `C_R = {|x'| < R}`.
    Cylinder(f64),
    /// `D_{R,η} = Ω_{2η} ∪ (C_R ∖ Ω)`.
    DRegion { r: f64, eta: f64 },
    /// Set trapped between two tangent balls of radius `r`, `|x'| ≤ λ r`.
    TrapBalls { r: f64, lambda: f64 },
    /// Set trapped between `±c_o |x'|^{1+α}`, `|x'| ≤ l`.
    TrapGraphs { l: f64, alpha: f64, c_o: f64 },
}

/// Result of a region query: cell indices in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionCells {
    pub cells: Vec<usize>,
    pub empty: bool,
}

impl Region {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Region::Omega => true,
            Region::OmegaEta(eta) => eta > 0.0,
            Region::Cylinder(r) => r > 0.0,
            Region::DRegion { r, eta } => r > 0.0 && eta > 0.0,
            Region::TrapBalls { r, lambda } => r > 0.0 && lambda > 0.0 && lambda <= 1.0,
            Region::TrapGraphs { l, alpha, c_o } => l > 0.0 && alpha > 0.0 && c_o > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid region parameters {self:?}")))
        }
    }

    /// Membership predicate for a physical point.
    pub fn contains(&self, dom: &CylinderDomain, x: &[f64]) -> bool {
        let n = x.len();
        let (xh, xn) = (&x[..n - 1], x[n - 1]);
        let rho = xh.iter().map(|v| v * v).sum::<f64>().sqrt();
        match *self {
            Region::Omega => dom.contains(xh),
            Region::OmegaEta(eta) => dom.contains(xh) && dom.distance_to_complement(xh) >= eta,
            Region::Cylinder(r) => rho < r,
            Region::DRegion { r, eta } => {
                let in_omega = dom.contains(xh);
                (in_omega && dom.distance_to_complement(xh) >= 2.0 * eta) || (rho < r && !in_omega)
            }
            Region::TrapBalls { r, lambda } => rho <= lambda * r && xn.abs() <= r - (r * r - rho * rho).max(0.0).sqrt(),
            Region::TrapGraphs { l, alpha, c_o } => rho <= l && xn.abs() <= c_o * rho.powf(1.0 + alpha),
        }
    }
}

/// Cells of the window whose centers satisfy the region predicate.
pub fn region_cells(dom: &CylinderDomain, grid: &GridDescriptor, which: Region) -> Result<RegionCells> {
    which.validate()?;
    let dim = grid.dim();
    let cells: Vec<usize> = (0..grid.len())
        .filter(|&c| {
            let x = grid.center(c);
            which.contains(dom, &x[..dim])
        })
        .collect();
    let empty = cells.is_empty();
    Ok(RegionCells { cells, empty })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_and_its_shrinking() {
        let g = GridDescriptor::centered(0.25, vec![16, 4]).unwrap();
        let d = CylinderDomain::interval(-1.0, 1.0).unwrap();
        let om = region_cells(&d, &g, Region::Omega).unwrap();
        assert_eq!(om.cells.len(), 8 * 4);
        for &c in &om.cells {
            assert!(g.center(c)[0].abs() < 1.0);
        }
        let eta = region_cells(&d, &g, Region::OmegaEta(0.5)).unwrap();
        // Two columns removed on each side.
        assert_eq!(eta.cells.len(), 4 * 4);
    }

    #[test]
    fn d_region_is_union_of_pieces() {
        let g = GridDescriptor::centered(0.25, vec![24, 4]).unwrap();
        let d = CylinderDomain::interval(-1.0, 1.0).unwrap();
        let (r, eta) = (2.0, 0.25);
        let dr = region_cells(&d, &g, Region::DRegion { r, eta }).unwrap().cells;
        let inner = region_cells(&d, &g, Region::OmegaEta(2.0 * eta)).unwrap().cells;
        let cyl = region_cells(&d, &g, Region::Cylinder(r)).unwrap().cells;
        let om = region_cells(&d, &g, Region::Omega).unwrap().cells;
        let mut expected: Vec<usize> = inner.clone();
        expected.extend(cyl.iter().filter(|c| !om.contains(c)));
        expected.sort_unstable();
        assert_eq!(dr, expected);
    }

    #[test]
    fn empty_region_is_flagged() {
        let g = GridDescriptor::centered(1.0, vec![4, 4]).unwrap();
        let d = CylinderDomain::interval(-1.0, 1.0).unwrap();
        let r = region_cells(&d, &g, Region::OmegaEta(5.0)).unwrap();
        assert!(r.empty);
        assert!(region_cells(&d, &g, Region::Cylinder(-1.0)).is_err());
    }
}
