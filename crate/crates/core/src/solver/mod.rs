//! Exact minimization of the discrete s-perimeter by minimum cut, a
//! single-flip descent fallback, and the vertical sliding construction.
//!
//! The energy is a sum of nonnegative disagreement terms, so it is
//! submodular and the minimum cut of the network below is a global
//! minimizer. Capacities are quantized to integers with a power-of-two
//! scale; the residual source side of the maximum flow is the minimal
//! minimizer.

mod flow;

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use flow::{FlowBuilder, FlowGraph};

use crate::energy::{EnergyValue, PerimeterModel};
use crate::error::{Error, Result};
use crate::geometry::{CellSet, CylinderDomain, ExteriorGraphData, GridDescriptor, Region};
use crate::kernel::Kernel;
use crate::par;

pub const DEFAULT_FREE_LIMIT: usize = 1 << 14;
/// Free-free arcs are kept for pairs within this Chebyshev distance (cells).
pub const DEFAULT_GRAPH_RADIUS: i64 = 64;

#[derive(Debug, Clone)]
pub struct Problem {
    grid: Arc<GridDescriptor>,
    domain: CylinderDomain,
    exterior: ExteriorGraphData,
    kernel: Kernel,
    frame: CellSet,
    free_limit: usize,
    graph_radius: i64,
}

impl Problem {
    pub fn new(grid: Arc<GridDescriptor>, domain: CylinderDomain, exterior: ExteriorGraphData, kernel: Kernel) -> Result<Self> {
        if kernel.dim() != grid.dim() {
            return Err(Error::Domain("kernel and grid dimensions disagree".into()));
        }
        if domain.horizontal_dim() + 1 != grid.dim() {
            return Err(Error::Domain("domain and grid dimensions disagree".into()));
        }
        let frame = CellSet::new(grid.clone(), &domain, &exterior)?;
        Ok(Self { grid, domain, exterior, kernel, frame, free_limit: DEFAULT_FREE_LIMIT, graph_radius: DEFAULT_GRAPH_RADIUS })
    }

    pub fn with_free_limit(mut self, limit: usize) -> Self {
        self.free_limit = limit;
        self
    }
    pub fn with_graph_radius(mut self, r: i64) -> Self {
        self.graph_radius = r;
        self
    }

    pub fn grid(&self) -> &GridDescriptor {
        &self.grid
    }
    pub fn domain(&self) -> &CylinderDomain {
        &self.domain
    }
    pub fn exterior(&self) -> &ExteriorGraphData {
        &self.exterior
    }
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }
    /// Exterior data applied, every free cell a non-member.
    pub fn frame(&self) -> &CellSet {
        &self.frame
    }
    pub fn free_cells(&self) -> Vec<usize> {
        self.frame.free_cells()
    }
    pub fn model(&self) -> Result<PerimeterModel> {
        PerimeterModel::new(&self.kernel, &self.frame)
    }
}

/// Cut network: node `i < n` is free slot `i`, then source and sink.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    pub free_cells: Vec<usize>,
    /// Source arcs: cost of the cell being a non-member.
    pub source_caps: Vec<f64>,
    /// Sink arcs: cost of the cell being a member.
    pub sink_caps: Vec<f64>,
    /// Undirected free-free arcs `(slot_a, slot_b, weight)`.
    pub pairs: Vec<(u32, u32, f64)>,
    /// Constant added to the cut value for dropped pairs (half their weight).
    pub offset: f64,
    /// Bound on the energy error from dropped pairs.
    pub truncation_bound: f64,
    pub dropped_pairs: u64,
}

impl FlowNetwork {
    pub fn source(&self) -> usize {
        self.free_cells.len()
    }
    pub fn sink(&self) -> usize {
        self.free_cells.len() + 1
    }
    pub fn arc_count(&self) -> usize {
        self.pairs.len() + 2 * self.free_cells.len()
    }

    /// Cut value of a configuration given by free-slot memberships.
    pub fn cut_value(&self, member: &[bool]) -> f64 {
        let mut sum = crate::quadrature::NeumaierSum::new();
        for (i, &m) in member.iter().enumerate() {
            sum.add(if m { self.sink_caps[i] } else { self.source_caps[i] });
        }
        for &(a, b, w) in &self.pairs {
            if member[a as usize] != member[b as usize] {
                sum.add(w);
            }
        }
        sum.value()
    }

    fn quantized(&self) -> Result<(FlowGraph, f64)> {
        let mut total = 0.0;
        for v in self.source_caps.iter().chain(&self.sink_caps) {
            total += v;
        }
        for &(_, _, w) in &self.pairs {
            total += 2.0 * w;
        }
        if !total.is_finite() {
            return Err(Error::Invariant("non-finite capacity in the cut network".into()));
        }
        let exp = if total > 0.0 { (62.0 - total.log2()).floor() as i32 } else { 0 };
        let scale = 2f64.powi(exp);
        let q = |v: f64| (v * scale).round() as i64;
        let n = self.free_cells.len();
        let mut b = FlowBuilder::new(n + 2);
        for i in 0..n {
            b.add(self.source(), i, q(self.source_caps[i]), 0);
            b.add(i, self.sink(), q(self.sink_caps[i]), 0);
        }
        for &(a, c, w) in &self.pairs {
            let w = q(w);
            b.add(a as usize, c as usize, w, w);
        }
        Ok((b.build(), scale))
    }
}

fn build_from_model(model: &PerimeterModel, radius: i64) -> Result<FlowNetwork> {
    let free = model.free_cells().to_vec();
    let n = free.len();
    let unary: Vec<(f64, f64)> = (0..n).map(|i| model.unary(i)).collect();
    let rows = par::map_range(n, |i| {
        let a = free[i];
        let ca = model.coords(a);
        let mut kept = Vec::new();
        let mut dropped = crate::quadrature::NeumaierSum::new();
        let mut dropped_n = 0u64;
        for (j, &b) in free.iter().enumerate().skip(i + 1) {
            let cb = model.coords(b);
            let cheb = (0..3).map(|d| (ca[d] - cb[d]).abs()).max().unwrap_or(0);
            let w = model.pair_weight(a, b);
            if cheb <= radius {
                kept.push((i as u32, j as u32, w));
            } else {
                dropped.add(w);
                dropped_n += 1;
            }
        }
        (kept, dropped.value(), dropped_n)
    });
    let mut pairs = Vec::new();
    let mut dropped = crate::quadrature::NeumaierSum::new();
    let mut dropped_pairs = 0;
    for (kept, d, dn) in rows {
        pairs.extend(kept);
        dropped.add(d);
        dropped_pairs += dn;
    }
    let net = FlowNetwork {
        free_cells: free,
        source_caps: unary.iter().map(|u| u.1).collect(),
        sink_caps: unary.iter().map(|u| u.0).collect(),
        pairs,
        offset: 0.5 * dropped.value(),
        truncation_bound: 0.5 * dropped.value(),
        dropped_pairs,
    };
    let negative = net.source_caps.iter().chain(&net.sink_caps).any(|&c| !(c >= 0.0)) || net.pairs.iter().any(|p| !(p.2 >= 0.0));
    if negative {
        return Err(Error::Invariant("negative or undefined capacity in the cut network".into()));
    }
    Ok(net)
}

/// Cut network for the problem.
pub fn build_cut_graph(p: &Problem) -> Result<FlowNetwork> {
    build_from_model(&p.model()?, p.graph_radius)
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub set: CellSet,
    /// `Per_s` of `set`, evaluated in full.
    pub energy: EnergyValue,
    /// Minimum cut value plus offset (equals `energy` when nothing is dropped).
    pub cut_value: f64,
    pub offset: f64,
    pub truncation_bound: f64,
    pub flips: u64,
}

/// Global minimizer of the discrete functional; the minimal one among ties.
pub fn minimize_exact(p: &Problem) -> Result<Solution> {
    let free = p.free_cells();
    if free.len() > p.free_limit {
        return Err(Error::Precondition(format!(
            "{} free cells exceed the exact-solver limit of {}; use minimize_descent",
            free.len(),
            p.free_limit
        )));
    }
    let model = p.model()?;
    let net = build_from_model(&model, p.graph_radius)?;
    let (mut graph, _scale) = net.quantized()?;
    let (s, t) = (net.source(), net.sink());
    graph.max_flow(s, t);
    let side = graph.source_side(s);
    let mut set = p.frame.clone();
    for (i, &c) in net.free_cells.iter().enumerate() {
        set.set(c, side[i])?;
    }
    let cut_value = net.cut_value(&side[..net.free_cells.len()]) + net.offset;
    let energy = model.energy(&set)?;
    Ok(Solution { set, energy, cut_value, offset: net.offset, truncation_bound: net.truncation_bound, flips: 0 })
}

/// Row-major single-flip descent from `init` until no flip lowers the
/// energy by more than `1e-12` relative.
pub fn minimize_descent(p: &Problem, init: &CellSet) -> Result<Solution> {
    let model = p.model()?;
    let mut set = init.clone();
    let mut energy = model.energy(&set)?.value;
    let mut flips = 0u64;
    loop {
        let mut changed = false;
        for &c in p.frame.free_cells().iter() {
            let d = model.delta(&set, c)?;
            if d < -1e-12 * energy.abs().max(f64::MIN_POSITIVE) {
                set.flip(c)?;
                energy += d;
                flips += 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let energy = model.energy(&set)?;
    Ok(Solution { cut_value: energy.value, set, energy, offset: 0.0, truncation_bound: 0.0, flips })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactKind {
    /// Center in `Ω_{2h}`.
    Interior,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactCell {
    pub cell: usize,
    pub column: usize,
    pub row: usize,
    pub kind: ContactKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactReport {
    /// First-contact height, a multiple of `h`.
    pub t: f64,
    pub t_cells: i64,
    pub contact_cells: Vec<ContactCell>,
}

impl ContactReport {
    pub fn to_text(&self) -> String {
        let mut out = format!("t = {} ({} cells)\ncontacts = {}\n", self.t, self.t_cells, self.contact_cells.len());
        for c in &self.contact_cells {
            let kind = match c.kind {
                ContactKind::Interior => "interior",
                ContactKind::Boundary => "boundary",
            };
            let _ = writeln!(out, "{} {} {}", c.column, c.row, kind);
        }
        out
    }
}

/// Slides `E` down from above: `t` is the least shift such that every
/// shift `t' ≥ t` keeps `E + t' e_n ⊇ E` on `region`.
pub fn slide_contact(set: &CellSet, dom: &CylinderDomain, region: &[usize]) -> Result<ContactReport> {
    let g = set.grid();
    if let Some(&c) = region.iter().find(|&&c| c >= g.len()) {
        return Err(Error::Domain(format!("region cell {c} outside the window")));
    }
    let v = g.vertical_axis();
    let k_max = g.rows() as i64;
    let contains = |k: i64| {
        region.iter().all(|&c| {
            if !set.get(c) {
                return true;
            }
            let mut below = g.coords(c);
            below[v] -= k;
            set.member_at(&below)
        })
    };
    if !contains(k_max) {
        return Err(Error::Precondition("no contact height within the window; enlarge it vertically".into()));
    }
    let mut t = k_max;
    while t > 0 && contains(t - 1) {
        t -= 1;
    }
    let shifted = |c: &[i64; 3]| {
        let mut b = *c;
        b[v] -= t;
        set.member_at(&b)
    };
    let inner = Region::OmegaEta(2.0 * g.h());
    let dim = g.dim();
    let mut contact_cells = Vec::new();
    for &c in region {
        if !set.is_boundary(c) {
            continue;
        }
        // Boundary of the shifted set at the same cell.
        let cc = g.coords(c);
        let m = shifted(&cc);
        let on_shifted = set.neighbor_directions().iter().any(|d| shifted(&[cc[0] + d[0], cc[1] + d[1], cc[2] + d[2]]) != m);
        if !on_shifted {
            continue;
        }
        let x = g.center(c);
        let kind = if inner.contains(dom, &x[..dim]) { ContactKind::Interior } else { ContactKind::Boundary };
        contact_cells.push(ContactCell { cell: c, column: g.column_of(c), row: g.row_of(c), kind });
    }
    Ok(ContactReport { t: t as f64 * g.h(), t_cells: t, contact_cells })
}
