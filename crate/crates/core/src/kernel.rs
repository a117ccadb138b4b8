//! The interaction kernel `|x - y|^{-(n+2s)}`, its integrals over pairs of
//! cells, and far-field integrals over everything outside the window.
//!
//! Cell-pair weights are computed once per offset class. Pairs whose centers
//! are at least three cells apart use the midpoint rule; nearer pairs are
//! reduced to an `n`-dimensional integral of the kernel against the
//! autocorrelation of the unit box (a product of tent functions) and
//! integrated adaptively.
//!
//! Far-field integrals are assembled from vertical column integrals
//! `∫_d^∞ (r² + τ²)^{-(n+2s)/2} dτ`, which after the substitution
//! `τ = r cot φ` become a smooth one-dimensional integral.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CellSet, GridDescriptor};
use crate::quadrature::{adaptive_cubature, gauss_legendre, integrate_adaptive};

/// Centers at least this many cells apart use the midpoint rule.
pub const FAR_FIELD_CELLS: f64 = 3.0;
/// Relative refinement target for near-field quadrature.
pub const NEAR_FIELD_TOL: f64 = 1e-7;
const TAIL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailPolicy {
    /// Interactions beyond the window are ignored.
    None,
    /// Far field split into member and non-member parts from the exterior
    /// closure, integrated column by column.
    HalfspaceColumns,
    /// Unsigned far field of the largest ball around the point that fits in
    /// the window, split evenly between the two memberships.
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    dim: usize,
    s: f64,
    exponent: f64,
    tail_policy: TailPolicy,
}

impl Kernel {
    pub fn new(dim: usize, s: f64, tail_policy: TailPolicy) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Domain(format!("dimension must be 2 or 3, got {dim}")));
        }
        if !(s > 0.0 && s < 0.5) {
            return Err(Error::Domain(format!("s must lie in (0, 1/2), got {s}")));
        }
        Ok(Self { dim, s, exponent: dim as f64 + 2.0 * s, tail_policy })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    /// `n + 2s`.
    pub fn exponent(&self) -> f64 {
        self.exponent
    }
    pub fn tail_policy(&self) -> TailPolicy {
        self.tail_policy
    }
    pub fn with_tail_policy(mut self, p: TailPolicy) -> Self {
        self.tail_policy = p;
        self
    }

    /// `d^{-(n+2s)}` for `d > 0`.
    pub fn value(&self, d: f64) -> Result<f64> {
        if !(d > 0.0) {
            return Err(Error::Domain(format!("kernel is singular at distance {d}")));
        }
        Ok(d.powf(-self.exponent))
    }

    /// Surface measure of the unit sphere in `ℝ^n`.
    pub fn sphere_measure(&self) -> f64 {
        if self.dim == 2 {
            2.0 * PI
        } else {
            4.0 * PI
        }
    }

    /// `∫_{|y| > r} |y|^{-(n+2s)} dy`.
    pub fn radial_tail(&self, r: f64) -> f64 {
        self.sphere_measure() * r.powf(-2.0 * self.s) / (2.0 * self.s)
    }
}

/// Free function form of [`Kernel::value`].
pub fn kernel_value(k: &Kernel, d: f64) -> Result<f64> {
    k.value(d)
}

/// Pair weight between unit cells whose centers differ by `offset`.
pub fn unit_pair_weight(k: &Kernel, offset: [i64; 3]) -> f64 {
    let dim = k.dim;
    let d2: f64 = offset[..dim].iter().map(|&v| (v * v) as f64).sum();
    if d2 == 0.0 {
        return 0.0;
    }
    let d = d2.sqrt();
    if d >= FAR_FIELD_CELLS {
        return d.powf(-k.exponent);
    }
    let e = k.exponent;
    let delta: Vec<f64> = offset[..dim].iter().map(|&v| v as f64).collect();
    let f = |z: &[f64]| {
        let mut w = 1.0;
        let mut r2 = 0.0;
        for i in 0..z.len() {
            w *= 1.0 - z[i].abs();
            let t = delta[i] + z[i];
            r2 += t * t;
        }
        if w <= 0.0 || r2 == 0.0 {
            0.0
        } else {
            w * r2.powf(-0.5 * e)
        }
    };
    // Integrate orthant by orthant so the tent kinks sit on box faces. The
    // singular point `z = -offset` can only be a corner of an orthant.
    let singular: Vec<f64> = delta.iter().map(|v| -v).collect();
    let mut total = 0.0;
    for mask in 0..(1usize << dim) {
        let lo: Vec<f64> = (0..dim).map(|i| if mask & (1 << i) == 0 { -1.0 } else { 0.0 }).collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + 1.0).collect();
        let touches = (0..dim).all(|i| singular[i] >= lo[i] && singular[i] <= hi[i]);
        total += if touches {
            graded_corner_integral(&singular, k.s, e)
        } else {
            adaptive_cubature(f, &lo, &hi, 6, NEAR_FIELD_TOL, 400_000).value
        };
    }
    total
}

/// Tent-weighted kernel integral over an orthant box that has the
/// singular point `c` as a corner. Each of the `n` Duffy pyramids is mapped
/// to the unit cube with the radial coordinate `u = t^{1/(1-2s)}`. The powers
/// of `u` cancel analytically, leaving a bounded integrand in `(t, ξ)`.
fn graded_corner_integral(corner: &[f64], s: f64, exponent: f64) -> f64 {
    let dim = corner.len();
    // Tent factors are `x_i` on axes where the corner sits at `±1` and
    // `1 - x_i` where it sits at 0.
    let at_edge: Vec<bool> = corner.iter().map(|c| c.abs() == 1.0).collect();
    let edge_count = at_edge.iter().filter(|&&b| b).count() as i32;
    debug_assert!(edge_count >= 1);
    let m = 1.0 / (1.0 - 2.0 * s);
    let unit_lo = vec![0.0; dim];
    let unit_hi = vec![1.0; dim];
    let mut total = 0.0;
    for apex in 0..dim {
        let g = |q: &[f64]| {
            let u = q[0].powf(m);
            let mut xi = [1.0; 3];
            let mut next = 1;
            for (i, x) in xi.iter_mut().enumerate().take(dim) {
                if i != apex {
                    *x = q[next];
                    next += 1;
                }
            }
            let mut w = u.powi(edge_count - 1);
            let mut r2 = 0.0;
            for i in 0..dim {
                w *= if at_edge[i] { xi[i] } else { 1.0 - u * xi[i] };
                r2 += xi[i] * xi[i];
            }
            w * r2.powf(-0.5 * exponent) * m
        };
        total += adaptive_cubature(g, &unit_lo, &unit_hi, 6, NEAR_FIELD_TOL, 400_000).value;
    }
    total
}

/// Table of cell-pair weights for every offset that fits in a window.
#[derive(Debug, Clone)]
pub struct PairWeights {
    kernel: Kernel,
    h: f64,
    extents: [usize; 3],
    scale: f64,
    unit: Vec<f64>,
}

impl PairWeights {
    pub fn new(kernel: &Kernel, grid: &GridDescriptor) -> Result<Self> {
        if grid.dim() != kernel.dim {
            return Err(Error::Domain("kernel and grid dimensions disagree".into()));
        }
        let mut extents = [1usize; 3];
        for d in 0..grid.dim() {
            extents[d] = grid.counts()[d];
        }
        let total = extents[0] * extents[1] * extents[2];
        let unit = crate::par::map_range(total, |i| {
            let a = i / (extents[1] * extents[2]);
            let b = (i / extents[2]) % extents[1];
            let c = i % extents[2];
            unit_pair_weight(kernel, [a as i64, b as i64, c as i64])
        });
        let scale = grid.h().powf(grid.dim() as f64 - 2.0 * kernel.s);
        Ok(Self { kernel: *kernel, h: grid.h(), extents, scale, unit })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    /// Multiplier `h^{n-2s}` from unit cells to physical cells.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Weight for absolute per-axis offsets (in cells).
    #[inline]
    pub fn by_abs_offset(&self, d: [usize; 3]) -> f64 {
        self.unit[(d[0] * self.extents[1] + d[1]) * self.extents[2] + d[2]] * self.scale
    }

    #[inline]
    pub fn between_coords(&self, a: &[i64; 3], b: &[i64; 3]) -> f64 {
        self.by_abs_offset([
            (a[0] - b[0]).unsigned_abs() as usize,
            (a[1] - b[1]).unsigned_abs() as usize,
            (a[2] - b[2]).unsigned_abs() as usize,
        ])
    }
}

/// `∬_{cell_a × cell_b} |x - y|^{-(n+2s)} dx dy`; zero for `a = b`.
pub fn cell_pair_weight(k: &Kernel, grid: &GridDescriptor, a: usize, b: usize) -> Result<f64> {
    if a >= grid.len() || b >= grid.len() {
        return Err(Error::Domain("cell index outside the window".into()));
    }
    let ca = grid.coords(a);
    let cb = grid.coords(b);
    let off = [
        (ca[0] - cb[0]).abs(),
        (ca[1] - cb[1]).abs(),
        (ca[2] - cb[2]).abs(),
    ];
    Ok(unit_pair_weight(k, off) * grid.h().powf(grid.dim() as f64 - 2.0 * k.s))
}

/// `∫_{cell} |y|^{-(n+2s)} dy` for the unit cell centered at `offset`; the
/// cell must stay away from the origin.
pub fn unit_point_cell_weight(k: &Kernel, offset: [f64; 3]) -> Result<f64> {
    let dim = k.dim;
    let d2: f64 = offset[..dim].iter().map(|v| v * v).sum();
    let d = d2.sqrt();
    if d >= FAR_FIELD_CELLS {
        return Ok(d.powf(-k.exponent));
    }
    // Nearest point of the cell to the origin.
    let gap2: f64 = offset[..dim].iter().map(|v| (v.abs() - 0.5).max(0.0).powi(2)).sum();
    if gap2 == 0.0 {
        return Err(Error::Domain("point lies on the closed cell; the integral diverges".into()));
    }
    let lo: Vec<f64> = offset[..dim].iter().map(|v| v - 0.5).collect();
    let hi: Vec<f64> = offset[..dim].iter().map(|v| v + 0.5).collect();
    let e = k.exponent;
    let r = adaptive_cubature(
        |y: &[f64]| y.iter().map(|v| v * v).sum::<f64>().powf(-0.5 * e),
        &lo,
        &hi,
        6,
        1e-10,
        100_000,
    );
    Ok(r.value)
}

/// Cache of point-to-cell weights keyed by twice the offset in cells.
#[derive(Debug)]
pub struct PointWeights {
    kernel: Kernel,
    scale: f64,
    near: RwLock<HashMap<[i64; 3], f64>>,
}

impl PointWeights {
    pub fn new(kernel: &Kernel, h: f64) -> Self {
        Self { kernel: *kernel, scale: h.powf(-2.0 * kernel.s), near: RwLock::new(HashMap::new()) }
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Physical weight `∫_{cell} K(p - y) dy` for a cell whose center is at
    /// `doubled / 2` cells from the point.
    pub fn weight(&self, doubled: [i64; 3]) -> Result<f64> {
        let off = [doubled[0] as f64 / 2.0, doubled[1] as f64 / 2.0, doubled[2] as f64 / 2.0];
        let d2: f64 = off[..self.kernel.dim].iter().map(|v| v * v).sum();
        if d2 >= FAR_FIELD_CELLS * FAR_FIELD_CELLS {
            return Ok(d2.powf(-0.5 * self.kernel.exponent) * self.scale);
        }
        // Weights only depend on |offset| per axis.
        let key = [doubled[0].abs(), doubled[1].abs(), doubled[2].abs()];
        if let Some(v) = self.near.read().expect("weight cache poisoned").get(&key) {
            return Ok(v * self.scale);
        }
        let v = unit_point_cell_weight(&self.kernel, [key[0] as f64 / 2.0, key[1] as f64 / 2.0, key[2] as f64 / 2.0])?;
        self.near.write().expect("weight cache poisoned").insert(key, v);
        Ok(v * self.scale)
    }
}

/// `∫_d^∞ (r² + τ²)^{-(n+2s)/2} dτ` for `r ≥ 0`, with `r > 0` or `d > 0`.
pub fn upper_column(k: &Kernel, r: f64, d: f64) -> f64 {
    if d < 0.0 {
        return 2.0 * upper_column(k, r, 0.0) - upper_column(k, r, -d);
    }
    // φ ∈ [0, π/2]; the integral is r^{1-2β} ∫_0^φ sin^q, q = n + 2s - 2.
    let q = k.exponent - 2.0;
    let a = 1.0 / (q + 1.0);
    let (phi, ratio) = if r == 0.0 { (0.0, 1.0 / d) } else { let p = r.atan2(d); (p, p / r) };
    let rule = column_rule();
    let mut j = 0.0;
    for (t, w) in rule.0.iter().zip(&rule.1) {
        // t in (0, 1), w = t^3; the t^2 factor is the Jacobian.
        let tt = 0.5 * (t + 1.0);
        let x = phi * tt.powf(3.0 * a);
        let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
        j += 0.5 * w * sinc.powf(q) * 3.0 * tt * tt;
    }
    ratio.powf(q + 1.0) / (q + 1.0) * j
}

fn column_rule() -> &'static (Vec<f64>, Vec<f64>) {
    use std::sync::OnceLock;
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(24))
}

/// Far-field integrals at a point split by the closure's subgraph:
/// `below` over the part under the exterior heights (and under the window),
/// `above` over the rest.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TailSplit {
    pub below: f64,
    pub above: f64,
}

impl TailSplit {
    /// (member, non-member) parts for a closure orientation.
    pub fn oriented(&self, below_member: bool) -> (f64, f64) {
        if below_member {
            (self.below, self.above)
        } else {
            (self.above, self.below)
        }
    }
    pub fn total(&self) -> f64 {
        self.below + self.above
    }
}

/// ∫_ρ^∞ f(r) dr for integrands decaying like r^{-1-2s}.
fn radial_integral<F: Fn(f64) -> f64>(k: &Kernel, rho: f64, f: F) -> f64 {
    let two_s = 2.0 * k.s;
    integrate_adaptive(
        |w| {
            if w <= 0.0 {
                return 0.0;
            }
            let r = rho * w.powf(-1.0 / two_s);
            let jac = rho / two_s * w.powf(-1.0 / two_s - 1.0);
            // Column integrands decay faster than r^{-1-2s}, so nodes whose
            // radius overflows contribute nothing.
            if !r.is_finite() || !jac.is_finite() {
                return 0.0;
            }
            f(r) * jac
        },
        0.0,
        1.0,
        1e-300,
        TAIL_TOL,
        400,
    )
    .value
}

fn integrate_segment<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    integrate_adaptive(f, a, b, 1e-300, TAIL_TOL, 400).value
}

/// Integral of `f(o)` over horizontal offsets `o = y' - p'` covering the
/// window box, split at `p'`. Working in offsets keeps the quadrature nodes
/// independent of where the frame sits.
fn integrate_box<F: Fn(&[f64]) -> f64>(grid: &GridDescriptor, p: &[f64; 3], f: F) -> f64 {
    let splits = |axis: usize| {
        let (l, u) = (grid.lower(axis) - p[axis], grid.upper(axis) - p[axis]);
        let m = 0f64.clamp(l, u);
        [(l, m), (m, u)]
    };
    if grid.dim() == 2 {
        splits(0).iter().map(|&(a, b)| integrate_segment(|x| f(&[x]), a, b)).sum()
    } else {
        let mut total = 0.0;
        for &(a0, b0) in &splits(0) {
            for &(a1, b1) in &splits(1) {
                total += integrate_segment(|x| integrate_segment(|y| f(&[x, y]), a1, b1), a0, b0);
            }
        }
        total
    }
}

/// Integral of `f(o)` over horizontal offsets reaching outside the window box.
fn integrate_outside_box<F: Fn(&[f64]) -> f64>(k: &Kernel, grid: &GridDescriptor, p: &[f64; 3], f: F) -> f64 {
    if grid.dim() == 2 {
        let left = radial_integral(k, p[0] - grid.lower(0), |r| f(&[-r]));
        let right = radial_integral(k, grid.upper(0) - p[0], |r| f(&[r]));
        left + right
    } else {
        let (l0, u0) = (grid.lower(0) - p[0], grid.upper(0) - p[0]);
        let (l1, u1) = (grid.lower(1) - p[1], grid.upper(1) - p[1]);
        let exit = |phi: f64| -> f64 {
            let (c, s) = (phi.cos(), phi.sin());
            let tx = if c > 0.0 { u0 / c } else if c < 0.0 { l0 / c } else { f64::INFINITY };
            let ty = if s > 0.0 { u1 / s } else if s < 0.0 { l1 / s } else { f64::INFINITY };
            tx.min(ty)
        };
        let corners = [u1.atan2(u0), u1.atan2(l0), l1.atan2(l0) + 2.0 * PI, l1.atan2(u0) + 2.0 * PI];
        let mut cuts = vec![corners[3] - 2.0 * PI];
        cuts.extend_from_slice(&corners);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += integrate_segment(
                |phi| {
                    let (c, s) = (phi.cos(), phi.sin());
                    radial_integral(k, exit(phi), |r| r * f(&[r * c, r * s]))
                },
                w[0],
                w[1],
            );
        }
        total
    }
}

fn clamped_height(set: &CellSet, p: &[f64; 3], off: &[f64]) -> f64 {
    let g = set.grid();
    let mut c = [0i64; 3];
    for (d, v) in off.iter().enumerate() {
        c[d] = g.lattice_coord(d, p[d] + v);
    }
    set.closure().heights[g.clamped_column(&c)]
}

fn norm(off: &[f64]) -> f64 {
    off.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Far-field split at physical point `p` for the set's closure under the
/// kernel's tail policy.
pub fn far_field(k: &Kernel, set: &CellSet, p: &[f64; 3]) -> TailSplit {
    let g = set.grid();
    let v = g.vertical_axis();
    match k.tail_policy {
        TailPolicy::None => TailSplit::default(),
        TailPolicy::Radial => {
            let rho = (0..g.dim()).map(|d| (p[d] - g.lower(d)).min(g.upper(d) - p[d])).fold(f64::INFINITY, f64::min);
            let t = k.radial_tail(rho.max(f64::MIN_POSITIVE));
            TailSplit { below: 0.5 * t, above: 0.5 * t }
        }
        TailPolicy::HalfspaceColumns => {
            let (bot, top) = (g.lower(v), g.upper(v));
            let pn = p[v];
            let cap_above = integrate_box(g, p, |o| upper_column(k, norm(o), top - pn));
            let cap_below = integrate_box(g, p, |o| upper_column(k, norm(o), pn - bot));
            let side_below =
                integrate_outside_box(k, g, p, |o| upper_column(k, norm(o), pn - clamped_height(set, p, o)));
            let side_above =
                integrate_outside_box(k, g, p, |o| upper_column(k, norm(o), clamped_height(set, p, o) - pn));
            TailSplit { below: cap_below + side_below, above: cap_above + side_above }
        }
    }
}

/// `∫_d^∞ (τ - d)(r² + τ²)^{-β} dτ` for `d ≥ 0`: `upper_column` integrated
/// over the depth of the column's start.
fn column_moment(k: &Kernel, r: f64, d: f64) -> f64 {
    let beta = 0.5 * k.exponent();
    let head = (r * r + d * d).powf(1.0 - beta) / (2.0 * (beta - 1.0));
    if d == 0.0 {
        head
    } else {
        head - d * upper_column(k, r, d)
    }
}

/// `∫_{x' ∈ cell'} ∫_{y' ∈ window'} f(y' - x') dy' dx'` as an integral over
/// offsets against the overlap length of the cell and the shifted window.
fn integrate_cell_box<F: Fn(&[f64]) -> f64>(grid: &GridDescriptor, p: &[f64; 3], f: F) -> f64 {
    let half = 0.5 * grid.h();
    let axis = |d: usize| {
        let (l, u) = (grid.lower(d) - p[d], grid.upper(d) - p[d]);
        let mut cuts = vec![l - half, l + half, u - half, u + half];
        if l - half < 0.0 && 0.0 < u + half {
            cuts.push(0.0);
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let overlap = move |o: f64| (half.min(u - o) - (-half).max(l - o)).max(0.0);
        (cuts, overlap)
    };
    let (c0, l0) = axis(0);
    if grid.dim() == 2 {
        c0.windows(2).map(|w| integrate_segment(|x| f(&[x]) * l0(x), w[0], w[1])).sum()
    } else {
        let (c1, l1) = axis(1);
        let mut total = 0.0;
        for w0 in c0.windows(2) {
            for w1 in c1.windows(2) {
                total += integrate_segment(
                    |x| l0(x) * integrate_segment(|y| f(&[x, y]) * l1(y), w1[0], w1[1]),
                    w0[0],
                    w0[1],
                );
            }
        }
        total
    }
}

/// Far field integrated over the whole cell `c` rather than sampled at its
/// center. Within [`FAR_FIELD_CELLS`] of a window face the center value is a
/// poor proxy (the kernel is singular on the face), so the caps there are
/// integrated in closed form vertically and the side parts by a product
/// Gauss rule; further in the midpoint rule is used, as for pair weights.
pub fn cell_far_field(k: &Kernel, set: &CellSet, c: usize) -> TailSplit {
    let g = set.grid();
    let p = g.center(c);
    let vol = g.h().powi(g.dim() as i32);
    if k.tail_policy != TailPolicy::HalfspaceColumns {
        let t = far_field(k, set, &p);
        return TailSplit { below: t.below * vol, above: t.above * vol };
    }
    let v = g.vertical_axis();
    let x = g.coords(c);
    let near = |d: usize| {
        let i = x[d] as f64;
        i.min(g.counts()[d] as f64 - 1.0 - i) + 0.5 < FAR_FIELD_CELLS
    };
    let h = g.h();
    let (bot, top, pn) = (g.lower(v), g.upper(v), p[v]);
    let cap = |gap: f64| {
        if gap + 0.5 * h < FAR_FIELD_CELLS * h {
            integrate_cell_box(g, &p, |o| {
                let r = norm(o);
                column_moment(k, r, gap) - column_moment(k, r, gap + h)
            })
        } else {
            vol * integrate_box(g, &p, |o| upper_column(k, norm(o), gap + 0.5 * h))
        }
    };
    let cap_below = cap(pn - 0.5 * h - bot);
    let cap_above = cap(top - pn - 0.5 * h);
    let sides = |q: &[f64; 3]| {
        let b = integrate_outside_box(k, g, q, |o| upper_column(k, norm(o), q[v] - clamped_height(set, q, o)));
        let a = integrate_outside_box(k, g, q, |o| upper_column(k, norm(o), clamped_height(set, q, o) - q[v]));
        (b, a)
    };
    let (side_below, side_above) = if (0..g.dim()).filter(|&d| d != v).any(near) {
        let (nodes, weights) = side_rule();
        let mut acc = (0.0, 0.0);
        let mut idx = [0usize; 3];
        loop {
            let mut q = p;
            let mut w = vol;
            for d in 0..g.dim() {
                q[d] += 0.5 * h * nodes[idx[d]];
                w *= 0.5 * weights[idx[d]];
            }
            let (b, a) = sides(&q);
            acc.0 += w * b;
            acc.1 += w * a;
            let mut d = 0;
            while d < g.dim() {
                idx[d] += 1;
                if idx[d] < nodes.len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == g.dim() {
                break acc;
            }
        }
    } else {
        let (b, a) = sides(&p);
        (vol * b, vol * a)
    };
    TailSplit { below: cap_below + side_below, above: cap_above + side_above }
}

fn side_rule() -> &'static (Vec<f64>, Vec<f64>) {
    use std::sync::OnceLock;
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(4))
}

/// Window shape for [`tail_weight`].
#[derive(Debug, Clone, Copy)]
pub enum TailWindow<'a> {
    /// Ball of the given radius centered at the point.
    Radial(f64),
    /// The grid's window box.
    Box(&'a GridDescriptor),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailWeight {
    pub value: f64,
    /// Set when the policy is `None` and the far field was not evaluated.
    pub tails_ignored: bool,
}

/// Unsigned `∫_{ℝⁿ ∖ window} |p - y|^{-(n+2s)} dy`.
pub fn tail_weight(k: &Kernel, p: &[f64; 3], window: TailWindow<'_>) -> Result<TailWeight> {
    if k.tail_policy == TailPolicy::None {
        return Ok(TailWeight { value: 0.0, tails_ignored: true });
    }
    let value = match window {
        TailWindow::Radial(r) => {
            if !(r > 0.0) {
                return Err(Error::Domain("radial window needs a positive radius".into()));
            }
            k.radial_tail(r)
        }
        TailWindow::Box(g) => {
            if g.dim() != k.dim {
                return Err(Error::Domain("kernel and grid dimensions disagree".into()));
            }
            let v = g.vertical_axis();
            if (0..g.dim()).any(|d| !(p[d] > g.lower(d) && p[d] < g.upper(d))) {
                return Err(Error::Precondition("point must lie inside the window".into()));
            }
            let (bot, top, pn) = (g.lower(v), g.upper(v), p[v]);
            let caps = integrate_box(g, p, |o| upper_column(k, norm(o), top - pn) + upper_column(k, norm(o), pn - bot));
            let sides = integrate_outside_box(k, g, p, |o| 2.0 * upper_column(k, norm(o), 0.0));
            caps + sides
        }
    };
    Ok(TailWeight { value, tails_ignored: false })
}
