//! Supconvolution (dilation by closed Euclidean balls), subconvolution
//! (erosion) and lattice translation of cell sets.
//!
//! Dilation is computed from an exact squared Euclidean distance transform,
//! erosion by a direct scan of the ball offsets. The two routes are
//! independent, so the duality between them is a genuine check.

use std::sync::Arc;

use super::cellset::{CellSet, Closure};
use super::grid::Coord;
use crate::error::{Error, Result};

/// Radius in cells for a physical `delta`, rounded up to a multiple of `h`.
pub fn radius_cells(h: f64, delta: f64) -> Result<u32> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("radius must be nonnegative, got {delta}")));
    }
    let k = (delta / h - 1e-9).ceil().max(0.0);
    Ok(k as u32)
}

/// Lattice vectors `v` with `|v| ≤ k` (closed discrete ball), in
/// lexicographic order.
pub fn ball_offsets(dim: usize, k: u32) -> Vec<Coord> {
    let k = k as i64;
    let r2 = k * k;
    let mut out = Vec::new();
    let range = |d: usize| if d < dim { -k..=k } else { 0..=0 };
    for a in range(0) {
        for b in range(1) {
            for c in range(2) {
                if a * a + b * b + c * c <= r2 {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

fn shifted_closure(set: &CellSet, dv: f64) -> Closure {
    let c = set.closure();
    let sign = if c.below_member { 1.0 } else { -1.0 };
    Closure { heights: c.heights.iter().map(|u| u + sign * dv).collect(), below_member: c.below_member }
}

/// Stand-in for "no member": large but with exact integer arithmetic.
const FAR: f64 = 1.0e12;

/// One-dimensional squared distance transform (lower envelope of parabolas).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        let mut s;
        loop {
            let p = v[k];
            s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
            } else {
                break;
            }
        }
        if s <= z[k] {
            v[k] = q;
        } else {
            k += 1;
            v[k] = q;
            z[k] = s;
        }
        z[k + 1] = f64::INFINITY;
    }
    let mut j = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        while z[j + 1] < q as f64 {
            j += 1;
        }
        let p = v[j];
        let d = q as f64 - p as f64;
        *o = d * d + f[p];
    }
}

/// `E♯_δ`: union of closed balls of radius `delta` centered at members.
pub fn supconvolve(set: &CellSet, delta: f64) -> Result<CellSet> {
    let g = set.grid();
    let k = radius_cells(g.h(), delta)?;
    if k == 0 {
        return Ok(set.clone());
    }
    let dim = g.dim();
    let pad = k as i64;
    let dims: Vec<usize> = g.counts().iter().map(|&c| c + 2 * k as usize).collect();
    let total: usize = dims.iter().product();
    let strides: Vec<usize> = (0..dim).map(|d| dims[d + 1..].iter().product()).collect();
    let mut field = vec![FAR; total];
    for (lin, slot) in field.iter_mut().enumerate() {
        let mut c = [0i64; 3];
        let mut rest = lin;
        for d in 0..dim {
            c[d] = (rest / strides[d]) as i64 - pad;
            rest %= strides[d];
        }
        if set.member_at(&c) {
            *slot = 0.0;
        }
    }
    let maxn = *dims.iter().max().unwrap();
    let mut line = vec![0.0; maxn];
    let mut out = vec![0.0; maxn];
    let mut v = vec![0usize; maxn];
    let mut z = vec![0.0; maxn + 1];
    for axis in 0..dim {
        let n = dims[axis];
        let stride = strides[axis];
        for start in 0..total {
            if (start / stride) % n != 0 {
                continue;
            }
            for i in 0..n {
                line[i] = field[start + i * stride];
            }
            edt_1d(&line[..n], &mut out[..n], &mut v, &mut z);
            for i in 0..n {
                field[start + i * stride] = out[i];
            }
        }
    }
    let r2 = (k as f64) * (k as f64);
    let bits = (0..g.len())
        .map(|cell| {
            let c = g.coords(cell);
            let mut lin = 0usize;
            for d in 0..dim {
                lin += (c[d] + pad) as usize * strides[d];
            }
            field[lin] <= r2
        })
        .collect();
    CellSet::from_parts(
        set.grid_arc().clone(),
        set.free_columns().clone(),
        bits,
        shifted_closure(set, k as f64 * g.h()),
    )
}

/// `E♭_δ`: cells whose whole closed ball of radius `delta` lies in `E`.
pub fn subconvolve(set: &CellSet, delta: f64) -> Result<CellSet> {
    let g = set.grid();
    let k = radius_cells(g.h(), delta)?;
    if k == 0 {
        return Ok(set.clone());
    }
    let ball = ball_offsets(g.dim(), k);
    let bits = crate::par::map_range(g.len(), |cell| {
        let c = g.coords(cell);
        ball.iter().all(|v| set.member_at(&[c[0] + v[0], c[1] + v[1], c[2] + v[2]]))
    });
    CellSet::from_parts(
        set.grid_arc().clone(),
        set.free_columns().clone(),
        bits,
        shifted_closure(set, -(k as f64) * g.h()),
    )
}

/// `E + v` for a lattice vector `v`; cells shifted in from outside the
/// window are classified by the closure, whose heights move with `v`.
pub fn translate(set: &CellSet, v: Coord) -> CellSet {
    let g = set.grid();
    let vert = g.vertical_axis();
    let bits = (0..g.len())
        .map(|cell| {
            let c = g.coords(cell);
            set.member_at(&[c[0] - v[0], c[1] - v[1], c[2] - v[2]])
        })
        .collect();
    let old = set.closure();
    let heights = (0..g.columns())
        .map(|col| {
            let c = g.column_coords(col);
            let src = [c[0] - v[0], c[1] - v[1], c[2] - v[2]];
            let mut src_h = src;
            src_h[vert] = 0;
            old.heights[g.clamped_column(&src_h)] + v[vert] as f64 * g.h()
        })
        .collect();
    CellSet::from_parts(
        Arc::clone(set.grid_arc()),
        set.free_columns().clone(),
        bits,
        Closure { heights, below_member: old.below_member },
    )
    .expect("translation preserves the layout")
}
