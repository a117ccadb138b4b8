use std::f64::consts::PI;
use std::sync::Arc;

use nlms_core::geometry::{CellSet, Closure, CylinderDomain, ExteriorGraphData, GridDescriptor};
use nlms_core::kernel::{cell_far_field, cell_pair_weight, far_field, tail_weight, unit_pair_weight, Kernel, PairWeights, TailPolicy, TailWindow};
use nlms_core::quadrature::{gauss_legendre, gl_integrate, integrate_adaptive};

fn k2(s: f64) -> Kernel {
    Kernel::new(2, s, TailPolicy::HalfspaceColumns).unwrap()
}

/// Edge-adjacent unit squares `[0,1]²` and `[1,2]×[0,1]`: with `d` the
/// vertical offset and polar coordinates in the horizontal gaps, the radial
/// integral is closed form, leaving a 2D integral over `(d, θ)`.
fn adjacent_oracle(s: f64) -> f64 {
    let m = 1.0 / (1.0 - 2.0 * s);
    let inner = |d: f64| {
        integrate_adaptive(
            |th| {
                let (c, sn) = (th.cos(), th.sin());
                let cc = c + sn;
                let r = 1.0 / c.max(sn);
                (d.powf(-2.0 * s) - (cc * cc * r * r + d * d).powf(-s)) / (2.0 * s * cc * cc)
            },
            0.0,
            PI / 2.0,
            0.0,
            1e-11,
            500,
        )
        .value
    };
    // ∫_{-1}^{1} (1 − |d|) G(d) dd with d = w^m removing the d^{-2s} singularity.
    2.0 * integrate_adaptive(
        |w| {
            if w <= 0.0 {
                return 0.0;
            }
            let d = w.powf(m);
            (1.0 - d) * inner(d) * m * w.powf(m - 1.0)
        },
        0.0,
        1.0,
        0.0,
        1e-10,
        500,
    )
    .value
}

#[test]
fn edge_adjacent_pair_matches_polar_oracle() {
    for s in [0.1, 0.25, 0.4] {
        let k = k2(s);
        let w = unit_pair_weight(&k, [1, 0, 0]);
        let o = adjacent_oracle(s);
        assert!((w / o - 1.0).abs() < 1e-2, "s={s}: {w} vs {o}");
        // The near-field quadrature is in fact far tighter than required.
        assert!((w / o - 1.0).abs() < 1e-5, "s={s}: {w} vs {o}");
    }
}

#[test]
fn pair_weights_are_symmetric_and_decay() {
    let k = k2(0.25);
    let g = GridDescriptor::centered(1.0, vec![16, 16]).unwrap();
    let a = g.cell_at(5, 9);
    let mut by_dist: Vec<(i64, f64)> = Vec::new();
    for b in 0..g.len() {
        let w = cell_pair_weight(&k, &g, a, b).unwrap();
        assert_eq!(w, cell_pair_weight(&k, &g, b, a).unwrap());
        if b != a {
            let (ca, cb) = (g.coords(a), g.coords(b));
            let d2 = (ca[0] - cb[0]).pow(2) + (ca[1] - cb[1]).pow(2);
            by_dist.push((d2, w));
        }
    }
    by_dist.sort_by(|x, y| x.0.cmp(&y.0));
    for pair in by_dist.windows(2) {
        if pair[1].0 > pair[0].0 {
            assert!(pair[1].1 < pair[0].1, "weight does not decay: {pair:?}");
        } else {
            assert!((pair[1].1 / pair[0].1 - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn pair_weight_scaling_in_h() {
    let k = k2(0.3);
    let coarse = GridDescriptor::centered(1.0, vec![8, 8]).unwrap();
    let fine = GridDescriptor::centered(0.5, vec![8, 8]).unwrap();
    let factor = 2f64.powf(2.0 - 0.6);
    let a = coarse.cell_at(1, 1);
    for (b, exact) in [(coarse.cell_at(6, 2), true), (coarse.cell_at(2, 1), false), (coarse.cell_at(2, 2), false)] {
        let wc = cell_pair_weight(&k, &coarse, a, b).unwrap();
        let wf = cell_pair_weight(&k, &fine, a, b).unwrap();
        let rel = (wc / (wf * factor) - 1.0).abs();
        if exact {
            assert!(rel < 1e-14, "midpoint branch scales exactly: {rel}");
        } else {
            assert!(rel < 1e-5, "near branch within quadrature tolerance: {rel}");
        }
    }
}

#[test]
fn table_agrees_with_direct_weights() {
    let k = k2(0.2);
    let g = GridDescriptor::centered(0.25, vec![10, 6]).unwrap();
    let t = PairWeights::new(&k, &g).unwrap();
    for (a, b) in [(0, 1), (3, 40), (17, 18), (59, 0)] {
        assert_eq!(t.between_coords(&g.coords(a), &g.coords(b)), cell_pair_weight(&k, &g, a, b).unwrap());
    }
}

#[test]
fn radial_tail_scaling_is_exact_and_vanishes() {
    let k = k2(0.25);
    let base = tail_weight(&k, &[0.0; 3], TailWindow::Radial(1.0)).unwrap().value;
    for r in [2.0f64, 4.0, 8.0, 1e6] {
        let t = tail_weight(&k, &[0.0; 3], TailWindow::Radial(r)).unwrap().value;
        assert!((t * r.powf(0.5) / base - 1.0).abs() < 1e-14);
    }
    assert!(tail_weight(&k, &[0.0; 3], TailWindow::Radial(1e12)).unwrap().value < 1e-4);
}

/// Exit distance from `p` along direction `e` out of the box `[lo, hi]`.
fn exit_distance(p: &[f64], e: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    (0..p.len())
        .map(|d| {
            if e[d] > 0.0 {
                (hi[d] - p[d]) / e[d]
            } else if e[d] < 0.0 {
                (lo[d] - p[d]) / e[d]
            } else {
                f64::INFINITY
            }
        })
        .fold(f64::INFINITY, f64::min)
}

fn box_tail_oracle_2d(s: f64, p: [f64; 2], lo: [f64; 2], hi: [f64; 2]) -> f64 {
    integrate_adaptive(
        |phi| exit_distance(&p, &[phi.cos(), phi.sin()], &lo, &hi).powf(-2.0 * s) / (2.0 * s),
        0.0,
        2.0 * PI,
        0.0,
        1e-12,
        2000,
    )
    .value
}

#[test]
fn box_tail_matches_polar_oracle_and_disk_bounds() {
    let k = k2(0.25);
    let g = GridDescriptor::centered(1.0, vec![8, 8]).unwrap();
    let center = [0.0, 0.0, 0.0];
    let t = tail_weight(&k, &center, TailWindow::Box(&g)).unwrap().value;
    let o = box_tail_oracle_2d(0.25, [0.0, 0.0], [-4.0, -4.0], [4.0, 4.0]);
    assert!((t / o - 1.0).abs() < 1e-8, "{t} vs {o}");
    let inscribed = tail_weight(&k, &center, TailWindow::Radial(4.0)).unwrap().value;
    let circumscribed = tail_weight(&k, &center, TailWindow::Radial(4.0 * 2f64.sqrt())).unwrap().value;
    assert!(circumscribed < t && t < inscribed);

    let off = [1.3, -2.7, 0.0];
    let t = tail_weight(&k, &off, TailWindow::Box(&g)).unwrap().value;
    let o = box_tail_oracle_2d(0.25, [1.3, -2.7], [-4.0, -4.0], [4.0, 4.0]);
    assert!((t / o - 1.0).abs() < 1e-8, "{t} vs {o}");
}

#[test]
fn box_tail_decreases_as_window_grows() {
    let k = k2(0.25);
    let mut last = f64::INFINITY;
    for n in [4usize, 8, 16, 32] {
        let g = GridDescriptor::centered(1.0, vec![n, n]).unwrap();
        let t = tail_weight(&k, &[0.0; 3], TailWindow::Box(&g)).unwrap().value;
        assert!(t > 0.0 && t < last);
        last = t;
    }
}

#[test]
fn box_tail_in_three_dimensions() {
    let k = Kernel::new(3, 0.25, TailPolicy::HalfspaceColumns).unwrap();
    let g = GridDescriptor::centered(1.0, vec![4, 6, 4]).unwrap();
    let p = [0.3, -0.4, 0.2];
    let t = tail_weight(&k, &p, TailWindow::Box(&g)).unwrap().value;
    let (lo, hi) = ([-2.0, -3.0, -2.0], [2.0, 3.0, 2.0]);
    let o = integrate_adaptive(
        |th| {
            integrate_adaptive(
                |ph| {
                    let e = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
                    exit_distance(&p, &e, &lo, &hi).powf(-0.5) / 0.5 * th.sin()
                },
                0.0,
                2.0 * PI,
                0.0,
                1e-10,
                400,
            )
            .value
        },
        0.0,
        PI,
        0.0,
        1e-9,
        400,
    )
    .value;
    assert!((t / o - 1.0).abs() < 1e-6, "{t} vs {o}");
}

/// Closed-form `∫_a^b r^{-1-2s} dr`.
fn radial_piece(s: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let bb = if b.is_finite() { b.powf(-2.0 * s) } else { 0.0 };
    (a.powf(-2.0 * s) - bb) / (2.0 * s)
}

/// Ray interval `{r > 0 : p + r·e_comp < bound}` along one coordinate.
fn below_interval(p: f64, e: f64, bound: f64) -> (f64, f64) {
    if e > 0.0 {
        (0.0, (bound - p) / e)
    } else if e < 0.0 {
        ((bound - p) / e, f64::INFINITY)
    } else if p < bound {
        (0.0, f64::INFINITY)
    } else {
        (0.0, 0.0)
    }
}

fn intersect(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0.max(b.0), a.1.min(b.1))
}

/// Far-field part under the closure, computed ray by ray in 2D for a
/// closure with one height on each side of the window.
fn below_oracle(s: f64, p: [f64; 2], lo: [f64; 2], hi: [f64; 2], u_left: f64, u_right: f64) -> f64 {
    integrate_adaptive(
        |phi| {
            let e = [phi.cos(), phi.sin()];
            let mut total = 0.0;
            // Left and right of the window: below the side's height.
            if e[0] < 0.0 {
                let side = ((lo[0] - p[0]) / e[0], f64::INFINITY);
                let iv = intersect(side, below_interval(p[1], e[1], u_left));
                total += radial_piece(s, iv.0, iv.1);
            }
            if e[0] > 0.0 {
                let side = ((hi[0] - p[0]) / e[0], f64::INFINITY);
                let iv = intersect(side, below_interval(p[1], e[1], u_right));
                total += radial_piece(s, iv.0, iv.1);
            }
            // Under the window, inside its horizontal range.
            let middle = if e[0] > 0.0 {
                (0.0, (hi[0] - p[0]) / e[0])
            } else if e[0] < 0.0 {
                (0.0, (lo[0] - p[0]) / e[0])
            } else {
                (0.0, f64::INFINITY)
            };
            let iv = intersect(middle, below_interval(p[1], e[1], lo[1]));
            total + radial_piece(s, iv.0.max(1e-300), iv.1)
        },
        0.0,
        2.0 * PI,
        0.0,
        1e-11,
        4000,
    )
    .value
}

#[test]
fn far_field_split_matches_ray_oracle() {
    let k = k2(0.25);
    let g = Arc::new(GridDescriptor::centered(0.5, vec![16, 12]).unwrap());
    let dom = CylinderDomain::interval(-2.0, 2.0).unwrap();
    let ext = ExteriorGraphData::from_fn(&g, |x| if x[0] < 0.0 { 1.25 } else { -0.75 }).unwrap();
    let e = CellSet::new(g.clone(), &dom, &ext).unwrap();
    for p in [[0.1, 0.3, 0.0], [-1.7, -2.2, 0.0], [3.6, 2.9, 0.0]] {
        let split = far_field(&k, &e, &p);
        let o = below_oracle(0.25, [p[0], p[1]], [-4.0, -3.0], [4.0, 3.0], 1.25, -0.75);
        assert!((split.below / o - 1.0).abs() < 1e-7, "{p:?}: {} vs {o}", split.below);
        let total = tail_weight(&k, &p, TailWindow::Box(&g)).unwrap().value;
        assert!((split.total() / total - 1.0).abs() < 1e-9);
    }
}

#[test]
fn far_field_is_symmetric_for_centered_interface() {
    let k = k2(0.3);
    let g = Arc::new(GridDescriptor::centered(0.25, vec![16, 16]).unwrap());
    let e = CellSet::from_parts(
        g.clone(),
        Arc::new(vec![false; 16]),
        (0..g.len()).map(|c| g.center(c)[1] < 0.0).collect(),
        Closure { heights: vec![0.0; 16], below_member: true },
    )
    .unwrap();
    let split = far_field(&k, &e, &[0.375, 0.0, 0.0]);
    assert!((split.below - split.above).abs() <= 1e-10 * split.below);
    let none = far_field(&k.with_tail_policy(TailPolicy::None), &e, &[0.375, 0.0, 0.0]);
    assert_eq!(none.total(), 0.0);
}

/// Point oracles integrated over the cell `[x0, x0+h] × [y0, y0+h]`, the
/// vertical variable graded as `t^{1/(1-2s)}` towards a window face when the
/// cell touches it.
fn cell_oracle(s: f64, x0: f64, y0: f64, h: f64, face: Option<f64>, split: impl Fn(f64, f64) -> (f64, f64)) -> (f64, f64) {
    let rule = gauss_legendre(12);
    let m = 1.0 / (1.0 - 2.0 * s);
    let vertical = |x: f64, part: usize| match face {
        Some(f) => gl_integrate(&rule, 0.0, 1.0, |t| {
            let y = f + (y0 + 0.5 * h - f).signum() * h * t.powf(m);
            let v = split(x, y);
            [v.0, v.1][part] * h * m * t.powf(m - 1.0)
        }),
        None => gl_integrate(&rule, y0, y0 + h, |y| {
            let v = split(x, y);
            [v.0, v.1][part]
        }),
    };
    let b = gl_integrate(&rule, x0, x0 + h, |x| vertical(x, 0));
    let a = gl_integrate(&rule, x0, x0 + h, |x| vertical(x, 1));
    (b, a)
}

#[test]
fn cell_far_field_integrates_the_point_field_over_the_cell() {
    let s = 0.25;
    let k = k2(s);
    let g = Arc::new(GridDescriptor::centered(0.5, vec![16, 12]).unwrap());
    let dom = CylinderDomain::interval(-2.0, 2.0).unwrap();
    let ext = ExteriorGraphData::from_fn(&g, |x| if x[0] < 0.0 { 1.25 } else { -0.75 }).unwrap();
    let e = CellSet::new(g.clone(), &dom, &ext).unwrap();
    let (lo, hi) = ([-4.0, -3.0], [4.0, 3.0]);
    let point = |x: f64, y: f64| {
        let below = below_oracle(s, [x, y], lo, hi, 1.25, -0.75);
        (below, box_tail_oracle_2d(s, [x, y], lo, hi) - below)
    };
    // Bottom row, top row, next to a side, and deep inside. Parts further
    // than three cells from a face use the midpoint rule, whose relative
    // error is about (h/d)²/12 at distance d: a few 1e-3 here.
    for (col, row, face) in [(8, 0, Some(-3.0)), (5, 11, Some(3.0)), (1, 6, None), (7, 5, None)] {
        let c = g.cell_at(col, row);
        let (x0, y0) = (g.center(c)[0] - 0.25, g.center(c)[1] - 0.25);
        let (b, a) = cell_oracle(s, x0, y0, 0.5, face, point);
        let got = cell_far_field(&k, &e, c);
        assert!((got.below / b - 1.0).abs() < 3e-3, "({col},{row}) below: {} vs {b}", got.below);
        assert!((got.above / a - 1.0).abs() < 3e-3, "({col},{row}) above: {} vs {a}", got.above);
    }
    // The midpoint value is far off next to a face.
    let c = g.cell_at(8, 0);
    let mid = far_field(&k, &e, &g.center(c)).below * 0.25;
    assert!(cell_far_field(&k, &e, c).below > 1.2 * mid);
}
