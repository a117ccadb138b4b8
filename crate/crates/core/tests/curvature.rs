use std::f64::consts::PI;
use std::sync::Arc;

use nlms_core::curvature::{nmc, nmc_at_point, nmc_many, supconvolution_inequality_check, CurvatureEvaluator};
use nlms_core::geometry::{CellSet, Closure, CylinderDomain, ExteriorGraphData, GridDescriptor};
use nlms_core::kernel::{tail_weight, Kernel, TailPolicy, TailWindow};
use nlms_core::quadrature::integrate_adaptive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Window bits of the unit disk; the closure is irrelevant under
/// `TailPolicy::None`, and the empty far field is added by hand.
fn disk(h: f64, n: usize, radius: f64) -> CellSet {
    let g = Arc::new(GridDescriptor::centered(h, vec![n, n]).unwrap());
    let bits = (0..g.len())
        .map(|c| {
            let x = g.center(c);
            x[0] * x[0] + x[1] * x[1] < radius * radius
        })
        .collect();
    let closure = Closure { heights: vec![-1e9; n], below_member: false };
    CellSet::from_parts(g, Arc::new(vec![true; n]), bits, closure).unwrap()
}

fn half_space(h: f64, n: usize) -> CellSet {
    let g = Arc::new(GridDescriptor::centered(h, vec![n, n]).unwrap());
    let w = n as f64 * h / 4.0;
    let d = CylinderDomain::interval(-w, w).unwrap();
    let ext = ExteriorGraphData::constant(&g, 0.0).unwrap();
    CellSet::flat_extension(g, &d, &ext).unwrap()
}

/// `I` at a point of the unit circle: rays into the disk have length
/// `2 sin φ` (φ measured from the tangent), and the principal value cancels
/// the rest in closed form.
fn disk_oracle(s: f64) -> f64 {
    -integrate_adaptive(|phi| (2.0 * phi.sin()).powf(-2.0 * s), 0.0, PI, 0.0, 1e-12, 2000).value / s
}

#[test]
fn half_space_vanishes_at_every_interior_boundary_cell() {
    let e = half_space(0.125, 48);
    let k = Kernel::new(2, 0.25, TailPolicy::HalfspaceColumns).unwrap();
    let g = e.grid();
    let cells: Vec<usize> = e
        .boundary_cells()
        .into_iter()
        .filter(|&c| {
            let col = g.column_of(c) as i64;
            col >= 8 && col < 40 && e.get(c)
        })
        .collect();
    assert!(!cells.is_empty());
    for s in nmc_many(&e, &cells, &k).unwrap() {
        assert!(s.value.abs() < 1e-2, "{s:?}");
        assert!(s.value.abs() < 1e-9, "{s:?}");
        assert!(s.converged);
    }
}

/// Relative error of the lattice value at the face point `(1, h/2)` of the
/// rasterized unit disk, far field of the empty exterior added by hand.
fn disk_axis_error(cells_per_unit: usize, s: f64) -> (f64, f64, bool) {
    let h = 1.0 / cells_per_unit as f64;
    let n = 5 * cells_per_unit / 2;
    let e = disk(h, n, 1.0);
    let k = Kernel::new(2, s, TailPolicy::None).unwrap();
    let g = e.grid();
    // Member cell just inside (1, 0); its +e1 neighbor is outside.
    let x = g.cell_at(n / 2 + cells_per_unit - 1, n / 2);
    assert!(e.get(x) && !e.get(g.cell_at(n / 2 + cells_per_unit, n / 2)));
    let sample = nmc(&e, x, &k).unwrap();
    assert_eq!(sample.point[0], 1.0);
    let boxed = k.with_tail_policy(TailPolicy::HalfspaceColumns);
    let tail = tail_weight(&boxed, &sample.point, TailWindow::Box(g)).unwrap().value;
    let lattice = sample.extrapolated - tail;
    (lattice, lattice / disk_oracle(s) - 1.0, sample.converged)
}

#[test]
fn disk_converges_to_polar_oracle() {
    // On the axis the rasterized circle is a straight run of about
    // sqrt(2h) cells, longer than every exclusion radius, so the error
    // decays like h^{(1-2s)/2} rather than vanishing under extrapolation.
    let (value, err64, converged) = disk_axis_error(64, 0.25);
    assert!(value < 0.0 && converged);
    assert!(err64.abs() < 0.10, "h = 1/64: relative error {err64}");
    let errs: Vec<f64> = [16, 32, 64, 128].iter().map(|&m| disk_axis_error(m, 0.25).1.abs()).collect();
    for w in errs.windows(2) {
        let ratio = w[1] / w[0];
        assert!(ratio > 0.7 && ratio < 0.95, "errors {errs:?}");
    }
}

#[test]
fn domination_is_exact_at_matched_quadrature() {
    let h = 1.0 / 16.0;
    let e = disk(h, 48, 1.0);
    let k = Kernel::new(2, 0.3, TailPolicy::None).unwrap();
    let g = e.grid().clone();
    let x = g.cell_at(24 + 15, 24);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let mut f = e.clone();
        for c in 0..g.len() {
            let (col, row) = (g.column_of(c) as i64, g.row_of(c) as i64);
            let near = (col - 39).abs() <= 1 && (row - 24).abs() <= 1;
            if !near && rng.gen_bool(0.2) {
                f.set(c, true).unwrap();
            }
        }
        let a = nmc_at_point(&e, x, [1, 0, 0], &k).unwrap();
        let b = nmc_at_point(&f, x, [1, 0, 0], &k).unwrap();
        for (ea, eb) in a.estimates.iter().zip(&b.estimates) {
            assert!(ea <= eb);
        }
        assert!(a.extrapolated <= b.extrapolated);
    }
}

#[test]
fn complement_negates_exactly() {
    let e = disk(1.0 / 16.0, 40, 0.9);
    let k = Kernel::new(2, 0.2, TailPolicy::HalfspaceColumns).unwrap();
    let ev = CurvatureEvaluator::new(&k, e.grid()).unwrap();
    let mut checked = 0;
    for &x in e.boundary_cells().iter() {
        let Ok(a) = ev.nmc(&e, x) else { continue };
        let b = ev.nmc(&e.complement(), x).unwrap();
        assert_eq!(a.estimates.iter().map(|v| -v).collect::<Vec<_>>(), b.estimates);
        checked += 1;
    }
    assert!(checked > 20);
}

#[test]
fn face_on_the_window_edge_is_rejected() {
    let e = disk(1.0 / 16.0, 40, 0.9);
    let k = Kernel::new(2, 0.2, TailPolicy::HalfspaceColumns).unwrap();
    // The closure makes everything left of the window a member, so the
    // corner cell's face point lies on the window boundary.
    assert!(e.is_boundary(0));
    assert!(nmc(&e, 0, &k).is_err());
    assert!(nmc(&e, 0, &k.with_tail_policy(TailPolicy::None)).is_ok());
}

#[test]
fn frame_shift_is_exact() {
    let k = Kernel::new(2, 0.35, TailPolicy::HalfspaceColumns).unwrap();
    let build = |shift: [f64; 2]| {
        let g = Arc::new(GridDescriptor::new(0.125, vec![32, 24], vec![-2.0 + shift[0], -1.5 + shift[1]]).unwrap());
        let d = CylinderDomain::interval(-1.0 + shift[0], 1.0 + shift[0]).unwrap();
        let ext = ExteriorGraphData::from_fn(&g, |x| 0.25 * (x[0] - shift[0]).signum() + shift[1]).unwrap();
        let mut e = CellSet::flat_extension(g, &d, &ext).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for c in e.free_cells() {
            if rng.gen_bool(0.1) {
                e.flip(c).unwrap();
            }
        }
        e
    };
    let e0 = build([0.0, 0.0]);
    let cells: Vec<usize> = e0.boundary_cells().into_iter().step_by(5).collect();
    let base = nmc_many(&e0, &cells, &k).unwrap();
    for shift in [[0.5, 0.0], [-1.25, 0.75]] {
        let e1 = build(shift);
        let moved = nmc_many(&e1, &cells, &k).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            assert_eq!(a.estimates, b.estimates);
        }
    }
}

#[test]
fn corner_is_reported_as_unconverged() {
    let h = 1.0 / 16.0;
    let g = Arc::new(GridDescriptor::centered(h, vec![48, 48]).unwrap());
    let bits = (0..g.len())
        .map(|c| {
            let x = g.center(c);
            x[0] < 0.0 && x[1] < 0.0
        })
        .collect();
    let e = CellSet::from_parts(g.clone(), Arc::new(vec![true; 48]), bits, Closure { heights: vec![-1e9; 48], below_member: false })
        .unwrap();
    let k = Kernel::new(2, 0.25, TailPolicy::None).unwrap();
    let s = nmc_at_point(&e, g.cell_at(23, 23), [1, 1, 0], &k).unwrap();
    assert!(!s.converged, "{s:?}");
    assert_eq!(s.value, s.estimates[2]);
}

#[test]
fn disk_supconvolution_margin_is_positive() {
    let h = 1.0 / 16.0;
    let e = disk(h, 48, 1.0);
    let k = Kernel::new(2, 0.25, TailPolicy::None).unwrap();
    let g = e.grid();
    let x = g.cell_at(24 + 15, 24);
    let r = supconvolution_inequality_check(&e, 2.0 * h, x, [2, 0, 0], &k).unwrap();
    assert!(r.holds && r.margin > 0.0, "{r:?}");
    let x_top = g.cell_at(24, 24 + 15);
    let r = supconvolution_inequality_check(&e, 2.0 * h, x_top, [0, 2, 0], &k).unwrap();
    assert!(r.holds && r.margin > 0.0, "{r:?}");
}
