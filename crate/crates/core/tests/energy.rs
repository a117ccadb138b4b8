use std::sync::Arc;

use nlms_core::energy::{energy_delta, interaction, s_perimeter, PerimeterModel};
use nlms_core::geometry::{CellSet, CylinderDomain, ExteriorGraphData, GridDescriptor};
use nlms_core::kernel::{cell_far_field, cell_pair_weight, Kernel, TailPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn half_space(h: f64, nx: usize, ny: usize, half_width: f64) -> (CellSet, CylinderDomain) {
    let g = Arc::new(GridDescriptor::centered(h, vec![nx, ny]).unwrap());
    let d = CylinderDomain::interval(-half_width, half_width).unwrap();
    let ext = ExteriorGraphData::constant(&g, 0.0).unwrap();
    (CellSet::flat_extension(g, &d, &ext).unwrap(), d)
}

fn randomize(e: &mut CellSet, rng: &mut ChaCha8Rng) {
    for c in e.free_cells() {
        e.set(c, rng.gen_bool(0.5)).unwrap();
    }
}

/// Straight double loop over ordered window pairs, each unordered pair with at
/// least one free cell counted once, plus the far field of every free cell.
fn naive_perimeter(e: &CellSet, k: &Kernel) -> f64 {
    let g = e.grid();
    let mut total = 0.0;
    for a in 0..g.len() {
        for b in (a + 1)..g.len() {
            if (e.is_free(a) || e.is_free(b)) && e.get(a) != e.get(b) {
                total += cell_pair_weight(k, g, a, b).unwrap();
            }
        }
        if e.is_free(a) {
            let split = cell_far_field(k, e, a);
            let below_opposite = e.get(a) != e.closure().below_member;
            total += if below_opposite { split.below } else { split.above };
        }
    }
    total
}

#[test]
fn half_space_matches_naive_double_loop() {
    let k = Kernel::new(2, 0.25, TailPolicy::HalfspaceColumns).unwrap();
    let (e, d) = half_space(1.0, 16, 16, 6.0);
    let fast = s_perimeter(&e, &d, &k).unwrap();
    let slow = naive_perimeter(&e, &k);
    assert!((fast.value / slow - 1.0).abs() < 1e-12, "{} vs {slow}", fast.value);
    assert!(fast.tail_part > 0.0 && fast.tail_part <= fast.value);
}

#[test]
fn random_configuration_matches_naive_double_loop() {
    let k = Kernel::new(2, 0.4, TailPolicy::HalfspaceColumns).unwrap();
    let (mut e, d) = half_space(0.5, 12, 10, 2.0);
    randomize(&mut e, &mut ChaCha8Rng::seed_from_u64(3));
    let fast = s_perimeter(&e, &d, &k).unwrap().value;
    let slow = naive_perimeter(&e, &k);
    assert!((fast / slow - 1.0).abs() < 1e-12, "{fast} vs {slow}");
}

#[test]
fn single_cell_without_tails_is_its_row_sum() {
    let k = Kernel::new(2, 0.25, TailPolicy::None).unwrap();
    let g = Arc::new(GridDescriptor::centered(1.0, vec![10, 10]).unwrap());
    let d = CylinderDomain::interval(-5.0, 5.0).unwrap();
    let ext = ExteriorGraphData::constant(&g, -100.0).unwrap();
    let mut e = CellSet::new(g.clone(), &d, &ext).unwrap();
    let a = g.cell_at(4, 6);
    e.set(a, true).unwrap();
    let expected: f64 = (0..g.len()).filter(|&b| b != a).map(|b| cell_pair_weight(&k, &g, a, b).unwrap()).sum();
    let got = s_perimeter(&e, &d, &k).unwrap();
    assert!((got.value / expected - 1.0).abs() < 1e-13);
    assert_eq!(got.pair_count, g.len() as u64 - 1);
    assert_eq!(got.tail_part, 0.0);
    assert!(energy_delta(&e, a, &k).unwrap() < 0.0);
}

#[test]
fn interaction_is_symmetric_and_far_pair_is_exact() {
    let k = Kernel::new(2, 0.25, TailPolicy::None).unwrap();
    let g = GridDescriptor::centered(1.0, vec![8, 8]).unwrap();
    let f = vec![g.cell_at(0, 0), g.cell_at(3, 5), g.cell_at(7, 2)];
    let h = vec![g.cell_at(1, 1), g.cell_at(6, 6)];
    assert_eq!(interaction(&f, &h, &k, &g).unwrap(), interaction(&h, &f, &k, &g).unwrap());
    let far = interaction(&[g.cell_at(0, 0)], &[g.cell_at(4, 0)], &k, &g).unwrap();
    assert_eq!(far.value, 0.03125);
    assert_eq!(interaction(&[], &h, &k, &g).unwrap().value, 0.0);
    assert!(interaction(&f, &f, &k, &g).is_err());
}

#[test]
fn random_flips_agree_with_full_evaluation() {
    let k = Kernel::new(2, 0.3, TailPolicy::HalfspaceColumns).unwrap();
    let (mut e, _) = half_space(1.0, 32, 32, 12.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    randomize(&mut e, &mut rng);
    let model = PerimeterModel::new(&k, &e).unwrap();
    let free = e.free_cells();
    let mut before = model.energy(&e).unwrap().value;
    for _ in 0..100 {
        let c = free[rng.gen_range(0..free.len())];
        let d = model.delta(&e, c).unwrap();
        e.flip(c).unwrap();
        let after = model.energy(&e).unwrap().value;
        assert!(((after - before) - d).abs() <= 1e-10 * after, "{} vs {d}", after - before);
        let back = model.delta(&e, c).unwrap();
        assert_eq!(back, -d);
        before = after;
    }
}

#[test]
fn flips_outside_omega_are_rejected() {
    let k = Kernel::new(2, 0.3, TailPolicy::HalfspaceColumns).unwrap();
    let (e, _) = half_space(1.0, 12, 8, 3.0);
    assert!(energy_delta(&e, e.grid().cell_at(0, 3), &k).is_err());
}

#[test]
fn complement_has_the_same_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for s in [0.1, 0.25, 0.4] {
        let k = Kernel::new(2, s, TailPolicy::HalfspaceColumns).unwrap();
        let (mut e, d) = half_space(0.5, 16, 12, 2.5);
        for _ in 0..7 {
            randomize(&mut e, &mut rng);
            let a = s_perimeter(&e, &d, &k).unwrap();
            let b = s_perimeter(&e.complement(), &d, &k).unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn frame_shift_preserves_energy() {
    let k = Kernel::new(2, 0.25, TailPolicy::HalfspaceColumns).unwrap();
    let u = |x: &[f64]| if x[0] < 0.0 { 0.5 } else { -0.25 };
    let build = |shift: [f64; 2]| {
        let g = Arc::new(GridDescriptor::new(0.25, vec![24, 16], vec![-3.0 + shift[0], -2.0 + shift[1]]).unwrap());
        let d = CylinderDomain::interval(-1.5 + shift[0], 1.5 + shift[0]).unwrap();
        let ext = ExteriorGraphData::from_fn(&g, |x| u(&[x[0] - shift[0]]) + shift[1]).unwrap();
        let mut e = CellSet::new(g, &d, &ext).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        randomize(&mut e, &mut rng);
        (e, d)
    };
    let (e0, d0) = build([0.0, 0.0]);
    let base = s_perimeter(&e0, &d0, &k).unwrap();
    for shift in [[1.25, 0.0], [0.0, -0.75], [2.5, 1.5]] {
        let (e1, d1) = build(shift);
        assert_eq!(e1.bits(), e0.bits());
        assert_eq!(s_perimeter(&e1, &d1, &k).unwrap(), base, "shift {shift:?}");
    }
}

#[test]
fn half_space_energy_is_stable_under_refinement() {
    let k = Kernel::new(2, 0.25, TailPolicy::HalfspaceColumns).unwrap();
    let (coarse, dc) = half_space(0.25, 32, 16, 1.0);
    let (fine, df) = half_space(0.125, 64, 32, 1.0);
    let a = s_perimeter(&coarse, &dc, &k).unwrap().value;
    let b = s_perimeter(&fine, &df, &k).unwrap().value;
    assert!((a / b - 1.0).abs() < 0.05, "{a} vs {b}");
}
