//! Numerical integration and summation primitives: Gauss-Legendre rules,
//! globally adaptive Gauss-Kronrod in one dimension, an adaptive product
//! cubature for boxes, and Neumaier-compensated summation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Neumaier (improved Kahan) compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Compensated sum of a sequence in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = NeumaierSum::new();
    acc.extend(iter);
    acc.value()
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi initial guess followed by Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Fixed Gauss-Legendre rule mapped to [a, b].
pub fn gl_integrate<F: Fn(f64) -> f64>(rule: &(Vec<f64>, Vec<f64>), a: f64, b: f64, f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut acc = 0.0;
    for (x, w) in rule.0.iter().zip(&rule.1) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
    pub converged: bool,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss-Kronrod (7/15) integration of `f` over [a, b].
///
/// Bisects the segment with the largest error estimate until the summed
/// estimate drops below `max(abs_tol, rel_tol * |value|)` or `max_segments`
/// is reached. Endpoint singularities that are integrable are handled by the
/// open rule since no node touches the endpoints.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, error: 0.0, intervals: 0, converged: true };
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    while err > abs_tol.max(rel_tol * total.abs()) && heap.len() < max_segments {
        let seg = heap.pop().expect("heap is never empty");
        let m = 0.5 * (seg.a + seg.b);
        if m <= seg.a || m >= seg.b {
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk15(&f, seg.a, m);
        let (v2, e2) = gk15(&f, m, seg.b);
        total += v1 + v2 - seg.value;
        err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: m, value: v1, error: e1 });
        heap.push(Segment { a: m, b: seg.b, value: v2, error: e2 });
    }
    // Re-sum from the leaves to shed drift from the running updates.
    let mut acc = NeumaierSum::new();
    let mut eacc = 0.0;
    let mut leaves: Vec<Segment> = heap.into_vec();
    leaves.sort_by(|x, y| x.a.total_cmp(&y.a));
    for s in &leaves {
        acc.add(s.value);
        eacc += s.error;
    }
    let value = acc.value();
    QuadResult {
        value,
        error: eacc,
        intervals: leaves.len(),
        converged: eacc <= abs_tol.max(rel_tol * value.abs()),
    }
}

/// Integral over [a, ∞) by the map x = a + t / (1 - t).
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> QuadResult {
    integrate_adaptive(
        |t| {
            let one_minus = 1.0 - t;
            if one_minus <= 0.0 {
                return 0.0;
            }
            let x = a + t / one_minus;
            f(x) / (one_minus * one_minus)
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
        max_segments,
    )
}

#[derive(Debug, Clone)]
struct CubatureBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
    value: f64,
    error: f64,
}

impl PartialEq for CubatureBox {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for CubatureBox {}
impl PartialOrd for CubatureBox {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for CubatureBox {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Tensor-product Gauss-Legendre rule over an axis-aligned box.
pub fn product_rule<F: Fn(&[f64]) -> f64>(f: &F, rule: &(Vec<f64>, Vec<f64>), lo: &[f64], hi: &[f64]) -> f64 {
    let dim = lo.len();
    let p = rule.0.len();
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    let mut acc = 0.0;
    let vol: f64 = lo.iter().zip(hi).map(|(l, h)| 0.5 * (h - l)).product();
    loop {
        let mut w = 1.0;
        for d in 0..dim {
            let half = 0.5 * (hi[d] - lo[d]);
            x[d] = 0.5 * (hi[d] + lo[d]) + half * rule.0[idx[d]];
            w *= rule.1[idx[d]];
        }
        acc += w * f(&x);
        let mut d = 0;
        loop {
            if d == dim {
                return acc * vol;
            }
            idx[d] += 1;
            if idx[d] < p {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

fn children(lo: &[f64], hi: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let dim = lo.len();
    let mut out = Vec::with_capacity(1 << dim);
    for mask in 0..(1usize << dim) {
        let mut clo = lo.to_vec();
        let mut chi = hi.to_vec();
        for d in 0..dim {
            let mid = 0.5 * (lo[d] + hi[d]);
            if mask & (1 << d) == 0 {
                chi[d] = mid;
            } else {
                clo[d] = mid;
            }
        }
        out.push((clo, chi));
    }
    out
}

/// Globally adaptive cubature over a box. Each box is estimated by the sum of
/// the product rule over its `2^dim` children; the error estimate is the
/// change against the rule applied to the parent. The box with the largest
/// error is refined until the summed error falls below `rel_tol * |value|`.
/// Integrable corner singularities are resolved by repeated refinement of the
/// box that contains them.
pub fn adaptive_cubature<F: Fn(&[f64]) -> f64>(
    f: F,
    lo: &[f64],
    hi: &[f64],
    order: usize,
    rel_tol: f64,
    max_boxes: usize,
) -> QuadResult {
    let rule = gauss_legendre(order);
    let estimate = |lo: &[f64], hi: &[f64]| -> (f64, f64) {
        let coarse = product_rule(&f, &rule, lo, hi);
        let fine: f64 = children(lo, hi).iter().map(|(l, h)| product_rule(&f, &rule, l, h)).sum();
        (fine, (fine - coarse).abs())
    };
    let (v, e) = estimate(lo, hi);
    let mut heap = BinaryHeap::new();
    heap.push(CubatureBox { lo: lo.to_vec(), hi: hi.to_vec(), value: v, error: e });
    let mut total = v;
    let mut err = e;
    let mut boxes = 1;
    while err > rel_tol * total.abs() && boxes < max_boxes {
        let b = heap.pop().expect("heap is never empty");
        total -= b.value;
        err -= b.error;
        for (clo, chi) in children(&b.lo, &b.hi) {
            let (cv, ce) = estimate(&clo, &chi);
            total += cv;
            err += ce;
            heap.push(CubatureBox { lo: clo, hi: chi, value: cv, error: ce });
        }
        boxes += (1 << lo.len()) - 1;
    }
    let mut leaves = heap.into_vec();
    leaves.sort_by(|a, b| a.lo.iter().zip(&b.lo).map(|(x, y)| x.total_cmp(y)).find(|o| *o != Ordering::Equal).unwrap_or(Ordering::Equal));
    let value = compensated_sum(leaves.iter().map(|b| b.value));
    let error: f64 = leaves.iter().map(|b| b.error).sum();
    QuadResult { value, error, intervals: leaves.len(), converged: error <= rel_tol * value.abs() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(5);
        // Degree 9 is the highest exact degree for five nodes.
        let v = gl_integrate(&rule, 0.0, 2.0, |x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-10);
        let wsum: f64 = rule.1.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let r = integrate_adaptive(|x| x.powf(-0.5), 0.0, 1.0, 1e-12, 1e-10, 500);
        assert!((r.value - 2.0).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn infinite_interval() {
        let r = integrate_to_infinity(|x| x.powf(-2.5), 1.0, 1e-13, 1e-11, 500);
        assert!((r.value - 1.0 / 1.5).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn cubature_with_corner_singularity() {
        // ∫_{[0,1]^2} |x|^{-1} dx = 2 ln(1 + √2)
        let r = adaptive_cubature(|x| (x[0] * x[0] + x[1] * x[1]).sqrt().recip(), &[0.0, 0.0], &[1.0, 1.0], 6, 1e-8, 20000);
        let exact = 2.0 * (1.0 + 2f64.sqrt()).ln();
        assert!((r.value - exact).abs() < 1e-6 * exact, "{r:?}");
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        let v = compensated_sum([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(v, 2.0);
    }
}
