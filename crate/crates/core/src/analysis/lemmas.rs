//! Weighted measures of trapped regions near the origin and the power laws
//! they obey.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::quadrature::{gauss_legendre, gl_integrate, integrate_adaptive};

/// Quadrature settings for the lemma integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_segments: 2000 }
    }
}

/// Rows are flagged when the quadrature error estimate exceeds this
/// fraction of the measured value.
pub const ROW_TARGET: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub kind: String,
    pub n: usize,
    pub s: f64,
    pub r: Option<f64>,
    pub lambda: Option<f64>,
    pub l: Option<f64>,
    pub alpha: Option<f64>,
    pub c_o: Option<f64>,
    pub measured: f64,
    pub reference: f64,
    pub ratio: f64,
    pub flagged: bool,
}

impl LemmaRow {
    fn new(kind: &str, k: &Kernel, measured: f64, reference: f64, flagged: bool) -> Self {
        Self {
            kind: kind.into(),
            n: k.dim(),
            s: k.s(),
            r: None,
            lambda: None,
            l: None,
            alpha: None,
            c_o: None,
            measured,
            reference,
            ratio: measured / reference,
            flagged,
        }
    }
}

pub const LEMMA_CSV_HEADER: &str = "kind,n,s,r,lambda,l,alpha,c_o,measured,reference,ratio,flagged";

/// CSV table, one row per line, empty fields where a parameter does not apply.
pub fn lemma_csv(rows: &[LemmaRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    let mut out = format!("{LEMMA_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.12e},{:.12e},{:.12e},{}",
            r.kind,
            r.n,
            r.s,
            opt(r.r),
            opt(r.lambda),
            opt(r.l),
            opt(r.alpha),
            opt(r.c_o),
            r.measured,
            r.reference,
            r.ratio,
            r.flagged
        );
    }
    out
}

/// `∫_0^g (ρ² + t²)^{-(n+2s)/2} dt` via `t = ρ tan θ`.
fn half_column(k: &Kernel, rho: f64, g: f64) -> f64 {
    use std::sync::OnceLock;
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let rule = RULE.get_or_init(|| gauss_legendre(20));
    let e = k.exponent();
    let theta = (g / rho).atan();
    rho.powf(1.0 - e) * gl_integrate(rule, 0.0, theta, |th| th.cos().powf(e - 2.0))
}

/// Measure of the horizontal sphere of radius ρ (two points in the plane).
fn sphere(k: &Kernel, rho: f64) -> f64 {
    if k.dim() == 2 {
        2.0
    } else {
        2.0 * std::f64::consts::PI * rho
    }
}

/// `∫_{|x'| ≤ top, |x_n| ≤ g(|x'|)} |x|^{-(n+2s)} dx`, with the integrand
/// behaving like `ρ^{p-1}` near the origin.
fn axisymmetric<G: Fn(f64) -> f64>(k: &Kernel, top: f64, p: f64, g: G, res: Resolution) -> (f64, bool) {
    let m = 1.0 / p;
    let r = integrate_adaptive(
        |w| {
            if w <= 0.0 {
                return 0.0;
            }
            let rho = top * w.powf(m);
            let jac = top * m * w.powf(m - 1.0);
            2.0 * sphere(k, rho) * half_column(k, rho, g(rho)) * jac
        },
        0.0,
        1.0,
        0.0,
        res.rel_tol,
        res.max_segments,
    );
    (r.value, !r.converged || r.error > ROW_TARGET * r.value.abs())
}

fn trap_measure(r: f64, lambda: f64, k: &Kernel, res: Resolution) -> (f64, bool) {
    // R - sqrt(R² - ρ²) without cancellation.
    let g = |rho: f64| rho * rho / (r + (r * r - rho * rho).max(0.0).sqrt());
    axisymmetric(k, lambda * r, 1.0 - 2.0 * k.s(), g, res)
}

/// Weighted measure of the set pinched between the balls of radius `R`
/// tangent at the origin, restricted to `|x'| ≤ λR`. The reference is the
/// `R^{-2s}` rescaling of the same quantity at `R = 1`.
pub fn trap_integral(r: f64, lambda: f64, k: &Kernel, res: Resolution) -> Result<LemmaRow> {
    if !(r > 0.0) || !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Domain(format!("need R > 0 and λ ∈ (0, 1], got R = {r}, λ = {lambda}")));
    }
    let (measured, f1) = trap_measure(r, lambda, k, res);
    let (unit, f2) = trap_measure(1.0, lambda, k, res);
    let mut row = LemmaRow::new("trap_balls", k, measured, unit * r.powf(-2.0 * k.s()), f1 || f2);
    row.r = Some(r);
    row.lambda = Some(lambda);
    Ok(row)
}

/// Weighted measure of `{|x'| ≤ L, |x_n| ≤ C_o |x'|^{1+α}}`; the reference
/// is the bounding integral `∫ 2 C_o |x'|^{1+α} / |x'|^{n+2s} dx'`.
pub fn graph_trap_integral(l: f64, alpha: f64, c_o: f64, k: &Kernel, res: Resolution) -> Result<LemmaRow> {
    let two_s = 2.0 * k.s();
    if !(alpha > two_s && alpha <= 1.0) {
        return Err(Error::Domain(format!("α must lie in (2s, 1] = ({two_s}, 1], got {alpha}")));
    }
    if !(l > 0.0 && c_o > 0.0) {
        return Err(Error::Domain("L and C_o must be positive".into()));
    }
    let (measured, flagged) = axisymmetric(k, l, alpha - two_s, |rho| c_o * rho.powf(1.0 + alpha), res);
    let mut row = LemmaRow::new("trap_graphs", k, measured, graph_trap_reference(l, alpha, c_o, k), flagged);
    row.l = Some(l);
    row.alpha = Some(alpha);
    row.c_o = Some(c_o);
    Ok(row)
}

/// Closed form of the bounding integral, linear in `C_o`.
pub fn graph_trap_reference(l: f64, alpha: f64, c_o: f64, k: &Kernel) -> f64 {
    let p = alpha - 2.0 * k.s();
    let sphere = if k.dim() == 2 { 2.0 } else { 2.0 * std::f64::consts::PI };
    sphere * (2.0 * c_o) * l.powf(p) / p
}

/// Least-squares fit of `y = C x^a` in log-log coordinates: `(a, C)`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Domain("power-law fit needs at least two paired samples".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("power-law fit needs positive samples".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let a = sxy / sxx;
    Ok((a, (my - a * mx).exp()))
}
