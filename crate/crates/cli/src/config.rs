//! Run configuration: TOML in, validated [`RunConfig`] out.
//!
//! Parsing never stops at the first problem. Unknown keys, type errors and
//! range violations are all collected and returned together.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Minimize,
    CurvatureScan,
    LemmaCheck,
    Slide,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Minimize => "minimize",
            Command::CurvatureScan => "curvature-scan",
            Command::LemmaCheck => "lemma-check",
            Command::Slide => "slide",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    /// Output directory, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exterior: Option<ExteriorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSpec>,
    /// Existing raster to work on instead of solving the configured problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<CurvatureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<LemmaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slide: Option<SlideSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub h: f64,
    /// Cells per axis, vertical last; two or three entries.
    pub window: Vec<usize>,
    /// Lower corner; the window is centered at the origin when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    /// `Ω_o` as a union of intervals (two dimensions).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<[f64; 2]>>,
    /// `Ω_o` as a union of rectangles `[[x0, y0], [x1, y1]]` (three dimensions).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rects: Option<Vec<[[f64; 2]; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExteriorKind {
    Constant,
    Jump,
    Breakpoints,
}

/// Exterior heights as a function of the first horizontal coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExteriorSpec {
    pub kind: ExteriorKind,
    /// `constant`: the height.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// `jump`: height for `x₁ < at`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<f64>,
    /// `jump`: height for `x₁ ≥ at`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<f64>,
    /// `breakpoints`: `[x₁, u]` pairs, interpolated linearly and extended
    /// by constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
}

impl ExteriorSpec {
    /// Height at horizontal position `x` (first coordinate used).
    pub fn sample(&self, x: &[f64]) -> f64 {
        let x1 = x[0];
        match self.kind {
            ExteriorKind::Constant => self.value.unwrap_or(0.0),
            ExteriorKind::Jump => {
                if x1 < self.at.unwrap_or(0.0) {
                    self.left.unwrap_or(0.0)
                } else {
                    self.right.unwrap_or(0.0)
                }
            }
            ExteriorKind::Breakpoints => {
                let pts = self.points.as_deref().unwrap_or(&[]);
                match pts.iter().position(|p| p[0] > x1) {
                    None => pts.last().map_or(0.0, |p| p[1]),
                    Some(0) => pts[0][1],
                    Some(i) => {
                        let (a, b) = (pts[i - 1], pts[i]);
                        a[1] + (b[1] - a[1]) * (x1 - a[0]) / (b[0] - a[0])
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailPolicySpec {
    None,
    Radial,
    HalfspaceColumns,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub s: f64,
    /// Defaults to the window dimension, or 2 without a grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default = "default_tail")]
    pub tail_policy: TailPolicySpec,
}

fn default_tail() -> TailPolicySpec {
    TailPolicySpec::HalfspaceColumns
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Exact,
    Descent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DescentStart {
    #[default]
    Flat,
    Empty,
    Full,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverSpec {
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub start: DescentStart,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_radius: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    /// P5 raster and its JSON sidecar, relative to the config file.
    pub raster: PathBuf,
    pub sidecar: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellScope {
    /// Boundary cells in `Ω` columns.
    #[default]
    Omega,
    /// Every boundary cell of the window.
    Window,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CurvatureSpec {
    #[serde(default)]
    pub cells: CellScope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapRows {
    pub r: Vec<f64>,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphTrapRows {
    pub l: Vec<f64>,
    pub alpha: f64,
    #[serde(default = "one")]
    pub c_o: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSpec {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_segments")]
    pub max_segments: usize,
    /// Allowed `|ratio − 1|` for the ball-trap scaling rows.
    #[serde(default = "default_scaling_tol")]
    pub scaling_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap: Option<TrapRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphTrapRows>,
}

fn default_rel_tol() -> f64 {
    1e-10
}

fn default_segments() -> usize {
    2000
}

fn default_scaling_tol() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SlideSpec {
    #[serde(default)]
    pub region: CellScope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySpec {
    /// Density ball radius in cells.
    #[serde(default = "default_density_radius")]
    pub density_radius: f64,
    #[serde(default = "default_min_density")]
    pub min_density: f64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self { density_radius: default_density_radius(), min_density: default_min_density() }
    }
}

fn default_density_radius() -> f64 {
    8.0
}

fn default_min_density() -> f64 {
    0.05
}

/// Parses and validates a config document, returning every problem found.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<String>> {
    let value: toml::Value = toml::from_str(text).map_err(|e| vec![e.to_string().trim_end().to_string()])?;
    let mut errors = Vec::new();
    let parsed: Result<RunConfig, _> =
        serde_ignored::deserialize(value, |path| {
            // Optional sections show up as `?` segments.
            let key: Vec<String> = path.to_string().split('.').filter(|p| *p != "?").map(String::from).collect();
            errors.push(format!("unknown key `{}`", key.join(".")))
        });
    let config = match parsed {
        Ok(c) => c,
        Err(e) => {
            errors.push(e.to_string());
            return Err(errors);
        }
    };
    errors.extend(validate(&config));
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(errors)
    }
}

fn finite(v: f64) -> bool {
    v.is_finite()
}

/// Range and consistency checks that do not depend on the command.
pub fn validate(c: &RunConfig) -> Vec<String> {
    let mut e = Vec::new();
    let mut dim = None;
    if let Some(g) = &c.grid {
        if !(g.h > 0.0 && finite(g.h)) {
            e.push(format!("grid.h must be positive and finite, got {}", g.h));
        }
        if !(2..=3).contains(&g.window.len()) {
            e.push(format!("grid.window needs 2 or 3 entries, got {}", g.window.len()));
        } else {
            dim = Some(g.window.len());
        }
        if g.window.iter().any(|&n| n < 2) {
            e.push("grid.window entries must be at least 2".into());
        }
        if let Some(o) = &g.origin {
            if o.len() != g.window.len() {
                e.push(format!("grid.origin needs {} entries, got {}", g.window.len(), o.len()));
            }
            if !o.iter().all(|v| finite(*v)) {
                e.push("grid.origin must be finite".into());
            }
        }
    }
    if let Some(d) = &c.domain {
        match (&d.intervals, &d.rects) {
            (Some(iv), None) => {
                if dim == Some(3) {
                    e.push("domain.intervals describe Ω_o in two dimensions; use domain.rects for a 3D window".into());
                }
                if iv.is_empty() {
                    e.push("domain.intervals must not be empty".into());
                }
                for (i, [a, b]) in iv.iter().enumerate() {
                    if !(a < b && finite(*a) && finite(*b)) {
                        e.push(format!("domain.intervals[{i}] must satisfy lo < hi, got [{a}, {b}]"));
                    }
                }
            }
            (None, Some(rs)) => {
                if dim == Some(2) {
                    e.push("domain.rects describe Ω_o in three dimensions; use domain.intervals for a 2D window".into());
                }
                if rs.is_empty() {
                    e.push("domain.rects must not be empty".into());
                }
                for (i, [lo, hi]) in rs.iter().enumerate() {
                    if !(lo[0] < hi[0] && lo[1] < hi[1]) || !lo.iter().chain(hi).all(|v| finite(*v)) {
                        e.push(format!("domain.rects[{i}] must satisfy lo < hi in both coordinates"));
                    }
                }
            }
            _ => e.push("domain needs exactly one of `intervals` or `rects`".into()),
        }
    }
    if let Some(x) = &c.exterior {
        let fields = [("value", x.value.is_some()), ("left", x.left.is_some()), ("right", x.right.is_some()), ("at", x.at.is_some()), ("points", x.points.is_some())];
        let (required, optional): (&[&str], &[&str]) = match x.kind {
            ExteriorKind::Constant => (&["value"], &[]),
            ExteriorKind::Jump => (&["left", "right"], &["at"]),
            ExteriorKind::Breakpoints => (&["points"], &[]),
        };
        let kind = serde_json::to_value(x.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        for (name, present) in fields {
            if required.contains(&name) && !present {
                e.push(format!("exterior.{name} is required for kind = \"{kind}\""));
            }
            if present && !required.contains(&name) && !optional.contains(&name) {
                e.push(format!("exterior.{name} does not apply to kind = \"{kind}\""));
            }
        }
        let scalars = [x.value, x.left, x.right, x.at];
        if !scalars.iter().flatten().all(|v| finite(*v)) {
            e.push("exterior values must be finite".into());
        }
        if let Some(p) = &x.points {
            if p.is_empty() {
                e.push("exterior.points must not be empty".into());
            }
            if !p.iter().flatten().all(|v| finite(*v)) {
                e.push("exterior.points must be finite".into());
            }
            if p.windows(2).any(|w| !(w[0][0] < w[1][0])) {
                e.push("exterior.points must have strictly increasing x".into());
            }
        }
    }
    if let Some(k) = &c.kernel {
        if !(k.s > 0.0 && k.s < 0.5) {
            e.push(format!("kernel.s: s must lie in (0, 1/2), got {}", k.s));
        }
        if let Some(n) = k.n {
            if !(2..=3).contains(&n) {
                e.push(format!("kernel.n must be 2 or 3, got {n}"));
            } else if dim.is_some_and(|d| d != n) {
                e.push(format!("kernel.n = {n} disagrees with the {}-dimensional grid.window", dim.unwrap_or(0)));
            }
        }
    }
    if let Some(s) = &c.solver {
        if s.graph_radius.is_some_and(|r| r < 1) {
            e.push("solver.graph_radius must be at least 1".into());
        }
        if s.free_limit == Some(0) {
            e.push("solver.free_limit must be positive".into());
        }
    }
    if let Some(l) = &c.lemma {
        if !(l.rel_tol > 0.0 && l.rel_tol < 1.0) {
            e.push(format!("lemma.rel_tol must lie in (0, 1), got {}", l.rel_tol));
        }
        if l.max_segments == 0 {
            e.push("lemma.max_segments must be positive".into());
        }
        if !(l.scaling_tol > 0.0) {
            e.push("lemma.scaling_tol must be positive".into());
        }
        if let Some(t) = &l.trap {
            if t.r.is_empty() || t.lambda.is_empty() {
                e.push("lemma.trap needs at least one r and one lambda".into());
            }
            if !t.r.iter().all(|&r| r > 0.0 && finite(r)) {
                e.push("lemma.trap.r entries must be positive".into());
            }
            if !t.lambda.iter().all(|&v| v > 0.0 && v <= 1.0) {
                e.push("lemma.trap.lambda entries must lie in (0, 1]".into());
            }
        }
        if let Some(g) = &l.graph {
            if g.l.is_empty() || !g.l.iter().all(|&v| v > 0.0 && finite(v)) {
                e.push("lemma.graph.l needs positive entries".into());
            }
            if !(g.c_o > 0.0 && finite(g.c_o)) {
                e.push("lemma.graph.c_o must be positive".into());
            }
            if let Some(k) = &c.kernel {
                if !(g.alpha > 2.0 * k.s && g.alpha <= 1.0) {
                    e.push(format!("lemma.graph.alpha must lie in (2s, 1] = ({}, 1], got {}", 2.0 * k.s, g.alpha));
                }
            }
        }
        if l.trap.is_none() && l.graph.is_none() {
            e.push("lemma needs a `trap` or a `graph` table".into());
        }
    }
    if let Some(v) = &c.verify {
        if !(v.density_radius >= 2.0) {
            e.push(format!("verify.density_radius must be at least 2 cells, got {}", v.density_radius));
        }
        if !(v.min_density > 0.0 && v.min_density < 0.5) {
            e.push(format!("verify.min_density must lie in (0, 1/2), got {}", v.min_density));
        }
    }
    e
}

/// Sections a command cannot run without.
pub fn requirements(c: &RunConfig, command: Command) -> Vec<String> {
    let mut e = Vec::new();
    if let Some(declared) = c.command {
        if declared != command {
            e.push(format!("config declares command = \"{}\" but `{}` was invoked", declared.name(), command.name()));
        }
    }
    let problem = c.grid.is_some() && c.domain.is_some() && c.exterior.is_some() && c.kernel.is_some();
    let missing_problem = || {
        ["grid", "domain", "exterior", "kernel"]
            .iter()
            .zip([c.grid.is_some(), c.domain.is_some(), c.exterior.is_some(), c.kernel.is_some()])
            .filter(|(_, p)| !p)
            .map(|(n, _)| format!("[{n}]"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    match command {
        Command::Minimize => {
            if !problem {
                e.push(format!("minimize needs {}", missing_problem()));
            }
        }
        Command::CurvatureScan => {
            if c.kernel.is_none() {
                e.push("curvature-scan needs [kernel]".into());
            }
            if c.input.is_none() && !problem {
                e.push(format!("curvature-scan needs [input] or a problem; missing {}", missing_problem()));
            }
        }
        Command::Slide | Command::Verify => {
            if c.input.is_none() && !problem {
                e.push(format!("{} needs [input] or a problem; missing {}", command.name(), missing_problem()));
            }
        }
        Command::LemmaCheck => {
            if c.kernel.is_none() {
                e.push("lemma-check needs [kernel]".into());
            }
            if c.lemma.is_none() {
                e.push("lemma-check needs [lemma]".into());
            }
        }
    }
    e
}

impl RunConfig {
    /// Normalized TOML: defaults filled in, keys in a fixed order.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
