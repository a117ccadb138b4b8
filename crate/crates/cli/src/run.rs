use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use nlms_core::analysis::{
    density_fit, graph_check, graph_trap_integral, lemma_csv, spike_bound_check, stickiness_check, trap_integral,
    LemmaRow, Resolution,
};
use nlms_core::curvature::{curvature_csv, CurvatureEvaluator};
use nlms_core::geometry::raster::RasterMetadata;
use nlms_core::geometry::{
    raster::write_raster, region_cells, CellSet, CylinderDomain, ExteriorGraphData, GridDescriptor, HBox, Region,
};
use nlms_core::kernel::{Kernel, TailPolicy};
use nlms_core::solver::{minimize_descent, minimize_exact, slide_contact, Problem, Solution};
use nlms_core::{par, Error};
use serde_json::{json, Value};

use crate::config::{CellScope, Command, DescentStart, Method, RunConfig, TailPolicySpec};
use crate::CliError;

/// What a command produced, beyond the files it wrote.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub failures: Vec<String>,
    /// One line for stdout.
    pub summary: String,
}

pub fn execute(command: Command, cfg: &RunConfig, base: &Path, out: &Path) -> Result<Outcome, CliError> {
    let mut report = serde_json::Map::new();
    report.insert("command".into(), json!(command.name()));
    report.insert("config".into(), serde_json::to_value(cfg).map_err(|e| CliError::Core(e.into()))?);
    let outcome = match command {
        Command::Minimize => minimize(cfg, out, &mut report)?,
        Command::CurvatureScan => curvature_scan(cfg, base, out, &mut report)?,
        Command::LemmaCheck => lemma_check(cfg, out, &mut report)?,
        Command::Slide => slide(cfg, base, out, &mut report)?,
        Command::Verify => verify(cfg, base, out, &mut report)?,
    };
    report.insert("status".into(), json!(if outcome.passed { "pass" } else { "fail" }));
    report.insert("failures".into(), json!(outcome.failures));
    let mut text = serde_json::to_string_pretty(&Value::Object(report)).map_err(|e| CliError::Core(e.into()))?;
    text.push('\n');
    write(out, "report.json", &text)?;
    Ok(outcome)
}

fn write(out: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::write(out.join(name), contents).map_err(|e| CliError::Core(e.into()))
}

fn kernel(cfg: &RunConfig, grid_dim: Option<usize>) -> Result<Kernel, CliError> {
    let k = cfg.kernel.as_ref().expect("requirements checked");
    let n = k.n.or(grid_dim).unwrap_or(2);
    let policy = match k.tail_policy {
        TailPolicySpec::None => TailPolicy::None,
        TailPolicySpec::Radial => TailPolicy::Radial,
        TailPolicySpec::HalfspaceColumns => TailPolicy::HalfspaceColumns,
    };
    Ok(Kernel::new(n, k.s, policy)?)
}

fn problem(cfg: &RunConfig) -> Result<Problem, CliError> {
    let gs = cfg.grid.as_ref().expect("requirements checked");
    let grid = match &gs.origin {
        Some(o) => GridDescriptor::new(gs.h, gs.window.clone(), o.clone())?,
        None => GridDescriptor::centered(gs.h, gs.window.clone())?,
    };
    let ds = cfg.domain.as_ref().expect("requirements checked");
    let boxes = match (&ds.intervals, &ds.rects) {
        (Some(iv), _) => iv.iter().map(|&[a, b]| HBox::interval(a, b)).collect(),
        (_, Some(rs)) => rs.iter().map(|&[lo, hi]| HBox::rect(lo, hi)).collect(),
        _ => unreachable!("validated"),
    };
    let domain = CylinderDomain::new(boxes)?;
    let spec = cfg.exterior.as_ref().expect("requirements checked");
    let exterior = ExteriorGraphData::from_fn(&grid, |x| spec.sample(x))?;
    let k = kernel(cfg, Some(grid.dim()))?;
    let mut p = Problem::new(Arc::new(grid), domain, exterior, k)?;
    if let Some(s) = &cfg.solver {
        if let Some(r) = s.graph_radius {
            p = p.with_graph_radius(r);
        }
        if let Some(l) = s.free_limit {
            p = p.with_free_limit(l);
        }
    }
    Ok(p)
}

fn solve(cfg: &RunConfig, p: &Problem) -> Result<Solution, CliError> {
    let solver = cfg.solver.clone().unwrap_or_default();
    let sol = match solver.method {
        Method::Exact => minimize_exact(p)?,
        Method::Descent => {
            let init = match solver.start {
                DescentStart::Flat => CellSet::flat_extension(p.frame().grid_arc().clone(), p.domain(), p.exterior())?,
                DescentStart::Empty => fill(p.frame(), false)?,
                DescentStart::Full => fill(p.frame(), true)?,
            };
            minimize_descent(p, &init)?
        }
    };
    Ok(sol)
}

fn fill(frame: &CellSet, member: bool) -> Result<CellSet, CliError> {
    let mut e = frame.clone();
    for c in e.free_cells() {
        e.set(c, member)?;
    }
    Ok(e)
}

/// The set a command inspects: a raster from `[input]` or a fresh minimizer.
struct Subject {
    set: CellSet,
    domain: CylinderDomain,
    exterior: ExteriorGraphData,
}

fn subject(cfg: &RunConfig, base: &Path, report: &mut serde_json::Map<String, Value>) -> Result<Subject, CliError> {
    if let Some(input) = &cfg.input {
        let (raster, sidecar) = (base.join(&input.raster), base.join(&input.sidecar));
        let (set, domain) = nlms_core::geometry::raster::read_raster(&raster, &sidecar)?;
        let meta: RasterMetadata = serde_json::from_str(&fs::read_to_string(&sidecar).map_err(Error::from)?).map_err(Error::from)?;
        let exterior = ExteriorGraphData::new(set.grid(), meta.u)?;
        report.insert("source".into(), json!("input"));
        return Ok(Subject { set, domain, exterior });
    }
    let p = problem(cfg)?;
    let sol = solve(cfg, &p)?;
    report.insert("source".into(), json!("minimizer"));
    report.insert("energy".into(), json!(sol.energy));
    Ok(Subject { set: sol.set, domain: p.domain().clone(), exterior: p.exterior().clone() })
}

/// Cells whose column lies in `Ω_o`, or every cell.
fn scoped(set: &CellSet, dom: &CylinderDomain, scope: CellScope) -> Result<Vec<usize>, CliError> {
    Ok(match scope {
        CellScope::Omega => region_cells(dom, set.grid(), Region::Omega)?.cells,
        CellScope::Window => (0..set.grid().len()).collect(),
    })
}

fn ok(summary: String) -> Outcome {
    Outcome { passed: true, failures: Vec::new(), summary }
}

fn minimize(cfg: &RunConfig, out: &Path, report: &mut serde_json::Map<String, Value>) -> Result<Outcome, CliError> {
    let p = problem(cfg)?;
    let sol = solve(cfg, &p)?;
    write_raster(&sol.set, p.domain(), &out.join("minimizer.pgm"), &out.join("minimizer.json"))?;
    let g = p.grid();
    let graph = graph_check(&sol.set, p.domain());
    let mut csv = String::from("column,x,in_omega,u,v\n");
    let free = p.domain().free_columns(g);
    for col in 0..g.columns() {
        let x = g.column_center(col);
        let xs = match g.dim() {
            3 => format!("{} {}", x[0], x[1]),
            _ => format!("{}", x[0]),
        };
        let v = graph.height(col).map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(csv, "{col},{xs},{},{},{v}", free[col], p.exterior().heights()[col]);
    }
    write(out, "columns.csv", &csv)?;
    report.insert("energy".into(), json!(sol.energy));
    report.insert("cut_value".into(), json!(sol.cut_value));
    report.insert("offset".into(), json!(sol.offset));
    report.insert("truncation_bound".into(), json!(sol.truncation_bound));
    report.insert("flips".into(), json!(sol.flips));
    report.insert("free_cells".into(), json!(p.free_cells().len()));
    report.insert("member_cells".into(), json!(sol.set.member_count()));
    report.insert("is_graph".into(), json!(graph.is_graph));
    Ok(ok(format!("minimize: Per_s = {:.12e}, truncation bound {:.3e}", sol.energy.value, sol.truncation_bound)))
}

fn curvature_scan(
    cfg: &RunConfig,
    base: &Path,
    out: &Path,
    report: &mut serde_json::Map<String, Value>,
) -> Result<Outcome, CliError> {
    let sub = subject(cfg, base, report)?;
    let k = kernel(cfg, Some(sub.set.grid().dim()))?;
    let scope = cfg.curvature.clone().unwrap_or_default().cells;
    let region = scoped(&sub.set, &sub.domain, scope)?;
    let boundary: Vec<usize> = region.into_iter().filter(|&c| sub.set.is_boundary(c)).collect();
    let ev = CurvatureEvaluator::new(&k, sub.set.grid())?;
    let results = par::map_slice(&boundary, |&c| ev.nmc(&sub.set, c));
    let mut samples = Vec::new();
    let mut skipped = 0usize;
    for r in results {
        match r {
            Ok(s) => samples.push(s),
            Err(Error::Precondition(_)) => skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    write(out, "curvature.csv", &curvature_csv(&sub.set, &samples))?;
    let converged = samples.iter().filter(|s| s.converged).count();
    let max_abs = samples.iter().map(|s| s.value.abs()).fold(0.0, f64::max);
    report.insert("samples".into(), json!(samples.len()));
    report.insert("skipped".into(), json!(skipped));
    report.insert("converged".into(), json!(converged));
    report.insert("max_abs_value".into(), json!(max_abs));
    Ok(ok(format!("curvature-scan: {} samples, {converged} converged, {skipped} skipped", samples.len())))
}

fn lemma_check(cfg: &RunConfig, out: &Path, report: &mut serde_json::Map<String, Value>) -> Result<Outcome, CliError> {
    let spec = cfg.lemma.as_ref().expect("requirements checked");
    let k = kernel(cfg, None)?;
    let res = Resolution { rel_tol: spec.rel_tol, max_segments: spec.max_segments };
    let mut rows: Vec<LemmaRow> = Vec::new();
    if let Some(t) = &spec.trap {
        for &r in &t.r {
            for &lambda in &t.lambda {
                rows.push(trap_integral(r, lambda, &k, res)?);
            }
        }
    }
    if let Some(g) = &spec.graph {
        for &l in &g.l {
            rows.push(graph_trap_integral(l, g.alpha, g.c_o, &k, res)?);
        }
    }
    let mut failures = Vec::new();
    for r in &rows {
        let label = match r.kind.as_str() {
            "trap_balls" => format!("trap_balls r={} lambda={}", r.r.unwrap_or(0.0), r.lambda.unwrap_or(0.0)),
            _ => format!("trap_graphs l={}", r.l.unwrap_or(0.0)),
        };
        if r.flagged {
            failures.push(format!("{label}: quadrature did not reach the row target"));
        }
        if r.kind == "trap_balls" && (r.ratio - 1.0).abs() > spec.scaling_tol {
            failures.push(format!("{label}: ratio {:.6} departs from 1 by more than {}", r.ratio, spec.scaling_tol));
        }
        if r.kind == "trap_graphs" && r.measured > r.reference {
            failures.push(format!("{label}: measured {:.6e} exceeds the bound {:.6e}", r.measured, r.reference));
        }
    }
    write(out, "lemmas.csv", &lemma_csv(&rows))?;
    report.insert("rows".into(), json!(rows));
    Ok(Outcome {
        passed: failures.is_empty(),
        summary: format!("lemma-check: {} rows, {} failures", rows.len(), failures.len()),
        failures,
    })
}

fn slide(cfg: &RunConfig, base: &Path, out: &Path, report: &mut serde_json::Map<String, Value>) -> Result<Outcome, CliError> {
    let sub = subject(cfg, base, report)?;
    let scope = cfg.slide.clone().unwrap_or_default().region;
    let region = scoped(&sub.set, &sub.domain, scope)?;
    let contact = slide_contact(&sub.set, &sub.domain, &region)?;
    let mut csv = String::from("column,row,kind\n");
    for c in &contact.contact_cells {
        let kind = serde_json::to_value(c.kind).map_err(Error::from)?;
        let _ = writeln!(csv, "{},{},{}", c.column, c.row, kind.as_str().unwrap_or_default());
    }
    write(out, "contact.csv", &csv)?;
    report.insert("t".into(), json!(contact.t));
    report.insert("t_cells".into(), json!(contact.t_cells));
    report.insert("contacts".into(), json!(contact.contact_cells.len()));
    Ok(ok(format!("slide: t = {} ({} cells), {} contacts", contact.t, contact.t_cells, contact.contact_cells.len())))
}

fn verify(cfg: &RunConfig, base: &Path, out: &Path, report: &mut serde_json::Map<String, Value>) -> Result<Outcome, CliError> {
    let sub = subject(cfg, base, report)?;
    let spec = cfg.verify.clone().unwrap_or_default();
    let mut failures = Vec::new();
    let mut csv = String::from("check,column,detail\n");

    let graph = graph_check(&sub.set, &sub.domain);
    for v in &graph.violations {
        let _ = writeln!(csv, "graph,{},gap [{}, {}]", v.column, v.gap_lo, v.gap_hi);
    }
    if !graph.is_graph {
        failures.push(format!("graph: {} columns have holes below members", graph.violations.len()));
    }

    let spike = spike_bound_check(&sub.set, &sub.domain);
    if !spike.passed {
        let _ = writeln!(csv, "spike,,clearance {} cells below the window top", spike.clearance);
        failures.push(format!("spike: clearance {} cells", spike.clearance));
    }

    let region = region_cells(&sub.domain, sub.set.grid(), Region::Omega)?.cells;
    let boundary: Vec<usize> = region.into_iter().filter(|&c| sub.set.is_boundary(c)).collect();
    let r = spec.density_radius * sub.set.grid().h();
    let density = match density_fit(&sub.set, &boundary, r) {
        Ok(d) => {
            if d.c_hat < spec.min_density {
                let _ = writeln!(csv, "density,,c_hat {} below {}", d.c_hat, spec.min_density);
                failures.push(format!("density: c_hat {} below {}", d.c_hat, spec.min_density));
            }
            json!(d)
        }
        Err(Error::Precondition(m)) => json!({ "skipped": m }),
        Err(e) => return Err(e.into()),
    };

    let sticky = if graph.is_graph {
        json!(stickiness_check(&sub.set, &sub.domain, &sub.exterior)?)
    } else {
        Value::Null
    };

    write(out, "violations.csv", &csv)?;
    report.insert("graph".into(), json!(graph));
    report.insert("spike".into(), json!(spike));
    report.insert("density".into(), density);
    report.insert("stickiness".into(), sticky);
    Ok(Outcome {
        passed: failures.is_empty(),
        summary: format!("verify: {} checks failed", failures.len()),
        failures,
    })
}
