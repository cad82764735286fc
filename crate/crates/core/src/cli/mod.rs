//! Scenario runner: expression-defined inputs, named builtins and
//! JSON/CSV reports.

pub mod builtins;
pub mod expr;
pub mod report;
pub mod scenario;

use crate::exterior::{Chart, FdConfig, FormField, KForm, Orientation};
use crate::maximal::{self, Domain, Init, MaximalProblem, Mesh, SolverOptions};
use crate::{g2, sl3c, Error, Result};
use builtins::Outcome;
use report::{Check, Report, Table};
use scenario::{Operation, Scenario, Settings, Task};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Runs a validated scenario. Tolerance overrides are applied by check
/// name; names that match no check are an error.
pub fn run(s: &Scenario) -> Result<Report> {
    let outcome = match &s.task {
        Task::Builtin(name) => run_builtin(name, &s.settings)?,
        Task::Operation(op) => run_operation(op, &s.settings)?,
    };
    finish(s.source.clone(), outcome, &s.settings.tolerances)
}

pub fn run_builtin(name: &str, settings: &Settings) -> Result<Outcome> {
    let b = builtins::find(name).ok_or_else(|| Error::Scenario(vec![format!("unknown builtin `{name}`")]))?;
    (b.run)(settings)
}

/// Report JSON of a builtin run with default scenario echo.
pub fn run_builtin_json(name: &str, settings: &Settings) -> Result<String> {
    let outcome = run_builtin(name, settings)?;
    Ok(finish(Scenario::builtin(name), outcome, &settings.tolerances)?.to_json())
}

fn finish(source: serde_json::Value, mut outcome: Outcome, tolerances: &BTreeMap<String, f64>) -> Result<Report> {
    let mut unknown = Vec::new();
    for (name, tol) in tolerances {
        match outcome.checks.iter_mut().find(|c| &c.name == name) {
            Some(c) => *c = c.clone().with_tolerance(*tol),
            None => unknown.push(format!("tolerance `{name}` matches no check")),
        }
    }
    if !unknown.is_empty() {
        return Err(Error::Scenario(unknown));
    }
    Ok(Report::new(source, outcome.checks, outcome.values, outcome.tables))
}

pub fn run_operation(op: &Operation, s: &Settings) -> Result<Outcome> {
    match op {
        Operation::Maximal { p, ball, n, boundary } => solve_maximal(*p, *ball, *n, boundary, s),
        Operation::Structure { dim, lo, hi, n, components } => structure(*dim, lo, hi, *n, components, s),
    }
}

fn solve_maximal(p: usize, ball: bool, n: usize, boundary: &[expr::Expr], s: &Settings) -> Result<Outcome> {
    let domain = if ball { Domain::Ball { dim: p, radius: 1.0 } } else { Domain::Box { lo: vec![-1.0; p], hi: vec![1.0; p] } };
    let mesh = Arc::new(Mesh::uniform(domain, s.grid.unwrap_or(n))?);
    let q = boundary.len();
    let mut values = Vec::with_capacity(mesh.num_nodes() * q);
    for i in 0..mesh.num_nodes() {
        for e in boundary {
            values.push(if mesh.is_boundary(i) { e.eval(mesh.node(i), 0.0)? } else { 0.0 });
        }
    }
    let opts = SolverOptions { tol: s.solver_tol.unwrap_or(maximal::DEFAULT_TOL), ..Default::default() };
    let sol = maximal::solve_maximal(&MaximalProblem::from_values(mesh.clone(), q, values)?, Init::Harmonic, &opts)?;
    let mut out = Outcome::default();
    out.checks.push(Check::below("el_residual", sol.graph.el_residual()?, opts.tol));
    out.checks.push(Check::above("spacelike_margin", sol.graph.spacelike_margin().0, 0.0));
    out.values.insert("volume".into(), sol.graph.volume()?);
    out.values.insert("iterations".into(), sol.iterations as f64);
    let mut cols: Vec<String> = (1..=p).map(|k| format!("x{k}")).collect();
    cols.extend((1..=q).map(|k| format!("u{k}")));
    let mut table = Table { columns: cols, rows: Vec::new() };
    for i in 0..mesh.num_nodes() {
        table.push([mesh.node(i), sol.graph.value(i)].concat());
    }
    out.tables.insert("solution".into(), table);
    Ok(out)
}

fn structure(dim: usize, lo: &[f64], hi: &[f64], n: usize, components: &[([usize; 3], expr::Expr)], s: &Settings) -> Result<Outcome> {
    let n = s.grid.unwrap_or(n);
    let chart = Chart::new(lo.to_vec(), hi.to_vec(), vec![n; dim])?;
    let fd = FdConfig::richardson(s.fd_or(1e-3));
    let comps = components.to_vec();
    let field = FormField::new(chart.clone(), 3, move |x| {
        let t = if dim == 7 { x[g2::T] } else { 0.0 };
        let mut form = KForm::zero(dim, 3);
        for (idx, e) in &comps {
            form.add_term(e.eval(x, t)?, idx);
        }
        Ok(form)
    })
    .with_fd(fd);
    let points = chart.interior_grid_points(fd.step);
    if points.is_empty() {
        return Err(Error::Scenario(vec!["grid has no points away from the chart edges".into()]));
    }
    let mut out = Outcome::default();
    out.checks.push(Check::below("closedness", field.exterior_derivative()?.max_norm_on(&points)?, 1e-6));
    out.values.insert("samples".into(), points.len() as f64);
    let mut table = Table::new(&["point", "margin"]);
    if dim == 6 {
        // Definiteness margin -λ / |ρ|^4, scale invariant.
        let mut worst = f64::INFINITY;
        for (k, p) in points.iter().enumerate() {
            let r = field.eval(p)?;
            let m = if r.norm() == 0.0 { 0.0 } else { -sl3c::hitchin_lambda(&r)? / r.norm().powi(4) };
            worst = worst.min(m);
            table.push(vec![k as f64, m]);
        }
        out.checks.push(Check::above("definiteness_margin", worst, 0.0));
        if worst > 0.0 && out.checks[0].pass {
            let mc = sl3c::mean_convexity(&field, Orientation::Positive, Some(&points), 1e-9)?;
            out.checks.push(Check::below("off_type_fraction", mc.max_off_type, 1e-5));
            out.values.insert("min_det22".into(), mc.points.iter().map(|p| p.det22).fold(f64::INFINITY, f64::min));
        }
    } else {
        let mut worst = f64::INFINITY;
        for (k, p) in points.iter().enumerate() {
            let m = g2::positivity_margin(&field.eval(p)?, Orientation::Positive)?;
            worst = worst.min(m);
            table.push(vec![k as f64, m]);
        }
        out.checks.push(Check::above("positivity_margin", worst, 0.0));
        if worst > 0.0 {
            let t = g2::torsion_residual(&field, Orientation::Positive, Some(&points))?;
            out.values.insert("d_star_phi".into(), t.d_star_phi);
        }
    }
    out.tables.insert("points".into(), table);
    Ok(out)
}
