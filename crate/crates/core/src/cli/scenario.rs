use super::expr::Expr;
use super::report::SCHEMA;
use crate::{Error, Result};
use serde_json::{Map, Value};
use std::collections::BTreeMap;

/// Custom input: a maximal graph problem or a 3-form field given by
/// coefficient expressions.
#[derive(Clone, Debug)]
pub enum Operation {
    Maximal {
        p: usize,
        ball: bool,
        n: usize,
        boundary: Vec<Expr>,
    },
    Structure {
        dim: usize,
        lo: Vec<f64>,
        hi: Vec<f64>,
        n: usize,
        /// Zero-based index triples with their coefficients.
        components: Vec<([usize; 3], Expr)>,
    },
}

#[derive(Clone, Debug)]
pub enum Task {
    Builtin(String),
    Operation(Operation),
}

/// Validated scenario. `source` is the JSON echoed into the report,
/// including command-line overrides.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub task: Task,
    pub settings: Settings,
    pub source: Value,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    pub grid: Option<usize>,
    pub fd_step: Option<f64>,
    pub solver_tol: Option<f64>,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
}

impl Settings {
    pub fn grid_or(&self, default: usize) -> usize {
        self.grid.unwrap_or(default)
    }

    pub fn fd_or(&self, default: f64) -> f64 {
        self.fd_step.unwrap_or(default)
    }
}

/// Command-line overrides merged into the scenario before validation.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub fd_step: Option<f64>,
    pub solver_tol: Option<f64>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, v: &mut Value) {
        let Some(obj) = v.as_object_mut() else { return };
        if let Some(g) = self.grid {
            obj.insert("grid".into(), g.into());
        }
        if let Some(h) = self.fd_step {
            obj.insert("fd_step".into(), h.into());
        }
        if let Some(t) = self.solver_tol {
            obj.insert("solver_tol".into(), t.into());
        }
        if let Some(s) = self.seed {
            obj.insert("seed".into(), s.into());
        }
    }
}

const KNOWN: [&str; 10] = ["schema", "name", "description", "builtin", "operation", "tolerances", "grid", "fd_step", "solver_tol", "seed"];

impl Scenario {
    /// Scenario running a named builtin with default settings.
    pub fn builtin(name: &str) -> Value {
        serde_json::json!({ "schema": SCHEMA, "name": name, "builtin": name })
    }

    pub fn from_json_str(text: &str, overrides: &Overrides) -> Result<Scenario> {
        let mut v: Value = serde_json::from_str(text).map_err(|e| Error::Scenario(vec![format!("invalid JSON: {e}")]))?;
        overrides.apply(&mut v);
        Scenario::from_value(v)
    }

    /// Validates every field and reports all problems together.
    pub fn from_value(v: Value) -> Result<Scenario> {
        let mut errs = Vec::new();
        let Some(obj) = v.as_object() else {
            return Err(Error::Scenario(vec!["scenario must be a JSON object".into()]));
        };
        for k in obj.keys() {
            if !KNOWN.contains(&k.as_str()) {
                errs.push(format!("unknown field `{k}`"));
            }
        }
        match obj.get("schema") {
            Some(s) if s.as_u64() == Some(SCHEMA as u64) => {}
            Some(s) => errs.push(format!("unsupported schema {s}; expected {SCHEMA}")),
            None => errs.push("missing field `schema`".into()),
        }
        let name = match obj.get("name") {
            Some(Value::String(s)) if !s.trim().is_empty() => s.clone(),
            Some(_) => {
                errs.push("`name` must be a nonempty string".into());
                String::new()
            }
            None => {
                errs.push("missing field `name`".into());
                String::new()
            }
        };
        if obj.get("description").is_some_and(|d| !d.is_string()) {
            errs.push("`description` must be a string".into());
        }
        let task = match (obj.get("builtin"), obj.get("operation")) {
            (Some(_), Some(_)) => {
                errs.push("give either `builtin` or `operation`, not both".into());
                None
            }
            (None, None) => {
                errs.push("missing `builtin` or `operation`".into());
                None
            }
            (Some(Value::String(b)), None) => {
                if super::builtins::find(b).is_none() {
                    errs.push(format!("unknown builtin `{b}` (see list-builtins)"));
                }
                Some(Task::Builtin(b.clone()))
            }
            (Some(_), None) => {
                errs.push("`builtin` must be a string".into());
                None
            }
            (None, Some(op)) => operation(op, &mut errs).map(Task::Operation),
        };
        let grid = positive_int(obj, "grid", 3, &mut errs);
        let fd_step = positive_num(obj, "fd_step", &mut errs);
        let solver_tol = positive_num(obj, "solver_tol", &mut errs);
        let seed = match obj.get("seed") {
            None => 0,
            Some(s) => s.as_u64().unwrap_or_else(|| {
                errs.push("`seed` must be a nonnegative integer".into());
                0
            }),
        };
        let mut tolerances = BTreeMap::new();
        match obj.get("tolerances") {
            None => {}
            Some(Value::Object(m)) => {
                for (k, t) in m {
                    match t.as_f64() {
                        Some(x) if x.is_finite() => {
                            tolerances.insert(k.clone(), x);
                        }
                        _ => errs.push(format!("tolerance `{k}` must be a finite number")),
                    }
                }
            }
            Some(_) => errs.push("`tolerances` must be an object of numbers".into()),
        }
        if !errs.is_empty() {
            return Err(Error::Scenario(errs));
        }
        let settings = Settings { grid, fd_step, solver_tol, seed, tolerances };
        Ok(Scenario { name, task: task.expect("validated"), settings, source: v })
    }
}

fn positive_num(obj: &Map<String, Value>, key: &str, errs: &mut Vec<String>) -> Option<f64> {
    let v = obj.get(key)?;
    match v.as_f64() {
        Some(x) if x > 0.0 && x.is_finite() => Some(x),
        _ => {
            errs.push(format!("`{key}` must be a positive number"));
            None
        }
    }
}

fn positive_int(obj: &Map<String, Value>, key: &str, min: u64, errs: &mut Vec<String>) -> Option<usize> {
    let v = obj.get(key)?;
    match v.as_u64() {
        Some(x) if x >= min => Some(x as usize),
        _ => {
            errs.push(format!("`{key}` must be an integer >= {min}"));
            None
        }
    }
}

fn expr(v: &Value, what: &str, max_var: usize, errs: &mut Vec<String>) -> Option<Expr> {
    let Some(s) = v.as_str() else {
        errs.push(format!("{what} must be an expression string"));
        return None;
    };
    match Expr::parse(s) {
        Ok(e) if e.arity() > max_var => {
            errs.push(format!("{what}: `{s}` uses x{} but only x1..x{max_var} exist", e.arity()));
            None
        }
        Ok(e) => Some(e),
        Err(e) => {
            errs.push(format!("{what}: {e}"));
            None
        }
    }
}

fn operation(v: &Value, errs: &mut Vec<String>) -> Option<Operation> {
    let Some(obj) = v.as_object() else {
        errs.push("`operation` must be an object".into());
        return None;
    };
    let n_before = errs.len();
    let n = positive_int(obj, "n", 3, errs);
    match obj.get("kind").and_then(Value::as_str) {
        Some("maximal") => {
            for k in obj.keys() {
                if !["kind", "dim", "domain", "n", "boundary"].contains(&k.as_str()) {
                    errs.push(format!("operation: unknown field `{k}`"));
                }
            }
            let p = positive_int(obj, "dim", 1, errs);
            if p.is_some_and(|p| p > 3) {
                errs.push("operation: `dim` must be 1, 2 or 3".into());
            }
            let ball = match obj.get("domain").and_then(Value::as_str) {
                Some("box") | None => false,
                Some("ball") => true,
                Some(d) => {
                    errs.push(format!("operation: unknown domain `{d}` (box or ball)"));
                    false
                }
            };
            if ball && p == Some(1) {
                errs.push("operation: ball domains need `dim` >= 2".into());
            }
            let boundary: Vec<Expr> = match obj.get("boundary") {
                Some(Value::Array(a)) if !a.is_empty() => a
                    .iter()
                    .enumerate()
                    .filter_map(|(i, e)| expr(e, &format!("boundary[{i}]"), p.unwrap_or(3), errs))
                    .collect(),
                _ => {
                    errs.push("operation: `boundary` must be a nonempty array of expressions".into());
                    Vec::new()
                }
            };
            if n.is_none() && obj.get("n").is_none() {
                errs.push("operation: missing `n`".into());
            }
            (errs.len() == n_before).then(|| Operation::Maximal { p: p.unwrap(), ball, n: n.unwrap(), boundary })
        }
        Some("structure") => {
            for k in obj.keys() {
                if !["kind", "dim", "lo", "hi", "n", "components"].contains(&k.as_str()) {
                    errs.push(format!("operation: unknown field `{k}`"));
                }
            }
            let dim = match obj.get("dim").and_then(Value::as_u64) {
                Some(d @ (6 | 7)) => d as usize,
                _ => {
                    errs.push("operation: `dim` must be 6 or 7".into());
                    6
                }
            };
            let bounds = |key: &str, errs: &mut Vec<String>| -> Vec<f64> {
                match obj.get(key).and_then(Value::as_array) {
                    Some(a) if a.len() == dim && a.iter().all(|x| x.as_f64().is_some_and(f64::is_finite)) => {
                        a.iter().map(|x| x.as_f64().unwrap()).collect()
                    }
                    _ => {
                        errs.push(format!("operation: `{key}` must be an array of {dim} numbers"));
                        Vec::new()
                    }
                }
            };
            let (lo, hi) = (bounds("lo", errs), bounds("hi", errs));
            if lo.len() == dim && hi.len() == dim && lo.iter().zip(&hi).any(|(a, b)| a >= b) {
                errs.push("operation: need lo < hi on every axis".into());
            }
            let mut components = Vec::new();
            match obj.get("components").and_then(Value::as_array) {
                Some(list) if !list.is_empty() => {
                    for (i, c) in list.iter().enumerate() {
                        let idx = c.get("indices").and_then(Value::as_array).and_then(|a| {
                            let v: Option<Vec<usize>> = a.iter().map(|x| x.as_u64().map(|x| x as usize)).collect();
                            v.filter(|v| v.len() == 3 && v.iter().all(|&k| (1..=dim).contains(&k)) && v[0] < v[1] && v[1] < v[2])
                        });
                        if idx.is_none() {
                            errs.push(format!("components[{i}]: `indices` must be 3 increasing axes in 1..={dim}"));
                        }
                        let e = match c.get("expr") {
                            Some(e) => expr(e, &format!("components[{i}].expr"), dim, errs),
                            None => {
                                errs.push(format!("components[{i}]: missing `expr`"));
                                None
                            }
                        };
                        if let (Some(idx), Some(e)) = (idx, e) {
                            components.push(([idx[0] - 1, idx[1] - 1, idx[2] - 1], e));
                        }
                    }
                }
                _ => errs.push("operation: `components` must be a nonempty array".into()),
            }
            if n.is_none() && obj.get("n").is_none() {
                errs.push("operation: missing `n`".into());
            }
            (errs.len() == n_before).then(|| Operation::Structure { dim, lo, hi, n: n.unwrap(), components })
        }
        Some(k) => {
            errs.push(format!("operation: unknown kind `{k}` (maximal or structure)"));
            None
        }
        None => {
            errs.push("operation: missing `kind`".into());
            None
        }
    }
}
