use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::io;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `value < tolerance`
    Below,
    /// `value > tolerance`
    Above,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, relation: Relation::Below, pass: value < tolerance }
    }

    pub fn above(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, relation: Relation::Above, pass: value > tolerance }
    }

    /// `|value - target| < tolerance`, reported as the deviation.
    pub fn near(name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        Check::below(name, (value - target).abs(), tolerance)
    }

    /// Boolean outcome as a 0/1 check.
    pub fn holds(name: &str, ok: bool) -> Self {
        Check::above(name, if ok { 1.0 } else { 0.0 }, 0.5)
    }

    /// Re-evaluates `pass` against a new tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.pass = match self.relation {
            Relation::Below => self.value < tolerance,
            Relation::Above => self.value > tolerance,
        };
        self
    }
}

/// Per-point rows exported as CSV.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub library_version: String,
    pub scenario: Value,
    pub checks: Vec<Check>,
    pub values: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tables: BTreeMap<String, Table>,
    pub pass: bool,
}

impl Report {
    pub fn new(scenario: Value, checks: Vec<Check>, values: BTreeMap<String, f64>, tables: BTreeMap<String, Table>) -> Self {
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        Report { schema: SCHEMA, library_version: crate::VERSION.to_string(), scenario, checks, values, tables, pass }
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    /// Check rows followed by one block per table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,name,value,tolerance,relation,pass\n");
        for c in &self.checks {
            let rel = match c.relation {
                Relation::Below => "below",
                Relation::Above => "above",
            };
            out += &format!("check,{},{},{},{rel},{}\n", c.name, num(c.value), num(c.tolerance), c.pass);
        }
        for (k, v) in &self.values {
            out += &format!("value,{k},{},,,\n", num(*v));
        }
        for (name, t) in &self.tables {
            out += &format!("\ntable,{name}\n{}\n", t.columns.join(","));
            for r in &t.rows {
                out += &r.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",");
                out.push('\n');
            }
        }
        out
    }
}

/// 17 significant digits in scientific notation; `NaN`/`inf` spelled out.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

struct SigDigits;

impl serde_json::ser::Formatter for SigDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(num(v).as_bytes())
    }
}

/// Pretty JSON with every float written by [`num`]. Non-finite floats
/// become `null`.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let fmt = PrettyDigits { inner: serde_json::ser::PrettyFormatter::with_indent(b"  "), digits: SigDigits };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser).expect("report serializes");
    buf.push(b'\n');
    String::from_utf8(buf).expect("utf-8 JSON")
}

/// Pretty layout with [`SigDigits`] number formatting.
struct PrettyDigits<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
    digits: SigDigits,
}

macro_rules! forward {
    ($($name:ident $(, $arg:ident: $ty:ty)*;)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.inner.$name(w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for PrettyDigits<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        self.digits.write_f64(w, v)
    }

    forward! {
        begin_array;
        end_array;
        begin_array_value, first: bool;
        end_array_value;
        begin_object;
        end_object;
        begin_object_key, first: bool;
        end_object_key;
        begin_object_value;
        end_object_value;
    }
}
