use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

impl Relation {
    pub fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            Relation::AtMost => value <= bound,
            Relation::AtLeast => value >= bound,
        }
    }
}

/// One named invariant with its measured value and bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self::new(name, value, Relation::AtMost, bound)
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self::new(name, value, Relation::AtLeast, bound)
    }

    /// A boolean condition recorded as `value ≥ 1`.
    pub fn flag(name: &str, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Relation::AtLeast, 1.0)
    }

    fn new(name: &str, value: f64, relation: Relation, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            relation,
            bound,
            passed: relation.holds(value, bound),
        }
    }
}

/// Machine-readable pass/fail summary ending every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Summary {
    pub fn new(scenario: &str, checks: Vec<Check>, error: Option<String>) -> Self {
        let passed = error.is_none() && checks.iter().all(|c| c.passed);
        Self {
            scenario: scenario.to_string(),
            passed,
            checks,
            error,
        }
    }
}

/// Problems found by [`verify`].
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    /// Names of failing checks, or of checks whose stored flag disagrees with the numbers.
    Fail(Vec<String>),
}

/// Re-evaluates every check from its value and bound and confirms the stored flags.
pub fn verify(summary: &Summary) -> Verdict {
    let mut problems = Vec::new();
    for c in &summary.checks {
        let holds = c.relation.holds(c.value, c.bound);
        if holds != c.passed {
            problems.push(format!("{}: stored flag disagrees with value", c.name));
        } else if !holds {
            problems.push(format!(
                "{}: {} {} {} fails",
                c.name,
                c.value,
                serde_json::to_string(&c.relation).unwrap_or_default().trim_matches('"'),
                c.bound
            ));
        }
    }
    let conjunction = summary.error.is_none() && summary.checks.iter().all(|c| c.relation.holds(c.value, c.bound));
    if conjunction != summary.passed {
        problems.push("overall flag disagrees with the checks".into());
    }
    if let Some(e) = &summary.error {
        problems.push(format!("run error: {e}"));
    }
    if problems.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail(problems)
    }
}

/// Pretty JSON with every float printed to 17 significant digits.
struct Digits17(PrettyFormatter<'static>);

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", fmt17(value))
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// `value` with 17 significant digits; non-finite values become `null` in JSON.
pub fn fmt17(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.16e}")
    } else {
        "null".into()
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}
