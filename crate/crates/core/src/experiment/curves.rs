use std::cmp::Ordering;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fairness::{balance_deviation, NormExponent};
use crate::model::ModelParams;
use crate::policy::{expected_utility, Method, Policy, UtilityTable};
use crate::{Error, Result};

pub const CURVE_HEADER: [&str; 7] = ["t", "method", "lambda", "utility", "fairness", "value", "seed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Static,
    Sequential,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Static => "static",
            Phase::Sequential => "sequential",
        }
    }
}

/// One evaluated decision rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    /// Observations consumed before training.
    pub t: usize,
    pub method: Method,
    pub lambda: f64,
    pub utility: f64,
    /// p = 1 balance deviation against the evaluation model.
    pub fairness: f64,
    /// `(1 - lambda) * utility - lambda * fairness`.
    pub value: f64,
    pub seed: u64,
    pub phase: Phase,
}

impl CurveRecord {
    pub fn new(t: usize, method: Method, lambda: f64, utility: f64, fairness: f64, seed: u64, phase: Phase) -> Self {
        let value = (1.0 - lambda) * utility - lambda * fairness;
        Self { t, method, lambda, utility, fairness, value, seed, phase }
    }

    pub fn value_error(&self) -> f64 {
        (self.value - ((1.0 - self.lambda) * self.utility - self.lambda * self.fairness)).abs()
    }

    fn sort_key(a: &Self, b: &Self) -> Ordering {
        a.lambda.total_cmp(&b.lambda).then(a.method.cmp(&b.method)).then(a.seed.cmp(&b.seed)).then(a.t.cmp(&b.t))
    }
}

/// Scores `policy` against `eval` and packages the result.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_policy(
    policy: &Policy,
    eval: &ModelParams,
    utility: &UtilityTable,
    t: usize,
    method: Method,
    lambda: f64,
    seed: u64,
    phase: Phase,
) -> Result<CurveRecord> {
    let u = expected_utility(policy, eval, utility)?;
    let f = balance_deviation(policy, eval, NormExponent::One)?.deviation;
    Ok(CurveRecord::new(t, method, lambda, u, f, seed, phase))
}

/// Sorted by `(lambda, method, seed, t)`; the order of equal keys follows the input.
pub fn sort_records(records: &mut [CurveRecord]) {
    records.sort_by(CurveRecord::sort_key);
}

/// Writes the CSV. `with_phase` appends a `phase` column.
pub fn write_curves<W: Write>(records: &[CurveRecord], with_phase: bool, out: W) -> Result<()> {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = CURVE_HEADER.to_vec();
    if with_phase {
        header.push("phase");
    }
    w.write_record(&header)?;
    for r in &sorted {
        let mut row = vec![
            r.t.to_string(),
            r.method.to_string(),
            r.lambda.to_string(),
            r.utility.to_string(),
            r.fairness.to_string(),
            r.value.to_string(),
            r.seed.to_string(),
        ];
        if with_phase {
            row.push(r.phase.as_str().to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_curves(records: &[CurveRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_curves(records, false, std::io::BufWriter::new(file))
}

pub fn emit_sequential_curves(records: &[CurveRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_curves(records, true, std::io::BufWriter::new(file))
}

pub fn read_curves<R: Read>(input: R) -> Result<Vec<CurveRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let with_phase = match cols.as_slice() {
        c if c == CURVE_HEADER => false,
        [head @ .., "phase"] if head == CURVE_HEADER => true,
        _ => return Err(Error::input(format!("unexpected curve header: {}", cols.join(",")))),
    };
    let bad = |field: &str, v: &str| Error::input(format!("cannot parse {field} '{v}'"));
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let get = |i: usize| row.get(i).unwrap_or("");
        let num = |i: usize| get(i).parse::<f64>().map_err(|_| bad(CURVE_HEADER[i], get(i)));
        let phase = match (with_phase, get(7)) {
            (false, _) | (true, "static") => Phase::Static,
            (true, "sequential") => Phase::Sequential,
            (true, other) => return Err(bad("phase", other)),
        };
        out.push(CurveRecord {
            t: get(0).parse().map_err(|_| bad("t", get(0)))?,
            method: get(1).parse()?,
            lambda: num(2)?,
            utility: num(3)?,
            fairness: num(4)?,
            value: num(5)?,
            seed: get(6).parse().map_err(|_| bad("seed", get(6)))?,
            phase,
        });
    }
    Ok(out)
}

pub fn parse_curves(path: impl AsRef<Path>) -> Result<Vec<CurveRecord>> {
    read_curves(std::fs::File::open(path)?)
}
