//! Tabular ingestion: discretize CSV columns into `(x, y, z)` indices.
//!
//! Each observable and sensitive column maps to a digit; digits combine by
//! mixed-radix encoding with the first listed column most significant.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{Dataset, DiscreteSpace, Record};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    /// Exact string match against `levels`; digit is the level's position.
    Categorical { levels: Vec<String> },
    /// Numeric cell; digit is the number of edges `<=` the value.
    Threshold { edges: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub column: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSpec {
    pub column: String,
    /// Cell value mapped to `y = 1`; everything else is `y = 0`.
    pub positive: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationSchema {
    pub feature_specs: Vec<FeatureSpec>,
    pub sensitive_columns: Vec<FeatureSpec>,
    pub outcome_column: OutcomeSpec,
    /// Declared `|X|`; must equal the product of feature cardinalities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_x: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_z: Option<usize>,
    #[serde(default = "default_actions")]
    pub n_a: usize,
}

fn default_actions() -> usize {
    2
}

enum Cell {
    Value(usize),
    Missing,
    Unparseable,
}

impl FeatureSpec {
    pub fn cardinality(&self) -> usize {
        match &self.kind {
            FeatureKind::Categorical { levels } => levels.len(),
            FeatureKind::Threshold { edges } => edges.len() + 1,
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            FeatureKind::Categorical { levels } if levels.is_empty() => {
                Err(Error::Schema(format!("column '{}' has no levels", self.column)))
            }
            FeatureKind::Threshold { edges } if edges.windows(2).any(|w| !(w[0] < w[1])) => {
                Err(Error::Schema(format!("bin edges of '{}' must be strictly increasing", self.column)))
            }
            _ => Ok(()),
        }
    }

    fn digit(&self, raw: &str) -> Cell {
        let cell = raw.trim();
        if cell.is_empty() {
            return Cell::Missing;
        }
        match &self.kind {
            FeatureKind::Categorical { levels } => match levels.iter().position(|l| l == cell) {
                Some(i) => Cell::Value(i),
                None => Cell::Unparseable,
            },
            FeatureKind::Threshold { edges } => match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Cell::Value(edges.iter().filter(|&&e| v >= e).count()),
                _ => Cell::Unparseable,
            },
        }
    }
}

/// `sum_i digits[i] * prod_{j > i} radices[j]`.
pub fn encode_mixed_radix(digits: &[usize], radices: &[usize]) -> Result<usize> {
    if digits.len() != radices.len() {
        return Err(Error::input("one digit per radix is required"));
    }
    let mut index = 0usize;
    for (&d, &r) in digits.iter().zip(radices) {
        if d >= r {
            return Err(Error::input(format!("digit {d} out of range for radix {r}")));
        }
        index = index * r + d;
    }
    Ok(index)
}

pub fn decode_mixed_radix(mut index: usize, radices: &[usize]) -> Result<Vec<usize>> {
    let total: usize = radices.iter().product();
    if index >= total {
        return Err(Error::input(format!("index {index} out of range for {total} cells")));
    }
    let mut digits = vec![0; radices.len()];
    for (d, &r) in digits.iter_mut().zip(radices).rev() {
        *d = index % r;
        index /= r;
    }
    Ok(digits)
}

impl DiscretizationSchema {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let schema: Self = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn feature_radices(&self) -> Vec<usize> {
        self.feature_specs.iter().map(FeatureSpec::cardinality).collect()
    }

    pub fn sensitive_radices(&self) -> Vec<usize> {
        self.sensitive_columns.iter().map(FeatureSpec::cardinality).collect()
    }

    pub fn space(&self) -> DiscreteSpace {
        DiscreteSpace {
            n_x: self.feature_radices().iter().product(),
            n_y: 2,
            n_z: self.sensitive_radices().iter().product(),
            n_a: self.n_a,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_specs.is_empty() || self.sensitive_columns.is_empty() {
            return Err(Error::Schema("need at least one observable and one sensitive column".into()));
        }
        for f in self.feature_specs.iter().chain(&self.sensitive_columns) {
            f.validate()?;
        }
        let space = self.space();
        if let Some(n_x) = self.n_x {
            if n_x != space.n_x {
                return Err(Error::Schema(format!("declared n_x = {n_x} but features give {}", space.n_x)));
            }
        }
        if let Some(n_z) = self.n_z {
            if n_z != space.n_z {
                return Err(Error::Schema(format!("declared n_z = {n_z} but sensitive columns give {}", space.n_z)));
            }
        }
        space.validate()
    }
}

/// Result of ingesting one table.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub dataset: Dataset,
    pub input_rows: usize,
    /// Rows with an empty cell in a schema column.
    pub dropped_missing: usize,
    /// Rows with a cell that does not match its column's spec.
    pub dropped_unparseable: usize,
}

impl LoadReport {
    pub fn dropped(&self) -> usize {
        self.dropped_missing + self.dropped_unparseable
    }
}

pub fn load_table(path: impl AsRef<Path>, schema: &DiscretizationSchema) -> Result<LoadReport> {
    let file = std::fs::File::open(path)?;
    load_table_from_reader(file, schema)
}

pub fn load_table_from_reader<R: Read>(reader: R, schema: &DiscretizationSchema) -> Result<LoadReport> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("column '{name}' not found in header")))
    };
    let feature_cols: Vec<usize> = schema.feature_specs.iter().map(|f| find(&f.column)).collect::<Result<_>>()?;
    let sensitive_cols: Vec<usize> = schema.sensitive_columns.iter().map(|f| find(&f.column)).collect::<Result<_>>()?;
    let outcome_col = find(&schema.outcome_column.column)?;

    let space = schema.space();
    let (fx, fz) = (schema.feature_radices(), schema.sensitive_radices());
    let mut records = Vec::new();
    let (mut input_rows, mut missing, mut unparseable) = (0, 0, 0);

    for row in rdr.records() {
        let row = row?;
        input_rows += 1;
        let digits = |specs: &[FeatureSpec], cols: &[usize]| -> Cell {
            let mut out = Vec::with_capacity(specs.len());
            let mut any_missing = false;
            for (spec, &c) in specs.iter().zip(cols) {
                match spec.digit(row.get(c).unwrap_or("")) {
                    Cell::Value(d) => out.push(d),
                    Cell::Missing => any_missing = true,
                    Cell::Unparseable => return Cell::Unparseable,
                }
            }
            if any_missing {
                Cell::Missing
            } else {
                // radices come from the same specs, so encoding cannot fail
                let radices: Vec<usize> = specs.iter().map(FeatureSpec::cardinality).collect();
                Cell::Value(encode_mixed_radix(&out, &radices).expect("digits within radices"))
            }
        };
        let x = digits(&schema.feature_specs, &feature_cols);
        let z = digits(&schema.sensitive_columns, &sensitive_cols);
        let y_cell = row.get(outcome_col).unwrap_or("").trim();
        let y = if y_cell.is_empty() {
            Cell::Missing
        } else {
            Cell::Value(usize::from(y_cell == schema.outcome_column.positive))
        };
        match (x, y, z) {
            (Cell::Value(x), Cell::Value(y), Cell::Value(z)) => records.push(Record { x, y, z }),
            (Cell::Unparseable, _, _) | (_, _, Cell::Unparseable) => unparseable += 1,
            _ => missing += 1,
        }
    }
    debug_assert_eq!(fx.iter().product::<usize>(), space.n_x);
    debug_assert_eq!(fz.iter().product::<usize>(), space.n_z);
    Ok(LoadReport {
        dataset: Dataset::new(space, records)?,
        input_rows,
        dropped_missing: missing,
        dropped_unparseable: unparseable,
    })
}

/// Prefix split preserving file order.
pub fn split(dataset: &Dataset, n_train: usize) -> Result<(Dataset, Dataset)> {
    dataset.split(n_train)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn binary_schema() -> DiscretizationSchema {
        DiscretizationSchema {
            feature_specs: vec![FeatureSpec {
                column: "priors".into(),
                kind: FeatureKind::Threshold { edges: vec![0.5] },
            }],
            sensitive_columns: vec![FeatureSpec {
                column: "sex".into(),
                kind: FeatureKind::Categorical { levels: vec!["Male".into(), "Female".into()] },
            }],
            outcome_column: OutcomeSpec { column: "recid".into(), positive: "1".into() },
            n_x: Some(2),
            n_z: Some(2),
            n_a: 2,
        }
    }

    #[test]
    fn three_row_file() {
        let csv = "id,priors,sex,recid\n1,0,Male,0\n2,4,Female,1\n3,1,Male,1\n";
        let r = load_table_from_reader(csv.as_bytes(), &binary_schema()).unwrap();
        assert_eq!(
            r.dataset.records,
            vec![Record { x: 0, y: 0, z: 0 }, Record { x: 1, y: 1, z: 1 }, Record { x: 1, y: 1, z: 0 }]
        );
        assert_eq!(r.dropped(), 0);
    }

    #[test]
    fn mixed_radix_arithmetic() {
        assert_eq!(encode_mixed_radix(&[1, 2], &[2, 3]).unwrap(), 5);
        assert_eq!(decode_mixed_radix(5, &[2, 3]).unwrap(), vec![1, 2]);
        assert!(encode_mixed_radix(&[2, 0], &[2, 3]).is_err());
        assert!(decode_mixed_radix(6, &[2, 3]).is_err());
    }

    #[test]
    fn bad_rows_are_dropped_and_counted() {
        let csv = "priors,sex,recid\n0,Male,0\n,Male,1\nabc,Female,0\n2,Other,1\n1,Female,\n\"3\",\"Female\",\"1\"\n";
        let r = load_table_from_reader(csv.as_bytes(), &binary_schema()).unwrap();
        assert_eq!(r.input_rows, 6);
        assert_eq!(r.dataset.len(), 2);
        assert_eq!(r.dropped_missing, 2);
        assert_eq!(r.dropped_unparseable, 2);
        assert_eq!(r.dataset.len() + r.dropped(), r.input_rows);
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let csv = "priors,gender,recid\n0,Male,0\n";
        assert!(matches!(load_table_from_reader(csv.as_bytes(), &binary_schema()), Err(Error::Schema(_))));
    }

    #[test]
    fn declared_cardinalities_are_checked() {
        let mut s = binary_schema();
        s.n_x = Some(3);
        assert!(matches!(s.validate(), Err(Error::Schema(_))));
    }

    #[test]
    fn bundled_example_schema_parses() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/schemas/compas_reconstruction.json");
        let s = DiscretizationSchema::from_path(path).unwrap();
        let space = s.space();
        assert_eq!(space.n_z, 12);
        assert_eq!(s.feature_specs.len(), 6);
        assert_eq!(space.n_x, 144);
    }

    proptest! {
        #[test]
        fn encoding_is_bijective(radices in prop::collection::vec(1usize..6, 1..6), seed in any::<u64>()) {
            let total: usize = radices.iter().product();
            let index = (seed as usize) % total;
            let digits = decode_mixed_radix(index, &radices).unwrap();
            prop_assert_eq!(encode_mixed_radix(&digits, &radices).unwrap(), index);
            prop_assert!(digits.iter().zip(&radices).all(|(d, r)| d < r));
        }
    }
}
