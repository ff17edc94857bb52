//! Tabular numeric data with a per-cell observation mask.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_NA_TOKENS: [&str; 4] = ["", "NA", "NaN", "null"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Category {
    VitalPhysiology,
    BloodTests,
    Demographics,
    Mortality,
    IcuManagement,
    #[default]
    Other,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::VitalPhysiology => "VitalPhysiology",
            Category::BloodTests => "BloodTests",
            Category::Demographics => "Demographics",
            Category::Mortality => "Mortality",
            Category::IcuManagement => "IcuManagement",
            Category::Other => "Other",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    /// Accepts `VitalPhysiology`, `Vital Physiology`, `vital_physiology`, ...
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "vitalphysiology" => Ok(Category::VitalPhysiology),
            "bloodtests" => Ok(Category::BloodTests),
            "demographics" => Ok(Category::Demographics),
            "mortality" => Ok(Category::Mortality),
            "icumanagement" => Ok(Category::IcuManagement),
            "other" => Ok(Category::Other),
            _ => Err(Error::Schema(format!("unknown category '{s}'"))),
        }
    }
}

impl TryFrom<String> for Category {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Category> for String {
    fn from(c: Category) -> Self {
        c.as_str().to_owned()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VariableKind {
    Observation,
    Completeness,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableMeta {
    pub name: String,
    pub category: Category,
    pub kind: VariableKind,
    /// For completeness variables, the observation variable they describe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

impl VariableMeta {
    pub fn observation(name: impl Into<String>, category: Category) -> Self {
        VariableMeta {
            name: name.into(),
            category,
            kind: VariableKind::Observation,
            parent: None,
        }
    }

    pub fn completeness(name: impl Into<String>, parent: &VariableMeta) -> Self {
        VariableMeta {
            name: name.into(),
            category: parent.category,
            kind: VariableKind::Completeness,
            parent: Some(parent.name.clone()),
        }
    }

    pub fn is_completeness(&self) -> bool {
        self.kind == VariableKind::Completeness
    }
}

/// Variable name → category map, read from a JSON object.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema(pub BTreeMap<String, Category>);

impl Schema {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }

    pub fn category_of(&self, name: &str) -> Category {
        self.0.get(name).copied().unwrap_or_default()
    }
}

/// Column-oriented numeric table. Missing cells hold NaN and are flagged
/// `false` in `mask`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<F> {
    variables: Vec<VariableMeta>,
    values: Array2<F>,
    mask: Array2<bool>,
}

impl<F: Scalar> Dataset<F> {
    /// Build a dataset from an `n_rows × n_columns` value matrix and mask.
    /// Cells with `mask == false` are overwritten with the NaN sentinel.
    pub fn new(variables: Vec<VariableMeta>, mut values: Array2<F>, mask: Array2<bool>) -> Result<Self> {
        if values.dim() != mask.dim() {
            return Err(Error::Contract(format!(
                "values {:?} and mask {:?} differ in shape",
                values.dim(),
                mask.dim()
            )));
        }
        if values.ncols() != variables.len() {
            return Err(Error::Contract(format!(
                "{} variables for {} columns",
                variables.len(),
                values.ncols()
            )));
        }
        if values.nrows() == 0 {
            return Err(Error::Contract("dataset needs at least one row".into()));
        }
        let mut seen = HashSet::new();
        for v in &variables {
            if !seen.insert(v.name.as_str()) {
                return Err(Error::Schema(format!("duplicate variable name '{}'", v.name)));
            }
        }
        ndarray::Zip::from(&mut values).and(&mask).for_each(|v, &observed| {
            if !observed {
                *v = F::nan();
            }
        });
        if let Some(((r, c), _)) = values
            .indexed_iter()
            .find(|((r, c), v)| mask[[*r, *c]] && !v.is_finite())
        {
            return Err(Error::Cell {
                row: r + 1,
                column: variables[c].name.clone(),
                cell: format!("{}", values[[r, c]]),
            });
        }
        Ok(Dataset { variables, values, mask })
    }

    /// Fully observed dataset.
    pub fn complete(variables: Vec<VariableMeta>, values: Array2<F>) -> Result<Self> {
        let mask = Array2::from_elem(values.dim(), true);
        Self::new(variables, values, mask)
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_columns(&self) -> usize {
        self.values.ncols()
    }

    pub fn variables(&self) -> &[VariableMeta] {
        &self.variables
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn values(&self) -> &Array2<F> {
        &self.values
    }

    pub fn mask(&self) -> &Array2<bool> {
        &self.mask
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, F> {
        self.values.column(j)
    }

    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.mask[[row, col]]
    }

    pub fn missing_count(&self, col: usize) -> usize {
        self.mask.column(col).iter().filter(|&&m| !m).count()
    }

    pub fn observed_count(&self, col: usize) -> usize {
        self.n_rows() - self.missing_count(col)
    }

    /// Same table in another precision.
    pub fn cast<G: Scalar>(&self) -> Dataset<G> {
        Dataset {
            variables: self.variables.clone(),
            values: self.values.mapv(|v| G::from(v).unwrap_or_else(G::nan)),
            mask: self.mask.clone(),
        }
    }

    /// Write as CSV with a header row; missing cells are written as `na_token`.
    pub fn write_csv<W: Write>(&self, writer: W, na_token: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io_err = |e: csv::Error| Error::Io {
            path: "<csv writer>".into(),
            source: std::io::Error::other(e.to_string()),
        };
        w.write_record(self.variables.iter().map(|v| v.name.as_str())).map_err(io_err)?;
        for r in 0..self.n_rows() {
            let row: Vec<String> = (0..self.n_columns())
                .map(|c| {
                    if self.mask[[r, c]] {
                        format!("{}", self.values[[r, c]])
                    } else {
                        na_token.to_owned()
                    }
                })
                .collect();
            w.write_record(&row).map_err(io_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: "<csv writer>".into(),
            source,
        })
    }
}

/// Options for [`parse_csv`].
#[derive(Clone, Debug)]
pub struct ParseOptions {
    pub na_tokens: Vec<String>,
    pub schema: Option<Schema>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            na_tokens: DEFAULT_NA_TOKENS.iter().map(|s| s.to_string()).collect(),
            schema: None,
        }
    }
}

pub fn parse_csv<F: Scalar>(path: &Path, options: &ParseOptions) -> Result<Dataset<F>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_reader(file, options)
}

/// Parse comma-separated text with a mandatory header row.
///
/// A cell is missing when its trimmed text is empty or one of the NA tokens
/// (case-sensitive). Row numbers in errors are 1-based data rows, so the
/// first line after the header is row 1.
pub fn parse_reader<F: Scalar, R: Read>(reader: R, options: &ParseOptions) -> Result<Dataset<F>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            message: format!("unreadable header: {e}"),
        })?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].trim().is_empty()) {
        return Err(Error::Parse {
            row: 0,
            message: "missing header row".into(),
        });
    }
    let names: Vec<String> = headers.iter().map(|h| h.trim().to_owned()).collect();
    let mut seen = HashSet::new();
    for n in &names {
        if !seen.insert(n.as_str()) {
            return Err(Error::Schema(format!("duplicate header '{n}'")));
        }
    }
    if let Some(schema) = &options.schema {
        for key in schema.0.keys() {
            if !seen.contains(key.as_str()) {
                log::warn!("schema names '{key}', which is not a column of the input");
            }
        }
    }

    let na: HashSet<&str> = options.na_tokens.iter().map(String::as_str).collect();
    let p = names.len();
    let mut values: Vec<F> = Vec::new();
    let mut mask: Vec<bool> = Vec::new();
    let mut n_rows = 0usize;
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.len() != p {
            return Err(Error::Parse {
                row,
                message: format!("expected {p} fields, found {}", record.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            let t = cell.trim();
            if t.is_empty() || na.contains(t) {
                values.push(F::nan());
                mask.push(false);
                continue;
            }
            let v: f64 = t.parse().map_err(|_| Error::Cell {
                row,
                column: names[c].clone(),
                cell: t.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(Error::Cell {
                    row,
                    column: names[c].clone(),
                    cell: t.to_owned(),
                });
            }
            values.push(F::from_f64(v).ok_or_else(|| Error::Cell {
                row,
                column: names[c].clone(),
                cell: t.to_owned(),
            })?);
            mask.push(true);
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::Parse {
            row: 1,
            message: "no data rows".into(),
        });
    }
    let variables = names
        .into_iter()
        .map(|n| {
            let category = options.schema.as_ref().map(|s| s.category_of(&n)).unwrap_or_default();
            VariableMeta::observation(n, category)
        })
        .collect();
    let values = Array2::from_shape_vec((n_rows, p), values).expect("row-major buffer");
    let mask = Array2::from_shape_vec((n_rows, p), mask).expect("row-major buffer");
    Dataset::new(variables, values, mask)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub name: String,
    pub category: Category,
    pub missing_proportion: f64,
}

/// Fraction of missing cells per column, in column order.
pub fn missing_profile<F: Scalar>(d: &Dataset<F>) -> Vec<ProfileRow> {
    let n = d.n_rows() as f64;
    d.variables()
        .iter()
        .enumerate()
        .map(|(j, v)| ProfileRow {
            name: v.name.clone(),
            category: v.category,
            missing_proportion: d.missing_count(j) as f64 / n,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset<f64>> {
        parse_reader(text.as_bytes(), &ParseOptions::default())
    }

    #[test]
    fn na_cell_is_masked() {
        let d = parse("a,b\n1.0,NA\n2.0,3.0\n").unwrap();
        assert_eq!(d.n_rows(), 2);
        assert!(!d.is_observed(0, 1));
        assert!(d.is_observed(0, 0) && d.is_observed(1, 0) && d.is_observed(1, 1));
        assert!(d.values()[[0, 1]].is_nan());
    }

    #[test]
    fn fully_observed_mask_is_all_true() {
        let d = parse("x,y,z\n1,2,3\n4,5,6\n").unwrap();
        assert!(d.mask().iter().all(|&m| m));
    }

    #[test]
    fn empty_and_whitespace_cells_are_missing() {
        let d = parse("a,b\n1, \n,2\n").unwrap();
        assert!(!d.is_observed(0, 1));
        assert!(!d.is_observed(1, 0));
    }

    #[test]
    fn na_tokens_are_case_sensitive() {
        let err = parse("a\nna\n").unwrap_err();
        assert!(matches!(err, Error::Cell { row: 1, .. }), "{err}");
    }

    #[test]
    fn custom_na_tokens() {
        let opts = ParseOptions {
            na_tokens: vec!["?".into()],
            schema: None,
        };
        let d: Dataset<f64> = parse_reader("a\n?\n1\n".as_bytes(), &opts).unwrap();
        assert_eq!(d.missing_count(0), 1);
    }

    #[test]
    fn ragged_row_reports_row_number() {
        match parse("a,b\n1,2\n3\n").unwrap_err() {
            Error::Parse { row, .. } => assert_eq!(row, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn non_numeric_cell_reports_coordinates() {
        match parse("a,b\n1,2\n3,abc\n").unwrap_err() {
            Error::Cell { row, column, cell } => {
                assert_eq!((row, column.as_str(), cell.as_str()), (2, "b", "abc"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn infinite_cell_is_rejected() {
        assert!(matches!(parse("a\ninf\n").unwrap_err(), Error::Cell { .. }));
    }

    #[test]
    fn duplicate_header_is_schema_error() {
        assert!(matches!(parse("a,a\n1,2\n").unwrap_err(), Error::Schema(_)));
    }

    #[test]
    fn header_only_is_rejected() {
        assert!(matches!(parse("a,b\n").unwrap_err(), Error::Parse { .. }));
    }

    #[test]
    fn schema_assigns_categories() {
        let schema: Schema = serde_json::from_str(r#"{"hr": "Vital Physiology", "age": "Demographics"}"#).unwrap();
        let opts = ParseOptions {
            schema: Some(schema),
            ..ParseOptions::default()
        };
        let d: Dataset<f64> = parse_reader("hr,age,x\n1,2,3\n".as_bytes(), &opts).unwrap();
        let cats: Vec<Category> = d.variables().iter().map(|v| v.category).collect();
        assert_eq!(cats, vec![Category::VitalPhysiology, Category::Demographics, Category::Other]);
    }

    #[test]
    fn unknown_category_in_schema() {
        assert!(serde_json::from_str::<Schema>(r#"{"hr": "Cardiology"}"#).is_err());
    }

    #[test]
    fn profile_proportions() {
        let d = parse("age,half,none\n1,1,NA\n2,NA,NA\n").unwrap();
        let prof = missing_profile(&d);
        let props: Vec<f64> = prof.iter().map(|r| r.missing_proportion).collect();
        assert_eq!(props, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn lactate_like_column() {
        let mut text = String::from("lactate\n");
        for i in 0..1000 {
            if i < 727 {
                text.push_str("NA\n");
            } else {
                text.push_str(&format!("{}\n", 1.0 + i as f64 / 100.0));
            }
        }
        let d = parse(&text).unwrap();
        assert_eq!(missing_profile(&d)[0].missing_proportion, 0.727);
    }

    #[test]
    fn write_then_parse_is_exact() {
        let d = parse("a,b\n0.1,NA\n-3.25e-7,1e300\n").unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf, "NA").unwrap();
        let back: Dataset<f64> = parse_reader(buf.as_slice(), &ParseOptions::default()).unwrap();
        assert_eq!(back.mask(), d.mask());
        for (x, y) in back.values().iter().zip(d.values().iter()) {
            assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
        }
    }

    #[test]
    fn cast_keeps_mask() {
        let d = parse("a,b\n0.5,NA\n").unwrap();
        let f: Dataset<f32> = d.cast();
        assert_eq!(f.mask(), d.mask());
        assert_eq!(f.values()[[0, 0]], 0.5f32);
    }
}
