//! CSV ingestion: header row required, `#`-comment lines skipped,
//! every referenced cell numeric.

use std::path::Path;

use bartglm::{DesignMatrix, Mat};

use crate::errors::{CliError, CliResult};

pub struct Table {
    pub headers: Vec<String>,
    /// Column-major values, aligned with `headers`.
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> CliResult<&[f64]> {
        let idx = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("column '{name}' not found in data")))?;
        Ok(&self.columns[idx])
    }
}

pub fn read_csv(path: &Path) -> CliResult<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: bad header row: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() {
        return Err(CliError::Data(format!("{}: empty header row", path.display())));
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for record in reader.records() {
        let record = record
            .map_err(|e| CliError::Data(format!("{}: malformed CSV: {e}", path.display())))?;
        let line = record
            .position()
            .map(|p| p.line().to_string())
            .unwrap_or_else(|| "?".into());
        if record.len() != headers.len() {
            return Err(CliError::Data(format!(
                "{} line {line}: {} fields, expected {}",
                path.display(),
                record.len(),
                headers.len()
            )));
        }
        for (slot, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                CliError::Data(format!(
                    "{} line {line}: non-numeric value '{cell}' in column '{}'",
                    path.display(),
                    headers[slot]
                ))
            })?;
            columns[slot].push(value);
        }
    }
    if columns[0].is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    Ok(Table { headers, columns })
}

/// Assemble the response vector and design matrix. Covariates default to
/// every non-response column in file order; `intercept` prepends a column
/// of ones.
pub fn build_model(
    table: &Table,
    response: &str,
    covariates: Option<&[String]>,
    intercept: bool,
) -> CliResult<(Vec<f64>, DesignMatrix<f64>)> {
    let y = table.column(response)?.to_vec();
    let chosen: Vec<String> = match covariates {
        Some(names) => names.to_vec(),
        None => table
            .headers
            .iter()
            .filter(|h| h.as_str() != response)
            .cloned()
            .collect(),
    };
    if chosen.iter().any(|c| c == response) {
        return Err(CliError::Usage(format!(
            "response column '{response}' cannot also be a covariate"
        )));
    }
    let mut names = Vec::new();
    let mut cols: Vec<&[f64]> = Vec::new();
    for name in &chosen {
        cols.push(table.column(name)?);
        names.push(name.clone());
    }
    let n = table.n_rows();
    let p = cols.len() + usize::from(intercept);
    let mat = Mat::from_fn(n, p, |i, j| {
        if intercept && j == 0 {
            1.0
        } else {
            cols[j - usize::from(intercept)][i]
        }
    });
    if intercept {
        names.insert(0, "intercept".into());
    }
    let design = DesignMatrix::new(mat, names).map_err(CliError::from)?;
    Ok((y, design))
}
