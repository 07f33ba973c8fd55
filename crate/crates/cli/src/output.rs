//! Rendering of fit summaries, test reports and rate tables as a human
//! table, JSON, or CSV. The JSON schemas are stable; see the README.

use serde::{Deserialize, Serialize};

use bartglm::{RateTable, TestReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Json,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table" => Some(Format::Table),
            "json" => Some(Format::Json),
            "csv" => Some(Format::Csv),
            _ => None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PhiSummary {
    pub estimate: f64,
    pub estimated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

/// JSON schema of `fit`: model block, coefficient table, precision summary,
/// fit diagnostics and deviance residuals.
#[derive(Debug, Serialize, Deserialize)]
pub struct FitSummary {
    pub family: String,
    pub link: String,
    pub n: usize,
    pub p: usize,
    pub coefficients: Vec<Coefficient>,
    pub phi: PhiSummary,
    pub deviance: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub deviance_residuals: Vec<f64>,
}

impl FitSummary {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "family: {}   link: {}   n = {}   p = {}\n\n",
            self.family, self.link, self.n, self.p
        ));
        out.push_str(&format!("{:<16} {:>12} {:>12}\n", "coefficient", "estimate", "std.error"));
        for c in &self.coefficients {
            out.push_str(&format!(
                "{:<16} {:>12.4} {:>12.4}\n",
                c.name, c.estimate, c.std_error
            ));
        }
        match self.phi.std_error {
            Some(se) => out.push_str(&format!("\nphi: {:.4} ({:.4})", self.phi.estimate, se)),
            None => out.push_str(&format!("\nphi: {:.4} (fixed)", self.phi.estimate)),
        }
        out.push_str(&format!(
            "\ndeviance: {:.6}   log-likelihood: {:.6}   iterations: {}\n",
            self.deviance, self.log_likelihood, self.iterations
        ));
        out.push_str("\ndeviance residuals:\n");
        for (i, r) in self.deviance_residuals.iter().enumerate() {
            out.push_str(&format!("{:>4} {:>12.6}\n", i + 1, r));
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from("record,name,value,std_error\n");
        for c in &self.coefficients {
            out.push_str(&format!(
                "coefficient,{},{},{}\n",
                c.name, c.estimate, c.std_error
            ));
        }
        out.push_str(&format!(
            "phi,phi,{},{}\n",
            self.phi.estimate,
            self.phi
                .std_error
                .map(|s| s.to_string())
                .unwrap_or_else(|| "fixed".into())
        ));
        out.push_str(&format!("summary,deviance,{},\n", self.deviance));
        out.push_str(&format!("summary,log_likelihood,{},\n", self.log_likelihood));
        out.push_str(&format!("summary,iterations,{},\n", self.iterations));
        for (i, r) in self.deviance_residuals.iter().enumerate() {
            out.push_str(&format!("residual,{},{},\n", i + 1, r));
        }
        out
    }
}

/// JSON schema of `test`: hypothesis description plus the statistic entries
/// exactly as computed (values, degrees of freedom, p-values, correction
/// coefficients).
#[derive(Debug, Serialize, Deserialize)]
pub struct TestOutput {
    pub hypothesis: String,
    pub family: String,
    pub link: String,
    pub n: usize,
    pub p: usize,
    pub df: usize,
    #[serde(flatten)]
    pub report: TestReport<f64>,
}

impl TestOutput {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "family: {}   link: {}   n = {}   p = {}\n",
            self.family, self.link, self.n, self.p
        ));
        out.push_str(&format!("H0: {}   (df = {})\n\n", self.hypothesis, self.df));
        out.push_str(&format!("{:<8} {:>12} {:>12}\n", "stat", "value", "p-value"));
        for e in &self.report.entries {
            let flag = if e.flagged_negative { "  [negative]" } else { "" };
            out.push_str(&format!(
                "{:<8} {:>12.4} {:>12.4}{flag}\n",
                e.name, e.value, e.p_value
            ));
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from("statistic,value,df,p_value,flagged_negative\n");
        for e in &self.report.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.name, e.value, e.df, e.p_value, e.flagged_negative
            ));
        }
        out
    }
}

pub fn render_rate_table(table: &RateTable) -> String {
    let mut out = String::new();
    out.push_str(&format!("scenario: {}\n", table.scenario));
    out.push_str(&format!(
        "replications: {}   used: {}   failed fits: {}   flagged negative: {}\n\n",
        table.replications, table.used, table.failed_fits, table.flagged_negative
    ));
    out.push_str(&format!("{:<8}", "stat"));
    for level in &table.levels {
        out.push_str(&format!(" {:>13}", format!("{}%", level * 100.0)));
    }
    out.push('\n');
    for (i, stat) in table.statistics.iter().enumerate() {
        out.push_str(&format!("{stat:<8}"));
        for cell in &table.cells[i] {
            out.push_str(&format!(" {:>7.2} ±{:<4.2}", cell.rate, cell.mcse));
        }
        out.push('\n');
    }
    out
}
