//! Command-line front end: dataset ingestion, model and hypothesis
//! configuration, test execution and Monte Carlo runs.

mod config;
mod errors;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bartglm::{
    fit_irls, full_phi_report, full_test_report, run_null_rates, run_power, se_phi,
    standard_errors, CovariateLaw, Family, FitOptions, Hypothesis, Link, PhiHypothesis,
    SimScenario,
};
use config::Config;
use errors::{CliError, CliResult};
use output::{Coefficient, FitSummary, Format, PhiSummary, TestOutput};

#[derive(Parser)]
#[command(
    name = "bartglm",
    version,
    about = "GLM fitting with Bartlett and Bartlett-type corrected test statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and report coefficients, precision and residuals
    Fit(FitArgs),
    /// Compute the seven test statistics for one hypothesis
    Test(TestArgs),
    /// Run a Monte Carlo size or power experiment
    Simulate(SimArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// key = value configuration file; flags override entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV data file with a header row ('#' comments allowed)
    #[arg(long)]
    data: Option<PathBuf>,
    /// response column name
    #[arg(long)]
    response: Option<String>,
    /// comma-separated covariate columns (default: all other columns)
    #[arg(long)]
    covariates: Option<String>,
    /// prepend an intercept column of ones
    #[arg(long)]
    intercept: bool,
    /// response family: normal, gamma or inverse-normal
    #[arg(long)]
    family: Option<String>,
    /// link function: log, identity, reciprocal or reciprocal-squared
    #[arg(long)]
    link: Option<String>,
    /// output format: table, json or csv
    #[arg(long)]
    format: Option<String>,
    /// treat the precision parameter as known at this value
    #[arg(long)]
    phi_fixed: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// comma-separated tested columns (hypothesis on coefficients)
    #[arg(long)]
    test_cols: Option<String>,
    /// comma-separated null values for the tested columns (default zeros)
    #[arg(long)]
    null_values: Option<String>,
    /// null value for the precision parameter (hypothesis on phi)
    #[arg(long)]
    phi0: Option<f64>,
}

#[derive(Args)]
struct SimArgs {
    /// key = value configuration file; flags override entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    /// covariate law: uniform01 or stdnormal
    #[arg(long)]
    law: Option<String>,
    /// sample size
    #[arg(long)]
    n: Option<usize>,
    /// number of regression coefficients
    #[arg(long)]
    p: Option<usize>,
    /// number of tested coefficients
    #[arg(long)]
    q: Option<usize>,
    /// true precision parameter
    #[arg(long)]
    phi: Option<f64>,
    /// alternative shift on the tested coefficients (0 = size experiment)
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    /// comma-separated nominal levels
    #[arg(long)]
    alpha: Option<String>,
    /// Monte Carlo replications
    #[arg(long)]
    reps: Option<usize>,
    /// master seed
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// output format for standard output: table, json or csv
    #[arg(long)]
    format: Option<String>,
    /// path prefix: writes <out>_rates.csv, <out>_rates.json, <out>_manifest.json
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Test(args) => cmd_test(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

struct ResolvedModel {
    y: Vec<f64>,
    design: bartglm::DesignMatrix<f64>,
    family: Family,
    link: Link,
    format: Format,
    phi_fixed: Option<f64>,
}

fn split_list(raw: &str) -> Vec<String> {
    raw.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn resolve_model(args: &ModelArgs) -> CliResult<ResolvedModel> {
    let cfg = match &args.config {
        Some(path) => Config::load(path)?,
        None => Config::empty(),
    };
    let data: PathBuf = cfg
        .merge(args.data.clone(), "data")?
        .ok_or_else(|| CliError::Usage("--data is required".into()))?;
    let response = cfg
        .merge_str(args.response.clone(), "response")
        .ok_or_else(|| CliError::Usage("--response is required".into()))?;
    let family_name = cfg
        .merge_str(args.family.clone(), "family")
        .ok_or_else(|| CliError::Usage("--family is required".into()))?;
    let family =
        Family::parse(&family_name).map_err(|e| CliError::Usage(e.to_string()))?;
    let link_name = cfg
        .merge_str(args.link.clone(), "link")
        .unwrap_or_else(|| "log".into());
    let link = Link::parse(&link_name).map_err(|e| CliError::Usage(e.to_string()))?;
    let format_name = cfg
        .merge_str(args.format.clone(), "format")
        .unwrap_or_else(|| "table".into());
    let format = Format::parse(&format_name)
        .ok_or_else(|| CliError::Usage(format!("unknown format '{format_name}'")))?;
    let covariates = cfg
        .merge_str(args.covariates.clone(), "covariates")
        .map(|raw| split_list(&raw));
    let intercept = cfg.merge_flag(args.intercept, "intercept");
    let phi_fixed = cfg.merge(args.phi_fixed, "phi_fixed")?;

    let table = input::read_csv(&data)?;
    let (y, design) = input::build_model(&table, &response, covariates.as_deref(), intercept)?;
    Ok(ResolvedModel {
        y,
        design,
        family,
        link,
        format,
        phi_fixed,
    })
}

fn cmd_fit(args: FitArgs) -> CliResult<()> {
    let m = resolve_model(&args.model)?;
    let opts = FitOptions {
        phi_known: m.phi_fixed,
        ..FitOptions::default()
    };
    let fit = fit_irls(&m.design, &m.y, m.family, m.link, &opts)?;
    let se = standard_errors(&fit, &m.design)?;
    let phi_se = if fit.phi_estimated {
        Some(se_phi(&fit, m.family, m.y.len())?)
    } else {
        None
    };
    // deviance component residuals, scaled by the estimated precision
    let residuals: Vec<f64> = m
        .y
        .iter()
        .zip(&fit.mu)
        .map(|(&y, &mu)| {
            let d = m.family.unit_deviance(y, mu)?;
            Ok((y - mu).signum() * (fit.phi * d).sqrt())
        })
        .collect::<bartglm::Result<_>>()?;

    let summary = FitSummary {
        family: m.family.name().into(),
        link: m.link.name().into(),
        n: m.y.len(),
        p: m.design.p(),
        coefficients: m
            .design
            .names()
            .iter()
            .zip(&fit.beta)
            .zip(&se)
            .map(|((name, &estimate), &std_error)| Coefficient {
                name: name.clone(),
                estimate,
                std_error,
            })
            .collect(),
        phi: PhiSummary {
            estimate: fit.phi,
            estimated: fit.phi_estimated,
            std_error: phi_se,
        },
        deviance: fit.deviance,
        log_likelihood: fit.loglik,
        iterations: fit.iterations,
        deviance_residuals: residuals,
    };
    match m.format {
        Format::Table => print!("{}", summary.render_table()),
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&summary).expect("summary serializes")
        ),
        Format::Csv => print!("{}", summary.render_csv()),
    }
    Ok(())
}

fn cmd_test(args: TestArgs) -> CliResult<()> {
    let m = resolve_model(&args.model)?;
    let cfg = match &args.model.config {
        Some(path) => Config::load(path)?,
        None => Config::empty(),
    };
    let test_cols = cfg
        .merge_str(args.test_cols.clone(), "test_cols")
        .map(|raw| split_list(&raw));
    let null_values = cfg
        .merge_str(args.null_values.clone(), "null_values")
        .map(|raw| split_list(&raw));
    let phi0 = cfg.merge(args.phi0, "phi0")?;

    let (hypothesis, df, report) = match (test_cols, phi0) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "give either --test-cols or --phi0, not both".into(),
            ));
        }
        (None, None) => {
            return Err(CliError::Usage(
                "a hypothesis is required: --test-cols or --phi0".into(),
            ));
        }
        (None, Some(phi0)) => {
            let hyp = PhiHypothesis::new(phi0).map_err(|e| CliError::Usage(e.to_string()))?;
            let report = full_phi_report(
                &m.design,
                &m.y,
                m.family,
                m.link,
                &hyp,
                &FitOptions::default(),
            )?;
            (format!("phi = {phi0}"), 1, report)
        }
        (Some(cols), None) => {
            let mut tested = Vec::new();
            for name in &cols {
                let idx = m
                    .design
                    .names()
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| {
                        CliError::Usage(format!("tested column '{name}' not in the design"))
                    })?;
                tested.push(idx);
            }
            let beta10: Vec<f64> = match null_values {
                None => vec![0.0; tested.len()],
                Some(raw) => {
                    if raw.len() != tested.len() {
                        return Err(CliError::Usage(format!(
                            "{} null values for {} tested columns",
                            raw.len(),
                            tested.len()
                        )));
                    }
                    raw.iter()
                        .map(|s| {
                            s.parse::<f64>().map_err(|_| {
                                CliError::Usage(format!("bad null value '{s}'"))
                            })
                        })
                        .collect::<CliResult<_>>()?
                }
            };
            let describe = cols
                .iter()
                .zip(&beta10)
                .map(|(c, v)| format!("{c} = {v}"))
                .collect::<Vec<_>>()
                .join(", ");
            let hyp = Hypothesis {
                tested,
                beta10,
                phi_known: m.phi_fixed,
            };
            hyp.validate(m.design.p())
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let df = hyp.q();
            let report = full_test_report(
                &m.design,
                &m.y,
                m.family,
                m.link,
                &hyp,
                &FitOptions::default(),
            )?;
            (describe, df, report)
        }
    };

    let out = TestOutput {
        hypothesis,
        family: m.family.name().into(),
        link: m.link.name().into(),
        n: m.y.len(),
        p: m.design.p(),
        df,
        report,
    };
    match m.format {
        Format::Table => print!("{}", out.render_table()),
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&out).expect("report serializes")
        ),
        Format::Csv => print!("{}", out.render_csv()),
    }
    Ok(())
}

fn cmd_simulate(args: SimArgs) -> CliResult<()> {
    let cfg = match &args.config {
        Some(path) => Config::load(path)?,
        None => Config::empty(),
    };
    let family_name = cfg
        .merge_str(args.family.clone(), "family")
        .ok_or_else(|| CliError::Usage("--family is required".into()))?;
    let family = Family::parse(&family_name).map_err(|e| CliError::Usage(e.to_string()))?;
    let law_name = cfg
        .merge_str(args.law.clone(), "law")
        .unwrap_or_else(|| "uniform01".into());
    let law = CovariateLaw::parse(&law_name).map_err(|e| CliError::Usage(e.to_string()))?;
    let n = cfg
        .merge(args.n, "n")?
        .ok_or_else(|| CliError::Usage("--n is required".into()))?;
    let p = cfg
        .merge(args.p, "p")?
        .ok_or_else(|| CliError::Usage("--p is required".into()))?;
    let q = cfg
        .merge(args.q, "q")?
        .ok_or_else(|| CliError::Usage("--q is required".into()))?;
    let phi = cfg.merge(args.phi, "phi")?.unwrap_or(1.0);
    let delta = cfg.merge(args.delta, "delta")?.unwrap_or(0.0);
    let replications = cfg.merge(args.reps, "reps")?.unwrap_or(15_000);
    let master_seed = cfg.merge(args.seed, "seed")?.unwrap_or(4);
    let workers = cfg.merge(args.workers, "workers")?;
    let levels: Vec<f64> = match cfg.merge_str(args.alpha.clone(), "alpha") {
        None => vec![0.10, 0.05, 0.01],
        Some(raw) => split_list(&raw)
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("bad level '{s}'")))
            })
            .collect::<CliResult<_>>()?,
    };
    let format_name = cfg
        .merge_str(args.format.clone(), "format")
        .unwrap_or_else(|| "table".into());
    let format = Format::parse(&format_name)
        .ok_or_else(|| CliError::Usage(format!("unknown format '{format_name}'")))?;

    let scenario = SimScenario {
        family,
        link: Link::Log,
        n,
        p,
        q,
        phi,
        covariate_law: law,
        delta,
        levels,
        replications,
        master_seed,
    };
    scenario
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let outcome = if delta == 0.0 {
        run_null_rates(&scenario, workers)?
    } else {
        run_power(&scenario, workers)?
    };
    let table = &outcome.table;

    match format {
        Format::Table => print!("{}", output::render_rate_table(table)),
        Format::Json => println!("{}", table.to_json()),
        Format::Csv => print!("{}", table.to_csv()),
    }

    if let Some(prefix) = &args.out {
        let prefix = prefix.to_string_lossy();
        let write = |suffix: &str, content: &str| -> CliResult<()> {
            let path = format!("{prefix}_{suffix}");
            std::fs::write(&path, content)
                .map_err(|e| CliError::Data(format!("cannot write {path}: {e}")))
        };
        write("rates.csv", &table.to_csv())?;
        write("rates.json", &(table.to_json() + "\n"))?;
        let manifest = serde_json::json!({
            "master_seed": table.master_seed,
            "scenario_hash": table.scenario_hash,
            "scenario": table.scenario,
            "replications": table.replications,
            "used": table.used,
            "failed_fits": table.failed_fits,
            "flagged_negative": table.flagged_negative,
            "workers": workers,
        });
        write(
            "manifest.json",
            &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"),
        )?;
    }
    Ok(())
}
