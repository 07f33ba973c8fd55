//! Monte Carlo size and power experiments: fixed covariates per scenario,
//! counter-keyed per-replication random streams (so results are identical
//! for any worker count), and rejection-rate tables for all seven test
//! statistics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta_tests::{full_test_report, STATISTIC_NAMES};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::fit::{DesignMatrix, FitOptions, Hypothesis};
use crate::linalg::Mat;
use crate::link::Link;
use crate::special::ChiSquared;

/// Distribution of the fixed covariate values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CovariateLaw {
    Uniform01,
    StdNormal,
}

impl CovariateLaw {
    pub fn name(&self) -> &'static str {
        match self {
            CovariateLaw::Uniform01 => "uniform01",
            CovariateLaw::StdNormal => "stdnormal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform01" | "uniform" | "u01" => Ok(CovariateLaw::Uniform01),
            "stdnormal" | "normal" | "n01" => Ok(CovariateLaw::StdNormal),
            other => Err(Error::Domain(format!("unknown covariate law '{other}'"))),
        }
    }
}

/// One simulation scenario. Covariates are drawn once (from a stream keyed
/// by the master seed and the scenario hash) and held fixed across
/// replications. Under the null the first `q` true coefficients are zero
/// and the rest are one; `delta` shifts the tested coefficients for power
/// runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimScenario {
    pub family: Family,
    pub link: Link,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub phi: f64,
    pub covariate_law: CovariateLaw,
    pub delta: f64,
    pub levels: Vec<f64>,
    pub replications: usize,
    pub master_seed: u64,
}

impl SimScenario {
    /// Null-rejection-rate scenario at the conventional 10/5/1% levels.
    pub fn null_rates(
        family: Family,
        covariate_law: CovariateLaw,
        n: usize,
        p: usize,
        q: usize,
        phi: f64,
        replications: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            family,
            link: Link::Log,
            n,
            p,
            q,
            phi,
            covariate_law,
            delta: 0.0,
            levels: vec![0.10, 0.05, 0.01],
            replications,
            master_seed,
        }
    }

    /// Power scenario: data generated with the tested coefficients at
    /// `delta`, tested against zero.
    pub fn power(
        family: Family,
        covariate_law: CovariateLaw,
        n: usize,
        p: usize,
        q: usize,
        phi: f64,
        delta: f64,
        level: f64,
        replications: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            family,
            link: Link::Log,
            n,
            p,
            q,
            phi,
            covariate_law,
            delta,
            levels: vec![level],
            replications,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 || self.q > self.p {
            return Err(Error::Infeasible(format!(
                "need 1 <= q <= p, got q={}, p={}",
                self.q, self.p
            )));
        }
        if self.q == self.p {
            return Err(Error::Infeasible(
                "the intercept column cannot be among the tested coefficients (q must be < p)"
                    .into(),
            ));
        }
        if self.p >= self.n {
            return Err(Error::Infeasible(format!(
                "need p < n, got p={}, n={}",
                self.p, self.n
            )));
        }
        if !(self.phi > 0.0) {
            return Err(Error::Infeasible(format!("phi must be positive, got {}", self.phi)));
        }
        if self.replications == 0 {
            return Err(Error::Infeasible("need at least one replication".into()));
        }
        if self.levels.is_empty()
            || self.levels.iter().any(|&a| !(a > 0.0 && a <= 1.0))
        {
            return Err(Error::Infeasible("levels must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// True coefficients: tested slots at `delta`, the rest (including the
    /// intercept) at one.
    pub fn beta_true(&self) -> Vec<f64> {
        (0..self.p)
            .map(|j| if j < self.q { self.delta } else { 1.0 })
            .collect()
    }

    fn canonical_string(&self) -> String {
        format!(
            "family={};link={};n={};p={};q={};phi={:e};law={};delta={:e};levels={:?};reps={}",
            self.family.name(),
            self.link.name(),
            self.n,
            self.p,
            self.q,
            self.phi,
            self.covariate_law.name(),
            self.delta,
            self.levels,
            self.replications
        )
    }

    /// The part of the definition that pins the random streams: everything
    /// except the alternative shift, levels and replication count. Power
    /// curves over a delta grid therefore share one fixed design and common
    /// random numbers.
    fn stream_string(&self) -> String {
        format!(
            "family={};link={};n={};p={};q={};law={}",
            self.family.name(),
            self.link.name(),
            self.n,
            self.p,
            self.q,
            self.covariate_law.name(),
        )
    }

    /// Stable hash of the scenario definition (FNV-1a, independent of the
    /// standard library's hasher).
    pub fn scenario_hash(&self) -> u64 {
        fnv1a(&self.canonical_string())
    }

    fn stream_hash(&self) -> u64 {
        fnv1a(&self.stream_string())
    }
}

fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

const STREAM_DESIGN: u64 = 1;
const STREAM_REPLICATION: u64 = 2;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn derive_seed(master: u64, scenario_hash: u64, stream: u64, index: u64) -> u64 {
    let mut s = splitmix64(master);
    s = splitmix64(s ^ scenario_hash);
    s = splitmix64(s ^ stream);
    splitmix64(s ^ index)
}

/// One cell of a rate table: the rejection rate in percent and its Monte
/// Carlo standard error.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateCell {
    pub rate: f64,
    pub mcse: f64,
}

/// Rejection rates per statistic and nominal level, with failure accounting.
/// Failed fits and replications with a flagged negative corrected statistic
/// are excluded from the denominator and reported.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateTable {
    pub scenario: String,
    pub scenario_hash: u64,
    pub master_seed: u64,
    pub statistics: Vec<String>,
    pub levels: Vec<f64>,
    pub cells: Vec<Vec<RateCell>>,
    pub replications: usize,
    pub used: usize,
    pub failed_fits: usize,
    pub flagged_negative: usize,
}

impl RateTable {
    pub fn rate(&self, statistic: &str, level: f64) -> Option<f64> {
        let i = self.statistics.iter().position(|s| s == statistic)?;
        let j = self
            .levels
            .iter()
            .position(|&l| (l - level).abs() < 1e-12)?;
        Some(self.cells[i][j].rate)
    }

    pub fn mcse(&self, statistic: &str, level: f64) -> Option<f64> {
        let i = self.statistics.iter().position(|s| s == statistic)?;
        let j = self
            .levels
            .iter()
            .position(|&l| (l - level).abs() < 1e-12)?;
        Some(self.cells[i][j].mcse)
    }

    /// CSV rendering: one row per (statistic, level).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("statistic,level,rate_percent,mcse_percent\n");
        for (i, stat) in self.statistics.iter().enumerate() {
            for (j, level) in self.levels.iter().enumerate() {
                let cell = self.cells[i][j];
                out.push_str(&format!("{stat},{level},{},{}\n", cell.rate, cell.mcse));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rate table serializes")
    }
}

/// A rate table together with the raw statistic samples of the successful
/// replications (used for distribution-distance diagnostics).
#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub table: RateTable,
    /// One vector per reported statistic, aligned with `table.statistics`.
    pub samples: Vec<Vec<f64>>,
}

enum Replication {
    Ok([f64; 7]),
    FlaggedNegative,
    Failed,
}

fn draw_covariate(law: CovariateLaw, rng: &mut ChaCha8Rng) -> f64 {
    use rand_distr::{Distribution, StandardNormal, Uniform};
    match law {
        CovariateLaw::Uniform01 => Uniform::new(0.0f64, 1.0).unwrap().sample(rng),
        CovariateLaw::StdNormal => StandardNormal.sample(rng),
    }
}

fn run(sc: &SimScenario, workers: Option<usize>, keep: &[&str]) -> Result<SimOutcome> {
    sc.validate()?;
    let streams = sc.stream_hash();

    // Fixed covariates for the whole experiment: q tested random columns,
    // then the random nuisance columns, then an intercept column of ones
    // whose coefficient stays at one (the papers' design convention).
    let mut design_rng =
        ChaCha8Rng::seed_from_u64(derive_seed(sc.master_seed, streams, STREAM_DESIGN, 0));
    let x = Mat::from_fn(sc.n, sc.p, |_, j| {
        if j + 1 == sc.p {
            1.0
        } else {
            draw_covariate(sc.covariate_law, &mut design_rng)
        }
    });
    let design = DesignMatrix::unnamed(x)
        .map_err(|e| Error::Infeasible(format!("drawn design unusable: {e}")))?;
    let beta = sc.beta_true();
    let eta = design.mat().matvec(&beta);
    let mu: Vec<f64> = eta
        .iter()
        .map(|&e| sc.link.mu_of_eta(e))
        .collect::<Result<_>>()?;

    let hyp = Hypothesis::zero((0..sc.q).collect());
    // Unattended batch fitting: allow the occasional slow linear tail of
    // the reweighted iteration to finish instead of counting it as failed.
    let opts = FitOptions {
        max_iter: 500,
        ..FitOptions::default()
    };

    let one_replication = |rep: usize| -> Replication {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            sc.master_seed,
            streams,
            STREAM_REPLICATION,
            rep as u64,
        ));
        let mut y = Vec::with_capacity(sc.n);
        for &m in &mu {
            match sc.family.sample(m, sc.phi, &mut rng) {
                Ok(v) => y.push(v),
                Err(_) => return Replication::Failed,
            }
        }
        match full_test_report(&design, &y, sc.family, sc.link, &hyp, &opts) {
            Ok(report) => {
                if report.entries.iter().any(|e| e.flagged_negative) {
                    return Replication::FlaggedNegative;
                }
                let mut values = [0.0f64; 7];
                for (slot, name) in STATISTIC_NAMES.iter().enumerate() {
                    match report.value(name) {
                        Some(v) => values[slot] = v,
                        None => return Replication::Failed,
                    }
                }
                Replication::Ok(values)
            }
            Err(_) => Replication::Failed,
        }
    };

    let results: Vec<Replication> = match workers {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Infeasible(format!("worker pool: {e}")))?
            .install(|| (0..sc.replications).into_par_iter().map(one_replication).collect()),
        None => (0..sc.replications)
            .into_par_iter()
            .map(one_replication)
            .collect(),
    };

    let failed_fits = results
        .iter()
        .filter(|r| matches!(r, Replication::Failed))
        .count();
    let flagged_negative = results
        .iter()
        .filter(|r| matches!(r, Replication::FlaggedNegative))
        .count();
    let failure_fraction = failed_fits as f64 / sc.replications as f64;
    if failure_fraction > 0.02 {
        return Err(Error::TooManyFailures {
            failed: failed_fits,
            total: sc.replications,
            limit_percent: 2.0,
        });
    }

    let kept_idx: Vec<usize> = STATISTIC_NAMES
        .iter()
        .enumerate()
        .filter(|(_, name)| keep.contains(*name))
        .map(|(i, _)| i)
        .collect();
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); kept_idx.len()];
    for r in &results {
        if let Replication::Ok(values) = r {
            for (slot, &i) in kept_idx.iter().enumerate() {
                samples[slot].push(values[i]);
            }
        }
    }
    let used = samples.first().map_or(0, Vec::len);
    if used == 0 {
        return Err(Error::TooManyFailures {
            failed: sc.replications,
            total: sc.replications,
            limit_percent: 2.0,
        });
    }

    let chisq = ChiSquared::new(sc.q as u32)?;
    let mut criticals = Vec::with_capacity(sc.levels.len());
    for &alpha in &sc.levels {
        let crit = if alpha >= 1.0 {
            0.0
        } else {
            chisq.quantile(alpha)?
        };
        criticals.push(crit);
    }

    let cells: Vec<Vec<RateCell>> = samples
        .iter()
        .map(|sample| {
            criticals
                .iter()
                .map(|&crit| {
                    let rejected = sample.iter().filter(|&&v| v > crit).count();
                    let r = rejected as f64 / used as f64;
                    RateCell {
                        rate: 100.0 * r,
                        mcse: 100.0 * (r * (1.0 - r) / used as f64).sqrt(),
                    }
                })
                .collect()
        })
        .collect();

    let table = RateTable {
        scenario: sc.canonical_string(),
        scenario_hash: sc.scenario_hash(),
        master_seed: sc.master_seed,
        statistics: kept_idx
            .iter()
            .map(|&i| STATISTIC_NAMES[i].to_string())
            .collect(),
        levels: sc.levels.clone(),
        cells,
        replications: sc.replications,
        used,
        failed_fits,
        flagged_negative,
    };
    Ok(SimOutcome { table, samples })
}

/// Null rejection rates of all seven statistics.
pub fn run_null_rates(sc: &SimScenario, workers: Option<usize>) -> Result<SimOutcome> {
    run(sc, workers, &STATISTIC_NAMES)
}

/// Nonnull rejection rates (power) of the three corrected statistics.
pub fn run_power(sc: &SimScenario, workers: Option<usize>) -> Result<SimOutcome> {
    run(sc, workers, &["S*_LR", "S*_R", "S*_T"])
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `sample` and chi-squared with `df` degrees of freedom.
///
/// The sample must be nonempty.
pub fn ks_distance_to_chisq(sample: &[f64], df: u32) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Domain("KS distance needs a nonempty sample".into()));
    }
    let chisq = ChiSquared::new(df)?;
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in sample"));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = chisq.cdf(x.max(0.0))?;
        let upper = (i + 1) as f64 / n - f;
        let lower = f - i as f64 / n;
        d = d.max(upper).max(lower);
    }
    Ok(d)
}
