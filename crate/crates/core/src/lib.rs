//! Generalized linear model fitting with Bartlett and Bartlett-type
//! corrected test statistics.
//!
//! The crate covers the normal, gamma and inverse normal families under
//! the parameterization `var(Y) = V(mu)/phi`, fits by reweighted least
//! squares, and computes the likelihood ratio, Wald, score and gradient
//! statistics together with their corrected versions for hypotheses on
//! regression coefficients and on the precision parameter. A Monte Carlo
//! engine reproduces small-sample size and power experiments.
//!
//! The numerical core is generic over the scalar type through [`Scalar`]
//! (`f32` or `f64`); the aliases at the crate root pin the usual
//! double-precision instantiations.

pub mod error;
pub mod family;
pub mod fit;
pub mod geometry;
pub mod linalg;
pub mod link;
pub mod scalar;
pub mod simulate;
pub mod special;

pub use beta_tests::{
    classical_statistics, correction_gradient, correction_lr, correction_score,
    full_test_report, gradient_identity_check, ClassicalStats, CorrectionKind, CorrectionTerms,
    StatEntry, TestReport, STATISTIC_NAMES,
};
pub use error::{Error, Result};
pub use family::{Family, PhiDerivs};
pub use fit::{
    fit_irls, fit_restricted, se_phi, standard_errors, DesignMatrix, FitOptions, FittedModel,
    Hypothesis,
};
pub use geometry::{build_zbundle, lambda_diagonals, LambdaDiagonals, ZBundle};
pub use linalg::{Mat, Qr};
pub use link::{Link, LinkChain};
pub use phi_tests::{full_phi_report, phi_classical, phi_corrected, PhiCorrected, PhiHypothesis};
pub use scalar::Scalar;
pub use simulate::{
    ks_distance_to_chisq, run_null_rates, run_power, CovariateLaw, RateCell, RateTable,
    SimOutcome, SimScenario,
};
pub use special::{ln_gamma, polygamma, ChiSquared};

/// Default working precision.
pub type Real = f64;

/// Double-precision aliases for the main model types.
pub type DesignMatrix64 = DesignMatrix<f64>;
pub type FittedModel64 = FittedModel<f64>;
pub type Hypothesis64 = Hypothesis<f64>;
pub type FitOptions64 = FitOptions<f64>;
pub type TestReport64 = TestReport<f64>;
pub type Mat64 = Mat<f64>;
