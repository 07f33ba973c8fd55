//! Maximum-likelihood fitting of the regression coefficients by reweighted
//! least squares, with the precision parameter estimated from the deviance.
//!
//! Restricted (null-hypothesis) fits reuse the same iteration with the
//! tested columns moved into an offset, so both code paths stay identical.

use crate::error::{Error, Result};
use crate::family::Family;
use crate::linalg::{Mat, Qr};
use crate::link::Link;
use crate::scalar::Scalar;

/// Full-rank design matrix with column labels.
#[derive(Debug, Clone)]
pub struct DesignMatrix<T> {
    mat: Mat<T>,
    names: Vec<String>,
}

impl<T: Scalar> DesignMatrix<T> {
    /// Validates `rank(X) = p` and `p < n`.
    pub fn new(mat: Mat<T>, names: Vec<String>) -> Result<Self> {
        let (n, p) = (mat.rows(), mat.cols());
        if p == 0 || p >= n {
            return Err(Error::Domain(format!(
                "design must have 1 <= p < n, got p={p}, n={n}"
            )));
        }
        if names.len() != p {
            return Err(Error::Domain(format!(
                "{} column names for {p} columns",
                names.len()
            )));
        }
        if !Qr::new(&mat).is_full_rank() {
            return Err(Error::Singular("design matrix is rank deficient".into()));
        }
        Ok(Self { mat, names })
    }

    /// Design with generated column labels `x1..xp`.
    pub fn unnamed(mat: Mat<T>) -> Result<Self> {
        let names = (1..=mat.cols()).map(|j| format!("x{j}")).collect();
        Self::new(mat, names)
    }

    pub fn mat(&self) -> &Mat<T> {
        &self.mat
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n(&self) -> usize {
        self.mat.rows()
    }

    pub fn p(&self) -> usize {
        self.mat.cols()
    }
}

/// Null hypothesis on the regression coefficients: the tested columns of the
/// design are pinned at `beta10`. `phi_known` fixes the precision instead of
/// estimating it.
#[derive(Debug, Clone)]
pub struct Hypothesis<T> {
    pub tested: Vec<usize>,
    pub beta10: Vec<T>,
    pub phi_known: Option<T>,
}

impl<T: Scalar> Hypothesis<T> {
    /// Hypothesis pinning `tested` coefficients at zero, phi unknown.
    pub fn zero(tested: Vec<usize>) -> Self {
        let beta10 = vec![T::zero(); tested.len()];
        Self {
            tested,
            beta10,
            phi_known: None,
        }
    }

    pub fn q(&self) -> usize {
        self.tested.len()
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let q = self.q();
        if q == 0 || q > p {
            return Err(Error::Domain(format!("need 1 <= q <= p, got q={q}, p={p}")));
        }
        if self.beta10.len() != q {
            return Err(Error::Domain(format!(
                "{} null values for {q} tested coefficients",
                self.beta10.len()
            )));
        }
        let mut seen = vec![false; p];
        for &idx in &self.tested {
            if idx >= p {
                return Err(Error::Domain(format!("tested column {idx} out of range")));
            }
            if seen[idx] {
                return Err(Error::Domain(format!("tested column {idx} repeated")));
            }
            seen[idx] = true;
        }
        if let Some(phi) = self.phi_known {
            if !(phi > T::zero()) {
                return Err(Error::Domain(format!("known phi must be positive, got {phi}")));
            }
        }
        Ok(())
    }

    /// Complement of the tested columns, in original order.
    pub fn nuisance(&self, p: usize) -> Vec<usize> {
        (0..p).filter(|j| !self.tested.contains(j)).collect()
    }
}

/// Iteration controls for the reweighted least-squares fit.
#[derive(Debug, Clone)]
pub struct FitOptions<T> {
    pub max_iter: usize,
    /// Relative deviance-change tolerance.
    pub dev_tol: T,
    /// Sup-norm tolerance on the (phi-free) score vector.
    pub score_tol: T,
    /// Fix the precision parameter instead of estimating it.
    pub phi_known: Option<T>,
}

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 100,
            dev_tol: T::real(1e-12).max(T::epsilon() * T::real(100.0)),
            score_tol: T::real(1e-8).max(T::epsilon() * T::real(1e4)),
            phi_known: None,
        }
    }
}

/// Converged maximum-likelihood fit.
#[derive(Debug, Clone)]
pub struct FittedModel<T> {
    pub beta: Vec<T>,
    pub phi: T,
    /// False when the precision was supplied rather than estimated.
    pub phi_estimated: bool,
    pub eta: Vec<T>,
    pub mu: Vec<T>,
    /// IRLS weights `w_l = V_l^-1 (d mu/d eta)^2` at the optimum.
    pub weights: Vec<T>,
    pub deviance: T,
    pub loglik: T,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Scalar> FittedModel<T> {
    /// Number of observations.
    pub fn n(&self) -> usize {
        self.mu.len()
    }
}

/// Unrestricted maximum-likelihood fit of the full model.
pub fn fit_irls<T: Scalar>(
    design: &DesignMatrix<T>,
    y: &[T],
    family: Family,
    link: Link,
    opts: &FitOptions<T>,
) -> Result<FittedModel<T>> {
    check_lengths(design, y)?;
    let offset = vec![T::zero(); y.len()];
    let inner = irls_core(design.mat(), y, family, link, &offset, opts)?;
    finish(inner, y, family, opts)
}

/// Restricted fit with the hypothesis imposed: the tested columns enter as
/// the fixed offset `X1 beta10` while the nuisance block is refit.
pub fn fit_restricted<T: Scalar>(
    design: &DesignMatrix<T>,
    y: &[T],
    family: Family,
    link: Link,
    hyp: &Hypothesis<T>,
    opts: &FitOptions<T>,
) -> Result<FittedModel<T>> {
    check_lengths(design, y)?;
    hyp.validate(design.p())?;
    let x1 = design.mat().select_cols(&hyp.tested);
    let offset = x1.matvec(&hyp.beta10);
    let nuisance = hyp.nuisance(design.p());
    let x2 = design.mat().select_cols(&nuisance);
    let inner = irls_core(&x2, y, family, link, &offset, opts)?;

    // Reassemble the full coefficient vector.
    let mut beta = vec![T::zero(); design.p()];
    for (slot, &idx) in hyp.tested.iter().enumerate() {
        beta[idx] = hyp.beta10[slot];
    }
    for (slot, &idx) in nuisance.iter().enumerate() {
        beta[idx] = inner.beta[slot];
    }
    let inner = InnerFit { beta, ..inner };
    finish(inner, y, family, opts)
}

/// Asymptotic standard errors: square roots of `diag{(phi X' W X)^-1}`.
pub fn standard_errors<T: Scalar>(
    fit: &FittedModel<T>,
    design: &DesignMatrix<T>,
) -> Result<Vec<T>> {
    let sw: Vec<T> = fit.weights.iter().map(|&w| w.sqrt()).collect();
    let qr = Qr::new(&design.mat().scale_rows(&sw));
    let rinv = qr.r_inverse().map_err(|_| {
        Error::Singular("information matrix is singular".into())
    })?;
    let p = design.p();
    Ok((0..p)
        .map(|j| {
            let mut s = T::zero();
            for k in 0..p {
                s += rinv.get(j, k).sq();
            }
            (s / fit.phi).sqrt()
        })
        .collect())
}

/// Asymptotic standard error of the estimated precision parameter,
/// `1 / sqrt(-n a_1''(phi))`.
pub fn se_phi<T: Scalar>(fit: &FittedModel<T>, family: Family, n: usize) -> Result<T> {
    if !fit.phi_estimated {
        return Err(Error::NotApplicable(
            "phi was fixed, no standard error to report".into(),
        ));
    }
    let derivs = family.phi_derivs(fit.phi)?;
    let info = -T::from_count(n) * derivs.a1_2;
    if !(info > T::zero()) {
        return Err(Error::DegeneratePrecision(format!(
            "nonpositive phi information {info}"
        )));
    }
    Ok(T::one() / info.sqrt())
}

/// Signed square-root-weight times Pearson scaling, `(d mu/d eta)/V`, used
/// by the score vector; equals `sqrt(w)/sqrt(V)` up to the link's sign.
pub(crate) fn score_scaling<T: Scalar>(
    family: Family,
    link: Link,
    eta: &[T],
) -> Result<Vec<T>> {
    eta.iter()
        .map(|&e| {
            let c = link.chain(e)?;
            let (v, _, _) = family.variance(c.mu)?;
            Ok(c.d1 / v)
        })
        .collect()
}

struct InnerFit<T> {
    beta: Vec<T>,
    eta: Vec<T>,
    mu: Vec<T>,
    weights: Vec<T>,
    deviance: T,
    iterations: usize,
}

fn check_lengths<T: Scalar>(design: &DesignMatrix<T>, y: &[T]) -> Result<()> {
    if design.n() != y.len() {
        return Err(Error::Domain(format!(
            "design has {} rows but y has {} entries",
            design.n(),
            y.len()
        )));
    }
    Ok(())
}

fn finish<T: Scalar>(
    inner: InnerFit<T>,
    y: &[T],
    family: Family,
    opts: &FitOptions<T>,
) -> Result<FittedModel<T>> {
    let n = y.len();
    let (phi, phi_estimated) = match opts.phi_known {
        Some(phi) => (phi, false),
        None => {
            let t_sum = y.iter().map(|&v| family.t_of(v)).sum::<T>();
            (family.phi_mle(inner.deviance, n, t_sum)?, true)
        }
    };
    let loglik = family.log_likelihood(y, &inner.mu, phi)?;
    Ok(FittedModel {
        beta: inner.beta,
        phi,
        phi_estimated,
        eta: inner.eta,
        mu: inner.mu,
        weights: inner.weights,
        deviance: inner.deviance,
        loglik,
        iterations: inner.iterations,
        converged: true,
    })
}

/// Evaluate mean, weights and deviance at a linear predictor, failing when
/// any observation leaves the admissible domain.
fn state_at<T: Scalar>(
    family: Family,
    link: Link,
    eta: &[T],
    y: &[T],
) -> Result<(Vec<T>, Vec<T>, T)> {
    let n = eta.len();
    let mut mu = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for (l, &e) in eta.iter().enumerate() {
        let c = link
            .chain(e)
            .map_err(|err| Error::Domain(format!("observation {}: {err}", l + 1)))?;
        if !family.valid_mean(c.mu) {
            return Err(Error::Domain(format!(
                "observation {}: mean {} outside the {} domain",
                l + 1,
                c.mu,
                family.name()
            )));
        }
        let (v, _, _) = family.variance(c.mu)?;
        let wl = c.d1.sq() / v;
        if !(wl > T::zero()) || !wl.is_finite() {
            return Err(Error::Domain(format!(
                "observation {}: nonpositive working weight",
                l + 1
            )));
        }
        mu.push(c.mu);
        w.push(wl);
    }
    let dev = family.deviance(y, &mu)?;
    if !dev.is_finite() {
        return Err(Error::Domain("nonfinite deviance".into()));
    }
    Ok((mu, w, dev))
}

fn irls_core<T: Scalar>(
    xcols: &Mat<T>,
    y: &[T],
    family: Family,
    link: Link,
    offset: &[T],
    opts: &FitOptions<T>,
) -> Result<InnerFit<T>> {
    let n = y.len();
    let k = xcols.cols();
    for (l, &yl) in y.iter().enumerate() {
        if !family.valid_response(yl) {
            return Err(Error::Domain(format!(
                "response {} ({yl}) outside the {} domain",
                l + 1,
                family.name()
            )));
        }
    }

    // No free coefficients: the linear predictor is fully determined.
    if k == 0 {
        let (mu, weights, deviance) = state_at(family, link, offset, y)?;
        return Ok(InnerFit {
            beta: Vec::new(),
            eta: offset.to_vec(),
            mu,
            weights,
            deviance,
            iterations: 0,
        });
    }

    // Starting point: responses nudged inside the mean domain, then clamped
    // into the link domain.
    let mut mu0 = family.initial_mean(y);
    let floor = {
        let mean_abs = y.iter().map(|v| v.abs()).sum::<T>() / T::from_count(n);
        (T::real(0.1) * mean_abs).max(T::real(1e-8))
    };
    for m in &mut mu0 {
        match link {
            Link::Log | Link::ReciprocalSquared => {
                if *m <= T::zero() {
                    *m = floor;
                }
            }
            Link::Reciprocal => {
                if *m == T::zero() {
                    *m = floor;
                }
            }
            Link::Identity => {}
        }
    }
    let mut eta = mu0
        .iter()
        .map(|&m| link.eta_of_mu(m))
        .collect::<Result<Vec<T>>>()?;
    let (_, mut weights, mut deviance) = state_at(family, link, &eta, y)?;
    let mut mu;
    let mut beta_prev: Option<Vec<T>> = None;
    let mut dev_prev: Option<T> = None;

    for iteration in 1..=opts.max_iter {
        // Working response z = (eta - offset) + (y - mu) / (d mu/d eta).
        let mut z = vec![T::zero(); n];
        for l in 0..n {
            let c = link.chain(eta[l])?;
            z[l] = (eta[l] - offset[l]) + (y[l] - c.mu) / c.d1;
        }
        let sw: Vec<T> = weights.iter().map(|&w| w.sqrt()).collect();
        let wz: Vec<T> = z.iter().zip(&sw).map(|(&zl, &s)| zl * s).collect();
        let qr = Qr::new(&xcols.scale_rows(&sw));
        if !qr.is_full_rank() {
            return Err(Error::Singular(
                "weighted design became rank deficient".into(),
            ));
        }
        let mut beta = qr.solve(&wz)?;
        let mut candidate: Vec<T> = xcols
            .matvec(&beta)
            .iter()
            .zip(offset)
            .map(|(&a, &o)| a + o)
            .collect();

        // Step-halving back toward the previous iterate until the state is
        // admissible and the deviance does not increase (damps the
        // oscillation reweighted least squares is prone to on skewed data).
        let mut halvings = 0;
        let halve = |candidate: &mut Vec<T>, beta: &mut Vec<T>| {
            for l in 0..n {
                candidate[l] = (candidate[l] + eta[l]) / T::real(2.0);
            }
            if let Some(prev) = &beta_prev {
                for (b, &bp) in beta.iter_mut().zip(prev) {
                    *b = (*b + bp) / T::real(2.0);
                }
            }
        };
        let state = loop {
            match state_at(family, link, &candidate, y) {
                Ok(state) => {
                    // Only damp against a previous model iterate; the
                    // starting state (mu ~ y) is not one and may have an
                    // artificially small deviance. The slack sits at machine
                    // scale so sub-tolerance limit cycles get damped too.
                    let increased = beta_prev.is_some()
                        && state.2
                            > deviance * (T::one() + T::epsilon() * T::real(16.0))
                                + T::epsilon();
                    if increased && halvings < 30 {
                        halvings += 1;
                        halve(&mut candidate, &mut beta);
                        continue;
                    }
                    break state;
                }
                Err(err) => {
                    if halvings >= 30 {
                        return Err(Error::Domain(format!(
                            "step halving exhausted after 30 attempts: {err}"
                        )));
                    }
                    halvings += 1;
                    halve(&mut candidate, &mut beta);
                }
            }
        };
        eta = candidate;
        mu = state.0;
        weights = state.1;
        deviance = state.2;

        if let Some(prev) = dev_prev {
            let rel = (deviance - prev).abs() / deviance.abs().max(T::real(1e-10));
            if rel <= opts.dev_tol {
                // Score equation check: || X' (dmu/deta / V) (y - mu) ||_inf
                let sup = score_supnorm(xcols, y, family, link, &eta, &mu)?;
                if sup <= opts.score_tol {
                    return Ok(InnerFit {
                        beta,
                        eta,
                        mu,
                        weights,
                        deviance,
                        iterations: iteration,
                    });
                }
            }
            // Fisher scoring contracts only linearly, and on skewed data the
            // rate can sit close to one (or above it, leaving the deviance
            // flat without meeting the score tolerance). Once the iteration
            // is clearly in that regime, polish with observed-information
            // Newton steps, which contract quadratically near the optimum.
            let stalled = rel <= opts.dev_tol;
            let crawling = rel <= T::real(1e-6) && iteration % 25 == 0;
            if stalled || crawling {
                if let Some(inner) =
                    newton_polish(xcols, y, family, link, offset, beta.clone(), opts)?
                {
                    return Ok(InnerFit {
                        iterations: iteration + inner.iterations,
                        ..inner
                    });
                }
            }
        }
        dev_prev = Some(deviance);
        beta_prev = Some(beta);
    }

    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        last_beta: beta_prev
            .unwrap_or_default()
            .iter()
            .map(|b| b.to_f64().unwrap_or(f64::NAN))
            .collect(),
        last_deviance: deviance.to_f64().unwrap_or(f64::NAN),
    })
}

fn score_supnorm<T: Scalar>(
    xcols: &Mat<T>,
    y: &[T],
    family: Family,
    link: Link,
    eta: &[T],
    mu: &[T],
) -> Result<T> {
    let scale = score_scaling(family, link, eta)?;
    let mut sup = T::zero();
    for j in 0..xcols.cols() {
        let mut u = T::zero();
        for l in 0..y.len() {
            u += xcols.get(l, j) * scale[l] * (y[l] - mu[l]);
        }
        sup = sup.max(u.abs());
    }
    Ok(sup)
}

/// Newton steps with the observed information, used only after the
/// reweighted iteration has flattened the deviance without meeting the
/// score tolerance. Returns `Ok(None)` when the polish cannot make progress.
fn newton_polish<T: Scalar>(
    xcols: &Mat<T>,
    y: &[T],
    family: Family,
    link: Link,
    offset: &[T],
    mut beta: Vec<T>,
    opts: &FitOptions<T>,
) -> Result<Option<InnerFit<T>>> {
    let n = y.len();
    let k = xcols.cols();
    let mut eta: Vec<T> = xcols
        .matvec(&beta)
        .iter()
        .zip(offset)
        .map(|(&a, &o)| a + o)
        .collect();

    for step in 1..=40usize {
        // Score u_j = sum_l x_lj (d1/V)(y - mu) and observed information
        // weights w*_l = d1^2/V - (y - mu)(d2/V - d1^2 dV/dmu / V^2).
        let mut u = vec![T::zero(); k];
        let mut wstar = vec![T::zero(); n];
        for l in 0..n {
            let c = link.chain(eta[l])?;
            let (v, dv, _) = family.variance(c.mu)?;
            let theta1 = c.d1 / v;
            let theta2 = c.d2 / v - c.d1.sq() * dv / v.sq();
            wstar[l] = c.d1.sq() / v - (y[l] - c.mu) * theta2;
            let resid = theta1 * (y[l] - c.mu);
            for j in 0..k {
                u[j] += xcols.get(l, j) * resid;
            }
        }
        let info = Mat::from_fn(k, k, |i, j| {
            let mut s = T::zero();
            for l in 0..n {
                s += xcols.get(l, i) * wstar[l] * xcols.get(l, j);
            }
            s
        });
        let qr = Qr::new(&info);
        if !qr.is_full_rank() {
            return Ok(None);
        }
        let delta = qr.solve(&u)?;

        // Damped update: back off until the state is admissible.
        let mut factor = T::one();
        let mut accepted = None;
        for _ in 0..30 {
            let cand_beta: Vec<T> = beta
                .iter()
                .zip(&delta)
                .map(|(&b, &d)| b + factor * d)
                .collect();
            let cand_eta: Vec<T> = xcols
                .matvec(&cand_beta)
                .iter()
                .zip(offset)
                .map(|(&a, &o)| a + o)
                .collect();
            if let Ok(state) = state_at(family, link, &cand_eta, y) {
                accepted = Some((cand_beta, cand_eta, state));
                break;
            }
            factor = factor / T::real(2.0);
        }
        let Some((cand_beta, cand_eta, (mu, weights, deviance))) = accepted else {
            return Ok(None);
        };
        let moved = beta
            .iter()
            .zip(&cand_beta)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()));
        beta = cand_beta;
        eta = cand_eta;
        let sup = score_supnorm(xcols, y, family, link, &eta, &mu)?;
        if sup <= opts.score_tol {
            return Ok(Some(InnerFit {
                beta,
                eta,
                mu,
                weights,
                deviance,
                iterations: step,
            }));
        }
        if moved <= T::epsilon() * (T::one() + beta.iter().fold(T::zero(), |a, &b| a.max(b.abs()))) {
            return Ok(None);
        }
    }
    Ok(None)
}
