//! The one-parameter exponential dispersion families used throughout:
//! normal, gamma and inverse normal, in the parameterization
//! `var(Y) = V(mu) / phi`.
//!
//! Each family supplies its variance function with derivatives, the
//! canonical parameter `theta = q(mu)` with cumulant `b(theta)`, the
//! deviance building blocks `v(y)` and `t(y)`, the `a_1(phi)` chain of
//! derivatives entering the correction factors, the maximum-likelihood
//! equation for `phi`, and a response sampler.

use rand::distr::StandardUniform;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma as GammaDist, InverseGaussian, Normal as NormalDist, Open01, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::special::polygamma;

/// Response family. Carries no per-instance state: the kind determines
/// every callback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Normal,
    Gamma,
    InverseNormal,
}

// Serialized by name so manifests stay human-readable.
impl serde::Serialize for Family {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> serde::Deserialize<'de> for Family {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = <String as serde::Deserialize>::deserialize(d)?;
        Family::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// `a_1(phi)` and its first four derivatives, together with the scaled
/// versions `d_(k) = phi^k a_1^(k)(phi)` that the correction factors use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiDerivs<T> {
    pub a1: T,
    pub a1_1: T,
    pub a1_2: T,
    pub a1_3: T,
    pub a1_4: T,
    pub d2: T,
    pub d3: T,
    pub d4: T,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Gamma => "gamma",
            Family::InverseNormal => "inverse-normal",
        }
    }

    /// Parse a user-facing family name.
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Ok(Family::Normal),
            "gamma" => Ok(Family::Gamma),
            "inverse-normal" | "inverse-gaussian" | "inverse_normal" | "inverse_gaussian" => {
                Ok(Family::InverseNormal)
            }
            other => Err(Error::Domain(format!("unknown family '{other}'"))),
        }
    }

    /// Whether `mu` lies in the family's mean domain.
    pub fn valid_mean<T: Scalar>(&self, mu: T) -> bool {
        match self {
            Family::Normal => mu.is_finite(),
            Family::Gamma | Family::InverseNormal => mu.is_finite() && mu > T::zero(),
        }
    }

    /// Whether `y` is an admissible response value.
    pub fn valid_response<T: Scalar>(&self, y: T) -> bool {
        self.valid_mean(y)
    }

    fn check_mean<T: Scalar>(&self, mu: T) -> Result<()> {
        if self.valid_mean(mu) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "mean {mu} outside the {} domain",
                self.name()
            )))
        }
    }

    /// Variance function with its first two mean-derivatives:
    /// `(V, dV/dmu, d2V/dmu2)`.
    pub fn variance<T: Scalar>(&self, mu: T) -> Result<(T, T, T)> {
        self.check_mean(mu)?;
        Ok(match self {
            Family::Normal => (T::one(), T::zero(), T::zero()),
            Family::Gamma => (mu * mu, T::real(2.0) * mu, T::real(2.0)),
            Family::InverseNormal => (
                mu * mu * mu,
                T::real(3.0) * mu * mu,
                T::real(6.0) * mu,
            ),
        })
    }

    /// Canonical parameter `theta = q(mu)`.
    pub fn canonical_theta<T: Scalar>(&self, mu: T) -> Result<T> {
        self.check_mean(mu)?;
        Ok(match self {
            Family::Normal => mu,
            Family::Gamma => -T::one() / mu,
            Family::InverseNormal => -T::one() / (T::real(2.0) * mu * mu),
        })
    }

    /// Cumulant function `b(theta)` with `db/dtheta = mu`.
    pub fn b_of_theta<T: Scalar>(&self, theta: T) -> Result<T> {
        match self {
            Family::Normal => Ok(theta * theta / T::real(2.0)),
            Family::Gamma => {
                if theta >= T::zero() {
                    return Err(Error::Domain(format!(
                        "gamma cumulant requires theta < 0, got {theta}"
                    )));
                }
                Ok(-(-theta).ln())
            }
            Family::InverseNormal => {
                if theta >= T::zero() {
                    return Err(Error::Domain(format!(
                        "inverse-normal cumulant requires theta < 0, got {theta}"
                    )));
                }
                Ok(-(-T::real(2.0) * theta).sqrt())
            }
        }
    }

    /// `v(z) = z q(z) - b(q(z))`, the deviance kernel.
    pub fn v_of<T: Scalar>(&self, z: T) -> Result<T> {
        self.check_mean(z)?;
        Ok(match self {
            Family::Normal => z * z / T::real(2.0),
            Family::Gamma => -T::one() - z.ln(),
            Family::InverseNormal => T::one() / (T::real(2.0) * z),
        })
    }

    /// `t(y) = v(y) + a_0(y)`, the response summary entering the
    /// phi-estimating equation.
    pub fn t_of<T: Scalar>(&self, _y: T) -> T {
        match self {
            Family::Normal | Family::InverseNormal => T::zero(),
            Family::Gamma => -T::one(),
        }
    }

    /// Per-observation deviance contribution
    /// `2 [v(y) - v(mu) + (mu - y) q(mu)] >= 0`.
    pub fn unit_deviance<T: Scalar>(&self, y: T, mu: T) -> Result<T> {
        if !self.valid_response(y) {
            return Err(Error::Domain(format!(
                "response {y} outside the {} domain",
                self.name()
            )));
        }
        let d = T::real(2.0)
            * (self.v_of(y)? - self.v_of(mu)? + (mu - y) * self.canonical_theta(mu)?);
        // Rounding can leave a tiny negative residue when y is close to mu.
        if d < T::zero() {
            let scale = T::one() + self.v_of(y)?.abs() + self.v_of(mu)?.abs();
            if d > -T::epsilon() * T::real(1e3) * scale {
                return Ok(T::zero());
            }
        }
        Ok(d)
    }

    /// Total deviance `D_p = sum of unit deviances`.
    pub fn deviance<T: Scalar>(&self, y: &[T], mu: &[T]) -> Result<T> {
        if y.len() != mu.len() {
            return Err(Error::Domain(format!(
                "deviance needs equal lengths, got {} and {}",
                y.len(),
                mu.len()
            )));
        }
        let mut total = T::zero();
        for (&yl, &ml) in y.iter().zip(mu) {
            total += self.unit_deviance(yl, ml)?;
        }
        Ok(total)
    }

    /// `a_1(phi)` and its derivative chain.
    pub fn phi_derivs<T: Scalar>(&self, phi: T) -> Result<PhiDerivs<T>> {
        if !(phi > T::zero()) || !phi.is_finite() {
            return Err(Error::Domain(format!("phi must be positive, got {phi}")));
        }
        let two = T::real(2.0);
        let (a1, a1_1, a1_2, a1_3, a1_4) = match self {
            Family::Normal | Family::InverseNormal => (
                phi.ln() / two,
                T::one() / (two * phi),
                -T::one() / (two * phi * phi),
                T::one() / (phi * phi * phi),
                -T::real(3.0) / (phi * phi * phi * phi),
            ),
            Family::Gamma => (
                phi * phi.ln() - crate::special::ln_gamma(phi)?,
                phi.ln() + T::one() - polygamma(0, phi)?,
                T::one() / phi - polygamma(1, phi)?,
                -T::one() / (phi * phi) - polygamma(2, phi)?,
                two / (phi * phi * phi) - polygamma(3, phi)?,
            ),
        };
        Ok(PhiDerivs {
            a1,
            a1_1,
            a1_2,
            a1_3,
            a1_4,
            d2: phi.sq() * a1_2,
            d3: phi.sq() * phi * a1_3,
            d4: phi.sq() * phi.sq() * a1_4,
        })
    }

    /// Solve `a_1'(phi) = (D_p/2 - sum t(y)) / n` for the precision MLE.
    ///
    /// Normal and inverse normal have the closed form `phi = n / D_p`; the
    /// gamma equation `log(phi) - psi(phi) = D_p / (2n)` is solved by a
    /// safeguarded Newton iteration from the moment-style starting value.
    pub fn phi_mle<T: Scalar>(&self, deviance: T, n: usize, t_sum: T) -> Result<T> {
        if n == 0 {
            return Err(Error::Domain("phi_mle requires n >= 1".into()));
        }
        if !(deviance > T::zero()) {
            return Err(Error::DegeneratePrecision(format!(
                "deviance {deviance} leaves phi unbounded"
            )));
        }
        let nn = T::from_count(n);
        match self {
            Family::Normal | Family::InverseNormal => Ok(nn / deviance),
            Family::Gamma => {
                // rhs of a_1'(phi) = D/(2n) - t_sum/n; with a_1' = log phi + 1 - psi(phi)
                // this reduces to log(phi) - psi(phi) = s where s = D/(2n) (t = -1).
                let s = deviance / (T::real(2.0) * nn) - t_sum / nn - T::one();
                if !(s > T::zero()) {
                    return Err(Error::Domain(format!(
                        "gamma phi equation needs a positive right-hand side, got {s}"
                    )));
                }
                gamma_phi_newton(s)
            }
        }
    }

    /// Log-likelihood at `(mu, phi)` up to an additive constant in `y`:
    /// `phi [sum t(y) - D_p/2] + n a_1(phi)`.
    pub fn log_likelihood<T: Scalar>(&self, y: &[T], mu: &[T], phi: T) -> Result<T> {
        let dev = self.deviance(y, mu)?;
        let t_sum = y.iter().map(|&v| self.t_of(v)).sum::<T>();
        let n = T::from_count(y.len());
        Ok(phi * (t_sum - dev / T::real(2.0)) + n * self.phi_derivs(phi)?.a1)
    }

    /// Starting means for the reweighted least-squares iteration: the
    /// responses nudged into the interior of the mean domain.
    pub fn initial_mean<T: Scalar>(&self, y: &[T]) -> Vec<T> {
        match self {
            Family::Normal => y.to_vec(),
            Family::Gamma | Family::InverseNormal => {
                let mean = y.iter().copied().sum::<T>() / T::from_count(y.len().max(1));
                let floor = T::real(0.1) * mean;
                y.iter().map(|&v| v.max(floor)).collect()
            }
        }
    }

    /// Draw one response with mean `mu` and variance `V(mu)/phi`.
    ///
    /// Gamma uses shape `phi`, scale `mu/phi`; the inverse normal shape
    /// parameter equals `phi` (Michael–Schucany–Haas sampling underneath);
    /// normal has variance `1/phi`.
    pub fn sample<T, R>(&self, mu: T, phi: T, rng: &mut R) -> Result<T>
    where
        T: Scalar,
        R: Rng + ?Sized,
        StandardNormal: Distribution<T>,
        StandardUniform: Distribution<T>,
        Exp1: Distribution<T>,
        Open01: Distribution<T>,
    {
        self.check_mean(mu)?;
        if !(phi > T::zero()) {
            return Err(Error::Domain(format!("phi must be positive, got {phi}")));
        }
        match self {
            Family::Normal => {
                let sd = (T::one() / phi).sqrt();
                let dist = NormalDist::new(mu, sd)
                    .map_err(|e| Error::Domain(format!("normal sampler: {e}")))?;
                Ok(dist.sample(rng))
            }
            Family::Gamma => {
                let dist = GammaDist::new(phi, mu / phi)
                    .map_err(|e| Error::Domain(format!("gamma sampler: {e}")))?;
                Ok(dist.sample(rng))
            }
            Family::InverseNormal => {
                let dist = InverseGaussian::new(mu, phi)
                    .map_err(|e| Error::Domain(format!("inverse-normal sampler: {e}")))?;
                Ok(dist.sample(rng))
            }
        }
    }
}

/// Newton iteration for `log(phi) - psi(phi) = s`, `s > 0`, with bisection
/// safeguards. The left side decreases from infinity to zero, so the root
/// exists and is unique.
fn gamma_phi_newton<T: Scalar>(s: T) -> Result<T> {
    let start = {
        // moment-style start (3 - s + sqrt((s-3)^2 + 24 s)) / (12 s)
        let three = T::real(3.0);
        (three - s + ((s - three).sq() + T::real(24.0) * s).sqrt()) / (T::real(12.0) * s)
    };
    let mut phi = start.max(T::real(1e-8));
    let mut lo = T::zero();
    let mut hi = T::infinity();
    let tol = T::real(1e-10).max(T::epsilon() * T::real(8.0));
    for iteration in 0..50 {
        let g = phi.ln() - polygamma(0, phi)? - s;
        if g > T::zero() {
            // left side too big: root is at larger phi? g decreasing => root right when g > 0
            lo = phi;
        } else {
            hi = phi;
        }
        let gp = T::one() / phi - polygamma(1, phi)?; // strictly negative
        let mut next = phi - g / gp;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() {
                (lo + hi) / T::real(2.0)
            } else {
                phi * T::real(2.0)
            };
        }
        let rel = ((next - phi) / next).abs();
        phi = next;
        if rel <= tol {
            return Ok(phi);
        }
        let _ = iteration;
    }
    Err(Error::NonConvergence {
        iterations: 50,
        last_beta: vec![phi.to_f64().unwrap_or(f64::NAN)],
        last_deviance: s.to_f64().unwrap_or(f64::NAN),
    })
}
