//! Link functions and the derivative chain d mu / d eta up to third order.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mean-to-linear-predictor link `d(mu) = eta`.
///
/// `Log` is used throughout the simulation and application work; `Identity`
/// covers the normal-model degenerate checks; `Reciprocal` and
/// `ReciprocalSquared` are the canonical links of the gamma and inverse
/// normal families. `Reciprocal` is implemented as `d(mu) = 1/mu` on the
/// positive branch, so `d mu/d eta` is negative there; downstream formulas
/// consume the signed derivatives as-is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    Log,
    Identity,
    Reciprocal,
    ReciprocalSquared,
}

// Serialized by name so manifests stay human-readable.
impl serde::Serialize for Link {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> serde::Deserialize<'de> for Link {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = <String as serde::Deserialize>::deserialize(d)?;
        Link::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Inverse-link value and its first three derivatives with respect to eta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkChain<T> {
    pub mu: T,
    /// d mu / d eta
    pub d1: T,
    /// d^2 mu / d eta^2
    pub d2: T,
    /// d^3 mu / d eta^3
    pub d3: T,
}

impl Link {
    pub fn name(&self) -> &'static str {
        match self {
            Link::Log => "log",
            Link::Identity => "identity",
            Link::Reciprocal => "reciprocal",
            Link::ReciprocalSquared => "reciprocal-squared",
        }
    }

    /// Parse a user-facing link name.
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "log" => Ok(Link::Log),
            "identity" => Ok(Link::Identity),
            "reciprocal" | "inverse" => Ok(Link::Reciprocal),
            "reciprocal-squared" | "1/mu^2" => Ok(Link::ReciprocalSquared),
            other => Err(Error::Domain(format!("unknown link '{other}'"))),
        }
    }

    /// Inverse link: mu as a function of eta.
    pub fn mu_of_eta<T: Scalar>(&self, eta: T) -> Result<T> {
        Ok(self.chain(eta)?.mu)
    }

    /// Forward link: eta as a function of mu.
    pub fn eta_of_mu<T: Scalar>(&self, mu: T) -> Result<T> {
        match self {
            Link::Log => {
                if mu <= T::zero() {
                    return Err(Error::Domain(format!("log link requires mu > 0, got {mu}")));
                }
                Ok(mu.ln())
            }
            Link::Identity => Ok(mu),
            Link::Reciprocal => {
                if mu == T::zero() {
                    return Err(Error::Domain("reciprocal link requires mu != 0".into()));
                }
                Ok(T::one() / mu)
            }
            Link::ReciprocalSquared => {
                if mu <= T::zero() {
                    return Err(Error::Domain(format!(
                        "reciprocal-squared link requires mu > 0, got {mu}"
                    )));
                }
                Ok(T::one() / (mu * mu))
            }
        }
    }

    /// Inverse-link value with its first three eta-derivatives.
    pub fn chain<T: Scalar>(&self, eta: T) -> Result<LinkChain<T>> {
        match self {
            Link::Log => {
                let mu = eta.exp();
                Ok(LinkChain { mu, d1: mu, d2: mu, d3: mu })
            }
            Link::Identity => Ok(LinkChain {
                mu: eta,
                d1: T::one(),
                d2: T::zero(),
                d3: T::zero(),
            }),
            Link::Reciprocal => {
                if eta == T::zero() {
                    return Err(Error::Domain("reciprocal link undefined at eta = 0".into()));
                }
                let inv = T::one() / eta;
                let inv2 = inv * inv;
                Ok(LinkChain {
                    mu: inv,
                    d1: -inv2,
                    d2: T::real(2.0) * inv2 * inv,
                    d3: -T::real(6.0) * inv2 * inv2,
                })
            }
            Link::ReciprocalSquared => {
                if eta <= T::zero() {
                    return Err(Error::Domain(format!(
                        "reciprocal-squared link requires eta > 0, got {eta}"
                    )));
                }
                // mu = eta^(-1/2)
                let mu = eta.powf(-T::real(0.5));
                let d1 = -T::real(0.5) * eta.powf(-T::real(1.5));
                let d2 = T::real(0.75) * eta.powf(-T::real(2.5));
                let d3 = -T::real(15.0 / 8.0) * eta.powf(-T::real(3.5));
                Ok(LinkChain { mu, d1, d2, d3 })
            }
        }
    }
}

/// Finite-difference oracle used by derivative-chain tests: fourth-order
/// stencils for the first two derivatives, Richardson-extrapolated central
/// differences for the third.
#[cfg(test)]
pub(crate) fn chain_fd(f: impl Fn(f64) -> f64, x: f64, scale: f64) -> (f64, f64, f64) {
    let h1 = 1e-3 * scale;
    let d1 =
        (-f(x + 2.0 * h1) + 8.0 * f(x + h1) - 8.0 * f(x - h1) + f(x - 2.0 * h1)) / (12.0 * h1);
    let h2 = 2e-3 * scale;
    let d2 = (-f(x + 2.0 * h2) + 16.0 * f(x + h2) - 30.0 * f(x) + 16.0 * f(x - h2)
        - f(x - 2.0 * h2))
        / (12.0 * h2 * h2);
    let d3_at = |h: f64| {
        (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h)
    };
    let h3 = 4e-3 * scale;
    let d3 = (4.0 * d3_at(h3 / 2.0) - d3_at(h3)) / 3.0;
    (d1, d2, d3)
}
