//! Problem parameters and the constants derived from them.
//!
//! The model is a radial focusing wave equation outside the unit ball in
//! `d` spatial dimensions with nonlinearity exponent `2p+1` and a reflecting
//! (Dirichlet) boundary at r = 1. Everything downstream — the autonomous
//! first-order system in the logarithmic radial variable, the linearized
//! potentials, the late-time tail exponents — is controlled by a handful of
//! rational combinations of `d` and `p`, collected here exactly.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::real::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParamError {
    #[error("spatial dimension must be odd and at least 3, got {0}")]
    BadDimension(u32),
    #[error("nonlinearity exponent p must be positive, got {0}")]
    BadExponent(u32),
    #[error("supercriticality requires p (d - 2) > 2, got p = {p}, d = {d}")]
    NotSupercritical { d: u32, p: u32 },
}

/// Validated pair (d, p): odd dimension d >= 3 and p (d - 2) > 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ParamsRaw", into = "ParamsRaw")]
pub struct Params {
    d: u32,
    p: u32,
}

#[derive(Serialize, Deserialize)]
struct ParamsRaw {
    d: u32,
    p: u32,
}

impl TryFrom<ParamsRaw> for Params {
    type Error = ParamError;
    fn try_from(r: ParamsRaw) -> Result<Self, ParamError> {
        Params::new(r.d, r.p)
    }
}

impl From<Params> for ParamsRaw {
    fn from(p: Params) -> Self {
        ParamsRaw { d: p.d, p: p.p }
    }
}

impl Params {
    pub fn new(d: u32, p: u32) -> Result<Self, ParamError> {
        if d < 3 || d % 2 == 0 {
            return Err(ParamError::BadDimension(d));
        }
        if p == 0 {
            return Err(ParamError::BadExponent(p));
        }
        if p * (d - 2) <= 2 {
            return Err(ParamError::NotSupercritical { d, p });
        }
        Ok(Params { d, p })
    }

    pub fn d(self) -> u32 {
        self.d
    }

    pub fn p(self) -> u32 {
        self.p
    }

    /// Nonlinearity power 2p + 1.
    pub fn nonlin_pow(self) -> u32 {
        2 * self.p + 1
    }

    pub fn derived(self) -> DerivedConstants {
        DerivedConstants::new(self)
    }

    pub fn label(self) -> String {
        format!("d{}p{}", self.d, self.p)
    }
}

impl std::fmt::Display for Params {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(d, p) = ({}, {})", self.d, self.p)
    }
}

type Q = Ratio<i64>;

/// Exact rational constants attached to a parameter pair.
///
/// With s = ln r and h = r^{1/p} φ the static profile solves the autonomous
/// equation h'' + γ h' − μ h + h^{2p+1} = 0; λ₋ < 0 < λ₊ are the decay rates
/// of its linearization at the origin. The power-law exponents α and β enter
/// the compactified linear potential and the late-time tail respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivedConstants {
    /// Friction coefficient γ = d − 2 − 2/p.
    pub gamma: Q,
    /// Origin repulsion μ = (1/p)(d − 2 − 1/p).
    pub mu: Q,
    /// Fast decay rate κ = d − 2 − 1/p; equals −λ₋.
    pub kappa: Q,
    /// Potential power α = p(d − 1) − 2 in x^α f^{2p} after compactification.
    pub alpha: i64,
    /// Late-time tail decay exponent β = d − 4 + 2p(d − 2).
    pub beta: i64,
    /// Series stride M = 2 p κ = 2p(d − 2) − 2 (an even integer).
    pub stride: i64,
    /// Index ν = (d − 3)/2 of the flat-space angular operator ν(ν+1)/x².
    pub nu: i64,
}

impl DerivedConstants {
    pub fn new(params: Params) -> Self {
        let d = params.d as i64;
        let p = params.p as i64;
        let gamma = Q::new((d - 2) * p - 2, p);
        let kappa = Q::new((d - 2) * p - 1, p);
        let mu = kappa / Q::from_integer(p);
        DerivedConstants {
            gamma,
            mu,
            kappa,
            alpha: p * (d - 1) - 2,
            beta: d - 4 + 2 * p * (d - 2),
            stride: 2 * p * (d - 2) - 2,
            nu: (d - 3) / 2,
        }
    }

    /// Slow (stable-manifold) rate λ₊ = 1/p > 0; root of λ² + γλ − μ = 0.
    pub fn lambda_plus(&self) -> Q {
        // γ = κ − λ₊ and μ = κ λ₊ make λ₊ = μ/κ exactly.
        self.mu / self.kappa
    }

    /// Fast rate λ₋ = −κ < 0.
    pub fn lambda_minus(&self) -> Q {
        -self.kappa
    }

    /// Curvature coefficient ν(ν + 1) = (d − 3)(d − 1)/4.
    pub fn curvature(&self) -> i64 {
        self.nu * (self.nu + 1)
    }

    /// Amplitude beyond which no trajectory of the autonomous profile
    /// equation can remain bounded: generously above the nonlinear turning
    /// point μ^{1/(2p)}.
    pub fn escape_bound(&self, p: u32) -> f64 {
        let mu = ratio_f64(self.mu);
        10.0 * mu.powf(1.0 / (2.0 * p as f64))
    }
}

pub fn ratio_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

pub fn ratio_t<T: Real>(q: Q) -> T {
    T::ratio(*q.numer(), *q.denom())
}

/// The six parameter pairs exercised throughout the test suites.
pub const STANDARD_PAIRS: [(u32, u32); 6] = [(3, 3), (3, 4), (3, 5), (5, 1), (5, 2), (5, 3)];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_pairs() {
        assert_eq!(Params::new(4, 3).unwrap_err(), ParamError::BadDimension(4));
        assert_eq!(Params::new(1, 3).unwrap_err(), ParamError::BadDimension(1));
        assert_eq!(
            Params::new(3, 2).unwrap_err(),
            ParamError::NotSupercritical { d: 3, p: 2 }
        );
        assert_eq!(Params::new(3, 0).unwrap_err(), ParamError::BadExponent(0));
        assert!(Params::new(3, 3).is_ok());
        assert!(Params::new(5, 1).is_ok());
    }

    #[test]
    fn d3_p3_constants() {
        let c = Params::new(3, 3).unwrap().derived();
        assert_eq!(c.gamma, Q::new(1, 3));
        assert_eq!(c.mu, Q::new(2, 9));
        assert_eq!(c.kappa, Q::new(2, 3));
        assert_eq!(c.lambda_plus(), Q::new(1, 3));
        assert_eq!(c.lambda_minus(), Q::new(-2, 3));
        assert_eq!(c.alpha, 4);
        assert_eq!(c.beta, 5);
        assert_eq!(c.stride, 4);
        assert_eq!(c.nu, 0);
        assert_eq!(c.curvature(), 0);
    }

    #[test]
    fn d5_p2_constants() {
        let c = Params::new(5, 2).unwrap().derived();
        assert_eq!(c.gamma, Q::from_integer(2));
        assert_eq!(c.mu, Q::new(5, 4));
        assert_eq!(c.kappa, Q::new(5, 2));
        assert_eq!(c.lambda_plus(), Q::new(1, 2));
        assert_eq!(c.alpha, 6);
        assert_eq!(c.beta, 13);
        assert_eq!(c.stride, 10);
        assert_eq!(c.nu, 1);
        assert_eq!(c.curvature(), 2);
    }

    #[test]
    fn rate_roots_satisfy_quadratic() {
        for (d, p) in STANDARD_PAIRS {
            let c = Params::new(d, p).unwrap().derived();
            for lam in [c.lambda_plus(), c.lambda_minus()] {
                assert_eq!(lam * lam + c.gamma * lam - c.mu, Q::from_integer(0));
            }
            // λ₊ = 1/p always
            assert_eq!(c.lambda_plus(), Q::new(1, p as i64));
            // stride is 2 p κ and even
            assert_eq!(Q::from_integer(c.stride), Q::from_integer(2 * p as i64) * c.kappa);
            assert_eq!(c.stride % 2, 0);
        }
    }

    #[test]
    fn serde_round_trip_validates() {
        let p: Params = serde_json::from_str(r#"{"d":5,"p":2}"#).unwrap();
        assert_eq!(p, Params::new(5, 2).unwrap());
        assert!(serde_json::from_str::<Params>(r#"{"d":4,"p":2}"#).is_err());
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"d\":5"));
    }
}
