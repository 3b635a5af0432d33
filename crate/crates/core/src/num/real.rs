//! Scalar arithmetic contract shared by all solvers.
//!
//! Everything numerical in this crate is written against [`Real`] so that a
//! run can be switched between `f64` and the double-double type [`crate::num::Dd`]
//! without touching solver code. The contract is deliberately small: field
//! operations, comparisons, the elementary functions the solvers actually
//! call, and a machine-epsilon query used by step controllers and
//! convergence tests.

use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Real:
    Copy
    + PartialEq
    + PartialOrd
    + Debug
    + Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Short name used in run metadata ("f64" or "dd").
    const NAME: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    /// Exact for integers up to 2^53; used for rational tableau entries.
    fn from_i(n: i64) -> Self {
        Self::from_f64(n as f64)
    }
    fn to_f64(self) -> f64;
    /// Unit roundoff of this representation.
    fn eps() -> Self;
    fn pi() -> Self;

    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin_cos(self) -> (Self, Self);
    fn sin(self) -> Self {
        self.sin_cos().0
    }
    fn cos(self) -> Self {
        self.sin_cos().1
    }
    fn atan2(self, x: Self) -> Self;
    fn floor(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, e: Self) -> Self {
        if self == Self::zero() {
            return Self::zero();
        }
        (self.ln() * e).exp()
    }
    fn is_finite(self) -> bool;

    fn max(self, o: Self) -> Self {
        if self > o {
            self
        } else {
            o
        }
    }
    fn min(self, o: Self) -> Self {
        if self < o {
            self
        } else {
            o
        }
    }
    fn hypot(self, o: Self) -> Self {
        (self * self + o * o).sqrt()
    }
    fn signum_or_zero(self) -> i32 {
        if self > Self::zero() {
            1
        } else if self < Self::zero() {
            -1
        } else {
            0
        }
    }
    /// Exact rational `n/d` in this precision.
    fn ratio(n: i64, d: i64) -> Self {
        Self::from_i(n) / Self::from_i(d)
    }

    /// Round-trippable text form (used when persisting state files so that
    /// extended-precision brackets survive a resume without loss).
    fn encode(self) -> String;
    fn decode(s: &str) -> Option<Self>;
}

impl Real for f64 {
    const NAME: &'static str = "f64";

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn eps() -> Self {
        f64::EPSILON
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }

    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin_cos(self) -> (Self, Self) {
        f64::sin_cos(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn floor(self) -> Self {
        f64::floor(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn powf(self, e: Self) -> Self {
        f64::powf(self, e)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn max(self, o: Self) -> Self {
        f64::max(self, o)
    }
    fn min(self, o: Self) -> Self {
        f64::min(self, o)
    }
    fn hypot(self, o: Self) -> Self {
        f64::hypot(self, o)
    }

    fn encode(self) -> String {
        // `Display` for f64 is the shortest representation that parses back
        // to the same bits.
        format!("{self}")
    }
    fn decode(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}
