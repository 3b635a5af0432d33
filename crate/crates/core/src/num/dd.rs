//! Double-double arithmetic: an unevaluated sum of two `f64`s giving ~106
//! bits (~31.9 decimal digits) of precision.
//!
//! The error-free transforms follow Dekker and Knuth, with `two_prod` built
//! on the fused multiply-add. Elementary functions use standard range
//! reduction with triple-limb constants followed by short Taylor series, and
//! are accurate to a few units in the last place — comfortably beyond the
//! 30-digit working precision this crate needs. Division and square root are
//! iteratively refined and correct to ~1 ulp.
//!
//! This type exists because the extended-precision paths of the solvers
//! (asymptotic-series resummation, deep threshold bisection) are limited by
//! *arithmetic* precision, not by the accuracy of special functions.

use super::real::Real;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Double-double value. Invariant: `hi = fl(hi + lo)`.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b| (or a == 0)
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    (s, (a - (s - v)) + (b - v))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, f64::mul_add(a, b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (s, e) = two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub const fn from_parts_raw(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }
    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    fn renorm(hi: f64, lo: f64) -> Self {
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn recip(self) -> Self {
        Dd::ONE / self
    }

    pub fn sqr(self) -> Self {
        let (p, mut e) = two_prod(self.hi, self.hi);
        e += 2.0 * self.hi * self.lo;
        e += self.lo * self.lo;
        Dd::renorm(p, e)
    }

    pub fn sqrt(self) -> Self {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        if self.hi < 0.0 {
            return Dd::from_f64(f64::NAN);
        }
        // One Karp-Markstein refinement of the f64 root.
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let axd = Dd::from_f64(ax);
        let err = self - axd.sqr();
        Dd::renorm(ax, err.hi * (x * 0.5))
    }

    pub fn floor(self) -> Self {
        let f = self.hi.floor();
        if f == self.hi {
            Dd::renorm(f, self.lo.floor())
        } else {
            Dd { hi: f, lo: 0.0 }
        }
    }

    pub fn round(self) -> Self {
        (self + Dd::from_f64(0.5)).floor()
    }

    /// Exact scaling by a power of two.
    pub fn ldexp(self, n: i32) -> Self {
        Dd {
            hi: libm_ldexp(self.hi, n),
            lo: libm_ldexp(self.lo, n),
        }
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Dd::ONE;
        }
        let mut base = if n < 0 { self.recip() } else { self };
        let mut k = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base = base.sqr();
            k >>= 1;
        }
        acc
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        // x = k ln2 + r, |r| <= ln2/2, then r scaled down by 2^4 for a short
        // Taylor series and squared back up via t -> 2t + t^2 on e^r - 1.
        let k = (self.hi / LN2_3.0).round();
        let r = ((self - Dd::from_f64(k) * Dd::from_parts_raw(LN2_3.0, LN2_3.1))
            - Dd::from_f64(k * LN2_3.2))
        .ldexp(-4);
        let mut term = r;
        let mut sum = r;
        for j in 2..=16 {
            term *= r / Dd::from_f64(j as f64);
            sum += term;
            if term.hi.abs() < 1e-35 * sum.hi.abs() {
                break;
            }
        }
        // sum = e^(r) - 1 on the reduced argument; square up 4 times.
        for _ in 0..4 {
            sum = sum + sum + sum.sqr();
        }
        (sum + Dd::ONE).ldexp(k as i32)
    }

    pub fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::from_f64(if self.hi == 0.0 { f64::NEG_INFINITY } else { f64::NAN });
        }
        // Newton iterations on exp(y) = x from the f64 seed; each iteration
        // roughly doubles the number of correct digits.
        let mut y = Dd::from_f64(self.hi.ln());
        for _ in 0..2 {
            y += self * (-y).exp() - Dd::ONE;
        }
        y
    }

    pub fn sin_cos(self) -> (Self, Self) {
        if !self.hi.is_finite() {
            return (Dd::from_f64(f64::NAN), Dd::from_f64(f64::NAN));
        }
        // Reduce modulo pi/2 with a triple-limb constant. The arguments this
        // crate produces are O(10^2), so the cancellation loss stays far
        // below working precision.
        let n = (self.hi / PI_2_3.0).round();
        let r = (self - Dd::from_f64(n) * Dd::from_parts_raw(PI_2_3.0, PI_2_3.1))
            - Dd::from_f64(n * PI_2_3.2);
        let (s, c) = sin_cos_reduced(r);
        match (n as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    pub fn atan2(self, x: Dd) -> Dd {
        let y = self;
        if y.hi == 0.0 && x.hi == 0.0 {
            return Dd::ZERO;
        }
        // Rotate (x, y) by the f64 angle, then the residual angle is tiny and
        // its arctangent is given by a two-term series.
        let th0 = y.hi.atan2(x.hi);
        let (s, c) = Dd::from_f64(th0).sin_cos();
        let xr = x * c + y * s;
        let yr = y * c - x * s;
        if xr.hi == 0.0 {
            return Dd::from_f64(th0);
        }
        let d = yr / xr;
        Dd::from_f64(th0) + d - d.powi(3) / Dd::from_f64(3.0)
    }

    /// Decimal rendering with `ndigits` significant digits.
    pub fn to_decimal(self, ndigits: usize) -> String {
        if self.hi == 0.0 {
            return "0".into();
        }
        if !self.hi.is_finite() {
            return format!("{}", self.hi);
        }
        let neg = self.hi < 0.0;
        let mut v = self.abs();
        let mut e10 = v.hi.abs().log10().floor() as i32;
        // normalize into [1, 10)
        v = v / Dd::from_f64(10f64).powi(e10);
        if v.hi >= 10.0 {
            v = v / Dd::from_f64(10.0);
            e10 += 1;
        } else if v.hi < 1.0 {
            v = v * Dd::from_f64(10.0);
            e10 -= 1;
        }
        let mut digits = String::new();
        for i in 0..ndigits {
            let d = v.hi.floor();
            let di = (d as i64).clamp(0, 9);
            digits.push((b'0' + di as u8) as char);
            v = (v - Dd::from_f64(di as f64)) * Dd::from_f64(10.0);
            if i == 0 {
                digits.push('.');
            }
        }
        format!("{}{}e{}", if neg { "-" } else { "" }, digits, e10)
    }
}

fn sin_cos_reduced(r: Dd) -> (Dd, Dd) {
    // |r| <= pi/4 + rounding. Plain Taylor series; ~15 terms reach 1e-34.
    let r2 = r.sqr();
    let mut s = r;
    let mut term = r;
    let mut k = 1.0;
    loop {
        term = -term * r2 / Dd::from_f64((k + 1.0) * (k + 2.0));
        s += term;
        k += 2.0;
        if term.hi.abs() < 1e-36 || k > 40.0 {
            break;
        }
    }
    let mut c = Dd::ONE;
    let mut term = Dd::ONE;
    let mut k = 0.0;
    loop {
        term = -term * r2 / Dd::from_f64((k + 1.0) * (k + 2.0));
        c += term;
        k += 2.0;
        if term.hi.abs() < 1e-36 || k > 40.0 {
            break;
        }
    }
    (s, c)
}

fn libm_ldexp(x: f64, n: i32) -> f64 {
    // Scaling by powers of two, exact over the exponent ranges in use.
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mut r = x;
    let mut n = n;
    while n > 1000 {
        r *= 2f64.powi(1000);
        n -= 1000;
    }
    while n < -1000 {
        r *= 2f64.powi(-1000);
        n += 1000;
    }
    r * 2f64.powi(n)
}

// Triple-limb constants (value = limb0 + limb1 + limb2).
const LN2_3: (f64, f64, f64) = (0.6931471805599453, 2.3190468138462996e-17, 5.707708438416212e-34);
const PI_2_3: (f64, f64, f64) = (1.5707963267948966, 6.123233995736766e-17, -1.4973849048591698e-33);
const PI_DD: Dd = Dd::from_parts_raw(3.141592653589793, 1.2246467991473532e-16);

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Dd::renorm(s1, s2 + t2)
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, o: Dd) -> Dd {
        let (p, mut e) = two_prod(self.hi, o.hi);
        e += self.hi * o.lo + self.lo * o.hi;
        Dd::renorm(p, e)
    }
}

impl Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, o: Dd) -> Dd {
        // Long division with two corrections (accurate variant).
        let q1 = self.hi / o.hi;
        let mut r = self - o * Dd::from_f64(q1);
        let q2 = r.hi / o.hi;
        r -= o * Dd::from_f64(q2);
        let q3 = r.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd::renorm(s, e + q3)
    }
}

impl AddAssign for Dd {
    #[inline]
    fn add_assign(&mut self, o: Dd) {
        *self = *self + o;
    }
}
impl SubAssign for Dd {
    #[inline]
    fn sub_assign(&mut self, o: Dd) {
        *self = *self - o;
    }
}
impl MulAssign for Dd {
    #[inline]
    fn mul_assign(&mut self, o: Dd) {
        *self = *self * o;
    }
}
impl DivAssign for Dd {
    #[inline]
    fn div_assign(&mut self, o: Dd) {
        *self = *self / o;
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e}, {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(32))
    }
}

impl Serialize for Dd {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&Real::encode(*self))
    }
}

impl<'de> Deserialize<'de> for Dd {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Real::decode(&s).ok_or_else(|| serde::de::Error::custom("invalid double-double literal"))
    }
}

impl Real for Dd {
    const NAME: &'static str = "dd";

    fn zero() -> Self {
        Dd::ZERO
    }
    fn one() -> Self {
        Dd::ONE
    }
    fn from_f64(x: f64) -> Self {
        Dd::from_f64(x)
    }
    fn to_f64(self) -> f64 {
        self.hi
    }
    fn eps() -> Self {
        // 2^-104
        Dd::from_f64(4.930380657631324e-32)
    }
    fn pi() -> Self {
        PI_DD
    }

    fn abs(self) -> Self {
        Dd::abs(self)
    }
    fn sqrt(self) -> Self {
        Dd::sqrt(self)
    }
    fn exp(self) -> Self {
        Dd::exp(self)
    }
    fn ln(self) -> Self {
        Dd::ln(self)
    }
    fn sin_cos(self) -> (Self, Self) {
        Dd::sin_cos(self)
    }
    fn atan2(self, x: Self) -> Self {
        Dd::atan2(self, x)
    }
    fn floor(self) -> Self {
        Dd::floor(self)
    }
    fn powi(self, n: i32) -> Self {
        Dd::powi(self, n)
    }
    fn is_finite(self) -> bool {
        self.hi.is_finite()
    }

    fn encode(self) -> String {
        format!("{};{}", self.hi, self.lo)
    }
    fn decode(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once(';') {
            Some(Dd::new(a.trim().parse().ok()?, b.trim().parse().ok()?))
        } else {
            // plain f64 literals promote exactly
            Some(Dd::from_f64(s.parse().ok()?))
        }
    }
}
