//! Minimal complex arithmetic generic over the real scalar.

use super::real::Real;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Copy, PartialEq, Default)]
pub struct Cplx<T> {
    pub re: T,
    pub im: T,
}

impl<T: Real> Cplx<T> {
    pub fn new(re: T, im: T) -> Self {
        Cplx { re, im }
    }

    pub fn zero() -> Self {
        Cplx { re: T::zero(), im: T::zero() }
    }

    pub fn one() -> Self {
        Cplx { re: T::one(), im: T::zero() }
    }

    pub fn from_re(re: T) -> Self {
        Cplx { re, im: T::zero() }
    }

    pub fn from_f64s(re: f64, im: f64) -> Self {
        Cplx { re: T::from_f64(re), im: T::from_f64(im) }
    }

    pub fn i() -> Self {
        Cplx { re: T::zero(), im: T::one() }
    }

    pub fn conj(self) -> Self {
        Cplx { re: self.re, im: -self.im }
    }

    pub fn norm_sqr(self) -> T {
        self.re * self.re + self.im * self.im
    }

    pub fn abs(self) -> T {
        self.re.hypot(self.im)
    }

    pub fn arg(self) -> T {
        self.im.atan2(self.re)
    }

    pub fn scale(self, s: T) -> Self {
        Cplx { re: self.re * s, im: self.im * s }
    }

    pub fn exp(self) -> Self {
        let r = self.re.exp();
        let (s, c) = self.im.sin_cos();
        Cplx { re: r * c, im: r * s }
    }

    pub fn sqrt(self) -> Self {
        // principal branch
        let m = self.abs();
        if m == T::zero() {
            return Cplx::zero();
        }
        let half = T::ratio(1, 2);
        let re = ((m + self.re) * half).sqrt();
        let im_abs = ((m - self.re) * half).sqrt();
        let im = if self.im < T::zero() { -im_abs } else { im_abs };
        Cplx { re, im }
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Cplx::one();
        }
        let mut base = if n < 0 { Cplx::one() / self } else { self };
        let mut k = n.unsigned_abs();
        let mut acc = Cplx::one();
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base *= base;
            k >>= 1;
        }
        acc
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn to_f64s(self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl<T: Real> Add for Cplx<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Cplx { re: self.re + o.re, im: self.im + o.im }
    }
}

impl<T: Real> Sub for Cplx<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Cplx { re: self.re - o.re, im: self.im - o.im }
    }
}

impl<T: Real> Neg for Cplx<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Cplx { re: -self.re, im: -self.im }
    }
}

impl<T: Real> Mul for Cplx<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Cplx {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

impl<T: Real> Div for Cplx<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        // Smith's algorithm avoids overflow for skewed magnitudes.
        if o.re.abs() >= o.im.abs() {
            let r = o.im / o.re;
            let d = o.re + o.im * r;
            Cplx {
                re: (self.re + self.im * r) / d,
                im: (self.im - self.re * r) / d,
            }
        } else {
            let r = o.re / o.im;
            let d = o.re * r + o.im;
            Cplx {
                re: (self.re * r + self.im) / d,
                im: (self.im * r - self.re) / d,
            }
        }
    }
}

impl<T: Real> AddAssign for Cplx<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}
impl<T: Real> SubAssign for Cplx<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}
impl<T: Real> MulAssign for Cplx<T> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}
impl<T: Real> DivAssign for Cplx<T> {
    fn div_assign(&mut self, o: Self) {
        *self = *self / o;
    }
}

impl<T: Real> fmt::Debug for Cplx<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?} {} {:?}i)", self.re, if self.im < T::zero() { "-" } else { "+" }, self.im.abs())
    }
}

impl<T: Real> fmt::Display for Cplx<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}i", self.re, if self.im < T::zero() { "-" } else { "+" }, self.im.abs())
    }
}
