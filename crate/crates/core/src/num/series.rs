//! Truncated power series and diagonal Padé approximants over complex
//! scalars, plus small real-series convolution helpers.
//!
//! The resummation pipeline stores series in Borel-transformed form
//! (coefficient k divided by k!) throughout: the raw coefficients of the
//! factorially divergent expansions handled here overflow any fixed-range
//! float near k ≈ 150, while their Borel counterparts grow only
//! geometrically.

use super::cplx::Cplx;
use super::eig;
use super::linalg::{CLu, LinalgError, Matrix};
use super::real::Real;

/// Dense truncated power series Σ c[k] t^k with complex coefficients.
#[derive(Debug, Clone)]
pub struct CSeries<T: Real> {
    pub c: Vec<Cplx<T>>,
}

impl<T: Real> CSeries<T> {
    pub fn zeros(len: usize) -> Self {
        CSeries { c: vec![Cplx::zero(); len] }
    }

    pub fn from_real(r: &[T]) -> Self {
        CSeries { c: r.iter().map(|&x| Cplx::from_re(x)).collect() }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// Truncated Cauchy product, keeping `len` coefficients.
    pub fn mul_trunc(&self, other: &Self, len: usize) -> Self {
        let mut out = CSeries::zeros(len);
        for (i, &a) in self.c.iter().enumerate() {
            if i >= len {
                break;
            }
            if a == Cplx::zero() {
                continue;
            }
            for (j, &b) in other.c.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                out.c[i + j] += a * b;
            }
        }
        out
    }

    pub fn eval(&self, t: Cplx<T>) -> Cplx<T> {
        let mut acc = Cplx::zero();
        for &ck in self.c.iter().rev() {
            acc = acc * t + ck;
        }
        acc
    }
}

/// Truncated product of real coefficient slices, keeping `len` terms.
pub fn real_mul_trunc<T: Real>(a: &[T], b: &[T], len: usize) -> Vec<T> {
    let mut out = vec![T::zero(); len];
    for (i, &ai) in a.iter().enumerate() {
        if i >= len {
            break;
        }
        if ai == T::zero() {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            if i + j >= len {
                break;
            }
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Truncated integer power of a real coefficient slice.
pub fn real_pow_trunc<T: Real>(a: &[T], n: u32, len: usize) -> Vec<T> {
    let mut acc = vec![T::zero(); len];
    if len > 0 {
        acc[0] = T::one();
    }
    let mut base = a.to_vec();
    base.truncate(len);
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            acc = real_mul_trunc(&acc, &base, len);
        }
        k >>= 1;
        if k > 0 {
            base = real_mul_trunc(&base, &base, len);
        }
    }
    acc
}

/// Diagonal Padé approximant P(t)/Q(t) with deg P = deg Q = K, built from
/// the first 2K+1 series coefficients.
#[derive(Debug, Clone)]
pub struct Pade<T: Real> {
    pub num: Vec<Cplx<T>>,
    pub den: Vec<Cplx<T>>,
}

impl<T: Real> Pade<T> {
    /// Fit the [K/K] approximant. The denominator is normalized to Q(0)=1;
    /// its coefficients solve the Toeplitz system matching orders K+1..2K.
    pub fn diagonal(b: &[Cplx<T>], kk: usize) -> Result<Self, LinalgError> {
        assert!(b.len() >= 2 * kk + 1, "need 2K+1 coefficients");
        if kk == 0 {
            return Ok(Pade { num: vec![b[0]], den: vec![Cplx::one()] });
        }
        // Σ_{j=0..K} q_j b_{m-j} = 0 for m = K+1..2K, with q_0 = 1.
        let mut rows = Vec::with_capacity(kk);
        let mut rhs = Vec::with_capacity(kk);
        for m in kk + 1..=2 * kk {
            let row: Vec<Cplx<T>> = (1..=kk).map(|j| b[m - j]).collect();
            rows.push(row);
            rhs.push(-b[m]);
        }
        let lu = CLu::factor(rows)?;
        let q_tail = lu.solve(&rhs);
        let mut den = Vec::with_capacity(kk + 1);
        den.push(Cplx::one());
        den.extend(q_tail);
        let mut num = Vec::with_capacity(kk + 1);
        for m in 0..=kk {
            let mut s = Cplx::zero();
            for j in 0..=m.min(kk) {
                s += den[j] * b[m - j];
            }
            num.push(s);
        }
        Ok(Pade { num, den })
    }

    pub fn eval(&self, t: Cplx<T>) -> Cplx<T> {
        let horner = |c: &[Cplx<T>]| {
            let mut acc = Cplx::zero();
            for &ck in c.iter().rev() {
                acc = acc * t + ck;
            }
            acc
        };
        horner(&self.num) / horner(&self.den)
    }

    /// Denominator roots (pole diagnostic), via the real block embedding of
    /// the complex companion matrix. The embedding reports each pole
    /// together with its complex conjugate; moduli are what matter here.
    pub fn poles_f64(&self) -> Vec<(f64, f64)> {
        // trim trailing near-zero leading coefficients
        let scale = self
            .den
            .iter()
            .map(|c| c.abs().to_f64())
            .fold(0.0f64, f64::max);
        let mut deg = self.den.len() - 1;
        while deg > 0 && self.den[deg].abs().to_f64() < 1e-14 * scale {
            deg -= 1;
        }
        if deg == 0 {
            return Vec::new();
        }
        let lead = Cplx::new(
            T::from_f64(self.den[deg].re.to_f64()),
            T::from_f64(self.den[deg].im.to_f64()),
        );
        let monic: Vec<(f64, f64)> = (0..deg)
            .map(|j| {
                let c = self.den[j] / lead;
                (c.re.to_f64(), c.im.to_f64())
            })
            .collect();
        // companion C (deg x deg) of t^deg + Σ monic[j] t^j, realified 2deg
        let n2 = 2 * deg;
        let mut m = Matrix::<f64>::zeros(n2, n2);
        for i in 1..deg {
            m[(i, i - 1)] = 1.0;
            m[(deg + i, deg + i - 1)] = 1.0;
        }
        // top row C[0][k] = -c_{deg-1-k}; realified as [[Re,-Im],[Im,Re]]
        for col in 0..deg {
            let (re, im) = monic[deg - 1 - col];
            m[(0, col)] = -re;
            m[(0, deg + col)] = im;
            m[(deg, col)] = -im;
            m[(deg, deg + col)] = -re;
        }
        match eig::eigenvalues(&m) {
            Ok(vals) => vals.into_iter().map(|z| (z.re, z.im)).collect(),
            Err(_) => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Cplx<f64>;

    #[test]
    fn real_convolution_binomials() {
        let a = [1.0, 1.0];
        let sq = real_mul_trunc(&a, &a, 3);
        assert_eq!(sq, vec![1.0, 2.0, 1.0]);
        let p5 = real_pow_trunc(&a, 5, 6);
        assert_eq!(p5, vec![1.0, 5.0, 10.0, 10.0, 5.0, 1.0]);
        // truncation drops high orders
        let p5t = real_pow_trunc(&a, 5, 3);
        assert_eq!(p5t, vec![1.0, 5.0, 10.0]);
    }

    #[test]
    fn series_eval_horner() {
        let s = CSeries::from_real(&[1.0, -2.0, 3.0]);
        let t = C::new(0.5, 0.0);
        assert!((s.eval(t).re - (1.0 - 1.0 + 0.75)).abs() < 1e-15);
    }

    #[test]
    fn pade_reproduces_rational_function_exactly() {
        // 1/(1 - t - t^2): Fibonacci coefficients
        let b: Vec<C> = [1.0, 1.0, 2.0, 3.0, 5.0, 8.0, 13.0]
            .iter()
            .map(|&x| C::new(x, 0.0))
            .collect();
        let pade = Pade::diagonal(&b, 2).unwrap();
        assert!((pade.den[1].re + 1.0).abs() < 1e-12);
        assert!((pade.den[2].re + 1.0).abs() < 1e-12);
        let t = C::new(0.3, 0.0);
        let want = 1.0 / (1.0 - 0.3 - 0.09);
        assert!((pade.eval(t).re - want).abs() < 1e-12);
    }

    #[test]
    fn pade_poles_of_fibonacci_generating_function() {
        let b: Vec<C> = [1.0, 1.0, 2.0, 3.0, 5.0, 8.0, 13.0]
            .iter()
            .map(|&x| C::new(x, 0.0))
            .collect();
        let pade = Pade::diagonal(&b, 2).unwrap();
        let poles = pade.poles_f64();
        let phi_inv = 0.6180339887498949;
        let found = poles
            .iter()
            .any(|&(re, im)| (re - phi_inv).abs() < 1e-8 && im.abs() < 1e-8);
        assert!(found, "poles {poles:?}");
        let found_neg = poles
            .iter()
            .any(|&(re, im)| (re + 1.618033988749895).abs() < 1e-7 && im.abs() < 1e-7);
        assert!(found_neg, "poles {poles:?}");
    }

    #[test]
    fn pade_of_exponential_borel_image() {
        // Borel image of Σ k! (-t)^k is 1/(1+t): diagonal Padé of the
        // geometric-with-sign series is exact at K=1.
        let b: Vec<C> = (0..5)
            .map(|k| C::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
            .collect();
        let pade = Pade::diagonal(&b, 1).unwrap();
        for t in [0.1, 1.0, 7.5] {
            let got = pade.eval(C::new(t, 0.0)).re;
            assert!((got - 1.0 / (1.0 + t)).abs() < 1e-13, "t={t}");
        }
    }

    #[test]
    fn pade_exp_series_accuracy() {
        // [3/3] of exp: error ≈ (3!)²/(6!·7!) ≈ 1e-5 at t=1
        let mut b = Vec::new();
        let mut f = 1.0;
        for k in 0..7 {
            if k > 0 {
                f *= k as f64;
            }
            b.push(C::new(1.0 / f, 0.0));
        }
        let pade = Pade::diagonal(&b, 3).unwrap();
        let got = pade.eval(C::new(1.0, 0.0)).re;
        let err = (got - std::f64::consts::E).abs();
        assert!(err < 5e-5, "err {err}");
        // and much better than the truncated Taylor sum itself
        let taylor: f64 = b.iter().map(|c| c.re).sum();
        assert!(err < 0.2 * (taylor - std::f64::consts::E).abs());
    }

    #[test]
    fn complex_coefficient_pade() {
        // series of 1/(1 - i t): coefficients i^k
        let i = C::i();
        let b: Vec<C> = (0..5).map(|k| i.powi(k)).collect();
        let pade = Pade::diagonal(&b, 1).unwrap();
        let t = C::new(0.4, 0.2);
        let want = C::one() / (C::one() - i * t);
        assert!((pade.eval(t) - want).abs() < 1e-13);
    }

    #[test]
    fn series_mul_trunc_matches_polynomial_product() {
        let a = CSeries::from_real(&[1.0, 2.0, 3.0]);
        let b = CSeries::from_real(&[4.0, 5.0]);
        let p = a.mul_trunc(&b, 4);
        let want = [4.0, 13.0, 22.0, 15.0];
        for (got, w) in p.c.iter().zip(want) {
            assert!((got.re - w).abs() < 1e-14);
        }
    }
}
