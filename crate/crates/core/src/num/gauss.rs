//! Gaussian quadrature rules, generic over the scalar.
//!
//! Nodes are located by Newton's method on the classical three-term
//! recurrences, starting from f64-quality asymptotic guesses and polished in
//! the target scalar type, so the rules are accurate to working precision
//! for double-double as well.

use super::real::Real;

/// Legendre P_n and P_{n-1} at x.
fn legendre_pair<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    if n == 0 {
        return (p0, T::zero());
    }
    let mut p1 = x;
    for k in 1..n {
        let k_ = k as i64;
        let next = (T::from_i(2 * k_ + 1) * x * p1 - T::from_i(k_) * p0) / T::from_i(k_ + 1);
        p0 = p1;
        p1 = next;
    }
    (p1, p0)
}

/// Gauss–Legendre rule on [-1, 1]: exact through degree 2n-1.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1);
    let mut xs = vec![T::zero(); n];
    let mut ws = vec![T::zero(); n];
    let one = T::one();
    for i in 0..n {
        // Tricomi-style initial guess.
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut x = T::from_f64(guess);
        for _ in 0..40 {
            let (pn, pm) = legendre_pair(n, x);
            let dp = T::from_i(n as i64) * (x * pn - pm) / (x * x - one);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() <= T::eps() * T::from_f64(4.0) * x.abs().max(one) {
                break;
            }
        }
        let (pn, pm) = legendre_pair(n, x);
        let dp = T::from_i(n as i64) * (x * pn - pm) / (x * x - one);
        xs[i] = -x;
        ws[i] = T::from_i(2) / ((one - x * x) * dp * dp);
    }
    (xs, ws)
}

/// Same rule mapped to [a, b].
pub fn gauss_legendre_on<T: Real>(n: usize, a: T, b: T) -> (Vec<T>, Vec<T>) {
    let (xs, ws) = gauss_legendre::<T>(n);
    let half = T::ratio(1, 2);
    let mid = (a + b) * half;
    let rad = (b - a) * half;
    (
        xs.iter().map(|&x| mid + rad * x).collect(),
        ws.iter().map(|&w| w * rad).collect(),
    )
}

/// Laguerre L_n and L_{n-1} at x.
fn laguerre_pair<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    if n == 0 {
        return (p0, T::zero());
    }
    let mut p1 = T::one() - x;
    for k in 1..n {
        let k_ = k as i64;
        let next = ((T::from_i(2 * k_ + 1) - x) * p1 - T::from_i(k_) * p0) / T::from_i(k_ + 1);
        p0 = p1;
        p1 = next;
    }
    (p1, p0)
}

/// Gauss–Laguerre rule for ∫₀^∞ e^{-t} f(t) dt: exact through degree 2n-1.
pub fn gauss_laguerre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1);
    let mut xs = vec![T::zero(); n];
    let mut ws = vec![T::zero(); n];
    let mut z = 0.0f64;
    let mut z_prev2 = 0.0f64;
    for i in 0..n {
        // Stroud–Secrest style marching guesses.
        if i == 0 {
            z = 3.0 / (1.0 + 2.4 * n as f64);
        } else if i == 1 {
            z_prev2 = z;
            z += 15.0 / (1.0 + 2.5 * n as f64);
        } else {
            let ai = (i - 1) as f64;
            let step = ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - z_prev2);
            z_prev2 = z;
            z += step;
        }
        let mut x = T::from_f64(z);
        for _ in 0..60 {
            let (pn, pm) = laguerre_pair(n, x);
            let dp = T::from_i(n as i64) * (pn - pm) / x;
            let dx = pn / dp;
            x -= dx;
            if dx.abs() <= T::eps() * T::from_f64(4.0) * x.abs() {
                break;
            }
        }
        z = x.to_f64();
        let (pn1, _) = laguerre_pair(n + 1, x);
        let np1 = T::from_i(n as i64 + 1);
        xs[i] = x;
        ws[i] = x / (np1 * np1 * pn1 * pn1);
    }
    (xs, ws)
}

/// Gauss–Lobatto–Legendre rule on [-1, 1] with both endpoints included:
/// exact through degree 2n-3.
pub fn gauss_lobatto<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 2);
    let one = T::one();
    let m = n - 1; // interior nodes are roots of P'_m
    let mut xs = vec![T::zero(); n];
    let mut ws = vec![T::zero(); n];
    xs[0] = -one;
    xs[n - 1] = one;
    let endw = T::from_i(2) / T::from_i((n * (n - 1)) as i64);
    ws[0] = endw;
    ws[n - 1] = endw;
    for i in 1..n - 1 {
        // Chebyshev-Lobatto point as the seed (exact only asymptotically,
        // but Newton contracts fast from it).
        let guess = (std::f64::consts::PI * i as f64 / m as f64).cos();
        let mut x = T::from_f64(guess);
        for _ in 0..60 {
            let (pm_, pm1) = legendre_pair(m, x);
            let dp = T::from_i(m as i64) * (x * pm_ - pm1) / (x * x - one);
            // P'' from the Legendre differential equation.
            let ddp = (T::from_i(2) * x * dp - T::from_i((m * (m + 1)) as i64) * pm_)
                / (one - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() <= T::eps() * T::from_f64(4.0) {
                break;
            }
        }
        let (pm_, _) = legendre_pair(m, x);
        xs[n - 1 - i] = x;
        ws[n - 1 - i] = T::from_i(2) / (T::from_i((n * (n - 1)) as i64) * pm_ * pm_);
    }
    xs[m / 2] = if n % 2 == 1 { T::zero() } else { xs[m / 2] };
    (xs, ws)
}

/// Lobatto rule mapped to [a, b].
pub fn gauss_lobatto_on<T: Real>(n: usize, a: T, b: T) -> (Vec<T>, Vec<T>) {
    let (xs, ws) = gauss_lobatto::<T>(n);
    let half = T::ratio(1, 2);
    let mid = (a + b) * half;
    let rad = (b - a) * half;
    (
        xs.iter().map(|&x| mid + rad * x).collect(),
        ws.iter().map(|&w| w * rad).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::dd::Dd;

    fn quad_f64(xs: &[f64], ws: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        xs.iter().zip(ws).map(|(&x, &w)| w * f(x)).sum()
    }

    #[test]
    fn legendre_small_rules_match_closed_forms() {
        let (x, w) = gauss_legendre::<f64>(2);
        let r = 1.0 / 3f64.sqrt();
        assert!((x[0] + r).abs() < 1e-15 && (x[1] - r).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15);
        let (x, _) = gauss_legendre::<f64>(3);
        assert!(x[1].abs() < 1e-15);
        assert!((x[2] - (0.6f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn legendre_exactness_to_degree_2n_minus_1() {
        let (x, w) = gauss_legendre::<f64>(5);
        assert!((quad_f64(&x, &w, |_| 1.0) - 2.0).abs() < 1e-14);
        assert!((quad_f64(&x, &w, |t| t.powi(8)) - 2.0 / 9.0).abs() < 1e-14);
        assert!(quad_f64(&x, &w, |t| t.powi(9)).abs() < 1e-14);
        // degree 10 must NOT be exact for n = 5
        assert!((quad_f64(&x, &w, |t| t.powi(10)) - 2.0 / 11.0).abs() > 1e-6);
    }

    #[test]
    fn legendre_dd_reaches_extended_precision() {
        let (x, w) = gauss_legendre::<Dd>(8);
        let mut s = -Dd::from_f64(2.0);
        let mut m6 = -Dd::ONE / Dd::from_f64(3.5);
        for (xi, wi) in x.iter().zip(&w) {
            s += *wi;
            m6 += *wi * xi.powi(6);
        }
        assert!(s.abs() < Dd::from_f64(1e-30), "sum defect {s:?}");
        assert!(m6.abs() < Dd::from_f64(1e-30), "x^6 defect {m6:?}");
    }

    #[test]
    fn laguerre_moments_are_factorials() {
        let (x, w) = gauss_laguerre::<f64>(12);
        assert!((quad_f64(&x, &w, |_| 1.0) - 1.0).abs() < 1e-13);
        assert!((quad_f64(&x, &w, |t| t.powi(5)) - 120.0).abs() < 1e-10);
        let k17: f64 = (1..=17).map(|v| v as f64).product();
        let got = quad_f64(&x, &w, |t| t.powi(17));
        assert!((got - k17).abs() / k17 < 1e-11, "{got} vs {k17}");
    }

    #[test]
    fn laguerre_large_rule_oscillatory_integral() {
        // ∫₀^∞ e^{-t} cos t dt = 1/2
        let (x, w) = gauss_laguerre::<f64>(64);
        let got = quad_f64(&x, &w, f64::cos);
        assert!((got - 0.5).abs() < 1e-8, "{got}");
    }

    #[test]
    fn laguerre_dd_nodes_refine_beyond_f64() {
        let (x, w) = gauss_laguerre::<Dd>(6);
        // Σ w t = 1 exactly for any rule with n >= 1
        let mut s = -Dd::ONE;
        for (xi, wi) in x.iter().zip(&w) {
            s += *wi * *xi;
        }
        assert!(s.abs() < Dd::from_f64(1e-29), "{s:?}");
    }

    #[test]
    fn lobatto_four_point_closed_form() {
        let (x, w) = gauss_lobatto::<f64>(4);
        let r = (0.2f64).sqrt();
        assert!((x[0] + 1.0).abs() < 1e-15 && (x[3] - 1.0).abs() < 1e-15);
        assert!((x[1] + r).abs() < 1e-14 && (x[2] - r).abs() < 1e-14);
        assert!((w[0] - 1.0 / 6.0).abs() < 1e-14);
        assert!((w[1] - 5.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn lobatto_exactness_and_mapped_interval() {
        let (x, w) = gauss_lobatto::<f64>(16);
        assert!((quad_f64(&x, &w, |t| t.powi(28)) - 2.0 / 29.0).abs() < 1e-13);
        let (xm, wm) = gauss_lobatto_on::<f64>(16, 0.0, 1.0);
        assert!((xm[0]).abs() < 1e-15 && (xm[15] - 1.0).abs() < 1e-15);
        let got = xm.iter().zip(&wm).map(|(&x, &w)| w * x * x).sum::<f64>();
        assert!((got - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn legendre_mapped_interval() {
        let (x, w) = gauss_legendre_on::<f64>(20, 0.0, 2.0);
        let got = quad_f64(&x, &w, f64::exp);
        assert!((got - (2f64.exp() - 1.0)).abs() < 1e-13);
    }
}
