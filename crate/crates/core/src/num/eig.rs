//! Dense nonsymmetric eigendecomposition: radix-2 balancing, Householder
//! reduction to Hessenberg form, and the shifted double-QR iteration with
//! eigenvector back-substitution (the classical Wilkinson/EISPACK chain).
//!
//! Generic over the scalar so the same code delivers double-double spectra;
//! deflation thresholds scale with the working epsilon.

use super::cplx::Cplx;
use super::linalg::Matrix;
use super::real::Real;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EigError {
    #[error("QR iteration failed to converge for eigenvalue index {0}")]
    NoConvergence(usize),
}

/// Eigenvalues and (optionally packed complex) eigenvectors of a real
/// matrix.
///
/// Columns of `vectors` follow the packed convention: a real eigenvalue owns
/// one real column; a complex-conjugate pair (im[j] > 0 > im[j+1]) stores
/// the real part in column j and the imaginary part in column j+1.
#[derive(Debug, Clone)]
pub struct Eig<T> {
    pub re: Vec<T>,
    pub im: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Real> Eig<T> {
    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn value(&self, j: usize) -> Cplx<T> {
        Cplx::new(self.re[j], self.im[j])
    }

    pub fn values(&self) -> Vec<Cplx<T>> {
        (0..self.len()).map(|j| self.value(j)).collect()
    }

    /// Unpack the eigenvector for eigenvalue index j.
    pub fn vector(&self, j: usize) -> Vec<Cplx<T>> {
        let n = self.len();
        (0..n)
            .map(|i| {
                if self.im[j] > T::zero() {
                    Cplx::new(self.vectors[(i, j)], self.vectors[(i, j + 1)])
                } else if self.im[j] < T::zero() {
                    Cplx::new(self.vectors[(i, j - 1)], -self.vectors[(i, j)])
                } else {
                    Cplx::from_re(self.vectors[(i, j)])
                }
            })
            .collect()
    }
}

/// Balance via diagonal radix-2 similarity so row and column norms agree;
/// returns the scale factors to be reapplied to eigenvectors.
fn balance<T: Real>(a: &mut Matrix<T>) -> Vec<T> {
    let n = a.rows();
    let mut scale = vec![T::one(); n];
    let radix = T::from_f64(2.0);
    let sqrdx = radix * radix;
    let thresh = T::from_f64(0.95);
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = T::zero();
            let mut r = T::zero();
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != T::zero() && r != T::zero() {
                let mut f = T::one();
                let s = c + r;
                let mut cc = c;
                let mut g = r / radix;
                while cc < g {
                    f *= radix;
                    cc *= sqrdx;
                }
                g = r * radix;
                while cc > g {
                    f /= radix;
                    cc /= sqrdx;
                }
                if (cc + r) / f < thresh * s {
                    done = false;
                    let ginv = T::one() / f;
                    scale[i] *= f;
                    for j in 0..n {
                        a[(i, j)] *= ginv;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
        if done {
            return scale;
        }
    }
}

/// Householder reduction to upper Hessenberg form, accumulating the
/// orthogonal transformation into `v`.
fn hessenberg<T: Real>(h: &mut Matrix<T>, v: &mut Matrix<T>) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![T::zero(); n];
    for m in 1..high {
        let mut sc = T::zero();
        for i in m..=high {
            sc += h[(i, m - 1)].abs();
        }
        if sc == T::zero() {
            continue;
        }
        let mut hh = T::zero();
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / sc;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > T::zero() {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;
        for j in m..n {
            let mut f = T::zero();
            for i in (m..=high).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= hh;
            for i in m..=high {
                let oi = ort[i];
                h[(i, j)] -= f * oi;
            }
        }
        for i in 0..=high {
            let mut f = T::zero();
            for j in (m..=high).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= hh;
            for j in m..=high {
                let oj = ort[j];
                h[(i, j)] -= f * oj;
            }
        }
        ort[m] *= sc;
        h[(m, m - 1)] = sc * g;
    }
    for i in 0..n {
        for j in 0..n {
            v[(i, j)] = if i == j { T::one() } else { T::zero() };
        }
    }
    for m in (1..high).rev() {
        if h[(m, m - 1)] != T::zero() {
            for i in m + 1..=high {
                ort[i] = h[(i, m - 1)];
            }
            for j in m..=high {
                let mut g = T::zero();
                for i in m..=high {
                    g += ort[i] * v[(i, j)];
                }
                // double division avoids underflow
                g = (g / ort[m]) / h[(m, m - 1)];
                for i in m..=high {
                    let oi = ort[i];
                    v[(i, j)] += g * oi;
                }
            }
        }
    }
}

fn cdiv<T: Real>(xr: T, xi: T, yr: T, yi: T) -> (T, T) {
    let q = Cplx::new(xr, xi) / Cplx::new(yr, yi);
    (q.re, q.im)
}

/// Shifted double-QR on a Hessenberg matrix, then eigenvector
/// back-substitution, accumulating into `v`.
#[allow(clippy::too_many_lines, unused_assignments)]
fn hqr2<T: Real>(
    h: &mut Matrix<T>,
    v: &mut Matrix<T>,
    d: &mut [T],
    e: &mut [T],
) -> Result<(), EigError> {
    let nn = h.rows();
    if nn == 0 {
        return Ok(());
    }
    let mut n = nn - 1;
    let eps = T::eps();
    let mut exshift = T::zero();
    let mut p = T::zero();
    let mut q = T::zero();
    let mut r = T::zero();
    let mut s = T::zero();
    let mut z = T::zero();
    let mut t;
    let mut w;
    let mut x;
    let mut y;

    let mut norm = T::zero();
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }

    let mut iter = 0usize;
    loop {
        // find a negligible subdiagonal element
        let mut l = n;
        while l > 0 {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == T::zero() {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // one root found
            h[(n, n)] += exshift;
            d[n] = h[(n, n)];
            e[n] = T::zero();
            if n == 0 {
                break;
            }
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // two roots found
            w = h[(n, n - 1)] * h[(n - 1, n)];
            p = (h[(n - 1, n - 1)] - h[(n, n)]) / T::from_f64(2.0);
            q = p * p + w;
            z = q.abs().sqrt();
            h[(n, n)] += exshift;
            h[(n - 1, n - 1)] += exshift;
            x = h[(n, n)];
            if q >= T::zero() {
                // real pair
                z = if p >= T::zero() { p + z } else { p - z };
                d[n - 1] = x + z;
                d[n] = d[n - 1];
                if z != T::zero() {
                    d[n] = x - w / z;
                }
                e[n - 1] = T::zero();
                e[n] = T::zero();
                x = h[(n, n - 1)];
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p /= r;
                q /= r;
                for j in n - 1..nn {
                    z = h[(n - 1, j)];
                    h[(n - 1, j)] = q * z + p * h[(n, j)];
                    h[(n, j)] = q * h[(n, j)] - p * z;
                }
                for i in 0..=n {
                    z = h[(i, n - 1)];
                    h[(i, n - 1)] = q * z + p * h[(i, n)];
                    h[(i, n)] = q * h[(i, n)] - p * z;
                }
                for i in 0..nn {
                    z = v[(i, n - 1)];
                    v[(i, n - 1)] = q * z + p * v[(i, n)];
                    v[(i, n)] = q * v[(i, n)] - p * z;
                }
            } else {
                // complex pair
                d[n - 1] = x + p;
                d[n] = x + p;
                e[n - 1] = z;
                e[n] = -z;
            }
            if n < 2 {
                break;
            }
            n -= 2;
            iter = 0;
        } else {
            // form shift
            x = h[(n, n)];
            y = T::zero();
            w = T::zero();
            if l < n {
                y = h[(n - 1, n - 1)];
                w = h[(n, n - 1)] * h[(n - 1, n)];
            }
            if iter == 10 || iter == 40 {
                // exceptional ad hoc shift
                exshift += x;
                for i in 0..=n {
                    h[(i, i)] -= x;
                }
                s = h[(n, n - 1)].abs() + h[(n - 1, n - 2)].abs();
                x = T::from_f64(0.75) * s;
                y = x;
                w = T::from_f64(-0.4375) * s * s;
            }
            if iter == 30 || iter == 60 {
                // alternative exceptional shift
                s = (y - x) / T::from_f64(2.0);
                s = s * s + w;
                if s > T::zero() {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / T::from_f64(2.0) + s);
                    for i in 0..=n {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = T::from_f64(0.964);
                    y = x;
                    w = x;
                }
            }
            if iter > 80 {
                return Err(EigError::NoConvergence(n));
            }
            iter += 1;

            // two consecutive small subdiagonals?
            let mut m = n - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let lhs = h[(m, m - 1)].abs() * (q.abs() + r.abs());
                let rhs = eps
                    * p.abs()
                    * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs());
                if lhs < rhs {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=n {
                h[(i, i - 2)] = T::zero();
                if i > m + 2 {
                    h[(i, i - 3)] = T::zero();
                }
            }

            // double QR sweep over rows l..=n, columns m..=n
            for kk in m..n {
                let notlast = kk != n - 1;
                if kk != m {
                    p = h[(kk, kk - 1)];
                    q = h[(kk + 1, kk - 1)];
                    r = if notlast { h[(kk + 2, kk - 1)] } else { T::zero() };
                    x = p.abs() + q.abs() + r.abs();
                    if x == T::zero() {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < T::zero() {
                    s = -s;
                }
                if s != T::zero() {
                    if kk != m {
                        h[(kk, kk - 1)] = -s * x;
                    } else if l != m {
                        h[(kk, kk - 1)] = -h[(kk, kk - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in kk..nn {
                        p = h[(kk, j)] + q * h[(kk + 1, j)];
                        if notlast {
                            p += r * h[(kk + 2, j)];
                            h[(kk + 2, j)] -= p * z;
                        }
                        h[(kk, j)] -= p * x;
                        h[(kk + 1, j)] -= p * y;
                    }
                    for i in 0..=n.min(kk + 3) {
                        p = x * h[(i, kk)] + y * h[(i, kk + 1)];
                        if notlast {
                            p += z * h[(i, kk + 2)];
                            h[(i, kk + 2)] -= p * r;
                        }
                        h[(i, kk)] -= p;
                        h[(i, kk + 1)] -= p * q;
                    }
                    for i in 0..nn {
                        p = x * v[(i, kk)] + y * v[(i, kk + 1)];
                        if notlast {
                            p += z * v[(i, kk + 2)];
                            v[(i, kk + 2)] -= p * r;
                        }
                        v[(i, kk)] -= p;
                        v[(i, kk + 1)] -= p * q;
                    }
                }
            }
        }
    }

    // back-substitution for eigenvectors of the triangular form
    if norm == T::zero() {
        return Ok(());
    }
    for n in (0..nn).rev() {
        p = d[n];
        q = e[n];
        if q == T::zero() {
            // real vector
            let mut l = n;
            h[(n, n)] = T::one();
            for i in (0..n).rev() {
                w = h[(i, i)] - p;
                r = T::zero();
                for j in l..=n {
                    r += h[(i, j)] * h[(j, n)];
                }
                if e[i] < T::zero() {
                    z = w;
                    s = r;
                } else {
                    l = i;
                    if e[i] == T::zero() {
                        if w != T::zero() {
                            h[(i, n)] = -r / w;
                        } else {
                            h[(i, n)] = -r / (eps * norm);
                        }
                    } else {
                        x = h[(i, i + 1)];
                        y = h[(i + 1, i)];
                        q = (d[i] - p) * (d[i] - p) + e[i] * e[i];
                        t = (x * s - z * r) / q;
                        h[(i, n)] = t;
                        if x.abs() > z.abs() {
                            h[(i + 1, n)] = (-r - w * t) / x;
                        } else {
                            h[(i + 1, n)] = (-s - y * t) / z;
                        }
                    }
                    // overflow control
                    t = h[(i, n)].abs();
                    if (eps * t) * t > T::one() {
                        for j in i..=n {
                            h[(j, n)] /= t;
                        }
                    }
                }
            }
        } else if q < T::zero() && n > 0 {
            // complex vector (stored across columns n-1, n)
            let mut l = n - 1;
            if h[(n, n - 1)].abs() > h[(n - 1, n)].abs() {
                h[(n - 1, n - 1)] = q / h[(n, n - 1)];
                h[(n - 1, n)] = -(h[(n, n)] - p) / h[(n, n - 1)];
            } else {
                let (cr, ci) = cdiv(T::zero(), -h[(n - 1, n)], h[(n - 1, n - 1)] - p, q);
                h[(n - 1, n - 1)] = cr;
                h[(n - 1, n)] = ci;
            }
            h[(n, n - 1)] = T::zero();
            h[(n, n)] = T::one();
            for i in (0..n.saturating_sub(1)).rev() {
                let mut ra = T::zero();
                let mut sa = T::zero();
                for j in l..=n {
                    ra += h[(i, j)] * h[(j, n - 1)];
                    sa += h[(i, j)] * h[(j, n)];
                }
                w = h[(i, i)] - p;
                if e[i] < T::zero() {
                    z = w;
                    r = ra;
                    s = sa;
                } else {
                    l = i;
                    if e[i] == T::zero() {
                        let (cr, ci) = cdiv(-ra, -sa, w, q);
                        h[(i, n - 1)] = cr;
                        h[(i, n)] = ci;
                    } else {
                        x = h[(i, i + 1)];
                        y = h[(i + 1, i)];
                        let mut vr = (d[i] - p) * (d[i] - p) + e[i] * e[i] - q * q;
                        let vi = (d[i] - p) * T::from_f64(2.0) * q;
                        if vr == T::zero() && vi == T::zero() {
                            vr = eps
                                * norm
                                * (w.abs() + q.abs() + x.abs() + y.abs() + z.abs());
                        }
                        let (cr, ci) =
                            cdiv(x * r - z * ra + q * sa, x * s - z * sa - q * ra, vr, vi);
                        h[(i, n - 1)] = cr;
                        h[(i, n)] = ci;
                        if x.abs() > z.abs() + q.abs() {
                            h[(i + 1, n - 1)] =
                                (-ra - w * h[(i, n - 1)] + q * h[(i, n)]) / x;
                            h[(i + 1, n)] = (-sa - w * h[(i, n)] - q * h[(i, n - 1)]) / x;
                        } else {
                            let (cr, ci) =
                                cdiv(-r - y * h[(i, n - 1)], -s - y * h[(i, n)], z, q);
                            h[(i + 1, n - 1)] = cr;
                            h[(i + 1, n)] = ci;
                        }
                    }
                    // overflow control
                    t = h[(i, n - 1)].abs().max(h[(i, n)].abs());
                    if (eps * t) * t > T::one() {
                        for j in i..=n {
                            h[(j, n - 1)] /= t;
                            h[(j, n)] /= t;
                        }
                    }
                }
            }
        }
    }

    // back-transform to eigenvectors of the original (balanced) matrix
    for j in (0..nn).rev() {
        for i in 0..nn {
            z = T::zero();
            for k in 0..=j {
                z += v[(i, k)] * h[(k, j)];
            }
            v[(i, j)] = z;
        }
    }
    Ok(())
}

/// Full eigendecomposition of a general real square matrix.
pub fn eig<T: Real>(a: &Matrix<T>) -> Result<Eig<T>, EigError> {
    assert_eq!(a.rows(), a.cols());
    let n = a.rows();
    let mut h = a.clone();
    let scale = balance(&mut h);
    let mut v = Matrix::identity(n);
    hessenberg(&mut h, &mut v);
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    hqr2(&mut h, &mut v, &mut d, &mut e)?;
    // undo balancing on the vectors
    for i in 0..n {
        for j in 0..n {
            v[(i, j)] *= scale[i];
        }
    }
    Ok(Eig { re: d, im: e, vectors: v })
}

/// Eigenvalues only (same reduction, vectors discarded).
pub fn eigenvalues<T: Real>(a: &Matrix<T>) -> Result<Vec<Cplx<T>>, EigError> {
    Ok(eig(a)?.values())
}
