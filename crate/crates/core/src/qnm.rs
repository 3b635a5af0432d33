//! Mode spectrum in the characteristic formulation.
//!
//! In the compactified outgoing coordinate the linearized perturbation
//! `v(x) e^{lambda u}` of a static profile satisfies
//!
//! ```text
//! x^2 v'' + 2x v' + 2 lambda v' - c v + W(x) v = 0,    v(1) = 0,
//! ```
//!
//! with `c = (d-3)(d-1)/4` and potential `W(x) = (2p+1) x^alpha f0^{2p}(x)`.
//! The endpoint x = 0 is an essential singularity: one solution behaves like
//! `v ~ 1` (outgoing) and the other like `v ~ e^{2 lambda / x}` (ingoing).
//! Demanding no ingoing admixture turns damped oscillations into genuine
//! eigenfunctions, at the cost of working with the divergent Taylor series of
//! the outgoing solution.  The series is summed either by optimal truncation
//! (enough for growing modes) or by Borel summation: factorially normalized
//! coefficients, diagonal Pade acceleration, and a Laplace integral along a
//! contour lifted off the real axis, averaged over the two lifts.
//!
//! Coefficient storage is factorially normalized throughout (`b_k = a_k/k!`,
//! the Borel image): the raw Taylor coefficients grow like `k! / |2 lambda|^k`
//! and overflow double precision near k = 150, while the normalized ones grow
//! only geometrically.  All recurrences are derived directly in that space.

use std::ops::ControlFlow;

use thiserror::Error;

use crate::model::Params;
use crate::num::cplx::Cplx;
use crate::num::gauss::{gauss_laguerre, gauss_legendre_on};
use crate::num::linalg::LinalgError;
use crate::num::ode::{dop853, OdeError, OdeOpts};
use crate::num::real::Real;
use crate::num::series::Pade;
use crate::statics::{FormalSeries, StaticSolution, StaticsError};

#[derive(Debug, Error)]
pub enum QnmError {
    #[error("rate must be nonzero to define the outgoing series")]
    ZeroRate,
    #[error("static-profile series too shallow: {have} coefficients, need {need}")]
    InsufficientSeries { have: usize, need: usize },
    #[error("series terms increase from the first term at x0 = {x0}: x0 too large for truncation")]
    MonotoneDivergence { x0: f64 },
    #[error("Pade construction failed (singular system; try a smaller order): {source}")]
    PadeFailure {
        #[from]
        source: LinalgError,
    },
    #[error("contour needs a nonzero offset and at least one node per leg")]
    BadContour,
    #[error("mode integration failed near x = {x}: {source}")]
    Integration {
        x: f64,
        #[source]
        source: OdeError,
    },
    #[error("eigenvalue iteration did not converge in {iterations} steps (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error(transparent)]
    Statics(#[from] StaticsError),
}

/// Taylor coefficients of the outgoing solution about x = 0, factorially
/// normalized: `coeffs[k] = a_k / k!`.  Always `coeffs[0] = 1`.
#[derive(Debug, Clone)]
pub struct ModeSeries<T: Real> {
    pub coeffs: Vec<Cplx<T>>,
    pub lambda: Cplx<T>,
    pub k_order: usize,
}

impl<T: Real> ModeSeries<T> {
    /// Wrap externally produced normalized coefficients (test oracles, replay
    /// from files).
    pub fn from_parts(lambda: Cplx<T>, coeffs: Vec<Cplx<T>>, k_order: usize) -> Self {
        ModeSeries { coeffs, lambda, k_order }
    }
}

/// Laplace contour: vertical segment to height epsilon, then a horizontal
/// ray; the sum is averaged over the +epsilon and -epsilon lifts.
#[derive(Debug, Clone, Copy)]
pub struct ContourSpec {
    pub epsilon: f64,
    pub n_leg: usize,
    pub n_lag: usize,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec { epsilon: 1.0, n_leg: 38, n_lag: 128 }
    }
}

impl ContourSpec {
    pub fn new(epsilon: f64, n_leg: usize, n_lag: usize) -> Result<Self, QnmError> {
        if epsilon == 0.0 || n_leg == 0 || n_lag == 0 {
            return Err(QnmError::BadContour);
        }
        Ok(ContourSpec { epsilon, n_leg, n_lag })
    }
}

/// How initial data at x0 is produced from the divergent series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedMethod {
    OptimalTruncation,
    BorelPade,
}

/// Borel-summed value and derivative at x0, with pole diagnostics.
#[derive(Debug, Clone)]
pub struct BorelValue<T: Real> {
    pub value: Cplx<T>,
    pub dvalue: Cplx<T>,
    /// Distance from the nearest Pade pole to the integration contour, in the
    /// Laplace variable.
    pub pole_clearance: f64,
    /// Set when a pole sits close enough to the contour to contaminate the
    /// quadrature; pick a different contour offset in that case.
    pub near_pole: bool,
}

/// A converged eigenvalue with the evidence behind it.
#[derive(Debug, Clone)]
pub struct EigenvalueResult<T: Real> {
    pub lambda: Cplx<T>,
    pub method: SeedMethod,
    /// |v(1)| at the converged rate.
    pub boundary_residual: T,
    pub x0: T,
    /// Matching digits when the whole solve is repeated from a different x0.
    pub digits_stable: i32,
}

#[derive(Debug, Clone)]
pub struct QnmConfig<T: Real> {
    pub x0: T,
    pub k_order: usize,
    pub method: SeedMethod,
    pub contour: ContourSpec,
    pub max_iter: usize,
}

impl<T: Real> Default for QnmConfig<T> {
    fn default() -> Self {
        QnmConfig {
            x0: T::from_f64(0.05),
            k_order: 48,
            method: SeedMethod::BorelPade,
            contour: ContourSpec::default(),
            max_iter: 40,
        }
    }
}

/// Coefficients of the potential `W(x) = (2p+1) x^alpha f0^{2p}`, which by
/// the exponent identity `alpha + 2 p (d-3)/2 = stride` is `x^M` times a
/// power series in x supported on multiples of M = stride.
/// Returns `q` with `W(x) = sum_i q[i] x^{M+i}`.
fn potential_series<T: Real>(
    params: &Params,
    f0: &FormalSeries<T>,
    len: usize,
) -> Result<Vec<T>, QnmError> {
    if f0.g.len() < len {
        return Err(QnmError::InsufficientSeries { have: f0.g.len(), need: len });
    }
    let np = T::from_i(i64::from(2 * params.p() + 1));
    let mut q = crate::num::series::real_pow_trunc(&f0.g, 2 * params.p(), len);
    for c in &mut q {
        *c = *c * np;
    }
    Ok(q)
}

/// Generate the outgoing-solution series to order 2K by the recurrence in
/// factorially normalized form:
///
/// ```text
/// b_{k+1} = -[ (k(k+1) - c) b_k / (k+1)^2
///              + sum_L W_L b_{k-L} (k-L)! / ((k+1)! (k+1)) ] / (2 lambda)
/// ```
///
/// where L runs over the potential lags M, 2M, ...  The factorial ratios are
/// maintained incrementally; once a ratio underflows the corresponding tail
/// is below representable relative size and the sum stops.
pub fn generate_series<T: Real>(
    params: &Params,
    f0: &FormalSeries<T>,
    lambda: Cplx<T>,
    k_order: usize,
) -> Result<ModeSeries<T>, QnmError> {
    if lambda.abs().to_f64() == 0.0 {
        return Err(QnmError::ZeroRate);
    }
    let len = 2 * k_order + 1;
    let drv = params.derived();
    let m = drv.stride as usize;
    let cnu = T::from_i(drv.curvature());
    let q = if len > m { potential_series(params, f0, len - m)? } else { Vec::new() };
    let two_lambda = lambda + lambda;

    let mut b = Vec::with_capacity(len);
    b.push(Cplx::one());
    for k in 0..len - 1 {
        let kk = T::from_i((k * (k + 1)) as i64);
        let kp1 = T::from_i((k + 1) as i64);
        let mut acc = b[k].scale((kk - cnu) / (kp1 * kp1));
        if k >= m {
            let mut lag = m;
            let mut ratio = T::one() / kp1;
            for j in (k - lag + 1)..=(k + 1) {
                ratio = ratio / T::from_i(j as i64);
            }
            loop {
                acc += b[k - lag].scale(q[lag - m] * ratio);
                if lag + m > k || ratio.to_f64() == 0.0 {
                    break;
                }
                for j in (k - lag - m + 1)..=(k - lag) {
                    ratio = ratio / T::from_i(j as i64);
                }
                lag += m;
            }
        }
        b.push(-(acc / two_lambda));
    }
    Ok(ModeSeries { coeffs: b, lambda, k_order })
}

/// Sum the divergent series at x0 by stopping at its smallest term.
/// Returns (value, derivative value, magnitude of the least term).  The
/// derivative series is cut at the same index.
pub fn optimal_truncation<T: Real>(
    series: &ModeSeries<T>,
    x0: T,
) -> Result<(Cplx<T>, Cplx<T>, T), QnmError> {
    // term_k = b_k * k! x0^k; the factor k! x0^k stays representable up to
    // and past the least term for every usable x0.
    let mut fac = T::one();
    let mut best: Option<(usize, T)> = None;
    let mut last_mag: Option<T> = None;
    let mut rising = 0usize;
    let mut terms: Vec<Cplx<T>> = Vec::with_capacity(series.coeffs.len());
    for (k, &bk) in series.coeffs.iter().enumerate() {
        if k > 0 {
            fac = fac * x0 * T::from_i(k as i64);
        }
        let term = bk.scale(fac);
        terms.push(term);
        let mag = term.abs();
        if mag.to_f64() > 0.0 {
            match best {
                Some((_, m)) if !(mag < m) => {}
                _ => best = Some((k, mag)),
            }
            if let Some(prev) = last_mag {
                if mag > prev {
                    rising += 1;
                    if rising >= 4 {
                        break;
                    }
                } else {
                    rising = 0;
                }
            }
            last_mag = Some(mag);
        }
    }
    let (cut, least) = best.ok_or(QnmError::MonotoneDivergence { x0: x0.to_f64() })?;
    if cut == 0 && rising >= 4 {
        return Err(QnmError::MonotoneDivergence { x0: x0.to_f64() });
    }
    let mut value = Cplx::zero();
    let mut dvalue = Cplx::zero();
    for (k, &term) in terms.iter().enumerate().take(cut + 1) {
        value += term;
        dvalue += term.scale(T::from_i(k as i64) / x0);
    }
    Ok((value, dvalue, least))
}

fn pade_of<T: Real>(coeffs: &[Cplx<T>]) -> Result<Pade<T>, QnmError> {
    let kk = (coeffs.len() - 1) / 2;
    Ok(Pade::diagonal(&coeffs[..2 * kk + 1], kk)?)
}

/// Distance from a point to the lifted contour (segment [0, i e] followed by
/// the horizontal ray), in the Laplace variable.
fn contour_distance(re: f64, im: f64, eps: f64) -> f64 {
    let seg = re.hypot(im.clamp(eps.min(0.0), eps.max(0.0)) - im);
    let ray = (-re).max(0.0).hypot(im - eps);
    seg.min(ray)
}

/// Laplace-transform the Pade-accelerated normalized series along the lifted
/// contour, averaged over the two lifts.  `scale` maps the Laplace variable
/// into the series argument (the evaluation point x0).
fn laplace_mean<T: Real>(pade: &Pade<T>, x0: T, contour: &ContourSpec) -> Cplx<T> {
    let eps = T::from_f64(contour.epsilon);
    let (leg_x, leg_w) = gauss_legendre_on(contour.n_leg, T::zero(), eps);
    let (lag_x, lag_w) = gauss_laguerre::<T>(contour.n_lag);
    let mut mean = Cplx::zero();
    for sign in [T::one(), -T::one()] {
        let mut total = Cplx::zero();
        // Vertical leg: t = i sign s, dt = i sign ds, integrand e^{-t} P(t x0).
        for (&s, &w) in leg_x.iter().zip(&leg_w) {
            let t = Cplx::new(T::zero(), sign * s);
            let (sn, c) = (sign * s).sin_cos();
            let e_min_t = Cplx::new(c, -sn);
            total += (Cplx::new(T::zero(), sign * w) * e_min_t) * pade.eval(t.scale(x0));
        }
        // Horizontal ray: t = i eps + s; the weight carries e^{-s}, the
        // constant phase e^{-i eps} comes out front.
        let (sn, c) = (sign * eps).sin_cos();
        let phase = Cplx::new(c, -sn);
        let mut ray = Cplx::zero();
        for (&s, &w) in lag_x.iter().zip(&lag_w) {
            let t = Cplx::new(s, sign * eps);
            ray += pade.eval(t.scale(x0)).scale(w);
        }
        total += phase * ray;
        mean += total.scale(T::from_f64(0.5));
    }
    mean
}

/// Borel-sum the series and its derivative at x0: diagonal Pade of the
/// normalized coefficients, then the averaged contour Laplace integral.
/// Pole positions of the Pade approximant are folded into a clearance
/// diagnostic; a small clearance flags an untrustworthy quadrature.
pub fn borel_pade_eval<T: Real>(
    series: &ModeSeries<T>,
    x0: T,
    contour: &ContourSpec,
) -> Result<BorelValue<T>, QnmError> {
    if contour.epsilon == 0.0 || contour.n_leg == 0 || contour.n_lag == 0 {
        return Err(QnmError::BadContour);
    }
    let pade = pade_of(&series.coeffs)?;
    // Derivative series sum k a_k x^{k-1}: shifted coefficients
    // a'_k = (k+1) a_{k+1}, i.e. b'_k = (k+1)^2 b_{k+1} in normalized form.
    let dcoeffs: Vec<Cplx<T>> = series
        .coeffs
        .iter()
        .skip(1)
        .enumerate()
        .map(|(k, &b)| {
            let kp1 = T::from_i((k + 1) as i64);
            b.scale(kp1 * kp1)
        })
        .collect();
    let dpade = pade_of(&dcoeffs)?;

    let value = laplace_mean(&pade, x0, contour);
    let dvalue = laplace_mean(&dpade, x0, contour);

    let x0f = x0.to_f64();
    let mut clearance = f64::INFINITY;
    let mut near = false;
    for (zre, zim) in pade.poles_f64() {
        // Poles live in the series argument; the contour in the Laplace
        // variable sees them at z / x0.
        let (tre, tim) = (zre / x0f, zim / x0f);
        let d = contour_distance(tre, tim, contour.epsilon)
            .min(contour_distance(tre, tim, -contour.epsilon));
        if d < clearance {
            clearance = d;
            near = d < 0.05 * (1.0 + tre.hypot(tim));
        }
    }
    Ok(BorelValue { value, dvalue, pole_clearance: clearance, near_pole: near })
}

/// Integrate the mode equation from initial data (v, v') at x0 out to the
/// boundary; returns v(1).
pub fn shoot<T: Real>(
    sol: &StaticSolution<T>,
    lambda: Cplx<T>,
    x0: T,
    v0: Cplx<T>,
    dv0: Cplx<T>,
) -> Result<Cplx<T>, QnmError> {
    let params = sol.params();
    let drv = params.derived();
    let cnu = T::from_i(drv.curvature());
    let np = T::from_i(i64::from(2 * params.p() + 1));
    let twop = i32::try_from(2 * params.p()).unwrap();
    let two = T::from_i(2);
    let two_lam = lambda + lambda;

    let eps = T::eps().to_f64();
    let rtol = eps.powf(0.8);
    let mut opts = OdeOpts::<T>::tol(rtol, rtol * 1e-2);
    opts.max_steps = 4_000_000;

    let y0 = [v0.re, v0.im, dv0.re, dv0.im];
    let mut last = y0;
    dop853(
        |x: T, y: &[T], dy: &mut [T]| {
            let s = -(x.ln());
            let (h, _, _) = sol.h_state(s);
            let w = np * h.powi(twop);
            let v = Cplx::new(y[0], y[1]);
            let vp = Cplx::new(y[2], y[3]);
            let coef = Cplx::new(two * x + two_lam.re, two_lam.im);
            let vpp = (v.scale(cnu - w) - coef * vp).scale(T::one() / (x * x));
            dy[0] = y[2];
            dy[1] = y[3];
            dy[2] = vpp.re;
            dy[3] = vpp.im;
        },
        x0,
        &y0,
        T::one(),
        &opts,
        |_, y| {
            last = [y[0], y[1], y[2], y[3]];
            ControlFlow::Continue(())
        },
    )
    .map_err(|e| {
        let x = match e {
            OdeError::StepUnderflow { t } | OdeError::MaxSteps { t, .. } | OdeError::NonFinite { t } => t,
        };
        QnmError::Integration { x, source: e }
    })?;
    Ok(Cplx::new(last[0], last[1]))
}

/// Boundary value v(1) for a trial rate: series, seed at x0 by the chosen
/// method, shoot to the boundary.
fn boundary_value<T: Real>(
    sol: &StaticSolution<T>,
    f0: &FormalSeries<T>,
    lambda: Cplx<T>,
    x0: T,
    cfg: &QnmConfig<T>,
) -> Result<Cplx<T>, QnmError> {
    let series = generate_series(sol.params(), f0, lambda, cfg.k_order)?;
    let (v0, dv0) = match cfg.method {
        SeedMethod::OptimalTruncation => {
            let (v, dv, _) = optimal_truncation(&series, x0)?;
            (v, dv)
        }
        SeedMethod::BorelPade => {
            let bp = borel_pade_eval(&series, x0, &cfg.contour)?;
            (bp.value, bp.dvalue)
        }
    };
    shoot(sol, lambda, x0, v0, dv0)
}

fn newton_from<T: Real>(
    sol: &StaticSolution<T>,
    f0: &FormalSeries<T>,
    guess: Cplx<T>,
    x0: T,
    cfg: &QnmConfig<T>,
) -> Result<(Cplx<T>, T), QnmError> {
    let tol = T::from_f64(T::eps().to_f64().powf(0.75));
    // Damped modes have a residual noise floor: seed error rides the
    // exponentially growing second solution on the way out.  Newton then
    // jitters around the root instead of contracting, so a tiny residual
    // that stops improving counts as converged (at its noise level), while
    // a stalled large residual is a genuine failure.
    let noise_accept = 1e-6;
    let mut lam = guess;
    let mut residual = T::from_f64(f64::INFINITY);
    let mut best: Option<(Cplx<T>, T)> = None;
    let mut no_improve = 0usize;
    for it in 0..cfg.max_iter {
        let f = boundary_value(sol, f0, lam, x0, cfg)?;
        residual = f.abs();
        match &mut best {
            Some((b_lam, b_res)) => {
                if residual < *b_res {
                    *b_lam = lam;
                    *b_res = residual;
                    no_improve = 0;
                } else {
                    no_improve += 1;
                }
            }
            None => best = Some((lam, residual)),
        }
        if let Some((b_lam, b_res)) = best {
            if no_improve >= 4 && b_res.to_f64() < noise_accept {
                return Ok((b_lam, b_res));
            }
            if no_improve >= 8 {
                return Err(QnmError::NoConvergence { iterations: it, residual: b_res.to_f64() });
            }
        }
        let h = T::from_f64(1e-7) * lam.abs().max(T::one());
        let fr = boundary_value(sol, f0, lam + Cplx::from_re(h), x0, cfg)?;
        let fi = boundary_value(sol, f0, lam + Cplx::new(T::zero(), h), x0, cfg)?;
        let j00 = (fr.re - f.re) / h;
        let j10 = (fr.im - f.im) / h;
        let j01 = (fi.re - f.re) / h;
        let j11 = (fi.im - f.im) / h;
        let det = j00 * j11 - j01 * j10;
        if det.abs().to_f64() == 0.0 {
            return Err(QnmError::NoConvergence { iterations: it, residual: residual.to_f64() });
        }
        let dre = (-f.re * j11 + f.im * j01) / det;
        let dim = (-f.im * j00 + f.re * j10) / det;
        let step = Cplx::new(dre, dim);
        lam += step;
        if step.abs() <= tol * lam.abs().max(T::one()) {
            let f_final = boundary_value(sol, f0, lam, x0, cfg)?;
            return Ok((lam, f_final.abs()));
        }
    }
    if let Some((b_lam, b_res)) = best {
        if b_res.to_f64() < noise_accept {
            return Ok((b_lam, b_res));
        }
    }
    Err(QnmError::NoConvergence { iterations: cfg.max_iter, residual: residual.to_f64() })
}

/// Newton iteration on v(1) = 0 over the complex rate, with a
/// finite-difference Jacobian in the real and imaginary parts.  Stability is
/// measured by re-solving from a shifted starting point: `digits_stable` is
/// the number of agreeing significant digits.
pub fn find_eigenvalue<T: Real>(
    sol: &StaticSolution<T>,
    guess: Cplx<T>,
    cfg: &QnmConfig<T>,
) -> Result<EigenvalueResult<T>, QnmError> {
    let depth = 2 * cfg.k_order + sol.params().derived().stride as usize;
    let f0 = crate::statics::f0_series_coefficients(sol, depth)?;
    let (lambda, boundary_residual) = newton_from(sol, &f0, guess, cfg.x0, cfg)?;
    let shifted_x0 = cfg.x0 * T::from_f64(0.8);
    let (lambda_alt, _) = newton_from(sol, &f0, lambda, shifted_x0, cfg)?;
    let rel = (lambda - lambda_alt).abs().to_f64() / lambda.abs().to_f64().max(1e-300);
    let cap = (-T::eps().to_f64().log10()).floor() as i32;
    let digits_stable = if rel == 0.0 {
        cap
    } else {
        (-rel.log10()).floor().clamp(0.0, f64::from(cap)) as i32
    };
    Ok(EigenvalueResult { lambda, method: cfg.method, boundary_residual, x0: cfg.x0, digits_stable })
}

/// Pade poles of the Borel transform in the Laplace variable at the given
/// x0 — the diagnostic used to pick a contour offset.
pub fn pade_pole_map<T: Real>(series: &ModeSeries<T>, x0: T) -> Result<Vec<(f64, f64)>, QnmError> {
    let pade = pade_of(&series.coeffs)?;
    let x0f = x0.to_f64();
    Ok(pade.poles_f64().into_iter().map(|(re, im)| (re / x0f, im / x0f)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::dd::Dd;
    use crate::statics::find_static;

    fn solution(d: u32, p: u32, n: u32) -> StaticSolution<f64> {
        find_static(&Params::new(d, p).unwrap(), n, None).unwrap()
    }

    /// Plain Taylor-space recurrence, kept deliberately naive as an oracle
    /// for the factorially normalized production path (small k only).
    fn naive_taylor(params: &Params, q: &[f64], lambda: Cplx<f64>, len: usize) -> Vec<Cplx<f64>> {
        let drv = params.derived();
        let m = drv.stride as usize;
        let cnu = drv.curvature() as f64;
        let two_l = lambda + lambda;
        let mut a = vec![Cplx::zero(); len];
        a[0] = Cplx::one();
        for k in 0..len - 1 {
            let mut acc = a[k].scale(k as f64 * (k + 1) as f64 - cnu);
            let mut lag = m;
            while lag <= k {
                acc += a[k - lag].scale(q[lag - m]);
                lag += m;
            }
            a[k + 1] = -(acc / two_l).scale(1.0 / (k + 1) as f64);
        }
        a
    }

    #[test]
    fn series_matches_naive_recurrence_and_closed_forms() {
        // Free equation, d = 5: the series terminates, v = 1 + x / lambda.
        let p5 = Params::new(5, 2).unwrap();
        let lam = Cplx::from_f64s(0.7, 0.0);
        let zero_f0 = FormalSeries { power_offset: 0, g: vec![0.0; 64] };
        let s = generate_series(&p5, &zero_f0, lam, 8).unwrap();
        assert_eq!(s.coeffs[0], Cplx::one());
        assert!((s.coeffs[1] - Cplx::from_f64s(1.0 / 0.7, 0.0)).abs() < 1e-15);
        for k in 2..s.coeffs.len() {
            assert!(s.coeffs[k].abs() < 1e-15, "k = {k}");
        }

        // Free equation, d = 3: v = 1 exactly.
        let p3 = Params::new(3, 3).unwrap();
        let s3 = generate_series(&p3, &zero_f0, Cplx::from_f64s(0.3, 0.2), 8).unwrap();
        for k in 1..s3.coeffs.len() {
            assert!(s3.coeffs[k].abs() < 1e-15, "k = {k}");
        }

        // With a potential: compare against the naive Taylor recurrence.
        let sol = solution(3, 3, 0);
        let f0 = crate::statics::f0_series_coefficients(&sol, 40).unwrap();
        let lam = Cplx::from_f64s(0.41, 0.13);
        let series = generate_series(sol.params(), &f0, lam, 9).unwrap();
        let q = potential_series(sol.params(), &f0, 19 - 4).unwrap();
        let naive = naive_taylor(sol.params(), &q, lam, 19);
        let mut fact = 1.0;
        for k in 0..19 {
            if k > 0 {
                fact *= k as f64;
            }
            let reconstructed = series.coeffs[k].scale(fact);
            assert!(
                (reconstructed - naive[k]).abs() <= 1e-12 * naive[k].abs().max(1.0),
                "k = {k}: {reconstructed:?} vs {:?}",
                naive[k]
            );
        }
    }

    #[test]
    fn series_depth_is_validated() {
        let sol = solution(3, 3, 0);
        let shallow = crate::statics::f0_series_coefficients(&sol, 12).unwrap();
        let err = generate_series(sol.params(), &shallow, Cplx::from_f64s(0.4, 0.0), 64);
        assert!(matches!(err, Err(QnmError::InsufficientSeries { .. })));
    }

    #[test]
    fn truncation_of_convergent_series_sums_fully() {
        // a_k = 1: geometric, sum 2 at x0 = 1/2; decreasing terms all the way
        // so the cut lands on the last term.
        let coeffs: Vec<Cplx<f64>> = (0..=40)
            .map(|k| {
                let mut f = 1.0f64;
                for j in 1..=k {
                    f /= j as f64;
                }
                Cplx::from_re(f)
            })
            .collect();
        let s = ModeSeries::from_parts(Cplx::one(), coeffs, 20);
        let (value, dvalue, err) = optimal_truncation(&s, 0.5).unwrap();
        assert!((value.re - 2.0).abs() < 1e-11);
        // derivative of 1/(1-x) at 1/2 is 4
        assert!((dvalue.re - 4.0).abs() < 1e-9);
        assert!(err < 1e-11);
    }

    #[test]
    fn truncation_stops_at_least_term_of_factorial_series() {
        // a_k = k!: least term of k! x0^k at x0 = 0.05 sits near k = 20.
        let coeffs = vec![Cplx::from_re(1.0f64); 61];
        let s = ModeSeries::from_parts(Cplx::one(), coeffs, 30);
        let (_, _, err) = optimal_truncation(&s, 0.05).unwrap();
        let mut expected = 1.0f64;
        for j in 1..=20 {
            expected *= j as f64 * 0.05;
        }
        assert!(err / expected > 0.3 && err / expected < 3.0, "err {err:.3e} vs {expected:.3e}");

        // x0 far too large: terms grow from the start.
        let coeffs = vec![Cplx::from_re(1.0f64); 61];
        let s = ModeSeries::from_parts(Cplx::one(), coeffs, 30);
        assert!(matches!(
            optimal_truncation(&s, 2.0),
            Err(QnmError::MonotoneDivergence { .. })
        ));
    }

    #[test]
    fn borel_sum_of_convergent_series_is_plain_sum() {
        // a_k = 1 -> normalized coefficients 1/k!; Borel sum at 1/2 is 2.
        // The Borel image e^z is entire, so accuracy is set by how far the
        // Pade approximant tracks it along the damped ray.
        let coeffs: Vec<Cplx<f64>> = (0..=32)
            .map(|k| {
                let mut f = 1.0f64;
                for j in 1..=k {
                    f /= j as f64;
                }
                Cplx::from_re(f)
            })
            .collect();
        let s = ModeSeries::from_parts(Cplx::one(), coeffs, 16);
        let bp = borel_pade_eval(&s, 0.5, &ContourSpec::default()).unwrap();
        assert!((bp.value.re - 2.0).abs() < 1e-8, "value {:?}", bp.value);
        assert!(bp.value.im.abs() < 1e-8);
        assert!((bp.dvalue.re - 4.0).abs() < 1e-6);
    }

    #[test]
    fn borel_sum_of_euler_series() {
        // a_k = (-1)^k k!: the classical alternating-factorial series; its
        // Borel sum at 1 is e * E1(1).  The Borel image is exactly 1/(1+z),
        // so the [1/1] Pade is exact and the only error is quadrature.
        let euler_sum = 0.596_347_362_323_194_1_f64;
        let coeffs =
            vec![Cplx::from_re(1.0f64), Cplx::from_re(-1.0), Cplx::from_re(1.0)];
        let s = ModeSeries::from_parts(Cplx::one(), coeffs, 1);
        let bp = borel_pade_eval(&s, 1.0, &ContourSpec::default()).unwrap();
        assert!((bp.value.re - euler_sum).abs() < 1e-9, "value {:?}", bp.value);
        assert!(bp.value.im.abs() < 1e-9);

        // Contour-offset independence away from poles.
        let wide = ContourSpec { epsilon: 2.0, ..ContourSpec::default() };
        let bp2 = borel_pade_eval(&s, 1.0, &wide).unwrap();
        assert!((bp.value - bp2.value).abs() < 1e-8);

        // The lone Borel-plane pole sits at -1/x0 = -1, one unit from the
        // contour origin.
        assert!(!bp.near_pole);
        assert!((bp.pole_clearance - 1.0).abs() < 0.1);

        // Higher orders make the Pade system for an exactly rational
        // transform singular; the error asks for a smaller order.
        let long: Vec<Cplx<f64>> =
            (0..=32).map(|k| Cplx::from_re(if k % 2 == 0 { 1.0 } else { -1.0 })).collect();
        let s_long = ModeSeries::from_parts(Cplx::one(), long, 16);
        assert!(matches!(
            borel_pade_eval(&s_long, 1.0, &ContourSpec::default()),
            Err(QnmError::PadeFailure { .. })
        ));
    }

    #[test]
    fn dd_euler_series_matches_double_to_roundoff() {
        let coeffs_f = vec![Cplx::from_re(1.0f64), Cplx::from_re(-1.0), Cplx::from_re(1.0)];
        let bp_f = borel_pade_eval(
            &ModeSeries::from_parts(Cplx::one(), coeffs_f, 1),
            1.0,
            &ContourSpec::default(),
        )
        .unwrap();
        let coeffs_d = vec![
            Cplx::from_re(Dd::one()),
            Cplx::from_re(-Dd::one()),
            Cplx::from_re(Dd::one()),
        ];
        let bp_d = borel_pade_eval(
            &ModeSeries::from_parts(Cplx::from_re(Dd::one()), coeffs_d, 1),
            Dd::one(),
            &ContourSpec::default(),
        )
        .unwrap();
        // Same nodes, same exact rational transform: the two precisions can
        // only differ by double-precision roundoff.
        let diff = (bp_d.value.re.to_f64() - bp_f.value.re).abs();
        assert!(diff < 1e-12, "diff {diff:.3e}");
        assert!((bp_d.value.re.to_f64() - 0.596_347_362_323_194_1).abs() < 1e-9);
    }

    #[test]
    fn growing_mode_rate_from_both_seeds() {
        let sol = solution(3, 3, 0);
        let guess = Cplx::from_f64s(0.43, 0.0);
        let ot = QnmConfig { method: SeedMethod::OptimalTruncation, k_order: 24, ..QnmConfig::default() };
        let bp = QnmConfig { k_order: 32, ..QnmConfig::default() };
        let res_ot = find_eigenvalue(&sol, guess, &ot).unwrap();
        let res_bp = find_eigenvalue(&sol, guess, &bp).unwrap();
        for res in [&res_ot, &res_bp] {
            assert!((res.lambda.re - 0.4376132).abs() < 1e-7, "lambda {:?}", res.lambda);
            assert!(res.lambda.im.abs() < 1e-8);
            assert!(res.boundary_residual < 1e-8);
            assert!(res.digits_stable >= 6, "digits {}", res.digits_stable);
        }
        let diff = (res_ot.lambda - res_bp.lambda).abs() / res_bp.lambda.abs();
        assert!(diff < 5e-7, "seed-method disagreement {diff:.3e}");
    }

    #[test]
    fn truncation_error_shrinks_with_x0() {
        // Least term ~ exp(-|2 lambda| / x0): moving the seed point inward
        // buys accuracy exponentially until roundoff.
        let sol = solution(3, 3, 0);
        let f0 = crate::statics::f0_series_coefficients(&sol, 70).unwrap();
        let series =
            generate_series(sol.params(), &f0, Cplx::from_f64s(0.4376132, 0.0), 32).unwrap();
        let (_, _, err_far) = optimal_truncation(&series, 0.05).unwrap();
        let (v_near, _, err_near) = optimal_truncation(&series, 0.02).unwrap();
        assert!(err_far < 1e-5, "least term at 0.05: {err_far:.3e}");
        assert!(err_near < 1e-13, "least term at 0.02: {err_near:.3e}");

        // At the tighter seed point the truncated sum agrees with the Borel
        // sum to quadrature accuracy.
        let bp = borel_pade_eval(&series, 0.02, &ContourSpec::default()).unwrap();
        assert!((v_near - bp.value).abs() < 1e-9, "{v_near:?} vs {:?}", bp.value);
    }

    #[test]
    fn damped_complex_pair_d5() {
        let sol = solution(5, 2, 0);
        // The Borel singularity sits at -2 lambda ~ 1.19 - 0.96i, almost on
        // the default offset-1 ray; push the contour to offset 2.
        let contour = ContourSpec { epsilon: 2.0, ..ContourSpec::default() };
        // Integration roundoff rides the growing second solution, so the
        // seed point must not sit too deep: x0 = 0.1 keeps the
        // amplification factor exp(2|Re lambda|(1/x0 - 1)) near 4e4.
        let cfg = QnmConfig { x0: 0.1, k_order: 40, contour, ..QnmConfig::default() };
        let res = find_eigenvalue(&sol, Cplx::from_f64s(-0.6, 0.5), &cfg).unwrap();
        assert!((res.lambda.re + 0.5943277).abs() < 2e-7, "lambda {:?}", res.lambda);
        assert!((res.lambda.im - 0.4789266).abs() < 2e-7, "lambda {:?}", res.lambda);
        assert!(res.digits_stable >= 6);

        // Conjugation symmetry: the mirrored guess converges to the mirror.
        let res_c = find_eigenvalue(&sol, Cplx::from_f64s(-0.6, -0.5), &cfg).unwrap();
        assert!((res_c.lambda - res.lambda.conj()).abs() < 1e-7);
    }

    #[test]
    fn off_eigenvalue_boundary_value_is_order_one() {
        let sol = solution(3, 3, 0);
        let f0 = crate::statics::f0_series_coefficients(&sol, 70).unwrap();
        let cfg = QnmConfig { k_order: 24, ..QnmConfig::<f64>::default() };
        let v1 = boundary_value(&sol, &f0, Cplx::from_f64s(1.0, 1.0), cfg.x0, &cfg).unwrap();
        assert!(v1.abs() > 1e-2, "|v(1)| = {:.3e}", v1.abs());
    }

    #[test]
    fn seed_is_independent_of_x0_near_eigenvalue() {
        let sol = solution(3, 3, 0);
        let f0 = crate::statics::f0_series_coefficients(&sol, 70).unwrap();
        let lam = Cplx::from_f64s(0.4376132, 0.0);
        let cfg = QnmConfig { k_order: 32, ..QnmConfig::default() };
        let v_a = boundary_value(&sol, &f0, lam, 0.05, &cfg).unwrap();
        let v_b = boundary_value(&sol, &f0, lam, 0.025, &cfg).unwrap();
        assert!((v_a - v_b).abs() < 1e-9, "{v_a:?} vs {v_b:?}");
    }

    #[test]
    fn contour_validation() {
        assert!(ContourSpec::new(0.0, 38, 128).is_err());
        assert!(ContourSpec::new(1.0, 0, 128).is_err());
        let coeffs = vec![Cplx::from_re(1.0f64); 9];
        let s = ModeSeries::from_parts(Cplx::one(), coeffs, 4);
        let bad = ContourSpec { epsilon: 0.0, n_leg: 38, n_lag: 128 };
        assert!(matches!(borel_pade_eval(&s, 0.5, &bad), Err(QnmError::BadContour)));
    }
}
