//! Static exterior profiles by phase-plane shooting.
//!
//! In logarithmic radius s = ln r with h(s) = r^{1/p} φ(r), the static
//! radial equation becomes the autonomous system
//!
//!     ḧ + γ ḣ − μ h + h^{2p+1} = 0,      (h, ḣ)(0) = (0, b),
//!
//! a damped particle in the double well V(h) = −μh²/2 + h^{2p+2}/(2p+2).
//! The phase-plane origin is a saddle; shooting parameters b_n whose
//! trajectories land on its stable manifold after winding n+1 half turns
//! give the profile with n interior zeros. The terminal decay
//! h ~ c e^{−κs} carries the far-field amplitude c.

use std::ops::ControlFlow;

use crate::model::{ratio_t, Params};
use crate::num::ode::{dop853, OdeError, OdeOpts};
use crate::num::Real;

#[derive(Debug, thiserror::Error)]
pub enum StaticsError {
    #[error("integration failed at s = {s} (last state h = {h:.3e}, hdot = {hdot:.3e})")]
    IntegrationFailure { s: f64, h: f64, hdot: f64 },
    #[error("phase-plane sample at s = {s} sits exactly at the origin before capture")]
    UndefinedAngle { s: f64 },
    #[error("no winding bracket for index {n} in b ∈ [{lo:.3e}, {hi:.3e}]")]
    BracketNotFound { n: u32, lo: f64, hi: f64 },
    #[error("bracket endpoints classify to {lo_class} and {hi_class}, not straddling {want}")]
    BadBracket { lo_class: u32, hi_class: u32, want: u32 },
    #[error("refinement for index {n} stalled: closest approach {closest:.3e} never captured")]
    NonConvergence { n: u32, closest: f64 },
    #[error("asymptotic fit window too small ({found} samples)")]
    FitWindow { found: usize },
    #[error("series check at x = {x:.3e}: series {series:.6e} vs profile {profile:.6e}")]
    SeriesMismatch { x: f64, series: f64, profile: f64 },
}

/// How an integrated trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalFlag {
    /// |h| + |ḣ| fell below the capture tolerance.
    ConvergedToOrigin,
    /// |h| exceeded the escape bound.
    Escaped,
    /// Energy dropped below zero: the trajectory is confined to one well
    /// and can never return to the origin, so its winding is final.
    WellTrapped,
    /// Ran out of the s budget without any other verdict.
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy)]
pub struct TrajectorySample<T> {
    pub s: T,
    pub h: T,
    pub hdot: T,
}

/// Phase-plane trajectory sampled on a uniform s grid.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub samples: Vec<TrajectorySample<T>>,
    pub s_max: T,
    pub terminal: TerminalFlag,
    /// Capture tolerance the run was flagged against.
    pub capture_tol: T,
    /// (s, |h| + |ḣ|) at the closest approach to the origin.
    pub closest_approach: (T, T),
    b: T,
    params: Params,
}

#[derive(Debug, Clone, Copy)]
pub struct FowlerOpts<T> {
    pub rtol: T,
    pub atol: T,
    /// Output stride in s.
    pub ds: T,
    pub s_budget: T,
    pub capture_tol: T,
    /// Energy margin (scaled by 1 + b²) below which the trajectory counts
    /// as trapped in a well.
    pub trap_margin: T,
}

impl<T: Real> Default for FowlerOpts<T> {
    fn default() -> Self {
        FowlerOpts {
            rtol: T::from_f64(1e-12),
            atol: T::from_f64(1e-12),
            ds: T::from_f64(0.01),
            s_budget: T::from_f64(200.0),
            capture_tol: T::from_f64(1e-10),
            trap_margin: T::from_f64(1e-9),
        }
    }
}

/// Coefficients of the phase-plane vector field.
#[derive(Clone, Copy)]
struct FowlerField<T> {
    gamma: T,
    mu: T,
    npow: i32,
}

impl<T: Real> FowlerField<T> {
    fn new(params: &Params) -> Self {
        let d = params.derived();
        FowlerField {
            gamma: ratio_t(d.gamma),
            mu: ratio_t(d.mu),
            npow: (2 * params.p() + 1) as i32,
        }
    }

    fn accel(&self, h: T, hdot: T) -> T {
        self.mu * h - self.gamma * hdot - h.powi(self.npow)
    }

    fn jerk(&self, h: T, hdot: T, hddot: T) -> T {
        self.mu * hdot
            - self.gamma * hddot
            - T::from_i(i64::from(self.npow)) * h.powi(self.npow - 1) * hdot
    }

    fn energy(&self, h: T, hdot: T) -> T {
        let two = T::from_i(2);
        let well = h.powi(self.npow + 1) / T::from_i(i64::from(self.npow) + 1);
        hdot * hdot / two - self.mu * h * h / two + well
    }
}

/// Integrates the phase-plane system from (0, b) until capture, escape,
/// trapping, or the s budget runs out.
pub fn integrate_fowler<T: Real>(
    params: &Params,
    b: T,
    s_budget: T,
) -> Result<Trajectory<T>, StaticsError> {
    let opts = FowlerOpts { s_budget, ..FowlerOpts::default() };
    integrate_fowler_with(params, b, &opts)
}

pub fn integrate_fowler_with<T: Real>(
    params: &Params,
    b: T,
    opts: &FowlerOpts<T>,
) -> Result<Trajectory<T>, StaticsError> {
    let field = FowlerField::new(params);
    let escape = T::from_f64(params.derived().escape_bound(params.p()));
    let margin = opts.trap_margin * (T::one() + b * b);

    let mut samples: Vec<TrajectorySample<T>> = Vec::new();
    let mut flag = TerminalFlag::BudgetExhausted;
    let mut closest = (T::zero(), T::from_f64(f64::INFINITY));

    let ode_opts = OdeOpts::<T> {
        rtol: opts.rtol,
        atol: opts.atol,
        h0: None,
        h_max: None,
        max_steps: 100_000_000,
        grid: Some(opts.ds),
    };
    let res = dop853(
        |_s, y, dy| {
            dy[0] = y[1];
            dy[1] = field.accel(y[0], y[1]);
        },
        T::zero(),
        &[T::zero(), b],
        opts.s_budget,
        &ode_opts,
        |s, y| {
            let (h, hdot) = (y[0], y[1]);
            samples.push(TrajectorySample { s, h, hdot });
            let m = h.abs() + hdot.abs();
            if m < closest.1 {
                closest = (s, m);
            }
            if m < opts.capture_tol {
                flag = TerminalFlag::ConvergedToOrigin;
                return ControlFlow::Break(());
            }
            if h.abs() > escape {
                flag = TerminalFlag::Escaped;
                return ControlFlow::Break(());
            }
            if field.energy(h, hdot) < -margin {
                flag = TerminalFlag::WellTrapped;
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        },
    );
    match res {
        Ok(r) => {
            let s_max = samples.last().map(|smp| smp.s).unwrap_or(r.t);
            Ok(Trajectory {
                samples,
                s_max,
                terminal: flag,
                capture_tol: opts.capture_tol,
                closest_approach: closest,
                b,
                params: *params,
            })
        }
        Err(e) => {
            let (h, hdot) = samples
                .last()
                .map(|smp| (smp.h.to_f64(), smp.hdot.to_f64()))
                .unwrap_or((0.0, b.to_f64()));
            let s = match e {
                OdeError::StepUnderflow { t }
                | OdeError::MaxSteps { t, .. }
                | OdeError::NonFinite { t } => t,
            };
            Err(StaticsError::IntegrationFailure { s, h, hdot })
        }
    }
}

impl<T: Real> Trajectory<T> {
    /// Builds a trajectory from explicit samples (used for synthetic
    /// inputs). Samples must be strictly increasing in s from 0.
    pub fn from_samples(
        params: Params,
        b: T,
        samples: Vec<TrajectorySample<T>>,
        terminal: TerminalFlag,
        capture_tol: T,
    ) -> Self {
        assert!(!samples.is_empty());
        assert!(samples[0].s == T::zero());
        let mut closest = (T::zero(), T::from_f64(f64::INFINITY));
        for w in samples.windows(2) {
            assert!(w[0].s < w[1].s, "samples not increasing");
        }
        for smp in &samples {
            let m = smp.h.abs() + smp.hdot.abs();
            if m < closest.1 {
                closest = (smp.s, m);
            }
        }
        let s_max = samples.last().unwrap().s;
        Trajectory { samples, s_max, terminal, capture_tol, closest_approach: closest, b, params }
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Number of sign changes of h along the samples. Samples with |h|
    /// below ten times the capture tolerance are ignored: at the capture
    /// scale the unstable-mode remainder of the finite-precision shooting
    /// parameter can flip the sign of h spuriously.
    pub fn sign_changes(&self) -> u32 {
        let floor = self.capture_tol * T::from_i(10);
        let mut z = 0;
        let mut last = T::zero();
        for smp in &self.samples {
            if smp.h.abs() >= floor {
                if last != T::zero() && (smp.h < T::zero()) != (last < T::zero()) {
                    z += 1;
                }
                last = smp.h;
            }
        }
        z
    }

    /// (h, ḣ, ḧ) at interior s by piecewise septic interpolation matched to
    /// value and three derivatives at the stored grid points.
    pub fn state_at(&self, s: T) -> (T, T, T) {
        let field = FowlerField::new(&self.params);
        let n = self.samples.len();
        assert!(n >= 2, "need at least two samples to interpolate");
        // locate interval by uniform stride, then fix up at boundaries
        let ds = self.samples[1].s - self.samples[0].s;
        let mut i = (s / ds).to_f64().floor() as isize;
        if i < 0 {
            i = 0;
        }
        if i as usize >= n - 1 {
            i = (n - 2) as isize;
        }
        let i = i as usize;
        let (s0, s1) = (self.samples[i].s, self.samples[i + 1].s);
        let w = s1 - s0;
        let tau = (s - s0) / w;

        let endpoint = |smp: &TrajectorySample<T>| {
            let hdd = field.accel(smp.h, smp.hdot);
            let hddd = field.jerk(smp.h, smp.hdot, hdd);
            [smp.h, smp.hdot * w, hdd * w * w, hddd * w * w * w]
        };
        let y0 = endpoint(&self.samples[i]);
        let y1 = endpoint(&self.samples[i + 1]);
        let coef = septic_coefficients(&y0, &y1);
        let (p0, p1, p2) = horner_with_derivs(&coef, tau);
        (p0, p1 / w, p2 / (w * w))
    }
}

/// Monomial coefficients of the degree-7 polynomial on [0,1] matching
/// value and first three derivatives at both endpoints (arguments are the
/// stride-scaled derivatives y^{(k)} w^k).
fn septic_coefficients<T: Real>(y0: &[T; 4], y1: &[T; 4]) -> [T; 8] {
    // divided differences on the confluent nodes 0,0,0,0,1,1,1,1
    let z = [
        T::zero(),
        T::zero(),
        T::zero(),
        T::zero(),
        T::one(),
        T::one(),
        T::one(),
        T::one(),
    ];
    let fac = [T::one(), T::one(), T::from_f64(0.5), T::from_f64(1.0 / 6.0)];
    let val = |i: usize| if i < 4 { y0[0] } else { y1[0] };
    let mut dd: [[T; 8]; 8] = [[T::zero(); 8]; 8];
    for i in 0..8 {
        dd[i][0] = val(i);
    }
    for j in 1..8 {
        for i in 0..8 - j {
            dd[i][j] = if z[i + j] == z[i] {
                let src = if i < 4 { y0 } else { y1 };
                src[j] * fac[j]
            } else {
                (dd[i + 1][j - 1] - dd[i][j - 1]) / (z[i + j] - z[i])
            };
        }
    }
    // expand Newton form into monomial coefficients, Horner-style
    let mut coef = [T::zero(); 8];
    for j in (0..8).rev() {
        for k in (1..8).rev() {
            coef[k] = coef[k - 1] - z[j] * coef[k];
        }
        coef[0] = -z[j] * coef[0] + dd[0][j];
    }
    coef
}

fn horner_with_derivs<T: Real>(coef: &[T; 8], x: T) -> (T, T, T) {
    let mut p = T::zero();
    let mut dp = T::zero();
    let mut d2p = T::zero();
    for &c in coef.iter().rev() {
        d2p = d2p * x + dp * T::from_i(2);
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp, d2p)
}

/// Winding classifier used by the shooting bisection: number of h sign
/// changes plus one. Equal to the half-rotation count whenever the
/// trajectory terminates (captured or trapped), and stable against the
/// angle flutter of well-trapped tails.
pub fn winding_class<T: Real>(traj: &Trajectory<T>) -> u32 {
    traj.sign_changes() + 1
}

/// Accumulated half rotations of the phase point about the origin, from
/// unwrapped polar-angle increments. Samples inside ten times the capture
/// tolerance are skipped (their angle is unstable-mode noise); a sample at
/// the exact origin followed by a significant one is an error.
pub fn count_half_rotations<T: Real>(traj: &Trajectory<T>) -> Result<u32, StaticsError> {
    let pi = T::pi();
    let two_pi = pi + pi;
    let floor = traj.capture_tol * T::from_i(10);
    let mut cum = T::zero();
    let mut prev: Option<T> = None;
    for (idx, smp) in traj.samples.iter().enumerate() {
        let m = smp.h.abs() + smp.hdot.abs();
        if smp.h == T::zero() && smp.hdot == T::zero() {
            let live_later = traj.samples[idx + 1..]
                .iter()
                .any(|r| r.h.abs() + r.hdot.abs() >= floor);
            if live_later {
                return Err(StaticsError::UndefinedAngle { s: smp.s.to_f64() });
            }
            break;
        }
        if m < floor {
            continue;
        }
        let theta = T::atan2(smp.hdot, smp.h);
        if let Some(p) = prev {
            let mut d = theta - p;
            if d > pi {
                d = d - two_pi;
            }
            if d < -pi {
                d = d + two_pi;
            }
            cum = cum + d;
        }
        prev = Some(theta);
    }
    let turns = (cum.abs() / pi).to_f64() - 1e-9;
    Ok(turns.ceil().max(0.0) as u32)
}

/// Static profile with n interior zeros.
#[derive(Debug, Clone)]
pub struct StaticSolution<T: Real> {
    pub n: u32,
    /// Shooting parameter ḣ(0).
    pub b: T,
    /// Signed far-field amplitude: h(s) → c e^{−κs}.
    pub c: T,
    pub trajectory: Trajectory<T>,
    /// Expansion of f(x) about x = 0 (built at a default depth).
    pub f0: FormalSeries<T>,
    params: Params,
}

/// Coefficients g_k of f(x) = x^offset Σ g_k x^k.
#[derive(Debug, Clone)]
pub struct FormalSeries<T> {
    pub power_offset: i64,
    pub g: Vec<T>,
}

impl<T: Real> FormalSeries<T> {
    pub fn eval(&self, x: T) -> T {
        let mut acc = T::zero();
        for &gk in self.g.iter().rev() {
            acc = acc * x + gk;
        }
        acc * x.powi(self.power_offset as i32)
    }
}

impl<T: Real> StaticSolution<T> {
    pub fn params(&self) -> &Params {
        &self.params
    }

    /// h and its first two s-derivatives, valid for all s ≥ 0 (asymptotic
    /// decay beyond the stored range).
    pub fn h_state(&self, s: T) -> (T, T, T) {
        if s <= self.trajectory.s_max {
            self.trajectory.state_at(s)
        } else {
            let kappa = ratio_t::<T>(self.params.derived().kappa);
            let h = self.c * (-kappa * s).exp();
            (h, -kappa * h, kappa * kappa * h)
        }
    }

    /// φ(r) for r ≥ 1.
    pub fn phi(&self, r: T) -> T {
        let s = r.ln();
        let inv_p = T::ratio(1, i64::from(self.params.p()));
        let (h, _, _) = self.h_state(s);
        (-s * inv_p).exp() * h
    }

    /// dφ/dr.
    pub fn phi_prime(&self, r: T) -> T {
        let s = r.ln();
        let inv_p = T::ratio(1, i64::from(self.params.p()));
        let (h, hdot, _) = self.h_state(s);
        (-s * (inv_p + T::one())).exp() * (hdot - h * inv_p)
    }

    /// d²φ/dr².
    pub fn phi_second(&self, r: T) -> T {
        let s = r.ln();
        let inv_p = T::ratio(1, i64::from(self.params.p()));
        let (h, hdot, hddot) = self.h_state(s);
        let a = inv_p + inv_p + T::one();
        (-s * (inv_p + T::from_i(2))).exp()
            * (hddot - a * hdot + inv_p * (inv_p + T::one()) * h)
    }

    /// f(x) = r^{(d−1)/2} φ(r) with x = 1/r, for 0 < x ≤ 1.
    pub fn f(&self, x: T) -> T {
        let s = -x.ln();
        let p = i64::from(self.params.p());
        let nu2 = i64::from(self.params.d() - 1) / 2;
        let (h, _, _) = self.h_state(s);
        // x^{1/p − (d−1)/2} = e^{s((d−1)/2 − 1/p)}
        (s * (T::from_i(nu2) - T::ratio(1, p))).exp() * h
    }
}

fn fit_defaults<T: Real>() -> (T, T) {
    (T::from_f64(1e-4), T::from_f64(1e-9))
}

/// Weighted least squares of the terminal decay onto the saddle modes
/// e^{λ−t}, e^{λ+t} and the first nonlinear correction e^{(2p+1)λ− t};
/// returns the signed coefficient of the decaying mode, rescaled to s = 0.
fn extract_c<T: Real>(traj: &Trajectory<T>) -> Result<T, StaticsError> {
    let drv = traj.params.derived();
    let lam_m = -ratio_t::<T>(drv.kappa);
    let lam_p = ratio_t::<T>(drv.lambda_plus());
    let npow = i64::from(2 * traj.params.p() + 1);

    let hscale = traj
        .samples
        .iter()
        .fold(T::zero(), |m, smp| m.max(smp.h.abs()));
    let (hi_base, lo_base) = fit_defaults::<T>();
    let unit = T::one().max(hscale);
    let hi_cut = hi_base * unit;
    let lo_cut = lo_base * unit;

    // terminal decay window: walk back from the end to the last sample
    // above the upper cut, then keep samples until |h| drops below the
    // lower cut (excludes the rising phase, which also has small |h|)
    let mut start = traj.samples.len();
    while start > 0 && traj.samples[start - 1].h.abs() <= hi_cut {
        start -= 1;
    }
    let mut window: Vec<&TrajectorySample<T>> = Vec::new();
    for smp in &traj.samples[start..] {
        if smp.h.abs() < lo_cut {
            break;
        }
        window.push(smp);
    }
    if window.len() < 8 {
        return Err(StaticsError::FitWindow { found: window.len() });
    }
    let s0 = window[0].s;
    let m = window.len();
    let mut cols = [vec![T::zero(); m], vec![T::zero(); m], vec![T::zero(); m]];
    let mut rhs = vec![T::zero(); m];
    let exps = [lam_m, lam_p, lam_m * T::from_i(npow)];
    for (r, smp) in window.iter().enumerate() {
        let t = smp.s - s0;
        let wgt = T::one() / smp.h.abs();
        for (j, &e) in exps.iter().enumerate() {
            cols[j][r] = (e * t).exp() * wgt;
        }
        rhs[r] = smp.h * wgt;
    }
    let beta = mgs_least_squares(&mut cols, &mut rhs);
    // rescale the decaying-mode coefficient to s = 0
    Ok(beta[0] * (-lam_m * s0).exp())
}

/// Least squares via modified Gram–Schmidt on three columns.
fn mgs_least_squares<T: Real>(cols: &mut [Vec<T>; 3], rhs: &mut [T]) -> [T; 3] {
    let m = rhs.len();
    let mut r = [[T::zero(); 3]; 3];
    for j in 0..3 {
        for k in 0..j {
            let mut dot = T::zero();
            for i in 0..m {
                dot = dot + cols[k][i] * cols[j][i];
            }
            r[k][j] = r[k][j] + dot;
            for i in 0..m {
                let upd = cols[k][i] * dot;
                cols[j][i] = cols[j][i] - upd;
            }
        }
        let mut nrm = T::zero();
        for i in 0..m {
            nrm = nrm + cols[j][i] * cols[j][i];
        }
        let nrm = nrm.sqrt();
        r[j][j] = nrm;
        for i in 0..m {
            cols[j][i] = cols[j][i] / nrm;
        }
    }
    let mut qt = [T::zero(); 3];
    for j in 0..3 {
        let mut dot = T::zero();
        for i in 0..m {
            dot = dot + cols[j][i] * rhs[i];
        }
        qt[j] = dot;
    }
    // back substitution
    let mut beta = [T::zero(); 3];
    for j in (0..3).rev() {
        let mut acc = qt[j];
        for k in j + 1..3 {
            acc = acc - r[j][k] * beta[k];
        }
        beta[j] = acc / r[j][j];
    }
    beta
}

/// Finds the profile with n interior zeros by winding bisection plus a
/// secant polish on the unstable-mode amplitude at closest approach.
pub fn find_static<T: Real>(
    params: &Params,
    n: u32,
    bracket: Option<(T, T)>,
) -> Result<StaticSolution<T>, StaticsError> {
    find_static_with(params, n, bracket, &FowlerOpts::default())
}

pub fn find_static_with<T: Real>(
    params: &Params,
    n: u32,
    bracket: Option<(T, T)>,
    opts: &FowlerOpts<T>,
) -> Result<StaticSolution<T>, StaticsError> {
    let drv = params.derived();
    let lam_m = -ratio_t::<T>(drv.kappa);
    let lam_p = ratio_t::<T>(drv.lambda_plus());
    let want = n + 1;

    // classification runs can use a coarser output stride
    let scan_opts = FowlerOpts { ds: opts.ds * T::from_i(5), ..*opts };
    let classify = |b: T| -> Result<(u32, Trajectory<T>), StaticsError> {
        let traj = integrate_fowler_with(params, b, &scan_opts)?;
        Ok((winding_class(&traj), traj))
    };

    let (mut lo, mut hi, mut tr_lo, mut tr_hi) = match bracket {
        Some((a, b)) => {
            let (mut a, mut b) = (a, b);
            if b < a {
                std::mem::swap(&mut a, &mut b);
            }
            let (ca, ta) = classify(a)?;
            let (cb, tb) = classify(b)?;
            if ca > want || cb < want + 1 {
                return Err(StaticsError::BadBracket { lo_class: ca, hi_class: cb, want });
            }
            (a, b, ta, tb)
        }
        None => {
            let mut b = T::from_f64(0.05);
            let factor = T::from_f64(1.3);
            let cap = T::from_f64(400.0);
            let (mut c0, mut t0) = classify(b)?;
            // walk down if we started too high
            while c0 > want {
                b = b / factor;
                if b.to_f64() < 1e-8 {
                    return Err(StaticsError::BracketNotFound {
                        n,
                        lo: b.to_f64(),
                        hi: 0.05,
                    });
                }
                let r = classify(b)?;
                c0 = r.0;
                t0 = r.1;
            }
            let mut lo = b;
            let mut tr_lo = t0;
            loop {
                let bn = lo * factor;
                if bn > cap {
                    return Err(StaticsError::BracketNotFound {
                        n,
                        lo: lo.to_f64(),
                        hi: cap.to_f64(),
                    });
                }
                let (cn, tn) = classify(bn)?;
                if cn >= want + 1 {
                    break (lo, bn, tr_lo, tn);
                }
                lo = bn;
                tr_lo = tn;
            }
        }
    };

    // bisection on the winding class
    let width_floor = T::from_f64(1e-13);
    let mut guard = 0;
    while hi - lo > width_floor * hi.max(T::one()) {
        guard += 1;
        if guard > 300 {
            break;
        }
        let mid = (lo + hi) / T::from_i(2);
        let (cm, tm) = classify(mid)?;
        if cm <= want {
            lo = mid;
            tr_lo = tm;
        } else {
            hi = mid;
            tr_hi = tm;
        }
    }

    // secant polish on the unstable-mode amplitude at closest approach
    let xi_of = |traj: &Trajectory<T>| -> T {
        let target = traj.closest_approach.0;
        let mut best = &traj.samples[0];
        for smp in &traj.samples {
            if (smp.s - target).abs() < (best.s - target).abs() {
                best = smp;
            }
        }
        (best.hdot - lam_m * best.h) / (lam_p - lam_m)
    };
    let (mut b1, mut x1) = (lo, xi_of(&tr_lo));
    let (mut b2, mut x2) = (hi, xi_of(&tr_hi));
    let (mut b_best, mut x_best) = if x1.abs() < x2.abs() { (b1, x1) } else { (b2, x2) };
    for _ in 0..6 {
        if x2 == x1 {
            break;
        }
        let b3 = b2 - x2 * (b2 - b1) / (x2 - x1);
        let b3 = b3.max(lo).min(hi);
        if b3 == b2 || b3 == b1 {
            break;
        }
        let (_, t3) = classify(b3)?;
        let x3 = xi_of(&t3);
        b1 = b2;
        x1 = x2;
        b2 = b3;
        x2 = x3;
        if x3.abs() < x_best.abs() {
            b_best = b3;
            x_best = x3;
        }
        if (b2 - b1).abs() <= T::eps() * T::from_i(8) * b2.abs() {
            break;
        }
    }

    // final fine-grid run, with a capture tolerance relaxed to what the
    // finite shooting resolution can reach if necessary
    let mut traj = integrate_fowler_with(params, b_best, opts)?;
    if traj.terminal != TerminalFlag::ConvergedToOrigin {
        let closest = traj.closest_approach.1;
        if closest.to_f64() <= 1e-6 {
            let relaxed = FowlerOpts { capture_tol: closest * T::from_i(4), ..*opts };
            traj = integrate_fowler_with(params, b_best, &relaxed)?;
        }
        if traj.terminal != TerminalFlag::ConvergedToOrigin {
            return Err(StaticsError::NonConvergence {
                n,
                closest: traj.closest_approach.1.to_f64(),
            });
        }
    }
    if traj.sign_changes() != n {
        return Err(StaticsError::NonConvergence {
            n,
            closest: traj.closest_approach.1.to_f64(),
        });
    }

    let c = extract_c(&traj)?;
    let mut sol = StaticSolution {
        n,
        b: b_best,
        c,
        trajectory: traj,
        f0: FormalSeries { power_offset: 0, g: Vec::new() },
        params: *params,
    };
    let depth = 12 * params.derived().stride as usize;
    sol.f0 = f0_series_coefficients(&sol, depth)?;
    Ok(sol)
}

/// Relative defect of the energy-flux identity ½b² = γ ∫ ḣ² ds, with the
/// integral taken along the stored samples (midpoint-refined Simpson) and
/// the tail beyond s_max estimated from the asymptotic decay.
pub fn pohozaev_residual<T: Real>(sol: &StaticSolution<T>) -> T {
    pohozaev_residual_from_parts(&sol.params, sol.b, &sol.trajectory)
}

pub fn pohozaev_residual_from_parts<T: Real>(
    params: &Params,
    b: T,
    traj: &Trajectory<T>,
) -> T {
    let drv = params.derived();
    let gamma = ratio_t::<T>(drv.gamma);
    let kappa = ratio_t::<T>(drv.kappa);
    let two = T::from_i(2);
    let six = T::from_i(6);

    let mut integral = T::zero();
    for w in traj.samples.windows(2) {
        let ds = w[1].s - w[0].s;
        let mid = w[0].s + ds / two;
        let (_, hd_mid, _) = traj.state_at(mid);
        let f0 = w[0].hdot * w[0].hdot;
        let f1 = w[1].hdot * w[1].hdot;
        integral = integral + ds / six * (f0 + T::from_i(4) * hd_mid * hd_mid + f1);
    }
    let hd_end = traj.samples.last().map(|smp| smp.hdot).unwrap_or(T::zero());
    let tail = hd_end * hd_end / (two * kappa);
    let half_b2 = b * b / two;
    ((half_b2 - gamma * (integral + tail)) / half_b2).abs()
}

/// Coefficients of f(x) = x^{(d−3)/2} Σ g_k x^k up to and including x^k_max,
/// from the recurrence of the static far-field equation, seeded by g_0 = c.
/// The result is checked pointwise against the reconstructed profile.
pub fn f0_series_coefficients<T: Real>(
    sol: &StaticSolution<T>,
    k_max: usize,
) -> Result<FormalSeries<T>, StaticsError> {
    let params = &sol.params;
    let drv = params.derived();
    let nu = drv.nu;
    let stride = drv.stride as usize;
    let npow = 2 * params.p() + 1;

    let mut g = vec![T::zero(); k_max + 1];
    g[0] = sol.c;
    for j in (stride..=k_max).step_by(stride) {
        // coefficient of the (2p+1) power at offset j − stride uses only
        // lower-order terms, which are already final
        let pw = crate::num::series::real_pow_trunc(&g[..j], npow, j - stride + 1);
        let denom = T::from_i((j * (j + 2 * nu as usize + 1)) as i64);
        g[j] = -pw[j - stride] / denom;
    }
    let series = FormalSeries { power_offset: nu, g };

    // pointwise validation at an x small enough that truncation is idle
    let scale = sol.c.abs().to_f64().max(1.0);
    let x_check = (1e-4 / scale.powi(2 * params.p() as i32))
        .powf(1.0 / drv.stride as f64)
        .min(0.01);
    let xc = T::from_f64(x_check);
    let series_val = series.eval(xc);
    let profile_val = sol.f(xc);
    let denom = profile_val.abs().max(T::from_f64(1e-300));
    if ((series_val - profile_val) / denom).abs().to_f64() > 1e-6 {
        return Err(StaticsError::SeriesMismatch {
            x: x_check,
            series: series_val.to_f64(),
            profile: profile_val.to_f64(),
        });
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ratio_f64;
    use crate::num::ode::{dop853, OdeOpts};
    use proptest::prelude::*;
    use std::ops::ControlFlow;

    fn pair(d: u32, p: u32) -> Params {
        Params::new(d, p).unwrap()
    }

    #[test]
    fn small_b_follows_linearized_flow() {
        let params = pair(3, 3);
        let drv = params.derived();
        let (lp, lm) = (ratio_f64(drv.lambda_plus()), -ratio_f64(drv.kappa));
        let b = 1e-6;
        let traj = integrate_fowler(&params, b, 2.0).unwrap();
        assert_eq!(traj.terminal, TerminalFlag::BudgetExhausted);
        let last = traj.samples.last().unwrap();
        let s = last.s;
        let want = b * ((lp * s).exp() - (lm * s).exp()) / (lp - lm);
        assert!(((last.h - want) / want).abs() < 1e-8, "h {} vs {}", last.h, want);
    }

    #[test]
    fn tiny_b_eventually_traps_in_well() {
        let params = pair(3, 3);
        let traj = integrate_fowler(&params, 1e-6_f64, 200.0).unwrap();
        assert_eq!(traj.terminal, TerminalFlag::WellTrapped);
        assert_eq!(winding_class(&traj), 1);
    }

    #[test]
    fn zero_b_sits_at_origin() {
        let params = pair(3, 3);
        let traj = integrate_fowler(&params, 0.0_f64, 5.0).unwrap();
        assert_eq!(traj.terminal, TerminalFlag::ConvergedToOrigin);
        assert_eq!(count_half_rotations(&traj).unwrap(), 0);
    }

    #[test]
    fn circle_sampled_once_counts_two_half_rotations() {
        let params = pair(3, 3);
        let k = 40;
        let samples: Vec<TrajectorySample<f64>> = (0..=k)
            .map(|j| {
                let ang = std::f64::consts::FRAC_PI_2 - 2.0 * std::f64::consts::PI * j as f64 / k as f64;
                TrajectorySample { s: 0.1 * j as f64, h: ang.cos(), hdot: ang.sin() }
            })
            .collect();
        let traj = Trajectory::from_samples(params, 1.0, samples, TerminalFlag::BudgetExhausted, 1e-10);
        assert_eq!(count_half_rotations(&traj).unwrap(), 2);
    }

    #[test]
    fn spiral_three_and_a_half_turns_counts_seven() {
        let params = pair(3, 3);
        let total = 7.0 * std::f64::consts::PI;
        let k = 700;
        let samples: Vec<TrajectorySample<f64>> = (0..=k)
            .map(|j| {
                let frac = j as f64 / k as f64;
                let ang = std::f64::consts::FRAC_PI_2 - total * frac;
                let r = (-0.3 * total * frac).exp();
                TrajectorySample { s: 0.05 * j as f64, h: r * ang.cos(), hdot: r * ang.sin() }
            })
            .collect();
        let traj = Trajectory::from_samples(params, 1.0, samples, TerminalFlag::BudgetExhausted, 1e-10);
        assert_eq!(count_half_rotations(&traj).unwrap(), 7);
    }

    #[test]
    fn exact_origin_sample_before_capture_is_an_error() {
        let params = pair(3, 3);
        let samples = vec![
            TrajectorySample { s: 0.0, h: 0.0, hdot: 1.0 },
            TrajectorySample { s: 0.1, h: 0.0, hdot: 0.0 },
            TrajectorySample { s: 0.2, h: -0.5, hdot: 0.1 },
        ];
        let traj = Trajectory::from_samples(params, 1.0, samples, TerminalFlag::BudgetExhausted, 1e-10);
        assert!(matches!(
            count_half_rotations(&traj),
            Err(StaticsError::UndefinedAngle { .. })
        ));
    }

    #[test]
    fn ground_state_d3_p3_matches_reference_values() {
        let params = pair(3, 3);
        let sol = find_static::<f64>(&params, 0, None).unwrap();
        assert!((sol.b - 0.84261).abs() < 5.5e-6, "b_0 = {}", sol.b);
        assert!((sol.c.abs() - 4.46847).abs() < 5.5e-5, "c_0 = {}", sol.c);
        assert_eq!(count_half_rotations(&sol.trajectory).unwrap(), 1);
        assert_eq!(sol.trajectory.sign_changes(), 0);
        assert!(pohozaev_residual(&sol) < 1e-6);
    }

    #[test]
    fn first_excited_d3_p3_matches_reference_values() {
        let params = pair(3, 3);
        let sol = find_static::<f64>(&params, 1, None).unwrap();
        assert!((sol.b - 1.67035).abs() < 5.5e-6, "b_1 = {}", sol.b);
        assert!((sol.c.abs() - 21.7658).abs() < 5.5e-4, "c_1 = {}", sol.c);
        assert_eq!(count_half_rotations(&sol.trajectory).unwrap(), 2);
        assert_eq!(sol.trajectory.sign_changes(), 1);
    }

    #[test]
    fn orderings_and_sign_alternation_d3_p3() {
        let params = pair(3, 3);
        let s0 = find_static::<f64>(&params, 0, None).unwrap();
        let s1 = find_static::<f64>(&params, 1, None).unwrap();
        let s2 = find_static::<f64>(&params, 2, None).unwrap();
        assert!(s0.b < s1.b && s1.b < s2.b);
        assert!(s0.c > 0.0 && s1.c < 0.0 && s2.c > 0.0);
        assert!((s2.b - 2.58523).abs() < 5.5e-6, "b_2 = {}", s2.b);
        assert!((s2.c.abs() - 62.5081).abs() < 5.5e-3, "c_2 = {}", s2.c);
    }

    #[test]
    fn pohozaev_residual_d5_p2_ground_state() {
        let params = pair(5, 2);
        let sol = find_static::<f64>(&params, 0, None).unwrap();
        assert!((sol.b - 7.70805).abs() < 5.5e-5, "b_0 = {}", sol.b);
        assert!((sol.c.abs() - 8.22701).abs() < 5.5e-5, "c_0 = {}", sol.c);
        assert!(pohozaev_residual(&sol) < 1e-6, "residual {}", pohozaev_residual(&sol));
    }

    #[test]
    fn synthetic_trajectory_fails_pohozaev() {
        let params = pair(3, 3);
        let samples: Vec<TrajectorySample<f64>> = (0..=500)
            .map(|j| {
                let s = 0.02 * j as f64;
                TrajectorySample { s, h: s.sin(), hdot: s.cos() }
            })
            .collect();
        let traj = Trajectory::from_samples(params, 1.0, samples, TerminalFlag::BudgetExhausted, 1e-10);
        let res = pohozaev_residual_from_parts(&params, 1.0, &traj);
        assert!(res > 0.1, "residual {res}");
    }

    #[test]
    fn profile_satisfies_static_radial_equation() {
        let params = pair(3, 3);
        let sol = find_static::<f64>(&params, 0, None).unwrap();
        let mut max_phi = 0.0_f64;
        let rs: Vec<f64> = (0..=380).map(|k| 1.0 + 0.05 * k as f64).collect();
        for &r in &rs {
            max_phi = max_phi.max(sol.phi(r).abs());
        }
        for &r in &rs {
            let residual = sol.phi_second(r) + 2.0 / r * sol.phi_prime(r) + sol.phi(r).powi(7);
            assert!(
                residual.abs() < 1e-8 * max_phi,
                "residual {residual:.3e} at r = {r}"
            );
        }
    }

    #[test]
    fn dirichlet_boundary_and_interior_zeros() {
        let params = pair(3, 3);
        let sol = find_static::<f64>(&params, 1, None).unwrap();
        assert_eq!(sol.phi(1.0), 0.0);
        assert!(sol.f(1.0).abs() < 1e-30);
        // interior zeros of phi equal the h sign changes
        assert_eq!(sol.trajectory.sign_changes(), 1);
    }

    #[test]
    fn far_field_series_matches_inward_integration() {
        let params = pair(3, 3);
        let sol = find_static::<f64>(&params, 0, None).unwrap();
        let c = sol.c;
        // seed the static radial equation at r = 400 with the two-term
        // far-field form and integrate inward to r = 100
        let r0 = 400.0_f64;
        let phi0 = c / r0 - c.powi(7) / (20.0 * r0.powi(5));
        let dphi0 = -c / (r0 * r0) + c.powi(7) / (4.0 * r0.powi(6));
        let opts = OdeOpts::<f64>::tol(1e-13, 1e-18);
        let res = dop853(
            |r, y, dy| {
                dy[0] = y[1];
                dy[1] = -2.0 / r * y[1] - y[0].powi(7);
            },
            r0,
            &[phi0, dphi0],
            100.0,
            &opts,
            |_, _| ControlFlow::Continue(()),
        )
        .unwrap();
        let f_oracle = 100.0 * res.y[0];
        let f_series = sol.f0.eval(0.01);
        let rel = ((f_series - f_oracle) / f_oracle).abs();
        assert!(rel < 5e-10, "series {f_series} vs oracle {f_oracle} rel {rel:.2e}");
        // and the interpolated profile agrees too
        let rel2 = ((sol.f(0.01) - f_oracle) / f_oracle).abs();
        assert!(rel2 < 5e-10, "profile rel {rel2:.2e}");
    }

    #[test]
    fn series_exponent_bookkeeping() {
        let params = pair(5, 2);
        let sol = find_static::<f64>(&params, 0, None).unwrap();
        let drv = params.derived();
        assert_eq!(sol.f0.power_offset, drv.nu);
        assert_eq!(sol.f0.g[0], sol.c);
        for (k, &gk) in sol.f0.g.iter().enumerate() {
            if k % drv.stride as usize != 0 {
                assert_eq!(gk, 0.0, "unexpected coefficient at k = {k}");
            }
        }
    }

    #[test]
    fn explicit_bracket_is_honored_and_bad_bracket_rejected() {
        let params = pair(3, 3);
        let sol = find_static::<f64>(&params, 0, Some((0.5, 1.2))).unwrap();
        assert!((sol.b - 0.84261).abs() < 5.5e-6);
        let bad = find_static::<f64>(&params, 0, Some((1.0, 1.2)));
        assert!(matches!(bad, Err(StaticsError::BadBracket { .. })));
    }

    #[test]
    fn trajectory_samples_are_increasing_from_zero() {
        let params = pair(3, 3);
        let traj = integrate_fowler(&params, 0.9_f64, 50.0).unwrap();
        assert_eq!(traj.samples[0].s, 0.0);
        for w in traj.samples.windows(2) {
            assert!(w[0].s < w[1].s);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn winding_class_is_monotone_in_b(raw1 in 0.05f64..2.5, raw2 in 0.05f64..2.5) {
            let params = pair(3, 3);
            let (lo, hi) = if raw1 <= raw2 { (raw1, raw2) } else { (raw2, raw1) };
            let t_lo = integrate_fowler(&params, lo, 200.0).unwrap();
            let t_hi = integrate_fowler(&params, hi, 200.0).unwrap();
            prop_assert!(winding_class(&t_lo) <= winding_class(&t_hi));
        }
    }
}
