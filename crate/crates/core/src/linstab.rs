//! Linearized radial stability of the static profiles.
//!
//! Perturbing a static solution by `v(r) e^{lambda t}` and linearizing the
//! wave equation gives the radial eigenvalue problem
//!
//! ```text
//! v'' + (d-1)/r v' + (2p+1) phi^{2p} v = lambda^2 v,    v(1) = 0,
//! ```
//!
//! i.e. the Schroedinger operator `-Delta - (2p+1) phi^{2p}` with Dirichlet
//! boundary at r = 1 has eigenvalue `-lambda^2`.  Every bound state below zero
//! is an exponentially growing mode of the time-dependent problem.
//!
//! Three independent views of that spectrum live here: the explicit scaling
//! zero mode, a shooting solver that locates each growth rate as a Wronskian
//! zero, and a matrix inertia count of the discretized operator.  The latter
//! two must agree, which is the module's main internal consistency check.

use std::ops::ControlFlow;

use thiserror::Error;

use crate::model::Params;
use crate::num::linalg::sym_tridiag_count_below;
use crate::num::ode::{dop853, OdeError, OdeOpts};
use crate::statics::StaticSolution;

#[derive(Debug, Error)]
pub enum LinstabError {
    #[error("mode integration failed near r = {r}: {source}")]
    Integration {
        r: f64,
        #[source]
        source: OdeError,
    },
    #[error("rate refinement stalled in [{lo}, {hi}] (mismatch [{w_lo}, {w_hi}])")]
    RefinementStall { lo: f64, hi: f64, w_lo: f64, w_hi: f64 },
    #[error("negative-eigenvalue count not grid-converged: {base} at base resolution, {refined} refined, {widened} on the widened domain")]
    CountNotConverged { base: usize, refined: usize, widened: usize },
}

/// One solution of the linearized radial problem.
///
/// For growth rates found by shooting, `profile` is normalized to unit sup
/// norm and vanishes at r = 1.  The scaling mode returned by [`zero_mode`]
/// keeps its natural amplitude and is *not* an eigenfunction: it violates the
/// boundary condition, `v(1) = phi'(1) != 0`.
#[derive(Debug, Clone)]
pub struct RadialMode {
    /// Temporal rate; the operator eigenvalue is `-lambda^2`.
    pub lambda: f64,
    /// Samples `(r, v(r))` on a uniform radial grid.
    pub profile: Vec<(f64, f64)>,
    /// Interior sign changes of `v`.
    pub node_count: usize,
    /// Max pointwise equation residual relative to `max |v|`.
    pub residual: f64,
}

/// The radial equation data, reduced to the half-line form.
///
/// With `u = r^m v`, `m = (d-1)/2`, the first-derivative term drops out:
/// `u'' = (lambda^2 - m(1-m)/r^2 - V(r)) u` where `V = (2p+1) phi^{2p}`.
/// All integrations run on `u` (or its envelope-stripped variant), which keeps
/// Wronskians r-independent.
struct ModeEq<'a> {
    dim: f64,
    half_m: f64,
    /// m(1-m), the centrifugal coefficient of the half-line form.
    cent: f64,
    pot: &'a dyn Fn(f64) -> f64,
}

impl<'a> ModeEq<'a> {
    fn new(params: &Params, pot: &'a dyn Fn(f64) -> f64) -> Self {
        let dim = f64::from(params.d());
        let half_m = (dim - 1.0) / 2.0;
        ModeEq { dim, half_m, cent: half_m * (1.0 - half_m), pot }
    }

    fn for_solution(sol: &'a StaticSolution<f64>, pot: &'a dyn Fn(f64) -> f64) -> Self {
        ModeEq::new(sol.params(), pot)
    }
}

/// `(2p+1) phi^{2p}` as a closure over the stored profile.
fn potential_of(sol: &StaticSolution<f64>) -> impl Fn(f64) -> f64 + '_ {
    let np = f64::from(2 * sol.params().p() + 1);
    let twop = (2 * sol.params().p()) as i32;
    move |r: f64| np * sol.phi(r).powi(twop)
}

/// Sup of the potential over the stored trajectory samples.
fn potential_sup(sol: &StaticSolution<f64>) -> f64 {
    let p = f64::from(sol.params().p());
    let np = f64::from(2 * sol.params().p() + 1);
    let twop = 2.0 * p;
    sol.trajectory
        .samples
        .iter()
        .map(|smp| np * ((-smp.s / p).exp() * smp.h.abs()).powf(twop))
        .fold(0.0, f64::max)
}

/// Upper end of the rate search: no bound state can sit deeper than the
/// potential minimum, so `lambda <= sqrt(sup V)`; 10% headroom on top.
pub fn default_search_bound(sol: &StaticSolution<f64>) -> f64 {
    (1.1 * potential_sup(sol).sqrt()).max(0.5)
}

/// Radius beyond which the potential is below `threshold`.  The profile tail
/// decays like `|c| r^{-(d-2)}`, which fixes the scale; a verification loop
/// guards the pre-asymptotic region.
fn quiet_radius(
    sol: &StaticSolution<f64>,
    pot: &dyn Fn(f64) -> f64,
    threshold: f64,
    floor: f64,
) -> f64 {
    let p = i32::try_from(sol.params().p()).unwrap();
    let d = f64::from(sol.params().d());
    let np = f64::from(2 * sol.params().p() + 1);
    let amp = np * sol.c.abs().powi(2 * p);
    let expo = 2.0 * f64::from(sol.params().p()) * (d - 2.0);
    let mut r = (amp / threshold).powf(1.0 / expo).max(floor);
    while pot(r) > threshold && r < 1e6 {
        r *= 1.5;
    }
    r
}

/// Seed radius for the far-field expansion: the field is free to 1e-14 there.
fn match_radius(sol: &StaticSolution<f64>, pot: &dyn Fn(f64) -> f64) -> f64 {
    quiet_radius(sol, pot, 1e-14, 30.0)
}

fn ode_opts() -> OdeOpts<f64> {
    let mut opts = OdeOpts::tol(1e-12, 1e-14);
    opts.max_steps = 4_000_000;
    opts
}

fn wrap_ode(err: OdeError) -> LinstabError {
    let r = match err {
        OdeError::StepUnderflow { t } | OdeError::MaxSteps { t, .. } | OdeError::NonFinite { t } => t,
    };
    LinstabError::Integration { r, source: err }
}

/// Integrate `u'' = (lambda^2 - cent/r^2 - V) u` outward from `u(1) = 0`,
/// `u'(1) = 1`; returns the final `[u, u']` and feeds grid samples to `sink`.
fn shoot_out(
    eq: &ModeEq,
    lambda: f64,
    r_end: f64,
    dr: Option<f64>,
    mut sink: impl FnMut(f64, f64),
) -> Result<[f64; 2], LinstabError> {
    let lam2 = lambda * lambda;
    let mut opts = ode_opts();
    if let Some(step) = dr {
        opts = opts.with_grid(step);
    }
    let mut last = [0.0, 1.0];
    dop853(
        |r: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = (lam2 - eq.cent / (r * r) - (eq.pot)(r)) * y[0];
        },
        1.0,
        &[0.0, 1.0],
        r_end,
        &opts,
        |r, y| {
            sink(r, y[0]);
            last = [y[0], y[1]];
            ControlFlow::Continue(())
        },
    )
    .map_err(wrap_ode)?;
    Ok(last)
}

/// Integrate the envelope-stripped decaying branch `w = e^{lambda r} u` inward
/// from the free-field seed at `r_start` down to `r_end`:
/// `w'' = 2 lambda w' - (cent/r^2 + V) w`.  Inward integration is stable for
/// this branch.  Returns the final `[w, w']` and feeds grid samples to `sink`.
fn shoot_in(
    eq: &ModeEq,
    lambda: f64,
    r_start: f64,
    w_start: [f64; 2],
    r_end: f64,
    dr: Option<f64>,
    mut sink: impl FnMut(f64, f64),
) -> Result<[f64; 2], LinstabError> {
    let two_l = 2.0 * lambda;
    let mut opts = ode_opts();
    if let Some(step) = dr {
        opts = opts.with_grid(step);
    }
    let mut last = w_start;
    dop853(
        |r: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = two_l * y[1] - (eq.cent / (r * r) + (eq.pot)(r)) * y[0];
        },
        r_start,
        &w_start,
        r_end,
        &opts,
        |r, y| {
            sink(r, y[0]);
            last = [y[0], y[1]];
            ControlFlow::Continue(())
        },
    )
    .map_err(wrap_ode)?;
    Ok(last)
}

/// Two-term large-r expansion of the decaying branch envelope,
/// `w = 1 + a1/r + a2/r^2`.  For d = 3 and d = 5 this is exact once the
/// potential is dropped.
fn far_seed(eq: &ModeEq, lambda: f64, r: f64) -> [f64; 2] {
    let a1 = eq.half_m * (eq.half_m - 1.0) / (2.0 * lambda);
    let a2 = -a1 * (2.0 + eq.cent) / (4.0 * lambda);
    let w = 1.0 + a1 / r + a2 / (r * r);
    let wp = -a1 / (r * r) - 2.0 * a2 / (r * r * r);
    [w, wp]
}

/// Matching point: far enough out that the outward leg samples the potential,
/// close enough in that the growing envelope does not amplify roundoff past
/// ~1e4 (the decaying admixture is recovered from the Wronskian, whose noise
/// floor is set by that amplification).
fn mid_radius(lambda: f64) -> f64 {
    1.0 + (9.2 / lambda).min(12.0)
}

/// Normalized Wronskian between the outward solution (left boundary
/// condition) and the inward decaying branch (right boundary condition).
/// Both satisfy the same second-order equation without a first-derivative
/// term, so the Wronskian is r-independent; its zeros in `lambda` are the
/// growth rates.  Scaled by the solution magnitudes to stay O(1).
fn mismatch(eq: &ModeEq, lambda: f64, r_match: f64) -> Result<f64, LinstabError> {
    let r_mid = mid_radius(lambda);
    let out = shoot_out(eq, lambda, r_mid, None, |_, _| {})?;
    let seed = far_seed(eq, lambda, r_match);
    let win = shoot_in(eq, lambda, r_match, seed, r_mid, None, |_, _| {})?;
    let u_in = win[0];
    let up_in = win[1] - lambda * win[0];
    let wron = out[1] * u_in - out[0] * up_in;
    let norm = out[0].hypot(out[1]) * u_in.hypot(up_in);
    Ok(wron / norm)
}

/// Safeguarded secant: falls back to bisection whenever the secant step
/// leaves the bracket, so convergence is guaranteed for a sign change.
fn refine_rate(
    mut f: impl FnMut(f64) -> Result<f64, LinstabError>,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    mut f_hi: f64,
) -> Result<f64, LinstabError> {
    for _ in 0..80 {
        if hi - lo < 1e-13 * hi.max(1.0) {
            return Ok(0.5 * (lo + hi));
        }
        let secant = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        let mid = 0.5 * (lo + hi);
        let x = if secant.is_finite() && secant > lo && secant < hi { secant } else { mid };
        // Keep a minimal step so a stagnating secant cannot pin an endpoint.
        let x = x.max(lo + 0.05 * (hi - lo)).min(hi - 0.05 * (hi - lo));
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx > 0.0) == (f_lo > 0.0) {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
    }
    Err(LinstabError::RefinementStall { lo, hi, w_lo: f_lo, w_hi: f_hi })
}

/// All rates in `(lambda_min, bound]`, located by a sign scan of the
/// normalized Wronskian plus secant refinement.  Ascending order.
fn scan_rates(eq: &ModeEq, bound: f64, r_match: f64) -> Result<Vec<f64>, LinstabError> {
    // The continuous spectrum starts at lambda = 0; keep clear of the edge.
    let lam_min = 1e-3;
    let n_scan = 240;
    let step = (bound - lam_min) / n_scan as f64;
    if step <= 0.0 {
        return Ok(Vec::new());
    }
    let mut roots = Vec::new();
    let mut prev = (lam_min, mismatch(eq, lam_min, r_match)?);
    for i in 1..=n_scan {
        let lam = lam_min + step * i as f64;
        let val = mismatch(eq, lam, r_match)?;
        if prev.1 == 0.0 {
            roots.push(prev.0);
        } else if val != 0.0 && (val > 0.0) != (prev.1 > 0.0) {
            roots.push(refine_rate(|x| mismatch(eq, x, r_match), prev.0, lam, prev.1, val)?);
        }
        prev = (lam, val);
    }
    if prev.1 == 0.0 {
        roots.push(prev.0);
    }
    Ok(roots)
}

fn count_sign_changes<I: IntoIterator<Item = f64>>(vals: I, floor: f64) -> usize {
    let mut count = 0;
    let mut last = 0.0f64;
    for v in vals {
        if v.abs() < floor {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = v;
    }
    count
}

/// Max pointwise residual of `v'' + (d-1)/r v' + (V - lambda^2) v` over the
/// interior of a uniform profile, via 5-point differences, relative to
/// `max |v|`.
fn fd_residual(eq: &ModeEq, profile: &[(f64, f64)], dr: f64, lambda: f64) -> f64 {
    let lam2 = lambda * lambda;
    let sup = profile.iter().map(|&(_, v)| v.abs()).fold(0.0, f64::max);
    if sup == 0.0 || profile.len() < 5 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for i in 2..profile.len() - 2 {
        let (r, v) = profile[i];
        let vm2 = profile[i - 2].1;
        let vm1 = profile[i - 1].1;
        let vp1 = profile[i + 1].1;
        let vp2 = profile[i + 2].1;
        let d1 = (-vp2 + 8.0 * vp1 - 8.0 * vm1 + vm2) / (12.0 * dr);
        let d2 = (-vp2 + 16.0 * vp1 - 30.0 * v + 16.0 * vm1 - vm2) / (12.0 * dr * dr);
        let resid = d2 + (eq.dim - 1.0) / r * d1 + ((eq.pot)(r) - lam2) * v;
        worst = worst.max(resid.abs());
    }
    worst / sup
}

/// Grid spacing that keeps the 5-point truncation error below ~1e-8 relative:
/// the derivative scale of the mode is `max(lambda, sqrt(sup V))`.
fn grid_step(scale: f64) -> f64 {
    (0.02 / scale.powf(1.5)).min(0.01)
}

/// Build the full eigenfunction for a refined rate: outward leg to the
/// matching point, scaled inward leg beyond it, on one uniform grid.
fn assemble_mode(
    eq: &ModeEq,
    lambda: f64,
    r_match: f64,
    pot_sup: f64,
) -> Result<RadialMode, LinstabError> {
    let scale = lambda.max(pot_sup.sqrt()).max(1.0);
    let dr = grid_step(scale);
    let j_mid = ((mid_radius(lambda) - 1.0) / dr).ceil() as usize;
    // Profile extent: where the decaying envelope reaches ~1e-12, capped by
    // the seed radius.
    let r_far = (1.0 + 27.6 / lambda).min(r_match);
    let j_end = (((r_far - 1.0) / dr).ceil() as usize).max(j_mid + 8);
    let r_mid = 1.0 + j_mid as f64 * dr;
    let r_prof = 1.0 + j_end as f64 * dr;

    let mut v = vec![0.0f64; j_end + 1];
    let mut out_idx = 0usize;
    let out = shoot_out(eq, lambda, r_mid, Some(dr), |_, u| {
        if out_idx <= j_mid {
            v[out_idx] = u;
        }
        out_idx += 1;
    })?;

    // Inward: free leg from the seed radius, then a gridded leg over the
    // stored range.  Samples are enveloped back when written.
    let seed = far_seed(eq, lambda, r_match);
    let hand_off = shoot_in(eq, lambda, r_match, seed, r_prof, None, |_, _| {})?;
    let mut w_samples = vec![0.0f64; j_end - j_mid + 1];
    let mut in_idx = 0usize;
    let win = shoot_in(eq, lambda, r_prof, hand_off, r_mid, Some(dr), |_, w| {
        if in_idx < w_samples.len() {
            w_samples[in_idx] = w;
        }
        in_idx += 1;
    })?;

    // Scale the inward branch to the outward amplitude at the junction; fall
    // back to derivative matching if the junction sits on a node.
    let w_mid = win[0];
    let w_sup = w_samples.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let scale_in = if w_mid.abs() > 1e-8 * w_sup {
        out[0] / w_mid
    } else {
        out[1] / (win[1] - lambda * win[0])
    };
    for (k, &w) in w_samples.iter().enumerate() {
        let j = j_end - k;
        if j > j_mid {
            let r = 1.0 + j as f64 * dr;
            v[j] = scale_in * w * (-lambda * (r - r_mid)).exp();
        }
    }

    // Back to v = u / r^m ((d-1)/2 is integral for odd d), unit sup norm.
    let mut profile: Vec<(f64, f64)> = v
        .iter()
        .enumerate()
        .map(|(j, &u)| {
            let r = 1.0 + j as f64 * dr;
            (r, u / r.powi(eq.half_m as i32))
        })
        .collect();
    let vsup = profile.iter().map(|&(_, w)| w.abs()).fold(0.0, f64::max);
    for smp in &mut profile {
        smp.1 /= vsup;
    }

    let node_count = count_sign_changes(profile.iter().map(|&(_, w)| w), 1e-8);
    let residual = fd_residual(eq, &profile, dr, lambda);
    Ok(RadialMode { lambda, profile, node_count, residual })
}

/// All growth rates of the linearized problem in `(0, search_bound]`,
/// descending (so the k-th entry has k-1 interior nodes by Sturm ordering).
/// An empty result is a valid outcome: the profile has no unstable mode in
/// the window.
pub fn unstable_eigenvalues(
    sol: &StaticSolution<f64>,
    search_bound: f64,
) -> Result<Vec<RadialMode>, LinstabError> {
    let pot = potential_of(sol);
    let eq = ModeEq::for_solution(sol, &pot);
    let r_match = match_radius(sol, &pot);
    let pot_sup = potential_sup(sol);
    let mut rates = scan_rates(&eq, search_bound, r_match)?;
    rates.sort_by(|a, b| b.partial_cmp(a).unwrap());
    rates.into_iter().map(|lam| assemble_mode(&eq, lam, r_match, pot_sup)).collect()
}

/// The mode generated by the scaling symmetry of the static equation:
/// `v_0 = r phi' + phi / p`, an exact zero-rate solution of the linearized
/// equation.  Not an eigenfunction: `v_0(1) = phi'(1) != 0` breaks the
/// Dirichlet condition, so it does not join the spectrum.
pub fn zero_mode(sol: &StaticSolution<f64>) -> RadialMode {
    let p = f64::from(sol.params().p());
    let pot = potential_of(sol);
    let eq = ModeEq::for_solution(sol, &pot);
    let dr = grid_step(potential_sup(sol).sqrt().max(1.0));
    let r_far = 50.0;
    let j_end = ((r_far - 1.0) / dr).ceil() as usize;
    let profile: Vec<(f64, f64)> = (0..=j_end)
        .map(|j| {
            let r = 1.0 + j as f64 * dr;
            (r, r * sol.phi_prime(r) + sol.phi(r) / p)
        })
        .collect();
    let sup = profile.iter().map(|&(_, w)| w.abs()).fold(0.0, f64::max);
    let node_count = count_sign_changes(profile.iter().map(|&(_, w)| w), 1e-8 * sup);
    let residual = fd_residual(&eq, &profile, dr, 0.0);
    RadialMode { lambda: 0.0, profile, node_count, residual }
}

/// Symmetric tridiagonal discretization of `-Delta - V` in the weighted
/// space `L^2(r^{d-1} dr)` on `[1, r_cut]`, Dirichlet both ends:
/// divergence-form differences similarity-transformed by `r^{(d-1)/2}`.
fn weighted_fd_matrix(eq: &ModeEq, r_cut: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let dx = (r_cut - 1.0) / (n + 1) as f64;
    let wexp = eq.dim - 1.0;
    let rho = |r: f64| r.powf(wexp);
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for i in 1..=n {
        let r = 1.0 + i as f64 * dx;
        let rp = rho(r + 0.5 * dx);
        let rm = rho(r - 0.5 * dx);
        diag.push((rp + rm) / (dx * dx * rho(r)) - (eq.pot)(r));
        if i < n {
            let rn = 1.0 + (i + 1) as f64 * dx;
            off.push(-rp / (dx * dx * (rho(r) * rho(rn)).sqrt()));
        }
    }
    (diag, off)
}

fn inertia_below_zero(eq: &ModeEq, r_cut: f64, n: usize) -> usize {
    let (diag, off) = weighted_fd_matrix(eq, r_cut, n);
    sym_tridiag_count_below(&diag, &off, 0.0)
}

/// Number of negative eigenvalues of the discretized linearized operator,
/// with `n_grid` interior points.  The count must survive halving the grid
/// spacing and doubling the domain; otherwise the discretization has not
/// resolved the spectrum and an error is returned.
pub fn negative_count(sol: &StaticSolution<f64>, n_grid: usize) -> Result<usize, LinstabError> {
    let pot = potential_of(sol);
    let eq = ModeEq::for_solution(sol, &pot);
    // Shallow modes extend as far as the potential tail stays comparable to
    // their binding energy, so the cutoff must scale with the tail amplitude,
    // not the well width.
    let r_cut = quiet_radius(sol, &pot, 1e-5, 60.0).min(1000.0);
    let base = inertia_below_zero(&eq, r_cut, n_grid);
    let refined = inertia_below_zero(&eq, r_cut, 2 * n_grid);
    let widened = inertia_below_zero(&eq, 2.0 * r_cut - 1.0, 2 * n_grid);
    if base == refined && base == widened {
        Ok(base)
    } else {
        Err(LinstabError::CountNotConverged { base, refined, widened })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statics::find_static;

    fn solution(d: u32, p: u32, n: u32) -> StaticSolution<f64> {
        find_static(&Params::new(d, p).unwrap(), n, None).unwrap()
    }

    #[test]
    fn scaling_mode_solves_linearized_equation() {
        let sol = solution(3, 3, 0);
        let zm = zero_mode(&sol);
        assert_eq!(zm.lambda, 0.0);
        assert!(zm.residual < 1e-6, "residual {}", zm.residual);
        // v_0(1) = phi'(1) = b: the mode breaks the boundary condition.
        let v1 = zm.profile[0].1;
        assert!((v1 - sol.b).abs() < 1e-9 * sol.b);
        // Positive at the wall, negative in the tail (d - 2 > 1/p): at least
        // one interior node.
        assert!(zm.node_count >= 1, "node count {}", zm.node_count);
        assert!(zm.profile.last().unwrap().1 < 0.0);
    }

    #[test]
    fn free_potential_has_no_bound_states() {
        let params = Params::new(3, 3).unwrap();
        let zero = |_: f64| 0.0;
        let eq = ModeEq::new(&params, &zero);
        let rates = scan_rates(&eq, 3.0, 60.0).unwrap();
        assert!(rates.is_empty(), "spurious rates {rates:?}");
        assert_eq!(inertia_below_zero(&eq, 60.0, 2000), 0);

        let params5 = Params::new(5, 2).unwrap();
        let eq5 = ModeEq::new(&params5, &zero);
        let rates5 = scan_rates(&eq5, 3.0, 60.0).unwrap();
        assert!(rates5.is_empty(), "spurious rates {rates5:?}");
        assert_eq!(inertia_below_zero(&eq5, 60.0, 2000), 0);
    }

    #[test]
    fn ground_state_growth_rate_d3() {
        let sol = solution(3, 3, 0);
        let modes = unstable_eigenvalues(&sol, default_search_bound(&sol)).unwrap();
        assert_eq!(modes.len(), 1);
        let m = &modes[0];
        assert!((m.lambda - 0.4376132).abs() < 1e-7, "lambda {}", m.lambda);
        assert_eq!(m.node_count, 0);
        assert!(m.residual < 1e-6, "residual {}", m.residual);
        assert!((m.profile[0].1).abs() < 1e-12);
        // Bound state: the far end of the profile has decayed.
        assert!(m.profile.last().unwrap().1.abs() < 1e-3);
    }

    #[test]
    fn ground_state_growth_rate_d5() {
        let sol = solution(5, 2, 0);
        let modes = unstable_eigenvalues(&sol, default_search_bound(&sol)).unwrap();
        assert_eq!(modes.len(), 1);
        let m = &modes[0];
        assert!((m.lambda - 4.006646).abs() < 1e-6, "lambda {}", m.lambda);
        assert_eq!(m.node_count, 0);
        assert!(m.residual < 1e-6, "residual {}", m.residual);
    }

    #[test]
    fn excited_state_has_two_rates_with_interlaced_nodes() {
        let sol = solution(3, 3, 1);
        let modes = unstable_eigenvalues(&sol, default_search_bound(&sol)).unwrap();
        assert_eq!(modes.len(), 2);
        assert!(modes[0].lambda > modes[1].lambda);
        assert!(modes[1].lambda > 0.0);
        assert_eq!(modes[0].node_count, 0);
        assert_eq!(modes[1].node_count, 1);
        for m in &modes {
            assert!(m.residual < 1e-6, "residual {}", m.residual);
        }
    }

    #[test]
    fn inertia_matches_shooting_count() {
        for (d, p, n) in [(3, 3, 0), (3, 3, 1), (5, 2, 0), (5, 2, 1)] {
            let sol = solution(d, p, n);
            let modes = unstable_eigenvalues(&sol, default_search_bound(&sol)).unwrap();
            let count = negative_count(&sol, 1500).unwrap();
            assert_eq!(count, modes.len(), "(d,p,n) = ({d},{p},{n})");
            assert_eq!(count, n as usize + 1, "(d,p,n) = ({d},{p},{n})");
        }
    }
}
