//! Amplitude tuning at the dispersal/blowup boundary.
//!
//! For the one-parameter family f(0,x) = a sin²(πx)e^{−200(x−1/2)²} the
//! evolution interpolates between decay to zero (small a) and blowup
//! (large a). This module brackets the critical amplitude a* by geometric
//! scanning, then shrinks the bracket by k-section — k interior candidates
//! classified concurrently per round — down to a target relative width.
//! The bisection state survives interruption: it is persisted as JSON
//! after every round, and a resumed search reproduces the same iterates
//! bit for bit at equal precision.

use crate::evolution::{
    evolve, initial_profile, step, Classification, ClassifyConfig, EvolutionError, EvolveOpts,
    RunRecord, SEGrid,
};
use crate::model::Params;
use crate::num::Real;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ThresholdError {
    #[error("no dispersal/blowup bracket after {tried} amplitudes; family may be degenerate")]
    NoBracket { tried: usize },
    #[error("amplitude {a} still undecided at u_max {u_max}")]
    Stall { a: f64, u_max: f64 },
    #[error("classification not monotone: a = {a_dispersing} disperses above blowup at a = {a_blowing_up}")]
    NotMonotone {
        a_dispersing: f64,
        a_blowing_up: f64,
    },
    #[error("state file is for (d,p) = ({d},{p}), not the requested parameters")]
    WrongParams { d: u32, p: u32 },
    #[error("state file was produced at {found} precision, loaded as {expected}")]
    WrongPrecision { found: String, expected: String },
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error("state persistence failed: {0}")]
    Persist(String),
}

impl From<std::io::Error> for ThresholdError {
    fn from(e: std::io::Error) -> Self {
        ThresholdError::Persist(e.to_string())
    }
}

impl From<serde_json::Error> for ThresholdError {
    fn from(e: serde_json::Error) -> Self {
        ThresholdError::Persist(e.to_string())
    }
}

/// How candidate amplitudes are evolved and judged.
#[derive(Debug, Clone)]
pub struct FamilyConfig<T> {
    /// Overall multiplier on the profile (deforms the family; 0 kills it).
    pub scale: T,
    /// First amplitude tried by the bracket scan.
    pub seed: T,
    /// Classification horizon in retarded time.
    pub u_max: T,
    /// Ceiling for the undecided-retry doubling of u_max.
    pub u_max_cap: T,
    pub du: Option<T>,
    pub classify: ClassifyConfig,
}

impl<T: Real> Default for FamilyConfig<T> {
    fn default() -> Self {
        FamilyConfig {
            scale: T::one(),
            seed: T::one(),
            u_max: T::from_i(20),
            u_max_cap: T::from_i(160),
            du: None,
            classify: ClassifyConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HistoryEntry<T> {
    pub a: T,
    pub classification: Classification,
    /// Retarded time at which the run classified.
    pub u_elapsed: f64,
}

#[derive(Debug, Clone)]
pub struct BisectionState<T> {
    /// Largest amplitude known to disperse.
    pub a_lo: T,
    /// Smallest amplitude known to blow up.
    pub a_hi: T,
    pub history: Vec<HistoryEntry<T>>,
    pub target_width: T,
    pub rounds: usize,
}

impl<T: Real> BisectionState<T> {
    pub fn rel_width(&self) -> T {
        (self.a_hi - self.a_lo) / self.a_hi
    }

    pub fn converged(&self) -> bool {
        self.rel_width().to_f64() < self.target_width.to_f64()
    }

    /// Every recorded amplitude at or below a_lo must have dispersed, and
    /// every one at or above a_hi must have blown up.
    pub fn check_history(&self) -> Result<(), ThresholdError> {
        let mut worst: Option<(f64, f64)> = None;
        for e in &self.history {
            let bad = match e.classification {
                Classification::Disperses => e.a > self.a_lo,
                Classification::BlowsUp => e.a < self.a_hi,
                Classification::Undecided => false,
            };
            if bad {
                let (dsp, blw) = match e.classification {
                    Classification::Disperses => (e.a.to_f64(), self.a_hi.to_f64()),
                    _ => (self.a_lo.to_f64(), e.a.to_f64()),
                };
                worst = Some((dsp, blw));
            }
        }
        match worst {
            None => Ok(()),
            Some((a_dispersing, a_blowing_up)) => Err(ThresholdError::NotMonotone {
                a_dispersing,
                a_blowing_up,
            }),
        }
    }
}

/// Evolves one amplitude until it classifies, doubling the horizon on an
/// undecided verdict up to the configured cap.
pub fn classify_amplitude<T: Real>(
    grid: &SEGrid<T>,
    cfg: &FamilyConfig<T>,
    a: T,
) -> Result<(Classification, f64), ThresholdError> {
    let state0 = initial_profile(grid, cfg.scale * a);
    if state0.values.iter().all(|&v| v == T::zero()) {
        // Zero is an exact fixed point; no need to evolve it.
        return Ok((Classification::Disperses, 0.0));
    }
    let mut u_max = cfg.u_max;
    loop {
        let opts = EvolveOpts {
            du: cfg.du,
            record_stride: 50,
            stop_on_classification: true,
            probes: Vec::new(),
            classify: cfg.classify.clone(),
            ..EvolveOpts::default()
        };
        let rec = evolve(grid, &state0, u_max, &opts)?;
        let u_end = rec.sup_series.last().map(|&(u, _)| u.to_f64()).unwrap_or(0.0);
        match rec.classification {
            Classification::Undecided => {
                if u_max.to_f64() >= cfg.u_max_cap.to_f64() {
                    return Err(ThresholdError::Stall {
                        a: a.to_f64(),
                        u_max: u_max.to_f64(),
                    });
                }
                u_max = (u_max + u_max).min(cfg.u_max_cap);
            }
            c => return Ok((c, u_end)),
        }
    }
}

/// Geometric scan from the seed until one dispersing and one blowing-up
/// amplitude are known.
pub fn bracket<T: Real>(
    grid: &SEGrid<T>,
    cfg: &FamilyConfig<T>,
    target_width: T,
) -> Result<BisectionState<T>, ThresholdError> {
    const SCAN_BUDGET: usize = 60;
    let mut history = Vec::new();
    let mut a = cfg.seed;
    let (c0, u0) = classify_amplitude(grid, cfg, a)?;
    history.push(HistoryEntry {
        a,
        classification: c0,
        u_elapsed: u0,
    });
    let going_up = c0 == Classification::Disperses;
    for _ in 0..SCAN_BUDGET {
        let prev = a;
        a = if going_up {
            a + a
        } else {
            a * T::ratio(1, 2)
        };
        let (c, u) = classify_amplitude(grid, cfg, a)?;
        history.push(HistoryEntry {
            a,
            classification: c,
            u_elapsed: u,
        });
        if c != c0 {
            let (a_lo, a_hi) = if going_up { (prev, a) } else { (a, prev) };
            let state = BisectionState {
                a_lo,
                a_hi,
                history,
                target_width,
                rounds: 0,
            };
            state.check_history()?;
            return Ok(state);
        }
    }
    Err(ThresholdError::NoBracket {
        tried: history.len(),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct BisectBudget {
    pub max_rounds: usize,
    /// Interior candidates classified concurrently per round.
    pub k: usize,
}

impl Default for BisectBudget {
    fn default() -> Self {
        BisectBudget {
            max_rounds: 200,
            k: 1,
        }
    }
}

/// Shrinks the bracket by k-section rounds until the target relative width
/// or the round budget is reached. After every round the state is checked
/// for monotonicity and, when a path is given, persisted.
pub fn bisect<T: Real>(
    grid: &SEGrid<T>,
    cfg: &FamilyConfig<T>,
    state: &mut BisectionState<T>,
    budget: BisectBudget,
    persist: Option<&Path>,
) -> Result<(), ThresholdError> {
    let params = *grid.params();
    let k = budget.k.max(1);
    for _ in 0..budget.max_rounds {
        if state.converged() {
            break;
        }
        let gap = state.a_hi - state.a_lo;
        let denom = T::from_i(k as i64 + 1);
        let candidates: Vec<T> = (1..=k)
            .map(|i| state.a_lo + gap * T::from_i(i as i64) / denom)
            .collect();
        let results: Vec<(T, Classification, f64)> = if k == 1 {
            let a = candidates[0];
            match classify_amplitude(grid, cfg, a) {
                Ok((c, u)) => vec![(a, c, u)],
                Err(e) => {
                    if let Some(p) = persist {
                        save_state(state, &params, p)?;
                    }
                    return Err(e);
                }
            }
        } else {
            let collected: Result<Vec<_>, ThresholdError> = candidates
                .par_iter()
                .map(|&a| classify_amplitude(grid, cfg, a).map(|(c, u)| (a, c, u)))
                .collect();
            match collected {
                Ok(v) => v,
                Err(e) => {
                    if let Some(p) = persist {
                        save_state(state, &params, p)?;
                    }
                    return Err(e);
                }
            }
        };

        // Tightest consistent pair, with an explicit monotonicity audit:
        // a dispersing candidate above any blowing-up one means the
        // classification is not a threshold and the search must stop.
        let mut max_disp = state.a_lo;
        let mut min_blow = state.a_hi;
        for &(a, c, u) in &results {
            state.history.push(HistoryEntry {
                a,
                classification: c,
                u_elapsed: u,
            });
            match c {
                Classification::Disperses => max_disp = max_disp.max(a),
                Classification::BlowsUp => min_blow = min_blow.min(a),
                Classification::Undecided => {}
            }
        }
        if max_disp.to_f64() >= min_blow.to_f64() {
            return Err(ThresholdError::NotMonotone {
                a_dispersing: max_disp.to_f64(),
                a_blowing_up: min_blow.to_f64(),
            });
        }
        state.a_lo = max_disp;
        state.a_hi = min_blow;
        state.rounds += 1;
        state.check_history()?;
        if let Some(p) = persist {
            save_state(state, &params, p)?;
        }
    }
    Ok(())
}

/// Closest approach to a reference profile over the recorded snapshots:
/// (u, min over snapshots of ‖f(u,·) − f₀‖_∞ / ‖f₀‖_∞).
pub fn ground_state_approach<T: Real>(
    record: &RunRecord<T>,
    f0_values: &[T],
) -> Result<(T, T), EvolutionError> {
    let scale = f0_values
        .iter()
        .fold(T::zero(), |m, &v| m.max(v.abs()));
    let mut best: Option<(T, T)> = None;
    for (u, snap) in &record.snapshots {
        if snap.len() != f0_values.len() {
            return Err(EvolutionError::WrongLength {
                expected: f0_values.len(),
                got: snap.len(),
            });
        }
        let mut dist = T::zero();
        for (a, b) in snap.iter().zip(f0_values) {
            dist = dist.max((*a - *b).abs());
        }
        let rel = dist / scale;
        if best.map(|(_, d)| rel < d).unwrap_or(true) {
            best = Some((*u, rel));
        }
    }
    best.ok_or(EvolutionError::WrongLength {
        expected: f0_values.len(),
        got: 0,
    })
}

/// First retarded time at which two amplitudes' evolutions differ by more
/// than the given sup-norm threshold; None if they never do before u_max.
pub fn separation_time<T: Real>(
    grid: &SEGrid<T>,
    cfg: &FamilyConfig<T>,
    a_first: T,
    a_second: T,
    threshold: T,
) -> Result<Option<T>, ThresholdError> {
    let du = cfg.du.unwrap_or_else(|| grid.default_du());
    let mut lo = initial_profile(grid, cfg.scale * a_first);
    let mut hi = initial_profile(grid, cfg.scale * a_second);
    while lo.u.to_f64() < cfg.u_max.to_f64() {
        let mut diff = T::zero();
        for (a, b) in lo.values.iter().zip(&hi.values) {
            diff = diff.max((*a - *b).abs());
        }
        if diff.to_f64() > threshold.to_f64() {
            return Ok(Some(lo.u));
        }
        if !lo.values.iter().chain(&hi.values).all(|v| v.is_finite()) {
            return Ok(Some(lo.u));
        }
        lo = step(grid, &lo, du)?.0;
        hi = step(grid, &hi, du)?.0;
    }
    Ok(None)
}

#[derive(Serialize, Deserialize)]
struct SnapEntry {
    a: [f64; 2],
    classification: String,
    u_elapsed: f64,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    d: u32,
    p: u32,
    precision: String,
    target_width: [f64; 2],
    a_lo: [f64; 2],
    a_hi: [f64; 2],
    rounds: usize,
    history: Vec<SnapEntry>,
}

/// Two-limb split that is exact for both f64 and double-double values, so
/// a JSON round trip preserves the amplitude bit for bit.
fn split<T: Real>(x: T) -> [f64; 2] {
    let hi = x.to_f64();
    let lo = (x - T::from_f64(hi)).to_f64();
    [hi, lo]
}

fn join<T: Real>(v: [f64; 2]) -> T {
    T::from_f64(v[0]) + T::from_f64(v[1])
}

fn precision_name<T: Real>() -> &'static str {
    if T::eps().to_f64() < 1e-17 {
        "extended"
    } else {
        "double"
    }
}

fn class_name(c: Classification) -> &'static str {
    match c {
        Classification::Disperses => "disperses",
        Classification::BlowsUp => "blows_up",
        Classification::Undecided => "undecided",
    }
}

fn class_from(s: &str) -> Classification {
    match s {
        "disperses" => Classification::Disperses,
        "blows_up" => Classification::BlowsUp,
        _ => Classification::Undecided,
    }
}

/// Writes the state as JSON, atomically (temp file + rename).
pub fn save_state<T: Real>(
    state: &BisectionState<T>,
    params: &Params,
    path: &Path,
) -> Result<(), ThresholdError> {
    let snap = Snapshot {
        d: params.d(),
        p: params.p(),
        precision: precision_name::<T>().to_string(),
        target_width: split(state.target_width),
        a_lo: split(state.a_lo),
        a_hi: split(state.a_hi),
        rounds: state.rounds,
        history: state
            .history
            .iter()
            .map(|e| SnapEntry {
                a: split(e.a),
                classification: class_name(e.classification).to_string(),
                u_elapsed: e.u_elapsed,
            })
            .collect(),
    };
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, serde_json::to_string_pretty(&snap)?)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_state<T: Real>(
    params: &Params,
    path: &Path,
) -> Result<BisectionState<T>, ThresholdError> {
    let snap: Snapshot = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if snap.d != params.d() || snap.p != params.p() {
        return Err(ThresholdError::WrongParams {
            d: snap.d,
            p: snap.p,
        });
    }
    let expected = precision_name::<T>();
    if snap.precision != expected {
        return Err(ThresholdError::WrongPrecision {
            found: snap.precision,
            expected: expected.to_string(),
        });
    }
    Ok(BisectionState {
        a_lo: join(snap.a_lo),
        a_hi: join(snap.a_hi),
        target_width: join(snap.target_width),
        rounds: snap.rounds,
        history: snap
            .history
            .into_iter()
            .map(|e| HistoryEntry {
                a: join(e.a),
                classification: class_from(&e.classification),
                u_elapsed: e.u_elapsed,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::build_grid;
    use crate::statics::find_static;

    #[test]
    fn dead_family_reports_no_bracket() {
        let params = Params::new(5, 2).unwrap();
        let grid = build_grid::<f64>(&params, 9, 16).unwrap();
        let cfg = FamilyConfig {
            scale: 0.0,
            ..FamilyConfig::default()
        };
        match bracket(&grid, &cfg, 1e-6) {
            Err(ThresholdError::NoBracket { tried }) => assert!(tried > 10),
            other => panic!("expected NoBracket, got {other:?}"),
        }
    }

    #[test]
    fn bracket_bisect_persist_resume() {
        let params = Params::new(5, 2).unwrap();
        let grid = build_grid::<f64>(&params, 9, 16).unwrap();
        let cfg = FamilyConfig::<f64>::default();
        let state0 = bracket(&grid, &cfg, 1e-30).unwrap();
        assert!(state0.a_lo < state0.a_hi);
        assert!(state0.a_lo > 0.0);
        state0.check_history().unwrap();

        // Two persisted rounds, then resume from disk for two more.
        let path = std::env::temp_dir().join(format!(
            "exwave-bisect-test-{}.json",
            std::process::id()
        ));
        let mut resumed = state0.clone();
        bisect(
            &grid,
            &cfg,
            &mut resumed,
            BisectBudget {
                max_rounds: 2,
                k: 1,
            },
            Some(&path),
        )
        .unwrap();
        let mut resumed = load_state::<f64>(&params, &path).unwrap();
        bisect(
            &grid,
            &cfg,
            &mut resumed,
            BisectBudget {
                max_rounds: 2,
                k: 1,
            },
            Some(&path),
        )
        .unwrap();

        // Uninterrupted four rounds of plain midpoint bisection.
        let mut straight = state0.clone();
        bisect(
            &grid,
            &cfg,
            &mut straight,
            BisectBudget {
                max_rounds: 4,
                k: 1,
            },
            None,
        )
        .unwrap();
        std::fs::remove_file(&path).ok();

        assert_eq!(resumed.a_lo.to_bits(), straight.a_lo.to_bits());
        assert_eq!(resumed.a_hi.to_bits(), straight.a_hi.to_bits());
        assert_eq!(resumed.rounds, 4);
        // k = 1 is plain bisection: each round halves the bracket.
        let w0 = state0.a_hi - state0.a_lo;
        let w4 = straight.a_hi - straight.a_lo;
        assert!((w4 / w0 - 1.0 / 16.0).abs() < 1e-12);
        straight.check_history().unwrap();

        // Each interior midpoint matches the manual sequence.
        let mut lo = state0.a_lo;
        let mut hi = state0.a_hi;
        for e in &straight.history[state0.history.len()..] {
            let mid = lo + (hi - lo) / 2.0;
            assert_eq!(e.a.to_bits(), mid.to_bits());
            match e.classification {
                Classification::Disperses => lo = mid,
                Classification::BlowsUp => hi = mid,
                Classification::Undecided => unreachable!(),
            }
        }
    }

    #[test]
    fn approach_distance_zero_for_static_start_large_for_generic() {
        let params = Params::new(5, 2).unwrap();
        let grid = build_grid::<f64>(&params, 9, 16).unwrap();
        let sol = find_static::<f64>(&params, 0, None).unwrap();
        let f0 = crate::evolution::static_state(&grid, &sol);

        let opts = EvolveOpts {
            record_stride: 200,
            snapshot_stride: Some(200),
            probes: Vec::new(),
            ..EvolveOpts::default()
        };
        let rec = evolve(&grid, &f0, 0.5, &opts).unwrap();
        let (u_best, dist) = ground_state_approach(&rec, &f0.values).unwrap();
        assert_eq!(u_best, 0.0);
        assert!(dist < 1e-6, "static start distance {dist:.3e}");

        let generic = initial_profile(&grid, 0.01);
        let rec = evolve(&grid, &generic, 2.0, &opts).unwrap();
        let (_, dist) = ground_state_approach(&rec, &f0.values).unwrap();
        assert!(dist > 0.5, "generic data unexpectedly close: {dist:.3e}");
    }
}
