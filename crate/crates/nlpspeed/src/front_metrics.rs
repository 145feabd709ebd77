//! Front tracking, speed estimation by least squares, and final-zone regime
//! prediction and classification.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::pde_sim::SimulationResult;

/// Rightmost positions where a species crosses the level `theta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontTrajectory {
    /// Species index, 1 to 3.
    pub species: usize,
    pub theta: f64,
    pub times: Vec<f64>,
    /// `None` where the whole profile lies below `theta`.
    pub positions: Vec<Option<f64>>,
}

/// Rightmost crossing of `theta` by a sampled profile: the largest grid
/// point with `u >= theta`, refined by linear interpolation with its right
/// neighbour.
pub fn locate_level(xs: &[f64], u: &[f64], theta: f64) -> Option<f64> {
    let i = u.iter().rposition(|&v| v >= theta)?;
    if i + 1 == u.len() {
        return Some(xs[i]);
    }
    let (hi, lo) = (u[i], u[i + 1]);
    let w = if hi > lo { (hi - theta) / (hi - lo) } else { 0.0 };
    Some(xs[i] + w * (xs[i + 1] - xs[i]))
}

/// Tracks the level-`theta` front of `species` (1 to 3) over all snapshots.
pub fn track_front(result: &SimulationResult, species: usize, theta: f64) -> Result<FrontTrajectory> {
    check_species(result, species)?;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidRequest(format!("level must lie in (0, 1), got {theta}")));
    }
    let xs = result.xs();
    let positions = result
        .snapshots
        .iter()
        .map(|snap| locate_level(&xs, &snap[species - 1], theta))
        .collect();
    Ok(FrontTrajectory {
        species,
        theta,
        times: result.times.clone(),
        positions,
    })
}

fn check_species(result: &SimulationResult, species: usize) -> Result<()> {
    if !(1..=3).contains(&species) || !result.active[species - 1] {
        return Err(Error::InvalidRequest(format!("species u{species} is not active in this run")));
    }
    Ok(())
}

/// Least-squares speed estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedEstimate {
    pub speed: f64,
    pub stderr: f64,
    pub r2: f64,
    pub samples: usize,
    /// `r2 >= 0.99`; otherwise the front is not yet moving at constant speed.
    pub ballistic: bool,
}

/// Minimum number of samples in the fitted window.
pub const MIN_FIT_SAMPLES: usize = 10;

/// Ordinary least-squares slope of position against time over the last
/// `window_fraction` of the time range covered by present positions.
pub fn estimate_speed(traj: &FrontTrajectory, window_fraction: f64) -> Result<SpeedEstimate> {
    let present: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.positions)
        .filter_map(|(t, x)| x.map(|x| (*t, x)))
        .collect();
    let (Some(first), Some(last)) = (present.first(), present.last()) else {
        return Err(Error::InsufficientData("front never detected".into()));
    };
    let start = last.0 - window_fraction * (last.0 - first.0);
    let window: Vec<(f64, f64)> = present.iter().copied().filter(|(t, _)| *t >= start).collect();
    let m = window.len();
    if m < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{m} samples in the fitted window, need at least {MIN_FIT_SAMPLES}"
        )));
    }
    let mf = m as f64;
    let t_mean = window.iter().map(|w| w.0).sum::<f64>() / mf;
    let x_mean = window.iter().map(|w| w.1).sum::<f64>() / mf;
    let stt: f64 = window.iter().map(|w| (w.0 - t_mean).powi(2)).sum();
    let stx: f64 = window.iter().map(|w| (w.0 - t_mean) * (w.1 - x_mean)).sum();
    let sxx: f64 = window.iter().map(|w| (w.1 - x_mean).powi(2)).sum();
    if stt == 0.0 {
        return Err(Error::InsufficientData("all samples at the same time".into()));
    }
    let speed = stx / stt;
    let intercept = x_mean - speed * t_mean;
    let sse: f64 = window
        .iter()
        .map(|w| (w.1 - intercept - speed * w.0).powi(2))
        .sum();
    let stderr = (sse / (mf - 2.0) / stt).sqrt();
    let r2 = if sxx == 0.0 { 1.0 } else { (1.0 - sse / sxx).clamp(0.0, 1.0) };
    Ok(SpeedEstimate {
        speed,
        stderr,
        r2,
        samples: m,
        ballistic: r2 >= 0.99,
    })
}

/// Level of the leading-edge front.
pub const LEADING_LEVEL: f64 = 1e-3;

/// Leading-edge and half-plateau speed estimates of one species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedPair {
    /// From the level [`LEADING_LEVEL`] front.
    pub c_bar: SpeedEstimate,
    /// From the level `plateau / 2` front.
    pub c_under: SpeedEstimate,
    /// Maximum of the species at the last snapshot.
    pub plateau: f64,
}

/// Estimates the outer and inner spreading speeds of `species` from the
/// leading-edge front and the half-plateau front, each fitted over the last
/// half of the run.
pub fn measure_speed_pair(result: &SimulationResult, species: usize) -> Result<SpeedPair> {
    check_species(result, species)?;
    let last = result
        .snapshots
        .last()
        .ok_or_else(|| Error::InsufficientData("no snapshots".into()))?;
    let plateau = last[species - 1].iter().copied().fold(0.0, f64::max);
    if plateau <= 2.0 * LEADING_LEVEL {
        return Err(Error::InsufficientData(format!(
            "species u{species} has vanished (max {plateau})"
        )));
    }
    let c_bar = estimate_speed(&track_front(result, species, LEADING_LEVEL)?, 0.5)?;
    let c_under = estimate_speed(&track_front(result, species, 0.5 * plateau)?, 0.5)?;
    Ok(SpeedPair { c_bar, c_under, plateau })
}

/// Composition of the final zone behind the front of the third species.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    U3Dominance,
    U2U3Coexist,
    U1U3Coexist,
    TripleCoexist,
}

impl Regime {
    fn from_presence(u1: bool, u2: bool) -> Self {
        match (u1, u2) {
            (false, false) => Self::U3Dominance,
            (false, true) => Self::U2U3Coexist,
            (true, false) => Self::U1U3Coexist,
            (true, true) => Self::TripleCoexist,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::U3Dominance => "U3Dominance",
            Self::U2U3Coexist => "U2U3Coexist",
            Self::U1U3Coexist => "U1U3Coexist",
            Self::TripleCoexist => "TripleCoexist",
        };
        f.write_str(name)
    }
}

/// Predicted final-zone state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZonePrediction {
    pub regime: Regime,
    /// Limit of the lower bound `A` for `u3`.
    pub a: f64,
    /// Limits of the upper bounds `B1`, `B2` for `u1`, `u2` (0 when extinct).
    pub b: [f64; 2],
    pub iterations: usize,
}

const PREDICT_MAX_ITERATIONS: usize = 1_000_000;

/// Iterates the bounds `A = 1 - a31 B1 - a32 B2` and
/// `B_i = max{1 - a_i3 A, 0}` from `B1 = B2 = 1`, so that
/// `A_1 = 1 - a31 - a32` and `A_{m+1} = A_1 + (a31 a13 + a32 a23) A_m` while
/// both `B_i` stay positive. A species whose bound reaches 0 is predicted
/// extinct and drops out of the recursion.
pub fn final_zone_predict(p: &ModelParams) -> Result<ZonePrediction> {
    if p.a31 + p.a32 >= 1.0 {
        return Err(Error::Domain {
            formula: "final-zone recursion",
            reason: format!("need a31 + a32 < 1, got {}", p.a31 + p.a32),
        });
    }
    let mut b = [1.0f64, 1.0];
    let mut a = 1.0 - p.a31 - p.a32;
    for iteration in 1..=PREDICT_MAX_ITERATIONS {
        let nb = [(1.0 - p.a13 * a).max(0.0), (1.0 - p.a23 * a).max(0.0)];
        let na = 1.0 - p.a31 * nb[0] - p.a32 * nb[1];
        let change = (na - a).abs().max((nb[0] - b[0]).abs()).max((nb[1] - b[1]).abs());
        a = na;
        b = nb;
        if change <= 1e-15 {
            return Ok(ZonePrediction {
                regime: Regime::from_presence(b[0] > 1e-12, b[1] > 1e-12),
                a,
                b,
                iterations: iteration,
            });
        }
    }
    Err(Error::NonConvergence {
        solver: "final-zone recursion",
        iterations: PREDICT_MAX_ITERATIONS,
        residual: f64::NAN,
    })
}

/// Observed final-zone state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZoneObservation {
    pub regime: Regime,
    /// Window means of `u1`, `u2`, `u3`.
    pub means: [f64; 3],
    pub window: (f64, f64),
}

/// Mean density below which a species counts as extinct.
pub const EXTINCTION_THRESHOLD: f64 = 0.05;

/// Classifies the final zone from the window means of each species over
/// `x in [0.1, 0.6] c_under T` at the last snapshot.
pub fn final_zone_classify(result: &SimulationResult, c_under: f64) -> Result<ZoneObservation> {
    let (Some(&t), Some(last)) = (result.times.last(), result.snapshots.last()) else {
        return Err(Error::InsufficientData("no snapshots".into()));
    };
    let window = (0.1 * c_under * t, 0.6 * c_under * t);
    let xs = result.xs();
    let idx: Vec<usize> = (0..xs.len())
        .filter(|&i| (window.0..=window.1).contains(&xs[i]))
        .collect();
    if c_under.is_nan() || c_under <= 0.0 || idx.is_empty() || window.1 > result.grid.length {
        return Err(Error::InvalidRequest(format!(
            "degenerate final-zone window [{}, {}]",
            window.0, window.1
        )));
    }
    let means: [f64; 3] =
        std::array::from_fn(|k| idx.iter().map(|&i| last[k][i]).sum::<f64>() / idx.len() as f64);
    if means[2] < EXTINCTION_THRESHOLD {
        return Err(Error::InvalidRequest(format!(
            "u3 is absent from the final zone (mean {})",
            means[2]
        )));
    }
    let regime = Regime::from_presence(
        means[0] >= EXTINCTION_THRESHOLD,
        means[1] >= EXTINCTION_THRESHOLD,
    );
    Ok(ZoneObservation { regime, means, window })
}
