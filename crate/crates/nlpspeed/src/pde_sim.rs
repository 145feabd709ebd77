//! Explicit-Euler, second-order central-difference simulator for the
//! three-species system on `[0, L]` with zero-flux boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HypothesisContext, ModelParams};

/// Uniform grid with `n` points `x_i = (i + 1) dx`, `dx = L / (n + 1)`, and a
/// stable time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid1D {
    pub length: f64,
    pub n: usize,
    pub dx: f64,
    pub dt: f64,
    pub t_final: f64,
}

impl Grid1D {
    /// Builds a grid with the largest time step allowed by
    /// `dt <= 0.9 dx^2 / (2 max d)` and `dt <= 0.1 / max r`, shrunk so that
    /// `t_final` is a whole number of steps.
    pub fn new(p: &ModelParams, length: f64, n: usize, t_final: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParameter {
                name: "length",
                value: length,
                reason: "must be finite and positive",
            });
        }
        if n < 3 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: n as f64,
                reason: "need at least 3 grid points",
            });
        }
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::InvalidParameter {
                name: "t_final",
                value: t_final,
                reason: "must be finite and positive",
            });
        }
        let dx = length / (n + 1) as f64;
        let d_max = p.diffusions().into_iter().fold(0.0, f64::max);
        let r_max = p.growth_rates().into_iter().fold(0.0, f64::max);
        let dt_max = (0.9 * dx * dx / (2.0 * d_max)).min(0.1 / r_max);
        let steps = (t_final / dt_max).ceil();
        Ok(Self {
            length,
            n,
            dx,
            dt: t_final / steps,
            t_final,
        })
    }

    /// Grid point `x_i`.
    pub fn x(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.dx
    }

    /// Number of time steps to reach `t_final`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Initial profile of one species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialProfile {
    /// Identically zero.
    Zero,
    /// `1` on `[lo, hi]`, `0` elsewhere.
    Indicator { lo: f64, hi: f64 },
    /// `1` for `x <= plateau_end`, `exp(-lambda (x - plateau_end))` beyond.
    ExpDecay { lambda: f64, plateau_end: f64 },
}

impl InitialProfile {
    /// Value at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Indicator { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Self::ExpDecay { lambda, plateau_end } => {
                if x <= plateau_end {
                    1.0
                } else {
                    (-lambda * (x - plateau_end)).exp()
                }
            }
        }
    }

    /// Checks that the profile is well formed on `[0, length]`.
    pub fn validate(&self, length: f64) -> Result<()> {
        match *self {
            Self::Zero => Ok(()),
            Self::Indicator { lo, hi } => {
                if lo < hi && lo >= 0.0 && hi <= length {
                    Ok(())
                } else {
                    Err(Error::Domain {
                        formula: "indicator initial data",
                        reason: format!("need 0 <= lo < hi <= L = {length}, got [{lo}, {hi}]"),
                    })
                }
            }
            Self::ExpDecay { lambda, plateau_end } => {
                if lambda.is_finite() && lambda > 0.0 && (0.0..length).contains(&plateau_end) {
                    Ok(())
                } else {
                    Err(Error::Domain {
                        formula: "exponential initial data",
                        reason: format!(
                            "need lambda > 0 and 0 <= x0 < L = {length}, got {lambda}, {plateau_end}"
                        ),
                    })
                }
            }
        }
    }
}

/// Initial profiles of the three species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub u1: InitialProfile,
    pub u2: InitialProfile,
    pub u3: InitialProfile,
}

impl InitialData {
    /// The indicator of `[lo, hi]` for all three species.
    pub fn indicator_all(lo: f64, hi: f64) -> Self {
        let p = InitialProfile::Indicator { lo, hi };
        Self { u1: p, u2: p, u3: p }
    }

    /// Checks every profile on `[0, length]`.
    pub fn validate(&self, length: f64) -> Result<()> {
        self.profiles().iter().try_for_each(|p| p.validate(length))
    }

    fn profiles(&self) -> [InitialProfile; 3] {
        [self.u1, self.u2, self.u3]
    }
}

/// Which of the three equations are integrated; inactive species stay 0.
pub type SpeciesMask = [bool; 3];

/// Snapshots of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub params: ModelParams,
    pub grid: Grid1D,
    pub active: SpeciesMask,
    /// Actual snapshot times (the first step time at or after each request).
    pub times: Vec<f64>,
    /// `snapshots[k][species][i]`.
    pub snapshots: Vec<[Vec<f64>; 3]>,
}

impl SimulationResult {
    /// Grid point coordinates.
    pub fn xs(&self) -> Vec<f64> {
        (0..self.grid.n).map(|i| self.grid.x(i)).collect()
    }
}

/// Tolerance of the invariant-region check.
const RANGE_SLACK: f64 = 1e-9;

/// Integrates the system to `grid.t_final`, recording the state at each
/// requested time (requests beyond `t_final` are ignored).
pub fn simulate(
    p: &ModelParams,
    init: &InitialData,
    grid: &Grid1D,
    snapshot_times: &[f64],
    active: SpeciesMask,
) -> Result<SimulationResult> {
    p.validate()?;
    init.validate(grid.length)?;
    let profiles = init.profiles();
    let n = grid.n;
    let mut u: [Vec<f64>; 3] = std::array::from_fn(|k| {
        if active[k] {
            (0..n).map(|i| profiles[k].eval(grid.x(i))).collect()
        } else {
            vec![0.0; n]
        }
    });
    let mut next = u.clone();

    let mut requests: Vec<f64> = snapshot_times
        .iter()
        .copied()
        .filter(|t| *t <= grid.t_final + 1e-12)
        .collect();
    requests.sort_by(f64::total_cmp);
    let mut requests = requests.into_iter().peekable();

    let d = p.diffusions();
    let r = p.growth_rates();
    let a = p.competition_matrix();
    let kappa: [f64; 3] = std::array::from_fn(|k| grid.dt * d[k] / (grid.dx * grid.dx));
    let growth: [f64; 3] = std::array::from_fn(|k| grid.dt * r[k]);

    let mut times = Vec::new();
    let mut snapshots = Vec::new();
    let steps = grid.steps();
    for step in 0..=steps {
        let t = step as f64 * grid.dt;
        if requests.peek().is_some_and(|&req| t >= req - 1e-9 * grid.dt) {
            while requests.peek().is_some_and(|&req| t >= req - 1e-9 * grid.dt) {
                requests.next();
            }
            check_range(&u, grid, t)?;
            times.push(t);
            snapshots.push(u.clone());
        }
        if step == steps {
            break;
        }
        euler_step(&u, &mut next, &kappa, &growth, &a, active);
        std::mem::swap(&mut u, &mut next);
    }
    check_range(&u, grid, grid.t_final)?;
    Ok(SimulationResult {
        params: *p,
        grid: *grid,
        active,
        times,
        snapshots,
    })
}

fn euler_step(
    u: &[Vec<f64>; 3],
    next: &mut [Vec<f64>; 3],
    kappa: &[f64; 3],
    growth: &[f64; 3],
    a: &[[f64; 3]; 3],
    active: SpeciesMask,
) {
    let n = u[0].len();
    let (u1, u2, u3) = (&u[0], &u[1], &u[2]);
    for k in 0..3 {
        if !active[k] {
            continue;
        }
        let uk = &u[k];
        let out = &mut next[k];
        let (ak1, ak2, ak3) = (a[k][0], a[k][1], a[k][2]);
        let (kap, g) = (kappa[k], growth[k]);
        for i in 0..n {
            // Ghost points mirror the boundary values (zero flux).
            let left = if i == 0 { uk[0] } else { uk[i - 1] };
            let right = if i + 1 == n { uk[n - 1] } else { uk[i + 1] };
            let c = uk[i];
            let pressure = 1.0 - ak1 * u1[i] - ak2 * u2[i] - ak3 * u3[i];
            out[i] = c + kap * (left - 2.0 * c + right) + g * c * pressure;
        }
    }
}

fn check_range(u: &[Vec<f64>; 3], grid: &Grid1D, t: f64) -> Result<()> {
    for (k, field) in u.iter().enumerate() {
        if let Some(i) = field
            .iter()
            .position(|v| !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(v))
        {
            return Err(Error::Instability {
                time: t,
                species: k + 1,
                x: grid.x(i),
                value: field[i],
            });
        }
    }
    Ok(())
}

/// Minimum of `a31 u1 + a32 u2` over `x in [(c2 - eta) t, (c2 + eta) t]` for
/// the last quarter of the snapshots.
pub fn no_gap_diagnostic(result: &SimulationResult, ctx: &HypothesisContext, eta: f64) -> Result<f64> {
    if result.times.is_empty() {
        return Err(Error::InsufficientData("no snapshots".into()));
    }
    let p = &result.params;
    let count = result.times.len();
    let first = count - count.div_ceil(4);
    let mut min = f64::INFINITY;
    for (t, snap) in result.times[first..].iter().zip(&result.snapshots[first..]) {
        let (lo, hi) = ((ctx.c2 - eta) * t, (ctx.c2 + eta) * t);
        if hi > result.grid.length || lo < 0.0 {
            return Err(Error::InvalidRequest(format!(
                "window [{lo}, {hi}] at t = {t} leaves the domain [0, {}]",
                result.grid.length
            )));
        }
        for (i, (u1, u2)) in snap[0].iter().zip(&snap[1]).enumerate() {
            if (lo..=hi).contains(&result.grid.x(i)) {
                min = min.min(p.a31 * u1 + p.a32 * u2);
            }
        }
    }
    if min.is_finite() {
        Ok(min)
    } else {
        Err(Error::InvalidRequest("diagnostic window contains no grid points".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DecayRate;

    fn params() -> ModelParams {
        ModelParams::published(0.01, 1.1, 1.1)
    }

    #[test]
    fn grid_respects_stability_bounds() {
        let p = params();
        let g = Grid1D::new(&p, 1500.0, 15000, 400.0).unwrap();
        assert!(g.dt <= 0.9 * g.dx * g.dx / 2.0 + 1e-15);
        assert!(g.dt <= 0.1 / 1.1);
        assert!((g.steps() as f64 * g.dt - 400.0).abs() < 1e-9);
    }

    #[test]
    fn zero_data_stays_zero() {
        let p = params();
        let g = Grid1D::new(&p, 100.0, 500, 5.0).unwrap();
        let zero = InitialData {
            u1: InitialProfile::Zero,
            u2: InitialProfile::Zero,
            u3: InitialProfile::Zero,
        };
        let res = simulate(&p, &zero, &g, &[0.0, 5.0], [true; 3]).unwrap();
        assert_eq!(res.times.len(), 2);
        assert!(res.snapshots.iter().all(|s| s.iter().all(|f| f.iter().all(|v| *v == 0.0))));
    }

    #[test]
    fn inactive_species_stay_zero() {
        let p = params();
        let g = Grid1D::new(&p, 100.0, 500, 2.0).unwrap();
        let res = simulate(&p, &InitialData::indicator_all(0.0, 10.0), &g, &[2.0], [false, false, true]).unwrap();
        assert!(res.snapshots[0][0].iter().all(|v| *v == 0.0));
        assert!(res.snapshots[0][2].iter().any(|v| *v > 0.5));
    }

    #[test]
    fn exp_decay_profile() {
        let f = InitialProfile::ExpDecay { lambda: 0.5, plateau_end: 10.0 };
        assert_eq!(f.eval(3.0), 1.0);
        assert!((f.eval(12.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn diagnostic_constant_fields() {
        let p = params();
        let g = Grid1D::new(&p, 100.0, 99, 1.0).unwrap();
        let ctx = HypothesisContext::new(&p, 2.0, 1.9, DecayRate::Infinite).unwrap();
        let make = |u1: f64, u2: f64| SimulationResult {
            params: p,
            grid: g,
            active: [true; 3],
            times: vec![10.0, 20.0],
            snapshots: vec![[vec![u1; 99], vec![u2; 99], vec![0.0; 99]]; 2],
        };
        assert_eq!(no_gap_diagnostic(&make(1.0, 0.0), &ctx, 0.1).unwrap(), p.a31);
        assert_eq!(no_gap_diagnostic(&make(0.0, 0.0), &ctx, 0.1).unwrap(), 0.0);
    }
}
