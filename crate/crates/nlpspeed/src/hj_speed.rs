//! Piecewise-constant rate profiles and solvers for the obstacle
//! Hamilton-Jacobi variational inequality in speed space
//!
//! ```text
//! min{ rho - s rho' + d |rho'|^2 + R(s), rho } = 0,   s > 0,   rho(0) = 0,
//! ```
//!
//! whose free boundary `sup{s : rho(s) = 0}` is the spreading speed of the
//! slowest species. Two independent solvers are provided: a monotone upwind
//! grid scheme marching the self-similar time-dependent problem to steady
//! state, and a dynamic-programming oracle over piecewise-linear paths with
//! vertices on the rays where the rate jumps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{c_llw, sigma3, DecayRate, HypothesisContext, ModelParams};

/// Piecewise-constant rate `R(s)`.
///
/// `values[k]` applies on `(breakpoints[k-1], breakpoints[k]]`, with the
/// first interval starting at 0 and the last one extending to infinity.
/// The last value is the far-field rate `r_hat`; `R = r_hat - g` with
/// `g >= 0` supported in `[0, g_support]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateProfile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    g_support: f64,
}

impl RateProfile {
    /// Builds a rate profile. Adjacent intervals with equal values are merged.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::Domain {
                formula: "rate profile",
                reason: format!(
                    "{} values for {} breakpoints",
                    values.len(),
                    breakpoints.len()
                ),
            });
        }
        if breakpoints.iter().any(|b| !(b.is_finite() && *b > 0.0))
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::Domain {
                formula: "rate profile",
                reason: format!("breakpoints must be positive and strictly increasing: {breakpoints:?}"),
            });
        }
        let base = *values.last().expect("at least one value");
        if values.iter().any(|v| !v.is_finite() || *v > base) {
            return Err(Error::Domain {
                formula: "rate profile",
                reason: format!("values must be finite and not exceed the far-field rate: {values:?}"),
            });
        }
        let mut merged_b = Vec::with_capacity(breakpoints.len());
        let mut merged_v = vec![values[0]];
        for (b, v) in breakpoints.iter().zip(&values[1..]) {
            if *v != *merged_v.last().expect("non-empty") {
                merged_b.push(*b);
                merged_v.push(*v);
            }
        }
        let g_support = merged_b.last().copied().unwrap_or(0.0);
        Ok(Self {
            breakpoints: merged_b,
            values: merged_v,
            g_support,
        })
    }

    /// Constant rate `r_hat` (so `g = 0`).
    pub fn constant(r_hat: f64) -> Self {
        Self {
            breakpoints: Vec::new(),
            values: vec![r_hat],
            g_support: 0.0,
        }
    }

    /// Declares a larger support bound `c_g` for `g`.
    pub fn with_support(mut self, c_g: f64) -> Self {
        self.g_support = self.g_support.max(c_g);
        self
    }

    /// Jump locations, strictly increasing.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Interval values, one more than the breakpoints.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Far-field rate `r_hat`.
    pub fn base_rate(&self) -> f64 {
        *self.values.last().expect("non-empty")
    }

    /// Declared support bound `c_g` of `g = r_hat - R`.
    pub fn g_support(&self) -> f64 {
        self.g_support
    }

    /// `sup g`.
    pub fn g_max(&self) -> f64 {
        let base = self.base_rate();
        self.values.iter().map(|v| base - v).fold(0.0, f64::max)
    }

    /// Index of the interval containing `s`.
    pub fn interval_of(&self, s: f64) -> usize {
        self.breakpoints.partition_point(|b| *b < s)
    }

    /// `R(s)`.
    pub fn rate_at(&self, s: f64) -> f64 {
        self.values[self.interval_of(s)]
    }

    /// Support bound enlarged, if needed, to the smallest value for which
    /// the single-rate profile is the solution beyond it:
    /// `d m + r_hat / m` with `m = min(lambda, sqrt(r_hat/d))`.
    pub fn effective_support(&self, d: f64, lambda: DecayRate) -> f64 {
        let r = self.base_rate();
        let m = lambda.min_with((r / d).sqrt());
        self.g_support.max(d * m + r / m)
    }
}

/// Builds `R^mu(s) = r3 (1 - mu a31 1[c2 < s <= c1] - a32 1[s <= c2])`.
pub fn build_rate(p: &ModelParams, ctx: &HypothesisContext, mu: f64) -> Result<RateProfile> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidParameter {
            name: "mu",
            value: mu,
            reason: "must lie in [0, 1]",
        });
    }
    let rate = RateProfile::new(
        vec![ctx.c2, ctx.c1],
        vec![
            p.r3 * (1.0 - p.a32),
            p.r3 * (1.0 - mu * p.a31),
            p.r3,
        ],
    )?;
    Ok(if rate.g_max() > 0.0 {
        rate.with_support(ctx.c1)
    } else {
        rate
    })
}

/// Builds the `mu = 1` rate additionally lowered by `r3 a31` on `[0, beta3]`.
pub fn build_underline_rate(
    p: &ModelParams,
    ctx: &HypothesisContext,
    beta3: f64,
) -> Result<RateProfile> {
    if !(beta3 > 0.0 && beta3 < ctx.c2) {
        return Err(Error::Domain {
            formula: "underline rate",
            reason: format!("need 0 < beta3 < c2 = {}, got {beta3}", ctx.c2),
        });
    }
    let rate = RateProfile::new(
        vec![beta3, ctx.c2, ctx.c1],
        vec![
            p.r3 * (1.0 - p.a31 - p.a32),
            p.r3 * (1.0 - p.a32),
            p.r3 * (1.0 - p.a31),
            p.r3,
        ],
    )?;
    Ok(if rate.g_max() > 0.0 {
        rate.with_support(ctx.c1)
    } else {
        rate
    })
}

/// Analytic form of one piece of a speed profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    /// `rho = 0`.
    Zero,
    /// `rho = slope s + intercept`.
    Linear { slope: f64, intercept: f64 },
    /// `rho = s^2 / (4 d) - r`.
    Parabola { d: f64, r: f64 },
}

impl Piece {
    /// Line `slope (s - root)`.
    pub fn line_through(slope: f64, root: f64) -> Self {
        Self::Linear {
            slope,
            intercept: -slope * root,
        }
    }

    /// Line `slope s - (d slope^2 + r)`, tangent to the parabola `s^2/(4d) - r`.
    pub fn tangent(slope: f64, d: f64, r: f64) -> Self {
        Self::Linear {
            slope,
            intercept: -(d * slope * slope + r),
        }
    }

    /// Value at `s`.
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Linear { slope, intercept } => slope * s + intercept,
            Self::Parabola { d, r } => s * s / (4.0 * d) - r,
        }
    }
}

/// A piece together with its validity interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub piece: Piece,
}

/// A speed profile sampled on the uniform grid `s_i = i s_max / n`,
/// optionally carrying the analytic pieces it was sampled from.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedFunction {
    s_max: f64,
    values: Vec<f64>,
    segments: Option<Vec<Segment>>,
}

impl SpeedFunction {
    /// Wraps grid samples `values[i] = rho(i s_max / n)`.
    pub fn from_samples(s_max: f64, values: Vec<f64>) -> Self {
        assert!(values.len() >= 2, "need at least two samples");
        Self {
            s_max,
            values,
            segments: None,
        }
    }

    /// Samples analytic segments covering `[0, s_max]` on `n + 1` points.
    /// The last segment is extended to `s_max` if it ends earlier.
    pub fn from_segments(segments: Vec<Segment>, s_max: f64, n: usize) -> Self {
        assert!(!segments.is_empty() && n >= 1);
        let ds = s_max / n as f64;
        let values = (0..=n)
            .map(|i| eval_segments(&segments, i as f64 * ds))
            .collect();
        Self {
            s_max,
            values,
            segments: Some(segments),
        }
    }

    /// Right end of the grid.
    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    /// Number of grid intervals.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    /// Grid spacing.
    pub fn ds(&self) -> f64 {
        self.s_max / self.n() as f64
    }

    /// Grid speed `s_i`.
    pub fn s(&self, i: usize) -> f64 {
        i as f64 * self.ds()
    }

    /// Grid samples.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Analytic pieces, when known.
    pub fn segments(&self) -> Option<&[Segment]> {
        self.segments.as_deref()
    }

    /// `rho(s)`: exact from the segments when present, otherwise by linear
    /// interpolation of the samples (clamped to the grid).
    pub fn eval(&self, s: f64) -> f64 {
        if let Some(seg) = &self.segments {
            return eval_segments(seg, s);
        }
        let x = (s / self.ds()).clamp(0.0, self.n() as f64);
        let i = (x.floor() as usize).min(self.n() - 1);
        let w = x - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }

    /// Largest sample.
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest decrease between consecutive samples (0 for a monotone profile).
    pub fn max_decrease(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }

    /// Sup-norm distance to a function on the grid points with `s <= s_hi`.
    pub fn sup_distance_to(&self, s_hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        (0..=self.n())
            .map(|i| self.s(i))
            .take_while(|s| *s <= s_hi)
            .map(|s| (self.eval(s) - f(s)).abs())
            .fold(0.0, f64::max)
    }
}

fn eval_segments(segments: &[Segment], s: f64) -> f64 {
    let seg = segments
        .iter()
        .find(|seg| s <= seg.hi)
        .unwrap_or_else(|| segments.last().expect("non-empty"));
    seg.piece.eval(s)
}

/// Solution of the single-rate problem on `[c_g, infinity)` starting at
/// `from`: the parabola `s^2/(4d) - r_hat` up to `2 d lambda` and the
/// tangent line of slope `lambda` beyond.
pub fn single_rate_tail(d: f64, r_hat: f64, lambda: DecayRate, from: f64) -> Vec<Segment> {
    let parabola = Piece::Parabola { d, r: r_hat };
    match lambda {
        DecayRate::Infinite => vec![Segment {
            lo: from,
            hi: f64::INFINITY,
            piece: parabola,
        }],
        DecayRate::Finite(l) => {
            let line = Piece::tangent(l, d, r_hat);
            let switch = 2.0 * d * l;
            if switch <= from {
                vec![Segment {
                    lo: from,
                    hi: f64::INFINITY,
                    piece: line,
                }]
            } else {
                vec![
                    Segment {
                        lo: from,
                        hi: switch,
                        piece: parabola,
                    },
                    Segment {
                        lo: switch,
                        hi: f64::INFINITY,
                        piece: line,
                    },
                ]
            }
        }
    }
}

/// Value of the single-rate profile at a speed where it is positive.
pub fn single_rate_value(d: f64, r_hat: f64, lambda: DecayRate, s: f64) -> f64 {
    match lambda {
        DecayRate::Finite(l) if l <= s / (2.0 * d) => l * s - (d * l * l + r_hat),
        _ => s * s / (4.0 * d) - r_hat,
    }
}

/// Full single-rate solution `max{., 0}` on `[0, infinity)`.
pub fn single_rate_segments(d: f64, r_hat: f64, lambda: DecayRate) -> Vec<Segment> {
    let critical = (r_hat / d).sqrt();
    match lambda {
        DecayRate::Finite(l) if l <= critical => {
            let root = d * l + r_hat / l;
            vec![
                Segment {
                    lo: 0.0,
                    hi: root,
                    piece: Piece::Zero,
                },
                Segment {
                    lo: root,
                    hi: f64::INFINITY,
                    piece: Piece::tangent(l, d, r_hat),
                },
            ]
        }
        _ => {
            let root = 2.0 * (d * r_hat).sqrt();
            let mut segs = vec![Segment {
                lo: 0.0,
                hi: root,
                piece: Piece::Zero,
            }];
            segs.extend(single_rate_tail(d, r_hat, lambda, root));
            segs
        }
    }
}

/// Default right end of the speed grid:
/// `max(2 c_g, 4 d min(lambda, sqrt(r_hat/d)), 4 sqrt(d r_hat))`.
pub fn default_s_max(rate: &RateProfile, d: f64, lambda: DecayRate) -> f64 {
    let r = rate.base_rate();
    let c_g = rate.effective_support(d, lambda);
    let m = lambda.min_with((r / d).sqrt());
    (2.0 * c_g).max(4.0 * d * m).max(4.0 * (d * r).sqrt())
}

/// Default number of grid intervals.
pub const DEFAULT_GRID_N: usize = 4096;

/// Sup-norm change per doubling of time below which marching stops.
pub const GRID_TOLERANCE: f64 = 1e-4;

const MAX_DOUBLINGS: usize = 60;

/// Solves the variational inequality on `[0, s_max]` with `n` intervals by
/// the monotone grid scheme. The right boundary value is the single-rate
/// solution, exact beyond the support of `g`.
pub fn solve_rho_grid(
    rate: &RateProfile,
    d: f64,
    lambda: DecayRate,
    s_max: f64,
    n: usize,
) -> Result<SpeedFunction> {
    let c_g = rate.effective_support(d, lambda);
    if s_max.is_nan() || s_max <= c_g {
        return Err(Error::Domain {
            formula: "grid solver",
            reason: format!("s_max = {s_max} must exceed the support bound {c_g}"),
        });
    }
    check_grid_size(n)?;
    let r_hat = rate.base_rate();
    let reference = single_rate_segments(d, r_hat, lambda);
    let ds = s_max / n as f64;
    let init: Vec<f64> = (0..=n)
        .map(|i| eval_segments(&reference, i as f64 * ds))
        .collect();
    let right = single_rate_value(d, r_hat, lambda, s_max);
    let values = march(rate, d, s_max, right, init)?;
    Ok(SpeedFunction::from_samples(s_max, values))
}

/// Solves the variational inequality on `[0, s_right]` with `n` intervals
/// and the Dirichlet datum `rho(s_right) = rho_right`.
pub fn solve_rho_grid_dirichlet(
    rate: &RateProfile,
    d: f64,
    s_right: f64,
    rho_right: f64,
    n: usize,
) -> Result<SpeedFunction> {
    check_grid_size(n)?;
    if !(s_right > 0.0 && rho_right >= 0.0) {
        return Err(Error::Domain {
            formula: "grid solver",
            reason: format!("need s_right > 0 and rho_right >= 0, got {s_right}, {rho_right}"),
        });
    }
    let init = (0..=n)
        .map(|i| rho_right * i as f64 / n as f64)
        .collect();
    let values = march(rate, d, s_right, rho_right, init)?;
    Ok(SpeedFunction::from_samples(s_right, values))
}

fn check_grid_size(n: usize) -> Result<()> {
    if n < 512 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            reason: "grid needs at least 512 intervals",
        });
    }
    Ok(())
}

/// Marches `v_tau + v - s v_s + d v_s^2 + R(s) = 0`, `v >= 0`, in the
/// logarithmic time `tau = ln t` of the lift `w(t, x) = t v(ln t, x/t)`.
/// Each `ln 2` of `tau` is one doubling of `t`; marching stops once the
/// sup-norm change over a doubling drops below [`GRID_TOLERANCE`].
fn march(rate: &RateProfile, d: f64, s_max: f64, right: f64, init: Vec<f64>) -> Result<Vec<f64>> {
    let n = init.len() - 1;
    let ds = s_max / n as f64;
    let s: Vec<f64> = (0..=n).map(|i| i as f64 * ds).collect();
    let r: Vec<f64> = s.iter().map(|&x| rate.rate_at(x)).collect();
    let p_star: Vec<f64> = s.iter().map(|&x| x / (2.0 * d)).collect();

    let mut v = init;
    v[0] = 0.0;
    v[n] = right;
    let max_slope = v
        .windows(2)
        .map(|w| ((w[1] - w[0]) / ds).abs())
        .fold(0.0, f64::max);
    // |H_p| = |2 d p - s| is bounded by this along monotone profiles.
    let h_bound = s_max.max(2.0 * d * max_slope);
    let steps_per_doubling = (std::f64::consts::LN_2 * (ds + h_bound) / (0.9 * ds)).ceil();
    let dtau = std::f64::consts::LN_2 / steps_per_doubling;
    let steps = steps_per_doubling as usize;

    let mut next = v.clone();
    let mut previous = v.clone();
    let mut residual = f64::INFINITY;
    let inv_ds = 1.0 / ds;
    for _ in 0..MAX_DOUBLINGS {
        for _ in 0..steps {
            for i in 1..n {
                let back = (v[i] - v[i - 1]) * inv_ds;
                let fwd = (v[i + 1] - v[i]) * inv_ds;
                let ps = p_star[i];
                let a = back.max(ps);
                let b = fwd.min(ps);
                let ha = d * a * a - s[i] * a;
                let hb = d * b * b - s[i] * b;
                let h = ha.max(hb);
                next[i] = (v[i] - dtau * (v[i] + h + r[i])).max(0.0);
            }
            next[0] = 0.0;
            next[n] = right;
            std::mem::swap(&mut v, &mut next);
        }
        residual = v
            .iter()
            .zip(&previous)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if !residual.is_finite() {
            break;
        }
        if residual < GRID_TOLERANCE {
            return Ok(v);
        }
        previous.copy_from_slice(&v);
    }
    Err(Error::NonConvergence {
        solver: "grid variational-inequality solver",
        iterations: MAX_DOUBLINGS,
        residual,
    })
}

/// Dynamic-programming oracle: `rho(s)` at each sample speed.
///
/// The value is the infimum of the action
/// `int_0^1 |gamma'|^2/(4d) - R(gamma/tau) dtau + h(gamma(0))` over paths
/// ending at `s` at time 1, kept non-negative by the obstacle. Inside each
/// cone between consecutive breakpoint rays the rate is constant, so optimal
/// paths are polylines with vertices on the rays; by self-similarity the
/// value on ray `b_i` at time `tau` is `tau rho(b_i)`. The ray values solve a
/// finite Bellman system, iterated to a fixed point, and each edge
/// minimization over the vertex time is done in closed form.
pub fn solve_rho_oracle(rate: &RateProfile, d: f64, lambda: DecayRate, samples: &[f64]) -> Vec<f64> {
    let oracle = RayOracle::new(rate, d, lambda);
    samples.iter().map(|&s| oracle.value(s)).collect()
}

struct RayOracle<'a> {
    rate: &'a RateProfile,
    d: f64,
    lambda: DecayRate,
    ray_values: Vec<f64>,
}

impl<'a> RayOracle<'a> {
    fn new(rate: &'a RateProfile, d: f64, lambda: DecayRate) -> Self {
        let mut oracle = Self {
            rate,
            d,
            lambda,
            ray_values: Vec::new(),
        };
        let b = &rate.breakpoints;
        let m = b.len();
        oracle.ray_values = (0..m).map(|i| oracle.ray_start_cost(i).max(0.0)).collect();
        for _ in 0..10_000 {
            let mut change = 0.0f64;
            for (i, &bi) in b.iter().enumerate() {
                let mut best = oracle.ray_start_cost(i);
                if i > 0 {
                    best = best.min(oracle.edge(i - 1, bi, rate.values[i]));
                }
                if i + 1 < m {
                    best = best.min(oracle.edge(i + 1, bi, rate.values[i + 1]));
                }
                let new = best.max(0.0);
                change = change.max((new - oracle.ray_values[i]).abs());
                oracle.ray_values[i] = new;
            }
            if change <= 1e-15 {
                break;
            }
        }
        oracle
    }

    /// Cost of reaching ray `i` at time 1 without an earlier vertex: along the
    /// ray from the origin (taking the better of the two adjacent rates), or,
    /// for the top ray with finite decay, from the initial datum.
    fn ray_start_cost(&self, i: usize) -> f64 {
        let b = self.rate.breakpoints[i];
        let r = self.rate.values[i].max(self.rate.values[i + 1]);
        let mut cost = b * b / (4.0 * self.d) - r;
        if i + 1 == self.rate.breakpoints.len() {
            cost = cost.min(self.initial_datum_cost(b));
        }
        cost
    }

    /// Cost of reaching `x` in the top cone by a straight path from
    /// `(0, x0)`, optimized over `x0 >= 0` against `h(x0) = lambda x0`.
    fn initial_datum_cost(&self, x: f64) -> f64 {
        single_rate_value(self.d, self.rate.base_rate(), self.lambda, x)
    }

    /// Least cost of reaching `(1, x)` from a vertex on ray `j` through a
    /// cone with rate `r`, with the vertex time chosen optimally in `[0, 1)`.
    fn edge(&self, j: usize, x: f64, r: f64) -> f64 {
        edge_cost(self.rate.breakpoints[j], self.ray_values[j], x, r, self.d)
    }

    fn value(&self, s: f64) -> f64 {
        let b = &self.rate.breakpoints;
        if let Some(i) = b.iter().position(|&bi| bi == s) {
            return self.ray_values[i];
        }
        let k = self.rate.interval_of(s);
        let r = self.rate.values[k];
        let mut best = s * s / (4.0 * self.d) - r;
        if k == b.len() {
            best = best.min(self.initial_datum_cost(s));
        }
        if k > 0 {
            best = best.min(self.edge(k - 1, s, r));
        }
        if k < b.len() {
            best = best.min(self.edge(k, s, r));
        }
        best.max(0.0)
    }
}

/// Minimum over `tau in [0, 1)` of
/// `tau rho_b + (x - b tau)^2 / (4 d (1 - tau)) - r (1 - tau)`.
///
/// With `u = 1 - tau` the function is `(x-b)^2/(4du) + K u + const`, with
/// `K = b^2/(4d) - r - rho_b`, minimized at `u = |x-b| / (2 sqrt(d K))` clipped
/// to `(0, 1]`.
pub fn edge_cost(b: f64, rho_b: f64, x: f64, r: f64, d: f64) -> f64 {
    let k = b * b / (4.0 * d) - r - rho_b;
    let gap = (x - b).abs();
    let f = |u: f64| {
        (1.0 - u) * rho_b + (x - b * (1.0 - u)).powi(2) / (4.0 * d * u) - r * u
    };
    if gap == 0.0 {
        // Staying on the ray: the minimum is at one end of [0, 1].
        return rho_b.min(f(1.0));
    }
    if k <= 0.0 {
        return f(1.0);
    }
    let u = gap / (2.0 * (d * k).sqrt());
    if u >= 1.0 {
        f(1.0)
    } else {
        f(u)
    }
}

/// Free boundary of a profile: the edge of its zero set.
///
/// With analytic segments this is the left end of the first non-zero piece.
/// Otherwise it is the largest grid speed with `rho <= eps`, refined by
/// linear interpolation of the level `eps` against the next sample.
pub fn free_boundary(rho: &SpeedFunction, eps: Option<f64>) -> Result<f64> {
    if let Some(segments) = rho.segments() {
        return segments
            .iter()
            .find(|seg| seg.piece != Piece::Zero)
            .map(|seg| seg.lo)
            .ok_or(Error::FreeBoundaryBeyondGrid { s_max: rho.s_max() });
    }
    let max = rho.max_value();
    let eps = eps.unwrap_or(1e-6 * max);
    let values = rho.values();
    let last = values
        .iter()
        .rposition(|&v| v <= eps)
        .unwrap_or(0);
    if max <= eps || last == rho.n() {
        return Err(Error::FreeBoundaryBeyondGrid { s_max: rho.s_max() });
    }
    let (lo, hi) = (values[last], values[last + 1]);
    let w = ((eps - lo) / (hi - lo)).clamp(0.0, 1.0);
    Ok(rho.s(last) + w * rho.ds())
}

/// Free boundary of the grid solution for a rate, with default grid extent.
pub fn grid_free_boundary(rate: &RateProfile, d: f64, lambda: DecayRate, n: usize) -> Result<(f64, SpeedFunction)> {
    let s_max = default_s_max(rate, d, lambda);
    let rho = solve_rho_grid(rate, d, lambda, s_max, n)?;
    Ok((free_boundary(&rho, None)?, rho))
}

/// `max{s_nlp, c_LLW}`, or both endpoints when the minimal speed is only
/// bracketed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Beta3 {
    Determinate(f64),
    Indeterminate { lower: f64, upper: f64 },
}

impl Beta3 {
    /// The value, or the lower endpoint when indeterminate.
    pub fn lower(&self) -> f64 {
        match *self {
            Self::Determinate(v) => v,
            Self::Indeterminate { lower, .. } => lower,
        }
    }

    /// The value, or the upper endpoint when indeterminate.
    pub fn upper(&self) -> f64 {
        match *self {
            Self::Determinate(v) => v,
            Self::Indeterminate { upper, .. } => upper,
        }
    }

    /// Every candidate value.
    pub fn candidates(&self) -> Vec<f64> {
        match *self {
            Self::Determinate(v) => vec![v],
            Self::Indeterminate { lower, upper } => vec![lower, upper],
        }
    }
}

/// Slack allowed when checking `beta3 <= sigma3(lambda)` against a numerical
/// free boundary.
pub const BETA3_SLACK: f64 = 2e-2;

/// `beta3 = max{s_nlp, c_LLW}`; verifies `beta3 <= sigma3(lambda) < c2`.
pub fn beta3(p: &ModelParams, ctx: &HypothesisContext, s_nlp: f64) -> Result<Beta3> {
    let bracket = c_llw(p)?;
    let beta = match bracket.linear {
        Some(c) => Beta3::Determinate(s_nlp.max(c)),
        None => Beta3::Indeterminate {
            lower: s_nlp.max(bracket.lower),
            upper: s_nlp.max(bracket.upper),
        },
    };
    let s3 = sigma3(p, ctx.lambda);
    for value in beta.candidates() {
        if value > s3 + BETA3_SLACK || value >= ctx.c2 {
            return Err(Error::Domain {
                formula: "beta3",
                reason: format!(
                    "beta3 = {value} violates beta3 <= sigma3 = {s3} < c2 = {}",
                    ctx.c2
                ),
            });
        }
    }
    Ok(beta)
}

/// Free boundary of the variational inequality with the underline rate.
pub fn underline_beta3(
    p: &ModelParams,
    ctx: &HypothesisContext,
    beta3: f64,
    n: usize,
) -> Result<f64> {
    let rate = build_underline_rate(p, ctx, beta3)?;
    grid_free_boundary(&rate, p.d3, ctx.lambda, n).map(|(fb, _)| fb)
}

/// Explicit sub- and super-solutions bracketing the solution.
#[derive(Debug, Clone, PartialEq)]
pub struct References {
    pub sub: SpeedFunction,
    pub sup: SpeedFunction,
    /// Support bound `c_g` beyond which both coincide with the solution.
    pub c_g: f64,
}

/// Sub-solution (the single-rate solution with `r_hat`) and super-solution
/// (the single-rate tail on `[c_g, infinity)` continued below `c_g` by a
/// tangent line shifted up by `g_max = max{sup g, c_g^2/(4d)}`), sampled on
/// `n + 1` points of `[0, s_max]`.
pub fn reference_solutions(
    rate: &RateProfile,
    d: f64,
    lambda: DecayRate,
    s_max: f64,
    n: usize,
) -> References {
    let r_hat = rate.base_rate();
    let c_g = rate.effective_support(d, lambda);
    let sub = SpeedFunction::from_segments(single_rate_segments(d, r_hat, lambda), s_max, n);

    let g_max = rate.g_max().max(c_g * c_g / (4.0 * d));
    let slope = match lambda {
        DecayRate::Finite(l) if l <= c_g / (2.0 * d) => {
            let disc = (c_g - 2.0 * d * l).powi(2) + 4.0 * d * g_max;
            (c_g - disc.sqrt()) / (2.0 * d)
        }
        _ => c_g / (2.0 * d) - (g_max / d).sqrt(),
    };
    let mut segments = vec![Segment {
        lo: 0.0,
        hi: c_g,
        piece: Piece::tangent(slope, d, r_hat - g_max),
    }];
    segments.extend(single_rate_tail(d, r_hat, lambda, c_g));
    let sup = SpeedFunction::from_segments(segments, s_max, n);
    References { sub, sup, c_g }
}
