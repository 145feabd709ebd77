//! Pipeline stages: explicit formulas, speed-space solvers, simulation with
//! front tracking, and the comparison of predicted and measured speeds.

use std::fmt;

use nlpspeed::closed_form::{rho_nlp_segments, thm_c_intermediates, ProfileCase, ThmCIntermediates};
use nlpspeed::front_metrics::{
    final_zone_classify, final_zone_predict, measure_speed_pair, track_front, FrontTrajectory,
    Regime, SpeedPair, ZoneObservation, LEADING_LEVEL,
};
use nlpspeed::hj_speed::{
    beta3, build_rate, default_s_max, free_boundary, grid_free_boundary, solve_rho_grid,
    single_rate_segments, solve_rho_oracle, underline_beta3, Beta3, RateProfile, SpeedFunction,
};
use nlpspeed::model::{
    c_llw, check_corollary_113, check_theorem12, lambda_llw, sigma3, CllwBracket, DecayRate,
    HypothesisContext, ModelParams, Verdict,
};
use nlpspeed::pde_sim::{no_gap_diagnostic, simulate, Grid1D, SimulationResult};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};

/// Relative tolerance of the speed comparisons.
pub const SPEED_REL_TOL: f64 = 0.05;

/// Tolerance of the final-zone composition checks.
pub const ZONE_TOL: f64 = 0.05;

/// Fronts must stay this many grid spacings away from the right boundary.
pub const BOUNDARY_MARGIN_CELLS: f64 = 50.0;

/// Maximum number of domain doublings when a front reaches the boundary.
pub const MAX_ENLARGEMENTS: usize = 3;

/// Margin `eta` of the no-gap window `[(c2 - eta) t, (c2 + eta) t]`.
pub const NO_GAP_ETA: f64 = 0.05;

/// Hypothesis context of a configuration, or a configuration error listing
/// the failed conditions.
pub fn hypothesis_context(cfg: &ScenarioConfig) -> Result<(HypothesisContext, Verdict)> {
    let check = check_theorem12(&cfg.params, cfg.lambda);
    match check.context {
        Some(ctx) => Ok((ctx, check.verdict)),
        None => {
            let failed: Vec<String> = check
                .verdict
                .failures()
                .map(|c| format!("{} ({})", c.label, c.detail))
                .collect();
            Err(CliError::Config(format!(
                "hypotheses on the two faster species fail: {}",
                failed.join("; ")
            )))
        }
    }
}

/// Every predicted speed of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedReport {
    pub c1: f64,
    /// `c2 = hat_s_nlp(c1)`.
    pub hat_s_nlp: f64,
    pub lambda: DecayRate,
    pub sigma3: f64,
    pub c_llw: CllwBracket,
    /// Decay rate of the minimal traveling wave when it is linearly determined.
    pub lambda_llw: Option<f64>,
    /// Explicit `s_nlp`.
    pub s_nlp: f64,
    pub closed_form: ThmCIntermediates,
    pub profile: Option<ProfileCase>,
    /// Free boundary of the grid solution (when the grid solver ran).
    pub s_nlp_grid: Option<f64>,
    /// `max{s_nlp, c_LLW}`.
    pub beta3: Option<Beta3>,
    /// Free boundary with the underline rate, one value per `beta3` candidate.
    pub underline_beta3: Option<Beta3>,
    pub hypotheses: Verdict,
    pub corollary: Verdict,
    pub notes: Vec<String>,
}

/// Evaluates the formulas and, when `with_grid`, the grid solver and the
/// underline free boundary.
pub fn speed_report(cfg: &ScenarioConfig, with_grid: bool) -> Result<SpeedReport> {
    let p = &cfg.params;
    let (ctx, hypotheses) = hypothesis_context(cfg)?;
    let closed = thm_c_intermediates(p, ctx.c1, ctx.c2, ctx.lambda)?;
    let profile = rho_nlp_segments(p, ctx.c1, ctx.c2, ctx.lambda)?
        .map(|(case, _)| case);
    let bracket = c_llw(p)?;
    let mut notes = Vec::new();

    let s_nlp_grid = if with_grid {
        let rate = build_rate(p, &ctx, 1.0)?;
        Some(grid_free_boundary(&rate, p.d3, ctx.lambda, cfg.hj.n)?.0)
    } else {
        None
    };
    let beta = match beta3(p, &ctx, closed.s_nlp) {
        Ok(b) => Some(b),
        Err(e) => {
            notes.push(e.to_string());
            None
        }
    };
    let underline = match (with_grid, beta) {
        (true, Some(b)) => Some(match b {
            Beta3::Determinate(v) => Beta3::Determinate(underline_beta3(p, &ctx, v, cfg.hj.n)?),
            Beta3::Indeterminate { lower, upper } => Beta3::Indeterminate {
                lower: underline_beta3(p, &ctx, lower, cfg.hj.n)?,
                upper: underline_beta3(p, &ctx, upper, cfg.hj.n)?,
            },
        }),
        _ => None,
    };
    Ok(SpeedReport {
        c1: ctx.c1,
        hat_s_nlp: ctx.c2,
        lambda: ctx.lambda,
        sigma3: sigma3(p, ctx.lambda),
        c_llw: bracket,
        lambda_llw: bracket.linear.map(|_| lambda_llw(p)).transpose()?,
        s_nlp: closed.s_nlp,
        closed_form: closed,
        profile,
        s_nlp_grid,
        beta3: beta,
        underline_beta3: underline,
        hypotheses,
        corollary: check_corollary_113(p),
        notes,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"))
}

fn fmt_beta(b: Option<Beta3>) -> String {
    match b {
        None => "-".to_string(),
        Some(Beta3::Determinate(v)) => format!("{v:.6}"),
        Some(Beta3::Indeterminate { lower, upper }) => format!("[{lower:.6}, {upper:.6}]"),
    }
}

impl fmt::Display for SpeedReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c_llw = match self.c_llw.linear {
            Some(c) => format!("{c:.6} (linearly determined)"),
            None => format!("[{:.6}, {:.6}]", self.c_llw.lower, self.c_llw.upper),
        };
        let profile = match self.profile {
            Some(case) => format!("{case:?}"),
            None => "none".to_string(),
        };
        writeln!(f, "{:<22}{:.6}", "c1", self.c1)?;
        writeln!(f, "{:<22}{:.6}", "c2 = hat_s_nlp(c1)", self.hat_s_nlp)?;
        writeln!(f, "{:<22}{}", "lambda", self.lambda)?;
        writeln!(f, "{:<22}{:.6}", "sigma3(lambda)", self.sigma3)?;
        writeln!(f, "{:<22}{c_llw}", "c_LLW")?;
        writeln!(f, "{:<22}{}", "lambda_LLW", fmt_opt(self.lambda_llw))?;
        writeln!(f, "{:<22}{:.6} ({:?} branch)", "s_nlp (closed form)", self.s_nlp, self.closed_form.branch)?;
        writeln!(f, "{:<22}{profile}", "closed-form profile")?;
        writeln!(f, "{:<22}{}", "s_nlp (grid)", fmt_opt(self.s_nlp_grid))?;
        writeln!(f, "{:<22}{}", "beta3", fmt_beta(self.beta3))?;
        writeln!(f, "{:<22}{}", "underline beta3", fmt_beta(self.underline_beta3))?;
        writeln!(f, "hypotheses:")?;
        write!(f, "{}", self.hypotheses)?;
        writeln!(f, "small-a21 conditions:")?;
        write!(f, "{}", self.corollary)?;
        for note in &self.notes {
            writeln!(f, "note: {note}")?;
        }
        Ok(())
    }
}

/// Free boundaries from the grid solver, the dynamic-programming oracle and
/// the closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HjReport {
    pub s_nlp_grid: f64,
    pub s_nlp_oracle: f64,
    pub s_nlp_closed: f64,
    /// `|s_nlp_grid - s_nlp_oracle|`.
    pub discrepancy: f64,
    /// Sup-norm distance between grid and oracle profiles on `[0, c1]`.
    pub sup_grid_oracle: f64,
    /// Sup-norm distance between grid and closed-form profiles on `[0, c1]`
    /// (absent when no explicit profile applies).
    pub sup_grid_closed: Option<f64>,
    pub profile: Option<ProfileCase>,
    pub s_max: f64,
    pub n: usize,
}

/// Speed-space solution with its rate and the comparison report.
#[derive(Debug, Clone, PartialEq)]
pub struct HjRun {
    pub rate: RateProfile,
    pub rho: SpeedFunction,
    pub report: HjReport,
}

/// Solves the variational inequality on the grid and with the oracle.
///
/// Without coupling (`a31 = a32 = 0`) the rate is the constant `r3`
/// whatever the faster fronts do, so the hypotheses on them are not
/// required and the closed form is the single-rate solution.
pub fn run_hj(cfg: &ScenarioConfig) -> Result<HjRun> {
    let p = &cfg.params;
    let lambda = cfg.lambda;
    let uncoupled = p.a31 == 0.0 && p.a32 == 0.0;
    let (rate, c_hi, s_nlp_closed, closed_segments) = if uncoupled {
        let segments = single_rate_segments(p.d3, p.r3, lambda);
        (RateProfile::constant(p.r3), p.c1(), sigma3(p, lambda), Some((None, segments)))
    } else {
        let (ctx, _) = hypothesis_context(cfg)?;
        let s = thm_c_intermediates(p, ctx.c1, ctx.c2, ctx.lambda)?.s_nlp;
        let closed = rho_nlp_segments(p, ctx.c1, ctx.c2, ctx.lambda)?
            .map(|(case, segments)| (Some(case), segments));
        (build_rate(p, &ctx, 1.0)?, ctx.c1, s, closed)
    };
    let n = cfg.hj.n;
    let s_max = default_s_max(&rate, p.d3, lambda);
    let rho = solve_rho_grid(&rate, p.d3, lambda, s_max, n)?;
    let s_nlp_grid = free_boundary(&rho, None)?;

    let samples: Vec<f64> = (0..=n).map(|i| rho.s(i)).collect();
    let oracle = SpeedFunction::from_samples(s_max, solve_rho_oracle(&rate, p.d3, lambda, &samples));
    let s_nlp_oracle = free_boundary(&oracle, None)?;
    let sup_grid_oracle = rho.sup_distance_to(c_hi, |s| oracle.eval(s));

    let (profile, sup_grid_closed) = match closed_segments {
        Some((case, segments)) => {
            let f = SpeedFunction::from_segments(segments, s_max, n);
            (case, Some(rho.sup_distance_to(c_hi, |s| f.eval(s))))
        }
        None => (None, None),
    };
    let report = HjReport {
        s_nlp_grid,
        s_nlp_oracle,
        s_nlp_closed,
        discrepancy: (s_nlp_grid - s_nlp_oracle).abs(),
        sup_grid_oracle,
        sup_grid_closed,
        profile,
        s_max,
        n,
    };
    Ok(HjRun { rate, rho, report })
}

/// Simulation with its fronts and speed estimates.
#[derive(Debug, Clone)]
pub struct PdeRun {
    pub result: SimulationResult,
    /// Leading-edge and half-plateau fronts of every measured species.
    pub fronts: Vec<FrontTrajectory>,
    /// Speed estimates per species (`None` if inactive or not measurable).
    pub pairs: [Option<SpeedPair>; 3],
    pub zone: Option<ZoneObservation>,
    /// Minimum of `a31 u1 + a32 u2` around `x = c2 t` at late times.
    pub no_gap: Option<f64>,
    /// Number of domain doublings needed to keep fronts off the boundary.
    pub enlargements: usize,
    pub notes: Vec<String>,
}

fn snapshot_times(t_final: f64, interval: f64) -> Vec<f64> {
    let count = (t_final / interval).floor() as usize;
    let mut times: Vec<f64> = (0..=count).map(|k| k as f64 * interval).collect();
    if times.last().is_some_and(|t| *t < t_final - 1e-9) {
        times.push(t_final);
    }
    times
}

/// Rightmost leading-edge position over active species at the last snapshot.
fn outermost_front(result: &SimulationResult) -> Option<f64> {
    let last = result.snapshots.last()?;
    let xs = result.xs();
    (0..3)
        .filter(|&k| result.active[k])
        .filter_map(|k| nlpspeed::front_metrics::locate_level(&xs, &last[k], LEADING_LEVEL))
        .reduce(f64::max)
}

/// Runs the simulation, doubling the domain (at fixed spacing) while any
/// leading edge ends closer than [`BOUNDARY_MARGIN_CELLS`] cells to the right
/// boundary, then measures fronts and the final zone.
pub fn run_pde(cfg: &ScenarioConfig) -> Result<PdeRun> {
    let p = &cfg.params;
    let times = snapshot_times(cfg.grid.t_final, cfg.grid.snapshot_interval);
    let (mut length, mut n) = (cfg.grid.length, cfg.grid.n);
    let mut enlargements = 0;
    let result = loop {
        let grid = Grid1D::new(p, length, n, cfg.grid.t_final)?;
        let result = simulate(p, &cfg.initial, &grid, &times, cfg.active)?;
        let limit = length - BOUNDARY_MARGIN_CELLS * grid.dx;
        match outermost_front(&result) {
            Some(x) if x > limit => {
                if enlargements == MAX_ENLARGEMENTS {
                    return Err(CliError::Config(format!(
                        "front at x = {x} still within {BOUNDARY_MARGIN_CELLS} cells of L = {length} after {MAX_ENLARGEMENTS} enlargements"
                    )));
                }
                enlargements += 1;
                length *= 2.0;
                n = 2 * n + 1;
            }
            _ => break result,
        }
    };

    let mut notes = Vec::new();
    let mut fronts = Vec::new();
    let mut pairs = [None; 3];
    for species in 1..=3 {
        if !result.active[species - 1] {
            continue;
        }
        match measure_speed_pair(&result, species) {
            Ok(pair) => {
                fronts.push(track_front(&result, species, LEADING_LEVEL)?);
                fronts.push(track_front(&result, species, 0.5 * pair.plateau)?);
                pairs[species - 1] = Some(pair);
            }
            Err(e) => notes.push(format!("u{species}: {e}")),
        }
    }

    let all_active = result.active.iter().all(|a| *a);
    let zone = match pairs[2] {
        Some(pair) if all_active => match final_zone_classify(&result, pair.c_under.speed) {
            Ok(z) => Some(z),
            Err(e) => {
                notes.push(format!("final zone: {e}"));
                None
            }
        },
        _ => None,
    };
    let no_gap = match check_theorem12(p, cfg.lambda).context {
        Some(ctx) if all_active => match no_gap_diagnostic(&result, &ctx, NO_GAP_ETA) {
            Ok(v) => Some(v),
            Err(e) => {
                notes.push(format!("no-gap diagnostic: {e}"));
                None
            }
        },
        _ => None,
    };
    Ok(PdeRun {
        result,
        fronts,
        pairs,
        zone,
        no_gap,
        enlargements,
        notes,
    })
}

/// One pass/fail comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Predicted quantities of the comparison report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Predicted {
    pub sigma3: f64,
    pub hat_s_nlp: f64,
    pub c_llw: CllwBracket,
    pub s_nlp: f64,
    pub s_nlp_grid: Option<f64>,
    pub beta3: Option<Beta3>,
    pub underline_beta3: Option<Beta3>,
}

/// Values for the outer (`c3_bar`) and inner (`c3_under`) fronts of `u3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontPair {
    pub c3_bar: f64,
    pub c3_under: f64,
}

/// Measured quantities of the comparison report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measured {
    /// Half-plateau front speeds of `u1` and `u2`.
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3_bar: Option<f64>,
    pub c3_under: Option<f64>,
    pub stderr: Option<FrontPair>,
    pub r2: Option<FrontPair>,
    pub no_gap: Option<f64>,
    pub zone_means: Option<[f64; 3]>,
    pub domain_length: f64,
    pub enlargements: usize,
    /// Levels of the two fronts: the leading edge and half the plateau.
    pub leading_level: f64,
    pub inner_level: &'static str,
}

/// Predicted and observed final-zone regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeReport {
    pub predicted: Option<Regime>,
    pub observed: Option<Regime>,
}

/// Full comparison of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub version: &'static str,
    pub config: ScenarioConfig,
    pub predicted: Predicted,
    pub measured: Measured,
    pub regime: RegimeReport,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl CompareReport {
    /// Whether every check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs formulas, grid solver and simulation and checks the measured speeds
/// of `u3` against the predicted bracket
/// `2 sqrt(d3 r3 (1 - a31 - a32)) <= c3 <= max{s_nlp, c_LLW} < c2`, the
/// equality `c3 = s_nlp` when `s_nlp >= c_LLW`, the final-zone regime and,
/// when `a13, a23 > 1`, extinction of `u1`, `u2` behind the front of `u3`.
pub fn compare(cfg: &ScenarioConfig) -> Result<CompareReport> {
    let speeds = speed_report(cfg, cfg.pipeline.hj)?;
    let run = run_pde(cfg)?;
    Ok(assemble_comparison(cfg, &speeds, &run))
}

/// Builds the comparison report from a speed report and a simulation.
pub fn assemble_comparison(cfg: &ScenarioConfig, speeds: &SpeedReport, run: &PdeRun) -> CompareReport {
    let p = &cfg.params;
    let pair3 = run.pairs[2];
    let measured = Measured {
        c1: run.pairs[0].map(|s| s.c_under.speed),
        c2: run.pairs[1].map(|s| s.c_under.speed),
        c3_bar: pair3.map(|s| s.c_bar.speed),
        c3_under: pair3.map(|s| s.c_under.speed),
        stderr: pair3.map(|s| FrontPair {
            c3_bar: s.c_bar.stderr,
            c3_under: s.c_under.stderr,
        }),
        r2: pair3.map(|s| FrontPair {
            c3_bar: s.c_bar.r2,
            c3_under: s.c_under.r2,
        }),
        no_gap: run.no_gap,
        zone_means: run.zone.map(|z| z.means),
        domain_length: run.result.grid.length,
        enlargements: run.enlargements,
        leading_level: LEADING_LEVEL,
        inner_level: "plateau/2",
    };
    let all_active = cfg.active.iter().all(|a| *a);
    let regime = RegimeReport {
        predicted: if all_active { final_zone_predict(p).ok().map(|z| z.regime) } else { None },
        observed: run.zone.map(|z| z.regime),
    };
    let checks = comparison_checks(p, speeds, pair3, &regime, run.zone);
    let mut notes = speeds.notes.clone();
    notes.extend(run.notes.iter().cloned());
    CompareReport {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        predicted: Predicted {
            sigma3: speeds.sigma3,
            hat_s_nlp: speeds.hat_s_nlp,
            c_llw: speeds.c_llw,
            s_nlp: speeds.s_nlp,
            s_nlp_grid: speeds.s_nlp_grid,
            beta3: speeds.beta3,
            underline_beta3: speeds.underline_beta3,
        },
        measured,
        regime,
        checks,
        notes,
    }
}

fn comparison_checks(
    p: &ModelParams,
    speeds: &SpeedReport,
    pair3: Option<SpeedPair>,
    regime: &RegimeReport,
    zone: Option<ZoneObservation>,
) -> Vec<Check> {
    let mut checks = Vec::new();
    let Some(pair) = pair3 else {
        checks.push(Check::new("u3 front measured", false, "u3 has no trackable front".into()));
        return checks;
    };
    let (bar, under) = (pair.c_bar.speed, pair.c_under.speed);
    let tol = SPEED_REL_TOL;

    let lower = p.alpha3() * (1.0 - p.a31 - p.a32).sqrt();
    checks.push(Check::new(
        "lower bracket",
        under >= (1.0 - tol) * lower,
        format!("c3_under = {under:.4} vs 2 sqrt(d3 r3 (1 - a31 - a32)) = {lower:.4} (-{:.0}%)", tol * 100.0),
    ));
    let upper = speeds.s_nlp.max(speeds.c_llw.linear.unwrap_or(speeds.c_llw.upper));
    checks.push(Check::new(
        "upper bracket",
        bar <= (1.0 + tol) * upper,
        format!("c3_bar = {bar:.4} vs max{{s_nlp, c_LLW}} = {upper:.4} (+{:.0}%)", tol * 100.0),
    ));
    checks.push(Check::new(
        "slower than c2",
        bar < speeds.hat_s_nlp,
        format!("c3_bar = {bar:.4} vs c2 = {:.4}", speeds.hat_s_nlp),
    ));
    if let Some(c) = speeds.c_llw.linear {
        let s = speeds.s_nlp;
        if s >= c {
            let worst = (bar - s).abs().max((under - s).abs());
            checks.push(Check::new(
                "pinched at s_nlp",
                worst <= tol * s,
                format!("c3_bar = {bar:.4}, c3_under = {under:.4} vs s_nlp = {s:.4} (max deviation {:.2}%)", 100.0 * worst / s),
            ));
        } else {
            checks.push(Check::new(
                "below c_LLW",
                bar < c && under < c,
                format!("c3_bar = {bar:.4}, c3_under = {under:.4} vs c_LLW = {c:.4} > s_nlp = {s:.4}"),
            ));
        }
    }
    if let (Some(pred), Some(obs)) = (regime.predicted, regime.observed) {
        checks.push(Check::new(
            "final-zone regime",
            pred == obs,
            format!("predicted {pred}, observed {obs}"),
        ));
    }
    if let Some(z) = zone {
        if p.a13 > 1.0 && p.a23 > 1.0 {
            let [m1, m2, m3] = z.means;
            checks.push(Check::new(
                "u3 takes over",
                m1 + m2 <= ZONE_TOL && (m3 - 1.0).abs() <= ZONE_TOL,
                format!("window means u1 + u2 = {:.4}, u3 = {m3:.4}", m1 + m2),
            ));
        }
    }
    checks
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.measured;
        writeln!(f, "scenario {}", self.config.name)?;
        writeln!(f, "{:<22}{:.6}", "predicted s_nlp", self.predicted.s_nlp)?;
        writeln!(f, "{:<22}{}", "predicted c_LLW", match self.predicted.c_llw.linear {
            Some(c) => format!("{c:.6}"),
            None => format!("[{:.6}, {:.6}]", self.predicted.c_llw.lower, self.predicted.c_llw.upper),
        })?;
        writeln!(f, "{:<22}{}", "measured c1", fmt_opt(m.c1))?;
        writeln!(f, "{:<22}{}", "measured c2", fmt_opt(m.c2))?;
        writeln!(f, "{:<22}{}", "measured c3_bar", fmt_opt(m.c3_bar))?;
        writeln!(f, "{:<22}{}", "measured c3_under", fmt_opt(m.c3_under))?;
        if let (Some(pred), Some(obs)) = (self.regime.predicted, self.regime.observed) {
            writeln!(f, "{:<22}predicted {pred}, observed {obs}", "final zone")?;
        }
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "[{mark}] {}: {}", c.name, c.detail)?;
        }
        for note in &self.notes {
            writeln!(f, "note: {note}")?;
        }
        Ok(())
    }
}
