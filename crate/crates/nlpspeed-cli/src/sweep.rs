//! One-parameter sweeps evaluated on a local worker pool.

use std::path::Path;

use nlpspeed::hj_speed::Beta3;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};
use crate::output::{num, opt_num, CsvFile};
use crate::pipeline::{compare, speed_report, CompareReport, SpeedReport};

/// Axis, range and execution settings of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    /// A model coefficient name or `lambda`.
    pub axis: String,
    pub from: f64,
    pub to: f64,
    /// Number of evenly spaced points including both ends.
    pub points: usize,
    /// Also simulate and compare at every point.
    pub with_pde: bool,
    /// Worker threads (0 for the rayon default).
    pub workers: usize,
}

impl SweepSpec {
    /// The swept values; rejects empty or reversed ranges and unknown axes.
    pub fn values(&self, base: &ScenarioConfig) -> Result<Vec<f64>> {
        if self.points == 0 || !(self.from.is_finite() && self.to.is_finite()) || self.from > self.to {
            return Err(CliError::Config(format!(
                "empty sweep range [{}, {}] with {} points",
                self.from, self.to, self.points
            )));
        }
        base.clone().set_axis(&self.axis, self.from)?;
        if self.points == 1 {
            return Ok(vec![self.from]);
        }
        let step = (self.to - self.from) / (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|k| if k + 1 == self.points { self.to } else { self.from + step * k as f64 })
            .collect())
    }
}

/// Outcome at one sweep point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub speeds: std::result::Result<SpeedReport, String>,
    pub compare: Option<std::result::Result<CompareReport, String>>,
}

fn evaluate(base: &ScenarioConfig, spec: &SweepSpec, value: f64) -> SweepRow {
    let mut cfg = base.clone();
    if let Err(e) = cfg.set_axis(&spec.axis, value).and_then(|_| cfg.validate()) {
        return SweepRow {
            value,
            speeds: Err(e.to_string()),
            compare: None,
        };
    }
    let speeds = speed_report(&cfg, cfg.pipeline.hj).map_err(|e| e.to_string());
    let compare = (spec.with_pde && speeds.is_ok()).then(|| compare(&cfg).map_err(|e| e.to_string()));
    SweepRow { value, speeds, compare }
}

/// Evaluates every point of the sweep, in order, on `spec.workers` threads.
pub fn run_sweep(base: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let values = spec.values(base)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| values.par_iter().map(|&v| evaluate(base, spec, v)).collect()))
}

const SWEEP_HEADER: [&str; 17] = [
    "value",
    "c1",
    "c2",
    "sigma3",
    "c_llw_lower",
    "c_llw_upper",
    "c_llw",
    "s_nlp",
    "branch",
    "s_nlp_grid",
    "beta3",
    "underline_beta3",
    "c3_bar",
    "c3_under",
    "regime",
    "checks",
    "error",
];

fn beta_field(b: Option<Beta3>) -> String {
    match b {
        Some(Beta3::Determinate(v)) => num(v),
        Some(Beta3::Indeterminate { lower, upper }) => format!("{}..{}", num(lower), num(upper)),
        None => String::new(),
    }
}

/// `sweep.csv`: one row per point; failing points keep their value and
/// carry the error message.
pub fn write_sweep_csv(path: &Path, base: &ScenarioConfig, spec: &SweepSpec, rows: &[SweepRow]) -> Result<()> {
    let comment = format!("{} axis={} from={} to={} points={}", base.summary(), spec.axis, spec.from, spec.to, spec.points);
    let mut out = CsvFile::create(path, &comment, &SWEEP_HEADER)?;
    for row in rows {
        let mut fields = vec![num(row.value)];
        match &row.speeds {
            Ok(r) => fields.extend([
                num(r.c1),
                num(r.hat_s_nlp),
                num(r.sigma3),
                num(r.c_llw.lower),
                num(r.c_llw.upper),
                opt_num(r.c_llw.linear),
                num(r.s_nlp),
                format!("{:?}", r.closed_form.branch),
                opt_num(r.s_nlp_grid),
                beta_field(r.beta3),
                beta_field(r.underline_beta3),
            ]),
            Err(_) => fields.extend(std::iter::repeat_n(String::new(), 11)),
        }
        let mut error = row.speeds.as_ref().err().cloned().unwrap_or_default();
        match &row.compare {
            Some(Ok(c)) => {
                let failed = c.checks.iter().filter(|k| !k.passed).count();
                fields.extend([
                    opt_num(c.measured.c3_bar),
                    opt_num(c.measured.c3_under),
                    c.regime.observed.map(|r| r.to_string()).unwrap_or_default(),
                    format!("{}/{}", c.checks.len() - failed, c.checks.len()),
                ]);
            }
            Some(Err(e)) => {
                fields.extend(std::iter::repeat_n(String::new(), 4));
                error = e.clone();
            }
            None => fields.extend(std::iter::repeat_n(String::new(), 4)),
        }
        fields.push(error);
        out.row(&fields)?;
    }
    out.finish()
}
