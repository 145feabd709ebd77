//! CSV and JSON artifacts. Every CSV starts with a `#` comment line carrying
//! the tool version and the resolved parameters, followed by a header row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nlpspeed::front_metrics::FrontTrajectory;
use nlpspeed::hj_speed::{RateProfile, SpeedFunction};
use nlpspeed::pde_sim::SimulationResult;
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};

/// Formats a number with 12 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.11e}")
}

/// Formats an optional number; absent values are empty fields.
pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Creates the output directory if needed and returns the path of `file`.
pub fn artifact_path(cfg: &ScenarioConfig, file: &str) -> Result<PathBuf> {
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Ok(dir.join(file))
}

/// CSV writer positioned after the comment line.
pub struct CsvFile {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvFile {
    /// Creates `path`, writes the comment line and the header row.
    pub fn create(path: &Path, comment: &str, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut buf = BufWriter::new(file);
        writeln!(buf, "# nlpspeed {} {comment}", env!("CARGO_PKG_VERSION")).map_err(|e| CliError::io(path, e))?;
        let mut csv = Self {
            path: path.to_path_buf(),
            writer: csv::Writer::from_writer(buf),
        };
        csv.row(header)?;
        Ok(csv)
    }

    /// Writes one record.
    pub fn row<I, T>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| self.csv_error(e))
    }

    /// Flushes the file.
    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))
    }

    fn csv_error(&self, e: csv::Error) -> CliError {
        CliError::io(&self.path, std::io::Error::other(e))
    }
}

/// `rho.csv`: `s, rho, rate` per grid point.
pub fn write_rho_csv(path: &Path, cfg: &ScenarioConfig, rho: &SpeedFunction, rate: &RateProfile) -> Result<()> {
    let mut out = CsvFile::create(path, &cfg.summary(), &["s", "rho", "rate"])?;
    for (i, v) in rho.values().iter().enumerate() {
        let s = rho.s(i);
        out.row([num(s), num(*v), num(rate.rate_at(s))])?;
    }
    out.finish()
}

/// `snapshots.csv`: `t, x, u1, u2, u3`, thinned by the output strides.
pub fn write_snapshots_csv(path: &Path, cfg: &ScenarioConfig, result: &SimulationResult) -> Result<()> {
    let comment = format!(
        "{} x_stride={} t_stride={}",
        cfg.summary(),
        cfg.output.x_stride,
        cfg.output.t_stride
    );
    let mut out = CsvFile::create(path, &comment, &["t", "x", "u1", "u2", "u3"])?;
    let xs = result.xs();
    let last = result.times.len().saturating_sub(1);
    for (k, (t, snap)) in result.times.iter().zip(&result.snapshots).enumerate() {
        if k % cfg.output.t_stride != 0 && k != last {
            continue;
        }
        for i in (0..xs.len()).step_by(cfg.output.x_stride) {
            out.row([num(*t), num(xs[i]), num(snap[0][i]), num(snap[1][i]), num(snap[2][i])])?;
        }
    }
    out.finish()
}

/// `fronts.csv`: `t, species, theta, x_front` (empty where absent).
pub fn write_fronts_csv(path: &Path, cfg: &ScenarioConfig, fronts: &[FrontTrajectory]) -> Result<()> {
    let mut out = CsvFile::create(path, &cfg.summary(), &["t", "species", "theta", "x_front"])?;
    for traj in fronts {
        for (t, x) in traj.times.iter().zip(&traj.positions) {
            out.row([num(*t), traj.species.to_string(), num(traj.theta), opt_num(*x)])?;
        }
    }
    out.finish()
}

/// Pretty-printed JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}
