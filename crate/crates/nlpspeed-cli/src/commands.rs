//! The five subcommands: each runs a pipeline stage, prints a summary and
//! writes its artifacts into the configured output directory.

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};
use crate::output::{artifact_path, write_fronts_csv, write_json, write_rho_csv, write_snapshots_csv};
use crate::pipeline::{compare, run_hj, run_pde, speed_report, CompareReport, HjReport, SpeedReport};
use crate::sweep::{run_sweep, write_sweep_csv, SweepSpec};

#[derive(Serialize)]
struct Resolved<'a, T: Serialize> {
    version: &'static str,
    config: &'a ScenarioConfig,
    #[serde(flatten)]
    body: &'a T,
}

fn resolved<'a, T: Serialize>(config: &'a ScenarioConfig, body: &'a T) -> Resolved<'a, T> {
    Resolved {
        version: env!("CARGO_PKG_VERSION"),
        config,
        body,
    }
}

/// Formulas plus grid free boundaries; writes `report.json`.
pub fn cmd_speeds(cfg: &ScenarioConfig) -> Result<SpeedReport> {
    let report = speed_report(cfg, true)?;
    print!("{report}");
    write_json(&artifact_path(cfg, "report.json")?, &resolved(cfg, &report))?;
    Ok(report)
}

/// Speed-space solution; writes `rho.csv` and `hj.json`.
pub fn cmd_hj(cfg: &ScenarioConfig) -> Result<HjReport> {
    let run = run_hj(cfg)?;
    let r = &run.report;
    println!("{:<22}{:.6}", "s_nlp (grid)", r.s_nlp_grid);
    println!("{:<22}{:.6}", "s_nlp (oracle)", r.s_nlp_oracle);
    println!("{:<22}{:.6}", "s_nlp (closed form)", r.s_nlp_closed);
    println!("{:<22}{:.3e}", "grid - oracle", r.discrepancy);
    println!("{:<22}{:.3e}", "sup |grid - oracle|", r.sup_grid_oracle);
    if let Some(v) = r.sup_grid_closed {
        println!("{:<22}{v:.3e}", "sup |grid - closed|");
    }
    write_rho_csv(&artifact_path(cfg, "rho.csv")?, cfg, &run.rho, &run.rate)?;
    write_json(&artifact_path(cfg, "hj.json")?, &resolved(cfg, r))?;
    Ok(run.report)
}

/// Simulation; writes `snapshots.csv` and `fronts.csv`.
pub fn cmd_simulate(cfg: &ScenarioConfig) -> Result<()> {
    let run = run_pde(cfg)?;
    for (k, pair) in run.pairs.iter().enumerate() {
        if let Some(pair) = pair {
            println!(
                "u{}: c_bar = {:.4} (r2 {:.4}), c_under = {:.4} (r2 {:.4}), plateau {:.4}",
                k + 1,
                pair.c_bar.speed,
                pair.c_bar.r2,
                pair.c_under.speed,
                pair.c_under.r2,
                pair.plateau
            );
        }
    }
    if let Some(zone) = run.zone {
        println!(
            "final zone: {} (means u1 {:.4}, u2 {:.4}, u3 {:.4})",
            zone.regime, zone.means[0], zone.means[1], zone.means[2]
        );
    }
    for note in &run.notes {
        println!("note: {note}");
    }
    write_snapshots_csv(&artifact_path(cfg, "snapshots.csv")?, cfg, &run.result)?;
    write_fronts_csv(&artifact_path(cfg, "fronts.csv")?, cfg, &run.fronts)?;
    Ok(())
}

/// Full pipeline and checks; writes `report.json`, `fronts.csv` and,
/// when the grid solver runs, `rho.csv`. Fails with
/// [`CliError::ChecksFailed`] if any check fails.
pub fn cmd_compare(cfg: &ScenarioConfig) -> Result<CompareReport> {
    if cfg.pipeline.hj {
        let hj = run_hj(cfg)?;
        write_rho_csv(&artifact_path(cfg, "rho.csv")?, cfg, &hj.rho, &hj.rate)?;
    }
    let report = compare(cfg)?;
    print!("{report}");
    write_json(&artifact_path(cfg, "report.json")?, &report)?;
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::ChecksFailed {
            failed,
            total: report.checks.len(),
        });
    }
    Ok(report)
}

/// Parameter sweep; writes `sweep.csv`.
pub fn cmd_sweep(cfg: &ScenarioConfig, spec: &SweepSpec) -> Result<()> {
    let rows = run_sweep(cfg, spec)?;
    let path = artifact_path(cfg, "sweep.csv")?;
    write_sweep_csv(&path, cfg, spec, &rows)?;
    let failed = rows.iter().filter(|r| r.speeds.is_err()).count();
    println!(
        "{} points written to {} ({} without a speed report)",
        rows.len(),
        path.display(),
        failed
    );
    Ok(())
}
