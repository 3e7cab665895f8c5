//! Dispatches a validated configuration and writes its output file.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lambda_cqed::dynamics::{default_tau_grid, g2_tau};
use lambda_cqed::eigenstructure::ladder_scan;
use lambda_cqed::liouvillian::assemble_liouvillian;
use lambda_cqed::output::{write_csv, write_jsonl, CsvRow};
use lambda_cqed::steadystate::steady_state;
use lambda_cqed::sweep::{find_magic, sweep_1d, sweep_2d, SweepRecord};
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, Format, Mode, RunConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("computation failed: {0}")]
    Compute(#[from] lambda_cqed::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Compute(_) => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub mode: Mode,
    pub points: usize,
    pub seconds: f64,
    pub output: PathBuf,
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "mode={} points={} wall={:.3}s output={}",
            self.mode.name(),
            self.points,
            self.seconds,
            self.output.display()
        )
    }
}

/// Output path: the configured one, else `<mode>.<ext>` in the working directory.
pub fn output_path(config: &RunConfig) -> PathBuf {
    config.output.clone().unwrap_or_else(|| {
        let ext = match (config.mode, config.format) {
            (Mode::Magic, _) => "json",
            (_, Format::Csv) => "csv",
            (_, Format::Jsonl) => "jsonl",
        };
        PathBuf::from(format!("{}.{ext}", config.mode.name()))
    })
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> lambda_cqed::Result<()>) -> Result<(), RunError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(lambda_cqed::Error::from)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(lambda_cqed::Error::from)?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf)?;
        buf.flush().map_err(lambda_cqed::Error::from)?;
    }
    tmp.persist(path)
        .map_err(|e| lambda_cqed::Error::Output(e.to_string()))?;
    Ok(())
}

fn write_table<T: CsvRow + Serialize>(path: &Path, format: Format, rows: &[T]) -> Result<(), RunError> {
    write_atomic(path, |w| match format {
        Format::Csv => write_csv(rows, w),
        Format::Jsonl => write_jsonl(rows, w),
    })
}

fn axis(grid: lambda_cqed::GridSpec, field: &str) -> Result<Vec<f64>, RunError> {
    grid.expand().map_err(|e| {
        RunError::Config(ConfigError::Invalid {
            field: field.to_string(),
            message: e.to_string(),
        })
    })
}

pub fn run(config: &RunConfig) -> Result<Summary, RunError> {
    config.validate()?;
    let start = Instant::now();
    let p = config.params();
    let out = output_path(config);
    let points = match config.mode {
        Mode::Eigen => {
            let omegas = axis(config.omega_l_axis(), "omega_l_grid")?;
            let rows = ladder_scan(p.g, p.delta_l, &omegas, &config.sectors)?;
            write_table(&out, config.format, &rows)?;
            rows.len()
        }
        Mode::Steady => {
            let (_, obs) = steady_state(&p)?;
            write_table(&out, config.format, &[SweepRecord::from_observables(&p, &obs)])?;
            1
        }
        Mode::Sweep1d => {
            let dps = axis(config.delta_p_axis(), "delta_p_grid")?;
            let rows = sweep_1d(&p, &dps, config.workers)?;
            write_table(&out, config.format, &rows)?;
            rows.len()
        }
        Mode::Sweep2d => {
            let dps = axis(config.delta_p_axis(), "delta_p_grid")?;
            let omegas = axis(config.omega_l_axis(), "omega_l_grid")?;
            let rows = sweep_2d(&p, &dps, &omegas, config.workers)?;
            write_table(&out, config.format, &rows)?;
            rows.len()
        }
        Mode::Magic => {
            let dps = axis(config.delta_p_axis(), "delta_p_grid")?;
            let omegas = axis(config.omega_l_axis(), "omega_l_grid")?;
            let m = find_magic(&p, &omegas, &dps, config.photon_floor, config.workers)?;
            write_atomic(&out, |w| {
                serde_json::to_writer_pretty(&mut *w, &m)?;
                w.write_all(b"\n")?;
                Ok(())
            })?;
            dps.len() * omegas.len()
        }
        Mode::G2tau => {
            let taus = match config.tau_grid {
                Some(g) => axis(g, "tau_grid")?,
                None => default_tau_grid(),
            };
            let (rho, _) = steady_state(&p)?;
            let l = assemble_liouvillian(&p)?;
            let rows = g2_tau(&rho, &l, &taus)?;
            write_table(&out, config.format, &rows)?;
            rows.len()
        }
    };
    Ok(Summary {
        mode: config.mode,
        points,
        seconds: start.elapsed().as_secs_f64(),
        output: out,
    })
}
