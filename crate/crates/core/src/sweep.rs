//! Steady-state parameter sweeps and the constrained `g²(0)` minimum search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::SystemParams;
use crate::hilbert::CompositeOperators;
use crate::liouvillian::liouvillian_from_ops;
use crate::steadystate::{observables, solve_steady, SteadyObservables};

/// Default photon floor for [`find_magic`].
pub const DEFAULT_PHOTON_FLOOR: f64 = 0.003;

/// Evenly spaced axis `start, start + step, …` up to and including `stop`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    pub fn single(value: f64) -> Self {
        Self::new(value, value, 1.0)
    }

    pub fn expand(&self) -> Result<Vec<f64>> {
        let GridSpec { start, stop, step } = *self;
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(Error::InvalidGrid("grid bounds and step must be finite".to_string()));
        }
        if step <= 0.0 {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
        }
        if stop < start {
            return Err(Error::InvalidGrid(format!("stop {stop} is below start {start}")));
        }
        // Absorb rounding in (stop - start) / step so the endpoint is kept.
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|k| start + k as f64 * step).collect())
    }

    pub fn len(&self) -> Result<usize> {
        self.expand().map(|v| v.len())
    }
}

/// Observables at one grid point. Failed solves keep `converged = false`
/// and carry NaN observables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub delta_p: f64,
    #[serde(rename = "omega_L")]
    pub omega_l: f64,
    #[serde(rename = "delta_L")]
    pub delta_l: f64,
    pub n_cav: f64,
    pub g2_zero: Option<f64>,
    pub log10_g2_zero: Option<f64>,
    pub pop_g: f64,
    pub pop_e: f64,
    pub pop_m: f64,
    pub converged: bool,
}

impl SweepRecord {
    fn failed(p: &SystemParams) -> Self {
        Self {
            delta_p: p.delta_p,
            omega_l: p.omega_l,
            delta_l: p.delta_l,
            n_cav: f64::NAN,
            g2_zero: None,
            log10_g2_zero: None,
            pop_g: f64::NAN,
            pop_e: f64::NAN,
            pop_m: f64::NAN,
            converged: false,
        }
    }

    pub fn from_observables(p: &SystemParams, o: &SteadyObservables) -> Self {
        Self {
            delta_p: p.delta_p,
            omega_l: p.omega_l,
            delta_l: p.delta_l,
            n_cav: o.n_cav,
            g2_zero: o.g2_zero,
            log10_g2_zero: o.g2_zero.filter(|g| *g > 0.0).map(f64::log10),
            pop_g: o.pop_g,
            pop_e: o.pop_e,
            pop_m: o.pop_m,
            converged: true,
        }
    }
}

/// Steady-state observables at `p`, reusing prebuilt operators.
fn evaluate(p: &SystemParams, ops: &CompositeOperators) -> SweepRecord {
    let solved = liouvillian_from_ops(p, ops)
        .and_then(|l| solve_steady(&l))
        .and_then(|rho| observables(&rho, ops.truncation()));
    match solved {
        Ok(o) => SweepRecord::from_observables(p, &o),
        Err(_) => SweepRecord::failed(p),
    }
}

/// Steady state of a single parameter set, as a sweep record.
pub fn evaluate_point(p: &SystemParams) -> Result<SweepRecord> {
    p.validate()?;
    Ok(evaluate(p, &CompositeOperators::new(p.truncation()?)))
}

fn check_axis(grid: &[f64], name: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid(format!("{name} grid is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid(format!("{name} grid has non-finite values")));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidGrid(format!("{name} grid is not sorted")));
    }
    Ok(())
}

/// Evaluates every parameter set on a pool of `workers` threads (0 = one per
/// core). Output order follows `points` regardless of scheduling.
fn run_points(points: &[SystemParams], workers: usize) -> Result<Vec<SweepRecord>> {
    let Some(first) = points.first() else {
        return Ok(Vec::new());
    };
    for p in points {
        p.validate()?;
    }
    let ops = CompositeOperators::new(first.truncation()?);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Output(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| points.par_iter().map(|p| evaluate(p, &ops)).collect()))
}

pub fn sweep_1d(p_base: &SystemParams, delta_p_grid: &[f64], workers: usize) -> Result<Vec<SweepRecord>> {
    check_axis(delta_p_grid, "delta_p")?;
    let points: Vec<SystemParams> = delta_p_grid.iter().map(|&d| p_base.with_delta_p(d)).collect();
    run_points(&points, workers)
}

/// Cross product with `omega_l` outer and `delta_p` inner.
pub fn sweep_2d(
    p_base: &SystemParams,
    delta_p_grid: &[f64],
    omega_l_grid: &[f64],
    workers: usize,
) -> Result<Vec<SweepRecord>> {
    check_axis(delta_p_grid, "delta_p")?;
    check_axis(omega_l_grid, "omega_l")?;
    let points: Vec<SystemParams> = omega_l_grid
        .iter()
        .flat_map(|&w| delta_p_grid.iter().map(move |&d| p_base.with_omega_l(w).with_delta_p(d)))
        .collect();
    run_points(&points, workers)
}

/// Constrained minimum of `g²(0)` on a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagicResult {
    #[serde(rename = "omega_L_star")]
    pub omega_l_star: f64,
    pub delta_p_star: f64,
    pub g2_min: f64,
    pub n_cav_at_min: f64,
    pub photon_floor: f64,
}

/// Grid point minimizing `g²(0)` among converged records with
/// `n_cav ≥ photon_floor`. Ties go to smaller `Ω_L`, then smaller `|Δ_p|`.
pub fn select_magic(records: &[SweepRecord], photon_floor: f64) -> Result<MagicResult> {
    if photon_floor.is_nan() || photon_floor < 0.0 {
        return Err(Error::InvalidParameter {
            field: "photon_floor",
            reason: format!("must be non-negative, got {photon_floor}"),
        });
    }
    let key = |r: &SweepRecord| (r.g2_zero.unwrap_or(f64::INFINITY), r.omega_l, r.delta_p.abs());
    records
        .iter()
        .filter(|r| r.converged && r.g2_zero.is_some() && r.n_cav >= photon_floor)
        .min_by(|a, b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0)
                .then(ka.1.total_cmp(&kb.1))
                .then(ka.2.total_cmp(&kb.2))
        })
        .map(|r| MagicResult {
            omega_l_star: r.omega_l,
            delta_p_star: r.delta_p,
            g2_min: r.g2_zero.unwrap_or(f64::NAN),
            n_cav_at_min: r.n_cav,
            photon_floor,
        })
        .ok_or(Error::Infeasible { photon_floor })
}

pub fn find_magic(
    p_base: &SystemParams,
    omega_l_grid: &[f64],
    delta_p_grid: &[f64],
    photon_floor: f64,
    workers: usize,
) -> Result<MagicResult> {
    if photon_floor.is_nan() || photon_floor < 0.0 {
        return Err(Error::InvalidParameter {
            field: "photon_floor",
            reason: format!("must be non-negative, got {photon_floor}"),
        });
    }
    if photon_floor.is_infinite() {
        return Err(Error::Infeasible { photon_floor });
    }
    let records = sweep_2d(p_base, delta_p_grid, omega_l_grid, workers)?;
    select_magic(&records, photon_floor)
}
