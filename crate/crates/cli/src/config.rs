//! Run configuration: a flat JSON object of model parameters plus run options.

use std::path::{Path, PathBuf};

use lambda_cqed::hamiltonian::{DecayConvention, SystemParams};
use lambda_cqed::sweep::{GridSpec, DEFAULT_PHOTON_FLOOR};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("empty configuration; expected a JSON object. Required fields: {required}")]
    Empty { required: String },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Eigen,
    Steady,
    Sweep1d,
    Sweep2d,
    Magic,
    G2tau,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Eigen => "eigen",
            Mode::Steady => "steady",
            Mode::Sweep1d => "sweep1d",
            Mode::Sweep2d => "sweep2d",
            Mode::Magic => "magic",
            Mode::G2tau => "g2tau",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

fn default_params() -> SystemParams {
    SystemParams::default()
}

/// Everything a run needs. Omitted fields take the reference profile
/// (`SystemParams::default()`) and the per-mode grid defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default = "d_g")]
    pub g: f64,
    #[serde(default = "d_eta")]
    pub eta: f64,
    #[serde(default)]
    pub omega_l: f64,
    #[serde(default)]
    pub delta_p: f64,
    #[serde(default)]
    pub delta_l: f64,
    #[serde(default = "d_gamma_ge")]
    pub gamma_ge: f64,
    #[serde(default = "d_gamma_me")]
    pub gamma_me: f64,
    #[serde(default = "d_gamma_gm")]
    pub gamma_gm: f64,
    #[serde(default = "d_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub decay_convention: DecayConvention,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_p_grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_l_grid: Option<GridSpec>,
    /// Delay grid for `g2tau`; the default is log-spaced on `[0, 20]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_grid: Option<GridSpec>,
    /// Photon sectors for `eigen`.
    #[serde(default = "d_sectors")]
    pub sectors: Vec<usize>,
    #[serde(default = "d_floor")]
    pub photon_floor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// Worker threads for sweeps; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
}

fn d_g() -> f64 {
    default_params().g
}
fn d_eta() -> f64 {
    default_params().eta
}
fn d_gamma_ge() -> f64 {
    default_params().gamma_ge
}
fn d_gamma_me() -> f64 {
    default_params().gamma_me
}
fn d_gamma_gm() -> f64 {
    default_params().gamma_gm
}
fn d_n_max() -> usize {
    default_params().n_max
}
fn d_sectors() -> Vec<usize> {
    vec![1, 2]
}
fn d_floor() -> f64 {
    DEFAULT_PHOTON_FLOOR
}

const REQUIRED_FIELDS: &[&str] = &["mode"];

impl RunConfig {
    /// Reference profile for `mode`.
    pub fn defaults(mode: Mode) -> Self {
        let p = default_params();
        Self {
            mode,
            g: p.g,
            eta: p.eta,
            omega_l: p.omega_l,
            delta_p: p.delta_p,
            delta_l: p.delta_l,
            gamma_ge: p.gamma_ge,
            gamma_me: p.gamma_me,
            gamma_gm: p.gamma_gm,
            n_max: p.n_max,
            decay_convention: p.decay_convention,
            delta_p_grid: None,
            omega_l_grid: None,
            tau_grid: None,
            sectors: d_sectors(),
            photon_floor: d_floor(),
            output: None,
            format: Format::Csv,
            workers: 0,
        }
    }

    pub fn params(&self) -> SystemParams {
        SystemParams {
            g: self.g,
            eta: self.eta,
            omega_l: self.omega_l,
            delta_p: self.delta_p,
            delta_l: self.delta_l,
            gamma_ge: self.gamma_ge,
            gamma_me: self.gamma_me,
            gamma_gm: self.gamma_gm,
            n_max: self.n_max,
            decay_convention: self.decay_convention,
            ..default_params()
        }
    }

    /// Detuning axis: `[-20, 20]` for spectra, `[-20, 0]` for maps.
    pub fn delta_p_axis(&self) -> GridSpec {
        self.delta_p_grid.unwrap_or(match self.mode {
            Mode::Sweep2d | Mode::Magic => GridSpec::new(-20.0, 0.0, 0.05),
            _ => GridSpec::new(-20.0, 20.0, 0.05),
        })
    }

    /// Control-field axis: `[0, 15]` for maps, `[0, 2g]` for dressed-state scans.
    pub fn omega_l_axis(&self) -> GridSpec {
        self.omega_l_grid.unwrap_or(match self.mode {
            Mode::Eigen => GridSpec::new(0.0, 2.0 * self.g, 0.1),
            _ => GridSpec::new(0.0, 15.0, 0.1),
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params().validate().map_err(|e| match e {
            lambda_cqed::Error::InvalidParameter { field, reason } => ConfigError::Invalid {
                field: field.to_string(),
                message: reason,
            },
            other => ConfigError::Invalid {
                field: "n_max".to_string(),
                message: other.to_string(),
            },
        })?;
        let axes = [
            ("delta_p_grid", Some(self.delta_p_axis())),
            ("omega_l_grid", Some(self.omega_l_axis())),
            ("tau_grid", self.tau_grid),
        ];
        for (field, grid) in axes {
            if let Some(grid) = grid {
                let values = grid.expand().map_err(|e| ConfigError::Invalid {
                    field: field.to_string(),
                    message: e.to_string(),
                })?;
                if field == "tau_grid" && values[0] < 0.0 {
                    return Err(ConfigError::Invalid {
                        field: field.to_string(),
                        message: "delays must be non-negative".to_string(),
                    });
                }
            }
        }
        if self.mode == Mode::Eigen && (self.sectors.is_empty() || self.sectors.contains(&0)) {
            return Err(ConfigError::Invalid {
                field: "sectors".to_string(),
                message: "photon sectors must be a non-empty list of n >= 1".to_string(),
            });
        }
        if self.photon_floor.is_nan() || self.photon_floor < 0.0 {
            return Err(ConfigError::Invalid {
                field: "photon_floor".to_string(),
                message: format!("must be non-negative, got {}", self.photon_floor),
            });
        }
        Ok(())
    }
}

/// Parses and validates a configuration document. `mode`, when given,
/// fills in a missing `mode` key and must agree with a present one.
pub fn parse_config(text: &str, mode: Option<Mode>) -> Result<RunConfig, ConfigError> {
    if text.trim().is_empty() {
        return Err(ConfigError::Empty {
            required: REQUIRED_FIELDS.join(", "),
        });
    }
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut inserted = false;
    if let (Some(mode), Some(obj)) = (mode, value.as_object_mut()) {
        match obj.get("mode") {
            None => {
                obj.insert("mode".to_string(), serde_json::to_value(mode).unwrap_or_default());
                inserted = true;
            }
            Some(existing) if existing != &serde_json::to_value(mode).unwrap_or_default() => {
                return Err(ConfigError::Invalid {
                    field: "mode".to_string(),
                    message: format!("file says {existing}, command line says {}", mode.name()),
                });
            }
            Some(_) => {}
        }
    }
    // Deserialize from the text when it is complete, so diagnostics carry line numbers.
    let de_result = if !inserted {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize::<_, RunConfig>(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            field_error(path, inner.to_string(), Some((inner.line(), inner.column())))
        })
    } else {
        serde_path_to_error::deserialize::<_, RunConfig>(value).map_err(|e| {
            let path = e.path().to_string();
            field_error(path, e.into_inner().to_string(), None)
        })
    };
    let config = de_result?;
    config.validate()?;
    Ok(config)
}

fn field_error(path: String, message: String, position: Option<(usize, usize)>) -> ConfigError {
    match position {
        Some((line, column)) if line > 0 => ConfigError::Parse {
            line,
            column,
            message: if path == "." { message } else { format!("{path}: {message}") },
        },
        _ => ConfigError::Invalid {
            field: path,
            message,
        },
    }
}

pub fn load_config(path: &Path, mode: Option<Mode>) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, mode)
}

/// Pretty JSON accepted back by [`parse_config`].
pub fn emit_config(config: &RunConfig) -> String {
    serde_json::to_string_pretty(config).unwrap_or_default()
}
