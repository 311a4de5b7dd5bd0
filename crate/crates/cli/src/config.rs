//! Experiment configuration: a nested-table TOML file with explicit units in
//! key names. Every key is optional; omitted keys take the documented
//! defaults (sinusoid rate 3.0-3.3 tx/s, one block per 10 minutes, 1 MB
//! blocks, fee-per-byte selection).

use std::path::{Path, PathBuf};
use std::str::FromStr;

use backlogsim_core::engine::SimConfig;
use backlogsim_core::mempool::Strategy;
use backlogsim_core::scalar::Scalar;
use backlogsim_core::stochastic::{AttributeModel, IntensityFunction};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MB: u64 = 1_000_000;
const DEFAULT_HORIZON_S: f64 = 604_800.0; // 7 simulated days

/// Fully resolved experiment: base run config plus sweep and game settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: SimConfig<Scalar>,
    pub sweep_capacities: Vec<u64>,
    pub sweep_strategies: Vec<Strategy>,
    /// Replications per sweep cell.
    pub replications: u32,
    pub game: GameSettings,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSettings {
    pub replications: u32,
    pub strategies: Vec<Strategy>,
    pub common_random_numbers: bool,
}

// ============================================================================
// Raw TOML schema
// ============================================================================

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    horizon_s: Option<f64>,
    warmup_s: Option<f64>,
    mu_blocks_per_s: Option<f64>,
    capacity_bytes: Option<u64>,
    strategy: Option<String>,
    output_dir: Option<String>,
    replications: Option<u32>,
    intensity: Option<RawIntensity>,
    attributes: Option<RawAttributes>,
    sweep: Option<RawSweep>,
    game: Option<RawGame>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntensity {
    kind: Option<String>,
    lambda_lo: Option<f64>,
    lambda_hi: Option<f64>,
    period_s: Option<f64>,
    ramp_duration_s: Option<f64>,
    lambda_max: Option<f64>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttributes {
    fee_mu_log: Option<f64>,
    fee_sigma_log: Option<f64>,
    size_mu_log: Option<f64>,
    size_sigma_log: Option<f64>,
    copula_rho: Option<f64>,
    min_size_bytes: Option<u64>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    capacities_bytes: Option<Vec<u64>>,
    strategies: Option<Vec<String>>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    replications: Option<u32>,
    strategies: Option<Vec<String>>,
    common_random_numbers: Option<bool>,
}

// ============================================================================
// Loading and resolution
// ============================================================================

/// Loads and validates an experiment file. Parse errors keep the TOML line
/// information; invariant violations name the offending field.
pub fn load_config(path: &Path) -> Result<ExperimentSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path.display().to_string()))?;
    parse_config(&text)
}

/// Parses config text; see [`load_config`].
pub fn parse_config(text: &str) -> Result<ExperimentSpec, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    resolve(raw)
}

fn parse_strategy(field: &str, s: &str) -> Result<Strategy, CliError> {
    Strategy::from_str(s).map_err(|reason| CliError::Validation {
        field: field.into(),
        reason,
    })
}

fn parse_strategies(field: &str, raw: &[String]) -> Result<Vec<Strategy>, CliError> {
    if raw.is_empty() {
        return Err(CliError::Validation {
            field: field.into(),
            reason: "list is empty".into(),
        });
    }
    raw.iter().map(|s| parse_strategy(field, s)).collect()
}

fn resolve(raw: RawConfig) -> Result<ExperimentSpec, CliError> {
    let horizon = raw.horizon_s.unwrap_or(DEFAULT_HORIZON_S);
    let warmup = raw.warmup_s.unwrap_or(horizon / 10.0);
    let mu = raw.mu_blocks_per_s.unwrap_or(1.0 / 600.0);
    let capacity = raw.capacity_bytes.unwrap_or(MB);
    let strategy = match &raw.strategy {
        Some(s) => parse_strategy("strategy", s)?,
        None => Strategy::FeePerByte,
    };

    let intensity = resolve_intensity(raw.intensity.clone().unwrap_or_default(), horizon)?;
    let attributes = resolve_attributes(raw.attributes.clone().unwrap_or_default())?;

    let base = SimConfig {
        intensity,
        attributes,
        mu,
        capacity,
        strategy,
        horizon,
        warmup,
        seed: raw.seed.unwrap_or(0),
    };
    base.validate()?;

    let sweep = raw.sweep.clone().unwrap_or_default();
    let sweep_capacities = match sweep.capacities_bytes {
        Some(caps) => {
            if caps.is_empty() {
                return Err(CliError::Validation {
                    field: "sweep.capacities_bytes".into(),
                    reason: "list is empty".into(),
                });
            }
            for &c in &caps {
                if c < attributes.min_size {
                    return Err(CliError::Validation {
                        field: "sweep.capacities_bytes".into(),
                        reason: format!(
                            "capacity {c} cannot hold the minimum transaction size {}",
                            attributes.min_size
                        ),
                    });
                }
            }
            caps
        }
        None => (1..=8).map(|mb| mb * MB).collect(),
    };
    let sweep_strategies = match sweep.strategies {
        Some(list) => parse_strategies("sweep.strategies", &list)?,
        None => Strategy::ALL.to_vec(),
    };

    let replications = raw.replications.unwrap_or(1);
    if replications == 0 {
        return Err(CliError::Validation {
            field: "replications".into(),
            reason: "must be >= 1".into(),
        });
    }

    let game_raw = raw.game.clone().unwrap_or_default();
    let game_replications = game_raw.replications.unwrap_or(20);
    if game_replications == 0 {
        return Err(CliError::Validation {
            field: "game.replications".into(),
            reason: "must be >= 1".into(),
        });
    }
    let game = GameSettings {
        replications: game_replications,
        strategies: match game_raw.strategies {
            Some(list) => parse_strategies("game.strategies", &list)?,
            None => Strategy::ALL.to_vec(),
        },
        common_random_numbers: game_raw.common_random_numbers.unwrap_or(false),
    };

    Ok(ExperimentSpec {
        base,
        sweep_capacities,
        sweep_strategies,
        replications,
        game,
        output_dir: PathBuf::from(raw.output_dir.unwrap_or_else(|| "out".into())),
    })
}

fn resolve_intensity(
    raw: RawIntensity,
    horizon: f64,
) -> Result<IntensityFunction<Scalar>, CliError> {
    let kind = raw.kind.as_deref().unwrap_or("sinusoid");
    let lo = raw.lambda_lo.unwrap_or(3.0);
    let hi = raw.lambda_hi.unwrap_or(3.3);
    let map_err = |e: backlogsim_core::stochastic::ModelError| CliError::Validation {
        field: "intensity".into(),
        reason: e.to_string(),
    };
    let f = match kind {
        "constant" => IntensityFunction::constant(lo).map_err(map_err)?,
        "sinusoid" => {
            IntensityFunction::sinusoid(lo, hi, raw.period_s.unwrap_or(3600.0)).map_err(map_err)?
        }
        "linear_ramp" => {
            IntensityFunction::linear_ramp(lo, hi, raw.ramp_duration_s.unwrap_or(horizon))
                .map_err(map_err)?
        }
        other => {
            return Err(CliError::Validation {
                field: "intensity.kind".into(),
                reason: format!(
                    "unknown kind `{other}` (expected constant, sinusoid or linear_ramp)"
                ),
            })
        }
    };
    match raw.lambda_max {
        Some(bound) => f.with_lambda_max(bound).map_err(map_err),
        None => Ok(f),
    }
}

fn resolve_attributes(raw: RawAttributes) -> Result<AttributeModel<Scalar>, CliError> {
    let d = AttributeModel::<Scalar>::default();
    let model = AttributeModel {
        fee_mu_log: raw.fee_mu_log.unwrap_or(d.fee_mu_log),
        fee_sigma_log: raw.fee_sigma_log.unwrap_or(d.fee_sigma_log),
        size_mu_log: raw.size_mu_log.unwrap_or(d.size_mu_log),
        size_sigma_log: raw.size_sigma_log.unwrap_or(d.size_sigma_log),
        copula_rho: raw.copula_rho.unwrap_or(d.copula_rho),
        min_size: raw.min_size_bytes.unwrap_or(d.min_size),
    };
    model.validate().map_err(|e| CliError::Validation {
        field: "attributes".into(),
        reason: e.to_string(),
    })?;
    Ok(model)
}

// ============================================================================
// Echo (resolved spec back to TOML)
// ============================================================================

/// Serializes the resolved spec as a fully populated config file; loading the
/// echo yields the identical spec.
pub fn echo_config(spec: &ExperimentSpec) -> String {
    use backlogsim_core::stochastic::IntensityShape;

    let shape = spec.base.intensity.shape();
    let intensity = match *shape {
        IntensityShape::Constant { rate } => RawIntensity {
            kind: Some("constant".into()),
            lambda_lo: Some(rate),
            lambda_hi: Some(rate),
            period_s: None,
            ramp_duration_s: None,
            lambda_max: Some(spec.base.intensity.lambda_max()),
        },
        IntensityShape::Sinusoid {
            lambda_lo,
            lambda_hi,
            period_s,
        } => RawIntensity {
            kind: Some("sinusoid".into()),
            lambda_lo: Some(lambda_lo),
            lambda_hi: Some(lambda_hi),
            period_s: Some(period_s),
            ramp_duration_s: None,
            lambda_max: Some(spec.base.intensity.lambda_max()),
        },
        IntensityShape::LinearRamp {
            lambda_lo,
            lambda_hi,
            duration_s,
        } => RawIntensity {
            kind: Some("linear_ramp".into()),
            lambda_lo: Some(lambda_lo),
            lambda_hi: Some(lambda_hi),
            period_s: None,
            ramp_duration_s: Some(duration_s),
            lambda_max: Some(spec.base.intensity.lambda_max()),
        },
    };

    let raw = RawConfig {
        seed: Some(spec.base.seed),
        horizon_s: Some(spec.base.horizon),
        warmup_s: Some(spec.base.warmup),
        mu_blocks_per_s: Some(spec.base.mu),
        capacity_bytes: Some(spec.base.capacity),
        strategy: Some(spec.base.strategy.label().into()),
        output_dir: Some(spec.output_dir.display().to_string()),
        replications: Some(spec.replications),
        intensity: Some(intensity),
        attributes: Some(RawAttributes {
            fee_mu_log: Some(spec.base.attributes.fee_mu_log),
            fee_sigma_log: Some(spec.base.attributes.fee_sigma_log),
            size_mu_log: Some(spec.base.attributes.size_mu_log),
            size_sigma_log: Some(spec.base.attributes.size_sigma_log),
            copula_rho: Some(spec.base.attributes.copula_rho),
            min_size_bytes: Some(spec.base.attributes.min_size),
        }),
        sweep: Some(RawSweep {
            capacities_bytes: Some(spec.sweep_capacities.clone()),
            strategies: Some(
                spec.sweep_strategies
                    .iter()
                    .map(|s| s.label().into())
                    .collect(),
            ),
        }),
        game: Some(RawGame {
            replications: Some(spec.game.replications),
            strategies: Some(
                spec.game
                    .strategies
                    .iter()
                    .map(|s| s.label().into())
                    .collect(),
            ),
            common_random_numbers: Some(spec.game.common_random_numbers),
        }),
    };
    toml::to_string_pretty(&raw).expect("resolved config serializes")
}
