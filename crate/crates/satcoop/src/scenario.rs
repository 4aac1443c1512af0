//! Scenario files: parsing, validation, defaulting, and round-trip
//! serialization.
//!
//! A scenario is a TOML document with `[constellation]`, `[user]`,
//! `[link]`, `[channel]` and `[experiment]` sections. Physical quantities
//! carry their unit in the key name (`altitude_km`, `bandwidth_mhz`,
//! `power_dbw`), unknown keys are rejected at parse time, and semantic
//! violations are reported as a list naming each offending key path.
//! Every default applied during resolution is echoed to the provenance
//! log, and no experiment runs on a config that did not fully validate.

use crate::channel::{DurationDistribution, LinkBudget, LooParams, StateProcess};
use crate::detection::RateChannel;
use crate::experiments::{GroupSelection, Mode, ScenarioConfig};
use crate::geometry::{ConstellationSpec, GroundUser, ShellSpec};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    /// Syntactic or unknown-key error; the message carries line numbers.
    #[error("parse error: {0}")]
    Parse(String),
    /// One message per violated key path.
    #[error("invalid scenario:\n{}", issues.join("\n"))]
    Semantic { issues: Vec<String> },
}

// ---------------------------------------------------------------------------
// File schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub constellation: ConstellationSection,
    pub user: UserSection,
    pub link: LinkSection,
    #[serde(default)]
    pub channel: ChannelSection,
    pub experiment: ExperimentSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationSection {
    #[serde(default)]
    pub epoch_s: Option<f64>,
    #[serde(default)]
    pub min_elevation_deg: Option<f64>,
    /// "group1", "group2" or "both".
    #[serde(default)]
    pub group_selection: Option<String>,
    pub shell: Vec<ShellSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSection {
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub num_planes: u32,
    pub sats_per_plane: u32,
    #[serde(default)]
    pub raan_spread_deg: Option<f64>,
    #[serde(default)]
    pub phasing_step_deg: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSection {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    #[serde(default)]
    pub altitude_m: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub power_dbw: f64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
    pub carrier_ghz: f64,
    pub bandwidth_mhz: f64,
    #[serde(default)]
    pub noise_temp_k: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    /// Named parameter set; only "default-suburban" is built in.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub coherence_interval_ms: Option<f64>,
    #[serde(default)]
    pub clamp_delta: Option<f64>,
    #[serde(default)]
    pub moment_samples: Option<usize>,
    #[serde(default)]
    pub error_variance_includes_fspl: Option<bool>,
    #[serde(default)]
    pub good_state: Option<LooSection>,
    #[serde(default)]
    pub bad_state: Option<LooSection>,
    #[serde(default)]
    pub durations: Option<DurationSection>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LooSection {
    pub los_mean_db: f64,
    pub los_std_db: f64,
    pub nlos_mean_power_db: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DurationSection {
    pub good_median_s: f64,
    pub good_std_db: f64,
    pub bad_median_s: f64,
    pub bad_std_db: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub duration_s: f64,
    pub l_values: Vec<usize>,
    #[serde(default)]
    pub time_step_s: Option<f64>,
    /// "full", "partial" or "single".
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub mc_symbols: Option<usize>,
    #[serde(default)]
    pub ber_time_samples: Option<usize>,
    #[serde(default)]
    pub ber_blocks_per_sample: Option<usize>,
    #[serde(default)]
    pub master_seed: Option<u64>,
    /// "true-h" or "estimated-h".
    #[serde(default)]
    pub rate_channel: Option<String>,
    #[serde(default)]
    pub epsilon_values: Option<Vec<f64>>,
    /// Carrier/bandwidth grid for the band sweep, as (GHz, MHz) pairs.
    #[serde(default)]
    pub bands_ghz_mhz: Option<Vec<(f64, f64)>>,
}

// ---------------------------------------------------------------------------
// Parsing and resolution
// ---------------------------------------------------------------------------

/// Parse and fully validate a scenario file. Returns the resolved config
/// and its canonical serialization (the hash input for run manifests).
pub fn validate_config(path: &Path) -> Result<(ScenarioConfig, String), ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    validate_config_str(&text)
}

/// Same as [`validate_config`] for an in-memory document.
pub fn validate_config_str(text: &str) -> Result<(ScenarioConfig, String), ConfigError> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let cfg = resolve(&file)?;
    let canonical = canonical_toml(&cfg);
    Ok((cfg, canonical))
}

fn default_of<T: std::fmt::Display>(path: &str, value: T) -> T {
    log::info!("default applied: {path} = {value}");
    value
}

/// Apply defaults and semantic checks; collect every violation.
pub fn resolve(file: &ScenarioFile) -> Result<ScenarioConfig, ConfigError> {
    let mut issues: Vec<String> = Vec::new();

    // [constellation]
    if file.constellation.shell.is_empty() {
        issues.push("[constellation].shell: at least one shell required".into());
    }
    let shells: Vec<ShellSpec> = file
        .constellation
        .shell
        .iter()
        .map(|s| ShellSpec {
            altitude_m: s.altitude_km * 1e3,
            inclination_deg: s.inclination_deg,
            num_planes: s.num_planes,
            sats_per_plane: s.sats_per_plane,
            raan_spread_deg: s
                .raan_spread_deg
                .unwrap_or_else(|| default_of("[constellation].shell.raan_spread_deg", 360.0)),
            phasing_step_deg: s
                .phasing_step_deg
                .unwrap_or_else(|| default_of("[constellation].shell.phasing_step_deg", 0.0)),
        })
        .collect();
    for (i, s) in shells.iter().enumerate() {
        if let Err(e) = s.validate() {
            issues.push(format!("[constellation].shell[{i}]: {e}"));
        }
    }
    let constellation = ConstellationSpec {
        shells,
        epoch_s: file
            .constellation
            .epoch_s
            .unwrap_or_else(|| default_of("[constellation].epoch_s", 0.0)),
    };
    let min_elevation_deg = file
        .constellation
        .min_elevation_deg
        .unwrap_or_else(|| default_of("[constellation].min_elevation_deg", 30.0));
    if !(0.0..90.0).contains(&min_elevation_deg) {
        issues.push("[constellation].min_elevation_deg: must lie in [0, 90)".into());
    }
    let group_selection = match file
        .constellation
        .group_selection
        .as_deref()
        .map(str::to_ascii_lowercase)
    {
        None => {
            default_of("[constellation].group_selection", "both");
            GroupSelection::Both
        }
        Some(ref s) if s == "group1" => GroupSelection::Group1,
        Some(ref s) if s == "group2" => GroupSelection::Group2,
        Some(ref s) if s == "both" => GroupSelection::Both,
        Some(other) => {
            issues.push(format!(
                "[constellation].group_selection: unknown value {other:?} (expected group1|group2|both)"
            ));
            GroupSelection::Both
        }
    };

    // [user]
    let user = GroundUser {
        latitude_deg: file.user.latitude_deg,
        longitude_deg: file.user.longitude_deg,
        altitude_m: file
            .user
            .altitude_m
            .unwrap_or_else(|| default_of("[user].altitude_m", 0.0)),
    };
    if let Err(e) = user.validate() {
        issues.push(format!("[user]: {e}"));
    }

    // [link]
    if !(file.link.bandwidth_mhz > 0.0) {
        issues.push("[link].bandwidth_mhz: must be positive".into());
    }
    if !(file.link.carrier_ghz > 0.0) {
        issues.push("[link].carrier_ghz: must be positive".into());
    }
    let noise_temp_k = file
        .link
        .noise_temp_k
        .unwrap_or_else(|| default_of("[link].noise_temp_k", 290.0));
    if !(noise_temp_k > 0.0) {
        issues.push("[link].noise_temp_k: must be positive".into());
    }
    let link = LinkBudget::new(
        file.link.power_dbw,
        file.link.tx_gain_db,
        file.link.rx_gain_db,
        file.link.carrier_ghz.max(f64::MIN_POSITIVE) * 1e9,
        file.link.bandwidth_mhz.max(f64::MIN_POSITIVE) * 1e6,
        noise_temp_k.max(f64::MIN_POSITIVE),
    )
    .expect("positive arguments enforced above");

    // [channel]
    let ch = &file.channel;
    let mut process: StateProcess = match ch.preset.as_deref() {
        None | Some("default-suburban") => crate::channel::default_suburban(),
        Some(other) => {
            issues.push(format!(
                "[channel].preset: unknown preset {other:?} (only \"default-suburban\" is built in)"
            ));
            crate::channel::default_suburban()
        }
    };
    let loo = |section: &LooSection, path: &str, issues: &mut Vec<String>| {
        match LooParams::from_db(
            section.los_mean_db,
            section.los_std_db,
            section.nlos_mean_power_db,
        ) {
            Ok(p) => Some(p),
            Err(e) => {
                issues.push(format!("{path}: {e}"));
                None
            }
        }
    };
    if let Some(g) = &ch.good_state {
        if let Some(p) = loo(g, "[channel].good_state", &mut issues) {
            process.good = p;
        }
    }
    if let Some(b) = &ch.bad_state {
        if let Some(p) = loo(b, "[channel].bad_state", &mut issues) {
            process.bad = p;
        }
    }
    if let Some(d) = &ch.durations {
        if !(d.good_median_s > 0.0 && d.bad_median_s > 0.0) {
            issues.push("[channel].durations: medians must be positive".into());
        }
        if d.good_std_db < 0.0 || d.bad_std_db < 0.0 {
            issues.push("[channel].durations: std_db must be nonnegative".into());
        }
        process.good_duration = DurationDistribution {
            median_s: d.good_median_s,
            std_db: d.good_std_db,
        };
        process.bad_duration = DurationDistribution {
            median_s: d.bad_median_s,
            std_db: d.bad_std_db,
        };
    }
    let epsilon = ch
        .epsilon
        .unwrap_or_else(|| default_of("[channel].epsilon", 3.0));
    if !(epsilon >= 0.0) {
        issues.push("[channel].epsilon: must be nonnegative".into());
    }
    let coherence_interval_s = ch
        .coherence_interval_ms
        .unwrap_or_else(|| default_of("[channel].coherence_interval_ms", 1.0))
        * 1e-3;
    if !(coherence_interval_s > 0.0) {
        issues.push("[channel].coherence_interval_ms: must be positive".into());
    }
    let clamp_delta = ch
        .clamp_delta
        .unwrap_or_else(|| default_of("[channel].clamp_delta", 1e-3));
    if !(clamp_delta > 0.0) {
        issues.push("[channel].clamp_delta: must be positive".into());
    }
    let moment_samples = ch
        .moment_samples
        .unwrap_or_else(|| default_of("[channel].moment_samples", 100_000));
    if moment_samples < 10_000 {
        issues.push("[channel].moment_samples: must be at least 10000".into());
    }
    let error_variance_includes_fspl = ch
        .error_variance_includes_fspl
        .unwrap_or_else(|| default_of("[channel].error_variance_includes_fspl", true));

    // [experiment]
    let ex = &file.experiment;
    if !(ex.duration_s > 0.0) {
        issues.push("[experiment].duration_s: must be positive".into());
    }
    if ex.l_values.is_empty() {
        issues.push("[experiment].l_values: must be nonempty".into());
    }
    if ex.l_values.iter().any(|&l| l == 0) {
        issues.push("[experiment].l_values: cluster sizes must be at least 1".into());
    }
    let time_step_s = ex
        .time_step_s
        .unwrap_or_else(|| default_of("[experiment].time_step_s", 1.0));
    if !(time_step_s > 0.0) {
        issues.push("[experiment].time_step_s: must be positive".into());
    }
    let mode = match ex.mode.as_deref().map(str::to_ascii_lowercase) {
        None => {
            default_of("[experiment].mode", "full");
            Mode::FullCsi
        }
        Some(ref s) if s == "full" => Mode::FullCsi,
        Some(ref s) if s == "partial" => Mode::PartialCsi,
        Some(ref s) if s == "single" => Mode::SingleSat,
        Some(other) => {
            issues.push(format!(
                "[experiment].mode: unknown value {other:?} (expected full|partial|single)"
            ));
            Mode::FullCsi
        }
    };
    let rate_channel = match ex.rate_channel.as_deref().map(str::to_ascii_lowercase) {
        None => {
            default_of("[experiment].rate_channel", "true-h");
            RateChannel::TrueH
        }
        Some(ref s) if s == "true-h" => RateChannel::TrueH,
        Some(ref s) if s == "estimated-h" => RateChannel::EstimatedH,
        Some(other) => {
            issues.push(format!(
                "[experiment].rate_channel: unknown value {other:?} (expected true-h|estimated-h)"
            ));
            RateChannel::TrueH
        }
    };
    let mc_symbols = ex
        .mc_symbols
        .unwrap_or_else(|| default_of("[experiment].mc_symbols", 100_000));
    if mc_symbols < 10_000 {
        issues.push("[experiment].mc_symbols: must be at least 10000 for BER runs".into());
    }
    let ber_time_samples = ex
        .ber_time_samples
        .unwrap_or_else(|| default_of("[experiment].ber_time_samples", 20));
    let ber_blocks_per_sample = ex
        .ber_blocks_per_sample
        .unwrap_or_else(|| default_of("[experiment].ber_blocks_per_sample", 20));
    if ber_time_samples == 0 || ber_blocks_per_sample == 0 {
        issues.push(
            "[experiment].ber_time_samples: samples and blocks per sample must be positive"
                .into(),
        );
    }
    let master_seed = ex
        .master_seed
        .unwrap_or_else(|| default_of("[experiment].master_seed", 42));
    let epsilon_values = match &ex.epsilon_values {
        Some(v) => {
            if v.iter().any(|e| *e < 0.0) {
                issues.push("[experiment].epsilon_values: must be nonnegative".into());
            }
            v.clone()
        }
        None => vec![epsilon],
    };
    let bands = match &ex.bands_ghz_mhz {
        Some(v) => {
            if v.iter().any(|&(g, m)| g <= 0.0 || m <= 0.0) {
                issues.push("[experiment].bands_ghz_mhz: entries must be positive".into());
            }
            v.iter().map(|&(g, m)| (g * 1e9, m * 1e6)).collect()
        }
        None => {
            default_of(
                "[experiment].bands_ghz_mhz",
                "[[2,100],[6,500],[8,500],[14,500],[30,1000]]",
            );
            vec![
                (2e9, 100e6),
                (6e9, 500e6),
                (8e9, 500e6),
                (14e9, 500e6),
                (30e9, 1e9),
            ]
        }
    };

    if !issues.is_empty() {
        return Err(ConfigError::Semantic { issues });
    }

    let cfg = ScenarioConfig {
        constellation,
        group_selection,
        min_elevation_deg,
        user,
        link,
        process,
        epsilon,
        epsilon_values,
        l_values: ex.l_values.clone(),
        mode,
        duration_s: ex.duration_s,
        time_step_s,
        coherence_interval_s,
        mc_symbols,
        ber_time_samples,
        ber_blocks_per_sample,
        master_seed,
        clamp_delta,
        moment_samples,
        rate_channel,
        error_variance_includes_fspl,
        bands,
    };
    if let Err(e) = cfg.validate() {
        return Err(ConfigError::Semantic {
            issues: vec![e.to_string()],
        });
    }
    Ok(cfg)
}

/// Serialize a resolved config back into the file schema with every field
/// explicit. `validate_config(serialize(cfg))` reproduces `cfg`.
pub fn serialize(cfg: &ScenarioConfig) -> ScenarioFile {
    ScenarioFile {
        constellation: ConstellationSection {
            epoch_s: Some(cfg.constellation.epoch_s),
            min_elevation_deg: Some(cfg.min_elevation_deg),
            group_selection: Some(
                match cfg.group_selection {
                    GroupSelection::Group1 => "group1",
                    GroupSelection::Group2 => "group2",
                    GroupSelection::Both => "both",
                }
                .to_string(),
            ),
            shell: cfg
                .constellation
                .shells
                .iter()
                .map(|s| ShellSection {
                    altitude_km: s.altitude_m / 1e3,
                    inclination_deg: s.inclination_deg,
                    num_planes: s.num_planes,
                    sats_per_plane: s.sats_per_plane,
                    raan_spread_deg: Some(s.raan_spread_deg),
                    phasing_step_deg: Some(s.phasing_step_deg),
                })
                .collect(),
        },
        user: UserSection {
            latitude_deg: cfg.user.latitude_deg,
            longitude_deg: cfg.user.longitude_deg,
            altitude_m: Some(cfg.user.altitude_m),
        },
        link: LinkSection {
            power_dbw: cfg.link.p_t_dbw,
            tx_gain_db: cfg.link.g_t_db,
            rx_gain_db: cfg.link.g_r_db,
            carrier_ghz: cfg.link.f_c_hz / 1e9,
            bandwidth_mhz: cfg.link.bw_hz / 1e6,
            noise_temp_k: Some(cfg.link.t_noise_k),
        },
        channel: ChannelSection {
            preset: None,
            epsilon: Some(cfg.epsilon),
            coherence_interval_ms: Some(cfg.coherence_interval_s * 1e3),
            clamp_delta: Some(cfg.clamp_delta),
            moment_samples: Some(cfg.moment_samples),
            error_variance_includes_fspl: Some(cfg.error_variance_includes_fspl),
            good_state: Some(LooSection {
                los_mean_db: cfg.process.good.m_a_db,
                los_std_db: cfg.process.good.sigma_a_db,
                nlos_mean_power_db: cfg.process.good.mp_db,
            }),
            bad_state: Some(LooSection {
                los_mean_db: cfg.process.bad.m_a_db,
                los_std_db: cfg.process.bad.sigma_a_db,
                nlos_mean_power_db: cfg.process.bad.mp_db,
            }),
            durations: Some(DurationSection {
                good_median_s: cfg.process.good_duration.median_s,
                good_std_db: cfg.process.good_duration.std_db,
                bad_median_s: cfg.process.bad_duration.median_s,
                bad_std_db: cfg.process.bad_duration.std_db,
            }),
        },
        experiment: ExperimentSection {
            duration_s: cfg.duration_s,
            l_values: cfg.l_values.clone(),
            time_step_s: Some(cfg.time_step_s),
            mode: Some(
                match cfg.mode {
                    Mode::FullCsi => "full",
                    Mode::PartialCsi => "partial",
                    Mode::SingleSat => "single",
                }
                .to_string(),
            ),
            mc_symbols: Some(cfg.mc_symbols),
            ber_time_samples: Some(cfg.ber_time_samples),
            ber_blocks_per_sample: Some(cfg.ber_blocks_per_sample),
            master_seed: Some(cfg.master_seed),
            rate_channel: Some(
                match cfg.rate_channel {
                    RateChannel::TrueH => "true-h",
                    RateChannel::EstimatedH => "estimated-h",
                }
                .to_string(),
            ),
            epsilon_values: Some(cfg.epsilon_values.clone()),
            bands_ghz_mhz: Some(
                cfg.bands
                    .iter()
                    .map(|&(f, b)| (f / 1e9, b / 1e6))
                    .collect(),
            ),
        },
    }
}

/// Canonical TOML of a resolved config (all fields explicit); the run
/// manifest hashes this string.
pub fn canonical_toml(cfg: &ScenarioConfig) -> String {
    toml::to_string_pretty(&serialize(cfg)).expect("config serializes")
}

/// Hex SHA-256 of the canonical config serialization.
pub fn config_sha256(canonical: &str) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(canonical.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}
