//! Experiment configuration: a flat, typed key-value text format with dotted
//! section names, trivially parseable and diff-friendly.
//!
//! ```text
//! # comment
//! transceiver.tx_current_ma = 25.8
//! sweep.alpha_beta = 0.5/0.5, 0.3/0.9, 0.8/0.4
//! ```
//!
//! Every key has a default; a config file only lists overrides. Unknown keys
//! and malformed values are hard errors that name the key.

use anyhow::{anyhow, bail, Context, Result};
use lldn_core::{
    EnergyContext, FrameLengths, Geometry, GridSpec, PathLossExponent, SuperframeConfig,
    TransceiverParams,
};
use std::path::Path;

/// Positions, powers, and the reference link of the placement study.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySettings {
    pub device_m: [f64; 2],
    pub coordinator_m: [f64; 2],
    pub ref_per_d2c: f64,
    pub relay_power_dbm: f64,
    /// Device powers swept by the placement command, in dBm.
    pub device_powers_dbm: Vec<f64>,
}

/// Settings for the closed-form PER sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    /// Sample count of the PER grid over [0, 1].
    pub per_steps: u32,
    /// Relay distance fractions (alpha, beta) swept for the retransmission
    /// mode.
    pub alpha_beta: Vec<(f64, f64)>,
}

/// Settings for the Monte Carlo runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub superframes: u64,
    pub seed: u64,
    /// PER values spanning each axis of the per-mode scenario grid.
    pub per_grid: Vec<f64>,
    pub model_beacon_loss: bool,
}

/// Settings for the placement sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementSettings {
    pub grid: GridSpec,
    pub line_samples: usize,
    pub refine: bool,
}

/// All knobs of one experiment, defaulting to the reference parameter set
/// (CC2520-class transceiver, 10 ms superframe with 17+1 slots, 50 m
/// device-coordinator separation, path loss exponent 3).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub transceiver: TransceiverParams,
    pub frames: FrameLengths,
    pub superframe: SuperframeConfig,
    pub kappa: f64,
    pub geometry: GeometrySettings,
    pub sweep: SweepSettings,
    pub sim: SimSettings,
    pub placement: PlacementSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            transceiver: TransceiverParams::default(),
            frames: FrameLengths::default(),
            superframe: SuperframeConfig::default(),
            kappa: 3.0,
            geometry: GeometrySettings {
                device_m: [0.0, 0.0],
                coordinator_m: [0.0, 50.0],
                ref_per_d2c: 0.1,
                relay_power_dbm: 0.0,
                device_powers_dbm: vec![0.0, -3.0, -6.0],
            },
            sweep: SweepSettings {
                per_steps: 101,
                alpha_beta: vec![(0.5, 0.5), (0.3, 0.9), (0.8, 0.4)],
            },
            sim: SimSettings {
                superframes: 1_000_000,
                seed: 42,
                per_grid: vec![0.1, 0.3, 0.5, 0.7, 0.9],
                model_beacon_loss: false,
            },
            placement: PlacementSettings {
                grid: GridSpec::default(),
                line_samples: 101,
                refine: true,
            },
        }
    }
}

const ACCEPTED_KEYS: &[&str] = &[
    "transceiver.tx_current_ma",
    "transceiver.rx_current_ma",
    "transceiver.startup_current_ma",
    "transceiver.startup_time_us",
    "transceiver.supply_voltage_v",
    "transceiver.data_rate_bps",
    "transceiver.rx_guard_us",
    "frames.beacon_bytes",
    "frames.data_bytes",
    "frames.gack_bytes",
    "superframe.duration_ms",
    "superframe.n_slots",
    "superframe.r_slots",
    "superframe.n_devices",
    "channel.kappa",
    "geometry.device_x_m",
    "geometry.device_y_m",
    "geometry.coordinator_x_m",
    "geometry.coordinator_y_m",
    "geometry.ref_per_d2c",
    "geometry.relay_power_dbm",
    "geometry.device_powers_dbm",
    "sweep.per_steps",
    "sweep.alpha_beta",
    "sim.superframes",
    "sim.seed",
    "sim.per_grid",
    "sim.model_beacon_loss",
    "placement.x_min_m",
    "placement.x_max_m",
    "placement.y_min_m",
    "placement.y_max_m",
    "placement.resolution_m",
    "placement.line_samples",
    "placement.refine",
];

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| anyhow!("invalid value for '{key}': expected a number, got '{value}'"))
}

fn parse_u32(key: &str, value: &str) -> Result<u32> {
    value.parse::<u32>().map_err(|_| {
        anyhow!("invalid value for '{key}': expected an unsigned integer, got '{value}'")
    })
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value.parse::<u64>().map_err(|_| {
        anyhow!("invalid value for '{key}': expected an unsigned integer, got '{value}'")
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => bail!("invalid value for '{key}': expected true or false, got '{value}'"),
    }
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>> {
    let items: Result<Vec<f64>> = value
        .split(',')
        .map(|item| parse_f64(key, item.trim()))
        .collect();
    let items = items?;
    if items.is_empty() {
        bail!("invalid value for '{key}': list must not be empty");
    }
    Ok(items)
}

/// Parses "0.5/0.5, 0.3/0.9" style (alpha, beta) pair lists.
fn parse_pair_list(key: &str, value: &str) -> Result<Vec<(f64, f64)>> {
    value
        .split(',')
        .map(|item| {
            let item = item.trim();
            let (a, b) = item.split_once('/').ok_or_else(|| {
                anyhow!("invalid value for '{key}': expected alpha/beta pairs, got '{item}'")
            })?;
            Ok((parse_f64(key, a.trim())?, parse_f64(key, b.trim())?))
        })
        .collect()
}

impl ExperimentConfig {
    /// Applies a single `key = value` override.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "transceiver.tx_current_ma" => {
                self.transceiver.tx_current_a = parse_f64(key, value)? * 1e-3
            }
            "transceiver.rx_current_ma" => {
                self.transceiver.rx_current_a = parse_f64(key, value)? * 1e-3
            }
            "transceiver.startup_current_ma" => {
                self.transceiver.startup_current_a = parse_f64(key, value)? * 1e-3
            }
            "transceiver.startup_time_us" => {
                self.transceiver.startup_time_s = parse_f64(key, value)? * 1e-6
            }
            "transceiver.supply_voltage_v" => {
                self.transceiver.supply_voltage_v = parse_f64(key, value)?
            }
            "transceiver.data_rate_bps" => self.transceiver.data_rate_bps = parse_f64(key, value)?,
            "transceiver.rx_guard_us" => {
                self.transceiver.rx_guard_s = parse_f64(key, value)? * 1e-6
            }
            "frames.beacon_bytes" => self.frames.beacon_bytes = parse_u32(key, value)?,
            "frames.data_bytes" => self.frames.data_bytes = parse_u32(key, value)?,
            "frames.gack_bytes" => self.frames.gack_bytes = parse_u32(key, value)?,
            "superframe.duration_ms" => {
                self.superframe.duration_s = parse_f64(key, value)? * 1e-3
            }
            "superframe.n_slots" => self.superframe.n_slots = parse_u32(key, value)?,
            "superframe.r_slots" => self.superframe.r_slots = parse_u32(key, value)?,
            "superframe.n_devices" => self.superframe.n_devices = parse_u32(key, value)?,
            "channel.kappa" => self.kappa = parse_f64(key, value)?,
            "geometry.device_x_m" => self.geometry.device_m[0] = parse_f64(key, value)?,
            "geometry.device_y_m" => self.geometry.device_m[1] = parse_f64(key, value)?,
            "geometry.coordinator_x_m" => self.geometry.coordinator_m[0] = parse_f64(key, value)?,
            "geometry.coordinator_y_m" => self.geometry.coordinator_m[1] = parse_f64(key, value)?,
            "geometry.ref_per_d2c" => self.geometry.ref_per_d2c = parse_f64(key, value)?,
            "geometry.relay_power_dbm" => self.geometry.relay_power_dbm = parse_f64(key, value)?,
            "geometry.device_powers_dbm" => {
                self.geometry.device_powers_dbm = parse_f64_list(key, value)?
            }
            "sweep.per_steps" => self.sweep.per_steps = parse_u32(key, value)?,
            "sweep.alpha_beta" => self.sweep.alpha_beta = parse_pair_list(key, value)?,
            "sim.superframes" => self.sim.superframes = parse_u64(key, value)?,
            "sim.seed" => self.sim.seed = parse_u64(key, value)?,
            "sim.per_grid" => self.sim.per_grid = parse_f64_list(key, value)?,
            "sim.model_beacon_loss" => self.sim.model_beacon_loss = parse_bool(key, value)?,
            "placement.x_min_m" => self.placement.grid.x_min_m = parse_f64(key, value)?,
            "placement.x_max_m" => self.placement.grid.x_max_m = parse_f64(key, value)?,
            "placement.y_min_m" => self.placement.grid.y_min_m = parse_f64(key, value)?,
            "placement.y_max_m" => self.placement.grid.y_max_m = parse_f64(key, value)?,
            "placement.resolution_m" => {
                self.placement.grid.resolution_m = parse_f64(key, value)?
            }
            "placement.line_samples" => {
                self.placement.line_samples = parse_u32(key, value)? as usize
            }
            "placement.refine" => self.placement.refine = parse_bool(key, value)?,
            _ => bail!(
                "unknown key '{key}'; accepted keys: {}",
                ACCEPTED_KEYS.join(", ")
            ),
        }
        Ok(())
    }

    /// Cross-field checks beyond per-value syntax.
    pub fn validate(&self) -> Result<()> {
        self.transceiver
            .validate()
            .map_err(|e| anyhow!("transceiver: {e}"))?;
        self.frames.validate().map_err(|e| anyhow!("frames: {e}"))?;
        self.superframe
            .validate()
            .map_err(|e| anyhow!("superframe: {e}"))?;
        self.kappa_exponent()?;
        if self.sweep.per_steps < 2 {
            bail!("sweep.per_steps must be at least 2, got {}", self.sweep.per_steps);
        }
        if self.placement.line_samples < 3 {
            bail!(
                "placement.line_samples must be at least 3, got {}",
                self.placement.line_samples
            );
        }
        for &per in &self.sim.per_grid {
            if !(0.0..=1.0).contains(&per) {
                bail!("sim.per_grid entries must be probabilities, got {per}");
            }
        }
        for &(alpha, beta) in &self.sweep.alpha_beta {
            lldn_core::SpatialConfig::new(alpha, beta)
                .map_err(|e| anyhow!("sweep.alpha_beta: {e}"))?;
        }
        Ok(())
    }

    pub fn kappa_exponent(&self) -> Result<PathLossExponent> {
        PathLossExponent::new(self.kappa).map_err(|e| anyhow!("channel.kappa: {e}"))
    }

    pub fn energy_context(&self) -> Result<EnergyContext> {
        EnergyContext::new(&self.frames, &self.transceiver).map_err(|e| anyhow!("{e}"))
    }

    /// Placement geometry at one device power.
    pub fn geometry_for_power(&self, device_power_dbm: f64) -> Result<Geometry> {
        let geometry = Geometry {
            device_pos_m: self.geometry.device_m,
            coordinator_pos_m: self.geometry.coordinator_m,
            device_tx_power_dbm: device_power_dbm,
            relay_tx_power_dbm: self.geometry.relay_power_dbm,
            ref_per_d2c: self.geometry.ref_per_d2c,
            kappa: self.kappa_exponent()?,
            packet_length_bits: self.frames.data_bits(),
        };
        geometry.validate().map_err(|e| anyhow!("geometry: {e}"))?;
        Ok(geometry)
    }

    /// PER grid sampled uniformly over [0, 1] for the closed-form sweeps.
    pub fn per_grid(&self) -> Vec<f64> {
        let last = f64::from(self.sweep.per_steps - 1);
        (0..self.sweep.per_steps)
            .map(|i| f64::from(i) / last)
            .collect()
    }
}

/// Parses the key-value text format. Later lines override earlier ones.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected 'key = value', got '{line}'", lineno + 1))?;
        config
            .apply(key.trim(), value.trim())
            .with_context(|| format!("config line {}", lineno + 1))?;
    }
    config.validate()?;
    Ok(config)
}

/// Loads and parses a config file; `None` yields the defaults.
pub fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            parse_config(&text).with_context(|| format!("parsing config {}", path.display()))
        }
    }
}
