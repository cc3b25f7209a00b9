//! Closed-form per-superframe metrics for the three modes: retransmission
//! probability, device energy, relay energy, packet loss rate, and worst-case
//! latency.
//!
//! Packet errors in different links and superframes are independent. PER is
//! the single-transmission loss probability of a directed link; PLR is the
//! residual loss probability after the in-superframe retransmission attempt.
//!
//! Standard mode (device retransmits itself):
//! `P_retr = p_c2d + p_d2c - p_c2d p_d2c` — the device retransmits when its
//! data was lost or when it missed the group acknowledgement (even if the
//! data got through). `PLR = p_d2c^2`.
//!
//! Retransmission mode (relay retransmits): the relay must hold the data and
//! believe a retransmission is needed, so
//! `P_retr = (1 - p_d2r) (p_d2c + p_c2r - p_d2c p_c2r)` and
//! `PLR = p_d2c - p_d2c (1 - p_d2r)(1 - p_r2c)`.
//!
//! Extended topology mode (relay forwards, two-hop device): the relay always
//! transmits the coded frame — skipping it would stretch the device's
//! listening window to a timeout — and `PLR = p_d2r + p_r2c - p_d2r p_r2c`.

use crate::channel::{derive_per, PathLossExponent, ReferenceLink, TargetLink};
use crate::energy::EnergyContext;
use crate::schedule::{worst_case_latency, SuperframeConfig};
use crate::{check_prob, Error, Mode, Result};
use serde::Serialize;

/// Directed packet error rates between coordinator (C), device (D), and
/// relay (R). Entries a mode does not use may be absent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LinkMatrix {
    pub per_d2c: Option<f64>,
    pub per_c2d: Option<f64>,
    pub per_d2r: Option<f64>,
    pub per_r2d: Option<f64>,
    pub per_c2r: Option<f64>,
    pub per_r2c: Option<f64>,
}

impl LinkMatrix {
    /// Links for standard mode.
    pub fn sm(per_d2c: f64, per_c2d: f64) -> Result<Self> {
        check_prob("per_d2c", per_d2c)?;
        check_prob("per_c2d", per_c2d)?;
        Ok(Self {
            per_d2c: Some(per_d2c),
            per_c2d: Some(per_c2d),
            ..Self::default()
        })
    }

    /// Standard-mode links with equal error probability in both directions.
    /// The two directions still fail independently.
    pub fn sm_symmetric(per: f64) -> Result<Self> {
        Self::sm(per, per)
    }

    /// Links for retransmission mode.
    pub fn rm(per_d2c: f64, per_d2r: f64, per_c2r: f64, per_r2c: f64) -> Result<Self> {
        check_prob("per_d2c", per_d2c)?;
        check_prob("per_d2r", per_d2r)?;
        check_prob("per_c2r", per_c2r)?;
        check_prob("per_r2c", per_r2c)?;
        Ok(Self {
            per_d2c: Some(per_d2c),
            per_d2r: Some(per_d2r),
            per_c2r: Some(per_c2r),
            per_r2c: Some(per_r2c),
            ..Self::default()
        })
    }

    /// Links for extended topology mode. The forwarded-beacon legs (c2r, r2d)
    /// can be added with [`LinkMatrix::with_beacon_legs`] when beacon loss is
    /// simulated.
    pub fn etm(per_d2r: f64, per_r2c: f64) -> Result<Self> {
        check_prob("per_d2r", per_d2r)?;
        check_prob("per_r2c", per_r2c)?;
        Ok(Self {
            per_d2r: Some(per_d2r),
            per_r2c: Some(per_r2c),
            ..Self::default()
        })
    }

    pub fn with_beacon_legs(mut self, per_c2r: f64, per_r2d: f64) -> Result<Self> {
        check_prob("per_c2r", per_c2r)?;
        check_prob("per_r2d", per_r2d)?;
        self.per_c2r = Some(per_c2r);
        self.per_r2d = Some(per_r2d);
        Ok(self)
    }

    pub fn require(&self, link: &'static str, mode: Mode) -> Result<f64> {
        let value = match link {
            "d2c" => self.per_d2c,
            "c2d" => self.per_c2d,
            "d2r" => self.per_d2r,
            "r2d" => self.per_r2d,
            "c2r" => self.per_c2r,
            "r2c" => self.per_r2c,
            _ => None,
        };
        value.ok_or(Error::MissingLink { link, mode })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("per_d2c", self.per_d2c),
            ("per_c2d", self.per_c2d),
            ("per_d2r", self.per_d2r),
            ("per_r2d", self.per_r2d),
            ("per_c2r", self.per_c2r),
            ("per_r2c", self.per_r2c),
        ] {
            if let Some(v) = v {
                check_prob(name, v)?;
            }
        }
        Ok(())
    }
}

/// Closed-form per-superframe metrics of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeMetrics {
    pub mode: Mode,
    /// Probability that the retransmission slot is used.
    pub retr_prob: f64,
    /// Device energy per superframe, in joules.
    pub device_energy_j: f64,
    /// Relay energy per superframe, in joules; absent for standard mode.
    pub relay_energy_j: Option<f64>,
    /// Residual packet loss rate after the retransmission attempt.
    pub plr: f64,
    /// Guaranteed worst-case generation-to-coordinator delay, in seconds.
    pub worst_latency_s: f64,
}

/// `P_retr = p_c2d + p_d2c - p_c2d p_d2c`
pub fn sm_retransmit_prob(per_d2c: f64, per_c2d: f64) -> f64 {
    per_c2d + per_d2c - per_c2d * per_d2c
}

/// `PLR = p_d2c^2`
pub fn sm_plr(per_d2c: f64) -> f64 {
    per_d2c * per_d2c
}

/// `P_retr = (1 - p_d2r) (p_d2c + p_c2r - p_d2c p_c2r)`
pub fn rm_retransmit_prob(per_d2c: f64, per_d2r: f64, per_c2r: f64) -> f64 {
    (1.0 - per_d2r) * (per_d2c + per_c2r - per_d2c * per_c2r)
}

/// `PLR = p_d2c - p_d2c (1 - p_d2r)(1 - p_r2c)`
pub fn rm_plr(per_d2c: f64, per_d2r: f64, per_r2c: f64) -> f64 {
    per_d2c - per_d2c * (1.0 - per_d2r) * (1.0 - per_r2c)
}

/// `PLR = p_d2r + p_r2c - p_d2r p_r2c`
pub fn etm_plr(per_d2r: f64, per_r2c: f64) -> f64 {
    per_d2r + per_r2c - per_d2r * per_r2c
}

/// Device energy in standard mode: `(1 + P_retr) E_tx,data + E_rx,beacon +
/// E_rx,gack`.
pub fn sm_device_energy(energies: &EnergyContext, retr_prob: f64) -> f64 {
    (1.0 + retr_prob) * energies.tx_data_j + energies.rx_beacon_j + energies.rx_gack_j
}

/// Device energy in retransmission mode, constant: `E_rx,beacon + E_tx,data`.
pub fn rm_device_energy(energies: &EnergyContext) -> f64 {
    energies.rx_beacon_j + energies.tx_data_j
}

/// Relay energy in retransmission mode (single supported device):
/// `E_rx,data + E_rx,gack + P_retr E_tx,data`.
pub fn rm_relay_energy(energies: &EnergyContext, retr_prob: f64) -> f64 {
    energies.rx_data_j + energies.rx_gack_j + retr_prob * energies.tx_data_j
}

/// Device energy in extended topology mode, constant:
/// `E_tx,data + E_rx,coded`.
pub fn etm_device_energy(energies: &EnergyContext) -> f64 {
    energies.tx_data_j + energies.rx_coded_j
}

/// Relay energy in extended topology mode, constant. The coded transmission
/// is charged at the data frame length.
pub fn etm_relay_energy(energies: &EnergyContext) -> f64 {
    energies.rx_beacon_j + energies.rx_data_j + energies.tx_data_j
}

/// Standard-mode metrics. Requires d2c and c2d.
pub fn sm_metrics(
    links: &LinkMatrix,
    energies: &EnergyContext,
    config: &SuperframeConfig,
) -> Result<ModeMetrics> {
    let d2c = links.require("d2c", Mode::Sm)?;
    let c2d = links.require("c2d", Mode::Sm)?;
    let retr_prob = sm_retransmit_prob(d2c, c2d);
    Ok(ModeMetrics {
        mode: Mode::Sm,
        retr_prob,
        device_energy_j: sm_device_energy(energies, retr_prob),
        relay_energy_j: None,
        plr: sm_plr(d2c),
        worst_latency_s: worst_case_latency(Mode::Sm, config),
    })
}

/// Retransmission-mode metrics. Requires d2c, d2r, c2r, and r2c.
pub fn rm_metrics(
    links: &LinkMatrix,
    energies: &EnergyContext,
    config: &SuperframeConfig,
) -> Result<ModeMetrics> {
    let d2c = links.require("d2c", Mode::Rm)?;
    let d2r = links.require("d2r", Mode::Rm)?;
    let c2r = links.require("c2r", Mode::Rm)?;
    let r2c = links.require("r2c", Mode::Rm)?;
    let retr_prob = rm_retransmit_prob(d2c, d2r, c2r);
    Ok(ModeMetrics {
        mode: Mode::Rm,
        retr_prob,
        device_energy_j: rm_device_energy(energies),
        relay_energy_j: Some(rm_relay_energy(energies, retr_prob)),
        plr: rm_plr(d2c, d2r, r2c),
        worst_latency_s: worst_case_latency(Mode::Rm, config),
    })
}

/// Extended-topology metrics. Requires d2r and r2c.
///
/// The relay transmits the coded frame every superframe, so `retr_prob` is 1.
/// The forwarded-beacon leg does not enter the loss rate; beacon loss is a
/// simulation-only option.
pub fn etm_metrics(
    links: &LinkMatrix,
    energies: &EnergyContext,
    config: &SuperframeConfig,
) -> Result<ModeMetrics> {
    let d2r = links.require("d2r", Mode::Etm)?;
    let r2c = links.require("r2c", Mode::Etm)?;
    Ok(ModeMetrics {
        mode: Mode::Etm,
        retr_prob: 1.0,
        device_energy_j: etm_device_energy(energies),
        relay_energy_j: Some(etm_relay_energy(energies)),
        plr: etm_plr(d2r, r2c),
        worst_latency_s: worst_case_latency(Mode::Etm, config),
    })
}

/// Dispatches to the mode-specific metrics function.
pub fn metrics(
    mode: Mode,
    links: &LinkMatrix,
    energies: &EnergyContext,
    config: &SuperframeConfig,
) -> Result<ModeMetrics> {
    match mode {
        Mode::Sm => sm_metrics(links, energies, config),
        Mode::Rm => rm_metrics(links, energies, config),
        Mode::Etm => etm_metrics(links, energies, config),
    }
}

/// Relay distance fractions: `d_d2r = alpha * d_d2c` and
/// `d_r2c = beta * d_d2c`. Geometry requires `alpha + beta >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpatialConfig {
    pub alpha: f64,
    pub beta: f64,
}

impl SpatialConfig {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::OutOfRange {
                name: "alpha",
                range: "(0, inf)",
                value: alpha,
            });
        }
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::OutOfRange {
                name: "beta",
                range: "(0, inf)",
                value: beta,
            });
        }
        if alpha + beta < 1.0 - 1e-9 {
            return Err(Error::OutOfRange {
                name: "alpha + beta",
                range: "[1, inf)",
                value: alpha + beta,
            });
        }
        Ok(Self { alpha, beta })
    }
}

/// One row of a PER sweep: the swept reference PER, the derived relay-link
/// PERs (when applicable), and the resulting mode metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub per: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub per_d2r: Option<f64>,
    pub per_r2c: Option<f64>,
    pub metrics: ModeMetrics,
}

/// Standard-mode sweep: the swept PER applies to both d2c and c2d.
pub fn sweep_sm(
    per_grid: &[f64],
    energies: &EnergyContext,
    config: &SuperframeConfig,
) -> Result<Vec<SweepRow>> {
    per_grid
        .iter()
        .map(|&per| {
            let links = LinkMatrix::sm_symmetric(per)?;
            Ok(SweepRow {
                per,
                alpha: None,
                beta: None,
                per_d2r: None,
                per_r2c: None,
                metrics: sm_metrics(&links, energies, config)?,
            })
        })
        .collect()
}

/// Relay links for a retransmission-mode sweep point: the swept PER is the
/// device-coordinator PER; the relay links are derived from it through the
/// fading model at distances `alpha` and `beta` (equal transmit powers, same
/// packet length on every link).
///
/// The relay-coordinator legs share endpoints and power, so `per_c2r =
/// per_r2c`. A swept PER of 0 maps every link to 0; a swept PER of 1 is
/// capped at `1 - 1e-12` before derivation.
pub fn rm_links_from_per(
    per_d2c: f64,
    spatial: &SpatialConfig,
    kappa: PathLossExponent,
    packet_length_bits: u32,
) -> Result<LinkMatrix> {
    check_prob("per_d2c", per_d2c)?;
    if per_d2c == 0.0 {
        return LinkMatrix::rm(0.0, 0.0, 0.0, 0.0);
    }
    let capped = per_d2c.min(1.0 - 1e-12);
    let reference = ReferenceLink::new(capped, packet_length_bits, 1.0, 1.0)?;
    let d2r = derive_per(
        &reference,
        &TargetLink::new(packet_length_bits, spatial.alpha, 1.0)?,
        kappa,
    )?;
    let r2c = derive_per(
        &reference,
        &TargetLink::new(packet_length_bits, spatial.beta, 1.0)?,
        kappa,
    )?;
    LinkMatrix::rm(per_d2c, d2r, r2c, r2c)
}

/// Retransmission-mode sweep over a PER grid at one spatial configuration.
pub fn sweep_rm(
    per_grid: &[f64],
    spatial: &SpatialConfig,
    kappa: PathLossExponent,
    packet_length_bits: u32,
    energies: &EnergyContext,
    config: &SuperframeConfig,
) -> Result<Vec<SweepRow>> {
    per_grid
        .iter()
        .map(|&per| {
            let links = rm_links_from_per(per, spatial, kappa, packet_length_bits)?;
            Ok(SweepRow {
                per,
                alpha: Some(spatial.alpha),
                beta: Some(spatial.beta),
                per_d2r: links.per_d2r,
                per_r2c: links.per_r2c,
                metrics: rm_metrics(&links, energies, config)?,
            })
        })
        .collect()
}

/// Extended-topology sweep: the swept PER applies to both hops (d2r and r2c).
pub fn sweep_etm(
    per_grid: &[f64],
    energies: &EnergyContext,
    config: &SuperframeConfig,
) -> Result<Vec<SweepRow>> {
    per_grid
        .iter()
        .map(|&per| {
            let links = LinkMatrix::etm(per, per)?;
            Ok(SweepRow {
                per,
                alpha: None,
                beta: None,
                per_d2r: Some(per),
                per_r2c: Some(per),
                metrics: etm_metrics(&links, energies, config)?,
            })
        })
        .collect()
}
