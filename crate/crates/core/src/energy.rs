//! Transceiver activity energy accounting.
//!
//! Converts transmit/receive activities of a given frame length into joules
//! using a measured parameter set (CC2520-class transceiver at 3 V, 0 dBm,
//! 250 kbps by default). Each activity is charged one start-up phase plus the
//! active current over the frame airtime; an optional receive guard window
//! extends listening. Sleep and MCU currents are out of scope — only
//! transceiver activity is counted.

use crate::{check_positive, Error, Result};
use serde::{Deserialize, Serialize};

/// Transceiver currents and timing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransceiverParams {
    /// Transmit current in amperes.
    pub tx_current_a: f64,
    /// Receive current in amperes.
    pub rx_current_a: f64,
    /// Start-up (PLL lock) current in amperes.
    pub startup_current_a: f64,
    /// Start-up duration in seconds.
    pub startup_time_s: f64,
    /// Supply voltage in volts.
    pub supply_voltage_v: f64,
    /// PHY data rate in bits per second.
    pub data_rate_bps: f64,
    /// Extra listening window added to every reception, in seconds.
    /// Zero by default: receive duration equals frame airtime.
    pub rx_guard_s: f64,
}

impl Default for TransceiverParams {
    fn default() -> Self {
        Self {
            tx_current_a: 25.8e-3,
            rx_current_a: 22.3e-3,
            startup_current_a: 7.4e-3,
            startup_time_s: 192e-6,
            supply_voltage_v: 3.0,
            data_rate_bps: 250e3,
            rx_guard_s: 0.0,
        }
    }
}

impl TransceiverParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("tx_current_a", self.tx_current_a)?;
        check_positive("rx_current_a", self.rx_current_a)?;
        check_positive("startup_current_a", self.startup_current_a)?;
        check_positive("startup_time_s", self.startup_time_s)?;
        check_positive("supply_voltage_v", self.supply_voltage_v)?;
        check_positive("data_rate_bps", self.data_rate_bps)?;
        if !self.rx_guard_s.is_finite() || self.rx_guard_s < 0.0 {
            return Err(Error::OutOfRange {
                name: "rx_guard_s",
                range: "[0, inf)",
                value: self.rx_guard_s,
            });
        }
        Ok(())
    }
}

/// Frame lengths in bytes, including all protocol overhead.
///
/// The XOR-coded frame pads the shorter constituent with zeros, so its length
/// is `max(beacon, data)` and is not an independent parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLengths {
    pub beacon_bytes: u32,
    pub data_bytes: u32,
    pub gack_bytes: u32,
}

impl Default for FrameLengths {
    fn default() -> Self {
        Self {
            beacon_bytes: 14,
            data_bytes: 11,
            gack_bytes: 12,
        }
    }
}

impl FrameLengths {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beacon_bytes", self.beacon_bytes),
            ("data_bytes", self.data_bytes),
            ("gack_bytes", self.gack_bytes),
        ] {
            if v == 0 {
                return Err(Error::ZeroCount { name });
            }
        }
        Ok(())
    }

    /// Length of the XOR-coded frame: `max(beacon, data)`.
    pub fn coded_bytes(&self) -> u32 {
        self.beacon_bytes.max(self.data_bytes)
    }

    /// Data packet length in bits, the reference length for link derivations.
    pub fn data_bits(&self) -> u32 {
        8 * self.data_bytes
    }
}

/// Whether the transceiver transmits or receives during an activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivityKind {
    Tx,
    Rx,
}

/// On-air duration of a frame: `8 * length / data_rate`.
pub fn frame_airtime(length_bytes: u32, params: &TransceiverParams) -> Result<f64> {
    if length_bytes == 0 {
        return Err(Error::ZeroCount {
            name: "length_bytes",
        });
    }
    check_positive("data_rate_bps", params.data_rate_bps)?;
    Ok(f64::from(8 * length_bytes) / params.data_rate_bps)
}

/// Energy of one transmit or receive activity:
/// `V * (I_active * duration + I_startup * t_startup)`,
/// with one start-up phase per activity and the guard window added to
/// receive durations.
pub fn activity_energy(
    kind: ActivityKind,
    length_bytes: u32,
    params: &TransceiverParams,
) -> Result<f64> {
    params.validate()?;
    let airtime = frame_airtime(length_bytes, params)?;
    let (current, duration) = match kind {
        ActivityKind::Tx => (params.tx_current_a, airtime),
        ActivityKind::Rx => (params.rx_current_a, airtime + params.rx_guard_s),
    };
    Ok(params.supply_voltage_v
        * (current * duration + params.startup_current_a * params.startup_time_s))
}

/// Per-activity energies for one frame-length configuration, precomputed for
/// the analytic formulas and the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyContext {
    /// Transmitting one data frame, in joules.
    pub tx_data_j: f64,
    /// Receiving one beacon, in joules.
    pub rx_beacon_j: f64,
    /// Receiving one group acknowledgement, in joules.
    pub rx_gack_j: f64,
    /// Receiving one data frame, in joules.
    pub rx_data_j: f64,
    /// Receiving one XOR-coded frame, in joules.
    pub rx_coded_j: f64,
}

impl EnergyContext {
    pub fn new(lengths: &FrameLengths, params: &TransceiverParams) -> Result<Self> {
        lengths.validate()?;
        Ok(Self {
            tx_data_j: activity_energy(ActivityKind::Tx, lengths.data_bytes, params)?,
            rx_beacon_j: activity_energy(ActivityKind::Rx, lengths.beacon_bytes, params)?,
            rx_gack_j: activity_energy(ActivityKind::Rx, lengths.gack_bytes, params)?,
            rx_data_j: activity_energy(ActivityKind::Rx, lengths.data_bytes, params)?,
            rx_coded_j: activity_energy(ActivityKind::Rx, lengths.coded_bytes(), params)?,
        })
    }
}
