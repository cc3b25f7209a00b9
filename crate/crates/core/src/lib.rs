//! Analytics and simulation for LLDN-mode TDMA data collection with
//! cooperative relays.
//!
//! The crate models a star network of battery powered devices reporting to a
//! mains powered coordinator in short TDMA superframes (10 ms by default),
//! and compares three ways of using the in-superframe retransmission slots:
//!
//! * [`Mode::Sm`] — standard mode: a device retransmits its own lost frame in
//!   its paired retransmission slot.
//! * [`Mode::Rm`] — retransmission mode: a mains powered relay overhears the
//!   device's frame and performs the retransmission instead, so the device
//!   never listens for the group acknowledgement.
//! * [`Mode::Etm`] — extended topology mode: a relay forwards a two-hop
//!   device's data to the coordinator and the beacon to the device in a
//!   single XOR-coded transmission.
//!
//! Per-mode retransmission probability, per-superframe energy, packet loss
//! rate, and worst-case latency come in two independent flavors: closed forms
//! in [`analytic`] and a seeded Monte Carlo counterpart in [`sim`] that must
//! converge to them. [`channel`] maps a reference link's packet error rate to
//! arbitrary distances and transmit powers under flat Rayleigh fading, which
//! [`placement`] uses to sweep and optimize relay positions.

pub mod analytic;
pub mod channel;
pub mod energy;
pub mod placement;
pub mod schedule;
pub mod sim;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use analytic::{etm_metrics, rm_metrics, sm_metrics, LinkMatrix, ModeMetrics, SpatialConfig};
pub use channel::{
    ber_from_per, ber_from_snr, derive_per, linear_from_dbm, per_from_ber, scale_snr,
    snr_from_ber, PathLossExponent, ReferenceLink, TargetLink,
};
pub use energy::{activity_energy, frame_airtime, ActivityKind, EnergyContext, FrameLengths, TransceiverParams};
pub use placement::{find_optimum, grid_sweep, line_sweep, plr_at, Geometry, GridSpec, PlrField};
pub use schedule::{
    build_superframe, gack_bit, worst_case_latency, xor_decode, xor_encode, Frame, FrameKind,
    GackBitmap, Owner, Slot, SlotKind, Superframe, SuperframeConfig,
};
pub use sim::{run, Scenario, SimResult};

/// Operating mode of a device (and its relay, if any) within the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Standard mode: the device performs its own retransmissions.
    Sm,
    /// Retransmission mode: a relay retransmits on behalf of the device.
    Rm,
    /// Extended topology mode: a relay forwards data for a two-hop device.
    Etm,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Sm, Mode::Rm, Mode::Etm];
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Sm => "SM",
            Mode::Rm => "RM",
            Mode::Etm => "ETM",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sm" => Ok(Mode::Sm),
            "rm" => Ok(Mode::Rm),
            "etm" => Ok(Mode::Etm),
            _ => Err(Error::UnknownMode(s.to_string())),
        }
    }
}

/// Errors shared by all modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be in {range}, got {value}")]
    OutOfRange {
        name: &'static str,
        range: &'static str,
        value: f64,
    },
    #[error("{name} must be at least 1")]
    ZeroCount { name: &'static str },
    #[error("superframe config invalid: {0}")]
    InvalidSuperframe(String),
    #[error("infeasible schedule: {frame} frame airtime {airtime_us:.1} us exceeds slot length {slot_us:.1} us")]
    InfeasibleSchedule {
        frame: &'static str,
        airtime_us: f64,
        slot_us: f64,
    },
    #[error("unknown device id {device}: {width} uplink slots configured")]
    UnknownDevice { device: u16, width: u32 },
    #[error("expected {expected} frame, got {actual}")]
    WrongFrameKind {
        expected: &'static str,
        actual: &'static str,
    },
    #[error("frame length mismatch: {0}")]
    FrameLength(String),
    #[error("link {link} is required for {mode} but missing")]
    MissingLink { link: &'static str, mode: Mode },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("unknown mode '{0}' (expected sm, rm or etm)")]
    UnknownMode(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_prob(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            name,
            range: "[0, 1]",
            value,
        })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            name,
            range: "(0, inf)",
            value,
        })
    }
}
