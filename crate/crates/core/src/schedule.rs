//! LLDN superframe timeline, group acknowledgement bitmap, and the XOR codec
//! used by the extended topology mode.
//!
//! A superframe is one beacon slot followed by `n_slots` equal-length slots:
//! uplink slots (one per device), the group acknowledgement slot, and the
//! retransmission slots. Retransmission slot `i` is statically paired with
//! uplink slot `i`; there is no dynamic slot contention, no management slots,
//! and no bidirectional slots.

use crate::energy::{frame_airtime, FrameLengths, TransceiverParams};
use crate::{Error, Mode, Result};
use serde::Serialize;

/// Superframe slot counts and duration.
///
/// `n_slots` counts everything except the beacon: uplink slots, the group
/// acknowledgement slot, and the retransmission slots, so
/// `n_slots = n_devices + 1 + r_slots`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuperframeConfig {
    /// Superframe duration in seconds.
    pub duration_s: f64,
    /// Slot count excluding the beacon slot.
    pub n_slots: u32,
    /// Retransmission slot count.
    pub r_slots: u32,
    /// Device (uplink slot) count.
    pub n_devices: u32,
}

impl Default for SuperframeConfig {
    fn default() -> Self {
        Self {
            duration_s: 10e-3,
            n_slots: 17,
            r_slots: 8,
            n_devices: 8,
        }
    }
}

impl SuperframeConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.duration_s.is_finite() || self.duration_s <= 0.0 {
            return Err(Error::InvalidSuperframe(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if self.n_devices == 0 {
            return Err(Error::InvalidSuperframe("need at least one device".into()));
        }
        if self.n_slots != self.n_devices + 1 + self.r_slots {
            return Err(Error::InvalidSuperframe(format!(
                "n_slots must equal n_devices + 1 + r_slots ({} + 1 + {} = {}), got {}",
                self.n_devices,
                self.r_slots,
                self.n_devices + 1 + self.r_slots,
                self.n_slots
            )));
        }
        if self.r_slots > self.n_devices {
            return Err(Error::InvalidSuperframe(format!(
                "r_slots ({}) must not exceed n_devices ({})",
                self.r_slots, self.n_devices
            )));
        }
        Ok(())
    }

    /// Uniform slot length: `duration / (1 + n_slots)`.
    pub fn slot_length_s(&self) -> f64 {
        self.duration_s / f64::from(1 + self.n_slots)
    }
}

/// What a slot is scheduled for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotKind {
    Beacon,
    Uplink,
    Gack,
    Retransmission,
}

/// Which node owns a slot (transmits in it, or is served by it).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Owner {
    Coordinator,
    /// Device index, 0-based. A retransmission slot is owned by the device it
    /// is paired with.
    Device(u16),
    Relay,
}

/// One slot of the superframe timeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Slot {
    pub index: u32,
    pub kind: SlotKind,
    pub owner: Owner,
    pub start_s: f64,
    pub length_s: f64,
}

/// A fully laid out superframe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Superframe {
    pub config: SuperframeConfig,
    pub slot_length_s: f64,
    pub slots: Vec<Slot>,
}

/// Builds the slot timeline and checks that every frame fits its slot.
///
/// All `1 + n_slots` slots share the same length. Transceiver start-up is
/// scheduled to complete before the slot boundary, so feasibility is checked
/// on airtime alone.
pub fn build_superframe(
    config: &SuperframeConfig,
    lengths: &FrameLengths,
    params: &TransceiverParams,
) -> Result<Superframe> {
    config.validate()?;
    lengths.validate()?;
    let slot_len = config.slot_length_s();

    for (frame, bytes) in [
        ("beacon", lengths.beacon_bytes),
        ("data", lengths.data_bytes),
        ("gack", lengths.gack_bytes),
        ("coded", lengths.coded_bytes()),
    ] {
        let airtime = frame_airtime(bytes, params)?;
        if airtime > slot_len {
            return Err(Error::InfeasibleSchedule {
                frame,
                airtime_us: airtime * 1e6,
                slot_us: slot_len * 1e6,
            });
        }
    }

    let total = 1 + config.n_slots;
    let mut slots = Vec::with_capacity(total as usize);
    for index in 0..total {
        let (kind, owner) = if index == 0 {
            (SlotKind::Beacon, Owner::Coordinator)
        } else if index <= config.n_devices {
            (SlotKind::Uplink, Owner::Device((index - 1) as u16))
        } else if index == config.n_devices + 1 {
            (SlotKind::Gack, Owner::Coordinator)
        } else {
            let paired = index - config.n_devices - 2;
            (SlotKind::Retransmission, Owner::Device(paired as u16))
        };
        slots.push(Slot {
            index,
            kind,
            owner,
            start_s: f64::from(index) * slot_len,
            length_s: slot_len,
        });
    }

    Ok(Superframe {
        config: *config,
        slot_length_s: slot_len,
        slots,
    })
}

/// Group acknowledgement bitmap: one bit per uplink slot, set when the
/// coordinator received that slot's data frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GackBitmap {
    bits: Vec<bool>,
}

impl GackBitmap {
    /// All-zero bitmap for `n_devices` uplink slots.
    pub fn new(n_devices: u32) -> Self {
        Self {
            bits: vec![false; n_devices as usize],
        }
    }

    /// Builds a bitmap directly from per-slot reception results.
    pub fn from_slot_results(received: &[bool]) -> Self {
        Self {
            bits: received.to_vec(),
        }
    }

    pub fn width(&self) -> u32 {
        self.bits.len() as u32
    }

    pub fn set(&mut self, device: u16, received: bool) -> Result<()> {
        let idx = usize::from(device);
        if idx >= self.bits.len() {
            return Err(Error::UnknownDevice {
                device,
                width: self.width(),
            });
        }
        self.bits[idx] = received;
        Ok(())
    }

    pub fn all_acked(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }
}

/// Acknowledgement bit for one device.
pub fn gack_bit(bitmap: &GackBitmap, device: u16) -> Result<bool> {
    bitmap
        .bits
        .get(usize::from(device))
        .copied()
        .ok_or(Error::UnknownDevice {
            device,
            width: bitmap.width(),
        })
}

/// Frame kind; payload layouts are opaque byte strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Beacon,
    Data,
    Gack,
    Coded,
}

impl FrameKind {
    fn name(self) -> &'static str {
        match self {
            FrameKind::Beacon => "beacon",
            FrameKind::Data => "data",
            FrameKind::Gack => "gack",
            FrameKind::Coded => "coded",
        }
    }
}

/// A frame with an opaque payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Frame {
    pub kind: FrameKind,
    pub payload: Vec<u8>,
    pub source: Owner,
}

impl Frame {
    pub fn beacon(payload: Vec<u8>) -> Self {
        Self {
            kind: FrameKind::Beacon,
            payload,
            source: Owner::Coordinator,
        }
    }

    pub fn data(payload: Vec<u8>, device: u16) -> Self {
        Self {
            kind: FrameKind::Data,
            payload,
            source: Owner::Device(device),
        }
    }

    pub fn gack(payload: Vec<u8>) -> Self {
        Self {
            kind: FrameKind::Gack,
            payload,
            source: Owner::Coordinator,
        }
    }

    pub fn length_bytes(&self) -> u32 {
        self.payload.len() as u32
    }

    /// Checks the payload length against the configured length for this kind.
    pub fn check_length(&self, lengths: &FrameLengths) -> Result<()> {
        let expected = match self.kind {
            FrameKind::Beacon => lengths.beacon_bytes,
            FrameKind::Data => lengths.data_bytes,
            FrameKind::Gack => lengths.gack_bytes,
            FrameKind::Coded => lengths.coded_bytes(),
        };
        if self.length_bytes() != expected {
            return Err(Error::FrameLength(format!(
                "{} frame is {} bytes, expected {}",
                self.kind.name(),
                self.length_bytes(),
                expected
            )));
        }
        Ok(())
    }
}

/// XOR-combines a beacon and a data frame into one coded frame.
///
/// The coded frame is as long as the longer constituent; the shorter payload
/// is zero-padded before XOR-ing. Both receivers recover the constituent they
/// do not know by XOR-ing with the one they do.
pub fn xor_encode(beacon: &Frame, data: &Frame) -> Result<Frame> {
    if beacon.kind != FrameKind::Beacon {
        return Err(Error::WrongFrameKind {
            expected: "beacon",
            actual: beacon.kind.name(),
        });
    }
    if data.kind != FrameKind::Data {
        return Err(Error::WrongFrameKind {
            expected: "data",
            actual: data.kind.name(),
        });
    }
    let len = beacon.payload.len().max(data.payload.len());
    let payload = (0..len)
        .map(|i| {
            beacon.payload.get(i).copied().unwrap_or(0) ^ data.payload.get(i).copied().unwrap_or(0)
        })
        .collect();
    Ok(Frame {
        kind: FrameKind::Coded,
        payload,
        source: Owner::Relay,
    })
}

/// Recovers the other constituent of a coded frame.
///
/// `known` is the constituent the receiver already holds (the coordinator
/// knows the beacon it sent; the device knows the data it transmitted). The
/// result is truncated to `other_length_bytes`, the receiver's configured
/// length for the missing constituent. The reconstructed frame carries
/// [`Owner::Relay`] as source, since it arrived in the relay's coded
/// transmission.
pub fn xor_decode(coded: &Frame, known: &Frame, other_length_bytes: u32) -> Result<Frame> {
    if coded.kind != FrameKind::Coded {
        return Err(Error::WrongFrameKind {
            expected: "coded",
            actual: coded.kind.name(),
        });
    }
    let other_kind = match known.kind {
        FrameKind::Beacon => FrameKind::Data,
        FrameKind::Data => FrameKind::Beacon,
        other => {
            return Err(Error::WrongFrameKind {
                expected: "beacon or data",
                actual: other.name(),
            })
        }
    };
    if known.payload.len() > coded.payload.len() {
        return Err(Error::FrameLength(format!(
            "known constituent is {} bytes but the coded frame only {}",
            known.payload.len(),
            coded.payload.len()
        )));
    }
    if other_length_bytes as usize > coded.payload.len() {
        return Err(Error::FrameLength(format!(
            "requested {} bytes from a {}-byte coded frame",
            other_length_bytes,
            coded.payload.len()
        )));
    }
    let payload = (0..other_length_bytes as usize)
        .map(|i| coded.payload[i] ^ known.payload.get(i).copied().unwrap_or(0))
        .collect();
    Ok(Frame {
        kind: other_kind,
        payload,
        source: Owner::Relay,
    })
}

/// Guaranteed worst-case delay between data generation and availability at
/// the coordinator, in seconds.
///
/// One superframe for SM and RM. The extended topology adds the relay
/// forwarding hop, stretching the guarantee to one and a half superframes.
pub fn worst_case_latency(mode: Mode, config: &SuperframeConfig) -> f64 {
    match mode {
        Mode::Sm | Mode::Rm => config.duration_s,
        Mode::Etm => 1.5 * config.duration_s,
    }
}
