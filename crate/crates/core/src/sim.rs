//! Seeded Monte Carlo simulation of superframes.
//!
//! Every per-link transmission draws an independent Bernoulli failure; links
//! and superframes are mutually independent (no burstiness). The same device
//! transmission is drawn independently on the D2C and D2R links — two
//! receivers see independent multipath realizations.
//!
//! # Reproducibility
//!
//! Superframe `i` of a run draws from its own ChaCha8 substream keyed by
//! `(seed, i)`, and outcomes aggregate by integer-counter summation, so a
//! result is a pure function of `(scenario, n, seed)`: serial and parallel
//! execution produce identical output for any worker count. Mean energies are
//! derived from the activity counters at the end — they carry no accumulation
//! order dependence either.
//!
//! Beacon reception in SM/RM is not drawn: the per-superframe energy charges
//! the beacon listen unconditionally and a lost beacon would desynchronize
//! the device across superframes, which is out of scope. For ETM, the
//! forwarded-beacon legs can be drawn with [`Scenario::model_beacon_loss`];
//! this reports an extra beacon-loss estimate and is excluded from the
//! closed-form agreement contract.

use crate::analytic::LinkMatrix;
use crate::energy::{EnergyContext, FrameLengths, TransceiverParams};
use crate::schedule::{build_superframe, SuperframeConfig};
use crate::{Error, Mode, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// One simulation setup: mode, links, schedule, and energy parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mode: Mode,
    pub links: LinkMatrix,
    pub config: SuperframeConfig,
    pub lengths: FrameLengths,
    pub params: TransceiverParams,
    /// Draw the ETM forwarded-beacon legs (c2r, r2d) as well. Default off.
    pub model_beacon_loss: bool,
}

impl Scenario {
    pub fn new(mode: Mode, links: LinkMatrix) -> Result<Self> {
        let scenario = Self {
            mode,
            links,
            config: SuperframeConfig::default(),
            lengths: FrameLengths::default(),
            params: TransceiverParams::default(),
            model_beacon_loss: false,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        self.links.validate()?;
        self.params.validate()?;
        // A scenario only makes sense on a feasible schedule.
        build_superframe(&self.config, &self.lengths, &self.params)?;
        if self.model_beacon_loss && self.mode != Mode::Etm {
            return Err(Error::InvalidScenario(
                "beacon-loss modeling only applies to ETM".into(),
            ));
        }
        self.mode_links()?;
        Ok(())
    }

    fn mode_links(&self) -> Result<ModeLinks> {
        Ok(match self.mode {
            Mode::Sm => ModeLinks::Sm {
                d2c: self.links.require("d2c", Mode::Sm)?,
                c2d: self.links.require("c2d", Mode::Sm)?,
            },
            Mode::Rm => ModeLinks::Rm {
                d2c: self.links.require("d2c", Mode::Rm)?,
                d2r: self.links.require("d2r", Mode::Rm)?,
                c2r: self.links.require("c2r", Mode::Rm)?,
                r2c: self.links.require("r2c", Mode::Rm)?,
            },
            Mode::Etm => ModeLinks::Etm {
                d2r: self.links.require("d2r", Mode::Etm)?,
                r2c: self.links.require("r2c", Mode::Etm)?,
                beacon: if self.model_beacon_loss {
                    Some(EtmBeaconLinks {
                        per_c2r: self.links.require("c2r", Mode::Etm)?,
                        per_r2d: self.links.require("r2d", Mode::Etm)?,
                    })
                } else {
                    None
                },
            },
        })
    }
}

/// Forwarded-beacon legs for ETM beacon-loss modeling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtmBeaconLinks {
    pub per_c2r: f64,
    pub per_r2d: f64,
}

#[derive(Debug, Clone, Copy)]
enum ModeLinks {
    Sm { d2c: f64, c2d: f64 },
    Rm { d2c: f64, d2r: f64, c2r: f64, r2c: f64 },
    Etm { d2r: f64, r2c: f64, beacon: Option<EtmBeaconLinks> },
}

/// How a data packet reached (or failed to reach) the coordinator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delivery {
    /// Lost despite the retransmission opportunity.
    Lost,
    /// First transmission attempt succeeded.
    FirstAttempt,
    /// Delivered in the retransmission slot (SM: by the device, RM: by the
    /// relay).
    Retransmission,
    /// Delivered in the relay's coded forwarding slot (ETM).
    Forwarded,
}

/// Outcome of one superframe for a single device/relay pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperframeOutcome {
    pub delivery: Delivery,
    /// The retransmission slot was used (SM: by the device, RM: by the relay,
    /// ETM: always — the relay never skips the coded frame).
    pub retransmitted: bool,
    pub device_tx: u8,
    pub device_rx: u8,
    pub relay_tx: u8,
    pub relay_rx: u8,
    /// Whether the device obtained the forwarded beacon; only present when
    /// beacon loss is modeled.
    pub beacon_at_device: Option<bool>,
}

impl SuperframeOutcome {
    pub fn lost(&self) -> bool {
        self.delivery == Delivery::Lost
    }
}

/// ChaCha8 substream for superframe `index` of a run keyed by `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn fails<R: Rng>(per: f64, rng: &mut R) -> bool {
    rng.gen::<f64>() < per
}

/// One standard-mode superframe.
///
/// Draw order: data (d2c), group acknowledgement at the device (c2d), then a
/// second data draw when the device retransmits. The device retransmits when
/// the data was lost *or* it missed the acknowledgement — the latter triggers
/// an unnecessary retransmission if the data had arrived. It always listens
/// for beacon and acknowledgement (2 RX).
pub fn step_sm<R: Rng>(per_d2c: f64, per_c2d: f64, rng: &mut R) -> SuperframeOutcome {
    let data_ok = !fails(per_d2c, rng);
    let gack_ok = !fails(per_c2d, rng);
    let retransmit = !data_ok || !gack_ok;
    let mut device_tx = 1;
    let mut delivery = if data_ok {
        Delivery::FirstAttempt
    } else {
        Delivery::Lost
    };
    if retransmit {
        device_tx = 2;
        let retry_ok = !fails(per_d2c, rng);
        if !data_ok && retry_ok {
            delivery = Delivery::Retransmission;
        }
    }
    SuperframeOutcome {
        delivery,
        retransmitted: retransmit,
        device_tx,
        device_rx: 2,
        relay_tx: 0,
        relay_rx: 0,
        beacon_at_device: None,
    }
}

/// One retransmission-mode superframe.
///
/// Draw order: data at the coordinator (d2c), data overheard by the relay
/// (d2r), acknowledgement at the relay (c2r), then the relay's retransmission
/// (r2c) when it fires. The relay retransmits when it holds the data and the
/// acknowledgement reported a loss or never arrived. If the relay missed the
/// data while the coordinator already has it, the retransmission slot stays
/// silent, which is a no-op. The device does 1 TX + 1 RX (beacon); the relay
/// listens twice regardless of outcome.
pub fn step_rm<R: Rng>(
    per_d2c: f64,
    per_d2r: f64,
    per_c2r: f64,
    per_r2c: f64,
    rng: &mut R,
) -> SuperframeOutcome {
    let data_at_coord = !fails(per_d2c, rng);
    let data_at_relay = !fails(per_d2r, rng);
    let gack_at_relay = !fails(per_c2r, rng);
    let relay_fires = data_at_relay && (!data_at_coord || !gack_at_relay);
    let mut delivery = if data_at_coord {
        Delivery::FirstAttempt
    } else {
        Delivery::Lost
    };
    if relay_fires {
        let retry_ok = !fails(per_r2c, rng);
        if !data_at_coord && retry_ok {
            delivery = Delivery::Retransmission;
        }
    }
    SuperframeOutcome {
        delivery,
        retransmitted: relay_fires,
        device_tx: 1,
        device_rx: 1,
        relay_tx: u8::from(relay_fires),
        relay_rx: 2,
        beacon_at_device: None,
    }
}

/// One extended-topology superframe.
///
/// Draw order: data at the relay (d2r), then — when beacon loss is modeled —
/// beacon at the relay (c2r), then the coded transmission at the coordinator
/// (r2c), then the coded transmission at the device (r2d). The relay always
/// transmits the coded frame, XOR-ing whatever it holds (a zero frame stands
/// in for a missing constituent), so its activity set is constant. The
/// coordinator decodes the data exactly when the relay held it and the coded
/// frame arrived.
pub fn step_etm<R: Rng>(
    per_d2r: f64,
    per_r2c: f64,
    beacon: Option<EtmBeaconLinks>,
    rng: &mut R,
) -> SuperframeOutcome {
    let data_at_relay = !fails(per_d2r, rng);
    let beacon_at_relay = beacon.map(|legs| !fails(legs.per_c2r, rng));
    let coded_at_coord = !fails(per_r2c, rng);
    let beacon_at_device = beacon.map(|legs| {
        let coded_at_device = !fails(legs.per_r2d, rng);
        beacon_at_relay == Some(true) && coded_at_device
    });
    let delivery = if data_at_relay && coded_at_coord {
        Delivery::Forwarded
    } else {
        Delivery::Lost
    };
    SuperframeOutcome {
        delivery,
        retransmitted: true,
        device_tx: 1,
        device_rx: 1,
        relay_tx: 1,
        relay_rx: 2,
        beacon_at_device,
    }
}

impl ModeLinks {
    fn step<R: Rng>(&self, rng: &mut R) -> SuperframeOutcome {
        match *self {
            ModeLinks::Sm { d2c, c2d } => step_sm(d2c, c2d, rng),
            ModeLinks::Rm { d2c, d2r, c2r, r2c } => step_rm(d2c, d2r, c2r, r2c, rng),
            ModeLinks::Etm { d2r, r2c, beacon } => step_etm(d2r, r2c, beacon, rng),
        }
    }
}

/// Integer aggregate of superframe outcomes. Merging is order-independent
/// summation, which is what makes parallel runs bit-reproducible.
#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    retransmissions: u64,
    losses: u64,
    delivered_first: u64,
    delivered_retr: u64,
    delivered_forwarded: u64,
    beacon_losses: u64,
}

impl Tally {
    fn absorb(&mut self, outcome: &SuperframeOutcome) {
        self.retransmissions += u64::from(outcome.retransmitted);
        match outcome.delivery {
            Delivery::Lost => self.losses += 1,
            Delivery::FirstAttempt => self.delivered_first += 1,
            Delivery::Retransmission => self.delivered_retr += 1,
            Delivery::Forwarded => self.delivered_forwarded += 1,
        }
        if outcome.beacon_at_device == Some(false) {
            self.beacon_losses += 1;
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.retransmissions += other.retransmissions;
        self.losses += other.losses;
        self.delivered_first += other.delivered_first;
        self.delivered_retr += other.delivered_retr;
        self.delivered_forwarded += other.delivered_forwarded;
        self.beacon_losses += other.beacon_losses;
        self
    }
}

/// One bin of the delivered-packet latency histogram, in superframe units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyBin {
    pub latency_superframes: f64,
    pub count: u64,
}

/// Empirical counterparts of the closed-form metrics, with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub mode: Mode,
    pub n_superframes: u64,
    /// Fraction of superframes whose retransmission slot was used.
    pub empirical_retr_prob: f64,
    /// Binomial standard error of `empirical_retr_prob`.
    pub retr_prob_std_err: f64,
    /// Fraction of superframes whose data packet was lost.
    pub empirical_plr: f64,
    /// Binomial standard error of `empirical_plr`.
    pub plr_std_err: f64,
    pub mean_device_energy_j: f64,
    /// Standard error of the device energy mean; nonzero only where the
    /// activity set varies (SM).
    pub device_energy_std_err_j: f64,
    pub mean_relay_energy_j: Option<f64>,
    pub relay_energy_std_err_j: Option<f64>,
    /// Fraction of superframes in which the device missed the forwarded
    /// beacon; only present when beacon loss is modeled.
    pub empirical_beacon_loss: Option<f64>,
    /// Delivered-packet latencies as per-path worst-case bounds: end of the
    /// uplink phase for first attempts, end of the superframe (1.0) for
    /// retransmissions, and 1.5 superframes for forwarded deliveries.
    pub latency_histogram: Vec<LatencyBin>,
}

fn binomial_std_err(p_hat: f64, n: u64) -> f64 {
    (p_hat * (1.0 - p_hat) / n as f64).sqrt()
}

/// Runs `n` independent superframes and aggregates them.
///
/// Bit-for-bit reproducible for a given `(scenario, n, seed)`, independent of
/// the rayon worker count.
pub fn run(scenario: &Scenario, n: u64, seed: u64) -> Result<SimResult> {
    scenario.validate()?;
    if n == 0 {
        return Err(Error::InvalidScenario(
            "superframe count must be at least 1".into(),
        ));
    }
    let links = scenario.mode_links()?;
    let energies = EnergyContext::new(&scenario.lengths, &scenario.params)?;

    let tally = (0..n)
        .into_par_iter()
        .fold(Tally::default, |mut tally, index| {
            let mut rng = substream(seed, index);
            tally.absorb(&links.step(&mut rng));
            tally
        })
        .reduce(Tally::default, Tally::merge);

    let n_f = n as f64;
    let retr_frac = tally.retransmissions as f64 / n_f;
    let plr = tally.losses as f64 / n_f;
    let retr_std = binomial_std_err(retr_frac, n);

    // Energies are deterministic functions of the activity counters; the only
    // stochastic activity is the extra data transmission (device in SM, relay
    // in RM), whose count is the retransmission counter.
    let (device_energy, device_std, relay_energy, relay_std) = match scenario.mode {
        Mode::Sm => (
            energies.rx_beacon_j + energies.rx_gack_j + energies.tx_data_j
                + retr_frac * energies.tx_data_j,
            energies.tx_data_j * retr_std,
            None,
            None,
        ),
        Mode::Rm => (
            energies.rx_beacon_j + energies.tx_data_j,
            0.0,
            Some(energies.rx_data_j + energies.rx_gack_j + retr_frac * energies.tx_data_j),
            Some(energies.tx_data_j * retr_std),
        ),
        Mode::Etm => (
            energies.tx_data_j + energies.rx_coded_j,
            0.0,
            Some(energies.rx_beacon_j + energies.rx_data_j + energies.tx_data_j),
            Some(0.0),
        ),
    };

    let uplink_phase_end = f64::from(1 + scenario.config.n_devices)
        / f64::from(1 + scenario.config.n_slots);
    let mut latency_histogram = Vec::new();
    for (latency, count) in [
        (uplink_phase_end, tally.delivered_first),
        (1.0, tally.delivered_retr),
        (1.5, tally.delivered_forwarded),
    ] {
        if count > 0 {
            latency_histogram.push(LatencyBin {
                latency_superframes: latency,
                count,
            });
        }
    }

    Ok(SimResult {
        mode: scenario.mode,
        n_superframes: n,
        empirical_retr_prob: retr_frac,
        retr_prob_std_err: retr_std,
        empirical_plr: plr,
        plr_std_err: binomial_std_err(plr, n),
        mean_device_energy_j: device_energy,
        device_energy_std_err_j: device_std,
        mean_relay_energy_j: relay_energy,
        relay_energy_std_err_j: relay_std,
        empirical_beacon_loss: scenario
            .model_beacon_loss
            .then(|| tally.beacon_losses as f64 / n_f),
        latency_histogram,
    })
}
