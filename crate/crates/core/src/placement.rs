//! Relay placement studies for the retransmission mode: 2-D grid sweeps of
//! the loss rate over relay positions, line sweeps along the
//! device-coordinator axis, and optimum-position search.
//!
//! All link qualities derive from one reference: the device-coordinator PER
//! at 0 dBm. Device and relay transmit with their own configurable powers;
//! the coordinator's acknowledgement leg is fixed at 0 dBm. Distances below
//! 0.1 m clamp to the 0.1 m value — the regime is physically meaningless and
//! the clamp keeps the field finite instead of chasing SNR to infinity.

use crate::analytic::{rm_plr, LinkMatrix};
use crate::channel::{derive_per, linear_from_dbm, PathLossExponent, ReferenceLink, TargetLink};
use crate::{check_prob, Error, Result};
use serde::Serialize;

/// Minimum distance entering the fading model, in meters.
const MIN_DISTANCE_M: f64 = 0.1;

/// Fixed positions and powers of a placement study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Geometry {
    pub device_pos_m: [f64; 2],
    pub coordinator_pos_m: [f64; 2],
    pub device_tx_power_dbm: f64,
    pub relay_tx_power_dbm: f64,
    /// Device-coordinator PER at 0 dBm device power.
    pub ref_per_d2c: f64,
    pub kappa: PathLossExponent,
    pub packet_length_bits: u32,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            device_pos_m: [0.0, 0.0],
            coordinator_pos_m: [0.0, 50.0],
            device_tx_power_dbm: 0.0,
            relay_tx_power_dbm: 0.0,
            ref_per_d2c: 0.1,
            kappa: PathLossExponent::default(),
            packet_length_bits: 88,
        }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        check_prob("ref_per_d2c", self.ref_per_d2c)?;
        if self.ref_per_d2c <= 0.0 || self.ref_per_d2c >= 1.0 {
            return Err(Error::OutOfRange {
                name: "ref_per_d2c",
                range: "(0, 1)",
                value: self.ref_per_d2c,
            });
        }
        if self.packet_length_bits == 0 {
            return Err(Error::ZeroCount {
                name: "packet_length_bits",
            });
        }
        for v in self
            .device_pos_m
            .iter()
            .chain(self.coordinator_pos_m.iter())
            .chain([self.device_tx_power_dbm, self.relay_tx_power_dbm].iter())
        {
            if !v.is_finite() {
                return Err(Error::InvalidGrid("non-finite geometry value".into()));
            }
        }
        if self.separation_m() == 0.0 {
            return Err(Error::InvalidGrid(
                "device and coordinator positions must be distinct".into(),
            ));
        }
        Ok(())
    }

    /// Device-coordinator distance.
    pub fn separation_m(&self) -> f64 {
        distance(self.device_pos_m, self.coordinator_pos_m)
    }

    fn reference_link(&self) -> Result<ReferenceLink> {
        ReferenceLink::new(
            self.ref_per_d2c,
            self.packet_length_bits,
            self.separation_m(),
            1.0,
        )
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn clamp_distance(d: f64) -> f64 {
    d.max(MIN_DISTANCE_M)
}

/// Loss rate of the retransmission mode for given device-relay and
/// relay-coordinator distances. Shared by the position-based and the exact
/// line-sweep entry points.
fn plr_for_distances(geometry: &Geometry, d_d2r_m: f64, d_r2c_m: f64) -> Result<f64> {
    let reference = geometry.reference_link()?;
    let bits = geometry.packet_length_bits;
    let kappa = geometry.kappa;
    let e_device = linear_from_dbm(geometry.device_tx_power_dbm);
    let e_relay = linear_from_dbm(geometry.relay_tx_power_dbm);
    let per_d2c = derive_per(
        &reference,
        &TargetLink::new(bits, geometry.separation_m(), e_device)?,
        kappa,
    )?;
    let per_d2r = derive_per(
        &reference,
        &TargetLink::new(bits, clamp_distance(d_d2r_m), e_device)?,
        kappa,
    )?;
    let per_r2c = derive_per(
        &reference,
        &TargetLink::new(bits, clamp_distance(d_r2c_m), e_relay)?,
        kappa,
    )?;
    Ok(rm_plr(per_d2c, per_d2r, per_r2c))
}

/// Full link matrix for a relay at `relay_pos_m`. The acknowledgement leg
/// (c2r) runs at the coordinator's 0 dBm over the relay-coordinator distance.
pub fn links_at(geometry: &Geometry, relay_pos_m: [f64; 2]) -> Result<LinkMatrix> {
    geometry.validate()?;
    let reference = geometry.reference_link()?;
    let bits = geometry.packet_length_bits;
    let kappa = geometry.kappa;
    let e_device = linear_from_dbm(geometry.device_tx_power_dbm);
    let e_relay = linear_from_dbm(geometry.relay_tx_power_dbm);
    let d_d2r = clamp_distance(distance(geometry.device_pos_m, relay_pos_m));
    let d_r2c = clamp_distance(distance(relay_pos_m, geometry.coordinator_pos_m));
    let per_d2c = derive_per(
        &reference,
        &TargetLink::new(bits, geometry.separation_m(), e_device)?,
        kappa,
    )?;
    let per_d2r = derive_per(&reference, &TargetLink::new(bits, d_d2r, e_device)?, kappa)?;
    let per_r2c = derive_per(&reference, &TargetLink::new(bits, d_r2c, e_relay)?, kappa)?;
    let per_c2r = derive_per(&reference, &TargetLink::new(bits, d_r2c, 1.0)?, kappa)?;
    LinkMatrix::rm(per_d2c, per_d2r, per_c2r, per_r2c)
}

/// Retransmission-mode loss rate with the relay at `relay_pos_m`.
pub fn plr_at(geometry: &Geometry, relay_pos_m: [f64; 2]) -> Result<f64> {
    geometry.validate()?;
    plr_for_distances(
        geometry,
        distance(geometry.device_pos_m, relay_pos_m),
        distance(relay_pos_m, geometry.coordinator_pos_m),
    )
}

/// Rectangular evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub x_min_m: f64,
    pub x_max_m: f64,
    pub y_min_m: f64,
    pub y_max_m: f64,
    pub resolution_m: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_min_m: -20.0,
            x_max_m: 20.0,
            y_min_m: -10.0,
            y_max_m: 60.0,
            resolution_m: 0.5,
        }
    }
}

impl GridSpec {
    fn axis_points(min: f64, max: f64, res: f64) -> usize {
        ((max - min) / res + 1e-9).floor() as usize + 1
    }

    pub fn nx(&self) -> usize {
        Self::axis_points(self.x_min_m, self.x_max_m, self.resolution_m)
    }

    pub fn ny(&self) -> usize {
        Self::axis_points(self.y_min_m, self.y_max_m, self.resolution_m)
    }

    pub fn validate(&self, geometry: &Geometry) -> Result<()> {
        if !self.resolution_m.is_finite() || self.resolution_m <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "resolution must be positive, got {}",
                self.resolution_m
            )));
        }
        if self.x_max_m < self.x_min_m || self.y_max_m < self.y_min_m {
            return Err(Error::InvalidGrid("empty grid extent".into()));
        }
        for pos in [geometry.device_pos_m, geometry.coordinator_pos_m] {
            if pos[0] < self.x_min_m
                || pos[0] > self.x_max_m
                || pos[1] < self.y_min_m
                || pos[1] > self.y_max_m
            {
                return Err(Error::InvalidGrid(format!(
                    "grid must cover device and coordinator, ({}, {}) is outside",
                    pos[0], pos[1]
                )));
            }
        }
        Ok(())
    }
}

/// Loss-rate field over a grid of relay positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlrField {
    pub spec: GridSpec,
    pub nx: usize,
    pub ny: usize,
    /// Row-major in y: `values[iy * nx + ix]`.
    pub values: Vec<f64>,
    /// Cell indices (ix, iy) of the smallest loss rate.
    pub argmin_cell: (usize, usize),
}

impl PlrField {
    pub fn position(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.spec.x_min_m + ix as f64 * self.spec.resolution_m,
            self.spec.y_min_m + iy as f64 * self.spec.resolution_m,
        ]
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn argmin_pos(&self) -> [f64; 2] {
        self.position(self.argmin_cell.0, self.argmin_cell.1)
    }

    pub fn min_value(&self) -> f64 {
        self.value(self.argmin_cell.0, self.argmin_cell.1)
    }
}

/// Evaluates the loss rate at every grid point and records the argmin.
pub fn grid_sweep(geometry: &Geometry, spec: &GridSpec) -> Result<PlrField> {
    geometry.validate()?;
    spec.validate(geometry)?;
    let (nx, ny) = (spec.nx(), spec.ny());
    let mut values = Vec::with_capacity(nx * ny);
    let mut argmin = (0usize, 0usize);
    let mut min_value = f64::INFINITY;
    for iy in 0..ny {
        for ix in 0..nx {
            let pos = [
                spec.x_min_m + ix as f64 * spec.resolution_m,
                spec.y_min_m + iy as f64 * spec.resolution_m,
            ];
            let plr = plr_for_distances(
                geometry,
                distance(geometry.device_pos_m, pos),
                distance(pos, geometry.coordinator_pos_m),
            )?;
            if plr < min_value {
                min_value = plr;
                argmin = (ix, iy);
            }
            values.push(plr);
        }
    }
    Ok(PlrField {
        spec: *spec,
        nx,
        ny,
        values,
        argmin_cell: argmin,
    })
}

/// Loss rate at equally spaced points on the device-coordinator segment.
///
/// Returns `(fraction, plr)` pairs, fraction 0 at the device. The two leg
/// distances are computed from mirrored integer fractions, so with equal
/// powers the series is exactly symmetric about 0.5.
pub fn line_sweep(geometry: &Geometry, samples: usize) -> Result<Vec<(f64, f64)>> {
    geometry.validate()?;
    if samples < 3 {
        return Err(Error::InvalidGrid(format!(
            "line sweep needs at least 3 samples, got {samples}"
        )));
    }
    let d = geometry.separation_m();
    let last = (samples - 1) as f64;
    (0..samples)
        .map(|i| {
            let fraction = i as f64 / last;
            let mirrored = (samples - 1 - i) as f64 / last;
            let plr = plr_for_distances(geometry, d * fraction, d * mirrored)?;
            Ok((fraction, plr))
        })
        .collect()
}

/// Grid argmin of the loss field, optionally refined by per-axis ternary
/// search within one grid cell down to 0.01 m.
pub fn find_optimum(geometry: &Geometry, spec: &GridSpec, refine: bool) -> Result<[f64; 2]> {
    let field = grid_sweep(geometry, spec)?;
    let mut best = field.argmin_pos();
    if !refine {
        return Ok(best);
    }
    // Errors cannot occur here once grid_sweep has evaluated the whole field;
    // an infinite fallback keeps the comparison total regardless.
    let eval = |pos: [f64; 2]| {
        plr_for_distances(
            geometry,
            distance(geometry.device_pos_m, pos),
            distance(pos, geometry.coordinator_pos_m),
        )
        .unwrap_or(f64::INFINITY)
    };
    let res = spec.resolution_m;
    for _ in 0..3 {
        best[0] = ternary_min(|x| eval([x, best[1]]), best[0] - res, best[0] + res);
        best[1] = ternary_min(|y| eval([best[0], y]), best[1] - res, best[1] + res);
    }
    Ok(best)
}

fn ternary_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > 0.005 {
        let third = (hi - lo) / 3.0;
        let m1 = lo + third;
        let m2 = hi - third;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}
