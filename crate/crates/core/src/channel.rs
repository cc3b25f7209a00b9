//! Rayleigh-fading link scaling: maps a reference link's packet error rate to
//! any other link's packet error rate via distance and transmit-energy ratios.
//!
//! The chain assumes a flat Rayleigh fading channel with AWGN, independent bit
//! errors, no channel coding, and OQPSK with half-sine pulse shaping (bit-error
//! equivalent to QPSK):
//!
//! 1. reference PER to BER: `BER1 = 1 - (1 - PER1)^(1/l1)`
//! 2. BER to mean SNR: inverse of `BER = (1 - sqrt(SNR / (2 + SNR))) / 2`
//! 3. SNR scaling: `SNR2 = SNR1 * (E2 / E1) * (d1 / d2)^kappa`
//! 4. back through the QPSK curve and `PER2 = 1 - (1 - BER2)^l2`
//!
//! Only SNR *ratios* enter the result, so no absolute noise figure, antenna
//! gain, or symbol/bit energy constant is needed. Probabilities are `f64`
//! throughout; the near-0/near-1 regions go through `log1p`/`expm1` so that
//! short packets (88 bits) do not amplify rounding.

use crate::{check_positive, check_prob, Error, Result};
use serde::Serialize;

/// Link with a known (measured or assumed) packet error rate, used as the
/// anchor of every derivation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceLink {
    /// Packet error rate in [0, 1).
    pub per: f64,
    /// Packet length in bits.
    pub packet_length_bits: u32,
    /// Transmitter-receiver distance in meters.
    pub distance_m: f64,
    /// Transmit energy on a linear scale; 1.0 corresponds to 0 dBm.
    pub tx_energy: f64,
}

impl ReferenceLink {
    pub fn new(per: f64, packet_length_bits: u32, distance_m: f64, tx_energy: f64) -> Result<Self> {
        check_prob("reference per", per)?;
        if per >= 1.0 {
            return Err(Error::OutOfRange {
                name: "reference per",
                range: "[0, 1)",
                value: per,
            });
        }
        if packet_length_bits == 0 {
            return Err(Error::ZeroCount {
                name: "packet_length_bits",
            });
        }
        check_positive("distance_m", distance_m)?;
        check_positive("tx_energy", tx_energy)?;
        Ok(Self {
            per,
            packet_length_bits,
            distance_m,
            tx_energy,
        })
    }
}

/// Link whose packet error rate is to be derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetLink {
    /// Packet length in bits.
    pub packet_length_bits: u32,
    /// Transmitter-receiver distance in meters.
    pub distance_m: f64,
    /// Transmit energy on a linear scale; 1.0 corresponds to 0 dBm.
    pub tx_energy: f64,
}

impl TargetLink {
    pub fn new(packet_length_bits: u32, distance_m: f64, tx_energy: f64) -> Result<Self> {
        if packet_length_bits == 0 {
            return Err(Error::ZeroCount {
                name: "packet_length_bits",
            });
        }
        check_positive("distance_m", distance_m)?;
        check_positive("tx_energy", tx_energy)?;
        Ok(Self {
            packet_length_bits,
            distance_m,
            tx_energy,
        })
    }
}

/// Path loss exponent relating received SNR to distance, `SNR ~ E_t / d^kappa`.
///
/// 2 is the free-space lower bound; multipath environments are larger. The
/// default of 3 matches the parameter set used throughout the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathLossExponent(f64);

impl PathLossExponent {
    pub fn new(kappa: f64) -> Result<Self> {
        if kappa.is_finite() && kappa >= 2.0 {
            Ok(Self(kappa))
        } else {
            Err(Error::OutOfRange {
                name: "kappa",
                range: "[2, inf)",
                value: kappa,
            })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for PathLossExponent {
    fn default() -> Self {
        Self(3.0)
    }
}

/// Converts a transmit power in dBm to the linear scale used by the link
/// types (1.0 = 0 dBm).
pub fn linear_from_dbm(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Bit error rate of a packet with independent bit errors and no coding:
/// `BER = 1 - (1 - PER)^(1/l)`.
///
/// A PER of exactly 1 is rejected: any positive BER yields PER 1 only in the
/// limit, so the inverse is undefined there. Empirical PERs should be capped
/// at `1 - 1e-12` by the caller.
pub fn ber_from_per(per: f64, packet_length_bits: u32) -> Result<f64> {
    check_prob("per", per)?;
    if per >= 1.0 {
        return Err(Error::OutOfRange {
            name: "per",
            range: "[0, 1)",
            value: per,
        });
    }
    if packet_length_bits == 0 {
        return Err(Error::ZeroCount {
            name: "packet_length_bits",
        });
    }
    let ber = -f64::exp_m1(f64::ln_1p(-per) / f64::from(packet_length_bits));
    Ok(if ber == 0.0 { 0.0 } else { ber })
}

/// Packet error rate of `l` independent bits at a given bit error rate:
/// `PER = 1 - (1 - BER)^l`.
pub fn per_from_ber(ber: f64, packet_length_bits: u32) -> Result<f64> {
    check_prob("ber", ber)?;
    if packet_length_bits == 0 {
        return Err(Error::ZeroCount {
            name: "packet_length_bits",
        });
    }
    let per = -f64::exp_m1(f64::from(packet_length_bits) * f64::ln_1p(-ber));
    Ok(if per == 0.0 { 0.0 } else { per })
}

/// QPSK bit error probability in a flat Rayleigh fading channel with AWGN:
/// `BER = (1 - sqrt(SNR / (2 + SNR))) / 2`.
///
/// Strictly decreasing in SNR with range (0, 1/2]. Evaluated as
/// `1 / ((2 + SNR) (1 + sqrt(SNR / (2 + SNR))))`, which is the same quantity
/// without the `1 - sqrt(1 - x)` cancellation at high SNR.
pub fn ber_from_snr(snr: f64) -> Result<f64> {
    if !snr.is_finite() || snr < 0.0 {
        return Err(Error::OutOfRange {
            name: "snr",
            range: "[0, inf)",
            value: snr,
        });
    }
    Ok(1.0 / ((2.0 + snr) * (1.0 + (snr / (2.0 + snr)).sqrt())))
}

/// Mean SNR producing a given Rayleigh/QPSK bit error rate; exact inverse of
/// [`ber_from_snr`] on (0, 1/2).
///
/// `SNR = 2 (1 - 2 BER)^2 / (1 - (1 - 2 BER)^2)`, evaluated as
/// `(1 - 2 BER)^2 / (2 BER (1 - BER))` to stay accurate for small BER.
pub fn snr_from_ber(ber: f64) -> Result<f64> {
    if !ber.is_finite() || ber <= 0.0 || ber >= 0.5 {
        return Err(Error::OutOfRange {
            name: "ber",
            range: "(0, 0.5)",
            value: ber,
        });
    }
    let u = 1.0 - 2.0 * ber;
    Ok(u * u / (2.0 * ber * (1.0 - ber)))
}

/// Scales a known mean SNR to another link:
/// `SNR2 = SNR1 * (E_t2 / E_t1) * (d1 / d2)^kappa`.
pub fn scale_snr(
    snr_ref: f64,
    reference: &ReferenceLink,
    target: &TargetLink,
    kappa: PathLossExponent,
) -> f64 {
    snr_ref * (target.tx_energy / reference.tx_energy)
        * (reference.distance_m / target.distance_m).powf(kappa.get())
}

/// Derives the packet error rate of `target` from the reference link.
///
/// Composition `ber_from_per -> snr_from_ber -> scale_snr -> ber_from_snr ->
/// per_from_ber`. Monotone increasing in target distance and decreasing in
/// target transmit energy. Requires `reference.per` in (0, 1); a reference
/// without errors carries no SNR information.
pub fn derive_per(
    reference: &ReferenceLink,
    target: &TargetLink,
    kappa: PathLossExponent,
) -> Result<f64> {
    let ber_ref = ber_from_per(reference.per, reference.packet_length_bits)?;
    let snr_ref = snr_from_ber(ber_ref)?;
    let snr_target = scale_snr(snr_ref, reference, target, kappa);
    let ber_target = ber_from_snr(snr_target)?;
    per_from_ber(ber_target, target.packet_length_bits)
}

#[cfg(test)]
mod tests {
    // Frozen oracle constants keep every digit of the high-precision print.
    #![allow(clippy::excessive_precision)]

    use super::*;
    use proptest::prelude::*;

    // High-precision (60 decimal digit) evaluations of the conversion chain,
    // frozen as the independent oracle for this module.
    const BER_PER01_L88: f64 = 0.0011965621349727088;
    const BER_PER09_L88: f64 = 0.025826383008412139;
    const BER_SNR2: f64 = 0.14644660940672624;
    const SNR_BER_0146447: f64 = 1.9999911619075280;
    const SNR_BER_11967E3: f64 = 416.31625879783008;
    const SNR_PER01_L88: f64 = 416.36439844972791;
    pub(crate) const PER_HALF_DIST_FROM_01: f64 = 0.013117829171110396;
    pub(crate) const PER_HALF_DIST_FROM_09: f64 = 0.26291988235871332;

    fn assert_close(actual: f64, expected: f64, rel_tol: f64) {
        let denom = expected.abs().max(f64::MIN_POSITIVE);
        assert!(
            (actual - expected).abs() / denom <= rel_tol,
            "expected {expected}, got {actual} (rel err {})",
            (actual - expected).abs() / denom
        );
    }

    fn ref_link(per: f64) -> ReferenceLink {
        ReferenceLink::new(per, 88, 1.0, 1.0).unwrap()
    }

    fn target(distance_m: f64, tx_energy: f64) -> TargetLink {
        TargetLink::new(88, distance_m, tx_energy).unwrap()
    }

    #[test]
    fn ber_from_per_zero_is_zero() {
        assert_eq!(ber_from_per(0.0, 88).unwrap(), 0.0);
    }

    #[test]
    fn ber_from_per_matches_oracle() {
        assert_close(ber_from_per(0.1, 88).unwrap(), BER_PER01_L88, 1e-14);
        assert_close(ber_from_per(0.9, 88).unwrap(), BER_PER09_L88, 1e-14);
    }

    #[test]
    fn ber_from_per_rejects_bad_input() {
        assert!(ber_from_per(1.0, 88).is_err());
        assert!(ber_from_per(-0.1, 88).is_err());
        assert!(ber_from_per(1.1, 88).is_err());
        assert!(ber_from_per(f64::NAN, 88).is_err());
        assert!(ber_from_per(0.5, 0).is_err());
    }

    #[test]
    fn ber_from_snr_boundary_values() {
        assert_eq!(ber_from_snr(0.0).unwrap(), 0.5);
        assert!(ber_from_snr(1e12).unwrap() < 1e-6);
        assert_close(ber_from_snr(2.0).unwrap(), BER_SNR2, 1e-15);
        assert!(ber_from_snr(-1.0).is_err());
        assert!(ber_from_snr(f64::INFINITY).is_err());
    }

    #[test]
    fn ber_from_snr_is_decreasing() {
        let mut prev = ber_from_snr(0.0).unwrap();
        for exp in -6..=12 {
            let ber = ber_from_snr(10f64.powi(exp)).unwrap();
            assert!(ber < prev, "not decreasing at snr=1e{exp}");
            prev = ber;
        }
    }

    #[test]
    fn snr_from_ber_matches_oracle() {
        assert_close(snr_from_ber(0.146447).unwrap(), SNR_BER_0146447, 1e-13);
        assert_close(snr_from_ber(1.1967e-3).unwrap(), SNR_BER_11967E3, 1e-13);
        let chained = snr_from_ber(ber_from_per(0.1, 88).unwrap()).unwrap();
        assert_close(chained, SNR_PER01_L88, 1e-13);
    }

    #[test]
    fn snr_from_ber_rejects_outside_domain() {
        assert!(snr_from_ber(0.0).is_err());
        assert!(snr_from_ber(0.5).is_err());
        assert!(snr_from_ber(-0.1).is_err());
        assert!(snr_from_ber(0.7).is_err());
    }

    #[test]
    fn snr_ber_round_trip() {
        for snr in [0.1, 1.0, 10.0, 1000.0] {
            let back = snr_from_ber(ber_from_snr(snr).unwrap()).unwrap();
            assert_close(back, snr, 1e-9);
        }
    }

    #[test]
    fn scale_snr_identity_and_ratios() {
        let kappa = PathLossExponent::default();
        let reference = ref_link(0.1);
        assert_eq!(scale_snr(416.3, &reference, &target(1.0, 1.0), kappa), 416.3);
        assert_close(
            scale_snr(416.3, &reference, &target(0.5, 1.0), kappa),
            3330.4,
            1e-12,
        );
        assert_close(
            scale_snr(416.3, &reference, &target(1.0, 0.5), kappa),
            208.15,
            1e-12,
        );
    }

    #[test]
    fn derive_per_identity_round_trip() {
        let kappa = PathLossExponent::default();
        for per in [1e-6, 0.01, 0.1, 0.5, 0.9, 0.999] {
            let reference = ref_link(per);
            let back = derive_per(&reference, &target(1.0, 1.0), kappa).unwrap();
            assert_close(back, per, 1e-9);
        }
    }

    #[test]
    fn derive_per_matches_oracle_at_half_distance() {
        let kappa = PathLossExponent::default();
        let p = derive_per(&ref_link(0.1), &target(0.5, 1.0), kappa).unwrap();
        assert_close(p, PER_HALF_DIST_FROM_01, 1e-12);
        let p = derive_per(&ref_link(0.9), &target(0.5, 1.0), kappa).unwrap();
        assert_close(p, PER_HALF_DIST_FROM_09, 1e-12);
    }

    #[test]
    fn derive_per_rejects_uninformative_reference() {
        let kappa = PathLossExponent::default();
        let reference = ref_link(0.0);
        assert!(derive_per(&reference, &target(0.5, 1.0), kappa).is_err());
    }

    #[test]
    fn derive_per_monotone_on_log_grid() {
        let kappa = PathLossExponent::default();
        let reference = ref_link(0.1);
        let mut prev = 0.0;
        for i in 0..25 {
            let d = 10f64.powf(-1.0 + 2.0 * i as f64 / 24.0);
            let per = derive_per(&reference, &target(d, 1.0), kappa).unwrap();
            assert!(per > prev, "not increasing at d={d}");
            prev = per;
        }
        let mut prev = 1.0;
        for i in 0..25 {
            let e = 10f64.powf(-1.0 + 2.0 * i as f64 / 24.0);
            let per = derive_per(&reference, &target(1.0, e), kappa).unwrap();
            assert!(per < prev, "not decreasing at e={e}");
            prev = per;
        }
    }

    #[test]
    fn dbm_conversion() {
        assert_eq!(linear_from_dbm(0.0), 1.0);
        assert_close(linear_from_dbm(-3.0), 0.5011872336272722, 1e-15);
        assert_close(linear_from_dbm(10.0), 10.0, 1e-15);
    }

    #[test]
    fn path_loss_exponent_bounds() {
        assert!(PathLossExponent::new(1.9).is_err());
        assert!(PathLossExponent::new(f64::NAN).is_err());
        assert_eq!(PathLossExponent::new(2.0).unwrap().get(), 2.0);
        assert_eq!(PathLossExponent::default().get(), 3.0);
    }

    proptest! {
        #[test]
        fn inverse_pair_on_open_interval(ber in 1e-9..0.499_999f64) {
            let back = ber_from_snr(snr_from_ber(ber).unwrap()).unwrap();
            prop_assert!((back - ber).abs() / ber <= 1e-9);
        }

        #[test]
        fn derived_per_stays_in_range(
            per in 1e-9..0.999_999f64,
            bits in 1u32..2048,
            d_ratio in 0.01f64..100.0,
            e_ratio in 0.01f64..100.0,
        ) {
            // The reference BER must stay below 0.5 for the inversion to exist.
            prop_assume!(ber_from_per(per, bits).unwrap() < 0.5);
            let reference = ReferenceLink::new(per, bits, 1.0, 1.0).unwrap();
            let tgt = TargetLink::new(bits, d_ratio, e_ratio).unwrap();
            let derived = derive_per(&reference, &tgt, PathLossExponent::default()).unwrap();
            prop_assert!((0.0..=1.0).contains(&derived), "derived {derived}");
        }

        #[test]
        fn derived_per_ordered_by_distance(
            // Bounded away from the regime where the derived PER saturates to
            // 1.0 in f64 and strict ordering becomes unobservable.
            per in 1e-6..0.9f64,
            d_lo in 0.2f64..2.0,
            delta in 0.01f64..0.1,
        ) {
            let reference = ReferenceLink::new(per, 88, 1.0, 1.0).unwrap();
            let kappa = PathLossExponent::default();
            let near = derive_per(&reference, &TargetLink::new(88, d_lo, 1.0).unwrap(), kappa).unwrap();
            let far = derive_per(&reference, &TargetLink::new(88, d_lo + delta, 1.0).unwrap(), kappa).unwrap();
            prop_assert!(far > near);
        }
    }
}
