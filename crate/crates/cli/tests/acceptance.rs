//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (visible with `--nocapture`). Tolerances are pinned here
//! and nowhere else.
//!
//! Run with:
//! `cargo test -p lldn-cli --test acceptance -- --nocapture --test-threads 1`

use lldn_core::analytic::{self, LinkMatrix};
use lldn_core::channel::{derive_per, PathLossExponent, ReferenceLink, TargetLink};
use lldn_core::energy::{EnergyContext, FrameLengths, TransceiverParams};
use lldn_core::placement::{self, Geometry, GridSpec};
use lldn_core::schedule::{
    build_superframe, worst_case_latency, xor_decode, xor_encode, Frame, SuperframeConfig,
};
use lldn_core::sim::{self, Scenario};
use lldn_core::{Error, Mode};
use rand::Rng;
use std::panic::AssertUnwindSafe;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

fn criterion(name: &str, body: impl FnOnce()) {
    let start = Instant::now();
    match std::panic::catch_unwind(AssertUnwindSafe(body)) {
        Ok(()) => println!("PASS {name} ({:.2?})", start.elapsed()),
        Err(cause) => {
            println!("FAIL {name}");
            std::panic::resume_unwind(cause);
        }
    }
}

fn default_energies() -> EnergyContext {
    EnergyContext::new(&FrameLengths::default(), &TransceiverParams::default()).unwrap()
}

/// Chained appendix-style re-evaluation, written in the plain algebraic form
/// (no log1p/expm1 rearrangement) as an independent route to the same value.
fn naive_derived_per(per1: f64, l: f64, distance_ratio: f64, kappa: f64) -> f64 {
    let ber1 = 1.0 - (1.0 - per1).powf(1.0 / l);
    let u = 1.0 - 2.0 * ber1;
    let snr1 = 2.0 * u * u / (1.0 - u * u);
    let snr2 = snr1 * distance_ratio.powf(-kappa);
    let ber2 = 0.5 * (1.0 - (snr2 / (2.0 + snr2)).sqrt());
    1.0 - (1.0 - ber2).powf(l)
}

#[test]
fn criterion_1_appendix_pipeline() {
    criterion("criterion 1: appendix PER derivation pipeline", || {
        let start = Instant::now();
        let kappa = PathLossExponent::default();

        // Identity round trip within 1e-9 relative.
        for per in [0.01, 0.1, 0.5, 0.9] {
            let reference = ReferenceLink::new(per, 88, 1.0, 1.0).unwrap();
            let target = TargetLink::new(88, 1.0, 1.0).unwrap();
            let back = derive_per(&reference, &target, kappa).unwrap();
            assert!(
                (back - per).abs() / per <= 1e-9,
                "identity round trip of {per} returned {back}"
            );
        }

        // Half-distance case: 0.01312 +- 1e-5.
        let reference = ReferenceLink::new(0.1, 88, 1.0, 1.0).unwrap();
        let target = TargetLink::new(88, 0.5, 1.0).unwrap();
        let derived = derive_per(&reference, &target, kappa).unwrap();
        assert!(
            (derived - 0.01312).abs() <= 1e-5,
            "half-distance PER {derived} not within 1e-5 of 0.01312"
        );

        // Against a 60-digit evaluation of the same chain, frozen here.
        let high_precision = 0.013117829171110396;
        assert!(
            (derived - high_precision).abs() / high_precision <= 1e-9,
            "derived {derived} vs high-precision {high_precision}"
        );

        // And against an in-test re-evaluation on an independent float path.
        let naive = naive_derived_per(0.1, 88.0, 0.5, 3.0);
        assert!(
            (derived - naive).abs() / naive <= 1e-9,
            "derived {derived} vs naive re-evaluation {naive}"
        );

        assert!(start.elapsed() < Duration::from_secs(1), "runtime budget");
    });
}

#[test]
fn criterion_2_closed_form_vs_monte_carlo() {
    criterion("criterion 2: closed forms vs Monte Carlo (5x5 grid, n=1e6)", || {
        let start = Instant::now();
        let energies = default_energies();
        let config = SuperframeConfig::default();
        let grid = [0.1, 0.3, 0.5, 0.7, 0.9];
        let n = 1_000_000u64;
        let n_f = n as f64;
        let mut ordinal = 0u64;
        for mode in Mode::ALL {
            for &a in &grid {
                for &b in &grid {
                    let links = match mode {
                        Mode::Sm => LinkMatrix::sm(a, b),
                        Mode::Rm => LinkMatrix::rm(a, b, b, b),
                        Mode::Etm => LinkMatrix::etm(a, b),
                    }
                    .unwrap();
                    let expected = analytic::metrics(mode, &links, &energies, &config).unwrap();
                    let scenario = Scenario::new(mode, links).unwrap();
                    let result = sim::run(&scenario, n, 7000 + ordinal).unwrap();
                    ordinal += 1;

                    let band =
                        |p: f64| 4.0 * (p * (1.0 - p) / n_f).sqrt();
                    assert!(
                        (result.empirical_retr_prob - expected.retr_prob).abs()
                            <= band(expected.retr_prob),
                        "{mode} retr at ({a}, {b}): {} vs {}",
                        result.empirical_retr_prob,
                        expected.retr_prob
                    );
                    assert!(
                        (result.empirical_plr - expected.plr).abs() <= band(expected.plr),
                        "{mode} plr at ({a}, {b}): {} vs {}",
                        result.empirical_plr,
                        expected.plr
                    );

                    // Energies are deterministic given activity counts: the
                    // closed forms evaluated at the empirical retransmission
                    // fraction must match to 1e-9 relative.
                    let retr = result.empirical_retr_prob;
                    let device_closed = match mode {
                        Mode::Sm => analytic::sm_device_energy(&energies, retr),
                        Mode::Rm => analytic::rm_device_energy(&energies),
                        Mode::Etm => analytic::etm_device_energy(&energies),
                    };
                    assert!(
                        (result.mean_device_energy_j - device_closed).abs()
                            <= 1e-9 * device_closed,
                        "{mode} device energy at ({a}, {b})"
                    );
                    let relay_closed = match mode {
                        Mode::Sm => None,
                        Mode::Rm => Some(analytic::rm_relay_energy(&energies, retr)),
                        Mode::Etm => Some(analytic::etm_relay_energy(&energies)),
                    };
                    if let Some(expected_relay) = relay_closed {
                        let actual = result.mean_relay_energy_j.unwrap();
                        assert!(
                            (actual - expected_relay).abs() <= 1e-9 * expected_relay,
                            "{mode} relay energy at ({a}, {b})"
                        );
                    }
                }
            }
        }
        assert!(start.elapsed() < Duration::from_secs(120), "runtime budget");
    });
}

#[test]
fn criterion_3_device_energy_savings() {
    criterion("criterion 3: RM device energy savings vs SM", || {
        let energies = default_energies();
        let config = SuperframeConfig::default();
        let rm_device = analytic::rm_device_energy(&energies);

        // At PER 0 the device saves at least 30%.
        let sm0 = analytic::sm_metrics(
            &LinkMatrix::sm_symmetric(0.0).unwrap(),
            &energies,
            &config,
        )
        .unwrap();
        let saving0 = 1.0 - rm_device / sm0.device_energy_j;
        assert!(saving0 >= 0.30, "saving at PER 0 is {saving0}");

        // Toward PER 1 the saving approaches 48% +- 3 points.
        let sm1 = analytic::sm_metrics(
            &LinkMatrix::sm_symmetric(1.0).unwrap(),
            &energies,
            &config,
        )
        .unwrap();
        let saving1 = 1.0 - rm_device / sm1.device_energy_j;
        assert!(
            (saving1 - 0.48).abs() <= 0.03,
            "saving toward PER 1 is {saving1}"
        );

        // The accounting knobs behind these numbers are documented.
        let readme = std::fs::read_to_string(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md"),
        )
        .expect("README.md at the workspace root");
        assert!(
            readme.contains("Energy accounting sensitivity"),
            "README lacks the energy accounting sensitivity note"
        );
    });
}

#[test]
fn criterion_4_plr_reduction() {
    criterion("criterion 4: relayed loss-rate reduction at heavy loss", || {
        // PER_D2C = 0.9, relay at the midpoint (alpha = beta = 0.5), kappa 3,
        // equal powers: relative reduction of PLR_RM vs PLR_SM = 49% +- 2.
        let kappa = PathLossExponent::default();
        let reference = ReferenceLink::new(0.9, 88, 1.0, 1.0).unwrap();
        let half = TargetLink::new(88, 0.5, 1.0).unwrap();
        let relay_leg = derive_per(&reference, &half, kappa).unwrap();
        let plr_rm = analytic::rm_plr(0.9, relay_leg, relay_leg);
        let plr_sm = analytic::sm_plr(0.9);
        let reduction = 1.0 - plr_rm / plr_sm;
        assert!(
            (reduction - 0.49).abs() <= 0.02,
            "reduction is {reduction} (plr_rm {plr_rm}, plr_sm {plr_sm})"
        );
    });
}

#[test]
fn criterion_5_placement_symmetry_and_power_shift() {
    criterion("criterion 5: placement symmetry and device-ward shift", || {
        let start = Instant::now();
        let spec = GridSpec::default();

        // Equal powers: line sweep symmetric about 0.5 to 1e-12.
        let geometry = Geometry::default();
        let series = placement::line_sweep(&geometry, 101).unwrap();
        for i in 0..series.len() {
            let j = series.len() - 1 - i;
            assert!(
                (series[i].1 - series[j].1).abs() <= 1e-12,
                "asymmetry at sample {i}"
            );
        }

        // Optimum at the midpoint within one grid resolution.
        let optimum = placement::find_optimum(&geometry, &spec, true).unwrap();
        assert!(
            (optimum[0] - 0.0).abs() <= spec.resolution_m
                && (optimum[1] - 25.0).abs() <= spec.resolution_m,
            "optimum at {optimum:?}"
        );

        // 0 / -3 / -6 dBm device powers: strictly device-ward optima.
        let mut previous_y = f64::INFINITY;
        for dbm in [0.0, -3.0, -6.0] {
            let geometry = Geometry {
                device_tx_power_dbm: dbm,
                ..Geometry::default()
            };
            let optimum = placement::find_optimum(&geometry, &spec, true).unwrap();
            assert!(
                optimum[1] < previous_y,
                "optimum y {} at {dbm} dBm is not closer to the device",
                optimum[1]
            );
            previous_y = optimum[1];
        }

        assert!(start.elapsed() < Duration::from_secs(30), "runtime budget");
    });
}

#[test]
fn criterion_6_schedule_feasibility() {
    criterion("criterion 6: schedule feasibility at 10 ms, infeasibility at 5 ms", || {
        let config = SuperframeConfig::default();
        let lengths = FrameLengths::default();
        let params = TransceiverParams::default();
        let superframe = build_superframe(&config, &lengths, &params).unwrap();
        assert_eq!(superframe.slots.len(), 18);

        let squeezed = SuperframeConfig {
            duration_s: 5e-3,
            ..config
        };
        let err = build_superframe(&squeezed, &lengths, &params).unwrap_err();
        assert!(
            matches!(err, Error::InfeasibleSchedule { .. }),
            "expected infeasibility, got {err}"
        );
    });
}

#[test]
fn criterion_7_xor_codec_round_trips() {
    criterion("criterion 7: XOR codec, 1000 randomized round trips", || {
        let mut rng = sim::substream(0xC0DEC, 0);
        for _ in 0..1000 {
            let beacon_payload: Vec<u8> = (0..14).map(|_| rng.gen()).collect();
            let data_payload: Vec<u8> = (0..11).map(|_| rng.gen()).collect();
            let beacon = Frame::beacon(beacon_payload.clone());
            let data = Frame::data(data_payload.clone(), 0);
            let coded = xor_encode(&beacon, &data).unwrap();
            assert_eq!(
                xor_decode(&coded, &beacon, 11).unwrap().payload,
                data_payload
            );
            assert_eq!(
                xor_decode(&coded, &data, 14).unwrap().payload,
                beacon_payload
            );
        }
    });
}

#[test]
fn criterion_8_latency_histograms() {
    criterion("criterion 8: worst-case latency 1.0 (SM/RM) and exactly 1.5 (ETM)", || {
        let n = 50_000;
        let config = SuperframeConfig::default();

        for (mode, links) in [
            (Mode::Sm, LinkMatrix::sm_symmetric(0.3).unwrap()),
            (Mode::Rm, LinkMatrix::rm(0.5, 0.2, 0.2, 0.2).unwrap()),
        ] {
            let scenario = Scenario::new(mode, links).unwrap();
            let result = sim::run(&scenario, n, 88).unwrap();
            let max = result
                .latency_histogram
                .iter()
                .map(|bin| bin.latency_superframes)
                .fold(0.0, f64::max);
            assert_eq!(max, 1.0, "{mode} worst case");
            assert_eq!(
                worst_case_latency(mode, &config),
                config.duration_s,
                "{mode} guarantee"
            );
        }

        let scenario = Scenario::new(Mode::Etm, LinkMatrix::etm(0.2, 0.2).unwrap()).unwrap();
        let result = sim::run(&scenario, n, 88).unwrap();
        assert_eq!(result.latency_histogram.len(), 1);
        assert_eq!(result.latency_histogram[0].latency_superframes, 1.5);
        assert_eq!(worst_case_latency(Mode::Etm, &config), 1.5 * config.duration_s);
    });
}

#[test]
fn criterion_9_byte_identical_simulate_output() {
    criterion("criterion 9: simulate output byte-identical across reruns and workers", || {
        let base = std::env::temp_dir().join(format!("lldn-acceptance-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&base);
        std::fs::create_dir_all(&base).unwrap();

        let run = |label: &str, threads: &str| -> PathBuf {
            let out = base.join(label);
            let status = std::process::Command::new(env!("CARGO_BIN_EXE_lldn"))
                .args([
                    "simulate",
                    "--out",
                    out.to_str().unwrap(),
                    "--superframes",
                    "50000",
                    "--seed",
                    "42",
                    "--threads",
                    threads,
                ])
                .status()
                .unwrap();
            assert!(status.success());
            out
        };

        let first = run("t1", "1");
        let second = run("t4", "4");
        let third = run("t1-again", "1");
        let reference = std::fs::read(first.join("simulate_results.json")).unwrap();
        assert!(!reference.is_empty());
        for out in [&second, &third] {
            assert_eq!(
                std::fs::read(out.join("simulate_results.json")).unwrap(),
                reference,
                "JSON differs for {}",
                out.display()
            );
        }
        let _ = std::fs::remove_dir_all(&base);
    });
}
