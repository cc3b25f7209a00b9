//! Subcommand implementations. Every output file has a fixed header and cell
//! format; all randomness flows from the config seed, so reruns are
//! byte-identical.

use crate::config::ExperimentConfig;
use crate::csvfmt::{fixed1, fixed2, sig9};
use anyhow::{anyhow, Context, Result};
use lldn_core::analytic::{self, LinkMatrix, ModeMetrics, SweepRow};
use lldn_core::placement;
use lldn_core::schedule::build_superframe;
use lldn_core::sim::{self, Scenario, SimResult};
use lldn_core::{Mode, SpatialConfig};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, &text)
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

/// Files: `{energy,plr}_{sm,rm,etm}.csv` plus `schedule.json`.
///
/// The RM files contain one block per (alpha, beta) setting; the PER column
/// is strictly increasing within each block. The loss-rate RM file also
/// records the intermediate derived link PERs.
pub fn cmd_analyze(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let energies = config.energy_context()?;
    let kappa = config.kappa_exponent()?;
    let grid = config.per_grid();
    let mut written = Vec::new();

    let sm = analytic::sweep_sm(&grid, &energies, &config.superframe).map_err(|e| anyhow!("{e}"))?;
    let etm =
        analytic::sweep_etm(&grid, &energies, &config.superframe).map_err(|e| anyhow!("{e}"))?;
    let mut rm_blocks: Vec<Vec<SweepRow>> = Vec::new();
    for &(alpha, beta) in &config.sweep.alpha_beta {
        let spatial = SpatialConfig::new(alpha, beta).map_err(|e| anyhow!("{e}"))?;
        rm_blocks.push(
            analytic::sweep_rm(
                &grid,
                &spatial,
                kappa,
                config.frames.data_bits(),
                &energies,
                &config.superframe,
            )
            .map_err(|e| anyhow!("{e}"))?,
        );
    }

    let mut text = String::from("per,device_energy_j,retr_prob\n");
    for row in &sm {
        text += &format!(
            "{},{},{}\n",
            sig9(row.per),
            sig9(row.metrics.device_energy_j),
            sig9(row.metrics.retr_prob)
        );
    }
    let path = out.join("energy_sm.csv");
    write_file(&path, &text)?;
    written.push(path);

    let mut text = String::from("per,plr\n");
    for row in &sm {
        text += &format!("{},{}\n", sig9(row.per), sig9(row.metrics.plr));
    }
    let path = out.join("plr_sm.csv");
    write_file(&path, &text)?;
    written.push(path);

    let mut text = String::from("per,alpha,beta,device_energy_j,relay_energy_j,retr_prob\n");
    for block in &rm_blocks {
        for row in block {
            text += &format!(
                "{},{},{},{},{},{}\n",
                sig9(row.per),
                fixed2(row.alpha.unwrap()),
                fixed2(row.beta.unwrap()),
                sig9(row.metrics.device_energy_j),
                sig9(row.metrics.relay_energy_j.unwrap()),
                sig9(row.metrics.retr_prob)
            );
        }
    }
    let path = out.join("energy_rm.csv");
    write_file(&path, &text)?;
    written.push(path);

    let mut text = String::from("per,alpha,beta,per_d2r,per_r2c,plr\n");
    for block in &rm_blocks {
        for row in block {
            text += &format!(
                "{},{},{},{},{},{}\n",
                sig9(row.per),
                fixed2(row.alpha.unwrap()),
                fixed2(row.beta.unwrap()),
                sig9(row.per_d2r.unwrap()),
                sig9(row.per_r2c.unwrap()),
                sig9(row.metrics.plr)
            );
        }
    }
    let path = out.join("plr_rm.csv");
    write_file(&path, &text)?;
    written.push(path);

    let mut text = String::from("per,device_energy_j,relay_energy_j,retr_prob\n");
    for row in &etm {
        text += &format!(
            "{},{},{},{}\n",
            sig9(row.per),
            sig9(row.metrics.device_energy_j),
            sig9(row.metrics.relay_energy_j.unwrap()),
            sig9(row.metrics.retr_prob)
        );
    }
    let path = out.join("energy_etm.csv");
    write_file(&path, &text)?;
    written.push(path);

    let mut text = String::from("per,plr\n");
    for row in &etm {
        text += &format!("{},{}\n", sig9(row.per), sig9(row.metrics.plr));
    }
    let path = out.join("plr_etm.csv");
    write_file(&path, &text)?;
    written.push(path);

    let superframe = build_superframe(&config.superframe, &config.frames, &config.transceiver)
        .map_err(|e| anyhow!("{e}"))?;
    let path = out.join("schedule.json");
    write_json(&path, &superframe)?;
    written.push(path);

    Ok(written)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Clone, Copy)]
pub struct SimulateOpts {
    pub seed: Option<u64>,
    pub superframes: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Serialize)]
struct ScenarioRecord {
    mode: Mode,
    per_uplink: f64,
    per_aux: f64,
    seed: u64,
    links: LinkMatrix,
    analytic: ModeMetrics,
    result: SimResult,
}

#[derive(Debug, Serialize)]
struct SimulateOutput {
    n_superframes: u64,
    base_seed: u64,
    scenarios: Vec<ScenarioRecord>,
}

#[derive(Debug, Clone, Copy)]
pub struct SimulateSummary {
    pub scenarios: usize,
    pub comparison_rows: usize,
    pub failed_rows: usize,
}

/// Scenario grid of one mode: `per_uplink` x `per_aux` over the configured
/// PER values. `per_uplink` drives d2c (SM, RM) or d2r (ETM); `per_aux`
/// drives c2d (SM), the three relay legs d2r = c2r = r2c (RM), or r2c (ETM).
fn scenario_links(mode: Mode, per_uplink: f64, per_aux: f64) -> Result<LinkMatrix> {
    let links = match mode {
        Mode::Sm => LinkMatrix::sm(per_uplink, per_aux),
        Mode::Rm => LinkMatrix::rm(per_uplink, per_aux, per_aux, per_aux),
        Mode::Etm => LinkMatrix::etm(per_uplink, per_aux),
    };
    links.map_err(|e| anyhow!("{e}"))
}

/// Runs the scenario grid and writes `simulate_results.json` plus
/// `comparison.csv`.
///
/// Comparison tolerances mirror the two kinds of agreement: probabilities
/// (retransmission fraction, loss rate) must sit within 4 binomial standard
/// errors of the closed form, and mean energies must match the closed-form
/// energy expression evaluated at the *empirical* retransmission fraction to
/// 1e-9 relative — energies are deterministic given the activity counts.
pub fn cmd_simulate(
    config: &ExperimentConfig,
    out: &Path,
    opts: SimulateOpts,
) -> Result<SimulateSummary> {
    config.validate()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let n = opts.superframes.unwrap_or(config.sim.superframes);
    let base_seed = opts.seed.unwrap_or(config.sim.seed);
    let run_all = || -> Result<Vec<ScenarioRecord>> {
        let energies = config.energy_context()?;
        let mut records = Vec::new();
        let mut ordinal = 0u64;
        for mode in Mode::ALL {
            for &per_uplink in &config.sim.per_grid {
                for &per_aux in &config.sim.per_grid {
                    let links = scenario_links(mode, per_uplink, per_aux)?;
                    let expected = analytic::metrics(mode, &links, &energies, &config.superframe)
                        .map_err(|e| anyhow!("{e}"))?;
                    let scenario = Scenario {
                        mode,
                        links,
                        config: config.superframe,
                        lengths: config.frames,
                        params: config.transceiver,
                        model_beacon_loss: false,
                    };
                    let seed = base_seed.wrapping_add(ordinal);
                    let result = sim::run(&scenario, n, seed).map_err(|e| anyhow!("{e}"))?;
                    records.push(ScenarioRecord {
                        mode,
                        per_uplink,
                        per_aux,
                        seed,
                        links,
                        analytic: expected,
                        result,
                    });
                    ordinal += 1;
                }
            }
        }
        Ok(records)
    };

    let records = match opts.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .context("building thread pool")?
            .install(run_all),
        None => run_all(),
    }?;

    let output = SimulateOutput {
        n_superframes: n,
        base_seed,
        scenarios: records,
    };
    write_json(&out.join("simulate_results.json"), &output)?;

    let energies = config.energy_context()?;
    let mut text = String::from("mode,per_uplink,per_aux,metric,analytic,empirical,tolerance,pass\n");
    let mut rows = 0usize;
    let mut failed = 0usize;
    for record in &output.scenarios {
        let n_f = n as f64;
        let binomial_band = |p: f64| 4.0 * (p * (1.0 - p) / n_f).sqrt();
        let empirical_retr = record.result.empirical_retr_prob;
        let mut push = |metric: &str, expected: f64, empirical: f64, tolerance: f64| {
            let pass = (empirical - expected).abs() <= tolerance;
            text += &format!(
                "{},{},{},{},{},{},{},{}\n",
                record.mode.to_string().to_lowercase(),
                sig9(record.per_uplink),
                sig9(record.per_aux),
                metric,
                sig9(expected),
                sig9(empirical),
                sig9(tolerance),
                if pass { "pass" } else { "fail" }
            );
            rows += 1;
            if !pass {
                failed += 1;
            }
        };
        push(
            "retr_prob",
            record.analytic.retr_prob,
            empirical_retr,
            binomial_band(record.analytic.retr_prob),
        );
        push(
            "plr",
            record.analytic.plr,
            record.result.empirical_plr,
            binomial_band(record.analytic.plr),
        );
        let device_closed_form = match record.mode {
            Mode::Sm => analytic::sm_device_energy(&energies, empirical_retr),
            Mode::Rm => analytic::rm_device_energy(&energies),
            Mode::Etm => analytic::etm_device_energy(&energies),
        };
        push(
            "device_energy_j",
            device_closed_form,
            record.result.mean_device_energy_j,
            1e-9 * device_closed_form.abs(),
        );
        let relay_closed_form = match record.mode {
            Mode::Sm => None,
            Mode::Rm => Some(analytic::rm_relay_energy(&energies, empirical_retr)),
            Mode::Etm => Some(analytic::etm_relay_energy(&energies)),
        };
        if let Some(expected) = relay_closed_form {
            push(
                "relay_energy_j",
                expected,
                record.result.mean_relay_energy_j.unwrap_or(f64::NAN),
                1e-9 * expected.abs(),
            );
        }
    }
    write_file(&out.join("comparison.csv"), &text)?;

    Ok(SimulateSummary {
        scenarios: output.scenarios.len(),
        comparison_rows: rows,
        failed_rows: failed,
    })
}

// ---------------------------------------------------------------------------
// placement
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct OptimumRecord {
    device_power_dbm: f64,
    x_m: f64,
    y_m: f64,
    plr: f64,
}

#[derive(Debug, Serialize)]
struct PlacementSummary {
    relay_power_dbm: f64,
    optima: Vec<OptimumRecord>,
}

fn power_tag(dbm: f64) -> String {
    if dbm.fract() == 0.0 {
        format!("{}", dbm as i64)
    } else {
        format!("{dbm}")
    }
}

/// Files: one `field_<power>dbm.csv` per device power, one `line.csv`
/// covering all powers, and `placement_summary.json` with the optima.
pub fn cmd_placement(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut written = Vec::new();
    let mut line_text = String::from("fraction,plr,device_power_dbm\n");
    let mut optima = Vec::new();

    for &dbm in &config.geometry.device_powers_dbm {
        let geometry = config.geometry_for_power(dbm)?;
        let field =
            placement::grid_sweep(&geometry, &config.placement.grid).map_err(|e| anyhow!("{e}"))?;
        let mut text = String::from("x_m,y_m,plr\n");
        for iy in 0..field.ny {
            for ix in 0..field.nx {
                let pos = field.position(ix, iy);
                text += &format!(
                    "{},{},{}\n",
                    fixed2(pos[0]),
                    fixed2(pos[1]),
                    sig9(field.value(ix, iy))
                );
            }
        }
        let path = out.join(format!("field_{}dbm.csv", power_tag(dbm)));
        write_file(&path, &text)?;
        written.push(path);

        for (fraction, plr) in
            placement::line_sweep(&geometry, config.placement.line_samples)
                .map_err(|e| anyhow!("{e}"))?
        {
            line_text += &format!("{},{},{}\n", sig9(fraction), sig9(plr), fixed1(dbm));
        }

        let optimum =
            placement::find_optimum(&geometry, &config.placement.grid, config.placement.refine)
                .map_err(|e| anyhow!("{e}"))?;
        let plr = placement::plr_at(&geometry, optimum).map_err(|e| anyhow!("{e}"))?;
        optima.push(OptimumRecord {
            device_power_dbm: dbm,
            x_m: optimum[0],
            y_m: optimum[1],
            plr,
        });
    }

    let path = out.join("line.csv");
    write_file(&path, &line_text)?;
    written.push(path);

    let path = out.join("placement_summary.json");
    write_json(
        &path,
        &PlacementSummary {
            relay_power_dbm: config.geometry.relay_power_dbm,
            optima,
        },
    )?;
    written.push(path);

    Ok(written)
}

// ---------------------------------------------------------------------------
// figures
// ---------------------------------------------------------------------------

/// Chains analyze + placement with the given (usually default) settings.
pub fn cmd_figures(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let mut written = cmd_analyze(config, out)?;
    written.extend(cmd_placement(config, out)?);
    Ok(written)
}
