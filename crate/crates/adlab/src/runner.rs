//! Experiment execution: builds the model from a configuration, runs the
//! requested pipeline tasks in dependency order, and writes deterministic
//! CSV/JSON outputs plus a run manifest.

use std::collections::hash_map::DefaultHasher;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, ModelConfig, OutputFormat, TaskKind};
use crate::diagnostics::{epsilon_lower_bound, fidelity_adiabatic_vs_exact, marzlin_sanders_check};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::matrix_file::load_matrix_model;
use crate::models::{HamiltonianModel, MsModel, MsParams, SchwingerModel, SchwingerParams};
use crate::phases::phase_report;
use crate::propagation::{decompose, propagate_adiabatic, propagate_exact};
use crate::spectral::{couplings, decompose_tracked};

/// Gauge convention stamped into every manifest.
pub const GAUGE_CONVENTION: &str =
    "parallel transport: consecutive same-level overlaps made real and positive";

/// Convention for splitting off-diagonal propagator elements into a smallness
/// scale times an order-one weight, stamped into every manifest.
pub const EPSILON_SPLIT: &str =
    "off-diagonal column weight divided by measured eps_hat (raw weight when eps_hat = 0)";

/// Record of one run: everything needed to reproduce its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub grid_hash: String,
    pub gauge_convention: String,
    pub epsilon_split: String,
    /// Output files written for this run, relative to the output directory.
    pub outputs: Vec<String>,
    /// Subdirectories holding per-value runs when a sweep was requested.
    pub sweep_directories: Vec<String>,
}

/// Instantiate the Hamiltonian described by a configuration.
pub fn build_model(config: &ExperimentConfig) -> Result<Box<dyn HamiltonianModel>> {
    let model: Box<dyn HamiltonianModel> = match &config.model {
        ModelConfig::Ms { omega0, big_omega } => {
            Box::new(MsModel::new(MsParams::new(*omega0, *big_omega)?))
        }
        ModelConfig::Schwinger { b, theta, omega } => {
            Box::new(SchwingerModel::new(SchwingerParams::new(*b, *theta, *omega)?))
        }
        ModelConfig::MatrixFile { path } => Box::new(load_matrix_model(path)?),
    };
    if config.level >= model.dimension() {
        return Err(Error::ConfigInvalid {
            field: "level".into(),
            reason: format!(
                "model has {} levels, got level {}",
                model.dimension(),
                config.level
            ),
        });
    }
    Ok(model)
}

/// Run an experiment. `out_override` and `format_override` mirror the CLI
/// flags and take precedence over the configuration's output section.
pub fn run(
    config: &ExperimentConfig,
    out_override: Option<&Path>,
    format_override: Option<OutputFormat>,
) -> Result<RunManifest> {
    config.validate()?;
    let mut effective = config.clone();
    if let Some(dir) = out_override {
        effective.output.directory = Some(dir.to_path_buf());
    }
    if let Some(f) = format_override {
        effective.output.format = f;
    }
    let out_dir = effective
        .output
        .directory
        .clone()
        .unwrap_or_else(|| PathBuf::from("adlab_out"));
    std::fs::create_dir_all(&out_dir)?;

    let mut manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: effective.clone(),
        grid_hash: grid_hash(&effective),
        gauge_convention: GAUGE_CONVENTION.to_string(),
        epsilon_split: EPSILON_SPLIT.to_string(),
        outputs: Vec::new(),
        sweep_directories: Vec::new(),
    };

    if let Some(sweep) = effective.sweep.clone() {
        let sub_names: Vec<String> = sweep
            .values
            .iter()
            .map(|v| format!("{}_{}", sweep.param, v))
            .collect();
        let results: Vec<Result<()>> = sweep
            .values
            .par_iter()
            .zip(&sub_names)
            .map(|(&value, name)| {
                let point = effective.clone().with_sweep_value(&sweep.param, value)?;
                let sub_dir = out_dir.join(name);
                std::fs::create_dir_all(&sub_dir)?;
                let outputs = run_single(&point, &sub_dir)?;
                let sub_manifest = RunManifest {
                    version: env!("CARGO_PKG_VERSION").to_string(),
                    config: point.clone(),
                    grid_hash: grid_hash(&point),
                    gauge_convention: GAUGE_CONVENTION.to_string(),
                    epsilon_split: EPSILON_SPLIT.to_string(),
                    outputs,
                    sweep_directories: Vec::new(),
                };
                write_manifest(&sub_dir, &sub_manifest)
            })
            .collect();
        for r in results {
            r?;
        }
        manifest.sweep_directories = sub_names;
    } else {
        manifest.outputs = run_single(&effective, &out_dir)?;
    }
    write_manifest(&out_dir, &manifest)?;
    Ok(manifest)
}

fn grid_hash(config: &ExperimentConfig) -> String {
    let mut h = DefaultHasher::new();
    config.grid.t_end.to_bits().hash(&mut h);
    config.grid.steps.hash(&mut h);
    format!("{:016x}", h.finish())
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)?;
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}

/// A flat numeric table destined for one output file.
struct Table {
    name: &'static str,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn run_single(config: &ExperimentConfig, dir: &Path) -> Result<Vec<String>> {
    let model = build_model(config)?;
    let grid = TimeGrid::new(config.grid.t_end, config.grid.steps)?;
    let level = config.level;
    let dim = model.dimension();

    // Shared pipeline stages, computed once in dependency order.
    let trajectory =
        propagate_exact(model.as_ref(), &grid).map_err(|e| e.in_task("propagate"))?;
    let frames =
        decompose_tracked(model.as_ref(), &grid, None).map_err(|e| e.in_task("decompose"))?;
    let cs = couplings(&frames).map_err(|e| e.in_task("decompose"))?;

    let mut outputs = Vec::new();
    // Canonical execution order regardless of the order tasks were listed in.
    let order = [
        TaskKind::Propagate,
        TaskKind::Decompose,
        TaskKind::Phases,
        TaskKind::MsCheck,
        TaskKind::EpsilonBound,
        TaskKind::Fidelity,
    ];
    for task in order {
        if !config.tasks.contains(&task) {
            continue;
        }
        let table = match task {
            TaskKind::Propagate => {
                let mut columns = vec!["t".to_string()];
                for i in 0..dim {
                    for j in 0..dim {
                        columns.push(format!("u{i}{j}_re"));
                        columns.push(format!("u{i}{j}_im"));
                    }
                }
                let rows = grid
                    .iter()
                    .zip(&trajectory.u)
                    .map(|(t, u)| {
                        let mut row = vec![t];
                        for i in 0..dim {
                            for j in 0..dim {
                                row.push(u[(i, j)].re);
                                row.push(u[(i, j)].im);
                            }
                        }
                        row
                    })
                    .collect();
                Table { name: "trajectory", columns, rows }
            }
            TaskKind::Decompose => {
                let dec = decompose(&trajectory, &frames);
                let mut columns = vec!["t".to_string()];
                for i in 0..dim {
                    for j in 0..dim {
                        columns.push(format!("unm{i}{j}_re"));
                        columns.push(format!("unm{i}{j}_im"));
                    }
                }
                for n in 0..dim {
                    columns.push(format!("phi{n}"));
                }
                columns.push("offdiag_norm".to_string());
                columns.push("eps_hat".to_string());
                let rows = (0..grid.len())
                    .map(|k| {
                        let mut row = vec![grid.at(k)];
                        let m = &dec.unm[k];
                        for i in 0..dim {
                            for j in 0..dim {
                                row.push(m[(i, j)].re);
                                row.push(m[(i, j)].im);
                            }
                        }
                        for n in 0..dim {
                            row.push(dec.phi[n][k]);
                        }
                        row.push(dec.offdiag_norm[k]);
                        row.push(dec.epsilon_hat);
                        row
                    })
                    .collect();
                Table { name: "decomposition", columns, rows }
            }
            TaskKind::Phases => {
                let psi0 = frames[0].states.column(level).clone_owned();
                let states = trajectory.states_from(&psi0);
                let report = phase_report(&frames, &cs, &states, level)
                    .map_err(|e| e.in_task("phases"))?;
                let columns = [
                    "t",
                    "delta_n",
                    "gamma_n",
                    "pancharatnam",
                    "geom_noncyclic",
                    "geom_openpath",
                    "s_re",
                    "s_im",
                    "q_re",
                    "q_im",
                    "phi_corrected",
                ]
                .iter()
                .map(|s| s.to_string())
                .collect();
                let rows = (0..grid.len())
                    .map(|k| {
                        vec![
                            report.times[k],
                            report.delta[k],
                            report.gamma[k],
                            report.pancharatnam[k],
                            report.geom_noncyclic[k],
                            report.geom_openpath[k],
                            report.source[k].re,
                            report.source[k].im,
                            report.q[k].re,
                            report.q[k].im,
                            report.phi_corrected[k],
                        ]
                    })
                    .collect();
                Table { name: "phases", columns, rows }
            }
            TaskKind::MsCheck => {
                let report = marzlin_sanders_check(model.as_ref(), &grid, level)
                    .map_err(|e| e.in_task("ms_check"))?;
                let columns = [
                    "t",
                    "norm_naive_abs",
                    "norm_naive_arg",
                    "norm_corrected_abs",
                    "norm_true_abs",
                ]
                .iter()
                .map(|s| s.to_string())
                .collect();
                let rows = (0..grid.len())
                    .map(|k| {
                        vec![
                            report.times[k],
                            report.norm_naive[k].norm(),
                            report.norm_naive[k].arg(),
                            report.norm_corrected[k].norm(),
                            report.norm_true[k].sqrt(),
                        ]
                    })
                    .collect();
                Table { name: "ms_report", columns, rows }
            }
            TaskKind::EpsilonBound => {
                let dec = decompose(&trajectory, &frames);
                let report = epsilon_lower_bound(&dec, &frames, &trajectory, level)
                    .map_err(|e| e.in_task("epsilon_bound"))?;
                let columns = ["t", "d_eig", "d_state", "denom", "eps_lower", "eps_hat"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
                let rows = (0..grid.len())
                    .map(|k| {
                        vec![
                            report.times[k],
                            report.d_eig[k],
                            report.d_state[k],
                            report.denom[k],
                            report.eps_lower[k],
                            report.eps_hat,
                        ]
                    })
                    .collect();
                Table { name: "epsilon", columns, rows }
            }
            TaskKind::Fidelity => {
                let ad = propagate_adiabatic(&frames, &cs).map_err(|e| e.in_task("fidelity"))?;
                let f = fidelity_adiabatic_vs_exact(&ad, &trajectory, &frames, level);
                let columns = ["t", "f"].iter().map(|s| s.to_string()).collect();
                let rows = grid.iter().zip(&f).map(|(t, &v)| vec![t, v]).collect();
                Table { name: "fidelity", columns, rows }
            }
        };
        outputs.push(write_table(dir, &table, config.output.format, config.output.precision)?);
    }
    Ok(outputs)
}

fn format_value(value: f64, precision: usize) -> String {
    format!("{:.*e}", precision.saturating_sub(1), value)
}

fn write_table(
    dir: &Path,
    table: &Table,
    format: OutputFormat,
    precision: usize,
) -> Result<String> {
    match format {
        OutputFormat::Csv => {
            let filename = format!("{}.csv", table.name);
            let mut text = String::new();
            text.push_str(&table.columns.join(","));
            text.push('\n');
            for row in &table.rows {
                let mut first = true;
                for v in row {
                    if !first {
                        text.push(',');
                    }
                    first = false;
                    let _ = write!(text, "{}", format_value(*v, precision));
                }
                text.push('\n');
            }
            std::fs::write(dir.join(&filename), text)?;
            Ok(filename)
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct JsonTable<'a> {
                name: &'a str,
                columns: &'a [String],
                rows: &'a [Vec<f64>],
            }
            let filename = format!("{}.json", table.name);
            let payload = JsonTable {
                name: table.name,
                columns: &table.columns,
                rows: &table.rows,
            };
            let text = serde_json::to_string(&payload)?;
            std::fs::write(dir.join(&filename), text + "\n")?;
            Ok(filename)
        }
    }
}
