//! Command-line front end for the jamming link simulator.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use jamsim::harness::{
    calibrate_lambda, comparison_csv, comparison_table, corrupt_payload_demo, load_payload,
    prepare_transmission, run_sweep, schedule_for, sweep_csv, ExperimentConfig,
};
use jamsim::model::{optimize_schedule, AnalyticParams, GridSpec};
use jamsim::schedule::JamScheme;
use std::fs;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "jamsim",
    about = "Link-level intermittent-jamming simulator: sweeps, comparisons, payload demos and the schedule optimizer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// JSON experiment config; flags below override individual fields.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Payload file transmitted by Alice (synthetic when omitted).
    #[arg(long)]
    payload: Option<PathBuf>,

    /// Comma-separated schemes: CJS,PerJPT,PerJDT,RepJDT,RanJDT,RanJFT.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,

    /// Jamming energy grid, simulator units.
    #[arg(long = "energy-grid", value_delimiter = ',')]
    energy_grid: Option<Vec<f64>>,

    /// Jamming proportion grid.
    #[arg(long = "rho-grid", value_delimiter = ',')]
    rho_grid: Option<Vec<f64>>,

    /// Monte-Carlo seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,

    /// Synthetic payload size in frames.
    #[arg(long)]
    frames: Option<usize>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Run the full 219600-byte message instead of the desk-scale default.
    #[arg(long, default_value_t = false)]
    full_scale: bool,

    /// Worker pool size (0 = runtime default).
    #[arg(long)]
    workers: Option<usize>,
}

impl ConfigArgs {
    fn build(&self) -> Result<ExperimentConfig> {
        let mut cfg: ExperimentConfig = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(p) = &self.payload {
            cfg.payload_path = Some(p.clone());
        }
        if let Some(names) = &self.schemes {
            let mut schemes = Vec::new();
            for name in names {
                match JamScheme::parse(name) {
                    Some(s) => schemes.push(s),
                    None => bail!("unknown scheme {name}"),
                }
            }
            cfg.schemes = schemes;
        }
        if let Some(g) = &self.energy_grid {
            cfg.e_j_grid = g.clone();
        }
        if let Some(g) = &self.rho_grid {
            cfg.rho_grid = g.clone();
        }
        if let Some(s) = &self.seeds {
            cfg.seeds = s.clone();
        }
        if let Some(f) = self.frames {
            cfg.frames = f;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        if self.full_scale {
            cfg.full_scale = true;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Full scheme x energy x proportion x seed sweep; writes sweep.csv
    /// and run_meta.json.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Also dump the legitimate baseband as little-endian f64 I/Q pairs.
        #[arg(long, default_value_t = false)]
        dump_iq: bool,
    },
    /// Best-SER-per-scheme table over the proportion grid; writes
    /// comparison.csv.
    Compare {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Writes Eve's recovered payload per scheme/energy plus per-frame
    /// decode logs and a byte-diff summary.
    Demo {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Grid search for the schedule maximizing error count per unit
    /// jamming energy; writes optimize.json.
    Optimize {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Energy budget for the search (first of --energy-grid when absent).
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Exports a schedule's jammed runs as CSV (frame,start,end).
    Schedule {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Scheme to export.
        #[arg(long)]
        scheme: String,
        /// Target jamming proportion.
        #[arg(long, default_value_t = 0.1)]
        rho: f64,
        /// Energy budget.
        #[arg(long, default_value_t = 1000.0)]
        budget: f64,
        /// Schedule seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fits the multiplying-effect parameter against Monte-Carlo error
    /// counts on RepJDT cells.
    Calibrate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Energy budget for the calibration cells.
        #[arg(long)]
        budget: Option<f64>,
    },
}

fn write_meta(cfg: &ExperimentConfig, skipped: usize) -> Result<()> {
    let meta = serde_json::json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "skipped_cells": skipped,
    });
    fs::write(cfg.out_dir.join("run_meta.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sweep { cfg, dump_iq } => {
            let cfg = cfg.build()?;
            let out = run_sweep(&cfg)?;
            fs::create_dir_all(&cfg.out_dir)?;
            fs::write(cfg.out_dir.join("sweep.csv"), sweep_csv(&out.rows))?;
            write_meta(&cfg, out.skipped.len())?;
            if dump_iq {
                let (_, _, _, tx) = prepare_transmission(&cfg)?;
                let mut f = fs::File::create(cfg.out_dir.join("legit_iq.f64"))?;
                tx.stream.write_iq_f64le(&mut f)?;
            }
            println!(
                "{} rows ({} cells skipped) -> {}",
                out.rows.len(),
                out.skipped.len(),
                cfg.out_dir.join("sweep.csv").display()
            );
        }
        Command::Compare { cfg } => {
            let cfg = cfg.build()?;
            let out = run_sweep(&cfg)?;
            let table = comparison_table(&cfg, &out.rows);
            fs::create_dir_all(&cfg.out_dir)?;
            fs::write(cfg.out_dir.join("comparison.csv"), comparison_csv(&table))?;
            write_meta(&cfg, out.skipped.len())?;
            for row in &table {
                println!(
                    "{:>7} e_j={:>10}: best SER {:.5} at rho {}",
                    row.scheme.name(),
                    row.e_j,
                    row.best_ser,
                    row.best_rho_target
                );
            }
        }
        Command::Demo { cfg } => {
            let cfg = cfg.build()?;
            let rows = corrupt_payload_demo(&cfg)?;
            for r in &rows {
                println!(
                    "{:>7} e_j={:>10}: byte-diff {:.4} -> {}",
                    r.scheme.map_or("none", |s| s.name()),
                    r.e_j,
                    r.byte_diff_fraction,
                    r.recovered_file.display()
                );
            }
        }
        Command::Optimize { cfg, budget } => {
            let cfg = cfg.build()?;
            let budget = budget
                .or_else(|| cfg.e_j_grid.first().copied())
                .context("no energy budget given")?;
            let payload = load_payload(&cfg)?;
            let plan = jamsim::frame::plan_message(payload.len(), &cfg.phy)?;
            let layout = jamsim::frame::layout_frame(
                cfg.phy.l_msdu_bytes + cfg.phy.mac_overhead_bytes(),
                &cfg.phy,
            )?;
            let params = AnalyticParams::from_config(&cfg.phy);
            let grid = GridSpec { schemes: cfg.schemes.clone(), ..GridSpec::default() };
            let out = optimize_schedule(budget, &params, &plan, &layout, &cfg.phy, &cfg.channel, &grid)?;
            let report = serde_json::json!({
                "budget": budget,
                "best": {
                    "scheme": out.schedule.scheme.name(),
                    "params": out.params,
                    "seree": out.report.seree,
                    "w": out.report.w,
                    "pr": out.report.pr,
                    "n_error_overall": out.report.n_error_overall,
                    "feasible": out.report.feasible,
                    "energy_within_budget": out.report.energy_within_budget,
                    "bob_error_free": out.report.bob_error_free,
                },
                "grid": out.evaluated,
            });
            fs::create_dir_all(&cfg.out_dir)?;
            let path = cfg.out_dir.join("optimize.json");
            fs::write(&path, serde_json::to_string_pretty(&report)?)?;
            println!(
                "best: {} ({}) seree={:.6e} -> {}",
                out.schedule.scheme.name(),
                out.params,
                out.report.seree,
                path.display()
            );
        }
        Command::Schedule { cfg, scheme, rho, budget, seed } => {
            let cfg = cfg.build()?;
            let scheme = JamScheme::parse(&scheme).context("unknown scheme")?;
            let payload = load_payload(&cfg)?;
            let plan = jamsim::frame::plan_message(payload.len(), &cfg.phy)?;
            let layout = jamsim::frame::layout_frame(
                cfg.phy.l_msdu_bytes + cfg.phy.mac_overhead_bytes(),
                &cfg.phy,
            )?;
            let sched = schedule_for(scheme, rho, &plan, &layout, seed, budget, cfg.rep_pulses)
                .map_err(|e| anyhow::anyhow!("schedule: {e}"))?;
            fs::create_dir_all(&cfg.out_dir)?;
            let path = cfg.out_dir.join(format!("schedule_{}.csv", scheme.name()));
            let mut f = fs::File::create(&path)?;
            sched.export_csv(&mut f)?;
            println!(
                "{}: rho={:.5} p_j={:.5} -> {}",
                scheme.name(),
                sched.rho(),
                sched.p_j(),
                path.display()
            );
        }
        Command::Calibrate { cfg, budget } => {
            let cfg = cfg.build()?;
            let budget = budget
                .or_else(|| cfg.e_j_grid.first().copied())
                .context("no energy budget given")?;
            let lambda = calibrate_lambda(&cfg, budget)?;
            println!("lambda = {lambda:.6}");
        }
    }
    Ok(())
}
