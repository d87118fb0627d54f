//! Experiment runner: scheme x energy x proportion x seed sweeps over the
//! full modulate -> schedule -> channel -> receive pipeline, with analytic
//! predictions computed alongside, plus the comparison table and the
//! payload-corruption demo.
//!
//! Sweep cells are independent jobs executed on a bounded worker pool and
//! merged in grid order, so outputs are byte-identical regardless of the
//! pool size. Every run audits error-free reception at Bob and aborts with
//! a constraint violation if any row shows Bob errors.

use crate::channel::{receive_with_waveform, ChannelError, ChannelSpec, Receiver};
use crate::frame::{layout_frame, plan_message, FrameLayout, LayoutError, MessagePlan, PhyConfig};
use crate::model::{
    error_count, n_sym_total, overall_errors, ser_closed_form, weight_w, AnalyticParams,
    ModelError,
};
use crate::receiver::{decode_transmission, measure_ser, recovered_payload, RxError, RxOptions};
use crate::schedule::{
    account_with_waveform, make_cjs, make_perj, make_perj_pt, make_ranj, make_repj, JamSchedule,
    JamScheme, RanPosition, ScheduleError,
};
use crate::waveform::{modulate_message, Transmission, WaveformError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use thiserror::Error;

/// Full sweep configuration. Fields have desk-scale defaults so a config
/// file only needs to override what it cares about.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Payload file; a seeded synthetic payload is generated when absent.
    pub payload_path: Option<PathBuf>,
    pub schemes: Vec<JamScheme>,
    pub e_j_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub channel: ChannelSpec,
    pub phy: PhyConfig,
    pub out_dir: PathBuf,
    /// Synthetic payload size in frames (ignored when a payload file or
    /// `full_scale` is given).
    pub frames: usize,
    /// Use the full 219600-byte message (96 frames).
    pub full_scale: bool,
    /// Worker pool size; 0 picks the runtime default.
    pub workers: usize,
    /// Pulse count used when mapping a proportion onto RepJDT.
    pub rep_pulses: usize,
    /// Representative proportion for the payload-corruption demo.
    pub demo_rho: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            payload_path: None,
            schemes: JamScheme::all().to_vec(),
            e_j_grid: vec![2_000.0, 8_000.0, 32_000.0, 128_000.0],
            rho_grid: vec![0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.65, 0.8],
            seeds: (0..10).collect(),
            channel: ChannelSpec::default(),
            phy: PhyConfig::default(),
            out_dir: PathBuf::from("out"),
            frames: 20,
            full_scale: false,
            workers: 0,
            rep_pulses: 8,
            demo_rho: 0.1,
        }
    }
}

/// Identity of one sweep cell in grid order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellSpec {
    pub scheme: JamScheme,
    pub e_j: f64,
    pub rho_target: f64,
    pub seed: u64,
}

/// One row of the sweep matrix; `rho` is the achieved jammed fraction.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsRow {
    pub cell: CellSpec,
    pub rho: f64,
    pub jsr: f64,
    pub ser_eve: f64,
    pub seree: f64,
    pub bob_errors: usize,
    pub frames_discarded: usize,
    pub ser_analytic: f64,
    pub n_error_analytic: f64,
    pub w: u8,
}

/// A cell that could not be built (proportion not realizable for the
/// scheme, pulse below one sample, ...).
#[derive(Debug, Clone, Serialize)]
pub struct CellSkip {
    pub cell: CellSpec,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutput {
    pub rows: Vec<MetricsRow>,
    pub skipped: Vec<CellSkip>,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("payload: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Waveform(#[from] WaveformError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Rx(#[from] RxError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("constraint violated: Bob decoded errors in {0} sweep cell(s); first: {1}")]
    ConstraintViolation(usize, String),
    #[error("config: {0}")]
    BadConfig(String),
}

/// Payload bytes for a run: the configured file, or a seeded synthetic
/// message sized by `frames`/`full_scale`.
pub fn load_payload(cfg: &ExperimentConfig) -> Result<Vec<u8>, HarnessError> {
    if let Some(path) = &cfg.payload_path {
        let bytes = fs::read(path)?;
        if bytes.is_empty() {
            return Err(HarnessError::BadConfig(format!(
                "payload file {} is empty",
                path.display()
            )));
        }
        return Ok(bytes);
    }
    let len = if cfg.full_scale {
        219_600
    } else {
        cfg.frames * cfg.phy.l_msdu_bytes
    };
    if len == 0 {
        return Err(HarnessError::BadConfig("frames must be nonzero".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xFEED_BEEF);
    Ok((0..len).map(|_| rng.random()).collect())
}

/// Builds the schedule realizing a target global proportion for a scheme.
/// CJS and PerJPT have fixed proportions and ignore the target.
pub fn schedule_for(
    scheme: JamScheme,
    rho_target: f64,
    plan: &MessagePlan,
    layout: &FrameLayout,
    seed: u64,
    e_j: f64,
    rep_pulses: usize,
) -> Result<JamSchedule, ScheduleError> {
    let n_frame_samples = layout.n_samples_frame as f64;
    let data = layout.data_window();
    let data_span = (data.end - data.start) as f64;
    let spu = n_frame_samples / layout.t_frame_us;
    match scheme {
        JamScheme::Cjs => make_cjs(plan, layout, e_j, seed),
        JamScheme::PerJPt => make_perj_pt(plan, layout, e_j, seed),
        JamScheme::PerJDt => {
            let t_d_us = rho_target * n_frame_samples / spu;
            if rho_target * n_frame_samples > data_span {
                return Err(ScheduleError::BadProportion(rho_target));
            }
            make_perj(plan, layout, t_d_us, data.start as f64 / spu, e_j, seed)
        }
        JamScheme::RepJDt => {
            let duty = rho_target * n_frame_samples / data_span;
            if duty > 1.0 {
                return Err(ScheduleError::BadProportion(rho_target));
            }
            make_repj(plan, layout, rep_pulses, duty, data.start as f64 / spu, e_j, seed)
        }
        JamScheme::RanJDt => {
            let p = rho_target * n_frame_samples / data_span;
            if p > 1.0 {
                return Err(ScheduleError::BadProportion(rho_target));
            }
            make_ranj(plan, layout, p, RanPosition::Dt, seed, e_j)
        }
        JamScheme::RanJFt => make_ranj(plan, layout, rho_target, RanPosition::Ft, seed, e_j),
    }
}

/// Proportion grid for a scheme: the fixed-position schemes collapse to a
/// single representative cell per (energy, seed).
fn rho_points(scheme: JamScheme, grid: &[f64]) -> Vec<f64> {
    match scheme {
        JamScheme::Cjs | JamScheme::PerJPt => vec![1.0],
        _ => grid.to_vec(),
    }
}

enum CellOutcome {
    Row(Box<MetricsRow>),
    Skip(CellSkip),
}

fn run_cell(
    cell: CellSpec,
    tx: &Transmission,
    plan: &MessagePlan,
    layout: &FrameLayout,
    cfg: &ExperimentConfig,
    params: &AnalyticParams,
) -> Result<CellOutcome, HarnessError> {
    let schedule = match schedule_for(
        cell.scheme,
        cell.rho_target,
        plan,
        layout,
        cell.seed,
        cell.e_j,
        cfg.rep_pulses,
    ) {
        Ok(s) => s,
        Err(e) => {
            return Ok(CellOutcome::Skip(CellSkip { cell, reason: e.to_string() }));
        }
    };
    let jam = schedule.waveform();
    let budget = account_with_waveform(&schedule, &jam, &tx.stream);
    let rx_eve = receive_with_waveform(&tx.stream, &schedule, &jam, &cfg.channel, Receiver::Eve, cell.seed)?;
    let rx_bob = receive_with_waveform(&tx.stream, &schedule, &jam, &cfg.channel, Receiver::Bob, cell.seed)?;
    let opts = RxOptions::default();
    let eve = decode_transmission(&rx_eve, tx, &cfg.phy, &opts)?;
    let bob = decode_transmission(&rx_bob, tx, &cfg.phy, &opts)?;

    let p_j = budget.p_j.unwrap_or(0.0);
    let pr = ser_closed_form(params.e_b, p_j, cfg.channel.h_ae, cfg.channel.h_je)?;
    let n_error = error_count(&schedule, pr, params, plan, layout, &cfg.phy);
    let n_overall = overall_errors(&schedule, n_error, plan, layout, &cfg.phy);
    let total = n_sym_total(plan, layout, &cfg.phy);
    let ser_eve = measure_ser(&eve);

    Ok(CellOutcome::Row(Box::new(MetricsRow {
        cell,
        rho: budget.rho,
        jsr: budget.jsr.unwrap_or(0.0),
        ser_eve,
        seree: ser_eve / cell.e_j,
        bob_errors: bob.iter().map(|r| r.bit_errors).sum(),
        frames_discarded: eve.iter().filter(|r| r.discarded).count(),
        ser_analytic: n_overall / total,
        n_error_analytic: n_error,
        w: weight_w(&schedule, layout),
    })))
}

/// Prepares the transmission shared by all cells of a run.
pub fn prepare_transmission(
    cfg: &ExperimentConfig,
) -> Result<(Vec<u8>, MessagePlan, FrameLayout, Transmission), HarnessError> {
    let payload = load_payload(cfg)?;
    let plan = plan_message(payload.len(), &cfg.phy)?;
    let layout = layout_frame(cfg.phy.l_msdu_bytes + cfg.phy.mac_overhead_bytes(), &cfg.phy)?;
    let tx = modulate_message(&payload, &plan, &cfg.phy)?;
    Ok((payload, plan, layout, tx))
}

/// Full factorial sweep in grid order: scheme, energy, proportion, seed.
/// Aborts if any cell decodes with errors at Bob.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput, HarnessError> {
    if cfg.schemes.is_empty() || cfg.e_j_grid.is_empty() || cfg.rho_grid.is_empty() || cfg.seeds.is_empty()
    {
        return Err(HarnessError::BadConfig("schemes, grids and seeds must be nonempty".into()));
    }
    {
        let mut sorted = cfg.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != cfg.seeds.len() {
            return Err(HarnessError::BadConfig("seeds must be distinct".into()));
        }
    }
    let (_, plan, layout, tx) = prepare_transmission(cfg)?;
    let params = AnalyticParams::from_config(&cfg.phy);

    let mut cells = Vec::new();
    for &scheme in &cfg.schemes {
        for &e_j in &cfg.e_j_grid {
            for rho in rho_points(scheme, &cfg.rho_grid) {
                for &seed in &cfg.seeds {
                    cells.push(CellSpec { scheme, e_j, rho_target: rho, seed });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| HarnessError::BadConfig(e.to_string()))?;
    let outcomes: Vec<Result<CellOutcome, HarnessError>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&cell| run_cell(cell, &tx, &plan, &layout, cfg, &params))
            .collect()
    });

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for outcome in outcomes {
        match outcome? {
            CellOutcome::Row(row) => rows.push(*row),
            CellOutcome::Skip(skip) => skipped.push(skip),
        }
    }

    let violations: Vec<&MetricsRow> = rows.iter().filter(|r| r.bob_errors > 0).collect();
    if !violations.is_empty() {
        let first = violations[0];
        return Err(HarnessError::ConstraintViolation(
            violations.len(),
            format!(
                "scheme={} e_j={} rho={} seed={} bob_errors={}",
                first.cell.scheme.name(),
                first.cell.e_j,
                first.cell.rho_target,
                first.cell.seed,
                first.bob_errors
            ),
        ));
    }
    Ok(SweepOutput { rows, skipped })
}

/// Renders the sweep matrix as CSV.
pub fn sweep_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(
        "scheme,e_j,rho,seed,jsr,ser_eve,seree,bob_errors,frames_discarded,ser_analytic,n_error_analytic,w\n",
    );
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.cell.scheme.name(),
            r.cell.e_j,
            r.rho,
            r.cell.seed,
            r.jsr,
            r.ser_eve,
            r.seree,
            r.bob_errors,
            r.frames_discarded,
            r.ser_analytic,
            r.n_error_analytic,
            r.w
        )
        .expect("string write");
    }
    out
}

/// Best mean SER over the proportion grid, per scheme and energy.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub scheme: JamScheme,
    pub e_j: f64,
    pub best_rho_target: f64,
    pub best_ser: f64,
}

/// Reduces sweep rows to the best-SER-per-scheme table: SER is averaged
/// over seeds at each proportion, then maximized over the proportion grid.
pub fn comparison_table(cfg: &ExperimentConfig, rows: &[MetricsRow]) -> Vec<ComparisonRow> {
    let mut out = Vec::new();
    for &scheme in &cfg.schemes {
        for &e_j in &cfg.e_j_grid {
            let mut best: Option<(f64, f64)> = None;
            for rho in rho_points(scheme, &cfg.rho_grid) {
                let sers: Vec<f64> = rows
                    .iter()
                    .filter(|r| {
                        r.cell.scheme == scheme && r.cell.e_j == e_j && r.cell.rho_target == rho
                    })
                    .map(|r| r.ser_eve)
                    .collect();
                if sers.is_empty() {
                    continue;
                }
                let mean = sers.iter().sum::<f64>() / sers.len() as f64;
                if best.is_none_or(|(_, b)| mean > b) {
                    best = Some((rho, mean));
                }
            }
            if let Some((rho, ser)) = best {
                out.push(ComparisonRow { scheme, e_j, best_rho_target: rho, best_ser: ser });
            }
        }
    }
    out
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("scheme,e_j,best_rho_target,best_ser\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.scheme.name(), r.e_j, r.best_rho_target, r.best_ser)
            .expect("string write");
    }
    out
}

/// Per-scheme corruption demo result.
#[derive(Debug, Clone, Serialize)]
pub struct DemoRow {
    /// `None` is the jamming-free baseline.
    pub scheme: Option<JamScheme>,
    pub e_j: f64,
    pub byte_diff_fraction: f64,
    pub recovered_file: PathBuf,
}

/// Writes Eve's recovered payload per scheme and energy for byte-diff or
/// visual inspection, plus a per-frame decode log and a summary CSV.
pub fn corrupt_payload_demo(cfg: &ExperimentConfig) -> Result<Vec<DemoRow>, HarnessError> {
    let (payload, plan, layout, tx) = prepare_transmission(cfg)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let seed = *cfg.seeds.first().unwrap_or(&0);
    let opts = RxOptions::default();
    let mut out = Vec::new();

    let demo_one = |scheme: Option<JamScheme>,
                        e_j: f64,
                        tag: String|
     -> Result<Option<DemoRow>, HarnessError> {
        let (results, chan_used) = match scheme {
            None => {
                // Jamming-free baseline: zero jammer gain at Eve.
                let sched = make_perj_pt(&plan, &layout, 1.0, seed).unwrap();
                let chan = ChannelSpec {
                    h_je: num_complex::Complex64::new(0.0, 0.0),
                    ..cfg.channel
                };
                let rx = crate::channel::receive(&tx.stream, &sched, &chan, Receiver::Eve, seed)?;
                (decode_transmission(&rx, &tx, &cfg.phy, &opts)?, chan)
            }
            Some(s) => {
                let sched =
                    match schedule_for(s, cfg.demo_rho, &plan, &layout, seed, e_j, cfg.rep_pulses) {
                        Ok(sched) => sched,
                        Err(_) => return Ok(None),
                    };
                let rx =
                    crate::channel::receive(&tx.stream, &sched, &cfg.channel, Receiver::Eve, seed)?;
                (decode_transmission(&rx, &tx, &cfg.phy, &opts)?, cfg.channel)
            }
        };
        let _ = chan_used;
        let recovered = recovered_payload(&results, &tx, &cfg.phy);
        let diff = payload
            .iter()
            .zip(&recovered)
            .filter(|(a, b)| a != b)
            .count() as f64
            / payload.len() as f64;
        let file = cfg.out_dir.join(format!("recovered_{tag}.bin"));
        fs::write(&file, &recovered)?;
        let log = cfg.out_dir.join(format!("decode_log_{tag}.csv"));
        let mut f = fs::File::create(&log)?;
        writeln!(f, "frame,symbol_errors,fcs_pass,htltf_corrupted")?;
        for r in &results {
            writeln!(f, "{},{},{},{}", r.frame_index, r.symbol_errors, r.fcs_pass, r.htltf_corrupted)?;
        }
        Ok(Some(DemoRow {
            scheme,
            e_j,
            byte_diff_fraction: diff,
            recovered_file: file,
        }))
    };

    if let Some(row) = demo_one(None, 0.0, "none".to_string())? {
        out.push(row);
    }
    for &scheme in &cfg.schemes {
        for &e_j in &cfg.e_j_grid {
            let tag = format!("{}_{}", scheme.name(), e_j);
            if let Some(row) = demo_one(Some(scheme), e_j, tag)? {
                out.push(row);
            }
        }
    }

    let mut summary = String::from("scheme,e_j,byte_diff_fraction,recovered_file\n");
    for r in &out {
        writeln!(
            summary,
            "{},{},{},{}",
            r.scheme.map_or("none", |s| s.name()),
            r.e_j,
            r.byte_diff_fraction,
            r.recovered_file.display()
        )
        .expect("string write");
    }
    fs::write(cfg.out_dir.join("demo_summary.csv"), summary)?;
    Ok(out)
}

/// Least-squares fit (through the origin) of the multiplying-effect
/// parameter against Monte-Carlo error counts on RepJDT cells.
pub fn calibrate_lambda(cfg: &ExperimentConfig, e_j: f64) -> Result<f64, HarnessError> {
    let (_, plan, layout, tx) = prepare_transmission(cfg)?;
    let params = AnalyticParams::from_config(&cfg.phy);
    let total = n_sym_total(&plan, &layout, &cfg.phy);
    let mut sum_xy = 0.0;
    let mut sum_xx = 0.0;
    for &rho in &cfg.rho_grid {
        for &seed in &cfg.seeds {
            let Ok(schedule) =
                schedule_for(JamScheme::RepJDt, rho, &plan, &layout, seed, e_j, cfg.rep_pulses)
            else {
                continue;
            };
            let jam = schedule.waveform();
            let budget = account_with_waveform(&schedule, &jam, &tx.stream);
            let rx = receive_with_waveform(&tx.stream, &schedule, &jam, &cfg.channel, Receiver::Eve, seed)?;
            let results = decode_transmission(&rx, &tx, &cfg.phy, &RxOptions::default())?;
            let measured = measure_ser(&results) * total;
            let pr = ser_closed_form(params.e_b, budget.p_j.unwrap_or(0.0), cfg.channel.h_ae, cfg.channel.h_je)?;
            // Uncapped prediction at lambda = 1.
            let covered = schedule.on_count() as f64 / cfg.phy.samples_per_symbol() as f64;
            let predicted = covered * cfg.phy.coded_symbols_per_ofdm() as f64 * pr;
            sum_xy += predicted * measured;
            sum_xx += predicted * predicted;
        }
    }
    if sum_xx == 0.0 {
        return Err(HarnessError::BadConfig(
            "no RepJDT cell produced a nonzero prediction".into(),
        ));
    }
    Ok(sum_xy / sum_xx)
}
