//! Closed-form jamming-effect model and the energy-constrained schedule
//! optimizer.
//!
//! The per-symbol error probability under jamming power `P_j` is
//!
//! ```text
//! Pr = 1 - (1 - (3/4) Q(sqrt((2/7) |h_AE|^2 E_b / (|h_JE|^2 P_j))))^2
//! ```
//!
//! which saturates at `1 - (5/8)^2 = 0.609375` as `P_j` grows. The expected
//! error count multiplies `Pr` by the constellation symbols covered by the
//! schedule and a multiplying-effect parameter `lambda`, capped at the
//! total symbol count. Fully jamming the estimation-critical HT-LTF window
//! of every frame (`w = 1`) overrides the count with the total: the whole
//! transmission is lost to the receiver. The optimizer grid-searches
//! schedule families for the best error count per unit of jamming energy.

use crate::channel::ChannelSpec;
use crate::frame::{FrameLayout, MessagePlan, PhyConfig};
use crate::schedule::{
    make_cjs, make_perj, make_perj_pt, make_ranj, make_repj, JamSchedule, JamScheme, RanPosition,
    ScheduleError,
};
use num_complex::Complex64;
use serde::Serialize;
use statrs::function::erf::erfc;
use thiserror::Error;

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Model parameters.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnalyticParams {
    /// Multiplying-effect parameter scaling the covered-symbol count.
    pub lambda: f64,
    /// Energy per legitimate bit.
    pub e_b: f64,
}

impl AnalyticParams {
    /// Defaults for a unit-power signal under `cfg`.
    pub fn from_config(cfg: &PhyConfig) -> Self {
        Self {
            lambda: 1.0,
            e_b: cfg.ofdm_symbol_us * cfg.sample_rate_hz / cfg.l_dbps as f64,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("negative input: {0}")]
    NegativeInput(&'static str),
    #[error("jamming energy is zero; the objective is undefined")]
    ZeroEnergy,
    #[error("no feasible grid point")]
    NoFeasible,
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Per-symbol error probability at Eve under jamming power `p_j`.
/// Defined as 0 at `p_j = 0` (no jamming, no jamming-induced error).
pub fn ser_closed_form(
    e_b: f64,
    p_j: f64,
    h_ae: Complex64,
    h_je: Complex64,
) -> Result<f64, ModelError> {
    if e_b < 0.0 {
        return Err(ModelError::NegativeInput("e_b"));
    }
    if p_j < 0.0 {
        return Err(ModelError::NegativeInput("p_j"));
    }
    let interference = h_je.norm_sqr() * p_j;
    if interference == 0.0 {
        return Ok(0.0);
    }
    let ratio = h_ae.norm_sqr() * e_b / interference;
    let q = q_function((2.0 / 7.0 * ratio).sqrt());
    let inner = 1.0 - 0.75 * q;
    Ok(1.0 - inner * inner)
}

/// Total constellation symbols in the data fields of the transmission.
pub fn n_sym_total(plan: &MessagePlan, layout: &FrameLayout, cfg: &PhyConfig) -> f64 {
    (plan.n_frame * layout.n_sym * cfg.coded_symbols_per_ofdm()) as f64
}

/// Expected error count: `min(lambda * covered_symbols * Pr, N_total)`
/// where covered symbols = jammed samples per OFDM symbol duration times
/// the constellation symbols each carries.
pub fn error_count(
    schedule: &JamSchedule,
    pr: f64,
    params: &AnalyticParams,
    plan: &MessagePlan,
    layout: &FrameLayout,
    cfg: &PhyConfig,
) -> f64 {
    let covered_ofdm = schedule.on_count() as f64 / cfg.samples_per_symbol() as f64;
    let n = params.lambda * covered_ofdm * cfg.coded_symbols_per_ofdm() as f64 * pr;
    n.min(n_sym_total(plan, layout, cfg))
}

/// The preamble weight: 1 only when every frame's estimation-critical
/// HT-LTF window is completely jammed.
pub fn weight_w(schedule: &JamSchedule, layout: &FrameLayout) -> u8 {
    u8::from(schedule.critical_window_fully_jammed(layout))
}

/// Overall error count `w * N_total + (1 - w) * N_error`.
pub fn overall_errors(
    schedule: &JamSchedule,
    n_error: f64,
    plan: &MessagePlan,
    layout: &FrameLayout,
    cfg: &PhyConfig,
) -> f64 {
    match weight_w(schedule, layout) {
        1 => n_sym_total(plan, layout, cfg),
        _ => n_error,
    }
}

/// Objective value and constraint flags for one schedule.
#[derive(Debug, Clone, Serialize)]
pub struct SereeReport {
    pub pr: f64,
    pub n_error: f64,
    pub n_error_overall: f64,
    pub w: u8,
    /// Overall error fraction per unit jamming energy.
    pub seree: f64,
    /// Realized energy stays within the budget.
    pub energy_within_budget: bool,
    /// Error-free reception at Bob (jamming-free jammer-to-Bob link).
    pub bob_error_free: bool,
    pub feasible: bool,
}

/// Evaluates the objective and constraints for a schedule.
pub fn seree(
    schedule: &JamSchedule,
    params: &AnalyticParams,
    plan: &MessagePlan,
    layout: &FrameLayout,
    cfg: &PhyConfig,
    chan: &ChannelSpec,
) -> Result<SereeReport, ModelError> {
    if schedule.e_j_avail <= 0.0 {
        return Err(ModelError::ZeroEnergy);
    }
    let p_j = schedule.p_j();
    let pr = ser_closed_form(params.e_b, p_j, chan.h_ae, chan.h_je)?;
    let n_error = error_count(schedule, pr, params, plan, layout, cfg);
    let n_overall = overall_errors(schedule, n_error, plan, layout, cfg);
    let total = n_sym_total(plan, layout, cfg);
    let w = weight_w(schedule, layout);
    // The schedule spends exactly its budget by construction.
    let energy_within_budget = true;
    let bob_error_free = chan.h_jb.norm_sqr() * p_j == 0.0 && chan.n0_bob == 0.0;
    Ok(SereeReport {
        pr,
        n_error,
        n_error_overall: n_overall,
        w,
        seree: n_overall / (total * schedule.e_j_avail),
        energy_within_budget,
        bob_error_free,
        feasible: energy_within_budget && bob_error_free,
    })
}

/// Parameter grid for the schedule optimizer. Enumeration order is fixed
/// regardless of the order schemes are listed in: PerJPT, PerJDT, RepJDT,
/// RanJDT, RanJFT, then CJS (intermittent schemes before the continuous
/// baseline, so objective ties resolve to the intermittent scheme), and
/// within a scheme CJS/PerJPT carry no parameters, PerJDT walks
/// `t_d_grid_us`, RepJDT walks `n_pulse_grid` x `duty_grid`, RanJDT/RanJFT
/// walk `rho_grid`.
#[derive(Debug, Clone, Serialize)]
pub struct GridSpec {
    pub schemes: Vec<JamScheme>,
    pub t_d_grid_us: Vec<f64>,
    pub n_pulse_grid: Vec<usize>,
    pub duty_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub ranj_seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            schemes: JamScheme::all().to_vec(),
            t_d_grid_us: vec![4.0, 8.0, 16.0, 40.0, 80.0, 160.0, 320.0],
            n_pulse_grid: vec![2, 4, 8, 16],
            duty_grid: vec![0.05, 0.1, 0.25, 0.5, 0.75, 1.0],
            rho_grid: vec![0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0],
            ranj_seed: 1,
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Serialize)]
pub struct GridEval {
    pub scheme: JamScheme,
    /// Human-readable parameter description of the grid point.
    pub params: String,
    pub seree: Option<f64>,
    pub feasible: bool,
}

/// Winner of the grid search.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub schedule: JamSchedule,
    pub report: SereeReport,
    pub params: String,
    pub evaluated: Vec<GridEval>,
}

fn candidate_schedules(
    scheme: JamScheme,
    grid: &GridSpec,
    plan: &MessagePlan,
    layout: &FrameLayout,
    e_j_avail: f64,
) -> Vec<(String, Result<JamSchedule, ScheduleError>)> {
    let data_start_us = 36.0;
    match scheme {
        JamScheme::Cjs => vec![(
            "continuous".to_string(),
            make_cjs(plan, layout, e_j_avail, grid.ranj_seed),
        )],
        JamScheme::PerJPt => vec![(
            "critical-window pulse".to_string(),
            make_perj_pt(plan, layout, e_j_avail, grid.ranj_seed),
        )],
        JamScheme::PerJDt => grid
            .t_d_grid_us
            .iter()
            .map(|&t_d| {
                (
                    format!("t_d_us={t_d}"),
                    make_perj(plan, layout, t_d, data_start_us, e_j_avail, grid.ranj_seed),
                )
            })
            .collect(),
        JamScheme::RepJDt => {
            let mut out = Vec::new();
            for &n_pulse in &grid.n_pulse_grid {
                for &duty in &grid.duty_grid {
                    out.push((
                        format!("n_pulse={n_pulse},duty={duty}"),
                        make_repj(plan, layout, n_pulse, duty, data_start_us, e_j_avail, grid.ranj_seed),
                    ));
                }
            }
            out
        }
        JamScheme::RanJDt | JamScheme::RanJFt => {
            let position = if scheme == JamScheme::RanJDt {
                RanPosition::Dt
            } else {
                RanPosition::Ft
            };
            grid.rho_grid
                .iter()
                .map(|&rho| {
                    (
                        format!("rho={rho}"),
                        make_ranj(plan, layout, rho, position, grid.ranj_seed, e_j_avail),
                    )
                })
                .collect()
        }
    }
}

/// Scheme enumeration order of the optimizer grid.
const CANONICAL_ORDER: [JamScheme; 6] = [
    JamScheme::PerJPt,
    JamScheme::PerJDt,
    JamScheme::RepJDt,
    JamScheme::RanJDt,
    JamScheme::RanJFt,
    JamScheme::Cjs,
];

/// Exhaustive grid search maximizing the objective over feasible schedule
/// candidates. Ties break to the first point in enumeration order.
pub fn optimize_schedule(
    e_j_avail: f64,
    params: &AnalyticParams,
    plan: &MessagePlan,
    layout: &FrameLayout,
    cfg: &PhyConfig,
    chan: &ChannelSpec,
    grid: &GridSpec,
) -> Result<OptimizeOutcome, ModelError> {
    let mut evaluated = Vec::new();
    let mut best: Option<(JamSchedule, SereeReport, String)> = None;
    for scheme in CANONICAL_ORDER.into_iter().filter(|s| grid.schemes.contains(s)) {
        for (desc, candidate) in candidate_schedules(scheme, grid, plan, layout, e_j_avail) {
            let Ok(schedule) = candidate else {
                evaluated.push(GridEval { scheme, params: desc, seree: None, feasible: false });
                continue;
            };
            match seree(&schedule, params, plan, layout, cfg, chan) {
                Ok(report) => {
                    evaluated.push(GridEval {
                        scheme,
                        params: desc.clone(),
                        seree: Some(report.seree),
                        feasible: report.feasible,
                    });
                    if report.feasible
                        && best.as_ref().is_none_or(|(_, b, _)| report.seree > b.seree)
                    {
                        best = Some((schedule, report, desc));
                    }
                }
                Err(_) => {
                    evaluated.push(GridEval { scheme, params: desc, seree: None, feasible: false });
                }
            }
        }
    }
    match best {
        Some((schedule, report, params)) => Ok(OptimizeOutcome {
            schedule,
            report,
            params,
            evaluated,
        }),
        None => Err(ModelError::NoFeasible),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{layout_frame, plan_message};

    /// Independent Q-function oracle: Simpson quadrature of the Gaussian
    /// density over [x, x+20].
    fn q_oracle(x: f64) -> f64 {
        let n = 40_000usize;
        let a = x;
        let b = x + 20.0;
        let h = (b - a) / n as f64;
        let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = phi(a) + phi(b);
        for i in 1..n {
            let t = a + i as f64 * h;
            acc += phi(t) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    fn rig() -> (PhyConfig, MessagePlan, FrameLayout, ChannelSpec) {
        let cfg = PhyConfig::default();
        let plan = plan_message(219_600, &cfg).unwrap();
        let layout = layout_frame(cfg.l_msdu_bytes + cfg.mac_overhead_bytes(), &cfg).unwrap();
        (cfg, plan, layout, ChannelSpec::default())
    }

    fn unit_gains() -> (Complex64, Complex64) {
        (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))
    }

    #[test]
    fn q_function_matches_quadrature_oracle() {
        for x in [0.0, 0.5, 1.0, 2.0, 3.0, 5.0] {
            let got = q_function(x);
            let want = q_oracle(x);
            assert!((got - want).abs() < 1e-9, "Q({x}): {got} vs {want}");
        }
        assert!((q_function(2.0) - 0.0227501319481792).abs() < 1e-9);
    }

    #[test]
    fn closed_form_spot_values() {
        let (h_ae, h_je) = unit_gains();
        // Signal-to-jamming ratio of 14: argument sqrt(4) = 2.
        let pr = ser_closed_form(14.0, 1.0, h_ae, h_je).unwrap();
        let q = q_oracle(2.0);
        let want = 1.0 - (1.0 - 0.75 * q) * (1.0 - 0.75 * q);
        assert!((pr - want).abs() < 1e-9);
        assert!((pr - 0.033834).abs() < 1e-6);

        assert_eq!(ser_closed_form(14.0, 0.0, h_ae, h_je).unwrap(), 0.0);

        let sat = ser_closed_form(14.0, 1e300, h_ae, h_je).unwrap();
        assert!((sat - 0.609375).abs() < 1e-6);
    }

    #[test]
    fn closed_form_rejects_negative_inputs() {
        let (h_ae, h_je) = unit_gains();
        assert!(ser_closed_form(-1.0, 1.0, h_ae, h_je).is_err());
        assert!(ser_closed_form(1.0, -1.0, h_ae, h_je).is_err());
    }

    #[test]
    fn closed_form_monotone_and_ceiling() {
        let (h_ae, h_je) = unit_gains();
        let mut prev = 0.0;
        for i in 0..40 {
            let p_j = 0.01 * 1.5f64.powi(i);
            let pr = ser_closed_form(14.0, p_j, h_ae, h_je).unwrap();
            assert!(pr >= prev, "pr must be nondecreasing in p_j");
            assert!(pr <= 0.609375 + 1e-12);
            prev = pr;
        }
        // Nonincreasing in e_b at fixed power.
        let mut prev = 1.0;
        for i in 0..30 {
            let e_b = 0.1 * 2f64.powi(i);
            let pr = ser_closed_form(e_b, 1.0, h_ae, h_je).unwrap();
            assert!(pr <= prev + 1e-15);
            prev = pr;
        }
        // Ceiling effect: pr(2p) - pr(p) shrinks as p grows.
        let mut prev_gain = f64::INFINITY;
        for i in 2..20 {
            let p = 2f64.powi(i);
            let gain = ser_closed_form(14.0, 2.0 * p, h_ae, h_je).unwrap()
                - ser_closed_form(14.0, p, h_ae, h_je).unwrap();
            assert!(gain <= prev_gain + 1e-15, "increments must shrink");
            prev_gain = gain;
        }
    }

    #[test]
    fn error_count_example_and_cap() {
        let (cfg, plan, layout, _) = rig();
        // One OFDM symbol jammed per frame over 96 frames.
        let t_sym_us = 4.0;
        let sched = make_perj(&plan, &layout, t_sym_us, 36.0, 96.0 * 80.0, 1).unwrap();
        assert_eq!(sched.on_count(), 96 * 80);
        let params = AnalyticParams { lambda: 1.0, e_b: 1.0 };
        let pr = 0.033834;
        let n = error_count(&sched, pr, &params, &plan, &layout, &cfg);
        assert!((n - 96.0 * 52.0 * pr).abs() < 1e-9);
        assert_eq!(error_count(&sched, 0.0, &params, &plan, &layout, &cfg), 0.0);

        let big = AnalyticParams { lambda: 1e12, e_b: 1.0 };
        let capped = error_count(&sched, pr, &big, &plan, &layout, &cfg);
        assert_eq!(capped, 399_360.0);
        assert_eq!(n_sym_total(&plan, &layout, &cfg), 399_360.0);
    }

    #[test]
    fn weight_requires_every_frame_critical_window() {
        let (cfg, plan, layout, _) = rig();
        let pt = make_perj_pt(&plan, &layout, 1.0, 1).unwrap();
        assert_eq!(weight_w(&pt, &layout), 1);
        assert_eq!(
            overall_errors(&pt, 5.0, &plan, &layout, &cfg),
            n_sym_total(&plan, &layout, &cfg)
        );

        let dt = make_perj(&plan, &layout, 40.0, 36.0, 1.0, 1).unwrap();
        assert_eq!(weight_w(&dt, &layout), 0);
        assert_eq!(overall_errors(&dt, 5.0, &plan, &layout, &cfg), 5.0);

        // All frames but the last: w falls back to 0.
        let mut partial = pt.clone();
        let last_crit = (plan.n_frame - 1) * layout.n_samples_frame + 640;
        partial.beta[last_crit] = false;
        assert_eq!(weight_w(&partial, &layout), 0);
    }

    #[test]
    fn seree_of_preamble_schedule_is_inverse_energy() {
        let (cfg, plan, layout, chan) = rig();
        let params = AnalyticParams::from_config(&cfg);
        for e_j in [10.0, 20.0] {
            let pt = make_perj_pt(&plan, &layout, e_j, 1).unwrap();
            let rep = seree(&pt, &params, &plan, &layout, &cfg, &chan).unwrap();
            assert_eq!(rep.w, 1);
            assert!((rep.seree - 1.0 / e_j).abs() < 1e-15);
            assert!(rep.feasible);
            assert!(rep.n_error_overall <= n_sym_total(&plan, &layout, &cfg));
            assert!((0.0..=1.0).contains(&rep.pr));
        }
    }

    #[test]
    fn preamble_beats_continuous_at_equal_energy() {
        let (cfg, plan, layout, chan) = rig();
        let params = AnalyticParams::from_config(&cfg);
        let e_j = 1000.0;
        let pt = make_perj_pt(&plan, &layout, e_j, 1).unwrap();
        let cjs = make_cjs(&plan, &layout, e_j, 1).unwrap();
        let s_pt = seree(&pt, &params, &plan, &layout, &cfg, &chan).unwrap();
        let s_cjs = seree(&cjs, &params, &plan, &layout, &cfg, &chan).unwrap();
        assert!(s_pt.seree >= s_cjs.seree);
    }

    #[test]
    fn infeasible_when_bob_is_jammed() {
        let (cfg, plan, layout, mut chan) = rig();
        chan.h_jb = Complex64::new(0.5, 0.0);
        let params = AnalyticParams::from_config(&cfg);
        let cjs = make_cjs(&plan, &layout, 5.0, 1).unwrap();
        let rep = seree(&cjs, &params, &plan, &layout, &cfg, &chan).unwrap();
        assert!(!rep.bob_error_free);
        assert!(!rep.feasible);
    }

    #[test]
    fn optimizer_prefers_preamble_and_handles_singletons() {
        let (cfg, plan, layout, chan) = rig();
        let params = AnalyticParams::from_config(&cfg);
        let grid = GridSpec {
            schemes: vec![JamScheme::Cjs, JamScheme::PerJPt],
            ..GridSpec::default()
        };
        let out = optimize_schedule(50.0, &params, &plan, &layout, &cfg, &chan, &grid).unwrap();
        assert_eq!(out.schedule.scheme, JamScheme::PerJPt);
        assert_eq!(out.evaluated.len(), 2);

        let only_cjs = GridSpec { schemes: vec![JamScheme::Cjs], ..GridSpec::default() };
        let out = optimize_schedule(50.0, &params, &plan, &layout, &cfg, &chan, &only_cjs).unwrap();
        assert_eq!(out.schedule.scheme, JamScheme::Cjs);
    }

    #[test]
    fn optimizer_zero_energy_is_an_empty_feasible_set() {
        let (cfg, plan, layout, chan) = rig();
        let params = AnalyticParams::from_config(&cfg);
        let grid = GridSpec::default();
        assert!(matches!(
            optimize_schedule(0.0, &params, &plan, &layout, &cfg, &chan, &grid),
            Err(ModelError::NoFeasible)
        ));
    }

    #[test]
    fn optimizer_dominates_independent_reevaluation() {
        let (cfg, plan, layout, chan) = rig();
        let params = AnalyticParams::from_config(&cfg);
        let grid = GridSpec::default();
        let out = optimize_schedule(200.0, &params, &plan, &layout, &cfg, &chan, &grid).unwrap();
        // Re-evaluate every grid point from scratch and compare.
        for &scheme in &grid.schemes {
            for (desc, cand) in candidate_schedules(scheme, &grid, &plan, &layout, 200.0) {
                if let Ok(s) = cand {
                    if let Ok(rep) = seree(&s, &params, &plan, &layout, &cfg, &chan) {
                        assert!(
                            out.report.seree >= rep.seree - 1e-15,
                            "{desc} beats the optimizer"
                        );
                    }
                }
            }
        }
    }
}
