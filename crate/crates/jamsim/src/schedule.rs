//! Jamming schedules: the per-sample on/off indicator over the whole frame
//! stream, the noise-like jamming waveform, and energy/power accounting.
//!
//! Six schemes are supported. CJS jams every sample. The intermittent
//! schemes trade width, count and position of jamming pulses against the
//! per-sample power a fixed energy budget buys:
//!
//! - `PerJPT`: one 4 us pulse per frame on the estimation-critical HT-LTF
//!   repetition.
//! - `PerJDT`: one pulse per frame inside the DATA field.
//! - `RepJDT`: an evenly spaced pulse train inside the DATA field.
//! - `RanJDT`: per-sample coin flips over the DATA field.
//! - `RanJFT`: per-sample coin flips over the whole frame.
//!
//! Every schedule spends its full energy budget spread evenly (constant RMS
//! amplitude) across the jammed samples, so `p_j = E_J / sum(beta)`.

use crate::frame::{FrameLayout, MessagePlan};
use crate::waveform::SampleStream;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use thiserror::Error;

/// Jamming scheme identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JamScheme {
    Cjs,
    PerJPt,
    PerJDt,
    RepJDt,
    RanJDt,
    RanJFt,
}

impl JamScheme {
    pub fn name(&self) -> &'static str {
        match self {
            JamScheme::Cjs => "CJS",
            JamScheme::PerJPt => "PerJPT",
            JamScheme::PerJDt => "PerJDT",
            JamScheme::RepJDt => "RepJDT",
            JamScheme::RanJDt => "RanJDT",
            JamScheme::RanJFt => "RanJFT",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CJS" => Some(JamScheme::Cjs),
            "PERJPT" => Some(JamScheme::PerJPt),
            "PERJDT" => Some(JamScheme::PerJDt),
            "REPJDT" => Some(JamScheme::RepJDt),
            "RANJDT" => Some(JamScheme::RanJDt),
            "RANJFT" => Some(JamScheme::RanJFt),
            _ => None,
        }
    }

    pub fn all() -> [JamScheme; 6] {
        [
            JamScheme::Cjs,
            JamScheme::PerJPt,
            JamScheme::PerJDt,
            JamScheme::RepJDt,
            JamScheme::RanJDt,
            JamScheme::RanJFt,
        ]
    }
}

/// A jamming schedule over one whole transmission.
#[derive(Debug, Clone)]
pub struct JamSchedule {
    /// Per-sample jamming indicator, `plan.n_s_total` long.
    pub beta: Vec<bool>,
    /// RMS amplitude on jammed samples: `sqrt(e_j_avail / sum(beta))`.
    pub amplitude: f64,
    pub scheme: JamScheme,
    /// Seed of the jamming waveform (and of the indicator for the random
    /// schemes).
    pub seed: u64,
    /// Energy budget this schedule spends in full.
    pub e_j_avail: f64,
    /// Samples per frame, for per-frame waveform substreams.
    pub n_samples_frame: usize,
}

/// Energy, power, proportion and jamming-to-signal accounting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JamBudget {
    pub e_j_avail: f64,
    /// Realized energy `sum(beta * |s_j|^2)`.
    pub e_j_spent: f64,
    /// Actual jamming power `e_j_spent / sum(beta)`; `None` when no sample
    /// is jammed.
    pub p_j: Option<f64>,
    /// Jammed fraction of all samples.
    pub rho: f64,
    /// Average jamming power over average legitimate signal power; `None`
    /// for an empty schedule.
    pub jsr: Option<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("jamming energy budget must be positive")]
    NoBudget,
    #[error("pulse of {t_d_us} us starting at {offset_us} us exceeds the {t_frame_us} us frame")]
    PulseExceedsFrame { t_d_us: f64, offset_us: f64, t_frame_us: f64 },
    #[error("pulse train must start inside the DATA field (offset {offset_us} us, data starts at {data_start_us} us)")]
    PulseOutsideData { offset_us: f64, data_start_us: f64 },
    #[error("pulse width shrinks below one sample")]
    PulseTooNarrow,
    #[error("proportion {0} outside (0, 1]")]
    BadProportion(f64),
    #[error("random draw selected zero samples; retry with a new seed")]
    EmptyDraw,
}

fn per_frame_beta(plan: &MessagePlan, layout: &FrameLayout, frame_beta: &[bool]) -> Vec<bool> {
    debug_assert_eq!(frame_beta.len(), layout.n_samples_frame);
    let mut beta = Vec::with_capacity(plan.n_s_total);
    for _ in 0..plan.n_frame {
        beta.extend_from_slice(frame_beta);
    }
    beta
}

fn finish(
    beta: Vec<bool>,
    scheme: JamScheme,
    seed: u64,
    e_j_avail: f64,
    layout: &FrameLayout,
) -> Result<JamSchedule, ScheduleError> {
    let on = beta.iter().filter(|&&b| b).count();
    if on == 0 {
        return Err(ScheduleError::EmptyDraw);
    }
    Ok(JamSchedule {
        beta,
        amplitude: (e_j_avail / on as f64).sqrt(),
        scheme,
        seed,
        e_j_avail,
        n_samples_frame: layout.n_samples_frame,
    })
}

/// Continuous jamming: every sample of every frame.
pub fn make_cjs(
    plan: &MessagePlan,
    layout: &FrameLayout,
    e_j_avail: f64,
    seed: u64,
) -> Result<JamSchedule, ScheduleError> {
    if e_j_avail <= 0.0 {
        return Err(ScheduleError::NoBudget);
    }
    finish(vec![true; plan.n_s_total], JamScheme::Cjs, seed, e_j_avail, layout)
}

/// Periodic jamming: one pulse of `t_d_us` per frame at `start_offset_us`
/// from the frame start, repeated every frame. Classified `PerJPT` when the
/// pulse overlaps the preamble, `PerJDT` otherwise.
pub fn make_perj(
    plan: &MessagePlan,
    layout: &FrameLayout,
    t_d_us: f64,
    start_offset_us: f64,
    e_j_avail: f64,
    seed: u64,
) -> Result<JamSchedule, ScheduleError> {
    if e_j_avail <= 0.0 {
        return Err(ScheduleError::NoBudget);
    }
    let spu = layout.n_samples_frame as f64 / layout.t_frame_us;
    if t_d_us <= 0.0 || start_offset_us < 0.0 || start_offset_us + t_d_us > layout.t_frame_us + 1e-9 {
        return Err(ScheduleError::PulseExceedsFrame {
            t_d_us,
            offset_us: start_offset_us,
            t_frame_us: layout.t_frame_us,
        });
    }
    let start = (start_offset_us * spu).round() as usize;
    let end = ((start_offset_us + t_d_us) * spu).round() as usize;
    if end <= start {
        return Err(ScheduleError::PulseTooNarrow);
    }
    let mut frame_beta = vec![false; layout.n_samples_frame];
    for b in frame_beta[start..end.min(layout.n_samples_frame)].iter_mut() {
        *b = true;
    }
    let scheme = if start < layout.data_start() {
        JamScheme::PerJPt
    } else {
        JamScheme::PerJDt
    };
    finish(per_frame_beta(plan, layout, &frame_beta), scheme, seed, e_j_avail, layout)
}

/// Preamble-targeted periodic jamming: the 4 us estimation-critical HT-LTF
/// repetition of every frame.
pub fn make_perj_pt(
    plan: &MessagePlan,
    layout: &FrameLayout,
    e_j_avail: f64,
    seed: u64,
) -> Result<JamSchedule, ScheduleError> {
    let spu = layout.n_samples_frame as f64 / layout.t_frame_us;
    let crit = &layout.htltf_critical_window;
    make_perj(
        plan,
        layout,
        (crit.end - crit.start) as f64 / spu,
        crit.start as f64 / spu,
        e_j_avail,
        seed,
    )
}

/// Repeated jamming: `n_pulse` equally spaced pulses per frame covering a
/// `duty` fraction of each period, confined to `[start_offset_us, t_frame)`.
/// The offset must sit inside the DATA field.
pub fn make_repj(
    plan: &MessagePlan,
    layout: &FrameLayout,
    n_pulse: usize,
    duty: f64,
    start_offset_us: f64,
    e_j_avail: f64,
    seed: u64,
) -> Result<JamSchedule, ScheduleError> {
    if e_j_avail <= 0.0 {
        return Err(ScheduleError::NoBudget);
    }
    if n_pulse == 0 || !(0.0..=1.0).contains(&duty) || duty == 0.0 {
        return Err(ScheduleError::BadProportion(duty));
    }
    let spu = layout.n_samples_frame as f64 / layout.t_frame_us;
    let region_start = (start_offset_us * spu).round() as usize;
    let data_start = layout.data_start();
    if region_start < data_start {
        return Err(ScheduleError::PulseOutsideData {
            offset_us: start_offset_us,
            data_start_us: data_start as f64 / spu,
        });
    }
    if region_start >= layout.n_samples_frame {
        return Err(ScheduleError::PulseExceedsFrame {
            t_d_us: 0.0,
            offset_us: start_offset_us,
            t_frame_us: layout.t_frame_us,
        });
    }
    let span = layout.n_samples_frame - region_start;
    let period = span as f64 / n_pulse as f64;
    let width = (duty * period).floor() as usize;
    if width == 0 {
        return Err(ScheduleError::PulseTooNarrow);
    }
    let mut frame_beta = vec![false; layout.n_samples_frame];
    for p in 0..n_pulse {
        let start = region_start + (p as f64 * period).floor() as usize;
        let end = (start + width).min(layout.n_samples_frame);
        for b in frame_beta[start..end].iter_mut() {
            *b = true;
        }
    }
    finish(per_frame_beta(plan, layout, &frame_beta), JamScheme::RepJDt, seed, e_j_avail, layout)
}

/// Position domain for random jamming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RanPosition {
    /// DATA field samples only.
    Dt,
    /// Every sample of the frame.
    Ft,
}

/// Random jamming: each eligible sample is jammed independently with
/// probability `rho_target`. Eligibility follows `position`. Indicator
/// draws use one substream per frame so parallel construction reproduces
/// serial results.
pub fn make_ranj(
    plan: &MessagePlan,
    layout: &FrameLayout,
    rho_target: f64,
    position: RanPosition,
    seed: u64,
    e_j_avail: f64,
) -> Result<JamSchedule, ScheduleError> {
    if e_j_avail <= 0.0 {
        return Err(ScheduleError::NoBudget);
    }
    if !(0.0..=1.0).contains(&rho_target) || rho_target == 0.0 {
        return Err(ScheduleError::BadProportion(rho_target));
    }
    let data = layout.data_window();
    let mut beta = vec![false; plan.n_s_total];
    for f in 0..plan.n_frame {
        let mut rng = frame_rng(seed, f as u64, 0xBE7A);
        let base = f * layout.n_samples_frame;
        for k in 0..layout.n_samples_frame {
            let eligible = match position {
                RanPosition::Ft => true,
                RanPosition::Dt => data.contains(&k),
            };
            // One draw per eligible sample keeps substreams aligned.
            if eligible && rng.random::<f64>() < rho_target {
                beta[base + k] = true;
            }
        }
    }
    let scheme = match position {
        RanPosition::Dt => JamScheme::RanJDt,
        RanPosition::Ft => JamScheme::RanJFt,
    };
    finish(beta, scheme, seed, e_j_avail, layout)
}

/// Deterministic per-frame RNG substream: SplitMix64 over (seed, frame, tag)
/// feeding a ChaCha stream cipher.
pub(crate) fn frame_rng(seed: u64, frame: u64, tag: u64) -> ChaCha8Rng {
    let mut x = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ frame.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 31;
    ChaCha8Rng::seed_from_u64(x)
}

impl JamSchedule {
    /// Number of jammed samples.
    pub fn on_count(&self) -> usize {
        self.beta.iter().filter(|&&b| b).count()
    }

    /// Jammed fraction of all samples.
    pub fn rho(&self) -> f64 {
        self.on_count() as f64 / self.beta.len() as f64
    }

    /// Actual jamming power `E_J / sum(beta)`.
    pub fn p_j(&self) -> f64 {
        self.e_j_avail / self.on_count() as f64
    }

    /// True when every frame's estimation-critical HT-LTF window is fully
    /// jammed.
    pub fn critical_window_fully_jammed(&self, layout: &FrameLayout) -> bool {
        let n_frames = self.beta.len() / self.n_samples_frame;
        (0..n_frames).all(|f| {
            let base = f * self.n_samples_frame;
            layout.htltf_critical_window.clone().all(|k| self.beta[base + k])
        })
    }

    /// Generates the jamming waveform: circular Gaussian noise on the jammed
    /// samples, scaled so the realized energy equals the budget exactly.
    /// One noise substream per frame.
    pub fn waveform(&self) -> SampleStream {
        let n = self.beta.len();
        let mut samples = vec![Complex64::new(0.0, 0.0); n];
        let n_frames = n / self.n_samples_frame;
        let mut raw_energy = 0.0;
        for f in 0..n_frames {
            let mut rng = frame_rng(self.seed, f as u64, 0x57AF);
            let base = f * self.n_samples_frame;
            for k in 0..self.n_samples_frame {
                if self.beta[base + k] {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    let v = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
                    raw_energy += v.norm_sqr();
                    samples[base + k] = v;
                }
            }
        }
        if raw_energy > 0.0 {
            let g = (self.e_j_avail / raw_energy).sqrt();
            for s in samples.iter_mut() {
                *s *= g;
            }
        }
        SampleStream {
            samples,
            sample_rate_hz: 0.0,
            frame_boundaries: (0..n_frames).map(|f| f * self.n_samples_frame).collect(),
        }
    }

    /// Writes the schedule as CSV rows `frame_index,start_sample,end_sample`
    /// (one row per contiguous jammed run, sample indices frame-local).
    pub fn export_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "frame_index,start_sample,end_sample")?;
        let n_frames = self.beta.len() / self.n_samples_frame;
        for f in 0..n_frames {
            let base = f * self.n_samples_frame;
            let mut run_start: Option<usize> = None;
            for k in 0..=self.n_samples_frame {
                let on = k < self.n_samples_frame && self.beta[base + k];
                match (on, run_start) {
                    (true, None) => run_start = Some(k),
                    (false, Some(s)) => {
                        writeln!(w, "{f},{s},{k}")?;
                        run_start = None;
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

/// Energy/power/proportion accounting for a schedule against a legitimate
/// stream. `p_j` and `jsr` come back `None` for an all-off schedule.
pub fn account(schedule: &JamSchedule, legit: &SampleStream) -> JamBudget {
    let waveform = schedule.waveform();
    account_with_waveform(schedule, &waveform, legit)
}

/// Accounting when the jamming waveform has already been generated.
pub fn account_with_waveform(
    schedule: &JamSchedule,
    waveform: &SampleStream,
    legit: &SampleStream,
) -> JamBudget {
    let on = schedule.on_count();
    let e_j_spent: f64 = schedule
        .beta
        .iter()
        .zip(&waveform.samples)
        .filter(|(&b, _)| b)
        .map(|(_, s)| s.norm_sqr())
        .sum();
    let rho = on as f64 / schedule.beta.len() as f64;
    if on == 0 {
        return JamBudget {
            e_j_avail: schedule.e_j_avail,
            e_j_spent: 0.0,
            p_j: None,
            rho,
            jsr: None,
        };
    }
    let p_j = e_j_spent / on as f64;
    let signal_power = legit.mean_power();
    let jsr = if signal_power > 0.0 { Some(p_j / signal_power) } else { None };
    JamBudget {
        e_j_avail: schedule.e_j_avail,
        e_j_spent,
        p_j: Some(p_j),
        rho,
        jsr,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{layout_frame, plan_message, PhyConfig};

    fn setup(n_frames: usize) -> (PhyConfig, MessagePlan, FrameLayout) {
        let cfg = PhyConfig::default();
        let plan = plan_message(n_frames * cfg.l_msdu_bytes, &cfg).unwrap();
        let layout = layout_frame(cfg.l_msdu_bytes + cfg.mac_overhead_bytes(), &cfg).unwrap();
        (cfg, plan, layout)
    }

    fn unit_stream(n: usize) -> SampleStream {
        SampleStream {
            samples: vec![Complex64::new(1.0, 0.0); n],
            sample_rate_hz: 20e6,
            frame_boundaries: vec![0],
        }
    }

    #[test]
    fn cjs_unit_amplitude_when_budget_matches_samples() {
        let (_, plan, layout) = setup(96);
        assert_eq!(plan.n_s_total, 683_520);
        let s = make_cjs(&plan, &layout, 683_520.0, 1).unwrap();
        assert!(s.beta.iter().all(|&b| b));
        assert!((s.amplitude - 1.0).abs() < 1e-12);
        assert_eq!(s.rho(), 1.0);
        // Halving the budget halves the per-sample power.
        let h = make_cjs(&plan, &layout, 341_760.0, 1).unwrap();
        assert!((h.p_j() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn perj_pt_hits_exactly_the_critical_window() {
        let (_, plan, layout) = setup(3);
        let s = make_perj_pt(&plan, &layout, 100.0, 1).unwrap();
        assert_eq!(s.scheme, JamScheme::PerJPt);
        for f in 0..3 {
            let base = f * 7120;
            for k in 0..7120 {
                let expect = (640..720).contains(&k);
                assert_eq!(s.beta[base + k], expect, "frame {f} sample {k}");
            }
        }
        assert!(s.critical_window_fully_jammed(&layout));
    }

    #[test]
    fn perj_full_frame_equals_cjs_indicator() {
        let (_, plan, layout) = setup(2);
        let s = make_perj(&plan, &layout, layout.t_frame_us, 0.0, 5.0, 1).unwrap();
        let c = make_cjs(&plan, &layout, 5.0, 1).unwrap();
        assert_eq!(s.beta, c.beta);
    }

    #[test]
    fn perj_dt_first_ten_data_symbols() {
        let (_, plan, layout) = setup(4);
        let s = make_perj(&plan, &layout, 40.0, 36.0, 10.0, 1).unwrap();
        assert_eq!(s.scheme, JamScheme::PerJDt);
        let per_frame: usize = s.beta[..7120].iter().filter(|&&b| b).count();
        assert_eq!(per_frame, 800);
        assert!((s.rho() - 800.0 / 7120.0).abs() < 1e-12);
        // DT discipline: nothing in the preamble.
        assert!(!s.beta[..720].iter().any(|&b| b));
    }

    #[test]
    fn perj_rejects_pulse_past_frame_end() {
        let (_, plan, layout) = setup(1);
        assert!(matches!(
            make_perj(&plan, &layout, 40.0, 330.0, 1.0, 1),
            Err(ScheduleError::PulseExceedsFrame { .. })
        ));
    }

    #[test]
    fn repj_pulse_train_spacing() {
        let (_, plan, layout) = setup(2);
        // data span 6400 samples, 4 pulses at duty 0.25: 400 on, 1200 off.
        let s = make_repj(&plan, &layout, 4, 0.25, 36.0, 8.0, 1).unwrap();
        for p in 0..4 {
            let start = 720 + p * 1600;
            for k in start..start + 400 {
                assert!(s.beta[k], "pulse {p} sample {k}");
            }
            for k in start + 400..(start + 1600).min(7120) {
                assert!(!s.beta[k], "gap {p} sample {k}");
            }
        }
        let on = s.on_count();
        assert_eq!(on, 4 * 400 * 2);
        assert!((s.rho() - on as f64 / plan.n_s_total as f64).abs() < 1e-15);
    }

    #[test]
    fn repj_single_full_pulse_covers_data_field() {
        let (_, plan, layout) = setup(1);
        let s = make_repj(&plan, &layout, 1, 1.0, 36.0, 1.0, 1).unwrap();
        for k in 0..7120 {
            assert_eq!(s.beta[k], k >= 720);
        }
    }

    #[test]
    fn repj_rejects_preamble_offset_and_subsample_width() {
        let (_, plan, layout) = setup(1);
        assert!(matches!(
            make_repj(&plan, &layout, 2, 0.5, 10.0, 1.0, 1),
            Err(ScheduleError::PulseOutsideData { .. })
        ));
        assert!(matches!(
            make_repj(&plan, &layout, 6400, 0.5, 36.0, 1.0, 1),
            Err(ScheduleError::PulseTooNarrow)
        ));
    }

    #[test]
    fn ranj_probability_one_jams_everything() {
        let (_, plan, layout) = setup(2);
        let s = make_ranj(&plan, &layout, 1.0, RanPosition::Ft, 42, 1.0).unwrap();
        assert!(s.beta.iter().all(|&b| b));
        assert_eq!(s.scheme, JamScheme::RanJFt);
    }

    #[test]
    fn ranj_dt_concentrates_and_respects_data_window() {
        let (_, plan, layout) = setup(5);
        let s = make_ranj(&plan, &layout, 0.5, RanPosition::Dt, 7, 1.0).unwrap();
        let data = layout.data_window();
        let mut on_data = 0usize;
        for f in 0..5 {
            let base = f * 7120;
            for k in 0..7120 {
                if s.beta[base + k] {
                    assert!(data.contains(&k));
                    on_data += 1;
                }
            }
        }
        let n_eligible = 5 * 6400;
        let sigma = (0.5 * 0.5 * n_eligible as f64).sqrt();
        let dev = (on_data as f64 - 0.5 * n_eligible as f64).abs();
        assert!(dev < 3.0 * sigma, "deviation {dev} vs 3 sigma {}", 3.0 * sigma);
    }

    #[test]
    fn ranj_same_seed_reproduces_indicator() {
        let (_, plan, layout) = setup(3);
        let a = make_ranj(&plan, &layout, 0.2, RanPosition::Dt, 11, 1.0).unwrap();
        let b = make_ranj(&plan, &layout, 0.2, RanPosition::Dt, 11, 1.0).unwrap();
        assert_eq!(a.beta, b.beta);
        let c = make_ranj(&plan, &layout, 0.2, RanPosition::Dt, 12, 1.0).unwrap();
        assert_ne!(a.beta, c.beta);
    }

    #[test]
    fn waveform_spends_exactly_the_budget() {
        let (_, plan, layout) = setup(2);
        for (i, e_j) in [1.0, 17.3, 9000.0].into_iter().enumerate() {
            let s = make_repj(&plan, &layout, 3, 0.4, 36.0, e_j, i as u64).unwrap();
            let w = s.waveform();
            let spent: f64 = w.samples.iter().map(|v| v.norm_sqr()).sum();
            assert!((spent - e_j).abs() / e_j < 1e-9, "budget {e_j} spent {spent}");
            // Nothing leaks outside the indicator.
            for (b, v) in s.beta.iter().zip(&w.samples) {
                assert!(*b || v.norm_sqr() == 0.0);
            }
        }
    }

    #[test]
    fn account_on_constructed_half_stream() {
        let (_, plan, layout) = setup(1);
        // Jam exactly half the samples; per-sample |s_j|^2 = 2 after the
        // budget spreads over them.
        let s = make_perj(&plan, &layout, layout.t_frame_us / 2.0, 0.0, 7120.0, 3).unwrap();
        assert_eq!(s.on_count(), 3560);
        let legit = unit_stream(plan.n_s_total);
        let b = account(&s, &legit);
        assert!((b.e_j_spent - 7120.0).abs() / 7120.0 < 1e-9);
        assert!((b.p_j.unwrap() - 2.0).abs() < 1e-9);
        assert!((b.rho - 0.5).abs() < 1e-12);
        assert!((b.jsr.unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn cjs_budget_equal_to_samples_gives_unit_jsr() {
        let (_, plan, layout) = setup(2);
        let s = make_cjs(&plan, &layout, plan.n_s_total as f64, 5).unwrap();
        let legit = unit_stream(plan.n_s_total);
        let b = account(&s, &legit);
        assert!((b.jsr.unwrap() - 1.0).abs() < 1e-9);
        assert!((b.p_j.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn halving_width_doubles_power_exactly() {
        let (_, plan, layout) = setup(2);
        let full = make_perj(&plan, &layout, 40.0, 36.0, 64.0, 1).unwrap();
        let half = make_perj(&plan, &layout, 20.0, 36.0, 64.0, 1).unwrap();
        assert_eq!(full.on_count(), 2 * half.on_count());
        assert_eq!(half.p_j(), 2.0 * full.p_j());
    }

    #[test]
    fn csv_export_lists_pulse_runs() {
        let (_, plan, layout) = setup(2);
        let s = make_perj_pt(&plan, &layout, 1.0, 1).unwrap();
        let mut buf = Vec::new();
        s.export_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "frame_index,start_sample,end_sample");
        assert_eq!(lines[1], "0,640,720");
        assert_eq!(lines[2], "1,640,720");
        assert_eq!(lines.len(), 3);
    }
}
