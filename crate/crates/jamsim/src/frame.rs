//! HT frame and timing arithmetic.
//!
//! Everything in here is integer bookkeeping: how a message splits into MAC
//! frames, how many OFDM data symbols a frame needs, how many padding bits
//! that implies, and at which sample index each PHY field of a frame starts
//! and ends. All sample windows are 0-based and half-open.
//!
//! The preamble occupies 36 us per frame and is laid out as
//!
//! ```text
//! | L-STF | L-LTF | L-SIG | HT-SIG | HT-STF | HT-LTF          | DATA ...
//! 0       4       8       12       20       24                36 us
//! ```
//!
//! with the HT-LTF carrying three 4 us repetitions; the last repetition at
//! 32..36 us is the one the receiver's channel/noise estimate hangs on, so
//! its window is exposed separately as `htltf_critical_window`.

use serde::{Deserialize, Serialize};
use std::ops::Range;
use thiserror::Error;

/// PHY/MAC parameters for the HT 20 MHz link.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhyConfig {
    /// Baseband sampling rate in Hz.
    pub sample_rate_hz: f64,
    /// OFDM symbol duration in microseconds (body + cyclic prefix).
    pub ofdm_symbol_us: f64,
    /// Data bits carried per OFDM symbol.
    pub l_dbps: usize,
    /// Coding rate numerator (rate = num/den enters only the counting
    /// formulas; the data path itself is uncoded).
    pub coding_rate_num: u32,
    /// Coding rate denominator.
    pub coding_rate_den: u32,
    /// Bits per constellation symbol (6 -> 64-QAM).
    pub modulation_bits: u32,
    /// Maximum MSDU length in bytes.
    pub l_msdu_bytes: usize,
    /// MAC header length in bytes.
    pub mac_header_bytes: usize,
    /// FCS length in bytes.
    pub fcs_bytes: usize,
    /// Inter-frame idle time in microseconds.
    pub t_idle_us: f64,
}

impl Default for PhyConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 20e6,
            ofdm_symbol_us: 4.0,
            l_dbps: 234,
            coding_rate_num: 3,
            coding_rate_den: 4,
            modulation_bits: 6,
            l_msdu_bytes: 2304,
            mac_header_bytes: 24,
            fcs_bytes: 4,
            t_idle_us: 10.0,
        }
    }
}

impl PhyConfig {
    /// Samples per microsecond (20 at 20 MHz). Must be integral.
    pub fn samples_per_us(&self) -> usize {
        (self.sample_rate_hz * 1e-6).round() as usize
    }

    /// Samples per OFDM symbol (80 at the defaults).
    pub fn samples_per_symbol(&self) -> usize {
        (self.samples_per_us() as f64 * self.ofdm_symbol_us).round() as usize
    }

    /// MAC header plus FCS, in bytes.
    pub fn mac_overhead_bytes(&self) -> usize {
        self.mac_header_bytes + self.fcs_bytes
    }

    /// Coded (constellation) symbols per OFDM symbol: (L_DBPS / r) / log2 M.
    pub fn coded_symbols_per_ofdm(&self) -> usize {
        self.l_dbps * self.coding_rate_den as usize
            / self.coding_rate_num as usize
            / self.modulation_bits as usize
    }

    /// Checks the arithmetic invariants the rest of the crate leans on.
    pub fn validate(&self) -> Result<(), LayoutError> {
        let spu = self.sample_rate_hz * 1e-6;
        if spu <= 0.0 || (spu - spu.round()).abs() > 1e-9 {
            return Err(LayoutError::BadConfig(
                "sample_rate_hz must be a positive whole number of samples per microsecond",
            ));
        }
        if self.ofdm_symbol_us <= 0.0 || self.t_idle_us < 0.0 {
            return Err(LayoutError::BadConfig("durations must be positive"));
        }
        let sps = spu * self.ofdm_symbol_us;
        if (sps - sps.round()).abs() > 1e-9 {
            return Err(LayoutError::BadConfig(
                "sample_rate_hz x ofdm_symbol_us must be an integer sample count",
            ));
        }
        if self.coding_rate_num == 0 || self.coding_rate_den == 0 || self.modulation_bits == 0 {
            return Err(LayoutError::BadConfig("rate and modulation order must be nonzero"));
        }
        let coded_bits = self.l_dbps * self.coding_rate_den as usize;
        if coded_bits % self.coding_rate_num as usize != 0 {
            return Err(LayoutError::BadConfig("l_dbps / coding_rate must be an integer"));
        }
        if (coded_bits / self.coding_rate_num as usize) % self.modulation_bits as usize != 0 {
            return Err(LayoutError::BadConfig(
                "l_dbps / coding_rate must be divisible by modulation_bits",
            ));
        }
        if self.l_msdu_bytes == 0 || self.l_dbps == 0 {
            return Err(LayoutError::BadConfig("l_msdu_bytes and l_dbps must be nonzero"));
        }
        Ok(())
    }
}

/// PHY fields of an HT frame, in transmission order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldId {
    LStf,
    LLtf,
    LSig,
    HtSig,
    HtStf,
    HtLtf,
    Data,
}

impl FieldId {
    pub fn name(&self) -> &'static str {
        match self {
            FieldId::LStf => "L-STF",
            FieldId::LLtf => "L-LTF",
            FieldId::LSig => "L-SIG",
            FieldId::HtSig => "HT-SIG",
            FieldId::HtStf => "HT-STF",
            FieldId::HtLtf => "HT-LTF",
            FieldId::Data => "DATA",
        }
    }
}

/// Per-field durations of the 36 us preamble, in microseconds.
const PREAMBLE_LAYOUT_US: [(FieldId, usize); 6] = [
    (FieldId::LStf, 4),
    (FieldId::LLtf, 4),
    (FieldId::LSig, 4),
    (FieldId::HtSig, 8),
    (FieldId::HtStf, 4),
    (FieldId::HtLtf, 12),
];

/// Preamble duration in microseconds.
pub const PREAMBLE_US: usize = 36;
/// Start of the estimation-critical HT-LTF repetition, in microseconds.
pub const HTLTF_CRITICAL_START_US: usize = 32;

/// Sample-index map of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLayout {
    /// Ordered, gap-free field windows partitioning `0..n_samples_frame`.
    pub field_windows: Vec<(FieldId, Range<usize>)>,
    /// OFDM data symbol count.
    pub n_sym: usize,
    /// Zero padding bits appended to fill the last OFDM symbol.
    pub l_pad_bits: usize,
    /// Frame duration in microseconds.
    pub t_frame_us: f64,
    /// Total samples in one frame.
    pub n_samples_frame: usize,
    /// PSDU length this layout was computed for, in bytes.
    pub psdu_len_bytes: usize,
    /// The last HT-LTF repetition; the receiver's channel and noise-level
    /// estimate is formed over exactly this window.
    pub htltf_critical_window: Range<usize>,
}

impl FrameLayout {
    /// Sample window of the DATA field.
    pub fn data_window(&self) -> Range<usize> {
        self.field_windows
            .iter()
            .find(|(id, _)| *id == FieldId::Data)
            .map(|(_, w)| w.clone())
            .expect("layout always contains a DATA window")
    }

    /// Sample window of a preamble field.
    pub fn window_of(&self, field: FieldId) -> Range<usize> {
        self.field_windows
            .iter()
            .find(|(id, _)| *id == field)
            .map(|(_, w)| w.clone())
            .expect("unknown field")
    }

    /// First DATA sample index (end of the preamble).
    pub fn data_start(&self) -> usize {
        self.data_window().start
    }
}

/// Segmentation of a message into fixed-size MSDUs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessagePlan {
    /// Message payload size in bytes.
    pub l_message_bytes: usize,
    /// Number of MAC frames.
    pub n_frame: usize,
    /// Zero padding appended to the last MSDU, in bytes.
    pub l_pad_message_bytes: usize,
    /// Total signal duration including inter-frame idle gaps, microseconds.
    pub t_signal_us: f64,
    /// Total sample count over all frames, idle gaps excluded.
    pub n_s_total: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("message must be at least one byte")]
    EmptyMessage,
    #[error("PSDU of {got} bytes exceeds the configured bound of {bound} bytes")]
    PsduTooLong { got: usize, bound: usize },
    #[error("sample index {index} outside frame of {n_samples} samples")]
    SampleOutOfRange { index: usize, n_samples: usize },
    #[error("invalid PHY config: {0}")]
    BadConfig(&'static str),
}

/// Splits a message into frames and totals up the timing.
///
/// Every frame carries a full-length MSDU; the last one is zero padded, so
/// all frames share one layout.
pub fn plan_message(l_message_bytes: usize, cfg: &PhyConfig) -> Result<MessagePlan, LayoutError> {
    cfg.validate()?;
    if l_message_bytes == 0 {
        return Err(LayoutError::EmptyMessage);
    }
    let n_frame = l_message_bytes.div_ceil(cfg.l_msdu_bytes);
    let l_pad_message_bytes = n_frame * cfg.l_msdu_bytes - l_message_bytes;
    let layout = layout_frame(cfg.l_msdu_bytes + cfg.mac_overhead_bytes(), cfg)?;
    let t_signal_us = n_frame as f64 * (layout.t_frame_us + cfg.t_idle_us);
    let n_s_total = n_frame * layout.n_samples_frame;
    Ok(MessagePlan {
        l_message_bytes,
        n_frame,
        l_pad_message_bytes,
        t_signal_us,
        n_s_total,
    })
}

/// Computes symbol count, padding, duration and the field sample map for a
/// frame carrying `psdu_len_bytes`.
///
/// The data field must hold 16 service bits, the PSDU, and 6 tail bits,
/// rounded up to a whole number of OFDM symbols:
/// `n_sym = ceil((16 + 8*LENGTH + 6) / L_DBPS)`.
pub fn layout_frame(psdu_len_bytes: usize, cfg: &PhyConfig) -> Result<FrameLayout, LayoutError> {
    cfg.validate()?;
    if psdu_len_bytes == 0 {
        return Err(LayoutError::EmptyMessage);
    }
    let bound = cfg.l_msdu_bytes + cfg.mac_overhead_bytes();
    if psdu_len_bytes > bound {
        return Err(LayoutError::PsduTooLong { got: psdu_len_bytes, bound });
    }
    let payload_bits = 16 + 8 * psdu_len_bytes + 6;
    let n_sym = payload_bits.div_ceil(cfg.l_dbps);
    let l_pad_bits = n_sym * cfg.l_dbps - payload_bits;

    let spu = cfg.samples_per_us();
    let mut field_windows = Vec::with_capacity(PREAMBLE_LAYOUT_US.len() + 1);
    let mut cursor_us = 0usize;
    for (field, dur_us) in PREAMBLE_LAYOUT_US {
        let start = cursor_us * spu;
        cursor_us += dur_us;
        field_windows.push((field, start..cursor_us * spu));
    }
    debug_assert_eq!(cursor_us, PREAMBLE_US);
    let data_dur_us = n_sym as f64 * cfg.ofdm_symbol_us;
    let t_frame_us = PREAMBLE_US as f64 + data_dur_us;
    let n_samples_frame = PREAMBLE_US * spu + n_sym * cfg.samples_per_symbol();
    field_windows.push((FieldId::Data, PREAMBLE_US * spu..n_samples_frame));

    Ok(FrameLayout {
        field_windows,
        n_sym,
        l_pad_bits,
        t_frame_us,
        n_samples_frame,
        psdu_len_bytes,
        htltf_critical_window: HTLTF_CRITICAL_START_US * spu..PREAMBLE_US * spu,
    })
}

/// Returns the field whose window contains sample `k`.
pub fn field_of_sample(layout: &FrameLayout, k: usize) -> Result<FieldId, LayoutError> {
    if k >= layout.n_samples_frame {
        return Err(LayoutError::SampleOutOfRange {
            index: k,
            n_samples: layout.n_samples_frame,
        });
    }
    let (field, _) = layout
        .field_windows
        .iter()
        .find(|(_, w)| w.contains(&k))
        .expect("windows partition the frame");
    Ok(*field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_96_frames_for_219600_bytes() {
        let cfg = PhyConfig::default();
        let plan = plan_message(219_600, &cfg).unwrap();
        assert_eq!(plan.n_frame, 96);
        assert_eq!(plan.l_pad_message_bytes, 1584);
        assert_eq!(plan.n_s_total, 96 * 7120);
        // t_signal = N_frame * (t_frame + t_idle)
        assert!((plan.t_signal_us - 96.0 * (356.0 + 10.0)).abs() < 1e-9);
    }

    #[test]
    fn plan_exact_fit_and_minimal_message() {
        let cfg = PhyConfig::default();
        let exact = plan_message(2304, &cfg).unwrap();
        assert_eq!((exact.n_frame, exact.l_pad_message_bytes), (1, 0));
        let tiny = plan_message(1, &cfg).unwrap();
        assert_eq!((tiny.n_frame, tiny.l_pad_message_bytes), (1, 2303));
        assert_eq!(plan_message(0, &cfg), Err(LayoutError::EmptyMessage));
    }

    #[test]
    fn layout_default_psdu() {
        let cfg = PhyConfig::default();
        let layout = layout_frame(2332, &cfg).unwrap();
        assert_eq!(layout.n_sym, 80);
        assert_eq!(layout.l_pad_bits, 42);
        assert!((layout.t_frame_us - 356.0).abs() < 1e-12);
        assert_eq!(layout.n_samples_frame, 7120);
        assert_eq!(layout.htltf_critical_window, 640..720);
        assert_eq!(layout.data_window(), 720..7120);
    }

    #[test]
    fn layout_single_symbol_frame() {
        let cfg = PhyConfig::default();
        let layout = layout_frame(1, &cfg).unwrap();
        assert_eq!(layout.n_sym, 1);
        assert!((layout.t_frame_us - 40.0).abs() < 1e-12);
        assert_eq!(layout.n_samples_frame, 800);
    }

    #[test]
    fn layout_rejects_oversized_psdu() {
        let cfg = PhyConfig::default();
        assert!(matches!(
            layout_frame(2333, &cfg),
            Err(LayoutError::PsduTooLong { got: 2333, bound: 2332 })
        ));
    }

    #[test]
    fn critical_window_sits_inside_htltf() {
        let cfg = PhyConfig::default();
        for len in [1usize, 100, 2332] {
            let layout = layout_frame(len, &cfg).unwrap();
            let htltf = layout.window_of(FieldId::HtLtf);
            let crit = &layout.htltf_critical_window;
            assert!(htltf.start <= crit.start && crit.end <= htltf.end);
            assert_eq!(crit.clone(), 640..720);
        }
    }

    #[test]
    fn field_of_sample_boundaries() {
        let cfg = PhyConfig::default();
        let layout = layout_frame(2332, &cfg).unwrap();
        assert_eq!(field_of_sample(&layout, 0).unwrap(), FieldId::LStf);
        assert_eq!(field_of_sample(&layout, 650).unwrap(), FieldId::HtLtf);
        assert_eq!(field_of_sample(&layout, 720).unwrap(), FieldId::Data);
        assert_eq!(field_of_sample(&layout, 7119).unwrap(), FieldId::Data);
        assert!(field_of_sample(&layout, 7120).is_err());
    }

    #[test]
    fn windows_partition_every_layout() {
        let cfg = PhyConfig::default();
        for len in (1..2332).step_by(97).chain([2332]) {
            let layout = layout_frame(len, &cfg).unwrap();
            let mut cursor = 0;
            for (_, w) in &layout.field_windows {
                assert_eq!(w.start, cursor, "gap or overlap at {len}");
                assert!(w.end > w.start);
                cursor = w.end;
            }
            assert_eq!(cursor, layout.n_samples_frame);
            let preamble_samples = PREAMBLE_US * cfg.samples_per_us();
            assert_eq!(layout.data_start(), preamble_samples);
        }
    }

    #[test]
    fn n_sym_matches_bruteforce_oracle() {
        // Smallest n with n*L_DBPS >= 16 + 8*LENGTH + 6.
        let cfg = PhyConfig::default();
        for length in 1..=4000usize {
            let need = 16 + 8 * length + 6;
            let mut n = 1;
            while n * cfg.l_dbps < need {
                n += 1;
            }
            let cfg_wide = PhyConfig { l_msdu_bytes: 4000, ..cfg.clone() };
            let layout = layout_frame(length, &cfg_wide).unwrap();
            assert_eq!(layout.n_sym, n, "LENGTH={length}");
            assert!(layout.l_pad_bits < cfg.l_dbps);
        }
    }

    #[test]
    fn monotone_in_length_and_message_size() {
        let cfg = PhyConfig { l_msdu_bytes: 4000, ..PhyConfig::default() };
        let mut prev = 0;
        for length in 1..=4000usize {
            let n = layout_frame(length, &cfg).unwrap().n_sym;
            assert!(n >= prev);
            prev = n;
        }
        let cfg = PhyConfig::default();
        let mut prev = 0;
        for msg in (1..30_000).step_by(911) {
            let n = plan_message(msg, &cfg).unwrap().n_frame;
            assert!(n >= prev);
            assert!(plan_message(msg, &cfg).unwrap().l_pad_message_bytes < cfg.l_msdu_bytes);
            prev = n;
        }
    }
}
