//! Receiver pipeline for Bob and Eve.
//!
//! Packet detection cross-correlates the known L-STF against the incoming
//! stream. Channel estimation least-squares fits the last HT-LTF
//! repetition against the known training symbol, one fit per subcarrier
//! (the scalar `h_hat` reported alongside is their mean); the fit residual
//! doubles as the reference noise level. The DATA field is then
//! OFDM-demapped, equalized by the fitted channel, and hard-decided to the
//! nearest constellation point. A frame whose recovered FCS mismatches is
//! discarded (but still scored symbol by symbol against the ground truth).
//!
//! Corrupting the estimation window therefore corrupts every decision in
//! the frame downstream of it; nothing special-cases that path, it falls
//! out of the equalizer being fed a garbage estimate.

use crate::frame::{FrameLayout, PhyConfig};
use crate::waveform::{
    bits_to_bytes, crc32, data_bits_per_symbol, preamble_reference, qam64_demap, unpack_group,
    OfdmEngine, PreambleRef, SampleStream, Transmission,
};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Synchronization, channel and noise-level estimates for one frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RxEstimate {
    /// Mean of the per-subcarrier channel fits.
    pub h_hat: Complex64,
    /// Per-subcarrier channel fits; the equalizer divides by these.
    #[serde(skip)]
    pub h_sub: Vec<Complex64>,
    /// Residual power of the training-field fit; the receiver's reference
    /// noise level.
    pub noise_level_hat: f64,
    pub sync_index: usize,
    /// Set when the residual exceeds the clean baseline by the configured
    /// factor: the estimate is not to be trusted.
    pub htltf_corrupted: bool,
}

/// Outcome of decoding one frame against ground truth.
#[derive(Debug, Clone, Serialize)]
pub struct DecodeResult {
    pub frame_index: usize,
    /// Recovered PSDU bytes (header, MSDU, FCS).
    #[serde(skip)]
    pub psdu: Vec<u8>,
    /// Wrong data bits vs ground truth, over the frame's data field.
    pub bit_errors: usize,
    pub n_bits: usize,
    /// Wrong constellation decisions vs ground truth.
    pub symbol_errors: usize,
    pub n_symbols: usize,
    pub fcs_pass: bool,
    /// Frames failing the FCS are discarded by a standard receiver.
    pub discarded: bool,
    pub htltf_corrupted: bool,
}

/// Receiver knobs.
#[derive(Debug, Clone, Copy)]
pub struct RxOptions {
    /// `htltf_corrupted` fires when the training residual exceeds this
    /// factor times the clean baseline.
    pub corruption_factor: f64,
    /// Minimum normalized correlation for packet detection.
    pub sync_threshold: f64,
    /// Moving-average window (in subcarriers) smoothing the per-subcarrier
    /// channel fits; valid on a frequency-flat link and standard receiver
    /// practice to reject estimation noise.
    pub est_smoothing: usize,
    /// Skip detection and trust frame boundaries (receivers co-timed with
    /// the transmitter).
    pub assume_aligned: bool,
    /// Bypass the preamble and equalize with `stale_estimate` instead of
    /// the per-frame fit (an eavesdropper reusing a previously clean
    /// estimate).
    pub bypass_preamble: bool,
    pub stale_estimate: Option<Complex64>,
}

impl Default for RxOptions {
    fn default() -> Self {
        Self {
            corruption_factor: 10.0,
            sync_threshold: 0.5,
            est_smoothing: 9,
            assume_aligned: false,
            bypass_preamble: false,
            stale_estimate: None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RxError {
    #[error("no correlation peak above {threshold} (best {best:.3} at {at})")]
    SyncFailure { threshold: f64, best: f64, at: usize },
    #[error("stream of {got} samples is shorter than one frame ({need})")]
    StreamTooShort { got: usize, need: usize },
}

/// Normalized cross-correlation of `reference` against `rx` at every lag in
/// `0..=rx.len()-reference.len()`, returning the best lag and score.
fn best_correlation(rx: &[Complex64], reference: &[Complex64]) -> (usize, f64) {
    let m = reference.len();
    let ref_energy: f64 = reference.iter().map(|s| s.norm_sqr()).sum();
    let mut best = (0usize, 0.0f64);
    for lag in 0..=rx.len().saturating_sub(m) {
        let window = &rx[lag..lag + m];
        let win_energy: f64 = window.iter().map(|s| s.norm_sqr()).sum();
        if win_energy <= 0.0 {
            continue;
        }
        let dot: Complex64 = window
            .iter()
            .zip(reference)
            .map(|(y, x)| y * x.conj())
            .sum();
        let score = dot.norm() / (ref_energy * win_energy).sqrt();
        if score > best.1 {
            best = (lag, score);
        }
    }
    best
}

/// Packet detection: the lag maximizing the normalized cross-correlation
/// with the known L-STF. Fails when no peak clears the threshold.
pub fn sync_detect(
    rx: &SampleStream,
    reference: &[Complex64],
    threshold: f64,
) -> Result<usize, RxError> {
    if rx.len() < reference.len() {
        return Err(RxError::StreamTooShort {
            got: rx.len(),
            need: reference.len(),
        });
    }
    let (lag, score) = best_correlation(&rx.samples, reference);
    if score < threshold {
        return Err(RxError::SyncFailure {
            threshold,
            best: score,
            at: lag,
        });
    }
    Ok(lag)
}

/// Centered moving average over subcarriers, clipped at the band edges.
fn smooth(values: &[Complex64], window: usize) -> Vec<Complex64> {
    if window <= 1 {
        return values.to_vec();
    }
    let half = window / 2;
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            values[lo..hi].iter().sum::<Complex64>() / (hi - lo) as f64
        })
        .collect()
}

fn ls_fit(received: &[Complex64], known: &[Complex64]) -> (Complex64, f64) {
    let denom: f64 = known.iter().map(|x| x.norm_sqr()).sum();
    let num: Complex64 = received
        .iter()
        .zip(known)
        .map(|(y, x)| y * x.conj())
        .sum();
    let h = num / denom;
    let resid: f64 = received
        .iter()
        .zip(known)
        .map(|(y, x)| (y - h * x).norm_sqr())
        .sum::<f64>()
        / known.len() as f64;
    (h, resid)
}

/// Channel/noise estimation over the last HT-LTF repetition of a synced
/// frame: a one-shot least-squares fit per subcarrier of the received
/// training symbol against the known one. The L-LTF fit residual serves as
/// the clean baseline the corruption diagnostic compares against.
pub fn estimate_htltf(
    frame: &[Complex64],
    layout: &FrameLayout,
    refs: &PreambleRef,
    engine: &OfdmEngine,
    opts: &RxOptions,
) -> RxEstimate {
    let crit = &layout.htltf_critical_window;
    let received = engine.samples_to_symbol(&frame[crit.clone()]);
    let raw: Vec<Complex64> = received
        .iter()
        .zip(&refs.ht_ltf_freq)
        .map(|(y, x)| y / x)
        .collect();
    let h_sub = smooth(&raw, opts.est_smoothing);
    let h_hat = h_sub.iter().sum::<Complex64>() / h_sub.len() as f64;
    let noise_level_hat = received
        .iter()
        .zip(&refs.ht_ltf_freq)
        .map(|(y, x)| (y - h_hat * x).norm_sqr())
        .sum::<f64>()
        / received.len() as f64;
    let lltf = layout.window_of(crate::frame::FieldId::LLtf);
    let (_, baseline_resid) = ls_fit(&frame[lltf.clone()], &refs.l_ltf);
    let lltf_power =
        frame[lltf].iter().map(|s| s.norm_sqr()).sum::<f64>() / refs.l_ltf.len() as f64;
    let baseline = baseline_resid.max(1e-9 * lltf_power).max(1e-300);
    RxEstimate {
        h_hat,
        h_sub,
        noise_level_hat,
        sync_index: 0,
        htltf_corrupted: noise_level_hat > opts.corruption_factor * baseline,
    }
}

/// Equalizes, demaps and scores the DATA field of one frame slice.
pub fn demodulate(
    frame: &[Complex64],
    layout: &FrameLayout,
    est: &RxEstimate,
    cfg: &PhyConfig,
    engine: &OfdmEngine,
    truth_symbols: &[u8],
    truth_bits: &[u8],
    frame_index: usize,
) -> DecodeResult {
    let share = data_bits_per_symbol(cfg);
    let mod_bits = cfg.modulation_bits as usize;
    let sps = engine.samples_per_symbol();
    let data_start = layout.data_start();
    let h_sub: Vec<Complex64> = est
        .h_sub
        .iter()
        .map(|h| {
            if h.norm_sqr() > 0.0 {
                *h
            } else {
                Complex64::new(1e-12, 0.0)
            }
        })
        .collect();
    let mut bits = Vec::with_capacity(layout.n_sym * cfg.l_dbps);
    let mut symbol_errors = 0usize;
    let mut group_cursor = 0usize;
    for sym in 0..layout.n_sym {
        let window = &frame[data_start + sym * sps..data_start + (sym + 1) * sps];
        let points = engine.samples_to_symbol(window);
        for ((p, take), h) in points.iter().zip(&share).zip(&h_sub) {
            let decided = qam64_demap(p / h);
            if decided != truth_symbols[group_cursor] {
                symbol_errors += 1;
            }
            group_cursor += 1;
            bits.extend(unpack_group(decided, *take, mod_bits));
        }
    }
    let bit_errors = bits.iter().zip(truth_bits).filter(|(a, b)| a != b).count();

    // Reassemble the PSDU and check its FCS.
    let psdu_bits = &bits[16..16 + 8 * layout.psdu_len_bytes];
    let psdu = bits_to_bytes(psdu_bits);
    let body_len = psdu.len() - cfg.fcs_bytes;
    let stored = u32::from_le_bytes(psdu[body_len..].try_into().expect("4-byte FCS"));
    let fcs_pass = crc32(&psdu[..body_len]) == stored;

    DecodeResult {
        frame_index,
        psdu,
        bit_errors,
        n_bits: bits.len(),
        symbol_errors,
        n_symbols: truth_symbols.len(),
        fcs_pass,
        discarded: !fcs_pass,
        htltf_corrupted: est.htltf_corrupted,
    }
}

/// Runs the full pipeline over a received stream: one sync, then per-frame
/// estimation and demodulation, scored against the transmission's ground
/// truth.
pub fn decode_transmission(
    rx: &SampleStream,
    tx: &Transmission,
    cfg: &PhyConfig,
    opts: &RxOptions,
) -> Result<Vec<DecodeResult>, RxError> {
    let layout = &tx.layout;
    let refs = preamble_reference(cfg);
    let engine = OfdmEngine::new(cfg);
    let nsf = layout.n_samples_frame;
    if rx.len() < nsf {
        return Err(RxError::StreamTooShort { got: rx.len(), need: nsf });
    }
    let sync = if opts.assume_aligned {
        0
    } else {
        // Search the span of one frame; fall back to the best peak when
        // jamming floors the correlation, the decode is scored regardless.
        let span = nsf.min(rx.len());
        let (lag, _) = best_correlation(&rx.samples[..span], &refs.l_stf);
        lag
    };
    let mut results = Vec::with_capacity(tx.plan.n_frame);
    let mut frame_buf = vec![Complex64::new(0.0, 0.0); nsf];
    for i in 0..tx.plan.n_frame {
        let start = sync + i * nsf;
        for (j, slot) in frame_buf.iter_mut().enumerate() {
            let k = start + j;
            *slot = if k < rx.len() {
                rx.samples[k]
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        let mut est = if opts.bypass_preamble {
            let stale = opts.stale_estimate.unwrap_or(Complex64::new(1.0, 0.0));
            RxEstimate {
                h_hat: stale,
                h_sub: vec![stale; cfg.coded_symbols_per_ofdm()],
                noise_level_hat: 0.0,
                sync_index: sync,
                htltf_corrupted: false,
            }
        } else {
            estimate_htltf(&frame_buf, layout, &refs, &engine, opts)
        };
        est.sync_index = sync;
        results.push(demodulate(
            &frame_buf,
            layout,
            &est,
            cfg,
            &engine,
            &tx.tx_symbols[i],
            &tx.tx_bits[i],
            i,
        ));
    }
    Ok(results)
}

/// Error fraction over all transmitted data bits. In this model every
/// wrongly decided bit is a wrongly decided M-ary symbol, so this is the
/// jamming-effect metric the rest of the crate reports as SER; it saturates
/// at 1/2 under random decisions.
pub fn measure_ser(results: &[DecodeResult]) -> f64 {
    let errors: usize = results.iter().map(|r| r.bit_errors).sum();
    let total: usize = results.iter().map(|r| r.n_bits).sum();
    if total == 0 {
        0.0
    } else {
        errors as f64 / total as f64
    }
}

/// Error fraction at constellation-symbol granularity (per-frame decode
/// logs report this alongside the bit-level metric).
pub fn measure_symbol_error_rate(results: &[DecodeResult]) -> f64 {
    let errors: usize = results.iter().map(|r| r.symbol_errors).sum();
    let total: usize = results.iter().map(|r| r.n_symbols).sum();
    if total == 0 {
        0.0
    } else {
        errors as f64 / total as f64
    }
}

/// Concatenated recovered MSDUs truncated to the original message length.
pub fn recovered_payload(results: &[DecodeResult], tx: &Transmission, cfg: &PhyConfig) -> Vec<u8> {
    let mut out = Vec::with_capacity(tx.plan.l_message_bytes);
    for r in results {
        let msdu = &r.psdu[cfg.mac_header_bytes..r.psdu.len() - cfg.fcs_bytes];
        out.extend_from_slice(msdu);
    }
    out.truncate(tx.plan.l_message_bytes);
    out
}
