//! Baseband synthesis of the legitimate signal.
//!
//! A message becomes MAC frames (24-byte header, MSDU, CRC-32 FCS), each
//! frame becomes one HT PHY frame: 36 us of preamble followed by `n_sym`
//! OFDM symbols of 64 + 16 cyclic-prefix samples. Data bits are Gray-mapped
//! 64-QAM on 52 subcarriers of a 64-point IFFT; SIG fields carry BPSK-keyed
//! rate/length metadata; training fields carry fixed seeded unit-modulus
//! reference sequences so receivers can correlate and estimate against them.
//!
//! There is no convolutional coding: the coding rate enters the symbol
//! counting only, and each OFDM symbol's `L_DBPS` data bits are spread over
//! the `(L_DBPS/r)/log2(M)` constellation symbols with deterministic zero
//! fill (every constellation symbol carries a near-equal share of data
//! bits). The DATA field of each frame is normalized to unit mean sample
//! power after mapping.

use crate::frame::{layout_frame, FieldId, FrameLayout, LayoutError, MessagePlan, PhyConfig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use std::io::{self, Write};
use std::ops::Range;
use thiserror::Error;

/// Seed domain for the fixed preamble reference sequences.
const PREAMBLE_SEED: u64 = 0x5749_4649_4a41_4d00;

/// Complex baseband samples at a fixed rate. Idle gaps between frames are
/// not materialized; `frame_boundaries` carries the start index of each
/// frame instead.
#[derive(Debug, Clone)]
pub struct SampleStream {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    pub frame_boundaries: Vec<usize>,
}

impl SampleStream {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean squared magnitude over all samples.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Mean squared magnitude over the given per-frame window, across frames.
    pub fn mean_power_in(&self, window: &Range<usize>) -> f64 {
        let mut acc = 0.0;
        let mut n = 0usize;
        for &start in &self.frame_boundaries {
            for k in window.clone() {
                acc += self.samples[start + k].norm_sqr();
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            acc / n as f64
        }
    }

    /// Dumps the stream as little-endian interleaved f64 I/Q pairs.
    pub fn write_iq_f64le<W: Write>(&self, mut w: W) -> io::Result<()> {
        for s in &self.samples {
            w.write_all(&s.re.to_le_bytes())?;
            w.write_all(&s.im.to_le_bytes())?;
        }
        Ok(())
    }
}

/// One MAC frame: header, payload segment, CRC-32 frame check sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacFrame {
    pub header: Vec<u8>,
    pub msdu: Vec<u8>,
    pub fcs: u32,
}

impl MacFrame {
    /// Serializes to PSDU bytes: header, MSDU, FCS little-endian.
    pub fn to_psdu(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.header.len() + self.msdu.len() + 4);
        out.extend_from_slice(&self.header);
        out.extend_from_slice(&self.msdu);
        out.extend_from_slice(&self.fcs.to_le_bytes());
        out
    }

    pub fn psdu_len(&self) -> usize {
        self.header.len() + self.msdu.len() + 4
    }

    /// Recomputes the CRC and compares against the stored FCS.
    pub fn fcs_valid(&self) -> bool {
        let mut body = self.header.clone();
        body.extend_from_slice(&self.msdu);
        crc32(&body) == self.fcs
    }
}

/// IEEE CRC-32 (polynomial 0x04C11DB7, reflected, init/xorout 0xFFFFFFFF).
pub fn crc32(data: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFFu32;
    for &byte in data {
        crc ^= byte as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xEDB8_8320 & mask);
        }
    }
    !crc
}

/// A constellation point together with the bit group it encodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstellationSymbol {
    pub point: Complex64,
    pub bit_group: u8,
}

/// 64-QAM normalization: average symbol energy of the +/-1..+/-7 grid is 42.
const QAM64_SCALE: f64 = 0.15430334996209191; // 1/sqrt(42)

fn gray_decode3(g: u8) -> u8 {
    g ^ (g >> 1) ^ (g >> 2)
}

fn gray_encode3(b: u8) -> u8 {
    b ^ (b >> 1)
}

/// Maps a 6-bit group to the unit-average-energy Gray 64-QAM point.
/// Bits 5..3 select the I level, bits 2..0 the Q level.
pub fn qam64_map(bits: u8) -> ConstellationSymbol {
    debug_assert!(bits < 64);
    let i_level = 2.0 * gray_decode3(bits >> 3) as f64 - 7.0;
    let q_level = 2.0 * gray_decode3(bits & 0x7) as f64 - 7.0;
    ConstellationSymbol {
        point: Complex64::new(i_level, q_level) * QAM64_SCALE,
        bit_group: bits,
    }
}

fn demap_axis(level: f64) -> u8 {
    // Nearest of -7,-5,...,7 -> index 0..7 -> Gray code.
    let idx = (((level / QAM64_SCALE + 7.0) / 2.0).round()).clamp(0.0, 7.0) as u8;
    gray_encode3(idx)
}

/// Hard-decision nearest-neighbor demapping of a 64-QAM point.
pub fn qam64_demap(point: Complex64) -> u8 {
    (demap_axis(point.re) << 3) | demap_axis(point.im)
}

/// BPSK: bit 0 -> +1, bit 1 -> -1.
pub fn bpsk_map(bit: u8) -> Complex64 {
    if bit == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(-1.0, 0.0)
    }
}

/// The fixed reference sequences transmitted in the training fields.
#[derive(Debug, Clone)]
pub struct PreambleRef {
    /// L-STF samples, used for packet detection by cross-correlation.
    pub l_stf: Vec<Complex64>,
    /// L-LTF samples, used as the clean-noise baseline of the receiver.
    pub l_ltf: Vec<Complex64>,
    /// HT-STF samples.
    pub ht_stf: Vec<Complex64>,
    /// One 4 us HT-LTF repetition: an OFDM training symbol (body plus
    /// cyclic prefix). The field carries three repetitions and the receiver
    /// estimates the channel per subcarrier over the last one.
    pub ht_ltf: Vec<Complex64>,
    /// Known subcarrier values of the HT-LTF training symbol.
    pub ht_ltf_freq: Vec<Complex64>,
}

fn unit_modulus_sequence(tag: u64, len: usize) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(PREAMBLE_SEED ^ tag);
    (0..len)
        .map(|_| {
            let phase = rng.random::<f64>() * std::f64::consts::TAU;
            Complex64::new(phase.cos(), phase.sin())
        })
        .collect()
}

/// Builds the reference sequences for a sampling configuration. The HT-LTF
/// training symbol is rescaled so its realized time samples sit at exactly
/// unit mean power.
pub fn preamble_reference(cfg: &PhyConfig) -> PreambleRef {
    let n = 4 * cfg.samples_per_us();
    let engine = OfdmEngine::new(cfg);
    let mut ht_ltf_freq = unit_modulus_sequence(4, cfg.coded_symbols_per_ofdm());
    let mut ht_ltf = engine.symbol_to_samples(&ht_ltf_freq);
    let mean = ht_ltf.iter().map(|s| s.norm_sqr()).sum::<f64>() / ht_ltf.len() as f64;
    let g = 1.0 / mean.sqrt();
    for v in ht_ltf.iter_mut() {
        *v *= g;
    }
    for v in ht_ltf_freq.iter_mut() {
        *v *= g;
    }
    PreambleRef {
        l_stf: unit_modulus_sequence(1, n),
        l_ltf: unit_modulus_sequence(2, n),
        ht_stf: unit_modulus_sequence(3, n),
        ht_ltf,
        ht_ltf_freq,
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum WaveformError {
    #[error("payload of {got} bytes does not match plan ({want} bytes)")]
    PayloadMismatch { got: usize, want: usize },
    #[error("frame PSDU length {got} does not match layout ({want})")]
    LayoutMismatch { got: usize, want: usize },
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

/// Splits a payload into MAC frames per the plan. The last MSDU is zero
/// padded to full length; every FCS is the CRC-32 of header plus MSDU.
pub fn build_mac_frames(
    payload: &[u8],
    plan: &MessagePlan,
    cfg: &PhyConfig,
) -> Result<Vec<MacFrame>, WaveformError> {
    if payload.len() != plan.l_message_bytes {
        return Err(WaveformError::PayloadMismatch {
            got: payload.len(),
            want: plan.l_message_bytes,
        });
    }
    let mut frames = Vec::with_capacity(plan.n_frame);
    for i in 0..plan.n_frame {
        let start = i * cfg.l_msdu_bytes;
        let end = (start + cfg.l_msdu_bytes).min(payload.len());
        let mut msdu = payload[start..end].to_vec();
        msdu.resize(cfg.l_msdu_bytes, 0);
        let header = mac_header(i, cfg.mac_header_bytes);
        let mut body = header.clone();
        body.extend_from_slice(&msdu);
        let fcs = crc32(&body);
        frames.push(MacFrame { header, msdu, fcs });
    }
    Ok(frames)
}

/// Minimal deterministic data-frame header: type/subtype bytes, zeroed
/// addresses, sequence number in the last two bytes.
fn mac_header(frame_index: usize, len: usize) -> Vec<u8> {
    let mut h = vec![0u8; len];
    if len >= 2 {
        h[0] = 0x08; // data frame
        h[1] = 0x01;
    }
    if len >= 4 {
        let seq = (frame_index as u16).to_le_bytes();
        h[len - 2] = seq[0];
        h[len - 1] = seq[1];
    }
    h
}

/// Bits of a byte slice, LSB first within each byte.
pub fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(bytes.len() * 8);
    for &b in bytes {
        for i in 0..8 {
            bits.push((b >> i) & 1);
        }
    }
    bits
}

/// Inverse of [`bytes_to_bits`]; `bits.len()` must be a multiple of 8.
pub fn bits_to_bytes(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (b << i)))
        .collect()
}

/// How the `l_dbps` data bits of one OFDM symbol spread over its
/// constellation symbols: the first `rem` symbols carry `base + 1` data
/// bits, the rest `base`, each zero-filled up to `modulation_bits`.
pub fn data_bits_per_symbol(cfg: &PhyConfig) -> Vec<usize> {
    let n_cs = cfg.coded_symbols_per_ofdm();
    let base = cfg.l_dbps / n_cs;
    let rem = cfg.l_dbps % n_cs;
    (0..n_cs).map(|s| base + usize::from(s < rem)).collect()
}

/// MSB-first bit positions within a group that carry data when the group
/// holds `take` data bits. Fill bits sit at the axis MSBs: zeroing an axis
/// MSB restricts that axis to its negative half, whose average energy
/// equals the full-grid average, so partially filled symbols keep the
/// constellation's unit mean energy.
pub fn data_bit_positions(take: usize, mod_bits: usize) -> Vec<usize> {
    let half = mod_bits / 2;
    let fill = mod_bits - take;
    let fill_pos: Vec<usize> = (0..fill).map(|k| (k % 2) * half + k / 2).collect();
    (0..mod_bits).filter(|p| !fill_pos.contains(p)).collect()
}

/// Packs `take` data bits (values 0/1, MSB-significant first) into a
/// constellation bit group.
pub fn pack_group(bits: &[u8], mod_bits: usize) -> u8 {
    let positions = data_bit_positions(bits.len(), mod_bits);
    let mut group = 0u8;
    for (bit, pos) in bits.iter().zip(positions) {
        group |= bit << (mod_bits - 1 - pos);
    }
    group
}

/// Extracts the `take` data bits of a decided bit group.
pub fn unpack_group(group: u8, take: usize, mod_bits: usize) -> impl Iterator<Item = u8> {
    data_bit_positions(take, mod_bits)
        .into_iter()
        .map(move |pos| (group >> (mod_bits - 1 - pos)) & 1)
}

/// The full data-field bit sequence of one frame: 16 service zeros, PSDU
/// bits, 6 tail zeros, pad zeros.
pub fn frame_data_bits(frame: &MacFrame, layout: &FrameLayout, cfg: &PhyConfig) -> Vec<u8> {
    let mut bits = vec![0u8; 16];
    bits.extend(bytes_to_bits(&frame.to_psdu()));
    bits.extend(std::iter::repeat_n(0u8, 6 + layout.l_pad_bits));
    debug_assert_eq!(bits.len(), layout.n_sym * cfg.l_dbps);
    bits
}

/// 52 data subcarriers of a 64-point FFT: +/-1..+/-26, skipping DC and the
/// 11 guard bins.
fn subcarrier_bins(fft_len: usize, active: usize) -> Vec<usize> {
    let half = active / 2;
    let mut bins: Vec<usize> = (1..=half).collect();
    bins.extend((1..=half).rev().map(|k| fft_len - k));
    bins
}

const FFT_LEN: usize = 64;
const CP_LEN: usize = 16;

/// OFDM modulator/demodulator state shared across frames.
pub struct OfdmEngine {
    bins: Vec<usize>,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
    /// IFFT output scale making unit-energy constellations unit mean power.
    tx_scale: f64,
}

impl OfdmEngine {
    pub fn new(cfg: &PhyConfig) -> Self {
        let mut planner = FftPlanner::new();
        let n_cs = cfg.coded_symbols_per_ofdm();
        Self {
            bins: subcarrier_bins(FFT_LEN, n_cs),
            fwd: planner.plan_fft_forward(FFT_LEN),
            inv: planner.plan_fft_inverse(FFT_LEN),
            tx_scale: 1.0 / (n_cs as f64).sqrt(),
        }
    }

    /// Maps constellation points to one 80-sample OFDM symbol (64-sample
    /// body preceded by a 16-sample cyclic prefix).
    pub fn symbol_to_samples(&self, points: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(points.len(), self.bins.len());
        let mut freq = vec![Complex64::new(0.0, 0.0); FFT_LEN];
        for (p, &bin) in points.iter().zip(&self.bins) {
            freq[bin] = *p;
        }
        self.inv.process(&mut freq);
        for v in freq.iter_mut() {
            *v *= self.tx_scale;
        }
        let mut out = Vec::with_capacity(FFT_LEN + CP_LEN);
        out.extend_from_slice(&freq[FFT_LEN - CP_LEN..]);
        out.extend_from_slice(&freq);
        out
    }

    /// Recovers the constellation points from one 80-sample OFDM symbol.
    pub fn samples_to_symbol(&self, samples: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(samples.len(), FFT_LEN + CP_LEN);
        let mut body: Vec<Complex64> = samples[CP_LEN..].to_vec();
        self.fwd.process(&mut body);
        let undo = 1.0 / (FFT_LEN as f64 * self.tx_scale);
        self.bins.iter().map(|&b| body[b] * undo).collect()
    }

    pub fn samples_per_symbol(&self) -> usize {
        FFT_LEN + CP_LEN
    }
}

/// Everything the receiver side needs to score a reception: the stream plus
/// per-frame ground truth.
#[derive(Debug, Clone)]
pub struct Transmission {
    pub stream: SampleStream,
    pub frames: Vec<MacFrame>,
    /// Transmitted 6-bit constellation groups, per frame.
    pub tx_symbols: Vec<Vec<u8>>,
    /// Transmitted data-field bits, per frame.
    pub tx_bits: Vec<Vec<u8>>,
    pub layout: FrameLayout,
    pub plan: MessagePlan,
}

/// Modulates one MAC frame into its 80-samples-per-symbol baseband frame.
/// Returns the samples plus the transmitted bit groups for scoring.
pub fn modulate_frame(
    frame: &MacFrame,
    layout: &FrameLayout,
    cfg: &PhyConfig,
    engine: &OfdmEngine,
    refs: &PreambleRef,
) -> Result<(Vec<Complex64>, Vec<u8>, Vec<u8>), WaveformError> {
    if frame.psdu_len() != layout.psdu_len_bytes {
        return Err(WaveformError::LayoutMismatch {
            got: frame.psdu_len(),
            want: layout.psdu_len_bytes,
        });
    }
    let mut samples = vec![Complex64::new(0.0, 0.0); layout.n_samples_frame];

    // Training fields: fixed reference sequences (HT-LTF tiled three times).
    fill_window(&mut samples, &layout.window_of(FieldId::LStf), &refs.l_stf);
    fill_window(&mut samples, &layout.window_of(FieldId::LLtf), &refs.l_ltf);
    fill_window(&mut samples, &layout.window_of(FieldId::HtStf), &refs.ht_stf);
    fill_window(&mut samples, &layout.window_of(FieldId::HtLtf), &refs.ht_ltf);

    // SIG fields: BPSK-keyed metadata bits tiled across the window.
    let lsig = sig_bits_lsig(layout.psdu_len_bytes);
    fill_bpsk(&mut samples, &layout.window_of(FieldId::LSig), &lsig);
    let htsig = sig_bits_htsig(layout.psdu_len_bytes, cfg);
    fill_bpsk(&mut samples, &layout.window_of(FieldId::HtSig), &htsig);

    // DATA field.
    let bits = frame_data_bits(frame, layout, cfg);
    let share = data_bits_per_symbol(cfg);
    let n_cs = cfg.coded_symbols_per_ofdm();
    let mut groups = Vec::with_capacity(layout.n_sym * n_cs);
    let data_start = layout.data_start();
    let sps = engine.samples_per_symbol();
    let mut bit_cursor = 0usize;
    for sym in 0..layout.n_sym {
        let mut points = Vec::with_capacity(n_cs);
        for take in &share {
            let group = pack_group(&bits[bit_cursor..bit_cursor + take], cfg.modulation_bits as usize);
            bit_cursor += take;
            groups.push(group);
            points.push(qam64_map(group).point);
        }
        let time = engine.symbol_to_samples(&points);
        samples[data_start + sym * sps..data_start + (sym + 1) * sps].copy_from_slice(&time);
    }
    debug_assert_eq!(bit_cursor, bits.len());

    // Normalize the DATA field of this frame to unit mean sample power.
    let data = &mut samples[data_start..];
    let mean = data.iter().map(|s| s.norm_sqr()).sum::<f64>() / data.len() as f64;
    if mean > 0.0 {
        let g = 1.0 / mean.sqrt();
        for s in data.iter_mut() {
            *s *= g;
        }
    }
    Ok((samples, groups, bits))
}

fn fill_window(samples: &mut [Complex64], window: &Range<usize>, seq: &[Complex64]) {
    for (i, k) in window.clone().enumerate() {
        samples[k] = seq[i % seq.len()];
    }
}

fn fill_bpsk(samples: &mut [Complex64], window: &Range<usize>, bits: &[u8]) {
    for (i, k) in window.clone().enumerate() {
        samples[k] = bpsk_map(bits[i % bits.len()]);
    }
}

/// 24 L-SIG bits: 4-bit rate tag, 12-bit length, parity, 7 zero tail bits.
fn sig_bits_lsig(psdu_len: usize) -> Vec<u8> {
    let mut bits = Vec::with_capacity(24);
    bits.extend_from_slice(&[1, 0, 1, 1]);
    for i in 0..12 {
        bits.push(((psdu_len >> i) & 1) as u8);
    }
    let parity = bits.iter().sum::<u8>() & 1;
    bits.push(parity);
    bits.extend_from_slice(&[0; 7]);
    bits
}

/// 48 HT-SIG bits: 7-bit MCS tag, 16-bit length, zero filled.
fn sig_bits_htsig(psdu_len: usize, cfg: &PhyConfig) -> Vec<u8> {
    let mut bits = Vec::with_capacity(48);
    let mcs = cfg.modulation_bits as usize;
    for i in 0..7 {
        bits.push(((mcs >> i) & 1) as u8);
    }
    for i in 0..16 {
        bits.push(((psdu_len >> i) & 1) as u8);
    }
    bits.resize(48, 0);
    bits
}

/// Builds the whole legitimate transmission for a payload: MAC frames,
/// per-frame modulation, ground-truth symbol and bit records.
pub fn modulate_message(
    payload: &[u8],
    plan: &MessagePlan,
    cfg: &PhyConfig,
) -> Result<Transmission, WaveformError> {
    let layout = layout_frame(cfg.l_msdu_bytes + cfg.mac_overhead_bytes(), cfg)?;
    let frames = build_mac_frames(payload, plan, cfg)?;
    let engine = OfdmEngine::new(cfg);
    let refs = preamble_reference(cfg);
    let mut samples = Vec::with_capacity(plan.n_s_total);
    let mut boundaries = Vec::with_capacity(plan.n_frame);
    let mut tx_symbols = Vec::with_capacity(plan.n_frame);
    let mut tx_bits = Vec::with_capacity(plan.n_frame);
    for frame in &frames {
        boundaries.push(samples.len());
        let (frame_samples, groups, bits) = modulate_frame(frame, &layout, cfg, &engine, &refs)?;
        samples.extend(frame_samples);
        tx_symbols.push(groups);
        tx_bits.push(bits);
    }
    Ok(Transmission {
        stream: SampleStream {
            samples,
            sample_rate_hz: cfg.sample_rate_hz,
            frame_boundaries: boundaries,
        },
        frames,
        tx_symbols,
        tx_bits,
        layout,
        plan: plan.clone(),
    })
}

/// Energy per legitimate bit: `t_sym * f_s * mean|s|^2 / L_DBPS` with the
/// mean taken over DATA windows.
pub fn bit_energy(stream: &SampleStream, layout: &FrameLayout, cfg: &PhyConfig) -> f64 {
    let mean = stream.mean_power_in(&layout.data_window());
    cfg.ofdm_symbol_us * cfg.sample_rate_hz * mean / cfg.l_dbps as f64
}
