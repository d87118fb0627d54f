//! Flat complex-gain links with additive white Gaussian noise.
//!
//! Reception at Bob or Eve follows the discrete model
//! `r(k) = h * s(k) + h_j * beta(k+d) * s_j(k+d) + n(k)` with scalar gains
//! per link, a single configurable jammer timing offset `d`, and seeded
//! per-frame noise substreams. Jamming-free reception at Bob stands in for
//! zero-beamforming/cancellation on the jammer-to-Bob link: `h_jb = 0`.

use crate::schedule::{frame_rng, JamSchedule};
use crate::waveform::SampleStream;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Link gains and noise levels for the four channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub h_ab: Complex64,
    pub h_ae: Complex64,
    pub h_jb: Complex64,
    pub h_je: Complex64,
    /// Noise variance per complex sample at Bob.
    pub n0_bob: f64,
    /// Noise variance per complex sample at Eve.
    pub n0_eve: f64,
    /// Jammer timing offset in samples; shifts only the jamming component,
    /// zero filled at the stream edges.
    pub sync_offset_samples: i64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            h_ab: Complex64::new(1.0, 0.0),
            h_ae: Complex64::new(1.0, 0.0),
            h_jb: Complex64::new(0.0, 0.0),
            h_je: Complex64::new(1.0, 0.0),
            n0_bob: 0.0,
            n0_eve: 1e-3,
            sync_offset_samples: 0,
        }
    }
}

impl ChannelSpec {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.n0_bob < 0.0 || self.n0_eve < 0.0 {
            return Err(ChannelError::NegativeNoise);
        }
        for h in [self.h_ab, self.h_ae, self.h_jb, self.h_je] {
            if !h.re.is_finite() || !h.im.is_finite() {
                return Err(ChannelError::NonFiniteGain);
            }
        }
        Ok(())
    }
}

/// Which receiver the reception is computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Receiver {
    Bob,
    Eve,
}

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("legitimate stream ({legit} samples) and schedule ({sched} samples) are misaligned")]
    Misaligned { legit: usize, sched: usize },
    #[error("noise variance must be nonnegative")]
    NegativeNoise,
    #[error("channel gains must be finite")]
    NonFiniteGain,
}

/// Applies the received-signal model for `who`, with the jamming waveform
/// already generated.
pub fn receive_with_waveform(
    legit: &SampleStream,
    schedule: &JamSchedule,
    jam: &SampleStream,
    chan: &ChannelSpec,
    who: Receiver,
    noise_seed: u64,
) -> Result<SampleStream, ChannelError> {
    chan.validate()?;
    if legit.len() != schedule.beta.len() {
        return Err(ChannelError::Misaligned {
            legit: legit.len(),
            sched: schedule.beta.len(),
        });
    }
    let (h, h_j, n0) = match who {
        Receiver::Bob => (chan.h_ab, chan.h_jb, chan.n0_bob),
        Receiver::Eve => (chan.h_ae, chan.h_je, chan.n0_eve),
    };
    let n = legit.len();
    let d = chan.sync_offset_samples;
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let mut r = h * legit.samples[k];
        let shifted = k as i64 + d;
        if shifted >= 0 && (shifted as usize) < n {
            let j = shifted as usize;
            if schedule.beta[j] {
                r += h_j * jam.samples[j];
            }
        }
        samples.push(r);
    }
    if n0 > 0.0 {
        let sigma = (n0 * 0.5).sqrt();
        let per_frame = schedule.n_samples_frame;
        let n_frames = n / per_frame;
        let tag = match who {
            Receiver::Bob => 0xB0B,
            Receiver::Eve => 0xE5E,
        };
        for f in 0..n_frames {
            let mut rng = frame_rng(noise_seed, f as u64, tag);
            for s in samples[f * per_frame..(f + 1) * per_frame].iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *s += Complex64::new(re * sigma, im * sigma);
            }
        }
    }
    Ok(SampleStream {
        samples,
        sample_rate_hz: legit.sample_rate_hz,
        frame_boundaries: legit.frame_boundaries.clone(),
    })
}

/// Applies the received-signal model for `who`, regenerating the jamming
/// waveform from the schedule seed.
pub fn receive(
    legit: &SampleStream,
    schedule: &JamSchedule,
    chan: &ChannelSpec,
    who: Receiver,
    noise_seed: u64,
) -> Result<SampleStream, ChannelError> {
    let jam = schedule.waveform();
    receive_with_waveform(legit, schedule, &jam, chan, who, noise_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{layout_frame, plan_message, PhyConfig};
    use crate::schedule::{make_cjs, make_perj_pt};

    fn rig() -> (SampleStream, JamSchedule) {
        let cfg = PhyConfig::default();
        let plan = plan_message(2 * cfg.l_msdu_bytes, &cfg).unwrap();
        let layout = layout_frame(cfg.l_msdu_bytes + cfg.mac_overhead_bytes(), &cfg).unwrap();
        let legit = SampleStream {
            samples: (0..plan.n_s_total)
                .map(|k| Complex64::new((k % 7) as f64 * 0.1, (k % 3) as f64 * 0.1))
                .collect(),
            sample_rate_hz: cfg.sample_rate_hz,
            frame_boundaries: vec![0, layout.n_samples_frame],
        };
        let sched = make_cjs(&plan, &layout, plan.n_s_total as f64, 4).unwrap();
        (legit, sched)
    }

    #[test]
    fn bob_with_zero_jam_gain_and_noise_sees_the_signal_exactly() {
        let (legit, sched) = rig();
        let chan = ChannelSpec::default();
        let rx = receive(&legit, &sched, &chan, Receiver::Bob, 1).unwrap();
        for (a, b) in rx.samples.iter().zip(&legit.samples) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn eve_without_jamming_or_noise_sees_the_signal() {
        let cfg = PhyConfig::default();
        let plan = plan_message(cfg.l_msdu_bytes, &cfg).unwrap();
        let layout = layout_frame(cfg.l_msdu_bytes + cfg.mac_overhead_bytes(), &cfg).unwrap();
        let legit = SampleStream {
            samples: vec![Complex64::new(0.3, -0.4); plan.n_s_total],
            sample_rate_hz: cfg.sample_rate_hz,
            frame_boundaries: vec![0],
        };
        // All-off indicator realized by zero jam gain.
        let sched = make_perj_pt(&plan, &layout, 1.0, 2).unwrap();
        let chan = ChannelSpec {
            h_je: Complex64::new(0.0, 0.0),
            n0_eve: 0.0,
            ..ChannelSpec::default()
        };
        let rx = receive(&legit, &sched, &chan, Receiver::Eve, 1).unwrap();
        for (a, b) in rx.samples.iter().zip(&legit.samples) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn noise_variance_matches_configuration() {
        let (mut legit, sched) = rig();
        for s in legit.samples.iter_mut() {
            *s = Complex64::new(0.0, 0.0);
        }
        let chan = ChannelSpec {
            h_je: Complex64::new(0.0, 0.0),
            n0_eve: 1.0,
            ..ChannelSpec::default()
        };
        let rx = receive(&legit, &sched, &chan, Receiver::Eve, 77).unwrap();
        let var = rx.mean_power();
        let n = rx.len() as f64;
        // Var of the mean of n |CN(0,1)|^2 terms is 1/n.
        assert!((var - 1.0).abs() < 3.0 / n.sqrt(), "variance {var}");
    }

    #[test]
    fn legitimate_component_scales_linearly() {
        let (legit, sched) = rig();
        let chan = ChannelSpec { n0_eve: 0.0, ..ChannelSpec::default() };
        let rx1 = receive(&legit, &sched, &chan, Receiver::Eve, 3).unwrap();
        let scaled = SampleStream {
            samples: legit.samples.iter().map(|s| s * 2.5).collect(),
            ..legit.clone()
        };
        let rx2 = receive(&scaled, &sched, &chan, Receiver::Eve, 3).unwrap();
        // Same jam seed: difference is exactly 1.5x the legitimate part.
        for ((a, b), s) in rx1.samples.iter().zip(&rx2.samples).zip(&legit.samples) {
            assert!((b - a - s * 1.5).norm() < 1e-12);
        }
    }

    #[test]
    fn seeded_noise_is_deterministic() {
        let (legit, sched) = rig();
        let chan = ChannelSpec { n0_eve: 0.5, ..ChannelSpec::default() };
        let a = receive(&legit, &sched, &chan, Receiver::Eve, 9).unwrap();
        let b = receive(&legit, &sched, &chan, Receiver::Eve, 9).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = receive(&legit, &sched, &chan, Receiver::Eve, 10).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn sync_offset_shifts_only_the_jamming_component() {
        let (legit, sched) = rig();
        let base = ChannelSpec { n0_eve: 0.0, ..ChannelSpec::default() };
        let shifted = ChannelSpec { sync_offset_samples: 5, ..base };
        let r0 = receive(&legit, &sched, &base, Receiver::Eve, 3).unwrap();
        let r5 = receive(&legit, &sched, &shifted, Receiver::Eve, 3).unwrap();
        let n = legit.len();
        for k in 0..n {
            let jam0 = r0.samples[k] - legit.samples[k];
            let want = if k + 5 < n {
                r0.samples[k + 5] - legit.samples[k + 5]
            } else {
                Complex64::new(0.0, 0.0) // zero fill at the edge
            };
            let jam5 = r5.samples[k] - legit.samples[k];
            assert!((jam5 - want).norm() < 1e-12, "k={k} {jam5} vs {want} jam0={jam0}");
        }
    }

    #[test]
    fn misaligned_lengths_are_rejected() {
        let (legit, sched) = rig();
        let short = SampleStream {
            samples: legit.samples[..100].to_vec(),
            ..legit.clone()
        };
        assert!(matches!(
            receive(&short, &sched, &ChannelSpec::default(), Receiver::Eve, 1),
            Err(ChannelError::Misaligned { .. })
        ));
    }
}
