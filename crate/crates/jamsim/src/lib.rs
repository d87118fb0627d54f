//! Link-level simulator for intermittent friendly jamming against an
//! eavesdropper on an 802.11n-style HT link.
//!
//! The crate models the chain Alice -> (Bob, Eve) with a cooperative jammer
//! whose transmit schedule is a per-sample on/off indicator over the whole
//! frame stream. It provides:
//!
//! - [`frame`]: HT frame/timing arithmetic (symbol counts, padding, field
//!   sample windows).
//! - [`waveform`]: MAC framing with CRC-32 FCS and the OFDM/64-QAM baseband
//!   synthesis of the legitimate signal.
//! - [`schedule`]: the jamming indicator and waveform for the continuous
//!   scheme and the five intermittent schemes, plus energy/power accounting.
//! - [`channel`]: flat complex-gain links with AWGN.
//! - [`receiver`]: preamble sync, training-field channel estimation,
//!   equalization, hard-decision demapping, FCS checking and error counts.
//! - [`model`]: the closed-form error-rate/error-count model and the
//!   energy-constrained schedule optimizer.
//! - [`harness`]: experiment sweeps, comparisons and file outputs.

pub mod channel;
pub mod frame;
pub mod harness;
pub mod model;
pub mod receiver;
pub mod schedule;
pub mod waveform;

pub use channel::{ChannelSpec, Receiver};
pub use frame::{FieldId, FrameLayout, MessagePlan, PhyConfig};
pub use model::{AnalyticParams, SereeReport};
pub use receiver::{DecodeResult, RxEstimate, RxOptions};
pub use schedule::{JamBudget, JamSchedule, JamScheme};
pub use waveform::{MacFrame, SampleStream, Transmission};
