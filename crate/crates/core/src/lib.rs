//! Simulation of OFDM joint radar-communication processing with detection
//! of adversarial re-transmissions ("false targets") through their residual
//! carrier frequency offset.
//!
//! Pipeline: [`waveform`] → [`channel`] → [`rdmap`] → [`estimator`] →
//! [`detector`], orchestrated by [`montecarlo`].

pub mod channel;
pub mod cli;
pub mod config;
pub mod detector;
pub mod error;
pub mod estimator;
pub mod io;
pub mod montecarlo;
pub mod plot;
pub mod rdmap;
pub mod waveform;

pub use error::{Error, Result};
