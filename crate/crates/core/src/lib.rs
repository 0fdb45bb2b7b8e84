//! Cycle-consistent speech-feature enhancement, from the front end up.
//!
//! A noisy-to-clean mapping network `F` is trained jointly with an inverse
//! clean-to-noisy network `G`. With parallel data the two feature-mapping
//! losses and the two cycle reconstruction losses are minimized together
//! (the CSE regime); with unparalleled data the feature-mapping losses are
//! replaced by discrimination losses from two frame-level discriminators,
//! optimized adversarially through a gradient reversal layer (the ACSE
//! regime). At test time only `F` runs.
//!
//! This crate is `no_std` (with `alloc`) and holds everything that is pure
//! computation: the log-mel front end, the LSTM-with-projection networks and
//! their exact BPTT gradients, every loss, SGD with momentum, the training
//! regimes, synthetic signal generation and the objective metrics. File
//! formats, WAV I/O and the command-line driver live in the companion `cse`
//! crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod disc;
pub mod error;
pub mod features;
pub mod fft;
pub mod losses;
pub mod lstm;
pub mod mat;
pub mod metrics;
pub mod optim;
pub mod params;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use mat::Mat;
