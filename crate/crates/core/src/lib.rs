//! Recovery of gappy, noisy multichannel synchrophasor series.
//!
//! Channel windows are arranged as Page (or Hankel) matrices, stacked side by
//! side, and denoised by optimal singular value hard thresholding. The same
//! estimate drives offline gap filling and online one-step-ahead forecasting
//! through a linear regression between matrix rows.

pub mod cli;
pub mod error;
pub mod harness;
pub mod matrixify;
pub mod osvt;
pub mod recovery;
pub mod report;
pub mod series;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
