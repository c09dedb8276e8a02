//! Offline windowed imputation and online one-step-ahead prediction.

mod offline;
mod online;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixify::Variant;
use crate::series::FillPolicy;

pub use offline::{impute_offline, window_plan, WindowPlan};
pub use online::{learn_forecast, predict_next, predict_stream, ForecastModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    /// Matrix rows `L`.
    pub rows: usize,
    /// Window length `T` per channel.
    pub window: usize,
    pub variant: Variant,
    /// Replace observed samples with their estimates. When false the observed
    /// samples are restored after reshaping.
    pub overwrite_observed: bool,
    pub fill: FillPolicy,
    /// Online only: re-learn the regression every `refresh_every` steps.
    pub refresh_every: usize,
}

impl RecoveryConfig {
    /// L = 10, T = 54000 (30 minutes at 30 fps).
    pub fn offline() -> Self {
        Self {
            rows: 10,
            window: 54_000,
            variant: Variant::Page,
            overwrite_observed: true,
            fill: FillPolicy::LastObservationCarriedForward,
            refresh_every: 1,
        }
    }

    /// L = 5, T = 30.
    pub fn online() -> Self {
        Self {
            rows: 5,
            window: 30,
            ..Self::offline()
        }
    }

    pub fn with_shape(mut self, rows: usize, window: usize) -> Self {
        self.rows = rows;
        self.window = window;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_overwrite(mut self, overwrite_observed: bool) -> Self {
        self.overwrite_observed = overwrite_observed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 {
            return Err(Error::config(format!(
                "L must be at least 2, got {}",
                self.rows
            )));
        }
        if self.rows > self.window {
            return Err(Error::config(format!(
                "L={} exceeds the window length T={}",
                self.rows, self.window
            )));
        }
        if self.variant == Variant::Page && !self.window.is_multiple_of(self.rows) {
            return Err(Error::config(format!(
                "window length T={} must be divisible by L={} for the Page variant",
                self.window, self.rows
            )));
        }
        if self.refresh_every == 0 {
            return Err(Error::config("refresh interval must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let off = RecoveryConfig::offline();
        assert_eq!(
            (off.rows, off.window, off.variant),
            (10, 54_000, Variant::Page)
        );
        assert!(off.overwrite_observed);
        let on = RecoveryConfig::online();
        assert_eq!((on.rows, on.window), (5, 30));
        off.validate().unwrap();
        on.validate().unwrap();
    }

    #[test]
    fn divisibility_rule() {
        let err = RecoveryConfig::offline()
            .with_shape(7, 600)
            .validate()
            .unwrap_err();
        assert!(err.to_string().contains("divisible"), "{err}");
        // Hankel has no divisibility requirement
        RecoveryConfig::offline()
            .with_shape(7, 600)
            .with_variant(Variant::Hankel)
            .validate()
            .unwrap();
    }

    #[test]
    fn row_bounds() {
        assert!(RecoveryConfig::online()
            .with_shape(1, 30)
            .validate()
            .is_err());
        assert!(RecoveryConfig::online()
            .with_shape(40, 30)
            .with_variant(Variant::Hankel)
            .validate()
            .is_err());
    }
}
