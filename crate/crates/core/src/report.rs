use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::recovery::RecoveryConfig;

/// Outcome of one matrix estimate (an offline window or an online step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub start: usize,
    pub len: usize,
    pub kept_rank: usize,
    pub threshold: f64,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMape {
    pub channel: String,
    /// `None` when every truth value of the channel is zero.
    pub mape: Option<f64>,
    /// Samples left out because the truth value is zero.
    pub excluded: usize,
}

/// Wall-clock measurements. Kept apart from the serialized report so that
/// reports of identical runs are byte-identical.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub steps: usize,
    pub median_step_seconds: Option<f64>,
}

impl Timing {
    pub fn from_steps(total_seconds: f64, mut steps: Vec<f64>) -> Self {
        Self {
            total_seconds,
            steps: steps.len(),
            median_step_seconds: median(&mut steps),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub config: RecoveryConfig,
    pub seed: Option<u64>,
    pub windows: Vec<WindowSummary>,
    /// Trailing samples left unrecovered because they do not fill a window.
    pub passthrough: Option<Range<usize>>,
    pub channel_mape: Vec<ChannelMape>,
    #[serde(skip)]
    pub timing: Timing,
}

impl RecoveryReport {
    pub fn new(config: RecoveryConfig) -> Self {
        Self {
            config,
            seed: None,
            windows: Vec::new(),
            passthrough: None,
            channel_mape: Vec::new(),
            timing: Timing::default(),
        }
    }

    pub fn kept_ranks(&self) -> Vec<usize> {
        self.windows.iter().map(|w| w.kept_rank).collect()
    }

    /// Mean of the defined per-channel MAPE values.
    pub fn mean_mape(&self) -> Option<f64> {
        let defined: Vec<f64> = self.channel_mape.iter().filter_map(|c| c.mape).collect();
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

/// Median of finite values; sorts in place.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}
