//! The three weight aspects: global (training-time constant), local
//! (query-dependent, k-NN over historical errors in PCA space), and
//! time-dependent (lead-time error profile).

mod global;
mod local;
mod time;

pub use global::{fit_global, global_weights, GlobalScores};
pub use local::{fit_pca, local_errors, local_weights, LocalMemory, PcaTransform};
pub use time::{fit_time, time_weights, TimeScores};

use serde::{Deserialize, Serialize};

/// Knobs of the local weighting aspect. `None` selects the defaults
/// `n_dim = min(F, 3)` and `neighbors = max(5, ceil(0.05 N))` (capped at N).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightingConfig {
    pub n_dim: Option<usize>,
    pub neighbors: Option<usize>,
}

impl WeightingConfig {
    pub fn resolved_n_dim(&self, n_features: usize) -> usize {
        self.n_dim.unwrap_or_else(|| n_features.min(3)).min(n_features).max(1)
    }

    pub fn resolved_neighbors(&self, n_samples: usize) -> usize {
        self.neighbors
            .unwrap_or_else(|| 5usize.max((0.05 * n_samples as f64).ceil() as usize))
            .min(n_samples)
            .max(1)
    }
}
