//! Coopetitive soft gating ensemble.
//!
//! A meta-estimator that fuses the predictions of J heterogeneous base
//! estimators through multiplicative global, local, and time-dependent
//! weights, each produced by a soft-gating function whose exponents are
//! learned by regularized loss minimization over out-of-fold predictions.
//! The exponents interpolate between cooperation (averaging) and
//! competition (gating), and every prediction carries a per-member weight
//! breakdown for interpretability.
//!
//! Quick start:
//!
//! ```
//! use csge_core::{fit, CsgeConfig, Dataset, EstimatorSpec};
//! use nalgebra::DMatrix;
//!
//! let xs: Vec<f64> = (0..100).map(|i| i as f64 * 0.2).collect();
//! let ys: Vec<f64> = xs.iter().map(|x| x.sin() + 4.0).collect();
//! let data = Dataset::regression(
//!     DMatrix::from_column_slice(100, 1, &xs),
//!     ys,
//!     vec!["x".into()],
//! )
//! .unwrap();
//!
//! let members = vec![
//!     EstimatorSpec::AnalyticFunction { expr: "sin(x[0])".into() },
//!     EstimatorSpec::AnalyticFunction { expr: "sin(x[0]) + 10".into() },
//! ];
//! let model = fit(&members, &data, &CsgeConfig::default()).unwrap();
//! let (prediction, breakdown) = model.predict(&[1.0], 0).unwrap();
//! assert!((prediction.scalar() - (1.0f64.sin() + 4.0)).abs() < 0.5);
//! assert_eq!(breakdown.n_members(), 2);
//! ```

pub mod cube;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod estimators;
pub mod io;
pub mod optim;
pub mod scoring;
pub mod softgate;
pub mod synthetic;
pub mod weighting;
pub mod weights;

mod util;

pub use cube::{ClassProbCube, PredictionCube};
pub use dataset::{validate_dataset, Dataset, Task};
pub use ensemble::{
    build_prediction_cube, build_prediction_cube_with_observer, fit, fit_from_cube,
    fit_with_plan, member_ids, repeated_cv, CsgeConfig, CsgeModel, EvalReport, FoldPlan,
    ReportRow, TrainingProtocol,
};
pub use error::{CsgeError, Result};
pub use estimators::{EstimatorSpec, Expr, FittedEstimator, Prediction};
pub use optim::{minimize, objective, EvalContext, MinimizeResult, ObjectiveConfig, TraceEntry};
pub use scoring::{score, Scorer};
pub use softgate::{eta_penalty, soft_gate, soft_gate_raw, SoftGateConfig};
pub use synthetic::{generate_synthetic, target_value, SyntheticKind, SyntheticSetup};
pub use weighting::{
    fit_global, fit_pca, fit_time, global_weights, local_errors, local_weights, time_weights,
    GlobalScores, LocalMemory, PcaTransform, TimeScores, WeightingConfig,
};
pub use weights::{EtaVector, MemberWeights, WeightBreakdown};
