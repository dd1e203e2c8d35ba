//! Derivative-free minimization of the regularized ensemble objective over
//! the three gating exponents.
//!
//! The search runs three deterministic stages: a coarse grid over the box
//! `[0, eta_max]^3`, a cyclic per-aspect line refinement (golden-section on
//! each axis in global/local/time order), and a bounded Nelder-Mead simplex
//! polish from the best point found. The line stage exists because the data
//! term is often flat along `eta_global + eta_local` directions (aspects can
//! trade tilt against each other); refining one aspect at a time resolves
//! those ties toward sparse exponent assignments instead of leaving the
//! outcome to simplex geometry.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cube::{ClassProbCube, PredictionCube};
use crate::error::{CsgeError, Result};
use crate::softgate::{eta_penalty, soft_gate, SoftGateConfig};
use crate::util::{linspace, stable_sum};
use crate::weighting::{GlobalScores, TimeScores};
use crate::weights::{EtaVector, WeightBreakdown};

/// Objective and search configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveConfig {
    /// Regularization strength `c`.
    pub c_reg: f64,
    /// When set, regularize with `c * sum a(eta_s)`; otherwise with the
    /// plain `c * sum eta_s`.
    pub use_penalty_heuristic: bool,
    /// Upper bound of every exponent.
    pub eta_max: f64,
    /// Grid points per axis in the seeding stage.
    pub grid_resolution: usize,
    /// Iteration budget of the simplex polish.
    pub max_refine_iters: usize,
    /// Relative convergence tolerance of the simplex polish.
    pub tolerance: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            c_reg: 0.1,
            use_penalty_heuristic: true,
            eta_max: 12.0,
            grid_resolution: 5,
            max_refine_iters: 200,
            tolerance: 1e-6,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_resolution < 2 {
            return Err(CsgeError::InvalidHyperParams(format!(
                "grid_resolution must be at least 2, got {}",
                self.grid_resolution
            )));
        }
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(CsgeError::InvalidHyperParams(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !self.eta_max.is_finite() || self.eta_max <= 0.0 {
            return Err(CsgeError::InvalidHyperParams(format!(
                "eta_max must be a positive real, got {}",
                self.eta_max
            )));
        }
        if !self.c_reg.is_finite() || self.c_reg < 0.0 {
            return Err(CsgeError::InvalidHyperParams(format!(
                "c_reg must be a nonnegative real, got {}",
                self.c_reg
            )));
        }
        Ok(())
    }
}

/// Everything an objective evaluation needs, precomputed once per fit.
///
/// `local_q` holds the per-training-sample local error vectors (N x J), so
/// no neighbor search runs inside the optimization loop: neighborhoods do
/// not depend on the exponents.
pub struct EvalContext<'a> {
    pub predictions: &'a PredictionCube,
    pub class_probs: Option<&'a ClassProbCube>,
    pub targets: &'a DMatrix<f64>,
    pub global: &'a GlobalScores,
    pub local_q: &'a DMatrix<f64>,
    pub time: &'a TimeScores,
    pub gate: SoftGateConfig,
}

impl<'a> EvalContext<'a> {
    fn check(&self) -> Result<()> {
        let (n, j, t) = (
            self.predictions.n_samples(),
            self.predictions.n_members(),
            self.predictions.horizon(),
        );
        if self.targets.nrows() != n || self.targets.ncols() != t {
            return Err(CsgeError::shape(
                "objective targets",
                format!("{n}x{t}"),
                format!("{}x{}", self.targets.nrows(), self.targets.ncols()),
            ));
        }
        if self.global.n_members() != j
            || self.local_q.ncols() != j
            || self.time.n_members() != j
        {
            return Err(CsgeError::shape(
                "objective member counts",
                j,
                format!(
                    "{}/{}/{}",
                    self.global.n_members(),
                    self.local_q.ncols(),
                    self.time.n_members()
                ),
            ));
        }
        if self.local_q.nrows() != n || self.time.horizon() != t {
            return Err(CsgeError::shape(
                "objective table sizes",
                format!("{n} rows, horizon {t}"),
                format!("{} rows, horizon {}", self.local_q.nrows(), self.time.horizon()),
            ));
        }
        Ok(())
    }
}

/// Regularized training objective at one exponent triple.
///
/// The data term is the summed squared error of the fused out-of-fold
/// predictions (for classification: the summed per-class squared probability
/// error, which stays smooth where the zero-one loss is flat). The penalty
/// term is `c_reg` times the heuristic or plain exponent sum.
pub fn objective(eta: &EtaVector, ctx: &EvalContext, cfg: &ObjectiveConfig) -> Result<f64> {
    cfg.validate()?;
    ctx.check()?;
    eta.validate(cfg.eta_max)?;

    let data = data_term(eta, ctx)?;
    let mut penalty = 0.0;
    for component in eta.as_array() {
        penalty += if cfg.use_penalty_heuristic {
            eta_penalty(component)?
        } else {
            component
        };
    }
    Ok(data + cfg.c_reg * penalty)
}

fn data_term(eta: &EtaVector, ctx: &EvalContext) -> Result<f64> {
    let (n, j_members, horizon) = (
        ctx.predictions.n_samples(),
        ctx.predictions.n_members(),
        ctx.predictions.horizon(),
    );
    let w_global = soft_gate(ctx.global.scores(), eta.global, &ctx.gate)?;
    let w_time: Vec<Vec<f64>> = (0..horizon)
        .map(|t| soft_gate(&ctx.time.relative_row(t)?, eta.time, &ctx.gate))
        .collect::<Result<_>>()?;

    let mut loss = 0.0;
    let mut q_row = vec![0.0; j_members];
    for sample in 0..n {
        for (j, q) in q_row.iter_mut().enumerate() {
            *q = ctx.local_q[(sample, j)];
        }
        let w_local = soft_gate(&q_row, eta.local, &ctx.gate)?;
        for (t, w_time_row) in w_time.iter().enumerate() {
            let breakdown = WeightBreakdown::combine(&w_global, &w_local, w_time_row)?;
            let weights = breakdown.combined();
            match ctx.class_probs {
                None => {
                    let fused = fuse_values(&ctx.predictions.member_row(sample, t), &weights);
                    let residual = ctx.targets[(sample, t)] - fused;
                    loss += residual * residual;
                }
                Some(probs) => {
                    let truth = ctx.targets[(sample, 0)] as usize;
                    let k_classes = probs.n_classes();
                    let mut brier = 0.0;
                    for class in 0..k_classes {
                        let member_probs: Vec<f64> =
                            (0..j_members).map(|j| probs.get(sample, j, class)).collect();
                        let fused = fuse_values(&member_probs, &weights);
                        let target = if class == truth { 1.0 } else { 0.0 };
                        brier += (fused - target) * (fused - target);
                    }
                    loss += brier / k_classes as f64;
                }
            }
        }
    }
    Ok(loss)
}

/// Convex combination with a canonical summation order (member-permutation
/// invariant) and clamping to the member range to repair float rounding at
/// the extremes.
pub(crate) fn fuse_values(values: &[f64], weights: &[f64]) -> f64 {
    let terms: Vec<f64> = values.iter().zip(weights).map(|(v, w)| v * w).collect();
    let fused = stable_sum(&terms);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    fused.clamp(lo, hi)
}

/// One objective evaluation in the optimization trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub eta: EtaVector,
    pub value: f64,
    /// Best objective seen up to and including this evaluation.
    pub best: f64,
}

/// Outcome of [`minimize`].
#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub eta: EtaVector,
    pub value: f64,
    pub trace: Vec<TraceEntry>,
}

struct Search<'a, 'b> {
    ctx: &'a EvalContext<'b>,
    cfg: &'a ObjectiveConfig,
    trace: Vec<TraceEntry>,
    best_eta: EtaVector,
    best_value: f64,
}

impl<'a, 'b> Search<'a, 'b> {
    fn eval(&mut self, eta: EtaVector) -> Result<f64> {
        let value = objective(&eta, self.ctx, self.cfg)?;
        if value < self.best_value {
            self.best_value = value;
            self.best_eta = eta;
        }
        self.trace.push(TraceEntry {
            eta,
            value,
            best: self.best_value,
        });
        Ok(value)
    }
}

/// Minimizes the regularized objective over the exponent box.
///
/// Deterministic given the configuration; the returned value is the exact
/// objective at the returned exponents, and no evaluated point beats it.
pub fn minimize(cfg: &ObjectiveConfig, ctx: &EvalContext) -> Result<MinimizeResult> {
    cfg.validate()?;
    ctx.check()?;

    let mut search = Search {
        ctx,
        cfg,
        trace: Vec::new(),
        best_eta: EtaVector::zero(),
        best_value: f64::INFINITY,
    };

    // Stage 1: coarse grid seeding.
    let axis = linspace(0.0, cfg.eta_max, cfg.grid_resolution);
    for &g in &axis {
        for &l in &axis {
            for &t in &axis {
                search.eval(EtaVector::new(g, l, t))?;
            }
        }
    }

    // Stage 2: cyclic per-aspect refinement.
    for _pass in 0..2 {
        for aspect in 0..3 {
            refine_axis(&mut search, aspect)?;
        }
    }

    // Stage 3: bounded Nelder-Mead polish.
    nelder_mead(&mut search)?;

    Ok(MinimizeResult {
        eta: search.best_eta,
        value: search.best_value,
        trace: search.trace,
    })
}

fn with_component(eta: EtaVector, aspect: usize, value: f64) -> EtaVector {
    let mut arr = eta.as_array();
    arr[aspect] = value;
    EtaVector::from_array(arr)
}

/// Scan the axis coarsely, then golden-section the bracketing interval.
/// The incumbent only moves on strict improvement.
fn refine_axis(search: &mut Search, aspect: usize) -> Result<()> {
    let base = search.best_eta;
    let eta_max = search.cfg.eta_max;

    const SCAN: usize = 25;
    let mut best_idx = 0;
    let mut best_val = f64::INFINITY;
    let points = linspace(0.0, eta_max, SCAN);
    for (i, &v) in points.iter().enumerate() {
        let value = search.eval(with_component(base, aspect, v))?;
        if value < best_val {
            best_val = value;
            best_idx = i;
        }
    }

    let mut lo = points[best_idx.saturating_sub(1)];
    let mut hi = points[(best_idx + 1).min(SCAN - 1)];
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut m1 = hi - phi * (hi - lo);
    let mut m2 = lo + phi * (hi - lo);
    let mut f1 = search.eval(with_component(base, aspect, m1))?;
    let mut f2 = search.eval(with_component(base, aspect, m2))?;
    while hi - lo > 1e-7 * eta_max {
        if f1 <= f2 {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - phi * (hi - lo);
            f1 = search.eval(with_component(base, aspect, m1))?;
        } else {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + phi * (hi - lo);
            f2 = search.eval(with_component(base, aspect, m2))?;
        }
    }
    Ok(())
}

fn nelder_mead(search: &mut Search) -> Result<()> {
    let cfg = *search.cfg;
    let clamp = |v: [f64; 3]| -> EtaVector {
        EtaVector::new(
            v[0].clamp(0.0, cfg.eta_max),
            v[1].clamp(0.0, cfg.eta_max),
            v[2].clamp(0.0, cfg.eta_max),
        )
    };

    let step = cfg.eta_max / 12.0;
    let x0 = search.best_eta;
    let mut simplex: Vec<(EtaVector, f64)> = Vec::with_capacity(4);
    simplex.push((x0, search.eval(x0)?));
    for aspect in 0..3 {
        let base = x0.as_array();
        let mut moved = base;
        moved[aspect] = if base[aspect] + step <= cfg.eta_max {
            base[aspect] + step
        } else {
            base[aspect] - step
        };
        let vertex = clamp(moved);
        let value = search.eval(vertex)?;
        simplex.push((vertex, value));
    }

    for _iter in 0..cfg.max_refine_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[3].1 - simplex[0].1;
        if spread <= cfg.tolerance * (1.0 + simplex[0].1.abs()) {
            break;
        }

        let centroid = {
            let mut c = [0.0; 3];
            for vertex in &simplex[..3] {
                let arr = vertex.0.as_array();
                for (ci, ai) in c.iter_mut().zip(arr) {
                    *ci += ai / 3.0;
                }
            }
            c
        };
        let worst = simplex[3].0.as_array();
        let direction = [
            centroid[0] - worst[0],
            centroid[1] - worst[1],
            centroid[2] - worst[2],
        ];
        let at = |alpha: f64| -> EtaVector {
            clamp([
                centroid[0] + alpha * direction[0],
                centroid[1] + alpha * direction[1],
                centroid[2] + alpha * direction[2],
            ])
        };

        let reflected = at(1.0);
        let f_reflected = search.eval(reflected)?;
        if f_reflected < simplex[0].1 {
            let expanded = at(2.0);
            let f_expanded = search.eval(expanded)?;
            simplex[3] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
        } else if f_reflected < simplex[2].1 {
            simplex[3] = (reflected, f_reflected);
        } else {
            let contracted = if f_reflected < simplex[3].1 {
                at(0.5)
            } else {
                at(-0.5)
            };
            let f_contracted = search.eval(contracted)?;
            if f_contracted < simplex[3].1.min(f_reflected) {
                simplex[3] = (contracted, f_contracted);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0.as_array();
                for vertex in simplex.iter_mut().skip(1) {
                    let arr = vertex.0.as_array();
                    let shrunk = clamp([
                        best[0] + 0.5 * (arr[0] - best[0]),
                        best[1] + 0.5 * (arr[1] - best[1]),
                        best[2] + 0.5 * (arr[2] - best[2]),
                    ]);
                    *vertex = (shrunk, search.eval(shrunk)?);
                }
            }
        }
    }
    Ok(())
}
