//! The coopetitive soft gating ensemble: out-of-fold training protocol,
//! exponent fitting, weight fusion, and prediction with interpretable
//! weight breakdowns.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cube::{ClassProbCube, PredictionCube};
use crate::dataset::{Dataset, Task};
use crate::error::{CsgeError, Result};
use crate::estimators::{EstimatorSpec, FittedEstimator, Prediction};
use crate::optim::{fuse_values, minimize, EvalContext, ObjectiveConfig, TraceEntry};
use crate::scoring::Scorer;
use crate::softgate::{soft_gate, SoftGateConfig};
use crate::weighting::{
    fit_global, fit_pca, fit_time, local_errors, GlobalScores, LocalMemory, TimeScores,
    WeightingConfig,
};
use crate::weights::{EtaVector, WeightBreakdown};

/// Assignment of every training sample to one of K folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    k: usize,
    assignments: Vec<usize>,
    seed: u64,
}

impl FoldPlan {
    /// Seeded uniform shuffle split into K contiguous blocks.
    pub fn new(n_samples: usize, k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(CsgeError::InvalidHyperParams(format!(
                "fold count must be at least 2, got {k}"
            )));
        }
        if k > n_samples {
            return Err(CsgeError::InvalidHyperParams(format!(
                "{k} folds cannot all be nonempty with {n_samples} samples"
            )));
        }
        let mut order: Vec<usize> = (0..n_samples).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let mut assignments = vec![0usize; n_samples];
        let base = n_samples / k;
        let remainder = n_samples % k;
        let mut position = 0;
        for fold in 0..k {
            let size = base + usize::from(fold < remainder);
            for _ in 0..size {
                assignments[order[position]] = fold;
                position += 1;
            }
        }
        Ok(FoldPlan {
            k,
            assignments,
            seed,
        })
    }

    /// Class-stratified variant: shuffles within each class and deals the
    /// rows round-robin over the folds.
    pub fn stratified(labels: &[usize], k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(CsgeError::InvalidHyperParams(format!(
                "fold count must be at least 2, got {k}"
            )));
        }
        if k > labels.len() {
            return Err(CsgeError::InvalidHyperParams(format!(
                "{k} folds cannot all be nonempty with {} samples",
                labels.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        let mut assignments = vec![0usize; labels.len()];
        let mut next_fold = 0usize;
        for class in 0..n_classes {
            let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            rows.shuffle(&mut rng);
            for row in rows {
                assignments[row] = next_fold;
                next_fold = (next_fold + 1) % k;
            }
        }
        let plan = FoldPlan {
            k,
            assignments,
            seed,
        };
        for fold in 0..k {
            if !plan.assignments.contains(&fold) {
                return Err(CsgeError::InvalidHyperParams(format!(
                    "stratified fold {fold} is empty"
                )));
            }
        }
        Ok(plan)
    }

    /// Plain split for regression, stratified for classification.
    pub fn for_dataset(data: &Dataset, k: usize, seed: u64) -> Result<Self> {
        match data.task() {
            Task::Regression => FoldPlan::new(data.n_samples(), k, seed),
            Task::Classification { .. } => {
                let labels: Vec<usize> = (0..data.n_samples()).map(|i| data.label(i)).collect();
                FoldPlan::stratified(&labels, k, seed)
            }
        }
    }

    pub fn n_folds(&self) -> usize {
        self.k
    }

    pub fn n_samples(&self) -> usize {
        self.assignments.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    /// Row indices outside / inside fold `fold`, both ascending.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (row, &assignment) in self.assignments.iter().enumerate() {
            if assignment == fold {
                test.push(row);
            } else {
                train.push(row);
            }
        }
        (train, test)
    }
}

/// How the out-of-fold training data for the ensemble is produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum TrainingProtocol {
    /// K-fold rotation: every training sample receives one out-of-fold
    /// prediction per member.
    KFold { folds: usize },
    /// Single split: members train on one part, ensemble statistics come
    /// from the held-out `fraction`.
    Holdout { fraction: f64 },
}

impl Default for TrainingProtocol {
    fn default() -> Self {
        TrainingProtocol::KFold { folds: 5 }
    }
}

/// Full training configuration of a CSGE fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsgeConfig {
    pub protocol: TrainingProtocol,
    pub objective: ObjectiveConfig,
    pub weighting: WeightingConfig,
    pub gate: SoftGateConfig,
    pub scorer: Scorer,
    pub seed: u64,
}

impl Default for CsgeConfig {
    fn default() -> Self {
        CsgeConfig {
            protocol: TrainingProtocol::default(),
            objective: ObjectiveConfig::default(),
            weighting: WeightingConfig::default(),
            gate: SoftGateConfig::default(),
            scorer: Scorer::SquaredError,
            seed: 42,
        }
    }
}

impl CsgeConfig {
    pub fn validate(&self) -> Result<()> {
        self.gate.validate()?;
        self.objective.validate()?;
        match self.protocol {
            TrainingProtocol::KFold { folds } => {
                if folds < 2 {
                    return Err(CsgeError::InvalidHyperParams(
                        "k-fold protocol needs at least 2 folds".into(),
                    ));
                }
            }
            TrainingProtocol::Holdout { fraction } => {
                if !(fraction > 0.0 && fraction < 1.0) {
                    return Err(CsgeError::InvalidHyperParams(format!(
                        "holdout fraction must lie in (0, 1), got {fraction}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Builds the out-of-fold prediction cube: for every sample in fold k, a
/// member copy trained without fold k produces the prediction.
pub fn build_prediction_cube(
    specs: &[EstimatorSpec],
    data: &Dataset,
    plan: &FoldPlan,
) -> Result<PredictionCube> {
    let (cube, _) = build_prediction_cube_with_observer(specs, data, plan, |_, _, _| {})?;
    Ok(cube)
}

/// [`build_prediction_cube`] with a training-protocol audit hook: the
/// observer receives `(member, fold, training_rows)` before each member copy
/// is fitted. Classification tasks additionally return the per-class
/// probability cube.
pub fn build_prediction_cube_with_observer(
    specs: &[EstimatorSpec],
    data: &Dataset,
    plan: &FoldPlan,
    mut observer: impl FnMut(usize, usize, &[usize]),
) -> Result<(PredictionCube, Option<ClassProbCube>)> {
    if plan.n_samples() != data.n_samples() {
        return Err(CsgeError::shape(
            "fold plan",
            data.n_samples(),
            plan.n_samples(),
        ));
    }
    let member_ids = member_ids(specs);
    let (n, t_horizon, j_members) = (data.n_samples(), data.horizon(), specs.len());
    let n_classes = data.task().n_classes();
    let mut values = vec![0.0; n * j_members * t_horizon];
    let mut probs = n_classes.map(|k| vec![0.0; n * j_members * k]);

    for fold in 0..plan.n_folds() {
        let (train_rows, test_rows) = plan.split(fold);
        let train = data.subset(&train_rows);
        for (j, spec) in specs.iter().enumerate() {
            if train_rows.len() < spec.min_train_samples() {
                return Err(CsgeError::FoldTooSmall {
                    fold,
                    member: member_ids[j].clone(),
                    needed: spec.min_train_samples(),
                    got: train_rows.len(),
                });
            }
            observer(j, fold, &train_rows);
            let fitted = spec.fit(&train)?;
            for &row in &test_rows {
                let x = data.feature_row(row);
                for t in 0..t_horizon {
                    let prediction = fitted.predict(&x, t)?;
                    values[(row * j_members + j) * t_horizon + t] = prediction.scalar();
                    if let (Some(buffer), Prediction::Probabilities(p)) =
                        (probs.as_mut(), &prediction)
                    {
                        let k = n_classes.unwrap();
                        for (class, &pv) in p.iter().enumerate() {
                            buffer[(row * j_members + j) * k + class] = pv;
                        }
                    }
                }
            }
        }
    }

    let cube = PredictionCube::new(values, n, t_horizon, member_ids)?;
    let prob_cube = match (probs, n_classes) {
        (Some(buffer), Some(k)) => Some(ClassProbCube::from_fn(n, j_members, k, |s, j, c| {
            buffer[(s * j_members + j) * k + c]
        })?),
        _ => None,
    };
    Ok((cube, prob_cube))
}

/// Default member ids: the spec labels, deduplicated with `_2`, `_3`, ...
pub fn member_ids(specs: &[EstimatorSpec]) -> Vec<String> {
    let mut ids = Vec::with_capacity(specs.len());
    for spec in specs {
        let base = spec.label().to_string();
        let clashes = ids.iter().filter(|id: &&String| {
            **id == base || id.starts_with(&format!("{base}_"))
        });
        let count = clashes.count();
        if count == 0 {
            ids.push(base);
        } else {
            ids.push(format!("{base}_{}", count + 1));
        }
    }
    ids
}

/// A trained ensemble. Immutable; `predict` is freely concurrent.
#[derive(Debug, Clone)]
pub struct CsgeModel {
    members: Vec<FittedEstimator>,
    member_ids: Vec<String>,
    feature_names: Vec<String>,
    task: Task,
    horizon: usize,
    eta: EtaVector,
    global: GlobalScores,
    local: LocalMemory,
    time: TimeScores,
    scorer: Scorer,
    gate: SoftGateConfig,
    config: CsgeConfig,
    objective_value: f64,
    trace: Vec<TraceEntry>,
}

impl CsgeModel {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        members: Vec<FittedEstimator>,
        member_ids: Vec<String>,
        feature_names: Vec<String>,
        task: Task,
        horizon: usize,
        eta: EtaVector,
        global: GlobalScores,
        local: LocalMemory,
        time: TimeScores,
        scorer: Scorer,
        gate: SoftGateConfig,
        config: CsgeConfig,
        objective_value: f64,
        trace: Vec<TraceEntry>,
    ) -> Result<Self> {
        let j = member_ids.len();
        if j < 2 {
            return Err(CsgeError::InvalidHyperParams(format!(
                "an ensemble needs at least 2 members, got {j}"
            )));
        }
        if !members.is_empty() && members.len() != j {
            return Err(CsgeError::shape("model members", j, members.len()));
        }
        if global.n_members() != j || local.n_members() != j || time.n_members() != j {
            return Err(CsgeError::shape(
                "model member tables",
                j,
                format!(
                    "{}/{}/{}",
                    global.n_members(),
                    local.n_members(),
                    time.n_members()
                ),
            ));
        }
        if time.horizon() != horizon {
            return Err(CsgeError::shape("model horizon", horizon, time.horizon()));
        }
        eta.validate(gate.eta_max)?;
        Ok(CsgeModel {
            members,
            member_ids,
            feature_names,
            task,
            horizon,
            eta,
            global,
            local,
            time,
            scorer,
            gate,
            config,
            objective_value,
            trace,
        })
    }

    pub fn n_members(&self) -> usize {
        self.member_ids.len()
    }

    pub fn member_ids(&self) -> &[String] {
        &self.member_ids
    }

    /// Fitted members; empty when the model was built from an imported
    /// prediction cube.
    pub fn members(&self) -> &[FittedEstimator] {
        &self.members
    }

    pub fn has_members(&self) -> bool {
        !self.members.is_empty()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn eta(&self) -> EtaVector {
        self.eta
    }

    pub fn global_scores(&self) -> &GlobalScores {
        &self.global
    }

    pub fn local_memory(&self) -> &LocalMemory {
        &self.local
    }

    pub fn time_scores(&self) -> &TimeScores {
        &self.time
    }

    pub fn scorer(&self) -> &Scorer {
        &self.scorer
    }

    pub fn gate(&self) -> &SoftGateConfig {
        &self.gate
    }

    pub fn config(&self) -> &CsgeConfig {
        &self.config
    }

    /// Final objective value reached during exponent fitting.
    pub fn objective_value(&self) -> f64 {
        self.objective_value
    }

    /// Optimization trace (empty on models loaded from disk).
    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    /// The constant global weight vector at the fitted exponent.
    pub fn global_weights(&self) -> Result<Vec<f64>> {
        soft_gate(self.global.scores(), self.eta.global, &self.gate)
    }

    /// The time weight vector at lead time `t` at the fitted exponent.
    pub fn time_weights_at(&self, t: usize) -> Result<Vec<f64>> {
        soft_gate(&self.time.relative_row(t)?, self.eta.time, &self.gate)
    }

    /// Weight breakdown for a query, without needing member predictions.
    pub fn weights_for(&self, x: &[f64], t: usize) -> Result<WeightBreakdown> {
        if t >= self.horizon {
            return Err(CsgeError::LeadTimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let w_global = self.global_weights()?;
        let q = local_errors(&self.local, x)?;
        let w_local = soft_gate(&q, self.eta.local, &self.gate)?;
        let w_time = self.time_weights_at(t)?;
        WeightBreakdown::combine(&w_global, &w_local, &w_time)
    }

    /// Fused prediction and its weight breakdown for one query.
    ///
    /// Regression fuses member values as a convex combination; classification
    /// fuses per-class probability vectors and the scalar view of the result
    /// is the argmax class.
    pub fn predict(&self, x: &[f64], t: usize) -> Result<(Prediction, WeightBreakdown)> {
        if self.members.is_empty() {
            return Err(CsgeError::NotFitted);
        }
        let breakdown = self.weights_for(x, t)?;
        let weights = breakdown.combined();
        let member_predictions: Vec<Prediction> = self
            .members
            .iter()
            .map(|m| m.predict(x, t))
            .collect::<Result<_>>()?;
        let fused = fuse_predictions(&member_predictions, &weights, self.task)?;
        Ok((fused, breakdown))
    }

    /// Per-member and fused scalar predictions for one query, in member
    /// order followed by the fused value.
    pub fn predict_with_members(
        &self,
        x: &[f64],
        t: usize,
    ) -> Result<(Vec<f64>, Prediction, WeightBreakdown)> {
        if self.members.is_empty() {
            return Err(CsgeError::NotFitted);
        }
        let breakdown = self.weights_for(x, t)?;
        let weights = breakdown.combined();
        let member_predictions: Vec<Prediction> = self
            .members
            .iter()
            .map(|m| m.predict(x, t))
            .collect::<Result<_>>()?;
        let scalars = member_predictions.iter().map(|p| p.scalar()).collect();
        let fused = fuse_predictions(&member_predictions, &weights, self.task)?;
        Ok((scalars, fused, breakdown))
    }

    /// Mean scorer value of the fused predictions over a test set
    /// (aggregated per [`Scorer::aggregate`]).
    pub fn score_on(&self, test: &Dataset) -> Result<f64> {
        let mut scores = Vec::with_capacity(test.n_samples() * test.horizon());
        for row in 0..test.n_samples() {
            let x = test.feature_row(row);
            for t in 0..test.horizon().min(self.horizon) {
                let (prediction, _) = self.predict(&x, t)?;
                scores.push(self.scorer.score(prediction.scalar(), test.target(row, t))?);
            }
        }
        Ok(self.scorer.aggregate(&scores))
    }
}

pub(crate) fn fuse_predictions(
    member_predictions: &[Prediction],
    weights: &[f64],
    task: Task,
) -> Result<Prediction> {
    match task {
        Task::Regression => {
            let values: Vec<f64> = member_predictions.iter().map(|p| p.scalar()).collect();
            Ok(Prediction::Value(fuse_values(&values, weights)))
        }
        Task::Classification { n_classes } => {
            let mut fused = Vec::with_capacity(n_classes);
            for class in 0..n_classes {
                let class_probs: Vec<f64> = member_predictions
                    .iter()
                    .map(|p| match p {
                        Prediction::Probabilities(probabilities) => {
                            probabilities.get(class).copied().unwrap_or(0.0)
                        }
                        Prediction::Value(v) => {
                            // hard label from an imported prediction: one-hot
                            if *v as usize == class {
                                1.0
                            } else {
                                0.0
                            }
                        }
                    })
                    .collect();
                fused.push(fuse_values(&class_probs, weights));
            }
            let total: f64 = fused.iter().sum();
            if total > 0.0 {
                for p in &mut fused {
                    *p /= total;
                }
            }
            Ok(Prediction::Probabilities(fused))
        }
    }
}

/// Fits the full pipeline with a k-fold plan supplied by the caller.
pub fn fit_with_plan(
    specs: &[EstimatorSpec],
    data: &Dataset,
    plan: &FoldPlan,
    config: &CsgeConfig,
) -> Result<CsgeModel> {
    config.validate()?;
    data.validate()?;
    if specs.len() < 2 {
        return Err(CsgeError::InvalidHyperParams(format!(
            "an ensemble needs at least 2 members, got {}",
            specs.len()
        )));
    }
    for spec in specs {
        spec.validate()?;
    }
    let (cube, probs) = build_prediction_cube_with_observer(specs, data, plan, |_, _, _| {})?;
    let mut model = fit_weighting(&cube, probs.as_ref(), data, config)?;
    model.members = specs
        .iter()
        .map(|spec| spec.fit(data))
        .collect::<Result<_>>()?;
    Ok(model)
}

/// Fits a CSGE: builds out-of-fold predictions per the configured protocol,
/// fits the weighting tables and exponents on them, then refits every member
/// on the full training set.
pub fn fit(specs: &[EstimatorSpec], data: &Dataset, config: &CsgeConfig) -> Result<CsgeModel> {
    config.validate()?;
    match config.protocol {
        TrainingProtocol::KFold { folds } => {
            let plan = FoldPlan::for_dataset(data, folds, config.seed)?;
            fit_with_plan(specs, data, &plan, config)
        }
        TrainingProtocol::Holdout { fraction } => fit_holdout(specs, data, fraction, config),
    }
}

fn fit_holdout(
    specs: &[EstimatorSpec],
    data: &Dataset,
    fraction: f64,
    config: &CsgeConfig,
) -> Result<CsgeModel> {
    data.validate()?;
    if specs.len() < 2 {
        return Err(CsgeError::InvalidHyperParams(format!(
            "an ensemble needs at least 2 members, got {}",
            specs.len()
        )));
    }
    let n = data.n_samples();
    let held = ((n as f64) * fraction).ceil() as usize;
    if held == 0 || held >= n {
        return Err(CsgeError::InvalidHyperParams(format!(
            "holdout fraction {fraction} leaves no usable split of {n} samples"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    order.shuffle(&mut rng);
    let mut stats_rows: Vec<usize> = order[..held].to_vec();
    let mut member_rows: Vec<usize> = order[held..].to_vec();
    stats_rows.sort_unstable();
    member_rows.sort_unstable();

    let member_train = data.subset(&member_rows);
    let stats_data = data.subset(&stats_rows);
    let ids = member_ids(specs);
    let mut fitted = Vec::with_capacity(specs.len());
    for (j, spec) in specs.iter().enumerate() {
        spec.validate()?;
        if member_rows.len() < spec.min_train_samples() {
            return Err(CsgeError::FoldTooSmall {
                fold: 0,
                member: ids[j].clone(),
                needed: spec.min_train_samples(),
                got: member_rows.len(),
            });
        }
        fitted.push(spec.fit(&member_train)?);
    }

    let n_classes = data.task().n_classes();
    let mut prob_buffer = n_classes.map(|k| vec![0.0; stats_rows.len() * specs.len() * k]);
    let cube = PredictionCube::from_fn(
        stats_data.n_samples(),
        stats_data.horizon(),
        ids,
        |row, j, t| {
            let x = stats_data.feature_row(row);
            match fitted[j].predict(&x, t) {
                Ok(prediction) => {
                    if let (Some(buffer), Prediction::Probabilities(p), Some(k)) =
                        (prob_buffer.as_mut(), &prediction, n_classes)
                    {
                        for (class, &pv) in p.iter().enumerate() {
                            buffer[(row * specs.len() + j) * k + class] = pv;
                        }
                    }
                    prediction.scalar()
                }
                Err(_) => f64::NAN,
            }
        },
    )?;
    let probs = match (prob_buffer, n_classes) {
        (Some(buffer), Some(k)) => Some(ClassProbCube::from_fn(
            stats_data.n_samples(),
            specs.len(),
            k,
            |s, j, c| buffer[(s * specs.len() + j) * k + c],
        )?),
        _ => None,
    };

    let mut model = fit_weighting(&cube, probs.as_ref(), &stats_data, config)?;
    model.members = specs
        .iter()
        .map(|spec| spec.fit(data))
        .collect::<Result<_>>()?;
    Ok(model)
}

/// Fits weighting tables and exponents from an existing prediction cube
/// (e.g. imported external predictions aligned with `data`). The resulting
/// model has no member estimators and cannot predict new queries; it serves
/// weight analysis and explanation.
pub fn fit_from_cube(
    cube: &PredictionCube,
    data: &Dataset,
    config: &CsgeConfig,
) -> Result<CsgeModel> {
    config.validate()?;
    data.validate()?;
    let probs = match data.task() {
        Task::Regression => None,
        Task::Classification { n_classes } => Some(ClassProbCube::from_fn(
            cube.n_samples(),
            cube.n_members(),
            n_classes,
            |s, j, c| {
                if cube.get(s, j, 0) as usize == c {
                    1.0
                } else {
                    0.0
                }
            },
        )?),
    };
    fit_weighting(cube, probs.as_ref(), data, config)
}

fn fit_weighting(
    cube: &PredictionCube,
    probs: Option<&ClassProbCube>,
    data: &Dataset,
    config: &CsgeConfig,
) -> Result<CsgeModel> {
    if cube.n_samples() != data.n_samples() || cube.horizon() != data.horizon() {
        return Err(CsgeError::shape(
            "prediction cube vs data",
            format!("{}x{}", data.n_samples(), data.horizon()),
            format!("{}x{}", cube.n_samples(), cube.horizon()),
        ));
    }
    let scorer = &config.scorer;
    let global = fit_global(cube, data.targets(), scorer)?;
    let time = fit_time(cube, data.targets(), scorer)?;

    // lead-time-0 out-of-fold errors feed the local memory
    let n = data.n_samples();
    let j_members = cube.n_members();
    let t0_errors = DMatrix::from_fn(n, j_members, |row, j| {
        scorer
            .score(cube.get(row, j, 0), data.target(row, 0))
            .unwrap_or(f64::NAN)
    });
    if t0_errors.iter().any(|v| !v.is_finite()) {
        return Err(CsgeError::DegenerateData(
            "scoring out-of-fold predictions failed".into(),
        ));
    }
    let n_dim = config.weighting.resolved_n_dim(data.n_features());
    let neighbors = config.weighting.resolved_neighbors(n);
    let pca = fit_pca(data.features(), n_dim)?;
    let local = LocalMemory::new(pca, data.features(), t0_errors, neighbors)?;

    // neighborhoods do not depend on the exponents, so precompute q per row
    let mut local_q = DMatrix::zeros(n, j_members);
    for row in 0..n {
        let q = local_errors(&local, &data.feature_row(row))?;
        for (j, value) in q.iter().enumerate() {
            local_q[(row, j)] = *value;
        }
    }

    let ctx = EvalContext {
        predictions: cube,
        class_probs: probs,
        targets: data.targets(),
        global: &global,
        local_q: &local_q,
        time: &time,
        gate: config.gate,
    };
    let outcome = minimize(&config.objective, &ctx)?;

    CsgeModel::assemble(
        Vec::new(),
        cube.member_ids().to_vec(),
        data.feature_names().to_vec(),
        data.task(),
        data.horizon(),
        outcome.eta,
        global,
        local,
        time,
        scorer.clone(),
        config.gate,
        config.clone(),
        outcome.value,
        outcome.trace,
    )
}

/// One row of an evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// Repeated cross-validation report: one row per member, one for the CSGE,
/// one for the plain-averaging baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: String,
    pub n_repetitions: usize,
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn row(&self, name: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

fn summarize(name: &str, samples: &[f64]) -> ReportRow {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    ReportRow {
        name: name.to_string(),
        mean,
        std: var.sqrt(),
        min: samples.iter().cloned().fold(f64::INFINITY, f64::min),
        max: samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Repeated k-fold cross-validation of the ensemble against its members and
/// the plain-averaging baseline. Deterministic given the seeds; repetitions
/// are merged in seed-then-fold order.
pub fn repeated_cv(
    specs: &[EstimatorSpec],
    data: &Dataset,
    config: &CsgeConfig,
    outer_folds: usize,
    seeds: &[u64],
) -> Result<EvalReport> {
    if seeds.is_empty() {
        return Err(CsgeError::InvalidHyperParams("need at least one seed".into()));
    }
    let ids = member_ids(specs);
    let mut member_scores: Vec<Vec<f64>> = vec![Vec::new(); specs.len()];
    let mut csge_scores = Vec::new();
    let mut averaging_scores = Vec::new();

    for &seed in seeds {
        let outer = FoldPlan::for_dataset(data, outer_folds, seed)?;
        for fold in 0..outer.n_folds() {
            let (train_rows, test_rows) = outer.split(fold);
            let train = data.subset(&train_rows);
            let test = data.subset(&test_rows);
            let mut fold_config = config.clone();
            fold_config.seed = seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(fold as u64);
            let model = fit(specs, &train, &fold_config)?;

            let mut per_member: Vec<Vec<f64>> = vec![Vec::new(); specs.len()];
            let mut fused = Vec::new();
            let mut averaged = Vec::new();
            for row in 0..test.n_samples() {
                let x = test.feature_row(row);
                for t in 0..test.horizon() {
                    let (scalars, fused_prediction, _) = model.predict_with_members(&x, t)?;
                    let truth = test.target(row, t);
                    for (j, &scalar) in scalars.iter().enumerate() {
                        per_member[j].push(config.scorer.score(scalar, truth)?);
                    }
                    fused.push(config.scorer.score(fused_prediction.scalar(), truth)?);

                    let member_predictions: Vec<Prediction> = model
                        .members()
                        .iter()
                        .map(|m| m.predict(&x, t))
                        .collect::<Result<_>>()?;
                    let uniform = vec![1.0 / specs.len() as f64; specs.len()];
                    let mean_prediction =
                        fuse_predictions(&member_predictions, &uniform, data.task())?;
                    averaged.push(config.scorer.score(mean_prediction.scalar(), truth)?);
                }
            }
            for (j, scores) in per_member.iter().enumerate() {
                member_scores[j].push(config.scorer.aggregate(scores));
            }
            csge_scores.push(config.scorer.aggregate(&fused));
            averaging_scores.push(config.scorer.aggregate(&averaged));
        }
    }

    let mut rows: Vec<ReportRow> = ids
        .iter()
        .zip(&member_scores)
        .map(|(id, scores)| summarize(id, scores))
        .collect();
    rows.push(summarize("csge", &csge_scores));
    rows.push(summarize("averaging", &averaging_scores));
    Ok(EvalReport {
        metric: config.scorer.metric_name().to_string(),
        n_repetitions: csge_scores.len(),
        rows,
    })
}
