//! One-vs-one linear soft-margin C-SVM.
//!
//! Each unordered class pair gets its own binary machine solved exactly in
//! the dual by [`smo`]; prediction is majority voting over the machines with
//! documented tie-breaking. Features are standardized internally when
//! `scale` is set, using training-set statistics only.

mod smo;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::ClassificationExample;
use crate::matrix::dot;
use crate::parallel;

pub const SVM_MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SvmType {
    #[serde(rename = "c-classification")]
    CClassification,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Linear,
}

/// Solver and model parameters. `degree`, `gamma` and `coef0` are inert
/// under the linear kernel but kept so the standard parameter set is
/// representable verbatim.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    /// Standardize features to zero mean / unit variance before training.
    pub scale: bool,
    pub svm_type: SvmType,
    pub kernel: KernelKind,
    pub degree: u32,
    pub gamma: f64,
    pub coef0: f64,
    /// Soft-margin cost C.
    pub cost: f64,
    /// Uniform class-weight multiplier on C.
    pub class_weights: f64,
    /// Solver termination tolerance on the maximal KKT violation.
    pub epsilon: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            scale: true,
            svm_type: SvmType::CClassification,
            kernel: KernelKind::Linear,
            degree: 3,
            gamma: 1.0,
            coef0: 0.0,
            cost: 1.0,
            class_weights: 1.0,
            epsilon: 0.1,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if self.cost <= 0.0 || !self.cost.is_finite() {
            return Err(Error::Config(format!("cost must be > 0, got {}", self.cost)));
        }
        if self.epsilon <= 0.0 || !self.epsilon.is_finite() {
            return Err(Error::Config(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if self.class_weights <= 0.0 || !self.class_weights.is_finite() {
            return Err(Error::Config(format!(
                "class_weights must be > 0, got {}",
                self.class_weights
            )));
        }
        Ok(())
    }

    fn effective_cost(&self) -> f64 {
        self.cost * self.class_weights
    }
}

/// One trained binary machine for an unordered class pair. The positive
/// label side is `classes.1` (the larger label).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    /// (lo, hi) class pair; +1 training labels correspond to `hi`.
    pub classes: (i32, i32),
    /// Dual coefficients per training point of this pair, in input order.
    pub alpha: Vec<f64>,
    /// Primal weight vector (linear kernel).
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Indices (into this pair's training points) with alpha > 0.
    pub support: Vec<usize>,
    pub dual_objective: f64,
    /// KKT violation at termination.
    pub kkt_residual: f64,
}

impl BinarySvm {
    pub fn decision(&self, features: &[f64]) -> f64 {
        dot(&self.weights, features) + self.bias
    }

    /// The class this machine votes for: `hi` on the positive side.
    pub fn vote(&self, features: &[f64]) -> i32 {
        if self.decision(features) > 0.0 {
            self.classes.1
        } else {
            self.classes.0
        }
    }
}

/// Train one binary machine on +/-1 labels.
pub fn train_binary_svm(
    points: &[Vec<f64>],
    labels: &[f64],
    params: &SvmParams,
) -> Result<BinarySvm> {
    params.validate()?;
    if points.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} points vs {} labels",
            points.len(),
            labels.len()
        )));
    }
    if points.is_empty() {
        return Err(Error::EmptyInput("no training points"));
    }
    let dim = points[0].len();
    for point in points {
        if point.len() != dim {
            return Err(Error::DimensionMismatch(
                "inconsistent feature lengths".into(),
            ));
        }
        if point.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("svm training features"));
        }
    }
    if labels.iter().any(|y| *y != 1.0 && *y != -1.0) {
        return Err(Error::Config("binary labels must be +1 or -1".into()));
    }
    if !(labels.contains(&1.0) && labels.contains(&-1.0)) {
        return Err(Error::SingleClass);
    }

    let solution = smo::solve(points, labels, params.effective_cost(), params.epsilon)?;
    let mut weights = vec![0.0; dim];
    for ((a, y), x) in solution.alpha.iter().zip(labels).zip(points) {
        for (w, v) in weights.iter_mut().zip(x) {
            *w += a * y * v;
        }
    }
    let support = (0..points.len())
        .filter(|&i| solution.alpha[i] > 0.0)
        .collect();

    Ok(BinarySvm {
        classes: (-1, 1),
        alpha: solution.alpha,
        weights,
        bias: solution.bias,
        support,
        dual_objective: solution.dual_objective,
        kkt_residual: solution.kkt_residual,
    })
}

/// Per-feature standardization statistics fitted on the training set.
/// Features with zero spread pass through unchanged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Sample standard deviations; 0 marks a passthrough feature.
    pub sds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(points: &[Vec<f64>]) -> Self {
        let dim = points.first().map_or(0, Vec::len);
        let n = points.len() as f64;
        let mut means = vec![0.0; dim];
        for point in points {
            for (m, v) in means.iter_mut().zip(point) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut sds = vec![0.0; dim];
        if points.len() > 1 {
            for point in points {
                for ((s, m), v) in sds.iter_mut().zip(&means).zip(point) {
                    *s += (v - m) * (v - m);
                }
            }
            for s in &mut sds {
                *s = (*s / (n - 1.0)).sqrt();
            }
        }
        Self { means, sds }
    }

    pub fn apply(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .zip(&self.means)
            .zip(&self.sds)
            .map(|((v, m), s)| if *s > 0.0 { (v - m) / s } else { *v })
            .collect()
    }
}

/// One-vs-one multiclass model: k(k-1)/2 binary machines over the sorted
/// class set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub schema_version: u32,
    pub classes: Vec<i32>,
    pub n_features: usize,
    pub machines: Vec<BinarySvm>,
    pub standardizer: Option<Standardizer>,
    pub params: SvmParams,
}

/// Train a one-vs-one model; deterministic given input order. Distinct
/// class-pair solves run in parallel.
pub fn train_multiclass(
    examples: &[ClassificationExample],
    params: &SvmParams,
) -> Result<SvmModel> {
    params.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyInput("no classification examples"));
    }
    let mut classes: Vec<i32> = examples.iter().map(|e| e.target_class).collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let n_features = examples[0].features.len();

    let standardizer = params.scale.then(|| {
        let raw: Vec<Vec<f64>> = examples.iter().map(|e| e.features.clone()).collect();
        Standardizer::fit(&raw)
    });
    let features: Vec<Vec<f64>> = examples
        .iter()
        .map(|e| match &standardizer {
            Some(s) => s.apply(&e.features),
            None => e.features.clone(),
        })
        .collect();

    let mut pairs = Vec::new();
    for (a, lo) in classes.iter().enumerate() {
        for hi in &classes[a + 1..] {
            pairs.push((*lo, *hi));
        }
    }

    let machines = parallel::try_map(pairs, |(lo, hi)| {
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (example, feats) in examples.iter().zip(&features) {
            if example.target_class == lo || example.target_class == hi {
                points.push(feats.clone());
                labels.push(if example.target_class == hi { 1.0 } else { -1.0 });
            }
        }
        let mut machine = train_binary_svm(&points, &labels, params)?;
        machine.classes = (lo, hi);
        Ok(machine)
    })?;

    Ok(SvmModel {
        schema_version: SVM_MODEL_SCHEMA_VERSION,
        classes,
        n_features,
        machines,
        standardizer,
        params: *params,
    })
}

impl SvmModel {
    /// Majority vote over all pair machines. Ties break by the summed
    /// absolute decision values of the votes each class won, then by the
    /// smaller class label.
    pub fn predict(&self, features: &[f64]) -> Result<i32> {
        if features.len() != self.n_features {
            return Err(Error::DimensionMismatch(format!(
                "expected {} features, got {}",
                self.n_features,
                features.len()
            )));
        }
        let standardized = match &self.standardizer {
            Some(s) => s.apply(features),
            None => features.to_vec(),
        };
        let mut votes: Vec<(i32, u32, f64)> = self.classes.iter().map(|c| (*c, 0, 0.0)).collect();
        for machine in &self.machines {
            let decision = machine.decision(&standardized);
            let winner = machine.vote(&standardized);
            let entry = votes
                .iter_mut()
                .find(|(c, _, _)| *c == winner)
                .expect("machine votes for a known class");
            entry.1 += 1;
            entry.2 += decision.abs();
        }
        let mut best = votes[0];
        for candidate in &votes[1..] {
            if candidate.1 > best.1 || (candidate.1 == best.1 && candidate.2 > best.2) {
                best = *candidate;
            }
        }
        Ok(best.0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.schema_version != SVM_MODEL_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported svm model schema_version {}",
                model.schema_version
            )));
        }
        Ok(model)
    }
}
