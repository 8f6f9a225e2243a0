//! Multinomial logistic regression on standardized object rows.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::pool::DesignMatrix;
use crate::error::{Error, Result};
use crate::rng;

/// Training hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    /// Initial step size of every epoch; halved until the objective does not rise.
    pub lr: f64,
    pub epochs: usize,
    /// L2 penalty `l2/2 · ‖W‖²` on all weights, bias included.
    pub l2: f64,
    /// Seed of the initial weights.
    pub seed: u64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            lr: 1.0,
            epochs: 200,
            l2: 1e-4,
            seed: 0,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::invalid(format!("l2 must be non-negative, got {}", self.l2)));
        }
        Ok(())
    }
}

/// Features with a training spread at or below this are treated as constant.
pub const MIN_SCALE: f64 = 1e-9;

const MAX_HALVINGS: usize = 60;

/// Softmax classifier. Weights are `(width + 1) × n_classes`, row-major, the
/// last row holding the biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    width: usize,
    n_classes: usize,
    mean: Vec<f64>,
    scale: Vec<f64>,
    weights: Vec<f64>,
    /// Objective after each epoch.
    pub losses: Vec<f64>,
}

impl LinearClassifier {
    /// All-zero weights and identity standardization.
    pub fn zeros(width: usize, n_classes: usize) -> Self {
        LinearClassifier {
            width,
            n_classes,
            mean: vec![0.0; width],
            scale: vec![1.0; width],
            weights: vec![0.0; (width + 1) * n_classes],
            losses: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Fit standardization and weights to `dm`.
    pub fn train(dm: &DesignMatrix, hyper: &Hyper) -> Result<Self> {
        hyper.validate()?;
        let n_classes = dm.n_classes();
        let mut seen = vec![false; n_classes];
        for &l in dm.labels() {
            seen[l] = true;
        }
        if seen.iter().filter(|&&s| s).count() < 2 {
            return Err(Error::invalid("training needs at least two classes"));
        }
        if dm.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::TrainingFailure("non-finite feature value".into()));
        }

        let w = dm.width();
        let n = dm.len() as f64;
        let mut mean = vec![0.0; w];
        for row in dm.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; w];
        for row in dm.rows() {
            for j in 0..w {
                var[j] += (row[j] - mean[j]).powi(2) / n;
            }
        }
        let scale: Vec<f64> = var
            .iter()
            .map(|v| if v.sqrt() > MIN_SCALE { v.sqrt() } else { 1.0 })
            .collect();

        let mut model = LinearClassifier {
            width: w,
            n_classes,
            mean,
            scale,
            weights: vec![0.0; (w + 1) * n_classes],
            losses: Vec::with_capacity(hyper.epochs),
        };
        let x = model.standardize(dm);
        let normal = Normal::new(0.0, 0.01).expect("valid normal");
        let mut r = rng::seeded(hyper.seed);
        for v in &mut model.weights {
            *v = normal.sample(&mut r);
        }

        let penalty = |wt: &[f64]| 0.5 * hyper.l2 * wt.iter().map(|v| v * v).sum::<f64>();
        let mut current = objective(&model.weights, &x, dm.labels(), n_classes, hyper.l2).0;
        for _ in 0..hyper.epochs {
            let (ce, grad) = objective(&model.weights, &x, dm.labels(), n_classes, 0.0);
            if !ce.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::TrainingFailure("loss diverged".into()));
            }
            // Proximal step on the penalty, backtracking until the objective does not rise.
            let mut step = hyper.lr;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let cand: Vec<f64> = model
                    .weights
                    .iter()
                    .zip(&grad)
                    .map(|(wv, g)| (wv - step * g) / (1.0 + step * hyper.l2))
                    .collect();
                let f = objective(&cand, &x, dm.labels(), n_classes, 0.0).0 + penalty(&cand);
                if f <= current {
                    accepted = Some((cand, f));
                    break;
                }
                step *= 0.5;
            }
            // No accepted step means the objective is flat to rounding.
            if let Some((cand, f)) = accepted {
                model.weights = cand;
                current = f;
            }
            if !current.is_finite() {
                return Err(Error::TrainingFailure("loss is not finite".into()));
            }
            model.losses.push(current);
        }
        Ok(model)
    }

    fn standardize(&self, dm: &DesignMatrix) -> Vec<f64> {
        let mut x = Vec::with_capacity(dm.values().len());
        for row in dm.rows() {
            x.extend(row.iter().enumerate().map(|(j, v)| (v - self.mean[j]) / self.scale[j]));
        }
        x
    }

    /// Class scores per row.
    pub fn logits(&self, dm: &DesignMatrix) -> Result<Vec<f64>> {
        if dm.width() != self.width {
            return Err(Error::invalid(format!(
                "model expects width {}, got {}",
                self.width,
                dm.width()
            )));
        }
        let x = self.standardize(dm);
        Ok(logits(&self.weights, &x, dm.len(), self.n_classes))
    }

    /// Argmax class per row; ties go to the lowest class index.
    pub fn predict(&self, dm: &DesignMatrix) -> Result<Vec<usize>> {
        let z = self.logits(dm)?;
        Ok(z.chunks(self.n_classes).map(argmax).collect())
    }
}

fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in z.iter().enumerate() {
        if *v > z[best] {
            best = k;
        }
    }
    best
}

fn logits(weights: &[f64], x: &[f64], rows: usize, c: usize) -> Vec<f64> {
    let w = x.len().checked_div(rows).unwrap_or(0);
    let mut out = vec![0.0; rows * c];
    for i in 0..rows {
        let xi = &x[i * w..(i + 1) * w];
        let zi = &mut out[i * c..(i + 1) * c];
        zi.copy_from_slice(&weights[w * c..(w + 1) * c]);
        for (j, xv) in xi.iter().enumerate() {
            for (z, wv) in zi.iter_mut().zip(&weights[j * c..(j + 1) * c]) {
                *z += xv * wv;
            }
        }
    }
    out
}

/// Mean softmax cross-entropy over the rows of `x` plus `l2/2 · ‖weights‖²`,
/// and its gradient with respect to `weights`.
///
/// `x` is row-major with `labels.len()` rows; `weights` is laid out as in
/// [`LinearClassifier`].
pub fn objective(weights: &[f64], x: &[f64], labels: &[usize], n_classes: usize, l2: f64) -> (f64, Vec<f64>) {
    let rows = labels.len();
    let c = n_classes;
    let w = x.len().checked_div(rows).unwrap_or(0);
    assert_eq!(weights.len(), (w + 1) * c, "weight shape");
    let z = logits(weights, x, rows, c);
    let mut loss = 0.0;
    let mut grad = vec![0.0; weights.len()];
    let mut p = vec![0.0; c];
    for i in 0..rows {
        let zi = &z[i * c..(i + 1) * c];
        let zmax = zi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (pk, zk) in p.iter_mut().zip(zi) {
            *pk = (zk - zmax).exp();
            sum += *pk;
        }
        loss += sum.ln() + zmax - zi[labels[i]];
        for pk in &mut p {
            *pk /= sum;
        }
        p[labels[i]] -= 1.0;
        let xi = &x[i * w..(i + 1) * w];
        for (j, xv) in xi.iter().enumerate() {
            for (g, pk) in grad[j * c..(j + 1) * c].iter_mut().zip(&p) {
                *g += xv * pk;
            }
        }
        for (g, pk) in grad[w * c..].iter_mut().zip(&p) {
            *g += pk;
        }
    }
    let n = rows.max(1) as f64;
    loss /= n;
    for (g, wv) in grad.iter_mut().zip(weights) {
        *g = *g / n + l2 * wv;
    }
    loss += 0.5 * l2 * weights.iter().map(|v| v * v).sum::<f64>();
    (loss, grad)
}

/// Accuracy and confusion counts (`confusion[true][predicted]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub confusion: Vec<Vec<usize>>,
}

pub fn evaluate(model: &LinearClassifier, dm: &DesignMatrix) -> Result<Evaluation> {
    if dm.is_empty() {
        return Err(Error::invalid("evaluation set is empty"));
    }
    let pred = model.predict(dm)?;
    let c = model.n_classes().max(dm.n_classes());
    let mut confusion = vec![vec![0; c]; c];
    let mut correct = 0;
    for (&t, &p) in dm.labels().iter().zip(&pred) {
        confusion[t][p] += 1;
        correct += usize::from(t == p);
    }
    Ok(Evaluation {
        accuracy: correct as f64 / dm.len() as f64,
        confusion,
    })
}
