use std::io::Write;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harmonics::UnitPoint;

/// A run is declared diverged once its residual exceeds this multiple of the start.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// `1/2 sum (y - u)^2`; progress is tracked by `||y - u||`.
    #[default]
    SquaredError,
    /// `log(1 + exp(-y u))` for labels in `{-1, +1}`; progress is tracked by the loss.
    CrossEntropy,
}

/// How per-sample losses are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    #[default]
    Sum,
    Mean,
}

impl Reduction {
    fn scale(self, n: usize) -> f64 {
        match self {
            Reduction::Sum => 1.0,
            Reduction::Mean => 1.0 / n as f64,
        }
    }
}

impl Loss {
    /// Loss value; the squared error carries the factor 1/2.
    pub fn value(self, reduction: Reduction, outputs: &[f64], labels: &[f64]) -> f64 {
        let s: f64 = outputs
            .iter()
            .zip(labels)
            .map(|(&u, &y)| match self {
                Loss::SquaredError => 0.5 * (y - u) * (y - u),
                Loss::CrossEntropy => softplus(-y * u),
            })
            .sum();
        s * reduction.scale(outputs.len())
    }

    /// `d loss / d u_i`.
    pub fn derivative(self, reduction: Reduction, outputs: &[f64], labels: &[f64]) -> Vec<f64> {
        let scale = reduction.scale(outputs.len());
        outputs
            .iter()
            .zip(labels)
            .map(|(&u, &y)| {
                scale
                    * match self {
                        Loss::SquaredError => u - y,
                        Loss::CrossEntropy => -y * logistic(-y * u),
                    }
            })
            .collect()
    }

    /// The quantity the stopping rule watches.
    pub fn progress(self, reduction: Reduction, outputs: &[f64], labels: &[f64]) -> f64 {
        match self {
            Loss::SquaredError => outputs.iter().zip(labels).map(|(u, y)| (y - u) * (y - u)).sum::<f64>().sqrt(),
            Loss::CrossEntropy => self.value(reduction, outputs, labels),
        }
    }
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub eta: f64,
    pub max_epochs: usize,
    /// Stop once progress falls to this fraction of its epoch-0 value.
    pub stop_fraction: f64,
    pub loss: Loss,
    pub reduction: Reduction,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta: 0.01,
            max_epochs: 10_000,
            stop_fraction: 0.05,
            loss: Loss::SquaredError,
            reduction: Reduction::Sum,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::Config(format!("eta must be finite and >= 0, got {}", self.eta)));
        }
        if !(self.stop_fraction > 0.0 && self.stop_fraction < 1.0) {
            return Err(Error::Config(format!("stop_fraction {} not in (0, 1)", self.stop_fraction)));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    DidNotConverge,
    Diverged,
}

/// Outcome of one training run. The trained parameters stay in the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    /// Progress measure at every epoch that was evaluated, starting at epoch 0.
    pub residual_trace: Vec<f64>,
    /// First epoch with `trace[e] <= stop_fraction * trace[0]`.
    pub epochs_to_stop: Option<usize>,
    pub verdict: Verdict,
    pub config_hash: String,
}

#[derive(Serialize)]
struct Summary<'a> {
    config_hash: &'a str,
    epochs_to_stop: Option<usize>,
    verdict: Verdict,
    epochs_run: usize,
    initial_residual: f64,
    final_residual: f64,
}

impl TrainRun {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epoch,residual")?;
        for (e, r) in self.residual_trace.iter().enumerate() {
            writeln!(w, "{e},{r:e}")?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> String {
        let summary = Summary {
            config_hash: &self.config_hash,
            epochs_to_stop: self.epochs_to_stop,
            verdict: self.verdict,
            epochs_run: self.residual_trace.len().saturating_sub(1),
            initial_residual: self.residual_trace.first().copied().unwrap_or(0.0),
            final_residual: self.residual_trace.last().copied().unwrap_or(0.0),
        };
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    }
}

/// A model the gradient-descent loop can drive.
pub trait Trainable {
    fn predict(&self, points: &[UnitPoint]) -> Result<Vec<f64>>;
    /// Gradient over [`Trainable::params`] given `d loss / d u` per sample.
    fn backprop(&self, points: &[UnitPoint], dl_du: &[f64]) -> Result<Vec<f64>>;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, params: &[f64]) -> Result<()>;
    /// `params -= eta * grad`.
    fn step(&mut self, grad: &[f64], eta: f64);

    /// Loss and its gradient at the current parameters.
    fn loss_and_gradient(
        &self,
        points: &[UnitPoint],
        labels: &[f64],
        loss: Loss,
        reduction: Reduction,
    ) -> Result<(f64, Vec<f64>)> {
        let u = self.predict(points)?;
        let g = self.backprop(points, &loss.derivative(reduction, &u, labels))?;
        Ok((loss.value(reduction, &u, labels), g))
    }
}

/// Full-batch gradient descent on a two-layer network.
pub fn train_full_batch<M: Trainable>(
    net: &mut M,
    points: &[UnitPoint],
    labels: &[f64],
    config: &TrainConfig,
) -> Result<TrainRun> {
    train_observed(net, points, labels, config, |_, _| ControlFlow::Continue(()))
}

/// As [`train_full_batch`]; `observer` sees the outputs of every epoch
/// before the update and may stop the run early.
pub fn train_full_batch_observed<M: Trainable, F>(
    net: &mut M,
    points: &[UnitPoint],
    labels: &[f64],
    config: &TrainConfig,
    observer: F,
) -> Result<TrainRun>
where
    F: FnMut(usize, &[f64]) -> ControlFlow<()>,
{
    train_observed(net, points, labels, config, observer)
}

/// Full-batch gradient descent with backpropagation through every layer.
pub fn train_deep<M: Trainable>(
    net: &mut M,
    points: &[UnitPoint],
    labels: &[f64],
    config: &TrainConfig,
) -> Result<TrainRun> {
    train_observed(net, points, labels, config, |_, _| ControlFlow::Continue(()))
}

/// The shared loop. Epoch `e` evaluates the model after `e` updates.
pub fn train_observed<M: Trainable, F>(
    net: &mut M,
    points: &[UnitPoint],
    labels: &[f64],
    config: &TrainConfig,
    mut observer: F,
) -> Result<TrainRun>
where
    F: FnMut(usize, &[f64]) -> ControlFlow<()>,
{
    config.validate()?;
    if labels.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            found: labels.len(),
        });
    }
    if labels.iter().any(|y| !y.is_finite()) {
        return Err(Error::Argument("labels must be finite".into()));
    }
    let mut trace = Vec::new();
    let finish = |trace: Vec<f64>, epochs_to_stop, verdict| TrainRun {
        residual_trace: trace,
        epochs_to_stop,
        verdict,
        config_hash: config.hash(),
    };
    for epoch in 0..=config.max_epochs {
        let u = net.predict(points)?;
        let r = config.loss.progress(config.reduction, &u, labels);
        trace.push(r);
        let r0 = trace[0];
        if r <= config.stop_fraction * r0 {
            return Ok(finish(trace, Some(epoch), Verdict::Converged));
        }
        if !r.is_finite() || r > DIVERGENCE_FACTOR * r0 {
            return Ok(finish(trace, None, Verdict::Diverged));
        }
        if epoch == config.max_epochs || observer(epoch, &u).is_break() {
            break;
        }
        let g = net.backprop(points, &config.loss.derivative(config.reduction, &u, labels))?;
        net.step(&g, config.eta);
    }
    Ok(finish(trace, None, Verdict::DidNotConverge))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_derivatives_match_differences() {
        let u = [0.3, -1.2, 2.0];
        let y = [1.0, -1.0, -1.0];
        for loss in [Loss::SquaredError, Loss::CrossEntropy] {
            for red in [Reduction::Sum, Reduction::Mean] {
                let d = loss.derivative(red, &u, &y);
                for i in 0..3 {
                    let mut up = u;
                    let mut dn = u;
                    up[i] += 1e-6;
                    dn[i] -= 1e-6;
                    let fd = (loss.value(red, &up, &y) - loss.value(red, &dn, &y)) / 2e-6;
                    assert!((fd - d[i]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = TrainConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.eta = 0.02;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        assert!(TrainConfig { stop_fraction: 1.0, ..a.clone() }.validate().is_err());
        assert!(TrainConfig { eta: -1.0, ..a }.validate().is_err());
    }
}
