//! Small end-to-end demonstrations on the circle.

use std::f64::consts::PI;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::{circle_grid_angles, uniform_circle_grid};
use crate::nets::{init_two_layer, train_full_batch_observed, Layer, Loss, Reduction, TrainConfig, Trainable};

use super::svg::{Plot, Series};
use super::sweep::{run_sweep, SweepResult, SweepSpec};

/// Squared norm of the projection of grid samples onto frequency `k`
/// (the span of the sampled `cos k theta`, `sin k theta`).
pub fn mode_energy(values: &[f64], k: usize) -> f64 {
    fourier_energies(values, &[k])[0]
}

/// [`mode_energy`] for several frequencies at once.
pub fn fourier_energies(values: &[f64], ks: &[usize]) -> Vec<f64> {
    let n = values.len();
    let table: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .collect();
    ks.iter()
        .map(|&k| {
            let (mut c, mut s) = (0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                let (cj, sj) = table[(k * j) % n];
                c += v * cj;
                s += v * sj;
            }
            let nf = n as f64;
            if k % n == 0 || 2 * (k % n) == n {
                // a single real basis vector of norm sqrt(n)
                c * c / nf
            } else {
                (c * c + s * s) * 2.0 / nf
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoSinesConfig {
    pub n: usize,
    pub m: usize,
    pub kappa: f64,
    pub eta: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub low: usize,
    pub high: usize,
    /// A mode counts as fitted once its residual energy drops below this share of its start.
    pub energy_fraction: f64,
    /// Epochs whose predictions are kept for the overlay plot.
    pub snapshots: Vec<usize>,
}

impl Default for TwoSinesConfig {
    fn default() -> Self {
        Self {
            n: 256,
            m: 8000,
            kappa: 2.5,
            eta: 0.015,
            max_epochs: 20_000,
            seed: 0,
            low: 4,
            high: 14,
            energy_fraction: 0.1,
            snapshots: vec![0, 50, 200, 1000],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSinesReport {
    pub config: TwoSinesConfig,
    /// Energies of the target at the two frequencies.
    pub target_energy: [f64; 2],
    /// Residual energies at epoch 0.
    pub initial_residual_energy: [f64; 2],
    /// First epoch each mode's residual energy fell below the threshold.
    pub epochs_low: Option<usize>,
    pub epochs_high: Option<usize>,
    /// Largest share of the residual energy at frequency 0 over the run.
    pub max_dc_fraction: f64,
    /// `(epoch, low energy, high energy, dc energy)` for every epoch.
    pub energy_trace: Vec<(usize, f64, f64, f64)>,
    #[serde(skip)]
    pub snapshots: Vec<(usize, Vec<f64>)>,
}

impl TwoSinesReport {
    pub fn ratio(&self) -> Option<f64> {
        Some(self.epochs_high? as f64 / self.epochs_low? as f64)
    }

    pub fn plot(&self) -> Plot {
        let angles = circle_grid_angles(self.config.n);
        let target = two_sines(&angles, self.config.low, self.config.high);
        let mut plot = Plot::new(
            format!("sin({}t) + sin({}t): fit by epoch", self.config.low, self.config.high),
            "theta",
            "value",
        )
        .with(Series::line("target", angles.iter().copied().zip(target).collect()));
        for (epoch, u) in &self.snapshots {
            plot = plot.with(Series::line(format!("epoch {epoch}"), angles.iter().copied().zip(u.iter().copied()).collect()));
        }
        plot
    }

    pub fn energy_plot(&self) -> Plot {
        let pick = |f: fn(&(usize, f64, f64, f64)) -> f64| -> Vec<(f64, f64)> {
            self.energy_trace.iter().map(|e| (e.0 as f64 + 1.0, f(e))).collect()
        };
        let mut plot = Plot::new("residual energy per mode", "epoch + 1", "energy")
            .with(Series::line(format!("k = {}", self.config.low), pick(|e| e.1)))
            .with(Series::line(format!("k = {}", self.config.high), pick(|e| e.2)));
        plot.log_x = true;
        plot.log_y = true;
        plot
    }
}

fn two_sines(angles: &[f64], low: usize, high: usize) -> Vec<f64> {
    angles.iter().map(|t| (low as f64 * t).sin() + (high as f64 * t).sin()).collect()
}

/// Trains a two-layer network with bias on `sin(low t) + sin(high t)` and
/// records when each frequency of the residual is fitted.
pub fn demo_two_sines(config: &TwoSinesConfig) -> Result<TwoSinesReport> {
    if config.low == 0 || config.low >= config.high || 2 * config.high >= config.n {
        return Err(Error::Config("need 0 < low < high < n / 2".into()));
    }
    let points = uniform_circle_grid(config.n);
    let angles = circle_grid_angles(config.n);
    let y = two_sines(&angles, config.low, config.high);
    let ks = [config.low, config.high, 0];
    let target = fourier_energies(&y, &ks);
    let mut net = init_two_layer(config.m, 2, config.kappa, true, config.seed)?;
    let train = TrainConfig {
        eta: config.eta,
        max_epochs: config.max_epochs,
        // the run ends through the observer once both modes are fitted
        stop_fraction: 1e-9,
        loss: Loss::SquaredError,
        reduction: Reduction::Sum,
        seed: config.seed,
    };
    let mut trace = Vec::new();
    let mut snapshots = Vec::new();
    let mut initial = [0.0; 2];
    let (mut epochs_low, mut epochs_high) = (None, None);
    let mut max_dc: f64 = 0.0;
    let mut last_u = Vec::new();
    train_full_batch_observed(&mut net, &points, &y, &train, |epoch, u| {
        let r: Vec<f64> = y.iter().zip(u).map(|(a, b)| a - b).collect();
        let e = fourier_energies(&r, &ks);
        let total: f64 = r.iter().map(|v| v * v).sum();
        if epoch == 0 {
            initial = [e[0], e[1]];
        }
        if total > 0.0 {
            max_dc = max_dc.max(e[2] / total);
        }
        if epochs_low.is_none() && e[0] < config.energy_fraction * initial[0] {
            epochs_low = Some(epoch);
        }
        if epochs_high.is_none() && e[1] < config.energy_fraction * initial[1] {
            epochs_high = Some(epoch);
        }
        trace.push((epoch, e[0], e[1], e[2]));
        if config.snapshots.contains(&epoch) {
            snapshots.push((epoch, u.to_vec()));
        }
        last_u = u.to_vec();
        if epochs_low.is_some() && epochs_high.is_some() {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    if let Some(&(epoch, ..)) = trace.last() {
        if !config.snapshots.contains(&epoch) {
            snapshots.push((epoch, last_u));
        }
    }
    Ok(TwoSinesReport {
        config: config.clone(),
        target_energy: [target[0], target[1]],
        initial_residual_energy: initial,
        epochs_low,
        epochs_high,
        max_dc_fraction: max_dc,
        energy_trace: trace,
        snapshots,
    })
}

/// How the bias-free network is fitted in the interpolation demo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OddFitMode {
    /// Hidden layer frozen at its Gaussian initialization; output weights by
    /// minimum-norm least squares with relative ridge `ridge`.
    OutputLeastSquares { ridge: f64 },
    /// Gradient descent on the hidden layer with fixed output signs.
    Hidden { eta: f64, max_epochs: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OddConfig {
    pub frequency: usize,
    pub n_train: usize,
    pub n_dense: usize,
    pub m: usize,
    pub kappa: f64,
    pub seed: u64,
    pub mode: OddFitMode,
}

impl Default for OddConfig {
    fn default() -> Self {
        Self {
            frequency: 3,
            n_train: 51,
            n_dense: 10_000,
            m: 4000,
            kappa: 1.0,
            seed: 0,
            mode: OddFitMode::OutputLeastSquares { ridge: 1e-10 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddReport {
    pub config: OddConfig,
    /// `||y - u|| / ||y||` on the training points.
    pub train_relative_residual: f64,
    /// Same ratio on the dense grid.
    pub dense_relative_error: f64,
    /// Share of the learned function's energy at odd frequencies `k >= 3`.
    pub odd_energy_fraction: f64,
    #[serde(skip)]
    pub dense_prediction: Vec<f64>,
}

impl OddReport {
    pub fn plot(&self) -> Plot {
        let k = self.config.frequency as f64;
        let dense = circle_grid_angles(self.config.n_dense);
        let train = circle_grid_angles(self.config.n_train);
        Plot::new(format!("bias-free fit of cos({}t)", self.config.frequency), "theta", "value")
            .with(Series::line("target", dense.iter().map(|&t| (t, (k * t).cos())).collect()))
            .with(Series::line(
                "network",
                dense.iter().copied().zip(self.dense_prediction.iter().copied()).collect(),
            ))
            .with(Series::markers("training points", train.iter().map(|&t| (t, (k * t).cos())).collect()))
    }
}

fn relative_error(u: &[f64], y: &[f64]) -> f64 {
    let num: f64 = u.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = y.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

/// Fits `cos(k theta)` on a sparse grid with a bias-free network and measures
/// how it interpolates on a dense grid.
pub fn demo_odd_interpolation(config: &OddConfig) -> Result<OddReport> {
    if config.frequency == 0 || config.n_train < 3 || config.n_dense < 2 * config.frequency + 2 {
        return Err(Error::Config("need frequency >= 1, n_train >= 3 and a dense grid above Nyquist".into()));
    }
    let kf = config.frequency as f64;
    let train = uniform_circle_grid(config.n_train);
    let y: Vec<f64> = circle_grid_angles(config.n_train).iter().map(|t| (kf * t).cos()).collect();
    let mut net = init_two_layer(config.m, 2, config.kappa, false, config.seed)?;
    match config.mode {
        OddFitMode::OutputLeastSquares { ridge } => {
            net.set_trains(Layer::Output);
            net.fit_output_layer(&train, &y, ridge)?;
        }
        OddFitMode::Hidden { eta, max_epochs } => {
            let cfg = TrainConfig {
                eta,
                max_epochs,
                seed: config.seed,
                ..TrainConfig::default()
            };
            crate::nets::train_full_batch(&mut net, &train, &y, &cfg)?;
        }
    }
    let u = net.predict(&train)?;
    let dense = uniform_circle_grid(config.n_dense);
    let target: Vec<f64> = circle_grid_angles(config.n_dense).iter().map(|t| (kf * t).cos()).collect();
    let f = net.predict(&dense)?;
    let ks: Vec<usize> = (0..=config.n_dense / 2).collect();
    let energies = fourier_energies(&f, &ks);
    let total: f64 = energies.iter().sum();
    let odd: f64 = energies.iter().enumerate().filter(|(k, _)| k % 2 == 1 && *k >= 3).map(|(_, e)| e).sum();
    Ok(OddReport {
        config: config.clone(),
        train_relative_residual: relative_error(&u, &y),
        dense_relative_error: relative_error(&f, &target),
        odd_energy_fraction: if total > 0.0 { odd / total } else { 0.0 },
        dense_prediction: f,
    })
}

/// Default thresholded-cosine classification sweep.
pub fn cross_entropy_default() -> SweepSpec {
    SweepSpec {
        d: 1,
        variant: Some(crate::kernels::KernelVariant::WithBias),
        deep: None,
        freqs: (1..=8).collect(),
        n: 512,
        m: 2000,
        kappa: 1.0,
        eta: 0.01,
        stop_fraction: 0.05,
        max_epochs: 50_000,
        seeds: 3,
        ambient_dim: None,
        seed: 0,
        loss: Loss::CrossEntropy,
        reduction: None,
        cutoff: 2.0 / 3.0,
    }
}

/// Sweep on `cos(k theta)` thresholded at `spec.cutoff`, trained with cross-entropy.
pub fn demo_cross_entropy(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.loss != Loss::CrossEntropy {
        return Err(Error::Config("the cross-entropy demo needs loss = \"cross_entropy\"".into()));
    }
    run_sweep(spec)
}
