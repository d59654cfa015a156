//! Frequency sweeps: train one network per (frequency, seed) cell and
//! compare the median convergence epochs with the kernel prediction.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{iterations_estimate, ThresholdMode, ThresholdQuery};
use crate::error::{Error, Result};
use crate::harmonics::{
    circle_grid_angles, embed_random_rotation, harmonic_labels, sample_uniform_sphere, uniform_circle_grid,
    HarmonicLabelSpec, UnitPoint,
};
use crate::kernels::KernelVariant;
use crate::nets::{
    init_deep, init_two_layer, threshold_class_labels, train_observed, DeepNetSpec, Loss, Reduction, TrainConfig,
    Trainable, Verdict,
};
use crate::rng;
use crate::spectra::{coefficient, ols, sphere_area};

use super::svg::{Plot, Series};

fn default_stop_fraction() -> f64 {
    0.05
}

fn default_cutoff() -> f64 {
    2.0 / 3.0
}

/// One sweep, as read from a TOML or JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Sphere dimension of the data.
    pub d: usize,
    /// Two-layer network with this kernel variant; exclusive with `deep`.
    #[serde(default)]
    pub variant: Option<KernelVariant>,
    #[serde(default)]
    pub deep: Option<DeepNetSpec>,
    /// Frequencies, strictly increasing.
    pub freqs: Vec<usize>,
    /// Training set size before any class thresholding.
    pub n: usize,
    /// Width of the two-layer network.
    #[serde(default)]
    pub m: usize,
    #[serde(default = "one")]
    pub kappa: f64,
    pub eta: f64,
    #[serde(default = "default_stop_fraction")]
    pub stop_fraction: f64,
    pub max_epochs: usize,
    /// Independent initializations per frequency.
    pub seeds: usize,
    /// Embed the data isometrically into this many coordinates.
    #[serde(default)]
    pub ambient_dim: Option<usize>,
    /// Base seed for data, label poles and network initializations.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub loss: Loss,
    /// Defaults to `sum` for two-layer and `mean` for deep networks.
    #[serde(default)]
    pub reduction: Option<Reduction>,
    /// Class threshold for the cross-entropy task.
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
}

fn one() -> f64 {
    1.0
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.d == 0 {
            return bad("d must be >= 1".into());
        }
        if self.freqs.is_empty() || self.freqs.windows(2).any(|w| w[0] >= w[1]) {
            return bad("freqs must be non-empty and strictly increasing".into());
        }
        if self.seeds == 0 {
            return bad("seeds must be >= 1".into());
        }
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        match (&self.variant, &self.deep) {
            (Some(_), None) if self.m == 0 => return bad("two-layer sweeps need m >= 1".into()),
            (Some(_), None) => {}
            (None, Some(deep)) => deep.validate()?,
            _ => return bad("set exactly one of `variant` and `deep`".into()),
        }
        if !(self.kappa > 0.0) {
            return bad(format!("kappa must be > 0, got {}", self.kappa));
        }
        if let Some(a) = self.ambient_dim {
            if a < self.d + 1 {
                return bad(format!("ambient_dim {a} < d + 1 = {}", self.d + 1));
            }
        }
        if self.loss == Loss::CrossEntropy && self.d != 1 {
            return bad("the cross-entropy task is defined on the circle (d = 1)".into());
        }
        self.train_config(0).validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads `.json` as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        };
        parsed.map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn is_shallow(&self) -> bool {
        self.deep.is_none()
    }

    fn reduction(&self) -> Reduction {
        self.reduction
            .unwrap_or(if self.is_shallow() { Reduction::Sum } else { Reduction::Mean })
    }

    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            eta: self.eta,
            max_epochs: self.max_epochs,
            stop_fraction: self.stop_fraction,
            loss: self.loss,
            reduction: self.reduction(),
            seed,
        }
    }

    fn input_dim(&self) -> usize {
        self.ambient_dim.unwrap_or(self.d + 1)
    }
}

/// Training set for one frequency.
#[derive(Debug, Clone)]
pub struct SweepData {
    pub points: Vec<UnitPoint>,
    pub labels: Vec<f64>,
}

/// Builds the inputs and labels of frequency `k`: a uniform grid on S^1 or
/// seeded uniform samples on S^d, labelled by `cos(k theta)` or a zonal
/// harmonic, then embedded if requested.
pub fn sweep_data(spec: &SweepSpec, k: usize) -> Result<SweepData> {
    let intrinsic = if spec.d == 1 {
        uniform_circle_grid(spec.n)
    } else {
        sample_uniform_sphere(spec.n, spec.d, spec.seed)
    };
    let (points, labels) = match spec.loss {
        Loss::CrossEntropy => threshold_class_labels(&intrinsic, k.max(1), spec.cutoff)?,
        Loss::SquaredError => {
            let label_spec = if spec.d == 1 {
                HarmonicLabelSpec::circle(k, 0.0)
            } else {
                HarmonicLabelSpec::zonal_random_pole(k, spec.d, spec.seed)
            };
            let labels = harmonic_labels(&intrinsic, &label_spec)?;
            (intrinsic, labels)
        }
    };
    let points = match spec.ambient_dim {
        Some(a) => embed_random_rotation(&points, a, spec.seed)?,
        None => points,
    };
    Ok(SweepData { points, labels })
}

/// Outcome of one (frequency, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub k: usize,
    pub seed: u64,
    pub epochs_to_stop: Option<usize>,
    pub verdict: Verdict,
    pub final_fraction: f64,
}

/// Per-frequency aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySummary {
    pub k: usize,
    /// Median over seeds, with non-converged cells counted as infinite;
    /// `None` when that median is infinite.
    pub median_epochs: Option<f64>,
    /// Unscaled kernel prediction (two-layer sweeps only).
    pub predicted_iterations: Option<f64>,
    pub scaled_prediction: Option<f64>,
    /// Some cell at this frequency did not converge.
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub stderr: f64,
    pub scale: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub cells: Vec<SweepCell>,
    pub frequencies: Vec<FrequencySummary>,
    pub fit: Option<PowerLawFit>,
    /// Multiplicative constant mapping predictions onto measurements.
    pub prediction_scale: Option<f64>,
}

/// Least-squares fit of `log epochs = exponent log k + log scale` over the
/// pairs with `k >= 2`.
pub fn fit_power_law(pairs: &[(usize, f64)]) -> Result<PowerLawFit> {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|&&(k, e)| k >= 2 && e > 0.0 && e.is_finite())
        .map(|&(k, e)| ((k as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientPoints { needed: 3, have: pts.len() });
    }
    let (exponent, intercept, stderr) = ols(&pts);
    Ok(PowerLawFit {
        exponent,
        stderr,
        scale: intercept.exp(),
        points: pts.len(),
    })
}

/// Kernel eigenvalue governing frequency `k` on the sweep's training set.
///
/// S^1 grid: the exact circulant eigenvalue `sum_j K(theta_j) cos(k theta_j)`.
/// S^d samples: `n c_k / |S^d|`.
pub fn predicted_eigenvalue(variant: KernelVariant, d: usize, n: usize, k: usize) -> Result<f64> {
    if d == 1 {
        let kf = k as f64;
        return Ok(circle_grid_angles(n)
            .iter()
            .map(|&t| variant.eval_angle(t.min(2.0 * PI - t)) * (kf * t).cos())
            .sum());
    }
    Ok(n as f64 * coefficient(variant, k, d)? / sphere_area(d))
}

/// Median with `None` standing for infinity.
fn median(values: &mut [Option<usize>]) -> Option<f64> {
    let key = |v: &Option<usize>| v.map_or(f64::INFINITY, |e| e as f64);
    values.sort_by(|a, b| key(a).total_cmp(&key(b)));
    let n = values.len();
    let m = if n % 2 == 1 {
        key(&values[n / 2])
    } else {
        (key(&values[n / 2 - 1]) + key(&values[n / 2])) / 2.0
    };
    m.is_finite().then_some(m)
}

/// Trains one network on `data` with the cell's initialization seed.
pub fn run_cell(spec: &SweepSpec, data: &SweepData, k: usize, seed: u64) -> Result<SweepCell> {
    let config = spec.train_config(seed);
    let run = match (&spec.variant, &spec.deep) {
        (Some(variant), None) => {
            let mut net = init_two_layer(spec.m, spec.input_dim(), spec.kappa, variant.has_bias(), seed)?;
            train_with(&mut net, data, &config)?
        }
        (None, Some(deep)) => {
            let mut net = init_deep(*deep, spec.input_dim(), seed)?;
            train_with(&mut net, data, &config)?
        }
        _ => return Err(Error::Config("set exactly one of `variant` and `deep`".into())),
    };
    let first = run.residual_trace.first().copied().unwrap_or(0.0);
    let last = run.residual_trace.last().copied().unwrap_or(0.0);
    Ok(SweepCell {
        k,
        seed,
        epochs_to_stop: run.epochs_to_stop,
        verdict: run.verdict,
        final_fraction: if first > 0.0 { last / first } else { 0.0 },
    })
}

fn train_with<M: Trainable>(net: &mut M, data: &SweepData, config: &TrainConfig) -> Result<crate::nets::TrainRun> {
    train_observed(net, &data.points, &data.labels, config, |_, _| std::ops::ControlFlow::Continue(()))
}

/// Runs every (frequency, seed) cell in parallel and aggregates per frequency.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let data: Vec<SweepData> = spec.freqs.iter().map(|&k| sweep_data(spec, k)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, u64)> = (0..spec.freqs.len())
        .flat_map(|ki| (0..spec.seeds).map(move |s| (ki, s as u64)))
        .collect();
    let cells: Vec<SweepCell> = jobs
        .par_iter()
        .map(|&(ki, s)| {
            let seed = rng::derive(spec.seed, (ki * spec.seeds) as u64 + s);
            run_cell(spec, &data[ki], spec.freqs[ki], seed)
        })
        .collect::<Result<_>>()?;
    summarize(spec.clone(), cells)
}

/// Aggregates finished cells: medians, predictions, fit and prediction scale.
pub fn summarize(spec: SweepSpec, cells: Vec<SweepCell>) -> Result<SweepResult> {
    let query = ThresholdQuery::new(spec.stop_fraction, 0.0)?;
    let mut frequencies = Vec::with_capacity(spec.freqs.len());
    for &k in &spec.freqs {
        let mut epochs: Vec<Option<usize>> = cells.iter().filter(|c| c.k == k).map(|c| c.epochs_to_stop).collect();
        let flagged = epochs.iter().any(Option::is_none);
        let predicted_iterations = match spec.variant {
            Some(variant) => {
                let lambda = predicted_eigenvalue(variant, spec.d, spec.n, k)?;
                iterations_estimate(lambda, spec.eta, query, ThresholdMode::Linearized).ok().flatten()
            }
            None => None,
        };
        frequencies.push(FrequencySummary {
            k,
            median_epochs: median(&mut epochs),
            predicted_iterations,
            scaled_prediction: None,
            flagged,
        });
    }
    let pairs: Vec<(usize, f64)> = frequencies
        .iter()
        .filter_map(|f| f.median_epochs.map(|m| (f.k, m)))
        .collect();
    let fit = fit_power_law(&pairs).ok();
    // one constant for the whole curve, fit in log space
    let logs: Vec<f64> = frequencies
        .iter()
        .filter(|f| f.k >= 2)
        .filter_map(|f| Some((f.median_epochs? / f.predicted_iterations?).ln()))
        .filter(|v| v.is_finite())
        .collect();
    let prediction_scale = (!logs.is_empty()).then(|| (logs.iter().sum::<f64>() / logs.len() as f64).exp());
    if let Some(s) = prediction_scale {
        for f in &mut frequencies {
            f.scaled_prediction = f.predicted_iterations.map(|p| s * p);
        }
    }
    Ok(SweepResult {
        spec,
        cells,
        frequencies,
        fit,
        prediction_scale,
    })
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

impl SweepResult {
    pub fn write_cells_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,seed,epochs_to_stop,verdict,final_fraction")?;
        for c in &self.cells {
            let verdict = serde_json::to_value(c.verdict).expect("verdict serializes");
            writeln!(
                w,
                "{},{},{},{},{:e}",
                c.k,
                c.seed,
                opt(c.epochs_to_stop),
                verdict.as_str().unwrap_or_default(),
                c.final_fraction
            )?;
        }
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,median_epochs,predicted_iterations,scaled_prediction,flagged")?;
        for f in &self.frequencies {
            writeln!(
                w,
                "{},{},{},{},{}",
                f.k,
                opt(f.median_epochs),
                opt(f.predicted_iterations),
                opt(f.scaled_prediction),
                f.flagged
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep result serializes")
    }

    pub fn plot(&self) -> Plot {
        let measured = self
            .frequencies
            .iter()
            .filter_map(|f| Some((f.k as f64, f.median_epochs?)))
            .collect();
        let mut plot = Plot::new("convergence time vs frequency", "frequency k", "epochs to stop")
            .log_log()
            .with(Series::markers("median epochs", measured));
        let predicted: Vec<(f64, f64)> = self
            .frequencies
            .iter()
            .filter_map(|f| Some((f.k as f64, f.scaled_prediction?)))
            .collect();
        if !predicted.is_empty() {
            plot = plot.with(Series::line("scaled prediction", predicted));
        }
        if let Some(fit) = &self.fit {
            let line = self
                .frequencies
                .iter()
                .filter(|f| f.k >= 2)
                .map(|f| (f.k as f64, fit.scale * (f.k as f64).powf(fit.exponent)))
                .collect();
            plot = plot.with(Series::line(format!("fit k^{:.2}", fit.exponent), line));
        }
        plot
    }
}
