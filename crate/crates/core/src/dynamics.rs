//! Linearized gradient-descent dynamics in the eigenbasis of a Gram matrix.
//!
//! With `u(0) = 0` and step `eta`, the residual along eigenvector `v_i`
//! shrinks by `(1 - eta lambda_i)` per step, so
//! `||y - u(t)|| = (sum_i (1 - eta lambda_i)^{2t} (v_i^T y)^2)^{1/2}`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::GramMatrix;
use crate::spectra::{matrix_spectrum, FourierMode};

/// Eigenvalues at or below this are treated as a null direction.
pub const NULL_EIGENVALUE: f64 = 1e-12;

/// Stop when the residual of a mode falls to `target_fraction + slack` of its start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdQuery {
    pub target_fraction: f64,
    pub slack: f64,
}

impl ThresholdQuery {
    pub fn new(target_fraction: f64, slack: f64) -> Result<Self> {
        if !(target_fraction > 0.0 && target_fraction < 1.0) {
            return Err(Error::Domain(format!("target fraction {target_fraction} not in (0, 1)")));
        }
        if !(slack >= 0.0) || target_fraction + slack >= 1.0 {
            return Err(Error::Domain(format!("slack {slack} must be >= 0 with fraction + slack < 1")));
        }
        Ok(Self { target_fraction, slack })
    }

    fn level(&self) -> f64 {
        self.target_fraction + self.slack
    }
}

/// Eigenpairs of a Gram matrix with the labels expressed in that basis.
#[derive(Debug, Clone)]
pub struct LinearForecast {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// `v_i^T y`, aligned with `eigenvalues`.
    pub projections: Vec<f64>,
    pub eta: f64,
    pub initial_residual_norm: f64,
    /// Fourier label per eigenpair when the Gram matrix is circulant.
    pub modes: Option<Vec<FourierMode>>,
}

/// Eigendecomposes `gram` and projects `labels` onto its eigenvectors.
pub fn build_forecast(gram: &GramMatrix, labels: &[f64], eta: f64) -> Result<LinearForecast> {
    if labels.len() != gram.n() {
        return Err(Error::DimensionMismatch {
            expected: gram.n(),
            found: labels.len(),
        });
    }
    if !(eta > 0.0) {
        return Err(Error::Argument(format!("learning rate must be > 0, got {eta}")));
    }
    let spectrum = matrix_spectrum(gram)?;
    let lambda_max = spectrum.eigenvalues.first().copied().unwrap_or(0.0);
    if eta * lambda_max >= 1.0 {
        return Err(Error::StepTooLarge(eta * lambda_max));
    }
    let projections = spectrum.project(labels);
    Ok(LinearForecast {
        initial_residual_norm: labels.iter().map(|y| y * y).sum::<f64>().sqrt(),
        eigenvalues: spectrum.eigenvalues,
        projections,
        eta,
        modes: spectrum.modes,
    })
}

impl LinearForecast {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Predicted `||y - u(t)||`.
    pub fn residual_at(&self, t: u64) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.projections)
            .map(|(&lambda, &p)| decay(self.eta, lambda, t).powi(2) * p * p)
            .sum::<f64>()
            .sqrt()
    }

    /// Predicted residual of the part of `y` at Fourier frequency `k`
    /// (circulant Gram matrices only).
    pub fn frequency_residual_at(&self, k: usize, t: u64) -> Option<f64> {
        let modes = self.modes.as_ref()?;
        let s: f64 = modes
            .iter()
            .zip(self.eigenvalues.iter().zip(&self.projections))
            .filter(|(m, _)| m.frequency() == k)
            .map(|(_, (&lambda, &p))| decay(self.eta, lambda, t).powi(2) * p * p)
            .sum();
        Some(s.sqrt())
    }

    /// Share of `||y||^2` carried by frequency `k` (circulant Gram matrices only).
    pub fn frequency_mass(&self, k: usize) -> Option<f64> {
        let total: f64 = self.projections.iter().map(|p| p * p).sum();
        let at_k = self.frequency_residual_at(k, 0)?;
        Some(if total == 0.0 { 0.0 } else { at_k * at_k / total })
    }

    /// `(t, residual_at(t))` for each requested step.
    pub fn residual_curve(&self, steps: &[u64]) -> Vec<(u64, f64)> {
        steps.iter().map(|&t| (t, self.residual_at(t))).collect()
    }
}

/// `(1 - eta lambda)^t`.
fn decay(eta: f64, lambda: f64, t: u64) -> f64 {
    let r = 1.0 - eta * lambda;
    if t <= i32::MAX as u64 {
        r.powi(t as i32)
    } else {
        r.powf(t as f64)
    }
}

/// Predicted number of steps for one mode to reach the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Iterations {
    Finite(u64),
    /// The eigenvalue is numerically zero; the mode is never fitted.
    Never,
}

impl Iterations {
    pub fn finite(self) -> Option<u64> {
        match self {
            Iterations::Finite(t) => Some(t),
            Iterations::Never => None,
        }
    }
}

impl fmt::Display for Iterations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Iterations::Finite(t) => write!(f, "{t}"),
            Iterations::Never => f.write_str("never"),
        }
    }
}

/// How to solve `(1 - eta lambda)^t = fraction` for `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Small-step linearization `t = -log(fraction) / (eta lambda)`, a lower-bound-style estimate.
    #[default]
    Linearized,
    /// `t = log(fraction) / log(1 - eta lambda)`.
    Exact,
}

/// Unrounded step count; `None` for a null eigenvalue.
pub fn iterations_estimate(lambda: f64, eta: f64, query: ThresholdQuery, mode: ThresholdMode) -> Result<Option<f64>> {
    if lambda <= NULL_EIGENVALUE {
        return Ok(None);
    }
    let step = eta * lambda;
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::Domain(format!("eta * lambda = {step} not in (0, 1)")));
    }
    let log_level = query.level().ln();
    Ok(Some(match mode {
        ThresholdMode::Linearized => -log_level / step,
        ThresholdMode::Exact => log_level / (1.0 - step).ln(),
    }))
}

/// `ceil(-log(fraction + slack) / (eta lambda))`, or [`Iterations::Never`] for `lambda <= 1e-12`.
pub fn iterations_to_fraction(lambda: f64, eta: f64, query: ThresholdQuery) -> Result<Iterations> {
    iterations_to_fraction_with(lambda, eta, query, ThresholdMode::Linearized)
}

pub fn iterations_to_fraction_with(
    lambda: f64,
    eta: f64,
    query: ThresholdQuery,
    mode: ThresholdMode,
) -> Result<Iterations> {
    Ok(match iterations_estimate(lambda, eta, query, mode)? {
        Some(t) => Iterations::Finite(t.ceil() as u64),
        None => Iterations::Never,
    })
}

/// `sqrt(2 pi sum_k alpha_k^2 k^2 / n)` with `alphas[0]` the amplitude of `k = 1`.
pub fn generalization_bound(alphas: &[f64], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Argument("sample count must be >= 1".into()));
    }
    let s: f64 = alphas
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let k = (i + 1) as f64;
            a * a * k * k
        })
        .sum();
    Ok((2.0 * PI * s / n as f64).sqrt())
}

/// One row of a threshold table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub k: usize,
    pub lambda: f64,
    pub iterations: Iterations,
}

pub fn write_curve_csv<W: Write>(curve: &[(u64, f64)], mut w: W) -> Result<()> {
    writeln!(w, "t,predicted_residual")?;
    for (t, r) in curve {
        writeln!(w, "{t},{r:e}")?;
    }
    Ok(())
}

pub fn write_threshold_csv<W: Write>(rows: &[ThresholdRow], mut w: W) -> Result<()> {
    writeln!(w, "k,lambda,predicted_iterations")?;
    for row in rows {
        writeln!(w, "{},{:e},{}", row.k, row.lambda, row.iterations)?;
    }
    Ok(())
}
