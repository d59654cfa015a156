//! `f(x) = (1/sqrt(m)) sum_r a_r relu(w_r . x)` with fixed signs `a_r`.
//!
//! With bias the input is lifted to `(x, 1)/sqrt(2)` and `b_r` is the weight on
//! the extra coordinate, so the pre-activation is `(w_r . x + b_r)/sqrt(2)` and
//! the network's Gram matrix at initialization is the one built by
//! [`crate::kernels::empirical_gram`].

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::{common_dim, UnitPoint};
use crate::rng::{self, stream};

use super::train::Trainable;

/// Which layer gradient descent updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    /// `W` and `b`; the signs `a` stay fixed.
    #[default]
    Hidden,
    /// `a` only; `W` and `b` stay at initialization.
    Output,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerNet {
    /// `m x input_dim`, row-major.
    w: Vec<f64>,
    a: Vec<f64>,
    b: Option<Vec<f64>>,
    m: usize,
    input_dim: usize,
    kappa: f64,
    trains: Layer,
}

/// `W ~ N(0, kappa^2)`, `a ~ Uniform{-1, +1}`, `b = 0`.
///
/// `input_dim` is the coordinate length of the points (d + 1 for intrinsic
/// points on S^d, larger for embedded ones).
pub fn init_two_layer(m: usize, input_dim: usize, kappa: f64, with_bias: bool, seed: u64) -> Result<TwoLayerNet> {
    if m == 0 || input_dim == 0 {
        return Err(Error::Argument("width and input dimension must be >= 1".into()));
    }
    if !(kappa > 0.0) {
        return Err(Error::Argument(format!("kappa must be > 0, got {kappa}")));
    }
    let mut r = rng::seeded(seed, stream::TWO_LAYER);
    let w = rng::normal_vec(&mut r, m * input_dim, kappa);
    let a = (0..m).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect();
    Ok(TwoLayerNet {
        w,
        a,
        b: with_bias.then(|| vec![0.0; m]),
        m,
        input_dim,
        kappa,
        trains: Layer::Hidden,
    })
}

impl TwoLayerNet {
    /// Builds a network from explicit parameters.
    pub fn from_parts(w: Vec<f64>, a: Vec<f64>, b: Option<Vec<f64>>, input_dim: usize) -> Result<Self> {
        let m = a.len();
        if m == 0 || w.len() != m * input_dim {
            return Err(Error::DimensionMismatch {
                expected: m * input_dim,
                found: w.len(),
            });
        }
        if let Some(b) = &b {
            if b.len() != m {
                return Err(Error::DimensionMismatch { expected: m, found: b.len() });
            }
        }
        Ok(Self {
            w,
            a,
            b,
            m,
            input_dim,
            kappa: 1.0,
            trains: Layer::Hidden,
        })
    }

    pub fn width(&self) -> usize {
        self.m
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn has_bias(&self) -> bool {
        self.b.is_some()
    }

    pub fn hidden_weights(&self) -> &[f64] {
        &self.w
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.a
    }

    pub fn biases(&self) -> Option<&[f64]> {
        self.b.as_deref()
    }

    pub fn trains(&self) -> Layer {
        self.trains
    }

    pub fn set_trains(&mut self, layer: Layer) {
        self.trains = layer;
    }

    fn check_point(&self, x: &UnitPoint) -> Result<()> {
        if x.ambient_dim() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: x.ambient_dim(),
            });
        }
        Ok(())
    }

    fn input_scale(&self) -> f64 {
        if self.b.is_some() {
            FRAC_1_SQRT_2
        } else {
            1.0
        }
    }

    /// Pre-activation of unit `r` at `x`.
    pub fn pre_activation(&self, r: usize, x: &[f64]) -> f64 {
        let row = &self.w[r * self.input_dim..(r + 1) * self.input_dim];
        let z: f64 = row.iter().zip(x).map(|(w, x)| w * x).sum();
        (z + self.b.as_ref().map_or(0.0, |b| b[r])) * self.input_scale()
    }

    /// `(1/sqrt(m)) sum_r a_r relu(z_r(x))`.
    pub fn forward(&self, x: &UnitPoint) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.forward_unchecked(x.coords()))
    }

    fn forward_unchecked(&self, x: &[f64]) -> f64 {
        let s: f64 = (0..self.m).map(|r| self.a[r] * self.pre_activation(r, x).max(0.0)).sum();
        s / (self.m as f64).sqrt()
    }

    /// Evaluates at arbitrary coordinates (e.g. a dense grid off the training set).
    pub fn forward_many(&self, points: &[UnitPoint]) -> Result<Vec<f64>> {
        let cols = self.columns(points)?;
        let scale = 1.0 / (self.m as f64).sqrt();
        let mut u = vec![0.0; points.len()];
        let mut z = vec![0.0; points.len()];
        for r in 0..self.m {
            self.unit_pre_activations(r, &cols, &mut z);
            let a = self.a[r];
            for (ui, zi) in u.iter_mut().zip(&z) {
                *ui += a * zi.max(0.0);
            }
        }
        u.iter_mut().for_each(|v| *v *= scale);
        Ok(u)
    }

    /// Point coordinates as `input_dim` columns of length `n`.
    fn columns(&self, points: &[UnitPoint]) -> Result<Vec<Vec<f64>>> {
        let mut cols = vec![Vec::with_capacity(points.len()); self.input_dim];
        for p in points {
            self.check_point(p)?;
            for (c, x) in cols.iter_mut().zip(p.coords()) {
                c.push(*x);
            }
        }
        Ok(cols)
    }

    /// Pre-activations of unit `r` at every point, written into `z`.
    fn unit_pre_activations(&self, r: usize, cols: &[Vec<f64>], z: &mut [f64]) {
        let s = self.input_scale();
        let b = self.b.as_ref().map_or(0.0, |b| b[r]) * s;
        z.iter_mut().for_each(|v| *v = b);
        for (w, col) in self.w[r * self.input_dim..(r + 1) * self.input_dim].iter().zip(cols) {
            let ws = w * s;
            for (zi, xi) in z.iter_mut().zip(col) {
                *zi += ws * xi;
            }
        }
    }

    /// Sets `a` to the minimum-norm least-squares fit of `labels` with `W`, `b`
    /// frozen, regularized by `ridge * trace(G) / n` on the `n x n` feature Gram `G`.
    pub fn fit_output_layer(&mut self, points: &[UnitPoint], labels: &[f64], ridge: f64) -> Result<()> {
        let n = points.len();
        if labels.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: labels.len() });
        }
        for p in points {
            self.check_point(p)?;
        }
        let scale = 1.0 / (self.m as f64).sqrt();
        // features phi_r(x_i) = relu(z_r(x_i)) / sqrt(m), as an n x m matrix
        let phi = DMatrix::from_fn(n, self.m, |i, r| self.pre_activation(r, points[i].coords()).max(0.0) * scale);
        let mut gram = &phi * phi.transpose();
        let shift = ridge * gram.trace() / n as f64;
        for i in 0..n {
            gram[(i, i)] += shift;
        }
        let y = DVector::from_column_slice(labels);
        let alpha = gram
            .cholesky()
            .ok_or_else(|| Error::Argument("feature Gram matrix is not positive definite".into()))?
            .solve(&y);
        self.a = (phi.transpose() * alpha).iter().copied().collect();
        Ok(())
    }
}

impl Trainable for TwoLayerNet {
    fn predict(&self, points: &[UnitPoint]) -> Result<Vec<f64>> {
        self.forward_many(points)
    }

    fn backprop(&self, points: &[UnitPoint], dl_du: &[f64]) -> Result<Vec<f64>> {
        let scale = 1.0 / (self.m as f64).sqrt();
        let s = self.input_scale();
        let dim = self.input_dim;
        let cols = self.columns(points)?;
        let mut z = vec![0.0; points.len()];
        match self.trains {
            Layer::Hidden => {
                let mut gw = vec![0.0; self.m * dim];
                let mut gb = vec![0.0; if self.b.is_some() { self.m } else { 0 }];
                let mut active = vec![0.0; points.len()];
                for r in 0..self.m {
                    self.unit_pre_activations(r, &cols, &mut z);
                    for ((act, zi), g) in active.iter_mut().zip(&z).zip(dl_du) {
                        *act = if *zi >= 0.0 { *g } else { 0.0 };
                    }
                    let c = self.a[r] * scale * s;
                    for (slot, col) in gw[r * dim..(r + 1) * dim].iter_mut().zip(&cols) {
                        *slot = c * active.iter().zip(col).map(|(g, x)| g * x).sum::<f64>();
                    }
                    if let Some(b) = gb.get_mut(r) {
                        *b = c * active.iter().sum::<f64>();
                    }
                }
                gw.extend(gb);
                Ok(gw)
            }
            Layer::Output => {
                let mut ga = vec![0.0; self.m];
                for (r, slot) in ga.iter_mut().enumerate() {
                    self.unit_pre_activations(r, &cols, &mut z);
                    *slot = scale * z.iter().zip(dl_du).map(|(zi, g)| g * zi.max(0.0)).sum::<f64>();
                }
                Ok(ga)
            }
        }
    }

    fn params(&self) -> Vec<f64> {
        match self.trains {
            Layer::Hidden => {
                let mut p = self.w.clone();
                if let Some(b) = &self.b {
                    p.extend_from_slice(b);
                }
                p
            }
            Layer::Output => self.a.clone(),
        }
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        let expected = self.params().len();
        if params.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: params.len() });
        }
        match self.trains {
            Layer::Hidden => {
                let (w, b) = params.split_at(self.w.len());
                self.w.copy_from_slice(w);
                if let Some(bias) = &mut self.b {
                    bias.copy_from_slice(b);
                }
            }
            Layer::Output => self.a.copy_from_slice(params),
        }
        Ok(())
    }

    fn step(&mut self, grad: &[f64], eta: f64) {
        match self.trains {
            Layer::Hidden => {
                let (gw, gb) = grad.split_at(self.w.len());
                for (w, g) in self.w.iter_mut().zip(gw) {
                    *w -= eta * g;
                }
                if let Some(b) = &mut self.b {
                    for (b, g) in b.iter_mut().zip(gb) {
                        *b -= eta * g;
                    }
                }
            }
            Layer::Output => {
                for (a, g) in self.a.iter_mut().zip(grad) {
                    *a -= eta * g;
                }
            }
        }
    }
}

/// Keeps the circle points with `|cos(k theta)| > cutoff`, labelled by the sign.
pub fn threshold_class_labels(points: &[UnitPoint], k: usize, cutoff: f64) -> Result<(Vec<UnitPoint>, Vec<f64>)> {
    if k == 0 {
        return Err(Error::Argument("frequency must be >= 1".into()));
    }
    if points.is_empty() {
        return Err(Error::Empty("no points".into()));
    }
    common_dim(points)?;
    let mut kept = Vec::new();
    let mut labels = Vec::new();
    for p in points {
        let c = (k as f64 * p.angle()?).cos();
        if c > cutoff {
            kept.push(p.clone());
            labels.push(1.0);
        } else if c < -cutoff {
            kept.push(p.clone());
            labels.push(-1.0);
        }
    }
    if kept.is_empty() {
        return Err(Error::Empty(format!("no point has |cos({k} theta)| > {cutoff}")));
    }
    Ok((kept, labels))
}

/// Limit of the kept fraction of [`threshold_class_labels`] on a dense grid.
pub fn threshold_kept_fraction(cutoff: f64) -> f64 {
    2.0 * cutoff.clamp(-1.0, 1.0).acos() / PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::{sample_uniform_sphere, uniform_circle_grid};
    use crate::kernels::{empirical_gram, KernelVariant};
    use crate::nets::train::{train_full_batch, Loss, Reduction, TrainConfig, Verdict};
    use rand::seq::index::sample;

    #[test]
    fn init_is_deterministic_and_well_formed() {
        let a = init_two_layer(64, 3, 1.5, true, 9).unwrap();
        let b = init_two_layer(64, 3, 1.5, true, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.output_weights().iter().all(|&s| s == 1.0 || s == -1.0));
        assert!(a.biases().unwrap().iter().all(|&v| v == 0.0));
        assert_ne!(a, init_two_layer(64, 3, 1.5, true, 10).unwrap());
    }

    #[test]
    fn init_statistics() {
        let m = 40_000;
        let kappa = 2.5;
        let net = init_two_layer(m, 3, kappa, false, 1).unwrap();
        let mean = net.hidden_weights().iter().sum::<f64>() / (3 * m) as f64;
        assert!(mean.abs() <= 3.0 * kappa / ((3 * m) as f64).sqrt());
        let plus = net.output_weights().iter().filter(|&&s| s > 0.0).count() as f64;
        assert!((plus - m as f64 / 2.0).abs() <= 3.0 * (m as f64).sqrt() / 2.0);
    }

    #[test]
    fn forward_examples() {
        let x = UnitPoint::from_angle(0.3);
        let zero = TwoLayerNet::from_parts(vec![0.0; 8], vec![1.0, -1.0, 1.0, 1.0], Some(vec![0.0; 4]), 2).unwrap();
        assert_eq!(zero.forward(&x).unwrap(), 0.0);
        let one = TwoLayerNet::from_parts(vec![2.0, 0.0], vec![1.0], None, 2).unwrap();
        assert_eq!(one.forward(&UnitPoint::from_angle(0.0)).unwrap(), 2.0);
        let cancel = TwoLayerNet::from_parts(vec![0.4, -0.7, 0.4, -0.7], vec![1.0, -1.0], Some(vec![0.0; 2]), 2).unwrap();
        for t in 0..10 {
            assert_eq!(cancel.forward(&UnitPoint::from_angle(t as f64)).unwrap(), 0.0);
        }
        assert!(matches!(
            one.forward(&sample_uniform_sphere(1, 2, 0)[0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_residual_converges_immediately() {
        let pts = uniform_circle_grid(16);
        let mut net = init_two_layer(32, 2, 1.0, true, 2).unwrap();
        let y = net.forward_many(&pts).unwrap();
        let run = train_full_batch(&mut net, &pts, &y, &TrainConfig::default()).unwrap();
        assert_eq!(run.epochs_to_stop, Some(0));
        assert_eq!(run.verdict, Verdict::Converged);
    }

    #[test]
    fn zero_step_does_not_move() {
        let pts = uniform_circle_grid(16);
        let mut net = init_two_layer(32, 2, 1.0, true, 2).unwrap();
        let y: Vec<f64> = pts.iter().map(|p| (2.0 * p.angle().unwrap()).cos()).collect();
        let cfg = TrainConfig { eta: 0.0, max_epochs: 20, ..TrainConfig::default() };
        let run = train_full_batch(&mut net, &pts, &y, &cfg).unwrap();
        assert_eq!(run.verdict, Verdict::DidNotConverge);
        assert_eq!(run.residual_trace.len(), 21);
        assert!(run.residual_trace.iter().all(|&r| r == run.residual_trace[0]));
    }

    #[test]
    fn diverges_with_huge_step() {
        let pts = uniform_circle_grid(32);
        let mut net = init_two_layer(64, 2, 1.0, true, 3).unwrap();
        let y: Vec<f64> = pts.iter().map(|p| p.angle().unwrap().cos()).collect();
        let cfg = TrainConfig { eta: 50.0, max_epochs: 200, ..TrainConfig::default() };
        let run = train_full_batch(&mut net, &pts, &y, &cfg).unwrap();
        assert_eq!(run.verdict, Verdict::Diverged);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (bias, layer, loss) in [
            (false, Layer::Hidden, Loss::SquaredError),
            (true, Layer::Hidden, Loss::SquaredError),
            (true, Layer::Hidden, Loss::CrossEntropy),
            (true, Layer::Output, Loss::SquaredError),
        ] {
            let pts = sample_uniform_sphere(12, 2, 4);
            let y: Vec<f64> = (0..12).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            let mut net = init_two_layer(300, 3, 1.0, bias, 5).unwrap();
            if let Some(b) = &mut net.b {
                b.iter_mut().enumerate().for_each(|(r, v)| *v = 0.1 * (r as f64).sin());
            }
            net.set_trains(layer);
            let (_, grad) = net.loss_and_gradient(&pts, &y, loss, Reduction::Sum).unwrap();
            let base = net.params();
            let mut rng = rng::seeded(0, 99);
            let mut checked = 0;
            for idx in sample(&mut rng, base.len(), base.len()).into_iter() {
                if checked == 100 {
                    break;
                }
                let unit = match layer {
                    Layer::Output => idx,
                    Layer::Hidden if idx < net.m * net.input_dim => idx / net.input_dim,
                    Layer::Hidden => idx - net.m * net.input_dim,
                };
                let safe = pts.iter().all(|p| net.pre_activation(unit, p.coords()).abs() > 1e-3);
                if !safe {
                    continue;
                }
                let mut probe = net.clone();
                let mut p = base.clone();
                p[idx] += 1e-5;
                probe.set_params(&p).unwrap();
                let up = loss.value(Reduction::Sum, &probe.predict(&pts).unwrap(), &y);
                p[idx] -= 2e-5;
                probe.set_params(&p).unwrap();
                let dn = loss.value(Reduction::Sum, &probe.predict(&pts).unwrap(), &y);
                let fd = (up - dn) / 2e-5;
                let scale = grad[idx].abs().max(1e-8);
                assert!((fd - grad[idx]).abs() / scale < 1e-6, "{bias} {layer:?} {loss:?} idx {idx}");
                checked += 1;
            }
            assert_eq!(checked, 100);
        }
    }

    #[test]
    fn linearization_is_the_empirical_gram() {
        // one tiny step moves u by eta * H (y - u) to first order
        let pts = uniform_circle_grid(12);
        for variant in KernelVariant::ALL {
            let bias = variant.has_bias();
            let m = 500;
            let seed = 21;
            let net = init_two_layer(m, 2, 1.3, bias, seed).unwrap();
            // same activity pattern as a Gram built from these weights
            let h = crate::kernels::GramMatrix::from_row_major(
                12,
                (0..144)
                    .map(|ij| {
                        let (i, j) = (ij / 12, ij % 12);
                        let (xi, xj) = (pts[i].coords(), pts[j].coords());
                        let both = (0..m)
                            .filter(|&r| net.pre_activation(r, xi) >= 0.0 && net.pre_activation(r, xj) >= 0.0)
                            .count() as f64;
                        let t: f64 = xi.iter().zip(xj).map(|(a, b)| a * b).sum();
                        let ip = if bias { (t + 1.0) / 2.0 } else { t };
                        ip * both / m as f64
                    })
                    .collect(),
                variant,
            )
            .unwrap();
            let y: Vec<f64> = pts.iter().map(|p| (3.0 * p.angle().unwrap()).sin()).collect();
            let u0 = net.predict(&pts).unwrap();
            let r: Vec<f64> = y.iter().zip(&u0).map(|(a, b)| a - b).collect();
            let eta = 1e-6;
            let mut moved = net.clone();
            let g = moved.backprop(&pts, &Loss::SquaredError.derivative(Reduction::Sum, &u0, &y)).unwrap();
            moved.step(&g, eta);
            let u1 = moved.predict(&pts).unwrap();
            let hr = h.mul_vec(&r);
            for i in 0..12 {
                assert!(((u1[i] - u0[i]) / eta - hr[i]).abs() < 1e-4, "{variant} i={i}");
            }
            // and it is distributed like the sampled empirical Gram
            let e = empirical_gram(&pts, variant, 200_000, 1.0, 3).unwrap();
            assert!(h.frobenius_distance(&e) < 0.2);
        }
    }

    #[test]
    fn output_layer_least_squares_interpolates() {
        let pts = uniform_circle_grid(20);
        let y: Vec<f64> = pts.iter().map(|p| (2.0 * p.angle().unwrap()).cos()).collect();
        let mut net = init_two_layer(400, 2, 1.0, false, 8).unwrap();
        net.fit_output_layer(&pts, &y, 1e-12).unwrap();
        let u = net.predict(&pts).unwrap();
        let err: f64 = u.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn class_label_examples() {
        let pts = vec![UnitPoint::from_angle(0.0), UnitPoint::from_angle(PI / 2.0)];
        let (kept, labels) = threshold_class_labels(&pts, 1, 2.0 / 3.0).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(labels, vec![1.0]);
        assert!(matches!(threshold_class_labels(&pts, 1, 1.0), Err(Error::Empty(_))));
        let grid = uniform_circle_grid(100_000);
        for k in [1, 3, 7] {
            let (kept, _) = threshold_class_labels(&grid, k, 2.0 / 3.0).unwrap();
            let frac = kept.len() as f64 / grid.len() as f64;
            assert!((frac - threshold_kept_fraction(2.0 / 3.0)).abs() < 1e-3, "k={k}: {frac}");
        }
        assert!((threshold_kept_fraction(2.0 / 3.0) - 0.5355).abs() < 1e-4);
    }
}
