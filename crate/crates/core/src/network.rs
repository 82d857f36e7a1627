//! Fully connected ReLU network with a scalar linear output, and the
//! reverse-mode gradient of its squared-error loss.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layered weights and biases. `weights[h]` maps layer `h` activations
/// (width `widths[h]`) to layer `h + 1` (width `widths[h + 1]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "FlatParams", try_from = "FlatParams")]
pub struct NetworkParams {
    widths: Vec<usize>,
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
}

/// Gradient with respect to every parameter, laid out like the parameters.
pub type GradientBuffer = NetworkParams;

impl NetworkParams {
    /// All-zero network with layer widths `(input, hidden.., 1)`.
    pub fn zeros(widths: &[usize]) -> Result<Self> {
        validate_widths(widths)?;
        let weights = widths
            .windows(2)
            .map(|w| DMatrix::zeros(w[1], w[0]))
            .collect();
        let biases = widths[1..].iter().map(|&w| DVector::zeros(w)).collect();
        Ok(Self {
            widths: widths.to_vec(),
            weights,
            biases,
        })
    }

    /// Gaussian weights with standard deviation `sqrt(2 / fan_in)`, zero biases.
    pub fn he_init<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Result<Self> {
        let mut params = Self::zeros(widths)?;
        for w in params.weights.iter_mut() {
            let sd = (2.0 / w.ncols() as f64).sqrt();
            let normal = Normal::new(0.0, sd).expect("positive standard deviation");
            // Row-major fill keeps draws aligned with the flat layout.
            for r in 0..w.nrows() {
                for c in 0..w.ncols() {
                    w[(r, c)] = normal.sample(rng);
                }
            }
        }
        Ok(params)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    /// Width of the first hidden layer.
    pub fn first_width(&self) -> usize {
        self.widths[1]
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[DMatrix<f64>] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [DMatrix<f64>] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[DVector<f64>] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [DVector<f64>] {
        &mut self.biases
    }

    pub fn first_layer(&self) -> &DMatrix<f64> {
        &self.weights[0]
    }

    pub fn first_layer_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.weights[0]
    }

    /// Squared Euclidean norms of the first-layer columns, one per input feature.
    pub fn column_norms_sq(&self) -> Vec<f64> {
        self.weights[0]
            .column_iter()
            .map(|c| c.norm_squared())
            .collect()
    }

    /// Number of scalar parameters.
    pub fn len(&self) -> usize {
        self.widths
            .windows(2)
            .map(|w| (w[0] + 1) * w[1])
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat offset of first-layer weight `(row, col)`.
    pub fn first_layer_index(&self, row: usize, col: usize) -> usize {
        row * self.widths[0] + col
    }

    /// Parameters flattened layer by layer: row-major weights, then biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for r in 0..w.nrows() {
                out.extend(w.row(r).iter());
            }
            out.extend(b.iter());
        }
        out
    }

    /// Inverse of [`to_flat`](Self::to_flat) for a network with these widths.
    pub fn from_flat(widths: &[usize], flat: &[f64]) -> Result<Self> {
        let mut params = Self::zeros(widths)?;
        params.set_flat(flat)?;
        Ok(params)
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::Shape {
                expected: self.len(),
                got: flat.len(),
            });
        }
        let mut it = flat.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for r in 0..w.nrows() {
                for c in 0..w.ncols() {
                    w[(r, c)] = it.next().unwrap();
                }
            }
            for v in b.iter_mut() {
                *v = it.next().unwrap();
            }
        }
        Ok(())
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &NetworkParams, scale: f64) {
        debug_assert_eq!(self.widths, other.widths);
        for (w, g) in self.weights.iter_mut().zip(&other.weights) {
            axpy(w.as_mut_slice(), g.as_slice(), scale);
        }
        for (b, g) in self.biases.iter_mut().zip(&other.biases) {
            b.axpy(scale, g, 1.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.weights.iter_mut().for_each(|w| *w *= factor);
        self.biases.iter_mut().for_each(|b| *b *= factor);
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .flat_map(|w| w.iter())
            .chain(self.biases.iter().flat_map(|b| b.iter()))
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Network output for a single feature vector.
    pub fn forward(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                got: features.len(),
            });
        }
        let mut a = DVector::from_column_slice(features);
        let last = self.n_layers() - 1;
        for (h, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            a = w * a + b;
            if h < last {
                a.apply(|v| *v = v.max(0.0));
            }
        }
        Ok(a[0])
    }

    /// Outputs for a batch given with one sample per row.
    pub fn forward_rows(&self, features: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.check_cols(features.ncols())?;
        Ok(self.forward_cols(&features.transpose()))
    }

    /// Outputs for a batch given with one sample per column.
    pub fn forward_cols(&self, inputs: &DMatrix<f64>) -> Vec<f64> {
        let mut a = inputs.clone();
        let last = self.n_layers() - 1;
        for (h, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            a = w * a;
            for mut col in a.column_iter_mut() {
                col += b;
            }
            if h < last {
                a.apply(|v| *v = v.max(0.0));
            }
        }
        a.row(0).iter().copied().collect()
    }

    fn check_cols(&self, got: usize) -> Result<()> {
        if got != self.input_dim() {
            Err(Error::Shape {
                expected: self.input_dim(),
                got,
            })
        } else {
            Ok(())
        }
    }

    /// `Σ (y_i - f(x_i))² / (2 σ²)` over a batch with one sample per row, and its gradient.
    pub fn data_loss_and_grad(
        &self,
        features: &DMatrix<f64>,
        responses: &[f64],
        noise_var: f64,
    ) -> Result<(f64, GradientBuffer)> {
        self.check_cols(features.ncols())?;
        self.loss_and_grad_cols(&features.transpose(), responses, noise_var)
    }

    /// As [`data_loss_and_grad`](Self::data_loss_and_grad), with one sample per column.
    pub fn loss_and_grad_cols(
        &self,
        inputs: &DMatrix<f64>,
        responses: &[f64],
        noise_var: f64,
    ) -> Result<(f64, GradientBuffer)> {
        if !(noise_var > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise variance must be positive, got {noise_var}"
            )));
        }
        self.check_cols(inputs.nrows())?;
        let batch = inputs.ncols();
        if batch == 0 {
            return Err(Error::Data("empty batch".into()));
        }
        if responses.len() != batch {
            return Err(Error::Shape {
                expected: batch,
                got: responses.len(),
            });
        }

        let n_layers = self.n_layers();
        // Pre-activations of every layer; activations are recomputed from them.
        let mut pre: Vec<DMatrix<f64>> = Vec::with_capacity(n_layers);
        for (h, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = if h == 0 {
                w * inputs
            } else {
                w * pre[h - 1].map(|v| v.max(0.0))
            };
            for mut col in z.column_iter_mut() {
                col += b;
            }
            pre.push(z);
        }

        let out = &pre[n_layers - 1];
        let mut delta = DMatrix::zeros(1, batch);
        let mut loss = 0.0;
        for i in 0..batch {
            let r = out[(0, i)] - responses[i];
            loss += r * r;
            delta[(0, i)] = r / noise_var;
        }
        loss /= 2.0 * noise_var;

        let mut grad = NetworkParams::zeros(&self.widths)?;
        for h in (0..n_layers).rev() {
            if h == 0 {
                grad.weights[0] = &delta * inputs.transpose();
            } else {
                let act = pre[h - 1].map(|v| v.max(0.0));
                grad.weights[h] = &delta * act.transpose();
            }
            grad.biases[h] = delta.column_sum();
            if h > 0 {
                let mut back = self.weights[h].transpose() * &delta;
                back.zip_apply(&pre[h - 1], |d, z| {
                    if z <= 0.0 {
                        *d = 0.0
                    }
                });
                delta = back;
            }
        }
        Ok((loss, grad))
    }
}

/// `dst += scale * src`.
pub(crate) fn axpy(dst: &mut [f64], src: &[f64], scale: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += scale * s;
    }
}

/// Serialized form: layer widths plus the canonical flat parameter vector.
#[derive(Serialize, Deserialize)]
struct FlatParams {
    widths: Vec<usize>,
    values: Vec<f64>,
}

impl From<NetworkParams> for FlatParams {
    fn from(p: NetworkParams) -> Self {
        FlatParams {
            values: p.to_flat(),
            widths: p.widths,
        }
    }
}

impl TryFrom<FlatParams> for NetworkParams {
    type Error = Error;

    fn try_from(f: FlatParams) -> Result<Self> {
        NetworkParams::from_flat(&f.widths, &f.values)
    }
}

fn validate_widths(widths: &[usize]) -> Result<()> {
    if widths.len() < 3 {
        return Err(Error::InvalidConfig(format!(
            "a network needs an input, at least one hidden layer and an output; got widths {widths:?}"
        )));
    }
    if widths.contains(&0) {
        return Err(Error::InvalidConfig(format!(
            "layer widths must be positive, got {widths:?}"
        )));
    }
    if *widths.last().unwrap() != 1 {
        return Err(Error::InvalidConfig(format!(
            "the output layer must have width 1, got {widths:?}"
        )));
    }
    Ok(())
}
