//! Motion-magnitude MLP: a small tanh network mapping normalized frame
//! position to a motion offset, pinned to zero at the first frame.
//!
//! The raw network output `g(s)` is turned into a motion magnitude as
//! `theta = g(s) - g(0)`, so the first frame of a sequence always carries
//! exactly zero motion. An optional output amplitude `a` squashes the
//! pinned value through `a·tanh(·)`, which keeps revolute angles inside
//! `(-a, a)` during optimization.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default hidden architecture: 1 input, two hidden layers of 64, 1 output.
pub const DEFAULT_LAYER_SIZES: [usize; 4] = [1, 64, 64, 1];

/// Feed-forward network with tanh hidden activations and identity output.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionMlp {
    layer_sizes: Vec<usize>,
    /// Per layer, row-major `out x in`.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    output_amplitude: Option<f64>,
}

impl MotionMlp {
    /// Zero-initialized network (constant zero motion).
    pub fn zeros(layer_sizes: &[usize]) -> Result<MotionMlp> {
        check_layer_sizes(layer_sizes)?;
        let weights = layer_pairs(layer_sizes).map(|(i, o)| vec![0.0; i * o]).collect();
        let biases = layer_pairs(layer_sizes).map(|(_, o)| vec![0.0; o]).collect();
        Ok(MotionMlp { layer_sizes: layer_sizes.to_vec(), weights, biases, output_amplitude: None })
    }

    /// Random initialization: uniform `±1/sqrt(fan_in)` per layer, with the
    /// output layer scaled by 0.1 so initial motion stays small.
    pub fn init(layer_sizes: &[usize], rng: &mut impl Rng) -> Result<MotionMlp> {
        check_layer_sizes(layer_sizes)?;
        let last = layer_sizes.len() - 2;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (l, (fan_in, fan_out)) in layer_pairs(layer_sizes).enumerate() {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let scale = if l == last { 0.1 } else { 1.0 };
            weights.push((0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound) * scale).collect());
            biases.push((0..fan_out).map(|_| rng.gen_range(-bound..bound) * scale).collect());
        }
        Ok(MotionMlp { layer_sizes: layer_sizes.to_vec(), weights, biases, output_amplitude: None })
    }

    pub fn with_amplitude(mut self, amplitude: Option<f64>) -> MotionMlp {
        self.output_amplitude = amplitude;
        self
    }

    pub fn output_amplitude(&self) -> Option<f64> {
        self.output_amplitude
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn param_count(&self) -> usize {
        layer_pairs(&self.layer_sizes).map(|(i, o)| i * o + o).sum()
    }

    /// Flattened parameters: per layer, weights row-major then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (w, b) in self.weights.iter().zip(self.biases.iter()) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Mismatch(format!(
                "expected {} MLP parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut pos = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let wn = w.len();
            w.copy_from_slice(&params[pos..pos + wn]);
            pos += wn;
            let bn = b.len();
            b.copy_from_slice(&params[pos..pos + bn]);
            pos += bn;
        }
        Ok(())
    }

    /// Negates the output layer, flipping the sign of every motion value.
    /// Used when canonicalizing an estimated axis direction.
    pub fn negate_output(&mut self) {
        let last = self.weights.len() - 1;
        for w in &mut self.weights[last] {
            *w = -*w;
        }
        for b in &mut self.biases[last] {
            *b = -*b;
        }
    }

    /// Raw network output `g(s)` (before pinning and amplitude).
    pub fn raw_eval(&self, s: f64) -> f64 {
        self.forward(s).0
    }

    /// Forward pass returning the raw output plus per-layer inputs (the
    /// activations feeding each layer), for backprop.
    fn forward(&self, s: f64) -> (f64, Vec<Vec<f64>>) {
        let n_layers = self.weights.len();
        let mut inputs = Vec::with_capacity(n_layers);
        let mut act = vec![s];
        for l in 0..n_layers {
            inputs.push(act.clone());
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let mut next = vec![0.0; fan_out];
            for o in 0..fan_out {
                let row = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                let mut z = self.biases[l][o];
                for (wi, ai) in row.iter().zip(act.iter()) {
                    z += wi * ai;
                }
                next[o] = if l < n_layers - 1 { z.tanh() } else { z };
            }
            act = next;
        }
        (act[0], inputs)
    }

    /// Gradient of `g(s)` with respect to all parameters (flattened order).
    fn raw_grad(&self, s: f64) -> Vec<f64> {
        let n_layers = self.weights.len();
        let (_, inputs) = self.forward(s);
        // Recompute activations per layer output to get tanh' cheaply.
        let mut outputs: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let mut out = vec![0.0; fan_out];
            for o in 0..fan_out {
                let row = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                let mut z = self.biases[l][o];
                for (wi, ai) in row.iter().zip(inputs[l].iter()) {
                    z += wi * ai;
                }
                out[o] = if l < n_layers - 1 { z.tanh() } else { z };
            }
            outputs.push(out);
        }

        let mut grads: Vec<Vec<f64>> = self
            .weights
            .iter()
            .zip(self.biases.iter())
            .map(|(w, b)| vec![0.0; w.len() + b.len()])
            .collect();

        // delta over layer outputs, starting from d g / d out = 1.
        let mut delta = vec![1.0];
        for l in (0..n_layers).rev() {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            // tanh layers: delta already includes the activation derivative of
            // *this* layer's output when propagated from above; apply here.
            let local: Vec<f64> = if l == n_layers - 1 {
                delta.clone()
            } else {
                delta.iter().zip(outputs[l].iter()).map(|(d, y)| d * (1.0 - y * y)).collect()
            };
            let g = &mut grads[l];
            for o in 0..fan_out {
                for i in 0..fan_in {
                    g[o * fan_in + i] = local[o] * inputs[l][i];
                }
                g[fan_out * fan_in + o] = local[o];
            }
            if l > 0 {
                let mut prev = vec![0.0; fan_in];
                for o in 0..fan_out {
                    let row = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                    for (p, wi) in prev.iter_mut().zip(row.iter()) {
                        *p += local[o] * wi;
                    }
                }
                delta = prev;
            }
        }
        grads.concat()
    }

    fn normalized_input(t: usize, n: usize) -> Result<f64> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 frames, got {n}")));
        }
        if t < 1 || t > n {
            return Err(Error::InvalidArgument(format!("frame index {t} outside 1..={n}")));
        }
        Ok((t - 1) as f64 / (n - 1) as f64)
    }

    /// Motion magnitude at frame `t` of `n` (1-based): the pinned output
    /// `g(s) - g(0)`, squashed by the amplitude when configured. Exactly
    /// zero at `t = 1`.
    pub fn motion_at(&self, t: usize, n: usize) -> Result<f64> {
        let s = Self::normalized_input(t, n)?;
        let pinned = self.raw_eval(s) - self.raw_eval(0.0);
        Ok(match self.output_amplitude {
            None => pinned,
            Some(a) => a * pinned.tanh(),
        })
    }

    /// Gradient of `motion_at(t, n)` with respect to all parameters.
    pub fn motion_grad(&self, t: usize, n: usize) -> Result<Vec<f64>> {
        let s = Self::normalized_input(t, n)?;
        let gs = self.raw_grad(s);
        let g0 = self.raw_grad(0.0);
        let mut grad: Vec<f64> = gs.iter().zip(g0.iter()).map(|(a, b)| a - b).collect();
        if let Some(a) = self.output_amplitude {
            let pinned = self.raw_eval(s) - self.raw_eval(0.0);
            let factor = a * (1.0 - pinned.tanh().powi(2));
            for g in &mut grad {
                *g *= factor;
            }
        }
        Ok(grad)
    }

    /// Evaluates the motion profile over all `n` frames.
    pub fn profile(&self, n: usize) -> Result<MotionProfile> {
        let thetas = (1..=n).map(|t| self.motion_at(t, n)).collect::<Result<Vec<_>>>()?;
        MotionProfile::new(thetas)
    }

    /// Builds a network whose motion profile reproduces `thetas` exactly
    /// (up to solver precision) by solving the output layer in closed form
    /// over the random hidden features of `base`.
    ///
    /// Targets must satisfy `thetas[0] = 0` and, when `base` carries an
    /// amplitude `a`, `|theta| < a`.
    pub fn fit_profile(base: &MotionMlp, thetas: &[f64]) -> Result<MotionMlp> {
        let n = thetas.len();
        if n < 2 {
            return Err(Error::InvalidArgument("need at least 2 target thetas".into()));
        }
        if thetas[0] != 0.0 {
            return Err(Error::InvalidArgument("target profile must start at exactly 0".into()));
        }
        let mut mlp = base.clone();
        let n_layers = mlp.weights.len();
        let hidden = mlp.layer_sizes[n_layers - 1];

        // Desired raw outputs y_t with y at s=0 pinned to 0.
        let mut targets = Vec::with_capacity(n);
        for &theta in thetas {
            let y = match mlp.output_amplitude {
                None => theta,
                Some(a) => {
                    let r = theta / a;
                    if r.abs() >= 1.0 {
                        return Err(Error::InvalidArgument(format!(
                            "target theta {theta} outside the amplitude bound {a}"
                        )));
                    }
                    r.atanh()
                }
            };
            targets.push(y);
        }

        // Hidden features of the last hidden layer for each frame input.
        let feature = |mlp: &MotionMlp, s: f64| -> Vec<f64> {
            let mut act = vec![s];
            for l in 0..n_layers - 1 {
                let (fan_in, fan_out) = (mlp.layer_sizes[l], mlp.layer_sizes[l + 1]);
                let mut next = vec![0.0; fan_out];
                for o in 0..fan_out {
                    let row = &mlp.weights[l][o * fan_in..(o + 1) * fan_in];
                    let mut z = mlp.biases[l][o];
                    for (wi, ai) in row.iter().zip(act.iter()) {
                        z += wi * ai;
                    }
                    next[o] = z.tanh();
                }
                act = next;
            }
            act
        };

        let mut a = DMatrix::zeros(n, hidden + 1);
        let mut b = DMatrix::zeros(n, 1);
        for t in 0..n {
            let s = t as f64 / (n - 1) as f64;
            let feats = feature(&mlp, s);
            for (j, f) in feats.iter().enumerate() {
                a[(t, j)] = *f;
            }
            a[(t, hidden)] = 1.0;
            b[(t, 0)] = targets[t];
        }
        let svd = a.svd(true, true);
        let sol = svd
            .solve(&b, 1e-12)
            .map_err(|e| Error::Optimization(format!("output-layer solve failed: {e}")))?;

        let last = n_layers - 1;
        for j in 0..hidden {
            mlp.weights[last][j] = sol[(j, 0)];
        }
        mlp.biases[last][0] = sol[(hidden, 0)];
        Ok(mlp)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<MotionMlp> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let layers: Vec<LayerJson> =
            serde_json::from_str(&text).map_err(|e| Error::Json { path: path.into(), message: e.to_string() })?;
        if layers.is_empty() {
            return Err(Error::Json { path: path.into(), message: "checkpoint has no layers".into() });
        }
        let mut layer_sizes = vec![layers[0].weights.first().map_or(0, |r| r.len())];
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for layer in &layers {
            let fan_out = layer.weights.len();
            let fan_in = *layer_sizes.last().unwrap();
            if fan_out == 0 || layer.weights.iter().any(|r| r.len() != fan_in) || layer.bias.len() != fan_out {
                return Err(Error::Json { path: path.into(), message: "inconsistent layer shapes".into() });
            }
            layer_sizes.push(fan_out);
            weights.push(layer.weights.concat());
            biases.push(layer.bias.clone());
        }
        check_layer_sizes(&layer_sizes)?;
        Ok(MotionMlp { layer_sizes, weights, biases, output_amplitude: None })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let layers: Vec<LayerJson> = self
            .weights
            .iter()
            .zip(self.biases.iter())
            .enumerate()
            .map(|(l, (w, b))| {
                let fan_in = self.layer_sizes[l];
                LayerJson {
                    weights: w.chunks_exact(fan_in).map(|r| r.to_vec()).collect(),
                    bias: b.clone(),
                }
            })
            .collect();
        let text =
            serde_json::to_string_pretty(&layers).map_err(|e| Error::Json { path: path.into(), message: e.to_string() })?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Serialize, Deserialize)]
struct LayerJson {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

fn check_layer_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 || layer_sizes.first() != Some(&1) || layer_sizes.last() != Some(&1) {
        return Err(Error::InvalidArgument(format!(
            "layer sizes must run from 1 input to 1 output, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidArgument("zero-width layer".into()));
    }
    Ok(())
}

fn layer_pairs(layer_sizes: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    layer_sizes.windows(2).map(|w| (w[0], w[1]))
}

/// Per-frame motion magnitudes; the first frame is always at rest.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionProfile {
    pub thetas: Vec<f64>,
}

impl MotionProfile {
    pub fn new(thetas: Vec<f64>) -> Result<MotionProfile> {
        if thetas.len() < 2 {
            return Err(Error::InvalidArgument(format!("motion profile needs >= 2 frames, got {}", thetas.len())));
        }
        if thetas[0] != 0.0 {
            return Err(Error::InvalidArgument(format!("motion profile must start at 0, got {}", thetas[0])));
        }
        Ok(MotionProfile { thetas })
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }
}
