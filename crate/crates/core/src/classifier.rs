//! Differentiable change/no-change scorer.
//!
//! A small feed-forward network with a two-way softmax head. Besides
//! training and prediction it exposes the gradient of the head's
//! negative entropy with respect to its inputs, which is what the
//! exemplar optimizer pushes back into the virtual exemplars.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{clamped_ln, softmax_in_place, xlogx, Matrix};
use crate::rng;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => libm::tanh(x),
        }
    }

    /// Derivative expressed through the pre-activation.
    #[inline]
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = libm::tanh(pre);
                1.0 - t * t
            }
        }
    }
}

/// Scalar losses that can be differentiated with respect to the inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputLoss {
    /// `Σₖ Σ_c f_c(Dₖ) log f_c(Dₖ)`, the ambiguity term of the exemplar objective.
    NegEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ClassWeighting {
    /// Inverse class frequency, `m / (2 m_c)`.
    #[default]
    Auto,
    Manual {
        negative: f64,
        positive: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub class_weighting: ClassWeighting,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.5,
            weight_decay: 1e-4,
            seed: 0,
            class_weighting: ClassWeighting::Auto,
            hidden: vec![64],
            activation: Activation::Relu,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be > 0".into()));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config("weight decay must be >= 0".into()));
        }
        if let ClassWeighting::Manual { negative, positive } = self.class_weighting {
            if !(negative > 0.0 && positive > 0.0) {
                return Err(Error::Config("class weights must be positive".into()));
            }
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layer widths must be >= 1".into()));
        }
        Ok(())
    }
}

/// Fully connected layer; `weights` is `inputs × outputs`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub format_version: u32,
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub class_weights: [f64; 2],
    pub layers: Vec<DenseLayer>,
    /// Weighted training objective per epoch, starting with the initial value.
    #[serde(default)]
    pub loss_trace: Vec<f64>,
}

/// Activations retained for backpropagation.
struct Forward {
    /// Inputs to each layer (the first is the batch itself).
    inputs: Vec<Matrix>,
    /// Pre-activations of each hidden layer.
    pre: Vec<Matrix>,
    /// n×2 class probabilities.
    probs: Matrix,
}

impl ClassifierModel {
    /// A model whose parameters are all zero; every prediction is (0.5, 0.5).
    pub fn zeros(layer_sizes: &[usize], activation: Activation) -> Result<Self> {
        Self::check_sizes(layer_sizes)?;
        let layers = layer_sizes
            .windows(2)
            .map(|w| DenseLayer {
                weights: Matrix::zeros(w[0], w[1]),
                biases: vec![0.0; w[1]],
            })
            .collect();
        Ok(Self {
            format_version: MODEL_FORMAT_VERSION,
            layer_sizes: layer_sizes.to_vec(),
            activation,
            class_weights: [1.0, 1.0],
            layers,
            loss_trace: Vec::new(),
        })
    }

    /// He-initialized weights (`N(0, 2 / fan_in)`), zero biases.
    pub fn initialized(layer_sizes: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(layer_sizes, activation)?;
        let mut rng = rng::seeded(seed);
        for layer in &mut model.layers {
            let fan_in = layer.weights.rows() as f64;
            let normal = Normal::new(0.0, libm::sqrt(2.0 / fan_in))
                .map_err(|_| Error::Config("invalid initialization scale".into()))?;
            for w in layer.weights.as_mut_slice() {
                *w = normal.sample(&mut rng);
            }
        }
        Ok(model)
    }

    fn check_sizes(layer_sizes: &[usize]) -> Result<()> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::Config("layer sizes need >= 2 nonzero entries".into()));
        }
        if *layer_sizes.last().unwrap() != 2 {
            return Err(Error::Config("output layer must have exactly 2 units".into()));
        }
        Ok(())
    }

    /// Structural check, used after deserialization.
    pub fn validate(&self) -> Result<()> {
        Self::check_sizes(&self.layer_sizes)?;
        if self.layers.len() + 1 != self.layer_sizes.len() {
            return Err(Error::Config("layer count disagrees with layer sizes".into()));
        }
        for (layer, w) in self.layers.iter().zip(self.layer_sizes.windows(2)) {
            if layer.weights.shape() != (w[0], w[1]) || layer.biases.len() != w[1] {
                return Err(Error::Config("layer parameter shape disagrees with layer sizes".into()));
            }
            layer.weights.ensure_finite("classifier weights")?;
            if layer.biases.iter().any(|b| !b.is_finite()) {
                return Err(Error::NonFinite("classifier biases"));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    fn check_input(&self, x: &Matrix, op: &'static str) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape {
                op,
                left_name: "input",
                left: x.shape(),
                right_name: "model input width",
                right: (1, self.input_dim()),
            });
        }
        Ok(())
    }

    fn forward(&self, x: &Matrix) -> Result<Forward> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len() - 1);
        let mut current = x.clone();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = current.matmul(&layer.weights)?;
            for r in 0..z.rows() {
                for (v, b) in z.row_mut(r).iter_mut().zip(&layer.biases) {
                    *v += b;
                }
            }
            inputs.push(current);
            if li == last {
                for r in 0..z.rows() {
                    softmax_in_place(z.row_mut(r));
                }
                z.ensure_finite("classifier output")?;
                return Ok(Forward { inputs, pre, probs: z });
            }
            let mut a = z.clone();
            a.as_mut_slice().iter_mut().for_each(|v| *v = self.activation.apply(*v));
            pre.push(z);
            current = a;
        }
        unreachable!("model has at least one layer")
    }

    /// Backpropagates `d_logits` (n×2). Returns parameter gradients and the
    /// gradient with respect to the batch inputs.
    fn backward(&self, fwd: &Forward, d_logits: Matrix) -> Result<(Vec<DenseLayer>, Matrix)> {
        let mut grads: Vec<DenseLayer> = Vec::with_capacity(self.layers.len());
        let mut delta = d_logits;
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let d_w = fwd.inputs[li].transpose().matmul(&delta)?;
            let d_b = delta.col_sums();
            grads.push(DenseLayer {
                weights: d_w,
                biases: d_b,
            });
            let mut d_in = delta.matmul(&layer.weights.transpose())?;
            if li > 0 {
                let pre = &fwd.pre[li - 1];
                for (g, p) in d_in.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                    *g *= self.activation.derivative(*p);
                }
            }
            delta = d_in;
        }
        grads.reverse();
        Ok((grads, delta))
    }

    /// Class probabilities, one row per input row: `[P(no change), P(change)]`.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x, "predict_proba")?;
        x.ensure_finite("predict_proba input")?;
        Ok(self.forward(x)?.probs)
    }

    /// `P(change)` for every row of `x`.
    pub fn change_scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self.predict_proba(x)?.col(1))
    }

    /// Value of an input loss on the exemplar columns of `d` (d×K).
    pub fn input_loss(&self, d: &Matrix, loss: InputLoss) -> Result<f64> {
        let probs = self.predict_proba(&d.transpose())?;
        match loss {
            InputLoss::NegEntropy => Ok(probs.as_slice().iter().map(|&p| xlogx(p)).sum()),
        }
    }

    /// Gradient of an input loss with respect to the exemplar columns of
    /// `d` (d×K). Parameters are left untouched.
    pub fn input_gradient(&self, d: &Matrix, loss: InputLoss) -> Result<Matrix> {
        let x = d.transpose();
        self.check_input(&x, "input_gradient")?;
        let fwd = self.forward(&x)?;
        let mut d_logits = Matrix::zeros(x.rows(), 2);
        match loss {
            InputLoss::NegEntropy => {
                // d/dz_j Σ p log p = p_j (log p_j − Σ_c p_c log p_c)
                for r in 0..x.rows() {
                    let p = fwd.probs.row(r);
                    let h: f64 = p.iter().map(|&v| v * clamped_ln(v)).sum();
                    for (j, &pj) in p.iter().enumerate() {
                        d_logits.set(r, j, pj * (clamped_ln(pj) - h));
                    }
                }
            }
        }
        let (_, d_x) = self.backward(&fwd, d_logits)?;
        d_x.ensure_finite("input gradient")?;
        Ok(d_x.transpose())
    }

    fn weight_penalty(&self, weight_decay: f64) -> f64 {
        let sq: f64 = self
            .layers
            .iter()
            .flat_map(|l| l.weights.as_slice())
            .map(|w| w * w)
            .sum();
        0.5 * weight_decay * sq
    }

    /// Weighted mean cross-entropy plus L2 weight decay, with its parameter
    /// gradient.
    pub fn training_objective(
        &self,
        x: &Matrix,
        labels: &[u8],
        class_weights: [f64; 2],
        weight_decay: f64,
    ) -> Result<(f64, Vec<DenseLayer>)> {
        let fwd = self.forward(x)?;
        let total_weight: f64 = labels.iter().map(|&y| class_weights[y as usize]).sum();
        let mut d_logits = Matrix::zeros(x.rows(), 2);
        let mut loss = 0.0;
        for (r, &y) in labels.iter().enumerate() {
            let w = class_weights[y as usize] / total_weight;
            let p = fwd.probs.row(r);
            loss -= w * clamped_ln(p[y as usize]);
            for c in 0..2 {
                let target = if c == y as usize { 1.0 } else { 0.0 };
                d_logits.set(r, c, w * (p[c] - target));
            }
        }
        let (mut grads, _) = self.backward(&fwd, d_logits)?;
        for (g, l) in grads.iter_mut().zip(&self.layers) {
            g.weights.axpy(weight_decay, &l.weights);
        }
        Ok((loss + self.weight_penalty(weight_decay), grads))
    }

    /// All parameters flattened layer by layer (weights then biases).
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) {
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.as_slice().len();
            l.weights.as_mut_slice().copy_from_slice(&flat[at..at + nw]);
            at += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
    }

    fn step(&self, grads: &[DenseLayer], lr: f64) -> Self {
        let mut next = self.clone();
        for (l, g) in next.layers.iter_mut().zip(grads) {
            l.weights.axpy(-lr, &g.weights);
            for (b, gb) in l.biases.iter_mut().zip(&g.biases) {
                *b -= lr * gb;
            }
        }
        next
    }
}

/// Resolves per-class weights for a label vector.
pub fn class_weights_for(labels: &[u8], weighting: ClassWeighting) -> [f64; 2] {
    match weighting {
        ClassWeighting::Manual { negative, positive } => [negative, positive],
        ClassWeighting::Auto => {
            let m = labels.len() as f64;
            let pos = labels.iter().filter(|&&y| y == 1).count() as f64;
            let neg = m - pos;
            let w = |count: f64| if count > 0.0 { m / (2.0 * count) } else { 0.0 };
            [w(neg), w(pos)]
        }
    }
}

/// Trains a fresh classifier by full-batch gradient descent.
///
/// The step size adapts: an epoch whose step would raise the objective is
/// retried with half the step, and successful epochs grow it by 10%. The
/// recorded loss trace is therefore non-increasing.
pub fn train(x: &Matrix, labels: &[u8], config: &TrainConfig) -> Result<ClassifierModel> {
    config.validate()?;
    if x.rows() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if labels.len() != x.rows() {
        return Err(Error::Shape {
            op: "train",
            left_name: "X",
            left: x.shape(),
            right_name: "labels",
            right: (labels.len(), 1),
        });
    }
    if let Some(bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::Domain(alloc::format!("labels must be 0 or 1, got {bad}")));
    }
    x.ensure_finite("training features")?;

    let mut sizes = Vec::with_capacity(config.hidden.len() + 2);
    sizes.push(x.cols());
    sizes.extend_from_slice(&config.hidden);
    sizes.push(2);
    let mut model = ClassifierModel::initialized(&sizes, config.activation, config.seed)?;
    let weights = class_weights_for(labels, config.class_weighting);
    model.class_weights = weights;

    let (mut loss, mut grads) = model.training_objective(x, labels, weights, config.weight_decay)?;
    let mut trace = Vec::with_capacity(config.epochs + 1);
    trace.push(loss);
    let mut lr = config.learning_rate;
    'epochs: for _ in 0..config.epochs {
        for _ in 0..40 {
            let candidate = model.step(&grads, lr);
            match candidate.training_objective(x, labels, weights, config.weight_decay) {
                Ok((next_loss, next_grads)) if next_loss.is_finite() && next_loss <= loss => {
                    model = candidate;
                    loss = next_loss;
                    grads = next_grads;
                    lr = (lr * 1.1).min(config.learning_rate * 10.0);
                    trace.push(loss);
                    continue 'epochs;
                }
                _ => lr *= 0.5,
            }
        }
        // no step size reduces the objective any further
        break;
    }
    model.loss_trace = trace;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_gradient, relative_error, FD_STEP};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn blobs(n_per: usize, seed: u64) -> (Matrix, Vec<u8>) {
        let mut rng = rng::seeded(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..2 * n_per {
            let c = if i % 2 == 0 { -2.0 } else { 2.0 };
            rows.push([c + rng.random_range(-0.5..0.5), c + rng.random_range(-0.5..0.5)]);
            labels.push((i % 2) as u8);
        }
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn separable_blobs_reach_full_training_accuracy() {
        let (x, y) = blobs(10, 1);
        let model = train(&x, &y, &TrainConfig::default()).unwrap();
        let p = model.predict_proba(&x).unwrap();
        for (r, &label) in y.iter().enumerate() {
            let pred = if p.get(r, 1) > p.get(r, 0) { 1 } else { 0 };
            assert_eq!(pred, label, "row {r}");
        }
    }

    #[test]
    fn single_sample_is_memorized() {
        let x = Matrix::from_rows(&[[0.3, -1.2, 0.7]]).unwrap();
        let model = train(&x, &[1], &TrainConfig::default()).unwrap();
        assert!(model.predict_proba(&x).unwrap().get(0, 1) > 0.5);
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = blobs(6, 2);
        let cfg = TrainConfig {
            seed: 11,
            ..TrainConfig::default()
        };
        let a = train(&x, &y, &cfg).unwrap();
        let b = train(&x, &y, &cfg).unwrap();
        let bits = |m: &ClassifierModel| m.params_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn loss_trace_never_increases() {
        let (x, y) = blobs(15, 3);
        let model = train(&x, &y, &TrainConfig::default()).unwrap();
        assert!(model.loss_trace.len() > 1);
        for w in model.loss_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn single_class_training_stays_well_defined() {
        let (x, _) = blobs(5, 4);
        let y = vec![0u8; x.rows()];
        let model = train(&x, &y, &TrainConfig::default()).unwrap();
        model.validate().unwrap();
        let p = model.predict_proba(&x).unwrap();
        assert!((0..x.rows()).all(|r| p.get(r, 0) > 0.5));
    }

    #[test]
    fn training_errors() {
        let cfg = TrainConfig::default();
        assert_eq!(train(&Matrix::zeros(0, 2), &[], &cfg), Err(Error::EmptyTrainingSet));
        assert!(matches!(
            train(&Matrix::zeros(2, 2), &[0], &cfg),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(train(&Matrix::zeros(1, 2), &[2], &cfg), Err(Error::Domain(_))));
        let bad = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&Matrix::zeros(1, 2), &[0], &bad), Err(Error::Config(_))));
    }

    #[test]
    fn zero_model_predicts_half() {
        let model = ClassifierModel::zeros(&[3, 4, 2], Activation::Relu).unwrap();
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0], [-4.0, 0.0, 9.0]]).unwrap();
        let p = model.predict_proba(&x).unwrap();
        assert!(p.as_slice().iter().all(|&v| v == 0.5));
        assert!(matches!(
            model.predict_proba(&Matrix::zeros(1, 2)),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn batch_of_one_matches_batch_row() {
        let model = ClassifierModel::initialized(&[3, 5, 2], Activation::Relu, 9).unwrap();
        let mut rng = rng::seeded(5);
        let x = Matrix::from_fn(4, 3, |_, _| rng.random_range(-1.0..1.0));
        let all = model.predict_proba(&x).unwrap();
        for r in 0..4 {
            let one = model.predict_proba(&x.select_rows(&[r])).unwrap();
            assert_eq!(one.row(0), all.row(r));
            assert_abs_diff_eq!(all.row(r).iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn input_gradient_vanishes_at_even_scores() {
        let model = ClassifierModel::zeros(&[2, 3, 2], Activation::Relu).unwrap();
        let d = Matrix::from_cols(&[[0.4, -0.2]]).unwrap();
        let g = model.input_gradient(&d, InputLoss::NegEntropy).unwrap();
        assert!(g.as_slice().iter().all(|v| v.abs() < 1e-8));

        // a linear model that is exactly indifferent at the origin
        let mut lin = ClassifierModel::zeros(&[2, 2], Activation::Relu).unwrap();
        lin.layers[0].weights = Matrix::from_rows(&[[1.0, -1.0], [0.5, 0.5]]).unwrap();
        let origin = Matrix::zeros(2, 1);
        let g = lin.input_gradient(&origin, InputLoss::NegEntropy).unwrap();
        assert!(g.as_slice().iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = rng::seeded(21);
        for seed in 0..5 {
            let model = ClassifierModel::initialized(&[3, 6, 2], Activation::Tanh, seed).unwrap();
            let d = Matrix::from_fn(3, 2, |_, _| rng.random_range(-1.5..1.5));
            let analytic = model.input_gradient(&d, InputLoss::NegEntropy).unwrap();
            let numeric = finite_diff_gradient(|m| model.input_loss(m, InputLoss::NegEntropy), &d, FD_STEP).unwrap();
            assert!(relative_error(&analytic, &numeric, 1e-10) < 1e-4);
        }
    }

    #[test]
    fn input_gradient_is_columnwise() {
        let model = ClassifierModel::initialized(&[3, 6, 2], Activation::Relu, 3).unwrap();
        let mut rng = rng::seeded(8);
        let d = Matrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let all = model.input_gradient(&d, InputLoss::NegEntropy).unwrap();
        for k in 0..3 {
            let single = Matrix::from_cols(&[d.col(k)]).unwrap();
            let g = model.input_gradient(&single, InputLoss::NegEntropy).unwrap();
            assert_eq!(g.col(0), all.col(k));
        }
        let dup = Matrix::from_cols(&[d.col(0), d.col(0)]).unwrap();
        let g = model.input_gradient(&dup, InputLoss::NegEntropy).unwrap();
        assert_eq!(g.col(0), g.col(1));
    }

    #[test]
    fn parameter_gradient_matches_finite_differences() {
        let mut rng = rng::seeded(17);
        let x = Matrix::from_fn(5, 3, |_, _| rng.random_range(-1.0..1.0));
        let y = [0u8, 1, 1, 0, 1];
        let model = ClassifierModel::initialized(&[3, 4, 2], Activation::Tanh, 2).unwrap();
        let w = class_weights_for(&y, ClassWeighting::Auto);
        let (_, grads) = model.training_objective(&x, &y, w, 1e-2).unwrap();
        let analytic_flat: Vec<f64> = grads
            .iter()
            .flat_map(|g| g.weights.as_slice().iter().chain(&g.biases).copied())
            .collect();
        let flat = model.params_flat();
        let at = Matrix::from_vec(1, flat.len(), flat).unwrap();
        let numeric = finite_diff_gradient(
            |p| {
                let mut m = model.clone();
                m.set_params_flat(p.as_slice());
                Ok(m.training_objective(&x, &y, w, 1e-2)?.0)
            },
            &at,
            FD_STEP,
        )
        .unwrap();
        let analytic = Matrix::from_vec(1, analytic_flat.len(), analytic_flat).unwrap();
        assert!(relative_error(&analytic, &numeric, 1e-10) < 1e-4);
    }

    #[test]
    fn auto_class_weights_are_inverse_frequency() {
        assert_eq!(class_weights_for(&[0, 0, 0, 1], ClassWeighting::Auto), [4.0 / 6.0, 2.0]);
        assert_eq!(class_weights_for(&[0, 0], ClassWeighting::Auto), [0.5, 0.0]);
    }
}
