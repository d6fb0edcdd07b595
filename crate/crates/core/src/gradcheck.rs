//! Finite-difference audits of every analytic gradient in the engine.

use alloc::vec::Vec;

use rand::Rng;

use crate::classifier::{class_weights_for, Activation, ClassWeighting, ClassifierModel, InputLoss};
use crate::error::Result;
use crate::exemplar::{exemplar_gradient, exemplar_loss, solve_mu, OptimizerConfig};
use crate::numerics::{finite_diff_gradient, relative_error, Distance, Matrix, FD_STEP};
use crate::rng;

/// Relative error accepted by every check.
pub const TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub instance: usize,
    pub relative_error: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.relative_error < TOLERANCE
    }
}

fn random_matrix(rng: &mut rng::EngineRng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

/// Gradient of the exemplar loss (representativity + β · ambiguity) through
/// a randomly initialized two-layer classifier.
pub fn exemplar_gradient_check(seed: u64, instance: usize) -> Result<CheckResult> {
    let mut rng = rng::seeded(rng::derive_seed(seed, instance as u64));
    let (n, d, k) = (rng.random_range(3..8), rng.random_range(2..5), rng.random_range(1..4));
    let activation = if instance.is_multiple_of(2) {
        Activation::Relu
    } else {
        Activation::Tanh
    };
    let model = ClassifierModel::initialized(&[d, 6, 2], activation, rng.random())?;
    let x = random_matrix(&mut rng, n, d, 1.5);
    let dm = random_matrix(&mut rng, d, k, 1.5);
    let config = OptimizerConfig {
        alpha: rng.random_range(0.0..0.5),
        beta: rng.random_range(0.1..2.0),
        gamma: rng.random_range(0.3..3.0),
        k,
        mu_iterations: 5,
        distance: if instance % 3 == 2 {
            Distance::EuclideanEps
        } else {
            Distance::SqEuclidean
        },
        ..OptimizerConfig::default()
    };
    let mu = solve_mu(&dm, &Matrix::filled(n, k, 1.0 / n as f64), &x, &config)?;
    let analytic = exemplar_gradient(&dm, &x, &mu, Some(&model), &config)?;
    let numeric = finite_diff_gradient(|m| exemplar_loss(m, &x, &mu, Some(&model), &config), &dm, FD_STEP)?;
    Ok(CheckResult {
        name: "exemplar loss wrt D",
        instance,
        relative_error: relative_error(&analytic, &numeric, 1e-10),
    })
}

/// Gradient of the classifier's output negative entropy with respect to
/// its inputs.
pub fn input_gradient_check(seed: u64, instance: usize) -> Result<CheckResult> {
    let mut rng = rng::seeded(rng::derive_seed(seed, 1000 + instance as u64));
    let d = rng.random_range(2..6);
    let model = ClassifierModel::initialized(&[d, 8, 2], Activation::Relu, rng.random())?;
    let dm = random_matrix(&mut rng, d, 3, 2.0);
    let analytic = model.input_gradient(&dm, InputLoss::NegEntropy)?;
    let numeric = finite_diff_gradient(|m| model.input_loss(m, InputLoss::NegEntropy), &dm, FD_STEP)?;
    Ok(CheckResult {
        name: "classifier input gradient",
        instance,
        relative_error: relative_error(&analytic, &numeric, 1e-10),
    })
}

/// Parameter gradient of the weighted training objective on 5 samples.
pub fn parameter_gradient_check(seed: u64, instance: usize) -> Result<CheckResult> {
    let mut rng = rng::seeded(rng::derive_seed(seed, 2000 + instance as u64));
    let x = random_matrix(&mut rng, 5, 3, 1.0);
    let y: Vec<u8> = (0..5)
        .map(|i| if i == 0 { 1 } else { rng.random_range(0..2) })
        .collect();
    let model = ClassifierModel::initialized(&[3, 4, 2], Activation::Tanh, rng.random())?;
    let weights = class_weights_for(&y, ClassWeighting::Auto);
    let decay = 1e-2;
    let (_, grads) = model.training_objective(&x, &y, weights, decay)?;
    let flat: Vec<f64> = grads
        .iter()
        .flat_map(|g| g.weights.as_slice().iter().chain(&g.biases).copied())
        .collect();
    let analytic = Matrix::from_vec(1, flat.len(), flat)?;
    let params = model.params_flat();
    let at = Matrix::from_vec(1, params.len(), params)?;
    let numeric = finite_diff_gradient(
        |p| {
            let mut m = model.clone();
            m.set_params_flat(p.as_slice());
            Ok(m.training_objective(&x, &y, weights, decay)?.0)
        },
        &at,
        FD_STEP,
    )?;
    Ok(CheckResult {
        name: "classifier parameter gradient",
        instance,
        relative_error: relative_error(&analytic, &numeric, 1e-10),
    })
}

/// Runs `instances` random cases of every check.
pub fn run_all(seed: u64, instances: usize) -> Result<Vec<CheckResult>> {
    let mut out = Vec::with_capacity(3 * instances);
    for i in 0..instances {
        out.push(exemplar_gradient_check(seed, i)?);
        out.push(input_gradient_check(seed, i)?);
        out.push(parameter_gradient_check(seed, i)?);
    }
    Ok(out)
}
