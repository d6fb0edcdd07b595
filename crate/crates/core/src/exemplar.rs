//! Virtual exemplar learning.
//!
//! Exemplars `D` (d×K, one exemplar per column) and memberships `μ` (n×K)
//! jointly minimize
//!
//! ```text
//! tr(dist(D, X) μ) + α qᵀ log q + β tr(f(D)ᵀ log f(D)) + γ tr(μ log μᵀ),   q = μ 1_K / K
//! ```
//!
//! with every column of `μ` a probability distribution over the n samples.
//! The optimizer alternates a closed-form membership update with descent
//! on `D` through the frozen classifier `f`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::classifier::{ClassifierModel, InputLoss};
use crate::error::{Error, Result};
use crate::numerics::{clamped_ln, pairwise_distances, pairwise_sq_distances, xlogx, Distance, Matrix};
use crate::rng;

/// Which marginals of `μ` are constrained to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stochasticity {
    /// Each exemplar carries a distribution over samples.
    #[default]
    Column,
    /// Each sample carries a distribution over exemplars (comparison mode).
    Row,
}

/// Tunables of the exemplar objective and its solver.
///
/// The defaults (`alpha = 0.1`, `beta = 0.5`, `gamma = 1.0`) assume
/// standardized features; they are starting points, not calibrated values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Weight of the attraction-diversity term.
    pub alpha: f64,
    /// Weight of the classifier-ambiguity term.
    pub beta: f64,
    /// Weight of the membership entropy term (the softmin temperature).
    pub gamma: f64,
    /// Number of exemplars.
    pub k: usize,
    pub outer_iterations: usize,
    pub mu_iterations: usize,
    pub step_size: f64,
    pub d_steps: usize,
    pub seed: u64,
    pub stochasticity: Stochasticity,
    pub distance: Distance,
    /// Log-domain relaxation of the attraction fed back into the
    /// membership update; `None` picks `1 / (1 + α / (Kγ))`. With `α = 0`
    /// this is 1 and the inner loop is the plain fixed-point iteration.
    pub mu_damping: Option<f64>,
    /// Relative objective change that ends the alternation.
    pub tolerance: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 0.5,
            gamma: 1.0,
            k: 16,
            outer_iterations: 15,
            mu_iterations: 10,
            step_size: 0.1,
            d_steps: 25,
            seed: 0,
            stochasticity: Stochasticity::Column,
            distance: Distance::SqEuclidean,
            mu_damping: None,
            tolerance: 1e-5,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::Config(alloc::format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.alpha >= 0.0) || !(self.beta >= 0.0) {
            return Err(Error::Config("alpha and beta must be >= 0".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("K must be >= 1".into()));
        }
        if !(self.step_size > 0.0) {
            return Err(Error::Config("step size must be > 0".into()));
        }
        if let Some(eta) = self.mu_damping {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::Config("mu damping must lie in (0, 1]".into()));
            }
        }
        Ok(())
    }

    fn damping(&self) -> f64 {
        self.mu_damping
            .unwrap_or_else(|| 1.0 / (1.0 + self.alpha / (self.k as f64 * self.gamma)))
    }
}

/// Objective value with its four terms (already multiplied by their weights).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Objective {
    pub total: f64,
    pub representativity: f64,
    pub diversity: f64,
    pub uncertainty: f64,
    pub regularity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarState {
    /// d×K, column k is exemplar k.
    pub exemplars: Matrix,
    /// n×K membership matrix.
    pub memberships: Matrix,
    /// Objective after initialization and after every outer iteration.
    pub trace: Vec<Objective>,
}

impl ExemplarState {
    pub fn k(&self) -> usize {
        self.exemplars.cols()
    }

    /// Largest membership of each exemplar column.
    pub fn concentration(&self) -> Vec<f64> {
        (0..self.memberships.cols())
            .map(|k| self.memberships.col(k).into_iter().fold(0.0, f64::max))
            .collect()
    }
}

/// `q = μ 1_K / K`, how strongly each sample attracts the exemplars.
pub fn attraction(mu: &Matrix) -> Vec<f64> {
    let k = mu.cols() as f64;
    mu.row_sums().into_iter().map(|s| s / k).collect()
}

fn check_shapes(d: &Matrix, mu: &Matrix, x: &Matrix) -> Result<()> {
    if d.rows() != x.cols() {
        return Err(Error::Shape {
            op: "exemplar objective",
            left_name: "D (d x K)",
            left: d.shape(),
            right_name: "X (n x d)",
            right: x.shape(),
        });
    }
    if mu.shape() != (x.rows(), d.cols()) {
        return Err(Error::Shape {
            op: "exemplar objective",
            left_name: "mu (n x K)",
            left: mu.shape(),
            right_name: "expected",
            right: (x.rows(), d.cols()),
        });
    }
    Ok(())
}

/// Checks membership feasibility for the configured mode.
pub fn check_memberships(mu: &Matrix, mode: Stochasticity, tol: f64) -> Result<()> {
    if let Some(v) = mu.as_slice().iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Constraint(alloc::format!("negative or NaN membership {v}")));
    }
    let (sums, what) = match mode {
        Stochasticity::Column => (mu.col_sums(), "column"),
        Stochasticity::Row => (mu.row_sums(), "row"),
    };
    for (i, s) in sums.iter().enumerate() {
        if (s - 1.0).abs() > tol {
            return Err(Error::Constraint(alloc::format!("{what} {i} sums to {s}")));
        }
    }
    Ok(())
}

fn representativity(dist: &Matrix, mu: &Matrix) -> f64 {
    // tr(dist μ) with dist K×n and μ n×K
    let mut acc = 0.0;
    for k in 0..dist.rows() {
        for (i, dv) in dist.row(k).iter().enumerate() {
            acc += dv * mu.get(i, k);
        }
    }
    acc
}

fn uncertainty(d: &Matrix, model: Option<&ClassifierModel>, beta: f64) -> Result<f64> {
    if beta == 0.0 {
        return Ok(0.0);
    }
    let model = model.ok_or(Error::RequiresModel("virtual_exemplar"))?;
    Ok(beta * model.input_loss(d, InputLoss::NegEntropy)?)
}

/// Evaluates the full objective and its terms.
pub fn objective(
    state: &ExemplarState,
    x: &Matrix,
    model: Option<&ClassifierModel>,
    config: &OptimizerConfig,
) -> Result<Objective> {
    let (d, mu) = (&state.exemplars, &state.memberships);
    check_shapes(d, mu, x)?;
    check_memberships(mu, config.stochasticity, 1e-6)?;
    let dist = pairwise_distances(x, d, config.distance)?;
    let representativity = representativity(&dist, mu);
    let diversity = config.alpha * attraction(mu).into_iter().map(xlogx).sum::<f64>();
    let uncertainty = uncertainty(d, model, config.beta)?;
    let regularity = config.gamma * mu.as_slice().iter().map(|&v| xlogx(v)).sum::<f64>();
    Ok(Objective {
        total: representativity + diversity + uncertainty + regularity,
        representativity,
        diversity,
        uncertainty,
        regularity,
    })
}

/// Memberships from the exponent of the closed-form update, given the
/// log-attraction of each sample. Works in the log domain: the bracket is
/// divided by −γ, shifted by its maximum along the normalized axis, then
/// exponentiated and normalized.
fn memberships_from_log_attraction(dist: &Matrix, log_q: &[f64], config: &OptimizerConfig) -> Matrix {
    let (k_count, n) = dist.shape();
    let a_k = config.alpha / k_count as f64;
    let mut logits = Matrix::from_fn(n, k_count, |i, k| {
        -(dist.get(k, i) + a_k * (1.0 + log_q[i])) / config.gamma
    });
    match config.stochasticity {
        Stochasticity::Column => {
            let mut t = logits.transpose();
            for k in 0..k_count {
                normalize_exp(t.row_mut(k));
            }
            t.transpose()
        }
        Stochasticity::Row => {
            for i in 0..n {
                normalize_exp(logits.row_mut(i));
            }
            logits
        }
    }
}

fn normalize_exp(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for e in v.iter_mut() {
        *e = libm::exp(*e - max);
        total += *e;
    }
    for e in v.iter_mut() {
        *e /= total;
    }
}

/// One closed-form membership update: with `q` the attraction of
/// `mu_prev`, `μ̂ᵢₖ = exp{−[dist(xᵢ, Dₖ) + (α/K)(1 + log qᵢ)]/γ}`, then each
/// column (or row, in row mode) is normalized to sum to one.
pub fn update_mu(d: &Matrix, mu_prev: &Matrix, x: &Matrix, config: &OptimizerConfig) -> Result<Matrix> {
    config.validate()?;
    check_shapes(d, mu_prev, x)?;
    let dist = pairwise_distances(x, d, config.distance)?;
    let log_q: Vec<f64> = attraction(mu_prev).into_iter().map(clamped_ln).collect();
    let mu = memberships_from_log_attraction(&dist, &log_q, config);
    mu.ensure_finite("membership update")?;
    Ok(mu)
}

/// Runs the membership update to (approximately) its fixed point with `D`
/// held fixed, for at most `config.mu_iterations` iterations.
///
/// The attraction fed into each update is relaxed geometrically toward
/// the attraction of the latest memberships with factor `mu_damping`.
/// Relaxation does not move the fixed point, but keeps the iteration from
/// oscillating when `α / (Kγ)` approaches or exceeds one.
pub fn solve_mu(d: &Matrix, mu_init: &Matrix, x: &Matrix, config: &OptimizerConfig) -> Result<Matrix> {
    config.validate()?;
    check_shapes(d, mu_init, x)?;
    let dist = pairwise_distances(x, d, config.distance)?;
    let eta = config.damping();
    let mut log_q: Vec<f64> = attraction(mu_init).into_iter().map(clamped_ln).collect();
    let mut mu = mu_init.clone();
    for _ in 0..config.mu_iterations {
        let next = memberships_from_log_attraction(&dist, &log_q, config);
        let change = next.max_abs_diff(&mu);
        mu = next;
        for (lq, q) in log_q.iter_mut().zip(attraction(&mu)) {
            *lq = (1.0 - eta) * *lq + eta * clamped_ln(q);
        }
        if change < 1e-14 {
            break;
        }
    }
    mu.ensure_finite("membership update")?;
    Ok(mu)
}

/// The part of the objective that depends on `D`: representativity plus
/// weighted ambiguity.
pub fn exemplar_loss(
    d: &Matrix,
    x: &Matrix,
    mu: &Matrix,
    model: Option<&ClassifierModel>,
    config: &OptimizerConfig,
) -> Result<f64> {
    let dist = pairwise_distances(x, d, config.distance)?;
    Ok(representativity(&dist, mu) + uncertainty(d, model, config.beta)?)
}

/// Analytic gradient of [`exemplar_loss`] with respect to `D`.
///
/// For squared distances the representativity part is
/// `2 (D diag(1ᵀμ) − Xᵀμ)`; the ambiguity part is backpropagated through
/// the classifier.
pub fn exemplar_gradient(
    d: &Matrix,
    x: &Matrix,
    mu: &Matrix,
    model: Option<&ClassifierModel>,
    config: &OptimizerConfig,
) -> Result<Matrix> {
    check_shapes(d, mu, x)?;
    let (dim, k_count) = d.shape();
    let mut grad = Matrix::zeros(dim, k_count);
    match config.distance {
        Distance::SqEuclidean => {
            let colsum = mu.col_sums();
            let xt_mu = x.transpose().matmul(mu)?;
            for j in 0..dim {
                for k in 0..k_count {
                    grad.set(j, k, 2.0 * (d.get(j, k) * colsum[k] - xt_mu.get(j, k)));
                }
            }
        }
        metric => {
            let sq = pairwise_sq_distances(x, d)?;
            for k in 0..k_count {
                for i in 0..x.rows() {
                    let w = 2.0 * mu.get(i, k) * metric.d_from_sq(sq.get(k, i));
                    if w == 0.0 {
                        continue;
                    }
                    for j in 0..dim {
                        *grad.get_mut(j, k) += w * (d.get(j, k) - x.get(i, j));
                    }
                }
            }
        }
    }
    grad.ensure_finite("representativity gradient")?;
    if config.beta != 0.0 {
        let model = model.ok_or(Error::RequiresModel("virtual_exemplar"))?;
        let g3 = model.input_gradient(d, InputLoss::NegEntropy).map_err(|e| match e {
            Error::NonFinite(_) => Error::NonFinite("uncertainty gradient"),
            other => other,
        })?;
        grad.axpy(config.beta, &g3);
        grad.ensure_finite("uncertainty gradient")?;
    }
    Ok(grad)
}

/// `config.d_steps` backtracking descent steps on `D` with `μ` fixed.
/// Each step starts at `config.step_size` and halves it (at most 20 times)
/// until the loss does not increase; if no such step exists, `D` is left
/// where it is.
pub fn update_exemplars(
    state: &ExemplarState,
    x: &Matrix,
    model: Option<&ClassifierModel>,
    config: &OptimizerConfig,
) -> Result<Matrix> {
    config.validate()?;
    let mu = &state.memberships;
    let mut d = state.exemplars.clone();
    let mut loss = exemplar_loss(&d, x, mu, model, config)?;
    for _ in 0..config.d_steps {
        let grad = exemplar_gradient(&d, x, mu, model, config)?;
        let mut step = config.step_size;
        let mut accepted = false;
        for _ in 0..=20 {
            let mut candidate = d.clone();
            candidate.axpy(-step, &grad);
            let cand_loss = exemplar_loss(&candidate, x, mu, model, config)?;
            if cand_loss.is_finite() && cand_loss <= loss {
                d = candidate;
                loss = cand_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(d)
}

/// Seeds K distinct data rows: the first uniformly, each next one with
/// probability proportional to its squared distance from those already
/// chosen (lowest index wins when every remaining row coincides with a
/// chosen one).
fn seed_rows(x: &Matrix, k: usize, rng: &mut rng::EngineRng) -> Vec<usize> {
    let n = x.rows();
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    taken[first] = true;
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| crate::numerics::sq_dist(x.row(i), x.row(first)))
        .collect();
    while chosen.len() < k {
        let total: f64 = (0..n).filter(|&i| !taken[i]).map(|i| nearest[i]).sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for i in (0..n).filter(|&i| !taken[i]) {
                target -= nearest[i];
                if target < 0.0 && nearest[i] > 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave a sliver of mass; fall back to the last candidate with weight
            pick.unwrap_or_else(|| (0..n).rev().find(|&i| !taken[i] && nearest[i] > 0.0).unwrap())
        } else {
            (0..n).find(|&i| !taken[i]).unwrap()
        };
        chosen.push(pick);
        taken[pick] = true;
        for i in 0..n {
            nearest[i] = nearest[i].min(crate::numerics::sq_dist(x.row(i), x.row(pick)));
        }
    }
    chosen
}

/// Initial state: exemplars on seeded data rows plus Gaussian noise of
/// 0.01 per-feature standard deviation, uniform memberships.
pub fn initial_state(x: &Matrix, config: &OptimizerConfig) -> Result<ExemplarState> {
    config.validate()?;
    let (n, dim) = x.shape();
    if config.k > n {
        return Err(Error::Config(alloc::format!("K = {} exceeds n = {n}", config.k)));
    }
    let mut rng = rng::seeded(config.seed);
    let rows = seed_rows(x, config.k, &mut rng);
    let (_, std) = x.col_mean_std();
    let mut d = Matrix::zeros(dim, config.k);
    for (k, &r) in rows.iter().enumerate() {
        for j in 0..dim {
            let scale = 0.01 * std[j];
            let noise = if scale > 0.0 {
                Normal::new(0.0, scale).map(|nd| nd.sample(&mut rng)).unwrap_or(0.0)
            } else {
                0.0
            };
            d.set(j, k, x.get(r, j) + noise);
        }
    }
    let mu = match config.stochasticity {
        Stochasticity::Column => Matrix::filled(n, config.k, 1.0 / n as f64),
        Stochasticity::Row => Matrix::filled(n, config.k, 1.0 / config.k as f64),
    };
    Ok(ExemplarState {
        exemplars: d,
        memberships: mu,
        trace: Vec::new(),
    })
}

/// Alternates membership solves and exemplar descent until the relative
/// objective change drops below `config.tolerance` or the outer budget is
/// spent.
pub fn learn_exemplars(x: &Matrix, model: Option<&ClassifierModel>, config: &OptimizerConfig) -> Result<ExemplarState> {
    x.ensure_finite("exemplar data")?;
    let mut state = initial_state(x, config)?;
    optimize_from(&mut state, x, model, config)?;
    Ok(state)
}

/// Continues the alternation from an arbitrary feasible state.
pub fn optimize_from(
    state: &mut ExemplarState,
    x: &Matrix,
    model: Option<&ClassifierModel>,
    config: &OptimizerConfig,
) -> Result<()> {
    let mut current = objective(state, x, model, config)?;
    state.trace.push(current);
    for _ in 0..config.outer_iterations {
        let previous = current.total;

        let mu = solve_mu(&state.exemplars, &state.memberships, x, config)?;
        let trial = ExemplarState {
            exemplars: state.exemplars.clone(),
            memberships: mu,
            trace: Vec::new(),
        };
        let after_mu = objective(&trial, x, model, config)?;
        // the membership subproblem is convex, but a truncated inner loop may overshoot
        if after_mu.total <= current.total {
            state.memberships = trial.memberships;
        }

        state.exemplars = update_exemplars(state, x, model, config)?;
        current = objective(state, x, model, config)?;
        state.trace.push(current);

        let rel = (previous - current.total).abs() / previous.abs().max(1e-12);
        if rel < config.tolerance {
            break;
        }
    }
    Ok(())
}
