//! Display selection strategies.
//!
//! Indices handled here are row positions into the full feature matrix;
//! the pool lists the candidates and the labeled set what the oracle has
//! already annotated.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierModel;
use crate::error::{Error, Result};
use crate::exemplar::{learn_exemplars, ExemplarState, OptimizerConfig};
use crate::numerics::{sq_dist, Matrix};
use crate::rng;

/// Stable strategy identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    Maxmin,
    Uncertainty,
    FixedPool,
    VirtualExemplar,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Random,
        Strategy::Maxmin,
        Strategy::Uncertainty,
        Strategy::FixedPool,
        Strategy::VirtualExemplar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Maxmin => "maxmin",
            Strategy::Uncertainty => "uncertainty",
            Strategy::FixedPool => "fixed_pool",
            Strategy::VirtualExemplar => "virtual_exemplar",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DisplayRequest<'a> {
    /// Candidate unlabeled positions.
    pub pool: &'a [usize],
    /// Display size.
    pub budget: usize,
    /// Already-annotated positions.
    pub labeled: &'a [usize],
    pub seed: u64,
}

impl DisplayRequest<'_> {
    pub fn validate(&self) -> Result<()> {
        if self.budget > self.pool.len() {
            return Err(Error::Budget {
                budget: self.budget,
                pool: self.pool.len(),
            });
        }
        let mut pool = self.pool.to_vec();
        pool.sort_unstable();
        if pool.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("pool contains duplicate indices".into()));
        }
        if let Some(l) = self.labeled.iter().find(|l| pool.binary_search(l).is_ok()) {
            return Err(Error::Config(format!("index {l} is both labeled and in the pool")));
        }
        Ok(())
    }
}

/// What a sampler produced: the display and, for the exemplar strategy,
/// the optimizer state behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub indices: Vec<usize>,
    pub exemplars: Option<ExemplarState>,
}

/// Uniform draw without replacement.
pub fn sample_random(req: &DisplayRequest<'_>) -> Result<Vec<usize>> {
    req.validate()?;
    let mut rng = rng::seeded(req.seed);
    Ok(index::sample(&mut rng, req.pool.len(), req.budget)
        .into_iter()
        .map(|i| req.pool[i])
        .collect())
}

/// Greedy farthest-point selection against labeled ∪ already picked.
/// Without labeled data the first pick is random. Ties go to the lowest
/// index.
pub fn sample_maxmin(req: &DisplayRequest<'_>, x: &Matrix) -> Result<Vec<usize>> {
    req.validate()?;
    let mut remaining: Vec<usize> = req.pool.to_vec();
    remaining.sort_unstable();
    let mut min_dist: Vec<f64> = remaining
        .iter()
        .map(|&i| {
            req.labeled
                .iter()
                .map(|&l| sq_dist(x.row(i), x.row(l)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut picked = Vec::with_capacity(req.budget);
    while picked.len() < req.budget {
        let slot = if req.labeled.is_empty() && picked.is_empty() {
            let mut rng = rng::seeded(req.seed);
            index::sample(&mut rng, remaining.len(), 1).index(0)
        } else {
            // strict comparison keeps the first (lowest index) maximum
            let mut best = 0;
            for s in 1..remaining.len() {
                if min_dist[s] > min_dist[best] {
                    best = s;
                }
            }
            best
        };
        let chosen = remaining.remove(slot);
        min_dist.remove(slot);
        for (s, &i) in remaining.iter().enumerate() {
            min_dist[s] = min_dist[s].min(sq_dist(x.row(i), x.row(chosen)));
        }
        picked.push(chosen);
    }
    Ok(picked)
}

/// The `budget` pool items whose `P(change)` is closest to 0.5.
pub fn sample_uncertainty(req: &DisplayRequest<'_>, x: &Matrix, model: Option<&ClassifierModel>) -> Result<Vec<usize>> {
    req.validate()?;
    let model = model.ok_or(Error::RequiresModel("uncertainty"))?;
    let scores = model.change_scores(&x.select_rows(req.pool))?;
    let mut ranked: Vec<(f64, usize)> = scores
        .iter()
        .zip(req.pool)
        .map(|(p, &i)| ((p - 0.5).abs(), i))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(ranked.into_iter().take(req.budget).map(|(_, i)| i).collect())
}

fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mid = values.len() / 2;
    let (_, m, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *m;
    if values.len() % 2 == 1 {
        upper
    } else {
        let lower = values[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 && total.is_finite() {
        v.iter_mut().for_each(|e| *e /= total);
    } else {
        let u = 1.0 / v.len().max(1) as f64;
        v.iter_mut().for_each(|e| *e = u);
    }
    v
}

/// Fixed-pool membership selection: each pool item is scored by the
/// product of its representativity (Gaussian kernel density over the pool,
/// bandwidth = median pairwise distance), its diversity (one minus its
/// largest kernel similarity to labeled or already-picked items) and its
/// uncertainty (`1 − 2|P(change) − 0.5|`, floored at 1e-6). Each factor is
/// normalized over the pool; the display is built by repeated argmax.
pub fn sample_fixed_pool_membership(
    req: &DisplayRequest<'_>,
    x: &Matrix,
    model: Option<&ClassifierModel>,
) -> Result<Vec<usize>> {
    req.validate()?;
    let model = model.ok_or(Error::RequiresModel("fixed_pool"))?;
    if req.pool.is_empty() {
        return Err(Error::Budget {
            budget: req.budget,
            pool: 0,
        });
    }
    let mut pool = req.pool.to_vec();
    pool.sort_unstable();
    let m = pool.len();

    let mut sq = vec![0.0; m * m];
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for a in 0..m {
        for b in a + 1..m {
            let v = sq_dist(x.row(pool[a]), x.row(pool[b]));
            sq[a * m + b] = v;
            sq[b * m + a] = v;
            dists.push(libm::sqrt(v));
        }
    }
    let h = median(dists).max(1e-12);
    let kernel = |s: f64| libm::exp(-s / (2.0 * h * h));

    let density = normalized((0..m).map(|a| (0..m).map(|b| kernel(sq[a * m + b])).sum()).collect());
    let scores = model.change_scores(&x.select_rows(&pool))?;
    let uncertainty = normalized(scores.iter().map(|p| (1.0 - 2.0 * (p - 0.5).abs()).max(1e-6)).collect());

    let mut similarity: Vec<f64> = pool
        .iter()
        .map(|&i| {
            req.labeled
                .iter()
                .map(|&l| kernel(sq_dist(x.row(i), x.row(l))))
                .fold(0.0, f64::max)
        })
        .collect();
    let mut taken = vec![false; m];
    let mut picked = Vec::with_capacity(req.budget);
    while picked.len() < req.budget {
        let diversity = normalized(similarity.iter().map(|s| 1.0 - s).collect());
        let mut best: Option<(usize, f64)> = None;
        for a in (0..m).filter(|&a| !taken[a]) {
            let score = density[a] * diversity[a] * uncertainty[a];
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((a, score));
            }
        }
        let (a, _) = best.expect("budget <= pool size");
        taken[a] = true;
        picked.push(pool[a]);
        for b in 0..m {
            similarity[b] = similarity[b].max(kernel(sq[a * m + b]));
        }
    }
    Ok(picked)
}

/// Maps each virtual exemplar (column of `exemplars`) to a distinct real
/// pool item. Exemplars are served in ascending order of their distance to
/// their own nearest pool item; each takes its nearest item not already
/// taken. The result is in exemplar column order.
pub fn transfer_to_display(exemplars: &Matrix, x: &Matrix, pool: &[usize]) -> Result<Vec<usize>> {
    let k = exemplars.cols();
    if pool.len() < k {
        return Err(Error::Budget {
            budget: k,
            pool: pool.len(),
        });
    }
    if exemplars.rows() != x.cols() {
        return Err(Error::Shape {
            op: "transfer_to_display",
            left_name: "exemplars (d x K)",
            left: exemplars.shape(),
            right_name: "X (n x d)",
            right: x.shape(),
        });
    }
    let mut pool = pool.to_vec();
    pool.sort_unstable();
    let cols: Vec<Vec<f64>> = (0..k).map(|c| exemplars.col(c)).collect();
    let dist: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| pool.iter().map(|&i| sq_dist(c, x.row(i))).collect())
        .collect();
    let nearest: Vec<f64> = dist
        .iter()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| nearest[a].total_cmp(&nearest[b]).then(a.cmp(&b)));

    let mut taken = vec![false; pool.len()];
    let mut assigned = vec![usize::MAX; k];
    for c in order {
        let mut best: Option<usize> = None;
        for s in (0..pool.len()).filter(|&s| !taken[s]) {
            if best.is_none_or(|b| dist[c][s] < dist[c][b]) {
                best = Some(s);
            }
        }
        let s = best.expect("pool holds at least K items");
        taken[s] = true;
        assigned[c] = pool[s];
    }
    Ok(assigned)
}

/// Learns `budget` virtual exemplars over the pool with the current model
/// and maps them to real pool items. Without a model this falls back to
/// the random display.
pub fn sample_virtual_exemplar(
    req: &DisplayRequest<'_>,
    x: &Matrix,
    model: Option<&ClassifierModel>,
    config: &OptimizerConfig,
) -> Result<Selection> {
    req.validate()?;
    let Some(model) = model else {
        return Ok(Selection {
            indices: sample_random(req)?,
            exemplars: None,
        });
    };
    if req.budget == 0 {
        return Ok(Selection {
            indices: Vec::new(),
            exemplars: None,
        });
    }
    let mut pool = req.pool.to_vec();
    pool.sort_unstable();
    let pool_x = x.select_rows(&pool);
    let config = OptimizerConfig {
        k: req.budget,
        seed: req.seed,
        ..config.clone()
    };
    let state = learn_exemplars(&pool_x, Some(model), &config)?;
    let indices = transfer_to_display(&state.exemplars, x, &pool)?;
    Ok(Selection {
        indices,
        exemplars: Some(state),
    })
}

/// Dispatches a display request to the named strategy.
pub fn select(
    strategy: Strategy,
    req: &DisplayRequest<'_>,
    x: &Matrix,
    model: Option<&ClassifierModel>,
    optimizer: &OptimizerConfig,
) -> Result<Selection> {
    let plain = |indices| {
        Ok(Selection {
            indices,
            exemplars: None,
        })
    };
    match strategy {
        Strategy::Random => plain(sample_random(req)?),
        Strategy::Maxmin => plain(sample_maxmin(req, x)?),
        Strategy::Uncertainty => plain(sample_uncertainty(req, x, model)?),
        Strategy::FixedPool => plain(sample_fixed_pool_membership(req, x, model)?),
        Strategy::VirtualExemplar => sample_virtual_exemplar(req, x, model, optimizer),
    }
}
