//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the engine's numerics.

#![allow(dead_code)]

/// `dist[i][k]`: squared Euclidean distance from row `i` of `x` to column
/// `k` of `d` (given as `d[j][k]`).
pub fn sq_dists(x: &[Vec<f64>], d: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k_count = d[0].len();
    x.iter()
        .map(|row| {
            (0..k_count)
                .map(|k| row.iter().enumerate().map(|(j, v)| (v - d[j][k]).powi(2)).sum())
                .collect()
        })
        .collect()
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// The membership subproblem: `Σ dist·μ + α Σ q log q + γ Σ μ log μ`.
pub fn mu_objective(dist: &[Vec<f64>], mu: &[Vec<f64>], alpha: f64, gamma: f64) -> f64 {
    let k_count = mu[0].len() as f64;
    let mut f = 0.0;
    for (drow, mrow) in dist.iter().zip(mu) {
        let q = mrow.iter().sum::<f64>() / k_count;
        f += alpha * plogp(q);
        for (dv, m) in drow.iter().zip(mrow) {
            f += dv * m + gamma * plogp(*m);
        }
    }
    f
}

fn mu_gradient(dist: &[Vec<f64>], mu: &[Vec<f64>], alpha: f64, gamma: f64) -> Vec<Vec<f64>> {
    let k_count = mu[0].len() as f64;
    dist.iter()
        .zip(mu)
        .map(|(drow, mrow)| {
            let q = (mrow.iter().sum::<f64>() / k_count).max(1e-300);
            drow.iter()
                .zip(mrow)
                .map(|(dv, m)| dv + alpha / k_count * (q.ln() + 1.0) + gamma * (m.max(1e-300).ln() + 1.0))
                .collect()
        })
        .collect()
}

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j as f64 + 1.0);
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Projection onto `{μ ≥ floor, Σ μ = 1}`: shift by the floor, then project
/// onto the simplex scaled to the remaining mass.
pub fn project_floored_simplex(v: &[f64], floor: f64) -> Vec<f64> {
    let mass = 1.0 - floor * v.len() as f64;
    let shifted: Vec<f64> = v.iter().map(|x| (x - floor) / mass).collect();
    project_simplex(&shifted)
        .into_iter()
        .map(|u| floor + mass * u)
        .collect()
}

/// Minimizes the membership subproblem over column-stochastic matrices.
///
/// Spectral projected gradient (Barzilai-Borwein steps, per-column simplex
/// projection, non-monotone Armijo search) does the bulk of the work with
/// entries floored at 1e-12. Entries near 1e-9 make it stall, since their
/// entropy curvature γ/μ dwarfs everything else, so the result is polished
/// by exact line minimization along pairwise exchanges `e_i − e_j` within
/// each column until nothing moves.
pub fn brute_force_mu(dist: &[Vec<f64>], alpha: f64, gamma: f64) -> (Vec<Vec<f64>>, f64) {
    const FLOOR: f64 = 1e-12;
    let (n, k_count) = (dist.len(), dist[0].len());
    let flat = |m: &[Vec<f64>]| m.iter().flatten().copied().collect::<Vec<f64>>();
    let project = |v: &[f64]| {
        let mut out = vec![vec![0.0; k_count]; n];
        for k in 0..k_count {
            let col: Vec<f64> = (0..n).map(|i| v[i * k_count + k]).collect();
            for (i, p) in project_floored_simplex(&col, FLOOR).into_iter().enumerate() {
                out[i][k] = p;
            }
        }
        out
    };

    let mut x = vec![1.0 / n as f64; n * k_count];
    let unflat = |v: &[f64]| v.chunks(k_count).map(<[f64]>::to_vec).collect::<Vec<_>>();
    let mut f = mu_objective(dist, &unflat(&x), alpha, gamma);
    let mut g = flat(&mu_gradient(dist, &unflat(&x), alpha, gamma));
    let mut best = (x.clone(), f);
    let mut lambda = 1.0;
    let mut recent = vec![f];
    for _ in 0..20_000 {
        let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - lambda * b).collect();
        let dir: Vec<f64> = flat(&project(&trial)).iter().zip(&x).map(|(p, a)| p - a).collect();
        let slope: f64 = dir.iter().zip(&g).map(|(d, gi)| d * gi).sum();
        if slope > -1e-20 {
            break;
        }
        let f_ref = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut t = 1.0;
        let (x_next, f_next) = loop {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let fc = mu_objective(dist, &unflat(&cand), alpha, gamma);
            if fc <= f_ref + 1e-4 * t * slope || t < 1e-12 {
                break (cand, fc);
            }
            t *= 0.5;
        };
        let g_next = flat(&mu_gradient(dist, &unflat(&x_next), alpha, gamma));
        let sy: f64 = (0..x.len()).map(|i| (x_next[i] - x[i]) * (g_next[i] - g[i])).sum();
        let ss: f64 = (0..x.len()).map(|i| (x_next[i] - x[i]).powi(2)).sum();
        lambda = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { 1e3 };
        x = x_next;
        f = f_next;
        g = g_next;
        if f < best.1 {
            best = (x.clone(), f);
        }
        recent.push(f);
        if recent.len() > 10 {
            recent.remove(0);
        }
    }
    let mut mu = unflat(&best.0);
    for _ in 0..2_000 {
        let mut moved = 0.0f64;
        for k in 0..k_count {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        moved = moved.max(exchange(dist, &mut mu, alpha, gamma, k, i, j));
                    }
                }
            }
        }
        if moved < 1e-14 {
            break;
        }
    }
    let f = mu_objective(dist, &mu, alpha, gamma);
    (mu, f)
}

/// Moves mass `t` from `mu[j][k]` to `mu[i][k]`, with `t` minimizing the
/// objective along that line (bisection on the monotone derivative).
/// Returns `|t|`.
fn exchange(dist: &[Vec<f64>], mu: &mut [Vec<f64>], alpha: f64, gamma: f64, k: usize, i: usize, j: usize) -> f64 {
    let (mi, mj) = (mu[i][k], mu[j][k]);
    let slope = |mu: &mut [Vec<f64>], t: f64| {
        mu[i][k] = mi + t;
        mu[j][k] = mj - t;
        let g = mu_gradient(dist, mu, alpha, gamma);
        g[i][k] - g[j][k]
    };
    let (mut lo, mut hi) = (-mi, mj);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if slope(mu, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let before = {
        mu[i][k] = mi;
        mu[j][k] = mj;
        mu_objective(dist, mu, alpha, gamma)
    };
    mu[i][k] = mi + t;
    mu[j][k] = mj - t;
    if mu_objective(dist, mu, alpha, gamma) > before {
        mu[i][k] = mi;
        mu[j][k] = mj;
        return 0.0;
    }
    t.abs()
}

/// FPR and FNR at threshold `t` (positive when `score >= t`).
fn rates(scores: &[f64], labels: &[u8], t: f64) -> (f64, f64) {
    let pos = labels.iter().filter(|&&y| y == 1).count() as f64;
    let neg = labels.len() as f64 - pos;
    let fp = scores.iter().zip(labels).filter(|(s, y)| **y == 0 && **s >= t).count() as f64;
    let fn_ = scores.iter().zip(labels).filter(|(s, y)| **y == 1 && **s < t).count() as f64;
    (fp / neg, fn_ / pos)
}

/// Exhaustive threshold sweep: every distinct score plus ±∞, counting
/// errors from scratch at each threshold, then linear interpolation across
/// the first sign change of `FPR − FNR`.
pub fn eer_sweep(scores: &[f64], labels: &[u8]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.insert(0, f64::NEG_INFINITY);
    thresholds.push(f64::INFINITY);
    let points: Vec<(f64, f64)> = thresholds.iter().map(|&t| rates(scores, labels, t)).collect();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (da, db) = (a.0 - a.1, b.0 - b.1);
        if da == 0.0 {
            return a.0;
        }
        if da > 0.0 && db <= 0.0 {
            if db == 0.0 {
                return b.0;
            }
            let t = da / (da - db);
            return a.0 + t * (b.0 - a.0);
        }
    }
    unreachable!("FPR − FNR ends at −1")
}
