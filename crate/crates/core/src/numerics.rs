//! Dense matrices and the distance/softmax/entropy kernels shared by the
//! classifier and the exemplar optimizer.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clamp applied inside logarithms of computed probabilities.
pub const LOG_EPS: f64 = 1e-12;

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Dense row-major `f64` matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        Matrix::from_vec(raw.rows, raw.cols, raw.data)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Shape {
                op: "Matrix::from_vec",
                left_name: "shape",
                left: (rows, cols),
                right_name: "data",
                right: (data.len(), 1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape {
                    op: "Matrix::from_rows",
                    left_name: "first row",
                    left: (1, cols),
                    right_name: if i == 0 { "row" } else { "later row" },
                    right: (1, r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_cols<C: AsRef<[f64]>>(cols: &[C]) -> Result<Self> {
        Ok(Self::from_rows(cols)?.transpose())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn get_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn set_col(&mut self, c: usize, values: &[f64]) {
        for (r, v) in values.iter().enumerate() {
            self.set(r, c, *v);
        }
    }

    /// New matrix holding the listed rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Shape {
                op: "matmul",
                left_name: "lhs",
                left: self.shape(),
                right_name: "rhs",
                right: other.shape(),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let lhs = self.row(r);
            let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for (j, &a) in lhs.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (d, &b) in dst.iter_mut().zip(other.row(j)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (o, v) in out.iter_mut().zip(self.row(r)) {
                *o += v;
            }
        }
        out
    }

    /// Per-column mean and (population) standard deviation.
    pub fn col_mean_std(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.rows.max(1) as f64;
        let mean: Vec<f64> = self.col_sums().into_iter().map(|s| s / n).collect();
        let mut var = vec![0.0; self.cols];
        for r in 0..self.rows {
            for ((v, x), m) in var.iter_mut().zip(self.row(r)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.into_iter().map(|v| libm::sqrt(v / n)).collect();
        (mean, std)
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, factor: f64, other: &Matrix) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }
}

/// Distance used by the representativity term and the membership update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    /// `‖a − b‖²`.
    #[default]
    SqEuclidean,
    /// `sqrt(‖a − b‖² + 1e-8)`, smooth at coincidence.
    EuclideanEps,
}

impl Distance {
    pub const SMOOTHING: f64 = 1e-8;

    #[inline]
    pub fn from_sq(self, sq: f64) -> f64 {
        match self {
            Distance::SqEuclidean => sq,
            Distance::EuclideanEps => libm::sqrt(sq + Self::SMOOTHING),
        }
    }

    /// Derivative of the distance with respect to the squared distance.
    #[inline]
    pub fn d_from_sq(self, sq: f64) -> f64 {
        match self {
            Distance::SqEuclidean => 1.0,
            Distance::EuclideanEps => 0.5 / libm::sqrt(sq + Self::SMOOTHING),
        }
    }
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_distance_shapes(x: &Matrix, d: &Matrix) -> Result<()> {
    if x.cols() != d.rows() || x.rows() == 0 || d.cols() == 0 {
        return Err(Error::Shape {
            op: "pairwise_sq_distances",
            left_name: "X (n x d)",
            left: x.shape(),
            right_name: "D (d x K)",
            right: d.shape(),
        });
    }
    Ok(())
}

/// Squared distances between the exemplar columns of `d` (d×K) and the
/// data rows of `x` (n×d), laid out K×n.
pub fn pairwise_sq_distances(x: &Matrix, d: &Matrix) -> Result<Matrix> {
    check_distance_shapes(x, d)?;
    let dt = d.transpose();
    let mut out = Matrix::zeros(dt.rows(), x.rows());
    for k in 0..dt.rows() {
        let ex = dt.row(k);
        for i in 0..x.rows() {
            out.set(k, i, sq_dist(ex, x.row(i)));
        }
    }
    Ok(out)
}

/// K×n distance matrix under the chosen metric.
pub fn pairwise_distances(x: &Matrix, d: &Matrix, metric: Distance) -> Result<Matrix> {
    let mut out = pairwise_sq_distances(x, d)?;
    if metric != Distance::SqEuclidean {
        out.as_mut_slice().iter_mut().for_each(|v| *v = metric.from_sq(*v));
    }
    Ok(out)
}

/// In-place max-shifted softmax of a slice.
pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = libm::exp(*v - max);
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}

/// Column-wise softmax of a c×K logit matrix.
pub fn softmax_columns(z: &Matrix) -> Result<Matrix> {
    z.ensure_finite("softmax_columns input")?;
    let mut t = z.transpose();
    for k in 0..t.rows() {
        softmax_in_place(t.row_mut(k));
    }
    Ok(t.transpose())
}

/// `p log p` with the `0 log 0 = 0` convention and a clamped logarithm.
#[inline]
pub fn xlogx(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * libm::log(p.max(LOG_EPS))
    }
}

/// Clamped natural logarithm for computed probabilities.
#[inline]
pub fn clamped_ln(p: f64) -> f64 {
    libm::log(p.max(LOG_EPS))
}

/// `Σ pᵢ log pᵢ` (natural log). Zero entries contribute nothing.
pub fn neg_entropy(p: &[f64]) -> Result<f64> {
    if let Some(bad) = p.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain(alloc::format!(
            "neg_entropy requires nonnegative finite entries, got {bad}"
        )));
    }
    Ok(p.iter().map(|&v| xlogx(v)).sum())
}

/// Central-difference gradient of a scalar function of a matrix.
pub fn finite_diff_gradient<F>(mut f: F, at: &Matrix, h: f64) -> Result<Matrix>
where
    F: FnMut(&Matrix) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::Config(alloc::format!(
            "finite-difference step must be > 0, got {h}"
        )));
    }
    let mut probe = at.clone();
    let mut grad = Matrix::zeros(at.rows(), at.cols());
    for idx in 0..at.as_slice().len() {
        let orig = probe.as_slice()[idx];
        probe.as_mut_slice()[idx] = orig + h;
        let plus = f(&probe)?;
        probe.as_mut_slice()[idx] = orig - h;
        let minus = f(&probe)?;
        probe.as_mut_slice()[idx] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite("finite_diff_gradient evaluation"));
        }
        grad.as_mut_slice()[idx] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// Relative error `‖a − b‖ / max(‖a‖, ‖b‖, floor)` used by gradient checks.
pub fn relative_error(a: &Matrix, b: &Matrix, floor: f64) -> f64 {
    let mut diff = a.clone();
    diff.axpy(-1.0, b);
    diff.frobenius_norm() / a.frobenius_norm().max(b.frobenius_norm()).max(floor)
}
