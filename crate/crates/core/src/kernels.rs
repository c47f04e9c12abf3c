//! Kernel functions plus dense distance and kernel matrices.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("zero-norm vector has no direction")]
    ZeroVector,
    #[error("invalid kernel parameter: {0}")]
    InvalidParameter(String),
    #[error("empty point set")]
    Empty,
    #[error("kernel failed at ({i}, {j}): {source}")]
    At {
        i: usize,
        j: usize,
        #[source]
        source: Box<KernelError>,
    },
    #[error("{0}")]
    Backend(String),
}

/// A similarity function usable by [`build_kernel_matrix`].
pub trait Kernel: Send + Sync {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, KernelError>;

    /// Whether `eval(x, y) == eval(y, x)` for all inputs.
    fn is_symmetric(&self) -> bool {
        true
    }

    fn name(&self) -> &str;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    pub gamma: f64,
}

impl GaussianKernel {
    pub fn new(gamma: f64) -> Result<Self, KernelError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(KernelError::InvalidParameter(format!(
                "gaussian gamma must be positive, got {gamma}"
            )));
        }
        Ok(Self { gamma })
    }
}

impl Default for GaussianKernel {
    fn default() -> Self {
        Self { gamma: 1.0 }
    }
}

impl Kernel for GaussianKernel {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
        gaussian_kernel(x, y, self.gamma)
    }

    fn name(&self) -> &str {
        "gaussian"
    }
}

/// Cosine similarity with negative values clamped to zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NormalizedInnerProduct;

impl Kernel for NormalizedInnerProduct {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
        normalized_inner_product_kernel(x, y)
    }

    fn name(&self) -> &str {
        "cosine"
    }
}

/// `exp(−γ‖x − y‖²)`.
pub fn gaussian_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64, KernelError> {
    if x.len() != y.len() {
        return Err(KernelError::DimensionMismatch(x.len(), y.len()));
    }
    if !(gamma > 0.0) {
        return Err(KernelError::InvalidParameter(format!(
            "gaussian gamma must be positive, got {gamma}"
        )));
    }
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((-gamma * sq).exp())
}

/// `⟨x, y⟩ / (‖x‖‖y‖)`, clamped into `[0, 1]`.
pub fn normalized_inner_product_kernel(x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
    if x.len() != y.len() {
        return Err(KernelError::DimensionMismatch(x.len(), y.len()));
    }
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(KernelError::ZeroVector);
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok((dot / (nx * ny)).clamp(0.0, 1.0))
}

/// Symmetric pairwise Euclidean distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.entries[i * self.n..(i + 1) * self.n].iter().sum()
    }

    /// Every entry multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        matrix_csv(&self.entries, self.n, self.n)
    }
}

/// Dense `n × m` matrix of kernel values.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    symmetric: bool,
}

impl KernelMatrix {
    /// Wraps precomputed values. `symmetric` is only honoured when the
    /// values actually are symmetric.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self, KernelError> {
        if entries.len() != rows * cols {
            return Err(KernelError::DimensionMismatch(entries.len(), rows * cols));
        }
        let symmetric = rows == cols
            && (0..rows).all(|i| (0..i).all(|j| entries[i * cols + j] == entries[j * cols + i]));
        Ok(Self {
            rows,
            cols,
            entries,
            symmetric,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.entries[i * self.cols..(i + 1) * self.cols].iter().sum()
    }

    pub fn to_csv(&self) -> String {
        matrix_csv(&self.entries, self.rows, self.cols)
    }

    /// Parses the row-major CSV written by [`KernelMatrix::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, KernelError> {
        let mut rows = 0;
        let mut cols = None;
        let mut entries = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let row: Vec<f64> = line
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| KernelError::Backend(format!("bad CSV value {v:?}: {e}")))
                })
                .collect::<Result<_, _>>()?;
            match cols {
                None => cols = Some(row.len()),
                Some(c) if c != row.len() => return Err(KernelError::DimensionMismatch(c, row.len())),
                _ => {}
            }
            entries.extend(row);
            rows += 1;
        }
        Self::from_entries(rows, cols.unwrap_or(0), entries)
    }
}

fn matrix_csv(entries: &[f64], rows: usize, cols: usize) -> String {
    let mut out = String::with_capacity(rows * cols * 8);
    for i in 0..rows {
        for j in 0..cols {
            if j > 0 {
                out.push(',');
            }
            // `{}` on f64 prints the shortest representation that round-trips.
            let _ = write!(out, "{}", entries[i * cols + j]);
        }
        out.push('\n');
    }
    out
}

fn check_dims(points: &[Vec<f64>]) -> Result<usize, KernelError> {
    let d = points.first().ok_or(KernelError::Empty)?.len();
    for p in points {
        if p.len() != d {
            return Err(KernelError::DimensionMismatch(d, p.len()));
        }
    }
    Ok(d)
}

pub fn build_distance_matrix(points: &[Vec<f64>]) -> Result<DistanceMatrix, KernelError> {
    check_dims(points)?;
    let n = points.len();
    let mut entries = vec![0.0; n * n];
    entries.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j {
                *cell = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
            }
        }
    });
    Ok(DistanceMatrix { n, entries })
}

/// `entries[i][j] = kernel(points_a[i], points_b[j])`.
///
/// When both lists hold the same points and the kernel is symmetric only
/// the upper triangle is evaluated and the result is flagged symmetric.
pub fn build_kernel_matrix(
    points_a: &[Vec<f64>],
    points_b: &[Vec<f64>],
    kernel: &dyn Kernel,
) -> Result<KernelMatrix, KernelError> {
    let da = check_dims(points_a)?;
    let db = check_dims(points_b)?;
    if da != db {
        return Err(KernelError::DimensionMismatch(da, db));
    }
    let (rows, cols) = (points_a.len(), points_b.len());
    let same = std::ptr::eq(points_a, points_b) || points_a == points_b;
    let symmetric = same && kernel.is_symmetric();
    let at = |i: usize, j: usize| {
        kernel
            .eval(&points_a[i], &points_b[j])
            .map_err(|e| KernelError::At {
                i,
                j,
                source: Box::new(e),
            })
    };
    let row_values: Vec<Vec<f64>> = (0..rows)
        .into_par_iter()
        .map(|i| {
            let start = if symmetric { i } else { 0 };
            (start..cols).map(|j| at(i, j)).collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let mut entries = vec![0.0; rows * cols];
    for (i, vals) in row_values.into_iter().enumerate() {
        let start = if symmetric { i } else { 0 };
        for (off, v) in vals.into_iter().enumerate() {
            let j = start + off;
            entries[i * cols + j] = v;
            if symmetric {
                entries[j * cols + i] = v;
            }
        }
    }
    Ok(KernelMatrix {
        rows,
        cols,
        entries,
        symmetric,
    })
}

/// Gram matrix of one point set.
pub fn build_gram_matrix(points: &[Vec<f64>], kernel: &dyn Kernel) -> Result<KernelMatrix, KernelError> {
    build_kernel_matrix(points, points, kernel)
}
