//! Keypoint extraction as clustering: k-medoids and kernel density
//! clustering (KDC) compiled to QUBOs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{build_distance_matrix, build_gram_matrix, DistanceMatrix, Kernel, KernelError, KernelMatrix};
use crate::qubo::{QuboError, QuboProblem};
use crate::solvers::{solve, BitstringSample, SolverConfig, SolverError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusteringError {
    #[error("k = {k} exceeds the number of points ({n})")]
    KTooLarge { k: usize, n: usize },
    #[error("k must be positive")]
    ZeroK,
    #[error("kernel matrix must be square and symmetric")]
    NotSymmetric,
    #[error("invalid multiplier: {0}")]
    InvalidMultiplier(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Number of centers and the Lagrange multipliers for both formulations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringSpec {
    pub k: usize,
    /// k-medoids spread weight.
    pub alpha: f64,
    /// k-medoids centrality weight.
    pub beta: f64,
    /// k-medoids cardinality penalty.
    pub gamma: f64,
    /// KDC cardinality penalty.
    pub lambda: f64,
}

impl ClusteringSpec {
    /// Balanced multipliers for `n` points: `α = 1/k`, `β = 1/n`,
    /// `γ = 1/k`, `λ = 1/k²`.
    pub fn balanced(k: usize, n: usize) -> Self {
        let kf = k as f64;
        Self {
            k,
            alpha: 1.0 / kf,
            beta: 1.0 / n as f64,
            gamma: 1.0 / kf,
            lambda: 1.0 / (kf * kf),
        }
    }

    fn validate(&self, n: usize) -> Result<(), ClusteringError> {
        if self.k == 0 {
            return Err(ClusteringError::ZeroK);
        }
        if self.k > n {
            return Err(ClusteringError::KTooLarge { k: self.k, n });
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma), ("lambda", self.lambda)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ClusteringError::InvalidMultiplier(format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusteringMethod {
    Kmedoids,
    Kdc,
}

impl std::str::FromStr for ClusteringMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kmedoids" | "k-medoids" => Ok(Self::Kmedoids),
            "kdc" => Ok(Self::Kdc),
            other => Err(format!("unknown clustering method {other:?}")),
        }
    }
}

/// k-medoids: `Q = γ𝟙𝟙ᵀ − αD`, `q = βD𝟙 − 2γk𝟙`, offset `γk²`.
///
/// Distances are plain (unsquared) Euclidean. The offset makes the energy
/// equal `−αΣD + βΣ rowsum + γ(|z| − k)²` exactly.
pub fn build_kmedoids_qubo(d: &DistanceMatrix, spec: &ClusteringSpec) -> Result<QuboProblem, ClusteringError> {
    let n = d.n();
    spec.validate(n)?;
    let k = spec.k as f64;
    let mut quad = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            quad[i * n + j] = spec.gamma - spec.alpha * d.get(i, j);
        }
    }
    let linear = (0..n).map(|i| spec.beta * d.row_sum(i) - 2.0 * spec.gamma * k).collect();
    Ok(QuboProblem::from_dense(n, quad, linear, spec.gamma * k * k)?)
}

/// KDC: `Q = 𝒦/k² + λ𝟙𝟙ᵀ`, `q = −2(𝒦𝟙/(kn) + λk𝟙)`, offset `λk²`, with
/// `n` the number of points.
pub fn build_kdc_qubo(kernel: &KernelMatrix, spec: &ClusteringSpec) -> Result<QuboProblem, ClusteringError> {
    if kernel.rows() != kernel.cols() || !kernel.is_symmetric() {
        return Err(ClusteringError::NotSymmetric);
    }
    let n = kernel.rows();
    spec.validate(n)?;
    let k = spec.k as f64;
    let nf = n as f64;
    let mut quad = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            quad[i * n + j] = kernel.get(i, j) / (k * k) + spec.lambda;
        }
    }
    let linear = (0..n)
        .map(|i| -2.0 * (kernel.row_sum(i) / (k * nf) + spec.lambda * k))
        .collect();
    Ok(QuboProblem::from_dense(n, quad, linear, spec.lambda * k * k)?)
}

/// Indices of set bits, ascending.
pub fn decode_selection(sample: &BitstringSample) -> Vec<usize> {
    sample
        .bits
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == 1)
        .map(|(i, _)| i)
        .collect()
}

/// Forces exactly `k` set bits by greedy single flips: while too many, clear
/// the bit whose removal lowers the energy most; while too few, set the bit
/// whose addition raises it least. Ties go to the lowest index. Returns
/// whether anything changed.
pub fn repair_cardinality(problem: &QuboProblem, bits: &mut [u8], k: usize) -> bool {
    let mut field = problem.local_field(bits);
    let mut changed = false;
    loop {
        let ones = bits.iter().filter(|&&b| b == 1).count();
        let want = match ones.cmp(&k) {
            std::cmp::Ordering::Equal => return changed,
            std::cmp::Ordering::Greater => 1u8,
            std::cmp::Ordering::Less => 0u8,
        };
        let j = (0..bits.len())
            .filter(|&j| bits[j] == want)
            .map(|j| (j, problem.flip_delta(bits, &field, j)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(j, _)| j)
            .expect("a flippable bit exists while cardinality is off");
        problem.apply_flip(bits, &mut field, j);
        changed = true;
    }
}

/// Result of [`extract_keypoints`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub indices: Vec<usize>,
    /// The solver's best sample had the wrong cardinality and was repaired.
    pub repaired: bool,
    /// Sample after repair; its energy is re-evaluated.
    pub sample: BitstringSample,
}

/// Builds the clustering matrix and QUBO for `points`, solves it and decodes
/// exactly `spec.k` selected indices.
pub fn extract_keypoints(
    points: &[Vec<f64>],
    method: ClusteringMethod,
    kernel: &dyn Kernel,
    spec: &ClusteringSpec,
    solver: &SolverConfig,
) -> Result<Selection, ClusteringError> {
    let problem = build_clustering_qubo(points, method, kernel, spec)?;
    let result = solve(&problem, solver)?;
    let mut sample = result.best;
    let repaired = repair_cardinality(&problem, &mut sample.bits, spec.k);
    if repaired {
        sample.energy = problem.evaluate_energy(&sample.bits)?;
    }
    Ok(Selection {
        indices: decode_selection(&sample),
        repaired,
        sample,
    })
}

/// The QUBO [`extract_keypoints`] solves.
pub fn build_clustering_qubo(
    points: &[Vec<f64>],
    method: ClusteringMethod,
    kernel: &dyn Kernel,
    spec: &ClusteringSpec,
) -> Result<QuboProblem, ClusteringError> {
    spec.validate(points.len())?;
    match method {
        ClusteringMethod::Kmedoids => build_kmedoids_qubo(&build_distance_matrix(points)?, spec),
        ClusteringMethod::Kdc => build_kdc_qubo(&build_gram_matrix(points, kernel)?, spec),
    }
}
