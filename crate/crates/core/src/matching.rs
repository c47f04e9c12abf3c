//! Keypoint matching as a QUBO over match variables plus binary slack
//! registers.
//!
//! Variable layout for `n` left and `m` right keypoints:
//!
//! * `v_{ij}` at index `i·m + j` (row-major, `0 ≤ i < n`, `0 ≤ j < m`),
//! * slack bit `t` of left keypoint `i` at `n·m + i·l + t`, weight `2^t`,
//!
//! with `l = ⌈log₂(k_max + 1)⌉`, for `n(m + l)` variables in total. The
//! projections onto the match block and onto each slack register are pure
//! index arithmetic over this layout.
//!
//! The energy is the Lagrangian
//!
//! ```text
//! Σ v_ij (1 − α − K_ij)
//!   + β Σ_j Σ_{i ≠ i'} v_ij v_i'j
//!   + γ Σ_i (Σ_j v_ij + Σ_t 2^t s_it − k_max)²
//! ```
//!
//! Slack registers can hold values up to `2^l − 1`, which exceeds `k_max`
//! unless `k_max + 1` is a power of two. Over-range slack values only ever
//! add positive penalty, so the minimizer is unaffected.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{build_kernel_matrix, Kernel, KernelError, KernelMatrix};
use crate::qubo::{QuboError, QuboProblem};
use crate::solvers::{solve, BitstringSample, SolverConfig, SolverError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchingError {
    #[error("kernel value K[{i}][{j}] = {value} lies outside [0, 1]; the matching QUBO assumes 0 ≤ K ≤ 1")]
    KernelOutOfRange { i: usize, j: usize, value: f64 },
    #[error("invalid matching spec: {0}")]
    InvalidSpec(String),
    #[error("sample has {found} bits, layout needs {expected}")]
    SampleLength { expected: usize, found: usize },
    #[error("descriptor list is empty")]
    EmptyDescriptors,
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingSpec {
    /// Most matches any left keypoint may take.
    pub k_max: usize,
    /// Trade-off in `[0, 1]`: larger values favour more matches.
    pub alpha: f64,
    /// Duplicate-target penalty.
    pub beta: f64,
    /// Capacity (slack equality) penalty.
    pub gamma: f64,
}

impl Default for MatchingSpec {
    fn default() -> Self {
        Self {
            k_max: 1,
            alpha: 0.2,
            beta: 1.0,
            gamma: 1.0,
        }
    }
}

impl MatchingSpec {
    /// Slack bits per left keypoint, `⌈log₂(k_max + 1)⌉`.
    pub fn slack_bits(&self) -> usize {
        (usize::BITS - self.k_max.leading_zeros()) as usize
    }

    /// QUBO dimension `n(m + l)`.
    pub fn dim(&self, n: usize, m: usize) -> usize {
        n * (m + self.slack_bits())
    }

    pub fn validate(&self) -> Result<(), MatchingError> {
        if self.k_max == 0 {
            return Err(MatchingError::InvalidSpec("k_max must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(MatchingError::InvalidSpec(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        for (name, v) in [("beta", self.beta), ("gamma", self.gamma)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(MatchingError::InvalidSpec(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Index arithmetic for the variable layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchLayout {
    pub n: usize,
    pub m: usize,
    pub l: usize,
}

impl MatchLayout {
    pub fn new(n: usize, m: usize, spec: &MatchingSpec) -> Self {
        Self { n, m, l: spec.slack_bits() }
    }

    pub fn dim(&self) -> usize {
        self.n * (self.m + self.l)
    }

    #[inline]
    pub fn pair(&self, i: usize, j: usize) -> usize {
        i * self.m + j
    }

    #[inline]
    pub fn slack(&self, i: usize, t: usize) -> usize {
        self.n * self.m + i * self.l + t
    }

    /// Integer held in slack register `i`.
    pub fn slack_value(&self, bits: &[u8], i: usize) -> usize {
        (0..self.l).map(|t| (bits[self.slack(i, t)] as usize) << t).sum()
    }
}

pub fn build_matching_qubo(kernel: &KernelMatrix, spec: &MatchingSpec) -> Result<QuboProblem, MatchingError> {
    spec.validate()?;
    let (n, m) = (kernel.rows(), kernel.cols());
    if n == 0 || m == 0 {
        return Err(MatchingError::EmptyDescriptors);
    }
    for i in 0..n {
        for j in 0..m {
            let value = kernel.get(i, j);
            if !(0.0..=1.0).contains(&value) {
                return Err(MatchingError::KernelOutOfRange { i, j, value });
            }
        }
    }
    let layout = MatchLayout::new(n, m, spec);
    let dim = layout.dim();
    let mut quad = vec![0.0; dim * dim];
    let mut linear = vec![0.0; dim];
    let k = spec.k_max as f64;

    for i in 0..n {
        for j in 0..m {
            linear[layout.pair(i, j)] += 1.0 - spec.alpha - kernel.get(i, j);
        }
    }

    // β: two different left keypoints sharing a right keypoint
    for j in 0..m {
        for i1 in 0..n {
            for i2 in 0..n {
                if i1 != i2 {
                    quad[layout.pair(i1, j) * dim + layout.pair(i2, j)] += spec.beta;
                }
            }
        }
    }

    // γ: (Σ_a c_a x_a − k)² per left keypoint, c_a = 1 on matches and 2^t on slack
    for i in 0..n {
        let terms: Vec<(usize, f64)> = (0..m)
            .map(|j| (layout.pair(i, j), 1.0))
            .chain((0..layout.l).map(|t| (layout.slack(i, t), (1u64 << t) as f64)))
            .collect();
        for &(a, ca) in &terms {
            linear[a] -= 2.0 * spec.gamma * k * ca;
            for &(b, cb) in &terms {
                quad[a * dim + b] += spec.gamma * ca * cb;
            }
        }
    }

    let offset = spec.gamma * n as f64 * k * k;
    Ok(QuboProblem::from_dense(dim, quad, linear, offset)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub i: usize,
    pub j: usize,
    pub kernel: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatchSet {
    pub pairs: Vec<MatchPair>,
}

impl MatchSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.pairs.iter().any(|p| p.i == i && p.j == j)
    }

    pub fn min_kernel(&self) -> Option<f64> {
        self.pairs.iter().map(|p| p.kernel).reduce(f64::min)
    }
}

/// Constraint violations found while decoding.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Right keypoints claimed by more than one left keypoint.
    pub duplicate_targets: Vec<usize>,
    /// Left keypoints with more than `k_max` matches.
    pub over_capacity: Vec<usize>,
    /// Left keypoints whose match count plus slack value differs from `k_max`.
    pub slack_mismatch: Vec<usize>,
}

impl FeasibilityReport {
    /// No duplicate targets and no capacity overflow.
    pub fn constraints_hold(&self) -> bool {
        self.duplicate_targets.is_empty() && self.over_capacity.is_empty()
    }

    /// Constraints hold and every slack register is consistent.
    pub fn is_feasible(&self) -> bool {
        self.constraints_hold() && self.slack_mismatch.is_empty()
    }
}

/// Reads the match block of `sample`. Infeasibility is reported, not
/// repaired.
pub fn decode_matching(
    sample: &BitstringSample,
    kernel: &KernelMatrix,
    spec: &MatchingSpec,
) -> Result<(MatchSet, FeasibilityReport), MatchingError> {
    let layout = MatchLayout::new(kernel.rows(), kernel.cols(), spec);
    decode_with_layout(&sample.bits, layout, spec, |i, j| kernel.get(i, j))
}

/// [`decode_matching`] when no kernel values are at hand (pairs carry 0).
pub fn decode_matching_shape(
    sample: &BitstringSample,
    n: usize,
    m: usize,
    spec: &MatchingSpec,
) -> Result<(MatchSet, FeasibilityReport), MatchingError> {
    decode_with_layout(&sample.bits, MatchLayout::new(n, m, spec), spec, |_, _| 0.0)
}

fn decode_with_layout(
    bits: &[u8],
    layout: MatchLayout,
    spec: &MatchingSpec,
    value: impl Fn(usize, usize) -> f64,
) -> Result<(MatchSet, FeasibilityReport), MatchingError> {
    if bits.len() != layout.dim() {
        return Err(MatchingError::SampleLength {
            expected: layout.dim(),
            found: bits.len(),
        });
    }
    let mut pairs = Vec::new();
    let mut per_target: BTreeMap<usize, usize> = BTreeMap::new();
    let mut report = FeasibilityReport::default();
    for i in 0..layout.n {
        let mut count = 0;
        for j in 0..layout.m {
            if bits[layout.pair(i, j)] == 1 {
                pairs.push(MatchPair { i, j, kernel: value(i, j) });
                *per_target.entry(j).or_default() += 1;
                count += 1;
            }
        }
        if count > spec.k_max {
            report.over_capacity.push(i);
        }
        if count + layout.slack_value(bits, i) != spec.k_max {
            report.slack_mismatch.push(i);
        }
    }
    report.duplicate_targets = per_target.into_iter().filter(|&(_, c)| c > 1).map(|(j, _)| j).collect();
    Ok((MatchSet { pairs }, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub matches: MatchSet,
    pub report: FeasibilityReport,
    pub sample: BitstringSample,
}

/// Kernel matrix, QUBO, solve, decode.
pub fn match_keypoints(
    descriptors_a: &[Vec<f64>],
    descriptors_b: &[Vec<f64>],
    kernel: &dyn Kernel,
    spec: &MatchingSpec,
    solver: &SolverConfig,
) -> Result<MatchOutcome, MatchingError> {
    if descriptors_a.is_empty() || descriptors_b.is_empty() {
        return Err(MatchingError::EmptyDescriptors);
    }
    let kmat = build_kernel_matrix(descriptors_a, descriptors_b, kernel)?;
    match_with_kernel(&kmat, spec, solver)
}

/// [`match_keypoints`] on a precomputed kernel matrix.
pub fn match_with_kernel(
    kmat: &KernelMatrix,
    spec: &MatchingSpec,
    solver: &SolverConfig,
) -> Result<MatchOutcome, MatchingError> {
    let problem = build_matching_qubo(kmat, spec)?;
    let sample = solve(&problem, solver)?.best;
    let (matches, report) = decode_matching(&sample, kmat, spec)?;
    Ok(MatchOutcome { matches, report, sample })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::NormalizedInnerProduct;
    use crate::qubo::index_to_bits;
    use crate::solvers::{solve_exhaustive, SolverKind};

    fn sample(bits: Vec<u8>) -> BitstringSample {
        BitstringSample { bits, energy: 0.0, shot_index: 0, solver_id: "test".into() }
    }

    fn exhaustive() -> SolverConfig {
        SolverConfig { solver_kind: SolverKind::Exhaustive, ..SolverConfig::default() }
    }

    fn near_identity() -> KernelMatrix {
        KernelMatrix::from_entries(2, 2, vec![0.9, 0.1, 0.1, 0.9]).unwrap()
    }

    #[test]
    fn slack_width_and_dimension() {
        let s = |k_max| MatchingSpec { k_max, ..MatchingSpec::default() };
        assert_eq!(s(1).slack_bits(), 1);
        assert_eq!(s(1).dim(1, 1), 2);
        assert_eq!(s(2).slack_bits(), 2);
        assert_eq!(s(3).slack_bits(), 2);
        assert_eq!(s(4).slack_bits(), 3);
        assert_eq!(s(7).slack_bits(), 3);
        assert_eq!(s(8).slack_bits(), 4);
        for n in 1..5 {
            for m in 1..5 {
                for k in 1..9usize {
                    let l = ((k + 1) as f64).log2().ceil() as usize;
                    assert_eq!(s(k).dim(n, m), n * (m + l));
                    let kmat = KernelMatrix::from_entries(n, m, vec![0.5; n * m]).unwrap();
                    assert_eq!(build_matching_qubo(&kmat, &s(k)).unwrap().dim(), n * (m + l));
                }
            }
        }
    }

    #[test]
    fn near_identity_kernel_matches_diagonal() {
        let spec = MatchingSpec { alpha: 0.5, ..MatchingSpec::default() };
        let p = build_matching_qubo(&near_identity(), &spec).unwrap();
        let best = solve_exhaustive(&p).unwrap().best;
        let (ms, report) = decode_matching(&best, &near_identity(), &spec).unwrap();
        assert!(ms.contains(0, 0) && ms.contains(1, 1));
        assert_eq!(ms.len(), 2);
        assert!(report.is_feasible(), "{report:?}");
    }

    #[test]
    fn zero_alpha_with_mediocre_kernel_matches_nothing() {
        for n in 1..=2 {
            for m in 1..=2 {
                let kmat = KernelMatrix::from_entries(n, m, vec![0.5; n * m]).unwrap();
                let spec = MatchingSpec { alpha: 0.0, ..MatchingSpec::default() };
                let best = solve_exhaustive(&build_matching_qubo(&kmat, &spec).unwrap()).unwrap().best;
                let (ms, _) = decode_matching(&best, &kmat, &spec).unwrap();
                assert!(ms.is_empty());
            }
        }
    }

    #[test]
    fn rejects_out_of_range_kernel() {
        let kmat = KernelMatrix::from_entries(1, 2, vec![0.5, 1.2]).unwrap();
        let err = build_matching_qubo(&kmat, &MatchingSpec::default()).unwrap_err();
        assert_eq!(err, MatchingError::KernelOutOfRange { i: 0, j: 1, value: 1.2 });
        assert!(err.to_string().contains("K ≤ 1"));
        let kmat = KernelMatrix::from_entries(1, 1, vec![-0.1]).unwrap();
        assert!(build_matching_qubo(&kmat, &MatchingSpec::default()).is_err());
    }

    #[test]
    fn rejects_bad_spec() {
        let kmat = near_identity();
        for spec in [
            MatchingSpec { alpha: 1.5, ..MatchingSpec::default() },
            MatchingSpec { alpha: -0.1, ..MatchingSpec::default() },
            MatchingSpec { k_max: 0, ..MatchingSpec::default() },
            MatchingSpec { beta: -1.0, ..MatchingSpec::default() },
        ] {
            assert!(matches!(build_matching_qubo(&kmat, &spec), Err(MatchingError::InvalidSpec(_))));
        }
    }

    #[test]
    fn decode_all_zero() {
        let spec = MatchingSpec::default();
        let (ms, report) = decode_matching_shape(&sample(vec![0; 6]), 2, 2, &spec).unwrap();
        assert!(ms.is_empty());
        assert!(report.duplicate_targets.is_empty());
        assert!(report.constraints_hold());
        assert_eq!(report.slack_mismatch, vec![0, 1]);
        // slack registers holding k_max make it fully feasible
        let (_, report) = decode_matching_shape(&sample(vec![0, 0, 0, 0, 1, 1]), 2, 2, &spec).unwrap();
        assert!(report.is_feasible());
    }

    #[test]
    fn decode_reports_duplicate_target() {
        // v00 = v10 = 1
        let bits = vec![1, 0, 1, 0, 0, 0];
        let (ms, report) = decode_matching_shape(&sample(bits), 2, 2, &MatchingSpec::default()).unwrap();
        assert_eq!(ms.len(), 2);
        assert_eq!(report.duplicate_targets, vec![0]);
        assert!(!report.is_feasible());
    }

    #[test]
    fn decode_reports_over_capacity() {
        let bits = vec![1, 1, 0, 0, 0, 0];
        let (_, report) = decode_matching_shape(&sample(bits), 2, 2, &MatchingSpec::default()).unwrap();
        assert_eq!(report.over_capacity, vec![0]);
    }

    #[test]
    fn decode_checks_length() {
        assert_eq!(
            decode_matching_shape(&sample(vec![0; 5]), 2, 2, &MatchingSpec::default()).unwrap_err(),
            MatchingError::SampleLength { expected: 6, found: 5 }
        );
    }

    #[test]
    fn penalties_vanish_on_feasible_assignments() {
        // α = 0 with K ≡ 1 zeroes the objective, leaving only penalty terms.
        for (n, m, k_max) in [(2, 3, 1), (3, 2, 2), (2, 2, 3)] {
            let spec = MatchingSpec { k_max, alpha: 0.0, beta: 2.0, gamma: 3.0 };
            let kmat = KernelMatrix::from_entries(n, m, vec![1.0; n * m]).unwrap();
            let p = build_matching_qubo(&kmat, &spec).unwrap();
            let layout = MatchLayout::new(n, m, &spec);
            for idx in 0..(1u64 << (n * m)) {
                let v = index_to_bits(idx, n * m);
                let mut bits = v.clone();
                bits.resize(layout.dim(), 0);
                let (_, report) = decode_matching_shape(&sample(bits.clone()), n, m, &spec).unwrap();
                if !report.constraints_hold() {
                    let e = p.evaluate_energy(&bits).unwrap();
                    if !report.duplicate_targets.is_empty() {
                        // slack bits all zero only add γ-penalty, never subtract
                        assert!(e >= spec.beta);
                    }
                    continue;
                }
                for i in 0..n {
                    let count: usize = (0..m).map(|j| v[layout.pair(i, j)] as usize).sum();
                    let slack = k_max - count;
                    for t in 0..layout.l {
                        bits[layout.slack(i, t)] = ((slack >> t) & 1) as u8;
                    }
                }
                assert_eq!(p.evaluate_energy(&bits).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn slack_register_covers_every_count() {
        for k_max in 1..=7usize {
            let spec = MatchingSpec { k_max, ..MatchingSpec::default() };
            let l = spec.slack_bits();
            for count in 0..=k_max {
                let hit = (0..1usize << l).any(|s| count + s == k_max);
                assert!(hit, "k_max={k_max} count={count}");
            }
        }
    }

    #[test]
    fn identical_descriptors_match_identity() {
        let desc = vec![vec![1.0, 0.2, 0.0], vec![0.0, 1.0, 0.3], vec![0.3, 0.0, 1.0]];
        let spec = MatchingSpec { alpha: 0.2, ..MatchingSpec::default() };
        let out = match_keypoints(&desc, &desc, &NormalizedInnerProduct, &spec, &exhaustive()).unwrap();
        assert_eq!(out.matches.len(), 3);
        for i in 0..3 {
            assert!(out.matches.contains(i, i));
        }
        assert!(out.report.is_feasible());
    }

    #[test]
    fn perfect_single_pair_matches() {
        let kmat = KernelMatrix::from_entries(1, 1, vec![1.0]).unwrap();
        let spec = MatchingSpec { alpha: 0.5, ..MatchingSpec::default() };
        let out = match_with_kernel(&kmat, &spec, &exhaustive()).unwrap();
        assert_eq!(out.matches.pairs, vec![MatchPair { i: 0, j: 0, kernel: 1.0 }]);
    }

    #[test]
    fn match_set_json_shape() {
        let ms = MatchSet { pairs: vec![MatchPair { i: 0, j: 2, kernel: 0.75 }] };
        assert_eq!(serde_json::to_string(&ms).unwrap(), r#"[{"i":0,"j":2,"kernel":0.75}]"#);
    }

    #[test]
    fn empty_descriptors_rejected() {
        let d = vec![vec![1.0]];
        assert_eq!(
            match_keypoints(&[], &d, &NormalizedInnerProduct, &MatchingSpec::default(), &exhaustive()).unwrap_err(),
            MatchingError::EmptyDescriptors
        );
    }
}
