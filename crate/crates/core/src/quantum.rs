//! Statevector simulation of the quantum kernel circuit and the swap-test
//! and incrementer sub-circuits.
//!
//! Qubit `v` is bit `v` of the basis-state index (little-endian), matching
//! the bitstring convention in [`crate::qubo`].

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{Kernel, KernelError};

/// Statevector memory guard.
pub const MAX_QUBITS: usize = 20;

const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("{found} qubits exceeds the statevector limit of {limit}")]
    TooManyQubits { found: usize, limit: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },
    #[error("qubit {0} listed more than once")]
    DuplicateQubit(usize),
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("invalid feature map: {0}")]
    InvalidFeatureMap(String),
    #[error("shot count must be at least 1")]
    ZeroShots,
}

impl From<QuantumError> for KernelError {
    fn from(e: QuantumError) -> Self {
        KernelError::Backend(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|0…0⟩`.
    pub fn zero(num_qubits: usize) -> Result<Self, QuantumError> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self, QuantumError> {
        check_qubits(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(QuantumError::DimensionMismatch {
                expected: dim,
                found: index,
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps amplitudes, which must have power-of-two length and unit norm.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, QuantumError> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(QuantumError::DimensionMismatch {
                expected: len.next_power_of_two().max(1),
                found: len,
            });
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_qubits(num_qubits)?;
        let state = Self {
            num_qubits,
            amplitudes,
        };
        let n2 = state.norm_sqr();
        if (n2 - 1.0).abs() > NORM_TOLERANCE {
            return Err(QuantumError::NotNormalized(n2));
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64, QuantumError> {
        self.same_size(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|self⟩ ⊗ |other⟩` with `other` occupying the high qubits.
    pub fn tensor(&self, high: &Statevector) -> Result<Statevector, QuantumError> {
        check_qubits(self.num_qubits + high.num_qubits)?;
        let mut amplitudes = Vec::with_capacity(self.amplitudes.len() * high.amplitudes.len());
        for h in &high.amplitudes {
            for l in &self.amplitudes {
                amplitudes.push(l * h);
            }
        }
        Ok(Self {
            num_qubits: self.num_qubits + high.num_qubits,
            amplitudes,
        })
    }

    fn same_size(&self, other: &Statevector) -> Result<(), QuantumError> {
        if self.num_qubits != other.num_qubits {
            return Err(QuantumError::DimensionMismatch {
                expected: self.num_qubits,
                found: other.num_qubits,
            });
        }
        Ok(())
    }

    fn check_index(&self, q: usize) -> Result<(), QuantumError> {
        if q >= self.num_qubits {
            return Err(QuantumError::QubitOutOfRange {
                index: q,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    pub fn apply_h(&mut self, q: usize) -> Result<(), QuantumError> {
        self.check_index(q)?;
        let mask = 1usize << q;
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let a = self.amplitudes[i];
                let b = self.amplitudes[i | mask];
                self.amplitudes[i] = (a + b) * FRAC_1_SQRT_2;
                self.amplitudes[i | mask] = (a - b) * FRAC_1_SQRT_2;
            }
        }
        Ok(())
    }

    pub fn apply_h_all(&mut self) {
        for q in 0..self.num_qubits {
            self.apply_h(q).expect("index in range");
        }
    }

    pub fn apply_x(&mut self, q: usize) -> Result<(), QuantumError> {
        self.apply_mcx(&[], q)
    }

    /// X on `target` when every control `(qubit, value)` reads `value`.
    /// `value = false` is a negated (open) control.
    pub fn apply_mcx(&mut self, controls: &[(usize, bool)], target: usize) -> Result<(), QuantumError> {
        self.check_index(target)?;
        let mut care = 0usize;
        let mut want = 0usize;
        for &(c, v) in controls {
            self.check_index(c)?;
            if c == target || care & (1 << c) != 0 {
                return Err(QuantumError::DuplicateQubit(c));
            }
            care |= 1 << c;
            if v {
                want |= 1 << c;
            }
        }
        let t = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & t == 0 && i & care == want {
                self.amplitudes.swap(i, i | t);
            }
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<(), QuantumError> {
        self.apply_mcx(&[(control, true)], target)
    }

    /// Fredkin gate: swap `a` and `b` when `control` is `|1⟩`.
    pub fn apply_cswap(&mut self, control: usize, a: usize, b: usize) -> Result<(), QuantumError> {
        for q in [control, a, b] {
            self.check_index(q)?;
        }
        if control == a || control == b || a == b {
            return Err(QuantumError::DuplicateQubit(if a == b { a } else { control }));
        }
        let (c, ma, mb) = (1usize << control, 1usize << a, 1usize << b);
        for i in 0..self.amplitudes.len() {
            // visit each swapped pair once, from the side with a=1, b=0
            if i & c != 0 && i & ma != 0 && i & mb == 0 {
                let j = (i & !ma) | mb;
                self.amplitudes.swap(i, j);
            }
        }
        Ok(())
    }

    /// Multiplies amplitude `b` by `exp(−i·sign·θ(b))`.
    fn apply_diagonal_phase(&mut self, phase: impl Fn(usize) -> f64, sign: f64) {
        for (b, amp) in self.amplitudes.iter_mut().enumerate() {
            *amp *= Complex64::from_polar(1.0, -sign * phase(b));
        }
    }

    fn probability_of_qubit_zero(&self, q: usize) -> f64 {
        let mask = 1usize << q;
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

fn check_qubits(n: usize) -> Result<(), QuantumError> {
    if n > MAX_QUBITS {
        return Err(QuantumError::TooManyQubits {
            found: n,
            limit: MAX_QUBITS,
        });
    }
    Ok(())
}

/// Per-qubit feature function `φ_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingleFeature {
    /// `φ_i(x) = x_i`
    Linear,
    Zero,
}

/// Pair feature function `φ_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairFeature {
    /// `φ_ij(x) = (π − x_i)(π − x_j)`
    PiShifted,
    /// `φ_ij(x) = x_i·x_j`
    Product,
    Zero,
}

/// Diagonal ZZ-type feature map restricted to singletons and pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureMapSpec {
    pub num_qubits: usize,
    /// Qubit pairs carrying a `σ_z σ_z` term. Every qubit always carries a
    /// singleton `σ_z` term.
    pub pairs: Vec<(usize, usize)>,
    pub single: SingleFeature,
    pub pair: PairFeature,
    /// Inputs are multiplied by this before any feature function.
    pub input_scale: f64,
}

impl Default for FeatureMapSpec {
    fn default() -> Self {
        Self::all_pairs(5)
    }
}

impl FeatureMapSpec {
    /// Default feature functions with every qubit pair coupled.
    pub fn all_pairs(num_qubits: usize) -> Self {
        let pairs = (0..num_qubits)
            .flat_map(|i| ((i + 1)..num_qubits).map(move |j| (i, j)))
            .collect();
        Self {
            num_qubits,
            pairs,
            single: SingleFeature::Linear,
            pair: PairFeature::PiShifted,
            input_scale: 1.0,
        }
    }

    pub fn with_scale(mut self, input_scale: f64) -> Self {
        self.input_scale = input_scale;
        self
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        if self.num_qubits == 0 {
            return Err(QuantumError::InvalidFeatureMap("num_qubits must be positive".into()));
        }
        check_qubits(self.num_qubits)?;
        if !(self.input_scale >= 0.0 && self.input_scale.is_finite()) {
            return Err(QuantumError::InvalidFeatureMap(format!(
                "input_scale must be a non-negative finite number, got {}",
                self.input_scale
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(a, b) in &self.pairs {
            if a >= self.num_qubits || b >= self.num_qubits {
                return Err(QuantumError::QubitOutOfRange {
                    index: a.max(b),
                    num_qubits: self.num_qubits,
                });
            }
            if a == b {
                return Err(QuantumError::InvalidFeatureMap(format!(
                    "pair ({a}, {b}) is not a two-qubit term"
                )));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(QuantumError::InvalidFeatureMap(format!("duplicate pair ({a}, {b})")));
            }
        }
        Ok(())
    }

    /// Singleton and pair angles for the scaled input.
    fn angles(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>), QuantumError> {
        if x.len() != self.num_qubits {
            return Err(QuantumError::DimensionMismatch {
                expected: self.num_qubits,
                found: x.len(),
            });
        }
        let xs: Vec<f64> = x.iter().map(|v| v * self.input_scale).collect();
        let singles = xs
            .iter()
            .map(|&v| match self.single {
                SingleFeature::Linear => v,
                SingleFeature::Zero => 0.0,
            })
            .collect();
        let pairs = self
            .pairs
            .iter()
            .map(|&(i, j)| match self.pair {
                PairFeature::PiShifted => (PI - xs[i]) * (PI - xs[j]),
                PairFeature::Product => xs[i] * xs[j],
                PairFeature::Zero => 0.0,
            })
            .collect();
        Ok((singles, pairs))
    }
}

#[inline]
fn z_eigen(b: usize, q: usize) -> f64 {
    if b >> q & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Applies `U_φ(x)` (or `U_φ(x)†` when `conjugate`), the diagonal operator
/// `exp(−i Σ_S φ_S(x) Π_{v∈S} σ_z^v)`.
pub fn apply_feature_unitary(
    state: &mut Statevector,
    x: &[f64],
    spec: &FeatureMapSpec,
    conjugate: bool,
) -> Result<(), QuantumError> {
    spec.validate()?;
    if state.num_qubits != spec.num_qubits {
        return Err(QuantumError::DimensionMismatch {
            expected: spec.num_qubits,
            found: state.num_qubits,
        });
    }
    let (singles, pair_angles) = spec.angles(x)?;
    let theta = |b: usize| {
        let mut t = 0.0;
        for (q, a) in singles.iter().enumerate() {
            t += a * z_eigen(b, q);
        }
        for (&(i, j), a) in spec.pairs.iter().zip(&pair_angles) {
            t += a * z_eigen(b, i) * z_eigen(b, j);
        }
        t
    };
    state.apply_diagonal_phase(theta, if conjugate { -1.0 } else { 1.0 });
    Ok(())
}

/// `𝒰_φ(x) = U_φ(x) H^⊗n U_φ(x) H^⊗n` applied to `state`.
fn apply_encoding(state: &mut Statevector, x: &[f64], spec: &FeatureMapSpec) -> Result<(), QuantumError> {
    state.apply_h_all();
    apply_feature_unitary(state, x, spec, false)?;
    state.apply_h_all();
    apply_feature_unitary(state, x, spec, false)
}

/// `𝒰_φ(y)†`, the reverse sequence with conjugated phases.
fn apply_encoding_adjoint(state: &mut Statevector, y: &[f64], spec: &FeatureMapSpec) -> Result<(), QuantumError> {
    apply_feature_unitary(state, y, spec, true)?;
    state.apply_h_all();
    apply_feature_unitary(state, y, spec, true)?;
    state.apply_h_all();
    Ok(())
}

/// State after the full kernel circuit, `𝒰_φ(y)† 𝒰_φ(x) |0ⁿ⟩`.
pub fn kernel_circuit_state(x: &[f64], y: &[f64], spec: &FeatureMapSpec) -> Result<Statevector, QuantumError> {
    spec.validate()?;
    let mut state = Statevector::zero(spec.num_qubits)?;
    apply_encoding(&mut state, x, spec)?;
    apply_encoding_adjoint(&mut state, y, spec)?;
    Ok(state)
}

/// How a kernel value is read out of the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// `|⟨0ⁿ|ψ⟩|²` from the amplitudes.
    Exact,
    /// Fraction of all-zero outcomes in `shots` seeded samples.
    Shots { shots: u64, seed: u64 },
}

/// `|⟨0ⁿ| 𝒰_φ(y)† 𝒰_φ(x) |0ⁿ⟩|²`.
pub fn quantum_kernel_value(
    x: &[f64],
    y: &[f64],
    spec: &FeatureMapSpec,
    readout: Readout,
) -> Result<f64, QuantumError> {
    let state = kernel_circuit_state(x, y, spec)?;
    match readout {
        // rounding in the Hadamard amplitudes can push a probability past 1
        Readout::Exact => Ok(state.amplitudes[0].norm_sqr().min(1.0)),
        Readout::Shots { shots, seed } => {
            if shots == 0 {
                return Err(QuantumError::ZeroShots);
            }
            let counts = sample_counts(&state, shots, seed);
            Ok(counts[0] as f64 / shots as f64)
        }
    }
}

/// Outcome histogram of `shots` inverse-CDF samples from `|ψ|²`.
pub fn sample_counts(state: &Statevector, shots: u64, seed: u64) -> Vec<u64> {
    let mut cdf = Vec::with_capacity(state.amplitudes.len());
    let mut acc = 0.0;
    for a in &state.amplitudes {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let total = acc;
    let mut counts = vec![0u64; cdf.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..shots {
        let u = rng.gen::<f64>() * total;
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        counts[idx] += 1;
    }
    counts
}

/// Quantum kernel as a [`Kernel`] handle for the matrix builders.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumKernel {
    pub spec: FeatureMapSpec,
    pub readout: Readout,
}

impl QuantumKernel {
    pub fn exact(spec: FeatureMapSpec) -> Result<Self, QuantumError> {
        spec.validate()?;
        Ok(Self {
            spec,
            readout: Readout::Exact,
        })
    }

    pub fn sampled(spec: FeatureMapSpec, shots: u64, seed: u64) -> Result<Self, QuantumError> {
        spec.validate()?;
        if shots == 0 {
            return Err(QuantumError::ZeroShots);
        }
        Ok(Self {
            spec,
            readout: Readout::Shots { shots, seed },
        })
    }
}

impl Kernel for QuantumKernel {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
        let readout = match self.readout {
            Readout::Exact => Readout::Exact,
            // decorrelate shot noise across cells while staying reproducible
            Readout::Shots { shots, seed } => Readout::Shots {
                shots,
                seed: seed ^ pair_seed(x, y),
            },
        };
        Ok(quantum_kernel_value(x, y, &self.spec, readout)?)
    }

    fn is_symmetric(&self) -> bool {
        matches!(self.readout, Readout::Exact)
    }

    fn name(&self) -> &str {
        "quantum"
    }
}

fn pair_seed(x: &[f64], y: &[f64]) -> u64 {
    // FNV-1a over the bit patterns of both inputs
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in x.iter().chain(std::iter::once(&f64::NAN)).chain(y) {
        for byte in v.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Ancilla-zero probability of the swap test on `x ⊗ y`, simulated on the
/// full `1 + 2n` qubit register: H on the ancilla, controlled swaps of each
/// qubit pair, H again.
pub fn swap_test_probability(x_state: &Statevector, y_state: &Statevector) -> Result<f64, QuantumError> {
    x_state.same_size(y_state)?;
    let n = x_state.num_qubits;
    check_qubits(1 + 2 * n)?;
    let ancilla = Statevector::zero(1)?;
    let mut state = ancilla.tensor(x_state)?.tensor(y_state)?;
    state.apply_h(0)?;
    for k in 0..n {
        state.apply_cswap(0, 1 + k, 1 + n + k)?;
    }
    state.apply_h(0)?;
    Ok(state.probability_of_qubit_zero(0))
}

/// Adds one (mod `2^n`) to the integer held little-endian in
/// `register_qubits`, via the cascaded CNOT incrementer with a `|1⟩`
/// carry ancilla that is restored afterwards.
pub fn increment_register(state: &Statevector, register_qubits: &[usize]) -> Result<Statevector, QuantumError> {
    let mut seen = std::collections::BTreeSet::new();
    for &q in register_qubits {
        state.check_index(q)?;
        if !seen.insert(q) {
            return Err(QuantumError::DuplicateQubit(q));
        }
    }
    let n = register_qubits.len();
    if n == 0 {
        return Ok(state.clone());
    }
    let anc = state.num_qubits;
    let mut work = state.tensor(&Statevector::basis(1, 1)?)?;
    let reg = register_qubits;
    for k in 0..n {
        // flip bit k while the carry is live
        work.apply_cnot(anc, reg[k])?;
        if k + 1 < n {
            // carry stops once bit k became 1, provided it reached bit k
            let mut controls: Vec<(usize, bool)> = reg[..k].iter().map(|&q| (q, false)).collect();
            controls.push((reg[k], true));
            work.apply_mcx(&controls, anc)?;
        }
    }
    // uncompute: carry survived iff every lower bit wrapped to 0
    let controls: Vec<(usize, bool)> = reg[..n - 1].iter().map(|&q| (q, false)).collect();
    work.apply_mcx(&controls, anc)?;
    work.apply_x(anc)?;

    let half = 1usize << anc;
    debug_assert!(work.amplitudes[..half].iter().all(|a| a.norm_sqr() < 1e-24));
    Ok(Statevector {
        num_qubits: state.num_qubits,
        amplitudes: work.amplitudes[half..].to_vec(),
    })
}
