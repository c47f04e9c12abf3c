//! QUBO problem representation and energy evaluation.
//!
//! A [`QuboProblem`] encodes `F(z) = zᵀ Q z + ⟨q, z⟩ + offset` over binary
//! vectors `z`. `Q` is stored dense, row-major and symmetric.
//!
//! Bitstrings map to integers little-endian: variable `i` is bit `i` of the
//! index, so `(1, 0)` is `1` and `(0, 1)` is `2`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest dimension [`QuboProblem::hamiltonian_diagonal`] will expand.
pub const MAX_DIAGONAL_DIM: usize = 20;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuboError {
    #[error("dimension mismatch: problem has dim {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("QUBO dimension must be positive")]
    EmptyProblem,
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("matrix is not square: {rows} rows but row {row} has {cols} columns")]
    NotSquare { rows: usize, row: usize, cols: usize },
    #[error("matrix is not symmetric at ({i}, {j}): {a} vs {b}")]
    NotSymmetric { i: usize, j: usize, a: f64, b: f64 },
    #[error("bit {index} has value {value}; expected 0 or 1")]
    NotBinary { index: usize, value: u8 },
    #[error("dimension {dim} exceeds the limit of {limit} for this operation")]
    TooLarge { dim: usize, limit: usize },
}

/// `min zᵀQz + ⟨q,z⟩ + offset` over `z ∈ {0,1}^dim`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuboProblem {
    dim: usize,
    #[serde(rename = "Q", serialize_with = "serialize_rows")]
    quadratic: Vec<f64>,
    #[serde(rename = "q")]
    linear: Vec<f64>,
    offset: f64,
}

impl QuboProblem {
    /// Builds a problem from a flat row-major `dim × dim` matrix. The matrix
    /// is symmetrized as `(Q + Qᵀ)/2`.
    pub fn from_dense(
        dim: usize,
        mut quadratic: Vec<f64>,
        linear: Vec<f64>,
        offset: f64,
    ) -> Result<Self, QuboError> {
        if dim == 0 {
            return Err(QuboError::EmptyProblem);
        }
        if quadratic.len() != dim * dim {
            return Err(QuboError::DimensionMismatch {
                expected: dim * dim,
                found: quadratic.len(),
            });
        }
        if linear.len() != dim {
            return Err(QuboError::DimensionMismatch {
                expected: dim,
                found: linear.len(),
            });
        }
        if quadratic.iter().any(|v| !v.is_finite()) {
            return Err(QuboError::NonFinite("Q"));
        }
        if linear.iter().any(|v| !v.is_finite()) {
            return Err(QuboError::NonFinite("q"));
        }
        if !offset.is_finite() {
            return Err(QuboError::NonFinite("offset"));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (quadratic[i * dim + j] + quadratic[j * dim + i]);
                quadratic[i * dim + j] = avg;
                quadratic[j * dim + i] = avg;
            }
        }
        Ok(Self {
            dim,
            quadratic,
            linear,
            offset,
        })
    }

    /// Builds a problem from nested rows.
    pub fn from_rows(rows: &[Vec<f64>], linear: Vec<f64>, offset: f64) -> Result<Self, QuboError> {
        let dim = rows.len();
        let mut flat = Vec::with_capacity(dim * dim);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(QuboError::NotSquare {
                    rows: dim,
                    row,
                    cols: r.len(),
                });
            }
            flat.extend_from_slice(r);
        }
        Self::from_dense(dim, flat, linear, offset)
    }

    /// All-zero problem, for builders that accumulate terms.
    pub fn zeros(dim: usize) -> Result<Self, QuboError> {
        Self::from_dense(dim, vec![0.0; dim * dim], vec![0.0; dim], 0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn quadratic(&self) -> &[f64] {
        &self.quadratic
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    #[inline]
    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.quadratic[i * self.dim + j]
    }

    /// Row `i` of `Q`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.quadratic[i * self.dim..(i + 1) * self.dim]
    }

    /// Largest absolute coefficient in `Q` and `q`.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.quadratic
            .iter()
            .chain(self.linear.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Same problem with every coefficient (and the offset) multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            quadratic: self.quadratic.iter().map(|v| v * factor).collect(),
            linear: self.linear.iter().map(|v| v * factor).collect(),
            offset: self.offset * factor,
        }
    }

    /// `bitsᵀ Q bits + ⟨q, bits⟩ + offset`.
    pub fn evaluate_energy(&self, bits: &[u8]) -> Result<f64, QuboError> {
        if bits.len() != self.dim {
            return Err(QuboError::DimensionMismatch {
                expected: self.dim,
                found: bits.len(),
            });
        }
        let mut occupation = Vec::with_capacity(self.dim);
        for (index, &b) in bits.iter().enumerate() {
            match b {
                0 => occupation.push(0.0),
                1 => occupation.push(1.0),
                value => return Err(QuboError::NotBinary { index, value }),
            }
        }
        Ok(self.energy_of_occupation(&occupation))
    }

    /// Energy for an occupation vector with entries in `{0.0, 1.0}`. Every
    /// energy this crate reports is accumulated here so values are
    /// bit-for-bit comparable.
    fn energy_of_occupation(&self, z: &[f64]) -> f64 {
        let mut energy = 0.0;
        for i in 0..self.dim {
            if z[i] == 0.0 {
                continue;
            }
            let row = self.row(i);
            let mut acc = self.linear[i];
            for j in 0..self.dim {
                acc += row[j] * z[j];
            }
            energy += z[i] * acc;
        }
        energy + self.offset
    }

    /// Diagonal of the Ising Hamiltonian `H_Q` built from `(I − σ_z)/2`
    /// number operators. Entry `i` is the eigenvalue on basis state `|i⟩`,
    /// which equals `evaluate_energy` on the little-endian bits of `i`.
    pub fn hamiltonian_diagonal(&self) -> Result<Vec<f64>, QuboError> {
        if self.dim > MAX_DIAGONAL_DIM {
            return Err(QuboError::TooLarge {
                dim: self.dim,
                limit: MAX_DIAGONAL_DIM,
            });
        }
        let n = self.dim;
        let mut occupation = vec![0.0; n];
        let diag = (0..1usize << n)
            .map(|basis| {
                for (v, occ) in occupation.iter_mut().enumerate() {
                    // σ_z eigenvalue is +1 on |0⟩ and −1 on |1⟩
                    let spin = if basis >> v & 1 == 0 { 1.0 } else { -1.0 };
                    *occ = (1.0 - spin) / 2.0;
                }
                self.energy_of_occupation(&occupation)
            })
            .collect();
        Ok(diag)
    }

    /// Energy change from flipping bit `j`, given `field[j] = Σ_k Q_jk z_k`.
    #[inline]
    pub(crate) fn flip_delta(&self, bits: &[u8], field: &[f64], j: usize) -> f64 {
        let qjj = self.q(j, j);
        let b = bits[j] as f64;
        let sign = 1.0 - 2.0 * b;
        sign * (self.linear[j] + qjj + 2.0 * (field[j] - qjj * b))
    }

    /// `Q z` for a bit vector.
    pub(crate) fn local_field(&self, bits: &[u8]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(bits)
                    .filter(|(_, &b)| b == 1)
                    .map(|(q, _)| q)
                    .sum()
            })
            .collect()
    }

    /// Applies a flip of bit `j` to `bits` and updates `field` in O(dim).
    #[inline]
    pub(crate) fn apply_flip(&self, bits: &mut [u8], field: &mut [f64], j: usize) {
        let sign = if bits[j] == 0 { 1.0 } else { -1.0 };
        bits[j] ^= 1;
        let n = self.dim;
        for (k, f) in field.iter_mut().enumerate() {
            *f += sign * self.quadratic[k * n + j];
        }
    }
}

/// Little-endian integer value of a bitstring.
pub fn bits_to_index(bits: &[u8]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0u64, |acc, (i, &b)| acc | ((b as u64 & 1) << i))
}

/// Little-endian bitstring of `index` with `dim` bits.
pub fn index_to_bits(index: u64, dim: usize) -> Vec<u8> {
    (0..dim).map(|i| ((index >> i) & 1) as u8).collect()
}

fn serialize_rows<S: serde::Serializer>(flat: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let dim = (flat.len() as f64).sqrt().round() as usize;
    let mut seq = s.serialize_seq(Some(dim))?;
    for row in flat.chunks(dim.max(1)) {
        seq.serialize_element(row)?;
    }
    seq.end()
}

#[derive(Deserialize)]
struct RawQubo {
    #[serde(default)]
    dim: Option<usize>,
    #[serde(rename = "Q")]
    quadratic: Vec<Vec<f64>>,
    #[serde(rename = "q")]
    linear: Vec<f64>,
    #[serde(default)]
    offset: f64,
}

impl<'de> Deserialize<'de> for QuboProblem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawQubo::deserialize(d)?;
        let dim = raw.dim.unwrap_or(raw.quadratic.len());
        if raw.quadratic.len() != dim {
            return Err(serde::de::Error::custom(QuboError::DimensionMismatch {
                expected: dim,
                found: raw.quadratic.len(),
            }));
        }
        let problem = QuboProblem::from_rows(&raw.quadratic, raw.linear, raw.offset)
            .map_err(serde::de::Error::custom)?;
        // Serialized problems are stored symmetric; reject anything else
        // rather than silently averaging.
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (raw.quadratic[i][j], raw.quadratic[j][i]);
                if (a - b).abs() > SYMMETRY_TOLERANCE * (1.0 + a.abs().max(b.abs())) {
                    return Err(serde::de::Error::custom(QuboError::NotSymmetric { i, j, a, b }));
                }
            }
        }
        Ok(problem)
    }
}
