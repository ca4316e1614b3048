use num_complex::Complex64;

use super::FockVector;
use crate::linalg::{CMatrix, CVector};

/// Sparse complex operator on Fock space in compressed-row form.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl FockOperator {
    /// Duplicate entries are summed; exact zeros are dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, Complex64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|t| t.2 != Complex64::new(0.0, 0.0));
        let mut row_ptr = vec![0; dim + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            dim,
            row_ptr,
            cols: merged.iter().map(|t| t.1).collect(),
            vals: merged.iter().map(|t| t.2).collect(),
        }
    }

    pub fn diagonal(values: Vec<f64>) -> Self {
        let dim = values.len();
        Self::from_triplets(dim, values.into_iter().enumerate().map(|(i, v)| (i, i, Complex64::new(v, 0.0))).collect())
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(vec![1.0; dim])
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_triplets(dim, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |i| (r, self.cols[i], self.vals[i])))
    }

    /// Entries of row `r` as `(column, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |i| (self.cols[i], self.vals[i]))
    }

    pub fn apply_vec(&self, v: &CVector) -> CVector {
        CVector::from_iterator(self.dim, (0..self.dim).map(|r| self.row(r).map(|(c, a)| a * v[c]).sum::<Complex64>()))
    }

    pub fn apply(&self, psi: &FockVector) -> FockVector {
        FockVector { amplitudes: self.apply_vec(&psi.amplitudes), space: psi.space }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_triplets(self.dim, self.triplets().chain(other.triplets()).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { vals: self.vals.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    /// `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        let mut triplets = Vec::new();
        let mut acc = vec![Complex64::new(0.0, 0.0); self.dim];
        let mut touched = Vec::new();
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if acc[c] == Complex64::new(0.0, 0.0) {
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &touched {
                triplets.push((r, c, acc[c]));
                acc[c] = Complex64::new(0.0, 0.0);
            }
            touched.clear();
        }
        Self::from_triplets(self.dim, triplets)
    }

    /// `{A, B} = AB + BA`.
    pub fn anticommutator(&self, other: &Self) -> Self {
        self.mul(other).add(&other.mul(self))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).max_abs()
    }

    /// Sorted set of particle-number changes `popcount(row) - popcount(col)`
    /// over the nonzero entries.
    pub fn selection_rule(&self) -> Vec<i32> {
        let mut deltas: Vec<i32> = self
            .triplets()
            .map(|(r, c, _)| r.count_ones() as i32 - c.count_ones() as i32)
            .collect();
        deltas.sort_unstable();
        deltas.dedup();
        deltas
    }
}
