//! Small dense matrices for local operators.

use rand::Rng;
use rand_distr::StandardNormal;

use super::ops::{LinearMap, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<C64>,
    label: String,
}

impl DenseMatrix {
    pub fn from_rows(n: usize, data: Vec<C64>, label: impl Into<String>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension(format!("{} entries for a {n}x{n} matrix", data.len())));
        }
        Ok(Self {
            n,
            data,
            label: label.into(),
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            data[i * n + i] = ONE;
        }
        Self {
            n,
            data,
            label: "1".into(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.n + col]
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut data = vec![ZERO; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    data[r * n + c] += a * other.data[k * n + c];
                }
            }
        }
        Self {
            n,
            data,
            label: format!("{}*{}", self.label, other.label),
        }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut data = vec![ZERO; n * n];
        for r in 0..n {
            for c in 0..n {
                data[c * n + r] = self.data[r * n + c].conj();
            }
        }
        Self {
            n,
            data,
            label: format!("({})^+", self.label),
        }
    }

    /// Largest entrywise deviation of `A^dagger A` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.adjoint().mul(self);
        let id = Self::identity(self.n);
        g.data
            .iter()
            .zip(&id.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// A random unitary from Gram-Schmidt orthonormalization of a complex
    /// Gaussian matrix (columns processed left to right).
    pub fn random_unitary(n: usize, rng: &mut impl Rng) -> Self {
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
        while cols.len() < n {
            let mut v: Vec<C64> = (0..n)
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            // two passes keep the columns orthogonal to machine precision
            for _ in 0..2 {
                for c in &cols {
                    let overlap: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (x, y) in v.iter_mut().zip(c) {
                        *x -= overlap * y;
                    }
                }
            }
            let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(v);
        }
        let mut data = vec![ZERO; n * n];
        for (c, col) in cols.iter().enumerate() {
            for (r, &x) in col.iter().enumerate() {
                data[r * n + c] = x;
            }
        }
        Self {
            n,
            data,
            label: format!("U{n}"),
        }
    }
}

impl LinearMap for DenseMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn apply_to(&self, input: &[C64], out: &mut [C64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.n..(r + 1) * self.n];
            *o = row.iter().zip(input).map(|(a, b)| a * b).sum();
        }
    }

    fn adjoint_to(&self, input: &[C64], out: &mut [C64]) {
        out.fill(ZERO);
        for (r, &x) in input.iter().enumerate() {
            let row = &self.data[r * self.n..(r + 1) * self.n];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * x;
            }
        }
    }
}
