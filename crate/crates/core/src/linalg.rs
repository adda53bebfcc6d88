//! Small dense square matrices over [`Scalar`], plus the `f64` eigen bridge.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarMatrix {
    n: usize,
    data: Vec<Scalar>,
}

impl std::fmt::Display for ScalarMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

impl ScalarMatrix {
    pub fn zeros(n: usize) -> Self {
        ScalarMatrix {
            n,
            data: vec![Scalar::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, Scalar::one());
        }
        m
    }

    /// Lower-triangular matrix of ones (the summation matrix).
    pub fn lower_ones(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, Scalar::one());
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        ScalarMatrix {
            n,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<Scalar>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn is_exact(&self) -> bool {
        self.data.iter().all(Scalar::is_exact)
    }

    pub fn mul(&self, other: &ScalarMatrix) -> ScalarMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Scalar::zero();
                for k in 0..n {
                    let a = self.get(i, k);
                    let b = other.get(k, j);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc + a * b;
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn add(&self, other: &ScalarMatrix) -> ScalarMatrix {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarMatrix) -> ScalarMatrix {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: &Scalar) -> ScalarMatrix {
        ScalarMatrix {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    fn zip(&self, other: &ScalarMatrix, f: impl Fn(&Scalar, &Scalar) -> Scalar) -> ScalarMatrix {
        assert_eq!(self.n, other.n);
        ScalarMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn transpose(&self) -> ScalarMatrix {
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    /// `(M + M^T) / 2`.
    pub fn symmetric_part(&self) -> ScalarMatrix {
        self.add(&self.transpose()).scale(&Scalar::ratio(1, 2))
    }

    pub fn trace(&self) -> Scalar {
        (0..self.n).map(|i| self.get(i, i).clone()).sum()
    }

    pub fn diagonal(&self) -> Vec<Scalar> {
        (0..self.n).map(|i| self.get(i, i).clone()).collect()
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.get(i, j).is_zero()))
    }

    /// Inverse of a lower-triangular matrix by forward substitution; `None` if a
    /// diagonal entry vanishes.
    pub fn inverse_lower(&self) -> Option<ScalarMatrix> {
        let n = self.n;
        let mut inv = Self::zeros(n);
        let recips: Vec<Scalar> = (0..n)
            .map(|i| self.get(i, i).recip())
            .collect::<Option<_>>()?;
        for col in 0..n {
            for row in col..n {
                let mut acc = if row == col {
                    Scalar::one()
                } else {
                    Scalar::zero()
                };
                for k in col..row {
                    let l = self.get(row, k);
                    if l.is_zero() {
                        continue;
                    }
                    acc = acc - l * inv.get(k, col);
                }
                inv.set(row, col, acc * &recips[row]);
            }
        }
        Some(inv)
    }

    /// Determinant of the leading `k x k` block by Gaussian elimination.
    pub fn leading_minor(&self, k: usize) -> Scalar {
        assert!(k <= self.n);
        let mut m: Vec<Vec<Scalar>> = (0..k)
            .map(|i| (0..k).map(|j| self.get(i, j).clone()).collect())
            .collect();
        let mut det = Scalar::one();
        for col in 0..k {
            // Largest pivot for floats, first nonzero for exact rationals.
            let pivot = (col..k).filter(|&r| !m[r][col].is_zero()).max_by(|&a, &b| {
                if m[a][col].is_exact() && m[b][col].is_exact() {
                    b.cmp(&a)
                } else {
                    m[a][col]
                        .to_f64()
                        .abs()
                        .total_cmp(&m[b][col].to_f64().abs())
                }
            });
            let Some(p) = pivot else {
                return Scalar::zero();
            };
            if p != col {
                m.swap(p, col);
                det = -det;
            }
            let piv = m[col][col].clone();
            det = det * &piv;
            let inv = piv.recip().expect("nonzero pivot");
            for r in col + 1..k {
                if m[r][col].is_zero() {
                    continue;
                }
                let factor = &m[r][col] * &inv;
                for c in col..k {
                    let v = &m[r][c] - &(&factor * &m[col][c]);
                    m[r][c] = v;
                }
            }
        }
        det
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|x| x.to_f64().abs())
            .fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).to_f64())
    }
}

/// Eigenvalues of the symmetric part of `m`, sorted in descending order.
pub fn symmetric_part_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let s = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

pub fn max_abs_f64(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}
