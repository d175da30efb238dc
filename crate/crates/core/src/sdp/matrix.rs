use crate::error::{Error, Result};

/// Dense symmetric matrix stored as its packed lower triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    lower: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix {
            n,
            lower: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Reads the lower triangle of `f(i, j)`.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut lower = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                lower.push(f(i, j));
            }
        }
        SymmetricMatrix { n, lower }
    }

    /// Builds from a full square array, rejecting asymmetry above `tol`.
    pub fn from_rows(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::dims("matrix rows must form a square"));
        }
        for i in 0..n {
            for j in 0..i {
                if (rows[i][j] - rows[j][i]).abs() > tol {
                    return Err(Error::domain(format!(
                        "matrix is not symmetric at ({i}, {j}): {} vs {}",
                        rows[i][j], rows[j][i]
                    )));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(i: usize, j: usize) -> usize {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        r * (r + 1) / 2 + c
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[Self::slot(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.lower[Self::slot(i, j)] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..=i {
                let v = self.get(i, j);
                s += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        s.sqrt()
    }

    /// `Trace(A^T B)`, i.e. the entrywise inner product.
    pub fn inner(&self, other: &SymmetricMatrix) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch in matrix inner product");
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..=i {
                let v = self.get(i, j) * other.get(i, j);
                s += if i == j { v } else { 2.0 * v };
            }
        }
        s
    }

    pub fn scaled(&self, factor: f64) -> SymmetricMatrix {
        SymmetricMatrix {
            n: self.n,
            lower: self.lower.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = self.get(i, j);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        a
    }

    /// Gram matrix `P^T P` of the given columns.
    pub fn gram(columns: &[Vec<f64>]) -> Self {
        Self::from_fn(columns.len(), |i, j| dot(&columns[i], &columns[j]))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Relative off-diagonal threshold for the Jacobi sweeps.
pub const JACOBI_REL_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix in ascending order.
///
/// Cyclic Jacobi: sweep over all `(p, q)` pairs with a plane rotation that
/// zeroes `a[p][q]`, until every off-diagonal magnitude is below
/// `1e-12 * ||A||_F`.
pub fn sym_eigenvalues(a: &SymmetricMatrix) -> Result<Vec<f64>> {
    let n = a.dim();
    let mut m = a.to_dense();
    let threshold = JACOBI_REL_TOL * a.frobenius_norm();

    let max_off = |m: &[f64]| {
        let mut best = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                best = best.max(m[i * n + j].abs());
            }
        }
        best
    };

    let mut sweeps = 0;
    loop {
        let off = max_off(&m);
        if off <= threshold {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::EigenNoConvergence {
                sweeps,
                off_diagonal: off,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= threshold * 1e-3 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
            }
        }
        sweeps += 1;
    }

    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}
