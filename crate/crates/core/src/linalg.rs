//! Dense complex helpers shared by the operator algebra and the cone solver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Largest entrywise deviation from Hermiticity, `max |M - M^H|`.
pub fn max_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// `Re tr(A B)` for Hermitian operands, i.e. the Hilbert–Schmidt inner product.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for r in 0..n {
        for c in 0..n {
            let x = a[(r, c)];
            let y = b[(c, r)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

pub fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order and eigenvectors permuted to match.
pub fn eigh_sorted(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> DVector<f64> {
    m.clone().symmetric_eigenvalues()
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    eigvalsh(m).iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn max_eigenvalue(m: &CMatrix) -> f64 {
    eigvalsh(m).iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Hermitian matrix stored as its list of nonzero entries (both triangles).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseHermitian {
    pub side: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseHermitian {
    pub fn new(side: usize, entries: Vec<(usize, usize, C64)>) -> Self {
        Self { side, entries }
    }

    pub fn from_dense(m: &CMatrix, cutoff: f64) -> Self {
        let mut entries = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)].norm() > cutoff {
                    entries.push((r, c, m[(r, c)]));
                }
            }
        }
        Self { side: m.nrows(), entries }
    }

    pub fn identity(side: usize) -> Self {
        Self { side, entries: (0..side).map(|i| (i, i, ONE)).collect() }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.side, self.side);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// `Re tr(self X)`.
    pub fn inner(&self, x: &CMatrix) -> f64 {
        let mut acc = 0.0;
        for &(r, c, a) in &self.entries {
            let b = x[(c, r)];
            acc += a.re * b.re - a.im * b.im;
        }
        acc
    }

    pub fn add_scaled_into(&self, scale: f64, acc: &mut CMatrix) {
        for &(r, c, v) in &self.entries {
            acc[(r, c)] += v * scale;
        }
    }

    /// `self * M` for a dense `M`.
    pub fn mul_dense(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.side, m.ncols());
        for &(r, c, v) in &self.entries {
            for k in 0..m.ncols() {
                out[(r, k)] += v * m[(c, k)];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        self.entries.iter().filter(|e| e.0 == e.1).map(|e| e.2.re).sum()
    }

    /// Tensor product, row-major with `self` as the more significant factor.
    pub fn kron(&self, other: &SparseHermitian) -> SparseHermitian {
        let mut entries = Vec::with_capacity(self.entries.len() * other.entries.len());
        for &(r1, c1, v1) in &self.entries {
            for &(r2, c2, v2) in &other.entries {
                entries.push((r1 * other.side + r2, c1 * other.side + c2, v1 * v2));
            }
        }
        SparseHermitian { side: self.side * other.side, entries }
    }

    /// Real coordinates in the orthonormal basis used for rank tests:
    /// diagonal entries, then `sqrt(2) Re` and `sqrt(2) Im` of the upper triangle.
    pub fn write_real_coords(&self, out: &mut [f64]) {
        let n = self.side;
        for &(r, c, v) in &self.entries {
            match r.cmp(&c) {
                std::cmp::Ordering::Equal => out[r] += v.re,
                std::cmp::Ordering::Less => {
                    let k = upper_index(n, r, c);
                    out[n + 2 * k] += std::f64::consts::SQRT_2 * v.re;
                    out[n + 2 * k + 1] += std::f64::consts::SQRT_2 * v.im;
                }
                std::cmp::Ordering::Greater => {}
            }
        }
    }
}

/// Index of `(r, c)`, `r < c`, in the row-major strict upper triangle.
fn upper_index(n: usize, r: usize, c: usize) -> usize {
    r * n - r * (r + 1) / 2 + (c - r - 1)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}
