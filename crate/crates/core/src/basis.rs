//! Hilbert–Schmidt orthogonal operator bases.
//!
//! Every local basis starts with the identity and is normalized so that
//! `tr[E_a E_b] = d δ_ab`. For `d = 2` the basis is exactly `I, X, Y, Z`, so
//! product-basis coordinates coincide with Pauli coefficients.

use crate::linalg::{SparseHermitian, C64, I, ONE};

/// Generalized Gell-Mann basis of `d × d` Hermitian matrices, identity first,
/// then symmetric/antisymmetric pairs `(j, k)` for `j < k`, then the diagonals.
pub fn local_basis(d: usize) -> Vec<SparseHermitian> {
    let mut out = vec![SparseHermitian::identity(d)];
    let s = (d as f64 / 2.0).sqrt();
    for j in 0..d {
        for k in (j + 1)..d {
            out.push(SparseHermitian::new(d, vec![(j, k, ONE * s), (k, j, ONE * s)]));
            out.push(SparseHermitian::new(d, vec![(j, k, -I * s), (k, j, I * s)]));
        }
    }
    for l in 1..d {
        let norm = s * (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut entries: Vec<(usize, usize, C64)> =
            (0..l).map(|m| (m, m, C64::new(norm, 0.0))).collect();
        entries.push((l, l, C64::new(-(l as f64) * norm, 0.0)));
        out.push(SparseHermitian::new(d, entries));
    }
    out
}

/// Tensor-product basis over an ordered list of local dimensions.
#[derive(Clone, Debug)]
pub struct ProductBasis {
    dims: Vec<usize>,
    locals: Vec<Vec<SparseHermitian>>,
}

impl ProductBasis {
    pub fn new(dims: &[usize]) -> Self {
        Self { dims: dims.to_vec(), locals: dims.iter().map(|&d| local_basis(d)).collect() }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn side(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().map(|d| d * d).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All multi-indices in row-major order (first factor most significant).
    pub fn indices(&self) -> Vec<Vec<usize>> {
        let radices: Vec<usize> = self.dims.iter().map(|d| d * d).collect();
        let total: usize = radices.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; radices.len()];
        for _ in 0..total {
            out.push(idx.clone());
            for pos in (0..idx.len()).rev() {
                idx[pos] += 1;
                if idx[pos] < radices[pos] {
                    break;
                }
                idx[pos] = 0;
            }
        }
        out
    }

    pub fn element(&self, idx: &[usize]) -> SparseHermitian {
        assert_eq!(idx.len(), self.dims.len(), "multi-index length mismatch");
        let mut acc = SparseHermitian::new(1, vec![(0, 0, ONE)]);
        for (local, &i) in self.locals.iter().zip(idx) {
            acc = acc.kron(&local[i]);
        }
        acc
    }

    /// Element with the factors at `skip` removed (those factors must be identities).
    pub fn reduced_element(&self, idx: &[usize], skip: &[usize]) -> SparseHermitian {
        let mut acc = SparseHermitian::new(1, vec![(0, 0, ONE)]);
        for (pos, (local, &i)) in self.locals.iter().zip(idx).enumerate() {
            if skip.contains(&pos) {
                debug_assert_eq!(i, 0);
                continue;
            }
            acc = acc.kron(&local[i]);
        }
        acc
    }

    /// Squared norm of every element, `tr[E^2] = side`.
    pub fn element_norm_sqr(&self) -> f64 {
        self.side() as f64
    }
}
