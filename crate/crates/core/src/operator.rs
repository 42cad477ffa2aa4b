//! Hermitian operators over ordered, labeled tensor factors.
//!
//! The computational basis is row-major over the subsystem list: the first
//! subsystem is the most significant digit of a basis index.

use std::collections::HashSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, I, ONE, ZERO};

/// Asymmetry below which an input matrix is symmetrized instead of rejected.
pub const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subsystem {
    label: String,
    dim: usize,
}

impl Subsystem {
    pub fn new(label: impl Into<String>, dim: usize) -> Result<Self> {
        let label = label.into();
        if dim == 0 {
            return Err(Error::InvalidDimension { label, dim });
        }
        Ok(Self { label, dim })
    }

    pub fn qubit(label: impl Into<String>) -> Self {
        Self { label: label.into(), dim: 2 }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.label, self.dim)
    }
}

fn check_labels(subsystems: &[Subsystem]) -> Result<()> {
    let mut seen = HashSet::new();
    for s in subsystems {
        if !seen.insert(s.label.as_str()) {
            return Err(Error::DuplicateLabel(s.label.clone()));
        }
    }
    Ok(())
}

/// Helper for digit manipulations on basis indices.
struct IndexMap {
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl IndexMap {
    fn new(dims: &[usize]) -> Self {
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Self { dims: dims.to_vec(), strides }
    }

    fn side(&self) -> usize {
        self.dims.iter().product()
    }

    fn digit(&self, index: usize, pos: usize) -> usize {
        (index / self.strides[pos]) % self.dims[pos]
    }

    /// Splits every basis index into (index over kept factors, index over selected factors).
    fn split(&self, selected: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let kept: Vec<usize> = (0..self.dims.len()).filter(|p| !selected.contains(p)).collect();
        let n = self.side();
        let mut kept_idx = vec![0; n];
        let mut sel_idx = vec![0; n];
        for i in 0..n {
            let mut k = 0;
            for &p in &kept {
                k = k * self.dims[p] + self.digit(i, p);
            }
            let mut s = 0;
            for &p in selected {
                s = s * self.dims[p] + self.digit(i, p);
            }
            kept_idx[i] = k;
            sel_idx[i] = s;
        }
        (kept_idx, sel_idx)
    }

    /// Contribution of the selected factors' digits to each basis index.
    fn selected_part(&self, selected: &[usize]) -> Vec<usize> {
        (0..self.side())
            .map(|i| selected.iter().map(|&p| self.digit(i, p) * self.strides[p]).sum())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOp {
    subsystems: Vec<Subsystem>,
    mat: CMatrix,
}

impl HermitianOp {
    /// Validates labels and shape; symmetrizes asymmetry up to [`HERMITICITY_TOL`]
    /// (relative to the largest entry) and rejects anything larger.
    pub fn new(subsystems: Vec<Subsystem>, mat: CMatrix) -> Result<Self> {
        check_labels(&subsystems)?;
        let side: usize = subsystems.iter().map(|s| s.dim).product();
        if mat.nrows() != side || mat.ncols() != side {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, subsystems require side {side}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let scale = mat.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let asym = linalg::max_asymmetry(&mat);
        if asym > HERMITICITY_TOL * scale {
            return Err(Error::NotHermitian(asym));
        }
        let mat = if asym > 0.0 { linalg::symmetrize(&mat) } else { mat };
        Ok(Self { subsystems, mat })
    }

    /// Skips validation; the caller guarantees Hermiticity and shape.
    pub(crate) fn from_parts(subsystems: Vec<Subsystem>, mat: CMatrix) -> Self {
        debug_assert_eq!(mat.nrows(), subsystems.iter().map(|s| s.dim).product::<usize>());
        Self { subsystems, mat }
    }

    pub fn zeros(subsystems: Vec<Subsystem>) -> Result<Self> {
        check_labels(&subsystems)?;
        let side = subsystems.iter().map(|s| s.dim).product();
        Ok(Self { subsystems, mat: CMatrix::zeros(side, side) })
    }

    pub fn identity(subsystems: Vec<Subsystem>) -> Result<Self> {
        check_labels(&subsystems)?;
        let side = subsystems.iter().map(|s| s.dim).product();
        Ok(Self { subsystems, mat: CMatrix::identity(side, side) })
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn labels(&self) -> Vec<&str> {
        self.subsystems.iter().map(|s| s.label()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.dim).collect()
    }

    pub fn side(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.subsystems.iter().position(|s| s.label == label)
    }

    fn positions(&self, labels: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self.position(l).ok_or_else(|| Error::UnknownLabel(l.to_string()))?;
            if !out.contains(&p) {
                out.push(p);
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn same_space(&self, other: &HermitianOp) -> bool {
        self.subsystems == other.subsystems
    }

    fn require_same_space(&self, other: &HermitianOp) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "operands act on {:?} and {:?}",
                self.labels(),
                other.labels()
            )))
        }
    }

    pub fn trace(&self) -> f64 {
        linalg::trace_re(&self.mat)
    }

    /// Hilbert–Schmidt inner product `tr[self · other]`.
    pub fn inner(&self, other: &HermitianOp) -> Result<f64> {
        self.require_same_space(other)?;
        Ok(linalg::hs_inner(&self.mat, &other.mat))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn distance(&self, other: &HermitianOp) -> Result<f64> {
        self.require_same_space(other)?;
        Ok((&self.mat - &other.mat).norm())
    }

    pub fn max_asymmetry(&self) -> f64 {
        linalg::max_asymmetry(&self.mat)
    }

    pub fn scale(&self, factor: f64) -> HermitianOp {
        Self::from_parts(self.subsystems.clone(), self.mat.scale(factor))
    }

    /// `Σ w_i op_i` over operators on a common space.
    pub fn lin_comb(terms: &[(f64, &HermitianOp)]) -> Result<HermitianOp> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty linear combination".into()))?;
        let mut mat = CMatrix::zeros(first.side(), first.side());
        for (w, op) in terms {
            first.require_same_space(op)?;
            mat += op.mat.scale(*w);
        }
        Ok(Self::from_parts(first.subsystems.clone(), mat))
    }

    pub fn checked_add(&self, other: &HermitianOp) -> Result<HermitianOp> {
        self.require_same_space(other)?;
        Ok(Self::from_parts(self.subsystems.clone(), &self.mat + &other.mat))
    }

    pub fn checked_sub(&self, other: &HermitianOp) -> Result<HermitianOp> {
        self.require_same_space(other)?;
        Ok(Self::from_parts(self.subsystems.clone(), &self.mat - &other.mat))
    }

    /// Kronecker product; the subsystem list is the concatenation.
    pub fn tensor(&self, other: &HermitianOp) -> Result<HermitianOp> {
        let mut subsystems = self.subsystems.clone();
        subsystems.extend(other.subsystems.iter().cloned());
        check_labels(&subsystems)?;
        Ok(Self::from_parts(subsystems, self.mat.kronecker(&other.mat)))
    }

    pub fn partial_trace(&self, labels: &[&str]) -> Result<HermitianOp> {
        let traced = self.positions(labels)?;
        let map = IndexMap::new(&self.dims());
        let (kept_idx, sel_idx) = map.split(&traced);
        let kept: Vec<Subsystem> = self
            .subsystems
            .iter()
            .enumerate()
            .filter(|(p, _)| !traced.contains(p))
            .map(|(_, s)| s.clone())
            .collect();
        let side: usize = kept.iter().map(|s| s.dim).product();
        let mut out = CMatrix::zeros(side, side);
        let n = self.side();
        for i in 0..n {
            for j in 0..n {
                if sel_idx[i] == sel_idx[j] {
                    out[(kept_idx[i], kept_idx[j])] += self.mat[(i, j)];
                }
            }
        }
        Ok(Self::from_parts(kept, out))
    }

    /// `tr_X[op] ⊗ 1_X / d_X` with the factors left in place.
    pub fn replace_with_identity(&self, labels: &[&str]) -> Result<HermitianOp> {
        let traced = self.positions(labels)?;
        let d_traced: usize = traced.iter().map(|&p| self.subsystems[p].dim).product();
        let reduced = self.partial_trace(labels)?;
        let map = IndexMap::new(&self.dims());
        let (kept_idx, sel_idx) = map.split(&traced);
        let n = self.side();
        let inv = 1.0 / d_traced as f64;
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if sel_idx[i] == sel_idx[j] {
                    out[(i, j)] = reduced.mat[(kept_idx[i], kept_idx[j])] * inv;
                }
            }
        }
        Ok(Self::from_parts(self.subsystems.clone(), out))
    }

    /// Transpose on the named factors in the computational basis.
    pub fn partial_transpose(&self, labels: &[&str]) -> Result<HermitianOp> {
        let sel = self.positions(labels)?;
        let map = IndexMap::new(&self.dims());
        let part = map.selected_part(&sel);
        let n = self.side();
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let ii = i - part[i] + part[j];
                let jj = j - part[j] + part[i];
                out[(ii, jj)] = self.mat[(i, j)];
            }
        }
        Ok(Self::from_parts(self.subsystems.clone(), out))
    }

    pub fn transpose(&self) -> HermitianOp {
        Self::from_parts(self.subsystems.clone(), self.mat.transpose())
    }

    /// Reorders tensor factors so that the labels appear in `order`.
    pub fn permute(&self, order: &[&str]) -> Result<HermitianOp> {
        if order.len() != self.subsystems.len() {
            return Err(Error::DimensionMismatch(format!(
                "permutation {order:?} does not cover {:?}",
                self.labels()
            )));
        }
        let mut src_pos = Vec::with_capacity(order.len());
        for l in order {
            let p = self.position(l).ok_or_else(|| Error::UnknownLabel(l.to_string()))?;
            if src_pos.contains(&p) {
                return Err(Error::DuplicateLabel(l.to_string()));
            }
            src_pos.push(p);
        }
        if src_pos.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(self.clone());
        }
        let new_subs: Vec<Subsystem> = src_pos.iter().map(|&p| self.subsystems[p].clone()).collect();
        let old = IndexMap::new(&self.dims());
        let new = IndexMap::new(&new_subs.iter().map(|s| s.dim).collect::<Vec<_>>());
        let n = self.side();
        // new index -> old index
        let perm: Vec<usize> = (0..n)
            .map(|i| (0..src_pos.len()).map(|k| new.digit(i, k) * old.strides[src_pos[k]]).sum())
            .collect();
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = self.mat[(perm[i], perm[j])];
            }
        }
        Ok(Self::from_parts(new_subs, out))
    }

    /// `self ⊗ 1` on the extra subsystems, reordered to `order`.
    pub fn embed(&self, extra: &[Subsystem], order: &[&str]) -> Result<HermitianOp> {
        let id = HermitianOp::identity(extra.to_vec())?;
        self.tensor(&id)?.permute(order)
    }

    pub fn spectral(&self) -> Spectrum {
        let (values, vectors) = linalg::eigh_sorted(&self.mat);
        Spectrum { values, vectors }
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = linalg::eigvalsh(&self.mat).iter().copied().collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.mat)
    }

    pub fn is_qubit_register(&self) -> bool {
        self.subsystems.iter().all(|s| s.dim == 2)
    }

    fn require_qubits(&self) -> Result<()> {
        match self.subsystems.iter().find(|s| s.dim != 2) {
            Some(s) => Err(Error::NotQubit { label: s.label.clone(), dim: s.dim }),
            None => Ok(()),
        }
    }

    /// Dense Pauli coefficients `α_s = tr[op P_s] / 2^n`, indexed base 4 with
    /// `I, X, Y, Z = 0, 1, 2, 3` and the first qubit most significant.
    pub fn pauli_coefficients(&self) -> Result<Vec<f64>> {
        self.require_qubits()?;
        let n = self.subsystems.len();
        let side = 1usize << n;
        let norm = 1.0 / side as f64;
        let mut out = vec![0.0; 1 << (2 * n)];
        for (code, slot) in out.iter_mut().enumerate() {
            let letters = decode_letters(code, n);
            let (flip, phases) = pauli_action(&letters);
            // tr[op P] = Σ_c op[c, c^flip] · phase(c)
            let mut acc = ZERO;
            for c in 0..side {
                acc += self.mat[(c, c ^ flip)] * phases[c];
            }
            *slot = acc.re * norm;
        }
        Ok(out)
    }

    /// Nonzero Pauli terms; coefficients below `1e-14` are dropped.
    pub fn pauli_decompose(&self) -> Result<Vec<PauliString>> {
        let n = self.subsystems.len();
        let coeffs = self.pauli_coefficients()?;
        Ok(coeffs
            .into_iter()
            .enumerate()
            .filter(|(_, c)| c.abs() > 1e-14)
            .map(|(code, c)| PauliString { letters: decode_letters(code, n), coefficient: c })
            .collect())
    }

    pub fn pauli_compose(subsystems: Vec<Subsystem>, terms: &[PauliString]) -> Result<HermitianOp> {
        check_labels(&subsystems)?;
        if let Some(s) = subsystems.iter().find(|s| s.dim != 2) {
            return Err(Error::NotQubit { label: s.label.clone(), dim: s.dim });
        }
        let n = subsystems.len();
        let side = 1usize << n;
        let mut mat = CMatrix::zeros(side, side);
        for t in terms {
            if t.letters.len() != n {
                return Err(Error::DimensionMismatch(format!("Pauli string {t} on {n} qubits")));
            }
            let (flip, phases) = pauli_action(&t.letters);
            // P|c> = phase(c) |c ^ flip>
            for c in 0..side {
                mat[(c ^ flip, c)] += phases[c] * t.coefficient;
            }
        }
        Ok(Self::from_parts(subsystems, mat))
    }

    /// Builds `Σ c · P` from textual Pauli strings such as `("IZZI", 0.25)`.
    pub fn from_pauli_terms(subsystems: Vec<Subsystem>, terms: &[(&str, f64)]) -> Result<HermitianOp> {
        let parsed = terms
            .iter()
            .map(|(s, c)| {
                let mut p: PauliString = s.parse()?;
                p.coefficient = *c;
                Ok(p)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::pauli_compose(subsystems, &parsed)
    }
}

impl Add for &HermitianOp {
    type Output = HermitianOp;
    /// Panics when the operands act on different spaces; see [`HermitianOp::checked_add`].
    fn add(self, rhs: &HermitianOp) -> HermitianOp {
        self.checked_add(rhs).expect("operands act on different spaces")
    }
}

impl Sub for &HermitianOp {
    type Output = HermitianOp;
    fn sub(self, rhs: &HermitianOp) -> HermitianOp {
        self.checked_sub(rhs).expect("operands act on different spaces")
    }
}

impl Mul<f64> for &HermitianOp {
    type Output = HermitianOp;
    fn mul(self, rhs: f64) -> HermitianOp {
        self.scale(rhs)
    }
}

impl Neg for &HermitianOp {
    type Output = HermitianOp;
    fn neg(self) -> HermitianOp {
        self.scale(-1.0)
    }
}

pub struct Spectrum {
    /// Descending.
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector of `values[i]`.
    pub vectors: CMatrix,
}

impl Spectrum {
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let mut out = CMatrix::zeros(n, n);
        for (i, &l) in self.values.iter().enumerate() {
            let v = self.vectors.column(i);
            out += (&v * v.adjoint()).scale(l);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Pauli {
        Self::ALL[i]
    }

    pub fn matrix(self) -> CMatrix {
        match self {
            Pauli::I => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
            Pauli::X => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Pauli::Y => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
            Pauli::Z => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

fn decode_letters(mut code: usize, n: usize) -> Vec<Pauli> {
    let mut letters = vec![Pauli::I; n];
    for k in (0..n).rev() {
        letters[k] = Pauli::from_index(code % 4);
        code /= 4;
    }
    letters
}

/// Bit-flip mask and per-basis-state phase of a Pauli string: `P|c> = phase[c] |c ^ mask>`.
fn pauli_action(letters: &[Pauli]) -> (usize, Vec<C64>) {
    let n = letters.len();
    let side = 1usize << n;
    let mut flip = 0usize;
    for (k, p) in letters.iter().enumerate() {
        if matches!(p, Pauli::X | Pauli::Y) {
            flip |= 1 << (n - 1 - k);
        }
    }
    let phases = (0..side)
        .map(|c| {
            let mut ph = ONE;
            for (k, p) in letters.iter().enumerate() {
                let bit = (c >> (n - 1 - k)) & 1;
                match p {
                    Pauli::Z if bit == 1 => ph = -ph,
                    Pauli::Y => ph *= if bit == 0 { I } else { -I },
                    _ => {}
                }
            }
            ph
        })
        .collect();
    (flip, phases)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    pub letters: Vec<Pauli>,
    pub coefficient: f64,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>, coefficient: f64) -> Self {
        Self { letters, coefficient }
    }

    pub fn code(&self) -> usize {
        self.letters.iter().fold(0, |acc, p| acc * 4 + p.index())
    }

    pub fn word(&self) -> String {
        self.letters.iter().map(|p| p.as_char()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    pub fn matrix(&self) -> CMatrix {
        let mut m = CMatrix::identity(1, 1);
        for p in &self.letters {
            m = m.kronecker(&p.matrix());
        }
        m.scale(self.coefficient)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.word())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| match c {
                'I' | '1' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::Format(format!("invalid Pauli letter `{other}` in `{s}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { letters, coefficient: 1.0 })
    }
}

/// CJ operator `[(I ⊗ M)(|I⟩⟩⟨⟨I|)]^T` on `in ⊗ out` of the map with the given Kraus operators.
pub fn cj_from_kraus(kraus: &[CMatrix], in_space: &Subsystem, out_space: &Subsystem) -> Result<HermitianOp> {
    let m = cj_matrix(kraus, in_space.dim, out_space.dim)?;
    HermitianOp::new(vec![in_space.clone(), out_space.clone()], m)
}

/// Matrix form of [`cj_from_kraus`] for composite input and output spaces.
pub fn cj_matrix(kraus: &[CMatrix], din: usize, dout: usize) -> Result<CMatrix> {
    let side = din * dout;
    let mut m = CMatrix::zeros(side, side);
    for k in kraus {
        if k.nrows() != dout || k.ncols() != din {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operator is {}x{}, expected {dout}x{din}",
                k.nrows(),
                k.ncols()
            )));
        }
        // v[(j, o)] = K[o, j]
        let v = nalgebra::DVector::from_iterator(
            side,
            (0..din).flat_map(|j| (0..dout).map(move |o| (j, o))).map(|(j, o)| k[(o, j)]),
        );
        m += &v * v.adjoint();
    }
    Ok(linalg::symmetrize(&m.transpose()))
}

/// Projector onto `(1/√d) Σ_j |jj⟩`.
pub fn max_entangled(dim: usize, labels: (&str, &str)) -> Result<HermitianOp> {
    if dim < 2 {
        return Err(Error::InvalidParameter(format!("maximally entangled state needs dim >= 2, got {dim}")));
    }
    let side = dim * dim;
    let mut m = CMatrix::zeros(side, side);
    let w = 1.0 / dim as f64;
    for j in 0..dim {
        for k in 0..dim {
            m[(j * dim + j, k * dim + k)] = C64::new(w, 0.0);
        }
    }
    HermitianOp::new(vec![Subsystem::new(labels.0, dim)?, Subsystem::new(labels.1, dim)?], m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(l: &str) -> Subsystem {
        Subsystem::qubit(l)
    }

    fn core4() -> Vec<Subsystem> {
        ["AI", "AO", "BI", "BO"].iter().map(|l| q(l)).collect()
    }

    #[test]
    fn tensor_z_identity() {
        let z = HermitianOp::from_pauli_terms(vec![q("a")], &[("Z", 1.0)]).unwrap();
        let id = HermitianOp::identity(vec![q("b")]).unwrap();
        let t = z.tensor(&id).unwrap();
        assert_eq!(t.labels(), vec!["a", "b"]);
        let d: Vec<f64> = (0..4).map(|i| t.matrix()[(i, i)].re).collect();
        assert_eq!(d, vec![1.0, 1.0, -1.0, -1.0]);
        assert!(matches!(z.tensor(&z), Err(Error::DuplicateLabel(_))));
    }

    #[test]
    fn white_noise_factors() {
        let half = |a: &str, b: &str| HermitianOp::identity(vec![q(a), q(b)]).unwrap().scale(0.5);
        let t = half("AI", "AO").tensor(&half("BI", "BO")).unwrap();
        let expect = HermitianOp::identity(core4()).unwrap().scale(0.25);
        assert!(t.distance(&expect).unwrap() < 1e-15);
    }

    #[test]
    fn partial_trace_examples() {
        let w = HermitianOp::identity(core4()).unwrap().scale(0.25);
        let r = w.partial_trace(&["BO"]).unwrap();
        let expect = HermitianOp::identity(vec![q("AI"), q("AO"), q("BI")]).unwrap().scale(0.5);
        assert!(r.distance(&expect).unwrap() < 1e-15);

        let op = HermitianOp::from_pauli_terms(core4(), &[("ZIXZ", 1.0)]).unwrap();
        let r = op.partial_trace(&["AO"]).unwrap();
        let expect = HermitianOp::from_pauli_terms(vec![q("AI"), q("BI"), q("BO")], &[("ZXZ", 2.0)]).unwrap();
        assert!(r.distance(&expect).unwrap() < 1e-14);
        assert!(matches!(op.partial_trace(&["nope"]), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn ququart_pair_marginal_is_maximally_mixed() {
        let phi = max_entangled(4, ("AIp", "BIp")).unwrap();
        assert!((phi.trace() - 1.0).abs() < 1e-15);
        let r = phi.partial_trace(&["BIp"]).unwrap();
        let expect = HermitianOp::identity(vec![Subsystem::new("AIp", 4).unwrap()]).unwrap().scale(0.25);
        assert!(r.distance(&expect).unwrap() < 1e-15);
        let ev = phi.eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-12);
        assert!(ev[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn partial_transpose_examples() {
        let yy = HermitianOp::from_pauli_terms(vec![q("a"), q("b")], &[("YY", 1.0)]).unwrap();
        let t = yy.partial_transpose(&["b"]).unwrap();
        assert!(t.checked_add(&yy).unwrap().frobenius_norm() < 1e-15);

        let zixz = HermitianOp::from_pauli_terms(core4(), &[("ZIXZ", 1.0)]).unwrap();
        let t = zixz.partial_transpose(&["BI", "BO"]).unwrap();
        assert!(t.distance(&zixz).unwrap() < 1e-15);

        let bell = max_entangled(2, ("a", "b")).unwrap();
        let ev = bell.partial_transpose(&["b"]).unwrap().eigenvalues();
        assert!((ev[3] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn spectral_examples() {
        let z = HermitianOp::from_pauli_terms(vec![q("a")], &[("Z", 1.0)]).unwrap();
        let s = z.spectral();
        assert_eq!(s.values, vec![1.0, -1.0]);
        assert!((s.reconstruct() - z.matrix()).norm() < 1e-14);
    }

    #[test]
    fn pauli_round_trip_fixed() {
        let w = HermitianOp::from_pauli_terms(core4(), &[("IIII", 0.25), ("ZIXZ", 0.25), ("IYYI", -0.1)]).unwrap();
        let terms = w.pauli_decompose().unwrap();
        assert_eq!(terms.len(), 3);
        let back = HermitianOp::pauli_compose(core4(), &terms).unwrap();
        assert!(back.distance(&w).unwrap() < 1e-15);
        let pz = HermitianOp::from_pauli_terms(vec![q("a")], &[("Y", 1.0)]).unwrap();
        assert_eq!(pz.matrix()[(0, 1)], -I);
    }

    #[test]
    fn pauli_rejects_qutrits() {
        let op = HermitianOp::identity(vec![Subsystem::new("t", 3).unwrap()]).unwrap();
        assert!(matches!(op.pauli_decompose(), Err(Error::NotQubit { .. })));
    }

    #[test]
    fn cj_identity_channel() {
        let m = cj_from_kraus(&[CMatrix::identity(2, 2)], &q("in"), &q("out")).unwrap();
        assert!((m.trace() - 2.0).abs() < 1e-15);
        let ev = m.eigenvalues();
        assert!((ev[0] - 2.0).abs() < 1e-12 && ev[1].abs() < 1e-12);
        let marg = m.partial_trace(&["out"]).unwrap();
        assert!(marg.distance(&HermitianOp::identity(vec![q("in")]).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn cj_fully_depolarizing() {
        let kraus: Vec<CMatrix> = Pauli::ALL.iter().map(|p| p.matrix().scale(0.5)).collect();
        let m = cj_from_kraus(&kraus, &q("in"), &q("out")).unwrap();
        let expect = HermitianOp::identity(vec![q("in"), q("out")]).unwrap().scale(0.5);
        assert!(m.distance(&expect).unwrap() < 1e-15);
    }

    #[test]
    fn cj_measure_and_discard() {
        // measure Z, prepare |0> regardless: Kraus |0><0|, |0><1|
        let k0 = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
        let k1 = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        let m = cj_from_kraus(&[k0, k1], &q("in"), &q("out")).unwrap();
        let marg = m.partial_trace(&["out"]).unwrap();
        assert!(marg.distance(&HermitianOp::identity(vec![q("in")]).unwrap()).unwrap() < 1e-15);
        assert!(m.min_eigenvalue() > -1e-14);
        let bad = CMatrix::zeros(3, 2);
        assert!(matches!(cj_from_kraus(&[bad], &q("in"), &q("out")), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn construction_symmetrizes_or_rejects() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = C64::new(1e-14, 0.0);
        let op = HermitianOp::new(vec![q("a")], m.clone()).unwrap();
        assert_eq!(op.max_asymmetry(), 0.0);
        m[(0, 1)] = C64::new(1e-6, 0.0);
        assert!(matches!(HermitianOp::new(vec![q("a")], m), Err(Error::NotHermitian(_))));
        assert!(matches!(
            HermitianOp::new(vec![q("a"), q("a")], CMatrix::identity(4, 4)),
            Err(Error::DuplicateLabel(_))
        ));
        assert!(max_entangled(1, ("a", "b")).is_err());
    }

    #[test]
    fn permute_and_embed() {
        let op = HermitianOp::from_pauli_terms(vec![q("a"), q("b")], &[("ZX", 1.0)]).unwrap();
        let p = op.permute(&["b", "a"]).unwrap();
        let expect = HermitianOp::from_pauli_terms(vec![q("b"), q("a")], &[("XZ", 1.0)]).unwrap();
        assert!(p.distance(&expect).unwrap() < 1e-15);
        let e = op.embed(&[q("c")], &["a", "c", "b"]).unwrap();
        let expect = HermitianOp::from_pauli_terms(vec![q("a"), q("c"), q("b")], &[("ZIX", 1.0)]).unwrap();
        assert!(e.distance(&expect).unwrap() < 1e-15);
    }

    #[test]
    fn replace_with_identity_matches_definition() {
        let op = HermitianOp::from_pauli_terms(core4(), &[("IIII", 0.25), ("ZIXZ", 0.25), ("IZZI", 0.1)]).unwrap();
        let r = op.replace_with_identity(&["BO"]).unwrap();
        let expect = HermitianOp::from_pauli_terms(core4(), &[("IIII", 0.25), ("IZZI", 0.1)]).unwrap();
        assert!(r.distance(&expect).unwrap() < 1e-15);
    }
}
