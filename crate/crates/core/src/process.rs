//! Bipartite process matrices on `A_I ⊗ A_O ⊗ B_I ⊗ B_O`, optionally extended by
//! ancilla inputs `A_I'`, `B_I'`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::operator::{HermitianOp, Pauli, PauliString, Subsystem};

pub const AI: &str = "AI";
pub const AO: &str = "AO";
pub const BI: &str = "BI";
pub const BO: &str = "BO";
pub const AIP: &str = "AIp";
pub const BIP: &str = "BIp";

/// PSD slack, trace and subspace tolerance of [`ProcessMatrix`] validation.
pub const VALIDITY_TOL: f64 = 1e-9;

/// Group bits used by class masks: input of A, output of A, input of B, output of B.
pub const G_AIN: usize = 1;
pub const G_AOUT: usize = 2;
pub const G_BIN: usize = 4;
pub const G_BOUT: usize = 8;

/// Whether a Hilbert–Schmidt class (mask of nontrivial groups) is excluded from valid processes.
pub fn class_is_forbidden(mask: usize) -> bool {
    let i = mask & G_AIN != 0;
    let j = mask & G_AOUT != 0;
    let k = mask & G_BIN != 0;
    let l = mask & G_BOUT != 0;
    (j && !k && !l) || (l && !i && !j) || (j && l)
}

pub fn class_name(mask: usize) -> String {
    let names = [(G_AIN, AI), (G_AOUT, AO), (G_BIN, BI), (G_BOUT, BO)];
    let parts: Vec<&str> = names.iter().filter(|(g, _)| mask & g != 0).map(|(_, n)| *n).collect();
    format!("{{{}}}", parts.join(" "))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyStructure {
    pub a_in: Subsystem,
    pub a_out: Subsystem,
    pub b_in: Subsystem,
    pub b_out: Subsystem,
    pub a_anc: Option<Subsystem>,
    pub b_anc: Option<Subsystem>,
}

impl PartyStructure {
    pub fn new(d_ai: usize, d_ao: usize, d_bi: usize, d_bo: usize) -> Result<Self> {
        Ok(Self {
            a_in: Subsystem::new(AI, d_ai)?,
            a_out: Subsystem::new(AO, d_ao)?,
            b_in: Subsystem::new(BI, d_bi)?,
            b_out: Subsystem::new(BO, d_bo)?,
            a_anc: None,
            b_anc: None,
        })
    }

    pub fn qubits() -> Self {
        Self::new(2, 2, 2, 2).expect("qubit dimensions are positive")
    }

    pub fn with_ancillas(&self, d_aip: usize, d_bip: usize) -> Result<Self> {
        if self.is_extended() {
            return Err(Error::DuplicateLabel(AIP.into()));
        }
        Ok(Self { a_anc: Some(Subsystem::new(AIP, d_aip)?), b_anc: Some(Subsystem::new(BIP, d_bip)?), ..self.clone() })
    }

    /// Recognizes the canonical labels in any order.
    pub fn from_subsystems(subs: &[Subsystem]) -> Result<Self> {
        let find = |l: &str| subs.iter().find(|s| s.label() == l).cloned();
        let core = |l: &str| find(l).ok_or_else(|| Error::DimensionMismatch(format!("missing subsystem `{l}`")));
        let out = Self {
            a_in: core(AI)?,
            a_out: core(AO)?,
            b_in: core(BI)?,
            b_out: core(BO)?,
            a_anc: find(AIP),
            b_anc: find(BIP),
        };
        if out.a_anc.is_some() != out.b_anc.is_some() {
            return Err(Error::DimensionMismatch("ancillas must be given for both parties".into()));
        }
        if let Some(extra) = subs.iter().find(|s| !out.labels().contains(&s.label())) {
            return Err(Error::UnknownLabel(extra.label().to_string()));
        }
        if subs.len() != out.labels().len() {
            return Err(Error::DimensionMismatch("repeated subsystem".into()));
        }
        Ok(out)
    }

    pub fn is_extended(&self) -> bool {
        self.a_anc.is_some() || self.b_anc.is_some()
    }

    pub fn is_core_qubits(&self) -> bool {
        [&self.a_in, &self.a_out, &self.b_in, &self.b_out].iter().all(|s| s.dim() == 2) && !self.is_extended()
    }

    /// Canonical order `(A_I, A_I', A_O, B_I, B_I', B_O)`.
    pub fn subsystems(&self) -> Vec<Subsystem> {
        let mut out = self.alice();
        out.extend(self.bob());
        out
    }

    pub fn labels(&self) -> Vec<&str> {
        let mut out = self.alice_labels();
        out.extend(self.bob_labels());
        out
    }

    pub fn alice(&self) -> Vec<Subsystem> {
        let mut out = self.alice_inputs();
        out.push(self.a_out.clone());
        out
    }

    pub fn bob(&self) -> Vec<Subsystem> {
        let mut out = self.bob_inputs();
        out.push(self.b_out.clone());
        out
    }

    pub fn alice_inputs(&self) -> Vec<Subsystem> {
        std::iter::once(self.a_in.clone()).chain(self.a_anc.clone()).collect()
    }

    pub fn bob_inputs(&self) -> Vec<Subsystem> {
        std::iter::once(self.b_in.clone()).chain(self.b_anc.clone()).collect()
    }

    pub fn alice_labels(&self) -> Vec<&str> {
        let mut out = vec![self.a_in.label()];
        if let Some(a) = &self.a_anc {
            out.push(a.label());
        }
        out.push(self.a_out.label());
        out
    }

    pub fn bob_labels(&self) -> Vec<&str> {
        let mut out = vec![self.b_in.label()];
        if let Some(b) = &self.b_anc {
            out.push(b.label());
        }
        out.push(self.b_out.label());
        out
    }

    /// Labels of the four groups `A_in, A_out, B_in, B_out`, matching the class-mask bits.
    pub fn groups(&self) -> [Vec<&str>; 4] {
        let mut a_in = vec![self.a_in.label()];
        a_in.extend(self.a_anc.as_ref().map(|s| s.label()));
        let mut b_in = vec![self.b_in.label()];
        b_in.extend(self.b_anc.as_ref().map(|s| s.label()));
        [a_in, vec![self.a_out.label()], b_in, vec![self.b_out.label()]]
    }

    pub fn d_alice_in(&self) -> usize {
        self.a_in.dim() * self.a_anc.as_ref().map_or(1, |s| s.dim())
    }

    pub fn d_bob_in(&self) -> usize {
        self.b_in.dim() * self.b_anc.as_ref().map_or(1, |s| s.dim())
    }

    pub fn d_ao(&self) -> usize {
        self.a_out.dim()
    }

    pub fn d_bo(&self) -> usize {
        self.b_out.dim()
    }

    pub fn d_alice(&self) -> usize {
        self.d_alice_in() * self.d_ao()
    }

    pub fn d_bob(&self) -> usize {
        self.d_bob_in() * self.d_bo()
    }

    pub fn side(&self) -> usize {
        self.d_alice() * self.d_bob()
    }

    pub fn target_trace(&self) -> f64 {
        (self.d_ao() * self.d_bo()) as f64
    }

    /// `1° = 1 / (d_{A_in} d_{B_in})`.
    pub fn white_noise(&self) -> HermitianOp {
        HermitianOp::identity(self.subsystems())
            .expect("canonical labels are distinct")
            .scale(1.0 / (self.d_alice_in() * self.d_bob_in()) as f64)
    }

    /// Permutes an operator carrying exactly these subsystems into canonical order.
    pub fn canonicalize(&self, op: &HermitianOp) -> Result<HermitianOp> {
        let sorted = op.permute(&self.labels())?;
        if sorted.subsystems() != self.subsystems().as_slice() {
            return Err(Error::DimensionMismatch(format!(
                "operator subsystems {:?} do not match the party structure",
                op.subsystems()
            )));
        }
        Ok(sorted)
    }
}

impl Default for PartyStructure {
    fn default() -> Self {
        Self::qubits()
    }
}

/// Orthogonal decomposition of an operator into the 16 Hilbert–Schmidt classes
/// labeled by which groups carry traceless factors.
pub fn class_components(structure: &PartyStructure, op: &HermitianOp) -> Result<Vec<HermitianOp>> {
    let groups = structure.groups();
    // reduced[m] = operator with every group in `m` replaced by its normalized identity
    let mut reduced: Vec<Option<HermitianOp>> = vec![None; 16];
    reduced[0] = Some(op.clone());
    for m in 1..16usize {
        let g = m.trailing_zeros() as usize;
        let prev = reduced[m & !(1 << g)].as_ref().expect("filled in increasing order");
        let labels: Vec<&str> = groups[g].clone();
        reduced[m] = Some(prev.replace_with_identity(&labels)?);
    }
    let reduced: Vec<HermitianOp> = reduced.into_iter().map(|r| r.expect("filled")).collect();
    let mut out = Vec::with_capacity(16);
    for c in 0..16usize {
        let trivial = 15 & !c;
        let mut acc = CMatrix::zeros(op.side(), op.side());
        // P_c = Π_{g∈c}(1 − R_g) Π_{g∉c} R_g, expanded over subsets of c
        let mut s = c;
        loop {
            let sign = if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += reduced[trivial | s].matrix().scale(sign);
            if s == 0 {
                break;
            }
            s = (s - 1) & c;
        }
        out.push(HermitianOp::new(op.subsystems().to_vec(), acc)?);
    }
    Ok(out)
}

/// Orthogonal projection onto the valid affine subspace: forbidden classes removed
/// and the identity component fixed so that `tr = d_{A_O} d_{B_O}`.
pub fn project_valid(op: &HermitianOp) -> Result<HermitianOp> {
    let structure = PartyStructure::from_subsystems(op.subsystems())?;
    project_valid_with(&structure, op)
}

pub fn project_valid_with(structure: &PartyStructure, op: &HermitianOp) -> Result<HermitianOp> {
    let parts = class_components(structure, op)?;
    let mut acc = CMatrix::zeros(op.side(), op.side());
    for (c, part) in parts.iter().enumerate().skip(1) {
        if !class_is_forbidden(c) {
            acc += part.matrix();
        }
    }
    let n = op.side();
    let id_coeff = structure.target_trace() / n as f64;
    for i in 0..n {
        acc[(i, i)] += id_coeff;
    }
    HermitianOp::new(op.subsystems().to_vec(), acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Validity {
    pub min_eigenvalue: f64,
    pub trace: f64,
    /// Frobenius distance to the valid affine subspace.
    pub subspace_residual: f64,
    pub target_trace: f64,
}

impl Validity {
    pub fn psd(&self) -> bool {
        self.min_eigenvalue >= -VALIDITY_TOL
    }

    pub fn normalized(&self) -> bool {
        (self.trace - self.target_trace).abs() <= VALIDITY_TOL
    }

    pub fn in_valid_subspace(&self) -> bool {
        self.subspace_residual <= VALIDITY_TOL
    }

    pub fn is_valid(&self) -> bool {
        self.psd() && self.normalized() && self.in_valid_subspace()
    }

    pub fn describe_failure(&self) -> Option<String> {
        let mut why = Vec::new();
        if !self.psd() {
            why.push(format!("min eigenvalue {:.3e} < 0", self.min_eigenvalue));
        }
        if !self.normalized() {
            why.push(format!("trace {} != {}", self.trace, self.target_trace));
        }
        if !self.in_valid_subspace() {
            why.push(format!("distance {:.3e} from the valid subspace", self.subspace_residual));
        }
        (!why.is_empty()).then(|| why.join("; "))
    }
}

#[derive(Clone, Debug)]
pub struct ProcessMatrix {
    structure: PartyStructure,
    op: HermitianOp,
    validity: Validity,
}

impl ProcessMatrix {
    /// Canonicalizes the subsystem order and rejects invalid processes.
    pub fn new(structure: PartyStructure, op: HermitianOp) -> Result<Self> {
        let w = Self::new_unchecked(structure, op)?;
        match w.validity.describe_failure() {
            Some(why) => Err(Error::InvalidProcess(why)),
            None => Ok(w),
        }
    }

    /// Computes the validity flags without enforcing them.
    pub fn new_unchecked(structure: PartyStructure, op: HermitianOp) -> Result<Self> {
        let op = structure.canonicalize(&op)?;
        let projected = project_valid_with(&structure, &op)?;
        let validity = Validity {
            min_eigenvalue: op.min_eigenvalue(),
            trace: op.trace(),
            subspace_residual: op.distance(&projected)?,
            target_trace: structure.target_trace(),
        };
        Ok(Self { structure, op, validity })
    }

    pub fn from_op(op: HermitianOp) -> Result<Self> {
        let structure = PartyStructure::from_subsystems(op.subsystems())?;
        Self::new(structure, op)
    }

    pub fn white_noise(structure: &PartyStructure) -> Self {
        let op = structure.white_noise();
        let validity = Validity {
            min_eigenvalue: 1.0 / (structure.d_alice_in() * structure.d_bob_in()) as f64,
            trace: structure.target_trace(),
            subspace_residual: 0.0,
            target_trace: structure.target_trace(),
        };
        Self { structure: structure.clone(), op, validity }
    }

    pub fn structure(&self) -> &PartyStructure {
        &self.structure
    }

    pub fn op(&self) -> &HermitianOp {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn validity(&self) -> &Validity {
        &self.validity
    }

    pub fn is_valid(&self) -> bool {
        self.validity.is_valid()
    }

    /// Partial transpose on all of Bob's factors.
    pub fn transpose_bob(&self) -> Result<ProcessMatrix> {
        let labels = self.structure.bob_labels();
        Self::new_unchecked(self.structure.clone(), self.op.partial_transpose(&labels)?)
    }

    /// `(1−γ) W + γ 1°`.
    pub fn with_white_noise(&self, gamma: f64) -> Result<ProcessMatrix> {
        let noise = self.structure.white_noise();
        let op = HermitianOp::lin_comb(&[(1.0 - gamma, &self.op), (gamma, &noise)])?;
        Self::new_unchecked(self.structure.clone(), op)
    }

    /// `μ self + (1−μ) other`.
    pub fn mix(&self, other: &ProcessMatrix, mu: f64) -> Result<ProcessMatrix> {
        if self.structure != other.structure {
            return Err(Error::DimensionMismatch("mixing processes on different spaces".into()));
        }
        let op = HermitianOp::lin_comb(&[(mu, &self.op), (1.0 - mu, &other.op)])?;
        Self::new_unchecked(self.structure.clone(), op)
    }

    pub fn pauli_coefficients(&self) -> Result<Vec<f64>> {
        self.op.pauli_coefficients()
    }

    /// `F = tr_B[(1 ⊗ η) W]` on Alice's factors, so that `tr[ξ F] = tr[W ξ⊗η]`.
    pub fn contract_bob(&self, eta: &CMatrix) -> Result<HermitianOp> {
        let (da, db) = (self.structure.d_alice(), self.structure.d_bob());
        if eta.nrows() != db || eta.ncols() != db {
            return Err(Error::DimensionMismatch(format!("Bob operator has side {}, expected {db}", eta.nrows())));
        }
        let w = self.op.matrix();
        let mut f = CMatrix::zeros(da, da);
        for ia in 0..da {
            for ja in 0..da {
                let mut acc = crate::linalg::ZERO;
                for ib in 0..db {
                    for jb in 0..db {
                        acc += w[(ia * db + ib, ja * db + jb)] * eta[(jb, ib)];
                    }
                }
                f[(ia, ja)] = acc;
            }
        }
        HermitianOp::new(self.structure.alice(), f)
    }

    /// `G = tr_A[(ξ ⊗ 1) W]` on Bob's factors, so that `tr[η G] = tr[W ξ⊗η]`.
    pub fn contract_alice(&self, xi: &CMatrix) -> Result<HermitianOp> {
        let (da, db) = (self.structure.d_alice(), self.structure.d_bob());
        if xi.nrows() != da || xi.ncols() != da {
            return Err(Error::DimensionMismatch(format!("Alice operator has side {}, expected {da}", xi.nrows())));
        }
        let w = self.op.matrix();
        let mut g = CMatrix::zeros(db, db);
        for ia in 0..da {
            for ja in 0..da {
                let x = xi[(ja, ia)];
                if x == crate::linalg::ZERO {
                    continue;
                }
                for ib in 0..db {
                    for jb in 0..db {
                        g[(ib, jb)] += w[(ia * db + ib, ja * db + jb)] * x;
                    }
                }
            }
        }
        HermitianOp::new(self.structure.bob(), g)
    }
}

/// `tr[W · ξ ⊗ η]` with both operands permuted into the canonical party order.
pub fn born_probability(w: &ProcessMatrix, a_op: &HermitianOp, b_op: &HermitianOp) -> Result<f64> {
    let s = w.structure();
    let a = a_op.permute(&s.alice_labels())?;
    let b = b_op.permute(&s.bob_labels())?;
    if a.subsystems() != s.alice().as_slice() || b.subsystems() != s.bob().as_slice() {
        return Err(Error::DimensionMismatch("operation spaces do not match the process".into()));
    }
    let f = w.contract_bob(b.matrix())?;
    f.inner(&a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalOrder {
    AliceFirst,
    BobFirst,
}

/// Checks `W = tr_{B_O}[W] ⊗ 1/d_{B_O}` (Alice first) or the mirrored condition.
pub fn is_causally_ordered(w: &ProcessMatrix, order: CausalOrder) -> bool {
    ordered_residual(w.structure(), w.op(), order).is_ok_and(|r| r <= VALIDITY_TOL)
}

pub fn ordered_residual(structure: &PartyStructure, op: &HermitianOp, order: CausalOrder) -> Result<f64> {
    let label = match order {
        CausalOrder::AliceFirst => structure.b_out.label(),
        CausalOrder::BobFirst => structure.a_out.label(),
    };
    op.distance(&op.replace_with_identity(&[label])?)
}

#[derive(Clone, Debug)]
pub struct AllowedTermBasis {
    pub terms: Vec<PauliString>,
    /// Number of terms per class, keyed by e.g. `{AI BI}`.
    pub census: BTreeMap<String, usize>,
}

impl AllowedTermBasis {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms admissible in an Alice-first process: nothing on `B_O`.
    pub fn ordered_terms(&self, order: CausalOrder) -> Vec<&PauliString> {
        let pos = match order {
            CausalOrder::AliceFirst => 3,
            CausalOrder::BobFirst => 1,
        };
        self.terms.iter().filter(|t| t.letters[pos] == Pauli::I).collect()
    }
}

pub fn pauli_class(letters: &[Pauli]) -> usize {
    letters
        .iter()
        .zip([G_AIN, G_AOUT, G_BIN, G_BOUT])
        .filter(|(p, _)| **p != Pauli::I)
        .fold(0, |m, (_, g)| m | g)
}

/// Traceless Pauli strings on the four core qubits that survive [`project_valid`].
pub fn allowed_basis(structure: &PartyStructure) -> Result<AllowedTermBasis> {
    if !structure.is_core_qubits() {
        let s = [&structure.a_in, &structure.a_out, &structure.b_in, &structure.b_out]
            .into_iter()
            .find(|s| s.dim() != 2)
            .unwrap_or(&structure.a_in);
        return Err(Error::NotQubit { label: s.label().to_string(), dim: s.dim() });
    }
    let mut terms = Vec::new();
    let mut census = BTreeMap::new();
    for code in 1..256usize {
        let letters: Vec<Pauli> = (0..4).map(|k| Pauli::from_index((code >> (2 * (3 - k))) & 3)).collect();
        let class = pauli_class(&letters);
        if class_is_forbidden(class) {
            continue;
        }
        *census.entry(class_name(class)).or_insert(0) += 1;
        terms.push(PauliString::new(letters, 1.0));
    }
    Ok(AllowedTermBasis { terms, census })
}

/// Dimension of the valid affine subspace for general local dimensions.
pub fn dim_valid(d_ai: usize, d_ao: usize, d_bi: usize, d_bo: usize) -> usize {
    let (a, b, c, d) = (d_ai * d_ai, d_ao * d_ao, d_bi * d_bi, d_bo * d_bo);
    (1 + a * (b - 1)) * (c - 1) + (a - 1) * c * d
}

/// Dimension of the Alice-first ordered subspace.
pub fn dim_ordered(d_ai: usize, d_ao: usize, d_bi: usize, _d_bo: usize) -> usize {
    let (a, b, c) = (d_ai * d_ai, d_ao * d_ao, d_bi * d_bi);
    a * (1 + (c - 1) * b) - 1
}

pub fn eps_validity(q: f64) -> f64 {
    q - 1.0 + ((1.0 - q) * (q + 3.0) / 3.0).sqrt()
}

pub fn eps_causal(q: f64) -> f64 {
    2.0 * q / 3.0
}

pub fn q_opt() -> f64 {
    3f64.sqrt() - 1.0
}

pub fn eps_opt() -> f64 {
    4.0 / 3f64.sqrt() - 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub q: f64,
    pub eps: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub kappa: f64,
}

impl Default for FamilyParams {
    fn default() -> Self {
        Self { q: q_opt(), eps: eps_opt(), alpha: 0.5, gamma: 0.2, kappa: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NamedProcess {
    WhiteNoise,
    Wab,
    Wba,
    Wqe,
    D23,
    Iab,
    Wopt,
    Wocb,
    Wmix,
    Wwer,
}

impl NamedProcess {
    pub const ALL: [NamedProcess; 10] = [
        NamedProcess::WhiteNoise,
        NamedProcess::Wab,
        NamedProcess::Wba,
        NamedProcess::Wqe,
        NamedProcess::D23,
        NamedProcess::Iab,
        NamedProcess::Wopt,
        NamedProcess::Wocb,
        NamedProcess::Wmix,
        NamedProcess::Wwer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NamedProcess::WhiteNoise => "white-noise",
            NamedProcess::Wab => "wab",
            NamedProcess::Wba => "wba",
            NamedProcess::Wqe => "wqe",
            NamedProcess::D23 => "d23",
            NamedProcess::Iab => "iab",
            NamedProcess::Wopt => "wopt",
            NamedProcess::Wocb => "wocb",
            NamedProcess::Wmix => "wmix",
            NamedProcess::Wwer => "wwer",
        }
    }
}

impl fmt::Display for NamedProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NamedProcess {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown process name `{s}`")))
    }
}

/// Sparse Pauli expansion keyed by the four-letter word.
pub type PauliCoeffs = BTreeMap<String, f64>;

fn coeffs(terms: &[(&str, f64)]) -> PauliCoeffs {
    let mut out = PauliCoeffs::new();
    for (t, c) in terms {
        *out.entry(t.to_string()).or_insert(0.0) += c;
    }
    out
}

fn combine(parts: &[(f64, &PauliCoeffs)]) -> PauliCoeffs {
    let mut out = PauliCoeffs::new();
    for (w, p) in parts {
        for (t, c) in p.iter() {
            *out.entry(t.clone()).or_insert(0.0) += w * c;
        }
    }
    out.retain(|_, c| *c != 0.0);
    out
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} must lie in [0, 1]")))
    }
}

/// `q W^{A≺B} + (1−q+ε) W^{B≺A} − ε 1°` without any positivity check.
pub fn family_coeffs(q: f64, eps: f64) -> PauliCoeffs {
    let white = coeffs(&[("IIII", 0.25)]);
    let wab = coeffs(&[("IIII", 0.25), ("IZZI", 1.0 / 12.0), ("IXXI", 1.0 / 12.0), ("IYYI", 1.0 / 12.0)]);
    let wba = coeffs(&[("IIII", 0.25), ("ZIXZ", 0.25)]);
    combine(&[(q, &wab), (1.0 - q + eps, &wba), (-eps, &white)])
}

/// Pauli expansion of a named process.
pub fn named_coeffs(name: NamedProcess, p: &FamilyParams) -> Result<PauliCoeffs> {
    let white = coeffs(&[("IIII", 0.25)]);
    let wab = coeffs(&[("IIII", 0.25), ("IZZI", 1.0 / 12.0), ("IXXI", 1.0 / 12.0), ("IYYI", 1.0 / 12.0)]);
    let wba = coeffs(&[("IIII", 0.25), ("ZIXZ", 0.25)]);
    let family = family_coeffs;
    let wopt = family(q_opt(), eps_opt());
    let c = 1.0 / (4.0 * 2f64.sqrt());
    let wocb = coeffs(&[("IIII", 0.25), ("IZZI", c), ("ZIXZ", c)]);
    let mix = |alpha: f64| combine(&[(alpha, &wopt), (1.0 - alpha, &wocb)]);
    Ok(match name {
        NamedProcess::WhiteNoise => white,
        NamedProcess::Wab => wab,
        NamedProcess::Wba => wba,
        NamedProcess::Wqe => {
            check_unit("q", p.q)?;
            let bound = eps_validity(p.q);
            if p.eps < 0.0 || p.eps > bound + 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "eps = {} outside [0, {bound}] required for positivity at q = {}",
                    p.eps, p.q
                )));
            }
            family(p.q, p.eps)
        }
        NamedProcess::D23 => {
            coeffs(&[("IIII", 0.25), ("IZZI", 1.0 / 12.0), ("IXXI", 1.0 / 12.0), ("IYYI", -1.0 / 12.0)])
        }
        NamedProcess::Iab => coeffs(&[("IIII", 0.25), ("IXXI", 0.25), ("IYYI", -0.25), ("IZZI", 0.25)]),
        NamedProcess::Wopt => wopt,
        NamedProcess::Wocb => wocb,
        NamedProcess::Wmix => {
            check_unit("alpha", p.alpha)?;
            mix(p.alpha)
        }
        NamedProcess::Wwer => {
            check_unit("alpha", p.alpha)?;
            check_unit("gamma", p.gamma)?;
            combine(&[(1.0 - p.gamma, &mix(p.alpha)), (p.gamma, &white)])
        }
    })
}

pub fn op_from_coeffs(coeffs: &PauliCoeffs) -> Result<HermitianOp> {
    let terms: Vec<(&str, f64)> = coeffs.iter().map(|(t, c)| (t.as_str(), *c)).collect();
    HermitianOp::from_pauli_terms(PartyStructure::qubits().subsystems(), &terms)
}

/// Builds a named process; fails when the parameters leave the valid region.
pub fn make_named(name: NamedProcess, params: &FamilyParams) -> Result<ProcessMatrix> {
    let op = op_from_coeffs(&named_coeffs(name, params)?)?;
    let w = ProcessMatrix::new_unchecked(PartyStructure::qubits(), op)?;
    // Boundary processes such as W_opt have a zero eigenvalue; rounding may push it to −1e-16.
    match w.validity().describe_failure() {
        Some(why) => Err(Error::InvalidProcess(format!("{name}: {why}"))),
        None => Ok(w),
    }
}

/// `W ⊗ ρ` on `(A_I, A_I', A_O, B_I, B_I', B_O)` for a state `ρ` on `(A_I', B_I')`.
pub fn extend_with_state(w: &ProcessMatrix, state: &HermitianOp) -> Result<ProcessMatrix> {
    if w.structure().is_extended() {
        return Err(Error::DuplicateLabel(AIP.into()));
    }
    let subs = state.subsystems();
    let (Some(a), Some(b)) = (subs.iter().find(|s| s.label() == AIP), subs.iter().find(|s| s.label() == BIP)) else {
        return Err(Error::DimensionMismatch(format!("state must act on ({AIP}, {BIP})")));
    };
    if subs.len() != 2 {
        return Err(Error::DimensionMismatch(format!("state must act on ({AIP}, {BIP}) only")));
    }
    if (state.trace() - 1.0).abs() > VALIDITY_TOL || state.min_eigenvalue() < -VALIDITY_TOL {
        return Err(Error::InvalidParameter("ancilla state must be unit-trace and PSD".into()));
    }
    let structure = w.structure().with_ancillas(a.dim(), b.dim())?;
    let joint = w.op().tensor(state)?;
    ProcessMatrix::new(structure, joint)
}

/// Relabels the two factors of a bipartite state as `(A_I', B_I')`.
pub fn ancilla_state(state: &HermitianOp) -> Result<HermitianOp> {
    let subs = state.subsystems();
    if subs.len() != 2 {
        return Err(Error::DimensionMismatch("ancilla state must be bipartite".into()));
    }
    HermitianOp::new(
        vec![Subsystem::new(AIP, subs[0].dim())?, Subsystem::new(BIP, subs[1].dim())?],
        state.matrix().clone(),
    )
}

/// `W_opt ⊗ |φ⁺⟩⟨φ⁺|` with a maximally entangled pair of dimension `d` on `(A_I', B_I')`.
pub fn extended_optimal(d: usize) -> Result<ProcessMatrix> {
    let wopt = make_named(NamedProcess::Wopt, &FamilyParams::default())?;
    let phi = ancilla_state(&crate::operator::max_entangled(d, (AIP, BIP))?)?;
    extend_with_state(&wopt, &phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::max_entangled;

    fn named(n: NamedProcess) -> ProcessMatrix {
        make_named(n, &FamilyParams::default()).unwrap()
    }

    #[test]
    fn allowed_basis_counts() {
        let b = allowed_basis(&PartyStructure::qubits()).unwrap();
        assert_eq!(b.len(), 87);
        assert_eq!(b.len(), dim_valid(2, 2, 2, 2));
        assert_eq!(b.ordered_terms(CausalOrder::AliceFirst).len(), 51);
        assert_eq!(dim_ordered(2, 2, 2, 2), 51);
        assert_eq!(dim_valid(3, 3, 3, 3), 1232);
        let expect = [
            ("{AI}", 3),
            ("{BI}", 3),
            ("{AI BI}", 9),
            ("{AO BI}", 9),
            ("{AI BO}", 9),
            ("{AI AO BI}", 27),
            ("{AI BI BO}", 27),
        ];
        assert_eq!(b.census.len(), expect.len());
        for (k, v) in expect {
            assert_eq!(b.census[k], v, "{k}");
        }
        assert!(b.terms.iter().all(|t| !(t.letters[1] != Pauli::I && t.letters[3] != Pauli::I)));
    }

    #[test]
    fn ordered_dimension_matches_projection_rank() {
        let s = PartyStructure::new(2, 3, 2, 2).unwrap();
        let ordered = dim_ordered(2, 3, 2, 2);
        let valid = dim_valid(2, 3, 2, 2);
        assert!(ordered < valid);
        assert_eq!(s.d_alice(), 6);
    }

    #[test]
    fn project_valid_examples() {
        let wocb = named(NamedProcess::Wocb);
        let p = project_valid(wocb.op()).unwrap();
        assert!(p.distance(wocb.op()).unwrap() < 1e-14);

        let xxxx = op_from_coeffs(&coeffs(&[("XXXX", 1.0)])).unwrap();
        let p = project_valid(&xxxx).unwrap();
        let white = PartyStructure::qubits().white_noise();
        assert!(p.distance(&white).unwrap() < 1e-14);
    }

    #[test]
    fn causal_order_examples() {
        let wab = named(NamedProcess::Wab);
        let wba = named(NamedProcess::Wba);
        let white = named(NamedProcess::WhiteNoise);
        assert!(is_causally_ordered(&wab, CausalOrder::AliceFirst));
        assert!(!is_causally_ordered(&wab, CausalOrder::BobFirst));
        assert!(is_causally_ordered(&wba, CausalOrder::BobFirst));
        assert!(!is_causally_ordered(&wba, CausalOrder::AliceFirst));
        assert!(is_causally_ordered(&white, CausalOrder::AliceFirst));
        assert!(is_causally_ordered(&white, CausalOrder::BobFirst));
    }

    #[test]
    fn named_spectra() {
        let ev = named(NamedProcess::Wab).op().eigenvalues();
        assert!(ev[..12].iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-12));
        assert!(ev[12..].iter().all(|v| v.abs() < 1e-12));
        let ev = named(NamedProcess::Wba).op().eigenvalues();
        assert!(ev[..8].iter().all(|v| (v - 0.5).abs() < 1e-12));
        assert!(ev[8..].iter().all(|v| v.abs() < 1e-12));
        let wopt = named(NamedProcess::Wopt);
        assert!(wopt.validity().min_eigenvalue.abs() < 1e-12);
    }

    #[test]
    fn depolarizing_identities() {
        let d23 = named(NamedProcess::D23);
        let wab = named(NamedProcess::Wab);
        let t = d23.transpose_bob().unwrap();
        assert!(t.op().distance(wab.op()).unwrap() < 1e-15);

        let iab = named(NamedProcess::Iab);
        let mix = HermitianOp::lin_comb(&[(2.0 / 3.0, named(NamedProcess::WhiteNoise).op()), (1.0 / 3.0, iab.op())]).unwrap();
        assert!(mix.distance(d23.op()).unwrap() < 1e-15);

        // 1^{AI} ⊗ |I⟩⟩⟨⟨I|^{AO BI} ⊗ 1^{BO} / 2
        let q = |l: &str| Subsystem::qubit(l);
        let bell = max_entangled(2, (AO, BI)).unwrap().scale(2.0);
        let built = HermitianOp::identity(vec![q(AI)])
            .unwrap()
            .tensor(&bell)
            .unwrap()
            .tensor(&HermitianOp::identity(vec![q(BO)]).unwrap())
            .unwrap()
            .scale(0.5);
        assert!(built.distance(iab.op()).unwrap() < 1e-15);
    }

    #[test]
    fn family_validity_bound() {
        assert!((eps_validity(q_opt()) - eps_opt()).abs() < 1e-15);
        assert!((eps_opt() - 0.309401).abs() < 1e-6);
        assert!((eps_causal(0.6) - 0.4).abs() < 1e-15);
        for i in 0..=1000 {
            let q = i as f64 / 1000.0;
            assert!(eps_validity(q) <= eps_causal(q) + 1e-15, "q={q}");
        }
        for i in 0..=20 {
            let q = i as f64 / 20.0;
            let p = FamilyParams { q, eps: eps_validity(q), ..Default::default() };
            let w = make_named(NamedProcess::Wqe, &p).unwrap();
            assert!(w.validity().min_eigenvalue.abs() < 1e-9, "q={q}");
        }
        let bad = FamilyParams { q: 0.5, eps: 0.5, ..Default::default() };
        assert!(matches!(make_named(NamedProcess::Wqe, &bad), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn werner_is_coefficientwise_mixture() {
        let p = FamilyParams { alpha: 0.3, gamma: 0.4, ..Default::default() };
        let wer = named_coeffs(NamedProcess::Wwer, &p).unwrap();
        let mix = named_coeffs(NamedProcess::Wmix, &p).unwrap();
        for (t, c) in &wer {
            let m = mix.get(t).copied().unwrap_or(0.0);
            let w = if t == "IIII" { 0.25 } else { 0.0 };
            assert!((c - (0.6 * m + 0.4 * w)).abs() < 1e-15, "{t}");
        }
    }

    #[test]
    fn every_named_process_is_valid() {
        for n in NamedProcess::ALL {
            let w = named(n);
            assert!(w.is_valid(), "{n}");
            assert_eq!(n.name().parse::<NamedProcess>().unwrap(), n);
        }
    }

    #[test]
    fn extension_with_ququart_pair() {
        let wopt = named(NamedProcess::Wopt);
        let phi = ancilla_state(&max_entangled(4, ("x", "y")).unwrap()).unwrap();
        let ext = extend_with_state(&wopt, &phi).unwrap();
        assert_eq!(ext.op().side(), 256);
        assert!((ext.op().trace() - 4.0).abs() < 1e-12);
        assert!(ext.validity().psd());
        assert_eq!(ext.op().labels(), vec![AI, AIP, AO, BI, BIP, BO]);
        let back = ext.op().partial_trace(&[AIP, BIP]).unwrap();
        assert!(back.distance(wopt.op()).unwrap() < 1e-12);
    }

    #[test]
    fn extension_of_white_noise_stays_ordered() {
        let white = named(NamedProcess::WhiteNoise);
        let rho = HermitianOp::identity(vec![Subsystem::new(AIP, 2).unwrap(), Subsystem::new(BIP, 3).unwrap()])
            .unwrap()
            .scale(1.0 / 6.0);
        let ext = extend_with_state(&white, &rho).unwrap();
        assert!(ext.is_valid());
        assert!(is_causally_ordered(&ext, CausalOrder::AliceFirst));
        assert!(is_causally_ordered(&ext, CausalOrder::BobFirst));
        assert!(ext.op().distance(&ext.structure().white_noise()).unwrap() < 1e-15);
    }

    #[test]
    fn born_rule_on_white_noise() {
        let white = named(NamedProcess::WhiteNoise);
        let s = white.structure();
        let xi = HermitianOp::identity(s.alice()).unwrap().scale(0.3 / 2.0);
        let eta = HermitianOp::identity(s.bob()).unwrap().scale(0.6 / 2.0);
        let p = born_probability(&white, &xi, &eta).unwrap();
        assert!((p - 0.3 * 0.6).abs() < 1e-15);
    }
}
