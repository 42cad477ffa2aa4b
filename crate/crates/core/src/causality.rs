//! Causal separability: random robustness, witnesses, and causal correlations.

use serde::{Deserialize, Serialize};

use crate::basis::ProductBasis;
use crate::conic::{self, Block, LinearFunctional, SolutionSummary, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg::SparseHermitian;
use crate::operator::HermitianOp;
use crate::process::{
    class_components, class_is_forbidden, family_coeffs, is_causally_ordered, make_named, op_from_coeffs,
    ordered_residual, CausalOrder, FamilyParams, NamedProcess, PartyStructure, ProcessMatrix, BI, BO,
};

/// Robustness at or below this value counts as causally separable.
pub const SEPARABLE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Decomposition {
    /// Unnormalized Alice-first component.
    pub alice_first: HermitianOp,
    /// Unnormalized Bob-first component.
    pub bob_first: HermitianOp,
}

#[derive(Clone, Debug)]
pub struct Witness {
    pub s: HermitianOp,
}

impl Witness {
    pub fn new(s: HermitianOp) -> Result<Self> {
        PartyStructure::from_subsystems(s.subsystems())?;
        Ok(Self { s })
    }

    fn structure(&self) -> PartyStructure {
        PartyStructure::from_subsystems(self.s.subsystems()).expect("checked at construction")
    }

    /// `tr[S · 1°]`, equal to 1 for normalized witnesses.
    pub fn normalization(&self) -> f64 {
        self.s.inner(&self.structure().white_noise()).expect("same space")
    }

    /// `tr[S · W]`.
    pub fn value(&self, w: &ProcessMatrix) -> Result<f64> {
        self.s.inner(w.op())
    }
}

#[derive(Clone, Debug)]
pub struct RobustnessReport {
    pub lambda_opt: f64,
    /// Components with `W + λ 1° = alice_first + bob_first`.
    pub decomposition: Option<Decomposition>,
    /// Present when `λ > 0`; normalized so `tr[S 1°] = 1` and `tr[S W] = −λ`.
    pub witness: Option<Witness>,
    pub solver: SolutionSummary,
}

impl RobustnessReport {
    pub fn is_separable(&self) -> bool {
        self.lambda_opt <= SEPARABLE_TOL
    }
}

/// The random-robustness program, with components parametrized as
/// `X_1 ⊗ 1/d_{B_O}` and `X_2` with `1/d_{A_O}` inserted on `A_O`.
pub struct RobustnessProgram {
    pub program: conic::ConeProgram,
    structure: PartyStructure,
    basis: ProductBasis,
    rows: Vec<Vec<usize>>,
    x1: usize,
    x2: usize,
    lambda: usize,
}

impl RobustnessProgram {
    pub fn new(w: &ProcessMatrix) -> Result<Self> {
        let structure = w.structure().clone();
        let dims = w.op().dims();
        let n = dims.len();
        let (pos_ao, pos_bo) = (structure.alice_labels().len() - 1, n - 1);
        let basis = ProductBasis::new(&dims);
        let side = structure.side();
        let mut program = conic::ConeProgram::new();
        let x1 = program.add_block(Block::Psd(side / structure.d_bo()));
        let x2 = program.add_block(Block::Psd(side / structure.d_ao()));
        let lambda = program.add_block(Block::Free(1));
        program.set_objective(LinearFunctional::new().vector(lambda, vec![(0, 1.0)]));
        let noise_weight = structure.target_trace();
        let mut rows = Vec::new();
        for idx in basis.indices() {
            let (ao_trivial, bo_trivial) = (idx[pos_ao] == 0, idx[pos_bo] == 0);
            if !ao_trivial && !bo_trivial {
                continue;
            }
            let full = basis.element(&idx);
            let rhs = full.inner(w.matrix());
            let mut f = LinearFunctional::new();
            if bo_trivial {
                f = f.matrix(x1, basis.reduced_element(&idx, &[pos_bo]));
            }
            if ao_trivial {
                f = f.matrix(x2, basis.reduced_element(&idx, &[pos_ao]));
            }
            if idx.iter().all(|&i| i == 0) {
                f = f.vector(lambda, vec![(0, -noise_weight)]);
            }
            program.add_constraint(f, rhs);
            rows.push(idx);
        }
        Ok(Self { program, structure, basis, rows, x1, x2, lambda })
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<RobustnessReport> {
        let sol = conic::solve_with(&self.program, opts)?;
        if !sol.is_acceptable() {
            return Err(Error::Solver(format!(
                "robustness program ended with {:?} after {} iterations (primal residual {:.2e}, dual residual {:.2e}, gap {:.2e})",
                sol.status, sol.iterations, sol.primal_residual, sol.dual_residual, sol.gap
            )));
        }
        let s = &self.structure;
        let lambda_opt = sol.primal[self.lambda].as_vector().expect("free block")[0];
        let x1 = sol.primal[self.x1].as_matrix().expect("psd block");
        let x2 = sol.primal[self.x2].as_matrix().expect("psd block");
        let subs = s.subsystems();
        let no_bo: Vec<_> = subs.iter().filter(|x| x.label() != s.b_out.label()).cloned().collect();
        let no_ao: Vec<_> = subs.iter().filter(|x| x.label() != s.a_out.label()).cloned().collect();
        let labels = s.labels();
        let w1 = HermitianOp::new(no_bo, x1.clone())?
            .embed(std::slice::from_ref(&s.b_out), &labels)?
            .scale(1.0 / s.d_bo() as f64);
        let w2 = HermitianOp::new(no_ao, x2.clone())?
            .embed(std::slice::from_ref(&s.a_out), &labels)?
            .scale(1.0 / s.d_ao() as f64);
        let witness = if lambda_opt > 0.0 {
            let side = s.side();
            let mut acc = SparseHermitian::new(side, Vec::new());
            for (idx, y) in self.rows.iter().zip(&sol.dual) {
                if *y != 0.0 {
                    let mut e = self.basis.element(idx);
                    e.entries.iter_mut().for_each(|v| v.2 *= -y);
                    acc.entries.extend(e.entries);
                }
            }
            Some(Witness { s: HermitianOp::new(subs.clone(), crate::linalg::symmetrize(&acc.to_dense()))? })
        } else {
            None
        };
        Ok(RobustnessReport {
            lambda_opt,
            decomposition: Some(Decomposition { alice_first: w1, bob_first: w2 }),
            witness,
            solver: sol.summary(),
        })
    }
}

/// `R_r(W)`: the least `λ` such that `W + λ 1°` is a sum of causally ordered PSD operators.
pub fn random_robustness(w: &ProcessMatrix) -> Result<RobustnessReport> {
    random_robustness_with(w, &SolverOptions::default())
}

pub fn random_robustness_with(w: &ProcessMatrix, opts: &SolverOptions) -> Result<RobustnessReport> {
    RobustnessProgram::new(w)?.solve(opts)
}

/// `S_W = 1° − (1/4)(1ZZ1 + 1XX1 + 1YY1) − (1/4)(Z1XZ)`.
pub fn witness_sw() -> Witness {
    let s = HermitianOp::from_pauli_terms(
        PartyStructure::qubits().subsystems(),
        &[("IIII", 0.25), ("IZZI", -0.25), ("IXXI", -0.25), ("IYYI", -0.25), ("ZIXZ", -0.25)],
    )
    .expect("qubit register");
    Witness { s }
}

/// Sufficient condition `tr_{A_O} S ⪰ 0` and `tr_{B_O} S ⪰ 0`, with slack `1e-12`.
pub fn witness_check(w: &Witness) -> bool {
    witness_check_tol(w, 1e-12)
}

pub fn witness_check_tol(w: &Witness, tol: f64) -> bool {
    let s = w.structure();
    [s.a_out.label(), s.b_out.label()].iter().all(|l| {
        w.s.partial_trace(&[*l]).map(|r| r.min_eigenvalue() >= -tol).unwrap_or(false)
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WitnessCertificate {
    /// Minimum of `tr[S W]` over causally separable `W`.
    pub min_separable_value: f64,
    pub certified: bool,
    pub solver: SolutionSummary,
}

/// Minimizes `tr[S (W_1 + W_2)]` over valid ordered PSD pairs with total trace
/// `d_{A_O} d_{B_O}`; a nonnegative optimum (up to `1e-7`) certifies `S`.
pub fn witness_certify(w: &Witness) -> Result<WitnessCertificate> {
    let s = w.structure();
    let dims = w.s.dims();
    let n = dims.len();
    let (pos_ao, pos_bo) = (s.alice_labels().len() - 1, n - 1);
    let a_in: Vec<usize> = (0..pos_ao).collect();
    let b_in: Vec<usize> = (pos_ao + 1..pos_bo).collect();
    let c1 = w.s.partial_trace(&[s.b_out.label()])?.scale(1.0 / s.d_bo() as f64);
    let c2 = w.s.partial_trace(&[s.a_out.label()])?.scale(1.0 / s.d_ao() as f64);
    let mut p = conic::ConeProgram::new();
    let x1 = p.add_block(Block::Psd(c1.side()));
    let x2 = p.add_block(Block::Psd(c2.side()));
    p.set_objective(
        LinearFunctional::new()
            .matrix(x1, SparseHermitian::from_dense(c1.matrix(), 0.0))
            .matrix(x2, SparseHermitian::from_dense(c2.matrix(), 0.0)),
    );
    p.add_constraint(
        LinearFunctional::new()
            .matrix(x1, SparseHermitian::identity(c1.side()))
            .matrix(x2, SparseHermitian::identity(c2.side())),
        s.target_trace(),
    );
    let basis = ProductBasis::new(&dims);
    for idx in basis.indices() {
        // Alice-first: no component nontrivial on A_O with every B input trivial
        if idx[pos_bo] == 0 && idx[pos_ao] != 0 && b_in.iter().all(|&k| idx[k] == 0) {
            p.add_constraint(LinearFunctional::new().matrix(x1, basis.reduced_element(&idx, &[pos_bo])), 0.0);
        }
        if idx[pos_ao] == 0 && idx[pos_bo] != 0 && a_in.iter().all(|&k| idx[k] == 0) {
            p.add_constraint(LinearFunctional::new().matrix(x2, basis.reduced_element(&idx, &[pos_ao])), 0.0);
        }
    }
    let sol = conic::solve_with(&p, &SolverOptions::default())?;
    if !sol.is_acceptable() {
        return Err(Error::Solver(format!("witness certification ended with {:?}", sol.status)));
    }
    Ok(WitnessCertificate {
        min_separable_value: sol.primal_objective,
        certified: sol.primal_objective >= -1e-7,
        solver: sol.summary(),
    })
}

/// Verifies the decomposition invariants of a report with `λ ≤ 0`.
pub fn separable_decomposition_check(w: &ProcessMatrix, report: &RobustnessReport) -> bool {
    let tol = 1e-7;
    if report.lambda_opt > tol {
        return false;
    }
    let Some(d) = &report.decomposition else { return false };
    let s = w.structure();
    let target = HermitianOp::lin_comb(&[(1.0, w.op()), (report.lambda_opt, &s.white_noise())]).expect("same space");
    let Ok(sum) = d.alice_first.checked_add(&d.bob_first) else { return false };
    let ordered = |op: &HermitianOp, order| ordered_residual(s, op, order).is_ok_and(|r| r <= tol);
    let in_subspace = |op: &HermitianOp| {
        class_components(s, op).is_ok_and(|parts| {
            parts.iter().enumerate().all(|(c, part)| !class_is_forbidden(c) || part.frobenius_norm() <= tol)
        })
    };
    sum.distance(&target).is_ok_and(|e| e <= tol)
        && d.alice_first.min_eigenvalue() >= -tol
        && d.bob_first.min_eigenvalue() >= -tol
        && ordered(&d.alice_first, CausalOrder::AliceFirst)
        && ordered(&d.bob_first, CausalOrder::BobFirst)
        && in_subspace(&d.alice_first)
        && in_subspace(&d.bob_first)
}

/// `W(q,ε)^{T_B} = (q/3) I^{A≺B} + (1−q+ε) W^{B≺A} + (2q/3 − ε) 1°`, as weighted
/// normalized processes.
pub fn family_transpose_decomposition(q: f64, eps: f64) -> Result<Vec<(f64, ProcessMatrix)>> {
    let p = FamilyParams::default();
    Ok(vec![
        (q / 3.0, make_named(NamedProcess::Iab, &p)?),
        (1.0 - q + eps, make_named(NamedProcess::Wba, &p)?),
        (2.0 * q / 3.0 - eps, make_named(NamedProcess::WhiteNoise, &p)?),
    ])
}

/// Checks the family decomposition against `W(q,ε)^{T_B}` in Pauli coefficients and
/// confirms each component is a valid ordered process with nonnegative weight.
/// `W(q,ε)` itself need not be positive here.
pub fn check_family_transpose_decomposition(q: f64, eps: f64, tol: f64) -> Result<bool> {
    let w = op_from_coeffs(&family_coeffs(q, eps))?;
    let target = w.partial_transpose(&[BI, BO])?.pauli_coefficients()?;
    let parts = family_transpose_decomposition(q, eps)?;
    let mut sum = vec![0.0; target.len()];
    for (weight, comp) in &parts {
        for (acc, c) in sum.iter_mut().zip(comp.pauli_coefficients()?) {
            *acc += weight * c;
        }
    }
    let exact = sum.iter().zip(&target).all(|(a, b)| (a - b).abs() <= tol);
    let components_ok = parts.iter().all(|(weight, comp)| {
        *weight >= -tol
            && comp.is_valid()
            && (is_causally_ordered(comp, CausalOrder::AliceFirst) || is_causally_ordered(comp, CausalOrder::BobFirst))
    });
    Ok(exact && components_ok)
}

/// `p(a,b|x,y)` stored with index `((x·ny + y)·na + a)·nb + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub nx: usize,
    pub ny: usize,
    pub na: usize,
    pub nb: usize,
    pub p: Vec<f64>,
}

impl ProbabilityTable {
    pub fn new(nx: usize, ny: usize, na: usize, nb: usize, p: Vec<f64>) -> Result<Self> {
        let t = Self { nx, ny, na, nb, p };
        t.validate(1e-10)?;
        Ok(t)
    }

    pub fn from_fn(nx: usize, ny: usize, na: usize, nb: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let mut p = Vec::with_capacity(nx * ny * na * nb);
        for x in 0..nx {
            for y in 0..ny {
                for a in 0..na {
                    for b in 0..nb {
                        p.push(f(a, b, x, y));
                    }
                }
            }
        }
        Self { nx, ny, na, nb, p }
    }

    pub fn uniform(nx: usize, ny: usize, na: usize, nb: usize) -> Self {
        let u = 1.0 / (na * nb) as f64;
        Self::from_fn(nx, ny, na, nb, |_, _, _, _| u)
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn index(&self, a: usize, b: usize, x: usize, y: usize) -> usize {
        ((x * self.ny + y) * self.na + a) * self.nb + b
    }

    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.p[self.index(a, b, x, y)]
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.p.len() != self.nx * self.ny * self.na * self.nb || self.p.is_empty() {
            return Err(Error::DimensionMismatch("probability table has the wrong number of entries".into()));
        }
        if let Some(v) = self.p.iter().find(|v| !(**v >= -tol)) {
            return Err(Error::InvalidParameter(format!("negative probability {v}")));
        }
        for x in 0..self.nx {
            for y in 0..self.ny {
                let s: f64 = (0..self.na).flat_map(|a| (0..self.nb).map(move |b| (a, b))).map(|(a, b)| self.get(a, b, x, y)).sum();
                if (s - 1.0).abs() > tol {
                    return Err(Error::InvalidParameter(format!("p(·,·|{x},{y}) sums to {s}")));
                }
            }
        }
        Ok(())
    }

    /// `Σ g(a,b,x,y) p(a,b|x,y)` for coefficients laid out like the table.
    pub fn dot(&self, g: &[f64]) -> f64 {
        self.p.iter().zip(g).map(|(p, g)| p * g).sum()
    }
}

/// `(1/4) Σ_{x,y} p(a=y, b=x | x, y)`.
pub fn gyni_score(p: &ProbabilityTable) -> Result<f64> {
    if (p.nx, p.ny, p.na, p.nb) != (2, 2, 2, 2) {
        return Err(Error::DimensionMismatch("GYNI needs binary inputs and outputs".into()));
    }
    Ok(0.25 * (0..2).flat_map(|x| (0..2).map(move |y| (x, y))).map(|(x, y)| p.get(y, x, x, y)).sum::<f64>())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CausalDecomposition {
    pub q: f64,
    pub alice_first: ProbabilityTable,
    pub bob_first: ProbabilityTable,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CausalInequality {
    /// Laid out like the table entries.
    pub coefficients: Vec<f64>,
    /// Maximum over causal tables.
    pub bound: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CausalLPResult {
    pub causal: bool,
    /// Least uniform-noise weight `t` such that `p + t·u` is causal (unnormalized).
    pub noise_weight: f64,
    pub decomposition: Option<CausalDecomposition>,
    pub certificate: Option<CausalInequality>,
    pub solver: SolutionSummary,
}

/// Exact maximum of `Σ g p` over deterministic causal strategies.
pub fn causal_bound(nx: usize, ny: usize, na: usize, nb: usize, g: &[f64]) -> f64 {
    let t = ProbabilityTable::from_fn(nx, ny, na, nb, |_, _, _, _| 0.0);
    let gi = |a, b, x, y| g[t.index(a, b, x, y)];
    let mut best = f64::NEG_INFINITY;
    // Alice first: a = f(x), b chosen per (x, y)
    for code in 0..na.pow(nx as u32) {
        let f: Vec<usize> = (0..nx).map(|x| (code / na.pow(x as u32)) % na).collect();
        let v: f64 = (0..nx)
            .flat_map(|x| (0..ny).map(move |y| (x, y)))
            .map(|(x, y)| (0..nb).map(|b| gi(f[x], b, x, y)).fold(f64::NEG_INFINITY, f64::max))
            .sum();
        best = best.max(v);
    }
    for code in 0..nb.pow(ny as u32) {
        let h: Vec<usize> = (0..ny).map(|y| (code / nb.pow(y as u32)) % nb).collect();
        let v: f64 = (0..nx)
            .flat_map(|x| (0..ny).map(move |y| (x, y)))
            .map(|(x, y)| (0..na).map(|a| gi(a, h[y], x, y)).fold(f64::NEG_INFINITY, f64::max))
            .sum();
        best = best.max(v);
    }
    best
}

/// Decides membership in the causal polytope by minimizing the uniform noise `t`
/// with `p + t·u = q̃_1 + q̃_2`, `q̃_1` no-signalling from Bob, `q̃_2` from Alice,
/// each with setting-independent mass.
pub fn causal_lp(p: &ProbabilityTable) -> Result<CausalLPResult> {
    p.validate(1e-9)?;
    let (nx, ny, na, nb) = (p.nx, p.ny, p.na, p.nb);
    let n = p.len();
    let u = 1.0 / (na * nb) as f64;
    let mut prog = conic::ConeProgram::new();
    let q1 = prog.add_block(Block::NonNeg(n));
    let q2 = prog.add_block(Block::NonNeg(n));
    let t = prog.add_block(Block::Free(1));
    prog.set_objective(LinearFunctional::new().vector(t, vec![(0, 1.0)]));
    for i in 0..n {
        prog.add_constraint(
            LinearFunctional::new().vector(q1, vec![(i, 1.0)]).vector(q2, vec![(i, 1.0)]).vector(t, vec![(0, -u)]),
            p.p[i],
        );
    }
    let idx = |a, b, x, y| p.index(a, b, x, y);
    // q̃_1: Alice's marginal independent of y
    for x in 0..nx {
        for a in 0..na {
            for y in 1..ny {
                let mut e = Vec::new();
                for b in 0..nb {
                    e.push((idx(a, b, x, y), 1.0));
                    e.push((idx(a, b, x, 0), -1.0));
                }
                prog.add_constraint(LinearFunctional::new().vector(q1, e), 0.0);
            }
        }
    }
    for x in 1..nx {
        let mut e = Vec::new();
        for a in 0..na {
            for b in 0..nb {
                e.push((idx(a, b, x, 0), 1.0));
                e.push((idx(a, b, 0, 0), -1.0));
            }
        }
        prog.add_constraint(LinearFunctional::new().vector(q1, e), 0.0);
    }
    // q̃_2: Bob's marginal independent of x
    for y in 0..ny {
        for b in 0..nb {
            for x in 1..nx {
                let mut e = Vec::new();
                for a in 0..na {
                    e.push((idx(a, b, x, y), 1.0));
                    e.push((idx(a, b, 0, y), -1.0));
                }
                prog.add_constraint(LinearFunctional::new().vector(q2, e), 0.0);
            }
        }
    }
    for y in 1..ny {
        let mut e = Vec::new();
        for a in 0..na {
            for b in 0..nb {
                e.push((idx(a, b, 0, y), 1.0));
                e.push((idx(a, b, 0, 0), -1.0));
            }
        }
        prog.add_constraint(LinearFunctional::new().vector(q2, e), 0.0);
    }
    let sol = conic::solve_with(&prog, &SolverOptions::default())?;
    if !sol.is_acceptable() {
        return Err(Error::Solver(format!(
            "causal LP ended with {:?} (primal residual {:.2e}, dual residual {:.2e})",
            sol.status, sol.primal_residual, sol.dual_residual
        )));
    }
    let t_opt = sol.primal[t].as_vector().expect("free")[0];
    let causal = t_opt <= SEPARABLE_TOL;
    let mut result = CausalLPResult { causal, noise_weight: t_opt, decomposition: None, certificate: None, solver: sol.summary() };
    if causal {
        let mut v1: Vec<f64> = sol.primal[q1].as_vector().expect("lp").iter().map(|v| v.max(0.0)).collect();
        let v2: Vec<f64> = sol.primal[q2].as_vector().expect("lp").iter().map(|v| v.max(0.0)).collect();
        if t_opt < 0.0 {
            v1.iter_mut().for_each(|v| *v += -t_opt * u);
        }
        let mass = |v: &[f64]| (0..na * nb).map(|k| v[k]).sum::<f64>();
        let (m1, m2) = (mass(&v1), mass(&v2));
        let total = m1 + m2;
        let normalize = |v: &[f64], m: f64| {
            if m > 1e-12 {
                ProbabilityTable { nx, ny, na, nb, p: v.iter().map(|x| x / m).collect() }
            } else {
                ProbabilityTable::uniform(nx, ny, na, nb)
            }
        };
        result.decomposition =
            Some(CausalDecomposition { q: m1 / total, alice_first: normalize(&v1, m1), bob_first: normalize(&v2, m2) });
    } else {
        let g: Vec<f64> = sol.dual[..n].to_vec();
        let bound = causal_bound(nx, ny, na, nb, &g);
        let value = p.dot(&g);
        result.certificate = Some(CausalInequality { coefficients: g, bound, value });
    }
    Ok(result)
}

/// Largest violation of one-way no-signalling in a table.
pub fn signalling_residual(p: &ProbabilityTable, order: CausalOrder) -> f64 {
    let mut worst = 0.0f64;
    match order {
        CausalOrder::AliceFirst => {
            for x in 0..p.nx {
                for a in 0..p.na {
                    let m: Vec<f64> = (0..p.ny).map(|y| (0..p.nb).map(|b| p.get(a, b, x, y)).sum()).collect();
                    worst = m.iter().fold(worst, |w, v| w.max((v - m[0]).abs()));
                }
            }
        }
        CausalOrder::BobFirst => {
            for y in 0..p.ny {
                for b in 0..p.nb {
                    let m: Vec<f64> = (0..p.nx).map(|x| (0..p.na).map(|a| p.get(a, b, x, y)).sum()).collect();
                    worst = m.iter().fold(worst, |w, v| w.max((v - m[0]).abs()));
                }
            }
        }
    }
    worst
}

/// Noise window of the Werner family `(1−γ) W_mix(α) + γ 1°`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WernerWindow {
    pub alpha: f64,
    /// `R_r(W_mix(α))`.
    pub robustness: f64,
    /// `R_r(W_mix(α)^{T_B})`.
    pub robustness_transposed: f64,
    /// Inclusive lower end `R'/(1+R')`.
    pub lower: f64,
    /// Exclusive upper end `R/(1+R)`.
    pub upper: f64,
}

impl WernerWindow {
    pub fn contains(&self, gamma: f64) -> bool {
        self.lower <= gamma && gamma < self.upper
    }
}

/// For `γ` in the window the Werner process is nonseparable while its `T_B` image is separable.
pub fn werner_window(alpha: f64) -> Result<WernerWindow> {
    let params = FamilyParams { alpha, ..FamilyParams::default() };
    let w = make_named(NamedProcess::Wmix, &params)?;
    let r = random_robustness(&w)?.lambda_opt;
    let rt = random_robustness(&w.transpose_bob()?)?.lambda_opt;
    Ok(WernerWindow {
        alpha,
        robustness: r,
        robustness_transposed: rt,
        lower: rt.max(0.0) / (1.0 + rt.max(0.0)),
        upper: r.max(0.0) / (1.0 + r.max(0.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{make_named, q_opt, eps_opt};

    fn named(n: NamedProcess, p: FamilyParams) -> ProcessMatrix {
        make_named(n, &p).unwrap()
    }

    #[test]
    fn white_noise_robustness_is_minus_one() {
        let w = named(NamedProcess::WhiteNoise, FamilyParams::default());
        let r = random_robustness(&w).unwrap();
        assert!((r.lambda_opt + 1.0).abs() < 1e-7, "{}", r.lambda_opt);
        assert!(separable_decomposition_check(&w, &r));
    }

    #[test]
    fn family_robustness_equals_eps() {
        for (q, eps) in [(0.4, 0.1), (0.7, 0.2), (q_opt(), eps_opt())] {
            let w = named(NamedProcess::Wqe, FamilyParams { q, eps, ..Default::default() });
            let r = random_robustness(&w).unwrap();
            assert!((r.lambda_opt - eps).abs() < 1e-6, "q={q}: {}", r.lambda_opt);
            let s = r.witness.unwrap();
            assert!((s.normalization() - 1.0).abs() < 1e-7);
            assert!((s.value(&w).unwrap() + r.lambda_opt).abs() < 1e-7);
            assert!(witness_check_tol(&s, 1e-7));
        }
    }

    #[test]
    fn transposed_optimum_is_separable() {
        let w = named(NamedProcess::Wopt, FamilyParams::default()).transpose_bob().unwrap();
        let r = random_robustness(&w).unwrap();
        assert!((r.lambda_opt - (2.0 * 3f64.sqrt() - 4.0) / 3.0).abs() < 1e-6);
        assert!(separable_decomposition_check(&w, &r));
    }

    #[test]
    fn witness_sw_identities() {
        let s = witness_sw();
        assert!(witness_check(&s));
        assert!((s.normalization() - 1.0).abs() < 1e-15);
        for (q, eps) in [(0.4, 0.1), (0.6, 0.25), (q_opt(), eps_opt())] {
            let w = named(NamedProcess::Wqe, FamilyParams { q, eps, ..Default::default() });
            assert!((s.value(&w).unwrap() + eps).abs() < 1e-12);
        }
        for (alpha, expect) in [(0.0, -0.414214), (0.5, -0.361807), (1.0, -0.309401)] {
            let w = named(NamedProcess::Wmix, FamilyParams { alpha, ..Default::default() });
            assert!((s.value(&w).unwrap() - expect).abs() < 1e-6);
        }
        let cert = witness_certify(&s).unwrap();
        assert!(cert.certified, "{}", cert.min_separable_value);
    }

    #[test]
    fn invalid_witness_fails_certification() {
        // −Z1XZ/4 + 1° is negative on the Bob-first process W^{B≺A}
        let s = HermitianOp::from_pauli_terms(
            PartyStructure::qubits().subsystems(),
            &[("IIII", 0.25), ("ZIXZ", -0.5)],
        )
        .unwrap();
        let w = Witness::new(s).unwrap();
        assert!(!witness_check(&w));
        assert!(!witness_certify(&w).unwrap().certified);
    }

    #[test]
    fn family_decomposition_is_exact() {
        assert!(check_family_transpose_decomposition(0.6, 0.3, 1e-15).unwrap());
    }

    #[test]
    fn gyni_examples() {
        let perfect = ProbabilityTable::from_fn(2, 2, 2, 2, |a, b, x, y| if a == y && b == x { 1.0 } else { 0.0 });
        assert!((gyni_score(&perfect).unwrap() - 1.0).abs() < 1e-15);
        assert!((gyni_score(&ProbabilityTable::uniform(2, 2, 2, 2)).unwrap() - 0.25).abs() < 1e-15);
        assert!(gyni_score(&ProbabilityTable::uniform(3, 2, 2, 2)).is_err());
    }

    #[test]
    fn causal_lp_product_table() {
        let pa = [[0.3, 0.7], [0.9, 0.1]];
        let pb = [[0.5, 0.5], [0.2, 0.8]];
        let t = ProbabilityTable::from_fn(2, 2, 2, 2, |a, b, x, y| pa[x][a] * pb[y][b]);
        let r = causal_lp(&t).unwrap();
        assert!(r.causal);
        let d = r.decomposition.unwrap();
        assert!(signalling_residual(&d.alice_first, CausalOrder::AliceFirst) < 1e-9);
        assert!(signalling_residual(&d.bob_first, CausalOrder::BobFirst) < 1e-9);
        for i in 0..t.len() {
            let mix = d.q * d.alice_first.p[i] + (1.0 - d.q) * d.bob_first.p[i];
            assert!((mix - t.p[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn causal_lp_perfect_guessing_is_certified() {
        let t = ProbabilityTable::from_fn(2, 2, 2, 2, |a, b, x, y| if a == y && b == x { 1.0 } else { 0.0 });
        let r = causal_lp(&t).unwrap();
        assert!(!r.causal);
        let c = r.certificate.unwrap();
        assert!(c.value > c.bound + 1e-9, "{} vs {}", c.value, c.bound);
    }

    #[test]
    fn gyni_bound_from_enumeration() {
        let t = ProbabilityTable::from_fn(2, 2, 2, 2, |_, _, _, _| 0.0);
        let mut g = vec![0.0; 16];
        for x in 0..2 {
            for y in 0..2 {
                g[t.index(y, x, x, y)] = 0.25;
            }
        }
        assert!((causal_bound(2, 2, 2, 2, &g) - 0.5).abs() < 1e-15);
    }
}
