//! Dense primal-dual interior-point solver for linear and complex semidefinite programs.
//!
//! Primal form:
//!
//! ```text
//! min  Σ_k ⟨C_k, X_k⟩ + c_l·x_l + c_f·x_f
//! s.t. Σ_k ⟨A_ik, X_k⟩ + a_il·x_l + a_if·x_f = b_i,   X_k ⪰ 0,  x_l ≥ 0,  x_f free
//! ```
//!
//! with the dual `max b·y` s.t. `Z_k = C_k − Σ y_i A_ik ⪰ 0`, `z_l = c_l − A_l^T y ≥ 0`,
//! `A_f^T y = c_f`. PSD blocks are complex Hermitian and handled natively; the
//! inner product is `⟨A, X⟩ = Re tr(A X)`. The search direction is HKM with a
//! Mehrotra predictor-corrector step.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, SparseHermitian};
use crate::operator::HermitianOp;

pub type BlockId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Block {
    /// Hermitian positive semidefinite matrix of the given side.
    Psd(usize),
    NonNeg(usize),
    Free(usize),
}

impl Block {
    pub fn size(self) -> usize {
        match self {
            Block::Psd(n) | Block::NonNeg(n) | Block::Free(n) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coeff {
    Matrix(SparseHermitian),
    Vector(Vec<(usize, f64)>),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearFunctional {
    pub terms: Vec<(BlockId, Coeff)>,
}

impl LinearFunctional {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn matrix(mut self, block: BlockId, m: SparseHermitian) -> Self {
        self.terms.push((block, Coeff::Matrix(m)));
        self
    }

    pub fn vector(mut self, block: BlockId, entries: Vec<(usize, f64)>) -> Self {
        self.terms.push((block, Coeff::Vector(entries)));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn evaluate(&self, values: &[BlockValue]) -> f64 {
        self.terms
            .iter()
            .map(|(b, c)| match (c, &values[*b]) {
                (Coeff::Matrix(a), BlockValue::Matrix(x)) => a.inner(x),
                (Coeff::Vector(a), BlockValue::Vector(x)) => a.iter().map(|(i, v)| v * x[*i]).sum(),
                _ => f64::NAN,
            })
            .sum()
    }
}

#[derive(Clone, Debug, Default)]
pub struct ConeProgram {
    blocks: Vec<Block>,
    objective: LinearFunctional,
    constraints: Vec<(LinearFunctional, f64)>,
}

impl ConeProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, block: Block) -> BlockId {
        self.blocks.push(block);
        self.blocks.len() - 1
    }

    /// The program minimizes; negate coefficients to maximize.
    pub fn set_objective(&mut self, f: LinearFunctional) {
        self.objective = f;
    }

    pub fn add_constraint(&mut self, f: LinearFunctional, rhs: f64) {
        self.constraints.push((f, rhs));
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn objective(&self) -> &LinearFunctional {
        &self.objective
    }

    pub fn constraints(&self) -> &[(LinearFunctional, f64)] {
        &self.constraints
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn validate(&self) -> Result<()> {
        let check = |f: &LinearFunctional, what: &str| -> Result<()> {
            for (b, c) in &f.terms {
                let block = self
                    .blocks
                    .get(*b)
                    .ok_or_else(|| Error::Solver(format!("{what} references missing block {b}")))?;
                match (block, c) {
                    (Block::Psd(n), Coeff::Matrix(m)) => {
                        if m.side != *n || m.entries.iter().any(|e| e.0 >= *n || e.1 >= *n) {
                            return Err(Error::Solver(format!("{what}: coefficient does not fit PSD block {b}")));
                        }
                    }
                    (Block::NonNeg(n) | Block::Free(n), Coeff::Vector(v)) => {
                        if v.iter().any(|e| e.0 >= *n) {
                            return Err(Error::Solver(format!("{what}: index out of range in block {b}")));
                        }
                    }
                    _ => return Err(Error::Solver(format!("{what}: coefficient kind does not match block {b}"))),
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (i, (f, rhs)) in self.constraints.iter().enumerate() {
            if !rhs.is_finite() {
                return Err(Error::Solver(format!("constraint {i} has a non-finite right-hand side")));
            }
            check(f, &format!("constraint {i}"))?;
        }
        Ok(())
    }

    /// Documented JSON dump: blocks, and every functional as dense per-block arrays
    /// (`[[re, im], ...]` row-major for PSD blocks, plain reals otherwise).
    pub fn to_debug_json(&self) -> serde_json::Value {
        let dense = |f: &LinearFunctional| -> Vec<serde_json::Value> {
            self.blocks
                .iter()
                .enumerate()
                .map(|(b, block)| match block {
                    Block::Psd(n) => {
                        let mut m = CMatrix::zeros(*n, *n);
                        for (bb, c) in &f.terms {
                            if let (true, Coeff::Matrix(a)) = (*bb == b, c) {
                                a.add_scaled_into(1.0, &mut m);
                            }
                        }
                        let flat: Vec<[f64; 2]> =
                            (0..n * n).map(|k| [m[(k / n, k % n)].re, m[(k / n, k % n)].im]).collect();
                        json!(flat)
                    }
                    Block::NonNeg(n) | Block::Free(n) => {
                        let mut v = vec![0.0; *n];
                        for (bb, c) in &f.terms {
                            if let (true, Coeff::Vector(a)) = (*bb == b, c) {
                                for (i, x) in a {
                                    v[*i] += x;
                                }
                            }
                        }
                        json!(v)
                    }
                })
                .collect()
        };
        json!({
            "sense": "minimize",
            "blocks": self.blocks.iter().map(|b| match b {
                Block::Psd(n) => json!({"type": "psd", "side": n}),
                Block::NonNeg(n) => json!({"type": "nonneg", "size": n}),
                Block::Free(n) => json!({"type": "free", "size": n}),
            }).collect::<Vec<_>>(),
            "objective": dense(&self.objective),
            "constraints": self.constraints.iter().map(|(f, rhs)| json!({"coeffs": dense(f), "rhs": rhs})).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BlockValue {
    Matrix(CMatrix),
    Vector(Vec<f64>),
}

impl BlockValue {
    pub fn as_matrix(&self) -> Option<&CMatrix> {
        match self {
            BlockValue::Matrix(m) => Some(m),
            BlockValue::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            BlockValue::Vector(v) => Some(v),
            BlockValue::Matrix(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    /// Stopped without reaching the tolerance, with every residual within `NEAR_OPTIMAL_FACTOR · tol`.
    NearOptimal,
    MaxIterations,
    UnboundedOrInfeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub mu: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

/// Residuals are relative: `‖b − A x‖/(1+‖b‖)`, `‖c − A^T y − z‖/(1+‖c‖)` and
/// `|p − d|/(1+|p|+|d|)`.
#[derive(Clone, Debug)]
pub struct Solution {
    pub status: Status,
    pub primal: Vec<BlockValue>,
    /// One multiplier per constraint; rows removed as linearly dependent get 0.
    pub dual: Vec<f64>,
    pub dual_slack: Vec<BlockValue>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub dropped_constraints: Vec<usize>,
    pub log: Vec<IterationLog>,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// Optimal or near-optimal.
    pub fn is_acceptable(&self) -> bool {
        matches!(self.status, Status::Optimal | Status::NearOptimal)
    }

    pub fn summary(&self) -> SolutionSummary {
        SolutionSummary {
            status: self.status,
            primal_objective: self.primal_objective,
            dual_objective: self.dual_objective,
            primal_residual: self.primal_residual,
            dual_residual: self.dual_residual,
            gap: self.gap,
            iterations: self.iterations,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub status: Status,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    /// Drop linearly dependent constraints before solving.
    pub presolve: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 200, step_fraction: 0.98, presolve: true }
    }
}

pub fn solve(p: &ConeProgram, tol: f64, max_iter: usize) -> Result<Solution> {
    solve_with(p, &SolverOptions { tol, max_iter, ..Default::default() })
}

/// Errors only on malformed programs; non-convergence is reported through [`Status`].
pub fn solve_with(p: &ConeProgram, opts: &SolverOptions) -> Result<Solution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", opts.tol)));
    }
    p.validate()?;
    let compiled = Compiled::new(p, opts.presolve);
    if compiled.nu() == 0 {
        return Err(Error::Solver("program has no conic variables".into()));
    }
    let mut ipm = Ipm::new(&compiled);
    let mut log = Vec::new();
    let mut status = Status::MaxIterations;
    let mut iterations = 0;
    let mut last_steps = (0.0, 0.0);
    let mut best: Option<(f64, Ipm, usize)> = None;
    for it in 0..=opts.max_iter {
        let res = ipm.residuals();
        log.push(IterationLog {
            iteration: it,
            primal_objective: res.pobj,
            dual_objective: res.dobj,
            primal_residual: res.pres,
            dual_residual: res.dres,
            gap: res.gap,
            mu: res.mu,
            step_primal: last_steps.0,
            step_dual: last_steps.1,
        });
        iterations = it;
        if res.pres <= opts.tol && res.dres <= opts.tol && res.gap <= opts.tol {
            status = Status::Optimal;
            best = None;
            break;
        }
        let merit = res.pres.max(res.dres).max(res.gap);
        match &best {
            Some((m, _, _)) if merit >= *m => {
                if it - best.as_ref().map_or(0, |b| b.2) > STALL_ITERATIONS {
                    log::debug!("interior-point method made no progress for {STALL_ITERATIONS} iterations");
                    break;
                }
            }
            _ => best = Some((merit, ipm.clone(), it)),
        }
        if ipm.diverged() || !res.pobj.is_finite() || !res.dobj.is_finite() {
            status = Status::UnboundedOrInfeasible;
            break;
        }
        if it == opts.max_iter {
            break;
        }
        match ipm.step(&res, opts.step_fraction) {
            Some(steps) => last_steps = steps,
            None => {
                log::debug!("interior-point step failed at iteration {it}");
                break;
            }
        }
        if last_steps.0 < 1e-12 && last_steps.1 < 1e-12 {
            log::debug!("interior-point method stalled at iteration {it}");
            break;
        }
    }
    if let Some((merit, b, _)) = best.filter(|_| status == Status::MaxIterations) {
        ipm = b;
        if merit <= NEAR_OPTIMAL_FACTOR * opts.tol {
            status = Status::NearOptimal;
        }
    }
    Ok(ipm.finish(p, status, iterations, log))
}

pub const NEAR_OPTIMAL_FACTOR: f64 = 1e3;

/// Iterations without improving the best residual before giving up.
const STALL_ITERATIONS: usize = 30;

/// Nearest PSD operator in Frobenius norm.
pub fn project_psd(m: &HermitianOp) -> HermitianOp {
    let s = m.spectral();
    let n = m.side();
    let mut out = CMatrix::zeros(n, n);
    for (i, &l) in s.values.iter().enumerate() {
        if l > 0.0 {
            let v = s.vectors.column(i);
            out += (&v * v.adjoint()).scale(l);
        }
    }
    HermitianOp::new(m.subsystems().to_vec(), linalg::symmetrize(&out)).expect("same space")
}

pub fn project_psd_matrix(m: &CMatrix) -> CMatrix {
    let (values, vectors) = linalg::eigh_sorted(m);
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (i, &l) in values.iter().enumerate() {
        if l > 0.0 {
            let v = vectors.column(i);
            out += (&v * v.adjoint()).scale(l);
        }
    }
    linalg::symmetrize(&out)
}

struct PsdData {
    block: BlockId,
    n: usize,
    c: CMatrix,
    /// (compiled row, coefficient)
    rows: Vec<(usize, SparseHermitian)>,
    /// Form the Schur complement entrywise from the sparse coefficients.
    sparse_schur: bool,
}

struct VecData {
    /// (block id, offset into the stacked vector, size)
    layout: Vec<(BlockId, usize, usize)>,
    c: DVector<f64>,
    a: DMatrix<f64>,
}

struct Compiled {
    m: usize,
    kept: Vec<usize>,
    dropped: Vec<usize>,
    b: DVector<f64>,
    psd: Vec<PsdData>,
    lp: VecData,
    free: VecData,
}

impl Compiled {
    fn new(p: &ConeProgram, presolve: bool) -> Self {
        let (kept, dropped) = if presolve { independent_rows(p) } else { ((0..p.constraints.len()).collect(), Vec::new()) };
        let m = kept.len();
        let mut psd = Vec::new();
        let mut psd_index = vec![usize::MAX; p.blocks.len()];
        let mut lp_layout = Vec::new();
        let mut free_layout = Vec::new();
        let mut vec_index = vec![(false, 0usize); p.blocks.len()];
        let (mut nl, mut nf) = (0, 0);
        for (id, block) in p.blocks.iter().enumerate() {
            match *block {
                Block::Psd(n) => {
                    psd_index[id] = psd.len();
                    psd.push(PsdData { block: id, n, c: CMatrix::zeros(n, n), rows: Vec::new(), sparse_schur: false });
                }
                Block::NonNeg(n) => {
                    vec_index[id] = (true, nl);
                    lp_layout.push((id, nl, n));
                    nl += n;
                }
                Block::Free(n) => {
                    vec_index[id] = (false, nf);
                    free_layout.push((id, nf, n));
                    nf += n;
                }
            }
        }
        let mut lp = VecData { layout: lp_layout, c: DVector::zeros(nl), a: DMatrix::zeros(m, nl) };
        let mut free = VecData { layout: free_layout, c: DVector::zeros(nf), a: DMatrix::zeros(m, nf) };
        for (b, coeff) in &p.objective.terms {
            match coeff {
                Coeff::Matrix(a) => a.add_scaled_into(1.0, &mut psd[psd_index[*b]].c),
                Coeff::Vector(v) => {
                    let (is_lp, off) = vec_index[*b];
                    let target = if is_lp { &mut lp.c } else { &mut free.c };
                    for (i, x) in v {
                        target[off + i] += x;
                    }
                }
            }
        }
        let mut b = DVector::zeros(m);
        for (row, &orig) in kept.iter().enumerate() {
            let (f, rhs) = &p.constraints[orig];
            b[row] = *rhs;
            for (blk, coeff) in &f.terms {
                match coeff {
                    Coeff::Matrix(a) => {
                        let data = &mut psd[psd_index[*blk]];
                        match data.rows.last_mut() {
                            Some((r, existing)) if *r == row => existing.entries.extend_from_slice(&a.entries),
                            _ => data.rows.push((row, a.clone())),
                        }
                    }
                    Coeff::Vector(v) => {
                        let (is_lp, off) = vec_index[*blk];
                        let target = if is_lp { &mut lp.a } else { &mut free.a };
                        for (i, x) in v {
                            target[(row, off + i)] += x;
                        }
                    }
                }
            }
        }
        for d in &mut psd {
            let nnz: usize = d.rows.iter().map(|(_, a)| a.entries.len()).sum();
            let dense_cost = d.rows.len() * (d.n * d.n * d.n + nnz);
            d.sparse_schur = nnz * nnz / 2 < dense_cost;
        }
        Self { m, kept, dropped, b, psd, lp, free }
    }

    fn nu(&self) -> usize {
        self.psd.iter().map(|d| d.n).sum::<usize>() + self.lp.c.len()
    }
}

/// Greedy rank-revealing Gram–Schmidt over the real coordinates of each constraint.
fn independent_rows(p: &ConeProgram) -> (Vec<usize>, Vec<usize>) {
    let mut offsets = Vec::with_capacity(p.blocks.len());
    let mut dim = 0;
    for b in &p.blocks {
        offsets.push(dim);
        dim += match *b {
            Block::Psd(n) => n * n,
            Block::NonNeg(n) | Block::Free(n) => n,
        };
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (i, (f, _)) in p.constraints.iter().enumerate() {
        let mut v = vec![0.0; dim];
        for (b, c) in &f.terms {
            match c {
                Coeff::Matrix(a) => a.write_real_coords(&mut v[offsets[*b]..]),
                Coeff::Vector(e) => {
                    for (k, x) in e {
                        v[offsets[*b] + k] += x;
                    }
                }
            }
        }
        let norm0 = dot(&v, &v).sqrt();
        if norm0 == 0.0 {
            dropped.push(i);
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                for (vk, qk) in v.iter_mut().zip(q) {
                    *vk -= c * qk;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-9 * norm0 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
            kept.push(i);
        } else {
            dropped.push(i);
        }
    }
    (kept, dropped)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Residuals {
    rp: DVector<f64>,
    rd: Vec<CMatrix>,
    rdl: DVector<f64>,
    rdf: DVector<f64>,
    pobj: f64,
    dobj: f64,
    pres: f64,
    dres: f64,
    gap: f64,
    mu: f64,
}

struct Direction {
    dy: DVector<f64>,
    dxf: DVector<f64>,
    dx: Vec<CMatrix>,
    dz: Vec<CMatrix>,
    dxl: DVector<f64>,
    dzl: DVector<f64>,
}

#[derive(Clone)]
struct Ipm<'a> {
    p: &'a Compiled,
    x: Vec<CMatrix>,
    z: Vec<CMatrix>,
    xl: DVector<f64>,
    zl: DVector<f64>,
    xf: DVector<f64>,
    y: DVector<f64>,
    norm_b: f64,
    norm_c: f64,
}

impl<'a> Ipm<'a> {
    fn new(p: &'a Compiled) -> Self {
        let coeff_norm = |row_norms: &mut Vec<f64>, row: usize, v: f64| row_norms[row] += v * v;
        let mut x = Vec::new();
        let mut z = Vec::new();
        for d in &p.psd {
            let mut norms = vec![0.0; p.m];
            for (r, a) in &d.rows {
                coeff_norm(&mut norms, *r, a.frobenius_norm());
            }
            let n = d.n as f64;
            let mut xi = 10f64.max(n.sqrt());
            let mut eta = 10f64.max(n.sqrt()).max(d.c.norm());
            for (r, nr) in norms.iter().enumerate() {
                let nr = nr.sqrt();
                xi = xi.max(n * (1.0 + p.b[r].abs()) / (1.0 + nr));
                eta = eta.max(nr);
            }
            x.push(CMatrix::identity(d.n, d.n).scale(xi));
            z.push(CMatrix::identity(d.n, d.n).scale(eta));
        }
        let nl = p.lp.c.len();
        let (xl, zl) = if nl > 0 {
            let n = nl as f64;
            let mut xi = 10f64.max(n.sqrt());
            let mut eta = 10f64.max(n.sqrt()).max(p.lp.c.norm());
            for r in 0..p.m {
                let nr = p.lp.a.row(r).norm();
                xi = xi.max(n * (1.0 + p.b[r].abs()) / (1.0 + nr));
                eta = eta.max(nr);
            }
            (DVector::from_element(nl, xi), DVector::from_element(nl, eta))
        } else {
            (DVector::zeros(0), DVector::zeros(0))
        };
        let norm_c = (p.psd.iter().map(|d| d.c.norm_squared()).sum::<f64>()
            + p.lp.c.norm_squared()
            + p.free.c.norm_squared())
        .sqrt();
        Self {
            p,
            x,
            z,
            xl,
            zl,
            xf: DVector::zeros(p.free.c.len()),
            y: DVector::zeros(p.m),
            norm_b: p.b.norm(),
            norm_c,
        }
    }

    /// `A(X) + A_l x_l + A_f x_f`.
    fn apply_a(&self, x: &[CMatrix], xl: &DVector<f64>, xf: &DVector<f64>) -> DVector<f64> {
        &self.p.lp.a * xl + &self.p.free.a * xf + self.apply_psd(x)
    }

    fn apply_psd(&self, x: &[CMatrix]) -> DVector<f64> {
        let mut out = DVector::zeros(self.p.m);
        for (d, xk) in self.p.psd.iter().zip(x) {
            for (r, a) in &d.rows {
                out[*r] += a.inner(xk);
            }
        }
        out
    }

    /// `Σ_i y_i A_ik` for PSD block `k`.
    fn apply_at(&self, k: usize, y: &DVector<f64>) -> CMatrix {
        let d = &self.p.psd[k];
        let mut out = CMatrix::zeros(d.n, d.n);
        for (r, a) in &d.rows {
            if y[*r] != 0.0 {
                a.add_scaled_into(y[*r], &mut out);
            }
        }
        out
    }

    fn residuals(&self) -> Residuals {
        let p = self.p;
        let rp = &p.b - self.apply_a(&self.x, &self.xl, &self.xf);
        let rd: Vec<CMatrix> =
            (0..p.psd.len()).map(|k| &p.psd[k].c - self.apply_at(k, &self.y) - &self.z[k]).collect();
        let rdl = &p.lp.c - p.lp.a.transpose() * &self.y - &self.zl;
        let rdf = &p.free.c - p.free.a.transpose() * &self.y;
        let pobj = p.psd.iter().zip(&self.x).map(|(d, x)| linalg::hs_inner(&d.c, x)).sum::<f64>()
            + p.lp.c.dot(&self.xl)
            + p.free.c.dot(&self.xf);
        let dobj = p.b.dot(&self.y);
        let complementarity =
            self.x.iter().zip(&self.z).map(|(x, z)| linalg::hs_inner(x, z)).sum::<f64>() + self.xl.dot(&self.zl);
        let dnorm = (rd.iter().map(|r| r.norm_squared()).sum::<f64>() + rdl.norm_squared() + rdf.norm_squared()).sqrt();
        Residuals {
            pres: rp.norm() / (1.0 + self.norm_b),
            dres: dnorm / (1.0 + self.norm_c),
            gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
            mu: complementarity / p.nu() as f64,
            rp,
            rd,
            rdl,
            rdf,
            pobj,
            dobj,
        }
    }

    fn diverged(&self) -> bool {
        let big = 1e12;
        self.x.iter().any(|x| x.norm() > big)
            || self.z.iter().any(|z| z.norm() > big)
            || self.y.amax() > big
            || (self.xl.len() > 0 && self.xl.amax() > big)
            || (self.xf.len() > 0 && self.xf.amax() > big)
    }

    fn step(&mut self, res: &Residuals, tau: f64) -> Option<(f64, f64)> {
        let p = self.p;
        let zinv: Vec<CMatrix> = self.z.iter().map(|z| hermitian_inverse(z)).collect::<Option<_>>()?;
        // Schur complement M_ij = Re tr(A_i X A_j Z^{-1}) + A_l D A_l^T
        let m = p.m;
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for (k, d) in p.psd.iter().enumerate() {
            if d.sparse_schur {
                let (x, zi) = (&self.x[k], &zinv[k]);
                for (ii, (i, ai)) in d.rows.iter().enumerate() {
                    for (j, aj) in &d.rows[ii..] {
                        let mut acc = 0.0;
                        for &(p_, q_, a) in &ai.entries {
                            for &(r_, s_, b) in &aj.entries {
                                acc += (a * x[(q_, r_)] * b * zi[(s_, p_)]).re;
                            }
                        }
                        schur[(*i, *j)] += acc;
                        if i != j {
                            schur[(*j, *i)] += acc;
                        }
                    }
                }
            } else {
                for (j, aj) in &d.rows {
                    let xaj = aj.mul_dense(&self.x[k]).adjoint();
                    let q = xaj * &zinv[k];
                    for (i, ai) in &d.rows {
                        schur[(*i, *j)] += ai.inner(&q);
                    }
                }
            }
        }
        let dl = self.xl.component_div(&self.zl);
        if dl.len() > 0 {
            let ad = &p.lp.a * DMatrix::from_diagonal(&dl);
            schur += &ad * p.lp.a.transpose();
        }
        let schur = (&schur + schur.transpose()) * 0.5;
        let solver = KktSolver::new(schur, &p.free.a)?;

        let mu = res.mu;
        // predictor
        let rdx: Vec<CMatrix> =
            (0..p.psd.len()).map(|k| sym(&(&self.x[k] * &res.rd[k] * &zinv[k]))).collect();
        let t_aff: Vec<CMatrix> = (0..p.psd.len()).map(|k| -&self.x[k] - &rdx[k]).collect();
        let tl_aff = -&self.xl;
        let aff = self.direction(&solver, res, &zinv, &t_aff, &tl_aff, &dl)?;
        let ap = self.max_step_primal(&aff).min(1.0);
        let ad = self.max_step_dual(&aff).min(1.0);
        let mut mu_aff = 0.0;
        for k in 0..p.psd.len() {
            let xa = &self.x[k] + aff.dx[k].scale(ap);
            let za = &self.z[k] + aff.dz[k].scale(ad);
            mu_aff += linalg::hs_inner(&xa, &za);
        }
        mu_aff += (&self.xl + &aff.dxl * ap).dot(&(&self.zl + &aff.dzl * ad));
        mu_aff /= p.nu() as f64;
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };

        // corrector
        let t: Vec<CMatrix> = (0..p.psd.len())
            .map(|k| {
                let corr = sym(&(&aff.dx[k] * &aff.dz[k] * &zinv[k]));
                zinv[k].scale(sigma * mu) - &self.x[k] - &rdx[k] - corr
            })
            .collect();
        let tl = DVector::from_iterator(
            self.xl.len(),
            (0..self.xl.len()).map(|i| (sigma * mu - aff.dxl[i] * aff.dzl[i]) / self.zl[i] - self.xl[i]),
        );
        let dir = self.direction(&solver, res, &zinv, &t, &tl, &dl)?;
        let ap = (tau * self.max_step_primal(&dir)).min(1.0);
        let ad = (tau * self.max_step_dual(&dir)).min(1.0);
        for k in 0..p.psd.len() {
            self.x[k] = sym(&(&self.x[k] + dir.dx[k].scale(ap)));
            self.z[k] = sym(&(&self.z[k] + dir.dz[k].scale(ad)));
        }
        self.xl += &dir.dxl * ap;
        self.zl += &dir.dzl * ad;
        self.xf += &dir.dxf * ap;
        self.y += &dir.dy * ad;
        Some((ap, ad))
    }

    fn direction(
        &self,
        solver: &KktSolver,
        res: &Residuals,
        zinv: &[CMatrix],
        t: &[CMatrix],
        tl: &DVector<f64>,
        dl: &DVector<f64>,
    ) -> Option<Direction> {
        let p = self.p;
        let lp_part = tl - dl.component_mul(&res.rdl);
        let rhs = &res.rp - self.apply_psd(t) - &p.lp.a * &lp_part;
        let (mut dy, mut dxf) = solver.solve(&rhs, &res.rdf)?;
        let mut dir = self.recover(zinv, t, &lp_part, dl, res, dy.clone(), dxf.clone())?;
        // iterative refinement against the unfactored operators
        for _ in 0..2 {
            let r1 = &res.rp - self.apply_a(&dir.dx, &dir.dxl, &dir.dxf);
            let r2 = &res.rdf - p.free.a.transpose() * &dy;
            if r1.norm() + r2.norm() <= 1e-15 * (1.0 + res.rp.norm()) {
                break;
            }
            let (ey, ef) = solver.solve(&r1, &r2)?;
            dy += ey;
            dxf += ef;
            let refined = self.recover(zinv, t, &lp_part, dl, res, dy.clone(), dxf.clone())?;
            let before = (&res.rp - self.apply_a(&dir.dx, &dir.dxl, &dir.dxf)).norm();
            let after = (&res.rp - self.apply_a(&refined.dx, &refined.dxl, &refined.dxf)).norm();
            if after >= before {
                break;
            }
            dir = refined;
        }
        Some(dir)
    }

    #[allow(clippy::too_many_arguments)]
    fn recover(
        &self,
        zinv: &[CMatrix],
        t: &[CMatrix],
        lp_part: &DVector<f64>,
        dl: &DVector<f64>,
        res: &Residuals,
        dy: DVector<f64>,
        dxf: DVector<f64>,
    ) -> Option<Direction> {
        let p = self.p;
        if !dy.iter().all(|v| v.is_finite()) {
            return None;
        }
        let mut dx = Vec::with_capacity(p.psd.len());
        let mut dz = Vec::with_capacity(p.psd.len());
        for k in 0..p.psd.len() {
            let aty = self.apply_at(k, &dy);
            let dzk = &res.rd[k] - &aty;
            let dxk = &t[k] + sym(&(&self.x[k] * &aty * &zinv[k]));
            dx.push(dxk);
            dz.push(dzk);
        }
        let aty_l = p.lp.a.transpose() * &dy;
        let dzl = &res.rdl - &aty_l;
        let dxl = lp_part + dl.component_mul(&aty_l);
        Some(Direction { dy, dxf, dx, dz, dxl, dzl })
    }

    fn max_step_primal(&self, d: &Direction) -> f64 {
        let mut a = f64::INFINITY;
        for (x, dx) in self.x.iter().zip(&d.dx) {
            a = a.min(max_step_psd(x, dx));
        }
        a.min(max_step_lp(&self.xl, &d.dxl))
    }

    fn max_step_dual(&self, d: &Direction) -> f64 {
        let mut a = f64::INFINITY;
        for (z, dz) in self.z.iter().zip(&d.dz) {
            a = a.min(max_step_psd(z, dz));
        }
        a.min(max_step_lp(&self.zl, &d.dzl))
    }

    fn finish(self, prog: &ConeProgram, mut status: Status, iterations: usize, log: Vec<IterationLog>) -> Solution {
        let p = self.p;
        let mut primal: Vec<Option<BlockValue>> = vec![None; prog.blocks.len()];
        let mut dual_slack: Vec<Option<BlockValue>> = vec![None; prog.blocks.len()];
        for (k, d) in p.psd.iter().enumerate() {
            primal[d.block] = Some(BlockValue::Matrix(self.x[k].clone()));
            dual_slack[d.block] = Some(BlockValue::Matrix(self.z[k].clone()));
        }
        for &(id, off, n) in &p.lp.layout {
            primal[id] = Some(BlockValue::Vector(self.xl.rows(off, n).iter().copied().collect()));
            dual_slack[id] = Some(BlockValue::Vector(self.zl.rows(off, n).iter().copied().collect()));
        }
        for &(id, off, n) in &p.free.layout {
            primal[id] = Some(BlockValue::Vector(self.xf.rows(off, n).iter().copied().collect()));
            dual_slack[id] = Some(BlockValue::Vector(vec![0.0; n]));
        }
        let primal: Vec<BlockValue> = primal.into_iter().map(|v| v.expect("every block compiled")).collect();
        let dual_slack: Vec<BlockValue> = dual_slack.into_iter().map(|v| v.expect("every block compiled")).collect();
        let mut dual = vec![0.0; prog.constraints.len()];
        for (row, &orig) in p.kept.iter().enumerate() {
            dual[orig] = self.y[row];
        }
        let last = self.residuals();
        // the primal residual is re-evaluated on every original row, including dropped ones
        let mut rp2 = 0.0;
        let mut b2 = 0.0;
        for (f, rhs) in &prog.constraints {
            let r = rhs - f.evaluate(&primal);
            rp2 += r * r;
            b2 += rhs * rhs;
        }
        let pres = rp2.sqrt() / (1.0 + b2.sqrt());
        if matches!(status, Status::Optimal | Status::NearOptimal) && pres > 10.0 * last.pres.max(1e-12) && pres > 1e-6 {
            status = Status::UnboundedOrInfeasible;
        }
        Solution {
            status,
            primal,
            dual,
            dual_slack,
            primal_objective: last.pobj,
            dual_objective: last.dobj,
            primal_residual: pres,
            dual_residual: last.dres,
            gap: last.gap,
            iterations,
            dropped_constraints: p.dropped.clone(),
            log,
        }
    }
}

/// Solves `[[M, A_f], [A_f^T, 0]] [Δy; Δx_f] = [r; s]` through a Cholesky factor of `M`.
struct KktSolver {
    chol: Cholesky<f64, Dyn>,
    af: DMatrix<f64>,
    minv_af: DMatrix<f64>,
    schur_f: Option<nalgebra::LU<f64, Dyn, Dyn>>,
}

impl KktSolver {
    fn new(mut m: DMatrix<f64>, af: &DMatrix<f64>) -> Option<Self> {
        let n = m.nrows();
        let chol = match Cholesky::new(m.clone()) {
            Some(c) => c,
            None => {
                let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
                for i in 0..n {
                    m[(i, i)] += 1e-13 * scale;
                }
                Cholesky::new(m)?
            }
        };
        let minv_af = chol.solve(af);
        let schur_f = (af.ncols() > 0).then(|| (af.transpose() * &minv_af).lu());
        Some(Self { chol, af: af.clone(), minv_af, schur_f })
    }

    fn solve(&self, r: &DVector<f64>, s: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
        let minv_r = self.chol.solve(r);
        match &self.schur_f {
            None => Some((minv_r, DVector::zeros(0))),
            Some(lu) => {
                let rhs = self.af.transpose() * &minv_r - s;
                let dxf = lu.solve(&rhs)?;
                let dy = minv_r - &self.minv_af * &dxf;
                Some((dy, dxf))
            }
        }
    }
}

fn sym(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

fn hermitian_inverse(z: &CMatrix) -> Option<CMatrix> {
    let inv = Cholesky::new(z.clone())?.inverse();
    Some(sym(&inv))
}

/// Largest `α` with `X + α ΔX ⪰ 0` for `X ≻ 0`.
fn max_step_psd(x: &CMatrix, dx: &CMatrix) -> f64 {
    let lmin = match Cholesky::new(x.clone()) {
        Some(ch) => {
            let l = ch.l();
            let Some(a) = l.solve_lower_triangular(dx) else { return 0.0 };
            let Some(b) = l.solve_lower_triangular(&a.adjoint()) else { return 0.0 };
            linalg::min_eigenvalue(&sym(&b))
        }
        None => return 0.0,
    };
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn max_step_lp(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

/// Dense complex helper used by callers building coefficient matrices.
pub fn sparse(m: &CMatrix) -> SparseHermitian {
    SparseHermitian::from_dense(m, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{C64, ONE, ZERO};

    fn diag(vals: &[f64]) -> SparseHermitian {
        SparseHermitian::new(vals.len(), vals.iter().enumerate().map(|(i, v)| (i, i, ONE * *v)).collect())
    }

    #[test]
    fn scalar_lp() {
        // min λ s.t. x − λ = 1, x ≥ 0
        let mut p = ConeProgram::new();
        let x = p.add_block(Block::NonNeg(1));
        let l = p.add_block(Block::Free(1));
        p.set_objective(LinearFunctional::new().vector(l, vec![(0, 1.0)]));
        p.add_constraint(LinearFunctional::new().vector(x, vec![(0, 1.0)]).vector(l, vec![(0, -1.0)]), 1.0);
        let s = solve(&p, 1e-9, 200).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.primal[l].as_vector().unwrap()[0] + 1.0).abs() < 1e-7);
    }

    #[test]
    fn eigenvalue_shift() {
        // min λ s.t. X = M + λ I, X ⪰ 0, M = diag(−2, 3)
        let mut p = ConeProgram::new();
        let x = p.add_block(Block::Psd(2));
        let l = p.add_block(Block::Free(1));
        p.set_objective(LinearFunctional::new().vector(l, vec![(0, 1.0)]));
        let m = [[-2.0, 0.0], [0.0, 3.0]];
        for r in 0..2 {
            for c in r..2 {
                let coeff = if r == c {
                    diag(&(0..2).map(|k| if k == r { 1.0 } else { 0.0 }).collect::<Vec<_>>())
                } else {
                    SparseHermitian::new(2, vec![(r, c, ONE * 0.5), (c, r, ONE * 0.5)])
                };
                let id = if r == c { -1.0 } else { 0.0 };
                p.add_constraint(LinearFunctional::new().matrix(x, coeff).vector(l, vec![(0, id)]), m[r][c]);
            }
        }
        let s = solve(&p, 1e-9, 200).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.primal_objective - 2.0).abs() < 1e-7, "{}", s.primal_objective);
    }

    #[test]
    fn complex_block_max_eigenvalue() {
        // max ⟨H, X⟩ s.t. tr X = 1 gives λ_max(H) for complex Hermitian H
        let h = CMatrix::from_row_slice(2, 2, &[ONE, C64::new(0.0, -2.0), C64::new(0.0, 2.0), -ONE]);
        let mut p = ConeProgram::new();
        let x = p.add_block(Block::Psd(2));
        p.set_objective(LinearFunctional::new().matrix(x, sparse(&h.scale(-1.0))));
        p.add_constraint(LinearFunctional::new().matrix(x, SparseHermitian::identity(2)), 1.0);
        let s = solve(&p, 1e-10, 200).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((-s.primal_objective - 5f64.sqrt()).abs() < 1e-8);
        let xm = s.primal[x].as_matrix().unwrap();
        assert!(linalg::min_eigenvalue(xm) > -1e-9);
    }

    #[test]
    fn dependent_rows_are_dropped() {
        let mut p = ConeProgram::new();
        let x = p.add_block(Block::NonNeg(2));
        p.set_objective(LinearFunctional::new().vector(x, vec![(0, 1.0), (1, 2.0)]));
        p.add_constraint(LinearFunctional::new().vector(x, vec![(0, 1.0), (1, 1.0)]), 1.0);
        p.add_constraint(LinearFunctional::new().vector(x, vec![(0, 2.0), (1, 2.0)]), 2.0);
        let s = solve(&p, 1e-9, 200).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert_eq!(s.dropped_constraints, vec![1]);
        assert!((s.primal_objective - 1.0).abs() < 1e-7);

        let mut bad = p.clone();
        bad.constraints[1].1 = 3.0;
        let s = solve(&bad, 1e-9, 200).unwrap();
        assert_ne!(s.status, Status::Optimal);
    }

    #[test]
    fn infeasible_lp_is_not_reported_optimal() {
        // x ≥ 0, x = −1
        let mut p = ConeProgram::new();
        let x = p.add_block(Block::NonNeg(1));
        p.set_objective(LinearFunctional::new().vector(x, vec![(0, 1.0)]));
        p.add_constraint(LinearFunctional::new().vector(x, vec![(0, 1.0)]), -1.0);
        let s = solve(&p, 1e-9, 200).unwrap();
        assert_ne!(s.status, Status::Optimal);
    }

    #[test]
    fn solve_is_deterministic() {
        let h = CMatrix::from_row_slice(2, 2, &[ONE, C64::new(0.3, -0.2), C64::new(0.3, 0.2), -ONE]);
        let mut p = ConeProgram::new();
        let x = p.add_block(Block::Psd(2));
        p.set_objective(LinearFunctional::new().matrix(x, sparse(&h)));
        p.add_constraint(LinearFunctional::new().matrix(x, SparseHermitian::identity(2)), 1.0);
        let a = solve(&p, 1e-9, 200).unwrap();
        let b = solve(&p, 1e-9, 200).unwrap();
        assert_eq!(a.primal, b.primal);
        assert_eq!(a.dual, b.dual);
    }

    #[test]
    fn malformed_programs_error() {
        let mut p = ConeProgram::new();
        let x = p.add_block(Block::Psd(2));
        p.add_constraint(LinearFunctional::new().matrix(x, SparseHermitian::identity(3)), 1.0);
        assert!(solve(&p, 1e-9, 200).is_err());
        let mut q = ConeProgram::new();
        let v = q.add_block(Block::NonNeg(1));
        q.add_constraint(LinearFunctional::new().vector(v, vec![(0, 1.0)]), 1.0);
        assert!(solve(&q, 0.0, 200).is_err());
        assert!(q.to_debug_json()["constraints"][0]["rhs"] == 1.0);
    }

    #[test]
    fn project_psd_examples() {
        let q = crate::operator::Subsystem::qubit("a");
        let m = HermitianOp::new(vec![q.clone()], CMatrix::from_row_slice(2, 2, &[ONE * 2.0, ZERO, ZERO, -ONE])).unwrap();
        let p = project_psd(&m);
        assert!((p.matrix()[(0, 0)].re - 2.0).abs() < 1e-14 && p.matrix()[(1, 1)].norm() < 1e-14);
        assert!((m.distance(&p).unwrap() - 1.0).abs() < 1e-14);
        let psd = HermitianOp::identity(vec![q]).unwrap();
        assert!(project_psd(&psd).distance(&psd).unwrap() < 1e-14);
    }
}
