//! Quantum instruments, probability tables, and see-saw optimization of
//! causal-inequality games.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causality::ProbabilityTable;
use crate::conic::{self, Block, LinearFunctional, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, SparseHermitian, C64, I, ONE};
use crate::operator::{cj_matrix, HermitianOp, Subsystem};
use crate::process::{PartyStructure, ProcessMatrix};

/// CP and completeness slack of [`Instrument::validate`].
pub const INSTRUMENT_TOL: f64 = 1e-8;

/// Margin above the causal bound required to report a violation.
pub const VIOLATION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn spaces(self, s: &PartyStructure) -> Vec<Subsystem> {
        match self {
            Party::Alice => s.alice(),
            Party::Bob => s.bob(),
        }
    }
}

/// CJ operators `ops[x][a]` on `(inputs..., output)`; the last space is the output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instrument {
    pub party: Party,
    pub spaces: Vec<Subsystem>,
    pub ops: Vec<Vec<CMatrix>>,
}

impl Instrument {
    pub fn new(party: Party, spaces: Vec<Subsystem>, ops: Vec<Vec<CMatrix>>) -> Result<Self> {
        let inst = Self { party, spaces, ops };
        inst.validate(INSTRUMENT_TOL)?;
        Ok(inst)
    }

    pub fn settings(&self) -> usize {
        self.ops.len()
    }

    pub fn outcomes(&self) -> usize {
        self.ops.first().map_or(0, |o| o.len())
    }

    pub fn d_in(&self) -> usize {
        self.spaces[..self.spaces.len() - 1].iter().map(|s| s.dim()).product()
    }

    pub fn d_out(&self) -> usize {
        self.spaces.last().map_or(1, |s| s.dim())
    }

    pub fn side(&self) -> usize {
        self.d_in() * self.d_out()
    }

    pub fn op(&self, x: usize, a: usize) -> &CMatrix {
        &self.ops[x][a]
    }

    pub fn as_hermitian(&self, x: usize, a: usize) -> Result<HermitianOp> {
        HermitianOp::new(self.spaces.clone(), self.ops[x][a].clone())
    }

    /// Largest deviation `‖tr_out Σ_a op(x,a) − 1‖_F` over settings.
    pub fn completeness_residual(&self) -> f64 {
        let (din, dout) = (self.d_in(), self.d_out());
        self.ops
            .iter()
            .map(|outs| {
                let mut sum = CMatrix::zeros(self.side(), self.side());
                for o in outs {
                    sum += o;
                }
                (trace_out(&sum, din, dout) - CMatrix::identity(din, din)).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.ops.iter().flatten().map(linalg::min_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.spaces.is_empty() || self.ops.is_empty() || self.outcomes() == 0 {
            return Err(Error::InvalidParameter("instrument needs spaces, settings and outcomes".into()));
        }
        let side = self.side();
        for outs in &self.ops {
            if outs.len() != self.outcomes() || outs.iter().any(|o| o.nrows() != side || o.ncols() != side) {
                return Err(Error::DimensionMismatch("instrument operators have inconsistent shapes".into()));
            }
        }
        if let Some(a) = self.ops.iter().flatten().map(linalg::max_asymmetry).find(|a| *a > 1e-10) {
            return Err(Error::NotHermitian(a));
        }
        let lmin = self.min_eigenvalue();
        if lmin < -tol {
            return Err(Error::InvalidParameter(format!("instrument is not CP (min eigenvalue {lmin:.3e})")));
        }
        let r = self.completeness_residual();
        if r > tol {
            return Err(Error::InvalidParameter(format!("instrument is not trace preserving (residual {r:.3e})")));
        }
        Ok(())
    }

    /// Elementwise transpose of every CJ operator.
    pub fn transpose(&self) -> Instrument {
        Instrument {
            party: self.party,
            spaces: self.spaces.clone(),
            ops: self.ops.iter().map(|o| o.iter().map(|m| m.transpose()).collect()).collect(),
        }
    }

    /// `μ self + (1−μ) other`, setting by setting.
    pub fn mix(&self, other: &Instrument, mu: f64) -> Result<Instrument> {
        if self.spaces != other.spaces || self.settings() != other.settings() || self.outcomes() != other.outcomes() {
            return Err(Error::DimensionMismatch("mixing instruments of different shapes".into()));
        }
        let ops = self
            .ops
            .iter()
            .zip(&other.ops)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.scale(mu) + y.scale(1.0 - mu)).collect())
            .collect();
        Ok(Instrument { party: self.party, spaces: self.spaces.clone(), ops })
    }
}

/// `tr_out` of an operator on `in ⊗ out`.
pub fn trace_out(m: &CMatrix, din: usize, dout: usize) -> CMatrix {
    let mut t = CMatrix::zeros(din, din);
    for r in 0..din {
        for c in 0..din {
            let mut acc = C64::new(0.0, 0.0);
            for o in 0..dout {
                acc += m[(r * dout + o, c * dout + o)];
            }
            t[(r, c)] = acc;
        }
    }
    t
}

/// Haar-random isometry `d_in → rows` from the QR decomposition of a Gaussian matrix.
pub fn haar_isometry(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q.columns(0, cols).into_owned();
    for k in 0..cols {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

/// Random instrument: per setting a Haar isometry into `out ⊗ env`, whose environment
/// basis is split into outcome classes `e mod outcomes`.
pub fn random_instrument(party: Party, settings: usize, outcomes: usize, spaces: &[Subsystem], seed: u64) -> Result<Instrument> {
    if spaces.is_empty() || settings == 0 || outcomes == 0 {
        return Err(Error::InvalidParameter("instrument needs spaces, settings and outcomes".into()));
    }
    let din: usize = spaces[..spaces.len() - 1].iter().map(|s| s.dim()).product();
    let dout = spaces[spaces.len() - 1].dim();
    let denv = outcomes * din * dout;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ops = Vec::with_capacity(settings);
    for _ in 0..settings {
        let v = haar_isometry(dout * denv, din, &mut rng);
        let mut outs = Vec::with_capacity(outcomes);
        for a in 0..outcomes {
            let kraus: Vec<CMatrix> = (a..denv)
                .step_by(outcomes)
                .map(|e| CMatrix::from_fn(dout, din, |o, j| v[(o * denv + e, j)]))
                .collect();
            outs.push(cj_matrix(&kraus, din, dout)?);
        }
        ops.push(outs);
    }
    Instrument::new(party, spaces.to_vec(), ops)
}

/// Linear game `Σ c(a,b,x,y) p(a,b|x,y)` with the setting distribution folded into `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameFunctional {
    pub nx: usize,
    pub ny: usize,
    pub na: usize,
    pub nb: usize,
    /// Laid out like [`ProbabilityTable`] entries.
    pub coeffs: Vec<f64>,
    pub bound: f64,
}

impl GameFunctional {
    /// Guess your neighbour's input: `c = (1/4) δ_{a,y} δ_{b,x}`, causal bound 1/2.
    pub fn gyni() -> Self {
        let t = ProbabilityTable::from_fn(2, 2, 2, 2, |a, b, x, y| if a == y && b == x { 0.25 } else { 0.0 });
        Self { nx: 2, ny: 2, na: 2, nb: 2, coeffs: t.p, bound: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.coeffs.len() != self.nx * self.ny * self.na * self.nb || self.coeffs.is_empty() {
            return Err(Error::DimensionMismatch("game coefficients do not match its alphabets".into()));
        }
        if self.coeffs.iter().any(|c| !c.is_finite()) || !self.bound.is_finite() {
            return Err(Error::Format("game coefficients must be finite".into()));
        }
        Ok(())
    }

    pub fn index(&self, a: usize, b: usize, x: usize, y: usize) -> usize {
        ((x * self.ny + y) * self.na + a) * self.nb + b
    }

    pub fn coeff(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.coeffs[self.index(a, b, x, y)]
    }

    pub fn score(&self, p: &ProbabilityTable) -> f64 {
        p.dot(&self.coeffs)
    }
}

fn check_spaces(w: &ProcessMatrix, inst: &Instrument, party: Party) -> Result<()> {
    if inst.spaces != party.spaces(w.structure()) || inst.party != party {
        return Err(Error::DimensionMismatch(format!("{party:?}'s instrument does not match the process")));
    }
    Ok(())
}

/// `p(a,b|x,y) = tr[W ξ_x^a ⊗ η_y^b]`.
pub fn prob_table(w: &ProcessMatrix, a: &Instrument, b: &Instrument) -> Result<ProbabilityTable> {
    check_spaces(w, a, Party::Alice)?;
    check_spaces(w, b, Party::Bob)?;
    let (nx, na, ny, nb) = (a.settings(), a.outcomes(), b.settings(), b.outcomes());
    let mut t = ProbabilityTable::from_fn(nx, ny, na, nb, |_, _, _, _| 0.0);
    for y in 0..ny {
        for bo in 0..nb {
            let f = w.contract_bob(b.op(y, bo))?;
            for x in 0..nx {
                for ao in 0..na {
                    let i = t.index(ao, bo, x, y);
                    t.p[i] = linalg::hs_inner(a.op(x, ao), f.matrix());
                }
            }
        }
    }
    Ok(t)
}

/// Operators on the other party such that `tr[op · F[s][o]]` reproduces the table.
pub fn contract_party(w: &ProcessMatrix, fixed: &Instrument) -> Result<Vec<Vec<HermitianOp>>> {
    check_spaces(w, fixed, fixed.party)?;
    fixed
        .ops
        .iter()
        .map(|outs| {
            outs.iter()
                .map(|op| match fixed.party {
                    Party::Alice => w.contract_alice(op),
                    Party::Bob => w.contract_bob(op),
                })
                .collect()
        })
        .collect()
}

/// Residual diagnostics of the inner programs of a see-saw run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InnerDiagnostics {
    pub solves: usize,
    pub max_primal_residual: f64,
    pub max_dual_residual: f64,
    pub max_gap: f64,
    pub max_repair: f64,
}

impl InnerDiagnostics {
    fn absorb(&mut self, o: &InnerDiagnostics) {
        self.solves += o.solves;
        self.max_primal_residual = self.max_primal_residual.max(o.max_primal_residual);
        self.max_dual_residual = self.max_dual_residual.max(o.max_dual_residual);
        self.max_gap = self.max_gap.max(o.max_gap);
        self.max_repair = self.max_repair.max(o.max_repair);
    }
}

/// Exact best response: maximizes `Σ_a ⟨G_a, ξ_a⟩` over instruments for one setting.
pub fn best_response_setting(
    g: &[CMatrix],
    din: usize,
    dout: usize,
    opts: &SolverOptions,
    diag: &mut InnerDiagnostics,
) -> Result<Vec<CMatrix>> {
    let side = din * dout;
    let mut p = conic::ConeProgram::new();
    let blocks: Vec<usize> = g.iter().map(|_| p.add_block(Block::Psd(side))).collect();
    let mut obj = LinearFunctional::new();
    for (b, ga) in blocks.iter().zip(g) {
        obj = obj.matrix(*b, SparseHermitian::from_dense(&ga.scale(-1.0), 0.0));
    }
    p.set_objective(obj);
    // tr_out Σ_a ξ_a = 1, entry by entry: diagonal, then real and imaginary parts above it
    let unit = |entries: Vec<(usize, usize, C64)>| SparseHermitian::new(side, entries);
    let mut add = |coeff: SparseHermitian, rhs: f64| {
        let mut f = LinearFunctional::new();
        for b in &blocks {
            f = f.matrix(*b, coeff.clone());
        }
        p.add_constraint(f, rhs);
    };
    for r in 0..din {
        add(unit((0..dout).map(|o| (r * dout + o, r * dout + o, ONE)).collect()), 1.0);
    }
    for r in 0..din {
        for c in r + 1..din {
            let re = (0..dout)
                .flat_map(|o| [(r * dout + o, c * dout + o, ONE * 0.5), (c * dout + o, r * dout + o, ONE * 0.5)])
                .collect();
            add(unit(re), 0.0);
            let im = (0..dout)
                .flat_map(|o| [(r * dout + o, c * dout + o, -I * 0.5), (c * dout + o, r * dout + o, I * 0.5)])
                .collect();
            add(unit(im), 0.0);
        }
    }
    let opts = SolverOptions { presolve: false, ..*opts };
    let sol = conic::solve_with(&p, &opts)?;
    if !sol.is_acceptable() {
        return Err(Error::Solver(format!(
            "best-response program ended with {:?} (primal residual {:.2e}, dual residual {:.2e}, gap {:.2e})",
            sol.status, sol.primal_residual, sol.dual_residual, sol.gap
        )));
    }
    diag.solves += 1;
    diag.max_primal_residual = diag.max_primal_residual.max(sol.primal_residual);
    diag.max_dual_residual = diag.max_dual_residual.max(sol.dual_residual);
    diag.max_gap = diag.max_gap.max(sol.gap);
    let raw: Vec<CMatrix> = blocks.iter().map(|b| sol.primal[*b].as_matrix().expect("psd").clone()).collect();
    let (fixed, repair) = repair_instrument(&raw, din, dout)?;
    diag.max_repair = diag.max_repair.max(repair);
    Ok(fixed)
}

/// Clips negative eigenvalues and restores completeness exactly by conjugating with
/// `(tr_out Σ_a ξ_a)^{-1/2} ⊗ 1`. Returns the repaired operators and the correction size.
pub fn repair_instrument(ops: &[CMatrix], din: usize, dout: usize) -> Result<(Vec<CMatrix>, f64)> {
    let clipped: Vec<CMatrix> = ops.iter().map(conic::project_psd_matrix).collect();
    let side = din * dout;
    let mut sum = CMatrix::zeros(side, side);
    for c in &clipped {
        sum += c;
    }
    let t = trace_out(&sum, din, dout);
    let (vals, vecs) = linalg::eigh_sorted(&linalg::symmetrize(&t));
    if vals.last().is_none_or(|v| *v <= 1e-12) {
        return Err(Error::Solver("best response is not trace preserving".into()));
    }
    let mut isqrt = CMatrix::zeros(din, din);
    for (k, &l) in vals.iter().enumerate() {
        let v = vecs.column(k);
        isqrt += (&v * v.adjoint()).scale(1.0 / l.sqrt());
    }
    let k = isqrt.kronecker(&CMatrix::identity(dout, dout));
    let fixed: Vec<CMatrix> = clipped.iter().map(|c| linalg::symmetrize(&(&k * c * &k))).collect();
    let change = fixed.iter().zip(ops).map(|(f, o)| (f - o).norm()).fold(0.0, f64::max);
    Ok((fixed, change))
}

/// Best response of `party` to the other party's fixed instrument.
pub fn best_response(
    w: &ProcessMatrix,
    game: &GameFunctional,
    party: Party,
    other: &Instrument,
    opts: &SolverOptions,
    diag: &mut InnerDiagnostics,
) -> Result<Instrument> {
    let contracted = contract_party(w, other)?;
    let spaces = party.spaces(w.structure());
    let din: usize = spaces[..spaces.len() - 1].iter().map(|s| s.dim()).product();
    let dout = spaces[spaces.len() - 1].dim();
    let side = din * dout;
    let (n_own_s, n_own_o, n_other_s, n_other_o) = match party {
        Party::Alice => (game.nx, game.na, game.ny, game.nb),
        Party::Bob => (game.ny, game.nb, game.nx, game.na),
    };
    let mut ops = Vec::with_capacity(n_own_s);
    for s in 0..n_own_s {
        let g: Vec<CMatrix> = (0..n_own_o)
            .map(|o| {
                let mut acc = CMatrix::zeros(side, side);
                for t in 0..n_other_s {
                    for u in 0..n_other_o {
                        let c = match party {
                            Party::Alice => game.coeff(o, u, s, t),
                            Party::Bob => game.coeff(u, o, t, s),
                        };
                        if c != 0.0 {
                            acc += contracted[t][u].matrix().scale(c);
                        }
                    }
                }
                linalg::symmetrize(&acc)
            })
            .collect();
        ops.push(best_response_setting(&g, din, dout, opts, diag)?);
    }
    Ok(Instrument { party, spaces, ops })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeesawOptions {
    pub restarts: usize,
    pub seed: u64,
    pub inner_tol: f64,
    /// Stop once an alternation gains less than this.
    pub outer_tol: f64,
    pub max_alternations: usize,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self { restarts: 20, seed: 0, inner_tol: 1e-9, outer_tol: 1e-10, max_alternations: 200 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RestartOutcome {
    pub index: usize,
    pub seed: u64,
    pub best_score: f64,
    /// Score after initialization and after every accepted or rejected half-step.
    pub history: Vec<f64>,
    pub alternations: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeesawResult {
    pub best_score: f64,
    pub strategy: Option<(Instrument, Instrument)>,
    pub best_restart: Option<usize>,
    pub restarts_used: usize,
    pub restarts: Vec<RestartOutcome>,
    pub causal_bound: f64,
    pub violation_found: bool,
    /// "violation found", or the caveat that absence of a violation is evidence only.
    pub evidence: String,
    pub diagnostics: InnerDiagnostics,
}

impl SeesawResult {
    /// Best score of any restart, equal to `best_score`.
    pub fn history(&self) -> Option<&[f64]> {
        self.best_restart.map(|i| self.restarts[i].history.as_slice())
    }
}

/// Seed of the Alice (`party = 0`) or Bob (`party = 1`) instrument of restart `index`.
pub fn restart_seed(base: u64, index: usize, party: u64) -> u64 {
    base.wrapping_add(2 * index as u64 + party)
}

/// Runs one see-saw restart from the given strategy.
pub fn seesaw_from(
    w: &ProcessMatrix,
    game: &GameFunctional,
    mut a: Instrument,
    mut b: Instrument,
    opts: &SeesawOptions,
    diag: &mut InnerDiagnostics,
) -> Result<(f64, Vec<f64>, usize, Instrument, Instrument)> {
    let inner = SolverOptions { tol: opts.inner_tol, ..Default::default() };
    let mut score = game.score(&prob_table(w, &a, &b)?);
    let mut history = vec![score];
    let mut alternations = 0;
    while alternations < opts.max_alternations {
        alternations += 1;
        let start = score;
        let a_new = best_response(w, game, Party::Alice, &b, &inner, diag)?;
        let s_new = game.score(&prob_table(w, &a_new, &b)?);
        if s_new >= score {
            a = a_new;
            score = s_new;
        }
        history.push(score);
        let b_new = best_response(w, game, Party::Bob, &a, &inner, diag)?;
        let s_new = game.score(&prob_table(w, &a, &b_new)?);
        if s_new >= score {
            b = b_new;
            score = s_new;
        }
        history.push(score);
        if score - start < opts.outer_tol {
            break;
        }
    }
    Ok((score, history, alternations, a, b))
}

/// Best score over independent random restarts; restarts run in parallel and the merge
/// picks the highest score, breaking ties by restart index.
pub fn seesaw(w: &ProcessMatrix, game: &GameFunctional, opts: &SeesawOptions) -> Result<SeesawResult> {
    game.validate()?;
    let s = w.structure();
    let runs: Vec<(RestartOutcome, Option<(Instrument, Instrument)>, InnerDiagnostics)> = (0..opts.restarts)
        .into_par_iter()
        .map(|i| {
            let mut diag = InnerDiagnostics::default();
            let sa = restart_seed(opts.seed, i, 0);
            let run = (|| {
                let a = random_instrument(Party::Alice, game.nx, game.na, &s.alice(), sa)?;
                let b = random_instrument(Party::Bob, game.ny, game.nb, &s.bob(), restart_seed(opts.seed, i, 1))?;
                seesaw_from(w, game, a, b, opts, &mut diag)
            })();
            match run {
                Ok((score, history, alternations, a, b)) => (
                    RestartOutcome { index: i, seed: sa, best_score: score, history, alternations, error: None },
                    Some((a, b)),
                    diag,
                ),
                Err(e) => {
                    log::warn!("see-saw restart {i} skipped: {e}");
                    (
                        RestartOutcome {
                            index: i,
                            seed: sa,
                            best_score: f64::NEG_INFINITY,
                            history: Vec::new(),
                            alternations: 0,
                            error: Some(e.to_string()),
                        },
                        None,
                        diag,
                    )
                }
            }
        })
        .collect();
    Ok(merge(runs, game.bound))
}

fn merge(runs: Vec<(RestartOutcome, Option<(Instrument, Instrument)>, InnerDiagnostics)>, bound: f64) -> SeesawResult {
    let mut diagnostics = InnerDiagnostics::default();
    let mut best: Option<usize> = None;
    for (i, (r, strat, d)) in runs.iter().enumerate() {
        diagnostics.absorb(d);
        if strat.is_some() && best.is_none_or(|b| r.best_score > runs[b].0.best_score) {
            best = Some(i);
        }
    }
    let best_score = best.map_or(f64::NEG_INFINITY, |b| runs[b].0.best_score);
    let restarts_used = runs.iter().filter(|r| r.1.is_some()).count();
    let violation_found = best_score > bound + VIOLATION_TOL;
    let evidence = if violation_found {
        "violation found".to_string()
    } else {
        format!("no violation found in {restarts_used} restarts; this is numerical evidence, not a proof")
    };
    let strategy = best.and_then(|b| runs[b].1.clone());
    SeesawResult {
        best_score,
        strategy,
        best_restart: best,
        restarts_used,
        restarts: runs.into_iter().map(|r| r.0).collect(),
        causal_bound: bound,
        violation_found,
        evidence,
        diagnostics,
    }
}

/// See-saw on `(1−κ) W_ext + κ 1°` for an ancilla-extended process.
pub fn seesaw_extended(w_ext: &ProcessMatrix, game: &GameFunctional, kappa: f64, opts: &SeesawOptions) -> Result<SeesawResult> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::InvalidParameter(format!("kappa = {kappa} must lie in [0, 1]")));
    }
    let noisy = w_ext.with_white_noise(kappa)?;
    seesaw(&noisy, game, opts)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoiseSweepRow {
    pub kappa: f64,
    pub best_score: f64,
    pub violation_found: bool,
    pub restarts_used: usize,
    pub best_restart: Option<usize>,
}

pub fn noise_sweep(w_ext: &ProcessMatrix, game: &GameFunctional, kappas: &[f64], opts: &SeesawOptions) -> Result<Vec<NoiseSweepRow>> {
    kappas
        .iter()
        .map(|&kappa| {
            let r = seesaw_extended(w_ext, game, kappa, opts)?;
            Ok(NoiseSweepRow {
                kappa,
                best_score: r.best_score,
                violation_found: r.violation_found,
                restarts_used: r.restarts_used,
                best_restart: r.best_restart,
            })
        })
        .collect()
}
