//! Hit-and-run sampling of valid qubit process matrices and the partial-transpose
//! generation pipeline.

use nalgebra::Cholesky;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causality::{random_robustness, SEPARABLE_TOL};
use crate::conic::{self, Block, LinearFunctional, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, SparseHermitian, C64, ONE};
use crate::operator::{HermitianOp, PauliString};
use crate::process::{allowed_basis, PartyStructure, ProcessMatrix, VALIDITY_TOL};

/// Smallest eigenvalue treated as interior by [`chord_bounds`].
pub const INTERIOR_TOL: f64 = 1e-12;
pub const MAX_CONSECUTIVE_REJECTIONS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainVariant {
    Chord,
    /// Random sign, then a step uniform between the current point and the boundary.
    OneSided,
    /// Step `W + θ(1° + sQ)`, `θ` uniform up to the boundary, renormalized to unit trace.
    Anchor,
    Reject,
}

impl std::str::FromStr for ChainVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chord" => Ok(Self::Chord),
            "one-sided" | "onesided" => Ok(Self::OneSided),
            "anchor" => Ok(Self::Anchor),
            "reject" => Ok(Self::Reject),
            _ => Err(Error::Config(format!("unknown chain variant `{s}` (expected chord, one-sided, anchor or reject)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub seed: u64,
    pub warmup_steps: usize,
    pub thinning: usize,
    pub variant: ChainVariant,
    /// Anchor points of the reject variant have minimum eigenvalue `−reject_overshoot`.
    pub reject_overshoot: f64,
    pub structure: PartyStructure,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            warmup_steps: 10_000,
            thinning: 100,
            variant: ChainVariant::Chord,
            reject_overshoot: 1e-2,
            structure: PartyStructure::qubits(),
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thinning == 0 {
            return Err(Error::Config("thinning must be at least 1".into()));
        }
        if !(self.reject_overshoot > 0.0 && self.reject_overshoot.is_finite()) {
            return Err(Error::Config(format!("overshoot must be positive, got {}", self.reject_overshoot)));
        }
        if !self.structure.is_core_qubits() || self.structure.is_extended() {
            return Err(Error::Config("sampling is implemented for the four-qubit structure".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ChainState {
    pub current: ProcessMatrix,
    pub step_count: u64,
    pub rejection_count: u64,
}

/// Chord `{μ : W + μQ ⪰ 0} = [lower, upper]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChordBounds {
    pub lower: f64,
    pub upper: f64,
}

impl ChordBounds {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, mu: f64) -> bool {
        (self.lower..=self.upper).contains(&mu)
    }
}

fn cholesky(w: &CMatrix) -> Option<Cholesky<C64, nalgebra::Dyn>> {
    Cholesky::new(w.clone())
}

fn bounds_from_factor(l_inv: &CMatrix, q: &CMatrix) -> Result<ChordBounds> {
    let m = linalg::symmetrize(&(l_inv * q * l_inv.adjoint()));
    let ev = linalg::eigvalsh(&m);
    let (lo, hi) = (ev.min(), ev.max());
    if !(hi > 0.0 && lo < 0.0) {
        return Err(Error::InvalidParameter("direction must be indefinite (traceless and nonzero)".into()));
    }
    Ok(ChordBounds { lower: -1.0 / hi, upper: -1.0 / lo })
}

/// Exact chord endpoints from the generalized eigenvalues of `(Q, W)`.
pub fn chord_bounds(w: &CMatrix, q: &CMatrix) -> Result<ChordBounds> {
    let lmin = linalg::min_eigenvalue(w);
    if lmin < INTERIOR_TOL {
        return Err(Error::Boundary(lmin));
    }
    let chol = cholesky(w).ok_or(Error::Boundary(lmin))?;
    let l_inv = chol.l().try_inverse().ok_or(Error::Boundary(lmin))?;
    bounds_from_factor(&l_inv, q)
}

/// Chord endpoints by bisection on the minimum eigenvalue of `W + μQ`.
pub fn chord_bounds_bisection(w: &CMatrix, q: &CMatrix, tol: f64) -> Result<ChordBounds> {
    let lmin = linalg::min_eigenvalue(w);
    if lmin < INTERIOR_TOL {
        return Err(Error::Boundary(lmin));
    }
    let psd = |mu: f64| linalg::min_eigenvalue(&(w + q.scale(mu))) >= 0.0;
    let side = |sign: f64| -> Result<f64> {
        let mut hi = 1.0;
        while psd(sign * hi) {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::InvalidParameter("direction is semidefinite; the chord is unbounded".into()));
            }
        }
        let mut lo = 0.0;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if psd(sign * mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    Ok(ChordBounds { lower: -side(-1.0)?, upper: side(1.0)? })
}

/// Chord endpoints from two semidefinite programs `max ±μ s.t. W ± μQ ⪰ 0`.
pub fn chord_bounds_sdp(w: &CMatrix, q: &CMatrix, tol: f64) -> Result<ChordBounds> {
    let n = w.nrows();
    let solve = |sign: f64| -> Result<f64> {
        let mut p = conic::ConeProgram::new();
        let z = p.add_block(Block::Psd(n));
        let mu = p.add_block(Block::Free(1));
        p.set_objective(LinearFunctional::new().vector(mu, vec![(0, -1.0)]));
        // Z − μ sQ = W, one row per real coordinate of a Hermitian matrix
        let qs = q.scale(sign);
        for r in 0..n {
            for c in r..n {
                let kinds: &[(C64, C64)] = if r == c { &[(ONE, ONE)] } else { &[(ONE, ONE), (-linalg::I, linalg::I)] };
                for &(up, down) in kinds {
                    let entries =
                        if r == c { vec![(r, r, ONE)] } else { vec![(r, c, up * 0.5), (c, r, down * 0.5)] };
                    let e = SparseHermitian::new(n, entries);
                    let dense = e.to_dense();
                    let qv = linalg::hs_inner(&dense, &qs);
                    let wv = linalg::hs_inner(&dense, w);
                    p.add_constraint(LinearFunctional::new().matrix(z, e).vector(mu, vec![(0, -qv)]), wv);
                }
            }
        }
        let sol = conic::solve_with(&p, &SolverOptions { tol, ..Default::default() })?;
        if !sol.is_acceptable() {
            return Err(Error::Solver(format!("chord program ended with {:?}", sol.status)));
        }
        Ok(sol.primal[mu].as_vector().expect("free block")[0])
    };
    Ok(ChordBounds { lower: -solve(-1.0)?, upper: solve(1.0)? })
}

/// Hit-and-run chain over the valid set, moving along allowed Pauli directions.
#[derive(Clone, Debug)]
pub struct Chain {
    config: ChainConfig,
    directions: Vec<CMatrix>,
    /// Per direction, anchor scales for signs `+1` and `−1`.
    anchors: Vec<[f64; 2]>,
    state: ChainState,
    w: CMatrix,
    rng: ChaCha8Rng,
}

/// Serializable chain position: the current process and the exact RNG position.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: ChainConfig,
    pub pauli_coefficients: Vec<f64>,
    pub step_count: u64,
    pub rejection_count: u64,
    /// ChaCha word position as a decimal string.
    pub rng_word_pos: String,
}

impl Chain {
    /// Starts at white noise.
    pub fn new(config: ChainConfig) -> Result<Self> {
        config.validate()?;
        let w = ProcessMatrix::white_noise(&config.structure);
        Self::start_at(config, &w)
    }

    pub fn start_at(config: ChainConfig, start: &ProcessMatrix) -> Result<Self> {
        config.validate()?;
        if start.structure() != &config.structure || !start.is_valid() {
            return Err(Error::InvalidProcess("chain start must be a valid process on the configured spaces".into()));
        }
        if start.validity().min_eigenvalue < INTERIOR_TOL {
            return Err(Error::Boundary(start.validity().min_eigenvalue));
        }
        let basis = allowed_basis(&config.structure)?;
        let side = config.structure.side();
        let norm = config.structure.d_alice_in() as f64 * config.structure.d_bob_in() as f64;
        let noise = 1.0 / norm;
        let directions: Vec<CMatrix> =
            basis.terms.iter().map(|t| PauliString::new(t.letters.clone(), 1.0 / norm).matrix()).collect();
        let anchors = directions
            .iter()
            .map(|q| {
                let ev = linalg::eigvalsh(q);
                let target = noise + config.reject_overshoot;
                [target / -ev.min(), target / ev.max()]
            })
            .collect();
        debug_assert_eq!(directions[0].nrows(), side);
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self {
            w: start.matrix().clone(),
            state: ChainState { current: start.clone(), step_count: 0, rejection_count: 0 },
            config,
            directions,
            anchors,
            rng,
        })
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn directions(&self) -> &[CMatrix] {
        &self.directions
    }

    pub fn current_matrix(&self) -> &CMatrix {
        &self.w
    }

    pub fn step_count(&self) -> u64 {
        self.state.step_count
    }

    pub fn rejection_count(&self) -> u64 {
        self.state.rejection_count
    }

    /// Anchor `1° + c·sQ` of the reject variant.
    pub fn anchor(&self, direction: usize, sign: f64) -> CMatrix {
        let c = self.anchors[direction][usize::from(sign < 0.0)];
        self.config.structure.white_noise().matrix() + self.directions[direction].scale(sign * c)
    }

    pub fn state(&mut self) -> Result<&ChainState> {
        self.sync()?;
        Ok(&self.state)
    }

    fn sync(&mut self) -> Result<()> {
        if self.state.current.matrix() != &self.w {
            let op = HermitianOp::from_parts(self.config.structure.subsystems(), self.w.clone());
            self.state.current = ProcessMatrix::new_unchecked(self.config.structure.clone(), op)?;
        }
        Ok(())
    }

    /// Current point as a validated process.
    pub fn current(&mut self) -> Result<ProcessMatrix> {
        self.sync()?;
        let w = &self.state.current;
        if w.validity().min_eigenvalue < -1e-12 || !w.validity().normalized() || !w.validity().in_valid_subspace() {
            return Err(Error::InvalidProcess(w.validity().describe_failure().unwrap_or_default()));
        }
        Ok(w.clone())
    }

    pub fn step(&mut self) -> Result<()> {
        match self.config.variant {
            ChainVariant::Chord => self.hit_and_run_step(),
            ChainVariant::OneSided => self.one_sided_step(),
            ChainVariant::Anchor => self.anchor_step(),
            ChainVariant::Reject => self.hit_and_run_reject_step(),
        }
    }

    /// One move: uniform direction and sign, then `μ` uniform on the whole chord.
    pub fn hit_and_run_step(&mut self) -> Result<()> {
        let lmin = linalg::min_eigenvalue(&self.w);
        let chol = cholesky(&self.w).ok_or(Error::Boundary(lmin))?;
        let l_inv = chol.l().try_inverse().ok_or(Error::Boundary(lmin))?;
        for attempt in 0..64 {
            let i = self.rng.random_range(0..self.directions.len());
            let sign = if self.rng.random::<bool>() { 1.0 } else { -1.0 };
            let q = &self.directions[i];
            let b = bounds_from_factor(&l_inv, q)?;
            // chord of sQ is the reflected chord of Q
            let (lo, hi) = if sign > 0.0 { (b.lower, b.upper) } else { (-b.upper, -b.lower) };
            let u: f64 = self.rng.random();
            let mu = lo + u * (hi - lo);
            let next = &self.w + q.scale(sign * mu);
            if linalg::min_eigenvalue(&next) >= INTERIOR_TOL {
                self.w = next;
                self.state.step_count += 1;
                return Ok(());
            }
            log::debug!("chord step landed on the boundary (attempt {attempt}); resampling direction");
        }
        Err(Error::Boundary(lmin))
    }

    /// Move `W + θ sQ` with `θ` uniform on `[0, μ_s]`, `μ_s` the distance to the boundary.
    pub fn one_sided_step(&mut self) -> Result<()> {
        let lmin = linalg::min_eigenvalue(&self.w);
        let chol = cholesky(&self.w).ok_or(Error::Boundary(lmin))?;
        let l_inv = chol.l().try_inverse().ok_or(Error::Boundary(lmin))?;
        for _ in 0..64 {
            let i = self.rng.random_range(0..self.directions.len());
            let sign = if self.rng.random::<bool>() { 1.0 } else { -1.0 };
            let q = &self.directions[i];
            let b = bounds_from_factor(&l_inv, q)?;
            let reach = if sign > 0.0 { b.upper } else { -b.lower };
            let theta = self.rng.random::<f64>() * reach;
            let next = &self.w + q.scale(sign * theta);
            if linalg::min_eigenvalue(&next) >= INTERIOR_TOL {
                self.w = next;
                self.state.step_count += 1;
                return Ok(());
            }
        }
        Err(Error::Boundary(lmin))
    }

    /// Unnormalized move `W + θP` toward an external anchor `P`, `θ ∈ [0, μ]` with `μ`
    /// the boundary crossing, followed by trace renormalization.
    pub fn anchor_step(&mut self) -> Result<()> {
        let lmin = linalg::min_eigenvalue(&self.w);
        let chol = cholesky(&self.w).ok_or(Error::Boundary(lmin))?;
        let l_inv = chol.l().try_inverse().ok_or(Error::Boundary(lmin))?;
        for _ in 0..64 {
            let i = self.rng.random_range(0..self.directions.len());
            let sign = if self.rng.random::<bool>() { 1.0 } else { -1.0 };
            let p = self.anchor(i, sign);
            let m = linalg::symmetrize(&(&l_inv * &p * l_inv.adjoint()));
            let lo = linalg::eigvalsh(&m).min();
            let mu = if lo < 0.0 { -1.0 / lo } else { f64::INFINITY };
            let theta = self.rng.random::<f64>() * mu;
            let next = (&self.w + p.scale(theta)).scale(1.0 / (1.0 + theta));
            if theta.is_finite() && linalg::min_eigenvalue(&next) >= INTERIOR_TOL {
                self.w = next;
                self.state.step_count += 1;
                return Ok(());
            }
        }
        Err(Error::Boundary(lmin))
    }

    /// Convex move `(1−θ)W + θP` toward an external anchor, retried until PSD.
    pub fn hit_and_run_reject_step(&mut self) -> Result<()> {
        for _ in 0..MAX_CONSECUTIVE_REJECTIONS {
            let i = self.rng.random_range(0..self.directions.len());
            let sign = if self.rng.random::<bool>() { 1.0 } else { -1.0 };
            let theta: f64 = self.rng.random();
            let p = self.anchor(i, sign);
            let next = self.w.scale(1.0 - theta) + p.scale(theta);
            if linalg::min_eigenvalue(&next) >= INTERIOR_TOL {
                self.w = next;
                self.state.step_count += 1;
                return Ok(());
            }
            self.state.rejection_count += 1;
        }
        Err(Error::Config(format!("{MAX_CONSECUTIVE_REJECTIONS} consecutive rejections; reduce the overshoot")))
    }

    pub fn advance(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    /// Next thinned sample.
    pub fn next_sample(&mut self) -> Result<ProcessMatrix> {
        self.advance(self.config.thinning)?;
        self.current()
    }

    pub fn checkpoint(&mut self) -> Result<Checkpoint> {
        self.sync()?;
        Ok(Checkpoint {
            config: self.config.clone(),
            pauli_coefficients: self.state.current.pauli_coefficients()?,
            step_count: self.state.step_count,
            rejection_count: self.state.rejection_count,
            rng_word_pos: self.rng.get_word_pos().to_string(),
        })
    }

    pub fn resume(cp: &Checkpoint) -> Result<Self> {
        let subs = cp.config.structure.subsystems();
        let side = cp.config.structure.side();
        if cp.pauli_coefficients.len() != side * side {
            return Err(Error::Format("checkpoint coefficient vector has the wrong length".into()));
        }
        let terms: Vec<PauliString> = cp
            .pauli_coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(code, &c)| {
                let letters = (0..4).map(|k| crate::operator::Pauli::from_index((code >> (2 * (3 - k))) & 3)).collect();
                PauliString::new(letters, c)
            })
            .collect();
        let op = HermitianOp::pauli_compose(subs, &terms)?;
        let w = ProcessMatrix::new(cp.config.structure.clone(), op)?;
        let mut chain = Self::start_at(cp.config.clone(), &w)?;
        let pos: u128 = cp.rng_word_pos.parse().map_err(|_| Error::Format("bad rng word position".into()))?;
        chain.rng.set_word_pos(pos);
        chain.state.step_count = cp.step_count;
        chain.state.rejection_count = cp.rejection_count;
        Ok(chain)
    }
}

/// Discards `warmup_steps`, then returns `n_samples` points spaced `thinning` steps apart.
pub fn run_chain(config: &ChainConfig, n_samples: usize) -> Result<Vec<ProcessMatrix>> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
    }
    let mut chain = Chain::new(config.clone())?;
    chain.advance(config.warmup_steps)?;
    (0..n_samples).map(|_| chain.next_sample()).collect()
}

/// One classified output of the partial-transpose pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub sample_index: usize,
    /// Robustness of the transposed process, absent if it is not PSD.
    pub r_r: Option<f64>,
    pub valid: bool,
    pub separable: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineStats {
    /// Chain samples drawn to collect the separable inputs.
    pub n_drawn: usize,
    pub n_separable_input: usize,
    pub n_valid_after_map: usize,
    pub n_nonseparable_among_valid: usize,
    pub rows: Vec<HistogramRow>,
}

impl PipelineStats {
    pub fn separable_fraction(&self) -> f64 {
        self.n_separable_input as f64 / self.n_drawn.max(1) as f64
    }

    pub fn valid_fraction(&self) -> f64 {
        self.n_valid_after_map as f64 / self.n_separable_input.max(1) as f64
    }

    pub fn nonseparable_among_valid(&self) -> f64 {
        self.n_nonseparable_among_valid as f64 / self.n_valid_after_map.max(1) as f64
    }

    pub fn is_consistent(&self) -> bool {
        self.n_separable_input <= self.n_drawn
            && self.n_valid_after_map <= self.n_separable_input
            && self.n_nonseparable_among_valid <= self.n_valid_after_map
            && self.rows.len() == self.n_separable_input
    }
}

/// Robustness of every sample; samples whose SDP fails are reported as errors.
pub fn classify(samples: &[ProcessMatrix]) -> Vec<Result<f64>> {
    samples.par_iter().map(|w| random_robustness(w).map(|r| r.lambda_opt)).collect()
}

const PIPELINE_BATCH: usize = 64;

/// Collects separable chain samples, applies `T_B`, and classifies the images.
pub fn ptb_pipeline(n_separable: usize, config: &ChainConfig) -> Result<PipelineStats> {
    ptb_pipeline_capped(n_separable, usize::MAX, config)
}

/// As [`ptb_pipeline`], but stops drawing after `max_draws` chain samples.
pub fn ptb_pipeline_capped(n_separable: usize, max_draws: usize, config: &ChainConfig) -> Result<PipelineStats> {
    let mut chain = Chain::new(config.clone())?;
    chain.advance(config.warmup_steps)?;
    let mut stats = PipelineStats::default();
    let mut separable: Vec<ProcessMatrix> = Vec::with_capacity(n_separable);
    while separable.len() < n_separable && stats.n_drawn < max_draws {
        let take = PIPELINE_BATCH.min(max_draws - stats.n_drawn);
        let batch: Vec<ProcessMatrix> = (0..take).map(|_| chain.next_sample()).collect::<Result<_>>()?;
        let verdicts = classify(&batch);
        for (w, r) in batch.into_iter().zip(verdicts) {
            if separable.len() == n_separable || stats.n_drawn == max_draws {
                break;
            }
            stats.n_drawn += 1;
            match r {
                Ok(r) if r <= SEPARABLE_TOL => separable.push(w),
                Ok(_) => {}
                Err(e) => log::warn!("skipping sample {}: {e}", stats.n_drawn - 1),
            }
        }
    }
    stats.n_separable_input = separable.len();
    let images: Vec<ProcessMatrix> = separable.iter().map(|w| w.transpose_bob()).collect::<Result<_>>()?;
    let rows: Vec<Result<HistogramRow>> = images
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            if t.validity().min_eigenvalue < -VALIDITY_TOL {
                return Ok(HistogramRow { sample_index: i, r_r: None, valid: false, separable: false });
            }
            let r = random_robustness(t)?.lambda_opt;
            Ok(HistogramRow { sample_index: i, r_r: Some(r), valid: true, separable: r <= SEPARABLE_TOL })
        })
        .collect();
    for row in rows {
        let row = row?;
        if row.valid {
            stats.n_valid_after_map += 1;
            if !row.separable {
                stats.n_nonseparable_among_valid += 1;
            }
        }
        stats.rows.push(row);
    }
    Ok(stats)
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_survival(lambda))
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let t = 2.0 * (if k % 2 == 1 { 1.0 } else { -1.0 }) * (-2.0 * (k as f64 * lambda).powi(2)).exp();
        s += t;
        if t.abs() < 1e-16 {
            break;
        }
    }
    s.clamp(0.0, 1.0)
}
