//! `procmat`: command-line front end for process-matrix analysis.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use procmat::causality::{
    causal_lp, random_robustness_with, werner_window, witness_certify, witness_check, witness_sw, Witness,
};
use procmat::conic::SolverOptions;
use procmat::io::{GameFile, MatrixFormat, PauliEntry, ProcessFile, StrategyFile, TableFile};
use procmat::process::{
    eps_causal, eps_validity, extended_optimal, extend_with_state, ancilla_state, make_named, FamilyParams,
    NamedProcess, ProcessMatrix, AIP, BIP,
};
use procmat::sampler::{ptb_pipeline_capped, Chain, ChainConfig, ChainVariant, Checkpoint};
use procmat::seesaw::{
    noise_sweep, prob_table, random_instrument, seesaw, GameFunctional, Party, SeesawOptions, SeesawResult,
};
use procmat::{max_entangled, Error};

const EXIT_INVALID: u8 = 2;
const EXIT_SOLVER: u8 = 3;

const AFTER_HELP: &str = "\
Exit codes: 0 success, 2 validation or format failure, 3 solver non-convergence.

Files: process files are JSON {\"dims\", \"format\": \"pauli\"|\"dense\", \"pauli_coeffs\" | \"dense\"}.
Every file written with --out is accompanied by <out>.manifest.json recording the command,
configuration, seeds, tool version and wall time.

CSV schemas:
  region        q,eps_v,eps_c
  ptb-pipeline  sample_index,r_r,valid,separable   (r_r empty when the image is not PSD)
  noise-sweep   kappa,best_score,violation_found,restarts_used,best_restart";

#[derive(Parser, Debug)]
#[command(name = "procmat", version, about = "Causal structure of bipartite process matrices", after_help = AFTER_HELP)]
struct Cli {
    /// Worker threads for restarts, chains and sample classification.
    #[arg(long, global = true, env = "PROCMAT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check positivity, normalization and the valid-subspace condition.
    Validate(ValidateArgs),
    /// Random robustness R_r(W) by semidefinite programming; prints R_r with 9 decimals.
    Robustness(RobustnessArgs),
    /// Check the fixed witness S_W, or extract the optimal witness of a process.
    Witness(WitnessArgs),
    /// Probability table of a process under a pair of instruments.
    Born(BornArgs),
    /// Decide whether a probability table is causal; prints a separating inequality otherwise.
    CausalLp(CausalLpArgs),
    /// See-saw maximization of a causal-inequality functional (GYNI by default).
    Seesaw(SeesawArgs),
    /// Hit-and-run samples of valid qubit processes as JSON lines.
    Sample(SampleArgs),
    /// Separable samples pushed through the partial transpose on Bob; histogram CSV.
    PtbPipeline(PtbArgs),
    /// Validity and separability thresholds of the W(q, eps) family; CSV.
    Region(RegionArgs),
    /// Noise window in which a Werner process is nonseparable but its T_B image is separable.
    WernerWindow(WernerArgs),
    /// See-saw violation of the extended process as a function of white noise; CSV.
    NoiseSweep(NoiseSweepArgs),
    /// Emit a named process as a process file.
    Named(NamedArgs),
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// Input file; standard input when omitted.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Accept processes that fail validation.
    #[arg(long)]
    allow_invalid: bool,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args, Debug)]
struct RobustnessArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Solver tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Full JSON report (robustness, solver summary, witness) written here.
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct WitnessArgs {
    /// Process whose optimal witness is extracted; S_W alone is checked when omitted.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    allow_invalid: bool,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct BornArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Strategy file with Alice's and Bob's instruments; random two-setting instruments when omitted.
    #[arg(long)]
    strategy: Option<PathBuf>,
    /// Seed for random instruments.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CausalLpArgs {
    /// Probability table file.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SeesawArgs {
    /// Process file; use --name for a built-in process.
    #[arg(long = "in", conflicts_with = "name")]
    input: Option<PathBuf>,
    #[arg(long)]
    allow_invalid: bool,
    #[command(flatten)]
    named: NamedParams,
    /// Game file; GYNI when omitted.
    #[arg(long)]
    game: Option<PathBuf>,
    /// White-noise weight mixed into the process before optimizing.
    #[arg(long, default_value_t = 0.0)]
    kappa: f64,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Inner SDP tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Best strategy written here as a strategy file.
    #[arg(long)]
    strategy_out: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
struct ChainArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Step rule: chord, one-sided, anchor or reject.
    #[arg(long, default_value = "chord")]
    variant: String,
    #[arg(long, default_value_t = 10_000)]
    warmup: usize,
    #[arg(long, default_value_t = 100)]
    thinning: usize,
    /// Anchor overshoot of the anchor and reject variants.
    #[arg(long, default_value_t = 1e-2)]
    overshoot: f64,
}

impl ChainArgs {
    fn config(&self) -> anyhow::Result<ChainConfig> {
        let cfg = ChainConfig {
            seed: self.seed,
            warmup_steps: self.warmup,
            thinning: self.thinning,
            variant: self.variant.parse::<ChainVariant>()?,
            reject_overshoot: self.overshoot,
            ..ChainConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Resume from a checkpoint instead of starting at white noise (no warmup).
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Write the final chain state here.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct PtbArgs {
    #[command(flatten)]
    chain: ChainArgs,
    /// Number of separable inputs to collect.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Upper limit on chain samples drawn while collecting.
    #[arg(long)]
    max_draws: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct RegionArgs {
    /// Number of q values on [0, 1].
    #[arg(long, default_value_t = 101)]
    grid: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct WernerArgs {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Noise level at which membership in the window is verified.
    #[arg(long, default_value_t = 0.2)]
    gamma: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct NoiseSweepArgs {
    /// Extended process file; W_opt with a maximally entangled ancilla pair when omitted.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Ancilla dimension of the default extended process.
    #[arg(long, default_value_t = 4)]
    ancilla_dim: usize,
    /// Comma-separated noise weights.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 1e-4, 2e-4, 3e-4, 4e-4, 6e-4, 1e-3])]
    kappa: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
struct NamedParams {
    /// white-noise, wab, wba, wqe, d23, iab, wopt, wocb, wmix or wwer.
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
}

impl NamedParams {
    fn params(&self) -> FamilyParams {
        let d = FamilyParams::default();
        FamilyParams {
            q: self.q.unwrap_or(d.q),
            eps: self.eps.unwrap_or(d.eps),
            alpha: self.alpha.unwrap_or(d.alpha),
            gamma: self.gamma.unwrap_or(d.gamma),
            kappa: d.kappa,
        }
    }

    fn build(&self) -> anyhow::Result<Option<ProcessMatrix>> {
        let Some(name) = &self.name else { return Ok(None) };
        let name: NamedProcess = name.parse()?;
        Ok(Some(make_named(name, &self.params())?))
    }
}

#[derive(Args, Debug)]
struct NamedArgs {
    #[command(flatten)]
    named: NamedParams,
    /// Attach a maximally entangled ancilla pair of this dimension (dense output).
    #[arg(long)]
    extend: Option<usize>,
    /// Output format; pauli for qubit processes, dense otherwise.
    #[arg(long)]
    format: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: serde_json::Value,
    seeds: Vec<u64>,
    version: &'static str,
    wall_time_seconds: f64,
    outputs: Vec<String>,
}

/// Output of one command. `body` goes to `--out` (or stdout); `summary`, when present,
/// is what stdout shows instead.
struct Report {
    command: &'static str,
    config: serde_json::Value,
    seeds: Vec<u64>,
    summary: Option<String>,
    text: String,
    out: Option<PathBuf>,
    extra_outputs: Vec<PathBuf>,
}

impl Report {
    fn new(command: &'static str, config: serde_json::Value, text: String, out: Option<PathBuf>) -> Self {
        Self { command, config, seeds: Vec::new(), summary: None, text, out, extra_outputs: Vec::new() }
    }

    fn summary(mut self, line: String) -> Self {
        self.summary = Some(line);
        self
    }

    fn seeds(mut self, seeds: Vec<u64>) -> Self {
        self.seeds = seeds;
        self
    }
}

fn read_input(path: Option<&Path>) -> anyhow::Result<String> {
    match path {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).context("reading standard input")?;
            Ok(s)
        }
    }
}

fn read_process(input: &InputArgs) -> anyhow::Result<ProcessMatrix> {
    let text = read_input(input.input.as_deref())?;
    Ok(ProcessFile::parse(&text)?.to_process(input.allow_invalid)?)
}

fn to_json<T: Serialize>(v: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn csv_string<T: Serialize>(rows: &[T]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

fn csv_with_header<T: Serialize>(header: &[&str], rows: &[T]) -> anyhow::Result<String> {
    if rows.is_empty() {
        return Ok(header.join(",") + "\n");
    }
    csv_string(rows)
}

fn witness_file(w: &Witness) -> anyhow::Result<ProcessFile> {
    let dims = w.s.subsystems().iter().map(|s| (s.label().to_string(), s.dim())).collect();
    if w.s.is_qubit_register() {
        let terms = w.s.pauli_decompose()?;
        let pauli_coeffs = terms.iter().map(|t| PauliEntry { term: t.word(), coeff: t.coefficient }).collect();
        Ok(ProcessFile { dims, format: MatrixFormat::Pauli, pauli_coeffs: Some(pauli_coeffs), dense: None })
    } else {
        let m = w.s.matrix();
        let dense = (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| [m[(r, c)].re, m[(r, c)].im])).collect();
        Ok(ProcessFile { dims, format: MatrixFormat::Dense, pauli_coeffs: None, dense: Some(dense) })
    }
}

fn solver_options(tol: f64) -> anyhow::Result<SolverOptions> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must lie in (0, 1)")).into());
    }
    Ok(SolverOptions { tol, ..SolverOptions::default() })
}

fn cmd_validate(a: ValidateArgs) -> anyhow::Result<Report> {
    let mut input = a.input.clone();
    input.allow_invalid = true;
    let w = read_process(&input)?;
    let v = *w.validity();
    let text = to_json(&json!({
        "valid": v.is_valid(),
        "psd": v.psd(),
        "normalized": v.normalized(),
        "in_valid_subspace": v.in_valid_subspace(),
        "min_eigenvalue": v.min_eigenvalue,
        "trace": v.trace,
        "target_trace": v.target_trace,
        "subspace_residual": v.subspace_residual,
        "failure": v.describe_failure(),
    }))?;
    if !v.is_valid() {
        print!("{text}");
        return Err(Error::InvalidProcess(v.describe_failure().unwrap_or_default()).into());
    }
    Ok(Report::new("validate", json!({}), text, None))
}

fn cmd_robustness(a: RobustnessArgs) -> anyhow::Result<Report> {
    let w = read_process(&a.input)?;
    let r = random_robustness_with(&w, &solver_options(a.tol)?)?;
    let witness = r.witness.as_ref().map(witness_file).transpose()?;
    let text = to_json(&json!({
        "robustness": r.lambda_opt,
        "separable": r.is_separable(),
        "solver": r.solver,
        "witness": witness,
    }))?;
    Ok(Report::new("robustness", json!({ "tol": a.tol }), text, a.output.out).summary(format!("{:.9}\n", r.lambda_opt)))
}

fn cmd_witness(a: WitnessArgs) -> anyhow::Result<Report> {
    let config = json!({ "tol": a.tol, "input": a.input });
    let (w, value) = match &a.input {
        None => (witness_sw(), None),
        Some(p) => {
            let input = InputArgs { input: Some(p.clone()), allow_invalid: a.allow_invalid };
            let proc_ = read_process(&input)?;
            let r = random_robustness_with(&proc_, &solver_options(a.tol)?)?;
            let Some(w) = r.witness else {
                bail!(Error::InvalidParameter(format!(
                    "process is causally separable (R_r = {:.3e}); no witness exists",
                    r.lambda_opt
                )));
            };
            let v = w.value(&proc_)?;
            (w, Some(v))
        }
    };
    let cert = witness_certify(&w)?;
    let text = to_json(&json!({
        "sufficient_condition": witness_check(&w),
        "certified": cert.certified,
        "min_separable_value": cert.min_separable_value,
        "normalization": w.normalization(),
        "value_on_input": value,
        "witness": witness_file(&w)?,
    }))?;
    Ok(Report::new("witness", config, text, a.output.out))
}

fn cmd_born(a: BornArgs) -> anyhow::Result<Report> {
    let w = read_process(&a.input)?;
    let (alice, bob) = match &a.strategy {
        Some(p) => StrategyFile::parse(&read_input(Some(p))?)?.instruments()?,
        None => {
            let s = w.structure();
            let alice = random_instrument(Party::Alice, 2, 2, &Party::Alice.spaces(s), a.seed)?;
            let bob = random_instrument(Party::Bob, 2, 2, &Party::Bob.spaces(s), a.seed.wrapping_add(1))?;
            (alice, bob)
        }
    };
    let table = prob_table(&w, &alice, &bob)?;
    let text = to_json(&TableFile::from_table(&table))?;
    Ok(Report::new("born", json!({ "strategy": a.strategy, "seed": a.seed }), text, a.output.out).seeds(vec![a.seed]))
}

fn cmd_causal_lp(a: CausalLpArgs) -> anyhow::Result<Report> {
    let table = TableFile::parse(&read_input(a.input.as_deref())?)?.to_table()?;
    let r = causal_lp(&table)?;
    let text = to_json(&json!({
        "causal": r.causal,
        "noise_weight": r.noise_weight,
        "certificate": r.certificate,
        "decomposition": r.decomposition,
        "solver": r.solver,
    }))?;
    Ok(Report::new("causal-lp", json!({}), text, a.output.out))
}

fn seesaw_summary(r: &SeesawResult) -> serde_json::Value {
    json!({
        "best_score": r.best_score,
        "causal_bound": r.causal_bound,
        "violation": r.best_score - r.causal_bound,
        "violation_found": r.violation_found,
        "evidence": r.evidence,
        "best_restart": r.best_restart,
        "restarts_used": r.restarts_used,
        "restarts": r.restarts.iter().map(|o| json!({
            "index": o.index, "seed": o.seed, "best_score": o.best_score,
            "alternations": o.alternations, "error": o.error,
        })).collect::<Vec<_>>(),
        "diagnostics": r.diagnostics,
    })
}

fn cmd_seesaw(a: SeesawArgs) -> anyhow::Result<Report> {
    let w = match a.named.build()? {
        Some(w) => w,
        None => read_process(&InputArgs { input: a.input.clone(), allow_invalid: a.allow_invalid })?,
    };
    let w = if a.kappa != 0.0 { w.with_white_noise(a.kappa)? } else { w };
    let game = match &a.game {
        Some(p) => GameFile::parse(&read_input(Some(p))?)?.to_game()?,
        None => GameFunctional::gyni(),
    };
    let opts = SeesawOptions { restarts: a.restarts, seed: a.seed, inner_tol: a.tol, ..SeesawOptions::default() };
    let r = seesaw(&w, &game, &opts)?;
    if r.restarts_used == 0 {
        return Err(Error::Solver("no see-saw restart completed".into()).into());
    }
    let mut extra = Vec::new();
    if let (Some(path), Some((alice, bob))) = (&a.strategy_out, &r.strategy) {
        let file = StrategyFile {
            alice: procmat::io::InstrumentFile::from_instrument(alice),
            bob: procmat::io::InstrumentFile::from_instrument(bob),
        };
        fs::write(path, to_json(&file)?).with_context(|| format!("writing {}", path.display()))?;
        extra.push(path.clone());
    }
    let config = json!({
        "input": a.input, "name": a.named.name, "params": a.named.params(), "game": a.game,
        "kappa": a.kappa, "options": opts,
    });
    let text = to_json(&seesaw_summary(&r))?;
    let seeds = (0..a.restarts).map(|i| procmat::seesaw::restart_seed(a.seed, i, 0)).collect();
    let mut rep =
        Report::new("seesaw", config, text, a.output.out).seeds(seeds).summary(format!("{:.12}\n", r.best_score));
    rep.extra_outputs = extra;
    Ok(rep)
}

fn cmd_sample(a: SampleArgs) -> anyhow::Result<Report> {
    if a.samples == 0 {
        return Err(Error::InvalidParameter("--samples must be at least 1".into()).into());
    }
    let mut chain = match &a.resume {
        Some(p) => {
            let cp: Checkpoint = procmat::io::parse_json(&read_input(Some(p))?, "checkpoint file")?;
            Chain::resume(&cp)?
        }
        None => {
            let mut c = Chain::new(a.chain.config()?)?;
            c.advance(a.chain.warmup)?;
            c
        }
    };
    let mut text = String::new();
    for _ in 0..a.samples {
        let w = chain.next_sample()?;
        text += &serde_json::to_string(&ProcessFile::from_process(&w, MatrixFormat::Pauli)?)?;
        text.push('\n');
    }
    let mut extra = Vec::new();
    if let Some(p) = &a.checkpoint {
        fs::write(p, to_json(&chain.checkpoint()?)?).with_context(|| format!("writing {}", p.display()))?;
        extra.push(p.clone());
    }
    let config = json!({ "chain": chain.config(), "samples": a.samples, "resume": a.resume });
    let seed = chain.config().seed;
    let mut rep = Report::new("sample", config, text, a.output.out).seeds(vec![seed]);
    rep.extra_outputs = extra;
    Ok(rep)
}

#[derive(Serialize)]
struct HistogramCsvRow {
    sample_index: usize,
    r_r: Option<f64>,
    valid: bool,
    separable: bool,
}

fn cmd_ptb(a: PtbArgs) -> anyhow::Result<Report> {
    let cfg = a.chain.config()?;
    let stats = ptb_pipeline_capped(a.samples, a.max_draws.unwrap_or(usize::MAX), &cfg)?;
    let rows: Vec<HistogramCsvRow> = stats
        .rows
        .iter()
        .map(|r| HistogramCsvRow { sample_index: r.sample_index, r_r: r.r_r, valid: r.valid, separable: r.separable })
        .collect();
    eprintln!(
        "drawn {} separable {} ({:.2}%), valid after T_B {} ({:.2}%), nonseparable among valid {} ({:.2}%)",
        stats.n_drawn,
        stats.n_separable_input,
        100.0 * stats.separable_fraction(),
        stats.n_valid_after_map,
        100.0 * stats.valid_fraction(),
        stats.n_nonseparable_among_valid,
        100.0 * stats.nonseparable_among_valid()
    );
    let text = csv_with_header(&["sample_index", "r_r", "valid", "separable"], &rows)?;
    let config = json!({
        "chain": cfg, "samples": a.samples, "max_draws": a.max_draws,
        "n_drawn": stats.n_drawn, "n_separable_input": stats.n_separable_input,
        "n_valid_after_map": stats.n_valid_after_map,
        "n_nonseparable_among_valid": stats.n_nonseparable_among_valid,
    });
    Ok(Report::new("ptb-pipeline", config, text, a.output.out).seeds(vec![cfg.seed]))
}

#[derive(Serialize)]
struct RegionRow {
    q: f64,
    eps_v: f64,
    eps_c: f64,
}

fn cmd_region(a: RegionArgs) -> anyhow::Result<Report> {
    if a.grid < 2 {
        return Err(Error::InvalidParameter("--grid must be at least 2".into()).into());
    }
    let rows: Vec<RegionRow> = (0..a.grid)
        .map(|i| {
            let q = i as f64 / (a.grid - 1) as f64;
            RegionRow { q, eps_v: eps_validity(q), eps_c: eps_causal(q) }
        })
        .collect();
    Ok(Report::new("region", json!({ "grid": a.grid }), csv_string(&rows)?, a.output.out))
}

fn cmd_werner(a: WernerArgs) -> anyhow::Result<Report> {
    let win = werner_window(a.alpha)?;
    let params = FamilyParams { alpha: a.alpha, gamma: a.gamma, ..FamilyParams::default() };
    let w = make_named(NamedProcess::Wwer, &params)?;
    let opts = SolverOptions::default();
    let r = random_robustness_with(&w, &opts)?.lambda_opt;
    let tb = w.transpose_bob()?;
    let rt = random_robustness_with(&tb, &opts)?.lambda_opt;
    let claimed = win.contains(a.gamma);
    let observed = r > 0.0 && rt <= 0.0;
    let text = format!(
        "gamma window [{:.5}, {:.5})\n{}",
        win.lower,
        win.upper,
        to_json(&json!({
            "window": win,
            "gamma": a.gamma,
            "gamma_in_window": claimed,
            "robustness": r,
            "robustness_transposed": rt,
            "verified": claimed == observed,
        }))?
    );
    Ok(Report::new("werner-window", json!({ "alpha": a.alpha, "gamma": a.gamma }), text, a.output.out))
}

fn cmd_noise_sweep(a: NoiseSweepArgs) -> anyhow::Result<Report> {
    let w = match &a.input {
        Some(p) => read_process(&InputArgs { input: Some(p.clone()), allow_invalid: false })?,
        None => extended_optimal(a.ancilla_dim)?,
    };
    let opts = SeesawOptions { restarts: a.restarts, seed: a.seed, inner_tol: a.tol, ..SeesawOptions::default() };
    let rows = noise_sweep(&w, &GameFunctional::gyni(), &a.kappa, &opts)?;
    let config = json!({ "input": a.input, "ancilla_dim": a.ancilla_dim, "kappa": a.kappa, "options": opts });
    let seeds = (0..a.restarts).map(|i| procmat::seesaw::restart_seed(a.seed, i, 0)).collect();
    Ok(Report::new("noise-sweep", config, csv_string(&rows)?, a.output.out).seeds(seeds))
}

fn cmd_named(a: NamedArgs) -> anyhow::Result<Report> {
    let w = a.named.build()?.ok_or_else(|| Error::InvalidParameter("--name is required".into()))?;
    let w = match a.extend {
        Some(d) => extend_with_state(&w, &ancilla_state(&max_entangled(d, (AIP, BIP))?)?)?,
        None => w,
    };
    let format = match &a.format {
        Some(f) => f.parse()?,
        None if w.structure().is_extended() => MatrixFormat::Dense,
        None => MatrixFormat::Pauli,
    };
    let text = to_json(&ProcessFile::from_process(&w, format)?)?;
    let config = json!({ "name": a.named.name, "params": a.named.params(), "extend": a.extend });
    Ok(Report::new("named", config, text, a.output.out))
}

fn write_report(rep: Report, start: Instant) -> anyhow::Result<()> {
    match &rep.out {
        Some(path) => {
            fs::write(path, &rep.text).with_context(|| format!("writing {}", path.display()))?;
            if let Some(line) = &rep.summary {
                io::stdout().write_all(line.as_bytes())?;
            }
            let mut outputs = vec![path.display().to_string()];
            outputs.extend(rep.extra_outputs.iter().map(|p| p.display().to_string()));
            let manifest = Manifest {
                command: rep.command,
                config: rep.config,
                seeds: rep.seeds,
                version: env!("CARGO_PKG_VERSION"),
                wall_time_seconds: start.elapsed().as_secs_f64(),
                outputs,
            };
            let mpath = PathBuf::from(format!("{}.manifest.json", path.display()));
            fs::write(&mpath, to_json(&manifest)?).with_context(|| format!("writing {}", mpath.display()))?;
        }
        None => io::stdout().write_all(rep.summary.as_ref().unwrap_or(&rep.text).as_bytes())?,
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Solver(_) => EXIT_SOLVER,
                _ => EXIT_INVALID,
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() || cause.downcast_ref::<serde_json::Error>().is_some() {
            return EXIT_INVALID;
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let start = Instant::now();
    let report = match cli.command {
        Command::Validate(a) => cmd_validate(a)?,
        Command::Robustness(a) => cmd_robustness(a)?,
        Command::Witness(a) => cmd_witness(a)?,
        Command::Born(a) => cmd_born(a)?,
        Command::CausalLp(a) => cmd_causal_lp(a)?,
        Command::Seesaw(a) => cmd_seesaw(a)?,
        Command::Sample(a) => cmd_sample(a)?,
        Command::PtbPipeline(a) => cmd_ptb(a)?,
        Command::Region(a) => cmd_region(a)?,
        Command::WernerWindow(a) => cmd_werner(a)?,
        Command::NoiseSweep(a) => cmd_noise_sweep(a)?,
        Command::Named(a) => cmd_named(a)?,
    };
    log::info!("{} finished in {:.3}s", report.command, start.elapsed().as_secs_f64());
    write_report(report, start)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
