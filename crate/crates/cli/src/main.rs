//! `leakage` — file-based CLI over the leakage toolkit.
//!
//! Every run prints one JSON document `{ "manifest": ..., "report": ... }`
//! to stdout (and to `--json-out` when given). The manifest records the
//! subcommand, hashes of every input file, the parameters, the seed and
//! the tool version, so a run can be reproduced bit for bit.
//!
//! Exit codes: 0 ok, 2 parse error, 3 validation error, 4 domain error,
//! 5 solver failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use leakage_core::cipher::{self, CipherParams, CipherScheme};
use leakage_core::estimate::{self, EstimatorConfig, SampleMode};
use leakage_core::io::{load_distribution, Distribution, IoError};
use leakage_core::mechanism::{self, DistortionSpec, MechanismError};
use leakage_core::metrics::{MetricReport, Unit};
use leakage_core::oracle;
use leakage_core::timing::{self, TimingError, TimingScheme};
use leakage_core::{DistError, Pmf};

const EXIT_PARSE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_DOMAIN: u8 = 4;
const EXIT_SOLVER: u8 = 5;

struct AppError {
    code: u8,
    message: String,
}

impl AppError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        AppError { code, message: message.into() }
    }
}

type AppResult<T> = Result<T, AppError>;

impl From<IoError> for AppError {
    fn from(e: IoError) -> Self {
        let code = match &e {
            IoError::Parse(_) | IoError::Read { .. } => EXIT_PARSE,
            IoError::Validation(_) | IoError::Shape(_) => EXIT_VALIDATION,
        };
        AppError::new(code, e.to_string())
    }
}

impl From<DistError> for AppError {
    fn from(e: DistError) -> Self {
        AppError::new(EXIT_VALIDATION, e.to_string())
    }
}

impl From<estimate::EstimateError> for AppError {
    fn from(e: estimate::EstimateError) -> Self {
        AppError::new(EXIT_VALIDATION, e.to_string())
    }
}

impl From<MechanismError> for AppError {
    fn from(e: MechanismError) -> Self {
        let code = match &e {
            MechanismError::ParameterOutOfRange(_) => EXIT_VALIDATION,
            MechanismError::Infeasible { .. } => EXIT_DOMAIN,
            MechanismError::SolverStalled => EXIT_SOLVER,
            MechanismError::Dist(_) => EXIT_VALIDATION,
        };
        AppError::new(code, e.to_string())
    }
}

impl From<TimingError> for AppError {
    fn from(e: TimingError) -> Self {
        let code = match &e {
            TimingError::UnstableQueue { .. } => EXIT_DOMAIN,
            TimingError::InvalidParameter(_) => EXIT_VALIDATION,
        };
        AppError::new(code, e.to_string())
    }
}

impl From<cipher::CipherError> for AppError {
    fn from(e: cipher::CipherError) -> Self {
        let code = match &e {
            cipher::CipherError::SizeCapExceeded { .. } => EXIT_DOMAIN,
            cipher::CipherError::CoverageFailure { .. } => EXIT_SOLVER,
            cipher::CipherError::Solver(_) => EXIT_SOLVER,
            _ => EXIT_VALIDATION,
        };
        AppError::new(code, e.to_string())
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UnitArg {
    Nats,
    Bits,
}

impl From<UnitArg> for Unit {
    fn from(u: UnitArg) -> Unit {
        match u {
            UnitArg::Nats => Unit::Nats,
            UnitArg::Bits => Unit::Bits,
        }
    }
}

#[derive(Parser)]
#[command(name = "leakage", version, about = "Information-leakage toolkit for finite alphabets")]
struct Cli {
    /// Seed for every randomized operation in the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Unit for reported leakage values.
    #[arg(long, global = true, value_enum, default_value_t = UnitArg::Nats)]
    unit: UnitArg,
    /// Also write the output document to this path.
    #[arg(long, global = true, value_name = "PATH")]
    json_out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute leakage metrics of a distribution file.
    Metrics {
        /// Distribution file (kind joint, channel or cond_joint).
        #[arg(long)]
        input: PathBuf,
        /// `all` or one metric name.
        #[arg(long, default_value = "all")]
        metric: String,
    },
    /// Verify the closed forms against brute-force guessing adversaries.
    OracleCheck {
        #[arg(long)]
        input: PathBuf,
        /// Number of random secrets to test for dominance.
        #[arg(long, default_value_t = 500)]
        instances: usize,
    },
    /// Run an estimator error-rate experiment from a spec file.
    Estimate {
        /// Experiment spec JSON.
        #[arg(long)]
        spec: PathBuf,
    },
    /// Leakage-minimizing mechanism design.
    Mechanism {
        #[command(subcommand)]
        cmd: MechanismCmd,
    },
    /// Shannon cipher system at desk scale.
    Cipher {
        #[command(subcommand)]
        cmd: CipherCmd,
    },
    /// Packet-timing mitigation schemes.
    Timing {
        #[command(subcommand)]
        cmd: TimingCmd,
    },
}

#[derive(Subcommand)]
enum MechanismCmd {
    /// Solve `min exp(L)` under an expected-distortion budget.
    Solve {
        /// Input distribution: JSON {"labels": [...], "probs": [...]}.
        #[arg(long)]
        dist: PathBuf,
        /// Distortion matrix: JSON {"d": [[...]]}.
        #[arg(long)]
        distortion: PathBuf,
        /// Distortion level D.
        #[arg(long)]
        level: f64,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Closed-form binary-Hamming optimum and the memoryless gap.
    Hamming {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        level: f64,
    },
}

#[derive(Subcommand)]
enum CipherCmd {
    /// Single-letter limit of the normalized leakage.
    Limit {
        /// Cipher parameter file.
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Build a type-covering scheme of block length n.
    Build {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        n: usize,
        /// Write the scheme here for later `eval`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a built scheme: exact leakage and excess distortion.
    Eval {
        /// Scheme file produced by `build`.
        #[arg(long)]
        scheme: PathBuf,
        /// Also brute-force the leakage (small n only).
        #[arg(long, default_value_t = false)]
        brute_force: bool,
    },
}

#[derive(Args, Clone, Copy)]
struct TimingParams {
    #[arg(long)]
    lambda: f64,
    /// Service rate (queue scheme).
    #[arg(long)]
    mu: Option<f64>,
    /// Interval length (batching schemes).
    #[arg(long)]
    tau: Option<f64>,
    /// Per-interval release cap (batching schemes).
    #[arg(long)]
    m: Option<u64>,
    /// Dummy-packet floor (dummy scheme).
    #[arg(long)]
    mb: Option<u64>,
}

#[derive(Subcommand)]
enum TimingCmd {
    /// Analytic leakage rate, waiting time and overflow bounds.
    Report {
        #[arg(long)]
        scheme: String,
        #[command(flatten)]
        params: TimingParams,
    },
    /// Discrete-event simulation of waits and drops.
    Simulate {
        #[arg(long)]
        scheme: String,
        #[command(flatten)]
        params: TimingParams,
        #[arg(long)]
        horizon: f64,
    },
}

#[derive(Serialize)]
struct InputHash {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest {
    subcommand: String,
    inputs: Vec<InputHash>,
    parameters: Value,
    seed: u64,
    unit: String,
    version: String,
    outputs: Vec<String>,
}

fn hash_file(path: &Path) -> AppResult<InputHash> {
    let bytes = std::fs::read(path).map_err(|e| {
        AppError::new(EXIT_PARSE, format!("cannot read {}: {e}", path.display()))
    })?;
    Ok(InputHash {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: &Cli) -> AppResult<()> {
    let unit: Unit = cli.unit.into();
    let (name, inputs, params, report) = match &cli.cmd {
        Cmd::Metrics { input, metric } => {
            let report = cmd_metrics(input, metric, unit)?;
            ("metrics", vec![hash_file(input)?], json!({ "metric": metric }), report)
        }
        Cmd::OracleCheck { input, instances } => {
            let report = cmd_oracle_check(input, *instances, cli.seed, unit)?;
            (
                "oracle-check",
                vec![hash_file(input)?],
                json!({ "instances": instances }),
                report,
            )
        }
        Cmd::Estimate { spec } => {
            let report = cmd_estimate(spec, cli.seed, unit)?;
            ("estimate", vec![hash_file(spec)?], json!({}), report)
        }
        Cmd::Mechanism { cmd } => match cmd {
            MechanismCmd::Solve { dist, distortion, level, tol } => {
                let report = cmd_mechanism_solve(dist, distortion, *level, *tol, unit)?;
                (
                    "mechanism solve",
                    vec![hash_file(dist)?, hash_file(distortion)?],
                    json!({ "level": level, "tol": tol }),
                    report,
                )
            }
            MechanismCmd::Hamming { p, level } => {
                let report = cmd_mechanism_hamming(*p, *level, unit)?;
                (
                    "mechanism hamming",
                    vec![],
                    json!({ "p": p, "level": level }),
                    report,
                )
            }
        },
        Cmd::Cipher { cmd } => match cmd {
            CipherCmd::Limit { params, tol } => {
                let report = cmd_cipher_limit(params, *tol, unit)?;
                (
                    "cipher limit",
                    vec![hash_file(params)?],
                    json!({ "tol": tol }),
                    report,
                )
            }
            CipherCmd::Build { params, n, out } => {
                let report = cmd_cipher_build(params, *n, out.as_deref(), cli.seed, unit)?;
                (
                    "cipher build",
                    vec![hash_file(params)?],
                    json!({ "n": n, "out": out.as_ref().map(|p| p.display().to_string()) }),
                    report,
                )
            }
            CipherCmd::Eval { scheme, brute_force } => {
                let report = cmd_cipher_eval(scheme, *brute_force, unit)?;
                (
                    "cipher eval",
                    vec![hash_file(scheme)?],
                    json!({ "brute_force": brute_force }),
                    report,
                )
            }
        },
        Cmd::Timing { cmd } => match cmd {
            TimingCmd::Report { scheme, params } => {
                let report = cmd_timing_report(scheme, params)?;
                (
                    "timing report",
                    vec![],
                    serde_json::to_value(TimingEcho::from(params)).unwrap(),
                    report,
                )
            }
            TimingCmd::Simulate { scheme, params, horizon } => {
                let report = cmd_timing_simulate(scheme, params, *horizon, cli.seed)?;
                let mut echo = serde_json::to_value(TimingEcho::from(params)).unwrap();
                echo["horizon"] = json!(horizon);
                ("timing simulate", vec![], echo, report)
            }
        },
    };

    let manifest = RunManifest {
        subcommand: name.to_string(),
        inputs,
        parameters: params,
        seed: cli.seed,
        unit: format!("{:?}", unit).to_lowercase(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: match &cli.json_out {
            Some(p) => vec![p.display().to_string(), "stdout".into()],
            None => vec!["stdout".into()],
        },
    };
    let doc = json!({ "manifest": manifest, "report": report });
    let text = serde_json::to_string_pretty(&doc).expect("report serializes");
    if let Some(path) = &cli.json_out {
        std::fs::write(path, &text).map_err(|e| {
            AppError::new(EXIT_VALIDATION, format!("cannot write {}: {e}", path.display()))
        })?;
    }
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct TimingEcho {
    lambda: f64,
    mu: Option<f64>,
    tau: Option<f64>,
    m: Option<u64>,
    mb: Option<u64>,
}

impl From<&TimingParams> for TimingEcho {
    fn from(p: &TimingParams) -> Self {
        TimingEcho { lambda: p.lambda, mu: p.mu, tau: p.tau, m: p.m, mb: p.mb }
    }
}

fn cmd_metrics(input: &Path, metric: &str, unit: Unit) -> AppResult<Value> {
    let dist = load_distribution(input)?;
    let joint = dist.to_joint()?;
    let report = MetricReport::compute(&joint, unit)?;
    let mut all = serde_json::to_value(&report).unwrap();
    // a z-indexed family additionally carries the conditional metric
    // (the flattened joint above treats (Y, Z) as one observation)
    if let Distribution::CondJoint(cj) = &dist {
        let v = leakage_core::metrics::conditional_maximal_leakage(cj);
        all["conditional_maximal_leakage"] = json!(v.in_unit(unit));
    }
    if metric == "all" {
        return Ok(all);
    }
    match all.get(metric) {
        Some(v) => Ok(json!({ "metric": metric, "value": v, "unit": all["unit"] })),
        None => Err(AppError::new(
            EXIT_VALIDATION,
            format!("unknown metric {metric:?}; use `all` or a MetricReport field name"),
        )),
    }
}

fn cmd_oracle_check(input: &Path, instances: usize, seed: u64, unit: Unit) -> AppResult<Value> {
    use rand_seeding::{seeded_rng, uniform_aux};
    let dist = load_distribution(input)?;
    let joint = dist.to_joint()?;
    let (px, _) = joint.marginals();
    let truth = leakage_core::metrics::maximal_leakage(&joint);

    let shattering = oracle::shattering_channel(&px);
    let achieved = oracle::leakage_of_u(&shattering, &joint);
    let mut rng = seeded_rng(seed);
    let mut max_excess = f64::NEG_INFINITY;
    for _ in 0..instances {
        let aux = uniform_aux(&mut rng, &px);
        let v = oracle::leakage_of_u(&aux, &joint);
        max_excess = max_excess.max(v.nats() - truth.nats());
    }
    Ok(json!({
        "unit": format!("{unit:?}").to_lowercase(),
        "maximal_leakage": truth.in_unit(unit),
        "shattering_leakage": achieved.in_unit(unit),
        "shattering_gap": (truth.nats() - achieved.nats()).abs(),
        "instances": instances,
        "max_aux_excess": max_excess,
        "dominance_holds": max_excess <= 1e-12,
    }))
}

/// Seeded helpers for oracle-check; kept separate so the randomness is
/// documented in one place.
mod rand_seeding {
    use leakage_core::oracle::AuxChannel;
    use leakage_core::Pmf;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    pub fn seeded_rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    /// Random secret with up to 12 values, Dirichlet(1,...,1) columns.
    pub fn uniform_aux(rng: &mut ChaCha12Rng, px: &Pmf) -> AuxChannel {
        let nu = rng.gen_range(1..=12);
        let nx = px.len();
        let mut p = vec![vec![0.0; nx]; nu];
        for x in 0..nx {
            let mut col: Vec<f64> =
                (0..nu).map(|_| -(rng.gen::<f64>().max(1e-300)).ln()).collect();
            let s: f64 = col.iter().sum();
            for v in &mut col {
                *v /= s;
            }
            for (u, &v) in col.iter().enumerate() {
                p[u][x] = v;
            }
        }
        let u_labels = (0..nu).map(|i| format!("u{i}")).collect();
        AuxChannel::new(u_labels, px.labels().to_vec(), p).expect("columns normalized")
    }
}

#[derive(serde::Deserialize)]
struct EstimateSpec {
    distribution: PathBuf,
    theta: f64,
    delta: f64,
    epsilon: f64,
    /// A number, or the string "auto" for the upper-bound formula.
    n: Value,
    trials: usize,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    mode: Option<String>,
}

fn cmd_estimate(spec_path: &Path, cli_seed: u64, unit: Unit) -> AppResult<Value> {
    let text = std::fs::read_to_string(spec_path).map_err(|e| {
        AppError::new(EXIT_PARSE, format!("cannot read {}: {e}", spec_path.display()))
    })?;
    let spec: EstimateSpec =
        serde_json::from_str(&text).map_err(|e| AppError::new(EXIT_PARSE, e.to_string()))?;
    if spec.trials == 0 {
        return Err(AppError::new(EXIT_VALIDATION, "trials must be at least 1"));
    }
    let base = spec_path.parent().unwrap_or(Path::new("."));
    let dist_path =
        if spec.distribution.is_absolute() { spec.distribution.clone() } else { base.join(&spec.distribution) };
    let joint = load_distribution(&dist_path)?.to_joint()?;
    let cfg = EstimatorConfig::new(spec.theta, spec.delta, spec.epsilon)?;
    let (n, auto) = match &spec.n {
        Value::String(s) if s == "auto" => (
            estimate::sample_complexity_upper(
                joint.x_len(),
                joint.y_len(),
                spec.theta,
                spec.delta,
                spec.epsilon,
            )?,
            true,
        ),
        Value::Number(x) => (
            x.as_f64().ok_or_else(|| AppError::new(EXIT_VALIDATION, "n must be a number"))?,
            false,
        ),
        _ => return Err(AppError::new(EXIT_VALIDATION, "n must be a number or \"auto\"")),
    };
    if n <= 0.0 {
        return Err(AppError::new(EXIT_VALIDATION, "n must be positive"));
    }
    let mode = match spec.mode.as_deref() {
        Some("poisson") => SampleMode::Poisson,
        Some("fixed") | None => SampleMode::Fixed,
        Some(other) => {
            return Err(AppError::new(
                EXIT_VALIDATION,
                format!("unknown mode {other:?}; use fixed or poisson"),
            ))
        }
    };
    let seed = spec.seed.unwrap_or(cli_seed);
    let rep = estimate::run_error_rate_experiment(&joint, &cfg, n, spec.trials, seed, mode);
    let mut out = serde_json::to_value(&rep).unwrap();
    out["n_auto"] = json!(auto);
    out["true_leakage"] =
        json!(leakage_core::metrics::LeakageValue::from_nats(rep.true_leakage_nats).in_unit(unit));
    out["seed"] = json!(seed);
    Ok(out)
}

#[derive(serde::Deserialize)]
struct PmfFile {
    labels: Vec<String>,
    probs: Vec<f64>,
}

#[derive(serde::Deserialize)]
struct DistortionFile {
    d: Vec<Vec<f64>>,
}

fn load_pmf(path: &Path) -> AppResult<Pmf> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::new(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))?;
    let f: PmfFile =
        serde_json::from_str(&text).map_err(|e| AppError::new(EXIT_PARSE, e.to_string()))?;
    Ok(Pmf::from_parts(f.labels, f.probs)?)
}

fn cmd_mechanism_solve(
    dist: &Path,
    distortion: &Path,
    level: f64,
    tol: f64,
    unit: Unit,
) -> AppResult<Value> {
    let px = load_pmf(dist)?;
    let text = std::fs::read_to_string(distortion).map_err(|e| {
        AppError::new(EXIT_PARSE, format!("cannot read {}: {e}", distortion.display()))
    })?;
    let file: DistortionFile =
        serde_json::from_str(&text).map_err(|e| AppError::new(EXIT_PARSE, e.to_string()))?;
    let spec = DistortionSpec::new(file.d, level)?;
    let sol = mechanism::min_leakage_general(&px, &spec, tol)?;
    let mut out = serde_json::to_value(&sol).unwrap();
    out["leakage"] = json!({ "value": sol.leakage.in_unit(unit),
                             "unit": format!("{unit:?}").to_lowercase() });
    Ok(out)
}

fn cmd_mechanism_hamming(p: f64, level: f64, unit: Unit) -> AppResult<Value> {
    let sol = mechanism::min_leakage_hamming_binary(p, level)?;
    let gap = mechanism::memoryless_lower_bound_hamming(p, level)?;
    let per_letter = mechanism::per_letter_memoryless_optimum(p, level)?;
    Ok(json!({
        "unit": format!("{unit:?}").to_lowercase(),
        "optimal_leakage": sol.leakage.in_unit(unit),
        "channel": sol.channel,
        "expected_distortion": sol.expected_distortion,
        "memoryless_lower_bound": gap.memoryless_lower_bound.in_unit(unit),
        "optimal_rate": gap.optimal_rate.in_unit(unit),
        "per_letter_memoryless_optimum": per_letter.in_unit(unit),
    }))
}

#[derive(serde::Deserialize)]
struct CipherParamsFile {
    source: PmfFile,
    distortion_matrix: Vec<Vec<f64>>,
    level: f64,
    key_rate_bits: f64,
    alpha_bits: f64,
    #[serde(default)]
    delta_bits: Option<f64>,
    #[serde(default)]
    channel_rate_bits: Option<f64>,
}

fn load_cipher_params(path: &Path) -> AppResult<(Pmf, CipherParams)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::new(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))?;
    let f: CipherParamsFile =
        serde_json::from_str(&text).map_err(|e| AppError::new(EXIT_PARSE, e.to_string()))?;
    let source = Pmf::from_parts(f.source.labels, f.source.probs)?;
    let spec = DistortionSpec::new(f.distortion_matrix, f.level)?;
    let mut params = CipherParams::new(spec, f.key_rate_bits, f.alpha_bits);
    if let Some(d) = f.delta_bits {
        params.delta_bits = d;
    }
    params.channel_rate_bits = f.channel_rate_bits;
    Ok((source, params))
}

fn cmd_cipher_limit(path: &Path, tol: f64, unit: Unit) -> AppResult<Value> {
    let (source, params) = load_cipher_params(path)?;
    let lim = cipher::single_letter_limit(&source, &params, tol)?;
    let mut out = serde_json::to_value(&lim).unwrap();
    out["value"] = json!({ "value": lim.value.in_unit(unit),
                           "unit": format!("{unit:?}").to_lowercase() });
    Ok(out)
}

fn cmd_cipher_build(
    path: &Path,
    n: usize,
    out_path: Option<&Path>,
    seed: u64,
    unit: Unit,
) -> AppResult<Value> {
    let (source, params) = load_cipher_params(path)?;
    let scheme = cipher::build_scheme(n, &source, &params, seed)?;
    if let Some(p) = out_path {
        let text = serde_json::to_string(&scheme).expect("scheme serializes");
        std::fs::write(p, text).map_err(|e| {
            AppError::new(EXIT_VALIDATION, format!("cannot write {}: {e}", p.display()))
        })?;
    }
    Ok(scheme_summary(&scheme, false, unit))
}

fn cmd_cipher_eval(path: &Path, brute_force: bool, unit: Unit) -> AppResult<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::new(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))?;
    let scheme: CipherScheme =
        serde_json::from_str(&text).map_err(|e| AppError::new(EXIT_PARSE, e.to_string()))?;
    Ok(scheme_summary(&scheme, brute_force, unit))
}

fn scheme_summary(scheme: &CipherScheme, brute_force: bool, unit: Unit) -> Value {
    let leak = cipher::exact_scheme_leakage(scheme);
    let excess = cipher::excess_distortion_prob(scheme);
    let mut out = json!({
        "n": scheme.n,
        "key_bits": scheme.key_bits,
        "unit": format!("{unit:?}").to_lowercase(),
        "exact_leakage": leak.in_unit(unit),
        "normalized_leakage_bits": cipher::normalized_leakage_bits(scheme),
        "feasible_types": scheme.codebooks.len(),
        "total_codewords": scheme.codebooks.iter().map(|c| c.codewords.len()).sum::<usize>(),
        "excess": excess,
    });
    if brute_force {
        let nats = cipher::brute_force_scheme_leakage(scheme);
        out["brute_force_leakage"] =
            json!(leakage_core::metrics::LeakageValue::from_nats(nats).in_unit(unit));
    }
    out
}

fn timing_scheme(kind: &str, p: &TimingParams) -> AppResult<TimingScheme> {
    let need = |v: Option<f64>, what: &str| {
        v.ok_or_else(|| AppError::new(EXIT_VALIDATION, format!("--{what} is required")))
    };
    let need_u = |v: Option<u64>, what: &str| {
        v.ok_or_else(|| AppError::new(EXIT_VALIDATION, format!("--{what} is required")))
    };
    Ok(match kind {
        "queue" => TimingScheme::Queue { lambda: p.lambda, mu: need(p.mu, "mu")? },
        "dump" => TimingScheme::AccumulateDump {
            lambda: p.lambda,
            tau: need(p.tau, "tau")?,
            m: need_u(p.m, "m")?,
        },
        "dummy" => TimingScheme::Dummy {
            lambda: p.lambda,
            tau: need(p.tau, "tau")?,
            m: need_u(p.m, "m")?,
            m_b: need_u(p.mb, "mb")?,
        },
        other => {
            return Err(AppError::new(
                EXIT_VALIDATION,
                format!("unknown scheme {other:?}; use queue, dump or dummy"),
            ))
        }
    })
}

fn cmd_timing_report(kind: &str, p: &TimingParams) -> AppResult<Value> {
    let scheme = timing_scheme(kind, p)?;
    let rep = timing::scheme_report(&scheme)?;
    Ok(json!({ "scheme": scheme, "report": rep }))
}

fn cmd_timing_simulate(kind: &str, p: &TimingParams, horizon: f64, seed: u64) -> AppResult<Value> {
    let scheme = timing_scheme(kind, p)?;
    let analytic = timing::scheme_report(&scheme)?;
    let sim = timing::simulate_scheme(&scheme, seed, horizon)?;
    Ok(json!({ "scheme": scheme, "analytic": analytic, "simulation": sim }))
}
