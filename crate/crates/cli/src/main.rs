//! `molproof`: setup, proving, verification and reporting from the shell.
//!
//! Exit codes: 0 success, 1 verification false or replay, 2 usage error,
//! 3 data error, 4 cryptographic or decode error.

use std::fs;
use std::io::{self, Cursor, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use molproof_core::circuit::{analyze, eval_circuit};
use molproof_core::data_processor::{
    load_records, LoadReport, ThresholdOverrides, ThresholdProfile,
};
use molproof_core::pipeline::{
    bench, bench_corpus, prove_record, run_batch, security_suite, verify_bundle, BatchOptions,
    BenchOptions, Keys, PhaseTimings, PipelineError, SecurityConfig, SecurityCorpus,
    SyntheticCorpus, VerifyBundleError,
};
use molproof_core::smiles;
use molproof_core::snark::SnarkError;
use molproof_core::{
    EvaluationRecord, FieldElement, NullifierSet, ProofBundle, ProvingKey, TaskType, VerifyingKey,
};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

const PK_FILE: &str = "pk.bin";
const VK_FILE: &str = "vk.json";

#[derive(Parser)]
#[command(
    name = "molproof",
    version,
    about = "Zero-knowledge threshold proofs for molecular evaluations"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Force the task type of every record, or of the synthetic corpus.
    #[arg(long, global = true)]
    tasktype: Option<TaskType>,
    /// Threshold overrides as inline JSON or a path to a JSON file, e.g. '{"qed": 600000}'.
    #[arg(long, global = true)]
    thresholds: Option<String>,
    /// Append-only nullifier log; an in-memory set is used when absent.
    #[arg(long, global = true)]
    registry: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Output file (a directory for `setup`); stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a proving key and verifying key.
    Setup {
        /// Deterministic setup randomness. Only for testing: anyone knowing the seed can forge proofs.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Prove one evaluation record and write its bundle.
    Prove {
        #[arg(long)]
        pk: PathBuf,
        /// A JSON record, or a JSON Lines file holding exactly one record.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Verify a bundle and check its nullifier.
    Verify {
        #[arg(long)]
        vk: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Prove and verify every record of a JSON Lines file.
    Batch {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Time batches of several sizes.
    Bench {
        /// Proving key; a fresh one is generated when absent.
        #[arg(long)]
        pk: Option<PathBuf>,
        /// JSON Lines corpus; synthetic passing records when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = [10, 50, 100])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV table path. Defaults to the `--out` path with a `.csv` extension, else stderr.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Report constraint counts, component shares and depth of the circuit.
    Analyze,
    /// Run completeness, soundness, zero-knowledge and attack checks on a synthetic corpus.
    SecuritySuite {
        #[arg(long)]
        pk: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        passing: usize,
        #[arg(long, default_value_t = 30)]
        invalid_smiles: usize,
        #[arg(long, default_value_t = 30)]
        failing_thresholds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check a SMILES string against the grammar; exit 0 if valid, 1 if not.
    ValidateSmiles { smiles: String },
    /// Inspect a nullifier log.
    Nullifiers {
        #[command(subcommand)]
        action: NullifierAction,
    },
}

#[derive(Subcommand)]
enum NullifierAction {
    List { path: PathBuf },
    Count { path: PathBuf },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Crypto(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Crypto(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Crypto(m) => m,
        }
    }
}

impl From<SnarkError> for Failure {
    fn from(e: SnarkError) -> Self {
        match e {
            SnarkError::Unsatisfied(_) => Failure::Data(e.to_string()),
            _ => Failure::Crypto(e.to_string()),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let msg = format!("{} phase: {e}", phase_name(&e));
        match e {
            PipelineError::Prove(_) | PipelineError::Verify(_) => Failure::Crypto(msg),
            _ => Failure::Data(msg),
        }
    }
}

fn phase_name(e: &PipelineError) -> String {
    serde_json::to_value(e.phase())
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_else(|| format!("{:?}", e.phase()))
}

/// Verdicts that are not errors but still exit 1.
enum Verdict {
    Yes,
    No,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Verdict::Yes) => ExitCode::SUCCESS,
        Ok(Verdict::No) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Result<Verdict, Failure> {
    let c = &cli.common;
    if c.workers == 0 {
        return Err(Failure::Usage("--workers must be at least 1".into()));
    }
    match cli.command {
        Command::Setup { seed } => setup(c, seed),
        Command::Prove { pk, input, seed } => prove(c, &pk, &input, seed),
        Command::Verify { vk, bundle } => verify(c, &vk, &bundle),
        Command::Batch { pk, input, seed } => batch(c, &pk, &input, seed),
        Command::Bench {
            pk,
            input,
            sizes,
            repeats,
            seed,
            csv,
        } => run_bench(
            c,
            pk.as_deref(),
            input.as_deref(),
            sizes,
            repeats,
            seed,
            csv,
        ),
        Command::Analyze => {
            emit(c.out.as_deref(), &analyze(eval_circuit()))?;
            Ok(Verdict::Yes)
        }
        Command::SecuritySuite {
            pk,
            passing,
            invalid_smiles,
            failing_thresholds,
            seed,
        } => security(
            c,
            pk.as_deref(),
            passing,
            invalid_smiles,
            failing_thresholds,
            seed,
        ),
        Command::ValidateSmiles { smiles } => {
            let report = smiles::validate(&smiles);
            emit(c.out.as_deref(), &report)?;
            Ok(if report.valid {
                Verdict::Yes
            } else {
                Verdict::No
            })
        }
        Command::Nullifiers { action } => nullifiers(c, action),
    }
}

fn rng(seed: Option<u64>) -> ChaCha20Rng {
    seed.map_or_else(ChaCha20Rng::from_entropy, ChaCha20Rng::seed_from_u64)
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, value: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Data(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => write(path, text.as_bytes()),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Data(format!("stdout: {e}"))),
    }
}

fn profile(c: &Common) -> Result<ThresholdProfile, Failure> {
    let mut profile = ThresholdProfile::default();
    let Some(arg) = &c.thresholds else {
        return Ok(profile);
    };
    let text = match fs::read_to_string(arg) {
        Ok(t) => t,
        Err(_) => arg.clone(),
    };
    let o: ThresholdOverrides =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("--thresholds: {e}")))?;
    for task in [TaskType::Binary, TaskType::Regression] {
        if c.tasktype.is_some_and(|t| t != task) {
            continue;
        }
        let set = match task {
            TaskType::Binary => &mut profile.binary,
            TaskType::Regression => &mut profile.regression,
        };
        *set = o.apply(*set);
        if let Some((metric, value)) = set.out_of_range() {
            return Err(Failure::Usage(format!(
                "--thresholds: {metric:?} threshold {value} is out of range"
            )));
        }
    }
    Ok(profile)
}

fn registry(c: &Common) -> Result<NullifierSet, Failure> {
    match &c.registry {
        Some(path) => NullifierSet::open(path).map_err(|e| Failure::Data(e.to_string())),
        None => Ok(NullifierSet::in_memory()),
    }
}

fn load_keys(path: &Path) -> Result<Keys, Failure> {
    let pk = ProvingKey::from_bytes(&read(path)?, eval_circuit())?;
    Ok(Keys {
        vk: pk.verifying_key(),
        pk,
    })
}

fn keys_or_fresh(path: Option<&Path>, seed: u64) -> Result<Keys, Failure> {
    match path {
        Some(p) => load_keys(p),
        None => {
            log::info!("no --pk given; running a fresh setup");
            Ok(Keys::generate(&mut ChaCha20Rng::seed_from_u64(seed))?)
        }
    }
}

/// Accepts JSON Lines, or a single (possibly pretty-printed) JSON object.
fn load(path: &Path, c: &Common) -> Result<LoadReport, Failure> {
    let bytes = read(path)?;
    let text = match serde_json::from_slice::<serde_json::Value>(&bytes) {
        Ok(v @ serde_json::Value::Object(_)) => v.to_string().into_bytes(),
        _ => bytes,
    };
    let mut report = load_records(Cursor::new(text))
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    for note in &report.warnings {
        log::warn!("{} line {}: {}", path.display(), note.line, note.message);
    }
    if let Some(t) = c.tasktype {
        report
            .records
            .iter_mut()
            .for_each(|r: &mut EvaluationRecord| r.task_type = t);
    }
    Ok(report)
}

#[derive(Serialize)]
struct SetupSummary {
    proving_key: PathBuf,
    verifying_key: PathBuf,
    circuit_digest: String,
    public_values: usize,
}

fn setup(c: &Common, seed: Option<u64>) -> Result<Verdict, Failure> {
    if seed.is_some() {
        log::warn!("seeded setup: keys are reproducible and must not be used outside testing");
    }
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    let keys = Keys::generate(&mut rng(seed))?;
    let pk_path = dir.join(PK_FILE);
    let vk_path = dir.join(VK_FILE);
    write(&pk_path, &keys.pk.to_bytes())?;
    emit(Some(&vk_path), &keys.vk)?;
    emit(
        None,
        &SetupSummary {
            proving_key: pk_path,
            verifying_key: vk_path,
            circuit_digest: keys
                .vk
                .circuit_digest()
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect(),
            public_values: keys.vk.num_public(),
        },
    )?;
    Ok(Verdict::Yes)
}

#[derive(Serialize)]
struct ProveSummary<'a> {
    molecule_id: &'a str,
    task_type: TaskType,
    result: u8,
    proof_valid: bool,
    commitment: FieldElement,
    nullifier: FieldElement,
    bundle: Option<&'a Path>,
    warnings: &'a [String],
    timings: PhaseTimings,
}

fn prove(c: &Common, pk: &Path, input: &Path, seed: Option<u64>) -> Result<Verdict, Failure> {
    let keys = load_keys(pk)?;
    let profile = profile(c)?;
    let loaded = load(input, c)?;
    if loaded.records.len() != 1 || !loaded.rejects.is_empty() {
        return Err(Failure::Data(format!(
            "{}: expected exactly one record, found {} ({} rejected)",
            input.display(),
            loaded.records.len(),
            loaded.rejects.len()
        )));
    }
    let record = &loaded.records[0];
    let proved = prove_record(record, &keys, &profile, None, &mut rng(seed))?;
    if !proved.proof_valid {
        return Err(Failure::Crypto(
            "freshly generated proof did not verify".into(),
        ));
    }
    match c.out.as_deref() {
        Some(path) => {
            emit(Some(path), &proved.bundle)?;
            emit(
                None,
                &ProveSummary {
                    molecule_id: &record.molecule_id,
                    task_type: record.task_type,
                    result: u8::from(proved.bundle.passed()),
                    proof_valid: proved.proof_valid,
                    commitment: proved.bundle.commitment(),
                    nullifier: proved.bundle.nullifier(),
                    bundle: Some(path),
                    warnings: &proved.warnings,
                    timings: proved.timings,
                },
            )?;
        }
        None => emit(None, &proved.bundle)?,
    }
    Ok(Verdict::Yes)
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    molecule_id: &'a str,
    task_id: &'a str,
    #[serde(flatten)]
    verdict: molproof_core::pipeline::BundleVerdict,
    nullifier: FieldElement,
    registry: Option<&'a Path>,
}

fn verify(c: &Common, vk: &Path, bundle: &Path) -> Result<Verdict, Failure> {
    let vk: VerifyingKey = serde_json::from_slice(&read(vk)?)
        .map_err(|e| Failure::Crypto(format!("{}: malformed verifying key: {e}", vk.display())))?;
    let bundle: ProofBundle = serde_json::from_slice(&read(bundle)?)
        .map_err(|e| Failure::Crypto(format!("{}: malformed bundle: {e}", bundle.display())))?;
    let registry = registry(c)?;
    let verdict = verify_bundle(&bundle, &vk, &registry).map_err(|e| match e {
        VerifyBundleError::Snark(s) => Failure::from(s),
        VerifyBundleError::Registry(r) => Failure::Data(r.to_string()),
    })?;
    emit(
        c.out.as_deref(),
        &VerifyReport {
            molecule_id: &bundle.molecule_id,
            task_id: &bundle.task_id,
            verdict,
            nullifier: bundle.nullifier(),
            registry: c.registry.as_deref(),
        },
    )?;
    Ok(if verdict.accepted {
        Verdict::Yes
    } else {
        Verdict::No
    })
}

fn batch(c: &Common, pk: &Path, input: &Path, seed: Option<u64>) -> Result<Verdict, Failure> {
    let keys = load_keys(pk)?;
    let profile = profile(c)?;
    let loaded = load(input, c)?;
    let registry = registry(c)?;
    let report = run_batch(
        &loaded.records,
        &keys,
        &profile,
        &registry,
        &BatchOptions {
            workers: c.workers,
            seed,
        },
    )
    .with_ingest_rejects(&loaded.rejects);
    emit(c.out.as_deref(), &report)?;
    Ok(Verdict::Yes)
}

fn run_bench(
    c: &Common,
    pk: Option<&Path>,
    input: Option<&Path>,
    sizes: Vec<usize>,
    repeats: usize,
    seed: u64,
    csv: Option<PathBuf>,
) -> Result<Verdict, Failure> {
    if sizes.is_empty() || sizes.contains(&0) || repeats == 0 {
        return Err(Failure::Usage(
            "--sizes and --repeats must be positive".into(),
        ));
    }
    let keys = keys_or_fresh(pk, seed)?;
    let profile = profile(c)?;
    let options = BenchOptions {
        sizes,
        repeats,
        workers: c.workers,
        seed,
    };
    let report = match input {
        Some(path) => bench_corpus(&load(path, c)?.records, &keys, &profile, &options),
        None => match c.tasktype {
            Some(t) => {
                let max = options.sizes.iter().copied().max().unwrap_or(0);
                let corpus = SyntheticCorpus::new(seed).for_task(t).passing(max);
                bench_corpus(&corpus, &keys, &profile, &options)
            }
            None => bench(&keys, &profile, &options),
        },
    };
    emit(c.out.as_deref(), &report)?;
    let table = report.to_csv();
    match csv.or_else(|| c.out.as_ref().map(|p| p.with_extension("csv"))) {
        Some(path) => write(&path, table.as_bytes())?,
        None => eprint!("{table}"),
    }
    Ok(Verdict::Yes)
}

fn security(
    c: &Common,
    pk: Option<&Path>,
    passing: usize,
    invalid_smiles: usize,
    failing_thresholds: usize,
    seed: u64,
) -> Result<Verdict, Failure> {
    let keys = keys_or_fresh(pk, seed)?;
    let profile = profile(c)?;
    let mut corpus = SyntheticCorpus::new(seed);
    if let Some(t) = c.tasktype {
        corpus = corpus.for_task(t);
    }
    let passing = corpus.passing(passing);
    let mut failing = corpus.invalid_smiles(invalid_smiles);
    failing.extend(corpus.failing_thresholds(failing_thresholds));
    let cfg = SecurityConfig {
        seed,
        ..SecurityConfig::default()
    };
    let report = security_suite(&SecurityCorpus { passing, failing }, &keys, &profile, &cfg)
        .map_err(|e| {
            use molproof_core::pipeline::SecurityError as E;
            match e {
                E::CorpusTooSmall { .. } | E::TooFewSamples(_) => Failure::Usage(e.to_string()),
                E::Pipeline(p) => Failure::from(p),
                E::Snark(s) => Failure::from(s),
                E::VerifyBundle(v) => Failure::Crypto(v.to_string()),
            }
        })?;
    emit(c.out.as_deref(), &report)?;
    Ok(if report.passed {
        Verdict::Yes
    } else {
        Verdict::No
    })
}

#[derive(Serialize)]
struct NullifierCount<'a> {
    path: &'a Path,
    count: usize,
}

fn nullifiers(c: &Common, action: NullifierAction) -> Result<Verdict, Failure> {
    let path = match &action {
        NullifierAction::List { path } | NullifierAction::Count { path } => path,
    };
    if !path.exists() {
        return Err(Failure::Data(format!(
            "{}: no such nullifier log",
            path.display()
        )));
    }
    let set = NullifierSet::open(path).map_err(|e| Failure::Data(e.to_string()))?;
    match action {
        NullifierAction::List { .. } => emit(c.out.as_deref(), &set.entries())?,
        NullifierAction::Count { .. } => emit(
            c.out.as_deref(),
            &NullifierCount {
                path,
                count: set.len(),
            },
        )?,
    }
    Ok(Verdict::Yes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use molproof_core::ThresholdSet;

    fn common(tasktype: Option<TaskType>, thresholds: &str) -> Common {
        Common {
            tasktype,
            thresholds: Some(thresholds.into()),
            registry: None,
            workers: 1,
            out: None,
        }
    }

    #[test]
    fn argument_definitions_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn overrides_follow_tasktype() {
        let both = profile(&common(None, r#"{"qed": 700000}"#)).unwrap();
        assert_eq!((both.binary.qed, both.regression.qed), (700_000, 700_000));
        let one = profile(&common(Some(TaskType::Regression), r#"{"qed": 700000}"#)).unwrap();
        assert_eq!(one.binary, ThresholdSet::defaults(TaskType::Binary));
        assert_eq!(one.regression.qed, 700_000);
    }

    #[test]
    fn out_of_range_threshold_is_usage_error() {
        let e = profile(&common(None, r#"{"sas": 4294967296}"#)).unwrap_err();
        assert_eq!(e.code(), 2);
    }
}
