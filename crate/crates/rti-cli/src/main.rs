//! `rti` — vault generation and opening, adversary scenarios, accuracy
//! sweeps, and timing runs from one binary.
//!
//! Exit codes: 0 success (a scenario's reject decision is data, not a
//! failure), 1 malformed input (files that do not parse), 2 unusable
//! parameters (clap usage errors land here too), 3 vault open failure.

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rti_core::biotemplate::{load_template, NoiseModel, TemplateError};
use rti_core::experiments::{
    bench_fv, render_csv, sweep_accuracy, synth_dataset, Dataset, ExperimentError,
};
use rti_core::simnet::{audit_sensor_routing, load_scenario, run_scenario, ScenarioError};
use rti_core::vault::{
    deserialize_vault, fv_gen, fv_open, serialize_vault, Challenge, VaultError, VaultParams,
};
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const DEFAULT_SEED: u64 = 7;

#[derive(Parser)]
#[command(
    name = "rti",
    version,
    about = "Root-of-trust identification: fuzzy-vault challenges, scenarios, sweeps"
)]
struct Cli {
    /// Seed behind every random choice this invocation makes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Defaults file with `key = value` lines; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Polynomial degree d.
    #[arg(long, global = true)]
    degree: Option<usize>,
    /// Number of chaff points.
    #[arg(long, global = true)]
    chaff: Option<usize>,
    /// Matching threshold for minutia-to-point binding.
    #[arg(long, global = true)]
    w: Option<u32>,
    /// Weight of the angular term in the minutia distance.
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Genuine point budget per vault.
    #[arg(long, global = true)]
    lp: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lock and recover challenge secrets under templates.
    Vault {
        #[command(subcommand)]
        cmd: VaultCmd,
    },
    /// Play adversary scenarios.
    Scenario {
        #[command(subcommand)]
        cmd: ScenarioCmd,
    },
    /// Sweep acceptance rates across polynomial degrees.
    Sweep(SweepArgs),
    /// Time vault generation and opening.
    Bench(BenchArgs),
    /// Build template corpora.
    Dataset {
        #[command(subcommand)]
        cmd: DatasetCmd,
    },
}

#[derive(Subcommand)]
enum VaultCmd {
    /// Lock a secret under a template file.
    Gen(VaultGenArgs),
    /// Recover the secret with a second reading.
    Open(VaultOpenArgs),
}

#[derive(Args)]
struct VaultGenArgs {
    /// Scored minutiae file (x y theta confidence per line).
    #[arg(long)]
    template: PathBuf,
    /// Where to write the vault.
    #[arg(long)]
    out: PathBuf,
    /// Lock this hex secret instead of sampling one from the seed.
    #[arg(long)]
    secret_hex: Option<String>,
}

#[derive(Args)]
struct VaultOpenArgs {
    /// Vault file written by `vault gen`.
    #[arg(long)]
    vault: PathBuf,
    /// Scored minutiae file for the fresh reading.
    #[arg(long)]
    template: PathBuf,
    /// Subset-search budget override.
    #[arg(long)]
    cap: Option<u64>,
    /// Keep this many top-confidence minutiae from the reading.
    #[arg(long, default_value_t = 32)]
    keep: usize,
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Run one scenario file to its decision.
    Run(ScenarioRunArgs),
}

#[derive(Args)]
struct ScenarioRunArgs {
    /// Scenario description file.
    file: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 6)]
    subjects: usize,
    /// Readings per subject.
    #[arg(long, default_value_t = 3)]
    samples: usize,
    /// True minutiae per synthesized finger.
    #[arg(long, default_value_t = 32)]
    size: usize,
    /// Cross-subject trials per degree.
    #[arg(long, default_value_t = 300)]
    impostors: usize,
    /// Degrees to sweep: a range like 7-12 or a list like 7,9,11.
    #[arg(long, default_value = "7-12")]
    degrees: String,
    /// Sensor noise as sigma_xy,sigma_theta,drop_rate.
    #[arg(long)]
    noise: Option<String>,
    /// Load <subject>_<sample>.txt files from here instead of synthesizing.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Keep this many top-confidence minutiae per loaded template.
    #[arg(long, default_value_t = 32)]
    keep: usize,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// Synthesize noisy readings of fabricated fingers.
    Synth(DatasetSynthArgs),
}

#[derive(Args)]
struct DatasetSynthArgs {
    #[arg(long, default_value_t = 6)]
    subjects: usize,
    /// Readings per subject.
    #[arg(long, default_value_t = 3)]
    samples: usize,
    /// True minutiae per fabricated finger.
    #[arg(long, default_value_t = 32)]
    size: usize,
    /// Sensor noise as sigma_xy,sigma_theta,drop_rate.
    #[arg(long)]
    noise: Option<String>,
    /// Directory for the <subject>_<sample>.txt files.
    #[arg(long)]
    out_dir: PathBuf,
}

/// CLI failures, split by exit code.
enum AppError {
    /// Exit 1: an input file did not parse or could not be read.
    Parse(String),
    /// Exit 2: the requested parameters make no sense together.
    Params(String),
    /// Exit 3: the vault refused to open — nothing recoverable.
    NoRecovery(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Parse(_) => 1,
            AppError::Params(_) => 2,
            AppError::NoRecovery(_) => 3,
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Parse(m) | AppError::Params(m) | AppError::NoRecovery(m) => f.write_str(m),
        }
    }
}

impl From<TemplateError> for AppError {
    fn from(e: TemplateError) -> AppError {
        match e {
            TemplateError::Parse { .. } | TemplateError::Io { .. } => AppError::Parse(e.to_string()),
            _ => AppError::Params(e.to_string()),
        }
    }
}

impl From<VaultError> for AppError {
    fn from(e: VaultError) -> AppError {
        match e {
            VaultError::Parse { .. } => AppError::Parse(e.to_string()),
            VaultError::Template(t) => t.into(),
            _ => AppError::Params(e.to_string()),
        }
    }
}

impl From<ScenarioError> for AppError {
    fn from(e: ScenarioError) -> AppError {
        match e {
            ScenarioError::Parse { .. } | ScenarioError::Io { .. } => {
                AppError::Parse(e.to_string())
            }
            _ => AppError::Params(e.to_string()),
        }
    }
}

impl From<ExperimentError> for AppError {
    fn from(e: ExperimentError) -> AppError {
        match e {
            ExperimentError::Io { .. } | ExperimentError::BadFileName(_) => {
                AppError::Parse(e.to_string())
            }
            ExperimentError::Template(t) => t.into(),
            ExperimentError::Vault(v) => v.into(),
            _ => AppError::Params(e.to_string()),
        }
    }
}

fn io_parse(path: &Path, e: std::io::Error) -> AppError {
    AppError::Parse(format!("{}: {e}", path.display()))
}

/// Everything the subcommands need after flags, config file, and
/// defaults are merged (flags > config > defaults).
struct Settings {
    params: VaultParams,
    seed: u64,
}

fn resolve_settings(cli: &Cli) -> Result<Settings, AppError> {
    let mut params = VaultParams::with_defaults();
    let mut seed = DEFAULT_SEED;
    if let Some(path) = &cli.config {
        apply_config(path, &mut params, &mut seed)?;
    }
    if let Some(s) = cli.seed {
        seed = s;
    }
    if let Some(d) = cli.degree {
        params.d = d;
    }
    if let Some(n) = cli.chaff {
        params.n_chaff = n;
    }
    if let Some(w) = cli.w {
        params.w = w;
    }
    if let Some(b) = cli.beta {
        params.beta = b;
    }
    if let Some(lp) = cli.lp {
        params.lp = lp;
    }
    Ok(Settings { params, seed })
}

fn apply_config(path: &Path, params: &mut VaultParams, seed: &mut u64) -> Result<(), AppError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_parse(path, e))?;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |msg: String| {
            AppError::Parse(format!("{}:{}: {msg}", path.display(), i + 1))
        };
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| at(format!("expected `key = value`, got {line:?}")))?;
        let bad = |what: &str| at(format!("bad {what} value {value:?}"));
        match key {
            "seed" => *seed = value.parse().map_err(|_| bad("seed"))?,
            "degree" => params.d = value.parse().map_err(|_| bad("degree"))?,
            "chaff" => params.n_chaff = value.parse().map_err(|_| bad("chaff"))?,
            "w" => params.w = value.parse().map_err(|_| bad("w"))?,
            "beta" => params.beta = value.parse().map_err(|_| bad("beta"))?,
            "lp" => params.lp = value.parse().map_err(|_| bad("lp"))?,
            other => return Err(at(format!("unknown key {other:?}"))),
        }
    }
    Ok(())
}

fn parse_noise(spec: &Option<String>) -> Result<NoiseModel, AppError> {
    let Some(spec) = spec else {
        return Ok(NoiseModel::default());
    };
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let nums: Option<Vec<f64>> = parts.iter().map(|p| p.parse().ok()).collect();
    match nums {
        Some(n) if n.len() == 3 => Ok(NoiseModel {
            sigma_xy: n[0],
            sigma_theta: n[1],
            drop_rate: n[2],
        }),
        _ => Err(AppError::Params(format!(
            "--noise takes sigma_xy,sigma_theta,drop_rate, got {spec:?}"
        ))),
    }
}

fn parse_degrees(spec: &str) -> Result<Vec<usize>, AppError> {
    let bad = || AppError::Params(format!("--degrees takes 7-12 or 7,9,11, got {spec:?}"));
    if let Some((lo, hi)) = spec.split_once('-') {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        if lo == 0 || hi < lo {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    let list: Option<Vec<usize>> = spec.split(',').map(|p| p.trim().parse().ok()).collect();
    match list {
        Some(v) if !v.is_empty() && !v.contains(&0) => Ok(v),
        _ => Err(bad()),
    }
}

fn cmd_vault_gen(settings: &Settings, args: &VaultGenArgs) -> Result<(), AppError> {
    let params = &settings.params;
    let template = load_template(&args.template, params.lp)?;
    let mut rng = ChaCha12Rng::seed_from_u64(settings.seed);
    let chal = match &args.secret_hex {
        Some(hex) => Challenge::from_hex(hex, params.challenge_bits()).map_err(|e| {
            AppError::Params(format!("--secret-hex: {e}"))
        })?,
        None => Challenge::sample(params.challenge_bits(), &mut rng),
    };
    let hd = fv_gen(&chal, &template, params, &mut rng)?;
    let text = serialize_vault(&hd);
    std::fs::write(&args.out, &text).map_err(|e| io_parse(&args.out, e))?;
    println!("vault: {}", args.out.display());
    println!(
        "points: {} ({} genuine + {} chaff)",
        hd.points.len(),
        hd.params.lp,
        hd.params.n_chaff
    );
    println!("hk: {}", hd.params.khash);
    println!(
        "secret: {}",
        chal.to_hex().expect("challenge lengths are byte-aligned")
    );
    Ok(())
}

fn cmd_vault_open(args: &VaultOpenArgs) -> Result<(), AppError> {
    let text = std::fs::read_to_string(&args.vault).map_err(|e| io_parse(&args.vault, e))?;
    let mut hd = deserialize_vault(&text)?;
    if let Some(cap) = args.cap {
        if cap == 0 {
            return Err(AppError::Params("--cap must be positive".into()));
        }
        hd.params.combo_cap = cap;
    }
    let reading = load_template(&args.template, args.keep)?;
    match fv_open(&hd, &reading) {
        Ok(chal) => {
            println!(
                "recovered: {}",
                chal.to_hex().expect("challenge lengths are byte-aligned")
            );
            Ok(())
        }
        Err(failure) => Err(AppError::NoRecovery(failure.to_string())),
    }
}

fn cmd_scenario_run(args: &ScenarioRunArgs) -> Result<(), AppError> {
    let scenario = load_scenario(&args.file)?;
    let outcome = run_scenario(&scenario)?;
    audit_sensor_routing(&scenario, &outcome)
        .map_err(|e| AppError::Params(format!("routing audit failed: {e}")))?;
    print!("{}", outcome.report(&scenario));
    println!("audit: no subject template bytes crossed the wire");
    Ok(())
}

fn cmd_sweep(settings: &Settings, args: &SweepArgs) -> Result<(), AppError> {
    let degrees = parse_degrees(&args.degrees)?;
    let data = match &args.dataset {
        Some(dir) => {
            if args.noise.is_some() {
                return Err(AppError::Params(
                    "--noise shapes synthesized data; it cannot apply to --dataset".into(),
                ));
            }
            Dataset::load_dir(dir, args.keep)?
        }
        None => {
            let noise = parse_noise(&args.noise)?;
            let mut rng = ChaCha12Rng::seed_from_u64(settings.seed);
            synth_dataset(args.subjects, args.samples, args.size, &noise, &mut rng)?
        }
    };
    let rows = sweep_accuracy(&data, &degrees, &settings.params, args.impostors, settings.seed)?;
    let csv = render_csv(&rows);
    match &args.out {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| io_parse(path, e))?;
            println!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_bench(settings: &Settings, args: &BenchArgs) -> Result<(), AppError> {
    if args.trials == 0 {
        return Err(AppError::Params("--trials must be positive".into()));
    }
    let report = bench_fv(&settings.params, args.trials, settings.seed)?;
    print!("{}", report.render());
    Ok(())
}

fn cmd_dataset_synth(settings: &Settings, args: &DatasetSynthArgs) -> Result<(), AppError> {
    let noise = parse_noise(&args.noise)?;
    let mut rng = ChaCha12Rng::seed_from_u64(settings.seed);
    let data = synth_dataset(args.subjects, args.samples, args.size, &noise, &mut rng)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| io_parse(&args.out_dir, e))?;
    let mut written = 0;
    for subject in data.subjects() {
        for (i, sample) in subject.samples.iter().enumerate() {
            let mut text = String::new();
            for m in sample {
                text.push_str(&format!("{} {} {} 1.0\n", m.x(), m.y(), m.theta()));
            }
            let path = args.out_dir.join(format!("{}_{i:02}.txt", subject.id));
            std::fs::write(&path, text).map_err(|e| io_parse(&path, e))?;
            written += 1;
        }
    }
    println!("wrote {written} readings to {}", args.out_dir.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), AppError> {
    let settings = resolve_settings(cli)?;
    match &cli.command {
        Command::Vault { cmd: VaultCmd::Gen(args) } => cmd_vault_gen(&settings, args),
        Command::Vault { cmd: VaultCmd::Open(args) } => cmd_vault_open(args),
        Command::Scenario { cmd: ScenarioCmd::Run(args) } => cmd_scenario_run(args),
        Command::Sweep(args) => cmd_sweep(&settings, args),
        Command::Bench(args) => cmd_bench(&settings, args),
        Command::Dataset { cmd: DatasetCmd::Synth(args) } => cmd_dataset_synth(&settings, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
