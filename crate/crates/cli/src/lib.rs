//! Command-line front end: `synth`, `run` and `eval`.
//!
//! Exit codes are 0 on success, 2 for invalid input and 3 for failures
//! while running. Errors are also written to stderr as one JSON object,
//! `{"error": "<kind>", "message": "..."}`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use seeg_rank::dsp::Wavelet;
use seeg_rank::gbdt::CvReport;
use seeg_rank::ingest::{load_recording, LoadedRecording};
use seeg_rank::ranking::{eval_stage, run_workflow, Stage};
use seeg_rank::report::ranking_svg;
use seeg_rank::shapley::write_ndjson;
use seeg_rank::synth::{generate, MontageSource, SynthSpec};
use seeg_rank::{Error, Montage, Result, RunConfig, ShapEngine};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "seeg-rank",
    version,
    about = "Rank SEEG channels by their Shapley contribution to seizure classification"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic recording with known ictal channels.
    Synth(SynthArgs),
    /// Train, attribute, rank and write the extension report.
    Run(RunArgs),
    /// Cross-validated F1 only, no attribution.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Synthetic recording spec (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Replace the spec's montage with this file.
    #[arg(long)]
    pub montage: Option<PathBuf>,
    /// Replace the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Signal CSV (header of channel labels, one row per sample).
    #[arg(long)]
    pub signal: PathBuf,
    /// Sidecar JSON (sampling rate, annotations, clinician selection).
    #[arg(long)]
    pub sidecar: PathBuf,
    /// Montage JSON.
    #[arg(long)]
    pub montage: PathBuf,
    /// Output directory, created if absent.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Run configuration JSON; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// One flag per run configuration knob.
#[derive(Debug, Default, Clone, Args)]
pub struct ConfigFlags {
    /// Master seed for splits, folds, background draws and sampling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seconds before each onset added to the positive class.
    #[arg(long)]
    pub pps_extension_s: Option<f64>,
    /// Frame length in seconds.
    #[arg(long)]
    pub frame_len_s: Option<f64>,
    /// Fraction of a frame shared with the next, in (0, 1).
    #[arg(long)]
    pub overlap: Option<f64>,
    /// Bandpass low edge (Hz).
    #[arg(long)]
    pub band_low: Option<f64>,
    /// Bandpass high edge (Hz).
    #[arg(long)]
    pub band_high: Option<f64>,
    /// Butterworth prototype order (even, 2 to 8).
    #[arg(long)]
    pub filter_order: Option<usize>,
    /// haar, db2 or db4.
    #[arg(long)]
    pub wavelet: Option<Wavelet>,
    /// Wavelet decomposition levels.
    #[arg(long)]
    pub dwt_levels: Option<usize>,
    /// Cross-validation folds.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Held-out fraction for the attribution model.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Boosting rounds.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Maximum tree depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Shrinkage per round.
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// L2 penalty on leaf values.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Minimum hessian sum per child.
    #[arg(long)]
    pub min_child_weight: Option<f64>,
    /// Positive-class weight (default n_neg / n_pos).
    #[arg(long)]
    pub pos_weight: Option<f64>,
    /// Non-seizure rows used to mask absent channels.
    #[arg(long)]
    pub background_size: Option<usize>,
    /// Largest channel count the exact engine will enumerate.
    #[arg(long)]
    pub exact_max_players: Option<usize>,
    /// auto, exact, tree_path or permutation.
    #[arg(long, value_parser = parse_engine)]
    pub shap_engine: Option<ShapEngine>,
    /// Permutations per frame for the sampling engine.
    #[arg(long)]
    pub permutations: Option<usize>,
    /// Keep the elbow channel itself (`true`) or stop just before it.
    #[arg(long)]
    pub elbow_inclusive: Option<bool>,
}

fn parse_engine(text: &str) -> std::result::Result<ShapEngine, String> {
    serde_json::from_value(serde_json::Value::String(text.to_string())).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Stages to run (repeatable); all three when omitted.
    #[arg(long)]
    pub stage: Vec<Stage>,
    #[command(flatten)]
    pub knobs: ConfigFlags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Stages to evaluate (repeatable); clinician when omitted.
    #[arg(long)]
    pub stage: Vec<Stage>,
    /// Evaluate the clinician, electrode and zone channel sets.
    #[arg(long, conflicts_with = "stage")]
    pub all_stages: bool,
    #[command(flatten)]
    pub knobs: ConfigFlags,
}

impl ConfigFlags {
    /// Applies every flag that was given on top of `cfg`.
    pub fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($flag:ident => $($field:tt)+) => {
                if let Some(v) = self.$flag {
                    cfg.$($field)+ = v;
                }
            };
        }
        set!(seed => seed);
        set!(pps_extension_s => pps_extension_s);
        set!(frame_len_s => frame_len_s);
        set!(overlap => frame_overlap);
        set!(band_low => band.0);
        set!(band_high => band.1);
        set!(filter_order => filter_order);
        set!(wavelet => wavelet);
        set!(dwt_levels => dwt_levels);
        set!(folds => cv_folds);
        set!(test_fraction => test_fraction);
        set!(rounds => gbdt.n_rounds);
        set!(depth => gbdt.max_depth);
        set!(learning_rate => gbdt.learning_rate);
        set!(lambda => gbdt.lambda);
        set!(min_child_weight => gbdt.min_child_weight);
        set!(background_size => background_size);
        set!(exact_max_players => exact_shap_max_players);
        set!(shap_engine => shap_engine);
        set!(permutations => n_permutations);
        set!(elbow_inclusive => elbow_inclusive);
        if let Some(w) = self.pos_weight {
            cfg.gbdt.pos_weight = Some(w);
        }
    }
}

/// Defaults, then the config file, then flags.
pub fn resolve_config(config_path: Option<&Path>, flags: &ConfigFlags) -> Result<RunConfig> {
    let mut cfg = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    flags.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

pub fn error_json(err: &Error) -> String {
    serde_json::to_string(&ErrorReport {
        error: err.kind(),
        message: err.to_string(),
    })
    .expect("error serializes")
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_target(false)
        .try_init();
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("{}", error_json(&err));
            exit_code(&err)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Synth(args) => cmd_synth(&args),
        Command::Run(args) => with_threads(args.input.threads, || cmd_run(&args)),
        Command::Eval(args) => with_threads(args.input.threads, || cmd_eval(&args)),
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(f),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let mut spec = SynthSpec::load(&args.spec)?;
    if let Some(path) = &args.montage {
        spec.montage = MontageSource::Path(path.clone());
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let out = generate(&spec)?;
    let files = out.write(&args.out)?;
    let truth = &out.ground_truth;
    println!(
        "{} channels, {:.1} s at {} Hz, {} seizure(s)",
        out.recording.n_channels(),
        out.recording.duration_s(),
        out.recording.sampling_rate(),
        truth.seizures.len()
    );
    let ictal: Vec<String> = truth.ictal_channels.iter().map(ToString::to_string).collect();
    println!("ictal channels: {}", ictal.join(", "));
    println!("clinician selection: {}", out.sidecar.clinician_selected);
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn load(input: &InputArgs) -> Result<(Montage, LoadedRecording)> {
    let montage = Montage::load(&input.montage)?;
    let loaded = load_recording(&input.signal, &input.sidecar, &montage)?;
    if loaded.selected.is_empty() {
        return Err(Error::Schema("sidecar has no clinician_selected channels".into()));
    }
    Ok((montage, loaded))
}

fn stages_or(requested: &[Stage], fallback: &[Stage]) -> Vec<Stage> {
    if requested.is_empty() {
        fallback.to_vec()
    } else {
        requested.to_vec()
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let cfg = resolve_config(args.input.config.as_deref(), &args.knobs)?;
    let (montage, loaded) = load(&args.input)?;
    let stages = stages_or(&args.stage, &Stage::ALL);
    let out = run_workflow(
        &loaded.recording,
        &loaded.annotations,
        &montage,
        &loaded.selected,
        &cfg,
        &stages,
    )?;
    let dir = &args.input.out;
    create_dir(dir)?;
    write_file(&dir.join("report.json"), &(out.report.to_json() + "\n"))?;
    for (stage, outcome) in out.report.stages.iter().zip(&out.outcomes) {
        write_file(&dir.join(format!("ranking_{}.svg", stage.stage)), &ranking_svg(stage))?;
        write_ndjson(
            &dir.join(format!("attributions_{}.ndjson", stage.stage)),
            &outcome.attributions,
            &outcome.importance.players,
        )?;
        let selected: Vec<String> = stage
            .elbow
            .selected
            .iter()
            .map(|c| {
                if outcome.report.new_findings.contains(c) {
                    c.to_string()
                } else {
                    format!("{c}*")
                }
            })
            .collect();
        println!(
            "{:<10} {:>3} channels  mean F1 {:.4}  k*={}  selected: {}",
            stage.stage,
            stage.n_channels,
            stage.mean_f1,
            stage.elbow.k_star,
            selected.join(", ")
        );
    }
    println!("(* clinician-selected)  wrote {}", dir.join("report.json").display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct StageEval {
    stage: Stage,
    n_channels: usize,
    fold_f1: Vec<f64>,
    mean_f1: f64,
    mean_precision: f64,
    mean_recall: f64,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    folds: usize,
    seed: u64,
    stages: Vec<StageEval>,
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let cfg = resolve_config(args.input.config.as_deref(), &args.knobs)?;
    let (montage, loaded) = load(&args.input)?;
    let stages = if args.all_stages {
        Stage::ALL.to_vec()
    } else {
        stages_or(&args.stage, &[Stage::Clinician])
    };
    let mut report = EvalReport {
        folds: cfg.cv_folds,
        seed: cfg.seed,
        stages: Vec::new(),
    };
    for stage in stages {
        let channels = stage.channels(&montage, &loaded.selected)?;
        let cv: CvReport = eval_stage(&loaded.recording, &loaded.annotations, &channels, &cfg)?;
        println!(
            "{:<10} {:>3} channels  mean F1 {:.4}",
            stage,
            channels.len(),
            cv.mean_f1
        );
        report.stages.push(StageEval {
            stage,
            n_channels: channels.len(),
            fold_f1: cv.folds.iter().map(|m| m.f1).collect(),
            mean_f1: cv.mean_f1,
            mean_precision: cv.mean_precision,
            mean_recall: cv.mean_recall,
        });
    }
    create_dir(&args.input.out)?;
    let path = args.input.out.join("eval.json");
    write_file(
        &path,
        &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"),
    )?;
    println!("wrote {}", path.display());
    Ok(())
}
