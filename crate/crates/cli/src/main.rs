use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bscale_recog::bscale::{threshold_wbs, BScaleSettings};
use bscale_recog::config::{
    self, Config, DEFAULT_KMAX, DEFAULT_SEED, DEFAULT_SIGMA_FACTOR, DEFAULT_SKIN_CUTOFF, DEFAULT_THRESHOLD_PERCENTILE,
    DEFAULT_TS, DEFAULT_VARIANCE_RETAINED,
};
use bscale_recog::eval::{
    combination_sweep, load_dataset, loocv, phantom_subjects, prepare_dataset, save_dataset, save_records_csv,
    write_summary_csv, PhantomSpec,
};
use bscale_recog::metaimage::{load_volume, save_bscale, save_mask, save_wbs};
use bscale_recog::recognition::{body_mask, coarse_recognize, probe_delta_f, refine_with_skin, Pose};
use bscale_recog::shape::ModelAssembly;
use bscale_recog::training::train_from_subjects;
use bscale_recog::Error;
use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use nalgebra::{Matrix3, Vector3};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(
    name = "bscale-recog",
    version,
    about = "Ball-scale encoding and one-shot object recognition",
    after_help = defaults_help()
)]
struct Cli {
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct EncodingArgs {
    #[arg(long, help = sigma_help())]
    sigma: Option<f64>,
    /// Homogeneity threshold t_s on the fraction of object.
    #[arg(long, default_value_t = DEFAULT_TS)]
    ts: f64,
    /// Largest ball radius.
    #[arg(long, default_value_t = DEFAULT_KMAX)]
    kmax: usize,
    /// Lower end of the WBs threshold interval as a percentile of non-zero values.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_PERCENTILE)]
    threshold_percentile: f64,
}

fn defaults_help() -> String {
    format!(
        "Defaults: t_s = {DEFAULT_TS}, k_max = {DEFAULT_KMAX}, WBs threshold percentile = {DEFAULT_THRESHOLD_PERCENTILE}, \
         σ factor = {DEFAULT_SIGMA_FACTOR}, seed = {DEFAULT_SEED}"
    )
}

fn sigma_help() -> String {
    format!("Homogeneity width σ [default: {DEFAULT_SIGMA_FACTOR} × mean face-neighbour difference]")
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ball scale and intensity-weighted ball scale of a volume.
    Bscale {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_r: PathBuf,
        #[arg(long)]
        out_wbs: PathBuf,
        #[command(flatten)]
        enc: EncodingArgs,
    },
    /// Threshold a WBs volume into a mask.
    WbsThreshold {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
        /// Used when --lo/--hi are absent.
        #[arg(long, default_value_t = DEFAULT_THRESHOLD_PERCENTILE)]
        threshold_percentile: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shape models.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Place a trained assembly in a volume.
    Recognize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Align the placed skin model with the body outline.
        #[arg(long)]
        refine_skin: bool,
        /// With --refine-skin, also adjust scale.
        #[arg(long)]
        refine_scale: bool,
        /// Body outline cutoff as a fraction of the scene maximum.
        #[arg(long, default_value_t = DEFAULT_SKIN_CUTOFF)]
        skin_cutoff: f64,
        /// Grid search within ±1 learned standard deviation of the pose.
        #[arg(long)]
        probe_deltaf: bool,
    },
    /// Synthetic data.
    #[command(subcommand)]
    Phantom(PhantomCommand),
    /// Leave-one-out evaluation.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Configuration utilities.
    #[command(subcommand)]
    Config(ConfigCommand),
}

#[derive(Subcommand, Debug)]
enum ModelCommand {
    /// Train a model assembly and its pose relationship on a dataset.
    Build {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated labels, or `all`.
        #[arg(long, default_value = "all")]
        objects: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        enc: EncodingArgs,
        /// Fraction of shape variance covered by retained modes.
        #[arg(long, default_value_t = DEFAULT_VARIANCE_RETAINED)]
        variance_retained: f64,
    },
}

#[derive(Subcommand, Debug)]
enum PhantomCommand {
    /// Generate a phantom dataset directory.
    Gen {
        /// Phantom spec JSON; the built-in abdomen spec when absent.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum EvalCommand {
    /// Leave-one-out errors for one object subset.
    Loocv {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "all")]
        objects: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        enc: EncodingArgs,
    },
    /// Leave-one-out summaries for every non-empty object subset.
    Sweep {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        enc: EncodingArgs,
    },
}

#[derive(Subcommand, Debug)]
enum ConfigCommand {
    /// Print the resolved configuration as JSON.
    Echo {
        #[command(flatten)]
        enc: EncodingArgs,
    },
}

/// Failures split by exit code.
enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Whether `id` was typed on the command line in the active subcommand chain.
fn on_command_line(m: &ArgMatches, id: &str) -> bool {
    let mut cur = Some(m);
    while let Some(a) = cur {
        if a.ids().any(|i| i.as_str() == id) && a.value_source(id) == Some(ValueSource::CommandLine) {
            return true;
        }
        cur = a.subcommand().map(|(_, s)| s);
    }
    false
}

/// Config file (or defaults) overridden by explicitly given flags.
fn resolve_config(path: Option<&Path>, m: &ArgMatches, enc: Option<&EncodingArgs>) -> CliResult<Config> {
    let mut cfg = match path {
        Some(p) => Config::from_json_file(p).map_err(|e| match e {
            Error::Io { .. } => Failure::Runtime(e),
            other => Failure::Usage(format!("config {}: {other}", p.display())),
        })?,
        None => Config::default(),
    };
    if let Some(enc) = enc {
        if enc.sigma.is_some() {
            cfg.sigma = enc.sigma;
        }
        if on_command_line(m, "ts") {
            cfg.ts = enc.ts;
        }
        if on_command_line(m, "kmax") {
            cfg.kmax = enc.kmax;
        }
        if on_command_line(m, "threshold_percentile") {
            cfg.threshold_percentile = enc.threshold_percentile;
        }
    }
    if on_command_line(m, "threads") {
        cfg.threads = m.get_one::<usize>("threads").copied().unwrap_or(0);
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn select_objects(all: &[String], spec: &str) -> CliResult<Vec<String>> {
    if spec == "all" {
        return Ok(all.to_vec());
    }
    let picked: Vec<String> = spec.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if picked.is_empty() {
        return Err(Failure::Usage("--objects is empty".into()));
    }
    for p in &picked {
        if !all.contains(p) {
            return Err(Failure::Usage(format!("unknown object `{p}`; dataset has {}", all.join(", "))));
        }
    }
    Ok(picked)
}

fn write_json(path: &Path, v: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(v).expect("json value serializes");
    std::fs::write(path, text).map_err(|e| Failure::Runtime(Error::Io { path: path.into(), source: e }))
}

fn vec3(v: &Vector3<f64>) -> Value {
    json!([v.x, v.y, v.z])
}

fn mat3(m: &Matrix3<f64>) -> Value {
    json!([[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]])
}

fn pose_json(p: &Pose<f64>) -> Value {
    json!({ "s": p.s, "t": vec3(&p.t), "R": mat3(&p.r) })
}

fn run(cli: Cli, m: &ArgMatches) -> CliResult<()> {
    let cfg_path = cli.config.as_deref();
    match cli.command {
        Command::Bscale { input, out_r, out_wbs, enc } => {
            let cfg = resolve_config(cfg_path, m, Some(&enc))?;
            let scene = load_volume::<f64>(&input)?;
            let settings = BScaleSettings::from_config(&cfg);
            let e = settings.encode(&scene)?;
            let extra = settings.header_fields(e.sigma);
            save_bscale(e.radii.as_ref().expect("full encoding keeps radii"), &out_r, extra.clone())?;
            save_wbs(&e.wbs, &out_wbs, extra)?;
            log::info!("sigma {:.4}, WBs interval [{}, {}]", e.sigma, e.interval.0, e.interval.1);
        }
        Command::WbsThreshold { input, lo, hi, threshold_percentile, out } => {
            let wbs = load_volume::<f64>(&input)?;
            let (lo, hi) = match (lo, hi) {
                (Some(lo), Some(hi)) => (lo, hi),
                (None, None) => {
                    config::validate_percentile(threshold_percentile).map_err(|e| Failure::Usage(e.to_string()))?;
                    bscale_recog::bscale::percentile_interval(&wbs, threshold_percentile)?
                }
                _ => return Err(Failure::Usage("--lo and --hi go together".into())),
            };
            let mask = threshold_wbs(&wbs, lo, hi).map_err(|e| Failure::Usage(e.to_string()))?;
            save_mask(&mask, &out)?;
            log::info!("{} voxels in [{lo}, {hi}]", mask.count());
        }
        Command::Model(ModelCommand::Build { data, objects, out, enc, variance_retained }) => {
            let mut cfg = resolve_config(cfg_path, m, Some(&enc))?;
            if on_command_line(m, "variance_retained") {
                cfg.variance_retained = variance_retained;
                cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            }
            let (index, subjects) = load_dataset::<f64>(&data)?;
            let labels = select_objects(&index.labels, &objects)?;
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            let assembly = train_from_subjects(&subjects, &refs, &cfg)?;
            assembly.save(&out)?;
            log::info!("trained {} objects on {} subjects", labels.len(), subjects.len());
        }
        Command::Recognize { input, model, out, refine_skin, refine_scale, skin_cutoff, probe_deltaf } => {
            let cfg = resolve_config(cfg_path, m, None)?;
            let cutoff = if on_command_line(m, "skin_cutoff") { skin_cutoff } else { cfg.skin_cutoff };
            if !(0.0..1.0).contains(&cutoff) {
                return Err(Failure::Usage(format!("--skin-cutoff must lie in [0, 1), got {cutoff}")));
            }
            let scene = load_volume::<f64>(&input)?;
            let assembly = ModelAssembly::<f64>::load(&model)?;
            let result = coarse_recognize(&scene, &assembly)?;
            let placed = |shapes: &[bscale_recog::recognition::PlacedShape<f64>]| -> Value {
                shapes
                    .iter()
                    .map(|p| (p.label.clone(), Value::Array(p.landmarks.iter().map(vec3).collect())))
                    .collect::<serde_json::Map<_, _>>()
                    .into()
            };
            let mut doc = json!({
                "pose": pose_json(&result.pose),
                "center": vec3(&assembly.center()),
                "predicted_origin": vec3(&result.predicted_origin),
                "placed": placed(&result.placed),
                "diagnostics": {
                    "pc_bi": { "origin": vec3(&result.pc_bi.origin), "axes": mat3(&result.pc_bi.axes) },
                    "wbs_interval": [result.interval.0, result.interval.1],
                    "sigma": result.sigma,
                    "wbs_voxels": result.wbs_voxels,
                },
            });
            if refine_skin {
                let mask = body_mask(&scene, cutoff);
                match refine_with_skin(&assembly, &result, &mask, &cfg.skin_label, refine_scale)? {
                    Some(r) => {
                        doc["refined"] = json!({
                            "pose": pose_json(&r.pose),
                            "shift": vec3(&r.shift),
                            "scale_factor": r.scale_factor,
                            "containment": r.containment,
                            "placed": placed(&r.placed),
                        });
                    }
                    None => doc["refined"] = Value::Null,
                }
            }
            if probe_deltaf {
                let mask = assembly.relationship()?.bscale.encode_weighted(&scene)?.mask;
                let (pose, score) = probe_delta_f(&assembly, &result.pose, &mask)?;
                doc["probe"] = json!({ "pose": pose_json(&pose), "mean_distance_mm": score });
            }
            write_json(&out, &doc)?;
        }
        Command::Phantom(PhantomCommand::Gen { spec, n, seed, out }) => {
            let mut spec = match spec {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| Failure::Runtime(Error::Io { path: p.clone(), source: e }))?;
                    serde_json::from_str::<PhantomSpec>(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
                }
                None => PhantomSpec::default(),
            };
            if on_command_line(m, "seed") || cfg_path.is_none() {
                spec.seed = seed;
            } else {
                spec.seed = resolve_config(cfg_path, m, None)?.seed;
            }
            spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            if n == 0 {
                return Err(Failure::Usage("--n must be positive".into()));
            }
            let subjects = phantom_subjects::<f64>(&spec, n)?;
            save_dataset(&out, &subjects, Some(spec))?;
            log::info!("wrote {n} subjects to {}", out.display());
        }
        Command::Eval(EvalCommand::Loocv { data, objects, out, enc }) => {
            let cfg = resolve_config(cfg_path, m, Some(&enc))?;
            let (index, subjects) = load_dataset::<f64>(&data)?;
            let labels = select_objects(&index.labels, &objects)?;
            if subjects.len() < 3 {
                return Err(Failure::Usage(format!("leave-one-out needs at least 3 subjects, found {}", subjects.len())));
            }
            let prepared = prepare_dataset(&subjects, &index.labels, &cfg)?;
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            let report = loocv(&prepared, &refs, true)?;
            save_records_csv(&out, &cfg, &report.records)?;
            let s = &report.summary;
            println!(
                "{}: translation {:.3} ± {:.3} mm, rotation x/y/z {:.2}/{:.2}/{:.2} deg, scale {:.4} ± {:.4}",
                s.subset, s.t_err_mm.mean, s.t_err_mm.std, s.rot_deg[0].mean, s.rot_deg[1].mean, s.rot_deg[2].mean,
                s.scale_ratio.mean, s.scale_ratio.std
            );
        }
        Command::Eval(EvalCommand::Sweep { data, out, enc }) => {
            let cfg = resolve_config(cfg_path, m, Some(&enc))?;
            let (index, subjects) = load_dataset::<f64>(&data)?;
            if subjects.len() < 3 {
                return Err(Failure::Usage(format!("leave-one-out needs at least 3 subjects, found {}", subjects.len())));
            }
            let prepared = prepare_dataset(&subjects, &index.labels, &cfg)?;
            let sweep = combination_sweep(&prepared, true)?;
            let ranked = sweep.ranked();
            let f = std::fs::File::create(&out).map_err(|e| Failure::Runtime(Error::Io { path: out.clone(), source: e }))?;
            write_summary_csv(std::io::BufWriter::new(f), &cfg, &ranked)?;
            for s in ranked.iter().take(5) {
                println!("{:<40} {:.3} mm", s.subset, s.t_err_mm.mean);
            }
        }
        Command::Config(ConfigCommand::Echo { enc }) => {
            let cfg = resolve_config(cfg_path, m, Some(&enc))?;
            let v: Value = serde_json::from_str(&cfg.to_json()).expect("config is json");
            println!("{}", serde_json::to_string_pretty(&v).expect("json value serializes"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    // The file's thread count applies unless the flag was given; a bad file
    // is reported later by the subcommand.
    let threads = match (&cli.config, on_command_line(&matches, "threads")) {
        (Some(p), false) => Config::from_json_file(p).map(|c| c.threads).unwrap_or(0),
        _ => cli.threads,
    };
    if threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    match run(cli, &matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
