//! Subcommands: `train`, `eval`, `export-maps`, `gradcheck`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use learnpool_core::dataset::{generate_synthetic, ImageSample};
use learnpool_core::training::{evaluate, plan_protocol, run_trials, AggregateReport, TrialOutcome};
use learnpool_core::verify::{grad_check, GradCheckOptions, GradCheckReport, GradInstance, InstanceDims, BLOCKS};
use learnpool_core::{seeded_rng, PoolMapSet, TrainConfig};

use crate::bundle::ModelBundle;
use crate::error::{CliError, CliResult, EXIT_OK, EXIT_USAGE, EXIT_VERIFY};
use crate::fsutil::{create_dir, write_atomic};
use crate::{cifar, config, maps, metrics};

#[derive(Debug, Parser)]
#[command(name = "learnpool", version, about = "Learn pooling weight maps on top of a k-means patch codebook")]
struct Cli {
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn a codebook, train the classifier, then train the pool maps.
    Train(TrainArgs),
    /// Evaluate a saved model bundle on a dataset.
    Eval(EvalArgs),
    /// Write the pool maps of a bundle as PGM images plus a PMAP dump.
    ExportMaps(ExportArgs),
    /// Compare analytic gradients with finite differences.
    Gradcheck(GradArgs),
}

#[derive(Debug, Args, Default)]
struct ConfigArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base settings: `paper` or `desk`.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eta_pool: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Use the generated two-class dataset instead of CIFAR-10 files.
    #[arg(long)]
    synthetic: bool,
    /// Override any config key, e.g. `--set k=8`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn is_empty(&self) -> bool {
        self.config.is_none()
            && self.preset.is_none()
            && self.seed.is_none()
            && self.eta_pool.is_none()
            && self.trials.is_none()
            && !self.synthetic
            && self.overrides.is_empty()
    }

    /// Preset (or `base`), then config file, then `--set`, then named flags.
    fn resolve(&self, base: TrainConfig) -> CliResult<TrainConfig> {
        let mut cfg = match &self.preset {
            Some(name) => config::preset(name)
                .ok_or_else(|| CliError::Usage(format!("unknown preset {name:?} (expected paper or desk)")))?,
            None => base,
        };
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            cfg = config::apply_text(cfg, &text).map_err(|e| match e {
                CliError::Config { line, message } => {
                    CliError::Usage(format!("{}: line {line}: {message}", path.display()))
                }
                other => other,
            })?;
        }
        for item in &self.overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {item:?}")))?;
            config::set_key(&mut cfg, k.trim(), v.trim()).map_err(CliError::Usage)?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(eta) = self.eta_pool {
            cfg.eta_pool = eta;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if self.synthetic {
            cfg.synthetic = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Directory holding CIFAR-10 `data_batch_*.bin` files.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Print the batch/check schedule and exit without training.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// A single CIFAR-10 batch file, e.g. `test_batch.bin`.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GradArgs {
    /// Grid sides to test.
    #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 8])]
    side: Vec<usize>,
    /// Codebook sizes to test.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 5])]
    k: Vec<usize>,
    /// Hidden layer sizes to test.
    #[arg(long, value_delimiter = ',', default_values_t = [3, 16])]
    hidden: Vec<usize>,
    /// Random instances per dimension combination.
    #[arg(long, default_value_t = 3)]
    instances: usize,
    #[arg(long, default_value_t = 5e-5)]
    eta: f64,
    #[arg(long, default_value_t = 1e-6)]
    step: f64,
    #[arg(long, default_value_t = 1e-5)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Drop the 1/sigma factor from the map update (negative control).
    #[arg(long, hide = true)]
    corrupt_update: bool,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let dispatch = move || match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::ExportMaps(a) => cmd_export_maps(&a),
        Command::Gradcheck(a) => cmd_gradcheck(&a),
    };
    let result = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(dispatch),
            Err(e) => Err(CliError::Usage(format!("cannot start {n} worker threads: {e}"))),
        },
        None => dispatch(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_samples(cfg: &TrainConfig, data_dir: Option<&Path>, file: Option<&Path>) -> CliResult<Vec<ImageSample>> {
    if let Some(f) = file {
        return cifar::load_cifar_batch(f, cfg.n, cfg.t);
    }
    if let Some(dir) = data_dir {
        return cifar::load_training_set(dir, cfg.n, cfg.t);
    }
    if cfg.synthetic {
        return Ok(generate_synthetic(cfg.synthetic_count, cfg.n, cfg.seed)?);
    }
    Err(CliError::Usage("no data: pass --data-dir (CIFAR-10) or --synthetic".into()))
}

fn cmd_train(args: &TrainArgs) -> CliResult<i32> {
    let cfg = args.cfg.resolve(TrainConfig::full_scale())?;
    if args.dry_run {
        print!("{}", describe_plan(&cfg));
        return Ok(EXIT_OK);
    }
    let samples = load_samples(&cfg, args.data_dir.as_deref(), None)?;
    let (outcomes, agg) = run_trials(&cfg, &samples)?;

    create_dir(&args.out)?;
    for (r, outcome) in outcomes.iter().enumerate() {
        let dir = if outcomes.len() == 1 { args.out.clone() } else { args.out.join(format!("trial_{r}")) };
        let trial_cfg = TrainConfig { seed: outcome.seed, ..cfg.clone() };
        write_trial(&dir, &trial_cfg, outcome)?;
    }
    let summary = summarize(&agg);
    write_atomic(&args.out.join("summary.txt"), summary.as_bytes())?;
    print!("{summary}");
    Ok(EXIT_OK)
}

/// Human-readable schedule; same helpers as the trainer.
pub fn describe_plan(cfg: &TrainConfig) -> String {
    let plan = plan_protocol(cfg);
    let mut s = String::new();
    let _ = writeln!(s, "phase1_examples = {}", plan.phase1_examples);
    let _ = writeln!(s, "phase1_batches = {}", plan.phase1_batches);
    let _ = writeln!(s, "batch_size = {}", cfg.batch_size);
    let _ = writeln!(s, "phase_boundary = {}", plan.phase_boundary);
    let _ = writeln!(s, "phase2_examples = {}", plan.phase2_examples);
    let _ = writeln!(s, "phase2_batches = {}", plan.phase2_batches);
    let _ = writeln!(s, "eta_pool = {:?}", cfg.eta_pool);
    let _ = writeln!(s, "val_check_interval = {}", cfg.val_check_interval);
    let _ = writeln!(s, "validation_checks = {}", plan.validation_checks);
    let points: Vec<String> = plan.check_points.iter().map(usize::to_string).collect();
    let _ = writeln!(s, "check_points = {}", points.join(","));
    let _ = writeln!(s, "trials = {}", cfg.trials);
    s
}

fn write_maps(dir: &Path, maps: &PoolMapSet) -> CliResult<()> {
    create_dir(dir)?;
    for i in 0..maps.pools() {
        write_atomic(&dir.join(format!("map_{i}.pgm")), &maps::encode_pgm(maps, i))?;
    }
    write_atomic(&dir.join("maps.pmap"), &maps::encode_pmap(maps))
}

fn write_trial(dir: &Path, cfg: &TrainConfig, outcome: &TrialOutcome) -> CliResult<()> {
    create_dir(dir)?;
    write_atomic(&dir.join("metrics.csv"), metrics::to_csv(&outcome.report.history).as_bytes())?;
    let bundle = ModelBundle {
        config: cfg.clone(),
        codebook: outcome.codebook.clone(),
        maps: outcome.report.best_maps.clone(),
        classifier: outcome.classifier.clone(),
        stats: outcome.stats.clone(),
    };
    bundle.save(&dir.join("model.lpmb"))?;
    write_maps(&dir.join("maps"), &outcome.report.best_maps)
}

fn summarize(agg: &AggregateReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>6} {:>20} {:>10} {:>10} {:>10}", "trial", "seed", "baseline", "best", "delta");
    for (r, t) in agg.trials.iter().enumerate() {
        let _ = writeln!(
            s,
            "{r:>6} {:>20} {:>10.4} {:>10.4} {:>+10.4}",
            t.seed,
            t.baseline_val_acc,
            t.best_post_pool_acc,
            t.delta()
        );
    }
    let _ = writeln!(s, "baseline_val_acc mean {:.4} std {:.4}", agg.mean_baseline, agg.std_baseline);
    let _ = writeln!(s, "best_post_pool_acc mean {:.4} std {:.4}", agg.mean_best, agg.std_best);
    let _ = writeln!(s, "mean_of_deltas {:+.4}", agg.mean_delta);
    let _ = writeln!(s, "delta_of_means {:+.4}", agg.delta_of_means);
    s
}

fn cmd_eval(args: &EvalArgs) -> CliResult<i32> {
    let bundle = ModelBundle::load(&args.bundle)?;
    let cfg = if args.cfg.is_empty() {
        bundle.config.clone()
    } else {
        let cfg = args.cfg.resolve(bundle.config.clone())?;
        let diffs = config::model_mismatches(&bundle.config, &cfg);
        if !diffs.is_empty() {
            return Err(CliError::Usage(format!("configuration does not match the bundle: {}", diffs.join("; "))));
        }
        cfg
    };
    let samples = load_samples(&cfg, args.data_dir.as_deref(), args.file.as_deref())?;
    let acc =
        evaluate(&bundle.classifier, &bundle.codebook, &bundle.maps, &bundle.stats, &samples, cfg.patch_params())?;
    println!("accuracy {acc:.4} ({} samples)", samples.len());
    Ok(EXIT_OK)
}

fn cmd_export_maps(args: &ExportArgs) -> CliResult<i32> {
    let bundle = ModelBundle::load(&args.bundle)?;
    write_maps(&args.out, &bundle.maps)?;
    println!("wrote {} maps to {}", bundle.maps.pools(), args.out.display());
    Ok(EXIT_OK)
}

/// Aligned per-block table.
pub fn format_report(report: &GradCheckReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<8} {:>14}", "block", "max_rel_error");
    for (name, err) in BLOCKS.iter().zip(report.block_errors) {
        let _ = writeln!(s, "{name:<8} {err:>14.3e}");
    }
    s
}

/// Single-line machine-readable summary.
pub fn summary_line(report: &GradCheckReport, threshold: f64) -> String {
    let (i, m, n) = report.worst_coordinate;
    format!(
        "gradcheck status={} max_rel_error={:e} worst_block={} worst_coordinate=({i},{m},{n}) instances={} threshold={:e}",
        if report.passed(threshold) { "pass" } else { "fail" },
        report.max_rel_error,
        report.worst_block,
        report.instances,
        threshold
    )
}

fn cmd_gradcheck(args: &GradArgs) -> CliResult<i32> {
    if args.step.is_nan() || args.step <= 0.0 || args.eta < 0.0 {
        return Err(CliError::Usage("--step must be > 0 and --eta >= 0".into()));
    }
    let opts = GradCheckOptions { step: args.step, eta: args.eta, corrupt_update: args.corrupt_update };
    let mut rng = seeded_rng(args.seed);
    let mut total: Option<GradCheckReport> = None;
    for &side in &args.side {
        for &k in &args.k {
            for &hidden in &args.hidden {
                let dims = InstanceDims { side, k, pools: 4, hidden, classes: 3 };
                for _ in 0..args.instances {
                    let inst = GradInstance::random(dims, &mut rng)?;
                    let r = grad_check(&inst, opts)?;
                    match &mut total {
                        Some(t) => t.merge(&r),
                        None => total = Some(r),
                    }
                }
            }
        }
    }
    let report = total.ok_or_else(|| CliError::Usage("no gradient-check instances requested".into()))?;
    print!("{}", format_report(&report));
    println!("{}", summary_line(&report, args.threshold));
    Ok(if report.passed(args.threshold) { EXIT_OK } else { EXIT_VERIFY })
}
