//! `cograph` command-line interface.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or input error.
//! Log verbosity comes from `COGRAPH_LOG` (e.g. `COGRAPH_LOG=info`).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};
use cograph::checkpoint::{self, Checkpoint};
use cograph::config::RunConfig;
use cograph::record::{self, parse_records, write_records};
use cograph::report::{comparison_text, history_csv, TrainSummary};
use cograph::synth::{generate_records, SynthSpec};
use cograph_core::gradcheck::{run_suite, GradcheckConfig};
use cograph_core::{evaluate, run_comparison, split_dataset, train, Model, PairedSample, Variant};

#[derive(Parser)]
#[command(name = "cograph", version, about = "Collaborative two-branch graph classifier")]
struct Cli {
    /// Print the default run configuration as JSON and exit.
    #[arg(long)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
        format!("unknown variant `{s}`; valid names: {}", names.join(", "))
    })
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset (one JSON record per line).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cross-modal latent strength in [0, 1].
        #[arg(long, default_value_t = SynthSpec::default().cross_modal_strength)]
        strength: f64,
        /// Per-coordinate node noise standard deviation.
        #[arg(long, default_value_t = SynthSpec::default().noise_sigma)]
        noise: f64,
        #[arg(long, default_value_t = SynthSpec::default().feature_dim)]
        dim: usize,
    },
    /// Add similarity-graph edge lists to every record.
    BuildGraphs {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one variant and write a checkpoint plus history CSV.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_parser = parse_variant, default_value = "collaborative")]
        variant: Variant,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// History CSV path (default: checkpoint path with `.history.csv`).
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on a dataset.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
    },
    /// Train every variant over seeds 0..K and tabulate test metrics.
    Compare {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated subset of variants (default: all six).
        #[arg(long, value_parser = parse_variant, value_delimiter = ',')]
        variants: Vec<Variant>,
        /// Also write the aligned text table here.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Run the finite-difference gradient suite.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = GradcheckConfig::default().instances)]
        instances: usize,
    },
}

enum Failure {
    Input(anyhow::Error),
    Runtime(anyhow::Error),
}

trait Classify<T> {
    fn input(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }
    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).runtime()?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Runtime(e.into())),
        _ => Ok(()),
    }
}

fn load_config(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn load_data(path: &Path) -> anyhow::Result<Vec<PairedSample>> {
    record::load_dataset(path).map_err(|e| anyhow!(e)).context("loading dataset")
}

fn check_dims(data: &[PairedSample], input_dim: usize) -> anyhow::Result<()> {
    for s in data {
        for (modality, g) in [("image", &s.image_graph), ("text", &s.text_graph)] {
            if g.feature_dim() != input_dim {
                bail!(
                    "sample `{}`: {modality} feature dimension {} does not match model input_dim {input_dim}",
                    s.id,
                    g.feature_dim()
                );
            }
        }
    }
    Ok(())
}

fn synth(out: &Path, spec: SynthSpec) -> Result<(), Failure> {
    spec.validate().map_err(|e| Failure::Input(anyhow!(e)))?;
    let records = generate_records(&spec);
    write_records(out, &records).runtime()?;
    print_json(&serde_json::json!({
        "path": out,
        "samples": records.len(),
        "label_1": records.iter().filter(|r| r.label == 1).count(),
        "image_nodes": records.iter().map(|r| r.image_features.len()).sum::<usize>(),
        "text_nodes": records.iter().map(|r| r.text_features.len()).sum::<usize>(),
    }))
}

fn build_graphs(input: &Path, out: &Path) -> Result<(), Failure> {
    let file = fs::File::open(input)
        .with_context(|| format!("opening {}", input.display()))
        .input()?;
    let mut records = Vec::new();
    let mut problems = Vec::new();
    for (line, rec) in parse_records(std::io::BufReader::new(file)) {
        match rec {
            Ok(rec) => {
                let id = rec.id.clone();
                match rec.with_built_edges() {
                    Ok(r) => records.push(r),
                    Err(e) => problems.push(format!(
                        "line {line}, record `{id}`, field `{}`: {}",
                        e.field, e.message
                    )),
                }
            }
            Err(e) => problems.push(e.to_string()),
        }
    }
    if !problems.is_empty() {
        for p in &problems {
            eprintln!("{p}");
        }
        return Err(Failure::Input(anyhow!("{} invalid record(s), nothing written", problems.len())));
    }
    write_records(out, &records).runtime()?;
    let edge_count = |e: &Option<Vec<(usize, usize)>>| e.as_ref().map_or(0, Vec::len);
    print_json(&serde_json::json!({
        "path": out,
        "records": records.len(),
        "image_edges": records.iter().map(|r| edge_count(&r.image_edges)).sum::<usize>(),
        "text_edges": records.iter().map(|r| edge_count(&r.text_edges)).sum::<usize>(),
    }))
}

fn train_cmd(
    data: &Path,
    variant: Variant,
    config: Option<&Path>,
    out: &Path,
    history: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = load_config(config).input()?;
    let model_cfg = cfg.model(variant);
    model_cfg.validate().input()?;
    let train_cfg = cfg.train();
    train_cfg.validate().input()?;
    let samples = load_data(data).input()?;
    check_dims(&samples, model_cfg.input_dim).input()?;
    let splits = split_dataset(&samples, cfg.seed);
    if splits.train.is_empty() || splits.val.is_empty() {
        return Err(Failure::Input(anyhow!(
            "dataset has {} samples; need at least 3 for a train/validation split",
            samples.len()
        )));
    }
    let mut model = Model::new(model_cfg, cfg.seed).input()?;
    let outcome = train(&mut model, &splits.train, &splits.val, &train_cfg).runtime()?;
    checkpoint::save(out, &Checkpoint::from_model(&model, Some(&train_cfg), Some(outcome.best_epoch)))
        .runtime()?;
    let history_path = history.map_or_else(|| out.with_extension("history.csv"), Path::to_path_buf);
    fs::write(&history_path, history_csv(&outcome.history))
        .with_context(|| format!("writing {}", history_path.display()))
        .runtime()?;
    let best = outcome.best();
    print_json(&TrainSummary {
        variant: variant.name().into(),
        best_epoch: outcome.best_epoch,
        epochs_run: outcome.history.len() - 1,
        val_logloss: best.val_logloss,
        val_accuracy: best.val_accuracy,
        train_samples: splits.train.len(),
        val_samples: splits.val.len(),
        test_samples: splits.test.len(),
    })
}

fn eval_cmd(data: &Path, ckpt: &Path) -> Result<(), Failure> {
    let model = checkpoint::load(ckpt).and_then(|c| c.to_model()).input()?;
    let samples = load_data(data).input()?;
    check_dims(&samples, model.config().input_dim).input()?;
    let report = evaluate(&model, &samples).input()?;
    print_json(&report)
}

fn compare_cmd(
    data: &Path,
    seeds: u64,
    config: Option<&Path>,
    variants: &[Variant],
    table: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = load_config(config).input()?;
    let model_cfg = cfg.model(Variant::Collaborative);
    model_cfg.validate().input()?;
    cfg.train().validate().input()?;
    if seeds == 0 {
        return Err(Failure::Input(anyhow!("--seeds must be at least 1")));
    }
    let samples = load_data(data).input()?;
    check_dims(&samples, model_cfg.input_dim).input()?;
    let splits = split_dataset(&samples, cfg.seed);
    if splits.train.is_empty() || splits.val.is_empty() || splits.test.is_empty() {
        return Err(Failure::Input(anyhow!(
            "dataset has {} samples; need at least 4 for train/validation/test splits",
            samples.len()
        )));
    }
    let variants = if variants.is_empty() { &Variant::ALL[..] } else { variants };
    let seed_list: Vec<u64> = (0..seeds).collect();
    let result = run_comparison(&splits, variants, &seed_list, &model_cfg, &cfg.train());
    let text = comparison_text(&result);
    eprint!("{text}");
    if let Some(path) = table {
        fs::write(path, &text)
            .with_context(|| format!("writing {}", path.display()))
            .runtime()?;
    }
    print_json(&result)?;
    let failed = result.cells.iter().filter(|c| c.result.is_err()).count();
    if failed > 0 {
        return Err(Failure::Runtime(anyhow!("{failed} comparison cell(s) failed")));
    }
    Ok(())
}

fn gradcheck_cmd(seed: u64, instances: usize) -> Result<(), Failure> {
    let cfg = GradcheckConfig {
        seed,
        instances,
        ..GradcheckConfig::default()
    };
    let report = run_suite(&cfg).runtime()?;
    for c in &report.checks {
        eprintln!(
            "{:<32} {:>6} checked {:>4} skipped  max rel {:.2e}  {}",
            c.name,
            c.stats.checked,
            c.stats.skipped,
            c.stats.max_rel_error,
            if c.passed { "ok" } else { "FAIL" }
        );
    }
    print_json(&report)?;
    if !report.passed() {
        return Err(Failure::Runtime(anyhow!("gradient check failed")));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.print_config {
        return print_json(&RunConfig::default());
    }
    let Some(command) = cli.command else {
        return Err(Failure::Input(anyhow!("no command given; see --help")));
    };
    match command {
        Command::Synth { out, n, seed, strength, noise, dim } => synth(
            &out,
            SynthSpec {
                n_samples: n,
                feature_dim: dim,
                noise_sigma: noise,
                cross_modal_strength: strength,
                seed,
            },
        ),
        Command::BuildGraphs { input, out } => build_graphs(&input, &out),
        Command::Train { data, variant, config, out, history } => {
            train_cmd(&data, variant, config.as_deref(), &out, history.as_deref())
        }
        Command::Eval { data, ckpt } => eval_cmd(&data, &ckpt),
        Command::Compare { data, seeds, config, variants, table } => {
            compare_cmd(&data, seeds, config.as_deref(), &variants, table.as_deref())
        }
        Command::Gradcheck { seed, instances } => gradcheck_cmd(seed, instances),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("COGRAPH_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
