use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spvr::corpus::{compute_mets, met_type_stats};
use spvr::pipeline::{
    backend_for, gateway_for, load_corpus, load_sample, met_report, prepare_sample, run_eval, run_repair, write_jsonl,
    PipelineError, PromptLine, RunConfig,
};

#[derive(Parser)]
#[command(name = "spvr", version, about = "Syntax-guided prompts for C/C++ vulnerability repair")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Parallel requests and sample workers.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for cached model replies.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate the minimum edit tree of one sample.
    Met {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the inspection rules on one sample.
    Rules {
        #[arg(long)]
        input: PathBuf,
    },
    /// Build the prompts for one sample.
    Prompt {
        #[arg(long)]
        input: PathBuf,
        /// JSONL output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prompt the model for every sample and extract candidate patches.
    Repair {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Use the mock backend with this script.
        #[arg(long)]
        mock: Option<PathBuf>,
    },
    /// Score candidates against ground truth.
    Eval {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        threshold: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Write an empty report when there are no candidates.
        #[arg(long)]
        allow_empty: bool,
    },
    /// MET-type statistics of a corpus.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
    },
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable output")
}

fn config(cli: &Cli, edit: impl FnOnce(&mut RunConfig)) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(dir) = &cli.cache_dir {
        cfg.cache_dir = Some(dir.clone());
    }
    edit(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

/// Settings that single-sample commands need, without backend checks.
fn local_config(cli: &Cli) -> Result<RunConfig, PipelineError> {
    match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))
        }
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    match &cli.command {
        Command::Met { input } => {
            let sample = load_sample(input)?;
            let report = met_report(&sample).map_err(|u| {
                eprintln!("no MET: {} ({})", u.reason, u.detail);
                PipelineError::EmptyCorpus
            })?;
            println!("{}", json(&report));
        }
        Command::Rules { input } => {
            let cfg = local_config(cli)?;
            let sample = load_sample(input)?;
            let prepared = prepare_sample(&sample, &cfg.rules, &cfg.prompt).map_err(|u| {
                eprintln!("unsupported: {} ({})", u.reason, u.detail);
                PipelineError::EmptyCorpus
            })?;
            println!("{}", json(&prepared.findings));
        }
        Command::Prompt { input, out } => {
            let cfg = local_config(cli)?;
            let sample = load_sample(input)?;
            let prepared = prepare_sample(&sample, &cfg.rules, &cfg.prompt).map_err(|u| {
                eprintln!("unsupported: {} ({})", u.reason, u.detail);
                PipelineError::EmptyCorpus
            })?;
            let lines = prepared
                .bundles
                .iter()
                .map(|b| PromptLine { sample_id: b.sample_id.clone(), ordinal: b.ordinal, text: b.assembled.clone() });
            match out {
                Some(path) => write_jsonl(path, lines)?,
                None => {
                    for l in lines {
                        println!("{}", serde_json::to_string(&l).expect("serializable output"));
                    }
                }
            }
        }
        Command::Repair { corpus, out_dir, mock } => {
            let cfg = config(cli, |c| {
                if let Some(p) = corpus {
                    c.corpus = p.clone();
                }
                if let Some(p) = out_dir {
                    c.output_dir = p.clone();
                }
                if let Some(p) = mock {
                    c.backend = spvr::pipeline::BackendKind::Mock;
                    c.mock_script = Some(p.clone());
                }
            })?;
            let gateway = gateway_for(&cfg, backend_for(&cfg)?)?;
            let summary = run_repair(&cfg, &gateway)?;
            println!("{}", json(&summary));
        }
        Command::Eval { candidates, truth, k, threshold, out_dir, allow_empty } => {
            let mut cfg = local_config(cli)?;
            if let Some(k) = k {
                cfg.eval.k = *k;
            }
            if let Some(t) = threshold {
                cfg.eval.edit_distance_threshold = *t;
            }
            cfg.eval.allow_empty |= allow_empty;
            if cfg.eval.k == 0 {
                return Err(PipelineError::Config("k must be at least 1".into()));
            }
            let dir = out_dir.clone().unwrap_or_else(|| cfg.output_dir.clone());
            let report = run_eval(candidates, truth, &cfg.eval, &dir)?;
            println!("{}", json(&report.aggregates));
        }
        Command::Stats { corpus } => {
            let mut c = load_corpus(corpus)?;
            compute_mets(&mut c);
            let stats = met_type_stats(&c);
            println!("{}", json(&stats));
            print!("{}", stats.to_text());
            if stats.total == 0 {
                return Err(PipelineError::EmptyCorpus);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, PipelineError::EmptyCorpus) || !matches!(cli.command, Command::Met { .. } | Command::Rules { .. } | Command::Prompt { .. }) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
