use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cdrkit::config::PipelineConfig;
use cdrkit::corpus::{parse_pubtator, Document};
use cdrkit::eval::paired_ttest;
use cdrkit::instances::Level;
use cdrkit::nam::read_predictions;
use cdrkit::pipeline::{self, HeatmapSelection, Stage};
use cdrkit::postprocess::read_results;
use cdrkit::synthetic::{self, SyntheticConfig, SyntheticTask};
use cdrkit::{Error, Result};

#[derive(Parser)]
#[command(name = "cdrkit", version, about = "Chemical-disease relation extraction pipeline")]
struct Cli {
    /// Pipeline config file (`key = value` lines).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Override a config key, e.g. `--set kge.epochs=50`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the train and test PubTator files.
    Parse,
    /// Build intra- and inter-sentence candidate instances.
    BuildInstances,
    /// Collect knowledge-base triples for all candidate pairs.
    ExtractTriples,
    /// Train translation embeddings on the triples.
    TrainKge,
    /// Train the attention classifier.
    TrainNam,
    /// Classify the test instances.
    Predict,
    /// Merge predictions per document and apply the rules.
    Postprocess,
    /// Score predictions against gold pairs.
    ///
    /// With `--predictions` and `--gold` no config is needed.
    Evaluate {
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// PubTator file carrying the gold relations.
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Post-processed document results to score as well.
        #[arg(long)]
        results: Option<PathBuf>,
        /// Where to write the report; printed to stdout otherwise.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Paired t-test over per-fold scores (one number per line).
    Ttest { a: PathBuf, b: PathBuf },
    /// Export attention weights of test instances.
    Heatmap {
        #[arg(long)]
        pmid: Option<String>,
        #[arg(long)]
        chemical: Option<String>,
        #[arg(long)]
        disease: Option<String>,
        #[arg(long)]
        level: Option<Level>,
        /// Also write a grayscale SVG per instance.
        #[arg(long)]
        svg: bool,
    },
    /// Run every stage from parse to evaluate.
    Pipeline,
    /// Write a synthetic dataset and a config for it.
    Synthetic {
        #[arg(long)]
        out: PathBuf,
        /// kb-only, trigger or mixed.
        #[arg(long, default_value = "mixed")]
        task: SyntheticTask,
        #[arg(long, default_value_t = 200)]
        documents: usize,
        #[arg(long, default_value_t = 50)]
        test_documents: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Print the effective configuration.
    ShowConfig,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    // report bad overrides and bad values together
    let mut problems = Vec::new();
    for check in [config.apply(&cli.overrides), config.validate()] {
        match check {
            Ok(()) => {}
            Err(Error::Config(p)) => problems.extend(p),
            Err(e) => return Err(e),
        }
    }
    if problems.is_empty() {
        Ok(config)
    } else {
        Err(Error::Config(problems))
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn read_scores(path: &Path) -> Result<Vec<f64>> {
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            l.trim().parse().map_err(|_| Error::Format {
                line: n + 1,
                msg: format!("{}: not a number: {l:?}", path.display()),
            })
        })
        .collect()
}

fn run(cli: &Cli) -> Result<()> {
    let stage = |s: Stage| -> Result<()> { pipeline::run_stage(s, &load_config(cli)?) };
    match &cli.command {
        Command::Parse => stage(Stage::Parse),
        Command::BuildInstances => stage(Stage::BuildInstances),
        Command::ExtractTriples => stage(Stage::ExtractTriples),
        Command::TrainKge => stage(Stage::TrainKge),
        Command::TrainNam => stage(Stage::TrainNam),
        Command::Predict => stage(Stage::Predict),
        Command::Postprocess => stage(Stage::Postprocess),
        Command::Pipeline => pipeline::run_all(&load_config(cli)?),
        Command::Evaluate {
            predictions: Some(predictions),
            gold: Some(gold),
            results,
            report,
        } => {
            let docs: Vec<Document> = parse_pubtator(&read(gold)?)?;
            let preds = read_predictions(&read(predictions)?)?;
            let results = match results {
                Some(p) => Some(read_results(&read(p)?)?),
                None => None,
            };
            let text = pipeline::evaluate(&docs, &preds, results.as_deref())?;
            match report {
                Some(p) => pipeline::write_file(p, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Evaluate {
            predictions: None,
            gold: None,
            results: None,
            report: None,
        } => {
            let config = load_config(cli)?;
            pipeline::run_stage(Stage::Evaluate, &config)?;
            print!("{}", read(&pipeline::Layout::new(&config.output).report())?);
            Ok(())
        }
        Command::Evaluate { .. } => Err(Error::Config(vec![
            "evaluate takes either no file flags or both --predictions and --gold".into(),
        ])),
        Command::Ttest { a, b } => {
            let t = paired_ttest(&read_scores(a)?, &read_scores(b)?)?;
            println!("mean_diff\tt\tp");
            println!("{}\t{}\t{}", t.mean_diff, t.t, t.p_value);
            Ok(())
        }
        Command::Heatmap {
            pmid,
            chemical,
            disease,
            level,
            svg,
        } => {
            let selection = HeatmapSelection {
                pmid: pmid.clone(),
                chemical: chemical.clone(),
                disease: disease.clone(),
                level: *level,
            };
            for (path, _) in pipeline::heatmaps(&load_config(cli)?, &selection, *svg)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Synthetic {
            out,
            task,
            documents,
            test_documents,
            seed,
        } => {
            if test_documents >= documents {
                return Err(Error::Config(vec![
                    "test_documents must be smaller than documents".into(),
                ]));
            }
            let corpus = synthetic::generate(&SyntheticConfig {
                documents: *documents,
                task: *task,
                seed: *seed,
                ..SyntheticConfig::default()
            });
            synthetic::write_dataset(&corpus, out, *test_documents)
        }
        Command::ShowConfig => {
            print!("{}", load_config(cli)?.to_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
