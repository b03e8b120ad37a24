use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use elball::checkpoint::{export_2d, Checkpoint};
use elball::eval::{ranking_report, EmbeddingScorer};
use elball::geometry::{check_model_with, Nf2Criterion};
use elball::ingest::{self, IngestConfig};
use elball::normalizer::{normalize_ontology, NormalizedTheory};
use elball::ontology::Ontology;
use elball::semsim::{Measure, SemsimScorer, TaxonomyIndex};
use elball::synth::{self, SynthConfig};
use elball::trainer::{train_with_callback, NegMode, TrainConfig};

/// Train, check and evaluate n-ball embeddings of EL++ ontologies.
#[derive(Parser)]
#[command(name = "elball", version)]
struct Cli {
    /// Seed for every random choice (initialization, sampling, splits).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Run on a single worker thread.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rewrite an ontology into normal-form buckets.
    Normalize {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit an embedding and write a checkpoint.
    Train(TrainArgs),
    /// Check whether a checkpoint is a model of a theory; exits 1 when not.
    Check {
        #[arg(long)]
        theory: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Nf2Arg::Exact)]
        nf2: Nf2Arg,
    },
    /// Rank held-out links with a trained checkpoint.
    Evaluate {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long, default_value = ingest::INTERACTS)]
        relation: String,
        /// Margin for scoring; defaults to the checkpoint's.
        #[arg(long, allow_hyphen_values = true)]
        margin: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Annotation-based similarity scores, or a ranking report with --split.
    Semsim {
        /// Ontology whose subclass axioms form the hierarchy.
        #[arg(long)]
        taxonomy: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        /// Entity pairs to score, one `e1 \t e2` per line.
        #[arg(long, required_unless_present = "split")]
        pairs: Option<PathBuf>,
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long, default_value = ingest::INTERACTS)]
        relation: String,
        #[arg(long, value_enum, default_value_t = Measure::Resnik)]
        measure: Measure,
        #[arg(long, value_enum, default_value_t = Combine::Bma)]
        combine: Combine,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn interaction and annotation tables into axioms and a split.
    Ingest {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long, default_value_t = 700.0)]
        min_confidence: f64,
        /// Assert each interaction in both directions.
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        symmetric: bool,
        /// Extra axioms (e.g. a function hierarchy) appended to the output.
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long)]
        out_ontology: PathBuf,
        #[arg(long)]
        out_split: PathBuf,
    },
    /// Plot table (`class x y r`) of a 2-dimensional checkpoint.
    Export2d {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic interaction dataset.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        entities: usize,
        #[arg(long, default_value_t = 8)]
        groups: usize,
        /// Interaction probability within a group.
        #[arg(long)]
        p_within: Option<f64>,
        /// Interaction probability across groups.
        #[arg(long)]
        p_across: Option<f64>,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    theory: PathBuf,
    #[arg(long, default_value_t = 50)]
    dim: usize,
    #[arg(long, default_value_t = -0.1, allow_hyphen_values = true)]
    margin: f64,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 256)]
    batch: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 1)]
    neg_per_pos: usize,
    #[arg(long, default_value_t = 1)]
    steps_per_epoch: usize,
    /// `static` draws negatives once; `fresh` redraws them every epoch.
    #[arg(long, value_enum, default_value_t = NegMode::Static)]
    neg_mode: NegMode,
    /// Record the full-theory loss every N epochs.
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the loss trace as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Nf2Arg {
    Exact,
    LossTerms,
}

#[derive(Clone, Copy, ValueEnum)]
enum Combine {
    Bma,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_theory(path: &Path) -> Result<NormalizedTheory> {
    let onto = Ontology::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok(normalize_ontology(&onto)?)
}

fn configure_threads(deterministic: bool) -> Result<()> {
    let cap = match std::env::var("ELBALL_THREADS") {
        Ok(v) => Some(
            v.parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .with_context(|| format!("ELBALL_THREADS must be a positive integer, got `{v}`"))?,
        ),
        Err(_) => None,
    };
    let threads = if deterministic { Some(1) } else { cap };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads(cli.deterministic)?;
    match cli.command {
        Command::Normalize { input, out } => {
            let t = load_theory(&input)?;
            write_or_print(out.as_deref(), &t.to_text())?;
        }
        Command::Train(a) => {
            let t = load_theory(&a.theory)?;
            let cfg = TrainConfig {
                dim: a.dim,
                margin: a.margin,
                epochs: a.epochs,
                batch_size: a.batch,
                learning_rate: a.lr,
                seed: cli.seed,
                negatives_per_positive: a.neg_per_pos,
                steps_per_epoch: a.steps_per_epoch,
                neg_mode: a.neg_mode,
                eval_every: a.eval_every,
                ..TrainConfig::default()
            };
            let report_every = (cfg.epochs / 10).max(1);
            let (e, trace) = train_with_callback(&t, &cfg, |epoch, loss| {
                if (epoch + 1) % report_every == 0 {
                    info!("epoch {}: loss {loss:.6}", epoch + 1);
                }
            })?;
            Checkpoint::new(e, &cfg, &trace).save(&a.out)?;
            if let Some(p) = a.trace {
                fs::write(&p, serde_json::to_string_pretty(&trace)?)
                    .with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Command::Check { theory, ckpt, tol, nf2 } => {
            let t = load_theory(&theory)?;
            let ck = Checkpoint::load(&ckpt, None)?;
            let nf2 = match nf2 {
                Nf2Arg::Exact => Nf2Criterion::Exact,
                Nf2Arg::LossTerms => Nf2Criterion::LossTerms,
            };
            let report = check_model_with(&t, &ck.embedding, tol, nf2)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if !report.overall {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Evaluate { ckpt, split, relation, margin, out } => {
            let ck = Checkpoint::load(&ckpt, None)?;
            let split = ingest::read_split(&split)?;
            let scorer = EmbeddingScorer::new(&ck.embedding, margin.unwrap_or(ck.margin));
            let report = ranking_report(&split, &scorer, &relation)?;
            write_or_print(out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
        }
        Command::Semsim {
            taxonomy,
            annotations,
            pairs,
            split,
            relation,
            measure,
            combine: Combine::Bma,
            out,
        } => {
            let t = load_theory(&taxonomy)?;
            let ann = ingest::parse_annotations(&annotations.display().to_string(), &read(&annotations)?)?;
            let index = TaxonomyIndex::from_theory(&t, &ann)?;
            let text = if let Some(dir) = split {
                let split = ingest::read_split(&dir)?;
                let scorer = SemsimScorer { taxonomy: &index, measure, strip_braces: true };
                serde_json::to_string_pretty(&ranking_report(&split, &scorer, &relation)?)? + "\n"
            } else {
                let path = pairs.expect("clap requires --pairs without --split");
                let mut text = String::new();
                for (i, line) in read(&path)?.lines().enumerate() {
                    let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
                    if line.trim().is_empty() || line.starts_with('#') {
                        continue;
                    }
                    if cols.len() < 2 {
                        bail!("{}:{}: expected two entities", path.display(), i + 1);
                    }
                    let s = index
                        .bma_similarity(cols[0], cols[1], measure)
                        .unwrap_or(f64::NEG_INFINITY);
                    text.push_str(&format!("{}\t{}\t{s}\n", cols[0], cols[1]));
                }
                text
            };
            write_or_print(out.as_deref(), &text)?;
        }
        Command::Ingest {
            pairs,
            annotations,
            min_confidence,
            symmetric,
            taxonomy,
            out_ontology,
            out_split,
        } => {
            let cfg = IngestConfig { min_confidence, symmetric, seed: cli.seed };
            let (mut onto, split) = ingest::ingest_files(&pairs, &annotations, &cfg)?;
            if let Some(p) = taxonomy {
                onto.extend_from_text(&read(&p)?)
                    .with_context(|| format!("parsing {}", p.display()))?;
            }
            fs::write(&out_ontology, onto.to_text())
                .with_context(|| format!("writing {}", out_ontology.display()))?;
            ingest::write_split(&out_split, &split)?;
            info!(
                "{} axioms; split {}/{}/{}",
                onto.axioms.len(),
                split.train.len(),
                split.valid.len(),
                split.test.len()
            );
        }
        Command::Export2d { ckpt, out } => {
            let ck = Checkpoint::load(&ckpt, Some(2))?;
            write_or_print(out.as_deref(), &export_2d(&ck.embedding)?)?;
        }
        Command::Synth { out, entities, groups, p_within, p_across } => {
            let base = SynthConfig::default();
            let d = synth::generate(&SynthConfig {
                entities,
                groups,
                p_within: p_within.unwrap_or(base.p_within),
                p_across: p_across.unwrap_or(base.p_across),
                seed: cli.seed,
                ..base
            });
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for (name, text) in [
                ("pairs.tsv", &d.pairs_tsv),
                ("annotations.tsv", &d.annotations_tsv),
                ("taxonomy.el", &d.taxonomy),
            ] {
                let p = out.join(name);
                fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
