// Copyright 2026 The rbert Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! The `rbert` command line.
//!
//! Experiments are described by a flat `key = value` config file. Training
//! keys are the [`TrainConfig`] field names; the remaining keys name the data
//! files and the synthetic-task sizes. Command-line flags override the file.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{RbertError, Result};
use crate::model::{RBertModel, Variant};
use crate::nn::checkpoint::Checkpoint;
use crate::scorer::{chance_macro_f1, format_percent, score, score_files};
use crate::semeval::{parse_dataset, render_dataset, write_predictions, DatasetFormat, LabelSpace, RelationInstance};
use crate::synth::{make_synthetic_task, SynthConfig};
use crate::tokenizer::{encode_all, EncodeOptions, EncodedExample, Vocab};
use crate::trainer::{evaluate, metrics_log, train, Profile, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "rbert", version, about = "Entity-aware relation classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Experiment config file (`key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the `variant` key (FULL, NO_SEP, NO_ENT, NO_SEP_NO_ENT).
    #[arg(long)]
    pub variant: Option<String>,
    /// Checkpoint to load (eval/predict). Overrides the `checkpoint` key.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a model; writes `model.ckpt` and `metrics.tsv` into --out.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on the test file.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write test-file predictions in `<id>\t<label>` format to --out.
    Predict {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a prediction file against an answer key.
    Score {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
    },
    /// Generate the synthetic marker task into the --out directory.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and evaluate all four variants with one seed.
    Ablate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Everything an experiment config file can set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub synth: SynthConfig,
    pub train_file: Option<PathBuf>,
    pub test_file: Option<PathBuf>,
    pub vocab_file: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parses config text. Relative paths are joined onto `base`.
    /// A `profile` key, if present, must come first since it resets the
    /// training fields to that profile's defaults.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut config = ExperimentConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| RbertError::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let path = || Some(base.join(value));
            let int = || -> Result<usize> {
                value
                    .parse()
                    .map_err(|_| RbertError::Config(format!("line {}: {key} expects an integer", n + 1)))
            };
            match key {
                "profile" => {
                    let seed = config.train.seed;
                    config.train = TrainConfig::profile(value.parse::<Profile>()?);
                    config.train.seed = seed;
                }
                "seed" => {
                    config.train.set(key, value)?;
                    config.synth.seed = config.train.seed;
                }
                "train_file" => config.train_file = path(),
                "test_file" => config.test_file = path(),
                "vocab_file" => config.vocab_file = path(),
                "checkpoint" => config.checkpoint = path(),
                "num_families" => config.synth.num_families = int()?,
                "train_size" => config.synth.train_size = int()?,
                "test_size" => config.synth.test_size = int()?,
                "words_per_family" => config.synth.words_per_family = int()?,
                "neutral_words" => config.synth.neutral_words = int()?,
                "filler_words" => config.synth.filler_words = int()?,
                "fillers_per_sentence" => config.synth.fillers_per_sentence = int()?,
                _ => config
                    .train
                    .set(key, value)
                    .map_err(|e| RbertError::Config(format!("line {}: {e}", n + 1)))?,
            }
        }
        Ok(config)
    }

    /// Loads a config file. Relative paths inside it stay relative to the
    /// working directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| RbertError::io(path, e))?;
        ExperimentConfig::parse(&text, Path::new(""))
    }

    fn resolve(common: &CommonArgs) -> Result<Self> {
        let mut config = match &common.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = common.seed {
            config.train.seed = seed;
            config.synth.seed = seed;
        }
        if let Some(v) = &common.variant {
            config.train.variant = v.parse()?;
        }
        if let Some(c) = &common.checkpoint {
            config.checkpoint = Some(c.clone());
        }
        Ok(config)
    }

    fn required(path: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
        path.clone()
            .ok_or_else(|| RbertError::Config(format!("config must set `{key}`")))
    }
}

fn read_dataset(path: &Path, format: DatasetFormat) -> Result<Vec<RelationInstance>> {
    let text = fs::read_to_string(path).map_err(|e| RbertError::io(path, e))?;
    parse_dataset(&text, format)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| RbertError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| RbertError::io(path, e))
}

fn encode_split(instances: &[RelationInstance], vocab: &Vocab, train: &TrainConfig) -> Result<Vec<EncodedExample>> {
    let mut options = EncodeOptions::new(train.max_len);
    options.markers = train.variant.uses_markers();
    encode_all(instances, vocab, &options)
}

struct Loaded {
    vocab: Vocab,
    test: Vec<RelationInstance>,
    model: RBertModel,
}

fn load_for_inference(config: &ExperimentConfig) -> Result<Loaded> {
    let vocab = Vocab::load(ExperimentConfig::required(&config.vocab_file, "vocab_file")?)?;
    let test = read_dataset(&ExperimentConfig::required(&config.test_file, "test_file")?, DatasetFormat::Test)?;
    let checkpoint = Checkpoint::load(ExperimentConfig::required(&config.checkpoint, "checkpoint")?)?;
    let model = RBertModel::from_checkpoint(&checkpoint)?;
    Ok(Loaded { vocab, test, model })
}

fn inference_config(config: &ExperimentConfig, model: &RBertModel) -> TrainConfig {
    TrainConfig {
        max_len: model.config.max_positions,
        variant: model.config.variant,
        ..config.train
    }
}

fn run_train(common: &CommonArgs, out: &Path, stdout: &mut dyn Write) -> Result<()> {
    let config = ExperimentConfig::resolve(common)?;
    let train_set = read_dataset(&ExperimentConfig::required(&config.train_file, "train_file")?, DatasetFormat::Train)?;
    let vocab = Vocab::load(ExperimentConfig::required(&config.vocab_file, "vocab_file")?)?;
    let encoded = encode_split(&train_set, &vocab, &config.train)?;
    let output = train(&encoded, &config.train, vocab.len(), LabelSpace::semeval().len(), vocab.pad_id())?;

    fs::create_dir_all(out).map_err(|e| RbertError::io(out, e))?;
    output.model.checkpoint().save(out.join("model.ckpt"))?;
    let log = metrics_log(&config.train, &output.adam, &output.metrics);
    write_file(&out.join("metrics.tsv"), &log)?;
    if let Some(last) = output.metrics.last() {
        let _ = writeln!(stdout, "final epoch\t{last}");
    }
    let _ = writeln!(stdout, "wrote {}", out.join("model.ckpt").display());
    Ok(())
}

fn run_eval(common: &CommonArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = ExperimentConfig::resolve(common)?;
    let loaded = load_for_inference(&config)?;
    let train_config = inference_config(&config, &loaded.model);
    let encoded = encode_split(&loaded.test, &loaded.vocab, &train_config)?;
    let eval = evaluate(&encoded, &loaded.model, train_config.batch_size, loaded.vocab.pad_id())?;
    let gold: Vec<_> = loaded.test.iter().map(|i| (i.id, i.label)).collect();
    let report = score(&gold, &eval.predictions)?;
    let _ = writeln!(stdout, "accuracy: {:.4}", eval.accuracy);
    let _ = write!(stdout, "{}", report.render());
    Ok(())
}

fn run_predict(common: &CommonArgs, out: &Path, stdout: &mut dyn Write) -> Result<()> {
    let config = ExperimentConfig::resolve(common)?;
    let loaded = load_for_inference(&config)?;
    let train_config = inference_config(&config, &loaded.model);
    let encoded = encode_split(&loaded.test, &loaded.vocab, &train_config)?;
    let eval = evaluate(&encoded, &loaded.model, train_config.batch_size, loaded.vocab.pad_id())?;
    write_file(out, write_predictions(&eval.predictions)?)?;
    let _ = writeln!(stdout, "wrote {} predictions to {}", eval.predictions.len(), out.display());
    Ok(())
}

fn answer_key(instances: &[RelationInstance]) -> Result<String> {
    let gold: Vec<_> = instances.iter().map(|i| (i.id, i.label)).collect();
    write_predictions(&gold)
}

fn run_synth(common: &CommonArgs, out: &Path, stdout: &mut dyn Write) -> Result<()> {
    let config = ExperimentConfig::resolve(common)?;
    let (train_set, test_set) = make_synthetic_task(&config.synth)?;
    write_file(&out.join("train.txt"), render_dataset(&train_set))?;
    write_file(&out.join("test.txt"), render_dataset(&test_set))?;
    write_file(&out.join("test_key.txt"), answer_key(&test_set)?)?;
    write_file(&out.join("vocab.txt"), config.synth.vocab().to_file_contents())?;
    let _ = writeln!(
        stdout,
        "wrote {} train and {} test instances to {}",
        train_set.len(),
        test_set.len(),
        out.display()
    );
    Ok(())
}

/// One row of an ablation table.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub variant: Variant,
    pub macro_f1: f64,
    pub chance_f1: f64,
    pub accuracy: f64,
}

/// Trains and evaluates every variant on the same data and seed. Rows come
/// back in the order R-BERT-NO-SEP-NO-ENT, R-BERT-NO-SEP, R-BERT-NO-ENT, R-BERT.
pub fn ablate(
    train_set: &[RelationInstance],
    test_set: &[RelationInstance],
    vocab: &Vocab,
    base: &TrainConfig,
) -> Result<Vec<AblationRow>> {
    let order = [Variant::NoSepNoEnt, Variant::NoSep, Variant::NoEnt, Variant::Full];
    let gold: Vec<_> = test_set.iter().map(|i| (i.id, i.label)).collect();
    let gold_labels: Vec<_> = test_set.iter().map(|i| i.label).collect();
    order
        .iter()
        .map(|&variant| {
            let config = TrainConfig { variant, ..*base };
            let train_enc = encode_split(train_set, vocab, &config)?;
            let test_enc = encode_split(test_set, vocab, &config)?;
            let output = train(&train_enc, &config, vocab.len(), LabelSpace::semeval().len(), vocab.pad_id())?;
            let eval = evaluate(&test_enc, &output.model, config.batch_size, vocab.pad_id())?;
            let pred_labels: Vec<_> = eval.predictions.iter().map(|(_, l)| *l).collect();
            Ok(AblationRow {
                variant,
                macro_f1: score(&gold, &eval.predictions)?.macro_f1,
                chance_f1: chance_macro_f1(&gold_labels, &pred_labels),
                accuracy: eval.accuracy,
            })
        })
        .collect()
}

pub fn render_ablation(rows: &[AblationRow]) -> String {
    let mut out = String::from("Method\tF1\tchance F1\taccuracy\n");
    for row in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.4}\n",
            row.variant.display_name(),
            format_percent(row.macro_f1),
            format_percent(row.chance_f1),
            row.accuracy
        ));
    }
    out
}

fn run_ablate(common: &CommonArgs, out: &Path, stdout: &mut dyn Write) -> Result<()> {
    let config = ExperimentConfig::resolve(common)?;
    let vocab = Vocab::load(ExperimentConfig::required(&config.vocab_file, "vocab_file")?)?;
    let train_set = read_dataset(&ExperimentConfig::required(&config.train_file, "train_file")?, DatasetFormat::Train)?;
    let test_set = read_dataset(&ExperimentConfig::required(&config.test_file, "test_file")?, DatasetFormat::Test)?;
    let rows = ablate(&train_set, &test_set, &vocab, &config.train)?;
    let table = render_ablation(&rows);
    fs::create_dir_all(out).map_err(|e| RbertError::io(out, e))?;
    write_file(&out.join("ablation.tsv"), &table)?;
    let _ = write!(stdout, "{table}");
    Ok(())
}

/// Exit code for an error, per the documented convention.
pub fn exit_code(err: &RbertError) -> i32 {
    match err {
        RbertError::NonFinite(_) => EXIT_NUMERIC,
        RbertError::Config(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Train { common, out } => run_train(common, out, stdout),
        Command::Eval { common } => run_eval(common, stdout),
        Command::Predict { common, out } => run_predict(common, out, stdout),
        Command::Score { gold, pred } => score_files(gold, pred).map(|report| {
            let _ = write!(stdout, "{report}");
        }),
        Command::Synth { common, out } => run_synth(common, out, stdout),
        Command::Ablate { common, out } => run_ablate(common, out, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let text = "profile = scratch\n# comment\nseed = 7\nepochs = 3\nvariant = NO_ENT\ntrain_file = data/train.txt\nnum_families = 4\n";
        let c = ExperimentConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(c.train.seed, 7);
        assert_eq!(c.synth.seed, 7);
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.variant, Variant::NoEnt);
        assert_eq!(c.train_file, Some(PathBuf::from("/base/data/train.txt")));
        assert_eq!(c.synth.num_families, 4);
        assert!(ExperimentConfig::parse("bogus = 1\n", Path::new(".")).is_err());
        assert!(ExperimentConfig::parse("just words\n", Path::new(".")).is_err());
        let f = ExperimentConfig::parse("profile = finetune\n", Path::new(".")).unwrap();
        assert_eq!(f.train, TrainConfig { seed: f.train.seed, ..TrainConfig::finetune() });
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["rbert"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(run(["rbert", "frobnicate"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(run(["rbert", "score", "--gold", "x"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(run(["rbert", "--help"], &mut out, &mut err), EXIT_OK);
    }

    #[test]
    fn ablation_table_layout() {
        let rows: Vec<_> = [Variant::NoSepNoEnt, Variant::NoSep, Variant::NoEnt, Variant::Full]
            .iter()
            .map(|&variant| AblationRow { variant, macro_f1: 50.0, chance_f1: 7.5, accuracy: 0.5 })
            .collect();
        let table = render_ablation(&rows);
        let names: Vec<&str> = table.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
        assert_eq!(names, ["R-BERT-NO-SEP-NO-ENT", "R-BERT-NO-SEP", "R-BERT-NO-ENT", "R-BERT"]);
    }
}
