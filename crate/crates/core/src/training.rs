//! Training loop, feature ablations, early stopping and checkpointing.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::autodiff::{Adam, AdamConfig, AutodiffError, Gradients, Graph};
use crate::corpus::{EmbeddingTable, Example, VocabSet};
use crate::decoder::DecoderError;
use crate::encoders::{EncoderConfig, EncoderError, EncoderKind, FeatureMask, POSITIONAL_BASE};
use crate::evaluator::{render_table, score, AlignConfig, Evaluation, Lexicon, ScoreReport};
use crate::model::{targets, ModelConfig, Parser};
use crate::stages::StageTargets;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    ConfigError(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Model(DecoderError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl From<DecoderError> for TrainError {
    fn from(e: DecoderError) -> Self {
        match e {
            DecoderError::Autodiff(AutodiffError::NumericError(m)) => TrainError::Numeric(m),
            DecoderError::Encoder(EncoderError::Autodiff(AutodiffError::NumericError(m))) => TrainError::Numeric(m),
            DecoderError::Encoder(EncoderError::UnsupportedFeatureCombination(m)) => TrainError::ConfigError(m),
            other => TrainError::Model(other),
        }
    }
}

/// Dev metric used to pick the best epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    F1,
    Loss,
}

impl FromStr for Selection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "f1" => Ok(Selection::F1),
            "loss" => Ok(Selection::Loss),
            other => Err(format!("unknown selection metric `{other}`")),
        }
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Selection::F1 => "f1",
            Selection::Loss => "loss",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub encoder: EncoderKind,
    pub features: FeatureMask,
    pub word_dim: usize,
    pub upos_dim: usize,
    pub deprel_dim: usize,
    pub hidden: usize,
    pub positional_base: f64,
    pub decoder_hidden: usize,
    pub decoder_embed: usize,
    pub lr: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub batch_size: usize,
    pub clip: f64,
    pub selection: Selection,
    /// Stop as soon as dev F1 reaches this value.
    pub target_f1: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            encoder: EncoderKind::Bi,
            features: FeatureMask::ALL,
            word_dim: 300,
            upos_dim: 64,
            deprel_dim: 64,
            hidden: 300,
            positional_base: POSITIONAL_BASE,
            decoder_hidden: 300,
            decoder_embed: 64,
            lr: 1e-3,
            max_epochs: 30,
            patience: 5,
            seed: 1,
            batch_size: 16,
            clip: 5.0,
            selection: Selection::F1,
            target_f1: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, TrainError>
where
    T::Err: fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| TrainError::ConfigError(format!("`{key}`: {e}")))
}

impl TrainConfig {
    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            encoder: EncoderConfig {
                kind: self.encoder,
                features: self.features,
                word_dim: self.word_dim,
                upos_dim: self.upos_dim,
                deprel_dim: self.deprel_dim,
                hidden: self.hidden,
                positional_base: self.positional_base,
            },
            decoder_hidden: self.decoder_hidden,
            decoder_embed: self.decoder_embed,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.encoder == EncoderKind::BiTree && self.features == (FeatureMask { we: false, pe: false, de: true }) {
            return Err(TrainError::ConfigError(
                "Bi/tree cannot be used with dependency features only (DE): its BiLSTM has no input".into(),
            ));
        }
        let dims = [
            ("word_dim", self.word_dim),
            ("upos_dim", self.upos_dim),
            ("deprel_dim", self.deprel_dim),
            ("hidden", self.hidden),
            ("decoder_hidden", self.decoder_hidden),
            ("decoder_embed", self.decoder_embed),
            ("batch_size", self.batch_size),
            ("max_epochs", self.max_epochs),
            ("patience", self.patience),
        ];
        if let Some((k, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(TrainError::ConfigError(format!("`{k}` must be positive")));
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.lr) || !positive(self.clip) || !positive(self.positional_base) {
            return Err(TrainError::ConfigError("lr, clip and positional_base must be positive".into()));
        }
        self.model()
            .encoder
            .validate()
            .map_err(|e| TrainError::ConfigError(e.to_string()))
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), TrainError> {
        match key {
            "encoder" => self.encoder = parse_value(key, v)?,
            "features" => self.features = parse_value(key, v)?,
            "word_dim" => self.word_dim = parse_value(key, v)?,
            "upos_dim" => self.upos_dim = parse_value(key, v)?,
            "deprel_dim" => self.deprel_dim = parse_value(key, v)?,
            "hidden" => self.hidden = parse_value(key, v)?,
            "positional_base" => self.positional_base = parse_value(key, v)?,
            "decoder_hidden" => self.decoder_hidden = parse_value(key, v)?,
            "decoder_embed" => self.decoder_embed = parse_value(key, v)?,
            "lr" => self.lr = parse_value(key, v)?,
            "max_epochs" | "epochs" => self.max_epochs = parse_value(key, v)?,
            "patience" => self.patience = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "batch_size" => self.batch_size = parse_value(key, v)?,
            "clip" => self.clip = parse_value(key, v)?,
            "selection" => self.selection = parse_value(key, v)?,
            "target_f1" => {
                self.target_f1 = match v {
                    "none" | "" => None,
                    _ => Some(parse_value(key, v)?),
                }
            }
            other => return Err(TrainError::ConfigError(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, TrainError> {
        let mut c = TrainConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| TrainError::ConfigError(format!("line {}: expected `key = value`", n + 1)))?;
            c.set(k.trim(), v.trim())?;
        }
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let target = self.target_f1.map_or("none".to_string(), |t| t.to_string());
        format!(
            "encoder = {}\nfeatures = {}\nword_dim = {}\nupos_dim = {}\ndeprel_dim = {}\nhidden = {}\n\
             positional_base = {}\ndecoder_hidden = {}\ndecoder_embed = {}\nlr = {}\nmax_epochs = {}\n\
             patience = {}\nseed = {}\nbatch_size = {}\nclip = {}\nselection = {}\ntarget_f1 = {}\n",
            self.encoder,
            self.features,
            self.word_dim,
            self.upos_dim,
            self.deprel_dim,
            self.hidden,
            self.positional_base,
            self.decoder_hidden,
            self.decoder_embed,
            self.lr,
            self.max_epochs,
            self.patience,
            self.seed,
            self.batch_size,
            self.clip,
            self.selection,
            target,
        )
    }

    /// SHA-256 of the canonical text form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: f64,
    pub dev: ScoreReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub epochs: Vec<EpochStats>,
    /// 1-based.
    pub best_epoch: usize,
    pub checkpoint: Option<PathBuf>,
}

impl TrainReport {
    pub fn best(&self) -> &EpochStats {
        &self.epochs[self.best_epoch - 1]
    }
}

/// Everything a run reads.
#[derive(Debug, Clone, Copy)]
pub struct TrainData<'a> {
    pub train: &'a [Example],
    pub dev: &'a [Example],
    pub vocab: &'a VocabSet,
    pub embeddings: Option<&'a EmbeddingTable>,
    pub lexicon: &'a Lexicon,
}

fn gold_targets(examples: &[Example]) -> Result<Vec<StageTargets>, TrainError> {
    examples
        .iter()
        .map(|e| targets(&e.drs).map_err(|err| TrainError::Data(format!("{}/{}: {err}", e.lang, e.id))))
        .collect()
}

/// Parses every example in parallel and scores against gold.
pub fn evaluate(parser: &Parser, examples: &[Example], lexicon: &Lexicon) -> Result<Evaluation, TrainError> {
    let cfg = AlignConfig::default();
    let scores = examples
        .par_iter()
        .map(|e| {
            let out = parser.parse(&e.annotation)?;
            Ok(score(&out.drs, &e.drs, lexicon, &cfg))
        })
        .collect::<Result<Vec<_>, TrainError>>()?;
    Ok(scores.iter().fold(Evaluation::default(), |mut acc, e| {
        acc.merge(e);
        acc
    }))
}

fn mean_loss(parser: &Parser, examples: &[Example], gold: &[StageTargets]) -> Result<f64, TrainError> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let losses = examples
        .par_iter()
        .zip(gold)
        .map(|(e, t)| {
            let mut g = Graph::new(&parser.store);
            let l = parser.loss(&mut g, &e.annotation, t)?;
            Ok(g.value(l.total).item())
        })
        .collect::<Result<Vec<f64>, TrainError>>()?;
    Ok(losses.iter().sum::<f64>() / examples.len() as f64)
}

fn improves(sel: Selection, candidate: &EpochStats, best: &EpochStats) -> bool {
    match sel {
        Selection::F1 => candidate.dev.f1() > best.dev.f1(),
        Selection::Loss => candidate.dev_loss < best.dev_loss,
    }
}

/// Trains one model. Returns the report and the best parser; with
/// `checkpoint`, the best parser is also written there.
pub fn train(config: &TrainConfig, data: TrainData<'_>, checkpoint: Option<&Path>) -> Result<(TrainReport, Parser), TrainError> {
    config.validate()?;
    if data.train.is_empty() {
        return Err(TrainError::Data("empty training split".into()));
    }
    let dev = if data.dev.is_empty() { data.train } else { data.dev };
    let train_gold = gold_targets(data.train)?;
    let dev_gold = gold_targets(dev)?;

    let mut parser = Parser::new(config.model(), data.vocab.clone(), data.embeddings, config.seed)?;
    let mut adam = Adam::new(AdamConfig {
        lr: config.lr,
        ..AdamConfig::default()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9e37_79b9));
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut epochs: Vec<EpochStats> = Vec::new();
    let mut best: Option<(usize, crate::autodiff::ParamStore)> = None;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let results = batch
                .par_iter()
                .map(|&i| parser.gradients(&data.train[i].annotation, &train_gold[i]))
                .collect::<Result<Vec<(f64, Gradients)>, DecoderError>>()?;
            let mut iter = results.into_iter();
            let (first_loss, mut grads) = iter.next().expect("non-empty batch");
            total += first_loss;
            for (l, g) in iter {
                total += l;
                grads.accumulate(&g);
            }
            grads.scale(1.0 / batch.len() as f64);
            if !grads.is_finite() {
                return Err(TrainError::Numeric(format!("non-finite gradient in epoch {epoch}")));
            }
            grads.clip_norm(config.clip);
            adam.step(&mut parser.store, &grads);
            if !parser.store.all_finite() {
                return Err(TrainError::Numeric(format!("non-finite parameter in epoch {epoch}")));
            }
        }
        let dev_eval = evaluate(&parser, dev, data.lexicon)?;
        let stats = EpochStats {
            epoch,
            train_loss: total / data.train.len() as f64,
            dev_loss: mean_loss(&parser, dev, &dev_gold)?,
            dev: dev_eval.overall,
        };
        log::info!(
            "epoch {epoch}: loss {:.4} dev F1 {:.4}",
            stats.train_loss,
            stats.dev.f1()
        );
        let better = best.as_ref().is_none_or(|(b, _)| improves(config.selection, &stats, &epochs[*b - 1]));
        let reached = config.target_f1.is_some_and(|t| stats.dev.f1() >= t);
        epochs.push(stats);
        if better {
            best = Some((epoch, parser.store.clone()));
        }
        let best_epoch = best.as_ref().map_or(epoch, |b| b.0);
        if reached || epoch - best_epoch >= config.patience {
            break;
        }
    }

    let (best_epoch, store) = best.expect("at least one epoch");
    parser.store = store;
    if let Some(path) = checkpoint {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| TrainError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
        }
        parser
            .save(path, json!({ "train_config": config, "best_epoch": best_epoch }))
            .map_err(|e| TrainError::Model(e.into()))?;
    }
    Ok((
        TrainReport {
            config: *config,
            epochs,
            best_epoch,
            checkpoint: checkpoint.map(Path::to_path_buf),
        },
        parser,
    ))
}

/// The four feature sets of the ablation table, in row order.
pub const TABLE_FEATURES: [FeatureMask; 4] = [
    FeatureMask { we: true, pe: true, de: false },
    FeatureMask { we: true, pe: true, de: true },
    FeatureMask { we: false, pe: false, de: true },
    FeatureMask { we: true, pe: false, de: true },
];

/// Cells to run. The full matrix silently skips the invalid cell; an
/// explicit cell list containing it is a configuration error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AblationRequest {
    Full,
    Cells(Vec<(EncoderKind, FeatureMask)>),
}

pub fn ablation_cells(request: &AblationRequest, base: &TrainConfig) -> Result<Vec<(EncoderKind, FeatureMask)>, TrainError> {
    let cell_config = |kind, features| TrainConfig {
        encoder: kind,
        features,
        ..*base
    };
    match request {
        AblationRequest::Full => Ok(EncoderKind::ALL
            .iter()
            .flat_map(|&k| TABLE_FEATURES.iter().map(move |&f| (k, f)))
            .filter(|&(k, f)| cell_config(k, f).validate().is_ok())
            .collect()),
        AblationRequest::Cells(cells) => {
            for &(k, f) in cells {
                cell_config(k, f).validate()?;
            }
            Ok(cells.clone())
        }
    }
}

/// One trained cell with its test scores per language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub encoder: EncoderKind,
    pub features: FeatureMask,
    pub report: TrainReport,
    pub test: BTreeMap<String, Evaluation>,
}

impl AblationResult {
    pub fn name(&self) -> String {
        cell_name(self.encoder, self.features)
    }
}

pub fn cell_name(kind: EncoderKind, features: FeatureMask) -> String {
    format!("{}_{{{}}}", kind.display_name(), features)
}

/// Trains every requested cell independently (in parallel) and scores each
/// on the test sets. Checkpoints go to `out_dir/<encoder>_<features>.ckpt`.
pub fn run_ablation_matrix(
    base: &TrainConfig,
    request: &AblationRequest,
    data: TrainData<'_>,
    test: &BTreeMap<String, Vec<Example>>,
    out_dir: Option<&Path>,
) -> Result<Vec<AblationResult>, TrainError> {
    let cells = ablation_cells(request, base)?;
    cells
        .par_iter()
        .map(|&(encoder, features)| {
            let config = TrainConfig {
                encoder,
                features,
                ..*base
            };
            let path = out_dir.map(|d| d.join(format!("{}_{}.ckpt", encoder.name(), features.to_string().replace(',', "").to_lowercase())));
            let (report, parser) = train(&config, data, path.as_deref())?;
            let test = test
                .iter()
                .map(|(lang, ex)| Ok((lang.clone(), evaluate(&parser, ex, data.lexicon)?)))
                .collect::<Result<_, TrainError>>()?;
            Ok(AblationResult {
                encoder,
                features,
                report,
                test,
            })
        })
        .collect()
}

/// Table with one row per (encoder, feature set) and P/R/F per language;
/// cells that were not run show `--`.
pub fn ablation_table(results: &[AblationResult], languages: &[String]) -> String {
    let mut rows = Vec::new();
    for kind in EncoderKind::ALL {
        for features in TABLE_FEATURES {
            let hit = results.iter().find(|r| r.encoder == kind && r.features == features);
            if hit.is_none() && !results.iter().any(|r| r.encoder == kind) {
                continue;
            }
            let cells = languages
                .iter()
                .map(|l| hit.and_then(|r| r.test.get(l)).map(|e| e.overall))
                .collect();
            rows.push((cell_name(kind, features), cells));
        }
    }
    render_table("Model", &rows, languages)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocab;
    use crate::drs::NonLexical;
    use crate::synth::synthetic_corpus;

    fn tiny() -> TrainConfig {
        TrainConfig {
            word_dim: 8,
            upos_dim: 8,
            deprel_dim: 8,
            hidden: 8,
            decoder_hidden: 8,
            decoder_embed: 6,
            max_epochs: 2,
            batch_size: 4,
            ..TrainConfig::default()
        }
    }

    struct Fixture {
        examples: Vec<Example>,
        vocab: VocabSet,
        lexicon: Lexicon,
        embeddings: EmbeddingTable,
    }

    fn fixture(n: usize) -> Fixture {
        let c = synthetic_corpus(n, n, 0, 0, 3, 8);
        let examples: Vec<Example> = c.examples.into_iter().map(|(e, _)| e).collect();
        let vocab = build_vocab(examples.iter().map(|e| (&e.annotation, &e.drs)), 1).unwrap();
        let lexicon = Lexicon::new(NonLexical::default(), examples.iter().flat_map(|e| e.annotation.lemmas.clone()));
        Fixture {
            examples,
            vocab,
            lexicon,
            embeddings: c.embeddings,
        }
    }

    fn data(f: &Fixture, pretrained: bool) -> TrainData<'_> {
        TrainData {
            train: &f.examples,
            dev: &f.examples,
            vocab: &f.vocab,
            embeddings: pretrained.then_some(&f.embeddings),
            lexicon: &f.lexicon,
        }
    }

    #[test]
    fn bi_tree_with_dependency_features_only_is_rejected() {
        let c = TrainConfig {
            encoder: EncoderKind::BiTree,
            features: "de".parse().unwrap(),
            ..tiny()
        };
        assert!(matches!(c.validate(), Err(TrainError::ConfigError(_))));
        let f = fixture(4);
        assert!(matches!(train(&c, data(&f, false), None), Err(TrainError::ConfigError(_))));
    }

    #[test]
    fn config_text_round_trips_and_rejects_bad_input() {
        let c = TrainConfig {
            target_f1: Some(0.95),
            ..tiny()
        };
        let back = TrainConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        let parsed = TrainConfig::parse("# comment\nencoder = po_tree\nfeatures = WE,DE\npatience = 2\n").unwrap();
        assert_eq!(parsed.encoder, EncoderKind::PoTree);
        assert_eq!(parsed.features, "we,de".parse().unwrap());
        assert_eq!(parsed.patience, 2);
        assert_eq!(parsed.hidden, 300);
        assert!(TrainConfig::parse("bogus = 1").is_err());
        assert!(TrainConfig::parse("hidden").is_err());
        assert!(TrainConfig::parse("patience = 0").unwrap().validate().is_err());
    }

    #[test]
    fn same_seed_gives_identical_losses() {
        let f = fixture(6);
        let (a, _) = train(&tiny(), data(&f, false), None).unwrap();
        let (b, _) = train(&tiny(), data(&f, false), None).unwrap();
        let la: Vec<u64> = a.epochs.iter().map(|e| e.train_loss.to_bits()).collect();
        let lb: Vec<u64> = b.epochs.iter().map(|e| e.train_loss.to_bits()).collect();
        assert_eq!(la, lb);
        let (c, _) = train(&TrainConfig { seed: 2, ..tiny() }, data(&f, false), None).unwrap();
        assert_ne!(c.epochs[0].train_loss.to_bits(), la[0]);
    }

    #[test]
    fn frozen_word_table_is_untouched() {
        let f = fixture(6);
        let before = Parser::new(tiny().model(), f.vocab.clone(), Some(&f.embeddings), tiny().seed).unwrap();
        let id = before.store.get("enc.emb.words").unwrap();
        let (_, after) = train(&tiny(), data(&f, true), None).unwrap();
        let bytes = |p: &Parser| -> Vec<u8> {
            p.store.value(id).data().iter().flat_map(|x| x.to_le_bytes()).collect()
        };
        assert_eq!(bytes(&before), bytes(&after));
        let other = before.store.get("enc.emb.upos").unwrap();
        assert_ne!(before.store.value(other), after.store.value(other));
    }

    #[test]
    fn best_epoch_is_earliest_argmax_and_checkpoint_reloads() {
        let f = fixture(6);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("best.ckpt");
        let cfg = TrainConfig {
            max_epochs: 4,
            patience: 4,
            ..tiny()
        };
        let (report, parser) = train(&cfg, data(&f, false), Some(&path)).unwrap();
        let best_f1 = report.epochs.iter().map(|e| e.dev.f1()).fold(f64::MIN, f64::max);
        let first = report.epochs.iter().position(|e| e.dev.f1() == best_f1).unwrap() + 1;
        assert_eq!(report.best_epoch, first);
        let (loaded, extra) = Parser::load(&path).unwrap();
        assert_eq!(extra["best_epoch"], report.best_epoch);
        let rescored = evaluate(&loaded, &f.examples, &f.lexicon).unwrap();
        assert_eq!(rescored.overall, report.best().dev);
        assert_eq!(
            evaluate(&parser, &f.examples, &f.lexicon).unwrap().overall,
            report.best().dev
        );
    }

    #[test]
    fn patience_stops_early() {
        let f = fixture(4);
        let cfg = TrainConfig {
            max_epochs: 50,
            patience: 1,
            lr: 1e-9,
            ..tiny()
        };
        let (report, _) = train(&cfg, data(&f, false), None).unwrap();
        assert!(report.epochs.len() < 50);
        assert_eq!(report.epochs.len(), report.best_epoch + 1);
    }

    #[test]
    fn nan_loss_fails_immediately() {
        let f = fixture(4);
        let mut parser = Parser::new(tiny().model(), f.vocab.clone(), None, 1).unwrap();
        let id = parser.store.get("dec.init.w").unwrap();
        parser.store.value_mut(id).data_mut().fill(f64::NAN);
        let gold = targets(&f.examples[0].drs).unwrap();
        let err = TrainError::from(parser.gradients(&f.examples[0].annotation, &gold).unwrap_err());
        assert!(matches!(err, TrainError::Numeric(_)), "{err}");
    }

    #[test]
    fn ablation_matrix_has_fifteen_cells() {
        let base = tiny();
        let full = ablation_cells(&AblationRequest::Full, &base).unwrap();
        assert_eq!(full.len(), 15);
        assert!(!full.contains(&(EncoderKind::BiTree, TABLE_FEATURES[2])));
        let bad = AblationRequest::Cells(vec![(EncoderKind::BiTree, TABLE_FEATURES[2])]);
        assert!(matches!(ablation_cells(&bad, &base), Err(TrainError::ConfigError(_))));
        let one = AblationRequest::Cells(vec![(EncoderKind::Bi, TABLE_FEATURES[1])]);
        assert_eq!(ablation_cells(&one, &base).unwrap().len(), 1);
    }

    #[test]
    fn single_cell_report_table() {
        let f = fixture(4);
        let base = TrainConfig { max_epochs: 1, ..tiny() };
        let mut test = BTreeMap::new();
        test.insert("it".to_string(), f.examples.clone());
        test.insert("de".to_string(), f.examples[..2].to_vec());
        let req = AblationRequest::Cells(vec![(EncoderKind::BiTree, TABLE_FEATURES[1])]);
        let results = run_ablation_matrix(&base, &req, data(&f, false), &test, None).unwrap();
        assert_eq!(results.len(), 1);
        let langs: Vec<String> = test.keys().cloned().collect();
        let table = ablation_table(&results, &langs);
        assert!(table.contains("Bi/tree_{WE,PE,DE}"));
        assert!(table.contains("Bi/tree_{DE}"));
        assert!(table.contains("--"));
        assert!(table.lines().next().unwrap().contains("de") && table.contains("it"));
    }
}
