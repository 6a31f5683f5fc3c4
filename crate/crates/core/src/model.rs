//! A complete parser: encoder, decoder, parameters and vocabularies.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::autodiff::{load_checkpoint, save_checkpoint, AutodiffError, Gradients, Graph, ParamStore};
use crate::corpus::{EmbeddingTable, SentenceAnnotation, VocabSet};
use crate::decoder::{assemble, Decoded, Decoder, DecoderConfig, DecoderError, StageLosses};
use crate::drs::Drs;
use crate::encoders::{Encoder, EncoderConfig, EncoderInput};
use crate::stages::{decompose, StageTargets};
use crate::tree::{to_tree, LinearSeq};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub decoder_hidden: usize,
    pub decoder_embed: usize,
}

impl ModelConfig {
    pub fn decoder(&self) -> DecoderConfig {
        DecoderConfig {
            hidden: self.decoder_hidden,
            embed_dim: self.decoder_embed,
            state_dim: self.encoder.state_dim(),
            summary_dim: self.encoder.summary_dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseOutput {
    pub drs: Drs,
    pub sequence: LinearSeq,
    pub decoded: Decoded,
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct Parser {
    pub config: ModelConfig,
    pub vocab: VocabSet,
    pub store: ParamStore,
    encoder: Encoder,
    decoder: Decoder,
}

/// Gold stage targets of a structure.
pub fn targets(drs: &Drs) -> Result<StageTargets, DecoderError> {
    let tree = to_tree(drs).map_err(|source| DecoderError::Assembly { stage: "gold", source })?;
    decompose(&tree).map_err(|source| DecoderError::Assembly { stage: "gold", source })
}

impl Parser {
    pub fn new(
        config: ModelConfig,
        vocab: VocabSet,
        pretrained: Option<&EmbeddingTable>,
        seed: u64,
    ) -> Result<Self, DecoderError> {
        let mut store = ParamStore::new(seed);
        let encoder = Encoder::new(&mut store, config.encoder, &vocab, pretrained)?;
        let decoder = Decoder::new(&mut store, config.decoder(), &vocab.output);
        Ok(Parser {
            config,
            vocab,
            store,
            encoder,
            decoder,
        })
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn decoder(&self) -> &Decoder {
        &self.decoder
    }

    /// Teacher-forced stage losses on one graph.
    pub fn loss(&self, g: &mut Graph, sentence: &SentenceAnnotation, gold: &StageTargets) -> Result<StageLosses, DecoderError> {
        let input = EncoderInput::new(sentence, &self.vocab);
        let enc = self.encoder.encode(g, &input)?;
        self.decoder.loss(g, &enc, &sentence.lemmas, gold)
    }

    /// Loss value and gradients for one example.
    pub fn gradients(&self, sentence: &SentenceAnnotation, gold: &StageTargets) -> Result<(f64, Gradients), DecoderError> {
        let mut g = Graph::new(&self.store);
        let l = self.loss(&mut g, sentence, gold)?;
        let value = g.value(l.total).item();
        if !value.is_finite() {
            return Err(AutodiffError::NumericError(format!("loss is {value}")).into());
        }
        let grads = g.backward(l.total)?;
        if !grads.is_finite() {
            return Err(AutodiffError::NumericError("gradient is not finite".into()).into());
        }
        Ok((value, grads))
    }

    pub fn decode(&self, sentence: &SentenceAnnotation) -> Result<Decoded, DecoderError> {
        let mut g = Graph::new(&self.store);
        let input = EncoderInput::new(sentence, &self.vocab);
        let enc = self.encoder.encode(&mut g, &input)?;
        self.decoder.decode(&mut g, &enc, &sentence.lemmas)
    }

    /// Greedy free decoding into a valid structure.
    pub fn parse(&self, sentence: &SentenceAnnotation) -> Result<ParseOutput, DecoderError> {
        let decoded = self.decode(sentence)?;
        let (sequence, drs, truncated) = assemble(&decoded, self.decoder.relation_label())?;
        Ok(ParseOutput {
            drs,
            sequence,
            decoded,
            truncated,
        })
    }

    pub fn meta(&self, extra: Value) -> Value {
        json!({
            "config": self.config,
            "vocab": self.vocab,
            "vocab_hash": self.vocab.hash(),
            "extra": extra,
        })
    }

    pub fn save(&self, path: &Path, extra: Value) -> Result<(), AutodiffError> {
        save_checkpoint(path, &self.meta(extra), &self.store)
    }

    /// Rebuilds a parser from a checkpoint; returns the stored extra metadata.
    pub fn load(path: &Path) -> Result<(Self, Value), DecoderError> {
        let (meta, store) = load_checkpoint(path)?;
        let bad = |m: &str| AutodiffError::Checkpoint(m.to_string());
        let config: ModelConfig =
            serde_json::from_value(meta["config"].clone()).map_err(|e| bad(&format!("config: {e}")))?;
        let vocab: VocabSet =
            serde_json::from_value(meta["vocab"].clone()).map_err(|e| bad(&format!("vocab: {e}")))?;
        let mut parser = Parser::new(config, vocab, None, 0)?;
        parser.store.restore_from(&store)?;
        for (id, p) in store.iter() {
            if let Some(mine) = parser.store.get(&p.name) {
                parser.store.set_trainable(mine, store.param(id).trainable);
            }
        }
        Ok((parser, meta["extra"].clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{Adam, AdamConfig};
    use crate::corpus::build_vocab;
    use crate::decoder::PredicateSource;
    use crate::drs::parse_clauses;
    use crate::encoders::{EncoderKind, FeatureMask, POSITIONAL_BASE};

    fn sentence(tokens: &[&str], lemmas: &[&str]) -> SentenceAnnotation {
        let n = tokens.len();
        SentenceAnnotation {
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            lemmas: lemmas.iter().map(|s| s.to_string()).collect(),
            upos: vec!["VERB".into(); n],
            heads: (0..n).map(|i| if i == 0 { 0 } else { 1 }).collect(),
            deprels: (0..n).map(|i| if i == 0 { "root".into() } else { "obj".into() }).collect(),
            alignments: vec![],
        }
    }

    fn small(kind: EncoderKind) -> ModelConfig {
        ModelConfig {
            encoder: EncoderConfig {
                kind,
                features: FeatureMask::ALL,
                word_dim: 16,
                upos_dim: 16,
                deprel_dim: 16,
                hidden: 128,
                positional_base: POSITIONAL_BASE,
            },
            decoder_hidden: 128,
            decoder_embed: 64,
        }
    }

    #[test]
    fn overfits_one_example() {
        let s = sentence(&["I", "opened", "it"], &["i", "open", "it"]);
        let d = parse_clauses("b1 REF e1\nb1 open e1\nb1 Agent e1 \"speaker\"\nb1 REF x1\nb1 Theme e1 x1\nb1 entity x1\n").unwrap();
        let vocab = build_vocab([(&s, &d)], 1).unwrap();
        let mut parser = Parser::new(small(EncoderKind::Bi), vocab, None, 4).unwrap();
        let gold = targets(&d).unwrap();
        let mut adam = Adam::new(AdamConfig {
            lr: 1e-3,
            ..AdamConfig::default()
        });
        let mut last = f64::INFINITY;
        for _ in 0..300 {
            let (l, grads) = parser.gradients(&s, &gold).unwrap();
            last = l;
            if l < 0.1 {
                break;
            }
            adam.step(&mut parser.store, &grads);
        }
        assert!(last < 0.1, "final loss {last}");
        let out = parser.parse(&s).unwrap();
        assert_eq!(out.drs, d);
    }

    #[test]
    fn copies_unseen_lemma() {
        let en = sentence(&["open", "it"], &["open", "it"]);
        let d = parse_clauses("b1 REF e1\nb1 open e1\n").unwrap();
        let mut vocab = build_vocab([(&en, &d)], 1).unwrap();
        vocab.output.unary = crate::corpus::Vocabulary::new();
        let mut parser = Parser::new(small(EncoderKind::Bi), vocab, None, 2).unwrap();
        let gold = targets(&d).unwrap();
        let mut adam = Adam::new(AdamConfig {
            lr: 1e-3,
            ..AdamConfig::default()
        });
        for _ in 0..300 {
            let (_, grads) = parser.gradients(&en, &gold).unwrap();
            adam.step(&mut parser.store, &grads);
        }
        let it = sentence(&["aprire", "lo"], &["aprire", "lo"]);
        let out = parser.parse(&it).unwrap();
        let copied: Vec<_> = out
            .decoded
            .predicates
            .iter()
            .filter(|p| p.source == PredicateSource::Copy(0))
            .collect();
        assert_eq!(copied.len(), 1);
        assert_eq!(copied[0].label, "aprire");
    }

    #[test]
    fn checkpoint_round_trip() {
        let s = sentence(&["I", "run"], &["i", "run"]);
        let d = parse_clauses("b1 REF e1\nb1 run e1\n").unwrap();
        let vocab = build_vocab([(&s, &d)], 1).unwrap();
        let parser = Parser::new(small(EncoderKind::BiTree), vocab, None, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        parser.save(&path, json!({"epoch": 3})).unwrap();
        let (back, extra) = Parser::load(&path).unwrap();
        assert_eq!(extra["epoch"], 3);
        assert_eq!(back.parse(&s).unwrap(), parser.parse(&s).unwrap());
    }
}
