//! Memorizes a 10-sentence synthetic corpus with every encoder and reports
//! free-decoding F1 on that same corpus.
//!
//! cargo run --release --example overfit [-- <encoder> ...]

use std::time::Instant;

use xdrs::corpus::{build_vocab, Example};
use xdrs::drs::NonLexical;
use xdrs::encoders::EncoderKind;
use xdrs::evaluator::Lexicon;
use xdrs::synth::synthetic_corpus;
use xdrs::training::{train, TrainConfig, TrainData};

fn main() {
    let kinds: Vec<EncoderKind> = match std::env::args().skip(1).collect::<Vec<_>>() {
        args if args.is_empty() => EncoderKind::ALL.to_vec(),
        args => args.iter().map(|a| a.parse().expect("encoder name")).collect(),
    };
    let corpus = synthetic_corpus(10, 10, 0, 0, 7, 32);
    let examples: Vec<Example> = corpus.examples.into_iter().map(|(e, _)| e).collect();
    let vocab = build_vocab(examples.iter().map(|e| (&e.annotation, &e.drs)), 1).unwrap();
    let lexicon = Lexicon::new(NonLexical::default(), examples.iter().flat_map(|e| e.annotation.lemmas.clone()));
    for kind in kinds {
        let config = TrainConfig {
            encoder: kind,
            word_dim: 32,
            upos_dim: 32,
            deprel_dim: 32,
            hidden: 64,
            decoder_hidden: 64,
            decoder_embed: 32,
            batch_size: 1,
            max_epochs: 300,
            patience: 300,
            target_f1: Some(0.95),
            ..TrainConfig::default()
        };
        let data = TrainData {
            train: &examples,
            dev: &examples,
            vocab: &vocab,
            embeddings: None,
            lexicon: &lexicon,
        };
        let t = Instant::now();
        let (report, _) = train(&config, data, None).unwrap();
        let best = report.best();
        println!(
            "{:<8} epochs {:>3}  loss {:.4}  F1 {:.4}  {:.1}s",
            kind.name(),
            report.epochs.len(),
            best.train_loss,
            best.dev.f1(),
            t.elapsed().as_secs_f64()
        );
    }
}
