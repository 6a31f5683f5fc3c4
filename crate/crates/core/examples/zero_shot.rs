//! Zero-shot transfer: train on synthetic English, parse unseen Italian.
//! Italian lemmas reach the output through the copy mechanism and the
//! frozen cross-lingual word vectors.
//!
//! cargo run --release --example zero_shot

use xdrs::corpus::{ingest, load_bundle, IngestOptions};
use xdrs::evaluator::{render_table, Lexicon};
use xdrs::synth::synthetic_corpus;
use xdrs::training::{evaluate, train, TrainConfig, TrainData};

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synthetic_corpus(60, 40, 10, 10, 1, 32);
    let raw = corpus.write(&dir.path().join("raw")).unwrap();
    let mut opts = IngestOptions::new(&raw.clauses, &raw.conllu, &raw.manifest, dir.path().join("bundle"));
    opts.embeddings = Some(raw.embeddings);
    opts.embedding_dim = 32;
    ingest(&opts).unwrap();
    let bundle = load_bundle(&opts.out).unwrap();
    let lexicon = Lexicon::new(bundle.non_lexical.clone(), bundle.lemmas());

    let config = TrainConfig {
        word_dim: 32,
        upos_dim: 32,
        deprel_dim: 32,
        hidden: 64,
        decoder_hidden: 64,
        decoder_embed: 32,
        batch_size: 4,
        max_epochs: 80,
        patience: 25,
        ..TrainConfig::default()
    };
    let data = TrainData {
        train: &bundle.split.train,
        dev: &bundle.split.dev,
        vocab: &bundle.vocab,
        embeddings: bundle.embeddings.as_ref(),
        lexicon: &lexicon,
    };
    let (report, parser) = train(&config, data, None).unwrap();
    println!("best epoch {} of {}", report.best_epoch, report.epochs.len());

    let langs: Vec<String> = bundle.split.test.keys().cloned().collect();
    let cells = langs
        .iter()
        .map(|l| Some(evaluate(&parser, &bundle.split.test[l], &lexicon).unwrap().overall))
        .collect();
    print!("{}", render_table("Model", &[("Bi_{WE,PE,DE}".into(), cells)], &langs));

    let ex = &bundle.split.test["it"][0];
    let out = parser.parse(&ex.annotation).unwrap();
    println!("\n{}\n{}", ex.annotation.tokens.join(" "), out.sequence.tokens.join(" "));
    println!("copied predicates: {}", out.decoded.copies());
}
