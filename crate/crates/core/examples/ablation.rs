//! The encoder × feature ablation matrix on a small synthetic corpus: 15
//! trained cells, `--` where Bi/tree would see dependency features only.
//!
//! cargo run --release --example ablation

use xdrs::corpus::{ingest, load_bundle, IngestOptions};
use xdrs::evaluator::Lexicon;
use xdrs::synth::synthetic_corpus;
use xdrs::training::{ablation_table, run_ablation_matrix, AblationRequest, TrainConfig, TrainData};

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synthetic_corpus(40, 24, 8, 8, 2, 16);
    let raw = corpus.write(&dir.path().join("raw")).unwrap();
    let mut opts = IngestOptions::new(&raw.clauses, &raw.conllu, &raw.manifest, dir.path().join("bundle"));
    opts.embeddings = Some(raw.embeddings);
    opts.embedding_dim = 16;
    ingest(&opts).unwrap();
    let bundle = load_bundle(&opts.out).unwrap();
    let lexicon = Lexicon::new(bundle.non_lexical.clone(), bundle.lemmas());
    let base = TrainConfig {
        word_dim: 16,
        upos_dim: 16,
        deprel_dim: 16,
        hidden: 48,
        decoder_hidden: 48,
        decoder_embed: 16,
        batch_size: 1,
        lr: 3e-3,
        max_epochs: 50,
        patience: 15,
        ..TrainConfig::default()
    };
    let data = TrainData {
        train: &bundle.split.train,
        dev: &bundle.split.dev,
        vocab: &bundle.vocab,
        embeddings: bundle.embeddings.as_ref(),
        lexicon: &lexicon,
    };
    let results = run_ablation_matrix(&base, &AblationRequest::Full, data, &bundle.split.test, None).unwrap();
    println!("trained {} cells", results.len());
    let langs: Vec<String> = bundle.split.test.keys().cloned().collect();
    print!("{}", ablation_table(&results, &langs));
}
