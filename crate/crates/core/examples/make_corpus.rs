//! Writes a synthetic English/Italian raw corpus in the layout `xdrs ingest`
//! reads: clause files with alignments, CoNLL-U parses, a split manifest and
//! a cross-lingual embedding table.
//!
//! cargo run --example make_corpus -- <dir> [n_english] [n_italian]

use std::path::PathBuf;

use xdrs::synth::synthetic_corpus;

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "synthetic".into()));
    let n: usize = args.next().map_or(60, |a| a.parse().expect("count"));
    let it: usize = args.next().map_or(20, |a| a.parse().expect("count"));
    let train = n * 2 / 3;
    let dev = (n - train) / 2;
    let corpus = synthetic_corpus(n, train, dev, it.min(n - train - dev), 1, 32);
    let paths = corpus.write(&dir).expect("write corpus");
    println!("clauses    {}", paths.clauses.display());
    println!("conllu     {}", paths.conllu.display());
    println!("manifest   {}", paths.manifest.display());
    println!("embeddings {}", paths.embeddings.display());
    let (en, it): (Vec<_>, Vec<_>) = corpus.examples.iter().partition(|(e, _)| e.lang == "en");
    println!("{} English and {} Italian sentences", en.len(), it.len());
    if let Some((e, doc)) = it.first() {
        println!("\n{}\n{}", e.annotation.tokens.join(" "), doc.to_text());
    }
}
