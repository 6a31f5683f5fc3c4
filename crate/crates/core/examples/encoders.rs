//! The four sentence encoders on one dependency-parsed sentence, the
//! sinusoidal position table, and what reordering siblings does to the
//! child-sum and positional tree encoders.
//!
//! cargo run --example encoders

use xdrs::autodiff::{Graph, ParamStore};
use xdrs::corpus::build_vocab;
use xdrs::encoders::{positional_encoding, Encoder, EncoderConfig, EncoderInput, EncoderKind, FeatureMask, POSITIONAL_BASE};
use xdrs::synth::synthetic_corpus;

fn main() {
    println!("positional encoding, d = 8:");
    for i in 0..4 {
        let row = positional_encoding(i, 8, POSITIONAL_BASE).unwrap();
        println!("  {i}: {}", row.iter().map(|v| format!("{v:+.3}")).collect::<Vec<_>>().join(" "));
    }

    let corpus = synthetic_corpus(4, 4, 0, 0, 2, 8);
    let (ex, _) = &corpus.examples[0];
    let vocab = build_vocab(corpus.examples.iter().map(|(e, _)| (&e.annotation, &e.drs)), 1).unwrap();
    println!("\nsentence: {}", ex.annotation.tokens.join(" "));
    let input = EncoderInput::new(&ex.annotation, &vocab);
    for kind in EncoderKind::ALL {
        let mut store = ParamStore::new(7);
        let config = EncoderConfig {
            kind,
            features: FeatureMask::ALL,
            word_dim: 8,
            upos_dim: 8,
            deprel_dim: 8,
            hidden: 6,
            positional_base: POSITIONAL_BASE,
        };
        let enc = Encoder::new(&mut store, config, &vocab, Some(&corpus.embeddings)).unwrap();
        let mut g = Graph::new(&store);
        let out = enc.encode(&mut g, &input).unwrap();
        let (rows, cols) = g.shape(out.states);
        println!(
            "{:<8} states {rows}x{cols}  summary[0..3] {:?}  trainable params {}",
            kind.display_name(),
            &g.value(out.summary).data()[..3],
            store.iter().filter(|(_, p)| p.trainable).map(|(_, p)| p.value.len()).sum::<usize>()
        );
    }

    // Two siblings of the root swapped in surface order.
    let config = |kind| EncoderConfig {
        kind,
        features: FeatureMask::ALL,
        word_dim: 4,
        upos_dim: 4,
        deprel_dim: 4,
        hidden: 5,
        positional_base: POSITIONAL_BASE,
    };
    let mut tree_store = ParamStore::new(3);
    let tree = Encoder::new(&mut tree_store, config(EncoderKind::Tree), &vocab, None).unwrap();
    let mut po_store = ParamStore::new(3);
    let po = Encoder::new(&mut po_store, config(EncoderKind::PoTree), &vocab, None).unwrap();
    let heads = vec![2, 0, 2];
    let a = EncoderInput { words: vec![5, 6, 7], upos: vec![5, 6, 5], deprels: vec![5, 6, 5], heads: heads.clone() };
    let b = EncoderInput { words: vec![7, 6, 5], upos: vec![5, 6, 5], deprels: vec![5, 6, 5], heads };
    for (name, enc, store) in [("tree", &tree, &tree_store), ("po_tree", &po, &po_store)] {
        let mut g = Graph::new(store);
        let ra = enc.encode(&mut g, &a).unwrap().summary;
        let rb = enc.encode(&mut g, &b).unwrap().summary;
        let diff = g.value(ra).data().iter().zip(g.value(rb).data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        println!("{name:<8} root state change after swapping the two children: {diff:.3e}");
    }
}
