//! Clause notation, tree linearization and the three decoding streams for
//! "I sat down and opened my laptop", plus a round-trip sweep over random
//! structures.
//!
//! cargo run --example structures

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use xdrs::drs::{parse_clauses, write_clauses};
use xdrs::stages::decompose;
use xdrs::synth::{random_drs, RandomDrsConfig};
use xdrs::tree::{delinearize, from_tree, linearize, to_tree};

const LAPTOP: &str = "\
b1 CONTINUATION b2 b3
b2 REF e1
b2 sit_down e1
b2 Agent e1 \"speaker\"
b3 REF e2
b3 REF x1
b3 open e2
b3 laptop x1
b3 Owner x1 \"speaker\"
b3 Agent e2 \"speaker\"
b3 Theme e2 x1
";

fn main() {
    let drs = parse_clauses(LAPTOP).unwrap();
    let tree = to_tree(&drs).unwrap();
    let seq = linearize(&tree);
    println!("linearized ({} tokens):\n{}\n", seq.tokens.len(), seq.tokens.join(" "));

    let stages = decompose(&tree).unwrap();
    println!("skeleton:   {}", stages.skeleton.join(" "));
    println!("predicates: {}", stages.predicates.join(" "));
    println!("referents:  {}\n", stages.referents.join(" "));

    let back = from_tree(&delinearize(&seq).unwrap()).unwrap();
    println!("round trip:\n{}", write_clauses(&back));

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut ok = 0;
    for _ in 0..500 {
        let d = random_drs(&mut rng, RandomDrsConfig::default());
        let t = to_tree(&d).unwrap();
        let r = from_tree(&delinearize(&linearize(&t)).unwrap()).unwrap();
        ok += (to_tree(&r).unwrap() == t) as usize;
    }
    println!("random structures with identical trees after a round trip: {ok}/500");
}
