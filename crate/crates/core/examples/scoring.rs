//! Clause-matching evaluation: best variable alignment, precision, recall,
//! F1 and the per-category breakdown.
//!
//! cargo run --example scoring

use xdrs::drs::{parse_clauses, NonLexical};
use xdrs::evaluator::{best_alignment, category_breakdown, to_clauses, AlignConfig, Lexicon};

const GOLD: &str = "\
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

// Different variable names, a wrong relation and a missing owner.
const PRED: &str = "\
b7 CONTRAST b8 b9
b8 REF e5
b8 sit_down e5
b8 Agent e5 \"speaker\"
b9 REF e6
b9 REF x3
b9 open e6
b9 laptop x3
b9 Agent e6 \"speaker\"
b9 Theme e6 x3
";

fn main() {
    let lexicon = Lexicon::new(NonLexical::default(), ["sit_down", "open", "laptop"]);
    let gold = to_clauses(&parse_clauses(GOLD).unwrap(), &lexicon);
    let pred = to_clauses(&parse_clauses(PRED).unwrap(), &lexicon);
    let (alignment, matched) = best_alignment(&pred, &gold, &AlignConfig::default());
    println!("alignment:");
    for (p, g) in &alignment.pairs {
        println!("  {p} -> {g}");
    }
    let p = matched as f64 / pred.len() as f64;
    let r = matched as f64 / gold.len() as f64;
    println!("\nmatched {matched} of {} predicted / {} gold", pred.len(), gold.len());
    println!("P {p:.3}  R {r:.3}  F1 {:.3}\n", 2.0 * p * r / (p + r));
    for (cat, rep) in category_breakdown(&pred, &gold, &alignment) {
        println!("{:<20} P {:.3} R {:.3} F1 {:.3}", cat.name(), rep.precision(), rep.recall(), rep.f1());
    }
}
