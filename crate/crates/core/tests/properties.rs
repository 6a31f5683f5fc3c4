use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xdrs::autodiff::{Graph, ParamStore};
use xdrs::corpus::{build_vocab, Example, RESERVED};
use xdrs::decoder::PredicateSource;
use xdrs::drs::{merge_presuppositions, parse_clauses, strip_senses, write_clauses, BoxId, Drs, NonLexical, Sort, Var};
use xdrs::encoders::{
    positional_encoding, Encoder, EncoderConfig, EncoderInput, EncoderKind, FeatureMask, POSITIONAL_BASE,
};
use xdrs::evaluator::{score_clauses, to_clauses, AlignConfig, Clause, ClauseSet, Lexicon, Symbol};
use xdrs::synth::{random_drs, synthetic_corpus, RandomDrsConfig};
use xdrs::training::TrainConfig;
use xdrs::tree::{delinearize, from_tree, linearize, to_tree};

fn drs_from(seed: u64, cfg: RandomDrsConfig) -> Drs {
    random_drs(&mut ChaCha8Rng::seed_from_u64(seed), cfg)
}

fn lexicon() -> Lexicon {
    Lexicon::new(NonLexical::default(), Vec::<String>::new())
}

fn small() -> RandomDrsConfig {
    RandomDrsConfig {
        max_boxes: 2,
        max_conditions: 5,
    }
}

fn sorts(d: &Drs) -> BTreeSet<(char, usize)> {
    d.boxes
        .iter()
        .flat_map(|b| &b.referents)
        .map(|v| (v.sort().prefix(), v.index()))
        .collect()
}

/// Renames every box and variable through a random sort-preserving bijection.
fn rename(set: &ClauseSet, rng: &mut ChaCha8Rng) -> ClauseSet {
    let syms: Vec<Symbol> = set.symbols().into_iter().cloned().collect();
    let mut fresh: HashMap<Symbol, Symbol> = HashMap::new();
    let mut pools: HashMap<Option<Sort>, Vec<usize>> = HashMap::new();
    for s in &syms {
        let key = match s {
            Symbol::Var(v) => Some(v.sort()),
            _ => None,
        };
        let pool = pools.entry(key).or_default();
        pool.push(pool.len() + 50);
    }
    for p in pools.values_mut() {
        p.shuffle(rng);
    }
    for s in &syms {
        let renamed = match s {
            Symbol::Var(v) => Symbol::Var(Var::new(v.sort(), pools.get_mut(&Some(v.sort())).unwrap().pop().unwrap())),
            Symbol::Box(_) => Symbol::Box(BoxId::new(pools.get_mut(&None).unwrap().pop().unwrap())),
            Symbol::Fixed(_) => unreachable!(),
        };
        fresh.insert(s.clone(), renamed);
    }
    ClauseSet {
        clauses: set
            .clauses
            .iter()
            .map(|c| Clause {
                category: c.category,
                symbols: c.symbols.iter().map(|s| fresh.get(s).cloned().unwrap_or_else(|| s.clone())).collect(),
            })
            .collect(),
    }
}

fn exact() -> AlignConfig {
    AlignConfig {
        restarts: 40,
        ..AlignConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tree_conversion_round_trips(seed in any::<u64>()) {
        let d = drs_from(seed, RandomDrsConfig::default());
        let t = to_tree(&d).unwrap();
        prop_assert_eq!(&delinearize(&linearize(&t)).unwrap(), &t);
        let back = from_tree(&t).unwrap();
        prop_assert!(back.validate().is_ok());
        prop_assert_eq!(sorts(&back), sorts(&d));
        let e = score_clauses(&to_clauses(&back, &lexicon()), &to_clauses(&d, &lexicon()), &AlignConfig::default()).0;
        prop_assert_eq!(e.overall.f1(), 1.0);
    }

    #[test]
    fn clause_text_round_trips(seed in any::<u64>()) {
        let d = drs_from(seed, RandomDrsConfig::default());
        let back = parse_clauses(&write_clauses(&d)).unwrap();
        prop_assert_eq!(to_tree(&back).unwrap(), to_tree(&d).unwrap());
    }

    #[test]
    fn normalizations_are_idempotent(seed in any::<u64>()) {
        let d = drs_from(seed, RandomDrsConfig::default());
        let once = merge_presuppositions(&d).unwrap();
        prop_assert_eq!(&merge_presuppositions(&once).unwrap(), &once);
        let s = strip_senses(&d);
        prop_assert_eq!(&strip_senses(&s), &s);
    }

    #[test]
    fn clause_count_is_referents_conditions_relations(seed in any::<u64>()) {
        let d = drs_from(seed, RandomDrsConfig::default());
        let c = to_clauses(&d, &lexicon());
        prop_assert_eq!(c.len(), d.referent_count() + d.condition_count() + d.relations.len());
    }

    #[test]
    fn renaming_never_changes_scores(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gold = to_clauses(&random_drs(&mut rng, small()), &lexicon());
        let pred = to_clauses(&random_drs(&mut rng, small()), &lexicon());
        let base = score_clauses(&pred, &gold, &exact()).0;
        let renamed = score_clauses(&rename(&pred, &mut rng), &rename(&gold, &mut rng), &exact()).0;
        prop_assert_eq!(base, renamed);
    }

    #[test]
    fn scores_are_bounded_and_categories_partition(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gold = to_clauses(&random_drs(&mut rng, RandomDrsConfig::default()), &lexicon());
        let pred = to_clauses(&random_drs(&mut rng, RandomDrsConfig::default()), &lexicon());
        let e = score_clauses(&pred, &gold, &AlignConfig::default()).0;
        let r = e.overall;
        prop_assert!(r.matched <= r.n_predicted.min(r.n_gold));
        for v in [r.precision(), r.recall(), r.f1()] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let sum = |f: fn(&xdrs::evaluator::ScoreReport) -> usize| e.categories.values().map(f).sum::<usize>();
        prop_assert_eq!(sum(|c| c.matched), r.matched);
        prop_assert_eq!(sum(|c| c.n_predicted), r.n_predicted);
        prop_assert_eq!(sum(|c| c.n_gold), r.n_gold);
    }

    #[test]
    fn deleting_and_padding_are_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gold = to_clauses(&random_drs(&mut rng, small()), &lexicon());
        let mut pred = to_clauses(&random_drs(&mut rng, small()), &lexicon());
        if rng.gen_bool(0.5) {
            pred.clauses.extend(gold.clauses.iter().take(2).cloned());
        }
        let base = score_clauses(&pred, &gold, &exact()).0.overall;

        if !pred.is_empty() {
            let mut fewer = pred.clone();
            fewer.clauses.remove(rng.gen_range(0..pred.len()));
            let r = score_clauses(&fewer, &gold, &exact()).0.overall;
            prop_assert!(r.recall() <= base.recall());
        }

        let mut more = pred.clone();
        more.clauses.push(Clause {
            category: pred.clauses.first().map_or(gold.clauses[0].category, |c| c.category),
            symbols: vec![Symbol::Fixed("NEVER_IN_GOLD".into())],
        });
        let r = score_clauses(&more, &gold, &exact()).0.overall;
        prop_assert!(r.precision() <= base.precision());
    }

    #[test]
    fn positional_entries_lie_in_unit_interval(i in 0usize..512, half in 1usize..16) {
        for v in positional_encoding(i, 2 * half, POSITIONAL_BASE).unwrap() {
            prop_assert!((-1.0..=1.0).contains(&v));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_encoder_emits_one_state_per_token(seed in any::<u64>(), n in 1usize..9) {
        let corpus = synthetic_corpus(8, 8, 0, 0, 3, 4);
        let v = build_vocab(corpus.examples.iter().map(|(e, _)| (&e.annotation, &e.drs)), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut heads = vec![0; n];
        for k in 1..n {
            heads[order[k]] = order[rng.gen_range(0..k)] + 1;
        }
        let pick = |rng: &mut ChaCha8Rng, len: usize| RESERVED.len() + rng.gen_range(0..len - RESERVED.len());
        let input = EncoderInput {
            words: (0..n).map(|_| pick(&mut rng, v.words.len())).collect(),
            upos: (0..n).map(|_| pick(&mut rng, v.upos.len())).collect(),
            deprels: (0..n).map(|_| pick(&mut rng, v.deprels.len())).collect(),
            heads,
        };
        for kind in EncoderKind::ALL {
            let config = EncoderConfig {
                kind,
                features: FeatureMask::ALL,
                word_dim: 4,
                upos_dim: 4,
                deprel_dim: 4,
                hidden: 3,
                positional_base: POSITIONAL_BASE,
            };
            let mut store = ParamStore::new(seed);
            let enc = Encoder::new(&mut store, config, &v, None).unwrap();
            let mut g = Graph::new(&store);
            let out = enc.encode(&mut g, &input).unwrap();
            prop_assert_eq!(g.value(out.states).shape(), (n, config.state_dim()));
            prop_assert_eq!(g.value(out.summary).shape(), (1, config.summary_dim()));
        }
    }

    #[test]
    fn copied_predicates_equal_their_lemma(seed in any::<u64>()) {
        let corpus = synthetic_corpus(12, 12, 0, 0, 21, 8);
        let examples: Vec<Example> = corpus.examples.into_iter().map(|(e, _)| e).collect();
        let vocab = build_vocab(examples.iter().map(|e| (&e.annotation, &e.drs)), 1).unwrap();
        let config = TrainConfig {
            encoder: EncoderKind::ALL[(seed % 4) as usize],
            word_dim: 8,
            upos_dim: 8,
            deprel_dim: 8,
            hidden: 8,
            decoder_hidden: 8,
            decoder_embed: 8,
            ..TrainConfig::default()
        };
        let mut parser = xdrs::model::Parser::new(config.model(), vocab, None, seed).unwrap();
        let ids: Vec<_> = parser.store.iter().map(|(id, _)| id).collect();
        for id in ids {
            parser.store.value_mut(id).data_mut().iter_mut().for_each(|w| *w *= 10.0);
        }
        let ex = &examples[(seed % 12) as usize];
        let out = parser.parse(&ex.annotation).unwrap();
        prop_assert!(out.drs.validate().is_ok());
        for p in &out.decoded.predicates {
            if let PredicateSource::Copy(i) = p.source {
                prop_assert_eq!(&p.label, &ex.annotation.lemmas[i]);
            }
        }
    }
}
