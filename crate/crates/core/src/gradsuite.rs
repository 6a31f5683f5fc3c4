//! Finite-difference checks of every composite module on small dimensions.

use serde::Serialize;

use crate::autodiff::{gradcheck, AutodiffError, GradcheckReport, Graph, ParamStore, Tensor};
use crate::corpus::{build_vocab, VocabSet, RESERVED};
use crate::decoder::{Decoder, DecoderConfig, DecoderError};
use crate::encoders::{Encoder, EncoderConfig, EncoderError, EncoderInput, EncoderKind, FeatureMask, POSITIONAL_BASE};
use crate::model::targets;
use crate::nn::{Attention, BiLstm, ChildSum, CopyGenerator, Linear};
use crate::synth::synthetic_corpus;

pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct ModuleCheck {
    pub module: &'static str,
    pub report: GradcheckReport,
    pub passed: bool,
}

fn scale_all(store: &mut ParamStore, f: f64) {
    let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
    for id in ids {
        store.value_mut(id).scale_assign(f);
    }
}

fn inputs(rows: usize, cols: usize, phase: f64) -> Tensor {
    Tensor::new(rows, cols, (0..rows * cols).map(|i| (i as f64 * 0.37 + phase).sin()).collect()).expect("shape")
}

fn check(module: &'static str, report: GradcheckReport) -> ModuleCheck {
    ModuleCheck {
        module,
        passed: report.max_rel_error <= GRADCHECK_TOLERANCE,
        report,
    }
}

fn bilstm() -> Result<GradcheckReport, AutodiffError> {
    let mut store = ParamStore::new(2);
    let lstm = BiLstm::new(&mut store, "bi", 3, 4);
    scale_all(&mut store, 8.0);
    let xs = inputs(3, 3, 0.0);
    gradcheck::<AutodiffError, _>(
        &mut store,
        |g| {
            let x = g.input(xs.clone());
            let (states, summary) = lstm.run(g, x)?;
            let all = g.concat(&[summary, summary])?;
            let a = g.mul(states, states)?;
            let s = g.sum_all(a);
            let t = g.sum_all(all);
            g.mul(s, t)
        },
        40,
    )
}

fn child_sum() -> Result<GradcheckReport, AutodiffError> {
    let mut store = ParamStore::new(3);
    let cell = ChildSum::new(&mut store, "tree", 4, 5);
    scale_all(&mut store, 8.0);
    let xs = inputs(4, 4, 0.5);
    let heads = [2, 0, 2, 2];
    gradcheck::<AutodiffError, _>(
        &mut store,
        |g| {
            let x = g.input(xs.clone());
            let (nodes, root) = cell.run(g, x, &heads)?;
            let mut parts = Vec::new();
            for n in &nodes {
                parts.push(n.h);
                parts.push(n.c);
            }
            parts.push(nodes[root].h);
            let all = g.concat(&parts)?;
            let sq = g.mul(all, all)?;
            Ok(g.sum_all(sq))
        },
        40,
    )
}

fn toy_vocab() -> VocabSet {
    let c = synthetic_corpus(6, 6, 0, 0, 5, 4);
    build_vocab(c.examples.iter().map(|(e, _)| (&e.annotation, &e.drs)), 1).expect("vocab")
}

fn encoder(kind: EncoderKind, dim: usize, hidden: usize) -> Result<GradcheckReport, EncoderError> {
    let v = toy_vocab();
    let mut store = ParamStore::new(20);
    let config = EncoderConfig {
        kind,
        features: FeatureMask::ALL,
        word_dim: dim,
        upos_dim: dim,
        deprel_dim: dim,
        hidden,
        positional_base: POSITIONAL_BASE,
    };
    let enc = Encoder::new(&mut store, config, &v, None)?;
    scale_all(&mut store, 6.0);
    let first = RESERVED.len();
    let input = EncoderInput {
        words: vec![first, first + 1, first + 2],
        upos: vec![first, first + 1, first],
        deprels: vec![first, first + 1, first + 1],
        heads: vec![2, 0, 2],
    };
    gradcheck::<EncoderError, _>(
        &mut store,
        |g| {
            let out = enc.encode(g, &input)?;
            let both = g.concat(&[out.summary, out.summary])?;
            let s = g.sum_all(out.states);
            let t = g.sum_all(both);
            Ok(g.mul(s, t)?)
        },
        12,
    )
}

fn attention() -> Result<GradcheckReport, AutodiffError> {
    let mut store = ParamStore::new(4);
    let attn = Attention::new(&mut store, "attn", 5, 6);
    scale_all(&mut store, 8.0);
    let states = inputs(4, 6, 1.0);
    let h = inputs(1, 5, 2.0);
    gradcheck::<AutodiffError, _>(
        &mut store,
        |g| {
            let s = g.input(states.clone());
            let h = g.input(h.clone());
            let o = attn.readout(g, h, s)?;
            let sq = g.mul(o, o)?;
            let t = g.sum_all(o);
            let u = g.sum_all(sq);
            g.add(t, u)
        },
        40,
    )
}

fn copy_softmax() -> Result<GradcheckReport, AutodiffError> {
    let mut store = ParamStore::new(5);
    let generate = Linear::new(&mut store, "gen", 5, 7, true);
    let copy = store.uniform("copy", 5, 6);
    let cg = CopyGenerator { generate, copy };
    scale_all(&mut store, 10.0);
    let states = inputs(4, 6, 0.3);
    let o = inputs(1, 5, 1.7);
    let mut mask = vec![true; 11];
    mask[0] = false;
    mask[9] = false;
    gradcheck::<AutodiffError, _>(
        &mut store,
        |g| {
            let s = g.input(states.clone());
            let o = g.input(o.clone());
            let logits = cg.logits(g, o, s)?;
            g.softmax_cross_entropy(logits, &[3, 8, 10], Some(&mask))
        },
        40,
    )
}

fn full_loss() -> Result<GradcheckReport, DecoderError> {
    let c = synthetic_corpus(8, 8, 0, 0, 11, 4);
    let examples: Vec<_> = c.examples.into_iter().map(|(e, _)| e).collect();
    let vocab = build_vocab(examples.iter().map(|e| (&e.annotation, &e.drs)), 1).expect("vocab");
    let ex = examples
        .iter()
        .max_by_key(|e| (e.drs.boxes.len(), e.drs.condition_count()))
        .expect("examples");
    let mut store = ParamStore::new(11);
    let ec = EncoderConfig {
        kind: EncoderKind::Bi,
        features: FeatureMask::ALL,
        word_dim: 6,
        upos_dim: 4,
        deprel_dim: 4,
        hidden: 8,
        positional_base: POSITIONAL_BASE,
    };
    let enc = Encoder::new(&mut store, ec, &vocab, None)?;
    let dec = Decoder::new(
        &mut store,
        DecoderConfig {
            hidden: 8,
            embed_dim: 6,
            state_dim: ec.state_dim(),
            summary_dim: ec.summary_dim(),
        },
        &vocab.output,
    );
    scale_all(&mut store, 5.0);
    let gold = targets(&ex.drs)?;
    let input = EncoderInput::new(&ex.annotation, &vocab);
    gradcheck::<DecoderError, _>(
        &mut store,
        |g: &mut Graph| {
            let e = enc.encode(g, &input)?;
            Ok(dec.loss(g, &e, &ex.annotation.lemmas, &gold)?.total)
        },
        6,
    )
}

/// Runs every check; errors inside a check are reported as failures with an
/// infinite error.
pub fn run_suite() -> Vec<ModuleCheck> {
    let failed = || GradcheckReport {
        max_rel_error: f64::INFINITY,
        ..GradcheckReport::default()
    };
    vec![
        check("bilstm", bilstm().unwrap_or_else(|_| failed())),
        check("child_sum", child_sum().unwrap_or_else(|_| failed())),
        check("po_tree", encoder(EncoderKind::PoTree, 4, 6).unwrap_or_else(|_| failed())),
        check("bi_tree", encoder(EncoderKind::BiTree, 4, 3).unwrap_or_else(|_| failed())),
        check("attention", attention().unwrap_or_else(|_| failed())),
        check("copy_softmax", copy_softmax().unwrap_or_else(|_| failed())),
        check("full_loss", full_loss().unwrap_or_else(|_| failed())),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_module_passes() {
        let suite = run_suite();
        assert_eq!(suite.len(), 7);
        for m in &suite {
            assert!(m.report.checked > 0, "{}", m.module);
            assert!(m.passed, "{}: {:?}", m.module, m.report);
        }
    }
}
