//! Coarse-to-fine decoder: skeleton, then predicates, then referents.
//!
//! Each stage is an attentional LSTM over the encoder states. The predicate
//! stage starts from the final skeleton state and reads the skeleton state at
//! each placeholder; the referent stage starts from the final predicate state
//! and reads the placeholder state and the chosen predicate. In free mode
//! every stage is masked so that the output always assembles into a valid
//! structure.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Graph, ParamId, ParamStore, Tensor, Var};
use crate::corpus::{OutputVocab, BOS, COPY, RESERVED, UNK};
use crate::drs::{is_symbol_text, Drs, DrsError};
use crate::encoders::{EncoderError, EncoderOutput};
use crate::nn::{Attention, CopyGenerator, Linear, Lstm, LstmState};
use crate::stages::{self, compose, referent_slots, ReferentScope, SkeletonState, SlotKind, StageTargets};
use crate::tree::{delinearize, from_tree, linearize, LinearSeq};

pub const MAX_SKELETON: usize = 64;
pub const MAX_PREDICATES: usize = 64;
pub const MAX_REFERENTS: usize = 96;

#[derive(Debug, Error)]
pub enum DecoderError {
    #[error("empty input")]
    EmptyInput,
    #[error("internal contract violation: {0}")]
    InternalContractViolation(String),
    #[error("{stage}: {source}")]
    Assembly { stage: &'static str, source: DrsError },
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub hidden: usize,
    pub embed_dim: usize,
    /// Width of the encoder state rows.
    pub state_dim: usize,
    /// Width of the encoder summary.
    pub summary_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredicateSource {
    Generate,
    Copy(usize),
    Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateChoice {
    pub label: String,
    pub source: PredicateSource,
}

/// Output of free decoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    pub skeleton: Vec<String>,
    pub predicates: Vec<PredicateChoice>,
    pub referents: Vec<String>,
    pub truncated: bool,
}

impl Decoded {
    pub fn copies(&self) -> usize {
        self.predicates
            .iter()
            .filter(|p| matches!(p.source, PredicateSource::Copy(_)))
            .count()
    }
}

/// Teacher-forced losses, summed over steps.
#[derive(Debug, Clone, Copy)]
pub struct StageLosses {
    pub skeleton: Var,
    pub predicates: Var,
    pub referents: Var,
    pub total: Var,
}

#[derive(Debug, Clone)]
struct StageNet {
    emb: ParamId,
    lstm: Lstm,
    attn: Attention,
}

impl StageNet {
    fn new(store: &mut ParamStore, name: &str, vocab: usize, input: usize, c: &DecoderConfig) -> Self {
        StageNet {
            emb: store.uniform(&format!("{name}.emb"), vocab, c.embed_dim),
            lstm: Lstm::new(store, &format!("{name}.lstm"), input, c.hidden),
            attn: Attention::new(store, name, c.hidden, c.state_dim),
        }
    }

    fn readout(&self, g: &mut Graph, h: Var, states: Var) -> Result<Var, AutodiffError> {
        self.attn.readout(g, h, states)
    }
}

struct SkeletonRun {
    tokens: Vec<String>,
    /// State after consuming each token.
    after: Vec<LstmState>,
    last: LstmState,
    loss: Option<Var>,
    truncated: bool,
}

struct PredicateRun {
    choices: Vec<PredicateChoice>,
    /// Row of the predicate embedding table for each choice.
    emb_ids: Vec<usize>,
    last: LstmState,
    loss: Option<Var>,
}

struct ReferentRun {
    tokens: Vec<String>,
    loss: Option<Var>,
}

#[derive(Debug, Clone)]
pub struct Decoder {
    pub config: DecoderConfig,
    vocab: OutputVocab,
    relation_label: Option<String>,
    init: Linear,
    skel: StageNet,
    skel_out: Linear,
    pred: StageNet,
    unary: CopyGenerator,
    role_out: Linear,
    refr: StageNet,
    ref_out: Linear,
    kind_emb: ParamId,
}

fn add_losses(g: &mut Graph, losses: Vec<Var>) -> Result<Var, AutodiffError> {
    if losses.is_empty() {
        Ok(g.input(Tensor::scalar(0.0)))
    } else {
        g.sum(&losses)
    }
}

fn masked_argmax(logits: &[f64], mask: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, (&v, &ok)) in logits.iter().zip(mask).enumerate() {
        if ok && best.is_none_or(|b| v > logits[b]) {
            best = Some(i);
        }
    }
    best
}

impl Decoder {
    pub fn new(store: &mut ParamStore, config: DecoderConfig, vocab: &OutputVocab) -> Self {
        let c = &config;
        let (e, h) = (c.embed_dim, c.hidden);
        let pred_vocab = vocab.unary.len() + vocab.roles.len();
        let init = Linear::new(store, "dec.init", c.summary_dim, h, true);
        let skel = StageNet::new(store, "dec.skel", vocab.structure.len(), e + h, c);
        let skel_out = Linear::new(store, "dec.skel.proj", h, vocab.structure.len(), true);
        let pred = StageNet::new(store, "dec.pred", pred_vocab, e + 3 * h, c);
        let generate = Linear::new(store, "dec.pred.unary", h, vocab.unary.len(), true);
        let role_out = Linear::new(store, "dec.pred.role", h, vocab.roles.len(), true);
        let copy = store.uniform("dec.pred.copy", h, c.state_dim);
        Decoder {
            config,
            vocab: vocab.clone(),
            relation_label: vocab.default_relation(),
            init,
            skel,
            skel_out,
            pred,
            unary: CopyGenerator { generate, copy },
            role_out,
            refr: StageNet::new(store, "dec.ref", vocab.referents.len(), 3 * e + 3 * h, c),
            ref_out: Linear::new(store, "dec.ref.proj", h, vocab.referents.len(), true),
            kind_emb: store.uniform("dec.ref.kind", 4, e),
        }
    }

    pub fn vocab(&self) -> &OutputVocab {
        &self.vocab
    }

    fn zeros(&self, g: &mut Graph) -> Var {
        g.input(Tensor::zeros(1, self.config.hidden))
    }

    fn start(&self, g: &mut Graph, enc: &EncoderOutput) -> Result<LstmState, AutodiffError> {
        let z = self.init.forward(g, enc.summary)?;
        let h = g.tanh(z);
        let c = self.zeros(g);
        Ok(LstmState { h, c })
    }

    fn skeleton_stage(
        &self,
        g: &mut Graph,
        enc: &EncoderOutput,
        gold: Option<&[String]>,
    ) -> Result<SkeletonRun, DecoderError> {
        let v = &self.vocab.structure;
        let mut grammar = match gold {
            Some(_) => SkeletonState::new(self.relation_label.clone(), usize::MAX),
            None => SkeletonState::new(self.relation_label.clone(), MAX_REFERENTS)
                .with_predicate_limit(MAX_PREDICATES),
        };
        let mut state = self.start(g, enc)?;
        let mut feed = self.zeros(g);
        let mut prev = BOS;
        let mut tokens: Vec<String> = Vec::new();
        let mut after = Vec::new();
        let mut losses = Vec::new();
        loop {
            let e = g.embed(self.skel.emb, &[prev])?;
            let x = g.concat(&[e, feed])?;
            state = self.skel.lstm.step(g, x, state)?;
            if !tokens.is_empty() {
                after.push(state);
            }
            if grammar.is_done() {
                break;
            }
            if let Some(gold) = gold {
                if tokens.len() == gold.len() {
                    return Err(DecoderError::InternalContractViolation(
                        "gold skeleton is unbalanced".into(),
                    ));
                }
            }
            let o = self.skel.readout(g, state.h, enc.states)?;
            feed = o;
            let logits = self.skel_out.forward(g, o)?;
            let mask: Vec<bool> = v
                .symbols()
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    i >= RESERVED.len()
                        && grammar.allows(s)
                        && (gold.is_some() || {
                            let mut next = grammar.clone();
                            next.apply(s);
                            tokens.len() + 1 + next.completion().len() <= MAX_SKELETON
                        })
                })
                .collect();
            let tok = match gold {
                Some(gold) => {
                    let tok = gold[tokens.len()].clone();
                    if !grammar.allows(&tok) {
                        return Err(DecoderError::InternalContractViolation(format!(
                            "gold skeleton token `{tok}` is not legal here"
                        )));
                    }
                    let id = v.id(&tok);
                    if id != UNK && mask[id] {
                        losses.push(g.softmax_cross_entropy(logits, &[id], Some(&mask))?);
                    }
                    tok
                }
                None => {
                    let id = masked_argmax(g.value(logits).data(), &mask).ok_or_else(|| {
                        DecoderError::InternalContractViolation("no legal skeleton token".into())
                    })?;
                    v.symbol(id).to_string()
                }
            };
            grammar.apply(&tok);
            prev = v.id(&tok);
            tokens.push(tok);
        }
        let loss = match gold {
            Some(_) => Some(add_losses(g, losses)?),
            None => None,
        };
        Ok(SkeletonRun {
            tokens,
            after,
            last: state,
            loss,
            truncated: false,
        })
    }

    fn predicate_stage(
        &self,
        g: &mut Graph,
        enc: &EncoderOutput,
        skel: &SkeletonRun,
        lemmas: &[String],
        gold: Option<&[String]>,
    ) -> Result<PredicateRun, DecoderError> {
        let (unary, roles) = (&self.vocab.unary, &self.vocab.roles);
        let n_unary = unary.len();
        let placeholders: Vec<usize> = skel
            .tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| *t == stages::UNARY_SLOT || *t == stages::ROLE_SLOT)
            .map(|(k, _)| k)
            .collect();
        if let Some(gold) = gold {
            if gold.len() != placeholders.len() {
                return Err(DecoderError::InternalContractViolation(format!(
                    "{} predicates for {} placeholders",
                    gold.len(),
                    placeholders.len()
                )));
            }
        }
        let copyable: Vec<bool> = lemmas.iter().map(|l| is_symbol_text(l) && !l.contains('"')).collect();
        let mut state = skel.last;
        let mut feed = self.zeros(g);
        let mut prev = BOS;
        let mut run = PredicateRun {
            choices: Vec::new(),
            emb_ids: Vec::new(),
            last: skel.last,
            loss: None,
        };
        let mut losses = Vec::new();
        for (j, &k) in placeholders.iter().enumerate() {
            let e = g.embed(self.pred.emb, &[prev])?;
            let x = g.concat(&[e, skel.after[k].h, skel.last.h, feed])?;
            state = self.pred.lstm.step(g, x, state)?;
            let o = self.pred.readout(g, state.h, enc.states)?;
            feed = o;
            let allow_unk = gold.is_some();
            let (choice, emb_id) = if skel.tokens[k] == stages::UNARY_SLOT {
                let logits = self.unary.logits(g, o, enc.states)?;
                let mut mask: Vec<bool> = (0..n_unary)
                    .map(|i| i >= RESERVED.len() || (allow_unk && i == UNK))
                    .collect();
                mask.extend(copyable.iter().copied());
                match gold {
                    Some(gold) => {
                        let label = &gold[j];
                        let mut targets: Vec<usize> = lemmas
                            .iter()
                            .enumerate()
                            .filter(|(i, l)| *l == label && copyable[*i])
                            .map(|(i, _)| n_unary + i)
                            .collect();
                        let gen_id = unary.get(label).filter(|&id| id >= RESERVED.len());
                        if let Some(id) = gen_id {
                            targets.push(id);
                        }
                        if targets.is_empty() {
                            targets.push(UNK);
                        }
                        targets.sort_unstable();
                        losses.push(g.softmax_cross_entropy(logits, &targets, Some(&mask))?);
                        let emb = gen_id.unwrap_or(if targets[0] >= n_unary { COPY } else { UNK });
                        (
                            PredicateChoice {
                                label: label.clone(),
                                source: PredicateSource::Generate,
                            },
                            emb,
                        )
                    }
                    None => match masked_argmax(g.value(logits).data(), &mask) {
                        Some(id) if id < n_unary => (
                            PredicateChoice {
                                label: unary.symbol(id).to_string(),
                                source: PredicateSource::Generate,
                            },
                            id,
                        ),
                        Some(id) => (
                            PredicateChoice {
                                label: lemmas[id - n_unary].clone(),
                                source: PredicateSource::Copy(id - n_unary),
                            },
                            COPY,
                        ),
                        None => (
                            PredicateChoice {
                                label: "entity".into(),
                                source: PredicateSource::Generate,
                            },
                            UNK,
                        ),
                    },
                }
            } else {
                let logits = self.role_out.forward(g, o)?;
                let mask: Vec<bool> = (0..roles.len())
                    .map(|i| i >= RESERVED.len() || (allow_unk && i == UNK))
                    .collect();
                let id = match gold {
                    Some(gold) => {
                        let id = roles.id(&gold[j]);
                        losses.push(g.softmax_cross_entropy(logits, &[id], Some(&mask))?);
                        id
                    }
                    None => masked_argmax(g.value(logits).data(), &mask).unwrap_or(UNK),
                };
                let label = match gold {
                    Some(gold) => gold[j].clone(),
                    None if id == UNK => "Theme".to_string(),
                    None => roles.symbol(id).to_string(),
                };
                (
                    PredicateChoice {
                        label,
                        source: PredicateSource::Role,
                    },
                    n_unary + id,
                )
            };
            run.choices.push(choice);
            run.emb_ids.push(emb_id);
            prev = emb_id;
        }
        run.last = state;
        if gold.is_some() {
            run.loss = Some(add_losses(g, losses)?);
        }
        Ok(run)
    }

    fn referent_stage(
        &self,
        g: &mut Graph,
        enc: &EncoderOutput,
        skel: &SkeletonRun,
        preds: &PredicateRun,
        gold: Option<&[String]>,
    ) -> Result<ReferentRun, DecoderError> {
        let v = &self.vocab.referents;
        let slots = referent_slots(&skel.tokens);
        if let Some(gold) = gold {
            if gold.len() != slots.len() {
                return Err(DecoderError::InternalContractViolation(format!(
                    "{} referents for {} slots",
                    gold.len(),
                    slots.len()
                )));
            }
        }
        let mut scope = ReferentScope::new();
        let mut state = preds.last;
        let mut feed = self.zeros(g);
        let mut prev = BOS;
        let mut tokens = Vec::new();
        let mut losses = Vec::new();
        for (m, slot) in slots.iter().enumerate() {
            let kind = match slot.kind {
                SlotKind::Declare => 0,
                SlotKind::UnaryArg => 1,
                SlotKind::RoleArg if m > 0 && slots[m - 1].predicate == slot.predicate => 3,
                SlotKind::RoleArg => 2,
            };
            let e = g.embed(self.refr.emb, &[prev])?;
            let ke = g.embed(self.kind_emb, &[kind])?;
            let pid = slot.predicate.map_or(BOS, |j| preds.emb_ids[j]);
            let pe = g.embed(self.pred.emb, &[pid])?;
            let x = g.concat(&[e, ke, skel.after[slot.token].h, pe, preds.last.h, feed])?;
            state = self.refr.lstm.step(g, x, state)?;
            let o = self.refr.readout(g, state.h, enc.states)?;
            feed = o;
            let logits = self.ref_out.forward(g, o)?;
            let mask: Vec<bool> = v
                .symbols()
                .iter()
                .enumerate()
                .map(|(i, s)| i >= RESERVED.len() && scope.allows(slot, s))
                .collect();
            let tok = match gold {
                Some(gold) => {
                    let tok = gold[m].clone();
                    if let Some(id) = v.get(&tok).filter(|&id| mask[id]) {
                        losses.push(g.softmax_cross_entropy(logits, &[id], Some(&mask))?);
                    }
                    tok
                }
                None => {
                    let id = masked_argmax(g.value(logits).data(), &mask).ok_or_else(|| {
                        DecoderError::InternalContractViolation("no legal referent".into())
                    })?;
                    v.symbol(id).to_string()
                }
            };
            scope.apply(slot, &tok);
            prev = v.id(&tok);
            tokens.push(tok);
        }
        let loss = match gold {
            Some(_) => Some(add_losses(g, losses)?),
            None => None,
        };
        Ok(ReferentRun { tokens, loss })
    }

    /// Teacher-forced losses of the three stages against gold targets.
    pub fn loss(
        &self,
        g: &mut Graph,
        enc: &EncoderOutput,
        lemmas: &[String],
        gold: &StageTargets,
    ) -> Result<StageLosses, DecoderError> {
        let skel = self.skeleton_stage(g, enc, Some(&gold.skeleton))?;
        let preds = self.predicate_stage(g, enc, &skel, lemmas, Some(&gold.predicates))?;
        let refs = self.referent_stage(g, enc, &skel, &preds, Some(&gold.referents))?;
        let (s, p, r) = (skel.loss.unwrap(), preds.loss.unwrap(), refs.loss.unwrap());
        let total = g.sum(&[s, p, r])?;
        Ok(StageLosses {
            skeleton: s,
            predicates: p,
            referents: r,
            total,
        })
    }

    /// Greedy decoding under the legality masks.
    pub fn decode(&self, g: &mut Graph, enc: &EncoderOutput, lemmas: &[String]) -> Result<Decoded, DecoderError> {
        let skel = self.skeleton_stage(g, enc, None)?;
        let preds = self.predicate_stage(g, enc, &skel, lemmas, None)?;
        let refs = self.referent_stage(g, enc, &skel, &preds, None)?;
        Ok(Decoded {
            skeleton: skel.tokens,
            predicates: preds.choices,
            referents: refs.tokens,
            truncated: skel.truncated,
        })
    }

    pub fn relation_label(&self) -> Option<&str> {
        self.relation_label.as_deref()
    }
}

/// Stitches stage outputs into a linear sequence and a structure.
pub fn assemble(decoded: &Decoded, relation_label: Option<&str>) -> Result<(LinearSeq, Drs, bool), DecoderError> {
    let labels: Vec<String> = decoded.predicates.iter().map(|p| p.label.clone()).collect();
    let (tree, closed) = compose(&decoded.skeleton, &labels, &decoded.referents, relation_label).map_err(|e| match e {
        DrsError::InvalidStructure(m) => DecoderError::InternalContractViolation(m),
        source => DecoderError::Assembly {
            stage: "skeleton",
            source,
        },
    })?;
    let seq = linearize(&tree);
    let tree = delinearize(&seq).map_err(|source| DecoderError::Assembly {
        stage: "linear sequence",
        source,
    })?;
    let drs = from_tree(&tree).map_err(|source| DecoderError::Assembly { stage: "tree", source })?;
    Ok((seq, drs, decoded.truncated || closed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, SentenceAnnotation, VocabSet};
    use crate::drs::parse_clauses;
    use crate::encoders::{Encoder, EncoderConfig, EncoderInput, EncoderKind, FeatureMask, POSITIONAL_BASE};
    use crate::tree::to_tree;

    pub(crate) const FIGURE_ONE: &str = "\
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

    fn sentence() -> SentenceAnnotation {
        let toks = ["I", "sat", "down", "and", "opened", "my", "laptop"];
        let lemmas = ["i", "sit_down", "down", "and", "open", "my", "laptop"];
        SentenceAnnotation {
            tokens: toks.iter().map(|s| s.to_string()).collect(),
            lemmas: lemmas.iter().map(|s| s.to_string()).collect(),
            upos: vec!["PRON", "VERB", "ADP", "CCONJ", "VERB", "PRON", "NOUN"]
                .into_iter()
                .map(String::from)
                .collect(),
            heads: vec![2, 0, 2, 5, 2, 7, 5],
            deprels: vec!["nsubj", "root", "compound:prt", "cc", "conj", "nmod:poss", "obj"]
                .into_iter()
                .map(String::from)
                .collect(),
            alignments: vec![],
        }
    }

    pub(crate) struct Fixture {
        pub store: ParamStore,
        pub encoder: Encoder,
        pub decoder: Decoder,
        pub vocab: VocabSet,
        pub sentence: SentenceAnnotation,
        pub drs: Drs,
    }

    pub(crate) fn fixture(seed: u64, unary_in_vocab: bool) -> Fixture {
        let drs = parse_clauses(FIGURE_ONE).unwrap();
        let s = sentence();
        let mut vocab = build_vocab([(&s, &drs)], 1).unwrap();
        if !unary_in_vocab {
            vocab.output.unary = crate::corpus::Vocabulary::new();
        }
        let mut store = ParamStore::new(seed);
        let ec = EncoderConfig {
            kind: EncoderKind::Bi,
            features: FeatureMask::ALL,
            word_dim: 6,
            upos_dim: 4,
            deprel_dim: 4,
            hidden: 8,
            positional_base: POSITIONAL_BASE,
        };
        let encoder = Encoder::new(&mut store, ec, &vocab, None).unwrap();
        let dc = DecoderConfig {
            hidden: 8,
            embed_dim: 6,
            state_dim: ec.state_dim(),
            summary_dim: ec.summary_dim(),
        };
        let decoder = Decoder::new(&mut store, dc, &vocab.output);
        Fixture {
            store,
            encoder,
            decoder,
            vocab,
            sentence: s,
            drs,
        }
    }

    #[test]
    fn teacher_forced_losses_are_finite_and_positive() {
        let f = fixture(1, true);
        let gold = stages::decompose(&to_tree(&f.drs).unwrap()).unwrap();
        let mut g = Graph::new(&f.store);
        let enc = f.encoder.encode(&mut g, &EncoderInput::new(&f.sentence, &f.vocab)).unwrap();
        let l = f.decoder.loss(&mut g, &enc, &f.sentence.lemmas, &gold).unwrap();
        for v in [l.skeleton, l.predicates, l.referents] {
            let x = g.value(v).item();
            assert!(x.is_finite() && x > 0.0);
        }
        let parts: f64 = [l.skeleton, l.predicates, l.referents].iter().map(|&v| g.value(v).item()).sum();
        assert!((g.value(l.total).item() - parts).abs() < 1e-12);
        assert!(g.backward(l.total).unwrap().is_finite());
    }

    #[test]
    fn random_weights_still_give_valid_structures() {
        for seed in 0..100 {
            let mut f = fixture(seed, true);
            let ids: Vec<_> = f.store.iter().map(|(id, _)| id).collect();
            for id in ids {
                f.store.value_mut(id).scale_assign(30.0);
            }
            let mut g = Graph::new(&f.store);
            let enc = f.encoder.encode(&mut g, &EncoderInput::new(&f.sentence, &f.vocab)).unwrap();
            let d = f.decoder.decode(&mut g, &enc, &f.sentence.lemmas).unwrap();
            assert!(d.skeleton.len() <= MAX_SKELETON);
            let (seq, drs, _) = assemble(&d, f.decoder.relation_label()).unwrap();
            drs.validate().unwrap();
            let opens = seq.tokens.iter().filter(|t| t.starts_with('(')).count();
            let closes = seq.tokens.iter().filter(|t| *t == ")").count();
            assert_eq!(opens, closes);
            for p in &d.predicates {
                if let PredicateSource::Copy(i) = p.source {
                    assert_eq!(p.label, f.sentence.lemmas[i]);
                }
            }
        }
    }

    #[test]
    fn copy_only_vocabulary_emits_lemmas() {
        let f = fixture(3, false);
        let mut g = Graph::new(&f.store);
        let enc = f.encoder.encode(&mut g, &EncoderInput::new(&f.sentence, &f.vocab)).unwrap();
        let d = f.decoder.decode(&mut g, &enc, &f.sentence.lemmas).unwrap();
        for p in &d.predicates {
            match p.source {
                PredicateSource::Copy(i) => assert_eq!(p.label, f.sentence.lemmas[i]),
                PredicateSource::Role => {}
                PredicateSource::Generate => panic!("generated {p:?} from an empty vocabulary"),
            }
        }
    }

    #[test]
    fn gold_stages_assemble_to_gold() {
        let drs = parse_clauses(FIGURE_ONE).unwrap();
        let gold = stages::decompose(&to_tree(&drs).unwrap()).unwrap();
        let d = Decoded {
            skeleton: gold.skeleton.clone(),
            predicates: gold
                .predicates
                .iter()
                .map(|l| PredicateChoice {
                    label: l.clone(),
                    source: PredicateSource::Generate,
                })
                .collect(),
            referents: gold.referents.clone(),
            truncated: false,
        };
        let (_, out, truncated) = assemble(&d, None).unwrap();
        assert!(!truncated);
        assert_eq!(out, drs);

        let mut cut = d.clone();
        cut.skeleton.truncate(8);
        cut.predicates.truncate(2);
        cut.referents.truncate(4);
        let (_, out, truncated) = assemble(&cut, None).unwrap();
        assert!(truncated);
        out.validate().unwrap();
    }

    #[test]
    fn full_loss_gradcheck() {
        let mut f = fixture(11, true);
        let ids: Vec<_> = f.store.iter().map(|(id, _)| id).collect();
        for id in ids {
            f.store.value_mut(id).scale_assign(5.0);
        }
        let gold = stages::decompose(&to_tree(&f.drs).unwrap()).unwrap();
        let (enc, dec, vocab, s) = (f.encoder.clone(), f.decoder.clone(), f.vocab.clone(), f.sentence.clone());
        let report = crate::autodiff::gradcheck::<DecoderError, _>(
            &mut f.store,
            |g| {
                let e = enc.encode(g, &EncoderInput::new(&s, &vocab))?;
                Ok(dec.loss(g, &e, &s.lemmas, &gold)?.total)
            },
            6,
        )
        .unwrap();
        assert!(report.max_rel_error <= 1e-4, "{report:?}");
    }

    #[test]
    fn empty_sentence_is_rejected() {
        let f = fixture(0, true);
        let mut g = Graph::new(&f.store);
        let empty = EncoderInput {
            words: vec![],
            upos: vec![],
            deprels: vec![],
            heads: vec![],
        };
        assert!(matches!(
            f.encoder.encode(&mut g, &empty),
            Err(EncoderError::EmptyInput)
        ));
    }
}
