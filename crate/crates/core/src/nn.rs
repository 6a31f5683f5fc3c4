//! Layers shared by the encoders and the decoder.

use std::cmp::Ordering;

use crate::autodiff::{AutodiffError, Graph, ParamId, ParamStore, Tensor, Var};

/// `x W + b`.
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
}

impl Linear {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, output: usize, bias: bool) -> Self {
        Linear {
            w: store.uniform(&format!("{name}.w"), input, output),
            b: bias.then(|| store.zeros(&format!("{name}.b"), 1, output)),
        }
    }

    pub fn forward(&self, g: &mut Graph, x: Var) -> Result<Var, AutodiffError> {
        let w = g.param(self.w);
        let y = g.matmul(x, w)?;
        match self.b {
            Some(b) => {
                let b = g.param(b);
                g.add(y, b)
            }
            None => Ok(y),
        }
    }
}

/// Bilinear attention over encoder states with an output layer:
/// `tanh([h ; Σ α_i s_i] W + b)` where `α = softmax((h Q) Sᵀ)`.
#[derive(Debug, Clone, Copy)]
pub struct Attention {
    pub query: ParamId,
    pub out: Linear,
}

impl Attention {
    pub fn new(store: &mut ParamStore, name: &str, hidden: usize, state_dim: usize) -> Self {
        Attention {
            query: store.uniform(&format!("{name}.query"), hidden, state_dim),
            out: Linear::new(store, &format!("{name}.out"), hidden + state_dim, hidden, true),
        }
    }

    pub fn readout(&self, g: &mut Graph, h: Var, states: Var) -> Result<Var, AutodiffError> {
        let q = g.param(self.query);
        let q = g.matmul(h, q)?;
        let scores = g.matmul_t(q, states)?;
        let alpha = g.softmax(scores);
        let ctx = g.matmul(alpha, states)?;
        let both = g.concat(&[h, ctx])?;
        let z = self.out.forward(g, both)?;
        Ok(g.tanh(z))
    }
}

/// Scores for one joint softmax over a generation vocabulary followed by
/// every input position: `[o G + b ; (o C) Sᵀ]`.
#[derive(Debug, Clone, Copy)]
pub struct CopyGenerator {
    pub generate: Linear,
    pub copy: ParamId,
}

impl CopyGenerator {
    pub fn logits(&self, g: &mut Graph, o: Var, states: Var) -> Result<Var, AutodiffError> {
        let gen = self.generate.forward(g, o)?;
        let cw = g.param(self.copy);
        let q = g.matmul(o, cw)?;
        let copy = g.matmul_t(q, states)?;
        g.concat(&[gen, copy])
    }
}

/// LSTM with gate layout `[i f o u]` and forget bias 1.
#[derive(Debug, Clone, Copy)]
pub struct Lstm {
    pub w: ParamId,
    pub u: ParamId,
    pub b: ParamId,
    pub hidden: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
}

impl Lstm {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize) -> Self {
        let w = store.uniform(&format!("{name}.w"), input, 4 * hidden);
        let u = store.uniform(&format!("{name}.u"), hidden, 4 * hidden);
        let mut bias = Tensor::zeros(1, 4 * hidden);
        bias.data_mut()[hidden..2 * hidden].fill(1.0);
        let b = store.insert(&format!("{name}.b"), bias, true);
        Lstm { w, u, b, hidden }
    }

    pub fn zero_state(&self, g: &mut Graph) -> LstmState {
        let z = g.input(Tensor::zeros(1, self.hidden));
        LstmState { h: z, c: z }
    }

    /// `x W` for a stack of inputs, computed once for a whole sequence.
    pub fn project(&self, g: &mut Graph, xs: Var) -> Result<Var, AutodiffError> {
        let w = g.param(self.w);
        g.matmul(xs, w)
    }

    /// One step given the precomputed input projection `xw` (1 × 4H).
    pub fn step_projected(&self, g: &mut Graph, xw: Var, s: LstmState) -> Result<LstmState, AutodiffError> {
        let u = g.param(self.u);
        let b = g.param(self.b);
        let hu = g.matmul(s.h, u)?;
        let z = g.sum(&[xw, hu])?;
        let z = g.add(z, b)?;
        let h = self.hidden;
        let i = g.slice_cols(z, 0, h)?;
        let f = g.slice_cols(z, h, h)?;
        let o = g.slice_cols(z, 2 * h, h)?;
        let u = g.slice_cols(z, 3 * h, h)?;
        let (i, f, o, u) = (g.sigmoid(i), g.sigmoid(f), g.sigmoid(o), g.tanh(u));
        let keep = g.mul(f, s.c)?;
        let write = g.mul(i, u)?;
        let c = g.add(keep, write)?;
        let tc = g.tanh(c);
        let h = g.mul(o, tc)?;
        Ok(LstmState { h, c })
    }

    pub fn step(&self, g: &mut Graph, x: Var, s: LstmState) -> Result<LstmState, AutodiffError> {
        let xw = self.project(g, x)?;
        self.step_projected(g, xw, s)
    }

    /// Runs over the rows of `xs`; states are returned in input order.
    pub fn run(&self, g: &mut Graph, xs: Var, reverse: bool) -> Result<Vec<LstmState>, AutodiffError> {
        let n = g.shape(xs).0;
        let proj = self.project(g, xs)?;
        let mut s = self.zero_state(g);
        let mut out = vec![s; n];
        let order: Vec<usize> = if reverse { (0..n).rev().collect() } else { (0..n).collect() };
        for t in order {
            let xw = g.row(proj, t)?;
            s = self.step_projected(g, xw, s)?;
            out[t] = s;
        }
        Ok(out)
    }
}

/// Single-layer bidirectional LSTM. Row `t` of the states is
/// `[forward_t ; backward_t]`; the summary is `[forward_n ; backward_1]`.
#[derive(Debug, Clone, Copy)]
pub struct BiLstm {
    pub fwd: Lstm,
    pub bwd: Lstm,
}

impl BiLstm {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize) -> Self {
        BiLstm {
            fwd: Lstm::new(store, &format!("{name}.fwd"), input, hidden),
            bwd: Lstm::new(store, &format!("{name}.bwd"), input, hidden),
        }
    }

    pub fn run(&self, g: &mut Graph, xs: Var) -> Result<(Var, Var), AutodiffError> {
        let f = self.fwd.run(g, xs, false)?;
        let b = self.bwd.run(g, xs, true)?;
        let n = f.len();
        let rows = (0..n)
            .map(|t| g.concat(&[f[t].h, b[t].h]))
            .collect::<Result<Vec<_>, _>>()?;
        let states = g.stack_rows(&rows)?;
        let summary = g.concat(&[f[n - 1].h, b[0].h])?;
        Ok((states, summary))
    }
}

/// Child-sum tree-LSTM cell.
#[derive(Debug, Clone, Copy)]
pub struct ChildSum {
    pub w_iou: ParamId,
    pub u_iou: ParamId,
    pub b_iou: ParamId,
    pub w_f: ParamId,
    pub u_f: ParamId,
    pub b_f: ParamId,
    pub hidden: usize,
}

impl ChildSum {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize) -> Self {
        ChildSum {
            w_iou: store.uniform(&format!("{name}.w_iou"), input, 3 * hidden),
            u_iou: store.uniform(&format!("{name}.u_iou"), hidden, 3 * hidden),
            b_iou: store.zeros(&format!("{name}.b_iou"), 1, 3 * hidden),
            w_f: store.uniform(&format!("{name}.w_f"), input, hidden),
            u_f: store.uniform(&format!("{name}.u_f"), hidden, hidden),
            b_f: store.insert(&format!("{name}.b_f"), Tensor::filled(1, hidden, 1.0), true),
            hidden,
        }
    }

    /// Node state from its input row and its children's states.
    pub fn node(&self, g: &mut Graph, x: Var, children: &[LstmState]) -> Result<LstmState, AutodiffError> {
        let h = self.hidden;
        let w_iou = g.param(self.w_iou);
        let b_iou = g.param(self.b_iou);
        let xw = g.matmul(x, w_iou)?;
        let mut iou = g.add(xw, b_iou)?;

        // Canonical child order makes the floating-point sums independent of
        // the order children are listed in.
        let mut kids = children.to_vec();
        kids.sort_by(|a, b| compare_states(g, a, b));

        let mut forget_sum = None;
        if !kids.is_empty() {
            let hs: Vec<Var> = kids.iter().map(|k| k.h).collect();
            let cs: Vec<Var> = kids.iter().map(|k| k.c).collect();
            let hk = g.stack_rows(&hs)?;
            let ck = g.stack_rows(&cs)?;
            let ones = g.input(Tensor::filled(1, kids.len(), 1.0));
            let h_tilde = g.matmul(ones, hk)?;
            let u_iou = g.param(self.u_iou);
            let hu = g.matmul(h_tilde, u_iou)?;
            iou = g.add(iou, hu)?;

            let w_f = g.param(self.w_f);
            let u_f = g.param(self.u_f);
            let b_f = g.param(self.b_f);
            let xf = g.matmul(x, w_f)?;
            let xf = g.add(xf, b_f)?;
            let hf = g.matmul(hk, u_f)?;
            let z = g.add(hf, xf)?;
            let f = g.sigmoid(z);
            let fc = g.mul(f, ck)?;
            forget_sum = Some(g.matmul(ones, fc)?);
        }
        let i = g.slice_cols(iou, 0, h)?;
        let o = g.slice_cols(iou, h, h)?;
        let u = g.slice_cols(iou, 2 * h, h)?;
        let (i, o, u) = (g.sigmoid(i), g.sigmoid(o), g.tanh(u));
        let mut c = g.mul(i, u)?;
        if let Some(fs) = forget_sum {
            c = g.add(c, fs)?;
        }
        let tc = g.tanh(c);
        let h = g.mul(o, tc)?;
        Ok(LstmState { h, c })
    }

    /// Runs bottom-up over a dependency tree. `heads` uses CoNLL-U
    /// numbering; `xs` has one row per token.
    pub fn run(&self, g: &mut Graph, xs: Var, heads: &[usize]) -> Result<(Vec<LstmState>, usize), AutodiffError> {
        let n = heads.len();
        let mut children = vec![Vec::new(); n];
        let mut root = None;
        for (i, &h) in heads.iter().enumerate() {
            if h == 0 {
                root = Some(i);
            } else {
                children[h - 1].push(i);
            }
        }
        let root = root.ok_or_else(|| crate::autodiff::shape_err("tree", "no root"))?;
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![(root, false)];
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                order.push(v);
            } else {
                stack.push((v, true));
                for &c in &children[v] {
                    stack.push((c, false));
                }
            }
        }
        if order.len() != n {
            return Err(crate::autodiff::shape_err("tree", "heads do not form a tree"));
        }
        let mut states: Vec<Option<LstmState>> = vec![None; n];
        for v in order {
            let x = g.row(xs, v)?;
            let kids: Vec<LstmState> = children[v].iter().map(|&c| states[c].unwrap()).collect();
            states[v] = Some(self.node(g, x, &kids)?);
        }
        Ok((states.into_iter().map(Option::unwrap).collect(), root))
    }
}

fn compare_states(g: &Graph, a: &LstmState, b: &LstmState) -> Ordering {
    let key = |s: &LstmState| (g.value(s.h).data().to_vec(), g.value(s.c).data().to_vec());
    let (ka, kb) = (key(a), key(b));
    ka.0.iter()
        .chain(&ka.1)
        .zip(kb.0.iter().chain(&kb.1))
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::gradcheck;

    fn sigmoid(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn lstm_step_matches_hand_computation() {
        let mut store = ParamStore::new(1);
        let lstm = Lstm::new(&mut store, "l", 2, 1);
        let x = [0.3, -0.7];
        let mut g = Graph::new(&store);
        let xv = g.input(Tensor::row_vector(x.to_vec()));
        let s0 = lstm.zero_state(&mut g);
        let s = lstm.step(&mut g, xv, s0).unwrap();
        let w = store.value(lstm.w);
        let b = store.value(lstm.b);
        let z: Vec<f64> = (0..4).map(|k| x[0] * w.get(0, k) + x[1] * w.get(1, k) + b.get(0, k)).collect();
        let c = sigmoid(z[0]) * z[3].tanh();
        let h = sigmoid(z[2]) * c.tanh();
        assert!((g.value(s.h).item() - h).abs() < 1e-12);
        assert!((g.value(s.c).item() - c).abs() < 1e-12);
    }

    #[test]
    fn lstm_and_child_sum_gradients() {
        let mut store = ParamStore::new(2);
        let lstm = BiLstm::new(&mut store, "bi", 3, 4);
        let cell = ChildSum::new(&mut store, "tree", 8, 5);
        for (_, p) in store.clone().iter() {
            let id = store.get(&p.name).unwrap();
            store.value_mut(id).scale_assign(8.0);
        }
        let xs = Tensor::new(3, 3, (0..9).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let heads = [2, 0, 2];
        let report = gradcheck::<AutodiffError, _>(
            &mut store,
            |g| {
                let x = g.input(xs.clone());
                let (states, summary) = lstm.run(g, x)?;
                let (tree, root) = cell.run(g, states, &heads)?;
                let all = g.concat(&[tree[root].h, tree[0].c, summary])?;
                let sq = g.mul(all, all)?;
                Ok(g.sum_all(sq))
            },
            40,
        )
        .unwrap();
        assert!(report.max_rel_error <= 1e-4, "{report:?}");
    }

    #[test]
    fn cyclic_heads_are_rejected() {
        let mut store = ParamStore::new(0);
        let cell = ChildSum::new(&mut store, "t", 2, 2);
        let mut g = Graph::new(&store);
        let xs = g.input(Tensor::zeros(3, 2));
        assert!(cell.run(&mut g, xs, &[0, 3, 2]).is_err());
    }
}
