use std::borrow::Cow;
use std::collections::BTreeMap;

use super::{shape_err, softmax, AutodiffError, ParamId, ParamStore, Tensor};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Input { requires_grad: bool },
    Param(ParamId),
    Embed { table: ParamId, ids: Vec<usize> },
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    Softmax(Var),
    Concat(Vec<Var>),
    StackRows(Vec<Var>),
    SliceCols(Var, usize),
    Row(Var, usize),
    Sum(Vec<Var>),
    SumAll(Var),
    SoftmaxCe { logits: Var, probs: Vec<f64>, targets: Vec<usize> },
}

struct Node<'a> {
    value: Cow<'a, Tensor>,
    op: Op,
}

/// Gradient of one parameter. Embedding lookups produce row-sparse entries.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamGrad {
    Dense(Tensor),
    Rows {
        shape: (usize, usize),
        rows: BTreeMap<usize, Vec<f64>>,
    },
}

impl ParamGrad {
    pub fn to_dense(&self) -> Tensor {
        match self {
            ParamGrad::Dense(t) => t.clone(),
            ParamGrad::Rows { shape, rows } => {
                let mut t = Tensor::zeros(shape.0, shape.1);
                for (r, v) in rows {
                    t.data_mut()[r * shape.1..(r + 1) * shape.1].copy_from_slice(v);
                }
                t
            }
        }
    }

    fn norm_sq(&self) -> f64 {
        match self {
            ParamGrad::Dense(t) => t.norm_sq(),
            ParamGrad::Rows { rows, .. } => rows.values().flatten().map(|v| v * v).sum(),
        }
    }

    fn scale(&mut self, f: f64) {
        match self {
            ParamGrad::Dense(t) => t.scale_assign(f),
            ParamGrad::Rows { rows, .. } => rows.values_mut().flatten().for_each(|v| *v *= f),
        }
    }

    fn add(&mut self, other: &ParamGrad) {
        match (&mut *self, other) {
            (ParamGrad::Dense(a), ParamGrad::Dense(b)) => a.add_assign(b),
            (ParamGrad::Rows { rows: a, .. }, ParamGrad::Rows { rows: b, .. }) => {
                for (r, v) in b {
                    add_row(a, *r, v);
                }
            }
            (ParamGrad::Dense(a), b @ ParamGrad::Rows { .. }) => a.add_assign(&b.to_dense()),
            (a @ ParamGrad::Rows { .. }, ParamGrad::Dense(b)) => {
                let mut d = a.to_dense();
                d.add_assign(b);
                *a = ParamGrad::Dense(d);
            }
        }
    }
}

fn add_row(rows: &mut BTreeMap<usize, Vec<f64>>, r: usize, v: &[f64]) {
    match rows.get_mut(&r) {
        Some(acc) => acc.iter_mut().zip(v).for_each(|(a, b)| *a += b),
        None => {
            rows.insert(r, v.to_vec());
        }
    }
}

/// Parameter gradients, plus gradients of inputs that asked for one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradients {
    params: Vec<Option<ParamGrad>>,
    inputs: BTreeMap<usize, Tensor>,
}

impl Gradients {
    pub fn param(&self, id: ParamId) -> Option<&ParamGrad> {
        self.params.get(id.0).and_then(Option::as_ref)
    }

    pub fn dense(&self, id: ParamId) -> Option<Tensor> {
        self.param(id).map(ParamGrad::to_dense)
    }

    pub fn wrt(&self, v: Var) -> Option<&Tensor> {
        self.inputs.get(&v.0)
    }

    /// Adds `other` into `self`. Summing in a fixed order keeps results
    /// reproducible.
    pub fn accumulate(&mut self, other: &Gradients) {
        if self.params.len() < other.params.len() {
            self.params.resize(other.params.len(), None);
        }
        for (i, g) in other.params.iter().enumerate() {
            if let Some(g) = g {
                match &mut self.params[i] {
                    Some(acc) => acc.add(g),
                    slot @ None => *slot = Some(g.clone()),
                }
            }
        }
    }

    pub fn scale(&mut self, f: f64) {
        self.params.iter_mut().flatten().for_each(|g| g.scale(f));
    }

    pub fn norm(&self) -> f64 {
        self.params.iter().flatten().map(ParamGrad::norm_sq).sum::<f64>().sqrt()
    }

    /// Rescales so the global norm is at most `max_norm`; returns the norm
    /// before clipping.
    pub fn clip_norm(&mut self, max_norm: f64) -> f64 {
        let n = self.norm();
        if n > max_norm && n > 0.0 {
            self.scale(max_norm / n);
        }
        n
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().flatten().all(|g| match g {
            ParamGrad::Dense(t) => t.is_finite(),
            ParamGrad::Rows { rows, .. } => rows.values().flatten().all(|v| v.is_finite()),
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &ParamGrad)> {
        self.params
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.as_ref().map(|g| (ParamId(i), g)))
    }
}

/// Operation tape over a borrowed parameter store.
pub struct Graph<'a> {
    store: &'a ParamStore,
    nodes: Vec<Node<'a>>,
    param_vars: Vec<Option<Var>>,
}

fn matmul_into(a: &[f64], b: &[f64], n: usize, k: usize, m: usize, out: &mut [f64]) {
    for i in 0..n {
        let row = &mut out[i * m..(i + 1) * m];
        for p in 0..k {
            let x = a[i * k + p];
            if x == 0.0 {
                continue;
            }
            let brow = &b[p * m..(p + 1) * m];
            for (o, y) in row.iter_mut().zip(brow) {
                *o += x * y;
            }
        }
    }
}

impl<'a> Graph<'a> {
    pub fn new(store: &'a ParamStore) -> Self {
        Graph {
            store,
            nodes: Vec::new(),
            param_vars: vec![None; store.len()],
        }
    }

    pub fn store(&self) -> &'a ParamStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Cow<'a, Tensor>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.value(v).shape()
    }

    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(Cow::Owned(t), Op::Input { requires_grad: false })
    }

    /// Input whose gradient is reported by [`Gradients::wrt`].
    pub fn input_with_grad(&mut self, t: Tensor) -> Var {
        self.push(Cow::Owned(t), Op::Input { requires_grad: true })
    }

    /// The parameter as a node; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.0] {
            return v;
        }
        let v = self.push(Cow::Borrowed(self.store.value(id)), Op::Param(id));
        self.param_vars[id.0] = Some(v);
        v
    }

    /// Rows `ids` of an embedding table, stacked.
    pub fn embed(&mut self, table: ParamId, ids: &[usize]) -> Result<Var, AutodiffError> {
        let t = self.store.value(table);
        if let Some(&bad) = ids.iter().find(|&&i| i >= t.rows()) {
            return Err(shape_err("embed", format!("row {bad} of {} rows", t.rows())));
        }
        let mut data = Vec::with_capacity(ids.len() * t.cols());
        for &i in ids {
            data.extend_from_slice(t.row(i));
        }
        let value = Tensor {
            rows: ids.len(),
            cols: t.cols(),
            data,
        };
        Ok(self.push(
            Cow::Owned(value),
            Op::Embed {
                table,
                ids: ids.to_vec(),
            },
        ))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (n, k) = self.shape(a);
        let (k2, m) = self.shape(b);
        if k != k2 {
            return Err(shape_err("matmul", format!("{n}x{k} by {k2}x{m}")));
        }
        let mut out = vec![0.0; n * m];
        matmul_into(self.value(a).data(), self.value(b).data(), n, k, m, &mut out);
        Ok(self.push(Cow::Owned(Tensor { rows: n, cols: m, data: out }), Op::MatMul(a, b)))
    }

    /// `a · bᵀ`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (n, k) = self.shape(a);
        let (m, k2) = self.shape(b);
        if k != k2 {
            return Err(shape_err("matmul_t", format!("{n}x{k} by ({m}x{k2})ᵀ")));
        }
        let (av, bv) = (self.value(a).data(), self.value(b).data());
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            for j in 0..m {
                out[i * m + j] = av[i * k..(i + 1) * k]
                    .iter()
                    .zip(&bv[j * k..(j + 1) * k])
                    .map(|(x, y)| x * y)
                    .sum();
            }
        }
        Ok(self.push(Cow::Owned(Tensor { rows: n, cols: m, data: out }), Op::MatMulT(a, b)))
    }

    fn zip_with(&self, a: Var, b: Var, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor, AutodiffError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err(op, format!("{:?} vs {:?}", ta.shape(), tb.shape())));
        }
        Ok(Tensor {
            rows: ta.rows,
            cols: ta.cols,
            data: ta.data.iter().zip(&tb.data).map(|(x, y)| f(*x, *y)).collect(),
        })
    }

    /// Elementwise sum. A `1 × n` right operand is added to every row.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb && sb.0 == 1 && sb.1 == sa.1 {
            let bv = self.value(b).data().to_vec();
            let mut t = self.value(a).clone();
            for r in 0..sa.0 {
                for (x, y) in t.data[r * sa.1..(r + 1) * sa.1].iter_mut().zip(&bv) {
                    *x += y;
                }
            }
            return Ok(self.push(Cow::Owned(t), Op::AddRow(a, b)));
        }
        let t = self.zip_with(a, b, "add", |x, y| x + y)?;
        Ok(self.push(Cow::Owned(t), Op::Add(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let t = self.zip_with(a, b, "mul", |x, y| x * y)?;
        Ok(self.push(Cow::Owned(t), Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: Var, f: f64) -> Var {
        let mut t = self.value(a).clone();
        t.scale_assign(f);
        self.push(Cow::Owned(t), Op::Scale(a, f))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let mut t = self.value(a).clone();
        t.data.iter_mut().for_each(|v| *v = v.tanh());
        self.push(Cow::Owned(t), Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let mut t = self.value(a).clone();
        t.data.iter_mut().for_each(|v| *v = 1.0 / (1.0 + (-*v).exp()));
        self.push(Cow::Owned(t), Op::Sigmoid(a))
    }

    /// Row-wise softmax.
    pub fn softmax(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let mut data = Vec::with_capacity(t.len());
        for r in 0..t.rows() {
            data.extend(softmax(t.row(r), None));
        }
        let out = Tensor {
            rows: t.rows(),
            cols: t.cols(),
            data,
        };
        self.push(Cow::Owned(out), Op::Softmax(a))
    }

    /// Joins operands side by side; all must have the same row count.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        if parts.is_empty() {
            return Err(shape_err("concat", "no operands"));
        }
        let rows = self.shape(parts[0]).0;
        if parts.iter().any(|&p| self.shape(p).0 != rows) {
            return Err(shape_err("concat", "row counts differ"));
        }
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(r));
            }
        }
        Ok(self.push(Cow::Owned(Tensor { rows, cols, data }), Op::Concat(parts.to_vec())))
    }

    /// Stacks operands vertically; all must have the same column count.
    pub fn stack_rows(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        if parts.is_empty() {
            return Err(shape_err("stack_rows", "no operands"));
        }
        let cols = self.shape(parts[0]).1;
        if parts.iter().any(|&p| self.shape(p).1 != cols) {
            return Err(shape_err("stack_rows", "column counts differ"));
        }
        let mut data = Vec::new();
        for &p in parts {
            data.extend_from_slice(self.value(p).data());
        }
        let rows = data.len() / cols.max(1);
        Ok(self.push(Cow::Owned(Tensor { rows, cols, data }), Op::StackRows(parts.to_vec())))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var, AutodiffError> {
        let (rows, cols) = self.shape(a);
        if start + len > cols {
            return Err(shape_err("slice_cols", format!("{start}+{len} of {cols}")));
        }
        let t = self.value(a);
        let mut data = Vec::with_capacity(rows * len);
        for r in 0..rows {
            data.extend_from_slice(&t.row(r)[start..start + len]);
        }
        Ok(self.push(Cow::Owned(Tensor { rows, cols: len, data }), Op::SliceCols(a, start)))
    }

    pub fn row(&mut self, a: Var, r: usize) -> Result<Var, AutodiffError> {
        let (rows, _) = self.shape(a);
        if r >= rows {
            return Err(shape_err("row", format!("row {r} of {rows}")));
        }
        let t = Tensor::row_vector(self.value(a).row(r).to_vec());
        Ok(self.push(Cow::Owned(t), Op::Row(a, r)))
    }

    /// Elementwise sum of equally shaped operands.
    pub fn sum(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        if parts.is_empty() {
            return Err(shape_err("sum_over", "no operands"));
        }
        let mut t = self.value(parts[0]).clone();
        for &p in &parts[1..] {
            if self.shape(p) != t.shape() {
                return Err(shape_err("sum_over", "shapes differ"));
            }
            t.add_assign(self.value(p));
        }
        Ok(self.push(Cow::Owned(t), Op::Sum(parts.to_vec())))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push(Cow::Owned(Tensor::scalar(s)), Op::SumAll(a))
    }

    /// Negative log of the total probability of `targets` under a softmax of
    /// the `1 × k` logits restricted to `mask`.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: Var,
        targets: &[usize],
        mask: Option<&[bool]>,
    ) -> Result<Var, AutodiffError> {
        let t = self.value(logits);
        if t.rows() != 1 {
            return Err(shape_err("softmax_cross_entropy", format!("logits {:?}", t.shape())));
        }
        if let Some(m) = mask {
            if m.len() != t.cols() {
                return Err(shape_err("softmax_cross_entropy", "mask length"));
            }
        }
        if targets.is_empty() || targets.iter().any(|&i| i >= t.cols()) {
            return Err(shape_err("softmax_cross_entropy", "target out of range"));
        }
        let probs = softmax(t.data(), mask);
        let mass: f64 = targets.iter().map(|&i| probs[i]).sum();
        let loss = -mass.ln();
        Ok(self.push(
            Cow::Owned(Tensor::scalar(loss)),
            Op::SoftmaxCe {
                logits,
                probs,
                targets: targets.to_vec(),
            },
        ))
    }

    /// Reverse sweep from a scalar loss.
    pub fn backward(&self, loss: Var) -> Result<Gradients, AutodiffError> {
        if self.shape(loss) != (1, 1) {
            return Err(shape_err("backward", format!("loss shape {:?}", self.shape(loss))));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::scalar(1.0));
        let mut out = Gradients {
            params: vec![None; self.store.len()],
            inputs: BTreeMap::new(),
        };

        fn acc(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
            match &mut grads[v.0] {
                Some(x) => x.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        }

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Input { requires_grad } => {
                    if *requires_grad {
                        out.inputs.insert(i, g);
                    }
                }
                Op::Param(id) => {
                    if self.store.param(*id).trainable {
                        let slot = &mut out.params[id.0];
                        match slot {
                            Some(p) => p.add(&ParamGrad::Dense(g)),
                            None => *slot = Some(ParamGrad::Dense(g)),
                        }
                    }
                }
                Op::Embed { table, ids } => {
                    let p = self.store.param(*table);
                    if p.trainable {
                        let slot = out.params[table.0].get_or_insert_with(|| ParamGrad::Rows {
                            shape: p.value.shape(),
                            rows: BTreeMap::new(),
                        });
                        let mut rows = BTreeMap::new();
                        for (k, &id) in ids.iter().enumerate() {
                            add_row(&mut rows, id, g.row(k));
                        }
                        slot.add(&ParamGrad::Rows {
                            shape: p.value.shape(),
                            rows,
                        });
                    }
                }
                Op::MatMul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (n, k, m) = (ta.rows, ta.cols, tb.cols);
                    // ga = g · bᵀ
                    let mut ga = vec![0.0; n * k];
                    for r in 0..n {
                        for c in 0..k {
                            ga[r * k + c] = g.data[r * m..(r + 1) * m]
                                .iter()
                                .zip(&tb.data[c * m..(c + 1) * m])
                                .map(|(x, y)| x * y)
                                .sum();
                        }
                    }
                    // gb = aᵀ · g
                    let mut gb = vec![0.0; k * m];
                    for r in 0..n {
                        for p in 0..k {
                            let x = ta.data[r * k + p];
                            if x == 0.0 {
                                continue;
                            }
                            for (o, y) in gb[p * m..(p + 1) * m].iter_mut().zip(&g.data[r * m..(r + 1) * m]) {
                                *o += x * y;
                            }
                        }
                    }
                    acc(&mut grads, *a, Tensor { rows: n, cols: k, data: ga });
                    acc(&mut grads, *b, Tensor { rows: k, cols: m, data: gb });
                }
                Op::MatMulT(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (n, k, m) = (ta.rows, ta.cols, tb.rows);
                    // ga = g · b
                    let mut ga = vec![0.0; n * k];
                    matmul_into(&g.data, &tb.data, n, m, k, &mut ga);
                    // gb = gᵀ · a
                    let mut gb = vec![0.0; m * k];
                    for r in 0..n {
                        for j in 0..m {
                            let x = g.data[r * m + j];
                            if x == 0.0 {
                                continue;
                            }
                            for (o, y) in gb[j * k..(j + 1) * k].iter_mut().zip(&ta.data[r * k..(r + 1) * k]) {
                                *o += x * y;
                            }
                        }
                    }
                    acc(&mut grads, *a, Tensor { rows: n, cols: k, data: ga });
                    acc(&mut grads, *b, Tensor { rows: m, cols: k, data: gb });
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g);
                }
                Op::AddRow(a, b) => {
                    let mut gb = vec![0.0; g.cols];
                    for r in 0..g.rows {
                        for (o, y) in gb.iter_mut().zip(g.row(r)) {
                            *o += y;
                        }
                    }
                    acc(&mut grads, *b, Tensor::row_vector(gb));
                    acc(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let mut ga = g.clone();
                    ga.data.iter_mut().zip(&tb.data).for_each(|(x, y)| *x *= y);
                    let mut gb = g;
                    gb.data.iter_mut().zip(&ta.data).for_each(|(x, y)| *x *= y);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Scale(a, f) => {
                    let mut g = g;
                    g.scale_assign(*f);
                    acc(&mut grads, *a, g);
                }
                Op::Tanh(a) => {
                    let mut g = g;
                    g.data
                        .iter_mut()
                        .zip(&node.value.data)
                        .for_each(|(x, y)| *x *= 1.0 - y * y);
                    acc(&mut grads, *a, g);
                }
                Op::Sigmoid(a) => {
                    let mut g = g;
                    g.data
                        .iter_mut()
                        .zip(&node.value.data)
                        .for_each(|(x, y)| *x *= y * (1.0 - y));
                    acc(&mut grads, *a, g);
                }
                Op::Softmax(a) => {
                    let y = &node.value;
                    let mut ga = g;
                    for r in 0..y.rows {
                        let yr = y.row(r);
                        let gr = &mut ga.data[r * y.cols..(r + 1) * y.cols];
                        let dot: f64 = gr.iter().zip(yr).map(|(x, y)| x * y).sum();
                        gr.iter_mut().zip(yr).for_each(|(x, y)| *x = y * (*x - dot));
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let (rows, cols) = self.shape(p);
                        let mut data = Vec::with_capacity(rows * cols);
                        for r in 0..rows {
                            data.extend_from_slice(&g.row(r)[offset..offset + cols]);
                        }
                        offset += cols;
                        acc(&mut grads, p, Tensor { rows, cols, data });
                    }
                }
                Op::StackRows(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let (rows, cols) = self.shape(p);
                        let data = g.data[offset..offset + rows * cols].to_vec();
                        offset += rows * cols;
                        acc(&mut grads, p, Tensor { rows, cols, data });
                    }
                }
                Op::SliceCols(a, start) => {
                    let (rows, cols) = self.shape(*a);
                    let mut ga = Tensor::zeros(rows, cols);
                    for r in 0..rows {
                        ga.data[r * cols + start..r * cols + start + g.cols].copy_from_slice(g.row(r));
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Row(a, r) => {
                    let (rows, cols) = self.shape(*a);
                    let mut ga = Tensor::zeros(rows, cols);
                    ga.data[r * cols..(r + 1) * cols].copy_from_slice(&g.data);
                    acc(&mut grads, *a, ga);
                }
                Op::Sum(parts) => {
                    for &p in parts {
                        acc(&mut grads, p, g.clone());
                    }
                }
                Op::SumAll(a) => {
                    let (rows, cols) = self.shape(*a);
                    acc(&mut grads, *a, Tensor::filled(rows, cols, g.item()));
                }
                Op::SoftmaxCe {
                    logits,
                    probs,
                    targets,
                } => {
                    let mass: f64 = targets.iter().map(|&t| probs[t]).sum();
                    let mut gl = probs.clone();
                    if mass > 0.0 {
                        for &t in targets {
                            gl[t] -= probs[t] / mass;
                        }
                    }
                    let mut gl = Tensor::row_vector(gl);
                    gl.scale_assign(g.item());
                    acc(&mut grads, *logits, gl);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_at_zero() {
        let store = ParamStore::new(0);
        let mut g = Graph::new(&store);
        let x = g.input_with_grad(Tensor::zeros(1, 4));
        let y = g.tanh(x);
        assert_eq!(g.value(y).data(), &[0.0; 4]);
        let s = g.sum_all(y);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.wrt(x).unwrap().data(), &[1.0; 4]);
    }

    #[test]
    fn concat_shapes() {
        let store = ParamStore::new(0);
        let mut g = Graph::new(&store);
        let a = g.input(Tensor::zeros(1, 2));
        let b = g.input(Tensor::zeros(1, 3));
        let c = g.concat(&[a, b]).unwrap();
        assert_eq!(g.shape(c), (1, 5));
        let d = g.input(Tensor::zeros(2, 3));
        assert!(matches!(g.concat(&[a, d]), Err(AutodiffError::ShapeError { .. })));
        assert!(matches!(g.matmul(a, b), Err(AutodiffError::ShapeError { .. })));
    }

    #[test]
    fn uniform_logits_give_log_k() {
        let store = ParamStore::new(0);
        for k in [2usize, 5, 17] {
            for target in [0, k - 1] {
                let mut g = Graph::new(&store);
                let l = g.input(Tensor::filled(1, k, 0.3));
                let loss = g.softmax_cross_entropy(l, &[target], None).unwrap();
                assert!((g.value(loss).item() - (k as f64).ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sum_of_squares_gradient() {
        let mut store = ParamStore::new(0);
        let w = store.insert("w", Tensor::row_vector(vec![1.0, 2.0, 3.0]), true);
        let mut g = Graph::new(&store);
        let wv = g.param(w);
        let sq = g.mul(wv, wv).unwrap();
        let loss = g.sum_all(sq);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.dense(w).unwrap().data(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn reused_parameter_sums_gradients() {
        let mut store = ParamStore::new(0);
        let w = store.insert("w", Tensor::row_vector(vec![0.5, -1.0]), true);
        let mut g = Graph::new(&store);
        let a = g.param(w);
        let b = g.scale(a, 3.0);
        let c = g.add(a, b).unwrap();
        let loss = g.sum_all(c);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.dense(w).unwrap().data(), &[4.0, 4.0]);
    }

    #[test]
    fn backward_needs_a_scalar() {
        let store = ParamStore::new(0);
        let mut g = Graph::new(&store);
        let a = g.input(Tensor::zeros(1, 2));
        assert!(matches!(g.backward(a), Err(AutodiffError::ShapeError { .. })));
    }

    #[test]
    fn embedding_gradients_are_sparse_and_skip_frozen_tables() {
        let mut store = ParamStore::new(0);
        let e = store.uniform("emb", 5, 2);
        let frozen = store.uniform("frozen", 5, 2);
        store.set_trainable(frozen, false);
        let mut g = Graph::new(&store);
        let x = g.embed(e, &[3, 1, 3]).unwrap();
        let y = g.embed(frozen, &[0]).unwrap();
        let sx = g.sum_all(x);
        let sy = g.sum_all(y);
        let loss = g.add(sx, sy).unwrap();
        let grads = g.backward(loss).unwrap();
        match grads.param(e).unwrap() {
            ParamGrad::Rows { rows, .. } => {
                assert_eq!(rows.keys().copied().collect::<Vec<_>>(), vec![1, 3]);
                assert_eq!(rows[&3], vec![2.0, 2.0]);
            }
            other => panic!("{other:?}"),
        }
        assert!(grads.param(frozen).is_none());
    }

    #[test]
    fn marginal_cross_entropy_over_a_target_set() {
        let store = ParamStore::new(0);
        let mut g = Graph::new(&store);
        let l = g.input_with_grad(Tensor::row_vector(vec![0.0, 0.0, 0.0, 9.0]));
        let loss = g
            .softmax_cross_entropy(l, &[0, 1], Some(&[true, true, true, false]))
            .unwrap();
        assert!((g.value(loss).item() - (1.5f64).ln()).abs() < 1e-12);
        let gr = g.backward(loss).unwrap();
        let d = gr.wrt(l).unwrap().data();
        assert!((d[0] - (1.0 / 3.0 - 0.5)).abs() < 1e-12);
        assert!((d[2] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(d[3], 0.0);
    }

    #[test]
    fn clipping_bounds_the_norm() {
        let mut store = ParamStore::new(0);
        let w = store.insert("w", Tensor::row_vector(vec![3.0, 4.0]), true);
        let mut g = Graph::new(&store);
        let a = g.param(w);
        let sq = g.mul(a, a).unwrap();
        let loss = g.sum_all(sq);
        let mut grads = g.backward(loss).unwrap();
        assert_eq!(grads.clip_norm(5.0), 10.0);
        assert!((grads.norm() - 5.0).abs() < 1e-12);
    }
}
