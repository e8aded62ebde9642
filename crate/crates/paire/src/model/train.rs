//! Minibatch training: prepared sparse inputs, the chunked
//! forward/backward passes, the adaptive-moment update and [`Trainer`].
//!
//! Gradients are analytic. With `G = w_b (Q − P)` per decoder row (the
//! softmax+KL shortcut), each dense layer contributes two GEMMs and the
//! sparse input layers contribute row-scaled accumulations, mirroring the
//! forward pass.
//!
//! Determinism contract: a batch is processed in fixed chunks of
//! [`CHUNK`] rows. Chunks may run on worker threads (the `parallel`
//! feature), but their gradients are reduced sequentially in chunk order,
//! so results are bit-identical for any thread count and with the feature
//! disabled.

use ndarray::linalg::general_mat_mul;
use ndarray::{aview1, s, Array1, Array2, ArrayViewMut2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::{Autoencoder, ForwardOutput, Layout, ModelDims, Real, Seg, TrainConfig, AGG, SELF};
use crate::error::Error;
use crate::features::ModelInputs;
use crate::Result;

/// Rows per processing chunk. Fixed so that chunk boundaries — and with
/// them the floating-point reduction order — never depend on thread count.
pub const CHUNK: usize = 256;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

/// One unit's two sparse input distributions, cast to the training scalar.
/// `*_p64` keeps the exact f64 probabilities for loss accumulation, and
/// `plogp` caches `Σ p ln p` (the negated entropy) per view.
struct Item<T> {
    s_idx: Vec<u32>,
    s_val: Vec<T>,
    s_p64: Vec<f64>,
    s_plogp: f64,
    a_idx: Vec<u32>,
    a_val: Vec<T>,
    a_p64: Vec<f64>,
    a_plogp: f64,
}

impl<T: Real> Item<T> {
    fn view(&self, b: usize) -> (&[u32], &[T], &[f64], f64) {
        match b {
            SELF => (&self.s_idx, &self.s_val, &self.s_p64, self.s_plogp),
            _ => (&self.a_idx, &self.a_val, &self.a_p64, self.a_plogp),
        }
    }
}

/// Model inputs converted once into the training scalar type.
pub struct PreparedInputs<T> {
    width: usize,
    items: Vec<Item<T>>,
}

impl<T: Real> PreparedInputs<T> {
    pub fn new(inputs: &ModelInputs) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Task("no input units to process".into()));
        }
        let mut items = Vec::with_capacity(inputs.len());
        for item in inputs.items() {
            let split = |dist: &crate::features::SparseVec| {
                let mut idx = Vec::with_capacity(dist.nnz());
                let mut val = Vec::with_capacity(dist.nnz());
                let mut p64 = Vec::with_capacity(dist.nnz());
                let mut plogp = 0.0;
                for (i, p) in dist.iter() {
                    idx.push(i as u32);
                    val.push(T::from_f64(p));
                    p64.push(p);
                    plogp += p * p.ln();
                }
                (idx, val, p64, plogp)
            };
            let (s_idx, s_val, s_p64, s_plogp) = split(&item.self_dist);
            let (a_idx, a_val, a_p64, a_plogp) = split(&item.agg_dist);
            items.push(Item {
                s_idx,
                s_val,
                s_p64,
                s_plogp,
                a_idx,
                a_val,
                a_p64,
                a_plogp,
            });
        }
        Ok(PreparedInputs {
            width: inputs.width(),
            items,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Scratch buffers for one chunk: activations, decoder outputs and — when
/// training — a full flat gradient accumulator.
struct Workspace<T> {
    a1: [Array2<T>; 2],
    a2: [Array2<T>; 2],
    z: Array2<T>,
    d1: [Array2<T>; 2],
    h: [Array2<T>; 2],
    q: [Array2<T>; 2],
    s_h: Array2<T>,
    s_h2: Array2<T>,
    s_z: Array2<T>,
    grad: Vec<T>,
    loss_sum: f64,
}

impl<T: Real> Workspace<T> {
    fn new(layout: &Layout, with_grad: bool) -> Self {
        let ModelDims { width, hidden, dim } = layout.dims;
        let mk_h = || Array2::zeros((CHUNK, hidden));
        let mk_w = || Array2::zeros((CHUNK, width));
        Workspace {
            a1: [mk_h(), mk_h()],
            a2: [mk_h(), mk_h()],
            z: Array2::zeros((CHUNK, dim)),
            d1: [mk_h(), mk_h()],
            h: [mk_w(), mk_w()],
            q: [mk_w(), mk_w()],
            s_h: mk_h(),
            s_h2: mk_h(),
            s_z: Array2::zeros((CHUNK, dim)),
            grad: if with_grad {
                vec![T::zero(); layout.len()]
            } else {
                Vec::new()
            },
            loss_sum: 0.0,
        }
    }
}

/// `out[..n] = bias (broadcast)`, then `out[r] += Σ v · wt.row(j)` over the
/// sparse entries of each item, i.e. the input-side product of one layer.
fn sparse_forward<T: Real>(
    out: &mut ArrayViewMut2<'_, T>,
    bias: &[T],
    wt: &ndarray::ArrayView2<'_, T>,
    items: &[Item<T>],
    ids: &[usize],
    branch: usize,
) {
    for (r, &id) in ids.iter().enumerate() {
        let mut row = out.row_mut(r);
        row.assign(&aview1(bias));
        let (idx, val, _, _) = items[id].view(branch);
        for (&j, &v) in idx.iter().zip(val) {
            row.scaled_add(v, &wt.row(j as usize));
        }
    }
}

fn relu_inplace<T: Real>(a: &mut ArrayViewMut2<'_, T>) {
    a.mapv_inplace(|x| x.max(T::zero()));
}

/// Zero `s` wherever the matching activation is not strictly positive —
/// the relu derivative applied to an upstream gradient.
fn mask_by_activation<T: Real>(s: &mut ArrayViewMut2<'_, T>, act: &ndarray::ArrayView2<'_, T>) {
    Zip::from(s).and(act).for_each(|sv, &av| {
        if av <= T::zero() {
            *sv = T::zero();
        }
    });
}

/// Encoder pass for `ids`: fills `a1`, `a2` and `z` in the workspace.
fn chunk_encode<T: Real>(
    model: &Autoencoder<T>,
    inputs: &PreparedInputs<T>,
    ids: &[usize],
    ws: &mut Workspace<T>,
) {
    let n = ids.len();
    let l = model.layout();
    let p = model.params();
    for b in [SELF, AGG] {
        let mut a1 = ws.a1[b].slice_mut(s![..n, ..]);
        sparse_forward(
            &mut a1,
            l.bias(p, l.b1[b]),
            &l.view(p, l.w1t[b]),
            &inputs.items,
            ids,
            b,
        );
        relu_inplace(&mut a1);

        // second dense layer: hidden part by GEMM, skipped input re-added
        // sparsely, shared bias, relu
        let mut a2 = ws.a2[b].slice_mut(s![..n, ..]);
        sparse_forward(
            &mut a2,
            l.bias(p, l.b2[b]),
            &l.view(p, l.w2xt[b]),
            &inputs.items,
            ids,
            b,
        );
        general_mat_mul(
            T::one(),
            &ws.a1[b].slice(s![..n, ..]),
            &l.view(p, l.w2ht[b]),
            T::one(),
            &mut ws.a2[b].slice_mut(s![..n, ..]),
        );
        relu_inplace(&mut ws.a2[b].slice_mut(s![..n, ..]));
    }
    // linear embedding layer over the concatenated branch outputs
    {
        let mut z = ws.z.slice_mut(s![..n, ..]);
        let be = aview1(l.bias(p, l.be));
        for mut row in z.rows_mut() {
            row.assign(&be);
        }
    }
    for b in [SELF, AGG] {
        general_mat_mul(
            T::one(),
            &ws.a2[b].slice(s![..n, ..]),
            &l.view(p, l.wet[b]),
            T::one(),
            &mut ws.z.slice_mut(s![..n, ..]),
        );
    }
}

/// Decoder pass on top of a filled `z`: fills `d1` and the pre-softmax `h`.
fn chunk_decode<T: Real>(model: &Autoencoder<T>, n: usize, ws: &mut Workspace<T>) {
    let l = model.layout();
    let p = model.params();
    for b in [SELF, AGG] {
        {
            let mut d1 = ws.d1[b].slice_mut(s![..n, ..]);
            let c1 = aview1(l.bias(p, l.c1[b]));
            for mut row in d1.rows_mut() {
                row.assign(&c1);
            }
        }
        general_mat_mul(
            T::one(),
            &ws.z.slice(s![..n, ..]),
            &l.view(p, l.d1t[b]),
            T::one(),
            &mut ws.d1[b].slice_mut(s![..n, ..]),
        );
        relu_inplace(&mut ws.d1[b].slice_mut(s![..n, ..]));

        {
            let mut h = ws.h[b].slice_mut(s![..n, ..]);
            let c2 = aview1(l.bias(p, l.c2[b]));
            for mut row in h.rows_mut() {
                row.assign(&c2);
            }
        }
        general_mat_mul(
            T::one(),
            &ws.d1[b].slice(s![..n, ..]),
            &l.view(p, l.d2t[b]),
            T::one(),
            &mut ws.h[b].slice_mut(s![..n, ..]),
        );
    }
}

/// Per-row softmax statistics and loss, and (optionally) the scaled
/// gradient rows `G = w_b (Q − P)` written into `ws.q`.
///
/// The loss uses log-space softmax values — `ln Q_i = (H_i − m) − ln Σ
/// exp(H − m)` with the sum accumulated in f64 — so a Q entry that
/// underflows to zero in f32 still contributes a finite, correct term.
fn chunk_loss_and_grad<T: Real>(
    inputs: &PreparedInputs<T>,
    ids: &[usize],
    ws: &mut Workspace<T>,
    w_self: f64,
    w_agg: f64,
    with_grad: bool,
) {
    let weights = [w_self, w_agg];
    for b in [SELF, AGG] {
        let w_b = weights[b];
        for (r, &id) in ids.iter().enumerate() {
            let h_row = ws.h[b].row(r);
            let mut m = T::neg_infinity();
            for &v in h_row {
                m = m.max(v);
            }
            let mut sum = 0.0f64;
            {
                let mut q_row = ws.q[b].row_mut(r);
                for (qv, &hv) in q_row.iter_mut().zip(h_row) {
                    let e = (hv - m).exp();
                    sum += e.to_f64();
                    *qv = e;
                }
            }
            let lse = sum.ln();
            let (idx, val, p64, plogp) = inputs.items[id].view(b);
            let mut cross = 0.0f64;
            for (&i, &p) in idx.iter().zip(p64) {
                let logq = (ws.h[b][(r, i as usize)] - m).to_f64() - lse;
                cross += p * logq;
            }
            ws.loss_sum += w_b * (plogp - cross);
            if with_grad {
                let scale = T::from_f64(w_b / sum);
                let wt = T::from_f64(w_b);
                let mut q_row = ws.q[b].row_mut(r);
                q_row.mapv_inplace(|q| q * scale);
                for (&i, &p) in idx.iter().zip(val) {
                    q_row[i as usize] = q_row[i as usize] - wt * p;
                }
            }
        }
    }
}

/// Backward pass for one chunk, accumulating into `ws.grad` (zeroed here).
/// `ws.q` must already hold the scaled `G` rows.
fn chunk_backward<T: Real>(
    model: &Autoencoder<T>,
    inputs: &PreparedInputs<T>,
    ids: &[usize],
    ws: &mut Workspace<T>,
) {
    let n = ids.len();
    let l = model.layout();
    let p = model.params();
    ws.grad.fill(T::zero());

    let add_colsum = |grad: &mut [T], seg: Seg, m: &ndarray::ArrayView2<'_, T>| {
        let sums: Array1<T> = m.sum_axis(Axis(0));
        for (g, &v) in grad[seg.off..seg.off + seg.len()].iter_mut().zip(sums.iter()) {
            *g = *g + v;
        }
    };

    // decoders, accumulating dZ across branches in s_z
    for b in [SELF, AGG] {
        let g = ws.q[b].slice(s![..n, ..]);
        general_mat_mul(
            T::one(),
            &ws.d1[b].slice(s![..n, ..]).t(),
            &g,
            T::one(),
            &mut l.view_mut(&mut ws.grad, l.d2t[b]),
        );
        add_colsum(&mut ws.grad, l.c2[b], &g);

        general_mat_mul(
            T::one(),
            &g,
            &l.view(p, l.d2t[b]).t(),
            T::zero(),
            &mut ws.s_h.slice_mut(s![..n, ..]),
        );
        mask_by_activation(
            &mut ws.s_h.slice_mut(s![..n, ..]),
            &ws.d1[b].slice(s![..n, ..]),
        );
        general_mat_mul(
            T::one(),
            &ws.z.slice(s![..n, ..]).t(),
            &ws.s_h.slice(s![..n, ..]),
            T::one(),
            &mut l.view_mut(&mut ws.grad, l.d1t[b]),
        );
        add_colsum(&mut ws.grad, l.c1[b], &ws.s_h.slice(s![..n, ..]));
        general_mat_mul(
            T::one(),
            &ws.s_h.slice(s![..n, ..]),
            &l.view(p, l.d1t[b]).t(),
            if b == SELF { T::zero() } else { T::one() },
            &mut ws.s_z.slice_mut(s![..n, ..]),
        );
    }

    // embedding layer
    add_colsum(&mut ws.grad, l.be, &ws.s_z.slice(s![..n, ..]));
    for b in [SELF, AGG] {
        general_mat_mul(
            T::one(),
            &ws.a2[b].slice(s![..n, ..]).t(),
            &ws.s_z.slice(s![..n, ..]),
            T::one(),
            &mut l.view_mut(&mut ws.grad, l.wet[b]),
        );
    }

    // encoder branches
    for b in [SELF, AGG] {
        general_mat_mul(
            T::one(),
            &ws.s_z.slice(s![..n, ..]),
            &l.view(p, l.wet[b]).t(),
            T::zero(),
            &mut ws.s_h.slice_mut(s![..n, ..]),
        );
        mask_by_activation(
            &mut ws.s_h.slice_mut(s![..n, ..]),
            &ws.a2[b].slice(s![..n, ..]),
        );
        general_mat_mul(
            T::one(),
            &ws.a1[b].slice(s![..n, ..]).t(),
            &ws.s_h.slice(s![..n, ..]),
            T::one(),
            &mut l.view_mut(&mut ws.grad, l.w2ht[b]),
        );
        add_colsum(&mut ws.grad, l.b2[b], &ws.s_h.slice(s![..n, ..]));
        {
            let mut gw = l.view_mut(&mut ws.grad, l.w2xt[b]);
            for (r, &id) in ids.iter().enumerate() {
                let (idx, val, _, _) = inputs.items[id].view(b);
                for (&j, &v) in idx.iter().zip(val) {
                    gw.row_mut(j as usize).scaled_add(v, &ws.s_h.row(r));
                }
            }
        }
        general_mat_mul(
            T::one(),
            &ws.s_h.slice(s![..n, ..]),
            &l.view(p, l.w2ht[b]).t(),
            T::zero(),
            &mut ws.s_h2.slice_mut(s![..n, ..]),
        );
        mask_by_activation(
            &mut ws.s_h2.slice_mut(s![..n, ..]),
            &ws.a1[b].slice(s![..n, ..]),
        );
        {
            let mut gw = l.view_mut(&mut ws.grad, l.w1t[b]);
            for (r, &id) in ids.iter().enumerate() {
                let (idx, val, _, _) = inputs.items[id].view(b);
                for (&j, &v) in idx.iter().zip(val) {
                    gw.row_mut(j as usize).scaled_add(v, &ws.s_h2.row(r));
                }
            }
        }
        add_colsum(&mut ws.grad, l.b1[b], &ws.s_h2.slice(s![..n, ..]));
    }
}

fn process_chunk<T: Real>(
    model: &Autoencoder<T>,
    inputs: &PreparedInputs<T>,
    ids: &[usize],
    ws: &mut Workspace<T>,
    w_self: f64,
    w_agg: f64,
    with_grad: bool,
) {
    ws.loss_sum = 0.0;
    chunk_encode(model, inputs, ids, ws);
    chunk_decode(model, ids.len(), ws);
    chunk_loss_and_grad(inputs, ids, ws, w_self, w_agg, with_grad);
    if with_grad {
        chunk_backward(model, inputs, ids, ws);
    }
}

/// Encoder-only pass over all items, one embedding row per item.
pub(super) fn encode_all<T: Real>(
    model: &Autoencoder<T>,
    inputs: &PreparedInputs<T>,
) -> Array2<T> {
    let n = inputs.len();
    let dims = model.dims();
    let mut out = Array2::zeros((n, dims.dim));
    let mut ws = Workspace::new(model.layout(), false);
    let ids: Vec<usize> = (0..n).collect();
    for chunk in ids.chunks(CHUNK) {
        chunk_encode(model, inputs, chunk, &mut ws);
        out.slice_mut(s![chunk[0]..chunk[0] + chunk.len(), ..])
            .assign(&ws.z.slice(s![..chunk.len(), ..]));
    }
    out
}

/// Full forward pass with dense reconstructions, for diagnostics.
pub(super) fn forward_all<T: Real>(
    model: &Autoencoder<T>,
    inputs: &PreparedInputs<T>,
) -> ForwardOutput<T> {
    let n = inputs.len();
    let dims = model.dims();
    let mut z = Array2::zeros((n, dims.dim));
    let mut q_self = Array2::zeros((n, dims.width));
    let mut q_agg = Array2::zeros((n, dims.width));
    let mut ws = Workspace::new(model.layout(), false);
    let ids: Vec<usize> = (0..n).collect();
    let mut loss_sum = 0.0;
    for chunk in ids.chunks(CHUNK) {
        let (start, len) = (chunk[0], chunk.len());
        process_chunk(model, inputs, chunk, &mut ws, 1.0, 1.0, false);
        z.slice_mut(s![start..start + len, ..])
            .assign(&ws.z.slice(s![..len, ..]));
        // normalize the raw exp rows stored in ws.q
        for b in [SELF, AGG] {
            let target = if b == SELF { &mut q_self } else { &mut q_agg };
            for r in 0..len {
                let row = ws.q[b].row(r);
                let sum = row.iter().fold(T::zero(), |a, &v| a + v);
                Zip::from(&mut target.row_mut(start + r))
                    .and(&row)
                    .for_each(|t, &v| *t = v / sum);
            }
        }
        loss_sum += ws.loss_sum;
    }
    ForwardOutput {
        z,
        q_self,
        q_agg,
        loss: loss_sum / n as f64,
    }
}

pub(super) fn mean_loss<T: Real>(
    model: &Autoencoder<T>,
    inputs: &PreparedInputs<T>,
    w_self: f64,
    w_agg: f64,
) -> f64 {
    let mut ws = Workspace::new(model.layout(), false);
    let ids: Vec<usize> = (0..inputs.len()).collect();
    let mut loss_sum = 0.0;
    for chunk in ids.chunks(CHUNK) {
        process_chunk(model, inputs, chunk, &mut ws, w_self, w_agg, false);
        loss_sum += ws.loss_sum;
    }
    loss_sum / inputs.len() as f64
}

/// Per-item losses `w_self · KL_self + w_agg · KL_agg`, one value per input
/// item, in input order. Same log-space accounting as the training loss.
pub(super) fn item_losses<T: Real>(
    model: &Autoencoder<T>,
    inputs: &PreparedInputs<T>,
    w_self: f64,
    w_agg: f64,
) -> Vec<f64> {
    let mut ws = Workspace::new(model.layout(), false);
    let ids: Vec<usize> = (0..inputs.len()).collect();
    let mut out = vec![0.0; inputs.len()];
    let weights = [w_self, w_agg];
    for chunk in ids.chunks(CHUNK) {
        chunk_encode(model, inputs, chunk, &mut ws);
        chunk_decode(model, chunk.len(), &mut ws);
        for b in [SELF, AGG] {
            for (r, &id) in chunk.iter().enumerate() {
                let h_row = ws.h[b].row(r);
                let mut m = T::neg_infinity();
                for &v in h_row {
                    m = m.max(v);
                }
                let mut sum = 0.0f64;
                for &hv in h_row {
                    sum += (hv - m).exp().to_f64();
                }
                let lse = sum.ln();
                let (idx, _, p64, plogp) = inputs.items[id].view(b);
                let mut cross = 0.0f64;
                for (&i, &p) in idx.iter().zip(p64) {
                    let logq = (ws.h[b][(r, i as usize)] - m).to_f64() - lse;
                    cross += p * logq;
                }
                out[id] += weights[b] * (plogp - cross);
            }
        }
    }
    out
}

pub(super) fn mean_gradient<T: Real>(
    model: &Autoencoder<T>,
    inputs: &PreparedInputs<T>,
    w_self: f64,
    w_agg: f64,
) -> Vec<T> {
    let mut ws = Workspace::new(model.layout(), true);
    let ids: Vec<usize> = (0..inputs.len()).collect();
    let mut acc = vec![T::zero(); model.layout().len()];
    for chunk in ids.chunks(CHUNK) {
        process_chunk(model, inputs, chunk, &mut ws, w_self, w_agg, true);
        for (a, &g) in acc.iter_mut().zip(&ws.grad) {
            *a = *a + g;
        }
    }
    let inv = T::from_f64(1.0 / inputs.len() as f64);
    for a in &mut acc {
        *a = *a * inv;
    }
    acc
}

/// Per-training-run telemetry.
#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Mean loss per epoch, in epoch order.
    pub epoch_losses: Vec<f64>,
    /// Total unit-forward passes performed by the training loop
    /// (`epochs × |units|` when every epoch covers the full set).
    pub pair_forwards: u64,
}

/// Owns the model, optimizer state and rng across epochs. Construction
/// seeds the rng and draws the initial parameters from it; each
/// [`Trainer::run_epoch`] continues the same stream for its shuffle, so a
/// whole run is a pure function of the config and input set.
pub struct Trainer<T> {
    model: Autoencoder<T>,
    cfg: TrainConfig,
    rng: ChaCha8Rng,
    adam_m: Vec<T>,
    adam_v: Vec<T>,
    step: u64,
    epochs_done: usize,
    pair_forwards: u64,
    workspaces: Vec<Workspace<T>>,
    acc: Vec<T>,
}

impl<T: Real> Trainer<T> {
    pub fn new(cfg: &TrainConfig, input_width: usize) -> Result<Self> {
        cfg.validate()?;
        if input_width == 0 {
            return Err(Error::Config("input width must be positive".into()));
        }
        let dims = ModelDims {
            width: input_width,
            hidden: cfg.hidden,
            dim: cfg.dim,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let model = Autoencoder::init_with_rng(dims, &mut rng);
        let len = model.layout().len();
        Ok(Trainer {
            model,
            cfg: cfg.clone(),
            rng,
            adam_m: vec![T::zero(); len],
            adam_v: vec![T::zero(); len],
            step: 0,
            epochs_done: 0,
            pair_forwards: 0,
            workspaces: Vec::new(),
            acc: vec![T::zero(); len],
        })
    }

    pub fn model(&self) -> &Autoencoder<T> {
        &self.model
    }

    pub fn into_model(self) -> Autoencoder<T> {
        self.model
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    /// Unit-forward passes performed so far.
    pub fn pair_forwards(&self) -> u64 {
        self.pair_forwards
    }

    /// One pass over `inputs` in shuffled minibatches; returns the mean
    /// loss across the epoch's forward passes.
    pub fn run_epoch(&mut self, inputs: &PreparedInputs<T>) -> Result<f64> {
        if inputs.is_empty() {
            return Err(Error::Task("cannot train on an empty input set".into()));
        }
        if inputs.width() != self.model.dims().width {
            return Err(Error::Task(format!(
                "model expects input width {}, got {}",
                self.model.dims().width,
                inputs.width()
            )));
        }
        let n = inputs.len();
        let chunks_needed = self.cfg.batch_size.min(n).div_ceil(CHUNK);
        while self.workspaces.len() < chunks_needed {
            self.workspaces.push(Workspace::new(self.model.layout(), true));
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.rng);

        let mut epoch_loss = 0.0f64;
        for (batch_no, batch) in order.chunks(self.cfg.batch_size).enumerate() {
            let bsize = batch.len();
            let n_chunks = bsize.div_ceil(CHUNK);
            {
                let model = &self.model;
                let (w_self, w_agg) = (self.cfg.w_self, self.cfg.w_agg);
                let run = |(ci, ws): (usize, &mut Workspace<T>)| {
                    let ids = &batch[ci * CHUNK..(bsize.min((ci + 1) * CHUNK))];
                    process_chunk(model, inputs, ids, ws, w_self, w_agg, true);
                };
                #[cfg(feature = "parallel")]
                self.workspaces[..n_chunks]
                    .par_iter_mut()
                    .enumerate()
                    .for_each(run);
                #[cfg(not(feature = "parallel"))]
                self.workspaces[..n_chunks]
                    .iter_mut()
                    .enumerate()
                    .for_each(run);
            }

            // ordered reduction: chunk 0, 1, 2, ... regardless of which
            // thread finished first
            self.acc.fill(T::zero());
            let mut batch_loss = 0.0f64;
            for ws in &self.workspaces[..n_chunks] {
                batch_loss += ws.loss_sum;
                for (a, &g) in self.acc.iter_mut().zip(&ws.grad) {
                    *a = *a + g;
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch: self.epochs_done,
                    batch: batch_no,
                });
            }
            epoch_loss += batch_loss;
            self.pair_forwards += bsize as u64;
            self.adam_step(bsize);
        }
        self.epochs_done += 1;
        Ok(epoch_loss / n as f64)
    }

    /// Adaptive-moment update from the summed batch gradient in `self.acc`.
    fn adam_step(&mut self, batch_size: usize) {
        self.step += 1;
        let t = self.step as i32;
        let lr = T::from_f64(self.cfg.learning_rate);
        let b1 = T::from_f64(BETA1);
        let b2 = T::from_f64(BETA2);
        let one_m_b1 = T::from_f64(1.0 - BETA1);
        let one_m_b2 = T::from_f64(1.0 - BETA2);
        let inv_bc1 = T::from_f64(1.0 / (1.0 - BETA1.powi(t)));
        let inv_bc2 = T::from_f64(1.0 / (1.0 - BETA2.powi(t)));
        let eps = T::from_f64(EPSILON);
        let inv_b = T::from_f64(1.0 / batch_size as f64);
        let params = self.model.params_mut();
        for (((p, a), m), v) in params
            .iter_mut()
            .zip(&self.acc)
            .zip(&mut self.adam_m)
            .zip(&mut self.adam_v)
        {
            let g = *a * inv_b;
            *m = b1 * *m + one_m_b1 * g;
            *v = b2 * *v + one_m_b2 * g * g;
            let m_hat = *m * inv_bc1;
            let v_hat = *v * inv_bc2;
            *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// Train a fresh model on `inputs` under `cfg`.
pub fn train<T: Real>(
    cfg: &TrainConfig,
    inputs: &ModelInputs,
) -> Result<(Autoencoder<T>, TrainReport)> {
    let prepared = PreparedInputs::new(inputs)?;
    let mut trainer = Trainer::new(cfg, prepared.width())?;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        epoch_losses.push(trainer.run_epoch(&prepared)?);
    }
    let report = TrainReport {
        epoch_losses,
        pair_forwards: trainer.pair_forwards(),
    };
    Ok((trainer.into_model(), report))
}
