//! The multi-self-supervised autoencoder.
//!
//! Two encoder branches process the self view and the aggregated view of a
//! unit. Each branch is `dense(W → h) + relu`, then a skip connection
//! concatenates the branch's raw input back onto that hidden vector, and a
//! second `dense(h + W → h) + relu` follows. The two branch outputs are
//! concatenated and a shared *linear* embedding layer maps them to the
//! `d`-dimensional embedding `z`. Two decoder branches mirror the encoder
//! (`dense(d → h) + relu`, `dense(h → W)`), and a row softmax turns each
//! decoder output `H` into a reconstructed distribution `Q`. The training
//! loss is `w_self · KL(P_self ‖ Q_self) + w_agg · KL(P_agg ‖ Q_agg)`.
//!
//! All parameters live in one flat buffer; [`Layout`] names the segments
//! and hands out matrix views. Weight matrices are stored transposed
//! (input-major) so both the sparse input products and the batched GEMMs
//! walk contiguous rows.
//!
//! The scalar type is generic: `f32` for production training, `f64` for
//! the finite-difference and hand-computed oracles in the tests.

mod train;

pub use train::{train, PreparedInputs, TrainReport, Trainer};

use ndarray::{Array2, ArrayView2, ArrayViewMut2, NdFloat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::features::ModelInputs;
use crate::Result;

/// Floating-point scalar the model can train in.
pub trait Real: NdFloat {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    fn from_f64(x: f64) -> f32 {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> f64 {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Training hyperparameters. The defaults are the ones every reported
/// number in the README was produced with.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Embedding dimension `d`.
    pub dim: usize,
    /// Hidden width `h` of every dense layer.
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Weight of the self-view reconstruction term.
    pub w_self: f64,
    /// Weight of the aggregated-view reconstruction term.
    pub w_agg: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 128,
            hidden: 256,
            epochs: 30,
            batch_size: 1024,
            // Batch 1024 over a few thousand pairs gives only ~250 Adam
            // steps in 30 epochs, so the step size has to be generous;
            // 1e-2 converges inside that budget where 1e-3 stalls early.
            learning_rate: 1e-2,
            w_self: 1.0,
            w_agg: 1.0,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.hidden == 0 {
            return Err(Error::Config("dim and hidden must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.w_self < 0.0 || self.w_agg < 0.0 || self.w_self + self.w_agg == 0.0 {
            return Err(Error::Config(
                "loss weights must be non-negative and not both zero".into(),
            ));
        }
        Ok(())
    }
}

/// Input width, hidden width and embedding dimension of one model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    /// Input width `W`: `2F` in pair mode, `F` in node mode.
    pub width: usize,
    pub hidden: usize,
    pub dim: usize,
}

/// One parameter matrix inside the flat buffer.
#[derive(Debug, Clone, Copy)]
pub struct Seg {
    off: usize,
    rows: usize,
    cols: usize,
}

impl Seg {
    fn len(&self) -> usize {
        self.rows * self.cols
    }
}

/// Branch indices into the per-branch segment arrays.
pub const SELF: usize = 0;
pub const AGG: usize = 1;

/// Offsets of every parameter segment. Weight matrices are stored
/// transposed: `w1t[b]` is `(W, h)` and maps input → first hidden layer,
/// `w2ht[b]`/`w2xt[b]` are the `(h, h)` and `(W, h)` halves of the
/// post-skip layer (hidden part and skipped-input part of one logical
/// `(h + W, h)` matrix), `wet[b]` is the `(h, d)` embedding-layer half fed
/// by branch `b`, `d1t[b]` is `(d, h)` and `d2t[b]` is `(h, W)`.
#[derive(Debug, Clone)]
pub struct Layout {
    pub dims: ModelDims,
    pub w1t: [Seg; 2],
    pub b1: [Seg; 2],
    pub w2ht: [Seg; 2],
    pub w2xt: [Seg; 2],
    pub b2: [Seg; 2],
    pub wet: [Seg; 2],
    pub be: Seg,
    pub d1t: [Seg; 2],
    pub c1: [Seg; 2],
    pub d2t: [Seg; 2],
    pub c2: [Seg; 2],
    len: usize,
}

impl Layout {
    pub fn new(dims: ModelDims) -> Self {
        struct Alloc {
            off: usize,
        }
        impl Alloc {
            fn seg(&mut self, rows: usize, cols: usize) -> Seg {
                let s = Seg {
                    off: self.off,
                    rows,
                    cols,
                };
                self.off += rows * cols;
                s
            }
            fn pair(&mut self, rows: usize, cols: usize) -> [Seg; 2] {
                [self.seg(rows, cols), self.seg(rows, cols)]
            }
        }
        let (w, h, d) = (dims.width, dims.hidden, dims.dim);
        let mut a = Alloc { off: 0 };
        let w1t = a.pair(w, h);
        let b1 = a.pair(1, h);
        let w2ht = a.pair(h, h);
        let w2xt = a.pair(w, h);
        let b2 = a.pair(1, h);
        let wet = a.pair(h, d);
        let be = a.seg(1, d);
        let d1t = a.pair(d, h);
        let c1 = a.pair(1, h);
        let d2t = a.pair(h, w);
        let c2 = a.pair(1, w);
        let off = a.off;
        Layout {
            dims,
            w1t,
            b1,
            w2ht,
            w2xt,
            b2,
            wet,
            be,
            d1t,
            c1,
            d2t,
            c2,
            len: off,
        }
    }

    /// Total parameter count.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn view<'a, T>(&self, buf: &'a [T], s: Seg) -> ArrayView2<'a, T> {
        ArrayView2::from_shape((s.rows, s.cols), &buf[s.off..s.off + s.len()])
            .expect("segment inside buffer")
    }

    pub fn view_mut<'a, T>(&self, buf: &'a mut [T], s: Seg) -> ArrayViewMut2<'a, T> {
        ArrayViewMut2::from_shape((s.rows, s.cols), &mut buf[s.off..s.off + s.len()])
            .expect("segment inside buffer")
    }

    /// Bias row as a slice.
    pub fn bias<'a, T>(&self, buf: &'a [T], s: Seg) -> &'a [T] {
        &buf[s.off..s.off + s.len()]
    }

    /// Segments in initialization order with their Glorot bound
    /// (`None` for biases, which start at zero). The post-skip halves and
    /// the embedding-layer halves use the fan of the *logical* matrix they
    /// belong to, not of the stored block.
    fn init_plan(&self) -> Vec<(Seg, Option<f64>)> {
        let (w, h, d) = (
            self.dims.width as f64,
            self.dims.hidden as f64,
            self.dims.dim as f64,
        );
        let glorot = |fan_in: f64, fan_out: f64| Some((6.0 / (fan_in + fan_out)).sqrt());
        let mut plan = Vec::new();
        for b in [SELF, AGG] {
            plan.push((self.w1t[b], glorot(w, h)));
            plan.push((self.b1[b], None));
            plan.push((self.w2ht[b], glorot(h + w, h)));
            plan.push((self.w2xt[b], glorot(h + w, h)));
            plan.push((self.b2[b], None));
        }
        plan.push((self.wet[SELF], glorot(2.0 * h, d)));
        plan.push((self.wet[AGG], glorot(2.0 * h, d)));
        plan.push((self.be, None));
        for b in [SELF, AGG] {
            plan.push((self.d1t[b], glorot(d, h)));
            plan.push((self.c1[b], None));
            plan.push((self.d2t[b], glorot(h, w)));
            plan.push((self.c2[b], None));
        }
        plan
    }
}

/// A parameterized autoencoder: the layout plus one flat parameter buffer.
#[derive(Debug, Clone)]
pub struct Autoencoder<T> {
    layout: Layout,
    params: Vec<T>,
}

impl<T: Real> Autoencoder<T> {
    /// Glorot-initialized model from a fresh seeded stream. [`Trainer`]
    /// uses the identical draws, so a 0-epoch training run leaves the
    /// parameters exactly equal to this.
    pub fn init(dims: ModelDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Autoencoder::init_with_rng(dims, &mut rng)
    }

    pub(crate) fn init_with_rng(dims: ModelDims, rng: &mut ChaCha8Rng) -> Self {
        let layout = Layout::new(dims);
        let mut params = vec![T::zero(); layout.len()];
        for (seg, bound) in layout.init_plan() {
            if let Some(bound) = bound {
                for p in &mut params[seg.off..seg.off + seg.len()] {
                    // symmetric uniform, drawn in f64 then cast so the f32
                    // and f64 models start from the same values
                    *p = T::from_f64((rng.random::<f64>() * 2.0 - 1.0) * bound);
                }
            }
        }
        Autoencoder { layout, params }
    }

    pub fn dims(&self) -> ModelDims {
        self.layout.dims
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    /// Mutable parameter access, used by the optimizer and by the
    /// finite-difference checks.
    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    /// Encoder-only pass over every item: the embedding matrix, one row
    /// per input item, in item order.
    pub fn embed(&self, inputs: &ModelInputs) -> Result<Array2<T>> {
        let prepared = PreparedInputs::new(inputs)?;
        self.check_width(prepared.width())?;
        Ok(train::encode_all(self, &prepared))
    }

    /// Like [`Autoencoder::embed`] but for inputs prepared once up front.
    pub fn embed_prepared(&self, inputs: &PreparedInputs<T>) -> Result<Array2<T>> {
        self.check_width(inputs.width())?;
        Ok(train::encode_all(self, inputs))
    }

    /// Full forward pass, materializing the reconstructed distributions.
    /// Dense `n × W` outputs — meant for diagnostics and tests, not the
    /// training loop.
    pub fn forward(&self, inputs: &ModelInputs) -> Result<ForwardOutput<T>> {
        let prepared = PreparedInputs::new(inputs)?;
        self.check_width(prepared.width())?;
        Ok(train::forward_all(self, &prepared))
    }

    /// Mean loss `w_self · KL_self + w_agg · KL_agg` over all items.
    pub fn loss(&self, inputs: &PreparedInputs<T>, w_self: f64, w_agg: f64) -> Result<f64> {
        self.check_width(inputs.width())?;
        Ok(train::mean_loss(self, inputs, w_self, w_agg))
    }

    /// Gradient of [`Autoencoder::loss`] with respect to every parameter,
    /// flat, in [`Layout`] order.
    pub fn gradient(&self, inputs: &PreparedInputs<T>, w_self: f64, w_agg: f64) -> Result<Vec<T>> {
        self.check_width(inputs.width())?;
        Ok(train::mean_gradient(self, inputs, w_self, w_agg))
    }

    /// Loss of each item separately: `w_self · KL_self + w_agg · KL_agg`,
    /// in input order. The mean of the returned values equals
    /// [`Autoencoder::loss`]. Negated, these act as compatibility scores:
    /// inputs the decoders reconstruct well score high, which is what the
    /// link predictor ranks candidate pairs by.
    pub fn item_losses(&self, inputs: &PreparedInputs<T>, w_self: f64, w_agg: f64) -> Result<Vec<f64>> {
        self.check_width(inputs.width())?;
        Ok(train::item_losses(self, inputs, w_self, w_agg))
    }

    fn check_width(&self, input_width: usize) -> Result<()> {
        if input_width != self.layout.dims.width {
            return Err(Error::Task(format!(
                "model expects input width {}, got {}",
                self.layout.dims.width, input_width
            )));
        }
        Ok(())
    }
}

/// Dense outputs of a diagnostic forward pass.
pub struct ForwardOutput<T> {
    /// Embeddings, `n × d`.
    pub z: Array2<T>,
    /// Reconstructed self-view distributions, `n × W`, rows sum to 1.
    pub q_self: Array2<T>,
    /// Reconstructed aggregated-view distributions, `n × W`.
    pub q_agg: Array2<T>,
    /// Mean loss over the items at unit loss weights.
    pub loss: f64,
}

/// Numerically stable in-place softmax of one row.
pub fn softmax_row<T: Real>(row: &mut [T]) {
    if row.is_empty() {
        return;
    }
    let max = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let mut sum = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum = sum + *v;
    }
    for v in row.iter_mut() {
        *v = *v / sum;
    }
}

/// `KL(p ‖ q) = Σ_i p_i ln(p_i / q_i)` over the support of `p`, for two
/// dense distributions. Zero `q` under nonzero `p` gives `+inf`.
pub fn kl_div(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut kl = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            kl += pi * (pi / qi).ln();
        }
    }
    kl
}
