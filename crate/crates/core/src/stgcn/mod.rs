//! Spatiotemporal graph convolutional network: gated temporal convolutions
//! around a graph convolution in each ST-Conv block, two blocks, then a
//! temporal convolution that collapses the remaining time steps and a
//! per-node fully connected output.

mod bundle;
mod train;

pub use bundle::TrainedModel;
pub use train::{
    evaluate_one_step, persistence_one_step, predict, rollout, train, EpochRecord, TrainConfig, TrainReport,
};

use ndarray::{Array2, ArrayView3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{GraphOperator, OperatorKind};
use crate::tensor::{Tape, Tensor, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphConvMode {
    /// `y = M x Θ₀` with `M` the renormalized adjacency; requires `u = 1`.
    FirstOrder,
    /// `y = Σ_r T_r(M) x Θ_r` with `M` the scaled Laplacian.
    Chebyshev,
}

impl GraphConvMode {
    pub fn operator_kind(self) -> OperatorKind {
        match self {
            GraphConvMode::FirstOrder => OperatorKind::RenormalizedAdjacency,
            GraphConvMode::Chebyshev => OperatorKind::ScaledLaplacian,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GraphConvMode::FirstOrder => "first_order",
            GraphConvMode::Chebyshev => "chebyshev",
        }
    }
}

impl std::str::FromStr for GraphConvMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first_order" => Ok(GraphConvMode::FirstOrder),
            "chebyshev" => Ok(GraphConvMode::Chebyshev),
            other => Err(Error::Config(format!("unknown graph mode {other:?}"))),
        }
    }
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct StgcnConfig {
    /// History length `P`.
    pub history: usize,
    /// Input channels `K`.
    pub in_channels: usize,
    /// Channel plan inside each block: temporal, graph, temporal.
    pub channels: [usize; 3],
    /// Temporal kernel width `f_t`.
    pub kernel_t: usize,
    /// Graph kernel size `u`.
    pub graph_kernel: usize,
    pub graph_mode: GraphConvMode,
    pub dropout: f64,
    /// Adds a cropped, 1×1-projected skip from block input to block output.
    pub residual: bool,
    /// Input channel holding the predicted target.
    pub target_channel: usize,
    /// Seed for weight initialization.
    pub init_seed: u64,
}

impl Default for StgcnConfig {
    fn default() -> Self {
        Self {
            history: 12,
            in_channels: 4,
            channels: [32, 8, 32],
            kernel_t: 3,
            graph_kernel: 3,
            graph_mode: GraphConvMode::Chebyshev,
            dropout: 0.3,
            residual: false,
            target_channel: 0,
            init_seed: 0,
        }
    }
}

impl StgcnConfig {
    /// Time length after `blocks` ST-Conv blocks, if positive.
    pub fn time_after_blocks(&self, blocks: usize) -> Option<usize> {
        let shrink = 2 * blocks * self.kernel_t.checked_sub(1)?;
        self.history.checked_sub(shrink).filter(|&t| t >= 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_t == 0 || self.history == 0 || self.in_channels == 0 {
            return Err(Error::Config("history, in_channels and kernel_t must be positive".into()));
        }
        if self.channels.contains(&0) {
            return Err(Error::Config("channel counts must be positive".into()));
        }
        if self.time_after_blocks(2).is_none() {
            return Err(Error::Config(format!(
                "history {} with kernel_t {} leaves no time steps after two blocks (need P - 4(f_t - 1) >= 1)",
                self.history, self.kernel_t
            )));
        }
        match self.graph_mode {
            GraphConvMode::FirstOrder if self.graph_kernel != 1 => {
                return Err(Error::Config("first_order graph convolution requires graph_kernel = 1".into()))
            }
            _ if self.graph_kernel == 0 => return Err(Error::Config("graph_kernel must be at least 1".into())),
            _ => {}
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} must be in [0, 1)", self.dropout)));
        }
        if self.target_channel >= self.in_channels {
            return Err(Error::Config(format!(
                "target channel {} out of range for {} input channels",
                self.target_channel, self.in_channels
            )));
        }
        Ok(())
    }
}

/// Named parameter tensors in registration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    pub names: Vec<String>,
    pub tensors: Vec<Tensor>,
}

impl ParamSet {
    fn push(&mut self, name: String, t: Tensor) -> usize {
        self.names.push(name);
        self.tensors.push(t);
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.names.iter().position(|n| n == name).map(move |i| &mut self.tensors[i])
    }

    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }
}

/// Glorot-uniform slices of a `[slices, fan_in, fan_out]` kernel.
fn glorot(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let (fan_in, fan_out) = (shape[shape.len() - 2], shape[shape.len() - 1]);
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape matches")
}

/// `kernel: [f_t, C_in, 2 C_out]`, `bias: [2 C_out]` holding `b1` then `b2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalGatedConvLayer {
    pub kernel: usize,
    pub bias: usize,
    pub width: usize,
    pub c_in: usize,
    pub c_out: usize,
}

/// `kernel: [u, C_in, C_out]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphConvLayer {
    pub kernel: usize,
    pub order: usize,
    pub c_in: usize,
    pub c_out: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct STConvBlock {
    pub temporal_in: TemporalGatedConvLayer,
    pub spatial: GraphConvLayer,
    pub temporal_out: TemporalGatedConvLayer,
    /// `[C_in, C_out]` skip projection.
    pub residual: Option<usize>,
}

/// Graph polynomial basis matrices for one operator, precomputed.
#[derive(Debug, Clone)]
pub struct GraphContext {
    pub mode: GraphConvMode,
    pub basis: Vec<Array2<f64>>,
}

impl GraphContext {
    pub fn new(op: &GraphOperator, mode: GraphConvMode, order: usize) -> Result<Self> {
        if op.kind != mode.operator_kind() {
            return Err(Error::Config(format!(
                "{} graph convolution needs a {:?} operator, got {:?}",
                mode.as_str(),
                mode.operator_kind(),
                op.kind
            )));
        }
        let basis = match mode {
            GraphConvMode::FirstOrder => vec![op.matrix.clone()],
            GraphConvMode::Chebyshev => op.chebyshev_basis(order),
        };
        Ok(Self { mode, basis })
    }

    pub fn n_nodes(&self) -> usize {
        self.basis[0].nrows()
    }

    pub fn order(&self) -> usize {
        self.basis.len()
    }
}

fn array_to_tensor(m: &Array2<f64>) -> Tensor {
    Tensor::new(vec![m.nrows(), m.ncols()], m.iter().copied().collect()).expect("matrix shape")
}

/// Gated temporal convolution `(x * Θ₁ + b₁) ⊙ σ(x * Θ₂ + b₂)` on `[B, T, S, C_in]`.
pub fn temporal_gated_conv(tape: &mut Tape, x: Var, kernel: Var, bias: Var) -> Result<Var> {
    let c2 = *tape.shape(kernel).last().expect("rank-3 kernel");
    if c2 % 2 != 0 || tape.shape(bias) != [c2] {
        return Err(Error::shape("temporal_gated_conv", tape.shape(kernel), tape.shape(bias)));
    }
    let conv = tape.conv1d_time(x, kernel)?;
    let conv = tape.add(conv, bias)?;
    let c_out = c2 / 2;
    let linear = tape.slice(conv, 3, 0, c_out)?;
    let gate = tape.slice(conv, 3, c_out, c_out)?;
    let gate = tape.sigmoid(gate)?;
    tape.mul(linear, gate)
}

/// Graph convolution on `[..., S, C_in]` with `kernel: [u, C_in, C_out]`.
pub fn graph_conv(tape: &mut Tape, x: Var, kernel: Var, ctx: &GraphContext) -> Result<Var> {
    let xs = tape.shape(x).to_vec();
    let ks = tape.shape(kernel).to_vec();
    let s = ctx.n_nodes();
    if xs.len() < 2 || xs[xs.len() - 2] != s {
        return Err(Error::shape("graph_conv", &xs, &[s, s]));
    }
    if ks.len() != 3 || ks[0] != ctx.order() || ks[1] != xs[xs.len() - 1] {
        return Err(Error::shape("graph_conv", &xs, &ks));
    }
    let (c_in, c_out) = (ks[1], ks[2]);
    let mut acc: Option<Var> = None;
    for (r, basis) in ctx.basis.iter().enumerate() {
        let mixed = if ctx.mode == GraphConvMode::Chebyshev && r == 0 {
            x
        } else {
            let m = tape.constant(array_to_tensor(basis));
            tape.matmul(m, x)?
        };
        let theta = tape.slice(kernel, 0, r, 1)?;
        let theta = tape.reshape(theta, &[c_in, c_out])?;
        let term = tape.matmul(mixed, theta)?;
        acc = Some(match acc {
            None => term,
            Some(prev) => tape.add(prev, term)?,
        });
    }
    Ok(acc.expect("order >= 1"))
}

/// Mean over the batch of the squared L2 norm of `pred - target`.
pub fn l2_loss(tape: &mut Tape, pred: Var, target: Var) -> Result<Var> {
    let batch = tape.shape(pred).first().copied().unwrap_or(1).max(1);
    let diff = tape.sub(pred, target).map_err(|_| {
        Error::shape("l2_loss", tape.shape(pred), tape.shape(target))
    })?;
    let sq = tape.mul(diff, diff)?;
    let total = tape.sum(sq)?;
    tape.scale(total, 1.0 / batch as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StgcnModel {
    pub config: StgcnConfig,
    pub params: ParamSet,
    pub block1: STConvBlock,
    pub block2: STConvBlock,
    pub head: TemporalGatedConvLayer,
    pub fc_weight: usize,
    pub fc_bias: usize,
}

impl StgcnModel {
    /// Builds and initializes a model from a validated config.
    pub fn new(config: StgcnConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let mut params = ParamSet::default();
        let [c1, c2, c3] = config.channels;
        let ft = config.kernel_t;
        let u = config.graph_kernel;

        let temporal = |params: &mut ParamSet, rng: &mut ChaCha8Rng, name: &str, width: usize, c_in: usize, c_out: usize| {
            let kernel = params.push(format!("{name}.kernel"), glorot(rng, &[width, c_in, 2 * c_out]));
            let bias = params.push(format!("{name}.bias"), Tensor::zeros(&[2 * c_out]));
            TemporalGatedConvLayer {
                kernel,
                bias,
                width,
                c_in,
                c_out,
            }
        };
        let mut blocks = Vec::with_capacity(2);
        let mut c_in = config.in_channels;
        for b in 1..=2 {
            let temporal_in = temporal(&mut params, &mut rng, &format!("block{b}.temporal_in"), ft, c_in, c1);
            let spatial = GraphConvLayer {
                kernel: params.push(format!("block{b}.spatial.kernel"), glorot(&mut rng, &[u, c1, c2])),
                order: u,
                c_in: c1,
                c_out: c2,
            };
            let temporal_out = temporal(&mut params, &mut rng, &format!("block{b}.temporal_out"), ft, c2, c3);
            let residual = config
                .residual
                .then(|| params.push(format!("block{b}.residual.proj"), glorot(&mut rng, &[c_in, c3])));
            blocks.push(STConvBlock {
                temporal_in,
                spatial,
                temporal_out,
                residual,
            });
            c_in = c3;
        }
        let t_rem = config.time_after_blocks(2).expect("validated");
        let head = temporal(&mut params, &mut rng, "head.temporal", t_rem, c3, c3);
        let fc_weight = params.push("head.fc.weight".into(), glorot(&mut rng, &[c3, 1]));
        let fc_bias = params.push("head.fc.bias".into(), Tensor::zeros(&[1]));
        Ok(Self {
            config,
            params,
            block1: blocks[0],
            block2: blocks[1],
            head,
            fc_weight,
            fc_bias,
        })
    }

    pub fn zero_params(&mut self) {
        for t in &mut self.params.tensors {
            t.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Registers all parameters as trainable leaves.
    pub fn register(&self, tape: &mut Tape) -> Vec<Var> {
        self.params.tensors.iter().map(|t| tape.param(t.clone())).collect()
    }

    fn temporal_on(&self, tape: &mut Tape, vars: &[Var], layer: &TemporalGatedConvLayer, x: Var) -> Result<Var> {
        temporal_gated_conv(tape, x, vars[layer.kernel], vars[layer.bias])
    }

    /// One ST-Conv block on `[B, T, S, C]`.
    pub fn st_conv_block(
        &self,
        tape: &mut Tape,
        vars: &[Var],
        block: &STConvBlock,
        x: Var,
        ctx: &GraphContext,
    ) -> Result<Var> {
        let t_in = tape.shape(x)[1];
        let ft = self.config.kernel_t;
        if t_in < 2 * ft - 1 {
            return Err(Error::shape("st_conv_block", tape.shape(x), &[2 * ft - 1]));
        }
        let h = self.temporal_on(tape, vars, &block.temporal_in, x)?;
        let h = graph_conv(tape, h, vars[block.spatial.kernel], ctx)?;
        let h = tape.relu(h)?;
        let mut out = self.temporal_on(tape, vars, &block.temporal_out, h)?;
        if let Some(proj) = block.residual {
            let t_out = t_in - 2 * (ft - 1);
            let cropped = tape.slice(x, 1, ft - 1, t_out)?;
            let skip = tape.matmul(cropped, vars[proj])?;
            out = tape.add(out, skip)?;
        }
        Ok(out)
    }

    /// `[B, P, S, K]` → `[B, S, 1]`.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        vars: &[Var],
        input: Var,
        ctx: &GraphContext,
        training: bool,
        rng: &mut R,
    ) -> Result<Var> {
        let shape = tape.shape(input).to_vec();
        if shape.len() != 4 || shape[1] != self.config.history || shape[3] != self.config.in_channels {
            return Err(Error::shape(
                "stgcn forward",
                &shape,
                &[0, self.config.history, ctx.n_nodes(), self.config.in_channels],
            ));
        }
        if shape[2] != ctx.n_nodes() {
            return Err(Error::shape("stgcn forward", &shape, &[ctx.n_nodes(), ctx.n_nodes()]));
        }
        if ctx.order() != self.config.graph_kernel || ctx.mode != self.config.graph_mode {
            return Err(Error::Config("graph context does not match the model's graph kernel".into()));
        }
        let (batch, nodes) = (shape[0], shape[2]);
        let rate = self.config.dropout;
        let h = self.st_conv_block(tape, vars, &self.block1, input, ctx)?;
        let h = tape.dropout(h, rate, training, rng)?;
        let h = self.st_conv_block(tape, vars, &self.block2, h, ctx)?;
        let h = tape.dropout(h, rate, training, rng)?;
        let h = self.temporal_on(tape, vars, &self.head, h)?;
        let h = tape.reshape(h, &[batch, nodes, self.config.channels[2]])?;
        let y = tape.matmul(h, vars[self.fc_weight])?;
        tape.add(y, vars[self.fc_bias])
    }

    /// Inference on a batch of P×S×K windows; returns `[B][S]`.
    pub fn predict_batch(&self, windows: &[ArrayView3<'_, f64>], ctx: &GraphContext) -> Result<Vec<Vec<f64>>> {
        let input = stack_windows(windows)?;
        let mut tape = Tape::new();
        let vars = self.register(&mut tape);
        let x = tape.constant(input);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y = self.forward(&mut tape, &vars, x, ctx, false, &mut rng)?;
        let nodes = ctx.n_nodes();
        Ok(tape.value(y).data().chunks(nodes).map(<[f64]>::to_vec).collect())
    }
}

/// Stacks P×S×K windows into a `[B, P, S, K]` tensor.
pub fn stack_windows(windows: &[ArrayView3<'_, f64>]) -> Result<Tensor> {
    let first = windows
        .first()
        .ok_or_else(|| Error::Validation("empty batch".into()))?;
    let (p, s, k) = first.dim();
    let mut data = Vec::with_capacity(windows.len() * p * s * k);
    for w in windows {
        if w.dim() != (p, s, k) {
            let d = w.dim();
            return Err(Error::shape("stack_windows", &[d.0, d.1, d.2], &[p, s, k]));
        }
        data.extend(w.iter().copied());
    }
    Tensor::new(vec![windows.len(), p, s, k], data)
}
