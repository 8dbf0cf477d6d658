use rand::Rng;

use super::kernels::{mm, mm_at, mm_bt};
use super::Tensor;
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy)]
enum MatMulLayout {
    /// Equal leading dims on both sides.
    Batched,
    /// `a` is a plain matrix shared across the batch of `b`.
    SharedLeft,
    /// `b` is a plain matrix shared across the batch of `a`.
    SharedRight,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add { a: Var, b: Var },
    Sub { a: Var, b: Var },
    Mul { a: Var, b: Var },
    Scale { a: Var, factor: f64 },
    Sigmoid { a: Var },
    Relu { a: Var },
    MatMul {
        a: Var,
        b: Var,
        layout: MatMulLayout,
        batch: usize,
        m: usize,
        k: usize,
        n: usize,
    },
    Reshape { a: Var },
    Slice {
        a: Var,
        outer: usize,
        dim: usize,
        inner: usize,
        start: usize,
        len: usize,
    },
    Concat {
        parts: Vec<Var>,
        outer: usize,
        inner: usize,
        dims: Vec<usize>,
    },
    Conv1dTime {
        x: Var,
        kernel: Var,
        batch: usize,
        time: usize,
        nodes: usize,
        c_in: usize,
        width: usize,
        c_out: usize,
    },
    Sum { a: Var },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
    needs_grad: bool,
}

/// Records operations in execution order and replays them backwards.
///
/// A tape supports exactly one backward pass; build a new tape for the next
/// forward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
    backward_done: bool,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn check_open(&self) -> Result<()> {
        if self.backward_done {
            return Err(Error::Tape("tape already consumed by backward".into()));
        }
        Ok(())
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad: false,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
            needs_grad: requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// A trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Gradient of the backward root with respect to a trainable leaf.
    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Elementwise `a + b` where `b`'s shape equals `a`'s trailing dims.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check_open()?;
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sb.len() > sa.len() || sa[sa.len() - sb.len()..] != *sb {
            return Err(Error::shape("add", sa, sb));
        }
        let va = self.value(a);
        let vb = self.value(b).data();
        let nb = vb.len();
        let data: Vec<f64> = va
            .data()
            .chunks(nb)
            .flat_map(|chunk| chunk.iter().zip(vb).map(|(x, y)| x + y))
            .collect();
        let out = Tensor::with_shape(va.shape().to_vec(), data);
        Ok(self.push(out, Op::Add { a, b }, &[a, b]))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    fn zip_map(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (va, vb) = (self.value(a), self.value(b));
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::with_shape(va.shape().to_vec(), data)
    }

    fn map(&self, a: Var, f: impl Fn(f64) -> f64) -> Tensor {
        let va = self.value(a);
        Tensor::with_shape(va.shape().to_vec(), va.data().iter().map(|&x| f(x)).collect())
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check_open()?;
        self.same_shape("sub", a, b)?;
        let out = self.zip_map(a, b, |x, y| x - y);
        Ok(self.push(out, Op::Sub { a, b }, &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check_open()?;
        self.same_shape("multiply_elementwise", a, b)?;
        let out = self.zip_map(a, b, |x, y| x * y);
        Ok(self.push(out, Op::Mul { a, b }, &[a, b]))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        self.check_open()?;
        let out = self.map(a, |x| x * factor);
        Ok(self.push(out, Op::Scale { a, factor }, &[a]))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.check_open()?;
        let out = self.map(a, sigmoid);
        Ok(self.push(out, Op::Sigmoid { a }, &[a]))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.check_open()?;
        let out = self.map(a, |x| x.max(0.0));
        Ok(self.push(out, Op::Relu { a }, &[a]))
    }

    /// Matrix product over the last two dims. Leading dims must match, or
    /// one side must be a plain matrix that is shared across the other's
    /// leading dims.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check_open()?;
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if sa.len() < 2 || sb.len() < 2 || sa[sa.len() - 1] != sb[sb.len() - 2] {
            return Err(Error::shape("matmul", &sa, &sb));
        }
        let (m, k) = (sa[sa.len() - 2], sa[sa.len() - 1]);
        let n = sb[sb.len() - 1];
        let (pa, pb) = (&sa[..sa.len() - 2], &sb[..sb.len() - 2]);
        let (layout, prefix) = if pa == pb {
            (MatMulLayout::Batched, pa.to_vec())
        } else if pb.is_empty() {
            (MatMulLayout::SharedRight, pa.to_vec())
        } else if pa.is_empty() {
            (MatMulLayout::SharedLeft, pb.to_vec())
        } else {
            return Err(Error::shape("matmul", &sa, &sb));
        };
        let batch: usize = prefix.iter().product();
        let (da, db) = (self.value(a).data(), self.value(b).data());
        let mut out = vec![0.0; batch * m * n];
        match layout {
            MatMulLayout::SharedRight => mm(batch * m, k, n, da, db, &mut out),
            MatMulLayout::SharedLeft => {
                for i in 0..batch {
                    mm(m, k, n, da, &db[i * k * n..(i + 1) * k * n], &mut out[i * m * n..(i + 1) * m * n]);
                }
            }
            MatMulLayout::Batched => {
                for i in 0..batch {
                    mm(
                        m,
                        k,
                        n,
                        &da[i * m * k..(i + 1) * m * k],
                        &db[i * k * n..(i + 1) * k * n],
                        &mut out[i * m * n..(i + 1) * m * n],
                    );
                }
            }
        }
        let mut shape = prefix;
        shape.extend([m, n]);
        let op = Op::MatMul {
            a,
            b,
            layout,
            batch,
            m,
            k,
            n,
        };
        Ok(self.push(Tensor::with_shape(shape, out), op, &[a, b]))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        self.check_open()?;
        let out = self.value(a).clone().reshape(shape)?;
        Ok(self.push(out, Op::Reshape { a }, &[a]))
    }

    /// `len` entries of `axis` starting at `start`.
    pub fn slice(&mut self, a: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        self.check_open()?;
        let shape = self.shape(a).to_vec();
        if axis >= shape.len() || len == 0 || start + len > shape[axis] {
            return Err(Error::shape("slice", &shape, &[axis, start, len]));
        }
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let dim = shape[axis];
        let src = self.value(a).data();
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * dim + start) * inner;
            data.extend_from_slice(&src[base..base + len * inner]);
        }
        let mut out_shape = shape;
        out_shape[axis] = len;
        let op = Op::Slice {
            a,
            outer,
            dim,
            inner,
            start,
            len,
        };
        Ok(self.push(Tensor::with_shape(out_shape, data), op, &[a]))
    }

    /// Concatenates along `axis`; all other dims must agree.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        self.check_open()?;
        let first = parts
            .first()
            .ok_or_else(|| Error::Tape("concat of zero tensors".into()))?;
        let base = self.shape(*first).to_vec();
        if axis >= base.len() {
            return Err(Error::shape("concat", &base, &[axis]));
        }
        let mut dims = Vec::with_capacity(parts.len());
        for p in parts {
            let s = self.shape(*p);
            let ok = s.len() == base.len()
                && s.iter().zip(&base).enumerate().all(|(i, (x, y))| i == axis || x == y);
            if !ok {
                return Err(Error::shape("concat", &base, s));
            }
            dims.push(s[axis]);
        }
        let outer: usize = base[..axis].iter().product();
        let inner: usize = base[axis + 1..].iter().product();
        let total: usize = dims.iter().sum();
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for (p, &d) in parts.iter().zip(&dims) {
                let src = self.value(*p).data();
                data.extend_from_slice(&src[o * d * inner..(o + 1) * d * inner]);
            }
        }
        let mut shape = base;
        shape[axis] = total;
        let op = Op::Concat {
            parts: parts.to_vec(),
            outer,
            inner,
            dims,
        };
        Ok(self.push(Tensor::with_shape(shape, data), op, parts))
    }

    /// Concatenates along the last (channel) axis.
    pub fn concat_channels(&mut self, parts: &[Var]) -> Result<Var> {
        let rank = parts
            .first()
            .map(|p| self.shape(*p).len())
            .ok_or_else(|| Error::Tape("concat of zero tensors".into()))?;
        self.concat(parts, rank.saturating_sub(1))
    }

    /// Valid 1-D convolution along time, shared across nodes:
    /// `x: [B, T, S, C_in]`, `kernel: [f_t, C_in, C_out]` → `[B, T - f_t + 1, S, C_out]`.
    pub fn conv1d_time(&mut self, x: Var, kernel: Var) -> Result<Var> {
        self.check_open()?;
        let (sx, sk) = (self.shape(x).to_vec(), self.shape(kernel).to_vec());
        if sx.len() != 4 || sk.len() != 3 || sx[3] != sk[1] || sk[0] > sx[1] {
            return Err(Error::shape("conv1d_time", &sx, &sk));
        }
        let (batch, time, nodes, c_in) = (sx[0], sx[1], sx[2], sx[3]);
        let (width, c_out) = (sk[0], sk[2]);
        let t_out = time - width + 1;
        let (dx, dk) = (self.value(x).data(), self.value(kernel).data());
        let mut out = vec![0.0; batch * t_out * nodes * c_out];
        let (in_frame, out_frame) = (nodes * c_in, nodes * c_out);
        for b in 0..batch {
            for t in 0..t_out {
                let o = &mut out[(b * t_out + t) * out_frame..(b * t_out + t + 1) * out_frame];
                for f in 0..width {
                    let xi = (b * time + t + f) * in_frame;
                    mm(
                        nodes,
                        c_in,
                        c_out,
                        &dx[xi..xi + in_frame],
                        &dk[f * c_in * c_out..(f + 1) * c_in * c_out],
                        o,
                    );
                }
            }
        }
        let op = Op::Conv1dTime {
            x,
            kernel,
            batch,
            time,
            nodes,
            c_in,
            width,
            c_out,
        };
        Ok(self.push(
            Tensor::with_shape(vec![batch, t_out, nodes, c_out], out),
            op,
            &[x, kernel],
        ))
    }

    /// Sum of all entries as a scalar.
    pub fn sum(&mut self, a: Var) -> Result<Var> {
        self.check_open()?;
        let s: f64 = self.value(a).data().iter().sum();
        Ok(self.push(Tensor::scalar(s), Op::Sum { a }, &[a]))
    }

    /// Inverted dropout. Identity when not training or `rate == 0`.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, rate: f64, training: bool, rng: &mut R) -> Result<Var> {
        self.check_open()?;
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate must be in [0, 1), got {rate}")));
        }
        if !training || rate == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 / (1.0 - rate);
        let shape = self.shape(x).to_vec();
        let n: usize = shape.iter().product();
        let mask: Vec<f64> = (0..n)
            .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let m = self.constant(Tensor::with_shape(shape, mask));
        self.mul(x, m)
    }

    /// Populates gradients of every trainable leaf with respect to `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        self.check_open()?;
        if !self.value(loss).is_scalar() {
            return Err(Error::Tape(format!(
                "backward requires a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        self.backward_done = true;
        let n = self.nodes.len();
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; n];
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let nodes = &self.nodes;
            let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
                if !nodes[v.0].needs_grad {
                    return;
                }
                let slot = grads[v.0].get_or_insert_with(|| vec![0.0; nodes[v.0].value.numel()]);
                f(slot);
            };
            match &node.op {
                Op::Leaf => {}
                Op::Add { a, b } => {
                    acc(*a, &mut |ga| add_into(ga, &g));
                    acc(*b, &mut |gb| {
                        let nb = gb.len();
                        for chunk in g.chunks(nb) {
                            add_into(gb, chunk);
                        }
                    });
                }
                Op::Sub { a, b } => {
                    acc(*a, &mut |ga| add_into(ga, &g));
                    acc(*b, &mut |gb| gb.iter_mut().zip(&g).for_each(|(x, y)| *x -= y));
                }
                Op::Mul { a, b } => {
                    let (va, vb) = (nodes[a.0].value.data(), nodes[b.0].value.data());
                    acc(*a, &mut |ga| {
                        for ((x, gy), bv) in ga.iter_mut().zip(&g).zip(vb) {
                            *x += gy * bv;
                        }
                    });
                    acc(*b, &mut |gb| {
                        for ((x, gy), av) in gb.iter_mut().zip(&g).zip(va) {
                            *x += gy * av;
                        }
                    });
                }
                Op::Scale { a, factor } => {
                    acc(*a, &mut |ga| ga.iter_mut().zip(&g).for_each(|(x, y)| *x += factor * y));
                }
                Op::Sigmoid { a } => {
                    let y = node.value.data();
                    acc(*a, &mut |ga| {
                        for ((x, gy), yv) in ga.iter_mut().zip(&g).zip(y) {
                            *x += gy * yv * (1.0 - yv);
                        }
                    });
                }
                Op::Relu { a } => {
                    let xin = nodes[a.0].value.data();
                    acc(*a, &mut |ga| {
                        for ((x, gy), xv) in ga.iter_mut().zip(&g).zip(xin) {
                            if *xv > 0.0 {
                                *x += gy;
                            }
                        }
                    });
                }
                Op::MatMul {
                    a,
                    b,
                    layout,
                    batch,
                    m,
                    k,
                    n,
                } => {
                    let (m, k, n, batch) = (*m, *k, *n, *batch);
                    let (va, vb) = (nodes[a.0].value.data(), nodes[b.0].value.data());
                    acc(*a, &mut |ga| match layout {
                        MatMulLayout::SharedRight => mm_bt(batch * m, n, k, &g, vb, ga),
                        MatMulLayout::SharedLeft => {
                            for i in 0..batch {
                                mm_bt(m, n, k, &g[i * m * n..(i + 1) * m * n], &vb[i * k * n..(i + 1) * k * n], ga);
                            }
                        }
                        MatMulLayout::Batched => {
                            for i in 0..batch {
                                mm_bt(
                                    m,
                                    n,
                                    k,
                                    &g[i * m * n..(i + 1) * m * n],
                                    &vb[i * k * n..(i + 1) * k * n],
                                    &mut ga[i * m * k..(i + 1) * m * k],
                                );
                            }
                        }
                    });
                    acc(*b, &mut |gb| match layout {
                        MatMulLayout::SharedRight => mm_at(batch * m, k, n, va, &g, gb),
                        MatMulLayout::SharedLeft => {
                            for i in 0..batch {
                                mm_at(m, k, n, va, &g[i * m * n..(i + 1) * m * n], &mut gb[i * k * n..(i + 1) * k * n]);
                            }
                        }
                        MatMulLayout::Batched => {
                            for i in 0..batch {
                                mm_at(
                                    m,
                                    k,
                                    n,
                                    &va[i * m * k..(i + 1) * m * k],
                                    &g[i * m * n..(i + 1) * m * n],
                                    &mut gb[i * k * n..(i + 1) * k * n],
                                );
                            }
                        }
                    });
                }
                Op::Reshape { a } => acc(*a, &mut |ga| add_into(ga, &g)),
                Op::Slice {
                    a,
                    outer,
                    dim,
                    inner,
                    start,
                    len,
                } => {
                    acc(*a, &mut |ga| {
                        for o in 0..*outer {
                            let dst = (o * dim + start) * inner;
                            let src = o * len * inner;
                            add_into(&mut ga[dst..dst + len * inner], &g[src..src + len * inner]);
                        }
                    });
                }
                Op::Concat {
                    parts,
                    outer,
                    inner,
                    dims,
                } => {
                    let total: usize = dims.iter().sum();
                    let mut offset = 0;
                    for (p, &d) in parts.iter().zip(dims) {
                        acc(*p, &mut |gp| {
                            for o in 0..*outer {
                                let src = (o * total + offset) * inner;
                                add_into(&mut gp[o * d * inner..(o + 1) * d * inner], &g[src..src + d * inner]);
                            }
                        });
                        offset += d;
                    }
                }
                Op::Conv1dTime {
                    x,
                    kernel,
                    batch,
                    time,
                    nodes: n_nodes,
                    c_in,
                    width,
                    c_out,
                } => {
                    let (batch, time, n_nodes, c_in, width, c_out) = (*batch, *time, *n_nodes, *c_in, *width, *c_out);
                    let t_out = time - width + 1;
                    let (in_frame, out_frame) = (n_nodes * c_in, n_nodes * c_out);
                    let (vx, vk) = (nodes[x.0].value.data(), nodes[kernel.0].value.data());
                    acc(*x, &mut |gx| {
                        for b in 0..batch {
                            for t in 0..t_out {
                                let go = &g[(b * t_out + t) * out_frame..(b * t_out + t + 1) * out_frame];
                                for f in 0..width {
                                    let xi = (b * time + t + f) * in_frame;
                                    mm_bt(
                                        n_nodes,
                                        c_out,
                                        c_in,
                                        go,
                                        &vk[f * c_in * c_out..(f + 1) * c_in * c_out],
                                        &mut gx[xi..xi + in_frame],
                                    );
                                }
                            }
                        }
                    });
                    acc(*kernel, &mut |gk| {
                        for b in 0..batch {
                            for t in 0..t_out {
                                let go = &g[(b * t_out + t) * out_frame..(b * t_out + t + 1) * out_frame];
                                for f in 0..width {
                                    let xi = (b * time + t + f) * in_frame;
                                    mm_at(
                                        n_nodes,
                                        c_in,
                                        c_out,
                                        &vx[xi..xi + in_frame],
                                        go,
                                        &mut gk[f * c_in * c_out..(f + 1) * c_in * c_out],
                                    );
                                }
                            }
                        }
                    });
                }
                Op::Sum { a } => {
                    let gy = g[0];
                    acc(*a, &mut |ga| ga.iter_mut().for_each(|x| *x += gy));
                }
            }
            if node.requires_grad {
                grads[i] = Some(g);
            }
        }

        self.grads = grads
            .into_iter()
            .zip(&self.nodes)
            .map(|(g, node)| match g {
                Some(g) if node.requires_grad => Some(Tensor::with_shape(node.value.shape().to_vec(), g)),
                None if node.requires_grad => Some(Tensor::zeros(node.value.shape())),
                _ => None,
            })
            .collect();
        Ok(())
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn relu_and_sigmoid_values() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::from_vec(vec![-1.0, 0.0, 2.0]));
        let r = tape.relu(x).unwrap();
        assert_eq!(tape.value(r).data(), &[0.0, 0.0, 2.0]);
        let z = tape.constant(Tensor::scalar(0.0));
        let s = tape.sigmoid(z).unwrap();
        assert_eq!(tape.value(s).item(), 0.5);
    }

    #[test]
    fn square_sum_gradient_accumulates_fan_out() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::from_vec(vec![1.0, 2.0, 3.0]));
        let sq = tape.mul(x, x).unwrap();
        let loss = tape.sum(sq).unwrap();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn sigmoid_times_weight() {
        let mut tape = Tape::new();
        let w = tape.param(Tensor::scalar(1.0));
        let z = tape.constant(Tensor::scalar(0.0));
        let s = tape.sigmoid(z).unwrap();
        let y = tape.mul(s, w).unwrap();
        tape.backward(y).unwrap();
        assert_eq!(tape.grad(w).unwrap().item(), 0.5);
    }

    #[test]
    fn non_scalar_backward_and_reuse_rejected() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::from_vec(vec![1.0, 2.0]));
        assert!(tape.backward(x).is_err());
        let s = tape.sum(x).unwrap();
        tape.backward(s).unwrap();
        assert!(matches!(tape.backward(s), Err(Error::Tape(_))));
        assert!(tape.relu(x).is_err());
    }

    #[test]
    fn conv_output_length() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::zeros(&[1, 12, 2, 3]));
        let k = tape.constant(Tensor::zeros(&[3, 3, 5]));
        let y = tape.conv1d_time(x, k).unwrap();
        assert_eq!(tape.shape(y), &[1, 10, 2, 5]);
        let long = tape.constant(Tensor::zeros(&[13, 3, 5]));
        assert!(matches!(tape.conv1d_time(x, long), Err(Error::Shape { op: "conv1d_time", .. })));
    }

    #[test]
    fn shape_errors_name_op() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::zeros(&[2, 3]));
        let b = tape.constant(Tensor::zeros(&[2, 3]));
        match tape.matmul(a, b) {
            Err(Error::Shape { op, left, right }) => {
                assert_eq!(op, "matmul");
                assert_eq!((left, right), (vec![2, 3], vec![2, 3]));
            }
            other => panic!("unexpected {other:?}"),
        }
        let c = tape.constant(Tensor::zeros(&[4]));
        assert!(tape.add(a, c).is_err());
    }

    #[test]
    fn slice_and_concat_are_inverse() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new(vec![2, 4], (0..8).map(f64::from).collect()).unwrap());
        let l = tape.slice(x, 1, 0, 1).unwrap();
        let r = tape.slice(x, 1, 1, 3).unwrap();
        assert_eq!(tape.value(l).data(), &[0.0, 4.0]);
        let back = tape.concat_channels(&[l, r]).unwrap();
        assert_eq!(tape.value(back), tape.value(x));
    }

    #[test]
    fn dropout_identity_cases() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::full(&[10], 1.0));
        assert_eq!(tape.dropout(x, 0.0, true, &mut rng).unwrap(), x);
        assert_eq!(tape.dropout(x, 0.5, false, &mut rng).unwrap(), x);
        assert!(tape.dropout(x, 1.0, true, &mut rng).is_err());
    }

    #[test]
    fn dropout_preserves_mean() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut tape = Tape::new();
        let n = 100_000;
        let x = tape.constant(Tensor::full(&[n], 1.0));
        let y = tape.dropout(x, 0.3, true, &mut rng).unwrap();
        let v = tape.value(y).data();
        let mean = v.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        let zeros = v.iter().filter(|&&e| e == 0.0).count() as f64 / n as f64;
        assert!((zeros - 0.3).abs() < 0.01);
    }
}
