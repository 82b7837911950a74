//! Tape-based reverse-mode automatic differentiation.
//!
//! A [`Graph`] records every primitive as it executes. Values live on the
//! graph and are addressed through copyable [`Var`] handles. The tape is built
//! fresh for every forward pass; [`Graph::backward`] walks it once, in exact
//! reverse creation order, and may not be called twice on the same graph.
//!
//! Only nodes that (transitively) depend on a leaf created with
//! `requires_grad = true` take part in the backward pass, so tensors bound as
//! constants are detached from the gradient computation.

use alloc::vec;
use alloc::vec::Vec;

use crate::signal::StftConfig;
use crate::{Error, Result, Scalar, Tensor};

mod conv;
mod elementwise;
mod gemm;
mod linalg;
mod norm;
mod reduce;
mod shape;
mod spectral;

pub use elementwise::{BinaryOp, UnaryOp};
pub use reduce::ReduceOp;

/// Handle to a value recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

pub(crate) enum Op<T> {
    Leaf,
    Binary {
        op: BinaryOp,
        lhs: usize,
        rhs: usize,
    },
    Unary {
        op: UnaryOp<T>,
        input: usize,
    },
    Reduce {
        op: ReduceOp,
        input: usize,
        axis: usize,
        argmax: Vec<usize>,
    },
    ReduceAll {
        mean: bool,
        input: usize,
    },
    Reshape {
        input: usize,
    },
    Transpose {
        input: usize,
    },
    MatMul {
        lhs: usize,
        rhs: usize,
    },
    Softmax {
        input: usize,
    },
    Conv {
        input: usize,
        weight: usize,
        bias: Option<usize>,
        geom: conv::ConvGeom,
    },
    ConvTranspose {
        input: usize,
        weight: usize,
        bias: Option<usize>,
        geom: conv::ConvGeom,
    },
    Interpolate {
        input: usize,
    },
    Subsample {
        input: usize,
        step: usize,
    },
    RepeatLast {
        input: usize,
    },
    Slice {
        input: usize,
        axis: usize,
        start: usize,
    },
    Concat {
        inputs: Vec<usize>,
        axis: usize,
    },
    PadLast {
        input: usize,
    },
    ChannelNorm {
        input: usize,
        gain: usize,
        bias: usize,
        xhat: Vec<T>,
        inv_std: Vec<T>,
    },
    StftMag {
        input: usize,
        cfg: StftConfig,
        spectrum: Vec<f64>,
    },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Recording of executed primitives.
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
    grads: Vec<Option<Vec<T>>>,
    backward_done: bool,
    macs: u64,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            grads: Vec::new(),
            backward_done: false,
            macs: 0,
        }
    }

    /// Records an input tensor.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records a tensor that never receives a gradient.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient of the last backward pass with respect to `v`, when `v`
    /// participated in it.
    pub fn grad(&self, v: Var) -> Option<Tensor<T>> {
        let g = self.grads.get(v.0)?.as_ref()?;
        Some(Tensor::from_parts(
            self.nodes[v.0].value.shape().to_vec(),
            g.clone(),
        ))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Multiply-accumulate operations executed by convolution and matrix
    /// product primitives since the graph was created.
    pub fn macs(&self) -> u64 {
        self.macs
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, inputs: &[usize]) -> Var {
        let requires_grad = inputs.iter().any(|&i| self.nodes[i].requires_grad);
        // Non-differentiable results need no saved state.
        let op = if requires_grad { op } else { Op::Leaf };
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn val(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    /// Propagates d`loss`/d(leaf) to every leaf that requires a gradient.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.backward_done {
            return Err(Error::BackwardAlreadyRun);
        }
        let shape = self.val(loss).shape();
        if self.val(loss).numel() != 1 {
            return Err(Error::NotScalar(shape.to_vec()));
        }
        self.backward_done = true;
        self.grads = (0..self.nodes.len()).map(|_| None).collect();
        if !self.nodes[loss.0].requires_grad {
            return Ok(());
        }
        self.grads[loss.0] = Some(vec![T::one()]);
        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            if matches!(self.nodes[i].op, Op::Leaf) {
                continue;
            }
            let Some(g) = self.grads[i].take() else {
                continue;
            };
            self.backward_node(i, &g);
            self.grads[i] = Some(g);
        }
        // Interior gradients are not part of the contract; drop them.
        for i in 0..self.nodes.len() {
            if !matches!(self.nodes[i].op, Op::Leaf) || !self.nodes[i].requires_grad {
                self.grads[i] = None;
            }
        }
        Ok(())
    }

    fn backward_node(&mut self, i: usize, g: &[T]) {
        let Self { nodes, grads, .. } = self;
        let node = &nodes[i];
        let out = &node.value;
        let mut sink = Sink { nodes, grads };
        match &node.op {
            Op::Leaf => {}
            Op::Binary { op, lhs, rhs } => {
                elementwise::binary_backward(*op, *lhs, *rhs, g, &mut sink)
            }
            Op::Unary { op, input } => elementwise::unary_backward(op, *input, out, g, &mut sink),
            Op::Reduce {
                op,
                input,
                axis,
                argmax,
            } => reduce::reduce_backward(*op, *input, *axis, argmax, g, &mut sink),
            Op::ReduceAll { mean, input } => {
                reduce::reduce_all_backward(*mean, *input, g, &mut sink)
            }
            Op::Reshape { input } => {
                if let Some(dst) = sink.acc(*input) {
                    add_into(dst, g);
                }
            }
            Op::Transpose { input } => linalg::transpose_backward(*input, g, &mut sink),
            Op::MatMul { lhs, rhs } => linalg::matmul_backward(*lhs, *rhs, g, &mut sink),
            Op::Softmax { input } => linalg::softmax_backward(*input, out, g, &mut sink),
            Op::Conv {
                input,
                weight,
                bias,
                geom,
            } => conv::conv_backward(*input, *weight, *bias, geom, g, &mut sink),
            Op::ConvTranspose {
                input,
                weight,
                bias,
                geom,
            } => conv::conv_transpose_backward(*input, *weight, *bias, geom, g, &mut sink),
            Op::Interpolate { input } => shape::interpolate_backward(*input, out, g, &mut sink),
            Op::Subsample { input, step } => {
                shape::subsample_backward(*input, *step, out, g, &mut sink)
            }
            Op::RepeatLast { input } => shape::repeat_last_backward(*input, out, g, &mut sink),
            Op::Slice { input, axis, start } => {
                shape::slice_backward(*input, *axis, *start, out, g, &mut sink)
            }
            Op::Concat { inputs, axis } => shape::concat_backward(inputs, *axis, g, &mut sink),
            Op::PadLast { input } => shape::pad_last_backward(*input, out, g, &mut sink),
            Op::ChannelNorm {
                input,
                gain,
                bias,
                xhat,
                inv_std,
            } => norm::channel_norm_backward(*input, *gain, *bias, xhat, inv_std, g, &mut sink),
            Op::StftMag {
                input,
                cfg,
                spectrum,
            } => spectral::stft_mag_backward(*input, cfg, spectrum, out, g, &mut sink),
        }
    }
}

/// Gradient accumulator handed to the per-op backward kernels.
pub(crate) struct Sink<'a, T> {
    nodes: &'a [Node<T>],
    grads: &'a mut [Option<Vec<T>>],
}

impl<'a, T: Scalar> Sink<'a, T> {
    fn value(&self, i: usize) -> &'a Tensor<T> {
        &self.nodes[i].value
    }

    fn wants(&self, i: usize) -> bool {
        self.nodes[i].requires_grad
    }

    /// Gradient buffer of node `i`, or `None` when it does not require one.
    fn acc(&mut self, i: usize) -> Option<&mut [T]> {
        if !self.nodes[i].requires_grad {
            return None;
        }
        let n = self.nodes[i].value.numel();
        Some(
            self.grads[i]
                .get_or_insert_with(|| vec![T::zero(); n])
                .as_mut_slice(),
        )
    }

    /// Value of `i` together with the gradient buffer of `j`.
    fn value_and_acc(&mut self, i: usize, j: usize) -> Option<(&'a Tensor<T>, &mut [T])> {
        let v = &self.nodes[i].value;
        self.acc(j).map(|g| (v, g))
    }
}

#[inline]
pub(crate) fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = *d + s;
    }
}

/// Sum with eight independent partial sums.
#[inline]
pub(crate) fn sum_slice<T: Scalar>(a: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let mut c = a.chunks_exact(8);
    for x in &mut c {
        for l in 0..8 {
            acc[l] = acc[l] + x[l];
        }
    }
    let tail = c.remainder().iter().fold(T::zero(), |s, &x| s + x);
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Splits `shape` around `axis` into (outer, extent, inner).
pub(crate) fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

pub(crate) fn check_rank(op: &'static str, shape: &[usize], rank: usize) -> Result<()> {
    if shape.len() != rank {
        return Err(Error::Rank {
            op,
            expected: rank,
            shape: shape.to_vec(),
        });
    }
    Ok(())
}

pub(crate) fn ensure_finite<T: Scalar>(op: &'static str, data: &[T]) -> Result<()> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(op))
    }
}
