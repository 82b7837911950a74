use alloc::vec::Vec;

use super::{add_into, ensure_finite, Graph, Op, Sink, Var};
use crate::{Error, Result, Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UnaryOp<T> {
    Neg,
    Abs,
    /// `x^p`; the derivative at `x = 0` is taken to be 0 for every `p`.
    Pow(T),
    Sigmoid,
    Tanh,
    Relu,
    Exp,
    Log,
    /// Multiplication by a constant.
    Scale(T),
    /// Addition of a constant.
    Shift(T),
}

impl<T: Scalar> Graph<T> {
    /// Elementwise binary op. Shapes must be equal, or one operand must hold a
    /// single element, which is broadcast.
    pub fn binary(&mut self, op: BinaryOp, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.val(a), self.val(b));
        let shape = if x.shape() == y.shape() || y.numel() == 1 {
            x.shape().to_vec()
        } else if x.numel() == 1 {
            y.shape().to_vec()
        } else {
            return Err(Error::Incompatible {
                op: "binary",
                lhs: x.shape().to_vec(),
                rhs: y.shape().to_vec(),
            });
        };
        let n: usize = shape.iter().product();
        let xs = x.data();
        let ys = y.data();
        let xi = |i: usize| if xs.len() == 1 { xs[0] } else { xs[i] };
        let yi = |i: usize| if ys.len() == 1 { ys[0] } else { ys[i] };
        let data: Vec<T> = match op {
            BinaryOp::Add => (0..n).map(|i| xi(i) + yi(i)).collect(),
            BinaryOp::Sub => (0..n).map(|i| xi(i) - yi(i)).collect(),
            BinaryOp::Mul => (0..n).map(|i| xi(i) * yi(i)).collect(),
            BinaryOp::Div => {
                if ys.iter().any(|v| v.is_zero()) {
                    return Err(Error::Domain {
                        op: "div",
                        detail: "division by zero",
                    });
                }
                (0..n).map(|i| xi(i) / yi(i)).collect()
            }
        };
        ensure_finite("binary", &data)?;
        Ok(self.push(
            Tensor::from_parts(shape, data),
            Op::Binary {
                op,
                lhs: a.0,
                rhs: b.0,
            },
            &[a.0, b.0],
        ))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::Sub, a, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::Mul, a, b)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::Div, a, b)
    }

    pub fn unary(&mut self, op: UnaryOp<T>, a: Var) -> Result<Var> {
        let x = self.val(a);
        let xs = x.data();
        let data: Vec<T> = match op {
            UnaryOp::Neg => xs.iter().map(|&v| -v).collect(),
            UnaryOp::Abs => xs.iter().map(|&v| v.abs()).collect(),
            UnaryOp::Pow(p) => {
                if p.fract() != T::zero() && xs.iter().any(|&v| v < T::zero()) {
                    return Err(Error::Domain {
                        op: "pow",
                        detail: "negative base with non-integer exponent",
                    });
                }
                if p < T::zero() && xs.iter().any(|v| v.is_zero()) {
                    return Err(Error::Domain {
                        op: "pow",
                        detail: "zero base with negative exponent",
                    });
                }
                if p == T::of(2.0) {
                    xs.iter().map(|&v| v * v).collect()
                } else {
                    xs.iter().map(|&v| v.powf(p)).collect()
                }
            }
            UnaryOp::Sigmoid => xs.iter().map(|&v| sigmoid(v)).collect(),
            UnaryOp::Tanh => xs.iter().map(|&v| v.tanh()).collect(),
            UnaryOp::Relu => xs.iter().map(|&v| v.max(T::zero())).collect(),
            UnaryOp::Exp => xs.iter().map(|&v| v.exp()).collect(),
            UnaryOp::Log => {
                if xs.iter().any(|&v| v <= T::zero()) {
                    return Err(Error::Domain {
                        op: "log",
                        detail: "non-positive argument",
                    });
                }
                xs.iter().map(|&v| v.ln()).collect()
            }
            UnaryOp::Scale(c) => xs.iter().map(|&v| v * c).collect(),
            UnaryOp::Shift(c) => xs.iter().map(|&v| v + c).collect(),
        };
        ensure_finite("unary", &data)?;
        Ok(self.push(
            Tensor::from_parts(x.shape().to_vec(), data),
            Op::Unary { op, input: a.0 },
            &[a.0],
        ))
    }

    pub fn neg(&mut self, a: Var) -> Result<Var> {
        self.unary(UnaryOp::Neg, a)
    }

    pub fn abs(&mut self, a: Var) -> Result<Var> {
        self.unary(UnaryOp::Abs, a)
    }

    pub fn pow(&mut self, a: Var, p: T) -> Result<Var> {
        self.unary(UnaryOp::Pow(p), a)
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.unary(UnaryOp::Sigmoid, a)
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        self.unary(UnaryOp::Tanh, a)
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.unary(UnaryOp::Relu, a)
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        self.unary(UnaryOp::Exp, a)
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        self.unary(UnaryOp::Log, a)
    }

    pub fn scale(&mut self, a: Var, c: T) -> Result<Var> {
        self.unary(UnaryOp::Scale(c), a)
    }

    pub fn shift(&mut self, a: Var, c: T) -> Result<Var> {
        self.unary(UnaryOp::Shift(c), a)
    }

    /// `x * sigmoid(x)`.
    pub fn swish(&mut self, a: Var) -> Result<Var> {
        let s = self.sigmoid(a)?;
        self.mul(a, s)
    }
}

#[inline]
pub(crate) fn sigmoid<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

pub(super) fn binary_backward<T: Scalar>(
    op: BinaryOp,
    lhs: usize,
    rhs: usize,
    g: &[T],
    sink: &mut Sink<'_, T>,
) {
    let x = sink.value(lhs);
    let y = sink.value(rhs);
    let n = g.len();
    let xs = x.data();
    let ys = y.data();
    let xi = |i: usize| if xs.len() == 1 { xs[0] } else { xs[i] };
    let yi = |i: usize| if ys.len() == 1 { ys[0] } else { ys[i] };

    // Contribution of output element i to the gradient of one operand.
    let mut scatter = |target: usize, broadcast: bool, f: &dyn Fn(usize) -> T| {
        if let Some(dst) = sink.acc(target) {
            if broadcast && n != 1 {
                let mut s = T::zero();
                for i in 0..n {
                    s = s + f(i);
                }
                dst[0] = dst[0] + s;
            } else {
                for (i, d) in dst.iter_mut().enumerate() {
                    *d = *d + f(i);
                }
            }
        }
    };
    let bx = xs.len() == 1;
    let by = ys.len() == 1;
    match op {
        BinaryOp::Add => {
            scatter(lhs, bx, &|i| g[i]);
            scatter(rhs, by, &|i| g[i]);
        }
        BinaryOp::Sub => {
            scatter(lhs, bx, &|i| g[i]);
            scatter(rhs, by, &|i| -g[i]);
        }
        BinaryOp::Mul => {
            scatter(lhs, bx, &|i| g[i] * yi(i));
            scatter(rhs, by, &|i| g[i] * xi(i));
        }
        BinaryOp::Div => {
            scatter(lhs, bx, &|i| g[i] / yi(i));
            scatter(rhs, by, &|i| -g[i] * xi(i) / (yi(i) * yi(i)));
        }
    }
}

pub(super) fn unary_backward<T: Scalar>(
    op: &UnaryOp<T>,
    input: usize,
    out: &Tensor<T>,
    g: &[T],
    sink: &mut Sink<'_, T>,
) {
    let Some((x, dst)) = sink.value_and_acc(input, input) else {
        return;
    };
    let xs = x.data();
    let ys = out.data();
    match *op {
        UnaryOp::Neg => {
            for (d, &gi) in dst.iter_mut().zip(g) {
                *d = *d - gi;
            }
        }
        UnaryOp::Abs => {
            for ((d, &gi), &v) in dst.iter_mut().zip(g).zip(xs) {
                let s = if v > T::zero() {
                    T::one()
                } else if v < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                };
                *d = *d + gi * s;
            }
        }
        UnaryOp::Pow(p) => {
            let two = T::of(2.0);
            for ((d, &gi), &v) in dst.iter_mut().zip(g).zip(xs) {
                if v.is_zero() {
                    continue;
                }
                let dv = if p == two {
                    two * v
                } else {
                    p * v.powf(p - T::one())
                };
                *d = *d + gi * dv;
            }
        }
        UnaryOp::Sigmoid => {
            for ((d, &gi), &y) in dst.iter_mut().zip(g).zip(ys) {
                *d = *d + gi * y * (T::one() - y);
            }
        }
        UnaryOp::Tanh => {
            for ((d, &gi), &y) in dst.iter_mut().zip(g).zip(ys) {
                *d = *d + gi * (T::one() - y * y);
            }
        }
        UnaryOp::Relu => {
            for ((d, &gi), &v) in dst.iter_mut().zip(g).zip(xs) {
                if v > T::zero() {
                    *d = *d + gi;
                }
            }
        }
        UnaryOp::Exp => {
            for ((d, &gi), &y) in dst.iter_mut().zip(g).zip(ys) {
                *d = *d + gi * y;
            }
        }
        UnaryOp::Log => {
            for ((d, &gi), &v) in dst.iter_mut().zip(g).zip(xs) {
                *d = *d + gi / v;
            }
        }
        UnaryOp::Scale(c) => {
            for (d, &gi) in dst.iter_mut().zip(g) {
                *d = *d + gi * c;
            }
        }
        UnaryOp::Shift(_) => add_into(dst, g),
    }
}
