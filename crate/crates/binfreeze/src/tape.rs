//! Define-by-run reverse-mode autodiff.
//!
//! A [`Tape`] is rebuilt for every forward pass: each op appends a node
//! holding its forward value, its inputs, and whatever context backward
//! needs. [`Tape::backward`] walks the nodes in reverse creation order and
//! accumulates gradients additively across fan-out.
//!
//! Every node names its backward rule (see [`Op::backward_rule`]), so a test
//! can enumerate a graph and verify which gradient paths exist. In particular
//! `sign` appears only in three forms: inside `masked_binarize` (gradient
//! routed through unfrozen entries' smooth proxy only), as `ste_sign`
//! (identity surrogate, baseline paths only), and as `hard_sign` (no backward
//! rule; deploy graphs are forward-only).

use crate::binarize::SmoothKind;
use crate::error::{Error, Result};
use crate::kernels;
use crate::tensor::{elementwise_compatible, Tensor};

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

#[derive(Debug, Clone)]
pub enum Op {
    Leaf {
        trainable: bool,
    },
    Matmul {
        a: Var,
        b: Var,
    },
    Conv2d {
        x: Var,
        k: Var,
        stride: usize,
        pad: usize,
    },
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        eps: f32,
        mean: Vec<f32>,
        var: Vec<f32>,
        training: bool,
    },
    Relu {
        x: Var,
    },
    Add {
        a: Var,
        b: Var,
    },
    Sub {
        a: Var,
        b: Var,
    },
    Mul {
        a: Var,
        b: Var,
    },
    Scale {
        x: Var,
        c: f32,
    },
    Reshape {
        x: Var,
    },
    GlobalAvgPool {
        x: Var,
    },
    SoftmaxCrossEntropy {
        logits: Var,
        labels: Vec<u32>,
        probs: Vec<f32>,
    },
    MaskedBinarize {
        latent: Var,
        bits: Vec<u8>,
        smooth: SmoothKind,
    },
    SteSign {
        latent: Var,
    },
    HardSign {
        x: Var,
    },
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Leaf { .. } => "leaf",
            Op::Matmul { .. } => "matmul",
            Op::Conv2d { .. } => "conv2d",
            Op::BatchNorm { .. } => "batchnorm",
            Op::Relu { .. } => "relu",
            Op::Add { .. } => "add",
            Op::Sub { .. } => "sub",
            Op::Mul { .. } => "mul",
            Op::Scale { .. } => "scale",
            Op::Reshape { .. } => "reshape",
            Op::GlobalAvgPool { .. } => "global_avg_pool",
            Op::SoftmaxCrossEntropy { .. } => "softmax_cross_entropy",
            Op::MaskedBinarize { .. } => "masked_binarize",
            Op::SteSign { .. } => "ste_sign",
            Op::HardSign { .. } => "hard_sign",
        }
    }

    /// Name of the registered backward rule. "none" means backward through
    /// this node is a contract error.
    pub fn backward_rule(&self) -> &'static str {
        match self {
            Op::Leaf { .. } => "leaf",
            Op::Matmul { .. } => "matmul-transpose",
            Op::Conv2d { .. } => "conv2d-transpose",
            Op::BatchNorm { .. } => "batchnorm-chain",
            Op::Relu { .. } => "relu-gate",
            Op::Add { .. } | Op::Sub { .. } => "elementwise-linear",
            Op::Mul { .. } => "product-rule",
            Op::Scale { .. } => "constant-scale",
            Op::Reshape { .. } => "reshape-passthrough",
            Op::GlobalAvgPool { .. } => "mean-spread",
            Op::SoftmaxCrossEntropy { .. } => "softmax-minus-onehot",
            Op::MaskedBinarize { .. } => "masked-proxy",
            Op::SteSign { .. } => "ste-identity",
            Op::HardSign { .. } => "none",
        }
    }
}

struct Node {
    value: Tensor,
    grad: Option<Vec<f32>>,
    needs: bool,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// (op name, backward rule) per node, for structural inspection.
    pub fn op_summary(&self) -> Vec<(&'static str, &'static str)> {
        self.nodes
            .iter()
            .map(|n| (n.op.name(), n.op.backward_rule()))
            .collect()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient accumulated into `v` by the last `backward` call, if any.
    pub fn grad(&self, v: Var) -> Option<&[f32]> {
        self.nodes[v.0].grad.as_deref()
    }

    pub fn leaf(&mut self, value: Tensor, trainable: bool) -> Var {
        self.push(value, Op::Leaf { trainable })
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub(crate) fn push(&mut self, value: Tensor, op: Op) -> Var {
        let needs = match &op {
            Op::Leaf { trainable } => *trainable,
            Op::Matmul { a, b } | Op::Add { a, b } | Op::Sub { a, b } | Op::Mul { a, b } => {
                self.nodes[a.0].needs || self.nodes[b.0].needs
            }
            Op::Conv2d { x, k, .. } => self.nodes[x.0].needs || self.nodes[k.0].needs,
            Op::BatchNorm { x, gamma, beta, .. } => {
                self.nodes[x.0].needs || self.nodes[gamma.0].needs || self.nodes[beta.0].needs
            }
            Op::Relu { x }
            | Op::Scale { x, .. }
            | Op::Reshape { x }
            | Op::GlobalAvgPool { x }
            | Op::HardSign { x } => self.nodes[x.0].needs,
            Op::SoftmaxCrossEntropy { logits, .. } => self.nodes[logits.0].needs,
            Op::MaskedBinarize { latent, .. } | Op::SteSign { latent } => self.nodes[latent.0].needs,
        };
        self.nodes.push(Node {
            value,
            grad: None,
            needs,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    // ---- op constructors ----

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let sa = self.value(a).shape().to_vec();
        let sb = self.value(b).shape().to_vec();
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::Dimension(format!(
                "matmul expects [m,k] x [k,n], got {:?} x {:?}",
                sa, sb
            )));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = vec![0.0f32; m * n];
        kernels::matmul(self.value(a).data(), self.value(b).data(), m, k, n, &mut out);
        Ok(self.push(Tensor::new(vec![m, n], out)?, Op::Matmul { a, b }))
    }

    pub fn conv2d(&mut self, x: Var, k: Var, stride: usize, pad: usize) -> Result<Var> {
        let sx = self.value(x).shape().to_vec();
        let sk = self.value(k).shape().to_vec();
        if sx.len() != 4 || sk.len() != 4 || sx[1] != sk[1] {
            return Err(Error::Dimension(format!(
                "conv2d expects x [n,c,h,w] and k [o,c,kh,kw] with matching c, got {:?} and {:?}",
                sx, sk
            )));
        }
        if stride == 0 {
            return Err(Error::Contract("conv2d stride must be >= 1".into()));
        }
        let (n, c, h, w) = (sx[0], sx[1], sx[2], sx[3]);
        let (oc, kh, kw) = (sk[0], sk[2], sk[3]);
        if h + 2 * pad < kh || w + 2 * pad < kw {
            return Err(Error::Dimension(format!(
                "conv2d kernel {:?} larger than padded input {:?} (pad {})",
                sk, sx, pad
            )));
        }
        let oh = kernels::conv_out_dim(h, kh, stride, pad);
        let ow = kernels::conv_out_dim(w, kw, stride, pad);
        let mut out = vec![0.0f32; n * oc * oh * ow];
        kernels::conv2d(
            self.value(x).data(),
            self.value(k).data(),
            n,
            c,
            h,
            w,
            oc,
            kh,
            kw,
            stride,
            pad,
            &mut out,
        );
        Ok(self.push(
            Tensor::new(vec![n, oc, oh, ow], out)?,
            Op::Conv2d { x, k, stride, pad },
        ))
    }

    /// Channel layout for batch norm: [n,c] or [n,c,h,w].
    fn bn_dims(&self, x: Var) -> Result<(usize, usize, usize)> {
        let s = self.value(x).shape();
        match s.len() {
            2 => Ok((s[0], s[1], 1)),
            4 => Ok((s[0], s[1], s[2] * s[3])),
            _ => Err(Error::Dimension(format!(
                "batchnorm expects [n,c] or [n,c,h,w], got {:?}",
                s
            ))),
        }
    }

    fn bn_check_params(&self, c: usize, gamma: Var, beta: Var) -> Result<()> {
        for (name, v) in [("gamma", gamma), ("beta", beta)] {
            let s = self.value(v).shape();
            if s != [c] {
                return Err(Error::Dimension(format!(
                    "batchnorm {} must have shape [{}], got {:?}",
                    name, c, s
                )));
            }
        }
        Ok(())
    }

    /// Training-mode batch norm: normalizes with batch statistics and returns
    /// them so the caller can update its running estimates. Errors when the
    /// per-channel population (batch x spatial) is <= 1.
    pub fn batchnorm_train(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        eps: f32,
    ) -> Result<(Var, Vec<f32>, Vec<f32>)> {
        let (n, c, s) = self.bn_dims(x)?;
        self.bn_check_params(c, gamma, beta)?;
        if n * s <= 1 {
            return Err(Error::Contract(format!(
                "batchnorm training needs a per-channel population > 1, got {}",
                n * s
            )));
        }
        let (mean, var) = kernels::batch_stats(self.value(x).data(), n, c, s);
        let mut out = vec![0.0f32; n * c * s];
        kernels::batchnorm_forward(
            self.value(x).data(),
            self.value(gamma).data(),
            self.value(beta).data(),
            &mean,
            &var,
            eps,
            n,
            c,
            s,
            &mut out,
        );
        let shape = self.value(x).shape().to_vec();
        let v = self.push(
            Tensor::new(shape, out)?,
            Op::BatchNorm {
                x,
                gamma,
                beta,
                eps,
                mean: mean.clone(),
                var: var.clone(),
                training: true,
            },
        );
        Ok((v, mean, var))
    }

    /// Eval-mode batch norm: a fixed affine map using the supplied running
    /// statistics.
    pub fn batchnorm_eval(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        eps: f32,
        mean: &[f32],
        var: &[f32],
    ) -> Result<Var> {
        let (n, c, s) = self.bn_dims(x)?;
        self.bn_check_params(c, gamma, beta)?;
        if mean.len() != c || var.len() != c {
            return Err(Error::Dimension(format!(
                "batchnorm running stats must have length {}, got {}/{}",
                c,
                mean.len(),
                var.len()
            )));
        }
        let mut out = vec![0.0f32; n * c * s];
        kernels::batchnorm_forward(
            self.value(x).data(),
            self.value(gamma).data(),
            self.value(beta).data(),
            mean,
            var,
            eps,
            n,
            c,
            s,
            &mut out,
        );
        let shape = self.value(x).shape().to_vec();
        Ok(self.push(
            Tensor::new(shape, out)?,
            Op::BatchNorm {
                x,
                gamma,
                beta,
                eps,
                mean: mean.to_vec(),
                var: var.to_vec(),
                training: false,
            },
        ))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.value(x).map(|v| v.max(0.0));
        self.push(value, Op::Relu { x })
    }

    fn elementwise_shapes(&self, name: &str, a: Var, b: Var) -> Result<Vec<usize>> {
        let sa = self.value(a).shape();
        let sb = self.value(b).shape();
        if !elementwise_compatible(sa, sb) {
            return Err(Error::Dimension(format!(
                "{} operands must share a shape or one must be scalar, got {:?} and {:?}",
                name, sa, sb
            )));
        }
        Ok(if self.value(a).len() >= self.value(b).len() {
            sa.to_vec()
        } else {
            sb.to_vec()
        })
    }

    fn broadcast_zip(&self, a: Var, b: Var, f: impl Fn(f32, f32) -> f32) -> Vec<f32> {
        let da = self.value(a).data();
        let db = self.value(b).data();
        if da.len() == db.len() {
            da.iter().zip(db).map(|(&x, &y)| f(x, y)).collect()
        } else if db.len() == 1 {
            da.iter().map(|&x| f(x, db[0])).collect()
        } else {
            db.iter().map(|&y| f(da[0], y)).collect()
        }
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = self.elementwise_shapes("add", a, b)?;
        let data = self.broadcast_zip(a, b, |x, y| x + y);
        Ok(self.push(Tensor::new(shape, data)?, Op::Add { a, b }))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = self.elementwise_shapes("sub", a, b)?;
        let data = self.broadcast_zip(a, b, |x, y| x - y);
        Ok(self.push(Tensor::new(shape, data)?, Op::Sub { a, b }))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = self.elementwise_shapes("mul", a, b)?;
        let data = self.broadcast_zip(a, b, |x, y| x * y);
        Ok(self.push(Tensor::new(shape, data)?, Op::Mul { a, b }))
    }

    pub fn scale(&mut self, x: Var, c: f32) -> Var {
        let value = self.value(x).map(|v| v * c);
        self.push(value, Op::Scale { x, c })
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        let value = self.value(x).reshaped(shape)?;
        Ok(self.push(value, Op::Reshape { x }))
    }

    /// [n,c,h,w] -> [n,c], mean over the spatial extent.
    pub fn global_avg_pool(&mut self, x: Var) -> Result<Var> {
        let s = self.value(x).shape().to_vec();
        if s.len() != 4 {
            return Err(Error::Dimension(format!(
                "global_avg_pool expects [n,c,h,w], got {:?}",
                s
            )));
        }
        let (n, c, hw) = (s[0], s[1], s[2] * s[3]);
        let data = self.value(x).data();
        let mut out = vec![0.0f32; n * c];
        for ni in 0..n {
            for ci in 0..c {
                let base = ni * c * hw + ci * hw;
                let mut acc = 0.0f64;
                for i in 0..hw {
                    acc += data[base + i] as f64;
                }
                out[ni * c + ci] = (acc / hw as f64) as f32;
            }
        }
        Ok(self.push(Tensor::new(vec![n, c], out)?, Op::GlobalAvgPool { x }))
    }

    /// Mean cross-entropy over the batch. `labels[i]` must be < the class
    /// count; the output is a scalar.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[u32]) -> Result<Var> {
        let s = self.value(logits).shape().to_vec();
        if s.len() != 2 {
            return Err(Error::Dimension(format!(
                "softmax_cross_entropy expects logits [n,k], got {:?}",
                s
            )));
        }
        let (n, k) = (s[0], s[1]);
        if labels.len() != n {
            return Err(Error::Dimension(format!(
                "got {} labels for batch of {}",
                labels.len(),
                n
            )));
        }
        if n == 0 {
            return Err(Error::Contract("softmax_cross_entropy on empty batch".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= k) {
            return Err(Error::Contract(format!(
                "label {} out of range for {} classes",
                bad, k
            )));
        }
        let (loss, probs) = kernels::softmax_cross_entropy(self.value(logits).data(), labels, n, k);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::SoftmaxCrossEntropy {
                logits,
                labels: labels.to_vec(),
                probs,
            },
        ))
    }

    // ---- backward ----

    fn add_grad(&mut self, v: Var, g: &[f32]) {
        if !self.nodes[v.0].needs {
            return;
        }
        let node = &mut self.nodes[v.0];
        match &mut node.grad {
            Some(acc) => {
                for (a, &x) in acc.iter_mut().zip(g) {
                    *a += x;
                }
            }
            None => node.grad = Some(g.to_vec()),
        }
    }

    /// Reverse pass from a scalar loss. Gradients accumulate additively into
    /// every node with a trainable ancestor; leaves keep them until the next
    /// backward call on this tape.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(Error::Contract(format!(
                "backward requires a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        if !self.nodes[loss.0].needs {
            // No trainable ancestor anywhere: nothing to do.
            return Ok(());
        }
        self.add_grad(loss, &[1.0]);
        for id in (0..=loss.0).rev() {
            if !self.nodes[id].needs || self.nodes[id].grad.is_none() {
                continue;
            }
            let g = self.nodes[id].grad.clone().unwrap();
            let op = std::mem::replace(&mut self.nodes[id].op, Op::Leaf { trainable: false });
            self.backward_one(&op, &g)?;
            self.nodes[id].op = op;
        }
        Ok(())
    }

    fn backward_one(&mut self, op: &Op, g: &[f32]) -> Result<()> {
        match op {
            Op::Leaf { .. } => {}
            Op::Matmul { a, b } => {
                let sa = self.value(*a).shape().to_vec();
                let sb = self.value(*b).shape().to_vec();
                let (m, k, n) = (sa[0], sa[1], sb[1]);
                if self.nodes[a.0].needs {
                    let mut da = vec![0.0f32; m * k];
                    kernels::matmul_nt(g, self.value(*b).data(), m, n, k, &mut da);
                    self.add_grad(*a, &da);
                }
                if self.nodes[b.0].needs {
                    let mut db = vec![0.0f32; k * n];
                    kernels::matmul_tn(self.value(*a).data(), g, m, k, n, &mut db);
                    self.add_grad(*b, &db);
                }
            }
            Op::Conv2d { x, k, stride, pad } => {
                let sx = self.value(*x).shape().to_vec();
                let sk = self.value(*k).shape().to_vec();
                let (n, c, h, w) = (sx[0], sx[1], sx[2], sx[3]);
                let (oc, kh, kw) = (sk[0], sk[2], sk[3]);
                if self.nodes[x.0].needs {
                    let mut dx = vec![0.0f32; n * c * h * w];
                    kernels::conv2d_grad_x(
                        g,
                        self.value(*k).data(),
                        n,
                        c,
                        h,
                        w,
                        oc,
                        kh,
                        kw,
                        *stride,
                        *pad,
                        &mut dx,
                    );
                    self.add_grad(*x, &dx);
                }
                if self.nodes[k.0].needs {
                    let mut dk = vec![0.0f32; oc * c * kh * kw];
                    kernels::conv2d_grad_k(
                        g,
                        self.value(*x).data(),
                        n,
                        c,
                        h,
                        w,
                        oc,
                        kh,
                        kw,
                        *stride,
                        *pad,
                        &mut dk,
                    );
                    self.add_grad(*k, &dk);
                }
            }
            Op::BatchNorm {
                x,
                gamma,
                beta,
                eps,
                mean,
                var,
                training,
            } => {
                let (n, c, s) = self.bn_dims(*x)?;
                let mut dx = vec![0.0f32; n * c * s];
                let mut dgamma = vec![0.0f32; c];
                let mut dbeta = vec![0.0f32; c];
                let bw = if *training {
                    kernels::batchnorm_backward_train
                } else {
                    kernels::batchnorm_backward_eval
                };
                bw(
                    g,
                    self.value(*x).data(),
                    self.value(*gamma).data(),
                    mean,
                    var,
                    *eps,
                    n,
                    c,
                    s,
                    &mut dx,
                    &mut dgamma,
                    &mut dbeta,
                );
                self.add_grad(*x, &dx);
                self.add_grad(*gamma, &dgamma);
                self.add_grad(*beta, &dbeta);
            }
            Op::Relu { x } => {
                let dx: Vec<f32> = self
                    .value(*x)
                    .data()
                    .iter()
                    .zip(g)
                    .map(|(&v, &gi)| if v > 0.0 { gi } else { 0.0 })
                    .collect();
                self.add_grad(*x, &dx);
            }
            Op::Add { a, b } => {
                self.accumulate_broadcast(*a, g, 1.0);
                self.accumulate_broadcast(*b, g, 1.0);
            }
            Op::Sub { a, b } => {
                self.accumulate_broadcast(*a, g, 1.0);
                self.accumulate_broadcast(*b, g, -1.0);
            }
            Op::Mul { a, b } => {
                if self.nodes[a.0].needs {
                    let da = self.mul_partial(g, *b, *a);
                    self.add_grad(*a, &da);
                }
                if self.nodes[b.0].needs {
                    let db = self.mul_partial(g, *a, *b);
                    self.add_grad(*b, &db);
                }
            }
            Op::Scale { x, c } => {
                let dx: Vec<f32> = g.iter().map(|&gi| gi * c).collect();
                self.add_grad(*x, &dx);
            }
            Op::Reshape { x } => {
                self.add_grad(*x, g);
            }
            Op::GlobalAvgPool { x } => {
                let s = self.value(*x).shape().to_vec();
                let (n, c, hw) = (s[0], s[1], s[2] * s[3]);
                let inv = 1.0 / hw as f32;
                let mut dx = vec![0.0f32; n * c * hw];
                for ni in 0..n {
                    for ci in 0..c {
                        let gv = g[ni * c + ci] * inv;
                        let base = ni * c * hw + ci * hw;
                        for i in 0..hw {
                            dx[base + i] = gv;
                        }
                    }
                }
                self.add_grad(*x, &dx);
            }
            Op::SoftmaxCrossEntropy {
                logits,
                labels,
                probs,
            } => {
                let s = self.value(*logits).shape().to_vec();
                let mut dl = vec![0.0f32; s[0] * s[1]];
                kernels::softmax_cross_entropy_backward(probs, labels, s[0], s[1], g[0], &mut dl);
                self.add_grad(*logits, &dl);
            }
            Op::MaskedBinarize {
                latent,
                bits,
                smooth,
            } => {
                let period = bits.len().max(1);
                let dx: Vec<f32> = self
                    .value(*latent)
                    .data()
                    .iter()
                    .enumerate()
                    .zip(g)
                    .map(|((i, &u), &gi)| {
                        if bits[i % period] == 1 {
                            0.0
                        } else {
                            gi * smooth.derivative(u)
                        }
                    })
                    .collect();
                self.add_grad(*latent, &dx);
            }
            Op::SteSign { latent } => {
                self.add_grad(*latent, g);
            }
            Op::HardSign { .. } => {
                return Err(Error::Contract(
                    "sign has no backward rule; deploy-profile graphs are forward-only".into(),
                ));
            }
        }
        Ok(())
    }

    /// Adds `sign * g` into `v`, sum-reducing when `v` is a broadcast scalar.
    fn accumulate_broadcast(&mut self, v: Var, g: &[f32], sign: f32) {
        if !self.nodes[v.0].needs {
            return;
        }
        if self.value(v).len() == g.len() {
            let dv: Vec<f32> = g.iter().map(|&x| sign * x).collect();
            self.add_grad(v, &dv);
        } else {
            let mut acc = 0.0f64;
            for &x in g {
                acc += x as f64;
            }
            self.add_grad(v, &[(sign as f64 * acc) as f32]);
        }
    }

    /// d(a*b)/d(target) = g * other, reduced onto target's shape.
    fn mul_partial(&self, g: &[f32], other: Var, target: Var) -> Vec<f32> {
        let od = self.value(other).data();
        let tn = self.value(target).len();
        if tn == g.len() {
            if od.len() == g.len() {
                g.iter().zip(od).map(|(&gi, &o)| gi * o).collect()
            } else {
                g.iter().map(|&gi| gi * od[0]).collect()
            }
        } else {
            // target is the broadcast scalar
            let mut acc = 0.0f64;
            for (i, &gi) in g.iter().enumerate() {
                acc += gi as f64 * od[i] as f64;
            }
            vec![acc as f32]
        }
    }
}
