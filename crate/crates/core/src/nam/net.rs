//! Forward and backward passes of the attention classifier.

use rand::Rng;

use super::{NamParams, N_OUT};
use crate::error::{Error, Result};
use crate::linalg::{self, dot, Matrix};

/// One classifier input: context vectors, optional padding flags and the
/// relation vector of the candidate pair.
#[derive(Debug, Clone)]
pub struct NamInput<'a> {
    pub tokens: Vec<&'a [f64]>,
    /// `true` marks a padding position. `None` means no padding.
    pub padding: Option<Vec<bool>>,
    pub relation: &'a [f64],
}

impl<'a> NamInput<'a> {
    pub fn new(tokens: Vec<&'a [f64]>, relation: &'a [f64]) -> Self {
        NamInput {
            tokens,
            padding: None,
            relation,
        }
    }

    fn is_pad(&self, i: usize) -> bool {
        self.padding.as_ref().is_some_and(|p| p[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    /// Scorer outputs `g_i` (0 at padding).
    pub scores: Vec<f64>,
    /// Softmax weights, exactly 0 at padding.
    pub weights: Vec<f64>,
    /// Weighted sum of the context vectors.
    pub context: Vec<f64>,
}

/// Relation-conditioned attention over the context vectors.
pub fn attention(input: &NamInput<'_>, params: &NamParams) -> Result<Attention> {
    let d = params.dims.word;
    if input.tokens.is_empty() || (0..input.tokens.len()).all(|i| input.is_pad(i)) {
        return Err(Error::Invalid(
            "attention over an empty or all-padding sequence".into(),
        ));
    }
    let rel_term = if params.variant.attends_with_relation() {
        dot(&params.att_w[d..], input.relation)
    } else {
        0.0
    };
    let n = input.tokens.len();
    let mut scores = vec![0.0; n];
    let mut active = Vec::with_capacity(n);
    for (i, x) in input.tokens.iter().enumerate() {
        if input.is_pad(i) {
            continue;
        }
        scores[i] = (dot(&params.att_w[..d], x) + rel_term + params.att_b).tanh();
        active.push(i);
    }
    let probs = linalg::softmax(&active.iter().map(|&i| scores[i]).collect::<Vec<_>>());
    let mut weights = vec![0.0; n];
    let mut context = vec![0.0; d];
    for (&i, &a) in active.iter().zip(&probs) {
        weights[i] = a;
        linalg::axpy(a, input.tokens[i], &mut context);
    }
    Ok(Attention {
        scores,
        weights,
        context,
    })
}

/// Inverted-dropout masks: each entry is 0 or `1 / (1 − p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Masks {
    pub hidden1: Vec<f64>,
    pub hidden2: Vec<f64>,
}

impl Masks {
    pub fn sample<R: Rng + ?Sized>(params: &NamParams, p: f64, rng: &mut R) -> Self {
        let scale = 1.0 / (1.0 - p);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| if rng.gen::<f64>() < p { 0.0 } else { scale })
                .collect()
        };
        Masks {
            hidden1: draw(params.dims.hidden1),
            hidden2: draw(params.dims.hidden2),
        }
    }
}

/// Intermediate values of a forward pass, kept for [`backward`].
#[derive(Debug, Clone)]
pub struct Cache {
    pub attention: Attention,
    pub classifier_input: Vec<f64>,
    pub pre1: Vec<f64>,
    pub hidden1: Vec<f64>,
    pub pre2: Vec<f64>,
    pub hidden2: Vec<f64>,
    pub output: Vec<f64>,
    pub masks: Option<Masks>,
}

fn affine(w: &Matrix, b: &[f64], x: &[f64]) -> Vec<f64> {
    let mut y = w.matvec(x);
    linalg::axpy(1.0, b, &mut y);
    y
}

fn relu_masked(pre: &[f64], mask: Option<&[f64]>) -> Vec<f64> {
    pre.iter()
        .enumerate()
        .map(|(i, &a)| a.max(0.0) * mask.map_or(1.0, |m| m[i]))
        .collect()
}

fn check(layer: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("activation of layer {layer}")))
    }
}

/// Runs the classifier. `masks` switches on training-mode dropout; `None`
/// is inference.
pub fn forward(input: &NamInput<'_>, params: &NamParams, masks: Option<&Masks>) -> Result<Cache> {
    let attention = attention(input, params)?;
    check("attention", &attention.context)?;
    let mut z = attention.context.clone();
    if params.variant.classifies_with_relation() {
        z.extend_from_slice(input.relation);
    }
    let pre1 = affine(&params.w1, &params.b1, &z);
    check("hidden1", &pre1)?;
    let hidden1 = relu_masked(&pre1, masks.map(|m| m.hidden1.as_slice()));
    let pre2 = affine(&params.w2, &params.b2, &hidden1);
    check("hidden2", &pre2)?;
    let hidden2 = relu_masked(&pre2, masks.map(|m| m.hidden2.as_slice()));
    let logits = affine(&params.wo, &params.bo, &hidden2);
    check("output", &logits)?;
    let output = linalg::softmax(&logits);
    Ok(Cache {
        attention,
        classifier_input: z,
        pre1,
        hidden1,
        pre2,
        hidden2,
        output,
        masks: masks.cloned(),
    })
}

/// Cross-entropy `−ln o[gold]`.
pub fn loss(cache: &Cache, gold: usize) -> f64 {
    -cache.output[gold].max(f64::MIN_POSITIVE).ln()
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub loss: f64,
    pub params: NamParams,
    /// Gradient with respect to each context vector.
    pub tokens: Vec<Vec<f64>>,
    pub relation: Vec<f64>,
}

/// Exact gradients of the cross-entropy loss through every layer,
/// reusing the dropout masks recorded in `cache`.
pub fn backward(input: &NamInput<'_>, cache: &Cache, gold: usize, params: &NamParams) -> Gradients {
    assert!(gold < N_OUT, "gold label index out of range");
    let d = params.dims.word;
    let mut g = params.zeros_like();
    let mut d_rel = vec![0.0; input.relation.len()];

    let mut d_logits = cache.output.clone();
    d_logits[gold] -= 1.0;
    g.bo.copy_from_slice(&d_logits);
    g.wo.add_outer(1.0, &d_logits, &cache.hidden2);
    let d_h2 = params.wo.matvec_t(&d_logits);

    let backprop_relu = |dh: &[f64], pre: &[f64], mask: Option<&Vec<f64>>| -> Vec<f64> {
        dh.iter()
            .zip(pre)
            .enumerate()
            .map(|(i, (&dh, &a))| {
                if a > 0.0 {
                    dh * mask.map_or(1.0, |m| m[i])
                } else {
                    0.0
                }
            })
            .collect()
    };
    let masks = cache.masks.as_ref();
    let d_pre2 = backprop_relu(&d_h2, &cache.pre2, masks.map(|m| &m.hidden2));
    g.b2.copy_from_slice(&d_pre2);
    g.w2.add_outer(1.0, &d_pre2, &cache.hidden1);
    let d_h1 = params.w2.matvec_t(&d_pre2);

    let d_pre1 = backprop_relu(&d_h1, &cache.pre1, masks.map(|m| &m.hidden1));
    g.b1.copy_from_slice(&d_pre1);
    g.w1.add_outer(1.0, &d_pre1, &cache.classifier_input);
    let d_z = params.w1.matvec_t(&d_pre1);
    if params.variant.classifies_with_relation() {
        linalg::axpy(1.0, &d_z[d..], &mut d_rel);
    }
    let d_s = &d_z[..d];

    // s = Σ α_i x_i, α = softmax(g), g_i = tanh(u_i)
    let att = &cache.attention;
    let n = input.tokens.len();
    let mut d_tokens: Vec<Vec<f64>> = Vec::with_capacity(n);
    let d_alpha: Vec<f64> = input.tokens.iter().map(|x| dot(d_s, x)).collect();
    let mean: f64 = att.weights.iter().zip(&d_alpha).map(|(a, da)| a * da).sum();
    let attends_rel = params.variant.attends_with_relation();
    for (i, x) in input.tokens.iter().enumerate() {
        let mut dx: Vec<f64> = d_s.iter().map(|v| v * att.weights[i]).collect();
        if !input.is_pad(i) {
            let d_g = att.weights[i] * (d_alpha[i] - mean);
            let d_u = d_g * (1.0 - att.scores[i] * att.scores[i]);
            linalg::axpy(d_u, x, &mut g.att_w[..d]);
            if attends_rel {
                linalg::axpy(d_u, input.relation, &mut g.att_w[d..]);
                linalg::axpy(d_u, &params.att_w[d..], &mut d_rel);
            }
            g.att_b += d_u;
            linalg::axpy(d_u, &params.att_w[..d], &mut dx);
        }
        d_tokens.push(dx);
    }

    Gradients {
        loss: loss(cache, gold),
        params: g,
        tokens: d_tokens,
        relation: d_rel,
    }
}

/// One AdaGrad update: `G += g²; θ −= lr · g / (√G + ε)`.
pub fn adagrad_update(theta: &mut [f64], grad: &[f64], acc: &mut [f64], lr: f64, eps: f64) {
    for ((t, &g), a) in theta.iter_mut().zip(grad).zip(acc.iter_mut()) {
        *a += g * g;
        *t -= lr * g / (a.sqrt() + eps);
    }
}

/// AdaGrad over every parameter block; `acc` starts as [`NamParams::zeros_like`].
pub fn adagrad_step(
    params: &mut NamParams,
    grads: &NamParams,
    acc: &mut NamParams,
    lr: f64,
    eps: f64,
) {
    for ((p, g), a) in params
        .blocks_mut()
        .into_iter()
        .zip(grads.blocks())
        .zip(acc.blocks_mut())
    {
        adagrad_update(p.1, g.1, a.1, lr, eps);
    }
}
