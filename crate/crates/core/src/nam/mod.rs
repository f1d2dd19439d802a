//! Attention classifier over candidate instances.
//!
//! Each context vector is scored against the pair's relation vector, the
//! softmax-weighted context is concatenated with the relation vector and
//! passed through a two-layer ReLU perceptron with dropout and a softmax
//! output. Three ablations drop the relation vector from the scorer, the
//! classifier input, or both.

mod net;
mod train;

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::kge::Relation;
use crate::linalg::Matrix;

pub use net::{
    adagrad_step, adagrad_update, attention, backward, forward, loss, Attention, Cache, Gradients,
    Masks, NamInput,
};
pub use train::{
    encode, read_predictions, train, truncate_sequence, write_predictions, EncodedInstance,
    EpochStats, NamModel, Prediction, TrainConfig, TrainReport,
};

/// Number of output classes (Negative, Positive).
pub const N_OUT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamVariant {
    /// Relation in the attention scorer and in the classifier input.
    Nam,
    /// Context only, everywhere.
    CnCn,
    /// Relation in the scorer only.
    KncnCn,
    /// Relation in the classifier input only.
    CnKncn,
}

impl NamVariant {
    pub const ALL: [NamVariant; 4] = [
        NamVariant::Nam,
        NamVariant::CnCn,
        NamVariant::KncnCn,
        NamVariant::CnKncn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NamVariant::Nam => "NAM",
            NamVariant::CnCn => "CN-CN",
            NamVariant::KncnCn => "KNCN-CN",
            NamVariant::CnKncn => "CN-KNCN",
        }
    }

    pub fn attends_with_relation(self) -> bool {
        matches!(self, NamVariant::Nam | NamVariant::KncnCn)
    }

    pub fn classifies_with_relation(self) -> bool {
        matches!(self, NamVariant::Nam | NamVariant::CnKncn)
    }
}

impl fmt::Display for NamVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NamVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NamVariant::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Invalid(format!("unknown NAM variant {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NamDims {
    pub word: usize,
    pub relation: usize,
    pub hidden1: usize,
    pub hidden2: usize,
}

impl Default for NamDims {
    fn default() -> Self {
        NamDims {
            word: 100,
            relation: 100,
            hidden1: 100,
            hidden2: 50,
        }
    }
}

impl NamDims {
    pub fn attention_width(&self, variant: NamVariant) -> usize {
        self.word
            + if variant.attends_with_relation() {
                self.relation
            } else {
                0
            }
    }

    pub fn classifier_width(&self, variant: NamVariant) -> usize {
        self.word
            + if variant.classifies_with_relation() {
                self.relation
            } else {
                0
            }
    }
}

/// Trainable weights. Gradients and AdaGrad accumulators use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct NamParams {
    pub variant: NamVariant,
    pub dims: NamDims,
    pub att_w: Vec<f64>,
    pub att_b: f64,
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub wo: Matrix,
    pub bo: Vec<f64>,
}

const BLOCKS: [&str; 8] = ["att_w", "att_b", "w1", "b1", "w2", "b2", "wo", "bo"];

impl NamParams {
    pub fn zeros(variant: NamVariant, dims: NamDims) -> Self {
        NamParams {
            variant,
            dims,
            att_w: vec![0.0; dims.attention_width(variant)],
            att_b: 0.0,
            w1: Matrix::zeros(dims.hidden1, dims.classifier_width(variant)),
            b1: vec![0.0; dims.hidden1],
            w2: Matrix::zeros(dims.hidden2, dims.hidden1),
            b2: vec![0.0; dims.hidden2],
            wo: Matrix::zeros(N_OUT, dims.hidden2),
            bo: vec![0.0; N_OUT],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(variant: NamVariant, dims: NamDims, rng: &mut R) -> Self {
        let att = Matrix::glorot(rng, 1, dims.attention_width(variant));
        NamParams {
            att_w: att.data,
            w1: Matrix::glorot(rng, dims.hidden1, dims.classifier_width(variant)),
            w2: Matrix::glorot(rng, dims.hidden2, dims.hidden1),
            wo: Matrix::glorot(rng, N_OUT, dims.hidden2),
            ..NamParams::zeros(variant, dims)
        }
    }

    pub fn zeros_like(&self) -> Self {
        NamParams::zeros(self.variant, self.dims)
    }

    pub fn blocks(&self) -> [(&'static str, &[f64]); 8] {
        [
            (BLOCKS[0], &self.att_w),
            (BLOCKS[1], std::slice::from_ref(&self.att_b)),
            (BLOCKS[2], &self.w1.data),
            (BLOCKS[3], &self.b1),
            (BLOCKS[4], &self.w2.data),
            (BLOCKS[5], &self.b2),
            (BLOCKS[6], &self.wo.data),
            (BLOCKS[7], &self.bo),
        ]
    }

    pub fn blocks_mut(&mut self) -> [(&'static str, &mut [f64]); 8] {
        [
            (BLOCKS[0], &mut self.att_w),
            (BLOCKS[1], std::slice::from_mut(&mut self.att_b)),
            (BLOCKS[2], &mut self.w1.data),
            (BLOCKS[3], &mut self.b1),
            (BLOCKS[4], &mut self.w2.data),
            (BLOCKS[5], &mut self.b2),
            (BLOCKS[6], &mut self.wo.data),
            (BLOCKS[7], &mut self.bo),
        ]
    }

    fn block_shape(&self, name: &str) -> (usize, usize) {
        match name {
            "att_w" => (1, self.att_w.len()),
            "att_b" => (1, 1),
            "w1" => (self.w1.rows, self.w1.cols),
            "b1" => (1, self.b1.len()),
            "w2" => (self.w2.rows, self.w2.cols),
            "b2" => (1, self.b2.len()),
            "wo" => (self.wo.rows, self.wo.cols),
            _ => (1, self.bo.len()),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (_, b) in self.blocks_mut() {
            b.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn add_assign(&mut self, other: &NamParams) {
        for ((_, a), (_, b)) in self.blocks_mut().into_iter().zip(other.blocks()) {
            crate::linalg::axpy(1.0, b, a);
        }
    }
}

fn write_row(out: &mut String, v: &[f64]) {
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x}");
    }
    out.push('\n');
}

impl NamModel {
    /// Text format: a `nam <variant> <d> <k> <n_h1> <n_h2>` header, then
    /// `<block> <rows> <cols>` headers each followed by `rows` lines, and a
    /// final `relations` block with one named line per relation.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut out = format!(
            "nam {} {} {} {} {}\n",
            p.variant, p.dims.word, p.dims.relation, p.dims.hidden1, p.dims.hidden2
        );
        for (name, data) in p.blocks() {
            let (rows, cols) = p.block_shape(name);
            let _ = writeln!(out, "{name} {rows} {cols}");
            for row in data.chunks(cols) {
                write_row(&mut out, row);
            }
        }
        let _ = writeln!(
            out,
            "relations {} {}",
            self.relations.len(),
            p.dims.relation
        );
        for r in Relation::ALL {
            out.push_str(r.as_str());
            out.push(' ');
            write_row(&mut out, &self.relations[r.index()]);
        }
        out
    }

    pub fn from_text(input: &str) -> Result<Self> {
        let mut lines = input
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l))
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::format(1, "empty model file"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let ["nam", variant, d, k, h1, h2] = parts[..] else {
            return Err(Error::format(1, format!("bad header {header:?}")));
        };
        let num = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::format(1, format!("bad dimension {s:?}")))
        };
        let dims = NamDims {
            word: num(d)?,
            relation: num(k)?,
            hidden1: num(h1)?,
            hidden2: num(h2)?,
        };
        let mut params = NamParams::zeros(variant.parse()?, dims);
        let floats = |n: usize, s: &str| -> Result<Vec<f64>> {
            s.split_whitespace()
                .map(|x| {
                    x.parse()
                        .map_err(|e| Error::format(n, format!("bad float {x:?}: {e}")))
                })
                .collect()
        };

        for expected in BLOCKS {
            let (n, line) = lines
                .next()
                .ok_or_else(|| Error::format(0, format!("missing block {expected}")))?;
            let head: Vec<&str> = line.split_whitespace().collect();
            let shape = params.block_shape(expected);
            if head.len() != 3
                || head[0] != expected
                || num(head[1])? != shape.0
                || num(head[2])? != shape.1
            {
                return Err(Error::format(
                    n,
                    format!(
                        "expected block `{expected} {} {}`, found {line:?}",
                        shape.0, shape.1
                    ),
                ));
            }
            let mut data = Vec::with_capacity(shape.0 * shape.1);
            for _ in 0..shape.0 {
                let (n, row) = lines
                    .next()
                    .ok_or_else(|| Error::format(n, format!("truncated block {expected}")))?;
                let v = floats(n, row)?;
                if v.len() != shape.1 {
                    return Err(Error::format(
                        n,
                        format!("expected {} values, found {}", shape.1, v.len()),
                    ));
                }
                data.extend(v);
            }
            let target = params
                .blocks_mut()
                .into_iter()
                .find(|(name, _)| *name == expected)
                .unwrap()
                .1;
            target.copy_from_slice(&data);
        }

        let (n, line) = lines
            .next()
            .ok_or_else(|| Error::format(0, "missing relations block"))?;
        if !line.starts_with("relations ") {
            return Err(Error::format(
                n,
                format!("expected relations block, found {line:?}"),
            ));
        }
        let mut relations = vec![Vec::new(); Relation::ALL.len()];
        for _ in 0..Relation::ALL.len() {
            let (n, row) = lines
                .next()
                .ok_or_else(|| Error::format(n, "truncated relations block"))?;
            let (name, rest) = row.split_once(' ').unwrap_or((row, ""));
            let r: Relation = name
                .parse()
                .map_err(|e: Error| Error::format(n, e.to_string()))?;
            let v = floats(n, rest)?;
            if v.len() != dims.relation {
                return Err(Error::format(
                    n,
                    format!("expected {} values, found {}", dims.relation, v.len()),
                ));
            }
            relations[r.index()] = v;
        }
        Ok(NamModel { params, relations })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn variant_names_round_trip() {
        for v in NamVariant::ALL {
            assert_eq!(v.as_str().parse::<NamVariant>().unwrap(), v);
        }
        assert_eq!("cn-kncn".parse::<NamVariant>().unwrap(), NamVariant::CnKncn);
    }

    #[test]
    fn model_text_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dims = NamDims {
            word: 3,
            relation: 2,
            hidden1: 4,
            hidden2: 2,
        };
        for v in NamVariant::ALL {
            let mut params = NamParams::init(v, dims, &mut rng);
            params.att_b = 0.123456789012345;
            let relations = (0..4)
                .map(|_| crate::linalg::uniform_vec(&mut rng, 2, 1.0))
                .collect();
            let model = NamModel { params, relations };
            let back = NamModel::from_text(&model.to_text()).unwrap();
            assert_eq!(back.params, model.params);
            assert_eq!(back.relations, model.relations);
        }
    }

    #[test]
    fn wrong_block_is_reported() {
        let model = NamModel {
            params: NamParams::zeros(NamVariant::CnCn, NamDims::default()),
            relations: vec![vec![0.0; 100]; 4],
        };
        let text = model.to_text().replacen("w1 100 100", "w1 100 99", 1);
        assert!(matches!(
            NamModel::from_text(&text),
            Err(Error::Format { .. })
        ));
    }
}
