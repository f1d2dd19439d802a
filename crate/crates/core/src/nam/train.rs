//! Instance encoding, mini-batch training and prediction.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::net::{adagrad_step, adagrad_update, backward, forward, Masks, NamInput};
use super::{NamDims, NamParams, NamVariant};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::eval::Metrics;
use crate::instances::{Instance, Label, Level};
use crate::kge::{Relation, TripleStore};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub variant: NamVariant,
    pub dims: NamDims,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dropout: f64,
    pub adagrad_epsilon: f64,
    pub max_epochs: usize,
    /// Epochs without held-out improvement before stopping.
    pub patience: usize,
    /// Fraction of the training instances held out for early stopping.
    pub holdout_fraction: f64,
    pub seed: u64,
    pub max_sequence_length: usize,
    pub finetune_relations: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            variant: NamVariant::Nam,
            dims: NamDims::default(),
            learning_rate: 0.01,
            batch_size: 32,
            dropout: 0.5,
            adagrad_epsilon: 1e-8,
            max_epochs: 30,
            patience: 5,
            holdout_fraction: 0.1,
            seed: 1,
            max_sequence_length: 128,
            finetune_relations: false,
        }
    }
}

impl TrainConfig {
    /// Every violated constraint, in field order.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let d = &self.dims;
        if d.word == 0 || d.relation == 0 || d.hidden1 == 0 || d.hidden2 == 0 {
            out.push("nam dimensions must be positive".to_string());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            out.push(format!(
                "nam learning rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            out.push("nam batch size must be at least 1".to_string());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            out.push(format!(
                "nam dropout must be in [0, 1), got {}",
                self.dropout
            ));
        }
        if !(self.adagrad_epsilon > 0.0) {
            out.push("nam AdaGrad epsilon must be positive".to_string());
        }
        if self.max_epochs == 0 {
            out.push("nam epochs must be at least 1".to_string());
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            out.push(format!(
                "nam holdout fraction must be in [0, 1), got {}",
                self.holdout_fraction
            ));
        }
        if self.max_sequence_length < 2 {
            out.push("nam max sequence length must be at least 2".to_string());
        }
        out
    }
}

/// An instance resolved against the embedding table and triple store.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedInstance {
    pub pmid: String,
    pub level: Level,
    pub chemical: String,
    pub disease: String,
    pub tokens: Vec<String>,
    /// Row of each token in the embedding table.
    pub ids: Vec<usize>,
    pub relation: Relation,
    pub label: Label,
}

/// Caps a sequence at `max_len` tokens, keeping those closest to an
/// occurrence of either entity (ties go left). Entity tokens are never
/// dropped unless they alone exceed the cap.
pub fn truncate_sequence(
    seq: &[String],
    chemical: &str,
    disease: &str,
    max_len: usize,
) -> Vec<String> {
    if seq.len() <= max_len {
        return seq.to_vec();
    }
    let mut anchors: Vec<usize> = (0..seq.len())
        .filter(|&i| seq[i] == chemical || seq[i] == disease)
        .collect();
    if anchors.is_empty() {
        anchors.push(seq.len() / 2);
    }
    let dist = |i: usize| anchors.iter().map(|&a| a.abs_diff(i)).min().unwrap();
    let mut order: Vec<usize> = (0..seq.len()).collect();
    order.sort_by_key(|&i| (dist(i), i));
    order.truncate(max_len);
    order.sort_unstable();
    order.into_iter().map(|i| seq[i].clone()).collect()
}

/// Resolves tokens (initializing unknown ones in `table`, in order) and
/// assigns each pair its knowledge-base relation.
pub fn encode(
    instances: &[Instance],
    table: &mut EmbeddingTable,
    store: &TripleStore,
    max_sequence_length: usize,
) -> Vec<EncodedInstance> {
    instances
        .iter()
        .map(|inst| {
            let tokens = truncate_sequence(
                &inst.sequence,
                &inst.chemical,
                &inst.disease,
                max_sequence_length,
            );
            let ids = tokens.iter().map(|t| table.index_or_init(t)).collect();
            EncodedInstance {
                pmid: inst.pmid.clone(),
                level: inst.level,
                chemical: inst.chemical.clone(),
                disease: inst.disease.clone(),
                tokens,
                ids,
                relation: store.assign_relation(&inst.chemical, &inst.disease),
                label: inst.label,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub pmid: String,
    pub level: Level,
    pub chemical: String,
    pub disease: String,
    /// `[p(Negative), p(Positive)]`.
    pub probabilities: [f64; 2],
    pub label: Label,
    /// Per-token attention weights; empty when read back from a dump.
    pub attention: Vec<f64>,
    pub tokens: Vec<String>,
}

impl Prediction {
    pub fn p_positive(&self) -> f64 {
        self.probabilities[1]
    }
}

/// A trained classifier with the relation vectors it was trained against.
#[derive(Debug, Clone, PartialEq)]
pub struct NamModel {
    pub params: NamParams,
    /// Indexed by [`Relation::index`].
    pub relations: Vec<Vec<f64>>,
}

impl NamModel {
    fn input<'a>(&'a self, ex: &EncodedInstance, table: &'a EmbeddingTable) -> NamInput<'a> {
        NamInput::new(
            ex.ids.iter().map(|&i| table.vector(i)).collect(),
            &self.relations[ex.relation.index()],
        )
    }

    /// Inference-mode prediction; exact ties go to Negative.
    pub fn predict(&self, ex: &EncodedInstance, table: &EmbeddingTable) -> Result<Prediction> {
        let cache = forward(&self.input(ex, table), &self.params, None)?;
        let probabilities = [cache.output[0], cache.output[1]];
        Ok(Prediction {
            pmid: ex.pmid.clone(),
            level: ex.level,
            chemical: ex.chemical.clone(),
            disease: ex.disease.clone(),
            label: if probabilities[1] > probabilities[0] {
                Label::Positive
            } else {
                Label::Negative
            },
            probabilities,
            attention: cache.attention.weights,
            tokens: ex.tokens.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Positive-class F on the held-out split, if there is one.
    pub holdout_f: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
}

fn holdout_f(model: &NamModel, held: &[&EncodedInstance], table: &EmbeddingTable) -> Result<f64> {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for ex in held {
        let pred = model.predict(ex, table)?.label;
        match (pred, ex.label) {
            (Label::Positive, Label::Positive) => tp += 1,
            (Label::Positive, Label::Negative) => fp += 1,
            (Label::Negative, Label::Positive) => fn_ += 1,
            _ => {}
        }
    }
    Ok(Metrics::from_counts(tp, fp, fn_).f)
}

/// Mini-batch AdaGrad on cross-entropy with early stopping on a held-out
/// split. Word and entity vectors stay frozen; relation vectors are
/// updated only with `finetune_relations`.
pub fn train(
    examples: &[EncodedInstance],
    table: &EmbeddingTable,
    relations: &[Vec<f64>],
    config: &TrainConfig,
) -> Result<(NamModel, TrainReport)> {
    let mut problems = config.problems();
    if table.dim() != config.dims.word {
        problems.push(format!(
            "embedding dimension {} does not match nam word dimension {}",
            table.dim(),
            config.dims.word
        ));
    }
    if relations.len() != Relation::ALL.len()
        || relations.iter().any(|r| r.len() != config.dims.relation)
    {
        problems.push(format!(
            "expected {} relation vectors of dimension {}",
            Relation::ALL.len(),
            config.dims.relation
        ));
    }
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    if examples.is_empty() {
        return Err(Error::Invalid("no training instances".into()));
    }
    if let Some(ex) = examples.iter().find(|e| e.ids.is_empty()) {
        return Err(Error::Invalid(format!(
            "empty sequence for ({}, {}) in {}",
            ex.chemical, ex.disease, ex.pmid
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = NamModel {
        params: NamParams::init(config.variant, config.dims, &mut rng),
        relations: relations.to_vec(),
    };

    let mut order: Vec<&EncodedInstance> = examples.iter().collect();
    order.shuffle(&mut rng);
    let n_held = (examples.len() as f64 * config.holdout_fraction).round() as usize;
    let n_held = if n_held >= examples.len() { 0 } else { n_held };
    let (held, mut train_set) = {
        let (h, t) = order.split_at(n_held);
        (h.to_vec(), t.to_vec())
    };

    let mut acc = model.params.zeros_like();
    let mut rel_acc = vec![vec![0.0; config.dims.relation]; Relation::ALL.len()];
    let mut report = TrainReport {
        epochs: Vec::new(),
        best_epoch: 0,
    };
    let mut best: Option<(f64, NamModel)> = None;
    let mut stale = 0;

    for epoch in 1..=config.max_epochs {
        train_set.shuffle(&mut rng);
        let mut total_loss = 0.0;
        for batch in train_set.chunks(config.batch_size) {
            let mut grads = model.params.zeros_like();
            let mut rel_grads = vec![vec![0.0; config.dims.relation]; Relation::ALL.len()];
            for ex in batch {
                let input = model.input(ex, table);
                let masks = (config.dropout > 0.0)
                    .then(|| Masks::sample(&model.params, config.dropout, &mut rng));
                let cache = forward(&input, &model.params, masks.as_ref())?;
                let g = backward(&input, &cache, ex.label.index(), &model.params);
                total_loss += g.loss;
                grads.add_assign(&g.params);
                if config.finetune_relations {
                    crate::linalg::axpy(1.0, &g.relation, &mut rel_grads[ex.relation.index()]);
                }
            }
            let scale = 1.0 / batch.len() as f64;
            grads.scale(scale);
            adagrad_step(
                &mut model.params,
                &grads,
                &mut acc,
                config.learning_rate,
                config.adagrad_epsilon,
            );
            if config.finetune_relations {
                for (r, (g, a)) in model
                    .relations
                    .iter_mut()
                    .zip(rel_grads.iter_mut().zip(&mut rel_acc))
                {
                    g.iter_mut().for_each(|x| *x *= scale);
                    adagrad_update(r, g, a, config.learning_rate, config.adagrad_epsilon);
                }
            }
        }
        let mean_loss = total_loss / train_set.len().max(1) as f64;
        if !mean_loss.is_finite() {
            return Err(Error::NonFinite(format!(
                "NAM training loss at epoch {epoch}"
            )));
        }
        let f = if held.is_empty() {
            None
        } else {
            Some(holdout_f(&model, &held, table)?)
        };
        log::debug!("nam epoch {epoch}: loss {mean_loss:.5}, held-out F {f:?}");
        report.epochs.push(EpochStats {
            epoch,
            mean_loss,
            holdout_f: f,
        });

        match f {
            None => report.best_epoch = epoch,
            Some(f) => {
                if best.as_ref().map_or(true, |(b, _)| f > *b) {
                    best = Some((f, model.clone()));
                    report.best_epoch = epoch;
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= config.patience {
                        break;
                    }
                }
            }
        }
    }
    if let Some((_, kept)) = best {
        model = kept;
    }
    Ok((model, report))
}

/// TSV: pmid, level, chemical, disease, p_positive, label.
pub fn write_predictions(predictions: &[Prediction]) -> String {
    let mut out = String::new();
    for p in predictions {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            p.pmid,
            p.level,
            p.chemical,
            p.disease,
            p.p_positive(),
            p.label
        );
    }
    out
}

pub fn read_predictions(input: &str) -> Result<Vec<Prediction>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [pmid, level, chemical, disease, p, label] = cols[..] else {
            return Err(Error::format(
                n + 1,
                format!("expected 6 columns, found {}", cols.len()),
            ));
        };
        let p: f64 = p
            .parse()
            .map_err(|_| Error::format(n + 1, format!("bad probability {p:?}")))?;
        let wrap = |e: Error| Error::format(n + 1, e.to_string());
        out.push(Prediction {
            pmid: pmid.to_string(),
            level: level.parse().map_err(wrap)?,
            chemical: chemical.to_string(),
            disease: disease.to_string(),
            probabilities: [1.0 - p, p],
            label: label.parse().map_err(wrap)?,
            attention: Vec::new(),
            tokens: Vec::new(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn short_sequences_untouched() {
        let s = strings("a C b D c");
        assert_eq!(truncate_sequence(&s, "C", "D", 5), s);
    }

    #[test]
    fn truncation_keeps_entities_and_neighbours() {
        let s = strings("a b c C d e f g h D i j k");
        assert_eq!(truncate_sequence(&s, "C", "D", 5), strings("c C d h D"));
        let t = truncate_sequence(&s, "C", "D", 7);
        assert_eq!(t, strings("b c C d h D i"));
    }

    #[test]
    fn prediction_dump_round_trips() {
        let p = Prediction {
            pmid: "1".into(),
            level: Level::Inter,
            chemical: "D1".into(),
            disease: "D2".into(),
            probabilities: [0.25, 0.75],
            label: Label::Positive,
            attention: vec![],
            tokens: vec![],
        };
        let back = read_predictions(&write_predictions(&[p.clone()])).unwrap();
        assert_eq!(back, [p]);
    }

    #[test]
    fn config_problems_are_exhaustive() {
        let c = TrainConfig {
            batch_size: 0,
            dropout: 1.0,
            ..TrainConfig::default()
        };
        assert_eq!(c.problems().len(), 2);
        assert!(TrainConfig::default().problems().is_empty());
    }
}
