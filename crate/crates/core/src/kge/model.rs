use std::fmt::{self, Write as _};
use std::str::FromStr;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Relation, Triple, TripleStore};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::instances::Label;
use crate::linalg::{self, dot, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgeVariant {
    TransE,
    TransH,
    TransR,
}

impl fmt::Display for KgeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KgeVariant::TransE => "TransE",
            KgeVariant::TransH => "TransH",
            KgeVariant::TransR => "TransR",
        })
    }
}

impl FromStr for KgeVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "transe" => Ok(KgeVariant::TransE),
            "transh" => Ok(KgeVariant::TransH),
            "transr" => Ok(KgeVariant::TransR),
            _ => Err(Error::Invalid(format!("unknown KGE variant {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceNorm {
    L1,
    L2,
}

impl fmt::Display for DistanceNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceNorm::L1 => "l1",
            DistanceNorm::L2 => "l2",
        })
    }
}

impl FromStr for DistanceNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(DistanceNorm::L1),
            "l2" => Ok(DistanceNorm::L2),
            _ => Err(Error::Invalid(format!("unknown distance norm {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KgeConfig {
    pub variant: KgeVariant,
    pub dim: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub norm: DistanceNorm,
}

impl Default for KgeConfig {
    fn default() -> Self {
        KgeConfig {
            variant: KgeVariant::TransE,
            dim: 100,
            margin: 1.0,
            learning_rate: 0.001,
            epochs: 500,
            seed: 1,
            norm: DistanceNorm::L2,
        }
    }
}

/// Relation-specific parameters of TransH and TransR.
#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    None,
    /// Unit hyperplane normal per relation.
    Hyperplanes(Vec<Vec<f64>>),
    /// Entity-to-relation space matrix per relation.
    Matrices(Vec<Matrix>),
}

/// Borrowed view of one relation's projection parameters.
#[derive(Debug, Clone, Copy)]
pub enum ProjectionRef<'a> {
    None,
    Hyperplane(&'a [f64]),
    Matrix(&'a Matrix),
}

impl Projection {
    pub fn get(&self, r: Relation) -> ProjectionRef<'_> {
        match self {
            Projection::None => ProjectionRef::None,
            Projection::Hyperplanes(w) => ProjectionRef::Hyperplane(&w[r.index()]),
            Projection::Matrices(m) => ProjectionRef::Matrix(&m[r.index()]),
        }
    }
}

/// Distance of one triple and its subgradient with respect to every input.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceGrad {
    pub value: f64,
    pub head: Vec<f64>,
    pub relation: Vec<f64>,
    pub tail: Vec<f64>,
    /// Hyperplane normal or row-major matrix gradient.
    pub projection: Option<Vec<f64>>,
}

fn translation(h: &[f64], r: &[f64], t: &[f64], proj: ProjectionRef<'_>) -> Vec<f64> {
    let e: Vec<f64> = h.iter().zip(t).map(|(a, b)| a - b).collect();
    let mut v = match proj {
        ProjectionRef::None => e,
        ProjectionRef::Hyperplane(w) => {
            let we = dot(w, &e);
            e.iter().zip(w).map(|(ei, wi)| ei - we * wi).collect()
        }
        ProjectionRef::Matrix(m) => m.matvec(&e),
    };
    linalg::axpy(1.0, r, &mut v);
    v
}

fn norm_of(v: &[f64], norm: DistanceNorm) -> f64 {
    match norm {
        DistanceNorm::L1 => linalg::l1_norm(v),
        DistanceNorm::L2 => linalg::norm(v),
    }
}

/// Distance `‖P(h) + r − P(t)‖` with the variant's projection `P`.
pub fn distance(
    h: &[f64],
    r: &[f64],
    t: &[f64],
    proj: ProjectionRef<'_>,
    norm: DistanceNorm,
) -> f64 {
    norm_of(&translation(h, r, t, proj), norm)
}

pub fn distance_grad(
    h: &[f64],
    r: &[f64],
    t: &[f64],
    proj: ProjectionRef<'_>,
    norm: DistanceNorm,
) -> DistanceGrad {
    let v = translation(h, r, t, proj);
    let value = norm_of(&v, norm);
    let u: Vec<f64> = match norm {
        DistanceNorm::L2 if value > 0.0 => v.iter().map(|x| x / value).collect(),
        DistanceNorm::L2 => vec![0.0; v.len()],
        DistanceNorm::L1 => v
            .iter()
            .map(|&x| {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            })
            .collect(),
    };
    let (head, projection) = match proj {
        ProjectionRef::None => (u.clone(), None),
        ProjectionRef::Hyperplane(w) => {
            let wu = dot(w, &u);
            let e: Vec<f64> = h.iter().zip(t).map(|(a, b)| a - b).collect();
            let we = dot(w, &e);
            let dh = u.iter().zip(w).map(|(ui, wi)| ui - wu * wi).collect();
            let dw = u
                .iter()
                .zip(&e)
                .map(|(ui, ei)| -(we * ui + wu * ei))
                .collect();
            (dh, Some(dw))
        }
        ProjectionRef::Matrix(m) => {
            let e: Vec<f64> = h.iter().zip(t).map(|(a, b)| a - b).collect();
            let mut dm = Matrix::zeros(m.rows, m.cols);
            dm.add_outer(1.0, &u, &e);
            (m.matvec_t(&u), Some(dm.data))
        }
    };
    DistanceGrad {
        value,
        tail: head.iter().map(|x| -x).collect(),
        head,
        relation: u,
        projection,
    }
}

/// `max(0, γ + ‖h + r − t‖ − ‖h' + r − t'‖)` for one positive and one
/// corrupted TransE triple sharing the relation `r`.
pub fn margin_loss(
    pos: (&[f64], &[f64], &[f64]),
    neg: (&[f64], &[f64]),
    margin: f64,
    norm: DistanceNorm,
) -> f64 {
    let (h, r, t) = pos;
    let d_pos = distance(h, r, t, ProjectionRef::None, norm);
    let d_neg = distance(neg.0, r, neg.1, ProjectionRef::None, norm);
    (margin + d_pos - d_neg).max(0.0)
}

/// Subgradient of [`margin_loss`] with the five vectors treated as
/// independent inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginGrad {
    pub loss: f64,
    pub head: Vec<f64>,
    pub relation: Vec<f64>,
    pub tail: Vec<f64>,
    pub neg_head: Vec<f64>,
    pub neg_tail: Vec<f64>,
}

pub fn margin_loss_grad(
    pos: (&[f64], &[f64], &[f64]),
    neg: (&[f64], &[f64]),
    margin: f64,
    norm: DistanceNorm,
) -> MarginGrad {
    let (h, r, t) = pos;
    let gp = distance_grad(h, r, t, ProjectionRef::None, norm);
    let gn = distance_grad(neg.0, r, neg.1, ProjectionRef::None, norm);
    let loss = margin + gp.value - gn.value;
    if loss <= 0.0 {
        let z = vec![0.0; r.len()];
        return MarginGrad {
            loss: 0.0,
            head: z.clone(),
            relation: z.clone(),
            tail: z.clone(),
            neg_head: z.clone(),
            neg_tail: z,
        };
    }
    MarginGrad {
        loss,
        relation: gp
            .relation
            .iter()
            .zip(&gn.relation)
            .map(|(a, b)| a - b)
            .collect(),
        head: gp.head,
        tail: gp.tail,
        neg_head: gn.head.iter().map(|x| -x).collect(),
        neg_tail: gn.tail.iter().map(|x| -x).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KgeModel {
    pub variant: KgeVariant,
    pub dim: usize,
    pub norm: DistanceNorm,
    pub entities: IndexMap<String, Vec<f64>>,
    /// Indexed by [`Relation::index`].
    pub relations: Vec<Vec<f64>>,
    pub projection: Projection,
}

/// A trained model together with its per-epoch mean loss.
#[derive(Debug, Clone)]
pub struct KgeRun {
    pub model: KgeModel,
    pub epoch_losses: Vec<f64>,
}

impl KgeModel {
    pub fn entity(&self, id: &str) -> Result<&[f64]> {
        self.entities
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    pub fn relation(&self, r: Relation) -> &[f64] {
        &self.relations[r.index()]
    }

    /// Variant distance of a triple; for TransE this is `‖e_c + r − e_d‖`.
    pub fn score(&self, triple: &Triple) -> Result<f64> {
        Ok(distance(
            self.entity(&triple.head)?,
            self.relation(triple.relation),
            self.entity(&triple.tail)?,
            self.projection.get(triple.relation),
            self.norm,
        ))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "kge {} {} {} {}\n",
            self.variant,
            self.dim,
            self.entities.len(),
            self.relations.len()
        );
        let line = |out: &mut String, name: &str, v: &[f64]| {
            out.push_str(name);
            for x in v {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        };
        for (id, v) in &self.entities {
            line(&mut out, id, v);
        }
        for r in Relation::ALL {
            line(&mut out, r.as_str(), self.relation(r));
        }
        match &self.projection {
            Projection::None => {}
            Projection::Hyperplanes(ws) => {
                out.push_str("[hyperplanes]\n");
                for r in Relation::ALL {
                    line(&mut out, r.as_str(), &ws[r.index()]);
                }
            }
            Projection::Matrices(ms) => {
                out.push_str("[matrices]\n");
                for r in Relation::ALL {
                    line(&mut out, r.as_str(), &ms[r.index()].data);
                }
            }
        }
        if self.norm == DistanceNorm::L1 {
            out.push_str("[distance]\nl1\n");
        }
        out
    }

    pub fn from_text(input: &str) -> Result<Self> {
        let mut lines = input
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::format(1, "empty model file"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let ["kge", variant, dim, n_ent, n_rel] = parts[..] else {
            return Err(Error::format(1, format!("bad header {header:?}")));
        };
        let bad = |what: &str| Error::format(1, format!("bad {what} in header"));
        let variant: KgeVariant = variant.parse()?;
        let dim: usize = dim.parse().map_err(|_| bad("dimension"))?;
        let n_ent: usize = n_ent.parse().map_err(|_| bad("entity count"))?;
        let n_rel: usize = n_rel.parse().map_err(|_| bad("relation count"))?;
        if n_rel != Relation::ALL.len() {
            return Err(bad("relation count"));
        }

        let mut rows = Rows(lines);
        let mut entities = IndexMap::new();
        for _ in 0..n_ent {
            let (_, id, v) = rows.next(dim)?;
            entities.insert(id, v);
        }
        let mut relations = vec![Vec::new(); Relation::ALL.len()];
        rows.relations(dim, &mut relations)?;

        let mut projection = Projection::None;
        let mut norm = DistanceNorm::L2;
        while let Some((n, section)) = rows.0.next() {
            match section.trim() {
                "[hyperplanes]" => {
                    let mut ws = vec![Vec::new(); Relation::ALL.len()];
                    rows.relations(dim, &mut ws)?;
                    projection = Projection::Hyperplanes(ws);
                }
                "[matrices]" => {
                    let mut ms = vec![Vec::new(); Relation::ALL.len()];
                    rows.relations(dim * dim, &mut ms)?;
                    projection = Projection::Matrices(
                        ms.into_iter()
                            .map(|data| Matrix {
                                rows: dim,
                                cols: dim,
                                data,
                            })
                            .collect(),
                    );
                }
                "[distance]" => {
                    let (_, name, _) = rows.next(0)?;
                    norm = name.parse()?;
                }
                other => return Err(Error::format(n + 1, format!("unknown section {other:?}"))),
            }
        }
        let expected = match variant {
            KgeVariant::TransE => matches!(projection, Projection::None),
            KgeVariant::TransH => matches!(projection, Projection::Hyperplanes(_)),
            KgeVariant::TransR => matches!(projection, Projection::Matrices(_)),
        };
        if !expected {
            return Err(Error::format(
                1,
                format!("{variant} model without its projection section"),
            ));
        }
        Ok(KgeModel {
            variant,
            dim,
            norm,
            entities,
            relations,
            projection,
        })
    }
}

struct Rows<I>(I);

impl<'a, I: Iterator<Item = (usize, &'a str)>> Rows<I> {
    /// Next `<name> <floats>` row; `width` 0 accepts any length.
    fn next(&mut self, width: usize) -> Result<(usize, String, Vec<f64>)> {
        let (n, line) = self
            .0
            .next()
            .ok_or_else(|| Error::format(0, "unexpected end of model file"))?;
        let mut it = line.split_whitespace();
        let name = it.next().unwrap_or_default().to_string();
        let v: Vec<f64> = it
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format(n + 1, format!("bad float: {e}")))?;
        if width > 0 && v.len() != width {
            return Err(Error::format(
                n + 1,
                format!("expected {width} values, found {}", v.len()),
            ));
        }
        Ok((n + 1, name, v))
    }

    fn relations(&mut self, width: usize, target: &mut [Vec<f64>]) -> Result<()> {
        for _ in 0..Relation::ALL.len() {
            let (n, name, v) = self.next(width)?;
            let r: Relation = name
                .parse()
                .map_err(|e: Error| Error::format(n, e.to_string()))?;
            target[r.index()] = v;
        }
        Ok(())
    }
}

/// Trains translation embeddings on every triple of `store`.
///
/// Each epoch visits the triples in shuffled order; every triple is paired
/// with one Bernoulli-corrupted negative and, if the margin is violated,
/// the involved parameters take a subgradient step of size
/// `config.learning_rate`. Entity vectors are kept inside the unit ball and
/// TransH normals on the unit sphere. Entities found in `init` (as
/// pre-trained vectors of the right dimension) start from those vectors.
pub fn train_kge(
    store: &TripleStore,
    init: Option<&EmbeddingTable>,
    config: &KgeConfig,
) -> Result<KgeRun> {
    if store.is_empty() {
        return Err(Error::Invalid(
            "cannot train on an empty triple store".into(),
        ));
    }
    let k = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bound = 6.0 / (k as f64).sqrt();

    let mut entities: Vec<Vec<f64>> = store
        .entities()
        .iter()
        .map(|id| {
            let pretrained = init
                .filter(|t| t.dim() == k && t.is_pretrained(id))
                .and_then(|t| t.get(id));
            match pretrained {
                Some(v) => {
                    let mut v = v.to_vec();
                    linalg::project_unit_ball(&mut v);
                    v
                }
                None => {
                    let mut v = linalg::uniform_vec(&mut rng, k, bound);
                    linalg::normalize(&mut v);
                    v
                }
            }
        })
        .collect();
    let mut relations: Vec<Vec<f64>> = Relation::ALL
        .iter()
        .map(|_| {
            let mut v = linalg::uniform_vec(&mut rng, k, bound);
            linalg::normalize(&mut v);
            v
        })
        .collect();
    let mut projection = match config.variant {
        KgeVariant::TransE => Projection::None,
        KgeVariant::TransH => Projection::Hyperplanes(
            Relation::ALL
                .iter()
                .map(|_| {
                    let mut w = linalg::uniform_vec(&mut rng, k, bound);
                    linalg::normalize(&mut w);
                    w
                })
                .collect(),
        ),
        KgeVariant::TransR => {
            Projection::Matrices(Relation::ALL.iter().map(|_| Matrix::identity(k)).collect())
        }
    };

    let lr = config.learning_rate;
    let mut order: Vec<usize> = (0..store.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (step, &i) in order.iter().enumerate() {
            let pos = store.indexed()[i];
            let neg = store.corrupt_indexed(&pos, &mut rng)?;
            let r = pos.relation.index();
            let proj = projection.get(pos.relation);
            let gp = distance_grad(
                &entities[pos.head],
                &relations[r],
                &entities[pos.tail],
                proj,
                config.norm,
            );
            let gn = distance_grad(
                &entities[neg.head],
                &relations[r],
                &entities[neg.tail],
                proj,
                config.norm,
            );
            let loss = config.margin + gp.value - gn.value;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "KGE loss at epoch {epoch}, step {step}"
                )));
            }
            if loss <= 0.0 {
                continue;
            }
            total += loss;

            linalg::axpy(-lr, &gp.head, &mut entities[pos.head]);
            linalg::axpy(-lr, &gp.tail, &mut entities[pos.tail]);
            linalg::axpy(lr, &gn.head, &mut entities[neg.head]);
            linalg::axpy(lr, &gn.tail, &mut entities[neg.tail]);
            linalg::axpy(-lr, &gp.relation, &mut relations[r]);
            linalg::axpy(lr, &gn.relation, &mut relations[r]);
            match &mut projection {
                Projection::None => {}
                Projection::Hyperplanes(ws) => {
                    let w = &mut ws[r];
                    linalg::axpy(-lr, gp.projection.as_ref().unwrap(), w);
                    linalg::axpy(lr, gn.projection.as_ref().unwrap(), w);
                    linalg::normalize(w);
                }
                Projection::Matrices(ms) => {
                    let m = &mut ms[r].data;
                    linalg::axpy(-lr, gp.projection.as_ref().unwrap(), m);
                    linalg::axpy(lr, gn.projection.as_ref().unwrap(), m);
                }
            }
            for e in [pos.head, pos.tail, neg.head, neg.tail] {
                linalg::project_unit_ball(&mut entities[e]);
            }
        }
        epoch_losses.push(total / store.len() as f64);
    }

    let model = KgeModel {
        variant: config.variant,
        dim: k,
        norm: config.norm,
        entities: store.entities().iter().cloned().zip(entities).collect(),
        relations,
        projection,
    };
    Ok(KgeRun {
        model,
        epoch_losses,
    })
}

/// Knowledge-only classifier: a pair is positive iff the difference vector
/// `e_c − e_d` is most cosine-similar to the marker/mechanism relation.
/// Ties and a zero difference vector give [`Label::Negative`].
pub fn transe_baseline(chemical: &str, disease: &str, model: &KgeModel) -> Result<Label> {
    let c = model.entity(chemical)?;
    let d = model.entity(disease)?;
    let diff: Vec<f64> = c.iter().zip(d).map(|(a, b)| a - b).collect();
    if linalg::norm(&diff) == 0.0 {
        return Ok(Label::Negative);
    }
    let sim = |r: Relation| linalg::cosine(&diff, model.relation(r)).unwrap_or(f64::NEG_INFINITY);
    let target = sim(Relation::MarkerMechanism);
    let beaten = Relation::ALL
        .into_iter()
        .filter(|&r| r != Relation::MarkerMechanism)
        .all(|r| sim(r) < target);
    Ok(if beaten {
        Label::Positive
    } else {
        Label::Negative
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn simple_model(entities: &[(&str, Vec<f64>)], relations: Vec<Vec<f64>>) -> KgeModel {
        KgeModel {
            variant: KgeVariant::TransE,
            dim: relations[0].len(),
            norm: DistanceNorm::L2,
            entities: entities
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
            relations,
            projection: Projection::None,
        }
    }

    #[test]
    fn exact_translation_scores_zero() {
        let m = simple_model(
            &[("c", vec![0.1, 0.2, 0.3]), ("d", vec![0.5, 0.2, 0.0])],
            vec![vec![0.4, 0.0, -0.3]; 4],
        );
        let s = m.score(&Triple::new("c", Relation::Null, "d")).unwrap();
        assert!(s.abs() < 1e-15);
    }

    #[test]
    fn three_four_five() {
        let m = simple_model(
            &[("c", vec![0.0; 3]), ("d", vec![3.0, 4.0, 0.0])],
            vec![vec![0.0; 3]; 4],
        );
        assert_eq!(
            m.score(&Triple::new("c", Relation::Therapeutic, "d"))
                .unwrap(),
            5.0
        );
    }

    #[test]
    fn unknown_entity_is_an_error() {
        let m = simple_model(&[("c", vec![0.0])], vec![vec![0.0]; 4]);
        assert!(matches!(
            m.score(&Triple::new("c", Relation::Null, "zz")),
            Err(Error::UnknownId(_))
        ));
    }

    #[test]
    fn score_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let d: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut sq = 0.0;
            for i in 0..6 {
                sq += (c[i] + r[i] - d[i]) * (c[i] + r[i] - d[i]);
            }
            let m = simple_model(&[("c", c.clone()), ("d", d.clone())], vec![r.clone(); 4]);
            let s = m
                .score(&Triple::new("c", Relation::MarkerMechanism, "d"))
                .unwrap();
            assert!((s - sq.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_margin_tie_has_no_gradient() {
        let h = [0.1, 0.2];
        let r = [0.3, -0.1];
        let t = [0.0, 0.5];
        let g = margin_loss_grad((&h, &r, &t), (&h, &t), 0.0, DistanceNorm::L2);
        assert_eq!(g.loss, 0.0);
        assert!(g.head.iter().chain(&g.relation).all(|x| *x == 0.0));
    }

    #[test]
    fn baseline_examples() {
        let marker = vec![1.0, 0.0, 0.0];
        let rels = vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            marker.clone(),
            vec![0.0, -1.0, 0.0],
        ];
        // e_c - e_d equals the marker/mechanism vector
        let m = simple_model(
            &[("c", vec![1.0, 0.0, 0.0]), ("d", vec![0.0; 3])],
            rels.clone(),
        );
        assert_eq!(transe_baseline("c", "d", &m).unwrap(), Label::Positive);
        // e_c - e_d equals the null vector, orthogonal to the rest
        let m = simple_model(
            &[("c", vec![0.0, -1.0, 0.0]), ("d", vec![0.0; 3])],
            rels.clone(),
        );
        assert_eq!(transe_baseline("c", "d", &m).unwrap(), Label::Negative);
        // degenerate
        let m = simple_model(&[("c", vec![0.2; 3]), ("d", vec![0.2; 3])], rels);
        assert_eq!(transe_baseline("c", "d", &m).unwrap(), Label::Negative);
    }

    #[test]
    fn baseline_tie_is_negative() {
        let rels = vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![0.0, -1.0],
        ];
        let m = simple_model(&[("c", vec![1.0, 0.0]), ("d", vec![0.0, 0.0])], rels);
        assert_eq!(transe_baseline("c", "d", &m).unwrap(), Label::Negative);
    }

    #[test]
    fn empty_store_rejected() {
        let err = train_kge(&TripleStore::default(), None, &KgeConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
    }

    fn small_store() -> TripleStore {
        TripleStore::from_triples(
            [
                ("a", Relation::MarkerMechanism, "x"),
                ("a", Relation::Therapeutic, "y"),
                ("b", Relation::Null, "x"),
                ("c", Relation::InferredAssociation, "z"),
                ("b", Relation::MarkerMechanism, "z"),
            ]
            .map(|(h, r, t)| Triple::new(h, r, t)),
        )
    }

    #[test]
    fn model_text_round_trips_for_every_variant() {
        for variant in [KgeVariant::TransE, KgeVariant::TransH, KgeVariant::TransR] {
            let config = KgeConfig {
                variant,
                dim: 4,
                epochs: 3,
                ..KgeConfig::default()
            };
            let model = train_kge(&small_store(), None, &config).unwrap().model;
            let back = KgeModel::from_text(&model.to_text()).unwrap();
            assert_eq!(back, model);
        }
    }

    #[test]
    fn transh_normals_stay_unit() {
        let config = KgeConfig {
            variant: KgeVariant::TransH,
            dim: 5,
            epochs: 20,
            learning_rate: 0.05,
            ..KgeConfig::default()
        };
        let model = train_kge(&small_store(), None, &config).unwrap().model;
        let Projection::Hyperplanes(ws) = &model.projection else {
            panic!("expected hyperplanes")
        };
        for w in ws {
            assert!((linalg::norm(w) - 1.0).abs() < 1e-9);
        }
        for v in model.entities.values() {
            assert!(linalg::norm(v) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn pretrained_vectors_seed_entities() {
        let mut table = EmbeddingTable::load_word2vec_text("1 3\na 0.1 0.2 0.2\n", 0).unwrap();
        table.lookup_or_init("x");
        let config = KgeConfig {
            dim: 3,
            epochs: 0,
            ..KgeConfig::default()
        };
        let model = train_kge(&small_store(), Some(&table), &config)
            .unwrap()
            .model;
        assert_eq!(model.entity("a").unwrap(), &[0.1, 0.2, 0.2]);
        // lazily drawn vectors are not treated as pre-trained
        assert!((linalg::norm(model.entity("x").unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn training_is_deterministic() {
        let config = KgeConfig {
            dim: 4,
            epochs: 10,
            ..KgeConfig::default()
        };
        let a = train_kge(&small_store(), None, &config).unwrap();
        let b = train_kge(&small_store(), None, &config).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }
}
