//! Generator for small self-consistent corpora: PubTator documents, a
//! matching CTD-style export and a MeSH tree. Used by the tests, the book
//! and the bundled demo data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{write_pubtator, Document, EntityKind, Mention};
use crate::error::Result;
use crate::pipeline::write_file;
use crate::kge::{Relation, Triple};

pub const TRIGGER: &str = "induced";

const FILLER: &[&str] = &[
    "patients",
    "study",
    "effect",
    "dose",
    "treatment",
    "observed",
    "clinical",
    "group",
    "results",
    "level",
    "after",
    "during",
    "with",
    "were",
    "was",
    "the",
    "of",
    "and",
    "in",
    "increase",
    "response",
    "reported",
    "case",
    "rats",
    "serum",
    "weeks",
    "therapy",
    "daily",
    "showed",
    "associated",
    "significant",
    "model",
    "analysis",
    "cohort",
    "acute",
    "chronic",
    "mg",
    "kg",
    "onset",
    "baseline",
];

/// What determines whether a candidate pair is a gold CID pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticTask {
    /// Gold iff the knowledge base relates the pair as marker/mechanism;
    /// the text carries no signal.
    KbOnly,
    /// Gold iff the pair co-occurs with the trigger word; knowledge base
    /// relations are random.
    Trigger,
    /// Gold pairs carry the trigger and, most of the time, a
    /// marker/mechanism relation.
    Mixed,
}

impl std::str::FromStr for SyntheticTask {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kb-only" => Ok(SyntheticTask::KbOnly),
            "trigger" => Ok(SyntheticTask::Trigger),
            "mixed" => Ok(SyntheticTask::Mixed),
            _ => Err(crate::Error::Invalid(format!(
                "unknown synthetic task {s:?} (kb-only, trigger, mixed)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub documents: usize,
    pub chemicals: usize,
    pub diseases: usize,
    pub task: SyntheticTask,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            documents: 60,
            chemicals: 40,
            diseases: 40,
            task: SyntheticTask::Mixed,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub documents: Vec<Document>,
    pub ctd: Vec<Triple>,
    pub mesh_tree: Vec<(String, String)>,
}

pub fn chemical_id(i: usize) -> String {
    format!("D1{i:05}")
}

pub fn disease_id(i: usize) -> String {
    format!("D2{i:05}")
}

struct Builder {
    text: String,
    mentions: Vec<Mention>,
}

impl Builder {
    fn word(&mut self, w: &str) {
        if !self.text.is_empty() && !self.text.ends_with(' ') {
            self.text.push(' ');
        }
        self.text.push_str(w);
    }

    fn mention(&mut self, surface: &str, kind: EntityKind, id: &str, offset: usize) {
        self.word("");
        let start = offset + self.text.chars().count();
        self.text.push_str(surface);
        self.mentions.push(Mention {
            start,
            end: start + surface.chars().count(),
            surface: surface.to_string(),
            kind,
            mesh_id: id.to_string(),
        });
    }

    fn end_sentence(&mut self) {
        self.text.push('.');
    }
}

fn capitalized(w: &str) -> String {
    let mut c = w.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

fn fillers(rng: &mut ChaCha8Rng, n: usize) -> Vec<&'static str> {
    (0..n).map(|_| *FILLER.choose(rng).unwrap()).collect()
}

/// Generates a corpus. Every document has two chemicals and two diseases
/// co-occurring pairwise in abstract sentences, plus a third disease alone
/// in the final sentence, which yields inter-sentence candidates.
pub fn generate(config: &SyntheticConfig) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ctd: BTreeSet<(String, String, Relation)> = BTreeSet::new();
    // relation and gold status are properties of the pair, not the document
    let mut known: BTreeMap<(usize, usize), (Option<Relation>, bool)> = BTreeMap::new();
    let mut documents = Vec::with_capacity(config.documents);

    for n in 0..config.documents {
        let pmid = format!("{}", 9_000_000 + n);
        let chems: Vec<usize> = rand::seq::index::sample(&mut rng, config.chemicals, 2).into_vec();
        let dis: Vec<usize> = rand::seq::index::sample(&mut rng, config.diseases, 3).into_vec();

        let mut pairs = Vec::new();
        for &d in &dis {
            for &c in &chems {
                pairs.push((c, d));
            }
        }
        let mut gold = BTreeSet::new();
        let mut trigger = BTreeSet::new();
        for &(c, d) in &pairs {
            let (relation, positive) = *known.entry((c, d)).or_insert_with(|| {
                let positive = rng.gen_bool(0.4);
                let relation = match config.task {
                    SyntheticTask::KbOnly => {
                        if positive {
                            Some(Relation::MarkerMechanism)
                        } else {
                            [
                                None,
                                Some(Relation::Therapeutic),
                                Some(Relation::InferredAssociation),
                            ]
                            .choose(&mut rng)
                            .copied()
                            .unwrap()
                        }
                    }
                    SyntheticTask::Trigger => [
                        None,
                        Some(Relation::Therapeutic),
                        Some(Relation::InferredAssociation),
                        Some(Relation::MarkerMechanism),
                    ]
                    .choose(&mut rng)
                    .copied()
                    .unwrap(),
                    SyntheticTask::Mixed => match (positive, rng.gen_bool(0.8)) {
                        (true, true) => Some(Relation::MarkerMechanism),
                        (true, false) => Some(Relation::InferredAssociation),
                        (false, true) => [None, Some(Relation::Therapeutic)]
                            .choose(&mut rng)
                            .copied()
                            .unwrap(),
                        (false, false) => Some(Relation::MarkerMechanism),
                    },
                };
                (relation, positive)
            });
            if let Some(r) = relation {
                ctd.insert((chemical_id(c), disease_id(d), r));
            }
            if positive {
                gold.insert((chemical_id(c), disease_id(d)));
                if config.task != SyntheticTask::KbOnly {
                    trigger.insert((c, d));
                }
            }
        }

        let title_words = fillers(&mut rng, 3);
        let mut title = Builder {
            text: capitalized(title_words[0]),
            mentions: Vec::new(),
        };
        title.word(title_words[1]);
        title.mention(
            &format!("chem{}", chems[0]),
            EntityKind::Chemical,
            &chemical_id(chems[0]),
            0,
        );
        title.word(title_words[2]);
        title.end_sentence();
        let offset = title.text.chars().count() + 1;

        let mut body = Builder {
            text: String::new(),
            mentions: Vec::new(),
        };
        // intra pairs: the first two diseases with both chemicals
        for &(c, d) in pairs.iter().filter(|(_, d)| *d != dis[2]) {
            let w = fillers(&mut rng, 5);
            body.word(&capitalized(w[0]));
            body.word(w[1]);
            body.mention(
                &format!("chem{c}"),
                EntityKind::Chemical,
                &chemical_id(c),
                offset,
            );
            body.word(w[2]);
            if trigger.contains(&(c, d)) {
                body.word(TRIGGER);
            } else if config.task == SyntheticTask::KbOnly && rng.gen_bool(0.5) {
                body.word(TRIGGER);
            } else {
                body.word(w[3]);
            }
            body.mention(
                &format!("disease{d}"),
                EntityKind::Disease,
                &disease_id(d),
                offset,
            );
            body.word(w[4]);
            body.end_sentence();
        }
        // the lone disease, one sentence after the last chemical mention
        let w = fillers(&mut rng, 4);
        body.word(&capitalized(w[0]));
        body.word(w[1]);
        if chems.iter().any(|&c| trigger.contains(&(c, dis[2]))) {
            body.word(TRIGGER);
        }
        body.mention(
            &format!("disease{}", dis[2]),
            EntityKind::Disease,
            &disease_id(dis[2]),
            offset,
        );
        body.word(w[2]);
        body.end_sentence();

        let mut mentions = title.mentions;
        mentions.extend(body.mentions);
        documents.push(Document {
            pmid,
            title: title.text,
            abstract_text: body.text,
            mentions,
            gold_pairs: gold,
            sentences: Vec::new(),
        });
    }

    // two-level disease hierarchy: D2xxxxx under nine group headings
    let mesh_tree = (0..config.diseases)
        .map(|d| {
            (
                disease_id(d),
                format!("C{:02}.{:03}.{:03}", 1 + d % 9, d / 9, d),
            )
        })
        .chain((0..9).map(|g| (format!("D3{g:05}"), format!("C{:02}", 1 + g))))
        .collect();

    SyntheticCorpus {
        documents,
        ctd: ctd
            .into_iter()
            .map(|(c, d, r)| Triple::new(c, r, d))
            .collect(),
        mesh_tree,
    }
}

/// CTD-style TSV with the three columns the loader requires.
pub fn write_ctd(triples: &[Triple]) -> String {
    let mut out = String::from("# ChemicalID\tDiseaseID\tDirectEvidence\n");
    for t in triples {
        let evidence = match t.relation {
            Relation::InferredAssociation => "",
            r => r.as_str(),
        };
        let _ = writeln!(out, "{}\tMESH:{}\t{evidence}", t.head, t.tail);
    }
    out
}

pub fn write_mesh_tree(rows: &[(String, String)]) -> String {
    let mut out = String::new();
    for (id, number) in rows {
        let _ = writeln!(out, "{id}\t{number}");
    }
    out
}

/// Writes `train.pubtator`, `test.pubtator`, `ctd.tsv`, `mesh_tree.tsv` and
/// a `pipeline.conf` pointing at them into `dir`. The last `test_documents`
/// documents form the test split.
pub fn write_dataset(corpus: &SyntheticCorpus, dir: &Path, test_documents: usize) -> Result<()> {
    let split = corpus.documents.len().saturating_sub(test_documents);
    let (train, test) = corpus.documents.split_at(split);
    write_file(&dir.join("train.pubtator"), &write_pubtator(train))?;
    write_file(&dir.join("test.pubtator"), &write_pubtator(test))?;
    write_file(&dir.join("ctd.tsv"), &write_ctd(&corpus.ctd))?;
    write_file(&dir.join("mesh_tree.tsv"), &write_mesh_tree(&corpus.mesh_tree))?;
    write_file(
        &dir.join("pipeline.conf"),
        "train = train.pubtator\ntest = test.pubtator\nctd = ctd.tsv\nmesh_tree = mesh_tree.tsv\noutput = out\n",
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_pubtator;
    use crate::instances::{build_instances, Label, Level};
    use crate::kge::read_ctd;
    use crate::postprocess::MeshTree;

    #[test]
    fn output_reparses() {
        let corpus = generate(&SyntheticConfig::default());
        let text = write_pubtator(&corpus.documents);
        let docs = parse_pubtator(&text).unwrap();
        assert_eq!(docs, corpus.documents);
        assert_eq!(read_ctd(&write_ctd(&corpus.ctd)).unwrap(), corpus.ctd);
        MeshTree::from_tsv(&write_mesh_tree(&corpus.mesh_tree)).unwrap();
    }

    #[test]
    fn documents_yield_both_levels() {
        let corpus = generate(&SyntheticConfig::default());
        let doc = corpus.documents[0].clone().annotate().unwrap();
        assert_eq!(doc.sentences.len(), 6);
        let inst = build_instances(&doc);
        assert_eq!(inst.iter().filter(|i| i.level == Level::Intra).count(), 4);
        assert_eq!(inst.iter().filter(|i| i.level == Level::Inter).count(), 2);
        for i in &inst {
            let gold = doc
                .gold_pairs
                .contains(&(i.chemical.clone(), i.disease.clone()));
            assert_eq!(i.label == Label::Positive, gold);
        }
    }

    #[test]
    fn kb_only_gold_matches_marker_relation() {
        let corpus = generate(&SyntheticConfig {
            task: SyntheticTask::KbOnly,
            ..SyntheticConfig::default()
        });
        let markers: BTreeSet<(String, String)> = corpus
            .ctd
            .iter()
            .filter(|t| t.relation == Relation::MarkerMechanism)
            .map(|t| (t.head.clone(), t.tail.clone()))
            .collect();
        for doc in &corpus.documents {
            for c in doc.mesh_ids(EntityKind::Chemical) {
                for d in doc.mesh_ids(EntityKind::Disease) {
                    let pair = (c.to_string(), d.to_string());
                    assert_eq!(doc.gold_pairs.contains(&pair), markers.contains(&pair));
                }
            }
        }
    }

    #[test]
    fn seeded() {
        let a = generate(&SyntheticConfig::default());
        let b = generate(&SyntheticConfig::default());
        assert_eq!(a.documents, b.documents);
    }
}
