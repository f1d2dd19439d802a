//! Document-level merging and the two rule-based corrections: pairing the
//! focused chemical with every disease when nothing was predicted, and
//! dropping pairs made redundant by a more specific pair.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::corpus::{Document, EntityKind};
use crate::error::{Error, Result};
use crate::instances::Label;
use crate::nam::Prediction;

/// MeSH tree numbers per descriptor.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MeshTree {
    numbers: HashMap<String, BTreeSet<String>>,
}

impl MeshTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, mesh_id: &str, tree_number: &str) -> Result<()> {
        if tree_number.split('.').any(str::is_empty) {
            return Err(Error::Invalid(format!(
                "malformed tree number {tree_number:?}"
            )));
        }
        self.numbers
            .entry(mesh_id.to_string())
            .or_default()
            .insert(tree_number.to_string());
        Ok(())
    }

    /// Reads `mesh_id<TAB>tree_number` rows, one number per row.
    pub fn from_tsv(input: &str) -> Result<Self> {
        let mut tree = MeshTree::new();
        for (n, line) in input.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((id, number)) = line.split_once('\t') else {
                return Err(Error::format(n + 1, "expected `mesh_id<TAB>tree_number`"));
            };
            tree.insert(id.trim(), number.trim())
                .map_err(|e| Error::format(n + 1, e.to_string()))?;
        }
        Ok(tree)
    }

    pub fn tree_numbers(&self, mesh_id: &str) -> impl Iterator<Item = &str> {
        self.numbers
            .get(mesh_id)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.numbers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numbers.is_empty()
    }
}

/// Whether `a` is strictly more general than `b`: some tree number of `a`
/// is a proper dotted prefix of some tree number of `b`.
pub fn is_hypernym(a: &str, b: &str, tree: &MeshTree) -> bool {
    tree.tree_numbers(a).any(|ta| {
        tree.tree_numbers(b)
            .any(|tb| tb.len() > ta.len() && tb.starts_with(ta) && tb.as_bytes()[ta.len()] == b'.')
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Model,
    FocusedRule,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Model => "model",
            Provenance::FocusedRule => "focused-rule",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "model" => Ok(Provenance::Model),
            "focused-rule" => Ok(Provenance::FocusedRule),
            _ => Err(Error::Invalid(format!("unknown provenance {s:?}"))),
        }
    }
}

/// Document-level CID pairs `(chemical, disease)` with their origin.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocResult {
    pub pmid: String,
    pub pairs: BTreeMap<(String, String), Provenance>,
}

impl DocResult {
    pub fn empty(pmid: impl Into<String>) -> Self {
        DocResult {
            pmid: pmid.into(),
            pairs: BTreeMap::new(),
        }
    }
}

/// A pair is kept iff at least one of its instances, at either level, was
/// predicted positive. Every pmid seen in `predictions` gets an entry.
pub fn merge(predictions: &[Prediction]) -> BTreeMap<String, DocResult> {
    let mut out: BTreeMap<String, DocResult> = BTreeMap::new();
    for p in predictions {
        let doc = out
            .entry(p.pmid.clone())
            .or_insert_with(|| DocResult::empty(p.pmid.clone()));
        if p.label == Label::Positive {
            doc.pairs
                .insert((p.chemical.clone(), p.disease.clone()), Provenance::Model);
        }
    }
    out
}

/// The focused chemicals of a document: every chemical mentioned in the
/// title, else the most-mentioned abstract chemical (earliest on ties).
pub fn focused_chemicals(doc: &Document) -> BTreeSet<String> {
    let title_len = doc.title_len();
    let chems = doc
        .mentions
        .iter()
        .filter(|m| m.kind == EntityKind::Chemical);
    let in_title: BTreeSet<String> = chems
        .clone()
        .filter(|m| m.start < title_len)
        .map(|m| m.mesh_id.clone())
        .collect();
    if !in_title.is_empty() {
        return in_title;
    }
    // (count, first position) per id
    let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
    for m in chems {
        let e = counts.entry(&m.mesh_id).or_insert((0, m.start));
        e.0 += 1;
        e.1 = e.1.min(m.start);
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
        .map(|(id, _)| BTreeSet::from([id.to_string()]))
        .unwrap_or_default()
}

/// Pairs the focused chemicals with every disease of the document, only
/// when nothing else was extracted.
pub fn focused_chemical(doc: &Document, result: &DocResult) -> DocResult {
    let mut out = result.clone();
    if !result.pairs.is_empty() {
        return out;
    }
    let diseases = doc.mesh_ids(EntityKind::Disease);
    for c in focused_chemicals(doc) {
        for &d in &diseases {
            if c != d {
                out.pairs
                    .insert((c.clone(), d.to_string()), Provenance::FocusedRule);
            }
        }
    }
    out
}

/// Removes every pair that another pair of the same document refines: same
/// or more specific chemical and same or more specific disease. Removal is
/// decided against the input set as a whole.
pub fn hypernym_filter(result: &DocResult, tree: &MeshTree) -> DocResult {
    let covers =
        |general: &str, specific: &str| general == specific || is_hypernym(general, specific, tree);
    let pairs = result
        .pairs
        .iter()
        .filter(|((c, d), _)| {
            !result
                .pairs
                .keys()
                .any(|(c2, d2)| (c2 != c || d2 != d) && covers(c, c2) && covers(d, d2))
        })
        .map(|(k, v)| (k.clone(), *v))
        .collect();
    DocResult {
        pmid: result.pmid.clone(),
        pairs,
    }
}

/// TSV: pmid, chemical, disease, provenance.
pub fn write_results(results: &[DocResult]) -> String {
    let mut out = String::new();
    for r in results {
        for ((c, d), p) in &r.pairs {
            let _ = writeln!(out, "{}\t{c}\t{d}\t{p}", r.pmid);
        }
    }
    out
}

pub fn read_results(input: &str) -> Result<Vec<DocResult>> {
    let mut by_pmid: BTreeMap<String, DocResult> = BTreeMap::new();
    for (n, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [pmid, c, d, p] = cols[..] else {
            return Err(Error::format(
                n + 1,
                format!("expected 4 columns, found {}", cols.len()),
            ));
        };
        let p: Provenance = p
            .parse()
            .map_err(|e: Error| Error::format(n + 1, e.to_string()))?;
        by_pmid
            .entry(pmid.to_string())
            .or_insert_with(|| DocResult::empty(pmid))
            .pairs
            .insert((c.to_string(), d.to_string()), p);
    }
    Ok(by_pmid.into_values().collect())
}
