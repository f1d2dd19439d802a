use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use indexmap::IndexSet;
use rand::seq::SliceRandom;
use rand::Rng;

use super::Relation;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: String,
    pub relation: Relation,
    pub tail: String,
}

impl Triple {
    pub fn new(head: impl Into<String>, relation: Relation, tail: impl Into<String>) -> Self {
        Triple {
            head: head.into(),
            relation,
            tail: tail.into(),
        }
    }
}

impl std::fmt::Display for Triple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.head, self.relation, self.tail)
    }
}

/// A triple over interned entity indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexedTriple {
    pub head: usize,
    pub relation: Relation,
    pub tail: usize,
}

/// Average tails per head and heads per tail of one relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernStats {
    pub tph: f64,
    pub hpt: f64,
}

impl BernStats {
    /// Probability of corrupting the head.
    pub fn head_probability(&self) -> f64 {
        self.tph / (self.tph + self.hpt)
    }
}

/// Set of chemical-disease triples with interned entities and cached
/// sampling statistics.
#[derive(Debug, Clone, Default)]
pub struct TripleStore {
    entities: IndexSet<String>,
    triples: Vec<IndexedTriple>,
    lookup: HashSet<IndexedTriple>,
    chemicals: Vec<usize>,
    diseases: Vec<usize>,
    stats: BTreeMap<Relation, BernStats>,
}

impl TripleStore {
    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        let set: BTreeSet<Triple> = triples.into_iter().collect();
        let ids: BTreeSet<&str> = set
            .iter()
            .flat_map(|t| [t.head.as_str(), t.tail.as_str()])
            .collect();
        let entities: IndexSet<String> = ids.into_iter().map(String::from).collect();
        let triples: Vec<IndexedTriple> = set
            .iter()
            .map(|t| IndexedTriple {
                head: entities.get_index_of(&t.head).unwrap(),
                relation: t.relation,
                tail: entities.get_index_of(&t.tail).unwrap(),
            })
            .collect();
        let chemicals: BTreeSet<usize> = triples.iter().map(|t| t.head).collect();
        let diseases: BTreeSet<usize> = triples.iter().map(|t| t.tail).collect();
        let mut store = TripleStore {
            entities,
            lookup: triples.iter().copied().collect(),
            triples,
            chemicals: chemicals.into_iter().collect(),
            diseases: diseases.into_iter().collect(),
            stats: BTreeMap::new(),
        };
        store.stats = bern_stats(&store);
        store
    }

    /// Adds triples, recomputing indices and statistics.
    pub fn extend(&mut self, triples: impl IntoIterator<Item = Triple>) {
        let all: Vec<Triple> = self.triples().chain(triples).collect();
        *self = TripleStore::from_triples(all);
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn entities(&self) -> &IndexSet<String> {
        &self.entities
    }

    pub fn entity(&self, index: usize) -> &str {
        &self.entities[index]
    }

    pub fn chemicals(&self) -> &[usize] {
        &self.chemicals
    }

    pub fn diseases(&self) -> &[usize] {
        &self.diseases
    }

    pub fn indexed(&self) -> &[IndexedTriple] {
        &self.triples
    }

    pub fn stats(&self) -> &BTreeMap<Relation, BernStats> {
        &self.stats
    }

    /// Triples in sorted order.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.triples.iter().map(|t| self.resolve(t))
    }

    pub fn resolve(&self, t: &IndexedTriple) -> Triple {
        Triple::new(self.entity(t.head), t.relation, self.entity(t.tail))
    }

    pub fn intern(&self, t: &Triple) -> Option<IndexedTriple> {
        Some(IndexedTriple {
            head: self.entities.get_index_of(&t.head)?,
            relation: t.relation,
            tail: self.entities.get_index_of(&t.tail)?,
        })
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.intern(t).is_some_and(|i| self.lookup.contains(&i))
    }

    pub fn contains_indexed(&self, t: &IndexedTriple) -> bool {
        self.lookup.contains(t)
    }

    /// Relations stored for a chemical-disease pair, in relation order.
    pub fn relations_of(&self, chemical: &str, disease: &str) -> Vec<Relation> {
        let (Some(h), Some(t)) = (
            self.entities.get_index_of(chemical),
            self.entities.get_index_of(disease),
        ) else {
            return Vec::new();
        };
        Relation::ALL
            .into_iter()
            .filter(|&relation| {
                self.lookup.contains(&IndexedTriple {
                    head: h,
                    relation,
                    tail: t,
                })
            })
            .collect()
    }

    /// The single relation fed to the classifier for a pair:
    /// marker/mechanism, then therapeutic, then inferred-association,
    /// otherwise null.
    pub fn assign_relation(&self, chemical: &str, disease: &str) -> Relation {
        let found = self.relations_of(chemical, disease);
        Relation::PRIORITY
            .into_iter()
            .find(|r| found.contains(r))
            .unwrap_or(Relation::Null)
    }

    /// Corrupts `triple` by replacing its head (with probability
    /// tph / (tph + hpt)) or its tail with an entity of the same role, such
    /// that the result is not a stored triple.
    pub fn corrupt<R: Rng + ?Sized>(&self, triple: &Triple, rng: &mut R) -> Result<Triple> {
        let t = self
            .intern(triple)
            .ok_or_else(|| Error::UnknownId(triple.to_string()))?;
        Ok(self.resolve(&self.corrupt_indexed(&t, rng)?))
    }

    pub fn corrupt_indexed<R: Rng + ?Sized>(
        &self,
        t: &IndexedTriple,
        rng: &mut R,
    ) -> Result<IndexedTriple> {
        let p_head = self
            .stats
            .get(&t.relation)
            .map_or(0.5, BernStats::head_probability);
        let head_first = rng.gen_bool(p_head);
        for replace_head in [head_first, !head_first] {
            if let Some(c) = self.replace(t, replace_head, rng) {
                return Ok(c);
            }
        }
        Err(Error::CorruptionImpossible(self.resolve(t).to_string()))
    }

    fn replace<R: Rng + ?Sized>(
        &self,
        t: &IndexedTriple,
        head: bool,
        rng: &mut R,
    ) -> Option<IndexedTriple> {
        let pool = if head {
            &self.chemicals
        } else {
            &self.diseases
        };
        let with = |e: usize| {
            let mut c = *t;
            if head {
                c.head = e;
            } else {
                c.tail = e;
            }
            c
        };
        let valid = |c: &IndexedTriple| c != t && !self.lookup.contains(c);
        // rejection sampling first; fall back to enumerating valid candidates
        for _ in 0..64 {
            let c = with(*pool.choose(rng)?);
            if valid(&c) {
                return Some(c);
            }
        }
        let candidates: Vec<IndexedTriple> = pool.iter().map(|&e| with(e)).filter(valid).collect();
        candidates.choose(rng).copied()
    }
}

/// Per-relation tph (mean distinct tails per head) and hpt (mean distinct
/// heads per tail). Relations without triples are omitted.
pub fn bern_stats(store: &TripleStore) -> BTreeMap<Relation, BernStats> {
    let mut tails: BTreeMap<Relation, HashMap<usize, HashSet<usize>>> = BTreeMap::new();
    let mut heads: BTreeMap<Relation, HashMap<usize, HashSet<usize>>> = BTreeMap::new();
    for t in store.indexed() {
        tails
            .entry(t.relation)
            .or_default()
            .entry(t.head)
            .or_default()
            .insert(t.tail);
        heads
            .entry(t.relation)
            .or_default()
            .entry(t.tail)
            .or_default()
            .insert(t.head);
    }
    let mean = |m: &HashMap<usize, HashSet<usize>>| {
        m.values().map(HashSet::len).sum::<usize>() as f64 / m.len() as f64
    };
    tails
        .iter()
        .map(|(r, by_head)| {
            (
                *r,
                BernStats {
                    tph: mean(by_head),
                    hpt: mean(&heads[r]),
                },
            )
        })
        .collect()
}

/// Store of all CTD triples plus a null triple for every candidate pair
/// that CTD relates under no relation.
pub fn extract_triples<'a>(
    cdr_pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ctd: &[Triple],
) -> TripleStore {
    let known: HashSet<(&str, &str)> = ctd
        .iter()
        .map(|t| (t.head.as_str(), t.tail.as_str()))
        .collect();
    let nulls: Vec<Triple> = cdr_pairs
        .into_iter()
        .filter(|p| !known.contains(p))
        .map(|(c, d)| Triple::new(c, Relation::Null, d))
        .collect();
    TripleStore::from_triples(ctd.iter().cloned().chain(nulls))
}

fn strip_mesh(id: &str) -> &str {
    id.trim().strip_prefix("MESH:").unwrap_or(id.trim())
}

/// Reads a CTD chemical-disease export.
///
/// The first non-comment line (a leading `# ` is tolerated) names the
/// columns; `ChemicalID`, `DiseaseID` and `DirectEvidence` are required.
/// Empty evidence maps to inferred-association; `|`-joined evidence yields
/// one triple per relation.
pub fn read_ctd(input: &str) -> Result<Vec<Triple>> {
    let mut lines = input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (header_line, header) = lines
        .find(|(_, l)| l.contains("ChemicalID"))
        .ok_or_else(|| Error::format(1, "missing header with ChemicalID column"))?;
    let columns: Vec<&str> = header
        .trim_start_matches('#')
        .trim()
        .split('\t')
        .map(str::trim)
        .collect();
    let col = |name: &str| {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::format(header_line + 1, format!("missing column {name}")))
    };
    let (ci, di, ei) = (
        col("ChemicalID")?,
        col("DiseaseID")?,
        col("DirectEvidence")?,
    );

    let mut out = Vec::new();
    for (n, line) in lines {
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let get = |i: usize| fields.get(i).copied().unwrap_or("");
        let (chem, dis) = (strip_mesh(get(ci)), strip_mesh(get(di)));
        if chem.is_empty() || dis.is_empty() {
            return Err(Error::format(n + 1, "missing chemical or disease id"));
        }
        let evidence = get(ei).trim();
        if evidence.is_empty() {
            out.push(Triple::new(chem, Relation::InferredAssociation, dis));
            continue;
        }
        for name in evidence.split('|') {
            let relation: Relation = name
                .trim()
                .parse()
                .ok()
                .filter(|r| *r != Relation::Null)
                .ok_or_else(|| Error::format(n + 1, format!("unknown relation {name:?}")))?;
            out.push(Triple::new(chem, relation, dis));
        }
    }
    Ok(out)
}

/// TSV dump: head, relation, tail.
pub fn write_triples(store: &TripleStore) -> String {
    let mut out = String::new();
    for t in store.triples() {
        let _ = writeln!(out, "{}\t{}\t{}", t.head, t.relation, t.tail);
    }
    out
}

pub fn read_triples(input: &str) -> Result<TripleStore> {
    let mut triples = Vec::new();
    for (n, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [head, relation, tail] = fields[..] else {
            return Err(Error::format(n + 1, "expected head, relation, tail"));
        };
        let relation = relation
            .parse()
            .map_err(|e: Error| Error::format(n + 1, e.to_string()))?;
        triples.push(Triple::new(head, relation, tail));
    }
    Ok(TripleStore::from_triples(triples))
}
