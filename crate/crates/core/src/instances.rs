//! Candidate chemical-disease instances at intra- and inter-sentence level.
//!
//! Intra-sentence instances pair every chemical mention with every disease
//! mention of the same sentence. An entity pair that has no intra-sentence
//! instance anywhere in the document gets at most one inter-sentence
//! instance: the mention pair at the smallest sentence distance, provided
//! that distance is 1 or 2.
//!
//! Each instance carries a token window running from three tokens before
//! the first entity to three tokens after the second one. Inter-sentence
//! windows are taken over the concatenation of the two sentences.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::corpus::{Document, EntityKind};
use crate::error::{Error, Result};

/// Context tokens kept on each side of the entity pair.
pub const WINDOW: usize = 3;
/// Largest sentence distance for inter-sentence instances.
pub const MAX_SENTENCE_DISTANCE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Intra,
    Inter,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Intra => "intra",
            Level::Inter => "inter",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intra" => Ok(Level::Intra),
            "inter" => Ok(Level::Inter),
            _ => Err(Error::Invalid(format!("unknown level {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Negative => "negative",
            Label::Positive => "positive",
        }
    }

    /// Output unit of the classifier for this label.
    pub fn index(self) -> usize {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(Label::Positive),
            "negative" => Ok(Label::Negative),
            _ => Err(Error::Invalid(format!("unknown label {s:?}"))),
        }
    }
}

/// The two mentions an instance was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MentionPair {
    pub chemical: usize,
    pub disease: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub pmid: String,
    pub chemical: String,
    pub disease: String,
    pub level: Level,
    /// Mention indices into the source document; absent for instances
    /// loaded from a dump.
    pub mentions: Option<MentionPair>,
    /// Lowercased words with entities as MeSH identifiers.
    pub sequence: Vec<String>,
    pub label: Label,
}

impl Instance {
    pub fn pair(&self) -> (&str, &str) {
        (&self.chemical, &self.disease)
    }
}

/// Location of an entity token: (sentence index, token index, mention index).
#[derive(Debug, Clone, Copy)]
struct Occurrence {
    sentence: usize,
    token: usize,
    mention: usize,
}

fn occurrences(doc: &Document, kind: EntityKind) -> Vec<Occurrence> {
    let mut out = Vec::new();
    for s in &doc.sentences {
        for (t, tok) in s.tokens.iter().enumerate() {
            if let Some(m) = tok.mention {
                if doc.mentions[m].kind == kind {
                    out.push(Occurrence {
                        sentence: s.index,
                        token: t,
                        mention: m,
                    });
                }
            }
        }
    }
    out
}

fn label_of(doc: &Document, chemical: &str, disease: &str) -> Label {
    if doc
        .gold_pairs
        .contains(&(chemical.to_string(), disease.to_string()))
    {
        Label::Positive
    } else {
        Label::Negative
    }
}

fn window(tokens: &[&str], a: usize, b: usize) -> Vec<String> {
    let (lo, hi) = (a.min(b), a.max(b));
    let from = lo.saturating_sub(WINDOW);
    let to = (hi + WINDOW + 1).min(tokens.len());
    tokens[from..to].iter().map(|t| t.to_string()).collect()
}

fn make_instance(doc: &Document, chem: Occurrence, dis: Occurrence, level: Level) -> Instance {
    let chemical = doc.mentions[chem.mention].mesh_id.clone();
    let disease = doc.mentions[dis.mention].mesh_id.clone();
    let sequence = make_sequence(doc, chem, dis);
    Instance {
        pmid: doc.pmid.clone(),
        label: label_of(doc, &chemical, &disease),
        chemical,
        disease,
        level,
        mentions: Some(MentionPair {
            chemical: chem.mention,
            disease: dis.mention,
        }),
        sequence,
    }
}

fn make_sequence(doc: &Document, chem: Occurrence, dis: Occurrence) -> Vec<String> {
    let sentence = |i: usize| doc.sentences[i].tokens.iter().map(|t| t.text.as_str());
    if chem.sentence == dis.sentence {
        let tokens: Vec<&str> = sentence(chem.sentence).collect();
        return window(&tokens, chem.token, dis.token);
    }
    let (first, second) = if chem.sentence < dis.sentence {
        (chem, dis)
    } else {
        (dis, chem)
    };
    let offset = doc.sentences[first.sentence].tokens.len();
    let tokens: Vec<&str> = sentence(first.sentence)
        .chain(sentence(second.sentence))
        .collect();
    window(&tokens, first.token, offset + second.token)
}

/// Builds all intra-sentence instances of an annotated document.
pub fn build_intra(doc: &Document) -> Vec<Instance> {
    let chems = occurrences(doc, EntityKind::Chemical);
    let dises = occurrences(doc, EntityKind::Disease);
    let mut out = Vec::new();
    for c in &chems {
        for d in dises.iter().filter(|d| d.sentence == c.sentence) {
            if doc.mentions[c.mention].mesh_id == doc.mentions[d.mention].mesh_id {
                continue;
            }
            out.push(make_instance(doc, *c, *d, Level::Intra));
        }
    }
    out.sort_by_key(|i| {
        let m = i.mentions.unwrap();
        (
            doc.mentions[m.chemical].start,
            doc.mentions[m.disease].start,
            m.chemical,
            m.disease,
        )
    });
    out
}

/// Builds inter-sentence instances for entity pairs without any intra instance.
pub fn build_inter(doc: &Document, intra: &[Instance]) -> Vec<Instance> {
    let covered: BTreeSet<(&str, &str)> = intra.iter().map(Instance::pair).collect();
    let chems = occurrences(doc, EntityKind::Chemical);
    let dises = occurrences(doc, EntityKind::Disease);

    // entity pair -> nearest mention pair as (distance, chem mention, dis mention)
    let mut best: BTreeMap<(&str, &str), (usize, Occurrence, Occurrence)> = BTreeMap::new();
    for c in &chems {
        for d in &dises {
            let pair = (
                doc.mentions[c.mention].mesh_id.as_str(),
                doc.mentions[d.mention].mesh_id.as_str(),
            );
            if pair.0 == pair.1 || covered.contains(&pair) {
                continue;
            }
            let distance = c.sentence.abs_diff(d.sentence);
            if distance == 0 || distance > MAX_SENTENCE_DISTANCE {
                continue;
            }
            let key = (distance, c.mention, d.mention);
            match best.get(&pair) {
                Some((bd, bc, bdis)) if (*bd, bc.mention, bdis.mention) <= key => {}
                _ => {
                    best.insert(pair, (distance, *c, *d));
                }
            }
        }
    }

    let mut out: Vec<Instance> = best
        .into_values()
        .map(|(_, c, d)| make_instance(doc, c, d, Level::Inter))
        .collect();
    out.sort_by_key(|i| {
        let m = i.mentions.unwrap();
        (
            doc.mentions[m.chemical].start,
            doc.mentions[m.disease].start,
        )
    });
    out
}

/// Intra followed by inter instances of one document.
pub fn build_instances(doc: &Document) -> Vec<Instance> {
    let mut intra = build_intra(doc);
    let inter = build_inter(doc, &intra);
    intra.extend(inter);
    intra
}

/// TSV dump: pmid, level, chemical, disease, label, space-joined tokens.
pub fn write_instances(instances: &[Instance]) -> String {
    let mut out = String::new();
    for i in instances {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            i.pmid,
            i.level,
            i.chemical,
            i.disease,
            i.label,
            i.sequence.join(" ")
        );
    }
    out
}

pub fn read_instances(input: &str) -> Result<Vec<Instance>> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let fields: Vec<&str> = line.split('\t').collect();
            let [pmid, level, chemical, disease, label, seq] = fields.as_slice() else {
                return Err(Error::format(
                    n + 1,
                    format!("expected 6 fields, got {}", fields.len()),
                ));
            };
            let wrap = |e: Error| Error::format(n + 1, e.to_string());
            Ok(Instance {
                pmid: pmid.to_string(),
                level: level.parse().map_err(wrap)?,
                chemical: chemical.to_string(),
                disease: disease.to_string(),
                mentions: None,
                sequence: seq
                    .split(' ')
                    .filter(|t| !t.is_empty())
                    .map(String::from)
                    .collect(),
                label: label.parse().map_err(wrap)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_pubtator;

    fn doc(input: &str) -> Document {
        parse_pubtator(input).unwrap().remove(0).annotate().unwrap()
    }

    #[test]
    fn chemicals_only_yields_nothing() {
        let d = doc("1|t|Aspirin and ibuprofen\n1|a|x\n1\t0\t7\tAspirin\tChemical\tC1\n1\t12\t21\tibuprofen\tChemical\tC2\n");
        assert!(build_intra(&d).is_empty());
    }

    #[test]
    fn cartesian_product_within_sentence() {
        // "A B x C D": chemicals A, B; diseases C, D
        let d = doc("1|t|A B x C D\n1|a|y\n\
             1\t0\t1\tA\tChemical\tC1\n1\t2\t3\tB\tChemical\tC2\n\
             1\t6\t7\tC\tDisease\tD1\n1\t8\t9\tD\tDisease\tD2\n");
        assert_eq!(build_intra(&d).len(), 4);
    }

    #[test]
    fn window_arithmetic() {
        // 3+ words each side, adjacent entities -> 3 + 1 + 0 + 1 + 3
        let d = doc("1|t|w1 w2 w3 w4 A B w5 w6 w7 w8\n1|a|y\n\
             1\t12\t13\tA\tChemical\tC1\n1\t14\t15\tB\tDisease\tD1\n");
        let inst = build_intra(&d);
        assert_eq!(inst.len(), 1);
        assert_eq!(inst[0].sequence.len(), 8);
        assert_eq!(inst[0].sequence[0], "w2");
        assert_eq!(inst[0].sequence[7], "w7");
    }

    #[test]
    fn inter_window_skips_middle_sentence() {
        let d = doc(
            "1|t|Title\n1|a|Drug Aspirin given here. Middle words only. Then ulcer occurred.\n\
             1\t11\t18\tAspirin\tChemical\tC1\n1\t55\t60\tulcer\tDisease\tD1\n",
        );
        assert_eq!(d.sentences.len(), 4);
        let intra = build_intra(&d);
        let inter = build_inter(&d, &intra);
        assert_eq!(inter.len(), 1);
        let seq = &inter[0].sequence;
        assert_eq!(
            seq,
            &["drug", "C1", "given", "here", "then", "D1", "occurred"]
        );
        assert!(!seq.iter().any(|t| t == "middle"));
    }

    #[test]
    fn self_pairs_skipped() {
        let d = doc("1|t|cocaine chest pain\n1|a|y\n\
             1\t0\t7\tcocaine\tChemical\tD003042\n1\t0\t7\tcocaine\tDisease\tD003042\n\
             1\t8\t18\tchest pain\tDisease\tD002637\n");
        let intra = build_intra(&d);
        assert_eq!(intra.len(), 1);
        assert_eq!(intra[0].pair(), ("D003042", "D002637"));
    }

    #[test]
    fn dump_round_trip() {
        let d = doc("1|t|A B x C D\n1|a|y\n\
             1\t0\t1\tA\tChemical\tC1\n1\t6\t7\tC\tDisease\tD1\n1\tCID\tC1\tD1\n");
        let inst = build_instances(&d);
        let back = read_instances(&write_instances(&inst)).unwrap();
        assert_eq!(back.len(), inst.len());
        for (a, b) in inst.iter().zip(&back) {
            assert_eq!(a.sequence, b.sequence);
            assert_eq!((a.pair(), a.label, a.level), (b.pair(), b.label, b.level));
        }
    }

    #[test]
    fn read_rejects_short_rows() {
        assert!(matches!(
            read_instances("1\tintra\tC\tD\n"),
            Err(Error::Format { line: 1, .. })
        ));
    }
}
