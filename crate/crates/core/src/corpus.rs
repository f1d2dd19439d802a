//! PubTator documents: parsing, sentence splitting and tokenization.
//!
//! A PubTator block looks like
//!
//! ```text
//! 12084448|t|Ifosfamide encephalopathy presenting with asterixis.
//! 12084448|a|CNS toxic effects of the antineoplastic agent ifosfamide ...
//! 12084448	0	10	Ifosfamide	Chemical	D007069
//! 12084448	CID	D007069	D001927
//! ```
//!
//! Offsets are character offsets into `title + " " + abstract`.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityKind {
    Chemical,
    Disease,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Chemical => "Chemical",
            EntityKind::Disease => "Disease",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An annotated entity span normalized to a single MeSH identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub kind: EntityKind,
    pub mesh_id: String,
}

/// A token of a sentence: either a lowercased word or the MeSH identifier of
/// the mention it replaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub mention: Option<usize>,
}

impl Token {
    pub fn word(text: impl Into<String>) -> Self {
        Token {
            text: text.into(),
            mention: None,
        }
    }

    pub fn is_entity(&self) -> bool {
        self.mention.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    pub pmid: String,
    pub title: String,
    pub abstract_text: String,
    /// Sorted by start offset.
    pub mentions: Vec<Mention>,
    /// (chemical, disease) MeSH identifier pairs annotated as CID.
    pub gold_pairs: BTreeSet<(String, String)>,
    pub sentences: Vec<Sentence>,
}

impl Document {
    /// The text that mention offsets index into.
    pub fn text(&self) -> String {
        format!("{} {}", self.title, self.abstract_text)
    }

    pub fn title_len(&self) -> usize {
        self.title.chars().count()
    }

    pub fn text_len(&self) -> usize {
        self.title_len() + 1 + self.abstract_text.chars().count()
    }

    /// Splits sentences and tokenizes each of them.
    pub fn annotate(mut self) -> Result<Document> {
        split_sentences(&mut self);
        let chars: Vec<char> = self.text().chars().collect();
        let mut sentences = std::mem::take(&mut self.sentences);
        for sentence in &mut sentences {
            sentence.tokens = tokenize(sentence, &chars, &self.mentions)?;
        }
        self.sentences = sentences;
        Ok(self)
    }

    /// Index of the sentence containing character offset `pos`.
    pub fn sentence_of(&self, pos: usize) -> Option<usize> {
        self.sentences
            .iter()
            .position(|s| s.start <= pos && pos < s.end)
    }

    pub fn mesh_ids(&self, kind: EntityKind) -> BTreeSet<&str> {
        self.mentions
            .iter()
            .filter(|m| m.kind == kind)
            .map(|m| m.mesh_id.as_str())
            .collect()
    }
}

struct BlockLine<'a> {
    number: usize,
    text: &'a str,
}

/// Parses a PubTator stream into documents, one per blank-line separated block.
pub fn parse_pubtator(input: &str) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut block: Vec<BlockLine<'_>> = Vec::new();
    for (i, raw) in input.lines().enumerate() {
        let text = raw.trim_end_matches('\r');
        if text.trim().is_empty() {
            if !block.is_empty() {
                docs.push(parse_block(&block)?);
                block.clear();
            }
        } else {
            block.push(BlockLine {
                number: i + 1,
                text,
            });
        }
    }
    if !block.is_empty() {
        docs.push(parse_block(&block)?);
    }
    Ok(docs)
}

fn parse_block(lines: &[BlockLine<'_>]) -> Result<Document> {
    let first = lines[0].number;
    let pmid_guess = lines[0]
        .text
        .split(['|', '\t'])
        .next()
        .unwrap_or_default()
        .to_string();
    let err = |line: usize, msg: String| Error::Parse {
        pmid: pmid_guess.clone(),
        line,
        msg,
    };

    let mut title = None;
    let mut abstract_text = None;
    let mut raw_mentions = Vec::new();
    let mut gold_pairs = BTreeSet::new();

    for line in lines {
        let mut bar = line.text.splitn(3, '|');
        if let (Some(pmid), Some(tag @ ("t" | "a")), Some(body)) =
            (bar.next(), bar.next(), bar.next())
        {
            if !pmid.contains('\t') {
                check_pmid(pmid, &pmid_guess, line.number, &err)?;
                if tag == "t" {
                    title = Some(body.to_string());
                } else {
                    abstract_text = Some(body.to_string());
                }
                continue;
            }
        }

        let fields: Vec<&str> = line.text.split('\t').collect();
        check_pmid(fields[0], &pmid_guess, line.number, &err)?;
        match fields.as_slice() {
            [_, "CID", chem, dis, ..] => {
                gold_pairs.insert((chem.to_string(), dis.to_string()));
            }
            [_, start, end, surface, kind, ids, ..] if start.parse::<usize>().is_ok() => {
                let start: usize = start.parse().unwrap();
                let end: usize = end
                    .parse()
                    .map_err(|_| err(line.number, format!("bad end offset {end:?}")))?;
                raw_mentions.push((line.number, start, end, *surface, *kind, *ids));
            }
            // other relation types are not used
            [_, _, _, _] => {}
            _ => return Err(err(line.number, "unrecognized line".into())),
        }
    }

    let title = title.ok_or_else(|| err(first, "missing title line".into()))?;
    let abstract_text = abstract_text.ok_or_else(|| err(first, "missing abstract line".into()))?;
    let mut doc = Document {
        pmid: pmid_guess.clone(),
        title,
        abstract_text,
        ..Document::default()
    };

    let len = doc.text_len();
    for (number, start, end, surface, kind, ids) in raw_mentions {
        if start >= end || end > len {
            return Err(err(
                number,
                format!("offsets {start}..{end} out of bounds for text of length {len}"),
            ));
        }
        let kind = match kind {
            "Chemical" => EntityKind::Chemical,
            "Disease" => EntityKind::Disease,
            _ => continue,
        };
        for id in ids.split('|').map(str::trim) {
            if id.is_empty() || id == "-1" {
                continue;
            }
            doc.mentions.push(Mention {
                start,
                end,
                surface: surface.to_string(),
                kind,
                mesh_id: id.to_string(),
            });
        }
    }
    doc.mentions.sort_by_key(|m| m.start);

    for (c, d) in &gold_pairs {
        let seen = |id: &str| doc.mentions.iter().any(|m| m.mesh_id == id);
        if !seen(c) || !seen(d) {
            log::warn!(
                "{}: gold pair ({c}, {d}) references an unmentioned id",
                doc.pmid
            );
        }
    }
    doc.gold_pairs = gold_pairs;
    Ok(doc)
}

fn check_pmid(
    pmid: &str,
    expected: &str,
    line: usize,
    err: &impl Fn(usize, String) -> Error,
) -> Result<()> {
    if pmid != expected {
        return Err(err(line, format!("pmid {pmid} inside block of {expected}")));
    }
    Ok(())
}

/// Serializes documents back to PubTator text.
pub fn write_pubtator(docs: &[Document]) -> String {
    let mut out = String::new();
    for (i, doc) in docs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "{}|t|{}", doc.pmid, doc.title);
        let _ = writeln!(out, "{}|a|{}", doc.pmid, doc.abstract_text);
        for m in &doc.mentions {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                doc.pmid, m.start, m.end, m.surface, m.kind, m.mesh_id
            );
        }
        for (c, d) in &doc.gold_pairs {
            let _ = writeln!(out, "{}\tCID\t{}\t{}", doc.pmid, c, d);
        }
    }
    out
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

/// Populates `doc.sentences` with spans (tokens left empty).
///
/// The title is always sentence 0. The abstract is split after `.`, `?` or
/// `!` when followed by whitespace and an uppercase letter or digit, unless
/// the split point falls inside a mention span.
pub fn split_sentences(doc: &mut Document) {
    let chars: Vec<char> = doc.text().chars().collect();
    let title_len = doc.title_len();
    let mut spans = vec![(0, title_len)];

    let mut start = title_len + 1;
    while start < chars.len() && chars[start].is_whitespace() {
        start += 1;
    }
    let mut i = start;
    while i < chars.len() {
        if is_terminal(chars[i]) && i + 1 < chars.len() && chars[i + 1].is_whitespace() {
            let mut next = i + 1;
            while next < chars.len() && chars[next].is_whitespace() {
                next += 1;
            }
            let opens =
                next < chars.len() && (chars[next].is_uppercase() || chars[next].is_ascii_digit());
            let end = i + 1;
            let inside_mention = doc.mentions.iter().any(|m| m.start < next && m.end > end);
            if opens && !inside_mention {
                spans.push((start, end));
                start = next;
                i = next;
                continue;
            }
        }
        i += 1;
    }
    let mut end = chars.len();
    while end > start && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    if end > start {
        spans.push((start, end));
    }

    doc.sentences = spans
        .into_iter()
        .enumerate()
        .map(|(index, (start, end))| Sentence {
            index,
            start,
            end,
            tokens: Vec::new(),
        })
        .collect();
}

fn push_words(chars: &[char], out: &mut Vec<Token>) {
    let mut word = String::new();
    for &c in chars {
        if c.is_alphanumeric() {
            word.extend(c.to_lowercase());
        } else if !word.is_empty() {
            out.push(Token::word(std::mem::take(&mut word)));
        }
    }
    if !word.is_empty() {
        out.push(Token::word(word));
    }
}

/// Tokenizes one sentence of a document.
///
/// `text` is the document text as characters. Every mention starting inside
/// the sentence becomes a single token holding its MeSH id, except mentions
/// enclosed directly in parentheses, which are dropped together with the
/// parentheses. Remaining text is lowercased and split into alphanumeric
/// runs.
pub fn tokenize(sentence: &Sentence, text: &[char], mentions: &[Mention]) -> Result<Vec<Token>> {
    let (s, e) = (sentence.start, sentence.end.min(text.len()));
    let mut inside: Vec<usize> = (0..mentions.len())
        .filter(|&i| mentions[i].start >= s && mentions[i].start < e)
        .collect();
    inside.sort_by_key(|&i| (mentions[i].start, mentions[i].end));

    // group identical spans, reject partial overlaps
    let mut groups: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    for i in inside {
        let m = &mentions[i];
        match groups.last_mut() {
            Some((gs, ge, ids)) if *gs == m.start && *ge == m.end => ids.push(i),
            Some((gs, ge, _)) if m.start < *ge => {
                return Err(Error::OverlappingMentions {
                    first: (*gs, *ge),
                    second: (m.start, m.end),
                })
            }
            _ => groups.push((m.start, m.end, vec![i])),
        }
    }

    let mut tokens = Vec::new();
    let mut pos = s;
    for (start, end, ids) in groups {
        let end = end.min(e);
        let parenthesized = start > pos && text[start - 1] == '(' && end < e && text[end] == ')';
        if parenthesized {
            push_words(&text[pos..start - 1], &mut tokens);
            pos = end + 1;
        } else {
            push_words(&text[pos..start], &mut tokens);
            tokens.extend(ids.into_iter().map(|i| Token {
                text: mentions[i].mesh_id.clone(),
                mention: Some(i),
            }));
            pos = end;
        }
    }
    if pos < e {
        push_words(&text[pos..e], &mut tokens);
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mention(start: usize, end: usize, kind: EntityKind, id: &str) -> Mention {
        Mention {
            start,
            end,
            surface: String::new(),
            kind,
            mesh_id: id.into(),
        }
    }

    fn texts(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn parses_single_block() {
        let input = "12084448|t|Ifosfamide encephalopathy\n\
                     12084448|a|Case report.\n\
                     12084448\t0\t10\tIfosfamide\tChemical\tD007069\n\
                     12084448\tCID\tD007069\tD001927\n";
        let docs = parse_pubtator(input).unwrap();
        assert_eq!(docs.len(), 1);
        let doc = &docs[0];
        assert_eq!(doc.pmid, "12084448");
        assert_eq!(doc.mentions.len(), 1);
        assert_eq!(doc.mentions[0].mesh_id, "D007069");
        assert_eq!(doc.mentions[0].kind, EntityKind::Chemical);
        let expected: BTreeSet<_> = [("D007069".to_string(), "D001927".to_string())].into();
        assert_eq!(doc.gold_pairs, expected);
    }

    #[test]
    fn empty_input_yields_no_documents() {
        assert!(parse_pubtator("").unwrap().is_empty());
        assert!(parse_pubtator("\n\n").unwrap().is_empty());
    }

    #[test]
    fn composite_ids_split_and_unnormalized_dropped() {
        let input = "1|t|Myocardial necrosis and infarction\n\
                     1|a|x\n\
                     1\t0\t35\tMyocardial necrosis and infarction\tDisease\tD009202|D009203\n\
                     1\t0\t10\tMyocardial\tDisease\t-1\n";
        let doc = &parse_pubtator(input).unwrap()[0];
        // hand count: two ids on the composite line, the -1 line contributes nothing
        assert_eq!(doc.mentions.len(), 2);
        assert_eq!(doc.mentions[0].mesh_id, "D009202");
        assert_eq!(doc.mentions[1].mesh_id, "D009203");
        assert!(doc.mentions.iter().all(|m| (m.start, m.end) == (0, 35)));
    }

    #[test]
    fn missing_abstract_is_an_error() {
        let err = parse_pubtator("55|t|Title only\n55\t0\t5\tTitle\tChemical\tD1\n").unwrap_err();
        match err {
            Error::Parse { pmid, line, .. } => {
                assert_eq!(pmid, "55");
                assert_eq!(line, 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn out_of_bounds_offset_is_an_error() {
        let err = parse_pubtator("7|t|Ab\n7|a|cd\n7\t3\t40\tx\tDisease\tD1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn duplicate_relations_deduplicate() {
        let input = "1|t|a\n1|a|b\n1\tCID\tC\tD\n1\tCID\tC\tD\n";
        assert_eq!(parse_pubtator(input).unwrap()[0].gold_pairs.len(), 1);
    }

    #[test]
    fn mentions_sorted_by_start() {
        let input = "1|t|aa bb\n1|a|cc\n1\t3\t5\tbb\tDisease\tD2\n1\t0\t2\taa\tChemical\tC1\n";
        let doc = &parse_pubtator(input).unwrap()[0];
        assert_eq!(doc.mentions[0].mesh_id, "C1");
    }

    #[test]
    fn title_and_abstract_sentences() {
        let mut doc = Document {
            title: "A.".into(),
            abstract_text: "B.".into(),
            ..Document::default()
        };
        split_sentences(&mut doc);
        assert_eq!(doc.sentences.len(), 2);

        let mut doc = Document {
            title: "T".into(),
            abstract_text: "A. B.".into(),
            ..Document::default()
        };
        split_sentences(&mut doc);
        assert_eq!(doc.sentences.len(), 3);
        let text: Vec<char> = doc.text().chars().collect();
        let s: String = text[doc.sentences[2].start..doc.sentences[2].end]
            .iter()
            .collect();
        assert_eq!(s, "B.");
    }

    #[test]
    fn no_split_inside_mention() {
        // "Dr. Smith" is a single mention spanning the period
        let mut doc = Document {
            title: "T".into(),
            abstract_text: "Given Dr. Smith syndrome. Next one.".into(),
            mentions: vec![mention(8, 17, EntityKind::Disease, "D1")],
            ..Document::default()
        };
        split_sentences(&mut doc);
        assert_eq!(doc.sentences.len(), 3);
        assert!(doc.sentences[1].start <= 8 && doc.sentences[1].end >= 17);
    }

    #[test]
    fn lowercase_after_period_does_not_split() {
        let mut doc = Document {
            title: "T".into(),
            abstract_text: "Dose was 5 mg. given daily. Then stopped.".into(),
            ..Document::default()
        };
        split_sentences(&mut doc);
        assert_eq!(doc.sentences.len(), 3);
    }

    #[test]
    fn tokenize_replaces_mentions() {
        let text = "Ifosfamide encephalopathy presenting with asterixis.";
        let chars: Vec<char> = text.chars().collect();
        let mentions = vec![
            mention(0, 10, EntityKind::Chemical, "D007069"),
            mention(11, 25, EntityKind::Disease, "D001927"),
            mention(42, 51, EntityKind::Disease, "D020820"),
        ];
        let sentence = Sentence {
            index: 0,
            start: 0,
            end: chars.len(),
            tokens: vec![],
        };
        let tokens = tokenize(&sentence, &chars, &mentions).unwrap();
        assert_eq!(
            texts(&tokens),
            ["D007069", "D001927", "presenting", "with", "D020820"]
        );
        assert_eq!(tokens[0].mention, Some(0));
        assert!(!tokens[2].is_entity());
    }

    #[test]
    fn tokenize_drops_parenthesized_mentions() {
        let chars: Vec<char> = "X (Y) Z".chars().collect();
        let mentions = vec![mention(3, 4, EntityKind::Chemical, "C1")];
        let sentence = Sentence {
            index: 0,
            start: 0,
            end: chars.len(),
            tokens: vec![],
        };
        let tokens = tokenize(&sentence, &chars, &mentions).unwrap();
        assert_eq!(texts(&tokens), ["x", "z"]);
    }

    #[test]
    fn tokenize_plain_sentence() {
        let chars: Vec<char> = "He was awake.".chars().collect();
        let sentence = Sentence {
            index: 0,
            start: 0,
            end: chars.len(),
            tokens: vec![],
        };
        let tokens = tokenize(&sentence, &chars, &[]).unwrap();
        assert_eq!(texts(&tokens), ["he", "was", "awake"]);
    }

    #[test]
    fn tokenize_rejects_partial_overlap() {
        let chars: Vec<char> = "alpha beta gamma".chars().collect();
        let mentions = vec![
            mention(0, 10, EntityKind::Chemical, "C1"),
            mention(6, 16, EntityKind::Disease, "D1"),
        ];
        let sentence = Sentence {
            index: 0,
            start: 0,
            end: chars.len(),
            tokens: vec![],
        };
        let err = tokenize(&sentence, &chars, &mentions).unwrap_err();
        assert!(matches!(
            err,
            Error::OverlappingMentions {
                first: (0, 10),
                second: (6, 16)
            }
        ));
    }

    #[test]
    fn identical_spans_yield_one_token_each() {
        let chars: Vec<char> = "cocaine use".chars().collect();
        let mentions = vec![
            mention(0, 7, EntityKind::Chemical, "D003042"),
            mention(0, 7, EntityKind::Disease, "D003042"),
        ];
        let sentence = Sentence {
            index: 0,
            start: 0,
            end: chars.len(),
            tokens: vec![],
        };
        let tokens = tokenize(&sentence, &chars, &mentions).unwrap();
        assert_eq!(texts(&tokens), ["D003042", "D003042", "use"]);
    }

    #[test]
    fn digits_are_kept() {
        let chars: Vec<char> = "a 51-year-old man".chars().collect();
        let sentence = Sentence {
            index: 0,
            start: 0,
            end: chars.len(),
            tokens: vec![],
        };
        let tokens = tokenize(&sentence, &chars, &[]).unwrap();
        assert_eq!(texts(&tokens), ["a", "51", "year", "old", "man"]);
    }
}
