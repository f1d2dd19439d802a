//! Precision, recall and F at instance level and after merging, k-fold
//! splits and the paired t-test used to compare systems across folds.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::Document;
use crate::error::{Error, Result};

/// `(pmid, chemical, disease)`.
pub type DocPair = (String, String, String);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Metrics {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f: f_score(precision, recall),
        }
    }
}

pub fn prf(predicted: &BTreeSet<DocPair>, gold: &BTreeSet<DocPair>) -> Metrics {
    let tp = predicted.intersection(gold).count();
    Metrics::from_counts(tp, predicted.len() - tp, gold.len() - tp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelReport {
    pub intra: Metrics,
    pub inter: Metrics,
    pub merged: Metrics,
}

/// Scores each level and their union against the full gold set. The two
/// prediction sets must not share a pair.
pub fn level_report(
    intra: &BTreeSet<DocPair>,
    inter: &BTreeSet<DocPair>,
    gold: &BTreeSet<DocPair>,
) -> Result<LevelReport> {
    if let Some(p) = intra.intersection(inter).next() {
        return Err(Error::Invalid(format!(
            "pair ({}, {}) in {} predicted at both levels",
            p.1, p.2, p.0
        )));
    }
    let merged: BTreeSet<DocPair> = intra.union(inter).cloned().collect();
    Ok(LevelReport {
        intra: prf(intra, gold),
        inter: prf(inter, gold),
        merged: prf(&merged, gold),
    })
}

pub fn gold_pairs(docs: &[Document]) -> BTreeSet<DocPair> {
    docs.iter()
        .flat_map(|d| {
            d.gold_pairs
                .iter()
                .map(|(c, dis)| (d.pmid.clone(), c.clone(), dis.clone()))
        })
        .collect()
}

/// Metrics report: one row per level, P/R/F as percentages with two decimals.
pub fn write_report(rows: &[(&str, Metrics)]) -> String {
    let mut out = String::from("level\ttp\tfp\tfn\tP\tR\tF\n");
    for (name, m) in rows {
        let _ = writeln!(
            out,
            "{name}\t{}\t{}\t{}\t{:.2}\t{:.2}\t{:.2}",
            m.tp,
            m.fp,
            m.fn_,
            m.precision * 100.0,
            m.recall * 100.0,
            m.f * 100.0
        );
    }
    out
}

/// Parses [`write_report`] output back into counts; rates are recomputed
/// from the counts.
pub fn read_report(input: &str) -> Result<Vec<(String, Metrics)>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 7 {
            return Err(Error::format(
                n + 1,
                format!("expected 7 columns, found {}", cols.len()),
            ));
        }
        let count = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::format(n + 1, format!("bad count {s:?}")))
        };
        out.push((
            cols[0].to_string(),
            Metrics::from_counts(count(cols[1])?, count(cols[2])?, count(cols[3])?),
        ));
    }
    Ok(out)
}

/// Seeded document-level split into `k` folds whose sizes differ by at most
/// one. Returns indices into the input.
pub fn kfold(n_documents: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || n_documents < k {
        return Err(Error::Invalid(format!(
            "cannot split {n_documents} documents into {k} folds"
        )));
    }
    let mut idx: Vec<usize> = (0..n_documents).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = n_documents / k;
    let extra = n_documents % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        folds.push(idx[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    /// Mean of `a − b`.
    pub mean_diff: f64,
    pub t: f64,
    /// Two-tailed.
    pub p_value: f64,
    /// Differences were constant and nonzero, so `t` is infinite.
    pub zero_variance: bool,
}

/// Paired two-tailed t-test on per-fold scores.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Invalid(format!(
            "paired t-test needs two equal-length samples of at least 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let k = a.len() as f64;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / k;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    if var == 0.0 {
        return Ok(if mean == 0.0 {
            TTest {
                mean_diff: 0.0,
                t: 0.0,
                p_value: 1.0,
                zero_variance: false,
            }
        } else {
            TTest {
                mean_diff: mean,
                t: mean.signum() * f64::INFINITY,
                p_value: 0.0,
                zero_variance: true,
            }
        });
    }
    let t = mean * k.sqrt() / var.sqrt();
    let dist = StudentsT::new(0.0, 1.0, k - 1.0).expect("degrees of freedom are positive");
    Ok(TTest {
        mean_diff: mean,
        t,
        p_value: 2.0 * dist.cdf(-t.abs()),
        zero_variance: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(ids: &[&str]) -> BTreeSet<DocPair> {
        ids.iter()
            .map(|i| ("1".into(), format!("C{i}"), "D".into()))
            .collect()
    }

    #[test]
    fn perfect_prediction() {
        let g = pairs(&["a", "b"]);
        let m = prf(&g, &g);
        assert_eq!((m.precision, m.recall, m.f), (1.0, 1.0, 1.0));
    }

    #[test]
    fn partial_prediction() {
        let gold = pairs(&["a", "b", "c", "d", "e"]);
        let pred = pairs(&["a", "b", "x", "y"]);
        let m = prf(&pred, &gold);
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.recall, 0.4);
        assert!((m.f - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn empty_sets_score_zero() {
        let m = prf(&BTreeSet::new(), &BTreeSet::new());
        assert_eq!((m.precision, m.recall, m.f), (0.0, 0.0, 0.0));
    }

    #[test]
    fn overlapping_levels_rejected() {
        let a = pairs(&["a"]);
        assert!(level_report(&a, &a, &a).is_err());
    }

    #[test]
    fn empty_inter_matches_intra() {
        let gold = pairs(&["a", "b", "c"]);
        let r = level_report(&pairs(&["a", "z"]), &BTreeSet::new(), &gold).unwrap();
        assert_eq!(r.merged, r.intra);
    }

    #[test]
    fn fold_sizes() {
        let f = kfold(100, 10, 3).unwrap();
        assert!(f.iter().all(|x| x.len() == 10));
        let mut sizes: Vec<usize> = kfold(103, 10, 3).unwrap().iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, [10, 10, 10, 10, 10, 10, 10, 11, 11, 11]);
        assert_eq!(kfold(50, 10, 9).unwrap(), kfold(50, 10, 9).unwrap());
        assert!(kfold(9, 10, 0).is_err());
    }

    #[test]
    fn ttest_degenerate_cases() {
        let a = [0.6, 0.7, 0.65];
        let same = paired_ttest(&a, &a).unwrap();
        assert_eq!((same.mean_diff, same.p_value), (0.0, 1.0));
        let shifted = paired_ttest(&[2.0, 3.0, 4.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!(shifted.zero_variance);
        assert_eq!(shifted.p_value, 0.0);
    }

    #[test]
    fn report_round_trips_counts() {
        let m = Metrics::from_counts(3, 1, 2);
        let text = write_report(&[("merged", m)]);
        assert!(text.contains("merged\t3\t1\t2\t75.00\t60.00\t66.67"));
        assert_eq!(read_report(&text).unwrap(), [("merged".to_string(), m)]);
    }
}
