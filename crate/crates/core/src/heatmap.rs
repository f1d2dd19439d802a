//! Attention heat maps: one weight per token of a predicted instance.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instances::Level;
use crate::nam::Prediction;

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapRecord {
    pub pmid: String,
    pub level: Level,
    pub chemical: String,
    pub disease: String,
    pub p_positive: f64,
    /// Tokens in sequence order with their attention weight.
    pub cells: Vec<(String, f64)>,
}

pub fn export_heatmap(prediction: &Prediction) -> HeatmapRecord {
    HeatmapRecord {
        pmid: prediction.pmid.clone(),
        level: prediction.level,
        chemical: prediction.chemical.clone(),
        disease: prediction.disease.clone(),
        p_positive: prediction.p_positive(),
        cells: prediction
            .tokens
            .iter()
            .cloned()
            .zip(prediction.attention.iter().copied())
            .collect(),
    }
}

impl HeatmapRecord {
    /// A `#`-prefixed metadata line followed by `token<TAB>weight` rows.
    pub fn to_tsv(&self) -> String {
        let mut out = format!(
            "# pmid={} level={} chemical={} disease={} p_positive={}\n",
            self.pmid, self.level, self.chemical, self.disease, self.p_positive
        );
        for (token, w) in &self.cells {
            let _ = writeln!(out, "{token}\t{w}");
        }
        out
    }

    pub fn from_tsv(input: &str) -> Result<Self> {
        let mut lines = input.lines();
        let meta = lines
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .ok_or_else(|| Error::format(1, "missing metadata line"))?;
        let field = |key: &str| -> Result<&str> {
            meta.split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .ok_or_else(|| Error::format(1, format!("missing {key}")))
        };
        let p_positive = field("p_positive")?
            .parse()
            .map_err(|_| Error::format(1, "bad p_positive"))?;
        let mut cells = Vec::new();
        for (n, line) in lines.enumerate() {
            let (token, w) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(n + 2, "expected token<TAB>weight"))?;
            let w = w
                .parse()
                .map_err(|_| Error::format(n + 2, format!("bad weight {w:?}")))?;
            cells.push((token.to_string(), w));
        }
        Ok(HeatmapRecord {
            pmid: field("pmid")?.to_string(),
            level: field("level")?.parse()?,
            chemical: field("chemical")?.to_string(),
            disease: field("disease")?.to_string(),
            p_positive,
            cells,
        })
    }

    /// A standalone SVG strip: one grayscale cell per token, darker for
    /// larger weights (scaled to the maximum weight).
    pub fn to_svg(&self) -> String {
        const CELL_H: usize = 28;
        const CHAR_W: usize = 8;
        let widths: Vec<usize> = self
            .cells
            .iter()
            .map(|(t, _)| t.chars().count() * CHAR_W + 12)
            .collect();
        let total: usize = widths.iter().sum();
        let max = self.cells.iter().map(|c| c.1).fold(0.0, f64::max);
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total}\" height=\"{CELL_H}\" \
             font-family=\"monospace\" font-size=\"13\">\n"
        );
        let mut x = 0;
        for ((token, w), width) in self.cells.iter().zip(&widths) {
            let shade = if max > 0.0 { w / max } else { 0.0 };
            let level = (255.0 * (1.0 - shade)).round() as u8;
            let ink = if shade > 0.5 { "#ffffff" } else { "#000000" };
            let _ = writeln!(
                out,
                "  <rect x=\"{x}\" y=\"0\" width=\"{width}\" height=\"{CELL_H}\" \
                 fill=\"rgb({level},{level},{level})\"><title>{w:.4}</title></rect>\n  \
                 <text x=\"{}\" y=\"19\" fill=\"{ink}\">{}</text>",
                x + 6,
                escape(token)
            );
            x += width;
        }
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::Label;

    fn prediction(tokens: &[&str], weights: &[f64]) -> Prediction {
        Prediction {
            pmid: "1".into(),
            level: Level::Intra,
            chemical: "D1".into(),
            disease: "D2".into(),
            probabilities: [0.3, 0.7],
            label: Label::Positive,
            attention: weights.to_vec(),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
        }
    }

    #[test]
    fn single_token_has_full_weight() {
        let r = export_heatmap(&prediction(&["D1"], &[1.0]));
        assert_eq!(r.cells, [("D1".to_string(), 1.0)]);
    }

    #[test]
    fn tsv_round_trips() {
        let r = export_heatmap(&prediction(&["D1", "induced", "D2"], &[0.25, 0.5, 0.25]));
        assert_eq!(HeatmapRecord::from_tsv(&r.to_tsv()).unwrap(), r);
    }

    #[test]
    fn svg_has_a_cell_per_token() {
        let r = export_heatmap(&prediction(&["a<b", "c"], &[0.9, 0.1]));
        let svg = r.to_svg();
        assert_eq!(svg.matches("<rect").count(), 2);
        assert!(svg.contains("a&lt;b"));
    }
}
