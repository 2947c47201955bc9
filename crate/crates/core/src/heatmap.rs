//! Attention heatmaps: per-token attention weights rendered as HTML or as
//! ANSI-coloured terminal text.

use serde::Serialize;

use crate::model::{predict_section, ModelError, ModelParams};
use crate::text::{ClassLabel, Section};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatSentence {
    pub doc_id: String,
    pub section_id: String,
    pub gold: Option<ClassLabel>,
    pub predicted: ClassLabel,
    pub tokens: Vec<String>,
    /// Attention weight per token; sums to one.
    pub scores: Vec<f64>,
}

impl HeatSentence {
    /// Scores scaled so the sentence's strongest token is 1.
    pub fn intensities(&self) -> Vec<f64> {
        let max = self.scores.iter().cloned().fold(0.0, f64::max);
        self.scores
            .iter()
            .map(|s| if max > 0.0 { s / max } else { 0.0 })
            .collect()
    }
}

/// Runs the model over every section and collects the sentence attention.
pub fn attention_heatmap(params: &ModelParams, sections: &[Section]) -> Result<Vec<HeatSentence>, ModelError> {
    if !params.config.variant.has_attention() {
        return Err(ModelError::NoAttention);
    }
    let mut out = Vec::new();
    for section in sections {
        let encoded: Vec<_> = section.sentences.iter().map(|s| params.embeddings.encode(s)).collect();
        let preds = predict_section(params, &encoded)?;
        for (sentence, pred) in section.sentences.iter().zip(preds) {
            let scores = pred.scores.clone().ok_or(ModelError::NoAttention)?;
            out.push(HeatSentence {
                doc_id: section.doc_id.clone(),
                section_id: section.section_id.clone(),
                gold: sentence.label,
                predicted: ClassLabel::from_index(pred.label()).expect("class index in range"),
                tokens: sentence.tokens.iter().map(|t| t.surface.clone()).collect(),
                scores,
            });
        }
    }
    Ok(out)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// Self-contained page; each token carries its raw weight in `data-score`.
pub fn render_html(rows: &[HeatSentence], title: &str) -> String {
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    out.push_str(&format!("<title>{}</title>\n", escape(title)));
    out.push_str(
        "<style>\nbody{font-family:sans-serif;line-height:1.9}\n.s{margin:.4em 0}\n\
         .meta{color:#666;font-size:.8em;margin-right:.6em}\n.t{padding:.1em .15em;border-radius:2px}\n</style>\n",
    );
    out.push_str("</head>\n<body>\n");
    out.push_str(&format!("<h1>{}</h1>\n", escape(title)));
    for row in rows {
        let gold = row.gold.map_or("-", |g| g.key());
        out.push_str(&format!(
            "<div class=\"s\" data-doc=\"{}\" data-section=\"{}\" data-gold=\"{}\" data-predicted=\"{}\">",
            escape(&row.doc_id),
            escape(&row.section_id),
            gold,
            row.predicted.key()
        ));
        out.push_str(&format!(
            "<span class=\"meta\">{} / {}</span>",
            escape(gold),
            row.predicted.key()
        ));
        for ((tok, score), level) in row.tokens.iter().zip(&row.scores).zip(row.intensities()) {
            out.push_str(&format!(
                "<span class=\"t\" data-score=\"{score}\" style=\"background:rgba(214,39,40,{level:.4})\">{}</span> ",
                escape(tok)
            ));
        }
        out.push_str("</div>\n");
    }
    out.push_str("</body>\n</html>\n");
    out
}

/// 256-colour backgrounds from pale to dark red.
const ANSI_STEPS: [u8; 8] = [231, 224, 217, 210, 203, 196, 160, 124];

/// Step index in `0..8` for an intensity in `[0, 1]`.
pub fn ansi_level(intensity: f64) -> usize {
    ((intensity.clamp(0.0, 1.0) * 8.0).floor() as usize).min(7)
}

pub fn render_ansi(rows: &[HeatSentence]) -> String {
    let mut out = String::new();
    for row in rows {
        let gold = row.gold.map_or("-", |g| g.key());
        out.push_str(&format!(
            "{}/{} [{} -> {}] ",
            row.doc_id,
            row.section_id,
            gold,
            row.predicted.key()
        ));
        for (tok, level) in row.tokens.iter().zip(row.intensities()) {
            let step = ansi_level(level);
            let fg = if step >= 5 { 231 } else { 16 };
            out.push_str(&format!("\x1b[38;5;{fg};48;5;{}m{tok}\x1b[0m ", ANSI_STEPS[step]));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(tokens: &[&str], scores: &[f64]) -> HeatSentence {
        HeatSentence {
            doc_id: "d".into(),
            section_id: "1".into(),
            gold: Some(ClassLabel::Prohibition),
            predicted: ClassLabel::Prohibition,
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            scores: scores.to_vec(),
        }
    }

    #[test]
    fn single_token_is_full_intensity() {
        let r = row(&["Stop"], &[1.0]);
        assert_eq!(r.intensities(), vec![1.0]);
        assert_eq!(ansi_level(1.0), 7);
        assert!(render_html(&[r], "t").contains("data-score=\"1\""));
    }

    #[test]
    fn html_escapes_tokens() {
        let html = render_html(&[row(&["<b>", "&"], &[0.5, 0.5])], "a<b");
        assert!(html.contains("&lt;b&gt;") && html.contains("&amp;"));
        assert!(!html.contains("<b>"));
    }

    #[test]
    fn ansi_has_eight_steps() {
        let levels: Vec<usize> = (0..=16).map(|i| ansi_level(i as f64 / 16.0)).collect();
        assert_eq!(levels.iter().min(), Some(&0));
        assert_eq!(levels.iter().max(), Some(&7));
        let mut distinct = levels.clone();
        distinct.dedup();
        assert_eq!(distinct.len(), 8);
    }
}
