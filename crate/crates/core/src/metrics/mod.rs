//! Evaluation metrics for counting responses and attention grids.
//!
//! Text handling is deliberately forgiving about phrasing but strict about
//! token boundaries: `"120"` never matches a ground truth of 12, and
//! `"fivefold"` never matches 5. Number words come from the shared 1..=30
//! lexicon, with `"twenty one"` accepted next to `"twenty-one"`.

mod attn;
mod detect;
mod report;

pub use attn::{attn_iou, binarize_topk};
pub use detect::{ap, box_iou, pr_curve, Detection, PrPoint};
pub use report::{build_report, AttnIouSummary, CaseAccuracy, EvalReport, ReportConfig, SampleTruth};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::{word_to_number, PromptVariant};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("response references sample {0:?} which has no ground truth")]
    UnmatchedSample(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

/// One model answer, as read from a responses JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub sample_id: String,
    pub variant: PromptVariant,
    pub raw_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TokenKind {
    Digits,
    Wordish,
    Mixed,
}

/// Maximal `[a-z0-9-]` runs with outer hyphens trimmed, classified by content.
/// Mixed alphanumeric tokens ("12th", "a4") count as neither numeral nor word.
fn tokens(lower: &str) -> Vec<(usize, &str, TokenKind)> {
    let bytes = lower.as_bytes();
    let is_token_byte = |b: u8| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-';
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if !is_token_byte(bytes[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && is_token_byte(bytes[i]) {
            i += 1;
        }
        let raw = &lower[start..i];
        let trimmed = raw.trim_matches('-');
        if trimmed.is_empty() {
            continue;
        }
        let offset = start + (raw.len() - raw.trim_start_matches('-').len());
        let kind = if trimmed.bytes().all(|b| b.is_ascii_digit()) {
            TokenKind::Digits
        } else if trimmed.bytes().all(|b| b.is_ascii_lowercase() || b == b'-') {
            TokenKind::Wordish
        } else {
            TokenKind::Mixed
        };
        out.push((offset, trimmed, kind));
    }
    out
}

/// All numeric mentions in scan order: numeral tokens and lexicon words,
/// including two-token compounds like `"twenty one"`.
fn numeric_mentions(lower: &str) -> Vec<u32> {
    let toks = tokens(lower);
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let (_, text, kind) = toks[i];
        match kind {
            TokenKind::Digits => {
                if let Ok(v) = text.parse::<u32>() {
                    out.push(v);
                }
            }
            TokenKind::Wordish => {
                if text == "twenty" && i + 1 < toks.len() && toks[i + 1].2 == TokenKind::Wordish {
                    if let Ok(unit @ 1..=9) = word_to_number(toks[i + 1].1) {
                        out.push(20 + unit);
                        i += 2;
                        continue;
                    }
                }
                if let Ok(v) = word_to_number(text) {
                    out.push(v);
                }
            }
            TokenKind::Mixed => {}
        }
        i += 1;
    }
    out
}

/// Number immediately after a position (skipping blanks): a numeral token or
/// a lexicon word, with a token boundary after numerals.
fn number_right_after(lower: &str) -> Option<u32> {
    let rest = lower.trim_start();
    let toks = tokens(rest);
    let (offset, text, kind) = *toks.first()?;
    if offset != 0 {
        return None; // something non-numeric sits in between
    }
    match kind {
        TokenKind::Digits => text.parse().ok(),
        TokenKind::Wordish => {
            if text == "twenty" {
                if let Some(&(_, next, TokenKind::Wordish)) = toks.get(1) {
                    if let Ok(unit @ 1..=9) = word_to_number(next) {
                        return Some(20 + unit);
                    }
                }
            }
            word_to_number(text).ok()
        }
        TokenKind::Mixed => None,
    }
}

/// Extracts the count a response claims for `object_name`.
///
/// Priority: a formatted `<object>: {number}` answer wins; otherwise the
/// first numeral or number word in scan order; `None` when the text contains
/// neither. Case-insensitive throughout.
pub fn parse_count(raw_text: &str, object_name: &str) -> Option<u32> {
    let lower = raw_text.to_lowercase();
    let needle = object_name.to_lowercase();

    if !needle.is_empty() {
        let mut from = 0;
        while let Some(hit) = lower[from..].find(&needle) {
            let after_name = from + hit + needle.len();
            let rest = lower[after_name..].trim_start();
            if let Some(rest) = rest.strip_prefix(':') {
                if let Some(v) = number_right_after(rest) {
                    return Some(v);
                }
            }
            from = after_name;
        }
    }

    numeric_mentions(&lower).first().copied()
}

/// True iff the ground-truth integer appears in the raw response, as a
/// token-bounded numeral or as a lexicon number word.
pub fn response_mentions_count(raw_text: &str, count: u32) -> bool {
    numeric_mentions(&raw_text.to_lowercase()).contains(&count)
}

/// Mean per-sample hit rate of [`response_mentions_count`] over `responses`.
/// Every response must resolve in `truth`.
pub fn accuracy(
    responses: &[ModelResponse],
    truth: &BTreeMap<String, u32>,
) -> Result<f64, MetricsError> {
    if responses.is_empty() {
        return Err(MetricsError::EmptyInput("responses"));
    }
    let mut hits = 0usize;
    for r in responses {
        let gt = truth
            .get(&r.sample_id)
            .ok_or_else(|| MetricsError::UnmatchedSample(r.sample_id.clone()))?;
        hits += response_mentions_count(&r.raw_text, *gt) as usize;
    }
    Ok(hits as f64 / responses.len() as f64)
}

/// Accuracy split by ground-truth count.
pub fn per_count_breakdown(
    responses: &[ModelResponse],
    truth: &BTreeMap<String, u32>,
) -> Result<BTreeMap<u32, f64>, MetricsError> {
    let mut hits: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for r in responses {
        let gt = truth
            .get(&r.sample_id)
            .ok_or_else(|| MetricsError::UnmatchedSample(r.sample_id.clone()))?;
        let entry = hits.entry(*gt).or_default();
        entry.0 += response_mentions_count(&r.raw_text, *gt) as usize;
        entry.1 += 1;
    }
    Ok(hits
        .into_iter()
        .map(|(count, (h, n))| (count, h as f64 / n as f64))
        .collect())
}

/// Pearson correlation coefficient. Errors on mismatched or short inputs and
/// on zero variance in either series.
pub fn pearson_corr(xs: &[f64], ys: &[f64]) -> Result<f64, MetricsError> {
    if xs.len() != ys.len() {
        return Err(MetricsError::DimensionMismatch(format!(
            "{} xs vs {} ys",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < 2 {
        return Err(MetricsError::DegenerateInput(format!(
            "need at least 2 points, got {n}"
        )));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let (mut cov, mut vx, mut vy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(MetricsError::DegenerateInput("zero variance".into()));
    }
    Ok(cov / (vx * vy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resp(id: &str, text: &str) -> ModelResponse {
        ModelResponse {
            sample_id: id.into(),
            variant: PromptVariant::Standard,
            raw_text: text.into(),
        }
    }

    #[test]
    fn parse_count_prefers_the_formatted_answer() {
        assert_eq!(parse_count("circles: 7", "circles"), Some(7));
        assert_eq!(parse_count("I think circles: 7, final answer", "circles"), Some(7));
        assert_eq!(parse_count("There are 3 squares. circles: 9", "circles"), Some(9));
        assert_eq!(parse_count("Circles:   twelve", "circles"), Some(12));
        assert_eq!(parse_count("circles : 4", "circles"), Some(4));
    }

    #[test]
    fn parse_count_falls_back_to_scan_order() {
        assert_eq!(parse_count("There are five red apples on the table.", "apples"), Some(5));
        // First numeric mention wins regardless of numeral-vs-word form.
        assert_eq!(parse_count("I count twelve, maybe 13", "circles"), Some(12));
        assert_eq!(parse_count("maybe 13, or twelve", "circles"), Some(13));
        assert_eq!(parse_count("no shapes here", "squares"), None);
    }

    #[test]
    fn parse_count_handles_compounds_and_noise() {
        assert_eq!(parse_count("twenty one shapes", "shapes"), Some(21));
        assert_eq!(parse_count("shapes: twenty-three", "shapes"), Some(23));
        // A formatted slot without a number does not block the fallback.
        assert_eq!(parse_count("shapes: none, but I see 4", "shapes"), Some(4));
        // Mixed tokens are neither numerals nor words.
        assert_eq!(parse_count("the 12th shape", "shapes"), None);
    }

    #[test]
    fn mention_check_respects_token_boundaries() {
        assert!(response_mentions_count("There are five red apples.", 5));
        assert!(!response_mentions_count("There are four red apples.", 5));
        assert!(response_mentions_count("I see 12 dots", 12));
        assert!(!response_mentions_count("I see 120 dots", 12));
        assert!(!response_mentions_count("a fivefold increase", 5));
        assert!(response_mentions_count("twenty-one, I believe", 21));
        assert!(response_mentions_count("twenty one, I believe", 21));
    }

    #[test]
    fn accuracy_averages_hits() {
        let truth: BTreeMap<String, u32> =
            [("a".to_string(), 5), ("b".to_string(), 5), ("c".to_string(), 12)]
                .into_iter()
                .collect();
        let responses = vec![
            resp("a", "There are five red apples."),
            resp("b", "There are four red apples."),
            resp("c", "I see 120 dots"),
        ];
        let acc = accuracy(&responses, &truth).unwrap();
        assert!((acc - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn accuracy_rejects_unknown_samples_and_empty_input() {
        let truth: BTreeMap<String, u32> = [("a".to_string(), 5)].into_iter().collect();
        assert_eq!(
            accuracy(&[resp("ghost", "5")], &truth),
            Err(MetricsError::UnmatchedSample("ghost".into()))
        );
        assert_eq!(accuracy(&[], &truth), Err(MetricsError::EmptyInput("responses")));
    }

    #[test]
    fn per_count_breakdown_groups_by_truth() {
        let truth: BTreeMap<String, u32> =
            [("a".to_string(), 3), ("b".to_string(), 3), ("c".to_string(), 7)]
                .into_iter()
                .collect();
        let responses = vec![resp("a", "3"), resp("b", "4"), resp("c", "seven")];
        let table = per_count_breakdown(&responses, &truth).unwrap();
        assert_eq!(table.len(), 2);
        assert!((table[&3] - 0.5).abs() < 1e-12);
        assert!((table[&7] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_matches_hand_cases() {
        // Accuracy falling linearly with count correlates at exactly -1.
        let xs: Vec<f64> = (3..=12).map(|c| c as f64).collect();
        let ys: Vec<f64> = (3..=12).map(|c| 1.0 - (c as f64 - 3.0) / 9.0).collect();
        let r = pearson_corr(&xs, &ys).unwrap();
        assert!((r + 1.0).abs() < 1e-12);

        let r = pearson_corr(&xs, &xs).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_rejects_degenerate_series() {
        assert!(matches!(
            pearson_corr(&[1.0, 2.0], &[3.0, 3.0]),
            Err(MetricsError::DegenerateInput(_))
        ));
        assert!(matches!(
            pearson_corr(&[1.0], &[3.0]),
            Err(MetricsError::DegenerateInput(_))
        ));
        assert!(matches!(
            pearson_corr(&[1.0, 2.0], &[3.0]),
            Err(MetricsError::DimensionMismatch(_))
        ));
    }
}
