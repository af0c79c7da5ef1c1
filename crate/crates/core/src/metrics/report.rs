//! Aggregated evaluation reports: accuracy overall, per case, per count,
//! the count/accuracy correlation, and an optional attention-IoU summary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{pearson_corr, response_mentions_count, ModelResponse};
use crate::case::CaseCode;

/// What was evaluated, echoed into the report so runs are self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub dataset: String,
    pub responses: String,
    pub attn: Option<String>,
    pub k_percent: f64,
    pub cases: Vec<String>,
}

/// Ground truth for one sample, keyed by sample id in [`build_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleTruth {
    pub case_code: CaseCode,
    pub count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseAccuracy {
    pub n: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttnIouSummary {
    pub n: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ReportConfig,
    pub notes: Vec<String>,
    pub n_samples: usize,
    pub n_responses: usize,
    /// Response sample ids with no ground truth, sorted and deduplicated.
    pub unmatched: Vec<String>,
    pub overall_accuracy: Option<f64>,
    pub per_case: BTreeMap<String, CaseAccuracy>,
    pub per_count: BTreeMap<u32, f64>,
    /// Pearson r between ground-truth count and per-count accuracy.
    pub count_accuracy_pearson: Option<f64>,
    pub attn_iou: Option<AttnIouSummary>,
}

/// Scores `responses` against `truth`. Responses without ground truth are
/// reported, not scored; degenerate correlations become a note instead of an
/// error.
pub fn build_report(
    config: ReportConfig,
    truth: &BTreeMap<String, SampleTruth>,
    responses: &[ModelResponse],
    attn_ious: Option<&[f64]>,
) -> EvalReport {
    let mut notes = Vec::new();

    let mut unmatched: Vec<String> = responses
        .iter()
        .filter(|r| !truth.contains_key(&r.sample_id))
        .map(|r| r.sample_id.clone())
        .collect();
    unmatched.sort();
    unmatched.dedup();
    if !unmatched.is_empty() {
        notes.push(format!(
            "{} response(s) reference unknown samples and were not scored",
            unmatched.len()
        ));
    }

    let matched: Vec<(&ModelResponse, &SampleTruth)> = responses
        .iter()
        .filter_map(|r| truth.get(&r.sample_id).map(|t| (r, t)))
        .collect();

    let mut hits_total = 0usize;
    let mut per_case: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut per_count: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for (r, t) in &matched {
        let hit = response_mentions_count(&r.raw_text, t.count) as usize;
        hits_total += hit;
        let case = per_case.entry(t.case_code.to_string()).or_default();
        case.0 += hit;
        case.1 += 1;
        let count = per_count.entry(t.count).or_default();
        count.0 += hit;
        count.1 += 1;
    }

    let overall_accuracy =
        (!matched.is_empty()).then(|| hits_total as f64 / matched.len() as f64);
    let per_case: BTreeMap<String, CaseAccuracy> = per_case
        .into_iter()
        .map(|(case, (h, n))| (case, CaseAccuracy { n, accuracy: h as f64 / n as f64 }))
        .collect();
    let per_count: BTreeMap<u32, f64> = per_count
        .into_iter()
        .map(|(count, (h, n))| (count, h as f64 / n as f64))
        .collect();

    let xs: Vec<f64> = per_count.keys().map(|&c| c as f64).collect();
    let ys: Vec<f64> = per_count.values().copied().collect();
    let count_accuracy_pearson = match pearson_corr(&xs, &ys) {
        Ok(r) => Some(r),
        Err(e) => {
            if !matched.is_empty() {
                notes.push(format!("count/accuracy correlation omitted: {e}"));
            }
            None
        }
    };

    let attn_iou = attn_ious.and_then(|ious| {
        (!ious.is_empty()).then(|| AttnIouSummary {
            n: ious.len(),
            mean: ious.iter().sum::<f64>() / ious.len() as f64,
        })
    });

    EvalReport {
        config,
        notes,
        n_samples: truth.len(),
        n_responses: responses.len(),
        unmatched,
        overall_accuracy,
        per_case,
        per_count,
        count_accuracy_pearson,
        attn_iou,
    }
}
