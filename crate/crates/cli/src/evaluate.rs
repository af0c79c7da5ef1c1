//! Response scoring against a generated dataset.
//!
//! Inputs: the dataset's `index.jsonl`, a responses JSONL (one
//! `{"sample_id", "variant", "raw_text"}` object per line), and optionally a
//! JSONL of back-projected attention grids
//! (`{"sample_id", "values": [dim*dim floats]}`, row-major). The full report
//! prints to stdout as JSON; nothing is written to disk.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use counting_tricks::case::CaseCode;
use counting_tricks::grid::PatchGrid;
use counting_tricks::metrics::{
    attn_iou, build_report, EvalReport, ModelResponse, ReportConfig, SampleTruth,
};
use counting_tricks::raster::{rle_decode, Manifest, Mask};
use serde::Deserialize;

use crate::{CliError, EXIT_PARTIAL};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset directory produced by `generate`.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Model responses, one JSON object per line.
    #[arg(long)]
    pub responses: PathBuf,
    /// Back-projected attention grids, one JSON object per line.
    #[arg(long)]
    pub attn: Option<PathBuf>,
    /// Top-k percentage for attention binarization.
    #[arg(long, default_value_t = 10.0)]
    pub k_percent: f64,
    /// Restrict scoring to these case codes (default: all in the index).
    #[arg(long, value_delimiter = ',')]
    pub cases: Vec<String>,
}

/// One line of the attention-grids file.
#[derive(Debug, Deserialize)]
struct AttnLine {
    sample_id: String,
    values: Vec<f64>,
}

pub fn run(args: &EvaluateArgs) -> Result<i32, CliError> {
    let report = evaluate(args)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("reports always serialize"));
    Ok(if report.unmatched.is_empty() { 0 } else { EXIT_PARTIAL })
}

/// The whole evaluation, minus printing; tests inspect the report directly.
pub fn evaluate(args: &EvaluateArgs) -> Result<EvalReport, CliError> {
    if !(0.0..=100.0).contains(&args.k_percent) {
        return Err(CliError::Invalid(format!(
            "--k-percent must be in [0, 100], got {}",
            args.k_percent
        )));
    }
    let filter: Option<Vec<CaseCode>> = if args.cases.is_empty() {
        None
    } else {
        Some(
            args.cases
                .iter()
                .map(|s| s.parse().map_err(|e| CliError::Invalid(format!("--cases: {e}"))))
                .collect::<Result<_, _>>()?,
        )
    };

    let index_path = args.dataset.join("index.jsonl");
    let entries = counting_tricks::raster::read_index(&index_path)
        .map_err(|e| CliError::Invalid(format!("--dataset: {e}")))?;

    let mut truth = BTreeMap::new();
    let mut manifests = BTreeMap::new();
    for entry in &entries {
        if filter.as_ref().is_some_and(|f| !f.contains(&entry.case_code)) {
            continue;
        }
        let id = Path::new(&entry.manifest)
            .parent()
            .and_then(|d| d.file_name())
            .and_then(|n| n.to_str())
            .ok_or_else(|| {
                CliError::Invalid(format!("index entry has no sample directory: {}", entry.manifest))
            })?;
        truth.insert(
            id.to_string(),
            SampleTruth { case_code: entry.case_code, count: entry.count },
        );
        manifests.insert(id.to_string(), args.dataset.join(&entry.manifest));
    }

    let responses = read_responses(&args.responses)?;
    let attn_ious = match &args.attn {
        Some(path) => Some(attention_ious(path, &manifests, args.k_percent)?),
        None => None,
    };

    let config = ReportConfig {
        dataset: args.dataset.display().to_string(),
        responses: args.responses.display().to_string(),
        attn: args.attn.as_ref().map(|p| p.display().to_string()),
        k_percent: args.k_percent,
        cases: args.cases.clone(),
    };
    Ok(build_report(config, &truth, &responses, attn_ious.as_deref()))
}

fn read_responses(path: &Path) -> Result<Vec<ModelResponse>, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("--responses {}: {e}", path.display())))?;
    raw.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| {
                CliError::Invalid(format!("--responses {} line {}: {e}", path.display(), i + 1))
            })
        })
        .collect()
}

/// Scores each attention grid against the union of the sample's object
/// masks. Grids whose sample is not in the (filtered) index are skipped with
/// a warning; a malformed file is invalid input.
fn attention_ious(
    path: &Path,
    manifests: &BTreeMap<String, PathBuf>,
    k_percent: f64,
) -> Result<Vec<f64>, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("--attn {}: {e}", path.display())))?;
    let mut ious = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: AttnLine = serde_json::from_str(line).map_err(|e| {
            CliError::Invalid(format!("--attn {} line {}: {e}", path.display(), i + 1))
        })?;
        let Some(manifest_path) = manifests.get(&parsed.sample_id) else {
            eprintln!("attn: sample {} not in the dataset index, skipped", parsed.sample_id);
            continue;
        };
        let manifest: Manifest = serde_json::from_str(
            &std::fs::read_to_string(manifest_path)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", manifest_path.display())))?,
        )
        .map_err(|e| CliError::Invalid(format!("{}: {e}", manifest_path.display())))?;

        let grid = PatchGrid::new(manifest.image_size, manifest.patch_size)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", manifest_path.display())))?;
        let side = manifest.image_size;
        let mut union = vec![false; (side * side) as usize];
        for rle in &manifest.masks_rle {
            let bits = rle_decode(rle, side, side)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", manifest_path.display())))?;
            for (u, b) in union.iter_mut().zip(bits) {
                *u |= b;
            }
        }
        let mask = Mask::from_bits(side, side, union);
        let iou = attn_iou(&parsed.values, &grid, k_percent, &mask)
            .map_err(|e| CliError::Invalid(format!("attn sample {}: {e}", parsed.sample_id)))?;
        ious.push(iou);
    }
    Ok(ious)
}
