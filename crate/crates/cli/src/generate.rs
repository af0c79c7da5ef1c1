//! Dataset generation.
//!
//! Layout under `--out`:
//!
//! ```text
//! out/
//!   index.jsonl              one line per written sample
//!   prompts.jsonl            standard (and optional conflict) prompts
//!   <case>/<id>/image.png
//!   <case>/<id>/manifest.json
//! ```
//!
//! Counts cycle evenly over the legal range, so `--n 10` hits every count
//! exactly once per case. Sample seeds derive from the base seed, the case's
//! fixed position in the taxonomy, and the in-case index; a case therefore
//! generates the same bytes whether it runs alone or as part of `all`.

use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use counting_tricks::case::CaseCode;
use counting_tricks::grid::PatchGrid;
use counting_tricks::prompt::{conflict_prompt, standard_prompt, PromptInstance, PromptVariant};
use counting_tricks::raster::{render, write_index, write_sample, IndexEntry};
use counting_tricks::scene::{sample_scene, SceneError, COUNT_MAX, COUNT_MIN};
use serde::{Deserialize, Serialize};

use crate::{CliError, EXIT_PARTIAL};

/// Object word used in every prompt. The mixed-shape families make anything
/// more specific wrong, so it is a constant rather than a flag.
pub const OBJECT_NAME: &str = "shapes";

/// Seed stride between cases; a prime far above any per-case index keeps
/// the per-case seed streams disjoint.
const CASE_SEED_STRIDE: u64 = 1_000_003;

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output dataset directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated case codes, or "all".
    #[arg(long, default_value = "all", value_delimiter = ',')]
    pub cases: Vec<String>,
    /// Samples per case.
    #[arg(long, default_value_t = 100)]
    pub n: u32,
    /// Base seed for the whole run.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 448)]
    pub image_size: u32,
    #[arg(long, default_value_t = 28)]
    pub patch_size: u32,
    /// Also emit a conflict prompt per sample for each delta (from -2,-1,1,2).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub conflict_deltas: Vec<i32>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SkippedSample {
    pub case: String,
    pub count: u32,
    pub seed: u64,
}

/// Printed to stdout as JSON when generation finishes.
#[derive(Debug, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub cases: usize,
    pub requested: u64,
    pub written: u64,
    pub skipped: Vec<SkippedSample>,
}

/// Expands `--cases` values into codes, deduplicated, order preserved.
pub fn resolve_cases(specs: &[String]) -> Result<Vec<CaseCode>, CliError> {
    let mut out: Vec<CaseCode> = Vec::new();
    for spec in specs {
        if spec == "all" {
            for case in CaseCode::all() {
                if !out.contains(&case) {
                    out.push(case);
                }
            }
            continue;
        }
        let case: CaseCode =
            spec.parse().map_err(|e| CliError::Invalid(format!("--cases: {e}")))?;
        if !out.contains(&case) {
            out.push(case);
        }
    }
    if out.is_empty() {
        return Err(CliError::Invalid("--cases resolved to an empty list".into()));
    }
    Ok(out)
}

pub fn run(args: &GenerateArgs) -> Result<i32, CliError> {
    let cases = resolve_cases(&args.cases)?;
    if args.n == 0 {
        return Err(CliError::Invalid("--n must be at least 1".into()));
    }
    let grid = PatchGrid::new(args.image_size, args.patch_size)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    for &delta in &args.conflict_deltas {
        if !matches!(delta, -2 | -1 | 1 | 2) {
            return Err(CliError::Invalid(format!(
                "--conflict-deltas: {delta} is not one of -2, -1, 1, 2"
            )));
        }
    }

    // Everything above ran before the first write.
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("create {}", args.out.display()))?;

    let taxonomy = CaseCode::all();
    let span = (COUNT_MAX - COUNT_MIN + 1) as u64;
    let mut index = Vec::new();
    let mut prompts = Vec::new();
    let mut skipped = Vec::new();
    let mut written = 0u64;

    for &case in &cases {
        let case_index =
            taxonomy.iter().position(|&c| c == case).expect("parsed codes are in the taxonomy");
        let case_dir = args.out.join(case.to_string());
        for i in 0..args.n as u64 {
            let count = COUNT_MIN + (i % span) as u32;
            let seed = args
                .seed
                .wrapping_add((case_index as u64).wrapping_mul(CASE_SEED_STRIDE))
                .wrapping_add(i);
            let scene = match sample_scene(case, count, &grid, seed) {
                Ok(scene) => scene,
                Err(SceneError::Placement(e)) => {
                    eprintln!("skip: {e} (seed {seed})");
                    skipped.push(SkippedSample { case: case.to_string(), count, seed });
                    continue;
                }
                Err(e) => {
                    return Err(CliError::Runtime(anyhow::anyhow!(
                        "{case} n={count} seed={seed}: {e}"
                    )))
                }
            };
            let sample = render(&scene);
            let id = sample.manifest.id.clone();
            write_sample(&case_dir, &sample).map_err(anyhow::Error::new)?;
            index.push(IndexEntry {
                manifest: format!("{case}/{id}/manifest.json"),
                case_code: case,
                count,
            });
            prompts.push(PromptInstance {
                sample_id: id.clone(),
                variant: PromptVariant::Standard,
                object_name: OBJECT_NAME.to_string(),
                false_count: None,
                text: standard_prompt(OBJECT_NAME),
            });
            for &delta in &args.conflict_deltas {
                // Deltas were validated and counts start at 3, so the claimed
                // count is always at least 1.
                let (text, false_count) =
                    conflict_prompt(OBJECT_NAME, count, delta).map_err(anyhow::Error::new)?;
                prompts.push(PromptInstance {
                    sample_id: id.clone(),
                    variant: PromptVariant::Conflict,
                    object_name: OBJECT_NAME.to_string(),
                    false_count: Some(false_count),
                    text,
                });
            }
            written += 1;
        }
    }

    write_index(&args.out.join("index.jsonl"), &index).map_err(anyhow::Error::new)?;
    let mut lines = String::new();
    for prompt in &prompts {
        lines.push_str(&serde_json::to_string(prompt).expect("prompts always serialize"));
        lines.push('\n');
    }
    let prompts_path = args.out.join("prompts.jsonl");
    std::fs::write(&prompts_path, lines)
        .with_context(|| format!("write {}", prompts_path.display()))?;

    let summary = GenerateSummary {
        cases: cases.len(),
        requested: cases.len() as u64 * args.n as u64,
        written,
        skipped,
    };
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary always serializes"));
    Ok(if summary.skipped.is_empty() { 0 } else { EXIT_PARTIAL })
}
