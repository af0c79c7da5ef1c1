//! Drives the installed binary end to end: dataset layout, scoring
//! fixtures, demo outputs, and the exit-code contract.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use common::{code, dataset_truth, run, stderr_str, stdout_str, tree_digest, write_responses};
use counting_tricks::case::CaseCode;
use counting_tricks::metrics::EvalReport;
use counting_tricks::prompt::PromptInstance;
use counting_tricks::raster::{read_index, rle_decode, Manifest, Mask};
use counting_tricks::toy::read_trajectory;
use counting_tricks::PatchGrid;
use counting_tricks_cli::demo::DemoSummary;

#[test]
fn generate_writes_one_sample_per_count() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("data");
    let out = run(&[
        "generate", "--out", out_dir.to_str().unwrap(),
        "--cases", "1A", "--n", "10", "--seed", "7",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));

    let index = read_index(&out_dir.join("index.jsonl")).unwrap();
    let mut counts: Vec<u32> = index.iter().map(|e| e.count).collect();
    counts.sort_unstable();
    assert_eq!(counts, (3..=12).collect::<Vec<u32>>());

    for entry in &index {
        let manifest_path = out_dir.join(&entry.manifest);
        assert!(manifest_path.is_file(), "missing {}", entry.manifest);
        assert!(manifest_path.with_file_name("image.png").is_file());
    }
}

#[test]
fn generate_covers_the_whole_taxonomy() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("data");
    let out = run(&[
        "generate", "--out", out_dir.to_str().unwrap(), "--cases", "all", "--n", "1",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));

    let case_dirs: BTreeSet<String> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_dir())
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    let expected: BTreeSet<String> =
        CaseCode::all().iter().map(|c| c.to_string()).collect();
    assert_eq!(case_dirs, expected);
    assert_eq!(case_dirs.len(), 32);

    let index = read_index(&out_dir.join("index.jsonl")).unwrap();
    assert_eq!(index.len(), 32);
    let prompts = fs::read_to_string(out_dir.join("prompts.jsonl")).unwrap();
    assert_eq!(prompts.lines().count(), 32);
}

#[test]
fn generate_emits_conflict_prompts_when_asked() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("data");
    let out = run(&[
        "generate", "--out", out_dir.to_str().unwrap(),
        "--cases", "1A", "--n", "4", "--conflict-deltas", "-1,2",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));

    let prompts: Vec<PromptInstance> = fs::read_to_string(out_dir.join("prompts.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    // One standard prompt plus one conflict prompt per requested delta.
    assert_eq!(prompts.len(), 4 * 3);
    let conflicts =
        prompts.iter().filter(|p| p.false_count.is_some()).count();
    assert_eq!(conflicts, 4 * 2);
    for p in &prompts {
        if let Some(false_count) = p.false_count {
            assert!(p.text.contains(&format!("I can see {false_count} ")));
        }
        assert!(p.text.contains("How many shapes"));
    }
}

#[test]
fn generate_rejects_bad_input_before_writing() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["--cases", "1A,99Z"],
        vec!["--cases", "1C"],
        vec!["--n", "0"],
        vec!["--conflict-deltas", "3"],
        vec!["--conflict-deltas", "0"],
    ] {
        let out_dir = tmp.path().join("data");
        let mut full = vec!["generate", "--out", out_dir.to_str().unwrap()];
        full.extend(args.iter());
        let out = run(&full);
        assert_eq!(code(&out), 3, "args {args:?} stderr: {}", stderr_str(&out));
        assert!(!out_dir.exists(), "args {args:?} wrote into --out");
    }
}

#[test]
fn evaluate_scores_perfect_and_wrong_answer_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("data");
    let out = run(&[
        "generate", "--out", out_dir.to_str().unwrap(), "--cases", "1A", "--n", "10",
    ]);
    assert_eq!(code(&out), 0);
    let truth = dataset_truth(&out_dir);

    let perfect = tmp.path().join("perfect.jsonl");
    let lines: Vec<(String, String)> = truth
        .iter()
        .map(|(id, count)| (id.clone(), format!("shapes: {count}")))
        .collect();
    write_responses(&perfect, &lines);
    let out = run(&[
        "evaluate", "--dataset", out_dir.to_str().unwrap(),
        "--responses", perfect.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    let report: EvalReport = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(report.overall_accuracy, Some(1.0));
    assert_eq!(report.n_samples, 10);
    assert!(report.unmatched.is_empty());

    let wrong = tmp.path().join("wrong.jsonl");
    let lines: Vec<(String, String)> = truth
        .iter()
        .map(|(id, count)| (id.clone(), format!("shapes: {}", count + 1)))
        .collect();
    write_responses(&wrong, &lines);
    let out = run(&[
        "evaluate", "--dataset", out_dir.to_str().unwrap(),
        "--responses", wrong.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let report: EvalReport = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(report.overall_accuracy, Some(0.0));
}

#[test]
fn evaluate_reports_unmatched_responses_with_a_partial_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("data");
    run(&["generate", "--out", out_dir.to_str().unwrap(), "--cases", "1A", "--n", "3"]);
    let truth = dataset_truth(&out_dir);

    let responses = tmp.path().join("responses.jsonl");
    let mut lines: Vec<(String, String)> = truth
        .iter()
        .map(|(id, count)| (id.clone(), format!("shapes: {count}")))
        .collect();
    lines.push(("1A-deadbeefdeadbeef".into(), "shapes: 4".into()));
    write_responses(&responses, &lines);

    let out = run(&[
        "evaluate", "--dataset", out_dir.to_str().unwrap(),
        "--responses", responses.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr_str(&out));
    let report: EvalReport = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(report.unmatched, vec!["1A-deadbeefdeadbeef".to_string()]);
    // The matched answers still score.
    assert_eq!(report.overall_accuracy, Some(1.0));
}

#[test]
fn evaluate_scores_attention_grids_against_manifest_masks() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("data");
    run(&["generate", "--out", out_dir.to_str().unwrap(), "--cases", "1A", "--n", "3"]);
    let index = read_index(&out_dir.join("index.jsonl")).unwrap();
    let grid = PatchGrid::default();
    let dim = grid.dim() as u32;

    // One grid per sample marking exactly the patches that touch the mask
    // union, plus one grid for an id the dataset does not contain. A single
    // --k-percent wide enough to take every marked patch applies to all
    // three, so each selection covers its mask and every IoU is positive.
    let k_percent = 25.0;
    let mut attn_lines = Vec::new();
    let mut expected = Vec::new();
    let mut responses = Vec::new();
    for entry in &index {
        let raw = fs::read_to_string(out_dir.join(&entry.manifest)).unwrap();
        let manifest: Manifest = serde_json::from_str(&raw).unwrap();
        let size = manifest.image_size;
        let mut union = vec![false; (size * size) as usize];
        for rle in &manifest.masks_rle {
            for (dst, src) in union.iter_mut().zip(rle_decode(rle, size, size).unwrap()) {
                *dst |= src;
            }
        }
        let mask = Mask::from_bits(size, size, union);
        let mut values = vec![0.0f64; (dim * dim) as usize];
        for y in 0..size {
            for x in 0..size {
                if mask.get(x, y) {
                    let patch = (y / grid.patch_size()) * dim + x / grid.patch_size();
                    values[patch as usize] = 1.0;
                }
            }
        }
        let hot = values.iter().filter(|&&v| v > 0.0).count();
        assert!(hot * 4 <= values.len(), "fixture marks more than a quarter");
        let iou =
            counting_tricks::metrics::attn_iou(&values, &grid, k_percent, &mask).unwrap();
        expected.push(iou);
        attn_lines.push(
            serde_json::json!({ "sample_id": manifest.id, "values": values }).to_string(),
        );
        responses.push((manifest.id.clone(), format!("shapes: {}", manifest.count)));
    }
    attn_lines.push(
        serde_json::json!({ "sample_id": "1A-0000", "values": vec![0.0; 256] }).to_string(),
    );

    let mean: f64 = expected.iter().sum::<f64>() / expected.len() as f64;
    assert!(mean > 0.0 && mean <= 1.0);

    let attn_path = tmp.path().join("attn.jsonl");
    fs::write(&attn_path, attn_lines.join("\n") + "\n").unwrap();
    let responses_path = tmp.path().join("responses.jsonl");
    write_responses(&responses_path, &responses);

    let out = run(&[
        "evaluate", "--dataset", out_dir.to_str().unwrap(),
        "--responses", responses_path.to_str().unwrap(),
        "--attn", attn_path.to_str().unwrap(),
        "--k-percent", &k_percent.to_string(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    assert!(stderr_str(&out).contains("not in the dataset index"));
    let report: EvalReport = serde_json::from_str(&stdout_str(&out)).unwrap();
    let summary = report.attn_iou.expect("attention summary should be present");
    assert_eq!(summary.n, 3);
    assert!((summary.mean - mean).abs() < 1e-15);
}

#[test]
fn evaluate_rejects_malformed_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("data");
    run(&["generate", "--out", out_dir.to_str().unwrap(), "--cases", "1A", "--n", "1"]);

    let bad = tmp.path().join("bad.jsonl");
    fs::write(&bad, "{\"sample_id\": \"x\"\n").unwrap();
    let out = run(&[
        "evaluate", "--dataset", out_dir.to_str().unwrap(),
        "--responses", bad.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr_str(&out).contains("line 1"));

    let ok = tmp.path().join("ok.jsonl");
    write_responses(&ok, &[("x".into(), "shapes: 3".into())]);
    for k in ["-0.5", "100.5", "nan"] {
        let out = run(&[
            "evaluate", "--dataset", out_dir.to_str().unwrap(),
            "--responses", ok.to_str().unwrap(), "--k-percent", k,
        ]);
        assert_eq!(code(&out), 3, "k-percent {k} should be invalid");
    }

    let out = run(&[
        "evaluate", "--dataset", tmp.path().join("nope").to_str().unwrap(),
        "--responses", ok.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn mas_demo_with_inactive_hinge_matches_the_baseline_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("demo");
    // tau 0 keeps the hinge at zero no matter the share, so both runs see
    // identical losses and gradients.
    let out = run(&[
        "mas-demo", "--out", out_dir.to_str().unwrap(),
        "--tau", "0", "--epochs", "2", "--n", "10",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));

    let base = fs::read(out_dir.join("trajectory_baseline.jsonl")).unwrap();
    let reg = fs::read(out_dir.join("trajectory_mas.jsonl")).unwrap();
    assert_eq!(base, reg);

    let summary: DemoSummary =
        serde_json::from_str(&fs::read_to_string(out_dir.join("mas_demo_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary.mas_uplift, 0.0);
    assert_eq!(summary.ce_relative_change, 0.0);
    assert_eq!(summary.baseline.holdout_l_mas, 0.0);
}

#[test]
fn mas_demo_with_zero_epochs_records_only_the_initial_state() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("demo");
    let out = run(&[
        "mas-demo", "--out", out_dir.to_str().unwrap(), "--epochs", "0", "--n", "6",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));

    for name in ["trajectory_baseline.jsonl", "trajectory_mas.jsonl"] {
        let points = read_trajectory(&out_dir.join(name)).unwrap();
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].epoch, 0);
    }
    for name in
        ["model_baseline.json", "model_baseline.bin", "model_mas.json", "model_mas.bin"]
    {
        assert!(out_dir.join(name).is_file(), "missing {name}");
    }
}

#[test]
fn mas_demo_rejects_bad_hyperparameters() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("demo");
    for args in [
        vec!["--n", "1"],
        vec!["--tau", "1.5"],
        vec!["--lambda", "-0.1"],
    ] {
        let mut full = vec!["mas-demo", "--out", out_dir.to_str().unwrap()];
        full.extend(args.iter());
        let out = run(&full);
        assert_eq!(code(&out), 3, "args {args:?} stderr: {}", stderr_str(&out));
        assert!(!out_dir.exists(), "args {args:?} wrote into --out");
    }
}

#[test]
fn probe_params_prints_the_capacity_table() {
    let out = run(&["probe-params"]);
    assert_eq!(code(&out), 0);
    let text = stdout_str(&out);
    assert!(text.contains("1707013"), "default 1024 row missing:\n{text}");
    assert!(text.contains("2231301"), "default 2048 row missing:\n{text}");

    let out = run(&["probe-params", "--c-in", "512"]);
    assert_eq!(code(&out), 0);
    // 512*512 + 512 + 1024 bottleneck params on top of the shared head.
    assert!(stdout_str(&out).contains("1444869"));

    let out = run(&["probe-params", "--c-in", "1024,0"]);
    assert_eq!(code(&out), 3);
    assert!(stdout_str(&out).is_empty(), "invalid input should print no rows");
}

#[test]
fn generate_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out_dir: &Path| {
        vec![
            "generate".to_string(),
            "--out".into(), out_dir.to_str().unwrap().into(),
            "--cases".into(), "2D,9B".into(),
            "--n".into(), "4".into(),
            "--seed".into(), "11".into(),
            "--conflict-deltas".into(), "1".into(),
        ]
    };
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    for out_dir in [&first, &second] {
        let argv = args(out_dir);
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        assert_eq!(code(&run(&argv)), 0);
    }
    assert_eq!(tree_digest(&first), tree_digest(&second));
}

#[test]
fn argument_errors_and_help_use_the_contract_exit_codes() {
    let out = run(&["no-such-command"]);
    assert_eq!(code(&out), 3);

    let out = run(&["generate", "--out", "/tmp/x", "--no-such-flag"]);
    assert_eq!(code(&out), 3);

    let out = run(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = stdout_str(&out);
    for sub in ["generate", "evaluate", "mas-demo", "probe-params"] {
        assert!(text.contains(sub), "help should list {sub}");
    }
}
