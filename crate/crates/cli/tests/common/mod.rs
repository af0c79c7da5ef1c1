//! Helpers shared by the integration suites; each test binary uses a subset.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use counting_tricks::raster::{read_index, Manifest};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_counting-tricks"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should spawn")
}

pub fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary should spawn")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("binary should exit, not die on a signal")
}

pub fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout should be utf-8")
}

pub fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr should be utf-8")
}

/// (sample id, true count) pairs pulled from the dataset's manifests.
pub fn dataset_truth(root: &Path) -> Vec<(String, u32)> {
    read_index(&root.join("index.jsonl"))
        .expect("index should parse")
        .iter()
        .map(|entry| {
            let raw = fs::read_to_string(root.join(&entry.manifest)).unwrap();
            let manifest: Manifest = serde_json::from_str(&raw).unwrap();
            (manifest.id, manifest.count)
        })
        .collect()
}

pub fn write_responses(path: &Path, lines: &[(String, String)]) {
    let mut out = String::new();
    for (id, text) in lines {
        out.push_str(
            &serde_json::json!({
                "sample_id": id,
                "variant": "standard",
                "raw_text": text,
            })
            .to_string(),
        );
        out.push('\n');
    }
    fs::write(path, out).unwrap();
}

/// Relative path plus content digest for every file under `root`, sorted.
pub fn tree_digest(root: &Path) -> Vec<(PathBuf, String)> {
    use sha2::{Digest, Sha256};
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, String)>) {
        let mut entries: Vec<_> =
            fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let digest = Sha256::digest(fs::read(&path).unwrap());
                let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
                out.push((path.strip_prefix(root).unwrap().to_path_buf(), hex));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out
}
