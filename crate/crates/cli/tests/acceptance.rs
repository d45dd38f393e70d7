//! Acceptance criterion for the command-line front end: identical config
//! and seed produce byte-identical CSVs across repeated runs and across
//! thread counts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_acuq")
}

fn config_body(out_dir: &Path) -> String {
    format!(
        r#"{{
  "domain": {{"a": 0.0, "b": 3.141592653589793, "m": 40}},
  "field": {{"kind": "cosine_heterogeneous", "marginals": [
    {{"uniform": {{"lo": -1.0, "hi": 1.0}}}},
    {{"uniform": {{"lo": -1.5707963267948966, "hi": 1.5707963267948966}}}}
  ]}},
  "continuation": {{"ds": 0.05, "s_max": 1.0}},
  "w": 2,
  "branches": [1, 2],
  "samples": 2000,
  "seed": 123,
  "out_dir": "{}",
  "converge": {{"w_list": [1, 2], "w_ref": 3, "s_probe": 1.0, "n_mc": 1000}}
}}"#,
        out_dir.display()
    )
}

fn run_all(config: &Path, out: &Path, threads: Option<&str>) -> BTreeMap<String, Vec<u8>> {
    for subcommand in ["bifpoints", "branch", "converge"] {
        let mut cmd = Command::new(binary());
        cmd.args([subcommand, "--config", config.to_str().unwrap()])
            .args(["--out", out.to_str().unwrap()]);
        if let Some(k) = threads {
            cmd.args(["--threads", k]);
        }
        let result = cmd.output().expect("binary runs");
        assert!(
            result.status.success(),
            "{subcommand}: {}",
            String::from_utf8_lossy(&result.stderr)
        );
    }
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(out).unwrap() {
        let path = entry.unwrap().path();
        files.insert(
            path.file_name().unwrap().to_string_lossy().into_owned(),
            std::fs::read(&path).unwrap(),
        );
    }
    files
}

#[test]
fn acceptance_11_byte_identical_output() {
    let base = std::env::temp_dir().join(format!("acuq_acceptance_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&base);
    std::fs::create_dir_all(&base).unwrap();
    let config_path = base.join("cfg.json");
    std::fs::write(&config_path, config_body(&base.join("unused"))).unwrap();

    let mut runs: Vec<(String, BTreeMap<String, Vec<u8>>)> = Vec::new();
    for (tag, threads) in [
        ("run1", None),
        ("run2", None),
        ("t1", Some("1")),
        ("t2", Some("2")),
        ("t4", Some("4")),
    ] {
        let out: PathBuf = base.join(tag);
        runs.push((tag.to_string(), run_all(&config_path, &out, threads)));
    }

    let (first_tag, reference) = &runs[0];
    assert!(reference.len() >= 10, "expected the full set of CSVs");
    for (tag, files) in &runs[1..] {
        assert_eq!(
            files.keys().collect::<Vec<_>>(),
            reference.keys().collect::<Vec<_>>(),
            "{tag} produced different files than {first_tag}"
        );
        for (name, bytes) in files {
            assert_eq!(
                bytes, &reference[name],
                "{name} differs between {first_tag} and {tag}"
            );
        }
    }
    println!(
        "acceptance 11 determinism: PASS ({} files byte-identical across {} runs incl. --threads 1/2/4)",
        reference.len(),
        runs.len()
    );
}
