use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use qnoise::netlist::parse_netlist;

fn qnoise() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qnoise"))
}

fn docs() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs");
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "qn"))
        .collect();
    files.sort();
    files
}

#[test]
fn docs_examples_parse_and_run_quickly() {
    let files = docs();
    assert!(files.len() >= 3);
    for file in files {
        parse_netlist(&std::fs::read_to_string(&file).unwrap()).unwrap();
        let out = tempfile::tempdir().unwrap();
        let start = Instant::now();
        let status = qnoise()
            .arg("run")
            .arg(&file)
            .arg("--out")
            .arg(out.path())
            .output()
            .unwrap();
        assert!(status.status.success(), "{}: {:?}", file.display(), status);
        assert!(
            start.elapsed() < Duration::from_secs(5),
            "{}",
            file.display()
        );
        assert!(out.path().join("spectra.csv").exists());
        assert!(out.path().join("budget.csv").exists());
    }
}

fn write(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("net.qn");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "line x R=-3 T=0\n");
    let o = qnoise().arg("run").arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1:10"));

    let model = write(
        dir.path(),
        "line a R=50 T=0\nline b R=50 T=0\nsweep 1 1 1 lin\nmeasure a as e signal=b\n",
    );
    let o = qnoise()
        .arg("run")
        .arg(&model)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));

    let o = qnoise()
        .arg("run")
        .arg(dir.path().join("missing.qn"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(
        dir.path(),
        "preset muscope\nsweep 0.5m 0.5m 1 lin\nmeasure readout as force signal=force\n",
    );
    let o = qnoise()
        .args(["run"])
        .arg(&net)
        .arg("--out")
        .arg(dir.path())
        .args(["--json", "--set", "M=0.54", "--set", "loop_gain=inf"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{o:?}");
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("budget.json")).unwrap())
            .unwrap();
    let total = rows
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["source"] == "total")
        .unwrap();
    let asd = total["acceleration_asd"].as_f64().unwrap();
    assert!((asd / 0.614e-12 - 1.0).abs() < 0.01, "{asd}");

    let o = qnoise()
        .arg("run")
        .arg(&net)
        .args(["--set", "nope=1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
