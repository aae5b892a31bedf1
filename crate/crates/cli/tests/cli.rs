use std::fs;
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn isa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isa"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

// Two overlapping blobs from a fixed quasi-random sequence.
fn write_dataset(path: &Path, n: usize) {
    let mut text = String::from("a,b,c,label\n");
    for i in 0..n {
        let c = i % 2;
        let shift = if c == 0 { -0.7 } else { 0.7 };
        let v: Vec<String> = (1..=3)
            .map(|j| {
                let u = ((i * 7919 + j * 104_729) % 1000) as f64 / 1000.0;
                format!("{}", (u - 0.5) * 3.0 + shift)
            })
            .collect();
        text.push_str(&format!(
            "{},{}\n",
            v.join(","),
            if c == 0 { "no" } else { "yes" }
        ));
    }
    fs::write(path, text).unwrap();
}

fn write_config(dir: &Path, extra: &str) -> String {
    write_dataset(&dir.join("data.csv"), 80);
    let path = dir.join("config.json");
    fs::write(
        &path,
        format!(r#"{{"dataset": "data.csv", "target": "label", "output_dir": "out", "restarts": 2{extra}}}"#),
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_then_validate() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), "");
    let out = isa(&["run", "--config", &config]);
    assert!(out.status.success(), "{}", stderr(&out));
    let bundle = tmp.path().join("out");
    for name in [
        "manifest.json",
        "coordinates.csv",
        "metadata.csv",
        "raw_records.csv",
        "footprints.json",
        "model.json",
        "ranking.json",
    ] {
        assert!(bundle.join(name).is_file(), "{name} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(bundle.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["n_instances"], 80);

    let out = isa(&["validate", "--dir", bundle.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("80 instances"));

    fs::remove_file(bundle.join("ranking.json")).unwrap();
    let out = isa(&["validate", "--dir", bundle.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("ranking.json"), "{}", stderr(&out));
}

#[test]
fn bad_configs_fail() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), r#", "folds": 1"#);
    let out = isa(&["run", "--config", &config]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("folds"), "{}", stderr(&out));
    assert!(!tmp.path().join("out").exists());

    let config = write_config(tmp.path(), r#", "unknown_key": 3"#);
    let out = isa(&["run", "--config", &config]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("unknown_key"), "{}", stderr(&out));

    let out = isa(&[
        "run",
        "--config",
        tmp.path().join("absent.json").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
}

#[test]
fn serve_refuses_busy_port_and_missing_bundle() {
    let tmp = TempDir::new().unwrap();
    let out = isa(&[
        "serve",
        "--dir",
        tmp.path().join("nothing").to_str().unwrap(),
        "--port",
        "0",
    ]);
    assert!(!out.status.success());

    let config = write_config(tmp.path(), "");
    assert!(isa(&["run", "--config", &config]).status.success());
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let out = isa(&[
        "serve",
        "--dir",
        tmp.path().join("out").to_str().unwrap(),
        "--port",
        &port,
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains(&port), "{}", stderr(&out));
}
