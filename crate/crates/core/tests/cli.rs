use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

const TINY: &str = r#"
name = "tiny"
tasks = ["rgb", "grayscale", "depth"]

[paths]
data = "data"
runs = "runs"

[dataset]
n_samples = 4
n_parts = 2
val_frac = 0.2
test_frac = 0.2

[dataset.scene]
height = 16
width = 16
n_shapes = 3
class_count = 4

[iteration]
n_iters = 2
probe_samples = 1

[iteration.train]
epochs = 2
batch = 2
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cshift"))
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

fn files_under(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn gen(dir: &Path, cfg: &Path, out: &str) {
    let st = bin()
        .args(["gen-dataset", "--config"])
        .arg(cfg)
        .arg("--out")
        .arg(dir.join(out))
        .status()
        .unwrap();
    assert!(st.success());
}

#[test]
fn gen_dataset_layout_and_idempotence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TINY);
    gen(tmp.path(), &cfg, "a");
    gen(tmp.path(), &cfg, "b");
    let a = files_under(&tmp.path().join("a"));
    let b = files_under(&tmp.path().join("b"));
    assert_eq!(a, b);
    let csmaps: Vec<&PathBuf> = a.iter().map(|f| &f.0).filter(|p| p.extension().is_some_and(|e| e == "csmap")).collect();
    assert_eq!(csmaps.len(), 4 * 3);
    let mut samples: Vec<PathBuf> = csmaps.iter().map(|p| p.parent().unwrap().to_path_buf()).collect();
    samples.dedup();
    assert_eq!(samples.len(), 4);
}

#[test]
fn unknown_key_exits_2_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{TINY}\n[experts]\nmystery_knob = 3\n"));
    let out = bin()
        .args(["gen-dataset", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mystery_knob"));
}

#[test]
fn missing_dataset_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TINY);
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_flag_exits_2() {
    let out = bin().args(["run", "--metric", "lpips", "--config", "x.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_outputs_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TINY);
    gen(tmp.path(), &cfg, "data");

    let st = bin().args(["run", "--iters", "0", "--config"]).arg(&cfg).status().unwrap();
    assert!(st.success());
    let metrics = fs::read_to_string(tmp.path().join("runs/tiny/metrics.csv")).unwrap();
    assert!(metrics.lines().skip(1).all(|l| l.contains(",expert,")));
    assert_eq!(metrics.lines().count(), 1 + 3);

    let run = |workers: &str, name: &str| {
        let st = bin()
            .args(["run", "--workers", workers, "--config"])
            .arg(&cfg)
            .status()
            .unwrap();
        assert!(st.success());
        let dest = tmp.path().join(name);
        fs::rename(tmp.path().join("runs/tiny"), &dest).unwrap();
        files_under(&dest)
    };
    let a = run("1", "w1");
    let b = run("4", "w4");
    assert_eq!(a, b);
    let names: Vec<String> = a.iter().map(|f| f.0.display().to_string()).collect();
    for expected in [
        "metrics.csv",
        "iter1/metrics.csv",
        "iter2/edges/rgb__depth.csprm",
        "iter1/edge_metrics.csv",
        "edge_improvement.csv",
        "variance.csv",
    ] {
        assert!(names.iter().any(|n| n == expected), "missing {expected}");
    }
    let labels = names.iter().filter(|n| n.starts_with("iter2/labels/") && n.ends_with(".csmap")).count();
    // two training samples plus one test sample, three tasks each
    assert_eq!(labels, 3 * 3);
    let metrics = String::from_utf8(a.iter().find(|f| f.0 == Path::new("metrics.csv")).unwrap().1.clone()).unwrap();
    // expert rows at iteration 0, then 5 rows per non-rgb task and 4 for rgb
    assert_eq!(metrics.lines().count(), 1 + 3 + 2 * (5 + 5 + 4));
}

#[test]
fn metric_override_and_compare() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TINY);
    gen(tmp.path(), &cfg, "data");
    for m in ["l1", "perc"] {
        let st = bin()
            .args(["run", "--iters", "1", "--metric", m, "--config"])
            .arg(&cfg)
            .status()
            .unwrap();
        assert!(st.success());
    }
    let out = bin()
        .arg("compare")
        .arg(tmp.path().join("runs/tiny-l1"))
        .arg(tmp.path().join("runs/tiny-perc"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
}

#[test]
fn experiments_write_csv_and_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let text = TINY.replace("n_samples = 4", "n_samples = 12")
        + "\n[experiments.node_sweep]\ndest = \"depth\"\n[experiments.weak_expert]\ndest = \"depth\"\nstrengths = [0.1]\n[experiments.mmd]\nsamples = 3\n";
    let cfg = write_config(tmp.path(), &text);
    gen(tmp.path(), &cfg, "data");
    for exp in ["node-sweep", "weak-expert", "mmd", "ablation"] {
        let out = bin().args(["experiment", exp, "--config"]).arg(&cfg).output().unwrap();
        assert!(out.status.success(), "{exp}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let dir = tmp.path().join("runs/tiny/experiments");
    let sweep = fs::read_to_string(dir.join("node_sweep.csv")).unwrap();
    // two orderings × n = 2, 3
    assert_eq!(sweep.lines().count(), 1 + 2 * 2);
    assert_eq!(fs::read_to_string(dir.join("weak_expert.csv")).unwrap().lines().count(), 2);
    let mmd = fs::read_to_string(dir.join("mmd.csv")).unwrap();
    assert!(mmd.starts_with("domain_a,domain_b,representation,mmd2_x100\n"));
    assert_eq!(fs::read_to_string(dir.join("ablation.csv")).unwrap().lines().count(), 1 + 6 * 3);
    for svg in ["node_sweep.svg", "weak_expert.svg", "mmd.svg"] {
        assert!(fs::read_to_string(dir.join(svg)).unwrap().starts_with("<svg"));
    }
}
