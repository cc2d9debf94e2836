use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gibbs-scan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gibbs-scan-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn certify_setting_two() {
    let o = bin(&[
        "--setting",
        "2",
        "certify",
        "--q-grid",
        "0.5",
        "--p-grid",
        "0.5",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# gibbs-scan "));
    assert!(text.contains("seed=0"));
    let rows = data_rows(&text);
    let lambda = |name: &str| -> f64 {
        rows.iter().find(|r| r[0] == name).unwrap()[2]
            .parse()
            .unwrap()
    };
    assert!((lambda("CGS") - 0.25).abs() < 1e-9);
    assert!((lambda("RQGS") - 0.375).abs() < 1e-9);
    assert!((lambda("RSGS") - 0.75).abs() < 1e-9);
    assert!(rows.iter().all(|r| r[7] == "true"));
}

#[test]
fn certify_default_grid_is_ordered() {
    let o = bin(&["--setting", "1", "certify"]);
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 1 + 5 + 10);
    assert!(rows.iter().all(|r| r[7] == "true"));
}

#[test]
fn certify_without_contraction_exits_two() {
    let o = bin(&["certify", "--j", "2", "--m", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no certificate: jm=2"));
}

#[test]
fn verify_rejects_tiny_mc_samples() {
    let o = bin(&[
        "--setting",
        "1",
        "verify-drift",
        "--mc-samples",
        "1",
        "--probes",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_setting_one_cgs_passes() {
    let o = bin(&[
        "--setting",
        "1",
        "verify-drift",
        "--strategy",
        "cgs",
        "--probes",
        "50",
        "--mc-samples",
        "10000",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("pass_fraction=1.00000"));
    assert_eq!(data_rows(&text).len(), 50);
}

#[test]
fn verify_rsgs_and_its_transfer_pass() {
    let o = bin(&[
        "--setting",
        "2",
        "verify-drift",
        "--strategy",
        "rsgs:0.1",
        "--transfer",
        "--probes",
        "20",
        "--mc-samples",
        "5000",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("target=\"CGS from RSGS p=0.10\""));
    assert!(data_rows(&text).iter().all(|r| r[7] == "true"));
}

#[test]
fn trace_reports_final_iterations() {
    let o = bin(&[
        "--setting",
        "1",
        "trace",
        "--strategy",
        "cgs",
        "--iterations",
        "100000",
        "--last-k",
        "1000",
    ]);
    assert!(o.status.success());
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 1000);
    assert_eq!(rows[0][2], "99001");
    assert_eq!(rows[999][2], "100000");
}

#[test]
fn trace_edge_cases() {
    let o = bin(&[
        "--setting",
        "1",
        "trace",
        "--strategy",
        "cgs",
        "--iterations",
        "50",
        "--last-k",
        "0",
    ]);
    assert!(o.status.success());
    assert!(data_rows(&stdout(&o)).is_empty());

    let o = bin(&[
        "--setting",
        "1",
        "trace",
        "--strategy",
        "cgs",
        "--iterations",
        "50",
        "--last-k",
        "51",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn table_with_one_replicate_has_na_ratios() {
    let o = bin(&[
        "--setting",
        "2",
        "table",
        "--iterations",
        "400",
        "--replicates",
        "1",
    ]);
    assert!(o.status.success());
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][0], "CGS");
    assert!(rows.iter().all(|r| r[6] == "NA" && r[7] == "NA"));
    // random-scan rows run twice as long
    assert!(rows
        .iter()
        .filter(|r| r[0] == "RSGS")
        .all(|r| r[2] == "800"));
}

#[test]
fn table_needs_normal_normal() {
    let dir = scratch("ri");
    let cfg = dir.join("ri.toml");
    std::fs::write(&cfg, "model = \"random_intercept\"\nsynthetic_seed = 1\n").unwrap();
    let o = bin(&["--config", cfg.to_str().unwrap(), "table"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_output_dir() {
    let dir = scratch("cfg");
    let cfg = dir.join("exp.toml");
    std::fs::write(
        &cfg,
        format!(
            "model = \"normal_normal\"\nN = 4\ntheta2 = 1.0\ntau2 = 0.5\nstrategies = [\"rqgs:0.25\"]\nn = 30\nseed = 8\noutput_dir = \"{}\"\n",
            dir.join("out").display()
        ),
    )
    .unwrap();
    let o = bin(&["--config", cfg.to_str().unwrap(), "run"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.join("out").join("run.csv")).unwrap();
    assert!(text.contains("seed=8"));
    assert!(text.contains("iteration,x1,x2,x3,x4,y"));
    assert_eq!(data_rows(&text).len(), 31);

    std::fs::write(&cfg, "iterations = 5\n").unwrap();
    let o = bin(&["--config", cfg.to_str().unwrap(), "run"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_changes_output() {
    let a = stdout(&bin(&[
        "--setting",
        "2",
        "--seed",
        "1",
        "run",
        "--iterations",
        "20",
    ]));
    let b = stdout(&bin(&[
        "--setting",
        "2",
        "--seed",
        "2",
        "run",
        "--iterations",
        "20",
    ]));
    assert_ne!(data_rows(&a), data_rows(&b));
}
