use std::path::Path;
use std::process::{Command, Output};

use rmlab::campaign::{estimates_from_csv, CampaignReport, CSV_COLUMNS};
use rmlab::model::Config;

fn rmlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmlab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn enumerate_default_prints_csv() {
    let o = rmlab(&["enumerate"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
    let rows = estimates_from_csv(&text).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0].estimate, 338.0 / 512.0);
}

#[test]
fn seed_flag_overrides_config() {
    let text = stdout(&rmlab(&["levy", "--seed", "99"]));
    let rows = estimates_from_csv(&text).unwrap();
    assert_eq!(rows[0].seed, 99);
    assert_eq!(rows[0].estimate, 0.75);
}

#[test]
fn text_format_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = rmlab(&["threshold", "--format", "text", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let report = CampaignReport::from_text(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.experiment, "threshold");
    assert!((report.estimates[0].estimate - 0.125).abs() < 1e-12);
}

#[test]
fn config_file_and_detail_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "round.toml",
        "seed = 4\n[experiment]\nkind = \"round\"\ny = [0.5, 1.25, -0.75]\nmu = 1.0\ninstances = 5\nmodel = { kind = \"iid-bernoulli\", p = \"1/2\" }\n",
    );
    let detail = dir.path().join("detail.csv");
    let o = rmlab(&["round", "--config", &cfg, "--detail-out", detail.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(detail).unwrap();
    assert!(table.starts_with("instance,attempts,r1,r2,r3,r4,failed,y_prime"));
    assert_eq!(table.lines().count(), 6);
}

#[test]
fn print_config_round_trips() {
    let o = rmlab(&["structure", "--print-config", "--seed", "3"]);
    assert!(o.status.success());
    let cfg = Config::from_toml_str(&stdout(&o)).unwrap();
    assert_eq!(cfg.seed, 3);
    assert_eq!(cfg.experiment.verb(), "structure");
}

#[test]
fn mismatched_verb_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.toml", "seed = 1\n[experiment]\nkind = \"enumerate\"\nn = 2\n");
    let o = rmlab(&["qn", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not qn"));
}

#[test]
fn budget_refusal_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.toml", "seed = 1\n[experiment]\nkind = \"enumerate\"\nn = 7\n");
    let o = rmlab(&["enumerate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn malformed_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "seed = \n");
    assert_eq!(rmlab(&["levy", "--config", &cfg]).status.code(), Some(1));
    assert_eq!(rmlab(&["levy", "--config", "/nonexistent/x.toml"]).status.code(), Some(1));
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.toml",
        "seed = 21\n[experiment]\nkind = \"singularity\"\npoints = [{ n = 6, p = \"1/3\", trials = 30000 }]\n",
    );
    let a = rmlab(&["singularity", "--config", &cfg, "--workers", "1"]);
    let b = rmlab(&["singularity", "--config", &cfg, "--workers", "4"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}
