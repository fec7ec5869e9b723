use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn robinfb(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robinfb"))
        .args(args)
        .env("OUTPUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.txt")).unwrap()).unwrap()
}

const SLAB: &str = "preset = slab\nbeta = 1\nslab.a = 0.5\ngrid.h = 0.03125\n";

#[test]
fn solve_slab_reports_the_closed_form_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "slab.cfg", SLAB);
    let out = tmp.path().join("run");
    let o = robinfb(&["solve", &cfg], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let total = r["final_energy"]["total"].as_f64().unwrap();
    assert!((total - 0.8).abs() < 1e-8, "{total}");
    assert_eq!(r["termination"], "converged");
    assert!(r["energy_trace"].as_array().unwrap().len() > 2);
    assert_eq!(r["certificates"].as_array().unwrap().len(), 7);
    let u = std::fs::read_to_string(out.join("u.csv")).unwrap();
    assert!(u.starts_with("# nodes 33 35 0.03125\n"));
    let omega = std::fs::read_to_string(out.join("omega.csv")).unwrap();
    assert!(omega.starts_with("# cells 32 34 0.03125\n"));
}

#[test]
fn repeated_runs_differ_only_in_wall_time() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sq.cfg", "grid.h = 0.0625\nbeta = 2\nv.amplitude = 0.2\n");
    let mut reports = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("run{k}"));
        assert_eq!(robinfb(&["solve", &cfg], &out).status.code(), Some(0));
        let mut r = report(&out);
        r.as_object_mut().unwrap().remove("wall_time_s");
        reports.push(r);
        assert_eq!(
            std::fs::read(out.join("u.csv")).unwrap(),
            std::fs::read(tmp.path().join("run0").join("u.csv")).unwrap()
        );
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn certify_runs_certificates_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "slab.cfg", SLAB);
    let solved = tmp.path().join("solved");
    assert_eq!(robinfb(&["solve", &cfg], &solved).status.code(), Some(0));
    let (u, omega) = (solved.join("u.csv"), solved.join("omega.csv"));
    let out = tmp.path().join("cert");
    let o = robinfb(&["certify", &cfg, "--u", u.to_str().unwrap(), "--omega", omega.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert!(r.get("energy_trace").is_none());
    assert_eq!(r["certificates"].as_array().unwrap().len(), 7);

    // a reflected set breaks admissibility outside D
    let text = std::fs::read_to_string(&omega).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let header = lines.remove(0);
    lines.reverse();
    let flipped = tmp.path().join("flipped.csv");
    std::fs::write(&flipped, format!("{header}\n{}\n", lines.join("\n"))).unwrap();
    let o = robinfb(&["certify", &cfg, "--u", u.to_str().unwrap(), "--omega", flipped.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(3));

    // a constant field violates the transmission condition across the interface
    let text = std::fs::read_to_string(&u).unwrap();
    let mut lines = text.lines();
    let mut flat = format!("{}\n", lines.next().unwrap());
    for line in lines {
        flat.push_str(&vec!["8e-1"; line.split(',').count()].join(","));
        flat.push('\n');
    }
    let constant = tmp.path().join("constant.csv");
    std::fs::write(&constant, flat).unwrap();
    let robin = write_config(tmp.path(), "robin.cfg", &format!("{SLAB}certificates = robin\n"));
    let o = robinfb(&["certify", &robin, "--u", constant.to_str().unwrap(), "--omega", omega.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_errors_exit_3_and_name_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.cfg", "# header\nbeta = -1\n");
    let o = robinfb(&["solve", &cfg], &tmp.path().join("x"));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let cfg = write_config(tmp.path(), "unknown.cfg", "colour = blue\n");
    assert_eq!(robinfb(&["solve", &cfg], &tmp.path().join("x")).status.code(), Some(3));
    assert_eq!(robinfb(&["solve"], &tmp.path().join("x")).status.code(), Some(3));
    assert_eq!(robinfb(&["solve", "/nonexistent.cfg"], &tmp.path().join("x")).status.code(), Some(3));
}

#[test]
fn solver_failure_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cap.cfg", "grid.h = 0.0625\nmax_iter = 1\ntol_cg = 1e-14\n");
    let o = robinfb(&["solve", &cfg], &tmp.path().join("x"));
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn oracle_prints_slab_solution() {
    let tmp = tempfile::tempdir().unwrap();
    let o = robinfb(&["oracle", "--beta", "1", "--a", "0.5", "--h", "0.25"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let energy: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# energy_per_width = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((energy - 0.8).abs() < 1e-15);
    let rows: Vec<(f64, f64)> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('x'))
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 5);
    for (x2, g) in rows {
        assert!((g - (1.0 + 0.5 * f64::abs(x2)) / 1.25).abs() < 1e-15);
    }
}

#[test]
fn cutcheck_matches_enumeration() {
    let tmp = tempfile::tempdir().unwrap();
    let o = robinfb(&["cutcheck", "--trials", "100", "--seed", "5"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("mismatches 0"));
}

#[test]
fn sweep_writes_a_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "slab.cfg", "preset = slab\ncertificates = optimality\n");
    let out = tmp.path().join("sweep");
    let o = robinfb(&["sweep", &cfg, "--beta-list", "0.5,1,2", "--h-list", "0.125,0.0625"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 7);
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        let beta: f64 = cols[0].parse().unwrap();
        let total: f64 = cols[2].parse().unwrap();
        assert!((total - beta / (1.0 + beta / 4.0)).abs() < 1e-8, "{line}");
        assert!(Path::new(cols[7]).join("report.txt").exists());
    }
}
