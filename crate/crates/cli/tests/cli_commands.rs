use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use vaftc_cli::commands::{default_scenario_text, EXIT_FAILED, EXIT_IO, EXIT_OK, EXIT_PARSE};
use vaftc_cli::{cmd_gains, cmd_run, cmd_verify, scenario_file, RunOptions};
use vaftc_core::engine::demo_scenario;

fn shipped() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/demo.scn")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vaftc"))
}

fn write_scn(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// A short three-state scenario with a single loss fault.
fn short_text() -> String {
    default_scenario_text()
        .replace("t_end = 40", "t_end = 3")
        .replace("at = 15 kind = loss", "at = 1 kind = loss")
        .lines()
        .filter(|l| !l.starts_with("at = 20") && !l.starts_with("at = 25"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn shipped_scenario_is_the_builtin_study() {
    let text = fs::read_to_string(shipped()).unwrap();
    assert_eq!(text, default_scenario_text());
    let parsed = scenario_file::parse(&text).unwrap();
    assert_eq!(
        scenario_file::emit(&parsed),
        scenario_file::emit(&demo_scenario())
    );
}

#[test]
fn full_run_writes_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let opts = RunOptions {
        out_dir: tmp.path().to_path_buf(),
        ..Default::default()
    };
    let code = cmd_run(&[shipped()], &opts, 1, &mut out, &mut err);
    assert_eq!(code, EXIT_OK, "{}", String::from_utf8_lossy(&err));

    let csv = fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "t");
    let mut prev = f64::NEG_INFINITY;
    let mut rows = 0;
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), header.len());
        let t: f64 = cells[0].parse().unwrap();
        assert!(t > prev);
        prev = t;
        rows += 1;
    }
    assert_eq!(rows, 40001);
    assert_eq!(prev, 40.0);

    let metrics = fs::read_to_string(tmp.path().join("metrics.txt")).unwrap();
    assert!(metrics.contains("uub_satisfied   = true"));
    assert_eq!(metrics.matches("event at = ").count(), 3);

    for name in ["output.svg", "states.svg", "xtilde.svg", "adaptation.svg"] {
        let svg = fs::read_to_string(tmp.path().join(name)).unwrap();
        assert!(svg.starts_with("<?xml"), "{name}");
        assert!(svg.trim_end().ends_with("</svg>"), "{name}");
        assert_eq!(svg.matches("<svg").count(), 1);
        assert!(
            !svg.contains("href") && !svg.contains("<image") && !svg.contains("<script"),
            "{name}"
        );
        assert!(svg.matches("<polyline").count() >= 2, "{name}");
    }
}

#[test]
fn jobs_write_per_scenario_directories_in_order() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write_scn(tmp.path(), "alpha.scn", &short_text());
    let b = write_scn(
        tmp.path(),
        "beta.scn",
        &short_text().replace("theta = 0.65", "theta = 0.4"),
    );
    let out_dir = tmp.path().join("out");
    let opts = RunOptions {
        out_dir: out_dir.clone(),
        ..Default::default()
    };
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(
        cmd_run(&[a.clone(), b.clone()], &opts, 2, &mut out, &mut err),
        EXIT_OK
    );
    let out = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with(&a.display().to_string()));
    assert!(lines[1].starts_with(&b.display().to_string()));

    let serial_dir = tmp.path().join("serial");
    let serial = RunOptions {
        out_dir: serial_dir.clone(),
        ..Default::default()
    };
    assert_eq!(
        cmd_run(&[a, b], &serial, 1, &mut Vec::new(), &mut Vec::new()),
        EXIT_OK
    );
    for stem in ["alpha", "beta"] {
        let x = fs::read(out_dir.join(stem).join("trace.csv")).unwrap();
        let y = fs::read(serial_dir.join(stem).join("trace.csv")).unwrap();
        assert_eq!(x, y, "{stem}");
    }
}

#[test]
fn mode_override_changes_the_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_scn(tmp.path(), "s.scn", &short_text());
    let run_mode = |mode: &str, dir: &str| {
        let status = bin()
            .args(["run", p.to_str().unwrap(), "--mode", mode, "-o"])
            .arg(tmp.path().join(dir))
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        fs::read_to_string(tmp.path().join(dir).join("metrics.txt")).unwrap()
    };
    assert!(run_mode("faulty_no_va", "a").starts_with("mode            = faulty_no_va"));
    assert!(run_mode("nominal_only", "b").starts_with("mode            = nominal_only"));
    let status = bin()
        .args(["run", p.to_str().unwrap(), "--mode", "bogus"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn missing_file_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.scn");
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let opts = RunOptions {
        out_dir: tmp.path().to_path_buf(),
        ..Default::default()
    };
    assert_eq!(
        cmd_run(std::slice::from_ref(&missing), &opts, 1, &mut out, &mut err),
        EXIT_IO
    );
    assert_eq!(cmd_gains(&missing, &mut out, &mut err), EXIT_IO);
    let status = bin().arg("verify").arg(&missing).status().unwrap();
    assert_eq!(status.code(), Some(4));
}

#[test]
fn asymmetric_p_is_a_parse_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = default_scenario_text().replace("P = 2.8, 2.6, 0.5;", "P = 2.8, 2.7, 0.5;");
    let p = write_scn(tmp.path(), "bad.scn", &text);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(cmd_verify(&p, None, &mut out, &mut err), EXIT_PARSE);
    let msg = String::from_utf8(err).unwrap();
    assert!(msg.contains("line"), "{msg}");
    let status = bin()
        .arg("run")
        .arg(&p)
        .arg("-o")
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn auto_p_certifies_both_conditions() {
    let tmp = tempfile::tempdir().unwrap();
    let text: String = default_scenario_text()
        .lines()
        .filter(|l| !l.starts_with("P1 ="))
        .map(|l| if l.starts_with("P = ") { "P = auto" } else { l })
        .collect::<Vec<_>>()
        .join("\n");
    let p = write_scn(tmp.path(), "auto.scn", &text);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cmd_verify(&p, Some(tmp.path()), &mut out, &mut err);
    let out = String::from_utf8(out).unwrap();
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("tracking condition (A, P): certified"));
    assert!(out.contains("reconfiguration condition (A, P): certified"));
    assert!(out.ends_with("verdict: certified\n"));
    let csv = fs::read_to_string(tmp.path().join("conditions.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn shipped_verify_reports_the_indefinite_p1() {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(
        cmd_verify(&shipped(), None, &mut out, &mut err),
        EXIT_FAILED
    );
    let out = String::from_utf8(out).unwrap();
    assert!(out.contains("tracking condition (A, P1): not_certified"));
    assert!(out.contains("reconfiguration condition (A, P): certified"));
    assert!(out.contains("tracking condition (A_d, P1): certified"));
}

#[test]
fn gains_output_and_matching_failure() {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(cmd_gains(&shipped(), &mut out, &mut err), EXIT_OK);
    let out = String::from_utf8(out).unwrap();
    assert!(out.contains("k_x        = [0, 0, -1]"), "{out}");
    assert!(out.contains("k_r        = 1"));

    let tmp = tempfile::tempdir().unwrap();
    let text =
        default_scenario_text().replace("A_d = 0, 1, 0; 0, 0, 1;", "A_d = 0, 1, 0; 0, -1, 1;");
    let p = write_scn(tmp.path(), "mismatch.scn", &text);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(cmd_gains(&p, &mut out, &mut err), EXIT_FAILED);
    assert!(String::from_utf8(out).unwrap().contains("residual_A"));
    let status = bin()
        .arg("run")
        .arg(&p)
        .arg("-o")
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn emit_default_to_file_and_stdout() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("d.scn");
    let status = bin().arg("emit-default").arg(&p).status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(fs::read_to_string(&p).unwrap(), default_scenario_text());
    let o = bin().arg("emit-default").output().unwrap();
    assert_eq!(
        String::from_utf8(o.stdout).unwrap(),
        default_scenario_text()
    );
    let status = bin()
        .arg("emit-default")
        .arg(tmp.path().join("no/such/dir/x.scn"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
}

#[test]
fn tiny_input_gain_is_a_numerical_abort() {
    let tmp = tempfile::tempdir().unwrap();
    let text = short_text().replace("g = 0.5*sin(t)+4", "g = 2 - t");
    let p = write_scn(tmp.path(), "g.scn", &text);
    let status = bin()
        .arg("run")
        .arg(&p)
        .arg("-o")
        .arg(tmp.path().join("o"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}
