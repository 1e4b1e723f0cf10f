//! Command implementations. Each returns a process exit code.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;
use vaftc_core::engine::{demo_scenario, metrics, run, Mode, Scenario, SimTrace};
use vaftc_core::error::Error as CoreError;
use vaftc_core::verify::{check_condition, ConditionLabel, ConditionReport};

use crate::scenario_file::{self, ScenarioError};
use crate::svg::{line_chart, Series};
use crate::{report, trace_csv};

pub const EXIT_OK: i32 = 0;
/// Certificate not established or model matching fails.
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: ScenarioError,
    },
    #[error("{0}")]
    Matching(CoreError),
    #[error("numerical abort: {0}")]
    Numerical(CoreError),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Io { .. } => EXIT_IO,
            CommandError::Parse { .. } => EXIT_PARSE,
            CommandError::Matching(_) => EXIT_FAILED,
            CommandError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CommandError + '_ {
    move |source| CommandError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn classify(e: CoreError) -> CommandError {
    match e {
        CoreError::MatchingConditionViolated { .. } => CommandError::Matching(e),
        other => CommandError::Numerical(other),
    }
}

pub fn load(path: &Path) -> Result<Scenario, CommandError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    scenario_file::parse(&text).map_err(|source| CommandError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub mode: Option<Mode>,
    pub eps_band: Option<f64>,
    pub out_dir: PathBuf,
}

/// Loads a scenario, applies overrides, simulates and writes all artifacts
/// into `dir`. Returns a one-line summary.
pub fn run_one(path: &Path, opts: &RunOptions, dir: &Path) -> Result<String, CommandError> {
    let mut s = load(path)?;
    if let Some(mode) = opts.mode {
        s.mode = mode;
    }
    if let Some(eps) = opts.eps_band {
        s.eps_band = eps;
    }
    s.validate().map_err(|e| CommandError::Parse {
        path: path.to_path_buf(),
        source: ScenarioError::Invalid(e.to_string()),
    })?;
    let tr = run(&s).map_err(classify)?;
    let m = metrics(&tr, &s, s.eps_band).map_err(classify)?;

    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_path = dir.join("trace.csv");
    let file = fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
    let mut w = BufWriter::new(file);
    trace_csv::write_trace(&tr, &mut w).map_err(io_err(&csv_path))?;
    w.flush().map_err(io_err(&csv_path))?;

    let metrics_path = dir.join("metrics.txt");
    fs::write(&metrics_path, report::metrics(&m, s.mode)).map_err(io_err(&metrics_path))?;
    for (name, svg) in plots(&tr) {
        let p = dir.join(name);
        fs::write(&p, svg).map_err(io_err(&p))?;
    }
    Ok(format!(
        "{}: {} rows, sup_e_tail = {}, sup_xtilde_tail = {}, uub_bound = {} -> {}",
        path.display(),
        tr.len(),
        report::num(m.sup_e_tail),
        report::num(m.sup_xtilde_tail),
        report::num(m.uub.radius),
        dir.display()
    ))
}

fn plots(tr: &SimTrace) -> Vec<(&'static str, String)> {
    let mode = tr.mode;
    let col = |f: &dyn Fn(&vaftc_core::engine::TraceRow) -> f64| -> Vec<(f64, f64)> {
        tr.rows.iter().map(|r| (r.t, f(r))).collect()
    };
    let n = tr.rows.first().map_or(0, |r| r.x_hat.len());

    let output = line_chart(
        &format!("Output tracking ({mode})"),
        "t [s]",
        "y",
        &[
            Series::new("y_d", col(&|r| r.y_d[0])).dashed(),
            Series::new("y_hat", col(&|r| r.y_hat[0])),
            Series::new("y_f", col(&|r| r.y_f[0])),
        ],
    );

    let mut state_series = Vec::new();
    for i in 0..n {
        state_series.push(Series::new(format!("x_f{}", i + 1), col(&|r| r.x_f[i])));
    }
    for i in 0..n {
        state_series.push(Series::new(format!("x_d{}", i + 1), col(&|r| r.x_d[i])).dashed());
    }
    let states = line_chart(&format!("States ({mode})"), "t [s]", "x", &state_series);

    let xtilde = line_chart(
        &format!("Error norms ({mode})"),
        "t [s]",
        "norm",
        &[
            Series::new("|x_tilde|", col(&|r| r.x_tilde_norm())),
            Series::new("|e|", col(&|r| r.e_norm())),
        ],
    );

    let mut adapt_series = Vec::new();
    for i in 0..n {
        adapt_series.push(Series::new(
            format!("M{}", i + 1),
            col(&|r| r.adaptive.m[i]),
        ));
    }
    adapt_series.push(Series::new("N", col(&|r| r.adaptive.n)));
    adapt_series.push(Series::new("d_hat", col(&|r| r.adaptive.d_hat)));
    let adaptation = line_chart(
        &format!("Virtual actuator parameters ({mode})"),
        "t [s]",
        "value",
        &adapt_series,
    );

    vec![
        ("output.svg", output),
        ("states.svg", states),
        ("xtilde.svg", xtilde),
        ("adaptation.svg", adaptation),
    ]
}

/// Runs every scenario in `paths`. A single scenario writes into
/// `opts.out_dir`; several write into `out_dir/<file stem>`. Up to `jobs`
/// scenarios run concurrently; messages are printed in input order.
pub fn cmd_run(
    paths: &[PathBuf],
    opts: &RunOptions,
    jobs: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let dirs: Vec<PathBuf> = if paths.len() == 1 {
        vec![opts.out_dir.clone()]
    } else {
        paths
            .iter()
            .map(|p| opts.out_dir.join(p.file_stem().unwrap_or(p.as_os_str())))
            .collect()
    };
    let results: Vec<Mutex<Option<Result<String, CommandError>>>> =
        paths.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = jobs.clamp(1, paths.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= paths.len() {
                    break;
                }
                let r = run_one(&paths[i], opts, &dirs[i]);
                *results[i].lock().expect("result slot") = Some(r);
            });
        }
    });

    let mut code = EXIT_OK;
    for slot in results {
        match slot
            .into_inner()
            .expect("result slot")
            .expect("job finished")
        {
            Ok(line) => {
                let _ = writeln!(out, "{line}");
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                code = code.max(e.exit_code());
            }
        }
    }
    code
}

/// Reports the tracking and reconfiguration certificates. Exit 0 only if
/// both are certified.
pub fn cmd_verify(
    path: &Path,
    csv_dir: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let s = match load(path) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let a = s.core.a();
    let p = &s.adaptation.p;
    let (tracking_p, tracking_pair) = match &s.tracking_p {
        Some(p1) => (p1, "(A, P1)"),
        None => (p, "(A, P)"),
    };
    let mut checks: Vec<(
        String,
        ConditionLabel,
        &vaftc_core::numerics::Mat,
        &vaftc_core::numerics::Mat,
    )> = vec![
        (
            tracking_pair.into(),
            ConditionLabel::Tracking,
            a,
            tracking_p,
        ),
        ("(A, P)".into(), ConditionLabel::Reconfiguration, a, p),
    ];
    if let Some(p1) = &s.tracking_p {
        checks.push((
            "(A_d, P1)".into(),
            ConditionLabel::Tracking,
            s.reference.a_d(),
            p1,
        ));
    }
    let mut reports: Vec<(String, ConditionReport)> = Vec::new();
    for (pair, label, a, p) in checks {
        match check_condition(a, p, label) {
            Ok(r) => reports.push((pair, r)),
            Err(e) => {
                let _ = writeln!(err, "error: {pair}: {e}");
                return EXIT_PARSE;
            }
        }
    }
    for (i, (pair, r)) in reports.iter().enumerate() {
        if i == 2 {
            let _ = writeln!(out, "informational, reference model:");
        }
        let _ = write!(out, "{}", report::condition(r, pair));
    }
    if let Some(dir) = csv_dir {
        let refs: Vec<(String, &ConditionReport)> =
            reports.iter().map(|(p, r)| (p.clone(), r)).collect();
        let csv_path = dir.join("conditions.csv");
        if let Err(e) = fs::create_dir_all(dir)
            .and_then(|_| fs::write(&csv_path, report::conditions_csv(&refs)))
        {
            let _ = writeln!(err, "error: {}: {e}", csv_path.display());
            return EXIT_IO;
        }
    }
    let certified = reports[..2].iter().all(|(_, r)| r.certified());
    let _ = writeln!(
        out,
        "verdict: {}",
        if certified {
            "certified"
        } else {
            "not_certified"
        }
    );
    if certified {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

pub fn cmd_gains(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let s = match load(path) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    match s.gains() {
        Ok(g) => {
            let _ = write!(out, "{}", report::gains(&g));
            EXIT_OK
        }
        Err(CoreError::MatchingConditionViolated {
            residual_a,
            residual_b,
        }) => {
            let _ = writeln!(out, "residual_A = {residual_a:e}");
            let _ = writeln!(out, "residual_B = {residual_b:e}");
            let _ = writeln!(err, "error: model matching fails");
            EXIT_FAILED
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_NUMERICAL
        }
    }
}

/// The shipped simulation study in scenario-file form.
pub fn default_scenario_text() -> String {
    format!(
        "# Simulation study: effectiveness loss at 15 s, disturbance at 20 s,\n# additive actuator fault at 25 s.\n\n{}",
        scenario_file::emit(&demo_scenario())
    )
}

/// Writes the default scenario to `path`, or to `out` when `path` is `-`.
pub fn cmd_emit_default(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = default_scenario_text();
    let result = if path == Path::new("-") {
        out.write_all(text.as_bytes())
    } else {
        fs::write(path, text)
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", path.display());
            EXIT_IO
        }
    }
}
