//! Commands behind the CLI: each writes its artifacts into an output
//! directory and reports an exit code (0 success, 2 failed hypothesis,
//! 1 error).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::certificate::{certify_with_nodes, BlowupCertificate, TheoremInputs, EXCLUDED_REASON};
use crate::error::{Error, Result};
use crate::ode::{
    check_growth_properties, detect_blowup_time, integrate, trajectory_csv, FlrwCoefficients, OdeControls,
    OdeTrajectory, Termination,
};
use crate::output::fmt_f64;
use crate::pde::{
    cone_containment_check, evolve, make_initial_data, prepare_field, ConeReport, GridKind, PdeControls, PdeModel,
    PdeRun,
};
use crate::scenario::{GridChoice, Scenario, SweepSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;

/// Environment variable holding the default sweep worker count.
pub const WORKERS_ENV: &str = "FLRW_BLOWUP_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Ode,
    Pde,
    ConeCheck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    /// One-line human summary.
    pub message: String,
}

struct Writer {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", dir.display())))?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            written: vec![],
        })
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.text(name, &body)
    }

    fn finish(self, exit_code: i32, message: String) -> Outcome {
        Outcome {
            exit_code,
            artifacts: self.written,
            message,
        }
    }
}

/// Certificate JSON: every certificate field plus the failing reasons.
pub fn certificate_json(cert: &BlowupCertificate) -> Result<Value> {
    let mut v = serde_json::to_value(cert)?;
    if let Value::Object(map) = &mut v {
        map.insert("reasons".into(), json!(cert.reasons()));
    }
    Ok(v)
}

fn excluded(inputs: &TheoremInputs) -> Option<String> {
    let p = inputs.params();
    p.is_excluded_region()
        .then(|| format!("{EXCLUDED_REASON} (H = {}, sigma = {})", p.hubble, p.sigma))
}

/// End time clamped to the horizon.
fn horizon_clamped(inputs: &TheoremInputs, t_end: f64) -> f64 {
    t_end.min(inputs.geom.end())
}

pub fn run(command: Command, scenario: &Scenario, out: &Path) -> Result<Outcome> {
    let inputs = scenario.inputs()?;
    match command {
        Command::Analyze => analyze(scenario, &inputs, out),
        Command::Ode => ode(scenario, &inputs, out),
        Command::Pde => pde(scenario, &inputs, out, false),
        Command::ConeCheck => pde(scenario, &inputs, out, true),
    }
}

fn analyze(scenario: &Scenario, inputs: &TheoremInputs, out: &Path) -> Result<Outcome> {
    let cert = certify_with_nodes(inputs, scenario.run.search_nodes);
    let mut w = Writer::new(out)?;
    w.json("certificate.json", &certificate_json(&cert)?)?;
    let (code, msg) = if cert.valid {
        (EXIT_OK, format!("certified: T_star = {}", fmt_f64(cert.t_star)))
    } else {
        (EXIT_HYPOTHESIS, format!("not certified: {}", cert.reasons().join("; ")))
    };
    Ok(w.finish(code, msg))
}

#[derive(Debug, Clone, Serialize)]
struct OdeSummary {
    blowup_detected: bool,
    blowup_time: Option<f64>,
    last_t: f64,
    termination: Termination,
    samples: usize,
    certificate_valid: bool,
    #[serde(rename = "T_star", serialize_with = "crate::output::extended")]
    t_star: f64,
}

fn ode(scenario: &Scenario, inputs: &TheoremInputs, out: &Path) -> Result<Outcome> {
    if let Some(reason) = excluded(inputs) {
        return Ok(Writer::new(out)?.finish(EXIT_HYPOTHESIS, reason));
    }
    let run = &scenario.run;
    let ctl = OdeControls {
        rtol: run.rtol,
        atol: run.atol,
        max_steps: run.max_steps,
    };
    let traj = integrate(inputs, horizon_clamped(inputs, run.t_end), &ctl)?;
    let cert = certify_with_nodes(inputs, run.search_nodes);
    let th = &inputs.theorem;
    let coeffs = FlrwCoefficients::from_inputs(inputs);
    let report = match check_growth_properties(&traj, &coeffs, th.growth_rate, th.theta, run.check_tolerance) {
        Ok(rep) => json!({"preconditions_hold": true, "all_hold": rep.all_hold(), "report": rep}),
        Err(Error::Precondition(m)) => json!({"preconditions_hold": false, "reason": m}),
        Err(e) => return Err(e),
    };
    let summary = ode_summary(&traj, &cert);
    let mut w = Writer::new(out)?;
    let envelope_cert = cert.valid.then_some(&cert);
    w.text(
        "trajectory.csv",
        &trajectory_csv(&traj, inputs.params().c, th.growth_rate, envelope_cert),
    )?;
    w.json("growth_report.json", &report)?;
    w.json("ode_summary.json", &summary)?;
    let msg = match summary.blowup_time {
        Some(t) => format!("blow-up detected near t = {}", fmt_f64(t)),
        None => format!("no blow-up up to t = {}", fmt_f64(summary.last_t)),
    };
    Ok(w.finish(EXIT_OK, msg))
}

fn ode_summary(traj: &OdeTrajectory, cert: &BlowupCertificate) -> OdeSummary {
    OdeSummary {
        blowup_detected: traj.blowup_detected,
        blowup_time: detect_blowup_time(traj),
        last_t: traj.last().t,
        termination: traj.termination,
        samples: traj.samples.len(),
        certificate_valid: cert.valid,
        t_star: cert.t_star,
    }
}

/// Runs the PDE for a scenario and checks cone containment.
pub fn simulate(scenario: &Scenario) -> Result<(PdeRun, ConeReport)> {
    let inputs = scenario.inputs()?;
    let th = &inputs.theorem;
    let model = PdeModel::new(inputs.geom.clone(), th.lambda, th.p)?;
    let run = &scenario.run;
    let data = make_initial_data(scenario.cosmology.n, scenario.cone.r0, th.w0, th.w1)?;
    let kind = match run.grid {
        GridChoice::Radial => GridKind::Radial,
        GridChoice::Line => GridKind::Line { center: run.center },
    };
    let t_end = horizon_clamped(&inputs, run.t_end);
    let mut field = prepare_field(&model, &data, kind, run.grid_h, t_end, run.r_max_factor)?;
    let controls = PdeControls {
        rtol: run.rtol,
        atol: run.atol,
        output_dt: run.output_dt,
        max_steps: run.max_steps,
        snapshot_times: run.snapshot_times.clone(),
        ..Default::default()
    };
    let result = evolve(&mut field, &model, t_end, &controls)?;
    let report = cone_containment_check(&result, model.geom())?;
    Ok((result, report))
}

fn pde(scenario: &Scenario, inputs: &TheoremInputs, out: &Path, cone_only: bool) -> Result<Outcome> {
    if let Some(reason) = excluded(inputs) {
        return Ok(Writer::new(out)?.finish(EXIT_HYPOTHESIS, reason));
    }
    let (result, report) = simulate(scenario)?;
    let mut w = Writer::new(out)?;
    w.json("cone_report.json", &report)?;
    if cone_only {
        let code = if report.all_hold { EXIT_OK } else { EXIT_HYPOTHESIS };
        let msg = format!(
            "cone containment {} at {} output times{}",
            if report.all_hold { "holds" } else { "fails" },
            report.rows.len(),
            if report.outside_proven_regime {
                " (outside proven regime)"
            } else {
                ""
            }
        );
        return Ok(w.finish(code, msg));
    }
    w.text("observables.csv", &result.observables_csv())?;
    let mut snaps = Vec::new();
    for (k, snap) in result.snapshots.iter().enumerate() {
        let name = format!("snapshot_{k:03}.csv");
        w.text(&name, &snap.snapshot_csv())?;
        snaps.push(json!({"file": name, "t": snap.t}));
    }
    let last = result.observations.last().map(|o| o.t).unwrap_or(0.0);
    w.json(
        "pde_summary.json",
        &json!({
            "termination": result.termination,
            "blowup_time": result.blowup_time,
            "last_t": last,
            "steps": result.steps,
            "grid_h": result.grid_h,
            "r_max": result.r_max,
            "cone_contained": report.all_hold,
            "snapshots": snaps,
        }),
    )?;
    let msg = match result.blowup_time {
        Some(t) => format!("PDE blow-up detected at t = {}", fmt_f64(t)),
        None => format!("PDE reached t = {}", fmt_f64(last)),
    };
    Ok(w.finish(EXIT_OK, msg))
}

/// One evaluated sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub values: Vec<f64>,
    /// Corollary case whose `(H, sigma)` clause matches, if any.
    pub case: Option<String>,
    /// Whether all clauses of that case hold.
    pub case_holds: bool,
    pub valid: Option<bool>,
    pub t_star: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub w0_threshold: Option<f64>,
    pub blowup_time: Option<f64>,
    pub error: Option<String>,
}

fn sweep_point(spec: &SweepSpec, index: usize) -> SweepRow {
    let mut row = SweepRow {
        index,
        values: spec.point(index),
        case: None,
        case_holds: false,
        valid: None,
        t_star: None,
        a: None,
        b: None,
        w0_threshold: None,
        blowup_time: None,
        error: None,
    };
    let eval = |row: &mut SweepRow| -> Result<()> {
        let scenario = spec.scenario_at(index)?;
        let inputs = scenario.inputs()?;
        let cert = certify_with_nodes(&inputs, scenario.run.search_nodes);
        row.case = cert.corollary.candidate.map(|c| c.tag().to_string());
        row.case_holds = cert.corollary_case.is_some();
        row.valid = Some(cert.valid);
        row.t_star = Some(cert.t_star);
        row.a = Some(cert.a);
        row.b = Some(cert.b);
        row.w0_threshold = Some(cert.w0_threshold);
        if spec.ode && excluded(&inputs).is_none() {
            let ctl = OdeControls {
                rtol: scenario.run.rtol,
                atol: scenario.run.atol,
                max_steps: scenario.run.max_steps,
            };
            let traj = integrate(&inputs, horizon_clamped(&inputs, scenario.run.t_end), &ctl)?;
            row.blowup_time = detect_blowup_time(&traj);
        }
        Ok(())
    };
    if let Err(e) = eval(&mut row) {
        row.error = Some(e.to_string());
    }
    row
}

/// Worker count from an explicit value, the spec, or the environment.
pub fn resolve_workers(explicit: Option<usize>, spec: &SweepSpec) -> usize {
    explicit
        .or(spec.parallelism)
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
        .filter(|&k| k > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Evaluates every point; rows come back in index order whatever the
/// worker count.
pub fn sweep(spec: &SweepSpec, workers: usize) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let total = spec.combinations().expect("validated");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Configuration(e.to_string()))?;
    Ok(pool.install(|| (0..total).into_par_iter().map(|i| sweep_point(spec, i)).collect()))
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn sweep_csv(spec: &SweepSpec, rows: &[SweepRow]) -> String {
    let mut out = String::from("index");
    for axis in &spec.axes {
        out.push(',');
        out.push_str(&csv_text(&axis.path));
    }
    out.push_str(",case,case_holds,valid,T_star,A,B,w0_threshold,blowup_time,error\n");
    for r in rows {
        let mut cells = vec![r.index.to_string()];
        cells.extend(r.values.iter().map(|&v| fmt_f64(v)));
        cells.push(r.case.clone().unwrap_or_else(|| "none".into()));
        cells.push(r.case_holds.to_string());
        cells.push(r.valid.map(|v| v.to_string()).unwrap_or_default());
        for x in [r.t_star, r.a, r.b, r.w0_threshold, r.blowup_time] {
            cells.push(opt(x));
        }
        cells.push(csv_text(r.error.as_deref().unwrap_or("")));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Counts per corollary case plus valid and failed points.
pub fn sweep_summary(rows: &[SweepRow]) -> Value {
    let mut cases: BTreeMap<String, usize> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.error.is_none()) {
        *cases
            .entry(r.case.clone().unwrap_or_else(|| "none".into()))
            .or_default() += 1;
    }
    json!({
        "points": rows.len(),
        "valid": rows.iter().filter(|r| r.valid == Some(true)).count(),
        "errors": rows.iter().filter(|r| r.error.is_some()).count(),
        "cases": cases,
    })
}

pub fn run_sweep(spec: &SweepSpec, workers: usize, out: &Path) -> Result<Outcome> {
    let rows = sweep(spec, workers)?;
    let summary = sweep_summary(&rows);
    let mut w = Writer::new(out)?;
    w.text("sweep.csv", &sweep_csv(spec, &rows))?;
    w.json("sweep_summary.json", &summary)?;
    let msg = format!(
        "{} points, {} certified, {} errors",
        summary["points"], summary["valid"], summary["errors"]
    );
    Ok(w.finish(EXIT_OK, msg))
}
