use std::path::{Path, PathBuf};
use std::sync::Arc;

use mch_core::blowup::{
    collapse_intervals, focus_datum, lifespan_scan, limit_measure, peakon_jump, run_to_blowup,
    BlowupOptions, BlowupRun,
};
use mch_core::eulerian::{
    l1_difference, reconstruct, total_variation, uniform_grid, weak_residual, EulerianField,
    TestFunction,
};
use mch_core::flow::{
    evolve, init_flow, velocity_profile, EvolveStatus, FlowState, Lagrangian, StepControls,
    Trajectory,
};
use mch_core::momentum::Momentum;
use mch_core::regularized::{
    consistency_sweep, reg_evolve, reg_snapshot, weak_defects, ParticleEnsemble, RegControls,
    RegScheme, SweepOptions,
};
use serde::Serialize;

use crate::config::{ConfigError, Scenario, ScenarioConfig};
use crate::report::{fmt17, to_json, Check, Summary};
use crate::svg::{emit_svg, Frame};

/// Tolerances of the hard invariants.
const BOUND_TOL: f64 = 1e-9;
const TV_TOL: f64 = 1e-6;
const MASS_DRIFT: f64 = 1e-6;
const PIN_TOL: f64 = 1e-9;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "configuration error: {e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

/// Files produced by a scenario, held in memory until the run is complete.
#[derive(Default)]
struct Output {
    files: Vec<(String, String)>,
    checks: Vec<Check>,
}

impl Output {
    fn file(&mut self, name: impl Into<String>, body: String) {
        self.files.push((name.into(), body));
    }

    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }
}

/// Validates `cfg`, runs it and writes every artifact plus `summary.json` into `out`.
///
/// Configuration errors return before anything touches the file system.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    base: Option<&Path>,
    out: &Path,
    svg: bool,
) -> Result<Summary, RunError> {
    let m = cfg.validate(base).map_err(RunError::Config)?;
    let svg = svg || cfg.svg;
    let mut output = Output::default();
    let result = match cfg.scenario {
        Scenario::Classical => classical(cfg, &m, svg, &mut output),
        Scenario::Blowup => blowup(cfg, &m, svg, &mut output),
        Scenario::LifespanScan => scan(cfg, &m, &mut output),
        Scenario::PeakonFormation => peakon(cfg, &m, svg, &mut output),
        Scenario::Continuation => continuation(cfg, &m, svg, &mut output),
        Scenario::ConsistencySweep => sweep(cfg, &m, &mut output),
        Scenario::WeakCheck => weak_check(cfg, &m, &mut output),
    };
    let summary = Summary::new(
        cfg.scenario.name(),
        output.checks,
        result.err().map(|e| e.to_string()),
    );
    std::fs::create_dir_all(out).map_err(RunError::Io)?;
    for (name, body) in &output.files {
        std::fs::write(out.join(name), body).map_err(RunError::Io)?;
    }
    std::fs::write(out.join("summary.json"), to_json(&summary)).map_err(RunError::Io)?;
    Ok(summary)
}

fn blowup_options(cfg: &ScenarioConfig) -> BlowupOptions {
    BlowupOptions {
        nodes: cfg.nodes,
        delta_stop: cfg.delta_stop,
        t_end: cfg.t_end.unwrap_or(10.0),
        dt_max: cfg.dt_max,
        c_safe: cfg.c_safe,
    }
}

fn snapshot_grid(cfg: &ScenarioConfig, m: &Momentum) -> Vec<f64> {
    let l = m.support_radius();
    uniform_grid(-l - 2.0, l + 2.0, cfg.grid_points)
}

/// Indices `0, k, 2k, …` and always the last one.
fn cadence(len: usize, every: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).step_by(every).collect();
    if idx.last() != Some(&(len - 1)) {
        idx.push(len - 1);
    }
    idx
}

fn state_at(setup: &Arc<Lagrangian>, trajectory: &Trajectory, k: usize) -> mch_core::Result<FlowState> {
    let rec = &trajectory.labels[k];
    FlowState::from_parts(setup.clone(), rec.t, rec.x.clone(), rec.xxi.clone())
}

fn frame(field: &EulerianField, labels: &[f64], xxi: &[f64]) -> Frame {
    Frame {
        t: field.t,
        x: field.x.clone(),
        u: field.u.clone(),
        m: field.m.clone(),
        labels: labels.to_vec(),
        xxi: xxi.to_vec(),
    }
}

/// TV and time-Lipschitz checks over a list of snapshots.
fn field_checks(out: &mut Output, prefix: &str, fields: &[EulerianField], m1: f64) {
    let tv_u = fields.iter().map(|f| total_variation(&f.u)).fold(0.0, f64::max);
    let tv_ux = fields.iter().map(|f| total_variation(&f.ux)).fold(0.0, f64::max);
    out.check(Check::at_most(&format!("{prefix}tv_u"), tv_u, m1 + TV_TOL));
    out.check(Check::at_most(&format!("{prefix}tv_ux"), tv_ux, 2.0 * m1 + TV_TOL));
    // largest excess of ∫|u(t) − u(s)| over ½M₁³|t − s|
    let (mut ex_u, mut ex_ux) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..fields.len() {
        for j in i + 1..fields.len() {
            let (a, b) = (&fields[i], &fields[j]);
            let dt = (b.t - a.t).abs();
            ex_u = ex_u.max(l1_difference(&a.x, &a.u, &b.u) - 0.5 * m1.powi(3) * dt);
            ex_ux = ex_ux.max(l1_difference(&a.x, &a.ux, &b.ux) - m1.powi(3) * dt);
        }
    }
    if fields.len() > 1 {
        out.check(Check::at_most(&format!("{prefix}lipschitz_u_excess"), ex_u, TV_TOL));
        out.check(Check::at_most(&format!("{prefix}lipschitz_ux_excess"), ex_ux, TV_TOL));
    }
}

fn log_checks(out: &mut Output, trajectory: &Trajectory, l: f64) {
    let first = trajectory.entries[0].m_l1;
    let drift = trajectory
        .entries
        .iter()
        .map(|e| (e.m_l1 - first).abs() / first.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let pin = trajectory
        .entries
        .iter()
        .map(|e| (e.x_left + l).abs().max((e.x_right - l).abs()))
        .fold(0.0, f64::max);
    out.check(Check::at_most("mass_drift_relative", drift, MASS_DRIFT));
    out.check(Check::at_most("support_pinning", pin, PIN_TOL));
}

fn classical(cfg: &ScenarioConfig, m: &Momentum, svg: bool, out: &mut Output) -> mch_core::Result<()> {
    let t_end = cfg.t_end.expect("validated");
    let start = init_flow(m, cfg.nodes)?;
    let controls = StepControls {
        dt_max: cfg.dt_max,
        c_safe: cfg.c_safe,
        delta_stop: Some(cfg.delta_stop),
        record_labels: true,
        ..StepControls::default()
    };
    let ev = evolve(&start, t_end, &controls)?;
    out.file("trajectory.csv", ev.trajectory.to_csv());
    out.check(Check::flag("completed_without_blowup", ev.status == EvolveStatus::Completed));
    let m1 = m.m1_norm();
    let setup = start.setup().clone();
    let (mut u_max, mut ux_max, mut big_u_max) = (0.0_f64, 0.0_f64, 0.0_f64);
    for k in 0..ev.trajectory.labels.len() {
        let vp = velocity_profile(&state_at(&setup, &ev.trajectory, k)?)?;
        u_max = vp.u.iter().fold(u_max, |a, v| a.max(v.abs()));
        ux_max = vp.ux.iter().fold(ux_max, |a, v| a.max(v.abs()));
        big_u_max = vp.big_u.iter().fold(big_u_max, |a, v| a.max(v.abs()));
    }
    out.check(Check::at_most("max_abs_u", u_max, 0.5 * m1 + BOUND_TOL));
    out.check(Check::at_most("max_abs_ux", ux_max, 0.5 * m1 + BOUND_TOL));
    out.check(Check::at_most("max_abs_velocity", big_u_max, 0.5 * m1 * m1 + BOUND_TOL));
    log_checks(out, &ev.trajectory, m.support_radius());

    let grid = snapshot_grid(cfg, m);
    let mut fields = Vec::new();
    for (n, k) in cadence(ev.trajectory.labels.len(), cfg.snapshot_every).into_iter().enumerate() {
        let state = state_at(&setup, &ev.trajectory, k)?;
        let field = reconstruct(&state, &grid)?;
        out.file(format!("snapshot_{n:04}.csv"), field.to_csv());
        if svg {
            out.file(format!("snapshot_{n:04}.svg"), emit_svg(&frame(&field, state.labels(), &state.xxi)));
        }
        fields.push(field);
    }
    field_checks(out, "", &fields, m1);
    Ok(())
}

fn blowup_checks(out: &mut Output, run: &BlowupRun, m: &Momentum) {
    let r = &run.report;
    out.check(Check::at_least("t_max_vs_lower_bound", r.t_max, r.lower_bound - 1e-4));
    if let Some(ts) = r.t_star {
        out.check(Check::at_most("t_max_vs_t_star", r.t_max, ts + 1e-3));
    }
    out.check(Check::at_least("rate_fit_r_squared", r.rate_r_squared, 0.99));
    let f = r.criteria.fired;
    out.check(Check::flag("criterion_m_inf_growth", f.m_inf_growth));
    out.check(Check::flag("criterion_xxi_collapse", f.xxi_collapse));
    out.check(Check::flag("criterion_mux_integral", f.mux_integral));
    out.check(Check::flag("criterion_mux_inf", f.mux_inf));
    log_checks(out, &run.trajectory, m.support_radius());
}

fn final_frame(cfg: &ScenarioConfig, m: &Momentum, state: &FlowState) -> mch_core::Result<String> {
    let field = reconstruct(state, &snapshot_grid(cfg, m))?;
    Ok(emit_svg(&frame(&field, state.labels(), &state.xxi)))
}

fn blowup(cfg: &ScenarioConfig, m: &Momentum, svg: bool, out: &mut Output) -> mch_core::Result<()> {
    let run = match run_to_blowup(m, &blowup_options(cfg)) {
        Ok(run) => run,
        Err(e) => {
            out.check(Check::flag("blowup_detected", false));
            return Err(e);
        }
    };
    out.check(Check::flag("blowup_detected", true));
    out.file("blowup_report.json", to_json(&run.report));
    out.file("trajectory.csv", run.trajectory.to_csv());
    if svg {
        out.file("t_max.svg", final_frame(cfg, m, &run.state)?);
    }
    blowup_checks(out, &run, m);
    Ok(())
}

fn scan(cfg: &ScenarioConfig, m: &Momentum, out: &mut Output) -> mch_core::Result<()> {
    let eps = cfg.eps_list.as_ref().expect("validated");
    let rows = lifespan_scan(m, eps, &blowup_options(cfg))?;
    let mut csv = String::from("eps,t_max,scaled,lower,upper\n");
    for (k, r) in rows.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt17(r.eps),
            fmt17(r.t_max),
            fmt17(r.scaled),
            fmt17(r.lower),
            fmt17(r.upper)
        ));
        out.check(Check::at_least(&format!("scan_{k}_scaled_vs_lower"), r.scaled, r.lower - 1e-3));
        out.check(Check::at_most(&format!("scan_{k}_scaled_vs_upper"), r.scaled, r.upper + 1e-3));
    }
    out.file("scan.csv", csv);
    out.file("scan.json", to_json(&rows));
    Ok(())
}

#[derive(Serialize)]
struct IntervalRow {
    first: usize,
    last: usize,
    peakon: bool,
    constant_sign: bool,
    weight: Option<f64>,
    jump: Option<f64>,
}

fn peakon(cfg: &ScenarioConfig, m: &Momentum, svg: bool, out: &mut Output) -> mch_core::Result<()> {
    let opts = blowup_options(cfg);
    let datum = match &cfg.focus_window {
        Some(w) => focus_datum(m, (w[0], w[1]), cfg.focus_ramp, &opts, cfg.focus_passes)?,
        None => m.clone(),
    };
    let run = run_to_blowup(&datum, &opts)?;
    let threshold = cfg.collapse_threshold.unwrap_or(10.0 * cfg.delta_stop);
    let intervals = collapse_intervals(&run.state, threshold);
    let measure = limit_measure(&run.state, &intervals);
    let labels = run.state.labels();
    let mut rows = Vec::new();
    for iv in &intervals {
        let (weight, jump) = if iv.peakon {
            (
                Some(datum.partial_integral(labels[iv.first], labels[iv.last])),
                Some(peakon_jump(&run.state, iv)?),
            )
        } else {
            (None, None)
        };
        rows.push(IntervalRow {
            first: iv.first,
            last: iv.last,
            peakon: iv.peakon,
            constant_sign: iv.constant_sign,
            weight,
            jump,
        });
    }
    let m1 = datum.m1_norm();
    out.check(Check::at_most(
        "limit_mass_relative_error",
        (measure.total_mass() - m1).abs() / m1,
        0.02,
    ));
    for (k, row) in rows.iter().enumerate().filter(|(_, r)| r.peakon) {
        let (p, jump) = (row.weight.unwrap_or(0.0), row.jump.unwrap_or(0.0));
        out.check(Check::flag(&format!("atom_{k}_constant_sign"), row.constant_sign && p != 0.0));
        out.check(Check::at_most(
            &format!("atom_{k}_jump_relative_error"),
            (jump - p).abs() / p.abs().max(f64::MIN_POSITIVE),
            0.05,
        ));
    }
    out.file("blowup_report.json", to_json(&run.report));
    out.file("intervals.json", to_json(&rows));
    out.file("measure.json", to_json(&measure));
    if svg {
        out.file("t_max.svg", final_frame(cfg, &datum, &run.state)?);
    }
    Ok(())
}

/// Spacing ratios of consecutive particles, ordered by initial position.
fn spacing_ratios(initial: &ParticleEnsemble, now: &ParticleEnsemble) -> (Vec<f64>, Vec<f64>) {
    let mut order: Vec<usize> = (0..initial.len()).collect();
    order.sort_by(|&a, &b| initial.x[a].total_cmp(&initial.x[b]));
    let mut labels = Vec::new();
    let mut ratio = Vec::new();
    for w in order.windows(2) {
        let d0 = initial.x[w[1]] - initial.x[w[0]];
        if d0 > 0.0 {
            labels.push(0.5 * (initial.x[w[0]] + initial.x[w[1]]));
            ratio.push((now.x[w[1]] - now.x[w[0]]) / d0);
        }
    }
    (labels, ratio)
}

fn continuation(cfg: &ScenarioConfig, m: &Momentum, svg: bool, out: &mut Output) -> mch_core::Result<()> {
    let eps = cfg.epsilon.unwrap_or(0.05 * m.support_radius());
    let t_end = match cfg.t_end {
        Some(t) => t,
        None => {
            let run = run_to_blowup(m, &blowup_options(cfg))?;
            out.file("blowup_report.json", to_json(&run.report));
            2.0 * run.report.t_max
        }
    };
    let scheme = RegScheme::standard(eps)?;
    let ens = ParticleEnsemble::from_momentum(m, cfg.nodes, eps)?;
    let controls = RegControls {
        dt_max: cfg.dt_max,
        stride: cfg.snapshot_every,
        ..RegControls::default()
    };
    let traj = reg_evolve(&ens, &scheme, t_end, &controls)?;
    let m1 = m.m1_norm();
    let weight_drift = traj
        .bounds
        .iter()
        .map(|b| (b.m1 - m1).abs() / m1)
        .fold(0.0, f64::max);
    let vmax = traj.bounds.iter().map(|b| b.max_velocity).fold(0.0, f64::max);
    let umax = traj.bounds.iter().map(|b| b.max_u).fold(0.0, f64::max);
    let uxmax = traj.bounds.iter().map(|b| b.max_ux).fold(0.0, f64::max);
    out.check(Check::at_least("reached_t_end", traj.snapshots.last().map_or(0.0, |s| s.t), t_end * (1.0 - 1e-12)));
    out.check(Check::at_most("weight_drift_relative", weight_drift, 1e-12));
    out.check(Check::at_most("max_abs_velocity", vmax, 0.5 * m1 * m1 + BOUND_TOL));
    out.check(Check::at_most("max_abs_u", umax, 0.5 * m1 + BOUND_TOL));
    out.check(Check::at_most("max_abs_ux", uxmax, 0.5 * m1 + BOUND_TOL));

    let grid = snapshot_grid(cfg, m);
    let mut fields = Vec::new();
    for (n, snap) in traj.snapshots.iter().enumerate() {
        let field = reg_snapshot(snap, &scheme, &grid)?;
        out.file(format!("particles_{n:04}.csv"), snap.to_csv());
        out.file(format!("snapshot_{n:04}.csv"), field.to_csv());
        if svg {
            let (labels, ratio) = spacing_ratios(&ens, snap);
            out.file(format!("snapshot_{n:04}.svg"), emit_svg(&frame(&field, &labels, &ratio)));
        }
        fields.push(field);
    }
    field_checks(out, "", &fields, m1);
    Ok(())
}

fn test_functions(cfg: &ScenarioConfig, m: &Momentum, horizon: f64) -> mch_core::Result<Vec<TestFunction>> {
    let l = m.support_radius();
    let centers = cfg
        .phi_centers
        .clone()
        .unwrap_or_else(|| [-0.6, -0.3, 0.0, 0.3, 0.6].iter().map(|c| c * l).collect());
    let width = cfg.phi_width.unwrap_or(0.5 * l);
    centers
        .iter()
        .map(|&c| TestFunction::new(c, width, horizon, [1.0, 0.5, 0.0, 0.0]))
        .collect()
}

#[derive(Serialize)]
struct SweepFile<'a> {
    eps: &'a [f64],
    #[serde(rename = "E")]
    e: &'a [f64],
    slope: f64,
    monotone: bool,
    control_nodes: usize,
    control_relative_change: f64,
}

fn sweep(cfg: &ScenarioConfig, m: &Momentum, out: &mut Output) -> mch_core::Result<()> {
    let eps = cfg.eps_list.as_ref().expect("validated");
    let phis = test_functions(cfg, m, cfg.t_end.unwrap_or(0.5))?;
    let opts = SweepOptions {
        nodes: cfg.nodes,
        ..SweepOptions::default()
    };
    let result = consistency_sweep(m, eps, &phis, &opts)?;
    let finest = *eps.last().expect("validated");
    let control_nodes = 2 * cfg.nodes - 1;
    let refined = weak_defects(m, finest, &phis, &SweepOptions { nodes: control_nodes, ..opts })?;
    let refined_max = refined.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let base = *result.e.last().expect("validated");
    let change = (refined_max - base).abs() / base.max(f64::MIN_POSITIVE);
    out.check(Check::flag("defects_monotone", result.monotone));
    out.check(Check::at_least("consistency_slope", result.slope, 0.8));
    out.check(Check::at_most("particle_refinement_change", change, 0.1));
    out.file(
        "sweep.json",
        to_json(&SweepFile {
            eps: &result.eps,
            e: &result.e,
            slope: result.slope,
            monotone: result.monotone,
            control_nodes,
            control_relative_change: change,
        }),
    );
    Ok(())
}

#[derive(Serialize)]
struct WeakFile<'a> {
    method: &'static str,
    horizon: f64,
    phis: &'a [TestFunction],
    residuals: &'a [f64],
}

fn weak_check(cfg: &ScenarioConfig, m: &Momentum, out: &mut Output) -> mch_core::Result<()> {
    let (residuals, method, horizon, phis) = if m.has_atoms() {
        let horizon = cfg.t_end.unwrap_or(0.5);
        let phis = test_functions(cfg, m, horizon)?;
        let eps = cfg.epsilon.unwrap_or(0.05 * m.support_radius());
        let opts = SweepOptions {
            nodes: cfg.nodes,
            ..SweepOptions::default()
        };
        (weak_defects(m, eps, &phis, &opts)?, "regularized", horizon, phis)
    } else {
        let lower = 1.0 / (m.m_inf_norm() * m.m1_norm());
        let horizon = cfg.t_end.unwrap_or(0.5 * lower);
        let phis = test_functions(cfg, m, horizon)?;
        let start = init_flow(m, cfg.nodes)?;
        let controls = StepControls {
            dt_max: cfg.dt_max.min(horizon / 256.0),
            c_safe: cfg.c_safe,
            delta_stop: Some(cfg.delta_stop),
            record_labels: true,
            ..StepControls::default()
        };
        let ev = evolve(&start, horizon, &controls)?;
        out.check(Check::flag("completed_without_blowup", ev.status == EvolveStatus::Completed));
        let lo = phis.iter().map(|p| p.support().0).fold(f64::INFINITY, f64::min);
        let hi = phis.iter().map(|p| p.support().1).fold(f64::NEG_INFINITY, f64::max);
        let grid = uniform_grid(lo, hi, cfg.grid_points);
        let setup = start.setup().clone();
        let fields = (0..ev.trajectory.labels.len())
            .map(|k| reconstruct(&state_at(&setup, &ev.trajectory, k)?, &grid))
            .collect::<mch_core::Result<Vec<_>>>()?;
        let res = phis
            .iter()
            .map(|phi| weak_residual(&fields, phi, m))
            .collect::<mch_core::Result<Vec<_>>>()?;
        (res, "classical", horizon, phis)
    };
    for (k, r) in residuals.iter().enumerate() {
        out.check(Check::at_most(&format!("weak_residual_{k}"), r.abs(), cfg.weak_tol));
    }
    out.file(
        "weak.json",
        to_json(&WeakFile {
            method,
            horizon,
            phis: &phis,
            residuals: &residuals,
        }),
    );
    Ok(())
}

/// Directory that relative table paths in the config resolve against.
pub fn config_base(path: &Path) -> Option<PathBuf> {
    path.parent().map(Path::to_path_buf)
}
