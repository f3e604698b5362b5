//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::sync::Arc;

use mch_core::blowup::{
    collapse_intervals, focus_datum, lifespan_bounds, lifespan_scan, limit_measure, run_to_blowup,
    ux_rate_max, BlowupOptions, BlowupRun,
};
use mch_core::eulerian::{
    l1_difference, reconstruct, total_variation, uniform_grid, weak_residual, EulerianField,
    TestFunction,
};
use mch_core::flow::{
    evolve, init_flow, velocity_profile, xxi_consistency, FlowState, Lagrangian, StepControls,
    Trajectory,
};
use mch_core::kernel::{green, green_prime};
use mch_core::momentum::{build_momentum, Momentum, Profile, SampleTable};
use mch_core::regularized::{
    consistency_sweep, reg_evolve, reg_snapshot, weak_defects, ParticleEnsemble, RegControls,
    RegScheme, RegTrajectory, SweepOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const M1_BUMP4: f64 = 64.0 / 15.0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// Runs shared by several criteria.
struct Shared {
    bump4: Momentum,
    run: BlowupRun,
    continuation: RegTrajectory,
    scheme: RegScheme,
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn state_at(setup: &Arc<Lagrangian>, traj: &Trajectory, k: usize) -> FlowState {
    let r = &traj.labels[k];
    FlowState::from_parts(setup.clone(), r.t, r.x.clone(), r.xxi.clone()).unwrap()
}

/// `u`, `u_x` and `u² − u_x²` by the direct double sum with `G'(0) = 0`.
fn naive_velocity(x: &[f64], q: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&xi| {
            let (mut u, mut ux) = (0.0, 0.0);
            for (&xj, &qj) in x.iter().zip(q) {
                u += green(xi - xj) * qj;
                if xj != xi {
                    ux += green_prime(xi - xj) * qj;
                }
            }
            u * u - ux * ux
        })
        .collect()
}

fn c01() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20241);
    let n = 129;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let labels = uniform_grid(-1.0, 1.0, n);
        let mut vals: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        vals[0] = 0.0;
        vals[n - 1] = 0.0;
        let table = SampleTable::new(labels.clone(), vals).unwrap();
        let m = Momentum::new(1.0, Profile::Table(table), Vec::new()).unwrap();
        let setup = Arc::new(Lagrangian::new(&m, n).unwrap());
        let mut gaps: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.01..1.0)).collect();
        let total: f64 = gaps.iter().sum();
        let span = rng.gen_range(0.5..4.0);
        gaps.iter_mut().for_each(|g| *g *= span / total);
        let mut x = vec![-0.5 * span];
        for g in &gaps {
            x.push(x.last().unwrap() + g);
        }
        let xxi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        let state = FlowState::from_parts(setup.clone(), 0.0, x.clone(), xxi).unwrap();
        let fast = velocity_profile(&state).unwrap().big_u;
        let slow = naive_velocity(&x, setup.masses());
        let scale = slow.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let err = fast
            .iter()
            .zip(&slow)
            .fold(0.0_f64, |a, (f, s)| a.max((f - s).abs()));
        worst = worst.max(err / scale);
    }
    outcome(worst <= 1e-12, format!("max relative |U_fast - U_naive| = {worst:.3e} <= 1e-12 over 100 states"))
}

fn c02(s: &Shared) -> Outcome {
    let setup = s.run.state.setup().clone();
    let (mut u, mut ux, mut big) = (0.0_f64, 0.0_f64, 0.0_f64);
    for k in 0..s.run.trajectory.labels.len() {
        let vp = velocity_profile(&state_at(&setup, &s.run.trajectory, k)).unwrap();
        u = vp.u.iter().fold(u, |a, v| a.max(v.abs()));
        ux = vp.ux.iter().fold(ux, |a, v| a.max(v.abs()));
        big = vp.big_u.iter().fold(big, |a, v| a.max(v.abs()));
    }
    let excess = (u - 0.5 * M1_BUMP4)
        .max(ux - 0.5 * M1_BUMP4)
        .max(big - 0.5 * M1_BUMP4 * M1_BUMP4);
    outcome(
        excess <= 1e-9,
        format!(
            "max|u| = {u:.6}, max|u_x| = {ux:.6} (bound {:.6}), max|U| = {big:.6} (bound {:.6})",
            0.5 * M1_BUMP4,
            0.5 * M1_BUMP4 * M1_BUMP4
        ),
    )
}

fn c03(s: &Shared) -> Outcome {
    let horizon = 0.1;
    let fixed = |nodes: usize, dt: f64| {
        let start = init_flow(&s.bump4, nodes).unwrap();
        let controls = StepControls {
            dt_max: dt,
            c_safe: 1e12,
            delta_stop: None,
            record_labels: true,
            ..StepControls::default()
        };
        let ev = evolve(&start, horizon, &controls).unwrap();
        xxi_consistency(&ev.state, &ev.trajectory).unwrap()
    };
    let d: Vec<f64> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| fixed(129, dt).time_discrepancy)
        .collect();
    let p1 = order(d[0], d[1]);
    let p2 = order(d[1], d[2]);
    let coarse = fixed(129, 1e-3).label_discrepancy;
    let fine = fixed(257, 1e-3).label_discrepancy;
    let ps = order(coarse, fine);
    outcome(
        p1 >= 3.0 && p2 >= 3.0 && ps >= 1.5,
        format!(
            "time routes: discrepancies {:.2e}, {:.2e}, {:.2e} under dt halving, orders {p1:.2}, {p2:.2} (>= 3); \
             finite differences: {coarse:.2e} -> {fine:.2e} under label refinement, order {ps:.2}",
            d[0], d[1], d[2]
        ),
    )
}

fn c04(s: &Shared) -> Outcome {
    let t = s.run.report.t_max;
    let bound = 15.0 / 256.0 - 1e-4;
    outcome(t >= bound, format!("T_max = {t:.7} >= 15/256 - 1e-4 = {bound:.7}"))
}

fn witness_datum() -> Momentum {
    build_momentum("bump(c=10, w=0.1)").unwrap()
}

fn c05(s: &Shared) -> Outcome {
    // bump(4) is checked too whenever it carries a witness of its own
    let own = lifespan_bounds(&s.bump4, 257).unwrap().witness;
    let own_ok = own.as_ref().map_or(true, |w| s.run.report.t_max <= w.t_star + 1e-3);
    let own_note = match &own {
        Some(w) => format!("; bump(4) witness t* = {:.6}, T_max = {:.6}", w.t_star, s.run.report.t_max),
        None => "; bump(4) has no witness".to_string(),
    };
    let m = witness_datum();
    let bounds = lifespan_bounds(&m, 257).unwrap();
    let Some(w) = bounds.witness else {
        return outcome(false, "no witness label found".into());
    };
    let run = run_to_blowup(&m, &BlowupOptions::default()).unwrap();
    let t = run.report.t_max;
    let ok = own_ok && w.m0 > 0.0 && w.ux0 < 0.0 && t <= w.t_star + 1e-3;
    outcome(
        ok,
        format!(
            "witness at label {:.5} (m0 = {:.3}, u0' = {:.4}); T_max = {t:.6} <= t* + 1e-3 = {:.6}{own_note}",
            w.label,
            w.m0,
            w.ux0,
            w.t_star + 1e-3
        ),
    )
}

fn c06() -> Outcome {
    let m = witness_datum();
    let rows = lifespan_scan(&m, &[1.0, 2.0, 4.0], &BlowupOptions::default()).unwrap();
    let ok = rows.len() == 3 && rows.iter().all(|r| r.within(1e-3));
    let cells: Vec<String> = rows
        .iter()
        .map(|r| format!("eps={}: {:.6}", r.eps, r.scaled))
        .collect();
    outcome(
        ok,
        format!(
            "T_max(eps m0) eps^2 = [{}] within [{:.5}, {:.5}] +- 1e-3",
            cells.join(", "),
            rows[0].lower,
            rows[0].upper
        ),
    )
}

fn c07(s: &Shared) -> Outcome {
    let r = &s.run.report;
    outcome(
        r.rate_r_squared >= 0.99,
        format!(
            "R^2 = {:.6} over {} points (C = {:.4}) >= 0.99",
            r.rate_r_squared,
            r.rate_points,
            1.0 / r.rate_constant
        ),
    )
}

fn c08(s: &Shared) -> Outcome {
    let e = &s.run.trajectory.entries;
    let drift = e
        .iter()
        .map(|x| (x.m_l1 - e[0].m_l1).abs() / e[0].m_l1)
        .fold(0.0, f64::max);
    let intervals = collapse_intervals(&s.run.state, s.run.report.delta_stop);
    let measure = limit_measure(&s.run.state, &intervals);
    let total = measure.total_mass();
    let rel = (total - M1_BUMP4).abs() / M1_BUMP4;
    outcome(
        drift < 1e-6 && rel <= 0.02,
        format!(
            "int|m| drift {drift:.2e} < 1e-6; at T_max sum|p| + int|m1| = {total:.5} vs M1 = {M1_BUMP4:.5} ({:.2}% <= 2%)",
            100.0 * rel
        ),
    )
}

fn c09(s: &Shared) -> Outcome {
    let pin = s
        .run
        .trajectory
        .entries
        .iter()
        .map(|e| (e.x_left + 1.0).abs().max((e.x_right - 1.0).abs()))
        .fold(0.0, f64::max);
    outcome(pin < 1e-9, format!("max |X(+-L, t) -+ L| = {pin:.2e} < 1e-9 over {} logged times", s.run.trajectory.entries.len()))
}

fn c10() -> Outcome {
    let opts = BlowupOptions::default();
    let datum = focus_datum(&build_momentum("bump(4)").unwrap(), (0.36, 0.48), 0.03, &opts, 12).unwrap();
    let run = run_to_blowup(&datum, &opts).unwrap();
    let intervals = collapse_intervals(&run.state, 1e-3);
    let peakons: Vec<_> = intervals.iter().filter(|i| i.peakon).collect();
    if peakons.len() != 1 {
        return outcome(false, format!("expected one collapsed interval, found {}", peakons.len()));
    }
    let iv = peakons[0];
    let measure = limit_measure(&run.state, &intervals);
    let labels = run.state.labels();
    let p = datum.partial_integral(labels[iv.first], labels[iv.last]);
    let atom = measure.atoms[0].p;
    // u_x on either side of the interval, from the reconstruction one step before T_max
    let prev = &run.previous;
    let field = reconstruct(prev, &[prev.x[iv.first], prev.x[iv.last]]).unwrap();
    let jump = field.ux[0] - field.ux[1];
    let rel = (jump - p).abs() / p.abs();
    outcome(
        atom == p && rel <= 0.05,
        format!(
            "labels {}..{}: atom weight {atom:.6} == partial integral {p:.6}; u_x jump before T_max {jump:.6} ({:.2}% <= 5%)",
            iv.first,
            iv.last,
            100.0 * rel
        ),
    )
}

fn classical_fields(s: &Shared) -> Vec<EulerianField> {
    let setup = s.run.state.setup().clone();
    let grid = uniform_grid(-4.0, 4.0, 4001);
    let n = s.run.trajectory.labels.len();
    let mut idx: Vec<usize> = (0..n).step_by(5).collect();
    if idx.last() != Some(&(n - 1)) {
        idx.push(n - 1);
    }
    idx.iter()
        .map(|&k| reconstruct(&state_at(&setup, &s.run.trajectory, k), &grid).unwrap())
        .collect()
}

fn regularized_fields(s: &Shared) -> Vec<EulerianField> {
    let grid = uniform_grid(-4.0, 4.0, 4001);
    s.continuation
        .snapshots
        .iter()
        .map(|e| reg_snapshot(e, &s.scheme, &grid).unwrap())
        .collect()
}

fn c11(classical: &[EulerianField], regularized: &[EulerianField]) -> Outcome {
    let tv = |f: &[EulerianField], pick: fn(&EulerianField) -> &Vec<f64>| {
        f.iter().map(|e| total_variation(pick(e))).fold(0.0, f64::max)
    };
    let cu = tv(classical, |e| &e.u);
    let cux = tv(classical, |e| &e.ux);
    let ru = tv(regularized, |e| &e.u);
    let rux = tv(regularized, |e| &e.ux);
    let ok = cu.max(ru) <= M1_BUMP4 + 1e-6 && cux.max(rux) <= 2.0 * M1_BUMP4 + 1e-6;
    outcome(
        ok,
        format!(
            "classical TV(u) {cu:.5}, TV(u_x) {cux:.5}; regularized TV(u) {ru:.5}, TV(u_x) {rux:.5}; bounds {:.5}, {:.5}",
            M1_BUMP4,
            2.0 * M1_BUMP4
        ),
    )
}

fn lipschitz_excess(fields: &[EulerianField]) -> (f64, f64) {
    let m3 = M1_BUMP4.powi(3);
    let (mut a, mut b) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..fields.len() {
        for j in i + 1..fields.len() {
            let (f, g) = (&fields[i], &fields[j]);
            let dt = (g.t - f.t).abs();
            a = a.max(l1_difference(&f.x, &f.u, &g.u) - 0.5 * m3 * dt);
            b = b.max(l1_difference(&f.x, &f.ux, &g.ux) - m3 * dt);
        }
    }
    (a, b)
}

fn c12(classical: &[EulerianField], regularized: &[EulerianField]) -> Outcome {
    let (cu, cux) = lipschitz_excess(classical);
    let (ru, rux) = lipschitz_excess(regularized);
    let worst = cu.max(cux).max(ru).max(rux);
    outcome(
        worst <= 1e-6,
        format!(
            "largest excess over the Lipschitz bounds: classical u {cu:.3e}, u_x {cux:.3e}; regularized u {ru:.3e}, u_x {rux:.3e} (<= 1e-6)"
        ),
    )
}

fn c13(s: &Shared) -> Outcome {
    let rate = ux_rate_max(&s.run.trajectory);
    let bound = 0.5 * M1_BUMP4.powi(3);
    outcome(rate <= bound + 1e-6, format!("max |d/dt u_x(X)| = {rate:.4} <= M1^3/2 = {bound:.4}"))
}

fn c14() -> Outcome {
    let m = build_momentum("bump(c=3, w=0.5) + atoms(0.5:0.5; L=1)").unwrap();
    let phis: Vec<TestFunction> = [-0.6, -0.3, 0.0, 0.3, 0.6]
        .iter()
        .map(|&c| TestFunction::new(c, 0.5, 0.5, [1.0, 0.5, 0.0, 0.0]).unwrap())
        .collect();
    let eps = [0.2, 0.1, 0.05, 0.025];
    let opts = SweepOptions::default();
    let sweep = consistency_sweep(&m, &eps, &phis, &opts).unwrap();
    let refined = weak_defects(&m, 0.025, &phis, &SweepOptions { nodes: 2 * opts.nodes - 1, ..opts }).unwrap();
    let refined_max = refined.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let base = sweep.e[3];
    let change = (refined_max - base).abs() / base;
    let ok = (0.8..=1.2).contains(&sweep.slope) && change < 0.1;
    outcome(
        ok,
        format!(
            "max|E| = [{:.3e}, {:.3e}, {:.3e}, {:.3e}], slope {:.3} in [0.8, 1.2]; particle doubling changes |E| by {:.2e} (< 10%)",
            sweep.e[0], sweep.e[1], sweep.e[2], sweep.e[3], sweep.slope, change
        ),
    )
}

/// Weak residual of the exact solitary wave `u = G(x − t/6)` on grids of spacing `h`.
fn peakon_residual(h: f64, phi: &TestFunction) -> f64 {
    let (a, b) = (phi.support().0 - 0.1, phi.support().1 + 0.1);
    let nx = ((b - a) / h).round() as usize + 1;
    let grid = uniform_grid(a, b, nx);
    let nt = (phi.horizon / h).round() as usize + 1;
    let fields: Vec<EulerianField> = uniform_grid(0.0, phi.horizon, nt)
        .into_iter()
        .map(|t| {
            let c = t / 6.0;
            EulerianField {
                t,
                x: grid.clone(),
                u: grid.iter().map(|x| green(x - c)).collect(),
                ux: grid
                    .iter()
                    .map(|x| if *x == c { 0.0 } else { green_prime(x - c) })
                    .collect(),
                m: vec![0.0; grid.len()],
            }
        })
        .collect();
    let m0 = build_momentum("atoms(0:1; L=1)").unwrap();
    weak_residual(&fields, phi, &m0).unwrap()
}

fn c15() -> Outcome {
    let phis = [
        TestFunction::new(0.1, 0.7, 1.0, [1.0, 0.5, 0.0, 0.0]).unwrap(),
        TestFunction::new(-0.05, 0.5, 0.8, [1.0, -0.3, 0.2, 0.0]).unwrap(),
    ];
    let hs = [0.02, 0.01, 0.005, 0.0025];
    let r: Vec<f64> = hs
        .iter()
        .map(|&h| phis.iter().map(|p| peakon_residual(h, p).abs()).fold(0.0, f64::max))
        .collect();
    let slope = mch_core::regularized::loglog_slope(&hs, &r);
    let decreasing = r.windows(2).all(|w| w[1] < w[0]);
    outcome(
        decreasing && slope >= 1.0,
        format!(
            "residuals [{:.2e}, {:.2e}, {:.2e}, {:.2e}] for h = 0.02..0.0025, observed order {slope:.2} >= 1",
            r[0], r[1], r[2], r[3]
        ),
    )
}

fn c16(s: &Shared) -> Outcome {
    let traj = &s.continuation;
    let p0 = &traj.snapshots[0].p;
    let exact = traj.snapshots.iter().all(|e| &e.p == p0)
        && traj.bounds.iter().all(|b| b.m1 == traj.bounds[0].m1);
    let m1 = M1_BUMP4;
    let v = traj.bounds.iter().map(|b| b.max_velocity).fold(0.0, f64::max);
    let u = traj.bounds.iter().map(|b| b.max_u).fold(0.0, f64::max);
    let ux = traj.bounds.iter().map(|b| b.max_ux).fold(0.0, f64::max);
    let end = traj.snapshots.last().unwrap().t;
    let target = 2.0 * s.run.report.t_max;
    let ok = exact
        && (end - target).abs() <= 1e-12 * target
        && (traj.bounds[0].m1 - m1).abs() <= 1e-12 * m1
        && v <= 0.5 * m1 * m1 + 1e-9
        && u <= 0.5 * m1 + 1e-9
        && ux <= 0.5 * m1 + 1e-9;
    outcome(
        ok,
        format!(
            "reached t = {end:.6} = 2 T_max in {} steps; weights unchanged: {exact}; max|U| {v:.4} <= {:.4}, max|u| {u:.4}, max|u_x| {ux:.4} <= {:.4}",
            traj.bounds.len() - 1,
            0.5 * m1 * m1,
            0.5 * m1
        ),
    )
}

fn main() -> ExitCode {
    let bump4 = build_momentum("bump(4)").unwrap();
    let run = run_to_blowup(&bump4, &BlowupOptions::default()).unwrap();
    let eps = 0.05;
    let scheme = RegScheme::standard(eps).unwrap();
    let ens = ParticleEnsemble::from_momentum(&bump4, 257, eps).unwrap();
    let continuation = reg_evolve(
        &ens,
        &scheme,
        2.0 * run.report.t_max,
        &RegControls {
            stride: 10,
            ..RegControls::default()
        },
    )
    .unwrap();
    let shared = Shared {
        bump4,
        run,
        continuation,
        scheme,
    };
    let classical = classical_fields(&shared);
    let regularized = regularized_fields(&shared);

    let results: Vec<(&str, Outcome)> = vec![
        ("velocity oracle equivalence", c01()),
        ("a-priori bounds", c02(&shared)),
        ("X_xi three-formula consistency", c03(&shared)),
        ("lifespan lower bound", c04(&shared)),
        ("blow-up upper bound", c05(&shared)),
        ("scaling law", c06()),
        ("blow-up rate", c07(&shared)),
        ("conservation", c08(&shared)),
        ("support pinning", c09(&shared)),
        ("peakon weight", c10()),
        ("TV bounds", c11(&classical, &regularized)),
        ("time Lipschitz", c12(&classical, &regularized)),
        ("u_x rate bound", c13(&shared)),
        ("weak consistency", c14()),
        ("weak residual sanity", c15()),
        ("continuation", c16(&shared)),
    ];
    let mut failed = 0;
    for (k, (title, o)) in results.iter().enumerate() {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag} [{:02}] {title}: {}", k + 1, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
