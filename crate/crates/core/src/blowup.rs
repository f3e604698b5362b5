//! Lifespan bounds, blow-up detection and the limit measure at the blow-up time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eulerian::KernelSum;
use crate::flow::{
    advance, evolve, init_flow, velocity_profile, EvolveStatus, FlowState, StepControls,
    Trajectory,
};
use crate::momentum::{Momentum, Profile, SampleTable};
use crate::quad::integrate_samples;
use crate::{Error, Result};

/// `1/(M_∞ M₁)`.
pub fn lifespan_lower_bound(m_inf: f64, m1: f64) -> f64 {
    1.0 / (m_inf * m1)
}

/// Roots `(t*, t_*)` of `½M₁³t² + 2 sign(m₀) u₀′ t + 1/|m₀|` when the blow-up
/// condition `−sign(m₀) u₀′ > sqrt(M₁³/(2|m₀|))` holds.
pub fn witness_roots(m1: f64, m0: f64, ux0: f64) -> Option<(f64, f64)> {
    if m0 == 0.0 {
        return None;
    }
    let a = -m0.signum() * ux0;
    let threshold = m1.powi(3) / (2.0 * m0.abs());
    if !(a > 0.0 && a * a > threshold) {
        return None;
    }
    let root = (a * a - threshold).sqrt();
    let scale = 2.0 / m1.powi(3);
    Some((scale * (a - root), scale * (a + root)))
}

/// `½M₁³t² + 2 sign(m₀) u₀′ t + 1/|m₀|`.
pub fn witness_polynomial(m1: f64, m0: f64, ux0: f64, t: f64) -> f64 {
    0.5 * m1.powi(3) * t * t + 2.0 * m0.signum() * ux0 * t + 1.0 / m0.abs()
}

/// A label satisfying the blow-up condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub index: usize,
    pub label: f64,
    pub m0: f64,
    pub ux0: f64,
    pub t_star: f64,
    pub t_sub_star: f64,
    /// `C = −sign(m₀)u₀′ + sqrt(u₀′² − M₁³/(2|m₀|))`, so that `½M₁³t_* = C`.
    pub rate_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanBounds {
    pub m1: f64,
    pub m_inf: f64,
    pub lower: f64,
    pub t_star: Option<f64>,
    pub t_sub_star: Option<f64>,
    pub witness_label: Option<f64>,
    pub witness: Option<Witness>,
}

/// Lower bound plus the best witness label on an `nodes`-point grid, with `u₀′`
/// from the flow velocity profile at `t = 0`.
pub fn lifespan_bounds(m: &Momentum, nodes: usize) -> Result<LifespanBounds> {
    let m1 = m.m1_norm();
    let m_inf = m.m_inf_norm();
    let mut witness: Option<Witness> = None;
    if !m.has_atoms() && m_inf > 0.0 {
        let state = init_flow(m, nodes)?;
        let profile = velocity_profile(&state)?;
        let labels = state.labels();
        for (j, (&m0, &ux0)) in state.setup().m0().iter().zip(&profile.ux).enumerate() {
            if let Some((t_star, t_sub_star)) = witness_roots(m1, m0, ux0) {
                if witness.map_or(true, |w| t_star < w.t_star) {
                    witness = Some(Witness {
                        index: j,
                        label: labels[j],
                        m0,
                        ux0,
                        t_star,
                        t_sub_star,
                        rate_constant: 0.5 * m1.powi(3) * t_sub_star,
                    });
                }
            }
        }
    }
    Ok(LifespanBounds {
        m1,
        m_inf,
        lower: if m_inf > 0.0 {
            lifespan_lower_bound(m_inf, m1)
        } else {
            f64::INFINITY
        },
        t_star: witness.map(|w| w.t_star),
        t_sub_star: witness.map(|w| w.t_sub_star),
        witness_label: witness.map(|w| w.label),
        witness,
    })
}

/// Run parameters for [`run_to_blowup`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupOptions {
    pub nodes: usize,
    pub delta_stop: f64,
    pub t_end: f64,
    pub dt_max: f64,
    pub c_safe: f64,
}

impl Default for BlowupOptions {
    fn default() -> Self {
        Self {
            nodes: 257,
            delta_stop: 1e-4,
            t_end: 10.0,
            dt_max: 1e-2,
            c_safe: 0.1,
        }
    }
}

/// Final values of the discrete stand-ins for the six equivalent blow-up criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionDiagnostics {
    /// (i) `‖m‖_∞` at `t = 0` and its maximum over the log.
    pub m_inf_initial: f64,
    pub m_inf_max: f64,
    /// (ii) `min X_ξ` over labels and `min ΔX/Δξ` over cells at the final state.
    pub min_xxi: f64,
    pub min_cell_ratio: f64,
    /// (iii) `min_ξ ∫₀ᵗ (m u_x)(X(ξ,s),s) ds` by time quadrature of the log.
    pub min_mux_integral: f64,
    /// (iv) `min m u_x` at `t = 0` and over the final decade of the log.
    pub mux_initial_min: f64,
    pub mux_final_min: f64,
    /// (v) discrete `‖m‖_{W^{1,1}}` at `t = 0` and at the final state.
    pub w11_initial: f64,
    pub w11_final: f64,
    /// (vi) `∫₀ᵗ ‖m‖_∞ ds`.
    pub m_inf_time_integral: f64,
    pub fired: CriteriaFired,
}

/// Whether each proxy crossed its desk-scale threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriteriaFired {
    /// `max ‖m‖_∞ > max(10 M_∞, 10/M_∞)`.
    pub m_inf_growth: bool,
    /// `min X_ξ < δ`.
    pub xxi_collapse: bool,
    /// `min ∫ m u_x < ln(δ)/2`.
    pub mux_integral: bool,
    /// `|min m u_x|` over the final decade exceeds 10 times its initial value.
    pub mux_inf: bool,
}

impl CriteriaFired {
    pub fn all(&self) -> bool {
        self.m_inf_growth && self.xxi_collapse && self.mux_integral && self.mux_inf
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub t_max: f64,
    pub lower_bound: f64,
    pub t_star: Option<f64>,
    pub t_sub_star: Option<f64>,
    pub witness_label: Option<f64>,
    pub colliding_labels: Vec<usize>,
    /// Slope `C` of the affine least-squares fit `1/‖m‖_∞ ≈ C(T_max − t) + b`.
    pub rate_constant: f64,
    pub rate_intercept: f64,
    pub rate_r_squared: f64,
    pub rate_points: usize,
    /// `C` of the analytic rate bound when a witness exists.
    pub analytic_rate_constant: Option<f64>,
    pub nodes: usize,
    pub delta_stop: f64,
    pub steps: usize,
    pub criteria: CriterionDiagnostics,
}

/// Output of [`run_to_blowup`]: the report plus the states around the crossing.
#[derive(Debug, Clone)]
pub struct BlowupRun {
    pub report: BlowupReport,
    pub bounds: LifespanBounds,
    /// State at the refined crossing time.
    pub state: FlowState,
    /// Last state of the log before the crossing.
    pub previous: FlowState,
    pub trajectory: Trajectory,
}

/// Evolves until `min(X_ξ, ΔX/Δξ) < δ`, refines the crossing by bisection on the last
/// step and fills the report.
pub fn run_to_blowup(m: &Momentum, opts: &BlowupOptions) -> Result<BlowupRun> {
    if !(opts.delta_stop > 0.0 && opts.delta_stop <= 0.1) {
        return Err(Error::InvalidParameter(format!(
            "deltaStop must lie in (0, 0.1], got {}",
            opts.delta_stop
        )));
    }
    let bounds = lifespan_bounds(m, opts.nodes)?;
    let start = init_flow(m, opts.nodes)?;
    let controls = StepControls {
        dt_max: opts.dt_max,
        c_safe: opts.c_safe,
        delta_stop: Some(opts.delta_stop),
        record_labels: true,
        ..StepControls::default()
    };
    let evolution = evolve(&start, opts.t_end, &controls)?;
    if evolution.status != EvolveStatus::BlowupDetected {
        return Err(Error::NoBlowup {
            t_end: opts.t_end,
            min_xxi: evolution.state.compression(),
        });
    }
    let previous = evolution
        .previous
        .expect("blow-up detection keeps the last state above threshold");
    let state = bisect_crossing(&previous, &evolution.state, opts.delta_stop)?;
    let mut trajectory = evolution.trajectory;
    trajectory.entries.pop();
    trajectory.labels.pop();
    trajectory.record(&state, true)?;

    let t_max = state.t;
    let fit = rate_fit(&trajectory, t_max);
    let criteria = criterion_diagnostics(&start, &state, &trajectory, opts.delta_stop, m)?;
    let colliding_labels = (0..state.len())
        .filter(|&j| state.xxi[j] < opts.delta_stop)
        .collect();
    let report = BlowupReport {
        t_max,
        lower_bound: bounds.lower,
        t_star: bounds.t_star,
        t_sub_star: bounds.t_sub_star,
        witness_label: bounds.witness_label,
        colliding_labels,
        rate_constant: fit.slope,
        rate_intercept: fit.intercept,
        rate_r_squared: fit.r_squared,
        rate_points: fit.points,
        analytic_rate_constant: bounds.witness.map(|w| w.rate_constant),
        nodes: opts.nodes,
        delta_stop: opts.delta_stop,
        steps: trajectory.entries.len() - 1,
        criteria,
    };
    Ok(BlowupRun {
        report,
        bounds,
        state,
        previous,
        trajectory,
    })
}

/// Bisection on the step length from `above` until the crossing of `delta` is
/// bracketed to `1e-6` relative in time.
fn bisect_crossing(above: &FlowState, below: &FlowState, delta: f64) -> Result<FlowState> {
    let mut lo = 0.0;
    let mut hi = below.t - above.t;
    let mut best = below.clone();
    let tol = 1e-6 * below.t.abs().max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match advance(above, mid) {
            Ok(s) if s.compression() >= delta && s.min_xxi() > 0.0 => lo = mid,
            Ok(s) => {
                hi = mid;
                best = s;
            }
            Err(Error::NonMonotone { .. }) => hi = mid,
            Err(e) => return Err(e),
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LineFit {
    slope: f64,
    intercept: f64,
    r_squared: f64,
    points: usize,
}

/// Affine least squares of `1/‖m‖_∞` against `T − t` over the final decade of
/// `‖m‖_∞` growth.
fn rate_fit(trajectory: &Trajectory, t_max: f64) -> LineFit {
    let last = trajectory.entries.last().map_or(0.0, |e| e.m_inf);
    let pts: Vec<(f64, f64)> = trajectory
        .entries
        .iter()
        .filter(|e| e.m_inf >= 0.1 * last)
        .map(|e| (t_max - e.t, 1.0 / e.m_inf))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 3 {
        return LineFit {
            slope: f64::NAN,
            intercept: f64::NAN,
            r_squared: f64::NAN,
            points: pts.len(),
        };
    }
    let sx: f64 = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let sy: f64 = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - sx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - sx) * (p.1 - sy)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - sy).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = sy - slope * sx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    LineFit {
        slope,
        intercept,
        r_squared: 1.0 - ss_res / syy,
        points: pts.len(),
    }
}

/// `Σ|m_j| ΔX` (trapezoid) plus `Σ|m_{j+1} − m_j|` along the flow.
fn w11_norm(state: &FlowState) -> f64 {
    let m = state.momentum_along_flow();
    m.windows(2)
        .zip(state.x.windows(2))
        .map(|(mv, x)| 0.5 * (mv[0].abs() + mv[1].abs()) * (x[1] - x[0]) + (mv[1] - mv[0]).abs())
        .sum()
}

fn criterion_diagnostics(
    start: &FlowState,
    state: &FlowState,
    trajectory: &Trajectory,
    delta: f64,
    m: &Momentum,
) -> Result<CriterionDiagnostics> {
    let entries = &trajectory.entries;
    let m_inf_initial = entries[0].m_inf;
    let m_inf_max = entries.iter().fold(0.0_f64, |a, e| a.max(e.m_inf));
    let last = entries.last().map_or(0.0, |e| e.m_inf);
    let mux_initial_min = entries[0].min_mux;
    let mux_final_min = entries
        .iter()
        .filter(|e| e.m_inf >= 0.1 * last)
        .fold(f64::INFINITY, |a, e| a.min(e.min_mux));
    let times: Vec<f64> = entries.iter().map(|e| e.t).collect();
    let minf: Vec<f64> = entries.iter().map(|e| e.m_inf).collect();
    let m_inf_time_integral = integrate_samples(&times, &minf);

    let records = &trajectory.labels;
    let rec_times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let m0 = state.setup().m0();
    let min_mux_integral = (0..state.len())
        .map(|j| {
            let mux: Vec<f64> = records.iter().map(|r| m0[j] / r.xxi[j] * r.ux[j]).collect();
            integrate_samples(&rec_times, &mux)
        })
        .fold(f64::INFINITY, f64::min);
    let min_xxi = state.min_xxi();
    let min_cell_ratio = state
        .cell_ratios()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let big = m.m_inf_norm();
    let fired = CriteriaFired {
        m_inf_growth: m_inf_max > (10.0 * big).max(10.0 / big),
        xxi_collapse: min_xxi.min(min_cell_ratio) < delta,
        mux_integral: min_mux_integral < 0.5 * delta.ln(),
        mux_inf: mux_final_min < -10.0 * mux_initial_min.abs(),
    };
    Ok(CriterionDiagnostics {
        m_inf_initial,
        m_inf_max,
        min_xxi,
        min_cell_ratio,
        min_mux_integral,
        mux_initial_min,
        mux_final_min,
        w11_initial: w11_norm(start),
        w11_final: w11_norm(state),
        m_inf_time_integral,
        fired,
    })
}

/// `max |u_x(X(ξ, t_{k+1})) − u_x(X(ξ, t_k))| / (t_{k+1} − t_k)` over labels and logged steps.
pub fn ux_rate_max(trajectory: &Trajectory) -> f64 {
    trajectory
        .labels
        .windows(2)
        .map(|w| {
            let dt = w[1].t - w[0].t;
            w[0].ux
                .iter()
                .zip(&w[1].ux)
                .map(|(a, b)| (b - a).abs() / dt)
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Largest excess of `min X_ξ` over `C m₀(ξ₀)(t* − t)` on the final decade; at most
/// zero when the Lagrangian rate bound holds.
pub fn lagrangian_rate_excess(run: &BlowupRun) -> Option<f64> {
    let w = run.bounds.witness?;
    let last = run.trajectory.entries.last()?.m_inf;
    Some(
        run.trajectory
            .entries
            .iter()
            .filter(|e| e.m_inf >= 0.1 * last)
            .map(|e| e.min_xxi - w.rate_constant * w.m0.abs() * (w.t_star - e.t))
            .fold(f64::NEG_INFINITY, f64::max),
    )
}

/// Maximal run of consecutive labels with `X_ξ` below the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollapseInterval {
    pub first: usize,
    pub last: usize,
    /// Multi-label runs are peakon candidates; single labels are only flagged.
    pub peakon: bool,
    /// `m₀` keeps one strict sign over the run.
    pub constant_sign: bool,
}

impl CollapseInterval {
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

pub fn collapse_intervals(state: &FlowState, threshold: f64) -> Vec<CollapseInterval> {
    let m0 = state.setup().m0();
    let mut out = Vec::new();
    let mut j = 0;
    let n = state.len();
    while j < n {
        if state.xxi[j] < threshold {
            let first = j;
            while j + 1 < n && state.xxi[j + 1] < threshold {
                j += 1;
            }
            let last = j;
            let run = &m0[first..=last];
            let constant_sign = run.iter().all(|&v| v > 0.0) || run.iter().all(|&v| v < 0.0);
            out.push(CollapseInterval {
                first,
                last,
                peakon: last > first,
                constant_sign,
            });
        }
        j += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureAtom {
    pub x: f64,
    pub p: f64,
    #[serde(skip)]
    pub first_label: usize,
    #[serde(skip)]
    pub last_label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySample {
    pub x: f64,
    pub m: f64,
    #[serde(skip)]
    pub label: usize,
}

/// `m₁ + Σ pᵢ δ(x − xᵢ)` at the blow-up time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSolution {
    pub atoms: Vec<MeasureAtom>,
    pub density: Vec<DensitySample>,
}

impl MeasureSolution {
    /// `∫|m₁| dx` over cells whose two labels both survive.
    ///
    /// Same-sign cells use the harmonic mean of the end values, which is exact when
    /// `1/m = X_ξ/m₀` is linear across the cell; sign changes fall back to the trapezoid.
    pub fn density_l1(&self) -> f64 {
        self.density
            .windows(2)
            .filter(|w| w[1].label == w[0].label + 1)
            .map(|w| {
                let (a, b) = (w[0].m.abs(), w[1].m.abs());
                let dx = w[1].x - w[0].x;
                if w[0].m * w[1].m > 0.0 {
                    2.0 * a * b / (a + b) * dx
                } else {
                    0.5 * (a + b) * dx
                }
            })
            .sum()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.p.abs()).sum()
    }

    /// `Σ|pᵢ| + ∫|m₁|`.
    pub fn total_mass(&self) -> f64 {
        self.atom_mass() + self.density_l1()
    }
}

/// Atoms from the multi-label intervals, density from every label outside all intervals.
pub fn limit_measure(state: &FlowState, intervals: &[CollapseInterval]) -> MeasureSolution {
    let labels = state.labels();
    let momentum = state.setup().momentum();
    let atoms = intervals
        .iter()
        .filter(|iv| iv.peakon)
        .map(|iv| MeasureAtom {
            x: 0.5 * (state.x[iv.first] + state.x[iv.last]),
            p: momentum.partial_integral(labels[iv.first], labels[iv.last]),
            first_label: iv.first,
            last_label: iv.last,
        })
        .collect();
    let mut collapsed = vec![false; state.len()];
    for iv in intervals {
        collapsed[iv.first..=iv.last].iter_mut().for_each(|c| *c = true);
    }
    let m = state.momentum_along_flow();
    let density = (0..state.len())
        .filter(|&j| !collapsed[j])
        .map(|j| DensitySample {
            x: state.x[j],
            m: m[j],
            label: j,
        })
        .collect();
    MeasureSolution { atoms, density }
}

/// `u_x(X(ξ₁)) − u_x(X(ξ₂))` across the image of a label interval, from the Eulerian
/// point-mass field with principal values at the two end particles.
pub fn peakon_jump(state: &FlowState, interval: &CollapseInterval) -> Result<f64> {
    let field = KernelSum::new(&state.x, state.setup().masses())?;
    let (_, left) = field.eval(state.x[interval.first]);
    let (_, right) = field.eval(state.x[interval.last]);
    Ok(left - right)
}

/// Tunes `base` on the label window `[a, b]` so that the whole window reaches
/// `X_ξ = 0` at one time.
///
/// With `J(ξ) = ∫₀ᵀ u_x ds`, the relation `X_ξ = 1 + 2m₀J` says the choice
/// `m₀ = −1/(2J)` collapses every label at `T` simultaneously. Each pass runs to the
/// detection time, reads `X_ξ(T)` (the smaller of the nodal value and the adjacent
/// cell ratios) and rescales `m₀` by `1/(1 − χ X_ξ(T))`, where `χ` is 1 on `[a, b]` and
/// falls smoothly to 0 over `ramp` on either side.
pub fn focus_datum(
    base: &Momentum,
    window: (f64, f64),
    ramp: f64,
    opts: &BlowupOptions,
    passes: usize,
) -> Result<Momentum> {
    let (a, b) = window;
    if !(b > a && ramp > 0.0) {
        return Err(Error::InvalidParameter(
            "focus window must be non-empty with a positive ramp".into(),
        ));
    }
    let chi = |x: f64| {
        let s = if x < a {
            (x - (a - ramp)) / ramp
        } else if x > b {
            (b + ramp - x) / ramp
        } else {
            1.0
        };
        let s = s.clamp(0.0, 1.0);
        s * s * (3.0 - 2.0 * s)
    };
    let controls = StepControls {
        dt_max: opts.dt_max,
        c_safe: opts.c_safe,
        delta_stop: Some(opts.delta_stop),
        record_labels: false,
        ..StepControls::default()
    };
    let mut current = base.clone();
    for _ in 0..passes {
        let start = init_flow(&current, opts.nodes)?;
        let ev = evolve(&start, opts.t_end, &controls)?;
        if ev.status != EvolveStatus::BlowupDetected {
            return Err(Error::NoBlowup {
                t_end: opts.t_end,
                min_xxi: ev.state.compression(),
            });
        }
        let st = &ev.state;
        let cells = st.cell_ratios();
        let labels = st.labels();
        let m0 = st.setup().m0();
        let values: Vec<f64> = (0..st.len())
            .map(|j| {
                let mut eff = st.xxi[j];
                if j > 0 {
                    eff = eff.min(cells[j - 1]);
                }
                if j < cells.len() {
                    eff = eff.min(cells[j]);
                }
                m0[j] / (1.0 - chi(labels[j]) * eff.clamp(0.0, 0.5))
            })
            .collect();
        let table = SampleTable::new(labels.to_vec(), values)?;
        current = Momentum::new(base.support_radius(), Profile::Table(table), Vec::new())?;
    }
    Ok(current)
}

/// One row of a lifespan scan over scaled data `ε m₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub eps: f64,
    pub t_max: f64,
    /// `T_max(ε m₀)·ε²`.
    pub scaled: f64,
    /// `1/(M_∞M₁)` and `1/M₁²` of the unscaled data.
    pub lower: f64,
    pub upper: f64,
}

impl ScanRow {
    pub fn within(&self, tol: f64) -> bool {
        self.scaled >= self.lower - tol && self.scaled <= self.upper + tol
    }
}

/// Runs [`run_to_blowup`] on `ε m₀` for every `ε` concurrently.
pub fn lifespan_scan(m: &Momentum, eps: &[f64], opts: &BlowupOptions) -> Result<Vec<ScanRow>> {
    let lower = lifespan_lower_bound(m.m_inf_norm(), m.m1_norm());
    let upper = 1.0 / m.m1_norm().powi(2);
    eps.par_iter()
        .map(|&e| {
            let scaled = m.scale(e)?;
            let run_opts = BlowupOptions {
                t_end: opts.t_end / (e * e),
                dt_max: opts.dt_max / (e * e),
                ..*opts
            };
            let run = run_to_blowup(&scaled, &run_opts)?;
            Ok(ScanRow {
                eps: e,
                t_max: run.report.t_max,
                scaled: run.report.t_max * e * e,
                lower,
                upper,
            })
        })
        .collect()
}
