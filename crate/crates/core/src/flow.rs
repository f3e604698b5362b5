//! Classical characteristic solver.
//!
//! Labels `ξ_j` carry the flow map `X(ξ_j, t)` and its label derivative
//! `X_ξ(ξ_j, t)`. The velocity `U = u² − u_x²` along the flow is evaluated in O(N)
//! with the product form `U = 4·L·R`, where `L` and `R` are the kernel integrals over
//! the labels left and right of `ξ`; both follow from one forward and one backward
//! exponential recursion.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::momentum::{LabelGrid, Momentum, SignClass};
use crate::quad::integrate_samples;
use crate::{Error, Result};

/// Label grid plus the initial momentum sampled on it. Shared by all states of a run.
#[derive(Debug, Clone)]
pub struct Lagrangian {
    momentum: Momentum,
    grid: LabelGrid,
    m0: Vec<f64>,
    mass: Vec<f64>,
    signs: Vec<SignClass>,
}

impl Lagrangian {
    pub fn new(momentum: &Momentum, nodes: usize) -> Result<Self> {
        if nodes < 33 {
            return Err(Error::InvalidParameter(format!(
                "label count must be at least 33, got {nodes}"
            )));
        }
        if momentum.has_atoms() {
            return Err(Error::InvalidParameter(
                "the classical flow takes density-only momenta; use the regularized scheme for atoms"
                    .into(),
            ));
        }
        let grid = LabelGrid::uniform(momentum.support_radius(), nodes)?;
        let m0: Vec<f64> = grid.nodes().iter().map(|&x| momentum.density(x)).collect();
        let mass = m0.iter().zip(grid.weights()).map(|(m, w)| m * w).collect();
        let signs = m0.iter().map(|&m| SignClass::of(m)).collect();
        Ok(Self {
            momentum: momentum.clone(),
            grid,
            m0,
            mass,
            signs,
        })
    }

    pub fn momentum(&self) -> &Momentum {
        &self.momentum
    }

    pub fn grid(&self) -> &LabelGrid {
        &self.grid
    }

    /// `m₀(ξ_j)`.
    pub fn m0(&self) -> &[f64] {
        &self.m0
    }

    /// Quadrature masses `w_j·m₀(ξ_j)`.
    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn signs(&self) -> &[SignClass] {
        &self.signs
    }

    pub fn m1_norm(&self) -> f64 {
        self.momentum.m1_norm()
    }

    pub fn len(&self) -> usize {
        self.m0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m0.is_empty()
    }
}

/// Snapshot `(t, X, X_ξ)` of the characteristic flow.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub x: Vec<f64>,
    pub xxi: Vec<f64>,
    setup: Arc<Lagrangian>,
}

impl FlowState {
    /// State with explicit flow data on an existing setup.
    pub fn from_parts(setup: Arc<Lagrangian>, t: f64, x: Vec<f64>, xxi: Vec<f64>) -> Result<Self> {
        if x.len() != setup.len() || xxi.len() != setup.len() {
            return Err(Error::InvalidParameter(format!(
                "flow arrays have lengths {}/{}, expected {}",
                x.len(),
                xxi.len(),
                setup.len()
            )));
        }
        Ok(Self { t, x, xxi, setup })
    }

    pub fn setup(&self) -> &Arc<Lagrangian> {
        &self.setup
    }

    pub fn labels(&self) -> &[f64] {
        self.setup.grid.nodes()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn min_xxi(&self) -> f64 {
        self.xxi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Cell compression `(X_{j+1} − X_j)/(ξ_{j+1} − ξ_j)`, the difference-quotient route to `X_ξ`.
    pub fn cell_ratios(&self) -> Vec<f64> {
        let labels = self.labels();
        self.x
            .windows(2)
            .zip(labels.windows(2))
            .map(|(x, l)| (x[1] - x[0]) / (l[1] - l[0]))
            .collect()
    }

    /// `min(min_j X_ξ, min_j cell ratio)`: collapse seen by either representation.
    pub fn compression(&self) -> f64 {
        self.cell_ratios()
            .into_iter()
            .fold(self.min_xxi(), f64::min)
    }

    /// Eulerian momentum along the flow, `m(X_j) = m₀(ξ_j)/X_ξ(ξ_j)`.
    pub fn momentum_along_flow(&self) -> Vec<f64> {
        self.setup
            .m0
            .iter()
            .zip(&self.xxi)
            .map(|(m, j)| m / j)
            .collect()
    }

    /// `max_j |m₀(ξ_j)/X_ξ(ξ_j)|`.
    pub fn m_inf(&self) -> f64 {
        self.momentum_along_flow()
            .iter()
            .fold(0.0, |acc, m| acc.max(m.abs()))
    }

    /// First label where strict monotonicity fails, if any.
    pub fn monotonicity_defect(&self) -> Option<usize> {
        self.x.windows(2).position(|w| !(w[1] > w[0])).map(|i| i + 1)
    }

    fn check_monotone(&self) -> Result<()> {
        match self.monotonicity_defect() {
            Some(index) => Err(Error::NonMonotone { index, t: self.t }),
            None => Ok(()),
        }
    }
}

/// `X(ξ, 0) = ξ`, `X_ξ ≡ 1`.
pub fn init_flow(momentum: &Momentum, nodes: usize) -> Result<FlowState> {
    let setup = Arc::new(Lagrangian::new(momentum, nodes)?);
    let x = setup.grid.nodes().to_vec();
    let xxi = vec![1.0; x.len()];
    Ok(FlowState {
        t: 0.0,
        x,
        xxi,
        setup,
    })
}

/// Exponentially weighted partial sums over a monotone particle sequence:
/// `left[i] = Σ_{j<i} q_j e^{-(X_i - X_j)}` and `right[i] = Σ_{j>i} q_j e^{-(X_j - X_i)}`.
///
/// Built by one forward and one backward recursion, so no exponential can overflow.
#[derive(Debug, Clone)]
pub struct ExpSums {
    left: Vec<f64>,
    right: Vec<f64>,
}

impl ExpSums {
    pub fn new(x: &[f64], q: &[f64]) -> Self {
        let n = x.len();
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        for i in 1..n {
            left[i] = (-(x[i] - x[i - 1])).exp() * (left[i - 1] + q[i - 1]);
        }
        for i in (0..n.saturating_sub(1)).rev() {
            right[i] = (-(x[i + 1] - x[i])).exp() * (right[i + 1] + q[i + 1]);
        }
        Self { left, right }
    }

    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn right(&self) -> &[f64] {
        &self.right
    }
}

/// `u`, `u_x` and `U = u² − u_x²` evaluated along the flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VelocityProfile {
    pub u: Vec<f64>,
    pub ux: Vec<f64>,
    pub big_u: Vec<f64>,
}

/// O(N) evaluation of `u`, `u_x`, `U` at every label.
///
/// The node `ξ_i` contributes half its quadrature mass to each side, so `u` carries
/// the full `G(0)` self term and `u_x` the principal value 0.
pub fn velocity_profile(state: &FlowState) -> Result<VelocityProfile> {
    state.check_monotone()?;
    Ok(profile_unchecked(&state.x, &state.setup.mass))
}

fn profile_unchecked(x: &[f64], mass: &[f64]) -> VelocityProfile {
    let sums = ExpSums::new(x, mass);
    let n = x.len();
    let mut u = Vec::with_capacity(n);
    let mut ux = Vec::with_capacity(n);
    let mut big_u = Vec::with_capacity(n);
    for i in 0..n {
        let half_self = 0.5 * mass[i];
        let l = 0.5 * (sums.left[i] + half_self);
        let r = 0.5 * (sums.right[i] + half_self);
        u.push(l + r);
        ux.push(r - l);
        big_u.push(4.0 * l * r);
    }
    VelocityProfile { u, ux, big_u }
}

/// `(dX/dt, dX_ξ/dt) = (U, 2 m₀ u_x)` per label.
pub fn rhs(state: &FlowState) -> Result<(Vec<f64>, Vec<f64>)> {
    let profile = velocity_profile(state)?;
    let dxxi = state
        .setup
        .m0
        .iter()
        .zip(&profile.ux)
        .map(|(m, ux)| 2.0 * m * ux)
        .collect();
    Ok((profile.big_u, dxxi))
}

/// One classical RK4 step of `(X, X_ξ)`.
pub fn advance(state: &FlowState, dt: f64) -> Result<FlowState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let stage = |base: &FlowState, kx: &[f64], kj: &[f64], h: f64| FlowState {
        t: base.t + h,
        x: base.x.iter().zip(kx).map(|(x, k)| x + h * k).collect(),
        xxi: base.xxi.iter().zip(kj).map(|(j, k)| j + h * k).collect(),
        setup: Arc::clone(&base.setup),
    };
    let (k1x, k1j) = rhs(state)?;
    let (k2x, k2j) = rhs(&stage(state, &k1x, &k1j, 0.5 * dt))?;
    let (k3x, k3j) = rhs(&stage(state, &k2x, &k2j, 0.5 * dt))?;
    let (k4x, k4j) = rhs(&stage(state, &k3x, &k3j, dt))?;
    let combine = |y: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..y.len())
            .map(|i| y[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
            .collect()
    };
    let next = FlowState {
        t: state.t + dt,
        x: combine(&state.x, &k1x, &k2x, &k3x, &k4x),
        xxi: combine(&state.xxi, &k1j, &k2j, &k3j, &k4j),
        setup: Arc::clone(&state.setup),
    };
    next.check_monotone()?;
    Ok(next)
}

/// Step-size policy and stopping rule for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControls {
    pub dt_max: f64,
    /// `dt ≤ c_safe / (‖m‖_∞ M₁)`.
    pub c_safe: f64,
    /// Stop as soon as [`FlowState::compression`] drops below this threshold.
    pub delta_stop: Option<f64>,
    /// Keep per-label `(X, X_ξ, u_x)` at every accepted step.
    pub record_labels: bool,
    pub max_steps: usize,
}

impl Default for StepControls {
    fn default() -> Self {
        Self {
            dt_max: 1e-2,
            c_safe: 0.1,
            delta_stop: None,
            record_labels: true,
            max_steps: 200_000,
        }
    }
}

/// One line of the trajectory log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub t: f64,
    pub min_xxi: f64,
    pub m_inf: f64,
    pub m_l1: f64,
    pub min_mux: f64,
    pub max_mux: f64,
    pub x_left: f64,
    pub x_right: f64,
}

/// Per-label record at one accepted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub t: f64,
    pub x: Vec<f64>,
    pub xxi: Vec<f64>,
    pub ux: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub entries: Vec<LogEntry>,
    pub labels: Vec<LabelRecord>,
}

impl Trajectory {
    pub fn record(&mut self, state: &FlowState, keep_labels: bool) -> Result<()> {
        let profile = velocity_profile(state)?;
        let m = state.momentum_along_flow();
        let mux: Vec<f64> = m.iter().zip(&profile.ux).map(|(m, ux)| m * ux).collect();
        let n = state.len();
        self.entries.push(LogEntry {
            t: state.t,
            min_xxi: state.min_xxi(),
            m_inf: m.iter().fold(0.0, |a, v| a.max(v.abs())),
            m_l1: m
                .iter()
                .zip(&state.xxi)
                .zip(state.setup.grid.weights())
                .map(|((m, j), w)| w * (m * j).abs())
                .sum(),
            min_mux: mux.iter().copied().fold(f64::INFINITY, f64::min),
            max_mux: mux.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            x_left: state.x[0],
            x_right: state.x[n - 1],
        });
        if keep_labels {
            self.labels.push(LabelRecord {
                t: state.t,
                x: state.x.clone(),
                xxi: state.xxi.clone(),
                ux: profile.ux,
            });
        }
        Ok(())
    }

    pub fn last(&self) -> Option<&LogEntry> {
        self.entries.last()
    }

    /// CSV with columns `t,min_xxi,m_inf,m_l1,min_mux,max_mux,x_left,x_right`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,min_xxi,m_inf,m_l1,min_mux,max_mux,x_left,x_right\n");
        for e in &self.entries {
            let row = [
                e.t, e.min_xxi, e.m_inf, e.m_l1, e.min_mux, e.max_mux, e.x_left, e.x_right,
            ];
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvolveStatus {
    Completed,
    BlowupDetected,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: FlowState,
    /// Last accepted state above the blow-up threshold, when the detector fired.
    pub previous: Option<FlowState>,
    pub trajectory: Trajectory,
    pub status: EvolveStatus,
}

/// Step size chosen by the controller for `state`.
pub fn controller_step(state: &FlowState, controls: &StepControls) -> f64 {
    let m1 = state.setup.m1_norm();
    controls
        .dt_max
        .min(controls.c_safe / (state.m_inf() * m1 + 1e-12))
}

/// Adaptive RK4 driver up to `t_end`, logging every accepted step.
pub fn evolve(state: &FlowState, t_end: f64, controls: &StepControls) -> Result<Evolution> {
    if !(t_end > state.t) {
        return Err(Error::InvalidParameter(format!(
            "end time {t_end} must exceed the current time {}",
            state.t
        )));
    }
    let mut trajectory = Trajectory::default();
    let mut current = state.clone();
    trajectory.record(&current, controls.record_labels)?;
    let time_tol = 1e-13 * t_end.abs().max(1.0);
    for _ in 0..controls.max_steps {
        if current.t >= t_end - time_tol {
            return Ok(Evolution {
                state: current,
                previous: None,
                trajectory,
                status: EvolveStatus::Completed,
            });
        }
        let mut dt = controller_step(&current, controls).min(t_end - current.t);
        let mut attempt = 0;
        let next = loop {
            match advance(&current, dt) {
                Ok(s) if s.min_xxi() > 0.0 => break s,
                Ok(_) | Err(Error::NonMonotone { .. }) if attempt < 60 => {
                    dt *= 0.5;
                    attempt += 1;
                }
                Ok(s) => {
                    return Err(Error::NonMonotone {
                        index: s.xxi.iter().position(|&j| j <= 0.0).unwrap_or(0),
                        t: s.t,
                    })
                }
                Err(e) => return Err(e),
            }
        };
        trajectory.record(&next, controls.record_labels)?;
        if let Some(delta) = controls.delta_stop {
            if next.compression() < delta {
                return Ok(Evolution {
                    state: next,
                    previous: Some(current),
                    trajectory,
                    status: EvolveStatus::BlowupDetected,
                });
            }
        }
        current = next;
    }
    Err(Error::InvalidParameter(format!(
        "step budget of {} exhausted at t = {}",
        controls.max_steps, current.t
    )))
}

/// Per-label comparison of four routes to `X_ξ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XxiConsistency {
    pub t: f64,
    /// (a) evolved `X_ξ`.
    pub evolved: Vec<f64>,
    /// (b) `exp(2∫ m u_x ds)` along the flow.
    pub exponential: Vec<f64>,
    /// (c) `1 + 2 m₀ ∫ u_x ds`.
    pub integral: Vec<f64>,
    /// (d) finite differences of `X` over labels.
    pub finite_difference: Vec<f64>,
    /// Largest pairwise gap among (a), (b), (c); the time-discretisation error.
    pub time_discrepancy: f64,
    /// Largest gap between (a) and (d); the label-discretisation error.
    pub label_discrepancy: f64,
    /// Largest gap from 1 of any route over labels in A⁰, across all logged times.
    pub zero_set_deviation: f64,
}

impl XxiConsistency {
    pub fn max_discrepancy(&self) -> f64 {
        self.time_discrepancy.max(self.label_discrepancy)
    }
}

pub fn xxi_consistency(state: &FlowState, trajectory: &Trajectory) -> Result<XxiConsistency> {
    let records = &trajectory.labels;
    if records.is_empty() {
        return Err(Error::InvalidParameter(
            "trajectory carries no per-label records".into(),
        ));
    }
    let n = state.len();
    let m0 = state.setup.m0();
    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let mut exponential = vec![0.0; n];
    let mut integral = vec![0.0; n];
    for j in 0..n {
        let ux: Vec<f64> = records.iter().map(|r| r.ux[j]).collect();
        let mux: Vec<f64> = records
            .iter()
            .map(|r| m0[j] / r.xxi[j] * r.ux[j])
            .collect();
        exponential[j] = (2.0 * integrate_samples(&times, &mux)).exp();
        integral[j] = 1.0 + 2.0 * m0[j] * integrate_samples(&times, &ux);
    }
    let finite_difference = label_derivative(state.labels(), &state.x);
    let evolved = state.xxi.clone();
    let gap = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let time_discrepancy = gap(&evolved, &exponential)
        .max(gap(&evolved, &integral))
        .max(gap(&exponential, &integral));
    let label_discrepancy = gap(&evolved, &finite_difference);

    let zero_labels: Vec<usize> = (0..n)
        .filter(|&j| state.setup.signs[j] == SignClass::Zero)
        .collect();
    let mut zero_set_deviation: f64 = 0.0;
    for &j in &zero_labels {
        zero_set_deviation = zero_set_deviation
            .max((evolved[j] - 1.0).abs())
            .max((exponential[j] - 1.0).abs())
            .max((integral[j] - 1.0).abs());
        for r in records {
            zero_set_deviation = zero_set_deviation.max((r.xxi[j] - 1.0).abs());
        }
    }
    Ok(XxiConsistency {
        t: state.t,
        evolved,
        exponential,
        integral,
        finite_difference,
        time_discrepancy,
        label_discrepancy,
        zero_set_deviation,
    })
}

/// Second-order finite differences of `x` with respect to uniformly spaced `labels`.
pub fn label_derivative(labels: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h = labels[1] - labels[0];
    (0..n)
        .map(|j| {
            if j == 0 {
                (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * h)
            } else if j == n - 1 {
                (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * h)
            } else {
                (x[j + 1] - x[j - 1]) / (labels[j + 1] - labels[j - 1])
            }
        })
        .collect()
}
