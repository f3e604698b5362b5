//! Eulerian fields reconstructed from a characteristic state, total variation,
//! and the weak-form residual.

use serde::{Deserialize, Serialize};

use crate::flow::{ExpSums, FlowState};
use crate::momentum::Momentum;
use crate::quad::{integrate_samples, trapezoid};
use crate::{Error, Result};

/// `u`, `u_x`, `m` sampled at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerianField {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub ux: Vec<f64>,
    pub m: Vec<f64>,
}

impl EulerianField {
    /// Snapshot CSV: a `# t=<time>` line, then `x,u,ux,m`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# t={:.16e}\nx,u,ux,m\n", self.t);
        for k in 0..self.x.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.x[k], self.u[k], self.ux[k], self.m[k]
            ));
        }
        out
    }

    /// `∫|m| dx` by the trapezoid rule on the sample grid.
    pub fn m_l1(&self) -> f64 {
        let abs: Vec<f64> = self.m.iter().map(|v| v.abs()).collect();
        trapezoid(&self.x, &abs)
    }
}

/// Point-mass field `Σ q_j G(x − X_j)` over a monotone particle sequence,
/// queried in O(log N) after two O(N) scans.
#[derive(Debug, Clone)]
pub struct KernelSum {
    x: Vec<f64>,
    q: Vec<f64>,
    sums: ExpSums,
}

impl KernelSum {
    pub fn new(x: &[f64], q: &[f64]) -> Result<Self> {
        if x.len() != q.len() {
            return Err(Error::InvalidParameter(
                "positions and masses differ in length".into(),
            ));
        }
        if let Some(i) = x.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotone { index: i + 1, t: f64::NAN });
        }
        Ok(Self {
            x: x.to_vec(),
            q: q.to_vec(),
            sums: ExpSums::new(x, q),
        })
    }

    /// `(u, u_x)` at `y`; a particle sitting exactly at `y` contributes `G(0)` to `u` and 0 to `u_x`.
    pub fn eval(&self, y: f64) -> (f64, f64) {
        let n = self.x.len();
        if n == 0 {
            return (0.0, 0.0);
        }
        let k = self.x.partition_point(|&xj| xj < y);
        let coincident = k < n && self.x[k] == y;
        // Σ_{X_j < y} q_j e^{-(y - X_j)}
        let below = if k == 0 {
            0.0
        } else {
            (-(y - self.x[k - 1])).exp() * (self.sums.left()[k - 1] + self.q[k - 1])
        };
        let (self_term, above) = if coincident {
            (self.q[k], self.sums.right()[k])
        } else if k < n {
            (0.0, (-(self.x[k] - y)).exp() * (self.sums.right()[k] + self.q[k]))
        } else {
            (0.0, 0.0)
        };
        let l = 0.5 * (below + 0.5 * self_term);
        let r = 0.5 * (above + 0.5 * self_term);
        (l + r, r - l)
    }
}

/// Samples `u`, `u_x` and `m` of `state` at the abscissae `grid`.
///
/// `m` uses the inverse flow map: `x = X(ξ)` is inverted by bisection plus linear
/// interpolation, and `m = m₀(ξ)/X_ξ(ξ)` with `X_ξ` interpolated linearly.
pub fn reconstruct(state: &FlowState, grid: &[f64]) -> Result<EulerianField> {
    if let Some(index) = state.monotonicity_defect() {
        return Err(Error::NonMonotone { index, t: state.t });
    }
    let setup = state.setup();
    let field = KernelSum::new(&state.x, setup.masses())?;
    let labels = state.labels();
    let n = state.len();
    let mut u = Vec::with_capacity(grid.len());
    let mut ux = Vec::with_capacity(grid.len());
    let mut m = Vec::with_capacity(grid.len());
    for &y in grid {
        let (a, b) = field.eval(y);
        u.push(a);
        ux.push(b);
        m.push(if y < state.x[0] || y > state.x[n - 1] {
            0.0
        } else {
            let k = state.x.partition_point(|&xj| xj <= y).clamp(1, n - 1) - 1;
            let theta = (y - state.x[k]) / (state.x[k + 1] - state.x[k]);
            if theta == 0.0 {
                setup.m0()[k] / state.xxi[k]
            } else if theta == 1.0 {
                setup.m0()[k + 1] / state.xxi[k + 1]
            } else {
                let xi = labels[k] + theta * (labels[k + 1] - labels[k]);
                let xxi = state.xxi[k] + theta * (state.xxi[k + 1] - state.xxi[k]);
                setup.momentum().density(xi) / xxi
            }
        });
    }
    Ok(EulerianField {
        t: state.t,
        x: grid.to_vec(),
        u,
        ux,
        m,
    })
}

/// `Σ |f_i − f_{i−1}|`.
pub fn total_variation(samples: &[f64]) -> f64 {
    samples.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// `∫|f − g| dx` by the trapezoid rule on the common grid `x`.
pub fn l1_difference(x: &[f64], f: &[f64], g: &[f64]) -> f64 {
    let d: Vec<f64> = f.iter().zip(g).map(|(a, b)| (a - b).abs()).collect();
    trapezoid(x, &d)
}

/// `n` equally spaced points on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|k| if k == n - 1 { b } else { a + k as f64 * h })
        .collect()
}

/// Test function `φ(x, t) = Q((x − c)/w)·(1 − t/T)³` for `t < T`, zero afterwards,
/// with `Q(s) = (1 − s²)⁶·(a₀ + a₁s + a₂s² + a₃s³)` on `|s| < 1`.
///
/// `Q` is C⁵ at `|s| = 1`, enough for every derivative the weak form uses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunction {
    pub center: f64,
    pub width: f64,
    pub horizon: f64,
    /// Polynomial factor coefficients `a₀..a₃`.
    pub poly: [f64; 4],
    /// Coefficients of `Q` in powers of `s`.
    #[serde(skip)]
    q: Vec<f64>,
}

/// Values of `φ` and the derivatives entering the weak functional.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhiValues {
    pub phi: f64,
    pub phi_t: f64,
    pub phi_x: f64,
    pub phi_xx: f64,
    pub phi_xxx: f64,
    pub phi_txx: f64,
}

impl TestFunction {
    pub fn new(center: f64, width: f64, horizon: f64, poly: [f64; 4]) -> Result<Self> {
        if !(width > 0.0 && horizon > 0.0) {
            return Err(Error::InvalidParameter(
                "test function width and horizon must be positive".into(),
            ));
        }
        // (1 - s^2)^6 = Σ_k C(6,k) (-1)^k s^{2k}
        let mut bump = vec![0.0; 13];
        let binom = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0];
        for (k, b) in binom.iter().enumerate() {
            bump[2 * k] = if k % 2 == 0 { *b } else { -*b };
        }
        let mut q = vec![0.0; 16];
        for (i, bi) in bump.iter().enumerate() {
            for (j, aj) in poly.iter().enumerate() {
                q[i + j] += bi * aj;
            }
        }
        Ok(Self {
            center,
            width,
            horizon,
            poly,
            q,
        })
    }

    /// Plain bump `(1 − s²)⁶` times the time factor.
    pub fn bump(center: f64, width: f64, horizon: f64) -> Result<Self> {
        Self::new(center, width, horizon, [1.0, 0.0, 0.0, 0.0])
    }

    /// Spatial support `[c − w, c + w]`.
    pub fn support(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }

    fn q_derivs(&self, s: f64) -> [f64; 4] {
        let mut d = [0.0; 4];
        for (order, slot) in d.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in (order..self.q.len()).rev() {
                let mut c = self.q[k];
                for r in 0..order {
                    c *= (k - r) as f64;
                }
                acc = acc * s + c;
            }
            *slot = acc;
        }
        d
    }

    pub fn eval(&self, x: f64, t: f64) -> PhiValues {
        let s = (x - self.center) / self.width;
        if s.abs() >= 1.0 || t >= self.horizon {
            return PhiValues::default();
        }
        let tau = 1.0 - t / self.horizon;
        let time = tau * tau * tau;
        let time_t = -3.0 * tau * tau / self.horizon;
        let [q0, q1, q2, q3] = self.q_derivs(s);
        let w = self.width;
        PhiValues {
            phi: q0 * time,
            phi_t: q0 * time_t,
            phi_x: q1 / w * time,
            phi_xx: q2 / (w * w) * time,
            phi_xxx: q3 / (w * w * w) * time,
            phi_txx: q2 / (w * w) * time_t,
        }
    }
}

/// `L(u, φ) + ∫φ(x, 0) dm₀`, zero for an exact weak solution.
///
/// Space integrals use the trapezoid rule on each field's grid, the time integral the
/// composite Simpson rule over the snapshot times. The trajectory must start at
/// `t = 0` and reach the test-function horizon.
pub fn weak_residual(trajectory: &[EulerianField], phi: &TestFunction, m0: &Momentum) -> Result<f64> {
    if trajectory.len() < 2 {
        return Err(Error::Coverage("need at least two snapshots".into()));
    }
    let t0 = trajectory[0].t;
    let t1 = trajectory[trajectory.len() - 1].t;
    if t0 > 0.0 || t1 < phi.horizon * (1.0 - 1e-12) {
        return Err(Error::Coverage(format!(
            "snapshots span [{t0}, {t1}] but the test function lives on [0, {})",
            phi.horizon
        )));
    }
    let (a, b) = phi.support();
    let mut times = Vec::with_capacity(trajectory.len());
    let mut inner = Vec::with_capacity(trajectory.len());
    for field in trajectory {
        let n = field.x.len();
        if n < 2 || field.x[0] > a || field.x[n - 1] < b {
            return Err(Error::Coverage(format!(
                "snapshot at t = {} does not cover the test-function support [{a}, {b}]",
                field.t
            )));
        }
        let integrand: Vec<f64> = (0..n)
            .map(|k| {
                let p = phi.eval(field.x[k], field.t);
                let (u, ux) = (field.u[k], field.ux[k]);
                u * (p.phi_t - p.phi_txx) - ux.powi(3) * p.phi_xx / 3.0 - u.powi(3) * p.phi_xxx / 3.0
                    + (u.powi(3) + u * ux * ux) * p.phi_x
            })
            .collect();
        times.push(field.t);
        inner.push(trapezoid(&field.x, &integrand));
    }
    let functional = integrate_samples(&times, &inner);
    Ok(functional + initial_pairing(phi, m0))
}

/// `∫φ(x, 0) dm₀` for the density (fine Gauss–Legendre) and the atoms.
pub fn initial_pairing(phi: &TestFunction, m0: &Momentum) -> f64 {
    let atoms: f64 = m0
        .atoms()
        .iter()
        .map(|at| at.weight * phi.eval(at.position, 0.0).phi)
        .sum();
    let l = m0.support_radius();
    let (a, b) = phi.support();
    let (lo, hi) = (a.max(-l), b.min(l));
    let density = if hi > lo {
        crate::quad::GaussRule::new(20).composite(lo, hi, 64, |x| {
            phi.eval(x, 0.0).phi * m0.density(x)
        })
    } else {
        0.0
    };
    atoms + density
}
