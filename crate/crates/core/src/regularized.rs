//! Mollified particle scheme for measure data.
//!
//! Particles carry fixed signed weights `pᵢ` and move with
//! `Ẋᵢ = ∫ρ_ε(y)[(u^ε)² − (u^ε_x)²](Xᵢ − y) dy`, `u^ε = Σ pⱼ G^ε(· − Xⱼ)`.
//! The regularised field is smooth, so particles may meet and pass; nothing is merged.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eulerian::{weak_residual, EulerianField, TestFunction};
use crate::flow::ExpSums;
use crate::kernel::{GreenTable, Mollifier, MollifierShape};
use crate::momentum::{LabelGrid, Momentum};
use crate::quad::GaussRule;
use crate::{Error, Result};

/// Signed point masses at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleEnsemble {
    pub t: f64,
    pub epsilon: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl ParticleEnsemble {
    /// One particle per label node carrying `w_j m₀(ξ_j)`, plus one per atom.
    ///
    /// Density weights are rescaled by a common factor so that their absolute sum is
    /// exactly `‖m₀‖_{L¹}` of the density. Particle `j < nodes` sits on label node `j`.
    pub fn from_momentum(m: &Momentum, nodes: usize, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let atom_mass: f64 = m.atoms().iter().map(|a| a.weight.abs()).sum();
        let density_mass = m.m1_norm() - atom_mass;
        let mut x = Vec::new();
        let mut p = Vec::new();
        if density_mass > 0.0 {
            let grid = LabelGrid::uniform(m.support_radius(), nodes)?;
            let raw: Vec<(f64, f64)> = grid
                .nodes()
                .iter()
                .zip(grid.weights())
                .map(|(&xi, &w)| (xi, w * m.density(xi)))
                .collect();
            let discrete: f64 = raw.iter().map(|r| r.1.abs()).sum();
            let factor = density_mass / discrete;
            for (xi, q) in raw {
                x.push(xi);
                p.push(q * factor);
            }
        }
        for a in m.atoms() {
            x.push(a.position);
            p.push(a.weight);
        }
        Ok(Self {
            t: 0.0,
            epsilon,
            x,
            p,
        })
    }

    /// `Σ|pᵢ|`.
    pub fn m1(&self) -> f64 {
        self.p.iter().map(|v| v.abs()).sum()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Particle CSV: `# t=<time>, eps=<ε>` then `x,p`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# t={:.16e}, eps={:.16e}\nx,p\n", self.t, self.epsilon);
        for (x, p) in self.x.iter().zip(&self.p) {
            out.push_str(&format!("{x:.16e},{p:.16e}\n"));
        }
        out
    }
}

/// How `u^ε` is summed over particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FieldMethod {
    /// Direct O(N) sum per query.
    Naive,
    /// Particles are sorted once per snapshot; those at distance `≥ ε` enter through
    /// exponential prefix sums (`G^ε = K·G` there), the rest through the table.
    #[default]
    Sorted,
}

/// Kernel table, outer quadrature rule and summation method of one run.
#[derive(Debug, Clone)]
pub struct RegScheme {
    table: GreenTable,
    nodes: Vec<(f64, f64)>,
    method: FieldMethod,
}

impl RegScheme {
    pub fn new(shape: MollifierShape, epsilon: f64, order: usize, method: FieldMethod) -> Result<Self> {
        let mollifier = Mollifier::new(shape, epsilon)?;
        // G^ε = K·G exactly beyond ε, so the table only has to span the layer.
        let table = GreenTable::build(&mollifier, 2.0 * epsilon, epsilon / 128.0)?;
        let nodes = GaussRule::new(order)
            .mapped(-epsilon, epsilon)
            .map(|(y, w)| (y, w * mollifier.eval(y)))
            .collect();
        Ok(Self {
            table,
            nodes,
            method,
        })
    }

    /// Polynomial mollifier, 16-point outer rule, sorted summation.
    pub fn standard(epsilon: f64) -> Result<Self> {
        Self::new(MollifierShape::Polynomial, epsilon, 16, FieldMethod::Sorted)
    }

    pub fn epsilon(&self) -> f64 {
        self.table.epsilon()
    }

    pub fn table(&self) -> &GreenTable {
        &self.table
    }

    pub fn mollifier(&self) -> &Mollifier {
        self.table.mollifier()
    }

    pub fn method(&self) -> FieldMethod {
        self.method
    }

    fn check(&self, ens: &ParticleEnsemble) -> Result<()> {
        if (ens.epsilon - self.epsilon()).abs() > 1e-15 * self.epsilon() {
            return Err(Error::InvalidParameter(format!(
                "ensemble epsilon {} differs from the table's {}",
                ens.epsilon,
                self.epsilon()
            )));
        }
        Ok(())
    }
}

/// `(u^ε, u^ε_x)` queries against one particle snapshot.
pub struct FieldEvaluator<'a> {
    scheme: &'a RegScheme,
    x: Vec<f64>,
    p: Vec<f64>,
    sums: Option<ExpSums>,
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(scheme: &'a RegScheme, ens: &ParticleEnsemble) -> Result<Self> {
        scheme.check(ens)?;
        match scheme.method {
            FieldMethod::Naive => Ok(Self {
                scheme,
                x: ens.x.clone(),
                p: ens.p.clone(),
                sums: None,
            }),
            FieldMethod::Sorted => {
                let mut order: Vec<usize> = (0..ens.len()).collect();
                order.sort_by(|&a, &b| ens.x[a].total_cmp(&ens.x[b]));
                let x: Vec<f64> = order.iter().map(|&i| ens.x[i]).collect();
                let p: Vec<f64> = order.iter().map(|&i| ens.p[i]).collect();
                let sums = Some(ExpSums::new(&x, &p));
                Ok(Self { scheme, x, p, sums })
            }
        }
    }

    pub fn eval(&self, y: f64) -> (f64, f64) {
        let table = &self.scheme.table;
        let near = |range: std::ops::Range<usize>| {
            range.fold((0.0, 0.0), |(u, ux), j| {
                let (g, gx) = table.eval(y - self.x[j]);
                (u + self.p[j] * g, ux + self.p[j] * gx)
            })
        };
        let Some(sums) = &self.sums else {
            return near(0..self.x.len());
        };
        let eps = self.scheme.epsilon();
        let n = self.x.len();
        let lo = self.x.partition_point(|&xj| xj <= y - eps);
        let hi = self.x.partition_point(|&xj| xj < y + eps);
        let k = 0.5 * table.tail_factor();
        let left = if lo == 0 {
            0.0
        } else {
            k * (-(y - self.x[lo - 1])).exp() * (sums.left()[lo - 1] + self.p[lo - 1])
        };
        let right = if hi >= n {
            0.0
        } else {
            k * (-(self.x[hi] - y)).exp() * (sums.right()[hi] + self.p[hi])
        };
        let (u, ux) = near(lo..hi);
        (u + left + right, ux - left + right)
    }

    /// `∫ρ_ε(y)[(u^ε)² − (u^ε_x)²](x − y) dy` by the scheme's outer rule.
    pub fn velocity_at(&self, x: f64) -> f64 {
        self.scheme
            .nodes
            .iter()
            .map(|&(y, w)| {
                let (u, ux) = self.eval(x - y);
                w * (u * u - ux * ux)
            })
            .sum()
    }
}

/// `(u^ε(x), u^ε_x(x))`.
pub fn reg_fields(ens: &ParticleEnsemble, scheme: &RegScheme, x: f64) -> Result<(f64, f64)> {
    Ok(FieldEvaluator::new(scheme, ens)?.eval(x))
}

/// Mollified velocity `U^ε` at every particle.
pub fn reg_velocity(ens: &ParticleEnsemble, scheme: &RegScheme) -> Result<Vec<f64>> {
    let field = FieldEvaluator::new(scheme, ens)?;
    Ok(ens.x.par_iter().map(|&x| field.velocity_at(x)).collect())
}

/// `u^ε`, `u^ε_x` and `m^ε = Σ pᵢ ρ_ε(x − Xᵢ)` on `grid`.
pub fn reg_snapshot(ens: &ParticleEnsemble, scheme: &RegScheme, grid: &[f64]) -> Result<EulerianField> {
    let field = FieldEvaluator::new(scheme, ens)?;
    let moll = scheme.mollifier();
    let (mut u, mut ux, mut m) = (Vec::new(), Vec::new(), Vec::new());
    for &y in grid {
        let (a, b) = field.eval(y);
        u.push(a);
        ux.push(b);
        m.push(
            ens.x
                .iter()
                .zip(&ens.p)
                .map(|(xi, pi)| pi * moll.eval(y - xi))
                .sum(),
        );
    }
    Ok(EulerianField {
        t: ens.t,
        x: grid.to_vec(),
        u,
        ux,
        m,
    })
}

/// Step policy for [`reg_evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegControls {
    pub dt_max: f64,
    /// Particles move at most `c_safe·ε` per step: `dt ≤ c_safe ε/(½M₁²)`.
    pub c_safe: f64,
    /// Keep every `stride`-th ensemble (the first and last are always kept).
    pub stride: usize,
}

impl Default for RegControls {
    fn default() -> Self {
        Self {
            dt_max: 1e-2,
            c_safe: 0.2,
            stride: 1,
        }
    }
}

/// Per-step maxima checked against the uniform bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepBounds {
    pub t: f64,
    /// `max |U^ε|` at the particles.
    pub max_velocity: f64,
    /// `max |u^ε|`, `max |u^ε_x|` at the particles.
    pub max_u: f64,
    pub max_ux: f64,
    pub m1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegTrajectory {
    pub snapshots: Vec<ParticleEnsemble>,
    pub bounds: Vec<StepBounds>,
    pub dt: f64,
}

/// RK4 on the particle positions with a uniform step up to `t_end`.
pub fn reg_evolve(
    ens: &ParticleEnsemble,
    scheme: &RegScheme,
    t_end: f64,
    controls: &RegControls,
) -> Result<RegTrajectory> {
    if !(t_end > ens.t) {
        return Err(Error::InvalidParameter(format!(
            "end time {t_end} must exceed the current time {}",
            ens.t
        )));
    }
    scheme.check(ens)?;
    let m1 = ens.m1();
    let cap = controls
        .dt_max
        .min(controls.c_safe * scheme.epsilon() / (0.5 * m1 * m1 + 1e-12));
    let steps = ((t_end - ens.t) / cap).ceil().max(1.0) as usize;
    let dt = (t_end - ens.t) / steps as f64;
    let t0 = ens.t;
    let stride = controls.stride.max(1);

    let mut current = ens.clone();
    let mut snapshots = vec![current.clone()];
    let mut bounds = Vec::with_capacity(steps + 1);
    let shifted = |base: &ParticleEnsemble, k: &[f64], h: f64| ParticleEnsemble {
        t: base.t + h,
        epsilon: base.epsilon,
        x: base.x.iter().zip(k).map(|(x, v)| x + h * v).collect(),
        p: base.p.clone(),
    };
    for step in 1..=steps {
        let k1 = reg_velocity(&current, scheme)?;
        bounds.push(step_bounds(&current, scheme, &k1)?);
        let k2 = reg_velocity(&shifted(&current, &k1, 0.5 * dt), scheme)?;
        let k3 = reg_velocity(&shifted(&current, &k2, 0.5 * dt), scheme)?;
        let k4 = reg_velocity(&shifted(&current, &k3, dt), scheme)?;
        for i in 0..current.len() {
            current.x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        current.t = t0 + step as f64 * dt;
        if step % stride == 0 || step == steps {
            snapshots.push(current.clone());
        }
    }
    let v = reg_velocity(&current, scheme)?;
    bounds.push(step_bounds(&current, scheme, &v)?);
    Ok(RegTrajectory {
        snapshots,
        bounds,
        dt,
    })
}

fn step_bounds(ens: &ParticleEnsemble, scheme: &RegScheme, velocity: &[f64]) -> Result<StepBounds> {
    let field = FieldEvaluator::new(scheme, ens)?;
    let (mut max_u, mut max_ux) = (0.0_f64, 0.0_f64);
    for &x in &ens.x {
        let (u, ux) = field.eval(x);
        max_u = max_u.max(u.abs());
        max_ux = max_ux.max(ux.abs());
    }
    Ok(StepBounds {
        t: ens.t,
        max_velocity: velocity.iter().fold(0.0, |a, v| a.max(v.abs())),
        max_u,
        max_ux,
        m1: ens.m1(),
    })
}

/// Parameters of [`consistency_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub nodes: usize,
    pub shape: MollifierShape,
    pub controls: RegControls,
    /// Spatial quadrature spacing as a fraction of `ε`.
    pub grid_fraction: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            nodes: 257,
            shape: MollifierShape::Polynomial,
            controls: RegControls::default(),
            grid_fraction: 1.0 / 16.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub eps: Vec<f64>,
    /// `max_φ |E_ε|` per `ε`.
    #[serde(rename = "E")]
    pub e: Vec<f64>,
    pub slope: f64,
    /// `|E_ε|` decreases along the (decreasing) `ε` list.
    pub monotone: bool,
}

/// `E_ε = L(u^ε, φ) + ∫φ(·,0)dm₀` for each test function, from one regularised run up
/// to the largest test-function horizon.
pub fn weak_defects(
    m: &Momentum,
    epsilon: f64,
    phis: &[TestFunction],
    opts: &SweepOptions,
) -> Result<Vec<f64>> {
    if phis.is_empty() {
        return Err(Error::InvalidParameter("empty test-function family".into()));
    }
    let scheme = RegScheme::new(opts.shape, epsilon, 16, FieldMethod::Sorted)?;
    let ens = ParticleEnsemble::from_momentum(m, opts.nodes, epsilon)?;
    let horizon = phis.iter().fold(0.0_f64, |a, p| a.max(p.horizon));
    let controls = RegControls {
        stride: 1,
        ..opts.controls
    };
    let traj = reg_evolve(&ens, &scheme, horizon, &controls)?;
    let lo = phis.iter().fold(f64::INFINITY, |a, p| a.min(p.support().0));
    let hi = phis.iter().fold(f64::NEG_INFINITY, |a, p| a.max(p.support().1));
    let cells = ((hi - lo) / (opts.grid_fraction * epsilon)).ceil() as usize;
    let grid = crate::eulerian::uniform_grid(lo, hi, cells + 1);
    let fields: Vec<EulerianField> = traj
        .snapshots
        .par_iter()
        .map(|s| reg_snapshot(s, &scheme, &grid))
        .collect::<Result<_>>()?;
    phis.iter()
        .map(|phi| {
            // restrict to the snapshots inside this function's horizon, plus one beyond
            let k = fields.partition_point(|f| f.t < phi.horizon * (1.0 - 1e-12));
            weak_residual(&fields[..=k.min(fields.len() - 1)], phi, m)
        })
        .collect()
}

/// Log–log slope of `max_φ |E_ε|` against `ε`.
pub fn consistency_sweep(
    m: &Momentum,
    eps_list: &[f64],
    phis: &[TestFunction],
    opts: &SweepOptions,
) -> Result<SweepResult> {
    if eps_list.len() < 4 || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter(
            "epsilon list must be strictly decreasing with at least four entries".into(),
        ));
    }
    let e: Vec<f64> = eps_list
        .iter()
        .map(|&eps| {
            let d = weak_defects(m, eps, phis, opts)?;
            Ok(d.iter().fold(0.0_f64, |a, v| a.max(v.abs())))
        })
        .collect::<Result<_>>()?;
    let monotone = e.windows(2).all(|w| w[1] < w[0]);
    Ok(SweepResult {
        eps: eps_list.to_vec(),
        slope: loglog_slope(eps_list, &e),
        e,
        monotone,
    })
}

/// Least-squares slope of `ln y` against `ln x`; NaN when any `y` is zero.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::momentum::Atom;

    #[test]
    fn construction_preserves_total_variation() {
        let m = Momentum::new(
            1.0,
            crate::momentum::Profile::Bump {
                amplitude: 2.0,
                center: 0.0,
                width: 1.0,
            },
            vec![Atom {
                position: 0.3,
                weight: -0.7,
            }],
        )
        .unwrap();
        let ens = ParticleEnsemble::from_momentum(&m, 65, 0.1).unwrap();
        assert!((ens.m1() - m.m1_norm()).abs() < 1e-12);
    }

    #[test]
    fn single_atom_fields() {
        let m = Momentum::atoms_only(1.0, vec![Atom { position: 0.0, weight: 1.5 }]).unwrap();
        let ens = ParticleEnsemble::from_momentum(&m, 33, 0.1).unwrap();
        let scheme = RegScheme::standard(0.1).unwrap();
        let (u, ux) = reg_fields(&ens, &scheme, 0.0).unwrap();
        assert!(u <= 0.75 && u > 0.0);
        assert_eq!(ux, 0.0);
    }

    #[test]
    fn sorted_matches_naive() {
        let m = crate::momentum::build_momentum("bump(c=2, w=0.8) + atoms(-0.5:0.4, 0.2:-0.3; L=1)").unwrap();
        let ens = ParticleEnsemble::from_momentum(&m, 41, 0.1).unwrap();
        let fast = RegScheme::new(MollifierShape::Cosine, 0.1, 16, FieldMethod::Sorted).unwrap();
        let slow = RegScheme::new(MollifierShape::Cosine, 0.1, 16, FieldMethod::Naive).unwrap();
        let a = reg_velocity(&ens, &fast).unwrap();
        let b = reg_velocity(&ens, &slow).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }

    #[test]
    fn zero_datum_has_zero_defect() {
        let m = Momentum::zero(1.0).unwrap();
        let phi = TestFunction::bump(0.0, 0.5, 0.1).unwrap();
        let opts = SweepOptions {
            nodes: 33,
            ..SweepOptions::default()
        };
        let d = weak_defects(&m, 0.2, &[phi], &opts).unwrap();
        assert_eq!(d[0], 0.0);
    }

    #[test]
    fn sweep_rejects_short_or_unsorted_lists() {
        let m = Momentum::bump(1.0).unwrap();
        let phi = TestFunction::bump(0.0, 0.5, 0.1).unwrap();
        let o = SweepOptions::default();
        assert!(consistency_sweep(&m, &[0.2, 0.1, 0.05], &[phi.clone()], &o).is_err());
        assert!(consistency_sweep(&m, &[0.2, 0.1, 0.1, 0.05], &[phi], &o).is_err());
    }
}
