//! The Helmholtz Green kernel `G(x) = e^{-|x|}/2` and its mollified versions.

use serde::{Deserialize, Serialize};

use crate::quad::GaussRule;
use crate::{Error, Result};

pub fn green(x: f64) -> f64 {
    0.5 * (-x.abs()).exp()
}

/// `G'(x) = -sign(x) e^{-|x|}/2`, with the principal value `G'(0) = 0`.
pub fn green_prime(x: f64) -> f64 {
    if x > 0.0 {
        -0.5 * (-x).exp()
    } else if x < 0.0 {
        0.5 * x.exp()
    } else {
        0.0
    }
}

/// Shape of a unit-mass bump supported in `(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MollifierShape {
    /// `exp(-1/(1 - s^2))`, C^∞.
    #[default]
    Bump,
    /// `cos^4(πs/2)`, C^3.
    Cosine,
    /// `(1 - s^2)^4`, C^3.
    Polynomial,
}

impl MollifierShape {
    fn unnormalized(self, s: f64) -> f64 {
        if s.abs() >= 1.0 {
            return 0.0;
        }
        match self {
            MollifierShape::Bump => (-1.0 / (1.0 - s * s)).exp(),
            MollifierShape::Cosine => (0.5 * std::f64::consts::PI * s).cos().powi(4),
            MollifierShape::Polynomial => (1.0 - s * s).powi(4),
        }
    }

    fn unnormalized_prime(self, s: f64) -> f64 {
        if s.abs() >= 1.0 {
            return 0.0;
        }
        match self {
            MollifierShape::Bump => {
                let q = 1.0 - s * s;
                (-1.0 / q).exp() * (-2.0 * s / (q * q))
            }
            MollifierShape::Cosine => {
                let a = 0.5 * std::f64::consts::PI * s;
                -2.0 * std::f64::consts::PI * a.cos().powi(3) * a.sin()
            }
            MollifierShape::Polynomial => -8.0 * s * (1.0 - s * s).powi(3),
        }
    }

    fn mass(self) -> f64 {
        match self {
            MollifierShape::Cosine => 0.75,
            MollifierShape::Polynomial => 256.0 / 315.0,
            MollifierShape::Bump => {
                let rule = GaussRule::new(24);
                rule.composite(-1.0, 1.0, 64, |s| self.unnormalized(s))
            }
        }
    }
}

/// `ρ_ε(x) = ρ(x/ε)/ε` for an even, nonnegative, unit-mass bump `ρ`.
#[derive(Debug, Clone)]
pub struct Mollifier {
    shape: MollifierShape,
    epsilon: f64,
    inv_mass: f64,
}

impl Mollifier {
    pub fn new(shape: MollifierShape, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mollifier scale must be positive, got {epsilon}"
            )));
        }
        Ok(Self {
            shape,
            epsilon,
            inv_mass: 1.0 / shape.mass(),
        })
    }

    pub fn shape(&self) -> MollifierShape {
        self.shape
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Unit-scale profile `ρ(s)`.
    pub fn profile(&self, s: f64) -> f64 {
        self.inv_mass * self.shape.unnormalized(s)
    }

    /// Scaled profile `ρ_ε(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.profile(x / self.epsilon) / self.epsilon
    }

    /// `ρ_ε'(x)`.
    pub fn eval_prime(&self, x: f64) -> f64 {
        let eps = self.epsilon;
        self.inv_mass * self.shape.unnormalized_prime(x / eps) / (eps * eps)
    }

    /// `∫ ρ_ε(y) f(y) dy` by composite Gauss–Legendre over `[-ε, ε]`, split at `split`.
    fn convolve_split(&self, rule: &GaussRule, split: f64, f: impl Fn(f64) -> f64) -> f64 {
        let eps = self.epsilon;
        let g = |y: f64| self.eval(y) * f(y);
        let s = split.clamp(-eps, eps);
        let left = if s > -eps {
            rule.composite(-eps, s, 8, g)
        } else {
            0.0
        };
        let right = if s < eps {
            rule.composite(s, eps, 8, g)
        } else {
            0.0
        };
        left + right
    }
}

/// Tabulated `G^ε = ρ_ε * G` and `G^ε_x` on a uniform symmetric grid over `[-R, R]`.
///
/// Queries between nodes use C² quintic Hermite interpolation with the exact derivative
/// data `G^ε_xx = G^ε - ρ_ε` and `G^ε_xxx = G^ε_x - ρ_ε'`. Outside `[-R, R]` the exact exponential
/// tail `K·G(x)`, `K = ∫ρ_ε(y) cosh(y) dy`, is returned.
#[derive(Debug, Clone)]
pub struct GreenTable {
    mollifier: Mollifier,
    radius: f64,
    spacing: f64,
    tail_factor: f64,
    g_values: Vec<f64>,
    gx_values: Vec<f64>,
    gxx_values: Vec<f64>,
    gxxx_values: Vec<f64>,
}

impl GreenTable {
    pub fn build(mollifier: &Mollifier, radius: f64, spacing: f64) -> Result<Self> {
        let eps = mollifier.epsilon();
        if !(spacing > 0.0) || spacing > eps / 8.0 {
            return Err(Error::InvalidParameter(format!(
                "table spacing {spacing} must lie in (0, eps/8 = {}]",
                eps / 8.0
            )));
        }
        if radius < eps {
            return Err(Error::InvalidParameter(format!(
                "table radius {radius} must be at least eps = {eps}"
            )));
        }
        // Symmetric grid with an odd node count and the node 0 at the centre.
        let half_cells = (radius / spacing).ceil() as usize;
        let h = radius / half_cells as f64;
        let n = 2 * half_cells + 1;

        let rule = GaussRule::new(20);
        let tail_factor = mollifier.convolve_split(&rule, 0.0, f64::cosh);
        let mut g_values = vec![0.0; n];
        let mut gx_values = vec![0.0; n];
        let mut gxx_values = vec![0.0; n];
        let mut gxxx_values = vec![0.0; n];
        for k in 0..=half_cells {
            let x = k as f64 * h;
            let g = mollifier.convolve_split(&rule, x, |y| green(x - y));
            let gx = if k == 0 {
                0.0
            } else {
                mollifier.convolve_split(&rule, x, |y| green_prime(x - y))
            };
            let gxx = g - mollifier.eval(x);
            let gxxx = gx - mollifier.eval_prime(x);
            g_values[half_cells + k] = g;
            g_values[half_cells - k] = g;
            gx_values[half_cells + k] = gx;
            gx_values[half_cells - k] = -gx;
            gxx_values[half_cells + k] = gxx;
            gxx_values[half_cells - k] = gxx;
            gxxx_values[half_cells + k] = gxxx;
            gxxx_values[half_cells - k] = -gxxx;
        }
        Ok(Self {
            mollifier: mollifier.clone(),
            radius,
            spacing: h,
            tail_factor,
            g_values,
            gx_values,
            gxx_values,
            gxxx_values,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.mollifier.epsilon()
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `K` in `G^ε(x) = K·G(x)` for `|x| ≥ ε`.
    pub fn tail_factor(&self) -> f64 {
        self.tail_factor
    }

    pub fn abscissae(&self) -> Vec<f64> {
        let half = (self.g_values.len() / 2) as f64;
        (0..self.g_values.len())
            .map(|k| (k as f64 - half) * self.spacing)
            .collect()
    }

    pub fn g_values(&self) -> &[f64] {
        &self.g_values
    }

    pub fn gx_values(&self) -> &[f64] {
        &self.gx_values
    }

    /// `(G^ε(x), G^ε_x(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        if x.abs() >= self.radius {
            return (self.tail_factor * green(x), self.tail_factor * green_prime(x));
        }
        let half = (self.g_values.len() / 2) as f64;
        let pos = x / self.spacing + half;
        let k = (pos.floor() as usize).min(self.g_values.len() - 2);
        let s = pos - k as f64;
        let h = self.spacing;
        let b = quintic_basis(s);
        let blend = |f: &[f64], d: &[f64], dd: &[f64]| {
            b[0] * f[k]
                + b[1] * h * d[k]
                + b[2] * h * h * dd[k]
                + b[3] * h * h * dd[k + 1]
                + b[4] * h * d[k + 1]
                + b[5] * f[k + 1]
        };
        let g = blend(&self.g_values, &self.gx_values, &self.gxx_values);
        let gx = blend(&self.gx_values, &self.gxx_values, &self.gxxx_values);
        (g, gx)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.eval(x).1
    }
}

/// Quintic Hermite weights for `f₀, h f₀', h² f₀'', h² f₁'', h f₁', f₁`.
fn quintic_basis(s: f64) -> [f64; 6] {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    [
        1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5,
        s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5,
        0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5),
        0.5 * (s3 - 2.0 * s4 + s5),
        -4.0 * s3 + 7.0 * s4 - 3.0 * s5,
        10.0 * s3 - 15.0 * s4 + 6.0 * s5,
    ]
}

/// Discrete convolution of uniformly spaced samples with `ρ_ε`.
///
/// Samples beyond either end are taken equal to the end value; the discrete
/// weights are normalised to unit sum so constants are reproduced exactly.
pub fn mollify_field(samples: &[f64], spacing: f64, mollifier: &Mollifier) -> Result<Vec<f64>> {
    let eps = mollifier.epsilon();
    if !(spacing > 0.0) || spacing > eps / 4.0 {
        return Err(Error::InvalidParameter(format!(
            "sample spacing {spacing} must lie in (0, eps/4 = {}]",
            eps / 4.0
        )));
    }
    if samples.is_empty() {
        return Ok(Vec::new());
    }
    let reach = (eps / spacing).ceil() as isize;
    let raw: Vec<f64> = (-reach..=reach)
        .map(|k| mollifier.eval(k as f64 * spacing))
        .collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let last = samples.len() as isize - 1;
    Ok((0..samples.len() as isize)
        .map(|i| {
            weights
                .iter()
                .enumerate()
                .map(|(j, w)| {
                    let idx = (i + j as isize - reach).clamp(0, last) as usize;
                    w * samples[idx]
                })
                .sum()
        })
        .collect())
}
