//! Quadrature helpers shared by the modules.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Gauss–Legendre rule on `[-1, 1]` stored as `(node, weight)` pairs.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pairs: Vec<(f64, f64)>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order.max(1)).expect("order is positive");
        let rule = GaussLegendre::new(order);
        Self {
            pairs: rule.as_node_weight_pairs().to_vec(),
        }
    }

    pub fn order(&self) -> usize {
        self.pairs.len()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.pairs
            .iter()
            .map(move |&(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule over `panels` equal panels of `[a, b]`.
    pub fn composite(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * h;
                let hi = if k + 1 == panels { b } else { lo + h };
                self.integrate(lo, hi, &mut f)
            })
            .sum()
    }
}

/// Composite Simpson weights for `n` (odd) equally spaced nodes with spacing `h`.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 3 && n % 2 == 1, "Simpson rule needs an odd node count >= 3");
    (0..n)
        .map(|j| {
            let c = if j == 0 || j == n - 1 {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

/// Trapezoid weights for `n` equally spaced nodes with spacing `h`.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 2, "trapezoid rule needs at least two nodes");
    (0..n)
        .map(|j| if j == 0 || j == n - 1 { 0.5 * h } else { h })
        .collect()
}

/// Trapezoid rule over arbitrary (sorted) abscissae.
pub fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2)
        .zip(f.windows(2))
        .map(|(xs, fs)| 0.5 * (xs[1] - xs[0]) * (fs[0] + fs[1]))
        .sum()
}

/// Integral over `[t0, t2]` of the quadratic through three samples.
fn quadratic_pair(t: [f64; 3], f: [f64; 3]) -> f64 {
    let h0 = t[1] - t[0];
    let h1 = t[2] - t[1];
    let s = h0 + h1;
    s / 6.0 * ((2.0 - h1 / h0) * f[0] + s * s / (h0 * h1) * f[1] + (2.0 - h0 / h1) * f[2])
}

/// Integral over `[t1, t2]` of the quadratic through three samples.
fn quadratic_last(t: [f64; 3], f: [f64; 3]) -> f64 {
    let h0 = t[1] - t[0];
    let h1 = t[2] - t[1];
    let s = h0 + h1;
    h1 * (f[2] * (2.0 * h1 + 3.0 * h0) / (6.0 * s) + f[1] * (h1 + 3.0 * h0) / (6.0 * h0)
        - f[0] * h1 * h1 / (6.0 * h0 * s))
}

/// Integral over `[t0, t1]` of the quadratic through three samples.
fn quadratic_first(t: [f64; 3], f: [f64; 3]) -> f64 {
    quadratic_pair(t, f) - quadratic_last(t, f)
}

/// Composite Simpson rule over sorted, possibly non-uniform, sample times.
///
/// Pairs of intervals use the interpolating quadratic; an odd trailing interval
/// reuses the last three samples. Exact for quadratics; fourth order on uniform steps.
pub fn integrate_samples(t: &[f64], f: &[f64]) -> f64 {
    assert_eq!(t.len(), f.len());
    match t.len() {
        0 | 1 => 0.0,
        2 => 0.5 * (t[1] - t[0]) * (f[0] + f[1]),
        n => {
            let mut total = 0.0;
            let mut k = 0;
            while k + 2 < n {
                total += quadratic_pair([t[k], t[k + 1], t[k + 2]], [f[k], f[k + 1], f[k + 2]]);
                k += 2;
            }
            if k + 1 < n {
                total += quadratic_last(
                    [t[n - 3], t[n - 2], t[n - 1]],
                    [f[n - 3], f[n - 2], f[n - 1]],
                );
            }
            total
        }
    }
}

/// Running integral `∫_{t0}^{t_k} f` at every sample, interval by interval.
pub fn cumulative_samples(t: &[f64], f: &[f64]) -> Vec<f64> {
    assert_eq!(t.len(), f.len());
    let n = t.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * (t[1] - t[0]) * (f[0] + f[1]);
        return out;
    }
    out[1] = quadratic_first([t[0], t[1], t[2]], [f[0], f[1], f[2]]);
    for k in 2..n {
        out[k] = out[k - 1]
            + quadratic_last([t[k - 2], t[k - 1], t[k]], [f[k - 2], f[k - 1], f[k]]);
    }
    out
}
