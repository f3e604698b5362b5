//! Initial momenta `m₀`: compactly supported densities, atoms, or both.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::quad::{trapezoid_weights, GaussRule};
use crate::{Error, Result};

/// A Dirac mass `p δ(x - c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: f64,
    pub weight: f64,
}

/// Piecewise cubic Hermite interpolant through `(x_k, v_k)` with
/// finite-difference slopes; zero outside the sampled range.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    x: Vec<f64>,
    v: Vec<f64>,
    slope: Vec<f64>,
}

impl SampleTable {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if x.len() != v.len() || x.len() < 3 {
            return Err(Error::InvalidProfile(
                "sample table needs at least three (xi, m0) rows".into(),
            ));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidProfile(
                "sample abscissae must be strictly increasing".into(),
            ));
        }
        if v.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidProfile("non-finite sample value".into()));
        }
        let n = x.len();
        let mut slope = vec![0.0; n];
        for k in 1..n - 1 {
            let h0 = x[k] - x[k - 1];
            let h1 = x[k + 1] - x[k];
            // three-point derivative, second order on non-uniform spacing
            slope[k] = (h0 * h0 * (v[k + 1] - v[k]) + h1 * h1 * (v[k] - v[k - 1]))
                / (h0 * h1 * (h0 + h1));
        }
        slope[0] = (v[1] - v[0]) / (x[1] - x[0]);
        slope[n - 1] = (v[n - 1] - v[n - 2]) / (x[n - 1] - x[n - 2]);
        Ok(Self { x, v, slope })
    }

    /// Reads a two-column CSV with header `xi,m0`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_csv(&text)
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (a, b) = match (cols.next(), cols.next()) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(Error::InvalidProfile(format!(
                        "line {}: expected two columns",
                        lineno + 1
                    )))
                }
            };
            if lineno == 0 && a == "xi" && b == "m0" {
                continue;
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::InvalidProfile(format!("line {}: bad number {s:?}", lineno + 1))
                })
            };
            xs.push(parse(a)?);
            vs.push(parse(b)?);
        }
        Self::new(xs, vs)
    }

    pub fn first(&self) -> f64 {
        self.x[0]
    }

    pub fn last(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.x.len();
        if !(x >= self.x[0] && x <= self.x[n - 1]) {
            return 0.0;
        }
        let k = match self.x.partition_point(|&xk| xk <= x) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (x - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.v[k]
            + (s3 - 2.0 * s2 + s) * h * self.slope[k]
            + (-2.0 * s3 + 3.0 * s2) * self.v[k + 1]
            + (s3 - s2) * h * self.slope[k + 1]
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            x: self.x.clone(),
            v: self.v.iter().map(|v| v * factor).collect(),
            slope: self.slope.iter().map(|s| s * factor).collect(),
        }
    }
}

/// Density part of a momentum.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Zero,
    /// `c (1 - ((x - x0)/w)^2)^2` on `(x0 - w, x0 + w)`.
    Bump { amplitude: f64, center: f64, width: f64 },
    Table(SampleTable),
    Sum(Vec<Profile>),
}

impl Profile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Bump {
                amplitude,
                center,
                width,
            } => {
                let s = (x - center) / width;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    let q = 1.0 - s * s;
                    amplitude * q * q
                }
            }
            Profile::Table(t) => t.eval(x),
            Profile::Sum(parts) => parts.iter().map(|p| p.eval(x)).sum(),
        }
    }

    fn scaled(&self, factor: f64) -> Self {
        match self {
            Profile::Zero => Profile::Zero,
            Profile::Bump {
                amplitude,
                center,
                width,
            } => Profile::Bump {
                amplitude: amplitude * factor,
                center: *center,
                width: *width,
            },
            Profile::Table(t) => Profile::Table(t.scaled(factor)),
            Profile::Sum(parts) => Profile::Sum(parts.iter().map(|p| p.scaled(factor)).collect()),
        }
    }

    /// Points where the profile is only piecewise smooth.
    fn breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            Profile::Zero => {}
            Profile::Bump { center, width, .. } => {
                out.push(center - width);
                out.push(center + width);
            }
            Profile::Table(t) => out.extend_from_slice(t.knots()),
            Profile::Sum(parts) => parts.iter().for_each(|p| p.breakpoints(out)),
        }
    }

    fn extent(&self) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Bump { center, width, .. } => center.abs() + width,
            Profile::Table(t) => t.first().abs().max(t.last().abs()),
            Profile::Sum(parts) => parts.iter().map(Profile::extent).fold(0.0, f64::max),
        }
    }
}

/// An initial momentum supported in `(-L, L)` with cached norms
/// `M₁ = ‖density‖_{L¹} + Σ|pᵢ|` and `M_∞ = ess-sup |density|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Momentum {
    support_radius: f64,
    profile: Profile,
    atoms: Vec<Atom>,
    m1_norm: f64,
    m_inf_norm: f64,
}

impl Momentum {
    pub fn new(support_radius: f64, profile: Profile, atoms: Vec<Atom>) -> Result<Self> {
        let m = Self::unchecked(support_radius, profile, atoms)?;
        if !(m.m1_norm > 0.0) {
            return Err(Error::InvalidProfile(
                "momentum has zero total variation".into(),
            ));
        }
        Ok(m)
    }

    /// The zero momentum on `(-L, L)`.
    pub fn zero(support_radius: f64) -> Result<Self> {
        Self::unchecked(support_radius, Profile::Zero, Vec::new())
    }

    fn unchecked(support_radius: f64, profile: Profile, mut atoms: Vec<Atom>) -> Result<Self> {
        let l = support_radius;
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidProfile(format!(
                "support radius must be positive, got {l}"
            )));
        }
        if profile.extent() > l * (1.0 + 1e-12) {
            return Err(Error::InvalidProfile(format!(
                "density extends to {} beyond the support radius {l}",
                profile.extent()
            )));
        }
        let tol = 1e-12 * (1.0 + profile.eval(0.0).abs());
        for edge in [-l, l] {
            if profile.eval(edge).abs() > tol {
                return Err(Error::InvalidProfile(format!(
                    "density does not vanish at {edge} (value {})",
                    profile.eval(edge)
                )));
            }
        }
        atoms.sort_by(|a, b| a.position.total_cmp(&b.position));
        for a in &atoms {
            if !(a.position.abs() < l) {
                return Err(Error::InvalidProfile(format!(
                    "atom at {} outside (-{l}, {l})",
                    a.position
                )));
            }
            if a.weight == 0.0 || !a.weight.is_finite() {
                return Err(Error::InvalidProfile(format!(
                    "atom at {} has weight {}",
                    a.position, a.weight
                )));
            }
        }
        if atoms.windows(2).any(|w| w[0].position == w[1].position) {
            return Err(Error::InvalidProfile("atom positions must be distinct".into()));
        }

        let (density_l1, m_inf_norm) = density_norms(&profile, l);
        let m1_norm = density_l1 + atoms.iter().map(|a| a.weight.abs()).sum::<f64>();
        Ok(Self {
            support_radius: l,
            profile,
            atoms,
            m1_norm,
            m_inf_norm,
        })
    }

    /// `bump(c)`: `c (1 - x^2)^2` on `(-1, 1)`.
    pub fn bump(amplitude: f64) -> Result<Self> {
        Self::scaled_bump(amplitude, 1.0)
    }

    /// `c (1 - (x/w)^2)^2` on `(-w, w)`.
    pub fn scaled_bump(amplitude: f64, width: f64) -> Result<Self> {
        Self::new(
            width,
            Profile::Bump {
                amplitude,
                center: 0.0,
                width,
            },
            Vec::new(),
        )
    }

    pub fn atoms_only(support_radius: f64, atoms: Vec<Atom>) -> Result<Self> {
        Self::new(support_radius, Profile::Zero, atoms)
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn has_atoms(&self) -> bool {
        !self.atoms.is_empty()
    }

    pub fn m1_norm(&self) -> f64 {
        self.m1_norm
    }

    pub fn m_inf_norm(&self) -> f64 {
        self.m_inf_norm
    }

    /// Density part `m₀(x)`; atoms excluded.
    pub fn density(&self, x: f64) -> f64 {
        self.profile.eval(x)
    }

    /// `∫_a^b` of the density plus the atoms with `a ≤ cᵢ ≤ b`.
    ///
    /// The density is integrated by 16-point Gauss–Legendre on panels split at the
    /// profile breakpoints, so piecewise-polynomial profiles are integrated exactly.
    pub fn partial_integral(&self, a: f64, b: f64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|at| a <= at.position && at.position <= b)
            .map(|at| at.weight)
            .sum();
        let lo = a.max(-self.support_radius);
        let hi = b.min(self.support_radius);
        if !(hi > lo) {
            return atoms;
        }
        let rule = GaussRule::new(16);
        let mut cuts = vec![lo, hi];
        self.profile.breakpoints(&mut cuts);
        cuts.retain(|&c| c >= lo && c <= hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let density: f64 = cuts
            .windows(2)
            .map(|w| rule.integrate(w[0], w[1], |x| self.profile.eval(x)))
            .sum();
        density + atoms
    }

    /// Multiplies the density and every atom weight by `factor`.
    pub fn scale(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        Ok(Self {
            support_radius: self.support_radius,
            profile: self.profile.scaled(factor),
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    position: a.position,
                    weight: a.weight * factor,
                })
                .collect(),
            m1_norm: self.m1_norm * factor,
            m_inf_norm: self.m_inf_norm * factor,
        })
    }
}

fn density_norms(profile: &Profile, l: f64) -> (f64, f64) {
    match profile {
        Profile::Zero => (0.0, 0.0),
        Profile::Bump {
            amplitude, width, ..
        } => (16.0 * amplitude.abs() * width / 15.0, amplitude.abs()),
        _ => {
            let mut cuts = vec![-l, l];
            profile.breakpoints(&mut cuts);
            cuts.retain(|c| c.abs() <= l);
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let rule = GaussRule::new(12);
            let mut l1 = 0.0;
            let mut sup: f64 = 0.0;
            for w in cuts.windows(2) {
                let panels = (((w[1] - w[0]) / (2.0 * l) * 4096.0).ceil() as usize).max(4);
                l1 += rule.composite(w[0], w[1], panels, |x| profile.eval(x).abs());
                for k in 0..=64 {
                    let x = w[0] + (w[1] - w[0]) * k as f64 / 64.0;
                    sup = sup.max(profile.eval(x).abs());
                }
            }
            (l1, sup)
        }
    }
}

/// Textual momentum descriptor, e.g. `bump(4)`, `bump(c=1, w=0.1)`,
/// `atoms(-0.5:1, 0.5:0.5; L=1)`, `table(path.csv)` or a `+`-joined sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MomentumSpec {
    terms: Vec<SpecTerm>,
}

#[derive(Debug, Clone, PartialEq)]
enum SpecTerm {
    Bump {
        amplitude: f64,
        width: f64,
        center: f64,
        radius: Option<f64>,
    },
    Atoms {
        atoms: Vec<Atom>,
        radius: Option<f64>,
    },
    Table {
        path: PathBuf,
    },
}

impl MomentumSpec {
    /// Builds the momentum; relative table paths resolve against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<Momentum> {
        let mut profiles = Vec::new();
        let mut atoms = Vec::new();
        let mut radius: f64 = 0.0;
        for term in &self.terms {
            match term {
                SpecTerm::Bump {
                    amplitude,
                    width,
                    center,
                    radius: r,
                } => {
                    if !(*width > 0.0) {
                        return Err(Error::InvalidProfile(format!("bump width {width}")));
                    }
                    radius = radius.max(r.unwrap_or(center.abs() + width));
                    profiles.push(Profile::Bump {
                        amplitude: *amplitude,
                        center: *center,
                        width: *width,
                    });
                }
                SpecTerm::Atoms { atoms: a, radius: r } => {
                    let reach = a.iter().map(|x| x.position.abs()).fold(0.0, f64::max);
                    radius = radius.max(r.unwrap_or_else(|| (reach + 0.5).max(1.0)));
                    atoms.extend_from_slice(a);
                }
                SpecTerm::Table { path } => {
                    let full = match base {
                        Some(b) if path.is_relative() => b.join(path),
                        _ => path.clone(),
                    };
                    let t = SampleTable::from_csv(&full)?;
                    radius = radius.max(t.first().abs().max(t.last().abs()));
                    profiles.push(Profile::Table(t));
                }
            }
        }
        let profile = match profiles.len() {
            0 => Profile::Zero,
            1 => profiles.pop().unwrap(),
            _ => Profile::Sum(profiles),
        };
        Momentum::new(radius, profile, atoms)
    }
}

fn parse_number(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidProfile(format!("bad number {:?}", s.trim())))
}

fn parse_term(term: &str) -> Result<SpecTerm> {
    let term = term.trim();
    let open = term
        .find('(')
        .ok_or_else(|| Error::InvalidProfile(format!("expected name(args) in {term:?}")))?;
    if !term.ends_with(')') {
        return Err(Error::InvalidProfile(format!("unclosed argument list in {term:?}")));
    }
    let name = term[..open].trim();
    let body = &term[open + 1..term.len() - 1];
    match name {
        "bump" => {
            let (mut c, mut w, mut x0, mut r) = (None, 1.0, 0.0, None);
            for (k, arg) in body.split(',').map(str::trim).filter(|a| !a.is_empty()).enumerate() {
                match arg.split_once('=') {
                    Some((key, v)) => match key.trim() {
                        "c" => c = Some(parse_number(v)?),
                        "w" => w = parse_number(v)?,
                        "x0" => x0 = parse_number(v)?,
                        "L" => r = Some(parse_number(v)?),
                        other => {
                            return Err(Error::InvalidProfile(format!("unknown bump key {other:?}")))
                        }
                    },
                    None if k == 0 => c = Some(parse_number(arg)?),
                    None => return Err(Error::InvalidProfile(format!("stray argument {arg:?}"))),
                }
            }
            Ok(SpecTerm::Bump {
                amplitude: c.ok_or_else(|| Error::InvalidProfile("bump needs an amplitude".into()))?,
                width: w,
                center: x0,
                radius: r,
            })
        }
        "atoms" => {
            let (list, opts) = body.split_once(';').unwrap_or((body, ""));
            let mut atoms = Vec::new();
            for entry in list.split(',').map(str::trim).filter(|e| !e.is_empty()) {
                let (c, p) = entry.split_once(':').ok_or_else(|| {
                    Error::InvalidProfile(format!("atom {entry:?} is not position:weight"))
                })?;
                atoms.push(Atom {
                    position: parse_number(c)?,
                    weight: parse_number(p)?,
                });
            }
            let mut radius = None;
            for opt in opts.split(',').map(str::trim).filter(|e| !e.is_empty()) {
                match opt.split_once('=') {
                    Some(("L", v)) => radius = Some(parse_number(v)?),
                    _ => return Err(Error::InvalidProfile(format!("unknown atoms option {opt:?}"))),
                }
            }
            Ok(SpecTerm::Atoms { atoms, radius })
        }
        "table" => Ok(SpecTerm::Table {
            path: PathBuf::from(body.trim()),
        }),
        other => Err(Error::InvalidProfile(format!("unknown profile {other:?}"))),
    }
}

impl FromStr for MomentumSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        // '+' separates terms only at parenthesis depth zero.
        let mut terms = Vec::new();
        let mut depth = 0i32;
        let mut start = 0;
        for (i, ch) in s.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                '+' if depth == 0 => {
                    terms.push(parse_term(&s[start..i])?);
                    start = i + 1;
                }
                _ => {}
            }
        }
        terms.push(parse_term(&s[start..])?);
        Ok(Self { terms })
    }
}

impl fmt::Display for MomentumSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, term) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            match term {
                SpecTerm::Bump {
                    amplitude,
                    width,
                    center,
                    radius,
                } => {
                    write!(f, "bump(c={amplitude:?}, w={width:?}, x0={center:?}")?;
                    if let Some(r) = radius {
                        write!(f, ", L={r:?}")?;
                    }
                    f.write_str(")")?;
                }
                SpecTerm::Atoms { atoms, radius } => {
                    f.write_str("atoms(")?;
                    for (k, a) in atoms.iter().enumerate() {
                        if k > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{:?}:{:?}", a.position, a.weight)?;
                    }
                    if let Some(r) = radius {
                        write!(f, "; L={r:?}")?;
                    }
                    f.write_str(")")?;
                }
                SpecTerm::Table { path } => write!(f, "table({})", path.display())?,
            }
        }
        Ok(())
    }
}

impl TryFrom<String> for MomentumSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MomentumSpec> for String {
    fn from(spec: MomentumSpec) -> String {
        spec.to_string()
    }
}

/// Builds a momentum from a descriptor string.
pub fn build_momentum(descriptor: &str) -> Result<Momentum> {
    descriptor.parse::<MomentumSpec>()?.build(None)
}

/// Uniform label grid on `[-L, L]` with trapezoid weights.
///
/// Trapezoid weights make every split partial sum `Σ_{j<i} w_j f_j + w_i f_i / 2` a
/// consistent rule for `∫_{-L}^{ξ_i} f`, which the product velocity formula relies on.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    half_width: f64,
}

impl LabelGrid {
    pub fn uniform(half_width: f64, n: usize) -> Result<Self> {
        if n < 3 || n % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "label grid needs an odd node count >= 3, got {n}"
            )));
        }
        if !(half_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "label half-width must be positive, got {half_width}"
            )));
        }
        let h = 2.0 * half_width / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|j| -half_width + j as f64 * h).collect();
        nodes[n - 1] = half_width;
        // exact symmetry about the centre
        for j in 0..n / 2 {
            nodes[j] = -nodes[n - 1 - j];
        }
        nodes[n / 2] = 0.0;
        Ok(Self {
            nodes,
            weights: trapezoid_weights(n, h),
            half_width,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.nodes.len() - 1) as f64
    }
}

/// Sign class of a label: the sets A⁺, A⁻ and A⁰ of labels where `m₀` is
/// positive, negative or zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignClass {
    Positive,
    Negative,
    Zero,
}

impl SignClass {
    pub fn of(value: f64) -> Self {
        if value > 0.0 {
            SignClass::Positive
        } else if value < 0.0 {
            SignClass::Negative
        } else {
            SignClass::Zero
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_norms() {
        let m = Momentum::bump(1.0).unwrap();
        assert!((m.m1_norm() - 16.0 / 15.0).abs() < 1e-14);
        assert_eq!(m.m_inf_norm(), 1.0);
        assert_eq!(m.density(1.0), 0.0);
        assert_eq!(m.density(-1.3), 0.0);
    }

    #[test]
    fn atom_only_norms() {
        let m = build_momentum("atoms(0:2)").unwrap();
        assert_eq!(m.m1_norm(), 2.0);
        assert_eq!(m.m_inf_norm(), 0.0);
        assert_eq!(m.density(0.0), 0.0);
    }

    #[test]
    fn partial_integrals() {
        let m = Momentum::bump(1.0).unwrap();
        assert!((m.partial_integral(-1.0, 1.0) - 16.0 / 15.0).abs() < 1e-14);
        assert_eq!(m.partial_integral(0.3, 0.3), 0.0);
        let atom = build_momentum("atoms(0.25:1.5)").unwrap();
        assert_eq!(atom.partial_integral(0.25, 0.25), 1.5);
        assert_eq!(atom.partial_integral(0.3, 0.9), 0.0);
    }

    #[test]
    fn scaling_is_linear() {
        let m = Momentum::bump(1.0).unwrap();
        let m2 = m.scale(2.0).unwrap();
        assert!((m2.m1_norm() - 32.0 / 15.0).abs() < 1e-14);
        assert_eq!(m.scale(1.0).unwrap(), m);
        let a = build_momentum("atoms(0:2)").unwrap().scale(0.5).unwrap();
        assert_eq!(a.atoms()[0].weight, 1.0);
        assert!(m.scale(0.0).is_err());
    }

    #[test]
    fn rejects_bad_profiles() {
        // table not vanishing at its right end
        let t = SampleTable::new(vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 0.5]).unwrap();
        assert!(Momentum::new(1.0, Profile::Table(t), vec![]).is_err());
        assert!(build_momentum("bump(0)").is_err());
        assert!(build_momentum("atoms(1.5:1; L=1)").is_err());
        assert!(build_momentum("atoms(0.1:1, 0.1:2)").is_err());
        assert!(build_momentum("wave(1)").is_err());
    }

    #[test]
    fn descriptors_parse_and_round_trip() {
        let spec: MomentumSpec = "bump(c=1, w=0.1) + atoms(0.05:0.2; L=0.1)".parse().unwrap();
        let again: MomentumSpec = spec.to_string().parse().unwrap();
        assert_eq!(spec, again);
        let m = spec.build(None).unwrap();
        assert!((m.m1_norm() - (1.6 / 15.0 + 0.2)).abs() < 1e-14);
        assert_eq!(m.support_radius(), 0.1);
        assert_eq!(build_momentum("bump(4)").unwrap().m_inf_norm(), 4.0);
    }

    #[test]
    fn table_profile() {
        let xs: Vec<f64> = (0..=40).map(|k| -1.0 + k as f64 * 0.05).collect();
        let vs: Vec<f64> = xs.iter().map(|x| (1.0 - x * x).powi(2)).collect();
        let csv: String = std::iter::once("xi,m0".to_string())
            .chain(xs.iter().zip(&vs).map(|(x, v)| format!("{x},{v}")))
            .collect::<Vec<_>>()
            .join("\n");
        let t = SampleTable::parse_csv(&csv).unwrap();
        for (x, v) in xs.iter().zip(&vs) {
            assert!((t.eval(*x) - v).abs() < 1e-15);
        }
        let m = Momentum::new(1.0, Profile::Table(t), vec![]).unwrap();
        assert!((m.m1_norm() - 16.0 / 15.0).abs() < 1e-4);
    }

    #[test]
    fn label_grid_weights() {
        let g = LabelGrid::uniform(1.5, 65).unwrap();
        let w = g.weights();
        assert!((w.iter().sum::<f64>() - 3.0).abs() < 1e-12);
        let first: f64 = g.nodes().iter().zip(w).map(|(x, w)| x * w).sum();
        assert!(first.abs() < 1e-14);
        assert_eq!(g.nodes()[0], -1.5);
        assert_eq!(g.nodes()[64], 1.5);
        assert!(g.nodes().windows(2).all(|p| p[1] > p[0]));
        assert!(LabelGrid::uniform(1.0, 64).is_err());
    }
}
