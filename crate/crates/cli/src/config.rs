use std::path::{Path, PathBuf};

use mch_core::momentum::{Momentum, MomentumSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Classical,
    Blowup,
    LifespanScan,
    PeakonFormation,
    Continuation,
    ConsistencySweep,
    WeakCheck,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Classical => "classical",
            Scenario::Blowup => "blowup",
            Scenario::LifespanScan => "lifespan-scan",
            Scenario::PeakonFormation => "peakon-formation",
            Scenario::Continuation => "continuation",
            Scenario::ConsistencySweep => "consistency-sweep",
            Scenario::WeakCheck => "weak-check",
        }
    }
}

/// Flat key-value run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Momentum descriptor, e.g. `bump(4)` or `bump(c=3, w=0.5) + atoms(0.5:0.5; L=1)`.
    pub momentum: String,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_delta_stop")]
    pub delta_stop: f64,
    /// Mollification scale of the regularized scenarios; defaults to `0.05·L`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Scale factors (lifespan-scan) or mollification scales (consistency-sweep).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Keep every n-th step as a snapshot.
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    #[serde(default)]
    pub svg: bool,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default = "default_c_safe")]
    pub c_safe: f64,
    /// Eulerian sample count per snapshot.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// `X_ξ` threshold for collapsed intervals; defaults to `10·delta_stop`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collapse_threshold: Option<f64>,
    /// Label window `[a, b]` for the focusing pre-pass of peakon-formation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus_window: Option<Vec<f64>>,
    #[serde(default = "default_focus_ramp")]
    pub focus_ramp: f64,
    #[serde(default = "default_focus_passes")]
    pub focus_passes: usize,
    /// Test-function centres and width; default to five centres across the support.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_centers: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_width: Option<f64>,
    #[serde(default = "default_weak_tol")]
    pub weak_tol: f64,
}

fn default_nodes() -> usize {
    257
}
fn default_delta_stop() -> f64 {
    1e-4
}
fn default_snapshot_every() -> usize {
    10
}
fn default_dt_max() -> f64 {
    1e-2
}
fn default_c_safe() -> f64 {
    0.1
}
fn default_grid_points() -> usize {
    1025
}
fn default_focus_ramp() -> f64 {
    0.03
}
fn default_focus_passes() -> usize {
    12
}
fn default_weak_tol() -> f64 {
    1e-2
}

/// Configuration problems; the runner maps them to exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    /// Checks every parameter and builds the momentum; nothing is written.
    pub fn validate(&self, base: Option<&Path>) -> Result<Momentum, ConfigError> {
        let bad = |msg: String| Err(ConfigError(msg));
        let positive = [
            ("delta_stop", self.delta_stop),
            ("dt_max", self.dt_max),
            ("c_safe", self.c_safe),
            ("focus_ramp", self.focus_ramp),
            ("weak_tol", self.weak_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("t_end", self.t_end),
            ("collapse_threshold", self.collapse_threshold),
            ("phi_width", self.phi_width),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if self.delta_stop > 0.1 {
            return bad(format!("delta_stop must not exceed 0.1, got {}", self.delta_stop));
        }
        if self.nodes < 5 || self.nodes % 2 == 0 {
            return bad(format!("nodes must be odd and at least 5, got {}", self.nodes));
        }
        if self.snapshot_every == 0 || self.grid_points < 3 || self.focus_passes == 0 {
            return bad("snapshot_every, grid_points and focus_passes must be positive".into());
        }
        if let Some(list) = &self.eps_list {
            if list.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return bad("eps_list entries must be positive".into());
            }
        }
        if let Some(w) = &self.focus_window {
            if w.len() != 2 || !(w[1] > w[0]) {
                return bad("focus_window must be [a, b] with a < b".into());
            }
        }
        let spec: MomentumSpec = self
            .momentum
            .parse()
            .map_err(|e| ConfigError(format!("momentum: {e}")))?;
        let m = spec
            .build(base)
            .map_err(|e| ConfigError(format!("momentum: {e}")))?;
        match self.scenario {
            Scenario::Classical | Scenario::Blowup | Scenario::LifespanScan | Scenario::PeakonFormation => {
                if m.has_atoms() {
                    return bad(format!(
                        "scenario {} needs a density without atoms",
                        self.scenario.name()
                    ));
                }
            }
            Scenario::Continuation if self.t_end.is_none() && m.has_atoms() => {
                return bad("continuation of data with atoms needs t_end".into());
            }
            _ => {}
        }
        match self.scenario {
            Scenario::Classical if self.t_end.is_none() => bad("classical needs t_end".into()),
            Scenario::LifespanScan if self.eps_list.as_ref().map_or(true, |l| l.is_empty()) => {
                bad("lifespan-scan needs a non-empty eps_list".into())
            }
            Scenario::ConsistencySweep => {
                let ok = self
                    .eps_list
                    .as_ref()
                    .is_some_and(|l| l.len() >= 4 && l.windows(2).all(|w| w[1] < w[0]));
                if ok {
                    Ok(m)
                } else {
                    bad("consistency-sweep needs a strictly decreasing eps_list of at least four entries".into())
                }
            }
            _ => Ok(m),
        }
    }

    /// Output directory: the command-line override, the config value, or `out`.
    pub fn out_dir(&self, cli: Option<&Path>) -> PathBuf {
        cli.map(Path::to_path_buf)
            .or_else(|| self.out.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}
