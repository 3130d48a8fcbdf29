//! JSON run configuration shared by all commands.
//!
//! ```json
//! {
//!   "domain": { "kind": "radial", "dimension": 2, "radius": 1.0, "nodes": 1024 },
//!   "f": { "kind": "constant", "value": 1.0 },
//!   "lambda": 0.5, "mu": 0.5
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::curve::BisectionConfig;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, MIN_NODES};
use crate::profiles::{constant_profile, load_profile_csv, power_profile, Profile};
use crate::solver::SolveConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Radial {
        dimension: usize,
        radius: f64,
        /// Number of radial intervals.
        nodes: usize,
    },
    Rect {
        lx: f64,
        ly: f64,
        nx: usize,
        ny: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant { value: f64 },
    Power { exponent: f64 },
    /// CSV with `index,value` rows; relative paths resolve against the
    /// config file's directory.
    Tabulated { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub f: ProfileSpec,
    /// Defaults to `f`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<ProfileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fractions: Option<Vec<f64>>,
    #[serde(default = "default_alpha")]
    pub moser_alpha: f64,
    #[serde(default)]
    pub solver: SolveConfig,
    #[serde(default)]
    pub bisection: BisectionConfig,
    /// Radial intervals of the equal-measure ball used by `symmetrize`.
    #[serde(default = "default_sym_nodes")]
    pub symmetrize_nodes: usize,
    /// Criterion ids or names for `check`; empty runs all.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub criteria: Vec<String>,
}

fn default_alpha() -> f64 {
    2.0
}

fn default_sym_nodes() -> usize {
    512
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Curve,
    Eigen,
    Bounds,
    Symmetrize,
    Extremal,
    Check,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// A validated configuration with its profiles resolved.
#[derive(Debug)]
pub struct Prepared {
    pub config: RunConfig,
    pub mesh: Mesh,
    pub f: Profile,
    pub g: Profile,
    pub fingerprint: String,
}

fn scaled(n: usize, scale: f64) -> usize {
    ((n as f64 * scale).round() as usize).max(MIN_NODES)
}

impl RunConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, Vec<Violation>> {
        serde_json::from_str(text).map_err(|e| vec![Violation::new("config", e.to_string())])
    }

    /// Multiplies every node count by `scale`.
    pub fn with_resolution_scale(mut self, scale: f64) -> Self {
        if scale != 1.0 {
            self.domain = match self.domain {
                DomainSpec::Radial { dimension, radius, nodes } => DomainSpec::Radial {
                    dimension,
                    radius,
                    nodes: scaled(nodes, scale),
                },
                DomainSpec::Rect { lx, ly, nx, ny } => DomainSpec::Rect {
                    lx,
                    ly,
                    nx: scaled(nx, scale),
                    ny: scaled(ny, scale),
                },
            };
            self.symmetrize_nodes = scaled(self.symmetrize_nodes, scale);
        }
        self
    }

    /// SHA-256 of the canonical JSON form, first 8 bytes in hex.
    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes())[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn g_spec(&self) -> &ProfileSpec {
        self.g.as_ref().unwrap_or(&self.f)
    }

    /// Every violated field, without building anything.
    pub fn violations(&self, cmd: Command) -> Vec<Violation> {
        let mut v = Vec::new();
        match &self.domain {
            DomainSpec::Radial { dimension, radius, nodes } => {
                if *dimension == 0 {
                    v.push(Violation::new("domain.dimension", "must be >= 1"));
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    v.push(Violation::new("domain.radius", "must be > 0"));
                }
                if *nodes < MIN_NODES {
                    v.push(Violation::new("domain.nodes", format!("must be >= {MIN_NODES}")));
                }
            }
            DomainSpec::Rect { lx, ly, nx, ny } => {
                for (name, x) in [("domain.lx", lx), ("domain.ly", ly)] {
                    if !(*x > 0.0 && x.is_finite()) {
                        v.push(Violation::new(name, "must be > 0"));
                    }
                }
                for (name, n) in [("domain.nx", nx), ("domain.ny", ny)] {
                    if *n < MIN_NODES {
                        v.push(Violation::new(name, format!("must be >= {MIN_NODES}")));
                    }
                }
            }
        }
        let radial = matches!(self.domain, DomainSpec::Radial { .. });
        for (name, p) in [("f", Some(&self.f)), ("g", self.g.as_ref())] {
            match p {
                Some(ProfileSpec::Constant { value }) if !(*value > 0.0 && *value <= 1.0) => {
                    v.push(Violation::new(&format!("{name}.value"), "must lie in (0, 1]"));
                }
                Some(ProfileSpec::Power { exponent }) => {
                    if !(*exponent >= 0.0) {
                        v.push(Violation::new(&format!("{name}.exponent"), "must be >= 0"));
                    }
                    if !radial {
                        v.push(Violation::new(&format!("{name}.kind"), "power profiles need a radial domain"));
                    }
                }
                _ => {}
            }
        }
        let nonneg = |v: &mut Vec<Violation>, name: &str, x: Option<f64>, required: bool| match x {
            None if required => v.push(Violation::new(name, "required by this command")),
            Some(x) if !(x >= 0.0 && x.is_finite()) => v.push(Violation::new(name, "must be finite and >= 0")),
            _ => {}
        };
        let needs_pair = matches!(cmd, Command::Solve | Command::Eigen);
        nonneg(&mut v, "lambda", self.lambda, needs_pair);
        nonneg(&mut v, "mu", self.mu, needs_pair);
        match self.theta {
            None if cmd == Command::Extremal => v.push(Violation::new("theta", "required by this command")),
            Some(t) if !(t > 0.0 && t.is_finite()) => v.push(Violation::new("theta", "must be > 0")),
            _ => {}
        }
        match &self.theta_grid {
            None if cmd == Command::Curve => v.push(Violation::new("theta_grid", "required by this command")),
            Some(grid) => {
                if grid.is_empty() {
                    v.push(Violation::new("theta_grid", "must not be empty"));
                }
                if grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                    v.push(Violation::new("theta_grid", "entries must be > 0"));
                }
                if grid.windows(2).any(|w| w[1] <= w[0]) {
                    v.push(Violation::new("theta_grid", "must be strictly increasing"));
                }
            }
            None => {}
        }
        match &self.fractions {
            None if cmd == Command::Extremal => v.push(Violation::new("fractions", "required by this command")),
            Some(fr) => {
                if fr.is_empty() || fr.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
                    v.push(Violation::new("fractions", "entries must lie in (0, 1)"));
                }
                if fr.windows(2).any(|w| w[1] <= w[0]) {
                    v.push(Violation::new("fractions", "must be strictly increasing"));
                }
            }
            None => {}
        }
        if !(self.moser_alpha > 1.0) {
            v.push(Violation::new("moser_alpha", "must be > 1"));
        }
        if let Err(e) = self.solver.validate() {
            v.push(Violation::new("solver", e.to_string()));
        }
        if let Err(e) = self.bisection.validate() {
            v.push(Violation::new("bisection", e.to_string()));
        }
        if self.symmetrize_nodes < MIN_NODES {
            v.push(Violation::new("symmetrize_nodes", format!("must be >= {MIN_NODES}")));
        }
        for key in &self.criteria {
            if crate::conformance::resolve_criterion(key).is_none() {
                v.push(Violation::new("criteria", format!("unknown criterion '{key}'")));
            }
        }
        v
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        match self.domain {
            DomainSpec::Radial { dimension, radius, nodes } => Mesh::radial(dimension, radius, nodes),
            DomainSpec::Rect { lx, ly, nx, ny } => Mesh::rect(lx, ly, nx, ny),
        }
    }

    /// Validates, then builds the mesh and both profiles. `base` is the
    /// directory that relative profile paths resolve against.
    pub fn prepare(self, cmd: Command, base: &Path) -> std::result::Result<Prepared, Vec<Violation>> {
        let mut violations = self.violations(cmd);
        if !violations.is_empty() {
            return Err(violations);
        }
        let mesh = self
            .build_mesh()
            .map_err(|e| vec![Violation::new("domain", e.to_string())])?;
        let mut load = |name: &str, spec: &ProfileSpec| -> Option<Profile> {
            let r = match spec {
                ProfileSpec::Constant { value } => constant_profile(&mesh, *value),
                ProfileSpec::Power { exponent } => power_profile(&mesh, *exponent),
                ProfileSpec::Tabulated { path } => load_profile_csv(&mesh, base.join(path)),
            };
            r.map_err(|e| violations.push(Violation::new(name, e.to_string()))).ok()
        };
        let f = load("f", &self.f);
        let g = load("g", self.g_spec());
        match (f, g) {
            (Some(f), Some(g)) if violations.is_empty() => {
                let fingerprint = self.fingerprint();
                Ok(Prepared {
                    config: self,
                    mesh,
                    f,
                    g,
                    fingerprint,
                })
            }
            _ => Err(violations),
        }
    }
}

/// Reads and parses a config file.
pub fn load(path: &Path) -> std::result::Result<RunConfig, Vec<Violation>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![Violation::new("config", format!("{}: {e}", path.display()))])?;
    RunConfig::from_json(&text)
}

impl From<Vec<Violation>> for Error {
    fn from(v: Vec<Violation>) -> Self {
        Error::Config(
            v.iter()
                .map(|v| format!("{}: {}", v.field, v.message))
                .collect::<Vec<_>>()
                .join("; "),
        )
    }
}
