//! Permittivity profiles `f`, `g` sampled on a mesh, and Schwarz
//! symmetrization onto the equal-measure ball.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{ball_volume, equal_measure_radius, Mesh};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Constant(f64),
    /// `scale · |x|^exponent`; `scale = R^{-exponent}` when the ball radius
    /// exceeds one, so that values stay in `[0, 1]`.
    Power { exponent: f64, scale: f64 },
    Tabulated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    values: Vec<f64>,
    kind: ProfileKind,
    mesh_fingerprint: String,
}

impl Profile {
    /// Wraps node values after checking `0 ≤ f ≤ 1` and positivity on a set
    /// of positive measure.
    pub fn tabulated(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        Self::build(mesh, values, ProfileKind::Tabulated)
    }

    fn build(mesh: &Mesh, values: Vec<f64>, kind: ProfileKind) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::Config(format!(
                "profile has {} values, mesh has {} nodes",
                values.len(),
                mesh.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::Hypothesis(format!(
                "profile value {v} at node {i} outside [0, 1]"
            )));
        }
        let support: f64 = values
            .iter()
            .zip(mesh.weights())
            .filter(|(v, _)| **v > 0.0)
            .map(|(_, w)| w)
            .sum();
        if !(support > 0.0) {
            return Err(Error::Hypothesis(
                "profile vanishes up to a null set".into(),
            ));
        }
        Ok(Self {
            values,
            kind,
            mesh_fingerprint: mesh.fingerprint(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(*v))
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(*v))
    }

    /// Constant value, if the profile is constant.
    pub fn constant_value(&self) -> Option<f64> {
        let first = *self.values.first()?;
        self.values.iter().all(|&v| v == first).then_some(first)
    }

    pub fn mesh_fingerprint(&self) -> &str {
        &self.mesh_fingerprint
    }

    pub fn fingerprint(&self) -> String {
        let bits: String = self.values.iter().map(|v| format!("{:x}", v.to_bits())).collect();
        crate::mesh::fingerprint_str(&format!("{:?}{}", self.kind, bits))
    }

    pub(crate) fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.values.len() != mesh.len() || self.mesh_fingerprint != mesh.fingerprint() {
            return Err(Error::Config("profile was sampled on a different mesh".into()));
        }
        Ok(())
    }
}

/// `f ≡ c` with `0 < c ≤ 1`.
pub fn constant_profile(mesh: &Mesh, c: f64) -> Result<Profile> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Hypothesis(format!("constant profile {c} not in (0, 1]")));
    }
    Profile::build(mesh, vec![c; mesh.len()], ProfileKind::Constant(c))
}

/// `f(x) = |x|^α` on a radial mesh; divided by `R^α` when `R > 1`.
pub fn power_profile(mesh: &Mesh, exponent: f64) -> Result<Profile> {
    if !(exponent >= 0.0) || !exponent.is_finite() {
        return Err(Error::Hypothesis(format!("power exponent {exponent} must be >= 0")));
    }
    let (Some(radii), Some(radius)) = (mesh.radii(), mesh.radius()) else {
        return Err(Error::Config("power profile needs a radial mesh".into()));
    };
    let scale = if radius > 1.0 { radius.powf(-exponent) } else { 1.0 };
    let values = radii
        .iter()
        .map(|r| if exponent == 0.0 { 1.0 } else { (scale * r.powf(exponent)).min(1.0) })
        .collect();
    Profile::build(mesh, values, ProfileKind::Power { exponent, scale })
}

/// Reads a tabulated profile from CSV rows `node_index,value`. A header row
/// is allowed. Every node must appear exactly once.
pub fn load_profile_csv(mesh: &Mesh, path: impl AsRef<Path>) -> Result<Profile> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut values = vec![f64::NAN; mesh.len()];
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::Config(format!("{}: row {line} needs 2 columns", path.display())));
        }
        let (Ok(index), Ok(value)) = (record[0].parse::<usize>(), record[1].parse::<f64>()) else {
            if line == 0 {
                continue;
            }
            return Err(Error::Config(format!("{}: malformed row {line}", path.display())));
        };
        if index >= mesh.len() {
            return Err(Error::Config(format!(
                "{}: node index {index} out of range",
                path.display()
            )));
        }
        if !values[index].is_nan() {
            return Err(Error::Config(format!("{}: node {index} listed twice", path.display())));
        }
        values[index] = value;
    }
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Config(format!("{}: node {i} missing", path.display())));
    }
    Profile::tabulated(mesh, values)
}

/// Writes `node_index,value` rows.
pub fn write_profile_csv(profile: &Profile, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "value"])?;
    for (i, v) in profile.values.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Schwarz symmetrization: the radially non-increasing rearrangement of
/// `profile` on the ball of the same measure.
///
/// Nodes are treated as cells carrying their quadrature weight. Cells are
/// sorted by value (descending, ties by node index) and laid out along the
/// measure axis `s ∈ [0, |Ω|]`; the target node at radius `r` receives the
/// value of the cell covering `s = ω_N r^N`.
pub fn symmetrize(profile: &Profile, source: &Mesh, target: &Mesh) -> Result<Profile> {
    profile.check_mesh(source)?;
    let (Some(radii), Some(radius)) = (target.radii(), target.radius()) else {
        return Err(Error::Config("symmetrization target must be a radial mesh".into()));
    };
    let dim = target.dimension();
    if dim != source.dimension() {
        return Err(Error::Config(format!(
            "target dimension {dim} differs from source dimension {}",
            source.dimension()
        )));
    }
    let expected = equal_measure_radius(source.volume(), dim);
    if ((radius - expected) / expected).abs() > 1e-8 {
        return Err(Error::Config(format!(
            "target radius {radius} does not match equal-measure radius {expected}"
        )));
    }

    let mut order: Vec<usize> = (0..profile.values.len()).collect();
    order.sort_by(|&a, &b| {
        profile.values[b]
            .total_cmp(&profile.values[a])
            .then(a.cmp(&b))
    });
    let weights = source.weights();
    let mut cumulative = Vec::with_capacity(order.len());
    let mut acc = 0.0;
    for &k in &order {
        acc += weights[k];
        cumulative.push(acc);
    }

    let omega = ball_volume(dim);
    let values = radii
        .iter()
        .map(|r| {
            let s = omega * r.powi(dim as i32);
            let pos = cumulative.partition_point(|&c| c <= s).min(order.len() - 1);
            profile.values[order[pos]]
        })
        .collect();
    Profile::tabulated(target, values)
}

/// Quadrature measure of `{f > t}`.
pub fn superlevel_measure(profile: &Profile, mesh: &Mesh, t: f64) -> f64 {
    profile
        .values
        .iter()
        .zip(mesh.weights())
        .filter(|(v, _)| **v > t)
        .map(|(_, w)| w)
        .sum()
}
