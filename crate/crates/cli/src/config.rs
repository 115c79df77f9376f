//! Run configuration: a TOML document with one command and its inputs.

use crate::error::CliError;
use hplane_core::exhaustion::{center_on_hull, ExhaustionConfig};
use hplane_core::math::{Vec3, PI};
use hplane_core::solver::SolverConfig;
use hplane_core::umbilic::IdealCurve;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Annulus,
    Pair,
    Sweep,
    Exhaust,
    Verify,
    Accept,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Circle,
    /// Gnomonic ellipse on the ideal sphere.
    Ellipse,
    FourierCircle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub kind: CurveKind,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_axis")]
    pub axis: [f64; 3],
    /// Angular radius of the circle (base radius for `fourier-circle`).
    #[serde(default = "default_angular_radius")]
    pub angular_radius: f64,
    /// Angular semi-axes of an ellipse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semi_axes: Option<[f64; 2]>,
    /// Coefficients of `cos(2t), cos(3t), …` added to the polar angle.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<f64>,
    /// Boost the curve along its axis so the origin sits in the middle of its hull.
    #[serde(default)]
    pub center: bool,
}

impl Default for CurveSpec {
    fn default() -> Self {
        CurveSpec {
            kind: CurveKind::Circle,
            samples: default_samples(),
            axis: default_axis(),
            angular_radius: default_angular_radius(),
            semi_axes: None,
            coefficients: Vec::new(),
            center: false,
        }
    }
}

impl CurveSpec {
    pub fn build(&self) -> Result<IdealCurve, CliError> {
        let axis = Vec3::from(self.axis);
        if !(axis.norm() > 0.0) {
            return Err(CliError::Validation("curve.axis must be nonzero".into()));
        }
        let curve = match self.kind {
            CurveKind::Circle => IdealCurve::circle(axis, self.angular_radius, self.samples),
            CurveKind::Ellipse => {
                let [a, b] = self.semi_axes.ok_or_else(|| CliError::Validation("ellipse needs curve.semi_axes".into()))?;
                IdealCurve::ellipse(axis, a, b, self.samples)
            }
            CurveKind::FourierCircle => IdealCurve::fourier_circle(axis, self.angular_radius, &self.coefficients, self.samples),
        }
        .map_err(|e| CliError::Validation(format!("curve: {e}")))?;
        if !curve.is_simple() {
            return Err(CliError::Validation("curve is not simple".into()));
        }
        if self.center {
            return Ok(center_on_hull(&curve, 0.0, 64).map_err(|e| CliError::Validation(format!("curve: {e}")))?.0);
        }
        Ok(curve)
    }
}

/// The solver settings a run may override.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_gradient_tolerance")]
    pub gradient_tolerance: f64,
    #[serde(default = "default_edge")]
    pub init_edge_length: f64,
    #[serde(default = "default_remesh_every")]
    pub remesh_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_edge_length: Option<f64>,
    #[serde(default = "default_lbfgs")]
    pub lbfgs_memory: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            max_iterations: default_max_iterations(),
            gradient_tolerance: default_gradient_tolerance(),
            init_edge_length: default_edge(),
            remesh_every: default_remesh_every(),
            target_edge_length: None,
            lbfgs_memory: default_lbfgs(),
        }
    }
}

/// Coaxial boundary circles for the `annulus` command (hyperbolic distances).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusSpec {
    /// Distance of both circles from the common axis.
    #[serde(default = "default_axis_distance")]
    pub axis_distance: f64,
    /// Half the separation of the circles along the axis.
    #[serde(default = "default_half_height")]
    pub half_height: f64,
    #[serde(default = "default_annulus_samples")]
    pub samples: usize,
}

impl Default for AnnulusSpec {
    fn default() -> Self {
        AnnulusSpec { axis_distance: default_axis_distance(), half_height: default_half_height(), samples: default_annulus_samples() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, with = "seed_repr")]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_list: Option<Vec<f64>>,
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_core_radius")]
    pub core_radius: f64,
    #[serde(default = "default_hull_samples")]
    pub hull_samples: usize,
    /// Upper-half-space height of the collar in the graph check.
    #[serde(default = "default_graph_height")]
    pub graph_height: f64,
    #[serde(default)]
    pub curve: CurveSpec,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub annulus: AnnulusSpec,
}

/// TOML integers are signed 64-bit; seeds beyond `i64::MAX` travel as strings.
pub mod seed_repr {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(i64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Int(v) => u64::try_from(v).map_err(|_| de::Error::custom("seed must be non-negative")),
            Repr::Text(t) => t.parse().map_err(|_| de::Error::custom(format!("seed {t:?} is not a u64"))),
        }
    }
}

fn default_samples() -> usize {
    256
}
fn default_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}
fn default_angular_radius() -> f64 {
    PI / 2.0
}
fn default_max_iterations() -> usize {
    4000
}
fn default_gradient_tolerance() -> f64 {
    1e-5
}
fn default_edge() -> f64 {
    0.1
}
fn default_remesh_every() -> usize {
    50
}
fn default_lbfgs() -> usize {
    8
}
fn default_axis_distance() -> f64 {
    1.0
}
fn default_half_height() -> f64 {
    0.3
}
fn default_annulus_samples() -> usize {
    64
}
fn default_threads() -> usize {
    1
}
fn default_output() -> PathBuf {
    PathBuf::from("hplane-out")
}
fn default_radii() -> Vec<f64> {
    vec![2.0, 3.0, 4.0, 5.0, 6.0]
}
fn default_core_radius() -> f64 {
    1.5
}
fn default_hull_samples() -> usize {
    64
}
fn default_graph_height() -> f64 {
    0.1
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Serialize a configuration with every default spelled out.
pub fn emit_config(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("configurations always serialize")
}

fn check_h(name: &str, h: f64) -> Result<(), CliError> {
    if h.is_finite() && h.abs() < 1.0 {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{name} = {h} must lie in the open interval (-1, 1)")))
    }
}

impl RunConfig {
    /// Minimal configuration for `command` with every other field defaulted.
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            seed: 0,
            threads: default_threads(),
            output: default_output(),
            h: None,
            h_list: None,
            radii: default_radii(),
            core_radius: default_core_radius(),
            hull_samples: default_hull_samples(),
            graph_height: default_graph_height(),
            curve: CurveSpec::default(),
            solver: SolverSettings::default(),
            annulus: AnnulusSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.curve.samples < 16 {
            return bad(format!("curve.samples = {} must be at least 16", self.curve.samples));
        }
        if let Some(h) = self.h {
            check_h("h", h)?;
        }
        for &h in self.h_list.iter().flatten() {
            check_h("h_list entry", h)?;
        }
        let needs_h = matches!(self.command, Command::Solve | Command::Pair | Command::Exhaust | Command::Verify);
        if needs_h && self.h.is_none() {
            return bad(format!("command {:?} needs h", self.command).to_lowercase());
        }
        if self.command == Command::Sweep && self.h_list.as_ref().is_none_or(|l| l.is_empty()) {
            return bad("command sweep needs a non-empty h_list".into());
        }
        if self.radii.is_empty() || self.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("radii must be a non-empty increasing list".into());
        }
        if !(self.core_radius > 0.0 && self.core_radius < self.radii[0]) {
            return bad(format!("core_radius = {} must lie in (0, {})", self.core_radius, self.radii[0]));
        }
        if self.threads == 0 {
            return bad("threads must be at least 1".into());
        }
        if self.hull_samples < 8 {
            return bad("hull_samples must be at least 8".into());
        }
        if !(self.graph_height > 0.0) {
            return bad("graph_height must be positive".into());
        }
        if self.annulus.samples < 16 || !(self.annulus.axis_distance > 0.0) || !(self.annulus.half_height > 0.0) {
            return bad("annulus needs samples ≥ 16 and positive distances".into());
        }
        self.solver_config(self.h.unwrap_or(0.0), self.radii[0]).map(|_| ())
    }

    pub fn solver_config(&self, h: f64, radius: f64) -> Result<SolverConfig, CliError> {
        let mut s = SolverConfig::new(h, radius).map_err(|e| CliError::Validation(e.to_string()))?;
        s.max_iterations = self.solver.max_iterations;
        s.gradient_tolerance = self.solver.gradient_tolerance;
        s.init_edge_length = self.solver.init_edge_length;
        s.remesh_every = self.solver.remesh_every;
        s.target_edge_length = self.solver.target_edge_length;
        s.lbfgs_memory = self.solver.lbfgs_memory;
        s.seed = self.seed;
        s.validate().map_err(|e| CliError::Validation(format!("solver: {e}")))?;
        Ok(s)
    }

    pub fn exhaustion_config(&self, h: f64) -> Result<ExhaustionConfig, CliError> {
        let mut c = ExhaustionConfig::new(h).map_err(|e| CliError::Validation(e.to_string()))?;
        c.radii = self.radii.clone();
        c.core_radius = self.core_radius;
        c.hull_samples = self.hull_samples;
        c.solver = self.solver_config(h, self.radii[0])?;
        c.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(c)
    }
}
