//! Declarative run configuration (JSON).
//!
//! Inputs use the units of the figure captions: gradients in G/cm, widths in
//! cm, times in s, angles in degrees. Everything is converted to SI on
//! resolution.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sgevolve::{Particle, SGStage, METRE_PER_CM};
use crate::spin::{bloch_state, Spinor};
use crate::{Axis, Representation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParticleSpec {
    Preset(ParticlePreset),
    Explicit { mass: f64, mu: f64, hbar: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParticlePreset {
    Neutron,
}

impl ParticleSpec {
    pub fn resolve(&self) -> Result<Particle> {
        match *self {
            ParticleSpec::Preset(ParticlePreset::Neutron) => Ok(Particle::neutron()),
            ParticleSpec::Explicit { mass, mu, hbar } => Particle::new(mass, mu, hbar),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub axis: Axis,
    pub gradient_gauss_per_cm: f64,
    pub transit_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_m: Option<f64>,
}

impl StageSpec {
    pub fn resolve(&self) -> Result<SGStage> {
        let mut s = SGStage::from_cgs(self.axis, self.gradient_gauss_per_cm, self.transit_time_s)?;
        s.length = self.length_m;
        Ok(s)
    }
}

/// A spin state given either by Bloch angles or by its two components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpinorSpec {
    Bloch {
        theta_deg: f64,
        #[serde(default)]
        phi_deg: f64,
    },
    /// `[re, im]` pairs in the σ_z basis; normalized on resolution.
    Components { up: [f64; 2], down: [f64; 2] },
}

impl SpinorSpec {
    pub fn bloch(theta_deg: f64) -> Self {
        SpinorSpec::Bloch { theta_deg, phi_deg: 0.0 }
    }

    pub fn resolve(&self) -> Result<Spinor> {
        match *self {
            SpinorSpec::Bloch { theta_deg, phi_deg } => {
                if !theta_deg.is_finite() || !phi_deg.is_finite() {
                    return Err(Error::InvalidParameter("Bloch angles must be finite".into()));
                }
                Ok(bloch_state(theta_deg.to_radians(), phi_deg.to_radians()))
            }
            SpinorSpec::Components { up, down } => {
                Spinor::new(Complex64::new(up[0], up[1]), Complex64::new(down[0], down[1]))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_points")]
    pub points: usize,
    /// Momentum window in units of p′. Chosen from the packets when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_p_prime: Option<[f64; 2]>,
}

fn default_points() -> usize {
    4096
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points: default_points(), span_p_prime: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscriminationSpec {
    /// Meter width for the strong σ measurement, cm.
    #[serde(default = "default_strong_delta")]
    pub strong_delta_cm: f64,
    #[serde(default = "default_position")]
    pub representation: Representation,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_max_particles")]
    pub max_particles: u64,
    #[serde(default = "default_true")]
    pub keep_both: bool,
}

fn default_strong_delta() -> f64 {
    1.0
}
fn default_position() -> Representation {
    Representation::Position
}
fn default_batch() -> usize {
    crate::discriminate::DEFAULT_BATCH
}
fn default_alpha() -> f64 {
    crate::discriminate::DEFAULT_ALPHA
}
fn default_max_particles() -> u64 {
    2000
}
fn default_true() -> bool {
    true
}

impl Default for DiscriminationSpec {
    fn default() -> Self {
        Self {
            strong_delta_cm: default_strong_delta(),
            representation: default_position(),
            batch_size: default_batch(),
            alpha: default_alpha(),
            max_particles: default_max_particles(),
            keep_both: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub particle: ParticleSpec,
    /// Initial meter width, cm.
    pub delta_cm: f64,
    /// Measuring stages in order. The first one defines the pointer axis.
    pub stages: Vec<StageSpec>,
    pub preselect: SpinorSpec,
    pub postselect: SpinorSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    /// Parameters found by scan rather than read off a caption.
    #[serde(default)]
    pub derived: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discrimination: Option<DiscriminationSpec>,
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(s);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            Error::Config {
                path: e.path().to_string(),
                message: format!("{inner} (line {}, column {})", inner.line(), inner.column()),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: String| Err(Error::Config { path: path.into(), message });
        if !(self.delta_cm > 0.0) || !self.delta_cm.is_finite() {
            return bad("delta_cm", format!("must be positive, got {}", self.delta_cm));
        }
        if self.stages.is_empty() {
            return bad("stages", "at least one stage is required".into());
        }
        for (i, s) in self.stages.iter().enumerate() {
            if let Err(e) = s.resolve() {
                return bad(&format!("stages[{i}]"), e.to_string());
            }
        }
        if self.grid.points < 3 {
            return bad("grid.points", format!("need at least 3 points, got {}", self.grid.points));
        }
        if let Some([a, b]) = self.grid.span_p_prime {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return bad("grid.span_p_prime", format!("[{a}, {b}] is not an interval"));
            }
        }
        for (name, s) in [("preselect", &self.preselect), ("postselect", &self.postselect)] {
            if let Err(e) = s.resolve() {
                return bad(name, e.to_string());
            }
        }
        if let Err(e) = self.particle.resolve() {
            return bad("particle", e.to_string());
        }
        if let Some(d) = &self.discrimination {
            if !(d.strong_delta_cm > 0.0) {
                return bad("discrimination.strong_delta_cm", "must be positive".into());
            }
            if d.batch_size == 0 {
                return bad("discrimination.batch_size", "must be positive".into());
            }
            if !(d.alpha > 0.0) {
                return bad("discrimination.alpha", "must be positive".into());
            }
        }
        Ok(())
    }

    pub fn particle(&self) -> Result<Particle> {
        self.particle.resolve()
    }

    pub fn delta_m(&self) -> f64 {
        self.delta_cm * METRE_PER_CM
    }

    pub fn stages(&self) -> Result<Vec<SGStage>> {
        self.stages.iter().map(StageSpec::resolve).collect()
    }

    pub fn chi_in(&self) -> Result<Spinor> {
        self.preselect.resolve()
    }

    pub fn chi_f(&self) -> Result<Spinor> {
        self.postselect.resolve()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVariable {
    /// First-stage gradient, G/cm.
    B,
    /// First-stage transit time, s.
    Tau,
    /// Meter width, cm.
    Delta,
    /// Pre-selection polar angle, degrees.
    Theta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub from: f64,
    pub to: f64,
    pub count: usize,
    #[serde(default)]
    pub log: bool,
}

impl SweepSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::InvalidParameter("sweep needs at least one point".into()));
        }
        if !self.from.is_finite() || !self.to.is_finite() {
            return Err(Error::InvalidParameter("sweep bounds must be finite".into()));
        }
        if self.log && !(self.from > 0.0 && self.to > 0.0) {
            return Err(Error::InvalidParameter("log sweep bounds must be positive".into()));
        }
        if self.count == 1 {
            return Ok(vec![self.from]);
        }
        let n = (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| {
                let t = i as f64 / n;
                if self.log {
                    (self.from.ln() + t * (self.to.ln() - self.from.ln())).exp()
                } else {
                    self.from + t * (self.to - self.from)
                }
            })
            .collect())
    }

    /// Copy of `base` with the swept variable set to `value`.
    pub fn apply(&self, base: &RunConfig, value: f64) -> RunConfig {
        let mut cfg = base.clone();
        match self.variable {
            SweepVariable::B => cfg.stages[0].gradient_gauss_per_cm = value,
            SweepVariable::Tau => cfg.stages[0].transit_time_s = value,
            SweepVariable::Delta => cfg.delta_cm = value,
            SweepVariable::Theta => {
                let phi_deg = match cfg.preselect {
                    SpinorSpec::Bloch { phi_deg, .. } => phi_deg,
                    SpinorSpec::Components { .. } => 0.0,
                };
                cfg.preselect = SpinorSpec::Bloch { theta_deg: value, phi_deg };
            }
        }
        cfg
    }
}
