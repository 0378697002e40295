//! TOML scenario files.
//!
//! ```toml
//! seed = 7
//!
//! [partition]
//! radii = [0.5]
//!
//! [model]
//! truth = [1.2]
//! initial = [1.35]
//!
//! [data]
//! lambda0 = 4.0
//! l_max = 6
//! backend = "radial"
//!
//! [landweber]
//! step = "auto"
//! iterations = 200
//! ```
//!
//! Every section is optional; commands check what they need.

use crate::error::{Error, Result};
use crate::grid::Grid3;
use crate::helmholtz::GmresOptions;
use crate::inversion::{ForwardModel, RadialForward, StepSize, VoxelForward};
use crate::model::{DomainPartition, ModelBall, ModelVector};
use crate::timedomain::FrequencyGrid;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    pub partition: Option<PartitionSection>,
    pub model: Option<ModelSection>,
    pub ball: Option<BallSection>,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub landweber: LandweberSection,
    #[serde(default)]
    pub weights: WeightsSection,
    #[serde(default)]
    pub probe: ProbeSection,
    /// SHA-256 of the raw file, filled in by [`Scenario::load`].
    #[serde(skip)]
    pub hash: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSection {
    pub radii: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub truth: Vec<f64>,
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSection {
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Radial,
    Voxel,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub lambda0: f64,
    pub l_max: usize,
    pub l_shift: i64,
    pub t0: f64,
    pub backend: Backend,
    pub grid: usize,
    pub half_width: f64,
    /// Time samples per window for exported traces.
    pub trace_samples: usize,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            l_max: 6,
            l_shift: 8,
            t0: 0.0,
            backend: Backend::Radial,
            grid: 48,
            half_width: 1.5,
            trace_samples: 33,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let g = GmresOptions::default();
        Self {
            tol: g.tol,
            restart: g.restart,
            max_iterations: g.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum StepSpec {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandweberSection {
    pub step: StepSpec,
    pub iterations: usize,
    /// Stop once `||x - x†|| <= relative_floor ||x†||`.
    pub relative_floor: f64,
    /// Points sampled for the constants estimate.
    pub samples: usize,
}

impl Default for LandweberSection {
    fn default() -> Self {
        Self {
            step: StepSpec::Named("auto".into()),
            iterations: 200,
            relative_floor: 1e-3,
            samples: 6,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsSection {
    pub e: f64,
    pub delta: f64,
    pub h: Vec<f64>,
    pub dr: f64,
    /// Explicit potential; when absent `V = E - c^{-2}` from the true model.
    pub radii: Option<Vec<f64>>,
    pub values: Option<Vec<f64>>,
    pub tolerance: f64,
}

impl Default for WeightsSection {
    fn default() -> Self {
        Self {
            e: 1.0,
            delta: 0.05,
            h: vec![0.1, 0.05, 0.025],
            dr: 0.01,
            radii: None,
            values: None,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSection {
    pub lambdas: Vec<f64>,
    pub near_radius: f64,
    pub far: [f64; 2],
    pub scales: Vec<f64>,
    pub direction: Option<Vec<f64>>,
    pub adjoint_pairs: usize,
    pub l_shifts: Vec<i64>,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self {
            lambdas: vec![4.0, 5.657, 8.0, 11.314, 16.0],
            near_radius: 1.0,
            far: [1.1, 1.4],
            scales: vec![1e-2, 5e-3, 2.5e-3],
            direction: None,
            adjoint_pairs: 10,
            l_shifts: vec![1, 2, 4, 8],
        }
    }
}

fn default_epsilon() -> f64 {
    0.05
}

fn default_floor() -> f64 {
    0.2
}

/// Hex SHA-256 digest.
pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.hash = sha256_hex(text.as_bytes());
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        let d = &self.data;
        if !(d.lambda0 >= 1.0) {
            return Err(Error::Config(format!("data.lambda0 must be >= 1, got {}", d.lambda0)));
        }
        if d.l_shift < 0 {
            return Err(Error::Config("data.l_shift must be nonnegative".into()));
        }
        if !(self.solver.tol > 0.0) || self.solver.restart == 0 {
            return Err(Error::Config("solver.tol and solver.restart must be positive".into()));
        }
        if let StepSpec::Named(n) = &self.landweber.step {
            if n != "auto" {
                return Err(Error::Config(format!("landweber.step must be a number or \"auto\", got {n:?}")));
            }
        }
        if let StepSpec::Value(v) = self.landweber.step {
            if !(v > 0.0) {
                return Err(Error::Config(format!("landweber.step must be positive, got {v}")));
            }
        }
        let n = self.partition.as_ref().map(|p| p.radii.len());
        if let (Some(n), Some(m)) = (n, &self.model) {
            for v in std::iter::once(&m.truth).chain(m.initial.as_ref()) {
                if v.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: v.len() });
                }
            }
        }
        if let Some(p) = &self.partition {
            DomainPartition::radial(p.radii.clone(), p.epsilon)?;
        }
        if let Some(m) = &self.model {
            ModelVector::new(m.truth.clone())?;
            if let Some(x0) = &m.initial {
                ModelVector::new(x0.clone())?;
            }
        }
        if let Some(b) = &self.ball {
            ModelBall::new(ModelVector::new(b.center.clone())?, b.radius, b.floor)?;
        }
        Ok(())
    }

    pub fn solver_options(&self) -> GmresOptions {
        GmresOptions {
            restart: self.solver.restart,
            max_iterations: self.solver.max_iterations,
            tol: self.solver.tol,
        }
    }

    pub fn grid(&self) -> Result<Grid3> {
        Grid3::new(self.data.grid, self.data.half_width)
    }

    pub fn partition(&self) -> Result<DomainPartition> {
        let p = self
            .partition
            .as_ref()
            .ok_or_else(|| Error::Config("missing [partition] section".into()))?;
        DomainPartition::radial(p.radii.clone(), p.epsilon)
    }

    pub fn truth(&self) -> Result<ModelVector> {
        let m = self.model.as_ref().ok_or_else(|| Error::Config("missing [model] section".into()))?;
        ModelVector::new(m.truth.clone())
    }

    /// Initial model, defaulting to the truth.
    pub fn initial(&self) -> Result<ModelVector> {
        let m = self.model.as_ref().ok_or_else(|| Error::Config("missing [model] section".into()))?;
        ModelVector::new(m.initial.clone().unwrap_or_else(|| m.truth.clone()))
    }

    /// Ball from `[ball]`, or the smallest ball around truth and initial
    /// model when absent.
    pub fn ball(&self) -> Result<ModelBall> {
        if let Some(b) = &self.ball {
            return ModelBall::new(ModelVector::new(b.center.clone())?, b.radius, b.floor);
        }
        let (t, x0) = (self.truth()?, self.initial()?);
        let center: Vec<f64> = t.as_slice().iter().zip(x0.as_slice()).map(|(a, b)| 0.5 * (a + b)).collect();
        ModelBall::new(ModelVector::new(center)?, 0.5 * t.distance(&x0), default_floor())
    }

    pub fn step(&self) -> StepSize {
        match self.landweber.step {
            StepSpec::Value(v) => StepSize::Fixed(v),
            StepSpec::Named(_) => StepSize::Auto,
        }
    }

    pub fn frequency_grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::new(self.data.lambda0)
    }

    /// Forward model for the configured backend.
    pub fn forward_model(&self) -> Result<Box<dyn ForwardModel>> {
        let part = self.partition()?;
        let freq = self.frequency_grid()?;
        Ok(match self.data.backend {
            Backend::Radial => Box::new(RadialForward::new(&part, freq, self.data.l_max)?),
            Backend::Voxel => Box::new(VoxelForward::new(
                &part,
                self.grid()?,
                freq,
                self.data.l_max,
                self.solver_options(),
            )?),
        })
    }
}
