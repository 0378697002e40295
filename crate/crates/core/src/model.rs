//! Domain partitions, coefficient vectors and the map between coefficient
//! vectors and voxelized wavespeeds.
//!
//! The physical domain is the unit ball. A partition splits it into a
//! boundary layer `D_0` (where the wavespeed is pinned to 1) and subdomains
//! `D_1 .. D_N` carrying one coefficient each.

use crate::error::{Error, Result};
use crate::grid::Grid3;
use serde::{Deserialize, Serialize};

pub const DEFAULT_EPSILON: f64 = 0.1;

/// Positive coefficient vector; entry `j` is the wavespeed on `D_{j+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelVector(Vec<f64>);

impl ModelVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidModel("empty coefficient vector".into()));
        }
        if let Some((j, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidModel(format!(
                "coefficient {} is {v}, must be positive",
                j + 1
            )));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn distance(&self, other: &ModelVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Closed Euclidean ball of admissible models intersected with `b_j >= floor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBall {
    pub center: ModelVector,
    pub radius: f64,
    pub floor: f64,
}

impl ModelBall {
    pub fn new(center: ModelVector, radius: f64, floor: f64) -> Result<Self> {
        if !(radius >= 0.0) || !(floor > 0.0) {
            return Err(Error::InvalidModel(format!(
                "ball needs radius >= 0 and floor > 0 (radius {radius}, floor {floor})"
            )));
        }
        Ok(Self {
            center,
            radius,
            floor,
        })
    }

    pub fn contains(&self, b: &ModelVector) -> bool {
        b.len() == self.center.len()
            && b.distance(&self.center) <= self.radius * (1.0 + 1e-12)
            && b.as_slice().iter().all(|v| *v >= self.floor)
    }

    /// Clamp to the ball, then to the positivity floor.
    pub fn project(&self, x: &[f64]) -> ModelVector {
        let c = self.center.as_slice();
        let d: f64 = x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = if d > self.radius && d > 0.0 {
            self.radius / d
        } else {
            1.0
        };
        let v = x
            .iter()
            .zip(c)
            .map(|(a, b)| (b + (a - b) * scale).max(self.floor))
            .collect();
        ModelVector(v)
    }
}

/// Voxel labels (`0..=N`) on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelGrid {
    pub grid: Grid3,
    pub labels: Vec<u16>,
    pub n_regions: usize,
}

impl LabelGrid {
    /// Voxel-counted volume of each `D_j`, `j = 1..=N`.
    pub fn region_volumes(&self) -> Vec<f64> {
        model_projection(&vec![1.0; self.labels.len()], self).expect("same grid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PartitionKind {
    /// Interface radii `0 < r_1 < ... < r_N < 1 - epsilon`; `D_1` is the
    /// inner ball and `D_j` the shell `r_{j-1} < |x| < r_j`.
    Radial { radii: Vec<f64> },
    /// Explicit label raster.
    Labeled(LabelGrid),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainPartition {
    pub kind: PartitionKind,
    pub epsilon: f64,
}

impl DomainPartition {
    pub fn radial(radii: Vec<f64>, epsilon: f64) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::InvalidPartition("no interface radii".into()));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidPartition(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        if radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPartition(
                "radii must be positive and strictly increasing".into(),
            ));
        }
        let last = *radii.last().unwrap();
        if last >= 1.0 - epsilon {
            return Err(Error::InvalidPartition(format!(
                "outer radius {last} must be below 1 - epsilon = {}",
                1.0 - epsilon
            )));
        }
        Ok(Self {
            kind: PartitionKind::Radial { radii },
            epsilon,
        })
    }

    /// Labeled partition; labels above 0 must stay at distance `epsilon`
    /// from the unit sphere.
    pub fn labeled(grid: Grid3, labels: Vec<u16>, epsilon: f64) -> Result<Self> {
        if labels.len() != grid.len() {
            return Err(Error::InvalidPartition(format!(
                "raster has {} labels for a {}^3 grid",
                labels.len(),
                grid.n
            )));
        }
        let n_regions = labels.iter().copied().max().unwrap_or(0) as usize;
        if n_regions == 0 {
            return Err(Error::InvalidPartition("raster has no labeled subdomain".into()));
        }
        let mut seen = vec![false; n_regions + 1];
        for (idx, &l) in labels.iter().enumerate() {
            seen[l as usize] = true;
            if l != 0 && grid.center_radius(idx) > 1.0 - epsilon {
                return Err(Error::InvalidPartition(format!(
                    "voxel {idx} at radius {:.4} has label {l} inside the epsilon layer",
                    grid.center_radius(idx)
                )));
            }
        }
        if let Some(j) = seen.iter().skip(1).position(|s| !s) {
            return Err(Error::InvalidPartition(format!(
                "label {} has no voxels",
                j + 1
            )));
        }
        Ok(Self {
            kind: PartitionKind::Labeled(LabelGrid {
                grid,
                labels,
                n_regions,
            }),
            epsilon,
        })
    }

    pub fn n_regions(&self) -> usize {
        match &self.kind {
            PartitionKind::Radial { radii } => radii.len(),
            PartitionKind::Labeled(lg) => lg.n_regions,
        }
    }

    pub fn radii(&self) -> Option<&[f64]> {
        match &self.kind {
            PartitionKind::Radial { radii } => Some(radii),
            PartitionKind::Labeled(_) => None,
        }
    }

    /// Label of a point; radial partitions only.
    pub fn radial_label(radii: &[f64], r: f64) -> u16 {
        radii
            .iter()
            .position(|&ri| r < ri)
            .map(|j| j as u16 + 1)
            .unwrap_or(0)
    }

    /// Voxel labels on `grid`. Radial partitions label each voxel by its
    /// center radius; labeled partitions must already live on `grid`.
    pub fn labels_on(&self, grid: &Grid3) -> Result<LabelGrid> {
        match &self.kind {
            PartitionKind::Radial { radii } => {
                let labels: Vec<u16> = (0..grid.len())
                    .map(|idx| Self::radial_label(radii, grid.center_radius(idx)))
                    .collect();
                let lg = LabelGrid {
                    grid: *grid,
                    labels,
                    n_regions: radii.len(),
                };
                if let Some(j) = lg.region_volumes().iter().position(|v| *v == 0.0) {
                    return Err(Error::InvalidPartition(format!(
                        "region {} contains no voxel centers on a {}^3 grid",
                        j + 1,
                        grid.n
                    )));
                }
                Ok(lg)
            }
            PartitionKind::Labeled(lg) => {
                lg.grid.check_same(grid)?;
                Ok(lg.clone())
            }
        }
    }
}

/// Piecewise-constant wavespeed sampled at voxel centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavespeed {
    pub grid: Grid3,
    pub values: Vec<f64>,
}

impl Wavespeed {
    pub fn constant_one(grid: Grid3) -> Self {
        Self {
            grid,
            values: vec![1.0; grid.len()],
        }
    }

    /// Validates positivity and `c = 1` outside the ball of radius `1 - epsilon`.
    pub fn new(grid: Grid3, values: Vec<f64>, epsilon: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        for (idx, v) in values.iter().enumerate() {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::InvalidModel(format!("wavespeed {v} at voxel {idx}")));
            }
            if grid.center_radius(idx) > 1.0 - epsilon && *v != 1.0 {
                return Err(Error::InvalidModel(format!(
                    "wavespeed {v} != 1 at voxel {idx} outside the inner domain"
                )));
            }
        }
        Ok(Self { grid, values })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `c = b_j` on voxels labeled `j >= 1`, `c = 1` elsewhere.
pub fn wavespeed_from_model(b: &ModelVector, labels: &LabelGrid) -> Result<Wavespeed> {
    if b.len() != labels.n_regions {
        return Err(Error::DimensionMismatch {
            expected: labels.n_regions,
            got: b.len(),
        });
    }
    let v = b.as_slice();
    let values = labels
        .labels
        .iter()
        .map(|&l| if l == 0 { 1.0 } else { v[l as usize - 1] })
        .collect();
    Ok(Wavespeed {
        grid: labels.grid,
        values,
    })
}

/// Adjoint of `h -> sum_j h_j 1_{D_j}`: component `j` is the sum of `g`
/// over voxels labeled `j` times the voxel volume.
pub fn model_projection(g: &[f64], labels: &LabelGrid) -> Result<Vec<f64>> {
    if g.len() != labels.labels.len() {
        return Err(Error::GridMismatch(format!(
            "field has {} entries, partition grid has {}",
            g.len(),
            labels.labels.len()
        )));
    }
    let mut out = vec![0.0; labels.n_regions];
    for (gv, &l) in g.iter().zip(&labels.labels) {
        if l != 0 {
            out[l as usize - 1] += gv;
        }
    }
    let dv = labels.grid.voxel_volume();
    out.iter_mut().for_each(|o| *o *= dv);
    Ok(out)
}

/// `max_j |b_j^2 - b'_j^2|`, the sup-norm of `c'^2 - c^2` on a shared partition.
pub fn perturbation_size(b: &ModelVector, b_prime: &ModelVector) -> Result<f64> {
    if b.len() != b_prime.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            got: b_prime.len(),
        });
    }
    Ok(b.as_slice()
        .iter()
        .zip(b_prime.as_slice())
        .map(|(x, y)| (x * x - y * y).abs())
        .fold(0.0, f64::max))
}
