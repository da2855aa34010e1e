use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::AccuracyOracle;
use crate::arch_space::{Architecture, SpaceSpec};
use crate::error::{Error, Result};
use crate::geometry::distance;

/// Synthetic accuracy oracle with known optima.
#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticLandscape {
    /// `peak - decay * distance(a, center) + noise(a)`, clamped to `[0, 100]`.
    Planted { center: Architecture, peak: f64, decay: f64, noise: f64, seed: u64 },
    /// A flat plateau around one center and an isolated sharp peak elsewhere.
    PlateauVsPeak {
        plateau_center: Architecture,
        plateau_acc: f64,
        plateau_radius: usize,
        sharp_center: Architecture,
        sharp_acc: f64,
        sharp_neighbor_acc: f64,
        background_acc: f64,
        /// Amplitude of seeded noise added to background architectures only.
        noise: f64,
        seed: u64,
    },
}

/// Uniform value in `[-1, 1)` derived from the seed and canonical string.
fn hash_unit(seed: u64, arch: &Architecture) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(arch.to_string().as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    let u = (u64::from_le_bytes(bytes) >> 11) as f64 / (1u64 << 53) as f64;
    2.0 * u - 1.0
}

impl SyntheticLandscape {
    pub fn planted(center: Architecture, peak: f64, decay: f64, noise: f64, seed: u64) -> Result<Self> {
        if !(0.0..=100.0).contains(&peak) || decay < 0.0 || noise < 0.0 {
            return Err(Error::InvalidConfig("planted landscape needs peak in [0,100], decay >= 0, noise >= 0".into()));
        }
        Ok(Self::Planted { center, peak, decay, noise, seed })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn plateau_vs_peak(
        plateau_center: Architecture,
        plateau_acc: f64,
        plateau_radius: usize,
        sharp_center: Architecture,
        sharp_acc: f64,
        sharp_neighbor_acc: f64,
        background_acc: f64,
        noise: f64,
        seed: u64,
    ) -> Result<Self> {
        let gap = distance(&plateau_center, &sharp_center)?;
        if gap <= plateau_radius + 1 {
            return Err(Error::InvalidConfig(format!(
                "sharp peak at distance {gap} overlaps plateau of radius {plateau_radius}"
            )));
        }
        if !(sharp_acc > plateau_acc && sharp_neighbor_acc < background_acc - noise) {
            return Err(Error::InvalidConfig(
                "need sharp_acc > plateau_acc and sharp_neighbor_acc below the background".into(),
            ));
        }
        for v in [plateau_acc, sharp_acc, sharp_neighbor_acc, background_acc - noise, background_acc + noise] {
            check_pct(v)?;
        }
        Ok(Self::PlateauVsPeak {
            plateau_center,
            plateau_acc,
            plateau_radius,
            sharp_center,
            sharp_acc,
            sharp_neighbor_acc,
            background_acc,
            noise,
            seed,
        })
    }

    fn center(&self) -> &Architecture {
        match self {
            Self::Planted { center, .. } => center,
            Self::PlateauVsPeak { plateau_center, .. } => plateau_center,
        }
    }

    fn evaluate(&self, a: &Architecture) -> Result<f64> {
        let acc = match self {
            Self::Planted { center, peak, decay, noise, seed } => {
                let d = distance(a, center)? as f64;
                let n = if *noise > 0.0 { noise * hash_unit(*seed, a) } else { 0.0 };
                peak - decay * d + n
            }
            Self::PlateauVsPeak {
                plateau_center,
                plateau_acc,
                plateau_radius,
                sharp_center,
                sharp_acc,
                sharp_neighbor_acc,
                background_acc,
                noise,
                seed,
            } => match distance(a, sharp_center)? {
                0 => *sharp_acc,
                1 => *sharp_neighbor_acc,
                _ if distance(a, plateau_center)? <= *plateau_radius => *plateau_acc,
                _ if *noise > 0.0 => background_acc + noise * hash_unit(*seed, a),
                _ => *background_acc,
            },
        };
        Ok(acc.clamp(0.0, 100.0))
    }
}

fn check_pct(v: f64) -> Result<()> {
    if (0.0..=100.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::AccuracyOutOfRange(v))
    }
}

impl AccuracyOracle for SyntheticLandscape {
    fn space(&self) -> SpaceSpec {
        self.center().space()
    }

    /// Synthetic landscapes answer every dataset tag identically.
    fn accuracy(&self, arch: &Architecture, _dataset: &str) -> Result<f64> {
        self.evaluate(arch)
    }

    fn entries(&self, _dataset: &str) -> Result<Vec<(Architecture, f64)>> {
        self.space()
            .enumerate()?
            .into_iter()
            .map(|a| {
                let acc = self.evaluate(&a)?;
                Ok((a, acc))
            })
            .collect()
    }
}

/// JSON description of a synthetic landscape; architectures are canonical strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LandscapeSpec {
    Planted {
        space: SpaceSpec,
        center: String,
        peak: f64,
        decay: f64,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
    PlateauVsPeak {
        space: SpaceSpec,
        plateau_center: String,
        plateau_acc: f64,
        plateau_radius: usize,
        sharp_center: String,
        sharp_acc: f64,
        sharp_neighbor_acc: f64,
        background_acc: f64,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl LandscapeSpec {
    pub fn build(&self) -> Result<SyntheticLandscape> {
        match self {
            Self::Planted { space, center, peak, decay, noise, seed } => {
                SyntheticLandscape::planted(Architecture::parse(center, space)?, *peak, *decay, *noise, *seed)
            }
            Self::PlateauVsPeak {
                space,
                plateau_center,
                plateau_acc,
                plateau_radius,
                sharp_center,
                sharp_acc,
                sharp_neighbor_acc,
                background_acc,
                noise,
                seed,
            } => SyntheticLandscape::plateau_vs_peak(
                Architecture::parse(plateau_center, space)?,
                *plateau_acc,
                *plateau_radius,
                Architecture::parse(sharp_center, space)?,
                *sharp_acc,
                *sharp_neighbor_acc,
                *background_acc,
                *noise,
                *seed,
            ),
        }
    }
}
